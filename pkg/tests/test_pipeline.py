"""Training loop, reverse-chain sampling and evaluation."""

from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from resshift.core.config import PredictorSpec, RunConfig, load_run_config
from resshift.core.errors import SamplingError, TrainingAborted
from resshift.core.kernel import posterior_params
from resshift.core.metrics import PSNR_CAP_DB, mse, psnr, psnr_from_mse, ssim_global
from resshift.core.pipeline import evaluate, sample, smooth_curve, train
from resshift.core.predictor import init_params, predict, reference_layout
from resshift.core.rng import chain_rng, chain_start_rng
from resshift.core.schedule import PRESETS, ScheduleParams, build_schedule
from resshift.core.storage import load_checkpoint, read_csv, read_json
from resshift.degrade import DatasetSpec, DegradationSpec, ToyImageDataset, make_pairs

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _tiny_config(**overrides) -> RunConfig:
    base = dict(
        schedule=ScheduleParams(T=4),
        degradation=DegradationSpec(scale=2),
        dataset=DatasetSpec(size=8, count=16),
        predictor=PredictorSpec(hidden_width=4, t_embed_dim=4, first_kernel=3),
        batch_size=4,
        iterations=5,
        workers=1,
    )
    base.update(overrides)
    return RunConfig(**base)


def _oracle_predictor(x0):
    return lambda x_t, y, t, s: x0


class TestTrain:
    def test_zero_learning_rate_keeps_parameters(self):
        config = _tiny_config(iterations=1, lr_max=0.0, lr_min=0.0)
        report = train(config)
        assert len(report.losses) == 1
        initial = init_params(config.predictor.layout(1), config.init_seed)
        np.testing.assert_array_equal(report.params.theta, initial.theta)

    def test_consumes_exactly_iterations_batches(self):
        report = train(_tiny_config(iterations=7))
        assert report.batches_consumed == 7
        assert len(report.losses) == len(report.lrs) == 7
        assert sum(report.t_counts) == 7 * 4
        assert report.opt_state.step == 7

    def test_identical_seeds_give_identical_curves(self):
        a = train(_tiny_config(seed=3))
        b = train(_tiny_config(seed=3))
        assert a.losses == b.losses
        assert a.params.theta.tobytes() == b.params.theta.tobytes()
        c = train(_tiny_config(seed=4))
        assert a.losses != c.losses

    def test_workers_do_not_change_the_run(self):
        a = train(_tiny_config(workers=1))
        b = train(_tiny_config(workers=3))
        assert a.losses == b.losses
        assert a.params.theta.tobytes() == b.params.theta.tobytes()

    def test_timesteps_are_uniform(self):
        config = _tiny_config(iterations=40, batch_size=8, lr_max=0.0, lr_min=0.0)
        report = train(config)
        assert len(report.t_counts) == 4
        assert all(count > 0 for count in report.t_counts)
        _, p_value = stats.chisquare(report.t_counts)
        assert p_value > 1e-3

    def test_learning_rate_follows_cosine(self):
        report = train(_tiny_config(iterations=6, lr_max=1e-2, lr_min=1e-3))
        assert report.lrs[0] == pytest.approx(1e-2)
        assert report.lrs[-1] == pytest.approx(1e-3)

    def test_run_directory_artifacts(self, tmp_path):
        run_dir = tmp_path / "run"
        config = _tiny_config(iterations=4, checkpoint_every=2)
        report = train(config, run_dir=run_dir)
        assert report.checkpoint_path == run_dir / "model.ckpt"
        assert [p.name for p in report.checkpoints] == ["step_0000002.ckpt", "model.ckpt"]
        assert (run_dir / "config.yaml").exists()
        rows = read_csv(run_dir / "loss.csv")
        assert [int(r["iter"]) for r in rows] == [1, 2, 3, 4]
        assert float(rows[-1]["loss"]) == report.losses[-1]
        checkpoint = load_checkpoint(report.checkpoint_path)
        np.testing.assert_array_equal(checkpoint.params.theta, report.params.theta)
        assert checkpoint.schedule == config.schedule

    def test_checkpoint_bytes_are_reproducible(self, tmp_path):
        train(_tiny_config(seed=9), run_dir=tmp_path / "a")
        train(_tiny_config(seed=9), run_dir=tmp_path / "b")
        a = (tmp_path / "a" / "model.ckpt").read_bytes()
        b = (tmp_path / "b" / "model.ckpt").read_bytes()
        assert a == b

    def test_explicit_dataset(self):
        data = [np.full((1, 8, 8), 0.5)] * 3
        report = train(_tiny_config(iterations=2), dataset=data)
        assert report.batches_consumed == 2

    def test_empty_dataset(self):
        with pytest.raises(ValueError):
            train(_tiny_config(), dataset=[])

    def test_non_finite_loss_aborts_with_dump(self, tmp_path):
        data = [np.full((1, 8, 8), 0.5)]
        config = _tiny_config(
            iterations=3, degradation=DegradationSpec.identity(), lr_max=1e300, lr_min=1e300
        )
        with pytest.raises(TrainingAborted) as info:
            train(config, dataset=data, run_dir=tmp_path / "run")
        dump_path = info.value.dump_path
        assert dump_path == tmp_path / "run" / "abort_dump.json"
        dump = read_json(dump_path)
        assert dump["iteration"] >= 2
        assert len(dump["timesteps"]) == config.batch_size


class TestSample:
    @pytest.mark.parametrize("T", [1, 4, 15])
    def test_perfect_predictor_recovers_x0(self, T, rng):
        s = build_schedule(ScheduleParams(T=T))
        x0 = rng.uniform(size=(1, 8, 8))
        for y in (rng.uniform(size=(1, 8, 8)), np.zeros((1, 8, 8))):
            out = sample(_oracle_predictor(x0), y, s, deterministic=True)
            assert np.max(np.abs(out - x0)) < 1e-10

    def test_single_step_is_one_prediction(self, tiny_layout, rng):
        s = build_schedule(ScheduleParams(T=1))
        params = init_params(tiny_layout, seed=1)
        params.theta[-7:] = rng.standard_normal(7) * 0.1
        y = rng.uniform(size=(1, 8, 8))
        out, trace = sample(params, y, s, seed=0, trace=True)
        np.testing.assert_array_equal(out, predict(params, trace.states[1], y, 1, s))
        np.testing.assert_array_equal(out, trace.states[0])

    def test_trace_follows_the_posterior_mean(self, tiny_layout, rng):
        s = build_schedule(PRESETS["resshift-l"])
        params = init_params(tiny_layout, seed=2)
        params.theta[-7:] = rng.standard_normal(7) * 0.1
        y = rng.uniform(size=(1, 8, 8))
        _, trace = sample(params, y, s, trace=True, deterministic=True)
        assert sorted(trace.states) == [0, 1, 2, 3, 4]
        assert sorted(trace.predictions) == [1, 2, 3, 4]
        np.testing.assert_array_equal(trace.states[4], y)
        for t in range(s.T, 0, -1):
            expected = posterior_params(trace.states[t], trace.predictions[t], t, s).mean
            np.testing.assert_allclose(trace.states[t - 1], expected, rtol=0, atol=1e-14)

    def test_seeded_sampling_is_reproducible(self, tiny_layout, rng):
        s = build_schedule(PRESETS["resshift-l"])
        params = init_params(tiny_layout)
        y = rng.uniform(size=(1, 8, 8))
        a = sample(params, y, s, seed=11)
        b = sample(params, y, s, seed=11)
        assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize("chain_id", [0, 5])
    def test_step_noise_is_keyed_by_chain_and_step(self, chain_id, rng):
        s = build_schedule(PRESETS["resshift-l"])
        y = rng.uniform(size=(1, 4, 4))
        _, trace = sample(
            _oracle_predictor(np.zeros_like(y)), y, s, seed=7, chain_id=chain_id, trace=True
        )
        xi = chain_start_rng(7, chain_id).standard_normal(y.shape)
        np.testing.assert_allclose(
            trace.states[s.T], y + s.kappa * np.sqrt(s.eta_at(s.T)) * xi, rtol=0, atol=1e-14
        )
        for t in range(s.T, 1, -1):
            q = posterior_params(trace.states[t], trace.predictions[t], t, s)
            eps = (trace.states[t - 1] - q.mean) / q.std
            expected = chain_rng(7, chain_id, t).standard_normal(y.shape)
            np.testing.assert_allclose(eps, expected, rtol=0, atol=1e-9)

    def test_chains_do_not_depend_on_the_step_count(self, rng):
        y = rng.uniform(size=(1, 4, 4))
        predictor = _oracle_predictor(np.zeros_like(y))
        short = build_schedule(ScheduleParams(T=4))
        long = build_schedule(ScheduleParams(T=6))
        _, a = sample(predictor, y, short, seed=3, trace=True)
        _, b = sample(predictor, y, long, seed=3, trace=True)
        for s, trace in ((short, a), (long, b)):
            q = posterior_params(trace.states[3], trace.predictions[3], 3, s)
            eps = (trace.states[2] - q.mean) / q.std
            np.testing.assert_allclose(
                eps, chain_rng(3, 0, 3).standard_normal(y.shape), rtol=0, atol=1e-9
            )

    def test_output_is_not_clamped(self, rng):
        s = build_schedule(PRESETS["resshift-l"])
        x0 = np.full((1, 4, 4), 1.5)
        out = sample(_oracle_predictor(x0), np.zeros((1, 4, 4)), s, deterministic=True)
        assert out.max() > 1.0

    def test_requires_seed_unless_deterministic(self, rng):
        s = build_schedule(PRESETS["resshift-l"])
        with pytest.raises(ValueError):
            sample(_oracle_predictor(np.zeros((1, 2, 2))), np.zeros((1, 2, 2)), s)

    def test_non_finite_state_reports_the_step(self):
        s = build_schedule(PRESETS["resshift-l"])

        def broken(x_t, y, t, s):
            return np.full_like(x_t, np.nan) if t == 3 else x_t

        with pytest.raises(SamplingError) as info:
            sample(broken, np.zeros((1, 2, 2)), s, deterministic=True)
        assert info.value.step == 3


class TestEvaluate:
    def test_perfect_restoration_hits_the_cap(self, short_schedule):
        data = ToyImageDataset(count=3, size=8)
        pairs = make_pairs(data, DegradationSpec(scale=2), seed=0)
        lookup = {pair[0].tobytes(): pair[1] for pair in pairs}

        def oracle(x_t, y, t, s):
            return lookup[y.tobytes()]

        report = evaluate(oracle, pairs, short_schedule)
        assert [m.psnr for m in report.images] == [PSNR_CAP_DB] * 3
        assert report.mean_input_psnr < PSNR_CAP_DB
        assert report.psnr_gain > 0
        record = report.to_dict()
        assert record["count"] == 3
        assert set(record["aggregates"]) >= {"mean_psnr", "mean_mse", "psnr_gain"}

    def test_outputs_are_clamped_before_scoring(self, short_schedule):
        x0 = np.ones((1, 4, 4))
        y = np.full((1, 4, 4), 0.5)
        report = evaluate(_oracle_predictor(np.full((1, 4, 4), 3.0)), [(y, x0)], short_schedule)
        assert report.images[0].mse == 0.0

    def test_accepts_checkpoint_params(self, tiny_layout, short_schedule):
        pairs = make_pairs(ToyImageDataset(count=2, size=8), DegradationSpec(scale=2), seed=1)
        report = evaluate(init_params(tiny_layout), pairs, short_schedule, seed=5, workers=2)
        again = evaluate(init_params(tiny_layout), pairs, short_schedule, seed=5, workers=1)
        assert report.to_dict() == again.to_dict()

    def test_empty_set(self, short_schedule):
        with pytest.raises(ValueError):
            evaluate(_oracle_predictor(None), [], short_schedule)

    def test_bad_array_shape(self, short_schedule):
        with pytest.raises(ValueError):
            evaluate(_oracle_predictor(None), np.zeros((2, 3, 1, 4, 4)), short_schedule)


class TestMetrics:
    def test_identical_images(self, rng):
        x = rng.uniform(size=(1, 8, 8))
        assert psnr(x, x) == PSNR_CAP_DB
        assert ssim_global(x, x) == pytest.approx(1.0)

    def test_global_ssim_ignores_pixel_layout(self, rng):
        a, b = rng.uniform(size=(1, 8, 8)), rng.uniform(size=(1, 8, 8))
        order = rng.permutation(64)
        shuffled_a = a.reshape(-1)[order].reshape(a.shape)
        shuffled_b = b.reshape(-1)[order].reshape(b.shape)
        assert ssim_global(shuffled_a, shuffled_b) == pytest.approx(ssim_global(a, b))
        assert ssim_global(a, b) < 1.0

    def test_constant_offset(self, rng):
        x = rng.uniform(size=(1, 8, 8))
        assert mse(x + 0.1, x) == pytest.approx(0.01)
        assert psnr(x + 0.1, x) == pytest.approx(20.0)

    def test_psnr_decreases_with_mse(self):
        values = [psnr_from_mse(m) for m in (1e-4, 1e-3, 1e-2, 1e-1)]
        assert values == sorted(values, reverse=True)

    def test_negative_mse(self):
        with pytest.raises(ValueError):
            psnr_from_mse(-1.0)


def test_smooth_curve():
    np.testing.assert_allclose(smooth_curve([1, 2, 3, 4], 2), [1.0, 1.5, 2.5, 3.5])
    with pytest.raises(ValueError):
        smooth_curve([1.0], 0)


@pytest.mark.slow
def test_desk_scale_training_improves_held_out_psnr():
    """Smoke run from configs/desk_smoke.yaml over five seeds; three must clearly improve"""
    base = load_run_config(CONFIGS / "desk_smoke.yaml")
    s = build_schedule(base.schedule)
    held_out = ToyImageDataset(
        base.dataset.kind, base.dataset.size, base.dataset.channels, count=32, seed=1000
    )
    pairs = make_pairs(held_out, base.degradation, seed=1000)

    improved = 0
    for seed in range(5):
        config = base.with_seed(seed)
        report = train(config)
        curve = smooth_curve(report.losses, 200)
        gain = evaluate(report.params, pairs, s, seed=seed).psnr_gain
        if curve[-1] < curve[199] and gain >= 2.0:
            improved += 1
    assert improved >= 3
