"""On-disk formats and run directories."""

import numpy as np
import pytest

from resshift.core.errors import FormatError
from resshift.core.optim import AdamState
from resshift.core.predictor import init_params
from resshift.core.schedule import PRESETS
from resshift.core.storage import (
    TENSOR_MAGIC,
    Storage,
    dumps_json,
    load_checkpoint,
    load_signal,
    read_csv,
    read_image,
    read_json,
    read_tensor,
    save_checkpoint,
    save_signal,
    write_csv,
    write_image,
    write_json,
    write_loss_curve,
    write_tensor,
)


class TestTensors:
    def test_round_trip_keeps_shape_and_bits(self, tmp_path, rng):
        x = rng.standard_normal((2, 3, 5))
        path = write_tensor(tmp_path / "x.rsten", x)
        y = read_tensor(path)
        assert y.shape == (2, 3, 5)
        assert y.tobytes() == x.tobytes()

    def test_header_layout(self, tmp_path):
        data = write_tensor(tmp_path / "x.rsten", np.zeros((1, 2))).read_bytes()
        assert data.startswith(TENSOR_MAGIC)
        assert len(data) == len(TENSOR_MAGIC) + 4 + 2 * 4 + 2 * 8

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.rsten"
        path.write_bytes(b"NOPE" + bytes(16))
        with pytest.raises(FormatError):
            read_tensor(path)

    def test_truncated_payload(self, tmp_path):
        path = write_tensor(tmp_path / "x.rsten", np.ones((4, 4)))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(FormatError):
            read_tensor(path)


class TestImages:
    def test_grayscale_round_trip_is_quantised(self, tmp_path, rng):
        x = rng.uniform(size=(1, 6, 5))
        y = read_image(write_image(tmp_path / "x.pgm", x))
        assert y.shape == (1, 6, 5)
        assert np.max(np.abs(y - x)) <= 0.5 / 255 + 1e-12

    def test_color_png(self, tmp_path, rng):
        x = rng.uniform(size=(3, 4, 4))
        y = read_image(write_image(tmp_path / "x.png", x))
        assert y.shape == (3, 4, 4)

    def test_values_are_clamped(self, tmp_path):
        x = np.array([[[-1.0, 2.0]]])
        np.testing.assert_array_equal(read_image(write_image(tmp_path / "x.pgm", x)), [[[0, 1]]])

    def test_bad_channel_count(self, tmp_path):
        with pytest.raises(FormatError):
            write_image(tmp_path / "x.png", np.zeros((2, 4, 4)))

    def test_unreadable_image(self, tmp_path):
        path = tmp_path / "broken.png"
        path.write_bytes(b"not an image")
        with pytest.raises(FormatError):
            read_image(path)

    def test_signal_dispatch_by_suffix(self, tmp_path, rng):
        x = rng.uniform(size=(1, 4, 4))
        assert load_signal(save_signal(tmp_path / "x.rsten", x)).tobytes() == x.tobytes()
        assert load_signal(save_signal(tmp_path / "x.pgm", x)).shape == (1, 4, 4)


class TestCheckpoints:
    def test_round_trip(self, tmp_path, tiny_layout, rng):
        params = init_params(tiny_layout, seed=4)
        state = AdamState(
            m=rng.standard_normal(params.theta.size),
            v=rng.uniform(size=params.theta.size),
            step=17,
        )
        path = save_checkpoint(tmp_path / "model.ckpt", params, state, PRESETS["resshift-l"])
        loaded = load_checkpoint(path)
        assert loaded.params.layout == tiny_layout
        assert loaded.params.theta.tobytes() == params.theta.tobytes()
        assert loaded.opt_state.step == 17
        assert loaded.opt_state.m.tobytes() == state.m.tobytes()
        assert loaded.opt_state.v.tobytes() == state.v.tobytes()
        assert loaded.schedule == PRESETS["resshift-l"]

    def test_deterministic_bytes(self, tmp_path, tiny_layout):
        params = init_params(tiny_layout)
        state = AdamState.zeros(params.theta.size)
        a = save_checkpoint(tmp_path / "a.ckpt", params, state, PRESETS["resshift"])
        b = save_checkpoint(tmp_path / "b.ckpt", params, state, PRESETS["resshift"])
        assert a.read_bytes() == b.read_bytes()

    def test_rejects_other_files(self, tmp_path):
        path = write_tensor(tmp_path / "x.rsten", np.zeros(3))
        with pytest.raises(FormatError):
            load_checkpoint(path)

    def test_rejects_truncation_and_trailing_bytes(self, tmp_path, tiny_layout):
        params = init_params(tiny_layout)
        path = save_checkpoint(
            tmp_path / "m.ckpt", params, AdamState.zeros(params.theta.size), PRESETS["resshift"]
        )
        data = path.read_bytes()
        path.write_bytes(data[:-3])
        with pytest.raises(FormatError):
            load_checkpoint(path)
        path.write_bytes(data + b"\0")
        with pytest.raises(FormatError):
            load_checkpoint(path)


class TestTables:
    def test_loss_curve_round_trips_exactly(self, tmp_path):
        losses = [0.1, 1 / 3, 2.5e-7]
        path = write_loss_curve(tmp_path / "loss.csv", losses, [1e-3, 5e-4, 1e-4])
        rows = read_csv(path)
        assert [float(r["loss"]) for r in rows] == losses
        assert path.read_bytes().startswith(b"iter,loss,lr\n1,")
        assert b"\r" not in path.read_bytes()

    def test_csv_integers_stay_integers(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["t", "eta"], [(1, 0.5)])
        assert path.read_text(encoding="utf-8") == "t,eta\n1,0.5\n"

    def test_json_is_sorted_and_stable(self, tmp_path):
        data = {"b": 1, "a": [1.5, "x"]}
        assert dumps_json(data) == dumps_json({"a": [1.5, "x"], "b": 1})
        assert dumps_json(data).index('"a"') < dumps_json(data).index('"b"')
        assert read_json(write_json(tmp_path / "r.json", data)) == data


class TestStorage:
    def test_run_directory_layout(self, tmp_path):
        storage = Storage(tmp_path / "run")
        assert storage.data_dir.is_dir()
        assert storage.checkpoint_path().name == "model.ckpt"
        assert storage.checkpoint_path(250).name == "step_0000250.ckpt"
        assert storage.loss_curve_path().name == "loss.csv"
        assert storage.diagnostic_path().name == "abort_dump.json"
        assert storage.report_path("eval").name == "eval.json"
        path = storage.save_config("seed: 1\n")
        assert path == storage.get_config_path()
        assert path.read_text(encoding="utf-8") == "seed: 1\n"

    def test_default_directory_follows_home(self, tmp_path):
        storage = Storage()
        assert storage.data_dir == tmp_path / "home" / "runs" / "default"
