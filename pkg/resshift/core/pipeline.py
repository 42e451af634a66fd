"""
Pipeline - Training loop, reverse-chain sampling and paired-set evaluation

Every random draw is keyed by (seed, stream, iteration / image, element), so a run is fully
determined by its config, seed and dataset regardless of how many workers evaluate a batch.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from resshift.core.config import RunConfig, dump_run_config, resolve_workers
from resshift.core.errors import NonFiniteError, SamplingError, TrainingAborted
from resshift.core.kernel import reverse_step, sample_marginal
from resshift.core.metrics import mse, psnr_from_mse, ssim_global
from resshift.core.optim import AdamState, cosine_lr, sgd_adam_step
from resshift.core.predictor import (
    PredictorParams,
    TrainingExample,
    init_params,
    loss_and_gradient,
    predict,
)
from resshift.core.rng import (
    STREAM_DEGRADE,
    STREAM_FORWARD,
    STREAM_TRAIN,
    chain_rng,
    chain_start_rng,
    make_rng,
)
from resshift.core.schedule import Schedule, build_schedule
from resshift.core.storage import Storage, save_checkpoint, write_json, write_loss_curve
from resshift.degrade.datasets import ToyImageDataset
from resshift.degrade.registry import apply_degradation

logger = logging.getLogger(__name__)

Predictor = Callable[[np.ndarray, np.ndarray, int, Schedule], np.ndarray]


@dataclass(eq=False)
class TrainReport:
    """Loss curve and artifacts of one training run"""

    losses: List[float]
    lrs: List[float]
    t_counts: List[int]
    batches_consumed: int
    wall_clock: float
    params: PredictorParams
    opt_state: AdamState
    checkpoint_path: Optional[Path] = None
    checkpoints: List[Path] = field(default_factory=list)


@dataclass(eq=False)
class SampleTrace:
    """states[t] = x_t for t = T..0; predictions[t] = x0_hat used at step t"""

    states: Dict[int, np.ndarray] = field(default_factory=dict)
    predictions: Dict[int, np.ndarray] = field(default_factory=dict)


@dataclass
class ImageMetrics:
    index: int
    mse: float
    psnr: float
    ssim: float
    input_mse: float
    input_psnr: float
    input_ssim: float


@dataclass
class EvalReport:
    """Per-image metrics of restored and degraded inputs plus their means"""

    images: List[ImageMetrics]

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([m.psnr for m in self.images]))

    @property
    def mean_input_psnr(self) -> float:
        return float(np.mean([m.input_psnr for m in self.images]))

    @property
    def psnr_gain(self) -> float:
        return self.mean_psnr - self.mean_input_psnr

    def aggregates(self) -> Dict[str, float]:
        keys = ["mse", "psnr", "ssim", "input_mse", "input_psnr", "input_ssim"]
        out = {f"mean_{k}": float(np.mean([getattr(m, k) for m in self.images])) for k in keys}
        out["psnr_gain"] = self.psnr_gain
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "images": [vars(m) for m in self.images],
            "aggregates": self.aggregates(),
            "count": len(self.images),
        }


def smooth_curve(values: Sequence[float], window: int) -> np.ndarray:
    """Trailing moving average; the first window - 1 entries average what is available"""
    values = np.asarray(values, dtype=np.float64)
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    csum = np.cumsum(np.insert(values, 0, 0.0))
    idx = np.arange(1, values.size + 1)
    start = np.maximum(idx - window, 0)
    return (csum[idx] - csum[start]) / (idx - start)


def _make_batch(
    config: RunConfig, dataset: Sequence[np.ndarray], s: Schedule, iteration: int
) -> List[TrainingExample]:
    rng = make_rng(config.seed, STREAM_TRAIN, iteration)
    indices = rng.integers(0, len(dataset), size=config.batch_size)
    steps = rng.integers(1, s.T + 1, size=config.batch_size)
    batch = []
    for b, (index, t) in enumerate(zip(indices, steps)):
        x0 = np.asarray(dataset[int(index)], dtype=np.float64)
        y0 = apply_degradation(
            x0, config.degradation, make_rng(config.seed, STREAM_DEGRADE, iteration, b)
        ).y
        x_t = sample_marginal(
            x0, y0, int(t), s, rng=make_rng(config.seed, STREAM_FORWARD, iteration, b)
        )
        batch.append(TrainingExample(x_t=x_t, y0=y0, t=int(t), x0=x0))
    return batch


def _abort(
    storage: Optional[Storage],
    iteration: int,
    batch: List[TrainingExample],
    params: PredictorParams,
    error: NonFiniteError,
) -> TrainingAborted:
    dump = {
        "iteration": iteration,
        "batch_index": getattr(error, "batch_index", None),
        "loss": repr(getattr(error, "value", None)),
        "timesteps": [ex.t for ex in batch],
        "param_norm": float(np.linalg.norm(params.theta)),
        "error": str(error),
    }
    dump_path = None
    if storage is not None:
        dump_path = write_json(storage.diagnostic_path(), dump)
    logger.error(f"Training aborted at iteration {iteration}: {error} (dump: {dump})")
    return TrainingAborted(f"Training aborted at iteration {iteration}: {error}", dump_path)


def train(
    config: RunConfig,
    dataset: Optional[Sequence[np.ndarray]] = None,
    run_dir: Optional[Union[str, Path]] = None,
) -> TrainReport:
    """Fit the predictor on (x_t, y_0, t) -> x_0 with Adam and a cosine learning rate"""
    if dataset is None:
        dataset = ToyImageDataset.from_spec(config.dataset)
    if len(dataset) == 0:
        raise ValueError("Training dataset is empty")

    s = build_schedule(config.schedule)
    channels = int(np.asarray(dataset[0]).shape[0])
    params = init_params(config.predictor.layout(channels), config.init_seed)
    opt_state = AdamState.zeros(params.theta.size)
    workers = resolve_workers(config.workers)
    storage = Storage(run_dir) if run_dir is not None else None
    if storage is not None:
        storage.save_config(dump_run_config(config))

    logger.info(
        f"Training {params.layout.param_count} parameters for {config.iterations} iterations "
        f"(T={s.T}, batch={config.batch_size}, workers={workers})"
    )

    losses: List[float] = []
    lrs: List[float] = []
    t_counts = [0] * s.T
    checkpoints: List[Path] = []
    started = time.perf_counter()

    for it in range(config.iterations):
        batch = _make_batch(config, dataset, s, it)
        for ex in batch:
            t_counts[ex.t - 1] += 1
        lr = cosine_lr(it, config.iterations, config.lr_max, config.lr_min)
        try:
            loss, grad = loss_and_gradient(params, batch, config.objective, s, workers=workers)
            params, opt_state = sgd_adam_step(params, grad, opt_state, lr)
        except NonFiniteError as e:
            raise _abort(storage, it + 1, batch, params, e) from e
        losses.append(loss)
        lrs.append(lr)

        step = it + 1
        if step % config.log_every == 0 or step == config.iterations:
            logger.info(f"iter {step}/{config.iterations} loss {loss:.6f} lr {lr:.3e}")
        if storage is not None and config.checkpoint_every and step % config.checkpoint_every == 0:
            if step != config.iterations:
                path = save_checkpoint(
                    storage.checkpoint_path(step), params, opt_state, config.schedule
                )
                checkpoints.append(path)

    final_path = None
    if storage is not None:
        final_path = save_checkpoint(storage.checkpoint_path(), params, opt_state, config.schedule)
        checkpoints.append(final_path)
        write_loss_curve(storage.loss_curve_path(), losses, lrs)

    return TrainReport(
        losses=losses,
        lrs=lrs,
        t_counts=t_counts,
        batches_consumed=len(losses),
        wall_clock=time.perf_counter() - started,
        params=params,
        opt_state=opt_state,
        checkpoint_path=final_path,
        checkpoints=checkpoints,
    )


def _as_predictor(predictor: Union[PredictorParams, Predictor]) -> Predictor:
    if isinstance(predictor, PredictorParams):
        return lambda x_t, y, t, s: predict(predictor, x_t, y, t, s)
    if not callable(predictor):
        raise TypeError(f"Expected PredictorParams or a callable, got {type(predictor)!r}")
    return predictor


def sample(
    predictor: Union[PredictorParams, Predictor],
    y: np.ndarray,
    s: Schedule,
    seed: Optional[int] = None,
    chain_id: int = 0,
    trace: bool = False,
    deterministic: bool = False,
) -> Union[np.ndarray, Tuple[np.ndarray, SampleTrace]]:
    """Run the reverse chain from x_T = y + kappa sqrt(eta_T) xi down to x_0

    The noise of step t comes from chain_rng(seed, chain_id, t) and xi from
    chain_start_rng(seed, chain_id), so a chain does not depend on T or on other chains.
    The result is not clamped; clamp only when exporting or scoring.
    """
    if seed is None and not deterministic:
        raise ValueError("A seed is required unless deterministic=True")
    f = _as_predictor(predictor)
    y = np.asarray(y, dtype=np.float64)

    def noise(gen: Callable[[], np.random.Generator]) -> np.ndarray:
        return np.zeros(y.shape) if deterministic else gen().standard_normal(y.shape)

    x = y + s.kappa * np.sqrt(s.eta_at(s.T)) * noise(lambda: chain_start_rng(seed, chain_id))
    record = SampleTrace() if trace else None
    if record is not None:
        record.states[s.T] = x.copy()

    for t in range(s.T, 0, -1):
        x0_hat = np.asarray(f(x, y, t, s), dtype=np.float64)
        eps = np.zeros(y.shape) if t == 1 else noise(lambda: chain_rng(seed, chain_id, t))
        x = reverse_step(x, x0_hat, t, s, noise=eps)
        if not np.all(np.isfinite(x)):
            raise SamplingError(t)
        if record is not None:
            record.predictions[t] = x0_hat
            record.states[t - 1] = x.copy()

    if record is not None:
        return x, record
    return x


def _pairs(test_set: Union[np.ndarray, Sequence[Tuple[np.ndarray, np.ndarray]]]) -> List[Tuple]:
    if isinstance(test_set, np.ndarray):
        if test_set.ndim != 5 or test_set.shape[1] != 2:
            raise ValueError(
                f"Paired test set must have shape (N, 2, C, H, W), got {test_set.shape}"
            )
        return [(pair[0], pair[1]) for pair in test_set]
    return [(np.asarray(y), np.asarray(x0)) for y, x0 in test_set]


def evaluate(
    predictor: Union[PredictorParams, Predictor],
    test_set: Union[np.ndarray, Sequence[Tuple[np.ndarray, np.ndarray]]],
    s: Schedule,
    seed: int = 0,
    workers: int = 1,
) -> EvalReport:
    """Restore every y, clamp to [0, 1] and score against x0 (and score y itself)"""
    pairs = _pairs(test_set)
    if not pairs:
        raise ValueError("Test set is empty")

    def score(indexed: Tuple[int, Tuple[np.ndarray, np.ndarray]]) -> ImageMetrics:
        index, (y, x0) = indexed
        restored = sample(predictor, y, s, seed=seed, chain_id=index)
        restored = np.clip(restored, 0.0, 1.0)
        err = mse(restored, x0)
        input_err = mse(y, x0)
        return ImageMetrics(
            index=index,
            mse=err,
            psnr=psnr_from_mse(err),
            ssim=ssim_global(restored, x0),
            input_mse=input_err,
            input_psnr=psnr_from_mse(input_err),
            input_ssim=ssim_global(y, x0),
        )

    items = list(enumerate(pairs))
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            images = list(pool.map(score, items))
    else:
        images = [score(item) for item in items]
    report = EvalReport(images=images)
    logger.info(
        f"Evaluated {len(images)} images: PSNR {report.mean_psnr:.2f} dB "
        f"(input {report.mean_input_psnr:.2f} dB)"
    )
    return report
