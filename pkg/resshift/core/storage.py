"""
Local Storage Engine - On-disk formats for tensors, checkpoints, curves and images

All writers are byte-deterministic: no timestamps, sorted JSON keys, LF line endings.
"""

import csv
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
from PIL import Image

from resshift.core.errors import FormatError
from resshift.core.optim import AdamState
from resshift.core.predictor import PredictorLayout, PredictorParams
from resshift.core.schedule import ScheduleParams

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TENSOR_MAGIC = b"RSTEN"
CHECKPOINT_MAGIC = b"RSHIFT01"
CHECKPOINT_VERSION = 1
IMAGE_SUFFIXES = {".pgm", ".ppm", ".png"}


# --- RSTEN tensors -------------------------------------------------------------------------


def write_tensor(path: PathLike, x: np.ndarray) -> Path:
    """magic, u32 ndim, u32 dims, little-endian float64 payload"""
    path = Path(path)
    x = np.ascontiguousarray(x, dtype="<f8")
    header = TENSOR_MAGIC + struct.pack(f"<I{x.ndim}I", x.ndim, *x.shape)
    path.write_bytes(header + x.tobytes())
    return path


def read_tensor(path: PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(TENSOR_MAGIC):
        raise FormatError(f"{path} is not an RSTEN tensor (bad magic)")
    offset = len(TENSOR_MAGIC)
    try:
        (ndim,) = struct.unpack_from("<I", data, offset)
        offset += 4
        shape = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
    except struct.error as e:
        raise FormatError(f"{path}: truncated RSTEN header") from e
    count = int(np.prod(shape, dtype=np.int64))
    if len(data) - offset != 8 * count:
        raise FormatError(
            f"{path}: payload has {len(data) - offset} bytes, shape {shape} needs {8 * count}"
        )
    return np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).astype(
        np.float64
    )


# --- Images ---------------------------------------------------------------------------------


def write_image(path: PathLike, x: np.ndarray) -> Path:
    """(C, H, W) in [0, 1] -> 8-bit PGM (C=1) or PPM (C=3); values are clamped"""
    path = Path(path)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] not in (1, 3):
        raise FormatError(f"Images must have shape (1|3, H, W), got {x.shape}")
    pixels = np.round(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8)
    if x.shape[0] == 1:
        img = Image.fromarray(pixels[0])
    else:
        img = Image.fromarray(np.ascontiguousarray(pixels.transpose(1, 2, 0)))
    img.save(path)
    return path


def read_image(path: PathLike) -> np.ndarray:
    """8-bit PGM/PPM/PNG -> (C, H, W) float64 in [0, 1]"""
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB")
            pixels = np.asarray(img, dtype=np.float64) / 255.0
    except (OSError, ValueError) as e:
        raise FormatError(f"Cannot read image {path}: {e}") from e
    if pixels.ndim == 2:
        return pixels[None]
    return pixels.transpose(2, 0, 1)


def load_signal(path: PathLike) -> np.ndarray:
    """Read an RSTEN tensor or an image, chosen by file suffix"""
    path = Path(path)
    if path.suffix.lower() in IMAGE_SUFFIXES:
        return read_image(path)
    return read_tensor(path)


def save_signal(path: PathLike, x: np.ndarray) -> Path:
    path = Path(path)
    if path.suffix.lower() in IMAGE_SUFFIXES:
        return write_image(path, x)
    return write_tensor(path, x)


# --- Checkpoints ----------------------------------------------------------------------------


@dataclass(eq=False)
class Checkpoint:
    """Predictor parameters, optimizer state and the schedule they were trained with"""

    params: PredictorParams
    opt_state: AdamState
    schedule: ScheduleParams


def _checkpoint_descriptor(params: PredictorParams, schedule: ScheduleParams) -> bytes:
    data = {
        "version": CHECKPOINT_VERSION,
        "layout": json.loads(params.layout.to_descriptor()),
        "schedule": schedule.model_dump(mode="json"),
    }
    return json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_checkpoint(
    path: PathLike, params: PredictorParams, opt_state: AdamState, schedule: ScheduleParams
) -> Path:
    """magic, u32 version, u32 len + JSON descriptor, u64 n + theta, u64 step + m + v"""
    path = Path(path)
    descriptor = _checkpoint_descriptor(params, schedule)
    theta = np.ascontiguousarray(params.theta, dtype="<f8")
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<II", CHECKPOINT_VERSION, len(descriptor)),
        descriptor,
        struct.pack("<Q", theta.size),
        theta.tobytes(),
        struct.pack("<Q", opt_state.step),
        np.ascontiguousarray(opt_state.m, dtype="<f8").tobytes(),
        np.ascontiguousarray(opt_state.v, dtype="<f8").tobytes(),
    ]
    path.write_bytes(b"".join(parts))
    return path


def load_checkpoint(path: PathLike) -> Checkpoint:
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise FormatError(f"{path} is not a ResShift checkpoint (bad magic)")
    offset = len(CHECKPOINT_MAGIC)
    try:
        version, desc_len = struct.unpack_from("<II", data, offset)
        offset += 8
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {version}")
        descriptor = json.loads(data[offset : offset + desc_len].decode("utf-8"))
        offset += desc_len
        layout = PredictorLayout.from_descriptor(json.dumps(descriptor["layout"]))
        schedule = ScheduleParams.model_validate(descriptor["schedule"])
        (n,) = struct.unpack_from("<Q", data, offset)
        offset += 8
        theta = np.frombuffer(data, dtype="<f8", count=n, offset=offset).astype(np.float64)
        offset += 8 * n
        (step,) = struct.unpack_from("<Q", data, offset)
        offset += 8
        m = np.frombuffer(data, dtype="<f8", count=n, offset=offset).astype(np.float64)
        offset += 8 * n
        v = np.frombuffer(data, dtype="<f8", count=n, offset=offset).astype(np.float64)
        offset += 8 * n
    except (struct.error, KeyError, ValueError, UnicodeDecodeError) as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"{path}: corrupt checkpoint ({e})") from e
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after checkpoint")
    return Checkpoint(
        params=PredictorParams(layout, theta),
        opt_state=AdamState(m=m, v=v, step=int(step)),
        schedule=schedule,
    )


# --- CSV and JSON ---------------------------------------------------------------------------


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Floats are written with repr precision so curves round-trip exactly"""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def write_loss_curve(path: PathLike, losses: Sequence[float], lrs: Sequence[float]) -> Path:
    return write_csv(
        path,
        ["iter", "loss", "lr"],
        ((i, float(loss), float(lr)) for i, (loss, lr) in enumerate(zip(losses, lrs), start=1)),
    )


def write_schedule_csv(path: PathLike, rows: List[Dict[str, float]]) -> Path:
    header = ["t", "eta", "alpha", "sqrt_eta", "rel_noise"]
    return write_csv(path, header, ([row[k] for k in header] for row in rows))


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def dumps_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: PathLike, data: Any) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_json(data))
    return path


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


# --- Run directories ------------------------------------------------------------------------


class Storage:
    """Run directory holding config, checkpoints, loss curve and diagnostics"""

    def __init__(self, data_dir: Optional[PathLike] = None):
        if data_dir is None:
            from resshift.core.config import Settings

            data_dir = Settings.from_env().home / "runs" / "default"
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

    def get_config_path(self) -> Path:
        return self.data_dir / "config.yaml"

    def save_config(self, text: str) -> Path:
        path = self.get_config_path()
        path.write_text(text, encoding="utf-8")
        return path

    def checkpoint_path(self, step: Optional[int] = None) -> Path:
        """Intermediate checkpoints carry their step; the final one is model.ckpt"""
        if step is None:
            return self.data_dir / "model.ckpt"
        return self.data_dir / f"step_{step:07d}.ckpt"

    def loss_curve_path(self) -> Path:
        return self.data_dir / "loss.csv"

    def diagnostic_path(self) -> Path:
        return self.data_dir / "abort_dump.json"

    def report_path(self, name: str = "report") -> Path:
        return self.data_dir / f"{name}.json"
