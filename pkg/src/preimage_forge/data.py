"""Synthetic three-class shape dataset and dataset dump/restore.

Classes on a 32x32 single-channel canvas: 0 = filled disk, 1 = plus sign,
2 = hollow square. Position, size, and intensity jitter plus additive
uniform noise come from a single seeded generator, so a seed pins every
sample byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError
from .grid import Image, decode_ppm, write_ppm

CANVAS_SIDE = 32
CLASS_NAMES = ("disk", "plus", "hollow_square")

_POSITION_JITTER = 4   # px, per axis
_SIZE_JITTER = 3       # px on the base half-size
_BASE_HALF_SIZE = 8
_INTENSITY_RANGE = (0.6, 1.0)
_NOISE_AMPLITUDE = 0.05
_PLUS_HALF_THICKNESS = 1
_SQUARE_RING = 2


@dataclass(frozen=True, eq=False)
class Dataset:
    """Images with integer labels in [0, 3). Balanced and label-cycled."""

    images: tuple
    labels: np.ndarray
    seed: int

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        labels.setflags(write=False)
        if len(self.images) != labels.size:
            raise ParameterError(f"{len(self.images)} images but {labels.size} labels")
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.images)

    def stacked(self) -> np.ndarray:
        return np.stack([img.data for img in self.images], axis=0)


def _draw_shape(cls: int, cx: int, cy: int, half: int, intensity: float) -> np.ndarray:
    yy, xx = np.mgrid[0:CANVAS_SIDE, 0:CANVAS_SIDE]
    dy, dx = yy - cy, xx - cx
    if cls == 0:
        mask = dx * dx + dy * dy <= half * half
    elif cls == 1:
        t = _PLUS_HALF_THICKNESS
        mask = (np.abs(dx) <= t) & (np.abs(dy) <= half) | (np.abs(dy) <= t) & (np.abs(dx) <= half)
    else:
        cheb = np.maximum(np.abs(dx), np.abs(dy))
        mask = (cheb <= half) & (cheb > half - _SQUARE_RING)
    canvas = np.zeros((CANVAS_SIDE, CANVAS_SIDE))
    canvas[mask] = intensity
    return canvas


def synth_dataset(seed: int, n: int) -> Dataset:
    """Generate n samples (n must be a multiple of 3; labels cycle 0,1,2)."""
    if n < 3 or n % 3 != 0:
        raise ParameterError(f"n must be a positive multiple of 3, got {n}")
    rng = np.random.default_rng(seed)
    center = CANVAS_SIDE // 2
    images = []
    labels = np.zeros(n, dtype=np.int64)
    for i in range(n):
        cls = i % 3
        cx = center + int(rng.integers(-_POSITION_JITTER, _POSITION_JITTER + 1))
        cy = center + int(rng.integers(-_POSITION_JITTER, _POSITION_JITTER + 1))
        half = _BASE_HALF_SIZE + int(rng.integers(-_SIZE_JITTER, _SIZE_JITTER + 1))
        intensity = float(rng.uniform(*_INTENSITY_RANGE))
        noise = rng.uniform(0.0, _NOISE_AMPLITUDE, (CANVAS_SIDE, CANVAS_SIDE))
        canvas = np.clip(_draw_shape(cls, cx, cy, half, intensity) + noise, 0.0, 1.0)
        images.append(Image(canvas[:, :, None]))
        labels[i] = cls
    return Dataset(tuple(images), labels, int(seed))


def split_dataset(data: Dataset, holdout_fraction: float = 1.0 / 6.0) -> tuple[Dataset, Dataset]:
    """Deterministic stratified split: per class, the last floor(n_c * f)
    examples (in dataset order) become the validation set."""
    if not (0.0 <= holdout_fraction < 1.0):
        raise ParameterError(f"holdout_fraction must lie in [0, 1), got {holdout_fraction}")
    labels = data.labels
    val_idx = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        k = int(len(members) * holdout_fraction)
        if k:
            val_idx.extend(members[-k:].tolist())
    val_mask = np.zeros(len(data), dtype=bool)
    val_mask[val_idx] = True
    train = Dataset(
        tuple(img for img, v in zip(data.images, val_mask) if not v), labels[~val_mask], data.seed
    )
    val = Dataset(
        tuple(img for img, v in zip(data.images, val_mask) if v), labels[val_mask], data.seed
    )
    return train, val


def dump_dataset(data: Dataset, directory) -> None:
    """Write one PGM per image plus labels.json (index, labels, seed).

    PGM quantizes to 8 bits, so restore reproduces samples only up to the
    256-level grid.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i, img in enumerate(data.images):
        name = f"{i:06d}.pgm"
        write_ppm(img, directory / name)
        names.append(name)
    index = {"seed": data.seed, "labels": [int(v) for v in data.labels], "files": names}
    (directory / "labels.json").write_text(
        json.dumps(index, sort_keys=True, separators=(",", ":")) + "\n", encoding="ascii"
    )


def load_dataset(directory) -> Dataset:
    """Restore a dataset written by dump_dataset."""
    directory = Path(directory)
    index_path = directory / "labels.json"
    if not index_path.is_file():
        raise FormatError(f"no labels.json in {directory}")
    try:
        index = json.loads(index_path.read_text(encoding="ascii"))
        labels = np.asarray(index["labels"], dtype=np.int64)
        files = index["files"]
        seed = int(index["seed"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad labels.json: {exc}") from exc
    if len(files) != labels.size:
        raise FormatError(f"{len(files)} files but {labels.size} labels")
    images = tuple(decode_ppm(directory / name) for name in files)
    return Dataset(images, labels, seed)
