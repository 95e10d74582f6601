"""Demons-style pre-image optimizer.

One step is  u <- K_e * (u - tau * K_f * g)  where g is the data-term
gradient (plus any weighted explicit-regularizer gradient), K_f filters each
raw update once ("fluid" smoothing), and K_e re-filters the whole iterate
every step ("elastic" smoothing). Either kernel may be absent, which skips
its convolution entirely; with both absent the step is plain gradient
descent. Convolutions use replicate boundaries.

run() adds multi-resolution octaves (bilinear rescaling of the iterate, no
fresh noise between stages) and integer jitter: the gradient is computed on
a shifted copy of the iterate and shifted back before the update.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace

import numpy as np

from .cnn import FeatureCode, Network, _check_input, _forward_batch, _backward_one, layer_index
from .errors import DimensionError, NumericalError, ParameterError
from .grid import Image, _bilinear_to, _convolve_array, _round_half_up
from .kernels import Kernel
from .objectives import ObjectiveSpec, objective_term, resolve_z
from .regularizers import RegularizerSpec, regularizer_term


@dataclass(frozen=True, eq=False)
class DemonsConfig:
    """Step rule parameters. ``step_size`` and ``steps`` also serve as the
    single-octave defaults when no schedule is given."""

    step_size: float
    steps: int
    fluid_kernel: Kernel | None = None
    elastic_kernel: Kernel | None = None
    regularizer: RegularizerSpec = RegularizerSpec()
    clamp: bool = False
    seed: int = 0

    def __post_init__(self):
        if not (self.step_size > 0.0 and np.isfinite(self.step_size)):
            raise ParameterError(f"step_size must be positive and finite, got {self.step_size!r}")
        if self.steps < 1:
            raise ParameterError(f"steps must be >= 1, got {self.steps!r}")


@dataclass(frozen=True)
class OctaveStage:
    scale: float
    steps: int
    step_size: float

    def __post_init__(self):
        if not (self.scale > 0.0 and np.isfinite(self.scale)):
            raise ParameterError(f"octave scale must be positive, got {self.scale!r}")
        if self.steps < 1:
            raise ParameterError(f"octave steps must be >= 1, got {self.steps!r}")
        if not (self.step_size > 0.0 and np.isfinite(self.step_size)):
            raise ParameterError(f"octave step_size must be positive, got {self.step_size!r}")


MAX_JITTER_FRACTION = 0.3


@dataclass(frozen=True)
class OctaveSchedule:
    """Stages run in order; scales must not decrease. ``jitter_fraction`` of
    the current dims bounds the per-axis shift drawn each step."""

    stages: tuple
    jitter_fraction: float = 0.0

    def __post_init__(self):
        stages = tuple(self.stages)
        if not stages:
            raise ParameterError("schedule needs at least one octave stage")
        scales = [s.scale for s in stages]
        if any(b < a for a, b in zip(scales, scales[1:])):
            raise ParameterError(f"octave scales must be nondecreasing, got {scales}")
        if not (0.0 <= self.jitter_fraction <= MAX_JITTER_FRACTION):
            raise ParameterError(
                f"jitter_fraction must lie in [0, {MAX_JITTER_FRACTION}], got {self.jitter_fraction!r}"
            )
        object.__setattr__(self, "stages", stages)


@dataclass(frozen=True)
class StepMetrics:
    step: int
    octave: int
    data_term: float
    reg_term: float
    total: float
    grad_maxnorm: float


METRICS_FIELDS = ("step", "octave", "data_term", "reg_term", "total", "grad_maxnorm")


@dataclass(frozen=True, eq=False)
class RunResult:
    final: Image
    metrics: tuple
    wall_time: float


def _shift_array(arr: np.ndarray, dx: int, dy: int) -> np.ndarray:
    h, w = arr.shape[:2]
    if abs(dx) > w or abs(dy) > h:
        raise ParameterError(f"offset ({dx}, {dy}) exceeds image dims {w}x{h}")
    yi = np.clip(np.arange(h) - dy, 0, h - 1)
    xi = np.clip(np.arange(w) - dx, 0, w - 1)
    return arr[yi][:, xi]


def jitter_shift(image: Image, offset: tuple[int, int]) -> Image:
    """Integer translation with replicate fill. ``offset`` is (dx, dy):
    positive dx moves content toward larger x (right), positive dy down."""
    dx, dy = int(offset[0]), int(offset[1])
    return Image(_shift_array(image.data, dx, dy))


def _check_kernel(kernel, dims) -> None:
    if kernel is not None and kernel.side > min(dims):
        raise DimensionError(f"kernel side {kernel.side} exceeds image dims {dims[0]}x{dims[1]}")


def _demons_step_array(u: np.ndarray, grad: np.ndarray, step_size: float, config: DemonsConfig) -> np.ndarray:
    g = grad
    if config.fluid_kernel is not None:
        g = _convolve_array(g, config.fluid_kernel.weights, "replicate")
    v = u - step_size * g
    if config.elastic_kernel is not None:
        v = _convolve_array(v, config.elastic_kernel.weights, "replicate")
    if config.clamp:
        v = np.clip(v, 0.0, 1.0)
    return v


def demons_step(u: Image, grad: Image, config: DemonsConfig) -> Image:
    """One update of the iterate from a data-term gradient (already including
    any explicit-regularizer part)."""
    if u.shape != grad.shape:
        raise DimensionError(f"iterate shape {u.shape} != gradient shape {grad.shape}")
    _check_kernel(config.fluid_kernel, u.shape[:2])
    _check_kernel(config.elastic_kernel, u.shape[:2])
    return Image(_demons_step_array(u.data, grad.data, config.step_size, config))


def _data_gradient(net, objective, uj, z_holder):
    """Objective value and d(value)/d(image) on the (possibly shifted) iterate."""
    x = uj[None]
    acts, caches = _forward_batch(net, x, objective.layer, keep_caches=True)
    code = FeatureCode(acts[0].reshape(-1), objective.layer)
    if z_holder[0] is None:
        z_holder[0] = resolve_z(objective, code)
    value, cot = objective_term(code, replace(objective, z=z_holder[0]))
    gy = cot.values.reshape(acts.shape)
    for i in range(objective.layer, -1, -1):
        gy, _ = _backward_one(net.layers[i], net.weights.get(i), caches[i], gy, want_params=False)
    return value, gy[0]


def run(
    net: Network | None,
    objective: ObjectiveSpec,
    config: DemonsConfig,
    schedule: OctaveSchedule | None = None,
    init: Image | None = None,
    init_shape: tuple | None = None,
) -> RunResult:
    """Optimize a pre-image.

    Without a schedule a single octave (scale 1.0, config.steps,
    config.step_size) runs. ``init`` defaults to uniform noise in [0.4, 0.6]
    at the network's input shape (or ``init_shape`` when given, e.g. to match
    an inversion target of different dims), drawn from config.seed; the same
    generator then drives the per-step jitter offsets, so a seed pins the
    whole trajectory. Octave target dims are round-half-up(scale * init dims).

    The "constant" objective kind skips the network and uses its fixed
    gradient array; ``net`` may then be None.
    """
    t0 = time.perf_counter()
    if schedule is None:
        schedule = OctaveSchedule((OctaveStage(1.0, config.steps, config.step_size),))
    rng = np.random.default_rng(config.seed)
    if objective.kind != "constant":
        if net is None:
            raise ParameterError("network-based objectives need a network")
        obj_layer = layer_index(net, objective.layer)
        objective = replace(objective, layer=obj_layer)
    if init is None:
        if init_shape is not None:
            shape = tuple(int(v) for v in init_shape)
            if len(shape) != 3 or min(shape) < 1:
                raise ParameterError(f"init_shape must be (h, w, c) positive, got {init_shape!r}")
        elif net is not None:
            shape = net.input_shape
        else:
            raise ParameterError("constant-objective runs need an explicit init image")
        u = rng.uniform(0.4, 0.6, shape)
    else:
        if net is not None:
            _check_input(net, init)
        u = init.data.copy()
    base_h, base_w = u.shape[:2]

    reg = config.regularizer
    use_reg = reg.kind != "none" and reg.weight != 0.0
    z_holder = [None]
    metrics = []
    step_no = 0
    for octave_no, stage in enumerate(schedule.stages, start=1):
        th = max(1, _round_half_up(stage.scale * base_h))
        tw = max(1, _round_half_up(stage.scale * base_w))
        if (th, tw) != u.shape[:2]:
            u = _bilinear_to(u, th, tw)
        _check_kernel(config.fluid_kernel, (th, tw))
        _check_kernel(config.elastic_kernel, (th, tw))
        mx = _round_half_up(schedule.jitter_fraction * tw)
        my = _round_half_up(schedule.jitter_fraction * th)
        for _ in range(stage.steps):
            dx = int(rng.integers(-mx, mx + 1)) if mx else 0
            dy = int(rng.integers(-my, my + 1)) if my else 0
            uj = _shift_array(u, dx, dy) if (dx or dy) else u
            if objective.kind == "constant":
                if objective.gradient.shape != u.shape:
                    raise DimensionError(
                        f"constant gradient shape {objective.gradient.shape} != iterate shape {u.shape}"
                    )
                g = objective.gradient
                data_val = float(np.einsum("ijk,ijk->", g, uj, optimize=False))
            else:
                data_val, g = _data_gradient(net, objective, uj, z_holder)
            reg_val = 0.0
            if use_reg:
                rv, rg = regularizer_term(uj, reg)
                g = g + reg.weight * rg
                reg_val = reg.weight * rv
            if dx or dy:
                g = _shift_array(g, -dx, -dy)
            grad_maxnorm = float(np.abs(g).max())
            u = _demons_step_array(u, g, stage.step_size, config)
            if not np.isfinite(u).all():
                last = metrics[-1] if metrics else None
                raise NumericalError(
                    f"pre-image became non-finite at step {step_no}", step=step_no, last_metrics=last
                )
            metrics.append(
                StepMetrics(step_no, octave_no, data_val, reg_val, data_val + reg_val, grad_maxnorm)
            )
            step_no += 1
    return RunResult(Image(u), tuple(metrics), time.perf_counter() - t0)


def write_metrics_csv(metrics, path) -> None:
    """Metrics table with float columns at 17 significant digits."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_FIELDS)
        for m in metrics:
            writer.writerow(
                [
                    m.step,
                    m.octave,
                    f"{m.data_term:.17g}",
                    f"{m.reg_term:.17g}",
                    f"{m.total:.17g}",
                    f"{m.grad_maxnorm:.17g}",
                ]
            )


def read_metrics_csv(path) -> tuple:
    """Read back a metrics CSV written by write_metrics_csv."""
    rows = []
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_FIELDS:
            raise ParameterError(f"unexpected metrics header {reader.fieldnames!r}")
        for rec in reader:
            rows.append(
                StepMetrics(
                    int(rec["step"]),
                    int(rec["octave"]),
                    float(rec["data_term"]),
                    float(rec["reg_term"]),
                    float(rec["total"]),
                    float(rec["grad_maxnorm"]),
                )
            )
    return tuple(rows)
