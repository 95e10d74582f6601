"""Data terms driving pre-image optimization.

Both terms are written so that *minimizing* them does the right thing:

* inversion: (1/z) * ||code - target||_p^p with p in {1, 2}, pulling the
  image's feature code toward a recorded target code;
* activation_max: -(1/z) * code[unit], so gradient descent on the term
  drives the chosen unit's activation up.

Each term returns its value and the exact cotangent (d value / d code),
ready to feed backward_input. A third kind, "constant", is a test hook: it
bypasses the network and hands the optimizer a fixed gradient image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cnn import FeatureCode
from .errors import DimensionError, ParameterError

OBJECTIVE_KINDS = ("inversion", "activation_max", "constant")

AUTO_Z = "auto"


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """What to optimize and against which layer.

    ``z`` is a positive normalization constant or "auto": for inversion the
    squared norm of the target code, for activation_max the magnitude of the
    unit's activation at step 0 (1.0 whenever the automatic value would be 0).
    """

    kind: str
    layer: int = 0
    target: FeatureCode | None = None
    unit: int | None = None
    p: int = 2
    z: float | str = 1.0
    gradient: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ParameterError(f"unknown objective kind {self.kind!r}, expected one of {OBJECTIVE_KINDS}")
        if self.p not in (1, 2):
            raise ParameterError(f"p must be 1 or 2, got {self.p!r}")
        if isinstance(self.z, str):
            if self.z != AUTO_Z:
                raise ParameterError(f"z must be a positive number or {AUTO_Z!r}, got {self.z!r}")
        elif not (float(self.z) > 0.0 and np.isfinite(float(self.z))):
            raise ParameterError(f"z must be positive and finite, got {self.z!r}")
        if self.kind == "inversion" and self.target is None:
            raise ParameterError("inversion needs a target feature code")
        if self.kind == "activation_max":
            if self.unit is None or int(self.unit) < 0:
                raise ParameterError(f"activation_max needs a unit index >= 0, got {self.unit!r}")
        if self.kind == "constant":
            if self.gradient is None:
                raise ParameterError("constant objective needs a gradient array")
            arr = np.asarray(self.gradient, dtype=np.float64)
            if not np.isfinite(arr).all():
                raise ParameterError("constant objective gradient must be finite")
            object.__setattr__(self, "gradient", arr)


def _numeric_z(spec: ObjectiveSpec) -> float:
    if isinstance(spec.z, str):
        raise ParameterError("z is still 'auto'; resolve it against a step-0 code first")
    return float(spec.z)


def resolve_z(spec: ObjectiveSpec, step0_code: FeatureCode | None) -> float:
    """Turn z="auto" into a number; numeric z passes through unchanged."""
    if not isinstance(spec.z, str):
        return float(spec.z)
    if spec.kind == "inversion":
        t = spec.target.values
        z = float(np.einsum("i,i->", t, t, optimize=False))
    elif spec.kind == "activation_max":
        if step0_code is None:
            raise ParameterError("auto z for activation_max needs the step-0 code")
        if spec.unit >= step0_code.values.size:
            raise DimensionError(f"unit {spec.unit} outside code of length {step0_code.values.size}")
        z = abs(float(step0_code.values[spec.unit]))
    else:
        z = 1.0
    return z if z > 0.0 else 1.0


def inversion_term(code: FeatureCode, spec: ObjectiveSpec) -> tuple[float, FeatureCode]:
    """Value and cotangent of (1/z) * ||code - target||_p^p."""
    if spec.kind != "inversion":
        raise ParameterError(f"inversion_term got objective kind {spec.kind!r}")
    z = _numeric_z(spec)
    target = spec.target.values
    vals = code.values
    if vals.size != target.size:
        raise DimensionError(f"code length {vals.size} != target length {target.size}")
    diff = vals - target
    if spec.p == 2:
        value = float(np.einsum("i,i->", diff, diff, optimize=False)) / z
        cot = (2.0 / z) * diff
    else:
        value = float(np.abs(diff).sum()) / z
        cot = np.sign(diff) / z  # sign(0) = 0
    return value, FeatureCode(cot, code.origin_layer)


def actmax_term(code: FeatureCode, spec: ObjectiveSpec) -> tuple[float, FeatureCode]:
    """Value and cotangent of -(1/z) * code[unit]."""
    if spec.kind != "activation_max":
        raise ParameterError(f"actmax_term got objective kind {spec.kind!r}")
    z = _numeric_z(spec)
    unit = int(spec.unit)
    if unit >= code.values.size:
        raise DimensionError(f"unit {unit} outside code of length {code.values.size}")
    value = -float(code.values[unit]) / z
    cot = np.zeros(code.values.size)
    cot[unit] = -1.0 / z
    return value, FeatureCode(cot, code.origin_layer)


def objective_term(code: FeatureCode, spec: ObjectiveSpec) -> tuple[float, FeatureCode]:
    """Dispatch to the matching term (constant is handled by the optimizer)."""
    if spec.kind == "inversion":
        return inversion_term(code, spec)
    if spec.kind == "activation_max":
        return actmax_term(code, spec)
    raise ParameterError(f"no network term for objective kind {spec.kind!r}")
