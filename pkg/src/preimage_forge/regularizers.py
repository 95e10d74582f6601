"""Explicit image regularizers: relaxed total variation and Dirichlet energy.

Both use the same discrete operator pair: forward differences for the
gradient (one-sided, zero at the far border, matching a replicated edge
sample) and their exact negative adjoint as the divergence. Each value
function returns the true derivative of its own discretization, so finite
differences agree to rounding. Channels are treated independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .grid import Image

REGULARIZER_KINDS = ("none", "tv", "dirichlet")


@dataclass(frozen=True)
class RegularizerSpec:
    """Which regularizer to add and how strongly (weight = the multiplier
    applied to the raw value inside the total energy)."""

    kind: str = "none"
    weight: float = 0.0
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.kind not in REGULARIZER_KINDS:
            raise ParameterError(f"unknown regularizer kind {self.kind!r}, expected one of {REGULARIZER_KINDS}")
        if not (self.weight >= 0.0 and np.isfinite(self.weight)):
            raise ParameterError(f"weight must be >= 0 and finite, got {self.weight!r}")
        if self.kind == "tv" and not (self.epsilon > 0.0 and np.isfinite(self.epsilon)):
            raise ParameterError(f"tv epsilon must be positive and finite, got {self.epsilon!r}")


def forward_differences(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel forward differences (gx along width, gy along height),
    zero at the far border."""
    gx = np.zeros_like(arr)
    gy = np.zeros_like(arr)
    gx[:, :-1] = arr[:, 1:] - arr[:, :-1]
    gy[:-1] = arr[1:] - arr[:-1]
    return gx, gy


def divergence(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Backward-difference divergence, the exact negative adjoint of
    forward_differences: <grad u, (px, py)> == <u, -divergence(px, py)>.

    Far-border components are ignored because the forward difference there
    is identically zero.
    """
    px = px.copy()
    px[:, -1] = 0.0
    py = py.copy()
    py[-1] = 0.0
    d = px.copy()
    d[:, 1:] -= px[:, :-1]
    d += py
    d[1:] -= py[:-1]
    return d


def _tv_array(arr: np.ndarray, epsilon: float) -> tuple[float, np.ndarray]:
    gx, gy = forward_differences(arr)
    den = np.sqrt(gx * gx + gy * gy + epsilon * epsilon)
    value = float(den.sum())
    grad = -divergence(gx / den, gy / den)
    return value, grad


def _dirichlet_array(arr: np.ndarray) -> tuple[float, np.ndarray]:
    gx, gy = forward_differences(arr)
    value = float((gx * gx + gy * gy).sum())
    grad = -2.0 * divergence(gx, gy)
    return value, grad


def tv(image: Image, epsilon: float) -> tuple[float, Image]:
    """Relaxed total variation: sum of sqrt(|grad u|^2 + epsilon^2) per
    sample and channel, with its exact gradient.

    A constant image scores height * width * channels * epsilon.
    """
    if not (epsilon > 0.0 and np.isfinite(epsilon)):
        raise ParameterError(f"epsilon must be positive and finite, got {epsilon!r}")
    value, grad = _tv_array(image.data, float(epsilon))
    return value, Image(grad)


def dirichlet(image: Image) -> tuple[float, Image]:
    """Squared-gradient (Dirichlet) energy with its exact gradient, which is
    -2 times the discrete divergence of the gradient field."""
    value, grad = _dirichlet_array(image.data)
    return value, Image(grad)


def regularizer_term(arr: np.ndarray, spec: RegularizerSpec) -> tuple[float, np.ndarray]:
    """Raw (unweighted) value and gradient for the configured kind."""
    if spec.kind == "tv":
        return _tv_array(arr, spec.epsilon)
    if spec.kind == "dirichlet":
        return _dirichlet_array(arr)
    return 0.0, np.zeros_like(arr)
