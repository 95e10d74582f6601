"""Square smoothing kernels: dirac, sampled Gaussian, and a screened-Poisson
("sobolev") filter, plus support-based parameter fitting.

The sobolev kernel is the discrete impulse response of (Id - gamma * Lap)
on the kernel grid with zero-flux (mirrored) boundaries: applying it as a
convolution approximates taking a smoothed, H1-style descent direction
instead of the raw gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DataError, DimensionError, FitError, FormatError, NumericalError, ParameterError

KERNEL_KINDS = ("dirac", "gaussian", "sobolev", "custom")

# Kinds whose construction guarantees unit mass, symmetry, and nonnegativity.
_NORMALIZED_KINDS = ("dirac", "gaussian", "sobolev")

_SUM_TOL = 1e-9
_SYMMETRY_TOL = 1e-12
_NEGATIVITY_TOL = -1e-12
_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Kernel:
    """Immutable square odd-sided float64 kernel.

    ``parameter`` is sigma for gaussian, gamma for sobolev, 0 otherwise.
    """

    weights: np.ndarray
    kind: str
    parameter: float = 0.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ParameterError(f"unknown kernel kind {self.kind!r}, expected one of {KERNEL_KINDS}")
        arr = np.asarray(self.weights, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"kernel weights must be square, got shape {arr.shape}")
        if arr.shape[0] % 2 == 0 or arr.shape[0] < 1:
            raise DimensionError(f"kernel side must be odd and positive, got {arr.shape[0]}")
        if not np.isfinite(arr).all():
            raise DataError("kernel contains non-finite weights")
        if self.kind in _NORMALIZED_KINDS:
            total = float(arr.sum())
            if abs(total - 1.0) > _SUM_TOL:
                raise DataError(f"{self.kind} kernel mass {total!r} differs from 1 by more than {_SUM_TOL}")
            if float(np.abs(arr - arr[::-1, ::-1]).max()) > _SYMMETRY_TOL:
                raise DataError(f"{self.kind} kernel is not centrally symmetric within {_SYMMETRY_TOL}")
            if float(arr.min()) < _NEGATIVITY_TOL:
                raise DataError(f"{self.kind} kernel has weight below {_NEGATIVITY_TOL}: {arr.min()!r}")
        arr = np.array(arr, dtype=np.float64, order="C", copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)

    @property
    def side(self) -> int:
        return self.weights.shape[0]


def _check_side(side: int) -> int:
    if not isinstance(side, (int, np.integer)) or side < 1 or side % 2 == 0:
        raise DimensionError(f"kernel side must be a positive odd integer, got {side!r}")
    return int(side)


def custom_kernel(weights: np.ndarray) -> Kernel:
    """Wrap arbitrary square odd-sided weights without normalization checks."""
    return Kernel(np.asarray(weights, dtype=np.float64), "custom", 0.0)


def dirac(side: int) -> Kernel:
    """Identity kernel: 1 at the center, 0 elsewhere."""
    side = _check_side(side)
    w = np.zeros((side, side))
    w[side // 2, side // 2] = 1.0
    return Kernel(w, "dirac", 0.0)


def gaussian_kernel(side: int, sigma: float) -> Kernel:
    """Sampled isotropic Gaussian, truncated to side x side, renormalized to unit mass."""
    side = _check_side(side)
    if not (sigma > 0.0) or not np.isfinite(sigma):
        raise ParameterError(f"sigma must be positive and finite, got {sigma!r}")
    offsets = np.arange(side, dtype=np.float64) - side // 2
    d2 = offsets[:, None] ** 2 + offsets[None, :] ** 2
    w = np.exp(-d2 / (2.0 * sigma * sigma))
    return Kernel(w / w.sum(), "gaussian", float(sigma))


def _mirrored_laplacian(w: np.ndarray) -> np.ndarray:
    """5-point Laplacian, unit spacing, zero-flux boundary via mirrored ghost cells."""
    lap = np.zeros_like(w)
    lap[:-1] += w[1:] - w[:-1]
    lap[1:] += w[:-1] - w[1:]
    lap[:, :-1] += w[:, 1:] - w[:, :-1]
    lap[:, 1:] += w[:, :-1] - w[:, 1:]
    return lap


def _screened_poisson_matrix(side: int, gamma: float) -> sp.csr_matrix:
    n = side * side
    diag = np.ones(n)
    rows, cols, vals = [], [], []
    for r in range(side):
        for c in range(side):
            idx = r * side + c
            for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= rr < side and 0 <= cc < side:
                    diag[idx] += gamma
                    rows.append(idx)
                    cols.append(cc + rr * side)
                    vals.append(-gamma)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    return (mat + sp.diags(diag)).tocsr()


def _dihedral_average(w: np.ndarray) -> np.ndarray:
    # The operator and the centered impulse are invariant under the square's
    # symmetries, so averaging only removes solver round-off asymmetry.
    # Each orbit sums its 8 values in sorted order so that symmetric entries
    # come out bit-identical, not merely close.
    side = w.shape[0]
    out = np.empty_like(w)
    for y in range(side):
        for x in range(side):
            ry, rx = side - 1 - y, side - 1 - x
            vals = sorted(
                (w[y, x], w[ry, x], w[y, rx], w[ry, rx], w[x, y], w[rx, y], w[x, ry], w[rx, ry])
            )
            out[y, x] = math.fsum(vals) / 8.0
    return out


def sobolev_kernel(side: int, gamma: float) -> Kernel:
    """Impulse response of (Id - gamma * Lap) on the kernel grid.

    The linear system is solved directly; the solution is residual-checked
    against the stencil, then renormalized to unit mass.
    """
    side = _check_side(side)
    if not (gamma > 0.0) or not np.isfinite(gamma):
        raise ParameterError(f"gamma must be positive and finite, got {gamma!r}")
    rhs = np.zeros(side * side)
    center = side // 2
    rhs[center * side + center] = 1.0
    mat = _screened_poisson_matrix(side, gamma)
    sol = spla.spsolve(mat, rhs).reshape(side, side)
    sol = _dihedral_average(sol)
    residual = sol - gamma * _mirrored_laplacian(sol)
    residual[center, center] -= 1.0
    res_max = float(np.abs(residual).max())
    if res_max > _RESIDUAL_TOL:
        raise NumericalError(f"screened-Poisson solve residual {res_max:g} exceeds {_RESIDUAL_TOL:g}")
    return Kernel(sol / sol.sum(), "sobolev", float(gamma))


def _outer_ring_max(weights: np.ndarray) -> float:
    return float(
        max(weights[0].max(), weights[-1].max(), weights[:, 0].max(), weights[:, -1].max())
    )


_FIT_TOL_FACTOR = 1e-6
_FIT_MAX_ITER = 200


def fit_kernel_parameter(kind: str, side: int, threshold: float) -> float:
    """Find the parameter at which the kernel just fills its support.

    Returns the sigma (gaussian) or gamma (sobolev) whose kernel has maximum
    outer-ring weight equal to ``threshold`` within 1e-6 * threshold. The ring
    weight must grow with the parameter; the search interval is
    [1e-6, side^2] and a non-bracketing interval raises FitError with the
    ring weights at both ends.
    """
    if kind == "gaussian":
        build = gaussian_kernel
    elif kind == "sobolev":
        build = sobolev_kernel
    else:
        raise ParameterError(f"cannot fit kernel kind {kind!r}, expected gaussian or sobolev")
    side = _check_side(side)
    if side < 3:
        raise DimensionError("support fitting needs side >= 3 so an outer ring exists")
    if not (0.0 < threshold < 1.0):
        raise ParameterError(f"threshold must lie in (0, 1), got {threshold!r}")

    lo, hi = 1e-6, float(side * side)
    ring_lo = _outer_ring_max(build(side, lo).weights)
    ring_hi = _outer_ring_max(build(side, hi).weights)
    if not (ring_lo < threshold < ring_hi):
        raise FitError(
            f"threshold {threshold:g} not bracketed for {kind} side {side}: "
            f"ring({lo:g}) = {ring_lo:g}, ring({hi:g}) = {ring_hi:g}"
        )
    tol = _FIT_TOL_FACTOR * threshold
    for _ in range(_FIT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        ring = _outer_ring_max(build(side, mid).weights)
        if abs(ring - threshold) <= tol:
            return mid
        if not (ring_lo <= ring <= ring_hi):
            raise FitError(
                f"ring weight is not monotone in the parameter for {kind} side {side}: "
                f"ring({mid:g}) = {ring:g} outside [{ring_lo:g}, {ring_hi:g}]"
            )
        if ring < threshold:
            lo, ring_lo = mid, ring
        else:
            hi, ring_hi = mid, ring
    raise FitError(
        f"bisection did not reach |ring - threshold| <= {tol:g} within {_FIT_MAX_ITER} steps "
        f"(last interval [{lo:g}, {hi:g}])"
    )


def write_kernel_csv(kernel: Kernel, path) -> None:
    """Dump weights as CSV: one header line with the side, then side rows."""
    lines = [str(kernel.side)]
    for row in kernel.weights:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_kernel_csv(path) -> Kernel:
    """Read a kernel CSV written by write_kernel_csv (returned kind is custom)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    if not lines:
        raise FormatError("empty kernel CSV")
    try:
        side = int(lines[0])
    except ValueError as exc:
        raise FormatError(f"bad side header {lines[0]!r}") from exc
    if len(lines) != side + 1:
        raise FormatError(f"expected {side} rows after the header, found {len(lines) - 1}")
    try:
        rows = [[float(tok) for tok in ln.split(",")] for ln in lines[1:]]
    except ValueError as exc:
        raise FormatError(f"bad weight value: {exc}") from exc
    arr = np.array(rows, dtype=np.float64)
    if arr.shape != (side, side):
        raise FormatError(f"expected {side}x{side} weights, got {arr.shape}")
    return custom_kernel(arr)
