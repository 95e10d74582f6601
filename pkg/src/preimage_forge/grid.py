"""Dense float64 image grids: convolution, bilinear resampling, PPM/PGM I/O.

Images are immutable (H, W, C) arrays in row-major order. Every operation
returns a new Image; the backing arrays are marked read-only so values can be
shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError, FormatError, ParameterError

BOUNDARY_RULES = ("replicate", "reflect", "zero")

# np.pad equivalents; "reflect" mirrors including the edge sample.
_PAD_MODE = {"replicate": "edge", "reflect": "symmetric", "zero": "constant"}


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable H x W x C float64 grid.

    2-D input is promoted to a single channel. All samples must be finite.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise DimensionError(f"image data must be (H, W, C) with positive dims, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise DataError("image contains non-finite samples")
        arr = np.array(arr, dtype=np.float64, order="C", copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


def _round_half_up(x: float) -> int:
    # round() would go to even on ties; dimension math pins half-up instead.
    return int(math.floor(x + 0.5))


def _check_boundary(boundary: str) -> str:
    if boundary not in BOUNDARY_RULES:
        raise ParameterError(f"unknown boundary rule {boundary!r}, expected one of {BOUNDARY_RULES}")
    return boundary


def _convolve_array(arr: np.ndarray, weights: np.ndarray, boundary: str) -> np.ndarray:
    """Direct 2-D convolution of every channel with an odd square kernel."""
    k = weights.shape[0]
    r = k // 2
    h, w = arr.shape[:2]
    if r == 0:
        return arr * weights[0, 0]
    padded = np.pad(arr, ((r, r), (r, r), (0, 0)), mode=_PAD_MODE[boundary])
    out = np.zeros_like(arr)
    # out(y, x) = sum_{a,b in [-r, r]} weights[r+a, r+b] * u(y-a, x-b).
    # Fixed row-major accumulation order keeps results bit-reproducible.
    for i in range(k):
        for j in range(k):
            out += weights[i, j] * padded[2 * r - i : 2 * r - i + h, 2 * r - j : 2 * r - j + w]
    return out


def convolve(image: Image, kernel, boundary: str = "replicate") -> Image:
    """Convolve an image with a square odd-sided kernel.

    The kernel must not be larger than the image in either dimension. The
    boundary rule controls virtual samples outside the grid: "replicate"
    repeats the edge sample, "reflect" mirrors including the edge, "zero"
    treats the outside as 0.
    """
    _check_boundary(boundary)
    weights = np.asarray(kernel.weights, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
        raise DimensionError(f"kernel must be square, got shape {weights.shape}")
    if weights.shape[0] % 2 == 0:
        raise DimensionError(f"kernel side must be odd, got {weights.shape[0]}")
    if weights.shape[0] > min(image.height, image.width):
        raise DimensionError(
            f"kernel side {weights.shape[0]} exceeds image dims {image.height}x{image.width}"
        )
    if not np.isfinite(weights).all():
        raise DataError("kernel contains non-finite weights")
    return Image(_convolve_array(image.data, weights, boundary))


def _bilinear_to(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resampling to an explicit output size.

    Output sample i along an axis of input length n maps to source coordinate
    i * (n - 1) / (out - 1); for a single output sample the coordinate is 0.
    """
    h, w = arr.shape[:2]

    def axis_coords(n_in: int, n_out: int) -> np.ndarray:
        if n_out == 1:
            return np.zeros(1)
        return np.arange(n_out) * ((n_in - 1) / (n_out - 1))

    ys = axis_coords(h, out_h)
    xs = axis_coords(w, out_w)
    y0 = np.clip(np.floor(ys).astype(np.intp), 0, max(h - 2, 0))
    x0 = np.clip(np.floor(xs).astype(np.intp), 0, max(w - 2, 0))
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]

    v00 = arr[y0[:, None], x0[None, :]]
    v01 = arr[y0[:, None], x1[None, :]]
    v10 = arr[y1[:, None], x0[None, :]]
    v11 = arr[y1[:, None], x1[None, :]]
    # Lerp form keeps constant regions exactly constant.
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    return top + fy * (bot - top)


def resample(image: Image, scale: float) -> Image:
    """Rescale by a positive factor with corner-aligned bilinear interpolation.

    Output dims are round-half-up(scale * dims), clamped to a minimum of 1.
    scale == 1.0 reproduces the input sample for sample.
    """
    if not (scale > 0.0) or not math.isfinite(scale):
        raise ParameterError(f"scale must be a positive finite number, got {scale}")
    out_h = max(1, _round_half_up(scale * image.height))
    out_w = max(1, _round_half_up(scale * image.width))
    return Image(_bilinear_to(image.data, out_h, out_w))


def resample_to(image: Image, out_h: int, out_w: int) -> Image:
    """Resample to explicit output dims (same bilinear convention as resample)."""
    if out_h < 1 or out_w < 1:
        raise DimensionError(f"target dims must be positive, got {out_h}x{out_w}")
    return Image(_bilinear_to(image.data, int(out_h), int(out_w)))


def quantize_bytes(arr: np.ndarray) -> np.ndarray:
    """Map [0, 1] samples to bytes: round-half-up(clamp(v, 0, 1) * 255)."""
    return np.floor(np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def encode_ppm(image: Image) -> bytes:
    """Binary PGM (1 channel, P5) or PPM (3 channels, P6) bytes, maxval 255."""
    if image.channels == 3:
        magic = b"P6"
    elif image.channels == 1:
        magic = b"P5"
    else:
        raise DimensionError(f"PPM/PGM output needs 1 or 3 channels, got {image.channels}")
    payload = quantize_bytes(image.data).tobytes()
    return magic + b"\n%d %d\n255\n" % (image.width, image.height) + payload


def write_ppm(image: Image, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_ppm(image))


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError("unexpected end of header")
    return buf[start:pos], pos


def decode_ppm(path) -> Image:
    """Read a binary PGM/PPM with maxval 255 back into float64 samples v/255."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 2:
        raise FormatError("file too short for a PPM/PGM header")
    magic = buf[:2]
    if magic == b"P6":
        channels = 3
    elif magic == b"P5":
        channels = 1
    else:
        raise FormatError(f"unsupported magic {magic!r}, expected P5 or P6")
    pos = 2
    try:
        w_tok, pos = _next_token(buf, pos)
        h_tok, pos = _next_token(buf, pos)
        max_tok, pos = _next_token(buf, pos)
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except (FormatError, ValueError) as exc:
        raise FormatError(f"malformed header: {exc}") from exc
    if width < 1 or height < 1:
        raise FormatError(f"invalid dims {width}x{height}")
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}, expected 255")
    pos += 1  # single whitespace byte separates header from payload
    expected = width * height * channels
    payload = buf[pos:]
    if len(payload) != expected:
        raise FormatError(f"payload holds {len(payload)} bytes, expected {expected}")
    arr = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    return Image(arr.reshape(height, width, channels))
