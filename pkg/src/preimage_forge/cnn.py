"""A small, exactly differentiable CNN written directly on numpy.

Layers: strided conv with replicate padding, relu, 2x2 max pooling, global
average pooling, dense, and a per-channel affine (scale/shift) layer that
stands in for normalization without running statistics. Forward and both
reverse-mode gradients (input and parameters) are implemented by hand so
every adjoint is exact and bit-reproducible: reductions go through
np.einsum(optimize=False), which never dispatches to threaded BLAS.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError, DimensionError, FormatError, ParameterError
from .grid import Image

LAYER_KINDS = ("conv", "relu", "maxpool", "avgpool_global", "dense", "affine_norm")

MODEL_MAGIC = b"MCNN0001"


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a network. Unused fields stay None."""

    kind: str
    out_channels: int | None = None
    kernel_side: int | None = None
    stride: int | None = None
    out_features: int | None = None

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ParameterError(f"unknown layer kind {self.kind!r}, expected one of {LAYER_KINDS}")
        if self.kind == "conv":
            if not self.out_channels or self.out_channels < 1:
                raise ParameterError(f"conv needs out_channels >= 1, got {self.out_channels!r}")
            if not self.kernel_side or self.kernel_side < 1 or self.kernel_side % 2 == 0:
                raise ParameterError(f"conv kernel_side must be odd and positive, got {self.kernel_side!r}")
            if not self.stride or self.stride < 1:
                raise ParameterError(f"conv stride must be >= 1, got {self.stride!r}")
        elif self.kind == "dense":
            if not self.out_features or self.out_features < 1:
                raise ParameterError(f"dense needs out_features >= 1, got {self.out_features!r}")
        else:
            for name in ("out_channels", "kernel_side", "stride", "out_features"):
                if getattr(self, name) is not None:
                    raise ParameterError(f"{self.kind} takes no {name}")


def conv(out_channels: int, kernel_side: int, stride: int = 1) -> LayerSpec:
    return LayerSpec("conv", out_channels=out_channels, kernel_side=kernel_side, stride=stride)


def relu() -> LayerSpec:
    return LayerSpec("relu")


def maxpool() -> LayerSpec:
    return LayerSpec("maxpool")


def avgpool_global() -> LayerSpec:
    return LayerSpec("avgpool_global")


def dense(out_features: int) -> LayerSpec:
    return LayerSpec("dense", out_features=out_features)


def affine_norm() -> LayerSpec:
    return LayerSpec("affine_norm")


def _propagate_shape(shape: tuple, spec: LayerSpec) -> tuple:
    """Output shape of one layer. 3-tuples are (h, w, c), 1-tuples flat."""
    if spec.kind == "conv":
        if len(shape) != 3:
            raise DimensionError("conv needs an (h, w, c) activation")
        h, w, _ = shape
        k, s = spec.kernel_side, spec.stride
        p = (k - 1) // 2
        return ((h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1, spec.out_channels)
    if spec.kind == "relu":
        return shape
    if spec.kind == "maxpool":
        if len(shape) != 3:
            raise DimensionError("maxpool needs an (h, w, c) activation")
        h, w, c = shape
        if h < 2 or w < 2:
            raise DimensionError(f"maxpool needs dims >= 2, got {h}x{w}")
        return (h // 2, w // 2, c)
    if spec.kind == "avgpool_global":
        if len(shape) != 3:
            raise DimensionError("avgpool_global needs an (h, w, c) activation")
        return (1, 1, shape[2])
    if spec.kind == "affine_norm":
        if len(shape) != 3:
            raise DimensionError("affine_norm needs an (h, w, c) activation")
        return shape
    if spec.kind == "dense":
        return (spec.out_features,)
    raise ParameterError(f"unknown layer kind {spec.kind!r}")


def _flat_size(shape: tuple) -> int:
    return int(np.prod(shape))


_TENSOR_NAMES = {"conv": ("weight", "bias"), "dense": ("weight", "bias"), "affine_norm": ("scale", "shift")}


def _expected_tensor_shapes(in_shape: tuple, spec: LayerSpec) -> dict[str, tuple]:
    if spec.kind == "conv":
        k = spec.kernel_side
        return {"weight": (k, k, in_shape[2], spec.out_channels), "bias": (spec.out_channels,)}
    if spec.kind == "dense":
        return {"weight": (_flat_size(in_shape), spec.out_features), "bias": (spec.out_features,)}
    if spec.kind == "affine_norm":
        return {"scale": (in_shape[2],), "shift": (in_shape[2],)}
    return {}


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable layer chain plus its weights.

    ``weights`` maps layer index -> {tensor name -> read-only float64 array}.
    ``layer_shapes[i]`` is the output shape of layer i at the declared input
    shape; other spatial inputs are allowed at run time as long as every
    layer stays consistent (dense raises if the flattened size differs).
    """

    input_shape: tuple[int, int, int]
    layers: tuple[LayerSpec, ...]
    weights: dict
    seed: int
    layer_shapes: tuple = ()

    def __post_init__(self):
        ishape = tuple(int(v) for v in self.input_shape)
        if len(ishape) != 3 or min(ishape) < 1:
            raise DimensionError(f"input_shape must be (h, w, c) positive, got {self.input_shape!r}")
        layers = tuple(self.layers)
        if not layers:
            raise DimensionError("network needs at least one layer")
        stray = [i for i in self.weights if not (0 <= int(i) < len(layers))]
        if stray:
            raise DimensionError(f"weights reference layers {sorted(stray)} outside the chain")
        shapes = []
        shape = ishape
        for i, spec in enumerate(layers):
            shape = _propagate_shape(shape, spec)
            shapes.append(shape)
            expected = _expected_tensor_shapes(shapes[i - 1] if i else ishape, spec)
            got = self.weights.get(i, {})
            if set(got) != set(expected):
                raise DimensionError(f"layer {i} ({spec.kind}) expects tensors {sorted(expected)}, got {sorted(got)}")
            for name, eshape in expected.items():
                arr = np.asarray(got[name], dtype=np.float64)
                if arr.shape != eshape:
                    raise DimensionError(f"layer {i} tensor {name} has shape {arr.shape}, expected {eshape}")
                if not np.isfinite(arr).all():
                    raise DataError(f"layer {i} tensor {name} contains non-finite values")
        frozen = {}
        for i, tensors in self.weights.items():
            frozen[i] = {}
            for name, arr in tensors.items():
                arr = np.array(arr, dtype=np.float64, order="C", copy=True)
                arr.setflags(write=False)
                frozen[i][name] = arr
        object.__setattr__(self, "input_shape", ishape)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "weights", frozen)
        object.__setattr__(self, "layer_shapes", tuple(shapes))

    @property
    def n_layers(self) -> int:
        return len(self.layers)


@dataclass(frozen=True, eq=False)
class FeatureCode:
    """Flattened activation of one layer, with the layer index it came from."""

    values: np.ndarray
    origin_layer: int

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64).reshape(-1).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "origin_layer", int(self.origin_layer))


def build_network(input_shape, layer_specs, seed: int) -> Network:
    """Initialize weights from the seed and assemble a Network.

    Conv and dense weights draw from uniform(-a, a) with
    a = sqrt(6 / (fan_in + fan_out)); biases start at zero; affine_norm
    starts as the identity (scale 1, shift 0). Tensors are drawn in layer
    order so a seed pins every weight.
    """
    rng = np.random.default_rng(seed)
    shape = tuple(int(v) for v in input_shape)
    weights: dict[int, dict[str, np.ndarray]] = {}
    for i, spec in enumerate(layer_specs):
        if spec.kind == "conv":
            k, cin, cout = spec.kernel_side, shape[2], spec.out_channels
            a = np.sqrt(6.0 / (k * k * cin + k * k * cout))
            weights[i] = {
                "weight": rng.uniform(-a, a, (k, k, cin, cout)),
                "bias": np.zeros(cout),
            }
        elif spec.kind == "dense":
            nin, nout = _flat_size(shape), spec.out_features
            a = np.sqrt(6.0 / (nin + nout))
            weights[i] = {
                "weight": rng.uniform(-a, a, (nin, nout)),
                "bias": np.zeros(nout),
            }
        elif spec.kind == "affine_norm":
            weights[i] = {"scale": np.ones(shape[2]), "shift": np.zeros(shape[2])}
        shape = _propagate_shape(shape, spec)
    return Network(tuple(int(v) for v in input_shape), tuple(layer_specs), weights, int(seed))


def vggish(input_shape=(32, 32, 1), seed: int = 0) -> Network:
    """Small conv-pool-conv-pool-dense classifier (3 classes)."""
    specs = [conv(8, 3), relu(), maxpool(), conv(16, 3), relu(), maxpool(), dense(3)]
    return build_network(input_shape, specs, seed)


def densish(input_shape=(32, 32, 1), seed: int = 0) -> Network:
    """Conv-conv classifier that ends in global average pooling (3 classes)."""
    specs = [conv(6, 3), relu(), conv(12, 3), relu(), maxpool(), avgpool_global(), dense(3)]
    return build_network(input_shape, specs, seed)


def replace_weights(net: Network, layer_index: int, **tensors) -> Network:
    """Return a copy of the network with one layer's tensors swapped."""
    weights = {i: dict(t) for i, t in net.weights.items()}
    if layer_index not in weights:
        raise DimensionError(f"layer {layer_index} holds no tensors")
    for name, arr in tensors.items():
        if name not in weights[layer_index]:
            raise DimensionError(f"layer {layer_index} has no tensor {name!r}")
        weights[layer_index][name] = np.asarray(arr, dtype=np.float64)
    return Network(net.input_shape, net.layers, weights, net.seed)


def layer_index(net: Network, selector) -> int:
    """Resolve a layer selector: an int, "logits", "deepest_conv", or "pre_dense"."""
    if isinstance(selector, (int, np.integer)):
        idx = int(selector)
        if idx < 0:
            idx += net.n_layers
        if not (0 <= idx < net.n_layers):
            raise DimensionError(f"layer index {selector} outside [0, {net.n_layers})")
        return idx
    if selector == "logits":
        return net.n_layers - 1
    if selector == "deepest_conv":
        for i in range(net.n_layers - 1, -1, -1):
            if net.layers[i].kind == "conv":
                return i
        raise DimensionError("network has no conv layer")
    if selector == "pre_dense":
        for i, spec in enumerate(net.layers):
            if spec.kind == "dense":
                if i == 0:
                    raise DimensionError("network starts with dense, no pre_dense layer")
                return i - 1
        raise DimensionError("network has no dense layer")
    raise ParameterError(f"bad layer selector {selector!r}")


# ---------------------------------------------------------------------------
# forward / backward internals (batched, activations are (N, ...) arrays)


def _replicate_pad(x: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n, h, w, _ = x.shape
    ri = np.clip(np.arange(h + 2 * p) - p, 0, h - 1)
    ci = np.clip(np.arange(w + 2 * p) - p, 0, w - 1)
    return x[:, ri][:, :, ci], ri, ci


def _fold_replicate_pad(gp: np.ndarray, p: int, h: int, w: int) -> np.ndarray:
    """Adjoint of replicate padding: border margins fold onto the edge rows/cols."""
    if p == 0:
        return gp
    g = gp[:, p : p + h, p : p + w].copy()
    g[:, 0] += gp[:, :p, p : p + w].sum(axis=1)
    g[:, -1] += gp[:, p + h :, p : p + w].sum(axis=1)
    g[:, :, 0] += gp[:, p : p + h, :p].sum(axis=2)
    g[:, :, -1] += gp[:, p : p + h, w + p :].sum(axis=2)
    g[:, 0, 0] += gp[:, :p, :p].sum(axis=(1, 2))
    g[:, 0, -1] += gp[:, :p, w + p :].sum(axis=(1, 2))
    g[:, -1, 0] += gp[:, p + h :, :p].sum(axis=(1, 2))
    g[:, -1, -1] += gp[:, p + h :, w + p :].sum(axis=(1, 2))
    return g


def _conv_forward(spec, params, x):
    k, s = spec.kernel_side, spec.stride
    p = (k - 1) // 2
    xp, _, _ = _replicate_pad(x, p)
    win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::s, ::s]
    y = np.einsum("nhwcij,ijcd->nhwd", win, params["weight"], optimize=False) + params["bias"]
    return y, (x.shape, win)


def _conv_backward(spec, params, cache, gy, want_params):
    x_shape, win = cache
    k, s = spec.kernel_side, spec.stride
    p = (k - 1) // 2
    n, h, w, c = x_shape
    grads = None
    if want_params:
        grads = {
            "weight": np.einsum("nhwcij,nhwd->ijcd", win, gy, optimize=False),
            "bias": np.einsum("nhwd->d", gy, optimize=False),
        }
    wgt = params["weight"]
    ho, wo = gy.shape[1], gy.shape[2]
    gp = np.zeros((n, h + 2 * p, w + 2 * p, c))
    for i in range(k):
        for j in range(k):
            gp[:, i : i + s * ho : s, j : j + s * wo : s, :] += np.einsum(
                "nhwd,cd->nhwc", gy, wgt[i, j], optimize=False
            )
    return _fold_replicate_pad(gp, p, h, w), grads


def _maxpool_forward(spec, params, x):
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    xc = x[:, : 2 * ho, : 2 * wo]
    # windows flattened row-major: (0,0), (0,1), (1,0), (1,1); argmax keeps
    # the first of equal entries, which pins the tie-break.
    winp = xc.reshape(n, ho, 2, wo, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, 4)
    idx = winp.argmax(axis=4)
    y = np.take_along_axis(winp, idx[..., None], axis=4)[..., 0]
    return y, (x.shape, idx)


def _maxpool_backward(spec, params, cache, gy, want_params):
    x_shape, idx = cache
    n, h, w, c = x_shape
    ho, wo = h // 2, w // 2
    g = np.zeros((n, ho, wo, c, 4))
    np.put_along_axis(g, idx[..., None], gy[..., None], axis=4)
    gx = np.zeros(x_shape)
    gx[:, : 2 * ho, : 2 * wo] = (
        g.reshape(n, ho, wo, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, 2 * ho, 2 * wo, c)
    )
    return gx, None


def _forward_one(spec, params, x):
    if spec.kind == "conv":
        return _conv_forward(spec, params, x)
    if spec.kind == "relu":
        return np.maximum(x, 0.0), (x > 0.0)
    if spec.kind == "maxpool":
        return _maxpool_forward(spec, params, x)
    if spec.kind == "avgpool_global":
        return x.mean(axis=(1, 2), keepdims=True), x.shape
    if spec.kind == "affine_norm":
        return x * params["scale"] + params["shift"], x
    if spec.kind == "dense":
        n = x.shape[0]
        xf = x.reshape(n, -1)
        wgt = params["weight"]
        if xf.shape[1] != wgt.shape[0]:
            raise DimensionError(
                f"dense layer expects {wgt.shape[0]} inputs, got {xf.shape[1]} "
                f"(activation shape {x.shape[1:]})"
            )
        y = np.einsum("nf,fo->no", xf, wgt, optimize=False) + params["bias"]
        return y, (x.shape, xf)
    raise ParameterError(f"unknown layer kind {spec.kind!r}")


def _backward_one(spec, params, cache, gy, want_params):
    if spec.kind == "conv":
        return _conv_backward(spec, params, cache, gy, want_params)
    if spec.kind == "relu":
        return gy * cache, None
    if spec.kind == "maxpool":
        return _maxpool_backward(spec, params, cache, gy, want_params)
    if spec.kind == "avgpool_global":
        x_shape = cache
        n, h, w, c = x_shape
        return np.broadcast_to(gy / (h * w), x_shape).copy(), None
    if spec.kind == "affine_norm":
        x = cache
        grads = None
        if want_params:
            grads = {
                "scale": np.einsum("nhwc,nhwc->c", gy, x, optimize=False),
                "shift": np.einsum("nhwc->c", gy, optimize=False),
            }
        return gy * params["scale"], grads
    if spec.kind == "dense":
        x_shape, xf = cache
        grads = None
        if want_params:
            grads = {
                "weight": np.einsum("nf,no->fo", xf, gy, optimize=False),
                "bias": np.einsum("no->o", gy, optimize=False),
            }
        gx = np.einsum("no,fo->nf", gy, params["weight"], optimize=False).reshape(x_shape)
        return gx, grads
    raise ParameterError(f"unknown layer kind {spec.kind!r}")


def _forward_batch(net: Network, x: np.ndarray, upto: int, keep_caches: bool):
    acts = x
    caches = []
    for i in range(upto + 1):
        acts, cache = _forward_one(net.layers[i], net.weights.get(i), acts)
        caches.append(cache if keep_caches else None)
    return acts, caches


def _check_input(net: Network, image: Image) -> np.ndarray:
    if image.channels != net.input_shape[2]:
        raise DimensionError(
            f"input has {image.channels} channels, network expects {net.input_shape[2]}"
        )
    return image.data[None]


def forward(net: Network, image: Image, upto_layer=None) -> FeatureCode:
    """Run the network and return the flattened activation of one layer.

    ``upto_layer`` accepts an index or a named selector; None means the final
    layer. Spatial dims may differ from the declared input shape as long as
    the chain stays consistent (dense checks the flattened size).
    """
    upto = net.n_layers - 1 if upto_layer is None else layer_index(net, upto_layer)
    x = _check_input(net, image)
    acts, _ = _forward_batch(net, x, upto, keep_caches=False)
    return FeatureCode(acts[0].reshape(-1), upto)


def backward_input(net: Network, image: Image, upto_layer, cotangent) -> Image:
    """Exact gradient of <code(image), cotangent> with respect to the input image."""
    upto = net.n_layers - 1 if upto_layer is None else layer_index(net, upto_layer)
    x = _check_input(net, image)
    cot = cotangent.values if isinstance(cotangent, FeatureCode) else np.asarray(cotangent, dtype=np.float64)
    acts, caches = _forward_batch(net, x, upto, keep_caches=True)
    if cot.size != acts.size:
        raise DimensionError(f"cotangent has {cot.size} entries, layer output has {acts.size}")
    gy = cot.reshape(acts.shape)
    for i in range(upto, -1, -1):
        gy, _ = _backward_one(net.layers[i], net.weights.get(i), caches[i], gy, want_params=False)
    return Image(gy[0])


def _loss_and_param_grads(net: Network, weights: dict, xb: np.ndarray, yb: np.ndarray):
    """Mean softmax cross-entropy over the batch plus exact parameter gradients.

    ``weights`` overrides the network's stored tensors (training works on a
    mutable copy). Returns (loss, grads keyed like weights, logits).
    """
    acts = xb
    caches = []
    for i, spec in enumerate(net.layers):
        acts, cache = _forward_one(spec, weights.get(i), acts)
        caches.append(cache)
    logits = acts
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    probs = expv / expv.sum(axis=1, keepdims=True)
    logp = shifted - np.log(expv.sum(axis=1, keepdims=True))
    loss = float(-logp[np.arange(n), yb].mean())
    gy = probs.copy()
    gy[np.arange(n), yb] -= 1.0
    gy /= n
    grads: dict[int, dict[str, np.ndarray]] = {}
    for i in range(net.n_layers - 1, -1, -1):
        gy, g = _backward_one(net.layers[i], weights.get(i), caches[i], gy, want_params=True)
        if g is not None:
            grads[i] = g
    return loss, grads, logits


def logits_batch(net: Network, images: np.ndarray, chunk: int = 128) -> np.ndarray:
    """Final-layer outputs for a stack of images, evaluated in fixed chunks."""
    outs = []
    for start in range(0, images.shape[0], chunk):
        acts, _ = _forward_batch(net, images[start : start + chunk], net.n_layers - 1, keep_caches=False)
        outs.append(acts)
    return np.concatenate(outs, axis=0)


# ---------------------------------------------------------------------------
# serialization

_SPEC_FIELDS = ("kind", "out_channels", "kernel_side", "stride", "out_features")


def _spec_to_json(spec: LayerSpec) -> dict:
    out = {"kind": spec.kind}
    for name in _SPEC_FIELDS[1:]:
        val = getattr(spec, name)
        if val is not None:
            out[name] = int(val)
    return out


def _spec_from_json(obj: dict) -> LayerSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise FormatError(f"bad layer spec entry {obj!r}")
    unknown = set(obj) - set(_SPEC_FIELDS)
    if unknown:
        raise FormatError(f"layer spec has unknown fields {sorted(unknown)}")
    try:
        return LayerSpec(**obj)
    except ParameterError as exc:
        raise FormatError(f"bad layer spec: {exc}") from exc


def model_manifest(net: Network) -> dict:
    tensors = []
    for i in sorted(net.weights):
        for name in _TENSOR_NAMES[net.layers[i].kind]:
            tensors.append({"name": f"layer{i}.{name}", "shape": list(net.weights[i][name].shape)})
    return {
        "input_shape": list(net.input_shape),
        "layers": [_spec_to_json(s) for s in net.layers],
        "seed": net.seed,
        "tensors": tensors,
    }


def manifest_bytes(net: Network) -> bytes:
    return json.dumps(model_manifest(net), sort_keys=True, separators=(",", ":")).encode("ascii")


def save_model(net: Network, path) -> None:
    """Write magic, 4-byte little-endian manifest length, manifest JSON, then
    raw little-endian float64 tensors in manifest order."""
    blob = manifest_bytes(net)
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for i in sorted(net.weights):
            for name in _TENSOR_NAMES[net.layers[i].kind]:
                fh.write(net.weights[i][name].astype("<f8").tobytes())


def load_model(path) -> Network:
    """Read a model container written by save_model; malformed input raises FormatError."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < len(MODEL_MAGIC) + 4:
        raise FormatError("model container too short for magic and manifest length")
    if buf[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise FormatError(f"bad model magic {buf[:len(MODEL_MAGIC)]!r}")
    (mlen,) = struct.unpack("<I", buf[len(MODEL_MAGIC) : len(MODEL_MAGIC) + 4])
    start = len(MODEL_MAGIC) + 4
    if start + mlen > len(buf):
        raise FormatError("manifest length exceeds file size")
    try:
        manifest = json.loads(buf[start : start + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad manifest JSON: {exc}") from exc
    for key in ("input_shape", "layers", "seed", "tensors"):
        if key not in manifest:
            raise FormatError(f"manifest is missing {key!r}")
    layers = tuple(_spec_from_json(o) for o in manifest["layers"])
    pos = start + mlen
    weights: dict[int, dict[str, np.ndarray]] = {}
    for entry in manifest["tensors"]:
        try:
            name, shape = entry["name"], tuple(int(v) for v in entry["shape"])
            layer_tag, tensor_name = name.split(".", 1)
            idx = int(layer_tag.removeprefix("layer"))
        except (KeyError, ValueError, TypeError) as exc:
            raise FormatError(f"bad tensor entry {entry!r}") from exc
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if pos + nbytes > len(buf):
            raise FormatError(f"tensor {name} is truncated")
        arr = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).astype(np.float64).reshape(shape)
        pos += nbytes
        weights.setdefault(idx, {})[tensor_name] = arr
    if pos != len(buf):
        raise FormatError(f"{len(buf) - pos} trailing bytes after tensors")
    try:
        return Network(tuple(manifest["input_shape"]), layers, weights, int(manifest["seed"]))
    except (DimensionError, DataError, ParameterError) as exc:
        raise FormatError(f"manifest and tensors are inconsistent: {exc}") from exc
