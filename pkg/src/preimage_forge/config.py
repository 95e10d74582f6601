"""Run configuration files for maximize/invert.

A config is a JSON object with sections model, objective, regularizer,
demons, schedule, output. Unknown keys anywhere are rejected. Relative
paths resolve against the config file's directory. resolve_config fills
every default and normalizes shorthand, and is idempotent: resolving its
own output changes nothing (that property backs --dry-run round-trips).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cnn import Network, densish, forward, layer_index, load_model, vggish
from .demons import DemonsConfig, OctaveSchedule, OctaveStage
from .errors import ConfigError, FormatError, PreimageForgeError
from .grid import decode_ppm
from .kernels import Kernel, dirac, fit_kernel_parameter, gaussian_kernel, sobolev_kernel
from .objectives import ObjectiveSpec
from .regularizers import RegularizerSpec

BUILTIN_ARCHS = {"vggish": vggish, "densish": densish}

_LAYER_NAMES = ("logits", "deepest_conv", "pre_dense")

_SECTIONS = ("model", "objective", "regularizer", "demons", "schedule", "output")


def _reject_unknown(obj: dict, allowed, where: str) -> None:
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _need_dict(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object, got {type(obj).__name__}")
    return obj


def _need_number(val, where: str, minimum=None, positive=False) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not np.isfinite(val):
        raise ConfigError(f"{where} must be a finite number, got {val!r}")
    v = float(val)
    if positive and not v > 0.0:
        raise ConfigError(f"{where} must be positive, got {v}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{where} must be >= {minimum}, got {v}")
    return v


def _need_int(val, where: str, minimum=None) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{where} must be an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{where} must be >= {minimum}, got {val}")
    return int(val)


def _need_bool(val, where: str) -> bool:
    if not isinstance(val, bool):
        raise ConfigError(f"{where} must be true or false, got {val!r}")
    return val


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return _need_dict(raw, "config")


def _resolve_model(section, base: Path) -> dict:
    if isinstance(section, str):
        if section in BUILTIN_ARCHS:
            section = {"builtin": section, "seed": 0}
        else:
            section = {"path": section}
    section = _need_dict(section, "model")
    if "builtin" in section:
        _reject_unknown(section, ("builtin", "seed"), "model")
        name = section["builtin"]
        if name not in BUILTIN_ARCHS:
            raise ConfigError(f"unknown builtin model {name!r}, expected one of {sorted(BUILTIN_ARCHS)}")
        return {"builtin": name, "seed": _need_int(section.get("seed", 0), "model.seed", 0)}
    if "path" in section:
        _reject_unknown(section, ("path",), "model")
        path = (base / str(section["path"])).resolve() if not Path(str(section["path"])).is_absolute() else Path(str(section["path"]))
        if not path.is_file():
            raise ConfigError(f"model file not found: {path}")
        return {"path": str(path)}
    raise ConfigError("model needs either a builtin name or a path")


def load_model_section(section: dict) -> Network:
    if "builtin" in section:
        return BUILTIN_ARCHS[section["builtin"]](seed=section["seed"])
    return load_model(section["path"])


def _resolve_path(val, base: Path, where: str, must_exist: bool) -> str:
    if not isinstance(val, str) or not val:
        raise ConfigError(f"{where} must be a non-empty path string, got {val!r}")
    path = Path(val)
    if not path.is_absolute():
        path = (base / path).resolve()
    if must_exist and not path.is_file():
        raise ConfigError(f"{where}: file not found: {path}")
    if not must_exist and not path.parent.is_dir():
        raise ConfigError(f"{where}: directory does not exist: {path.parent}")
    return str(path)


def _resolve_layer(val, net: Network, where: str) -> int:
    if isinstance(val, bool) or not isinstance(val, (int, str)):
        raise ConfigError(f"{where} must be a layer index or one of {_LAYER_NAMES}, got {val!r}")
    if isinstance(val, str) and val not in _LAYER_NAMES:
        raise ConfigError(f"{where} must be a layer index or one of {_LAYER_NAMES}, got {val!r}")
    try:
        return layer_index(net, val)
    except PreimageForgeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _layer_width(net: Network, layer: int) -> int:
    return int(np.prod(net.layer_shapes[layer]))


def _resolve_objective(section, net: Network, base: Path) -> dict:
    section = _need_dict(section, "objective")
    kind = section.get("kind")
    if kind == "inversion":
        _reject_unknown(section, ("kind", "layer", "target", "p", "z"), "objective")
        layer = _resolve_layer(section.get("layer", "pre_dense"), net, "objective.layer")
        target = _resolve_path(section.get("target"), base, "objective.target", must_exist=True)
        p = section.get("p", 2)
        if p not in (1, 2):
            raise ConfigError(f"objective.p must be 1 or 2, got {p!r}")
        return {"kind": kind, "layer": layer, "target": target, "p": p, "z": _resolve_z(section)}
    if kind == "activation_max":
        _reject_unknown(section, ("kind", "layer", "unit", "z"), "objective")
        layer = _resolve_layer(section.get("layer", "logits"), net, "objective.layer")
        unit = _need_int(section.get("unit", 0), "objective.unit", 0)
        width = _layer_width(net, layer)
        if unit >= width:
            raise ConfigError(f"objective.unit {unit} outside layer {layer} width {width}")
        return {"kind": kind, "layer": layer, "unit": unit, "z": _resolve_z(section)}
    raise ConfigError(f"objective.kind must be inversion or activation_max, got {kind!r}")


def _resolve_z(section):
    z = section.get("z", 1.0)
    if z == "auto":
        return "auto"
    return _need_number(z, "objective.z", positive=True)


def _resolve_regularizer(section) -> dict:
    section = _need_dict(section if section is not None else {}, "regularizer")
    _reject_unknown(section, ("kind", "lambda", "epsilon"), "regularizer")
    kind = section.get("kind", "none")
    if kind not in ("none", "tv", "dirichlet"):
        raise ConfigError(f"regularizer.kind must be none, tv, or dirichlet, got {kind!r}")
    lam = _need_number(section.get("lambda", 0.0), "regularizer.lambda", minimum=0.0)
    eps = _need_number(section.get("epsilon", 1e-3), "regularizer.epsilon", positive=True)
    return {"kind": kind, "lambda": lam, "epsilon": eps}


_KERNEL_KEYS = {
    "none": (),
    "dirac": ("side",),
    "gaussian": ("side", "sigma", "threshold"),
    "sobolev": ("side", "gamma", "threshold"),
}


def _resolve_kernel(section, where: str) -> dict:
    section = _need_dict(section if section is not None else {"kind": "none"}, where)
    kind = section.get("kind", "none")
    if kind not in _KERNEL_KEYS:
        raise ConfigError(f"{where}.kind must be one of {sorted(_KERNEL_KEYS)}, got {kind!r}")
    _reject_unknown(section, ("kind",) + _KERNEL_KEYS[kind], where)
    if kind == "none":
        return {"kind": "none"}
    out = {"kind": kind, "side": _need_int(section.get("side"), f"{where}.side", 1)}
    if kind == "dirac":
        return out
    param_key = "sigma" if kind == "gaussian" else "gamma"
    has_param = param_key in section
    has_threshold = "threshold" in section
    if has_param == has_threshold:
        raise ConfigError(f"{where} needs exactly one of {param_key!r} or 'threshold'")
    if has_param:
        out[param_key] = _need_number(section[param_key], f"{where}.{param_key}", positive=True)
    else:
        out["threshold"] = _need_number(section["threshold"], f"{where}.threshold", positive=True)
    return out


def build_kernel(section: dict) -> Kernel | None:
    if section["kind"] == "none":
        return None
    if section["kind"] == "dirac":
        return dirac(section["side"])
    build = gaussian_kernel if section["kind"] == "gaussian" else sobolev_kernel
    if "threshold" in section:
        param = fit_kernel_parameter(section["kind"], section["side"], section["threshold"])
    else:
        param = section.get("sigma", section.get("gamma"))
    return build(section["side"], param)


def _resolve_demons(section) -> dict:
    # Defaults suit activation maximization: 160 steps of size 5 under an
    # 11x11 fitted sobolev update filter. Inversion runs usually want a
    # smaller tau; set it explicitly.
    section = _need_dict(section if section is not None else {}, "demons")
    _reject_unknown(section, ("fluid", "elastic", "tau", "steps", "clamp", "seed"), "demons")
    return {
        "fluid": _resolve_kernel(section.get("fluid", {"kind": "sobolev", "side": 11, "threshold": 1e-4}), "demons.fluid"),
        "elastic": _resolve_kernel(section.get("elastic"), "demons.elastic"),
        "tau": _need_number(section.get("tau", 5.0), "demons.tau", positive=True),
        "steps": _need_int(section.get("steps", 160), "demons.steps", 1),
        "clamp": _need_bool(section.get("clamp", True), "demons.clamp"),
        "seed": _need_int(section.get("seed", 0), "demons.seed", 0),
    }


def _resolve_schedule(section, demons: dict) -> dict:
    section = _need_dict(section if section is not None else {}, "schedule")
    _reject_unknown(section, ("octaves", "jitter_fraction"), "schedule")
    octaves = section.get("octaves")
    if octaves is None:
        octaves = [{"scale": 1.0}]
    if not isinstance(octaves, list) or not octaves:
        raise ConfigError("schedule.octaves must be a non-empty list")
    resolved = []
    for i, entry in enumerate(octaves):
        entry = _need_dict(entry, f"schedule.octaves[{i}]")
        _reject_unknown(entry, ("scale", "steps", "step_size"), f"schedule.octaves[{i}]")
        resolved.append(
            {
                "scale": _need_number(entry.get("scale", 1.0), f"schedule.octaves[{i}].scale", positive=True),
                "steps": _need_int(entry.get("steps", demons["steps"]), f"schedule.octaves[{i}].steps", 1),
                "step_size": _need_number(
                    entry.get("step_size", demons["tau"]), f"schedule.octaves[{i}].step_size", positive=True
                ),
            }
        )
    jitter = _need_number(section.get("jitter_fraction", 0.0), "schedule.jitter_fraction", minimum=0.0)
    if jitter > 0.3:
        raise ConfigError(f"schedule.jitter_fraction must be <= 0.3, got {jitter}")
    return {"octaves": resolved, "jitter_fraction": jitter}


def _resolve_output(section, base: Path) -> dict:
    section = _need_dict(section if section is not None else {}, "output")
    _reject_unknown(section, ("image", "metrics"), "output")
    return {
        "image": _resolve_path(section.get("image", "preimage.pgm"), base, "output.image", must_exist=False),
        "metrics": _resolve_path(section.get("metrics", "metrics.csv"), base, "output.metrics", must_exist=False),
    }


def resolve_config(raw: dict, base_dir) -> tuple[dict, Network]:
    """Validate, fill defaults, resolve names and paths. Returns the resolved
    config plus the loaded network (needed again for the run itself)."""
    raw = _need_dict(raw, "config")
    _reject_unknown(raw, _SECTIONS, "config")
    base = Path(base_dir)
    if "model" not in raw:
        raise ConfigError("config needs a model section")
    if "objective" not in raw:
        raise ConfigError("config needs an objective section")
    model = _resolve_model(raw["model"], base)
    try:
        net = load_model_section(model)
    except FormatError as exc:
        raise ConfigError(f"cannot load model: {exc}") from exc
    objective = _resolve_objective(raw["objective"], net, base)
    demons = _resolve_demons(raw.get("demons"))
    resolved = {
        "model": model,
        "objective": objective,
        "regularizer": _resolve_regularizer(raw.get("regularizer")),
        "demons": demons,
        "schedule": _resolve_schedule(raw.get("schedule"), demons),
        "output": _resolve_output(raw.get("output"), base),
    }
    return resolved, net


@dataclass(frozen=True, eq=False)
class RunPlan:
    net: Network
    objective: ObjectiveSpec
    config: DemonsConfig
    schedule: OctaveSchedule
    output_image: str
    output_metrics: str
    init_shape: tuple | None = None


def assemble_run(resolved: dict, net: Network) -> RunPlan:
    """Build the concrete run pieces from a resolved config."""
    obj = resolved["objective"]
    init_shape = None
    if obj["kind"] == "inversion":
        target_image = decode_ppm(obj["target"])
        target = forward(net, target_image, obj["layer"])
        objective = ObjectiveSpec("inversion", layer=obj["layer"], target=target, p=obj["p"], z=obj["z"])
        init_shape = target_image.shape
    else:
        objective = ObjectiveSpec("activation_max", layer=obj["layer"], unit=obj["unit"], z=obj["z"])
    reg = resolved["regularizer"]
    config = DemonsConfig(
        step_size=resolved["demons"]["tau"],
        steps=resolved["demons"]["steps"],
        fluid_kernel=build_kernel(resolved["demons"]["fluid"]),
        elastic_kernel=build_kernel(resolved["demons"]["elastic"]),
        regularizer=RegularizerSpec(reg["kind"], reg["lambda"], reg["epsilon"]),
        clamp=resolved["demons"]["clamp"],
        seed=resolved["demons"]["seed"],
    )
    schedule = OctaveSchedule(
        tuple(OctaveStage(o["scale"], o["steps"], o["step_size"]) for o in resolved["schedule"]["octaves"]),
        resolved["schedule"]["jitter_fraction"],
    )
    return RunPlan(
        net,
        objective,
        config,
        schedule,
        resolved["output"]["image"],
        resolved["output"]["metrics"],
        init_shape,
    )


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)
