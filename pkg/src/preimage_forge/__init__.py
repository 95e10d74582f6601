"""Feature pre-image search for small convolutional networks.

Builds tiny deterministic CNN classifiers, then recovers images that
reproduce a chosen feature code (inversion) or excite a chosen unit
(activation maximization) with a smoothed fixed-step descent that can
run over octave schedules with pixel jitter.
"""

from .cnn import (
    LAYER_KINDS,
    MODEL_MAGIC,
    FeatureCode,
    LayerSpec,
    Network,
    affine_norm,
    avgpool_global,
    backward_input,
    build_network,
    conv,
    dense,
    densish,
    forward,
    layer_index,
    load_model,
    logits_batch,
    manifest_bytes,
    maxpool,
    model_manifest,
    relu,
    replace_weights,
    save_model,
    vggish,
)
from .config import (
    BUILTIN_ARCHS,
    RunPlan,
    assemble_run,
    build_kernel,
    canonical_json,
    load_config,
    resolve_config,
)
from .data import (
    CANVAS_SIDE,
    CLASS_NAMES,
    Dataset,
    dump_dataset,
    load_dataset,
    split_dataset,
    synth_dataset,
)
from .demons import (
    MAX_JITTER_FRACTION,
    METRICS_FIELDS,
    DemonsConfig,
    OctaveSchedule,
    OctaveStage,
    RunResult,
    StepMetrics,
    demons_step,
    jitter_shift,
    read_metrics_csv,
    run,
    write_metrics_csv,
)
from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    FitError,
    FormatError,
    NumericalError,
    ParameterError,
    PreimageForgeError,
)
from .evaluate import DEFAULT_STEPS, PRESET_NAMES, evaluate_models, preset_config, thread_count
from .grid import (
    BOUNDARY_RULES,
    Image,
    convolve,
    decode_ppm,
    encode_ppm,
    write_ppm,
    quantize_bytes,
    resample,
    resample_to,
)
from .kernels import (
    KERNEL_KINDS,
    Kernel,
    custom_kernel,
    dirac,
    fit_kernel_parameter,
    gaussian_kernel,
    read_kernel_csv,
    sobolev_kernel,
    write_kernel_csv,
)
from .objectives import (
    OBJECTIVE_KINDS,
    ObjectiveSpec,
    actmax_term,
    inversion_term,
    objective_term,
    resolve_z,
)
from .regularizers import (
    REGULARIZER_KINDS,
    RegularizerSpec,
    dirichlet,
    divergence,
    forward_differences,
    regularizer_term,
    tv,
)
from .training import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    TrainResult,
    accuracy,
    predict,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BOUNDARY_RULES",
    "BUILTIN_ARCHS",
    "CANVAS_SIDE",
    "CLASS_NAMES",
    "ConfigError",
    "DEFAULT_BATCH_SIZE",
    "DEFAULT_EPOCHS",
    "DEFAULT_LEARNING_RATE",
    "DEFAULT_STEPS",
    "DataError",
    "Dataset",
    "DemonsConfig",
    "DimensionError",
    "FeatureCode",
    "FitError",
    "FormatError",
    "Image",
    "KERNEL_KINDS",
    "Kernel",
    "LAYER_KINDS",
    "LayerSpec",
    "MAX_JITTER_FRACTION",
    "METRICS_FIELDS",
    "MODEL_MAGIC",
    "Network",
    "NumericalError",
    "OBJECTIVE_KINDS",
    "ObjectiveSpec",
    "OctaveSchedule",
    "OctaveStage",
    "PRESET_NAMES",
    "ParameterError",
    "PreimageForgeError",
    "REGULARIZER_KINDS",
    "RegularizerSpec",
    "RunPlan",
    "RunResult",
    "StepMetrics",
    "TrainResult",
    "accuracy",
    "actmax_term",
    "affine_norm",
    "assemble_run",
    "avgpool_global",
    "backward_input",
    "build_kernel",
    "build_network",
    "canonical_json",
    "conv",
    "convolve",
    "custom_kernel",
    "decode_ppm",
    "demons_step",
    "dense",
    "densish",
    "dirac",
    "dirichlet",
    "divergence",
    "dump_dataset",
    "encode_ppm",
    "evaluate_models",
    "fit_kernel_parameter",
    "forward",
    "forward_differences",
    "gaussian_kernel",
    "inversion_term",
    "jitter_shift",
    "layer_index",
    "load_config",
    "load_dataset",
    "load_model",
    "logits_batch",
    "manifest_bytes",
    "maxpool",
    "model_manifest",
    "objective_term",
    "predict",
    "preset_config",
    "quantize_bytes",
    "read_kernel_csv",
    "read_metrics_csv",
    "regularizer_term",
    "relu",
    "replace_weights",
    "resample",
    "resample_to",
    "resolve_config",
    "resolve_z",
    "run",
    "save_model",
    "sobolev_kernel",
    "split_dataset",
    "synth_dataset",
    "thread_count",
    "train",
    "tv",
    "vggish",
    "write_kernel_csv",
    "write_metrics_csv",
    "write_ppm",
]
