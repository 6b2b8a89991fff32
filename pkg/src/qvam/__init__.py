"""q-valued vector perceptron for identifying heavily distorted patterns."""

__version__ = "0.1.0"

from .codec import (
    Dimensions,
    KeyVector,
    QPattern,
    decode_key,
    encode_key,
    map_binary,
    read_patterns,
    required_digits,
    unmap_binary,
    write_patterns,
)
from .memory import (
    HebbNetwork,
    Identification,
    OpCounter,
    identify,
    identify_batch,
    load_network,
    local_field,
    oracle_identify,
    overlap,
    save_network,
    train,
    train_arrays,
)
from .analysis import (
    NoSignalError,
    TheoryInput,
    capacity,
    critical_distortion,
    effective_dim,
    error_probability,
    max_output_neurons,
    op_counts,
)
from .experiment import (
    CurvePoint,
    ExperimentConfig,
    NoiseSpec,
    baseline_scan_identify,
    compare_engines,
    distort,
    run_point,
    sweep_noise,
)
