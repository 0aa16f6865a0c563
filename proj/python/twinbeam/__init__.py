"""Twin-beam correlation imaging: hologram design, correlation prediction,
frame synthesis and decoding."""

from ._core import (
    BoundsError,
    ConfigError,
    ContractError,
    DomainError,
    IoError,
    OpticalConfig,
    PipelineConfig,
    SizingError,
    TwinbeamError,
    WraparoundError,
    cost,
    dequantize,
    estimate_squeezing,
    fidelity,
    forward_model,
    glyph_target,
    hologram_pump,
    optimize,
    predict,
    predict_cross_correlation,
    pump_self_convolution,
    quantize_8bit,
    sample_photodiode_trace,
    simulate_and_decode,
    temporal_difference_noise,
    zero_order_fraction,
)

__version__ = "0.1.0"
