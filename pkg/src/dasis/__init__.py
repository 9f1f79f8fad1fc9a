"""Link-level simulator and optimizer for a delay-augmented stacked surface."""

from .channel import (
    ChannelRealization,
    TemporalTaps,
    add_awgn,
    build_vector_channel,
    convolve_channel,
    default_temporal_taps,
    draw_channel,
    rician_spatial_channel,
)
from .equalizers import (
    UnstableChannelError,
    apply_fir,
    channel_zeros,
    ensure_stable_inverse,
    fir_from_iir,
    noiseless_zf_pipeline,
    zf_iir_equalize,
)
from .geometry import (
    SPEED_OF_LIGHT,
    PropagationMatrix,
    SisGeometry,
    combining_vector,
    element_positions,
    inter_layer_matrix,
    make_geometry,
    material_delay,
    rs_coefficient,
)
from .montecarlo import (
    BerCurve,
    BerPoint,
    StopRule,
    bpsk_detect,
    bpsk_modulate,
    estimate_ber,
    read_curve_csv,
    snr_sweep,
    write_curve_csv,
)
from .optimizer import (
    OptimizationResult,
    OptimizerHyperparams,
    TiedDominantTapError,
    finite_difference_gradient,
    gradient_descent_phases,
    hybrid_optimize,
    phase_gradient,
    random_delay_draw,
    surrogate_loss,
)
from .pipelines import DaSisPipeline, DigitalPipeline, awgn_pipeline
from .surface import (
    GuardBudgetError,
    SisConfig,
    SurfaceStack,
    apply_delay_bits,
    apply_layer,
    build_stack,
    effective_response,
    load_config,
    pad_input,
    propagate,
    save_config,
)

__version__ = "0.1.0"
