"""PCM quantization of unit-norm tight frame expansions."""
from .frames import (
    DualFrame,
    Frame,
    FramePath,
    SingularFrameError,
    canonical_dual,
    equidistribution_metric,
    frame_path_sample,
    funtf_equidistributed,
    harmonic_frame,
    monomial_probes,
    verify_tight,
)
from .integrals import (
    MAGIC_RATIO,
    RadialSpec,
    avg_error_direct,
    avg_error_fourier,
    delta_integral_2d,
    delta_integral_highd,
    find_rstar,
    hr_fourier,
    sphere_limit_error,
)
from .pcm import NonTightFrameError, error, mse_wnh, quantize, reconstruct_quantized, wnh_simulate
from .seqtools import discrepancy, erdos_turan_bound, error_via_abel, frame_variation, koksma_check

__version__ = "0.1.0"
