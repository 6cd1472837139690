"""Approximate SINR/SNR laws, SER and high-SNR metrics for MMSE and ZF
receivers over macrodiversity Rayleigh channels."""

from .errors import (
    DegenerateRootsError,
    DimensionError,
    MacrodivError,
    QuadratureError,
    SingularProfileError,
    SizeLimitError,
)
from .linalg import esf, esf_all, perm_rect, perm_square
from .mixture import ExponentialMixture, mixture_from_polynomial
from .mmse import mmse_denominator_coeffs, mmse_k0_terms, mmse_mixture, mmse_numerator
from .montecarlo import empirical_cdf, mmse_sinr, receiver_samples, sample_channels, semi_analytic_ser, zf_snr
from .profile import (
    PowerProfile,
    Scenario,
    UserView,
    builtin_profile,
    generate_drop,
    load_profile,
    normalize_columns,
    save_profile,
    user_view,
)
from .ser import ModulationSpec, mmse_high_snr, ser_from_mixture, zf_high_snr
from .zf import zf_denominator_coeffs, zf_k0, zf_mixture, zf_special_case_rate

__version__ = "0.1.0"
