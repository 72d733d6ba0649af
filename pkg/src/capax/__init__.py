"""Capacity-achieving discrete inputs for peak-power-constrained scalar channels."""

from .channels import (
    ChannelModel,
    GaussianAdditiveSpec,
    GenericAdditiveSpec,
    RayleighSpec,
    additive_channel,
    gaussian_channel,
    laplace_noise,
    rayleigh_channel,
    tabulated_noise,
    uniform_noise,
)
from .conditions import (
    EnvelopeReport,
    check_conditions,
    gamma_bound,
    rayleigh_envelopes,
    verify_additive_d_constant,
    verify_envelope,
    verify_nonconstant_kl,
    verify_q_log_q_integrable,
)
from .infodens import (
    DiscreteInput,
    FunctionalValues,
    conditional_entropy_density,
    kl_divergence,
    marginal_entropy_density,
    marginal_info_density,
    mutual_information,
    output_density,
    weak_derivative,
)
from .quad import DEFAULT_SPEC, Interval, QuadratureSpec, integrate, truncate_domain
from .solver import (
    KTCertificate,
    SolveOptions,
    SolveResult,
    cross_optimum_check,
    kt_check,
    optimize_fixed_n,
    solve_capacity,
)

__version__ = "0.1.0"
