"""Gradient flows of higher-order normal-derivative energies on closed
plane curves: symbolic Euler-Lagrange derivation, stiff semi-implicit
integration, second-variation spectra, and convergence monitoring."""

from .errors import (
    ConfigError,
    ConstantInput,
    DegenerateCurve,
    HyperflowError,
    InsufficientDecay,
    JetOrderError,
    NotCritical,
    OutOfTubularNeighborhood,
    ResolutionExceeded,
    StepFailure,
    StepTooSmall,
)
from .jets import (
    DiffPoly,
    FrenetVector,
    JetVar,
    circle_euler_lagrange,
    euler_lagrange_poly,
    first_variation,
    frenet_expand,
    fvar,
    integrand,
    kvar,
    normal_variation,
    second_variation,
)
from .curves import (
    ClosedCurve,
    CurvatureJet,
    GeometricData,
    circle,
    curvature_jet,
    ellipse,
    gn_interpolation_check,
    measure,
    random_curve,
    resample_uniform,
)
from .energy import circle_energy, energy_direct, energy_via_jet, quadrature_weights
from .gradient import discrete_gradient, euler_lagrange, gradient_norm
from .flow import FlowConfig, FlowState, FlowTrace, RunResult, run, step
from .stability import (
    SecondVariationMatrix,
    SpectrumResult,
    assemble,
    coercivity_check,
    displace_normal,
    refine_critical,
    shifted_leading_operator,
    spectrum,
)
from .convergence import (
    CauchyReport,
    CompactSetReport,
    HeightFunction,
    LojaReport,
    cauchy_tracker,
    check_H_decay,
    compact_set_tracker,
    estimate_limit_energy,
    fit_exponent,
    height_over,
)

__version__ = "0.1.0"
