"""Numerical laboratory for the classical-to-quantum correspondence on
Gaussian ensembles of fields over a finite-dimensional real Hilbert space."""

__version__ = "0.1.0"

from .correspondence import (
    DensityOperator,
    ObservableMultiple,
    generalized_average,
    quantum_average,
    t2n_variable,
    t_state,
    t_state_extended,
    t_variable,
    variables_equivalent,
)
from .functionals import (
    CosQuadMinusOne,
    EvenPolynomial,
    Functional,
    Quadratic,
    SinQuad,
    SymmetricForm,
    amplify,
    quadratic_growth_check,
)
from .gaussian import (
    AlphaClass,
    GaussianState,
    SampleBatch,
    chebyshev_tail,
    dispersion,
    fourier_transform,
    make_gaussian,
    pure_state_measure,
    sample,
    scale_measure,
)
from .hilbert import (
    SpectralDecomposition,
    outer_product,
    spectral_decompose,
    symmetric_from_entries,
    trace,
    trace_product,
)
from .wick import (
    enumerate_pairings,
    gaussian_integral_multilinear,
    moment_form,
    moment_form_eval,
    moment_mc_check,
    trace_forms,
)
from .experiments import (
    ExperimentConfig,
    SecondMomentState,
    alpha_sweep,
    analytic_average,
    closed_form_average,
    finite_qm_demo,
    mc_average,
    nongaussian_experiment,
    pure_state_experiment,
    sub_alpha_states,
)

__all__ = [
    "AlphaClass", "CosQuadMinusOne", "DensityOperator", "EvenPolynomial",
    "ExperimentConfig", "Functional", "GaussianState", "ObservableMultiple",
    "Quadratic", "SampleBatch", "SecondMomentState", "SinQuad",
    "SpectralDecomposition", "SymmetricForm", "alpha_sweep", "amplify",
    "analytic_average", "chebyshev_tail", "closed_form_average", "dispersion",
    "enumerate_pairings", "finite_qm_demo", "fourier_transform",
    "gaussian_integral_multilinear", "generalized_average", "make_gaussian",
    "mc_average", "moment_form", "moment_form_eval", "moment_mc_check",
    "nongaussian_experiment", "outer_product", "pure_state_experiment",
    "pure_state_measure", "quadratic_growth_check", "quantum_average",
    "sample", "scale_measure", "spectral_decompose", "sub_alpha_states",
    "symmetric_from_entries", "t2n_variable", "t_state", "t_state_extended",
    "t_variable", "trace", "trace_forms", "trace_product",
    "variables_equivalent",
]
