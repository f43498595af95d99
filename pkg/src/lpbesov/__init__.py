"""Littlewood-Paley analysis of Besov regularity for finite self-adjoint operators."""

from .besov import (
    BesovParams,
    GFunctionParams,
    LemmaWeights,
    besov_norm_dyadic,
    besov_seminorm_integral,
    compute_G,
    decay_slope,
    equivalence_report,
    filtered_operator_norm,
    lemma32_upper_bound,
    modulus_of_continuity,
    theorem42_lower_margin,
)
from .calculus import (
    BandComponents,
    ChebyshevFilter,
    SpectralFunction,
    apply_function,
    apply_function_chebyshev,
    apply_semigroup_difference,
    bandlimited_signal,
    bernstein_check,
    calderon_reconstruct,
    filter_bank_apply,
    heat_symbol,
    is_bandlimited,
    pw_project,
    semigroup_apply,
)
from .errors import NumericalError, ValidationError
from .filters import (
    FilterBank,
    WindowPair,
    eval_psi,
    make_filter_bank,
    make_window_pair,
    verify_partition,
)
from .operators import (
    EigenDecomposition,
    Operator,
    Signal,
    build_laplacian,
    eigendecompose,
    eigenvector_signal,
    load_operator,
    load_signal,
    random_signals,
    sobolev_norm,
    spectral_bound,
    spectral_coefficients,
)

__version__ = "0.1.0"
