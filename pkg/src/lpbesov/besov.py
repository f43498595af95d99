"""Besov regularity quantities: modulus of continuity, the two norms whose
equivalence is the main theorem, and the supporting diagnostics.

Both norms are computed for one (signal, parameter) pair at desk scale:

  integral side : ||f|| + ( int_0^1 (s^-alpha Omega_r(s,f))^q ds/s )^(1/q)
  dyadic side   : ||f|| + ( sum_j (2^(j alpha) ||psi_j(A) f||)^q )^(1/q)

with sup/max modifications for q = infinity.  Divergent integrals are
reported through a sentinel flag, never raised: the equivalence theorem is
conditional on finiteness and the reports mirror that conditionality.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .calculus import DEFAULT_SEMIGROUP_C
from .errors import ValidationError
from .filters import eval_psi
from .operators import Signal, as_values

# Spectral values at or below this floor are treated as kernel directions
# (the paper assumes a strictly positive operator; clamped graph-Laplacian
# kernels would otherwise blow up negative powers in the G-function).
KERNEL_FLOOR = 1e-9

# Tail-slope threshold below which the truncated integral is flagged as
# divergent: the integrand fails to decay toward s_min.
DIVERGENCE_SLOPE_TOL = 0.02

# Relative level below which a modulus profile counts as identically zero:
# eigensolver cross-talk leaves O(1e-15) coefficients on kernel signals.
ZERO_MODULUS_RTOL = 1e-13

DEFAULT_S_POINTS = 512
DEFAULT_TAU_SAMPLES = 16


def default_r(alpha):
    """Smallest difference order compatible with the r-conditions.

    Prefers r = ceil(alpha) (the definition wants r >= alpha) when that
    still satisfies r < 2 alpha; otherwise backs off one, floored at 1.
    """
    c = math.ceil(alpha)
    if c < 2 * alpha:
        return max(1, c)
    return max(1, c - 1)


@dataclass
class BesovParams:
    """Smoothness exponent alpha, aggregation exponent q, difference order r.

    q = math.inf selects the sup/max modifications.  s_min = None resolves
    to 2^-(J+8) for the operator at hand, where 2^J is the dyadic cap.
    """

    alpha: float
    q: float
    r: int | None = None
    s_min: float | None = None
    s_points: int = DEFAULT_S_POINTS
    tau_samples: int = DEFAULT_TAU_SAMPLES
    experimental: bool = False

    def __post_init__(self):
        if self.r is None:
            self.r = default_r(self.alpha)
        self.r = int(self.r)

    def validate(self):
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if not self.q > 0:
            raise ValidationError(f"q must be positive, got {self.q}")
        if self.alpha <= 0.5 and not self.experimental:
            raise ValidationError(
                f"alpha={self.alpha:g} violates the alpha > 1/2 restriction of the "
                "norm-equivalence theorem; pass experimental=True to explore it anyway"
            )
        if self.q < 1 and not self.experimental:
            raise ValidationError(
                f"q={self.q:g} < 1 is outside the proven range; pass experimental=True"
            )
        if self.r < 1:
            raise ValidationError("difference order r must be a positive integer")
        if self.r < self.alpha:
            warnings.warn(
                f"r={self.r} < alpha={self.alpha:g}: the modulus definition wants "
                "r >= alpha; the integral may diverge at 0",
                stacklevel=2,
            )
        if self.s_points < 8:
            raise ValidationError("s_points must be at least 8")
        return self

    def validate_for_equivalence(self):
        self.validate()
        if not self.r < 2 * self.alpha:
            raise ValidationError(
                f"equivalence runs require r < 2*alpha (got r={self.r}, alpha={self.alpha:g})"
            )
        return self

    def resolved_s_min(self, lambda_max):
        if self.s_min is not None:
            return float(self.s_min)
        j_eff = 0
        while 2.0**j_eff < lambda_max:
            j_eff += 1
        return 2.0 ** -(j_eff + 8)

    def as_dict(self):
        return {
            "alpha": self.alpha,
            "q": "inf" if math.isinf(self.q) else self.q,
            "r": self.r,
            "s_min": self.s_min,
            "s_points": self.s_points,
            "tau_samples": self.tau_samples,
            "experimental": self.experimental,
        }


def modulus_of_continuity(decomp, f, r, s, c=DEFAULT_SEMIGROUP_C):
    """Omega_r(s, f) = sup_{0 < tau <= s} ||(I - T_tau)^r f||.

    The spectral factor (1 - exp(-c tau lambda))^r is nondecreasing in tau,
    so the sup is attained at tau = s and evaluated exactly there.  The
    sampled-tau cross-check lives in the test suite.
    """
    if not 0 < s <= 1:
        raise ValidationError(f"s must lie in (0, 1], got {s}")
    return float(modulus_profile(decomp, f, r, np.array([s]), c)[0])


def modulus_profile(decomp, f, r, s_values, c=DEFAULT_SEMIGROUP_C):
    """Omega_r at many scales at once: rows of (1 - e^(-c s lambda))^r."""
    r = int(r)
    if r < 1:
        raise ValidationError("difference order r must be >= 1")
    e = decomp.coefficients(f)
    s_values = np.asarray(s_values, dtype=float)
    factors = (1.0 - np.exp(-c * np.outer(s_values, decomp.eigenvalues))) ** r
    return np.sqrt(factors**2 @ e**2)


def modulus_by_sampling(decomp, f, r, s, tau_samples, c=DEFAULT_SEMIGROUP_C, seed=0):
    """Audit path for the sup: max over sampled tau in (0, s]."""
    rng = np.random.default_rng(seed)
    taus = np.concatenate([[s], s * rng.uniform(0.0, 1.0, size=max(0, tau_samples - 1))])
    taus = taus[taus > 0]
    return float(modulus_profile(decomp, f, r, taus, c).max())


@dataclass
class SeminormResult:
    """Integral-side seminorm term with the divergence sentinel."""

    value: float
    divergent: bool
    exact_zero: bool
    tail_slope: float | None
    s_min: float
    s_points: int

    def as_dict(self):
        return {
            "value": self.value,
            "divergent": self.divergent,
            "exact_zero": self.exact_zero,
            "tail_slope": self.tail_slope,
            "s_min": self.s_min,
            "s_points": self.s_points,
        }


def besov_seminorm_integral(decomp, f, params, c=DEFAULT_SEMIGROUP_C):
    """( int (s^-alpha Omega_r)^q ds/s )^(1/q) on the truncated log grid.

    Quadrature is uniform trapezoid in t = log s on [log s_min, 0]; the
    integrand is smooth there and the dyadic structure is log-uniform.  For
    q = inf the sup over the grid is returned.  A non-decaying integrand at
    the small-s end flags the result as divergent (truncated value is still
    reported).
    """
    params.validate()
    s_min = params.resolved_s_min(decomp.lambda_max)
    if not 0 < s_min < 1:
        raise ValidationError(f"s_min must lie in (0, 1), got {s_min}")
    t = np.linspace(np.log(s_min), 0.0, params.s_points)
    s = np.exp(t)
    om = modulus_profile(decomp, f, params.r, s, c)
    nf = float(np.linalg.norm(as_values(f)))
    if om.max() <= ZERO_MODULUS_RTOL * nf:
        return SeminormResult(0.0, False, True, None, s_min, params.s_points)
    g = s ** (-params.alpha) * om
    tail_slope = _tail_slope(s, g)
    if math.isinf(params.q):
        value = float(g.max())
        divergent = tail_slope < -DIVERGENCE_SLOPE_TOL
    else:
        value = float(np.trapezoid(g**params.q, t) ** (1.0 / params.q))
        divergent = tail_slope <= DIVERGENCE_SLOPE_TOL
    return SeminormResult(value, bool(divergent), False, tail_slope, s_min, params.s_points)


def _tail_slope(s, g, decades=1.0):
    """Log-log slope of the integrand over the smallest `decades` of s."""
    cut = s <= s[0] * 10.0**decades
    sl, gl = np.log(s[cut]), np.log(np.maximum(g[cut], 1e-300))
    return float(np.polyfit(sl, gl, 1)[0])


@dataclass
class DyadicNorm:
    """Dyadic-side norm: per-band energies and their weighted aggregation."""

    total: float
    term: float
    per_band: np.ndarray
    weighted: np.ndarray

    def as_dict(self):
        return {
            "total": self.total,
            "term": self.term,
            "per_band": self.per_band.tolist(),
            "weighted": self.weighted.tolist(),
        }


def band_norms(decomp, bank, f):
    """||psi_j(A) f|| for j = 0..J, via Plancherel coefficients."""
    e = decomp.coefficients(f)
    return np.array(
        [
            np.sqrt(float((eval_psi(bank, j, decomp.eigenvalues) ** 2 * e**2).sum()))
            for j in bank.levels
        ]
    )


def besov_norm_dyadic(decomp, bank, f, params):
    """||f|| + (sum_j (2^(j alpha) ||psi_j(A) f||)^q)^(1/q), max for q=inf."""
    if 2.0**bank.J < decomp.lambda_max:
        raise ValidationError("filter bank does not cover the spectrum")
    params.validate()
    norms = band_norms(decomp, bank, f)
    weighted = 2.0 ** (params.alpha * np.arange(bank.J + 1)) * norms
    if math.isinf(params.q):
        term = float(weighted.max())
    else:
        term = float((weighted**params.q).sum() ** (1.0 / params.q))
    nf = float(np.linalg.norm(as_values(f)))
    return DyadicNorm(nf + term, term, norms, weighted)


@dataclass
class DecayFit:
    """Least-squares slope of log Omega_r(s) against log s."""

    slope: float | None
    intercept: float | None
    exact_zero: bool
    r: int

    def as_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "exact_zero": self.exact_zero,
            "r": self.r,
        }


def decay_slope(decomp, f, r, s_values, c=DEFAULT_SEMIGROUP_C):
    """Fitted decay rate of the modulus; ~r for bandlimited signals.

    s_values must span at least two decades.  Signals in the kernel of A
    have Omega identically zero and are reported as exact zeros.
    """
    s_values = np.asarray(s_values, dtype=float)
    if s_values.size < 3 or s_values.max() / s_values.min() < 100.0:
        raise ValidationError("s_values must span at least two decades")
    om = modulus_profile(decomp, f, r, s_values, c)
    if om.max() <= ZERO_MODULUS_RTOL * float(np.linalg.norm(as_values(f))):
        return DecayFit(None, None, True, int(r))
    coef = np.polyfit(np.log(s_values), np.log(om), 1)
    return DecayFit(float(coef[0]), float(coef[1]), False, int(r))


@dataclass
class FilteredNormBound:
    """sup_{tau <= s} ||(I-T_tau)^r psi_j(A)||_op and its normalized margins.

    margin_elementary divides by (s 2^(j+1))^r and is provably <= 1;
    margin_band_scaled divides by s^r 2^((j+1)r/2), the sharper scaling
    claimed in the source estimates, and is reported without being
    asserted.
    """

    value: float
    margin_elementary: float
    margin_band_scaled: float
    j: int
    r: int
    s: float

    def as_dict(self):
        return {
            "value": self.value,
            "margin_elementary": self.margin_elementary,
            "margin_band_scaled": self.margin_band_scaled,
            "j": self.j,
            "r": self.r,
            "s": self.s,
        }


def filtered_operator_norm(bank, j, r, s, decomp=None, grid_points=4096, c=DEFAULT_SEMIGROUP_C):
    """Exact operator norm of (I - T_s)^r psi_j(A) over the spectrum or a grid.

    The spectral factor is monotone in tau so the sup over tau <= s sits at
    tau = s; the norm is then a max of (1 - e^(-c s lambda))^r psi_j(lambda)
    over the spectrum (decomp given) or a dense grid on the band support.
    """
    if not 0 <= j <= bank.J:
        raise ValidationError(f"level {j} outside [0, {bank.J}]")
    if not 0 < s <= 1:
        raise ValidationError(f"s must lie in (0, 1], got {s}")
    r = int(r)
    if decomp is not None:
        lam = decomp.eigenvalues
    else:
        lo, hi = bank.band_support(j)
        lam = np.linspace(lo, hi, int(grid_points))
    vals = (1.0 - np.exp(-c * s * lam)) ** r * eval_psi(bank, j, lam)
    value = float(vals.max())
    return FilteredNormBound(
        value=value,
        margin_elementary=value / (s * 2.0 ** (j + 1)) ** r,
        margin_band_scaled=value / (s**r * 2.0 ** ((j + 1) * r / 2.0)),
        j=j,
        r=r,
        s=float(s),
    )


@dataclass
class LemmaWeights:
    """Geometric weights w_j = 2^(k j), c_j = 2^(m j) with k < 0, k + m >= 0."""

    k: float
    m: float

    def __post_init__(self):
        if not self.k < 0:
            raise ValidationError(f"weight exponent k must be negative, got {self.k}")
        if self.k + self.m < 0:
            raise ValidationError(f"infeasible weights: k+m = {self.k + self.m:g} < 0")

    def w(self, j):
        return 2.0 ** (self.k * np.asarray(j, dtype=float))

    def c(self, j):
        return 2.0 ** (self.m * np.asarray(j, dtype=float))

    def upper_bound_feasible(self, params):
        """k + m q <= q (alpha - r/2), the constraint used in the upper-bound
        direction of the equivalence (m <= alpha - r/2 as q -> inf)."""
        t = params.alpha - params.r / 2.0
        if math.isinf(params.q):
            return self.m <= t + 1e-12
        return self.k + self.m * params.q <= params.q * t + 1e-12

    @classmethod
    def default(cls, params, delta=0.01):
        """Feasible weights near the corner of the admissible region."""
        t = params.alpha - params.r / 2.0
        if t <= 0:
            raise ValidationError(
                f"no feasible weights: alpha - r/2 = {t:g} <= 0 (need r < 2 alpha)"
            )
        for attempt in range(4):
            d = delta / 10**attempt
            k = -d
            m_hi = t if math.isinf(params.q) else (params.q * t - k) / params.q
            m = min(-k + d, m_hi)
            if k + m >= 0:
                return cls(k, m)
        raise ValidationError("could not project lemma weights to feasibility")

    def as_dict(self):
        return {"k": self.k, "m": self.m}


@dataclass
class Lemma32Result:
    """Both sides of the filtered upper bound for the modulus, per scale s."""

    s_values: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray
    weights: LemmaWeights

    def max_ratio(self):
        return float(self.ratios.max()) if self.ratios.size else 0.0

    def as_dict(self):
        return {
            "s_values": self.s_values.tolist(),
            "lhs": self.lhs.tolist(),
            "rhs": self.rhs.tolist(),
            "ratios": self.ratios.tolist(),
            "weights": self.weights.as_dict(),
        }


def lemma32_upper_bound(
    decomp, bank, f, params, weights=None, s_values=(0.5, 0.25, 0.125), c=DEFAULT_SEMIGROUP_C
):
    """Diagnostic pair (Omega_r(s,f)^q, weighted dyadic bound) over scales.

    The bound reads Omega_r(s,f)^q <= C s^(qr) sum_j (2^(jr/2) w_j^(1/q) c_j
    ||psi_j(A) f||)^q; for q = inf the sum becomes a max and the w factor
    drops out.  Only the empirical constant lhs/rhs is reported.
    """
    params.validate()
    if weights is None:
        weights = LemmaWeights.default(params)
    s_values = np.asarray(s_values, dtype=float)
    om = modulus_profile(decomp, f, params.r, s_values, c)
    norms = band_norms(decomp, bank, f)
    j = np.arange(bank.J + 1)
    base = 2.0 ** (j * params.r / 2.0) * weights.c(j) * norms
    if math.isinf(params.q):
        lhs = om
        rhs = s_values**params.r * base.max()
    else:
        lhs = om**params.q
        rhs = s_values ** (params.q * params.r) * (
            (weights.w(j) ** (1.0 / params.q) * base) ** params.q
        ).sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(rhs > 0, lhs / rhs, np.where(lhs == 0, 0.0, np.inf))
    return Lemma32Result(s_values, lhs, np.broadcast_to(rhs, lhs.shape).copy(), ratios, weights)


@dataclass
class GFunctionParams:
    """Parameters of the auxiliary kernel G used in the lower-bound direction."""

    alpha: float
    r: int
    n: int | None = None
    quad_limit: int = 200

    def __post_init__(self):
        if self.n is None:
            # smallest integer exponent with n > (r+1)/2
            self.n = int(self.r + 1) // 2 + 1
        self.n = int(self.n)
        if self.n < 1:
            raise ValidationError(f"G exponent n must be >= 1, got {self.n}")
        if not self.n > (self.r + 1) / 2.0:
            # G itself is well-defined; only the summed lower-bound direction
            # needs the larger exponent
            warnings.warn(
                f"n={self.n} <= (r+1)/2: the dyadic series in the lower-bound "
                "direction does not converge for this exponent",
                stacklevel=2,
            )
        if not (-self.alpha + self.r + 1) > 0:
            raise ValidationError(
                f"non-integrable exponent: need r - alpha + 1 > 0, got alpha={self.alpha:g}, r={self.r}"
            )

    def as_dict(self):
        return {"alpha": self.alpha, "r": self.r, "n": self.n}


def compute_G(g_params, lam, c=DEFAULT_SEMIGROUP_C):
    """G(lambda) = lambda^-n int_0^1 s^(-alpha+r+1) (1 - u(s lambda))^r ds/s.

    Adaptive quadrature; the integrand s^(r-alpha) (1-e^(-c s lambda))^r is
    integrable at 0 by the parameter invariant.
    """
    if lam <= 0:
        raise ValidationError(f"G is evaluated for lambda > 0, got {lam}")
    a, r = g_params.alpha, g_params.r

    def integrand(s):
        return s ** (r - a) * (1.0 - np.exp(-c * s * lam)) ** r

    value, _ = scipy.integrate.quad(integrand, 0.0, 1.0, limit=g_params.quad_limit)
    return float(lam ** (-g_params.n) * value)


@dataclass
class BandMargin:
    j: int
    margin: float
    band_norm: float

    def as_dict(self):
        return {"j": self.j, "margin": self.margin, "band_norm": self.band_norm}


def theorem42_lower_margin(decomp, bank, f, params, g_params, c=DEFAULT_SEMIGROUP_C):
    """Per-band ratio ||G(A) psi_j(A) f|| / (2^(j(-n+1-alpha+r)) ||psi_j(A) f||).

    Diagnostic for the lower-bound direction: margins should stay bounded
    away from zero and stable in j.  Eigenvalues at the kernel floor
    contribute nothing (the theory assumes a strictly positive operator).
    """
    e = decomp.coefficients(f)
    lam = decomp.eigenvalues
    g_vals = np.zeros_like(lam)
    positive = lam > KERNEL_FLOOR
    cache = {}
    for i in np.nonzero(positive)[0]:
        key = float(lam[i])
        if key not in cache:
            cache[key] = compute_G(g_params, key, c)
        g_vals[i] = cache[key]
    exponent = -g_params.n + 1 - params.alpha + params.r
    margins = []
    floor = 1e-14 * max(1.0, float(np.linalg.norm(e)))
    for j in bank.levels:
        w = eval_psi(bank, j, lam)
        bn = float(np.linalg.norm(w * e))
        if bn <= floor:
            continue
        gn = float(np.linalg.norm(g_vals * w * e))
        margins.append(BandMargin(j, gn / (2.0 ** (j * exponent) * bn), bn))
    if not margins:
        raise ValidationError("all bands empty: signal has no spectral mass")
    return margins


@dataclass
class EquivalenceReport:
    """Both Besov norms for one (signal, params) pair, with diagnostics."""

    label: str
    params: BesovParams
    signal_norm: float
    integral: SeminormResult
    dyadic: DyadicNorm
    integral_side: float
    dyadic_side: float
    ratio: float
    decay: DecayFit
    lemma_max_ratio: float
    semigroup_c: float
    window_sharpness: float
    zero_signal: bool = False
    per_band_norms: list = field(default_factory=list)

    def as_dict(self):
        return {
            "label": self.label,
            "params": self.params.as_dict(),
            "signal_norm": self.signal_norm,
            "integral_term": self.integral.as_dict(),
            "dyadic_term": self.dyadic.as_dict(),
            "integral_side": self.integral_side,
            "dyadic_side": self.dyadic_side,
            "ratio": self.ratio,
            "decay": self.decay.as_dict(),
            "lemma_max_ratio": self.lemma_max_ratio,
            "semigroup_c": self.semigroup_c,
            "window_sharpness": self.window_sharpness,
            "zero_signal": self.zero_signal,
            "per_band_norms": self.per_band_norms,
        }


def equivalence_report(decomp, bank, f, params, c=DEFAULT_SEMIGROUP_C, label=None):
    """Compute both sides of the norm equivalence and their ratio."""
    params.validate_for_equivalence()
    if label is None:
        label = f.label if isinstance(f, Signal) else "signal"
    nf = float(np.linalg.norm(as_values(f)))
    integral = besov_seminorm_integral(decomp, f, params, c)
    dyadic = besov_norm_dyadic(decomp, bank, f, params)
    integral_side = nf + integral.value
    dyadic_side = dyadic.total
    zero_signal = nf == 0.0
    ratio = integral_side / dyadic_side if dyadic_side > 0 else 1.0
    s_fit = np.logspace(-4, -1, 25)
    decay = decay_slope(decomp, f, params.r, s_fit, c)
    lemma = lemma32_upper_bound(decomp, bank, f, params, c=c)
    return EquivalenceReport(
        label=label,
        params=params,
        signal_norm=nf,
        integral=integral,
        dyadic=dyadic,
        integral_side=integral_side,
        dyadic_side=dyadic_side,
        ratio=float(ratio),
        decay=decay,
        lemma_max_ratio=lemma.max_ratio(),
        semigroup_c=c,
        window_sharpness=bank.windows.transition_sharpness,
        zero_signal=zero_signal,
        per_band_norms=dyadic.per_band.tolist(),
    )
