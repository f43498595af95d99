"""Functional calculus of the operator: exact and Chebyshev paths.

The exact path acts on Plancherel coefficients through the
eigendecomposition.  The Chebyshev path evaluates a degree-K polynomial
interpolant of the symbol through matrix-vector products only, so it scales
to operators too large to eigendecompose.
"""

import os
import tempfile
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericalError, ValidationError
from .filters import eval_psi
from .operators import Signal, as_values

# The semigroup axioms force u(xi) = exp(-c xi); c is a convention recorded
# in every report, default 1 (heat semigroup).
DEFAULT_SEMIGROUP_C = 1.0

DEFAULT_CHEBYSHEV_DEGREE = 200


@dataclass(frozen=True)
class SpectralFunction:
    """A scalar symbol beta(xi) certified finite on an interval."""

    evaluator: Callable
    bounded_on: tuple
    name: str = "beta"

    def __call__(self, xi):
        return self.evaluator(np.asarray(xi, dtype=float))


def heat_symbol(t=1.0, c=DEFAULT_SEMIGROUP_C):
    """Symbol of T_t = u(tA) with u(xi) = exp(-c xi)."""
    if t < 0:
        raise ValidationError("semigroup time must be nonnegative")
    return SpectralFunction(lambda xi: np.exp(-c * t * xi), (0.0, np.inf), f"heat(t={t:g})")


def window_symbol(bank, j):
    return SpectralFunction(
        lambda xi: eval_psi(bank, j, xi), (0.0, np.inf), f"psi_{j}"
    )


def apply_function(decomp, beta, f):
    """beta(A) f through the eigendecomposition."""
    e = decomp.coefficients(f)
    vals = np.asarray(beta(decomp.eigenvalues), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = decomp.eigenvalues[~np.isfinite(vals)][0]
        raise NumericalError(f"symbol {getattr(beta, 'name', 'beta')} non-finite at xi={bad:g}")
    return decomp.synthesize(vals * e)


@dataclass(frozen=True)
class ChebyshevFilter:
    """Degree-K Chebyshev interpolant of a symbol on [lo, hi].

    Coefficients are for the Chebyshev basis mapped to [-1, 1]; tail is the
    largest coefficient magnitude in the top decile, a cheap convergence
    indicator.
    """

    degree: int
    interval: tuple
    coefficients: np.ndarray
    tail: float

    @classmethod
    def from_function(cls, beta, degree, lo, hi):
        """Interpolate at Chebyshev points of the second kind."""
        degree = int(degree)
        if degree < 1:
            raise ValidationError("chebyshev degree must be >= 1")
        if not hi > lo:
            raise ValidationError("chebyshev interval must have hi > lo")
        nodes = np.cos(np.pi * np.arange(degree + 1) / degree)
        xi = 0.5 * (hi - lo) * (nodes + 1.0) + lo
        vals = np.asarray(beta(xi), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NumericalError("symbol non-finite at a Chebyshev node")
        vander = np.polynomial.chebyshev.chebvander(nodes, degree)
        coeffs = np.linalg.solve(vander, vals)
        tail_len = max(1, (degree + 1) // 10)
        return cls(degree, (float(lo), float(hi)), coeffs, float(np.abs(coeffs[-tail_len:]).max()))

    def values(self, xi):
        """Evaluate the interpolant pointwise (diagnostics)."""
        lo, hi = self.interval
        x = 2.0 * (np.asarray(xi, dtype=float) - lo) / (hi - lo) - 1.0
        return np.polynomial.chebyshev.chebval(x, self.coefficients)

    def apply(self, op, f):
        """p(A) f by the three-term recurrence; only matvecs with A."""
        lo, hi = self.interval
        alpha = 2.0 / (hi - lo)
        shift = -(hi + lo) / (hi - lo)
        v = as_values(f)

        def amap(x):
            return alpha * op.matvec(x) + shift * x

        t_prev = v
        t_cur = amap(v)
        out = self.coefficients[0] * t_prev + self.coefficients[1] * t_cur
        for k in range(2, self.degree + 1):
            t_next = 2.0 * amap(t_cur) - t_prev
            out += self.coefficients[k] * t_next
            t_prev, t_cur = t_cur, t_next
        return out


def apply_function_chebyshev(op, beta, f, degree=DEFAULT_CHEBYSHEV_DEGREE, lam_hat=None):
    """Matrix-free beta(A) f on [0, lam_hat]; must agree with the exact path."""
    if lam_hat is None:
        raise ValidationError("lam_hat (spectral upper bound) is required")
    filt = ChebyshevFilter.from_function(beta, degree, 0.0, float(lam_hat))
    return filt.apply(op, f)


def semigroup_apply(decomp, f, t, c=DEFAULT_SEMIGROUP_C):
    """T_t f = u(tA) f with u(xi) = exp(-c xi)."""
    return apply_function(decomp, heat_symbol(t, c), f)


def apply_semigroup_difference(decomp, f, tau, r, c=DEFAULT_SEMIGROUP_C):
    """(I - T_tau)^r f applied spectrally in one pass.

    The spectral factor (1 - exp(-c tau lambda))^r is computed once per
    eigenvalue; repeated matrix applications would accumulate error.
    """
    if tau <= 0:
        raise ValidationError("tau must be positive")
    r = int(r)
    if r < 1:
        raise ValidationError("difference order r must be >= 1")
    e = decomp.coefficients(f)
    factor = (1.0 - np.exp(-c * tau * decomp.eigenvalues)) ** r
    return decomp.synthesize(factor * e)


@dataclass
class BandComponents:
    """Per-level filtered signals g_j = psi_j(A) f and the source norm."""

    bands: np.ndarray  # shape (J+1, n)
    source_norm: float
    label: str = "signal"

    @property
    def J(self):
        return self.bands.shape[0] - 1

    def band_norms(self):
        return np.linalg.norm(self.bands, axis=1)

    def energy_ratio(self):
        """sum_j ||g_j||^2 / ||f||^2; 1 up to roundoff for a covering bank."""
        if self.source_norm == 0.0:
            return 0.0
        return float((self.band_norms() ** 2).sum() / self.source_norm**2)

    def to_csv(self, path):
        header = ",".join(f"g_{j}" for j in range(self.J + 1))
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        os.close(fd)
        np.savetxt(tmp, self.bands.T, delimiter=",", header=header, comments="")
        os.replace(tmp, path)


def filter_bank_apply(decomp, bank, f):
    """All band components of f through the exact path."""
    _require_coverage(bank, decomp.lambda_max)
    e = decomp.coefficients(f)
    rows = [
        decomp.synthesize(eval_psi(bank, j, decomp.eigenvalues) * e) for j in bank.levels
    ]
    label = f.label if isinstance(f, Signal) else "signal"
    return BandComponents(np.vstack(rows), float(np.linalg.norm(as_values(f))), label)


def filter_bank_apply_chebyshev(op, bank, f, degree=DEFAULT_CHEBYSHEV_DEGREE):
    """Band components without eigendecomposition (matrix-free)."""
    hi = max(bank.lambda_max, 2.0**bank.J)
    rows = []
    for j in bank.levels:
        filt = ChebyshevFilter.from_function(window_symbol(bank, j), degree, 0.0, hi)
        rows.append(filt.apply(op, f))
    label = f.label if isinstance(f, Signal) else "signal"
    return BandComponents(np.vstack(rows), float(np.linalg.norm(as_values(f))), label)


def calderon_reconstruct(decomp, bank, f):
    """sum_j psi_j(A)^2 f; the exact reproducing identity."""
    _require_coverage(bank, decomp.lambda_max)
    e = decomp.coefficients(f)
    acc = np.zeros_like(e)
    for j in bank.levels:
        w = eval_psi(bank, j, decomp.eigenvalues)
        acc += w * (w * e)
    return decomp.synthesize(acc)


def calderon_reconstruct_chebyshev(op, bank, f, degree=DEFAULT_CHEBYSHEV_DEGREE):
    """Matrix-free Calderon sum: each band filter applied twice."""
    hi = max(bank.lambda_max, 2.0**bank.J)
    v = as_values(f)
    acc = np.zeros_like(v)
    for j in bank.levels:
        filt = ChebyshevFilter.from_function(window_symbol(bank, j), degree, 0.0, hi)
        acc += filt.apply(op, filt.apply(op, v))
    return acc


def pw_project(decomp, f, a, b):
    """Orthogonal projection onto the Paley-Wiener space PW_[a,b](A)."""
    if not (0 <= a < b):
        raise ValidationError(f"need 0 <= a < b, got [{a}, {b}]")
    e = decomp.coefficients(f)
    keep = (decomp.eigenvalues >= a) & (decomp.eigenvalues <= b)
    return decomp.synthesize(np.where(keep, e, 0.0))


def is_bandlimited(decomp, f, a, b, tol):
    """Whether the spectral mass outside [a, b] is below tol^2 ||f||^2.

    Returns (flag, leakage) where leakage is the outside mass sum of e_i^2.
    """
    if not (0 <= a < b):
        raise ValidationError(f"need 0 <= a < b, got [{a}, {b}]")
    e = decomp.coefficients(f)
    outside = (decomp.eigenvalues < a) | (decomp.eigenvalues > b)
    leakage = float((e[outside] ** 2).sum())
    total = float((e**2).sum())
    return leakage <= tol**2 * total, leakage


def bernstein_check(decomp, f, a, b, k):
    """||A^k f|| / (b^k ||f||) for f in PW_[a,b]; at most 1 up to roundoff."""
    ok, leakage = is_bandlimited(decomp, f, a, b, 1e-10)
    if not ok:
        raise ValidationError(f"signal not bandlimited to [{a}, {b}]: leakage {leakage:.3e}")
    e = decomp.coefficients(f)
    nf = np.linalg.norm(e)
    if nf == 0.0:
        return 0.0
    num = np.linalg.norm(decomp.eigenvalues ** int(k) * e)
    return float(num / (b ** int(k) * nf))


def bandlimited_signal(decomp, a, b, seed=0, label=None):
    """Random signal projected onto PW_[a,b] (normalized; error if band empty)."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(decomp.n)
    proj = pw_project(decomp, raw, a, b)
    norm = np.linalg.norm(proj)
    if norm == 0.0:
        raise ValidationError(f"no spectrum inside [{a:g}, {b:g}]")
    return Signal(proj / norm, label or f"bandlimited[{a:g},{b:g}]")


def _require_coverage(bank, lambda_max):
    if 2.0**bank.J < lambda_max:
        raise ValidationError(
            f"filter bank (J={bank.J}) does not cover the spectrum (lambda_max={lambda_max:g})"
        )
