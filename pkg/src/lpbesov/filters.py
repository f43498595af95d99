"""Dyadic Littlewood-Paley window family with an exact partition of unity.

The window pair is a Meyer-style construction: a polynomial smoothstep S of
order n drives the transition profile Phi(xi) = cos^2(pi/2 * S(xi - 1)),
so that psi0 = sqrt(Phi) and psi = sqrt(Phi(xi) - Phi(2 xi)) reduce to
cos/sin branches with no square-root kinks.  The dyadic family
psi_j(xi) = psi(2^-j xi) then telescopes: sum_{j<=J} psi_j(xi)^2 =
Phi(2^-J xi), which equals 1 exactly for xi <= 2^J.  In floating point the
cancellation is cos^2 + sin^2 of identical arguments, so the partition
deviation is a few ulps.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .errors import ValidationError

DEFAULT_SHARPNESS = 7.0


def smoothstep(x, order):
    """C^order polynomial step: 0 for x <= 0, 1 for x >= 1, monotone between.

    Evaluated as the regularized incomplete beta I_x(n+1, n+1); the monomial
    form of the same polynomial cancels catastrophically near x = 1.
    """
    n = int(order)
    x = np.asarray(x, dtype=float)
    out = betainc(n + 1, n + 1, np.clip(x, 0.0, 1.0))
    out[x <= 0.0] = 0.0
    out[x >= 1.0] = 1.0
    return out


@dataclass(frozen=True)
class WindowPair:
    """The mother windows (psi0_hat, psi_hat).

    transition_sharpness is the smoothness order of the step polynomial
    (rounded to an integer >= 1): larger values are flatter at the band
    edges and steeper mid-transition.
    """

    transition_sharpness: float = DEFAULT_SHARPNESS
    description: str = field(default="meyer-cos window pair")

    def __post_init__(self):
        if self.transition_sharpness <= 0:
            raise ValidationError("transition_sharpness must be positive")

    @property
    def order(self):
        return max(1, round(self.transition_sharpness))

    def phi(self, xi):
        """Monotone profile: 1 on [0,1], 0 on [2,inf), cos^2 transition."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros_like(xi)
        out[xi <= 1.0] = 1.0
        mid = (xi > 1.0) & (xi < 2.0)
        out[mid] = np.cos(0.5 * np.pi * smoothstep(xi[mid] - 1.0, self.order)) ** 2
        return out

    def psi0(self, xi):
        """Low-pass window: supported on [0, 2], psi0(0) = 1."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros_like(xi)
        out[xi <= 1.0] = 1.0
        mid = (xi > 1.0) & (xi < 2.0)
        out[mid] = np.cos(0.5 * np.pi * smoothstep(xi[mid] - 1.0, self.order))
        out[xi < 0.0] = 0.0
        return out

    def psi(self, xi):
        """Band window: supported on [1/2, 2], psi(1) = 1."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros_like(xi)
        lo = (xi > 0.5) & (xi < 1.0)
        out[lo] = np.sin(0.5 * np.pi * smoothstep(2.0 * xi[lo] - 1.0, self.order))
        hi = (xi >= 1.0) & (xi < 2.0)
        out[hi] = np.cos(0.5 * np.pi * smoothstep(xi[hi] - 1.0, self.order))
        return out


def make_window_pair(transition_sharpness=DEFAULT_SHARPNESS):
    """Construct the window pair; raises on non-positive sharpness."""
    return WindowPair(transition_sharpness=float(transition_sharpness))


@dataclass(frozen=True)
class FilterBank:
    """Dyadic levels j = 0..J of the window pair, covering [0, lambda_max]."""

    windows: WindowPair
    J: int
    lambda_max: float

    def __post_init__(self):
        if self.J < 0:
            raise ValidationError("J must be nonnegative")
        if self.lambda_max < 0:
            raise ValidationError("lambda_max must be nonnegative")

    @property
    def levels(self):
        return range(self.J + 1)

    def band_support(self, j):
        """Spectral support of level j."""
        if j == 0:
            return (0.0, 2.0)
        return (2.0 ** (j - 1), 2.0 ** (j + 1))


def make_filter_bank(windows, lambda_max, J=None, validate_coverage=True):
    """Build the bank; J defaults to the smallest level with 2^J >= lambda_max.

    With validate_coverage=True (the default) an under-covering (J, lambda_max)
    pair is rejected; diagnostics may disable it to measure the deviation.
    """
    lambda_max = float(lambda_max)
    if lambda_max < 0:
        raise ValidationError("lambda_max must be nonnegative")
    if J is None:
        J = 0
        while 2.0**J < lambda_max:
            J += 1
    J = int(J)
    if validate_coverage and 2.0**J < lambda_max:
        raise ValidationError(
            f"filter bank with J={J} covers only [0, {2.0**J:g}] < lambda_max={lambda_max:g}"
        )
    return FilterBank(windows=windows, J=J, lambda_max=lambda_max)


def eval_psi(bank, j, xi):
    """psi_j(xi): psi0(xi) for j=0, psi(2^-j xi) for j >= 1.

    Accepts scalars or arrays; xi must be nonnegative and 0 <= j <= J.
    """
    if not 0 <= j <= bank.J:
        raise ValidationError(f"level {j} outside [0, {bank.J}]")
    arr = np.asarray(xi, dtype=float)
    if np.any(arr < 0):
        raise ValidationError("windows are defined for xi >= 0")
    if j == 0:
        vals = bank.windows.psi0(arr)
    else:
        vals = bank.windows.psi(arr / 2.0**j)
    return float(vals) if np.isscalar(xi) else vals


def psi_matrix(bank, xi):
    """Stack of window values, shape (J+1, len(xi))."""
    xi = np.asarray(xi, dtype=float)
    return np.vstack([eval_psi(bank, j, xi) for j in bank.levels])


def verify_partition(bank, grid_points):
    """Max deviation |sum_j psi_j^2 - 1| on a uniform grid of [0, lambda_max]."""
    if grid_points < 2:
        raise ValidationError("grid_points must be >= 2")
    grid = np.linspace(0.0, bank.lambda_max, int(grid_points))
    total = (psi_matrix(bank, grid) ** 2).sum(axis=0)
    return float(np.abs(total - 1.0).max())


def windows_to_csv(bank, path, points=512):
    """Window diagnostics table: xi, psi_0(xi), ..., psi_J(xi)."""
    xi = np.linspace(0.0, max(bank.lambda_max, 2.0**bank.J), int(points))
    table = np.column_stack([xi, psi_matrix(bank, xi).T])
    header = "xi," + ",".join(f"psi_{j}" for j in bank.levels)
    np.savetxt(path, table, delimiter=",", header=header, comments="")
