"""Self-adjoint positive semidefinite operators and their spectral data.

The operator A lives on R^n with the Euclidean inner product.  Its
eigendecomposition plays the role of the spectral measure: the coefficient
map f -> V^T f is the discrete Plancherel transform, and every functional
calculus downstream acts by pointwise multiplication on those coefficients.
"""

import io
import os

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import NumericalError, ValidationError

SYMMETRY_TOL = 1e-10
EIGEN_TOL = 1e-9

# Dense symmetric solvers stay cheap and exactly testable up to this size;
# larger operators go through the Chebyshev (matrix-free) path.
DENSE_EIG_LIMIT = 4096

POWER_ITERATIONS = 100
POWER_SAFETY = 1.02


class Operator:
    """Symmetric PSD operator with dense, sparse, or diagonal storage.

    Immutable after construction; `matvec` is the only way the rest of the
    library touches the entries, so all three storage kinds behave alike.
    """

    def __init__(self, matrix, kind, symmetry_tol=SYMMETRY_TOL, source="in-memory"):
        self.kind = kind
        self.symmetry_tol = float(symmetry_tol)
        self.source = source
        if kind == "diagonal":
            d = np.asarray(matrix, dtype=float).ravel()
            if d.size == 0:
                raise ValidationError("empty diagonal")
            bad = d < -EIGEN_TOL
            if np.any(bad):
                raise ValidationError(
                    f"diagonal entry {d[bad][0]:.3e} below -eigen_tol; operator not PSD"
                )
            self.data = np.maximum(d, 0.0)
            self.n = d.size
        elif kind == "dense":
            a = np.asarray(matrix, dtype=float)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise ValidationError(f"dense operator must be square, got shape {a.shape}")
            asym = np.abs(a - a.T).max() if a.size else 0.0
            if asym > self.symmetry_tol:
                raise ValidationError(
                    f"asymmetry {asym:.3e} exceeds symmetry_tol {self.symmetry_tol:.1e}"
                )
            self.data = 0.5 * (a + a.T)
            self.n = a.shape[0]
        elif kind == "sparse":
            a = sp.csr_array(matrix, dtype=float)
            if a.shape[0] != a.shape[1]:
                raise ValidationError(f"sparse operator must be square, got shape {a.shape}")
            diff = (a - a.T).tocoo()
            asym = np.abs(diff.data).max() if diff.nnz else 0.0
            if asym > self.symmetry_tol:
                raise ValidationError(
                    f"asymmetry {asym:.3e} exceeds symmetry_tol {self.symmetry_tol:.1e}"
                )
            self.data = (0.5 * (a + a.T)).tocsr()
            self.n = a.shape[0]
        else:
            raise ValidationError(f"unknown operator kind {kind!r}")

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "diagonal":
            return self.data[:, None] * v if v.ndim == 2 else self.data * v
        return self.data @ v

    def dense(self):
        """Materialize as a dense array (diagnostics and the exact eigen path)."""
        if self.kind == "diagonal":
            return np.diag(self.data)
        if self.kind == "sparse":
            return self.data.toarray()
        return self.data

    def shifted(self, eps):
        """A + eps*I, for callers that want strict positive definiteness."""
        if eps == 0.0:
            return self
        if self.kind == "diagonal":
            return Operator(self.data + eps, "diagonal", self.symmetry_tol, self.source)
        if self.kind == "sparse":
            shifted = self.data + eps * sp.identity(self.n, format="csr")
            return Operator(shifted, "sparse", self.symmetry_tol, self.source)
        return Operator(self.data + eps * np.eye(self.n), "dense", self.symmetry_tol, self.source)

    def gershgorin_bound(self):
        if self.kind == "diagonal":
            return float(max(self.data.max(), 0.0)) if self.n else 0.0
        if self.kind == "sparse":
            rowsums = np.abs(self.data).sum(axis=1)
        else:
            rowsums = np.abs(self.data).sum(axis=1)
        return float(max(np.max(rowsums), 0.0)) if self.n else 0.0

    def __repr__(self):
        return f"Operator(kind={self.kind!r}, n={self.n})"


class Signal:
    """A vector in R^n with a label for reports."""

    def __init__(self, values, label="signal"):
        self.values = np.asarray(values, dtype=float).ravel()
        self.label = str(label)

    def __len__(self):
        return self.values.size

    def norm(self):
        return float(np.linalg.norm(self.values))

    def __repr__(self):
        return f"Signal(label={self.label!r}, n={self.values.size})"


def as_values(f):
    """Accept a Signal or a bare vector."""
    if isinstance(f, Signal):
        return f.values
    return np.asarray(f, dtype=float).ravel()


def load_operator(path, fmt, symmetry_tol=SYMMETRY_TOL):
    """Read an operator from disk.

    Formats: 'matrix-market' (coordinate real symmetric), 'dense-csv'
    (comma-separated rows), 'diagonal-csv' (one eigenvalue per line).
    """
    if not os.path.exists(path):
        raise ValidationError(f"operator file not found: {path}")
    if fmt == "matrix-market":
        try:
            mat = scipy.io.mmread(path)
        except Exception as exc:
            raise ValidationError(f"matrix-market parse failure in {path}: {exc}") from exc
        return Operator(sp.csr_array(mat), "sparse", symmetry_tol, source=str(path))
    if fmt == "dense-csv":
        try:
            arr = np.loadtxt(path, delimiter=",", ndmin=2)
        except Exception as exc:
            raise ValidationError(f"dense-csv parse failure in {path}: {exc}") from exc
        return Operator(arr, "dense", symmetry_tol, source=str(path))
    if fmt == "diagonal-csv":
        try:
            d = np.loadtxt(path, delimiter=",", ndmin=1)
        except Exception as exc:
            raise ValidationError(f"diagonal-csv parse failure in {path}: {exc}") from exc
        return Operator(d, "diagonal", symmetry_tol, source=str(path))
    raise ValidationError(f"unknown operator format {fmt!r}")


def load_signal(path, label=None):
    try:
        v = np.loadtxt(path, delimiter=",", ndmin=1)
    except Exception as exc:
        raise ValidationError(f"signal parse failure in {path}: {exc}") from exc
    return Signal(v, label or os.path.basename(str(path)))


def build_laplacian(kind, n_or_side):
    """Combinatorial graph Laplacian of a path, cycle, or 2-D grid graph."""
    m = int(n_or_side)
    if m < 2:
        raise ValidationError(f"build_laplacian needs size >= 2, got {m}")
    if kind == "path":
        lap = _path_laplacian(m)
    elif kind == "cycle":
        lap = _path_laplacian(m).tolil()
        lap[0, m - 1] -= 1.0
        lap[m - 1, 0] -= 1.0
        lap[0, 0] += 1.0
        lap[m - 1, m - 1] += 1.0
        lap = lap.tocsr()
    elif kind == "grid2d":
        p = _path_laplacian(m)
        eye = sp.identity(m, format="csr")
        lap = (sp.kron(p, eye) + sp.kron(eye, p)).tocsr()
    else:
        raise ValidationError(f"unknown laplacian kind {kind!r}")
    return Operator(sp.csr_array(lap), "sparse", source=f"generator:{kind}({m})")


def _path_laplacian(m):
    main = 2.0 * np.ones(m)
    main[0] = main[-1] = 1.0
    off = -np.ones(m - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


class EigenDecomposition:
    """Eigenvalues (ascending, clamped to >= 0) and orthonormal eigenvectors.

    Finite-dimensional stand-in for the spectral measure: column i of V is
    the eigenvector of eigenvalue lambda_i.
    """

    def __init__(self, eigenvalues, eigenvectors):
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        self.eigenvectors = np.asarray(eigenvectors, dtype=float)
        self.n = self.eigenvalues.size
        self.lambda_max = float(self.eigenvalues[-1]) if self.n else 0.0

    def coefficients(self, f):
        v = as_values(f)
        if v.size != self.n:
            raise ValidationError(f"signal length {v.size} != operator dimension {self.n}")
        return self.eigenvectors.T @ v

    def synthesize(self, coeffs):
        return self.eigenvectors @ np.asarray(coeffs, dtype=float)


def eigendecompose(op, eigen_tol=EIGEN_TOL):
    """Full spectral decomposition of the operator.

    Diagonal operators bypass the solver (exact oracle path).  Dense and
    sparse operators use the dense symmetric solver up to DENSE_EIG_LIMIT.
    """
    if op.kind == "diagonal":
        order = np.argsort(op.data, kind="stable")
        lam = op.data[order]
        vecs = np.zeros((op.n, op.n))
        vecs[order, np.arange(op.n)] = 1.0
    else:
        if op.n > DENSE_EIG_LIMIT:
            raise ValidationError(
                f"dense eigensolver refused for n={op.n} > {DENSE_EIG_LIMIT}; "
                "use the chebyshev backend for large operators"
            )
        try:
            lam, vecs = np.linalg.eigh(op.dense())
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigensolver failed: {exc}") from exc
    if lam[0] < -eigen_tol:
        raise ValidationError(
            f"eigenvalue {lam[0]:.3e} below -eigen_tol={eigen_tol:.1e}; operator not PSD"
        )
    lam = np.maximum(lam, 0.0)
    decomp = EigenDecomposition(lam, vecs)
    _check_decomposition(op, decomp)
    return decomp


def _check_decomposition(op, decomp, probe_limit=1024):
    """Orthonormality and eigen-residual checks; sampled above probe_limit."""
    v = decomp.eigenvectors
    lam = decomp.eigenvalues
    if op.n <= probe_limit:
        gram_err = np.abs(v.T @ v - np.eye(op.n)).max()
        if gram_err > 1e-10:
            raise NumericalError(f"eigenvector orthonormality off by {gram_err:.3e}")
        resid = op.matvec(v) - v * lam
        scale = np.maximum(1.0, lam)
        worst = (np.abs(resid).max(axis=0) / scale).max()
        if worst > 1e-8:
            raise NumericalError(f"eigenpair residual {worst:.3e} exceeds 1e-8")
    else:
        rng = np.random.default_rng(0)
        x = rng.standard_normal(op.n)
        y = v @ (v.T @ x)
        if np.linalg.norm(y - x) > 1e-8 * np.linalg.norm(x):
            raise NumericalError("eigenvector basis fails randomized orthonormality probe")


def spectral_bound(op):
    """Upper bound for lambda_max: Gershgorin, tightened by power iteration.

    Exact for diagonal operators.  For the bundled generators the bound is
    within a factor 1.2 of lambda_max; adversarial sparse inputs may see a
    looser (but still valid Gershgorin-capped) value.
    """
    if op.kind == "diagonal":
        return float(max(op.data.max(), 0.0)) if op.n else 0.0
    gersh = op.gershgorin_bound()
    if gersh == 0.0:
        return 0.0
    rng = np.random.default_rng(0)
    v = rng.standard_normal(op.n)
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    for _ in range(POWER_ITERATIONS):
        w = op.matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            rayleigh = 0.0
            break
        rayleigh = float(v @ w)
        v = w / nw
    return float(min(gersh, max(POWER_SAFETY * rayleigh, 0.0)))


def spectral_coefficients(decomp, f):
    """Plancherel coefficients e_i = <f, v_i>."""
    return decomp.coefficients(f)


def sobolev_norm(decomp, f, k):
    """||A^k f|| computed spectrally; k = 0 gives ||f||."""
    if k < 0:
        raise ValidationError("sobolev_norm needs k >= 0")
    e = decomp.coefficients(f)
    if k == 0:
        return float(np.linalg.norm(e))
    return float(np.linalg.norm(decomp.eigenvalues**k * e))


def eigenvector_signal(decomp, index, label=None):
    if not 0 <= index < decomp.n:
        raise ValidationError(f"eigenvector index {index} out of range [0, {decomp.n})")
    return Signal(decomp.eigenvectors[:, index], label or f"eigenvector[{index}]")


def random_signals(n, count, seed=0):
    rng = np.random.default_rng(seed)
    return [Signal(rng.standard_normal(n), f"random[{i}]") for i in range(count)]
