"""Wasserstein geometry of symmetric positive-definite matrices.

Every function accepts either an :class:`SpdMatrix` or a plain square
``ndarray``; arrays are validated on the way in. Eigenvalues are always
sorted ascending, and the curvature formulas build all eigenvalue-indexed
quantities from one decomposition.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrixError, DomainError, NumericalFailure, ParameterError

#: Relative eigenvalue floor, scaled by trace(A) / n.
FLOOR_RELATIVE = 1e-12
#: Absolute lower limit for the floor so that zero-trace inputs stay finite.
FLOOR_ABSOLUTE = 1e-300

_ASYMMETRY_REJECT = 1e-8


def eigenvalue_floor(eigenvalues):
    """Floor ``eps = 1e-12 * trace / n`` for one or many eigenvalue vectors.

    Parameters
    ----------
    eigenvalues : ndarray, shape (..., n)

    Returns
    -------
    eps : ndarray, shape (...,)
    """
    lam = np.asarray(eigenvalues, dtype=float)
    n = lam.shape[-1]
    eps = FLOOR_RELATIVE * lam.sum(axis=-1) / n
    return np.maximum(eps, FLOOR_ABSOLUTE)


class SpdMatrix:
    """Symmetric positive-definite matrix with a cached eigendecomposition.

    Construction symmetrizes inputs whose asymmetry is at rounding level and
    rejects anything else. Use :meth:`floored` to clamp tiny or negative
    eigenvalues instead of rejecting them.
    """

    __slots__ = ("entries", "_spectral")

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ParameterError(f"expected a nonempty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NumericalFailure("matrix has non-finite entries", a)
        scale = np.max(np.abs(a))
        if np.max(np.abs(a - a.T)) > _ASYMMETRY_REJECT * max(scale, 1.0):
            raise ParameterError("matrix is not symmetric")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        self.entries = a
        self._spectral = None
        if self.spectral().eigenvalues[0] <= 0:
            raise DegenerateMatrixError(
                f"matrix is not positive definite (min eigenvalue "
                f"{self._spectral.eigenvalues[0]:.3e})",
                a,
            )

    @classmethod
    def floored(cls, entries):
        """Build from a symmetric PSD matrix, clamping eigenvalues to the floor."""
        a = np.asarray(entries, dtype=float)
        a = 0.5 * (a + a.T)
        lam, vec = _eigh(a)
        lam = np.maximum(lam, eigenvalue_floor(np.abs(lam)))
        return cls((vec * lam) @ vec.T)

    @property
    def dim(self):
        return self.entries.shape[0]

    def spectral(self):
        if self._spectral is None:
            lam, vec = _eigh(self.entries)
            self._spectral = SpectralDecomposition(lam, vec)
        return self._spectral

    def to_text(self):
        """Row-major decimal dump, 17 significant digits, one row per line."""
        return "\n".join(" ".join(f"{v:.17g}" for v in row) for row in self.entries) + "\n"

    @classmethod
    def from_text(cls, text):
        rows = [line.split() for line in text.strip().splitlines()]
        return cls(np.array(rows, dtype=float))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"SpdMatrix(dim={self.dim}, eigenvalues={self.spectral().eigenvalues!r})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """``A = basis @ diag(eigenvalues) @ basis.T`` with ascending eigenvalues."""

    eigenvalues: np.ndarray
    basis: np.ndarray

    def reconstruct(self):
        return (self.basis * self.eigenvalues) @ self.basis.T


@dataclass(frozen=True)
class GaussianModel:
    """Gaussian distribution given by its mean vector and SPD covariance."""

    mean: np.ndarray
    covariance: SpdMatrix

    def __post_init__(self):
        cov = as_spd(self.covariance)
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if mean.shape[0] != cov.dim:
            raise ParameterError(f"mean has length {mean.shape[0]}, covariance is {cov.dim}x{cov.dim}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


def _eigh(a):
    try:
        return np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigen-solver did not converge: {exc}", np.array(a)) from exc


def as_spd(a):
    """Return ``a`` as an :class:`SpdMatrix`, validating plain arrays."""
    return a if isinstance(a, SpdMatrix) else SpdMatrix(a)


def check_symmetric(x, n=None):
    """Validate a tangent vector: square, symmetric within 1e-12 * max|entry|."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise ParameterError(f"dimension mismatch: {x.shape[0]} vs {n}")
    tol = 1e-12 * np.max(np.abs(x)) if x.size else 0.0
    if np.max(np.abs(x - x.T), initial=0.0) > tol:
        raise ParameterError("tangent vector is not symmetric")
    return x


def spectral_decompose(a):
    """Eigendecomposition of an SPD matrix, eigenvalues ascending.

    Raises
    ------
    NumericalFailure
        If the eigen-solver does not converge; the matrix is attached.
    """
    return as_spd(a).spectral()


def _solve_in_basis(lam, vec, y):
    denom = lam[:, None] + lam[None, :]
    eps = eigenvalue_floor(lam)
    if np.min(denom) < eps:
        raise DegenerateMatrixError("eigenvalue sums underflow the floor", (vec * lam) @ vec.T)
    t = (vec.T @ y @ vec) / denom
    t = vec @ t @ vec.T
    return 0.5 * (t + t.T)


def sylvester_solve(a, y):
    """Solve ``A T + T A = Y`` for symmetric ``T``.

    ``A`` is diagonalized once; in its eigenbasis the solution is the
    entrywise quotient ``Y_ij / (lambda_i + lambda_j)``.

    Parameters
    ----------
    a : SpdMatrix or ndarray, shape (n, n)
    y : ndarray, shape (n, n)
        Symmetric right-hand side.

    Returns
    -------
    t : ndarray, shape (n, n)
    """
    spd = as_spd(a)
    y = check_symmetric(y, spd.dim)
    s = spd.spectral()
    return _solve_in_basis(s.eigenvalues, s.basis, y)


def wasserstein_metric(a, x, y):
    """Inner product ``0.5 * tr(Gamma_A[Y] X)`` of tangent vectors at ``A``."""
    spd = as_spd(a)
    x = check_symmetric(x, spd.dim)
    return 0.5 * float(np.trace(sylvester_solve(spd, y) @ x))


def _sqrtm_psd(a):
    lam, vec = _eigh(0.5 * (a + a.T))
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.T


def _trace_cross_root(s1, s2):
    """tr((S1 S2)^(1/2)) through the symmetric form tr((S1^½ S2 S1^½)^½)."""
    r1 = _sqrtm_psd(s1)
    lam = np.linalg.eigvalsh(0.5 * (r1 @ s2 @ r1 + (r1 @ s2 @ r1).T))
    return float(np.sum(np.sqrt(np.clip(lam, 0.0, None))))


def _covariance_gap(g1, g2):
    s1 = g1.covariance.entries
    s2 = g2.covariance.entries
    if s1.shape != s2.shape:
        raise ParameterError(f"dimension mismatch: {s1.shape} vs {s2.shape}")
    try:
        gap = np.trace(s1) + np.trace(s2) - 2.0 * _trace_cross_root(s1, s2)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"matrix square root failed: {exc}", s1) from exc
    # rounding can push an exact zero slightly negative
    return max(float(gap), 0.0)


def gaussian_wasserstein_distance(g1, g2):
    """Distance ``||mu1 - mu2|| + tr(S1 + S2 - 2 (S1 S2)^½)^½`` between Gaussians.

    The mean gap and the covariance term are added, not combined in
    quadrature; see :func:`bures_wasserstein_distance` for the usual form.
    """
    return float(np.linalg.norm(g1.mean - g2.mean)) + np.sqrt(_covariance_gap(g1, g2))


def bures_wasserstein_distance(g1, g2):
    """Standard 2-Wasserstein distance ``sqrt(||mu1-mu2||^2 + tr(...))``."""
    mean_gap = float(np.sum((g1.mean - g2.mean) ** 2))
    return float(np.sqrt(mean_gap + _covariance_gap(g1, g2)))


def curvature_tensor(a, x, y):
    """Curvature ``R(X, Y, X, Y)`` of the Wasserstein metric at ``A``.

    Evaluates ``3 tr(Gx A Gamma[Gx Gy - Gy Gx] A Gy)`` with
    ``Gx = Gamma_A[X]`` and ``Gy = Gamma_A[Y]``.
    """
    spd = as_spd(a)
    n = spd.dim
    x = check_symmetric(x, n)
    y = check_symmetric(y, n)
    s = spd.spectral()
    lam, vec = s.eigenvalues, s.basis
    gx = _solve_in_basis(lam, vec, x)
    gy = _solve_in_basis(lam, vec, y)
    comm = gx @ gy - gy @ gx
    # the commutator is antisymmetric; solve it directly in the eigenbasis
    inner = vec @ ((vec.T @ comm @ vec) / (lam[:, None] + lam[None, :])) @ vec.T
    am = spd.entries
    return 3.0 * float(np.trace(gx @ am @ inner @ am @ gy))


def curvature_from_eigenvalues(eigenvalues):
    """Closed-form scalar curvature from ascending eigenvalues.

    Works on a single vector or a stack of shape ``(m, n)``. Eigenvalues are
    clamped to :func:`eigenvalue_floor`; when two or more are clamped the
    result is capped at ``3n / eps`` and flagged.

    Parameters
    ----------
    eigenvalues : ndarray, shape (..., n)
        Sorted ascending along the last axis.

    Returns
    -------
    rho : ndarray, shape (...,)
    degenerate : ndarray of bool, shape (...,)
    """
    lam = np.asarray(eigenvalues, dtype=float)
    single = lam.ndim == 1
    lam = np.atleast_2d(lam)
    m, n = lam.shape
    eps = eigenvalue_floor(np.abs(lam))
    clamped = lam < eps[:, None]
    lam = np.where(clamped, eps[:, None], lam)

    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    u = np.where(upper, 1.0 / (lam[:, :, None] + lam[:, None, :]), 0.0)
    s = u + np.swapaxes(u, 1, 2)
    # tr(2 L U U^T), tr(L U^T U), tr(L U S L S)
    t1 = 2.0 * np.einsum("mi,mij,mij->m", lam, u, u)
    t2 = np.einsum("mj,mij,mij->m", lam, u, u)
    sls = np.einsum("mij,mj,mjk->mik", s, lam, s)
    t3 = np.einsum("mi,mij,mji->m", lam, u, sls)
    rho = 3.0 * (t1 + t2 + t3)

    degenerate = clamped.sum(axis=1) >= 2
    rho = np.where(degenerate, 3.0 * n / eps, rho)
    if single:
        return float(rho[0]), bool(degenerate[0])
    return rho, degenerate


def scalar_curvature(a, return_flag=False):
    """Wasserstein scalar curvature of an SPD matrix.

    Depends only on the spectrum of ``A`` and scales as ``1/c`` under
    ``A -> cA``. With ``return_flag=True`` the degeneracy flag is returned
    alongside the value.
    """
    s = spectral_decompose(a)
    rho, flag = curvature_from_eigenvalues(s.eigenvalues)
    return (rho, flag) if return_flag else rho


def scalar_curvature_bound(a):
    """Upper bound ``3n / lambda_2`` where ``lambda_2`` is the second-smallest eigenvalue."""
    s = spectral_decompose(a)
    n = s.eigenvalues.shape[0]
    if n < 2:
        raise DomainError("curvature bound needs n >= 2")
    return 3.0 * n / float(s.eigenvalues[1])


def _symmetric_unit_basis(n):
    basis = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n))
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
    return basis


def scalar_curvature_bruteforce(a, basis=None):
    """Scalar curvature as an explicit sum over an orthonormal tangent basis.

    The starting basis (default: the ``n(n+1)/2`` symmetric unit matrices) is
    orthonormalized under :func:`wasserstein_metric` by modified
    Gram-Schmidt, then ``sum_ij R(e_i, e_j, e_i, e_j)`` is accumulated with
    :func:`curvature_tensor`. Meant as a slow cross-check for ``n <= 4``.
    """
    spd = as_spd(a)
    n = spd.dim
    if n > 4:
        raise DomainError("brute-force curvature is limited to n <= 4")
    if basis is None:
        basis = _symmetric_unit_basis(n)
    ortho = []
    for e in basis:
        e = np.array(e, dtype=float)
        for f in ortho:
            e = e - wasserstein_metric(spd, e, f) * f
        norm2 = wasserstein_metric(spd, e, e)
        if norm2 <= 0:
            raise NumericalFailure("tangent basis is linearly dependent", spd.entries)
        ortho.append(e / np.sqrt(norm2))
    total = 0.0
    for ei in ortho:
        for ej in ortho:
            total += curvature_tensor(spd, ei, ej)
    return total
