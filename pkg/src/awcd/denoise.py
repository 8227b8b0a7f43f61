"""Outlier removal: radius (ROR), statistical (SOR) and curvature-based (AWCD)."""

from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, local_statistics
from .errors import ParameterError
from .histogram import MarkCurvature, build_histogram, mark_curvature
from .spd import curvature_from_eigenvalues

DEFAULT_K = 30


@dataclass
class DenoiseResult:
    """Indices kept by a denoiser plus the per-point statistic it thresholded."""

    kept: np.ndarray
    params: dict
    score: np.ndarray = field(default=None, repr=False)
    mark: MarkCurvature = None

    @property
    def n_kept(self):
        return int(self.kept.size)


@dataclass
class CurvatureField:
    values: np.ndarray
    degenerate: np.ndarray

    def __len__(self):
        return self.values.size


def _points(cloud):
    return cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)


def _check_k(k, n):
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= n - 1:
        raise ParameterError(f"k must be an integer in [1, {n - 1}], got {k!r}")


def ror(cloud, index, radius, min_count):
    """Keep points whose closed ``radius``-ball holds at least ``min_count`` points.

    The point itself counts toward its own neighborhood.
    """
    if not radius > 0:
        raise ParameterError(f"radius must be > 0, got {radius}")
    if min_count < 1:
        raise ParameterError(f"min_count must be >= 1, got {min_count}")
    counts = index.radius_counts(_points(cloud), radius)
    kept = np.flatnonzero(counts >= min_count)
    return DenoiseResult(kept, {"method": "ror", "radius": radius, "min_count": min_count}, counts)


def confidence_test(points, stats):
    """Generalized one-sigma test ``(P-mu)^T S (P-mu) >= ||P-mu||^4`` per point."""
    d = _points(points) - stats.means
    quad = np.einsum("mi,mij,mj->m", d, stats.covariances, d)
    norm2 = np.einsum("mi,mi->m", d, d)
    return quad >= norm2 * norm2, quad - norm2 * norm2


def sor(cloud, index, k, stats=None):
    """Statistical outlier removal with the generalized one-sigma test.

    For isotropic neighborhoods ``S = s^2 I`` this keeps exactly the points
    within one standard deviation ``s`` of their neighborhood mean.
    """
    pts = _points(cloud)
    _check_k(k, len(pts))
    if stats is None:
        stats = local_statistics(pts, index, k)
    ok, margin = confidence_test(pts, stats)
    return DenoiseResult(np.flatnonzero(ok), {"method": "sor", "k": k}, margin)


def curvature_field(cloud, index, k, stats=None):
    """Scalar curvature of every point's local covariance.

    Failures never abort the field: a point whose covariance cannot be
    decomposed, or whose spectrum is degenerate in two or more directions,
    gets the capped value and a set flag.
    """
    pts = _points(cloud)
    _check_k(k, len(pts))
    if stats is None:
        stats = local_statistics(pts, index, k)
    cov = stats.covariances
    try:
        lam = np.linalg.eigvalsh(cov)
    except np.linalg.LinAlgError:
        lam = np.empty(cov.shape[:2])
        for i, c in enumerate(cov):
            try:
                lam[i] = np.linalg.eigvalsh(c)
            except np.linalg.LinAlgError:
                lam[i] = 0.0
    lam = np.where(np.isfinite(lam), lam, 0.0)
    rho, flags = curvature_from_eigenvalues(lam)
    return CurvatureField(values=rho, degenerate=flags)


def awcd(cloud, index, k=DEFAULT_K, rho0=None, regular_term=False, bins=None, stats=None):
    """Adaptive Wasserstein curvature denoising.

    Points whose local scalar curvature reaches the threshold ``rho0`` are
    kept. Without an explicit ``rho0`` the threshold is read from the trough
    of the curvature histogram (see :func:`awcd.histogram.mark_curvature`).

    Parameters
    ----------
    cloud : PointCloud or ndarray, shape (m, dim)
    index : SpatialIndex
    k : int
        Neighborhood size.
    rho0 : float, optional
        Manual threshold; skips the histogram.
    regular_term : bool
        Also require the one-sigma confidence test used by :func:`sor`.
    bins : int, optional
        Histogram bin count (Freedman-Diaconis when omitted).

    Raises
    ------
    DegenerateHistogramError
        All curvatures are equal and no ``rho0`` was given.
    """
    pts = _points(cloud)
    _check_k(k, len(pts))
    if stats is None:
        stats = local_statistics(pts, index, k)
    fld = curvature_field(pts, index, k, stats=stats)
    mark = None
    if rho0 is None:
        mark = mark_curvature(build_histogram(fld.values, bins=bins))
        threshold = mark.value
    else:
        threshold = float(rho0)
    keep = fld.values >= threshold
    if regular_term:
        keep &= confidence_test(pts, stats)[0]
    params = {"method": "awcd", "k": k, "rho0": threshold, "regular_term": bool(regular_term)}
    return DenoiseResult(np.flatnonzero(keep), params, fld.values, mark)
