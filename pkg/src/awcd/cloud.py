"""Point clouds, exact spatial queries and local Gaussian statistics.

Neighbor queries are backed by :class:`scipy.spatial.cKDTree`. Candidate
distances are recomputed in one fixed formula and sorted by
``(distance, index)``, so results are exact and reproducible, and ties
always resolve to the lower point index.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyInputError, ParameterError
from .spd import SpdMatrix, eigenvalue_floor

REAL = 0
NOISE = 1

LEAF_SIZE = 16

# relative slack applied to tree radii before the exact recheck
_SLACK = 1e-9


@dataclass
class PointCloud:
    """Ordered points with optional ground-truth labels (``REAL`` / ``NOISE``)."""

    points: np.ndarray
    labels: np.ndarray = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1 and pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2:
            raise ParameterError(f"points must be a 2-D array, got shape {pts.shape}")
        self.points = pts
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int8)
            if lab.shape != (pts.shape[0],):
                raise ParameterError(f"{lab.shape[0]} labels for {pts.shape[0]} points")
            if np.any((lab != REAL) & (lab != NOISE)):
                raise ParameterError("labels must be REAL (0) or NOISE (1)")
            self.labels = lab

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.intp)
        labels = None if self.labels is None else self.labels[idx]
        return PointCloud(self.points[idx], labels)


def _distances(points, query):
    return np.sqrt(((points - query) ** 2).sum(axis=-1))


class SpatialIndex:
    """Immutable KD-tree over a point cloud; safe for concurrent reads."""

    def __init__(self, cloud, leafsize=LEAF_SIZE):
        pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise EmptyInputError("cannot index an empty cloud")
        self.points = pts.copy()
        self.points.setflags(write=False)
        self._tree = cKDTree(self.points, leafsize=leafsize, balanced_tree=True)

    def __len__(self):
        return self.points.shape[0]

    def knn_batch(self, queries, k, exclude=None, workers=1):
        """k nearest neighbors for many queries.

        Parameters
        ----------
        queries : ndarray, shape (m, dim)
        k : int
        exclude : ndarray of int, shape (m,), optional
            Per-query point index to leave out (self-exclusion).
        workers : int
            Threads used by the tree search; results do not depend on it.

        Returns
        -------
        indices : ndarray of int, shape (m, k)
        distances : ndarray, shape (m, k)
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        n = len(self)
        available = n - (1 if exclude is not None else 0)
        if not 1 <= k <= available:
            raise ParameterError(f"k={k} outside [1, {available}]")
        m = min(n, k + (1 if exclude is not None else 0) + 4)
        tree_d, cand = self._tree.query(queries, m, workers=workers)
        tree_d = tree_d.reshape(len(queries), m)
        cand = cand.reshape(len(queries), m)

        dist = _distances(self.points[cand], queries[:, None, :])
        if exclude is not None:
            exclude = np.asarray(exclude, dtype=np.intp)
            dist = np.where(cand == exclude[:, None], np.inf, dist)
        order = np.lexsort((cand, dist))
        idx = np.take_along_axis(cand, order, axis=1)[:, :k]
        dst = np.take_along_axis(dist, order, axis=1)[:, :k]

        kth = dst[:, -1]
        incomplete = (m < n) & ~(tree_d[:, -1] > kth * (1 + _SLACK))
        for row in np.flatnonzero(incomplete):
            # ties reach past the fetched candidates: widen to a closed ball
            ball = np.array(
                self._tree.query_ball_point(queries[row], kth[row] * (1 + _SLACK) + 1e-300),
                dtype=np.intp,
            )
            d = _distances(self.points[ball], queries[row])
            if exclude is not None:
                d = np.where(ball == exclude[row], np.inf, d)
            o = np.lexsort((ball, d))[:k]
            idx[row], dst[row] = ball[o], d[o]
        return idx, dst

    def knn(self, query, k, exclude=None):
        """Indices and distances of the ``k`` nearest points, ascending."""
        ex = None if exclude is None else np.array([exclude])
        idx, dst = self.knn_batch(np.asarray(query, dtype=float)[None, :], k, exclude=ex)
        return idx[0], dst[0]

    def radius_neighbors(self, query, radius):
        """Sorted indices of all points with ``||p - query|| <= radius``."""
        if radius < 0:
            raise ParameterError(f"radius must be >= 0, got {radius}")
        query = np.asarray(query, dtype=float)
        ball = np.array(
            self._tree.query_ball_point(query, radius * (1 + _SLACK) + 1e-300), dtype=np.intp
        )
        d = _distances(self.points[ball], query)
        return np.sort(ball[d <= radius])

    def radius_counts(self, queries, radius, workers=1):
        """Closed-ball neighbor counts for many queries (query points included)."""
        if radius < 0:
            raise ParameterError(f"radius must be >= 0, got {radius}")
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        lo = self._tree.query_ball_point(
            queries, radius * (1 - _SLACK), return_length=True, workers=workers
        )
        hi = self._tree.query_ball_point(
            queries, radius * (1 + _SLACK) + 1e-300, return_length=True, workers=workers
        )
        counts = np.asarray(lo, dtype=np.intp).copy()
        for row in np.flatnonzero(np.asarray(lo) != np.asarray(hi)):
            counts[row] = len(self.radius_neighbors(queries[row], radius))
        return counts


def build_index(cloud, leafsize=LEAF_SIZE):
    return SpatialIndex(cloud, leafsize=leafsize)


def knn(index, query, k, exclude=None):
    return index.knn(query, k, exclude=exclude)


def radius_neighbors(index, query, radius):
    return index.radius_neighbors(query, radius)


@dataclass
class LocalStats:
    """Per-point neighborhood mean and floored covariance.

    ``covariances[i]`` is the centered second moment of the ``k`` nearest
    neighbors of point ``i`` (the point itself excluded), divided by ``k``.
    """

    means: np.ndarray
    covariances: np.ndarray
    neighbors: np.ndarray
    k: int

    def __len__(self):
        return self.means.shape[0]

    def covariance(self, i):
        return SpdMatrix(self.covariances[i])


def floor_covariances(cov):
    """Clamp the eigenvalues of a stack of symmetric matrices to the SPD floor."""
    lam, vec = np.linalg.eigh(cov)
    eps = eigenvalue_floor(np.abs(lam))
    lam = np.maximum(lam, eps[:, None])
    out = np.einsum("mij,mj,mkj->mik", vec, lam, vec)
    return 0.5 * (out + np.swapaxes(out, 1, 2))


def local_statistics(cloud, index, k, workers=1):
    """Neighborhood Gaussian of every point.

    Warns when ``k < dim + 1``, since the covariance is then rank-deficient
    by construction and relies entirely on the eigenvalue floor.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    dim = pts.shape[1]
    if k < dim + 1:
        warnings.warn(
            f"k={k} < dim+1={dim + 1}: every local covariance is rank-deficient",
            RuntimeWarning,
            stacklevel=2,
        )
    nbr, _ = index.knn_batch(pts, k, exclude=np.arange(len(pts)), workers=workers)
    nb = pts[nbr]
    mu = nb.mean(axis=1)
    centered = nb - mu[:, None, :]
    cov = np.einsum("mki,mkj->mij", centered, centered) / k
    return LocalStats(means=mu, covariances=floor_covariances(cov), neighbors=nbr, k=k)
