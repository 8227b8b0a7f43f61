"""Point-cloud denoising with Wasserstein scalar curvature."""

from .bench import Method, NoiseSpec, compute_metrics, inject_noise, run_benchmark, sphere_cloud
from .cloud import NOISE, REAL, LocalStats, PointCloud, SpatialIndex, build_index, knn, local_statistics, radius_neighbors
from .denoise import CurvatureField, DenoiseResult, awcd, curvature_field, ror, sor
from .histogram import CurvatureHistogram, MarkCurvature, build_histogram, mark_curvature
from .io import load_cloud, save_classified, save_cloud
from .spd import (
    GaussianModel,
    SpdMatrix,
    SpectralDecomposition,
    curvature_tensor,
    bures_wasserstein_distance,
    gaussian_wasserstein_distance,
    scalar_curvature,
    scalar_curvature_bound,
    spectral_decompose,
    sylvester_solve,
    wasserstein_metric,
)

__version__ = "0.1.0"
