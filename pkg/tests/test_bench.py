import csv
import io
import json
import math

import numpy as np
import pytest

from awcd.bench import (
    CSV_COLUMNS,
    Method,
    NoiseSpec,
    compute_metrics,
    downsample,
    inject_noise,
    metrics_from_counts,
    run_benchmark,
    sphere_cloud,
)
from awcd.cloud import NOISE, REAL, PointCloud, build_index
from awcd.errors import ParameterError, UndefinedMetricError


@pytest.fixture(scope="module")
def cube():
    return PointCloud(np.random.default_rng(0).uniform(-1, 1, (1000, 3)))


def test_downsample(cube):
    assert np.array_equal(downsample(cube, 1000).points, cube.points)
    one = downsample(cube, 1, seed=4)
    assert len(one) == 1
    assert np.array_equal(one.points, downsample(cube, 1, seed=4).points)
    a = downsample(cube, 300, seed=7).points
    assert np.array_equal(a, downsample(cube, 300, seed=7).points)
    # order preserved: rows appear in their original relative order
    pos = [np.flatnonzero((cube.points == row).all(axis=1))[0] for row in a]
    assert pos == sorted(pos)
    with pytest.raises(ParameterError):
        downsample(cube, 0)
    with pytest.raises(ParameterError):
        downsample(cube, 1001)


@pytest.mark.parametrize("snr, count", [(10.0, 100), (0.1, 10_000), (1000.0, 1)])
def test_noise_counts(cube, snr, count):
    out = inject_noise(cube, NoiseSpec(snr, seed=3))
    assert int(np.sum(out.labels == NOISE)) == count
    assert int(np.sum(out.labels == REAL)) == 1000
    assert len(out) == 1000 + count
    assert np.array_equal(out.points[:1000], cube.points)


def test_noise_inside_expanded_box(cube):
    out = inject_noise(cube, NoiseSpec(10.0, seed=1, expansion=1.5))
    lo, hi = cube.points.min(axis=0), cube.points.max(axis=0)
    c, h = (lo + hi) / 2, (hi - lo) / 2 * 1.5
    noise = out.points[out.labels == NOISE]
    assert np.all(noise >= c - h) and np.all(noise <= c + h)


def test_noise_deterministic(cube):
    a = inject_noise(cube, NoiseSpec(2.0, seed=5)).points
    b = inject_noise(cube, NoiseSpec(2.0, seed=5)).points
    c = inject_noise(cube, NoiseSpec(2.0, seed=6)).points
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_noise_spec_validation():
    with pytest.raises(ParameterError):
        NoiseSpec(0.0)
    with pytest.raises(ParameterError):
        NoiseSpec(1.0, expansion=0.9)
    with pytest.raises(ParameterError):
        NoiseSpec(1.0, distribution="gaussian")
    with pytest.raises(ParameterError):
        NoiseSpec(5000.0).noise_count(1000)


def test_metrics_keep_everything():
    labels = np.r_[np.zeros(40), np.ones(10)].astype(np.int8)
    m = compute_metrics(labels, np.arange(50))
    assert (m.tpr, m.fpr, m.snrg) == (1.0, 1.0, 0.0)


def test_metrics_recompute_from_counts():
    rng = np.random.default_rng(2)
    labels = (rng.uniform(size=500) < 0.3).astype(np.int8)
    kept = np.flatnonzero(rng.uniform(size=500) < 0.6)
    m = compute_metrics(labels, kept)
    assert m.kept_real + m.kept_noise == len(kept)
    assert m.tpr == m.kept_real / m.n_real
    assert m.fpr == m.kept_noise / m.n_noise
    assert m.snrg == pytest.approx(m.tpr / m.fpr - 1, rel=1e-12)


# (kept_real, kept_noise) out of |D| = 10000, |N| = 1000, against printed triples
TABLE_ROWS = [
    (10000, 181, 1.0, 0.181, 4.525),
    (9928, 48, 0.9928, 0.048, 19.683),
    (10000, 96, 1.0, 0.096, 9.417),
    (10000, 29, 1.0, 0.029, 33.483),
    (10000, 60, 1.0, 0.060, 15.666),
    (9992, 24, 0.9992, 0.024, 40.633),
    (8778, 490, 0.8778, 0.490, 0.791),
]


@pytest.mark.parametrize("kr, kn, tpr, fpr, snrg", TABLE_ROWS)
def test_printed_triples(kr, kn, tpr, fpr, snrg):
    m = metrics_from_counts(10_000, 1000, kr, kn)
    assert m.tpr == pytest.approx(tpr, rel=5e-3)
    assert m.fpr == pytest.approx(fpr, rel=5e-3)
    assert m.snrg == pytest.approx(snrg, rel=5e-3)


def test_no_noise_kept_is_infinite():
    assert math.isinf(metrics_from_counts(100, 10, 90, 0).snrg)


def test_undefined_metrics():
    with pytest.raises(UndefinedMetricError):
        metrics_from_counts(0, 10, 0, 1)
    with pytest.raises(UndefinedMetricError):
        compute_metrics(np.zeros(5, np.int8), [0, 1])


METHODS = [Method("ror", radius=0.15, min_count=10), Method("sor", k=20), Method("awcd", k=20)]


@pytest.fixture(scope="module")
def small_sphere():
    return {"sphere": sphere_cloud(800, seed=0)}


def test_cross_product_rows(small_sphere):
    report = run_benchmark(small_sphere, METHODS, [1.0, 10.0], [0], timing=False)
    assert len(report.rows) == 6
    assert not report.failed
    rows = list(csv.DictReader(io.StringIO(report.to_csv())))
    assert list(rows[0].keys()) == CSV_COLUMNS
    assert {r["method"] for r in rows} == {"ror", "sor", "awcd"}
    for r in rows:
        m = metrics_from_counts(*(int(r[c]) for c in ("n_real", "n_noise", "kept_real", "kept_noise")))
        assert float(r["tpr"]) == m.tpr and float(r["fpr"]) == m.fpr


def test_rerun_byte_identical(small_sphere):
    a = run_benchmark(small_sphere, METHODS, [1.0], [0, 1], sizes=[500], timing=False).to_csv()
    b = run_benchmark(small_sphere, METHODS, [1.0], [0, 1], sizes=[500], timing=False).to_csv()
    c = run_benchmark(small_sphere, METHODS, [1.0], [0, 1], sizes=[500], workers=4, timing=False).to_csv()
    assert a == b == c


def test_timing_recorded(small_sphere):
    report = run_benchmark(small_sphere, METHODS[:1], [1.0], [0])
    assert report.rows[0].wall_ms > 0


def test_failed_cell_is_recorded(small_sphere):
    report = run_benchmark(small_sphere, [Method("ror", radius=-1.0, min_count=3), METHODS[1]], [1.0], [0])
    assert report.failed
    assert report.rows[0].error.startswith("ParameterError")
    assert report.rows[1].error == "" and report.rows[1].metrics is not None
    rows = json.loads(report.to_json())
    assert rows[0]["tpr"] is None and rows[1]["tpr"] is not None


def test_unknown_method():
    with pytest.raises(ParameterError):
        Method("median")


@pytest.mark.xfail(strict=True, reason="with the radius set to the median 30-NN spacing and "
                   "min_count = 30, ROR retains less noise than the adaptive curvature cut")
def test_awcd_lowest_fpr_on_dense_noise():
    cloud = inject_noise(sphere_cloud(5000, seed=0), NoiseSpec(1.0, seed=0))
    index = build_index(cloud)
    surface = cloud.points[cloud.labels == REAL]
    _, d = build_index(surface).knn_batch(surface, 30, exclude=np.arange(len(surface)))
    radius = float(np.median(d[:, -1]))
    fpr = {
        m.name: compute_metrics(cloud.labels, m.run(cloud, index).kept).fpr
        for m in (Method("ror", radius=radius, min_count=30), Method("sor", k=30), Method("awcd", k=30))
    }
    assert fpr["awcd"] < min(fpr["ror"], fpr["sor"])
