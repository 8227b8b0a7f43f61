"""Benchmark harness: downsampling, noise injection and TPR/FPR/SNRG tables.

Every random draw is a pure function of ``(seed, cell key)``, so serial and
threaded runs produce the same rows in the same order.
"""

import csv
import io
import json
import math
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .cloud import NOISE, REAL, PointCloud, build_index
from .denoise import DEFAULT_K, awcd, ror, sor
from .errors import ParameterError, UndefinedMetricError

CSV_COLUMNS = [
    "dataset", "size", "snr", "method", "params", "tpr", "fpr", "snrg", "wall_ms", "seed",
    "n_real", "n_noise", "kept_real", "kept_noise", "error",
]

THREADS_ENV = "AWCD_THREADS"


def _rng(seed, *key):
    tag = zlib.crc32("/".join(str(k) for k in key).encode())
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), tag]))


def sphere_cloud(n, radius=1.0, seed=0):
    """``n`` points drawn uniformly on a sphere surface, as a labeled cloud."""
    rng = _rng(seed, "sphere", n)
    p = rng.standard_normal((n, 3))
    p *= radius / np.linalg.norm(p, axis=1, keepdims=True)
    return PointCloud(p, np.full(n, REAL, dtype=np.int8))


def downsample(cloud, target, seed=0):
    """Uniform random subset of ``target`` points, in original order."""
    n = len(cloud)
    if not 1 <= target <= n:
        raise ParameterError(f"target size must be in [1, {n}], got {target}")
    if target == n:
        return cloud.subset(np.arange(n))
    idx = np.sort(_rng(seed, "downsample", n, target).choice(n, size=target, replace=False))
    return cloud.subset(idx)


@dataclass(frozen=True)
class NoiseSpec:
    snr: float
    seed: int = 0
    expansion: float = 1.2
    distribution: str = "uniform-bbox"

    def __post_init__(self):
        if not self.snr > 0:
            raise ParameterError(f"snr must be > 0, got {self.snr}")
        if not self.expansion >= 1:
            raise ParameterError(f"expansion must be >= 1, got {self.expansion}")
        if self.distribution != "uniform-bbox":
            raise ParameterError(f"unknown noise distribution {self.distribution!r}")

    def noise_count(self, n_real):
        count = int(round(n_real / self.snr))
        if count < 1:
            raise ParameterError(f"snr={self.snr} on {n_real} points gives no noise points")
        return count


def inject_noise(cloud, spec):
    """Append uniform noise from the expanded bounding box; label real vs noise.

    Pass a plain ``NoiseSpec``; the count is ``round(|D| / snr)``.
    """
    pts = cloud.points
    n = len(pts)
    m = spec.noise_count(n)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    center, half = 0.5 * (lo + hi), 0.5 * (hi - lo) * spec.expansion
    noise = _rng(spec.seed, "noise", n, spec.snr).uniform(center - half, center + half, size=(m, pts.shape[1]))
    labels = np.r_[np.full(n, REAL, dtype=np.int8), np.full(m, NOISE, dtype=np.int8)]
    return PointCloud(np.vstack([pts, noise]), labels)


@dataclass
class MetricsRow:
    tpr: float
    fpr: float
    snrg: float
    n_real: int
    n_noise: int
    kept_real: int
    kept_noise: int


def metrics_from_counts(n_real, n_noise, kept_real, kept_noise):
    """TPR, FPR and SNRG from raw counts.

    FPR is the fraction of noise points that survive. SNRG is the relative
    growth of the real-to-noise ratio; ``inf`` when no noise survives.
    """
    if n_real == 0 or n_noise == 0:
        raise UndefinedMetricError(f"need real and noise points, got |D|={n_real}, |N|={n_noise}")
    tpr = kept_real / n_real
    fpr = kept_noise / n_noise
    snrg = math.inf if kept_noise == 0 else (kept_real / kept_noise) * (n_noise / n_real) - 1.0
    return MetricsRow(tpr, fpr, snrg, int(n_real), int(n_noise), int(kept_real), int(kept_noise))


def compute_metrics(labels, kept):
    labels = np.asarray(labels)
    kept = np.asarray(kept, dtype=np.intp)
    kl = labels[kept]
    return metrics_from_counts(
        int(np.sum(labels == REAL)),
        int(np.sum(labels == NOISE)),
        int(np.sum(kl == REAL)),
        int(np.sum(kl == NOISE)),
    )


@dataclass(frozen=True)
class Method:
    """A denoiser with fixed parameters, e.g. ``Method("ror", radius=0.05, min_count=5)``."""

    name: str
    params: tuple = ()

    def __init__(self, name, **params):
        if name not in ("awcd", "ror", "sor"):
            raise ParameterError(f"unknown method {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", tuple(sorted(params.items())))

    def label(self):
        return ";".join(f"{k}={v}" for k, v in self.params)

    def run(self, cloud, index):
        p = dict(self.params)
        if self.name == "ror":
            return ror(cloud, index, p["radius"], p["min_count"])
        if self.name == "sor":
            return sor(cloud, index, p.get("k", DEFAULT_K))
        return awcd(
            cloud, index, p.get("k", DEFAULT_K), rho0=p.get("rho0"),
            regular_term=p.get("regular_term", False), bins=p.get("bins"),
        )


@dataclass
class BenchRow:
    dataset: str
    size: int
    snr: float
    method: str
    params: str
    seed: int
    wall_ms: float = None
    metrics: MetricsRow = None
    error: str = ""

    def record(self):
        m = self.metrics
        out = {
            "dataset": self.dataset, "size": self.size, "snr": self.snr,
            "method": self.method, "params": self.params,
            "tpr": None, "fpr": None, "snrg": None,
            "wall_ms": self.wall_ms, "seed": self.seed,
            "n_real": None, "n_noise": None, "kept_real": None, "kept_noise": None,
            "error": self.error,
        }
        if m is not None:
            out.update(asdict(m))
        return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "nan")
    return str(v)


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    @property
    def failed(self):
        return any(r.error for r in self.rows)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            rec = r.record()
            writer.writerow([_fmt(rec[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self):
        recs = []
        for r in self.rows:
            rec = r.record()
            for key in ("snrg", "tpr", "fpr"):
                if isinstance(rec[key], float) and not math.isfinite(rec[key]):
                    rec[key] = _fmt(rec[key])
            recs.append(rec)
        return json.dumps(recs, indent=2)


def _run_cell(cell, timing):
    name, cloud, size, snr, seed, method = cell
    row = BenchRow(name, size, snr, method.name, method.label(), seed)
    try:
        base = cloud if size is None or size == len(cloud) else downsample(cloud, size, seed=seed)
        row.size = len(base)
        polluted = inject_noise(PointCloud(base.points), NoiseSpec(snr, seed=seed))
        t0 = time.perf_counter()
        index = build_index(polluted)
        result = method.run(polluted, index)
        elapsed = (time.perf_counter() - t0) * 1e3
        row.wall_ms = round(elapsed, 3) if timing else None
        row.metrics = compute_metrics(polluted.labels, result.kept)
    except Exception as exc:  # a failed cell is reported, not fatal
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def default_workers():
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def run_benchmark(datasets, methods, snrs, seeds, sizes=None, workers=None, timing=True):
    """Run every (dataset, size, snr, seed, method) cell.

    Parameters
    ----------
    datasets : dict[str, PointCloud]
        Clean clouds; any labels on them are ignored.
    methods : list[Method]
    snrs, seeds : sequences
    sizes : sequence of int, optional
        Downsample targets; ``None`` keeps each dataset at full size.
    workers : int, optional
        Thread count; defaults to ``$AWCD_THREADS`` or 1. Rows are identical
        for any value.
    timing : bool
        Record wall-clock milliseconds. Turn off for byte-reproducible output.
    """
    cells = []
    for name, cloud in datasets.items():
        for size in (sizes or [None]):
            for snr in snrs:
                for seed in seeds:
                    for method in methods:
                        cells.append((name, cloud, size, snr, seed, method))
    workers = default_workers() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _run_cell(c, timing), cells))
    else:
        rows = [_run_cell(c, timing) for c in cells]
    return BenchReport(rows)
