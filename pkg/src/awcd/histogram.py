"""Curvature histograms and adaptive threshold selection.

The threshold ("mark curvature") is the deepest bin of the smoothed
histogram between its two dominant peaks. When the histogram has no second
peak, Otsu's between-class-variance threshold on the raw values is used.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateHistogramError, EmptyInputError, ParameterError

MIN_BINS = 32
MAX_BINS = 256
SMOOTH_WINDOW = 5
# peaks need at least this many bins strictly between them
MIN_PEAK_GAP = 2
# a second hill must reach this fraction of the main peak's smoothed height
MIN_PEAK_FRACTION = 0.05
# and the trough between the hills must fall this far below the lower one
MIN_TROUGH_DIP = 0.25


@dataclass
class CurvatureHistogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int
    values: np.ndarray = field(default=None, repr=False)

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
            writer.writerow([f"{lo:.17g}", f"{hi:.17g}", int(c)])
        return buf.getvalue()


@dataclass
class MarkCurvature:
    value: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(
            {"value": self.value, "method": self.method, "diagnostics": self.diagnostics},
            indent=2,
            sort_keys=True,
        )


def freedman_diaconis_bins(values):
    """Freedman-Diaconis bin count clamped to ``[MIN_BINS, MAX_BINS]``."""
    values = np.asarray(values, dtype=float)
    q75, q25 = np.percentile(values, [75, 25])
    width = 2.0 * (q75 - q25) * len(values) ** (-1.0 / 3.0)
    span = values.max() - values.min()
    if width <= 0 or not math.isfinite(span / width):
        return MAX_BINS
    return int(min(max(math.ceil(span / width), MIN_BINS), MAX_BINS))


def build_histogram(values, bins=None):
    """Equal-width histogram over ``[min, max]`` of the curvature values.

    ``values`` may be a :class:`~awcd.denoise.CurvatureField` or an array.
    """
    values = np.asarray(getattr(values, "values", values), dtype=float).reshape(-1)
    if values.size == 0:
        raise EmptyInputError("cannot histogram an empty curvature field")
    if not np.all(np.isfinite(values)):
        raise ParameterError("curvature values must be finite")
    lo, hi = values.min(), values.max()
    if lo == hi:
        raise DegenerateHistogramError(
            f"all {values.size} curvatures equal {lo:.6g}; no trough exists, give rho0 explicitly"
        )
    if bins is None:
        bins = freedman_diaconis_bins(values)
    if bins < 1:
        raise ParameterError(f"bins must be >= 1, got {bins}")
    edges = np.linspace(lo, hi, int(bins) + 1)
    counts, _ = np.histogram(values, bins=edges)
    return CurvatureHistogram(edges=edges, counts=counts, total=int(values.size), values=values)


def smooth_counts(counts, window=SMOOTH_WINDOW):
    """Centered moving average; windows are truncated (and renormalized) at the ends."""
    counts = np.asarray(counts, dtype=float)
    kernel = np.ones(window)
    num = np.convolve(counts, kernel, mode="same")
    den = np.convolve(np.ones_like(counts), kernel, mode="same")
    return num / den


def local_maxima(s):
    """Indices strictly greater than every existing neighbor."""
    s = np.asarray(s, dtype=float)
    left = np.r_[-np.inf, s[:-1]]
    right = np.r_[s[1:], -np.inf]
    return np.flatnonzero((s > left) & (s > right))


def otsu_threshold(values):
    """Otsu threshold over the raw values (exact, no binning).

    Returns the midpoint between the two sorted values at the split that
    maximizes the between-class variance.
    """
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    cut = np.flatnonzero(v[1:] > v[:-1]) + 1
    if cut.size == 0:
        raise DegenerateHistogramError("all values equal; Otsu threshold undefined")
    csum = np.cumsum(v)
    w0 = cut / n
    mu0 = csum[cut - 1] / cut
    mu1 = (csum[-1] - csum[cut - 1]) / (n - cut)
    between = w0 * (1 - w0) * (mu0 - mu1) ** 2
    best = cut[int(np.argmax(between))]
    return 0.5 * (v[best - 1] + v[best])


def mark_curvature(hist, window=SMOOTH_WINDOW):
    """Pick the threshold separating the low- and high-curvature populations.

    Counts are smoothed with a centered moving average. The two highest
    local maxima more than ``MIN_PEAK_GAP`` bins apart, the lower one at
    least ``MIN_PEAK_FRACTION`` of the higher and separated from it by a dip
    of at least ``MIN_TROUGH_DIP``, bracket the threshold: the center of the
    lowest smoothed bin between them (ties go to the lower curvature). Without such a pair, Otsu's threshold on the raw values is
    returned instead.

    Raises
    ------
    DegenerateHistogramError
        If the histogram holds a single distinct value.
    """
    counts = np.asarray(hist.counts)
    if counts.sum() == 0 or hist.edges[0] == hist.edges[-1]:
        raise DegenerateHistogramError("histogram is empty or degenerate; give rho0 explicitly")
    s = smooth_counts(counts, window)
    peaks = local_maxima(s)
    order = sorted(peaks, key=lambda i: (-s[i], i))
    for second in order[1:]:
        first = order[0]
        if abs(second - first) <= MIN_PEAK_GAP or s[second] < MIN_PEAK_FRACTION * s[first]:
            continue
        a, b = sorted((first, second))
        trough = a + 1 + int(np.argmin(s[a + 1 : b]))
        if s[trough] > (1.0 - MIN_TROUGH_DIP) * min(s[a], s[b]):
            continue
        return MarkCurvature(
            float(hist.centers[trough]),
            "trough",
            {"peaks": [int(a), int(b)], "trough": int(trough), "bins": int(counts.size)},
        )

    values = hist.values
    if values is None:
        values = np.repeat(hist.centers, counts)
    value = float(otsu_threshold(values))
    return MarkCurvature(
        value, "otsu-fallback", {"peaks": [int(i) for i in peaks], "bins": int(counts.size)}
    )
