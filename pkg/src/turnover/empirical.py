"""Time-averaged empirical statistics of recorded trajectories.

Every entry of every recorded frame counts as one sample (time and particle
averaging). Raw moments are accumulated with compensated summation; standard
errors of time averages are estimated by batch means over frames, which
absorbs the autocorrelation of the chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_SQRT2PI = math.sqrt(2.0 * math.pi)


class MomentAccumulator:
    """Streaming raw moments M_j = mean(x**j), j = 1..max_order.

    Accumulation is Kahan-compensated over chunk partial sums (numpy's
    pairwise chunk sums feed the compensated accumulator), which keeps high
    orders accurate when magnitudes vary over many decades. Merging two
    accumulators is associative and commutative.
    """

    def __init__(self, max_order: int):
        if max_order < 1:
            raise ValueError("max_order must be >= 1")
        self.max_order = max_order
        self.count = 0
        self._sums = [0.0] * max_order
        self._comp = [0.0] * max_order

    def _add(self, j: int, value: float) -> None:
        y = value - self._comp[j]
        t = self._sums[j] + y
        self._comp[j] = (t - self._sums[j]) - y
        self._sums[j] = t

    def update(self, samples: np.ndarray) -> None:
        x = np.asarray(samples, dtype=float).ravel()
        if x.size == 0:
            return
        self.count += x.size
        power = x.copy()
        for j in range(self.max_order):
            if j > 0:
                power *= x
            self._add(j, float(power.sum()))

    def merge(self, other: "MomentAccumulator") -> None:
        if other.max_order != self.max_order:
            raise ValueError("cannot merge accumulators of different max_order")
        self.count += other.count
        for j in range(self.max_order):
            self._add(j, other._sums[j])
            self._add(j, -other._comp[j])

    def moments(self) -> np.ndarray:
        if self.count == 0:
            raise ValueError("no samples accumulated")
        return np.array(self._sums) / self.count


def accumulate_moments(samples: np.ndarray, max_order: int) -> np.ndarray:
    """Raw moments of a sample array (see MomentAccumulator)."""
    acc = MomentAccumulator(max_order)
    acc.update(np.asarray(samples, dtype=float))
    return acc.moments()


def kde(samples: np.ndarray, bandwidth: float, grid: np.ndarray) -> np.ndarray:
    """Gaussian kernel density estimate on a grid.

    f(y) = (1/(n h sqrt(2 pi))) sum_i exp(-(y - x_i)^2 / (2 h^2)).
    """
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth!r}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or (grid.size > 1 and not np.all(np.diff(grid) > 0)):
        raise ValueError("grid must be a strictly increasing 1-d array")
    x = np.asarray(samples, dtype=float).ravel()
    out = np.zeros_like(grid)
    # chunked to bound the n_samples x n_grid temporary
    chunk = max(1, 8_000_000 // max(grid.size, 1))
    for start in range(0, x.size, chunk):
        part = x[start : start + chunk]
        z = (grid[:, None] - part[None, :]) / bandwidth
        out += np.exp(-0.5 * z * z).sum(axis=1)
    return out / (x.size * bandwidth * _SQRT2PI)


def kde_mass(samples: np.ndarray, bandwidth: float, lo: float, hi: float) -> float:
    """Exact mass of the Gaussian KDE on [lo, hi] (kernel CDF differences)."""
    from scipy.special import ndtr  # deferred: keeps CLI start-up fast

    x = np.asarray(samples, dtype=float).ravel()
    return float(np.mean(ndtr((hi - x) / bandwidth) - ndtr((lo - x) / bandwidth)))


def empirical_cf(samples: np.ndarray, s: float) -> tuple[float, float]:
    """Empirical characteristic function at s: (mean cos(s x), mean sin(s x))."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empirical_cf needs at least one sample")
    sx = s * x
    return float(np.cos(sx).mean()), float(np.sin(sx).mean())


def laplace_cdf(x, sigma: float):
    """CDF of the centred Laplace law with variance sigma^2 (scale sigma/sqrt(2))."""
    b = sigma / math.sqrt(2.0)
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return np.where(x < 0, 0.5 * np.exp(x / b), 1.0 - 0.5 * np.exp(-x / b))


def ks_laplace(samples: np.ndarray, sigma: float) -> float:
    """Kolmogorov-Smirnov statistic against the Laplace law with variance sigma^2."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("ks_laplace needs at least one sample")
    n = x.size
    cdf = laplace_cdf(x, sigma)
    i = np.arange(1, n + 1)
    d_plus = (i / n - cdf).max()
    d_minus = (cdf - (i - 1) / n).max()
    return float(max(d_plus, d_minus))


def batch_means_se(series: np.ndarray) -> float:
    """Standard error of the mean of an autocorrelated series via batch means.

    Splits the series into ~sqrt(len) batches; returns NaN when the series is
    too short to form two batches.
    """
    y = np.asarray(series, dtype=float).ravel()
    n_batches = int(math.isqrt(y.size))
    if n_batches < 2:
        return float("nan")
    width = y.size // n_batches
    means = y[: n_batches * width].reshape(n_batches, width).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


@dataclass
class EmpiricalSummary:
    """Bundle of time-averaged statistics of one observable of one run."""

    sample_count: int
    raw_moments: list[float]
    moment_ses: list[float]
    histogram_edges: np.ndarray
    histogram_counts: np.ndarray
    kde_grid: np.ndarray
    kde_values: np.ndarray
    ecf: list[tuple[float, float, float]]  # (s, re, im)
    ecf_ses: list[float]
    ks_laplace: float
    config: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        def clean(v: float):
            return None if (isinstance(v, float) and not math.isfinite(v)) else v

        return {
            "schema_version": 1,
            "sample_count": self.sample_count,
            "moments": [clean(m) for m in self.raw_moments],
            "histogram": {
                "edges": self.histogram_edges.tolist(),
                "counts": self.histogram_counts.tolist(),
            },
            "kde": {"grid": self.kde_grid.tolist(), "values": self.kde_values.tolist()},
            "ecf": [{"s": s, "re": re, "im": im} for s, re, im in self.ecf],
            "ks_laplace": clean(self.ks_laplace),
            "se": {
                "moments": [clean(v) for v in self.moment_ses],
                "ecf": [clean(v) for v in self.ecf_ses],
            },
            "config": self.config,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "EmpiricalSummary":
        def restore(v):
            return float("nan") if v is None else v

        return cls(
            sample_count=data["sample_count"],
            raw_moments=[restore(v) for v in data["moments"]],
            moment_ses=[restore(v) for v in data["se"]["moments"]],
            histogram_edges=np.asarray(data["histogram"]["edges"], dtype=float),
            histogram_counts=np.asarray(data["histogram"]["counts"], dtype=np.int64),
            kde_grid=np.asarray(data["kde"]["grid"], dtype=float),
            kde_values=np.asarray(data["kde"]["values"], dtype=float),
            ecf=[(p["s"], p["re"], p["im"]) for p in data["ecf"]],
            ecf_ses=[restore(v) for v in data["se"]["ecf"]],
            ks_laplace=restore(data["ks_laplace"]),
            config=data.get("config", {}),
        )


def summarize(
    frames: np.ndarray,
    sigma: float,
    *,
    max_order: int = 8,
    ecf_points: tuple[float, ...] = (5.0, 10.0, 20.0, 40.0),
    bins: int = 201,
    hist_range: tuple[float, float] | None = None,
    bandwidth: float | None = None,
    kde_points: int = 201,
    config: dict | None = None,
) -> EmpiricalSummary:
    """Summarise a (n_frames, width) array of recorded observable frames.

    The histogram spans +-6 sigma by default; samples outside are clipped
    into the boundary bins so the counts always total the sample count. The
    KDE grid is widened to cover all samples plus 8 bandwidths, so the
    estimated density carries all its mass inside the grid span.
    """
    frames = np.atleast_2d(np.asarray(frames, dtype=float))
    if frames.size == 0:
        raise ValueError("summarize needs at least one frame")
    flat = frames.ravel()

    moments = accumulate_moments(flat, max_order)
    frame_powers = frames.copy()
    moment_ses = []
    for j in range(1, max_order + 1):
        if j > 1:
            frame_powers *= frames
        moment_ses.append(batch_means_se(frame_powers.mean(axis=1)))

    if hist_range is None:
        lim = 6.0 * sigma
        hist_range = (-lim, lim)
    edges = np.linspace(hist_range[0], hist_range[1], bins + 1)
    clipped = np.clip(flat, hist_range[0], hist_range[1])
    counts, _ = np.histogram(clipped, bins=edges)

    h = 0.1 * sigma if bandwidth is None else bandwidth
    lo = min(hist_range[0], float(flat.min()) - 8.0 * h)
    hi = max(hist_range[1], float(flat.max()) + 8.0 * h)
    grid = np.linspace(lo, hi, kde_points)
    values = kde(flat, h, grid)

    ecf = []
    ecf_ses = []
    for s in ecf_points:
        re, im = empirical_cf(flat, s)
        ecf.append((float(s), re, im))
        ecf_ses.append(batch_means_se(np.cos(s * frames).mean(axis=1)))

    return EmpiricalSummary(
        sample_count=int(flat.size),
        raw_moments=[float(m) for m in moments],
        moment_ses=moment_ses,
        histogram_edges=edges,
        histogram_counts=counts.astype(np.int64),
        kde_grid=grid,
        kde_values=values,
        ecf=ecf,
        ecf_ses=ecf_ses,
        ks_laplace=ks_laplace(flat, sigma),
        config=dict(config or {}),
    )
