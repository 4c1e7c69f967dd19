"""Empirical tail machinery.

Everything here is estimator-side: empirical CCDFs, the Hill index, tail
ratio curves anchored at denominator quantiles, percentile bootstrap bands,
two-sample Kolmogorov-Smirnov distance, and a least-squares geometric decay
fit. All functions are pure; randomness only enters through an explicit
generator passed to the bootstrap.

The x-grid convention: ratios are evaluated at empirical (or analytic)
quantiles of the *denominator* tail, so two curves with the same tail index
are compared at matched exceedance probabilities instead of arbitrary
absolute thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DegenerateTail, DomainError, EmptyGrid, NonPositive

__all__ = [
    "TailReport",
    "empirical_ccdf",
    "hill",
    "hill_curve",
    "tail_ratio",
    "tail_ratio_analytic",
    "bootstrap_band",
    "ks_distance",
    "ks_critical_value",
    "geometric_decay_fit",
]


def _as_samples(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError(f"{name} must be nonempty")
    return arr


def empirical_ccdf(samples, x):
    """Fraction of samples strictly above x; vectorized in x."""
    arr = np.sort(_as_samples(samples, "samples"))
    xs = np.asarray(x, dtype=float)
    out = 1.0 - np.searchsorted(arr, xs, side="right") / arr.size
    return float(out) if np.isscalar(x) else out


# ---------------------------------------------------------------------------
# Hill estimator
# ---------------------------------------------------------------------------

def hill(samples, k: int) -> float:
    """Hill tail-index estimate from the top k+1 positive order statistics.

    alpha_hat = [ (1/k) sum_{i<=k} log(X_(i) / X_(k+1)) ]^{-1}  with the
    X_(i) in descending order.
    """
    arr = _as_samples(samples, "samples")
    pos = arr[arr > 0]
    if not 2 <= k < pos.size:
        raise DomainError(f"need 2 <= k < number of positive samples ({pos.size}), got k={k}")
    top = np.partition(pos, pos.size - (k + 1))[-(k + 1):]
    top = np.sort(top)[::-1]
    ref = top[k]
    if top[0] == ref:
        raise DegenerateTail("top k+1 order statistics are tied; Hill denominator is zero")
    return float(1.0 / np.mean(np.log(top[:k] / ref)))


def hill_curve(samples, points: int = 9) -> dict[int, float]:
    """Hill estimates over a geometric sweep of k in [n/200, n/10]."""
    arr = _as_samples(samples, "samples")
    n_pos = int(np.count_nonzero(arr > 0))
    if n_pos < 3:
        raise DomainError("need at least 3 positive samples for a Hill curve")
    lo = max(2, n_pos // 200)
    hi = max(lo, min(n_pos - 1, n_pos // 10))
    ks = np.unique(np.rint(np.geomspace(lo, hi, points)).astype(int))
    return {int(k): hill(arr, int(k)) for k in ks}


# ---------------------------------------------------------------------------
# tail-ratio curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailReport:
    """Tail-ratio curve at matched denominator quantiles, with bootstrap band.

    ``n_samples`` is (numerator size, denominator size); a denominator size
    of zero marks an analytic denominator, which is exempt from the
    exceedance floor.
    """

    quantile_grid: tuple[float, ...]
    x_grid: tuple[float, ...]
    ccdf_num: tuple[float, ...]
    ccdf_den: tuple[float, ...]
    ratio: tuple[float, ...]
    ratio_ci_low: tuple[float, ...]
    ratio_ci_high: tuple[float, ...]
    n_samples: tuple[int, int]
    min_exceedances: int = 100
    hill_curve: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        m = len(self.quantile_grid)
        cols = (self.x_grid, self.ccdf_num, self.ccdf_den, self.ratio,
                self.ratio_ci_low, self.ratio_ci_high)
        if m == 0 or any(len(c) != m for c in cols):
            raise DomainError("report columns must be nonempty and equal-length")
        if any(b <= a for a, b in zip(self.x_grid, self.x_grid[1:])):
            raise DomainError("x_grid must be strictly increasing")
        for lo, r, hi in zip(self.ratio_ci_low, self.ratio, self.ratio_ci_high):
            if not lo <= r <= hi:
                raise DomainError("band must bracket the point estimate")
        for n, ccdf in zip(self.n_samples, (self.ccdf_num, self.ccdf_den)):
            if n > 0 and any(c * n < self.min_exceedances - 1e-9 for c in ccdf):
                raise DomainError("a grid point fell below the exceedance floor")

    def to_csv_text(self) -> str:
        lines = ["p,x,ccdf_num,ccdf_den,ratio,ci_low,ci_high"]
        for row in zip(self.quantile_grid, self.x_grid, self.ccdf_num, self.ccdf_den,
                       self.ratio, self.ratio_ci_low, self.ratio_ci_high):
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "quantile_grid": list(self.quantile_grid),
            "x_grid": list(self.x_grid),
            "ccdf_num": list(self.ccdf_num),
            "ccdf_den": list(self.ccdf_den),
            "ratio": list(self.ratio),
            "ratio_ci_low": list(self.ratio_ci_low),
            "ratio_ci_high": list(self.ratio_ci_high),
            "n_samples": list(self.n_samples),
            "min_exceedances": self.min_exceedances,
            "hill_curve": {str(k): v for k, v in self.hill_curve.items()},
        }


def _clean_grid(quantile_grid) -> np.ndarray:
    grid = np.asarray(sorted(set(float(p) for p in quantile_grid)), dtype=float)[::-1]
    if grid.size == 0:
        raise DomainError("quantile grid is empty")
    if np.any(grid <= 0.0) or np.any(grid >= 0.5):
        raise DomainError("grid probabilities must lie in (0, 0.5)")
    return grid


def _exceedances(sorted_samples: np.ndarray, x: np.ndarray) -> np.ndarray:
    return sorted_samples.size - np.searchsorted(sorted_samples, x, side="right")


def _dedupe_increasing(x: np.ndarray) -> np.ndarray:
    keep = np.ones(x.size, dtype=bool)
    keep[1:] = x[1:] > np.maximum.accumulate(x)[:-1]
    return keep


def _band_levels(level: float) -> tuple[float, float]:
    if not 0.0 < level < 1.0:
        raise DomainError("band level must be in (0, 1)")
    return 100.0 * (1.0 - level) / 2.0, 100.0 * (1.0 + level) / 2.0


def tail_ratio(
    num_samples,
    den_samples,
    quantile_grid,
    min_exceedances: int = 100,
    bootstrap_b: int = 1000,
    level: float = 0.95,
    rng: np.random.Generator | None = None,
    with_hill: bool = True,
) -> TailReport:
    """Empirical CCDF ratio at denominator quantiles, with bootstrap band.

    Grid points with fewer than ``min_exceedances`` exceedances in either
    sample are dropped; if none survive, raises EmptyGrid. The band is a
    percentile bootstrap over independent with-replacement resamples of the
    two sample sets, evaluated at the fixed x-grid: resampled exceedance
    counts at a fixed threshold are exactly binomial, so they are drawn
    directly rather than by materializing each resample.
    """
    num = np.sort(_as_samples(num_samples, "num_samples"))
    den = np.sort(_as_samples(den_samples, "den_samples"))
    if min_exceedances < 1:
        raise DomainError("min_exceedances must be >= 1")
    if bootstrap_b < 200:
        raise DomainError("bootstrap B must be >= 200")
    rng = rng if rng is not None else np.random.default_rng(0)
    grid = _clean_grid(quantile_grid)

    x = np.quantile(den, 1.0 - grid, method="higher")
    keep = _dedupe_increasing(x)
    grid, x = grid[keep], x[keep]

    c_num = _exceedances(num, x)
    c_den = _exceedances(den, x)
    keep = (c_num >= min_exceedances) & (c_den >= min_exceedances)
    if not np.any(keep):
        raise EmptyGrid("no grid point retains the minimum exceedance count in both samples")
    grid, x, c_num, c_den = grid[keep], x[keep], c_num[keep], c_den[keep]

    p_num = c_num / num.size
    p_den = c_den / den.size
    ratio = p_num / p_den

    lo_q, hi_q = _band_levels(level)
    boot_num = rng.binomial(num.size, p_num, size=(bootstrap_b, x.size)) / num.size
    boot_den = rng.binomial(den.size, p_den, size=(bootstrap_b, x.size)) / den.size
    # a resample can lose every denominator exceedance; floor the count at one
    boot_den = np.maximum(boot_den, 1.0 / den.size)
    boot = boot_num / boot_den
    ci_low = np.minimum(np.percentile(boot, lo_q, axis=0), ratio)
    ci_high = np.maximum(np.percentile(boot, hi_q, axis=0), ratio)

    return TailReport(
        quantile_grid=tuple(grid),
        x_grid=tuple(float(v) for v in x),
        ccdf_num=tuple(p_num),
        ccdf_den=tuple(p_den),
        ratio=tuple(ratio),
        ratio_ci_low=tuple(ci_low),
        ratio_ci_high=tuple(ci_high),
        n_samples=(num.size, den.size),
        min_exceedances=min_exceedances,
        hill_curve=hill_curve(num) if with_hill else {},
    )


def tail_ratio_analytic(
    num_samples,
    den_ccdf: Callable[[np.ndarray], np.ndarray],
    den_quantile: Callable[[np.ndarray], np.ndarray],
    quantile_grid,
    min_exceedances: int = 100,
    bootstrap_b: int = 1000,
    level: float = 0.95,
    rng: np.random.Generator | None = None,
    with_hill: bool = True,
) -> TailReport:
    """Tail ratio against a closed-form denominator CCDF.

    Same contract as ``tail_ratio`` but the denominator is exact, so the
    exceedance floor and the bootstrap apply to the numerator side only.
    """
    num = np.sort(_as_samples(num_samples, "num_samples"))
    if min_exceedances < 1:
        raise DomainError("min_exceedances must be >= 1")
    if bootstrap_b < 200:
        raise DomainError("bootstrap B must be >= 200")
    rng = rng if rng is not None else np.random.default_rng(0)
    grid = _clean_grid(quantile_grid)

    x = np.asarray([float(den_quantile(1.0 - p)) for p in grid])
    keep = _dedupe_increasing(x)
    grid, x = grid[keep], x[keep]

    p_den = np.asarray([float(den_ccdf(v)) for v in x])
    c_num = _exceedances(num, x)
    keep = (c_num >= min_exceedances) & (p_den > 0.0)
    if not np.any(keep):
        raise EmptyGrid("no grid point retains the minimum exceedance count in the numerator")
    grid, x, c_num, p_den = grid[keep], x[keep], c_num[keep], p_den[keep]

    p_num = c_num / num.size
    ratio = p_num / p_den

    lo_q, hi_q = _band_levels(level)
    boot = rng.binomial(num.size, p_num, size=(bootstrap_b, x.size)) / num.size / p_den
    ci_low = np.minimum(np.percentile(boot, lo_q, axis=0), ratio)
    ci_high = np.maximum(np.percentile(boot, hi_q, axis=0), ratio)

    return TailReport(
        quantile_grid=tuple(grid),
        x_grid=tuple(float(v) for v in x),
        ccdf_num=tuple(p_num),
        ccdf_den=tuple(p_den),
        ratio=tuple(ratio),
        ratio_ci_low=tuple(ci_low),
        ratio_ci_high=tuple(ci_high),
        n_samples=(num.size, 0),
        min_exceedances=min_exceedances,
        hill_curve=hill_curve(num) if with_hill else {},
    )


def bootstrap_band(statistic, a, b, B: int = 1000, level: float = 0.95,
                   rng: np.random.Generator | None = None):
    """Percentile bootstrap band for statistic(a, b) under independent resampling.

    ``statistic`` may return a scalar or a fixed-shape array; the band is
    computed percentile-wise along the resample axis.
    """
    if B < 200:
        raise DomainError("bootstrap B must be >= 200")
    a = _as_samples(a, "a")
    b = _as_samples(b, "b")
    rng = rng if rng is not None else np.random.default_rng(0)
    lo_q, hi_q = _band_levels(level)
    stats = [
        statistic(a[rng.integers(0, a.size, a.size)], b[rng.integers(0, b.size, b.size)])
        for _ in range(B)
    ]
    arr = np.asarray(stats, dtype=float)
    low = np.percentile(arr, lo_q, axis=0)
    high = np.percentile(arr, hi_q, axis=0)
    if arr.ndim == 1:
        return float(low), float(high)
    return low, high


# ---------------------------------------------------------------------------
# distribution comparison and decay fitting
# ---------------------------------------------------------------------------

def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance by merge-scan of sorted samples."""
    sa = np.sort(_as_samples(a, "a"))
    sb = np.sort(_as_samples(b, "b"))
    grid = np.concatenate([sa, sb])
    cdf_a = np.searchsorted(sa, grid, side="right") / sa.size
    cdf_b = np.searchsorted(sb, grid, side="right") / sb.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_critical_value(n: int, m: int, level: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value at the given significance level."""
    if n <= 0 or m <= 0:
        raise DomainError("sample sizes must be positive")
    if not 0.0 < level < 1.0:
        raise DomainError("significance level must be in (0, 1)")
    c = np.sqrt(-np.log(level / 2.0) / 2.0)
    return float(c * np.sqrt((n + m) / (n * m)))


def geometric_decay_fit(series: Mapping[int, float]) -> tuple[float, float]:
    """Least-squares fit of log(series_n) = log K + n log eta.

    Returns (eta, r_squared). Needs at least four points, all positive.
    """
    items = sorted((int(n), float(v)) for n, v in series.items())
    if len(items) < 4:
        raise DomainError("geometric fit needs at least 4 points")
    if any(v <= 0.0 for _, v in items):
        raise NonPositive("geometric fit requires strictly positive series values")
    ns = np.asarray([n for n, _ in items], dtype=float)
    logs = np.log([v for _, v in items])
    slope, intercept = np.polyfit(ns, logs, 1)
    fitted = slope * ns + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(np.exp(slope)), r2
