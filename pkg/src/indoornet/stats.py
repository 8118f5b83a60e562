"""Distribution estimates, dependence coefficients, and de-seasoning null models."""

from __future__ import annotations

import bisect
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import mpmath
from scipy import optimize, special
from scipy import stats as sps
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._types import MINUTES_PER_DAY, day_index
from ._validation import check_samples

MIN_FIT_SAMPLES = 50


class FitError(ValueError):
    pass


class UndefinedCoefficientError(ValueError):
    pass


# -- binned densities ---------------------------------------------------------


@dataclass
class BinnedDistribution:
    scheme: str
    edges: np.ndarray
    densities: np.ndarray
    counts: np.ndarray
    sample_count: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        if self.scheme == "log":
            return np.sqrt(self.edges[:-1] * self.edges[1:])
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def total_mass(self) -> float:
        return math.fsum(self.densities * self.widths)

    def rows(self):
        for lo, hi, d, c in zip(self.edges[:-1], self.edges[1:], self.densities, self.counts):
            yield float(lo), float(hi), float(d), int(c)


def log_binned_pdf(samples, bins_per_decade=10) -> BinnedDistribution:
    """Probability density on logarithmic bins ``[10**(k/b), 10**((k+1)/b))``.

    Bins between the smallest and largest occupied one are all kept, empty
    ones with zero density.
    """
    x = check_samples(samples, positive=True)
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be >= 1")
    b = bins_per_decade
    k = np.floor(np.log10(x) * b).astype(np.int64)
    # Guard floating error at exact decade boundaries.
    k = np.where(10.0 ** (k / b) > x, k - 1, k)
    k = np.where(10.0 ** ((k + 1) / b) <= x, k + 1, k)
    k_lo, k_hi = int(k.min()), int(k.max())
    edges = 10.0 ** (np.arange(k_lo, k_hi + 2) / b)
    counts = np.bincount(k - k_lo, minlength=k_hi - k_lo + 1)
    densities = counts / (x.size * np.diff(edges))
    return BinnedDistribution("log", edges, densities, counts, int(x.size))


def linear_binned_pdf(samples, width=1.0, origin=None) -> BinnedDistribution:
    """Probability density on equal-width bins (``width=1`` for integer data)."""
    x = check_samples(samples)
    if width <= 0:
        raise ValueError("width must be > 0")
    lo = float(np.floor(x.min() / width) * width) if origin is None else float(origin)
    if x.min() < lo:
        raise ValueError("origin above the smallest sample")
    idx = np.floor((x - lo) / width).astype(np.int64)
    n_bins = int(idx.max()) + 1
    counts = np.bincount(idx, minlength=n_bins)
    edges = lo + width * np.arange(n_bins + 1)
    densities = counts / (x.size * width)
    return BinnedDistribution("linear", edges, densities, counts, int(x.size))


def ccdf(samples) -> list:
    """``[(x, P(X >= x))]`` over the distinct sample values, ascending."""
    x = np.sort(check_samples(samples))
    values, first = np.unique(x, return_index=True)
    n = x.size
    return [(float(v), (n - i) / n) for v, i in zip(values, first)]


# -- power-law fitting --------------------------------------------------------


@dataclass
class PowerLawFit:
    """Tail fit ``p(x) ~ x**-exponent * exp(-x / cutoff)`` for ``x >= x_min``.

    ``cutoff`` is None when the likelihood-ratio test does not favour an
    exponential cutoff over the pure power law.
    """

    exponent: float
    x_min: float
    cutoff: Optional[float]
    ks: float
    n: int
    n_tail: int
    pure_exponent: float
    cutoff_lr: float
    cutoff_p: float
    vs_exponential_r: float
    vs_exponential_p: float

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "x_min": self.x_min,
            "cutoff": self.cutoff,
            "KS": self.ks,
            "n": self.n,
            "n_tail": self.n_tail,
            "pure_exponent": self.pure_exponent,
            "cutoff_lr": self.cutoff_lr,
            "cutoff_p": self.cutoff_p,
            "vs_exponential_r": self.vs_exponential_r,
            "vs_exponential_p": self.vs_exponential_p,
        }


def _scan_xmin(x, max_candidates):
    """Clauset-style x_min search; ``x`` sorted ascending."""
    n = x.size
    logs = np.log(x)
    suffix = np.concatenate([np.cumsum(logs[::-1])[::-1], [0.0]])
    values, first = np.unique(x, return_index=True)
    # Leave at least MIN_FIT_SAMPLES points in the tail.
    keep = (n - first) >= MIN_FIT_SAMPLES
    values, first = values[keep], first[keep]
    if values.size == 0:
        raise FitError("not enough samples above any candidate x_min")
    if values.size > max_candidates:
        pick = np.unique(np.linspace(0, values.size - 1, max_candidates).round().astype(int))
        values, first = values[pick], first[pick]

    best = None
    for xm, i in zip(values, first):
        tail = x[i:]
        m = tail.size
        denom = suffix[i] - m * math.log(xm)
        if denom <= 0:
            continue
        alpha = 1.0 + m / denom
        cdf_fit = 1.0 - (tail / xm) ** (1.0 - alpha)
        # Empirical CDF just after and just before each sorted point.
        ranks = np.arange(1, m + 1) / m
        d = max(np.max(np.abs(ranks - cdf_fit)), np.max(np.abs(ranks - 1.0 / m - cdf_fit)))
        if best is None or d < best[0]:
            best = (float(d), float(xm), float(alpha), int(i))
    if best is None:
        raise FitError("degenerate sample: no usable x_min")
    return best


def _log_norm_truncated(alpha, lam, x_min):
    """log of integral_{x_min}^inf x**-alpha exp(-lam x) dx, via the upper incomplete gamma."""
    # integral = lam**(alpha-1) * Gamma(1-alpha, lam*x_min); mpmath handles 1-alpha <= 0.
    g = mpmath.gammainc(1.0 - alpha, lam * x_min)
    if not g > 0:
        raise ValueError("normalization underflow")
    return (alpha - 1.0) * math.log(lam) + float(mpmath.log(g))


def _fit_truncated(tail, x_min, alpha0):
    n = tail.size
    s_log = float(np.sum(np.log(tail)))
    s_x = float(np.sum(tail))
    scale = float(np.mean(tail))

    def nll(theta):
        alpha, log_lam = theta
        lam = math.exp(log_lam)
        try:
            return alpha * s_log + lam * s_x + n * _log_norm_truncated(alpha, lam, x_min)
        except (ValueError, OverflowError, ZeroDivisionError):
            return np.inf

    lam_lo, lam_hi = 1e-6 / scale, 1e3 / x_min
    start = [min(max(alpha0, 0.0), 5.0), math.log(max(lam_lo * 10, 0.1 / scale))]
    res = optimize.minimize(
        nll, start, method="L-BFGS-B",
        bounds=[(0.0, 10.0), (math.log(lam_lo), math.log(lam_hi))],
    )
    alpha, log_lam = res.x
    return float(alpha), float(math.exp(log_lam)), -float(res.fun)


def fit_truncated_power_law(samples, x_min=None, significance=0.05, max_candidates=400) -> PowerLawFit:
    """Maximum-likelihood power-law tail with an optional exponential cutoff.

    ``x_min`` minimizes the KS distance between the tail and its continuous
    power-law MLE. On that tail a power law with exponential cutoff is fit and
    kept when the nested likelihood-ratio test rejects the pure power law at
    ``significance``. A Vuong test against a pure exponential tail is also
    reported (negative R favours the exponential).
    """
    x = np.sort(check_samples(samples, positive=True))
    if x.size < MIN_FIT_SAMPLES:
        raise FitError(f"need at least {MIN_FIT_SAMPLES} samples, got {x.size}")
    if x[0] == x[-1]:
        raise FitError("degenerate sample: all values equal")

    if x_min is None:
        ks, xm, alpha, i = _scan_xmin(x, max_candidates)
    else:
        xm = float(x_min)
        i = int(np.searchsorted(x, xm, side="left"))
        if x.size - i < MIN_FIT_SAMPLES:
            raise FitError("too few samples above x_min")
        tail = x[i:]
        alpha = 1.0 + tail.size / float(np.sum(np.log(tail / xm)))
        cdf_fit = 1.0 - (tail / xm) ** (1.0 - alpha)
        ranks = np.arange(1, tail.size + 1) / tail.size
        ks = float(max(np.max(np.abs(ranks - cdf_fit)), np.max(np.abs(ranks - 1 / tail.size - cdf_fit))))
    tail = x[i:]
    m = tail.size
    logs = np.log(tail / xm)

    ll_pl_each = math.log(alpha - 1.0) - math.log(xm) - alpha * logs
    ll_pl = float(np.sum(ll_pl_each))
    a_t, lam, ll_t = _fit_truncated(tail, xm, alpha)
    lr = max(2.0 * (ll_t - ll_pl), 0.0)
    p_cut = float(sps.chi2.sf(lr, 1))
    use_cutoff = p_cut < significance

    # Vuong test: power law vs shifted exponential on the same tail.
    rate = 1.0 / float(np.mean(tail - xm)) if np.mean(tail - xm) > 0 else np.inf
    ll_exp_each = math.log(rate) - rate * (tail - xm)
    diff = ll_pl_each - ll_exp_each
    r = float(np.sum(diff))
    sd = float(np.std(diff))
    p_v = float(special.erfc(abs(r) / (math.sqrt(2.0 * m) * sd))) if sd > 0 else 1.0

    return PowerLawFit(
        exponent=a_t if use_cutoff else float(alpha),
        x_min=float(xm),
        cutoff=(1.0 / lam) if use_cutoff else None,
        ks=float(ks),
        n=int(x.size),
        n_tail=int(m),
        pure_exponent=float(alpha),
        cutoff_lr=float(lr),
        cutoff_p=p_cut,
        vs_exponential_r=r,
        vs_exponential_p=p_v,
    )


class TruncatedPowerLaw(BaseEstimator):
    """Estimator wrapper around :func:`fit_truncated_power_law`.

    Attributes
    ----------
    exponent_, x_min_, cutoff_, ks_ : float
    fit_ : PowerLawFit
    """

    def __init__(self, x_min=None, significance=0.05, max_candidates=400):
        self.x_min = x_min
        self.significance = significance
        self.max_candidates = max_candidates

    def fit(self, X, y=None):
        self.fit_ = fit_truncated_power_law(
            np.ravel(X), x_min=self.x_min, significance=self.significance,
            max_candidates=self.max_candidates,
        )
        self.exponent_ = self.fit_.exponent
        self.x_min_ = self.fit_.x_min
        self.cutoff_ = self.fit_.cutoff
        self.ks_ = self.fit_.ks
        return self

    def pdf(self, x):
        """Fitted density on the tail (zero below ``x_min_``)."""
        check_is_fitted(self, "fit_")
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        mask = x >= self.x_min_
        a = self.exponent_
        if self.cutoff_ is None:
            out[mask] = (a - 1.0) / self.x_min_ * (x[mask] / self.x_min_) ** (-a)
        else:
            lam = 1.0 / self.cutoff_
            log_z = _log_norm_truncated(a, lam, self.x_min_)
            out[mask] = np.exp(-a * np.log(x[mask]) - lam * x[mask] - log_z)
        return out


# -- dependence coefficients --------------------------------------------------


def pearson(xs, ys) -> float:
    """Product-moment correlation of two equal-length sequences."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D and of equal length")
    if x.size < 2:
        raise UndefinedCoefficientError("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCoefficientError("zero variance")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def memory_coefficient(pairs) -> float:
    """Memory coefficient of an ordered pairing ``(x_k, y_k)``.

    ``M = 1/n * sum (x_k - m1)(y_k - m2) / (s1 s2)``, with ``m1, s1`` the mean
    and standard deviation of the first coordinates and ``m2, s2`` of the
    second. For a duration sequence, pass consecutive values as pairs (see
    :func:`consecutive_pairs`).
    """
    arr = np.asarray(list(pairs), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("pairs must be a sequence of (x, y)")
    n = arr.shape[0]
    if n < 2:
        raise UndefinedCoefficientError("need at least 2 pairs")
    first, second = arr[:, 0], arr[:, 1]
    m1, m2 = math.fsum(first) / n, math.fsum(second) / n
    s1 = math.sqrt(math.fsum((first - m1) ** 2) / n)
    s2 = math.sqrt(math.fsum((second - m2) ** 2) / n)
    if s1 == 0.0 or s2 == 0.0:
        raise UndefinedCoefficientError("zero marginal variance")
    m = math.fsum((first - m1) * (second - m2)) / (n * s1 * s2)
    return min(1.0, max(-1.0, m))


def consecutive_pairs(sequence) -> list:
    seq = list(sequence)
    return list(zip(seq, seq[1:]))


def dependence_table(edges, eis) -> dict:
    """Correlations between source/sink EI durations and transmission durations."""
    by_id = {e.ei_id: e for e in eis}
    src = [by_id[e.source].duration for e in edges]
    snk = [by_id[e.sink].duration for e in edges]
    dlt = [e.delta for e in edges]
    out = {}
    for name, a, b in (("source_vs_sink_duration", src, snk), ("source_duration_vs_delta", src, dlt)):
        row = {"n": len(a)}
        for label, fn in (("pearson", lambda: pearson(a, b)), ("memory", lambda: memory_coefficient(list(zip(a, b))))):
            try:
                row[label] = fn()
            except (UndefinedCoefficientError, ValueError):
                row[label] = None
        out[name] = row
    return out


# -- transmission-duration periodicity -----------------------------------------


def integral_days(deltas, units_per_day=MINUTES_PER_DAY) -> dict:
    """Histogram of whole days ``floor(delta / units_per_day)``; day 0 is same-day."""
    days = Counter()
    for d in deltas:
        if d < 0:
            raise ValueError(f"negative duration {d}")
        days[int(d // units_per_day)] += 1
    return dict(sorted(days.items()))


def natural_deseason(edges, eis, units_per_day=MINUTES_PER_DAY, tz_offset=0) -> list:
    """Transmission durations of edges whose source and sink begin on the same day."""
    by_id = {e.ei_id: e for e in eis}
    out = []
    for edge in edges:
        a = by_id[edge.source].t_begin
        b = by_id[edge.sink].t_begin
        if day_index(a, units_per_day, tz_offset) == day_index(b, units_per_day, tz_offset):
            out.append(edge.delta)
    return out


# -- time-shuffled null model ---------------------------------------------------


class _Timeline:
    """Sorted disjoint intervals keyed by begin time."""

    def __init__(self):
        self.begins = []
        self.items = []  # (begin, end, idx)

    def add(self, begin, end, idx):
        k = bisect.bisect_left(self.items, (begin, end, idx))
        self.items.insert(k, (begin, end, idx))
        self.begins.insert(k, begin)

    def remove(self, begin, end, idx):
        k = bisect.bisect_left(self.items, (begin, end, idx))
        del self.items[k]
        del self.begins[k]

    def fits(self, begin, end):
        k = bisect.bisect_left(self.begins, begin)
        if k < len(self.items) and self.items[k][0] < end:
            return False
        if k > 0 and self.items[k - 1][1] > begin:
            return False
        return True


def time_shuffled_null(eis, seed=None, n_swaps_factor=10, exclusive=True, return_stats=False):
    """Randomize EI start times by pairwise swaps, rejecting conflicting swaps.

    Each attempt picks two EIs uniformly and exchanges their ``t_begin`` while
    each keeps its own duration. With ``exclusive=True`` a swap is rejected
    if it makes two EIs at one WAP overlap; with ``exclusive=False`` (many
    groups per location) it is rejected if a member would sit in two
    overlapping EIs. ``n_swaps_factor * len(eis)`` swaps are attempted.

    Returns the shuffled EIs in input order (ids, members, locations and
    durations unchanged). With ``return_stats`` also returns a metadata dict.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    eis = list(eis)
    n = len(eis)
    begin = [e.t_begin for e in eis]
    dur = [e.duration for e in eis]

    def keys(k):
        return (("w", eis[k].wap_id),) if exclusive else tuple(("m", m) for m in eis[k].members)

    lines = defaultdict(_Timeline)
    for k in range(n):
        for key in keys(k):
            lines[key].add(begin[k], begin[k] + dur[k], k)

    attempts = n_swaps_factor * n if n >= 2 else 0
    accepted = 0
    if attempts:
        picks = rng.integers(0, n, size=(attempts, 2))
        for a, b in picks:
            a, b = int(a), int(b)
            if a == b or begin[a] == begin[b]:
                continue
            na, nb = begin[b], begin[a]
            for k in (a, b):
                for key in keys(k):
                    lines[key].remove(begin[k], begin[k] + dur[k], k)
            ok = all(lines[key].fits(na, na + dur[a]) for key in keys(a))
            if ok:
                for key in keys(a):
                    lines[key].add(na, na + dur[a], a)
                ok = all(lines[key].fits(nb, nb + dur[b]) for key in keys(b))
                for key in keys(a):
                    lines[key].remove(na, na + dur[a], a)
            if ok:
                begin[a], begin[b] = na, nb
                accepted += 1
            for k in (a, b):
                for key in keys(k):
                    lines[key].add(begin[k], begin[k] + dur[k], k)

    shuffled = [replace(e, t_begin=begin[k], t_end=begin[k] + dur[k]) for k, e in enumerate(eis)]
    if not return_stats:
        return shuffled
    stats = {
        "seed": seed if isinstance(seed, (int, type(None))) else None,
        "n_swaps_factor": n_swaps_factor,
        "exclusive": exclusive,
        "attempted": attempts,
        "accepted": accepted,
        "acceptance_rate": accepted / attempts if attempts else 0.0,
        "scheme": "pairwise begin-time swap with overlap rejection",
    }
    return shuffled, stats


class TimeShuffler(TransformerMixin, BaseEstimator):
    """Transformer form of :func:`time_shuffled_null`.

    Attributes
    ----------
    acceptance_rate_ : float
    stats_ : dict
    """

    def __init__(self, random_state=None, n_swaps_factor=10, exclusive=True):
        self.random_state = random_state
        self.n_swaps_factor = n_swaps_factor
        self.exclusive = exclusive

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        out, self.stats_ = time_shuffled_null(
            X, seed=self.random_state, n_swaps_factor=self.n_swaps_factor,
            exclusive=self.exclusive, return_stats=True,
        )
        self.acceptance_rate_ = self.stats_["acceptance_rate"]
        return out


def check_normalized(dist, tol=1e-9) -> None:
    from ._types import InvariantViolation

    if np.any(dist.densities < 0):
        raise InvariantViolation("negative density")
    if np.any(np.diff(dist.edges) <= 0):
        raise InvariantViolation("bin edges not strictly increasing")
    mass = dist.total_mass()
    if abs(mass - 1.0) > tol:
        raise InvariantViolation(f"distribution integrates to {mass!r}")
