"""Pairwise temporal interactions, dyad series, and the aggregated contact network."""

from __future__ import annotations

import heapq
import math
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator, TransformerMixin

from ._types import (
    MINUTES_PER_DAY,
    DyadSeries,
    InvariantViolation,
    TemporalInteraction,
    day_index,
)
from ._validation import check_sessions


class EntropyUndefinedError(ValueError):
    """Spatial entropy needs at least two interactions."""


def build_temporal_interactions(sessions) -> list:
    """Maximal pairwise co-presence intervals, per WAP.

    Session intersections of a device pair at one WAP are merged when they
    touch, so each TI is maximal. TIs of different pairs may overlap freely.
    Output is sorted by ``(wap_id, t_started, u, v)``.
    """
    by_wap = defaultdict(list)
    for s in check_sessions(sessions):
        by_wap[s.wap_id].append(s)

    pieces = defaultdict(list)  # (u, v, wap) -> [(start, end)]
    for wap, group in by_wap.items():
        group.sort(key=lambda s: (s.t_on, s.t_off, s.device_id))
        active = []  # heap of (t_off, device_id, t_on)
        for s in group:
            while active and active[0][0] <= s.t_on:
                heapq.heappop(active)
            for t_off, device, _ in active:
                if device == s.device_id:
                    continue
                u, v = (device, s.device_id) if device < s.device_id else (s.device_id, device)
                pieces[(u, v, wap)].append((s.t_on, min(t_off, s.t_off)))
            heapq.heappush(active, (s.t_off, s.device_id, s.t_on))

    tis = []
    for (u, v, wap), spans in pieces.items():
        spans.sort()
        start, end = spans[0]
        for a, b in spans[1:]:
            if a <= end:
                end = max(end, b)
            else:
                tis.append(TemporalInteraction(u, v, wap, start, end))
                start, end = a, b
        tis.append(TemporalInteraction(u, v, wap, start, end))
    tis.sort(key=lambda ti: (ti.wap_id, ti.t_started, ti.u, ti.v))
    return tis


def spatial_entropy(series) -> float:
    """Shannon entropy (natural log) of where a dyad's interactions took place."""
    locations = series.locations if isinstance(series, DyadSeries) else list(series)
    n = len(locations)
    if n < 2:
        raise EntropyUndefinedError(f"spatial entropy needs n_ti >= 2, got {n}")
    h = 0.0
    for count in Counter(locations).values():
        p = count / n
        h -= p * math.log(p)
    return h


def build_dyad_series(tis) -> list:
    """Group TIs by pair, order them in time, and derive inter-event gaps.

    ``inter_event[k]`` is the start-to-start gap between consecutive TIs.
    Entropy is filled only for dyads with at least two TIs.
    """
    by_pair = defaultdict(list)
    for ti in tis:
        by_pair[ti.pair].append(ti)
    out = []
    for (u, v) in sorted(by_pair):
        seq = sorted(by_pair[(u, v)], key=lambda ti: (ti.t_started, ti.t_finished, ti.wap_id))
        gaps = [b.t_started - a.t_started for a, b in zip(seq, seq[1:])]
        series = DyadSeries(u, v, seq, gaps)
        if len(seq) >= 2:
            series.entropy = spatial_entropy(series)
        out.append(series)
    return out


def mean_entropy_curve(all_series, return_counts=False):
    """Average spatial entropy over dyads sharing the same interaction count.

    Returns ``{n_ti: mean H}``; with ``return_counts`` also ``{n_ti: N(n_ti)}``.
    Dyads with fewer than two TIs are skipped.
    """
    groups = defaultdict(list)
    for s in all_series:
        if s.n_ti >= 2:
            h = s.entropy if s.entropy is not None else spatial_entropy(s)
            groups[s.n_ti].append(h)
    means = {n: math.fsum(hs) / len(hs) for n, hs in sorted(groups.items())}
    if return_counts:
        return means, {n: len(hs) for n, hs in sorted(groups.items())}
    return means


def split_inter_event(all_series, units_per_day=MINUTES_PER_DAY, tz_offset=0):
    """Split start-to-start gaps by whether both TIs began on the same calendar day.

    Returns ``(same_day, cross_day)`` lists.
    """
    same, cross = [], []
    for s in all_series:
        for a, b in zip(s.tis, s.tis[1:]):
            gap = b.t_started - a.t_started
            if day_index(a.t_started, units_per_day, tz_offset) == day_index(b.t_started, units_per_day, tz_offset):
                same.append(gap)
            else:
                cross.append(gap)
    return same, cross


@dataclass
class ContactNetwork:
    """Static network: devices linked when they share at least one TI."""

    weights: dict = field(default_factory=dict)  # (u, v) -> n_ti
    degree: dict = field(default_factory=dict)

    @property
    def vertices(self) -> list:
        return sorted(self.degree)

    def degree_rank(self) -> list:
        """``(rank, device_id, degree)`` rows; ties broken by device id."""
        order = sorted(self.degree.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(r, d, k) for r, (d, k) in enumerate(order, start=1)]


def aggregate_contact_network(tis) -> ContactNetwork:
    weights = Counter(ti.pair for ti in tis)
    degree = Counter()
    for u, v in weights:
        degree[u] += 1
        degree[v] += 1
    return ContactNetwork(dict(sorted(weights.items())), dict(sorted(degree.items())))


@dataclass
class LeafHubReport:
    rows: list  # (rank, device_id, degree, is_super_member)
    median_degree_all: float
    median_degree_super: float | None
    n_super: int


def leaf_hub_report(cn, super_members) -> LeafHubReport:
    """Degree-vs-rank listing with super-connecting members flagged."""
    super_members = set(super_members)
    rows = [(r, d, k, d in super_members) for r, d, k in cn.degree_rank()]
    flagged = [k for _, _, k, f in rows if f]
    all_degrees = [k for _, _, k, _ in rows]
    return LeafHubReport(
        rows=rows,
        median_degree_all=statistics.median(all_degrees) if all_degrees else float("nan"),
        median_degree_super=statistics.median(flagged) if flagged else None,
        n_super=len(flagged),
    )


# -- structural checks ------------------------------------------------------


def check_dyads(all_series) -> None:
    for s in all_series:
        if len(s.inter_event) != max(s.n_ti - 1, 0):
            raise InvariantViolation(f"dyad {s.u},{s.v}: {len(s.inter_event)} gaps for {s.n_ti} TIs")
        if any(g < 0 for g in s.inter_event):
            raise InvariantViolation(f"dyad {s.u},{s.v}: negative inter-event gap")
        if s.n_ti >= 2:
            h = s.entropy
            bound = math.log(min(len(set(s.locations)), s.n_ti))
            if not (0.0 <= h <= bound + 1e-12):
                raise InvariantViolation(f"dyad {s.u},{s.v}: entropy {h} outside [0, {bound}]")
            if (h == 0.0) != (len(set(s.locations)) == 1):
                raise InvariantViolation(f"dyad {s.u},{s.v}: zero entropy iff single location violated")


def check_ti_sequences(tis) -> None:
    """Per pair and location, TIs form a strictly increasing, non-touching sequence."""
    last = {}
    for ti in sorted(tis, key=lambda ti: (ti.u, ti.v, ti.wap_id, ti.t_started)):
        if ti.t_started >= ti.t_finished:
            raise InvariantViolation(f"empty TI {ti}")
        key = (ti.u, ti.v, ti.wap_id)
        if key in last and last[key] >= ti.t_started:
            raise InvariantViolation(f"TIs of {key} overlap or touch at {ti.t_started}")
        last[key] = ti.t_finished


def check_ti_maximality(tis, sessions) -> None:
    """Neither endpoint of a TI can be pushed out while both devices remain present."""
    presence = defaultdict(list)
    for s in sessions:
        presence[(s.device_id, s.wap_id)].append((s.t_on, s.t_off))

    def present(device, wap, t):
        # Is the device present during the unit step [t, t+1)?
        return any(a <= t < b for a, b in presence[(device, wap)])

    for ti in tis:
        for t in (ti.t_started - 1, ti.t_finished):
            if present(ti.u, ti.wap_id, t) and present(ti.v, ti.wap_id, t):
                raise InvariantViolation(f"TI {ti} is not maximal at {t}")
        for t in (ti.t_started, ti.t_finished - 1):
            if not (present(ti.u, ti.wap_id, t) and present(ti.v, ti.wap_id, t)):
                raise InvariantViolation(f"TI {ti} includes a step without co-presence at {t}")


def write_ti_table(tis, fh) -> None:
    fh.write("u,v,wap_id,t_started,t_finished\n")
    for ti in tis:
        fh.write(f"{ti.u},{ti.v},{ti.wap_id},{ti.t_started},{ti.t_finished}\n")


def write_dyad_summary(all_series, fh) -> None:
    fh.write("u,v,n_ti,entropy,first_start,last_start\n")
    for s in all_series:
        h = "" if s.entropy is None else repr(s.entropy)
        fh.write(f"{s.u},{s.v},{s.n_ti},{h},{s.tis[0].t_started},{s.tis[-1].t_started}\n")


def write_degree_rank(report, fh) -> None:
    fh.write("rank,device_id,degree,is_super_member\n")
    for r, d, k, flag in report.rows:
        fh.write(f"{r},{d},{k},{int(flag)}\n")


class TemporalInteractionExtractor(TransformerMixin, BaseEstimator):
    """Transformer from normalized sessions to temporal interactions."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return build_temporal_interactions(X)


class DyadAnalyzer(BaseEstimator):
    """Fit dyad series and the contact network from temporal interactions.

    Attributes
    ----------
    series_ : list of DyadSeries
    contact_network_ : ContactNetwork
    entropy_curve_ : dict
        Mean spatial entropy per interaction count.
    """

    def fit(self, X, y=None):
        tis = list(X)
        self.series_ = build_dyad_series(tis)
        self.contact_network_ = aggregate_contact_network(tis)
        self.entropy_curve_ = mean_entropy_curve(self.series_)
        return self
