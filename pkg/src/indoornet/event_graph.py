"""Event interactions, the transmission graph linking them, and its aggregate."""

from __future__ import annotations

import bisect
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator, TransformerMixin

from ._types import (
    RFID_LOCATION,
    EventInteraction,
    InvariantViolation,
    TransmissionEdge,
    members_key,
)
from ._validation import check_contacts, check_sessions
from .ingest import SLOT_SECONDS


def _assign_ids(raw):
    """raw: iterable of (wap_id, t_begin, t_end, members). Sorted, numbered from 0."""
    raw = sorted(raw, key=lambda r: (r[0], r[1], members_key(r[3])))
    return [EventInteraction(k, wap, frozenset(m), tb, te) for k, (wap, tb, te, m) in enumerate(raw)]


def build_event_interactions(sessions) -> list:
    """Sweep each WAP's connect/disconnect events into event interactions.

    All events sharing a timestamp are applied together, so a disconnect and a
    connect at the same minute never produce a zero-length membership state.
    Every maximal interval of constant membership with at least two devices
    becomes one EI. Output is sorted by ``(wap_id, t_begin)`` and ``ei_id`` is
    the position in that order.
    """
    events = defaultdict(lambda: defaultdict(list))
    for s in check_sessions(sessions):
        events[s.wap_id][s.t_on].append((s.device_id, 1))
        events[s.wap_id][s.t_off].append((s.device_id, -1))

    raw = []
    for wap, by_time in events.items():
        present = Counter()
        current = frozenset()
        since = None
        for t in sorted(by_time):
            for device, step in by_time[t]:
                present[device] += step
                if present[device] == 0:
                    del present[device]
            new = frozenset(present)
            if new == current:
                continue
            if len(current) >= 2:
                raw.append((wap, since, t, current))
            current, since = new, t
    return _assign_ids(raw)


def build_contact_event_interactions(records, slot=SLOT_SECONDS) -> list:
    """Event interactions from proximity triples (no location information).

    In each contact slot the active contacts form a graph whose connected
    components are the contact groups. A group that persists unchanged
    through consecutive slots (``t' - t <= slot``) is one EI spanning
    ``[first_t - slot, last_t]``. All EIs sit at the synthetic location, where
    simultaneous groups are member-disjoint rather than time-disjoint.
    """
    by_time = defaultdict(list)
    for r in check_contacts(records):
        by_time[r.t].append((r.i, r.j))

    raw = []
    open_groups = {}  # members -> (first_t, last_t)
    prev_t = None
    for t in sorted(by_time):
        groups = _components(by_time[t])
        still_open = {}
        for members in groups:
            span = open_groups.pop(members, None)
            if span is not None and t - span[1] <= slot and prev_t == span[1]:
                still_open[members] = (span[0], t)
            else:
                if span is not None:
                    raw.append((RFID_LOCATION, span[0] - slot, span[1], members))
                still_open[members] = (t, t)
        for members, span in open_groups.items():
            raw.append((RFID_LOCATION, span[0] - slot, span[1], members))
        open_groups = still_open
        prev_t = t
    for members, span in open_groups.items():
        raw.append((RFID_LOCATION, span[0] - slot, span[1], members))
    return _assign_ids(raw)


def _components(pairs):
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups = defaultdict(set)
    for x in list(parent):
        groups[find(x)].add(x)
    return [frozenset(g) for g in groups.values()]


def build_transmission_graph(eis) -> list:
    """Link event interactions into directed transmission edges.

    For every sink EI and each of its members, the source is the member's most
    recent EI that ended no later than the sink began. Members are grouped by
    that source; each group yields one edge carrying the group as ``shared``,
    ``delta = t_begin(sink) - t_begin(source)`` and
    ``t_observed = t_begin(source)``. Because every member has exactly one
    source, the shared sets of a sink's incoming edges are disjoint.

    Edges are ordered by ``(sink, source)``.
    """
    by_id = {e.ei_id: e for e in eis}
    timeline = defaultdict(list)  # member -> sorted [(t_end, ei_id)]
    for e in eis:
        for m in e.members:
            timeline[m].append((e.t_end, e.ei_id))
    for entries in timeline.values():
        entries.sort()
    ends = {m: [te for te, _ in entries] for m, entries in timeline.items()}

    edges = []
    for sink in sorted(eis, key=lambda e: e.ei_id):
        groups = defaultdict(set)
        for m in sink.members:
            k = bisect.bisect_right(ends[m], sink.t_begin)
            if k == 0:
                continue
            # Among EIs tied on t_end, the highest ei_id is the latest.
            groups[timeline[m][k - 1][1]].add(m)
        for src_id in sorted(groups):
            src = by_id[src_id]
            edges.append(
                TransmissionEdge(
                    source=src_id,
                    sink=sink.ei_id,
                    shared=frozenset(groups[src_id]),
                    delta=sink.t_begin - src.t_begin,
                    t_observed=src.t_begin,
                )
            )
    return edges


@dataclass
class AggregatedTransmissionGraph:
    """Transmission graph collapsed over the observation window.

    Vertices are EI identities ``(wap_id, members)`` with their occurrence
    count ``n_ei``; edges map ``(source identity, sink identity)`` to the
    number of repeated transmission paths ``n_tp``.
    """

    n_ei: dict = field(default_factory=dict)
    n_tp: dict = field(default_factory=dict)
    k_in: dict = field(default_factory=dict)
    k_out: dict = field(default_factory=dict)

    @property
    def vertices(self) -> list:
        return sorted(self.n_ei, key=_identity_sort_key)

    def to_dot(self) -> str:
        lines = ["digraph atg {"]
        for v in self.vertices:
            lines.append(f'  "{identity_label(v)}" [n_ei={self.n_ei[v]}];')
        for (a, b), n in sorted(self.n_tp.items(), key=lambda kv: (_identity_sort_key(kv[0][0]), _identity_sort_key(kv[0][1]))):
            lines.append(f'  "{identity_label(a)}" -> "{identity_label(b)}" [label={n}];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        adjacency = {identity_label(v): {} for v in self.vertices}
        for (a, b), n in self.n_tp.items():
            adjacency[identity_label(a)][identity_label(b)] = n
        payload = {
            "vertices": [
                {
                    "id": identity_label(v),
                    "wap_id": v[0],
                    "members": sorted(v[1]),
                    "n_ei": self.n_ei[v],
                    "k_in": self.k_in[v],
                    "k_out": self.k_out[v],
                }
                for v in self.vertices
            ],
            "adjacency": {k: dict(sorted(d.items())) for k, d in adjacency.items()},
        }
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def identity_label(identity) -> str:
    wap, members = identity
    return f"{wap}:{members_key(members)}"


def _identity_sort_key(identity):
    return (identity[0], members_key(identity[1]))


def aggregate_transmission_graph(edges, eis) -> AggregatedTransmissionGraph:
    by_id = {e.ei_id: e for e in eis}
    atg = AggregatedTransmissionGraph()
    atg.n_ei = dict(Counter(e.identity for e in eis))
    atg.n_tp = dict(Counter((by_id[e.source].identity, by_id[e.sink].identity) for e in edges))
    atg.k_in = {v: 0 for v in atg.n_ei}
    atg.k_out = {v: 0 for v in atg.n_ei}
    for a, b in atg.n_tp:
        atg.k_out[a] += 1
        atg.k_in[b] += 1
    return atg


@dataclass
class SuperConnecting:
    vertices: list  # [(identity, k_in, k_out)]
    members: frozenset


def find_super_connecting(atg, k_min) -> SuperConnecting:
    """ATG vertices with both ``k_in >= k_min`` and ``k_out >= k_min``."""
    if k_min < 1:
        raise ValueError("k_min must be >= 1")
    hits = [(v, atg.k_in[v], atg.k_out[v]) for v in atg.n_ei if atg.k_in[v] >= k_min and atg.k_out[v] >= k_min]
    hits.sort(key=lambda h: (-(h[1] + h[2]), _identity_sort_key(h[0])))
    members = frozenset().union(*(h[0][1] for h in hits)) if hits else frozenset()
    return SuperConnecting(hits, members)


def choose_k_min(atg, lo=5, hi=50):
    """Smallest ``k_min`` whose super-connecting set has between lo and hi vertices.

    Returns None if no threshold lands in the window.
    """
    both = sorted((min(atg.k_in[v], atg.k_out[v]) for v in atg.n_ei), reverse=True)
    top = both[0] if both else 0
    for k in range(1, top + 1):
        count = sum(1 for d in both if d >= k)
        if lo <= count <= hi:
            return k
    return None


# -- structural checks ------------------------------------------------------


def check_exclusivity(eis, exclusive=True) -> None:
    """EIs at one location never overlap in time.

    With ``exclusive=False`` (proximity data, many groups per location) the
    requirement weakens to: EIs overlapping in time share no member.
    """
    by_wap = defaultdict(list)
    for e in eis:
        by_wap[e.wap_id].append(e)
    for wap, group in by_wap.items():
        group.sort(key=lambda e: (e.t_begin, e.t_end))
        if exclusive:
            for a, b in zip(group, group[1:]):
                if b.t_begin < a.t_end:
                    raise InvariantViolation(f"EIs {a.ei_id} and {b.ei_id} overlap at {wap}")
        else:
            _check_member_disjoint(group)


def _check_member_disjoint(eis):
    last_end = {}
    for e in sorted(eis, key=lambda e: (e.t_begin, e.t_end)):
        for m in e.members:
            prev = last_end.get(m)
            if prev is not None and prev[0] > e.t_begin:
                raise InvariantViolation(f"member {m} is in overlapping EIs {prev[1]} and {e.ei_id}")
            last_end[m] = (e.t_end, e.ei_id)


def check_edges(edges, eis) -> None:
    """Shared sets non-empty and disjoint per sink; ``delta`` bounded below."""
    by_id = {e.ei_id: e for e in eis}
    seen = defaultdict(set)
    for edge in edges:
        src = by_id[edge.source]
        if not edge.shared:
            raise InvariantViolation(f"edge {edge.source}->{edge.sink} has no shared member")
        if not edge.shared <= src.members & by_id[edge.sink].members:
            raise InvariantViolation(f"edge {edge.source}->{edge.sink} shares non-members")
        if seen[edge.sink] & edge.shared:
            raise InvariantViolation(f"sink {edge.sink} has intersecting shared sets")
        seen[edge.sink] |= edge.shared
        if edge.delta < src.duration:
            raise InvariantViolation(f"edge {edge.source}->{edge.sink}: delta {edge.delta} < source duration {src.duration}")


def write_ei_table(eis, fh) -> None:
    fh.write("ei_id,wap_id,members,t_begin,t_end\n")
    for e in eis:
        fh.write(f"{e.ei_id},{e.wap_id},{members_key(e.members)},{e.t_begin},{e.t_end}\n")


def write_edge_table(edges, fh) -> None:
    fh.write("source_ei,sink_ei,shared,delta,t_observed\n")
    for e in edges:
        fh.write(f"{e.source},{e.sink},{members_key(e.shared)},{e.delta},{e.t_observed}\n")


class EventInteractionExtractor(TransformerMixin, BaseEstimator):
    """Transformer from sessions (or contact triples) to event interactions.

    Parameters
    ----------
    source : {"sessions", "contacts"}
        Whether ``X`` holds WiFi sessions or SocioPatterns contact records.
    slot : int
        Contact slot length in seconds; only used for ``source="contacts"``.
    """

    def __init__(self, source="sessions", slot=SLOT_SECONDS):
        self.source = source
        self.slot = slot

    def fit(self, X, y=None):
        if self.source not in ("sessions", "contacts"):
            raise ValueError(f"source must be 'sessions' or 'contacts', got {self.source!r}")
        return self

    def transform(self, X):
        if self.source == "contacts":
            return build_contact_event_interactions(X, slot=self.slot)
        return build_event_interactions(X)


class TransmissionGraphBuilder(BaseEstimator):
    """Fit the transmission graph and its aggregate from event interactions.

    Attributes
    ----------
    eis_ : list of EventInteraction
    edges_ : list of TransmissionEdge
    atg_ : AggregatedTransmissionGraph
    """

    def __init__(self, validate=True, exclusive=True):
        self.validate = validate
        self.exclusive = exclusive

    def fit(self, X, y=None):
        eis = list(X)
        edges = build_transmission_graph(eis)
        if self.validate:
            check_exclusivity(eis, exclusive=self.exclusive)
            check_edges(edges, eis)
        self.eis_ = eis
        self.edges_ = edges
        self.atg_ = aggregate_transmission_graph(edges, eis)
        return self

    def transform(self, X=None):
        return self.edges_

    def fit_transform(self, X, y=None):
        return self.fit(X).edges_

    def super_connecting(self, k_min):
        return find_super_connecting(self.atg_, k_min)
