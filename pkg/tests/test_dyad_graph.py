import math
from collections import defaultdict

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indoornet import DyadSeries, InvariantViolation, Session, TemporalInteraction
from indoornet.dyad_graph import (
    DyadAnalyzer,
    EntropyUndefinedError,
    TemporalInteractionExtractor,
    aggregate_contact_network,
    build_dyad_series,
    build_temporal_interactions,
    check_dyads,
    check_ti_maximality,
    check_ti_sequences,
    leaf_hub_report,
    mean_entropy_curve,
    spatial_entropy,
    split_inter_event,
)
from indoornet.event_graph import build_event_interactions
from indoornet.ingest import normalize_sessions
from indoornet.synth import random_instance

F1_TIS = [
    TemporalInteraction("A", "B", "w1", 10, 40),
    TemporalInteraction("A", "C", "w1", 20, 30),
    TemporalInteraction("B", "C", "w1", 20, 30),
    TemporalInteraction("A", "C", "w1", 60, 70),
]


def ti(start, wap="w1", u="x", v="y", length=5):
    return TemporalInteraction(u, v, wap, start, start + length)


def test_f1_temporal_interactions(f1_sessions):
    assert build_temporal_interactions(f1_sessions) == F1_TIS


def test_ti_pair_is_canonical():
    t = TemporalInteraction("B", "A", "w1", 0, 1)
    assert (t.u, t.v) == ("A", "B")


def test_disjoint_sessions_no_ti():
    assert build_temporal_interactions([Session("x", "w1", 0, 10), Session("y", "w1", 10, 20)]) == []


def test_touching_sessions_of_one_device_merge_into_one_ti():
    # Unnormalized input: x reconnects at the same minute; the TI stays maximal.
    s = [Session("x", "w1", 0, 10), Session("x", "w1", 10, 20), Session("y", "w1", 0, 20)]
    assert build_temporal_interactions(s) == [TemporalInteraction("x", "y", "w1", 0, 20)]


def test_f1_dyad_series():
    series = {(s.u, s.v): s for s in build_dyad_series(F1_TIS)}
    ac, ab = series[("A", "C")], series[("A", "B")]
    assert (ac.n_ti, ac.inter_event) == (2, [40])
    assert ac.entropy == 0.0
    assert (ab.n_ti, ab.inter_event, ab.entropy) == (1, [], None)


def test_simultaneous_starts_at_two_waps():
    (s,) = build_dyad_series([ti(0), ti(10, "w1"), ti(10, "w2")])
    assert s.inter_event == [10, 0]


def test_entropy_closed_forms():
    assert spatial_entropy(["w1"] * 4) == 0.0
    assert abs(spatial_entropy(["w1", "w1", "w2", "w2"]) - math.log(2)) <= 1e-12
    expected = -(0.5 * math.log(0.5) + 2 * 0.25 * math.log(0.25))
    assert abs(spatial_entropy(["w1", "w1", "w2", "w3"]) - expected) <= 1e-12
    assert round(expected, 4) == 1.0397


def test_entropy_of_series_object():
    s = DyadSeries("x", "y", [ti(0, "w1"), ti(10, "w2")], [10])
    assert spatial_entropy(s) == pytest.approx(math.log(2), abs=1e-12)


def test_entropy_undefined_below_two():
    with pytest.raises(EntropyUndefinedError):
        spatial_entropy(["w1"])


def test_mean_entropy_curve():
    one = DyadSeries("a", "b", [ti(0), ti(10), ti(20)], [10, 10], entropy=0.5)
    assert mean_entropy_curve([one]) == {3: 0.5}
    flat = DyadSeries("a", "b", [ti(0), ti(10)], [10], entropy=0.0)
    mixed = DyadSeries("c", "d", [ti(0), ti(10, "w2")], [10], entropy=math.log(2))
    curve, counts = mean_entropy_curve([flat, mixed], return_counts=True)
    assert round(curve[2], 4) == 0.3466 and counts == {2: 2}


def test_f1_entropy_curve():
    assert mean_entropy_curve(build_dyad_series(F1_TIS)) == {2: 0.0}


def test_f1_contact_triangle():
    cn = aggregate_contact_network(F1_TIS)
    assert set(cn.weights) == {("A", "B"), ("A", "C"), ("B", "C")}
    assert cn.degree == {"A": 2, "B": 2, "C": 2}
    assert cn.weights[("A", "C")] == 2


def test_single_ti_network():
    cn = aggregate_contact_network([ti(0)])
    assert cn.weights == {("x", "y"): 1} and cn.degree == {"x": 1, "y": 1}


def test_leaf_hub_report_f1():
    report = leaf_hub_report(aggregate_contact_network(F1_TIS), {"A"})
    assert [r[:2] for r in report.rows] == [(1, "A"), (2, "B"), (3, "C")]
    assert [r[3] for r in report.rows] == [True, False, False]
    assert (report.n_super, report.median_degree_all, report.median_degree_super) == (1, 2, 2)


def test_leaf_hub_without_flags():
    report = leaf_hub_report(aggregate_contact_network(F1_TIS), set())
    assert report.median_degree_super is None and report.n_super == 0


def test_split_inter_event_by_calendar_day():
    s = build_dyad_series([ti(100), ti(300), ti(1500), ti(1430)])
    same, cross = split_inter_event(s)
    assert sorted(same) == [200, 1130]
    assert cross == [70]
    # Shifting the day boundary by 20 minutes moves the 1430 start to the next day.
    same, cross = split_inter_event(s, tz_offset=20)
    assert sorted(same) == [70, 200] and cross == [1130]


def test_check_dyads_rejects_bad_gap_count():
    with pytest.raises(InvariantViolation):
        check_dyads([DyadSeries("x", "y", [ti(0), ti(10)], [], entropy=0.0)])


def test_check_ti_sequences_rejects_touching():
    with pytest.raises(InvariantViolation):
        check_ti_sequences([ti(0, length=10), ti(10)])


def test_check_ti_maximality(f1_sessions):
    check_ti_maximality(F1_TIS, f1_sessions)
    with pytest.raises(InvariantViolation):
        check_ti_maximality([TemporalInteraction("A", "B", "w1", 10, 30)], f1_sessions)


def test_estimators_on_f1(f1_sessions):
    tis = TemporalInteractionExtractor().fit_transform(f1_sessions)
    assert tis == F1_TIS
    fitted = DyadAnalyzer().fit(tis)
    assert fitted.entropy_curve_ == {2: 0.0}
    assert fitted.contact_network_.degree == {"A": 2, "B": 2, "C": 2}


# -- properties ------------------------------------------------------------------


@st.composite
def instances(draw):
    return normalize_sessions(random_instance(draw(st.integers(0, 10**6))))


@given(instances())
@settings(max_examples=200, deadline=None)
def test_ti_structural_invariants(sessions):
    tis = build_temporal_interactions(sessions)
    check_ti_sequences(tis)
    check_ti_maximality(tis, sessions)
    series = build_dyad_series(tis)
    check_dyads(series)
    for s in series:
        starts = [t.t_started for t in s.tis]
        assert starts == sorted(starts)
        if s.n_ti >= 2:
            assert 0.0 <= s.entropy <= math.log(s.n_ti) + 1e-12
    cn = aggregate_contact_network(tis)
    assert len(cn.weights) == len(series)


@given(instances())
@settings(max_examples=200, deadline=None)
def test_ti_is_union_of_consecutive_shared_eis(sessions):
    eis = build_event_interactions(sessions)
    spans = defaultdict(list)
    for e in eis:
        for u in e.members:
            for v in e.members:
                if u < v:
                    spans[(u, v, e.wap_id)].append((e.t_begin, e.t_end))
    merged = []
    for (u, v, wap), items in spans.items():
        items.sort()
        start, end = items[0]
        for a, b in items[1:]:
            if a == end:
                end = b
            else:
                merged.append(TemporalInteraction(u, v, wap, start, end))
                start, end = a, b
        merged.append(TemporalInteraction(u, v, wap, start, end))
    merged.sort(key=lambda t: (t.wap_id, t.t_started, t.u, t.v))
    assert build_temporal_interactions(sessions) == merged


@given(st.lists(st.sampled_from(["w1", "w2", "w3", "w4"]), min_size=2, max_size=40))
@settings(max_examples=300, deadline=None)
def test_entropy_bounds_and_zero_iff_single_location(locations):
    h = spatial_entropy(locations)
    assert -1e-15 <= h <= math.log(min(len(set(locations)), len(locations))) + 1e-12
    assert (h == 0.0) == (len(set(locations)) == 1)
