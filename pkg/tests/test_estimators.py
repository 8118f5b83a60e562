import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from indoornet import InvariantViolation, Session
from indoornet.analysis import CoPresenceAnalysis
from indoornet.dyad_graph import DyadAnalyzer, TemporalInteractionExtractor
from indoornet.event_graph import EventInteractionExtractor, TransmissionGraphBuilder
from indoornet.ingest import F1_SESSIONS, SessionNormalizer
from indoornet.stats import TimeShuffler, TruncatedPowerLaw
from indoornet.synth import generate_synthetic_contacts

from test_event_graph import F1_EDGES, F1_EIS


@pytest.mark.parametrize(
    "est",
    [
        SessionNormalizer(),
        EventInteractionExtractor(source="contacts", slot=10),
        TransmissionGraphBuilder(validate=False, exclusive=False),
        TemporalInteractionExtractor(),
        DyadAnalyzer(),
        TruncatedPowerLaw(x_min=2.0, significance=0.01),
        TimeShuffler(random_state=3, n_swaps_factor=2, exclusive=False),
        CoPresenceAnalysis(kind="contacts", tz_offset_minutes=60, k_min=3, random_state=1, n_swaps_factor=2),
    ],
    ids=lambda e: type(e).__name__,
)
def test_params_round_trip_through_clone(est):
    params = est.get_params()
    twin = clone(est)
    assert twin.get_params() == params
    assert twin is not est


def test_pipeline_sessions_to_transmission_graph():
    pipe = make_pipeline(SessionNormalizer(), EventInteractionExtractor(), TransmissionGraphBuilder())
    pipe.fit(list(F1_SESSIONS))
    assert pipe[-1].edges_ == F1_EDGES
    assert pipe[-1].eis_ == F1_EIS


def test_pipeline_sessions_to_dyads():
    pipe = make_pipeline(SessionNormalizer(), TemporalInteractionExtractor(), DyadAnalyzer()).fit(list(F1_SESSIONS))
    assert pipe[-1].entropy_curve_ == {2: 0.0}


def test_transmission_builder_validates():
    overlapping = [F1_EIS[0], F1_EIS[0].__class__(1, "w1", frozenset("CD"), 15, 25)]
    with pytest.raises(InvariantViolation):
        TransmissionGraphBuilder().fit(overlapping)
    TransmissionGraphBuilder(validate=False).fit(overlapping)


def test_power_law_pdf_requires_fit():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        TruncatedPowerLaw().pdf(np.array([1.0]))


def test_analysis_f1():
    run = CoPresenceAnalysis().fit(F1_SESSIONS)
    assert run.eis_ == F1_EIS and run.edges_ == F1_EDGES
    assert run.time_unit == "minute" and run.units_per_day == 1440
    assert sorted(run.natural_deltas_) == [10, 10, 30, 40]
    assert run.k_min_ is None and run.super_connecting_.vertices == []
    run.check_invariants(shuffled=True)


def test_analysis_refit_clears_cached_state():
    run = CoPresenceAnalysis().fit(F1_SESSIONS)
    assert len(run.eis_) == 4
    _ = run.shuffled_eis_
    run.fit([Session("x", "w1", 0, 10), Session("y", "w1", 0, 10)])
    assert len(run.eis_) == 1 and len(run.shuffled_eis_) == 1


def test_analysis_contacts_units():
    recs = generate_synthetic_contacts(n_people=150, n_days=2, seed=4)
    run = CoPresenceAnalysis(kind="contacts", tz_offset_minutes=60).fit(recs)
    assert (run.time_unit, run.units_per_day, run.tz_offset, run.exclusive) == ("second", 86400, 3600, False)
    assert {ti.wap_id for ti in run.tis_} == {"l0"}
    run.check_invariants(shuffled=True)


def test_analysis_rejects_unknown_kind():
    with pytest.raises(ValueError):
        CoPresenceAnalysis(kind="bluetooth").fit([])
