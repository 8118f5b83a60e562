from importlib import resources

import pytest

from indoornet import Session
from indoornet.dyad_graph import build_temporal_interactions
from indoornet.event_graph import build_event_interactions, build_transmission_graph
from indoornet.ingest import F1_SESSIONS, normalize_sessions, parse_session_log
from indoornet.synth import (
    OracleScaleError,
    SynthParams,
    brute_force_oracle,
    generate_synthetic_contacts,
    generate_synthetic_log,
    instance_from_json,
    instance_to_json,
    random_instance,
)

from test_dyad_graph import F1_TIS
from test_event_graph import F1_EDGES, F1_EIS


def pipeline(sessions):
    normalized = normalize_sessions(sessions)
    eis = build_event_interactions(normalized)
    return eis, build_transmission_graph(eis), build_temporal_interactions(normalized)


def test_generator_deterministic():
    p = SynthParams(seed=5)
    assert generate_synthetic_log(p) == generate_synthetic_log(p)
    assert generate_synthetic_log(p) != generate_synthetic_log(SynthParams(seed=6))


def test_generator_zero_rate():
    assert generate_synthetic_log(SynthParams(session_rate=0)) == []


def test_generator_clipped_and_one_wap_at_a_time():
    sessions = generate_synthetic_log(SynthParams(n_devices=8, n_waps=3, horizon=100, session_rate=6.0))
    assert sessions
    assert all(0 <= s.t_on < s.t_off <= 100 for s in sessions)
    ordered = sorted(sessions, key=lambda s: (s.device_id, s.t_on))
    for a, b in zip(ordered, ordered[1:]):
        assert a.device_id != b.device_id or a.t_off <= b.t_on
    # Zero-length off periods only ever merge sessions; nothing is truncated.
    assert sum(s.duration for s in normalize_sessions(sessions)) == sum(s.duration for s in sessions)


def test_params_validated():
    with pytest.raises(ValueError):
        SynthParams(n_devices=0)
    with pytest.raises(ValueError):
        SynthParams(mean_session_length=0)


def test_oracle_f1():
    assert brute_force_oracle(F1_SESSIONS) == (F1_EIS, F1_EDGES, F1_TIS)


def test_oracle_empty():
    assert brute_force_oracle([]) == ([], [], [])


def test_oracle_refuses_large_instances():
    with pytest.raises(OracleScaleError):
        brute_force_oracle([Session(f"d{k}", "w1", 0, 10) for k in range(11)])
    with pytest.raises(OracleScaleError):
        brute_force_oracle([Session("a", "w1", 0, 2000)])


@pytest.mark.parametrize("seed", range(200))
def test_oracle_matches_pipeline(seed):
    raw = random_instance(seed)
    assert pipeline(raw) == brute_force_oracle(raw)


def golden_files():
    root = resources.files("indoornet").joinpath("fixtures")
    return sorted((p for p in root.iterdir() if p.name.startswith("golden-")), key=lambda p: p.name)


def test_five_golden_instances_shipped():
    assert len(golden_files()) == 5


@pytest.mark.parametrize("path", golden_files(), ids=lambda p: p.name)
def test_golden_instance(path):
    sessions, eis, edges, tis = instance_from_json(path.read_text())
    assert list(pipeline(sessions)) == [eis, edges, tis]
    assert instance_to_json(sessions, eis, edges, tis) == path.read_text()


def test_shipped_f1_csv():
    text = resources.files("indoornet").joinpath("fixtures", "f1.csv").read_text()
    assert sorted(parse_session_log(text.splitlines()), key=lambda s: (s.device_id, s.t_on)) == list(F1_SESSIONS)


def test_synthetic_contacts():
    recs = generate_synthetic_contacts(n_people=200, n_days=2, seed=1)
    assert recs == generate_synthetic_contacts(n_people=200, n_days=2, seed=1)
    assert recs == sorted(recs, key=lambda r: (r.t, r.i, r.j))
    assert all(r.t % 20 == 0 and r.i < r.j for r in recs)
