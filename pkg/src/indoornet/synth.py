"""Synthetic session logs and a deliberately naive reference implementation.

The oracle evaluates presence at every integer minute and never shares code
with the sweep-line builders, so agreement between the two is meaningful.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._types import ContactRecord, EventInteraction, Session, TemporalInteraction, TransmissionEdge

ORACLE_MAX_DEVICES = 10
ORACLE_MAX_HORIZON = 1000


@dataclass(frozen=True)
class SynthParams:
    n_devices: int = 8
    n_waps: int = 3
    horizon: int = 100
    session_rate: float = 2.0  # sessions per device-hour
    mean_session_length: float = 15.0  # minutes
    seed: int = 0

    def __post_init__(self):
        if self.n_devices < 1 or self.n_waps < 1 or self.horizon < 1:
            raise ValueError("n_devices, n_waps and horizon must be positive")
        if self.session_rate < 0 or self.mean_session_length <= 0:
            raise ValueError("session_rate must be >= 0 and mean_session_length > 0")


def generate_synthetic_log(params: SynthParams) -> list:
    """Alternating exponential off/on periods per device, clipped to the horizon.

    Each session goes to a uniformly random WAP; a device is never online at
    two WAPs at once. Deterministic for a given seed.
    """
    rng = np.random.default_rng(params.seed)
    sessions = []
    if params.session_rate == 0:
        return sessions
    mean_off = 60.0 / params.session_rate
    for d in range(params.n_devices):
        device = f"d{d}"
        t = 0
        while True:
            t += int(round(rng.exponential(mean_off)))
            if t >= params.horizon:
                break
            length = max(1, int(round(rng.exponential(params.mean_session_length))))
            t_off = min(t + length, params.horizon)
            wap = f"w{int(rng.integers(params.n_waps))}"
            sessions.append(Session(device, wap, t, t_off))
            t = t_off
    return sessions


def random_instance(seed: int) -> list:
    """Small random instance (<= 8 devices, <= 3 WAPs, horizon <= 100)."""
    rng = np.random.default_rng(seed)
    params = SynthParams(
        n_devices=int(rng.integers(2, 9)),
        n_waps=int(rng.integers(1, 4)),
        horizon=int(rng.integers(20, 101)),
        session_rate=float(rng.uniform(1.0, 8.0)),
        mean_session_length=float(rng.uniform(3.0, 30.0)),
        seed=seed,
    )
    return generate_synthetic_log(params)


def generate_synthetic_contacts(
    n_people=1000, n_days=3, contacts_per_person=5.0, mean_slots=3.0, stay_minutes=60.0,
    slot=20, seed=0,
) -> list:
    """Proximity triples in the SocioPatterns layout, for scale testing.

    Each person is present for one exponential-length window inside a day's
    opening hours (09:00-18:00); contact episodes pair people whose windows
    overlap and last a geometric number of slots. Returns records sorted by
    ``(t, i, j)``; the same pair may recur.
    """
    rng = np.random.default_rng(seed)
    day = 86400 // slot
    open_slot, close_slot = 9 * 3600 // slot, 18 * 3600 // slot
    arrive = rng.integers(0, n_days, n_people) * day + rng.integers(open_slot, close_slot, n_people)
    stay = np.maximum(1, rng.exponential(stay_minutes * 60 / slot, n_people).astype(np.int64))
    leave = arrive + stay
    order = np.argsort(arrive, kind="stable")
    records = set()
    n_episodes = rng.poisson(contacts_per_person / 2.0, n_people)
    for rank, a in enumerate(order):
        for _ in range(int(n_episodes[a])):
            # Partner drawn among people who arrived shortly before or after.
            b = order[min(max(rank + int(rng.integers(-30, 31)), 0), n_people - 1)]
            lo, hi = max(arrive[a], arrive[b]), min(leave[a], leave[b])
            if a == b or lo >= hi:
                continue
            start = int(rng.integers(lo, hi))
            length = int(rng.geometric(1.0 / mean_slots))
            i, j = sorted((f"p{a}", f"p{b}"))
            for k in range(start, min(start + length, hi)):
                records.add(((k + 1) * slot, i, j))
    return [ContactRecord(t, i, j) for t, i, j in sorted(records)]


class OracleScaleError(ValueError):
    pass


def brute_force_oracle(sessions):
    """Return ``(eis, edges, tis)`` by minute-by-minute presence evaluation."""
    sessions = list(sessions)
    if not sessions:
        return [], [], []
    devices = sorted({s.device_id for s in sessions})
    waps = sorted({s.wap_id for s in sessions})
    t0 = min(s.t_on for s in sessions)
    t1 = max(s.t_off for s in sessions)
    if len(devices) > ORACLE_MAX_DEVICES or t1 - t0 > ORACLE_MAX_HORIZON:
        raise OracleScaleError("instance too large for the brute-force oracle")

    def present(device, wap, t):
        return any(s.device_id == device and s.wap_id == wap and s.t_on <= t < s.t_off for s in sessions)

    # Membership of every WAP at every minute step [t, t+1).
    state = {wap: [frozenset(d for d in devices if present(d, wap, t)) for t in range(t0, t1)] for wap in waps}

    runs = []
    for wap in waps:
        steps = state[wap]
        t = 0
        while t < len(steps):
            u = t
            while u < len(steps) and steps[u] == steps[t]:
                u += 1
            if len(steps[t]) >= 2:
                runs.append((wap, t0 + t, t0 + u, steps[t]))
            t = u
    runs.sort(key=lambda r: (r[0], r[1], "|".join(sorted(r[3]))))
    eis = [EventInteraction(k, wap, m, b, e) for k, (wap, b, e, m) in enumerate(runs)]

    edges = []
    for sink in eis:
        sources = {}
        for m in sorted(sink.members):
            best = None
            for cand in reversed(eis):
                if m in cand.members and cand.t_end <= sink.t_begin:
                    if best is None or (cand.t_end, cand.ei_id) > (best.t_end, best.ei_id):
                        best = cand
            if best is not None:
                sources.setdefault(best.ei_id, set()).add(m)
        for src_id in sorted(sources):
            src = eis[src_id]
            edges.append(TransmissionEdge(src_id, sink.ei_id, frozenset(sources[src_id]), sink.t_begin - src.t_begin, src.t_begin))

    tis = []
    for wap in waps:
        steps = state[wap]
        for u, v in combinations(devices, 2):
            t = 0
            while t < len(steps):
                if u in steps[t] and v in steps[t]:
                    e = t
                    while e < len(steps) and u in steps[e] and v in steps[e]:
                        e += 1
                    tis.append(TemporalInteraction(u, v, wap, t0 + t, t0 + e))
                    t = e
                else:
                    t += 1
    tis.sort(key=lambda ti: (ti.wap_id, ti.t_started, ti.u, ti.v))
    return eis, edges, tis


# -- golden-instance serialization ---------------------------------------------


def instance_to_json(sessions, eis, edges, tis) -> str:
    payload = {
        "sessions": [[s.device_id, s.wap_id, s.t_on, s.t_off] for s in sessions],
        "eis": [[e.ei_id, e.wap_id, sorted(e.members), e.t_begin, e.t_end] for e in eis],
        "edges": [[e.source, e.sink, sorted(e.shared), e.delta, e.t_observed] for e in edges],
        "tis": [[t.u, t.v, t.wap_id, t.t_started, t.t_finished] for t in tis],
    }
    return json.dumps(payload, indent=1) + "\n"


def instance_from_json(text: str):
    p = json.loads(text)
    sessions = [Session(*row) for row in p["sessions"]]
    eis = [EventInteraction(i, w, frozenset(m), b, e) for i, w, m, b, e in p["eis"]]
    edges = [TransmissionEdge(a, b, frozenset(s), d, o) for a, b, s, d, o in p["edges"]]
    tis = [TemporalInteraction(*row) for row in p["tis"]]
    return sessions, eis, edges, tis
