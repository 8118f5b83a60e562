"""Parsing and normalization of raw co-presence logs.

Two input families are supported:

* WiFi session logs, one ``device_id,wap_id,t_on,t_off`` row per association,
  with timestamps as integer minutes or ISO-8601 datetimes.
* SocioPatterns contact triples ``t<TAB>i<TAB>j``, one 20-second slot per line.
"""

from __future__ import annotations

import io
import logging
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from itertools import groupby
from pathlib import Path

from sklearn.base import BaseEstimator, TransformerMixin

from ._types import RFID_LOCATION, ContactRecord, Session, TemporalInteraction
from ._validation import SESSION_COLUMNS, check_sessions

logger = logging.getLogger(__name__)

SLOT_SECONDS = 20

# Canonical fixture: one WAP, three devices, two co-presence episodes.
F1_SESSIONS = (
    Session("A", "w1", 10, 40),
    Session("A", "w1", 60, 70),
    Session("B", "w1", 10, 50),
    Session("C", "w1", 20, 30),
    Session("C", "w1", 60, 70),
)
F1_CSV = "device_id,wap_id,t_on,t_off\nA,w1,10,40\nB,w1,10,50\nC,w1,20,30\nA,w1,60,70\nC,w1,60,70\n"


@dataclass(frozen=True)
class LineError:
    lineno: int
    reason: str
    text: str = ""

    def __str__(self):
        return f"line {self.lineno}: {self.reason}"


def _lines(stream):
    if isinstance(stream, (str, Path)):
        with open(stream, "rb") as fh:
            yield from _lines(fh)
        return
    for raw in stream:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        yield raw.rstrip("\r\n")


def _parse_time(text: str, time_format: str) -> int:
    text = text.strip()
    if time_format == "minutes":
        return int(text)
    if time_format == "datetime":
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            # Naive datetimes are dataset-local wall clock, stored as if UTC.
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp() // 60)
    raise ValueError(f"unknown time format {time_format!r}")


def parse_session_log(stream, columns=None, time_format="minutes", errors=None) -> list:
    """Parse a WiFi association log into sessions, in input order.

    Parameters
    ----------
    stream : path, binary/text file object, or iterable of lines
    columns : dict, optional
        Maps ``device_id``, ``wap_id``, ``t_on``, ``t_off`` to header names.
        Used only when the first line is a header; headerless input is read
        positionally in that field order.
    time_format : {"minutes", "datetime"}
    errors : list, optional
        Receives a :class:`LineError` per rejected line. When omitted,
        rejected lines are logged at WARNING level.
    """
    columns = dict(zip(SESSION_COLUMNS, SESSION_COLUMNS), **(columns or {}))
    positions = (0, 1, 2, 3)
    sessions = []
    first = True
    for lineno, line in enumerate(_lines(stream), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if first:
            first = False
            if all(columns[c] in fields for c in SESSION_COLUMNS):
                positions = tuple(fields.index(columns[c]) for c in SESSION_COLUMNS)
                continue
        try:
            if len(fields) <= max(positions):
                raise ValueError(f"expected at least {max(positions) + 1} fields, got {len(fields)}")
            device, wap = fields[positions[0]], fields[positions[1]]
            if not device or not wap:
                raise ValueError("empty device or WAP identifier")
            try:
                t_on = _parse_time(fields[positions[2]], time_format)
                t_off = _parse_time(fields[positions[3]], time_format)
            except ValueError as exc:
                raise ValueError(f"unparseable timestamp ({exc})") from None
            if t_on >= t_off:
                raise ValueError(f"reversed or empty interval t_on={t_on} >= t_off={t_off}")
        except ValueError as exc:
            _report(errors, LineError(lineno, str(exc), line))
            continue
        sessions.append(Session(device, wap, t_on, t_off))
    return sessions


def _report(errors, err):
    if errors is None:
        logger.warning("rejected %s", err)
    else:
        errors.append(err)


def normalize_sessions(sessions) -> list:
    """Resolve per-device conflicts so each device sees one WAP at a time.

    Overlapping sessions of a device are resolved by truncating the earlier
    one at the later one's connect time; a session truncated to nothing is
    dropped. Afterwards, back-to-back sessions at the same WAP are merged.
    Output is sorted by ``(device_id, t_on)``.
    """
    sessions = sorted(check_sessions(sessions), key=lambda s: (s.device_id, s.t_on, s.t_off, s.wap_id))
    out = []
    for device, group in groupby(sessions, key=lambda s: s.device_id):
        resolved = []
        for cur in group:
            if resolved and cur.t_on < resolved[-1].t_off:
                prev = resolved.pop()
                if prev.t_on < cur.t_on:
                    resolved.append(Session(device, prev.wap_id, prev.t_on, cur.t_on))
                else:
                    logger.info("dropped session %s: truncated to zero length by %s", prev, cur)
            resolved.append(cur)
        merged = []
        for cur in resolved:
            prev = merged[-1] if merged else None
            if prev and prev.wap_id == cur.wap_id and prev.t_off == cur.t_on:
                merged[-1] = Session(device, cur.wap_id, prev.t_on, cur.t_off)
            else:
                merged.append(cur)
        out.extend(merged)
    return out


def write_sessions_csv(sessions, fh) -> None:
    fh.write(",".join(SESSION_COLUMNS) + "\n")
    for s in sessions:
        fh.write(f"{s.device_id},{s.wap_id},{s.t_on},{s.t_off}\n")


def sessions_to_csv(sessions) -> str:
    buf = io.StringIO()
    write_sessions_csv(sessions, buf)
    return buf.getvalue()


def write_error_report(errors, path) -> None:
    """Write ``line-number: reason`` rows to a ``.errors.txt`` sidecar."""
    with open(path, "w", encoding="utf-8") as fh:
        for err in errors:
            fh.write(f"{err.lineno}\t{err.reason}\n")


def parse_triple_stream(stream, errors=None) -> list:
    """Parse SocioPatterns ``t i j`` lines into contact records.

    Fields may be separated by tabs or runs of spaces; extra trailing columns
    (some releases append badge metadata) are ignored.
    """
    records = []
    for lineno, line in enumerate(_lines(stream), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split()
        try:
            if len(fields) < 3:
                raise ValueError(f"expected 3 fields, got {len(fields)}")
            try:
                t = int(fields[0])
            except ValueError:
                raise ValueError(f"non-integer time {fields[0]!r}") from None
            i, j = fields[1], fields[2]
            if i == j:
                raise ValueError(f"self-contact of {i}")
        except ValueError as exc:
            _report(errors, LineError(lineno, str(exc), line))
            continue
        records.append(ContactRecord(t, i, j))
    return records


def parse_triple_path(path, errors=None) -> list:
    """Parse one triple file, or every file of a directory in name order.

    Multi-file releases (one file per day) are read as one stream; error
    line numbers then restart for each file.
    """
    path = Path(path)
    if path.is_dir():
        records = []
        for f in sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith(".")):
            records.extend(parse_triple_stream(f, errors=errors))
        return records
    return parse_triple_stream(path, errors=errors)


def write_triples(records, fh) -> None:
    for r in records:
        fh.write(f"{r.t}\t{r.i}\t{r.j}\n")


def coalesce_contacts(records, slot=SLOT_SECONDS) -> list:
    """Merge each pair's consecutive contact slots into temporal interactions.

    Slots ``t`` and ``t'`` of the same unordered pair belong to one interaction
    when ``t' - t <= slot``; the interaction spans ``[first_t - slot, last_t]``.
    All interactions are placed at the single synthetic location.
    """
    by_pair = defaultdict(set)
    for r in records:
        by_pair[(r.i, r.j) if r.i < r.j else (r.j, r.i)].add(r.t)
    tis = []
    for (u, v), times in by_pair.items():
        times = sorted(times)
        start = prev = times[0]
        for t in times[1:]:
            if t - prev > slot:
                tis.append(TemporalInteraction(u, v, RFID_LOCATION, start - slot, prev))
                start = t
            prev = t
        tis.append(TemporalInteraction(u, v, RFID_LOCATION, start - slot, prev))
    tis.sort(key=lambda ti: (ti.wap_id, ti.t_started, ti.u, ti.v))
    return tis


class SessionNormalizer(TransformerMixin, BaseEstimator):
    """Stateless transformer wrapping :func:`normalize_sessions`.

    Accepts anything :func:`check_sessions` does (including a DataFrame), so it
    can head a ``sklearn.pipeline.Pipeline`` of the graph builders.
    """

    def fit(self, X, y=None):
        sessions = check_sessions(X)
        self.n_devices_ = len({s.device_id for s in sessions})
        self.n_waps_ = len({s.wap_id for s in sessions})
        return self

    def transform(self, X):
        return normalize_sessions(X)
