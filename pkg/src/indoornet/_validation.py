"""Input coercion helpers shared by the estimators and the functional API."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

from ._types import ContactRecord, Session

SESSION_COLUMNS = ("device_id", "wap_id", "t_on", "t_off")
CONTACT_COLUMNS = ("t", "i", "j")


def _rows(X, columns):
    if hasattr(X, "columns") and hasattr(X, "itertuples"):
        missing = [c for c in columns if c not in X.columns]
        if missing:
            raise ValueError(f"missing columns: {missing}")
        return X[list(columns)].itertuples(index=False, name=None)
    return X


def _as_int(value, name):
    if isinstance(value, bool) or not isinstance(value, (numbers.Integral, numbers.Real, str)):
        raise TypeError(f"{name} must be an integer timestamp, got {value!r}")
    if isinstance(value, str):
        value = float(value)
    if float(value) != int(value):
        raise ValueError(f"{name} must be a whole number, got {value!r}")
    return int(value)


def check_sessions(X) -> list:
    """Coerce ``X`` into a list of :class:`Session`.

    Accepts Session objects, ``(device_id, wap_id, t_on, t_off)`` tuples, a 2-D
    object array, or a DataFrame with those columns. Every row must satisfy
    ``t_on < t_off``.
    """
    out = []
    for row in _rows(X, SESSION_COLUMNS):
        if isinstance(row, Session):
            s = row
        else:
            if len(row) != 4:
                raise ValueError(f"session rows need 4 fields, got {row!r}")
            device, wap, t_on, t_off = row
            s = Session(str(device), str(wap), _as_int(t_on, "t_on"), _as_int(t_off, "t_off"))
        if s.t_on >= s.t_off:
            raise ValueError(f"session with t_on >= t_off: {s}")
        out.append(s)
    return out


def check_contacts(X) -> list:
    out = []
    for row in _rows(X, CONTACT_COLUMNS):
        if isinstance(row, ContactRecord):
            r = row
        else:
            t, i, j = row
            r = ContactRecord(_as_int(t, "t"), str(i), str(j))
        if r.i == r.j:
            raise ValueError(f"self-contact: {r}")
        out.append(r)
    return out


def check_samples(samples, *, positive=False, min_samples=1) -> np.ndarray:
    """1-D finite float array; optionally strictly positive."""
    arr = check_array(
        np.asarray(samples, dtype=float).reshape(-1, 1),
        ensure_min_samples=min_samples,
        ensure_all_finite=True,
    ).ravel()
    if positive and np.any(arr <= 0):
        raise ValueError("all samples must be > 0 on a logarithmic domain")
    return arr
