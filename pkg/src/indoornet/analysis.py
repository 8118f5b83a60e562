"""End-to-end analysis of one dataset, computed lazily stage by stage."""

from __future__ import annotations

from functools import cached_property

from sklearn.base import BaseEstimator

from ._types import UNITS_PER_DAY
from .dyad_graph import (
    aggregate_contact_network,
    build_dyad_series,
    build_temporal_interactions,
    check_dyads,
    check_ti_maximality,
    check_ti_sequences,
    leaf_hub_report,
    mean_entropy_curve,
    split_inter_event,
)
from .event_graph import (
    aggregate_transmission_graph,
    build_contact_event_interactions,
    build_event_interactions,
    build_transmission_graph,
    check_edges,
    check_exclusivity,
    choose_k_min,
    find_super_connecting,
)
from .ingest import coalesce_contacts, normalize_sessions
from .stats import natural_deseason, time_shuffled_null


class CoPresenceAnalysis(BaseEstimator):
    """All derived structures for one dataset.

    Parameters
    ----------
    kind : {"wifi", "contacts"}
        ``"wifi"``: ``X`` is a list of sessions (timestamps in minutes).
        ``"contacts"``: ``X`` is a list of contact records (seconds).
    tz_offset_minutes : int
        Shift applied before cutting timestamps into calendar days.
    k_min : int or None
        Super-connecting threshold; None picks the smallest threshold that
        flags between 5 and 50 ATG vertices.
    random_state : int
        Seed of the time-shuffled null model.
    n_swaps_factor : int
    """

    def __init__(self, kind="wifi", tz_offset_minutes=0, k_min=None, random_state=0, n_swaps_factor=10):
        self.kind = kind
        self.tz_offset_minutes = tz_offset_minutes
        self.k_min = k_min
        self.random_state = random_state
        self.n_swaps_factor = n_swaps_factor

    def fit(self, X, y=None):
        if self.kind not in ("wifi", "contacts"):
            raise ValueError(f"kind must be 'wifi' or 'contacts', got {self.kind!r}")
        params = self.get_params(deep=False)
        for name in [n for n in vars(self) if n not in params]:
            delattr(self, name)
        if self.kind == "wifi":
            self.sessions_ = normalize_sessions(X)
            self.records_ = None
        else:
            self.sessions_ = None
            self.records_ = list(X)
        return self

    @property
    def time_unit(self):
        return "minute" if self.kind == "wifi" else "second"

    @property
    def units_per_day(self):
        return UNITS_PER_DAY[self.time_unit]

    @property
    def tz_offset(self):
        """Offset in the dataset's own time unit."""
        return self.tz_offset_minutes * (60 if self.time_unit == "second" else 1)

    @property
    def exclusive(self):
        # Proximity data puts every group at one synthetic location.
        return self.kind == "wifi"

    @cached_property
    def eis_(self):
        if self.kind == "wifi":
            return build_event_interactions(self.sessions_)
        return build_contact_event_interactions(self.records_)

    @cached_property
    def edges_(self):
        return build_transmission_graph(self.eis_)

    @cached_property
    def atg_(self):
        return aggregate_transmission_graph(self.edges_, self.eis_)

    @cached_property
    def tis_(self):
        if self.kind == "wifi":
            return build_temporal_interactions(self.sessions_)
        return coalesce_contacts(self.records_)

    @cached_property
    def series_(self):
        return build_dyad_series(self.tis_)

    @cached_property
    def contact_network_(self):
        return aggregate_contact_network(self.tis_)

    @cached_property
    def entropy_curve_(self):
        return mean_entropy_curve(self.series_, return_counts=True)

    @cached_property
    def k_min_(self):
        return self.k_min if self.k_min is not None else choose_k_min(self.atg_)

    @cached_property
    def super_connecting_(self):
        if self.k_min_ is None:
            return find_super_connecting(self.atg_, max(self.atg_.k_in.values(), default=0) + 1)
        return find_super_connecting(self.atg_, self.k_min_)

    @cached_property
    def leaf_hub_(self):
        return leaf_hub_report(self.contact_network_, self.super_connecting_.members)

    @cached_property
    def inter_event_split_(self):
        return split_inter_event(self.series_, self.units_per_day, self.tz_offset)

    @cached_property
    def natural_deltas_(self):
        return natural_deseason(self.edges_, self.eis_, self.units_per_day, self.tz_offset)

    @cached_property
    def _shuffle(self):
        return time_shuffled_null(
            self.eis_, seed=self.random_state, n_swaps_factor=self.n_swaps_factor,
            exclusive=self.exclusive, return_stats=True,
        )

    @property
    def shuffled_eis_(self):
        return self._shuffle[0]

    @property
    def shuffle_stats_(self):
        return self._shuffle[1]

    @cached_property
    def shuffled_edges_(self):
        return build_transmission_graph(self.shuffled_eis_)

    def check_invariants(self, shuffled=False):
        """Raise :class:`InvariantViolation` on the first structural failure."""
        check_exclusivity(self.eis_, exclusive=self.exclusive)
        check_edges(self.edges_, self.eis_)
        check_ti_sequences(self.tis_)
        check_dyads(self.series_)
        if self.kind == "wifi":
            check_ti_maximality(self.tis_, self.sessions_)
        if shuffled:
            check_exclusivity(self.shuffled_eis_, exclusive=self.exclusive)
            check_edges(self.shuffled_edges_, self.shuffled_eis_)
