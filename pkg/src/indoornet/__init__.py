"""Temporal-network analysis of indoor co-presence logs.

WiFi association logs (or SocioPatterns proximity triples) are turned into
two representations: group-level event interactions linked into a
transmission graph, and pairwise temporal interactions forming an interval
graph. Distribution, coefficient and null-model utilities cover the
statistics computed on both.
"""

from ._types import (
    ContactRecord,
    DyadSeries,
    EventInteraction,
    InvariantViolation,
    Session,
    TemporalInteraction,
    TransmissionEdge,
)
from .dyad_graph import (
    ContactNetwork,
    DyadAnalyzer,
    EntropyUndefinedError,
    TemporalInteractionExtractor,
    aggregate_contact_network,
    build_dyad_series,
    build_temporal_interactions,
    leaf_hub_report,
    mean_entropy_curve,
    spatial_entropy,
    split_inter_event,
)
from .event_graph import (
    AggregatedTransmissionGraph,
    EventInteractionExtractor,
    TransmissionGraphBuilder,
    aggregate_transmission_graph,
    build_contact_event_interactions,
    build_event_interactions,
    build_transmission_graph,
    find_super_connecting,
)
from .ingest import (
    F1_SESSIONS,
    SessionNormalizer,
    coalesce_contacts,
    normalize_sessions,
    parse_session_log,
    parse_triple_stream,
)
from .stats import (
    BinnedDistribution,
    PowerLawFit,
    TimeShuffler,
    TruncatedPowerLaw,
    ccdf,
    fit_truncated_power_law,
    integral_days,
    log_binned_pdf,
    memory_coefficient,
    natural_deseason,
    pearson,
    time_shuffled_null,
)
from .synth import SynthParams, brute_force_oracle, generate_synthetic_log

__version__ = "0.1.0"
