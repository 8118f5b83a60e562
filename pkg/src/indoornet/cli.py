"""Command-line entry point: ``indoornet {ingest,analyze,oracle-check,shuffle}``.

Exit codes: 0 success, 1 input error, 2 config error, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from ._types import InvariantViolation, UNITS_PER_DAY, members_key
from .analysis import CoPresenceAnalysis
from .dyad_graph import write_degree_rank, write_dyad_summary, write_ti_table
from .event_graph import identity_label, write_edge_table, write_ei_table
from .ingest import (
    normalize_sessions,
    parse_session_log,
    parse_triple_path,
    parse_triple_stream,
    write_error_report,
    write_sessions_csv,
    write_triples,
)
from .report import write_csv, write_distribution, write_json, write_table
from .stats import (
    FitError,
    ccdf,
    check_normalized,
    dependence_table,
    fit_truncated_power_law,
    integral_days,
    linear_binned_pdf,
    log_binned_pdf,
)

logger = logging.getLogger("indoornet")

FORMATS = ("wifi-csv", "sociopatterns")
TARGETS = ("ei", "tg", "ti", "contact", "entropy", "deseason")
STORE_META = "store.json"


class InputError(Exception):
    exit_code = 1


class ConfigError(Exception):
    exit_code = 2


@dataclass
class RunConfig:
    input: str | None = None
    format: str = "wifi-csv"
    time_format: str = "minutes"
    tz_offset: int = 0  # minutes
    store: str | None = None
    out: str | None = None
    seed: int = 0
    k_min: int | None = None
    bins_per_decade: int = 10
    swap_factor: int = 10
    targets: list = field(default_factory=lambda: list(TARGETS))
    instances: int = 1000

    def validate(self):
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.time_format not in ("minutes", "datetime"):
            raise ConfigError(f"time_format must be 'minutes' or 'datetime', got {self.time_format!r}")
        bad = [t for t in self.targets if t not in TARGETS]
        if bad:
            raise ConfigError(f"unknown targets {bad}; choose from {TARGETS}")
        if self.k_min is not None and self.k_min < 1:
            raise ConfigError("k_min must be >= 1")
        if self.bins_per_decade < 1 or self.swap_factor < 0 or self.instances < 0:
            raise ConfigError("bins_per_decade must be >= 1, swap_factor and instances >= 0")
        return self

    @property
    def time_unit(self):
        return "minute" if self.format == "wifi-csv" else "second"


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    names = {f.name for f in fields(RunConfig)}
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        unknown = set(overrides) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        for k, v in overrides.items():
            setattr(cfg, k, v)
    if isinstance(cfg.targets, str):
        cfg.targets = [t for t in cfg.targets.split(",") if t]
    return cfg.validate()


# -- ingest ---------------------------------------------------------------------


def cmd_ingest(cfg: RunConfig) -> dict:
    if not cfg.input:
        raise ConfigError("ingest needs --input")
    if not cfg.out:
        raise ConfigError("ingest needs --out")
    src = Path(cfg.input)
    if not (src.is_file() or (cfg.format == "sociopatterns" and src.is_dir())):
        raise InputError(f"cannot read input {src}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    errors = []
    try:
        if cfg.format == "wifi-csv":
            sessions = normalize_sessions(parse_session_log(src, time_format=cfg.time_format, errors=errors))
            with open(out / "sessions.csv", "w", encoding="utf-8", newline="\n") as fh:
                write_sessions_csv(sessions, fh)
            meta = {
                "devices": len({s.device_id for s in sessions}),
                "sessions": len(sessions),
                "waps": len({s.wap_id for s in sessions}),
                "overlap_policy": "later connect truncates earlier session",
            }
            summary = f"{meta['devices']} devices, {meta['sessions']} sessions, {meta['waps']} WAP{'s' if meta['waps'] != 1 else ''}"
        else:
            records = sorted(parse_triple_path(src, errors=errors), key=lambda r: (r.t, r.i, r.j))
            with open(out / "contacts.tsv", "w", encoding="utf-8", newline="\n") as fh:
                write_triples(records, fh)
            people = {r.i for r in records} | {r.j for r in records}
            meta = {"participants": len(people), "contacts": len(records)}
            summary = f"{meta['participants']} participants, {meta['contacts']} contact records"
    except OSError as exc:
        raise InputError(f"cannot read input {src}: {exc}") from None
    except UnicodeDecodeError as exc:
        raise InputError(f"{src}: not UTF-8 text ({exc})") from None
    write_error_report(errors, out / f"{src.name}.errors.txt")
    meta.update(
        {
            "format": cfg.format,
            "time_unit": cfg.time_unit,
            "source": src.name,
            "rejected_lines": len(errors),
            "version": __version__,
        }
    )
    write_json(out / STORE_META, meta)
    print(summary)
    if errors:
        print(f"{len(errors)} lines rejected; see {src.name}.errors.txt")
    return meta


def load_store(store) -> tuple:
    """Return ``(meta, analysis)`` for an ingested store directory."""
    store = Path(store)
    meta_path = store / STORE_META
    if not meta_path.is_file():
        raise InputError(f"no ingested store at {store} (run `ingest` first)")
    meta = json.loads(meta_path.read_text())
    if meta["format"] == "wifi-csv":
        data = parse_session_log(store / "sessions.csv")
        kind = "wifi"
    else:
        data = parse_triple_stream(store / "contacts.tsv")
        kind = "contacts"
    return meta, data, kind


# -- analyze --------------------------------------------------------------------


def _log_pdf(values, bins_per_decade):
    positive = [v for v in values if v > 0]
    dropped = len(values) - len(positive)
    dist = log_binned_pdf(positive, bins_per_decade) if positive else None
    if dist is not None:
        check_normalized(dist)
    notes = [f"samples={len(positive)}"] + ([f"non-positive samples excluded={dropped}"] if dropped else [])
    return dist, notes


def _fit_report(values):
    try:
        return fit_truncated_power_law([v for v in values if v > 0]).to_dict()
    except (FitError, ValueError) as exc:
        return {"error": str(exc), "n": len(values)}


def cmd_analyze(cfg: RunConfig) -> list:
    if not cfg.store:
        raise ConfigError("analyze needs --store")
    if not cfg.out:
        raise ConfigError("analyze needs --out")
    meta, data, kind = load_store(cfg.store)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    run = CoPresenceAnalysis(
        kind=kind, tz_offset_minutes=cfg.tz_offset, k_min=cfg.k_min,
        random_state=cfg.seed, n_swaps_factor=cfg.swap_factor,
    ).fit(data)
    unit = run.time_unit
    b = cfg.bins_per_decade
    written = []

    def emit_pdf(name, figure, values):
        dist, notes = _log_pdf(values, b)
        written.append(write_distribution(out / name, figure, dist, [f"unit={unit}"] + notes))

    targets = set(cfg.targets)
    if "ei" in targets:
        eis = run.eis_
        written.append(write_table(out / "ei-table.csv", "event interaction list", write_ei_table, eis))
        emit_pdf("ei-durations.csv", "EI active-duration distribution, all sizes", [e.duration for e in eis])
        sizes = [e.size for e in eis]
        dist = linear_binned_pdf(sizes, width=1.0) if sizes else None
        if dist is not None:
            check_normalized(dist)
        written.append(write_distribution(out / "ei-size.csv", "EI size distribution N(s)", dist, [f"samples={len(sizes)}"]))
        rows = []
        for s in sorted(set(sizes)):
            d, _ = _log_pdf([e.duration for e in eis if e.size == s], b)
            rows.extend((s, *r) for r in d.rows())
        written.append(write_csv(out / "ei-durations-by-size.csv", "EI active-duration distribution per size",
                                 ("size", "bin_lo", "bin_hi", "density", "count"), rows, [f"unit={unit}"]))
        written.append(write_json(out / "ei-duration-fit.json", _fit_report([e.duration for e in eis])))

    if "tg" in targets:
        run.check_invariants()
        written.append(write_table(out / "edge-table.csv", "transmission edge list", write_edge_table, run.edges_))
        deltas = [e.delta for e in run.edges_]
        emit_pdf("delta.csv", "transmission-duration distribution", deltas)
        days = integral_days(deltas, UNITS_PER_DAY[unit])
        total = sum(days.values())
        written.append(write_csv(out / "delta-days.csv", "whole days spent by transmission durations",
                                 ("day", "count", "probability"), [(d, c, c / total) for d, c in days.items()]))
        written.append(write_json(out / "coefficients.json", dependence_table(run.edges_, run.eis_)))
        atg = run.atg_
        (out / "atg.dot").write_text(atg.to_dot())
        (out / "atg.json").write_text(atg.to_json())
        written += [out / "atg.dot", out / "atg.json"]

    if "ti" in targets:
        tis = run.tis_
        written.append(write_table(out / "ti-table.csv", "temporal interaction list", write_ti_table, tis))
        emit_pdf("ti-durations.csv", "TI active-duration distribution", [t.duration for t in tis])
        freqs = [s.n_ti for s in run.series_]
        emit_pdf("ti-frequency.csv", "TI frequency distribution", freqs)
        same, cross = run.inter_event_split_
        emit_pdf("interevent-sameday.csv", "inter-event durations within one day", same)
        emit_pdf("interevent-crossday.csv", "inter-event durations across days", cross)

    if "contact" in targets:
        cn = run.contact_network_
        written.append(write_csv(out / "contact-network.csv", "aggregated contact network",
                                 ("u", "v", "n_ti"), [(u, v, w) for (u, v), w in cn.weights.items()]))
        sc = run.super_connecting_
        written.append(write_csv(out / "super-connecting.csv", "super-connecting groups of the aggregated transmission graph",
                                 ("vertex", "wap_id", "members", "k_in", "k_out"),
                                 [(identity_label(v), v[0], members_key(v[1]), ki, ko) for v, ki, ko in sc.vertices],
                                 [f"k_min={run.k_min_}"]))
        report = run.leaf_hub_
        written.append(write_table(out / "degree-rank.csv", "contact-network degree vs rank, super-connecting members flagged",
                                   write_degree_rank, report))
        written.append(write_json(out / "leaf-hub.json", {
            "k_min": run.k_min_,
            "n_super_vertices": len(sc.vertices),
            "n_super_members": report.n_super,
            "median_degree_all": report.median_degree_all,
            "median_degree_super": report.median_degree_super,
        }))

    if "entropy" in targets:
        run.check_invariants()
        written.append(write_table(out / "dyad-summary.csv", "dyad summary with spatial entropy", write_dyad_summary, run.series_))
        means, counts = run.entropy_curve_
        written.append(write_csv(out / "entropy-curve.csv", "average spatial entropy vs TI frequency",
                                 ("n_ti", "mean_entropy", "n_dyads"), [(n, means[n], counts[n]) for n in means]))
        top = sorted(run.series_, key=lambda s: (-s.n_ti, s.u, s.v))[:2]
        rows = []
        for s in top:
            if s.inter_event:
                rows.extend((s.u, s.v, s.n_ti, s.entropy, x, p) for x, p in ccdf(s.inter_event))
        written.append(write_csv(out / "dyad-cpd.csv", "inter-event CPD of the most frequent dyads",
                                 ("u", "v", "n_ti", "entropy", "x", "ccdf"), rows, [f"unit={unit}"]))

    if "deseason" in targets:
        run.check_invariants(shuffled=True)
        emit_pdf("deseason-natural.csv", "transmission durations, same-day source and sink only", run.natural_deltas_)
        emit_pdf("deseason-shuffled.csv", "transmission durations on time-shuffled EIs", [e.delta for e in run.shuffled_edges_])
        written.append(write_json(out / "deseason.json", {
            "natural": {"n": len(run.natural_deltas_), "n_all": len(run.edges_)},
            "shuffled": {"n": len(run.shuffled_edges_), **run.shuffle_stats_},
        }))

    write_json(out / "config.json", {"config": asdict(cfg), "store": meta, "version": __version__})
    print(f"wrote {len(written)} files to {out}")
    return written


# -- oracle-check / shuffle -----------------------------------------------------


def cmd_oracle_check(cfg: RunConfig) -> int:
    from .synth import brute_force_oracle, random_instance
    from .event_graph import build_event_interactions, build_transmission_graph
    from .dyad_graph import build_temporal_interactions

    from importlib import resources

    from .synth import instance_from_json

    failures = []
    golden = sorted(p for p in resources.files("indoornet").joinpath("fixtures").iterdir() if p.name.startswith("golden-"))
    for path in golden:
        sessions, *expected = instance_from_json(path.read_text())
        normalized = normalize_sessions(sessions)
        eis = build_event_interactions(normalized)
        if [eis, build_transmission_graph(eis), build_temporal_interactions(normalized)] != expected:
            failures.append(path.name)
    print(f"{len(golden) - len(failures)}/{len(golden)} golden instances match")
    for k in range(cfg.instances):
        seed = cfg.seed + k
        raw = random_instance(seed)
        sessions = normalize_sessions(raw)
        eis = build_event_interactions(sessions)
        got = (eis, build_transmission_graph(eis), build_temporal_interactions(sessions))
        if got != tuple(brute_force_oracle(raw)):
            failures.append(seed)
    print(f"{cfg.instances - len(failures)}/{cfg.instances} random instances match the oracle")
    if failures:
        raise InvariantViolation(f"oracle mismatch for {failures[:10]}")
    return cfg.instances


def cmd_shuffle(cfg: RunConfig) -> dict:
    if not cfg.store or not cfg.out:
        raise ConfigError("shuffle needs --store and --out")
    meta, data, kind = load_store(cfg.store)
    run = CoPresenceAnalysis(kind=kind, random_state=cfg.seed, n_swaps_factor=cfg.swap_factor).fit(data)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    shuffled = sorted(run.shuffled_eis_, key=lambda e: e.ei_id)
    from .event_graph import check_exclusivity

    check_exclusivity(shuffled, exclusive=run.exclusive)
    write_table(out / "shuffled-ei-table.csv", "time-shuffled event interactions", write_ei_table, shuffled)
    write_json(out / "null-model.json", run.shuffle_stats_)
    print(f"accepted {run.shuffle_stats_['accepted']}/{run.shuffle_stats_['attempted']} swaps")
    return run.shuffle_stats_


# -- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="indoornet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file whose keys override the flags")
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("ingest", help="parse and normalize a raw log into a store directory")
    common(sp)
    sp.add_argument("--input", required=False)
    sp.add_argument("--format", choices=FORMATS)
    sp.add_argument("--time-format", dest="time_format", choices=("minutes", "datetime"))
    sp.add_argument("--out")

    sp = sub.add_parser("analyze", help="write distribution/coefficient tables for a store")
    common(sp)
    sp.add_argument("--store")
    sp.add_argument("--out")
    sp.add_argument("--targets", help=f"comma-separated subset of {','.join(TARGETS)}")
    sp.add_argument("--k-min", dest="k_min", type=int)
    sp.add_argument("--bins-per-decade", dest="bins_per_decade", type=int)
    sp.add_argument("--tz-offset", dest="tz_offset", type=int, help="minutes added before cutting days")
    sp.add_argument("--swap-factor", dest="swap_factor", type=int)

    sp = sub.add_parser("oracle-check", help="compare the builders with the brute-force oracle")
    common(sp)
    sp.add_argument("--instances", type=int)

    sp = sub.add_parser("shuffle", help="write a time-shuffled EI table")
    common(sp)
    sp.add_argument("--store")
    sp.add_argument("--out")
    sp.add_argument("--swap-factor", dest="swap_factor", type=int)
    return p


COMMANDS = {
    "ingest": cmd_ingest,
    "analyze": cmd_analyze,
    "oracle-check": cmd_oracle_check,
    "shuffle": cmd_shuffle,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from_args(args)
        COMMANDS[args.command](cfg)
    except (InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
