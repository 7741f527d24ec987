"""Seed sweeps, protocol A/B runs, the alpha table and plot-ready curve files."""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .energy import alpha_lower_bound
from .scenario import Scenario
from .simulation import simulate

log = logging.getLogger(__name__)

SUMMARY_FIELDS = ["seed", "protocol", "nodes", "lifetime_s", "censored",
                  "mean_energy_J", "mean_delay_s", "delivery_ratio"]
METRIC_FIELDS = ["lifetime_s", "mean_energy_J", "mean_delay_s", "delivery_ratio"]
CURVE_FIELDS = ["x", "y", "series"]

PUBLISHED_ALPHA = {10: 0.155, 20: 0.289, 30: 0.396, 40: 0.499, 50: 0.574,
          60: 0.629, 70: 0.672, 80: 0.707, 90: 0.734, 100: 0.757}
ALPHA_TOLERANCE = 0.002


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[dict]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(h)) for h in header])
    path.write_text(buf.getvalue())


# ----------------------------------------------------------------- runs


@dataclass(frozen=True)
class RunSpec:
    scenario: Scenario
    node_count: int
    seed: int
    protocol: str
    trace_dir: Optional[str] = None
    trace_messages: bool = False
    trace_positions: bool = False

    @property
    def name(self) -> str:
        return f"{self.protocol}_n{self.node_count}_s{self.seed}"


def execute(spec: RunSpec) -> dict:
    """Run one simulation; never raises, failures come back as ``{"failed": ...}``."""
    msg_file = pos_file = None
    try:
        if spec.trace_dir and spec.trace_messages:
            msg_file = open(Path(spec.trace_dir) / f"{spec.name}.messages.txt", "w")
        if spec.trace_dir and spec.trace_positions:
            pos_file = open(Path(spec.trace_dir) / f"{spec.name}.positions.csv", "w")
            pos_file.write("t,node,x,y\n")
        result = simulate(spec.scenario, spec.node_count, spec.seed, spec.protocol,
                          message_trace=msg_file, position_trace=pos_file)
        return {"row": result.row(), "curves": result.curves(),
                "energy_conserved": result.energy_conserved(), "stats": result.stats}
    except Exception:
        return {"failed": traceback.format_exc(),
                "row": {"seed": spec.seed, "protocol": spec.protocol, "nodes": spec.node_count,
                        "censored": "failed"}}
    finally:
        for f in (msg_file, pos_file):
            if f is not None:
                f.close()


def plan(scenario: Scenario, seeds=None, protocols=None, **trace) -> list[RunSpec]:
    seeds = scenario.seed_list if seeds is None else list(seeds)
    protocols = scenario.protocols if protocols is None else list(protocols)
    return [RunSpec(scenario, n, s, p, **trace)
            for n in scenario.node_counts for s in seeds for p in protocols]


def aggregate(rows: list[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["protocol"], row["nodes"]), []).append(row)
    out = []
    for (protocol, nodes), members in groups.items():
        ok = [r for r in members if r.get("censored") != "failed"]
        agg = {"protocol": protocol, "nodes": nodes, "runs": len(ok),
               "failed": len(members) - len(ok),
               "censored_runs": sum(1 for r in ok if r["censored"] is True)}
        for metric in METRIC_FIELDS:
            values = [r[metric] for r in ok if r.get(metric) is not None]
            agg[f"{metric}_mean"] = statistics.fmean(values) if values else None
            agg[f"{metric}_std"] = statistics.stdev(values) if len(values) > 1 else (0.0 if values else None)
        out.append(agg)
    return out


AGGREGATE_FIELDS = ["protocol", "nodes", "runs", "failed", "censored_runs"] + [
    f"{m}_{s}" for m in METRIC_FIELDS for s in ("mean", "std")
]


def run_experiment(
    scenario: Scenario,
    out_dir,
    *,
    seeds=None,
    protocols=None,
    jobs: int = 1,
    trace_messages: bool = False,
    trace_positions: bool = False,
) -> dict:
    """Execute every (node count, seed, protocol) run and write the result files.

    Layout of ``out_dir``: ``summary.csv`` (one row per run), ``aggregate.csv``
    (one row per protocol and node count), ``runs/<name>.json`` (curve data),
    ``traces/`` when tracing is on, and ``scenario.json`` (the resolved input).
    """
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    trace_dir = None
    if trace_messages or trace_positions:
        trace_dir = out / "traces"
        trace_dir.mkdir(exist_ok=True)
    specs = plan(scenario, seeds, protocols, trace_dir=str(trace_dir) if trace_dir else None,
                 trace_messages=trace_messages, trace_positions=trace_positions)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(execute, specs))
    else:
        results = [execute(s) for s in specs]

    rows = [r["row"] for r in results]
    for spec, res in zip(specs, results):
        if "failed" in res:
            log.error("run %s failed:\n%s", spec.name, res["failed"])
            continue
        if not res["energy_conserved"]:
            log.warning("run %s: energy ledger mismatch", spec.name)
        (out / "runs" / f"{spec.name}.json").write_text(json.dumps(res["curves"], sort_keys=True))
    write_csv(out / "summary.csv", SUMMARY_FIELDS, rows)
    write_csv(out / "aggregate.csv", AGGREGATE_FIELDS, aggregate(rows))
    (out / "scenario.json").write_text(scenario.dumps() + "\n")
    return {"rows": rows, "results": results, "failed": sum("failed" in r for r in results)}


# ---------------------------------------------------------------- alpha


def alpha_table(t_net: float = 2.0**-40, ks: Sequence[int] = tuple(PUBLISHED_ALPHA)) -> list[dict]:
    rows = []
    for k in ks:
        value = alpha_lower_bound(t_net, k)
        published = PUBLISHED_ALPHA.get(k)
        if published is None:
            status = "-"
        elif abs(value - published) <= ALPHA_TOLERANCE:
            status = "match"
        else:
            status = "divergent"
        rows.append({"K": k, "alpha_min": value, "published": published, "status": status})
    return rows


def format_alpha_table(rows: list[dict]) -> str:
    lines = [f"{'K':>5}  {'alpha_min':>11}  {'published':>9}  status"]
    for r in rows:
        published = "" if r["published"] is None else f"{r['published']:.3f}"
        lines.append(f"{r['K']:>5}  {r['alpha_min']:>11.6g}  {published:>9}  {r['status']}")
    return "\n".join(lines)


# --------------------------------------------------------------- curves


def _load_runs(trace_dir: Path) -> list[dict]:
    run_dir = trace_dir / "runs" if (trace_dir / "runs").is_dir() else trace_dir
    return [json.loads(p.read_text()) for p in sorted(run_dir.glob("*.json"))
            if p.name != "scenario.json"]


def emit_curves(trace_dir, out_dir=None, t_net: float = 2.0**-40) -> dict[str, Path]:
    """Write exhaustion / energy / delay / alpha curves as ``x,y,series`` CSVs."""
    trace_dir = Path(trace_dir)
    out = Path(out_dir) if out_dir else trace_dir / "curves"
    out.mkdir(parents=True, exist_ok=True)
    runs = [r for r in _load_runs(trace_dir) if "protocol" in r]
    multi_n = len({r["nodes"] for r in runs}) > 1

    def series(r):
        return f"{r['protocol']}@{r['nodes']}" if multi_n else r["protocol"]

    groups: dict[str, list[dict]] = {}
    for r in runs:
        groups.setdefault(series(r), []).append(r)
    horizon = int(max((r["duration"] for r in runs), default=0))
    grid = list(range(horizon + 1))

    exhaustion, energy = [], []
    for name in sorted(groups):
        members = groups[name]
        for x in grid:
            exhausted = [sum(1 for t in r["exhaustions"] if t <= x) for r in members]
            exhaustion.append({"x": x, "y": statistics.fmean(exhausted), "series": name})
            used = [_timeline_at(r["energy_timeline"], x) for r in members]
            energy.append({"x": x, "y": statistics.fmean(used), "series": name})

    delay = []
    by_protocol_n: dict[tuple, list[float]] = {}
    for r in runs:
        if r["mean_delay_s"] is not None:
            by_protocol_n.setdefault((r["protocol"], r["nodes"]), []).append(r["mean_delay_s"])
    for (protocol, nodes) in sorted(by_protocol_n):
        delay.append({"x": nodes, "y": statistics.fmean(by_protocol_n[(protocol, nodes)]),
                      "series": protocol})

    alpha = [{"x": r["K"], "y": r["alpha_min"], "series": "alpha_min"}
             for r in alpha_table(t_net, range(1, 101))] if runs else []

    paths = {name: out / f"{name}.csv" for name in ("exhaustion", "energy", "delay", "alpha")}
    for name, rows in (("exhaustion", exhaustion), ("energy", energy), ("delay", delay), ("alpha", alpha)):
        write_csv(paths[name], CURVE_FIELDS, rows)
    return paths


def _timeline_at(timeline: list, x: float) -> float:
    value = 0.0
    for t, total in timeline:
        if t > x:
            break
        value = total
    return value
