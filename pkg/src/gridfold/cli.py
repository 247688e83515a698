"""Command-line entry point: ``gridfold <kind> [config.yaml] [--set key=value ...]``.

Exit codes: 0 success, 1 invalid configuration or parameters, 2 a statistical
check or invariant failed.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import __version__
from .config import FORMATS, KINDS, ExperimentConfig, load_config
from .engine import EngineConfig, measure_attainment, run_parallel_shortest, run_treefold, treefold_wallclock_bound
from .errors import GridfoldError, InvalidParameter, MonoidLawViolation, StatisticsError
from .latency import ClusterLatencyParams, GridLatencyParams, cluster_overheads, divergence_experiment, ratio_curve_exact
from .monoid import float_sum, int_subtraction, lawful_catalog
from .percolation import detour_experiment
from .smallworld import collapse_pattern, smallworld_experiment
from .topology import augment_smallworld, build_grid, diameter, eccentricity
from .transport import DiscreteMeasure, bounds_report
from .variance import loglog_slope, scaling_experiment

EXIT_OK, EXIT_INVALID, EXIT_STATISTICAL = 0, 1, 2
OUTPUT_SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_BOOL = {"type": "boolean"}
_STR = {"type": "string"}

ROW_FIELDS = {
    "bounds": {"w1": _NUM, "r_mu": _INT, "steiner": _INT, "wallclock_lower_seconds": _NUM, "L": _INT,
               "atoms_digest": _STR, "seed": {"type": ["integer", "null"]}},
    "simulate": {"contention": _STR, "completion_cycles": _INT, "depth_lower": _INT, "depth_slack": _INT,
                 "transport_work": _NUM, "w1": _NUM, "work_equals_w1": _BOOL, "wallclock_seconds": _NUM},
    "treefold": {"schedule": _INT, "value": _STR, "completion_cycles": _INT, "depth": _INT, "used_edges": _INT,
                 "wallclock_seconds": _NUM, "bound_seconds": _NUM},
    "variance": {"n": _INT, "P": _INT, "f": _NUM, "trials": _INT, "mean_hat": _NUM, "mean_exact": _NUM,
                 "var_hat": _NUM, "var_exact": _NUM, "var_over_P2": _NUM, "var_over_P32": _NUM},
    "percolation": {"k": _INT, "count": _INT, "mean_detour": _NUM, "ci_low": _NUM, "ci_high": _NUM},
    "smallworld": {"L": _INT, "P": _INT, "k": _INT, "pairs": _INT, "mean_dist": _NUM,
                   "mean_dist_over_log2P": _NUM, "mean_dist_over_sqrtP": _NUM, "method": _STR},
    "latency": {"N": _INT, "ratio": _NUM, "ratio_over_log2N": _NUM},
}


def row_schema(kind: str) -> dict:
    props = ROW_FIELDS[kind]
    return {"type": "object", "properties": props, "required": list(props), "additionalProperties": False}


def _graph(cfg: ExperimentConfig):
    g = build_grid(cfg.L)
    return augment_smallworld(g, cfg.k, cfg.seed) if cfg.k > 0 else g


def _measure(cfg: ExperimentConfig) -> DiscreteMeasure:
    return DiscreteMeasure.from_masses([tuple(a) for a in cfg.atoms], cfg.masses, tuple(cfg.sink))


def _engine(cfg: ExperimentConfig) -> EngineConfig:
    return EngineConfig(cfg.contention, cfg.t_edge, cfg.t_merge, cfg.t_cycle, cfg.k_arch)


def run_bounds(cfg, trace):
    r = bounds_report(_measure(cfg), _graph(cfg), cfg.t_edge, cfg.t_cycle)
    row = json.loads(r.to_json())
    ok = r.r_mu >= r.w1 and r.steiner >= r.r_mu
    return [row], {"w1": float(r.w1), "r_mu": r.r_mu, "steiner": r.steiner}, ok


def run_simulate(cfg, trace):
    m, g, ec = _measure(cfg), _graph(cfg), _engine(cfg)
    run = run_parallel_shortest(m, g, ec, trace=trace)
    rep = measure_attainment(m, g, ec)
    row = {
        "contention": ec.contention,
        "completion_cycles": run.completion_cycles,
        "depth_lower": rep.depth_lower,
        "depth_slack": rep.depth_slack,
        "transport_work": float(rep.transport_work),
        "w1": float(rep.w1),
        "work_equals_w1": rep.work_equals_w1,
        "wallclock_seconds": run.wallclock_seconds,
    }
    ok = rep.work_equals_w1 and rep.depth_slack >= 0
    if ec.contention == "non_congesting":
        ok = ok and rep.depth_slack == 0
    return [row], dict(row), ok


def _monoid(name: str):
    table = {m.name: m for m in lawful_catalog() + [int_subtraction(), float_sum()]}
    if name not in table:
        raise InvalidParameter(f"unknown monoid {name!r}; choose from {sorted(table)}", field="monoid")
    return table[name]


def run_treefold_kind(cfg, trace):
    g = _graph(cfg)
    origin = tuple(cfg.origin) if cfg.origin is not None else (cfg.L // 2, cfg.L // 2)
    monoid = _monoid(cfg.monoid)
    rng = np.random.default_rng(cfg.seed)
    values = {v: monoid.sampler(rng) for v in g.nodes()}
    ec = _engine(cfg)
    bound = treefold_wallclock_bound(diameter(g), ec)
    ecc = eccentricity(g, origin)
    rows, outs = [], []
    for s in range(cfg.schedules):
        res = run_treefold(g, origin, monoid, values, ec, order_seed=[cfg.seed, s], trace=trace if s == 0 else None)
        outs.append(res.value)
        rows.append({
            "schedule": s,
            "value": repr(res.value),
            "completion_cycles": res.completion_cycles,
            "depth": res.depth,
            "used_edges": res.used_edges,
            "wallclock_seconds": res.wallclock_seconds,
            "bound_seconds": bound,
        })
    ok = all(o == outs[0] for o in outs) and all(r["wallclock_seconds"] <= bound and r["depth"] == ecc for r in rows)
    summary = {"monoid": monoid.name, "value": repr(outs[0]), "schedules": cfg.schedules,
               "schedule_independent": all(o == outs[0] for o in outs), "depth": ecc, "bound_seconds": bound}
    return rows, summary, ok


def run_variance(cfg, trace):
    rows = scaling_experiment(cfg.n_list, cfg.f_act, cfg.trials, cfg.seed, cfg.workers)
    z = [r.z for r in rows]
    v32 = [r.var_over_P32 for r in rows]
    summary = {
        "max_abs_z": max(abs(x) for x in z),
        "sigma": cfg.sigma,
        "var_over_P32_increasing": all(b > a for a, b in zip(v32, v32[1:])),
        "loglog_slope_hat": loglog_slope([r.P for r in rows], [r.var_hat for r in rows]) if len(rows) > 1 else None,
        "loglog_slope_exact": loglog_slope([r.P for r in rows], [r.var_exact for r in rows]) if len(rows) > 1 else None,
    }
    ok = summary["max_abs_z"] <= cfg.sigma and summary["var_over_P32_increasing"]
    return [r.csv_record() for r in rows], summary, ok


def run_percolation(cfg, trace):
    if cfg.delta >= 1:
        raise InvalidParameter("delta must be < 1 for routing experiments", field="delta")
    res = detour_experiment(cfg.L, cfg.delta, cfg.pairs, cfg.fields, cfg.seed)
    rows = [{"k": b.k, "count": b.count, "mean_detour": b.mean_detour,
             "ci_low": b.ci[0] if b.count > 1 else b.mean_detour,
             "ci_high": b.ci[1] if b.count > 1 else b.mean_detour} for b in res.buckets]
    summary = res.summary()
    if cfg.delta == 0:
        ok = all(b.mean_detour == 0 for b in res.buckets)
    else:
        if res.tail is None:
            raise StatisticsError("too few clusters for a tail fit; raise fields or L", field="fields")
        summary["monotone_violations"] = res.monotone_violations()
        summary["size_bias_z"] = res.size_bias_z()
        ok = not summary["monotone_violations"] and res.tail.ci_low > 0 and summary["size_bias_z"] >= 3
    return rows, summary, ok


def run_smallworld(cfg, trace):
    rows = smallworld_experiment(cfg.L_list, cfg.k, cfg.pairs, cfg.seed)
    pattern = collapse_pattern(rows)
    ok = cfg.k == 0 or (pattern["sqrtP_strictly_decreasing"] and pattern["log2P_within_factor_2"])
    return [r.record() for r in rows], {k: (float(v) if not isinstance(v, bool) else v) for k, v in pattern.items()}, ok


def run_latency(cfg, trace):
    gp = GridLatencyParams(cfg.c1, cfg.c_w, cfg.t_edge, cfg.P, cfg.t_cycle)
    a, b = cluster_overheads(ClusterLatencyParams(cfg.alpha, cfg.beta, cfg.gamma, max(cfg.N_list), cfg.m0, cfg.c2))
    curve = ratio_curve_exact(gp.c1, cfg.c2, a, b, gp.M_P, cfg.x_list)
    div = divergence_experiment(cfg.N_list, cfg.f_act, gp, cfg.alpha, cfg.beta, cfg.gamma, cfg.m0, cfg.c2)
    rows = [{"N": r.N, "ratio": r.ratio, "ratio_over_log2N": r.ratio_over_log2N} for r in div.rows]
    summary = {
        "M_P": gp.M_P,
        "A_N": a,
        "B_N": b,
        "curve_N": max(cfg.N_list),
        "curve": curve.rows(),
        "monotone_criterion": curve.monotone,
        "limit": float(curve.limit),
        "tail_spread": div.tail_spread,
        "r_squared": div.r_squared,
        "diverges": div.diverges,
    }
    ok = curve.monotone == curve.sampled_increasing()
    if cfg.alpha > 0:
        ok = ok and div.diverges and div.tail_spread < 0.1 and div.r_squared > 0.999
    return rows, summary, ok


RUNNERS = {
    "bounds": run_bounds,
    "simulate": run_simulate,
    "treefold": run_treefold_kind,
    "variance": run_variance,
    "percolation": run_percolation,
    "smallworld": run_smallworld,
    "latency": run_latency,
}


def write_rows(rows: list[dict], kind: str, path: Path, fmt: str) -> None:
    schema = row_schema(kind)
    for r in rows:
        jsonschema.validate(r, schema)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if fmt == "csv":
            w = csv.DictWriter(fh, fieldnames=list(ROW_FIELDS[kind]))
            w.writeheader()
            w.writerows(rows)
        else:
            for r in rows:
                fh.write(json.dumps(r, sort_keys=True) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def execute(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out or f"results/{cfg.kind}.{cfg.format}")
    started = _now()
    with contextlib.ExitStack() as stack:
        trace = None
        if cfg.trace:
            Path(cfg.trace).parent.mkdir(parents=True, exist_ok=True)
            trace = stack.enter_context(open(cfg.trace, "w"))
        rows, summary, ok = RUNNERS[cfg.kind](cfg, trace)
    write_rows(rows, cfg.kind, out, cfg.format)
    manifest = {
        "schema_version": OUTPUT_SCHEMA_VERSION,
        "tool": "gridfold",
        "version": __version__,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "config_sha256": cfg.digest(),
        "config": cfg.to_dict(),
        "started": started,
        "finished": _now(),
        "output": str(out),
        "status": "ok" if ok else "statistical_failure",
        "summary": summary,
    }
    Path(f"{out}.manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2, default=float) + "\n")
    print(json.dumps({"kind": cfg.kind, "status": manifest["status"], "output": str(out), "summary": summary},
                     sort_keys=True, default=float))
    return EXIT_OK if ok else EXIT_STATISTICAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridfold", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("config", nargs="?", help="flat YAML config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=FORMATS)
        sp.add_argument("--trace", help="JSON-lines per-cycle trace (simulate, treefold)")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            declared = (yaml.safe_load(Path(args.config).read_text()) or {}).get("kind")
            if declared not in (None, args.kind):
                raise InvalidParameter(f"config declares kind {declared!r} but {args.kind!r} was requested", field="kind")
        overrides = {"kind": args.kind, "seed": args.seed, "out": args.out, "format": args.format,
                     "trace": args.trace, "workers": args.workers}
        return execute(load_config(args.config, overrides, args.set))
    except (MonoidLawViolation, StatisticsError) as exc:
        print(f"statistical failure [{exc.field or 'witness'}]: {exc}", file=sys.stderr)
        return EXIT_STATISTICAL
    except GridfoldError as exc:
        print(f"invalid parameter [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
