"""Command-line entry point: ``lockthrash <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 bad config or input file,
3 a simulator invariant was violated.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import analytic, contention, experiments, policies, scalval, ssc
from .engine import DEFAULT_MAX_TICKS, EngineInvariantError, Simulator
from .model import BUNDLED, ConfigError, bundled_config, load_config

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config(text: str):
    return bundled_config(text) if text in BUNDLED else load_config(text)


def _int_list(text: str) -> tuple[int, ...]:
    """``1-32``, ``1,2,4`` or a mix of both."""
    out = []
    try:
        for part in text.split(","):
            lo, sep, hi = part.partition("-")
            out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    return tuple(out)


def _policy(text: str):
    try:
        return policies.parse_policy(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = _config(args.config)
    if args.breakdown:
        sim = Simulator(config.platform, config.workload, args.cores, args.policy, args.max_ticks, args.seed)
        _emit(args, scalval.profile_to_csv(scalval.Profile.from_sim(sim.run())))
        return EXIT_OK
    # speedup needs the one-core run with the same seed; sweep does that
    plan = experiments.ExperimentPlan(config, (args.cores,), (args.seed,), args.policy, args.max_ticks)
    result = experiments.sweep(plan)
    _emit(args, experiments.render(result.runs(), args.format, experiments.RUN_COLUMNS))
    return EXIT_INVARIANT if result.failed else EXIT_OK


def cmd_sweep(args) -> int:
    config = _config(args.config)
    seeds = args.seeds or (args.seed,)
    plan = experiments.ExperimentPlan(config, args.cores, seeds, args.policy, args.max_ticks, format=args.format)
    result = experiments.sweep(plan, workers=args.workers)
    _emit(args, experiments.render(result.rows, args.format, experiments.RUN_COLUMNS))
    if result.failed:
        for r in result.rows:
            if r["error"]:
                print(f"cores={r['cores']} seed={r['seed']}: {r['error']}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_baseline_mva(args) -> int:
    config = _config(args.config)
    model = analytic.workload_to_model(config.workload, config.platform.mem_latency, args.max_cores)
    rows = []
    for r in analytic.mva_solve(model):
        row = dict.fromkeys(experiments.RUN_COLUMNS, "")
        waiting = math.fsum(
            c.visit_ratio * (rk - c.service_time) for c, rk in zip(model.centers, r.residence_times)
        )
        row.update(
            row="mva",
            config=config.name,
            policy="mva",
            cores=r.n,
            throughput=r.throughput,
            speedup=r.speedup,
            lock_wait_fraction=r.throughput * waiting / r.n,
            mean_lock_queue=math.fsum(r.queue_lengths) / len(r.queue_lengths),
            max_lock_queue=max(r.queue_lengths),
        )
        rows.append(row)
    _emit(args, experiments.render(rows, args.format, experiments.RUN_COLUMNS))
    return EXIT_OK


def cmd_ssc_search(args) -> int:
    config = _config(args.config)
    oracle = ssc.simulator_oracle(config, args.seeds or (args.seed,), args.max_ticks, args.policy)
    if args.exhaustive:
        res = ssc.exhaustive_optimal(oracle, args.max_cores, args.samples)
    else:
        res = ssc.search_optimal(oracle, args.max_cores, args.samples)
    trace = [{"n": m.n, "p_bar": m.p_bar, "T": m.T} for m in res.trace]
    if args.format == "json":
        text = json.dumps({"n": res.n, "T": res.T, "oracle_calls": res.queries, "trace": trace}, indent=1) + "\n"
    else:
        text = f"# n*={res.n} T={res.T:.6g} oracle_calls={res.queries}\n" + experiments.render(trace, "csv")
    _emit(args, text)
    return EXIT_OK


def cmd_contention(args) -> int:
    table = contention.parse_corun_csv(_read(args.corun))
    d = contention.degradation(table)
    intensity, sensitivity = contention.intensity_sensitivity(d)
    scores = []
    if args.metrics:
        scores += [contention.score_metric(intensity, m) for m in contention.parse_metrics_csv(_read(args.metrics), table.names)]
    if args.scores:
        scores += contention.parse_scores_csv(_read(args.scores))
    best = contention.choose(scores) if scores else None
    report = {
        "apps": list(table.names),
        "degradation": d.round(6).tolist(),
        "intensity": dict(zip(table.names, intensity.round(6).tolist())),
        "sensitivity": dict(zip(table.names, sensitivity.round(6).tolist())),
        "corr_intensity_sensitivity": round(contention.pearson(intensity, sensitivity), 6),
        "metrics": [{"metric": s.name, "E": s.E, "S": s.S, "ratio": s.ratio} for s in scores],
        "winner": best.name if best else None,
    }
    if args.format == "json":
        text = json.dumps(report, indent=1) + "\n"
    else:
        lines = ["app,intensity,sensitivity"]
        lines += [f"{n},{report['intensity'][n]},{report['sensitivity'][n]}" for n in table.names]
        lines.append(f"# corr(I,S)={report['corr_intensity_sensitivity']}")
        if scores:
            lines.append("metric,E,S,ratio")
            lines += [f"{s.name},{s.E:.6g},{s.S:.6g},{s.ratio:.6g}" for s in scores]
            lines.append(f"# winner={report['winner']}")
        text = "\n".join(lines) + "\n"
    _emit(args, text)
    return EXIT_OK


def cmd_scalval(args) -> int:
    single = scalval.parse_profile_csv(_read(args.single), 1)
    multi = scalval.parse_profile_csv(_read(args.multi), 2)
    report = scalval.scalability_values(single, multi)
    if args.format == "json":
        rows = report.rows[: args.top] if args.top else report.rows
        text = json.dumps(
            {
                "rows": [r.__dict__ for r in rows],
                "top_coverage": math.fsum(r.weight for r in rows),
            },
            indent=1,
        ) + "\n"
    else:
        text = scalval.report_to_csv(report, args.top)
    _emit(args, text)
    return EXIT_OK


def cmd_repro(args) -> int:
    out = Path(args.out or f"repro_{args.figure}")
    files = experiments.figure_repro(
        args.figure, out, args.seeds or (1, 2, 3), args.max_ticks, args.cores, args.workers, args.format
    )
    for name in files:
        print(out / f"{name}.{args.format}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def globals_(parser, default):
        # subcommands repeat the global flags without defaults so that a flag
        # given before the subcommand is not reset by the subparser
        d = (lambda v: v) if default else (lambda v: argparse.SUPPRESS)
        parser.add_argument("--seed", type=int, default=d(1), help="run seed (default 1)")
        parser.add_argument("--format", choices=("csv", "json"), default=d("csv"))
        parser.add_argument("--out", default=d(None), help="output file (directory for repro); stdout by default")

    p = _Parser(prog="lockthrash", description="Lock-thrashing simulator and analysis tools.")
    globals_(p, True)
    common = _Parser(add_help=False)
    globals_(common, False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help, parents=[common])
        sp.set_defaults(func=fn)
        return sp

    def sim_opts(sp, ticks=DEFAULT_MAX_TICKS):
        sp.add_argument("--config", required=True, help=f"YAML file or one of {', '.join(BUNDLED)}")
        sp.add_argument("--policy", type=_policy, default=policies.Ticket())
        sp.add_argument("--max-ticks", type=int, default=ticks)

    sp = add("simulate", cmd_simulate, "one simulation run")
    sim_opts(sp)
    sp.add_argument("--cores", type=int, required=True)
    sp.add_argument("--breakdown", action="store_true", help="emit func,time_per_cycle per event kind")

    sp = add("sweep", cmd_sweep, "core-count sweep over seeds")
    sim_opts(sp)
    sp.add_argument("--cores", type=_int_list, default=experiments.ALL_CORES, help="e.g. 1-32 or 1,2,4,8")
    sp.add_argument("--seeds", type=_int_list)
    sp.add_argument("--workers", type=int, default=1)

    sp = add("baseline-mva", cmd_baseline_mva, "mean-value analysis of the queuing model")
    sp.add_argument("--config", required=True)
    sp.add_argument("--max-cores", type=int, default=32)

    sp = add("ssc-search", cmd_ssc_search, "optimal core-set size search")
    sim_opts(sp, experiments.ACCEPTANCE_TICKS)
    sp.add_argument("--max-cores", type=int, default=32)
    sp.add_argument("--exhaustive", action="store_true")
    sp.add_argument("--samples", type=int, default=1)
    sp.add_argument("--seeds", type=_int_list)

    sp = add("contention-metrics", cmd_contention, "co-run degradation and metric selection")
    sp.add_argument("--corun", required=True)
    sp.add_argument("--metrics", help="metric,background,<apps...> rows")
    sp.add_argument("--scores", help="precomputed metric,E,S rows")

    sp = add("scalval", cmd_scalval, "per-function scalability values")
    sp.add_argument("--single", required=True)
    sp.add_argument("--multi", required=True)
    sp.add_argument("--top", type=int)

    sp = add("repro", cmd_repro, "regenerate figure data")
    sp.add_argument("figure", choices=experiments.FIGURES)
    sp.add_argument("--seeds", type=_int_list)
    sp.add_argument("--cores", type=_int_list, default=experiments.ALL_CORES)
    sp.add_argument("--max-ticks", type=int, default=experiments.ACCEPTANCE_TICKS)
    sp.add_argument("--workers", type=int, default=1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EngineInvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
