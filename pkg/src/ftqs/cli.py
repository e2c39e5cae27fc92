"""Command-line front end: one subcommand per module, seeded and parallel.

Per-trial seeds derive from the master seed through SeedSequence spawning
keyed by trial index, so the thread count never changes the statistics.
Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import reports
from .bounds import ScalingParams, overhead_3d, overhead_4d, threshold_report
from .config import ConfigError, ExperimentConfig, resolve, schema_keys
from .distill import (
    fifteen_to_one_protocol,
    fitted_suppression_slope,
    plan_zmsd,
    seven_to_one_protocol,
    simulate_distillation,
    success_probability_bound,
)
from .paulis import NoiseSpec
from .pipeline import (
    InsufficientSuccesses,
    PipelineConfig,
    graph_spec_for,
    interaction_audit,
    quantum_depth_audit,
    run_error_model,
    run_exact_small,
    sampling_envelope,
)
from .routing import plan_routes, render_plan, verify_disjoint
from .sampler import (
    OutcomeDistribution,
    anticoncentration_stats,
    build_brickwork_graph,
    default_gadget,
    empirical_distribution,
    exact_distribution,
    l1_distance,
    load_gadget,
    sample_outcomes,
    substitute_gbprime,
    uniform_s_marginal_check,
)
from .surface import fit_pf_exponent, logical_error_rate


def _child_rngs(seed: int, count: int):
    """Index-stable per-trial generators from one master seed."""
    return [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(count)]


def _parallel_map(fn, items, threads: int):
    """Order-preserving map over independent trials."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _outcome_rows(exact: OutcomeDistribution, empirical=None):
    rows = []
    for si in range(2**exact.s_length):
        for xi in range(2**exact.x_length):
            row = [
                format(si, f"0{exact.s_length}b") if exact.s_length else "",
                format(xi, f"0{exact.x_length}b") if exact.x_length else "",
                float(exact.table[si, xi]),
            ]
            if empirical is not None:
                row.append(float(empirical.table[si, xi]))
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Subcommand runners
# ---------------------------------------------------------------------------


def _sample_spec(params):
    if params["gadget"] in ("default", "pi2_free"):
        spec = build_brickwork_graph(params["n"], params["k"], default_gadget())
        if params["gadget"] == "pi2_free":
            spec = substitute_gbprime(spec)
        return spec
    return build_brickwork_graph(params["n"], params["k"], load_gadget(params["gadget"]))


def _run_sample(cfg: ExperimentConfig):
    params = cfg.params
    spec = _sample_spec(params)
    exact = exact_distribution(spec)
    empirical = None
    stats = {
        "num_vertices": spec.num_vertices,
        "uniform_s_deviation": uniform_s_marginal_check(spec),
        "alpha": params["alpha"],
        "beta": anticoncentration_stats(exact, params["alpha"]),
        "total_probability": float(exact.table.sum()),
    }
    if params["shots"] > 0:
        rng = _child_rngs(cfg.seed, 1)[0]
        S, X = sample_outcomes(spec, params["shots"], rng)
        empirical = empirical_distribution(S, X, exact.s_length, exact.x_length)
        stats["shots"] = params["shots"]
        stats["empirical_l1"] = l1_distance(empirical, exact)
        stats["envelope"] = sampling_envelope(
            exact.s_length + exact.x_length, params["shots"]
        )
    columns = ["s_bits", "x_bits", "probability"]
    if empirical is not None:
        columns.append("empirical")
    csv_path = os.path.join(cfg.out, "sample_distribution.csv")
    reports.write_csv(
        csv_path,
        columns,
        _outcome_rows(exact, empirical),
        subcommand="sample",
        params=params,
        seed=cfg.seed,
    )
    labels = [
        f"{s},{x}" for s, x, *_ in _outcome_rows(exact)
    ]
    reports.render_distribution_figure(
        reports.figure_path(csv_path),
        labels,
        exact.table.reshape(-1),
        None if empirical is None else empirical.table.reshape(-1),
    )
    stats_path = os.path.join(cfg.out, "sample_stats.json")
    reports.write_json(
        stats_path, stats, subcommand="sample", params=params, seed=cfg.seed
    )
    return [csv_path, reports.figure_path(csv_path), stats_path]


def _run_decode_bench(cfg: ExperimentConfig):
    params = cfg.params
    if params["trials"] < 1:
        raise ConfigError("trials must be >= 1")
    cells = [(d, p) for d in params["distances"] for p in params["rates"]]
    rngs = _child_rngs(cfg.seed, len(cells))

    def one(cell_rng_pair):
        (distance, p), rng = cell_rng_pair
        estimate, (lo, hi) = logical_error_rate(distance, p, params["trials"], rng)
        return [distance, distance * distance, p, params["trials"], estimate, lo, hi]

    rows = _parallel_map(one, list(zip(cells, rngs)), cfg.threads)
    fits = {}
    for p in params["rates"]:
        points = [(r[0], r[4]) for r in rows if r[2] == p and r[4] > 0]
        if len({d for d, _ in points}) >= 2:
            fits[repr(p)] = fit_pf_exponent(points)
        else:
            fits[repr(p)] = None
    csv_path = os.path.join(cfg.out, "decode_bench.csv")
    reports.write_csv(
        csv_path,
        ["distance", "l", "p", "trials", "p_L", "ci_low", "ci_high"],
        rows,
        subcommand="decode-bench",
        params=params,
        seed=cfg.seed,
    )
    reports.render_decode_figure(reports.figure_path(csv_path), rows)
    fit_path = os.path.join(cfg.out, "decode_bench_fit.json")
    reports.write_json(
        fit_path,
        {"suppression_constant_by_rate": fits},
        subcommand="decode-bench",
        params=params,
        seed=cfg.seed,
    )
    return [csv_path, reports.figure_path(csv_path), fit_path]


def _run_msd_plan(cfg: ExperimentConfig):
    params = cfg.params
    plan = plan_zmsd(
        params["eps"],
        params["target_eps_out"],
        params["d"],
        n=params["n"],
        C=params["C"],
        fail_budget=params["fail_budget"],
    )
    payload = dataclasses.asdict(plan)
    payload["success_probability_bound"] = success_probability_bound(plan)
    path = os.path.join(cfg.out, "msd_plan.json")
    reports.write_json(path, payload, subcommand="msd-plan", params=params, seed=cfg.seed)
    return [path]


def _run_msd_sim(cfg: ExperimentConfig):
    params = cfg.params
    if params["shots"] < 1:
        raise ConfigError("shots must be >= 1")
    protocol = (
        fifteen_to_one_protocol() if params["protocol"] == "15to1"
        else seven_to_one_protocol()
    )
    rngs = _child_rngs(cfg.seed, len(params["eps_values"]))

    def one(pair):
        eps, rng = pair
        out = simulate_distillation(
            protocol, eps, params["shots"], rng, noise=params["noise"]
        )
        return [eps, out.shots, out.accept_rate, out.output_infidelity, out.infidelity_ci]

    rows = _parallel_map(one, list(zip(params["eps_values"], rngs)), cfg.threads)
    csv_path = os.path.join(cfg.out, "msd_sweep.csv")
    reports.write_csv(
        csv_path,
        ["eps", "shots", "accept_rate", "infidelity", "ci"],
        rows,
        subcommand="msd-sim",
        params=params,
        seed=cfg.seed,
    )
    reports.render_msd_figure(reports.figure_path(csv_path), rows)
    try:
        slope = fitted_suppression_slope(rows)
    except ValueError:
        slope = None
    stats_path = os.path.join(cfg.out, "msd_sweep_stats.json")
    reports.write_json(
        stats_path,
        {"loglog_slope": slope, "protocol": protocol.name},
        subcommand="msd-sim",
        params=params,
        seed=cfg.seed,
    )
    return [csv_path, reports.figure_path(csv_path), stats_path]


def _run_route(cfg: ExperimentConfig):
    params = cfg.params
    flags = [int(ch) for ch in params["flags"]]
    if len(flags) != params["p"]:
        raise ConfigError("flags length must equal p")
    plan = plan_routes(params["p"], params["m"], flags)
    payload = {
        "grid": {
            "rows": plan.grid.rows,
            "cols": plan.grid.cols,
            "routed_slots": plan.grid.m,
        },
        "paths": [[list(v) for v in path] for path in plan.paths],
        "frames": [
            {
                "index": f.index,
                "source_row": f.source_row,
                "target": list(f.target),
                "interior_length": f.interior_length,
                "hadamard": f.hadamard,
            }
            for f in plan.byproduct_frames
        ],
        "disjoint": verify_disjoint(plan),
    }
    plan_path = os.path.join(cfg.out, "route_plan.json")
    reports.write_json(plan_path, payload, subcommand="route", params=params, seed=cfg.seed)
    pattern_path = os.path.join(cfg.out, "route_pattern.txt")
    reports.write_text(
        pattern_path, render_plan(plan), subcommand="route", params=params, seed=cfg.seed
    )
    return [plan_path, pattern_path]


def _run_estimate(cfg: ExperimentConfig):
    params = cfg.params
    if params["mode"] == "threshold":
        report = threshold_report(params["q_target"], params["d_total"])
    else:
        scaling = ScalingParams(
            n=params["n"],
            k=params["k"],
            r=params["r"],
            d_total=params["d_total"],
            constants_map=params["constants"],
        )
        report = overhead_4d(scaling) if params["mode"] == "4d" else overhead_3d(scaling)
    payload = report.as_dict()
    payload["echo_consistent"] = report.echo_consistent()
    path = os.path.join(cfg.out, "estimate_report.json")
    reports.write_json(path, payload, subcommand="estimate", params=params, seed=cfg.seed)
    return [path]


def _pipeline_config(cfg: ExperimentConfig) -> PipelineConfig:
    params = cfg.params
    eps_t, eps_y, p_out = params["eps_T"], params["eps_Y"], params["noise_p_out"]
    p_f, eps_out = params["p_f"], params["eps_out"]
    if params["noiseless"]:
        eps_t = eps_y = p_out = 0.0
        p_f = eps_out = None
    if params["mode"] == "error_model":
        p_f = 0.0 if p_f is None else p_f
        eps_out = 0.0 if eps_out is None else eps_out
        noise = None
    else:
        noise = NoiseSpec(p_prep=0.0, p_layers=[], p_out=p_out) if p_out else None
    try:
        return PipelineConfig(
            n=params["n"],
            k=params["k"],
            gadget=params["gadget"],
            architecture=params["architecture"],
            mode=params["mode"],
            distance=params["distance"],
            noise=noise,
            eps_T=eps_t,
            eps_Y=eps_y,
            msd_copies=params["msd_copies"],
            y_copies=params["y_copies"],
            skip_distillation=params["skip_distillation"],
            p_f=p_f,
            eps_out=eps_out,
            flip_model=params["flip_model"],
            seed=cfg.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


_RECORD_COLUMNS = [
    "run",
    "s_bits",
    "x_bits",
    "msd_copies",
    "msd_successes",
    "msd_needed",
    "msd_flips",
    "y_msd_copies",
    "y_msd_successes",
    "y_msd_needed",
    "y_msd_flips",
    "routing_plan_id",
    "y_routing_plan_id",
    "decode_failures",
    "feedback_layers",
]


def _record_row(index, record):
    return [
        index,
        record.s_bits,
        record.x_bits,
        record.msd_copies,
        record.msd_successes,
        record.msd_needed,
        record.msd_flips,
        record.y_msd_copies,
        record.y_msd_successes,
        record.y_msd_needed,
        record.y_msd_flips,
        record.routing_plan_id or "",
        record.y_routing_plan_id or "",
        record.decode_failures,
        record.feedback_layers,
    ]


def _run_pipeline(cfg: ExperimentConfig):
    params = cfg.params
    pipe = _pipeline_config(cfg)
    ideal = exact_distribution(graph_spec_for(pipe))
    num_bits = ideal.s_length + ideal.x_length
    summary = {
        "mode": pipe.mode,
        "architecture": pipe.architecture,
        "depth_audit": quantum_depth_audit(pipe),
    }

    if pipe.mode == "exact_small":
        if params["runs"] < 1:
            raise ConfigError("runs must be >= 1")
        rngs = _child_rngs(cfg.seed, params["runs"])

        def one(rng):
            try:
                return run_exact_small(pipe, rng)
            except InsufficientSuccesses:
                return None

        outcomes = _parallel_map(one, rngs, cfg.threads)
        records = [r for r in outcomes if r is not None]
        shortfalls = len(outcomes) - len(records)
        if not records:
            raise InsufficientSuccesses(0, 1, params["runs"], "every-run")
        table = np.zeros_like(ideal.table)
        for record in records:
            si = int(record.s_bits, 2) if record.s_bits else 0
            xi = int(record.x_bits, 2) if record.x_bits else 0
            table[si, xi] += 1.0 / len(records)
        empirical = OutcomeDistribution(ideal.s_length, ideal.x_length, table)
        record_rows = [_record_row(i, r) for i, r in enumerate(records)]
        summary.update(
            runs=params["runs"],
            completed=len(records),
            shortfalls=shortfalls,
            l1_to_exact=l1_distance(empirical, ideal),
            envelope=sampling_envelope(num_bits, len(records)),
            feedback_layers=interaction_audit(records),
        )
    else:
        if params["shots"] < 1:
            raise ConfigError("shots must be >= 1")
        result = run_error_model(pipe, params["shots"], _child_rngs(cfg.seed, 1)[0])
        empirical = result.distribution
        record_rows = [_record_row(i, r) for i, r in enumerate(result.records)]
        summary.update(
            shots=result.shots,
            l1_to_exact=result.l1_to_ideal,
            envelope=sampling_envelope(num_bits, result.shots),
            feedback_layers=interaction_audit(result.records),
        )
    summary["within_envelope"] = bool(summary["l1_to_exact"] <= summary["envelope"])

    records_path = os.path.join(cfg.out, "pipeline_records.csv")
    reports.write_csv(
        records_path,
        _RECORD_COLUMNS,
        record_rows,
        subcommand="pipeline",
        params=params,
        seed=cfg.seed,
    )
    dist_path = os.path.join(cfg.out, "pipeline_distribution.csv")
    reports.write_csv(
        dist_path,
        ["s_bits", "x_bits", "probability", "empirical"],
        _outcome_rows(ideal, empirical),
        subcommand="pipeline",
        params=params,
        seed=cfg.seed,
    )
    labels = [f"{s},{x}" for s, x, *_ in _outcome_rows(ideal)]
    reports.render_distribution_figure(
        reports.figure_path(dist_path),
        labels,
        ideal.table.reshape(-1),
        empirical.table.reshape(-1),
    )
    summary_path = os.path.join(cfg.out, "pipeline_summary.json")
    reports.write_json(
        summary_path, summary, subcommand="pipeline", params=params, seed=cfg.seed
    )
    return [records_path, dist_path, reports.figure_path(dist_path), summary_path]


_RUNNERS = {
    "sample": _run_sample,
    "decode-bench": _run_decode_bench,
    "msd-plan": _run_msd_plan,
    "msd-sim": _run_msd_sim,
    "route": _run_route,
    "estimate": _run_estimate,
    "pipeline": _run_pipeline,
}

_OVERRIDE_FLAGS = {
    "sample": ["n", "k", "alpha", "shots", "gadget"],
    "decode-bench": ["trials"],
    "msd-plan": ["eps", "n"],
    "msd-sim": ["shots"],
    "route": ["p", "m", "flags"],
    "estimate": ["mode", "n"],
    "pipeline": ["mode", "distance", "runs", "shots"],
}

_FLAG_TYPES = {
    "n": int, "k": int, "alpha": float, "shots": int, "gadget": str,
    "trials": int, "eps": float, "p": int, "m": int, "flags": str,
    "mode": str, "distance": int, "runs": int,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftqs",
        description="Constant-depth graph-state sampling: simulators and bounds.",
    )
    subparsers = parser.add_subparsers(dest="command")
    for name in _RUNNERS:
        sub = subparsers.add_parser(
            name,
            help=f"run the {name} experiment",
            epilog="config keys: " + ", ".join(schema_keys(name)),
        )
        sub.add_argument("--config", help="JSON config file")
        sub.add_argument("--seed", type=int, help="master seed (default 0)")
        sub.add_argument("--threads", type=int, help="worker threads (default 1)")
        sub.add_argument("--out", help="output directory (default .)")
        for key in _OVERRIDE_FLAGS[name]:
            sub.add_argument(
                f"--{key.replace('_', '-')}",
                type=_FLAG_TYPES[key],
                default=None,
                help=f"override the {key} config key",
            )
        if name == "pipeline":
            sub.add_argument(
                "--noiseless",
                action="store_const",
                const=True,
                default=None,
                help="zero out every noise parameter",
            )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(file=sys.stderr)
        return 2
    override_keys = list(_OVERRIDE_FLAGS[args.command])
    if args.command == "pipeline":
        override_keys.append("noiseless")
    overrides = {key: getattr(args, key) for key in override_keys}
    try:
        cfg = resolve(
            args.command,
            config_path=args.config,
            overrides=overrides,
            seed=args.seed,
            threads=args.threads,
            out=args.out,
        )
        os.makedirs(cfg.out, exist_ok=True)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        paths = _RUNNERS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InsufficientSuccesses as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
