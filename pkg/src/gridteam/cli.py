"""Command-line front end.

Subcommands: gen, train, plan, run, eval, serve, oracle. Exit code 0 on
success, 2 on validation errors (bad files, infeasible configs, illegal
arguments).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import datakit
from .datakit import GenConfig
from .episode import HumanPolicy, PolicyKind, run_episode
from .errors import GridTeamError
from .gridworld import View
from .labeler import train as train_labeler
from .planner import brute_force_oracle, plan_baseline, plan_explicable
from . import kernels


def _load_problem_arg(path: str, pid):
    """Accept either a single-problem file or a problem-set file plus --id."""
    doc = datakit._read_json(path)
    if "problems" in doc:
        pset = datakit.problem_set_from_doc(doc)
        if pid is None:
            if len(pset) == 1:
                return pset.items[0]
            raise GridTeamError(f"{path} holds {len(pset)} problems; pick one with --id")
        return pid, pset.get(pid)
    return (pid or Path(path).stem), datakit.problem_from_doc(doc)


def _plan_result_doc(result, mode: str) -> dict:
    return {
        "mode": mode,
        "cost": result.cost,
        "explicability_score": result.explicability_score,
        "nodes_expanded": result.nodes_expanded,
        "plan": [datakit.action_to_doc(a) for a in result.plan],
    }


def cmd_gen(args) -> int:
    config = GenConfig(
        grid_w=args.grid[0],
        grid_h=args.grid[1],
        n_rooms=args.rooms,
        n_visible=args.visible,
        n_hidden=args.hidden,
        alpha=args.alpha,
        require_divergence=args.require_divergence,
    )
    pset = datakit.generate_problem_set(args.seed, args.count, split=args.split, config=config)
    datakit.save_problem_set(pset, args.out)
    print(f"wrote {len(pset)} problems to {args.out}")
    return 0


def cmd_train(args) -> int:
    pset = datakit.load_problem_set(args.problems)
    problems = dict(pset.items)
    traces = [datakit.load_trace(path) for path in args.corpus]
    corpus = datakit.augment(traces, problems, n_per_trace=args.augment, seed=args.augment_seed)
    model = train_labeler(corpus, l2_sigma=args.sigma, max_iter=args.max_iter, tol=args.tol)
    datakit.save_model(model, args.out)
    meta = model.metadata
    print(
        f"trained on {meta['n_sequences']} sequences ({meta['n_positions']} actions), "
        f"{'converged' if meta['converged'] else 'iteration cap'} "
        f"after {meta['iterations']} iterations -> {args.out}"
    )
    return 0


def cmd_plan(args) -> int:
    pid, problem = _load_problem_arg(args.problem, args.id)
    model = datakit.load_model(args.model) if args.model else None
    if args.mode == "explicable":
        if model is None:
            raise GridTeamError("explicable planning needs --model")
        result = plan_explicable(problem, model, node_budget=args.budget)
    else:
        result = plan_baseline(problem, model, node_budget=args.budget)
    doc = _plan_result_doc(result, args.mode)
    doc["problem_id"] = pid
    if args.out:
        Path(args.out).write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    print(json.dumps(doc, sort_keys=True))
    if args.render:
        print(datakit.render_map(problem, view=View.TRUE, plan=result.plan))
    return 0


def cmd_run(args) -> int:
    pid, problem = _load_problem_arg(args.problem, args.id)
    if args.human == "live":
        pset = datakit.ProblemSet(split="LIVE", items=[(pid, problem)])
        from .service import run_service

        trace_id = run_service(
            pset,
            args.traces_dir,
            port=args.port,
            delay_ms=args.delay_ms,
            single_session=True,
        )
        print(f"episode recorded as {trace_id} in {args.traces_dir}")
        return 0
    model = datakit.load_model(args.model) if args.model else None
    trace = run_episode(
        problem,
        HumanPolicy(kind=PolicyKind.GREEDY_SIM, patience=args.patience),
        model=model,
        collect_labels=args.collect_labels,
        problem_ref=pid,
        delay_ms=args.delay_ms,
        tick_budget=args.tick_budget,
    )
    if args.out:
        datakit.save_trace(trace, args.out)
    print(
        f"{trace.outcome.value}: {len(trace.events)} events "
        f"({len(trace.robot_events())} robot moves)"
        + (f" -> {args.out}" if args.out else "")
    )
    if args.render:
        print(datakit.render_map(problem, view=View.TRUE, plan=trace.plan()))
    return 0


def cmd_eval(args) -> int:
    pset = datakit.load_problem_set(args.testset)
    model = datakit.load_model(args.model)
    human_traces = None
    if args.human_traces is not None:
        human_traces = [datakit.load_trace(path) for path in args.human_traces]
    report = datakit.evaluate(pset, model, human_traces=human_traces, node_budget=args.budget)
    if args.out:
        datakit.save_report(report, args.out)
    print(report.to_text())
    return 0


def cmd_serve(args) -> int:
    pset = datakit.load_problem_set(args.problems)
    from .service import run_service

    run_service(
        pset,
        args.traces_dir,
        host=args.host,
        port=args.port,
        delay_ms=args.delay_ms,
        timeout_s=args.timeout,
    )
    return 0


def cmd_oracle(args) -> int:
    pid, problem = _load_problem_arg(args.problem, args.id)
    model = datakit.load_model(args.model)
    result = brute_force_oracle(problem, model, args.max_len)
    doc = _plan_result_doc(result, "oracle")
    doc["problem_id"] = pid
    doc["objective"] = result.cost + problem.alpha * (1.0 - result.explicability_score) * result.cost
    if args.out:
        Path(args.out).write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    print(json.dumps(doc, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridteam",
        description="Explicability-aware planning for a human-robot grid team "
        f"(kernel backend: {kernels.BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a seeded problem set")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--split", choices=["TRAIN", "TEST"], default="TRAIN")
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=int, nargs=2, default=[10, 10], metavar=("W", "H"))
    p.add_argument("--rooms", type=int, default=4)
    p.add_argument("--visible", type=int, default=None, help="visible obstacle count (default: random 2-5)")
    p.add_argument("--hidden", type=int, default=2)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--require-divergence", action="store_true",
                   help="only keep maps where hidden obstacles change some shortest path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the labeler from judged traces")
    p.add_argument("--corpus", nargs="+", required=True, help="trace files (.jsonl)")
    p.add_argument("--problems", required=True, help="problem set the traces refer to")
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float, default=10.0)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--augment", type=int, default=0, help="room permutations per trace")
    p.add_argument("--augment-seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("plan", help="plan one problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--id", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--mode", choices=["explicable", "baseline"], default="explicable")
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--out", default=None)
    p.add_argument("--render", action="store_true")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="run one episode (simulated or live human)")
    p.add_argument("--problem", required=True)
    p.add_argument("--id", default=None)
    p.add_argument("--human", choices=["sim", "live"], default="sim")
    p.add_argument("--collect-labels", action="store_true")
    p.add_argument("--model", default=None, help="judge robot actions with this model instead of the path rule")
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--delay-ms", type=int, default=0)
    p.add_argument("--tick-budget", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--render", action="store_true")
    p.add_argument("--port", type=int, default=8765, help="live mode: port to serve on")
    p.add_argument("--traces-dir", default="traces", help="live mode: trace directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="explicability-ratio report on a test set")
    p.add_argument("--testset", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--human-traces", nargs="*", default=None)
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="host live episodes over WebSocket")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--problems", required=True)
    p.add_argument("--traces-dir", default="traces")
    p.add_argument("--delay-ms", type=int, default=1000)
    p.add_argument("--timeout", type=float, default=120.0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("oracle", help="exhaustive argmin on a small problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--id", default=None)
    p.add_argument("--model", required=True)
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GridTeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
