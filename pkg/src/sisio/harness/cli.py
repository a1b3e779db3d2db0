"""Command-line entry point.

Exit codes: 0 success, 2 containment violation, 1 any error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import SisioError
from .certify import certify
from .config import load_config
from .simulate import simulate_config
from .trace import read_truth_csv, run_observer, to_jsonable, write_trace_csv, write_truth_csv

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2

log = logging.getLogger("sisio")


def _noise(args) -> str | None:
    return "extremal" if args.extremal_noise else None


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    truth = simulate_config(cfg, seed=args.seed, steps=args.steps, noise=_noise(args))
    write_truth_csv(args.out, truth)
    if truth.left_domain:
        log.warning("true trajectory left the model domain at step %d", truth.first_exit)
    return EXIT_OK


def cmd_observe(args) -> int:
    cfg = load_config(args.config)
    m = cfg.model
    truth = read_truth_csv(args.truth, m.n, m.p, m.l, m.m)
    pair = run_observer(m, cfg.x0, truth)
    write_trace_csv(args.out, pair)
    s = pair.summary
    print(f"containment_rate={s['containment_rate']!r} violations={s['violations']}")
    return EXIT_OK if s["violations"] == 0 else EXIT_VIOLATION


_WORKER_CFG = None


def _worker_init(raw_source: str):
    global _WORKER_CFG
    _WORKER_CFG = load_config(raw_source)


def _run_seed(job):
    seed, steps, noise, out_dir = job
    cfg = _WORKER_CFG
    truth = simulate_config(cfg, seed=seed, steps=steps, noise=noise)
    pair = run_observer(cfg.model, cfg.x0, truth)
    write_trace_csv(Path(out_dir) / f"trace_seed{seed}.csv", pair)
    return seed, pair.summary


def cmd_run(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = load_config(args.config)
    base = cfg.scenario.seed if args.first_seed is None else args.first_seed
    jobs = [(base + i, args.steps, _noise(args), str(out)) for i in range(args.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs, initializer=_worker_init, initargs=(args.config,)) as ex:
            results = list(ex.map(_run_seed, jobs))
    else:
        global _WORKER_CFG
        _WORKER_CFG = cfg
        results = [_run_seed(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    per_seed = [s for _, s in results]
    total_steps = sum(s["steps"] for s in per_seed)
    total_viol = sum(s["violations"] for s in per_seed)
    summary = {
        "config": str(args.config),
        "noise": _noise(args) or cfg.scenario.noise,
        "seeds": [seed for seed, _ in results],
        "total_steps": total_steps,
        "total_violations": total_viol,
        "containment_rate": (total_steps - total_viol) / total_steps if total_steps else None,
        "runs": per_seed,
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(to_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"containment_rate={summary['containment_rate']!r} violations={total_viol}")
    return EXIT_OK if total_viol == 0 else EXIT_VIOLATION


def cmd_certify(args) -> int:
    cfg = load_config(args.config)
    report = certify(cfg.model, cfg.x0.hi - cfg.x0.lo)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for c in report["certificates"]:
        proof = c["proof_mode_verdict"]
        suffix = f" (proof mode: {proof})" if proof else ""
        print(f"condition {c['condition']}: {c['verdict']}{suffix}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="config JSON path or builtin name")
    common.add_argument("--extremal-noise", action="store_true", help="sample noise at bound vertices only")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sisio", description="Interval observer for state and unknown input")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate a truth trace")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("observe", parents=[common], help="run the observer on a truth CSV")
    o.add_argument("--truth", required=True)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_observe)

    r = sub.add_parser("run", parents=[common], help="simulate and observe several seeds")
    r.add_argument("--seeds", type=int, required=True, help="number of seeds")
    r.add_argument("--first-seed", type=int, default=None, help="defaults to the config seed")
    r.add_argument("--steps", type=int, default=None)
    r.add_argument("--jobs", type=int, default=1, help="worker processes")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("certify", parents=[common], help="write the stability report")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_certify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (SisioError, OSError, KeyError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
