"""Command line entry point.

    deltaconsensus run --config CFG [--out DIR] [--only simulate|bounds|montecarlo]
    deltaconsensus acceptance [--criterion N] [--seed S] [--out DIR]

``--out`` defaults to ``$DELTACONSENSUS_OUT`` and then ``./out``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import rng
from .analysis import bound_corollary1, bound_theorem4, bound_theorem5
from .config import ANALYSES, ConfigError, ExperimentConfig, hypothesis_failures, load_config
from .errors import ConsensusError
from .switching import simulate
from .verify import run_monte_carlo, summarize, predicted_value

log = logging.getLogger("deltaconsensus")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _bounds(cfg: ExperimentConfig) -> list:
    e, s = cfg.ensemble, cfg.scheme
    reports = [bound_theorem4(e, s, cfg.x0)]
    if e.scenario is not None and not s.continuous_limit and s.k_bar == 1:
        fn = bound_theorem5 if e.scenario.kind == "receive" else bound_corollary1
        reports.append(fn(e, s, cfg.x0))
    return reports


def run_experiment(cfg: ExperimentConfig, out: Path, only=None) -> int:
    """Emit trajectory CSV, bound and ensemble JSON reports and a summary."""
    analyses = cfg.analyses if only is None else (only,)
    out.mkdir(parents=True, exist_ok=True)
    provenance = {"config_digest": cfg.digest, "seed": cfg.seed}
    lines = [f"config digest {cfg.digest}", f"seed {cfg.seed}", f"scheme {cfg.scheme.to_dict()}"]
    failures = hypothesis_failures(cfg)
    if failures:
        for f in failures:
            log.error("hypothesis violated: %s", f)
        lines += [f"HYPOTHESIS FAILED {f}" for f in failures]
        (out / "summary.txt").write_text("\n".join(lines) + "\n")
        return EXIT_FAIL
    status = EXIT_OK

    if "simulate" in analyses:
        key = rng.run_key(cfg.seed, 0)
        traj = simulate(cfg.ensemble, cfg.scheme, cfg.x0, cfg.horizon, seed=key)
        with open(out / "trajectory.csv", "w", newline="") as fh:
            traj.to_csv(fh)
        lines.append(f"trajectory: {len(traj.times)} rows, terminal state {traj.final.tolist()}")

    if "bounds" in analyses:
        reports = _bounds(cfg)
        doc = dict(provenance, reports=[r.to_dict() for r in reports])
        (out / "bounds.json").write_text(_dump(doc))
        for r in reports:
            verdict = "sound" if r.sound else "VIOLATED"
            lines.append(
                f"{r.theorem}: bound_e={r.bound_e:.6g} measured_e={r.measured_e:.6g} ({verdict}); "
                f"bound_state={r.bound_state:.6g} measured_state={r.measured_state:.6g}"
            )
            if r.bound_e_statement is not None:
                lines.append(f"{r.theorem}: statement-variant bound_e={r.bound_e_statement:.6g}")
            if not r.sound:
                status = EXIT_FAIL

    if "montecarlo" in analyses:
        runs = run_monte_carlo(cfg.ensemble, cfg.scheme, cfg.x0, cfg.n_runs, cfg.horizon, cfg.seed,
                               workers=cfg.workers)
        stats = summarize(runs, predicted=predicted_value(cfg.ensemble, cfg.scheme, cfg.x0),
                          epsilons=cfg.epsilons, terminal_gap=cfg.terminal_gap)
        doc = dict(provenance, stats=stats.to_dict())
        (out / "montecarlo.json").write_text(_dump(doc))
        (out / "gaps.csv").write_text(stats.gap_csv())
        lines.append(
            f"monte carlo: predicted {stats.predicted:.6g}, empirical mean {stats.mean_state.mean():.6g}, "
            f"max |z| {stats.z_scores.max():.3g}, monotone runs {int(stats.per_run_monotone.sum())}/{stats.n_runs}, "
            f"terminal gap < {cfg.terminal_gap:g} in {stats.terminal_below_threshold:.1%}"
        )
        if not stats.all_monotone:
            status = EXIT_FAIL

    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return status


def _out_dir(arg) -> Path:
    return Path(arg or os.environ.get("DELTACONSENSUS_OUT", "out"))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="deltaconsensus", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out")
    p_run.add_argument("--only", choices=ANALYSES)
    p_acc = sub.add_parser("acceptance", help="evaluate exit criteria and write JSON reports")
    p_acc.add_argument("--criterion", type=int, action="append")
    p_acc.add_argument("--seed", type=int)
    p_acc.add_argument("--out")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "acceptance":
        from . import acceptance

        return acceptance.main(args.criterion, args.seed, _out_dir(args.out))

    try:
        cfg = load_config(args.config)
    except (ConfigError, ConsensusError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(args.out)
    try:
        status = run_experiment(cfg, out, args.only)
    except ConsensusError as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print((out / "summary.txt").read_text(), end="")
    return status


if __name__ == "__main__":
    sys.exit(main())
