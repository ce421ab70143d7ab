"""Batch command-line front end.

Reads one JSON configuration naming a command (solve, multistart, diameter,
certify, ouq), runs the corresponding pipeline, and writes a report plus a
monitor log -- and, unless disabled, rendered figures -- into the output
directory.  Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, parse_config
from .core import CountedFunction, EvaluationError, SuretyError
from .constraints import PenaltySpec, build_penalty, parse_constraints
from .maps import build_map
from .models import get_model
from .monitors import Monitor, format_value, write_log
from .multistart import run_multistart
from .solvers import make_solver
from .uq import GlobalSearchSpec, OUQProblem, diameter, ouq_solve, run_certification


class ExternalModel:
    """Objective evaluated by spawning an external program per call.

    Wire protocol: the parameters go to stdin as one line of decimal text;
    the program answers with a single decimal energy on one line.
    """

    def __init__(self, argv, timeout=30.0):
        self.argv = list(argv)
        self.timeout = float(timeout)

    def __call__(self, x):
        line = " ".join(format_value(v) for v in np.asarray(x, dtype=float))
        try:
            proc = subprocess.run(self.argv, input=line + "\n", text=True,
                                  capture_output=True, timeout=self.timeout)
        except subprocess.TimeoutExpired:
            raise EvaluationError(
                f"external model timed out after {self.timeout}s") from None
        except OSError as exc:
            raise EvaluationError(f"cannot spawn external model: {exc}") from exc
        if proc.returncode != 0:
            raise EvaluationError(
                f"external model exited with status {proc.returncode}: "
                f"{proc.stderr.strip()[:200]}")
        lines = [ln.strip() for ln in proc.stdout.splitlines() if ln.strip()]
        if not lines:
            raise EvaluationError("external model produced no output")
        try:
            return float(lines[0])
        except ValueError:
            raise EvaluationError(
                f"external model protocol violation: expected a decimal "
                f"energy, got {lines[0]!r}") from None


def build_model(cfg):
    if cfg.model.program is not None:
        return ExternalModel(cfg.model.program, cfg.model.timeout)
    return get_model(cfg.model.name)


def model_label(cfg):
    if cfg.model.program is not None:
        return " ".join(cfg.model.program)
    return cfg.model.name


def _solution_list(x):
    return [float(v) for v in x]


def build_solver(cfg, seed=None):
    spec = cfg.solver
    seed = cfg.seed if seed is None else seed
    params = {}
    if spec.algorithm == "differential-evolution":
        params = dict(pop_size=spec.pop_size, weight=spec.weight,
                      crossover=spec.crossover, variant=spec.variant)
    solver = make_solver(spec.algorithm, cfg.dim, seed=seed, **params)
    if spec.x0 is not None:
        if getattr(solver, "pop_size", 0) > 1:
            if cfg.box is None:
                raise ConfigError("population solvers need a 'box' to scatter "
                                  "members around x0")
            rest = cfg.box.sample(solver.rng, solver.pop_size - 1)
            solver.set_initial_points(np.vstack([np.asarray(spec.x0, float)] + rest))
        else:
            solver.set_initial_points(spec.x0)
    else:
        solver.set_random_initial_points(cfg.box)
    if cfg.box is not None:
        solver.set_strict_ranges(cfg.box)
    if cfg.constraints:
        program = parse_constraints(cfg.constraints, cfg.dim)
        solver.set_constraints(program)
        if cfg.penalty or program.soft:
            pen = cfg.penalty or {}
            solver.set_penalty(build_penalty(program, PenaltySpec(**pen)))
    if spec.evaluation_limit is not None:
        solver.set_evaluation_limit(spec.evaluation_limit)
    solver.set_evaluation_map(build_map(cfg.map_strategy, cfg.map_workers))
    return solver


def _search_spec(cfg):
    s = cfg.search
    return GlobalSearchSpec(pop_size=s.pop_size, tolerance=s.tolerance,
                            window=s.window, restarts=s.restarts,
                            max_generations=s.max_generations, seed=cfg.seed)


def run_command(cfg, out_dir):
    """Execute the configured command; returns the report dictionary and the
    list of files written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "schema": 1,
        "command": cfg.command,
        "model": model_label(cfg),
        "dim": cfg.dim,
        "seed": cfg.seed,
    }
    files = []
    runner = _RUNNERS[cfg.command]
    result, artifacts = runner(cfg, out)
    report["result"] = result
    files.extend(artifacts)

    report_path = out / "report.json"
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    files.append(str(report_path))
    return report, files


def _run_solve(cfg, out):
    model = build_model(cfg)
    counted = CountedFunction(model, cfg.dim)
    solver = build_solver(cfg)
    gen_monitor = Monitor()
    solver.set_generation_monitor(gen_monitor)
    solver.solve(counted, cfg.termination)

    log_path = out / "log.csv"
    write_log(log_path, gen_monitor.indices, gen_monitor.energies, gen_monitor.points)
    files = [str(log_path)]
    if cfg.plots:
        from . import plotting
        files.append(plotting.save_convergence(
            out / "convergence.png", gen_monitor.indices, gen_monitor.energies))
    result = {
        "best_solution": _solution_list(solver.best_solution),
        "best_energy": float(solver.best_energy),
        "generations": solver.generations,
        "evaluations": solver.evaluations,
        "model_evaluations": counted.evaluations,
    }
    return result, files


def _run_multistart(cfg, out):
    model = build_model(cfg)
    counted = CountedFunction(model, cfg.dim)
    ms = cfg.multistart
    outcome = run_multistart(
        counted, cfg.box, n_starts=ms.n_starts, kind=ms.kind, inner=ms.inner,
        evaluation_limit=ms.evaluation_limit, termination=cfg.termination,
        solver_map=build_map(cfg.map_strategy, cfg.map_workers),
        seed=cfg.seed, cluster_radius=ms.cluster_radius)

    indices = list(range(len(outcome.results)))
    energies = [r.energy for r in outcome.results]
    points = [r.solution if r.solution is not None else r.start
              for r in outcome.results]
    log_path = out / "log.csv"
    write_log(log_path, indices, energies, points)
    files = [str(log_path)]
    if cfg.plots:
        from . import plotting
        files.append(plotting.save_multistart(out / "multistart.png", energies))
    result = {
        "best_solution": _solution_list(outcome.best_solution),
        "best_energy": float(outcome.best_energy),
        "evaluations": outcome.evaluations,
        "cluster_radius": outcome.cluster_radius,
        "distinct_minima": [_solution_list(m) for m in outcome.distinct_minima],
        "starts": [
            {
                "start": _solution_list(r.start),
                "solution": None if r.solution is None else _solution_list(r.solution),
                "energy": float(r.energy),
                "evaluations": r.evaluations,
                "error": r.error,
            }
            for r in outcome.results
        ],
    }
    return result, files


def _run_diameter(cfg, out):
    model = build_model(cfg)
    counted = CountedFunction(model, cfg.dim)
    oscs, total = diameter(counted, cfg.box, spec=_search_spec(cfg),
                           solver_map=build_map(cfg.map_strategy, cfg.map_workers))
    files = []
    if cfg.plots:
        from . import plotting
        files.append(plotting.save_subdiameters(out / "subdiameters.png", oscs))
    result = {
        "suboscillations": [float(o) for o in oscs],
        "diameter": float(total),
        "evaluations": counted.evaluations,
    }
    return result, files


def _run_certify(cfg, out):
    model = build_model(cfg)
    report = run_certification(
        model, cfg.box, cfg.certify.threshold, cfg.certify.pof_tolerance,
        mean=cfg.certify.mean, spec=_search_spec(cfg),
        solver_map=build_map(cfg.map_strategy, cfg.map_workers))
    files = []
    if cfg.plots:
        from . import plotting
        files.append(plotting.save_subdiameters(
            out / "subdiameters.png", report.suboscillations))
    return report.as_dict(), files


def _run_ouq(cfg, out):
    model = build_model(cfg)
    counted = CountedFunction(model, cfg.dim)
    problem = OUQProblem(
        model=counted, box=cfg.box, npts=cfg.ouq.npts,
        mean_target=cfg.ouq.mean_target, mean_error=cfg.ouq.mean_error,
        direction=cfg.ouq.direction,
        failure_threshold=cfg.ouq.failure_threshold,
        failure_direction=cfg.ouq.failure_direction)
    outcome = ouq_solve(problem, _search_spec(cfg))
    files = []
    if cfg.plots:
        from . import plotting
        files.append(plotting.save_measure(out / "witness.png", outcome.witness))
    result = {
        "bound": outcome.bound,
        "direction": outcome.direction,
        "solver_evaluations": outcome.evaluations,
        "model_evaluations": counted.evaluations,
        "witness": [
            {
                "positions": [float(p) for p in m.positions],
                "weights": [float(w) for w in m.weights],
            }
            for m in outcome.witness.marginals
        ],
    }
    return result, files


_RUNNERS = {
    "solve": _run_solve,
    "multistart": _run_multistart,
    "diameter": _run_diameter,
    "certify": _run_certify,
    "ouq": _run_ouq,
}


def _summarize(report):
    result = report["result"]
    lines = [f"command: {report['command']} (model {report['model']}, "
             f"seed {report['seed']})"]
    if "best_energy" in result:
        lines.append(f"best energy: {result['best_energy']}")
    if "best_solution" in result:
        lines.append(f"best solution: {result['best_solution']}")
    if "diameter" in result:
        lines.append(f"diameter: {result['diameter']} "
                     f"(suboscillations {result['suboscillations']})")
    if "certified" in result:
        lines.append(f"certified: {result['certified']} "
                     f"(confidence factor {result['confidence_factor']}, "
                     f"bound {result['mcdiarmid_bound']})")
    if "bound" in result:
        lines.append(f"optimal pof bound ({result['direction']}): {result['bound']}")
    if "distinct_minima" in result:
        lines.append(f"distinct minima: {result['distinct_minima']}")
    return "\n".join(lines)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="surety",
        description="Run certification-style uncertainty studies from a "
                    "JSON configuration.")
    parser.add_argument("--config", required=True, help="path to the run configuration")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured random seed")
    parser.add_argument("--workers", type=int, default=None,
                        help="override the configured map worker count")
    parser.add_argument("--out", default=".", help="output directory (default: .)")
    parser.add_argument("--plots", action=argparse.BooleanOptionalAction,
                        default=None, help="render figures next to the report")
    parser.add_argument("--version", action="version", version=__version__)
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.workers is not None:
            cfg.map_workers = args.workers
        if args.plots is not None:
            cfg.plots = args.plots
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        report, files = run_command(cfg, args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SuretyError as exc:
        print(f"error running {cfg.command}: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"unexpected error running {cfg.command}: {exc}", file=sys.stderr)
        return 3

    print(_summarize(report))
    for path in files:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
