"""Command-line experiment runner: `sublevel run | escape | verify`."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from rich.console import Console
from rich.table import Table

from sublevel import logs
from sublevel.config import ExperimentConfig, ProblemConfig, load_config, parse_size
from sublevel.dataio import (
    Dataset,
    RunArtifact,
    emit_convergence_svg,
    load_libsvm,
    standardize,
    write_summary_json,
    write_trace_csv,
)
from sublevel.diagnostics import escape_rate, escape_threshold, newton_reference, run_probes
from sublevel.errors import ConfigError, SublevelError
from sublevel.optimizers import MethodConfig, run
from sublevel.problems import GLMObjective, SyntheticSpec, generate_synthetic, make_objective
from sublevel.profiler import PhaseTimer
from sublevel.version import __version__

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_CONVENTIONS = {"logistic": "binary", "svm": "binary", "nls": "unit", "loglinear": "raw"}

log = logs.get_logger(__name__)


@dataclass(slots=True, frozen=True)
class Problem:
    objective: GLMObjective
    dataset: Dataset
    probe: Optional[np.ndarray] = None


def _synthetic_labels(kind: str, distribution: str, labels: np.ndarray) -> np.ndarray:
    if distribution == "gaussian" and kind == "nls":
        return (labels + 1.0) / 2.0
    return labels


def prepare_problem(cfg: ProblemConfig) -> Problem:
    """Loads or generates the data and builds the objective.

    Synthetic saddle data is never standardized, since that would move the
    saddle away from the probe point.
    """

    probe = None
    convention = cfg.label_convention or _CONVENTIONS[cfg.kind]
    if cfg.synthetic:
        try:
            spec = SyntheticSpec(m=cfg.m, n=cfg.n, distribution=cfg.distribution, seed=cfg.data_seed,
                                 width=cfg.width, depth=cfg.depth, informative=cfg.informative,
                                 escape_size=cfg.escape_size, offset=cfg.offset)
        except ValueError as exc:
            raise ConfigError("distribution", str(exc).rstrip("."), "problem") from None
        data = generate_synthetic(spec)
        probe = data.probe
        dataset = Dataset(
            features=data.features,
            labels=_synthetic_labels(cfg.kind, cfg.distribution, np.array(data.labels)),
            name=f"synthetic-{cfg.distribution}",
            source=f"synthetic:m={cfg.m},n={cfg.n},seed={cfg.data_seed}",
            label_map=convention,
        )
    else:
        dataset = load_libsvm(cfg.source, label_convention=convention)
    if cfg.standardize and cfg.distribution != "saddle":
        dataset = standardize(dataset)
    objective = make_objective(cfg.kind, dataset.features, dataset.labels, reg=cfg.reg,
                               dense_cap=cfg.dense_cap)
    return Problem(objective, dataset, probe)


def initial_point(cfg: ExperimentConfig, problem: Problem) -> np.ndarray:
    n = problem.objective.dim
    match cfg.budget.x0:
        case "gaussian":
            return np.random.default_rng(cfg.budget.x0_seed).standard_normal(n)
        case "probe":
            if problem.probe is None:
                raise ConfigError("x0", "'probe' needs [problem] distribution = saddle", "budget")
            return np.array(problem.probe)
    return np.zeros(n)


def _method_configs(cfg: ExperimentConfig, problem: Problem) -> list[MethodConfig]:
    n, m = problem.objective.dim, problem.objective.samples
    configs = []
    for spec in cfg.methods:
        method = spec.build(n, m, seed=cfg.budget.seed, max_iters=cfg.budget.max_iters)
        try:
            method.check_dimensions(n, m)
        except ConfigError as exc:
            raise ConfigError(exc.field, str(exc).split(": ", 1)[-1], spec.section) from None
        configs.append(method)
    return configs


def _reference_value(problem: Problem, x0: np.ndarray) -> Optional[float]:
    obj = problem.objective
    if not obj.dense_hessian_ok:
        return None
    method = "cubic" if obj.kind == "nls" else "newton"
    return newton_reference(obj, x0, method=method).final.f


def _summary_table(title: str, artifacts: Sequence[RunArtifact]) -> Table:
    table = Table(title=title)
    for column in ("method", "status", "iterations", "final f", "final ||g||", "seconds"):
        table.add_column(column, justify="left" if column in ("method", "status") else "right")
    for artifact in artifacts:
        summary = artifact.trace.summary()
        table.add_row(artifact.method, summary.status, str(summary.iterations),
                      f"{summary.final_f:.10e}", f"{summary.final_grad_norm:.3e}",
                      f"{summary.total_seconds:.3f}")
    return table


def cmd_run(cfg: ExperimentConfig, console: Console, profile: bool = False) -> int:
    """Runs every configured method on the problem and writes one artifact per method."""

    if not cfg.methods:
        raise ConfigError("method", "no [method.<label>] sections")
    problem = prepare_problem(cfg.problem)
    x0 = initial_point(cfg, problem)
    methods = _method_configs(cfg, problem)

    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(cfg.snapshot(), encoding="utf-8")

    artifacts: list[RunArtifact] = []
    failed = False
    try:
        for method in methods:
            log.info("running %s", method.name)
            trace = run(problem.objective, x0, method, max_seconds=cfg.budget.max_seconds)
            if cfg.output.timing == "off":
                for record in trace.records:
                    record.elapsed_s = 0.0
            metadata = {"problem": problem.dataset.metadata(), "x0": cfg.budget.x0,
                        "master_seed": cfg.budget.seed}
            artifacts.append(RunArtifact(asdict(method), trace, metadata))

        f_star = _reference_value(problem, x0)
        best = min(float(np.min(a.trace.column("f"))) for a in artifacts)
        f_star = best if f_star is None else min(f_star, best)
        for artifact in artifacts:
            artifact.metadata["f_star"] = f_star

        if cfg.output.plot:
            clamped = emit_convergence_svg(artifacts, out / "convergence.svg", x=cfg.output.x_axis,
                                           y=cfg.output.y_axis, log_y=cfg.output.log_y,
                                           title=problem.dataset.name)
            for artifact in artifacts:
                artifact.metadata["log_clamped"] = clamped
    except (SublevelError, OSError) as exc:
        console.print(f"[red]runtime failure:[/red] {exc}")
        failed = True
    finally:
        for artifact in artifacts:
            write_trace_csv(artifact, out / f"{artifact.method}.csv")
            write_summary_json(artifact, out / f"{artifact.method}.json")

    console.print(_summary_table(f"{problem.dataset.name} ({problem.objective.kind})", artifacts))
    if profile:
        PhaseTimer.summarize(console=console)
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_escape(cfg: ExperimentConfig, console: Console, threads: int = 1) -> int:
    """Escape probabilities of the swept method, plus every other method as a baseline."""

    esc = cfg.escape
    if esc.method is None or not esc.values:
        raise ConfigError("method", "escape mode needs 'method' and 'values'", "escape")
    swept = cfg.method(esc.method)
    problem = prepare_problem(cfg.problem)
    obj = problem.objective
    x0 = initial_point(cfg, problem)
    n, m = obj.dim, obj.samples

    rows: list[tuple[str, str, int, MethodConfig]] = []
    for text in esc.values:
        value = parse_size(text, n, m, esc.sweep)
        method = swept.build(n, m, seed=cfg.budget.seed, max_iters=cfg.budget.max_iters,
                             **{esc.sweep: str(value)})
        method.check_dimensions(n, m)
        rows.append((swept.label, text, value, method))
    for spec in cfg.methods:
        if spec.label != swept.label:
            method = spec.build(n, m, seed=cfg.budget.seed, max_iters=cfg.budget.max_iters)
            method.check_dimensions(n, m)
            rows.append((spec.label, "-", 0, method))

    threshold = esc.threshold
    if threshold is None:
        reference = newton_reference(obj, x0, method="cubic", max_iters=esc.reference_iters)
        threshold = escape_threshold(obj.value(x0), reference.final.f)
    log.info("escape threshold %.6e", threshold)

    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(cfg.snapshot(), encoding="utf-8")

    table = Table(title=f"escape rate over {esc.trials} trials (threshold {threshold:.3e})")
    for column in ("method", esc.sweep, "value", "probability", "successes"):
        table.add_column(column, justify="left" if column == "method" else "right")
    with (out / "escape.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["method", "sweep", "value", "probability", "successes", "trials", "threshold"])
        for label, text, value, method in rows:
            result = escape_rate(obj, x0, method, esc.trials, cfg.budget.seed, threshold, threads)
            writer.writerow([label, text, value, f"{result.probability:.6f}", result.successes,
                             result.trials, f"{threshold:.17g}"])
            table.add_row(label, text, str(value), f"{result.probability:.0%}", str(result.successes))
    console.print(table)
    return EXIT_OK


def cmd_verify(console: Console, as_json: bool = False, seed: int = 0) -> int:
    """Runs the convergence-theory probes; exits 1 naming every failing inequality."""

    results = run_probes(seed)
    if as_json:
        print(json.dumps([r.to_dict() for r in results], indent=2, allow_nan=True))
    else:
        table = Table(title="sublevel verify")
        table.add_column("probe")
        table.add_column("checks", justify="right")
        table.add_column("result")
        for result in results:
            verdict = "[green]pass[/green]" if result.passed else "[red]FAIL[/red]"
            table.add_row(result.name, str(len(result.checks)), verdict)
        console.print(table)
        for result in results:
            if result.error:
                console.print(f"[red]{result.name}[/red]: {result.error}")
            for check in result.failures():
                console.print(f"[red]{result.name}[/red]: {check.describe()}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sublevel", description="Multilevel low-rank Newton experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (("run", "run every configured method"),
                       ("escape", "estimate saddle escape probabilities")):
        command = sub.add_parser(name, help=text)
        command.add_argument("--config", required=True, help="experiment INI file")
        command.add_argument("--out", help="output directory (overrides [output] dir)")
        command.add_argument("--seed", type=int, help="master seed (overrides [budget] seed)")
        command.add_argument("--threads", type=int, default=1, help="worker threads for escape trials")
        if name == "run":
            command.add_argument("--profile", action="store_true", help="print the phase profile")

    verify = sub.add_parser("verify", help="check the convergence theory on built-in problems")
    verify.add_argument("--json", action="store_true", help="print machine-readable results")
    verify.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    console = Console()
    logs.configure("INFO" if args.verbose else None)

    if args.command == "verify":
        return cmd_verify(console, as_json=args.json, seed=args.seed)

    try:
        cfg = load_config(args.config).with_overrides(out=args.out, seed=args.seed)
        if args.command == "run":
            return cmd_run(cfg, console, profile=args.profile)
        return cmd_escape(cfg, console, threads=args.threads)
    except ConfigError as exc:
        console.print(f"[red]config error:[/red] {exc}")
        return EXIT_CONFIG
    except (SublevelError, OSError) as exc:
        console.print(f"[red]runtime failure:[/red] {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
