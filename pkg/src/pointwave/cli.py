"""Command-line scenario runner.

    pointwave simulate <config> [--out DIR]
    pointwave compare  <config> [--out DIR]
    pointwave identities [--seed N] [--cases K] [--out DIR]

Exit codes: 0 success, 2 invalid config or arguments, 3 horizon violation,
4 oracle instability, 5 a checked threshold failed.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .csvio import write_columns, write_rows
from .fdtd import GridSpec, OracleInstability, run_probes, write_energy_csv, write_probe_csv
from .identities import TOLERANCE, run_suite
from .models import SolutionBundle, solve
from .scenario import ConfigError, Scenario, load_scenario
from .signal import InsufficientHorizon

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HORIZON = 3
EXIT_INSTABILITY = 4
EXIT_THRESHOLD = 5


class HorizonViolation(ValueError):
    pass


def _out_dir(scenario: Scenario, override: str | None) -> Path:
    return Path(override if override is not None else scenario.output)


def snapshot_name(t: float) -> str:
    return f"snapshot_{t:g}.csv"


def _snapshot_window(s: Scenario) -> tuple[float, float]:
    if s.snapshot_window is not None:
        return s.snapshot_window
    d = s.initial_data()
    pts = [s.model.x_a, s.model.x_b, *s.probes, *d.breakpoints]
    return min(pts) - 1.0, max(pts) + 1.0


def cmd_simulate(scenario: Scenario, out: str | None = None, bundle: SolutionBundle | None = None) -> int:
    """Write traces, probe series and snapshots from the semi-analytic solution."""
    H = scenario.horizon
    late = [t for t in scenario.snapshots if t > H]
    if late:
        raise HorizonViolation(f"snapshot time {late[0]:g} exceeds horizon {H:g}")
    cfg = scenario.model
    if bundle is None:
        bundle = solve(scenario.initial_data(), cfg, H)
    folder = _out_dir(scenario, out)
    t = np.linspace(0.0, H, scenario.samples)

    header, cols = ["t", "Q_a", "Q_b"], [t, bundle.trace_a.eval(t), bundle.trace_b.eval(t)]
    if cfg.coupling_a.present:
        header.append("F_a")
        cols.append(bundle.forces.F_a.eval(t))
    if cfg.coupling_b.present:
        header.append("F_b")
        cols.append(bundle.forces.F_b.eval(t))
    write_columns(folder / "traces.csv", header, cols)

    if scenario.probes:
        header = ["t"] + [f"probe_{k + 1}" for k in range(len(scenario.probes))]
        cols = [t] + [np.asarray(bundle.field(t, np.full_like(t, x))) for x in scenario.probes]
        write_columns(folder / "field_probes.csv", header, cols)
        write_rows(folder / "probes.csv", ["probe", "x"], [(k + 1, x) for k, x in enumerate(scenario.probes)])

    if scenario.snapshots:
        lo, hi = _snapshot_window(scenario)
        x = np.linspace(lo, hi, scenario.samples)
        for ts in scenario.snapshots:
            u = np.asarray(bundle.field(np.full_like(x, ts), x))
            write_columns(folder / snapshot_name(ts), ["x", "u"], [x, u])
    return EXIT_OK


@dataclass(frozen=True)
class LevelResult:
    level: int
    n_cells: int
    probe_x: np.ndarray
    linf: np.ndarray
    l2: np.ndarray
    linf_rel: float
    energy_drift: float


def compare_levels(scenario: Scenario, bundle: SolutionBundle, folder: Path | None = None) -> list[LevelResult]:
    cfg, d, H = scenario.model, scenario.initial_data(), scenario.horizon
    results = []
    for level, n in enumerate(scenario.oracle.n_cells):
        try:
            spec = GridSpec.build(cfg, H, n, scenario.probes, scenario.oracle.courant)
        except ValueError as exc:
            raise ConfigError(f"oracle.n_cells[{level}]", str(exc)) from None
        try:
            run = run_probes(d, cfg, spec, scenario.probes)
        except ValueError as exc:
            raise ConfigError(f"oracle.n_cells[{level}]", str(exc)) from None
        exact = np.stack([np.asarray(bundle.field(run.t, np.full_like(run.t, x))) for x in run.probe_x], axis=1)
        err = run.values - exact
        linf = np.max(np.abs(err), axis=0)
        l2 = np.sqrt(np.mean(err**2, axis=0))
        ref = float(np.max(np.abs(exact)))
        rel = float(np.max(linf)) / ref if ref > 0 else float(np.max(linf))
        results.append(LevelResult(level, n, run.probe_x, linf, l2, rel, run.energy_drift()))
        if folder is not None:
            write_probe_csv(folder / f"fdtd_probes_{n}.csv", run)
            write_energy_csv(folder / f"fdtd_energy_{n}.csv", run)
    return results


def observed_orders(results: list[LevelResult]) -> list[float]:
    out = []
    for a, b in zip(results, results[1:]):
        if a.linf_rel > 0 and b.linf_rel > 0:
            out.append(math.log(a.linf_rel / b.linf_rel) / math.log(b.n_cells / a.n_cells))
        else:
            out.append(math.inf)
    return out


def compare_checks(scenario: Scenario, results: list[LevelResult]) -> list[tuple[str, bool, str]]:
    """``(name, passed, detail)`` for every threshold the scenario asks for.

    Error and energy tolerances apply to levels with at least
    ``threshold_cells`` cells (the finest level if none qualifies); the
    refinement trend and observed order use every level.
    """
    o = scenario.oracle
    checked = [r for r in results if r.n_cells >= o.threshold_cells] or results[-1:]
    checks = []
    for r in checked:
        checks.append(
            (f"linf_rel[n_cells={r.n_cells}]", r.linf_rel <= o.tolerance, f"{r.linf_rel:.3e} <= {o.tolerance:g}")
        )
    if len(results) > 1:
        errs = [r.linf_rel for r in results]
        improving = all(b < a for a, b in zip(errs, errs[1:]))
        checks.append(("improves_under_refinement", improving, " > ".join(f"{e:.3e}" for e in errs)))
        if o.min_order is not None:
            order = min(observed_orders(results))
            checks.append(("observed_order", order >= o.min_order, f"{order:.3f} >= {o.min_order:g}"))
    has_damper = any(cp.kind == "damper" for cp in (scenario.model.coupling_a, scenario.model.coupling_b))
    if has_damper and o.energy_tolerance is not None:
        for r in checked:
            checks.append(
                (
                    f"energy_drift[n_cells={r.n_cells}]",
                    r.energy_drift < o.energy_tolerance,
                    f"{r.energy_drift:.3e} < {o.energy_tolerance:g}",
                )
            )
    return checks


def cmd_compare(scenario: Scenario, out: str | None = None) -> int:
    """FDTD at each refinement level against the semi-analytic field."""
    if not scenario.probes:
        raise ConfigError("probes", "compare needs at least one probe")
    bundle = solve(scenario.initial_data(), scenario.model, scenario.horizon)
    folder = _out_dir(scenario, out)
    results = compare_levels(scenario, bundle, folder)
    rows = []
    for r in results:
        for k, x in enumerate(r.probe_x):
            rows.append((r.level, r.n_cells, k + 1, x, r.linf[k], r.l2[k], r.linf_rel))
    write_rows(folder / "compare.csv", ["level", "n_cells", "probe", "x", "linf", "l2", "linf_rel"], rows)
    checks = compare_checks(scenario, results)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_THRESHOLD


def cmd_identities(seed: int = 42, n_cases: int = 50, out: str | None = None) -> int:
    if n_cases < 1:
        print("error: --cases must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    report = run_suite(seed, n_cases)
    for name, value in report.max_residual.items():
        ok = value < TOLERANCE
        where = f" (seed {seed}, case {report.worst_index[name]})" if not ok else ""
        print(f"{'PASS' if ok else 'FAIL'} {name}: max residual {value:.3e} < {TOLERANCE:g}{where}")
    print(f"{n_cases} cases, seed {seed}, {report.seconds:.2f} s")
    if out is not None:
        write_rows(
            Path(out) / "identities.csv",
            ["identity", "max_residual", "worst_case"],
            [(name, v, report.worst_index[name]) for name, v in report.max_residual.items()],
        )
    if not report.passed:
        print(f"identity check failed for seed {seed}", file=sys.stderr)
        return EXIT_THRESHOLD
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pointwave", description="Strings with point interactions: solve and verify.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "write traces, probe series and snapshots"),
        ("compare", "check the semi-analytic field against finite differences"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("config", help="scenario YAML file")
        sp.add_argument("--out", help="output directory (overrides the scenario's)")
    sp = sub.add_parser("identities", help="randomized operator-identity checks")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--cases", type=int, default=50)
    sp.add_argument("--out", help="also write identities.csv here")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "identities":
            return cmd_identities(args.seed, args.cases, args.out)
        scenario = load_scenario(args.config)
        if args.command == "simulate":
            return cmd_simulate(scenario, args.out)
        return cmd_compare(scenario, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HorizonViolation, InsufficientHorizon) as exc:
        print(f"horizon violation: {exc}", file=sys.stderr)
        return EXIT_HORIZON
    except OracleInstability as exc:
        print(f"oracle instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY


__all__ = [
    "main",
    "build_parser",
    "cmd_simulate",
    "cmd_compare",
    "cmd_identities",
    "compare_levels",
    "compare_checks",
    "observed_orders",
    "snapshot_name",
    "HorizonViolation",
]
