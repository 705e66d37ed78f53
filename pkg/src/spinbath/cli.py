"""``spinbath`` command line: simulate, verify, sweep, envelope, recurrence.

Exit codes: 0 success, 1 usage or configuration error, 2 verification
failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import analysis, closed_form as cf, oracle
from .config import OUT_ENV_VAR, ConfigError, RunConfig, build_run_config, parse_config_bytes
from .ensemble import ensemble_average
from .model import ModelConfig, case1_spec, case2_spec, case3_spec, ObservableSpec

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3
VERIFY_TOL = 1e-10
RECURRENCE_THRESHOLD = 0.99


# ---------------------------------------------------------------------------
# formatting

def _fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, complex):
        return f"[{x.real:.17g}, {x.imag:.17g}]"
    return str(x)


def write_curve_csv(path: Path, curve: cf.Curve, abs2: np.ndarray | None = None) -> None:
    """``t,re,im,abs2`` with 17 significant digits, one row per grid point."""
    abs2 = curve.abs2 if abs2 is None else abs2
    lines = ["t,re,im,abs2"]
    for t, v, m in zip(curve.times, curve.values, abs2):
        lines.append(f"{t:.17g},{v.real:.17g},{v.imag:.17g},{m:.17g}")
    path.write_text("\n".join(lines) + "\n")


def read_curve_csv(path: Path) -> np.ndarray:
    """Rows of ``(t, re, im, abs2)``."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_summary(path: Path, entries: Sequence[tuple[str, object]]) -> None:
    path.write_text("".join(f"{k}: {_fmt(v)}\n" for k, v in entries))


def _run_entries(rc: RunConfig) -> list[tuple[str, object]]:
    entries: list[tuple[str, object]] = [
        ("schema_version", 1),
        ("case", rc.case),
        ("n", rc.n),
    ]
    if rc.case == "case2":
        entries.append(("j", rc.j))
    if rc.case == "case3":
        entries.append(("p", rc.p_eff))
    entries += [
        ("seed", rc.seed),
        ("g_min", rc.g_min),
        ("g_max", rc.g_max),
        ("phase_mode", rc.phase_mode),
        ("explicit_env", rc.env is not None),
        ("a", rc.a),
        ("b", rc.b),
        ("single_branch", rc.single_branch),
        ("t_start", rc.t_start),
        ("t_max", rc.t_max),
        ("steps", rc.steps),
    ]
    return entries


# ---------------------------------------------------------------------------
# per-case evaluation

def case_curve(rc: RunConfig, config: ModelConfig) -> tuple[cf.Curve, np.ndarray | None]:
    """The curve a run emits, plus an exact ``abs2`` column where one exists."""
    grid = rc.grid
    strict = rc.single_branch
    if rc.case == "case1":
        curve = cf.sample_curve(lambda t: cf.r1(config, t), grid)
        return curve, np.asarray(cf.r1_abs2(config, grid.times()))
    if rc.case == "case2":
        block = rc.case2_block()
        return cf.sample_curve(lambda t: cf.case2_phasor(config, rc.j, block, t, single_branch=strict), grid), None
    if rc.case == "case3":
        blocks = rc.case3_blocks()
        return cf.sample_curve(lambda t: cf.case3_expectation(config, blocks, t, single_branch=strict), grid), None
    spec = ObservableSpec(rc.system_block, rc.particle_blocks)
    return cf.sample_curve(lambda t: cf.expectation(config, spec, t, single_branch=strict), grid), None


def _ensemble_metric(rc: RunConfig) -> Callable[[ModelConfig, np.ndarray], np.ndarray]:
    if rc.case == "case1":
        return cf.r1_abs2
    if rc.case == "case2":
        block = rc.case2_block()
        return lambda c, t: np.real(cf.case2_phasor(c, rc.j, block, t, single_branch=rc.single_branch))
    if rc.case == "case3":
        blocks = rc.case3_blocks()
        return lambda c, t: cf.case3_expectation(c, blocks, t, single_branch=rc.single_branch)
    spec = ObservableSpec(rc.system_block, rc.particle_blocks)
    return lambda c, t: cf.expectation(c, spec, t, single_branch=rc.single_branch)


def observable_spec(rc: RunConfig, config: ModelConfig) -> ObservableSpec:
    if rc.case == "case1":
        return case1_spec(config, rc.sys_block())
    if rc.case == "case2":
        return case2_spec(config, rc.j, rc.case2_block())
    if rc.case == "case3":
        return case3_spec(config, rc.case3_blocks())
    return ObservableSpec(rc.system_block, rc.particle_blocks)


def closed_form_evaluator(rc: RunConfig) -> Callable[[ModelConfig, np.ndarray], np.ndarray]:
    """Closed-form expectation of the run's observable, as compared by ``verify``."""
    strict = rc.single_branch
    if rc.case == "case2":
        block = rc.case2_block()
        return lambda c, t: cf.case2_expectation(c, rc.j, block, t, single_branch=strict)
    if rc.case == "case3":
        blocks = rc.case3_blocks()
        return lambda c, t: cf.case3_expectation(c, blocks, t, single_branch=strict)
    return lambda c, t: cf.expectation(c, observable_spec(rc, c), t, single_branch=strict)


# ---------------------------------------------------------------------------
# subcommands

def _simulate_into(rc: RunConfig, curve_path: Path) -> tuple[analysis.DecoherenceReport, float | None]:
    config = rc.model()
    curve, abs2 = case_curve(rc, config)
    threshold = analysis.DEFAULT_THRESHOLD if rc.threshold is None else rc.threshold
    report = analysis.analyze(curve, threshold, rc.persistence)
    write_curve_csv(curve_path, curve, abs2)
    tail_mean = None
    if rc.samples >= 2:
        stats = ensemble_average(rc.policy, rc.n, rc.samples, _ensemble_metric(rc), rc.grid, rc.system)
        ens_path = curve_path.with_name(curve_path.stem + "_ensemble.csv")
        rows = ["t,mean,variance"] + [
            f"{t:.17g},{m:.17g},{v:.17g}" for t, m, v in zip(rc.grid.times(), stats.mean, stats.variance)
        ]
        ens_path.write_text("\n".join(rows) + "\n")
        tail_mean = float(np.mean(stats.mean[rc.steps // 2:]))
    return report, tail_mean


def _report_entries(report: analysis.DecoherenceReport, tail_mean: float | None, samples: int):
    entries = [
        ("metric", "normalized |value|^2"),
        ("threshold", report.threshold),
        ("decoherence_time", report.decoherence_time),
        ("fluctuation_rms", report.fluctuation_rms),
        ("fluctuation_max", report.fluctuation_max),
        ("recurrence_time", report.recurrence_time),
    ]
    if samples >= 2:
        entries += [("samples", samples), ("ensemble_tail_mean", tail_mean)]
    return entries


def run_simulate(rc: RunConfig) -> int:
    rc.out.mkdir(parents=True, exist_ok=True)
    report, tail_mean = _simulate_into(rc, rc.out / "curve.csv")
    entries = _run_entries(rc) + [("persistence", rc.persistence)] + _report_entries(report, tail_mean, rc.samples)
    write_summary(rc.out / "summary.txt", entries)
    print(f"decoherence_time: {_fmt(report.decoherence_time)}")
    print(f"wrote {rc.out / 'curve.csv'} and {rc.out / 'summary.txt'}")
    return EXIT_OK


def run_verify(rc: RunConfig, evaluator: Callable[[ModelConfig, np.ndarray], np.ndarray] | None = None) -> int:
    """Compare closed form against the state-vector oracle on the run's grid.

    ``evaluator`` replaces the closed form; tests use it to check that a
    broken implementation is caught.
    """
    if rc.n > oracle.MAX_ORACLE_QUBITS:
        raise ConfigError("n", f"verify needs N <= {oracle.MAX_ORACLE_QUBITS} (got N={rc.n}); the oracle stores 2^(N+1) amplitudes")
    config = rc.model()
    times = rc.grid.times()
    evaluator = evaluator or closed_form_evaluator(rc)
    closed = np.asarray(evaluator(config, times), dtype=float)
    brute = oracle.expectation_oracle_curve(config, observable_spec(rc, config), times)
    deviation = float(np.max(np.abs(closed - brute)))
    ok = deviation <= VERIFY_TOL
    rc.out.mkdir(parents=True, exist_ok=True)
    write_summary(
        rc.out / "verify.txt",
        _run_entries(rc) + [("max_abs_deviation", deviation), ("tolerance", VERIFY_TOL), ("passed", ok)],
    )
    print(f"max |closed form - oracle| = {deviation:.3e} ({'ok' if ok else 'FAILED'})")
    return EXIT_OK if ok else EXIT_VERIFY


SWEEP_PARAMS = {"N": "n", "n": "n", "p": "p", "samples": "samples"}


def run_sweep(rc: RunConfig, param: str, values: Sequence[int]) -> int:
    if param not in SWEEP_PARAMS:
        raise ConfigError("param", f"can sweep N, p or samples, not {param!r}")
    if not values:
        raise ConfigError("values", "need at least one value")
    key = SWEEP_PARAMS[param]
    label = "N" if key == "n" else key
    rc.out.mkdir(parents=True, exist_ok=True)
    rows = ["value,decoherence_time,fluctuation_rms" + (",ensemble_tail_mean" if rc.samples >= 2 or key == "samples" else "")]
    for v in values:
        sub = build_run_config(_as_settings(rc), {key: v})
        report, tail_mean = _simulate_into(sub, rc.out / f"sweep_{label}_{v}.csv")
        row = f"{v},{_fmt(report.decoherence_time)},{_fmt(report.fluctuation_rms)}"
        if rc.samples >= 2 or key == "samples":
            row += f",{_fmt(tail_mean)}"
        rows.append(row)
    (rc.out / f"sweep_{label}.csv").write_text("\n".join(rows) + "\n")
    print(f"wrote {len(values)} curves and {rc.out / f'sweep_{label}.csv'}")
    return EXIT_OK


def run_envelope(rc: RunConfig) -> int:
    config = rc.model()
    env = analysis.envelope_bounds(config)
    rc.out.mkdir(parents=True, exist_ok=True)
    write_summary(
        rc.out / "envelope.txt",
        _run_entries(rc)[:3] + [
            ("seed", rc.seed),
            ("min_product", env.min_product),
            ("max_product", env.max_product),
            ("simultaneous", env.simultaneous),
        ],
    )
    p_up = np.abs(config.alpha) ** 2
    lines = ["i,alpha2,factor_min,factor_max"] + [
        f"{i},{pa:.17g},{fm:.17g},1" for i, (pa, fm) in enumerate(zip(p_up, analysis.factor_minima(config)), start=1)
    ]
    (rc.out / "envelope_factors.csv").write_text("\n".join(lines) + "\n")
    print(f"min_product: {_fmt(env.min_product)} (simultaneous: {_fmt(env.simultaneous)})")
    return EXIT_OK


def run_recurrence(rc: RunConfig) -> int:
    if rc.case not in ("case1", "case3"):
        raise ConfigError("case", "recurrence supports case 1 and case 3")
    config = rc.model()
    threshold = RECURRENCE_THRESHOLD if rc.threshold is None else rc.threshold
    if rc.case == "case1":
        metric = analysis.return_amplitude if rc.metric == "re" else cf.r1_abs2
        name = "Re r1" if rc.metric == "re" else "|r1|^2"
    else:
        blocks = rc.case3_blocks()
        r0 = cf.case3_expectation(config, blocks, 0.0, single_branch=rc.single_branch)
        if r0 == 0:
            raise ConfigError("observable", "case 3 expectation vanishes at t=0; cannot normalise")

        def metric(c, t):
            return cf.case3_expectation(c, blocks, t, single_branch=rc.single_branch) / r0

        name = "case3 / case3(0)"
    found = analysis.recurrence_search(config, metric, threshold, rc.grid, rc.persistence)
    rc.out.mkdir(parents=True, exist_ok=True)
    write_summary(
        rc.out / "recurrence.txt",
        _run_entries(rc) + [
            ("metric", name),
            ("threshold", threshold),
            ("persistence", rc.persistence),
            ("grid_spacing", rc.grid.spacing),
            ("recurrence_time", found),
        ],
    )
    print(f"recurrence_time: {_fmt(found)}")
    return EXIT_OK


def _as_settings(rc: RunConfig) -> dict:
    """RunConfig back to raw settings, for re-validation with overrides."""
    d = {k: getattr(rc, k) for k in (
        "case", "n", "j", "seed", "g_min", "g_max", "phase_mode", "t_start", "t_max",
        "steps", "persistence", "samples", "out", "single_branch", "metric", "a", "b",
    )}
    if rc.p is not None:
        d["p"] = rc.p
    if rc.threshold is not None:
        d["threshold"] = rc.threshold
    if rc.env is not None:
        d["env"] = [{"alpha": q.alpha, "beta": q.beta, "g": q.g} for q in rc.env]
    obs = {}
    if rc.system_block is not None:
        s = rc.system_block
        obs["system"] = {"s_uu": s.s_uu, "s_dd": s.s_dd, "s_ud": s.s_ud}
    if rc.particle_blocks is not None:
        obs["particles"] = [{"e_uu": b.e_uu, "e_dd": b.e_dd, "e_ud": b.e_ud} for b in rc.particle_blocks]
    if obs:
        d["observable"] = obs
    return d


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file (schema_version 1)")
    p.add_argument("--case", help="1, 2, 3 or general (default 1)")
    p.add_argument("--n", type=int, help="number of bath particles N (default 200)")
    p.add_argument("--p", type=int, help="case 3: observed particles 1..p (default N)")
    p.add_argument("--j", type=int, help="case 2: observed particle, 1-based (default 1)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--g-min", dest="g_min", type=float, help="lower coupling bound (default 0)")
    p.add_argument("--g-max", dest="g_max", type=float, help="upper coupling bound (default 1)")
    p.add_argument("--phase-mode", dest="phase_mode", choices=["real_amplitudes", "random_phases"])
    p.add_argument("--t-start", dest="t_start", type=float, help="grid start (default 0)")
    p.add_argument("--t-max", dest="t_max", type=float, help="grid end (default 80)")
    p.add_argument("--steps", type=int, help="grid points, endpoints included (default 2000)")
    p.add_argument("--threshold", type=float,
                   help="decoherence threshold (default 1/e) or recurrence threshold (default 0.99)")
    p.add_argument("--persistence", type=int, help="samples a crossing must persist (default 5)")
    p.add_argument("--samples", type=int, help="ensemble members; >= 2 adds an ensemble CSV (default 1)")
    p.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV_VAR} or ./spinbath_out)")
    p.add_argument("--single-branch", dest="single_branch", action="store_const", const=True,
                   help="use the single-branch formulas instead of the exact ones")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinbath", description="Exact dynamics of the central-spin bath model.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("simulate", "emit a curve CSV and summary"),
        ("verify", "check closed forms against the state-vector oracle"),
        ("sweep", "repeat simulate over N, p or samples"),
        ("envelope", "per-particle bounds of |r1|^2"),
        ("recurrence", "search the grid for a recurrence"),
    ]:
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        if name == "sweep":
            p.add_argument("--param", required=True, help="N, p or samples")
            p.add_argument("--values", required=True, help="comma-separated integers, e.g. 4,8,10")
        if name == "recurrence":
            p.add_argument("--metric", choices=["re", "abs2"], help="case 1: Re r1 (default) or |r1|^2")
    return parser


_NON_SETTINGS = {"command", "config", "param", "values"}


def parse_config(argv: Sequence[str]) -> tuple[argparse.Namespace, RunConfig]:
    args = build_parser().parse_args(argv)
    file_settings = None
    if args.config is not None:
        try:
            data = args.config.read_bytes()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
        file_settings = parse_config_bytes(data)
    overrides = {k: v for k, v in vars(args).items() if k not in _NON_SETTINGS}
    return args, build_run_config(file_settings, overrides)


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args, rc = parse_config(argv)
        if args.command == "simulate":
            return run_simulate(rc)
        if args.command == "verify":
            return run_verify(rc)
        if args.command == "sweep":
            try:
                values = [int(v) for v in args.values.split(",") if v.strip()]
            except ValueError:
                raise ConfigError("values", f"expected comma-separated integers, got {args.values!r}") from None
            return run_sweep(rc, args.param, values)
        if args.command == "envelope":
            return run_envelope(rc)
        return run_recurrence(rc)
    except SystemExit as exc:  # argparse
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
