"""Command-line interface.

Subcommands: ``run`` (simulate + energy verdicts + CSV/snapshots),
``verify-hypotheses`` (sampling checks of the stress-law bounds),
``converge`` (resolution study), ``decompose`` (co-integrated stress
decomposition with its certificates).

Exit codes are a stable contract: 0 pass, 1 usage or configuration error,
2 verdict failure, 3 blow-up or step-size collapse.  All outputs are pure
functions of the inputs; identical invocations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import diagnostics
from .config import ConfigError, SimulationConfig, build_initial, load_config
from .constitutive import (
    verify_coercivity,
    verify_growth,
    verify_monotonicity,
    verify_potential,
)
from .diagnostics import (
    TailProfile,
    check_H_decay,
    check_energy_inequality,
    check_psi_lp_bound,
    check_superposition,
    check_total_work_majorant,
    check_young_majorant,
    write_decomposition_csv,
    write_ledger_csv,
    write_tail_csv,
)
from .galerkin import BlowUp, IntegrationError, RunResult, StepFailure, run
from .snapshots import write_snapshot
from .spectral import l2_norm

__all__ = ["main"]

EXIT_PASS = 0
EXIT_USAGE = 1
EXIT_VERDICT = 2
EXIT_BLOWUP = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="oldroyd2d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a configured run and emit diagnostics")
    p_run.add_argument("--config", required=True, help="path to the INI config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--t-end", type=float, default=None, help="override run.t_end")

    p_verify = sub.add_parser("verify-hypotheses", help="sample the stress-law bounds")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--samples", type=int, default=10000)
    p_verify.add_argument("--radius", type=float, default=10.0)

    p_conv = sub.add_parser("converge", help="resolution (Cauchy-difference) study")
    p_conv.add_argument("--config", required=True)
    p_conv.add_argument("--levels", required=True, help="comma list, e.g. 8,16,32,64")

    p_dec = sub.add_parser("decompose", help="co-integrated stress decomposition")
    p_dec.add_argument("--config", required=True)
    p_dec.add_argument("--R-split", dest="r_split", type=float, default=None,
                       help="split level (defaults to diagnostics.r_split)")
    p_dec.add_argument("--out", required=True)
    return parser


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _downsample(rows, interval: float):
    """Rows at (approximately) multiples of ``interval``; 0 keeps everything."""
    if interval <= 0.0 or len(rows) < 3:
        return list(rows)
    kept = [rows[0]]
    next_t = rows[0].t + interval
    for row in rows[1:-1]:
        if row.t >= next_t - 1e-12:
            kept.append(row)
            while next_t <= row.t + 1e-12:
                next_t += interval
    kept.append(rows[-1])
    return kept


def _verdict_line(name: str, verdict) -> str:
    status = "PASS" if verdict.passed else "FAIL"
    line = (f"{name} = {status} (max_violation = {_fmt(verdict.max_violation)}, "
            f"tol = {_fmt(verdict.tol)})")
    if verdict.detail and "warning" in verdict.detail:
        line += f" [{verdict.detail}]"
    return line


def _write_run_outputs(out_dir: Path, config: SimulationConfig, result: RunResult,
                       status: str, verdict_lines) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    ledger = _downsample(result.ledger, config.run.ledger_interval)
    write_ledger_csv(out_dir / "ledger.csv", ledger)
    tail_states = result.snapshots if result.snapshots else [result.final_state]
    profile = TailProfile.from_states(tail_states, config.diagnostics.tail_thresholds)
    write_tail_csv(out_dir / "tail.csv", profile)
    if result.decomposition:
        write_decomposition_csv(out_dir / "decomposition.csv", result.decomposition)
    write_snapshot(out_dir / "final_state.oldb", result.final_state)
    for index, snap in enumerate(result.snapshots):
        write_snapshot(out_dir / f"snapshot_{index:04d}.oldb", snap)

    params = config.params
    case_rule = ("2*nu*(1-theta) > 1, any lambda in [0, 1]"
                 if params.case == "i"
                 else "lambda < sqrt(2*nu*(1-theta))")
    lines = [
        f"status = {status}",
        f"gamma = {_fmt(params.gamma)}",
        f"admissibility_case = {params.case} ({case_rule})",
        f"t_final = {_fmt(result.final_state.t)}",
        f"final_v_l2 = {_fmt(l2_norm(result.final_state.v))}",
        f"final_tau_l2 = {_fmt(l2_norm(result.final_state.tau))}",
        f"steps_accepted = {result.steps_accepted}",
        f"steps_rejected = {result.steps_rejected}",
    ]
    lines.extend(verdict_lines)
    (out_dir / "run_summary.txt").write_text("\n".join(lines) + "\n")


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.t_end is not None:
        if args.t_end < 0.0:
            raise _UsageError("--t-end must be nonnegative")
        import dataclasses

        config = dataclasses.replace(
            config, run=dataclasses.replace(config.run, t_end=args.t_end)
        )
    initial = build_initial(config)
    out_dir = Path(args.out)
    decomposition = None
    if config.diagnostics.enable_decomposition:
        decomposition = diagnostics.decompose_initial(
            initial.tau, config.diagnostics.r_split
        )
    snapshot_interval = config.run.snapshot_interval or None
    try:
        result = run(
            initial,
            config.model,
            config.params,
            config.run.ctrl,
            config.run.t_end,
            freeze_velocity=config.run.freeze_velocity,
            decomposition=decomposition,
            snapshot_interval=snapshot_interval,
        )
    except BlowUp as exc:
        partial = RunResult(exc.state, exc.ledger, [], decomposition=exc.decomposition)
        _write_run_outputs(out_dir, config, partial, "BLOWUP", [f"error = {exc}"])
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except StepFailure as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_BLOWUP

    e0 = result.ledger[0].kinetic + result.ledger[0].stress_energy if result.ledger else 0.0
    tol = 1e-6 * e0 + 1e-12
    energy_verdict = check_energy_inequality(result.ledger, config.params, tol=tol)
    verdict_lines = [
        _verdict_line("energy_inequality", energy_verdict),
        _verdict_line("total_work_majorant", check_total_work_majorant(result.ledger)),
    ]
    # the forcing-work-only form is guaranteed only for lambda >= 1 - theta
    if config.model.lam >= (1.0 - config.params.theta) - 1e-15:
        verdict_lines.append(
            _verdict_line("young_majorant", check_young_majorant(result.ledger))
        )
    else:
        verdict_lines.append("young_majorant = NOT_APPLICABLE (lambda < 1 - theta)")
    if result.decomposition:
        verdict_lines.extend([
            _verdict_line("superposition", check_superposition(result.decomposition)),
            _verdict_line("h_decay",
                          check_H_decay(result.decomposition, config.params.a)),
            _verdict_line("psi_lp_bound",
                          check_psi_lp_bound(result.decomposition, config.model,
                                             config.params)),
        ])
    passed = energy_verdict.passed
    _write_run_outputs(out_dir, config, result, "PASS" if passed else "VERDICT_FAIL",
                       verdict_lines)
    for line in verdict_lines:
        print(line)
    return EXIT_PASS if passed else EXIT_VERDICT


def _cmd_verify_hypotheses(args) -> int:
    config = load_config(args.config)
    if args.samples < 1:
        raise _UsageError("--samples must be >= 1")
    if args.radius <= 1e-3:
        raise _UsageError("--radius must exceed 1e-3")
    model = config.model
    growth = verify_growth(model, args.samples, args.radius)
    mono = verify_monotonicity(model, args.samples, args.radius)
    coer = verify_coercivity(model, args.samples, args.radius)
    pot = verify_potential(model, min(args.samples, 2000), radius=args.radius)
    print(f"growth:       c = {_fmt(growth.c_fit)}, c_tilde = {_fmt(growth.c_tilde_fit)}, "
          f"violations = {growth.violations}")
    print(f"monotonicity: nu_fit = {_fmt(mono.nu_fit)}, violations = {mono.violations}")
    print(f"coercivity:   nu_fit = {_fmt(coer.nu_fit)}, violations = {coer.violations}")
    print(f"potential:    max_grad_rel_err = {_fmt(pot.max_gradient_rel_err)}, "
          f"C1 = {_fmt(pot.c1_fit)}, C2 = {_fmt(pot.c2_fit)}, violations = {pot.violations}")
    nu_fit = min(mono.nu_fit, coer.nu_fit)
    if nu_fit < config.params.nu_mono:
        print(f"warning: fitted nu = {_fmt(nu_fit)} is below the configured "
              f"nu = {_fmt(config.params.nu_mono)}")
    total = growth.violations + mono.violations + coer.violations + pot.violations
    return EXIT_PASS if total == 0 else EXIT_VERDICT


def _coarse_l2_difference(fine_coeffs, fine_n, coarse_coeffs, coarse_n, cutoff) -> float:
    """L2 distance restricted to the coarse retained mode square."""
    total = 0.0
    for k1 in range(-cutoff, cutoff + 1):
        for k2 in range(-cutoff, cutoff + 1):
            diff = (
                fine_coeffs[..., k1 % fine_n, k2 % fine_n]
                - coarse_coeffs[..., k1 % coarse_n, k2 % coarse_n]
            )
            total += float(np.sum(np.abs(diff) ** 2))
    return math.sqrt((2.0 * math.pi) ** 2 * total)


def _cmd_converge(args) -> int:
    config = load_config(args.config)
    try:
        levels = [int(part) for part in args.levels.split(",") if part.strip()]
    except ValueError:
        raise _UsageError("--levels must be a comma list of integers")
    if len(levels) < 2:
        raise _UsageError("--levels needs at least two resolutions")

    finals = []
    for level in levels:
        level_config = config.with_resolution(level)
        initial = build_initial(level_config)
        result = run(
            initial,
            level_config.model,
            level_config.params,
            level_config.run.ctrl,
            level_config.run.t_end,
            freeze_velocity=level_config.run.freeze_velocity,
            record_ledger=False,
        )
        finals.append(result.final_state)

    v_diffs, tau_diffs = [], []
    for coarse, fine in zip(finals, finals[1:]):
        cutoff = coarse.grid.cutoff
        nc, nf = coarse.grid.modes_per_axis, fine.grid.modes_per_axis
        v_diffs.append(
            _coarse_l2_difference(fine.v.coeffs, nf, coarse.v.coeffs, nc, cutoff)
        )
        tau_diffs.append(
            _coarse_l2_difference(fine.tau.coeffs, nf, coarse.tau.coeffs, nc, cutoff)
        )
    for (a, b), dv, dt in zip(zip(levels, levels[1:]), v_diffs, tau_diffs):
        print(f"N = {a:4d} -> {b:4d}:  dv = {_fmt(dv)},  dtau = {_fmt(dt)}")
    decreasing = all(x > y for x, y in zip(v_diffs, v_diffs[1:])) and all(
        x > y for x, y in zip(tau_diffs, tau_diffs[1:])
    )
    zero_data = all(d == 0.0 for d in v_diffs + tau_diffs)
    if zero_data:
        print("all differences are zero (zero initial data)")
        return EXIT_PASS
    print("differences are strictly decreasing" if decreasing
          else "differences are NOT strictly decreasing")
    return EXIT_PASS if decreasing else EXIT_VERDICT


def _cmd_decompose(args) -> int:
    config = load_config(args.config)
    r_split = args.r_split if args.r_split is not None else config.diagnostics.r_split
    if r_split <= 0.0:
        raise _UsageError("--R-split must be positive")
    initial = build_initial(config)
    out_dir = Path(args.out)
    try:
        result = diagnostics.evolve_decomposition(
            initial,
            config.model,
            config.params,
            config.run.ctrl,
            config.run.t_end,
            r_split,
            freeze_velocity=config.run.freeze_velocity,
            snapshot_interval=config.run.snapshot_interval or None,
        )
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_BLOWUP

    rows = result.decomposition
    verdicts = {
        "superposition": check_superposition(rows),
        "h_decay": check_H_decay(rows, config.params.a),
        "psi_lp_bound": check_psi_lp_bound(rows, config.model, config.params),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    write_decomposition_csv(out_dir / "decomposition.csv", rows)
    for name, verdict in verdicts.items():
        print(_verdict_line(name, verdict))
    passed = all(v.passed for v in verdicts.values())
    return EXIT_PASS if passed else EXIT_VERDICT


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help exits 0; argparse internals exit 2
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    handlers = {
        "run": _cmd_run,
        "verify-hypotheses": _cmd_verify_hypotheses,
        "converge": _cmd_converge,
        "decompose": _cmd_decompose,
    }
    try:
        return handlers[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
