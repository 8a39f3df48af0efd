"""Runtime certificates for the energy estimate and the stress decomposition.

Three families of checks accompany a run:

* an energy ledger: per accepted step, every term entering the dissipation
  balance of the coupled system, an exact discrete budget residual, and the
  weighted majorant gamma*(nu*||D||_2^2 + (a/b)*||tau||_2^2) that the forcing
  work must respect;
* the stress decomposition tau = psi + H, co-integrated with the main run,
  with its monotone-decay certificate for H (exact envelope exp(-a t) in
  exact arithmetic) and the L^p a-priori bound for psi;
* the L2 tail functional integral of |tau|^2 over {|tau| >= M}, reported for
  a grid of thresholds M (equi-integrability surrogate; a curve, not a
  pass/fail).

CSV emitters write every float as decimal with 17 significant digits so that
identical runs produce byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .constitutive import ConstitutiveModel, PhysicalParams, f_of_D, mu, sup_mu_tilde
from .spectral import (
    SpectralTensorField,
    inner_product_L2,
    lp_norm_values,
    pointwise_magnitude,
    sym_grad,
    to_spectral,
)

__all__ = [
    "OMEGA_AREA",
    "EnergyLedgerRow",
    "ledger_row",
    "initial_ledger_row",
    "Verdict",
    "check_energy_inequality",
    "check_young_majorant",
    "check_energy_monotone",
    "tail_profile",
    "TailProfile",
    "decompose_initial",
    "DecompositionRow",
    "evolve_decomposition",
    "check_H_decay",
    "check_psi_lp_bound",
    "check_superposition",
    "write_ledger_csv",
    "write_tail_csv",
    "write_decomposition_csv",
]

# Lebesgue measure of the domain [0, 2*pi)^2; also the frozen constant of the
# interpolation ||D||_2^2 <= |Omega| + ||D||_p^p (Hoelder with exponents
# (p/2, p/(p-2)) followed by Young's inequality; the sharp constant is
# |Omega|*(p-2)/p <= |Omega|, and the looser |Omega| is used throughout).
OMEGA_AREA = 4.0 * math.pi**2

LEDGER_COLUMNS = (
    "t",
    "kinetic",
    "stress_energy",
    "dissipation_p",
    "dissipation_2",
    "relax",
    "coupling",
    "g_work",
    "budget_residual",
)


@dataclass(frozen=True)
class EnergyLedgerRow:
    """Energy-balance terms at one accepted step.

    ``budget_residual`` is the exact discrete budget
    d/dt[kinetic + stress_energy] + f_work + relax - coupling - g_work
    with the difference quotient over the step and the flux terms averaged
    trapezoidally; it closes to O(dt^2) on smooth solutions.  ``f_work``
    (the true dissipation integral f(D):D) and ``majorant`` are carried for
    the checks but are not ledger CSV columns.
    """

    t: float
    kinetic: float
    stress_energy: float
    dissipation_p: float
    dissipation_2: float
    relax: float
    coupling: float
    g_work: float
    budget_residual: float
    majorant: float
    f_work: float


def _ledger_terms(state, model: ConstitutiveModel, params: PhysicalParams) -> dict:
    grid = state.v.grid
    d_field = sym_grad(state.v)
    d_phys = d_field.values()
    tau_phys = state.tau.values()
    cell = grid.cell_area

    v_sq = inner_product_L2(state.v, state.v)
    tau_sq = inner_product_L2(state.tau, state.tau)
    d_sq = inner_product_L2(d_field, d_field)
    dp = lp_norm_values(d_phys, model.p_exp, grid) ** model.p_exp

    coupling = -inner_product_L2(state.tau, d_field)
    f_work = float(np.sum(f_of_D(d_phys, model) * d_phys)) * cell

    b = params.b
    if b == 0.0:
        stress_energy = math.inf if tau_sq > 0.0 else 0.0
        relax = 0.0
        g_work = 0.0
    else:
        stress_energy = tau_sq / (2.0 * b)
        relax = (params.a / b) * tau_sq
        if model.system_variant == "S2":
            g_work = float(np.sum(d_phys * tau_phys)) * cell
        else:
            d2 = np.sum(d_phys * d_phys, axis=(0, 1))
            weight = np.asarray(mu(d2, model.lam, model.r_exp)) - params.theta
            g_work = float(np.sum(weight * np.sum(d_phys * tau_phys, axis=(0, 1)))) * cell
            g_work /= 1.0 - params.theta

    nu = params.nu_mono
    return {
        "kinetic": 0.5 * v_sq,
        "stress_energy": stress_energy,
        "dissipation_p": nu * dp,
        "dissipation_2": nu * d_sq,
        "relax": relax,
        "coupling": coupling,
        "g_work": g_work,
        "f_work": f_work,
        "majorant": params.gamma * (nu * d_sq + relax),
    }


def _row_from_terms(t: float, terms: dict, budget_residual: float) -> EnergyLedgerRow:
    return EnergyLedgerRow(
        t=t,
        kinetic=terms["kinetic"],
        stress_energy=terms["stress_energy"],
        dissipation_p=terms["dissipation_p"],
        dissipation_2=terms["dissipation_2"],
        relax=terms["relax"],
        coupling=terms["coupling"],
        g_work=terms["g_work"],
        budget_residual=budget_residual,
        majorant=terms["majorant"],
        f_work=terms["f_work"],
    )


def _budget_residual(t0, terms0, t1, terms1) -> float:
    dt = t1 - t0
    e0 = terms0["kinetic"] + terms0["stress_energy"]
    e1 = terms1["kinetic"] + terms1["stress_energy"]
    if not (math.isfinite(e0) and math.isfinite(e1)) or dt <= 0.0:
        return math.nan
    flux0 = terms0["f_work"] + terms0["relax"] - terms0["coupling"] - terms0["g_work"]
    flux1 = terms1["f_work"] + terms1["relax"] - terms1["coupling"] - terms1["g_work"]
    return (e1 - e0) / dt + 0.5 * (flux0 + flux1)


def ledger_row(state_before, state_after, model: ConstitutiveModel,
               params: PhysicalParams) -> EnergyLedgerRow:
    """Ledger row for one accepted step (terms evaluated at ``state_after``)."""
    terms0 = _ledger_terms(state_before, model, params)
    terms1 = _ledger_terms(state_after, model, params)
    residual = _budget_residual(state_before.t, terms0, state_after.t, terms1)
    return _row_from_terms(state_after.t, terms1, residual)


def initial_ledger_row(state, model: ConstitutiveModel, params: PhysicalParams) -> EnergyLedgerRow:
    """Row 0 of a ledger: instantaneous terms, zero budget residual."""
    return _row_from_terms(state.t, _ledger_terms(state, model, params), 0.0)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    max_violation: float
    tol: float
    detail: str = ""


def check_energy_inequality(ledger: Sequence[EnergyLedgerRow], params: PhysicalParams,
                            tol: float, interp_const: float = OMEGA_AREA) -> Verdict:
    """Per-step check of the dissipation inequality with constant tracking.

    For every pair of consecutive rows,

        d/dt[kinetic + stress_energy]
          + (1-gamma) * (dissipation_p + relax)  <=  gamma * nu * interp_const + tol

    with the difference quotient over the step and the instantaneous terms
    averaged trapezoidally.  Requires admissible parameters (gamma < 1).
    """
    gamma = params.gamma
    if not gamma < 1.0:
        raise ValueError("energy inequality check requires admissible parameters (gamma < 1)")
    c_run = gamma * params.nu_mono * interp_const
    worst = -math.inf
    for prev, cur in zip(ledger, ledger[1:]):
        dt = cur.t - prev.t
        if dt <= 0.0:
            raise ValueError("ledger rows must have increasing times")
        e0 = prev.kinetic + prev.stress_energy
        e1 = cur.kinetic + cur.stress_energy
        diss = 0.5 * (prev.dissipation_p + cur.dissipation_p)
        relax = 0.5 * (prev.relax + cur.relax)
        lhs = (e1 - e0) / dt + (1.0 - gamma) * (diss + relax)
        worst = max(worst, lhs - c_run)
    if worst == -math.inf:
        worst = 0.0
    return Verdict(worst <= tol, worst, tol, "energy inequality")


def check_young_majorant(ledger: Sequence[EnergyLedgerRow], slack: float = 1e-8) -> Verdict:
    """Stepwise |g_work| <= gamma*(nu*||D||_2^2 + (a/b)*||tau||_2^2) + slack.

    Bounding the forcing work alone is guaranteed only when
    lambda >= 1 - theta (then sup|mu - theta| <= lambda and the weighted
    Cauchy-Schwarz/Young chain closes); see
    :func:`check_total_work_majorant` for the bound that holds for every
    admissible parameter set.
    """
    worst = -math.inf
    for row in ledger:
        worst = max(worst, abs(row.g_work) - row.majorant)
    if worst == -math.inf:
        worst = 0.0
    return Verdict(worst <= slack, worst, slack, "work-term majorant")


def check_total_work_majorant(ledger: Sequence[EnergyLedgerRow], slack: float = 1e-8) -> Verdict:
    """Stepwise |coupling + g_work| <= majorant + slack.

    The combined work equals (1/(1-theta)) int (mu(|D|^2) - 1) tau : D dx,
    with |mu - 1| <= lambda pointwise, so the weighted Young inequality
    bounds it by gamma*(nu*||D||_2^2 + (a/b)*||tau||_2^2) for every
    admissible parameter set (identically zero work for variant S2).
    """
    worst = -math.inf
    for row in ledger:
        worst = max(worst, abs(row.coupling + row.g_work) - row.majorant)
    if worst == -math.inf:
        worst = 0.0
    return Verdict(worst <= slack, worst, slack, "total work majorant")


def check_energy_monotone(ledger: Sequence[EnergyLedgerRow], slack: float) -> Verdict:
    """Total energy kinetic + stress_energy nonincreasing up to ``slack``."""
    worst = -math.inf
    for prev, cur in zip(ledger, ledger[1:]):
        e0 = prev.kinetic + prev.stress_energy
        e1 = cur.kinetic + cur.stress_energy
        worst = max(worst, e1 - e0)
    if worst == -math.inf:
        worst = 0.0
    return Verdict(worst <= slack, worst, slack, "energy monotonicity")


# ---------------------------------------------------------------------------
# tail functional
# ---------------------------------------------------------------------------

def tail_profile(tau: SpectralTensorField, thresholds: Sequence[float]) -> np.ndarray:
    """Quadrature of |tau|^2 over the set {|tau| >= M} for each threshold M.

    Thresholds must be sorted ascending.  The result is nonincreasing in M
    and bounded by the squared L2 norm (asserted).
    """
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.ndim != 1 or thresholds.size == 0:
        raise ValueError("thresholds must be a nonempty 1-D sequence")
    if np.any(np.diff(thresholds) < 0.0):
        raise ValueError("thresholds must be sorted ascending")
    mag = pointwise_magnitude(tau.values())
    sq = mag**2
    cell = tau.grid.cell_area
    tails = np.array([float(np.sum(sq[mag >= m])) * cell for m in thresholds])
    total = float(np.sum(sq)) * cell
    if np.any(np.diff(tails) > 1e-12 * max(total, 1.0)) or np.any(tails > total * (1 + 1e-12) + 1e-12):
        raise AssertionError("tail profile failed its monotonicity invariants")
    return tails


@dataclass(frozen=True)
class TailProfile:
    """Tail functional sampled over time: one value row per (t, thresholds)."""

    thresholds: tuple[float, ...]
    times: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    @staticmethod
    def from_states(states: Iterable, thresholds: Sequence[float]) -> "TailProfile":
        times, values = [], []
        for state in states:
            times.append(state.t)
            values.append(tuple(tail_profile(state.tau, thresholds)))
        return TailProfile(tuple(float(m) for m in thresholds), tuple(times), tuple(values))


# ---------------------------------------------------------------------------
# stress decomposition tau = psi + H
# ---------------------------------------------------------------------------

def decompose_initial(tau0: SpectralTensorField, r_split: float
                      ) -> tuple[SpectralTensorField, SpectralTensorField]:
    """Split tau0 into psi0 (where |tau0| < R) and H0 (where |tau0| >= R).

    The split is pointwise on the collocation grid.  Both pieces are then
    projected into the zero-mean tensor space the evolution lives in; the
    removed means are exact negatives of each other (tau0 has zero mean), so
    psi0 + H0 still reproduces tau0 to rounding, collocation-pointwise.
    """
    if not r_split > 0.0:
        raise ValueError("r_split must be positive")
    grid = tau0.grid
    vals = tau0.values()
    small = pointwise_magnitude(vals) < r_split
    psi_vals = np.where(small, vals, 0.0)
    h_vals = np.where(small, 0.0, vals)
    psi_hat = to_spectral(psi_vals, grid)
    h_hat = to_spectral(h_vals, grid)
    psi_hat[:, :, 0, 0] = 0.0
    h_hat[:, :, 0, 0] = 0.0
    return SpectralTensorField(psi_hat, grid), SpectralTensorField(h_hat, grid)


@dataclass(frozen=True)
class DecompositionRow:
    """Scalar observables of the co-integrated decomposition at one step.

    ``cum_dp`` accumulates the space-time integral of |D(v)|^p up to t
    (trapezoidal in time); it feeds the psi bound."""

    t: float
    norm_tau: float
    norm_psi_p: float
    norm_h_2: float
    superposition_residual: float
    cum_dp: float


DECOMPOSITION_COLUMNS = ("t", "norm_tau", "norm_psi_p", "norm_H_2", "superposition_residual")


def evolve_decomposition(initial, model: ConstitutiveModel, params: PhysicalParams,
                         ctrl, t_end: float, r_split: float, *,
                         freeze_velocity: bool = False, snapshot_interval=None):
    """Run the main system with psi and H co-integrated on the same steps.

    psi solves the forced stress equation, H the unforced one, both
    transported by the same velocity stages as tau itself; the sum psi + H
    then tracks tau to rounding for every variant.  Returns the
    :class:`~oldroyd2d.galerkin.RunResult`, whose ``decomposition`` rows and
    ``psi_final``/``h_final`` fields are populated.
    """
    from .galerkin import run

    psi0, h0 = decompose_initial(initial.tau, r_split)
    return run(
        initial,
        model,
        params,
        ctrl,
        t_end,
        freeze_velocity=freeze_velocity,
        decomposition=(psi0, h0),
        snapshot_interval=snapshot_interval,
    )


def check_superposition(rows: Sequence[DecompositionRow], rel_tol: float = 1e-6) -> Verdict:
    """||psi + H - tau||_2 <= rel_tol * ||tau||_2 at every sample."""
    worst = -math.inf
    for row in rows:
        worst = max(worst, row.superposition_residual - rel_tol * row.norm_tau)
    if worst == -math.inf:
        worst = 0.0
    return Verdict(worst <= 0.0, worst, 0.0, "superposition")


def check_H_decay(rows: Sequence[DecompositionRow], relax_rate: float,
                  slack: float = 1e-8, envelope_rel_tol: float = 1e-4) -> Verdict:
    """Monotone bound ||H(t)||_2 <= ||H(0)||_2 plus the exp(-a t) envelope.

    The monotone bound decides ``passed``; the exponential envelope (exact
    for the continuous decomposition: transport and rotation are L2-neutral
    and relaxation is uniform, a property stronger than the plain decay
    bound) is reported in ``detail`` and only downgrades to a warning when it
    fails while the monotone bound holds.
    """
    if not rows:
        return Verdict(True, 0.0, slack, "H decay: empty series")
    h0 = rows[0].norm_h_2
    t0 = rows[0].t
    worst = 0.0
    worst_env = 0.0
    for row in rows:
        worst = max(worst, row.norm_h_2 - h0 * (1.0 + slack))
        envelope = h0 * math.exp(-relax_rate * (row.t - t0))
        scale = max(envelope, 1e-300)
        worst_env = max(worst_env, abs(row.norm_h_2 - envelope) / scale)
    if h0 == 0.0:
        worst_env = max(row.norm_h_2 for row in rows)
    env_ok = worst_env <= envelope_rel_tol
    detail = f"exp envelope max rel err {worst_env:.3e}" + ("" if env_ok else " (warning)")
    return Verdict(worst <= 0.0, worst, slack, detail)


def check_psi_lp_bound(rows: Sequence[DecompositionRow], model: ConstitutiveModel,
                       params: PhysicalParams, rel_slack: float = 1e-6) -> Verdict:
    """A-priori bound on psi in L^p with the forcing constant tracked:

        ||psi(t)||_p <= ||psi(0)||_p + sup|mu_tilde| * t^(1-1/p) * ||D||_{L^p([0,t]xOmega)}
    """
    if not rows:
        return Verdict(True, 0.0, rel_slack, "psi bound: empty series")
    p = model.p_exp
    sup_mu = sup_mu_tilde(model, params)
    psi0 = rows[0].norm_psi_p
    t0 = rows[0].t
    worst = 0.0
    for row in rows:
        dt = row.t - t0
        bound = psi0 + sup_mu * dt ** (1.0 - 1.0 / p) * row.cum_dp ** (1.0 / p)
        worst = max(worst, row.norm_psi_p - bound * (1.0 + rel_slack) - 1e-14)
    return Verdict(worst <= 0.0, worst, rel_slack, "psi L^p bound")


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_ledger_csv(path, rows: Sequence[EnergyLedgerRow]) -> None:
    lines = [",".join(LEDGER_COLUMNS)]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in (
            r.t, r.kinetic, r.stress_energy, r.dissipation_p, r.dissipation_2,
            r.relax, r.coupling, r.g_work, r.budget_residual,
        )))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_tail_csv(path, profile: TailProfile) -> None:
    lines = ["t,M,tail"]
    for t, vals in zip(profile.times, profile.values):
        for m, tail in zip(profile.thresholds, vals):
            lines.append(f"{_fmt(t)},{_fmt(m)},{_fmt(tail)}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_decomposition_csv(path, rows: Sequence[DecompositionRow]) -> None:
    lines = [",".join(DECOMPOSITION_COLUMNS)]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in (
            r.t, r.norm_tau, r.norm_psi_p, r.norm_h_2, r.superposition_residual,
        )))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
