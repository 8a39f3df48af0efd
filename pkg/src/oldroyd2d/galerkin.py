"""Spectral assembly of the coupled velocity/stress system and time stepping.

The semi-discrete system for the retained modes reads

    d/dt vhat   = P [ -v.grad v + div f(D(v)) + div tau ]
    d/dt tauhat = Q [ -v.grad tau - a tau - (tau.w(v) - w(v).tau) + g(D(v)) ]

with P the Leray projection (divergence-free, zero-mean, truncated) and Q the
symmetric/zero-mean/truncated projection.  Quadratic products are evaluated
pseudo-spectrally and are alias-free under the 2/3 rule; the non-polynomial
terms f and g are evaluated on the collocation grid, transformed, and
truncated.  The rotation bracket is kept only for variant ``S``; variant
``S2`` replaces g(D(v)) by b*D(v) (computed exactly in coefficients).

Time integration is an embedded Dormand-Prince 5(4) pair with PI step-size
control; the projections are re-applied after every stage so rounding cannot
accumulate constraint drift.  Exceeding the blow-up threshold or hitting the
minimum step aborts with the last valid state attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import diagnostics
from .constitutive import ConstitutiveModel, PhysicalParams, f_of_D, g_of_D
from .spectral import (
    GridSpec,
    SpectralTensorField,
    SpectralVectorField,
    divergence_residual,
    hermitian_residual,
    l2_norm,
    lp_norm_values,
    sym_grad,
    symmetry_residual,
    to_physical,
    to_spectral,
    _leray_coeffs,
    _symmetrize_coeffs,
)

__all__ = [
    "State",
    "StepControl",
    "RunResult",
    "IntegrationError",
    "StepFailure",
    "BlowUp",
    "momentum_rhs",
    "stress_rhs",
    "step",
    "run",
    "reconstruct_pressure",
]


class IntegrationError(RuntimeError):
    """Base class for time-integration failures."""


class StepFailure(IntegrationError):
    """The controller would need a step below dt_min."""

    def __init__(self, message: str, t: float, dt: float,
                 ledger: Optional[list] = None):
        super().__init__(message)
        self.t = t
        self.dt = dt
        self.ledger = ledger or []


class BlowUp(IntegrationError):
    """Solution left the admissible range; carries the last valid state."""

    def __init__(self, message: str, state: "State",
                 ledger: Optional[list] = None, decomposition: Optional[list] = None):
        super().__init__(message)
        self.state = state
        self.ledger = ledger or []
        self.decomposition = decomposition or []


_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class State:
    """Velocity/stress pair at simulation time t.

    Construction re-asserts the structural invariants: v divergence-free and
    zero-mean, tau symmetric and zero-mean, both Hermitian.
    """

    v: SpectralVectorField
    tau: SpectralTensorField
    t: float

    def __post_init__(self) -> None:
        if self.v.grid != self.tau.grid:
            raise ValueError("velocity and stress live on different grids")
        if not math.isfinite(self.t):
            raise ValueError("time must be finite")
        if divergence_residual(self.v) > _RESIDUAL_TOL:
            raise ValueError("velocity is not divergence-free")
        if symmetry_residual(self.tau) > _RESIDUAL_TOL:
            raise ValueError("stress is not symmetric")
        for coeffs in (self.v.coeffs, self.tau.coeffs):
            if hermitian_residual(coeffs) > 1e-10:
                raise ValueError("field is not Hermitian (physical values not real)")
            scale = float(np.max(np.abs(coeffs)))
            if scale > 0.0 and abs(coeffs[..., 0, 0]).max() > _RESIDUAL_TOL * scale:
                raise ValueError("field has a nonzero mean mode")

    @property
    def grid(self) -> GridSpec:
        return self.v.grid


@dataclass(frozen=True)
class StepControl:
    """Adaptive step-size parameters and the blow-up guard.

    The blow-up monitor is the b-independent energy (||v||_2^2 + ||tau||_2^2)/2;
    exceeding ``blowup_threshold`` (or producing non-finite values at the
    minimum step) aborts the run.
    """

    dt_init: float = 1e-3
    dt_min: float = 1e-10
    dt_max: float = 0.1
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    blowup_threshold: float = 1e12

    def __post_init__(self) -> None:
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("step sizes must satisfy 0 < dt_min <= dt_init <= dt_max")
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.blowup_threshold <= 0.0:
            raise ValueError("blowup_threshold must be positive")


@dataclass
class RunResult:
    final_state: State
    ledger: list
    snapshots: list
    decomposition: Optional[list] = None
    psi_final: Optional[SpectralTensorField] = None
    h_final: Optional[SpectralTensorField] = None
    steps_accepted: int = 0
    steps_rejected: int = 0


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

def _velocity_context(vhat: np.ndarray, grid: GridSpec, model: ConstitutiveModel,
                      params: PhysicalParams, *, need_momentum: bool) -> dict:
    """Everything derived from the velocity that a stage evaluation needs."""
    kx, ky = grid.kx, grid.ky
    v_phys = to_physical(vhat, grid)

    grad = np.empty((2, 2) + vhat.shape[1:], dtype=np.complex128)
    grad[0, 0] = 1j * kx * vhat[0]
    grad[0, 1] = 1j * ky * vhat[0]
    grad[1, 0] = 1j * kx * vhat[1]
    grad[1, 1] = 1j * ky * vhat[1]
    d_hat = 0.5 * (grad + np.swapaxes(grad, 0, 1))
    d_phys = to_physical(d_hat, grid)

    ctx = {
        "grid": grid,
        "v_phys": v_phys,
        "d_hat": d_hat,
        "d_phys": d_phys,
        "a": params.a,
        "variant": model.system_variant,
    }
    if model.system_variant == "S":
        w_hat = 0.5 * (grad - np.swapaxes(grad, 0, 1))
        ctx["w_phys"] = to_physical(w_hat, grid)
    if model.system_variant == "S2":
        ctx["forcing_hat"] = params.b * d_hat
    else:
        ctx["forcing_hat"] = to_spectral(g_of_D(d_phys, model, params), grid)
    if need_momentum:
        ctx["gradv_phys"] = to_physical(grad, grid)
        ctx["f_hat"] = to_spectral(f_of_D(d_phys, model), grid)
    return ctx


def _momentum_from_ctx(ctx: dict, tauhat: np.ndarray) -> np.ndarray:
    grid = ctx["grid"]
    kx, ky = grid.kx, grid.ky
    v_phys, gradv = ctx["v_phys"], ctx["gradv_phys"]
    conv = np.empty_like(v_phys)
    conv[0] = v_phys[0] * gradv[0, 0] + v_phys[1] * gradv[0, 1]
    conv[1] = v_phys[0] * gradv[1, 0] + v_phys[1] * gradv[1, 1]
    total = -to_spectral(conv, grid)
    sigma = ctx["f_hat"] + tauhat
    total[0] += 1j * (kx * sigma[0, 0] + ky * sigma[0, 1])
    total[1] += 1j * (kx * sigma[1, 0] + ky * sigma[1, 1])
    return _leray_coeffs(total, grid)


def _stress_from_ctx(ctx: dict, that: np.ndarray, *, forced: bool) -> np.ndarray:
    grid = ctx["grid"]
    kx, ky = grid.kx, grid.ky
    v_phys = ctx["v_phys"]
    grad_t = np.stack((1j * kx * that, 1j * ky * that))  # (direction, i, j, N, N)
    grad_t_phys = to_physical(grad_t, grid)
    adv = v_phys[0] * grad_t_phys[0] + v_phys[1] * grad_t_phys[1]
    rhs = -to_spectral(adv, grid) - ctx["a"] * that
    if ctx["variant"] == "S":
        t_phys = to_physical(that, grid)
        w_phys = ctx["w_phys"]
        bracket = np.einsum("il...,lj...->ij...", t_phys, w_phys) - np.einsum(
            "il...,lj...->ij...", w_phys, t_phys
        )
        rhs -= to_spectral(bracket, grid)
    if forced:
        rhs = rhs + ctx["forcing_hat"]
    return _symmetrize_coeffs(rhs, grid)


def momentum_rhs(state: State, model: ConstitutiveModel, params: PhysicalParams) -> np.ndarray:
    """Leray-projected coefficients of -v.grad v + div f(D(v)) + div tau.

    Raises :class:`BlowUp` when the pointwise f evaluation produced
    non-finite values.
    """
    ctx = _velocity_context(state.v.coeffs, state.grid, model, params, need_momentum=True)
    out = _momentum_from_ctx(ctx, state.tau.coeffs)
    if not np.all(np.isfinite(out.view(np.float64))):
        raise BlowUp("non-finite momentum right-hand side", state)
    return out


def stress_rhs(state: State, model: ConstitutiveModel, params: PhysicalParams) -> np.ndarray:
    """Symmetric coefficients of -v.grad tau - a tau - [tau, w(v)] + forcing.

    The rotation bracket appears only for variant S (and is symmetric for
    symmetric tau, asserted here); the forcing is g(D(v)) for S/S1 and
    b*D(v) for S2.  Evaluates the same assembly the time stepper uses.
    """
    ctx = _velocity_context(state.v.coeffs, state.grid, model, params, need_momentum=False)
    grid = state.grid
    that = state.tau.coeffs
    if model.system_variant == "S":
        t_phys = to_physical(that, grid)
        w_phys = ctx["w_phys"]
        bracket = np.einsum("il...,lj...->ij...", t_phys, w_phys) - np.einsum(
            "il...,lj...->ij...", w_phys, t_phys
        )
        bracket_hat = to_spectral(bracket, grid)
        asym = float(np.max(np.abs(bracket_hat - np.swapaxes(bracket_hat, 0, 1))))
        scale = max(1.0, float(np.max(np.abs(bracket_hat))))
        if asym > 1e-12 * scale:
            raise AssertionError("rotation bracket of a symmetric tensor must be symmetric")
    out = _stress_from_ctx(ctx, that, forced=True)
    if not np.all(np.isfinite(out.view(np.float64))):
        raise BlowUp("non-finite stress right-hand side", state)
    return out


# ---------------------------------------------------------------------------
# embedded Dormand-Prince 5(4)
# ---------------------------------------------------------------------------

_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_ERR = _DP_B5 - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_N_STAGES = 7
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
_ERR_EXP = 0.7 / 5.0
_ERR_EXP_PREV = 0.4 / 5.0


@dataclass
class _System:
    """Packed view of (v, tau[, psi, H]) plus the stage evaluation logic."""

    grid: GridSpec
    model: ConstitutiveModel
    params: PhysicalParams
    freeze_velocity: bool
    with_aux: bool

    def __post_init__(self) -> None:
        n = self.grid.modes_per_axis
        self.n2 = n * n
        self.v_slice = slice(0, 2 * self.n2)
        self.tau_slice = slice(2 * self.n2, 6 * self.n2)
        self.psi_slice = slice(6 * self.n2, 10 * self.n2)
        self.h_slice = slice(10 * self.n2, 14 * self.n2)
        self.main_size = 6 * self.n2
        self.size = 14 * self.n2 if self.with_aux else self.main_size

    def pack(self, vhat, tauhat, psihat=None, hhat=None) -> np.ndarray:
        parts = [vhat.ravel(), tauhat.ravel()]
        if self.with_aux:
            parts += [psihat.ravel(), hhat.ravel()]
        return np.concatenate(parts)

    def v_of(self, y: np.ndarray) -> np.ndarray:
        n = self.grid.modes_per_axis
        return y[self.v_slice].reshape(2, n, n)

    def tensor_of(self, y: np.ndarray, which: slice) -> np.ndarray:
        n = self.grid.modes_per_axis
        return y[which].reshape(2, 2, n, n)

    def project(self, y: np.ndarray) -> np.ndarray:
        out = np.empty_like(y)
        if self.freeze_velocity:
            out[self.v_slice] = y[self.v_slice]
        else:
            out[self.v_slice] = _leray_coeffs(self.v_of(y), self.grid).ravel()
        for sl in self._tensor_slices():
            out[sl] = _symmetrize_coeffs(self.tensor_of(y, sl), self.grid).ravel()
        return out

    def derivative(self, y: np.ndarray) -> np.ndarray:
        ctx = _velocity_context(
            self.v_of(y), self.grid, self.model, self.params,
            need_momentum=not self.freeze_velocity,
        )
        out = np.empty_like(y)
        tauhat = self.tensor_of(y, self.tau_slice)
        if self.freeze_velocity:
            out[self.v_slice] = 0.0
        else:
            out[self.v_slice] = _momentum_from_ctx(ctx, tauhat).ravel()
        out[self.tau_slice] = _stress_from_ctx(ctx, tauhat, forced=True).ravel()
        if self.with_aux:
            out[self.psi_slice] = _stress_from_ctx(
                ctx, self.tensor_of(y, self.psi_slice), forced=True
            ).ravel()
            out[self.h_slice] = _stress_from_ctx(
                ctx, self.tensor_of(y, self.h_slice), forced=False
            ).ravel()
        return out

    def _tensor_slices(self):
        if self.with_aux:
            return (self.tau_slice, self.psi_slice, self.h_slice)
        return (self.tau_slice,)


def _attempt_step(system: _System, y: np.ndarray, dt: float, ctrl: StepControl
                  ) -> tuple[np.ndarray, float]:
    """One trial step; returns the projected candidate and its error norm.

    Overflow inside a trial stage is not an error: it yields an infinite
    error norm and the controller rejects the step.
    """
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            stages = np.empty((_N_STAGES, y.size), dtype=np.complex128)
            stages[0] = system.derivative(y)
            for i in range(1, _N_STAGES):
                yi = y + dt * (np.asarray(_DP_A[i]) @ stages[:i])
                yi = system.project(yi)
                stages[i] = system.derivative(yi)
            y_new = system.project(y + dt * (_DP_B5 @ stages))
            err_vec = dt * (_DP_ERR @ stages)
    except ValueError:
        # overflow can corrupt the Hermitian structure mid-transform
        return y.copy(), math.inf

    main = slice(0, system.main_size)
    scale = ctrl.abs_tol + ctrl.rel_tol * np.maximum(np.abs(y[main]), np.abs(y_new[main]))
    finite = np.all(np.isfinite(y_new.view(np.float64))) and np.all(
        np.isfinite(err_vec.view(np.float64))
    )
    if not finite:
        return y_new, math.inf
    err_norm = float(np.sqrt(np.mean(np.abs(err_vec[main] / scale) ** 2)))
    return y_new, err_norm


class _Stepper:
    """Adaptive loop state: proposed dt and the PI controller memory."""

    def __init__(self, system: _System, ctrl: StepControl):
        self.system = system
        self.ctrl = ctrl
        self.dt = min(max(ctrl.dt_init, ctrl.dt_min), ctrl.dt_max)
        self.err_prev: Optional[float] = None
        self.rejected = 0

    def advance(self, y: np.ndarray, t: float, t_end: float) -> tuple[np.ndarray, float]:
        ctrl = self.ctrl
        while True:
            dt = min(self.dt, t_end - t)
            last = dt >= t_end - t - 1e-15 * max(1.0, abs(t_end))
            y_new, err = _attempt_step(self.system, y, dt, ctrl)
            if err <= 1.0:
                if err == 0.0:
                    fac = _FAC_MAX
                elif self.err_prev is None:
                    fac = _SAFETY * err ** (-1.0 / 5.0)
                else:
                    fac = _SAFETY * err ** (-_ERR_EXP) * self.err_prev ** (_ERR_EXP_PREV)
                fac = min(_FAC_MAX, max(_FAC_MIN, fac))
                self.dt = min(max(dt * fac, ctrl.dt_min), ctrl.dt_max)
                self.err_prev = max(err, 1e-10)
                t_new = t_end if last else t + dt
                return y_new, t_new
            self.rejected += 1
            if dt <= ctrl.dt_min * (1.0 + 1e-12):
                raise StepFailure(
                    f"step size collapsed below dt_min = {ctrl.dt_min:g} at t = {t:g}",
                    t, dt,
                )
            shrink = _FAC_MIN if not math.isfinite(err) else max(
                _FAC_MIN, _SAFETY * err ** (-1.0 / 5.0)
            )
            self.dt = max(dt * min(shrink, 0.9), ctrl.dt_min)


def _state_from(y: np.ndarray, system: _System, t: float) -> State:
    v = SpectralVectorField(system.v_of(y), system.grid)
    tau = SpectralTensorField(system.tensor_of(y, system.tau_slice), system.grid)
    return State(v, tau, t)


def _monitor_energy(state: State) -> float:
    return 0.5 * (l2_norm(state.v) ** 2 + l2_norm(state.tau) ** 2)


def step(state: State, model: ConstitutiveModel, params: PhysicalParams,
         ctrl: StepControl) -> tuple[State, float, diagnostics.EnergyLedgerRow]:
    """Advance one accepted adaptive step; returns (state', dt_used, ledger row)."""
    system = _System(state.grid, model, params, freeze_velocity=False, with_aux=False)
    stepper = _Stepper(system, ctrl)
    y = system.pack(state.v.coeffs, state.tau.coeffs)
    y_new, t_new = stepper.advance(y, state.t, math.inf)
    new_state = _state_from(y_new, system, t_new)
    if _monitor_energy(new_state) > ctrl.blowup_threshold:
        raise BlowUp("energy exceeded the blow-up threshold", state)
    row = diagnostics.ledger_row(state, new_state, model, params)
    return new_state, t_new - state.t, row


def run(initial: State, model: ConstitutiveModel, params: PhysicalParams,
        ctrl: StepControl, t_end: float, *, freeze_velocity: bool = False,
        decomposition: Optional[tuple] = None, snapshot_interval: Optional[float] = None,
        record_ledger: bool = True) -> RunResult:
    """Integrate to t_end, collecting ledger rows, snapshots, and (optionally)
    the co-integrated stress decomposition.

    ``decomposition`` is a (psi0, h0) pair of tensor fields advanced with the
    forced/unforced stress operator on the same accepted steps.  Blow-up and
    step collapse raise :class:`BlowUp` / :class:`StepFailure` with the
    partial ledger attached to the exception where applicable.
    """
    if t_end < initial.t:
        raise ValueError("t_end must not precede the initial time")
    result = RunResult(initial, [], [], decomposition=None)
    if t_end == initial.t:
        return result

    with_aux = decomposition is not None
    system = _System(initial.grid, model, params,
                     freeze_velocity=freeze_velocity, with_aux=with_aux)
    if with_aux:
        psi0, h0 = decomposition
        y = system.pack(initial.v.coeffs, initial.tau.coeffs, psi0.coeffs, h0.coeffs)
        result.decomposition = [_decomp_row(initial, psi0, h0, model, 0.0)]
    else:
        y = system.pack(initial.v.coeffs, initial.tau.coeffs)

    ledger = result.ledger
    if record_ledger:
        ledger.append(diagnostics.initial_ledger_row(initial, model, params))

    snapshots = result.snapshots
    next_snap = None
    if snapshot_interval is not None and snapshot_interval > 0.0:
        snapshots.append(initial)
        next_snap = initial.t + snapshot_interval

    stepper = _Stepper(system, ctrl)
    state = initial
    prev_dp = _dp_value(state, model) if with_aux else 0.0
    cum_dp = 0.0
    t = initial.t
    while t < t_end:
        try:
            y, t_new = stepper.advance(y, t, t_end)
        except StepFailure as exc:
            exc.ledger = ledger
            raise
        new_state = _state_from(y, system, t_new)
        if not math.isfinite(_monitor_energy(new_state)) or (
            _monitor_energy(new_state) > ctrl.blowup_threshold
        ):
            raise BlowUp(
                f"energy exceeded the blow-up threshold at t = {t_new:g}",
                state, ledger, result.decomposition,
            )
        if record_ledger:
            ledger.append(diagnostics.ledger_row(state, new_state, model, params))
        if with_aux:
            psi = SpectralTensorField(system.tensor_of(y, system.psi_slice), system.grid)
            h = SpectralTensorField(system.tensor_of(y, system.h_slice), system.grid)
            dp = _dp_value(new_state, model)
            cum_dp += 0.5 * (prev_dp + dp) * (t_new - t)
            prev_dp = dp
            result.decomposition.append(_decomp_row(new_state, psi, h, model, cum_dp))
            result.psi_final, result.h_final = psi, h
        if next_snap is not None:
            while t_new >= next_snap - 1e-12:
                snapshots.append(new_state)
                next_snap += snapshot_interval
        state = new_state
        t = t_new

    result.final_state = state
    result.steps_accepted = len(ledger) - 1 if record_ledger else -1
    result.steps_rejected = stepper.rejected
    return result


def _dp_value(state: State, model: ConstitutiveModel) -> float:
    d_phys = sym_grad(state.v).values()
    return lp_norm_values(d_phys, model.p_exp, state.grid) ** model.p_exp


def _decomp_row(state: State, psi: SpectralTensorField, h: SpectralTensorField,
                model: ConstitutiveModel, cum_dp: float) -> diagnostics.DecompositionRow:
    residual = l2_norm(psi + h - state.tau)
    return diagnostics.DecompositionRow(
        t=state.t,
        norm_tau=l2_norm(state.tau),
        norm_psi_p=float(lp_norm_values(psi.values(), model.p_exp, state.grid)),
        norm_h_2=l2_norm(h),
        superposition_residual=residual,
        cum_dp=cum_dp,
    )


# ---------------------------------------------------------------------------
# pressure reconstruction (diagnostics only; the dynamics never uses it)
# ---------------------------------------------------------------------------

def reconstruct_pressure(state: State, model: ConstitutiveModel) -> np.ndarray:
    """Zero-mean pressure coefficients from Delta p = div div F,

    F = f(D(v)) - v (x) v + tau, solved mode by mode as
    phat(k) = (k (x) k : Fhat(k)) / |k|^2.
    """
    grid = state.grid
    d_phys = sym_grad(state.v).values()
    v_phys = state.v.values()
    f_phys = f_of_D(d_phys, model)
    vv = np.einsum("i...,j...->ij...", v_phys, v_phys)
    f_hat = to_spectral(f_phys - vv + state.tau.values(), grid)
    kx, ky = grid.kx, grid.ky
    kkf = (
        kx * kx * f_hat[0, 0]
        + kx * ky * (f_hat[0, 1] + f_hat[1, 0])
        + ky * ky * f_hat[1, 1]
    )
    k2 = grid.k_squared.copy()
    k2[0, 0] = 1.0
    p_hat = kkf / k2
    p_hat[0, 0] = 0.0
    return p_hat
