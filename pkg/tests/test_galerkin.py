"""Right-hand-side assembly, adaptive stepping, and run-level behavior."""

import math

import numpy as np
import pytest

from oldroyd2d.constitutive import ConstitutiveModel, PhysicalParams
from oldroyd2d.galerkin import (
    BlowUp,
    State,
    StepControl,
    StepFailure,
    momentum_rhs,
    reconstruct_pressure,
    run,
    step,
    stress_rhs,
)
from oldroyd2d.spectral import (
    GridSpec,
    antisym_grad,
    divergence_residual,
    l2_norm,
    leray_project,
    sym_grad,
    symmetry_residual,
    to_physical,
    to_spectral,
    zero_tensor_field,
    zero_vector_field,
)

from oracle import oracle_momentum, oracle_stress, relative_error
from support import (
    random_state,
    random_tensor_field,
    random_vector_field,
    rng_for,
    single_mode_tensor,
    taylor_green_field,
)

OFFDIAG = np.array([[0.0, 1.0], [1.0, 0.0]])
DIAG = np.array([[1.0, 0.0], [0.0, -1.0]])


def make_params(we=2.0, theta=0.5, lam=0.5, nu=1.0):
    return PhysicalParams(we, theta, lam, nu)


def make_model(variant="S1", kind="power_quadratic", p=3.0, lam=0.5, r=1.5, nu0=1.0):
    return ConstitutiveModel(kind, p, lam, r, variant, nu0)


def zero_state(grid, tau=None, v=None, t=0.0):
    return State(
        v if v is not None else zero_vector_field(grid),
        tau if tau is not None else zero_tensor_field(grid),
        t,
    )


class TestRhsExamples:
    def test_zero_state_gives_zero(self):
        grid = GridSpec(8)
        st = zero_state(grid)
        model, params = make_model(), make_params()
        assert np.all(momentum_rhs(st, model, params) == 0.0)
        assert np.all(stress_rhs(st, model, params) == 0.0)

    def test_momentum_single_stress_mode_by_hand(self):
        # tau = cos(x) * offdiag: div tau = (0, -sin x), already divergence-free
        grid = GridSpec(8)
        tau = single_mode_tensor(grid, (1, 0), OFFDIAG)
        st = zero_state(grid, tau=tau)
        out = momentum_rhs(st, make_model(), make_params())
        n = grid.modes_per_axis
        expected = np.zeros((2, n, n), dtype=complex)
        expected[1, 1, 0] = 0.5j
        expected[1, -1, 0] = -0.5j
        assert np.max(np.abs(out - expected)) < 1e-14

    def test_momentum_equals_projected_stress_divergence(self):
        grid = GridSpec(8)
        tau = random_tensor_field(grid, rng_for(11))
        st = zero_state(grid, tau=tau)
        out = momentum_rhs(st, make_model(), make_params())
        kx, ky = grid.kx, grid.ky
        div = np.stack((
            1j * (kx * tau.coeffs[0, 0] + ky * tau.coeffs[0, 1]),
            1j * (kx * tau.coeffs[1, 0] + ky * tau.coeffs[1, 1]),
        ))
        expected = leray_project(div, grid).coeffs
        assert np.max(np.abs(out - expected)) < 1e-14 * np.max(np.abs(expected))

    def test_stress_pure_relaxation_for_zero_velocity(self):
        grid = GridSpec(8)
        tau = random_tensor_field(grid, rng_for(12))
        st = zero_state(grid, tau=tau)
        params = make_params()
        out = stress_rhs(st, make_model(variant="S1"), params)
        assert np.max(np.abs(out + params.a * tau.coeffs)) < 1e-14

    def test_stress_s2_forcing_is_bD(self):
        grid = GridSpec(8)
        v = taylor_green_field(grid)
        st = zero_state(grid, v=v)
        params = make_params()
        out = stress_rhs(st, make_model(variant="S2"), params)
        expected = params.b * sym_grad(v).coeffs
        assert np.max(np.abs(out - expected)) < 1e-13 * np.max(np.abs(expected))

    def test_rotation_bracket_energy_neutral_pointwise(self):
        grid = GridSpec(16)
        rng = rng_for(13)
        tau = random_tensor_field(grid, rng).values()
        w = to_physical(antisym_grad(random_vector_field(grid, rng)), grid)
        bracket = np.einsum("il...,lj...->ij...", tau, w) - np.einsum(
            "il...,lj...->ij...", w, tau
        )
        contraction = np.abs(np.sum(bracket * tau, axis=(0, 1)))
        tau_mag2 = np.sum(tau * tau, axis=(0, 1))
        w_mag = np.sqrt(np.sum(w * w, axis=(0, 1)))
        assert np.all(contraction <= 1e-12 * np.maximum(tau_mag2 * w_mag, 1e-30))

    def test_stress_rhs_symmetric_for_variant_s(self):
        grid = GridSpec(8)
        st = random_state(grid, rng_for(14))
        out = stress_rhs(st, make_model(variant="S"), make_params())
        assert np.max(np.abs(out - np.swapaxes(out, 0, 1))) == 0.0


class TestOracleEquivalence:
    @pytest.mark.parametrize("n", [4, 8])
    @pytest.mark.parametrize("variant", ["S", "S1", "S2"])
    def test_rhs_matches_dense_quadrature(self, n, variant):
        grid = GridSpec(n)
        model = make_model(variant=variant)
        params = make_params()
        for seed in range(3):
            st = random_state(grid, rng_for(100 + seed), amplitude=0.8)
            assert relative_error(
                momentum_rhs(st, model, params),
                oracle_momentum(st.v.coeffs, st.tau.coeffs, grid, model, params),
            ) < 1e-10
            assert relative_error(
                stress_rhs(st, model, params),
                oracle_stress(st.v.coeffs, st.tau.coeffs, grid, model, params),
            ) < 1e-10

    def test_oracle_agrees_with_hand_relaxation(self):
        grid = GridSpec(8)
        tau = single_mode_tensor(grid, (1, 1), DIAG)
        params = make_params()
        out = oracle_stress(
            np.zeros((2, 8, 8), dtype=complex), tau.coeffs, grid, make_model(), params
        )
        assert np.max(np.abs(out + params.a * tau.coeffs)) < 1e-13


class TestStep:
    def test_zero_data_is_fixed_point(self):
        grid = GridSpec(8)
        st = zero_state(grid)
        new, dt, row = step(st, make_model(), make_params(), StepControl())
        assert dt > 0.0
        assert l2_norm(new.v) == 0.0 and l2_norm(new.tau) == 0.0
        assert row.kinetic == 0.0

    def test_relaxation_analytic_decay(self):
        grid = GridSpec(8)
        tau0 = random_tensor_field(grid, rng_for(15))
        st = zero_state(grid, tau=tau0)
        params = make_params(we=2.0)  # a = 0.5
        result = run(st, make_model(variant="S1"), params, StepControl(), 1.0,
                     freeze_velocity=True)
        expected = math.exp(-params.a) * l2_norm(tau0)
        assert l2_norm(result.final_state.tau) == pytest.approx(expected, rel=1e-6)

    def test_observed_order_at_least_four(self):
        grid = GridSpec(8)
        model, params = make_model(variant="S1"), make_params()
        st = State(taylor_green_field(grid), random_tensor_field(grid, rng_for(16), 0.3), 0.0)
        t_end = 0.25

        def fixed_run(dt):
            ctrl = StepControl(dt_init=dt, dt_min=dt, dt_max=dt, rel_tol=1e6, abs_tol=1e6)
            res = run(st, model, params, ctrl, t_end, record_ledger=False)
            return res.final_state

        ref_ctrl = StepControl(rel_tol=1e-12, abs_tol=1e-14, dt_max=0.005)
        ref = run(st, model, params, ref_ctrl, t_end, record_ledger=False).final_state

        def error(state):
            return l2_norm(state.v - ref.v) + l2_norm(state.tau - ref.tau)

        e1 = error(fixed_run(0.025))
        e2 = error(fixed_run(0.0125))
        order = math.log2(e1 / e2)
        assert order >= 4.0

    def test_tighter_tolerance_reduces_error(self):
        grid = GridSpec(8)
        model, params = make_model(variant="S2"), make_params(lam=0.0)
        st = State(taylor_green_field(grid), random_tensor_field(grid, rng_for(17), 0.3), 0.0)
        ref = run(st, model, params, StepControl(rel_tol=1e-12, abs_tol=1e-14, dt_max=0.005),
                  0.5, record_ledger=False).final_state
        errors = []
        for rtol in (1e-4, 1e-6, 1e-8):
            res = run(st, model, params, StepControl(rel_tol=rtol, abs_tol=1e-12), 0.5,
                      record_ledger=False)
            errors.append(l2_norm(res.final_state.tau - ref.tau)
                          + l2_norm(res.final_state.v - ref.v))
        assert errors[0] > errors[1] > errors[2]

    def test_transport_only_stress_is_isometry(self):
        # f == 0 (linear kind, nu0 = 0), a = b = 0 (We = inf), frozen velocity
        grid = GridSpec(16)
        model = ConstitutiveModel("linear", 2.0, 0.0, 2.0, "S1", nu0=0.0)
        params = PhysicalParams(math.inf, 0.5, 0.0, 1.0)
        st = State(taylor_green_field(grid), random_tensor_field(grid, rng_for(18)), 0.0)
        before = l2_norm(st.tau)
        res = run(st, model, params, StepControl(), 1.0, freeze_velocity=True,
                  record_ledger=False)
        assert l2_norm(res.final_state.tau) == pytest.approx(before, rel=1e-6)

    def test_invariants_hold_after_steps(self):
        grid = GridSpec(16)
        st = random_state(grid, rng_for(19), amplitude=0.5)
        res = run(st, make_model(variant="S"), make_params(), StepControl(), 0.2)
        final = res.final_state
        assert divergence_residual(final.v) < 1e-12
        assert symmetry_residual(final.tau) < 1e-12


class TestRun:
    def test_zero_horizon_returns_input(self):
        grid = GridSpec(8)
        st = random_state(grid, rng_for(20))
        res = run(st, make_model(), make_params(), StepControl(), st.t)
        assert res.final_state is st
        assert res.ledger == []
        assert res.snapshots == []

    def test_negative_horizon_rejected(self):
        grid = GridSpec(8)
        st = random_state(grid, rng_for(21))
        with pytest.raises(ValueError):
            run(st, make_model(), make_params(), StepControl(), st.t - 1.0)

    def test_blowup_raises_with_partial_ledger(self):
        grid = GridSpec(8)
        st = random_state(grid, rng_for(22), amplitude=1.0)
        ctrl = StepControl(blowup_threshold=1e-8)
        with pytest.raises(BlowUp) as exc_info:
            run(st, make_model(), make_params(), ctrl, 1.0)
        assert exc_info.value.state.t == st.t
        assert len(exc_info.value.ledger) >= 1

    def test_step_failure_when_dt_cannot_shrink(self):
        grid = GridSpec(16)
        st = random_state(grid, rng_for(23), amplitude=5.0)
        ctrl = StepControl(dt_init=0.5, dt_min=0.5, dt_max=0.5, rel_tol=1e-10, abs_tol=1e-12)
        with pytest.raises(StepFailure):
            run(st, make_model(), make_params(), ctrl, 1.0)

    def test_snapshot_cadence(self):
        grid = GridSpec(8)
        st = zero_state(grid, tau=random_tensor_field(grid, rng_for(24)))
        res = run(st, make_model(variant="S1"), make_params(), StepControl(), 1.0,
                  freeze_velocity=True, snapshot_interval=0.25)
        times = [s.t for s in res.snapshots]
        assert times[0] == 0.0
        assert len(times) >= 5

    def test_ledger_rows_every_accepted_step(self):
        grid = GridSpec(8)
        st = zero_state(grid, tau=random_tensor_field(grid, rng_for(25)))
        res = run(st, make_model(variant="S1"), make_params(), StepControl(), 0.5,
                  freeze_velocity=True)
        assert len(res.ledger) == res.steps_accepted + 1
        assert res.ledger[0].t == 0.0
        assert res.ledger[-1].t == pytest.approx(0.5)


class TestPressure:
    def test_zero_state(self):
        grid = GridSpec(8)
        assert np.all(reconstruct_pressure(zero_state(grid), make_model()) == 0.0)

    def test_single_mode_hand_value(self):
        # tau = cos(x) e1(x)e1: F = tau, phat(1,0) = F11(1,0) = 1/2
        grid = GridSpec(8)
        tau = single_mode_tensor(grid, (1, 0), np.array([[1.0, 0.0], [0.0, 0.0]]))
        p_hat = reconstruct_pressure(zero_state(grid, tau=tau), make_model())
        assert p_hat[1, 0] == pytest.approx(0.5)
        assert p_hat[-1, 0] == pytest.approx(0.5)
        others = p_hat.copy()
        others[1, 0] = others[-1, 0] = 0.0
        assert np.max(np.abs(others)) < 1e-15

    def test_poisson_residual_on_random_states(self):
        grid = GridSpec(16)
        model = make_model()
        for seed in range(3):
            st = random_state(grid, rng_for(200 + seed), amplitude=0.8)
            p_hat = reconstruct_pressure(st, model)
            d_phys = sym_grad(st.v).values()
            from oldroyd2d.constitutive import f_of_D

            v_phys = st.v.values()
            vv = np.einsum("i...,j...->ij...", v_phys, v_phys)
            f_hat = to_spectral(f_of_D(d_phys, model) - vv + st.tau.values(), grid)
            kx, ky = grid.kx, grid.ky
            divdiv = -(
                kx * kx * f_hat[0, 0]
                + kx * ky * (f_hat[0, 1] + f_hat[1, 0])
                + ky * ky * f_hat[1, 1]
            )
            lap_p = -grid.k_squared * p_hat
            norm = lambda c: math.sqrt((2 * math.pi) ** 2 * float(np.sum(np.abs(c) ** 2)))
            assert norm(lap_p - divdiv) < 1e-10 * norm(f_hat)
