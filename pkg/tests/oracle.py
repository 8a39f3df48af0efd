"""Independent brute-force oracle for the semi-discrete right-hand sides.

For every retained wavevector k != 0 the oracle forms the weak-form integrals
of each term against the explicit basis functions

    velocity:  phi = (k_perp/|k|) exp(i k.x)          (one scalar dof per k)
    stress:    alpha_m = E_m exp(i k.x), m = 1..3     (E_m orthonormal symmetric)

and reconstructs the predicted coefficient time derivative from the
projections.  Nothing here reuses the package's FFT machinery: fields are
evaluated by direct summation of the Fourier series, mode by mode, and the
integrals are plain quadrature sums.

Quadrature rules: all polynomial terms (advection, rotation, relaxation,
linear couplings) are integrated on an oversampled 4N x 4N grid, where the
trapezoidal rule is exact for the trigonometric polynomials involved.  The
non-polynomial constitutive terms f(D(v)) and g(D(v)) are not band-limited;
the discrete system defines them through the N-point collocation product
rule, so the oracle integrates exactly those terms with the same N-point
rule (still by direct summation, independently of the solver's FFT path).
"""

from __future__ import annotations

import numpy as np

E_SYM = (
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]) / np.sqrt(2.0),
)

AREA = (2.0 * np.pi) ** 2


def retained_modes(grid):
    """All retained wavevectors except k = 0, as a list of (k1, k2)."""
    k = grid.cutoff
    return [
        (k1, k2)
        for k1 in range(-k, k + 1)
        for k2 in range(-k, k + 1)
        if (k1, k2) != (0, 0)
    ]


def eval_series(coeffs, grid, m_points, deriv=None):
    """Direct summation of sum_k c(k) exp(i k.x) on an m_points^2 grid.

    ``deriv`` = 0 or 1 multiplies each mode by i*k1 or i*k2 (a partial
    derivative); None evaluates the series itself.  Returns real values.
    """
    n = grid.modes_per_axis
    x1 = 2.0 * np.pi * np.arange(m_points) / m_points
    xx, yy = np.meshgrid(x1, x1, indexing="ij")
    out = np.zeros(coeffs.shape[:-2] + (m_points, m_points), dtype=np.complex128)
    for k1, k2 in retained_modes(grid) + [(0, 0)]:
        c = coeffs[..., k1 % n, k2 % n]
        if not np.any(c):
            continue
        if deriv == 0:
            c = c * (1j * k1)
        elif deriv == 1:
            c = c * (1j * k2)
        out += c[..., None, None] * np.exp(1j * (k1 * xx + k2 * yy))
    assert np.max(np.abs(out.imag)) < 1e-10 * max(1.0, np.max(np.abs(out.real)))
    return out.real


def _mu_scalar(d2, lam, r_exp):
    return 1.0 - lam + lam * (1.0 + d2) ** ((r_exp - 2.0) / 2.0)


def _f_pointwise(a, model):
    mag2 = np.sum(a * a, axis=(0, 1))
    if model.f_kind == "linear":
        return 2.0 * model.nu0 * a
    if model.f_kind == "power_quadratic":
        scale = (1.0 + mag2) ** ((model.p_exp - 2.0) / 2.0)
    else:
        scale = (1.0 + np.sqrt(mag2)) ** (model.p_exp - 2.0)
    return scale[None, None] * a


def _g_pointwise(d, model, params):
    mag2 = np.sum(d * d, axis=(0, 1))
    mu = _mu_scalar(mag2, model.lam, model.r_exp)
    return (params.b / (1.0 - params.theta)) * (mu - params.theta)[None, None] * d


def _strain_and_spin(vhat, grid, m_points):
    dxv = eval_series(vhat, grid, m_points, deriv=0)  # d_x v_i
    dyv = eval_series(vhat, grid, m_points, deriv=1)
    grad = np.empty((2, 2, m_points, m_points))
    grad[0, 0], grad[0, 1] = dxv[0], dyv[0]
    grad[1, 0], grad[1, 1] = dxv[1], dyv[1]
    d = 0.5 * (grad + np.swapaxes(grad, 0, 1))
    w = 0.5 * (grad - np.swapaxes(grad, 0, 1))
    return grad, d, w


def _mode_phase(k, m_points):
    x1 = 2.0 * np.pi * np.arange(m_points) / m_points
    xx, yy = np.meshgrid(x1, x1, indexing="ij")
    return np.exp(-1j * (k[0] * xx + k[1] * yy))  # conjugate test-mode phase


def oracle_momentum(vhat, tauhat, grid, model, params):
    """Predicted d/dt of the velocity coefficients, shape (2, N, N)."""
    n = grid.modes_per_axis
    m = 4 * n
    cell_m = AREA / m**2
    cell_n = AREA / n**2

    v_fine = eval_series(vhat, grid, m)
    grad_fine, _, _ = _strain_and_spin(vhat, grid, m)
    conv_fine = np.einsum("j...,ij...->i...", v_fine, grad_fine)
    tau_fine = eval_series(tauhat, grid, m)
    _, d_coarse, _ = _strain_and_spin(vhat, grid, n)
    f_coarse = _f_pointwise(d_coarse, model)

    out = np.zeros((2, n, n), dtype=np.complex128)
    for k in retained_modes(grid):
        norm = np.hypot(k[0], k[1])
        e = np.array([-k[1], k[0]]) / norm
        phase_m = _mode_phase(k, m)
        phase_n = _mode_phase(k, n)
        # conj(D(phi))_lm = -(i/2)(k_m e_l + k_l e_m) exp(-i k.x)
        dphi = np.empty((2, 2), dtype=np.complex128)
        for a in range(2):
            for b in range(2):
                dphi[a, b] = -0.5j * (k[b] * e[a] + k[a] * e[b])
        conv_int = cell_m * np.sum(np.einsum("i...,i->...", conv_fine, e) * phase_m)
        tau_int = cell_m * np.sum(np.einsum("ij...,ij->...", tau_fine, dphi) * phase_m)
        f_int = cell_n * np.sum(np.einsum("ij...,ij->...", f_coarse, dphi) * phase_n)
        scalar = (-conv_int - f_int - tau_int) / AREA
        out[:, k[0] % n, k[1] % n] = scalar * e
    return out


def oracle_stress(vhat, tauhat, grid, model, params):
    """Predicted d/dt of the stress coefficients, shape (2, 2, N, N)."""
    n = grid.modes_per_axis
    m = 4 * n
    cell_m = AREA / m**2
    cell_n = AREA / n**2

    v_fine = eval_series(vhat, grid, m)
    tau_fine = eval_series(tauhat, grid, m)
    dx_tau = eval_series(tauhat, grid, m, deriv=0)
    dy_tau = eval_series(tauhat, grid, m, deriv=1)
    adv_fine = v_fine[0][None, None] * dx_tau + v_fine[1][None, None] * dy_tau

    _, d_fine, w_fine = _strain_and_spin(vhat, grid, m)
    if model.system_variant == "S":
        bracket_fine = np.einsum("il...,lj...->ij...", tau_fine, w_fine) - np.einsum(
            "il...,lj...->ij...", w_fine, tau_fine
        )
    if model.system_variant == "S2":
        forcing_fine = params.b * d_fine
    else:
        _, d_coarse, _ = _strain_and_spin(vhat, grid, n)
        g_coarse = _g_pointwise(d_coarse, model, params)

    out = np.zeros((2, 2, n, n), dtype=np.complex128)
    for k in retained_modes(grid):
        phase_m = _mode_phase(k, m)
        phase_n = _mode_phase(k, n)
        coeff = np.zeros((2, 2), dtype=np.complex128)
        for basis in E_SYM:
            adv_int = cell_m * np.sum(np.einsum("ij...,ij->...", adv_fine, basis) * phase_m)
            relax_int = params.a * cell_m * np.sum(
                np.einsum("ij...,ij->...", tau_fine, basis) * phase_m
            )
            rot_int = 0.0
            if model.system_variant == "S":
                rot_int = cell_m * np.sum(
                    np.einsum("ij...,ij->...", bracket_fine, basis) * phase_m
                )
            if model.system_variant == "S2":
                g_int = cell_m * np.sum(
                    np.einsum("ij...,ij->...", forcing_fine, basis) * phase_m
                )
            else:
                g_int = cell_n * np.sum(
                    np.einsum("ij...,ij->...", g_coarse, basis) * phase_n
                )
            proj = (-adv_int - relax_int - rot_int + g_int) / AREA
            coeff += proj * basis
        out[:, :, k[0] % n, k[1] % n] = coeff
    return out


def relative_error(solver: np.ndarray, oracle: np.ndarray) -> float:
    denom = np.linalg.norm(oracle.ravel())
    if denom == 0.0:
        return float(np.linalg.norm(solver.ravel()))
    return float(np.linalg.norm((solver - oracle).ravel()) / denom)
