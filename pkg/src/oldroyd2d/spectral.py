"""Truncated Fourier fields on the periodic square [0, 2*pi)^2.

Fields are stored as complex coefficient arrays in standard FFT layout over
an N x N collocation grid and truncated to the square of retained wavevectors
max(|k1|, |k2|) <= K, with K = floor(N/3) (the 2/3 rule, so that quadratic
products of retained modes never alias back onto retained modes).  A physical
field is recovered as u(x) = sum_k uhat(k) exp(i k.x).

Conventions
-----------
* axis 0 of the collocation grid is x, axis 1 is y; grid points are
  x_i = 2*pi*i/N.
* velocity gradient: (grad v)_ij = d_j v_i.
* matrix norm: Frobenius, |A|^2 = A:A.
* real-valued physical fields correspond to Hermitian coefficient arrays,
  uhat(-k) = conj(uhat(k)).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "GridSpec",
    "SpectralVectorField",
    "SpectralTensorField",
    "to_physical",
    "to_spectral",
    "leray_project",
    "sym_grad",
    "antisym_grad",
    "grad_vector",
    "divergence_tensor",
    "inner_product_L2",
    "l2_norm",
    "lp_norm",
    "lp_norm_values",
    "pointwise_magnitude",
    "negate_modes",
    "hermitianize",
    "hermitian_residual",
    "divergence_residual",
    "symmetry_residual",
    "zero_vector_field",
    "zero_tensor_field",
]


@dataclass(frozen=True)
class GridSpec:
    """Collocation grid of N x N points on [0, 2*pi)^2 with 2/3-rule cutoff.

    Parameters
    ----------
    modes_per_axis : int
        Number of collocation points per axis.  Must be even and >= 4.
    """

    modes_per_axis: int

    def __post_init__(self) -> None:
        n = self.modes_per_axis
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise ValueError("modes_per_axis must be an integer")
        if n < 4 or n % 2 != 0:
            raise ValueError("modes_per_axis must be an even integer >= 4")

    @property
    def cutoff(self) -> int:
        """Dealiasing cutoff K = floor(N/3); retained modes have linf norm <= K."""
        return self.modes_per_axis // 3

    @property
    def cell_area(self) -> float:
        """Quadrature weight of one collocation cell, (2*pi/N)^2."""
        return (2.0 * np.pi / self.modes_per_axis) ** 2

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers per axis in FFT layout, as float64."""
        n = self.modes_per_axis
        return np.fft.fftfreq(n, d=1.0 / n)

    @cached_property
    def kx(self) -> np.ndarray:
        return np.broadcast_to(
            self.wavenumbers[:, None], (self.modes_per_axis, self.modes_per_axis)
        )

    @cached_property
    def ky(self) -> np.ndarray:
        return np.broadcast_to(
            self.wavenumbers[None, :], (self.modes_per_axis, self.modes_per_axis)
        )

    @cached_property
    def k_squared(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean mask of retained modes (2/3-rule square truncation)."""
        k = self.cutoff
        return (np.abs(self.kx) <= k) & (np.abs(self.ky) <= k)

    def physical_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (x, y) of collocation points, 'ij' indexing."""
        n = self.modes_per_axis
        x1 = 2.0 * np.pi * np.arange(n) / n
        return np.meshgrid(x1, x1, indexing="ij")


def _freeze(arr: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128, copy=True, order="C")
    if out.shape != shape:
        raise ValueError(f"coefficient array must have shape {shape}, got {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SpectralVectorField:
    """Divergence-free, zero-mean velocity field in truncated coefficients.

    Invariants (maintained by the constructing operations, checked by
    :func:`divergence_residual` / :func:`hermitian_residual`): Hermitian
    symmetry, k . vhat(k) = 0 for every retained k, vhat(0) = 0.
    """

    coeffs: np.ndarray  # complex128, shape (2, N, N)
    grid: GridSpec

    def __post_init__(self) -> None:
        n = self.grid.modes_per_axis
        object.__setattr__(self, "coeffs", _freeze(self.coeffs, (2, n, n)))

    def values(self) -> np.ndarray:
        """Physical components on the collocation grid, shape (2, N, N)."""
        return to_physical(self.coeffs, self.grid)

    def __add__(self, other: "SpectralVectorField") -> "SpectralVectorField":
        return SpectralVectorField(self.coeffs + other.coeffs, self.grid)

    def __sub__(self, other: "SpectralVectorField") -> "SpectralVectorField":
        return SpectralVectorField(self.coeffs - other.coeffs, self.grid)

    def __mul__(self, scalar: float) -> "SpectralVectorField":
        return SpectralVectorField(self.coeffs * scalar, self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralVectorField":
        return SpectralVectorField(-self.coeffs, self.grid)


@dataclass(frozen=True, eq=False)
class SpectralTensorField:
    """Symmetric 2x2 tensor field in truncated coefficients.

    Invariants: Hermitian symmetry in k, coeffs[i, j] == coeffs[j, i],
    zero mean.
    """

    coeffs: np.ndarray  # complex128, shape (2, 2, N, N)
    grid: GridSpec

    def __post_init__(self) -> None:
        n = self.grid.modes_per_axis
        object.__setattr__(self, "coeffs", _freeze(self.coeffs, (2, 2, n, n)))

    def values(self) -> np.ndarray:
        """Physical components on the collocation grid, shape (2, 2, N, N)."""
        return to_physical(self.coeffs, self.grid)

    def __add__(self, other: "SpectralTensorField") -> "SpectralTensorField":
        return SpectralTensorField(self.coeffs + other.coeffs, self.grid)

    def __sub__(self, other: "SpectralTensorField") -> "SpectralTensorField":
        return SpectralTensorField(self.coeffs - other.coeffs, self.grid)

    def __mul__(self, scalar: float) -> "SpectralTensorField":
        return SpectralTensorField(self.coeffs * scalar, self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralTensorField":
        return SpectralTensorField(-self.coeffs, self.grid)


def zero_vector_field(grid: GridSpec) -> SpectralVectorField:
    n = grid.modes_per_axis
    return SpectralVectorField(np.zeros((2, n, n), dtype=np.complex128), grid)


def zero_tensor_field(grid: GridSpec) -> SpectralTensorField:
    n = grid.modes_per_axis
    return SpectralTensorField(np.zeros((2, 2, n, n), dtype=np.complex128), grid)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def to_physical(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Evaluate a coefficient array on the collocation grid (real values).

    The last two axes are the mode axes.  Raises if the reconstructed field
    has a non-negligible imaginary part (non-Hermitian input).
    """
    n = grid.modes_per_axis
    if coeffs.shape[-2:] != (n, n):
        raise ValueError("coefficient array does not match grid")
    vals = np.fft.ifft2(coeffs, axes=(-2, -1)) * (n * n)
    re = vals.real
    im_max = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    scale = max(1.0, float(np.max(np.abs(re))) if re.size else 0.0)
    if im_max > 1e-10 * scale:
        raise ValueError(
            f"field is not Hermitian: imaginary residual {im_max:.3e} (scale {scale:.3e})"
        )
    return np.ascontiguousarray(re)


def to_spectral(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Transform collocation values to truncated coefficients (2/3 rule)."""
    n = grid.modes_per_axis
    if values.shape[-2:] != (n, n):
        raise ValueError("value array does not match grid")
    coeffs = np.fft.fft2(values, axes=(-2, -1)) / (n * n)
    return np.where(grid.mask, coeffs, 0.0)


def negate_modes(coeffs: np.ndarray) -> np.ndarray:
    """Return c' with c'(k) = c(-k) on the last two (mode) axes."""
    flipped = np.flip(coeffs, axis=(-2, -1))
    return np.roll(flipped, shift=(1, 1), axis=(-2, -1))


def hermitianize(coeffs: np.ndarray) -> np.ndarray:
    """Project onto Hermitian-symmetric arrays (real physical fields)."""
    return 0.5 * (coeffs + np.conj(negate_modes(coeffs)))


# ---------------------------------------------------------------------------
# projections and differential operators
# ---------------------------------------------------------------------------

def _leray_coeffs(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Coefficient-level Leray projection: remove k-parallel part, mean, tail."""
    kx, ky = grid.kx, grid.ky
    k2 = grid.k_squared.copy()
    k2[0, 0] = 1.0  # k = 0 handled by the explicit zero below
    k_dot_u = kx * coeffs[0] + ky * coeffs[1]
    out = np.empty_like(coeffs)
    out[0] = coeffs[0] - kx * k_dot_u / k2
    out[1] = coeffs[1] - ky * k_dot_u / k2
    out[:, 0, 0] = 0.0
    return np.where(grid.mask, out, 0.0)


def leray_project(coeffs: np.ndarray, grid: GridSpec) -> SpectralVectorField:
    """Project arbitrary vector coefficients onto divergence-free fields.

    Pointwise in k this is P = I - k k^T / |k|^2; the mean mode and modes
    beyond the cutoff are removed.  Idempotent and L2 self-adjoint.
    """
    if coeffs.shape != (2, grid.modes_per_axis, grid.modes_per_axis):
        raise ValueError("expected vector coefficients of shape (2, N, N)")
    return SpectralVectorField(_leray_coeffs(np.asarray(coeffs, dtype=np.complex128), grid), grid)


def _symmetrize_coeffs(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Coefficient-level symmetric projection: symmetrize, remove mean and tail."""
    out = 0.5 * (coeffs + np.swapaxes(coeffs, 0, 1))
    out[:, :, 0, 0] = 0.0
    return np.where(grid.mask, out, 0.0)


def grad_vector(v: SpectralVectorField) -> np.ndarray:
    """Full velocity gradient coefficients, shape (2, 2, N, N): (i, j) = d_j v_i."""
    kx, ky = v.grid.kx, v.grid.ky
    c = v.coeffs
    out = np.empty((2, 2) + c.shape[1:], dtype=np.complex128)
    out[0, 0] = 1j * kx * c[0]
    out[0, 1] = 1j * ky * c[0]
    out[1, 0] = 1j * kx * c[1]
    out[1, 1] = 1j * ky * c[1]
    return out


def sym_grad(v: SpectralVectorField) -> SpectralTensorField:
    """Symmetric part of the velocity gradient, D(v)_ij = (d_j v_i + d_i v_j)/2."""
    g = grad_vector(v)
    return SpectralTensorField(0.5 * (g + np.swapaxes(g, 0, 1)), v.grid)


def antisym_grad(v: SpectralVectorField) -> np.ndarray:
    """Antisymmetric part of the velocity gradient as raw coefficients.

    Returns w with w_ij = (d_j v_i - d_i v_j)/2; w is antisymmetric, so it is
    not a :class:`SpectralTensorField` (those are symmetric by contract).
    """
    g = grad_vector(v)
    return 0.5 * (g - np.swapaxes(g, 0, 1))


def divergence_tensor(tau: SpectralTensorField) -> np.ndarray:
    """(div tau)_i = d_j tau_ij as vector coefficients, shape (2, N, N)."""
    kx, ky = tau.grid.kx, tau.grid.ky
    c = tau.coeffs
    out = np.empty((2,) + c.shape[2:], dtype=np.complex128)
    out[0] = 1j * (kx * c[0, 0] + ky * c[0, 1])
    out[1] = 1j * (kx * c[1, 0] + ky * c[1, 1])
    return out


# ---------------------------------------------------------------------------
# inner products and norms
# ---------------------------------------------------------------------------

def _coeffs_and_grid(field) -> tuple[np.ndarray, GridSpec]:
    if isinstance(field, (SpectralVectorField, SpectralTensorField)):
        return field.coeffs, field.grid
    raise TypeError("expected a SpectralVectorField or SpectralTensorField")


def inner_product_L2(a, b) -> float:
    """L2(Omega) inner product via Parseval: (2*pi)^2 sum_k ahat . conj(bhat).

    Components are contracted (vector dot / tensor double-dot).  The result
    must be real up to rounding; a large imaginary part raises.
    """
    ca, ga = _coeffs_and_grid(a)
    cb, gb = _coeffs_and_grid(b)
    if ga != gb:
        raise ValueError("fields live on different grids")
    if ca.shape != cb.shape:
        raise ValueError("fields have different component structure")
    total = (2.0 * np.pi) ** 2 * complex(np.sum(ca * np.conj(cb)))
    scale = max(1.0, abs(total.real))
    if abs(total.imag) > 1e-12 * scale:
        raise ValueError(f"inner product has imaginary residual {total.imag:.3e}")
    return float(total.real)


def l2_norm(field) -> float:
    """L2 norm of a spectral field (Parseval)."""
    return float(np.sqrt(max(inner_product_L2(field, field), 0.0)))


def pointwise_magnitude(values: np.ndarray) -> np.ndarray:
    """Pointwise Euclidean/Frobenius magnitude over leading component axes.

    ``values`` has shape (N, N) (scalar), (2, N, N) (vector) or
    (2, 2, N, N) (tensor); the result has shape (N, N).
    """
    if values.ndim == 2:
        return np.abs(values)
    comp_axes = tuple(range(values.ndim - 2))
    return np.sqrt(np.sum(values * values, axis=comp_axes))


def lp_norm_values(values: np.ndarray, p_exp: float, grid: GridSpec) -> float:
    """L^p norm by collocation quadrature of pointwise magnitudes."""
    if p_exp < 1.0:
        raise ValueError("p_exp must be >= 1")
    mag = pointwise_magnitude(values)
    return float(np.sum(mag**p_exp) * grid.cell_area) ** (1.0 / p_exp)


def lp_norm(field, p_exp: float) -> float:
    """L^p norm of a spectral field (trapezoidal quadrature on the grid)."""
    coeffs, grid = _coeffs_and_grid(field)
    return lp_norm_values(to_physical(coeffs, grid), p_exp, grid)


# ---------------------------------------------------------------------------
# invariant residuals
# ---------------------------------------------------------------------------

def hermitian_residual(coeffs: np.ndarray) -> float:
    """Relative deviation from uhat(-k) = conj(uhat(k))."""
    scale = float(np.max(np.abs(coeffs)))
    if scale == 0.0:
        return 0.0
    dev = float(np.max(np.abs(coeffs - np.conj(negate_modes(coeffs)))))
    return dev / scale


def divergence_residual(v: SpectralVectorField) -> float:
    """max_k |k . vhat(k)| relative to max_k |vhat(k)|."""
    scale = float(np.max(np.abs(v.coeffs)))
    if scale == 0.0:
        return 0.0
    div = v.grid.kx * v.coeffs[0] + v.grid.ky * v.coeffs[1]
    return float(np.max(np.abs(div))) / scale


def symmetry_residual(tau: SpectralTensorField) -> float:
    """max |tau_ij - tau_ji| relative to max |tau|, in coefficients."""
    scale = float(np.max(np.abs(tau.coeffs)))
    if scale == 0.0:
        return 0.0
    dev = float(np.max(np.abs(tau.coeffs - np.swapaxes(tau.coeffs, 0, 1))))
    return dev / scale
