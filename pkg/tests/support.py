"""Shared construction helpers for the test suite."""

from __future__ import annotations

import numpy as np

from oldroyd2d.spectral import (
    GridSpec,
    SpectralTensorField,
    SpectralVectorField,
    hermitianize,
    leray_project,
    to_spectral,
)
from oldroyd2d.galerkin import State


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def random_hermitian_coeffs(grid: GridSpec, rng, shape_prefix=()) -> np.ndarray:
    """Random dealiased Hermitian coefficients with zero mean."""
    n = grid.modes_per_axis
    raw = rng.standard_normal(shape_prefix + (n, n)) + 1j * rng.standard_normal(
        shape_prefix + (n, n)
    )
    raw = hermitianize(raw)
    raw = np.where(grid.mask, raw, 0.0)
    raw[..., 0, 0] = 0.0
    return raw


def random_vector_field(grid: GridSpec, rng, amplitude: float = 1.0) -> SpectralVectorField:
    field = leray_project(random_hermitian_coeffs(grid, rng, (2,)), grid)
    scale = float(np.max(np.abs(field.coeffs)))
    if scale == 0.0:
        return field
    return field * (amplitude / scale)


def random_tensor_field(grid: GridSpec, rng, amplitude: float = 1.0) -> SpectralTensorField:
    raw = random_hermitian_coeffs(grid, rng, (2, 2))
    raw = 0.5 * (raw + np.swapaxes(raw, 0, 1))
    field = SpectralTensorField(raw, grid)
    scale = float(np.max(np.abs(field.coeffs)))
    if scale == 0.0:
        return field
    return field * (amplitude / scale)


def random_state(grid: GridSpec, rng, t: float = 0.0, amplitude: float = 1.0) -> State:
    return State(
        random_vector_field(grid, rng, amplitude),
        random_tensor_field(grid, rng, amplitude),
        t,
    )


def taylor_green_field(grid: GridSpec) -> SpectralVectorField:
    """v = (sin x cos y, -cos x sin y), exact in the retained modes."""
    x, y = grid.physical_coords()
    vals = np.stack((np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)))
    return SpectralVectorField(to_spectral(vals, grid), grid)


def single_mode_tensor(grid: GridSpec, k: tuple[int, int], matrix: np.ndarray,
                       amplitude: float = 1.0) -> SpectralTensorField:
    """tau(x) = amplitude * cos(k.x) * matrix (matrix must be symmetric)."""
    n = grid.modes_per_axis
    coeffs = np.zeros((2, 2, n, n), dtype=np.complex128)
    k1, k2 = k
    coeffs[:, :, k1 % n, k2 % n] = 0.5 * amplitude * matrix
    coeffs[:, :, (-k1) % n, (-k2) % n] += 0.5 * amplitude * matrix
    return SpectralTensorField(coeffs, grid)
