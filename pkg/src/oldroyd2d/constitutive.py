"""Constitutive laws, physical parameters, and hypothesis verifiers.

The simulated system couples a velocity equation with stress diffusion
``div f(D(v))`` to a stress transport equation forced by
``g(D(v)) = mu_tilde(|D(v)|^2) D(v)``, where

    mu(d2)       = 1 - lambda + lambda * (1 + d2)^((r-2)/2)
    mu_tilde(d2) = b / (1 - theta) * (mu(d2) - theta)

with lambda in [0, 1], r in [1, 2], and the physical constants a = 1/We,
b = 2(1-theta)/We derived from the Weissenberg number We and the retardation
ratio theta in (0, 1).

The verifiers in this module sample symmetric matrices and estimate the
constants in the structural bounds assumed of f:

    growth:        |f(A)| <= c_tilde + c |A|^(p-1),  f(0) = 0
    monotonicity:  (f(A) - f(B)) : (A - B) >= nu (|A-B|^2 + |A-B|^p)
    coercivity:    f(A) : A >= nu |A|^p

together with a finite-difference check that f is the gradient of a convex
potential with power-(p-2) Hessian bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "F_KINDS",
    "SYSTEM_VARIANTS",
    "PhysicalParams",
    "ConstitutiveModel",
    "admissibility_case",
    "gamma_weighted_form",
    "mu",
    "mu_tilde",
    "sup_mu_tilde",
    "f_of_D",
    "g_of_D",
    "potential",
    "GrowthReport",
    "MonotonicityReport",
    "CoercivityReport",
    "PotentialReport",
    "sample_symmetric_matrices",
    "verify_growth",
    "verify_monotonicity",
    "verify_coercivity",
    "verify_potential",
]

F_KINDS = ("power_additive", "power_quadratic", "linear")
SYSTEM_VARIANTS = ("S", "S1", "S2")


def admissibility_case(nu_mono: float, theta: float, lam: float) -> str:
    """Return 'i' or 'ii' for admissible (nu, theta, lambda), raise otherwise.

    Case i:  2*nu*(1-theta) > 1, any lambda in [0, 1].
    Case ii: otherwise, lambda must satisfy lambda < sqrt(2*nu*(1-theta)).
    """
    if 2.0 * nu_mono * (1.0 - theta) > 1.0:
        return "i"
    bound = math.sqrt(2.0 * nu_mono * (1.0 - theta))
    if lam < bound:
        return "ii"
    raise ValueError(
        f"lambda = {lam:g} must satisfy lambda < sqrt(2*nu*(1-theta)) = {bound:g} "
        "(admissibility case ii)"
    )


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants of a run: We, theta, lambda, and the coercivity nu.

    Derived quantities: a = 1/We, b = 2(1-theta)/We, and the smallness
    constant gamma = lambda / sqrt(2*nu*(1-theta)), which equals
    lambda/(2(1-theta)) * sqrt(b/(a*nu)) since b/a = 2(1-theta).  Admissible
    parameter sets always yield gamma < 1; inadmissible ones are rejected at
    construction.  ``weissenberg = inf`` is allowed and gives a = b = 0
    (pure-transport stress studies).
    """

    weissenberg: float
    theta: float
    lam: float
    nu_mono: float

    def __post_init__(self) -> None:
        if not (self.weissenberg > 0.0):
            raise ValueError("weissenberg must be positive")
        if not (0.0 < self.theta < 1.0):
            raise ValueError("theta must lie strictly between 0 and 1")
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError("lambda must lie in [0, 1]")
        if not (self.nu_mono > 0.0) or not math.isfinite(self.nu_mono):
            raise ValueError("nu must be positive and finite")
        admissibility_case(self.nu_mono, self.theta, self.lam)

    @property
    def a(self) -> float:
        """Relaxation rate 1/We."""
        return 1.0 / self.weissenberg

    @property
    def b(self) -> float:
        """Forcing scale 2(1-theta)/We."""
        return 2.0 * (1.0 - self.theta) / self.weissenberg

    @property
    def gamma(self) -> float:
        """Smallness constant lambda / sqrt(2*nu*(1-theta)); < 1 when admissible."""
        return self.lam / math.sqrt(2.0 * self.nu_mono * (1.0 - self.theta))

    @property
    def case(self) -> str:
        return admissibility_case(self.nu_mono, self.theta, self.lam)


def gamma_weighted_form(params: PhysicalParams) -> float:
    """gamma written as lambda/(2(1-theta)) * sqrt(b/(a*nu)).

    Algebraically identical to :attr:`PhysicalParams.gamma`; kept as the
    independent cross-check of the parameter algebra.  Undefined (0/0) for
    weissenberg = inf.
    """
    return (
        params.lam
        / (2.0 * (1.0 - params.theta))
        * math.sqrt(params.b / (params.a * params.nu_mono))
    )


@dataclass(frozen=True)
class ConstitutiveModel:
    """Stress-diffusion law f, its exponent p, and the system variant.

    f kinds:
      * ``power_additive``:  f(A) = (1 + |A|)^(p-2) A
      * ``power_quadratic``: f(A) = (1 + |A|^2)^((p-2)/2) A
      * ``linear``:          f(A) = 2*nu0*A  (sanity runs at p = 2)

    Variants: ``S`` keeps the rotation terms tau.w - w.tau in the stress
    equation, ``S1`` drops them, ``S2`` drops them and replaces the forcing
    g(D(v)) by b*D(v).

    p = 2 is accepted at the type level (the pointwise laws are well defined
    there); run configurations additionally require p > 2 for the power
    kinds, see :func:`oldroyd2d.config.parse_config`.
    """

    f_kind: str
    p_exp: float
    lam: float
    r_exp: float
    system_variant: str
    nu0: float = 1.0

    def __post_init__(self) -> None:
        if self.f_kind not in F_KINDS:
            raise ValueError(f"f_kind must be one of {F_KINDS}")
        if self.system_variant not in SYSTEM_VARIANTS:
            raise ValueError(f"system_variant must be one of {SYSTEM_VARIANTS}")
        if not (self.p_exp >= 2.0):
            raise ValueError("p_exp must be >= 2")
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError("lambda must lie in [0, 1]")
        if not (1.0 <= self.r_exp <= 2.0):
            raise ValueError("r must lie in [1, 2]")
        if self.f_kind == "linear" and self.nu0 < 0.0:
            raise ValueError("nu0 must be nonnegative")

    @property
    def meets_3d_exponent(self) -> bool:
        """Whether p >= 5/2 (exponent range needed by the 3D theory; flag only)."""
        return self.p_exp >= 2.5


# ---------------------------------------------------------------------------
# pointwise laws
# ---------------------------------------------------------------------------

def mu(d2, lam: float, r_exp: float):
    """Shear-dependent viscosity 1 - lambda + lambda*(1 + d2)^((r-2)/2).

    ``d2`` is |D|^2 >= 0 (scalar or array).  The value lies in (1-lambda, 1]
    for r < 2 and equals 1 for r = 2 or d2 = 0; it is nonincreasing in d2.
    """
    d2 = np.asarray(d2, dtype=float)
    if np.any(d2 < 0.0):
        raise ValueError("d2 must be nonnegative")
    out = 1.0 - lam + lam * (1.0 + d2) ** ((r_exp - 2.0) / 2.0)
    return out if out.ndim else float(out)


def mu_tilde(d2, model: ConstitutiveModel, params: PhysicalParams):
    """Forcing viscosity b/(1-theta) * (mu(|D|^2) - theta)."""
    return params.b / (1.0 - params.theta) * (
        np.asarray(mu(d2, model.lam, model.r_exp)) - params.theta
    )


def sup_mu_tilde(model: ConstitutiveModel, params: PhysicalParams) -> float:
    """Supremum of |mu_tilde| over all strain rates (b for variant S2).

    mu ranges over [1-lambda, 1], so |mu - theta| <= max(1-theta, |1-lambda-theta|).
    """
    if model.system_variant == "S2":
        return params.b
    worst = max(1.0 - params.theta, abs(1.0 - model.lam - params.theta))
    return params.b / (1.0 - params.theta) * worst


def _frobenius_sq(values: np.ndarray) -> np.ndarray:
    return np.sum(values * values, axis=(0, 1))


def f_of_D(values: np.ndarray, model: ConstitutiveModel) -> np.ndarray:
    """Pointwise stress-diffusion law applied to matrix-valued data.

    ``values`` has the two matrix axes first, shape (2, 2, ...).  All kinds
    satisfy f(0) = 0 and f(-A) = -f(A).
    """
    if model.f_kind == "linear":
        return 2.0 * model.nu0 * values
    a2 = _frobenius_sq(values)
    if model.f_kind == "power_quadratic":
        scale = (1.0 + a2) ** ((model.p_exp - 2.0) / 2.0)
    else:  # power_additive
        scale = (1.0 + np.sqrt(a2)) ** (model.p_exp - 2.0)
    return scale[None, None, ...] * values


def g_of_D(values: np.ndarray, model: ConstitutiveModel, params: PhysicalParams) -> np.ndarray:
    """Stress forcing b/(1-theta) * (mu(|D|^2) - theta) * D, pointwise.

    Only meaningful for variants S and S1; variant S2 forces with b*D
    directly and is rejected here.
    """
    if model.system_variant == "S2":
        raise ValueError("variant S2 forces the stress equation with b*D, not g(D)")
    d2 = _frobenius_sq(values)
    scale = np.asarray(mu_tilde(d2, model, params))
    return scale[None, None, ...] * values


def potential(values: np.ndarray, model: ConstitutiveModel) -> np.ndarray:
    """Closed-form potential U with dU/dA = f(A), U(0) = 0, per f kind."""
    p = model.p_exp
    a2 = _frobenius_sq(values)
    if model.f_kind == "power_quadratic":
        return ((1.0 + a2) ** (p / 2.0) - 1.0) / p
    if model.f_kind == "power_additive":
        t = np.sqrt(a2)
        if p == 2.0:
            return 0.5 * t**2  # (1+t)^2/2 - (1+t) + 1/2 collapses to t^2/2
        return ((1.0 + t) ** p - 1.0) / p - ((1.0 + t) ** (p - 1.0) - 1.0) / (p - 1.0)
    return model.nu0 * a2  # linear


# ---------------------------------------------------------------------------
# sampling verifiers
# ---------------------------------------------------------------------------

Law = Union[ConstitutiveModel, tuple]

_E_SYM = (
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]) / math.sqrt(2.0),
)

_MAGNITUDE_FLOOR = 1e-3


def _as_law(model: Law) -> tuple[Callable[[np.ndarray], np.ndarray], float]:
    """Accept either a ConstitutiveModel or a (callable, p_exp) pair."""
    if isinstance(model, ConstitutiveModel):
        return (lambda a: f_of_D(a, model)), model.p_exp
    fn, p_exp = model
    return fn, float(p_exp)


def sample_symmetric_matrices(rng: np.random.Generator, count: int, radius: float) -> np.ndarray:
    """Random symmetric 2x2 matrices, shape (2, 2, count).

    Direction uniform on the Frobenius unit sphere of symmetric matrices,
    magnitude log-uniform over [1e-3, radius] (covers both the |A|^2 and
    |A|^p regimes of the monotonicity bound).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if radius <= _MAGNITUDE_FLOOR:
        raise ValueError("radius must exceed the 1e-3 magnitude floor")
    xyz = rng.standard_normal((3, count))
    xyz /= np.linalg.norm(xyz, axis=0, keepdims=True)
    mags = np.exp(rng.uniform(math.log(_MAGNITUDE_FLOOR), math.log(radius), size=count))
    a = np.zeros((2, 2, count))
    for basis, weight in zip(_E_SYM, xyz):
        a += basis[:, :, None] * (weight * mags)[None, None, :]
    return a


@dataclass(frozen=True)
class GrowthReport:
    c_fit: float
    c_tilde_fit: float
    violations: int
    samples: int


@dataclass(frozen=True)
class MonotonicityReport:
    nu_fit: float
    violations: int
    pairs: int


@dataclass(frozen=True)
class CoercivityReport:
    nu_fit: float
    violations: int
    samples: int


@dataclass(frozen=True)
class PotentialReport:
    max_gradient_rel_err: float
    c1_fit: float
    c2_fit: float
    violations: int


def growth_fit(fn: Callable, p_exp: float, samples: np.ndarray) -> GrowthReport:
    """Fit (c_tilde, c) in |f(A)| <= c_tilde + c|A|^(p-1) on explicit samples.

    c is fitted on samples with |A| >= 1, c_tilde absorbs the small-|A|
    excess; with that split the bound holds on all finite samples by
    construction, so violations count non-finite values and f(0) != 0.
    """
    mags = np.sqrt(_frobenius_sq(samples))
    fvals = fn(samples)
    fmags = np.sqrt(_frobenius_sq(fvals))
    violations = int(np.count_nonzero(~np.isfinite(fmags)))
    f0 = fn(np.zeros((2, 2, 1)))
    if not np.all(np.isfinite(f0)) or float(np.max(np.abs(f0))) != 0.0:
        violations += 1
    finite = np.isfinite(fmags)
    mags, fmags = mags[finite], fmags[finite]
    large = mags >= 1.0
    c_fit = float(np.max(fmags[large] / mags[large] ** (p_exp - 1.0))) if np.any(large) else 0.0
    small = ~large
    if np.any(small):
        excess = fmags[small] - c_fit * mags[small] ** (p_exp - 1.0)
        c_tilde_fit = max(0.0, float(np.max(excess)))
    else:
        c_tilde_fit = 0.0
    return GrowthReport(c_fit, c_tilde_fit, violations, int(samples.shape[-1]))


def verify_growth(model: Law, sample_count: int, radius: float, seed: int = 0) -> GrowthReport:
    """Sample the growth bound |f(A)| <= c_tilde + c|A|^(p-1)."""
    fn, p_exp = _as_law(model)
    rng = np.random.Generator(np.random.Philox(seed))
    samples = sample_symmetric_matrices(rng, sample_count, radius)
    return growth_fit(fn, p_exp, samples)


def monotonicity_fit(fn: Callable, p_exp: float, a: np.ndarray, b: np.ndarray) -> MonotonicityReport:
    """Infimum of (f(A)-f(B)):(A-B) / (|A-B|^2 + |A-B|^p) over explicit pairs."""
    diff = a - b
    dmag2 = _frobenius_sq(diff)
    keep = dmag2 > 0.0  # A = B gives 0/0 and is skipped
    numer = np.sum((fn(a) - fn(b)) * diff, axis=(0, 1))[keep]
    dmag = np.sqrt(dmag2[keep])
    denom = dmag**2 + dmag**p_exp
    ratios = numer / denom
    violations = int(np.count_nonzero(~np.isfinite(ratios) | (ratios <= 0.0)))
    nu_fit = float(np.min(ratios)) if ratios.size else math.inf
    return MonotonicityReport(nu_fit, violations, int(ratios.size))


def verify_monotonicity(model: Law, sample_count: int, radius: float, seed: int = 0) -> MonotonicityReport:
    """Sample the strong monotonicity bound; nu_fit must come out positive."""
    fn, p_exp = _as_law(model)
    if p_exp < 2.0:
        raise ValueError("monotonicity verification requires p >= 2")
    rng = np.random.Generator(np.random.Philox(seed))
    a = sample_symmetric_matrices(rng, sample_count, radius)
    b = sample_symmetric_matrices(rng, sample_count, radius)
    return monotonicity_fit(fn, p_exp, a, b)


def coercivity_fit(fn: Callable, p_exp: float, samples: np.ndarray) -> CoercivityReport:
    mag = np.sqrt(_frobenius_sq(samples))
    keep = mag > 0.0
    numer = np.sum(fn(samples) * samples, axis=(0, 1))[keep]
    ratios = numer / mag[keep] ** p_exp
    violations = int(np.count_nonzero(~np.isfinite(ratios) | (ratios <= 0.0)))
    nu_fit = float(np.min(ratios)) if ratios.size else math.inf
    return CoercivityReport(nu_fit, violations, int(ratios.size))


def verify_coercivity(model: Law, sample_count: int, radius: float, seed: int = 0) -> CoercivityReport:
    """Sample the coercivity bound f(A):A >= nu |A|^p."""
    fn, p_exp = _as_law(model)
    rng = np.random.Generator(np.random.Philox(seed))
    samples = sample_symmetric_matrices(rng, sample_count, radius)
    return coercivity_fit(fn, p_exp, samples)


def verify_potential(model: ConstitutiveModel, sample_count: int, seed: int = 0,
                     radius: float = 10.0) -> PotentialReport:
    """Check that f is the gradient of its closed-form potential.

    Central finite differences of U must reproduce f to 1e-6 relative at the
    sampled points, and the finite-difference Hessian quadratic form is
    fitted against C1 (1+|eta|)^(p-2) |xi|^2 from below and
    C2 (1+|eta|)^(p-2) entrywise from above; violations count nonpositive
    quadratic forms and gradient mismatches.
    """
    p = model.p_exp
    rng = np.random.Generator(np.random.Philox(seed))
    etas = sample_symmetric_matrices(rng, sample_count, radius)
    xis = sample_symmetric_matrices(rng, sample_count, 1.001)
    xis /= np.sqrt(_frobenius_sq(xis))[None, None, :]

    violations = 0

    # gradient check: dU/deta_ij == f_ij by central differences
    h_grad = 1e-6
    fvals = f_of_D(etas, model)
    grad_fd = np.empty_like(etas)
    for i in range(2):
        for j in range(2):
            bump = np.zeros((2, 2, 1))
            bump[i, j, 0] = h_grad
            grad_fd[i, j] = (
                potential(etas + bump, model) - potential(etas - bump, model)
            ) / (2.0 * h_grad)
    scale = np.maximum(np.sqrt(_frobenius_sq(fvals)), 1e-8)
    grad_err = np.sqrt(_frobenius_sq(grad_fd - fvals)) / scale
    max_grad_err = float(np.max(grad_err))
    violations += int(np.count_nonzero(grad_err > 1e-6))

    # Hessian bounds: directional second differences of U along xi give the
    # quadratic form; entrywise second differences of f give the components
    h = 1e-4  # balances O(h^2) truncation against eps/h^2 roundoff in U
    quad = (
        potential(etas + h * xis, model)
        - 2.0 * potential(etas, model)
        + potential(etas - h * xis, model)
    ) / h**2
    weight = (1.0 + np.sqrt(_frobenius_sq(etas))) ** (p - 2.0)
    c1_fit = float(np.min(quad / weight))
    violations += int(np.count_nonzero(quad <= 0.0))

    c2_fit = 0.0
    for k in range(2):
        for l in range(2):
            bump = np.zeros((2, 2, 1))
            bump[k, l, 0] = h
            df = (f_of_D(etas + bump, model) - f_of_D(etas - bump, model)) / (2.0 * h)
            c2_fit = max(c2_fit, float(np.max(np.abs(df) / weight[None, None, :])))

    return PotentialReport(max_grad_err, c1_fit, c2_fit, violations)
