"""Sampling the structural bounds on the stress-diffusion law f.

The existence theory needs a growth bound, strong monotonicity, and
coercivity from f, plus (for the standard examples) a convex potential with
controlled Hessian.  This script fits the constants for both example laws

    f(A) = (1 + |A|)^(p-2) A      and      f(A) = (1 + |A|^2)^((p-2)/2) A

by sampling random symmetric matrices, confirms the linear law reproduces
its constants exactly, and shows that a deliberately non-monotone law is
caught with negative fitted nu.
"""

import numpy as np

from oldroyd2d import (
    ConstitutiveModel,
    verify_coercivity,
    verify_growth,
    verify_monotonicity,
    verify_potential,
)

SAMPLES = 10_000
RADIUS = 10.0


def report(name, model):
    growth = verify_growth(model, SAMPLES, RADIUS)
    mono = verify_monotonicity(model, SAMPLES, RADIUS)
    coer = verify_coercivity(model, SAMPLES, RADIUS)
    pot = verify_potential(model, 2000)
    print(f"{name}:")
    print(f"  growth        c = {growth.c_fit:.4f}, c_tilde = {growth.c_tilde_fit:.4f}, "
          f"violations = {growth.violations}")
    print(f"  monotonicity  nu_fit = {mono.nu_fit:.4f}, violations = {mono.violations}")
    print(f"  coercivity    nu_fit = {coer.nu_fit:.4f}, violations = {coer.violations}")
    print(f"  potential     grad err = {pot.max_gradient_rel_err:.2e}, "
          f"C1 = {pot.c1_fit:.4f}, C2 = {pot.c2_fit:.4f}, violations = {pot.violations}")


def main() -> None:
    report("additive power law, p = 3",
           ConstitutiveModel("power_additive", 3.0, 0.0, 2.0, "S1"))
    report("quadratic power law, p = 3",
           ConstitutiveModel("power_quadratic", 3.0, 0.0, 2.0, "S1"))
    report("linear law, nu0 = 0.7 (constants are exact)",
           ConstitutiveModel("linear", 2.0, 0.0, 2.0, "S2", nu0=0.7))

    # a tabulated radial law whose profile dips is not monotone; the verifier
    # must find pairs with a negative monotonicity ratio
    knots = np.array([0.0, 1.0, 2.0, 3.0, 50.0])
    radial = np.array([0.0, 1.0, 0.3, 2.0, 80.0])

    def dipping(a):
        mag = np.sqrt(np.sum(a * a, axis=(0, 1)))
        scale = np.interp(mag, knots, radial) / np.maximum(mag, 1e-300)
        return scale[None, None, ...] * a

    bad = verify_monotonicity((dipping, 2.0), SAMPLES, 5.0)
    print("tabulated dipping law (planted counterexample):")
    print(f"  monotonicity  nu_fit = {bad.nu_fit:.4f}, violations = {bad.violations}  "
          "<- correctly rejected")


if __name__ == "__main__":
    main()
