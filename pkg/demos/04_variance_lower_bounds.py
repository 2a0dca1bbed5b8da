"""Class lower bounds for the asymptotic variance of the first coefficient.

The bound is the inverse of a constrained residual-variance minimum over
directions in the class budget; it interpolates between 1 (budget zero)
and theta11 (unconstrained).  A certified surrogate's variance sits
between the bound at its own l1 norm and theta11, up to the eligibility
slack.
"""

import numpy as np

from sharplasso import (ModelClass, augmented_sigma, certify_pair, crlb_l0,
                        crlb_l1, crlb_compare, sharp_direction)

m = 12
gamma0 = 0.3 * 0.6 ** np.arange(m)
model = augmented_sigma(np.eye(m), gamma0)
full = float(np.abs(gamma0).sum())
print(f"theta11 = {model.theta11:.6f}, ||gamma0||_1 = {full:.4f}")

print("budget fraction -> l1 bound:")
for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
    result = crlb_l1(model, frac * full)
    print(f"  {frac:4.2f} -> {result.bound:.6f}  ({result.method})")

print("support size -> l0 bound:")
for s in (0, 1, 3, m):
    print(f"  {s:3d} -> {crlb_l0(model, s).bound:.6f}")

# compare a truncated surrogate against the class bound
gamma_sharp = np.where(np.arange(m) < 3, gamma0, 0.0)
residual = np.max(np.abs(model.sigma_minus @ (gamma_sharp - gamma0)))
pair = certify_pair(model, gamma_sharp, residual + 1e-12)
direction = sharp_direction(model, pair)
spec = ModelClass("l0", 0.0, 3, 400)
comparison = crlb_compare(model, pair, spec)
print(f"surrogate variance = {direction.theta11_sharp:.6f}, "
      f"l0 bound at s = 3: {comparison.bound:.6f}, "
      f"verdict = {comparison.verdict}")
