"""Certify a sparse surrogate and inspect the direction it induces.

A surrogate (gamma_sharp, lambda_sharp) is eligible when the sup-norm of
Sigma_minus (gamma_sharp - gamma0) is at most lambda_sharp and the product
lambda_sharp * ||gamma_sharp||_1 is small.  The induced direction has
first entry theta11_sharp <= theta11, and the gap is the achievable
variance improvement over the classical precision-matrix direction.
"""

import numpy as np

from sharplasso import (augmented_sigma, certify_pair, sharp_direction,
                        sparsity_index)

# a model whose projection coefficients decay quickly: the sparse head of
# gamma0 is a natural surrogate for the full vector
m = 40
gamma0 = 0.3 * 0.5 ** np.arange(m)
model = augmented_sigma(np.eye(m), gamma0)
print(f"model: p = {model.p}, theta11 = {model.theta11:.6f}")

# truncate gamma0 after its first k entries and certify the truncation
for k in (2, 4, 8):
    gamma_sharp = np.where(np.arange(m) < k, gamma0, 0.0)
    residual = np.max(np.abs(model.sigma_minus @ (gamma_sharp - gamma0)))
    pair = certify_pair(model, gamma_sharp, residual + 1e-12)
    direction = sharp_direction(model, pair)
    print(f"k = {k}: lambda_sharp = {pair.lambda_sharp:.5f}, "
          f"l1 product = {pair.l1_product:.5f}, "
          f"theta11_sharp = {direction.theta11_sharp:.6f}, "
          f"improvement = {direction.improvement:.6f}")

print("sparsity index of gamma0:", f"{sparsity_index(gamma0):.4f}")
print("sparsity index of the k = 4 head:",
      f"{sparsity_index(np.where(np.arange(m) < 4, gamma0, 0.0)):.4f}")
