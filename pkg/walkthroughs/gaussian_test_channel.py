"""
Gaussian sources: additive-noise releases are optimal
=====================================================

Releasing X1 + N(0, Q) traces the closed-form leakage-distortion curve.
"""

import numpy as np

import interpriv.gaussian as gs

rng = np.random.default_rng(0)
src = gs.GaussianSource.random(rng, cond=20)
top = gs.conditional_variance(src, "X1", ("X2",))
print(f"var(X1 | X2) = {top:.4f}; distortions beyond this need no release\n")

print("      Q        D(Q)    L(Q) bits   closed form")
for Q in np.logspace(-2, 2, 9):
    D, L = gs.test_channel(src, Q)
    print(f"{Q:9.3f}  {D:9.5f}  {L:9.6f}   {gs.closed_form_leakage(src, D, D)[0]:9.6f}")

# inverse direction: find the noise level for a distortion target
Q = gs.solve_test_channel(src, 0.5 * top)
print(f"\nnoise for D = var(X1|X2)/2: Q = {Q:.6f}, D(Q) = {gs.test_channel(src, Q)[0]:.6f}")
