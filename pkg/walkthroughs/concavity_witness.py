"""
When does a second round help under log-loss?
=============================================

For the binary family X2 ~ Ber(q), X1 = X2 xor Ber(p), Y1 = X1 xor Ber(r),
a second round can only help if the one-round privacy eta (entropy of the
private data left unexplained) is not concave in the law of X2.  We bracket
eta at q, 1-q and 1/2 with an achievable channel and a dual upper bound.
"""

import numpy as np

from interpriv.analysis import (bound_report, concavity_witness, eta_b2_envelope,
                                eta_one_round_lp, gamma_fn, bsc_chain_source)

q = 0.48
b = bound_report(0.7, q, 0.23, 0.1, 0.6)
print(f"gamma = {b.gamma:.4f} bits, C = {b.C:.4f}, D + H(r) = {b.d_plus_hr:.4f}")

print("\n  p     r     eta(1/2)    mean(eta(q), eta(1-q))   gap       violated")
for p in (0.7, 0.9):
    D = gamma_fn(p, q, 0.5, 0.1, 0.6)
    for r in (0.1, 0.23, 0.5):
        w = concavity_witness(p, r, q, D)
        print(f"{p:4}  {r:4}   {w.lhs:.7f}   {w.rhs:.7f}                {w.margin:+.2e}  {w.violated}")

# a two-round mechanism started by B realises the gap
p, r = 0.9, 0.1
D = gamma_fn(p, q, 0.5, 0.1, 0.6)
one = eta_one_round_lp(bsc_chain_source(p, r, q), D).value
two = eta_b2_envelope(p, r, q, D, np.linspace(0, 1, 11), np.linspace(0, 1, 11), mesh=200, passes=2)
print(f"\np={p}, r={r}: one round eta {one:.6f}, two rounds (B first) at least {two:.6f}")
