"""A short tour of the group layer.

We build the first Heisenberg group, check that the truncated BCH product
reproduces the familiar closed form, look at dilations and the homogeneous
quasi-norm, and finally count lattice points in growing balls to see the
homogeneous dimension appear as a growth exponent.
"""

import numpy as np

from alphamod import QuasiNorm, builtin, default_lattice
from alphamod.groups import axiom_residuals, heisenberg_printed_law
from alphamod.lattice import count_ball

H = builtin("heisenberg(1)")
print(f"{H.label}: dimension {H.dim}, homogeneous dimension {H.homogeneous_dim}, step {H.step}")

x, y = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
print("x * y =", H.multiply(x, y), " y * x =", H.multiply(y, x))
print("agrees with the closed form:", np.allclose(H.multiply(x, y), heisenberg_printed_law(x, y)))

res = axiom_residuals(H, 500, seed=0)
print("axiom residuals:", {k: f"{v:.1e}" for k, v in res.items() if k not in ("samples", "seed")})

# dilations are automorphisms and the norm is homogeneous of degree one
nm = QuasiNorm(H)
t = 3.0
lhs = H.dilate(t, H.multiply(x, y))
rhs = H.multiply(H.dilate(t, x), H.dilate(t, y))
print("D_t(xy) = D_t(x) D_t(y):", np.allclose(lhs, rhs))
print("||D_t x|| / ||x|| =", nm.value(H.dilate(t, x + y)) / nm.value(x + y))

# lattice counts grow like R^Q with Q = 4
N = default_lattice(H)
radii = 4.0 * 2.0 ** np.arange(5)
counts = np.array([count_ball(N, nm, R) for R in radii])
slope = np.polyfit(np.log(radii), np.log(counts), 1)[0]
print("ball counts:", counts.tolist(), f"fitted exponent {slope:.2f}")
