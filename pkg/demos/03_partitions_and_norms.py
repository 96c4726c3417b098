"""Partitions of unity and decomposition norms on the line.

On the real line with the integer lattice, the uniform covering by
intervals (k - 1, k + 1) gives the modulation spaces and the covering with
pieces centred at |k| k gives an intermediate (alpha = 1/2) space.  We
build both partitions, check that they sum to one, and compare block norms
of a Gaussian wave packet.
"""

import numpy as np

from alphamod import covering as C
from alphamod import builtin, QuasiNorm
from alphamod.bapu import build_alpha_bapu, validate_bapu
from alphamod.grid import GridSpec
from alphamod.lattice import make_lattice
from alphamod.modnorm import NormParams, alpha_mod_norm, gaussian_packet, schwartz_decay_profile

G = builtin("abelian(1)")
nm = QuasiNorm(G)
Z = make_lattice(G, (1.0,))
grid = GridSpec.make(1, 32.0, 1024)

uni = build_alpha_bapu(C.build_uniform(G, Z, nm, 1.0, window=10.0), grid, 0.6)
half = build_alpha_bapu(C.build_alpha(G, Z, nm, 0.5, 1.3, window=12.0), grid, 1.25)
for name, b in (("uniform", uni), ("alpha = 1/2", half)):
    rep = validate_bapu(b, members=3)
    print(f"{name:12s} members {len(b):3d}  partition error {rep['partition_error']:.1e}  "
          f"max L1 of inverse transforms {rep['l1_max']:.3f}")

f = gaussian_packet(grid, [2.5], 0.8, domain="frequency")
for s in (0.0, 1.0, 2.0):
    a = alpha_mod_norm(f, uni, NormParams(2, 2, s, 0.0)).total
    b = alpha_mod_norm(f, half, NormParams(2, 2, s, 0.5)).total
    print(f"s = {s}: modulation norm {a:.4f}, alpha = 1/2 norm {b:.4f}  (L2 norm {f.l2():.4f})")

prof = schwartz_decay_profile(gaussian_packet(grid, None, 1.0, domain="frequency"), uni)
print("superpolynomial decay of block norms:", prof.passes)
