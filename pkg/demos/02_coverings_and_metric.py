"""Coverings of the Heisenberg group and their intersection metric.

A uniform covering by translated balls has bounded overlap.  The dyadic
(Besov) covering is also admissible, but its chain metric collapses
distances that are huge in the Euclidean sense: the points (2^m, 0, 0)
and (0, 0, 2^(2m+1)) sit in the same dyadic shell for every m.
"""

import numpy as np

from alphamod import QuasiNorm, builtin, default_lattice
from alphamod import covering as C
from alphamod.metric import build_graph, chain_distance

H = builtin("heisenberg(1)")
nm = QuasiNorm(H)
N = default_lattice(H)

cov = C.build_uniform(H, N, nm, 1.66, window=4.0)
adm = C.admissibility_estimate(cov)
print(f"uniform covering: {len(cov)} pieces, overlap number n_q = {adm.n_q} ({adm.label})")

g = build_graph(cov)
x, y = np.array([0.2, 0.1, 0.0]), np.array([2.5, -1.0, 0.3])
print("chain distance in the uniform covering:", chain_distance(g, x, y))

besov = build_graph(C.build_besov(H, nm, 22))
euclid = build_graph(C.build_besov(builtin("abelian(3)"), QuasiNorm(builtin("abelian(3)"), "euclidean"), 22))
print(" m  Heisenberg  Euclidean")
for m in range(1, 11):
    p, q = [2.0 ** m, 0, 0], [0, 0, 2.0 ** (2 * m + 1)]
    print(f"{m:2d}  {chain_distance(besov, p, q):10d}  {chain_distance(euclid, p, q):9d}")
