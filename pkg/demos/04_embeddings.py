"""Piece maps, compatibility and the Engel obstruction.

On step-two groups every piece of a lattice covering is the image of the
unit ball under an affine map, and the maps of intersecting pieces are
uniformly compatible.  On the Engel group (step three) left translation is
no longer affine.  Freezing the Jacobian of the printed law makes the
compatibility ratio blow up polynomially.
"""

from alphamod import QuasiNorm, builtin, default_lattice
from alphamod import covering as C
from alphamod.embeddings import compatibility_sup, engel_blowup_witness, piece_affine_map

H = builtin("heisenberg(1)")
nm = QuasiNorm(H)
N = default_lattice(H)

A = piece_affine_map(N, nm, 0.5, 2.1, (1, 0, 0))
print("piece map for k = (1, 0, 0), alpha = 1/2:\n", A.linear.round(3), "\noffset", A.offset)

for W in (4.0, 8.0):
    cov = C.build_uniform(H, N, nm, 1.66, window=W)
    print(f"uniform covering, window {W}: compatibility sup {compatibility_sup(cov):.4f}")
print("dyadic covering: compatibility sup", compatibility_sup(C.build_besov(H, nm, 8)))

w = engel_blowup_witness("paper_law")
print("Engel printed law along (12n, 2n, n, n):")
for n, v in zip(w.n_list, w.values):
    print(f"  n = {n:3d}  ||T_k' T_k^-1|| = {v:.4g}")
print(f"log-log slope {w.slope:.3f}")
print("full BCH second differences:", [round(v, 4) for v in engel_blowup_witness("full_bch").values])
