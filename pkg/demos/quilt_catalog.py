"""Transplantable pairs on seven sheets and the quilt they form.

A pair of involution triples is transplantable when every word in the three
letters has the same number of fixed points on both sides.  Braiding moves
pairs around a finite graph, the quilt; this script walks it and prints a
transplantation matrix.
"""

from orbitrace import permquilt as pq

seed = pq.TranspPair(
    pq.InvolutionTriple.from_cycles(7, "(3 4)(5 6)", "(2 3)(5 7)", "(1 2)(4 5)"),
    pq.InvolutionTriple.from_cycles(7, "(2 3)(6 7)", "(2 4)(5 6)", "(1 2)(3 5)"),
)

print("seed pair:")
print(pq.format_pair(seed))
print("transplantable:", pq.is_transplantable(seed))
print("conjugate by a relabelling:", pq.is_permutation_isomorphic(seed))

T = pq.transplantation_matrix(seed)
print("\ntransplantation matrix (intertwines every word):")
for row in T:
    print("  " + " ".join(str(v) for v in row))

quilt = pq.explore_quilt(seed)
print(f"\nquilt: {len(quilt)} pairs up to relabelling and letter permutation")
for p in quilt.pairs():
    print("  ", " | ".join(p.left.to_cycles()), "  vs  ", " | ".join(p.right.to_cycles()))

quilts = pq.enumerate_pairs(7)
print(f"\nexhaustive search on 7 sheets: {len(quilts)} quilt(s), "
      f"group order {quilts[0].group_order}")
