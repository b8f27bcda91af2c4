"""Spectral relations among flat orbifolds.

The hexagonal torus quotients H2, H3, H6 (cone orders 2222, 333, 236) and the
square torus quotients T1, T2, T4 satisfy linear relations between their
spectra.  Each spectrum is computed exactly by averaging over the point group.
The conepoint weights (n^2 - 1)/n obey the same relations.
"""

from orbitrace import flatspec as fs

for rel in ("H2+H6=2H3", "H1+H3+H6=3H2", "T1+2T4=3T2", "T1=T2"):
    report = fs.verify_relation(*fs.parse_relation(rel), 20000)
    print(f"{rel:>14}: {report}")

print()
totals = {}
for sig in ("2222", "333", "244", "236"):
    totals[sig] = fs.feature_total(fs.parse_signature(sig))
    print(f"conepoint weight of {sig}: {totals[sig]}")
print("2222 + 236 = 2 * 333:", totals["2222"] + totals["236"] == 2 * totals["333"])
print("333 + 236 = 3 * 2222:", totals["333"] + totals["236"] == 3 * totals["2222"])
print("2 * 244 = 3 * 2222:", 2 * totals["244"] == 3 * totals["2222"])
