"""Shared reference oracles, deliberately independent of the library kernels.

The determinant here is Laplace expansion over verified scalar field ops,
so rank and independence answers do not reuse the vectorized elimination
they are checking.
"""

from __future__ import annotations

from itertools import combinations

from fqexchange.gf import FieldSpec


def ref_det(entries, field: FieldSpec) -> int:
    """Determinant by cofactor expansion; entries is a list of row lists."""
    n = len(entries)
    if n == 0:
        return 1
    if n == 1:
        return entries[0][0] % field.q if field.e == 1 else entries[0][0]
    total = 0
    sign_flip = False
    for j in range(n):
        a = entries[0][j]
        if a:
            minor = [[row[c] for c in range(n) if c != j] for row in entries[1:]]
            term = field.mul_idx(a, ref_det(minor, field))
            if sign_flip:
                term = field.neg_idx(term)
            total = field.add_idx(total, term)
        sign_flip = not sign_flip
    return total


def ref_rank(entries, field: FieldSpec) -> int:
    """Largest r with a nonsingular r x r submatrix; fine for tiny matrices."""
    rows = len(entries)
    cols = len(entries[0]) if rows else 0
    for r in range(min(rows, cols), 0, -1):
        for rsel in combinations(range(rows), r):
            for csel in combinations(range(cols), r):
                sub = [[entries[i][j] for j in csel] for i in rsel]
                if ref_det(sub, field) != 0:
                    return r
    return 0


def ref_is_basis(columns, field: FieldSpec) -> bool:
    """columns: list of column tuples; True iff they form a square nonsingular matrix."""
    n = len(columns)
    rows = [[columns[j][i] for j in range(n)] for i in range(n)]
    return ref_det(rows, field) != 0
