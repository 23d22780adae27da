"""Dense matrices over GF(q): rank, reduction, random generation, counting.

Entries are stored as a read-only uint8 array of element indices; all row
operations go through the field's lookup tables, so the same kernel serves
prime and extension fields.  Matrices are immutable values and every
operation returns a fresh matrix.
"""

from __future__ import annotations

from fractions import Fraction
from typing import IO, Iterable, Sequence

import numpy as np

from .gf import FieldSpec, Fq, make_field

IndexSet = Sequence[int]


class IndexOutOfRange(ValueError):
    """An index set addresses a row or column that does not exist."""


class NotSquare(ValueError):
    """Operation defined only for square matrices."""


class SingularBasis(ValueError):
    """The matrix expected to be invertible has rank below its size."""


class MatFq:
    """An immutable rows x cols matrix over a fixed GF(q)."""

    __slots__ = ("field", "entries")

    def __init__(self, field: FieldSpec, entries: np.ndarray):
        entries = np.ascontiguousarray(entries, dtype=np.uint8)
        if entries.ndim != 2:
            raise ValueError(f"entries must be 2-dimensional, got shape {entries.shape}")
        if entries.size and int(entries.max()) >= field.q:
            raise ValueError(f"entry index {int(entries.max())} outside GF({field.q})")
        entries.setflags(write=False)
        self.field = field
        self.entries = entries

    @classmethod
    def from_rows(cls, field: FieldSpec, rows: Iterable[Iterable[int | Fq]]) -> MatFq:
        data = [[v.value if isinstance(v, Fq) else int(v) for v in row] for row in rows]
        if data:
            width = len(data[0])
            if any(len(r) != width for r in data):
                raise ValueError("rows have unequal lengths")
        arr = np.array(data, dtype=np.uint8) if data else np.zeros((0, 0), dtype=np.uint8)
        if arr.ndim == 1:  # empty rows
            arr = arr.reshape(len(data), 0)
        return cls(field, arr)

    @classmethod
    def zeros(cls, field: FieldSpec, rows: int, cols: int) -> MatFq:
        return cls(field, np.zeros((rows, cols), dtype=np.uint8))

    @classmethod
    def identity(cls, field: FieldSpec, n: int) -> MatFq:
        return cls(field, np.eye(n, dtype=np.uint8))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def entry(self, i: int, j: int) -> Fq:
        return Fq(int(self.entries[i, j]), self.field)

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.entries[:, j])

    def __eq__(self, other):
        return (
            isinstance(other, MatFq)
            and other.field == self.field
            and other.entries.shape == self.entries.shape
            and bool(np.array_equal(other.entries, self.entries))
        )

    def __hash__(self):
        return hash((self.field.q, self.entries.shape, self.entries.tobytes()))

    def __repr__(self):
        body = "; ".join(" ".join(str(int(v)) for v in row) for row in self.entries)
        return f"MatFq({self.field!r}, [{body}])"


def _check_index_set(idx: IndexSet, bound: int, what: str) -> tuple[int, ...]:
    out = tuple(int(i) for i in idx)
    for i in out:
        if not 0 <= i < bound:
            raise IndexOutOfRange(f"{what} index {i} outside [0, {bound})")
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate {what} index in {out}")
    return out


def _eliminate(a: np.ndarray, field: FieldSpec, *, reduced: bool = False, stop_col: int | None = None) -> tuple[int, list[int]]:
    """In-place row reduction of a writable index array.

    Pivots on the first nonzero entry of each column (deterministic).
    Columns at and beyond stop_col are carried along without being
    pivoted, which is how augmented systems are solved.  Returns the rank
    and the pivot column list.
    """
    rows, cols = a.shape
    limit = cols if stop_col is None else stop_col
    add_t, mul_t = field._add, field._mul
    neg_t, inv_t = field._neg, field._inv
    r = 0
    pivots: list[int] = []
    for c in range(limit):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        piv = int(a[r, c])
        if piv != 1:
            a[r] = mul_t[inv_t[piv], a[r]]
        if reduced:
            sel = np.flatnonzero(a[:, c])
            sel = sel[sel != r]
        else:
            sel = r + 1 + np.flatnonzero(a[r + 1:, c])
        if sel.size:
            factors = a[sel, c]
            a[sel] = add_t[a[sel], mul_t[neg_t[factors][:, None], a[r][None, :]]]
        pivots.append(c)
        r += 1
    return r, pivots


def _det2(e, field: FieldSpec) -> int:
    a, b = int(e[0, 0]), int(e[0, 1])
    c, d = int(e[1, 0]), int(e[1, 1])
    return field.add_idx(field.mul_idx(a, d), field.neg_idx(field.mul_idx(b, c)))


def _det3(e, field: FieldSpec) -> int:
    out = 0
    for j, sign in ((0, False), (1, True), (2, False)):
        a = int(e[0, j])
        if not a:
            continue
        cols = [c for c in (0, 1, 2) if c != j]
        minor = field.add_idx(
            field.mul_idx(int(e[1, cols[0]]), int(e[2, cols[1]])),
            field.neg_idx(field.mul_idx(int(e[1, cols[1]]), int(e[2, cols[0]]))),
        )
        term = field.mul_idx(a, minor)
        if sign:
            term = field.neg_idx(term)
        out = field.add_idx(out, term)
    return out


def _rank_of(entries: np.ndarray, field: FieldSpec) -> int:
    # scalar determinants beat the vectorized kernel on tiny matrices,
    # which dominate the Monte Carlo inner loops
    shape = entries.shape
    if shape == (1, 1):
        return int(int(entries[0, 0]) != 0)
    if shape == (2, 2):
        if _det2(entries, field):
            return 2
        return int(bool(entries.any()))
    if shape == (3, 3) and _det3(entries, field):
        return 3
    work = entries.copy()
    r, _ = _eliminate(work, field)
    return r


def rank(m: MatFq) -> int:
    """Rank via Gaussian elimination; the input is not modified."""
    return _rank_of(m.entries, m.field)


def submatrix(a: MatFq, row_idx: IndexSet, col_idx: IndexSet) -> MatFq:
    """Rows and columns of a, in the order the index sets give them."""
    s = _check_index_set(row_idx, a.rows, "row")
    t = _check_index_set(col_idx, a.cols, "column")
    picked = a.entries[np.ix_(s, t)] if s and t else np.zeros((len(s), len(t)), dtype=np.uint8)
    return MatFq(a.field, picked)


def sequential_full_rank(a: MatFq) -> bool:
    """True iff every leading principal submatrix is nonsingular.

    Runs elimination without row swaps: the i-th leading minor is the
    product of the first i pivots, so a zero pivot is exactly a singular
    leading block.
    """
    if a.rows != a.cols:
        raise NotSquare(f"sequential full rank needs a square matrix, got {a.rows}x{a.cols}")
    k = a.rows
    if k == 0:
        return True
    ent = a.entries
    if k <= 3:
        if not int(ent[0, 0]):
            return False
        if k == 1:
            return True
        if not _det2(ent[:2, :2], a.field):
            return False
        return k == 2 or bool(_det3(ent, a.field))
    work = a.entries.copy()
    field = a.field
    add_t, mul_t = field._add, field._mul
    neg_t, inv_t = field._neg, field._inv
    for i in range(k):
        piv = int(work[i, i])
        if piv == 0:
            return False
        if piv != 1:
            work[i, i:] = mul_t[inv_t[piv], work[i, i:]]
        sel = i + 1 + np.flatnonzero(work[i + 1:, i])
        if sel.size:
            factors = work[sel, i]
            work[np.ix_(sel, range(i, k))] = add_t[
                work[np.ix_(sel, range(i, k))],
                mul_t[neg_t[factors][:, None], work[i, i:][None, :]],
            ]
    return True


def nonsingular_count(k: int, q: int) -> int:
    """Number of nonsingular k x k matrices over GF(q), exactly."""
    if k < 0 or q < 2:
        raise ValueError("need k >= 0 and q >= 2")
    out = 1
    for i in range(1, k + 1):
        out *= q**k - q ** (i - 1)
    return out


def alpha(k: int, q: int) -> Fraction:
    """Probability that a uniform random k x k matrix over GF(q) is nonsingular."""
    if k < 0 or q < 2:
        raise ValueError("need k >= 0 and q >= 2")
    out = Fraction(1)
    for i in range(1, k + 1):
        out *= 1 - Fraction(1, q**i)
    return out


def beta(k: int, q: int) -> Fraction:
    """Probability that a uniform random k x k matrix has sequential full rank."""
    if k < 0 or q < 2:
        raise ValueError("need k >= 0 and q >= 2")
    return (1 - Fraction(1, q)) ** k


def random_matrix(rng: np.random.Generator, m: int, n: int, field: FieldSpec) -> MatFq:
    """m x n matrix with i.i.d. uniform entries, deterministic in rng."""
    if m < 0 or n < 0:
        raise ValueError("matrix dimensions must be nonnegative")
    ent = rng.integers(0, field.q, size=(m, n), dtype=np.uint8)
    return MatFq(field, ent)


def random_full_rank(rng: np.random.Generator, n: int, field: FieldSpec) -> MatFq:
    """Uniform draw from the nonsingular n x n matrices over GF(q).

    Rejection sampling on whole matrices: a uniform matrix conditioned on
    full rank is uniform on the full-rank set.  The acceptance probability
    is at least 0.288 for every q >= 2, so the expected number of draws is
    below 3.5.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    while True:
        ent = rng.integers(0, field.q, size=(n, n), dtype=np.uint8)
        if _rank_of(ent, field) == n:
            return MatFq(field, ent)


def reduce_against(v: MatFq, u: MatFq) -> MatFq:
    """Row-reduce the concatenation [V | U] until V becomes the identity.

    Returns the transformed right block U' = V^-1 U.  Row operations act on
    whole rows of the concatenation, so a set of columns of [V | U] is
    independent exactly when the same columns of [I | U'] are.
    """
    if v.rows != v.cols:
        raise NotSquare(f"left block must be square, got {v.rows}x{v.cols}")
    if u.rows != v.rows:
        raise ValueError(f"row counts differ: {v.rows} vs {u.rows}")
    if v.field != u.field:
        raise ValueError("blocks live over different fields")
    n = v.rows
    aug = np.hstack([v.entries, u.entries]).copy()
    r, _ = _eliminate(aug, v.field, reduced=True, stop_col=n)
    if r < n:
        raise SingularBasis(f"left block has rank {r} < {n}")
    return MatFq(v.field, aug[:, n:])


def _inverse_entries(entries: np.ndarray, field: FieldSpec) -> np.ndarray:
    n = entries.shape[0]
    aug = np.hstack([entries, np.eye(n, dtype=np.uint8)]).copy()
    r, _ = _eliminate(aug, field, reduced=True, stop_col=n)
    if r < n:
        raise SingularBasis(f"matrix has rank {r} < {n}")
    return aug[:, n:]


# --- text format: first line "q m n", then m rows of element indices ---

def write_matrix_text(m: MatFq, fh: IO[str]) -> None:
    fh.write(f"{m.field.q} {m.rows} {m.cols}\n")
    for row in m.entries:
        fh.write(" ".join(str(int(v)) for v in row) + "\n")


def read_matrix_text(fh: IO[str]) -> MatFq:
    header = fh.readline().split()
    if len(header) != 3:
        raise ValueError(f"matrix header must be 'q m n', got {header!r}")
    q, m, n = (int(x) for x in header)
    field = make_field(q)
    rows = []
    for i in range(m):
        parts = fh.readline().split()
        if len(parts) != n:
            raise ValueError(f"row {i} has {len(parts)} entries, expected {n}")
        row = [int(x) for x in parts]
        for v in row:
            if not 0 <= v < q:
                raise ValueError(f"matrix entry {v} outside GF({q})")
        rows.append(row)
    arr = np.array(rows, dtype=np.uint8) if rows else np.zeros((0, n), dtype=np.uint8)
    return MatFq(field, arr.reshape(m, n))
