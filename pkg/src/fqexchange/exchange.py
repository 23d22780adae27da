"""Basis-level exchange relations over GF(q).

Ordered bases are indexed families of column vectors (one n x n full-rank
matrix), and every replacement is positional: column j of the target is
overwritten by a designated source column.  With positional semantics a
repeated vector simply produces a rank-deficient family, so no set
bookkeeping is needed.

The backtracking searches run in reduced coordinates: row-reducing one
basis to the identity turns every "is this replacement still a basis"
question into a small submatrix rank test, which is also how the
correctness of the reduction is argued (row operations preserve
independence of column subsets).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .gf import FieldSpec
from .matfq import IndexSet, MatFq, _check_index_set, _rank_of, rank, reduce_against


class DimensionMismatch(ValueError):
    """A vector family does not consist of exactly n vectors of length n."""


class SizeMismatch(ValueError):
    """The two exchange sets differ in size."""


class ExhaustedWithoutWitness(RuntimeError):
    """A search guaranteed to succeed found nothing; implementation bug."""


class PreconditionViolated(ValueError):
    """The arrow relation required by the greedy ordering does not hold."""


class GreedyStuck(RuntimeError):
    """The greedy ordering ran out of candidates; implementation bug."""


class OrderedBasis:
    """n vectors of F_q^n with full rank, indexed by column position."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: MatFq, *, validate: bool = True):
        if matrix.rows != matrix.cols:
            raise DimensionMismatch(f"need n vectors of length n, got shape {matrix.shape}")
        if validate and rank(matrix) != matrix.rows:
            raise DimensionMismatch(f"columns have rank below {matrix.rows}")
        self.matrix = matrix

    @classmethod
    def from_columns(cls, field: FieldSpec, columns) -> OrderedBasis:
        arr = np.array([[int(v) for v in col] for col in columns], dtype=np.uint8).T
        return cls(MatFq(field, arr))

    @property
    def n(self) -> int:
        return self.matrix.rows

    @property
    def field(self) -> FieldSpec:
        return self.matrix.field

    def column(self, j: int) -> tuple[int, ...]:
        return self.matrix.column(j)

    def __eq__(self, other):
        return isinstance(other, OrderedBasis) and other.matrix == self.matrix

    def __hash__(self):
        return hash(("OrderedBasis", self.matrix))

    def __repr__(self):
        return f"OrderedBasis({self.matrix!r})"


@dataclass(frozen=True)
class ExchangeInstance:
    """A basis pair with one exchange set marked in each basis."""

    b1: OrderedBasis
    b2: OrderedBasis
    x1: tuple[int, ...]
    x2: tuple[int, ...]

    def __post_init__(self):
        if self.b1.n != self.b2.n or self.b1.field != self.b2.field:
            raise DimensionMismatch("bases must share dimension and field")
        object.__setattr__(self, "x1", _check_index_set(self.x1, self.b1.n, "x1"))
        object.__setattr__(self, "x2", _check_index_set(self.x2, self.b2.n, "x2"))
        if len(self.x1) != len(self.x2):
            raise SizeMismatch(f"|x1| = {len(self.x1)} but |x2| = {len(self.x2)}")

    @property
    def k(self) -> int:
        return len(self.x1)


@dataclass(frozen=True)
class SerialCertificate:
    """Orderings of the two exchange sets whose prefixes all swap to bases.

    sigma lists positions of the first basis, tau positions of the second;
    step i swaps the first i entries of sigma against the first i of tau,
    in both directions.
    """

    sigma: tuple[int, ...]
    tau: tuple[int, ...]

    def to_text(self) -> str:
        s = " ".join(str(i) for i in self.sigma)
        t = " ".join(str(j) for j in self.tau)
        return f"sigma: {s} / tau: {t}"

    @classmethod
    def from_text(cls, text: str) -> SerialCertificate:
        left, _, right = text.partition("/")
        if not left.strip().startswith("sigma:") or not right.strip().startswith("tau:"):
            raise ValueError(f"malformed certificate text: {text!r}")
        sigma = tuple(int(x) for x in left.split(":", 1)[1].split())
        tau = tuple(int(x) for x in right.split(":", 1)[1].split())
        return cls(sigma, tau)


def is_basis(family: MatFq) -> bool:
    """True iff the n columns have rank n; repeated columns fail."""
    if family.rows != family.cols:
        raise DimensionMismatch(f"need n vectors of length n, got shape {family.shape}")
    return rank(family) == family.rows


def _replaced(bto: OrderedBasis, xto, bfrom: OrderedBasis, xfrom) -> np.ndarray:
    out = bto.matrix.entries.copy()
    if len(xto):
        out[:, list(xto)] = bfrom.matrix.entries[:, list(xfrom)]
    return out


def arrow(bfrom: OrderedBasis, xfrom: IndexSet, bto: OrderedBasis, xto: IndexSet) -> bool:
    """Does replacing bto's columns at xto by bfrom's columns at xfrom give a basis?"""
    xfrom = _check_index_set(xfrom, bfrom.n, "source")
    xto = _check_index_set(xto, bto.n, "target")
    if len(xfrom) != len(xto):
        raise SizeMismatch(f"|xfrom| = {len(xfrom)} but |xto| = {len(xto)}")
    return _rank_of(_replaced(bto, xto, bfrom, xfrom), bto.field) == bto.n


def symmetric_partners(b1: OrderedBasis, x: int, b2: OrderedBasis) -> tuple[int, ...]:
    """All positions y of b2 such that x and y exchange symmetrically.

    Guaranteed nonempty; an empty result would indicate a bug.
    """
    _check_index_set((x,), b1.n, "x")
    return tuple(
        y
        for y in range(b2.n)
        if arrow(b2, (y,), b1, (x,)) and arrow(b1, (x,), b2, (y,))
    )


def greene_woodall(b1: OrderedBasis, x1: IndexSet, b2: OrderedBasis) -> tuple[int, ...]:
    """Lexicographically least x2 with the two-way arrow relation to x1.

    Set exchange guarantees a witness exists for every nonempty x1.
    """
    x1 = _check_index_set(x1, b1.n, "x1")
    if not x1:
        raise ValueError("x1 must be nonempty")
    k = len(x1)
    for cand in combinations(range(b2.n), k):
        if arrow(b1, x1, b2, cand) and arrow(b2, cand, b1, x1):
            return cand
    raise ExhaustedWithoutWitness(
        f"no {k}-subset of the second basis exchanges with {x1}; this should be impossible"
    )


def serial_check(inst: ExchangeInstance, cert: SerialCertificate) -> bool:
    """Verify a certificate by building every prefix replacement directly."""
    if sorted(cert.sigma) != sorted(inst.x1) or sorted(cert.tau) != sorted(inst.x2):
        raise ValueError("certificate orderings do not range over the instance sets")
    n = inst.b1.n
    field = inst.b1.field
    for i in range(1, inst.k + 1):
        fam1 = _replaced(inst.b1, cert.sigma[:i], inst.b2, cert.tau[:i])
        if _rank_of(fam1, field) != n:
            return False
        fam2 = _replaced(inst.b2, cert.tau[:i], inst.b1, cert.sigma[:i])
        if _rank_of(fam2, field) != n:
            return False
    return True


def _reduced_pair(b1: OrderedBasis, b2: OrderedBasis) -> tuple[np.ndarray, np.ndarray]:
    """Each basis expressed in the other's coordinates: (B1^-1 B2, B2^-1 B1)."""
    vp = reduce_against(b1.matrix, b2.matrix).entries
    up = reduce_against(b2.matrix, b1.matrix).entries
    return vp, up


def _search_reduced(
    vp: np.ndarray,
    up: np.ndarray,
    x1: tuple[int, ...],
    x2: tuple[int, ...],
    field: FieldSpec,
) -> SerialCertificate | None:
    """Backtracking search for serial orderings, in reduced coordinates.

    A prefix (sigma, tau) of length i keeps both replacements bases iff
    vp[sigma, tau] and up[tau, sigma] are nonsingular i x i submatrices.
    Pairs are tried in lexicographic position order, so the first
    certificate found is deterministic.
    """
    k = len(x1)
    if k == 0:
        return SerialCertificate((), ())
    # no certificate can exist unless the full two-way exchange holds
    if _rank_of(vp[np.ix_(x1, x2)], field) != k or _rank_of(up[np.ix_(x2, x1)], field) != k:
        return None
    ones = sorted(x1)
    twos = sorted(x2)
    used1 = [False] * k
    used2 = [False] * k
    sigma: list[int] = []
    tau: list[int] = []

    def prefix_ok() -> bool:
        i = len(sigma)
        if _rank_of(vp[np.ix_(sigma, tau)], field) != i:
            return False
        return _rank_of(up[np.ix_(tau, sigma)], field) == i

    def dfs() -> bool:
        if len(sigma) == k:
            return True
        for i1 in range(k):
            if used1[i1]:
                continue
            for i2 in range(k):
                if used2[i2]:
                    continue
                sigma.append(ones[i1])
                tau.append(twos[i2])
                used1[i1] = used2[i2] = True
                if prefix_ok() and dfs():
                    return True
                used1[i1] = used2[i2] = False
                sigma.pop()
                tau.pop()
        return False

    if dfs():
        return SerialCertificate(tuple(sigma), tuple(tau))
    return None


def serial_search(inst: ExchangeInstance) -> SerialCertificate | None:
    """Find serial orderings for the instance, or None when none exist.

    Sound and complete: any returned certificate passes serial_check, and
    a None return means the full (k!)^2 space contains no valid pair.
    """
    vp, up = _reduced_pair(inst.b1, inst.b2)
    return _search_reduced(vp, up, inst.x1, inst.x2, inst.b1.field)


def greedy_prefix_order(
    bto: OrderedBasis,
    xto_ordered: IndexSet,
    bfrom: OrderedBasis,
    xfrom: IndexSet,
) -> tuple[int, ...]:
    """Order xfrom so each prefix replacement along xto_ordered is a basis.

    Requires the arrow relation from (bfrom, xfrom) onto (bto, xto); the
    greedy step (take the least usable source position) then always
    completes, because each partial basis can be extended from the fully
    replaced one.
    """
    xto_ordered = _check_index_set(xto_ordered, bto.n, "target")
    xfrom = _check_index_set(xfrom, bfrom.n, "source")
    if len(xfrom) != len(xto_ordered):
        raise SizeMismatch(f"|xfrom| = {len(xfrom)} but |xto| = {len(xto_ordered)}")
    if not arrow(bfrom, xfrom, bto, xto_ordered):
        raise PreconditionViolated("full replacement is not a basis")
    n = bto.n
    field = bto.field
    chosen: list[int] = []
    remaining = sorted(xfrom)
    for i in range(1, len(xfrom) + 1):
        step = None
        for x in remaining:
            fam = _replaced(bto, xto_ordered[:i], bfrom, tuple(chosen) + (x,))
            if _rank_of(fam, field) == n:
                step = x
                break
        if step is None:
            raise GreedyStuck(f"no usable source position at step {i}; this should be impossible")
        chosen.append(step)
        remaining.remove(step)
    return tuple(chosen)


def find_serial_partner(
    b1: OrderedBasis,
    x1: IndexSet,
    b2: OrderedBasis,
    mode: str = "blocks",
    gate: int = 10**6,
) -> tuple[tuple[int, ...], SerialCertificate] | None:
    """Search b2 for a k-subset serially exchangeable with x1.

    blocks mode scans the floor(n/k) disjoint aligned blocks of b2 in
    order; all_subsets mode scans every k-subset lexicographically (gated
    by C(n, k) <= gate).  A blocks-mode hit is always an all_subsets hit.
    """
    x1 = _check_index_set(x1, b1.n, "x1")
    k = len(x1)
    if k < 1:
        raise ValueError("x1 must be nonempty")
    n = b2.n
    if mode == "blocks":
        if k > n:
            raise SizeMismatch(f"blocks mode needs k <= n, got k={k}, n={n}")
        candidates = (tuple(range(i * k, (i + 1) * k)) for i in range(n // k))
    elif mode == "all_subsets":
        if comb(n, k) > gate:
            raise ValueError(f"C({n},{k}) = {comb(n, k)} exceeds the subset gate {gate}")
        candidates = combinations(range(n), k)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    vp, up = _reduced_pair(b1, b2)
    field = b1.field
    for cand in candidates:
        cert = _search_reduced(vp, up, x1, tuple(cand), field)
        if cert is not None:
            return tuple(cand), cert
    return None
