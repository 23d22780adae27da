"""Random model: uniform ordered bases, block trials, analytic bounds.

A trial draws two independent uniform ordered bases, marks the first k
positions of the first basis, and tests each aligned k-block of the second
basis for one-way, two-way, and serial exchangeability.  Trials are pure
functions of their generator, and generators are derived from
(seed, row, trial) so any execution order reproduces the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Optional

import numpy as np

from .exchange import OrderedBasis, SerialCertificate, _reduced_pair, _search_reduced
from .gf import FieldSpec
from .matfq import _rank_of, beta, random_full_rank


class KTooLarge(ValueError):
    """Block size k exceeds the basis rank n."""


class DomainError(ValueError):
    """Arguments outside the region where the bound is valid."""


@dataclass(frozen=True)
class BlockPartition:
    """The first floor(n/k) aligned k-blocks of positions 0..n-1."""

    n: int
    k: int
    ell: int
    blocks: tuple[tuple[int, ...], ...]


def block_partition(n: int, k: int) -> BlockPartition:
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    if k > n:
        raise KTooLarge(f"k = {k} exceeds n = {n}")
    ell = n // k
    blocks = tuple(tuple(range(i * k, (i + 1) * k)) for i in range(ell))
    return BlockPartition(n, k, ell, blocks)


@dataclass(frozen=True)
class TrialOutcome:
    """Per-block indicators of one trial plus their sums.

    x_bits: one-way exchange into each block, y_bits: the reverse
    direction, z_bits: both, zprime_bits: serial exchangeability.
    subset_success is None unless the all-subsets search ran.
    """

    x_bits: tuple[int, ...]
    y_bits: tuple[int, ...]
    z_bits: tuple[int, ...]
    zprime_bits: tuple[int, ...]
    X: int
    Y: int
    Z: int
    Zprime: int
    block_success: bool
    subset_success: Optional[bool]
    certificate: Optional[SerialCertificate]
    cert_block: Optional[int]

    def validate(self) -> None:
        ell = len(self.x_bits)
        if not (len(self.y_bits) == len(self.z_bits) == len(self.zprime_bits) == ell):
            raise ValueError("bit vectors have unequal lengths")
        for i in range(ell):
            if self.z_bits[i] != (self.x_bits[i] & self.y_bits[i]):
                raise ValueError(f"z_bits[{i}] != x_bits[{i}] AND y_bits[{i}]")
            if self.zprime_bits[i] > self.z_bits[i]:
                raise ValueError(f"zprime_bits[{i}] > z_bits[{i}]")
        if (self.X, self.Y, self.Z, self.Zprime) != (
            sum(self.x_bits),
            sum(self.y_bits),
            sum(self.z_bits),
            sum(self.zprime_bits),
        ):
            raise ValueError("sums inconsistent with bit vectors")
        if self.Z < self.X + self.Y - ell:
            raise ValueError("Z < X + Y - ell")
        if self.block_success != (self.Zprime > 0):
            raise ValueError("block_success inconsistent with Zprime")


def derive_rng(seed: int, row: int, trial: int) -> np.random.Generator:
    """The fixed seed-splitting rule: one independent stream per (row, trial)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(row, trial))
    return np.random.Generator(np.random.PCG64(ss))


def sample_ordered_basis(rng: np.random.Generator, n: int, field: FieldSpec) -> OrderedBasis:
    """Uniform over ordered bases of F_q^n."""
    return OrderedBasis(random_full_rank(rng, n, field), validate=False)


def run_trial(
    rng: np.random.Generator,
    n: int,
    k: int,
    field: FieldSpec,
    *,
    exhaustive: bool = False,
    gate: int = 10**6,
) -> TrialOutcome:
    """One trial: sample a basis pair and score every aligned block.

    The serial search for block i is only attempted when both arrows hold
    there, since a certificate's full prefix is exactly the two-way
    exchange.  With exhaustive set (and the subset count within gate) the
    all-subsets search also runs.
    """
    bp = block_partition(n, k)
    b1 = sample_ordered_basis(rng, n, field)
    b2 = sample_ordered_basis(rng, n, field)
    vp, up = _reduced_pair(b1, b2)
    u1 = tuple(range(k))
    x_bits = []
    y_bits = []
    z_bits = []
    zprime_bits = []
    certificate = None
    cert_block = None
    for i, block in enumerate(bp.blocks):
        x = int(_rank_of(up[np.ix_(block, u1)], field) == k)
        y = int(_rank_of(vp[np.ix_(u1, block)], field) == k)
        z = x & y
        zp = 0
        if z:
            cert = _search_reduced(vp, up, u1, block, field)
            if cert is not None:
                zp = 1
                if certificate is None:
                    certificate = cert
                    cert_block = i
        x_bits.append(x)
        y_bits.append(y)
        z_bits.append(z)
        zprime_bits.append(zp)
    subset_success = None
    if exhaustive and comb(n, k) <= gate:
        found = None
        for cand in combinations(range(n), k):
            found = _search_reduced(vp, up, u1, tuple(cand), field)
            if found is not None:
                break
        subset_success = found is not None
    outcome = TrialOutcome(
        x_bits=tuple(x_bits),
        y_bits=tuple(y_bits),
        z_bits=tuple(z_bits),
        zprime_bits=tuple(zprime_bits),
        X=sum(x_bits),
        Y=sum(y_bits),
        Z=sum(z_bits),
        Zprime=sum(zprime_bits),
        block_success=sum(zprime_bits) > 0,
        subset_success=subset_success,
        certificate=certificate,
        cert_block=cert_block,
    )
    outcome.validate()
    return outcome


def alpha_lower(q: int) -> Fraction:
    """Closed-form lower bound on the infinite nonsingularity product."""
    if q < 2:
        raise ValueError(f"need q >= 2, got {q}")
    return 1 - Fraction(1, q) - Fraction(1, q * q)


def chernoff_tail(n: int, p, t) -> float:
    """Two-sided binomial concentration bound 2 exp(-t^2 / (3np))."""
    p = Fraction(p)
    t = Fraction(t)
    if n < 1 or not 0 < p <= 1:
        raise DomainError(f"need n >= 1 and 0 < p <= 1, got n={n}, p={p}")
    if not 0 <= t <= n * p:
        raise DomainError(f"need 0 <= t <= np, got t={t}, np={n * p}")
    return 2.0 * math.exp(-float(t * t / (3 * n * p)))


def zprime_zero_bound(s: int, k: int, q: int) -> float:
    """Bound on the chance that s two-way blocks all fail the serial search."""
    if s < 0:
        raise ValueError(f"need s >= 0, got {s}")
    return float((1 - beta(k, q)) ** s)


def theorem_tail(n: int, k: int, q: int, c, epsilon) -> float:
    """Analytic upper envelope on the no-serial-block event.

    Evaluates 4 exp(-eps^2 * ell * a / 3) + (1 - beta_k)^(c * ell) with
    ell = floor(n/k) and a = alpha_lower(q).  Valid only when
    c <= 2 (1 - eps) a - 1; in particular no positive c qualifies at
    q = 2, where a = 1/4.
    """
    c = Fraction(c)
    epsilon = Fraction(epsilon)
    if k < 1 or k > n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not 0 < epsilon < 1:
        raise DomainError(f"need 0 < epsilon < 1, got {epsilon}")
    if c <= 0:
        raise DomainError(f"need c > 0, got {c}")
    a = alpha_lower(q)
    c_max = 2 * (1 - epsilon) * a - 1
    if c > c_max:
        raise DomainError(
            f"c = {c} exceeds 2(1-epsilon)*alpha_lower - 1 = {c_max}; bound not valid there"
        )
    ell = n // k
    term_z = 4.0 * math.exp(-float(epsilon * epsilon * a) * ell / 3.0)
    term_serial = float(1 - beta(k, q)) ** (float(c) * ell)
    return term_z + term_serial
