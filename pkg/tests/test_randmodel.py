"""Random model: block partitions, trials, analytic bound evaluators."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fqexchange.exchange import ExchangeInstance, arrow, is_basis, serial_search
from fqexchange.gf import make_field
from fqexchange.matfq import MatFq, alpha
from fqexchange.randmodel import (
    DomainError,
    KTooLarge,
    alpha_lower,
    block_partition,
    chernoff_tail,
    derive_rng,
    run_trial,
    sample_ordered_basis,
    theorem_tail,
    zprime_zero_bound,
)

F2 = make_field(2)
F3 = make_field(3)


# --- block partition ---


def test_block_partition_basic():
    bp = block_partition(7, 2)
    assert bp.ell == 3
    assert bp.blocks == ((0, 1), (2, 3), (4, 5))


def test_block_partition_k_equals_n():
    bp = block_partition(3, 3)
    assert bp.ell == 1 and bp.blocks == ((0, 1, 2),)


def test_block_partition_rejects_large_k():
    with pytest.raises(KTooLarge):
        block_partition(3, 4)


@settings(max_examples=50)
@given(n=st.integers(1, 40), data=st.data())
def test_block_partition_invariants(n, data):
    k = data.draw(st.integers(1, n))
    bp = block_partition(n, k)
    flat = [i for b in bp.blocks for i in b]
    assert flat == list(range(bp.ell * k))
    assert all(len(b) == k for b in bp.blocks)
    assert bp.ell == n // k


# --- sampling ---


def test_sample_ordered_basis_n1_f2():
    rng = derive_rng(1, 0, 0)
    for _ in range(10):
        b = sample_ordered_basis(rng, 1, F2)
        assert b.matrix == MatFq.from_rows(F2, [[1]])


def test_sample_ordered_basis_is_basis():
    for t in range(30):
        b = sample_ordered_basis(derive_rng(2, 0, t), 6, F3)
        assert is_basis(b.matrix)


def test_derive_rng_reproducible():
    a = derive_rng(9, 3, 14).integers(0, 1000, size=8)
    b = derive_rng(9, 3, 14).integers(0, 1000, size=8)
    c = derive_rng(9, 3, 15).integers(0, 1000, size=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


# --- trials ---


def test_run_trial_deterministic():
    a = run_trial(derive_rng(5, 2, 7), 12, 3, F3)
    b = run_trial(derive_rng(5, 2, 7), 12, 3, F3)
    assert a == b


def test_run_trial_k_too_large():
    with pytest.raises(KTooLarge):
        run_trial(derive_rng(0, 0, 0), 3, 4, F3)


def test_run_trial_k_equals_n_single_block():
    out = run_trial(derive_rng(8, 0, 3), 4, 4, F3)
    assert len(out.x_bits) == 1
    assert out.block_success == (out.zprime_bits[0] == 1)


def test_run_trial_invariants_hold():
    for t in range(40):
        out = run_trial(derive_rng(13, 0, t), 10, 2, F3)
        out.validate()
        for zp, z in zip(out.zprime_bits, out.z_bits):
            assert zp <= z
        for x, y, z in zip(out.x_bits, out.y_bits, out.z_bits):
            assert z == (x & y)
        assert out.Z >= out.X + out.Y - len(out.x_bits)


def test_run_trial_bits_match_public_operations():
    # the reduced-coordinate fast path must agree with arrow/serial_search
    for t in range(25):
        rng = derive_rng(15, 0, t)
        out = run_trial(rng, 8, 2, F3)
        rng2 = derive_rng(15, 0, t)
        b1 = sample_ordered_basis(rng2, 8, F3)
        b2 = sample_ordered_basis(rng2, 8, F3)
        u1 = (0, 1)
        for i, block in enumerate([(0, 1), (2, 3), (4, 5), (6, 7)]):
            assert out.x_bits[i] == int(arrow(b1, u1, b2, block))
            assert out.y_bits[i] == int(arrow(b2, block, b1, u1))
            cert = serial_search(ExchangeInstance(b1, b2, u1, block))
            assert out.zprime_bits[i] == int(cert is not None)


def test_run_trial_certificate_verifies():
    from fqexchange.exchange import serial_check

    for t in range(40):
        rng = derive_rng(21, 0, t)
        out = run_trial(rng, 9, 3, F3)
        if out.certificate is None:
            continue
        rng2 = derive_rng(21, 0, t)
        b1 = sample_ordered_basis(rng2, 9, F3)
        b2 = sample_ordered_basis(rng2, 9, F3)
        block = tuple(range(out.cert_block * 3, out.cert_block * 3 + 3))
        inst = ExchangeInstance(b1, b2, (0, 1, 2), block)
        assert serial_check(inst, out.certificate)


def test_run_trial_exhaustive_subset_flag():
    out = run_trial(derive_rng(23, 0, 1), 6, 2, F3, exhaustive=True)
    assert out.subset_success is not None
    assert not out.block_success or out.subset_success
    # gate too small: the subset search is skipped
    out2 = run_trial(derive_rng(23, 0, 1), 6, 2, F3, exhaustive=True, gate=3)
    assert out2.subset_success is None
    assert out2.x_bits == out.x_bits


# --- analytic evaluators ---


def test_alpha_lower_values():
    assert alpha_lower(3) == Fraction(5, 9)
    assert alpha_lower(2) == Fraction(1, 4)


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_alpha_partial_product_exceeds_lower_bound(q):
    assert alpha(30, q) > alpha_lower(q)


def test_chernoff_tail_at_zero():
    assert chernoff_tail(10, Fraction(1, 2), 0) == 2.0


def test_chernoff_tail_example():
    got = chernoff_tail(300, Fraction(1, 2), 150)
    assert got == pytest.approx(2 * math.exp(-50), rel=1e-12)


def test_chernoff_tail_monotone():
    vals = [chernoff_tail(100, Fraction(1, 2), t) for t in range(0, 51, 5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_chernoff_tail_domain():
    with pytest.raises(DomainError):
        chernoff_tail(10, Fraction(1, 2), 6)  # t > np
    with pytest.raises(DomainError):
        chernoff_tail(10, 0, 1)
    with pytest.raises(DomainError):
        chernoff_tail(10, 2, 1)


def test_zprime_zero_bound_values():
    assert zprime_zero_bound(0, 2, 3) == 1.0
    assert zprime_zero_bound(4, 2, 3) == pytest.approx(625 / 6561, rel=1e-12)


def test_zprime_zero_bound_decreasing():
    vals = [zprime_zero_bound(s, 2, 3) for s in range(8)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_theorem_tail_decreasing_in_n():
    vals = [theorem_tail(n, 2, 3, Fraction(1, 20), Fraction(1, 20)) for n in (100, 1000, 10000)]
    assert vals[0] > vals[1] > vals[2]


def test_theorem_tail_c_boundary_q3():
    # with epsilon = 1/20 the largest admissible c is exactly 1/18
    theorem_tail(100, 2, 3, Fraction(1, 18), Fraction(1, 20))
    with pytest.raises(DomainError):
        theorem_tail(100, 2, 3, Fraction(1, 18) + Fraction(1, 1000), Fraction(1, 20))


def test_theorem_tail_q2_always_domain_error():
    for c in (Fraction(1, 100), Fraction(1, 20), Fraction(1, 2), 1):
        for eps in (Fraction(1, 100), Fraction(1, 20), Fraction(9, 10)):
            with pytest.raises(DomainError):
                theorem_tail(1000, 2, 2, c, eps)


def test_theorem_tail_rejects_bad_epsilon_and_k():
    with pytest.raises(DomainError):
        theorem_tail(10, 2, 3, Fraction(1, 20), 0)
    with pytest.raises(DomainError):
        theorem_tail(10, 2, 3, Fraction(1, 20), 1)
    with pytest.raises(DomainError):
        theorem_tail(3, 4, 3, Fraction(1, 20), Fraction(1, 20))


# --- empirical floor, small scale smoke (the full runs live in acceptance) ---


def test_block_exchange_rate_respects_alpha_floor():
    trials = 1500
    ell = 4
    x_succ = np.zeros(ell)
    y_succ = np.zeros(ell)
    for t in range(trials):
        out = run_trial(derive_rng(27, 0, t), 8, 2, F3)
        x_succ += np.asarray(out.x_bits)
        y_succ += np.asarray(out.y_bits)
    bound = float(alpha(2, 3))
    sigma = math.sqrt(bound * (1 - bound) / trials)
    for i in range(ell):
        assert x_succ[i] / trials >= bound - 4 * sigma
        assert y_succ[i] / trials >= bound - 4 * sigma
