import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonbounds.devices import (
    DetectorBank,
    SourceIntensities,
    click_patterns,
    leftover_term,
    pattern_block,
    pattern_given_fock,
    poisson_block,
    poisson_input_probability,
)
from photonbounds.fockcore import photon_vectors

intensities = st.lists(st.floats(0.0, 3.0), min_size=1, max_size=3)


def test_source_validation():
    with pytest.raises(ValueError):
        SourceIntensities((0.1, -0.2))
    src = SourceIntensities.from_attenuators((0.5, 0.25), 2.0)
    assert src.mu == (1.0, 0.5)
    assert src.total == 1.5


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorBank((1.2,))
    with pytest.raises(ValueError):
        DetectorBank((0.5,), p_dark=-1e-3)
    bank = DetectorBank.from_attenuators((1.0, 0.25), eta_d=0.8)
    assert bank.kappa == pytest.approx((0.8, 0.2))


def test_click_patterns_order():
    assert click_patterns(2) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert len(click_patterns(3)) == 8


def test_poisson_examples():
    assert poisson_input_probability(SourceIntensities((0.0, 0.0)), (0, 0)) == 1.0
    assert poisson_input_probability(SourceIntensities((1.0,)), (1,)) == pytest.approx(math.exp(-1), abs=1e-15)
    assert poisson_input_probability(SourceIntensities((0.5, 0.5)), (1, 1)) == pytest.approx(
        0.25 * math.exp(-1), abs=1e-15
    )
    assert poisson_input_probability(SourceIntensities((0.0,)), (2,)) == 0.0
    with pytest.raises(ValueError):
        poisson_input_probability(SourceIntensities((1.0,)), (1, 1))


def test_poisson_block_matches_scalar():
    src = SourceIntensities((0.3, 1.1))
    vecs = np.array(photon_vectors(6, 2))
    block = poisson_block(src, vecs)
    assert np.allclose(block, [poisson_input_probability(src, v) for v in vecs], rtol=1e-13, atol=0)


def test_pattern_examples():
    assert pattern_given_fock((0,), DetectorBank((0.8,), 0.0), (0,)) == 1.0
    assert pattern_given_fock((1,), DetectorBank((0.8,), 0.0), (1,)) == pytest.approx(0.8)
    expected = (1 - (1 - 1e-6) * 0.25) * (1 - 1e-6)
    assert pattern_given_fock((2, 0), DetectorBank((0.5, 0.5), 1e-6), (1, 0)) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(ValueError):
        pattern_given_fock((1, 0), DetectorBank((0.5, 0.5)), (2, 0))


def test_pattern_by_outcome_enumeration():
    # each photon is lost or seen independently; a dark count fires independently
    kappa, pd, x = 0.5, 1e-6, 2
    p_no_photon_seen = (1 - kappa) ** x
    assert pattern_given_fock((x,), DetectorBank((kappa,), pd), (0,)) == pytest.approx(p_no_photon_seen * (1 - pd))


def test_pattern_block_matches_scalar():
    bank = DetectorBank((0.3, 0.7), 1e-4)
    vecs = np.array(photon_vectors(4, 2))
    block = pattern_block(bank, vecs)
    for i, v in enumerate(vecs):
        for t, theta in enumerate(click_patterns(2)):
            assert block[i, t] == pytest.approx(pattern_given_fock(v, bank, theta), abs=1e-15)


def test_leftover_examples():
    assert leftover_term(SourceIntensities((0.1, 0.1)), 0) == pytest.approx(1 - math.exp(-0.2), abs=1e-15)
    assert leftover_term(SourceIntensities((0.0, 0.0)), 4) == 0.0
    lam = leftover_term(SourceIntensities((0.5, 0.5)), 10)
    direct = 1 - math.fsum(math.exp(-1) / math.factorial(k) for k in range(11))
    assert lam == pytest.approx(direct, rel=1e-6)
    assert lam == pytest.approx(1.0e-8, rel=0.02)
    with pytest.raises(ValueError):
        leftover_term(SourceIntensities((0.1,)), -1)


def test_leftover_matches_lattice_sum():
    src = SourceIntensities((0.4, 0.6))
    inside = math.fsum(poisson_input_probability(src, n) for n in photon_vectors(10, 2))
    assert leftover_term(src, 10) == pytest.approx(1 - inside, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(intensities, st.integers(0, 12))
def test_poisson_plus_leftover_is_one(mu, t):
    src = SourceIntensities(tuple(mu))
    inside = math.fsum(poisson_block(src, np.array(photon_vectors(t, len(mu)))))
    assert abs(inside + leftover_term(src, t) - 1.0) < 1e-12


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(0.0, 1.0), min_size=1, max_size=3),
    st.floats(0.0, 1.0),
    st.data(),
)
def test_patterns_sum_to_one(kappa, pd, data):
    bank = DetectorBank(tuple(kappa), pd)
    x = data.draw(st.lists(st.integers(0, 6), min_size=len(kappa), max_size=len(kappa)))
    total = math.fsum(pattern_given_fock(x, bank, t) for t in click_patterns(len(kappa)))
    assert abs(total - 1.0) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 6), st.floats(0.0, 1e-2))
def test_no_click_monotone(k1, k2, x, pd):
    lo, hi = sorted((k1, k2))
    quiet = lambda k, n: pattern_given_fock((n,), DetectorBank((k,), pd), (0,))
    assert quiet(hi, x) <= quiet(lo, x)
    assert quiet(lo, x + 1) <= quiet(lo, x)


@settings(max_examples=40, deadline=None)
@given(intensities, st.integers(0, 11), st.floats(0.0, 1.0))
def test_leftover_monotone(mu, t, bump):
    src = SourceIntensities(tuple(mu))
    assert leftover_term(src, t + 1) <= leftover_term(src, t)
    brighter = SourceIntensities((mu[0] + bump,) + tuple(mu[1:]))
    assert leftover_term(brighter, t) >= leftover_term(src, t)


def test_joint_outcomes_enumerate_product():
    bank = DetectorBank((0.4, 0.9), 2e-3)
    for x in itertools.product(range(3), repeat=2):
        for theta in click_patterns(2):
            expected = 1.0
            for xj, kj, tj in zip(x, bank.kappa, theta):
                silent = (1 - bank.p_dark) * (1 - kj) ** xj
                expected *= silent if tj == 0 else 1 - silent
            assert pattern_given_fock(x, bank, theta) == pytest.approx(expected, abs=1e-15)
