import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from photonbounds.devices import DetectorBank, SourceIntensities, click_patterns, leftover_term
from photonbounds.estimator import truncated_pattern_probability
from photonbounds.fockcore import InternalStateSet, ModeUnitary
from photonbounds.forwardmodel import (
    PulseConfiguration,
    mean_output_photons,
    pattern_distribution,
    pattern_probability,
    pattern_probability_fixed_phase,
    sample_click_counts,
    synthesize_dataset,
    ObservedStatistics,
)


def hom_config(mu=(0.1, 0.1), kappa=(1.0, 1.0), p_dark=0.0, delays=(0.0, 0.0)):
    return PulseConfiguration(
        ModeUnitary.beamsplitter(0.5),
        InternalStateSet.delayed(delays),
        SourceIntensities(mu),
        DetectorBank(kappa, p_dark),
    )


def coherent_propagation(config, phases):
    """Mean photon numbers from explicit (port, polarization) field amplitudes."""
    pol = config.states.polarizations
    out = np.zeros(config.ports)
    for k in range(config.ports):
        field = np.zeros(pol.shape[1], dtype=complex)
        for j in range(config.ports):
            field += math.sqrt(config.source.mu[j]) * np.exp(1j * phases[j]) * config.unitary.matrix[j, k] * pol[j]
        out[k] = np.vdot(field, field).real
    return out


def test_port_count_mismatch():
    with pytest.raises(ValueError):
        PulseConfiguration(
            ModeUnitary.beamsplitter(0.5), InternalStateSet.identical(2), SourceIntensities((0.1,)), DetectorBank((1, 1))
        )


def test_mean_photons_identity():
    cfg = PulseConfiguration(ModeUnitary.identity(1), InternalStateSet.identical(1), SourceIntensities((0.7,)), DetectorBank((1.0,)))
    for phi in (0.0, 1.3, 4.0):
        assert mean_output_photons(cfg, [phi]) == pytest.approx([0.7])


def test_mean_photons_hom_bunching():
    nbar = mean_output_photons(hom_config(mu=(0.3, 0.3)), [0.0, 0.0])
    assert sorted(nbar) == pytest.approx([0.0, 0.6], abs=1e-15)


def test_mean_photons_orthogonal_is_classical():
    cfg = PulseConfiguration(ModeUnitary.tritter(), InternalStateSet.orthogonal(3), SourceIntensities((0.2, 0.5, 0.9)), DetectorBank((1, 1, 1)))
    classical = np.abs(ModeUnitary.tritter().matrix.T) ** 2 @ np.array([0.2, 0.5, 0.9])
    for phases in ([0, 0, 0], [0.3, 2.0, 5.0]):
        assert mean_output_photons(cfg, phases) == pytest.approx(classical, abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_mean_photons_match_field_propagation(seed):
    rng = np.random.default_rng(seed)
    pol = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    pol /= np.linalg.norm(pol, axis=1)[:, None]
    cfg = PulseConfiguration(ModeUnitary.tritter(), InternalStateSet(pol), SourceIntensities(tuple(rng.random(3))), DetectorBank((1, 1, 1)))
    phases = rng.random(3) * 2 * np.pi
    assert mean_output_photons(cfg, phases) == pytest.approx(coherent_propagation(cfg, phases), abs=1e-13)


def test_fixed_phase_examples():
    vac = PulseConfiguration(ModeUnitary.identity(1), InternalStateSet.identical(1), SourceIntensities((0.0,)), DetectorBank((1.0,), 0.0))
    assert pattern_probability_fixed_phase(vac, [0.0], (0,)) == 1.0
    dark = PulseConfiguration(ModeUnitary.identity(1), InternalStateSet.identical(1), SourceIntensities((0.0,)), DetectorBank((1.0,), 1e-6))
    assert pattern_probability_fixed_phase(dark, [0.0], (1,)) == pytest.approx(1e-6, abs=1e-15)


def test_fixed_phase_hom_product():
    mu, kappa, pd = 0.2, (0.7, 0.4), 1e-6
    cfg = hom_config(mu=(mu, mu), kappa=kappa, p_dark=pd)
    nbar = mean_output_photons(cfg, [0.0, 0.0])
    bright = int(np.argmax(nbar))
    theta = [0, 0]
    theta[1 - bright] = 1
    expected = (1 - pd) * math.exp(-kappa[bright] * nbar[bright]) * (1 - (1 - pd))
    assert pattern_probability_fixed_phase(cfg, [0.0, 0.0], theta) == pytest.approx(expected, rel=1e-9)


def test_phase_average_bessel_oracle():
    mu = 0.1
    # kappa = (1, 1): total mean photon number is 2 mu at every phase
    assert pattern_probability(hom_config(mu=(mu, mu)), (0, 0)) == pytest.approx(math.exp(-0.2), abs=1e-12)
    k1, k2 = 0.9, 0.3
    expected = math.exp(-(k1 + k2) * mu) * special.i0((k1 - k2) * mu)
    assert pattern_probability(hom_config(mu=(mu, mu), kappa=(k1, k2)), (0, 0)) == pytest.approx(expected, abs=1e-12)


def test_phase_average_against_adaptive_quadrature():
    cfg = hom_config(mu=(0.6, 0.3), kappa=(0.8, 0.5), p_dark=1e-6, delays=(0.0, 0.4))
    for theta in click_patterns(2):
        ref, _ = integrate.quad(lambda d: pattern_probability_fixed_phase(cfg, [0.0, d], theta), 0, 2 * np.pi, epsabs=1e-14)
        assert pattern_probability(cfg, theta) == pytest.approx(ref / (2 * np.pi), abs=1e-11)


def test_single_port_and_orthogonal_need_no_average():
    one = PulseConfiguration(ModeUnitary.identity(1), InternalStateSet.identical(1), SourceIntensities((0.4,)), DetectorBank((0.6,), 1e-6))
    assert pattern_probability(one, (1,)) == pytest.approx(pattern_probability_fixed_phase(one, [0.0], (1,)))
    orth = PulseConfiguration(ModeUnitary.tritter(), InternalStateSet.orthogonal(3), SourceIntensities((0.2, 0.5, 0.9)), DetectorBank((0.8, 0.8, 0.8)))
    assert pattern_probability(orth, (1, 0, 1)) == pytest.approx(pattern_probability_fixed_phase(orth, [1.0, 2.0, 3.0], (1, 0, 1)), abs=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_distribution_normalized(seed):
    rng = np.random.default_rng(seed)
    ports = int(rng.integers(1, 4))
    u = ModeUnitary.tritter() if ports == 3 else ModeUnitary.beamsplitter(float(rng.random())) if ports == 2 else ModeUnitary.identity(1)
    cfg = PulseConfiguration(u, InternalStateSet.delayed(rng.random(ports)), SourceIntensities(tuple(rng.random(ports))), DetectorBank(tuple(rng.random(ports)), 1e-6))
    probs = pattern_distribution(cfg)
    assert np.all(probs >= 0) and np.all(probs <= 1)
    assert abs(probs.sum() - 1.0) < 1e-9


def test_delay_shift_and_sign_symmetry():
    base = pattern_distribution(hom_config(mu=(0.5, 0.4), kappa=(0.6, 0.8), p_dark=1e-6, delays=(0.0, 0.7)))
    shifted = pattern_distribution(hom_config(mu=(0.5, 0.4), kappa=(0.6, 0.8), p_dark=1e-6, delays=(1.3, 2.0)))
    mirrored = pattern_distribution(hom_config(mu=(0.5, 0.4), kappa=(0.6, 0.8), p_dark=1e-6, delays=(0.0, -0.7)))
    assert shifted == pytest.approx(base, abs=1e-14)
    assert mirrored == pytest.approx(base, abs=1e-14)


def test_global_phase_offset_invariance():
    cfg = hom_config(mu=(0.5, 0.4), kappa=(0.6, 0.8), p_dark=1e-6, delays=(0.0, 0.2))
    a = pattern_probability_fixed_phase(cfg, [0.3, 1.1], (1, 0))
    b = pattern_probability_fixed_phase(cfg, [0.3 + 2.0, 1.1 + 2.0], (1, 0))
    assert a == pytest.approx(b, abs=1e-15)


def test_synthesize_dataset():
    assert synthesize_dataset([]) == []
    one = PulseConfiguration(ModeUnitary.identity(1), InternalStateSet.identical(1), SourceIntensities((0.4,)), DetectorBank((0.6,), 1e-6))
    (obs,) = synthesize_dataset([one])
    assert obs.as_dict()[(1,)] == pytest.approx(pattern_probability(one, (1,)))
    other = PulseConfiguration(ModeUnitary.beamsplitter(0.3), InternalStateSet.identical(2), SourceIntensities((0.4, 0.1)), DetectorBank((0.6, 0.6)))
    with pytest.raises(ValueError):
        synthesize_dataset([hom_config(), other])


def test_sample_counts():
    obs = ObservedStatistics(SourceIntensities((0.1,)), DetectorBank((1.0,)), np.array([1.0, 0.0]))
    assert sample_click_counts(obs, 0, 1) == {(0,): 0, (1,): 0}
    assert sample_click_counts(obs, 50, 1) == {(0,): 50, (1,): 0}
    probs = pattern_distribution(hom_config(mu=(0.5, 0.5), kappa=(0.8, 0.8), p_dark=1e-6))
    stats = ObservedStatistics(SourceIntensities((0.5, 0.5)), DetectorBank((0.8, 0.8)), probs)
    shots = 10**6
    counts = sample_click_counts(stats, shots, 42)
    assert counts == sample_click_counts(stats, shots, 42)
    for theta, p in zip(click_patterns(2), probs):
        sigma = math.sqrt(shots * p * (1 - p))
        assert abs(counts[theta] - shots * p) <= 5 * sigma + 1e-9


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_forward_model_matches_truncated_fock_sum(seed):
    rng = np.random.default_rng(seed)
    ports = int(rng.integers(1, 4))
    u = {1: ModeUnitary.identity(1), 2: ModeUnitary.beamsplitter(float(rng.random())), 3: ModeUnitary.tritter()}[ports]
    pol = rng.normal(size=(ports, 2)) + 1j * rng.normal(size=(ports, 2))
    pol /= np.linalg.norm(pol, axis=1)[:, None]
    states = InternalStateSet(pol, rng.normal(size=ports) * 0.5)
    mu = rng.dirichlet(np.ones(ports)) * rng.uniform(0.05, 1.5)
    src = SourceIntensities(tuple(mu))
    det = DetectorBank(tuple(rng.uniform(0.05, 0.8, ports)), 1e-6)
    cfg = PulseConfiguration(u, states, src, det)
    m_cut = 14
    lam = leftover_term(src, m_cut)
    probs = pattern_distribution(cfg)
    for theta, p in zip(click_patterns(ports), probs):
        truncated = truncated_pattern_probability(u, states, src, det, theta, m_cut)
        assert abs(p - truncated) <= lam + 1e-8
