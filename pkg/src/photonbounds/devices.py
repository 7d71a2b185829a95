"""Source and detector models: Poissonian inputs and threshold-detector POVMs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special, stats


@dataclass(frozen=True)
class SourceIntensities:
    """Mean photon number per input port after the input attenuators."""

    mu: tuple[float, ...]

    def __post_init__(self):
        mu = tuple(float(m) for m in np.atleast_1d(self.mu))
        if any(not m >= 0 for m in mu):
            raise ValueError(f"intensities must be non-negative, got {mu}")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def from_attenuators(cls, gamma: Sequence[float], laser_mu: float) -> "SourceIntensities":
        return cls(tuple(g * laser_mu for g in gamma))

    @property
    def ports(self) -> int:
        return len(self.mu)

    @property
    def total(self) -> float:
        return math.fsum(self.mu)


@dataclass(frozen=True)
class DetectorBank:
    """Threshold detectors with effective efficiency kappa_j = omega_j * eta_D."""

    kappa: tuple[float, ...]
    p_dark: float = 1e-6

    def __post_init__(self):
        kappa = tuple(float(k) for k in np.atleast_1d(self.kappa))
        if any(not 0.0 <= k <= 1.0 for k in kappa):
            raise ValueError(f"efficiencies must lie in [0, 1], got {kappa}")
        if not 0.0 <= self.p_dark <= 1.0:
            raise ValueError(f"dark-count probability must lie in [0, 1], got {self.p_dark}")
        object.__setattr__(self, "kappa", kappa)

    @classmethod
    def from_attenuators(cls, omega: Sequence[float], eta_d: float = 0.8, p_dark: float = 1e-6) -> "DetectorBank":
        return cls(tuple(w * eta_d for w in omega), p_dark)

    @property
    def ports(self) -> int:
        return len(self.kappa)


def click_patterns(ports: int) -> list[tuple[int, ...]]:
    """All 2^M click patterns, binary-counting order (0...0 first)."""
    return [tuple((i >> (ports - 1 - b)) & 1 for b in range(ports)) for i in range(2**ports)]


def _check_pattern(theta: Sequence[int], ports: int) -> tuple[int, ...]:
    theta = tuple(int(t) for t in theta)
    if len(theta) != ports or any(t not in (0, 1) for t in theta):
        raise ValueError(f"click pattern must be {ports} entries of 0/1, got {theta}")
    return theta


def poisson_input_probability(source: SourceIntensities, n: Sequence[int]) -> float:
    """prod_i exp(-mu_i) mu_i^n_i / n_i!, accumulated in log space."""
    if len(n) != source.ports:
        raise ValueError(f"photon vector has {len(n)} entries, source has {source.ports} ports")
    log_p = 0.0
    for mu, k in zip(source.mu, n):
        if k < 0:
            raise ValueError("photon numbers must be non-negative")
        if mu == 0.0:
            if k > 0:
                return 0.0
            continue
        log_p += -mu + k * math.log(mu) - math.lgamma(k + 1)
    return math.exp(log_p)


def poisson_block(source: SourceIntensities, vectors: np.ndarray) -> np.ndarray:
    """Vectorized :func:`poisson_input_probability` over rows of ``vectors``."""
    vectors = np.asarray(vectors)
    mu = np.array(source.mu)
    terms = special.xlogy(vectors, mu) - special.gammaln(vectors + 1)
    return np.exp(terms.sum(axis=1) - mu.sum())


def pattern_given_fock(x: Sequence[int], bank: DetectorBank, theta: Sequence[int]) -> float:
    """P(theta|x): no-click with (1 - p_dark)(1 - kappa)^x per port, click otherwise."""
    if len(x) != bank.ports:
        raise ValueError(f"photon vector has {len(x)} entries, detector bank has {bank.ports}")
    theta = _check_pattern(theta, bank.ports)
    p = 1.0
    for xj, kj, tj in zip(x, bank.kappa, theta):
        silent = (1.0 - bank.p_dark) * (1.0 - kj) ** xj
        p *= silent if tj == 0 else 1.0 - silent
    return p


def pattern_block(bank: DetectorBank, vectors: np.ndarray) -> np.ndarray:
    """P(theta|x) for every row x of ``vectors`` (axis 0) and every pattern (axis 1)."""
    vectors = np.asarray(vectors)
    silent = (1.0 - bank.p_dark) * (1.0 - np.array(bank.kappa)) ** vectors
    out = np.ones((vectors.shape[0], 2**bank.ports))
    for col, theta in enumerate(click_patterns(bank.ports)):
        out[:, col] = np.prod(np.where(np.array(theta) == 0, silent, 1.0 - silent), axis=1)
    return out


def leftover_term(source: SourceIntensities, m_cut: int) -> float:
    """Poisson mass of input vectors with more than ``m_cut`` photons in total."""
    if m_cut < 0:
        raise ValueError("m_cut must be non-negative")
    return float(stats.poisson.sf(m_cut, source.total)) if source.total > 0 else 0.0
