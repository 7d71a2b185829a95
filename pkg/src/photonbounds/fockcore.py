"""Exact photon-number statistics of passive linear-optical networks.

Convention used throughout the package: a network is a unitary ``U`` whose
entry ``u[j, k]`` is the amplitude for a photon entering input port ``j`` to
leave through output port ``k``, i.e. ``a_j^dag = sum_k u[j, k] b_k^dag``.
The same matrix drives the coherent-state forward model, where the output
amplitude of port ``k`` is ``sum_j alpha_j u[j, k]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterator, Sequence

import numpy as np

MAX_PERMANENT_DIM = 12
UNITARY_TOL = 1e-12
GRAM_CLAMP = 1e-10

# exact integers, converted to float once
FACTORIALS = np.array([float(math.factorial(k)) for k in range(21)])


class ModelError(ValueError):
    """Raised when internal-state data admit no physical realization."""


class UndefinedVisibilityError(ZeroDivisionError):
    pass


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Yield all tuples of ``parts`` non-negative ints summing to ``total``.

    Order is lexicographic, largest first entry last, e.g. ``(0, 2), (1, 1), (2, 0)``.
    """
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def photon_vectors(max_total: int, parts: int) -> tuple[tuple[int, ...], ...]:
    """All photon vectors with total at most ``max_total``, ordered by (total, vector)."""
    return tuple(v for t in range(max_total + 1) for v in compositions(t, parts))


def _check_vector(v: Sequence[int], ports: int, name: str) -> tuple[int, ...]:
    v = tuple(int(c) for c in v)
    if len(v) != ports:
        raise ValueError(f"{name} has {len(v)} entries, network has {ports} ports")
    if any(c < 0 for c in v):
        raise ValueError(f"{name} has negative photon numbers: {v}")
    return v


@dataclass(frozen=True, eq=False)
class ModeUnitary:
    """Lossless network matrix; unitarity is checked on construction."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.array(self.matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"network matrix must be square, got shape {u.shape}")
        err = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
        if err > UNITARY_TOL:
            raise ValueError(f"network matrix is not unitary (max |UU^dag - I| = {err:.3g})")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @property
    def ports(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, ports: int) -> "ModeUnitary":
        return cls(np.eye(ports))

    @classmethod
    def beamsplitter(cls, eta: float) -> "ModeUnitary":
        """Splitter with t = t' = sqrt(eta), r = -sqrt(1 - eta), r' = -r.

        Output operators obey b1 = t a1 + r a2, b2 = r' a1 + t' a2; inverting gives
        the input-to-output matrix stored here.
        """
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"transmittance must lie in [0, 1], got {eta}")
        t, r = math.sqrt(eta), -math.sqrt(1.0 - eta)
        to_output = np.array([[t, r], [-r, t]])
        return cls(to_output.conj().T)

    @classmethod
    def tritter(cls) -> "ModeUnitary":
        """Balanced three-port splitter, u_jk = exp(2 pi i j k / 3) / sqrt(3)."""
        j, k = np.meshgrid(range(3), range(3), indexing="ij")
        return cls(np.exp(2j * np.pi * j * k / 3) / math.sqrt(3))


def gaussian_overlap(tau, fwhm: float):
    """Overlap exp(-4 ln2 tau^2 / fwhm^2) of two Gaussian pulses delayed by ``tau``."""
    if not fwhm > 0:
        raise ValueError(f"pulse width must be positive, got {fwhm}")
    tau = np.asarray(tau, dtype=float)
    out = np.exp(-4.0 * math.log(2.0) * tau**2 / fwhm**2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class InternalStateSet:
    """Per-port internal states: a polarization unit vector and an arrival time.

    The effective overlap between the photons of ports j and s is the polarization
    inner product times the Gaussian temporal overlap of the two pulses.
    """

    polarizations: np.ndarray
    delays: np.ndarray = None
    fwhm: float = 1.0

    def __post_init__(self):
        pol = np.atleast_2d(np.array(self.polarizations, dtype=complex))
        norms = np.linalg.norm(pol, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError(f"polarization vectors must have unit norm, got norms {norms}")
        delays = np.zeros(pol.shape[0]) if self.delays is None else np.array(self.delays, dtype=float)
        if delays.shape != (pol.shape[0],):
            raise ValueError("need one delay per port")
        if not self.fwhm > 0:
            raise ValueError("pulse width must be positive")
        pol.setflags(write=False)
        delays.setflags(write=False)
        object.__setattr__(self, "polarizations", pol)
        object.__setattr__(self, "delays", delays)

    @classmethod
    def identical(cls, ports: int) -> "InternalStateSet":
        return cls(np.ones((ports, 1)))

    @classmethod
    def orthogonal(cls, ports: int) -> "InternalStateSet":
        return cls(np.eye(ports))

    @classmethod
    def delayed(cls, delays: Sequence[float], fwhm: float = 1.0) -> "InternalStateSet":
        """Equal polarizations, pulses arriving at the given times."""
        return cls(np.ones((len(delays), 1)), delays, fwhm)

    @property
    def ports(self) -> int:
        return self.polarizations.shape[0]

    def gram(self) -> np.ndarray:
        """Matrix of overlaps <psi_j|psi_s>."""
        pol = self.polarizations.conj() @ self.polarizations.T
        tau = self.delays[None, :] - self.delays[:, None]
        return pol * gaussian_overlap(tau, self.fwhm)


def _as_gram(states, ports: int) -> np.ndarray:
    if isinstance(states, InternalStateSet):
        gram = states.gram()
    else:
        gram = np.array(states, dtype=complex)
    if gram.shape != (ports, ports):
        raise ValueError(f"internal-state data cover {gram.shape[0]} ports, network has {ports}")
    return gram


def gram_factor(gram: np.ndarray) -> np.ndarray:
    """Return ``L`` whose rows are internal-state vectors realizing ``gram``.

    ``conj(L) @ L.T`` reproduces the Gram matrix. Eigenvalues in [-1e-10, 0] are
    clamped to zero; anything more negative is not a Gram matrix.
    """
    gram = np.array(gram, dtype=complex)
    if np.max(np.abs(gram - gram.conj().T)) > 1e-12:
        raise ModelError("overlap matrix is not Hermitian")
    vals, vecs = np.linalg.eigh(gram)
    if vals.min() < -GRAM_CLAMP:
        raise ModelError(f"overlap matrix is not positive semidefinite (eigenvalue {vals.min():.3g})")
    keep = vals > GRAM_CLAMP
    vals, vecs = vals[keep], vecs[:, keep]
    return vecs.conj() * np.sqrt(vals)


def permanent(matrix) -> complex:
    """Permanent via Glynn's formula walked in Gray-code order, O(2^n n)."""
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > MAX_PERMANENT_DIM:
        raise ValueError(f"permanent dimension {n} exceeds the cap of {MAX_PERMANENT_DIM}")
    if n == 0:
        return 1.0 + 0j
    if n == 1:
        return complex(a[0, 0])
    a = a.astype(complex)
    steps = np.arange(1, 2 ** (n - 1))
    # bit flipped at each Gray step; rows 1..n-1 take part, row 0 keeps delta = +1
    bit = np.log2(steps & -steps).astype(int)
    flipped = bit + 1
    gray = steps ^ (steps >> 1)
    new_sign = np.where((gray >> bit) & 1, -1.0, 1.0)
    increments = 2.0 * new_sign[:, None] * a[flipped]
    sums = np.vstack([a.sum(axis=0), a.sum(axis=0) + np.cumsum(increments, axis=0)])
    parity = np.where(np.arange(2 ** (n - 1)) % 2, -1.0, 1.0)
    return complex(np.sum(parity * np.prod(sums, axis=1)) / 2 ** (n - 1))


def _repeat_indices(counts: Sequence[int]) -> np.ndarray:
    return np.repeat(np.arange(len(counts)), counts)


def _factorial_product(counts: Sequence[int]) -> float:
    return float(np.prod(FACTORIALS[list(counts)]))


def fock_amplitude(unitary: ModeUnitary, n: Sequence[int], x: Sequence[int]) -> complex:
    """<x|U|n> for indistinguishable photons."""
    ports = unitary.ports
    n = _check_vector(n, ports, "input")
    x = _check_vector(x, ports, "output")
    if sum(n) != sum(x):
        raise ValueError(f"photon number is conserved: total(n)={sum(n)} != total(x)={sum(x)}")
    sub = unitary.matrix[np.ix_(_repeat_indices(n), _repeat_indices(x))]
    return permanent(sub) / math.sqrt(_factorial_product(n) * _factorial_product(x))


def transition_probability(unitary: ModeUnitary, n: Sequence[int], x: Sequence[int]) -> float:
    """P(x|n) = |<x|U|n>|^2 for indistinguishable photons."""
    return abs(fock_amplitude(unitary, n, x)) ** 2


def beamsplitter_output_amplitudes(eta: float, n1: int, n2: int) -> dict[tuple[int, int], float]:
    """Output amplitudes of |n1, n2> on a splitter of transmittance ``eta``.

    Evaluates the closed double sum over the photons reflected from each input
    (same sign convention as :meth:`ModeUnitary.beamsplitter`); terms landing on
    the same output vector are added.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {eta}")
    if n1 < 0 or n2 < 0:
        raise ValueError("photon numbers must be non-negative")
    out: dict[tuple[int, int], float] = {}
    for i in range(n1 + 1):
        for j in range(n2 + 1):
            x = (n1 - i + j, n2 - j + i)
            coeff = (
                math.comb(n1, i)
                * math.comb(n2, j)
                * eta ** ((n1 + n2 - i - j) / 2)
                * (1 - eta) ** ((i + j) / 2)
                * (-1) ** j
                * math.sqrt(math.factorial(x[0]) * math.factorial(x[1]) / (math.factorial(n1) * math.factorial(n2)))
            )
            out[x] = out.get(x, 0.0) + coeff
    return out


def distinguishable_transition_probability(unitary: ModeUnitary, n: Sequence[int], x: Sequence[int]) -> float:
    """Classical routing: every photon leaves port j for port k with probability |u_jk|^2."""
    ports = unitary.ports
    n = _check_vector(n, ports, "input")
    x = _check_vector(x, ports, "output")
    if sum(n) != sum(x):
        return 0.0
    probs = np.abs(unitary.matrix) ** 2
    partial = {(0,) * ports: 1.0}
    for j, nj in enumerate(n):
        if nj == 0:
            continue
        nxt: dict[tuple[int, ...], float] = {}
        for split in compositions(nj, ports):
            w = math.factorial(nj) / _factorial_product(split) * float(np.prod(probs[j] ** np.array(split)))
            if w == 0.0:
                continue
            for acc, p in partial.items():
                y = tuple(a + b for a, b in zip(acc, split))
                if all(yk <= xk for yk, xk in zip(y, x)):
                    nxt[y] = nxt.get(y, 0.0) + p * w
        partial = nxt
    return partial.get(x, 0.0)


def partial_transition_probability(unitary: ModeUnitary, states, n: Sequence[int], x: Sequence[int]) -> float:
    """P(x|n) for photons carrying (possibly) different internal states.

    ``states`` is an :class:`InternalStateSet` or an explicit overlap (Gram)
    matrix. Each port's photons are created in the internal vector given by the
    factorized Gram matrix; the network acts as U on every internal mode. Output
    amplitudes over (port, internal mode) are summed coherently, and probabilities
    are then summed over the internal modes.
    """
    ports = unitary.ports
    n = _check_vector(n, ports, "input")
    x = _check_vector(x, ports, "output")
    if sum(n) != sum(x):
        raise ValueError(f"photon number is conserved: total(n)={sum(n)} != total(x)={sum(x)}")
    factor = gram_factor(_as_gram(states, ports))
    dim = factor.shape[1]
    rows = _repeat_indices(n)
    # weights[j, k, m] = u_jk * L_jm
    weights = (unitary.matrix[:, :, None] * factor[:, None, :]).reshape(ports, ports * dim)
    norm_in = _factorial_product(n)
    total = 0.0
    for split in product(*(list(compositions(xk, dim)) for xk in x)):
        y = [c for part in split for c in part]
        sub = weights[np.ix_(rows, _repeat_indices(y))]
        total += abs(permanent(sub)) ** 2 / (norm_in * _factorial_product(y))
    return total


def count_generating_function(unitary: ModeUnitary, states, n: Sequence[int], z) -> np.ndarray:
    """Evaluate sum_x P(x|n) prod_k z_k^x_k at one or many points ``z``.

    Uses the closed form per(K[n, n]) / prod(n!) with
    K_js = <psi_j|psi_s> * sum_k conj(u_jk) u_sk z_k, evaluated with a Glynn sum
    over the row blocks (cost prod(n_j + 1), so large photon numbers are cheap).
    ``z`` has shape (..., ports); the result has shape (...).
    """
    ports = unitary.ports
    n = _check_vector(n, ports, "input")
    gram = _as_gram(states, ports)
    z = np.asarray(z, dtype=complex)
    u = unitary.matrix
    # kernel[..., j, s]
    kernel = gram * np.einsum("jk,sk,...k->...js", u.conj(), u, z)
    total = sum(n)
    if total == 0:
        return np.ones(z.shape[:-1])
    occupied = [j for j in range(ports) if n[j] > 0]
    nn = np.array([n[j] for j in occupied])
    kernel = kernel[..., occupied, :][..., :, occupied]
    result = np.zeros(z.shape[:-1], dtype=complex)
    for flips in product(*(range(c + 1) for c in nn)):
        flips = np.array(flips)
        weight = np.prod([math.comb(int(c), int(f)) for c, f in zip(nn, flips)]) * (-1) ** int(flips.sum())
        coeffs = (nn - 2 * flips).astype(float)
        col_sums = np.einsum("s,...sj->...j", coeffs, kernel)
        result = result + weight * np.prod(col_sums**nn, axis=-1)
    value = result / 2.0**total / _factorial_product(nn)
    return value.real if np.allclose(value.imag, 0.0, atol=1e-9) else value


def tritter_coincidence_theory(r12: float, r23: float, r31: float, phi: float) -> float:
    """Three-fold coincidence of a balanced tritter fed one photon per port.

    Overlaps r_jk are moduli of <psi_j|psi_k>; ``phi`` is the triad phase
    phi_12 + phi_23 + phi_31. The product term uses r31 for the pair (3, 1).
    """
    gram = tritter_overlap_gram(r12, r23, r31, phi)
    if np.linalg.eigvalsh(gram).min() < -GRAM_CLAMP:
        raise ModelError(f"overlaps ({r12}, {r23}, {r31}) with triad phase {phi} are not realizable")
    p = (2 + 4 * r12 * r23 * r31 * math.cos(phi) - r12**2 - r23**2 - r31**2) / 9
    if not -1e-12 <= p <= 1 + 1e-12:
        raise ModelError(f"coincidence probability {p} outside [0, 1]")
    return p


def tritter_overlap_gram(r12: float, r23: float, r31: float, phi: float) -> np.ndarray:
    """Gram matrix with the whole triad phase carried by the (1, 2) overlap."""
    g12 = r12 * np.exp(1j * phi)
    return np.array(
        [
            [1.0, g12, r31],
            [np.conj(g12), 1.0, r23],
            [r31, r23, 1.0],
        ],
        dtype=complex,
    )


def visibility(p_quantum: float, p_classical: float) -> float:
    """(P_c - P) / P_c."""
    if p_classical == 0:
        raise UndefinedVisibilityError("visibility is undefined when the classical probability is zero")
    return (p_classical - p_quantum) / p_classical
