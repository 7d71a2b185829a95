"""Linear-programming bounds on P(x|n) from decoy and detector-decoy click data.

Every observed pattern probability is linear in the unknown conditional
probabilities q(n, x) = P(x|n):

    P_theta^{mu,kappa} = sum_{n in S_cut} P_n^mu sum_{x <= n} q(n, x) P^kappa(theta|x) + tail,

with 0 <= tail <= Lambda^mu, the Poisson mass outside the truncation set. Each
(setting, pattern) pair contributes the two inequalities implied by that
bracket, each input block is normalized, and a target q is maximized and
minimized.

Reported bounds are never raw solver objectives. They are weak-duality bounds
evaluated from the solver's multipliers with a rounding allowance, so they
hold whatever the solver's status (see :func:`photonbounds.lpsolver.certified_bound`).
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from photonbounds import lpsolver
from photonbounds.devices import (
    DetectorBank,
    SourceIntensities,
    leftover_term,
    pattern_block,
    poisson_block,
)
from photonbounds.fockcore import InternalStateSet, ModeUnitary, count_generating_function, photon_vectors
from photonbounds.forwardmodel import PulseConfiguration, synthesize_dataset

# absorbs rounding in the synthesized observations; rows otherwise pin to ~1e-19
ROUNDING_SLACK = 1e-12
LOOSE_LEFTOVER = 0.5
DEFAULT_BACKEND = "highs"
DEFAULT_MAX_ITER = 20_000


class EstimatorError(ValueError):
    pass


class QueryError(KeyError):
    pass


@dataclass(frozen=True)
class TruncationSet:
    """Enumeration of the LP unknowns q(n, x), n in S_cut and total(x) <= total(n).

    Order is lexicographic in (total(n), n, total(x), x).
    """

    m_cut: int
    ports: int
    variables: tuple = field(init=False, repr=False)
    _position: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.m_cut < 0 or self.ports < 1:
            raise EstimatorError("need m_cut >= 0 and at least one port")
        inputs = photon_vectors(self.m_cut, self.ports)
        variables = tuple((n, x) for n in inputs for x in photon_vectors(sum(n), self.ports))
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "_position", {v: i for i, v in enumerate(variables)})

    def __len__(self) -> int:
        return len(self.variables)

    @property
    def inputs(self) -> tuple[tuple[int, ...], ...]:
        return photon_vectors(self.m_cut, self.ports)

    def index(self, n: Sequence[int], x: Sequence[int]) -> int:
        key = (tuple(int(v) for v in n), tuple(int(v) for v in x))
        try:
            return self._position[key]
        except KeyError:
            raise QueryError(f"P({key[1]}|{key[0]}) is outside the truncation set (M_cut={self.m_cut})") from None


@dataclass(frozen=True)
class DecoyGrid:
    """Per-port intensity and attenuation grids; settings are their full cartesian product."""

    intensities: tuple[float, ...]
    omegas: tuple[float, ...]
    eta_d: float = 0.8
    p_dark: float = 1e-6
    m_cut: int = 10

    def settings(self, ports: int) -> list[tuple[SourceIntensities, DetectorBank]]:
        out = []
        for mu in itertools.product(self.intensities, repeat=ports):
            for om in itertools.product(self.omegas, repeat=ports):
                out.append((SourceIntensities(mu), DetectorBank.from_attenuators(om, self.eta_d, self.p_dark)))
        return out


def default_settings(kind: str) -> DecoyGrid:
    """Grids used by the two reference experiments; every value can be overridden."""
    if kind == "beamsplitter":
        return DecoyGrid((0.05, 0.1, 0.2, 0.4, 0.8, 1.4), (1.0, 0.75, 0.5, 0.25, 0.0625), m_cut=10)
    if kind == "tritter":
        return DecoyGrid((0.1, 0.3, 0.8), (1.0, 0.3), m_cut=6)
    raise EstimatorError(f"unknown experiment kind {kind!r}")


@dataclass(frozen=True, eq=False)
class EstimatorProgram:
    """Row-scaled program plus what is needed to interpret it."""

    lp: lpsolver.LinearProgram
    truncation: TruncationSet
    leftovers: np.ndarray
    warnings: tuple[str, ...] = ()


def simulate_dataset(unitary: ModeUnitary, states: InternalStateSet, grid: DecoyGrid):
    """Noiseless observations for every setting of ``grid`` from the pulse model."""
    ports = unitary.ports
    base = PulseConfiguration(unitary, states, SourceIntensities((0.0,) * ports), DetectorBank((0.0,) * ports))
    configs = [base.with_setting(src, det) for src, det in grid.settings(ports)]
    return [(s.source, s.detectors, s) for s in synthesize_dataset(configs)]


def build_program(dataset, m_cut: int, slack: float = ROUNDING_SLACK) -> EstimatorProgram:
    """Constraint system for a list of (SourceIntensities, DetectorBank, ObservedStatistics).

    For each setting and pattern two rows are emitted, in this order:
    ``sum <= P + slack`` and ``sum >= P - Lambda - slack``. One normalization
    row per input block follows. Rows are equilibrated with :func:`lpsolver.scale`.
    """
    if not dataset:
        raise EstimatorError("dataset is empty")
    ports = dataset[0][0].ports
    for src, det, obs in dataset:
        if src.ports != ports or det.ports != ports or np.asarray(obs.probabilities).size != 2**ports:
            raise EstimatorError("every setting must share the same port count")
    trunc = TruncationSet(m_cut, ports)
    n_arr = np.array([n for n, _ in trunc.variables])
    x_arr = np.array([x for _, x in trunc.variables])
    n_patterns = 2**ports

    rows = np.empty((2 * n_patterns * len(dataset), len(trunc)))
    rhs = np.empty(rows.shape[0])
    leftovers = np.empty(len(dataset))
    notes = []
    r = 0
    for k, (src, det, obs) in enumerate(dataset):
        lam = leftover_term(src, m_cut)
        leftovers[k] = lam
        if lam > LOOSE_LEFTOVER:
            notes.append(f"setting {k}: leftover {lam:.3g} exceeds {LOOSE_LEFTOVER}, bounds will be loose")
        coeff = poisson_block(src, n_arr)[:, None] * pattern_block(det, x_arr)
        probs = np.asarray(obs.probabilities, dtype=float)
        for t in range(n_patterns):
            rows[r] = rows[r + 1] = coeff[:, t]
            rhs[r] = probs[t] + slack
            rhs[r + 1] = probs[t] - lam - slack
            r += 2
    senses = ("<=", ">=") * (rows.shape[0] // 2)

    inputs = trunc.inputs
    eq = np.zeros((len(inputs), len(trunc)))
    block = {n: i for i, n in enumerate(inputs)}
    for j, (n, _) in enumerate(trunc.variables):
        eq[block[n], j] = 1.0
    raw = lpsolver.LinearProgram(np.zeros(len(trunc)), rows, senses, rhs, eq, np.ones(len(inputs)), 0.0, 1.0)
    try:
        scaled, _ = lpsolver.scale(raw)
    except lpsolver.InfeasibleRowError as exc:
        # left unscaled so the solver reports the contradiction per query
        scaled = raw
        notes.append(f"data contradict the model: {exc}")
    for msg in notes:
        warnings.warn(msg, stacklevel=2)
    return EstimatorProgram(scaled, trunc, leftovers, tuple(notes))


@dataclass(frozen=True)
class BoundResult:
    target_n: tuple[int, ...]
    target_x: tuple[int, ...]
    lower: float
    upper: float
    leftover_max: float
    variables: int
    inequality_rows: int
    equality_rows: int
    statuses: dict

    def as_dict(self) -> dict:
        return {
            "target": {"n": list(self.target_n), "x": list(self.target_x)},
            "lower": self.lower,
            "upper": self.upper,
            "leftover_max": self.leftover_max,
            "variables": self.variables,
            "inequality_rows": self.inequality_rows,
            "equality_rows": self.equality_rows,
            "statuses": dict(self.statuses),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def bound(
    target_n: Sequence[int],
    target_x: Sequence[int],
    program: EstimatorProgram,
    backend: str = DEFAULT_BACKEND,
    max_iter: int = DEFAULT_MAX_ITER,
) -> BoundResult:
    """Certified [lower, upper] for P(target_x | target_n).

    Runs one max and one min solve with a unit objective on the target. The
    reported values are the weak-duality bounds certified by each solve's
    multipliers, clipped to [0, 1]; an iteration-limited solve still yields a
    valid (possibly loose) bound. An infeasible program gives NaN bounds.
    """
    trunc = program.truncation
    j = trunc.index(target_n, target_x)
    c = np.zeros(len(trunc))
    c[j] = 1.0
    lp = program.lp.with_objective(c)
    hi = lpsolver.solve(lp, "max", max_iter=max_iter, backend=backend)
    lo = lpsolver.solve(lp, "min", max_iter=max_iter, backend=backend)
    statuses = {"max": hi.status.value, "min": lo.status.value}
    if lpsolver.Status.INFEASIBLE in (hi.status, lo.status):
        upper = lower = math.nan
    else:
        upper = min(1.0, hi.bound) if math.isfinite(hi.bound) else 1.0
        lower = max(0.0, lo.bound) if math.isfinite(lo.bound) else 0.0
    return BoundResult(
        tuple(int(v) for v in target_n),
        tuple(int(v) for v in target_x),
        float(lower),
        float(upper),
        float(np.max(program.leftovers, initial=0.0)),
        len(trunc),
        program.lp.num_inequalities,
        program.lp.num_equalities,
        statuses,
    )


def truncated_pattern_probability(
    unitary: ModeUnitary,
    states,
    source: SourceIntensities,
    detectors: DetectorBank,
    theta: Sequence[int],
    m_cut: int,
) -> float:
    """Right-hand side of the master linear relation restricted to total(n) <= m_cut.

    Sums P_n^mu * sum_x P(x|n) P^kappa(theta|x) over n in S_cut. The inner sum
    over x is done exactly through the photon-count generating function: with
    s_k = (1 - p_dark)(1 - kappa_k), expanding the clicking factors
    prod (1 - s_k^x_k) turns P^kappa(theta|x) into a signed sum of monomials
    prod_k z_k^x_k.
    """
    ports = unitary.ports
    theta = tuple(int(t) for t in theta)
    quiet = [k for k in range(ports) if theta[k] == 0]
    clicks = [k for k in range(ports) if theta[k] == 1]
    points, signs, prefactors = [], [], []
    for r in range(len(clicks) + 1):
        for subset in itertools.combinations(clicks, r):
            z = np.ones(ports)
            pre = 1.0
            for k in quiet + list(subset):
                z[k] = 1.0 - detectors.kappa[k]
                pre *= 1.0 - detectors.p_dark
            points.append(z)
            signs.append((-1) ** r)
            prefactors.append(pre)
    points = np.array(points)
    weights = np.array(signs) * np.array(prefactors)
    total = 0.0
    for n in photon_vectors(m_cut, ports):
        pn = float(poisson_block(source, np.array([n]))[0])
        if pn == 0.0:
            continue
        g = np.real(count_generating_function(unitary, states, n, points))
        total += pn * float(weights @ g)
    return total
