"""End-to-end acceptance checks; each prints one PASS/FAIL line with the measured value.

Iteration budgets keep the whole module to tens of minutes on one core. Every
reported bound is a weak-duality certificate, so a smaller budget can only
loosen a bound, never move it across the true value.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from photonbounds import cli, lpsolver
from photonbounds.devices import DetectorBank, SourceIntensities, click_patterns, leftover_term
from photonbounds.estimator import bound, build_program, default_settings, simulate_dataset, truncated_pattern_probability
from photonbounds.fockcore import (
    InternalStateSet,
    ModeUnitary,
    beamsplitter_output_amplitudes,
    distinguishable_transition_probability,
    partial_transition_probability,
    permanent,
    transition_probability,
    tritter_coincidence_theory,
)
from photonbounds.forwardmodel import PulseConfiguration, pattern_distribution

from test_lpsolver import dual_vertex_optimum, random_program

VISIBILITY_FLOOR = 0.999
POINT_SECONDS = 120.0
DIP_ITER = 7000
SWEEP_ITER = 1500
TRITTER_ITER = 1000
TRITTER_WIDTH = 0.02


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} | {detail}")
        return passed

    return emit


def dip_point(eta, target):
    grid = default_settings("beamsplitter")
    u = ModeUnitary.beamsplitter(eta)
    start = time.perf_counter()
    program = build_program(simulate_dataset(u, InternalStateSet.identical(2), grid), grid.m_cut)
    res = bound(*target, program, max_iter=DIP_ITER)
    seconds = time.perf_counter() - start
    classical = distinguishable_transition_probability(u, *target)
    return res, classical, 1.0 - res.upper / classical, seconds


@pytest.mark.parametrize(
    "number, eta, target",
    [(1, 0.5, ((3, 3), (3, 3))), (2, 5 / 6, ((5, 1), (5, 1)))],
    ids=["six-photon-balanced", "six-photon-five-sixths"],
)
def test_dip_visibility(report, number, eta, target):
    res, classical, vis, seconds = dip_point(eta, target)
    passed = vis >= VISIBILITY_FLOOR and seconds <= POINT_SECONDS
    report(
        number,
        passed,
        f"P{target} upper={res.upper:.6g} classical={classical:.6g} V>={vis:.6f} "
        f"(floor {VISIBILITY_FLOOR}), {seconds:.1f} s, statuses {res.statuses}",
    )
    assert passed


def test_hom_sweep_bracket(report, tmp_path):
    violations, rows_seen, widths = 0, 0, []
    for eta, target in ((0.5, {"n": [3, 3], "x": [3, 3]}), (5 / 6, {"n": [5, 1], "x": [5, 1]})):
        cfg = cli.load_config(
            {"network": {"kind": "beamsplitter", "eta": eta}, "estimator": {"targets": [target], "max_iter": SWEEP_ITER}},
            sweep=(-3.0, 3.0, 0.25),
        )
        out = tmp_path / f"dip_{target['n'][0]}.csv"
        cli.run_hom_dip(cfg, out)
        meta, _, rows = cli.read_table(out)
        violations += meta["violations"]["count"]
        rows_seen += len(rows)
        widths += [row[4] - row[3] for row in rows]
    passed = violations == 0 and rows_seen == 50
    report(3, passed, f"{rows_seen} rows, {violations} violations, widths {min(widths):.3g}..{max(widths):.3g}")
    assert passed


def test_tritter_bracket_and_width(report, tmp_path):
    violations, widths, skipped = 0, [], 0
    for scenario in ("delay", "phase"):
        doc = {"network": {"kind": "tritter"}, "source": {"scenario": scenario, "overlap": 0.5}, "estimator": {"max_iter": TRITTER_ITER}}
        cfg = cli.load_config(doc)
        out = tmp_path / f"tritter_{scenario}.csv"
        cli.run_tritter(cfg, out)
        meta, _, rows = cli.read_table(out)
        violations += meta["violations"]["count"]
        skipped += len(meta["skipped"])
        widths += [row[3] - row[2] for row in rows if row[-1] != "skipped"]
    bracket = violations == 0 and skipped == 0
    passed = bracket and max(widths) <= TRITTER_WIDTH
    report(
        4,
        passed,
        f"{len(widths)} points, {violations} violations, max width {max(widths):.4g} (limit {TRITTER_WIDTH}), "
        f"min width {min(widths):.4g}",
    )
    assert passed


def test_oracle_exactness(report):
    u = ModeUnitary.beamsplitter(0.5)
    errors = [abs(transition_probability(u, (1, 1), (1, 1))), abs(transition_probability(u, (1, 1), (2, 0)) - 0.5)]
    table_error = 0.0
    for eta in (0.5, 0.3, 5 / 6):
        splitter = ModeUnitary.beamsplitter(eta)
        for total in range(7):
            for n1 in range(total + 1):
                amps = beamsplitter_output_amplitudes(eta, n1, total - n1)
                for x1 in range(total + 1):
                    x = (x1, total - x1)
                    rows = [0] * n1 + [1] * (total - n1)
                    cols = [0] * x1 + [1] * (total - x1)
                    norm = math.prod(math.factorial(v) for v in (n1, total - n1, *x))
                    perm = permanent(splitter.matrix[np.ix_(rows, cols)]) if total else 1.0
                    table_error = max(table_error, abs(abs(amps.get(x, 0.0)) ** 2 - abs(perm) ** 2 / norm))
    passed = max(errors) <= 1e-12 and table_error <= 1e-10
    report(5, passed, f"HOM errors {max(errors):.2g}, closed-form vs permanent max error {table_error:.2g}")
    assert passed


def test_cross_formalism(report):
    rng = np.random.default_rng(2024)
    worst = -math.inf
    for _ in range(25):
        ports = int(rng.integers(1, 4))
        u = {1: ModeUnitary.identity(1), 2: ModeUnitary.beamsplitter(float(rng.random())), 3: ModeUnitary.tritter()}[ports]
        pol = rng.normal(size=(ports, 2)) + 1j * rng.normal(size=(ports, 2))
        pol /= np.linalg.norm(pol, axis=1)[:, None]
        states = InternalStateSet(pol, rng.normal(size=ports) * 0.5)
        src = SourceIntensities(tuple(rng.dirichlet(np.ones(ports)) * rng.uniform(0.05, 1.5)))
        det = DetectorBank(tuple(rng.uniform(0.05, 0.8, ports)), 1e-6)
        m_cut = 12
        lam = leftover_term(src, m_cut)
        probs = pattern_distribution(PulseConfiguration(u, states, src, det))
        for theta, p in zip(click_patterns(ports), probs):
            gap = abs(p - truncated_pattern_probability(u, states, src, det, theta, m_cut)) - lam - 1e-8
            worst = max(worst, gap)
    passed = worst <= 0.0
    report(6, passed, f"25 configurations, max(|difference| - Lambda - 1e-8) = {worst:.3g}")
    assert passed


def test_tritter_formula(report):
    rng = np.random.default_rng(99)
    u = ModeUnitary.tritter()
    worst = 0.0
    for _ in range(20):
        vecs = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        vecs /= np.linalg.norm(vecs, axis=1)[:, None]
        gram = vecs.conj() @ vecs.T
        phi = float(np.angle(gram[0, 1] * gram[1, 2] * gram[2, 0]))
        theory = tritter_coincidence_theory(abs(gram[0, 1]), abs(gram[1, 2]), abs(gram[2, 0]), phi)
        worst = max(worst, abs(theory - partial_transition_probability(u, gram, (1, 1, 1), (1, 1, 1))))
    passed = worst <= 1e-8
    report(7, passed, f"20 random overlap sets, max error {worst:.2g}")
    assert passed


def test_solver_against_enumeration(report):
    worst = 0.0
    for seed in range(100):
        lp = random_program(seed, 20)
        sol = lpsolver.solve(lp, "max")
        worst = max(worst, abs(sol.objective - dual_vertex_optimum(lp)))
    lp = random_program(12345, 20)
    runs = [lpsolver.solve(lp, "max") for _ in range(3)]
    identical = all(np.array_equal(r.x, runs[0].x) and r.objective == runs[0].objective for r in runs)
    passed = worst <= 1e-7 and identical
    report(8, passed, f"100 programs, max objective error {worst:.2g}, repeated runs bit-identical: {identical}")
    assert passed


def test_normalization_suites(report):
    here = Path(__file__).parent
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(here / "test_devices.py"), str(here / "test_fockcore.py")],
        capture_output=True,
        text=True,
    )
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()[-200:]
    passed = proc.returncode == 0
    report(9, passed, f"devices and fockcore suites: {summary}")
    assert passed
