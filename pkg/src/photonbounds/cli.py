"""Command-line front end: HOM dip and tritter sweeps, single bounds, oracle tables.

Every subcommand reads one JSON config (validated against :data:`CONFIG_SCHEMA`,
unknown keys rejected) and writes CSV with a ``#``-prefixed JSON metadata line,
or JSON for ``bound`` and ``oracle``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import jsonschema
import numpy as np

from photonbounds import estimator
from photonbounds.devices import click_patterns
from photonbounds.estimator import DecoyGrid, build_program, default_settings, simulate_dataset
from photonbounds.fockcore import (
    InternalStateSet,
    ModeUnitary,
    compositions,
    distinguishable_transition_probability,
    gram_factor,
    partial_transition_probability,
    transition_probability,
    tritter_coincidence_theory,
    tritter_overlap_gram,
)
from photonbounds.forwardmodel import ObservedStatistics, sample_click_counts

VERSION = "0.1.0"
SIG_DIGITS = 12

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED, EXIT_PARTIAL = 0, 2, 3, 4

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}, "minItems": 1}
_vector = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}
_sweep = {
    "type": "object",
    "additionalProperties": False,
    "required": ["start", "stop", "step"],
    "properties": {"start": {"type": "number"}, "stop": {"type": "number"}, "step": {"type": "number", "exclusiveMinimum": 0}},
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["network"],
    "properties": {
        "network": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["beamsplitter", "tritter", "identity", "matrix"]},
                "eta": {"type": "number", "minimum": 0, "maximum": 1},
                "ports": {"type": "integer", "minimum": 1, "maximum": 3},
                "real": _matrix,
                "imag": _matrix,
            },
        },
        "source": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "intensities": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "fwhm": {"type": "number", "exclusiveMinimum": 0},
                "delays": {"type": "array", "items": {"type": "number"}},
                "polarizations": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["real"],
                    "properties": {"real": _matrix, "imag": _matrix},
                },
                "sweep": _sweep,
                "scenario": {"enum": ["delay", "phase"]},
                "overlap": {"type": "number", "minimum": 0, "maximum": 1},
                "shots": {"type": "integer", "minimum": 1},
            },
        },
        "detector": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "eta_d": {"type": "number", "minimum": 0, "maximum": 1},
                "p_dark": {"type": "number", "minimum": 0, "maximum": 1},
                "omegas": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}, "minItems": 1},
            },
        },
        "estimator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m_cut": {"type": "integer", "minimum": 0},
                "targets": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["n", "x"],
                        "properties": {"n": _vector, "x": _vector},
                    },
                },
                "backend": {"enum": ["highs", "simplex"]},
                "max_iter": {"type": "integer", "minimum": 1},
            },
        },
        "output": {"type": "string"},
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, immutable view of a config document."""

    raw: dict
    unitary: ModeUnitary
    grid: DecoyGrid
    targets: tuple
    fwhm: float
    delays: tuple | None
    polarizations: np.ndarray | None
    sweep: tuple | None
    scenario: str
    overlap: float
    shots: int | None
    backend: str
    max_iter: int

    @property
    def ports(self) -> int:
        return self.unitary.ports


def _network(network: dict) -> ModeUnitary:
    kind = network["kind"]
    if kind == "beamsplitter":
        return ModeUnitary.beamsplitter(network.get("eta", 0.5))
    if kind == "tritter":
        return ModeUnitary.tritter()
    if kind == "identity":
        return ModeUnitary.identity(network.get("ports", 1))
    if "real" not in network:
        raise ConfigError("explicit network needs a 'real' matrix")
    matrix = np.array(network["real"], dtype=complex)
    if "imag" in network:
        matrix = matrix + 1j * np.array(network["imag"], dtype=float)
    try:
        return ModeUnitary(matrix)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(doc: dict, m_cut: int | None = None, sweep: tuple | None = None) -> ExperimentConfig:
    """Validate ``doc`` against the schema and resolve defaults."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{'/'.join(map(str, exc.absolute_path)) or 'config'}: {exc.message}") from exc
    unitary = _network(doc["network"])
    if unitary.ports > 3:
        raise ConfigError("at most three ports are supported")
    kind = "tritter" if unitary.ports == 3 else "beamsplitter"
    base = default_settings(kind)
    src = doc.get("source", {})
    det = doc.get("detector", {})
    est = doc.get("estimator", {})
    grid = DecoyGrid(
        tuple(src.get("intensities", base.intensities)),
        tuple(det.get("omegas", base.omegas)),
        det.get("eta_d", base.eta_d),
        det.get("p_dark", base.p_dark),
        est.get("m_cut", base.m_cut) if m_cut is None else m_cut,
    )
    targets = []
    for t in est.get("targets", []):
        n, x = tuple(t["n"]), tuple(t["x"])
        if len(n) != unitary.ports or len(x) != unitary.ports:
            raise ConfigError(f"target {t} does not match the {unitary.ports}-port network")
        if sum(n) > grid.m_cut:
            raise ConfigError(f"target input {n} exceeds M_cut={grid.m_cut}")
        targets.append((n, x))
    delays = src.get("delays")
    if delays is not None and len(delays) != unitary.ports:
        raise ConfigError("need one delay per port")
    pol = None
    if "polarizations" in src:
        pol = np.array(src["polarizations"]["real"], dtype=complex)
        if "imag" in src["polarizations"]:
            pol = pol + 1j * np.array(src["polarizations"]["imag"], dtype=float)
        if pol.shape[0] != unitary.ports:
            raise ConfigError("need one polarization vector per port")
        try:
            InternalStateSet(pol)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if sweep is None and "sweep" in src:
        sweep = (src["sweep"]["start"], src["sweep"]["stop"], src["sweep"]["step"])
    return ExperimentConfig(
        raw=doc,
        unitary=unitary,
        grid=grid,
        targets=tuple(targets),
        fwhm=src.get("fwhm", 1.0),
        delays=None if delays is None else tuple(delays),
        polarizations=pol,
        sweep=sweep,
        scenario=src.get("scenario", "delay"),
        overlap=src.get("overlap", 0.5),
        shots=src.get("shots"),
        backend=est.get("backend", estimator.DEFAULT_BACKEND),
        max_iter=est.get("max_iter", estimator.DEFAULT_MAX_ITER),
    )


def parse_sweep(text: str) -> tuple[float, float, float]:
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"sweep must read start:stop:step, got {text!r}") from None
    if not step > 0:
        raise ConfigError("sweep step must be positive")
    return start, stop, step


def sweep_points(sweep: tuple[float, float, float]) -> list[float]:
    start, stop, step = sweep
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    # rounding to 12 digits keeps grid points like 0.25 * k exact in the output
    return [round(start + k * step, 12) for k in range(max(count, 0))]


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{float(value):.{SIG_DIGITS}g}"


def write_table(path: Path | None, metadata: dict, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return text


def read_table(path) -> tuple[dict, list[str], list[list]]:
    """Inverse of :func:`write_table`: metadata, header and rows (numbers parsed as floats)."""
    lines = Path(path).read_text().splitlines()
    metadata = json.loads(lines[0][2:])
    reader = csv.reader(lines[1:])
    header = next(reader)
    rows = []
    for row in reader:
        parsed = []
        for v in row:
            try:
                parsed.append(float(v))
            except ValueError:
                parsed.append(v)
        rows.append(parsed)
    return metadata, header, rows


# ---------------------------------------------------------------- pipeline


def _dataset(cfg: ExperimentConfig, states: InternalStateSet, seed: int | None):
    data = simulate_dataset(cfg.unitary, states, cfg.grid)
    if cfg.shots is None:
        return data
    rng = np.random.default_rng(seed)
    noisy = []
    for src, det, obs in data:
        counts = sample_click_counts(obs, cfg.shots, int(rng.integers(2**63)))
        freq = np.array([counts[t] for t in click_patterns(cfg.ports)], dtype=float) / cfg.shots
        noisy.append((src, det, ObservedStatistics(src, det, freq)))
    return noisy


def _bounds_for(cfg: ExperimentConfig, states: InternalStateSet, targets, seed: int | None):
    program = build_program(_dataset(cfg, states, seed), cfg.grid.m_cut)
    return [estimator.bound(n, x, program, backend=cfg.backend, max_iter=cfg.max_iter) for n, x in targets]


def _status(result) -> str:
    statuses = result.statuses
    if all(s == "optimal" for s in statuses.values()):
        return "optimal"
    return ";".join(f"{k}={v}" for k, v in sorted(statuses.items()))


def _hom_point(args):
    cfg, dt, seed = args
    states = _hom_states(cfg, dt)
    return _bounds_for(cfg, states, cfg.targets, seed)


def _hom_states(cfg: ExperimentConfig, dt: float) -> InternalStateSet:
    pol = cfg.polarizations if cfg.polarizations is not None else np.ones((cfg.ports, 1))
    delays = np.zeros(cfg.ports)
    delays[-1] = dt * cfg.fwhm
    return InternalStateSet(pol, delays, cfg.fwhm)


def _map(func, jobs, threads: int):
    if threads <= 1 or len(jobs) <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, jobs))


def _flag(lower, upper, theory) -> bool:
    if math.isnan(lower) or math.isnan(upper):
        return True
    return not (lower <= theory <= upper) or lower > upper


def _target_label(n, x) -> str:
    return "n" + "-".join(map(str, n)) + "_x" + "-".join(map(str, x))


def _target_paths(out: Path | None, targets) -> list[Path | None]:
    if out is None:
        return [None] * len(targets)
    if len(targets) == 1:
        return [out]
    return [out.with_name(f"{out.stem}_{_target_label(n, x)}{out.suffix}") for n, x in targets]


def _metadata(cfg: ExperimentConfig, kind: str, extra: dict) -> dict:
    meta = {
        "artifact": "photonbounds",
        "version": VERSION,
        "experiment": kind,
        "config": cfg.raw,
        "grids": {
            "intensities": list(cfg.grid.intensities),
            "omegas": list(cfg.grid.omegas),
            "eta_d": cfg.grid.eta_d,
            "p_dark": cfg.grid.p_dark,
            "m_cut": cfg.grid.m_cut,
        },
        "backend": cfg.backend,
        "max_iter": cfg.max_iter,
    }
    meta.update(extra)
    return meta


def run_hom_dip(cfg: ExperimentConfig, out: Path | None = None, seed: int | None = None, threads: int = 1):
    """Sweep dT/dT_fwhm for every target; returns (tables, exit code).

    Data depend on the delay only through its modulus, so each |dT| is solved
    once and mirrored.
    """
    if cfg.ports != 2:
        raise ConfigError("hom-dip needs a 2-port network")
    targets = cfg.targets or (((3, 3), (3, 3)),)
    cfg = replace(cfg, targets=targets)
    points = sweep_points(cfg.sweep or (-3.0, 3.0, 0.25))
    distinct = sorted({abs(p) for p in points})
    solved = dict(zip(distinct, _map(_hom_point, [(cfg, d, seed) for d in distinct], threads)))
    tables, failures, flagged_total = [], 0, 0
    for t_index, ((n, x), path) in enumerate(zip(targets, _target_paths(out, targets))):
        classical = distinguishable_transition_probability(cfg.unitary, n, x)
        rows, violations = [], []
        for p in points:
            res = solved[abs(p)][t_index]
            theory = partial_transition_probability(cfg.unitary, _hom_states(cfg, p), n, x) if sum(n) == sum(x) else 0.0
            if _flag(res.lower, res.upper, theory):
                violations.append(p)
            if math.isnan(res.lower):
                failures += 1
            rows.append([p, theory, classical, res.lower, res.upper, res.leftover_max, _status(res)])
        flagged_total += len(violations)
        meta = _metadata(cfg, "hom-dip", {"target": {"n": list(n), "x": list(x)}, "violations": {"count": len(violations), "points": violations}})
        header = ["dt_over_DT", "theory", "classical", "lower", "upper", "leftover_max", "status"]
        tables.append(write_table(path, meta, header, rows))
        print(f"hom-dip {_target_label(n, x)}: {len(points)} points, violations: {len(violations)}", file=sys.stderr)
    code = _exit_code(failures, flagged_total, len(points) * len(targets))
    return tables, code


def _exit_code(failures: int, flagged: int, total: int) -> int:
    if total and failures == total:
        return EXIT_ALL_FAILED
    if flagged:
        return EXIT_PARTIAL
    return EXIT_OK


def phase_scenario_vectors(overlap: float, phi: float) -> np.ndarray:
    """Three internal vectors with |<psi_j|psi_k>| = overlap and triad phase ``phi``.

    The Gram matrix puts the whole phase on the (1, 2) overlap and is factored
    by eigendecomposition into explicit vectors of a 3-dimensional space.
    """
    factor = gram_factor(tritter_overlap_gram(overlap, overlap, overlap, phi))
    vecs = np.zeros((3, 3), dtype=complex)
    vecs[:, : factor.shape[1]] = factor
    return vecs


def _tritter_states(cfg: ExperimentConfig, value: float) -> InternalStateSet:
    if cfg.scenario == "delay":
        pol = cfg.polarizations if cfg.polarizations is not None else np.ones((3, 1))
        return InternalStateSet(pol, np.arange(3) * value * cfg.fwhm, cfg.fwhm)
    return InternalStateSet(phase_scenario_vectors(cfg.overlap, value), np.zeros(3), cfg.fwhm)


def _tritter_theory(cfg: ExperimentConfig, states: InternalStateSet) -> float:
    gram = states.gram()
    r12, r23, r31 = abs(gram[0, 1]), abs(gram[1, 2]), abs(gram[2, 0])
    phi = float(np.angle(gram[0, 1] * gram[1, 2] * gram[2, 0]))
    return tritter_coincidence_theory(r12, r23, r31, phi)


def _tritter_point(args):
    cfg, value, seed = args
    try:
        states = _tritter_states(cfg, value)
        theory = _tritter_theory(cfg, states)
    except ValueError as exc:
        return None, str(exc)
    return (theory, _bounds_for(cfg, states, (((1, 1, 1), (1, 1, 1)),), seed)[0]), None


def run_tritter(cfg: ExperimentConfig, out: Path | None = None, seed: int | None = None, threads: int = 1):
    """Scenario "delay": delays (0, v, 2v) * fwhm; scenario "phase": triad phase v at fixed overlaps."""
    if cfg.ports != 3:
        raise ConfigError("tritter needs a 3-port network")
    default = (-3.0, 3.0, 0.25) if cfg.scenario == "delay" else (0.0, 2 * math.pi, math.pi / 8)
    points = sweep_points(cfg.sweep or default)
    key = (lambda v: abs(v)) if cfg.scenario == "delay" else (lambda v: v)
    distinct = sorted({key(p) for p in points})
    solved = dict(zip(distinct, _map(_tritter_point, [(cfg, d, seed) for d in distinct], threads)))
    rows, violations, skipped, failures = [], [], [], 0
    for p in points:
        result, error = solved[key(p)]
        if result is None:
            skipped.append({"value": p, "error": error})
            rows.append([p, "nan", "nan", "nan", "nan", "skipped"])
            continue
        theory, res = result
        if _flag(res.lower, res.upper, theory):
            violations.append(p)
        if math.isnan(res.lower):
            failures += 1
        rows.append([p, theory, res.lower, res.upper, res.leftover_max, _status(res)])
    construction = None
    if cfg.scenario == "phase":
        construction = "gram_factor of [[1, r e^{i phi}, r], [r e^{-i phi}, 1, r], [r, r, 1]]; rows are the port vectors"
    meta = _metadata(
        cfg,
        "tritter",
        {
            "scenario": cfg.scenario,
            "delays": "(0, v, 2v) * fwhm" if cfg.scenario == "delay" else None,
            "overlap": cfg.overlap if cfg.scenario == "phase" else None,
            "polarization_construction": construction,
            "violations": {"count": len(violations), "points": violations},
            "skipped": skipped,
        },
    )
    header = ["sweep_value", "theory", "lower", "upper", "leftover_max", "status"]
    table = write_table(out, meta, header, rows)
    print(f"tritter {cfg.scenario}: {len(points)} points, violations: {len(violations)}, skipped: {len(skipped)}", file=sys.stderr)
    code = _exit_code(failures + len(skipped), len(violations) + len(skipped), len(points))
    return table, code


def _states_for(cfg: ExperimentConfig) -> InternalStateSet:
    pol = cfg.polarizations if cfg.polarizations is not None else np.ones((cfg.ports, 1))
    delays = np.zeros(cfg.ports) if cfg.delays is None else np.array(cfg.delays)
    return InternalStateSet(pol, delays, cfg.fwhm)


def run_bound(cfg: ExperimentConfig, out: Path | None = None, seed: int | None = None):
    if not cfg.targets:
        raise ConfigError("bound needs at least one target")
    states = _states_for(cfg)
    results = _bounds_for(cfg, states, cfg.targets, seed)
    payload = []
    flagged = 0
    for (n, x), res in zip(cfg.targets, results):
        entry = res.as_dict()
        if sum(n) == sum(x):
            entry["theory"] = partial_transition_probability(cfg.unitary, states, n, x)
            flagged += _flag(res.lower, res.upper, entry["theory"])
        payload.append(entry)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out is not None:
        out.write_text(text + "\n")
    failures = sum(math.isnan(r.lower) for r in results)
    return text, _exit_code(failures, flagged, len(results))


def run_oracle(cfg: ExperimentConfig, out: Path | None = None):
    """Transition, partial and classical probabilities for every target, plus normalization sums."""
    states = _states_for(cfg)
    targets = cfg.targets or tuple((n, x) for n in compositions(2, cfg.ports) for x in compositions(2, cfg.ports))
    rows = []
    for n, x in targets:
        if sum(n) != sum(x):
            raise ConfigError(f"photon number is conserved: {n} -> {x}")
        rows.append(
            {
                "n": list(n),
                "x": list(x),
                "transition": transition_probability(cfg.unitary, n, x),
                "partial": partial_transition_probability(cfg.unitary, states, n, x),
                "classical": distinguishable_transition_probability(cfg.unitary, n, x),
            }
        )
    norms = []
    for n in sorted({tuple(t[0]) for t in targets}):
        outs = list(compositions(sum(n), cfg.ports))
        norms.append({"n": list(n), "sum_transition": math.fsum(transition_probability(cfg.unitary, n, x) for x in outs)})
    text = json.dumps({"probabilities": rows, "normalization": norms}, indent=2)
    if out is not None:
        out.write_text(text + "\n")
    return text, EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photonbounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("hom-dip", "tritter", "bound", "oracle", "validate-config"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path)
        p.add_argument("--seed", type=int, help="seed for finite-shot sampling (config source.shots)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--m-cut", type=int, dest="m_cut")
        p.add_argument("--sweep", type=str, help="start:stop:step")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = json.loads(args.config.read_text())
        sweep = parse_sweep(args.sweep) if args.sweep else None
        cfg = load_config(doc, m_cut=args.m_cut, sweep=sweep)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or (Path(doc["output"]) if "output" in doc else None)
    try:
        if args.command == "validate-config":
            print("config ok")
            return EXIT_OK
        if args.command == "hom-dip":
            tables, code = run_hom_dip(cfg, out, args.seed, args.threads)
            if out is None:
                sys.stdout.write("".join(tables))
            return code
        if args.command == "tritter":
            table, code = run_tritter(cfg, out, args.seed, args.threads)
        elif args.command == "bound":
            table, code = run_bound(cfg, out, args.seed)
        else:
            table, code = run_oracle(cfg, out)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if out is None:
        sys.stdout.write(table if table.endswith("\n") else table + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
