"""Dense bounded-variable linear programming.

Programs are stated as

    optimize  c.x
    subject to  a_ineq[i].x  (<= or >=)  b_ineq[i]
                a_eq.x = b_eq
                lower <= x <= upper,  with [lower, upper] inside [0, 1]

and solved by a revised primal simplex that keeps every variable at a bound or
in the basis. Each row gets a slack with bounds matching its sense, so the
initial basis is the identity; rows whose slack starts outside its bounds get
an artificial variable that phase 1 drives to zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, sparse

FEAS_TOL = 1e-9
OPT_TOL = 1e-10
PIVOT_TOL = 1e-11
PIVOT_REL = 1e-9
SINGULAR_COND = 1e14
BLAND_AFTER = 50
REFACTOR_EVERY = 100
MAX_VARIABLES = 50_000
MAX_ROWS = 100_000
SENSES = ("<=", ">=")


class LpError(ValueError):
    pass


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration-limit"


def _as_matrix(a, cols: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, cols))
    if a.ndim != 2 or a.shape[1] != cols:
        raise LpError(f"constraint rows must have length {cols}, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """Bounded-variable program; see the module docstring for the layout."""

    objective: np.ndarray
    a_ineq: np.ndarray
    senses: tuple[str, ...]
    b_ineq: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        v = c.size
        a_ineq = _as_matrix(self.a_ineq, v)
        a_eq = _as_matrix(self.a_eq, v)
        b_ineq = np.asarray(self.b_ineq, dtype=float).ravel()
        b_eq = np.asarray(self.b_eq, dtype=float).ravel()
        senses = tuple(self.senses)
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (v,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (v,)).copy()
        if b_ineq.size != a_ineq.shape[0] or len(senses) != a_ineq.shape[0]:
            raise LpError("inequality rows, senses and right-hand sides disagree in number")
        if b_eq.size != a_eq.shape[0]:
            raise LpError("equality rows and right-hand sides disagree in number")
        if any(s not in SENSES for s in senses):
            raise LpError(f"senses must be '<=' or '>=', got {set(senses) - set(SENSES)}")
        for name, arr in (("objective", c), ("a_ineq", a_ineq), ("b_ineq", b_ineq), ("a_eq", a_eq), ("b_eq", b_eq)):
            if not np.all(np.isfinite(arr)):
                raise LpError(f"{name} has non-finite entries")
        if np.any(lower > upper) or np.any(lower < 0.0) or np.any(upper > 1.0):
            raise LpError("variable bounds must satisfy 0 <= lower <= upper <= 1")
        for name, arr in (
            ("objective", c), ("a_ineq", a_ineq), ("senses", senses), ("b_ineq", b_ineq),
            ("a_eq", a_eq), ("b_eq", b_eq), ("lower", lower), ("upper", upper),
        ):
            object.__setattr__(self, name, arr)

    @property
    def num_variables(self) -> int:
        return self.objective.size

    @property
    def num_inequalities(self) -> int:
        return self.a_ineq.shape[0]

    @property
    def num_equalities(self) -> int:
        return self.a_eq.shape[0]

    def with_objective(self, objective) -> "LinearProgram":
        return replace(self, objective=np.asarray(objective, dtype=float))

    def residual(self, x) -> float:
        """Largest violation of any row or bound at ``x``, in the program's own units."""
        x = np.asarray(x, dtype=float)
        worst = max(0.0, float(np.max(self.lower - x, initial=0.0)), float(np.max(x - self.upper, initial=0.0)))
        if self.num_inequalities:
            act = self.a_ineq @ x
            le = np.array([s == "<=" for s in self.senses])
            viol = np.where(le, act - self.b_ineq, self.b_ineq - act)
            worst = max(worst, float(np.max(viol, initial=0.0)))
        if self.num_equalities:
            worst = max(worst, float(np.max(np.abs(self.a_eq @ x - self.b_eq))))
        return worst


@dataclass(frozen=True)
class ScalingRecord:
    """Row factors applied by :func:`scale` (scaled row = row / factor) and the objective factor."""

    ineq_factors: np.ndarray
    eq_factors: np.ndarray
    objective_factor: float = 1.0

    def objective_in_original_units(self, value: float) -> float:
        return value * self.objective_factor


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: Status
    objective: float
    x: np.ndarray
    residual: float
    iterations: int = 0
    duals: np.ndarray | None = field(default=None, repr=False)
    # weak-duality bound on the optimum: upper for max, lower for min
    bound: float = math.nan

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _row_factors(a: np.ndarray) -> np.ndarray:
    return np.max(np.abs(a), axis=1) if a.shape[0] else np.zeros(0)


def scale(lp: LinearProgram) -> tuple[LinearProgram, ScalingRecord]:
    """Divide every row by its largest coefficient magnitude.

    Columns stay at unit scale because every variable already lives in [0, 1].
    The objective is divided by its largest magnitude; the record converts back.
    All-zero rows keep factor 1; one whose right-hand side cannot hold at 0
    raises :class:`InfeasibleRowError`.
    """
    fi = _row_factors(lp.a_ineq)
    fe = _row_factors(lp.a_eq)
    for k in np.flatnonzero(fi == 0.0):
        ok = (0.0 <= lp.b_ineq[k]) if lp.senses[k] == "<=" else (0.0 >= lp.b_ineq[k])
        if not ok:
            raise InfeasibleRowError(f"inequality row {k} is all zeros with right-hand side {lp.b_ineq[k]!r}")
    for k in np.flatnonzero(fe == 0.0):
        if lp.b_eq[k] != 0.0:
            raise InfeasibleRowError(f"equality row {k} is all zeros with right-hand side {lp.b_eq[k]!r}")
    fi = np.where(fi == 0.0, 1.0, fi)
    fe = np.where(fe == 0.0, 1.0, fe)
    cmax = float(np.max(np.abs(lp.objective), initial=0.0)) or 1.0
    scaled = LinearProgram(
        objective=lp.objective / cmax,
        a_ineq=lp.a_ineq / fi[:, None],
        senses=lp.senses,
        b_ineq=lp.b_ineq / fi,
        a_eq=lp.a_eq / fe[:, None],
        b_eq=lp.b_eq / fe,
        lower=lp.lower,
        upper=lp.upper,
    )
    return scaled, ScalingRecord(fi, fe, cmax)


class InfeasibleRowError(LpError):
    pass


def _ranged_rows(lp: LinearProgram):
    """Stack all rows as L <= a.x <= U, merging inequality rows with identical coefficients.

    Returns the matrix, the two bound vectors and, for every original row (inequalities
    first, then equalities), the index of the ranged row that carries it.
    """
    groups: dict[bytes, int] = {}
    rows, lo, hi, where = [], [], [], []
    for a, sense, b in zip(lp.a_ineq, lp.senses, lp.b_ineq):
        key = a.tobytes()
        if key not in groups:
            groups[key] = len(rows)
            rows.append(a)
            lo.append(-np.inf)
            hi.append(np.inf)
        r = groups[key]
        if sense == "<=":
            hi[r] = min(hi[r], b)
        else:
            lo[r] = max(lo[r], b)
        where.append(r)
    for a, b in zip(lp.a_eq, lp.b_eq):
        where.append(len(rows))
        rows.append(a)
        lo.append(b)
        hi.append(b)
    a = np.array(rows) if rows else np.zeros((0, lp.num_variables))
    return a, np.array(lo), np.array(hi), np.array(where, dtype=int)


class _Simplex:
    """Working state of one solve.

    Rows read ``a.x - s = 0`` with one logical ``s`` per row carrying the row bounds.
    Columns are [structural | logical | artificial].
    """

    def __init__(self, a: np.ndarray, row_lo, row_hi, lower, upper, max_iter: int):
        m, v = a.shape
        self.v, self.m = v, m
        self.max_iter = max_iter
        self.iterations = 0
        self.b = np.zeros(m)

        # nonbasic structurals start at their lower bound
        x = np.asarray(lower, dtype=float).copy()
        act = a @ x
        start = np.clip(act, row_lo, row_hi)
        art_rows = np.flatnonzero(act != start)
        k = art_rows.size
        sign = np.sign(start[art_rows] - act[art_rows])
        art_cols = np.zeros((m, k))
        art_cols[art_rows, np.arange(k)] = sign

        self.a = np.hstack([a, -np.eye(m), art_cols])
        self.n = v + m + k
        self.lo = np.concatenate([lower, row_lo, np.zeros(k)])
        self.hi = np.concatenate([upper, row_hi, np.full(k, np.inf)])
        self.x = np.concatenate([x, np.where(np.isin(np.arange(m), art_rows), start, act), np.abs(start[art_rows] - act[art_rows])])
        self.art = np.arange(v + m, self.n)
        basis = np.arange(v, v + m)
        basis[art_rows] = self.art
        self.basis = basis
        self.is_basic = np.zeros(self.n, dtype=bool)
        self.is_basic[basis] = True
        self.binv = -np.eye(m)
        for r, s in zip(art_rows, sign):
            self.binv[r, r] = s
        self.since_refactor = 0

    def refactor(self):
        basis_matrix = self.a[:, self.basis]
        try:
            self.binv = np.linalg.inv(basis_matrix)
            ok = np.all(np.isfinite(self.binv)) and np.linalg.cond(basis_matrix) < SINGULAR_COND
        except np.linalg.LinAlgError:
            ok = False
        if not ok:
            self._repair()
        nonbasic = ~self.is_basic
        self.x[self.basis] = self.binv @ (self.b - self.a[:, nonbasic] @ self.x[nonbasic])
        self.since_refactor = 0

    def _repair(self):
        """Swap numerically dependent basis columns for logicals of uncovered rows."""
        basis_matrix = self.a[:, self.basis]
        _, r, perm = linalg.qr(basis_matrix, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        rank = int(np.sum(diag > diag[0] * 1e-12)) if diag.size and diag[0] > 0 else 0
        keep, drop = perm[:rank], perm[rank:]
        q, _ = np.linalg.qr(basis_matrix[:, keep]) if rank else (np.zeros((self.m, 0)), None)
        uncovered = np.eye(self.m) - q @ q.T
        _, _, rows = linalg.qr(uncovered, mode="economic", pivoting=True)
        for pos, row in zip(drop, rows[: drop.size]):
            out = self.basis[pos]
            self.is_basic[out] = False
            self.x[out] = np.clip(self.x[out], self.lo[out], self.hi[out])
            if np.isinf(self.x[out]):
                self.x[out] = 0.0
            self.x[out] = self.lo[out] if self.x[out] - self.lo[out] <= self.hi[out] - self.x[out] else self.hi[out]
            logical = self.v + int(row)
            self.basis[pos] = logical
            self.is_basic[logical] = True
        self.binv = np.linalg.inv(self.a[:, self.basis])

    def run(self, cost: np.ndarray) -> Status:
        degenerate_streak = 0
        while True:
            if self.iterations >= self.max_iter:
                return Status.ITERATION_LIMIT
            y = cost[self.basis] @ self.binv
            d = cost - y @ self.a
            d[self.is_basic] = 0.0
            at_lo = self.x <= self.lo
            at_hi = self.x >= self.hi
            free = ~self.is_basic & ~at_lo & ~at_hi
            gain = np.where(at_lo & (d < -OPT_TOL), -d, 0.0)
            gain = np.where(at_hi & (d > OPT_TOL), np.maximum(gain, d), gain)
            gain = np.where(free & (np.abs(d) > OPT_TOL), np.abs(d), gain)
            gain[self.is_basic] = 0.0
            gain[(self.hi - self.lo) <= 0.0] = 0.0
            candidates = np.flatnonzero(gain > 0.0)
            if candidates.size == 0:
                return Status.OPTIMAL
            bland = degenerate_streak >= BLAND_AFTER
            j = int(candidates[0]) if bland else int(candidates[np.argmax(gain[candidates])])
            direction = -1.0 if d[j] > 0.0 else 1.0

            alpha = self.binv @ self.a[:, j]
            step, leave, leave_to_hi = self._ratio_test(alpha, direction, bland)
            flip = self.hi[j] - self.lo[j]
            if step == np.inf and flip == np.inf:
                raise LpError("unbounded direction in a bounded program")
            self.iterations += 1
            if flip <= step:
                step = flip
                leave = -1
            degenerate_streak = degenerate_streak + 1 if step <= FEAS_TOL else 0

            self.x[j] += direction * step
            self.x[self.basis] -= direction * step * alpha
            if leave < 0:
                self.x[j] = self.hi[j] if direction > 0 else self.lo[j]
                continue
            out = self.basis[leave]
            self.x[out] = self.hi[out] if leave_to_hi else self.lo[out]
            self._pivot(leave, j, alpha)

    def _ratio_test(self, alpha, direction, bland):
        """Harris two-pass ratio test; returns (step, row, leaves_at_upper)."""
        xb = self.x[self.basis]
        lo = self.lo[self.basis]
        hi = self.hi[self.basis]
        rate = direction * alpha
        tol = max(PIVOT_TOL, PIVOT_REL * float(np.max(np.abs(alpha), initial=0.0)))
        dec = rate > tol
        inc = rate < -tol
        with np.errstate(divide="ignore", invalid="ignore"):
            room_dec = np.where(dec, (xb - lo + FEAS_TOL) / rate, np.inf)
            room_inc = np.where(inc, (hi - xb + FEAS_TOL) / -rate, np.inf)
        room = np.minimum(room_dec, room_inc)
        bound = float(np.min(room, initial=np.inf))
        if bound == np.inf:
            return np.inf, -1, False
        # a basic variable that drifted past its bound blocks with a zero step
        bound = max(bound, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            exact_dec = np.where(dec, (xb - lo) / rate, np.inf)
            exact_inc = np.where(inc, (hi - xb) / -rate, np.inf)
        exact = np.maximum(np.minimum(exact_dec, exact_inc), 0.0)
        eligible = np.flatnonzero(exact <= bound)
        if bland:
            best = eligible[np.argmin(exact[eligible])]
            ties = eligible[exact[eligible] <= exact[best]]
            row = int(ties[np.argmin(self.basis[ties])])
        else:
            row = int(eligible[np.argmax(np.abs(alpha[eligible]))])
        return float(exact[row]), row, bool(inc[row])

    def _pivot(self, row, col, alpha):
        self.is_basic[self.basis[row]] = False
        self.is_basic[col] = True
        self.basis[row] = col
        pivot = alpha[row]
        prow = self.binv[row] / pivot
        self.binv -= np.outer(alpha, prow)
        self.binv[row] = prow
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()


def solve(lp: LinearProgram, direction: str = "max", max_iter: int = 100_000, backend: str = "simplex") -> LpSolution:
    """Optimize the objective of ``lp`` in the given direction ("min" or "max").

    The program is row-scaled first; tolerances (feasibility 1e-9, reduced cost
    1e-10) apply to the scaled data. Runs are deterministic for identical input.
    The returned duals are objective sensitivities to each right-hand side in
    original units (non-negative for binding "<=" rows of a max problem), and
    ``bound`` is the weak-duality bound they certify.

    ``backend="highs"`` hands the scaled program to the HiGHS dual simplex
    instead (see :func:`_solve_highs`); ``max_iter`` then caps its iterations.
    """
    if direction not in ("min", "max"):
        raise LpError(f"direction must be 'min' or 'max', got {direction!r}")
    if lp.num_variables > MAX_VARIABLES or lp.num_inequalities + lp.num_equalities > MAX_ROWS:
        raise LpError("program exceeds the dense solver's size limits")
    if backend == "highs":
        return _solve_highs(lp, direction, max_iter)
    if backend != "simplex":
        raise LpError(f"unknown backend {backend!r}")
    try:
        scaled, record = scale(lp)
    except InfeasibleRowError:
        return LpSolution(Status.INFEASIBLE, math.nan, lp.lower.copy(), math.inf)

    a, row_lo, row_hi, where = _ranged_rows(scaled)
    if np.any(row_lo > row_hi):
        return LpSolution(Status.INFEASIBLE, math.nan, lp.lower.copy(), math.inf)
    sx = _Simplex(a, row_lo, row_hi, scaled.lower, scaled.upper, max_iter)
    phase1 = np.zeros(sx.n)
    phase1[sx.art] = 1.0
    status = sx.run(phase1) if sx.art.size else Status.OPTIMAL
    sx.refactor()
    x = np.clip(sx.x[: sx.v], lp.lower, lp.upper)
    if status is Status.ITERATION_LIMIT:
        return LpSolution(status, math.nan, x, lp.residual(x), sx.iterations)
    if sx.art.size and np.max(sx.x[sx.art]) > FEAS_TOL:
        return LpSolution(Status.INFEASIBLE, math.nan, x, lp.residual(x), sx.iterations)
    # artificials are pinned at zero from here on
    sx.hi[sx.art] = 0.0

    sign = -1.0 if direction == "max" else 1.0
    cost = np.zeros(sx.n)
    cost[: sx.v] = sign * scaled.objective
    status = sx.run(cost)
    sx.refactor()
    x = np.clip(sx.x[: sx.v], lp.lower, lp.upper)
    objective = float(lp.objective @ x)
    if status is Status.ITERATION_LIMIT:
        return LpSolution(status, objective, x, lp.residual(x), sx.iterations)
    duals = _original_duals(sx, cost, sign, where, scaled, record)
    return LpSolution(status, objective, x, lp.residual(x), sx.iterations, duals, lagrangian_bound(lp, duals, direction))


DROP_TOL = 1e-9


def _solve_highs(lp: LinearProgram, direction: str, max_iter: int) -> LpSolution:
    """Dual simplex from HiGHS on a slightly relaxed copy of the scaled program.

    HiGHS discards matrix entries below its own threshold, which silently moves
    rows whose feasible range is far narrower than the discarded mass. Entries
    below ``DROP_TOL`` (after row scaling) are therefore removed here and each
    row range is widened by the largest and smallest contribution the removed
    entries can make over the variable box. Every point feasible for ``lp`` stays
    feasible, so the duals HiGHS returns certify a valid bound for ``lp`` even
    when the run stops at the iteration cap.
    """
    import highspy

    try:
        scaled, record = scale(lp)
    except InfeasibleRowError:
        return LpSolution(Status.INFEASIBLE, math.nan, lp.lower.copy(), math.inf)
    a, row_lo, row_hi, where = _ranged_rows(scaled)
    if np.any(row_lo > row_hi):
        return LpSolution(Status.INFEASIBLE, math.nan, lp.lower.copy(), math.inf)
    small = (np.abs(a) < DROP_TOL) & (a != 0.0)
    dropped = np.where(small, a, 0.0)
    t_min = np.minimum(dropped * lp.lower, dropped * lp.upper).sum(axis=1)
    t_max = np.maximum(dropped * lp.lower, dropped * lp.upper).sum(axis=1)
    a = np.where(small, 0.0, a)
    row_lo = row_lo - t_max
    row_hi = row_hi - t_min
    sign = 1.0 if direction == "max" else -1.0
    c = sign * scaled.objective

    h = highspy.Highs()
    for key, value in (
        ("output_flag", False), ("presolve", "off"), ("solver", "simplex"), ("simplex_strategy", 1),
        ("threads", 1), ("random_seed", 0), ("simplex_iteration_limit", int(max_iter)),
        ("small_matrix_value", DROP_TOL / 10),
    ):
        h.setOptionValue(key, value)
    model = highspy.HighsLp()
    model.num_col_, model.num_row_ = a.shape[1], a.shape[0]
    model.col_cost_ = c
    model.col_lower_, model.col_upper_ = lp.lower, lp.upper
    model.row_lower_ = np.where(np.isfinite(row_lo), row_lo, -highspy.kHighsInf)
    model.row_upper_ = np.where(np.isfinite(row_hi), row_hi, highspy.kHighsInf)
    csc = sparse.csc_matrix(a)
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_, model.a_matrix_.index_, model.a_matrix_.value_ = csc.indptr, csc.indices, csc.data
    model.sense_ = highspy.ObjSense.kMaximize
    h.passModel(model)
    h.run()
    model_status = h.getModelStatus()
    solution = h.getSolution()
    x = np.clip(np.array(solution.col_value), lp.lower, lp.upper) if solution.value_valid else lp.lower.copy()
    if model_status == highspy.HighsModelStatus.kInfeasible:
        return LpSolution(Status.INFEASIBLE, math.nan, x, lp.residual(x), int(h.getInfo().simplex_iteration_count))
    status = Status.OPTIMAL if model_status == highspy.HighsModelStatus.kOptimal else Status.ITERATION_LIMIT
    y = np.array(solution.row_dual) if solution.dual_valid else np.zeros(a.shape[0])
    # HiGHS sign conventions differ between versions; keep whichever orientation certifies more
    best = min(certified_bound(a, row_lo, row_hi, lp.lower, lp.upper, c, s * y) for s in (1.0, -1.0))
    best = min(best, certified_bound(a, row_lo, row_hi, lp.lower, lp.upper, c, np.zeros(a.shape[0])))
    bound = sign * best * record.objective_factor
    objective = float(lp.objective @ x)
    return LpSolution(status, objective, x, lp.residual(x), int(h.getInfo().simplex_iteration_count), None, bound)


def _original_duals(sx: _Simplex, cost, sign, where, scaled: LinearProgram, record: ScalingRecord) -> np.ndarray:
    pi = cost[sx.basis] @ sx.binv
    logical = np.arange(sx.v, sx.v + sx.m)
    # sensitivity of the optimum to a logical's active bound; zero when basic
    sens = np.where(sx.is_basic[logical], 0.0, sign * pi)
    at_hi = sx.x[logical] >= sx.hi[logical]
    m_i = scaled.num_inequalities
    out = np.zeros(m_i + scaled.num_equalities)
    for i, r in enumerate(where):
        if i >= m_i:
            out[i] = sens[r]
        elif (scaled.senses[i] == "<=") == bool(at_hi[r]):
            out[i] = sens[r]
    factors = np.concatenate([record.ineq_factors, record.eq_factors])
    return out * record.objective_factor / factors


def certified_bound(a, row_lo, row_hi, lower, upper, objective, y) -> float:
    """Upper bound on max c.x over {row_lo <= a.x <= row_hi, lower <= x <= upper}.

    Weak duality with multipliers ``y``: for any y the program value is at most
    sum_r max(y_r lo_r, y_r hi_r) + sum_v max over x_v of (c - a^T y)_v x_v.
    Multipliers pointing at an infinite side are dropped. Rounding in the
    matrix-vector product and in the products y_r * b_r is covered by a
    first-order error allowance, so the returned float is a valid bound.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float).copy()
    row_lo = np.asarray(row_lo, dtype=float)
    row_hi = np.asarray(row_hi, dtype=float)
    y[(y > 0) & ~np.isfinite(row_hi)] = 0.0
    y[(y < 0) & ~np.isfinite(row_lo)] = 0.0
    y[~np.isfinite(y)] = 0.0
    c = np.asarray(objective, dtype=float)
    eps = np.finfo(float).eps
    reduced = c - a.T @ y
    slack = (a.shape[0] + 2) * eps * (np.abs(a).T @ np.abs(y) + np.abs(c)) * 1.01
    reduced_hi = reduced + slack
    side = np.where(y > 0, row_hi, np.where(y < 0, row_lo, 0.0))
    terms = y * side
    box = np.where(reduced_hi > 0, reduced_hi * upper, reduced_hi * lower)
    value = math.fsum(terms) + math.fsum(box)
    allowance = 2 * eps * (math.fsum(np.abs(terms)) + math.fsum(np.abs(box))) + 4 * eps * abs(value)
    return value + allowance


def lagrangian_bound(lp: LinearProgram, duals, direction: str = "max") -> float:
    """Bound on the optimum implied by any multiplier vector (weak duality).

    ``duals`` holds one multiplier per inequality row, then per equality row,
    in the sign convention of :attr:`LpSolution.duals`. Multipliers with the
    wrong sign for their row are dropped, so the result is valid for every
    input: an upper bound for "max" and a lower bound for "min".
    """
    y = np.asarray(duals, dtype=float)
    m_i = lp.num_inequalities
    flip = 1.0 if direction == "max" else -1.0
    yi = flip * y[:m_i]
    le = np.array([s == "<=" for s in lp.senses], dtype=bool)
    yi = np.where(le, np.maximum(yi, 0.0), np.minimum(yi, 0.0))
    ye = flip * y[m_i:]
    a = np.vstack([lp.a_ineq, lp.a_eq])
    lo = np.concatenate([np.where(le, -np.inf, lp.b_ineq), lp.b_eq])
    hi = np.concatenate([np.where(le, lp.b_ineq, np.inf), lp.b_eq])
    return flip * certified_bound(a, lo, hi, lp.lower, lp.upper, flip * lp.objective, np.concatenate([yi, ye]))


TEXT_HEADER = "# bounded-lp v1"


def _fmt(values) -> str:
    # shortest positional digits that round-trip to the same double
    return " ".join(np.format_float_positional(float(v), unique=True, trim="0") for v in values)


def export_text(lp: LinearProgram) -> str:
    """Portable fixed-point text form: header, objective, bounds, one constraint per line."""
    lines = [TEXT_HEADER, f"variables {lp.num_variables}"]
    lines.append("objective " + _fmt(lp.objective))
    lines.append("lower " + _fmt(lp.lower))
    lines.append("upper " + _fmt(lp.upper))
    for a, sense, b in zip(lp.a_ineq, lp.senses, lp.b_ineq):
        lines.append(f"row {_fmt(a)} {sense} {_fmt([b])}")
    for a, b in zip(lp.a_eq, lp.b_eq):
        lines.append(f"row {_fmt(a)} = {_fmt([b])}")
    return "\n".join(lines) + "\n"


def import_text(text: str) -> LinearProgram:
    """Inverse of :func:`export_text`; the round trip is bit-exact."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != TEXT_HEADER:
        raise LpError("missing program header")
    fields: dict[str, np.ndarray] = {}
    ineq, senses, b_ineq, eq, b_eq = [], [], [], [], []
    nvar = None
    for ln in lines[1:]:
        key, _, rest = ln.partition(" ")
        if key == "variables":
            nvar = int(rest)
        elif key in ("objective", "lower", "upper"):
            fields[key] = np.array([float(t) for t in rest.split()])
        elif key == "row":
            tokens = rest.split()
            if len(tokens) < 2:
                raise LpError(f"malformed constraint line: {ln!r}")
            coeffs = np.array([float(t) for t in tokens[:-2]])
            sense, rhs = tokens[-2], float(tokens[-1])
            if sense == "=":
                eq.append(coeffs)
                b_eq.append(rhs)
            elif sense in SENSES:
                ineq.append(coeffs)
                senses.append(sense)
                b_ineq.append(rhs)
            else:
                raise LpError(f"unknown sense {sense!r}")
        else:
            raise LpError(f"unknown line {key!r}")
    if nvar is None or any(k not in fields for k in ("objective", "lower", "upper")):
        raise LpError("incomplete program text")
    return LinearProgram(
        fields["objective"],
        np.array(ineq) if ineq else np.zeros((0, nvar)),
        tuple(senses),
        np.array(b_ineq),
        np.array(eq) if eq else np.zeros((0, nvar)),
        np.array(b_eq),
        fields["lower"],
        fields["upper"],
    )
