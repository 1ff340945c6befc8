"""Dense revised simplex with bounded variables and dual extraction.

Duals follow the convention ``reduced_costs = c - A.T @ row_duals`` for a
minimisation, so ``<=`` rows carry nonpositive duals and ``>=`` rows
nonnegative ones.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

LE, EQ, GE = "<=", "==", ">="
_SENSE_CODE = {LE: 1, "<": 1, "L": 1, EQ: 0, "=": 0, "E": 0, GE: -1, ">": -1, "G": -1}

# set by the test suite to audit KKT conditions on every optimal solve
KKT_AUDIT: list | None = None


class LpError(RuntimeError):
    pass


class LpIterationLimit(LpError):
    """Simplex hit its iteration cap before reaching a terminal status."""


class SingularMatrixError(LpError):
    pass


@dataclass
class LpProblem:
    """``min c @ x`` s.t. ``A x (sense) rhs`` and ``lower <= x <= upper``.

    Rows flagged in ``lazy`` are only brought into the working problem once a
    candidate solution violates them; the answer is the same as solving with
    every row present.
    """

    c: np.ndarray
    A: np.ndarray
    senses: list
    rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    lazy: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        m = self.A.shape[0]
        self.senses = [s if s in (LE, EQ, GE) else {1: LE, 0: EQ, -1: GE}[_SENSE_CODE[s]] for s in self.senses]
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(m)
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, math.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        self.lazy = np.zeros(m, dtype=bool) if self.lazy is None else np.asarray(self.lazy, dtype=bool)
        if len(self.senses) != m or self.lower.shape != (n,) or self.upper.shape != (n,) or self.lazy.shape != (m,):
            raise ValueError("inconsistent LP dimensions")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(np.isnan(self.A)) or np.any(np.isnan(self.c)) or np.any(np.isnan(self.rhs)):
            raise ValueError("NaN in LP data")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def subproblem(self, rows: np.ndarray) -> "LpProblem":
        rows = np.asarray(rows)
        return LpProblem(self.c, self.A[rows], [self.senses[i] for i in rows], self.rhs[rows],
                         self.lower, self.upper)


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray
    objective_value: float
    row_duals: np.ndarray
    reduced_costs: np.ndarray
    iterations: int = 0
    basis: tuple = field(default=(), repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pow2(v: np.ndarray) -> np.ndarray:
    out = np.ones_like(v)
    nz = v > 0
    out[nz] = np.exp2(-np.round(np.log2(v[nz])))
    return out


class _Simplex:
    """Working state of one bounded-variable primal simplex solve."""

    REFACTOR_EVERY = 60
    STALL_LIMIT = 30

    def __init__(self, c, A, codes, b, lo, hi, tol, max_iter):
        m, n = A.shape
        self.m, self.n = m, n
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0
        # columns: structurals | logicals | artificials
        self.A = A
        self.b = b
        self.cost2 = np.concatenate([c, np.zeros(2 * m)])
        self.lo = np.concatenate([lo, np.where(codes == -1, -math.inf, 0.0), np.zeros(m)])
        self.hi = np.concatenate([hi, np.where(codes == 1, math.inf, 0.0), np.zeros(m)])
        self.art_sign = np.ones(m)
        self.x = np.zeros(n + 2 * m)
        self.is_basic = np.zeros(n + 2 * m, dtype=bool)
        self.basis = np.zeros(m, dtype=int)
        self.enterable = np.ones(n + 2 * m, dtype=bool)
        self.enterable[n + m:] = False
        self._crash()

    # --- column access -------------------------------------------------
    def column(self, j):
        n, m = self.n, self.m
        if j < n:
            return self.A[:, j]
        col = np.zeros(m)
        if j < n + m:
            col[j - n] = 1.0
        else:
            col[j - n - m] = self.art_sign[j - n - m]
        return col

    def basis_matrix(self):
        return np.column_stack([self.column(j) for j in self.basis]) if self.m else np.zeros((0, 0))

    # --- start ---------------------------------------------------------
    def _crash(self):
        n, m = self.n, self.m
        A, x = self.A, self.x
        lo, hi = self.lo, self.hi
        for j in range(n):
            x[j] = lo[j] if math.isfinite(lo[j]) else (hi[j] if math.isfinite(hi[j]) else 0.0)
        r = self.b - A @ x[:n]
        nz = A != 0
        counts = nz.sum(axis=0)
        singles: dict[int, list[int]] = {}
        for j in np.flatnonzero(counts == 1):
            singles.setdefault(int(np.flatnonzero(nz[:, j])[0]), []).append(int(j))
        diag = np.ones(m)
        used: set[int] = set()
        for i in range(m):
            s_lo, s_hi = lo[n + i], hi[n + i]
            if s_lo - 1e-12 <= r[i] <= s_hi + 1e-12:
                self.basis[i] = n + i
                x[n + i] = min(max(r[i], s_lo), s_hi)
                continue
            target = s_lo if r[i] < s_lo else s_hi
            x[n + i] = target
            best = None
            for j in singles.get(i, ()):
                if j in used:
                    continue
                val = x[j] + (r[i] - target) / A[i, j]
                if lo[j] - 1e-12 <= val <= hi[j] + 1e-12 and (best is None or self.cost2[j] < self.cost2[best[0]]):
                    best = (j, min(max(val, lo[j]), hi[j]))
            if best is not None:
                j, val = best
                used.add(j)
                x[j] = val
                self.basis[i] = j
                diag[i] = A[i, j]
            else:
                k = n + m + i
                self.art_sign[i] = 1.0 if r[i] > target else -1.0
                x[k] = abs(r[i] - target)
                self.hi[k] = math.inf
                self.basis[i] = k
                diag[i] = self.art_sign[i]
        self.is_basic[self.basis] = True
        self.Binv = np.diag(1.0 / diag) if m else np.zeros((0, 0))
        self.pivots = 0

    def refactor(self):
        B = self.basis_matrix()
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise LpError("basis became singular") from exc
        n, m, x = self.n, self.m, self.x
        nb = ~self.is_basic
        rhs = self.b - self.A @ np.where(nb[:n], x[:n], 0.0)
        rhs -= np.where(nb[n:n + m], x[n:n + m], 0.0)
        rhs -= self.art_sign * np.where(nb[n + m:], x[n + m:], 0.0)
        self.x[self.basis] = self.Binv @ rhs
        self.pivots = 0

    # --- iterations ----------------------------------------------------
    def duals(self, cost):
        return self.Binv.T @ cost[self.basis]

    def reduced(self, cost, y):
        n, m = self.n, self.m
        d = np.empty(n + 2 * m)
        d[:n] = cost[:n] - self.A.T @ y
        d[n:n + m] = cost[n:n + m] - y
        d[n + m:] = cost[n + m:] - self.art_sign * y
        return d

    def run(self, cost):
        tol = self.tol
        dtol = tol * 1e-1
        ptol = 1e-9
        stall = 0
        bland = False
        while True:
            if self.pivots >= self.REFACTOR_EVERY:
                self.refactor()
            y = self.duals(cost)
            d = self.reduced(cost, y)
            x, lo, hi = self.x, self.lo, self.hi
            cand = self.enterable & ~self.is_basic & (hi > lo)
            at_lo = x <= lo
            at_hi = x >= hi
            free = ~at_lo & ~at_hi
            improving = cand & (((d < -dtol) & ~at_hi) | ((d > dtol) & ~at_lo) | (free & (np.abs(d) > dtol)))
            idx = np.flatnonzero(improving)
            if idx.size == 0:
                return "optimal"
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise LpIterationLimit(f"simplex exceeded {self.max_iter} iterations")
            q = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if d[q] < 0 else -1.0
            w = self.Binv @ self.column(q)
            rate = -direction * w  # change of x_B per unit step
            xb = x[self.basis]
            lb, ub = lo[self.basis], hi[self.basis]
            theta = hi[q] - lo[q]
            leave = -1
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.full(self.m, math.inf)
                dec = rate < -ptol
                inc = rate > ptol
                ratios[dec] = (xb[dec] - lb[dec]) / -rate[dec]
                ratios[inc] = (ub[inc] - xb[inc]) / rate[inc]
            ratios = np.maximum(ratios, 0.0)
            if self.m:
                rmin = ratios.min()
                if rmin < theta:
                    ties = np.flatnonzero(ratios <= rmin + 1e-12 * (1 + rmin))
                    if bland:
                        leave = int(ties[np.argmin(self.basis[ties])])
                    else:
                        leave = int(ties[np.argmax(np.abs(w[ties]))])
                    theta = ratios[leave]
            if not math.isfinite(theta):
                return "unbounded"
            if theta <= 1e-12:
                stall += 1
                if stall > self.STALL_LIMIT:
                    bland = True
            else:
                stall = 0
                bland = False
            x[self.basis] = xb + theta * rate
            x[q] += direction * theta
            if leave < 0:
                # bound flip, basis unchanged
                x[q] = hi[q] if direction > 0 else lo[q]
                continue
            out = self.basis[leave]
            x[out] = lb[leave] if rate[leave] < 0 else ub[leave]
            self.is_basic[out] = False
            self.is_basic[q] = True
            self.basis[leave] = q
            piv = w[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(w, row)
            self.Binv[leave] = row
            self.pivots += 1


def _sense_codes(senses) -> np.ndarray:
    return np.array([_SENSE_CODE[s] for s in senses], dtype=int)


def _solve_dense(problem: LpProblem, tol: float, max_iter: int | None) -> LpSolution:
    c, A, b = problem.c, problem.A, problem.rhs
    lo, hi = problem.lower, problem.upper
    m, n = A.shape
    codes = _sense_codes(problem.senses)
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    # power-of-two equilibration keeps the scaling exact
    absA = np.abs(A)
    rs = _pow2(absA.max(axis=1)) if m else np.ones(0)
    cs = _pow2((absA * rs[:, None]).max(axis=0)) if m else np.ones(n)
    As = A * rs[:, None] * cs[None, :]
    cscaled = c * cs
    ws = _pow2(np.array([np.abs(cscaled).max()]))[0] if n else 1.0
    cscaled = cscaled * ws
    lo_s = lo / cs
    hi_s = hi / cs
    bs = b * rs

    sx = _Simplex(cscaled, As, codes, bs, lo_s, hi_s, tol, max_iter)
    status = "optimal"
    if np.any(sx.basis >= n + m):
        phase1 = np.zeros(n + 2 * m)
        phase1[n + m:] = 1.0
        sx.run(phase1)
        sx.refactor()
        infeas = sx.x[n + m:].sum()
        if infeas > tol * (1.0 + (np.abs(bs).max() if m else 0.0)):
            status = "infeasible"
        sx.hi[n + m:] = 0.0
    if status == "optimal":
        status = sx.run(sx.cost2)
        sx.refactor()
    xs = sx.x[:n] * cs
    if status == "optimal":
        # snap nonbasic values exactly onto their bounds
        nb = ~sx.is_basic[:n]
        xs[nb] = np.where(sx.x[:n][nb] <= sx.lo[:n][nb], lo[nb], np.where(sx.x[:n][nb] >= sx.hi[:n][nb], hi[nb], xs[nb]))
        y = sx.duals(sx.cost2) * rs / ws if m else np.zeros(0)
    else:
        y = np.zeros(m)
    d = c - A.T @ y if m else c.copy()
    obj = float(c @ xs) if status == "optimal" else (math.inf if status == "infeasible" else -math.inf)
    return LpSolution(status, xs, obj, y, d, sx.iterations, tuple(int(j) for j in sx.basis))


def _solve_highs(problem: LpProblem, tol: float) -> LpSolution:
    from scipy.optimize import linprog

    A, b = problem.A, problem.rhs
    codes = _sense_codes(problem.senses)
    ub_rows = np.flatnonzero(codes != 0)
    eq_rows = np.flatnonzero(codes == 0)
    sign = codes[ub_rows].astype(float)
    A_ub = A[ub_rows] * sign[:, None] if ub_rows.size else None
    b_ub = b[ub_rows] * sign if ub_rows.size else None
    kwargs = dict(A_ub=A_ub, b_ub=b_ub,
                  A_eq=A[eq_rows] if eq_rows.size else None, b_eq=b[eq_rows] if eq_rows.size else None,
                  bounds=list(zip([None if not math.isfinite(v) else v for v in problem.lower],
                                  [None if not math.isfinite(v) else v for v in problem.upper])),
                  method="highs")
    opts = {"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol}
    res = linprog(problem.c, options=opts, **kwargs)
    if res.status in (2, 3):
        # presolve can misclassify; confirm without it
        res = linprog(problem.c, options={**opts, "presolve": False}, **kwargs)
    m, n = A.shape
    if res.status == 2:
        return LpSolution("infeasible", np.zeros(n), math.inf, np.zeros(m), problem.c.copy())
    if res.status == 3:
        return LpSolution("unbounded", np.zeros(n), -math.inf, np.zeros(m), problem.c.copy())
    if res.status != 0:
        raise LpIterationLimit(res.message)
    y = np.zeros(m)
    if ub_rows.size:
        y[ub_rows] = res.ineqlin.marginals * sign
    if eq_rows.size:
        y[eq_rows] = res.eqlin.marginals
    return LpSolution("optimal", res.x, float(res.fun), y, problem.c - A.T @ y, int(res.nit))


def _solve_one(problem, tol, backend, max_iter):
    if backend == "simplex":
        return _solve_dense(problem, tol, max_iter)
    if backend == "highs":
        return _solve_highs(problem, tol)
    raise ValueError(f"unknown LP backend {backend!r}")


def row_violation(problem: LpProblem, x: np.ndarray) -> np.ndarray:
    """Nonnegative amount by which each row is violated at ``x``."""
    act = problem.A @ x
    codes = _sense_codes(problem.senses)
    v = np.zeros(problem.n_rows)
    v = np.where(codes == 1, act - problem.rhs, v)
    v = np.where(codes == -1, problem.rhs - act, v)
    v = np.where(codes == 0, np.abs(act - problem.rhs), v)
    return np.maximum(v, 0.0)


def solve_lp(problem: LpProblem, tolerance: float = 1e-8, backend: str = "simplex",
             max_iter: int | None = None) -> LpSolution:
    """Solve ``problem`` to optimality, infeasibility or unboundedness.

    Raises
    ------
    LpIterationLimit
        If the simplex does not terminate within ``max_iter`` pivots.
    """
    m = problem.n_rows
    if not problem.lazy.any():
        sol = _solve_one(problem, tolerance, backend, max_iter)
    else:
        active = ~problem.lazy
        while True:
            rows = np.flatnonzero(active)
            sub = problem.subproblem(rows)
            sol = _solve_one(sub, tolerance, backend, max_iter)
            if sol.status == "unbounded" and not active.all():
                active[:] = True
                continue
            if sol.status != "optimal":
                sol = LpSolution(sol.status, sol.x, sol.objective_value, np.zeros(m), sol.reduced_costs, sol.iterations)
                break
            viol = row_violation(problem, sol.x)
            scale = 1.0 + np.abs(problem.rhs)
            add = ~active & (viol > tolerance * scale)
            if not add.any():
                y = np.zeros(m)
                y[rows] = sol.row_duals
                sol = LpSolution("optimal", sol.x, sol.objective_value, y, problem.c - problem.A.T @ y,
                                 sol.iterations, sol.basis)
                break
            active |= add
    if KKT_AUDIT is not None and sol.optimal:
        KKT_AUDIT.append(kkt_residuals(problem, sol))
    return sol


def kkt_residuals(problem: LpProblem, sol: LpSolution) -> dict:
    """Relative KKT residuals of an optimal solution.

    Returns a dict with ``primal``, ``dual``, ``complementarity`` and ``gap``.
    """
    A, b, c, x, y = problem.A, problem.rhs, problem.c, sol.x, sol.row_duals
    lo, hi = problem.lower, problem.upper
    codes = _sense_codes(problem.senses)
    d = c - A.T @ y if problem.n_rows else c.copy()
    xscale = 1.0 + max(np.abs(b).max(initial=0.0), np.abs(x).max(initial=0.0))
    cscale = 1.0 + np.abs(c).max(initial=0.0)

    bound_v = np.maximum(np.maximum(lo - x, x - hi), 0.0)
    primal = max(row_violation(problem, x).max(initial=0.0), bound_v.max(initial=0.0)) / xscale

    row_dual_v = np.where(codes == 1, np.maximum(y, 0.0), np.where(codes == -1, np.maximum(-y, 0.0), 0.0))
    dpos, dneg = np.maximum(d, 0.0), np.maximum(-d, 0.0)
    var_dual_v = np.where(np.isfinite(lo), 0.0, dpos) + np.where(np.isfinite(hi), 0.0, dneg)
    dual = max(row_dual_v.max(initial=0.0), var_dual_v.max(initial=0.0)) / cscale

    slack = np.abs(A @ x - b) if problem.n_rows else np.zeros(0)
    comp_rows = np.abs(y) * slack
    gl = np.where(np.isfinite(lo), x - lo, 0.0)
    gu = np.where(np.isfinite(hi), hi - x, 0.0)
    comp_vars = dpos * np.abs(gl) + dneg * np.abs(gu)
    comp = max(comp_rows.max(initial=0.0), comp_vars.max(initial=0.0)) / (cscale * xscale)

    dobj = float(b @ y) + float(np.sum(np.where(dpos > 0, dpos * np.where(np.isfinite(lo), lo, 0.0), 0.0)))
    dobj -= float(np.sum(np.where(dneg > 0, dneg * np.where(np.isfinite(hi), hi, 0.0), 0.0)))
    gap = abs(float(c @ x) - dobj) / (1.0 + abs(float(c @ x)))
    return {"primal": primal, "dual": dual, "complementarity": comp, "gap": gap}


def solve_linear_system(A, b) -> np.ndarray:
    """Solve ``A x = b`` for square nonsingular ``A``; ``b`` may be a matrix.

    Raises
    ------
    SingularMatrixError
        When ``A`` is numerically singular.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if A.shape[0] == 0:
        return np.zeros_like(b)
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("matrix is singular") from exc
    if np.linalg.cond(A) > 1e13:
        raise SingularMatrixError("matrix is numerically singular")
    return x
