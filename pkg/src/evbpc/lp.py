"""Linear programs with bounded variables: a revised simplex and a HiGHS bridge.

Rows are ``a x  (<= | = | >=)  b``. Each row gets a slack ``s`` with
``a x + s = b``; the slack bounds encode the sense (``[0, inf)`` for ``<=``,
``(-inf, 0]`` for ``>=``, ``[0, 0]`` for ``=``). Row duals are ``y = c_B B^-1``,
the sensitivity of the optimum to the right-hand side, so a binding ``<=`` row
of a minimization has ``y <= 0`` and a binding ``>=`` row has ``y >= 0``.

The simplex keeps a dense explicit basis inverse with rank-one updates and
refactorizes periodically. Phase 1 is the composite method: minimize the sum
of bound violations of basic variables from whatever basis we start with, so a
warm start from a previous (now primal infeasible) basis needs no special path.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

INF = math.inf

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"

# nonbasic status codes
BASIC, AT_LOWER, AT_UPPER, FREE = 0, 1, 2, 3
_STATUS_NAMES = {BASIC: "B", AT_LOWER: "L", AT_UPPER: "U", FREE: "F"}
_STATUS_CODES = {v: k for k, v in _STATUS_NAMES.items()}


class LpError(RuntimeError):
    pass


class LpStallError(LpError):
    """Iteration cap hit without reaching optimality."""


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    obj: float


@dataclass
class Constraint:
    name: str
    coeffs: dict[int, float]
    sense: str
    rhs: float


@dataclass
class LpModel:
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    obj_constant: float = 0.0

    def __post_init__(self):
        self._var_index = {v.name: i for i, v in enumerate(self.variables)}

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, obj: float = 0.0) -> int:
        if name in self._var_index:
            raise ValueError(f"duplicate variable {name!r}")
        if math.isnan(lb) or math.isnan(ub) or math.isnan(obj) or lb > ub:
            raise ValueError(f"bad bounds/objective for {name!r}")
        self._var_index[name] = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), float(obj)))
        return len(self.variables) - 1

    def add_constraint(self, name: str, coeffs: Mapping[int, float], sense: str, rhs: float) -> int:
        if sense not in ("<=", ">=", "="):
            raise ValueError(f"bad sense {sense!r}")
        if len(coeffs) > 16:
            # bulk check; mapping keys are unique, so only zeros need dropping
            js = np.fromiter(coeffs.keys(), dtype=np.int64, count=len(coeffs))
            vals = np.fromiter(coeffs.values(), dtype=float, count=len(coeffs))
            if js.min() < 0 or js.max() >= len(self.variables):
                bad = js[(js < 0) | (js >= len(self.variables))][0]
                raise ValueError(f"constraint {name!r} references unknown variable {bad}")
            if not np.isfinite(vals).all():
                raise ValueError(f"constraint {name!r} has non-finite coefficient")
            nz = vals != 0.0
            clean = dict(zip(js[nz].tolist(), vals[nz].tolist()))
        else:
            clean = {}
            for j, a in coeffs.items():
                if not 0 <= j < len(self.variables):
                    raise ValueError(f"constraint {name!r} references unknown variable {j}")
                if math.isnan(a) or math.isinf(a):
                    raise ValueError(f"constraint {name!r} has non-finite coefficient")
                if a != 0.0:
                    clean[int(j)] = clean.get(int(j), 0.0) + float(a)
        if math.isnan(rhs):
            raise ValueError(f"constraint {name!r} has NaN rhs")
        self.constraints.append(Constraint(name, clean, sense, float(rhs)))
        return len(self.constraints) - 1

    def var(self, name: str) -> int:
        return self._var_index[name]

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    def arrays(self):
        """``(A csc, b, c, lo, hi, senses)`` for the structural problem."""
        counts = np.fromiter((len(con.coeffs) for con in self.constraints), dtype=np.int64,
                             count=self.n_rows)
        nnz = int(counts.sum())
        rows = np.repeat(np.arange(self.n_rows), counts)
        cols = np.fromiter(itertools.chain.from_iterable(con.coeffs.keys() for con in self.constraints),
                           dtype=np.int64, count=nnz)
        vals = np.fromiter(itertools.chain.from_iterable(con.coeffs.values() for con in self.constraints),
                           dtype=float, count=nnz)
        A = sp.csc_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_vars))
        b = np.array([c.rhs for c in self.constraints], dtype=float)
        c = np.array([v.obj for v in self.variables], dtype=float)
        lo = np.array([v.lb for v in self.variables], dtype=float)
        hi = np.array([v.ub for v in self.variables], dtype=float)
        return A, b, c, lo, hi, [con.sense for con in self.constraints]

    def to_lp_text(self) -> str:
        """CPLEX-LP rendering for cross-checking with external solvers."""
        def term(a, name, first):
            sign = "-" if a < 0 else ("" if first else "+")
            return f"{sign} {abs(a)!r} {name}".strip()

        def clean(name):
            return name.replace("[", "(").replace("]", ")").replace(",", "_")

        names = [clean(v.name) for v in self.variables]
        out = ["Minimize", " obj: " + (" ".join(term(v.obj, names[j], k == 0) for k, (j, v) in enumerate(
            (j, v) for j, v in enumerate(self.variables) if v.obj != 0)) or "0")]
        out.append("Subject To")
        for con in self.constraints:
            lhs = " ".join(term(a, names[j], k == 0) for k, (j, a) in enumerate(sorted(con.coeffs.items()))) or "0"
            op = {"<=": "<=", ">=": ">=", "=": "="}[con.sense]
            out.append(f" {clean(con.name)}: {lhs} {op} {con.rhs!r}")
        out.append("Bounds")
        for name, v in zip(names, self.variables):
            lo = "-inf" if v.lb == -INF else repr(v.lb)
            hi = "+inf" if v.ub == INF else repr(v.ub)
            out.append(f" {lo} <= {name} <= {hi}")
        out.append("End")
        return "\n".join(out) + "\n"


@dataclass
class LpSolution:
    status: str
    x: np.ndarray
    duals: np.ndarray
    objective: float
    iterations: int = 0
    basis: dict | None = None
    var_names: list[str] = field(default_factory=list, repr=False)
    row_names: list[str] = field(default_factory=list, repr=False)
    reduced_costs: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def primal(self) -> dict[str, float]:
        return dict(zip(self.var_names, self.x.tolist()))

    @property
    def dual_map(self) -> dict[str, float]:
        return dict(zip(self.row_names, self.duals.tolist()))


# ---------------------------------------------------------------- simplex core

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-7
HARRIS_TOL = 1e-9
REFACTOR_EVERY = 50
DEGENERATE_LIMIT = 50
PERTURB_SCALE = 1e-6
MAX_PERTURBATIONS = 3


def _slack_bounds(senses):
    lo = np.array([0.0 if s in ("<=", "=") else -INF for s in senses])
    hi = np.array([0.0 if s in (">=", "=") else INF for s in senses])
    return lo, hi


def _nonbasic_status(lo: float, hi: float) -> int:
    if lo > -INF:
        return AT_LOWER
    if hi < INF:
        return AT_UPPER
    return FREE


def _value_at(status: int, lo: float, hi: float) -> float:
    return lo if status == AT_LOWER else hi if status == AT_UPPER else 0.0


class _Simplex:
    def __init__(self, A, b, c, lo, hi, status, max_iter):
        self.A = A.tocsc()
        self.b = b
        self.c = c
        self.lo = lo
        self.hi = hi
        self.m, self.N = A.shape
        self.status = status
        self.basic = np.flatnonzero(status == BASIC)
        assert len(self.basic) == self.m
        self.x = np.array([_value_at(s, l, h) if s != BASIC else 0.0 for s, l, h in zip(status, lo, hi)])
        self.max_iter = max_iter
        self.iterations = 0
        self.fixed = lo == hi
        self.restarts = 0
        self.stats = {"degenerate": 0, "bland": 0, "phase1": 0, "flips": 0, "perturbations": 0, "dual": 0}
        self.true_lo, self.true_hi = lo.copy(), hi.copy()
        self.perturbed = False
        self.rng = np.random.default_rng(0)
        self.refactor()

    def column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        s, e = self.A.indptr[j], self.A.indptr[j + 1]
        col[self.A.indices[s:e]] = self.A.data[s:e]
        return col

    def _invert_basis(self) -> np.ndarray:
        """Inverse of the basis matrix, inverting only its structural block.

        With rows permuted so that rows whose slack is basic come last, the
        basis is ``[[K, 0], [L, I]]``, so its inverse is ``[[K^-1, 0], [-L K^-1, I]]``.
        """
        n = self.N - self.m
        basic = self.basic
        ps = np.flatnonzero(basic < n)
        pl = np.flatnonzero(basic >= n)
        rs = basic[pl] - n
        rn = np.setdiff1d(np.arange(self.m), rs)
        Binv = np.zeros((self.m, self.m))
        Binv[pl, rs] = 1.0
        if ps.size:
            S = self.A[:, basic[ps]].tocsr()
            Kinv = np.linalg.inv(S[rn].toarray())
            Binv[np.ix_(ps, rn)] = Kinv
            if pl.size:
                Binv[np.ix_(pl, rn)] = -(S[rs] @ Kinv)
        return Binv

    def condition(self) -> float:
        """1-norm condition number of the current basis."""
        norm_b = float(abs(self.A[:, self.basic]).sum(axis=0).max()) if self.m else 0.0
        return norm_b * float(np.abs(self.Binv).sum(axis=0).max(initial=0.0))

    def refactor(self) -> None:
        try:
            self.Binv = self._invert_basis()
        except np.linalg.LinAlgError:
            # lost rank through a poor pivot: restart from the slack basis
            n = self.N - self.m
            for j in self.basic[self.basic < n]:
                self.status[j] = _nonbasic_status(self.lo[j], self.hi[j])
                self.x[j] = _value_at(self.status[j], self.lo[j], self.hi[j])
            self.status[n:] = BASIC
            self.basic = np.arange(n, self.N)
            self.restarts += 1
            if self.restarts > 3:
                raise LpError("basis repeatedly singular")
            self.Binv = np.eye(self.m)
        nb = self.status != BASIC
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basic] = self.Binv @ rhs
        self.since_refactor = 0

    def _ratios(self, xb, lb, ub, delta, above, below, tol):
        theta = np.full(self.m, INF)
        hit = np.zeros(self.m, dtype=np.int8)
        dec = delta > PIVOT_TOL
        inc = delta < -PIVOT_TOL
        # decreasing basics stop at the upper bound if above it, else at the lower bound
        m1 = dec & above
        theta[m1] = (xb[m1] - ub[m1] + tol) / delta[m1]
        hit[m1] = AT_UPPER
        m2 = dec & ~above & ~below & (lb > -INF)
        theta[m2] = (xb[m2] - lb[m2] + tol) / delta[m2]
        hit[m2] = AT_LOWER
        m3 = inc & below
        theta[m3] = (lb[m3] - xb[m3] + tol) / -delta[m3]
        hit[m3] = AT_LOWER
        m4 = inc & ~above & ~below & (ub < INF)
        theta[m4] = (ub[m4] - xb[m4] + tol) / -delta[m4]
        hit[m4] = AT_UPPER
        np.maximum(theta, 0.0, out=theta)
        return theta, hit

    def infeasibility(self) -> tuple[np.ndarray, np.ndarray]:
        xb = self.x[self.basic]
        scale = 1.0 + np.abs(xb)
        below = xb < self.lo[self.basic] - PRIMAL_TOL * scale
        above = xb > self.hi[self.basic] + PRIMAL_TOL * scale
        return below, above

    def perturb(self) -> None:
        """Widen finite bounds by small random amounts to break a degenerate stall."""
        k = ~self.fixed
        for bound, sign in ((self.lo, -1.0), (self.hi, 1.0)):
            fin = k & np.isfinite(bound)
            eps = PERTURB_SCALE * (1.0 + np.abs(bound[fin])) * self.rng.uniform(0.5, 1.0, fin.sum())
            bound[fin] += sign * eps
        self.perturbed = True
        self.stats["perturbations"] += 1
        self._snap_nonbasics()

    def restore(self) -> None:
        """Put the true bounds back; nonbasics move onto them and basics are recomputed."""
        self.lo[:], self.hi[:] = self.true_lo, self.true_hi
        self.perturbed = False
        self._snap_nonbasics()

    def _snap_nonbasics(self) -> None:
        nb = np.flatnonzero(self.status != BASIC)
        self.x[nb] = [_value_at(self.status[j], self.lo[j], self.hi[j]) for j in nb]
        self.refactor()

    def dual_cleanup(self, limit: int) -> bool:
        """Dual simplex from a dual-feasible basis until primal feasible.

        Used after the bound perturbation is removed: reduced costs never saw
        the perturbation, so only small primal infeasibilities remain. Returns
        False if it gives up (the primal phase then takes over).
        """
        A, lo, hi = self.A, self.lo, self.hi
        for _ in range(limit):
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
            below, above = self.infeasibility()
            if not (below.any() or above.any()):
                return True
            xb = self.x[self.basic]
            lb, ub = lo[self.basic], hi[self.basic]
            viol = np.where(below, lb - xb, np.where(above, xb - ub, 0.0))
            r = int(np.argmax(viol))
            up = bool(below[r])                 # the leaving variable must increase to its lower bound
            rho = self.Binv[r]
            alpha_r = A.T @ rho
            y = self.c[self.basic] @ self.Binv
            d = self.c - A.T @ y
            st = self.status
            # entering j moves x_r by -alpha_rj * dx_j
            if up:
                elig = (((st == AT_LOWER) | (st == FREE)) & (alpha_r < -PIVOT_TOL)) | \
                       (((st == AT_UPPER) | (st == FREE)) & (alpha_r > PIVOT_TOL))
            else:
                elig = (((st == AT_LOWER) | (st == FREE)) & (alpha_r > PIVOT_TOL)) | \
                       (((st == AT_UPPER) | (st == FREE)) & (alpha_r < -PIVOT_TOL))
            elig &= ~self.fixed & (st != BASIC)
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return False
            ratio = np.abs(d[cand]) / np.abs(alpha_r[cand])
            relaxed = (np.abs(d[cand]) + DUAL_TOL) / np.abs(alpha_r[cand])
            ok = cand[ratio <= relaxed.min()]
            j = int(ok[np.argmax(np.abs(alpha_r[ok]))])
            target = lb[r] if up else ub[r]
            dxj = (xb[r] - target) / alpha_r[j]
            alpha = self.Binv @ self.column(j)
            self.x[j] += dxj
            self.x[self.basic] = xb - dxj * alpha
            out = int(self.basic[r])
            st[out] = AT_LOWER if up else AT_UPPER
            self.x[out] = target
            st[j] = BASIC
            self.basic[r] = j
            row = self.Binv[r] / alpha[r]
            self.Binv -= np.outer(alpha, row)
            self.Binv[r] = row
            self.since_refactor += 1
            self.iterations += 1
            self.stats["dual"] += 1
        return False

    def run(self) -> str:
        # a few extra passes guard against infeasibility exposed by refactorization
        for _ in range(5 + MAX_PERTURBATIONS):
            result = self._iterate(0)
            if self.perturbed:
                self.restore()
                if result == OPTIMAL:
                    self.dual_cleanup(max(100, 2 * self.m))
                continue
            if result != OPTIMAL:
                return result
            self.refactor()
            below, above = self.infeasibility()
            if not (below.any() or above.any()):
                return OPTIMAL
        raise LpError("simplex failed to settle after refactorization")

    def _iterate(self, degenerate: int) -> str:
        A, lo, hi = self.A, self.lo, self.hi
        while True:
            if self.iterations >= self.max_iter:
                raise LpStallError(f"no optimum after {self.iterations} simplex iterations")
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
            below, above = self.infeasibility()
            phase1 = bool(below.any() or above.any())
            if phase1:
                cB = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                cfull = None
            else:
                cB = self.c[self.basic]
                cfull = self.c
            y = cB @ self.Binv
            d = (-(A.T @ y)) if cfull is None else cfull - A.T @ y
            st = self.status
            inc = ((st == AT_LOWER) | (st == FREE)) & (d < -DUAL_TOL)
            dec = ((st == AT_UPPER) | (st == FREE)) & (d > DUAL_TOL)
            elig = (inc | dec) & ~self.fixed
            if not elig.any():
                return INFEASIBLE if phase1 else OPTIMAL
            if degenerate > DEGENERATE_LIMIT and not self.perturbed \
                    and self.stats["perturbations"] < MAX_PERTURBATIONS:
                self.perturb()
                degenerate = 0
                continue
            bland = degenerate > DEGENERATE_LIMIT
            cand = np.flatnonzero(elig)
            j = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            dirn = 1.0 if d[j] < 0 else -1.0
            alpha = self.Binv @ self.column(j)
            delta = dirn * alpha
            xb = self.x[self.basic]
            lb, ub = lo[self.basic], hi[self.basic]
            theta, bound_hit = self._ratios(xb, lb, ub, delta, above, below, 0.0)
            span = hi[j] - lo[j]
            if self.m and np.isfinite(theta).any():
                # Harris: bound the step with slightly relaxed bounds, then take the
                # largest pivot among rows blocking within that step
                relaxed, _ = self._ratios(xb, lb, ub, delta, above, below, HARRIS_TOL)
                tmax = relaxed.min()
                if bland:
                    ties = np.flatnonzero(theta <= theta.min() + 1e-12)
                    leave = int(ties[np.argmin(self.basic[ties])])
                else:
                    ok = np.flatnonzero(theta <= tmax)
                    leave = int(ok[np.argmax(np.abs(alpha[ok]))])
                tmin = theta[leave]
            else:
                leave, tmin = -1, INF
            if span <= tmin:
                step, leave = span, -1
            else:
                step = tmin
            if step == INF:
                if phase1:
                    raise LpError("unbounded phase-1 ray")
                return UNBOUNDED
            self.iterations += 1
            degenerate = degenerate + 1 if step < 1e-12 else 0
            self.stats["degenerate"] += step < 1e-12
            self.stats["bland"] += bland
            self.stats["phase1"] += phase1
            self.x[j] += dirn * step
            self.x[self.basic] = xb - step * delta
            if leave < 0:
                st[j] = AT_UPPER if dirn > 0 else AT_LOWER
                continue
            out = int(self.basic[leave])
            st[out] = int(bound_hit[leave])
            self.x[out] = lo[out] if st[out] == AT_LOWER else hi[out]
            st[j] = BASIC
            self.basic[leave] = j
            piv = alpha[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave] = row
            self.since_refactor += 1


def _initial_status(n, m, lo, hi, warm: np.ndarray | None):
    N = n + m
    status = np.array([_nonbasic_status(lo[j], hi[j]) for j in range(N)], dtype=np.int64)
    status[n:] = BASIC
    if warm is None:
        return status
    st = warm.copy()
    for j in range(N):
        if st[j] == AT_LOWER and lo[j] == -INF or st[j] == AT_UPPER and hi[j] == INF \
                or st[j] == FREE and (lo[j] > -INF or hi[j] < INF):
            st[j] = _nonbasic_status(lo[j], hi[j])
    nb = int((st == BASIC).sum())
    if nb > m:
        # demote surplus basics, structurals first
        for j in np.flatnonzero(st == BASIC)[: nb - m]:
            st[j] = _nonbasic_status(lo[j], hi[j])
    elif nb < m:
        for j in range(N - 1, n - 1, -1):
            if nb == m:
                break
            if st[j] != BASIC:
                st[j] = BASIC
                nb += 1
    return st


def _equilibrate(A, passes: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Geometric-mean row/column scale factors, rounded to powers of two."""
    m, n = A.shape
    R, C = np.ones(m), np.ones(n)
    if A.nnz == 0:
        return R, C
    B = abs(A.tocsr()).astype(float)
    for _ in range(passes):
        S = sp.diags(R) @ B @ sp.diags(C)
        rmax = S.max(axis=1).toarray().ravel()
        rmin = _row_min(S.tocsr())
        ok = rmax > 0
        R[ok] /= np.sqrt(rmax[ok] * rmin[ok])
        S = (sp.diags(R) @ B @ sp.diags(C)).tocsc()
        cmax = S.max(axis=0).toarray().ravel()
        cmin = _row_min(S.T.tocsr())
        ok = cmax > 0
        C[ok] /= np.sqrt(cmax[ok] * cmin[ok])
    return 2.0 ** np.round(np.log2(R)), 2.0 ** np.round(np.log2(C))


def _row_min(S) -> np.ndarray:
    """Smallest nonzero magnitude per row of a nonnegative CSR matrix."""
    out = np.zeros(S.shape[0])
    nz = np.diff(S.indptr) > 0
    if nz.any():
        out[nz] = np.minimum.reduceat(S.data, S.indptr[:-1][nz])
    return out


def _solve_simplex(model: LpModel, warm: dict | None, max_iter: int | None) -> LpSolution:
    A0, b0, c0, lo0, hi0, senses = model.arrays()
    n, m = model.n_vars, model.n_rows
    R, C = _equilibrate(A0)
    A = (sp.diags(R) @ A0 @ sp.diags(C)).tocsc()
    b, c, lo, hi = R * b0, C * c0, lo0 / C, hi0 / C
    slo, shi = _slack_bounds(senses)
    Af = sp.hstack([A, sp.identity(m, format="csc")], format="csc")
    cf = np.concatenate([c, np.zeros(m)])
    lof = np.concatenate([lo, slo])
    hif = np.concatenate([hi, shi])
    warm_arr = None
    if warm:
        warm_arr = np.empty(n + m, dtype=np.int64)
        vs, rs = warm.get("vars", {}), warm.get("rows", {})
        for j, v in enumerate(model.variables):
            warm_arr[j] = _STATUS_CODES.get(vs.get(v.name, ""), _nonbasic_status(lof[j], hif[j]))
        for i, con in enumerate(model.constraints):
            warm_arr[n + i] = _STATUS_CODES.get(rs.get(con.name, "B"), BASIC)
    status = _initial_status(n, m, lof, hif, warm_arr)
    cap = max_iter if max_iter is not None else 1000 + 50 * (n + m)
    try:
        solver = _Simplex(Af, b, cf, lof, hif, status, cap)
        if m and solver.condition() > 1e12:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        solver = _Simplex(Af, b, cf, lof, hif, _initial_status(n, m, lof, hif, None), cap)
    result = solver.run()
    names = [v.name for v in model.variables]
    rnames = [con.name for con in model.constraints]
    basis = {
        "vars": {v: _STATUS_NAMES[int(s)] for v, s in zip(names, solver.status[:n])},
        "rows": {r: _STATUS_NAMES[int(s)] for r, s in zip(rnames, solver.status[n:])},
    }
    if result != OPTIMAL:
        return LpSolution(result, C * solver.x[:n], np.zeros(m), INF if result == INFEASIBLE else -INF,
                          solver.iterations, basis, names, rnames)
    ys = cf[solver.basic] @ solver.Binv
    # undo the scaling: x = C x', y = R y', slack s = s' / R
    x = np.concatenate([C * solver.x[:n], solver.x[n:] / R])
    y = R * ys
    Au = sp.hstack([A0, sp.identity(m, format="csc")], format="csc")
    cu = np.concatenate([c0, np.zeros(m)])
    d = cu - Au.T @ y
    obj = float(c0 @ x[:n]) + model.obj_constant
    _certify(Au, b0, cu, np.concatenate([lo0, slo]), np.concatenate([hi0, shi]), x, y, d, solver.status)
    return LpSolution(OPTIMAL, x[:n].copy(), y, obj, solver.iterations, basis, names, rnames, d[:n].copy())


def _certify(A, b, c, lo, hi, x, y, d, status) -> None:
    """Primal/dual feasibility, complementary slackness and strong duality."""
    scale = 1.0 + np.abs(x)
    assert (x >= lo - 1e-7 * scale).all() and (x <= hi + 1e-7 * scale).all(), "primal bound violation"
    resid = A @ x - b
    assert np.abs(resid).max(initial=0.0) <= 1e-7 * (1.0 + np.abs(b).max(initial=0.0)), "row residual"
    dscale = 1e-7 * (1.0 + np.abs(c).max(initial=0.0) + np.abs(y).max(initial=0.0))
    basic = status == BASIC
    assert np.abs(d[basic]).max(initial=0.0) <= dscale, "basic reduced cost nonzero"
    # a nonbasic at lower needs d >= 0, at upper d <= 0, free d = 0
    at_lo = (status == AT_LOWER) & (lo < hi)
    at_hi = (status == AT_UPPER) & (lo < hi)
    assert (d[at_lo] >= -dscale).all() and (d[at_hi] <= dscale).all(), "dual infeasible"
    assert np.abs(d[status == FREE]).max(initial=0.0) <= dscale, "free reduced cost nonzero"
    # complementary slackness: nonzero reduced cost only on variables sitting at a bound
    nz = np.abs(d) > 1e-6 * (1.0 + np.abs(c).max(initial=0.0))
    gap_lo = np.where(np.isfinite(lo), np.abs(x - lo), INF)
    gap_hi = np.where(np.isfinite(hi), np.abs(hi - x), INF)
    assert (np.minimum(gap_lo, gap_hi)[nz] <= 1e-6 * scale[nz]).all(), "complementary slackness"
    primal = float(c @ x)
    nb = ~basic
    dual = float(b @ y + d[nb] @ x[nb])
    assert abs(primal - dual) <= 1e-6 * (1.0 + abs(primal)), f"duality gap {primal} vs {dual}"


def _solve_highs(model: LpModel) -> LpSolution:
    from scipy.optimize import linprog

    A, b, c, lo, hi, senses = model.arrays()
    A = A.tocsr()
    sense = np.array(senses)
    ub_rows = np.flatnonzero(sense != "=")
    eq_rows = np.flatnonzero(sense == "=")
    sign = np.where(sense[ub_rows] == ">=", -1.0, 1.0)
    A_ub = sp.diags(sign) @ A[ub_rows] if len(ub_rows) else None
    b_ub = sign * b[ub_rows] if len(ub_rows) else None
    A_eq = A[eq_rows] if len(eq_rows) else None
    b_eq = b[eq_rows] if len(eq_rows) else None
    bounds = list(zip(np.where(np.isfinite(lo), lo, None), np.where(np.isfinite(hi), hi, None)))
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    names = [v.name for v in model.variables]
    rnames = [con.name for con in model.constraints]
    m = model.n_rows
    if res.status == 2:
        return LpSolution(INFEASIBLE, np.zeros(model.n_vars), np.zeros(m), INF, 0, None, names, rnames)
    if res.status == 3:
        return LpSolution(UNBOUNDED, np.zeros(model.n_vars), np.zeros(m), -INF, 0, None, names, rnames)
    if res.status != 0:
        raise LpError(f"HiGHS: {res.message}")
    y = np.zeros(m)
    if len(ub_rows):
        y[ub_rows] = sign * res.ineqlin.marginals
    if len(eq_rows):
        y[eq_rows] = res.eqlin.marginals
    d = c - A.T @ y
    return LpSolution(OPTIMAL, res.x.copy(), y, float(res.fun) + model.obj_constant, int(res.nit), None,
                      names, rnames, d)


def solve_lp(model: LpModel, backend: str = "simplex", warm_start: dict | None = None,
             max_iter: int | None = None) -> LpSolution:
    """Solve ``min c x`` over the model; statuses rather than exceptions for infeasible/unbounded."""
    if backend == "highs":
        return _solve_highs(model)
    if backend != "simplex":
        raise ValueError(f"unknown LP backend {backend!r}")
    return _solve_simplex(model, warm_start, max_iter)
