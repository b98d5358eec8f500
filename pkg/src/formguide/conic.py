"""Solver-agnostic second-order cone programs and the backing solver contract.

A :class:`ConeProgram` is the target every guidance problem is lowered
into: linear cost, affine equalities, affine inequalities (>= sense),
second-order cone constraints ||A x + b|| <= c'x + d, and optional simple
bounds.  :func:`solve` hands the program to Clarabel behind a fixed,
deterministic configuration; infeasibility is reported as a status value,
never as an exception, because the sequential schemes branch on it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

try:
    import clarabel
except ImportError as _exc:  # pragma: no cover - environment misconfiguration
    clarabel = None
    _CLARABEL_ERR = _exc

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"


class ProgramBuilder:
    """Accumulates constraint rows as triplets and finalizes a ConeProgram.

    Rows are appended per block; second-order cones are stored stacked so
    that rows [c'x + d; A x + b] of each cone are contiguous.
    """

    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.cost = np.zeros(n_vars)
        self._eq = _TripletBlock()
        self._ineq = _TripletBlock()
        self._soc = _TripletBlock()
        self.soc_dims: list[int] = []

    def add_cost(self, idx, val) -> None:
        np.add.at(self.cost, np.asarray(idx, dtype=int), val)

    def add_eq(self, idx, val, rhs: float) -> None:
        """Row sum_j val_j x_{idx_j} == rhs."""
        self._eq.add_row(idx, val, rhs)

    def add_eq_rows(self, rows, cols, vals, rhs) -> None:
        """Bulk equality rows; `rows` are block-local row indices."""
        self._eq.add_rows(rows, cols, vals, rhs)

    def add_ineq(self, idx, val, rhs: float) -> None:
        """Row sum_j val_j x_{idx_j} >= rhs."""
        self._ineq.add_row(idx, val, rhs)

    def add_soc(self, rows, cols, vals, consts) -> None:
        """One cone over `dim` stacked rows: (M x + m) with first entry the
        scalar side, i.e. ||rows 1..|| <= row 0.  `rows` are cone-local.
        """
        dim = len(consts)
        self._soc.add_rows(rows, cols, vals, consts)
        self.soc_dims.append(dim)

    def build(self) -> "ConeProgram":
        return ConeProgram(
            n_vars=self.n_vars,
            cost=self.cost,
            eq_mat=self._eq.matrix(self.n_vars),
            eq_rhs=self._eq.rhs(),
            ineq_mat=self._ineq.matrix(self.n_vars),
            ineq_rhs=self._ineq.rhs(),
            soc_mat=self._soc.matrix(self.n_vars),
            soc_offset=self._soc.rhs(),
            soc_dims=tuple(self.soc_dims),
        )


class _TripletBlock:
    def __init__(self):
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []
        self.b: list[np.ndarray] = []
        self.n_rows = 0

    def add_row(self, idx, val, rhs) -> None:
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        val = np.atleast_1d(np.asarray(val, dtype=float))
        self.rows.append(np.full(idx.shape, self.n_rows))
        self.cols.append(idx)
        self.vals.append(val)
        self.b.append(np.array([rhs], dtype=float))
        self.n_rows += 1

    def add_rows(self, rows, cols, vals, rhs) -> None:
        rows = np.asarray(rows, dtype=int)
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        self.rows.append(rows + self.n_rows)
        self.cols.append(np.asarray(cols, dtype=int))
        self.vals.append(np.asarray(vals, dtype=float))
        self.b.append(rhs)
        self.n_rows += len(rhs)

    def matrix(self, n_vars: int) -> sparse.csr_matrix:
        if not self.rows:
            return sparse.csr_matrix((0, n_vars))
        return sparse.csr_matrix(
            (
                np.concatenate(self.vals),
                (np.concatenate(self.rows), np.concatenate(self.cols)),
            ),
            shape=(self.n_rows, n_vars),
        )

    def rhs(self) -> np.ndarray:
        if not self.b:
            return np.zeros(0)
        return np.concatenate(self.b)


@dataclass(frozen=True)
class ConeProgram:
    """min cost'x  s.t.  eq_mat x == eq_rhs,  ineq_mat x >= ineq_rhs,
    and for each stacked cone  ||(soc rows 1..)|| <= (soc row 0), where the
    cone expression is soc_mat x + soc_offset.  Optional box bounds.
    """

    n_vars: int
    cost: np.ndarray
    eq_mat: sparse.csr_matrix
    eq_rhs: np.ndarray
    ineq_mat: sparse.csr_matrix
    ineq_rhs: np.ndarray
    soc_mat: sparse.csr_matrix
    soc_offset: np.ndarray
    soc_dims: tuple[int, ...]
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.cost.shape != (self.n_vars,):
            raise ValueError("cost length must equal n_vars")
        for mat, rhs, name in (
            (self.eq_mat, self.eq_rhs, "eq"),
            (self.ineq_mat, self.ineq_rhs, "ineq"),
            (self.soc_mat, self.soc_offset, "soc"),
        ):
            if mat.shape[1] != self.n_vars:
                raise ValueError(f"{name} block has wrong variable dimension")
            if mat.shape[0] != rhs.shape[0]:
                raise ValueError(f"{name} matrix/rhs row mismatch")
        if sum(self.soc_dims) != self.soc_mat.shape[0]:
            raise ValueError("soc cone dims do not partition the soc block")
        for b, name in ((self.lower, "lower"), (self.upper, "upper")):
            if b is not None and np.asarray(b).shape != (self.n_vars,):
                raise ValueError(f"{name} bound has wrong length")

    @property
    def soc(self) -> list[tuple[sparse.csr_matrix, np.ndarray, np.ndarray, float]]:
        """Per-cone (A, b, c, d) view: ||A x + b|| <= c'x + d."""
        out = []
        start = 0
        for dim in self.soc_dims:
            block = self.soc_mat[start : start + dim]
            off = self.soc_offset[start : start + dim]
            out.append(
                (block[1:], off[1:], block[0].toarray().ravel(), float(off[0]))
            )
            start += dim
        return out

    @property
    def n_constraints(self) -> int:
        n_bounds = 0
        for b in (self.lower, self.upper):
            if b is not None:
                n_bounds += int(np.isfinite(b).sum())
        return (
            self.eq_mat.shape[0]
            + self.ineq_mat.shape[0]
            + len(self.soc_dims)
            + n_bounds
        )

    def violation(self, x: np.ndarray) -> float:
        """Largest absolute constraint violation at x (independent check)."""
        worst = 0.0
        if self.eq_mat.shape[0]:
            worst = max(worst, float(np.abs(self.eq_mat @ x - self.eq_rhs).max()))
        if self.ineq_mat.shape[0]:
            worst = max(
                worst, float(np.maximum(self.ineq_rhs - self.ineq_mat @ x, 0).max())
            )
        if self.soc_mat.shape[0]:
            expr = self.soc_mat @ x + self.soc_offset
            start = 0
            for dim in self.soc_dims:
                head = expr[start]
                tail = expr[start + 1 : start + dim]
                worst = max(worst, float(np.linalg.norm(tail) - head))
                start += dim
        if self.lower is not None:
            ok = np.isfinite(self.lower)
            if ok.any():
                worst = max(worst, float(np.maximum(self.lower[ok] - x[ok], 0).max()))
        if self.upper is not None:
            ok = np.isfinite(self.upper)
            if ok.any():
                worst = max(worst, float(np.maximum(x[ok] - self.upper[ok], 0).max()))
        return worst

    def dump(self, path) -> None:
        """Plain-text matrix-market-style dump for external cross-checks."""
        with open(path, "w") as fh:
            fh.write(f"%%ConeProgram n_vars {self.n_vars}\n")
            fh.write("% cost\n")
            for j, v in enumerate(self.cost):
                if v != 0.0:
                    fh.write(f"c {j} {v!r}\n")
            for tag, mat, rhs in (
                ("eq", self.eq_mat, self.eq_rhs),
                ("ineq", self.ineq_mat, self.ineq_rhs),
                ("soc", self.soc_mat, self.soc_offset),
            ):
                coo = mat.tocoo()
                fh.write(f"% {tag} {mat.shape[0]} x {mat.shape[1]}\n")
                for i, j, v in zip(coo.row, coo.col, coo.data):
                    fh.write(f"{tag} {i} {j} {v!r}\n")
                for i, v in enumerate(rhs):
                    if v != 0.0:
                        fh.write(f"{tag}_rhs {i} {v!r}\n")
            fh.write(f"% soc_dims {' '.join(map(str, self.soc_dims))}\n")


@dataclass(frozen=True)
class SolverSettings:
    rel_gap: float = 1e-7
    abs_gap: float = 1e-9
    feas_tol: float = 1e-9
    max_iter: int = 200
    verbose: bool = False


@dataclass(frozen=True)
class ConeSolution:
    status: str
    x: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    solve_time: float


_STATUS_MAP = {
    "Solved": OPTIMAL,
    "PrimalInfeasible": INFEASIBLE,
    "AlmostPrimalInfeasible": INFEASIBLE,
    "DualInfeasible": UNBOUNDED,
    "AlmostDualInfeasible": UNBOUNDED,
}


def solve(prog: ConeProgram, settings: SolverSettings = SolverSettings()) -> ConeSolution:
    """Solve a cone program; statuses other than optimal are values, not errors."""
    if clarabel is None:  # pragma: no cover
        raise RuntimeError(f"no conic solver available: {_CLARABEL_ERR}")

    blocks = []
    rhs = []
    cones = []
    if prog.eq_mat.shape[0]:
        blocks.append(prog.eq_mat)
        rhs.append(prog.eq_rhs)
        cones.append(clarabel.ZeroConeT(prog.eq_mat.shape[0]))

    ineq_mat = prog.ineq_mat
    ineq_rhs = prog.ineq_rhs
    bound_rows = _bound_rows(prog)
    if bound_rows is not None:
        ineq_mat = sparse.vstack([ineq_mat, bound_rows[0]], format="csr")
        ineq_rhs = np.concatenate([ineq_rhs, bound_rows[1]])
    if ineq_mat.shape[0]:
        blocks.append(-ineq_mat)
        rhs.append(-ineq_rhs)
        cones.append(clarabel.NonnegativeConeT(ineq_mat.shape[0]))

    if prog.soc_mat.shape[0]:
        blocks.append(-prog.soc_mat)
        rhs.append(prog.soc_offset)
        cones.extend(clarabel.SecondOrderConeT(d) for d in prog.soc_dims)

    if blocks:
        amat = sparse.vstack(blocks, format="csc")
        bvec = np.concatenate(rhs)
    else:
        amat = sparse.csc_matrix((0, prog.n_vars))
        bvec = np.zeros(0)

    cfg = clarabel.DefaultSettings()
    cfg.verbose = settings.verbose
    cfg.max_iter = settings.max_iter
    cfg.tol_gap_rel = settings.rel_gap
    cfg.tol_gap_abs = settings.abs_gap
    cfg.tol_feas = settings.feas_tol
    cfg.max_threads = 1  # bit-deterministic factorization

    solver = clarabel.DefaultSolver(
        sparse.csc_matrix((prog.n_vars, prog.n_vars)),
        prog.cost,
        amat,
        bvec,
        cones,
        cfg,
    )
    res = solver.solve()
    status = _STATUS_MAP.get(str(res.status), MAX_ITER)
    x = np.asarray(res.x, dtype=float)
    if x.shape != (prog.n_vars,) or not np.all(np.isfinite(x)):
        x = np.zeros(prog.n_vars)
        status = MAX_ITER if status == OPTIMAL else status
    return ConeSolution(
        status=status,
        x=x,
        objective=float(prog.cost @ x),
        primal_residual=float(res.r_prim),
        dual_residual=float(res.r_dual),
        gap=abs(float(res.obj_val) - float(res.obj_val_dual)),
        iterations=int(res.iterations),
        solve_time=float(res.solve_time),
    )


def _bound_rows(prog: ConeProgram):
    rows = []
    rhs = []
    if prog.lower is not None:
        ok = np.where(np.isfinite(prog.lower))[0]
        if ok.size:
            rows.append(
                sparse.csr_matrix(
                    (np.ones(ok.size), (np.arange(ok.size), ok)),
                    shape=(ok.size, prog.n_vars),
                )
            )
            rhs.append(prog.lower[ok])
    if prog.upper is not None:
        ok = np.where(np.isfinite(prog.upper))[0]
        if ok.size:
            rows.append(
                sparse.csr_matrix(
                    (-np.ones(ok.size), (np.arange(ok.size), ok)),
                    shape=(ok.size, prog.n_vars),
                )
            )
            rhs.append(-prog.upper[ok])
    if not rows:
        return None
    return sparse.vstack(rows, format="csr"), np.concatenate(rhs)
