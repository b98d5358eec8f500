"""Lowering of the guidance problems onto the cone-program container.

One parameterized builder covers the whole family: the hard minimum-fuel
problem, its pruned and minimum-acceleration variants, the softened
tracking formulation, and the per-deputy distributed form that sees the
other deputies only through fixed snapshot trajectories.

Conventions: state variables are dimensional ROE (m) per deputy per node;
control variables are the scaled RTN accelerations (chief semi-major axis
times m/s^2) on forced nodes only, so coast arcs carry no thrust by
construction.  Costs are expressed so the fuel term is plain delta-v in
m/s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..astro import EARTH, Constants, QnsElements, conv_psi, propagate_mean, rtn_map, stm_phi
from ..conic import ConeProgram, ProgramBuilder
from .config import GuidanceConfig, TrackingRefs
from .grid import ManeuverGrid


class GuidanceError(RuntimeError):
    pass


class DegenerateGuess(GuidanceError):
    """Raised when a linearization direction cannot be formed from a guess."""


class GridModel:
    """Chief-dependent matrices of a grid: Phi_k, Psi_k and the RTN map T_k.

    The chief mean elements are taken valid at the first grid node.
    """

    def __init__(
        self, grid: ManeuverGrid, chief: QnsElements, const: Constants = EARTH
    ):
        if chief.flavor != "mean":
            raise ValueError("chief elements must be mean")
        self.grid = grid
        self.chief = chief
        self.const = const
        self.a_c = chief.a
        t = grid.t
        chiefs = [chief]
        for k in range(1, grid.n_nodes):
            chiefs.append(propagate_mean(chief, t[k] - t[0], const))
        self.chief_at = chiefs
        self.phis = [
            stm_phi(chiefs[k], t[k], t[k + 1], const) for k in range(grid.m + 1)
        ]
        self.psis = {
            int(k): conv_psi(chiefs[k], t[k], t[k + 1], const) for k in grid.kf
        }
        self.tmats = [rtn_map(chiefs[k], 0.0, 0.0, const) for k in range(grid.n_nodes)]

    def submodel(self, start: int, stop: int | None = None) -> "GridModel":
        """Model over nodes [start, stop] reusing the precomputed matrices."""
        stop = self.grid.m + 1 if stop is None else stop
        sub = object.__new__(GridModel)
        sub.grid = self.grid.subgrid(start, stop)
        sub.chief = self.chief_at[start]
        sub.const = self.const
        sub.a_c = self.a_c
        sub.chief_at = self.chief_at[start : stop + 1]
        sub.phis = self.phis[start:stop]
        sub.psis = {
            int(k) - start: self.psis[int(k)]
            for k in self.grid.kf
            if start <= int(k) < stop
        }
        sub.tmats = self.tmats[start : stop + 1]
        return sub

    def propagate_states(self, y0: np.ndarray, u_bar: np.ndarray) -> np.ndarray:
        """Roll the linear recursion forward: exact node states for controls.

        Args:
            y0: Initial dimensional ROE (6,).
            u_bar: Scaled controls per forced node, shape (len(kf), 3).

        Returns:
            States at every node, shape (n_nodes, 6).
        """
        grid = self.grid
        out = np.zeros((grid.n_nodes, 6))
        out[0] = y0
        fpos = {int(k): f for f, k in enumerate(grid.kf)}
        for k in range(grid.m + 1):
            nxt = self.phis[k] @ out[k]
            if k in fpos:
                nxt = nxt + self.psis[k] @ u_bar[fpos[k]]
            out[k + 1] = nxt
        return out

    def rtn_offsets(self, states: np.ndarray) -> np.ndarray:
        """Per-node RTN position offsets (n_nodes, 3) for one deputy."""
        return np.einsum("kij,kj->ki", np.array(self.tmats), states)


@dataclass
class VarMap:
    """Index bookkeeping for one transcribed problem."""

    n_deputies: int
    n_nodes: int
    n_forced: int
    y0_idx: int = 0
    u0_idx: int = 0
    g0_idx: int = 0
    w_idx: int | None = None
    upsilon: dict[tuple[int, int], int] = field(default_factory=dict)
    beta: dict[tuple[int, int, int], int] = field(default_factory=dict)
    n_vars: int = 0

    def y(self, i: int, k: int) -> np.ndarray:
        base = self.y0_idx + (i * self.n_nodes + k) * 6
        return np.arange(base, base + 6)

    def u(self, i: int, f: int) -> np.ndarray:
        base = self.u0_idx + (i * self.n_forced + f) * 3
        return np.arange(base, base + 3)

    def gamma(self, i: int, f: int) -> int:
        return self.g0_idx + i * self.n_forced + f


def _direction_tiebreak(i: int, j: int, k: int) -> np.ndarray:
    """Deterministic unit direction for coincident guess positions."""
    seed = (i + 1) * 73856093 ^ (j + 2) * 19349663 ^ (k + 1) * 83492791
    v = np.random.default_rng(abs(seed)).normal(size=3)
    return v / np.linalg.norm(v)


def _ca_direction(
    tmat: np.ndarray,
    rel_guess: np.ndarray,
    i: int,
    j: int,
    k: int,
    on_degenerate: str,
) -> np.ndarray:
    """Row coefficients T' e_hat for one linearized keep-out half-space."""
    e = tmat @ rel_guess
    nrm = np.linalg.norm(e)
    if nrm < 1e-9:
        if on_degenerate == "raise":
            raise DegenerateGuess(
                f"coincident guess positions for pair ({i},{j}) at node {k}"
            )
        e = _direction_tiebreak(i, j, k)
        nrm = 1.0
    return tmat.T @ (e / nrm)


def transcribe(
    model: GridModel,
    config: GuidanceConfig,
    y0: np.ndarray,
    *,
    yf: np.ndarray | None = None,
    refs: TrackingRefs | None = None,
    soft: bool = False,
    ca_guess: np.ndarray | None = None,
    umin_guess: np.ndarray | None = None,
    pruned: list[frozenset[int]] | None = None,
    include_chief_ca: bool = True,
    neighbor_snapshots: dict[int, np.ndarray] | None = None,
    deputy_ids: list[int] | None = None,
    on_degenerate: str = "raise",
    lift_beta_cap: bool = False,
) -> tuple[ConeProgram, VarMap]:
    """Build one guidance cone program.

    Args:
        model: Grid matrices for the chief under consideration.
        config: Guidance parameters.
        y0: Initial dimensional ROE per deputy, shape (N, 6).
        yf: Hard terminal states (N, 6); required when soft is False.
        refs: Tracking references; required when soft is True.
        soft: Softened formulation (slack-backed feasibility).
        ca_guess: Previous-iterate states (N, n_nodes, 6) for linearized
            keep-out rows; omit to drop collision constraints.
        umin_guess: Scaled-control guess (N, n_forced, 3) for the affine
            minimum-acceleration relaxation; omit to drop those rows.
        pruned: Per-deputy sets of forced node indices constrained to zero.
        include_chief_ca: Emit deputy-chief keep-out rows (centralized).
        neighbor_snapshots: Distributed mode: fixed trajectories of other
            deputies keyed by their index; keep-out rows couple only to the
            transcribed deputies' own variables.
        deputy_ids: Identities of the transcribed deputies (defaults to
            0..N-1); used for snapshot bookkeeping and tie-breaks.
        on_degenerate: "raise" or "perturb" for coincident guess positions.

    Returns:
        The cone program and its variable map.
    """
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    n_dep = y0.shape[0]
    grid = model.grid
    n_nodes = grid.n_nodes
    kf = [int(k) for k in grid.kf]
    n_forced = len(kf)
    a_c = model.a_c
    ids = list(range(n_dep)) if deputy_ids is None else list(deputy_ids)
    pruned = [frozenset()] * n_dep if pruned is None else [frozenset(s) for s in pruned]
    if soft and refs is None:
        raise GuidanceError("soft transcription needs tracking references")
    if not soft and yf is None:
        raise GuidanceError("hard transcription needs terminal states")
    if umin_guess is not None and config.u_min <= 0.0:
        umin_guess = None

    vm = VarMap(n_deputies=n_dep, n_nodes=n_nodes, n_forced=n_forced)
    cursor = 0
    vm.y0_idx = cursor
    cursor += n_dep * n_nodes * 6
    vm.u0_idx = cursor
    cursor += n_dep * n_forced * 3
    vm.g0_idx = cursor
    cursor += n_dep * n_forced
    if soft:
        vm.w_idx = cursor
        cursor += 1
        if umin_guess is not None:
            for i in range(n_dep):
                for f, k in enumerate(kf):
                    if k not in pruned[i]:
                        vm.upsilon[(i, f)] = cursor
                        cursor += 1
    ca_nodes: list[int] = []
    if ca_guess is not None or neighbor_snapshots is not None:
        first = 1 if soft else 0
        ca_nodes = list(range(first, grid.m + 1))
        if soft:
            if neighbor_snapshots is not None:
                for i in range(n_dep):
                    for j in sorted(neighbor_snapshots):
                        for k in ca_nodes:
                            vm.beta[(i, j, k)] = cursor
                            cursor += 1
            else:
                for i in range(n_dep):
                    for j in range(i + 1, n_dep):
                        for k in ca_nodes:
                            vm.beta[(i, j, k)] = cursor
                            cursor += 1
                if include_chief_ca:
                    for i in range(n_dep):
                        for k in ca_nodes:
                            vm.beta[(i, -1, k)] = cursor
                            cursor += 1
    vm.n_vars = cursor

    b = ProgramBuilder(cursor)
    lower = np.full(cursor, -np.inf)
    upper = np.full(cursor, np.inf)

    # initial state
    for i in range(n_dep):
        idx = vm.y(i, 0)
        b.add_eq_rows(np.arange(6), idx, np.ones(6), y0[i])

    # dynamics recursion
    fpos = {k: f for f, k in enumerate(kf)}
    eye6 = np.eye(6)
    for i in range(n_dep):
        for k in range(grid.m + 1):
            cols = [np.repeat(vm.y(i, k + 1), 1), np.tile(vm.y(i, k), 6)]
            rows = [np.arange(6), np.repeat(np.arange(6), 6)]
            vals = [np.ones(6), -model.phis[k].ravel()]
            if k in fpos:
                cols.append(np.tile(vm.u(i, fpos[k]), 6))
                rows.append(np.repeat(np.arange(6), 3))
                vals.append(-model.psis[k].ravel())
            b.add_eq_rows(
                np.concatenate(rows),
                np.concatenate(cols),
                np.concatenate(vals),
                np.zeros(6),
            )

    # terminal condition (hard) — soft replaces it by the tracking cone
    if not soft:
        yf_arr = np.atleast_2d(np.asarray(yf, dtype=float))
        for i in range(n_dep):
            b.add_eq_rows(np.arange(6), vm.y(i, grid.m + 1), np.ones(6), yf_arr[i])

    # per-node control blocks
    sqrt_r = np.sqrt(config.r_weight) if soft else np.ones(3)
    cap = a_c * config.u_max
    for i in range(n_dep):
        for f, k in enumerate(kf):
            uidx = vm.u(i, f)
            gidx = vm.gamma(i, f)
            if k in pruned[i]:
                b.add_eq_rows(
                    np.arange(4),
                    np.concatenate([uidx, [gidx]]),
                    np.ones(4),
                    np.zeros(4),
                )
                continue
            # ||sqrt(R) u|| <= gamma, gamma <= a_c u_max, fuel cost
            b.add_soc(
                rows=np.arange(4),
                cols=np.concatenate([[gidx], uidx]),
                vals=np.concatenate([[1.0], sqrt_r]),
                consts=np.zeros(4),
            )
            b.add_ineq([gidx], [-1.0], -cap)
            b.add_cost([gidx], grid.dt(k) / a_c)
            if umin_guess is not None:
                g = np.asarray(umin_guess[i][f], dtype=float)
                gn = np.linalg.norm(g)
                if gn < 1e-12:
                    raise DegenerateGuess(
                        f"zero control guess on unpruned node {k} of deputy {ids[i]}"
                    )
                ehat = g / gn
                if soft:
                    up = vm.upsilon[(i, f)]
                    b.add_ineq(
                        np.concatenate([uidx, [up]]),
                        np.concatenate([ehat, [1.0]]),
                        a_c * config.u_min,
                    )
                    lower[up] = 0.0
                    upper[up] = config.upsilon_max
                    b.add_cost([up], config.q_umin)
                else:
                    b.add_ineq(uidx, ehat, a_c * config.u_min)

    # tracking epigraph (soft)
    if soft:
        sq = np.sqrt(config.q_weight)
        rows = [np.array([0])]
        cols = [np.array([vm.w_idx])]
        vals = [np.ones(1)]
        consts = [0.0]
        r = 1
        for i in range(n_dep):
            for c_idx, k in enumerate(refs.kbar):
                yidx = vm.y(i, int(k))
                rows.append(np.arange(r, r + 6))
                cols.append(yidx)
                vals.append(sq)
                consts.extend((-sq * refs.ybar[i, c_idx]).tolist())
                r += 6
        b.add_soc(
            rows=np.concatenate(rows),
            cols=np.concatenate(cols),
            vals=np.concatenate(vals),
            consts=np.array(consts),
        )
        b.add_cost([vm.w_idx], 1.0)

    # linearized keep-out half-spaces
    r_keep = config.r_ca + config.ca_margin
    beta_cap = math.inf if lift_beta_cap else config.beta_max
    if ca_nodes:
        if neighbor_snapshots is not None:
            if ca_guess is None:
                raise GuidanceError("distributed keep-out rows need an own-state guess")
            for i in range(n_dep):
                for j, snap in sorted(neighbor_snapshots.items()):
                    for k in ca_nodes:
                        v = _ca_direction(
                            model.tmats[k],
                            ca_guess[i, k] - snap[k],
                            ids[i],
                            j,
                            k,
                            on_degenerate,
                        )
                        rhs = r_keep + float(v @ snap[k])
                        bi = vm.beta.get((i, j, k))
                        if bi is None:
                            b.add_ineq(vm.y(i, k), v, rhs)
                        else:
                            b.add_ineq(
                                np.concatenate([vm.y(i, k), [bi]]),
                                np.concatenate([v, [1.0]]),
                                rhs,
                            )
                            lower[bi] = 0.0
                            upper[bi] = beta_cap
                            b.add_cost([bi], config.q_ca)
        else:
            for i in range(n_dep):
                for j in range(i + 1, n_dep):
                    for k in ca_nodes:
                        v = _ca_direction(
                            model.tmats[k],
                            ca_guess[i, k] - ca_guess[j, k],
                            ids[i],
                            ids[j],
                            k,
                            on_degenerate,
                        )
                        idx = np.concatenate([vm.y(i, k), vm.y(j, k)])
                        val = np.concatenate([v, -v])
                        bi = vm.beta.get((i, j, k))
                        if bi is None:
                            b.add_ineq(idx, val, r_keep)
                        else:
                            b.add_ineq(
                                np.concatenate([idx, [bi]]),
                                np.concatenate([val, [1.0]]),
                                r_keep,
                            )
                            lower[bi] = 0.0
                            upper[bi] = beta_cap
                            # the mirrored (j, i) term of the slack sum
                            b.add_cost([bi], 2.0 * config.q_ca)
                if include_chief_ca:
                    for k in ca_nodes:
                        v = _ca_direction(
                            model.tmats[k], ca_guess[i, k], ids[i], -1, k, on_degenerate
                        )
                        bi = vm.beta.get((i, -1, k))
                        if bi is None:
                            b.add_ineq(vm.y(i, k), v, r_keep)
                        else:
                            b.add_ineq(
                                np.concatenate([vm.y(i, k), [bi]]),
                                np.concatenate([v, [1.0]]),
                                r_keep,
                            )
                            lower[bi] = 0.0
                            upper[bi] = beta_cap
                            b.add_cost([bi], config.q_ca)

    prog = b.build()
    if np.any(np.isfinite(lower)) or np.any(np.isfinite(upper)):
        prog = ConeProgram(
            n_vars=prog.n_vars,
            cost=prog.cost,
            eq_mat=prog.eq_mat,
            eq_rhs=prog.eq_rhs,
            ineq_mat=prog.ineq_mat,
            ineq_rhs=prog.ineq_rhs,
            soc_mat=prog.soc_mat,
            soc_offset=prog.soc_offset,
            soc_dims=prog.soc_dims,
            lower=lower,
            upper=upper,
        )
    return prog, vm


def transcribe_problem1(
    model: GridModel,
    config: GuidanceConfig,
    y0: np.ndarray,
    yf: np.ndarray,
    guess: np.ndarray | None = None,
    on_degenerate: str = "raise",
) -> tuple[ConeProgram, VarMap]:
    """Minimum-fuel SOCP; keep-out rows appear only when a guess is given."""
    return transcribe(
        model, config, y0, yf=yf, ca_guess=guess, on_degenerate=on_degenerate
    )


def transcribe_problem2(
    model: GridModel,
    config: GuidanceConfig,
    y0: np.ndarray,
    yf: np.ndarray,
    guess: np.ndarray | None,
    pruned: list[frozenset[int]],
    on_degenerate: str = "raise",
) -> tuple[ConeProgram, VarMap]:
    """Problem 1 with the pruned forced nodes constrained to zero thrust."""
    return transcribe(
        model,
        config,
        y0,
        yf=yf,
        ca_guess=guess,
        pruned=pruned,
        on_degenerate=on_degenerate,
    )


def transcribe_problem3(
    model: GridModel,
    config: GuidanceConfig,
    y0: np.ndarray,
    yf: np.ndarray,
    guess_y: np.ndarray | None,
    guess_u: np.ndarray,
    pruned: list[frozenset[int]],
    on_degenerate: str = "raise",
) -> tuple[ConeProgram, VarMap]:
    """Pruned problem plus the affine minimum-acceleration half-spaces."""
    return transcribe(
        model,
        config,
        y0,
        yf=yf,
        ca_guess=guess_y,
        umin_guess=guess_u,
        pruned=pruned,
        on_degenerate=on_degenerate,
    )


def transcribe_problem4_soft(
    model: GridModel,
    config: GuidanceConfig,
    y0: np.ndarray,
    refs: TrackingRefs,
    guess_y: np.ndarray | None = None,
    guess_u: np.ndarray | None = None,
    pruned: list[frozenset[int]] | None = None,
    include_chief_ca: bool = True,
    on_degenerate: str = "perturb",
) -> tuple[ConeProgram, VarMap]:
    """Softened formulation: tracking epigraph plus capped slack penalties."""
    return transcribe(
        model,
        config,
        y0,
        refs=refs,
        soft=True,
        ca_guess=guess_y,
        umin_guess=guess_u,
        pruned=pruned,
        include_chief_ca=include_chief_ca,
        on_degenerate=on_degenerate,
    )
