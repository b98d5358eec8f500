"""Distributed guidance: per-deputy solves against fixed neighbor snapshots.

Each deputy owns a cone program over its own trajectory only; the other
deputies enter through immutable snapshot profiles exchanged after every
iteration, which keeps the per-deputy problem size linear in the formation
size.  Purely parallel re-solves can oscillate between two unsafe
configurations (each deputy dodging the other's stale plan), so the final
phase serializes: deputies update one at a time, in a fixed order, against
the live snapshots of everyone else until a full pass leaves the joint
profile node-wise safe.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..conic import SolverSettings
from .config import GuidanceConfig, TrackingRefs
from .profile import GuidanceProfile, StageDiag
from .pruning import prune
from .scp import (
    TERM_COLLISION_FREE,
    TERM_EPS,
    TERM_MAX_ITER,
    _checked_solve,
    _coasting_nodes,
    _extract,
    min_node_distance,
)
from .transcription import GridModel, GuidanceError, transcribe


@dataclass(frozen=True)
class TrajectorySnapshot:
    """Immutable published state profile of one deputy at one iteration."""

    deputy_id: int
    iteration: int
    states: np.ndarray  # (n_nodes, 6)
    tag: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", np.asarray(self.states, dtype=float))
        self.states.setflags(write=False)


class Mailbox:
    """In-process snapshot exchange with a broadcast-link interface.

    publish() stores a snapshot; collect_all() is the synchronization
    barrier: it returns the requested iteration's snapshot per deputy and
    raises if any are missing, naming the absentee.
    """

    def __init__(self) -> None:
        self._store: dict[tuple[int, int], TrajectorySnapshot] = {}

    def publish(self, snap: TrajectorySnapshot) -> None:
        self._store[(snap.deputy_id, snap.iteration)] = snap

    def latest(self, deputy_id: int) -> TrajectorySnapshot:
        candidates = [s for (d, _), s in self._store.items() if d == deputy_id]
        if not candidates:
            raise GuidanceError(f"no snapshot published by deputy {deputy_id}")
        return max(candidates, key=lambda s: s.iteration)

    def collect_all(
        self, iteration: int, expected: list[int]
    ) -> dict[int, TrajectorySnapshot]:
        out = {}
        for d in expected:
            snap = self._store.get((d, iteration))
            if snap is None:
                raise GuidanceError(
                    f"snapshot of deputy {d} at iteration {iteration} is missing"
                )
            out[d] = snap
        return out


@dataclass
class DeputyProblemState:
    """Everything deputy i needs to transcribe its own problem."""

    deputy_id: int
    y0: np.ndarray
    refs: TrackingRefs
    pruned: frozenset[int] = frozenset()
    guess_y: np.ndarray | None = None
    guess_u: np.ndarray | None = None
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    use_umin: bool = False


def transcribe_problem5(
    state: DeputyProblemState,
    model: GridModel,
    config: GuidanceConfig,
    with_ca: bool = True,
    on_degenerate: str = "perturb",
    lift_beta_cap: bool = False,
):
    """Per-deputy softened program against fixed neighbor trajectories.

    No deputy-chief keep-out rows: the distributed chief is a virtual
    point.  Raises when a neighbor snapshot is absent.
    """
    if with_ca and state.guess_y is None:
        raise GuidanceError("keep-out rows need the deputy's own state guess")
    return transcribe(
        model,
        config,
        state.y0[None, :],
        refs=state.refs,
        soft=True,
        ca_guess=None if not with_ca else state.guess_y[None, :, :],
        umin_guess=None if not state.use_umin else state.guess_u[None, :, :],
        pruned=[state.pruned],
        include_chief_ca=False,
        neighbor_snapshots=state.snapshots if with_ca else None,
        deputy_ids=[state.deputy_id],
        on_degenerate=on_degenerate,
        lift_beta_cap=lift_beta_cap,
    )


def _solve_deputy(state, model, config, with_ca, stage, settings):
    from ..conic import INFEASIBLE
    from .scp import StageInfeasible

    prog, vm = transcribe_problem5(state, model, config, with_ca=with_ca)
    try:
        sol = _checked_solve(prog, f"{stage}[deputy {state.deputy_id}]", settings)
    except StageInfeasible as exc:
        if exc.status != INFEASIBLE:
            raise
        prog, vm = transcribe_problem5(
            state, model, config, with_ca=with_ca, lift_beta_cap=True
        )
        stage = stage + "(beta-cap lifted)"
        sol = _checked_solve(prog, f"{stage}[deputy {state.deputy_id}]", settings)
    y, u_bar, gamma, upsilon, beta, w = _extract(
        model, vm, sol.x, state.y0[None, :]
    )
    diag = StageDiag(
        stage=f"{stage}[{state.deputy_id}]",
        status=sol.status,
        iterations=0,
        termination="",
        cost=sol.objective,
        max_upsilon=float(upsilon.max()) if upsilon.size else 0.0,
        max_beta=max(beta.values()) if beta else 0.0,
        n_vars=prog.n_vars,
        n_constraints=prog.n_constraints,
        solve_time=sol.solve_time,
    )
    return y[0], u_bar[0], gamma[0], upsilon[0], beta, w, diag


def _joint_safe(model, states, config) -> bool:
    if states.shape[0] < 2:
        return True
    return min_node_distance(model, states, include_chief=False) >= config.r_ca - 1e-6


def _unsafe_against_others(model, config, states, i) -> bool:
    pos_i = model.rtn_offsets(states[i])
    for j in range(states.shape[0]):
        if j == i:
            continue
        d = np.linalg.norm(pos_i - model.rtn_offsets(states[j]), axis=1).min()
        if d < config.r_ca - 1e-6:
            return True
    return False


def ensure_collision_avoidance(
    states: np.ndarray,
    deputy_states: list[DeputyProblemState],
    model: GridModel,
    config: GuidanceConfig,
    order: list[int],
    settings: SolverSettings = SolverSettings(),
    diagnostics: list[StageDiag] | None = None,
):
    """Serialized deconfliction passes over the deputies in a fixed order.

    Each unsafe deputy re-solves its own problem against the live profiles
    of all others and immediately republishes.  Returns the updated joint
    states, per-deputy solutions, the number of re-solves, and a safety
    flag (False when the pass cap fired with the profile still unsafe).
    """
    states = states.copy()
    n = states.shape[0]
    cap = config.ca_pass_cap if config.ca_pass_cap is not None else n + 2
    resolves = 0
    solutions: dict[int, tuple] = {}
    for _ in range(cap):
        changed = 0
        for i in order:
            if not _unsafe_against_others(model, config, states, i):
                continue
            st = deputy_states[i]
            st.snapshots = {
                j: states[j] for j in range(n) if j != i
            }
            st.guess_y = states[i]
            out = _solve_deputy(st, model, config, True, "ensure_ca", settings)
            states[i] = out[0]
            solutions[i] = out
            if diagnostics is not None:
                diagnostics.append(out[6])
            resolves += 1
            changed += 1
        if changed == 0 and _joint_safe(model, states, config):
            return states, solutions, resolves, True
    return states, solutions, resolves, _joint_safe(model, states, config)


def scp_distributed(
    model: GridModel,
    config: GuidanceConfig,
    y0: np.ndarray,
    yf: np.ndarray | None = None,
    refs: TrackingRefs | None = None,
    settings: SolverSettings = SolverSettings(),
    pre_pruned: list[frozenset[int]] | None = None,
) -> GuidanceProfile:
    """Distributed pipeline: parallel solves, snapshot barriers, pruning,
    the acceleration floor, and the final serialized safety pass.
    """
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    n = y0.shape[0]
    grid = model.grid
    if refs is None:
        if yf is None:
            raise GuidanceError("distributed pipeline needs refs or final targets")
        refs = TrackingRefs.final_state(np.atleast_2d(yf), grid.m)
    kf = [int(k) for k in grid.kf]
    diagnostics: list[StageDiag] = []
    mailbox = Mailbox()

    def refs_for(i: int) -> TrackingRefs:
        return TrackingRefs(kbar=refs.kbar, ybar=refs.ybar[i : i + 1])

    base = [frozenset()] * n if pre_pruned is None else [
        frozenset(s) for s in pre_pruned
    ]
    deputies = [
        DeputyProblemState(deputy_id=i, y0=y0[i], refs=refs_for(i), pruned=base[i])
        for i in range(n)
    ]

    # iteration 0: all solve without keep-out rows, then publish (barrier)
    states = np.zeros((n, grid.n_nodes, 6))
    controls = np.zeros((n, len(kf), 3))
    gammas = np.zeros((n, len(kf)))
    upsilons = np.zeros((n, len(kf)))
    betas: dict[tuple[int, int, int], float] = {}
    w_total = 0.0
    for i in range(n):
        out = _solve_deputy(deputies[i], model, config, False, "fuel_no_ca", settings)
        states[i], controls[i], gammas[i] = out[0], out[1], out[2]
        diagnostics.append(out[6])
        mailbox.publish(TrajectorySnapshot(i, 0, out[0]))

    # parallel keep-out iterations against previous-iteration snapshots
    term = TERM_MAX_ITER
    iters_used = 0
    for it in range(1, config.max_iter + 1):
        snaps = mailbox.collect_all(it - 1, list(range(n)))
        new_states = np.zeros_like(states)
        for i in range(n):
            st = deputies[i]
            st.guess_y = snaps[i].states
            st.snapshots = {j: snaps[j].states for j in range(n) if j != i}
            out = _solve_deputy(st, model, config, True, "fuel_ca", settings)
            new_states[i], controls[i], gammas[i] = out[0], out[1], out[2]
            betas.update(out[4])
            diagnostics.append(out[6])
            mailbox.publish(TrajectorySnapshot(i, it, new_states[i]))
        shift = float(np.linalg.norm(new_states - states, axis=2).max())
        states = new_states
        iters_used = it
        if _joint_safe(model, states, config):
            term = TERM_COLLISION_FREE
            break
        if shift <= config.eps:
            term = TERM_EPS
            break

    # pruning, then the pruned re-solve (parallel against live snapshots)
    u_norms = np.linalg.norm(controls, axis=2) / model.a_c
    pruned_sets = [p | b for p, b in zip(prune(u_norms, config, grid), base)]
    for i in range(n):
        deputies[i].pruned = pruned_sets[i]
        deputies[i].guess_y = states[i]
        deputies[i].snapshots = {j: states[j] for j in range(n) if j != i}
    if any(pruned_sets):
        new_states = np.zeros_like(states)
        for i in range(n):
            out = _solve_deputy(deputies[i], model, config, True, "pruned", settings)
            new_states[i], controls[i], gammas[i] = out[0], out[1], out[2]
            betas.update(out[4])
            diagnostics.append(out[6])
        states = new_states
        for i in range(n):
            deputies[i].guess_y = states[i]
            deputies[i].snapshots = {j: states[j] for j in range(n) if j != i}

    # acceleration floor stage: parallel solves with snapshot barriers,
    # iterated until the joint profile settles (safety is the business of
    # the serialized pass below, so the exit test here is the eps shift)
    if config.u_min > 0.0:
        for i in range(n):
            st = deputies[i]
            st.use_umin = True
            st.guess_u = controls[i]
            st.pruned = _coasting_nodes(model, config, controls[i], st.pruned, kf)
        prev_costs = None
        for it in range(1, config.max_iter + 1):
            new_states = np.zeros_like(states)
            costs = np.zeros(n)
            w_total = 0.0
            for i in range(n):
                out = _solve_deputy(deputies[i], model, config, True, "min_acc", settings)
                new_states[i], controls[i], gammas[i], upsilons[i] = out[:4]
                betas.update(out[4])
                w_total = max(w_total, out[5])
                costs[i] = out[6].cost
                diagnostics.append(out[6])
            shift = float(np.linalg.norm(new_states - states, axis=2).max())
            states = new_states
            for i in range(n):
                deputies[i].guess_y = states[i]
                deputies[i].guess_u = controls[i]
                deputies[i].snapshots = {
                    j: states[j] for j in range(n) if j != i
                }
            if shift <= config.eps:
                break
            # residual frozen-neighbor ping-pong moves nodes without moving
            # the objectives; once objectives settle, hand over to the
            # serialized safety pass
            if prev_costs is not None and np.abs(costs - prev_costs).max() <= 1e-2 * (
                1.0 + np.abs(costs).max()
            ):
                break
            prev_costs = costs

    # serialized deconfliction passes (ascending deputy order)
    order = list(range(n))
    states, solutions, resolves, safe = ensure_collision_avoidance(
        states, deputies, model, config, order, settings, diagnostics
    )
    for i, out in solutions.items():
        controls[i], gammas[i], upsilons[i] = out[1], out[2], out[3]
        betas.update(out[4])
        w_total = max(w_total, out[5])

    diagnostics.append(
        StageDiag(
            stage="ensure_ca",
            status="optimal",
            iterations=resolves,
            termination=TERM_COLLISION_FREE if safe else TERM_MAX_ITER,
            cost=0.0,
            max_upsilon=float(upsilons.max()) if upsilons.size else 0.0,
            max_beta=max(betas.values()) if betas else 0.0,
            n_vars=0,
            n_constraints=0,
            solve_time=0.0,
        )
    )
    prof = GuidanceProfile(
        y=states,
        u_bar=controls,
        gamma=gammas,
        upsilon=upsilons,
        beta=betas,
        w=w_total,
        a_c=model.a_c,
        diagnostics=diagnostics,
        collision_safe=safe,
    )
    prof.scp_iterations = iters_used
    prof.scp_termination = term
    return prof
