"""Sequential convex programming drivers for the centralized guidance.

Two pipelines are provided: the plain minimum-fuel scheme (solve once
without keep-out rows, then iterate with rows linearized about the previous
iterate) and the full scheme that appends acceleration pruning and the
affine minimum-acceleration stage, in its hard and softened variants.

Because a solution of the linearized keep-out row satisfies
||T dy|| >= e'T dy >= R_CA, any iterate that solves the constrained program
with zero slack is node-wise safe, which is why the loops below almost
always terminate after a single constrained solve.
"""
from __future__ import annotations

import itertools

import numpy as np

from ..conic import INFEASIBLE, MAX_ITER, OPTIMAL, ConeSolution, SolverSettings, solve
from .config import GuidanceConfig, TrackingRefs
from .profile import GuidanceProfile, StageDiag
from .pruning import prune
from .transcription import GridModel, GuidanceError, VarMap, transcribe

TERM_COLLISION_FREE = "collision_free"
TERM_EPS = "eps"
TERM_MAX_ITER = "max_iter"

_ACCEPT_VIOLATION = 1e-5
_ZERO_GUESS_FRACTION = 1e-6  # of a_c * u_min: treat the node as coasting


class StageInfeasible(GuidanceError):
    def __init__(self, stage: str, status: str):
        super().__init__(f"guidance stage '{stage}' reported {status}")
        self.stage = stage
        self.status = status


def _checked_solve(
    prog, stage: str, settings: SolverSettings
) -> ConeSolution:
    sol = solve(prog, settings)
    if sol.status == OPTIMAL:
        return sol
    if sol.status == MAX_ITER and prog.violation(sol.x) <= _ACCEPT_VIOLATION:
        return sol
    raise StageInfeasible(stage, sol.status)


def _extract(model: GridModel, vm: VarMap, x: np.ndarray, y0: np.ndarray):
    n, nf = vm.n_deputies, vm.n_forced
    u_bar = np.zeros((n, nf, 3))
    gamma = np.zeros((n, nf))
    for i in range(n):
        for f in range(nf):
            u_bar[i, f] = x[vm.u(i, f)]
            gamma[i, f] = x[vm.gamma(i, f)]
    y = np.stack([model.propagate_states(y0[i], u_bar[i]) for i in range(n)])
    upsilon = np.zeros((n, nf))
    for (i, f), idx in vm.upsilon.items():
        upsilon[i, f] = x[idx]
    beta = {key: float(x[idx]) for key, idx in vm.beta.items()}
    w = float(x[vm.w_idx]) if vm.w_idx is not None else 0.0
    return y, u_bar, gamma, upsilon, beta, w


def min_node_distance(
    model: GridModel, states: np.ndarray, include_chief: bool
) -> float:
    """Smallest pairwise RTN distance over all nodes of a joint profile."""
    n = states.shape[0]
    pos = np.stack([model.rtn_offsets(states[i]) for i in range(n)])
    best = np.inf
    for i, j in itertools.combinations(range(n), 2):
        best = min(best, float(np.linalg.norm(pos[i] - pos[j], axis=1).min()))
    if include_chief:
        for i in range(n):
            best = min(best, float(np.linalg.norm(pos[i], axis=1).min()))
    return best


def _collision_free(model, states, config, include_chief) -> bool:
    if states.shape[0] == 1 and not include_chief:
        return True
    return min_node_distance(model, states, include_chief) >= config.r_ca - 1e-6


def _stage_loop(
    model: GridModel,
    config: GuidanceConfig,
    y0: np.ndarray,
    build,
    guess_y: np.ndarray,
    stage: str,
    diagnostics: list[StageDiag],
    include_chief: bool,
    settings: SolverSettings,
    soft: bool = False,
):
    """Re-linearize keep-out rows about the previous iterate until safe."""
    y_prev = guess_y
    result = None
    termination = TERM_MAX_ITER
    iterations = 0
    for it in range(1, config.max_iter + 1):
        prog, vm = build(y_prev)
        try:
            sol = _checked_solve(prog, stage, settings)
        except StageInfeasible as exc:
            # a capped collision slack can contradict reachability when a
            # deputy starts deep inside another's keep-out sphere; the soft
            # problem's purpose is feasibility, so lift the cap and retry
            if not (soft and exc.status == INFEASIBLE):
                raise
            prog, vm = build(y_prev, lift=True)
            if not stage.endswith("(beta-cap lifted)"):
                stage = stage + "(beta-cap lifted)"
            sol = _checked_solve(prog, stage, settings)
        result = _extract(model, vm, sol.x, y0)
        iterations = it
        shift = float(
            np.linalg.norm(result[0] - y_prev, axis=2).max()
        )
        if _collision_free(model, result[0], config, include_chief):
            termination = TERM_COLLISION_FREE
            break
        if shift <= config.eps:
            termination = TERM_EPS
            break
        y_prev = result[0]
    y, u_bar, gamma, upsilon, beta, w = result
    diagnostics.append(
        StageDiag(
            stage=stage,
            status=sol.status,
            iterations=iterations,
            termination=termination,
            cost=sol.objective,
            max_upsilon=float(upsilon.max()) if upsilon.size else 0.0,
            max_beta=max(beta.values()) if beta else 0.0,
            n_vars=prog.n_vars,
            n_constraints=prog.n_constraints,
            solve_time=sol.solve_time,
        )
    )
    return result, termination


def _zeroth(
    model, config, y0, stage, diagnostics, settings, *, soft, yf=None, refs=None,
    include_chief_ca=True, pruned=None,
):
    try:
        prog, vm = transcribe(
            model, config, y0, yf=yf, refs=refs, soft=soft,
            include_chief_ca=include_chief_ca, pruned=pruned,
        )
        sol = _checked_solve(prog, stage, settings)
    except StageInfeasible as exc:
        if exc.status == INFEASIBLE and not soft:
            raise StageInfeasible(stage, "infeasible (maneuver time too short)")
        raise
    result = _extract(model, vm, sol.x, y0)
    diagnostics.append(
        StageDiag(
            stage=stage,
            status=sol.status,
            iterations=0,
            termination="zeroth",
            cost=sol.objective,
            max_upsilon=0.0,
            max_beta=0.0,
            n_vars=prog.n_vars,
            n_constraints=prog.n_constraints,
            solve_time=sol.solve_time,
        )
    )
    return result


def _finish(model, config, result, diagnostics, include_chief) -> GuidanceProfile:
    y, u_bar, gamma, upsilon, beta, w = result
    return GuidanceProfile(
        y=y,
        u_bar=u_bar,
        gamma=gamma,
        upsilon=upsilon,
        beta=beta,
        w=w,
        a_c=model.a_c,
        diagnostics=diagnostics,
        collision_safe=_collision_free(model, y, config, include_chief),
    )


def scp_centralized(
    model: GridModel,
    config: GuidanceConfig,
    y0: np.ndarray,
    yf: np.ndarray,
    include_chief_ca: bool = True,
    settings: SolverSettings = SolverSettings(),
) -> GuidanceProfile:
    """Minimum-fuel SCP without pruning or the acceleration floor."""
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    yf = np.atleast_2d(np.asarray(yf, dtype=float))
    diagnostics: list[StageDiag] = []
    result = _zeroth(
        model, config, y0, "fuel_no_ca", diagnostics, settings,
        soft=False, yf=yf, include_chief_ca=include_chief_ca,
    )

    def build(guess_y, lift=False):
        return transcribe(
            model, config, y0, yf=yf, ca_guess=guess_y,
            include_chief_ca=include_chief_ca, on_degenerate="perturb",
        )

    result, _ = _stage_loop(
        model, config, y0, build, result[0], "fuel_ca", diagnostics,
        include_chief_ca, settings,
    )
    return _finish(model, config, result, diagnostics, include_chief_ca)


def _coasting_nodes(model, config, u_bar_i, pruned_i, kf) -> frozenset[int]:
    """Pruned set extended by nodes whose guess thrust is numerically zero.

    A zero guess leaves the minimum-acceleration half-space without a
    direction; such nodes are physically coasting, so they join the forced-
    zero set instead of producing an arbitrary direction.
    """
    floor = max(config.u_min, config.u_max) * model.a_c * _ZERO_GUESS_FRACTION
    extra = {
        int(k)
        for f, k in enumerate(kf)
        if k not in pruned_i and np.linalg.norm(u_bar_i[f]) < floor
    }
    return frozenset(pruned_i | extra)


def scp_with_umin(
    model: GridModel,
    config: GuidanceConfig,
    y0: np.ndarray,
    yf: np.ndarray | None = None,
    refs: TrackingRefs | None = None,
    soft: bool = True,
    include_chief_ca: bool = True,
    settings: SolverSettings = SolverSettings(),
    pre_pruned: list[frozenset[int]] | None = None,
) -> GuidanceProfile:
    """Full pipeline: fuel solve, keep-out solve, pruning, acceleration floor.

    Hard mode (soft=False) enforces the terminal states and the relaxed
    floor exactly and may legitimately be infeasible, which surfaces as
    :class:`StageInfeasible` naming the stage.  Soft mode tracks reference
    states and is feasible by construction whenever the dynamics rows are.
    """
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    if soft:
        if refs is None:
            if yf is None:
                raise GuidanceError("soft pipeline needs refs or final targets")
            refs = TrackingRefs.final_state(np.atleast_2d(yf), model.grid.m)
    elif yf is None:
        raise GuidanceError("hard pipeline needs final targets")
    else:
        yf = np.atleast_2d(np.asarray(yf, dtype=float))

    diagnostics: list[StageDiag] = []
    kf = [int(k) for k in model.grid.kf]
    n_dep = y0.shape[0]
    base = [frozenset()] * n_dep if pre_pruned is None else [
        frozenset(s) for s in pre_pruned
    ]

    def merged(pruned):
        if pruned is None:
            return base
        return [base[i] | pruned[i] for i in range(n_dep)]

    def build(stage, guess_y=None, guess_u=None, pruned=None, lift=False):
        return transcribe(
            model, config, y0, yf=yf, refs=refs, soft=soft,
            ca_guess=guess_y, umin_guess=guess_u, pruned=merged(pruned),
            include_chief_ca=include_chief_ca, on_degenerate="perturb",
            lift_beta_cap=lift,
        )

    # zeroth iteration: no keep-out rows, no acceleration floor
    result = _zeroth(
        model, config, y0, "fuel_no_ca", diagnostics, settings,
        soft=soft, yf=yf, refs=refs, include_chief_ca=include_chief_ca,
        pruned=base,
    )

    # keep-out constrained solve(s)
    result, _ = _stage_loop(
        model, config, y0,
        lambda gy, lift=False: build("fuel_ca", guess_y=gy, lift=lift),
        result[0], "fuel_ca", diagnostics, include_chief_ca, settings, soft=soft,
    )

    # pruning and the re-solve on the surviving nodes
    u_norms = np.linalg.norm(result[1], axis=2) / model.a_c
    pruned = [p | b for p, b in zip(prune(u_norms, config, model.grid), base)]
    if any(pruned_i for pruned_i in pruned):
        result, _ = _stage_loop(
            model, config, y0,
            lambda gy, lift=False: build("pruned", guess_y=gy, pruned=pruned, lift=lift),
            result[0], "pruned", diagnostics, include_chief_ca, settings, soft=soft,
        )

    # affine minimum-acceleration stage
    if config.u_min > 0.0:
        guess_u = result[1]
        eff_pruned = [
            _coasting_nodes(model, config, guess_u[i], pruned[i], kf)
            for i in range(y0.shape[0])
        ]
        result, _ = _stage_loop(
            model, config, y0,
            lambda gy, lift=False: build(
                "min_acc", guess_y=gy, guess_u=guess_u, pruned=eff_pruned,
                lift=lift,
            ),
            result[0], "min_acc", diagnostics, include_chief_ca, settings,
            soft=soft,
        )

    return _finish(model, config, result, diagnostics, include_chief_ca)
