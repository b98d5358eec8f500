"""Distributed guidance: snapshots, per-deputy programs, deconfliction."""
import numpy as np
import pytest

from formguide.guidance import (
    GridModel,
    GuidanceConfig,
    GuidanceError,
    TrackingRefs,
    build_grid,
    compute_delta_v,
    min_node_distance,
)
from formguide.guidance.distributed import (
    DeputyProblemState,
    Mailbox,
    TrajectorySnapshot,
    ensure_collision_avoidance,
    scp_distributed,
    transcribe_problem5,
)


def _refs_for(yf_row, m):
    return TrackingRefs(kbar=np.array([m + 1]), ybar=yf_row[None, None, :])


class TestMailbox:
    def test_publish_collect(self):
        box = Mailbox()
        snap = TrajectorySnapshot(0, 1, np.zeros((4, 6)))
        box.publish(snap)
        got = box.collect_all(1, [0])
        assert got[0] is snap

    def test_missing_snapshot_names_deputy(self):
        box = Mailbox()
        box.publish(TrajectorySnapshot(0, 0, np.zeros((4, 6))))
        with pytest.raises(GuidanceError, match="deputy 2"):
            box.collect_all(0, [0, 2])

    def test_snapshots_immutable(self):
        snap = TrajectorySnapshot(0, 0, np.zeros((4, 6)))
        with pytest.raises(ValueError):
            snap.states[0, 0] = 1.0


class TestProblem5:
    def test_single_deputy_matches_problem4_without_chief_rows(
        self, model_short, config
    ):
        from formguide.conic import solve
        from formguide.guidance import transcribe_problem4_soft

        y0 = np.array([0.0, 300, -10, 0, 0, 0])
        yf = np.array([0.0, 300, 10, 0, 0, 0])
        refs = _refs_for(yf, model_short.grid.m)
        state = DeputyProblemState(deputy_id=0, y0=y0, refs=refs)
        p5, _ = transcribe_problem5(state, model_short, config, with_ca=False)
        p4, _ = transcribe_problem4_soft(
            model_short, config, y0[None, :], refs, include_chief_ca=False
        )
        s5, s4 = solve(p5), solve(p4)
        assert s5.objective == pytest.approx(s4.objective, abs=1e-8)

    def test_missing_guess_rejected(self, model_short, config):
        y0 = np.array([0.0, 300, 0, 0, 0, 0])
        state = DeputyProblemState(
            deputy_id=0, y0=y0, refs=_refs_for(y0, model_short.grid.m)
        )
        with pytest.raises(GuidanceError, match="own state guess"):
            transcribe_problem5(state, model_short, config, with_ca=True)

    def test_program_references_only_own_variables(self, model_short, config):
        """Structural isolation: keep-out rows couple to this deputy's state
        variables only; neighbors enter as constants."""
        y0 = np.array([0.0, 100, 0, 0, 0, 0])
        guess = model_short.propagate_states(y0, np.zeros((8, 3)))
        other = model_short.propagate_states(
            np.array([0.0, -100, 0, 0, 0, 0]), np.zeros((8, 3))
        )
        state = DeputyProblemState(
            deputy_id=0, y0=y0, refs=_refs_for(y0, model_short.grid.m),
            guess_y=guess, snapshots={1: other},
        )
        prog, vm = transcribe_problem5(state, model_short, config, with_ca=True)
        n_own = vm.n_vars
        assert prog.n_vars == n_own
        assert prog.ineq_mat.shape[1] == n_own


class TestDistributedPipeline:
    def test_reconfig2_anchor(self, model_r2_005, config, r2_states):
        y0, yf = r2_states
        prof = scp_distributed(model_r2_005, config, y0, yf=yf)
        dv, _ = compute_delta_v(prof, model_r2_005.grid)
        assert dv == pytest.approx(1.58, rel=0.10)
        assert prof.final_state_error(yf).max() <= 1e-2
        assert max(0.0, prof.max_upsilon) == pytest.approx(0.0, abs=1e-6)
        assert max(0.0, prof.max_beta) == pytest.approx(0.0, abs=1e-6)
        assert prof.collision_safe

    def test_reconfig1_anchor(self, chief_leo, period_leo, config, r1_states):
        grid = build_grid(0.0, 5 * period_leo, 0.05, 100.0, chief_leo)
        model = GridModel(grid, chief_leo)
        y0, yf = r1_states
        prof = scp_distributed(model, config, y0, yf=yf)
        dv, _ = compute_delta_v(prof, grid)
        assert dv == pytest.approx(2.76, rel=0.10)
        assert prof.collision_safe

    def test_determinism(self, model_short, config):
        y0 = np.array([[0.0, 200, 0, 0, 0, 0], [0.0, -200, 0, 0, 0, 0]])
        yf = np.array([[0.0, 230, 10, 0, 0, 0], [0.0, -230, -10, 0, 0, 0]])
        p1 = scp_distributed(model_short, config, y0, yf=yf)
        p2 = scp_distributed(model_short, config, y0, yf=yf)
        assert np.array_equal(p1.y, p2.y)
        assert np.array_equal(p1.u_bar, p2.u_bar)

    def test_mirror_swap_safe(self, chief_leo, period_leo, config):
        """Symmetric head-on exchange: purely parallel iteration would
        ping-pong; the pipeline must return a node-wise safe joint profile."""
        grid = build_grid(0.0, 3 * period_leo, 0.05, 100.0, chief_leo)
        model = GridModel(grid, chief_leo)
        y0 = np.array([[0.0, 200, 0, 0, 0, 0], [0.0, -200, 0, 0, 0, 0]])
        yf = y0[::-1].copy()
        prof = scp_distributed(model, config, y0, yf=yf)
        assert prof.collision_safe
        assert min_node_distance(model, prof.y, include_chief=False) >= (
            config.r_ca - 1e-6
        )


class TestEnsureCollisionAvoidance:
    def _states_for(self, model, y0_rows, config, yf_rows):
        deputies = []
        for i, (y0, yf) in enumerate(zip(y0_rows, yf_rows)):
            deputies.append(
                DeputyProblemState(
                    deputy_id=i, y0=y0,
                    refs=_refs_for(yf, model.grid.m),
                    guess_y=model.propagate_states(y0, np.zeros((len(model.grid.kf), 3))),
                )
            )
        return deputies

    def test_already_safe_zero_resolves(self, model_short, config):
        y0 = np.array([[0.0, 300, 0, 0, 0, 0], [0.0, -300, 0, 0, 0, 0]])
        states = np.stack([
            model_short.propagate_states(y0[i], np.zeros((8, 3))) for i in range(2)
        ])
        deputies = self._states_for(model_short, y0, config, y0)
        out, _, resolves, safe = ensure_collision_avoidance(
            states, deputies, model_short, config, [0, 1]
        )
        assert resolves == 0
        assert safe
        assert np.array_equal(out, states)

    def test_single_intruder_single_resolve(self, model_short, config):
        """Three parked deputies and one whose free-drift path cuts a
        keep-out sphere: exactly one re-solve in the first pass (the
        intruder leads the fixed update order)."""
        y0 = np.array([
            [-40.0, -410, 0, 0, 0, 0],  # drifts forward onto the deputy ahead
            [0.0, -150, 0, 0, 0, 0],
            [0.0, 150, 0, 0, 0, 0],
            [0.0, 450, 0, 0, 0, 0],
        ])
        states = np.stack([
            model_short.propagate_states(y0[i], np.zeros((8, 3))) for i in range(4)
        ])
        deputies = self._states_for(model_short, y0, config, y0)
        out, _, resolves, safe = ensure_collision_avoidance(
            states, deputies, model_short, config, [0, 1, 2, 3]
        )
        assert safe
        assert resolves == 1
