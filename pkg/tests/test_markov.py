import math

import numpy as np
import pytest

from debategame.engine import DebateParams
from debategame.logic import position_from_bits, tenable_set_from, truth_position
from debategame.markov import (
    CapacityError,
    ExactSolver,
    discounted_final_distribution,
    enumerate_states,
    expected_visits,
    get_solver,
)
from debategame.strategies import ALL_STRATEGIES, EXIT, parse_strategy

P = position_from_bits


def closed_form_state_count(positions, truth_kept):
    """Independent oracle: sum over tenable-set sizes of (ways) * size^2."""
    total = 0
    if truth_kept:
        free = positions - 1
        for k in range(free + 1):
            total += math.comb(free, k) * (k + 1) ** 2
    else:
        for k in range(1, positions + 1):
            total += math.comb(positions, k) * k * k
    return total


class TestStateEnumeration:
    def test_truth_kept_count(self):
        space = enumerate_states(3)
        assert len(space) == 2816
        assert len(space) == closed_form_state_count(8, truth_kept=True)

    def test_truth_removed_count(self):
        space = enumerate_states(3, include_truth_removed=True)
        assert len(space) == 4608
        assert len(space) == closed_form_state_count(8, truth_kept=False)

    def test_hypothetical_two_proposition_debate(self):
        space = enumerate_states(2)
        assert len({t for t, _, _ in space.states}) == 8

    def test_positions_always_tenable(self):
        space = enumerate_states(3)
        assert all(t & (1 << p1) and t & (1 << p2) for t, p1, p2 in space.states)

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            enumerate_states(4)

    def test_initial_distribution(self):
        space = enumerate_states(3)
        y0 = space.initial_distribution()
        assert np.isclose(y0.sum(), 1.0)
        assert np.count_nonzero(y0) == 64
        assert np.allclose(y0[y0 > 0], 1 / 64)


def example_state():
    tenable = tenable_set_from(
        [P(b) for b in [(0, 1, 0), (0, 1, 1), (1, 0, 0), (1, 1, 0), (1, 1, 1)]]
    )
    return (tenable, P((0, 1, 1)), P((1, 1, 1)))


class TestTransitionAssembly:
    def test_worked_example_composite_probability(self):
        solver = get_solver(3, 0.0)
        state = example_state()
        target_tenable = state[0] & ~(1 << P((0, 1, 1)))
        truth = truth_position(3)
        i = solver.space.index[state]
        j = solver.space.index[(target_tenable, truth, truth)]
        tm = solver.build_transition_matrix(
            parse_strategy("S+O-"), parse_strategy("S+S-")
        )
        assert tm.M[i, j] == 0.25

    def test_worked_example_speaker_contributions(self):
        solver = get_solver(3, 0.0)
        state = example_state()
        truth = truth_position(3)
        target = (state[0] & ~(1 << P((0, 1, 1))), truth, truth)
        row1 = solver.successor_distribution(state, parse_strategy("S+O-"), role=1)
        assert row1[target] == 0.5
        row2 = solver.successor_distribution(state, parse_strategy("S+S-"), role=2)
        assert target not in row2
        assert row2[state] == 1.0

    @pytest.mark.parametrize("alpha", [0.0, 0.2])
    @pytest.mark.parametrize("names", [("S+S-", "S+O+"), ("O-O-", "S-O+"), ("O+O-", "O+O-")])
    def test_rows_are_stochastic(self, alpha, names):
        solver = get_solver(3, alpha)
        tm = solver.build_transition_matrix(*map(parse_strategy, names))
        sums = np.asarray(tm.M.sum(axis=1)).ravel()
        assert np.abs(sums - 1.0).max() < 1e-12
        assert tm.M.data.min() >= 0.0

    def test_q_entries_are_small_nonnegative_integers(self):
        solver = get_solver(3, 0.0)
        tm = solver.build_transition_matrix(
            parse_strategy("S+S-"), parse_strategy("O+O-")
        )
        for q in (tm.Q1, tm.Q2):
            assert q.data.min() >= 0
            assert q.data.max() <= 3
            assert np.all(q.data == np.round(q.data))

    def test_refusenik_speaker_never_moves_positions(self):
        solver = get_solver(3, 0.0)
        for state in solver.space.states[::97]:
            row = solver.successor_distribution(state, parse_strategy("S-O+"), role=1)
            for (t, p1, p2) in row:
                assert (p1, p2) == (state[1], state[2])

    def test_alpha_zero_truth_keeping_states_closed(self):
        solver = ExactSolver(3, 0.0, include_truth_removed=True)
        tm = solver.build_transition_matrix(
            parse_strategy("S+S-"), parse_strategy("S+O+")
        )
        truth_bit = 1 << truth_position(3)
        keep = np.array([bool(t & truth_bit) for t, _, _ in solver.space.states])
        assert tm.M[keep][:, ~keep].sum() == 0.0


class TestDiscountedSolves:
    def _chain(self, alpha=0.0):
        solver = get_solver(3, alpha)
        tm = solver.build_transition_matrix(
            parse_strategy("S+S-"), parse_strategy("S+O+")
        )
        return solver, tm

    def test_delta_zero_returns_initial(self):
        solver, tm = self._chain()
        y0 = solver.space.initial_distribution()
        assert np.array_equal(discounted_final_distribution(tm.M, 0.0, y0), y0)
        assert np.array_equal(expected_visits(tm.M, 0.0, y0), y0)

    def test_final_distribution_normalized(self):
        solver, tm = self._chain()
        y0 = solver.space.initial_distribution()
        y = discounted_final_distribution(tm.M, 0.8, y0)
        assert abs(y.sum() - 1.0) < 1e-10
        assert y.min() > -1e-15

    def test_visit_mass_is_geometric_series(self):
        solver, tm = self._chain()
        y0 = solver.space.initial_distribution()
        z = expected_visits(tm.M, 0.8, y0)
        assert abs(z.sum() - 5.0) < 1e-9
        y = discounted_final_distribution(tm.M, 0.8, y0)
        assert np.allclose(y, 0.2 * z, atol=1e-14)

    def test_absorbing_start_concentrates_visits(self):
        solver, _ = self._chain()
        truth = truth_position(3)
        absorbing = (1 << truth, truth, truth)
        tm = solver.build_transition_matrix(
            parse_strategy("S+S-"), parse_strategy("S+S-")
        )
        y0 = np.zeros(len(solver.space))
        y0[solver.space.index[absorbing]] = 1.0
        z = expected_visits(tm.M, 0.8, y0)
        assert abs(z[solver.space.index[absorbing]] - 5.0) < 1e-9
        assert abs(z.sum() - 5.0) < 1e-9

    def test_rejects_bad_delta(self):
        _, tm = self._chain()
        with pytest.raises(ValueError):
            expected_visits(tm.M, 1.0, np.zeros(tm.M.shape[0]))


def power_series_outcome(solver, s1, s2, params, tol=1e-10):
    """Independent oracle: evaluate the discounted sums by direct iteration
    of y(t+1) = y(t) M until the geometric tail is below tol."""
    tm = solver.build_transition_matrix(s1, s2)
    mt = tm.M.T.tocsr()
    mq1 = np.asarray(tm.M.multiply(tm.Q1).sum(axis=1)).ravel()
    mq2 = np.asarray(tm.M.multiply(tm.Q2).sum(axis=1)).ravel()
    delta = params.delta
    y_t = solver.space.initial_distribution()
    y_acc = np.zeros_like(y_t)
    z_acc = np.zeros_like(y_t)
    weight = 1.0
    t_stop = int(math.ceil(math.log(tol) / math.log(delta)))
    for _ in range(t_stop + 1):
        y_acc += weight * (1.0 - delta) * y_t
        z_acc += weight * y_t
        y_t = mt @ y_t
        weight *= delta
    acc1, acc2 = solver.space.accuracy_vectors()
    cons = solver.space.consensus_vector()
    return (
        float(y_acc @ acc1),
        float(y_acc @ acc2),
        float(delta * (z_acc @ mq1)),
        float(delta * (z_acc @ mq2)),
        float(y_acc @ cons),
    )


class TestExactOutcome:
    def test_exit_payoff_formula(self):
        solver = get_solver(3, 0.0)
        params = DebateParams(n=3, delta=0.8, w=9.5)
        out = solver.exact_outcome(EXIT, parse_strategy("S+S+"), params)
        assert out.u1 == out.u2 == 9.5 * 1.5 == 14.25
        assert out.v1 == out.v2 == 1.5
        assert out.d1 == out.d2 == 0.0
        assert out.consensus == 0.5
        assert out.collective == 1.5

    def test_matches_power_series_oracle(self):
        solver = get_solver(3, 0.0)
        params = DebateParams(n=3, delta=0.8, w=4.5)
        for names in [("S+S-", "S+O+"), ("S-O-", "S+S+"), ("O+O-", "O-O+")]:
            s1, s2 = map(parse_strategy, names)
            out = solver.exact_outcome(s1, s2, params)
            v1, v2, d1, d2, cons = power_series_outcome(solver, s1, s2, params)
            assert abs(out.v1 - v1) < 1e-8
            assert abs(out.v2 - v2) < 1e-8
            assert abs(out.d1 - d1) < 1e-8
            assert abs(out.d2 - d2) < 1e-8
            assert abs(out.consensus - cons) < 1e-8

    def test_payoff_symmetry_under_role_swap(self):
        solver = get_solver(3, 0.0)
        params = DebateParams(n=3, delta=0.8, w=4.5)
        for names in [("S+S-", "S+O+"), ("S-O-", "S+S+"), ("O+S-", "S-O+")]:
            s1, s2 = map(parse_strategy, names)
            ab = solver.exact_outcome(s1, s2, params)
            ba = solver.exact_outcome(s2, s1, params)
            assert ab.u1 == pytest.approx(ba.u2, abs=1e-9)
            assert ab.d1 == pytest.approx(ba.d2, abs=1e-9)
            assert ab.consensus == pytest.approx(ba.consensus, abs=1e-9)

    def test_rejects_mismatched_params(self):
        solver = get_solver(3, 0.0)
        with pytest.raises(ValueError):
            solver.exact_outcome(
                parse_strategy("S+S-"), parse_strategy("S+S-"),
                DebateParams(n=3, delta=0.8, w=1.0, alpha=0.5),
            )


class TestMetricsOverTime:
    def test_initial_point_is_one_half(self):
        solver = get_solver(3, 0.0)
        for s1 in (parse_strategy("S+S-"), parse_strategy("O-O-"), EXIT):
            coll, cons = solver.metrics_over_time(s1, parse_strategy("S+S+") if not s1.is_exit else EXIT, 5)
            assert coll[0] == pytest.approx(0.5, abs=1e-12)
            assert cons[0] == pytest.approx(0.5, abs=1e-12)

    def test_bold_profile_monotone_without_error(self):
        solver = get_solver(3, 0.0)
        s = parse_strategy("S+S-")
        coll, _ = solver.metrics_over_time(s, s, 50)
        assert np.all(np.diff(coll) >= -1e-9)

    def test_bold_profile_eventually_declines_with_error(self):
        solver = get_solver(3, 0.2)
        s = parse_strategy("S+S-")
        coll, _ = solver.metrics_over_time(s, s, 50)
        assert np.diff(coll).min() < -1e-9
