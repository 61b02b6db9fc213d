import dataclasses

import pytest

from stratselect.dynamics import (
    DynamicsState,
    br_step,
    fp_step,
    induced_threshold,
    run,
)
from stratselect.equilibrium import solve_unconstrained
from stratselect.model import EffortDistribution, GameConfig, GroupParams


def single_group_config(alpha, sigma=1.0):
    return GameConfig(
        reward=2.0,
        alpha=alpha,
        eta_sq=1.0,
        groups=(GroupParams("A", 1.0, 1.0, sigma_tilde=sigma),),
    )


class TestInducedThreshold:
    def test_median_of_point_mass(self):
        config = single_group_config(alpha=0.5)
        theta = induced_threshold([EffortDistribution.point(1.3)], config)
        assert theta == pytest.approx(1.3, abs=1e-10)

    def test_one_spread_quantile(self):
        # alpha = 1 - Phi(1) puts the threshold one spread above the effort.
        config = single_group_config(alpha=0.15865525393145707)
        theta = induced_threshold([EffortDistribution.point(2.0)], config)
        assert theta == pytest.approx(3.0, abs=1e-9)

    def test_symmetric_mixture_matches_single_group(self, symmetric_config):
        strategy = EffortDistribution.point(0.7)
        theta_two = induced_threshold([strategy, strategy], symmetric_config)
        solo = GameConfig(
            reward=symmetric_config.reward,
            alpha=symmetric_config.alpha,
            eta_sq=symmetric_config.eta_sq,
            groups=(dataclasses.replace(symmetric_config.groups[0], share=1.0),),
        )
        theta_one = induced_threshold([strategy], solo)
        assert theta_two == pytest.approx(theta_one, abs=1e-10)

    def test_strategy_count_mismatch(self, symmetric_config):
        with pytest.raises(ValueError):
            induced_threshold([EffortDistribution.point(0.0)], symmetric_config)


class TestSteps:
    def test_equilibrium_is_fixed_point(self, small_reward_config):
        eq = solve_unconstrained(small_reward_config)
        state = DynamicsState(
            strategies=tuple(o.strategy for o in eq.outcomes),
            theta=eq.threshold,
            t=0,
        )
        stepped = br_step(state, small_reward_config)
        assert stepped.theta == pytest.approx(eq.threshold, abs=1e-8)
        for before, after in zip(state.strategies, stepped.strategies):
            assert after.mean() == pytest.approx(before.mean(), abs=1e-8)

    def test_threshold_invariant_after_step(self, small_reward_config):
        state = DynamicsState(
            strategies=(EffortDistribution.point(0.0), EffortDistribution.point(0.0)),
            theta=induced_threshold(
                [EffortDistribution.point(0.0)] * 2, small_reward_config
            ),
            t=0,
        )
        stepped = br_step(state, small_reward_config)
        rebuilt = induced_threshold(stepped.strategies, small_reward_config)
        assert stepped.theta == pytest.approx(rebuilt, abs=1e-10)

    def test_fp_with_unit_history_equals_br(self, small_reward_config):
        state = DynamicsState(
            strategies=(EffortDistribution.point(0.2), EffortDistribution.point(0.4)),
            theta=induced_threshold(
                [EffortDistribution.point(0.2), EffortDistribution.point(0.4)],
                small_reward_config,
            ),
            t=0,
        )
        via_br = br_step(state, small_reward_config)
        via_fp = fp_step([state], small_reward_config)
        assert via_fp.theta == pytest.approx(via_br.theta, abs=1e-12)
        for a, b in zip(via_br.strategies, via_fp.strategies):
            assert a.support == b.support

    def test_fp_requires_history(self, small_reward_config):
        with pytest.raises(ValueError):
            fp_step([], small_reward_config)


class TestRun:
    def test_smooth_regime_converges(self, small_reward_config):
        eq = solve_unconstrained(small_reward_config)
        trace = run(small_reward_config, mode="br", max_steps=500, tol=1e-10)
        assert trace.convergence.status == "converged"
        assert trace.convergence.theta == pytest.approx(eq.threshold, abs=1e-8)

    def test_smooth_regime_contracts(self, small_reward_config):
        eq = solve_unconstrained(small_reward_config)
        trace = run(small_reward_config, mode="br", max_steps=60, tol=0.0)
        errors = [abs(s.theta - eq.threshold) for s in trace.states[1:]]
        assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))

    def test_pinned_regime_cycles(self, noise_gap_config):
        trace = run(noise_gap_config, mode="br", max_steps=500)
        assert trace.convergence.status == "cycle"
        assert trace.convergence.period >= 2
        assert trace.cycle_avg_effort is not None

    def test_cycle_effort_dominates_equilibrium(self, noise_gap_config):
        eq = solve_unconstrained(noise_gap_config)
        trace = run(noise_gap_config, mode="br", max_steps=500)
        for avg, outcome in zip(trace.cycle_avg_effort, eq.outcomes):
            assert avg >= outcome.avg_effort - 1e-9

    def test_fp_converges_in_smooth_regime(self, small_reward_config):
        eq = solve_unconstrained(small_reward_config)
        trace = run(small_reward_config, mode="fp", max_steps=3000, tol=1e-7)
        assert trace.convergence.status == "converged"
        assert abs(trace.states[-1].belief - eq.threshold) <= 1e-4

    def test_fp_belief_approaches_equilibrium(self, noise_gap_config):
        eq = solve_unconstrained(noise_gap_config)
        trace = run(noise_gap_config, mode="fp", max_steps=3000)
        beliefs = [s.belief for s in trace.states]
        final_err = abs(beliefs[-1] - eq.threshold)
        assert final_err <= 1e-3
        earlier_err = abs(beliefs[1000] - eq.threshold)
        assert final_err < earlier_err

    def test_determinism(self, noise_gap_config):
        one = run(noise_gap_config, mode="br", max_steps=120)
        two = run(noise_gap_config, mode="br", max_steps=120)
        assert [s.theta for s in one.states] == [s.theta for s in two.states]
        assert one.convergence == two.convergence

    def test_max_steps_status(self, noise_gap_config):
        trace = run(noise_gap_config, mode="fp", max_steps=5)
        assert trace.convergence.status == "max_steps_reached"
        assert len(trace.states) == 6

    def test_rejects_bad_mode_and_steps(self, noise_gap_config):
        with pytest.raises(ValueError):
            run(noise_gap_config, mode="sgd")
        with pytest.raises(ValueError):
            run(noise_gap_config, max_steps=0)

    def test_custom_init(self, small_reward_config):
        init = (EffortDistribution.point(0.5), EffortDistribution.point(0.1))
        trace = run(small_reward_config, mode="br", max_steps=300, init=init)
        assert trace.convergence.status == "converged"
