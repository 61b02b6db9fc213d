import pytest

from stratselect.model import GameConfig, GroupParams, GroupView


@pytest.fixture
def unit_group():
    """Single group with unit cost and unit decision-statistic spread."""
    return GroupView("A", 1.0, 1.0, 1.0)


@pytest.fixture
def noise_gap_config():
    """Equal costs, spreads 0.1 vs 1.0, S=10, alpha=0.1: the selection is
    pinned on the low-spread group's dropout and that group mixes."""
    return GameConfig(
        reward=10.0,
        alpha=0.1,
        eta_sq=1.0,
        groups=(
            GroupParams("H", 0.5, 1.0, noise_var=99.0, sigma_tilde=0.1),
            GroupParams("L", 0.5, 1.0, noise_var=0.0, sigma_tilde=1.0),
        ),
    )


@pytest.fixture
def cost_gap_config():
    """Same spreads but the low-spread group pays 5x the cost: the selection
    pins on the other group's dropout instead."""
    return GameConfig(
        reward=10.0,
        alpha=0.1,
        eta_sq=1.0,
        groups=(
            GroupParams("H", 0.5, 5.0, noise_var=99.0, sigma_tilde=0.1),
            GroupParams("L", 0.5, 1.0, noise_var=0.0, sigma_tilde=1.0),
        ),
    )


@pytest.fixture
def small_reward_config():
    """Subcritical for both groups: unique best responses everywhere."""
    return GameConfig(
        reward=1.0,
        alpha=0.3,
        eta_sq=1.0,
        groups=(
            GroupParams("H", 0.5, 1.0, noise_var=1.7777777777777777, sigma_tilde=0.6),
            GroupParams("L", 0.5, 1.0, noise_var=0.0, sigma_tilde=1.0),
        ),
    )


@pytest.fixture
def symmetric_config():
    """Identical groups at a subcritical reward: everything must coincide."""
    g = dict(share=0.5, cost=1.0, noise_var=0.5)
    return GameConfig(
        reward=2.0,
        alpha=0.3,
        eta_sq=1.0,
        groups=(GroupParams("A", **g), GroupParams("B", **g)),
    )


def two_group_config(
    reward,
    alpha,
    cost_h=1.0,
    cost_l=1.0,
    sigma_h=0.6,
    sigma_l=1.0,
    share_h=0.5,
):
    return GameConfig(
        reward=reward,
        alpha=alpha,
        eta_sq=1.0,
        groups=(
            GroupParams("H", share_h, cost_h, sigma_tilde=sigma_h),
            GroupParams("L", 1.0 - share_h, cost_l, sigma_tilde=sigma_l),
        ),
    )
