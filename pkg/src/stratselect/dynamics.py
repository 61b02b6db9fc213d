"""Best-response and fictitious-play dynamics of the selection game.

Updates are synchronous: at each step the whole population switches to a
best response, either against the current threshold (``br`` mode) or against
the running average of all past thresholds (``fp`` mode, which averages the
scalar threshold because payoffs depend on opponents only through it).  The
threshold of a state is always the one induced by its strategies, i.e. the
(1 - alpha)-quantile of the decision-statistic mixture.  A threshold that
lands exactly on a dropout is resolved as a 50/50 split between the two tied
best responses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

from .best_response import best_response
from .kernel import RootConfig, find_root, normal_cdf
from .model import (
    EffortDistribution,
    GameConfig,
    GroupView,
    effective_groups,
    solver_violations,
)

__all__ = [
    "DynamicsState",
    "Convergence",
    "DynamicsTrace",
    "induced_threshold",
    "br_step",
    "fp_step",
    "run",
]

MAX_CYCLE_PERIOD = 50
CYCLE_TOL = 1e-7
# A repeating window only counts as a cycle with this much swing; anything
# smaller is a still-contracting sequence and should run to convergence.
CYCLE_MIN_AMPLITUDE = 1e-6
CONVERGED_STEPS = 10


@dataclass(frozen=True)
class DynamicsState:
    """Population snapshot: one strategy per group (in config order), the
    threshold they induce, the step index, and in fictitious play the belief
    (mean of all thresholds seen so far, this one included)."""

    strategies: tuple[EffortDistribution, ...]
    theta: float
    t: int
    belief: float | None = None


@dataclass(frozen=True)
class Convergence:
    status: Literal["converged", "cycle", "max_steps_reached"]
    theta: float | None = None
    period: int | None = None


@dataclass(frozen=True)
class DynamicsTrace:
    states: tuple[DynamicsState, ...]
    convergence: Convergence
    # Per-group mean effort over the final detected period (cycle runs only).
    cycle_avg_effort: tuple[float, ...] | None = None


def induced_threshold(
    strategies: Sequence[EffortDistribution],
    config: GameConfig,
    cfg: RootConfig | None = None,
) -> float:
    """The (1 - alpha)-quantile of the decision-statistic mixture."""
    views = effective_groups(config)
    if len(strategies) != len(views):
        raise ValueError("need one strategy per group")
    target = 1.0 - config.alpha

    def mixture_cdf(theta: float) -> float:
        total = 0.0
        for view, strategy in zip(views, strategies):
            for m, w in strategy.support:
                total += view.share * w * normal_cdf((theta - m) / view.sigma)
        return total - target

    efforts = [m for s in strategies for m, _ in s.support]
    pad = 10.0 * max(v.sigma for v in views)
    lo, hi = min(efforts) - pad, max(efforts) + pad
    span = max(1.0, hi - lo)
    while mixture_cdf(lo) > 0.0:
        lo -= span
        span *= 2.0
    span = max(1.0, hi - lo)
    while mixture_cdf(hi) < 0.0:
        hi += span
        span *= 2.0
    return find_root(mixture_cdf, lo, hi, cfg)


def _respond(
    theta: float,
    views: tuple[GroupView, ...],
    reward: float,
    cfg: RootConfig | None,
) -> tuple[EffortDistribution, ...]:
    strategies = []
    for view in views:
        brs = best_response(theta, view, reward, cfg)
        if len(brs) == 2:
            strategies.append(
                EffortDistribution.mixture(((brs[0], 0.5), (brs[1], 0.5)))
            )
        else:
            strategies.append(EffortDistribution.point(brs[0]))
    return tuple(strategies)


def br_step(
    state: DynamicsState, config: GameConfig, cfg: RootConfig | None = None
) -> DynamicsState:
    """Synchronous best response against the current threshold."""
    views = effective_groups(config)
    strategies = _respond(state.theta, views, config.reward, cfg)
    theta = induced_threshold(strategies, config, cfg)
    return DynamicsState(strategies=strategies, theta=theta, t=state.t + 1)


def fp_step(
    history: Sequence[DynamicsState],
    config: GameConfig,
    cfg: RootConfig | None = None,
) -> DynamicsState:
    """Best response against the mean of all past thresholds."""
    if not history:
        raise ValueError("fictitious play needs a nonempty history")
    views = effective_groups(config)
    belief = sum(s.theta for s in history) / len(history)
    strategies = _respond(belief, views, config.reward, cfg)
    theta = induced_threshold(strategies, config, cfg)
    t = history[-1].t + 1
    new_belief = (belief * len(history) + theta) / (len(history) + 1)
    return DynamicsState(strategies=strategies, theta=theta, t=t, belief=new_belief)


def _detect_cycle(thetas: list[float]) -> int | None:
    """Smallest period p <= MAX_CYCLE_PERIOD repeated 3 times at the tail."""
    n = len(thetas)
    for p in range(2, MAX_CYCLE_PERIOD + 1):
        if n < 3 * p:
            return None
        if abs(thetas[-1] - thetas[-1 - p]) > CYCLE_TOL:
            continue
        ok = True
        for i in range(1, 2 * p + 1):
            if abs(thetas[-i] - thetas[-i - p]) > CYCLE_TOL:
                ok = False
                break
        if ok:
            window = thetas[-p:]
            if max(window) - min(window) >= CYCLE_MIN_AMPLITUDE:
                return p
    return None


def run(
    config: GameConfig,
    mode: Literal["br", "fp"] = "br",
    max_steps: int = 1000,
    init: Sequence[EffortDistribution] | None = None,
    tol: float = 1e-9,
    cfg: RootConfig | None = None,
) -> DynamicsTrace:
    """Iterate the chosen dynamic from ``init`` (zero effort by default).

    Stops early on convergence (threshold change below ``tol`` for 10
    consecutive steps; in ``fp`` mode the belief change, since the raw
    threshold may keep alternating around a mixing equilibrium) or when the
    threshold sequence locks into a cycle of period at most 50, repeated
    three times within 1e-7.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    if mode not in ("br", "fp"):
        raise ValueError(f"unknown mode {mode!r}")
    problems = solver_violations(config)
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    views = effective_groups(config)
    if init is None:
        init = tuple(EffortDistribution.point(0.0) for _ in views)
    else:
        init = tuple(init)
        if len(init) != len(views):
            raise ValueError("need one initial strategy per group")

    theta0 = induced_threshold(init, config, cfg)
    state = DynamicsState(
        strategies=init,
        theta=theta0,
        t=0,
        belief=theta0 if mode == "fp" else None,
    )
    states = [state]
    thetas = [theta0]
    belief = theta0
    quiet = 0

    for _ in range(max_steps):
        if mode == "br":
            new = br_step(state, config, cfg)
            watched_delta = abs(new.theta - state.theta)
        else:
            strategies = _respond(belief, views, config.reward, cfg)
            theta = induced_threshold(strategies, config, cfg)
            new_belief = (belief * len(states) + theta) / (len(states) + 1)
            new = DynamicsState(
                strategies=strategies, theta=theta, t=state.t + 1, belief=new_belief
            )
            watched_delta = abs(new_belief - belief)
            belief = new_belief
        states.append(new)
        thetas.append(new.theta)
        state = new

        quiet = quiet + 1 if watched_delta <= tol else 0
        if quiet >= CONVERGED_STEPS:
            final = belief if mode == "fp" else state.theta
            return DynamicsTrace(
                states=tuple(states),
                convergence=Convergence(status="converged", theta=final),
            )
        period = _detect_cycle(thetas)
        if period is not None:
            window = states[-period:]
            averages = tuple(
                sum(s.strategies[i].mean() for s in window) / period
                for i in range(len(views))
            )
            return DynamicsTrace(
                states=tuple(states),
                convergence=Convergence(status="cycle", period=period),
                cycle_avg_effort=averages,
            )

    return DynamicsTrace(
        states=tuple(states),
        convergence=Convergence(status="max_steps_reached"),
    )
