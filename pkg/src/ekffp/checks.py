"""Randomized self-checks of the filter and learner invariants, used by ``ekffp verify``."""

from __future__ import annotations

import numpy as np

from .filters import softmax_jacobian, softmax_link, update_batch
from .game import Game
from .learners import EKFFictitiousPlay
from .validation import check_random_state


def increment_violations(n_trials: int = 10_000, dims=(2, 6), rng=None) -> dict:
    """Per action count, updates where the observed action's mean increment is not the strict maximum.

    Beliefs have means drawn from N(0, I) and isotropic covariances ``c I``.
    With two actions the inequality holds exactly; with three or more it can
    fail when the prior strongly favours one action and an unlikely one is
    observed, e.g. mean (3, 0, -3), P = I, zeta = 1, observed action 2.
    """
    rng = check_random_state(rng)
    out = {}
    lo, hi = dims
    for k in range(lo, hi + 1):
        m = n_trials // (hi - lo + 1)
        means = rng.normal(0.0, 1.0, size=(m, k))
        covs = rng.uniform(0.05, 5.0, size=m)[:, None, None] * np.eye(k)
        obs = rng.integers(0, k, size=m)
        zeta = rng.uniform(1e-3, 1.0, size=m)
        new, _ = update_batch(means, covs, obs, zeta)
        inc = new - means
        own = inc[np.arange(m), obs]
        inc[np.arange(m), obs] = -np.inf
        out[k] = int(np.sum(~(own > inc.max(axis=1))))
    return out


def jacobian_error(n_points: int = 1000, k: int = 4, step: float = 1e-6, rng=None) -> float:
    """Largest gap between the analytic softmax Jacobian and central differences."""
    rng = check_random_state(rng)
    worst = 0.0
    for _ in range(n_points):
        q = rng.normal(0.0, 2.0, size=k)
        tau = rng.uniform(0.5, 2.0)
        fd = np.empty((k, k))
        for j in range(k):
            e = np.zeros(k)
            e[j] = step
            fd[:, j] = (softmax_link(q + e, tau) - softmax_link(q - e, tau)) / (2 * step)
        worst = max(worst, float(np.abs(fd - softmax_jacobian(q, tau)).max()))
    return worst


def absorption_departures(game: Game, equilibrium, rounds: int = 1000, strength: float = 5.0, seed: int = 0) -> int:
    """Rounds in which EKF-FP players leave a strict equilibrium they start believing in."""
    learners = []
    for i in range(game.num_players):
        init = []
        for j in range(game.num_players):
            q = np.zeros(game.action_counts[j])
            q[equilibrium[j]] = strength
            init.append(q)
        learner = EKFFictitiousPlay(init=init, random_state=np.random.default_rng([seed, i]))
        learners.append(learner.fit(game, i))
    target = tuple(int(a) for a in equilibrium)
    joint = tuple(lrn.predict() for lrn in learners)
    departures = int(joint != target)
    for _ in range(rounds - 1):
        for lrn in learners:
            lrn.partial_fit(joint)
        joint = tuple(lrn.predict() for lrn in learners)
        departures += int(joint != target)
    return departures
