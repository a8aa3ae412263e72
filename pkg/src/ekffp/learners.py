"""Per-agent decision processes for repeated play of a finite game.

Two layers live here. Opponent models are estimators over a batch of
opponents that share an action count: ``partial_fit`` consumes one round of
observed actions and ``predict_proba`` returns the forecast mixed strategy of
each opponent for the next round. Agent learners wrap one opponent model per
action-count group and pick their own action by best response (or smooth best
response) to the product of those forecasts.

All learners follow the same protocol::

    learner = EKFFictitiousPlay(random_state=0).fit(game, player=0)
    action = learner.predict()          # round 0, acts on prior beliefs
    learner.partial_fit(joint_action)   # everyone's action from last round
    action = learner.predict()          # round 1
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import ConfigurationError, NotStartedError
from .filters import predict_cov_batch, resolve_schedule, softmax_link, update_batch
from .game import TIE_BREAK_RULES, Game, select_maximizer
from .validation import check_random_state

LEARNER_KINDS = ("classic_fp", "ekf_fp", "pf_fp", "greedy", "random")


# --------------------------------------------------------------------------
# classic fictitious play on plain weight vectors


def classic_fp_observe(weights, action=None) -> np.ndarray:
    """Return ``weights`` with the observed action's count incremented by one."""
    w = np.array(weights, dtype=float)
    if action is None:
        return w
    if not 0 <= action < w.size:
        raise ConfigurationError(f"action {action} outside [0, {w.size})")
    w[action] += 1.0
    return w


def classic_fp_strategy(weights) -> np.ndarray:
    """Empirical mixed strategy ``weights / sum(weights)``."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ConfigurationError("fictitious-play weights must be non-negative")
    total = w.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise ConfigurationError("fictitious-play weights must have a positive sum")
    return w / total


# --------------------------------------------------------------------------
# opponent models


def _observed_vector(actions, n_opponents, n_actions):
    a = np.asarray(actions, dtype=int).reshape(-1)
    if a.size != n_opponents:
        raise ConfigurationError(f"expected {n_opponents} observed actions, got {a.size}")
    if np.any(a < 0) or np.any(a >= n_actions):
        raise ConfigurationError(f"observed action outside [0, {n_actions})")
    return a


class _OpponentModel(BaseEstimator):
    def _check_started(self):
        if not hasattr(self, "t_"):
            raise NotStartedError(f"{type(self).__name__} is not fitted; call fit or reset first")

    def fit(self, X=None, y=None):
        """Reset to the prior, then absorb every row of ``X`` (rounds x opponents)."""
        self.reset()
        if X is not None:
            for row in np.atleast_2d(np.asarray(X, dtype=int).reshape(len(X), -1)):
                self.partial_fit(row)
        return self

    def forecast(self, X):
        """One-step-ahead strategies ``(rounds, opponents, actions)`` while absorbing ``X``.

        Row ``t`` of the output is the forecast made before observing row ``t``.
        """
        self._check_started()
        X = np.asarray(X, dtype=int).reshape(len(X), -1)
        out = np.empty((X.shape[0], self.n_opponents, self.n_actions))
        for t, row in enumerate(X):
            out[t] = self.predict_proba()
            self.partial_fit(row)
        return out

    def predict(self) -> np.ndarray:
        """Most likely next action of each opponent."""
        return self.predict_proba().argmax(axis=-1)


class ClassicFPModel(_OpponentModel):
    """Empirical-frequency opponent model with additive prior weights."""

    def __init__(self, n_actions=2, n_opponents=1, prior=1.0):
        self.n_actions = n_actions
        self.n_opponents = n_opponents
        self.prior = prior

    def reset(self):
        prior = np.broadcast_to(np.asarray(self.prior, dtype=float), (self.n_opponents, self.n_actions))
        classic_fp_strategy(prior)
        self.weights_ = prior.copy()
        self.t_ = 0
        return self

    def partial_fit(self, actions):
        self._check_started()
        a = _observed_vector(actions, self.n_opponents, self.n_actions)
        self.weights_[np.arange(self.n_opponents), a] += 1.0
        self.t_ += 1
        return self

    def predict_proba(self):
        self._check_started()
        return classic_fp_strategy(self.weights_)


class EKFOpponentModel(_OpponentModel):
    """Extended-Kalman tracker of opponents' softmax propensities.

    Parameters
    ----------
    n_actions, n_opponents : int
    xi : float
        State-noise scale added to the covariance diagonal every round.
    psi : float
        Variance of the Gaussian jitter added to ``xi`` (clipped so the
        state noise stays non-negative).
    zeta : float, "1/t" or callable
        Observation-noise scale as a function of the update count.
    tau : float
        Softmax temperature.
    init : "random", "zero" or array-like
        Prior mean: draws from N(0, I), all zeros, or the given
        ``(n_opponents, n_actions)`` (or broadcastable) array.
    init_cov : float
        Prior covariance is ``init_cov * I``.
    random_state : None, int or Generator
    """

    def __init__(
        self,
        n_actions=2,
        n_opponents=1,
        xi=0.1,
        psi=0.0,
        zeta="1/t",
        tau=1.0,
        init="random",
        init_cov=1.0,
        random_state=None,
    ):
        self.n_actions = n_actions
        self.n_opponents = n_opponents
        self.xi = xi
        self.psi = psi
        self.zeta = zeta
        self.tau = tau
        self.init = init
        self.init_cov = init_cov
        self.random_state = random_state

    def reset(self):
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be > 0, got {self.tau}")
        if self.xi < 0 or self.psi < 0:
            raise ConfigurationError("xi and psi must be non-negative")
        self._schedule = resolve_schedule(self.zeta)
        self.rng_ = check_random_state(self.random_state)
        shape = (self.n_opponents, self.n_actions)
        if isinstance(self.init, str):
            if self.init == "random":
                means = self.rng_.standard_normal(shape)
            elif self.init == "zero":
                means = np.zeros(shape)
            else:
                raise ConfigurationError(f"unknown init {self.init!r}")
        else:
            means = np.array(np.broadcast_to(np.asarray(self.init, dtype=float), shape))
        self.means_ = means
        self.covs_ = np.broadcast_to(self.init_cov * np.eye(self.n_actions), shape + (self.n_actions,)).copy()
        self.t_ = 0
        # Round 0 prediction: the prior is inflated once before any observation.
        self.covs_ = predict_cov_batch(self.covs_, self.xi, self.psi, self.rng_)
        return self

    def partial_fit(self, actions):
        """Correct with this round's observed actions, then predict the next round."""
        self._check_started()
        a = _observed_vector(actions, self.n_opponents, self.n_actions)
        self.t_ += 1
        zeta = float(self._schedule(self.t_))
        self.means_, self.covs_ = update_batch(self.means_, self.covs_, a, zeta, self.tau)
        self.covs_ = predict_cov_batch(self.covs_, self.xi, self.psi, self.rng_)
        return self

    def predict_proba(self):
        self._check_started()
        return softmax_link(self.means_, self.tau)


class PFOpponentModel(_OpponentModel):
    """Sequential-importance-resampling tracker of opponents' propensities.

    Each opponent gets ``n_particles`` propensity vectors drawn from
    N(0, init_scale I). Every round the particles take a N(0, xi I) random-walk
    step, are reweighted by the softmax likelihood of the observed action, and
    are systematically resampled when the effective sample size falls below
    ``resample_threshold * n_particles``.
    """

    def __init__(
        self,
        n_actions=2,
        n_opponents=1,
        n_particles=500,
        xi=0.1,
        tau=1.0,
        resample_threshold=0.5,
        init_scale=1.0,
        random_state=None,
    ):
        self.n_actions = n_actions
        self.n_opponents = n_opponents
        self.n_particles = n_particles
        self.xi = xi
        self.tau = tau
        self.resample_threshold = resample_threshold
        self.init_scale = init_scale
        self.random_state = random_state

    def reset(self):
        if self.n_particles < 1:
            raise ConfigurationError("n_particles must be >= 1")
        if not 0 < self.resample_threshold <= 1:
            raise ConfigurationError("resample_threshold must lie in (0, 1]")
        self.rng_ = check_random_state(self.random_state)
        m, n, k = self.n_opponents, self.n_particles, self.n_actions
        self.particles_ = np.sqrt(self.init_scale) * self.rng_.standard_normal((m, n, k))
        self.weights_ = np.full((m, n), 1.0 / n)
        self.n_degenerate_ = 0
        self.n_resampled_ = 0
        self.t_ = 0
        return self

    def partial_fit(self, actions):
        self._check_started()
        a = _observed_vector(actions, self.n_opponents, self.n_actions)
        m, n, k = self.particles_.shape
        self.particles_ = self.particles_ + np.sqrt(self.xi) * self.rng_.standard_normal((m, n, k))
        lik = np.take_along_axis(softmax_link(self.particles_, self.tau), a[:, None, None], -1)[..., 0]
        w = self.weights_ * lik
        total = w.sum(axis=1, keepdims=True)
        dead = total[:, 0] <= 0
        if np.any(dead):
            self.n_degenerate_ += int(dead.sum())
            w[dead] = 1.0
            total[dead] = n
        w = w / total
        ess = 1.0 / np.square(w).sum(axis=1)
        for j in np.flatnonzero(ess < self.resample_threshold * n):
            idx = systematic_resample(w[j], self.rng_)
            self.particles_[j] = self.particles_[j, idx]
            w[j] = 1.0 / n
            self.n_resampled_ += 1
        self.weights_ = w
        self.t_ += 1
        return self

    def predict_proba(self):
        self._check_started()
        return np.einsum("mn,mnk->mk", self.weights_, softmax_link(self.particles_, self.tau))


def systematic_resample(weights, rng) -> np.ndarray:
    """Indices drawn by systematic resampling with a single uniform offset."""
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return np.searchsorted(cum, positions, side="right")


# --------------------------------------------------------------------------
# agent learners


class _Learner(BaseEstimator):
    """Shared plumbing: binding to a game, decision rule, round bookkeeping."""

    kind = None

    def fit(self, game: Game, player: int = 0):
        """Bind to ``game`` as ``player`` and reset beliefs to the prior."""
        if not isinstance(game, Game):
            raise ConfigurationError("fit expects a Game")
        if not 0 <= player < game.num_players:
            raise ConfigurationError(f"player {player} outside [0, {game.num_players})")
        if self.tie_break not in TIE_BREAK_RULES:
            raise ConfigurationError(f"unknown tie_break {self.tie_break!r}")
        self.game_ = game
        self.player_ = int(player)
        self.rng_ = check_random_state(self.random_state)
        self.opponents_ = [j for j in range(game.num_players) if j != player]
        self.t_ = 0
        self.last_action_ = None
        self._start()
        return self

    def _start(self):
        pass

    def set_game(self, game: Game):
        """Switch to another game with the same action counts, keeping learned beliefs."""
        self._check_started()
        if game.action_counts != self.game_.action_counts:
            raise ConfigurationError("set_game needs a game with identical action counts")
        self.game_ = game
        self._on_new_game()
        return self

    def _on_new_game(self):
        pass

    def _check_started(self):
        if not hasattr(self, "game_"):
            raise NotStartedError(f"{type(self).__name__} is not fitted; call fit(game, player)")

    def partial_fit(self, joint):
        """Absorb the previous round's joint action (own entry included)."""
        self._check_started()
        joint = np.asarray(joint, dtype=int)
        if joint.shape != (self.game_.num_players,):
            raise ConfigurationError(f"joint action must have {self.game_.num_players} entries")
        self._observe(joint)
        self.last_action_ = int(joint[self.player_])
        self.t_ += 1
        return self

    def _observe(self, joint):
        pass

    def predict_proba(self):
        """Forecast mixed strategy of every player; the own entry is ``None``."""
        raise NotImplementedError

    def expected_rewards(self) -> np.ndarray:
        return self.game_.expected_rewards(self.player_, self.predict_proba())

    def predict(self) -> int:
        """Action chosen for the current round."""
        self._check_started()
        values = self.expected_rewards()
        if getattr(self, "decision", "best_response") == "smooth":
            p = softmax_link(values, self.smooth_temperature)
            return int(self.rng_.choice(p.size, p=p))
        return select_maximizer(values, self.tie_break, self.last_action_, self.rng_)

    def step(self, joint=None) -> int:
        """``partial_fit`` (when ``joint`` is given) followed by ``predict``."""
        if joint is not None:
            self.partial_fit(joint)
        return self.predict()


class _ModelLearner(_Learner):
    """Learner holding one opponent model per group of equal action counts."""

    def _make_model(self, n_actions, n_opponents, opponents):
        raise NotImplementedError

    def _start(self):
        groups = {}
        for j in self.opponents_:
            groups.setdefault(self.game_.action_counts[j], []).append(j)
        self.groups_ = []
        for k, members in sorted(groups.items()):
            model = self._make_model(k, len(members), members)
            model.reset()
            self.groups_.append((np.array(members), model))

    def _observe(self, joint):
        for members, model in self.groups_:
            model.partial_fit(joint[members])

    def predict_proba(self):
        profile = [None] * self.game_.num_players
        for members, model in self.groups_:
            probs = model.predict_proba()
            for j, p in zip(members, probs):
                profile[j] = p
        return profile


class ClassicFictitiousPlay(_ModelLearner):
    """Best response to opponents' smoothed empirical action frequencies."""

    kind = "classic_fp"

    def __init__(self, prior=1.0, tie_break="stay", decision="best_response", smooth_temperature=0.1, random_state=None):
        self.prior = prior
        self.tie_break = tie_break
        self.decision = decision
        self.smooth_temperature = smooth_temperature
        self.random_state = random_state

    def _make_model(self, n_actions, n_opponents, opponents):
        return ClassicFPModel(n_actions, n_opponents, prior=self.prior)


class EKFFictitiousPlay(_ModelLearner):
    """Fictitious play with extended-Kalman tracking of opponent propensities.

    Parameters
    ----------
    xi : float, default 0.1
        State-noise scale.
    psi : float, default 0.05
        Variance of the Gaussian jitter on the state noise. The jitter makes
        agents' filters differ, which is what stops two agents from switching
        actions in lockstep forever in coordination games.
    zeta : float, "1/t" or callable, default "1/t"
        Observation-noise schedule.
    tau : float, default 1.0
        Softmax temperature linking propensities to strategies.
    init : "random", "zero" or sequence
        Prior propensity means. ``"random"`` draws N(0, I) per opponent. A
        sequence gives one mean vector per player (the own entry is ignored).
    tie_break : {"stay", "lowest", "random"}
    decision : {"best_response", "smooth"}
    smooth_temperature : float
        Temperature of the smooth best response when ``decision="smooth"``.
    random_state : None, int or Generator
    """

    kind = "ekf_fp"

    def __init__(
        self,
        xi=0.1,
        psi=0.05,
        zeta="1/t",
        tau=1.0,
        init="random",
        tie_break="stay",
        decision="best_response",
        smooth_temperature=0.1,
        random_state=None,
    ):
        self.xi = xi
        self.psi = psi
        self.zeta = zeta
        self.tau = tau
        self.init = init
        self.tie_break = tie_break
        self.decision = decision
        self.smooth_temperature = smooth_temperature
        self.random_state = random_state

    def _make_model(self, n_actions, n_opponents, opponents):
        init = self.init
        if not isinstance(init, str):
            init = np.array([np.asarray(self.init[j], dtype=float) for j in opponents])
        return EKFOpponentModel(
            n_actions, n_opponents, xi=self.xi, psi=self.psi, zeta=self.zeta,
            tau=self.tau, init=init, random_state=self.rng_,
        )

    @property
    def beliefs_(self):
        """Per-opponent ``(mean, cov)`` of the current predicted belief."""
        out = {}
        for members, model in self.groups_:
            for r, j in enumerate(members):
                out[int(j)] = (model.means_[r].copy(), model.covs_[r].copy())
        return out


class ParticleFictitiousPlay(_ModelLearner):
    """Fictitious play with particle-filter tracking of opponent propensities."""

    kind = "pf_fp"

    def __init__(
        self,
        n_particles=500,
        xi=0.1,
        tau=1.0,
        resample_threshold=0.5,
        tie_break="stay",
        decision="best_response",
        smooth_temperature=0.1,
        random_state=None,
    ):
        self.n_particles = n_particles
        self.xi = xi
        self.tau = tau
        self.resample_threshold = resample_threshold
        self.tie_break = tie_break
        self.decision = decision
        self.smooth_temperature = smooth_temperature
        self.random_state = random_state

    def _make_model(self, n_actions, n_opponents, opponents):
        return PFOpponentModel(
            n_actions, n_opponents, n_particles=self.n_particles, xi=self.xi, tau=self.tau,
            resample_threshold=self.resample_threshold, random_state=self.rng_,
        )

    @property
    def n_degenerate_(self):
        return sum(model.n_degenerate_ for _, model in self.groups_)


class GreedyLearner(_Learner):
    """Best response to uniformly random opponents; ignores all observations."""

    kind = "greedy"

    def __init__(self, tie_break="stay", random_state=None):
        self.tie_break = tie_break
        self.random_state = random_state

    def _on_new_game(self):
        self._start()

    def _start(self):
        g = self.game_
        profile = [None if j == self.player_ else np.full(k, 1.0 / k) for j, k in enumerate(g.action_counts)]
        self._values = g.expected_rewards(self.player_, profile)

    def predict_proba(self):
        return [None if j == self.player_ else np.full(k, 1.0 / k) for j, k in enumerate(self.game_.action_counts)]

    def expected_rewards(self):
        return self._values


class RandomLearner(_Learner):
    """Uniformly random action every round."""

    kind = "random"
    tie_break = "lowest"

    def __init__(self, random_state=None):
        self.random_state = random_state

    def predict_proba(self):
        return [None if j == self.player_ else np.full(k, 1.0 / k) for j, k in enumerate(self.game_.action_counts)]

    def predict(self):
        self._check_started()
        return int(self.rng_.integers(self.game_.action_counts[self.player_]))


_REGISTRY = {
    "classic_fp": ClassicFictitiousPlay,
    "ekf_fp": EKFFictitiousPlay,
    "pf_fp": ParticleFictitiousPlay,
    "greedy": GreedyLearner,
    "random": RandomLearner,
}


def make_learner(kind: str, **params) -> _Learner:
    """Instantiate a learner by its kind tag."""
    try:
        cls = _REGISTRY[kind]
    except KeyError:
        raise ConfigurationError(f"unknown learner kind {kind!r}; expected one of {LEARNER_KINDS}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {kind}: {exc}") from None
