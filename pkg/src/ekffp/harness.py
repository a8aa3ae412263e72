"""Seeded replication engine, metrics, parameter sweep and CSV output."""

from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError, NumericError
from .filters import predict_cov_batch, resolve_schedule, softmax_link, update_batch
from .game import is_pure_nash
from .learners import LEARNER_KINDS, ClassicFPModel, PFOpponentModel, make_learner
from .scenarios.tracking import TrackingSpec, tracking_schedule

log = logging.getLogger(__name__)

FLOAT_FMT = "{:.12g}"
TRACES_COLUMNS = ("replication", "iteration", "agent", "action", "reward")
METRICS_COLUMNS = ("metric", "scenario", "learner", "value")
SWEEP_COLUMNS = ("xi", "zeta", "mse")


def stream(seed: int, replication: int, slot: int) -> np.random.Generator:
    """Independent generator for one (replication, slot) pair.

    Slot 0 draws the scenario instance, slot ``1 + i`` drives agent ``i``.
    Streams come from ``SeedSequence(seed, spawn_key=(replication, slot))`` so
    they do not depend on execution order or worker count.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(replication), int(slot))))


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise ConfigurationError(f"unknown learner kind {self.kind!r}; expected one of {LEARNER_KINDS}")

    def build(self, rng):
        return make_learner(self.kind, **{**self.params, "random_state": rng})


@dataclass(frozen=True)
class RunConfig:
    """One experiment: a scenario, the learners of its agents and the replication plan.

    ``initial_joint`` forces the round-0 joint action (e.g. a miscoordinated
    start); learners then first observe it in round 1. ``carry_beliefs``
    keeps learners' beliefs from one stage game to the next in multi-stage
    scenarios instead of starting each stage from the prior.
    """

    scenario: object
    learner: LearnerSpec
    iterations: int = 50
    replications: int = 100
    seed: int = 0
    agents: dict = field(default_factory=dict)
    initial_joint: Optional[tuple] = None
    carry_beliefs: bool = False
    record_strategies: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")

    def learner_for(self, agent: int) -> LearnerSpec:
        return self.agents.get(agent, self.learner)

    @property
    def label(self) -> str:
        kinds = {self.learner.kind} | {s.kind for s in self.agents.values()}
        return "+".join(sorted(kinds))


@dataclass
class ReplicationTrace:
    """Everything recorded in one replication; rows are global rounds across stages."""

    replication: int
    joint: np.ndarray
    rewards: np.ndarray
    global_reward: np.ndarray
    score: np.ndarray
    step_seconds: np.ndarray
    stage: np.ndarray
    iteration: np.ndarray
    converged: np.ndarray
    consensus_iteration: np.ndarray
    success: Optional[np.ndarray] = None
    strategies: Optional[list] = None
    failure: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.failure is not None

    @property
    def num_stages(self) -> int:
        return len(self.converged)

    def stage_rows(self, stage: int) -> np.ndarray:
        return np.flatnonzero(self.stage == stage)

    def final_joint(self, stage: int = -1) -> tuple:
        rows = self.stage_rows(range(self.num_stages)[stage])
        return tuple(int(a) for a in self.joint[rows[-1]])


def consensus_iteration(joints: np.ndarray) -> int:
    """1-based round after which the joint action never changes again."""
    changed = np.flatnonzero(np.any(joints[1:] != joints[:-1], axis=1))
    return int(changed[-1]) + 2 if changed.size else 1


def run_replication(config: RunConfig, replication: int) -> ReplicationTrace:
    """Play every stage of one scenario draw for ``config.iterations`` synchronous rounds."""
    inst = config.scenario.instance(stream(config.seed, replication, 0))
    n = inst.num_players
    if config.initial_joint is not None and len(config.initial_joint) != n:
        raise ConfigurationError(f"initial_joint needs {n} actions")
    stages = inst.stages
    T = config.iterations
    total = T * len(stages)

    joint = np.zeros((total, n), dtype=int)
    rewards = np.zeros((total, n))
    global_reward = np.zeros(total)
    score = np.zeros(total)
    seconds = np.zeros((total, n))
    stage_col = np.repeat(np.arange(len(stages)), T)
    iter_col = np.tile(np.arange(T), len(stages))
    converged = np.zeros(len(stages), dtype=bool)
    consensus = np.zeros(len(stages), dtype=int)
    success = np.zeros(len(stages), dtype=bool) if inst.success is not None else None
    strategies = [] if config.record_strategies else None

    rngs = [stream(config.seed, replication, 1 + i) for i in range(n)]
    learners = [config.learner_for(i).build(rngs[i]) for i in range(n)]
    failure = None
    row = 0
    try:
        for k, game in enumerate(stages):
            for i, learner in enumerate(learners):
                if k > 0 and config.carry_beliefs:
                    learner.set_game(game)
                else:
                    learner.fit(game, i)
            prev = None
            for r in range(T):
                actions = np.empty(n, dtype=int)
                for i, learner in enumerate(learners):
                    t0 = time.perf_counter()
                    if prev is not None:
                        learner.partial_fit(prev)
                    a = learner.predict()
                    seconds[row, i] = time.perf_counter() - t0
                    actions[i] = a
                if r == 0 and config.initial_joint is not None:
                    actions[:] = config.initial_joint
                joint[row] = actions
                rewards[row] = game.rewards(actions)
                global_reward[row] = game.global_reward(actions)
                score[row] = inst.score(k, actions)
                if strategies is not None:
                    strategies.append([learner.predict_proba() for learner in learners])
                prev = actions
                row += 1
            rows = slice(row - T, row)
            final = tuple(int(a) for a in joint[row - 1])
            converged[k] = is_pure_nash(game, final)
            consensus[k] = consensus_iteration(joint[rows])
            if success is not None:
                success[k] = inst.success(k, final)
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        failure = f"{type(exc).__name__}: {exc}"
        log.warning("replication %d failed: %s", replication, failure)

    return ReplicationTrace(
        replication, joint, rewards, global_reward, score, seconds, stage_col, iter_col,
        converged, consensus, success, strategies, failure,
    )


def run_experiment(config: RunConfig, jobs: int = 1) -> list:
    """All replications of ``config``, ordered by replication index."""
    if config.initial_joint is not None:
        config = RunConfig(**{**config.__dict__, "initial_joint": tuple(int(a) for a in config.initial_joint)})
    reps = range(config.replications)
    if jobs <= 1:
        return [run_replication(config, r) for r in reps]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_replication, [config] * len(reps), reps))


@dataclass
class ConvergenceStats:
    percent_converged: float
    mean_iterations_to_consensus: float
    mean_reward_curve: np.ndarray
    stage_percent_converged: np.ndarray
    stage_mean_consensus: np.ndarray
    percent_success: Optional[float]
    final_score: float
    n_replications: int
    n_failed: int


def convergence_stats(traces: Sequence[ReplicationTrace]) -> ConvergenceStats:
    """Aggregate convergence metrics over replications of one config.

    A replication converges at a stage when the stage's final joint action is
    a pure Nash equilibrium; it succeeds (multi-stage scenarios) when every
    stage ends in a successful joint action. The reward curve averages the
    per-round score of stage 0.
    """
    if not traces:
        raise ConfigurationError("no traces to aggregate")
    ok = [t for t in traces if not t.failed]
    n_failed = len(traces) - len(ok)
    if not ok:
        raise ConfigurationError("every replication failed")
    conv = np.stack([t.converged for t in ok])
    cons = np.stack([t.consensus_iteration for t in ok])
    curve = np.mean([t.score[t.stage == 0] for t in ok], axis=0)
    succ = None
    if ok[0].success is not None:
        succ = 100.0 * float(np.mean([t.success.all() for t in ok]))
    final = float(np.mean([t.score[t.stage_rows(t.num_stages - 1)[-1]] for t in ok]))
    return ConvergenceStats(
        percent_converged=100.0 * float(conv.all(axis=1).mean()),
        mean_iterations_to_consensus=float(cons.mean()),
        mean_reward_curve=curve,
        stage_percent_converged=100.0 * conv.mean(axis=0),
        stage_mean_consensus=cons.mean(axis=0),
        percent_success=succ,
        final_score=final,
        n_replications=len(ok),
        n_failed=n_failed,
    )


def timing_report(traces: Sequence[ReplicationTrace]) -> np.ndarray:
    """Mean learner-step seconds spent by each agent in one replication."""
    ok = [t for t in traces if not t.failed]
    if not ok:
        raise ConfigurationError("no traces with timing information")
    return np.mean([t.step_seconds.sum(axis=0) for t in ok], axis=0)


# --------------------------------------------------------------------------
# opponent tracking


def tracking_actions(spec: TrackingSpec, seed: int) -> np.ndarray:
    """Opponent actions for t = 1..horizon sampled from the tracking schedule."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(TRACKING_KIND_KEY[spec.kind],)))
    p0 = tracking_schedule(spec)[:, 0]
    return (rng.random(spec.horizon) >= p0).astype(int)


TRACKING_KIND_KEY = {"sinusoid": 0, "abrupt": 1}


def ekf_tracking_forecasts(actions, xi, zeta, tau: float = 1.0, psi: float = 0.0, rng=None) -> np.ndarray:
    """One-step-ahead EKF forecasts of a 2-action opponent for many settings at once.

    ``xi`` is a vector of state-noise scales and ``zeta`` a same-length list of
    observation-noise schedules; returns ``(horizon, settings, 2)``. The prior
    mean is zero and the prior covariance the identity.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    schedules = [resolve_schedule(z) for z in (zeta if isinstance(zeta, (list, tuple)) else [zeta] * xi.size)]
    if len(schedules) != xi.size:
        raise ConfigurationError("xi and zeta must have the same length")
    m = xi.size
    means = np.zeros((m, 2))
    covs = predict_cov_batch(np.broadcast_to(np.eye(2), (m, 2, 2)).copy(), xi, psi, rng)
    out = np.empty((len(actions), m, 2))
    for t, a in enumerate(actions, start=1):
        out[t - 1] = softmax_link(means, tau)
        z = np.array([s(t) for s in schedules])
        means, covs = update_batch(means, covs, np.full(m, a), z, tau)
        covs = predict_cov_batch(covs, xi, psi, rng)
    return out


def _mse(forecast: np.ndarray, truth: np.ndarray) -> np.ndarray:
    # forecast (T, m, 2), truth (T, 2) -> (m,)
    return np.mean(np.square(forecast - truth[:, None, :]), axis=(0, 2))


def tracking_mse(learner_kind: str, noise=None, spec: TrackingSpec = TrackingSpec(), seed: int = 0, **params) -> float:
    """Mean squared error between forecast and true opponent strategy over the horizon.

    ``learner_kind`` is ``"ekf_fp"``, ``"pf_fp"``, ``"classic_fp"`` or
    ``"oracle"`` (forecasts the true strategy; MSE 0). ``noise`` is a
    :class:`~ekffp.filters.NoiseConfig` for the filters.
    """
    from .filters import NoiseConfig

    noise = noise or NoiseConfig()
    truth = tracking_schedule(spec)
    actions = tracking_actions(spec, seed)
    if learner_kind == "oracle":
        forecast = truth[:, None, :]
    elif learner_kind == "ekf_fp":
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(2,)))
        forecast = ekf_tracking_forecasts(actions, [noise.xi], [noise.zeta], noise.tau, noise.psi, rng)
    elif learner_kind == "pf_fp":
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(2,)))
        model = PFOpponentModel(2, 1, xi=noise.xi, tau=noise.tau, random_state=rng, **params).fit()
        forecast = model.forecast(actions[:, None])
    elif learner_kind == "classic_fp":
        forecast = ClassicFPModel(2, 1, **params).fit().forecast(actions[:, None])
    else:
        raise ConfigurationError(f"tracking_mse does not support {learner_kind!r}")
    return float(_mse(forecast, truth)[0])


@dataclass
class SweepResult:
    xi: list
    zeta: list
    mse: np.ndarray  # (len(xi), len(zeta))

    @property
    def argmin(self) -> tuple:
        i, j = np.unravel_index(int(np.argmin(self.mse)), self.mse.shape)
        return self.xi[i], self.zeta[j]

    def rows(self):
        for i, x in enumerate(self.xi):
            for j, z in enumerate(self.zeta):
                yield x, z, float(self.mse[i, j])


def parameter_sweep(
    xi_values: Sequence[float],
    zeta_values: Sequence,
    seeds: Sequence[int] = (0,),
    specs: Sequence[TrackingSpec] = (TrackingSpec("sinusoid"), TrackingSpec("abrupt")),
    tau: float = 1.0,
) -> SweepResult:
    """EKF tracking MSE on every (xi, zeta) grid cell, averaged over specs and seeds.

    All cells see the same sampled opponent actions for a given (spec, seed).
    """
    xi_values = [float(x) for x in xi_values]
    zeta_values = list(zeta_values)
    if not xi_values or not zeta_values:
        raise ConfigurationError("sweep grid is empty")
    if any(not x > 0 for x in xi_values):
        raise ConfigurationError("xi grid values must be > 0")
    for z in zeta_values:
        resolve_schedule(z)
    cells_xi = [x for x in xi_values for _ in zeta_values]
    cells_zeta = [z for _ in xi_values for z in zeta_values]
    total = np.zeros(len(cells_xi))
    for spec in specs:
        truth = tracking_schedule(spec)
        for seed in seeds:
            forecast = ekf_tracking_forecasts(tracking_actions(spec, seed), cells_xi, cells_zeta, tau)
            total += _mse(forecast, truth)
    mse = (total / (len(specs) * len(seeds))).reshape(len(xi_values), len(zeta_values))
    return SweepResult(xi_values, zeta_values, mse)


# --------------------------------------------------------------------------
# CSV output


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT.format(float(x))
    return str(x)


def write_csv_atomic(path, header, rows) -> None:
    """Write a CSV via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_rows(traces: Sequence[ReplicationTrace]):
    for t in traces:
        for row in range(len(t.joint)):
            for agent in range(t.joint.shape[1]):
                yield t.replication, row, agent, int(t.joint[row, agent]), float(t.rewards[row, agent])


def metric_rows(stats: ConvergenceStats, scenario: str, learner: str, timing=None):
    yield "percent_converged", scenario, learner, stats.percent_converged
    yield "mean_iterations_to_consensus", scenario, learner, stats.mean_iterations_to_consensus
    yield "final_score", scenario, learner, stats.final_score
    if stats.percent_success is not None:
        yield "percent_success", scenario, learner, stats.percent_success
    for k, v in enumerate(stats.stage_mean_consensus):
        if len(stats.stage_mean_consensus) > 1:
            yield f"stage{k + 1}_mean_iterations_to_consensus", scenario, learner, float(v)
    for r, v in enumerate(stats.mean_reward_curve):
        yield f"mean_reward_iter{r + 1}", scenario, learner, float(v)
    yield "failed_replications", scenario, learner, stats.n_failed
    if timing is not None:
        yield "mean_agent_seconds", scenario, learner, float(np.mean(timing))
