"""Swap-regret reductions: TreeSwap over any full-information learner, and its bandit variant."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .core import (
    HorizonExhausted,
    InvalidInput,
    Transcript,
    as_reward_vector,
    base_m_digits,
    ceil_log,
    swap_regret,
)
from .learners import MWU, Exp3Multi, Learner


def choose_parameters(n_actions: int, eps: float) -> Tuple[int, int]:
    """Branching ``M = ceil(ln N / eps^2)`` (at least 2) and depth ``d = ceil(1 / eps)``."""
    if not 0 < eps < 1:
        raise InvalidInput("eps must lie in (0, 1)")
    M = max(2, math.ceil(math.log(max(n_actions, 2)) / eps**2))
    d = math.ceil(1 / eps)
    return M, d


def resolve_depth(horizon: int, M: int, d: Optional[int]) -> int:
    if M < 2:
        raise InvalidInput("branching M must be >= 2")
    if horizon < 1:
        raise InvalidInput("horizon must be >= 1")
    if d is None:
        return ceil_log(horizon, M)
    if d < 1:
        raise InvalidInput("depth d must be >= 1")
    if horizon > M**d:
        raise InvalidInput(f"horizon {horizon} exceeds M^d = {M**d}")
    if horizon < M ** (d - 1):
        warnings.warn(f"horizon {horizon} < M^(d-1); the top levels never update", stacklevel=3)
    return d


# ---------------------------------------------------------------------------
# instrumentation


@dataclass
class InstanceRecord:
    uid: int
    level: int
    prefix: Tuple[int, ...]
    start: int  # first round (1-based) covered by the instance
    actions: List[np.ndarray] = field(default_factory=list)
    updates: List[np.ndarray] = field(default_factory=list)


class Recorder:
    """Collects instance lifecycle events emitted by :class:`TreeSwap` and :class:`BanditTreeSwap`."""

    def __init__(self):
        self.instances: Dict[int, InstanceRecord] = {}

    def instance_created(self, uid: int, level: int, prefix: Tuple[int, ...], t: int) -> None:
        self.instances[uid] = InstanceRecord(uid, level, prefix, t)

    def instance_updated(self, uid: int, level: int, avg_reward: np.ndarray, t: int) -> None:
        self.instances[uid].updates.append(np.array(avg_reward, copy=True))

    def action_emitted(self, uid: int, level: int, action: np.ndarray, t: int) -> None:
        self.instances[uid].actions.append(np.array(action, copy=True))

    def counts(self, level: int) -> Dict[str, int]:
        recs = [r for r in self.instances.values() if r.level == level]
        return {
            "created": len(recs),
            "updated": sum(len(r.updates) for r in recs),
            "acted": sum(len(r.actions) for r in recs),
        }


# ---------------------------------------------------------------------------
# full-information reduction


@dataclass
class _Live:
    uid: int
    learner: object
    action: np.ndarray
    snapshot: np.ndarray


class TreeSwap:
    """Swap-regret learner built from copies of an external-regret learner.

    Instances sit on an ``M``-ary tree of depth ``d``; round ``t`` plays the
    uniform mixture of the ``d`` instances on the path addressed by the
    base-``M`` digits of ``t - 1``. The level-``h`` instance is fed the
    average reward of each completed block of ``M^(d-h)`` rounds. Only the
    ``d`` on-path instances are kept alive, and block averages come from a
    running reward total minus a per-instance snapshot, so a round costs
    ``O(N)`` amortized.

    ``learner_factory(level)`` must return a fresh learner with horizon ``M``.
    """

    def __init__(
        self,
        n_actions: int,
        horizon: int,
        M: int,
        d: Optional[int] = None,
        learner_factory: Optional[Callable[[int], Learner]] = None,
        recorder: Optional[Recorder] = None,
    ):
        self.n_actions = n_actions
        self.horizon = horizon
        self.M = M
        self.d = resolve_depth(horizon, M, d)
        if learner_factory is None:
            learner_factory = lambda level: MWU(n_actions, M)  # noqa: E731
        self.learner_factory = learner_factory
        self.recorder = recorder
        self.block = [M ** (self.d - h) for h in range(1, self.d + 1)]
        self.cum_reward = np.zeros(n_actions)
        self.live: List[Optional[_Live]] = [None] * self.d
        self.mixture_sum = np.zeros(n_actions)
        self.t = 0
        self._next_uid = 0
        self.instances_created = [0] * self.d

    def _spawn(self, level: int, digits: Tuple[int, ...]) -> _Live:
        uid = self._next_uid
        self._next_uid += 1
        self.instances_created[level - 1] += 1
        if self.recorder is not None:
            self.recorder.instance_created(uid, level, digits[: level - 1], self.t + 1)
        return _Live(uid, self.learner_factory(level), None, self.cum_reward.copy())

    def round(self, f_prev=None) -> np.ndarray:
        """Fold in the previous round's reward and return this round's mixed action."""
        if self.t >= self.horizon:
            raise HorizonExhausted("horizon exhausted")
        if self.t > 0:
            if f_prev is None:
                raise InvalidInput("reward for the previous round is required")
            self.cum_reward += as_reward_vector(f_prev, self.n_actions)
        elif f_prev is not None:
            raise InvalidInput("no reward can precede the first round")

        digits = base_m_digits(self.t, self.M, self.d)
        upper_changed = False
        for h in range(1, self.d + 1):
            if h < self.d and any(digits[h:]):
                continue
            node = self.live[h - 1]
            if digits[h - 1] > 0:
                avg = (self.cum_reward - node.snapshot) / self.block[h - 1]
                node.learner.update(avg)
                node.snapshot = self.cum_reward.copy()
                if self.recorder is not None:
                    self.recorder.instance_updated(node.uid, h, avg, self.t + 1)
            else:
                node = self.live[h - 1] = self._spawn(h, digits)
            old = node.action
            node.action = np.asarray(node.learner.act(), dtype=np.float64)
            if self.recorder is not None:
                self.recorder.action_emitted(node.uid, h, node.action, self.t + 1)
            if h < self.d or old is None:
                upper_changed = True
            else:
                self.mixture_sum += node.action - old

        if upper_changed:
            self.mixture_sum = np.sum([n.action for n in self.live], axis=0)
        self.t += 1
        return self.mixture_sum / self.d

    # Learner-protocol adapters, so a TreeSwap can itself be driven by act/update.
    def act(self) -> np.ndarray:
        x = self.round(self._pending)
        self._pending = None
        return x

    def update(self, f) -> None:
        self._pending = f

    _pending = None


def run_full_information(learner, adversary, horizon: int) -> Transcript:
    """Drive ``learner`` (``act``/``update``) against ``adversary.respond(x)`` for ``horizon`` rounds."""
    plays, rewards = [], []
    for _ in range(horizon):
        x = learner.act()
        f = adversary.respond(x)
        learner.update(f)
        plays.append(x)
        rewards.append(f)
    return Transcript(np.array(plays), np.array(rewards), reward_range=getattr(adversary, "reward_range", (0.0, 1.0)))


def verify_bound(recorder: Optional[Recorder], transcript: Transcript, M: int, d: int) -> Tuple[float, float]:
    """Return ``(swap_regret, max instance external regret + 3/d)`` for a finished TreeSwap run.

    Each instance's external regret is recomputed from the transcript: its
    ``k``-th action is scored against the average reward of its ``k``-th
    block, normalized by ``M`` blocks. When the horizon is ragged
    (``T < M^d``) the maximum is clamped at zero, since the partially
    covered instances are absorbed into the ``3/d`` term.
    """
    if recorder is None:
        raise InvalidInput("instrumentation disabled: pass a Recorder to TreeSwap")
    T = transcript.horizon
    prefix = np.vstack([np.zeros(transcript.n_actions), np.cumsum(transcript.rewards, axis=0)])
    worst = -math.inf
    for rec in recorder.instances.values():
        width = M ** (d - rec.level)
        avgs, played = [], 0.0
        for k, x in enumerate(rec.actions):
            lo = rec.start - 1 + k * width
            hi = min(lo + width, T)
            avg = (prefix[hi] - prefix[lo]) / width
            avgs.append(avg)
            played += float(avg @ x)
        if not avgs:
            continue
        best = float(np.sum(avgs, axis=0).max())
        worst = max(worst, (best - played) / M)
    if T < M**d:
        worst = max(worst, 0.0)
    lhs = swap_regret(transcript).swap_regret
    return lhs, worst + 3.0 / d


# ---------------------------------------------------------------------------
# bandit reduction


@dataclass
class _BanditLive:
    uid: int
    learner: Exp3Multi


class BanditTreeSwap:
    """TreeSwap for bandit feedback, with one :class:`Exp3Multi` per tree node.

    Tree addresses advance once per block of ``N`` steps. Each step samples a
    level uniformly, plays an action from that level's current distribution,
    and stores the observed reward in that instance's buffer; buffered samples
    are consumed at the instance's next block boundary.

    ``gamma_variant`` selects the implicit-exploration bias ``1 / (K * M^(1/6))``
    (``"M"``, default) or ``1 / (K * T^(1/6))`` (``"T"``). Horizons that are
    not a multiple of ``N`` are padded up; callers feed zero reward there.
    """

    def __init__(
        self,
        n_actions: int,
        horizon: int,
        M: int,
        d: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
        gamma_variant: str = "M",
        eta: Optional[float] = None,
        recorder: Optional[Recorder] = None,
    ):
        if gamma_variant not in ("M", "T"):
            raise InvalidInput("gamma_variant must be 'M' or 'T'")
        self.n_actions = N = n_actions
        self.horizon = horizon
        self.padded_horizon = -(-horizon // N) * N
        self.M = M
        self.d = resolve_depth(self.padded_horizon // N, M, d)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.eta = M**-0.5 if eta is None else float(eta)
        self.K = [max(1, round(2 * N * M ** (self.d - h) / self.d)) for h in range(1, self.d + 1)]
        base = M if gamma_variant == "M" else self.padded_horizon
        self.gamma = [1.0 / (k * base ** (1 / 6)) for k in self.K]
        self.recorder = recorder
        self.live: List[Optional[_BanditLive]] = [None] * self.d
        self.t = 0
        self.last_level: Optional[int] = None
        self.last_action: Optional[int] = None
        self._next_uid = 0
        self.update_log: List[Tuple[int, int]] = []  # (round, level)

    def _spawn(self, level: int, digits) -> _BanditLive:
        uid = self._next_uid
        self._next_uid += 1
        if self.recorder is not None:
            self.recorder.instance_created(uid, level, tuple(digits[: level - 1]), self.t + 1)
        learner = Exp3Multi(self.n_actions, self.M, self.eta, self.gamma[level - 1], self.K[level - 1])
        return _BanditLive(uid, learner)

    def distributions(self) -> List[np.ndarray]:
        return [node.learner.distribution for node in self.live]

    def round(self, u_prev_at_a: Optional[float] = None) -> int:
        """Store the reward of the previous action, then sample this round's action."""
        if self.t >= self.padded_horizon:
            raise HorizonExhausted("horizon exhausted")
        if self.t > 0:
            if u_prev_at_a is None:
                raise InvalidInput("reward for the previous round is required")
            self.live[self.last_level - 1].learner.store(self.last_action, u_prev_at_a)
        elif u_prev_at_a is not None:
            raise InvalidInput("no reward can precede the first round")

        if self.t % self.n_actions == 0:
            digits = base_m_digits(self.t // self.n_actions, self.M, self.d)
            for h in range(1, self.d + 1):
                if h < self.d and any(digits[h:]):
                    continue
                if digits[h - 1] > 0:
                    node = self.live[h - 1]
                    node.learner.update()
                    self.update_log.append((self.t + 1, h))
                    if self.recorder is not None:
                        self.recorder.instance_updated(node.uid, h, node.learner.last_estimate, self.t + 1)
                else:
                    node = self.live[h - 1] = self._spawn(h, digits)
                if self.recorder is not None:
                    self.recorder.action_emitted(node.uid, h, node.learner.distribution, self.t + 1)

        level = int(self.rng.integers(1, self.d + 1))
        p = self.live[level - 1].learner.distribution
        a = int(self.rng.choice(self.n_actions, p=p))
        self.last_level, self.last_action = level, a
        self.t += 1
        return a


def run_bandit(learner: BanditTreeSwap, schedule: np.ndarray) -> Transcript:
    """Play ``learner`` against a fixed ``(T, N)`` reward schedule (oblivious adversary)."""
    schedule = np.asarray(schedule, dtype=np.float64)
    T, N = schedule.shape
    actions = np.empty(T, dtype=np.int64)
    u = None
    for t in range(learner.padded_horizon):
        a = learner.round(u)
        if t < T:
            actions[t] = a
            u = schedule[t, a]
        else:
            u = 0.0
    return Transcript.from_actions(actions, schedule, N)
