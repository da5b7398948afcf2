"""External-regret learners: multiplicative weights, its sampled variant, and Exp3Multi."""
from __future__ import annotations

import math
from typing import List, Optional, Protocol, Tuple

import numpy as np

from .core import HorizonExhausted, InvalidInput, as_reward_vector


class Learner(Protocol):
    """Full-information learner: ``act()`` then ``update(f)``, at most ``horizon`` times."""

    n_actions: int

    def act(self) -> np.ndarray: ...

    def update(self, f: np.ndarray) -> None: ...


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max()
    w = np.exp(z)
    return w / w.sum()


def default_eta(n_actions: int, horizon: int) -> float:
    return math.sqrt(math.log(n_actions) / horizon)


class MWU:
    """Multiplicative weights over ``n_actions`` experts with rewards in [0, 1].

    Plays ``softmax(eta * cumulative_reward)``; ``eta`` defaults to
    ``sqrt(ln N / horizon)``.
    """

    def __init__(self, n_actions: int, horizon: int, eta: Optional[float] = None):
        if n_actions < 1 or horizon < 1:
            raise InvalidInput("MWU needs n_actions >= 1 and horizon >= 1")
        self.n_actions = n_actions
        self.horizon = horizon
        self.eta = default_eta(n_actions, horizon) if eta is None else float(eta)
        if self.eta < 0:
            raise InvalidInput("eta must be nonnegative")
        self.cumulative_reward = np.zeros(n_actions)
        self.n_updates = 0

    def act(self) -> np.ndarray:
        return softmax(self.eta * self.cumulative_reward)

    def update(self, f) -> None:
        if self.n_updates >= self.horizon:
            raise HorizonExhausted("horizon exhausted")
        f = as_reward_vector(f, self.n_actions)
        self.cumulative_reward += f
        self.n_updates += 1


class MWUSamp(MWU):
    """MWU that plays the empirical distribution of ``n_samples`` draws from its iterate."""

    def __init__(self, n_actions: int, horizon: int, n_samples: int, rng: np.random.Generator, eta: Optional[float] = None):
        super().__init__(n_actions, horizon, eta)
        if n_samples < 1:
            raise InvalidInput("MWUSamp needs at least one sample")
        self.n_samples = int(n_samples)
        self.rng = rng

    def act(self) -> np.ndarray:
        return mwusamp_act(super().act(), self.n_samples, self.rng)


def mwusamp_act(y: np.ndarray, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Empirical distribution of ``n_samples`` i.i.d. draws from ``y`` (entries multiples of 1/L)."""
    if n_samples < 1:
        raise InvalidInput("MWUSamp needs at least one sample")
    counts = rng.multinomial(n_samples, y)
    return counts / n_samples


class Exp3Multi:
    """Exponential weights with implicit exploration, fed several bandit samples per round.

    Samples ``(a, u)`` are buffered with :meth:`store` during a round; :meth:`update`
    turns them into loss estimates

        Y_a = (1/K) * sum_k 1{a_k = a} * (1 - u_k) / (p[a] + gamma)

    and returns the next distribution ``softmax(-eta * L_hat)``. The divisor
    is always the nominal ``K`` even when the round held more or fewer samples.
    """

    def __init__(self, n_actions: int, horizon: int, eta: float, gamma: float, K: int):
        if eta <= 0 or gamma <= 0 or K < 1:
            raise InvalidInput("Exp3Multi needs eta > 0, gamma > 0, K >= 1")
        self.n_actions = n_actions
        self.horizon = horizon
        self.eta = float(eta)
        self.gamma = float(gamma)
        self.K = int(K)
        self.cum_loss_estimate = np.zeros(n_actions)
        self.distribution = np.full(n_actions, 1.0 / n_actions)
        self.buffer: List[Tuple[int, float]] = []
        self.round_index = 0
        self.last_estimate = np.zeros(n_actions)

    def store(self, a: int, u: float) -> None:
        if not (0 <= a < self.n_actions):
            raise InvalidInput("action index out of range")
        if not (0.0 <= u <= 1.0):
            raise InvalidInput("reward out of range")
        self.buffer.append((int(a), float(u)))

    def loss_estimate(self) -> np.ndarray:
        y = np.zeros(self.n_actions)
        if self.buffer:
            acts = np.fromiter((a for a, _ in self.buffer), dtype=np.int64, count=len(self.buffer))
            losses = np.fromiter((1.0 - u for _, u in self.buffer), dtype=np.float64, count=len(self.buffer))
            np.add.at(y, acts, losses)
            y /= self.K * (self.distribution + self.gamma)
        return y

    def update(self) -> np.ndarray:
        if self.round_index >= self.horizon:
            raise HorizonExhausted("horizon exhausted")
        y = self.loss_estimate()
        self.last_estimate = y
        self.cum_loss_estimate += y
        self.buffer.clear()
        self.round_index += 1
        self.distribution = softmax(-self.eta * self.cum_loss_estimate)
        return self.distribution
