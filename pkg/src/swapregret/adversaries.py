"""Reward-generating opponents: the binary-tree oblivious adversary, the adaptive
staircase adversary, and simple baselines.

Every adversary exposes ``respond(x) -> reward vector``, called once per round
in order with the learner's current mixed action.
"""
from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import HorizonExhausted, InvalidInput


# ---------------------------------------------------------------------------
# baselines


class ConstantAdversary:
    def __init__(self, values):
        self.values = np.array(values, dtype=np.float64)
        self.n_actions = self.values.size

    def respond(self, x=None) -> np.ndarray:
        return self.values.copy()


class IIDUniformAdversary:
    """Independent U[0,1] rewards; the stream depends only on the seed."""

    def __init__(self, n_actions: int, seed=None, rng: Optional[np.random.Generator] = None):
        self.n_actions = n_actions
        self.rng = rng if rng is not None else np.random.default_rng(seed)

    def respond(self, x=None) -> np.ndarray:
        return self.rng.random(self.n_actions)


class BestResponseLast:
    """Rewards the action the learner played least in the previous round (lowest index on ties)."""

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self.x_prev = np.full(n_actions, 1.0 / n_actions)

    def respond(self, x) -> np.ndarray:
        f = best_response_last(self.x_prev)
        self.x_prev = np.asarray(x, dtype=np.float64)
        return f


def best_response_last(x_prev) -> np.ndarray:
    x_prev = np.asarray(x_prev, dtype=np.float64)
    f = np.zeros(x_prev.size)
    f[int(np.argmin(x_prev))] = 1.0
    return f


class ScheduleAdversary:
    """Replays a precomputed ``(T, N)`` schedule."""

    def __init__(self, schedule):
        self.schedule = np.asarray(schedule, dtype=np.float64)
        self.n_actions = self.schedule.shape[1]
        self.t = 0

    def respond(self, x=None) -> np.ndarray:
        if self.t >= self.schedule.shape[0]:
            raise HorizonExhausted("schedule exhausted")
        f = self.schedule[self.t]
        self.t += 1
        return f.copy()


def planted_pair_schedule(n_actions: int, horizon: int, rng: np.random.Generator, good=(0, 1), p_good=0.8, p_bad=0.3) -> np.ndarray:
    """Bernoulli rewards where the two ``good`` actions have mean ``p_good`` and the rest ``p_bad``."""
    means = np.full(n_actions, p_bad)
    means[list(good)] = p_good
    return (rng.random((horizon, n_actions)) < means).astype(np.float64)


# ---------------------------------------------------------------------------
# oblivious binary-tree adversary


def tree_depth(n_actions: int, horizon: int) -> int:
    """Largest ``D`` with ``2^D <= T`` and ``4 * 2^D - 2 <= N``."""
    D = 0
    while 2 ** (D + 1) <= horizon and 4 * 2 ** (D + 1) - 2 <= n_actions:
        D += 1
    return D


class ObliviousTreeAdversary:
    """Batches of rewards that walk the root-to-leaf paths of a complete binary tree in DFS order.

    Nodes are numbered breadth-first (root 0, children ``2i+1``/``2i+2``);
    node ``i`` owns actions ``2i`` and ``2i+1``. In batch ``b`` the internal
    node at depth ``k`` on the path to leaf ``b`` pays ``k / (2D)`` to one of
    its two actions (switching to the second only for right descendants with
    the node's coin set), and the leaf pays 1 to the action picked by a fresh
    coin each step. Rounds past ``B * 2^D`` pay nothing. With
    ``l1_scaled=True`` every reward is multiplied by ``4 / (D + 3)`` so each
    vector has unit ℓ1 norm.
    """

    def __init__(
        self,
        n_actions: int,
        horizon: int,
        seed=None,
        l1_scaled: bool = False,
        node_bits: Optional[Sequence[int]] = None,
        leaf_bits=None,
    ):
        self.n_actions = n_actions
        self.horizon = horizon
        self.D = D = tree_depth(n_actions, horizon)
        if D < 1:
            raise InvalidInput("oblivious tree adversary needs N >= 6 and T >= 2")
        self.B = horizon // 2**D
        self.T_prime = self.B * 2**D
        self.l1_scaled = l1_scaled
        self.scale = 4.0 / (D + 3) if l1_scaled else 1.0
        rng = np.random.default_rng(seed)
        n_internal = 2**D - 1
        self.node_bits = (
            np.asarray(node_bits, dtype=np.int8) if node_bits is not None else rng.integers(0, 2, size=n_internal, dtype=np.int8)
        )
        self.leaf_bits = (
            np.asarray(leaf_bits, dtype=np.int8) if leaf_bits is not None else rng.integers(0, 2, size=(2**D, self.B), dtype=np.int8)
        )
        if self.node_bits.shape != (n_internal,) or self.leaf_bits.shape != (2**D, self.B):
            raise InvalidInput("bit arrays do not match the tree shape")
        self.t = 0

    @property
    def n_tree_actions(self) -> int:
        return 4 * 2**self.D - 2

    def path(self, batch: int) -> List[int]:
        """BFS indices of the root-to-leaf path for 1-based ``batch``."""
        leaf = batch - 1
        return [(2**k - 1) + (leaf >> (self.D - k)) for k in range(self.D + 1)]

    def rewarded(self, t: int) -> List[Tuple[int, float]]:
        """Nonzero ``(action, reward)`` pairs at 1-based round ``t``."""
        if not 1 <= t <= self.horizon:
            raise InvalidInput("round out of range")
        if t > self.T_prime:
            return []
        D, B = self.D, self.B
        b = (t - 1) // B + 1
        leaf = b - 1
        out = []
        for k, v in enumerate(self.path(b)):
            if k < D:
                goes_right = (leaf >> (D - 1 - k)) & 1
                a = 2 * v + 1 if (goes_right and self.node_bits[v]) else 2 * v
                out.append((a, self.scale * (k / (2 * D))))
            else:
                a = 2 * v + int(self.leaf_bits[leaf, (t - 1) % B])
                out.append((a, self.scale * 1.0))
        return out

    def reward(self, t: int) -> np.ndarray:
        u = np.zeros(self.n_actions)
        for a, r in self.rewarded(t):
            u[a] = r
        return u

    def schedule(self) -> np.ndarray:
        return np.array([self.reward(t) for t in range(1, self.horizon + 1)])

    def respond(self, x=None) -> np.ndarray:
        if self.t >= self.horizon:
            raise HorizonExhausted("horizon exhausted")
        self.t += 1
        return self.reward(self.t)

    def dump_csv(self, path) -> None:
        lines = ["t,action,reward"]
        for t in range(1, self.horizon + 1):
            for a, r in self.rewarded(t):
                if r != 0:
                    lines.append(f"{t},{a},{r!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# adaptive staircase adversary


def staircase_level(T: int) -> int:
    """``floor(log2(T / 2))`` in exact integer arithmetic."""
    if T < 4:
        raise InvalidInput("adaptive adversary needs T >= 4")
    return (T // 2).bit_length() - 1


class AdaptiveStaircaseAdversary:
    """Adaptive adversary built on a logarithmic staircase of rewards in [-1, 1].

    Actions are 0-based here: the pair played "at home" in round ``t`` is
    ``{2t-2, 2t-1}`` (1-based ``{2t-1, 2t}``). Round ``t`` is active while the
    learner's accumulated mass on that pair, measured per geometric distance
    band ``k``, stays below ``zeta = 1/(32 L)``; inactive rounds pay zero.
    On active rounds the home pair gets the top of the staircase with a
    ``Delta / 2`` penalty on the member whose 1-based index has parity
    ``r^t``; lower actions get -1; higher actions follow the staircase unless
    they have gone stale (mass ``>= zeta`` in some band), in which case -1.
    After round ``N/2`` every action pays -1.
    """

    reward_range = (-1.0, 1.0)

    def __init__(self, horizon: int, seed=None, L: Optional[int] = None, n_actions: Optional[int] = None):
        self.horizon = horizon
        self.L = staircase_level(horizon) if L is None else int(L)
        if self.L < 1:
            raise InvalidInput("adaptive adversary needs L >= 1")
        self.n_actions = 2 * (2**self.L - 1)
        if n_actions is not None and n_actions != self.n_actions:
            raise InvalidInput("adaptive adversary requires N = 2(2^L-1)")
        self.delta = 1.0 / self.L
        self.zeta = 1.0 / (32 * self.L)
        rng = np.random.default_rng(seed)
        self.bits = rng.integers(0, 2, size=self.n_actions // 2, dtype=np.int8)
        N = self.n_actions
        self.sigma = np.zeros((N, self.L))
        self.Sigma = np.zeros(N)
        self.stale_round = np.full(N, -1, dtype=np.int64)  # first round at which the action is stale
        self.active: List[int] = []
        self.t = 0
        self.pair = np.arange(N) ^ 1  # 0-based: (0,1), (2,3), ...
        self._fbase = np.array([self.f_base(i) for i in range(N)])

    def f_base(self, i: int) -> float:
        # floor(log2(1 + i/2)) == bit_length(1 + i//2) - 1 for integer i >= 0
        return ((1 + i // 2).bit_length() - 1) * self.delta

    def u_base(self, t: int) -> np.ndarray:
        """Staircase template for 1-based round ``t``."""
        N = self.n_actions
        start = 2 * t - 2  # 0-based index of 1-based action 2t-1
        u = np.full(N, -1.0)
        if start < N:
            u[start:] = 1.0 - self._fbase[: N - start]
        return u

    def _mark_stale(self, t: int) -> None:
        idx = np.arange(self.n_actions)
        fresh = (self.stale_round < 0) & ((idx < 2 * t - 2) | (self.Sigma >= self.zeta))
        self.stale_round[fresh] = t

    def respond(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        N = self.n_actions
        if x.shape != (N,):
            raise InvalidInput(f"expected a distribution over {N} actions")
        if self.t >= self.horizon:
            raise HorizonExhausted("horizon exhausted")
        self.t += 1
        t = self.t
        if t > N // 2:
            return np.full(N, -1.0)
        self._mark_stale(t)
        home = 2 * t - 2
        if self.Sigma[home] >= self.zeta:
            return np.zeros(N)
        self.active.append(t)

        u = self.u_base(t)
        r = int(self.bits[t - 1])
        for a in (home, home + 1):
            if (a + 1) % 2 == r:
                u[a] -= self.delta / 2
        higher = np.arange(home + 2, N)
        u[higher[self.Sigma[higher] >= self.zeta]] = -1.0

        # accumulate pair mass of this active round into the distance bands
        pbar = x + x[self.pair]
        dist = (higher - home) // 2  # == (a - (2t-1)) / 2 rounded down, 1-based
        bands = np.array([int(v).bit_length() - 1 for v in dist], dtype=np.int64)
        self.sigma[higher, bands] += pbar[higher]
        self.Sigma[higher] = np.maximum(self.Sigma[higher], self.sigma[higher, bands])
        return u

    @staticmethod
    def remap(u: np.ndarray) -> np.ndarray:
        """Affine map of [-1, 1] rewards onto [0, 1]."""
        return (np.asarray(u) + 1.0) / 2.0


class Remapped:
    """Wraps an adversary with rewards in [-1, 1] so learners see ``(u + 1) / 2``."""

    reward_range = (0.0, 1.0)

    def __init__(self, inner):
        self.inner = inner
        self.n_actions = inner.n_actions

    def respond(self, x) -> np.ndarray:
        return (self.inner.respond(x) + 1.0) / 2.0
