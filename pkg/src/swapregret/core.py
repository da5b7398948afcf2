"""Domain types, exact regret oracles and shared numeric helpers."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

SIMPLEX_TOL = 1e-9


class SwapRegretError(Exception):
    """Base class for errors raised by this package."""


class InvalidInput(SwapRegretError, ValueError):
    pass


class HorizonExhausted(SwapRegretError, RuntimeError):
    pass


class ResourceCapExceeded(SwapRegretError, RuntimeError):
    """Raised by the equilibrium protocols when a resource budget runs out.

    The ledger accumulated so far is attached as ``self.ledger``.
    """

    def __init__(self, message: str, ledger=None):
        super().__init__(message)
        self.ledger = ledger


# ---------------------------------------------------------------------------
# validation helpers


def as_mixed_action(probs, n_actions: Optional[int] = None, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate ``probs`` as a point of the simplex and renormalize it exactly.

    Entries must be nonnegative and sum to 1 within ``tol``; the returned
    copy is divided by its sum so rounding drift does not accumulate.
    """
    p = np.array(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InvalidInput("mixed action must be a nonempty 1-d array")
    if n_actions is not None and p.size != n_actions:
        raise InvalidInput(f"mixed action has {p.size} entries, expected {n_actions}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InvalidInput("mixed action has negative or non-finite entries")
    s = p.sum()
    if abs(s - 1.0) > tol:
        raise InvalidInput(f"mixed action sums to {s!r}, not 1")
    return p / s


def as_reward_vector(values, n_actions: Optional[int] = None, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    f = np.array(values, dtype=np.float64)
    if f.ndim != 1:
        raise InvalidInput("reward vector must be 1-d")
    if n_actions is not None and f.size != n_actions:
        raise InvalidInput(f"reward vector has {f.size} entries, expected {n_actions}")
    if not np.all(np.isfinite(f)) or np.any(f < lo) or np.any(f > hi):
        raise InvalidInput(f"reward out of range [{lo}, {hi}]")
    return f


def point_masses(actions, n_actions: int) -> np.ndarray:
    actions = np.asarray(actions, dtype=np.int64)
    if actions.size and (actions.min() < 0 or actions.max() >= n_actions):
        raise InvalidInput("action index out of range")
    out = np.zeros((actions.size, n_actions))
    out[np.arange(actions.size), actions] = 1.0
    return out


# ---------------------------------------------------------------------------
# transcripts


@dataclass
class Transcript:
    """Paired learner plays and adversary rewards over ``T`` rounds.

    ``plays`` is a ``(T, N)`` array of mixed actions. Bandit transcripts also
    carry the sampled ``actions``; their plays are the matching point masses.
    """

    plays: np.ndarray
    rewards: np.ndarray
    actions: Optional[np.ndarray] = None
    reward_range: Tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        self.plays = np.asarray(self.plays, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        if self.plays.ndim != 2 or self.rewards.ndim != 2:
            raise InvalidInput("malformed transcript")
        if self.plays.shape != self.rewards.shape:
            raise InvalidInput("malformed transcript")
        if self.plays.shape[0]:
            if np.any(self.plays < 0) or np.any(np.abs(self.plays.sum(axis=1) - 1.0) > SIMPLEX_TOL):
                raise InvalidInput("malformed transcript: play outside the simplex")
            lo, hi = self.reward_range
            if np.any(self.rewards < lo) or np.any(self.rewards > hi):
                raise InvalidInput("malformed transcript: reward out of range")
        if self.actions is not None:
            self.actions = np.asarray(self.actions, dtype=np.int64)
            if self.actions.shape != (self.plays.shape[0],):
                raise InvalidInput("malformed transcript")

    @classmethod
    def from_actions(cls, actions, rewards, n_actions: Optional[int] = None, reward_range=(0.0, 1.0)) -> "Transcript":
        rewards = np.asarray(rewards, dtype=np.float64)
        if rewards.ndim != 2:
            raise InvalidInput("malformed transcript")
        n = rewards.shape[1] if n_actions is None else n_actions
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape[0] != rewards.shape[0]:
            raise InvalidInput("malformed transcript")
        return cls(point_masses(actions, n), rewards, actions=actions, reward_range=reward_range)

    @property
    def horizon(self) -> int:
        return self.plays.shape[0]

    @property
    def n_actions(self) -> int:
        return self.plays.shape[1]

    @property
    def is_bandit(self) -> bool:
        return self.actions is not None

    def prefix(self, t: int) -> "Transcript":
        acts = None if self.actions is None else self.actions[:t]
        return Transcript(self.plays[:t], self.rewards[:t], acts, self.reward_range)

    def remapped(self, scale: float, shift: float, reward_range=(0.0, 1.0)) -> "Transcript":
        """Affine reward map ``f -> scale * f + shift`` (plays unchanged)."""
        return Transcript(self.plays, scale * self.rewards + shift, self.actions, reward_range)


@dataclass
class SwapReport:
    swap_regret: float
    best_swap: Dict[int, int]
    per_action_gain: np.ndarray
    horizon: int = 0

    def top_gains(self, k: int = 5):
        order = np.argsort(-self.per_action_gain, kind="stable")[:k]
        return [
            {"action": int(i), "target": int(self.best_swap[int(i)]), "gain": float(self.per_action_gain[i])}
            for i in order
        ]


def _checked(transcript: Transcript) -> Transcript:
    if not isinstance(transcript, Transcript):
        raise InvalidInput("malformed transcript")
    if transcript.plays.shape != transcript.rewards.shape:
        raise InvalidInput("malformed transcript")
    if transcript.horizon == 0:
        raise InvalidInput("empty transcript")
    return transcript


def swap_matrix(plays: np.ndarray, rewards: np.ndarray) -> np.ndarray:
    """``G[i, j] = sum_t plays[t, i] * rewards[t, j]``."""
    return plays.T @ rewards


# Both regrets are read off the same swap matrix with correctly rounded sums,
# so ext_regret <= swap_regret holds bit-for-bit, not just up to rounding.


def ext_from_matrix(G: np.ndarray, horizon: int) -> float:
    best_fixed = max(math.fsum(col) for col in G.T)
    return (best_fixed - math.fsum(np.diag(G))) / horizon


def ext_regret(transcript: Transcript) -> float:
    """Average external regret against the best fixed action in hindsight."""
    tr = _checked(transcript)
    return ext_from_matrix(swap_matrix(tr.plays, tr.rewards), tr.horizon)


def report_from_matrix(G: np.ndarray, horizon: int) -> SwapReport:
    best = np.argmax(G, axis=1)
    gain = G[np.arange(G.shape[0]), best] - np.diag(G)
    total = math.fsum(G[np.arange(G.shape[0]), best]) - math.fsum(np.diag(G))
    return SwapReport(
        swap_regret=total / horizon,
        best_swap={i: int(j) for i, j in enumerate(best)},
        per_action_gain=gain,
        horizon=horizon,
    )


def swap_regret(transcript: Transcript) -> SwapReport:
    """Average swap regret: for every action, the gain of its best replacement.

    Ties in the replacement are broken toward the lowest index.
    """
    tr = _checked(transcript)
    return report_from_matrix(swap_matrix(tr.plays, tr.rewards), tr.horizon)


class SwapAccumulator:
    """Streaming version of the swap matrix, used for prefix regrets.

    Costs ``O(N * |supp(x)|)`` per round, so sparse plays stay cheap.
    """

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self.G = np.zeros((n_actions, n_actions))
        self.horizon = 0

    def add(self, x: np.ndarray, f: np.ndarray) -> None:
        supp = np.flatnonzero(x)
        self.G[supp] += np.outer(x[supp], f)
        self.horizon += 1

    def add_action(self, a: int, f: np.ndarray) -> None:
        self.G[a] += f
        self.horizon += 1

    def ext_regret(self) -> float:
        if self.horizon == 0:
            raise InvalidInput("empty transcript")
        return ext_from_matrix(self.G, self.horizon)

    def swap_report(self) -> SwapReport:
        if self.horizon == 0:
            raise InvalidInput("empty transcript")
        return report_from_matrix(self.G, self.horizon)


# ---------------------------------------------------------------------------
# numeric utilities


def base_m_digits(value: int, m: int, d: int) -> Tuple[int, ...]:
    """Base-``m`` representation of ``value`` as ``d`` digits, most significant first."""
    if m < 2 or d < 1:
        raise InvalidInput("need m >= 2 and d >= 1")
    if value < 0 or value >= m**d:
        raise InvalidInput("address overflow")
    digits = [0] * d
    for h in range(d - 1, -1, -1):
        value, digits[h] = divmod(value, m)
    return tuple(digits)


def ceil_log(value: int, base: int) -> int:
    """Smallest ``k >= 1`` with ``base**k >= value`` (exact integer arithmetic)."""
    k, p = 1, base
    while p < value:
        p *= base
        k += 1
    return k


def seed_sequence(master_seed: int, *labels) -> np.random.SeedSequence:
    """Seed for a named component of an experiment.

    Each label is hashed with CRC32 into the seed sequence's spawn key, so
    adding a new component never shifts the draws of an existing one.
    """
    key = tuple(zlib.crc32(str(label).encode()) for label in labels)
    return np.random.SeedSequence(int(master_seed), spawn_key=key)


def spawn_rng(master_seed: int, *labels) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master_seed, *labels))


def random_transcript(rng: np.random.Generator, n_actions: int, horizon: int, bandit: bool = False) -> Transcript:
    """Dirichlet(1) plays (or uniform actions) against U[0,1] rewards."""
    rewards = rng.random((horizon, n_actions))
    if bandit:
        return Transcript.from_actions(rng.integers(n_actions, size=horizon), rewards, n_actions)
    return Transcript(rng.dirichlet(np.ones(n_actions), size=horizon), rewards)


# ---------------------------------------------------------------------------
# CSV round-trip


def write_transcript_csv(path, transcript: Transcript) -> None:
    n = transcript.n_actions
    if transcript.is_bandit:
        head = ["t", "action"]
    else:
        head = ["t"] + [f"p_{i}" for i in range(n)]
    head += [f"reward_{i}" for i in range(n)]
    lines = [",".join(head)]
    for t in range(transcript.horizon):
        row = [str(t + 1)]
        if transcript.is_bandit:
            row.append(str(int(transcript.actions[t])))
        else:
            row.extend(repr(float(v)) for v in transcript.plays[t])
        row.extend(repr(float(v)) for v in transcript.rewards[t])
        lines.append(",".join(row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_transcript_csv(path, reward_range=(0.0, 1.0)) -> Transcript:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    n = sum(1 for h in header if h.startswith("reward_"))
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    rewards = data[:, -n:]
    if header[1] == "action":
        return Transcript.from_actions(data[:, 1].astype(np.int64), rewards, n, reward_range)
    return Transcript(data[:, 1 : 1 + n], rewards, reward_range=reward_range)
