"""Normal-form games, exact CE/CCE gaps, and self-play protocols with resource accounting."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import InvalidInput, ResourceCapExceeded, Transcript, ceil_log, spawn_rng
from .learners import MWUSamp
from .treeswap import TreeSwap

MAX_PROFILES = 10**7
BITS_PER_WEIGHT = 16


@dataclass
class NormalFormGame:
    """``m`` players with ``n`` actions each; ``payoffs[j]`` has shape ``(n,) * m``."""

    payoffs: np.ndarray

    def __post_init__(self):
        self.payoffs = np.asarray(self.payoffs, dtype=np.float64)
        m = self.payoffs.shape[0]
        if self.payoffs.ndim != m + 1:
            raise InvalidInput("payoff tensor shape inconsistent with player count")
        n = self.payoffs.shape[1]
        if any(s != n for s in self.payoffs.shape[1:]):
            raise InvalidInput("every player must have the same number of actions")
        if n**m > MAX_PROFILES:
            raise InvalidInput("game too large for dense payoff tensors")
        if np.any(self.payoffs < 0) or np.any(self.payoffs > 1):
            raise InvalidInput("payoff entries must lie in [0, 1]")

    @property
    def m(self) -> int:
        return self.payoffs.shape[0]

    @property
    def n(self) -> int:
        return self.payoffs.shape[1]

    @classmethod
    def random(cls, m: int, n: int, rng: np.random.Generator) -> "NormalFormGame":
        return cls(rng.random((m,) + (n,) * m))

    def expected_utilities(self, mixtures: Sequence[np.ndarray], player: int) -> np.ndarray:
        """``u[a] = E[A_player(a, a_-player)]`` under the product of the others' mixtures."""
        A = np.moveaxis(self.payoffs[player], player, 0)
        for i in reversed(range(self.m)):
            if i != player:
                A = A @ mixtures[i]
        return A

    def to_json(self) -> dict:
        return {
            "players": self.m,
            "actions": self.n,
            "payoffs": [self.payoffs[j].reshape(-1).tolist() for j in range(self.m)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NormalFormGame":
        m, n = int(obj["players"]), int(obj["actions"])
        flat = np.asarray(obj["payoffs"], dtype=np.float64)
        if flat.shape != (m, n**m):
            raise InvalidInput("payoffs must be [players][actions^players]")
        return cls(flat.reshape((m,) + (n,) * m))


@dataclass
class CorrelatedDistribution:
    """Sparse distribution over action profiles; duplicates are merged on construction."""

    profiles: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        profiles = np.asarray(self.profiles, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if profiles.ndim != 2 or weights.shape != (profiles.shape[0],):
            raise InvalidInput("support must pair each profile with one weight")
        if np.any(weights <= 0):
            raise InvalidInput("support weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise InvalidInput("support weights must sum to 1")
        uniq, inv = np.unique(profiles, axis=0, return_inverse=True)
        merged = np.zeros(uniq.shape[0])
        np.add.at(merged, inv.reshape(-1), weights)
        self.profiles, self.weights = uniq, merged

    @property
    def sparsity(self) -> int:
        return self.profiles.shape[0]

    @classmethod
    def from_dense(cls, mu: np.ndarray) -> "CorrelatedDistribution":
        idx = np.argwhere(mu > 0)
        w = mu[tuple(idx.T)]
        return cls(idx, w / w.sum())

    @classmethod
    def point_mass(cls, profile) -> "CorrelatedDistribution":
        return cls(np.asarray([profile]), np.ones(1))

    def check_against(self, game: NormalFormGame) -> None:
        if self.profiles.shape[1] != game.m or np.any(self.profiles < 0) or np.any(self.profiles >= game.n):
            raise InvalidInput("profiles outside the game's action space")

    def to_json(self) -> list:
        return [{"profile": p.tolist(), "weight": float(w)} for p, w in zip(self.profiles, self.weights)]

    @classmethod
    def from_json(cls, support: list) -> "CorrelatedDistribution":
        return cls(np.array([s["profile"] for s in support]), np.array([s["weight"] for s in support]))


@dataclass
class ResourceLedger:
    queries: int = 0
    comm_bits: int = 0

    def to_json(self) -> dict:
        return {"queries": self.queries, "comm_bits": self.comm_bits}


# ---------------------------------------------------------------------------
# equilibrium gaps


def deviation_matrix(game: NormalFormGame, mu: CorrelatedDistribution, player: int) -> np.ndarray:
    """``D[s, s'] = sum over profiles with player at s of weight * A_player(s', rest)``."""
    mu.check_against(game)
    A = np.moveaxis(game.payoffs[player], player, -1)
    others = [i for i in range(game.m) if i != player]
    rows = A[tuple(mu.profiles[:, others].T)]  # (k, n)
    D = np.zeros((game.n, game.n))
    np.add.at(D, mu.profiles[:, player], mu.weights[:, None] * rows)
    return D


def ce_gap(game: NormalFormGame, mu: CorrelatedDistribution) -> np.ndarray:
    """Per-player gain of the best deviation map; ``mu`` is an eps-CE iff ``max <= eps``."""
    gaps = []
    for j in range(game.m):
        D = deviation_matrix(game, mu, j)
        gaps.append(float((D.max(axis=1) - np.diag(D)).sum()))
    return np.array(gaps)


def cce_gap(game: NormalFormGame, mu: CorrelatedDistribution) -> np.ndarray:
    """Per-player gain of the best constant deviation."""
    gaps = []
    for j in range(game.m):
        D = deviation_matrix(game, mu, j)
        gaps.append(float(D.sum(axis=0).max() - np.trace(D)))
    return np.array(gaps)


# ---------------------------------------------------------------------------
# protocols


def sparse_message_bits(x: np.ndarray, n_actions: int, bits_per_weight: int = BITS_PER_WEIGHT) -> int:
    """Bits to send a sparse mixture: index plus fixed-point weight per nonzero entry."""
    index_bits = (n_actions - 1).bit_length()
    return int(np.count_nonzero(x)) * (index_bits + bits_per_weight)


class PayoffOracle:
    """Entry-wise access to a game's payoffs that counts every read."""

    def __init__(self, game: NormalFormGame):
        self.game = game
        self.queries = 0

    def query(self, player: int, profile) -> float:
        self.queries += 1
        return float(self.game.payoffs[player][tuple(profile)])

    def query_many(self, player: int, profiles: np.ndarray) -> np.ndarray:
        """Read ``A_player`` at each row of ``profiles`` (``(k, m)`` ints)."""
        profiles = np.asarray(profiles)
        self.queries += profiles.shape[0]
        return self.game.payoffs[player][tuple(profiles.T)]


@dataclass
class ProtocolParams:
    M: int
    d: int
    T: int
    L: int
    T_full: int  # M^d before capping


@dataclass
class SelfPlayRun:
    distribution: CorrelatedDistribution
    ledger: ResourceLedger
    params: ProtocolParams
    plays: List[np.ndarray] = field(default_factory=list)  # per player, (T, n)
    utilities: List[np.ndarray] = field(default_factory=list)  # per player exact u_i^t, (T, n)
    message_support: List[int] = field(default_factory=list)

    def transcript(self, player: int) -> Transcript:
        return Transcript(self.plays[player], self.utilities[player])


def protocol_params(n: int, m: int, eps: float, delta: float, C: float, max_rounds: Optional[int], with_m: bool) -> ProtocolParams:
    if not (0 < eps < 1 and 0 < delta < 1):
        raise InvalidInput("eps and delta must lie in (0, 1)")
    M = max(2, math.ceil(math.log(max(n, 2)) / eps**2))
    d = math.ceil(1 / eps)
    T_full = M**d
    T = T_full
    if max_rounds is not None and T > max_rounds:
        T = int(max_rounds)
        d = ceil_log(T, M)
    L = math.ceil(C * (m if with_m else 1) * math.log(T * n * m / delta) / eps**2)
    return ProtocolParams(M=M, d=d, T=T, L=L, T_full=T_full)


def _product(mixtures: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.multiply.outer, mixtures)


def comm_ce_run(
    game: NormalFormGame,
    eps: float,
    delta: float,
    seed: int,
    C: float = 4.0,
    max_rounds: Optional[int] = None,
    max_comm_bits: Optional[int] = None,
    bits_per_weight: int = BITS_PER_WEIGHT,
    keep_transcripts: bool = True,
    params: Optional[ProtocolParams] = None,
) -> SelfPlayRun:
    """Communication-efficient self-play: every player runs TreeSwap over MWUSamp.

    Each round the players broadcast their sparse mixtures (counted once per
    player per round), compute exact expected utilities against the product
    of the others' mixtures, and feed them back. Returns the uniform average
    of the per-round product distributions.
    """
    m, n = game.m, game.n
    if params is None:
        params = protocol_params(n, m, eps, delta, C, max_rounds, with_m=True)
    M, d, T, L = params.M, params.d, params.T, params.L
    players = []
    for i in range(m):
        rng = spawn_rng(seed, "comm_ce", "player", i)
        players.append(TreeSwap(n, T, M, d, learner_factory=lambda level, rng=rng: MWUSamp(n, M, L, rng)))
    ledger = ResourceLedger()
    mu = np.zeros((n,) * m)
    plays = [np.empty((T, n)) for _ in range(m)] if keep_transcripts else []
    utils = [np.empty((T, n)) for _ in range(m)] if keep_transcripts else []
    support = []
    u_prev = [None] * m
    for t in range(T):
        xs = [players[i].round(u_prev[i]) for i in range(m)]
        for i in range(m):
            ledger.comm_bits += sparse_message_bits(xs[i], n, bits_per_weight)
            support.append(int(np.count_nonzero(xs[i])))
        if max_comm_bits is not None and ledger.comm_bits > max_comm_bits:
            raise ResourceCapExceeded("communication budget exceeded", ledger)
        u_prev = [game.expected_utilities(xs, i) for i in range(m)]
        mu += _product(xs)
        if keep_transcripts:
            for i in range(m):
                plays[i][t] = xs[i]
                utils[i][t] = u_prev[i]
    dist = CorrelatedDistribution.from_dense(mu / T)
    return SelfPlayRun(dist, ledger, params, plays, utils, support)


def comm_ce(game, eps, delta, seed, **kwargs) -> Tuple[CorrelatedDistribution, ResourceLedger]:
    run = comm_ce_run(game, eps, delta, seed, keep_transcripts=False, **kwargs)
    return run.distribution, run.ledger


def query_ce_run(
    oracle: PayoffOracle,
    m: int,
    n: int,
    eps: float,
    delta: float,
    seed: int,
    C: float = 4.0,
    max_rounds: Optional[int] = None,
    max_queries: Optional[int] = None,
    keep_transcripts: bool = True,
    params: Optional[ProtocolParams] = None,
) -> SelfPlayRun:
    """Query-efficient self-play: TreeSwap over plain MWU, fed sampled utility estimates.

    Each round every player draws ``L`` actions from its mixture; player
    ``i`` estimates ``u_i[a]`` as the mean of ``A_i(a, sampled opponents_l)``
    over the ``L`` joint samples, spending exactly ``n * L`` oracle reads.
    The recorded utilities are the exact expectations, for verification only.
    ``params`` overrides the (M, d, T, L) derived from ``eps`` and ``delta``.
    """
    if params is None:
        params = protocol_params(n, m, eps, delta, C, max_rounds, with_m=False)
    M, d, T, L = params.M, params.d, params.T, params.L
    players = [TreeSwap(n, T, M, d) for _ in range(m)]
    rngs = [spawn_rng(seed, "query_ce", "player", i) for i in range(m)]
    game = oracle.game
    mu = np.zeros((n,) * m)
    plays = [np.empty((T, n)) for _ in range(m)] if keep_transcripts else []
    utils = [np.empty((T, n)) for _ in range(m)] if keep_transcripts else []
    u_prev = [None] * m
    ledger = ResourceLedger()
    profiles = np.empty((n * L, m), dtype=np.int64)
    for t in range(T):
        xs = [players[i].round(u_prev[i]) for i in range(m)]
        samples = [rngs[i].choice(n, size=L, p=xs[i]) for i in range(m)]
        u_prev = []
        for i in range(m):
            for j in range(m):
                profiles[:, j] = np.tile(samples[j], n)
            profiles[:, i] = np.repeat(np.arange(n), L)
            vals = oracle.query_many(i, profiles)
            u_prev.append(vals.reshape(n, L).mean(axis=1))
        ledger.queries = oracle.queries
        if max_queries is not None and ledger.queries > max_queries:
            raise ResourceCapExceeded("query budget exceeded", ledger)
        mu += _product(xs)
        if keep_transcripts:
            for i in range(m):
                plays[i][t] = xs[i]
                utils[i][t] = game.expected_utilities(xs, i)
    dist = CorrelatedDistribution.from_dense(mu / T)
    return SelfPlayRun(dist, ledger, params, plays, utils)


def query_ce(oracle, m, n, eps, delta, seed, **kwargs) -> Tuple[CorrelatedDistribution, ResourceLedger]:
    run = query_ce_run(oracle, m, n, eps, delta, seed, keep_transcripts=False, **kwargs)
    return run.distribution, run.ledger


def exact_selfplay_run(game: NormalFormGame, T: int, M: int, d: Optional[int] = None) -> SelfPlayRun:
    """Deterministic self-play of TreeSwap(MWU) with exact utilities (no sampling, no accounting)."""
    m, n = game.m, game.n
    players = [TreeSwap(n, T, M, d) for _ in range(m)]
    mu = np.zeros((n,) * m)
    plays = [np.empty((T, n)) for _ in range(m)]
    utils = [np.empty((T, n)) for _ in range(m)]
    u_prev = [None] * m
    for t in range(T):
        xs = [players[i].round(u_prev[i]) for i in range(m)]
        u_prev = [game.expected_utilities(xs, i) for i in range(m)]
        mu += _product(xs)
        for i in range(m):
            plays[i][t] = xs[i]
            utils[i][t] = u_prev[i]
    params = ProtocolParams(M=M, d=players[0].d, T=T, L=0, T_full=M ** players[0].d)
    return SelfPlayRun(CorrelatedDistribution.from_dense(mu / T), ResourceLedger(), params, plays, utils)


def equilibrium_json(mu: CorrelatedDistribution, gaps, ledger: ResourceLedger) -> dict:
    return {"support": mu.to_json(), "ce_gap": [float(g) for g in gaps], "ledger": ledger.to_json()}


def load_json(path):
    with open(path) as fh:
        return json.load(fh)
