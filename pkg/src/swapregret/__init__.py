"""Swap-regret minimization via TreeSwap, correlated-equilibrium self-play, and lower-bound adversaries."""
from .core import (
    HorizonExhausted,
    InvalidInput,
    ResourceCapExceeded,
    SwapAccumulator,
    SwapRegretError,
    SwapReport,
    Transcript,
    ext_regret,
    read_transcript_csv,
    spawn_rng,
    swap_regret,
    write_transcript_csv,
)
from .learners import MWU, Exp3Multi, MWUSamp
from .treeswap import BanditTreeSwap, Recorder, TreeSwap, run_bandit, run_full_information, verify_bound
from .games import (
    CorrelatedDistribution,
    NormalFormGame,
    PayoffOracle,
    ResourceLedger,
    cce_gap,
    ce_gap,
    comm_ce,
    query_ce,
)
from .adversaries import (
    AdaptiveStaircaseAdversary,
    BestResponseLast,
    ConstantAdversary,
    IIDUniformAdversary,
    ObliviousTreeAdversary,
    Remapped,
)

__version__ = "0.1.0"
