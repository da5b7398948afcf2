"""Experiment runner: ``swapregret run|bench|verify|dump-adversary``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .adversaries import (
    AdaptiveStaircaseAdversary,
    BestResponseLast,
    ConstantAdversary,
    IIDUniformAdversary,
    ObliviousTreeAdversary,
    Remapped,
    planted_pair_schedule,
)
from .core import (
    InvalidInput,
    SwapAccumulator,
    SwapRegretError,
    Transcript,
    ext_regret,
    seed_sequence,
    spawn_rng,
    swap_regret,
    write_transcript_csv,
)
from .games import (
    CorrelatedDistribution,
    NormalFormGame,
    PayoffOracle,
    ResourceLedger,
    ce_gap,
    cce_gap,
    comm_ce_run,
    equilibrium_json,
    load_json,
    query_ce_run,
)
from .learners import MWU
from .treeswap import BanditTreeSwap, TreeSwap, run_bandit, run_full_information

MODES = ("full_info", "bandit", "selfplay_comm", "selfplay_query", "lowerbound")
LEARNERS = ("mwu", "treeswap")
ADVERSARIES = ("constant", "iid_uniform", "best_response_last", "oblivious_tree", "adaptive")
TRAJECTORY_POINTS = 256

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3


@dataclass
class ExperimentConfig:
    mode: str = "full_info"
    learner: str = "treeswap"
    M: int = 4
    d: Optional[int] = None
    eta: Optional[float] = None
    adversary: str = "iid_uniform"
    adversary_values: Optional[List[float]] = None
    N: int = 8
    T: int = 64
    eps: float = 0.3
    delta: float = 0.1
    C: float = 4.0
    players: int = 2
    game: Optional[str] = None
    seeds: List[int] = field(default_factory=lambda: [0])
    out_dir: str = "runs"
    l1_scaled: bool = False
    gamma_variant: str = "M"
    cap_T: Optional[int] = None
    top_k: int = 5
    workers: int = 1

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise InvalidInput(f"mode must be one of {MODES}")
        if self.learner not in LEARNERS:
            raise InvalidInput(f"learner must be one of {LEARNERS}")
        if self.adversary not in ADVERSARIES:
            raise InvalidInput(f"adversary must be one of {ADVERSARIES}")
        if self.N < 1 or self.T < 1 or self.M < 2:
            raise InvalidInput("need N >= 1, T >= 1 and M >= 2")
        if self.d is not None and self.d < 1:
            raise InvalidInput("depth d must be >= 1")
        if not (0 < self.eps < 1 and 0 < self.delta < 1):
            raise InvalidInput("eps and delta must lie in (0, 1)")
        if self.gamma_variant not in ("M", "T"):
            raise InvalidInput("gamma_variant must be 'M' or 'T'")
        if not self.seeds:
            raise InvalidInput("at least one seed is required")
        if self.game is not None and not Path(self.game).is_file():
            raise InvalidInput(f"game file not found: {self.game}")
        if self.adversary == "constant" and self.adversary_values is not None and len(self.adversary_values) != self.N:
            raise InvalidInput("adversary_values must have N entries")
        return self


# ---------------------------------------------------------------------------
# single-seed execution


def _full_info_learner(cfg: ExperimentConfig, N: int, T: int):
    if cfg.learner == "mwu":
        return MWU(N, T, cfg.eta)
    eta = cfg.eta
    return TreeSwap(N, T, cfg.M, cfg.d, learner_factory=lambda level: MWU(N, cfg.M, eta))


def _adversary(cfg: ExperimentConfig, seed: int):
    ss = seed_sequence(seed, "adversary")
    if cfg.adversary == "constant":
        values = cfg.adversary_values if cfg.adversary_values is not None else [0.5] * cfg.N
        return ConstantAdversary(values)
    if cfg.adversary == "iid_uniform":
        return IIDUniformAdversary(cfg.N, seed=ss)
    if cfg.adversary == "best_response_last":
        return BestResponseLast(cfg.N)
    if cfg.adversary == "oblivious_tree":
        return ObliviousTreeAdversary(cfg.N, cfg.T, seed=ss, l1_scaled=cfg.l1_scaled)
    return Remapped(AdaptiveStaircaseAdversary(cfg.T, seed=ss, n_actions=cfg.N))


def simulate_full_info(cfg: ExperimentConfig, seed: int) -> Transcript:
    """One full-information run of the configured learner against the configured adversary."""
    adversary = _adversary(cfg, seed)
    learner = _full_info_learner(cfg, cfg.N, cfg.T)
    return run_full_information(learner, adversary, cfg.T)


def trajectory_rows(transcript: Transcript, every: int):
    """Exact prefix regrets every ``every`` rounds (and at the final round)."""
    acc = SwapAccumulator(transcript.n_actions)
    rows = []
    T = transcript.horizon
    for t in range(T):
        acc.add(transcript.plays[t], transcript.rewards[t])
        if (t + 1) % every == 0 or t + 1 == T:
            rows.append((t + 1, acc.ext_regret(), acc.swap_report().swap_regret))
    return rows


def _write_trajectory(path: Path, transcript: Transcript) -> None:
    every = math.ceil(transcript.horizon / TRAJECTORY_POINTS)
    lines = ["t,ext_regret,swap_regret"]
    lines += [f"{t},{e!r},{s!r}" for t, e, s in trajectory_rows(transcript, every)]
    path.write_text("\n".join(lines) + "\n")


def _regret_summary(tr: Transcript, top_k: int) -> dict:
    rep = swap_regret(tr)
    return {"ext_regret": ext_regret(tr), "swap_regret": rep.swap_regret, "top_gains": rep.top_gains(top_k)}


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_game(cfg: ExperimentConfig, seed: int) -> NormalFormGame:
    if cfg.game is not None:
        return NormalFormGame.from_json(load_json(cfg.game))
    return NormalFormGame.random(cfg.players, cfg.N, spawn_rng(seed, "game"))


def run_seed(cfg: ExperimentConfig, seed: int) -> dict:
    """Run one seed, write its files, and return the summary dict."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tag = f"seed{seed}"
    started = time.perf_counter()
    summary = {"mode": cfg.mode, "seed": seed, "N": cfg.N, "T": cfg.T}
    transcripts = {}

    if cfg.mode in ("full_info", "lowerbound"):
        tr = simulate_full_info(cfg, seed)
        transcripts[""] = tr
        summary.update(_regret_summary(tr, cfg.top_k))
        summary["ledger"] = ResourceLedger().to_json()
        if cfg.adversary == "adaptive":
            summary["reward_remap"] = "(u + 1) / 2; regrets are half those of the raw [-1, 1] rewards"
    elif cfg.mode == "bandit":
        schedule = planted_pair_schedule(cfg.N, cfg.T, spawn_rng(seed, "adversary"))
        learner = BanditTreeSwap(cfg.N, cfg.T, cfg.M, cfg.d, rng=spawn_rng(seed, "learner"), gamma_variant=cfg.gamma_variant, eta=cfg.eta)
        tr = run_bandit(learner, schedule)
        transcripts[""] = tr
        summary.update(_regret_summary(tr, cfg.top_k))
        summary["ledger"] = ResourceLedger().to_json()
    else:
        game = _load_game(cfg, seed)
        if cfg.mode == "selfplay_comm":
            run = comm_ce_run(game, cfg.eps, cfg.delta, seed, C=cfg.C, max_rounds=cfg.cap_T)
        else:
            run = query_ce_run(PayoffOracle(game), game.m, game.n, cfg.eps, cfg.delta, seed, C=cfg.C, max_rounds=cfg.cap_T)
        per_player = []
        for i in range(game.m):
            tr = run.transcript(i)
            transcripts[f"_p{i}"] = tr
            per_player.append(_regret_summary(tr, cfg.top_k))
        gaps = ce_gap(game, run.distribution)
        summary["T"] = run.params.T
        summary["params"] = dataclasses.asdict(run.params)
        summary["players"] = per_player
        summary["ext_regret"] = max(p["ext_regret"] for p in per_player)
        summary["swap_regret"] = max(p["swap_regret"] for p in per_player)
        summary["ce_gap"] = gaps.tolist()
        summary["cce_gap"] = cce_gap(game, run.distribution).tolist()
        summary["sparsity"] = run.distribution.sparsity
        summary["ledger"] = run.ledger.to_json()
        _dump_json(out / f"{tag}_equilibrium.json", equilibrium_json(run.distribution, gaps, run.ledger))

    for suffix, tr in transcripts.items():
        write_transcript_csv(out / f"{tag}_transcript{suffix}.csv", tr)
        _write_trajectory(out / f"{tag}_trajectory{suffix}.csv", tr)
    _dump_json(out / f"{tag}_summary.json", summary)
    # timing lives in its own file so the summary stays byte-identical across reruns
    _dump_json(out / f"{tag}_timing.json", {"wall_time": time.perf_counter() - started})
    return summary


def run(cfg: ExperimentConfig) -> List[dict]:
    cfg.validate()
    if cfg.workers > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            summaries = list(pool.map(run_seed, [cfg] * len(cfg.seeds), cfg.seeds))
    else:
        summaries = [run_seed(cfg, s) for s in cfg.seeds]
    swaps = [s["swap_regret"] for s in summaries]
    _dump_json(
        Path(cfg.out_dir) / "aggregate.json",
        {"seeds": list(cfg.seeds), "swap_regret": swaps, "mean_swap_regret": float(np.mean(swaps))},
    )
    return summaries


# ---------------------------------------------------------------------------
# benchmark


def time_treeswap(N: int, T: int, M: int = 4, seed: int = 0) -> float:
    """Wall time of one TreeSwap(MWU) run against i.i.d. uniform rewards."""
    learner = TreeSwap(N, T, M)
    adversary = IIDUniformAdversary(N, seed=seed)
    start = time.perf_counter()
    f = None
    for _ in range(T):
        x = learner.round(f)
        f = adversary.respond(x)
    return time.perf_counter() - start


def bench(N: int = 1024, T: int = 4096, M: int = 4, trials: int = 5, seed: int = 0) -> dict:
    """Median-of-``trials`` wall times for (N, T), (N, 2T) and (2N, T)."""

    def median(n, t):
        return statistics.median(time_treeswap(n, t, M, seed + k) for k in range(trials))

    base = median(N, T)
    double_t = median(N, 2 * T)
    double_n = median(2 * N, T)
    return {
        "N": N,
        "T": T,
        "M": M,
        "trials": trials,
        "time_base": base,
        "time_double_T": double_t,
        "time_double_N": double_n,
        "ratio_T": double_t / base,
        "ratio_N": double_n / base,
    }


# ---------------------------------------------------------------------------
# argument parsing


def _config_from_args(args) -> ExperimentConfig:
    obj = {}
    if args.config:
        obj.update(load_json(args.config))
    for name in ("mode", "learner", "M", "d", "eta", "adversary", "N", "T", "eps", "delta", "C", "players", "game",
                 "out_dir", "gamma_variant", "cap_T", "top_k", "workers"):
        val = getattr(args, name)
        if val is not None:
            obj[name] = val
    if args.l1_scaled:
        obj["l1_scaled"] = True
    if args.seeds is not None:
        obj["seeds"] = args.seeds
    elif args.seed is not None:
        obj["seeds"] = [args.seed]
    return ExperimentConfig.from_dict(obj)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swapregret", description="Swap-regret experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment for one or more seeds")
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--learner", choices=LEARNERS)
    p.add_argument("--adversary", choices=ADVERSARIES)
    p.add_argument("--M", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--C", type=float)
    p.add_argument("--players", type=int)
    p.add_argument("--game")
    p.add_argument("--gamma-variant", dest="gamma_variant", choices=("M", "T"))
    p.add_argument("--cap-T", dest="cap_T", type=int)
    p.add_argument("--l1-scaled", dest="l1_scaled", action="store_true")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--workers", type=int)

    b = sub.add_parser("bench", help="time TreeSwap(MWU) at (N, T), (N, 2T) and (2N, T)")
    b.add_argument("--N", type=int, default=1024)
    b.add_argument("--T", type=int, default=4096)
    b.add_argument("--M", type=int, default=4)
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", help="write the report as JSON here")

    v = sub.add_parser("verify", help="print CE/CCE gaps of an equilibrium JSON for a game JSON")
    v.add_argument("--game", required=True)
    v.add_argument("--equilibrium", required=True)

    a = sub.add_parser("dump-adversary", help="write the oblivious tree schedule as CSV")
    a.add_argument("--N", type=int, required=True)
    a.add_argument("--T", type=int, required=True)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--l1-scaled", dest="l1_scaled", action="store_true")
    a.add_argument("--out", required=True)
    return parser


def _dispatch(args) -> int:
    if args.command == "run":
        summaries = run(_config_from_args(args))
        for s in summaries:
            print(f"seed {s['seed']}: ext_regret={s['ext_regret']:.6g} swap_regret={s['swap_regret']:.6g}")
    elif args.command == "bench":
        if args.N < 1 or args.T < 1 or args.trials < 1:
            raise InvalidInput("bench needs N, T, trials >= 1")
        report = bench(args.N, args.T, args.M, args.trials, args.seed)
        text = json.dumps(report, indent=2, sort_keys=True)
        if args.out:
            Path(args.out).write_text(text + "\n")
        print(text)
    elif args.command == "verify":
        for path in (args.game, args.equilibrium):
            if not Path(path).is_file():
                raise InvalidInput(f"file not found: {path}")
        game = NormalFormGame.from_json(load_json(args.game))
        mu = CorrelatedDistribution.from_json(load_json(args.equilibrium)["support"])
        print(json.dumps({"ce_gap": ce_gap(game, mu).tolist(), "cce_gap": cce_gap(game, mu).tolist()}))
    else:
        ObliviousTreeAdversary(args.N, args.T, seed=args.seed, l1_scaled=args.l1_scaled).dump_csv(args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (InvalidInput, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SwapRegretError, Exception) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
