import json

import numpy as np
import pytest

from swapregret.cli import ExperimentConfig, bench, main, run, trajectory_rows
from swapregret.core import InvalidInput, ext_regret, random_transcript, read_transcript_csv, swap_regret
from swapregret.games import NormalFormGame


def read_json(path):
    return json.loads(path.read_text())


def test_constant_mwu_zero_swap(tmp_path):
    cfg = ExperimentConfig(mode="full_info", learner="mwu", adversary="constant", N=4, T=30, out_dir=str(tmp_path))
    (summary,) = run(cfg)
    assert summary["swap_regret"] == 0.0
    assert read_json(tmp_path / "seed0_summary.json")["swap_regret"] == 0.0


def test_rerun_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"r{k}"
        assert main(["run", "--mode", "full_info", "--N", "6", "--T", "40", "--seed", "3", "--out-dir", str(d)]) == 0
        outs.append({p.name: p.read_bytes() for p in d.iterdir() if "timing" not in p.name})
    assert outs[0] == outs[1]
    assert {"seed3_summary.json", "seed3_transcript.csv", "seed3_trajectory.csv", "aggregate.json"} <= set(outs[0])


@pytest.mark.parametrize(
    "args",
    [
        ["--mode", "full_info", "--adversary", "best_response_last", "--N", "5", "--T", "27", "--M", "3"],
        ["--mode", "lowerbound", "--adversary", "oblivious_tree", "--N", "30", "--T", "64", "--learner", "mwu"],
        ["--mode", "lowerbound", "--adversary", "adaptive", "--N", "30", "--T", "32"],
        ["--mode", "bandit", "--N", "4", "--T", "30", "--M", "2"],
    ],
)
def test_transcripts_reverify(tmp_path, args):
    assert main(["run", *args, "--seeds", "0", "1", "--out-dir", str(tmp_path)]) == 0
    for seed in (0, 1):
        summary = read_json(tmp_path / f"seed{seed}_summary.json")
        tr = read_transcript_csv(tmp_path / f"seed{seed}_transcript.csv")
        assert swap_regret(tr).swap_regret == pytest.approx(summary["swap_regret"], abs=1e-9)
        assert ext_regret(tr) == pytest.approx(summary["ext_regret"], abs=1e-9)


def test_selfplay_modes_and_verify(tmp_path, capsys):
    game = NormalFormGame.random(2, 3, np.random.default_rng(0))
    gpath = tmp_path / "game.json"
    gpath.write_text(json.dumps(game.to_json()))
    for mode in ("selfplay_comm", "selfplay_query"):
        out = tmp_path / mode
        code = main(["run", "--mode", mode, "--game", str(gpath), "--eps", "0.5", "--cap-T", "50", "--out-dir", str(out)])
        assert code == 0
        summary = read_json(out / "seed0_summary.json")
        eq = out / "seed0_equilibrium.json"
        capsys.readouterr()
        assert main(["verify", "--game", str(gpath), "--equilibrium", str(eq)]) == 0
        printed = json.loads(capsys.readouterr().out)
        assert printed["ce_gap"] == pytest.approx(summary["ce_gap"], abs=1e-12)
        assert max(summary["ce_gap"]) == pytest.approx(summary["swap_regret"], abs=1e-9)
        eqj = read_json(eq)
        assert set(eqj) == {"support", "ce_gap", "ledger"}
        assert set(eqj["ledger"]) == {"queries", "comm_bits"}


def test_trajectory_cadence(tmp_path):
    main(["run", "--mode", "full_info", "--N", "3", "--T", "600", "--out-dir", str(tmp_path)])
    rows = (tmp_path / "seed0_trajectory.csv").read_text().strip().splitlines()
    ts = [int(r.split(",")[0]) for r in rows[1:]]
    assert ts[:3] == [3, 6, 9] and ts[-1] == 600


def test_trajectory_rows_exact():
    tr = random_transcript(np.random.default_rng(0), 4, 20)
    for t, e, s in trajectory_rows(tr, 7):
        assert s == pytest.approx(swap_regret(tr.prefix(t)).swap_regret, abs=1e-12)
        assert e == pytest.approx(ext_regret(tr.prefix(t)), abs=1e-12)


def test_config_file_and_flags_merge(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"mode": "full_info", "N": 4, "T": 16, "learner": "mwu", "seeds": [1, 2]}))
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg_path), "--T", "8", "--out-dir", str(out)]) == 0
    assert read_json(out / "seed2_summary.json")["T"] == 8


def test_workers_match_serial(tmp_path):
    base = ["run", "--mode", "full_info", "--N", "4", "--T", "20", "--seeds", "0", "1", "2"]
    main(base + ["--out-dir", str(tmp_path / "a")])
    main(base + ["--workers", "2", "--out-dir", str(tmp_path / "b")])
    for s in range(3):
        name = f"seed{s}_summary.json"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_validation_exit_codes(tmp_path, capsys):
    assert main(["run", "--eps", "2.0", "--out-dir", str(tmp_path)]) == 2
    assert main(["run", "--game", str(tmp_path / "missing.json"), "--mode", "selfplay_comm"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"mode": "full_info", "bogus": 1}))
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["run", "--mode", "lowerbound", "--adversary", "adaptive", "--N", "10", "--T", "32", "--out-dir", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as info:
        main(["run", "--mode", "nonsense"])
    assert info.value.code == 2


def test_runtime_exit_code(tmp_path):
    # output dir under a regular file cannot be created
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--N", "3", "--T", "4", "--out-dir", str(blocker / "sub")]) == 3


def test_config_validation():
    with pytest.raises(InvalidInput):
        ExperimentConfig(mode="bad").validate()
    with pytest.raises(InvalidInput):
        ExperimentConfig(seeds=[]).validate()
    ExperimentConfig().validate()


def test_dump_adversary(tmp_path):
    out = tmp_path / "adv.csv"
    assert main(["dump-adversary", "--N", "14", "--T", "4", "--seed", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,action,reward"
    assert len(lines) == 1 + 4 * 2


def test_bench_trivial(tmp_path, capsys):
    report = bench(N=4, T=1, trials=1)
    assert report["time_base"] > 0
    assert main(["bench", "--N", "8", "--T", "16", "--trials", "1", "--out", str(tmp_path / "b.json")]) == 0
    assert read_json(tmp_path / "b.json")["ratio_T"] > 0
