import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swapregret.core import (
    InvalidInput,
    SwapAccumulator,
    Transcript,
    as_mixed_action,
    as_reward_vector,
    base_m_digits,
    ceil_log,
    ext_regret,
    random_transcript,
    read_transcript_csv,
    spawn_rng,
    swap_regret,
    write_transcript_csv,
)


def brute_swap(tr: Transcript) -> float:
    """Max over all N^N swap functions, evaluated round by round."""
    N, T = tr.n_actions, tr.horizon
    best = -np.inf
    for pi in itertools.product(range(N), repeat=N):
        total = 0.0
        for t in range(T):
            x, f = tr.plays[t], tr.rewards[t]
            moved = np.zeros(N)
            for i in range(N):
                moved[pi[i]] += x[i]
            total += moved @ f - x @ f
        best = max(best, total / T)
    return best


def loop_ext(tr: Transcript) -> float:
    # action-major loop order, deliberately different from the library
    T, N = tr.horizon, tr.n_actions
    earned = sum(tr.plays[t, i] * tr.rewards[t, i] for i in range(N) for t in range(T))
    best = max(sum(tr.rewards[t, j] for t in range(T)) for j in range(N))
    return (best - earned) / T


@st.composite
def transcripts(draw, max_n=6, max_t=12):
    n = draw(st.integers(1, max_n))
    T = draw(st.integers(1, max_t))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_transcript(np.random.default_rng(seed), n, T)


# ---------------------------------------------------------------------------
# validation


def test_mixed_action_renormalizes():
    p = as_mixed_action([0.5, 0.5 + 5e-10])
    assert p.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("bad", [[0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0], [[0.5, 0.5]], []])
def test_mixed_action_rejects(bad):
    with pytest.raises(InvalidInput):
        as_mixed_action(bad)


def test_reward_vector_range():
    with pytest.raises(InvalidInput, match="reward out of range"):
        as_reward_vector([0.2, 1.5])
    assert as_reward_vector([-1.0, 1.0], lo=-1.0).tolist() == [-1.0, 1.0]


def test_transcript_rejects_malformed():
    with pytest.raises(InvalidInput, match="malformed transcript"):
        Transcript(np.ones((3, 2)) / 2, np.zeros((3, 3)))
    with pytest.raises(InvalidInput, match="malformed transcript"):
        Transcript(np.array([[0.7, 0.7]]), np.zeros((1, 2)))


def test_empty_transcript_errors():
    tr = Transcript(np.zeros((0, 3)), np.zeros((0, 3)))
    with pytest.raises(InvalidInput, match="empty transcript"):
        ext_regret(tr)
    with pytest.raises(InvalidInput, match="empty transcript"):
        swap_regret(tr)


# ---------------------------------------------------------------------------
# regret oracles


def test_swap_single_round_point_mass():
    tr = Transcript.from_actions([0], [[0.0, 1.0]])
    rep = swap_regret(tr)
    assert rep.swap_regret == 1.0
    assert rep.best_swap == {0: 1, 1: 0}


def test_swap_zero_for_constant_rewards():
    rng = np.random.default_rng(2)
    tr = Transcript(rng.dirichlet(np.ones(4), size=10), np.full((10, 4), 0.3))
    assert swap_regret(tr).swap_regret == pytest.approx(0.0, abs=1e-15)
    assert ext_regret(tr) == pytest.approx(0.0, abs=1e-15)


def test_ties_go_to_lowest_index():
    tr = Transcript.from_actions([2, 2], [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
    assert swap_regret(tr).best_swap[2] == 0


def test_ext_matches_loop_order():
    tr = random_transcript(np.random.default_rng(7), 4, 16)
    assert ext_regret(tr) == pytest.approx(loop_ext(tr), abs=1e-12)


def test_swap_matches_brute_force_example():
    tr = random_transcript(np.random.default_rng(11), 3, 5)
    assert swap_regret(tr).swap_regret == pytest.approx(brute_swap(tr), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(transcripts(max_n=4, max_t=6))
def test_swap_equals_enumeration(tr):
    assert swap_regret(tr).swap_regret == pytest.approx(brute_swap(tr), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(transcripts())
def test_regret_invariants(tr):
    e, s = ext_regret(tr), swap_regret(tr).swap_regret
    assert e <= s
    assert s >= 0
    assert e >= -1.0


@settings(max_examples=100, deadline=None)
@given(transcripts(), st.integers(0, 2**32 - 1))
def test_swap_permutation_invariant(tr, seed):
    perm = np.random.default_rng(seed).permutation(tr.horizon)
    shuffled = Transcript(tr.plays[perm], tr.rewards[perm])
    assert swap_regret(shuffled).swap_regret == pytest.approx(swap_regret(tr).swap_regret, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(transcripts(), st.floats(0.1, 3.0), st.floats(-2.0, 2.0))
def test_affine_remap_scales_regret(tr, a, b):
    mapped = tr.remapped(a, b, reward_range=(-10.0, 10.0))
    assert swap_regret(mapped).swap_regret == pytest.approx(a * swap_regret(tr).swap_regret, abs=1e-9)
    assert ext_regret(mapped) == pytest.approx(a * ext_regret(tr), abs=1e-9)


def test_accumulator_matches_batch():
    tr = random_transcript(np.random.default_rng(5), 6, 30)
    acc = SwapAccumulator(6)
    for t in range(tr.horizon):
        acc.add(tr.plays[t], tr.rewards[t])
        pre = tr.prefix(t + 1)
        assert acc.swap_report().swap_regret == pytest.approx(swap_regret(pre).swap_regret, abs=1e-12)
        assert acc.ext_regret() == pytest.approx(ext_regret(pre), abs=1e-12)


def test_accumulator_bandit_path():
    tr = random_transcript(np.random.default_rng(5), 5, 20, bandit=True)
    acc = SwapAccumulator(5)
    for a, f in zip(tr.actions, tr.rewards):
        acc.add_action(a, f)
    assert acc.swap_report().swap_regret == pytest.approx(swap_regret(tr).swap_regret, abs=1e-12)


def test_top_gains_sorted():
    tr = random_transcript(np.random.default_rng(1), 6, 20)
    gains = [g["gain"] for g in swap_regret(tr).top_gains(3)]
    assert gains == sorted(gains, reverse=True)
    assert len(gains) == 3


# ---------------------------------------------------------------------------
# numeric helpers


def test_base_m_digits():
    assert base_m_digits(0, 3, 2) == (0, 0)
    assert base_m_digits(8, 3, 2) == (2, 2)
    assert base_m_digits(5, 2, 3) == (1, 0, 1)
    with pytest.raises(InvalidInput, match="address overflow"):
        base_m_digits(9, 3, 2)


@given(st.integers(2, 9), st.integers(1, 6), st.data())
def test_base_m_digits_roundtrip(m, d, data):
    v = data.draw(st.integers(0, m**d - 1))
    digits = base_m_digits(v, m, d)
    assert sum(dig * m ** (d - 1 - i) for i, dig in enumerate(digits)) == v


def test_ceil_log():
    assert ceil_log(1, 4) == 1
    assert ceil_log(4, 4) == 1
    assert ceil_log(5, 4) == 2
    assert ceil_log(1024, 4) == 5
    assert ceil_log(4096, 26) == 3


def test_spawn_rng_streams_independent_and_stable():
    a1 = spawn_rng(3, "adversary").random(4)
    a2 = spawn_rng(3, "adversary").random(4)
    b = spawn_rng(3, "learner").random(4)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)


# ---------------------------------------------------------------------------
# CSV


@pytest.mark.parametrize("bandit", [False, True])
def test_csv_roundtrip_exact(tmp_path, bandit):
    tr = random_transcript(np.random.default_rng(4), 3, 9, bandit=bandit)
    path = tmp_path / "tr.csv"
    write_transcript_csv(path, tr)
    back = read_transcript_csv(path)
    assert np.array_equal(back.plays, tr.plays)
    assert np.array_equal(back.rewards, tr.rewards)
    assert back.is_bandit == bandit
