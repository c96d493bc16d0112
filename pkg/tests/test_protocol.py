import math

import numpy as np
import pytest

from onesided.nounder import NoUnderSketch
from onesided.protocol import (
    ABORT,
    C_THRESHOLD,
    NO,
    YES,
    DisjInstance,
    ExactCounter,
    empirical_entropy,
    geometric_entropy,
    nounder_factory,
    plant_yes,
    players_for,
    run_protocol,
    sample_eta0,
    threshold,
    yes_overlap,
)

N, P = 64, 2
EPS = 0.25
K = players_for(N, P, EPS)
L = yes_overlap(K)


def small_sketch(seed):
    # deliberately undersized so that restarts actually happen
    return NoUnderSketch(N, P, EPS, seed=seed, k=64, t=1)


def test_parameters():
    assert C_THRESHOLD == math.e / 4
    assert K == 8 and L == 6
    assert players_for(64, 2, 0.125) == 4 and yes_overlap(4) == 3
    assert threshold(8) == pytest.approx(2 * math.e)


def test_eta0_is_no_instance_and_reproducible():
    inst = sample_eta0(N, K, seed=3)
    inst.validate()
    assert inst.case == NO
    assert inst.column_sums().max() <= 1
    assert np.all(inst.X[inst.D, np.arange(N)] == inst.X.sum(axis=0))
    again = sample_eta0(N, K, seed=3)
    assert np.array_equal(inst.X, again.X) and np.array_equal(inst.D, again.D)
    with pytest.raises(ValueError):
        sample_eta0(N, 1)


def test_eta0_bit_frequency():
    inst = sample_eta0(10_000, 5, seed=11)
    ones = inst.X.sum()
    sigma = math.sqrt(10_000 * 0.25)
    assert abs(ones - 5_000) <= 3 * sigma
    assert np.all(np.bincount(inst.D, minlength=5) > 0)


def test_plant_yes():
    inst = plant_yes(N, K, L, 17, seed=4)
    inst.validate()
    sums = inst.column_sums()
    assert sums[17] == L
    assert np.delete(sums, 17).max() <= 1
    rest = DisjInstance(N - 1, K, L, NO, np.delete(inst.X, 17, axis=1))
    rest.validate()
    for bad in (1, 0, K + 1):
        with pytest.raises(ValueError):
            plant_yes(N, K, bad, 0)
    with pytest.raises(ValueError):
        plant_yes(N, K, L, N)


def test_instance_validation():
    X = np.zeros((2, 3), dtype=int)
    X[:, 0] = 1
    with pytest.raises(ValueError):
        DisjInstance(3, 2, 2, NO, X).validate()
    with pytest.raises(ValueError):
        DisjInstance(3, 2, 2, "MAYBE", X)
    with pytest.raises(ValueError):
        DisjInstance(3, 3, 2, NO, X)


def test_exact_counter_one_round():
    algo = lambda seed: ExactCounter(N)
    for s in range(20):
        for inst in (sample_eta0(N, K, s), plant_yes(N, K, L, s, s)):
            tr = run_protocol(inst, algo, EPS, P, seed=s)
            assert tr.answer == inst.case and tr.rounds == 1


def accounting_ok(tr, inst, state_bits, passes=1):
    k = inst.k
    lo = tr.rounds * k
    hi = tr.rounds * k * state_bits * passes + tr.rounds * (k + math.ceil(math.log2(inst.n)))
    return lo <= tr.bits <= hi and tr.bits == sum(p.bits for p in tr.trace)


def test_nounder_always_correct():
    algo = nounder_factory(N, P, EPS)
    bits = algo(0).state_bits()
    for s in range(100):
        for inst in (sample_eta0(N, K, s, L), plant_yes(N, K, L, (7 * s) % N, s)):
            tr = run_protocol(inst, algo, EPS, P, seed=s)
            assert tr.answer == inst.case
            assert accounting_ok(tr, inst, bits)


def test_restarts_keep_answers_correct():
    bits = small_sketch(0).state_bits()
    rounds = []
    for s in range(150):
        for inst in (sample_eta0(N, K, s, L), plant_yes(N, K, L, s % N, s)):
            tr = run_protocol(inst, small_sketch, EPS, P, seed=s)
            assert tr.answer == inst.case
            assert accounting_ok(tr, inst, bits)
            restarts = [p for p in tr.trace if p.kind == "restart"]
            assert len(restarts) == tr.rounds - 1
            rounds.append(tr.rounds)
    assert max(rounds) > 1


def test_round_entropy_below_geometric():
    rounds = []
    for s in range(5000):
        inst = sample_eta0(N, K, s, L) if s % 2 else plant_yes(N, K, L, s % N, s)
        rounds.append(run_protocol(inst, small_sketch, EPS, P, seed=s).rounds)
    rate = 1 / np.mean(rounds)
    assert empirical_entropy(rounds) <= geometric_entropy(rate) + 0.2


def test_passes_multiply_state_posts():
    inst = sample_eta0(N, K, 1, L)
    one = run_protocol(inst, lambda s: ExactCounter(N), EPS, P, passes=1)
    two = run_protocol(inst, lambda s: ExactCounter(N), EPS, P, passes=2)
    assert one.answer == two.answer == NO
    states = lambda tr: sum(p.bits for p in tr.trace if p.kind == "state")
    assert states(two) == 2 * states(one)


class Liar:
    """Overestimates every coordinate, so every round has n candidates."""

    def __init__(self, n):
        self.n = n

    def update(self, item, delta=1):
        pass

    def estimate_all(self):
        return np.full(self.n, 1e9)

    def state_bits(self):
        return 1


def test_abort_after_max_restarts():
    tr = run_protocol(sample_eta0(N, K, 0, L), lambda s: Liar(N), EPS, P, max_restarts=5)
    assert tr.answer == ABORT and tr.aborted and tr.rounds == 5


def test_default_max_restarts_is_64k():
    tr = run_protocol(sample_eta0(N, K, 0, L), lambda s: Liar(N), EPS, P)
    assert tr.rounds == 64 * K


def test_parameter_checks():
    inst = sample_eta0(N, K, 0, L)
    algo = nounder_factory(N, P, EPS)
    with pytest.raises(ValueError):
        run_protocol(inst, algo, 0.3, P)  # 4*0.3*8 rounds to 10 players
    with pytest.raises(ValueError):
        lone = DisjInstance(N, 1, 2, NO, np.zeros((1, N)))
        run_protocol(lone, algo, 1 / 32, P)  # one player: c*k <= 1
    with pytest.raises(ValueError):
        run_protocol(plant_yes(N, K, 3, 0, 0), algo, EPS, P)  # l below c*k
    with pytest.raises(ValueError):
        run_protocol(inst, algo, 1.0, P)


class FlagFive(ExactCounter):
    def estimate_all(self):
        out = super().estimate_all()
        out[5] += 100
        return out


def test_promise_violation_detected():
    X = np.zeros((K, N), dtype=int)
    X[:3, 5] = 1  # column sums to 3: neither 0/1 nor >= c*k
    inst = DisjInstance(N, K, L, NO, X)
    with pytest.raises(ValueError):
        run_protocol(inst, lambda s: FlagFive(N), EPS, P)


def test_geometric_entropy():
    assert geometric_entropy(0.5) == 2.0
    assert geometric_entropy(1) == 0.0
    assert geometric_entropy(2 / 3) == pytest.approx(1.377, abs=5e-4)
    for bad in (0, -0.5, 1.5):
        with pytest.raises(ValueError):
            geometric_entropy(bad)


def test_geometric_entropy_matches_series():
    # independent oracle: sum -P(R=r) log2 P(R=r) directly
    for p in (0.2, 0.5, 0.9):
        r = np.arange(1, 2000)
        pr = p * (1 - p) ** (r - 1)
        pr = pr[pr > 0]
        assert geometric_entropy(p) == pytest.approx(float(-(pr * np.log2(pr)).sum()), rel=1e-9)


def test_empirical_entropy():
    assert empirical_entropy([1, 1, 1]) == 0.0
    assert empirical_entropy([1, 2, 1, 2]) == 1.0
