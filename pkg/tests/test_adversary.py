from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osqbc import adversary, codes, protocol
from osqbc.adversary import DEFENSE_OFF, DEFENSE_ON, ProbeOutcome
from osqbc.protocol import HonestAlice, HonestBob, ProtocolParams

H7 = codes.make_code("hamming7")
R = (1, 0, 0, 0, 0, 0, 0)


def _flip_run(alpha, rng, code=H7, abort=True):
    params = ProtocolParams.for_code(code, s=50 * code.n, alpha=alpha, alpha_abort=abort)
    tr = protocol.run_commit(params, code, HonestAlice(0), HonestBob(), rng, r=R[: code.n] if code is H7 else None)
    if tr.aborted:
        return None, None
    ann = adversary.alice_flip_attack(tr, code, tr.r, 1)
    return protocol.run_unveil(tr, ann, code, tr.r), ann


def test_flip_alpha_zero_always_escapes():
    rng = np.random.default_rng(0)
    for _ in range(50):
        v, ann = _flip_run(0.0, rng)
        assert v.accepted and ann.b == 1


def test_flip_alpha_one_always_caught():
    rng = np.random.default_rng(1)
    for _ in range(50):
        v, _ = _flip_run(1.0, rng, abort=False)
        assert v.reason == protocol.STATE_MISMATCH


def test_flip_escape_hamming7_half():
    rng = np.random.default_rng(2)
    trials = 10_000
    params = ProtocolParams.for_code(H7, s=350, alpha=0.5, alpha_abort=False)
    hits = 0
    for _ in range(trials):
        tr = protocol.run_commit(params, H7, HonestAlice(0), HonestBob(), rng, r=R)
        ann = adversary.alice_flip_attack(tr, H7, R, 1)
        assert codes.hamming_distance(tr.committed[0], ann.c) == 3
        hits += protocol.run_unveil(tr, ann, H7, R).accepted
    assert abs(hits / trials - 1 / 8) <= 3 * math.sqrt((1 / 8) * (7 / 8) / trials)


@given(st.lists(st.integers(0, 1), min_size=7, max_size=7), st.lists(st.integers(0, 1), min_size=7, max_size=7),
       st.floats(0, 1))
def test_flip_escape_formula(c, c2, alpha):
    dist = sum(a != b for a, b in zip(c, c2))
    assert adversary.flip_escape_probability(c, c2, alpha) == pytest.approx((1 - alpha) ** dist)


def test_superposed_single_codeword_is_honest():
    c = codes.sample_codeword(H7, R, 1, np.random.default_rng(0))
    sc = adversary.superposed_commit(H7, {c: 1.0})
    assert adversary.unveil_probabilities(sc, R) == (0.0, 1.0)
    params = ProtocolParams.for_code(H7, s=350, alpha=0.3)
    tr = protocol.run_commit(params, H7, adversary.SuperposedAlice(sc), HonestBob(), np.random.default_rng(1), r=R)
    ann = protocol.honest_announcement(tr, np.random.default_rng(2))
    assert ann.c == c and protocol.run_unveil(tr, ann, H7, R).accepted


def test_uniform_superposition_half():
    p0, p1 = adversary.unveil_probabilities(adversary.uniform_superposition(H7), R)
    assert p0 == pytest.approx(0.5) and p1 == pytest.approx(0.5)


def test_superposed_commit_validation():
    with pytest.raises(adversary.AttackError):
        adversary.superposed_commit(H7, {(0,) * 7: 0.5})
    with pytest.raises(adversary.AttackError):
        adversary.superposed_commit(H7, {(1,) + (0,) * 6: 1.0})


def test_collapse():
    sc = adversary.uniform_superposition(H7)
    post = adversary.collapse_on_intercept(sc, 0, 1)
    assert all(c[0] == 1 for c in post.lambdas)
    words = [w for w in codes.all_codewords(H7) if w[0] == 1]
    expect1 = sum(codes.dot_parity(w, R) for w in words) / len(words)
    assert adversary.unveil_probabilities(post, R)[1] == pytest.approx(expect1)
    full = sc
    target = codes.all_codewords(H7)[5]
    for i, bit in enumerate(target):
        full = adversary.collapse_on_intercept(full, i, bit)
    assert list(full.lambdas) == [target]
    assert adversary.unveil_probabilities(full, R) in ((1.0, 0.0), (0.0, 1.0))
    single = adversary.superposed_commit(H7, {target: 1.0})
    with pytest.raises(adversary.AttackError):
        adversary.collapse_on_intercept(single, 0, 1 - target[0])


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.lists(st.tuples(st.integers(0, 6), st.integers(0, 1)), max_size=7))
def test_normalization_survives_collapses(seed, steps):
    rng = np.random.default_rng(seed)
    sc = adversary.random_superposition(H7, rng)
    r = codes.draw_partition_key(H7, rng)
    for pos, bit in steps:
        if not any(c[pos] == bit for c in sc.lambdas):
            continue
        sc = adversary.collapse_on_intercept(sc, pos, bit)
        p0, p1 = adversary.unveil_probabilities(sc, r)
        assert abs(p0 + p1 - 1) <= 1e-12


def test_sample_unveils_frequency():
    rng = np.random.default_rng(3)
    sc = adversary.random_superposition(H7, rng)
    p0, p1 = adversary.unveil_probabilities(sc, R)
    bs = adversary.sample_unveils(sc, R, rng, 10_000)
    assert abs(bs.mean() - p1) <= 3 * math.sqrt(p0 * p1 / 10_000)


def test_over_intercept():
    rng = np.random.default_rng(4)
    params = ProtocolParams.for_code(H7, s=350, alpha=0.2)
    tr = protocol.run_commit(params, H7, HonestAlice(0), adversary.bob_over_intercept(0.0), rng)
    assert tr.n_prime == 7 and tr.alpha_estimate == 0 and tr.bob_view() == {}
    with pytest.raises(adversary.AttackError):
        adversary.bob_over_intercept(1.5)


def test_over_intercept_abort_curve_crosses_threshold():
    params = ProtocolParams.for_code(H7, s=5000, alpha=0.2)
    rates = {}
    for a in (0.3, 0.5, 0.65, 0.9):
        rng = np.random.default_rng(int(a * 100))
        runs = [protocol.run_commit(params, H7, HonestAlice(0), adversary.bob_over_intercept(a), rng) for _ in range(100)]
        rates[a] = np.mean([t.aborted is not None for t in runs])
    assert rates[0.3] == 0 and rates[0.5] == 0 and rates[0.65] == 1 and rates[0.9] == 1


def test_probe_distribution_follows_optics():
    assert adversary.probe_distribution(False) == pytest.approx({"Dc": 1, "Dd": 0, "none": 0})
    assert adversary.probe_distribution(True) == pytest.approx({"Dc": 0, "Dd": 1, "none": 0})
    for phi in np.linspace(0, 2 * math.pi, 13):
        assert adversary.probe_distribution(False, phi)["Dc"] == pytest.approx(math.cos(phi / 2) ** 2)


def test_counterfactual_probe_modes():
    rng = np.random.default_rng(5)
    assert all(adversary.counterfactual_probe(False, DEFENSE_OFF, rng).result == "Dc" for _ in range(100))
    assert all(adversary.counterfactual_probe(True, DEFENSE_OFF, rng).result == "Dd" for _ in range(100))
    hits = sum(adversary.counterfactual_probe(False, DEFENSE_ON, rng).result == "Dc" for _ in range(10_000))
    assert abs(hits / 10_000 - 0.5) <= 3 * 0.005


def test_infer_mode():
    dc, dd = ProbeOutcome("Dc"), ProbeOutcome("Dd")
    assert adversary.infer_mode([dc], 0.5, DEFENSE_ON) == [1.0]
    assert adversary.infer_mode([dd], 0.5, DEFENSE_OFF) == [0.0]
    # P(Dd | bypass) = 1/2, P(Dd | intercept) = 1: posterior of bypass = 0.25 / 0.75
    assert adversary.infer_mode([dd], 0.5, DEFENSE_ON)[0] == pytest.approx(1 / 3)
    like = adversary.averaged_probe_likelihood(False, DEFENSE_ON)
    assert like["Dc"] == pytest.approx(0.5, abs=1e-12)


def test_counterfactual_attack_without_defense_knows_modes():
    params = ProtocolParams.for_code(H7, s=350, alpha=0.3)
    tr = protocol.run_commit(params, H7, adversary.CounterfactualAlice(0), HonestBob(), np.random.default_rng(6))
    for i, t in enumerate(tr.send_times):
        assert (tr.probe_outcomes[i] == "Dc") == (not tr.bob_modes[t - 1])
    ann = adversary.counterfactual_announcement(tr, H7, tr.r, 1)
    risky = [i for i in tr.intercepted_positions() if ann.c[i] != tr.committed[0][i]]
    nearest = codes.nearest_in_subset(H7, tr.committed[0], tr.r, 1)
    assert len(risky) <= sum(nearest[i] != tr.committed[0][i] for i in tr.intercepted_positions())


def test_certain_bypass_with_defense_never_intercept():
    params = ProtocolParams.for_code(H7, s=350, alpha=0.4)
    bob = HonestBob(defense=DEFENSE_ON)
    rng = np.random.default_rng(7)
    for _ in range(100):
        tr = protocol.run_commit(params, H7, adversary.CounterfactualAlice(1), bob, rng)
        for i in adversary.certain_bypass_positions(tr):
            assert not tr.bob_modes[tr.send_times[i] - 1]


def test_defense_phases_shape():
    ph = DEFENSE_ON.draw_phases(100, np.random.default_rng(0))
    assert ph.shape == (100,) and ph.min() >= 0 and ph.max() < 2 * math.pi


def test_posterior_bias_small_views():
    assert adversary.posterior_bias(H7, R, [], []) == 0
    # position 0 equals b when r = e_0
    assert adversary.posterior_bias(H7, R, [0], [0]) == Fraction(1, 2)


def test_bias_zero_below_coset_weight():
    keys = [r for r in codes.iter_bitstrings(7) if any(r) and any(codes.dot_parity(g, r) for g in H7.generator)]
    rng = np.random.default_rng(8)
    for idx in rng.choice(len(keys), size=12, replace=False):
        r = keys[idx]
        w = adversary.revealing_coset_weight(H7, r)
        assert adversary.first_revealing_size(H7, r) == w
        for j in range(w):
            assert adversary.max_view_bias(H7, r, j) == 0


def test_coset_weight_distribution_hamming7():
    keys = [r for r in codes.iter_bitstrings(7) if any(r) and any(codes.dot_parity(g, r) for g in H7.generator)]
    weights = sorted(adversary.revealing_coset_weight(H7, r) for r in keys)
    assert len(keys) == 120
    assert {w: weights.count(w) for w in set(weights)} == {1: 56, 2: 56, 3: 8}


def test_consistent():
    tr = protocol.run_commit(ProtocolParams.for_code(H7, s=350, alpha=0.5), H7, HonestAlice(0), HonestBob(),
                             np.random.default_rng(9))
    assert adversary.consistent(tr, tr.committed[0])
