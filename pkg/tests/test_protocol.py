from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osqbc import adversary, codes, protocol
from osqbc.optics import Outcome
from osqbc.protocol import HonestAlice, HonestBob, ProtocolParams

H7 = codes.make_code("hamming7")
P350 = ProtocolParams.for_code(H7, s=350, alpha=0.2)


def test_params_validation():
    with pytest.raises(ValueError):
        ProtocolParams(n=7, k=4, d=3, s=7, alpha=0.2)
    with pytest.raises(ValueError):
        ProtocolParams(n=7, k=4, d=3, s=350, alpha=1.5)
    with pytest.raises(ValueError):
        ProtocolParams(n=5, k=1, d=5, s=250, alpha=0.2)  # abort rule needs n > k > d
    with pytest.raises(ValueError):
        ProtocolParams(n=7, k=4, d=3, s=350, alpha=0.2, tau_slots=2)
    assert ProtocolParams(n=5, k=1, d=5, s=250, alpha=0.2, alpha_abort=False).threshold == 0
    assert P350.threshold == pytest.approx(4 / 7)
    assert ProtocolParams.for_code(H7).s == 350


def test_schedule_edge_cases():
    rng = np.random.default_rng(0)
    assert protocol.schedule_send_times(1, 1, rng) == [1]
    assert protocol.schedule_send_times(5, 5, rng) == [1, 2, 3, 4, 5]
    with pytest.raises(ValueError):
        protocol.schedule_send_times(6, 5, rng)


def test_schedule_inclusion_frequency():
    rng = np.random.default_rng(1)
    n, s, draws = 100, 5000, 10_000
    counts = np.zeros(s)
    for _ in range(draws):
        t = protocol.schedule_send_times(n, s, rng)
        assert all(a < b for a, b in zip(t, t[1:]))
        counts[np.array(t) - 1] += 1
    p = n / s
    sigma = math.sqrt(p * (1 - p) / draws)
    freq = counts / draws
    # every slot within 3 sigma would fail by chance; check the bulk and the extremes at 5 sigma
    assert np.mean(np.abs(freq - p) <= 3 * sigma) > 0.99
    assert np.max(np.abs(freq - p)) <= 5 * sigma


def test_estimate_alpha_endpoints():
    assert protocol.estimate_alpha(10, 10, 110) == 0
    assert protocol.estimate_alpha(60, 10, 110) == 1
    assert protocol.estimate_alpha(5, 10, 110) == 0  # clamped
    assert protocol.estimate_alpha(200, 10, 110) == 1
    with pytest.raises(ValueError):
        protocol.estimate_alpha(5, 10, 10)


def test_estimate_alpha_simulated():
    code = codes.make_code("repetition", n=100)
    params = ProtocolParams.for_code(code, s=5000, alpha=0.3, alpha_abort=False)
    for i in range(20):
        tr = protocol.run_commit(params, code, HonestAlice(1), HonestBob(), np.random.default_rng([5, i]))
        assert abs(tr.alpha_estimate - 0.3) <= 0.05


def test_honest_commit_and_unveil():
    rng = np.random.default_rng(2)
    for b in (0, 1):
        tr = protocol.run_commit(P350, H7, HonestAlice(b), HonestBob(), rng)
        assert tr.aborted is None
        assert tr.n_prime == int((tr.alice_detections >= 0).sum())
        c, bb = tr.committed
        assert bb == b and H7.contains(c)
        ann = protocol.honest_announcement(tr, rng)
        assert protocol.run_unveil(tr, ann, H7, tr.r).accepted


def test_unveil_rejections():
    rng = np.random.default_rng(3)
    bob = HonestBob(alpha=1.0)
    params = ProtocolParams.for_code(H7, s=350, alpha=0.2, alpha_abort=False)
    tr = protocol.run_commit(params, H7, HonestAlice(0), bob, rng)
    c, b = tr.committed
    assert protocol.run_unveil(tr, protocol.Announcement(b, c), H7, tr.r).accepted
    assert protocol.run_unveil(tr, protocol.Announcement(1 - b, c), H7, tr.r).reason == protocol.PARITY_MISMATCH
    bad = (1 - c[0],) + c[1:]
    assert protocol.run_unveil(tr, protocol.Announcement(b, bad), H7, tr.r).reason == protocol.NOT_CODEWORD
    other = codes.nearest_in_subset(H7, c, tr.r, 1 - b)
    assert protocol.run_unveil(tr, protocol.Announcement(1 - b, other), H7, tr.r).reason == protocol.STATE_MISMATCH


def test_unveil_on_aborted_raises():
    params = ProtocolParams.for_code(H7, s=5000, alpha=0.2)
    tr = protocol.run_commit(params, H7, HonestAlice(0), HonestBob(alpha=1.0), np.random.default_rng(4))
    assert tr.aborted == protocol.ABORT_ALPHA
    assert protocol.commit_verdict(tr).reason == protocol.ABORT_ALPHA
    with pytest.raises(protocol.ProtocolError):
        protocol.run_unveil(tr, protocol.Announcement(0, (0,) * 7), H7, tr.r)


def test_empty_intercept_half_click():
    p0, p1, pn = protocol.empty_intercept_distribution(0.0, 0.0)
    assert (p0, p1, pn) == pytest.approx((0.25, 0.25, 0.5))


def test_intercepted_send_slot_is_transparent():
    rng = np.random.default_rng(5)
    for bit in (0, 1):
        for _ in range(50):
            res = protocol.run_slot(bit, True, P350, rng)
            assert res.bob is (Outcome.D0 if bit == 0 else Outcome.D1)
            assert res.alice is res.bob


def test_bypass_returns_state():
    rng = np.random.default_rng(6)
    assert protocol.run_slot(None, False, P350, rng).alice is Outcome.NONE
    for bit in (0, 1):
        res = protocol.run_slot(bit, False, P350, rng, phase=1.234)
        assert res.bob is None and res.alice is (Outcome.D0 if bit == 0 else Outcome.D1)


def test_timing_mismatch_detected():
    tr = protocol.run_commit(P350, H7, HonestAlice(0), HonestBob(alpha=0.5), np.random.default_rng(7))
    assert protocol.timing_consistent(tr)
    slot = next(t for t, obs in tr.bob_observations.items() if obs is not None)
    shifted = [t + 1 if t == slot else t for t in tr.send_times]
    if len(set(shifted)) == len(shifted) and shifted == sorted(shifted) and max(shifted) <= tr.s:
        tr.send_times = shifted
        assert not protocol.timing_consistent(tr)


def test_noise_allowance():
    assert protocol.noise_allowance(0.0, 10) == 0
    assert protocol.noise_allowance(0.1, 100) == pytest.approx(10 + 9)


def test_noisy_honest_accepts_mostly():
    params = ProtocolParams.for_code(H7, s=350, alpha=0.2, eps_dephase=0.02)
    rng = np.random.default_rng(8)
    acc = 0
    for _ in range(200):
        tr = protocol.run_commit(params, H7, HonestAlice(0), HonestBob(), rng)
        if tr.aborted is None:
            acc += protocol.run_unveil(tr, protocol.honest_announcement(tr, rng), H7, tr.r, 0.02).accepted
    assert acc >= 190


def test_lossy_channel_no_timing_abort():
    params = ProtocolParams.for_code(H7, s=350, alpha=0.3, eps_loss=0.05)
    rng = np.random.default_rng(9)
    for _ in range(50):
        tr = protocol.run_commit(params, H7, HonestAlice(0), HonestBob(), rng)
        assert tr.aborted != protocol.TIMING_MISMATCH


def test_learned_bits_mean():
    rng = np.random.default_rng(10)
    counts = [len(protocol.run_commit(P350, H7, HonestAlice(0), HonestBob(), rng).bob_view()) for _ in range(1000)]
    p = 0.2
    assert abs(np.mean(counts) - p * 7) <= 3 * math.sqrt(7 * p * (1 - p) / 1000)


def test_coin_toss_uniform():
    rng = np.random.default_rng(11)
    ys = []
    for _ in range(2000):
        y, v = protocol.run_coin_toss(P350, H7, rng)
        assert v.accepted
        ys.append(y)
    assert abs(np.mean(ys) - 0.5) <= 3 * math.sqrt(0.25 / 2000)


def test_coin_toss_superposed_alice_still_uniform():
    rng = np.random.default_rng(12)
    sc = adversary.random_superposition(H7, rng)
    ys = [protocol.run_coin_toss(P350, H7, rng, alice=adversary.SuperposedAlice(sc))[0] for _ in range(1000)]
    assert abs(np.mean(ys) - 0.5) <= 3 * math.sqrt(0.25 / 1000)


def test_bit_string_commit():
    one = protocol.run_bit_string_commit(1, P350, H7, np.random.default_rng(13), bits=[1])
    assert len(one) == 1 and one[0][1].accepted
    eight = protocol.run_bit_string_commit(8, P350, H7, np.random.default_rng(14))
    assert all(v.accepted for _, v in eight)
    again = protocol.run_bit_string_commit(8, P350, H7, np.random.default_rng(14))
    assert [t.to_json(v) for t, v in eight] == [t.to_json(v) for t, v in again]
    with pytest.raises(ValueError):
        protocol.run_bit_string_commit(0, P350, H7, np.random.default_rng(0))


def test_transcript_json_keys():
    tr = protocol.run_commit(P350, H7, HonestAlice(0), HonestBob(), np.random.default_rng(15))
    v = protocol.run_unveil(tr, protocol.honest_announcement(tr, np.random.default_rng(0)), H7, tr.r)
    doc = tr.to_json(v)
    assert set(doc) == {"send_times", "bob_modes", "detections", "n_prime", "alpha_estimate", "verdict"}
    assert doc["verdict"] == "accept" and len(doc["bob_modes"]) == 350
    json.dumps(doc)


def test_verdict_invariants():
    with pytest.raises(ValueError):
        protocol.Verdict(True, protocol.NOT_CODEWORD)
    with pytest.raises(ValueError):
        protocol.Verdict(False, None)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.floats(0, 0.5), st.booleans())
def test_honest_completeness(seed, alpha, defense):
    rng = np.random.default_rng(seed)
    params = ProtocolParams.for_code(H7, s=140, alpha=alpha)
    bob = HonestBob(defense=adversary.DEFENSE_ON if defense else None)
    tr = protocol.run_commit(params, H7, HonestAlice(int(rng.integers(2))), bob, rng)
    assert tr.aborted in (None, protocol.ABORT_ALPHA)
    assert tr.n_prime == int((tr.alice_detections >= 0).sum())
    if tr.aborted is None:
        assert protocol.run_unveil(tr, protocol.honest_announcement(tr, rng), H7, tr.r).accepted
