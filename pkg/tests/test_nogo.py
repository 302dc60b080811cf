from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osqbc import codes, nogo
from osqbc.nogo import JointState

seeds = st.integers(0, 2**32 - 1)


def test_joint_state_validation():
    with pytest.raises(nogo.NogoError):
        JointState(np.ones((2, 2)))
    with pytest.raises(nogo.NogoError):
        JointState(np.ones((65, 1)) / math.sqrt(65))


def test_product_state_pure():
    psi = JointState(np.outer([1, 0], [0.6, 0.8]).astype(complex))
    rho = nogo.reduced_density(psi, "B")
    assert np.trace(rho @ rho).real == pytest.approx(1)


def test_bell_state_maximally_mixed():
    psi = JointState(np.eye(2, dtype=complex) / math.sqrt(2))
    assert np.allclose(nogo.reduced_density(psi, "B"), np.eye(2) / 2)
    assert np.allclose(nogo.reduced_density(psi, "A"), np.eye(2) / 2)


def test_schmidt_weights_are_spectrum():
    rng = np.random.default_rng(0)
    lam = np.array([0.8, 0.5, math.sqrt(1 - 0.64 - 0.25)])
    ua, ub = nogo.random_unitary(3, rng), nogo.random_unitary(3, rng)
    psi = JointState.from_terms([(lam[j], ua[:, j], ub[:, j]) for j in range(3)])
    ev = np.sort(np.linalg.eigvalsh(nogo.reduced_density(psi, "B")))
    assert np.allclose(ev, np.sort(lam**2))
    sv, _, _ = psi.schmidt()
    assert np.allclose(np.sort(sv), np.sort(lam))


def test_fidelity_basics():
    rng = np.random.default_rng(1)
    rho = nogo.random_density(3, rng)
    assert nogo.uhlmann_fidelity(rho, rho) == pytest.approx(1, abs=1e-9)
    a = np.diag([1, 0, 0]).astype(complex)
    b = np.diag([0, 0.5, 0.5]).astype(complex)
    assert nogo.uhlmann_fidelity(a, b) == pytest.approx(0, abs=1e-12)
    with pytest.raises(nogo.NogoError):
        nogo.uhlmann_fidelity(a, np.eye(2) / 2)


@given(seeds)
def test_fidelity_matches_purification_oracle(seed):
    rng = np.random.default_rng(seed)
    r0, r1 = nogo.random_density(3, rng), nogo.random_density(3, rng)
    assert abs(nogo.uhlmann_fidelity(r0, r1) - nogo.purification_fidelity(r0, r1)) <= 1e-8


def test_toy_bb84_pair_cheats():
    p0, p1 = nogo.bb84_style_pair()
    assert np.allclose(nogo.reduced_density(p0), nogo.reduced_density(p1))
    s, u = nogo.cheat_witness(p0, p1)
    assert abs(s - 1) <= 1e-9
    assert abs(nogo.conversion_overlap(p0, p1, u) - 1) <= 1e-9


@pytest.mark.parametrize("spec", ["repetition:3", "repetition:5", "random:6:3:1"])
def test_orthogonal_encoding_defeats_cheat(spec):
    code = codes.code_from_spec(spec)
    r = codes.draw_partition_key(code, np.random.default_rng(2))
    q0, q1 = nogo.orthogonal_commitment_pair(code, r)
    r0, r1 = nogo.reduced_density(q0), nogo.reduced_density(q1)
    assert nogo.orthogonal_supports(r0, r1)
    assert nogo.cheat_success(q0, q1) <= 1e-12
    assert nogo.uhlmann_fidelity(r0, r1) <= 1e-6


def test_dual_rail_vectors_orthogonal():
    assert abs(np.vdot(nogo.dual_rail_vector(0), nogo.dual_rail_vector(1))) <= 1e-12


def test_mismatched_split():
    with pytest.raises(nogo.NogoError):
        nogo.cheat_success(nogo.random_joint_state(2, 4, np.random.default_rng(0)),
                           nogo.random_joint_state(4, 2, np.random.default_rng(1)))


@settings(max_examples=20)
@given(seeds)
def test_cheat_equals_fidelity_squared(seed):
    rng = np.random.default_rng(seed)
    a, b = nogo.random_joint_state(3, 4, rng), nogo.random_joint_state(3, 4, rng)
    f = nogo.uhlmann_fidelity(nogo.reduced_density(a), nogo.reduced_density(b))
    s, u = nogo.cheat_witness(a, b)
    assert abs(s - f**2) <= 1e-9
    assert abs(nogo.conversion_overlap(a, b, u) - s) <= 1e-9


@settings(max_examples=20)
@given(seeds)
def test_cheat_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    a, b = nogo.random_joint_state(3, 3, rng), nogo.random_joint_state(3, 3, rng)
    u = nogo.random_unitary(3, rng)
    base = nogo.cheat_success(a, b)
    assert abs(nogo.cheat_success(nogo.local_unitary(a, u), b) - base) <= 1e-9
    assert abs(nogo.cheat_success(a, nogo.local_unitary(b, u)) - base) <= 1e-9
    assert abs(nogo.cheat_success(a, a) - 1) <= 1e-9


def test_brute_force_agrees_small():
    rng = np.random.default_rng(3)
    for _ in range(3):
        a, b = nogo.random_joint_state(3, 3, rng), nogo.random_joint_state(3, 3, rng)
        assert abs(nogo.cheat_success(a, b) - nogo.brute_force_cheat(a, b, rng)) <= 1e-4


def test_sweep_monotone():
    rows = nogo.sweep_rows(np.linspace(0, math.pi / 2, 25))
    td = [r[1] for r in rows]
    cheat = [r[3] for r in rows]
    assert all(x < y for x, y in zip(td, td[1:]))
    assert all(x > y for x, y in zip(cheat, cheat[1:]))
    assert cheat[0] == pytest.approx(1) and cheat[-1] == pytest.approx(0.25)
    for th, _, f, c in rows:
        assert c == pytest.approx(f**2, abs=1e-9)


def test_check_density_errors():
    with pytest.raises(nogo.NogoError):
        nogo.check_density(np.diag([1.5, -0.5]))
    with pytest.raises(nogo.NogoError):
        nogo.check_density(np.array([[0.5, 1], [0, 0.5]]))
