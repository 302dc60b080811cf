"""All-or-nothing oblivious transfer built on the commitment, and Bob's
honest-but-curious attack on it.

Honest Bob learns Alice's bit with certainty half the time and guesses
otherwise (average 0.75). The curious Bob keeps his basis choices, results and
the I_0/I_1 split in superposition, ends up holding (|b> + |?>)/sqrt2 and
discriminates the two possibilities with a POVM, reaching (1 + sqrt3/2)/2 on
average but never certainty.

Register simulation: each index i carries qubits (B, phi, H, Gamma, E_b, E_h),
where E_b and E_h record the quantum-level commitments of b_i and h_i. Those
records stand in for the codeword-superposition systems: their branches are
mutually orthogonal, so a copy in the computational basis is exact. The global
control S' only ever conditions per-index gates, so the joint state is kept as
two branches (s' = 0, 1), each a product over indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .adversary import SuperposedCommitment, superposed_commit
from .codes import LinearCode, subset

SQRT3 = math.sqrt(3.0)
OPTIMAL_RELIABILITY = (1.0 + SQRT3 / 2.0) / 2.0
I_FRACTION = 0.24
MAX_RETRIES = 200
MAX_REGISTER_N = 12

# axes of one index's register tensor
AX_B, AX_PHI, AX_H, AX_G, AX_EB, AX_EH = range(6)
N_AX = 6

_I2 = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_P = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))


class QotError(RuntimeError):
    pass


def bb84_state(a: int, g: int) -> np.ndarray:
    """|a, g>: |0,g> computational, |1,0> = (|0,0> + |0,1>)/sqrt2, |1,1> = (|0,0> - |0,1>)/sqrt2."""
    if a == 0:
        return np.array([1.0, 0.0]) if g == 0 else np.array([0.0, 1.0])
    s = 1 / math.sqrt(2)
    return np.array([s, s]) if g == 0 else np.array([s, -s])


def _projector(a: int, g: int) -> np.ndarray:
    v = bb84_state(a, g)
    return np.outer(v, v.conj())


def u1_matrix() -> np.ndarray:
    """U1 on B x phi x H: measure phi in basis B, store the result in H coherently."""
    out = np.zeros((8, 8))
    for basis in (0, 1):
        inner = np.kron(_projector(basis, 0), _I2) + np.kron(_projector(basis, 1), _X)
        out += np.kron(_P[basis], inner)
    return out


def u3_matrix(a: int) -> np.ndarray:
    """U3 on S' x B x Gamma: Gamma ^= (a != B) XOR s'."""
    same, diff = _P[a], _P[1 - a]
    return np.kron(_P[0], np.kron(same, _I2) + np.kron(diff, _X)) + np.kron(
        _P[1], np.kron(same, _X) + np.kron(diff, _I2)
    )


def _cnot() -> np.ndarray:
    return np.kron(_P[0], _I2) + np.kron(_P[1], _X)


_U1 = u1_matrix()
_CNOT = _cnot()
# U3 restricted to each s' branch, keyed by a
_U3_BLOCKS = {a: [u3_matrix(a)[4 * br : 4 * br + 4, 4 * br : 4 * br + 4] for br in (0, 1)] for a in (0, 1)}


def _apply(t: np.ndarray, gate: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Apply ``gate`` to the listed axes of a (branch, 6 qubits) tensor."""
    k = len(axes)
    g = gate.reshape((2,) * (2 * k))
    ax = [1 + a for a in axes]
    out = np.tensordot(g, t, axes=(list(range(k, 2 * k)), ax))
    return np.moveaxis(out, list(range(k)), ax)


@dataclass(frozen=True)
class QotRegisters:
    """Bob's registers. ``states[i]`` is None until phi_i has arrived;
    otherwise shape (2, 2, 2, 2, 2, 2, 2): s' branch then the six qubits."""

    states: tuple
    branch: np.ndarray  # amplitudes of s' = 0, 1
    split: bool = False

    @classmethod
    def initial(cls, n: int) -> "QotRegisters":
        return cls(states=(None,) * n, branch=np.array([1.0 + 0j, 0j]))

    def _state(self, i: int) -> np.ndarray:
        st = self.states[i]
        if st is None:
            raise QotError(f"register {i} is not initialized")
        return st

    def _with(self, i: int, st: np.ndarray) -> "QotRegisters":
        states = list(self.states)
        states[i] = st
        return replace(self, states=tuple(states))

    def norm2(self) -> float:
        """Squared norm of the joint state."""
        total = 0.0
        for br in (0, 1):
            w = abs(self.branch[br]) ** 2
            if w == 0:
                continue
            for st in self.states:
                if st is not None:
                    w *= float(np.vdot(st[br], st[br]).real)
            total += w
        return total


def receive(reg: QotRegisters, i: int, phi: np.ndarray) -> QotRegisters:
    """Store phi_i with B_i = |+>, H_i = Gamma_i = E = |0>."""
    plus = np.array([1.0, 1.0]) / math.sqrt(2)
    zero = np.array([1.0, 0.0])
    one_branch = np.einsum("a,b,c,d,e,f->abcdef", plus, phi, zero, zero, zero, zero).astype(complex)
    return reg._with(i, np.stack([one_branch, one_branch]))


def apply_u1(reg: QotRegisters, i: int) -> QotRegisters:
    return reg._with(i, _apply(reg._state(i), _U1, (AX_B, AX_PHI, AX_H)))


def record_commitments(reg: QotRegisters, i: int) -> QotRegisters:
    """Commit b_i and h_i at the quantum level: orthogonal records copied into E."""
    st = _apply(reg._state(i), _CNOT, (AX_B, AX_EB))
    return reg._with(i, _apply(st, _CNOT, (AX_H, AX_EH)))


def introduce_control(reg: QotRegisters) -> QotRegisters:
    """Add S' = (|0> + |1>)/sqrt2."""
    if reg.split:
        raise QotError("control qubit already introduced")
    states = tuple(None if st is None else np.stack([st[0], st[0]]) for st in reg.states)
    amp = reg.branch[0] / math.sqrt(2)
    return QotRegisters(states, np.array([amp, amp]), split=True)


def apply_u3(reg: QotRegisters, i: int, a: int) -> QotRegisters:
    """Gamma_i ^= (a_i != b_i) XOR s', branch by branch."""
    if not reg.split:
        raise QotError("U3 needs the control qubit S'")
    st = reg._state(i)
    out = np.empty_like(st)
    for br in (0, 1):
        out[br] = _apply(st[br : br + 1], _U3_BLOCKS[a][br], (AX_B, AX_G))[0]
    return reg._with(i, out)


def _project(st: np.ndarray, axis: int, value: int) -> np.ndarray:
    out = np.zeros_like(st)
    idx = [slice(None)] * st.ndim
    idx[1 + axis] = value
    out[tuple(idx)] = st[tuple(idx)]
    return out


def measure(reg: QotRegisters, i: int, axis: int, rng: np.random.Generator) -> tuple[int, QotRegisters]:
    """Computational-basis measurement of one qubit of index i, across branches."""
    st = reg._state(i)
    weights = np.abs(reg.branch) ** 2
    p_branch = np.array([[_prob(st[br], axis, v) for v in (0, 1)] for br in (0, 1)])
    p_total = weights @ p_branch
    value = int(rng.random() >= p_total[0] / p_total.sum())
    new_branch = reg.branch * np.sqrt(p_branch[:, value])
    new_branch = new_branch / np.linalg.norm(new_branch)
    proj = _project(st, axis, value)
    for br in (0, 1):
        nrm = math.sqrt(p_branch[br, value])
        if nrm > 0:
            proj[br] /= nrm
    return value, replace(reg._with(i, proj), branch=new_branch)


def _prob(branch_state: np.ndarray, axis: int, value: int) -> float:
    sub = np.take(branch_state, value, axis=axis)
    return float(np.vdot(sub, sub).real)


def value_distribution(reg: QotRegisters, i: int, axis: int) -> np.ndarray:
    """P(qubit = 1) for index i, per branch."""
    st = reg._state(i)
    return np.array([_prob(st[br], axis, 1) for br in (0, 1)])


# --- quantum-level commitment (U2 in branch form) ---------------------------------


@dataclass(frozen=True, eq=False)
class QuantumCommitment:
    """A bit register committed without collapse: value v pairs with a uniform
    superposition over C_(v) (the v = 1 branch is the U2 image of the v = 0 one)."""

    amplitudes: np.ndarray
    branches: dict

    def combined(self) -> SuperposedCommitment:
        lam = {}
        for v in (0, 1):
            sc = self.branches[v]
            if self.amplitudes[v] == 0:
                continue
            for c, a in sc.lambdas.items():
                lam[c] = self.amplitudes[v] * a
        code = self.branches[0].code
        return superposed_commit(code, lam)


def commit_at_quantum_level(bit_register: Sequence[complex], code: LinearCode, r: Sequence[int]) -> QuantumCommitment:
    amps = np.asarray(bit_register, dtype=complex)
    if amps.shape != (2,) or abs(np.vdot(amps, amps).real - 1) > 1e-12:
        raise QotError("bit register must be a normalized qubit")
    branches = {}
    for v in (0, 1):
        words = subset(code, r, v)
        if len(words) == 0:
            raise QotError(f"C_({v}) is empty")
        amp = 1 / math.sqrt(len(words))
        branches[v] = superposed_commit(code, {tuple(int(x) for x in w): amp for w in words})
    return QuantumCommitment(amps, branches)


# --- Phi_b and the POVM -------------------------------------------------------------


def build_phi_b(s: int, b: int) -> np.ndarray:
    """(|b> + |?>)/sqrt2 in the basis (|0>, |1>, |?>). ``s`` drops out of the reduction."""
    if s not in (0, 1) or b not in (0, 1):
        raise QotError("s and b must be bits")
    v = np.zeros(3, dtype=complex)
    v[b] = v[2] = 1 / math.sqrt(2)
    return v


def optimal_povm() -> np.ndarray:
    return np.array(
        [
            [2 + SQRT3, -1, 1 + SQRT3],
            [-1, 2 - SQRT3, 1 - SQRT3],
            [1 + SQRT3, 1 - SQRT3, 2],
        ],
        dtype=complex,
    ) / 6.0


def check_povm(e0: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    e0 = np.asarray(e0, dtype=complex)
    if e0.shape != (3, 3) or np.max(np.abs(e0 - e0.conj().T)) > tol:
        raise QotError("E0 must be a 3x3 Hermitian matrix")
    for elem in (e0, np.eye(3) - e0):
        if np.linalg.eigvalsh(elem).min() < -tol:
            raise QotError("POVM element is not positive semidefinite")
    return e0


def povm_reliability(e0: np.ndarray) -> float:
    """(<Phi0|E0|Phi0> + <Phi1|E1|Phi1>)/2 for equiprobable b."""
    e0 = check_povm(e0)
    e1 = np.eye(3) - e0
    p0, p1 = build_phi_b(0, 0), build_phi_b(0, 1)
    return float((np.vdot(p0, e0 @ p0).real + np.vdot(p1, e1 @ p1).real) / 2)


def helstrom_reliability(overlap: float) -> float:
    """Optimal success for two equiprobable pure states with |<a|b>| = overlap."""
    return 0.5 * (1 + math.sqrt(1 - overlap**2))


# --- protocol runs -------------------------------------------------------------------


@dataclass(frozen=True)
class QotOutcome:
    case: str  # "decoded", "failed" or "stopped"
    bit: int  # Alice's secret
    guess: int | None
    correct: bool
    confidence: float  # Bob's posterior that his guess is right


def alice_test(a: Sequence[int], g: Sequence[int], b: Sequence[int], h: Sequence[int], tested: Sequence[int]) -> bool:
    """Alice's test on R: False (stop) if some tested i has a_i = b_i but g_i != h_i."""
    return not any(a[i] == b[i] and g[i] != h[i] for i in tested)


def _sizes(n: int, r_fraction: float) -> tuple[int, int]:
    if n < 8:
        raise QotError("need n >= 8")
    m = math.floor(I_FRACTION * n)
    return math.ceil(r_fraction * n), m


def _xor(bits) -> int:
    out = 0
    for x in bits:
        out ^= int(x)
    return out


def _honest_attempt(n: int, rng: np.random.Generator, r_size: int, m: int, misreport: float) -> QotOutcome | None:
    a = rng.integers(2, size=n)
    g = rng.integers(2, size=n)
    bases = rng.integers(2, size=n)
    h = np.empty(n, dtype=int)
    for i in range(n):
        v = bb84_state(int(a[i]), int(g[i]))
        p1 = abs(np.vdot(bb84_state(int(bases[i]), 1), v)) ** 2
        h[i] = int(rng.random() < p1)
    h_committed = h ^ (rng.random(n) < misreport)
    secret = int(rng.integers(2))
    tested = rng.choice(n, size=r_size, replace=False)
    if not alice_test(a, g, bases, h_committed, tested):
        return QotOutcome("stopped", secret, None, False, 0.0)
    rest = np.setdiff1d(np.arange(n), tested)
    t0 = [int(i) for i in rest if a[i] == bases[i]]
    t1 = [int(i) for i in rest if a[i] != bases[i]]
    if len(t0) < m or len(t1) < m:
        return None
    i0 = sorted(int(x) for x in rng.choice(t0, size=m, replace=False))
    i1 = sorted(int(x) for x in rng.choice(t1, size=m, replace=False))
    pair = (i0, i1) if rng.integers(2) == 0 else (i1, i0)
    s = int(rng.integers(2))
    beta = secret ^ _xor(g[pair[s]])
    if set(pair[s]) <= set(t0):
        guess = beta ^ _xor(h[pair[s]])
        return QotOutcome("decoded", secret, guess, guess == secret, 1.0)
    guess = int(rng.integers(2))
    return QotOutcome("failed", secret, guess, guess == secret, 0.5)


def run_qot_honest(n: int, rng: np.random.Generator, r_fraction: float = 0.25, misreport: float = 0.0) -> QotOutcome:
    """One honest run; infeasible I_0/I_1 draws are retried.

    ``misreport`` makes Bob commit a flipped h_i with that probability, to
    exercise Alice's test on R.
    """
    r_size, m = _sizes(n, r_fraction)
    for _ in range(MAX_RETRIES):
        out = _honest_attempt(n, rng, r_size, m, misreport)
        if out is not None:
            return out
    raise QotError(f"could not form |I_0| = |I_1| = {m} for n = {n}")


def _curious_attempt(n: int, rng: np.random.Generator, r_size: int, m: int, e0: np.ndarray) -> QotOutcome | None:
    a = rng.integers(2, size=n)
    g = rng.integers(2, size=n)
    reg = QotRegisters.initial(n)
    for i in range(n):
        reg = receive(reg, i, bb84_state(int(a[i]), int(g[i])))
        reg = apply_u1(reg, i)
        reg = record_commitments(reg, i)

    secret = int(rng.integers(2))
    tested = [int(x) for x in rng.choice(n, size=r_size, replace=False)]
    b_open, h_open = {}, {}
    for i in tested:
        b_open[i], reg = measure(reg, i, AX_EB, rng)
        h_open[i], reg = measure(reg, i, AX_EH, rng)
    if not alice_test(a, g, b_open, h_open, tested):
        return QotOutcome("stopped", secret, None, False, 0.0)

    reg = introduce_control(reg)
    rest = [i for i in range(n) if i not in set(tested)]
    gamma = {}
    for i in rest:
        reg = apply_u3(reg, i, int(a[i]))
        gamma[i], reg = measure(reg, i, AX_G, rng)
    if not np.allclose(np.abs(reg.branch) ** 2, 0.5, atol=1e-12):
        raise QotError(f"branch weights drifted: {np.abs(reg.branch) ** 2}")

    t0 = [i for i in rest if gamma[i] == 0]
    t1 = [i for i in rest if gamma[i] == 1]
    if len(t0) < m or len(t1) < m:
        return None
    i0 = sorted(int(x) for x in rng.choice(t0, size=m, replace=False))
    i1 = sorted(int(x) for x in rng.choice(t1, size=m, replace=False))
    pair = (i0, i1)  # always announced in original order
    s = int(rng.integers(2))
    beta = secret ^ _xor(g[pair[s]])

    phi = _reduce(reg, pair[s], beta, s)
    p_zero = float(np.vdot(phi, e0 @ phi).real)
    guess = int(rng.random() >= p_zero)
    # Bob's posterior for his guess given the POVM outcome, b equiprobable
    like = [float(np.vdot(build_phi_b(s, v), (e0 if guess == 0 else np.eye(3) - e0) @ build_phi_b(s, v)).real)
            for v in (0, 1)]
    confidence = like[guess] / sum(like)
    return QotOutcome("povm", secret, guess, guess == secret, confidence)


def _reduce(reg: QotRegisters, chosen: Sequence[int], beta: int, s: int) -> np.ndarray:
    """Collapse Bob's registers to the 3-dim (|0>, |1>, |?>) picture.

    In branch s' = s every h_i on ``chosen`` is certain and decoding yields a
    definite bit; in the other branch decoding is a fair coin (|?>).
    """
    p_h = np.array([value_distribution(reg, i, AX_H) for i in chosen])  # (m, 2)
    decoded = {}
    for br in (0, 1):
        parity_one = 0.5 * (1 - np.prod(1 - 2 * p_h[:, br]))
        decoded[br] = beta if parity_one < 1e-12 else (beta ^ 1 if parity_one > 1 - 1e-12 else None)
    if decoded[s] is None or decoded[1 - s] is not None:
        raise QotError("register branches do not reduce to (|b> + |?>)/sqrt2")
    phi = np.zeros(3, dtype=complex)
    phi[decoded[s]] = reg.branch[s]
    phi[2] = reg.branch[1 - s]
    return phi


def run_qot_curious(
    n: int, rng: np.random.Generator, r_fraction: float = 0.25, e0: np.ndarray | None = None
) -> QotOutcome:
    """One honest-but-curious run ending in the POVM guess."""
    if n > MAX_REGISTER_N:
        raise QotError(f"register simulation limited to n <= {MAX_REGISTER_N}")
    e0 = check_povm(optimal_povm() if e0 is None else e0)
    r_size, m = _sizes(n, r_fraction)
    for _ in range(MAX_RETRIES):
        out = _curious_attempt(n, rng, r_size, m, e0)
        if out is not None:
            return out
    raise QotError(f"could not form |I_0| = |I_1| = {m} for n = {n}")
