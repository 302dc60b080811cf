"""Why the standard no-go cheating unitary does not exist here.

If Alice's two commitment states leave Bob with the same reduced density
matrix, a unitary on her side alone turns one into the other. In general the
best local conversion |<psi1|(U_A x I)|psi0>|^2 equals the squared Uhlmann
fidelity of Bob's reduced states, so it drops to zero when those states have
orthogonal supports, as they do for the orthogonal dual-rail encoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg, optimize

from . import optics
from .codes import LinearCode, parities

MAX_DIM = 64
TOL = 1e-9
EIG_FLOOR = 1e-13  # eigenvalues below this are rounding noise; sqrt would amplify them


class NogoError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class JointState:
    """Pure state on A x B; ``amps[a, b]`` is the coefficient of |a>|b>."""

    amps: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.amps, dtype=complex)
        if m.ndim != 2:
            raise NogoError("amplitudes must be a dim_A x dim_B matrix")
        if max(m.shape) > MAX_DIM:
            raise NogoError(f"dimensions {m.shape} exceed cap {MAX_DIM}")
        if abs(np.vdot(m, m).real - 1.0) > TOL:
            raise NogoError("joint state not normalized")
        object.__setattr__(self, "amps", m)

    @property
    def dims(self) -> tuple[int, int]:
        return self.amps.shape

    @classmethod
    def from_terms(cls, terms: Sequence[tuple[complex, np.ndarray, np.ndarray]]) -> "JointState":
        """Build sum_j lambda_j |e_j>|f_j> from (lambda, e, f) triples."""
        m = sum(lam * np.outer(e, f) for lam, e, f in terms)
        return cls(np.asarray(m, dtype=complex))

    def schmidt(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(coefficients, A vectors as columns, B vectors as rows)."""
        u, sv, vh = np.linalg.svd(self.amps, full_matrices=False)
        return sv, u, vh


def check_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NogoError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > TOL:
        raise NogoError("density matrix not Hermitian")
    if abs(np.trace(rho).real - 1.0) > TOL:
        raise NogoError("density matrix trace != 1")
    if np.linalg.eigvalsh(rho).min() < -TOL:
        raise NogoError("density matrix has a negative eigenvalue")
    return rho


def reduced_density(psi: JointState, keep: str = "B") -> np.ndarray:
    """Partial trace of |psi><psi| over the other factor."""
    m = psi.amps
    if keep == "B":
        return m.T @ m.conj()
    if keep == "A":
        return m @ m.conj().T
    raise NogoError("keep must be 'A' or 'B'")


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    return (v * np.sqrt(np.where(w > EIG_FLOOR, w, 0.0))) @ v.conj().T


def uhlmann_fidelity(rho0: np.ndarray, rho1: np.ndarray) -> float:
    """Tr sqrt(sqrt(rho0) rho1 sqrt(rho0))."""
    rho0, rho1 = check_density(rho0), check_density(rho1)
    if rho0.shape != rho1.shape:
        raise NogoError("dimension mismatch")
    s0 = _psd_sqrt(rho0)
    inner = s0 @ rho1 @ s0
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(min(1.0, np.sum(np.sqrt(w[w > EIG_FLOOR]))))


def trace_distance(rho0: np.ndarray, rho1: np.ndarray) -> float:
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho0 - rho1))))


def cheat_witness(psi0: JointState, psi1: JointState) -> tuple[float, np.ndarray]:
    """Best conversion probability and the unitary on A that achieves it.

    <psi1|(U x I)|psi0> = Tr(U X) with X = M0 M1^dagger; writing each M through
    its Schmidt decomposition, the maximum of |Tr(U X)| is the trace norm of X.
    """
    if psi0.dims != psi1.dims:
        raise NogoError(f"split mismatch: {psi0.dims} vs {psi1.dims}")
    s0, u0, vh0 = psi0.schmidt()
    s1, u1, vh1 = psi1.schmidt()
    core = (s0[:, None] * (vh0 @ vh1.conj().T)) * s1[None, :]
    x = u0 @ core @ u1.conj().T
    p, sv, qh = np.linalg.svd(x)
    unitary = qh.conj().T @ p.conj().T
    return float(min(1.0, np.sum(sv) ** 2)), unitary


def cheat_success(psi0: JointState, psi1: JointState) -> float:
    """max over unitaries U_A of |<psi1|(U_A x I)|psi0>|^2."""
    return cheat_witness(psi0, psi1)[0]


def conversion_overlap(psi0: JointState, psi1: JointState, unitary: np.ndarray) -> float:
    """|<psi1|(U x I)|psi0>|^2 for a given U on A."""
    return float(abs(np.vdot(psi1.amps, unitary @ psi0.amps)) ** 2)


def _hermitian_from_params(x: np.ndarray, dim: int) -> np.ndarray:
    h = np.zeros((dim, dim), dtype=complex)
    iu = np.triu_indices(dim, 1)
    nd = len(iu[0])
    h[np.diag_indices(dim)] = x[:dim]
    h[iu] = x[dim : dim + nd] + 1j * x[dim + nd :]
    return h + np.triu(h, 1).conj().T


def brute_force_cheat(
    psi0: JointState, psi1: JointState, rng: np.random.Generator, restarts: int = 3
) -> float:
    """Numerical maximization over U = exp(iH), independent of the closed form."""
    dim = psi0.dims[0]

    def neg(x):
        u = linalg.expm(1j * _hermitian_from_params(x, dim))
        return -conversion_overlap(psi0, psi1, u)

    best = 0.0
    for _ in range(restarts):
        x0 = rng.normal(scale=math.pi, size=dim * dim)
        res = optimize.minimize(neg, x0, method="BFGS", options={"gtol": 1e-10})
        best = max(best, -res.fun)
    return best


def purification_fidelity(rho0: np.ndarray, rho1: np.ndarray) -> float:
    """Fidelity as max purification overlap: trace norm of sqrt(rho0) sqrt(rho1)."""
    return float(np.sum(np.linalg.svd(_psd_sqrt(rho0) @ _psd_sqrt(rho1), compute_uv=False)))


def random_joint_state(dim_a: int, dim_b: int, rng: np.random.Generator) -> JointState:
    m = rng.normal(size=(dim_a, dim_b)) + 1j * rng.normal(size=(dim_a, dim_b))
    return JointState(m / np.linalg.norm(m))


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = random_joint_state(dim, dim, rng)
    return reduced_density(psi, "B")


# --- the two demonstrators ---------------------------------------------------------


def bb84_style_pair() -> tuple[JointState, JointState]:
    """Commitments purified so Bob holds I/2 either way: Z basis for 0, X basis for 1."""
    s = optics.SQRT_HALF
    psi0 = JointState(np.array([[s, 0], [0, s]], dtype=complex))
    psi1 = JointState(np.array([[0.5, 0.5], [0.5, -0.5]], dtype=complex))
    return psi0, psi1


def dual_rail_vector(bit: int) -> np.ndarray:
    """Psi_bit in the {|a>, |b>} single-photon basis."""
    st = optics.encode_qubit(bit)
    return np.array([st.amp(optics.A(1)), st.amp(optics.B(1 + optics.TAU))], dtype=complex)


def codeword_state(c: Sequence[int]) -> np.ndarray:
    out = np.array([1.0 + 0j])
    for bit in c:
        out = np.kron(out, dual_rail_vector(int(bit)))
    return out


def orthogonal_commitment_pair(
    code: LinearCode, r: Sequence[int], lambdas: np.ndarray | None = None
) -> tuple[JointState, JointState]:
    """psi_b = sum over c in C_(b) of lambda_c |e_c>_A |Psi_c>_B.

    A is indexed by all codewords; default amplitudes are uniform within C_(b).
    """
    words = code.codewords
    par = parities(code, r)
    dim_b = 2**code.n
    if dim_b > MAX_DIM or len(words) > MAX_DIM:
        raise NogoError("code too large for the dense demonstrator")
    states = []
    for b in (0, 1):
        m = np.zeros((len(words), dim_b), dtype=complex)
        idx = np.flatnonzero(par == b)
        lam = np.full(len(idx), 1 / math.sqrt(len(idx))) if lambdas is None else lambdas[b]
        for j, li in zip(idx, lam):
            m[j] = li * codeword_state(words[j])
        states.append(JointState(m))
    return states[0], states[1]


def interpolating_pair(theta: float) -> tuple[JointState, JointState]:
    """psi0 fixed; psi1's B-state rotates from equal (0) to orthogonal (pi/2)."""
    s = optics.SQRT_HALF
    psi0 = JointState(np.array([[s, 0, 0], [0, s, 0]], dtype=complex))
    c, sn = math.cos(theta), math.sin(theta)
    psi1 = JointState(np.array([[s * c, 0, s * sn], [0, s, 0]], dtype=complex))
    return psi0, psi1


def sweep_rows(thetas: Sequence[float]) -> list[tuple[float, float, float, float]]:
    """(theta, trace distance, fidelity, cheat success) along the interpolating family."""
    rows = []
    for th in thetas:
        p0, p1 = interpolating_pair(th)
        r0, r1 = reduced_density(p0), reduced_density(p1)
        rows.append((th, trace_distance(r0, r1), uhlmann_fidelity(r0, r1), cheat_success(p0, p1)))
    return rows


def local_unitary(state: JointState, unitary: np.ndarray) -> JointState:
    return JointState(unitary @ state.amps)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def orthogonal_supports(rho0: np.ndarray, rho1: np.ndarray, tol: float = 1e-12) -> bool:
    return float(np.max(np.abs(rho0 @ rho1))) <= tol

