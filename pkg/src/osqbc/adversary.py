"""Attacks on the commitment and Bob's randomized-phase defense.

Alice: codeword flip at unveil, superposed (entangled) commitment, and the
counterfactual probe of Bob's mode. Bob: over-interception. A superposed
commitment is tracked as amplitudes over codewords; the branch states
|e_c>|Psi_c> are mutually orthogonal and every in-protocol measurement is
diagonal in that basis, so |lambda_c|^2 statistics are exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import optics
from .codes import Codeword, LinearCode, nearest_in_subset, parities
from .optics import Kind, ModeLabel
from .protocol import Announcement, HonestAlice, HonestBob, Transcript

NORM_TOL = 1e-12


class AttackError(ValueError):
    pass


# --- Bob's defense ----------------------------------------------------------------


@dataclass(frozen=True)
class DefenseConfig:
    """Same secret uniform phase on channels A and B in every bypass slot."""

    enabled: bool = False

    def draw_phases(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2.0 * math.pi, size=count)


DEFENSE_OFF = DefenseConfig(False)
DEFENSE_ON = DefenseConfig(True)


# --- superposed commitment ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SuperposedCommitment:
    code: LinearCode
    words: np.ndarray  # (m, n) uint8 support
    amps: np.ndarray  # (m,) complex lambda_c

    @property
    def lambdas(self) -> dict[Codeword, complex]:
        return {tuple(int(x) for x in w): complex(a) for w, a in zip(self.words, self.amps)}

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def marginal_one(self, position: int) -> float:
        """P(c_position = 1)."""
        return float(self.weights[self.words[:, position] == 1].sum())

    def measure(self, rng: np.random.Generator) -> Codeword:
        """Alice's final measurement of her ancilla."""
        w = self.weights
        idx = rng.choice(len(w), p=w / w.sum())
        return tuple(int(x) for x in self.words[idx])


def superposed_commit(code: LinearCode, lambdas: Mapping[Sequence[int], complex]) -> SuperposedCommitment:
    """Validate an amplitude distribution over codewords."""
    if not lambdas:
        raise AttackError("empty superposition")
    words, amps = [], []
    for c, a in lambdas.items():
        c = tuple(int(x) for x in c)
        if not code.contains(c):
            raise AttackError(f"{c} is not a codeword")
        words.append(c)
        amps.append(complex(a))
    amps = np.array(amps, dtype=complex)
    total = float(np.sum(np.abs(amps) ** 2))
    if abs(total - 1.0) > NORM_TOL:
        raise AttackError(f"amplitudes not normalized: sum |lambda|^2 = {total!r}")
    return SuperposedCommitment(code, np.array(words, dtype=np.uint8), amps)


def uniform_superposition(code: LinearCode, words: np.ndarray | None = None) -> SuperposedCommitment:
    words = code.codewords if words is None else words
    amp = 1.0 / math.sqrt(len(words))
    return superposed_commit(code, {tuple(int(x) for x in w): amp for w in words})


def random_superposition(code: LinearCode, rng: np.random.Generator) -> SuperposedCommitment:
    """Complex Gaussian amplitudes over all of C, normalized."""
    words = code.codewords
    z = rng.normal(size=len(words)) + 1j * rng.normal(size=len(words))
    z /= np.linalg.norm(z)
    return SuperposedCommitment(code, words.copy(), z)


def collapse_on_intercept(sc: SuperposedCommitment, position: int, outcome: int) -> SuperposedCommitment:
    """Posterior after position ``position`` is found to carry ``outcome``."""
    keep = sc.words[:, position] == outcome
    if not keep.any() or sc.weights[keep].sum() == 0:
        raise AttackError(f"no codeword with c_{position} = {outcome}: impossible transcript")
    amps = sc.amps[keep]
    return SuperposedCommitment(sc.code, sc.words[keep], amps / np.linalg.norm(amps))


def unveil_probabilities(sc: SuperposedCommitment, r: Sequence[int]) -> tuple[float, float]:
    """(p0, p1) = sums of |lambda_c|^2 over C_(0) and C_(1)."""
    rv = np.array(r, dtype=np.uint8)
    par = (sc.words @ rv) % 2
    w = sc.weights
    return float(w[par == 0].sum()), float(w[par == 1].sum())


def sample_unveils(sc: SuperposedCommitment, r: Sequence[int], rng: np.random.Generator, size: int) -> np.ndarray:
    """Unveiled bits from ``size`` independent final measurements."""
    rv = np.array(r, dtype=np.uint8)
    par = (sc.words @ rv) % 2
    w = sc.weights
    return par[rng.choice(len(w), size=size, p=w / w.sum())]


class _SuperposedSource:
    """Collapses lazily as Alice's qubits get measured (by Bob or by her)."""

    def __init__(self, sc: SuperposedCommitment):
        self.sc = sc

    def bit(self, i: int, rng: np.random.Generator) -> int:
        bit = int(rng.random() < self.sc.marginal_one(i))
        self.sc = collapse_on_intercept(self.sc, i, bit)
        return bit

    def final(self, rng: np.random.Generator) -> Codeword:
        return self.sc.measure(rng)


@dataclass(frozen=True, eq=False)
class SuperposedAlice:
    sc: SuperposedCommitment

    def prepare(self, code: LinearCode, r: Codeword, rng: np.random.Generator):
        return _SuperposedSource(self.sc)


# --- Alice's codeword flip -----------------------------------------------------------


def alice_flip_attack(transcript: Transcript, code: LinearCode, r: Sequence[int], target_b: int) -> Announcement:
    """Announce the member of C_(target_b) nearest to the committed codeword."""
    if transcript.committed is None:
        raise AttackError("flip attack needs the committed codeword")
    c, _ = transcript.committed
    return Announcement(b=target_b, c=nearest_in_subset(code, c, r, target_b))


def flip_escape_probability(c: Sequence[int], c_new: Sequence[int], alpha: float) -> float:
    """Product over differing positions of (1 - alpha), noiseless channel."""
    dist = sum(a != b for a, b in zip(c, c_new))
    return (1.0 - alpha) ** dist


# --- Bob's over-interception ---------------------------------------------------------


def bob_over_intercept(alpha_attack: float) -> HonestBob:
    """Honest-looking Bob that intercepts at ``alpha_attack`` instead of the agreed rate."""
    if not 0.0 <= alpha_attack <= 1.0:
        raise AttackError("alpha_attack must lie in [0, 1]")
    return HonestBob(alpha=alpha_attack)


# --- counterfactual probe --------------------------------------------------------------


@dataclass(frozen=True)
class ProbeOutcome:
    result: str  # "Dc", "Dd" or "none"
    slot: int = 0


_ARM_A = ModeLabel(Kind.PROBE_A)
_ARM_B = ModeLabel(Kind.PROBE_B)
_DC = ModeLabel(Kind.DC)
_DD = ModeLabel(Kind.DD)


def probe_state(intercept: bool, phase: float | None = None) -> optics.PhotonState:
    """Probe photon at the FBS output ports for one slot.

    Bypass: arm b goes through Bob's channels (picking up his defense phase)
    and recombines with arm a. Intercept: path b is blocked and the ideal FBS
    passes the whole photon to d.
    """
    state = optics.PhotonState({_ARM_A: complex(optics.SQRT_HALF), _ARM_B: complex(optics.SQRT_HALF)})
    if intercept:
        return optics.PhotonState({_DD: 1 + 0j})
    if phase is not None:
        state = optics.phase_shift(state, _ARM_B, phase)
    return optics.beam_splitter(state, _ARM_A, _ARM_B, _DC, _DD)


def probe_distribution(intercept: bool, phase: float | None = None) -> dict[str, float]:
    st = probe_state(intercept, phase)
    pc, pd = abs(st.amp(_DC)) ** 2, abs(st.amp(_DD)) ** 2
    return {"Dc": pc, "Dd": pd, "none": max(0.0, 1.0 - pc - pd)}


def counterfactual_probe(
    intercept: bool,
    defense: DefenseConfig,
    rng: np.random.Generator,
    phase: float | None = None,
    slot: int = 0,
) -> ProbeOutcome:
    """One FBS probe of Bob's box. With the defense on and no phase given, Bob's
    secret phase is drawn uniformly."""
    if defense.enabled and phase is None and not intercept:
        phase = float(rng.uniform(0.0, 2.0 * math.pi))
    if not defense.enabled:
        phase = None
    dist = probe_distribution(intercept, phase)
    u = rng.random()
    result = "Dc" if u < dist["Dc"] else ("Dd" if u < dist["Dc"] + dist["Dd"] else "none")
    return ProbeOutcome(result, slot)


def averaged_probe_likelihood(intercept: bool, defense: DefenseConfig, grid: int = 64) -> dict[str, float]:
    """Probe distribution averaged over Bob's uniform phase (equispaced quadrature,
    exact for the trigonometric integrand)."""
    if not defense.enabled or intercept:
        return probe_distribution(intercept, None)
    acc = {"Dc": 0.0, "Dd": 0.0, "none": 0.0}
    for j in range(grid):
        for key, p in probe_distribution(False, 2.0 * math.pi * j / grid).items():
            acc[key] += p / grid
    return acc


def infer_mode(
    observations: Sequence[ProbeOutcome], prior_intercept: float, defense: DefenseConfig
) -> list[float]:
    """Exact Bayes posterior P(bypass | probe result) per observation."""
    like_i = averaged_probe_likelihood(True, defense)
    like_b = averaged_probe_likelihood(False, defense)
    out = []
    for obs in observations:
        pb = (1.0 - prior_intercept) * like_b[obs.result]
        pi = prior_intercept * like_i[obs.result]
        out.append(pb / (pb + pi) if pb + pi > 0 else float("nan"))
    return out


@dataclass(frozen=True)
class CounterfactualAlice:
    """Honest-looking commit of ``b`` with an FBS probe running in parallel."""

    b: int

    def prepare(self, code: LinearCode, r: Codeword, rng: np.random.Generator):
        return HonestAlice(self.b).prepare(code, r, rng)

    def probe(self, intercept: bool, phase: float | None, rng: np.random.Generator) -> ProbeOutcome:
        return counterfactual_probe(intercept, DefenseConfig(phase is not None), rng, phase=phase)


def certain_bypass_positions(transcript: Transcript) -> list[int]:
    """Send positions where the probe clicked Dc (only possible in bypass mode)."""
    return sorted(i for i, res in transcript.probe_outcomes.items() if res == "Dc")


def counterfactual_announcement(
    transcript: Transcript, code: LinearCode, r: Sequence[int], target_b: int
) -> Announcement:
    """Move to C_(target_b) flipping as few not-certainly-bypassed positions as possible."""
    if transcript.committed is None:
        raise AttackError("attack needs the committed codeword")
    c, b = transcript.committed
    if b == target_b:
        return Announcement(b, c)
    safe = np.zeros(code.n, dtype=np.uint8)
    safe[certain_bypass_positions(transcript)] = 1
    members = code.codewords[parities(code, r) == target_b]
    diff = members ^ np.array(c, dtype=np.uint8)
    risky = (diff & (1 - safe)).sum(axis=1)
    total = diff.sum(axis=1)
    order = np.lexsort((total, risky))
    return Announcement(target_b, tuple(int(x) for x in members[order[0]]))


# --- concealing oracle ---------------------------------------------------------------


def posterior_bias(code: LinearCode, r: Sequence[int], positions: Sequence[int], values: Sequence[int]) -> Fraction:
    """P(b = 0 | c restricted to positions = values) - 1/2, uniform prior on b,
    uniform c within C_(b). Exact."""
    par = parities(code, r)
    words = code.codewords
    match = np.all(words[:, list(positions)] == np.array(values, dtype=np.uint8), axis=1)
    n0 = int(np.sum(match & (par == 0)))
    n1 = int(np.sum(match & (par == 1)))
    size0, size1 = int(np.sum(par == 0)), int(np.sum(par == 1))
    if n0 + n1 == 0:
        raise AttackError("view is inconsistent with every codeword")
    w0, w1 = Fraction(n0, size0), Fraction(n1, size1)
    return w0 / (w0 + w1) - Fraction(1, 2)


def max_view_bias(code: LinearCode, r: Sequence[int], j: int) -> Fraction:
    """Largest |bias| over every j-position view consistent with the code."""
    best = Fraction(0)
    words = code.codewords
    for positions in itertools.combinations(range(code.n), j):
        for values in {tuple(int(x) for x in w[list(positions)]) for w in words}:
            best = max(best, abs(posterior_bias(code, r, positions, values)))
    return best


def first_revealing_size(code: LinearCode, r: Sequence[int]) -> int | None:
    """Smallest j for which some j-position view has nonzero bias."""
    for j in range(1, code.n + 1):
        if max_view_bias(code, r, j) != 0:
            return j
    return None


def revealing_coset_weight(code: LinearCode, r: Sequence[int]) -> int:
    """min weight of r + (dual code): the smallest view size that can fix b.

    Enumerates the dual by brute force, so only for small n.
    """
    if code.n > 20:
        raise AttackError("dual enumeration limited to n <= 20")
    best = code.n + 1
    g = code.generator
    rv = np.array(r, dtype=np.uint8)
    for bits in itertools.product((0, 1), repeat=code.n):
        h = np.array(bits, dtype=np.uint8)
        if np.any((g @ h) % 2):
            continue
        best = min(best, int((h ^ rv).sum()))
    return best


def consistent(transcript: Transcript, c: Sequence[int]) -> bool:
    """Does c agree with everything Bob measured?"""
    return all(c[i] == v for i, v in transcript.bob_view().items())


__all__ = [
    "DefenseConfig",
    "DEFENSE_OFF",
    "DEFENSE_ON",
    "SuperposedCommitment",
    "SuperposedAlice",
    "CounterfactualAlice",
    "ProbeOutcome",
    "superposed_commit",
    "uniform_superposition",
    "random_superposition",
    "collapse_on_intercept",
    "unveil_probabilities",
    "sample_unveils",
    "alice_flip_attack",
    "flip_escape_probability",
    "bob_over_intercept",
    "probe_state",
    "probe_distribution",
    "counterfactual_probe",
    "averaged_probe_likelihood",
    "infer_mode",
    "certain_bypass_positions",
    "counterfactual_announcement",
    "posterior_bias",
    "max_view_bias",
    "first_revealing_size",
    "revealing_coset_weight",
]
