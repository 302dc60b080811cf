"""Commit / unveil state machines for the orthogonal-state bit commitment.

One run walks the s time slots: Alice sends the n codeword qubits at secret,
increasing slots; at every slot Bob either intercepts (measures Alice's qubit
and resends it with his own probe photon) or bypasses. Alice counts the clicks
she gets back, estimates Bob's intercept rate, and aborts if it is too high.
Unveil checks the announced codeword against what Bob saw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np

from . import optics
from .codes import (
    Codeword,
    LinearCode,
    check_partition_key,
    dot_parity,
    draw_partition_key,
    sample_codeword,
)
from .optics import Kind, ModeLabel, Outcome

if TYPE_CHECKING:
    from .adversary import DefenseConfig

NOT_CODEWORD = "not_codeword"
PARITY_MISMATCH = "parity_mismatch"
STATE_MISMATCH = "state_mismatch"
ABORT_ALPHA = "abort_alpha"
TIMING_MISMATCH = "timing_mismatch"
REASONS = (NOT_CODEWORD, PARITY_MISMATCH, STATE_MISMATCH, ABORT_ALPHA, TIMING_MISMATCH)

_DET_CODE = {Outcome.D0: 0, Outcome.D1: 1, Outcome.NONE: -1}
_DET_NAME = {0: "D0", 1: "D1", -1: "none"}


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProtocolParams:
    """Agreed protocol parameters.

    ``alpha_abort`` switches Alice's alpha-estimate abort rule; binding studies on
    repetition codes (where 1 - d/n = 0) turn it off. ``alpha_margin`` is
    subtracted from the continue threshold.
    """

    n: int
    k: int
    d: int
    s: int
    alpha: float
    eps_dephase: float = 0.0
    eps_loss: float = 0.0
    tau_slots: int = 1
    alpha_abort: bool = True
    alpha_margin: float = 0.0

    def __post_init__(self) -> None:
        if self.s <= self.n:
            raise ValueError(f"need s > n, got s={self.s}, n={self.n}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        for p in (self.eps_dephase, self.eps_loss):
            if not 0.0 <= p <= 1.0:
                raise ValueError("noise rates must lie in [0, 1]")
        if self.tau_slots != optics.TAU:
            raise ValueError("tau is fixed at one slot")
        if self.alpha_abort and not self.n > self.k > self.d:
            raise ValueError(f"abort rule needs n > k > d, got ({self.n},{self.k},{self.d})")

    @classmethod
    def for_code(cls, code: LinearCode, s: int | None = None, **kw) -> "ProtocolParams":
        kw.setdefault("alpha", 0.2)
        return cls(n=code.n, k=code.k, d=code.d, s=50 * code.n if s is None else s, **kw)

    @property
    def threshold(self) -> float:
        return 1.0 - self.d / self.n


@dataclass(frozen=True)
class Announcement:
    b: int
    c: Codeword


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.accepted and self.reason is not None:
            raise ValueError("an accepted verdict carries no reason")
        if not self.accepted and self.reason not in REASONS:
            raise ValueError(f"unknown reject reason {self.reason!r}")

    @classmethod
    def accept(cls) -> "Verdict":
        return cls(True)

    @classmethod
    def reject(cls, reason: str) -> "Verdict":
        return cls(False, reason)

    def label(self) -> str:
        return "accept" if self.accepted else self.reason


# --- Alice's commitment sources -------------------------------------------------


class _FixedSource:
    def __init__(self, c: Codeword):
        self.c = c

    def bit(self, i: int, rng: np.random.Generator) -> int:
        return self.c[i]

    def final(self, rng: np.random.Generator) -> Codeword:
        return self.c


@dataclass(frozen=True)
class HonestAlice:
    """Commits to ``b`` with a uniformly chosen codeword of C_(b)."""

    b: int

    def prepare(self, code: LinearCode, r: Codeword, rng: np.random.Generator):
        return _FixedSource(sample_codeword(code, r, self.b, rng))


@dataclass(frozen=True)
class FixedCodewordAlice:
    codeword: Codeword

    def prepare(self, code: LinearCode, r: Codeword, rng: np.random.Generator):
        if not code.contains(self.codeword):
            raise ProtocolError("fixed codeword is not in the code")
        return _FixedSource(tuple(self.codeword))


@dataclass(frozen=True)
class HonestBob:
    """Intercepts each slot independently with probability ``alpha``.

    ``alpha=None`` uses the agreed ``ProtocolParams.alpha``.
    """

    alpha: float | None = None
    defense: "DefenseConfig | None" = None

    def rate(self, params: ProtocolParams) -> float:
        return params.alpha if self.alpha is None else self.alpha


# --- transcript -----------------------------------------------------------------


@dataclass
class Transcript:
    code_name: str
    n: int
    s: int
    r: Codeword
    send_times: list[int]
    bob_modes: np.ndarray  # bool per slot, True = intercept
    bob_observations: dict[int, int | None]  # intercepted slot -> 0, 1 or None
    alice_detections: np.ndarray  # int8 per slot: 0 = D0, 1 = D1, -1 = none
    n_prime: int
    alpha_estimate: float
    committed: tuple[Codeword, int] | None = None
    aborted: str | None = None
    probe_outcomes: dict[int, str] = field(default_factory=dict)  # send position -> Dc/Dd
    source: Any = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.send_times) != self.n or any(
            a >= b for a, b in zip(self.send_times, self.send_times[1:])
        ):
            raise ValueError("send_times must hold n strictly increasing slots")

    def intercepted_positions(self) -> list[int]:
        """Codeword positions i whose send slot Bob intercepted."""
        return [i for i, t in enumerate(self.send_times) if self.bob_modes[t - 1]]

    def bob_view(self) -> dict[int, int]:
        """Position -> bit Bob measured, for intercepted positions where he saw a qubit."""
        view = {}
        for i in self.intercepted_positions():
            obs = self.bob_observations.get(self.send_times[i])
            if obs is not None:
                view[i] = obs
        return view

    def detection_names(self) -> list[str]:
        return [_DET_NAME[int(x)] for x in self.alice_detections]

    def to_json(self, verdict: Verdict | None = None) -> dict:
        return {
            "send_times": list(self.send_times),
            "bob_modes": ["intercept" if m else "bypass" for m in self.bob_modes],
            "detections": self.detection_names(),
            "n_prime": int(self.n_prime),
            "alpha_estimate": float(self.alpha_estimate),
            "verdict": None if verdict is None else verdict.label(),
        }


# --- operations -----------------------------------------------------------------


def schedule_send_times(n: int, s: int, rng: np.random.Generator) -> list[int]:
    """Uniform random n-subset of {1..s}, ascending."""
    if n > s:
        raise ValueError(f"cannot schedule {n} sends in {s} slots")
    return sorted(int(x) + 1 for x in rng.choice(s, size=n, replace=False))


def estimate_alpha(n_prime: int, n: int, s: int) -> float:
    """2 (n' - n) / (s - n), clamped to [0, 1]."""
    if s <= n:
        raise ValueError("need s > n")
    return min(1.0, max(0.0, 2.0 * (n_prime - n) / (s - n)))


@dataclass(frozen=True)
class SlotResult:
    bob: Outcome | None  # Bob's measurement, None in bypass mode
    alice: Outcome


def bob_probe(slot: int = 1) -> optics.PhotonState:
    """Bob's intercept-mode photon: Psi_0 with the b packet held back."""
    probe = optics.encode_qubit(0, slot)
    return probe.relabel({optics.B(slot + optics.TAU): ModeLabel(Kind.HELD, slot + optics.TAU)})


def release_probe(probe: optics.PhotonState, bob_result: Outcome, slot: int = 1) -> optics.PhotonState:
    """Bob's feed-forward: pass, flip or discard the held packet, then send it on B."""
    held = ModeLabel(Kind.HELD, slot + optics.TAU)
    if bob_result is Outcome.D1:
        probe = optics.phase_shift(probe, held, math.pi)
    if bob_result is Outcome.NONE:
        return probe.relabel({held: ModeLabel(Kind.DISCARDED, slot + optics.TAU)})
    return probe.relabel({held: optics.B(slot + optics.TAU)})


def run_slot(
    bit: int | None,
    intercept: bool,
    params: ProtocolParams,
    rng: np.random.Generator,
    phase: float | None = None,
    slot: int = 1,
) -> SlotResult:
    """Simulate one slot explicitly. ``bit=None`` means Alice sent nothing.

    Noise is applied once per channel traversal; ``phase`` is Bob's defense
    phase, applied to both channels in bypass mode.
    """
    eps_f, eps_l = params.eps_dephase, params.eps_loss
    photon = None
    if bit is not None:
        photon = optics.apply_channel_noise(optics.encode_qubit(bit, slot), eps_f, eps_l, rng)
    if not intercept:
        if photon is None:
            return SlotResult(None, Outcome.NONE)
        if phase is not None:
            photon = optics.phase_shift_kind(optics.phase_shift_kind(photon, Kind.A, phase), Kind.B, phase)
        photon = optics.apply_channel_noise(photon, eps_f, eps_l, rng)
        return SlotResult(None, optics.mz_sample(photon, rng).result)
    bob_result = Outcome.NONE if photon is None else optics.mz_sample(photon, rng).result
    probe = release_probe(bob_probe(slot), bob_result, slot)
    probe = optics.apply_channel_noise(probe, eps_f, eps_l, rng)
    return SlotResult(bob_result, optics.mz_sample(probe, rng).result)


@lru_cache(maxsize=64)
def empty_intercept_distribution(eps_dephase: float, eps_loss: float) -> tuple[float, float, float]:
    """(P(D0), P(D1), P(none)) at Alice when Bob intercepts an empty slot."""
    probe = release_probe(bob_probe(), Outcome.NONE)
    dist = optics.mixture_distribution(optics.noise_branches(probe, eps_dephase, eps_loss))
    return dist[Outcome.D0], dist[Outcome.D1], dist[Outcome.NONE]


def _sample_codes(dist: tuple[float, float, float], u: np.ndarray) -> np.ndarray:
    p0, p1, _ = dist
    out = np.full(u.shape, -1, dtype=np.int8)
    out[u < p0 + p1] = 1
    out[u < p0] = 0
    return out


def run_commit(
    params: ProtocolParams,
    code: LinearCode,
    alice,
    bob: HonestBob,
    rng: np.random.Generator,
    r: Sequence[int] | None = None,
) -> Transcript:
    """Commit phase, up to and including Bob's timing check.

    Slots where Alice sends are simulated photon by photon. Empty intercepted
    slots are i.i.d. and sampled in bulk from the distribution the optics
    gives for Bob's discarded probe. Empty bypass slots never click.
    """
    if (code.n, code.k, code.d) != (params.n, params.k, params.d):
        raise ProtocolError("code does not match protocol parameters")
    r = draw_partition_key(code, rng) if r is None else check_partition_key(code, r)
    source = alice.prepare(code, r, rng)
    n, s = params.n, params.s

    send_times = schedule_send_times(n, s, rng)
    modes = rng.random(s) < bob.rate(params)
    defense = bob.defense if bob.defense is not None and bob.defense.enabled else None
    phases = defense.draw_phases(s, rng) if defense else None

    sent = np.zeros(s, dtype=bool)
    sent[np.array(send_times) - 1] = True
    detections = np.full(s, -1, dtype=np.int8)
    empty_int = modes & ~sent
    dist = empty_intercept_distribution(params.eps_dephase, params.eps_loss)
    detections[empty_int] = _sample_codes(dist, rng.random(int(empty_int.sum())))
    observations: dict[int, int | None] = {int(t) + 1: None for t in np.flatnonzero(empty_int)}

    probe = getattr(alice, "probe", None)
    probes: dict[int, str] = {}
    for i, t in enumerate(send_times):
        intercept = bool(modes[t - 1])
        phase = None if phases is None or intercept else float(phases[t - 1])
        res = run_slot(source.bit(i, rng), intercept, params, rng, phase=phase, slot=t)
        detections[t - 1] = _DET_CODE[res.alice]
        if intercept:
            observations[t] = None if res.bob is Outcome.NONE else _DET_CODE[res.bob]
        if probe is not None:
            probes[i] = probe(intercept, phase, rng).result

    n_prime = int((detections >= 0).sum())
    tr = Transcript(
        code_name=code.name,
        n=n,
        s=s,
        r=tuple(r),
        send_times=send_times,
        bob_modes=modes,
        bob_observations=observations,
        alice_detections=detections,
        n_prime=n_prime,
        alpha_estimate=estimate_alpha(n_prime, n, s),
        probe_outcomes=probes,
        source=source,
    )
    if isinstance(source, _FixedSource):
        tr.committed = (source.c, dot_parity(source.c, r))

    if params.alpha_abort and tr.alpha_estimate >= params.threshold - params.alpha_margin:
        tr.aborted = ABORT_ALPHA
    elif not timing_consistent(tr, lossy=params.eps_loss > 0):
        tr.aborted = TIMING_MISMATCH
    return tr


def timing_consistent(tr: Transcript, lossy: bool = False) -> bool:
    """Bob's timing check over his intercepted slots.

    A detection must occur at every announced send slot and nowhere else. On a
    lossy channel a missing detection at a send slot is tolerated.
    """
    sends = set(tr.send_times)
    for slot, obs in tr.bob_observations.items():
        if obs is not None and slot not in sends:
            return False
        if obs is None and slot in sends and not lossy:
            return False
    return True


def noise_allowance(eps: float, checked: int) -> float:
    """One-sided 3-sigma binomial allowance on mismatches."""
    return eps * checked + 3.0 * math.sqrt(eps * (1.0 - eps) * checked)


def run_unveil(
    transcript: Transcript,
    ann: Announcement,
    code: LinearCode,
    r: Sequence[int],
    eps_tolerance: float = 0.0,
) -> Verdict:
    """Bob's verdict on Alice's announcement."""
    if transcript.aborted is not None:
        raise ProtocolError(f"cannot unveil an aborted commitment ({transcript.aborted})")
    c = tuple(int(x) for x in ann.c)
    if len(c) != code.n or not code.contains(c):
        return Verdict.reject(NOT_CODEWORD)
    if dot_parity(c, r) != ann.b:
        return Verdict.reject(PARITY_MISMATCH)
    view = transcript.bob_view()
    mismatches = sum(c[i] != v for i, v in view.items())
    if mismatches > noise_allowance(eps_tolerance, len(view)):
        return Verdict.reject(STATE_MISMATCH)
    return Verdict.accept()


def commit_verdict(transcript: Transcript) -> Verdict | None:
    """Reject verdict for an aborted commit, else None."""
    return None if transcript.aborted is None else Verdict.reject(transcript.aborted)


def honest_announcement(transcript: Transcript, rng: np.random.Generator) -> Announcement:
    """Alice reveals what she committed (a superposed source collapses here)."""
    c = transcript.source.final(rng)
    b = dot_parity(c, transcript.r)
    if transcript.committed is None:
        transcript.committed = (c, b)
    return Announcement(b=b, c=c)


def run_coin_toss(
    params: ProtocolParams,
    code: LinearCode,
    rng: np.random.Generator,
    alice=None,
    bob: HonestBob | None = None,
) -> tuple[int | None, Verdict]:
    """Commit b, Bob announces a random x, unveil; the coin is b XOR x on accept."""
    if alice is None:
        alice = HonestAlice(int(rng.integers(2)))
    tr = run_commit(params, code, alice, bob or HonestBob(), rng)
    if tr.aborted is not None:
        raise ProtocolError(f"commit aborted: {tr.aborted}")
    x = int(rng.integers(2))
    ann = honest_announcement(tr, rng)
    verdict = run_unveil(tr, ann, code, tr.r, params.eps_dephase)
    return (ann.b ^ x if verdict.accepted else None), verdict


def run_bit_string_commit(
    m: int,
    params: ProtocolParams,
    code: LinearCode,
    rng: np.random.Generator,
    bits: Sequence[int] | None = None,
) -> list[tuple[Transcript, Verdict]]:
    """Commit to m bits by m independent runs on spawned RNG streams."""
    if m < 1:
        raise ValueError("m must be at least 1")
    children = rng.spawn(m)
    if bits is None:
        bits = [int(g.integers(2)) for g in children]
    if len(bits) != m:
        raise ValueError("need one bit per instance")
    out = []
    for bit, g in zip(bits, children):
        tr = run_commit(params, code, HonestAlice(int(bit)), HonestBob(), g)
        verdict = commit_verdict(tr)
        if verdict is None:
            verdict = run_unveil(tr, honest_announcement(tr, g), code, tr.r, params.eps_dephase)
        out.append((tr, verdict))
    return out
