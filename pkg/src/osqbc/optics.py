"""Single-photon dual-rail optics for the Mach-Zehnder apparatus.

A :class:`PhotonState` holds one optical excitation spread over labeled modes
plus a vacuum amplitude. Every protocol photon is simulated on its own: Bob's
probe and Alice's photon never meet on a splitter.

Beam-splitter convention: ``out1 = (in1 + in2)/sqrt2``, ``out2 = (in1 - in2)/sqrt2``.
With in1 = channel A (delayed) and in2 = channel B this sends Psi_0 to D0 and
Psi_1 to D1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

TAU = 1  # delay between the two wave packets, in slots
NORM_TOL = 1e-9
SQRT_HALF = 1.0 / math.sqrt(2.0)


class OpticsError(ValueError):
    pass


class Kind(str, Enum):
    A = "channelA"
    B = "channelB"
    HELD = "heldByBob"
    D0 = "detectorD0"
    D1 = "detectorD1"
    DISCARDED = "discarded"
    # counterfactual probe (FBS) arms and detectors
    PROBE_A = "probeA"
    PROBE_B = "probeB"
    DC = "detectorDc"
    DD = "detectorDd"


class Outcome(str, Enum):
    D0 = "D0"
    D1 = "D1"
    NONE = "none"


@dataclass(frozen=True, order=True)
class ModeLabel:
    kind: Kind
    slot: int = 1

    def __repr__(self) -> str:
        return f"{self.kind.value}@{self.slot}"


def A(slot: int = 1) -> ModeLabel:
    return ModeLabel(Kind.A, slot)


def B(slot: int = 1) -> ModeLabel:
    return ModeLabel(Kind.B, slot)


@dataclass(frozen=True)
class DetectionOutcome:
    result: Outcome
    slot: int


@dataclass(frozen=True)
class PhotonState:
    amplitudes: Mapping[ModeLabel, complex] = field(default_factory=dict)
    vacuum: complex = 0j

    def norm2(self) -> float:
        return sum(abs(a) ** 2 for a in self.amplitudes.values()) + abs(self.vacuum) ** 2

    def amp(self, mode: ModeLabel) -> complex:
        return self.amplitudes.get(mode, 0j)

    def replace(self, updates: Mapping[ModeLabel, complex], drop=(), vacuum=None) -> "PhotonState":
        amps = {m: a for m, a in self.amplitudes.items() if m not in drop}
        amps.update(updates)
        return PhotonState(amps, self.vacuum if vacuum is None else vacuum)

    def relabel(self, mapping: Mapping[ModeLabel, ModeLabel]) -> "PhotonState":
        amps: dict[ModeLabel, complex] = {}
        for m, a in self.amplitudes.items():
            tgt = mapping.get(m, m)
            amps[tgt] = amps.get(tgt, 0j) + a
        return PhotonState(amps, self.vacuum)

    def inner(self, other: "PhotonState") -> complex:
        """<self|other> over the single-excitation sector plus vacuum."""
        s = sum(a.conjugate() * other.amp(m) for m, a in self.amplitudes.items())
        return s + self.vacuum.conjugate() * other.vacuum

    def dump(self) -> str:
        """Debug dump, one ``mode: re,im`` line per mode, 9 decimals."""
        lines = [f"{m!r}: {a.real:.9f},{a.imag:.9f}" for m, a in sorted(self.amplitudes.items())]
        lines.append(f"vacuum: {self.vacuum.real:.9f},{self.vacuum.imag:.9f}")
        return "\n".join(lines)


def encode_qubit(bit: int, slot: int = 1) -> PhotonState:
    """|Psi_bit> = (|a> + (-1)^bit |b>)/sqrt2, b packet tau slots after a."""
    if bit not in (0, 1):
        raise OpticsError("bit must be 0 or 1")
    sign = -1.0 if bit else 1.0
    return PhotonState({A(slot): complex(SQRT_HALF), B(slot + TAU): complex(sign * SQRT_HALF)})


def beam_splitter(
    state: PhotonState, in1: ModeLabel, in2: ModeLabel, out1: ModeLabel, out2: ModeLabel
) -> PhotonState:
    """Balanced real splitter [[1, 1], [1, -1]]/sqrt2 from (in1, in2) to (out1, out2)."""
    if in1 == in2 or out1 == out2:
        raise OpticsError("beam splitter ports must be distinct")
    for o in (out1, out2):
        if o not in (in1, in2) and abs(state.amp(o)) > 0:
            raise OpticsError(f"output mode {o!r} already populated")
    x, y = state.amp(in1), state.amp(in2)
    return state.replace(
        {out1: (x + y) * SQRT_HALF, out2: (x - y) * SQRT_HALF}, drop=(in1, in2)
    )


def phase_shift(state: PhotonState, mode: ModeLabel, phi: float) -> PhotonState:
    if mode not in state.amplitudes:
        return state
    return state.replace({mode: state.amplitudes[mode] * complex(math.cos(phi), math.sin(phi))})


def phase_shift_kind(state: PhotonState, kind: Kind, phi: float) -> PhotonState:
    """Phase on every mode of one kind (a device acting on a whole channel)."""
    for m in [m for m in state.amplitudes if m.kind is kind]:
        state = phase_shift(state, m, phi)
    return state


def _qubit_slot(state: PhotonState) -> int:
    a_slots = {m.slot for m in state.amplitudes if m.kind is Kind.A}
    b_slots = {m.slot - TAU for m in state.amplitudes if m.kind is Kind.B}
    slots = a_slots | b_slots
    if len(slots) > 1:
        raise OpticsError("state spans more than one qubit slot")
    return slots.pop() if slots else 1


def mz_combine(state: PhotonState) -> PhotonState:
    """Delay channel A by tau and combine it with channel B onto D0/D1."""
    t = _qubit_slot(state)
    delayed = state.relabel({A(t): A(t + TAU)})
    return beam_splitter(
        delayed, A(t + TAU), B(t + TAU), ModeLabel(Kind.D0, t + TAU), ModeLabel(Kind.D1, t + TAU)
    )


def mz_measure(state: PhotonState) -> dict[Outcome, float]:
    """Born distribution over D0 / D1 / no click for one dual-rail qubit."""
    if abs(state.norm2() - 1.0) > NORM_TOL:
        raise OpticsError(f"state not normalized: {state.norm2()!r}")
    t = _qubit_slot(state)
    out = mz_combine(state)
    p0 = abs(out.amp(ModeLabel(Kind.D0, t + TAU))) ** 2
    p1 = abs(out.amp(ModeLabel(Kind.D1, t + TAU))) ** 2
    return {Outcome.D0: p0, Outcome.D1: p1, Outcome.NONE: max(0.0, 1.0 - p0 - p1)}


def sample_outcome(dist: Mapping[Outcome, float], rng: np.random.Generator) -> Outcome:
    u = rng.random()
    acc = 0.0
    for o in (Outcome.D0, Outcome.D1):
        acc += dist[o]
        if u < acc:
            return o
    return Outcome.NONE


def mz_sample(state: PhotonState, rng: np.random.Generator) -> DetectionOutcome:
    t = _qubit_slot(state)
    return DetectionOutcome(sample_outcome(mz_measure(state), rng), t + TAU)


def lose_photon(state: PhotonState) -> PhotonState:
    """Move all channel-A/B weight into the vacuum amplitude."""
    lost = [m for m in state.amplitudes if m.kind in (Kind.A, Kind.B)]
    w = sum(abs(state.amplitudes[m]) ** 2 for m in lost)
    if w == 0:
        return state
    vac = math.sqrt(abs(state.vacuum) ** 2 + w)
    return state.replace({}, drop=lost, vacuum=complex(vac))


def dephase(state: PhotonState) -> PhotonState:
    return phase_shift_kind(state, Kind.B, math.pi)


def apply_channel_noise(
    state: PhotonState, eps_dephase: float, eps_loss: float, rng: np.random.Generator
) -> PhotonState:
    """One channel traversal: pi phase flip on B w.p. eps_dephase, then loss w.p. eps_loss.

    Always consumes exactly two uniforms from ``rng``.
    """
    for p in (eps_dephase, eps_loss):
        if not 0.0 <= p <= 1.0:
            raise OpticsError("noise probabilities must lie in [0, 1]")
    u_flip, u_loss = rng.random(2)
    if u_flip < eps_dephase:
        state = dephase(state)
    if u_loss < eps_loss:
        state = lose_photon(state)
    return state


def noise_branches(state: PhotonState, eps_dephase: float, eps_loss: float) -> list[tuple[float, PhotonState]]:
    """The mixture that :func:`apply_channel_noise` samples from."""
    out = []
    for pf, flipped in ((1 - eps_dephase, state), (eps_dephase, dephase(state))):
        out.append((pf * (1 - eps_loss), flipped))
        out.append((pf * eps_loss, lose_photon(flipped)))
    return [(p, s) for p, s in out if p > 0]


def mixture_distribution(branches: list[tuple[float, PhotonState]]) -> dict[Outcome, float]:
    total = {o: 0.0 for o in Outcome}
    for p, s in branches:
        for o, q in mz_measure(s).items():
            total[o] += p * q
    return total
