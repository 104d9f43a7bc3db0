"""Per-channel phase compensation and drift realignment.

The compensator sits on the signal arm after demultiplexing: a
QWP-QWP-HWP chain synthesized to the diagonal phase that nulls the HH/VV
phase estimated from that channel's reconstructed state. The same unitary
can be applied before measurement (as the plates would be) or to an
already reconstructed matrix; both give the same state.

Drift realignment is an oracle reset: in simulation the accumulated
birefringence is known exactly, so the correction is its inverse.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .measure import WaveplateChain, jones_hwp, jones_qwp
from .qstate import HH, VV, apply_local, check_physical, check_unitary

COHERENCE_THRESHOLD = 1e-6
SYNTHESIS_TOL = 1e-12

_EYE2 = np.eye(2, dtype=complex)


class NoPhaseInformationError(ValueError):
    pass


def operator_distance(u, v) -> float:
    """Frobenius distance between ``u`` and ``v`` minimized over a global phase."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    overlap = np.trace(v.conj().T @ u)
    phase = np.exp(-1j * np.angle(overlap)) if overlap != 0 else 1.0
    return float(np.linalg.norm(u * phase - v))


def estimate_theta(rho) -> float:
    """HH/VV phase of ``rho``; rotating by it puts the coherence on the positive real axis."""
    rho = check_physical(rho)
    c = rho[HH, VV]
    if abs(c) <= COHERENCE_THRESHOLD:
        raise NoPhaseInformationError(f"|rho_HH,VV| = {abs(c):.2e} carries no usable phase")
    return float(-np.angle(c))


def phase_unitary(theta: float) -> np.ndarray:
    """Signal-arm plate that removes a two-photon phase ``theta``."""
    return np.diag([1.0, np.exp(-1j * theta)])


def _chain_residual(angles, target):
    m = jones_qwp(angles[0]) @ jones_qwp(angles[1]) @ jones_hwp(angles[2])
    overlap = np.trace(target.conj().T @ m)
    d = m * np.exp(-1j * np.angle(overlap)) - target
    return np.concatenate([d.real.ravel(), d.imag.ravel()])


_STARTS = [np.array(s) for s in itertools.product(np.linspace(0, np.pi, 4, endpoint=False) + 0.3, repeat=3)]


def synthesize_chain(u_target) -> WaveplateChain:
    """Waveplate angles with QWP(q1) QWP(q2) HWP(h) equal to ``u_target`` up to phase.

    Angles are returned in [0, pi).
    """
    u = check_unitary(u_target)
    u = u / np.sqrt(np.linalg.det(u))
    best, best_d = None, np.inf
    for x0 in _STARTS:
        sol = least_squares(_chain_residual, x0, args=(u,), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        chain = WaveplateChain(*np.mod(sol.x, np.pi))
        d = operator_distance(chain.matrix(), u)
        if d < best_d:
            best, best_d = chain, d
        if best_d < SYNTHESIS_TOL:
            break
    return best


@dataclass(frozen=True)
class PlanEntry:
    channel: int
    theta_estimate: float
    chain: WaveplateChain

    def unitary(self) -> np.ndarray:
        return self.chain.matrix()


@dataclass
class CompensationPlan:
    entries: dict[int, PlanEntry] = field(default_factory=dict)
    drift_correction: tuple[np.ndarray, np.ndarray] = (_EYE2, _EYE2)
    updated_at: int = 0

    def rows(self) -> list[dict]:
        return [
            {
                "channel": e.channel,
                "theta_estimate": e.theta_estimate,
                "q1_deg": float(np.degrees(e.chain.qwp1_angle)),
                "q2_deg": float(np.degrees(e.chain.qwp2_angle)),
                "h_deg": float(np.degrees(e.chain.hwp_angle)),
            }
            for e in sorted(self.entries.values(), key=lambda e: e.channel)
        ]


def fit_entry(rho, channel: int = 0) -> PlanEntry:
    theta = estimate_theta(rho)
    return PlanEntry(channel, theta, synthesize_chain(phase_unitary(theta)))


def entry_from_angles(channel: int, theta: float, q1_deg: float, q2_deg: float, h_deg: float) -> PlanEntry:
    return PlanEntry(channel, theta, WaveplateChain(*np.radians([q1_deg, q2_deg, h_deg])))


def compensate_channel(rho, entry: PlanEntry) -> np.ndarray:
    """Apply the entry's chain to the signal photon only."""
    rho = check_physical(rho)
    return apply_local(rho, entry.unitary(), _EYE2)


@dataclass
class LinkState:
    """Mutable per-run record of the fiber birefringence and its corrections."""

    drift: tuple[np.ndarray, np.ndarray] = (_EYE2, _EYE2)
    correction: tuple[np.ndarray, np.ndarray] = (_EYE2, _EYE2)
    interval: int = 0
    updated_at: int = 0

    def residual(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(c @ d for c, d in zip(self.correction, self.drift))


def drift_realign(state: LinkState, monitor_reference) -> tuple[np.ndarray, np.ndarray]:
    """Reset both arms so the monitor polarization comes back on axis.

    Updates ``state`` in place and returns the new per-arm corrections.
    """
    ref = np.asarray(monitor_reference, dtype=complex)
    correction = tuple(d.conj().T for d in state.drift)
    for c, d in zip(correction, state.drift):
        leak = leakage(c @ d, ref)
        if leak > 1e-6:
            raise RuntimeError(f"realignment left {leak:.2e} of the reference off axis")
    state.correction = correction
    state.updated_at = state.interval
    return correction


def leakage(u, reference) -> float:
    """Power of ``u @ reference`` outside the reference polarization."""
    ref = np.asarray(reference, dtype=complex)
    return float(max(0.0, 1.0 - abs(ref.conj() @ (np.asarray(u) @ ref)) ** 2))
