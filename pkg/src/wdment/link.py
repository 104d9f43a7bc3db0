"""Fiber arms between the source and the demultiplexers.

Each arm carries first-order PMD with principal axes on H/V (a diagonal
phase that is linear in optical frequency), a slowly drifting random
birefringence, and optional depolarization. Loss does not touch the
polarization state; `transmission` is consumed by the count model.

The PMD phase is referenced to the plan's channel 1 so that channel 1 sees
exactly the source phase. Because signal and idler frequencies sum to the
pump frequency, equal DGD in both arms cancels in the two-photon phase.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_grid import ChannelPair
from .errors import require
from .qstate import SIGMA_X, SIGMA_Y, SIGMA_Z, apply_local, depolarize, check_physical

TWO_PI = 2.0 * np.pi
ARMS = ("signal", "idler")


@dataclass(frozen=True)
class LinkParams:
    length: float = 5.0  # km per arm
    attenuation: float = 0.0  # dB/km
    dgd_signal: float = 0.0  # ps
    dgd_idler: float = 0.0  # ps
    drift_step: float = 0.0  # rad per compensation interval
    depol: float = 0.0
    seed: int = 0

    def __post_init__(self):
        require(self.length >= 0, "length", "must be >= 0")
        require(self.attenuation >= 0, "attenuation", "must be >= 0")
        require(self.drift_step >= 0, "drift_step", "must be >= 0")
        require(0.0 <= self.depol <= 1.0, "depol", "must lie in [0, 1]")
        require(np.isfinite(self.dgd_signal), "dgd_signal", "must be finite")
        require(np.isfinite(self.dgd_idler), "dgd_idler", "must be finite")


def transmission(params: LinkParams) -> float:
    """Per-photon survival probability through one arm."""
    return 10.0 ** (-params.attenuation * params.length / 10.0)


def channel_theta(channel: ChannelPair, params: LinkParams, theta_ref: float = 0.0) -> float:
    """Two-photon HH/VV phase seen at ``channel`` given ``theta_ref`` at channel 1."""
    dtau = params.dgd_signal - params.dgd_idler
    return theta_ref + TWO_PI * dtau * (channel.signal_freq - channel.ref_signal_freq)


def pmd_unitaries(channel: ChannelPair, params: LinkParams) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal H/V phase plates for the signal and idler arms (ps * THz = cycles)."""
    ref_idler = channel.pump_freq - channel.ref_signal_freq
    phi_s = TWO_PI * params.dgd_signal * (channel.signal_freq - channel.ref_signal_freq)
    phi_i = TWO_PI * params.dgd_idler * (channel.idler_freq - ref_idler)
    return np.diag([1.0, np.exp(1j * phi_s)]), np.diag([1.0, np.exp(1j * phi_i)])


# -- birefringence drift -----------------------------------------------------

def arm_rng(seed: int, arm: str) -> np.random.Generator:
    """Independent, reproducible stream for one fiber arm."""
    return np.random.default_rng([int(seed), 0, ARMS.index(arm) + 1])


def rotation_unitary(omega) -> np.ndarray:
    """SU(2) element rotating the Poincare sphere by the vector ``omega`` (rad).

    Accepts shape (3,) or (n, 3) and returns (2, 2) or (n, 2, 2).
    """
    omega = np.asarray(omega, dtype=float)
    single = omega.ndim == 1
    omega = np.atleast_2d(omega)
    angle = np.linalg.norm(omega, axis=1)
    safe = np.where(angle > 0, angle, 1.0)
    axis = omega / safe[:, None]
    gen = (
        axis[:, 0, None, None] * SIGMA_Z
        + axis[:, 1, None, None] * SIGMA_X
        + axis[:, 2, None, None] * SIGMA_Y
    )
    u = np.cos(angle / 2)[:, None, None] * np.eye(2) - 1j * np.sin(angle / 2)[:, None, None] * gen
    return u[0] if single else u


def drift_steps(n: int, drift_step: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` step unitaries; each rotation vector has rms length ``drift_step``."""
    omega = rng.normal(scale=drift_step / np.sqrt(3.0), size=(n, 3))
    return rotation_unitary(omega) if n else np.zeros((0, 2, 2), dtype=complex)


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    # mats[k] is applied k-th, so the result is mats[-1] @ ... @ mats[0].
    if len(mats) == 0:
        return np.eye(2, dtype=complex)
    while len(mats) > 1:
        even = len(mats) // 2 * 2
        paired = mats[1:even:2] @ mats[0:even:2]
        mats = np.concatenate([paired, mats[even:]])
    return mats[0]


def drift_unitary(elapsed_intervals: int, params: LinkParams, rng: np.random.Generator) -> np.ndarray:
    """Accumulated birefringence after ``elapsed_intervals`` random-walk steps.

    The walk consumes ``rng``; pass a fresh ``arm_rng(seed, arm)`` for a
    reproducible draw.
    """
    if elapsed_intervals < 0:
        raise ValueError("elapsed_intervals must be >= 0")
    if params.drift_step == 0:
        return np.eye(2, dtype=complex)
    return _ordered_product(drift_steps(int(elapsed_intervals), params.drift_step, rng))


def drift_path(n_intervals: int, params: LinkParams, rng: np.random.Generator) -> np.ndarray:
    """Cumulative drift unitaries at intervals 0..n_intervals (``path[0]`` is identity)."""
    path = np.empty((n_intervals + 1, 2, 2), dtype=complex)
    path[0] = np.eye(2)
    if params.drift_step == 0:
        path[1:] = np.eye(2)
        return path
    steps = drift_steps(n_intervals, params.drift_step, rng)
    for t in range(n_intervals):
        path[t + 1] = steps[t] @ path[t]
    return path


def rotation_angle(u) -> float:
    """Poincare-sphere rotation angle of a 2x2 unitary, ignoring global phase."""
    u = np.asarray(u, dtype=complex)
    c = abs(np.trace(u)) / 2 / np.sqrt(abs(np.linalg.det(u)))
    return float(2.0 * np.arccos(min(c, 1.0)))


def drift_trace(path: np.ndarray) -> list[dict]:
    return [{"interval": t, "rotation_angle": rotation_angle(u)} for t, u in enumerate(path)]


def apply_link(
    rho,
    channel: ChannelPair,
    params: LinkParams,
    elapsed_intervals: int = 0,
    drift: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Propagate a two-photon state through both arms.

    ``drift`` overrides the per-arm birefringence (e.g. a residual after
    realignment); by default it is drawn from ``params.seed``.
    """
    rho = check_physical(rho)
    if drift is None:
        drift = tuple(drift_unitary(elapsed_intervals, params, arm_rng(params.seed, a)) for a in ARMS)
    p_s, p_i = pmd_unitaries(channel, params)
    out = apply_local(rho, drift[0] @ p_s, drift[1] @ p_i)
    return depolarize(out, params.depol)
