"""Broadband type-0 SPDC source.

Per-channel brightness follows a sinc^2 phase-matching curve in the squared
detuning from degeneracy. The polarization state is the same Werner-mixed
Bell state for every channel; any channel-dependent phase is added later by
the fiber link.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_grid import ChannelPair
from .errors import require
from .qstate import werner


@dataclass(frozen=True)
class SourceParams:
    pump_center: float = 776.0  # nm
    pump_filter_fwhm: float = 1.0  # nm
    crystal_length: float = 1.0  # mm
    temperature: float = 20.0  # degC, recorded only
    theta0: float = 0.0  # rad
    mean_pairs_per_gate: float = 1e-3
    pm_curvature: float = 0.09  # THz^-2
    p0: float = 1.0
    optimized_channel: int = 0  # informational; 0 = unspecified

    def __post_init__(self):
        for name in ("pump_center", "pump_filter_fwhm", "crystal_length"):
            require(getattr(self, name) > 0, name, "must be > 0")
        require(np.isfinite(self.theta0), "theta0", "must be finite")
        require(self.mean_pairs_per_gate >= 0, "mean_pairs_per_gate", "must be >= 0")
        require(self.pm_curvature >= 0, "pm_curvature", "must be >= 0")
        require(0.0 <= self.p0 <= 1.0, "p0", "must lie in [0, 1]")


def phase_matching(detuning_thz, curvature: float):
    """sinc^2(curvature * detuning^2), equal to 1 at zero detuning."""
    x = curvature * np.asarray(detuning_thz, dtype=float) ** 2
    return np.sinc(x / np.pi) ** 2


def spectral_brightness(channel: ChannelPair, params: SourceParams) -> float:
    return float(phase_matching(channel.signal_freq - channel.degeneracy_freq, params.pm_curvature))


def emit_state(channel: ChannelPair, params: SourceParams) -> np.ndarray:
    return werner(params.p0, params.theta0)


def pair_rate(channel: ChannelPair, params: SourceParams, pump_rate: float) -> float:
    """Expected pairs per second in this channel for ``pump_rate`` pump pulses per second."""
    if not pump_rate > 0:
        raise ValueError(f"pump_rate must be > 0, got {pump_rate!r}")
    return params.mean_pairs_per_gate * spectral_brightness(channel, params) * pump_rate
