"""Energy-conserving signal/idler channel plan.

Channel 1 sits at the configured signal start wavelength; each following
channel steps the signal frequency down by one spacing (toward degeneracy)
and the idler is whatever energy conservation with the pump leaves over.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import require

C_NM_THZ = 299792.458  # speed of light, nm * THz
ENERGY_TOL_THZ = 1e-9


class PlanInfeasibleError(ValueError):
    pass


def nm_to_thz(wavelength_nm: float) -> float:
    return C_NM_THZ / wavelength_nm


def thz_to_nm(freq_thz: float) -> float:
    return C_NM_THZ / freq_thz


@dataclass(frozen=True)
class GridParams:
    pump_wavelength: float = 776.0  # nm
    signal_start_wavelength: float = 1525.0  # nm
    spacing: float = 60.0  # GHz
    channel_count: int = 44
    bpf_min: float = 1520.0  # nm
    bpf_max: float = 1580.0  # nm

    def __post_init__(self):
        require(self.spacing > 0, "spacing", "must be > 0")
        require(
            int(self.channel_count) == self.channel_count and self.channel_count >= 1,
            "channel_count",
            "must be an integer >= 1",
        )
        require(self.bpf_min < self.bpf_max, "bpf_min", "must be < bpf_max")
        require(self.pump_wavelength > 0, "pump_wavelength", "must be > 0")
        require(self.signal_start_wavelength > 0, "signal_start_wavelength", "must be > 0")

    @property
    def pump_freq(self) -> float:
        return nm_to_thz(self.pump_wavelength)


@dataclass(frozen=True)
class ChannelPair:
    index: int
    signal_freq: float  # THz
    idler_freq: float  # THz
    signal_wavelength: float  # nm
    idler_wavelength: float  # nm
    pump_freq: float  # THz
    ref_signal_freq: float  # THz, signal frequency of channel 1 of the same plan

    @property
    def degeneracy_freq(self) -> float:
        return self.pump_freq / 2


def build_plan(params: GridParams) -> list[ChannelPair]:
    nu_p = params.pump_freq
    nu_s1 = nm_to_thz(params.signal_start_wavelength)
    step = params.spacing * 1e-3
    plan = []
    for n in range(1, params.channel_count + 1):
        nu_s = nu_s1 - (n - 1) * step
        if nu_s <= nu_p / 2:
            raise PlanInfeasibleError(
                f"channel {n} signal frequency {nu_s:.6f} THz is at or past "
                f"degeneracy ({nu_p / 2:.6f} THz)"
            )
        nu_i = nu_p - nu_s
        plan.append(ChannelPair(n, nu_s, nu_i, thz_to_nm(nu_s), thz_to_nm(nu_i), nu_p, nu_s1))
    return plan


def validate_plan(plan: list[ChannelPair], params: GridParams) -> list[str]:
    """List of human-readable violations; empty when the plan is usable."""
    if not plan:
        raise ValueError("plan is empty")
    violations = []
    nu_p = params.pump_freq
    for ch in plan:
        for arm, wl in (("signal", ch.signal_wavelength), ("idler", ch.idler_wavelength)):
            if not params.bpf_min <= wl <= params.bpf_max:
                violations.append(
                    f"channel {ch.index}: {arm} {wl:.3f} nm outside "
                    f"[{params.bpf_min}, {params.bpf_max}] nm"
                )
        residual = abs(ch.signal_freq + ch.idler_freq - nu_p)
        if residual > ENERGY_TOL_THZ:
            violations.append(f"channel {ch.index}: energy residual {residual:.3e} THz")
    return violations


def plan_rows(plan: list[ChannelPair]) -> list[dict]:
    return [
        {
            "index": ch.index,
            "signal_nm": ch.signal_wavelength,
            "idler_nm": ch.idler_wavelength,
            "signal_THz": ch.signal_freq,
            "idler_THz": ch.idler_freq,
        }
        for ch in plan
    ]
