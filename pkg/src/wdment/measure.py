"""Analyzer optics, detectors and coincidence statistics.

Waveplate angles are fast-axis angles from horizontal, in radians. Jones
matrices are defined up to a global phase.

Counts follow a gated-detector model: true coincidences are the pair rate
thinned by fiber transmission and detector efficiency in both arms, and
accidentals are the product of the per-gate single-click probabilities
(which include dark counts) times the number of gates in the window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import require
from .link import LinkParams, transmission
from .qstate import KETS, check_physical, partial_trace


def jones_hwp(angle: float) -> np.ndarray:
    c, s = np.cos(2 * angle), np.sin(2 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def jones_qwp(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    off = (1 - 1j) * s * c
    return np.array([[c * c + 1j * s * s, off], [off, s * s + 1j * c * c]], dtype=complex)


@dataclass(frozen=True)
class WaveplateChain:
    """QWP(qwp1) . QWP(qwp2) . HWP(hwp) as a single Jones matrix."""

    qwp1_angle: float
    qwp2_angle: float
    hwp_angle: float

    def matrix(self) -> np.ndarray:
        return jones_qwp(self.qwp1_angle) @ jones_qwp(self.qwp2_angle) @ jones_hwp(self.hwp_angle)


@dataclass(frozen=True)
class TomoSetting:
    signal_projector: np.ndarray
    idler_projector: np.ndarray
    label: str

    @property
    def ket(self) -> np.ndarray:
        return np.kron(self.signal_projector, self.idler_projector)

    @property
    def operator(self) -> np.ndarray:
        k = self.ket
        return np.outer(k, k.conj())


# Projector table of the standard 16-setting two-qubit scheme.
TOMO_LABELS = (
    "HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
    "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL",
)
BASIS_COMPLETION = ("HH", "HV", "VH", "VV")


def setting(label: str) -> TomoSetting:
    return TomoSetting(KETS[label[0]], KETS[label[1]], label)


def tomo_settings_16() -> list[TomoSetting]:
    return [setting(lab) for lab in TOMO_LABELS]


def design_matrix(settings: list[TomoSetting]) -> np.ndarray:
    """Rows are conj(vec(P_nu)), so ``B @ rho.ravel()`` gives Tr(rho P_nu)."""
    return np.array([s.operator.ravel().conj() for s in settings])


@dataclass(frozen=True)
class DetectorParams:
    efficiency_signal: float = 0.10
    efficiency_idler: float = 0.10
    dark_prob_per_gate: float = 1e-5
    gate_rate: float = 1e6  # gates/s
    integration_time: float = 100.0  # s
    window_gates: float = 1.0  # accidental-coincidence window, in gates

    def __post_init__(self):
        for name in ("efficiency_signal", "efficiency_idler", "dark_prob_per_gate"):
            require(0.0 <= getattr(self, name) <= 1.0, name, "must lie in [0, 1]")
        require(self.gate_rate > 0, "gate_rate", "must be > 0")
        require(self.integration_time > 0, "integration_time", "must be > 0")
        require(self.window_gates >= 0, "window_gates", "must be >= 0")


@dataclass(frozen=True)
class CountRecord:
    setting: TomoSetting
    count: float  # integer unless produced in noiseless mode
    expected: float
    integration_time: float
    channel: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")


def coincidence_probability(rho, s: TomoSetting) -> float:
    rho = check_physical(rho)
    k = s.ket
    p = float(np.real(k.conj() @ rho @ k))
    return min(max(p, 0.0), 1.0)


def singles_probability(marginal: float, mean_pairs_per_gate: float, survival: float,
                        efficiency: float, dark: float) -> float:
    """Per-gate click probability of one detector (photon or dark count)."""
    photon = 1.0 - np.exp(-mean_pairs_per_gate * survival * efficiency * marginal)
    return float(1.0 - (1.0 - photon) * (1.0 - dark))


def expected_counts(rho, s: TomoSetting, det: DetectorParams, link: LinkParams, pair_rate: float) -> float:
    rho = check_physical(rho)
    t = transmission(link)
    p = coincidence_probability(rho, s)
    true = pair_rate * t * t * det.efficiency_signal * det.efficiency_idler * p * det.integration_time

    mu_gate = pair_rate / det.gate_rate
    m_s = np.real(s.signal_projector.conj() @ partial_trace(rho, "signal") @ s.signal_projector)
    m_i = np.real(s.idler_projector.conj() @ partial_trace(rho, "idler") @ s.idler_projector)
    ps = singles_probability(m_s, mu_gate, t, det.efficiency_signal, det.dark_prob_per_gate)
    pi = singles_probability(m_i, mu_gate, t, det.efficiency_idler, det.dark_prob_per_gate)
    accidentals = det.gate_rate * det.integration_time * det.window_gates * ps * pi
    return float(true + accidentals)


def accidental_estimate(det: DetectorParams, link: LinkParams, pair_rate: float) -> float:
    """Accidentals per setting assuming unpolarized singles (marginal 1/2 in each arm)."""
    t = transmission(link)
    mu_gate = pair_rate / det.gate_rate
    ps = singles_probability(0.5, mu_gate, t, det.efficiency_signal, det.dark_prob_per_gate)
    pi = singles_probability(0.5, mu_gate, t, det.efficiency_idler, det.dark_prob_per_gate)
    return float(det.gate_rate * det.integration_time * det.window_gates * ps * pi)


def sample_counts(expected: float, rng: np.random.Generator) -> int:
    if not expected >= 0:
        raise ValueError(f"Poisson mean must be >= 0, got {expected!r}")
    return int(rng.poisson(expected))


def run_tomography(
    rho,
    det: DetectorParams,
    link: LinkParams,
    pair_rate: float,
    rng: np.random.Generator | None = None,
    noiseless: bool = False,
    channel: int = 0,
) -> list[CountRecord]:
    """One count record per setting of `tomo_settings_16`.

    In noiseless mode the expected value is recorded as the count and no
    random numbers are drawn.
    """
    if not noiseless and rng is None:
        raise ValueError("an rng is required unless noiseless=True")
    records = []
    for s in tomo_settings_16():
        mu = expected_counts(rho, s, det, link, pair_rate)
        n = mu if noiseless else sample_counts(mu, rng)
        records.append(CountRecord(s, n, mu, det.integration_time, channel))
    return records
