import numpy as np
import pytest
from scipy.optimize import brentq

from wdment.channel_grid import GridParams, build_plan
from wdment.config import load_config
from wdment.errors import ParamError
from wdment.qstate import fidelity_max_phase, is_physical, projector, PHI_PLUS
from wdment.source import SourceParams, emit_state, pair_rate, phase_matching, spectral_brightness

PLAN = build_plan(GridParams())


def test_brightness_is_one_at_degeneracy():
    assert phase_matching(0.0, 0.09) == 1.0


def test_brightness_is_even_in_detuning():
    for d in (0.3, 1.7, 3.4):
        assert phase_matching(d, 0.09) == phase_matching(-d, 0.09)


def _ratio(kappa):
    p = SourceParams(pm_curvature=kappa)
    return spectral_brightness(PLAN[-1], p) / spectral_brightness(PLAN[0], p)


def test_curvature_reproduces_count_tilt():
    # Oracle: direct root solve on the closed-form sinc^2 ratio.
    nu_deg = PLAN[0].pump_freq / 2
    d1 = (PLAN[0].signal_freq - nu_deg) ** 2
    d44 = (PLAN[-1].signal_freq - nu_deg) ** 2

    def gap(k):
        return (np.sin(k * d44) / (k * d44)) ** 2 / (np.sin(k * d1) / (k * d1)) ** 2 - 250 / 170

    kappa = brentq(gap, 1e-4, 0.13)
    assert kappa == pytest.approx(0.09, abs=0.005)
    preset = load_config("paper").source.pm_curvature
    assert preset == pytest.approx(kappa, rel=1e-5)
    assert _ratio(preset) == pytest.approx(250 / 170, rel=1e-4)


def test_brightness_monotone_on_paper_grid():
    p = load_config("paper").source
    b = np.array([spectral_brightness(ch, p) for ch in PLAN])
    assert np.all((b > 0) & (b <= 1))
    assert np.all(np.diff(b) > 0)


def test_emit_state_examples():
    ch = PLAN[0]
    assert np.allclose(emit_state(ch, SourceParams(p0=1.0, theta0=0.0)), projector(PHI_PLUS))
    f, th = fidelity_max_phase(emit_state(ch, SourceParams(p0=1.0, theta0=0.4)))
    assert (f, th) == (pytest.approx(1.0), pytest.approx(0.4))
    f, _ = fidelity_max_phase(emit_state(ch, SourceParams(p0=0.95)))
    assert f == pytest.approx((3 * 0.95 + 1) / 4, abs=1e-12)
    assert f == pytest.approx(0.9625, abs=1e-12)


def test_emit_state_spectrum_is_channel_independent():
    p = SourceParams(p0=0.9, theta0=1.1)
    spectra = [np.linalg.eigvalsh(emit_state(ch, p)) for ch in PLAN]
    assert all(is_physical(emit_state(ch, p)) for ch in PLAN)
    assert np.allclose(spectra, spectra[0], atol=1e-15)


def test_pair_rate_examples():
    ch = PLAN[0]
    assert pair_rate(ch, SourceParams(mean_pairs_per_gate=0.0), 1e6) == 0.0
    flat = SourceParams(mean_pairs_per_gate=0.01, pm_curvature=0.0)
    assert pair_rate(ch, flat, 1e6) == pytest.approx(1e4)
    with pytest.raises(ValueError):
        pair_rate(ch, flat, 0.0)


def test_pair_rate_is_linear():
    ch = PLAN[10]
    base = pair_rate(ch, SourceParams(mean_pairs_per_gate=1e-3), 1e6)
    assert pair_rate(ch, SourceParams(mean_pairs_per_gate=3e-3), 1e6) == pytest.approx(3 * base)
    assert pair_rate(ch, SourceParams(mean_pairs_per_gate=1e-3), 5e6) == pytest.approx(5 * base)


@pytest.mark.parametrize("kwargs", [{"p0": 1.5}, {"crystal_length": 0.0}, {"theta0": float("nan")}])
def test_source_params_validation(kwargs):
    with pytest.raises(ParamError):
        SourceParams(**kwargs)
