import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wdment.errors import ParamError
from wdment.link import LinkParams
from wdment.measure import (
    BASIS_COMPLETION,
    DetectorParams,
    WaveplateChain,
    accidental_estimate,
    coincidence_probability,
    design_matrix,
    expected_counts,
    jones_hwp,
    jones_qwp,
    run_tomography,
    sample_counts,
    setting,
    tomo_settings_16,
)
from wdment.qstate import KETS, PHI_PLUS, is_unitary, projector, random_state, werner


def same_ray(a, b):
    return abs(abs(np.vdot(a, b)) - 1.0) < 1e-12


def test_waveplates_are_unitary():
    for ang in np.linspace(0, np.pi, 13):
        assert is_unitary(jones_hwp(ang))
        assert is_unitary(jones_qwp(ang))


def test_waveplate_examples():
    assert same_ray(jones_qwp(np.pi / 4) @ KETS["H"], KETS["R"])
    assert same_ray(jones_hwp(np.pi / 8) @ KETS["H"], KETS["D"])
    assert same_ray(jones_hwp(np.pi / 4) @ KETS["H"], KETS["V"])
    assert same_ray(jones_qwp(0.0) @ KETS["D"], KETS["L"])


def test_qwp_squared_is_hwp():
    for ang in (0.1, 0.7, 2.2):
        q2 = jones_qwp(ang) @ jones_qwp(ang)
        overlap = np.trace(jones_hwp(ang).conj().T @ q2)
        assert abs(overlap) == pytest.approx(2.0, abs=1e-12)


def test_chain_order():
    c = WaveplateChain(0.2, 0.5, 0.9)
    assert np.allclose(c.matrix(), jones_qwp(0.2) @ jones_qwp(0.5) @ jones_hwp(0.9))


def test_settings_table():
    s = tomo_settings_16()
    labels = [x.label for x in s]
    assert len(set(labels)) == 16
    assert "HH" in labels
    assert set(BASIS_COMPLETION) <= set(labels)
    b = design_matrix(s)
    assert np.linalg.matrix_rank(b) == 16
    assert np.linalg.cond(b) < 20


def test_born_probabilities_for_phi_plus():
    rho = projector(PHI_PLUS)
    assert coincidence_probability(rho, setting("HH")) == pytest.approx(0.5)
    assert coincidence_probability(rho, setting("HV")) == pytest.approx(0.0, abs=1e-15)
    assert coincidence_probability(rho, setting("DD")) == pytest.approx(0.5)
    assert coincidence_probability(rho, setting("RL")) == pytest.approx(0.5)
    assert coincidence_probability(rho, setting("RD")) == pytest.approx(0.25)


def test_born_probability_for_werner():
    # <DD|W|DD> = p/2 + (1-p)/4 with p = 0.8133
    assert coincidence_probability(werner(0.8133), setting("DD")) == pytest.approx(0.4533, abs=1e-4)


def test_completion_sums_to_one(rng):
    for _ in range(20):
        rho = random_state(rng)
        total = sum(coincidence_probability(rho, setting(l)) for l in BASIS_COMPLETION)
        assert total == pytest.approx(1.0, abs=1e-12)


def test_accidentals_with_blind_detectors():
    det = DetectorParams(efficiency_signal=0.0, efficiency_idler=0.0, dark_prob_per_gate=1e-5,
                         gate_rate=1e6, integration_time=100.0)
    mu = expected_counts(projector(PHI_PLUS), setting("HH"), det, LinkParams(), 1e4)
    # 1e6 gates/s * 100 s * (1e-5)^2
    assert mu == pytest.approx(0.01, rel=1e-12)
    assert accidental_estimate(det, LinkParams(), 1e4) == pytest.approx(0.01, rel=1e-12)


def test_counts_follow_efficiency_and_loss():
    rho = projector(PHI_PLUS)
    s = setting("HH")
    quiet = dict(dark_prob_per_gate=0.0, window_gates=0.0)
    mu1 = expected_counts(rho, s, DetectorParams(efficiency_signal=0.1, **quiet), LinkParams(), 1e3)
    mu2 = expected_counts(rho, s, DetectorParams(efficiency_signal=0.2, **quiet), LinkParams(), 1e3)
    assert mu1 == pytest.approx(1e3 * 0.01 * 0.5 * 100)
    assert mu2 == pytest.approx(2 * mu1)
    lossy = expected_counts(rho, s, DetectorParams(**quiet), LinkParams(attenuation=0.2), 1e3)
    assert lossy == pytest.approx(mu1 * 10 ** -0.2)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_counts_monotone_in_efficiency(e1, e2):
    lo, hi = sorted((e1, e2))
    rho = werner(0.9)
    s = setting("HH")
    a = expected_counts(rho, s, DetectorParams(efficiency_signal=lo), LinkParams(), 1e4)
    b = expected_counts(rho, s, DetectorParams(efficiency_signal=hi), LinkParams(), 1e4)
    assert a <= b + 1e-12


def test_poisson_sampling_statistics():
    rng = np.random.default_rng(11)
    draws = [sample_counts(170.0, rng) for _ in range(4000)]
    # standard error of the mean is about 0.21
    assert np.mean(draws) == pytest.approx(170.0, abs=1.0)
    assert np.var(draws) == pytest.approx(170.0, rel=0.1)


def test_sampling_is_deterministic():
    a = [sample_counts(50.0, np.random.default_rng(3)) for _ in range(3)]
    assert len(set(a)) == 1


@pytest.mark.parametrize("bad", [-1.0, float("nan")])
def test_sampling_rejects_bad_mean(bad):
    with pytest.raises(ValueError):
        sample_counts(bad, np.random.default_rng(0))


def test_noiseless_records_are_expected_values():
    det = DetectorParams(dark_prob_per_gate=0.0, window_gates=0.0)
    recs = run_tomography(projector(PHI_PLUS), det, LinkParams(), 1e4, noiseless=True, channel=7)
    by = {r.setting.label: r for r in recs}
    assert [r.setting.label for r in recs] == [s.label for s in tomo_settings_16()]
    assert all(r.count == r.expected and r.channel == 7 for r in recs)
    assert by["HV"].count == pytest.approx(0.0, abs=1e-9)
    assert by["DD"].count / by["HH"].count == pytest.approx(1.0)
    assert by["RD"].count / by["HH"].count == pytest.approx(0.5)


def test_tomography_needs_rng_unless_noiseless():
    with pytest.raises(ValueError):
        run_tomography(werner(0.5), DetectorParams(), LinkParams(), 1e3)


def test_tomography_is_deterministic():
    args = (werner(0.9, 0.4), DetectorParams(), LinkParams(), 2e4)
    a = run_tomography(*args, rng=np.random.default_rng([5, 1]))
    b = run_tomography(*args, rng=np.random.default_rng([5, 1]))
    assert [r.count for r in a] == [r.count for r in b]


@pytest.mark.parametrize("kwargs", [{"efficiency_signal": 1.2}, {"gate_rate": 0.0}, {"window_gates": -1.0}])
def test_detector_validation(kwargs):
    with pytest.raises(ParamError):
        DetectorParams(**kwargs)
