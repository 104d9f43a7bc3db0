import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wdment.channel_grid import GridParams, build_plan
from wdment.errors import ParamError
from wdment.link import (
    LinkParams,
    apply_link,
    arm_rng,
    channel_theta,
    drift_path,
    drift_unitary,
    rotation_angle,
    transmission,
)
from wdment.qstate import (
    PHI_PLUS,
    fidelity_max_phase,
    fidelity_pure,
    is_unitary,
    projector,
    random_state,
    werner,
)

PLAN = build_plan(GridParams())


def test_theta_cancels_for_equal_dgd():
    p = LinkParams(dgd_signal=0.37, dgd_idler=0.37)
    thetas = [channel_theta(ch, p, 0.8) for ch in PLAN]
    assert max(abs(t - 0.8) for t in thetas) < 1e-12


def test_theta_at_reference_channel():
    p = LinkParams(dgd_signal=1.3, dgd_idler=0.2)
    assert channel_theta(PLAN[0], p, 0.25) == 0.25


def test_theta_span_for_one_ps():
    p = LinkParams(dgd_signal=1.0, dgd_idler=0.0)
    span = PLAN[0].signal_freq - PLAN[-1].signal_freq
    assert span == pytest.approx(2.58, abs=1e-9)
    delta = channel_theta(PLAN[-1], p) - channel_theta(PLAN[0], p)
    assert delta == pytest.approx(-2 * np.pi * 2.58, abs=1e-9)


def test_theta_matches_composed_phase_plates():
    # Cross-check: push a pure Bell state through the diagonal plates only.
    p = LinkParams(dgd_signal=0.8, dgd_idler=0.3)
    rho = projector(PHI_PLUS)
    for ch in PLAN[::7]:
        f, th = fidelity_max_phase(apply_link(rho, ch, p))
        assert f == pytest.approx(1.0, abs=1e-12)
        expected = channel_theta(ch, p)
        assert np.angle(np.exp(1j * (th - expected))) == pytest.approx(0.0, abs=1e-9)


def test_theta_regression_slope():
    p = LinkParams(dgd_signal=0.9, dgd_idler=0.2)
    nu = np.array([ch.signal_freq for ch in PLAN])
    th = np.array([channel_theta(ch, p) for ch in PLAN])
    slope = np.polyfit(nu - nu.mean(), th, 1)[0]
    assert slope == pytest.approx(2 * np.pi * 0.7, rel=1e-9)


def test_transmission_examples():
    assert transmission(LinkParams(attenuation=0.0)) == 1.0
    assert transmission(LinkParams(attenuation=0.25, length=5.0)) == pytest.approx(10 ** -0.125)
    assert transmission(LinkParams(attenuation=0.25, length=5.0)) == pytest.approx(0.7499, abs=1e-4)
    assert transmission(LinkParams(attenuation=3.0, length=1.0)) == pytest.approx(0.501, abs=1e-3)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 20), st.floats(0, 20))
def test_transmission_is_multiplicative(att, l1, l2):
    t = transmission(LinkParams(attenuation=att, length=l1 + l2))
    t1 = transmission(LinkParams(attenuation=att, length=l1))
    t2 = transmission(LinkParams(attenuation=att, length=l2))
    assert 0 < t <= 1
    assert t == pytest.approx(t1 * t2, rel=1e-12)


def test_zero_drift_is_identity():
    assert np.array_equal(drift_unitary(100, LinkParams(drift_step=0.0), arm_rng(1, "signal")), np.eye(2))


def test_drift_is_deterministic():
    p = LinkParams(drift_step=0.1)
    a = drift_unitary(250, p, arm_rng(7, "signal"))
    b = drift_unitary(250, p, arm_rng(7, "signal"))
    c = drift_unitary(250, p, arm_rng(7, "idler"))
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)
    assert is_unitary(a)


def test_drift_unitary_matches_path():
    p = LinkParams(drift_step=0.2)
    path = drift_path(64, p, arm_rng(3, "signal"))
    for t in (0, 1, 17, 64):
        assert np.allclose(drift_unitary(t, p, arm_rng(3, "signal")), path[t], atol=1e-13)


def test_drift_angle_grows_as_sqrt_intervals():
    # Small-angle regime; at large angles the walk saturates on the sphere.
    p = LinkParams(drift_step=1e-3)
    counts = (100, 2500, 10_000)
    means = []
    for n in counts:
        angles = [rotation_angle(drift_unitary(n, p, arm_rng(seed, "signal"))) for seed in range(100)]
        means.append(np.mean(angles))
    ref = means[0] / np.sqrt(counts[0])
    for n, m in zip(counts, means):
        assert m / np.sqrt(n) == pytest.approx(ref, rel=0.10)
    # Rms rotation per step is drift_step, so the mean 3-D walk length is sqrt(8/(3 pi)) sqrt(n) step.
    assert ref == pytest.approx(np.sqrt(8 / (3 * np.pi)) * 1e-3, rel=0.10)


def test_zero_link_leaves_state_unchanged(rng):
    rho = random_state(rng)
    out = apply_link(rho, PLAN[20], LinkParams(length=0.0), elapsed_intervals=5)
    assert np.allclose(out, rho, atol=1e-15)


def test_depolarization_example():
    out = apply_link(projector(PHI_PLUS), PLAN[0], LinkParams(depol=0.1))
    assert fidelity_pure(out, PHI_PLUS) == pytest.approx((3 * 0.9 + 1) / 4, abs=1e-12)
    assert fidelity_pure(out, PHI_PLUS) == pytest.approx(0.925, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 43), st.integers(0, 30))
def test_link_without_depol_preserves_spectrum(seed, idx, t):
    r = np.random.default_rng(seed)
    rho = random_state(r)
    p = LinkParams(dgd_signal=r.uniform(0, 2), dgd_idler=r.uniform(0, 2), drift_step=0.3, seed=seed)
    out = apply_link(rho, PLAN[idx], p, elapsed_intervals=t)
    assert np.allclose(np.linalg.eigvalsh(out), np.linalg.eigvalsh(rho), atol=1e-10)


def test_link_keeps_werner_physical():
    out = apply_link(werner(0.9, 0.3), PLAN[5], LinkParams(drift_step=0.5, depol=0.3), elapsed_intervals=3)
    assert np.all(np.linalg.eigvalsh(out) >= -1e-12)
    assert np.trace(out).real == pytest.approx(1.0)


@pytest.mark.parametrize("kwargs", [{"length": -1.0}, {"attenuation": -0.1}, {"depol": 1.5}])
def test_link_params_validation(kwargs):
    with pytest.raises(ParamError):
        LinkParams(**kwargs)
