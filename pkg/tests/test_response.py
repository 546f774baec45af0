import numpy as np
import pytest

from conftest import random_hermitian
from ndfwm.angular import (
    LINEAR_X,
    PI,
    SIGMA_MINUS,
    SIGMA_PLUS,
    PolarizationVector,
    rotate_polarization,
)
from ndfwm.master_equation import PumpConfig, TransitionSpec, build_liouvillian, isotropic_ground_state, unvectorize
from ndfwm.response import (
    ProbeConfig,
    SolverError,
    decompose_by_pair,
    fwm_response,
    probe_source,
    project_on,
    sideband_plus,
    sideband_solve,
    steady_state,
)


def response(spec, rabi, det, pump_pol, probe_pol, delta):
    liouv = build_liouvillian(spec, PumpConfig(rabi, det, pump_pol))
    return fwm_response(liouv, ProbeConfig(probe_pol, delta))


def random_pol(rng):
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    return PolarizationVector.from_components(v)


def test_steady_state_without_pump(spec12):
    rho = steady_state(build_liouvillian(spec12, PumpConfig(0.0, 0.3, PI)))
    np.testing.assert_allclose(rho, isotropic_ground_state(spec12), atol=1e-15)


@pytest.mark.parametrize("det", [0.0, 1.5])
def test_two_level_saturation(spec01, det):
    rho = steady_state(build_liouvillian(spec01, PumpConfig(1.0, det, SIGMA_PLUS)))
    expected = 0.25 / (det ** 2 + 0.25 + 0.5)
    assert np.trace(rho[1:, 1:]).real == pytest.approx(expected, rel=1e-2)


def test_sigma_plus_optical_pumping(spec12):
    rho = steady_state(build_liouvillian(spec12, PumpConfig(8.0, 0.0, SIGMA_PLUS)))
    ground = np.real(np.diag(rho)[:3])
    assert ground[2] / ground.sum() > 0.95


def test_zero_gamma_rejected():
    spec = TransitionSpec.from_values(1, 2, 0.0)
    with pytest.raises(SolverError):
        steady_state(build_liouvillian(spec, PumpConfig(1.0, 0.0, PI)))


def test_steady_state_is_physical(rng):
    for fg in (0, 1, 2):
        spec = TransitionSpec.from_values(fg, fg + 1, 0.01)
        for _ in range(8):
            pump = PumpConfig(rng.uniform(0, 10), rng.uniform(-5, 5), random_pol(rng))
            rho = steady_state(build_liouvillian(spec, pump))
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
            assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_source_block_structure(spec12):
    # no optical coherence in rho0: a probe can only create eg / ge coherences
    rho = isotropic_ground_state(spec12)
    src_plus, src_minus = probe_source(rho, spec12, SIGMA_PLUS)
    for src in (src_plus, src_minus):
        m = unvectorize(src, 8)
        assert np.all(m[:3, :3] == 0) and np.all(m[3:, 3:] == 0)
        assert np.any(m != 0)


def test_probe_phase_scaling(spec12):
    liouv = build_liouvillian(spec12, PumpConfig(1.5, 0.5, PI))
    rho = steady_state(liouv)
    phase = np.exp(0.7j)
    a_plus, a_minus = probe_source(rho, spec12, LINEAR_X)
    b_plus, b_minus = probe_source(rho, spec12, LINEAR_X.with_phase(0.7))
    np.testing.assert_allclose(b_plus, phase * a_plus, atol=1e-15)
    np.testing.assert_allclose(b_minus, np.conj(phase) * a_minus, atol=1e-15)
    p1 = fwm_response(liouv, ProbeConfig(LINEAR_X, 0.8), rho).power
    p2 = fwm_response(liouv, ProbeConfig(LINEAR_X.with_phase(0.7), 0.8), rho).power
    assert p2 == pytest.approx(p1, rel=1e-12)


@pytest.mark.parametrize("probe", [PI, LINEAR_X, SIGMA_PLUS])
def test_zero_pump_null(spec12, probe):
    for d in (-2.0, 0.0, 0.3, 5.0):
        assert response(spec12, 0.0, 1.0, PI, probe, d).power <= 1e-28


def test_conjugate_identity(spec12):
    liouv = build_liouvillian(spec12, PumpConfig(2.0, 1.0, SIGMA_PLUS))
    rho = steady_state(liouv)
    src_plus, src_minus = probe_source(rho, spec12, LINEAR_X)
    for d in (-1.3, 0.4, 3.0):
        rho_minus = sideband_solve(liouv, d, src_minus).rho_minus
        rho_plus = sideband_plus(liouv, d, src_plus)
        assert np.max(np.abs(rho_plus.conj().T - rho_minus)) < 1e-10


@pytest.mark.parametrize("rabi,det", [(2.0, 0.0), (3.0, 2.0)])
def test_two_level_response_poles(spec01, rabi, det):
    # the sideband resonances are Liouvillian poles near +-sqrt(rabi^2 + det^2)
    ev = np.linalg.eigvals(build_liouvillian(spec01, PumpConfig(rabi, det, SIGMA_PLUS)).matrix)
    w = np.hypot(rabi, det)
    for target in (w, -w):
        assert np.min(np.abs(ev.imag - target)) < 0.1 * w


def test_decomposition_sums_to_total(spec12):
    for pol in (PI, SIGMA_PLUS):
        for d in (-3.0, 0.0, 1.1):
            r = response(spec12, 2.0, 1.0, pol, pol, d)
            parts = decompose_by_pair(r, spec12)
            assert set(parts) == {0.0, 1.0}
            np.testing.assert_allclose(sum(parts.values()), r.fwm_amplitude, rtol=0, atol=1e-14)
            signed = decompose_by_pair(r, spec12, signed=True)
            np.testing.assert_allclose(sum(signed.values()), r.fwm_amplitude, rtol=0, atol=1e-14)


def test_opposite_phase_interference(spec12):
    r = response(spec12, 1.0, 2.0, PI, PI, 0.0)
    parts = decompose_by_pair(r, spec12)
    p0 = project_on(parts[0.0], PI)
    p1 = project_on(parts[1.0], PI)
    assert (p0 * np.conj(p1)).real < 0


def test_rotation_invariance(spec12, rng):
    for _ in range(5):
        pump, probe = random_pol(rng), random_pol(rng)
        angles = tuple(rng.uniform(0, 2 * np.pi, size=3))
        a = response(spec12, 1.7, -0.8, pump, probe, 0.9)
        b = response(spec12, 1.7, -0.8, rotate_polarization(pump, angles), rotate_polarization(probe, angles), 0.9)
        assert b.power == pytest.approx(a.power, rel=1e-8, abs=1e-14)


def test_amplitude_is_linear_in_probe(spec12):
    liouv = build_liouvillian(spec12, PumpConfig(1.2, 0.5, PI))
    rho = steady_state(liouv)
    _, src = probe_source(rho, spec12, LINEAR_X)
    a = sideband_solve(liouv, 0.7, src).fwm_amplitude
    b = sideband_solve(liouv, 0.7, 2 * src).fwm_amplitude
    np.testing.assert_allclose(b, 2 * a, rtol=1e-12)


def test_circular_selection(spec12):
    # 2 x (+1) - (-1) = +3 units of angular momentum cannot be carried by one photon
    r = response(spec12, 2.0, 0.0, SIGMA_PLUS, SIGMA_MINUS, 0.5)
    assert r.power < 1e-28
