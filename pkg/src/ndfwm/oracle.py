"""Brute-force check of the linear-response sidebands.

The full master equation is integrated in time with an explicit oscillating
probe, and the lowering-operator expectation values are demodulated at the
four-wave-mixing frequency.  Nothing here touches the linear solvers used
by the response module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angular import PolarizationVector
from .master_equation import (
    PumpConfig,
    TransitionSpec,
    build_liouvillian,
    commutator_superoperator,
    isotropic_ground_state,
    raising_coupling,
    unvectorize,
    vectorize,
)

TRACE_TOL = 1e-6
HERMITICITY_TOL = 1e-8


class IntegrationError(RuntimeError):
    pass


@dataclass(eq=False)
class Trajectory:
    step: float
    duration: float
    delta: float
    probe_rabi: float
    times: np.ndarray
    observables: np.ndarray  # (len(times), 3): Tr(Q_q rho(t)), q = -1, 0, +1
    final: np.ndarray
    trace_drift: float
    hermiticity_drift: float


def _snap_step(step: float, delta: float) -> float:
    """Largest step <= ``step`` that divides one probe-offset period exactly."""
    if delta == 0:
        return step
    period = 2 * math.pi / abs(delta)
    return period / math.ceil(period / step - 1e-12)


def integrate(
    spec: TransitionSpec,
    pump: PumpConfig,
    probe_polarization: PolarizationVector,
    probe_rabi: float,
    delta: float,
    duration: float | None = None,
    step: float = 1e-3,
    rho_init: np.ndarray | None = None,
    check_every: int = 1000,
) -> Trajectory:
    """Fixed-step RK4 integration of the probed master equation.

    The default duration is ``20/gamma`` plus 10 probe-offset periods, which
    leaves the slowest transient at ``exp(-20)`` before the demodulation window.
    """
    if probe_rabi < 0:
        raise ValueError("probe_rabi must be nonnegative")
    if step <= 0:
        raise ValueError("step must be positive")
    gamma = spec.gamma_transit
    if duration is None:
        if gamma <= 0:
            raise ValueError("a duration is required when gamma is zero")
        duration = 20.0 / gamma + (10 * 2 * math.pi / abs(delta) if delta else 10.0 / gamma)
    h = _snap_step(step, delta)
    nsteps = int(math.ceil(duration / h - 1e-9))

    liouv = build_liouvillian(spec, pump)
    n = spec.dim
    vp = 0.5 * raising_coupling(spec, probe_polarization)
    a_plus = probe_rabi * commutator_superoperator(vp)
    a_minus = probe_rabi * commutator_superoperator(vp.conj().T)
    stacked = np.vstack([liouv.matrix, a_plus, a_minus])
    n2 = n * n
    feed = gamma * vectorize(isotropic_ground_state(spec))
    readout = np.array([vectorize(spec.lowering[q].T.astype(complex)) for q in (-1, 0, 1)])
    trace_row = vectorize(np.eye(n)).astype(complex)

    def rhs(t, x):
        y = stacked @ x
        ph = np.exp(-1j * delta * t)
        return y[:n2] + ph * y[n2:2 * n2] + ph.conjugate() * y[2 * n2:] + feed

    x = vectorize(isotropic_ground_state(spec) if rho_init is None else np.asarray(rho_init, dtype=complex)).copy()
    obs = np.empty((nsteps + 1, 3), dtype=complex)
    obs[0] = readout @ x
    trace_drift = abs(trace_row @ x - 1.0)
    herm_drift = 0.0
    half = 0.5 * h
    for k in range(nsteps):
        t = k * h
        k1 = rhs(t, x)
        k2 = rhs(t + half, x + half * k1)
        k3 = rhs(t + half, x + half * k2)
        k4 = rhs(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        obs[k + 1] = readout @ x
        if (k + 1) % check_every == 0 or k + 1 == nsteps:
            if not np.all(np.isfinite(x)):
                raise IntegrationError(f"non-finite state at t={t + h:g}; reduce the step (h={h:g})")
            rho = unvectorize(x, n)
            trace_drift = max(trace_drift, abs(np.trace(rho) - 1.0))
            herm_drift = max(herm_drift, float(np.max(np.abs(rho - rho.conj().T))))
            if trace_drift > TRACE_TOL or herm_drift > HERMITICITY_TOL:
                raise IntegrationError(
                    f"invariant drift at t={t + h:g}: trace {trace_drift:.2e}, "
                    f"hermiticity {herm_drift:.2e}; reduce the step (h={h:g})"
                )
    times = h * np.arange(nsteps + 1)
    return Trajectory(h, nsteps * h, float(delta), float(probe_rabi), times, obs,
                      unvectorize(x, n).copy(), float(trace_drift), herm_drift)


def demodulate_fwm(traj: Trajectory, delta: float | None = None, window: float | None = None,
                   gamma: float | None = None) -> np.ndarray:
    """Per-unit-probe amplitude of ``Tr(Q_q rho)`` oscillating as ``exp(+i delta t)``.

    The window is taken from the end of the trajectory and trimmed to a whole
    number of periods, so constant and ``exp(-i delta t)`` parts drop out exactly.
    """
    if delta is None:
        delta = traj.delta
    if delta == 0:
        raise ValueError("delta = 0: the two probe sidebands coincide and cannot be separated")
    if traj.probe_rabi == 0:
        raise ValueError("trajectory has no probe")
    period = 2 * math.pi / abs(delta)
    min_window = 10 * period
    if gamma is not None and abs(delta) < gamma:
        min_window = max(min_window, 10.0 / gamma)
    if window is None:
        window = min_window
    if window < min_window * (1 - 1e-12):
        raise ValueError(f"window {window:g} shorter than required {min_window:g}")
    steps_per_period = period / traj.step
    if abs(steps_per_period - round(steps_per_period)) > 1e-6:
        raise ValueError("trajectory step does not divide the probe-offset period")
    spp = int(round(steps_per_period))
    nper = int(math.floor(window / period + 1e-9))
    nsamp = nper * spp
    if nsamp > len(traj.times) - 1:
        raise ValueError("window is longer than the trajectory")
    t = traj.times[-nsamp:]
    ref = np.exp(-1j * delta * t)
    return (ref @ traj.observables[-nsamp:]) / nsamp / traj.probe_rabi
