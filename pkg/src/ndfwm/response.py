"""Pump-dressed steady state and first-order probe sidebands.

In the frame rotating at the pump frequency the probe (at ``omega_1 + delta``)
enters as ``V2+ exp(-i delta t) + V2- exp(+i delta t)`` with
``V2+ = 1/2 sum_q eps2^q Q_q^dagger`` and ``V2- = (V2+)^dagger``.  To first
order in the probe the density matrix is

    rho(t) = rho0 + rho_plus exp(-i delta t) + rho_minus exp(+i delta t)

and the polarization radiated at ``omega_1 - delta`` is ``Tr(Q_q rho_minus)``.
All amplitudes are per unit probe Rabi frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .angular import PolarizationVector
from .master_equation import (
    Liouvillian,
    TransitionSpec,
    isotropic_ground_state,
    raising_coupling,
    unvectorize,
    vectorize,
)


class SolverError(RuntimeError):
    """A linear system could not be solved to the required accuracy."""

    def __init__(self, msg: str, condition: float | None = None):
        super().__init__(msg)
        self.condition = condition


RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ProbeConfig:
    polarization: PolarizationVector
    offset: float

    def __post_init__(self):
        if not np.isfinite(self.offset):
            raise ValueError("probe offset must be finite")


@dataclass(frozen=True, eq=False)
class SidebandResponse:
    rho_minus: np.ndarray
    fwm_amplitude: np.ndarray  # components ordered q = -1, 0, +1
    delta: float

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.fwm_amplitude) ** 2))


def _solve(a: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    try:
        lu = scipy.linalg.lu_factor(a, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolverError(f"{what}: factorization failed ({exc})") from exc
    if np.any(np.diag(lu[0]) == 0):
        raise SolverError(f"{what}: singular system", condition=np.inf)
    x = scipy.linalg.lu_solve(lu, b)
    resid = np.linalg.norm(a @ x - b)
    scale = np.linalg.norm(a, 1) * np.linalg.norm(x) + np.linalg.norm(b)
    if scale > 0 and resid > RESIDUAL_TOL * scale:
        cond = np.linalg.cond(a, 1)
        raise SolverError(f"{what}: residual {resid:.3e} too large (cond ~ {cond:.3e})", cond)
    return x


def steady_state(liouv: Liouvillian, rho0: np.ndarray | None = None) -> np.ndarray:
    """Solve ``L(rho) + gamma rho0 = 0`` for the pump-dressed steady state."""
    spec = liouv.spec
    if spec.gamma_transit <= 0:
        raise SolverError(
            "transit rate gamma must be positive: the steady state is not unique without it"
        )
    if rho0 is None:
        rho0 = isotropic_ground_state(spec)
    rhs = -spec.gamma_transit * vectorize(rho0)
    x = _solve(liouv.matrix, rhs, "steady state")
    rho = unvectorize(x, spec.dim)
    return 0.5 * (rho + rho.conj().T)


def probe_operators(spec: TransitionSpec, polarization: PolarizationVector) -> tuple[np.ndarray, np.ndarray]:
    vp = 0.5 * raising_coupling(spec, polarization)
    return vp, vp.conj().T


def probe_source(
    rho_ss: np.ndarray, spec: TransitionSpec, polarization: PolarizationVector
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``i [V2+, rho0]`` and ``i [V2-, rho0]``."""
    vp, vm = probe_operators(spec, polarization)
    src_plus = 1j * (vp @ rho_ss - rho_ss @ vp)
    src_minus = 1j * (vm @ rho_ss - rho_ss @ vm)
    return vectorize(src_plus), vectorize(src_minus)


def fwm_readout(spec: TransitionSpec) -> np.ndarray:
    """Rows ``r_q`` with ``r_q . vec(rho) = Tr(Q_q rho)``, q = -1, 0, +1."""
    # Tr(Q rho) = sum_ij Q[i, j] rho[j, i] = vec(Q^T) . vec(rho)
    return np.array([vectorize(spec.lowering[q].T.astype(complex)) for q in (-1, 0, 1)])


def sideband_solve(liouv: Liouvillian, delta: float, source_minus: np.ndarray) -> SidebandResponse:
    """Solve ``(L - i delta) rho_minus = source_minus`` and read out ``Tr(Q_q rho_minus)``."""
    n2 = liouv.matrix.shape[0]
    a = liouv.matrix - 1j * delta * np.eye(n2)
    x = _solve(a, source_minus, f"sideband at delta={delta:g}")
    amp = fwm_readout(liouv.spec) @ x
    return SidebandResponse(unvectorize(x, liouv.dim), amp, float(delta))


def sideband_plus(liouv: Liouvillian, delta: float, source_plus: np.ndarray) -> np.ndarray:
    """Coefficient of ``exp(-i delta t)``: solves ``(L + i delta) rho_plus = source_plus``."""
    n2 = liouv.matrix.shape[0]
    x = _solve(liouv.matrix + 1j * delta * np.eye(n2), source_plus, f"sideband at delta={delta:g}")
    return unvectorize(x, liouv.dim)


def fwm_response(
    liouv: Liouvillian, probe: ProbeConfig, rho_ss: np.ndarray | None = None
) -> SidebandResponse:
    if rho_ss is None:
        rho_ss = steady_state(liouv)
    _, src_minus = probe_source(rho_ss, liouv.spec, probe.polarization)
    return sideband_solve(liouv, probe.offset, src_minus)


def pair_classes(spec: TransitionSpec, signed: bool = False) -> dict[float, list[int]]:
    """Ground-sublevel indices grouped by ``|mg|`` (or ``mg`` when ``signed``)."""
    groups: dict[float, list[int]] = {}
    for i, tm in enumerate(spec.ground_two_m()):
        key = tm / 2 if signed else abs(tm) / 2
        groups.setdefault(key, []).append(i)
    return dict(sorted(groups.items()))


def decompose_rho(
    rho_minus: np.ndarray, spec: TransitionSpec, signed: bool = False
) -> dict[float, np.ndarray]:
    """Split ``Tr(Q_q rho_minus)`` by the ground sublevel of each contributing coherence.

    ``Tr(Q_q rho) = sum_{g,e} Q_q[g, e] rho[e, g]``; every term is assigned to
    the class of its ground index.
    """
    out = {}
    for key, idx in pair_classes(spec, signed).items():
        out[key] = np.array(
            [np.sum(spec.lowering[q][idx, :] * rho_minus[:, idx].T) for q in (-1, 0, 1)]
        )
    return out


def decompose_by_pair(
    response: SidebandResponse, spec: TransitionSpec, signed: bool = False
) -> dict[float, np.ndarray]:
    return decompose_rho(response.rho_minus, spec, signed)


def project_on(amplitude: np.ndarray, polarization: PolarizationVector) -> complex:
    """Component of a spherical amplitude vector along ``polarization``."""
    return complex(np.vdot(polarization.as_array(), amplitude))
