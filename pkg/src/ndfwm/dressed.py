"""Dressed-state diagnostics of the pump-driven atom.

Quasi-energies are eigenvalues of the rotating-frame Hamiltonian.  A probe
resonance is expected at ``delta = E_j - E_i`` whenever the probe dipole
connects dressed states ``i -> j``; its weight is the squared matrix element
times the steady-state occupation of ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .angular import PolarizationVector
from .master_equation import PumpConfig, TransitionSpec, build_hamiltonian, build_liouvillian
from .response import probe_operators, steady_state

DEGENERACY_TOL = 1e-9
COUPLING_TOL = 1e-9


@dataclass(eq=False)
class DressedLevels:
    energies: np.ndarray
    vectors: np.ndarray  # columns are eigenvectors
    labels: list[str]
    uncoupled: np.ndarray  # bool, True where the pump does not touch the state

    def __len__(self):
        return len(self.energies)


@dataclass(frozen=True)
class Resonance:
    delta: float
    weight: float
    initial: int
    final: int
    kind: str  # "secular" or "non-secular"


def _bare_labels(spec: TransitionSpec) -> list[str]:
    labels = [f"g,m={tm / 2:+g}" for tm in spec.ground_two_m()]
    labels += [f"e,m={tm / 2:+g}" for tm in spec.excited_two_m()]
    return labels


def _pump_coupling(spec: TransitionSpec, pump: PumpConfig) -> np.ndarray:
    return build_hamiltonian(spec, pump) + pump.detuning * spec.excited_projector


def dressed_levels(spec: TransitionSpec, pump: PumpConfig) -> DressedLevels:
    h = build_hamiltonian(spec, pump)
    coupling = _pump_coupling(spec, pump)
    energies, vecs = scipy.linalg.eigh(h)

    # inside each degenerate cluster, rotate so that pump-free combinations
    # are separated from coupled ones
    scale = max(1.0, float(np.max(np.abs(h))))
    start = 0
    n = len(energies)
    while start < n:
        stop = start + 1
        while stop < n and energies[stop] - energies[start] < DEGENERACY_TOL * scale:
            stop += 1
        if stop - start > 1:
            block = vecs[:, start:stop]
            _, _, vh = np.linalg.svd(coupling @ block)
            # smallest singular directions last
            vecs[:, start:stop] = block @ vh.conj().T
        start = stop

    strength = np.linalg.norm(coupling @ vecs, axis=0)
    uncoupled = strength < COUPLING_TOL * max(1.0, pump.rabi)
    bare = _bare_labels(spec)
    labels = [bare[int(np.argmax(np.abs(vecs[:, k])))] for k in range(n)]
    return DressedLevels(energies, vecs, labels, uncoupled)


def predict_resonances(
    spec: TransitionSpec,
    pump: PumpConfig,
    probe_polarization: PolarizationVector,
    rho_ss: np.ndarray | None = None,
    levels: DressedLevels | None = None,
) -> list[Resonance]:
    """Candidate resonance offsets between dressed states linked by the probe.

    Transitions touching a state without pump coupling are kept with zero
    weight and marked ``non-secular``.
    """
    if levels is None:
        levels = dressed_levels(spec, pump)
    if rho_ss is None:
        rho_ss = steady_state(build_liouvillian(spec, pump))
    vp, vm = probe_operators(spec, probe_polarization)
    u = levels.vectors
    dip = u.conj().T @ (vp + vm) @ u
    occ = np.real(np.einsum("ki,kl,li->i", u.conj(), rho_ss, u))
    occ = np.clip(occ, 0.0, None)

    out = []
    n = len(levels)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            element = abs(dip[j, i]) ** 2
            if element < COUPLING_TOL ** 2:
                continue
            delta = float(levels.energies[j] - levels.energies[i])
            if levels.uncoupled[i] or levels.uncoupled[j]:
                out.append(Resonance(delta, 0.0, i, j, "non-secular"))
            else:
                out.append(Resonance(delta, float(element * occ[i]), i, j, "secular"))
    out.sort(key=lambda r: (r.delta, r.initial, r.final))
    return out
