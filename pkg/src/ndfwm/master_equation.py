"""Rotating-frame Hamiltonian and Liouvillian of a pump-driven degenerate two-level system.

Frequencies are in units of the spontaneous decay rate Gamma.  Density
matrices are vectorized by column stacking, ``vec(rho)[i + N*j] = rho[i, j]``,
so that ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .angular import AngularMomentum, PolarizationVector, lowering_operators

# "stretched": a sublevel pair with CG coefficient c sees Rabi frequency c * Omega.
# "reduced": Wigner-Eckart reduced element, c * Omega / sqrt(2 Fe + 1).
RABI_CONVENTIONS = {"stretched", "reduced"}


@dataclass(frozen=True)
class TransitionSpec:
    fg: AngularMomentum
    fe: AngularMomentum
    gamma_transit: float = 0.01
    gamma_sp: float = 1.0
    rabi_convention: str = "stretched"

    def __post_init__(self):
        if self.rabi_convention not in RABI_CONVENTIONS:
            raise ValueError(
                f"rabi_convention must be one of {sorted(RABI_CONVENTIONS)}, got {self.rabi_convention!r}"
            )
        if self.gamma_transit < 0:
            raise ValueError("gamma_transit must be nonnegative")
        if self.gamma_sp <= 0:
            raise ValueError("gamma_sp must be positive")
        # raises on a forbidden transition
        lowering_operators(self.fg, self.fe)

    @classmethod
    def from_values(
        cls, fg: float, fe: float, gamma_transit: float = 0.01, rabi_convention: str = "stretched"
    ) -> "TransitionSpec":
        return cls(
            AngularMomentum.from_value(fg),
            AngularMomentum.from_value(fe),
            gamma_transit,
            rabi_convention=rabi_convention,
        )

    @property
    def coupling_scale(self) -> float:
        """Factor between the Rabi frequency and the coupling of a unit-CG sublevel pair."""
        if self.rabi_convention == "reduced":
            return 1.0 / np.sqrt(self.fe.dim)
        return 1.0

    @property
    def n_ground(self) -> int:
        return self.fg.dim

    @property
    def n_excited(self) -> int:
        return self.fe.dim

    @property
    def dim(self) -> int:
        return self.fg.dim + self.fe.dim

    @cached_property
    def lowering(self) -> dict[int, np.ndarray]:
        return lowering_operators(self.fg, self.fe)

    @property
    def excited_projector(self) -> np.ndarray:
        p = np.zeros((self.dim, self.dim))
        p[self.n_ground:, self.n_ground:] = np.eye(self.n_excited)
        return p

    def ground_two_m(self) -> list[int]:
        return self.fg.two_m_values()

    def excited_two_m(self) -> list[int]:
        return self.fe.two_m_values()


@dataclass(frozen=True)
class PumpConfig:
    """Pump field: reduced Rabi frequency, detuning ``omega_A - omega_1`` and polarization."""

    rabi: float
    detuning: float
    polarization: PolarizationVector = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.rabi < 0:
            raise ValueError("pump rabi frequency must be nonnegative")
        if self.polarization is None:
            from .angular import PI

            object.__setattr__(self, "polarization", PI)


def vectorize(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    return rho.reshape(-1, order="F")


def unvectorize(vec: np.ndarray, n: int | None = None) -> np.ndarray:
    vec = np.asarray(vec)
    if n is None:
        n = int(round(np.sqrt(vec.size)))
    if vec.ndim != 1 or vec.size != n * n:
        raise ValueError(f"vector of size {vec.size} is not a vectorized {n}x{n} matrix")
    return vec.reshape((n, n), order="F")


def spre(a: np.ndarray) -> np.ndarray:
    """Superoperator for ``X -> A X``."""
    return np.kron(np.eye(a.shape[0]), a)


def spost(b: np.ndarray) -> np.ndarray:
    """Superoperator for ``X -> X B``."""
    return np.kron(b.T, np.eye(b.shape[0]))


def raising_coupling(spec: TransitionSpec, polarization: PolarizationVector) -> np.ndarray:
    """``sum_q eps^q Q_q^dagger``: the g -> e part of the dipole coupling."""
    out = np.zeros((spec.dim, spec.dim), dtype=complex)
    for q, mat in spec.lowering.items():
        out += polarization[q] * mat.T
    return spec.coupling_scale * out


def isotropic_ground_state(spec: TransitionSpec) -> np.ndarray:
    rho = np.zeros((spec.dim, spec.dim), dtype=complex)
    ng = spec.n_ground
    rho[:ng, :ng] = np.eye(ng) / ng
    return rho


def build_hamiltonian(spec: TransitionSpec, pump: PumpConfig) -> np.ndarray:
    """H0 = -Delta P_e + (Omega_1/2) (sum_q eps^q Q_q^dagger + h.c.)."""
    up = 0.5 * pump.rabi * raising_coupling(spec, pump.polarization)
    return -pump.detuning * spec.excited_projector + up + up.conj().T


def relaxation_superoperator(spec: TransitionSpec) -> np.ndarray:
    """Spontaneous emission plus state-independent transit loss (feeding excluded)."""
    n = spec.dim
    out = np.zeros((n * n, n * n), dtype=complex)
    for mat in spec.lowering.values():
        q = mat.astype(complex)
        qdq = q.conj().T @ q
        out += spec.gamma_sp * (
            np.kron(q.conj(), q) - 0.5 * spre(qdq) - 0.5 * spost(qdq)
        )
    out -= spec.gamma_transit * np.eye(n * n)
    return out


def commutator_superoperator(h: np.ndarray) -> np.ndarray:
    """Superoperator for ``X -> -i [H, X]``."""
    return -1j * (spre(h) - spost(h))


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Dense generator acting on column-stacked density matrices.

    ``matrix`` holds the full right-hand side except the constant
    feeding term ``gamma * rho0``, which is carried separately in ``source``.
    """

    matrix: np.ndarray
    spec: TransitionSpec
    pump: PumpConfig

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def source(self) -> np.ndarray:
        return self.spec.gamma_transit * vectorize(isotropic_ground_state(self.spec))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvectorize(self.matrix @ vectorize(rho), self.dim)


def build_liouvillian(spec: TransitionSpec, pump: PumpConfig) -> Liouvillian:
    h = build_hamiltonian(spec, pump)
    mat = commutator_superoperator(h) + relaxation_superoperator(spec)
    mat.setflags(write=False)
    return Liouvillian(mat, spec, pump)
