"""Angular-momentum coupling coefficients and polarization algebra.

Angular momenta are carried as doubled integers (``two_f = 2F``) so that
half-integer values and their magnetic sublevels stay exact.

Spherical unit vectors follow ``e_{+1} = -(x + i y)/sqrt(2)``, ``e_0 = z``,
``e_{-1} = (x - i y)/sqrt(2)``.  A field vector ``eps`` is stored through
its expansion coefficients ``eps^q = conj(e_q) . eps`` so that
``eps = sum_q eps^q e_q``; with this choice sigma+ light has weight only on
``q = +1`` and drives ``m -> m + 1`` through ``Q_{+1}^dagger``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial, sqrt

import numpy as np

SQRT2 = sqrt(2.0)

# columns are the Cartesian components of e_{-1}, e_0, e_{+1}
_SPHERICAL_BASIS = np.array(
    [
        [1 / SQRT2, 0.0, -1 / SQRT2],
        [-1j / SQRT2, 0.0, -1j / SQRT2],
        [0.0, 1.0, 0.0],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class AngularMomentum:
    """Total angular momentum ``F = two_f / 2``."""

    two_f: int

    def __post_init__(self):
        if not isinstance(self.two_f, (int, np.integer)) or self.two_f < 0:
            raise ValueError(f"two_f must be a nonnegative integer, got {self.two_f!r}")

    @classmethod
    def from_value(cls, f: float) -> "AngularMomentum":
        two_f = round(2 * f)
        if abs(two_f - 2 * f) > 1e-12:
            raise ValueError(f"angular momentum must be integer or half-integer, got {f}")
        return cls(int(two_f))

    @property
    def value(self) -> float:
        return self.two_f / 2

    @property
    def dim(self) -> int:
        return self.two_f + 1

    def two_m_values(self) -> list[int]:
        """Doubled magnetic quantum numbers in ascending order."""
        return list(range(-self.two_f, self.two_f + 1, 2))

    def m_values(self) -> list[float]:
        return [tm / 2 for tm in self.two_m_values()]


def _check(two_j: int, two_m: int) -> None:
    if two_j < 0:
        raise ValueError(f"negative angular momentum 2j={two_j}")
    if (two_j - two_m) % 2:
        raise ValueError(f"parity mismatch between 2j={two_j} and 2m={two_m}")


def clebsch_gordan_twice(tj1: int, tm1: int, tj2: int, tm2: int, tJ: int, tM: int) -> float:
    """<j1 m1; j2 m2 | J M> with every argument doubled (Condon-Shortley phases)."""
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tJ, tM)):
        _check(tj, tm)
    if tm1 + tm2 != tM:
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tM) > tJ:
        return 0.0
    if tJ > tj1 + tj2 or tJ < abs(tj1 - tj2) or (tj1 + tj2 + tJ) % 2:
        return 0.0

    # all half-sums below are integers once the triangle/parity checks pass
    a = (tj1 + tj2 - tJ) // 2
    b = (tj1 - tj2 + tJ) // 2
    c = (-tj1 + tj2 + tJ) // 2
    d = (tj1 + tj2 + tJ) // 2 + 1
    pref = Fraction((tJ + 1) * factorial(a) * factorial(b) * factorial(c), factorial(d))
    pref *= (
        factorial((tj1 + tm1) // 2) * factorial((tj1 - tm1) // 2)
        * factorial((tj2 + tm2) // 2) * factorial((tj2 - tm2) // 2)
        * factorial((tJ + tM) // 2) * factorial((tJ - tM) // 2)
    )

    kmin = max(0, (tj2 - tJ - tm1) // 2, (tj1 - tJ + tm2) // 2)
    kmax = min(a, (tj1 - tm1) // 2, (tj2 + tm2) // 2)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            factorial(k)
            * factorial(a - k)
            * factorial((tj1 - tm1) // 2 - k)
            * factorial((tj2 + tm2) // 2 - k)
            * factorial((tJ - tj2 + tm1) // 2 + k)
            * factorial((tJ - tj1 - tm2) // 2 + k)
        )
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0
    sign = 1.0 if total > 0 else -1.0
    return sign * sqrt(pref * total * total)


def clebsch_gordan(j1: float, m1: float, j2: float, m2: float, J: float, M: float) -> float:
    """<j1 m1; j2 m2 | J M> for integer or half-integer arguments."""
    doubled = []
    for x in (j1, m1, j2, m2, J, M):
        tx = round(2 * x)
        if abs(tx - 2 * x) > 1e-12:
            raise ValueError(f"quantum number {x} is not a multiple of 1/2")
        doubled.append(int(tx))
    return clebsch_gordan_twice(*doubled)


def lowering_operators(fg: AngularMomentum, fe: AngularMomentum) -> dict[int, np.ndarray]:
    """Spherical components ``Q_q`` (q = -1, 0, +1) of the dipole lowering operator.

    The basis is ground sublevels (ascending m) followed by excited sublevels
    (ascending m).  ``Q_q[(g, mg), (e, me)] = <Fg mg; 1 q | Fe me>`` with
    ``me = mg + q``; every other entry vanishes.
    """
    if abs(fe.two_f - fg.two_f) > 2 or fe.two_f + fg.two_f < 2:
        raise ValueError(
            f"no dipole transition between Fg={fg.value} and Fe={fe.value}"
        )
    ng, ne = fg.dim, fe.dim
    n = ng + ne
    ops = {}
    for q in (-1, 0, 1):
        mat = np.zeros((n, n))
        for i, tmg in enumerate(fg.two_m_values()):
            for j, tme in enumerate(fe.two_m_values()):
                if tme == tmg + 2 * q:
                    mat[i, ng + j] = clebsch_gordan_twice(fg.two_f, tmg, 2, 2 * q, fe.two_f, tme)
        ops[q] = mat
    return ops


@dataclass(frozen=True)
class PolarizationVector:
    """Unit polarization in spherical components (q = -1, 0, +1)."""

    q_minus: complex
    q_zero: complex
    q_plus: complex

    @classmethod
    def from_components(cls, comps) -> "PolarizationVector":
        v = np.asarray(comps, dtype=complex)
        if v.shape != (3,):
            raise ValueError("expected three spherical components")
        norm = np.linalg.norm(v)
        if not np.isfinite(norm) or norm == 0:
            raise ValueError("polarization vector must be nonzero and finite")
        v = v / norm
        return cls(complex(v[0]), complex(v[1]), complex(v[2]))

    def __getitem__(self, q: int) -> complex:
        return {-1: self.q_minus, 0: self.q_zero, 1: self.q_plus}[q]

    def as_array(self) -> np.ndarray:
        return np.array([self.q_minus, self.q_zero, self.q_plus], dtype=complex)

    def to_cartesian(self) -> np.ndarray:
        return _SPHERICAL_BASIS @ self.as_array()

    def with_phase(self, phi: float) -> "PolarizationVector":
        return PolarizationVector.from_components(np.exp(1j * phi) * self.as_array())


def cartesian_to_spherical(e_x: complex, e_y: complex, e_z: complex) -> PolarizationVector:
    """Normalized spherical expansion of a lab-frame field vector."""
    vec = np.array([e_x, e_y, e_z], dtype=complex)
    return PolarizationVector.from_components(_SPHERICAL_BASIS.conj().T @ vec)


def rotation_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Active z-y-z Euler rotation ``Rz(alpha) Ry(beta) Rz(gamma)``."""

    def rz(a):
        c, s = np.cos(a), np.sin(a)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    c, s = np.cos(beta), np.sin(beta)
    ry = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return rz(alpha) @ ry @ rz(gamma)


def spherical_rotation(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """3x3 unitary acting on spherical components for the same rotation."""
    return _SPHERICAL_BASIS.conj().T @ rotation_matrix(alpha, beta, gamma) @ _SPHERICAL_BASIS


def rotate_polarization(p: PolarizationVector, rotation: tuple[float, float, float]) -> PolarizationVector:
    out = spherical_rotation(*rotation) @ p.as_array()
    return PolarizationVector(complex(out[0]), complex(out[1]), complex(out[2]))


# Named configurations used throughout (quantization axis along the pump).
PI = cartesian_to_spherical(0, 0, 1)
LINEAR_X = cartesian_to_spherical(1, 0, 0)
SIGMA_PLUS = cartesian_to_spherical(1 / SQRT2, 1j / SQRT2, 0)
SIGMA_MINUS = cartesian_to_spherical(1 / SQRT2, -1j / SQRT2, 0)

POLARIZATION_CONFIGS = {
    "circular": (SIGMA_PLUS, SIGMA_PLUS),
    "parallel": (PI, PI),
    "perpendicular": (PI, LINEAR_X),
}
