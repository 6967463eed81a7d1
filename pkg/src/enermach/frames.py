"""Three-phase reference frame transformations and the constant matrices behind them.

Everything here uses the power-invariant (orthonormal) scaling, so all the
transform matrices are orthogonal and instantaneous power is the same number
in every frame.  Conventions:

* ``clarke`` maps phase quantities (a, b, c) to the stationary frame
  (alpha, beta, 0).
* ``park`` rotates stationary-frame quantities into a frame aligned with
  angle ``theta`` (electrical radians); the zero component passes through.
* ``k_transform`` is the composition of the two, phase frame straight to
  the rotating frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhaseTriple",
    "OrthTriple",
    "RotTriple",
    "CLARKE",
    "PERMUTE",
    "SWAP_BC",
    "REFLECT_Q",
    "J2",
    "J3",
    "rotation",
    "rotation2",
    "k_matrix",
    "clarke",
    "inv_clarke",
    "park",
    "inv_park",
    "k_transform",
    "conjugated_permutation",
    "conjugated_swap",
]

_SQRT_2_3 = math.sqrt(2.0 / 3.0)
_INV_SQRT_2 = 1.0 / math.sqrt(2.0)
_HALF_SQRT_3 = math.sqrt(3.0) / 2.0

#: Orthonormal Clarke matrix; maps (a, b, c) to (alpha, beta, 0).
CLARKE = _SQRT_2_3 * np.array(
    [
        [1.0, -0.5, -0.5],
        [0.0, _HALF_SQRT_3, -_HALF_SQRT_3],
        [_INV_SQRT_2, _INV_SQRT_2, _INV_SQRT_2],
    ]
)

#: Cyclic phase permutation, (a, b, c) -> (b, c, a).
PERMUTE = np.array(
    [
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0],
    ]
)

#: Swap of phases b and c.
SWAP_BC = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
    ]
)

#: Reflection of the second (q / beta) axis.
REFLECT_Q = np.array([[1.0, 0.0], [0.0, -1.0]])

#: Planar 90-degree rotation generator, J2 @ (x, y) = (-y, x).
J2 = np.array([[0.0, -1.0], [1.0, 0.0]])

#: Same generator embedded in 3x3 with a dead zero axis.
J3 = np.array(
    [
        [0.0, -1.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
    ]
)


@dataclass(frozen=True)
class PhaseTriple:
    """Quantity expressed per phase, (a, b, c)."""

    a: float
    b: float
    c: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    @staticmethod
    def from_array(x) -> "PhaseTriple":
        a, b, c = np.asarray(x, dtype=float)
        return PhaseTriple(float(a), float(b), float(c))


@dataclass(frozen=True)
class OrthTriple:
    """Stationary-frame quantity, (alpha, beta, zero)."""

    alpha: float
    beta: float
    zero: float

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.zero])

    @staticmethod
    def from_array(x) -> "OrthTriple":
        al, be, ze = np.asarray(x, dtype=float)
        return OrthTriple(float(al), float(be), float(ze))


@dataclass(frozen=True)
class RotTriple:
    """Rotating-frame quantity, (d, q, zero), tagged with the frame angle."""

    d: float
    q: float
    zero: float
    theta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.d, self.q, self.zero])

    @staticmethod
    def from_array(x, theta: float) -> "RotTriple":
        d, q, ze = np.asarray(x, dtype=float)
        return RotTriple(float(d), float(q), float(ze), float(theta))


def rotation(theta: float) -> np.ndarray:
    """3x3 rotation about the zero axis by ``theta``."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [
            [c, -s, 0.0],
            [s, c, 0.0],
            [0.0, 0.0, 1.0],
        ]
    )


def rotation2(theta: float) -> np.ndarray:
    """Planar 2x2 rotation by ``theta``."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def k_matrix(theta: float) -> np.ndarray:
    """Combined phase-to-rotating-frame matrix, equal to rotation(theta).T @ CLARKE."""
    c = math.cos
    s = math.sin
    t2 = theta - 2.0 * math.pi / 3.0
    t4 = theta - 4.0 * math.pi / 3.0
    return _SQRT_2_3 * np.array(
        [
            [c(theta), c(t2), c(t4)],
            [-s(theta), -s(t2), -s(t4)],
            [_INV_SQRT_2, _INV_SQRT_2, _INV_SQRT_2],
        ]
    )


def clarke(x: PhaseTriple) -> OrthTriple:
    """Phase frame to stationary orthonormal frame."""
    return OrthTriple.from_array(CLARKE @ x.as_array())


def inv_clarke(y: OrthTriple) -> PhaseTriple:
    """Stationary orthonormal frame back to phases (CLARKE is orthogonal)."""
    return PhaseTriple.from_array(CLARKE.T @ y.as_array())


def park(y: OrthTriple, theta: float) -> RotTriple:
    """Stationary frame into the rotating frame at angle ``theta``."""
    return RotTriple.from_array(rotation(theta).T @ y.as_array(), theta)


def inv_park(z: RotTriple, theta: float) -> OrthTriple:
    """Rotating frame at angle ``theta`` back to the stationary frame."""
    return OrthTriple.from_array(rotation(theta) @ z.as_array())


def k_transform(x: PhaseTriple, theta: float) -> RotTriple:
    """Phase frame straight into the rotating frame; same as park(clarke(x), theta)."""
    return RotTriple.from_array(k_matrix(theta) @ x.as_array(), theta)


def conjugated_permutation() -> np.ndarray:
    """CLARKE @ PERMUTE @ CLARKE.T: block-diagonal, planar rotation by -2*pi/3."""
    return CLARKE @ PERMUTE @ CLARKE.T


def conjugated_swap() -> np.ndarray:
    """CLARKE @ SWAP_BC @ CLARKE.T: block-diagonal, planar reflection."""
    return CLARKE @ SWAP_BC @ CLARKE.T
