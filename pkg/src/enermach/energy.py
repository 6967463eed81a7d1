"""Energy model contract and the linear machine models.

A machine is described by one scalar function H(theta, rho, phi): rotor
electrical angle, a momentum-like mechanical state, and the flux linkage
vector in rotating coordinates.  Everything observable is a derivative:

* currents           i = dH/dphi
* electrical speed   omega = dH/drho
* torque             T = -n_p * dH/dtheta + n_p * i^T J phi

All shipped models broadcast: ``phi`` may carry leading batch dimensions
(shape ``(..., flux_dim)``) with ``theta`` and ``rho`` broadcastable
against them.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EnergyModel",
    "LinearPmsmParams",
    "LinearPmsmEnergy",
    "SynrmEnergy",
    "MachineState",
    "linear_energy",
    "synrm_energy",
    "currents",
    "torque",
    "speed",
    "numeric_gradient",
    "kinetic_coefficient",
]


class EnergyModel(abc.ABC):
    """Scalar energy function of (theta, rho, phi) plus its analytic derivatives.

    Concrete models set ``flux_dim`` (2 for single-winding machines in dq,
    4 for machines with a rotor winding) and ``pole_pairs``.
    """

    flux_dim: int = 2
    pole_pairs: int = 1

    @abc.abstractmethod
    def evaluate(self, theta, rho, phi):
        """Energy in joules."""

    @abc.abstractmethod
    def d_flux(self, theta, rho, phi):
        """Gradient with respect to phi: the current vector, shape (..., flux_dim)."""

    @abc.abstractmethod
    def d_theta(self, theta, rho, phi):
        """Partial derivative with respect to rotor electrical angle."""

    @abc.abstractmethod
    def d_rho(self, theta, rho, phi):
        """Partial derivative with respect to rho: the electrical speed."""


def _batch_shape(theta, rho, phi):
    theta = np.asarray(theta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.broadcast_shapes(theta.shape, rho.shape, phi.shape[:-1])


@dataclass(frozen=True)
class LinearPmsmParams:
    """Parameters of the linear (unsaturated) magnet machine in dq coordinates.

    Parameters
    ----------
    L_d, L_q : float
        Direct and quadrature axis inductances (H).
    phi_M : float
        Magnet flux linkage (Wb).  Zero gives a pure reluctance machine.
    kinetic_coeff : float
        Coefficient kappa of rho**2/2 in the energy; omega = kappa*rho.
        See :func:`kinetic_coefficient` for the two inertia conventions.
    n_p : int
        Pole pair count.
    R_s : float
        Stator resistance (ohm).  Not part of the energy; the simulator
        and the power bookkeeping use it.
    """

    L_d: float
    L_q: float
    phi_M: float
    kinetic_coeff: float
    n_p: int
    R_s: float = 0.0

    def __post_init__(self):
        if self.L_d <= 0.0 or self.L_q <= 0.0:
            raise ValueError("inductances must be positive")
        if self.phi_M < 0.0:
            raise ValueError("phi_M must be non-negative")
        if self.kinetic_coeff <= 0.0:
            raise ValueError("kinetic_coeff must be positive")
        if int(self.n_p) != self.n_p or self.n_p < 1:
            raise ValueError("n_p must be a positive integer")
        if self.R_s < 0.0:
            raise ValueError("R_s must be non-negative")


class LinearPmsmEnergy(EnergyModel):
    """Quadratic energy: kinetic term plus one quadratic well per axis.

    H = kappa*rho**2/2 + (phi_d - phi_M)**2/(2 L_d) + phi_q**2/(2 L_q)
    """

    flux_dim = 2

    def __init__(self, params: LinearPmsmParams):
        self.params = params
        self.pole_pairs = int(params.n_p)

    def evaluate(self, theta, rho, phi):
        p = self.params
        phi = np.asarray(phi, dtype=float)
        rho = np.asarray(rho, dtype=float)
        x = phi[..., 0] - p.phi_M
        y = phi[..., 1]
        return 0.5 * p.kinetic_coeff * rho**2 + x**2 / (2.0 * p.L_d) + y**2 / (2.0 * p.L_q)

    def d_flux(self, theta, rho, phi):
        p = self.params
        phi = np.asarray(phi, dtype=float)
        x = phi[..., 0] - p.phi_M
        y = phi[..., 1]
        return np.stack([x / p.L_d, y / p.L_q], axis=-1)

    def d_theta(self, theta, rho, phi):
        return np.zeros(_batch_shape(theta, rho, phi))

    def d_rho(self, theta, rho, phi):
        del theta, phi
        return self.params.kinetic_coeff * np.asarray(rho, dtype=float)


class SynrmEnergy(LinearPmsmEnergy):
    """Pure reluctance machine: the linear model with no magnet flux."""


def linear_energy(p: LinearPmsmParams) -> LinearPmsmEnergy:
    """Build the linear magnet machine model."""
    return LinearPmsmEnergy(p)


def synrm_energy(p: LinearPmsmParams) -> SynrmEnergy:
    """Build the reluctance machine model; requires phi_M == 0."""
    if p.phi_M != 0.0:
        raise ValueError("reluctance model requires phi_M = 0")
    return SynrmEnergy(p)


def currents(m: EnergyModel, theta, rho, phi):
    """Current vector i = dH/dphi, shape (..., flux_dim)."""
    return m.d_flux(theta, rho, phi)


def speed(m: EnergyModel, theta, rho, phi):
    """Electrical angular speed omega = dH/drho."""
    return m.d_rho(theta, rho, phi)


def torque(m: EnergyModel, theta, rho, phi):
    """Electromagnetic torque.

    T = -n_p * dH/dtheta + n_p * (i_q*phi_d - i_d*phi_q).  For four-flux
    models (stator plus rotor winding) the cross product term is taken on
    the rotor pair, matching the rotor-side expression i_r^T J phi_r.
    """
    phi = np.asarray(phi, dtype=float)
    i = m.d_flux(theta, rho, phi)
    n_p = m.pole_pairs
    if m.flux_dim == 4:
        cross = i[..., 3] * phi[..., 2] - i[..., 2] * phi[..., 3]
    else:
        cross = i[..., 1] * phi[..., 0] - i[..., 0] * phi[..., 1]
    return -n_p * m.d_theta(theta, rho, phi) + n_p * cross


def numeric_gradient(f, x, scale: float = 1.0e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function at the point ``x``.

    The step is ``scale * max(1, ||x||)`` applied per coordinate.  Meant as
    an independent cross-check of analytic derivatives, so it deliberately
    knows nothing about the function it probes.
    """
    x = np.asarray(x, dtype=float)
    h = scale * max(1.0, float(np.linalg.norm(x)))
    g = np.empty_like(x)
    for k in range(x.size):
        step = np.zeros_like(x)
        step.flat[k] = h
        g.flat[k] = (f(x + step) - f(x - step)) / (2.0 * h)
    return g


def kinetic_coefficient(inertia: float, pole_pairs: int, convention: str = "mechanical") -> float:
    """Kinetic coefficient kappa from rotor inertia.

    ``mechanical`` stores the true rotational energy (kappa = n_p**2 / J, so
    kappa*rho**2/2 equals J*omega_mech**2/2 with omega = kappa*rho).  The
    ``reciprocal`` convention kappa = 1 / (J * n_p**2) also circulates; it is
    accepted for interoperability.
    """
    if inertia <= 0.0:
        raise ValueError("inertia must be positive")
    if convention == "mechanical":
        return pole_pairs**2 / inertia
    if convention == "reciprocal":
        return 1.0 / (inertia * pole_pairs**2)
    raise ValueError(f"unknown kinetic convention {convention!r}")


@dataclass(frozen=True)
class MachineState:
    """Instantaneous state (theta, rho, phi) of a machine."""

    theta: float
    rho: float
    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float).copy())
