"""Polynomial saturation model for magnet machines.

The magnetic energy is a quartic polynomial in the flux deviation from the
magnet working point, x = phi_d - phi_M and y = phi_q:

    H_mag = inv_L_d*x**2/2 + inv_L_q*y**2/2
          + alpha_30*x**3 + alpha_12*x*y**2
          + alpha_40*x**4 + alpha_22*x**2*y**2 + alpha_04*y**4

Only even powers of y appear, which keeps the d-axis a symmetry axis of the
magnetics.  Coefficients are routinely published in dimensionless form,
premultiplied by powers of phi_M; ``from_scaled`` and ``scaled_values``
convert between the two.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .energy import EnergyModel

__all__ = [
    "SaturationCoefficients",
    "SaturatedPmsmEnergy",
    "SaturationRangeWarning",
    "saturated_energy",
    "saturated_currents",
    "incremental_inductance",
    "SCALED_KEYS",
]

#: Order of the scaled-coefficient table used by from_scaled / scaled_values.
SCALED_KEYS = (
    "phiM2_inv_Ld",
    "phiM2_inv_Lq",
    "phiM3_alpha_30",
    "phiM3_alpha_12",
    "phiM4_alpha_40",
    "phiM4_alpha_22",
    "phiM4_alpha_04",
)


class SaturationRangeWarning(UserWarning):
    """Polynomial evaluated outside the flux box it was fitted on."""


@dataclass(frozen=True)
class SaturationCoefficients:
    """Quartic saturation model parameters.

    ``inv_L_d`` and ``inv_L_q`` are the inverse small-signal inductances at
    the magnet working point (1/H); the alphas are the cubic and quartic
    coefficients.  Mechanical parameters default to placeholders so a pure
    magnetics fit can live in this type on its own.
    """

    inv_L_d: float
    inv_L_q: float
    phi_M: float
    alpha_30: float = 0.0
    alpha_12: float = 0.0
    alpha_40: float = 0.0
    alpha_22: float = 0.0
    alpha_04: float = 0.0
    kinetic_coeff: float = 1.0
    n_p: int = 1
    R_s: float = 0.0

    def __post_init__(self):
        if self.inv_L_d <= 0.0 or self.inv_L_q <= 0.0:
            raise ValueError("inverse inductances must be positive")
        if self.phi_M < 0.0:
            raise ValueError("phi_M must be non-negative")
        if self.kinetic_coeff <= 0.0:
            raise ValueError("kinetic_coeff must be positive")
        if int(self.n_p) != self.n_p or self.n_p < 1:
            raise ValueError("n_p must be a positive integer")
        if self.R_s < 0.0:
            raise ValueError("R_s must be non-negative")

    @classmethod
    def from_scaled(
        cls,
        phi_M: float,
        phiM2_inv_Ld: float,
        phiM2_inv_Lq: float,
        phiM3_alpha_30: float = 0.0,
        phiM3_alpha_12: float = 0.0,
        phiM4_alpha_40: float = 0.0,
        phiM4_alpha_22: float = 0.0,
        phiM4_alpha_04: float = 0.0,
        kinetic_coeff: float = 1.0,
        n_p: int = 1,
        R_s: float = 0.0,
    ) -> "SaturationCoefficients":
        """Build from the dimensionless published form (A*Wb units)."""
        if phi_M <= 0.0:
            raise ValueError("scaled coefficients need phi_M > 0")
        return cls(
            inv_L_d=phiM2_inv_Ld / phi_M**2,
            inv_L_q=phiM2_inv_Lq / phi_M**2,
            phi_M=phi_M,
            alpha_30=phiM3_alpha_30 / phi_M**3,
            alpha_12=phiM3_alpha_12 / phi_M**3,
            alpha_40=phiM4_alpha_40 / phi_M**4,
            alpha_22=phiM4_alpha_22 / phi_M**4,
            alpha_04=phiM4_alpha_04 / phi_M**4,
            kinetic_coeff=kinetic_coeff,
            n_p=n_p,
            R_s=R_s,
        )

    def scaled_values(self) -> dict:
        """Coefficients premultiplied by powers of phi_M, keyed by SCALED_KEYS."""
        if self.phi_M <= 0.0:
            raise ValueError("scaled form needs phi_M > 0")
        m = self.phi_M
        return {
            "phiM2_inv_Ld": m**2 * self.inv_L_d,
            "phiM2_inv_Lq": m**2 * self.inv_L_q,
            "phiM3_alpha_30": m**3 * self.alpha_30,
            "phiM3_alpha_12": m**3 * self.alpha_12,
            "phiM4_alpha_40": m**4 * self.alpha_40,
            "phiM4_alpha_22": m**4 * self.alpha_22,
            "phiM4_alpha_04": m**4 * self.alpha_04,
        }


def _warn_outside_box(c: SaturationCoefficients, x, y):
    # The quartic is only trustworthy inside the flux box it was fitted on;
    # evaluation proceeds anyway.
    if c.phi_M <= 0.0:
        return
    worst = max(float(np.max(np.abs(x))), float(np.max(np.abs(y))))
    if worst > c.phi_M:
        warnings.warn(
            f"flux deviation {worst:.4g} Wb exceeds the saturation model's "
            f"fitted range |x|,|y| <= {c.phi_M:.4g} Wb",
            SaturationRangeWarning,
            stacklevel=3,
        )


def saturated_currents(c: SaturationCoefficients, phi):
    """Currents (i_d, i_q) = dH_mag/dphi of the quartic model, shape (..., 2)."""
    phi = np.asarray(phi, dtype=float)
    x = phi[..., 0] - c.phi_M
    y = phi[..., 1]
    _warn_outside_box(c, x, y)
    i_d = (
        c.inv_L_d * x
        + 3.0 * c.alpha_30 * x**2
        + c.alpha_12 * y**2
        + 4.0 * c.alpha_40 * x**3
        + 2.0 * c.alpha_22 * x * y**2
    )
    i_q = (
        c.inv_L_q * y
        + 2.0 * c.alpha_12 * x * y
        + 2.0 * c.alpha_22 * x**2 * y
        + 4.0 * c.alpha_04 * y**3
    )
    return np.stack([i_d, i_q], axis=-1)


def incremental_inductance(c: SaturationCoefficients, phi):
    """Jacobian di/dphi of the quartic model, symmetric, shape (..., 2, 2), 1/H."""
    phi = np.asarray(phi, dtype=float)
    x = phi[..., 0] - c.phi_M
    y = phi[..., 1]
    dd = c.inv_L_d + 6.0 * c.alpha_30 * x + 12.0 * c.alpha_40 * x**2 + 2.0 * c.alpha_22 * y**2
    dq = 2.0 * c.alpha_12 * y + 4.0 * c.alpha_22 * x * y
    qq = c.inv_L_q + 2.0 * c.alpha_12 * x + 2.0 * c.alpha_22 * x**2 + 12.0 * c.alpha_04 * y**2
    row_d = np.stack([dd, dq], axis=-1)
    row_q = np.stack([dq, qq], axis=-1)
    return np.stack([row_d, row_q], axis=-2)


class SaturatedPmsmEnergy(EnergyModel):
    """Energy model built on :class:`SaturationCoefficients`."""

    flux_dim = 2

    def __init__(self, coefficients: SaturationCoefficients):
        self.params = coefficients
        self.pole_pairs = int(coefficients.n_p)

    def evaluate(self, theta, rho, phi):
        c = self.params
        phi = np.asarray(phi, dtype=float)
        rho = np.asarray(rho, dtype=float)
        x = phi[..., 0] - c.phi_M
        y = phi[..., 1]
        _warn_outside_box(c, x, y)
        return (
            0.5 * c.kinetic_coeff * rho**2
            + 0.5 * c.inv_L_d * x**2
            + 0.5 * c.inv_L_q * y**2
            + c.alpha_30 * x**3
            + c.alpha_12 * x * y**2
            + c.alpha_40 * x**4
            + c.alpha_22 * x**2 * y**2
            + c.alpha_04 * y**4
        )

    def d_flux(self, theta, rho, phi):
        return saturated_currents(self.params, phi)

    def d_theta(self, theta, rho, phi):
        theta = np.asarray(theta, dtype=float)
        rho = np.asarray(rho, dtype=float)
        phi = np.asarray(phi, dtype=float)
        shape = np.broadcast_shapes(theta.shape, rho.shape, phi.shape[:-1])
        return np.zeros(shape)

    def d_rho(self, theta, rho, phi):
        del theta, phi
        return self.params.kinetic_coeff * np.asarray(rho, dtype=float)


def saturated_energy(c: SaturationCoefficients) -> SaturatedPmsmEnergy:
    """Build the saturated magnet machine model."""
    return SaturatedPmsmEnergy(c)
