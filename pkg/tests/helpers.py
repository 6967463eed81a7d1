"""Shared fixtures: two reference machines, an induction machine, and
deliberately broken model doubles used to prove the checks can fail."""

from pathlib import Path

import numpy as np

from enermach.energy import EnergyModel, LinearPmsmParams, kinetic_coefficient
from enermach.harmonics import (
    FluxPolynomial,
    HarmonicModel,
    HarmonicTerm,
    ZeroAxisSeries,
)
from enermach.induction import ImParams
from enermach.saturation import SaturationCoefficients

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

# interior magnet machine: 750 W class, 196 mWb magnet, 3 pole pairs
IPM_PHI_M = 0.196
IPM_SCALED = {
    "phiM2_inv_Ld": 4.20,
    "phiM2_inv_Lq": 2.83,
    "phiM3_alpha_30": 0.770,
    "phiM3_alpha_12": 0.702,
    "phiM4_alpha_40": 0.486,
    "phiM4_alpha_22": 0.734,
    "phiM4_alpha_04": 0.175,
}
IPM_NP = 3
IPM_RS = 1.52

# surface magnet machine: 1.5 kW class, 155 mWb magnet, 5 pole pairs
SPM_PHI_M = 0.155
SPM_SCALED = {
    "phiM2_inv_Ld": 3.06,
    "phiM2_inv_Lq": 2.94,
    "phiM3_alpha_30": 0.655,
    "phiM3_alpha_12": 0.617,
    "phiM4_alpha_40": 0.724,
    "phiM4_alpha_22": 1.010,
    "phiM4_alpha_04": 0.262,
}
SPM_NP = 5
SPM_RS = 2.1


def ipm_linear_params(R_s=IPM_RS):
    return LinearPmsmParams(
        L_d=IPM_PHI_M**2 / IPM_SCALED["phiM2_inv_Ld"],
        L_q=IPM_PHI_M**2 / IPM_SCALED["phiM2_inv_Lq"],
        phi_M=IPM_PHI_M,
        kinetic_coeff=kinetic_coefficient(1.2e-3, IPM_NP),
        n_p=IPM_NP,
        R_s=R_s,
    )


def synrm_params():
    return LinearPmsmParams(
        L_d=45.0e-3,
        L_q=12.0e-3,
        phi_M=0.0,
        kinetic_coeff=kinetic_coefficient(2.0e-3, 2),
        n_p=2,
        R_s=0.9,
    )


def ipm_saturation(R_s=IPM_RS):
    return SaturationCoefficients.from_scaled(
        IPM_PHI_M,
        **IPM_SCALED,
        kinetic_coeff=kinetic_coefficient(1.2e-3, IPM_NP),
        n_p=IPM_NP,
        R_s=R_s,
    )


def spm_saturation(R_s=SPM_RS):
    return SaturationCoefficients.from_scaled(
        SPM_PHI_M,
        **SPM_SCALED,
        kinetic_coeff=kinetic_coefficient(2.4e-3, SPM_NP),
        n_p=SPM_NP,
        R_s=R_s,
    )


def ipm_harmonic_model():
    m = IPM_PHI_M
    terms = (
        HarmonicTerm(
            k=1,
            a_poly=FluxPolynomial({(0, 0): 8.0e-3, (1, 0): 2.0e-2, (2, 0): 5.0e-2, (0, 2): 3.0e-2}),
            b_poly=FluxPolynomial({(0, 1): 1.5e-2, (1, 1): 4.0e-2, (0, 3): 0.3}),
        ),
        HarmonicTerm(
            k=2,
            a_poly=FluxPolynomial({(0, 0): 2.0e-3, (2, 2): 0.8}),
            b_poly=FluxPolynomial({(2, 1): 0.2}),
        ),
    )
    zero = ZeroAxisSeries(cos_coeffs=(4.0e-3, 1.0e-3), sin_coeffs=(2.0e-3,))
    return HarmonicModel(base=ipm_saturation(), terms=terms, zero_axis=zero)


def im_params():
    return ImParams(
        L_s=0.12,
        L_r=0.12,
        L_m=0.11,
        R_s=2.0,
        R_r=1.5,
        kinetic_coeff=kinetic_coefficient(5.0e-3, 2),
        n_p=2,
    )


class _Delegate(EnergyModel):
    """Pass-through wrapper; subclasses override one derivative to break it."""

    def __init__(self, inner):
        self.inner = inner
        self.flux_dim = inner.flux_dim
        self.pole_pairs = inner.pole_pairs
        self.params = getattr(inner, "params", None)

    def evaluate(self, theta, rho, phi):
        return self.inner.evaluate(theta, rho, phi)

    def d_flux(self, theta, rho, phi):
        return self.inner.d_flux(theta, rho, phi)

    def d_theta(self, theta, rho, phi):
        return self.inner.d_theta(theta, rho, phi)

    def d_rho(self, theta, rho, phi):
        return self.inner.d_rho(theta, rho, phi)


class BrokenReciprocity(_Delegate):
    """i_q picks up eps*phi_d with no matching term in i_d."""

    def __init__(self, inner, eps=1.0e-3):
        super().__init__(inner)
        self.eps = eps

    def d_flux(self, theta, rho, phi):
        phi = np.asarray(phi, dtype=float)
        i = np.array(self.inner.d_flux(theta, rho, phi), dtype=float)
        i[..., 1] = i[..., 1] + self.eps * phi[..., 0]
        return i


class InjectedAngleTerm(_Delegate):
    """Adds amp*cos(mult*theta) to the energy (period spoiler for mult=3)."""

    def __init__(self, inner, amp=1.0e-3, mult=3.0):
        super().__init__(inner)
        self.amp = amp
        self.mult = mult

    def evaluate(self, theta, rho, phi):
        theta = np.asarray(theta, dtype=float)
        return self.inner.evaluate(theta, rho, phi) + self.amp * np.cos(self.mult * theta)

    def d_theta(self, theta, rho, phi):
        theta = np.asarray(theta, dtype=float)
        return self.inner.d_theta(theta, rho, phi) - self.amp * self.mult * np.sin(
            self.mult * theta
        )


class BrokenParity(_Delegate):
    """Adds c*phi_q**3: odd in phi_q, consistent gradient (reciprocity-safe)."""

    def __init__(self, inner, c=1.0e-3):
        super().__init__(inner)
        self.c = c

    def evaluate(self, theta, rho, phi):
        phi = np.asarray(phi, dtype=float)
        return self.inner.evaluate(theta, rho, phi) + self.c * phi[..., 1] ** 3

    def d_flux(self, theta, rho, phi):
        phi = np.asarray(phi, dtype=float)
        i = np.array(self.inner.d_flux(theta, rho, phi), dtype=float)
        i[..., 1] = i[..., 1] + 3.0 * self.c * phi[..., 1] ** 2
        return i


class BrokenImRotation(_Delegate):
    """Adds eps*phi_sd**2: singles out one direction of the common frame."""

    def __init__(self, inner, eps=1.0e-3):
        super().__init__(inner)
        self.eps = eps

    def evaluate(self, theta, rho, phi):
        phi = np.asarray(phi, dtype=float)
        return self.inner.evaluate(theta, rho, phi) + self.eps * phi[..., 0] ** 2

    def d_flux(self, theta, rho, phi):
        phi = np.asarray(phi, dtype=float)
        i = np.array(self.inner.d_flux(theta, rho, phi), dtype=float)
        i[..., 0] = i[..., 0] + 2.0 * self.eps * phi[..., 0]
        return i
