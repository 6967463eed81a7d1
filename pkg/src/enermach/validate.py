"""Self-consistency checks for energy models.

Every check samples its claim at random points in an operating box and
reports the worst violation, absolute and relative.  Relative means
divided by the natural scale of the quantity compared (the largest energy
or Jacobian entry seen among the samples), so tolerances transfer between
machines of different size.  Checks are pure functions of (model, box,
n_samples, seed): rerunning one is bit-reproducible, and batching or
splitting the sample set can only change a report through the max-merge.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .energy import EnergyModel
from .induction import ImParams, im_energy
from .saturation import SaturationRangeWarning

__all__ = [
    "CheckReport",
    "SampleBox",
    "default_box",
    "check_reciprocity",
    "check_period",
    "check_parity",
    "check_synrm_evenness",
    "check_im_rotation",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one check: pass iff max_rel < tolerance."""

    name: str
    samples: int
    tolerance: float
    max_abs: float
    scale: float
    max_rel: float
    passed: bool
    worst_point: Dict[str, float]

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: max_rel={self.max_rel:.3e} "
            f"(abs={self.max_abs:.3e}, scale={self.scale:.3e}, "
            f"tol={self.tolerance:.1e}, n={self.samples})"
        )


@dataclass(frozen=True)
class SampleBox:
    """Sampling region: flux box (center +- half), angle and momentum ranges."""

    phi_center: np.ndarray
    phi_half: np.ndarray
    theta_half: float
    rho_half: float

    def __post_init__(self):
        object.__setattr__(self, "phi_center", np.asarray(self.phi_center, dtype=float))
        object.__setattr__(self, "phi_half", np.asarray(self.phi_half, dtype=float))
        if self.phi_center.shape != self.phi_half.shape:
            raise ValueError("phi_center and phi_half must have the same shape")
        if np.any(self.phi_half <= 0.0) or self.theta_half <= 0.0 or self.rho_half <= 0.0:
            raise ValueError("box half-widths must be positive")

    def draw(self, rng: np.random.Generator, n: int):
        dim = self.phi_center.size
        phi = self.phi_center + self.phi_half * rng.uniform(-1.0, 1.0, (n, dim))
        theta = rng.uniform(-self.theta_half, self.theta_half, n)
        rho = rng.uniform(-self.rho_half, self.rho_half, n)
        return theta, rho, phi


def default_box(m: EnergyModel) -> SampleBox:
    """Operating box derived from the model parameters.

    For magnet machines the flux box is centered on the magnet working
    point with half-width phi_M (the trust region of the saturation
    polynomial); machines without a magnet get a generic 0.25 Wb box.  The
    momentum range corresponds to about 1000 rad/s electrical.
    """
    params = getattr(m, "params", None)
    kappa = float(getattr(params, "kinetic_coeff", 1.0))
    rho_half = 1000.0 / kappa
    if m.flux_dim == 4:
        return SampleBox(np.zeros(4), np.full(4, 0.5), _TWO_PI, rho_half)
    phi_M = float(getattr(params, "phi_M", 0.0))
    if phi_M > 0.0:
        center = np.array([phi_M, 0.0])
        half = np.array([phi_M, phi_M])
    else:
        center = np.zeros(2)
        half = np.full(2, 0.25)
    return SampleBox(center, half, _TWO_PI, rho_half)


def _h_comparison_report(name, tol, theta, rho, phi, h1, h2) -> CheckReport:
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    diff = np.abs(h1 - h2)
    worst = int(np.argmax(diff))
    max_abs = float(diff[worst])
    scale = max(float(np.max(np.abs(h1))), float(np.max(np.abs(h2))), 1.0e-30)
    max_rel = max_abs / scale
    point = {"theta": float(theta[worst]), "rho": float(rho[worst])}
    for k in range(phi.shape[1]):
        point[f"phi_{k}"] = float(phi[worst, k])
    return CheckReport(
        name=name,
        samples=int(theta.size),
        tolerance=tol,
        max_abs=max_abs,
        scale=scale,
        max_rel=max_rel,
        passed=bool(max_rel < tol),
        worst_point=point,
    )


def check_reciprocity(
    m: EnergyModel,
    n_samples: int = 10_000,
    tol: float = 1.0e-10,
    seed: int = 0,
    box: Optional[SampleBox] = None,
    fd_step: float = 1.0e-5,
) -> CheckReport:
    """Symmetry of the current Jacobian di/dphi.

    Currents that derive from one energy function must satisfy
    d(i_j)/d(phi_k) = d(i_k)/d(phi_j).  The Jacobian is sampled by
    Richardson-extrapolated central differences of d_flux (exact through
    quartic flux dependence), so the check also catches hand-written
    current maps that drifted away from any energy function.
    """
    box = box or default_box(m)
    rng = np.random.default_rng(seed)
    theta, rho, phi = box.draw(rng, n_samples)
    dim = phi.shape[1]
    h = fd_step * np.maximum(1.0, np.linalg.norm(phi, axis=1))

    def central(step_sizes):
        out = np.empty((n_samples, dim, dim))
        for j in range(dim):
            step = np.zeros_like(phi)
            step[:, j] = step_sizes
            out[:, :, j] = (
                m.d_flux(theta, rho, phi + step) - m.d_flux(theta, rho, phi - step)
            ) / (2.0 * step_sizes[:, None])
        return out

    # the probe steps straddle the box edge by 2h; that is intended here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SaturationRangeWarning)
        jac = (4.0 * central(h) - central(2.0 * h)) / 3.0

    asym = np.abs(jac - np.transpose(jac, (0, 2, 1)))
    per_point = asym.reshape(n_samples, -1).max(axis=1)
    worst = int(np.argmax(per_point))
    max_abs = float(per_point[worst])
    scale = max(float(np.max(np.abs(jac))), 1.0e-30)
    point = {"theta": float(theta[worst]), "rho": float(rho[worst])}
    for k in range(dim):
        point[f"phi_{k}"] = float(phi[worst, k])
    return CheckReport(
        name="reciprocity",
        samples=n_samples,
        tolerance=tol,
        max_abs=max_abs,
        scale=scale,
        max_rel=max_abs / scale,
        passed=bool(max_abs / scale < tol),
        worst_point=point,
    )


def check_period(
    m: EnergyModel,
    period: float = math.pi / 3.0,
    n_samples: int = 10_000,
    tol: float = 1.0e-10,
    seed: int = 0,
    box: Optional[SampleBox] = None,
) -> CheckReport:
    """H(theta + period) == H(theta) at random states."""
    box = box or default_box(m)
    rng = np.random.default_rng(seed)
    theta, rho, phi = box.draw(rng, n_samples)
    h1 = m.evaluate(theta, rho, phi)
    h2 = m.evaluate(theta + period, rho, phi)
    return _h_comparison_report("period", tol, theta, rho, phi, h1, h2)


def check_parity(
    m: EnergyModel,
    n_samples: int = 10_000,
    tol: float = 1.0e-10,
    seed: int = 0,
    box: Optional[SampleBox] = None,
) -> CheckReport:
    """H(theta, rho, phi_d, phi_q) == H(-theta, -rho, phi_d, -phi_q)."""
    if m.flux_dim != 2:
        raise ValueError("parity check applies to two-component flux models")
    box = box or default_box(m)
    rng = np.random.default_rng(seed)
    theta, rho, phi = box.draw(rng, n_samples)
    h1 = m.evaluate(theta, rho, phi)
    phi_flip = phi * np.array([1.0, -1.0])
    h2 = m.evaluate(-theta, -rho, phi_flip)
    return _h_comparison_report("parity", tol, theta, rho, phi, h1, h2)


def check_synrm_evenness(
    m: EnergyModel,
    n_samples: int = 10_000,
    tol: float = 1.0e-10,
    seed: int = 0,
    box: Optional[SampleBox] = None,
) -> CheckReport:
    """H(theta, rho, phi) == H(theta, rho, -phi): no magnet, no odd terms."""
    if m.flux_dim != 2:
        raise ValueError("evenness check applies to two-component flux models")
    box = box or default_box(m)
    rng = np.random.default_rng(seed)
    theta, rho, phi = box.draw(rng, n_samples)
    h1 = m.evaluate(theta, rho, phi)
    h2 = m.evaluate(theta, rho, -phi)
    report = _h_comparison_report("synrm_evenness", tol, theta, rho, phi, h1, h2)
    return report


def check_im_rotation(
    machine,
    n_samples: int = 10_000,
    tol: float = 1.0e-10,
    seed: int = 0,
    box: Optional[SampleBox] = None,
) -> CheckReport:
    """Induction machine energy is invariant under a common rotation of both fluxes.

    Accepts either :class:`ImParams` or any model with a stacked
    stator/rotor flux vector.
    """
    m = im_energy(machine) if isinstance(machine, ImParams) else machine
    if m.flux_dim != 4:
        raise ValueError("rotation check applies to stacked stator/rotor flux models")
    box = box or default_box(m)
    rng = np.random.default_rng(seed)
    theta, rho, phi = box.draw(rng, n_samples)
    eta = rng.uniform(-math.pi, math.pi, n_samples)
    c, s = np.cos(eta), np.sin(eta)
    rot = np.empty_like(phi)
    rot[:, 0] = c * phi[:, 0] - s * phi[:, 1]
    rot[:, 1] = s * phi[:, 0] + c * phi[:, 1]
    rot[:, 2] = c * phi[:, 2] - s * phi[:, 3]
    rot[:, 3] = s * phi[:, 2] + c * phi[:, 3]
    h1 = m.evaluate(theta, rho, phi)
    h2 = m.evaluate(theta, rho, rot)
    report = _h_comparison_report("im_rotation", tol, theta, rho, phi, h1, h2)
    return report
