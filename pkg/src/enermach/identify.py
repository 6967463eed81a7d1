"""Least-squares identification of the saturation model from flux/current data.

With phi_M held fixed the quartic model is linear in its seven magnetic
parameters, so a weighted linear least-squares solve recovers them from
measured (phi, i) pairs; both current components of a sample enter as rows
of one stacked system.  phi_M itself can optionally be refined by a scalar
Gauss-Newton iteration wrapped around the linear solve (the inner solve is
repeated at each trial phi_M, i.e. variable projection).

Standard errors come from the usual linear-model estimate: residual
variance times the diagonal of the inverse normal matrix.  They are
conditional on phi_M.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .saturation import SaturationCoefficients, saturated_currents

__all__ = [
    "PARAM_NAMES",
    "FluxSample",
    "FitResult",
    "RankDeficiencyError",
    "fit_saturation",
    "generate_synthetic",
    "report_scaled",
    "read_samples_csv",
    "write_samples_csv",
]

PARAM_NAMES = (
    "inv_L_d",
    "inv_L_q",
    "alpha_30",
    "alpha_12",
    "alpha_40",
    "alpha_22",
    "alpha_04",
)

_SCALE_POWERS = (2, 2, 3, 3, 4, 4, 4)

_GN_MAX_ITER = 50
_GN_REL_TOL = 1.0e-10


@dataclass(frozen=True)
class FluxSample:
    """One operating point: flux linkage pair, measured currents, weight."""

    phi_d: float
    phi_q: float
    i_d: float
    i_q: float
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0.0:
            raise ValueError("sample weight must be positive")


class RankDeficiencyError(ValueError):
    """The sample layout leaves parameter directions unobservable."""

    def __init__(self, rank: int, directions: List[str]):
        self.rank = rank
        self.directions = directions
        listing = "; ".join(directions) if directions else "unknown"
        super().__init__(
            f"design matrix rank {rank} < {len(PARAM_NAMES)}; "
            f"unobservable directions: {listing}"
        )


@dataclass
class FitResult:
    """Outcome of :func:`fit_saturation`.

    ``std_errors`` is None when there are no degrees of freedom left.
    ``condition_number`` refers to the normal-equation system.  When phi_M
    refinement was requested, ``converged`` and ``iterations`` describe the
    Gauss-Newton loop; without refinement they are trivially True / 0.
    """

    coefficients: SaturationCoefficients
    residual_rms: float
    std_errors: Optional[Dict[str, float]]
    condition_number: float
    converged: bool = True
    iterations: int = 0


def _design(phi_d, phi_q, phi_M: float):
    """Design matrix with each sample contributing an i_d row and an i_q row."""
    x = phi_d - phi_M
    y = phi_q
    zeros = np.zeros_like(x)
    rows_d = np.stack(
        [x, zeros, 3.0 * x**2, y**2, 4.0 * x**3, 2.0 * x * y**2, zeros], axis=-1
    )
    rows_q = np.stack(
        [zeros, y, zeros, 2.0 * x * y, zeros, 2.0 * x**2 * y, 4.0 * y**3], axis=-1
    )
    # samples interleave as (i_d row, i_q row) pairs
    a = np.empty((2 * x.size, len(PARAM_NAMES)))
    a[0::2] = rows_d
    a[1::2] = rows_q
    return a


def _solve(a_w: np.ndarray, b_w: np.ndarray):
    """Weighted LS solve via SVD; returns beta, residual vector, singular values, Vh."""
    u, s, vh = np.linalg.svd(a_w, full_matrices=False)
    eps = np.finfo(float).eps
    cutoff = s[0] * max(a_w.shape) * eps if s.size and s[0] > 0.0 else 0.0
    rank = int(np.sum(s > cutoff))
    if rank < len(PARAM_NAMES):
        directions = []
        for v in vh[rank:]:
            parts = [
                f"{v[k]:+.2f}*{PARAM_NAMES[k]}" for k in range(v.size) if abs(v[k]) > 0.25
            ]
            directions.append(" ".join(parts) if parts else "mixed direction")
        raise RankDeficiencyError(rank, directions)
    beta = vh.T @ ((u.T @ b_w) / s)
    return beta, a_w @ beta - b_w, s, vh


def _assemble(samples: Sequence[FluxSample]):
    phi_d = np.array([s.phi_d for s in samples])
    phi_q = np.array([s.phi_q for s in samples])
    b = np.empty(2 * len(samples))
    b[0::2] = [s.i_d for s in samples]
    b[1::2] = [s.i_q for s in samples]
    w = np.empty(2 * len(samples))
    w[0::2] = [s.weight for s in samples]
    w[1::2] = w[0::2]
    return phi_d, phi_q, b, np.sqrt(w)


def fit_saturation(
    samples: Sequence[FluxSample],
    phi_M: float,
    refine_phi_M: bool = False,
    kinetic_coeff: float = 1.0,
    n_p: int = 1,
    R_s: float = 0.0,
) -> FitResult:
    """Fit the seven saturation parameters, optionally refining phi_M.

    Needs at least 7 samples spanning both flux axes; a layout that cannot
    see all parameter directions raises :class:`RankDeficiencyError` naming
    the blind combinations.  The mechanical extras (kinetic_coeff, n_p, R_s)
    are passed through into the returned coefficients untouched.
    """
    if len(samples) < len(PARAM_NAMES):
        raise ValueError(f"need at least {len(PARAM_NAMES)} samples, got {len(samples)}")
    phi_d, phi_q, b, sqrt_w = _assemble(samples)

    def solve_at(m: float):
        a_w = _design(phi_d, phi_q, m) * sqrt_w[:, None]
        return _solve(a_w, b * sqrt_w)

    m = float(phi_M)
    converged = True
    iterations = 0
    if refine_phi_M:
        converged = False
        for iterations in range(1, _GN_MAX_ITER + 1):
            _, r, _, _ = solve_at(m)
            h = 1.0e-6 * max(1.0, abs(m))
            _, r_plus, _, _ = solve_at(m + h)
            _, r_minus, _, _ = solve_at(m - h)
            jac = (r_plus - r_minus) / (2.0 * h)
            denom = float(jac @ jac)
            if denom == 0.0:
                converged = True
                break
            delta = -float(jac @ r) / denom
            m += delta
            if abs(delta) <= _GN_REL_TOL * max(1.0, abs(m)):
                converged = True
                break

    beta, resid, s, vh = solve_at(m)
    n_rows = b.size
    n_par = len(PARAM_NAMES) + (1 if refine_phi_M else 0)
    dof = n_rows - n_par
    std_errors = None
    if dof > 0:
        sigma2 = float(resid @ resid) / dof
        cov_diag = np.einsum("ij,j,ij->i", vh.T, 1.0 / s**2, vh.T) * sigma2
        std_errors = dict(zip(PARAM_NAMES, np.sqrt(cov_diag)))

    try:
        coefficients = SaturationCoefficients(
            inv_L_d=float(beta[0]),
            inv_L_q=float(beta[1]),
            phi_M=m,
            alpha_30=float(beta[2]),
            alpha_12=float(beta[3]),
            alpha_40=float(beta[4]),
            alpha_22=float(beta[5]),
            alpha_04=float(beta[6]),
            kinetic_coeff=kinetic_coeff,
            n_p=n_p,
            R_s=R_s,
        )
    except ValueError as e:
        raise ValueError(f"fit produced invalid coefficients: {e}") from e

    return FitResult(
        coefficients=coefficients,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        std_errors=std_errors,
        condition_number=float((s[0] / s[-1]) ** 2),
        converged=converged,
        iterations=iterations,
    )


def generate_synthetic(
    c: SaturationCoefficients,
    phi_d_values,
    phi_q_values,
    noise: float = 0.0,
    seed: int = 0,
) -> List[FluxSample]:
    """Model currents on a cartesian flux grid, optionally with relative noise.

    ``noise`` is the standard deviation of multiplicative Gaussian noise per
    current component: i -> i * (1 + noise * g), g ~ N(0, 1), seeded.
    """
    if noise < 0.0:
        raise ValueError("noise must be non-negative")
    phi_d_values = np.asarray(phi_d_values, dtype=float)
    phi_q_values = np.asarray(phi_q_values, dtype=float)
    dd, qq = np.meshgrid(phi_d_values, phi_q_values, indexing="ij")
    phi = np.stack([dd.ravel(), qq.ravel()], axis=-1)
    i = saturated_currents(c, phi)
    if noise > 0.0:
        rng = np.random.default_rng(seed)
        i = i * (1.0 + noise * rng.standard_normal(i.shape))
    return [
        FluxSample(float(p[0]), float(p[1]), float(ii[0]), float(ii[1]))
        for p, ii in zip(phi, i)
    ]


def report_scaled(r: FitResult) -> Dict[str, Tuple[float, Optional[float]]]:
    """Scaled coefficient table {name: (value, std_error)} in publication form.

    Values are the fitted parameters premultiplied by powers of phi_M; the
    std errors are scaled by the same powers (phi_M treated as exact).
    """
    scaled = r.coefficients.scaled_values()
    m = r.coefficients.phi_M
    out: Dict[str, Tuple[float, Optional[float]]] = {}
    for name, power, raw_name in zip(scaled.keys(), _SCALE_POWERS, PARAM_NAMES):
        err = None
        if r.std_errors is not None:
            err = r.std_errors[raw_name] * m**power
        out[name] = (scaled[name], err)
    return out


# ---------------------------------------------------------------------------
# sample CSV I/O: header phi_d,phi_q,i_d,i_q with optional trailing weight


_CSV_BASE = ("phi_d", "phi_q", "i_d", "i_q")


def read_samples_csv(path) -> List[FluxSample]:
    """Read samples; malformed content is reported with its line number."""
    samples: List[FluxSample] = []
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty sample file")
        header = tuple(h.strip() for h in header)
        if header not in (_CSV_BASE, _CSV_BASE + ("weight",)):
            raise ValueError(
                f"{path}: line 1: header must be {','.join(_CSV_BASE)}[,weight], "
                f"got {','.join(header)}"
            )
        has_weight = len(header) == 5
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: line {line_no}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise ValueError(f"{path}: line {line_no}: non-numeric field") from None
            if has_weight:
                samples.append(FluxSample(*values))
            else:
                samples.append(FluxSample(*values, weight=1.0))
    return samples


def write_samples_csv(path, samples: Sequence[FluxSample], with_weight: bool = False) -> None:
    with open(path, "w", newline="") as f:
        cols = _CSV_BASE + (("weight",) if with_weight else ())
        f.write(",".join(cols) + "\n")
        for s in samples:
            vals = [s.phi_d, s.phi_q, s.i_d, s.i_q] + ([s.weight] if with_weight else [])
            f.write(",".join(f"{v:.17g}" for v in vals) + "\n")
