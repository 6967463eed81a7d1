import numpy as np
import pytest

from enermach.energy import linear_energy, numeric_gradient, torque
from enermach.saturation import (
    SaturationCoefficients,
    SaturationRangeWarning,
    incremental_inductance,
    saturated_currents,
    saturated_energy,
)
from helpers import IPM_PHI_M, IPM_SCALED, SPM_SCALED, ipm_linear_params, ipm_saturation, spm_saturation


def test_scaled_round_trip_both_machines():
    for build, table in ((ipm_saturation, IPM_SCALED), (spm_saturation, SPM_SCALED)):
        c = build()
        got = c.scaled_values()
        for name, val in table.items():
            assert got[name] == pytest.approx(val, rel=1e-14), name


def test_published_ipm_inductance():
    c = ipm_saturation()
    # phi_M**2 * inv_L_d = 4.20 implies L_d about 9.15 mH at 196 mWb
    assert 1.0 / c.inv_L_d == pytest.approx(0.196**2 / 4.20, rel=1e-12)
    assert 1.0 / c.inv_L_d == pytest.approx(9.147e-3, rel=1e-3)


def test_currents_on_d_axis_excursion():
    c = ipm_saturation()
    delta = 0.04
    i = saturated_currents(c, np.array([c.phi_M + delta, 0.0]))
    i_d_ref = c.inv_L_d * delta + 3.0 * c.alpha_30 * delta**2 + 4.0 * c.alpha_40 * delta**3
    assert i[0] == pytest.approx(i_d_ref, rel=1e-13)
    assert i[1] == 0.0


def test_zero_current_at_magnet_point():
    c = ipm_saturation()
    assert np.array_equal(saturated_currents(c, np.array([c.phi_M, 0.0])), np.zeros(2))


def test_currents_are_gradient_of_energy():
    c = ipm_saturation()
    m = saturated_energy(c)
    rng = np.random.default_rng(21)
    for _ in range(300):
        phi = np.array(
            [
                c.phi_M + rng.uniform(-0.9, 0.9) * c.phi_M,
                rng.uniform(-0.9, 0.9) * c.phi_M,
            ]
        )
        g_fd = numeric_gradient(lambda v: float(m.evaluate(0.0, 0.0, v)), phi)
        g = saturated_currents(c, phi)
        assert np.linalg.norm(g - g_fd) <= 1e-5 * max(np.linalg.norm(g), 1e-9)


def test_incremental_inductance_matches_current_jacobian():
    c = spm_saturation()
    rng = np.random.default_rng(22)
    h = 1e-7
    for _ in range(100):
        phi = np.array(
            [
                c.phi_M + rng.uniform(-0.9, 0.9) * c.phi_M,
                rng.uniform(-0.9, 0.9) * c.phi_M,
            ]
        )
        g = incremental_inductance(c, phi)
        assert g[0, 1] == g[1, 0]
        for j in range(2):
            step = np.zeros(2)
            step[j] = h
            col = (saturated_currents(c, phi + step) - saturated_currents(c, phi - step)) / (
                2.0 * h
            )
            assert np.max(np.abs(col - g[:, j])) < 1e-5 * max(1.0, np.max(np.abs(g)))


def test_reduces_to_linear_without_alphas():
    p = ipm_linear_params()
    c = SaturationCoefficients(
        inv_L_d=1.0 / p.L_d,
        inv_L_q=1.0 / p.L_q,
        phi_M=p.phi_M,
        kinetic_coeff=p.kinetic_coeff,
        n_p=p.n_p,
        R_s=p.R_s,
    )
    lin = linear_energy(p)
    sat = saturated_energy(c)
    rng = np.random.default_rng(23)
    theta = rng.uniform(-3.0, 3.0, 500)
    rho = rng.uniform(-0.1, 0.1, 500)
    phi = np.stack(
        [
            p.phi_M + rng.uniform(-p.phi_M, p.phi_M, 500),
            rng.uniform(-p.phi_M, p.phi_M, 500),
        ],
        axis=-1,
    )
    h1 = lin.evaluate(theta, rho, phi)
    h2 = sat.evaluate(theta, rho, phi)
    assert np.max(np.abs(h1 - h2)) <= 1e-12 * np.max(np.abs(h1))
    t1 = torque(lin, theta, rho, phi)
    t2 = torque(sat, theta, rho, phi)
    assert np.max(np.abs(t1 - t2)) <= 1e-12 * np.max(np.abs(t1))


def test_parity_of_magnetic_energy():
    c = ipm_saturation()
    m = saturated_energy(c)
    rng = np.random.default_rng(24)
    theta = rng.uniform(-3.0, 3.0, 1000)
    rho = rng.uniform(-0.1, 0.1, 1000)
    phi = np.stack(
        [
            c.phi_M + rng.uniform(-c.phi_M, c.phi_M, 1000),
            rng.uniform(-c.phi_M, c.phi_M, 1000),
        ],
        axis=-1,
    )
    h1 = m.evaluate(theta, rho, phi)
    h2 = m.evaluate(-theta, -rho, phi * np.array([1.0, -1.0]))
    assert np.max(np.abs(h1 - h2)) <= 1e-12 * np.max(np.abs(h1))


def test_warns_outside_fitted_range():
    c = ipm_saturation()
    with pytest.warns(SaturationRangeWarning):
        saturated_currents(c, np.array([c.phi_M + 1.5 * c.phi_M, 0.0]))


def test_no_warning_inside_range(recwarn):
    c = ipm_saturation()
    saturated_currents(c, np.array([c.phi_M + 0.5 * c.phi_M, -0.5 * c.phi_M]))
    assert not [w for w in recwarn.list if issubclass(w.category, SaturationRangeWarning)]


def test_from_scaled_requires_magnet():
    with pytest.raises(ValueError, match="phi_M"):
        SaturationCoefficients.from_scaled(0.0, 4.2, 2.8)


def test_scaled_values_of_unscalable_model():
    c = SaturationCoefficients(inv_L_d=25.0, inv_L_q=80.0, phi_M=0.0)
    with pytest.raises(ValueError):
        c.scaled_values()
