"""End-to-end acceptance checks.

One test per shipped guarantee, each printing a single PASS line with the
measured numbers (run with -s to see them; a failure reads out of the
pytest report directly).  Tolerances here are the published contract, do
not tighten or relax them in passing.
"""

import dataclasses
import time
import warnings

import numpy as np
import pytest

from enermach.dynamics import (
    ConstantLoad,
    ConstantVoltage,
    Drive,
    LinearLoad,
    SimConfig,
    SinusoidVoltage,
    power_balance,
    simulate_pmsm,
)
from enermach.energy import (
    LinearPmsmParams,
    MachineState,
    currents,
    linear_energy,
    synrm_energy,
    torque,
)
from enermach.frames import (
    CLARKE,
    PhaseTriple,
    clarke,
    conjugated_permutation,
    conjugated_swap,
    inv_clarke,
    inv_park,
    k_transform,
    rotation2,
)
from enermach.harmonics import HarmonicModel, harmonic_energy, neutral_voltage, ripple_torque
from enermach.identify import fit_saturation, generate_synthetic, report_scaled
from enermach.induction import ImFlux, ImParams, im_currents, im_energy, invert_currents
from enermach.saturation import (
    SCALED_KEYS,
    SaturationCoefficients,
    SaturationRangeWarning,
    saturated_energy,
)
from enermach.validate import (
    check_im_rotation,
    check_parity,
    check_period,
    check_reciprocity,
    check_synrm_evenness,
)

from helpers import (
    IPM_PHI_M,
    IPM_SCALED,
    SPM_PHI_M,
    SPM_SCALED,
    BrokenImRotation,
    BrokenParity,
    BrokenReciprocity,
    InjectedAngleTerm,
    im_params,
    ipm_harmonic_model,
    ipm_linear_params,
    ipm_saturation,
    spm_saturation,
    synrm_params,
)


def shipped_models():
    return [
        ("linear ipm", linear_energy(ipm_linear_params())),
        ("synrm", synrm_energy(synrm_params())),
        ("saturated ipm", saturated_energy(ipm_saturation())),
        ("saturated spm", saturated_energy(spm_saturation())),
        ("harmonic ipm", harmonic_energy(ipm_harmonic_model())),
        ("induction", im_energy(im_params())),
    ]


def test_criterion_01_linear_closed_forms():
    t0 = time.monotonic()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(10):
        L_d = rng.uniform(2e-3, 50e-3)
        L_q = rng.uniform(2e-3, 50e-3)
        phi_M = rng.uniform(0.0, 0.3)
        kappa = rng.uniform(50.0, 5000.0)
        n_p = int(rng.integers(1, 8))
        p = LinearPmsmParams(
            L_d=L_d, L_q=L_q, phi_M=phi_M, kinetic_coeff=kappa, n_p=n_p,
            R_s=rng.uniform(0.1, 5.0),
        )
        m = linear_energy(p)
        n = 1000
        theta = rng.uniform(-np.pi, np.pi, n)
        rho = rng.uniform(-10.0, 10.0, n)
        phi = rng.uniform(-0.6, 0.6, (n, 2))

        i_ref = np.stack([(phi[:, 0] - phi_M) / L_d, phi[:, 1] / L_q], axis=-1)
        t_ref = n_p * (i_ref[:, 1] * phi[:, 0] - i_ref[:, 0] * phi[:, 1])
        w_ref = kappa * rho
        h_ref = kappa * rho**2 / 2.0 + (phi[:, 0] - phi_M) ** 2 / (2.0 * L_d) + phi[:, 1] ** 2 / (2.0 * L_q)

        for got, ref in (
            (currents(m, theta, rho, phi), i_ref),
            (torque(m, theta, rho, phi), t_ref),
            (m.d_rho(theta, rho, phi), w_ref),
            (m.evaluate(theta, rho, phi), h_ref),
        ):
            rel = np.abs(np.asarray(got) - ref) / np.maximum(1.0, np.abs(ref))
            worst = max(worst, float(np.max(rel)))
    elapsed = time.monotonic() - t0
    assert worst < 1e-12
    assert elapsed < 1.0
    print(f"PASS criterion 1 (linear closed forms): worst rel {worst:.2e} on 10000 states, {elapsed:.2f}s")


def test_criterion_02_gradient_oracle():
    t0 = time.monotonic()
    rng = np.random.default_rng(202)
    h = 1e-5
    worst = {}
    for name, m in shipped_models():
        n = 1000
        theta = rng.uniform(-np.pi, np.pi, n)
        rho = rng.uniform(-1e-3, 1e-3, n) if m.flux_dim == 2 else rng.uniform(-0.3, 0.3, n)
        phi = rng.uniform(-0.3, 0.3, (n, m.flux_dim))

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SaturationRangeWarning)
            g_phi = np.asarray(m.d_flux(theta, rho, phi))
            g_theta = np.asarray(m.d_theta(theta, rho, phi))
            g_rho = np.asarray(m.d_rho(theta, rho, phi))

            fd_phi = np.empty_like(g_phi)
            for j in range(m.flux_dim):
                step = np.zeros_like(phi)
                step[:, j] = h
                fd_phi[:, j] = (
                    np.asarray(m.evaluate(theta, rho, phi + step))
                    - np.asarray(m.evaluate(theta, rho, phi - step))
                ) / (2.0 * h)
            fd_theta = (
                np.asarray(m.evaluate(theta + h, rho, phi))
                - np.asarray(m.evaluate(theta - h, rho, phi))
            ) / (2.0 * h)
            fd_rho = (
                np.asarray(m.evaluate(theta, rho + h, phi))
                - np.asarray(m.evaluate(theta, rho - h, phi))
            ) / (2.0 * h)

        rel = 0.0
        for got, ref in ((fd_phi, g_phi), (fd_theta, g_theta), (fd_rho, g_rho)):
            rel = max(rel, float(np.max(np.abs(got - ref) / np.maximum(1.0, np.abs(ref)))))
        worst[name] = rel
        assert rel < 1e-5, f"{name}: gradient mismatch {rel:.2e}"
    elapsed = time.monotonic() - t0
    assert elapsed < 5.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    print(f"PASS criterion 2 (gradient oracle): {detail}, {elapsed:.2f}s")


def test_criterion_03_reciprocity():
    worst = 0.0
    for name, m in shipped_models():
        report = check_reciprocity(m, n_samples=10_000, tol=1e-10, seed=3)
        assert report.passed, f"{name}: {report.summary()}"
        worst = max(worst, report.max_rel)

    eps = 1e-3
    broken = BrokenReciprocity(saturated_energy(ipm_saturation()), eps=eps)
    report = check_reciprocity(broken, n_samples=10_000, tol=1e-10, seed=3)
    assert not report.passed
    assert abs(report.max_abs - eps) / eps < 0.10
    print(
        f"PASS criterion 3 (reciprocity): clean worst rel {worst:.2e}, "
        f"injected {eps:.0e} read back as {report.max_abs:.3e}"
    )


def test_criterion_04_symmetry_suite():
    harmonic = harmonic_energy(ipm_harmonic_model())
    synrm = synrm_energy(synrm_params())
    im = im_energy(im_params())

    clean = [
        ("period", check_period(harmonic, n_samples=2000, tol=1e-10, seed=4)),
        ("parity", check_parity(harmonic, n_samples=2000, tol=1e-10, seed=4)),
        ("synrm evenness", check_synrm_evenness(synrm, n_samples=2000, tol=1e-10, seed=4)),
        ("im rotation", check_im_rotation(im, n_samples=2000, tol=1e-10, seed=4)),
    ]
    for name, report in clean:
        assert report.passed, f"{name}: {report.summary()}"

    injected = [
        ("angle term", check_period(InjectedAngleTerm(harmonic, amp=1e-3, mult=3.0), n_samples=2000, tol=1e-10, seed=4)),
        ("parity break", check_parity(BrokenParity(harmonic, c=1e-3), n_samples=2000, tol=1e-10, seed=4)),
        ("magnet in synrm", check_synrm_evenness(linear_energy(ipm_linear_params()), n_samples=2000, tol=1e-10, seed=4)),
        ("frame pinning", check_im_rotation(BrokenImRotation(im, eps=1e-3), n_samples=2000, tol=1e-10, seed=4)),
    ]
    for name, report in injected:
        assert not report.passed, f"{name} went undetected: {report.summary()}"
    print("PASS criterion 4 (symmetry suite): 4 clean checks pass, 4 injected violations caught")


def test_criterion_05_frame_identities():
    assert np.max(np.abs(CLARKE @ CLARKE.T - np.eye(3))) < 1e-14
    assert np.max(np.abs(CLARKE.T @ CLARKE - np.eye(3))) < 1e-14

    rng = np.random.default_rng(505)
    n = 10_000
    abc = rng.uniform(-10.0, 10.0, (n, 3))
    thetas = rng.uniform(-10.0, 10.0, n)
    worst_rt = 0.0
    for k in range(n):
        x = PhaseTriple(*abc[k])
        z = k_transform(x, thetas[k])
        back = inv_clarke(inv_park(z, thetas[k]))
        worst_rt = max(
            worst_rt,
            abs(back.a - x.a), abs(back.b - x.b), abs(back.c - x.c),
        )
    assert worst_rt < 1e-12 * 10.0

    g = conjugated_permutation()
    assert np.max(np.abs(g[0:2, 2])) < 1e-14
    assert np.max(np.abs(g[2, 0:2])) < 1e-14
    assert abs(g[2, 2] - 1.0) < 1e-14
    assert np.max(np.abs(g[0:2, 0:2] - rotation2(-2.0 * np.pi / 3.0))) < 1e-14

    s = conjugated_swap()
    assert np.max(np.abs(s[0:2, 2])) < 1e-14
    assert np.max(np.abs(s[2, 0:2])) < 1e-14
    assert abs(s[2, 2] - 1.0) < 1e-14
    assert np.max(np.abs(s[0:2, 0:2] - np.diag([1.0, -1.0]))) < 1e-14

    # balanced triples never leak into the zero axis
    ab = rng.uniform(-10.0, 10.0, (n, 2))
    worst_zero = 0.0
    for a, b in ab:
        y = clarke(PhaseTriple(a, b, -a - b))
        worst_zero = max(worst_zero, abs(y.zero))
    assert worst_zero < 1e-12 * 20.0
    print(
        f"PASS criterion 5 (frame identities): round trip {worst_rt:.2e}, "
        f"zero-axis leak {worst_zero:.2e}"
    )


def test_criterion_06_energy_bookkeeping():
    # conservative: no resistance, no drive, no load; H must sit still
    hm = ipm_harmonic_model()
    lossless = harmonic_energy(
        HarmonicModel(base=dataclasses.replace(hm.base, R_s=0.0), terms=hm.terms, zero_axis=hm.zero_axis)
    )
    kappa = float(lossless.params.kinetic_coeff)
    state0 = MachineState(0.3, 50.0 / kappa, [0.23, 0.05])
    idle = Drive(ConstantVoltage(0.0, 0.0), ConstantLoad(0.0))

    t0 = time.monotonic()
    traj = simulate_pmsm(lossless, state0, idle, SimConfig(dt=1e-5, t_end=0.1, record_stride=10))
    run1 = time.monotonic() - t0
    assert run1 < 10.0
    H = np.asarray(lossless.evaluate(traj.column("theta"), traj.column("rho"), traj.flux()))
    drift = float(np.max(np.abs(H - H[0])) / abs(H[0]))
    assert drift < 1e-9

    # dissipative: residual small and falling as dt**4
    p = ipm_linear_params()
    m = linear_energy(p)
    drive = Drive(SinusoidVoltage(amp_d=15.0, amp_q=60.0, freq_hz=20.0), LinearLoad(0.0, 2e-3))
    s0 = MachineState(0.0, 0.0, [p.phi_M, 0.0])

    residuals = {}
    for dt in (4e-4, 2e-4, 1e-4, 1e-5):
        t0 = time.monotonic()
        traj = simulate_pmsm(m, s0, drive, SimConfig(dt=dt, t_end=0.1, record_stride=1))
        assert time.monotonic() - t0 < 10.0
        residuals[dt] = power_balance(m, traj)
    assert residuals[1e-5] < 1e-4
    r1 = residuals[4e-4] / residuals[2e-4]
    r2 = residuals[2e-4] / residuals[1e-4]
    assert 12.0 < r1 < 20.0
    assert 12.0 < r2 < 20.0
    print(
        f"PASS criterion 6 (energy bookkeeping): drift {drift:.2e}, residual {residuals[1e-5]:.2e}, "
        f"halving ratios {r1:.1f}/{r2:.1f}"
    )


def test_criterion_07_published_table_round_trip():
    t0 = time.monotonic()
    columns = [
        ("ipm", IPM_PHI_M, 3, 1.52, IPM_SCALED),
        ("spm", SPM_PHI_M, 5, 2.1, SPM_SCALED),
    ]
    noiseless_worst = 0.0
    for name, phi_M, n_p, R_s, scaled in columns:
        c = SaturationCoefficients.from_scaled(phi_M=phi_M, n_p=n_p, R_s=R_s, **scaled)
        d = np.linspace(-0.12, 0.12, 6) + phi_M
        q = np.linspace(-0.12, 0.12, 5)
        rep = report_scaled(fit_saturation(generate_synthetic(c, d, q), phi_M=phi_M))
        worst = max(abs(rep[k][0] - scaled[k]) / abs(scaled[k]) for k in SCALED_KEYS)
        noiseless_worst = max(noiseless_worst, worst)
        assert worst < 1e-6, f"{name}: noiseless round trip off by {worst:.2e}"

    # 1% relative noise, 100 seeded trials on the ipm column
    c = SaturationCoefficients.from_scaled(phi_M=IPM_PHI_M, n_p=3, R_s=1.52, **IPM_SCALED)
    d = np.linspace(-0.15, 0.15, 6) + IPM_PHI_M
    q = np.linspace(-0.15, 0.15, 5)
    truth = np.array([IPM_SCALED[k] for k in SCALED_KEYS])
    estimates, covered = [], []
    for seed in range(100):
        fit = fit_saturation(generate_synthetic(c, d, q, noise=0.01, seed=seed), phi_M=IPM_PHI_M)
        rep = report_scaled(fit)
        vals = np.array([rep[k][0] for k in SCALED_KEYS])
        errs = np.array([rep[k][1] for k in SCALED_KEYS])
        estimates.append(vals)
        covered.append(np.abs(vals - truth) <= 2.0 * errs)
    mean_rel = np.abs(np.mean(estimates, axis=0) - truth) / np.abs(truth)
    coverage = np.mean(np.sum(covered, axis=1))
    elapsed = time.monotonic() - t0
    assert np.max(mean_rel) < 0.05
    assert coverage >= 6.0
    assert elapsed < 30.0
    print(
        f"PASS criterion 7 (published table round trip): noiseless {noiseless_worst:.1e}, "
        f"noisy mean rel {np.max(mean_rel):.2%}, 2-sigma coverage {coverage:.2f}/7 params, {elapsed:.1f}s"
    )


def test_criterion_08_ripple_structure():
    m = harmonic_energy(ipm_harmonic_model())
    n = 360
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    phi = np.array([0.23, 0.05])
    T = np.asarray(ripple_torque(m, theta, 0.0, phi))

    period_err = float(np.max(np.abs(np.roll(T, -n // 6) - T)))
    scale = float(np.max(np.abs(T)))
    assert period_err < 1e-12 * scale

    F = np.abs(np.fft.rfft(T))
    off = np.array([k for k in range(F.size) if k % 6 != 0])
    assert np.max(F[off]) < 1e-10 * np.max(F)

    # star-point voltage shares the period of the zero-axis flux map
    kappa = float(m.params.kinetic_coeff)
    omega = 80.0
    t = theta / omega
    vn = np.asarray(neutral_voltage(m, t, theta, np.full(n, omega / kappa)))
    vn_err = float(np.max(np.abs(np.roll(vn, -n // 3) - vn)))
    assert vn_err < 1e-12 * np.max(np.abs(vn))
    print(
        f"PASS criterion 8 (ripple structure): period leak {period_err:.2e}, "
        f"off-harmonic floor {np.max(F[off]) / np.max(F):.2e}, neutral period leak {vn_err:.2e}"
    )


def test_criterion_09_induction_inversion():
    rng = np.random.default_rng(909)
    worst = 0.0
    for _ in range(10):
        L_s = rng.uniform(0.02, 0.5)
        L_r = rng.uniform(0.02, 0.5)
        L_m = rng.uniform(0.2, 0.95) * np.sqrt(L_s * L_r)
        p = ImParams(
            L_s=L_s, L_r=L_r, L_m=L_m,
            R_s=rng.uniform(0.1, 5.0), R_r=rng.uniform(0.1, 5.0),
            kinetic_coeff=rng.uniform(10.0, 1000.0), n_p=int(rng.integers(1, 5)),
        )
        f = ImFlux(rng.uniform(-1.0, 1.0, (10_000, 2)), rng.uniform(-1.0, 1.0, (10_000, 2)))
        i_s, i_r = im_currents(p, f)
        back = invert_currents(p, i_s, i_r)
        scale = max(float(np.max(np.abs(f.as_vector()))), 1.0)
        worst = max(
            worst,
            float(np.max(np.abs(back.phi_s - f.phi_s))) / scale,
            float(np.max(np.abs(back.phi_r - f.phi_r))) / scale,
        )
    assert worst < 1e-12

    with pytest.raises(ValueError):
        ImParams(L_s=0.1, L_r=0.1, L_m=0.1, R_s=1.0, R_r=1.0, kinetic_coeff=100.0, n_p=2)
    print(f"PASS criterion 9 (induction inversion): worst rel {worst:.2e} on 10 x 10000 pairs")


def test_criterion_10_integrator_convergence():
    t0 = time.monotonic()
    p = ipm_linear_params()
    m = linear_energy(p)
    drive = Drive(SinusoidVoltage(amp_d=15.0, amp_q=60.0, freq_hz=50.0), LinearLoad(0.05, 2e-3))
    s0 = MachineState(0.0, 0.0, [p.phi_M, 0.0])

    def final_state(dt):
        traj = simulate_pmsm(m, s0, drive, SimConfig(dt=dt, t_end=0.05, record_stride=10**9))
        return np.array(
            [traj.column("theta")[-1], traj.column("rho")[-1],
             traj.column("phi_d")[-1], traj.column("phi_q")[-1]]
        )

    dt1, dt2 = 2.0e-4, 1.0e-4
    ref = final_state(dt2 / 64.0)
    e1 = float(np.linalg.norm(final_state(dt1) - ref))
    e2 = float(np.linalg.norm(final_state(dt2) - ref))
    order = float(np.log2(e1 / e2))
    elapsed = time.monotonic() - t0
    assert order >= 3.8
    assert elapsed < 30.0
    print(f"PASS criterion 10 (integrator convergence): order {order:.2f}, {elapsed:.1f}s")
