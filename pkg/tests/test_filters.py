import numpy as np
import pytest

from drem import (Constant, IntegrationDivergedError, Integrator, KreisselmeierFilter,
                  LtiFilterBank, PiecewiseZeroed, Sinusoidal, TimeGrid, run_elre,
                  step_kre, step_lti, zero_state)
from oracles import filtered_sin_exact, kre_response_quad, lti_response_quad

PE_SIG = Sinusoidal(amplitudes=[5.0, 8.0], frequencies=[1.0, 1.0],
                    phases=[0.0, np.pi / 2])
IE_SIG = PiecewiseZeroed(PE_SIG, cutoff_time=5.0)
THETA = np.array([-1.0, 2.0])
BANK = LtiFilterBank(lambdas=np.array([0.2, 0.3, 0.4]))


class TestBankValidation:
    def test_duplicate_poles_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            LtiFilterBank(lambdas=np.array([0.2, 0.2, 0.4]))

    def test_nearly_equal_poles_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            LtiFilterBank(lambdas=np.array([1.0, 1.0 + 1e-12]))

    def test_nonpositive_pole_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            LtiFilterBank(lambdas=np.array([0.2, -0.3]))

    def test_kre_alpha_positive(self):
        with pytest.raises(ValueError, match="positive"):
            KreisselmeierFilter(alpha=0.0)


def test_zero_input_stays_exactly_zero():
    grid = TimeGrid(0.0, 2.0, 1e-2)
    traj = run_elre(Constant([0.0, 0.0]), THETA, BANK, grid)
    assert np.all(traj.Phi == 0.0)
    assert np.all(traj.Y == 0.0)


def test_constant_input_first_order_step_response():
    # single pole, scalar regressor: Phi(t) = c (1 - e^{-lam t})
    lam, c = 0.7, 3.0
    bank = LtiFilterBank(lambdas=np.array([lam]))
    grid = TimeGrid(0.0, 8.0, 1e-3)
    traj = run_elre(Constant([c]), np.array([2.0]), bank, grid)
    expected = c * (1.0 - np.exp(-lam * traj.t))
    assert np.abs(traj.Phi[:, 0, 0] - expected).max() < 1e-9
    # unit DC gain: converges to c itself
    assert abs(traj.Phi[-1, 0, 0] - c) < 2e-2


def test_lti_trajectory_matches_convolution_quadrature():
    grid = TimeGrid(0.0, 10.0, 1e-3)
    traj = run_elre(PE_SIG, THETA, BANK, grid)
    k = -1  # t = 10
    for i, lam in enumerate(BANK.lambdas):
        for j in range(2):
            ref = lti_response_quad(lam, lambda s, j=j: PE_SIG.eval_scalar(s)[j], 10.0)
            assert abs(traj.Phi[k, i, j] - ref) < 1e-6
        y_ref = lti_response_quad(lam, lambda s: PE_SIG.eval_scalar(s) @ THETA, 10.0)
        assert abs(traj.Y[k, i] - y_ref) < 1e-6


def test_lti_quadrature_oracle_agrees_with_closed_form():
    # the quadrature oracle itself is validated against the exact response
    for lam in (0.2, 0.4, 2.0):
        ref = lti_response_quad(lam, lambda s: 5.0 * np.sin(3.0 * s), 7.0)
        exact = filtered_sin_exact(lam, 5.0, 3.0, 0.0, 7.0)
        assert abs(ref - exact) < 1e-11


def test_elre_identity_on_grid(fig1_result):
    # Y(t) = Phi(t) theta with zero initial conditions
    res = fig1_result
    resid = np.abs(res.Y - np.einsum("kij,j->ki", res.Phi, THETA))
    scale = 1.0 + np.abs(res.Y).max()
    assert resid.max() <= 1e-8 * scale


def test_step_halving_fourth_order():
    sig = Sinusoidal(amplitudes=[5.0, 8.0], frequencies=[3.0, 3.0], phases=[0.0, np.pi / 2])
    bank = LtiFilterBank(lambdas=np.array([2.0, 3.0, 4.0]))
    exact = np.array([[filtered_sin_exact(l, 5.0, 3.0, 0.0, 5.0),
                       filtered_sin_exact(l, 8.0, 3.0, np.pi / 2, 5.0)]
                      for l in bank.lambdas])
    errs = []
    for dt in (4e-3, 2e-3):
        traj = run_elre(sig, THETA, bank, TimeGrid(0.0, 5.0, dt))
        errs.append(np.abs(traj.Phi[-1] - exact).max())
    ratio = errs[0] / errs[1]
    assert 10.0 < ratio < 24.0  # ~16 for a fourth-order method


def test_minimal_grid_has_three_samples():
    grid = TimeGrid(0.0, 2e-3, 1e-3)
    traj = run_elre(PE_SIG, THETA, BANK, grid)
    assert traj.t.shape == (3,)
    assert np.all(traj.Phi[0] == 0.0) and np.all(traj.Y[0] == 0.0)


def test_filter_linearity():
    rng = np.random.default_rng(7)
    grid = TimeGrid(0.0, 3.0, 1e-3)
    freqs, phases = [1.0, 2.0], [0.3, 1.1]
    for _ in range(3):
        a, b = rng.uniform(-2, 2, size=2)
        amp1, amp2 = rng.uniform(-3, 3, size=(2, 2))
        s1 = Sinusoidal(amp1, freqs, phases)
        s2 = Sinusoidal(amp2, freqs, phases)
        s3 = Sinusoidal(a * amp1 + b * amp2, freqs, phases)
        th = rng.uniform(-1, 1, size=2)
        t1 = run_elre(s1, th, BANK, grid)
        t2 = run_elre(s2, th, BANK, grid)
        t3 = run_elre(s3, th, BANK, grid)
        assert np.abs(t3.Phi - (a * t1.Phi + b * t2.Phi)).max() <= 1e-9


def test_bibo_bound_unit_dc_gain(fig1_result):
    # each row of Phi is the filtered regressor: its norm never exceeds sup |phi|
    row_norms = np.linalg.norm(fig1_result.Phi, axis=2)
    assert row_norms.max() <= 8.0 + 1e-9  # sup_t |phi(t)| = max(25 sin^2 + 64 cos^2)^(1/2)


class TestKreisselmeier:
    def test_zero_input(self):
        grid = TimeGrid(0.0, 1.0, 1e-2)
        traj = run_elre(Constant([0.0, 0.0]), THETA, KreisselmeierFilter(alpha=1.0), grid)
        assert np.all(traj.Phi == 0.0) and np.all(traj.Y == 0.0)

    def test_constant_input_limit(self):
        c = np.array([1.5, -2.0])
        alpha = 0.8
        grid = TimeGrid(0.0, 30.0, 1e-3)
        traj = run_elre(Constant(c), np.array([1.0, 1.0]), KreisselmeierFilter(alpha), grid)
        np.testing.assert_allclose(traj.Phi[-1], np.outer(c, c) / alpha, atol=1e-6)

    def test_matches_convolution_quadrature(self):
        grid = TimeGrid(0.0, 10.0, 1e-3)
        traj = run_elre(PE_SIG, THETA, KreisselmeierFilter(alpha=1.0), grid)
        for i in range(2):
            for j in range(2):
                ref = kre_response_quad(
                    1.0, lambda s, i=i, j=j: PE_SIG.eval_scalar(s)[i] * PE_SIG.eval_scalar(s)[j],
                    10.0)
                assert abs(traj.Phi[-1, i, j] - ref) < 1e-6

    def test_bibo_bound(self):
        grid = TimeGrid(0.0, 20.0, 2e-3)
        alpha = 1.0
        traj = run_elre(PE_SIG, THETA, KreisselmeierFilter(alpha), grid)
        specs = np.linalg.norm(traj.Phi, ord=2, axis=(1, 2))
        assert specs.max() <= 64.0 / alpha + 1e-9  # sup |phi|^2 = 64


def test_nonzero_initial_conditions_warn():
    grid = TimeGrid(0.0, 0.1, 1e-2)
    state = zero_state(BANK, 2)
    state = type(state)(Phi=np.ones_like(state.Phi), Y=state.Y, t=0.0)
    with pytest.warns(UserWarning, match="asymptotically"):
        run_elre(PE_SIG, THETA, BANK, grid, initial_state=state)


def test_blow_up_detected():
    bank = LtiFilterBank(lambdas=np.array([3000.0]))  # lam*dt = 30: far beyond RK4 stability
    grid = TimeGrid(0.0, 1.0, 1e-2)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(IntegrationDivergedError, match="non-finite"):
            run_elre(Constant([1.0]), np.array([1.0]), bank, grid)


def test_single_steps_match_run_elre():
    integ = Integrator(method="rk4", dt=1e-3)
    grid = TimeGrid(0.0, 2e-3, 1e-3)
    traj = run_elre(PE_SIG, THETA, BANK, grid)
    state = zero_state(BANK, 2)
    for k in (1, 2):
        state = step_lti(BANK, state, PE_SIG, THETA, integ)
        assert np.array_equal(state.Phi, traj.Phi[k])
        assert np.array_equal(state.Y, traj.Y[k])

    kre = KreisselmeierFilter(alpha=1.0)
    traj_k = run_elre(PE_SIG, THETA, kre, grid)
    state = zero_state(kre, 2)
    for k in (1, 2):
        state = step_kre(kre, state, PE_SIG, THETA, integ)
        assert np.array_equal(state.Phi, traj_k.Phi[k])
        assert np.array_equal(state.Y, traj_k.Y[k])


def test_euler_converges_to_rk4():
    grid_fine = TimeGrid(0.0, 1.0, 1e-4)
    t_e = run_elre(PE_SIG, THETA, BANK, grid_fine, method="euler")
    t_r = run_elre(PE_SIG, THETA, BANK, grid_fine, method="rk4")
    assert np.abs(t_e.Phi[-1] - t_r.Phi[-1]).max() < 1e-3


def test_csv_export(tmp_path):
    grid = TimeGrid(0.0, 0.01, 1e-3)
    traj = run_elre(PE_SIG, THETA, BANK, grid)
    path = tmp_path / "traj.csv"
    rows = traj.write_csv(path)
    lines = path.read_text().splitlines()
    assert rows == 11 and len(lines) == 12
    assert lines[0] == ("t,Phi_11,Phi_12,Phi_21,Phi_22,Phi_31,Phi_32,Y_1,Y_2,Y_3")
    last = np.array([float(v) for v in lines[-1].split(",")])
    np.testing.assert_array_equal(last[1:7], traj.Phi[-1].ravel())
    np.testing.assert_array_equal(last[7:], traj.Y[-1])
