"""Linearized-block applications, quadratic forms, exact identities, and the
angular-harmonic matrices with their spectra."""

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from kssim import ConfigurationError, Field, ModelParams, PlanarGrid, make_radial_grid
from kssim import linops
from kssim.fieldops import SampleBank
from kssim.numgrid import project_mean_zero, weighted_norms


def moment_free_mode(grid: PlanarGrid, m: int):
    """u(r) e^{i m theta}-type test field whose m-th multipole moment
    vanishes, so the free-space exterior field is zero and periodic-image
    contamination cannot enter planar/radial comparisons."""
    R = np.sqrt(grid.R2)
    u = (1.0 - R**2 / (2.0 * (m + 1))) * R**m * np.exp(-R**2 / 2.0)
    if m == 0:
        return u
    TH = np.arctan2(grid.Y, grid.X)
    return u * np.cos(m * TH)


def moment_free_radial(r: np.ndarray, m: int) -> np.ndarray:
    return (1.0 - r**2 / (2.0 * (m + 1))) * r**m * np.exp(-r**2 / 2.0)


class TestApplyBlocks:
    def test_L11_divergence_form_mean_free(self, sys_main):
        grid = sys_main.grid
        for g in SampleBank(seed=55, count=10, mean_zero=True).fields(grid):
            out = linops.apply_L11(g, sys_main)
            assert abs(grid.integrate(out)) <= 1e-9 * grid.l2(g)

    def test_L12_constant_is_zero(self, sys_main):
        out = linops.apply_L12(np.ones((128, 128)), sys_main)
        assert np.max(np.abs(out)) <= 1e-12

    def test_L22_eps_scaling_exact(self, sys_main):
        # halving eps doubles the part of L22 beyond drift + convolution
        grid = sys_main.grid
        w = np.exp(-grid.R2 / 2)
        wx, wy = grid.grad(w)
        from kssim.fieldops import grad_kappa_contract_arrays
        fx, fy = grid.dealias(sys_main.Q * wx), grid.dealias(sys_main.Q * wy)
        rest = (sys_main.params.mu * (grid.X * wx + grid.Y * wy)
                + grad_kappa_contract_arrays(grid, fx, fy))
        stiff = {}
        for eps in (0.04, 0.02):
            sys_eps = linops.LinearizedSystem(
                params=sys_main.params.replace(eps=eps), grid=grid,
                prof=sys_main.prof, Q=sys_main.Q, P=sys_main.P,
                gradPx=sys_main.gradPx, gradPy=sys_main.gradPy)
            stiff[eps] = linops.apply_L22(w, sys_eps) - rest
        assert np.max(np.abs(stiff[0.02] - 2.0 * stiff[0.04])) <= 1e-12 * np.max(
            np.abs(stiff[0.02]))

    def test_zero_inputs(self, sys_main):
        z = np.zeros((128, 128))
        for f in (linops.apply_L11, linops.apply_L12, linops.apply_L21,
                  linops.apply_L22):
            assert np.max(np.abs(f(z, sys_main))) == 0.0


class TestQuadForms:
    def test_L11_dissipativity_annulus(self, params_main):
        # sample supported in |x| >= 1.2 rho0: the local term is negligible
        # and the pure-decay bound must hold outright
        grid = PlanarGrid(L=20.0, N=256)
        sys = linops.build_system(params_main, grid)
        rho0 = 10.0
        R = np.sqrt(grid.R2)
        TH = np.arctan2(grid.Y, grid.X)
        g = np.exp(-((R - 13.0) / 0.8) ** 2) * np.cos(TH)  # mean-zero ring dipole
        assert abs(grid.integrate(g)) <= 1e-12
        q = linops.quad_form_L11(g, sys, rho0)
        assert q["local_l2sq"] <= 1e-12 * abs(q["decay_term"])
        assert q["value"] <= -q["decay_term"] + 1e-9 * abs(q["decay_term"])

    def test_L11_zero(self, sys_main):
        q = linops.quad_form_L11(np.zeros((128, 128)), sys_main, 10.0)
        assert q["value"] == 0.0 and q["required_C0"] == 0.0

    def test_bsplit_requires_configuration(self, sys_main, rng):
        g = project_mean_zero(sys_main.grid,
                              rng.standard_normal((128, 128))
                              * np.exp(-sys_main.grid.R2 / 4))
        with pytest.raises(ConfigurationError):
            linops.quad_form_Bsplit(g, sys_main)

    def test_bsplit_fails_without_mass_term(self, sys_main):
        # with M ~ 0 the translation dipole (concentrated in B_rho0, slow
        # direction of the block) violates the pure-decay bound,
        # demonstrating the necessity of the bounded splitting term
        grid = sys_main.grid
        R = np.sqrt(grid.R2)
        TH = np.arctan2(grid.Y, grid.X)
        g = sys_main.prof.spline("dQ")(R) * np.cos(TH)
        sys = sys_main.with_splitting(M=1e-12, rho=10.0)
        q = linops.quad_form_Bsplit(g, sys)
        assert q["lhs"] > q["rhs"]

    def test_L22_H1_identity(self, sys_main):
        grid = sys_main.grid
        w = np.exp(-grid.R2 / 2)
        lhs, rhs = linops.quad_form_L22_H1(w, sys_main)
        assert abs(lhs - rhs) <= 1e-6 * abs(rhs)

    def test_L22_H1_zero(self, sys_main):
        lhs, rhs = linops.quad_form_L22_H1(np.zeros((128, 128)), sys_main)
        assert lhs == 0.0 and rhs == 0.0

    def test_L22_Hs_full_inequality(self, params_main):
        # <L22 w, w>_{Hdot^s} <= -(1/2 eps)||w||^2_{Hdot^{s+1}} - theta ||w||^2_{Hdot^s}
        # with theta = 0.5 mu (1-s) at small eps
        grid = PlanarGrid(L=24.0, N=128)
        sys = linops.build_system(params_main.replace(eps=0.01), grid)
        s = params_main.s
        theta = 0.5 * params_main.mu * (1 - s)
        bank = SampleBank(seed=77, count=50, mean_zero=True)
        for w in bank.fields(grid):
            q = linops.quad_form_L22_Hs(w, sys, s)
            bound = (-q["h1s_sq"] / (2 * sys.params.eps) - theta * q["hs_sq"])
            assert q["value"] <= bound + 1e-9 * q["hs_sq"]

    def test_L22_Hs_zero(self, sys_main):
        q = linops.quad_form_L22_Hs(np.zeros((128, 128)), sys_main, 0.5)
        assert q["value"] == 0.0 and q["linear_lhs"] == 0.0


class TestCrossBlocks:
    def test_constant_w_gives_zero_ratio(self, sys_main):
        out = linops.apply_L12(np.ones((128, 128)), sys_main)
        assert np.max(np.abs(out)) <= 1e-12

    def test_dilation_sweep_bounded(self, params_main, sys_main):
        # lam = 2 narrows the sample to width 1/4, so this runs on a fine box
        # where all three dilations are resolved
        grid = PlanarGrid(L=8.0, N=256)
        sys = linops.build_system(params_main, grid, prof=sys_main.prof)
        s, k = 0.5, 4.0
        th = (1 - s) / (2 - s)
        ratios = []
        for lam in (0.5, 1.0, 2.0):
            w = np.exp(-lam**2 * grid.R2)
            f = Field(grid, w)
            from kssim.numgrid import homogeneous_norm
            hs, h2 = homogeneous_norm(f, s), homogeneous_norm(f, 2.0)
            _, _, hm1k = weighted_norms(Field(grid, linops.apply_L12(w, sys)), k)
            ratios.append(hm1k / (hs ** (1 - th) * h2**th))
        assert np.isfinite(max(ratios)) and max(ratios) / min(ratios) < 3.0


class TestModeOperator:
    def test_column_sums_vanish_m0(self, sys_main):
        opm = linops.assemble_mode_operator(
            0, sys_main, make_radial_grid(sys_main.prof.grid.r_max, 1000))
        scale = np.max(np.abs(opm.matrix)) * opm.h
        assert np.max(np.abs(opm.column_sums())) <= 1e-8 * max(scale, 1.0)

    def test_negative_mode_rejected(self, sys_main):
        with pytest.raises(ConfigurationError):
            linops.assemble_mode_operator(
                -1, sys_main, make_radial_grid(24.0, 100))

    def test_matrix_free_consistency(self, sys_main, rng):
        rgrid = make_radial_grid(sys_main.prof.grid.r_max, 800)
        for m in (0, 1, 3):
            opm = linops.assemble_mode_operator(m, sys_main, rgrid)
            u = rng.standard_normal(800) * np.exp(-opm.r**2 / 8)
            _, out = linops.apply_mode_operator(u, m, sys_main,
                                                rgrid.r_max, 800)
            ref = opm.matrix @ u
            assert np.max(np.abs(ref - out)) <= 1e-12 * np.max(np.abs(ref))

    def test_poisson_solver_analytic_oracle(self):
        # phi = r^m e^{-r^2}: u = -(phi'' + phi'/r - m^2 phi / r^2)
        r_max, n = 20.0, 20000
        h = r_max / n
        rc = (np.arange(n) + 0.5) * h
        for m in (1, 2, 3):
            phi = rc**m * np.exp(-rc**2)
            dphi = (m * rc ** (m - 1) - 2 * rc ** (m + 1)) * np.exp(-rc**2)
            ddphi = (m * (m - 1) * rc ** (m - 2)
                     - 2 * (2 * m + 1) * rc**m + 4 * rc ** (m + 2)) * np.exp(-rc**2)
            u = -(ddphi + dphi / rc - m**2 * phi / rc**2)
            _, sol = linops.solve_mode_poisson(u, m, r_max, n)
            assert np.max(np.abs(sol - phi)) <= 1e-6 * np.max(np.abs(phi))

    def test_mass_eigenvalue_and_deflation(self, sys_main):
        opm = linops.assemble_mode_operator(
            0, sys_main, make_radial_grid(sys_main.prof.grid.r_max, 1000))
        raw = linops.spectrum(opm, deflate=False)
        assert min(abs(z) for z in raw.eigenvalues) <= 1e-6
        defl = linops.spectrum(opm, deflate=True)
        assert defl.eigenvalues[0].real <= -0.9 * sys_main.params.mu
        assert len(defl.eigenvalues) == len(raw.eigenvalues) - 1

    def test_deflation_only_m0(self, sys_main):
        opm = linops.assemble_mode_operator(
            1, sys_main, make_radial_grid(sys_main.prof.grid.r_max, 400))
        with pytest.raises(ConfigurationError):
            linops.spectrum(opm, deflate=True)

    def test_translation_mode_m1(self, sys_main):
        # the radial part of d_x Q is an approximate eigenvector at -mu
        rgrid = make_radial_grid(sys_main.prof.grid.r_max, 1500)
        opm = linops.assemble_mode_operator(1, sys_main, rgrid)
        u = sys_main.prof.spline("dQ")(opm.r)
        mu = sys_main.params.mu
        resid = np.linalg.norm(opm.matrix @ u + mu * u) / np.linalg.norm(u)
        assert resid <= 0.05
        rep = linops.spectrum(opm)
        assert abs(rep.eigenvalues[0].real + mu) <= 0.05 * mu

    def test_planar_radial_cross_validation(self, params_main):
        # moment-free injections kill the free-space exterior field, so the
        # periodic planar operator and the free-space radial matrix must
        # agree to discretization accuracy
        grid = PlanarGrid(L=16.0, N=512)
        sys = linops.build_system(params_main, grid)
        r_max = sys.prof.grid.r_max
        n = 100000
        rc = (np.arange(n) + 0.5) * (r_max / n)
        ix = np.arange(grid.N // 2, grid.N)
        xs = grid.x1[ix]
        sel = (xs > 0) & (xs < 10.0)
        for m in (0, 1, 2, 3):
            g = moment_free_mode(grid, m)
            sl = linops.apply_L11(g, sys)[ix, grid.N // 2]
            _, rad = linops.apply_mode_operator(moment_free_radial(rc, m), m,
                                                sys, r_max, n)
            sp = CubicSpline(rc, rad)
            num = np.sqrt(np.sum(xs[sel] * (sp(xs[sel]) - sl[sel]) ** 2))
            den = np.sqrt(np.sum(xs[sel] * sl[sel] ** 2))
            assert num / den <= 1e-6

    def test_harmonic_decoupling(self, params_main):
        # applying the planar density block to u(r) e^{i m theta} leaves no
        # measurable content in other harmonics (overlap functionals with
        # exact planar quadrature)
        grid = PlanarGrid(L=16.0, N=256)
        sys = linops.build_system(params_main, grid)
        R = np.sqrt(grid.R2)
        TH = np.arctan2(grid.Y, grid.X)
        m = 2
        out = linops.apply_L11(moment_free_mode(grid, m), sys)
        nrm = grid.l2(out)
        h2 = grid.h**2
        for mp in (0, 1, 3, 4, 5):
            for width in (0.7, 1.3):
                v = R**mp * np.exp(-R**2 / (2 * width**2))
                for trig in (np.cos, np.sin):
                    psi = v * (trig(mp * TH) if mp > 0 else 1.0)
                    overlap = abs(np.sum(out * psi)) * h2
                    overlap /= nrm * np.sqrt(np.sum(psi**2) * h2)
                    assert overlap <= 1e-8

    def test_spectrum_eigenvalue_count_and_sorting(self, sys_main):
        opm = linops.assemble_mode_operator(
            2, sys_main, make_radial_grid(sys_main.prof.grid.r_max, 300))
        rep = linops.spectrum(opm)
        assert len(rep.eigenvalues) == 300
        assert np.all(np.diff(rep.eigenvalues.real) <= 1e-12)


class TestEpsConvergence:
    def test_operator_difference_slope(self, params_main):
        grid = PlanarGrid(L=16.0, N=96)
        bank = SampleBank(seed=17, count=10, mean_zero=True)
        res = linops.l11_eps_convergence(bank, params_main, grid,
                                         [0.04, 0.02, 0.01, 0.005],
                                         radial_n=2000)
        assert all(r2 < r1 for r1, r2 in zip(res["ratios"], res["ratios"][1:]))
        assert res["slope"] >= 0.4
