"""Steady-profile solver checks: closed form, Taylor coefficients, mass,
vanishing-drift limit, degenerate-parameter consistency, refinement."""

import numpy as np
import pytest
from scipy.integrate import cumulative_simpson

from kssim import (
    ConfigurationError,
    ModelParams,
    PlanarGrid,
    closed_form_limit,
    lift_to_plane,
    make_radial_grid,
    profile_mass,
    solve_profile,
)


@pytest.fixture(scope="module")
def rgrid12():
    return make_radial_grid(12.0, 4000)


def fd_radial_laplacian(P, r, h, stride=1, richardson=False):
    """4th-order (optionally Richardson-extrapolated to 6th) FD oracle for
    (1/r)(r P')' on a uniform radial grid; NaN where the stencil leaves the
    grid.  Wider strides damp node-to-node quadrature noise in P."""
    def lap4(s):
        hh = s * h
        d1 = np.full_like(P, np.nan)
        d2 = np.full_like(P, np.nan)
        sl = slice(2 * s, len(P) - 2 * s)
        d1[sl] = (P[:-4 * s] - 8 * P[s:-3 * s] + 8 * P[3 * s:-s] - P[4 * s:]) / (12 * hh)
        d2[sl] = (-P[:-4 * s] + 16 * P[s:-3 * s] - 30 * P[2 * s:-2 * s]
                  + 16 * P[3 * s:-s] - P[4 * s:]) / (12 * hh * hh)
        return d2 + d1 / np.where(r > 0, r, 1.0)

    if richardson:
        return (16.0 * lap4(stride) - lap4(2 * stride)) / 15.0
    return lap4(stride)


class TestClosedFormLimit:
    def test_values_at_origin(self, rgrid12):
        prof = closed_form_limit(rgrid12)
        assert prof.Q[0] == 8.0
        assert prof.P[0] == 0.0

    def test_radial_laplacian_is_minus_Q(self, rgrid12):
        prof = closed_form_limit(rgrid12)
        lap = fd_radial_laplacian(prof.P, rgrid12.r, rgrid12.h, richardson=True)
        m = (rgrid12.r > 0.15) & (rgrid12.r < 11.5) & np.isfinite(lap)
        assert np.max(np.abs(lap[m] + prof.Q[m])) <= 1e-9
        # and the stored laplacian agrees with -Q exactly by construction
        assert np.max(np.abs(prof.lapP + prof.Q)) == 0.0

    def test_mass_is_8pi(self, rgrid10):
        prof = closed_form_limit(rgrid10)
        mass = profile_mass(prof)
        assert abs(mass - 8 * np.pi) <= 1e-10 * 8 * np.pi


class TestSolveProfile:
    def test_normalization_exact(self, rgrid12):
        for mu, eps in [(0.5, 0.0), (1.0, 0.02), (2.0, 0.05)]:
            prof = solve_profile(ModelParams(mu=mu, eps=eps), rgrid12)
            assert prof.P[0] == 0.0
            assert prof.Q[0] == 8.0
            assert prof.residual <= 1e-11

    def test_taylor_quartic_coefficient(self, rgrid12):
        mu, eps = 0.5, 0.01
        prof = solve_profile(ModelParams(mu=mu, eps=eps), rgrid12)
        r = rgrid12.r
        m = (r > 0) & (r <= 0.1)
        A = np.column_stack([r[m] ** 4, r[m] ** 6])
        coef, *_ = np.linalg.lstsq(A, prof.P[m] + 2 * r[m] ** 2, rcond=None)
        expected = 1.0 + mu / 4.0 * (1.0 + eps)
        assert abs(coef[0] - expected) / expected <= 0.01

    def test_vanishing_drift_limit(self, rgrid12):
        limit = closed_form_limit(rgrid12)
        sups = []
        for mu in (1e-1, 1e-2, 1e-3):
            prof = solve_profile(ModelParams(mu=mu, eps=0.0), rgrid12)
            sups.append(np.max(np.abs(prof.Q - limit.Q)))
        assert sups[0] > sups[1] > sups[2]

    def test_monotone_residual_or_damping(self, rgrid12):
        # all tested (mu, eps) converge to the tight residual either plainly
        # or through the damping fallback
        for mu in (0.1, 1.0, 4.0):
            for eps in (0.0, 0.05):
                prof = solve_profile(ModelParams(mu=mu, eps=eps), rgrid12)
                assert prof.residual <= 1e-11

    def test_eps0_matches_independent_iteration(self, rgrid12):
        # separately coded parabolic-elliptic iteration (the same map with
        # the eps-dependent factors removed)
        mu = 1.0
        r = rgrid12.r
        P = -2.0 * np.log1p(r**2)
        for _ in range(200):
            inner = cumulative_simpson(r * np.exp(P - mu * r**2 / 2), x=r,
                                       initial=0.0)
            outer = np.zeros_like(r)
            outer[1:] = inner[1:] / r[1:]
            Pn = -8.0 * cumulative_simpson(outer, x=r, initial=0.0)
            if np.max(np.abs(Pn - P)) < 1e-15:
                P = Pn
                break
            P = Pn
        prof = solve_profile(ModelParams(mu=mu, eps=0.0), rgrid12)
        assert np.max(np.abs(prof.P - P)) <= 1e-12

    def test_grid_refinement(self):
        p = ModelParams(mu=1.0, eps=0.02)
        q1 = solve_profile(p, make_radial_grid(12.0, 8000)).Q
        q2 = solve_profile(p, make_radial_grid(12.0, 16000)).Q
        assert np.max(np.abs(q1 - q2[::2])) <= 1e-9

    def test_laplacian_two_ways(self):
        # stationary-identity lapP vs FD of the solved P; stride 4 balances
        # quadrature noise amplification against stencil truncation
        rg = make_radial_grid(12.0, 8000)
        prof = solve_profile(ModelParams(mu=1.0, eps=0.02), rg)
        lap = fd_radial_laplacian(prof.P, rg.r, rg.h, stride=4)
        m = (rg.r > 0.3) & (rg.r < 11.0) & np.isfinite(lap)
        assert np.max(np.abs(lap[m] - prof.lapP[m])) <= 1e-7


class TestProfileMass:
    def test_mass_in_range_and_monotone(self, rgrid12):
        masses = [profile_mass(solve_profile(ModelParams(mu=mu, eps=0.01), rgrid12))
                  for mu in (1.0, 2.0)]
        assert all(0.0 < m < 8 * np.pi for m in masses)
        assert masses[1] < masses[0]


class TestLiftToPlane:
    def test_closed_form_lift(self):
        grid = PlanarGrid(L=8.0, N=96)
        prof = closed_form_limit(make_radial_grid(12.0, 4000))
        Q, P, (gx, gy) = lift_to_plane(prof, grid)
        exact = 8.0 / (1.0 + grid.R2) ** 2
        assert np.max(np.abs(Q - exact)) <= 1e-8
        c = grid.N // 2
        assert gx[c, c] == 0.0 and gy[c, c] == 0.0

    def test_coverage_error(self):
        grid = PlanarGrid(L=16.0, N=64)
        prof = closed_form_limit(make_radial_grid(12.0, 2000))
        with pytest.raises(ConfigurationError):
            lift_to_plane(prof, grid)

    def test_divergence_theorem_quadratures(self):
        # planar quadrature of Q equals 2 pi times the radial quadrature
        grid = PlanarGrid(L=10.0, N=256)
        rg = make_radial_grid(16.0, 4000)
        prof = solve_profile(ModelParams(mu=1.0, eps=0.02), rg)
        Q, _, _ = lift_to_plane(prof, grid)
        planar = grid.integrate(Q)
        radial = 2 * np.pi * rg.integrate_r(prof.Q)
        assert abs(planar - radial) <= 1e-8 * radial
