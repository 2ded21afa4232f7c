"""Profile estimate checks: sandwich chains, uniform-bound fits, and the
eps-convergence study."""

import numpy as np
import pytest

from kssim import ConfigurationError, ModelParams, closed_form_limit, make_radial_grid, solve_profile
from kssim.bounds import (
    check_profile_sandwich,
    check_uniform_bounds,
    eps_convergence_study,
    fit_lap_bound,
)


@pytest.fixture(scope="module")
def grid():
    return make_radial_grid(10.0, 4000)


@pytest.fixture(scope="module")
def limit(grid):
    return closed_form_limit(grid)


@pytest.fixture(scope="module")
def prof(grid):
    return solve_profile(ModelParams(mu=0.5, eps=0.005), grid)


class TestSandwich:
    def test_passes_at_large_alpha(self, prof, limit):
        rep = check_profile_sandwich(prof, limit, alpha=0.95)
        assert rep.passed, rep.details

    def test_fails_at_small_alpha(self, prof, limit):
        # the alpha-dependent chains require alpha above an empirical
        # threshold; far below it the report documents the failure location
        rep = check_profile_sandwich(prof, limit, alpha=0.05)
        assert not rep.passed
        assert rep.worst_margin < 0
        assert rep.worst_location > 0

    def test_monotone_frontier(self, grid, limit):
        # passing at (eps, alpha) implies passing at smaller eps and larger
        # alpha on the tested lattice
        outcomes = {}
        for eps in (0.01, 0.005):
            p = solve_profile(ModelParams(mu=0.5, eps=eps), grid)
            for alpha in (0.9, 0.95):
                outcomes[(eps, alpha)] = check_profile_sandwich(p, limit,
                                                                alpha).passed
        if outcomes[(0.01, 0.9)]:
            assert outcomes[(0.005, 0.9)] and outcomes[(0.01, 0.95)]
        assert outcomes[(0.005, 0.95)]

    def test_deterministic(self, prof, limit):
        r1 = check_profile_sandwich(prof, limit, 0.95)
        r2 = check_profile_sandwich(prof, limit, 0.95)
        assert r1.as_dict() == r2.as_dict()

    def test_grid_mismatch(self, prof):
        other = closed_form_limit(make_radial_grid(10.0, 2000))
        with pytest.raises(ConfigurationError):
            check_profile_sandwich(prof, other, 0.95)

    def test_alpha_range(self, prof, limit):
        with pytest.raises(ConfigurationError):
            check_profile_sandwich(prof, limit, 1.5)


class TestUniformBounds:
    def test_limit_profile_gradient_constant(self, limit):
        # sup (1/r + <r>) |P0'| with P0' = -4r/(1+r^2): a dense scan of the
        # closed form bounds it by 5.21; the fit must land just below
        rep = check_uniform_bounds(limit, theta=0.9)
        r = np.linspace(1e-6, 50, 2000001)
        oracle = np.max((1 / r + np.sqrt(1 + r**2)) * 4 * r / (1 + r**2))
        assert rep.fitted_constants["C1"] <= oracle * (1 + 1e-6)
        assert rep.fitted_constants["C1"] >= oracle * 0.999

    def test_solved_profile_constants_finite(self, prof):
        rep = check_uniform_bounds(prof)
        assert rep.passed
        assert all(np.isfinite(v) for v in rep.fitted_constants.values())
        assert rep.fitted_constants["C0"] > 0

    def test_C0_stable_under_eps(self, grid):
        c = {}
        for eps in (0.02, 0.005):
            p = solve_profile(ModelParams(mu=1.0, eps=eps), grid)
            c[eps] = check_uniform_bounds(p).fitted_constants["C0"]
        assert c[0.02] <= 2.0 * c[0.005]

    def test_Q_nonnegative(self, prof):
        assert np.min(prof.Q) >= 0.0

    def test_lap_bound_is_admissible(self, prof):
        C2, C3 = fit_lap_bound(prof)
        mu, eps = prof.params.mu, prof.params.eps
        bound = C2 * mu * eps + C3 / np.sqrt(1 + prof.grid.r**2)
        assert np.all(np.abs(prof.lapP) <= bound * (1 + 1e-9))

    def test_constants_grid_stable(self):
        vals = {}
        for n in (4000, 8000):
            p = solve_profile(ModelParams(mu=1.0, eps=0.02),
                              make_radial_grid(10.0, n))
            vals[n] = check_uniform_bounds(p).fitted_constants
        for name in vals[4000]:
            a, b = vals[4000][name], vals[8000][name]
            assert abs(a - b) <= 0.01 * max(abs(a), abs(b), 1e-12)


class TestEpsConvergence:
    def test_validation(self, grid):
        with pytest.raises(ConfigurationError):
            eps_convergence_study(1.0, [0.02, 0.01], grid)
        with pytest.raises(ConfigurationError):
            eps_convergence_study(1.0, [0.01, 0.02, 0.005], grid)

    def test_identical_eps_zero_deviation(self, grid):
        p1 = solve_profile(ModelParams(mu=1.0, eps=0.01), grid)
        p2 = solve_profile(ModelParams(mu=1.0, eps=0.01), grid)
        assert np.max(np.abs(p1.Q - p2.Q)) == 0.0

    def test_slopes(self, grid):
        rep = eps_convergence_study(1.0, [0.04, 0.02, 0.01], grid)
        assert rep.slopes["Q"] >= 0.85
        assert rep.slopes["lapP"] >= 0.85
        assert rep.slopes["gradQ"] >= 0.85
        assert rep.slopes["gradP"] >= 0.4
        for vals in rep.deviations.values():
            assert all(b < a for a, b in zip(vals, vals[1:]))
