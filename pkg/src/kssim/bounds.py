"""
Pointwise estimate checks on computed profiles and the eps -> 0 convergence
rates of the profile family.

Strict inequalities are tested with slack 1e-12 and the r = 0 node excluded
(all chains degenerate to equalities at the origin).  "Verification" means
finite, refinement-stable empirical constants, not proofs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import linprog

from .numgrid import ConfigurationError, ModelParams, RadialGrid
from .profiles import RadialProfile, solve_profile

STRICT_SLACK = 1e-12


@dataclass
class BoundReport:
    """Per-inequality verdict: worst margin (min over nodes of RHS - LHS),
    its location, and any fitted constants."""

    ineq: str
    passed: bool
    worst_margin: float
    worst_location: float
    fitted_constants: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "ineq": self.ineq,
            "passed": bool(self.passed),
            "worst_margin": float(self.worst_margin),
            "worst_location": float(self.worst_location),
            "fitted_constants": {k: float(v) for k, v in self.fitted_constants.items()},
            "details": self.details,
        }


@dataclass
class ConvergenceReport:
    """Sup-norm deviations from the eps = 0 profile and their log-log slopes."""

    mu: float
    eps_list: list
    deviations: dict
    slopes: dict
    intercepts: dict

    def as_dict(self) -> dict:
        return {
            "mu": self.mu,
            "eps_list": [float(e) for e in self.eps_list],
            "deviations": {k: [float(x) for x in v] for k, v in self.deviations.items()},
            "slopes": {k: float(v) for k, v in self.slopes.items()},
            "intercepts": {k: float(v) for k, v in self.intercepts.items()},
        }


def _margin_report(ineq: str, r: np.ndarray, margins: dict,
                   constants: dict | None = None) -> BoundReport:
    worst = np.inf
    where = 0.0
    chain_worst = {}
    for name, m in margins.items():
        i = int(np.argmin(m))
        chain_worst[name] = float(m[i])
        if m[i] < worst:
            worst, where = float(m[i]), float(r[i])
    return BoundReport(
        ineq=ineq,
        passed=bool(worst >= -STRICT_SLACK),
        worst_margin=worst,
        worst_location=where,
        fitted_constants=constants or {},
        details={"chain_worst_margins": chain_worst},
    )


def _origin_model_cumulative(f: np.ndarray, r: np.ndarray, p: int) -> np.ndarray:
    """Cumulative integral of a sampled integrand vanishing like r^p at 0.

    Composite rules lose the first-cell contribution at O(h^(p+1)), the same
    order as the integral itself there; instead the first two cells use the
    local model c_p r^p + c_(p+2) r^(p+2) fitted through nodes 1 and 2 and
    integrated analytically, with Simpson taking over beyond.
    """
    h = r[1]
    M = np.array([[h**p, h ** (p + 2)],
                  [(2 * h) ** p, (2 * h) ** (p + 2)]])
    cp, cq = np.linalg.solve(M, [f[1], f[2]])

    def F(x):
        return cp * x ** (p + 1) / (p + 1) + cq * x ** (p + 3) / (p + 3)

    out = np.empty_like(f)
    out[0] = 0.0
    out[1] = F(h)
    out[2:] = F(2 * h) + cumulative_simpson(f[2:], x=r[2:], initial=0.0)
    return out


def _profile_difference(prof_eps: RadialProfile, prof_limit: RadialProfile):
    """(P - P0, r P' - r P0') computed in difference form.

    Near the origin both potentials behave like -2 r^2 and their gap scales
    as r^4; subtracting sampled arrays loses it under quadrature noise.
    Differencing the integral representations instead keeps full relative
    accuracy: the integrand bracket is O(rho^3) by construction, and the
    origin-model cumulative keeps the first nodes at like accuracy.
    """
    r = prof_eps.grid.r
    mu, eps = prof_eps.params.mu, prof_eps.params.eps
    inner_eps = _origin_model_cumulative(
        r * np.exp(prof_eps.P - mu * (1.0 - eps) * r**2 / 2.0), r, p=1)
    inner_0 = _origin_model_cumulative(r * np.exp(prof_limit.P), r, p=1)
    bracket = np.exp(-mu * eps * r**2 / 2.0) * inner_eps - inner_0
    integrand = np.zeros_like(r)
    integrand[1:] = bracket[1:] / r[1:]
    d = -8.0 * _origin_model_cumulative(integrand, r, p=3)
    rdP_diff = -8.0 * bracket
    return d, rdP_diff


def check_profile_sandwich(prof_eps: RadialProfile, prof_limit: RadialProfile,
                           alpha: float) -> BoundReport:
    """Strict two-sided chains between the profile and the limit pair.

    Chains (r > 0): the potential sandwich, its radial-derivative version,
    and the density sandwich
    ``Q0 exp(-mu r^2/2) < Q < Q0 exp(-mu(1-alpha) r^2/2)``.
    The density margins follow from the potential gap d = P - P0 through
    Q - Q0 e^{-mu r^2/2} = Q0 e^{-mu r^2/2} expm1(d), which keeps the tight
    near-origin margins (all O(r^4)) above float noise.
    """
    if prof_eps.grid is not prof_limit.grid and not np.array_equal(
        prof_eps.grid.r, prof_limit.grid.r
    ):
        raise ConfigurationError("profiles must share a radial grid")
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must be in (0,1), got {alpha}")
    mu = prof_eps.params.mu
    d_full, rdP_full = _profile_difference(prof_eps, prof_limit)
    r = prof_eps.grid.r[1:]
    d, rdP_diff = d_full[1:], rdP_full[1:]
    P, dP = prof_eps.P[1:], prof_eps.dP[1:]
    Q0 = prof_limit.Q[1:]
    a = mu * alpha * r**2 / 2.0
    margins = {
        # potential chain
        "P_minus_a_lt_P0": a - d,
        "P0_lt_P": d,
        "P_lt_0": -P,
        # radial-derivative chain (x.grad P = r P')
        "rdP_minus_mar2_lt_rdP0": mu * alpha * r**2 - rdP_diff,
        "rdP0_lt_rdP": rdP_diff,
        "rdP_lt_0": -r * dP,
        # density chain, margins derived from the potential gap
        "Q_lower": Q0 * np.exp(-mu * r**2 / 2.0) * np.expm1(d),
        "Q_upper": Q0 * np.exp(-mu * (1.0 - alpha) * r**2 / 2.0)
                   * (-np.expm1(d - a)),
    }
    rep = _margin_report("profile_sandwich", r, margins)
    rep.details["alpha"] = float(alpha)
    rep.details["mu"] = float(mu)
    rep.details["eps"] = float(prof_eps.params.eps)
    return rep


def _noise_safe_mask(grid: RadialGrid, mu: float, theta: float,
                     weight_cap: float = 1e8) -> np.ndarray:
    """Nodes where the Gaussian weight exp(theta*mu*r^2/2) stays below
    weight_cap, so float noise in exponentially small quantities cannot
    dominate weighted sups."""
    return theta * mu * grid.r**2 / 2.0 <= np.log(weight_cap)


def fit_lap_bound(prof: RadialProfile) -> tuple[float, float]:
    """Smallest admissible (C2, C3) with |lap P| <= C2*mu*eps + C3/<r>,
    by linear programming over the nodes (minimal mean bound value)."""
    mu, eps = prof.params.mu, prof.params.eps
    absl = np.abs(prof.lapP)
    invw = 1.0 / np.sqrt(1.0 + prof.grid.r**2)
    if mu * eps == 0.0:
        return 0.0, float(np.max(absl / invw))
    A_ub = -np.column_stack([np.full_like(invw, mu * eps), invw])
    res = linprog(
        c=[mu * eps, float(np.mean(invw))],
        A_ub=A_ub,
        b_ub=-absl,
        bounds=[(0, None), (0, None)],
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"laplacian bound fit failed: {res.message}")
    return float(res.x[0]), float(res.x[1])


def check_uniform_bounds(prof: RadialProfile, theta: float = 0.9) -> BoundReport:
    """Fit the uniform-bound constants of the profile family.

    C0: density envelope against exp(-mu*theta r^2/2) <r>^-4,
    C1: sup (1/r + <r>) |P'|,
    (C2, C3): laplacian bound coefficients.
    """
    grid = prof.grid
    mu = prof.params.mu
    r = grid.r
    safe = _noise_safe_mask(grid, mu, theta)
    wgt = np.exp(theta * mu * r[safe] ** 2 / 2.0) * (1.0 + r[safe] ** 2) ** 2
    C0 = float(np.max(prof.Q[safe] * wgt))
    rp = r[1:]
    C1 = float(np.max((1.0 / rp + np.sqrt(1.0 + rp**2)) * np.abs(prof.dP[1:])))
    C2, C3 = fit_lap_bound(prof)
    consts = {"C0": C0, "C1": C1, "C2": C2, "C3": C3}
    finite = all(np.isfinite(v) for v in consts.values())
    q_nonneg = float(np.min(prof.Q))
    return BoundReport(
        ineq="uniform_bounds",
        passed=bool(finite and q_nonneg >= 0.0),
        worst_margin=q_nonneg,
        worst_location=float(r[int(np.argmin(prof.Q))]),
        fitted_constants=consts,
        details={"theta": float(theta), "mu": float(mu), "eps": float(prof.params.eps)},
    )


def eps_convergence_study(mu: float, eps_list, grid: RadialGrid,
                          theta: float = 0.9) -> ConvergenceReport:
    """Sup-norm distances between the eps-profile and the eps = 0 profile for
    each eps, with log-log slopes.

    Density differences are weighted by exp(+theta*mu r^2/2), restricted to
    nodes where that weight cannot amplify float noise.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ConfigurationError("need at least 3 eps values")
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ConfigurationError("eps_list must be strictly decreasing")
    if eps_list[0] > 0.05 or eps_list[-1] <= 0.0:
        raise ConfigurationError("eps values must lie in (0, 0.05]")

    base = solve_profile(ModelParams(mu=mu, eps=0.0), grid)
    safe = _noise_safe_mask(grid, mu, theta)
    gw = np.exp(theta * mu * grid.r[safe] ** 2 / 2.0)

    devs = {"gradP": [], "lapP": [], "Q": [], "gradQ": []}
    for eps in eps_list:
        p = solve_profile(ModelParams(mu=mu, eps=eps), grid)
        devs["gradP"].append(np.max(np.abs(p.dP - base.dP)))
        devs["lapP"].append(np.max(np.abs(p.lapP - base.lapP)))
        devs["Q"].append(np.max(np.abs(p.Q - base.Q)[safe] * gw))
        devs["gradQ"].append(np.max(np.abs(p.dQ - base.dQ)[safe] * gw))

    slopes, intercepts = {}, {}
    le = np.log(eps_list)
    for name, vals in devs.items():
        coef = np.polyfit(le, np.log(vals), 1)
        slopes[name] = float(coef[0])
        intercepts[name] = float(coef[1])
    return ConvergenceReport(mu=mu, eps_list=eps_list, deviations=devs,
                             slopes=slopes, intercepts=intercepts)
