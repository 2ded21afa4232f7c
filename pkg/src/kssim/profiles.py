"""
Steady radial profiles (Q, P) of the self-similar system and the closed-form
vanishing-drift limit pair.

The stationary pair is normalized by Q(0) = 8 and satisfies, in radial
variables,

    P(r) = -8 int_0^r exp(-mu*eps*rho^2/2)/rho
               int_0^rho tau exp(P(tau) - mu(1-eps) tau^2/2) dtau drho,
    Q(r) = 8 exp(P(r) - mu r^2/2),
    lap P = -Q - mu*eps * r * P'(r).

The laplacian sign follows the internally consistent radial equation
(P concave at the origin, Q positive); see README for the convention note.
P is computed by damped fixed-point iteration on the integral map, seeded
with the closed-form limit P0(r) = -2 log(1 + r^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .numgrid import ConfigurationError, ModelParams, PlanarGrid, RadialGrid


class DivergenceError(RuntimeError):
    """Fixed-point iteration failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class RadialProfile:
    """Sampled steady state on a radial grid.

    Arrays: P (potential), dP = P', lapP = laplacian of P, Q (density),
    dQ = Q'.  `residual` is the sup-norm defect of the fixed-point map at the
    returned iterate.
    """

    grid: RadialGrid
    params: ModelParams
    P: np.ndarray
    dP: np.ndarray
    lapP: np.ndarray
    Q: np.ndarray
    dQ: np.ndarray
    iterations: int
    residual: float
    _splines: dict = field(default_factory=dict, repr=False)

    def spline(self, name: str) -> CubicSpline:
        """Cubic interpolant of one of the profile arrays, for off-grid
        evaluation (planar lifts, staggered operator grids)."""
        if name not in self._splines:
            arr = getattr(self, name)
            # even quantities have zero slope at r = 0; odd ones vanish there
            if name in ("P", "Q", "lapP"):
                bc = ((1, 0.0), "not-a-knot")
            else:
                bc = "not-a-knot"
            self._splines[name] = CubicSpline(self.grid.r, arr, bc_type=bc)
        return self._splines[name]


def _fixed_point_map(P: np.ndarray, r: np.ndarray, mu: float, eps: float) -> np.ndarray:
    """One application of the integral map defining P."""
    inner = cumulative_simpson(r * np.exp(P - mu * (1.0 - eps) * r**2 / 2.0), x=r,
                               initial=0.0)
    outer = np.zeros_like(r)
    # integrand -> 0 at rho = 0 (inner integral is O(rho^2)): removable
    outer[1:] = np.exp(-mu * eps * r[1:] ** 2 / 2.0) / r[1:] * inner[1:]
    return -8.0 * cumulative_simpson(outer, x=r, initial=0.0)


def _finalize(grid: RadialGrid, params: ModelParams, P: np.ndarray,
              iterations: int, residual: float) -> RadialProfile:
    r = grid.r
    mu, eps = params.mu, params.eps
    Q = 8.0 * np.exp(P - mu * r**2 / 2.0)
    inner = cumulative_simpson(r * np.exp(P - mu * (1.0 - eps) * r**2 / 2.0), x=r,
                               initial=0.0)
    dP = np.zeros_like(r)
    dP[1:] = -8.0 * np.exp(-mu * eps * r[1:] ** 2 / 2.0) / r[1:] * inner[1:]
    lapP = -Q - mu * eps * r * dP
    dQ = Q * (dP - mu * r)
    return RadialProfile(grid=grid, params=params, P=P, dP=dP, lapP=lapP, Q=Q,
                         dQ=dQ, iterations=iterations, residual=residual)


def solve_profile(p: ModelParams, grid: RadialGrid, tol: float = 1e-12,
                  max_iter: int = 500) -> RadialProfile:
    """Solve the stationary system by fixed-point iteration.

    Plain iteration (delta = 0) with a damping fallback (delta = 0.5) that
    engages when the residual fails to decrease.
    """
    r = grid.r
    P = -2.0 * np.log1p(r**2)
    delta = 0.0
    prev_res = np.inf
    res = np.inf
    for it in range(1, max_iter + 1):
        Pn = _fixed_point_map(P, r, p.mu, p.eps)
        if not np.all(np.isfinite(Pn)):
            raise DivergenceError("NaN in fixed-point integrand", residual=res)
        res = float(np.max(np.abs(Pn - P)))
        P = (1.0 - delta) * Pn + delta * P
        if res < tol:
            break
        if it > 3 and res > prev_res and delta == 0.0:
            delta = 0.5
        prev_res = res
    else:
        raise DivergenceError(
            f"no convergence after {max_iter} iterations (residual {res:.3e})",
            residual=res,
        )
    # defect of the returned iterate under one more application of the map
    residual = float(np.max(np.abs(_fixed_point_map(P, r, p.mu, p.eps) - P)))
    return _finalize(grid, p, P, iterations=it, residual=residual)


def closed_form_limit(grid: RadialGrid, params: ModelParams | None = None) -> RadialProfile:
    """The vanishing-drift pair Q0 = 8/(1+r^2)^2, P0 = -2 log(1+r^2)."""
    r = grid.r
    P = -2.0 * np.log1p(r**2)
    dP = -4.0 * r / (1.0 + r**2)
    Q = 8.0 / (1.0 + r**2) ** 2
    lapP = -Q
    dQ = -32.0 * r / (1.0 + r**2) ** 3
    if params is None:
        params = ModelParams(mu=1e-12, eps=0.0)
    prof = RadialProfile(grid=grid, params=params, P=P, dP=dP, lapP=lapP, Q=Q,
                         dQ=dQ, iterations=0, residual=0.0)
    return prof


def profile_mass(prof: RadialProfile) -> float:
    """Total mass 2 pi int_0^inf Q r dr.

    Grid quadrature on [0, r_max] plus the algebraic tail of the fitted model
    c/(1+r^2)^2 matched at the last node.  The tail term is exact for the
    closed-form limit and negligible (Gaussian-suppressed) for mu > 0.
    """
    grid = prof.grid
    body = grid.integrate_r(prof.Q)
    c = prof.Q[-1] * (1.0 + grid.r_max**2) ** 2
    tail = c / (2.0 * (1.0 + grid.r_max**2))
    return 2.0 * np.pi * (body + tail)


def lift_to_plane(prof: RadialProfile, grid: PlanarGrid):
    """Interpolate (Q, P, grad P) onto planar nodes.

    Returns (Q, P, (gradPx, gradPy)) as value arrays; gradP_i = P'(r) x_i / r
    with the r -> 0 limit 0.
    """
    need = np.sqrt(2.0) * grid.L
    if prof.grid.r_max < need:
        raise ConfigurationError(
            f"profile r_max {prof.grid.r_max} does not cover the planar "
            f"diagonal {need:.3f}"
        )
    R = np.sqrt(grid.R2)
    Q = prof.spline("Q")(R)
    P = prof.spline("P")(R)
    dP = prof.spline("dP")(R)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(R > 0, dP / np.where(R > 0, R, 1.0), 0.0)
    gradPx = ratio * grid.X
    gradPy = ratio * grid.Y
    return Q, P, (gradPx, gradPy)
