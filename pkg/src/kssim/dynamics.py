"""
Time integration of the nonlinear perturbation pair (g, w), a linear mode
dropping the bilinear terms, decay-rate fitting, and stability experiments.

IMEX splitting: the diagonal diffusion (lap g, (1/eps) lap w) is implicit
(diagonal in Fourier); drift, transport, the nonlocal terms and the bilinear
terms are explicit.  The g-equation right-hand side is assembled in flux
form, so the discrete mean of g is invariant to machine precision; it is
additionally re-projected to zero after every step.

The w component decays only algebraically in space, so the fraction of its
norm near the box boundary is monitored along every run (alarm at 1e-6).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fieldops import grad_kappa_arrays, grad_kappa_contract_arrays
from .linops import LinearizedSystem, apply_L11, apply_L12, apply_L21, apply_L22
from .numgrid import (
    ConfigurationError,
    Field,
    NormVector,
    PlanarGrid,
    State,
    state_norms,
)


class BlowUpError(RuntimeError):
    """Raised internally on NaN/overflow; carries the failure time."""

    def __init__(self, t: float):
        super().__init__(f"solution blew up at t = {t:.6g}")
        self.t = t


@dataclass(frozen=True)
class EvolveConfig:
    """Time-stepping configuration.

    dt must respect min(0.1 eps, 0.01) unless `dt_override` is set.
    """

    dt: float
    t_end: float
    scheme: str = "imex-euler"
    dealias: bool = True
    linear_only: bool = False
    record_every: int = 10
    dt_override: bool = False

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.t_end <= 0:
            raise ConfigurationError("dt and t_end must be positive")
        if self.scheme not in ("imex-euler", "imex-bdf2"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")

    def check_dt(self, eps: float) -> None:
        if self.dt_override:
            return
        guard = 0.01 if eps <= 0 else min(0.1 * eps, 0.01)
        if self.dt > guard * (1 + 1e-12):
            raise ConfigurationError(
                f"dt = {self.dt} violates the stability guard {guard} "
                "(set dt_override to force)"
            )


@dataclass
class Trajectory:
    """Recorded norm series of one run."""

    times: np.ndarray
    norms: dict
    mass_g: np.ndarray
    w_outer_frac: np.ndarray
    final_state: State
    stable: bool
    blowup_time: float | None = None
    boundary_alarm: bool = False

    def series(self, name: str) -> np.ndarray:
        return self.norms[name]


@dataclass(frozen=True)
class DecayFit:
    """Log-linear fit of a norm time series: norm ~ exp(intercept - rate t).

    `residual` is the max absolute deviation of log(norm) from the fitted
    line; the fit is only declared valid when it stays below 0.1.
    """

    rate: float
    intercept: float
    window: tuple
    residual: float
    valid: bool


# ---------------------------------------------------------------------------
# right-hand side
# ---------------------------------------------------------------------------

def _explicit_terms(g: np.ndarray, w: np.ndarray, sys: LinearizedSystem,
                    linear_only: bool, dealias: bool) -> tuple[np.ndarray, np.ndarray]:
    """Everything except the implicit diffusion: (Ng, Nw) with
    dg/dt = lap g + Ng and dw/dt = (1/eps) lap w + Nw."""
    grid = sys.grid
    mu = sys.params.mu
    vx, vy = grad_kappa_arrays(grid, g)      # grad kappa * g
    wx, wy = grid.grad(w)

    # g-flux: mu x g - g grad P - Q grad kappa*g - Q grad w [- g grad kappa*g - g grad w]
    fx = mu * grid.X * g - g * sys.gradPx - sys.Q * vx - sys.Q * wx
    fy = mu * grid.Y * g - g * sys.gradPy - sys.Q * vy - sys.Q * wy
    # w-equation kernel argument: g grad P + Q grad kappa*g + Q grad w [+ g grad w + g grad kappa*g]
    hx = g * sys.gradPx + sys.Q * vx + sys.Q * wx
    hy = g * sys.gradPy + sys.Q * vy + sys.Q * wy
    if not linear_only:
        fx -= g * vx + g * wx
        fy -= g * vy + g * wy
        hx += g * wx + g * vx
        hy += g * wy + g * vy

    fxh = grid.to_spectral(fx)
    fyh = grid.to_spectral(fy)
    if dealias:
        mask = grid.dealias_mask
        fxh, fyh = fxh * mask, fyh * mask
        hx, hy = grid.dealias(hx), grid.dealias(hy)
    Ng = grid.from_spectral(1j * grid.KX * fxh + 1j * grid.KY * fyh)
    Nw = (mu * (grid.X * wx + grid.Y * wy) + g
          + grad_kappa_contract_arrays(grid, hx, hy))
    return Ng, Nw


def rhs(st: State, sys: LinearizedSystem, linear_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Full right-hand side of the evolution system.

    In linear mode this is exactly the block operator: (L11 g + L12 w,
    L21 g + L22 w), evaluated through the same kernels as the operator
    applications.
    """
    if linear_only:
        dg = apply_L11(st.g.values, sys) + apply_L12(st.w.values, sys)
        dw = apply_L21(st.g.values, sys) + apply_L22(st.w.values, sys)
        return dg, dw
    grid = sys.grid
    Ng, Nw = _explicit_terms(st.g.values, st.w.values, sys, False, sys.dealias)
    return (grid.laplacian(st.g.values) + Ng,
            grid.laplacian(st.w.values) / sys.params.eps + Nw)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def _imex_denominators(grid: PlanarGrid, dt: float, eps: float):
    return 1.0 + dt * grid.K2, 1.0 + dt * grid.K2 / eps


def step(st: State, sys: LinearizedSystem, cfg: EvolveConfig) -> State:
    """One IMEX-Euler step; the zero mode of g is re-projected to 0."""
    cfg.check_dt(sys.params.eps)
    grid = sys.grid
    Ng, Nw = _explicit_terms(st.g.values, st.w.values, sys, cfg.linear_only,
                             cfg.dealias)
    den_g, den_w = _imex_denominators(grid, cfg.dt, sys.params.eps)
    gh = (grid.to_spectral(st.g.values) + cfg.dt * grid.to_spectral(Ng)) / den_g
    wh = (grid.to_spectral(st.w.values) + cfg.dt * grid.to_spectral(Nw)) / den_w
    gh[0, 0] = 0.0
    g1 = grid.from_spectral(gh)
    w1 = grid.from_spectral(wh)
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(w1))):
        raise BlowUpError(cfg.dt)
    return State(Field(grid, g1), Field(grid, w1), check_mean=False)


def _record(grid, g, w, sys, traj_norms, times, mass, outer, t):
    st = State(Field(grid, g), Field(grid, w), check_mean=False)
    nv = state_norms(st, sys.params)
    for key, val in nv.as_dict().items():
        traj_norms[key].append(val)
    times.append(t)
    mass.append(grid.integrate(g))
    wl2 = grid.l2(w)
    if wl2 == 0.0:
        outer.append(0.0)
    else:
        out = np.sqrt(float(np.sum((w * w)[~grid.ball_mask(0.8 * grid.L)])) * grid.h**2)
        outer.append(out / wl2)
    return st


def _finish(grid, times, norms, mass, outer, final, stable, blowup_time):
    return Trajectory(
        times=np.asarray(times),
        norms={k: np.asarray(v) for k, v in norms.items()},
        mass_g=np.asarray(mass),
        w_outer_frac=np.asarray(outer),
        final_state=final,
        stable=stable,
        blowup_time=blowup_time,
        boundary_alarm=bool(len(outer) and np.max(outer) > 1e-6),
    )


def evolve(st0: State, sys: LinearizedSystem, cfg: EvolveConfig) -> Trajectory:
    """March the pair to t_end, recording norms every record_every steps.

    On NaN/overflow the partial trajectory is returned with the blow-up time
    and `stable = False` (float overflow during the failing step is the
    detection mechanism, so the warnings are suppressed here).
    """
    cfg.check_dt(sys.params.eps)
    grid = sys.grid
    gh = grid.to_spectral(st0.g.values)
    gh[0, 0] = 0.0
    wh = grid.to_spectral(st0.w.values)
    den_g, den_w = _imex_denominators(grid, cfg.dt, sys.params.eps)
    nsteps = int(round(cfg.t_end / cfg.dt))
    keys = ["l2k", "h1k", "hm1k", "hdots", "hdot1", "hdot2", "x_norm", "y_norm"]
    norms = {k: [] for k in keys}
    times, mass, outer = [], [], []
    g = grid.from_spectral(gh)
    w = grid.from_spectral(wh)
    final = _record(grid, g, w, sys, norms, times, mass, outer, 0.0)
    prev = None  # (Ngh, Nwh, gh, wh) for bdf2
    bdf2 = cfg.scheme == "imex-bdf2"
    with np.errstate(over="ignore", invalid="ignore"):
        for istep in range(1, nsteps + 1):
            Ng, Nw = _explicit_terms(g, w, sys, cfg.linear_only, cfg.dealias)
            Ngh, Nwh = grid.to_spectral(Ng), grid.to_spectral(Nw)
            if bdf2 and prev is not None:
                Ngh_p, Nwh_p, gh_p, wh_p = prev
                gh_new = (4.0 * gh - gh_p + 2.0 * cfg.dt * (2.0 * Ngh - Ngh_p)) / (
                    3.0 + 2.0 * cfg.dt * grid.K2)
                wh_new = (4.0 * wh - wh_p + 2.0 * cfg.dt * (2.0 * Nwh - Nwh_p)) / (
                    3.0 + 2.0 * cfg.dt * grid.K2 / sys.params.eps)
            else:
                gh_new = (gh + cfg.dt * Ngh) / den_g
                wh_new = (wh + cfg.dt * Nwh) / den_w
            if bdf2:
                prev = (Ngh, Nwh, gh, wh)
            gh, wh = gh_new, wh_new
            gh[0, 0] = 0.0
            g = grid.from_spectral(gh)
            w = grid.from_spectral(wh)
            t = istep * cfg.dt
            if not (np.all(np.isfinite(g)) and np.all(np.isfinite(w))):
                return _finish(grid, times, norms, mass, outer, final, False, t)
            if istep % cfg.record_every == 0 or istep == nsteps:
                final = _record(grid, g, w, sys, norms, times, mass, outer, t)
    return _finish(grid, times, norms, mass, outer, final, True, None)


def evolve_density_only(g0: np.ndarray, sys: LinearizedSystem,
                        cfg: EvolveConfig) -> Trajectory:
    """Linear evolution of the density block alone: dg/dt = L11 g."""
    grid = sys.grid
    mu = sys.params.mu
    gh = grid.to_spectral(np.asarray(g0, dtype=float))
    gh[0, 0] = 0.0
    den = 1.0 + cfg.dt * grid.K2
    nsteps = int(round(cfg.t_end / cfg.dt))
    keys = ["l2k", "h1k", "hm1k", "hdots", "hdot1", "hdot2", "x_norm", "y_norm"]
    norms = {k: [] for k in keys}
    times, mass, outer = [], [], []
    g = grid.from_spectral(gh)
    zero_w = np.zeros_like(g)
    final = _record(grid, g, zero_w, sys, norms, times, mass, outer, 0.0)
    for istep in range(1, nsteps + 1):
        vx, vy = grad_kappa_arrays(grid, g)
        fx = mu * grid.X * g - g * sys.gradPx - sys.Q * vx
        fy = mu * grid.Y * g - g * sys.gradPy - sys.Q * vy
        fxh, fyh = grid.to_spectral(fx), grid.to_spectral(fy)
        if cfg.dealias:
            fxh, fyh = fxh * grid.dealias_mask, fyh * grid.dealias_mask
        gh = (gh + cfg.dt * (1j * grid.KX * fxh + 1j * grid.KY * fyh)) / den
        gh[0, 0] = 0.0
        g = grid.from_spectral(gh)
        t = istep * cfg.dt
        if not np.all(np.isfinite(g)):
            return _finish(grid, times, norms, mass, outer, final, False, t)
        if istep % cfg.record_every == 0 or istep == nsteps:
            final = _record(grid, g, zero_w, sys, norms, times, mass, outer, t)
    return _finish(grid, times, norms, mass, outer, final, True, None)


# ---------------------------------------------------------------------------
# decay fitting and threshold search
# ---------------------------------------------------------------------------

def fit_decay(traj: Trajectory, window: tuple, quantity: str = "x_norm") -> DecayFit:
    """Least-squares line through log(norm) vs t on the window."""
    t = traj.times
    y = traj.series(quantity)
    sel = (t >= window[0]) & (t <= window[1])
    if np.count_nonzero(sel) < 3:
        raise ConfigurationError("fit window contains fewer than 3 samples")
    if np.any(y[sel] <= 0.0):
        raise ConfigurationError("nonpositive norms in fit window; fit undefined")
    ts, ys = t[sel], np.log(y[sel])
    slope, intercept = np.polyfit(ts, ys, 1)
    resid = float(np.max(np.abs(ys - (slope * ts + intercept))))
    return DecayFit(rate=float(-slope), intercept=float(intercept),
                    window=(float(window[0]), float(window[1])),
                    residual=resid, valid=bool(resid <= 0.1))


def scale_state(st: State, factor: float) -> State:
    return State(Field(st.grid, factor * st.g.values),
                 Field(st.grid, factor * st.w.values), check_mean=False)


@dataclass(frozen=True)
class ThresholdResult:
    """Empirical stability threshold along one normalized direction."""

    amp_decay: float       # largest amplitude observed to decay
    amp_grow: float        # smallest amplitude observed to grow / blow up
    status: str            # "bracketed" | "all_decay" | "all_grow"
    bisection_steps: int


def threshold_search(sys: LinearizedSystem, cfg: EvolveConfig, direction: State,
                     amp_low: float = 1e-4, amp_high: float = 50.0,
                     steps: int = 8) -> ThresholdResult:
    """Bisect the amplitude between 'decays by t_end' and 'grows or blows up'.

    The direction must be normalized (nonzero); both-endpoints-decay returns
    the upper-bound marker instead of a bracket.
    """
    from .numgrid import state_norms as _sn

    n0 = _sn(direction, sys.params).x_norm
    if n0 == 0.0:
        raise ConfigurationError("zero direction is degenerate")

    def decays(amp: float) -> bool:
        traj = evolve(scale_state(direction, amp / n0), sys, cfg)
        if not traj.stable:
            return False
        x = traj.series("x_norm")
        return bool(x[-1] < x[0])

    lo_ok = decays(amp_low)
    hi_ok = decays(amp_high)
    if lo_ok and hi_ok:
        return ThresholdResult(amp_decay=amp_high, amp_grow=np.inf,
                               status="all_decay", bisection_steps=0)
    if not lo_ok:
        return ThresholdResult(amp_decay=0.0, amp_grow=amp_low,
                               status="all_grow", bisection_steps=0)
    lo, hi = amp_low, amp_high
    for _ in range(steps):
        mid = np.sqrt(lo * hi)
        if decays(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(amp_decay=lo, amp_grow=hi, status="bracketed",
                           bisection_steps=steps)


# ---------------------------------------------------------------------------
# seeded initial data
# ---------------------------------------------------------------------------

def make_initial_state(grid: PlanarGrid, params, seed: int, amplitude: float,
                       radial: bool = False, n_blobs: int = 3,
                       width_range: tuple = (0.6, 1.0)) -> State:
    """Seeded Gaussian-mixture pair, g projected to mean zero, with a
    symmetry-breaking dipole component unless `radial`; X-normalized to the
    requested amplitude.

    Widths sit at the confinement scale ~1/sqrt(mu); they must stay narrow
    enough that the weighted norms see no box-truncation mass.
    """
    rng = np.random.default_rng(seed)
    X, Y, R2 = grid.X, grid.Y, grid.R2

    def mixture():
        f = np.zeros_like(X)
        for _ in range(n_blobs):
            cx = cy = 0.0
            if not radial:
                cx, cy = rng.uniform(-0.1 * grid.L, 0.1 * grid.L, 2)
            sig = rng.uniform(*width_range)
            f += rng.uniform(-1, 1) * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2)
                                             / (2 * sig**2))
        return f

    g = mixture()
    w = mixture()
    if not radial:
        g = g + 0.5 * X * np.exp(-R2 / 2.0)  # dipole: breaks radial symmetry
    ref = np.exp(-R2 / 2.0)
    g = g - (np.sum(g) / np.sum(ref)) * ref
    st = State(Field(grid, g), Field(grid, w), check_mean=False)
    x0 = state_norms(st, params).x_norm
    return scale_state(st, amplitude / x0)
