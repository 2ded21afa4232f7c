"""
The four blocks of the linearized operator, their quadratic forms and exact
identities, the bounded-perturbation splitting, cross-block bounds, and the
angular-harmonic reduction with dense eigenvalue computation.

Planar operator applications are pseudo-spectral: derivatives and the
potential convolution act as Fourier multipliers, coefficient products are
formed in physical space (2/3-rule dealiased), and divergence-form terms are
assembled as fluxes so that the discrete mean of the density block output
vanishes exactly.

The angular-harmonic matrices discretize, for g = u(r) e^{i m theta},

    Lambda_m u = (1/r) d/dr ( r [ u' + (mu r - P') u - Q phi_m' ] )
                 - (m^2/r^2) (u - Q phi_m),

with -lap_m phi_m = u, on a staggered uniform grid (cell centers (i+1/2) h)
in conservative flux form: the r = 0 face flux is structurally zero and the
outer face carries a zero-flux condition, so the discrete mass functional is
annihilated exactly and the mass eigenvalue of the m = 0 block is exactly zero.
The Poisson sub-solve uses the free-space kernel in quadrature form, which
encodes the r^m / r^-m endpoint behavior exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundReport
from .fieldops import (
    SampleBank,
    grad_kappa_arrays,
    grad_kappa_contract_arrays,
)
from .numgrid import (
    ConfigurationError,
    Field,
    ModelParams,
    PlanarGrid,
    RadialGrid,
    make_radial_grid,
    min_r_max,
    weighted_norms,
)
from .profiles import RadialProfile, lift_to_plane, solve_profile


def smooth_bump(t: np.ndarray) -> np.ndarray:
    """C-infinity transition: 1 for t <= 1, 0 for t >= 2."""
    t = np.asarray(t, dtype=float)

    def eta(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    a = eta(2.0 - t)
    b = eta(t - 1.0)
    with np.errstate(invalid="ignore"):
        chi = np.where(t <= 1.0, 1.0, np.where(t >= 2.0, 0.0, a / (a + b)))
    return chi


@dataclass
class LinearizedSystem:
    """Frozen coefficient data for the linearized operator at one (mu, eps):
    the steady profile, its planar lift, and the splitting constants."""

    params: ModelParams
    grid: PlanarGrid
    prof: RadialProfile
    Q: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    gradPx: np.ndarray = field(repr=False)
    gradPy: np.ndarray = field(repr=False)
    M: float = 0.0
    rho: float = 1.0
    dealias: bool = True

    def chi_rho(self) -> np.ndarray:
        return smooth_bump(np.sqrt(self.grid.R2) / self.rho)

    def with_splitting(self, M: float, rho: float) -> "LinearizedSystem":
        if M < 0 or rho < 1:
            raise ConfigurationError("need M >= 0 and rho >= 1")
        return LinearizedSystem(params=self.params, grid=self.grid, prof=self.prof,
                                Q=self.Q, P=self.P, gradPx=self.gradPx,
                                gradPy=self.gradPy, M=M, rho=rho,
                                dealias=self.dealias)


def default_planar_grid(mu: float, N: int = 128) -> PlanarGrid:
    """Box half-width 16/sqrt(mu): self-similar fields decay like Gaussians
    with rate mu, so this keeps boundary contamination below 1e-10."""
    return PlanarGrid(L=16.0 / np.sqrt(mu), N=N)


def dynamics_grid(mu: float, N: int = 128) -> PlanarGrid:
    """Box half-width 8/sqrt(mu) for time integration.

    The <x>^(2k)-weighted norms amplify box-boundary content by ~(1+L^2)^k,
    so evolution runs need the steady-profile core (width ~ 0.45/sqrt(mu))
    fully resolved; at N = 128 that forces the tighter box, which still
    leaves Gaussian-confined fields below 1e-8 at 0.8 L."""
    return PlanarGrid(L=8.0 / np.sqrt(mu), N=N)


def build_system(params: ModelParams, grid: PlanarGrid,
                 prof: RadialProfile | None = None,
                 radial_n: int = 4000) -> LinearizedSystem:
    """Solve (or accept) the steady profile and lift it onto the box."""
    if prof is None:
        r_max = max(np.sqrt(2.0) * grid.L * 1.02, min_r_max(params.mu))
        prof = solve_profile(params, make_radial_grid(r_max, radial_n))
    Q, P, (gPx, gPy) = lift_to_plane(prof, grid)
    return LinearizedSystem(params=params, grid=grid, prof=prof, Q=Q, P=P,
                            gradPx=gPx, gradPy=gPy)


# ---------------------------------------------------------------------------
# planar operator applications
# ---------------------------------------------------------------------------

def _maybe_mask(sys: LinearizedSystem, fh: np.ndarray) -> np.ndarray:
    return fh * sys.grid.dealias_mask if sys.dealias else fh


def apply_L11(g: np.ndarray, sys: LinearizedSystem) -> np.ndarray:
    """Density block: lap g + Div(mu x g - g grad P - Q grad kappa * g).

    Divergence form; the output has exactly zero discrete mean.
    """
    grid = sys.grid
    vx, vy = grad_kappa_arrays(grid, g)
    fx = sys.params.mu * grid.X * g - g * sys.gradPx - sys.Q * vx
    fy = sys.params.mu * grid.Y * g - g * sys.gradPy - sys.Q * vy
    div = grid.from_spectral(_maybe_mask(
        sys, 1j * grid.KX * grid.to_spectral(fx) + 1j * grid.KY * grid.to_spectral(fy)))
    return grid.laplacian(g) + div


def apply_L12(w: np.ndarray, sys: LinearizedSystem) -> np.ndarray:
    """-Div(Q grad w)."""
    grid = sys.grid
    wx, wy = grid.grad(w)
    return -grid.from_spectral(_maybe_mask(
        sys, 1j * grid.KX * grid.to_spectral(sys.Q * wx)
        + 1j * grid.KY * grid.to_spectral(sys.Q * wy)))


def apply_L21(g: np.ndarray, sys: LinearizedSystem) -> np.ndarray:
    """g + grad kappa * [ g grad P + Q grad kappa * g ]   (a scalar)."""
    grid = sys.grid
    vx, vy = grad_kappa_arrays(grid, g)
    fx = g * sys.gradPx + sys.Q * vx
    fy = g * sys.gradPy + sys.Q * vy
    if sys.dealias:
        fx, fy = grid.dealias(fx), grid.dealias(fy)
    return g + grad_kappa_contract_arrays(grid, fx, fy)


def apply_L22(w: np.ndarray, sys: LinearizedSystem) -> np.ndarray:
    """(1/eps) lap w + mu x . grad w + grad kappa * [Q grad w]."""
    grid = sys.grid
    if sys.params.eps <= 0:
        raise ConfigurationError("L22 requires eps > 0")
    wx, wy = grid.grad(w)
    fx, fy = sys.Q * wx, sys.Q * wy
    if sys.dealias:
        fx, fy = grid.dealias(fx), grid.dealias(fy)
    return (grid.laplacian(w) / sys.params.eps
            + sys.params.mu * (grid.X * wx + grid.Y * wy)
            + grad_kappa_contract_arrays(grid, fx, fy))


def apply_L11_difference(g: np.ndarray, sys_eps: LinearizedSystem,
                         sys_0: LinearizedSystem) -> np.ndarray:
    """(Lambda_eps - Lambda_0) g, used for the operator-convergence study."""
    return apply_L11(g, sys_eps) - apply_L11(g, sys_0)


# ---------------------------------------------------------------------------
# quadratic forms
# ---------------------------------------------------------------------------

def _l2k_pair(grid: PlanarGrid, a: np.ndarray, b: np.ndarray, k: float) -> float:
    return float(np.sum(a * b * grid.weight(2.0 * k))) * grid.h**2


def _hdot_pair(grid: PlanarGrid, a: np.ndarray, b: np.ndarray, sigma: float) -> float:
    mult = np.ones_like(grid.K2) if sigma == 0.0 else grid.K2**sigma
    return float(np.real(np.sum(mult * grid.to_spectral(a)
                                * np.conj(grid.to_spectral(b)))) * grid.dxi**2)


def quad_form_L11(g: np.ndarray, sys: LinearizedSystem, rho0: float) -> dict:
    """<L11 g, g>_{L2_k} with the dissipativity comparison terms.

    Returns the form value, mu(k-2)||g||^2_{L2_k}, (1/2)||grad g||^2_{L2_k},
    ||g||^2_{L2(B_rho0)}, and the local constant those terms require.
    """
    grid, p = sys.grid, sys.params
    val = _l2k_pair(grid, apply_L11(g, sys), g, p.k)
    l2k, h1k, _ = weighted_norms(Field(grid, g), p.k)
    grad2k = h1k**2 - l2k**2
    local = float(np.sum(g * g * grid.ball_mask(rho0))) * grid.h**2
    need = val + p.mu * (p.k - 2.0) * l2k**2 + 0.5 * grad2k
    return {
        "value": val,
        "decay_term": p.mu * (p.k - 2.0) * l2k**2,
        "grad_term": 0.5 * grad2k,
        "local_l2sq": local,
        "required_C0": need / local if local > 0 else 0.0,
    }


def quad_form_Bsplit(g: np.ndarray, sys: LinearizedSystem) -> dict:
    """<(L11 - M chi_rho) g, g>_{L2_k} against its dissipativity bound."""
    if sys.M <= 0.0:
        raise ConfigurationError("splitting constants not configured (M <= 0)")
    grid, p = sys.grid, sys.params
    Bg = apply_L11(g, sys) - sys.M * sys.chi_rho() * g
    lhs = _l2k_pair(grid, Bg, g, p.k)
    l2k, h1k, _ = weighted_norms(Field(grid, g), p.k)
    rhs = -p.mu * (p.k - 2.0) * l2k**2 - 0.5 * (h1k**2 - l2k**2)
    return {"lhs": lhs, "rhs": rhs, "h1k_sq": h1k**2}


def quad_form_L22_H1(w: np.ndarray, sys: LinearizedSystem) -> tuple[float, float]:
    """Both sides of the exact Hdot^1 dissipativity identity.

    lhs: operator application paired in Hdot^1;
    rhs: -(1/eps)||w||^2_{Hdot^2} - (2pi)^2 || Q^(1/2) grad w ||^2_{L2}.
    """
    grid = sys.grid
    lhs = _hdot_pair(grid, apply_L22(w, sys), w, 1.0)
    wh = grid.to_spectral(w)
    hdot2_sq = float(np.sum(grid.K2**2 * np.abs(wh) ** 2) * grid.dxi**2)
    wx, wy = grid.grad(w)
    qgrad = float(np.sum(sys.Q * (wx**2 + wy**2))) * grid.h**2
    rhs = -hdot2_sq / sys.params.eps - (2.0 * np.pi) ** 2 * qgrad
    return lhs, rhs


def quad_form_L22_Hs(w: np.ndarray, sys: LinearizedSystem, s: float) -> dict:
    """<L22 w, w>_{Hdot^s} plus the exact identity for its drift-diffusion
    part, -(1/eps)||w||^2_{Hdot^(1+s)} - mu(1-s)||w||^2_{Hdot^s}."""
    if not 0 < s < 1:
        raise ConfigurationError(f"s must be in (0,1), got {s}")
    grid, p = sys.grid, sys.params
    value = _hdot_pair(grid, apply_L22(w, sys), w, s)
    wx, wy = grid.grad(w)
    lin = grid.laplacian(w) / p.eps + p.mu * (grid.X * wx + grid.Y * wy)
    linear_lhs = _hdot_pair(grid, lin, w, s)
    wh = grid.to_spectral(w)
    hs_sq = float(np.sum(grid.K2**s * np.abs(wh) ** 2) * grid.dxi**2)
    h1s_sq = float(np.sum(grid.K2 ** (1.0 + s) * np.abs(wh) ** 2) * grid.dxi**2)
    linear_rhs = -h1s_sq / p.eps - p.mu * (1.0 - s) * hs_sq
    return {
        "value": value,
        "linear_lhs": linear_lhs,
        "linear_rhs": linear_rhs,
        "hs_sq": hs_sq,
        "h1s_sq": h1s_sq,
    }


def check_cross_block_bounds(bank: SampleBank, sys: LinearizedSystem,
                             s: float, k: float) -> BoundReport:
    """Empirical constants for the off-diagonal block bounds.

    L12: H^-1_k norm against the Hdot^s / Hdot^2 interpolation product with
    theta = (1-s)/(2-s); L21: Hdot^s + Hdot^1 against H^1_k (mean-zero g).
    """
    grid = sys.grid
    theta = (1.0 - s) / (2.0 - s)
    gbank = bank if bank.mean_zero else SampleBank(
        seed=bank.seed, count=bank.count, n_blobs=bank.n_blobs,
        width_range=bank.width_range, center_frac=bank.center_frac,
        mean_zero=True, radial=bank.radial, envelope_frac=bank.envelope_frac)
    r12, r21 = [], []
    for w in bank.fields(grid):
        f = Field(grid, w)
        from .numgrid import homogeneous_norm
        hs = homogeneous_norm(f, s)
        h2 = homogeneous_norm(f, 2.0)
        if hs == 0.0:
            r12.append(0.0)
            continue
        _, _, hm1k = weighted_norms(Field(grid, apply_L12(w, sys)), k)
        r12.append(hm1k / (hs ** (1 - theta) * h2**theta))
    for g in gbank.fields(grid):
        _, h1k, _ = weighted_norms(Field(grid, g), k)
        if h1k == 0.0:
            r21.append(0.0)
            continue
        out = Field(grid, apply_L21(g, sys))
        from .numgrid import homogeneous_norm
        r21.append((homogeneous_norm(out, s) + homogeneous_norm(out, 1.0)) / h1k)
    consts = {"L12_hm1k": float(np.max(r12)), "L21_hs_h1": float(np.max(r21))}
    return BoundReport(
        ineq="cross_block_bounds",
        passed=bool(all(np.isfinite(v) for v in consts.values())),
        worst_margin=min(consts.values()),
        worst_location=0.0,
        fitted_constants=consts,
        details={"s": s, "k": k, "theta": theta, "count": bank.count},
    )


def l11_eps_convergence(bank: SampleBank, params: ModelParams, grid: PlanarGrid,
                        eps_list, radial_n: int = 4000) -> dict:
    """Operator-norm surrogate for Lambda_eps -> Lambda_0: the bank max of
    ||(Lambda_eps - Lambda_0) g||_{L2_k} / ||g||_{H1_k} per eps, with its
    log-log slope."""
    sys0 = build_system(params.replace(eps=0.0), grid, radial_n=radial_n)
    fields = bank.fields(grid)
    ratios = []
    for eps in eps_list:
        syse = build_system(params.replace(eps=float(eps)), grid, radial_n=radial_n)
        worst = 0.0
        for g in fields:
            _, h1k, _ = weighted_norms(Field(grid, g), params.k)
            if h1k == 0.0:
                continue
            d = apply_L11_difference(g, syse, sys0)
            l2k, _, _ = weighted_norms(Field(grid, d), params.k)
            worst = max(worst, l2k / h1k)
        ratios.append(worst)
    slope = float(np.polyfit(np.log(eps_list), np.log(ratios), 1)[0])
    return {"eps_list": list(map(float, eps_list)), "ratios": ratios, "slope": slope}


# ---------------------------------------------------------------------------
# angular-harmonic reduction
# ---------------------------------------------------------------------------

@dataclass
class OperatorMatrix:
    """Dense matrix of one angular block on staggered cell centers.

    `matrix` acts on raw radial values u; `conjugated()` returns the
    similarity transform by <r>^k under which the weighted inner product is
    the plain quadrature pairing.  `mass_functional` is the exact discrete
    conserved functional of the m = 0 block (cell measures r_i h).
    """

    m: int
    params: ModelParams
    r: np.ndarray = field(repr=False)
    h: float
    matrix: np.ndarray = field(repr=False)
    mass_deflated: bool = False

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def weight(self) -> np.ndarray:
        return (1.0 + self.r**2) ** (self.params.k / 2.0)

    def conjugated(self) -> np.ndarray:
        w = self.weight()
        return (w[:, None] * self.matrix) / w[None, :]

    def mass_functional(self) -> np.ndarray:
        return self.h * self.r

    def column_sums(self) -> np.ndarray:
        """Quadrature-weighted column sums (zero for m = 0, divergence form)."""
        return self.mass_functional() @ self.matrix


def _mode_coefficients(m: int, prof: RadialProfile, mu: float, r_max: float, n: int):
    h = r_max / n
    rc = (np.arange(n) + 0.5) * h
    rf = np.arange(n + 1) * h
    return h, rc, rf, prof.spline("dP")(rf), prof.spline("Q")(rf), prof.spline("Q")(rc)


def assemble_mode_operator(m: int, sys: LinearizedSystem,
                           grid: RadialGrid) -> OperatorMatrix:
    """Dense matrix of the density block restricted to the angular mode m.

    Conservative flux discretization on cell centers of the given grid's
    (r_max, n); regularity at r = 0 and decay at r_max enter through the
    structurally zero inner face flux, the outer zero-flux condition, and the
    free-space Poisson kernel.
    """
    if m < 0:
        raise ConfigurationError("use m >= 0 (negative modes by symmetry)")
    mu = sys.params.mu
    n = grid.n
    h, rc, rf, Pp_f, Q_f, Q_c = _mode_coefficients(m, sys.prof, mu, grid.r_max, n)

    # face-flux matrix: interior facesj = 1..n-1 couple cells j-1, j
    A = np.zeros((n + 1, n))
    j = np.arange(1, n)
    c = 0.5 * (mu * rf[j] - Pp_f[j])
    A[j, j - 1] = -1.0 / h + c
    A[j, j] = 1.0 / h + c

    # Poisson: phi'(faces) from the free-space kernel in quadrature form
    wc = h * np.ones(n)
    Cl = np.tril(np.ones((n + 1, n)), -1) * wc[None, :]
    Cu = (1.0 - np.tril(np.ones((n + 1, n)), -1)) * wc[None, :]
    phip_f = np.zeros((n + 1, n))
    if m == 0:
        phip_f[1:, :] = -(Cl[1:, :] * rc[None, :]) / rf[1:, None]
    else:
        phip_f[1:, :] = 0.5 * (
            -(rf[1:, None] ** (-m - 1)) * (Cl[1:, :] * rc[None, :] ** (m + 1))
            + (rf[1:, None] ** (m - 1)) * (Cu[1:, :] * rc[None, :] ** (1 - m))
        )
        phip_f[0, :] = 0.0

    F = A - Q_f[:, None] * phip_f
    F[0, :] = 0.0   # r = 0 face: flux enters multiplied by r = 0
    F[n, :] = 0.0   # outer face: zero-flux closure (fields decayed)
    rfF = rf[:, None] * F
    M = (rfF[1:, :] - rfF[:-1, :]) / (rc[:, None] * h)

    if m > 0:
        # centrifugal block: -(m^2/r^2)(u - Q phi), phi at cell centers
        ClC = np.tril(np.ones((n, n)), -1) * wc[None, :] + np.diag(0.5 * wc)
        CuC = np.triu(np.ones((n, n)), 1) * wc[None, :] + np.diag(0.5 * wc)
        phi_c = (1.0 / (2 * m)) * (
            (rc[:, None] ** (-m)) * (ClC * rc[None, :] ** (m + 1))
            + (rc[:, None] ** m) * (CuC * rc[None, :] ** (1 - m))
        )
        M -= (m**2 / rc**2)[:, None] * (np.eye(n) - Q_c[:, None] * phi_c)

    if not np.all(np.isfinite(M)):
        raise ConfigurationError("non-finite entries in mode operator")
    return OperatorMatrix(m=m, params=sys.params, r=rc, h=h, matrix=M)


def apply_mode_operator(u: np.ndarray, m: int, sys: LinearizedSystem,
                        r_max: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrix-free application of the mode-m block (same discretization as
    `assemble_mode_operator`, usable at resolutions where the dense matrix
    would not fit).  Returns (cell centers, Lambda_m u)."""
    mu = sys.params.mu
    h, rc, rf, Pp_f, Q_f, Q_c = _mode_coefficients(m, sys.prof, mu, r_max, n)
    u = np.asarray(u, dtype=float)
    if u.shape != rc.shape:
        raise ConfigurationError("u must be sampled at the staggered cell centers")

    F = np.zeros(n + 1)
    j = np.arange(1, n)
    F[j] = (u[j] - u[j - 1]) / h + 0.5 * (mu * rf[j] - Pp_f[j]) * (u[j] + u[j - 1])
    # cumulative Poisson integrals at faces
    if m == 0:
        Acum = np.concatenate([[0.0], np.cumsum(h * rc * u)])
        phip = np.zeros(n + 1)
        phip[1:] = -Acum[1:] / rf[1:]
    else:
        Acum = np.concatenate([[0.0], np.cumsum(h * rc ** (m + 1) * u)])
        Bfull = np.sum(h * rc ** (1 - m) * u)
        Bcum = Bfull - np.concatenate([[0.0], np.cumsum(h * rc ** (1 - m) * u)])
        phip = np.zeros(n + 1)
        phip[1:] = 0.5 * (-(rf[1:] ** (-m - 1)) * Acum[1:]
                          + (rf[1:] ** (m - 1)) * Bcum[1:])
    F[j] -= Q_f[j] * phip[j]
    F[0] = 0.0
    F[n] = 0.0
    rfF = rf * F
    out = (rfF[1:] - rfF[:-1]) / (rc * h)
    if m > 0:
        Ac = Acum[:-1] + 0.5 * h * rc ** (m + 1) * u
        Bc = Bcum[1:] + 0.5 * h * rc ** (1 - m) * u
        phi = (rc ** (-m) * Ac + rc**m * Bc) / (2 * m)
        out -= (m**2 / rc**2) * (u - Q_c * phi)
    return rc, out


def solve_mode_poisson(u: np.ndarray, m: int, r_max: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """phi at cell centers with -lap_m phi = u (free-space kernel form).

    For m = 0 the potential is only defined up to a constant; use
    `solve_mode_poisson_grad` there instead.
    """
    if m < 1:
        raise ConfigurationError("potential values only for m >= 1")
    h = r_max / n
    rc = (np.arange(n) + 0.5) * h
    u = np.asarray(u, dtype=float)
    Acum = np.concatenate([[0.0], np.cumsum(h * rc ** (m + 1) * u)])
    Bfull = np.sum(h * rc ** (1 - m) * u)
    Bcum = Bfull - np.concatenate([[0.0], np.cumsum(h * rc ** (1 - m) * u)])
    Ac = Acum[:-1] + 0.5 * h * rc ** (m + 1) * u
    Bc = Bcum[1:] + 0.5 * h * rc ** (1 - m) * u
    return rc, (rc ** (-m) * Ac + rc**m * Bc) / (2 * m)


def solve_mode_poisson_grad(u: np.ndarray, r_max: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """phi'(r) = -(1/r) int_0^r u tau dtau at cell centers (m = 0)."""
    h = r_max / n
    rc = (np.arange(n) + 0.5) * h
    Acum = np.concatenate([[0.0], np.cumsum(h * rc * np.asarray(u, dtype=float))])
    Ac = Acum[:-1] + 0.5 * h * rc * u
    return rc, -Ac / rc


@dataclass
class SpectrumReport:
    """Eigenvalues of one angular block, sorted by descending real part."""

    m: int
    eigenvalues: np.ndarray
    gap: float
    deflated: bool
    n: int
    r_max: float

    def as_rows(self) -> list:
        return [(self.m, float(z.real), float(z.imag)) for z in self.eigenvalues]


def spectrum(opm: OperatorMatrix, deflate: bool = False) -> SpectrumReport:
    """All eigenvalues of the (conjugated) dense block.

    Mass deflation (m = 0 only) restricts to the invariant complement of the
    discrete mass functional via a Householder reflection; the removed
    direction carries the exact zero eigenvalue.
    """
    Mt = opm.conjugated()
    if deflate:
        if opm.m != 0:
            raise ConfigurationError("mass deflation only applies to m = 0")
        v = opm.mass_functional() / opm.weight()
        v = v / np.linalg.norm(v)
        e = np.zeros_like(v)
        e[0] = 1.0
        u = v - e
        nu = np.linalg.norm(u)
        if nu > 1e-14:
            u /= nu
            H = np.eye(len(v)) - 2.0 * np.outer(u, u)
            Mt = H @ Mt @ H
        Mt = Mt[1:, 1:]
    ev = np.linalg.eigvals(Mt)
    ev = ev[np.argsort(-ev.real)]
    if deflate or opm.m > 0:
        gap = -float(ev[0].real)
    else:
        gap = -float(ev[1].real)
    return SpectrumReport(m=opm.m, eigenvalues=ev, gap=gap, deflated=deflate,
                          n=opm.n, r_max=float(opm.r[-1] + opm.h / 2.0))


def linear_semigroup_decay(sys: LinearizedSystem, initial, t_end: float,
                           dt: float, mode: str = "L11-only",
                           window: tuple | None = None):
    """Integrate the linear system and log-linear fit the norm decay.

    mode "L11-only" evolves the density block alone and fits its L2_k norm;
    mode "coupled" evolves the full linear pair and fits the X norm.
    Returns None for an identically zero initial state (fit skipped).
    """
    from . import dynamics

    cfg = dynamics.EvolveConfig(dt=dt, t_end=t_end, linear_only=True,
                                record_every=max(1, int(round(0.05 / dt))))
    if mode == "L11-only":
        g0 = initial if isinstance(initial, np.ndarray) else initial.g.values
        if np.max(np.abs(g0)) == 0.0:
            return None
        traj = dynamics.evolve_density_only(g0, sys, cfg)
        series = "l2k"
    elif mode == "coupled":
        if (np.max(np.abs(initial.g.values)) == 0.0
                and np.max(np.abs(initial.w.values)) == 0.0):
            return None
        traj = dynamics.evolve(initial, sys, cfg)
        series = "x_norm"
    else:
        raise ConfigurationError(f"unknown decay mode {mode!r}")
    if window is None:
        window = (t_end / 5.0, t_end)
    return dynamics.fit_decay(traj, window, quantity=series)
