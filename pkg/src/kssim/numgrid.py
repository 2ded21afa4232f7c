"""
Grids, discrete transforms, quadrature, and the weighted / homogeneous norms.

Conventions (fixed once, used by every module):

* Fourier transform ``fhat(xi) = int f(x) exp(-i x.xi) dx``, discretized as
  ``h^2 * fft2`` on a periodic square ``[-L, L)^2`` with wavenumbers
  ``xi_m = pi*m/L``.  Plancherel then reads
  ``||f||_{L2}^2 = (2pi)^{-2} sum |fhat|^2 dxi^2`` with ``dxi = pi/L``.
* ``||f||_{Hdot^sigma} = || |xi|^sigma fhat ||_{L2(dxi)}``, so the sigma = 0
  value is ``2pi`` times the physical L2 norm and
  ``<grad w, grad z>_{L2} = (2pi)^{-2} <w, z>_{Hdot^1}``.
* All planar fields are assumed numerically supported in ``|x| <= 0.8 L``;
  operations that integrate against the unbounded coordinate x are only
  meaningful on such fields.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid grid or model parameters."""


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: drift rate, time-scale, weight exponent, Sobolev
    index and target decay rate."""

    mu: float
    eps: float
    k: float = 4.0
    s: float = 0.5
    lam: float = 0.0

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        if self.eps < 0:
            raise ConfigurationError(f"eps must be >= 0, got {self.eps}")
        if not self.k > 3:
            raise ConfigurationError(f"k must be > 3, got {self.k}")
        if not 0 < self.s < 1:
            raise ConfigurationError(f"s must be in (0,1), got {self.s}")
        if self.lam < 0 or self.lam >= self.mu * (1 - self.s):
            if self.lam != 0.0:
                raise ConfigurationError(
                    f"decay target lam={self.lam} must lie in [0, mu(1-s)) = "
                    f"[0, {self.mu * (1 - self.s)})"
                )

    def replace(self, **kw) -> "ModelParams":
        d = dict(mu=self.mu, eps=self.eps, k=self.k, s=self.s, lam=self.lam)
        d.update(kw)
        return ModelParams(**d)


def min_r_max(mu: float, theta: float = 0.9, floor: float = 1e-12) -> float:
    """Smallest r_max with exp(-theta*mu*r_max^2/2) below `floor`."""
    return float(np.sqrt(-2.0 * np.log(floor) / (theta * mu)))


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid on [0, r_max] with composite Simpson weights.

    Carries two weight sets: `weights` for integrals against dr and
    `weights_r` for integrals against r dr (the planar radial measure).
    """

    r_max: float
    n: int  # number of intervals; nodes = n + 1
    r: np.ndarray = field(repr=False)
    h: float
    weights: np.ndarray = field(repr=False)
    weights_r: np.ndarray = field(repr=False)

    def integrate(self, f: np.ndarray) -> float:
        """Simpson quadrature of ``int_0^r_max f(r) dr``.

        Warns when the integrand has not decayed at r_max (truncated tail).
        """
        f = np.asarray(f, dtype=float)
        if f.shape != self.r.shape:
            raise ConfigurationError("integrand shape does not match grid")
        scale = np.max(np.abs(f))
        if scale > 0 and abs(f[-1]) > 1e-8 * scale:
            warnings.warn(
                "integrand has not decayed at r_max; quadrature is truncated",
                RuntimeWarning,
                stacklevel=2,
            )
        return float(self.weights @ f)

    def integrate_r(self, f: np.ndarray) -> float:
        """Simpson quadrature of ``int_0^r_max f(r) r dr``."""
        return float(self.weights_r @ np.asarray(f, dtype=float))


def make_radial_grid(r_max: float, n: int) -> RadialGrid:
    """Uniform grid with n intervals (n even, >= 16) and composite
    Newton-Cotes weights: Boole (order 6) when n is a multiple of 4,
    Simpson otherwise.  The higher-order default is what lets n = 4000
    reach 1e-12 absolute error on Gaussian-type integrands."""
    if r_max <= 0:
        raise ConfigurationError(f"r_max must be positive, got {r_max}")
    if n < 16:
        raise ConfigurationError(f"n must be >= 16, got {n}")
    if n % 2 != 0:
        raise ConfigurationError(f"n must be even for composite weights, got {n}")
    r = np.linspace(0.0, r_max, n + 1)
    h = r_max / n
    w = np.zeros(n + 1)
    if n % 4 == 0:
        pattern = np.array([7.0, 32.0, 12.0, 32.0, 7.0]) * (2.0 / 45.0)
        for start in range(0, n, 4):
            w[start:start + 5] += pattern
    else:
        w[0] = w[-1] = 1.0 / 3.0
        w[1:-1:2] = 4.0 / 3.0
        w[2:-1:2] = 2.0 / 3.0
    w *= h
    return RadialGrid(r_max=float(r_max), n=n, r=r, h=h, weights=w, weights_r=w * r)


@dataclass(frozen=True)
class PlanarGrid:
    """Periodic square grid on [-L, L)^2 with N points per side (N even)."""

    L: float
    N: int
    h: float = field(init=False)
    dxi: float = field(init=False)

    def __post_init__(self) -> None:
        if self.N % 2 != 0:
            raise ConfigurationError(f"N must be even, got {self.N}")
        if self.L <= 0:
            raise ConfigurationError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "h", 2.0 * self.L / self.N)
        object.__setattr__(self, "dxi", np.pi / self.L)
        x1 = np.arange(-self.N // 2, self.N // 2) * self.h
        X, Y = np.meshgrid(x1, x1, indexing="ij")
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)  # = pi*m/L
        KX, KY = np.meshgrid(k1, k1, indexing="ij")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "KX", KX)
        object.__setattr__(self, "KY", KY)
        object.__setattr__(self, "K2", KX**2 + KY**2)
        object.__setattr__(self, "R2", X**2 + Y**2)
        kcut = np.max(np.abs(k1)) * (2.0 / 3.0)
        object.__setattr__(
            self, "dealias_mask", (np.abs(KX) <= kcut) & (np.abs(KY) <= kcut)
        )

    # -- transforms (continuum-consistent scaling) --------------------------
    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        """fhat on the xi grid: h^2 * fft2(values)."""
        return np.fft.fft2(values) * (self.h * self.h)

    def from_spectral(self, fhat: np.ndarray) -> np.ndarray:
        """Inverse of `to_spectral`; returns the real part."""
        return np.real(np.fft.ifft2(fhat)) / (self.h * self.h)

    def dealias(self, values: np.ndarray) -> np.ndarray:
        """Zero the top third of modes (2/3 rule) of a physical field."""
        return self.from_spectral(self.to_spectral(values) * self.dealias_mask)

    def grad(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        fh = self.to_spectral(values)
        return self.from_spectral(1j * self.KX * fh), self.from_spectral(
            1j * self.KY * fh
        )

    def div(self, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
        return self.from_spectral(
            1j * self.KX * self.to_spectral(fx) + 1j * self.KY * self.to_spectral(fy)
        )

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return self.from_spectral(-self.K2 * self.to_spectral(values))

    # -- quadrature ----------------------------------------------------------
    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values)) * self.h * self.h

    def l2(self, values: np.ndarray) -> float:
        return float(np.sqrt(np.sum(values * values) * self.h * self.h))

    def lp(self, values: np.ndarray, p: float) -> float:
        return float((np.sum(np.abs(values) ** p) * self.h * self.h) ** (1.0 / p))

    def weight(self, k: float) -> np.ndarray:
        """<x>^k = (1 + |x|^2)^(k/2) on the nodes."""
        return (1.0 + self.R2) ** (k / 2.0)

    def ball_mask(self, radius: float) -> np.ndarray:
        return self.R2 <= radius * radius


class Field:
    """Real scalar field on a planar grid with a write-once spectral cache."""

    __slots__ = ("grid", "values", "_hat")

    def __init__(self, grid: PlanarGrid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.N, grid.N):
            raise ConfigurationError("field shape does not match grid")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("field values must be finite")
        self.grid = grid
        self.values = values
        self._hat = None

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            self._hat = self.grid.to_spectral(self.values)
        return self._hat

    def mean(self) -> float:
        return self.grid.integrate(self.values)

    @staticmethod
    def zero(grid: PlanarGrid) -> "Field":
        return Field(grid, np.zeros((grid.N, grid.N)))


def project_mean_zero(grid: PlanarGrid, values: np.ndarray) -> np.ndarray:
    """Zero the constant Fourier mode (the discrete mean)."""
    fh = np.fft.fft2(values)
    fh[0, 0] = 0.0
    return np.real(np.fft.ifft2(fh))


class State:
    """Perturbation pair (g, w); g is required to have zero mean."""

    __slots__ = ("g", "w")

    def __init__(self, g: Field, w: Field, check_mean: bool = True):
        if g.grid is not w.grid:
            raise ConfigurationError("g and w must share a grid")
        if check_mean and abs(g.mean()) > 1e-12 * max(1.0, np.max(np.abs(g.values))):
            raise ConfigurationError(f"g must have zero mean, got {g.mean():.3e}")
        self.g = g
        self.w = w

    @property
    def grid(self) -> PlanarGrid:
        return self.g.grid

    @staticmethod
    def zero(grid: PlanarGrid) -> "State":
        return State(Field.zero(grid), Field.zero(grid))


@dataclass(frozen=True)
class NormVector:
    """All norms tracked for a state: weighted norms of g, homogeneous norms
    of w, and the composite X / Y norms."""

    l2k: float
    h1k: float
    hm1k: float
    hdots: float
    hdot1: float
    hdot2: float
    x_norm: float
    y_norm: float

    def as_dict(self) -> dict:
        return {
            "l2k": self.l2k,
            "h1k": self.h1k,
            "hm1k": self.hm1k,
            "hdots": self.hdots,
            "hdot1": self.hdot1,
            "hdot2": self.hdot2,
            "x_norm": self.x_norm,
            "y_norm": self.y_norm,
        }


def weighted_norms(f: Field, k: float) -> tuple[float, float, float]:
    """(L2_k, H1_k, H^-1_k) norms of f.

    H^-1_k is computed through the Fourier-multiplier formula for
    ``|| <x>^k f ||_{H^-1}``, not as a sup over test functions.
    """
    if k < 0:
        raise ConfigurationError(f"k must be >= 0, got {k}")
    g = f.grid
    wgt = g.weight(k)
    wf = wgt * f.values
    l2k = g.l2(wf)
    fx, fy = g.grad(f.values)
    h1k = float(np.sqrt(l2k**2 + g.l2(wgt * fx) ** 2 + g.l2(wgt * fy) ** 2))
    wfh = g.to_spectral(wf)
    hm1k = float(
        np.sqrt(np.sum(np.abs(wfh) ** 2 / (1.0 + g.K2)) * g.dxi**2) / (2.0 * np.pi)
    )
    return l2k, h1k, hm1k


def homogeneous_norm(f: Field, sigma: float) -> float:
    """|| |xi|^sigma fhat ||_{L2(dxi)}; sigma in [0, 2]."""
    if not 0.0 <= sigma <= 2.0:
        raise ConfigurationError(f"sigma must lie in [0, 2], got {sigma}")
    g = f.grid
    if sigma == 0.0:
        mult = np.ones_like(g.K2)
    else:
        mult = g.K2**sigma
    return float(np.sqrt(np.sum(mult * np.abs(f.hat) ** 2) * g.dxi**2))


def homogeneous_pairing(u: Field, v: Field, sigma: float) -> float:
    """<u, v>_{Hdot^sigma} = sum |xi|^(2 sigma) uhat conj(vhat) dxi^2."""
    g = u.grid
    mult = np.ones_like(g.K2) if sigma == 0.0 else g.K2**sigma
    return float(np.real(np.sum(mult * u.hat * np.conj(v.hat))) * g.dxi**2)


def state_norms(st: State, p: ModelParams) -> NormVector:
    """Every tracked norm of (g, w); X and Y composed as
    ``X = L2_k(g) + Hdot^s(w) + Hdot^1(w)``,
    ``Y = H1_k(g) + Hdot^s(w) + Hdot^2(w)``."""
    l2k, h1k, hm1k = weighted_norms(st.g, p.k)
    hdots = homogeneous_norm(st.w, p.s)
    hdot1 = homogeneous_norm(st.w, 1.0)
    hdot2 = homogeneous_norm(st.w, 2.0)
    return NormVector(
        l2k=l2k,
        h1k=h1k,
        hm1k=hm1k,
        hdots=hdots,
        hdot1=hdot1,
        hdot2=hdot2,
        x_norm=l2k + hdots + hdot1,
        y_norm=h1k + hdots + hdot2,
    )
