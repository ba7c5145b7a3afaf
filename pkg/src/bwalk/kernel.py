"""Heavy-tailed symmetric jump kernels on Z^d (d = 1, 2).

The jump law is a pure power law at every nonzero site,

    a(z) = C * a0(z/|z|) / |z|**(d + alpha),    a(0) = 0,

with ``C`` fixed by total mass one.  The kernel keeps an explicit table for
``0 < |z| <= R`` and handles everything beyond ``R`` analytically: the tail
mass, the tail part of the characteristic function, and the tail branch of
the sampler.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import integrate, interpolate, special

__all__ = [
    "AngularProfile",
    "JumpKernel",
    "SamplerTables",
    "build_kernel",
    "kernel_symbol",
    "periodized_kernel",
    "grid_symbol",
    "apply_generator",
    "sample_jump",
    "sample_jumps",
    "radial_cdf",
    "write_kernel_csv",
]

TWO_PI = 2.0 * math.pi
# Lattice coordinates are int64; jumps beyond 2**53 lose exactness in float64.
JUMP_CAP = float(2**53)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True, eq=False)
class AngularProfile:
    """Direction dependence a0 of the tail.

    A single value means a constant profile.  For d = 2 a tabulated profile
    lists a0 at the ``N`` equally spaced angles ``2*pi*j/N`` and is linearly
    interpolated (periodically) in between.
    """

    d: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.atleast_1d(np.asarray(self.values, dtype=float)).copy()
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("angular profile must be a non-empty 1-d table")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
            raise ValueError("angular profile must be strictly positive")
        if vals.size > 1:
            if self.d == 1:
                raise ValueError("a symmetric kernel in d=1 has a constant profile")
            n = vals.size
            if n % 2:
                raise ValueError("tabulated profile needs an even number of angles")
            half = n // 2
            if not np.allclose(vals[:half], vals[half:], rtol=1e-12, atol=0.0):
                raise ValueError("angular profile must be even: a0(-u) = a0(u)")
            vals[half:] = vals[:half]
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, d: int, value: float = 1.0) -> "AngularProfile":
        return cls(d, np.array([value], dtype=float))

    @classmethod
    def tabulated(cls, values) -> "AngularProfile":
        return cls(2, np.asarray(values, dtype=float))

    @property
    def is_constant(self) -> bool:
        return self.values.size == 1

    @property
    def lower_bound(self) -> float:
        return float(self.values.min())

    @property
    def nodes(self) -> np.ndarray:
        n = self.values.size
        return TWO_PI * np.arange(n) / n

    def at_angle(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.is_constant:
            return np.full(theta.shape, self.values[0])
        nodes = self.nodes
        return np.interp(np.mod(theta, TWO_PI), np.append(nodes, TWO_PI),
                         np.append(self.values, self.values[0]))

    def at(self, z):
        """a0 at the direction of lattice vectors ``z`` with shape (..., d)."""
        z = np.asarray(z)
        if self.d == 1 or self.is_constant:
            return np.full(z.shape[:-1], self.values[0])
        return self.at_angle(np.arctan2(z[..., 1], z[..., 0]))

    def sphere_mass(self) -> float:
        """Integral of a0 over the unit sphere (two points for d = 1)."""
        if self.d == 1:
            return 2.0 * self.values[0]
        # trapezoid is exact for the piecewise linear interpolant
        return float(TWO_PI * self.values.mean())

    def breakpoints(self) -> np.ndarray:
        if self.is_constant:
            return np.empty(0)
        return self.nodes


def _angular_quad(func, breaks, order=None):
    """Integrate a vectorized ``func(theta)`` over [0, 2*pi) piecewise."""
    x, w = (_GL_X, _GL_W) if order is None else np.polynomial.legendre.leggauss(order)
    edges = np.unique(np.concatenate([[0.0, TWO_PI], np.mod(breaks, TWO_PI)]))
    lo, hi = edges[:-1], edges[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    theta = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return float(np.dot(weights, func(theta)))


_SQUARE_CORNERS = np.pi / 4 + np.pi / 2 * np.arange(4)


def _square_radius(theta, h):
    """Distance from the origin to the boundary of the square [-h, h]^2."""
    return h / np.maximum(np.abs(np.cos(theta)), np.abs(np.sin(theta)))


def _outside_square_mass(profile, alpha, h):
    """Sum of a0(u)|z|^(-2-alpha) over lattice cells outside [-h, h]^2.

    Midpoint-rule integral with the Laplacian correction of the unit-cell
    Euler-Maclaurin expansion (profile curvature neglected).
    """
    brk = np.concatenate([profile.breakpoints(), _SQUARE_CORNERS])

    def integrand(th):
        rho = _square_radius(th, h)
        a0 = profile.at_angle(th)
        return a0 * (rho ** (-alpha) / alpha - (2.0 + alpha) / 24.0 * rho ** (-2.0 - alpha))

    return _angular_quad(integrand, brk)


@dataclass(frozen=True, eq=False)
class JumpKernel:
    """Immutable lattice jump law; see :func:`build_kernel`."""

    d: int
    alpha: float
    profile: AngularProfile
    R: int
    C: float
    offsets: np.ndarray
    pmf: np.ndarray
    p_tail: float
    norm_error: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def core_mass(self) -> float:
        return float(math.fsum(self.pmf))

    def tail_coefficient(self, z):
        """c(u) = C * a0(u), the coefficient of |z|^(-d-alpha)."""
        return self.C * self.profile.at(np.asarray(z))

    def prob(self, z):
        """a(z) for lattice vectors z of shape (..., d); exact symmetry."""
        z = np.asarray(z, dtype=np.int64)
        if self.d == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
        zc = z.copy()
        if self.d == 2:
            # evaluate on a canonical half plane so that a(-z) == a(z) bitwise
            flip = (zc[..., 0] < 0) | ((zc[..., 0] == 0) & (zc[..., 1] < 0))
            zc[flip] = -zc[flip]
        r = np.sqrt(np.sum(zc.astype(float) ** 2, axis=-1))
        with np.errstate(divide="ignore"):
            out = self.C * self.profile.at(zc) * r ** (-(self.d + self.alpha))
        return np.where(r > 0, out, 0.0)

    @property
    def sampler_bias_bound(self) -> float:
        """Upper bound on total-variation bias of :func:`sample_jump`."""
        c_max = self.C * float(self.profile.values.max())
        if self.d == 1:
            cap = 2.0 * c_max * JUMP_CAP ** (-self.alpha) / self.alpha
            return cap
        cap = TWO_PI * c_max * JUMP_CAP ** (-self.alpha) / self.alpha
        a = self.alpha
        cell = (2.0 + a) * (3.0 + a) / (24.0 * (self.R - 1.0) ** 2) * self.p_tail
        return cap + cell

    def sampler_tables(self) -> "SamplerTables":
        if "sampler" not in self._cache:
            self._cache["sampler"] = SamplerTables.from_kernel(self)
        return self._cache["sampler"]


def build_kernel(d: int, alpha: float, profile: AngularProfile | None = None,
                 R: int = 64) -> JumpKernel:
    """Build the normalized pure power-law kernel.

    ``R`` is the radius of the explicit pmf table; mass beyond it is kept
    as ``p_tail`` and computed analytically (Hurwitz zeta in d = 1, lattice
    sum plus a corrected midpoint integral in d = 2).
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if d not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {d}")
    if int(R) != R or R < 4:
        raise ValueError(f"truncation radius must be an integer >= 4, got {R}")
    R = int(R)
    if profile is None:
        profile = AngularProfile.constant(d)
    if not isinstance(profile, AngularProfile):
        profile = AngularProfile(d, np.asarray(profile, dtype=float))
    if profile.d != d:
        raise ValueError("angular profile dimension does not match d")
    s = d + alpha

    if d == 1:
        a0 = profile.values[0]
        C = 1.0 / (2.0 * a0 * special.zeta(1.0 + alpha))
        k = np.arange(1, R + 1, dtype=np.int64)
        offsets = np.concatenate([-k[::-1], k])[:, None]
        half = C * a0 * k.astype(float) ** (-s)
        pmf = np.concatenate([half[::-1], half])
        p_tail = 2.0 * C * a0 * special.zeta(1.0 + alpha, R + 1.0)
        norm_error = 0.0
    else:
        S = max(2 * R, 256)
        ax = np.arange(-S, S + 1)
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        Z = np.stack([X.ravel(), Y.ravel()], axis=-1)
        r2 = np.sum(Z * Z, axis=-1)
        Z, r2 = Z[r2 > 0], r2[r2 > 0]
        proto = JumpKernel(d, alpha, profile, R, 1.0, np.empty((0, 2), np.int64),
                           np.empty(0), 0.0)
        raw = proto.prob(Z)
        outside = _outside_square_mass(profile, alpha, S + 0.5)
        total = math.fsum(raw) + outside
        C = 1.0 / total
        core = r2 <= R * R
        offsets = Z[core].astype(np.int64)
        pmf = C * raw[core]
        p_tail = C * (math.fsum(raw[~core]) + outside)
        # next Euler-Maclaurin order relative to the corrected remainder
        norm_error = C * outside * (2.0 + alpha) * (4.0 + alpha) / (S + 0.5) ** 4

    pmf.setflags(write=False)
    offsets.setflags(write=False)
    return JumpKernel(d, alpha, profile, R, float(C), offsets, pmf, float(p_tail),
                      float(norm_error))


# --------------------------------------------------------------------------
# characteristic function


def _reduce(sigma):
    """Map to [-pi, pi]; values already there pass through unrounded."""
    sigma = np.asarray(sigma, dtype=float)
    return np.where(np.abs(sigma) <= math.pi, sigma, np.mod(sigma + math.pi, TWO_PI) - math.pi)


SMALL_SIGMA = 1e-6


def _tail_cos_sum_1d(sigma: float, s: float, R: int):
    """sum_{k > R} cos(k sigma) k^(-s), via the Lerch integral representation.

    Below |sigma| = SMALL_SIGMA the integrand peaks on a scale the quadrature
    cannot see; there the tail is zeta(s, R+1) minus the midpoint
    Euler-Maclaurin form of sum (1 - cos k sigma) k^(-s).
    """
    if sigma == 0.0:
        return float(special.zeta(s, R + 1.0)), 0.0
    if abs(sigma) < SMALL_SIGMA:
        alpha, a = s - 1.0, R + 0.5
        gap = (abs(sigma) ** alpha * _h_tail(a * abs(sigma), alpha)
               + sigma * sigma * (1.0 - alpha) * a ** (-alpha) / 48.0)
        # neglected Euler-Maclaurin terms are O(sigma^2 R^(-2-alpha))
        return float(special.zeta(s, R + 1.0)) - gap, sigma * sigma * a ** (-2.0 - alpha)
    v = R + 1.0
    half = math.sin(0.5 * sigma)
    c_r = math.cos(R * sigma)
    shift = -2.0 * math.sin((2 * R + 1) * 0.5 * sigma) * half

    def f(u):
        t = u / v
        em = math.expm1(-t)
        num = shift - em * c_r
        den = em * em + 4.0 * math.exp(-t) * half * half
        return t ** (s - 1.0) * math.exp(-u) * num / den

    pts = sorted({min(max(v * abs(sigma), 1e-12), 40.0), 1.0, 10.0})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, 0.0, 80.0, points=pts, limit=400,
                                  epsabs=1e-16, epsrel=1e-13)
    scale = 1.0 / (v * special.gamma(s))
    # e^{-80} truncation is far below double precision of the result
    return val * scale, err * scale


def _osc_tail(w, s):
    """Re int_w^inf u^(-s) e^(iu) du by its asymptotic series (w >= 40).

    Repeated integration by parts.  Terms shrink until k ~ w and the
    smallest one is of order e^(-w), below double precision for w >= 40;
    summation stops there or at 1e-17 relative, whichever comes first.
    """
    term = 1j * w ** (-s)
    total = term
    k = 0
    while abs(term) > 1e-17 * abs(total):
        nxt = term * (-1j * (s + k) / w)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        k += 1
    return (total * complex(math.cos(w), math.sin(w))).real


def _h_tail(w, alpha):
    """int_w^inf u^(-1-alpha) (1 - cos u) du for w > 0."""
    if w >= 40.0:
        return w ** (-alpha) / alpha - _osc_tail(w, 1.0 + alpha)
    if w < 0.01:
        # 1 - cos u = u^2/2 - u^4/24 + u^6/720 - ..., next term below w^(8-alpha)/40320
        head = (w ** (2.0 - alpha) / (2.0 * (2.0 - alpha))
                - w ** (4.0 - alpha) / (24.0 * (4.0 - alpha))
                + w ** (6.0 - alpha) / (720.0 * (6.0 - alpha)))
        return _cusp_constant(alpha) - head
    head, _ = integrate.quad(lambda u: u ** (-1.0 - alpha) * (2.0 * math.sin(0.5 * u) ** 2),
                             0.0, w, limit=200, epsabs=1e-15, epsrel=1e-12)
    return _cusp_constant(alpha) - head


def _cusp_constant(alpha):
    """int_0^inf u^(-1-alpha)(1 - cos u) du, pole-free on (0, 2)."""
    return math.pi / (2.0 * special.gamma(1.0 + alpha) * math.sin(0.5 * math.pi * alpha))


def _ring_2d(kernel):
    if "ring" not in kernel._cache:
        S = max(2 * kernel.R, 256)
        ax = np.arange(-S, S + 1)
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        Z = np.stack([X.ravel(), Y.ravel()], axis=-1)
        r2 = np.sum(Z * Z, axis=-1)
        Z = Z[r2 > kernel.R ** 2]
        kernel._cache["ring"] = (S, Z, kernel.prob(Z))
    return kernel._cache["ring"]


def _symbol_2d(kernel, sig):
    S, ring_z, ring_p = _ring_2d(kernel)
    alpha, C = kernel.alpha, kernel.C
    core = float(np.dot(kernel.pmf, np.cos(kernel.offsets @ sig)))
    ring = float(np.dot(ring_p, np.cos(ring_z @ sig)))
    h = S + 0.5
    qn = float(np.hypot(*sig))
    # q(theta) = |sigma . u| has a kink where it vanishes; the oscillation
    # count in theta grows like |sigma| h, so subdivide accordingly
    phi = math.atan2(sig[1], sig[0])
    pieces = int(math.ceil(2.0 * qn * h)) + 8
    brk = np.concatenate([kernel.profile.breakpoints(), _SQUARE_CORNERS,
                          [phi + 0.5 * math.pi, phi + 1.5 * math.pi],
                          np.linspace(0.0, TWO_PI, pieces, endpoint=False)])

    def integrand(th):
        out = np.empty_like(th)
        rho = _square_radius(th, h)
        q = np.abs(sig[0] * np.cos(th) + sig[1] * np.sin(th))
        for i, (rr, qq) in enumerate(zip(rho, q)):
            w = rr * qq
            if w == 0.0:
                out[i] = rr ** (-alpha) / alpha
            else:
                out[i] = rr ** (-alpha) / alpha - qq ** alpha * _h_tail(w, alpha)
            # same unit-cell (Laplacian) correction as the normalization
            out[i] -= (2.0 + alpha) / 24.0 * rr ** (-2.0 - alpha) * math.cos(w)
        return kernel.profile.at_angle(th) * out

    outside = C * _angular_quad(integrand, brk, order=12)
    # cell average of cos(sigma . u) over a unit square is prod sinc(sigma_i/2)
    outside /= float(np.prod(np.sinc(sig / TWO_PI)))
    mass_out = C * _outside_square_mass(kernel.profile, alpha, h)
    err = mass_out * ((2.0 + alpha) * qn / (2.0 * h) + (2.0 + alpha) * (3.0 + alpha) / (24.0 * h * h))
    return core + ring + outside, err


def kernel_symbol(kernel: JumpKernel, sigma, return_error: bool = False):
    """Characteristic function a^(sigma) = sum_z a(z) cos(z . sigma).

    The explicit table covers |z| <= R.  In d = 1 the remaining power-law
    sum is evaluated through the integral representation of the Lerch
    transcendent, which is exact up to quadrature error.  In d = 2 a ring
    up to |z|_inf <= max(2R, 256) is summed explicitly and the rest is an
    oscillatory integral with a unit-cell correction.
    """
    if kernel.d == 1:
        # evaluating at |sigma| makes the symbol exactly even
        sig = np.abs(np.atleast_1d(_reduce(sigma)))
        s = 1.0 + kernel.alpha
        c = kernel.C * kernel.profile.values[0]
        k = np.arange(1, kernel.R + 1, dtype=float)
        w = 2.0 * c * k ** (-s)
        vals, errs = np.empty(sig.shape), np.empty(sig.shape)
        for i, sg in np.ndenumerate(sig):
            tail, err = _tail_cos_sum_1d(float(sg), s, kernel.R)
            vals[i] = math.fsum(w * np.cos(k * sg)) + 2.0 * c * tail
            errs[i] = 2.0 * c * err
        if np.ndim(sigma) == 0:
            vals, errs = float(vals[0]), float(errs[0])
    else:
        sig = np.asarray(sigma, dtype=float)
        flat = _reduce(sig.reshape(-1, 2))
        flip = (flat[:, 0] < 0) | ((flat[:, 0] == 0) & (flat[:, 1] < 0))
        flat[flip] = -flat[flip]
        out = [_symbol_2d(kernel, s) for s in flat]
        vals = np.array([o[0] for o in out]).reshape(sig.shape[:-1])
        errs = np.array([o[1] for o in out]).reshape(sig.shape[:-1])
        if sig.ndim == 1:
            vals, errs = float(vals), float(errs)
    return (vals, errs) if return_error else vals


# --------------------------------------------------------------------------
# periodic window


_FAR_SHELLS = 32
_FAR_NODES = 65


def _far_images_2d(kernel, M, inner, outer):
    """sum of a(x + nM) over inner < |n|_inf <= outer on the window.

    The sum is smooth across the window (images are at distance >= M), so
    it is evaluated on a coarse node grid and interpolated with a bicubic
    spline.  Shifting by M is not a symmetry of this partial sum, which is
    why it is done in real space rather than as a constant.
    """
    nodes = np.linspace(-(M // 2), M - M // 2 - 1, _FAR_NODES)
    GX, GY = np.meshgrid(nodes, nodes, indexing="ij")
    n = np.arange(-outer, outer + 1)
    N1, N2 = np.meshgrid(n, n, indexing="ij")
    keep = np.maximum(np.abs(N1), np.abs(N2)) > inner
    N1, N2 = N1[keep].astype(float), N2[keep].astype(float)
    acc = np.zeros_like(GX)
    for a, b in zip(N1, N2):
        acc += _power_law_2d(kernel, GX + a * M, GY + b * M)
    spl = interpolate.RectBivariateSpline(nodes, nodes, acc, kx=3, ky=3)
    x = np.arange(M) - M // 2
    return spl(x, x)


def _power_law_2d(kernel, X, Y):
    """C a0(u) |z|^(-2-alpha) at real points away from the origin."""
    out = kernel.C * (X * X + Y * Y) ** (-0.5 * (2.0 + kernel.alpha))
    if not kernel.profile.is_constant:
        out *= kernel.profile.at_angle(np.arctan2(Y, X))
    return out


def periodized_kernel(kernel: JumpKernel, M: int, images: int = 1) -> np.ndarray:
    """Kernel folded onto the torus (Z/MZ)^d, centered layout.

    Index ``i`` along each axis holds the site ``x = i - M//2``; the value is
    sum_n a(x + nM).  Exact (Hurwitz zeta) in d = 1; in d = 2 the images with
    |n|_inf <= ``images`` are summed exactly, shells out to
    |n|_inf <= 32 through a smooth interpolant (its error is ~1e-9 relative
    for shells at distance >= 1.5 M, checked against explicit images), and
    the rest as a constant.
    """
    key = ("periodized", M, images)
    if key in kernel._cache:
        return kernel._cache[key]
    x = np.arange(M) - M // 2
    alpha = kernel.alpha
    if kernel.d == 1:
        s = 1.0 + alpha
        c = kernel.C * kernel.profile.values[0]
        j = np.abs(x).astype(float)
        out = np.empty(M)
        nz = j > 0
        q = j[nz] / M
        out[nz] = c * M ** (-s) * (special.zeta(s, q) + special.zeta(s, 1.0 - q))
        out[~nz] = 2.0 * c * M ** (-s) * special.zeta(s)
    else:
        X, Y = np.meshgrid(x, x, indexing="ij")
        out = kernel.prob(np.stack([X, Y], axis=-1))
        Xf, Yf = X.astype(float), Y.astype(float)
        for n1 in range(-images, images + 1):
            for n2 in range(-images, images + 1):
                if n1 or n2:
                    out += _power_law_2d(kernel, Xf + n1 * M, Yf + n2 * M)
        out += _far_images_2d(kernel, M, images, _FAR_SHELLS)
        h = (_FAR_SHELLS + 0.5) * M
        far = kernel.C * _outside_square_mass(kernel.profile, alpha, h / M) * M ** (-alpha) / M ** 2
        out += far
    out.setflags(write=False)
    kernel._cache[key] = out
    return out


def grid_symbol(kernel: JumpKernel, M: int) -> np.ndarray:
    """Symbol at the dual nodes 2*pi*k/M, in FFT (not centered) order."""
    key = ("grid_symbol", M)
    if key not in kernel._cache:
        per = np.fft.ifftshift(periodized_kernel(kernel, M))
        sym = sfft.fftn(per).real
        sym.flat[0] = 1.0
        sym.setflags(write=False)
        kernel._cache[key] = sym
    return kernel._cache[key]


def apply_generator(kernel: JumpKernel, f):
    """(Lf)(x) = sum_z [f(x+z) - f(x)] a(z) on the periodic window.

    ``f`` is a centered array of shape (M,)*d.  Jumps that leave the window
    wrap around, so L is the exact generator of the walk on the torus.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim != kernel.d or len(set(f.shape)) != 1:
        raise ValueError("field must be a square array matching the kernel dimension")
    M = f.shape[0]
    if M < 2 * kernel.R + 1:
        raise ValueError(f"window {M} is smaller than 2R+1 = {2 * kernel.R + 1}")
    sym = grid_symbol(kernel, M)
    fh = sfft.fftn(np.fft.ifftshift(f))
    # a is even, so correlation and convolution coincide
    conv = np.fft.fftshift(sfft.ifftn(fh * sym).real)
    return conv - f


# --------------------------------------------------------------------------
# sampling


def _alias_table(p):
    """Walker/Vose alias table for probabilities ``p`` (normalized here)."""
    p = np.asarray(p, dtype=float)
    n = p.size
    scaled = p * (n / math.fsum(p))
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        lo, hi = small.pop(), large.pop()
        prob[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        (small if scaled[hi] < 1.0 else large).append(hi)
    return prob, alias


@dataclass(frozen=True, eq=False)
class SamplerTables:
    """Flat arrays consumed by the compiled and pure-Python samplers."""

    d: int
    alpha: float
    core_mass: float
    prob: np.ndarray
    alias: np.ndarray
    offsets: np.ndarray
    r_prop: float
    r2_core: float
    seg_cum: np.ndarray
    seg_f0: np.ndarray
    seg_f1: np.ndarray
    seg_theta0: np.ndarray
    seg_width: float

    @classmethod
    def from_kernel(cls, kernel: JumpKernel) -> "SamplerTables":
        prob, alias = _alias_table(kernel.pmf)
        vals = kernel.profile.values
        n = vals.size
        f0 = vals.astype(float)
        f1 = np.roll(vals, -1).astype(float)
        width = TWO_PI / n
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (f0 + f1))])
        cum /= cum[-1]
        cum[-1] = 1.0
        r_prop = kernel.R + 0.5 if kernel.d == 1 else kernel.R - 1.0
        return cls(
            d=kernel.d,
            alpha=kernel.alpha,
            core_mass=1.0 - kernel.p_tail,
            prob=np.ascontiguousarray(prob),
            alias=np.ascontiguousarray(alias),
            offsets=np.ascontiguousarray(kernel.offsets, dtype=np.int64),
            r_prop=float(r_prop),
            r2_core=float(kernel.R) ** 2,
            seg_cum=np.ascontiguousarray(cum),
            seg_f0=np.ascontiguousarray(f0),
            seg_f1=np.ascontiguousarray(f1),
            seg_theta0=np.ascontiguousarray(TWO_PI * np.arange(n) / n),
            seg_width=width,
        )


def sample_jump(kernel: JumpKernel, rng: np.random.Generator) -> np.ndarray:
    """One jump vector drawn from a(z); see :func:`sample_jumps`."""
    return sample_jumps(kernel, rng, 1)[0]


def sample_jumps(kernel: JumpKernel, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` jumps, shape (n, d), int64.

    Core sites come from an alias table; with probability ``p_tail`` a
    continuous Pareto radius beyond R is rounded to the lattice and accepted
    against the true pmf.  The rejection loop gives up after 10**6 tries.
    """
    from ._backend import core

    return core.sample_jumps(kernel.sampler_tables(), rng, int(n))


def radial_cdf(kernel: JumpKernel, r):
    """P(|Z| <= r) for integer radii ``r`` (d = 1 only)."""
    if kernel.d != 1:
        raise NotImplementedError("exact radial CDF is implemented for d = 1")
    r = np.asarray(r, dtype=float)
    c = kernel.C * kernel.profile.values[0]
    s = 1.0 + kernel.alpha
    r = np.floor(r)
    out = np.where(r < 1, 0.0, 1.0 - 2.0 * c * special.zeta(s, np.maximum(r, 0.0) + 1.0))
    return out


def write_kernel_csv(kernel: JumpKernel, path) -> None:
    """Dump the explicit pmf table with a one-line parameter header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# d={kernel.d} alpha={float(kernel.alpha)!r} C={float(kernel.C)!r} "
                 f"R={kernel.R} p_tail={float(kernel.p_tail)!r}\n")
        cols = ",".join(f"z{i + 1}" for i in range(kernel.d))
        fh.write(f"{cols},a\n")
        for z, p in zip(kernel.offsets, kernel.pmf):
            fh.write(",".join(str(int(v)) for v in z) + f",{float(p)!r}\n")

