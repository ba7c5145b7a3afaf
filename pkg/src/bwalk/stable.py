"""Symmetric stable limit: coefficient b0, density S, and comparisons of
solved densities against the local limit and the far-field tail."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, special

from .fields import ScalarField
from .kernel import (TWO_PI, AngularProfile, JumpKernel, _angular_quad, _cusp_constant,
                     kernel_symbol, periodized_kernel)

__all__ = ["stable_prefactor", "StableSpec", "compute_b0", "stable_density",
           "cauchy_density", "symbol_cusp_fit", "fit_b0_local", "local_limit_check",
           "tail_check", "RatioReport", "write_ratio_csv", "write_report_json"]

DENSITY_RTOL = 1e-3
_CUTOFF = 40.0  # e^{-40} ~ 4e-18 beyond the radial cutoff


def stable_prefactor(alpha: float) -> float:
    """-Gamma(-alpha) cos(alpha pi / 2), written without the pole at alpha = 1.

    Equals int_0^inf (1 - cos u) u^(-1-alpha) du = pi / (2 Gamma(1+alpha) sin(pi alpha/2)).
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    return _cusp_constant(alpha)


@dataclass(frozen=True, eq=False)
class StableSpec:
    """Limit law with symbol exp(-b0(direction) |sigma|^alpha).

    ``b0`` is a scalar for d = 1; for d = 2 it is tabulated at ``len(b0)``
    equally spaced angles on [0, 2 pi) and interpolated by a periodic spline.
    """

    d: int
    alpha: float
    b0: np.ndarray
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b0, dtype=float)).copy()
        if np.any(~np.isfinite(b)) or np.any(b <= 0.0):
            raise ValueError("b0 must be positive in every direction")
        if self.d == 1 and b.size != 1:
            raise ValueError("b0 is a scalar in d = 1")
        if self.d == 2 and b.size > 1:
            if b.size % 2:
                raise ValueError("b0 table needs an even number of directions")
            half = b.size // 2
            if not np.allclose(b[:half], b[half:], rtol=1e-10, atol=0.0):
                raise ValueError("b0 must be even in the direction")
            b[half:] = b[:half]
            nodes = TWO_PI * np.arange(b.size + 1) / b.size
            spl = interpolate.CubicSpline(nodes, np.append(b, b[0]), bc_type="periodic")
            object.__setattr__(self, "_spline", spl)
        b.setflags(write=False)
        object.__setattr__(self, "b0", b)

    @property
    def is_isotropic(self) -> bool:
        return self.b0.size == 1

    def b0_at(self, phi):
        """b0 in direction angle ``phi`` (ignored in d = 1 and when isotropic)."""
        phi = np.asarray(phi, dtype=float)
        if self.is_isotropic:
            return np.full(phi.shape, self.b0[0])
        return self._spline(np.mod(phi, TWO_PI))


def compute_b0(alpha: float, profile: AngularProfile, C: float, n_dir: int = 64,
               tol: float = 1e-6) -> StableSpec:
    """b0(phi) = P(alpha) * int C a0(u) |cos(angle(u) - phi)|^alpha du.

    d = 1: the sphere is {-1, +1}, so b0 = P * 2 C a0.  d = 2: Gauss-Jacobi
    on the pieces between the profile nodes and the kinks phi +- pi/2; the
    rule is accepted when doubling its order changes b0 by <= ``tol``
    (relative), otherwise an error is raised.
    """
    pref = stable_prefactor(alpha)
    if profile.d == 1:
        return StableSpec(1, alpha, np.array([pref * 2.0 * C * profile.values[0]]))
    if profile.is_constant:
        # int_0^{2pi} |cos|^alpha = 2 sqrt(pi) Gamma((1+alpha)/2) / Gamma(1 + alpha/2)
        ang = 2.0 * math.sqrt(math.pi) * special.gamma(0.5 * (1 + alpha)) / special.gamma(1 + 0.5 * alpha)
        return StableSpec(2, alpha, np.array([pref * C * profile.values[0] * ang]))
    if n_dir % 2:
        raise ValueError("n_dir must be even")
    phis = TWO_PI * np.arange(n_dir) / n_dir
    vals = np.empty(n_dir)
    for i, phi in enumerate(phis):
        kinks = np.mod([phi + 0.5 * math.pi, phi + 1.5 * math.pi], TWO_PI)

        def f(th, phi=phi):
            return profile.at_angle(th) * np.abs(np.cos(th - phi)) ** alpha

        lo, hi = _kinked_quad(f, alpha, profile.breakpoints(), kinks, 10), \
            _kinked_quad(f, alpha, profile.breakpoints(), kinks, 20)
        if abs(hi - lo) > tol * abs(hi):
            raise ArithmeticError(f"b0 quadrature not converged at phi={phi:.4g}: "
                                  f"{lo!r} vs {hi!r}")
        vals[i] = hi
    return StableSpec(2, alpha, pref * C * vals)


def _kinked_quad(func, alpha, breaks, kinks, order):
    """Piecewise integral over [0, 2 pi) of ``func`` with |u - kink|^alpha zeros.

    Pieces ending at a kink use Gauss-Jacobi nodes whose weight carries the
    (distance to kink)^alpha factor, so the remaining integrand is smooth.
    """
    edges = np.unique(np.concatenate([[0.0, TWO_PI], np.mod(breaks, TWO_PI), kinks]))
    near = lambda v: bool(np.any(np.abs(np.mod(v - kinks + math.pi, TWO_PI) - math.pi) < 1e-12))  # noqa: E731
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        ea = alpha if near(a) else 0.0
        eb = alpha if near(b) else 0.0
        # weight (1 - x)^eb (1 + x)^ea on [-1, 1]
        x, w = special.roots_jacobi(order, eb, ea)
        th = mid + half * x
        g = func(th) / ((half * (1.0 - x)) ** eb * (half * (1.0 + x)) ** ea)
        total += half * half ** (ea + eb) * float(np.dot(w, g))
    return total


def cauchy_density(b: float, y):
    """Closed-form density of the d = 1 symbol exp(-b |sigma|)."""
    y = np.asarray(y, dtype=float)
    return b / (math.pi * (b * b + y * y))


def _radial_cos(b, alpha, w, power):
    """int_0^inf r^power cos(w r) exp(-b r^alpha) dr and its error estimate."""
    top = (_CUTOFF / b) ** (1.0 / alpha)
    if w == 0.0:
        val = special.gamma((power + 1.0) / alpha) / (alpha * b ** ((power + 1.0) / alpha))
        return val, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(lambda r: r ** power * math.exp(-b * r ** alpha), 0.0, top,
                                  weight="cos", wvar=abs(w), limit=400, epsabs=1e-14,
                                  epsrel=1e-12)
    return val, err


def _density_1d(b, alpha, y):
    val, err = _radial_cos(b, alpha, y, 0.0)
    return val / math.pi, err / math.pi


def _density_2d(spec, y, n_ang):
    r = math.hypot(y[0], y[1])
    psi = math.atan2(y[1], y[0])
    # integrand is pi-periodic in the angle: integrate [0, pi) and double
    phis = math.pi * np.arange(n_ang) / n_ang
    bs = spec.b0_at(phis)
    vals = np.empty(n_ang)
    errs = np.empty(n_ang)
    for i, (phi, b) in enumerate(zip(phis, bs)):
        vals[i], errs[i] = _radial_cos(float(b), spec.alpha, r * math.cos(phi - psi), 1.0)
    h = math.pi / n_ang
    scale = 2.0 * h / (4.0 * math.pi ** 2)
    return scale * vals.sum(), scale * errs.sum()


def stable_density(spec: StableSpec, y, n_ang: int = 128, rtol: float = DENSITY_RTOL):
    """S(y) = (2 pi)^-d int exp(i sigma.y - b0 |sigma|^alpha) d sigma.

    d = 1 uses a weighted cosine quadrature (QAWO) up to the radius where
    the integrand is below e^-40; d = 2 uses a trapezoid rule in the angle
    with ``n_ang`` nodes on a half circle and the same radial rule.  Points
    whose error estimate exceeds ``rtol`` relative raise ArithmeticError;
    use the far-field asymptote there.
    """
    y = np.asarray(y, dtype=float)
    if spec.d == 1:
        flat = np.abs(y.ravel())
        shape = y.shape
        b = float(spec.b0[0])
    else:
        if y.shape[-1] != 2:
            raise ValueError("d = 2 points need a trailing axis of length 2")
        flat = y.reshape(-1, 2)
        shape = y.shape[:-1]
    out = np.empty(len(flat))
    cache = {}
    for i, yy in enumerate(flat):
        key = float(yy) if spec.d == 1 else (float(yy[0]), float(yy[1]))
        if key in cache:
            out[i] = cache[key]
            continue
        if spec.d == 1:
            val, err = _density_1d(b, spec.alpha, key)
        else:
            val, err = _density_2d(spec, key, n_ang)
        if not val > 0.0 or err > rtol * val:
            raise ArithmeticError(f"stable density quadrature unreliable at y={key}: "
                                  f"value {val:.3g}, error {err:.3g}; use the tail asymptote")
        cache[key] = out[i] = val
    return out.reshape(shape) if shape else float(out[0])


def symbol_cusp_fit(kernel: JumpKernel, lo: float = 1e-3, hi: float = 1e-2, n: int = 16,
                    direction: float = 0.0):
    """Least-squares fit of log(1 - a^(sigma)) = log b + e log|sigma|.

    Returns (exponent, coefficient) along the direction angle ``direction``.
    """
    rad = np.geomspace(lo, hi, n)
    if kernel.d == 1:
        sig = rad
    else:
        sig = rad[:, None] * np.array([math.cos(direction), math.sin(direction)])
    gap = 1.0 - np.asarray(kernel_symbol(kernel, sig))
    slope, icept = np.polyfit(np.log(rad), np.log(gap), 1)
    return float(slope), float(math.exp(icept))


def fit_b0_local(p_field: ScalarField, alpha: float) -> float:
    """b0 implied by the peak value p(t, 0) through S(0) of an isotropic law.

    d = 1: S(0) = Gamma(1 + 1/alpha) / (pi b^(1/alpha));
    d = 2: S(0) = Gamma(1 + 2/alpha) / (4 pi b^(2/alpha)).
    """
    d, t = p_field.grid.d, p_field.t
    if t <= 0:
        raise ValueError("need t > 0")
    p0 = p_field.at((0,) * d if d == 2 else 0)
    scaled = p0 * t ** (d / alpha)
    if d == 1:
        return float((special.gamma(1.0 + 1.0 / alpha) / (math.pi * scaled)) ** alpha)
    return float((special.gamma(1.0 + 2.0 / alpha) / (4.0 * math.pi * scaled)) ** (alpha / 2.0))


@dataclass(frozen=True)
class RatioReport:
    """Pointwise ratio on a set of sites and its summary."""

    kind: str
    t: float
    sites: np.ndarray
    ratio: np.ndarray
    bounds: tuple
    params: dict
    raw_ratio: np.ndarray | None = None

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.ratio - 1.0)))

    def summary(self) -> dict:
        out = {"kind": self.kind, "t": self.t, "n_sites": int(len(self.ratio)),
               "max_deviation": self.max_deviation,
               "ratio_min": float(self.ratio.min()), "ratio_max": float(self.ratio.max()),
               "bounds": [float(b) for b in self.bounds]}
        if self.raw_ratio is not None:
            out["raw_max_deviation"] = float(np.max(np.abs(self.raw_ratio - 1.0)))
        out.update(self.params)
        return out


def _ray_sites(grid, radius):
    """Sites on the axes and diagonals of a d = 2 window within ``radius``."""
    k = np.arange(-int(radius), int(radius) + 1)
    pts = set()
    for dx, dy in ((1, 0), (0, 1), (1, 1), (1, -1)):
        for j in k:
            p = (j * dx, j * dy)
            if math.hypot(*p) <= radius:
                pts.add(p)
    return np.array(sorted(pts), dtype=np.int64)


def local_limit_check(p_field: ScalarField, spec: StableSpec, K: float = 3.0) -> RatioReport:
    """r(x) = p(t, x) t^(d/alpha) / S(x / t^(1/alpha)) on |x| <= K t^(1/alpha).

    In d = 1 every site is used; in d = 2 the sites on the axes and
    diagonals (quadrature per site is the cost driver).
    """
    grid, t, alpha = p_field.grid, p_field.t, spec.alpha
    if spec.d != grid.d:
        raise ValueError("spec and field dimensions differ")
    scale = t ** (1.0 / alpha)
    if scale < 10.0:
        raise ValueError(f"t^(1/alpha) = {scale:.3g} < 10 lattice spacings")
    radius = K * scale
    if radius >= grid.M // 2:
        raise ValueError("comparison disc exceeds the window")
    if grid.d == 1:
        half = np.arange(0, int(math.floor(radius)) + 1)
        s_half = stable_density(spec, half / scale)
        p_half = p_field.values()[grid.index(half)]
        r_half = p_half * scale / s_half
        sites = np.concatenate([-half[:0:-1], half])[:, None]
        ratio = np.concatenate([r_half[:0:-1], r_half])
    else:
        sites = _ray_sites(grid, radius)
        vals = p_field.values()
        idx = grid.index(sites)
        p = vals[idx[:, 0], idx[:, 1]]
        ratio = p * scale ** 2 / stable_density(spec, sites / scale)
    return RatioReport("local_limit", t, sites, ratio, (0.0, radius),
                       {"K": K, "alpha": alpha, "b0": [float(b) for b in spec.b0]})


def tail_check(p_field: ScalarField, kernel: JumpKernel, inner: float = 30.0,
               outer: float | None = None, periodic: bool = True) -> RatioReport:
    """Far-field ratio on the annulus [inner t^(1/alpha), outer].

    ``outer`` defaults to M/8.  The reported ratio divides p by the tail law
    t C a0(x)/|x|^(d+alpha) summed over the periodic images of x (the field
    lives on the torus); ``raw_ratio`` uses the single-image law.
    """
    grid, t = p_field.grid, p_field.t
    if t <= 0:
        raise ValueError("need t > 0")
    lo = inner * t ** (1.0 / kernel.alpha)
    hi = grid.M / 8.0 if outer is None else float(outer)
    r = grid.radius()
    mask = (r >= lo) & (r <= hi)
    if not mask.any():
        raise ValueError(f"far-field annulus [{lo:.4g}, {hi:.4g}] is empty; enlarge M")
    vals = p_field.values()
    x = grid.coords()
    if grid.d == 1:
        sites = x[mask][:, None]
    else:
        X, Y = np.meshgrid(x, x, indexing="ij")
        sites = np.stack([X[mask], Y[mask]], axis=-1)
    single = t * kernel.prob(sites)
    raw = vals[mask] / single
    if periodic:
        ratio = vals[mask] / (t * periodized_kernel(kernel, grid.M)[mask])
    else:
        ratio = raw
    return RatioReport("tail", t, sites, ratio, (lo, hi),
                       {"alpha": kernel.alpha, "C": kernel.C, "periodic": periodic},
                       raw_ratio=raw)


def write_ratio_csv(report: RatioReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        d = report.sites.shape[1]
        cols = ["x"] if d == 1 else ["x1", "x2"]
        extra = report.raw_ratio is not None
        fh.write(",".join(cols + ["ratio"] + (["raw_ratio"] if extra else [])) + "\n")
        for i, s in enumerate(report.sites):
            row = [str(int(v)) for v in s] + [repr(float(report.ratio[i]))]
            if extra:
                row.append(repr(float(report.raw_ratio[i])))
            fh.write(",".join(row) + "\n")


def write_report_json(report: RatioReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
