"""Front extraction from m1 fields and the intermittency ratio m2 / m1^2."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarField
from .kernel import JumpKernel

__all__ = ["gamma", "FrontCrossing", "front_radius", "predicted_radius", "FrontReport",
           "fit_front_rate", "IntermittencyProfile", "intermittency_scan",
           "regime_classify", "UNDERFLOW", "write_front_csv", "write_profiles_csv",
           "write_json"]

UNDERFLOW = 1e-280
NON_INTERMITTENT, TRANSITION, INTERMITTENT = "non-intermittent", "transition", "intermittent"


def gamma(alpha: float, d: float) -> float:
    """Exponent of the intermittency boundary |x| ~ t^gamma: (2a + d) / (a (a + d))."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if not d >= 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return (2.0 * alpha + d) / (alpha * (alpha + d))


def _ray(grid, direction):
    """Lattice points along a ray from the origin, inside the window.

    ``direction`` is +1/-1 in d = 1 and an angle in d = 2 (points rounded to
    the nearest lattice site, duplicates dropped).  Returns (indices, radii).
    """
    half = grid.M // 2
    if grid.d == 1:
        sign = 1 if direction >= 0 else -1
        r = np.arange(0, half)
        return (grid.index(sign * r)[:, None], r.astype(float))
    c, s = math.cos(direction), math.sin(direction)
    steps = np.arange(0, half)
    pts = np.stack([np.rint(steps * c), np.rint(steps * s)], axis=1).astype(np.int64)
    keep = np.all((pts >= -half) & (pts < half), axis=1)
    pts = pts[keep]
    _, first = np.unique(pts, axis=0, return_index=True)
    pts = pts[np.sort(first)]
    return grid.index(pts), np.hypot(pts[:, 0], pts[:, 1])


@dataclass(frozen=True)
class FrontCrossing:
    """Outermost lattice crossing of the level and its log-linear refinement."""

    t: float
    direction: float
    radius: float
    refined: float
    threshold: float


def front_radius(m1: ScalarField, direction: float = 1.0, threshold: float = 1.0) -> FrontCrossing:
    """Largest r on the ray with m1 >= threshold at r and < threshold at the next site.

    The comparison is mantissa >= threshold * exp(-E), so scaling the field
    and the threshold by the same power of two selects the identical site.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    idx, rad = _ray(m1.grid, direction)
    mant = m1.mantissa[tuple(idx.T)]
    level = threshold * math.exp(-m1.exponent)
    above = mant >= level
    if not above.any():
        raise ValueError(f"field below threshold {threshold} along the whole ray")
    last = int(np.nonzero(above)[0][-1])
    if last == len(rad) - 1:
        raise ValueError("front not contained in the window; enlarge M")
    lo, hi = math.log(mant[last]), math.log(mant[last + 1])
    target = math.log(level)
    frac = (lo - target) / (lo - hi) if lo > hi else 0.0
    refined = rad[last] + frac * (rad[last + 1] - rad[last])
    return FrontCrossing(m1.t, float(direction), float(rad[last]), float(refined), threshold)


def predicted_radius(kernel: JumpKernel, nu: float, t: float, direction: float = 0.0) -> float:
    """Leading-order front [c t]^(1/(d+a)) exp(nu t/(d+a)), c the tail coefficient."""
    s = kernel.d + kernel.alpha
    if kernel.d == 1:
        c = kernel.C * kernel.profile.values[0]
    else:
        c = kernel.C * float(kernel.profile.at_angle(direction))
    return (c * t) ** (1.0 / s) * math.exp(nu * t / s)


@dataclass(frozen=True)
class FrontReport:
    """Front radii over a time scan and the fitted exponential rate.

    ``rate`` is the slope in t of log r - log(t)/(d+a), which removes the
    algebraic factor of the leading-order law; ``raw_slope`` is the plain
    slope of log r against t.
    """

    times: np.ndarray
    radii: np.ndarray
    refined: np.ndarray
    predicted: np.ndarray
    rate: float
    raw_slope: float
    target: float
    residuals: np.ndarray
    direction: float = 1.0
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "times": [float(v) for v in self.times],
            "radius": [float(v) for v in self.radii],
            "radius_refined": [float(v) for v in self.refined],
            "radius_predicted": [float(v) for v in self.predicted],
            "fitted_rate": self.rate,
            "raw_slope": self.raw_slope,
            "target_rate": self.target,
            "rate_relative_error": abs(self.rate - self.target) / self.target,
            "residuals": [float(v) for v in self.residuals],
            "direction": self.direction,
            **self.extra,
        }


def fit_front_rate(crossings: list, kernel: JumpKernel, nu: float) -> FrontReport:
    """Least-squares rate of the front over the crossings (refined radii)."""
    if len(crossings) < 2:
        raise ValueError("need at least two times")
    s = kernel.d + kernel.alpha
    t = np.array([c.t for c in crossings])
    r = np.array([c.refined for c in crossings])
    if np.any(r <= 0):
        raise ValueError("front radius must be positive for the fit")
    y = np.log(r) - np.log(t) / s
    A = np.stack([t, np.ones_like(t)], axis=1)
    (rate, icept), *_ = np.linalg.lstsq(A, y, rcond=None)
    (raw, _), *_ = np.linalg.lstsq(A, np.log(r), rcond=None)
    resid = y - (rate * t + icept)
    direction = crossings[0].direction
    angle = direction if kernel.d == 2 else 0.0
    pred = np.array([predicted_radius(kernel, nu, tt, angle) for tt in t])
    return FrontReport(t, np.array([c.radius for c in crossings]), r, pred, float(rate),
                       float(raw), nu / s, resid, direction)


@dataclass(frozen=True)
class IntermittencyProfile:
    """rho(t, r) = m2 / m1^2 along a ray.

    ``scaled`` holds log r / log t for each requested radius (nan where the
    radius was given in absolute units only); ``skipped`` marks radii where
    m1^2 underflowed and rho is nan.
    """

    t: float
    radii: np.ndarray
    rho: np.ndarray
    scaled: np.ndarray
    skipped: np.ndarray
    gamma: float
    probes: dict

    def rho_at_scaled(self, s: float) -> float:
        hit = np.nonzero(np.isclose(self.scaled, s, rtol=0, atol=1e-12))[0]
        if hit.size == 0:
            raise KeyError(f"scaled radius {s} not in profile")
        return float(self.rho[hit[0]])


def intermittency_scan(m1: ScalarField, m2: ScalarField, gamma_value: float, radii=(),
                       scaled=(), B: float = 1.0, eps: float = 0.25,
                       direction: float = 1.0) -> IntermittencyProfile:
    """rho on absolute ``radii``, on radii t^s for ``scaled`` exponents s, and
    on the probes B t^gamma (inside) and t^(gamma+eps) (outside)."""
    if m1.grid != m2.grid or abs(m1.t - m2.t) > 1e-12:
        raise ValueError("fields must share grid and time")
    t = m1.t
    if t <= 1.0:
        raise ValueError("scaled radii need t > 1")
    idx, rad = _ray(m1.grid, direction)
    lt = math.log(t)
    want = [(float(r), math.log(r) / lt if r > 0 else float("nan")) for r in radii]
    want += [(t ** s, float(s)) for s in scaled]
    inside, outside = B * t ** gamma_value, t ** (gamma_value + eps)
    want += [(inside, gamma_value + math.log(B) / lt), (outside, gamma_value + eps)]
    out_r, out_rho, out_s, out_skip = [], [], [], []
    lm1, lm2 = m1.log_values(), m2.log_values()
    for r, s in want:
        j = int(np.argmin(np.abs(rad - r)))
        if abs(rad[j] - r) > 1.0:
            raise ValueError(f"radius {r:.4g} lies outside the window")
        site = tuple(idx[j])
        mant = m1.mantissa[site]
        if mant * mant < UNDERFLOW:
            out_rho.append(float("nan"))
            out_skip.append(True)
        else:
            out_rho.append(math.exp(lm2[site] - 2.0 * lm1[site]))
            out_skip.append(False)
        out_r.append(float(rad[j]))
        out_s.append(s)
    n = len(want)
    probes = {"inside": float(out_r[n - 2]), "outside": float(out_r[n - 1]),
              "rho_inside": out_rho[n - 2], "rho_outside": out_rho[n - 1], "B": B, "eps": eps}
    return IntermittencyProfile(t, np.array(out_r), np.array(out_rho), np.array(out_s),
                                np.array(out_skip), gamma_value, probes)


def regime_classify(profiles: list, low: float = 0.05, high: float = 0.15) -> dict:
    """Label each scaled radius by the slope of log rho against log t.

    Returns {scaled radius: (slope, label)} over the scaled radii present
    (and not skipped) in every profile.
    """
    times = sorted({p.t for p in profiles})
    if len(times) < 3:
        raise ValueError("classification needs profiles at >= 3 distinct times")
    if low > high:
        raise ValueError("low threshold must not exceed the high threshold")
    common = None
    for p in profiles:
        keys = {round(float(s), 12) for s, sk in zip(p.scaled, p.skipped)
                if np.isfinite(s) and not sk}
        common = keys if common is None else common & keys
    out = {}
    lt = np.log([p.t for p in profiles])
    for s in sorted(common):
        lr = np.log([p.rho_at_scaled(s) for p in profiles])
        slope = float(np.polyfit(lt, lr, 1)[0])
        if slope <= low:
            label = NON_INTERMITTENT
        elif slope >= high:
            label = INTERMITTENT
        else:
            label = TRANSITION
        out[s] = (slope, label)
    return out


def write_front_csv(report: FrontReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,radius,radius_refined,radius_predicted,residual\n")
        for row in zip(report.times, report.radii, report.refined, report.predicted,
                       report.residuals):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_profiles_csv(profiles: list, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,radius,scaled,rho,skipped\n")
        for p in profiles:
            for r, s, v, sk in zip(p.radii, p.scaled, p.rho, p.skipped):
                fh.write(f"{p.t!r},{float(r)!r},{float(s)!r},{float(v)!r},{int(sk)}\n")


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
