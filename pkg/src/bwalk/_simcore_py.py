"""Pure-Python event loop and jump sampler.

Reference implementation of the compiled ``_simcore`` extension.  Both
consume the bit generator's raw 64-bit stream in exactly the same order and
convert it to doubles the same way numpy does, so for a given generator
state they return identical results.
"""

import bisect
import math

import numpy as np

MAX_REJECT = 1_000_000
JUMP_CAP = float(2**53)
_INV_2_53 = 1.0 / 9007199254740992.0
_BLOCK = 512

OK, CAPPED = 0, 1


class _Uniforms:
    """Doubles in [0, 1) from a bit generator, pulled in blocks."""

    __slots__ = ("_bitgen", "_buf", "_i")

    def __init__(self, rng):
        self._bitgen = rng.bit_generator
        self._buf = []
        self._i = 0

    def __call__(self):
        if self._i == len(self._buf):
            raw = self._bitgen.random_raw(_BLOCK)
            self._buf = ((raw >> np.uint64(11)).astype(np.float64) * _INV_2_53).tolist()
            self._i = 0
        v = self._buf[self._i]
        self._i += 1
        return v


class _Jumper:
    def __init__(self, tab):
        self.d = tab.d
        self.alpha = tab.alpha
        self.inv_alpha = 1.0 / tab.alpha
        self.core_mass = tab.core_mass
        self.prob = tab.prob.tolist()
        self.alias = tab.alias.tolist()
        self.n = len(self.prob)
        self.offsets = [tuple(int(v) for v in row) for row in tab.offsets]
        self.r_prop = tab.r_prop
        self.r2_core = tab.r2_core
        self.cum = tab.seg_cum.tolist()
        self.f0 = tab.seg_f0.tolist()
        self.f1 = tab.seg_f1.tolist()
        self.theta0 = tab.seg_theta0.tolist()
        self.width = tab.seg_width
        self.nseg = len(self.f0)

    def draw(self, u):
        if u() < self.core_mass:
            n = self.n
            v = u() * n
            j = int(math.floor(v))
            if j >= n:
                j = n - 1
            idx = j if (v - j) < self.prob[j] else self.alias[j]
            return self.offsets[idx]
        if self.d == 1:
            return self._tail_1d(u)
        return self._tail_2d(u)

    def _tail_1d(self, u):
        alpha = self.alpha
        for _ in range(MAX_REJECT):
            y = self.r_prop * (1.0 - u()) ** (-self.inv_alpha)
            if y >= JUMP_CAP:
                k = JUMP_CAP
            else:
                k = math.floor(y + 0.5)
                km = k - 0.5
                dq = -math.expm1(-alpha * math.log1p(1.0 / km))
                rhs = alpha / k * math.exp(alpha * math.log1p(-0.5 / k))
                if u() * dq > rhs:
                    continue
            ki = int(k)
            return (-ki,) if u() < 0.5 else (ki,)
        raise RuntimeError("tail rejection sampler exceeded 10**6 iterations")

    def _tail_2d(self, u):
        for _ in range(MAX_REJECT):
            y = self.r_prop * (1.0 - u()) ** (-self.inv_alpha)
            if y > JUMP_CAP:
                y = JUMP_CAP
            w = u()
            j = bisect.bisect_right(self.cum, w) - 1
            if j >= self.nseg:
                j = self.nseg - 1
            x = (w - self.cum[j]) / (self.cum[j + 1] - self.cum[j])
            f0, f1 = self.f0[j], self.f1[j]
            if f0 == f1:
                frac = x
            else:
                frac = (math.sqrt(f0 * f0 + (f1 * f1 - f0 * f0) * x) - f0) / (f1 - f0)
            th = self.theta0[j] + frac * self.width
            zx = math.floor(y * math.cos(th) + 0.5)
            zy = math.floor(y * math.sin(th) + 0.5)
            if zx * zx + zy * zy <= self.r2_core:
                continue
            return (int(zx), int(zy))
        raise RuntimeError("tail rejection sampler exceeded 10**6 iterations")


def sample_jumps(tab, rng, n):
    u = _Uniforms(rng)
    jumper = _Jumper(tab)
    out = np.empty((n, tab.d), dtype=np.int64)
    for i in range(n):
        out[i] = jumper.draw(u)
    return out


def simulate(tab, rng, nu, t_end, snaps, cap):
    """One replica of the branching walk started from a particle at 0.

    Returns (list of (K, d) position arrays, one per snapshot time, status,
    number of events).  Status is CAPPED when the population would exceed
    ``cap``; snapshots after that point are missing.
    """
    u = _Uniforms(rng)
    jumper = _Jumper(tab)
    d = tab.d
    snaps = [float(s) for s in snaps]
    rate_per = 1.0 + nu
    pos = [(0,) * d]
    out = []
    t = 0.0
    si = 0
    events = 0
    status = OK
    while True:
        K = len(pos)
        t_next = t - math.log1p(-u()) / (K * rate_per)
        while si < len(snaps) and snaps[si] < t_next:
            out.append(np.array(pos, dtype=np.int64).reshape(K, d))
            si += 1
        if t_next > t_end:
            break
        t = t_next
        i = int(math.floor(u() * K))
        if i >= K:
            i = K - 1
        if u() * rate_per < 1.0:
            z = jumper.draw(u)
            p = pos[i]
            pos[i] = tuple(a + b for a, b in zip(p, z))
        else:
            if K >= cap:
                status = CAPPED
                break
            pos.append(pos[i])
        events += 1
    return out, status, events
