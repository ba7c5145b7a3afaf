"""Regenerate oracles.json with mpmath, independently of the package.

Run from the repository root: python tests/oracles/make_oracles.py
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 30
out = {}

# d = 1 normalization: sum over z != 0 of |z|^(-1-alpha) is 2 zeta(1 + alpha)
out["C_d1"] = {str(a): float(1 / (2 * mp.zeta(1 + a))) for a in (0.5, 1.0, 1.5)}

# d = 2 normalization: sum over Z^2 minus 0 of |z|^(-2s) = 4 zeta(s) beta(s)
def beta(s):
    return mp.dirichlet(s, [0, 1, 0, -1])

out["C_d2"] = {str(a): float(1 / (4 * mp.zeta(1 + a / 2) * beta(1 + a / 2))) for a in (0.5, 1.0, 1.5)}

# symbol a^(sigma) = 2 C sum_k cos(k sigma) k^(-1-alpha) = 2 C Re Li_{1+alpha}(e^{i sigma})
sym = {}
for a in (0.5, 1.0, 1.5):
    C = 1 / (2 * mp.zeta(1 + a))
    sym[str(a)] = {repr(s): float(2 * C * mp.re(mp.polylog(1 + a, mp.expj(s))))
                   for s in (0.001, 0.1, 0.7, 2.0, float(mp.pi))}
out["symbol_d1"] = sym

# prefactor -Gamma(-alpha) cos(alpha pi / 2), limit pi/2 at alpha = 1
pref = {}
for a in (0.5, 0.9, 0.999, 1.001, 1.1, 1.5):
    pref[repr(a)] = float(-mp.gamma(-a) * mp.cos(a * mp.pi / 2))
pref["1.0"] = float(mp.limit(lambda x: -mp.gamma(-x) * mp.cos(x * mp.pi / 2), 1))
out["prefactor"] = pref

# p(t, x) for d = 1, alpha = 1 from the closed-form symbol
# sum_k cos(k s)/k^2 = pi^2/6 - pi s/2 + s^2/4 on [0, 2 pi]
C1 = 3 / mp.pi ** 2
def a_hat(s):
    return 2 * C1 * (mp.pi ** 2 / 6 - mp.pi * s / 2 + s ** 2 / 4)

pvals = {}
for t in (0.5, 2.0):
    pvals[repr(t)] = {str(x): float(mp.quad(lambda s: mp.exp((a_hat(s) - 1) * t) * mp.cos(s * x),
                                            [0, mp.pi]) / mp.pi)
                      for x in (0, 1, 5, 50)}
out["p_d1_alpha1"] = pvals

# Yule process moments from the generator: m1' = nu m1, m2' = 2 nu m2 + nu m1,
# m1(0) = m2(0) = 1, integrated numerically (no closed form used)
def yule(nu, t):
    f = mp.odefun(lambda s, y: [nu * y[0], 2 * nu * y[1] + nu * y[0]], 0, [1, 1])
    m1, m2 = f(t)
    return float(m1), float(m2)

out["yule"] = {f"{nu},{t}": yule(nu, t) for nu, t in ((0.5, 3.0), (0.5, 4.0))}

Path(__file__).with_name("oracles.json").write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
