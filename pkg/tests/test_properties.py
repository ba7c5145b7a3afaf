import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from bwalk.analysis import gamma
from bwalk.config import echo_config, parse_config
from bwalk.fields import ScalarField, TorusGrid
from bwalk.kernel import build_kernel, kernel_symbol
from bwalk.solver import solve_p
from bwalk.stable import stable_prefactor

alphas = st.floats(0.05, 1.95, allow_nan=False)


@given(alphas, st.integers(1, 2))
def test_gamma_identity(alpha, d):
    g = gamma(alpha, d)
    assert abs(g * (d + alpha) - (2 + d / alpha)) <= 1e-12 * (2 + d / alpha)


@given(alphas, st.integers(1, 2))
def test_gamma_exceeds_inverse_alpha(alpha, d):
    # the boundary lies beyond the diffusive scale t^(1/alpha)
    assert gamma(alpha, d) > 1.0 / alpha


@given(alphas)
def test_prefactor_positive_and_smooth(alpha):
    p = stable_prefactor(alpha)
    assert p > 0
    assert abs(stable_prefactor(min(alpha + 1e-7, 1.99)) - p) <= 1e-4 * p


@given(st.sampled_from([0.5, 1.0, 1.5]), st.floats(0.0, math.pi))
def test_symbol_bounds_d1(alpha, sigma):
    k = build_kernel(1, alpha)
    v = float(kernel_symbol(k, sigma))
    assert -1.0 < v <= 1.0 + 1e-15
    assert float(kernel_symbol(k, -sigma)) == v


@given(st.sampled_from([0.5, 1.0, 1.5]), st.floats(0.05, 5.0))
def test_mass_and_positivity_random(alpha, t):
    f = solve_p(build_kernel(1, alpha, R=16), t, TorusGrid(1, 1024))
    assert f.diagnostics["mass_error"] <= 1e-8
    assert f.mantissa.min() > 0


@given(st.lists(st.floats(-50, 50), min_size=8, max_size=8), st.floats(-800, 800),
       st.floats(-800, 800))
def test_field_log_arithmetic(logs, e1, e2):
    g = TorusGrid(1, 8)
    a = ScalarField.from_values(g, np.exp(np.array(logs)), 0.0).shifted(e1)
    b = ScalarField.from_values(g, np.exp(np.array(logs[::-1])), 0.0).shifted(e2)
    prod = a * b
    assert np.allclose(prod.log_values(), a.log_values() + b.log_values(), atol=1e-9)
    s = a + b
    want = np.logaddexp(a.log_values(), b.log_values())
    assert np.allclose(s.log_values(), want, atol=1e-9)
    assert np.max(s.mantissa) == 1.0


@given(alphas, st.floats(0.0, 5.0), st.lists(st.floats(0.01, 100.0), min_size=1, max_size=4,
                                            unique=True),
       st.integers(3, 12), st.booleans())
def test_config_echo_roundtrip(alpha, nu, times, logm, strict):
    times = sorted(times)
    text = (f"[experiment]\nkind = moments\n[kernel]\nd = 1\nalpha = {alpha!r}\n"
            f"[dynamics]\nnu = {nu!r}\ntimes = {', '.join(map(repr, times))}\n"
            f"[numerics]\nM = {2 ** max(logm, 7)}\nR = 8\nstrict = {str(strict).lower()}\n")
    text = text.replace("R = 8\n", "").replace("[kernel]\n", "[kernel]\nR = 8\n")
    c = parse_config(text)
    echo = echo_config(c)
    assert parse_config(echo) == c
    assert echo_config(parse_config(echo)) == echo


@given(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))
def test_symbol_even_d2(s1, s2):
    k = build_kernel(2, 1.0, R=16)
    a = kernel_symbol(k, np.array([s1, s2]))
    assert kernel_symbol(k, np.array([-s1, -s2])) == a
    assert -1.0 < a <= 1.0 + 1e-12
