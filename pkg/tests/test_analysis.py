import math

import numpy as np
import pytest

from bwalk.analysis import (INTERMITTENT, NON_INTERMITTENT, TRANSITION, FrontCrossing,
                            IntermittencyProfile, fit_front_rate, front_radius, gamma,
                            intermittency_scan, predicted_radius, regime_classify,
                            write_front_csv, write_json, write_profiles_csv)
from bwalk.fields import ScalarField, TorusGrid
from bwalk.solver import solve_m1


def test_gamma_cauchy_line():
    assert gamma(1.0, 1) == 1.5
    assert gamma(1.0, 2) == pytest.approx(4.0 / 3.0)


@pytest.mark.parametrize("alpha,d", [(0.0, 1), (2.0, 1), (1.0, 0)])
def test_gamma_domain(alpha, d):
    with pytest.raises(ValueError):
        gamma(alpha, d)


def power_field(grid, t, amp, decay=2.0):
    """Synthetic radially decreasing field amp / (1 + r)^decay."""
    return ScalarField.from_values(grid, amp / (1.0 + grid.radius()) ** decay, t)


def test_front_radius_on_known_profile():
    g = TorusGrid(1, 1024)
    f = power_field(g, 1.0, 1e4)   # crosses 1 at r = 99
    c = front_radius(f, 1.0)
    assert c.radius == 99
    assert 99.0 <= c.refined < 100.0
    assert front_radius(f, -1.0).radius == 99


def test_front_radius_threshold_scaling_invariance():
    g = TorusGrid(1, 1024)
    base = power_field(g, 1.0, 1.1e4)   # crossing between lattice sites
    f = base.shifted(700.0)
    a = front_radius(f, 1.0, threshold=math.exp(700.0))
    b = front_radius(base, 1.0, threshold=1.0)
    assert a.radius == b.radius and a.refined == pytest.approx(b.refined, rel=1e-12)
    # the crossing site is exactly invariant under power-of-two scaling
    s = front_radius(f.scaled(2.0 ** -10), 1.0, threshold=math.exp(700.0) * 2.0 ** -10)
    assert s.radius == a.radius and s.refined == pytest.approx(a.refined, rel=1e-14)


def test_front_radius_errors():
    g = TorusGrid(1, 64)
    with pytest.raises(ValueError):
        front_radius(power_field(g, 1.0, 0.5), 1.0)
    with pytest.raises(ValueError):
        front_radius(power_field(g, 1.0, 1e9), 1.0)
    with pytest.raises(ValueError):
        front_radius(power_field(g, 1.0, 1e3), 1.0, threshold=0.0)


def test_front_radius_d2_along_angle():
    g = TorusGrid(2, 512)
    f = power_field(g, 1.0, 1e4)
    c = front_radius(f, math.pi / 4)
    assert 97.0 <= c.refined <= 100.0


def test_predicted_radius_formula(k1):
    r = predicted_radius(k1, 1.0, 10.0)
    assert r == pytest.approx((3.0 / math.pi ** 2 * 10.0) ** 0.5 * math.exp(5.0))


def test_fit_front_rate_exact_on_leading_law(k1):
    times = [6.0, 8.0, 10.0, 12.0]
    cr = [FrontCrossing(t, 1.0, 0.0, predicted_radius(k1, 1.0, t), 1.0) for t in times]
    rep = fit_front_rate(cr, k1, 1.0)
    assert rep.rate == pytest.approx(0.5, rel=1e-12)
    assert rep.raw_slope > 0.5
    assert np.allclose(rep.residuals, 0.0, atol=1e-12)
    s = rep.summary()
    assert s["rate_relative_error"] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_front_rate(cr[:1], k1, 1.0)


def test_front_on_solved_field(k1):
    g = TorusGrid(1, 2**18)
    cr = [front_radius(solve_m1(k1, 1.0, t, g)) for t in (8.0, 10.0, 12.0)]
    rep = fit_front_rate(cr, k1, 1.0)
    assert abs(rep.rate - 0.5) / 0.5 <= 0.03
    assert np.all(np.abs(rep.refined / rep.predicted - 1) <= 0.15)


def synthetic_pair(grid, t, rho_fn):
    m1 = power_field(grid, t, t ** 3)
    lr = np.log(rho_fn(grid.radius(), t))
    m2 = ScalarField.from_values(grid, np.exp(2 * m1.log_values() - 2 * m1.exponent + lr), t,
                                 exponent=2 * m1.exponent)
    return m1, m2


def test_intermittency_scan_reads_rho():
    g = TorusGrid(1, 4096)
    m1, m2 = synthetic_pair(g, 10.0, lambda r, t: 1.0 + r / t)
    prof = intermittency_scan(m1, m2, 1.5, radii=[0.0, 30.0], scaled=[1.0, 1.5])
    assert prof.rho[0] == pytest.approx(1.0, rel=1e-10)
    assert prof.rho[1] == pytest.approx(4.0, rel=1e-10)
    assert prof.rho_at_scaled(1.0) == pytest.approx(2.0, rel=1e-10)
    assert prof.probes["inside"] == round(10 ** 1.5)
    assert prof.probes["outside"] == round(10 ** 1.75)
    assert prof.probes["rho_outside"] > prof.probes["rho_inside"]
    with pytest.raises(KeyError):
        prof.rho_at_scaled(0.3)


def test_intermittency_scan_errors():
    g = TorusGrid(1, 256)
    m1, m2 = synthetic_pair(g, 10.0, lambda r, t: 1.0 + 0 * r)
    with pytest.raises(ValueError):
        intermittency_scan(m1, m2, 1.5, scaled=[3.0])
    m1b, m2b = synthetic_pair(g, 1.0, lambda r, t: 1.0 + 0 * r)
    with pytest.raises(ValueError):
        intermittency_scan(m1b, m2b, 1.5)


def test_intermittency_scan_skips_underflow():
    g = TorusGrid(1, 4096)
    m1 = ScalarField.from_values(g, np.exp(-0.5 * g.radius()), 10.0)
    m2 = m1 * m1
    prof = intermittency_scan(m1, m2, 1.5, radii=[0.0, 1500.0])
    assert not prof.skipped[0] and prof.skipped[1]
    assert math.isnan(prof.rho[1])


def test_regime_classify_on_synthetic_profiles():
    # rho = t^(0.5 (s - 1.5)_+): flat inside, growing outside
    g = TorusGrid(1, 2**14)
    profs = []
    for t in (5.0, 10.0, 20.0, 30.0):
        def rho(r, t):
            s = np.log(np.maximum(r, 1.0)) / math.log(t)
            return t ** (0.5 * np.maximum(s - 1.5, 0.0))
        m1, m2 = synthetic_pair(g, t, rho)
        profs.append(intermittency_scan(m1, m2, 1.5, scaled=[1.0, 1.6, 2.0]))
    cls = regime_classify(profs)
    assert cls[1.0][1] == NON_INTERMITTENT
    assert cls[1.6][1] == TRANSITION
    assert cls[2.0][1] == INTERMITTENT
    assert cls[2.0][0] == pytest.approx(0.25, abs=0.02)
    with pytest.raises(ValueError):
        regime_classify(profs[:2])
    with pytest.raises(ValueError):
        regime_classify(profs, low=0.3, high=0.1)


def test_writers(tmp_path, k1):
    cr = [FrontCrossing(t, 1.0, 1.0, predicted_radius(k1, 1.0, t), 1.0) for t in (1.0, 2.0)]
    rep = fit_front_rate(cr, k1, 1.0)
    write_front_csv(rep, tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().startswith("t,radius,radius_refined")
    prof = IntermittencyProfile(2.0, np.array([1.0]), np.array([1.5]), np.array([0.0]),
                                np.array([False]), 1.5, {})
    write_profiles_csv([prof], tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines()[1] == "2.0,1.0,0.0,1.5,0"
    write_json({"b": 1, "a": [1.0]}, tmp_path / "x.json")
    assert (tmp_path / "x.json").read_text().startswith('{\n  "a"')
