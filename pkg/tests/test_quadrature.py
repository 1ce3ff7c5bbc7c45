import math

import numpy as np
import pytest

from randtaylor.core import DomainError, step_coeffs
from randtaylor.quadrature import (NonConvergent, QuadratureConfig, adaptive_integrate,
                                   locate_step_root, log_abs_linear_primitive, step_roots)
from randtaylor.stability import as_function_decomposed, as_function_paths


def test_polynomial_exact():
    assert abs(adaptive_integrate(lambda t: t * t) - 1 / 3) < 1e-12


def test_log_endpoint_singularity():
    assert abs(adaptive_integrate(np.log, singular=[0.0]) + 1.0) < 1e-9


def test_log_2_minus_power_nonnegative():
    assert adaptive_integrate(lambda t: np.log(2 - t ** 5)) >= 0.0


def test_interior_log_singularity_matches_primitive():
    # int_0^1 ln|t - 0.3| dt in closed form
    exact = 0.7 * math.log(0.7) - 0.7 + 0.3 * math.log(0.3) - 0.3
    assert abs(adaptive_integrate(lambda t: np.log(np.abs(t - 0.3)), singular=[0.3]) - exact) < 1e-9


def test_nonconvergent_carries_estimate():
    cfg = QuadratureConfig(abs_tol=1e-15, rel_tol=1e-15, max_depth=10)
    with pytest.raises(NonConvergent) as info:
        adaptive_integrate(lambda t: np.sin(1 / (t + 1e-3)), cfg=cfg)
    assert math.isfinite(info.value.estimate)


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0)
    with pytest.raises(ValueError):
        QuadratureConfig(singular_window=0.7)


def test_primitive_examples():
    assert abs(log_abs_linear_primitive(0.5) - (math.log(0.5) - 1)) < 1e-14
    assert abs(log_abs_linear_primitive(2.0) - (2 * math.log(2) - 1)) < 1e-12
    rho = 0.4 + 0.2j
    ref = adaptive_integrate(lambda t: np.log(np.abs(t - rho)))
    assert abs(log_abs_linear_primitive(rho) - ref) < 1e-10


def test_locate_root_examples():
    rep = locate_step_root(0, -1.0)
    assert rep.has_real_root and rep.root_t == 0.0 and rep.w_value == 0
    # z with head = 0 for r = 2: any root of 1 + z + z^2/2 + z^3/6
    z = complex(np.roots([1 / 6, 1 / 2, 1, 1])[0])
    rep = locate_step_root(2, z)
    assert rep.has_real_root and rep.root_t < 1e-4
    assert not locate_step_root(0, -1 + 1.6j).has_real_root
    with pytest.raises(DomainError):
        locate_step_root(1, 0j)


def test_step_roots_solve_power_equation():
    w = 0.3 - 0.7j
    rts = step_roots(3, w)
    assert np.allclose(rts ** 4, w)


def _random_points(n, seed, rmax=4, zmax=6):
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        r = int(rng.integers(0, rmax + 1))
        rad, ang = zmax * np.sqrt(rng.random()), 2 * np.pi * rng.random()
        z = rad * np.exp(1j * ang)
        if abs(z) < 1e-3 or locate_step_root(r, z).has_real_root:
            continue
        pts.append((r, z))
    return pts


def test_oracle_agreement_200_points():
    worst = 0.0
    for r, z in _random_points(200, 7):
        c = step_coeffs(r, z)
        w = -c.head / c.tail
        decomp = math.log(abs(c.tail)) + float(np.sum(log_abs_linear_primitive(step_roots(r, w))))
        direct = as_function_paths(r, z).direct
        worst = max(worst, abs(direct - decomp))
    assert worst <= 1e-7


def _estimate(g, cfg, singular):
    try:
        return adaptive_integrate(g, cfg=cfg, singular=singular)
    except NonConvergent as exc:
        return exc.estimate


@pytest.mark.parametrize("r, z", [(0, -1.0), (0, -1.5), (1, -1.7), (3, -2.2)])
def test_singular_integrals_cauchy_in_depth(r, z):
    c = step_coeffs(r, z)
    rep = locate_step_root(r, z)
    assert rep.has_real_root
    vals = [_estimate(lambda t: np.log(np.abs(c(t))), QuadratureConfig(max_depth=d), [rep.root_t])
            for d in (15, 30, 60)]
    assert abs(vals[1] - vals[2]) <= abs(vals[0] - vals[1]) + 1e-9
    assert abs(vals[2] - as_function_decomposed(r, z)) < 1e-7


def _window(alpha, k, delta):
    lo = max(alpha - delta, 0.0) ** (1 / k)
    hi = min(alpha + delta, 1.0) ** (1 / k)
    return lo, hi


def _window_mass(alpha, k, delta):
    """Integral of |ln|t^k - alpha|| over {t in [0, 1] : |t^k - alpha| <= delta}."""
    lo, hi = _window(alpha, k, delta)
    root = alpha ** (1 / k)
    return adaptive_integrate(lambda t: np.abs(np.log(np.abs(t ** k - alpha))), lo, hi,
                              singular=[root])


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0])
@pytest.mark.parametrize("k", [1, 3, 5])
def test_window_mass_matches_scipy_and_decreases(alpha, k):
    from scipy.integrate import quad
    masses = []
    for delta in (1e-1, 1e-2, 1e-3, 1e-4):
        lo, hi = _window(alpha, k, delta)
        root = alpha ** (1 / k)
        ref, _ = quad(lambda t: abs(math.log(abs(t ** k - alpha))), lo, hi,
                      points=[root] if lo < root < hi else None, limit=200, epsabs=1e-13)
        m = _window_mass(alpha, k, delta)
        assert abs(m - ref) < 1e-8 * max(1.0, ref)
        masses.append(m)
    assert all(a > b for a, b in zip(masses, masses[1:]))


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0])
@pytest.mark.parametrize("k", [1, 3, 5])
def test_window_mass_eventually_below_1e_3(alpha, k):
    deltas = 10.0 ** -np.arange(1, 41)
    assert any(_window_mass(alpha, k, d) < 1e-3 for d in deltas)


def test_window_mass_below_1e_3_at_delta_1e_4():
    # the exact masses are k*u*(1 - ln u) with u = delta**(1/k) at alpha = 0, so
    # several combinations sit above 1e-3 at this delta; kept as stated
    over = {(a, k): _window_mass(a, k, 1e-4) for a in (0.0, 0.3, 1.0) for k in (1, 3, 5)}
    over = {key: m for key, m in over.items() if m >= 1e-3}
    assert not over, f"window mass >= 1e-3 at delta=1e-4 for (alpha, k): {over}"
