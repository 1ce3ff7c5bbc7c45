import math

import numpy as np
import pytest

from randtaylor.core import step_coeffs
from randtaylor.montecarlo import RngSeed
from randtaylor.scheme import (Diverged, IVPSpec, OracleError, SchemeConfig, convergence_study,
                               integrate, linear_ivp, linear_oracle, linear_rhs, rotation_scaling,
                               square_oracle, square_rhs, step)

ORACLE = linear_oracle([[-2.0]])
RHS = linear_rhs([[-2.0]])


def test_step_examples():
    v = step(0, 0.1, 0.0, np.array([1.0]), ORACLE, 0.5, RHS)
    assert abs(v[0] - 0.82) < 1e-15
    v = step(1, 0.1, 0.0, np.array([1.0]), ORACLE, None, RHS, deterministic=True)
    assert abs(v[0] - 0.82) < 1e-15


def test_step_zero_rhs_is_identity():
    def zero_oracle(t, v, m):
        return [v] + [np.zeros_like(v)] * m
    v = step(0, 0.3, 0.0, np.array([2.5, -1.0]), zero_oracle, 0.77, lambda t, y: 0 * y)
    assert np.array_equal(v, [2.5, -1.0])


def test_oracle_validation():
    with pytest.raises(OracleError):
        step(1, 0.1, 0.0, np.array([1.0]), lambda t, v, m: [v], 0.5, RHS)
    bad = lambda t, v, m: [v, 3 * v, v]  # noqa: E731
    with pytest.raises(OracleError):
        step(0, 0.1, 0.0, np.array([1.0]), bad, 0.5, RHS, debug=True)
    with pytest.raises(ValueError):
        step(0, 0.1, 0.0, np.array([1.0]), ORACLE, 1.5, RHS)


def test_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(0, 1)
    with pytest.raises(ValueError):
        SchemeConfig(0, 10, mode="implicit")
    with pytest.raises(ValueError):
        IVPSpec(1.0, 0.0, [1.0], RHS)


def test_product_identity_stubbed():
    path = integrate(linear_ivp(-2.0), SchemeConfig(0, 10), ORACLE, taus=0.5)
    assert abs(path.v[-1, 0] - 0.82 ** 10) < 1e-15


def test_product_identity_random_20_configs():
    rng = np.random.default_rng(77)
    for i in range(20):
        r = int(rng.integers(0, 4))
        n = int(rng.integers(2, 101))
        lam = float(rng.uniform(-4, 1))
        cfg = SchemeConfig(r, n, RngSeed(1000 + i))
        path = integrate(linear_ivp(lam, eta=1.5), cfg, linear_oracle([[lam]]))
        c = step_coeffs(r, lam / n)
        expect = 1.5 * np.cumprod(np.concatenate([[1.0], c(path.taus).real]))
        rel = np.abs(path.v[:, 0] - expect) / np.abs(expect)
        assert rel.max() <= 1e-12


def test_deterministic_per_step_factor():
    lam, n, r = -3.0, 20, 2
    path = integrate(linear_ivp(lam), SchemeConfig(r, n, mode="deterministic"),
                     linear_oracle([[lam]]))
    z = lam / n
    per = sum(z ** j / math.factorial(j) for j in range(r + 2))
    assert np.allclose(path.v[:, 0], per ** np.arange(n + 1), rtol=1e-13)


def test_complex_lambda_via_rotation():
    lam = -1 + 2j
    A = rotation_scaling(lam)
    ivp = IVPSpec(0, 1, [1.0, 0.0], linear_rhs(A))
    path = integrate(ivp, SchemeConfig(1, 50, RngSeed(3)), linear_oracle(A))
    c = step_coeffs(1, lam / 50)
    prod = np.prod(c(path.taus))
    assert np.allclose(path.v[-1], [prod.real, prod.imag], rtol=1e-12)


def test_riccati_problem():
    ivp = IVPSpec(0.0, 0.5, [1.0], square_rhs)
    path = integrate(ivp, SchemeConfig(2, 64, RngSeed(5), debug=True), square_oracle)
    exact = 1.0 / (1.0 - path.t)
    assert np.max(np.abs(path.v[:, 0] - exact)) < 1e-6


def test_diverged():
    ivp = IVPSpec(0.0, 1.0, [1e100], square_rhs)
    with pytest.raises(Diverged):
        integrate(ivp, SchemeConfig(2, 4, RngSeed(1)), square_oracle)


def test_stability_consistency():
    # long runs decay on average inside the AS region and grow outside it
    from randtaylor.montecarlo import simulate_log_trajectory
    from randtaylor.stability import as_function
    for z in (-2.1, -1 + 1.6j):
        st = simulate_log_trajectory(0, z, 10 ** 5, RngSeed(12))
        sd = math.sqrt(st.per_step_var / st.k_steps)
        assert abs(st.per_step_mean - as_function(0, z)) <= 3 * sd
        assert np.sign(st.per_step_mean) == np.sign(as_function(0, z))


def test_convergence_slopes():
    exact = lambda t: np.array([math.exp(-2 * t)])  # noqa: E731
    ns = [8, 16, 32, 64, 128, 256, 512]
    rep = convergence_study(linear_ivp(-2.0), 0, ns, 1000, RngSeed(1), exact, ORACLE)
    assert 1.2 <= rep.l2_slope <= 1.9
    assert 1.7 <= rep.mean_slope <= 2.4
    det = convergence_study(linear_ivp(-2.0), 1, ns, 1, RngSeed(1), exact, ORACLE,
                            mode="deterministic")
    assert 1.7 <= det.l2_slope <= 2.3
    with pytest.raises(ValueError):
        convergence_study(linear_ivp(-2.0), 0, ns, 10, RngSeed(1), exact, ORACLE)


def test_path_csv(tmp_path):
    path = integrate(linear_ivp(-1.0), SchemeConfig(0, 4, RngSeed(0)), linear_oracle([[-1.0]]))
    path.write_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "t,y0" and len(lines) == 6
    assert len(path.nodes) == 5
