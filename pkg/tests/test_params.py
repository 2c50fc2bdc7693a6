import numpy as np
import pytest

from src.errors import DomainError
from src.model.params import (
    DivParams,
    NonDivParams,
    alpha_from_gamma,
    divergence_time_factor,
    gamma_from_alpha,
    map_u_to_v,
    map_v_to_u,
    rescale_time,
    to_divergence,
    to_nondivergence,
)


@pytest.mark.parametrize("gamma, alpha", [(0.0, 0.0), (0.5, 1.0)])
def test_alpha_from_gamma(gamma, alpha):
    assert alpha_from_gamma(gamma) == alpha


def test_alpha_from_gamma_near_pole_is_finite():
    alpha = alpha_from_gamma(0.999999)
    assert np.isfinite(alpha)
    assert alpha == pytest.approx(1e6, rel=1e-5)


@pytest.mark.parametrize("gamma", [1.0, 1.5, -0.1])
def test_alpha_from_gamma_rejects_gamma_outside_unit_interval(gamma):
    with pytest.raises(DomainError, match="mapping theorem hypothesis violated"):
        alpha_from_gamma(gamma)


def test_gamma_alpha_round_trip():
    for gamma in np.linspace(0.0, 0.99, 100):
        assert gamma_from_alpha(alpha_from_gamma(gamma)) == pytest.approx(gamma, rel=1e-14, abs=1e-300)


def test_to_divergence_heat_equation():
    div = to_divergence(NonDivParams(gamma=0.0, beta=0.0, sigma2=2.0))
    assert (div.alpha, div.gamma0, div.q0, div.m) == (0.0, 0.0, 1.0, 0.0)


def test_to_divergence_gradient_dependent_case():
    div = to_divergence(NonDivParams(gamma=0.5, beta=1.0, sigma2=2.0))
    assert div.alpha == pytest.approx(1.0)
    assert div.gamma0 == pytest.approx(2.0)
    assert div.q0 == pytest.approx(2.0)
    assert div.m == 1.0


def test_to_divergence_porous_medium_case():
    div = to_divergence(NonDivParams(gamma=0.5, beta=0.0, sigma2=2.0))
    assert (div.alpha, div.gamma0, div.q0, div.m) == (1.0, 1.0, 1.0, 0.0)


def test_to_divergence_gamma0_is_alpha_times_beta_plus_one():
    p = NonDivParams(gamma=0.3, beta=0.7)
    div = to_divergence(p)
    assert div.gamma0 == div.alpha * (p.beta + 1.0)
    assert div.gamma0 >= 0


def test_to_divergence_requires_zero_drift():
    with pytest.raises(DomainError, match="drift"):
        to_divergence(NonDivParams(gamma=0.5, beta=0.0, drift=0.1))


def test_to_nondivergence_inverts_exponents():
    p = NonDivParams(gamma=0.5, beta=1.0, sigma2=3.0, tau0=2.0)
    back = to_nondivergence(to_divergence(p), sigma2=3.0, tau0=2.0)
    assert back.gamma == pytest.approx(p.gamma)
    assert back.beta == p.beta


def test_divergence_time_factor_includes_gradient_exponent():
    # q0 = 2 and (1 + beta) = 2
    assert divergence_time_factor(NonDivParams(gamma=0.5, beta=1.0)) == pytest.approx(1.0)
    assert divergence_time_factor(NonDivParams(gamma=0.0, beta=0.0, tau0=2.0)) == pytest.approx(0.5)


@pytest.mark.parametrize("v, alpha, u", [(0.0, 2.0, 0.0), (1.0, 3.0, 1.0), (0.5, 1.0, 0.25)])
def test_map_v_to_u(v, alpha, u):
    assert map_v_to_u(v, alpha) == pytest.approx(u)


def test_map_v_to_u_preserves_support_and_order():
    v1 = np.array([0.0, 0.1, 0.4, 0.0])
    v2 = np.array([0.0, 0.2, 0.4, 0.3])
    u1, u2 = map_v_to_u(v1, 1.5), map_v_to_u(v2, 1.5)
    assert np.array_equal(u1 == 0, v1 == 0)
    assert np.all(u1 <= u2)


def test_map_v_to_u_rejects_undershoot():
    with pytest.raises(DomainError, match="negative"):
        map_v_to_u(np.array([0.1, -1e-3]), 1.0)


def test_map_u_to_v_inverts_mapping():
    v = np.linspace(0.0, 2.0, 11)
    np.testing.assert_allclose(map_u_to_v(map_v_to_u(v, 1.5), 1.5), v, rtol=1e-14, atol=0)


@pytest.mark.parametrize("t, q0, expected", [(1.0, 1.0, 1.0), (2.0, 2.0, 4.0), (0.0, 3.0, 0.0)])
def test_rescale_time(t, q0, expected):
    assert rescale_time(t, q0) == expected


def test_rescale_time_rejects_nonpositive_q0():
    with pytest.raises(DomainError):
        rescale_time(1.0, 0.0)


def test_parameter_invariants():
    with pytest.raises(DomainError):
        NonDivParams(gamma=0.5, beta=0.0, sigma2=0.0)
    with pytest.raises(DomainError):
        NonDivParams(gamma=0.5, beta=0.0, tau0=-1.0)
    with pytest.raises(DomainError):
        DivParams(gamma0=1.0, m=-1.0)
    with pytest.raises(DomainError):
        DivParams(gamma0=-0.5, m=0.0)
    assert DivParams(gamma0=1.0, m=-0.5).experimental
