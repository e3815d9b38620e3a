import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_metric
from gengeo.backends import (
    ChartBackend,
    ConstantField,
    Field,
    InvariantTorusBackend,
    LieGroupBackend,
    abelian_structure_constants,
    chart_from_catalogue,
    d_star,
    dgamma_residual,
    direct_sum_structure_constants,
    exterior_d,
    integrate,
    jacobi_residual,
    killing_form,
    lie_bracket,
    su2_structure_constants,
    volume_three_form,
)

TWO_PI = 2 * math.pi


def sine_field():
    return Field(lambda q: math.sin(TWO_PI * q[0]))


def test_constant_field_derivative_is_zero():
    bk = ChartBackend(n=3)
    D = bk.derivative(ConstantField(np.ones((3, 3))), np.zeros(3))
    assert D.shape == (3, 3, 3) and not D.any()


def test_fd_derivative_of_sine():
    bk = ChartBackend(n=2)
    p = np.array([0.13, 0.4])
    d = bk.directional_derivative(sine_field(), [1.0, 0.0], p)
    assert d == pytest.approx(TWO_PI * math.cos(TWO_PI * 0.13), abs=1e-9)


def test_fd_convergence_order():
    p = np.array([0.21, 0.0])
    exact = TWO_PI * math.cos(TWO_PI * 0.21)
    errs = []
    for h in (4e-2, 2e-2, 1e-2):
        bk = ChartBackend(n=2, h=h)
        errs.append(abs(bk.derivative(sine_field(), p)[0] - exact))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 3.5


def test_lie_invariant_field_derivative_is_zero():
    G = LieGroupBackend(n=3, c=su2_structure_constants())
    assert not G.derivative(ConstantField(np.ones(3)), G.identity).any()


def test_exterior_d_constant_form_on_torus():
    T = InvariantTorusBackend(n=3, gamma0=volume_three_form(1.0))
    assert not exterior_d(T, T.field("gamma"), 3, np.zeros(3)).any()
    assert np.abs(d_star(T, T.field("gamma"), 3, np.zeros(3))).max() == 0.0


def test_exterior_d_oracle():
    bk = ChartBackend(n=3)
    alpha = Field(lambda q: math.sin(TWO_PI * q[0]) * np.eye(3)[1])
    p = np.array([0.3, 0.1, 0.7])
    da = exterior_d(bk, alpha, 1, p)
    expected = np.zeros((3, 3))
    expected[0, 1] = TWO_PI * math.cos(TWO_PI * 0.3)
    expected[1, 0] = -expected[0, 1]
    assert np.abs(da - expected).max() < 1e-8


def test_d_squared_vanishes(rng):
    bk = ChartBackend(n=3)
    A, B = rng.normal(size=3), rng.normal(size=3)
    alpha = Field(lambda q: A * math.sin(TWO_PI * (q[0] + 2 * q[1])) + B * math.cos(TWO_PI * q[2]))
    p = bk.sample_point(rng)
    dd = exterior_d(bk, Field(lambda q: exterior_d(bk, alpha, 1, q)), 2, p)
    assert np.abs(dd).max() < 1e-6


def test_d_on_lie_group_uses_brackets():
    G = LieGroupBackend(n=3, c=su2_structure_constants())
    theta = ConstantField(np.eye(3)[2])
    d = exterior_d(G, theta, 1, G.identity)
    # d theta(u, v) = -theta([u, v])
    expected = -np.einsum("abk,k->ab", G.c, np.eye(3)[2])
    assert np.allclose(d, expected)


def test_lie_bracket_torus_constants_vanish():
    bk = InvariantTorusBackend(n=3)
    assert not lie_bracket(bk, ConstantField(np.ones(3)), ConstantField(np.arange(3.0)), np.zeros(3)).any()


def test_su2_bracket_table():
    G = LieGroupBackend(n=3, c=su2_structure_constants())
    e = np.eye(3)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        assert np.allclose(G.bracket(e[i], e[j]), e[k])
    assert jacobi_residual(G.c) < 1e-14


def test_chart_bracket_vs_polynomial_oracle():
    bk = ChartBackend(n=2, periodic=False)
    X = Field(lambda q: np.array([q[1] ** 2, q[0]]))
    Y = Field(lambda q: np.array([q[0] * q[1], 1.0]))
    p = np.array([0.3, -0.7])
    x, y = p
    # [X, Y]^k = X(Y^k) - Y(X^k)
    expected = np.array([y ** 3 + x ** 2 - 2 * y, -x * y])
    assert np.allclose(lie_bracket(bk, X, Y, p), expected, atol=1e-9)


def test_lie_metric_ad_invariant(rng):
    G = LieGroupBackend(n=3, c=su2_structure_constants())
    g = G.g(G.identity)
    u, v, w = rng.normal(size=(3, 3))
    assert g @ G.bracket(u, v) @ w + v @ g @ G.bracket(u, w) == pytest.approx(0.0, abs=1e-12)


def test_cartan_form_antisymmetric_and_closed():
    G = LieGroupBackend(n=3, c=su2_structure_constants())
    gam = G.gamma(G.identity)
    for perm in ((1, 0, 2), (0, 2, 1), (2, 1, 0)):
        assert np.allclose(np.transpose(gam, perm), -gam)
    c2 = direct_sum_structure_constants(su2_structure_constants(), su2_structure_constants())
    G6 = LieGroupBackend(n=6, c=c2)
    assert dgamma_residual(G6, [G6.identity]) < 1e-12


def test_killing_form_su2():
    assert np.allclose(killing_form(su2_structure_constants()), -2 * np.eye(3))


def test_abelian_needs_explicit_metric():
    with pytest.raises(ValueError):
        LieGroupBackend(n=2, c=abelian_structure_constants(2))
    LieGroupBackend(n=2, c=abelian_structure_constants(2), g0=np.eye(2))


def test_integrate_examples():
    T = InvariantTorusBackend(n=3)
    assert integrate(T, lambda q: 1.0, m=4) == pytest.approx(1.0)
    bk = ChartBackend(n=2)
    val = integrate(bk, lambda q: math.sin(TWO_PI * q[0]) ** 2, m=16, dims=(0,))
    assert val == pytest.approx(0.5, abs=1e-10)
    G = LieGroupBackend(n=3, c=su2_structure_constants(), volume_scale=2.0)
    assert integrate(G, lambda q: 3.0) == pytest.approx(3.0 * 2.0 * math.sqrt(np.linalg.det(G.g0)))


@given(st.floats(0.1, 3.0), st.floats(-1.0, 1.0))
def test_integrate_linear_and_positive(a, c):
    bk = chart_from_catalogue(2, metric="conformal_sine")
    f = lambda q: 1.5 + math.cos(TWO_PI * q[1])
    h = lambda q: math.sin(TWO_PI * q[0])
    lhs = integrate(bk, lambda q: a * f(q) + c * h(q), m=8)
    rhs = a * integrate(bk, f, m=8) + c * integrate(bk, h, m=8)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    assert integrate(bk, f, m=8) > 0


def test_with_data_replaces_metric(rng):
    g, b = random_metric(rng)
    T = InvariantTorusBackend(n=3).with_data(g, b)
    assert np.allclose(T.g(None), g) and np.allclose(T.b(None), b)
    G = LieGroupBackend(n=3, c=su2_structure_constants()).with_data(g, b)
    assert np.allclose(G.g(None), g)


def test_phi_includes_db():
    bk = chart_from_catalogue(3, two_form="trig", three_form="volume")
    p = np.array([0.2, 0.5, 0.9])
    assert np.allclose(bk.phi(p) - bk.gamma(p), exterior_d(bk, bk.b, 2, p))
