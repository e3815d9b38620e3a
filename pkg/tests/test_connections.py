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
    chart_from_catalogue,
    exterior_d,
    su2_structure_constants,
    volume_three_form,
)
from gengeo.connections import (
    RouteDisagreement,
    bismut_connection,
    constant_section,
    contract_field,
    d_phib_apply,
    diamond,
    dorfman,
    dT,
    dT_frame,
    dT_star,
    eigendecompose_bundle,
    levi_civita,
    lie_T,
    lift_field,
    line_bundle_connection,
    nabla_phi,
    phib_coefficients,
    phib_connection,
    phib_standard_apply,
    phib_standard_coefficients,
    pullback_form,
    tm_torsion,
)
from gengeo.gt_linalg import GTForm, pairing, pairing_matrix, swap_matrix

TWO_PI = 2 * math.pi
E3 = np.eye(3)


def trig_section(rng, size: int, n: int = 3) -> Field:
    A, B = rng.normal(size=(2, size))
    k1, k2 = rng.integers(-1, 2, size=(2, n))
    k1[0] = 1
    return Field(lambda q: A * math.sin(TWO_PI * (k1 @ q)) + B * math.cos(TWO_PI * (k2 @ q) + 0.3))


def chart3():
    return chart_from_catalogue(3, metric="trig", two_form="trig", three_form="volume")


def torus_vol(c: float = 1.0, g=None, b=None):
    return InvariantTorusBackend(n=3, gamma0=volume_three_form(c), g0=g, b0=b)


# --- classical connections -------------------------------------------------------


def test_levi_civita_constant_metric():
    assert not levi_civita(torus_vol(), np.zeros(3)).any()


def test_levi_civita_conformal_oracle():
    bk = chart_from_catalogue(3, metric="conformal_sine")
    p = np.array([0.17, 0.4, 0.6])
    Gam = levi_civita(bk, p)
    # g = e^{2f} delta: Gamma^k_ij = d_i f delta_jk + d_j f delta_ik - d_k f delta_ij
    df = np.array([0.1 * TWO_PI * math.cos(TWO_PI * p[0]), 0.0, 0.0])
    exact = np.einsum("i,jk->ikj", df, E3) + np.einsum("j,ik->ikj", df, E3) - np.einsum("k,ij->ikj", df, E3)
    assert np.abs(Gam - exact).max() < 1e-9


def test_nabla_phi_cross_product():
    T = torus_vol()
    v = nabla_phi(T, 1, E3[0], constant_section(E3[1]), np.zeros(3))
    assert np.allclose(v, 0.5 * E3[2])
    v0 = nabla_phi(InvariantTorusBackend(n=3), 1, E3[0], constant_section(E3[1]), np.zeros(3))
    assert not v0.any()


# --- the (phi, b)-connection ----------------------------------------------------


def test_phib_example_flat_torus():
    T = torus_vol()
    e = np.eye(6)
    v = d_phib_apply(T, e[0], constant_section(e[1]), np.zeros(3))
    assert np.allclose(v, 0.25 * e[5])


def test_phib_zero_on_flat_constant_sections():
    T = InvariantTorusBackend(n=3)
    assert not phib_coefficients(T, np.zeros(3)).any()


@given(st.integers(0, 2**31))
def test_phib_dual_route_invariant(seed):
    r = np.random.default_rng(seed)
    g, b = random_metric(r)
    for bk in (torus_vol(0.7, g, b), LieGroupBackend(n=3, c=su2_structure_constants(), g0=g, b0=b)):
        p = bk.sample_point(r)
        assert np.abs(phib_coefficients(bk, p) - phib_standard_coefficients(bk, p)).max() < 1e-10


def test_phib_dual_route_chart(rng):
    bk = chart3()
    for _ in range(3):
        p = bk.sample_point(rng)
        x, y = trig_section(rng, 6), trig_section(rng, 6)
        d_phib_apply(bk, x, y, p)


def test_route_disagreement_raises(rng):
    bk = chart3()
    p = bk.sample_point(rng)
    with pytest.raises(RouteDisagreement):
        d_phib_apply(bk, np.ones(6), trig_section(rng, 6), p, tol=1e-16)


def _o2n(rng, n=3):
    """Random element of the Lie algebra of the pairing-orthogonal group."""
    P = pairing_matrix(n)
    W = rng.normal(size=(2 * n, 2 * n))
    W = W - W.T
    return np.linalg.solve(P, W)


def _uniqueness_residuals(bk, C, p):
    """Torsion, metric and mixed-compatibility residuals for constant-coefficient data."""
    n = bk.n
    G = bk.metric(p)
    P = pairing_matrix(n)
    pair = max(np.abs(C[A].T @ P + P @ C[A]).max() for A in range(2 * n))
    gmet = max(np.abs(C[A] @ G.matrix - G.matrix @ C[A]).max() for A in range(2 * n))
    tors = max(np.abs(C[A][:n, B] - C[B][:n, A]).max() for A in range(2 * n) for B in range(2 * n))
    mixed = 0.0
    for s in (1, -1):
        for i in range(n):
            for j in range(n):
                x, y = G.lift(np.eye(n)[i], -s), G.lift(np.eye(n)[j], s)
                lhs = np.einsum("A,Acb,b->c", x, C, y)
                rhs = G.projector(s) @ dorfman(bk, constant_section(x), constant_section(y), p, gamma=bk.phi(p))
                mixed = max(mixed, np.abs(lhs - rhs).max())
    return pair, gmet, tors, mixed


def test_phib_uniqueness(rng):
    g, b = random_metric(rng)
    T = torus_vol(0.8, g, b)
    p = np.zeros(3)
    C = phib_coefficients(T, p)
    tol = 1e-10
    assert max(_uniqueness_residuals(T, C, p)) < tol
    for _ in range(20):
        A = np.stack([_o2n(rng) for _ in range(6)])
        res = _uniqueness_residuals(T, C + A, p)
        assert res[0] < tol
        assert max(res[1:]) > 1e3 * tol


def test_phib_derivation_rule(rng):
    bk = chart3()
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    x, y = trig_section(rng, 6), trig_section(rng, 6)
    f = Field(lambda q: math.cos(TWO_PI * (q[0] - q[2])))
    fy = Field(lambda q: f(q) * y(q))
    lhs = D.apply(x, fy, p)
    rhs = bk.directional_derivative(f, x(p)[:3], p) * y(p) + f(p) * D.apply(x, y, p)
    assert np.abs(lhs - rhs).max() < 5e-5


def test_phib_torsion_free_chart(rng):
    bk = chart3()
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    assert np.abs(tm_torsion(D, trig_section(rng, 6), trig_section(rng, 6), p)).max() < 5e-5


def test_su2_table():
    G = LieGroupBackend(n=3, c=su2_structure_constants())
    D = phib_connection(G)
    p = G.sample_point(np.random.default_rng(0))

    def xp(u):
        return lift_field(G, G.right_invariant(u), 1)

    def xm(u):
        return lift_field(G, constant_section(u), -1)

    for u in E3:
        for v in E3:
            w = G.bracket(u, v)
            assert np.abs(D.apply(xp(u), xp(v), p) + 0.5 * xp(w)(p)).max() < 1e-12
            assert np.abs(D.apply(xm(u), xm(v), p) - 0.5 * xm(w)(p)).max() < 1e-12
            assert np.abs(D.apply(xp(u), xm(v), p)).max() < 1e-12
            assert np.abs(D.apply(xm(u), xp(v), p)).max() < 1e-12
            # the diamond bracket reproduces the doubled algebra and agrees with Dorfman
            for lift, sgn in ((xp, -1.0), (xm, 1.0)):
                dia = diamond(D, lift(u), lift(v), p)
                assert np.abs(dia - sgn * lift(w)(p)).max() < 1e-12
                assert np.abs(dia - dorfman(G, lift(u), lift(v), p)).max() < 1e-12


# --- Bismut -----------------------------------------------------------------------


def test_bismut_zero_flux_is_levi_civita_lift(rng):
    bk = chart_from_catalogue(3, metric="trig")
    p = bk.sample_point(rng)
    x, y = trig_section(rng, 6), trig_section(rng, 6)
    n = 3
    Gam = levi_civita(bk, p)
    X = x(p)[:n]
    dy = bk.derivative(y, p)
    yp = y(p)
    vec = X @ dy[:, :n] + np.einsum("a,akj,j->k", X, Gam, yp[:n])
    cov = X @ dy[:, n:] - np.einsum("a,akj,k->j", X, Gam, yp[n:])
    assert np.abs(bismut_connection(bk).apply(x, y, p) - np.concatenate([vec, cov])).max() < 1e-8


def test_bismut_preserves_eigenbundles(rng):
    g, b = random_metric(rng)
    T = torus_vol(1.0, g, b)
    p = np.zeros(3)
    C = bismut_connection(T).coefficients(p)
    M = T.metric(p).matrix
    assert max(np.abs(C[A] @ M - M @ C[A]).max() for A in range(6)) < 1e-10


def test_bismut_mixed_diamond_is_dorfman():
    T = torus_vol()
    p = np.zeros(3)
    G = T.metric(p)
    D = bismut_connection(T)
    for i in range(3):
        for j in range(3):
            x = constant_section(G.lift(E3[i], 1))
            y = constant_section(G.lift(E3[j], -1))
            assert np.abs(diamond(D, x, y, p) - dorfman(T, x, y, p)).max() < 1e-12


def test_bismut_equals_phib_on_matching_chirality_su2():
    G = LieGroupBackend(n=3, c=su2_structure_constants())
    p = G.identity
    M = G.metric(p)
    Db, Dp = bismut_connection(G), phib_connection(G)
    # mixed chirality: both connections act by nabla^{+-phi}
    for u in E3:
        for v in E3:
            x, y = M.lift(u, -1), constant_section(M.lift(v, 1))
            assert np.abs(Db.apply(x, y, p) - Dp.apply(x, y, p)).max() < 1e-12
            x, y = M.lift(u, 1), constant_section(M.lift(v, -1))
            assert np.abs(Db.apply(x, y, p) - Dp.apply(x, y, p)).max() < 1e-12


# --- brackets -----------------------------------------------------------------------


def test_brackets_vanish_on_flat_constants():
    T = InvariantTorusBackend(n=3)
    D = phib_connection(T)
    x, y = constant_section(np.arange(6.0)), constant_section(np.ones(6))
    assert not dorfman(T, x, y, np.zeros(3)).any()
    assert not diamond(D, x, y, np.zeros(3)).any()
    assert not tm_torsion(D, x, y, np.zeros(3)).any()


def test_dorfman_vector_on_covector_is_lie_derivative():
    bk = ChartBackend(n=3)
    p = np.array([0.1, 0.35, 0.8])
    X = lambda q: np.array([math.sin(TWO_PI * q[1]), 1.0, math.cos(TWO_PI * q[0])])
    eta = lambda q: np.array([math.cos(TWO_PI * q[2]), q[0] * 0 + math.sin(TWO_PI * q[0]), 0.5])
    x = Field(lambda q: np.concatenate([X(q), np.zeros(3)]))
    y = Field(lambda q: np.concatenate([np.zeros(3), eta(q)]))
    s0, c0 = math.sin(TWO_PI * p[0]), math.cos(TWO_PI * p[0])
    dX = np.zeros((3, 3))  # dX[a, i] = d_a X^i
    dX[1, 0] = TWO_PI * math.cos(TWO_PI * p[1])
    dX[0, 2] = -TWO_PI * s0
    deta = np.zeros((3, 3))
    deta[2, 0] = -TWO_PI * math.sin(TWO_PI * p[2])
    deta[0, 1] = TWO_PI * c0
    lie = X(p) @ deta + dX @ eta(p)
    out = dorfman(bk, x, y, p)
    assert np.abs(out[:3]).max() < 1e-12
    assert np.abs(out[3:] - lie).max() < 1e-8


def test_dorfman_leibniz_chart(rng):
    bk = chart_from_catalogue(3, metric="trig", three_form="volume")
    p = bk.sample_point(rng)
    x, y, z = (trig_section(rng, 6) for _ in range(3))

    def bra(a, c):
        return Field(lambda q: dorfman(bk, a, c, q))

    lhs = dorfman(bk, x, bra(y, z), p)
    rhs = dorfman(bk, bra(x, y), z, p) + dorfman(bk, y, bra(x, z), p)
    assert np.abs(lhs - rhs).max() < 1e-5 * max(1.0, np.abs(lhs).max())


def test_diamond_projects_to_lie_bracket(rng):
    bk = chart3()
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    x, y = trig_section(rng, 6), trig_section(rng, 6)
    from gengeo.backends import lie_bracket

    X = Field(lambda q: x(q)[:3])
    Y = Field(lambda q: y(q)[:3])
    assert np.abs(diamond(D, x, y, p)[:3] - lie_bracket(bk, X, Y, p)).max() < 5e-5


# --- d^T -------------------------------------------------------------------------------


def test_dT_of_constant_function_and_functions():
    bk = chart3()
    D = phib_connection(bk)
    p = np.array([0.2, 0.3, 0.4])
    assert not np.asarray(dT(D, ConstantField(np.asarray(2.0)), 0, p)).any()
    f = Field(lambda q: math.sin(TWO_PI * q[1]))
    df = dT(D, f, 0, p)
    assert np.abs(df[:3] - bk.derivative(f, p)).max() < 1e-9 and not df[3:].any()


def test_closed_classical_form_is_dT_closed(rng):
    bk = chart3()
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    f = Field(lambda q: math.sin(TWO_PI * (q[0] + q[1])) * math.cos(TWO_PI * q[2]))
    alpha = Field(lambda q: exterior_d(bk, f, 0, q))
    assert np.abs(dT(D, pullback_form(bk, alpha, 1), 1, p)).max() < 5e-5


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_dT_frame_route(rng, k):
    bk = chart3()
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    A = GTForm(rng.normal(size=(6,) * k)).coeffs if k else np.asarray(1.0)
    theta = Field(lambda q: A * math.sin(TWO_PI * q[0]) + A * math.cos(TWO_PI * (q[1] - q[2])))
    assert np.abs(dT(D, theta, k, p) - dT_frame(D, theta, k, p)).max() < 1e-9


def test_dT_graded_leibniz(rng):
    bk = chart3()
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    a = trig_section(rng, 6)
    c = GTForm(rng.normal(size=(6, 6))).coeffs
    beta = Field(lambda q: c * math.cos(TWO_PI * q[2]))
    wedge = Field(lambda q: GTForm._raw(a(q)).wedge(GTForm._raw(beta(q))).coeffs)
    lhs = dT(D, wedge, 3, p)
    rhs = GTForm._raw(dT(D, a, 1, p)).wedge(GTForm._raw(beta(p))) - GTForm._raw(a(p)).wedge(
        GTForm._raw(dT(D, beta, 2, p))
    )
    assert np.abs(lhs - rhs.coeffs).max() < 5e-5


def test_dT_star_is_formal_adjoint_on_torus(rng):
    # constant forms on an invariant torus: the integrated adjoint identity is pointwise
    from gengeo.laplace_cohomology import form_gram, invariant_complex

    g, b = random_metric(rng)
    T = torus_vol(0.9, g, b)
    cx = invariant_complex(T)
    for k in range(3):
        lhs = cx.d[k].T @ form_gram(T, k + 1)
        rhs = form_gram(T, k) @ cx.dstar[k + 1]
        assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(lhs).max())


def test_frame_independence_of_dT_star(rng):
    bk = chart3()
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    A = GTForm(rng.normal(size=(6, 6))).coeffs
    theta = Field(lambda q: A * math.sin(TWO_PI * q[0]))
    ref = dT_star(D, theta, 2, p)
    G = bk.metric(p)
    # trace over any G^b-orthonormal frame: -sum_a eps_a (D theta)(f_a, f_a, ...)
    Dt = D.form_derivative(theta, p)
    ep, em = G.orthonormal_frame()
    for _ in range(3):
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        total = 0.0
        for frame in (ep @ Q, em @ Q):
            for j in range(3):
                e = frame[:, j]
                total = total - np.tensordot(e, np.tensordot(e, Dt, axes=(0, 0)), axes=(0, 0))
        assert np.abs(total - ref).max() < 1e-12


# --- operator relations --------------------------------------------------------------


def _dual(z: Field) -> Field:
    S = swap_matrix(3)
    f = Field(lambda q: S @ z(q))
    return f


def test_metric_derivation_identity(rng):
    bk = chart3()
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    x, y, z = (trig_section(rng, 6) for _ in range(3))
    lhs = bk.directional_derivative(Field(lambda q: pairing(y(q), z(q))), x(p)[:3], p)
    Lz = lie_T(D, x, _dual(z), 1, p)
    rhs = pairing(diamond(D, x, y, p), z(p)) + 0.5 * y(p) @ Lz
    assert abs(lhs - rhs) < 5e-5


def test_lie_contraction_commutator(rng):
    bk = chart3()
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    x, y = trig_section(rng, 6), trig_section(rng, 6)
    c = GTForm(rng.normal(size=(6, 6))).coeffs
    theta = Field(lambda q: c * math.sin(TWO_PI * (q[0] + q[2])))
    lhs = lie_T(D, x, contract_field(y, theta, bk), 1, p) - y(p) @ lie_T(D, x, theta, 2, p)
    rhs = diamond(D, x, y, p) @ theta(p)
    assert np.abs(lhs - rhs).max() < 5e-5


def test_pairing_identity(rng):
    bk = chart3()
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    x, y, z = (trig_section(rng, 6) for _ in range(3))
    S = swap_matrix(3)
    Ly = S @ lie_T(D, x, _dual(y), 1, p)
    lhs = pairing(Ly - diamond(D, x, y, p), z(p))
    rhs = pairing(D.apply(y, x, p), z(p)) + pairing(D.apply(z, x, p), y(p))
    assert abs(lhs - rhs) < 5e-5


# --- line bundles ------------------------------------------------------------------------


def test_trivial_line_bundle():
    T = InvariantTorusBackend(n=3)
    eig = eigendecompose_bundle(line_bundle_connection(T, constant_section(np.zeros(6))), np.zeros(3))
    assert not eig.plus.any() and not eig.minus.any() and not eig.psi.any()


def test_line_bundle_eigendecomposition(rng):
    g, b = random_metric(rng)
    T = InvariantTorusBackend(n=3, g0=g, b0=b)
    Z = rng.normal(size=3)
    Dv = line_bundle_connection(T, constant_section(np.concatenate([Z, np.zeros(3)])))
    eig = eigendecompose_bundle(Dv, np.zeros(3))
    assert np.allclose(eig.psi, -1j * g @ Z)
    assert np.allclose(eig.plus - eig.minus, 2 * eig.psi)
    assert np.allclose(eig.plus, eig.neutral + eig.psi)
    # psi does not see b
    assert np.allclose(eigendecompose_bundle(Dv, np.zeros(3), b=np.zeros((3, 3))).psi, eig.psi)


def test_line_bundle_b_shift(rng):
    g, b = random_metric(rng)
    T = InvariantTorusBackend(n=3, g0=g, b0=b)
    Dv = line_bundle_connection(T, constant_section(rng.normal(size=6)))
    a = rng.normal(size=(3, 3))
    a = a - a.T
    p = np.zeros(3)
    e0, e1 = eigendecompose_bundle(Dv, p), eigendecompose_bundle(Dv, p, b=b + a)
    shift = a @ np.linalg.solve(g, e0.psi)  # psi evaluated on g^{-1}(iota_X a)
    assert np.abs(e1.plus - (e0.plus + shift)).max() < 1e-10
    assert np.abs(e1.minus - (e0.minus + shift)).max() < 1e-10


def test_line_bundle_rejects_complex_section():
    T = InvariantTorusBackend(n=3)
    with pytest.raises(ValueError):
        line_bundle_connection(T, ConstantField(np.ones(6) * 1j))
