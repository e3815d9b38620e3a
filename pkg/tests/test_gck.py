import math

import numpy as np
import pytest

from gengeo.backends import Field
from gengeo.connections import nabla_phi_coefficients, phib_connection
from gengeo.gck import (
    GenComplexStructure,
    admissibility_residual,
    admissible_three_forms,
    classical_bismut_ricci_forms,
    classical_scalars,
    covariant_endomorphism_derivative,
    dbar_diamond_from_curvature,
    dbar_diamond_square,
    ddbar_blocks,
    flat_bihermitian,
    flat_kahler,
    flat_opposite,
    from_bihermitian,
    gk_condition_residual,
    gk_equivalence,
    hermitian_residual,
    holomorphic_obstruction,
    j_ricci_form,
    j_scalar,
    lie_almost_hermitian,
    nijenhuis_bracket,
    nijenhuis_covariant,
    nijenhuis_phi_residual,
    nijenhuis_via_phi,
    real_part_holomorphic_volume,
    sphere_kahler,
    standard_complex_structure,
    to_bihermitian,
    type_project,
    vanishing_components,
)
from gengeo.gt_linalg import antisymmetrize, gram_schmidt


def _bihermitian_quadruple(rng, g):
    X = gram_schmidt(g)
    I0 = standard_complex_structure(g.shape[0])
    Q, _ = np.linalg.qr(rng.normal(size=g.shape))
    Ip = X @ I0 @ np.linalg.inv(X)
    Im = X @ Q @ I0 @ Q.T @ np.linalg.inv(X)
    B = rng.normal(size=g.shape)
    return Ip, Im, B - B.T


# ---------------------------------------------------------------------------
# linear algebra of generalized complex structures


def test_standard_structure_is_hermitian():
    I = standard_complex_structure(4)
    assert hermitian_residual(np.eye(4), I) == 0.0
    with pytest.raises(ValueError):
        standard_complex_structure(3)


def test_bihermitian_round_trip():
    rng = np.random.default_rng(1)
    g = np.array([[2, 0.3, 0, 0], [0.3, 1, 0, 0], [0, 0, 1, 0.1], [0, 0, 0.1, 3]])
    Ip, Im, b = _bihermitian_quadruple(rng, g)
    J, Jm = from_bihermitian(g, b, Ip, Im)
    assert J.commutes_with_metric and Jm.commutes_with_metric
    a, c = to_bihermitian(J.J, J.metric)
    assert np.abs(a - Ip).max() < 1e-12
    assert np.abs(c - Im).max() < 1e-12
    # the partner G J induces (I_+, -I_-)
    assert np.abs(Jm.I_plus - Ip).max() < 1e-12
    assert np.abs(Jm.I_minus + Im).max() < 1e-12


def test_kahler_quadruple_block_form():
    I0 = standard_complex_structure(4)
    J, _ = from_bihermitian(np.eye(4), np.zeros((4, 4)), I0, I0)
    expected = np.zeros((8, 8))
    expected[:4, :4] = I0
    expected[4:, 4:] = I0
    assert np.abs(J.J - expected).max() < 1e-15


def test_non_hermitian_metric_rejected():
    I0 = standard_complex_structure(2)
    with pytest.raises(ValueError):
        from_bihermitian(np.diag([1.0, 2.0]), np.zeros((2, 2)), I0, I0)


def test_non_orthogonal_J_rejected():
    with pytest.raises(ValueError):
        GenComplexStructure(np.eye(4))


def test_type_projection_sums_to_form():
    rng = np.random.default_rng(0)
    g = np.diag([1.0, 2, 1, 3])
    Ip, Im, b = _bihermitian_quadruple(rng, g)
    J, _ = from_bihermitian(g, b, Ip, Im)
    theta = antisymmetrize(rng.normal(size=(8, 8, 8)))
    parts = type_project(J.J, theta)
    assert set(parts) == {(3, 0), (2, 1), (1, 2), (0, 3)}
    assert np.abs(sum(parts.values()) - theta).max() < 1e-12
    # conjugate types pair up for a real form
    assert np.abs(parts[(2, 1)] - parts[(1, 2)].conj()).max() < 1e-12


# ---------------------------------------------------------------------------
# integrability and the generalized Kahler condition


@pytest.mark.parametrize(
    "name",
    ["flat_kahler", "flat_bihermitian", "sphere", "sphere_opposite"],
)
def test_fixtures_are_generalized_kahler(name):
    hs = {
        "flat_kahler": flat_kahler,
        "flat_bihermitian": flat_bihermitian,
        "sphere": sphere_kahler,
        "sphere_opposite": lambda: sphere_kahler(True),
    }[name]()
    p = hs.backend.sample_point(np.random.default_rng(1))
    assert gk_condition_residual(hs, p) < 1e-10
    assert gk_equivalence(hs, p) == (True, True)


def test_lie_almost_hermitian_fails_both_conditions():
    hs = lie_almost_hermitian()
    p = hs.backend.identity
    assert gk_condition_residual(hs, p) > 0.1
    assert gk_equivalence(hs, p) == (False, False)
    # I is parallel for exactly one of nabla^{+-phi}
    bk = hs.backend
    par = abs(covariant_endomorphism_derivative(bk, hs.I_plus, p, nabla_phi_coefficients(bk, p, -1))).max()
    other = abs(covariant_endomorphism_derivative(bk, hs.I_plus, p, nabla_phi_coefficients(bk, p, 1))).max()
    assert par < 1e-12 and other > 0.1


def test_nijenhuis_routes_agree():
    hs = lie_almost_hermitian()
    bk, p = hs.backend, hs.backend.identity
    N = nijenhuis_bracket(bk, hs.I_plus, p)
    assert np.abs(N).max() > 0.1
    assert np.abs(N - nijenhuis_covariant(bk, hs.I_plus, p)).max() < 1e-12


@pytest.mark.parametrize("sign", [1, -1])
def test_nijenhuis_from_flux_for_parallel_structure(sign):
    hs = lie_almost_hermitian(parallel_sign=sign)
    p = hs.backend.identity
    assert nijenhuis_phi_residual(hs, sign, p) < 1e-12
    assert nijenhuis_phi_residual(hs, -sign, p) > 0.1


def test_nijenhuis_flux_formula_is_not_rescaled():
    hs = lie_almost_hermitian()
    bk, p = hs.backend, hs.backend.identity
    N = nijenhuis_bracket(bk, hs.I_plus, p)
    V = nijenhuis_via_phi(bk.g(p), bk.phi(p), hs.I(-1, p), -1)
    assert np.abs(N - V).max() < 1e-12
    for c in (0.5, 2.0, -1.0):
        assert np.abs(N - c * V).max() > 0.1


def test_integrable_fixture_has_vanishing_nijenhuis():
    hs = sphere_kahler()
    p = hs.backend.sample_point(np.random.default_rng(0))
    assert np.abs(nijenhuis_bracket(hs.backend, hs.I_plus, p)).max() < 1e-10


# ---------------------------------------------------------------------------
# admissible 3-forms


def test_admissible_forms_for_opposite_structures():
    hs = flat_opposite()
    Ip, Im = hs.I(1, None), hs.I(-1, None)
    basis = admissible_three_forms(Ip, Im)
    assert len(basis) == 2
    for phi in basis:
        assert admissibility_residual(phi, Ip, Im) < 1e-10
    assert admissibility_residual(real_part_holomorphic_volume(), Ip, Im) < 1e-14


def test_kahler_pair_admits_no_flux():
    hs = flat_kahler(6)
    assert admissible_three_forms(hs.I(1, None), hs.I(-1, None)) == []
    rng = np.random.default_rng(0)
    phi = antisymmetrize(rng.normal(size=(6, 6, 6)))
    assert admissibility_residual(phi, hs.I(1, None), hs.I(-1, None)) > 0.1


# ---------------------------------------------------------------------------
# Dolbeault operators of d^T


def _trig4(q):
    return math.sin(2 * math.pi * q[0]) * math.cos(2 * math.pi * (q[1] + q[2])) + 0.3 * math.cos(
        2 * math.pi * (q[3] - q[0])
    )


@pytest.mark.parametrize("fixture", [flat_kahler, flat_bihermitian])
def test_dolbeault_squares_vanish_on_flat_torus(fixture):
    hs = fixture()
    D = phib_connection(hs.backend)
    f = Field(_trig4)
    p = hs.backend.sample_point(np.random.default_rng(0))
    res = vanishing_components(D, f, hs.J_field(), p)
    assert max(res.values()) < 1e-9
    for a, b in ddbar_blocks(hs, D, f, p).values():
        assert np.abs(b).max() > 1.0
        assert np.abs(a - b).max() < 1e-10


@pytest.mark.parametrize("opposite", [False, True])
def test_dolbeault_squares_vanish_on_sphere(opposite):
    hs = sphere_kahler(opposite)
    D = phib_connection(hs.backend)
    f = Field(lambda q: math.sin(2 * q[0]) * math.exp(q[1]))
    p = hs.backend.sample_point(np.random.default_rng(3))
    res = vanishing_components(D, f, hs.J_field(), p)
    assert max(res.values()) < 5e-5
    for a, b in ddbar_blocks(hs, D, f, p).values():
        assert np.abs(a - b).max() < 5e-5


# ---------------------------------------------------------------------------
# square of dbar on the diamond bracket and Bismut curvature


@pytest.mark.parametrize(
    "fixture, vanishes",
    [(flat_kahler, True), (flat_bihermitian, True), (sphere_kahler, True), (lambda: sphere_kahler(True), False)],
)
def test_dbar_diamond_square_matches_curvature(fixture, vanishes):
    hs = fixture()
    p = hs.backend.sample_point(np.random.default_rng(0))
    A = dbar_diamond_square(hs, p)
    B = dbar_diamond_from_curvature(hs, p)
    assert np.abs(A - B).max() < 5e-5
    obstruction = holomorphic_obstruction(hs, p)
    if vanishes:
        assert np.abs(A).max() < 5e-5 and obstruction < 1e-10
    else:
        assert np.abs(A).max() > 0.1 and obstruction > 0.1


def test_dbar_diamond_square_is_tensorial():
    hs = sphere_kahler(True)
    p = hs.backend.sample_point(np.random.default_rng(4))
    f = Field(lambda q: 1.3 + math.sin(q[0] + 2 * q[1]))
    A = dbar_diamond_square(hs, p)
    assert np.abs(dbar_diamond_square(hs, p, scale=f) - f(p) * A).max() < 1e-8


# ---------------------------------------------------------------------------
# J-Ricci form and J-scalar curvature


@pytest.mark.parametrize(
    "fixture",
    [lie_almost_hermitian, sphere_kahler, lambda: sphere_kahler(True), flat_bihermitian],
)
def test_j_ricci_form_on_lifts(fixture):
    hs = fixture()
    p = hs.backend.sample_point(np.random.default_rng(0))
    rho = j_ricci_form(hs, p)
    cl = classical_bismut_ricci_forms(hs, p)
    G = hs.backend.metric(p)
    for s in (1, -1):
        for t in (1, -1):
            lifted = G.lift_matrix(s).T @ rho @ G.lift_matrix(t)
            assert np.abs(lifted - (cl[1] + cl[-1])).max() < 1e-9
    sc = classical_scalars(hs, p)
    assert j_scalar(hs, p) == pytest.approx(sum(sc.values()), abs=1e-9)


def test_sphere_scalars_cancel_for_opposite_structures():
    p = np.array([0.3, -0.2])
    same = classical_scalars(sphere_kahler(), p)
    opp = classical_scalars(sphere_kahler(True), p)
    assert opp["S_plus"] == pytest.approx(same["S_plus"], rel=1e-9)
    assert opp["S_mixed_plus"] == pytest.approx(-same["S_mixed_plus"], rel=1e-9)
    assert abs(j_scalar(sphere_kahler(True), p)) < 1e-9
