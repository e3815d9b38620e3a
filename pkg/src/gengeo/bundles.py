"""J-holomorphic Hermitian line bundles over generalized Hermitian fixtures.

A bundle is described in a unitary frame by its dbar-datum u01, a field of (0,1)-forms
(coefficient arrays on the fiber that vanish on T^{1,0}_J), together with a scale f for
the Hermitian metric h = e^{2f} h_0.  The Chern connection has connection form
A = u01' - conj(u01') with u01' = u01 - d_{Lbar} f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .backends import Backend, ConstantField, Field, exterior_d, integrate
from .connections import GenConnection, LineBundleConnection, dT, eigendecompose_bundle, phib_connection
from .curvature import bundle_curvature, bundle_curvature_blocks, bundle_eigen_curvatures, chern_number
from .gck import GenHermitian, dbar_split, projectors, type_project
from .gt_linalg import GTForm, kahler_contraction, lambda_jminus, swap_matrix

SIGNS = (1, -1)


# ---------------------------------------------------------------------------
# smooth functions with closed-form derivatives


class SmoothFunction(Field):
    """Scalar field with gradient and Hessian in chart coordinates."""

    def __init__(self, fn: Callable, grad: Callable, hess: Callable) -> None:
        super().__init__(fn, grad)
        self.grad = grad
        self.hess = hess


def trig_polynomial(terms, n: int) -> SmoothFunction:
    """sum amp * sin(2 pi k.x + phase) over terms (amp, k, phase)."""
    terms = [(float(a), 2 * np.pi * np.asarray(k, dtype=float), float(ph)) for a, k, ph in terms]
    for _, k, _ in terms:
        if k.shape != (n,):
            raise ValueError("wave vector has the wrong length")

    def fn(q):
        return sum(a * math.sin(float(k @ q) + ph) for a, k, ph in terms)

    def grad(q):
        return sum((a * math.cos(float(k @ q) + ph)) * k for a, k, ph in terms)

    def hess(q):
        return sum((-a * math.sin(float(k @ q) + ph)) * np.outer(k, k) for a, k, ph in terms)

    return SmoothFunction(fn, grad, hess)


def constant_function(value: float, n: int) -> SmoothFunction:
    return SmoothFunction(lambda q: float(value), lambda q: np.zeros(n), lambda q: np.zeros((n, n)))


def _pad_vec(v: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(v.shape[:-1] + (2 * n,), dtype=np.result_type(v, float))
    out[..., :n] = v
    return out


def dbar_L(hs: GenHermitian, f: Callable) -> Field:
    """d_{Lbar} f: the (0,1) part of d^T f, as a field of coefficient arrays."""
    bk = hs.backend
    n = bk.n
    J_fn = hs.J_field()

    def fn(q):
        df = _pad_vec(np.asarray(bk.derivative(f, q), dtype=float), n)
        return df @ projectors(np.asarray(J_fn(q)))[1]

    out = Field(fn)
    if hs.constant and isinstance(f, SmoothFunction):
        P01 = projectors(np.asarray(J_fn(None)))[1]
        out.deriv = lambda q: _pad_vec(np.asarray(f.hess(q)), n) @ P01
    return out


# ---------------------------------------------------------------------------
# the bundle


@dataclass(frozen=True, eq=False)
class HoloLineBundle:
    hs: GenHermitian
    u01: Callable
    f: Callable | None = None
    rank: int = 1

    def __post_init__(self) -> None:
        if self.rank != 1:
            raise ValueError("only line bundles are constructed")

    @property
    def backend(self) -> Backend:
        return self.hs.backend

    def rescaled(self, f: Callable) -> "HoloLineBundle":
        """Same holomorphic structure with metric e^{2f} h_0."""
        return replace(self, f=f)

    def dbar_form(self) -> Callable:
        """u01 - d_{Lbar} f in the unitary frame of h."""
        if self.f is None:
            return self.u01
        dl = dbar_L(self.hs, self.f)
        u = self.u01
        out = Field(lambda q: np.asarray(u(q)) - dl(q))
        du = getattr(u, "deriv", None)
        if isinstance(u, ConstantField):
            du = lambda q: u.deriv_for(self.backend.n)
        if du is not None and dl.deriv is not None:
            out.deriv = lambda q: np.asarray(du(q)) - dl.deriv(q)
        return out

    def connection_form(self) -> Callable:
        """A = u01' - conj(u01')."""
        w = self.dbar_form()
        if isinstance(w, ConstantField):
            v = np.asarray(w.value)
            return ConstantField(v - np.conj(v))
        out = Field(lambda q: np.asarray(w(q)) - np.conj(np.asarray(w(q))))
        dw = getattr(w, "deriv", None)
        if dw is not None:
            out.deriv = lambda q: np.asarray(dw(q)) - np.conj(np.asarray(dw(q)))
        return out


def line_bundle(hs: GenHermitian, classical_form: Callable | None = None, deriv: Callable | None = None) -> HoloLineBundle:
    """Bundle whose Chern connection pulls back the imaginary classical 1-form a from TM.

    ``deriv`` is the frame derivative D[b, a] = E_b(a_a) when known in closed form.
    """
    bk = hs.backend
    n = bk.n
    if classical_form is None:
        return HoloLineBundle(hs, ConstantField(np.zeros(2 * n, dtype=complex)))
    J_fn = hs.J_field()

    def u01(q):
        return _pad_vec(np.asarray(classical_form(q), dtype=complex), n) @ projectors(np.asarray(J_fn(q)))[1]

    field = Field(u01)
    if deriv is not None and hs.constant:
        P01 = projectors(np.asarray(J_fn(None)))[1]
        field.deriv = lambda q: _pad_vec(np.asarray(deriv(q), dtype=complex), n) @ P01
    return HoloLineBundle(hs, field)


def constant_curvature_bundle(hs: GenHermitian, ks) -> HoloLineBundle:
    """a = -2 pi i sum_j k_j x^{2j} dx^{2j+1}, curvature -2 pi i sum_j k_j dx^{2j} ^ dx^{2j+1}."""
    n = hs.backend.n
    ks = [int(k) for k in ks]
    if 2 * len(ks) != n:
        raise ValueError("need one integer per coordinate plane")

    def a(q):
        out = np.zeros(n, dtype=complex)
        for j, k in enumerate(ks):
            out[2 * j + 1] = -2j * np.pi * k * q[2 * j]
        return out

    D = np.zeros((n, n), dtype=complex)
    for j, k in enumerate(ks):
        D[2 * j, 2 * j + 1] = -2j * np.pi * k
    return line_bundle(hs, a, lambda q: D)


class NonHolomorphicDatum(ValueError):
    pass


def chern_connection(V: HoloLineBundle, check: bool = False, tol: float = 1e-8) -> LineBundleConnection:
    """Unitary line-bundle connection with form A; u = i S A is real.

    With ``check`` the datum must satisfy dbar_J u01 = 0 at a sample point.
    """
    bk = V.backend
    if check:
        p = bk.sample_point(np.random.default_rng(0))
        r = flatness_residual(V, p)
        if r > tol:
            raise NonHolomorphicDatum(f"dbar_J of the datum is {r:.3g}, not flat")
    S = swap_matrix(bk.n)
    A = V.connection_form()
    if isinstance(A, ConstantField):
        u = ConstantField(np.real(1j * (S @ np.asarray(A.value))))
    else:
        u = Field(lambda q: np.real(1j * (S @ np.asarray(A(q)))))
        dA = getattr(A, "deriv", None)
        if dA is not None:
            u.deriv = lambda q: np.real(1j * np.einsum("ij,aj->ai", S, np.asarray(dA(q))))
    return LineBundleConnection(bk, u)


def _default_DT(V: HoloLineBundle, DT: GenConnection | None) -> GenConnection:
    return phib_connection(V.backend) if DT is None else DT


def chern_curvature(V: HoloLineBundle, p, DT: GenConnection | None = None) -> np.ndarray:
    return bundle_curvature(chern_connection(V), _default_DT(V, DT), p)


def unitarity_residual(V: HoloLineBundle, p) -> float:
    """|Re A|: the Chern connection form is imaginary on real arguments."""
    return float(np.abs(np.real(np.asarray(V.connection_form()(p)))).max())


def flatness_residual(V: HoloLineBundle, p, DT: GenConnection | None = None) -> float:
    """|dbar_J u01| = |(d^T u01)^{(0,2)}|."""
    s = dbar_split(_default_DT(V, DT), V.dbar_form(), 1, V.hs.J_field(), p)
    return float(np.abs(s.dbar).max())


def type_residual(V: HoloLineBundle, p, DT: GenConnection | None = None) -> float:
    """max |F^{(2,0)}|, |F^{(0,2)}| of the Chern curvature."""
    T = type_project(V.hs.J(p), chern_curvature(V, p, DT))
    return float(max(np.abs(T[(2, 0)]).max(), np.abs(T[(0, 2)]).max()))


def metric_change_residual(V: HoloLineBundle, f: Callable, p, DT: GenConnection | None = None) -> float:
    """|F(e^{2f} h) - F(h) + 2 partial^T d_{Lbar} f|."""
    DT = _default_DT(V, DT)
    lhs = chern_curvature(V.rescaled(f), p, DT) - chern_curvature(V, p, DT)
    rhs = -2 * dbar_split(DT, dbar_L(V.hs, f), 1, V.hs.J_field(), p).partial
    return float(np.abs(lhs - rhs).max())


# ---------------------------------------------------------------------------
# eigendecomposition: classical Chern connections


def classical_chern_forms(V: HoloLineBundle, p) -> dict:
    """{+-1: nu_+-}, the classical connection 1-forms of the eigen-connections."""
    e = eigendecompose_bundle(chern_connection(V), p)
    return {1: e.plus, -1: e.minus}


def induced_dbar_forms(V: HoloLineBundle, p) -> dict:
    """{+-1: alpha_+-}: u01 on lifts of T^{0,1}_{I+-}, the induced I_+- holomorphic structures."""
    G = V.backend.metric(p)
    w = np.asarray(V.dbar_form()(p))
    return {s: (G.lift_matrix(s).T @ w) @ projectors(V.hs.I(s, p))[1] for s in SIGNS}


def chern_decomposition_residual(V: HoloLineBundle, p) -> float:
    """nu_+- must be unitary and have (0,1) part alpha_+-."""
    nu = classical_chern_forms(V, p)
    al = induced_dbar_forms(V, p)
    out = 0.0
    for s in SIGNS:
        P01 = projectors(V.hs.I(s, p))[1]
        out = max(out, float(np.abs(np.real(nu[s])).max()), float(np.abs(nu[s] @ P01 - al[s]).max()))
    return out


def curvature_block_residual(V: HoloLineBundle, p, DT: GenConnection | None = None) -> float:
    """F^{phi,b,C} on (x_+-, y_+-) against the classical curvatures of nu_+-."""
    F = chern_curvature(V, p, DT)
    blocks = bundle_curvature_blocks(F, V.backend.metric(p))
    Fp, Fm = bundle_eigen_curvatures(chern_connection(V), p)
    return float(max(np.abs(blocks[(1, 1)] - Fp).max(), np.abs(blocks[(-1, -1)] - Fm).max()))


# ---------------------------------------------------------------------------
# contractions, Hermitian-Einstein and the Hitchin form


def j_contraction(V: HoloLineBundle, p, DT: GenConnection | None = None) -> complex:
    return complex(lambda_jminus(V.backend.metric(p), V.hs.J(p), GTForm._raw(chern_curvature(V, p, DT))))


def classical_contractions(V: HoloLineBundle, p) -> dict:
    Fp, Fm = bundle_eigen_curvatures(chern_connection(V), p)
    g = V.backend.g(p)
    return {1: complex(kahler_contraction(g, V.hs.I(1, p), Fp)), -1: complex(kahler_contraction(g, V.hs.I(-1, p), Fm))}


def contraction_split_residual(V: HoloLineBundle, p) -> float:
    c = classical_contractions(V, p)
    return abs(j_contraction(V, p) - c[1] - c[-1])


def _points(V: HoloLineBundle, points):
    if points is None:
        rng = np.random.default_rng(0)
        k = 1 if V.hs.constant else 8
        return [V.backend.sample_point(rng) for _ in range(k)]
    return points


def he_residual(V: HoloLineBundle, c: float, points=None, DT: GenConnection | None = None) -> float:
    """max |i Lambda_{J-} F - 2c| over sample points."""
    return max(abs(1j * j_contraction(V, p, DT) - 2 * c) for p in _points(V, points))


def kahler_form(g: np.ndarray, I: np.ndarray) -> np.ndarray:
    """omega(X, Y) = g(I X, Y)."""
    return I.T @ g


def orientation_flag(hs: GenHermitian, p) -> int:
    """0 if I_+ and I_- induce the same orientation, 1 otherwise."""
    g = hs.backend.g(p)
    m = hs.backend.n // 2
    tops = []
    for s in SIGNS:
        w = GTForm._raw(kahler_form(g, hs.I(s, p)))
        top = GTForm.scalar(1.0)
        for _ in range(m):
            top = top.wedge(w)
        tops.append(top.coeffs[tuple(range(hs.backend.n))])
    return 0 if tops[0] * tops[1] > 0 else 1


def hitchin_form_residual(V: HoloLineBundle, c: float, points=None) -> float:
    """max over points of the top coefficient of
    i/2 (F_+ ^ w_+^{m-1} + (-1)^eps F_- ^ w_-^{m-1}) - c (m-1)! dvol, per unit volume,
    with dvol = w_+^m / m!."""
    bk = V.backend
    n = bk.n
    m = n // 2
    out = 0.0
    for p in _points(V, points):
        g = bk.g(p)
        eps = orientation_flag(V.hs, p)
        Fp, Fm = bundle_eigen_curvatures(chern_connection(V), p)
        total = GTForm.zero(n, n, dtype=complex)
        for s, F in ((1, Fp), (-1, Fm)):
            w = GTForm._raw(kahler_form(g, V.hs.I(s, p)))
            acc = GTForm._raw(np.asarray(F, dtype=complex))
            for _ in range(m - 1):
                acc = acc.wedge(w)
            total = total + acc * ((-1) ** eps if s < 0 else 1)
        wp = GTForm._raw(kahler_form(g, V.hs.I(1, p)))
        vol = GTForm.scalar(1.0)
        for _ in range(m):
            vol = vol.wedge(wp)
        idx = tuple(range(n))
        res = 0.5j * total.coeffs[idx] - c * math.factorial(m - 1) * vol.coeffs[idx] / math.factorial(m)
        out = max(out, abs(res) / math.sqrt(np.linalg.det(g)))
    return out


# ---------------------------------------------------------------------------
# degrees


def _integral(V: HoloLineBundle, density: Callable, m: int, dims) -> complex:
    return complex(integrate(V.backend, density, m=m, dims=dims))


def volume(bk: Backend, m: int = 16, dims=None) -> float:
    return float(integrate(bk, lambda q: 1.0, m=m, dims=dims))


def degree(V: HoloLineBundle, m: int = 32, dims=None, DT: GenConnection | None = None) -> float:
    """(i / 4 pi) int Lambda_{J-} F dvol."""
    val = _integral(V, lambda q: j_contraction(V, q, DT), m, dims)
    return float(np.real(1j * val / (4 * np.pi)))


def classical_degrees(V: HoloLineBundle, m: int = 32, dims=None) -> tuple[float, float]:
    """(i / 2 pi) int Lambda_+- F_+- dvol."""
    out = []
    for s in SIGNS:
        val = _integral(V, lambda q, s=s: classical_contractions(V, q)[s], m, dims)
        out.append(float(np.real(1j * val / (2 * np.pi))))
    return out[0], out[1]


def slope(V: HoloLineBundle, m: int = 32, dims=None) -> float:
    return degree(V, m, dims) / V.rank


def einstein_constant(V: HoloLineBundle, m: int = 32, dims=None) -> float:
    """c = 2 pi deg / (rank Vol)."""
    return 2 * np.pi * degree(V, m, dims) / (V.rank * volume(V.backend, m, dims))


def chern_number_T2(V: HoloLineBundle, m: int = 16) -> float:
    """(1 / 2 pi) int pi^+_* tr(i F) over a 2-dimensional base."""
    return float(np.real(chern_number(chern_connection(V), phib_connection(V.backend), 1, m)))


# ---------------------------------------------------------------------------
# Gauduchon condition


def pj_operator(hs: GenHermitian, f: Callable, p, DT: GenConnection | None = None) -> float:
    """P_J f = -i Lambda_{J-}(partial^T d_{Lbar} f)."""
    DT = phib_connection(hs.backend) if DT is None else DT
    pd = dbar_split(DT, dbar_L(hs, f), 1, hs.J_field(), p).partial
    val = -1j * lambda_jminus(hs.backend.metric(p), hs.J(p), GTForm._raw(pd))
    return float(np.real(val))


def gauduchon_residual(hs: GenHermitian, basis, m: int = 32, dims=None) -> float:
    """max over f in basis of |int Lambda_{J-}(partial^T d_{Lbar} f) dvol|."""
    bk = hs.backend
    return max(abs(integrate(bk, lambda q, f=f: pj_operator(hs, f, q), m=m, dims=dims)) for f in basis)


def _classical_split(bk: Backend, I_fn: Callable, alpha: Callable, k: int, p, part: str) -> np.ndarray:
    """partial or dbar of a classical k-form field: the (a+1, b) or (a, b+1) part of d alpha^{a,b}."""
    Ip = np.asarray(I_fn(p))
    out = np.zeros((bk.n,) * (k + 1), dtype=complex)
    for a in range(k + 1):
        comp = Field(lambda q, a=a: type_project(np.asarray(I_fn(q)), np.asarray(alpha(q)))[(a, k - a)])
        types = type_project(Ip, exterior_d(bk, comp, k, p))
        key = (a + 1, k - a) if part == "partial" else (a, k - a + 1)
        out = out + types[key]
    return out


def classical_ddbar_form(bk: Backend, I_fn: Callable, alpha: Callable, k: int, p) -> np.ndarray:
    """partial dbar alpha for a classical k-form field alpha."""
    if k + 2 > bk.n:
        return np.zeros((bk.n,) * (k + 2), dtype=complex)
    beta = Field(lambda q: _classical_split(bk, I_fn, alpha, k, q, "dbar"))
    return _classical_split(bk, I_fn, beta, k + 1, p, "partial")


def gauduchon_form_residual(hs: GenHermitian, p) -> float:
    """|partial_+ dbar_+ w_+^{m-1} + (-1)^eps partial_- dbar_- w_-^{m-1}| (compared for m <= 3)."""
    bk = hs.backend
    m = bk.n // 2
    if m > 3:
        raise ValueError("implemented for complex dimension at most 3")
    if m == 1:
        return 0.0
    eps = orientation_flag(hs, p)
    total = 0.0
    for s in SIGNS:
        I_fn = hs.I_field(s)

        def power(q, I_fn=I_fn):
            w = GTForm._raw(kahler_form(bk.g(q), np.asarray(I_fn(q))))
            acc = w
            for _ in range(m - 2):
                acc = acc.wedge(w)
            return acc.coeffs

        val = classical_ddbar_form(bk, I_fn, Field(power), 2 * (m - 1), p)
        total = total + ((-1) ** eps if s < 0 else 1) * val
    return float(np.abs(total).max())


# ---------------------------------------------------------------------------
# d^T of the datum, used for the dbar-flatness check of arbitrary data


def dT_of_datum(V: HoloLineBundle, p, DT: GenConnection | None = None) -> np.ndarray:
    return dT(_default_DT(V, DT), V.dbar_form(), 1, p)
