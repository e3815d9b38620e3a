"""Curvature of generalized and classical connections.

Generalized curvature is computed from connection coefficients on constant frame sections:
R_{AB} = dC_B/dE_A - dC_A/dE_B + [C_A, C_B] - sum_C w^C_{AB} C_C with w_{AB} = E_A <> E_B.
The 4-tensor is R(x, y, z, w) = G^b(R_{x,y} z, w).  Classical curvature follows
R_{X,Y} = [nabla_X, nabla_Y] - nabla_{[X,Y]}, R(X, Y, Z, W) = g(R_{X,Y} Z, W) and
Rc(X, Y) = sum_i R(X, X_i, X_i, Y) over a g-orthonormal frame.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .backends import Backend, ConstantField, Field, d_star, integrate
from .connections import (
    GenConnection,
    LineBundleConnection,
    RouteDisagreement,
    bismut_connection,
    covariant_form_derivative,
    default_tol,
    eigendecompose_bundle,
    nabla_phi_coefficients,
    phib_connection,
)
from .gt_linalg import GenMetric, GTForm

SIGNS = (1, -1)


# ---------------------------------------------------------------------------
# classical


def classical_curvature(bk: Backend, gam_fn: Callable, p) -> np.ndarray:
    """Rm[a, b][k, j] = (R_{E_a, E_b} E_j)^k."""
    Gam = np.asarray(gam_fn(p))
    n = bk.n
    if bk.invariant:
        dGam = np.zeros((n,) + Gam.shape)
    else:
        dGam = bk.derivative(Field(gam_fn), p)
    c = bk.frame_brackets(p)
    comm = np.einsum("aij,bjk->abik", Gam, Gam)
    comm = comm - np.transpose(comm, (1, 0, 2, 3))
    return dGam - np.transpose(dGam, (1, 0, 2, 3)) + comm - np.einsum("abm,mij->abij", c, Gam)


def lower_curvature(Rm: np.ndarray, g: np.ndarray) -> np.ndarray:
    """R4[a, b, j, l] = g(R_{a,b} E_j, E_l)."""
    return np.einsum("abkj,kl->abjl", Rm, g)


def riemann(bk: Backend, p, sign: int = 0) -> np.ndarray:
    """Curvature 4-tensor of nabla (sign 0) or nabla^{+-phi}."""
    Rm = classical_curvature(bk, lambda q: nabla_phi_coefficients(bk, q, sign), p)
    return lower_curvature(Rm, bk.g(p))


def ricci_from_riemann(R4: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.einsum("abcd,bc->ad", R4, np.linalg.inv(g))


def ricci(bk: Backend, p, sign: int = 0) -> np.ndarray:
    return ricci_from_riemann(riemann(bk, p, sign), bk.g(p))


def scalar(bk: Backend, p) -> float:
    return float(np.einsum("ab,ab->", ricci(bk, p), np.linalg.inv(bk.g(p))))


def phi_squared(phi: np.ndarray, g: np.ndarray) -> np.ndarray:
    """phi^2(X, Y) = sum_{i,j} phi(X, X_i, X_j) phi(Y, X_i, X_j), both orders counted."""
    gi = np.linalg.inv(g)
    return np.einsum("aij,bkl,ik,jl->ab", phi, phi, gi, gi)


def phi_norm_sq(phi: np.ndarray, g: np.ndarray) -> float:
    """sum over i < j < k of phi(X_i, X_j, X_k)^2."""
    return float(np.trace(phi_squared(phi, g) @ np.linalg.inv(g))) / 6.0


def torsion_ricci_formula(bk: Backend, p, sign: int) -> np.ndarray:
    """Rc - sign/2 d*phi - 1/4 phi^2, the closed form for the Ricci tensor of nabla^{sign phi}."""
    g = bk.g(p)
    phi = bk.phi(p)
    dsp = d_star(bk, bk.field("phi"), 3, p)
    return ricci(bk, p) - 0.5 * sign * dsp - 0.25 * phi_squared(phi, g)


# ---------------------------------------------------------------------------
# generalized


@dataclass
class CurvatureTensor:
    """Curvature 4-tensor R(x, y, z, w) = G^b(R_{x,y} z, w) at a point."""

    p: object
    tensor: np.ndarray
    metric: GenMetric
    _blocks: dict = field(default_factory=dict, repr=False)

    def __call__(self, x, y, z, w) -> float:
        return float(np.einsum("abcd,a,b,c,d->", self.tensor, x, y, z, w))

    def block(self, s1: int, s2: int, s3: int, s4: int) -> np.ndarray:
        """Entries on lifts: B[a, b, c, d] = R(lift_s1 E_a, lift_s2 E_b, lift_s3 E_c, lift_s4 E_d)."""
        key = (s1, s2, s3, s4)
        if key not in self._blocks:
            L = [self.metric.lift_matrix(s) for s in key]
            self._blocks[key] = np.einsum("ABCD,Aa,Bb,Cc,Dd->abcd", self.tensor, *L, optimize=True)
        return self._blocks[key]

    def operator(self) -> np.ndarray:
        """Rop[A, B][:, C] = R_{E_A, E_B} E_C."""
        Ginv = np.linalg.inv(self.metric.bilinear)
        return np.einsum("ABCD,ED->ABEC", self.tensor, Ginv)


def frame_curvature(D: GenConnection, p, DT: GenConnection | None = None) -> np.ndarray:
    """Rop[A, B][:, C] = R_{E_A, E_B} E_C by the commutator definition.

    The bracket in D_{x <> y} is the diamond bracket of ``DT`` (default: D itself).
    """
    bk = D.backend
    n = bk.n
    C = D.coefficients(p)
    CT = C if DT is None else DT.coefficients(p)
    m = 2 * n
    dC = np.zeros((m, m, m, m))
    if not bk.invariant:
        dC[:n] = bk.derivative(Field(D.coeff_fn), p)
    comm = np.einsum("aij,bjk->abik", C, C)
    comm = comm - np.transpose(comm, (1, 0, 2, 3))
    w = np.transpose(CT, (0, 2, 1)) - np.transpose(CT, (2, 0, 1))  # w[A, B, :] = E_A <> E_B
    return dC - np.transpose(dC, (1, 0, 2, 3)) + comm - np.einsum("abm,mij->abij", w, C)


def curvature_tensor(D: GenConnection, p, DT: GenConnection | None = None) -> CurvatureTensor:
    G = D.backend.metric(p)
    Rop = frame_curvature(D, p, DT)
    T = np.einsum("abkc,kd->abcd", Rop, G.bilinear)
    return CurvatureTensor(p, T, G)


def _from_blocks(G: GenMetric, blocks: dict) -> np.ndarray:
    """Standard-basis tensor from its values on lifts of frame vectors."""
    n = G.n
    L = G.eigenbasis()
    Linv = np.linalg.inv(L)
    eig = np.zeros((2 * n,) * 4)
    for key, val in blocks.items():
        idx = tuple(slice(0, n) if s == 1 else slice(n, 2 * n) for s in key)
        eig[idx] = val
    return np.einsum("abcd,aA,bB,cC,dD->ABCD", eig, Linv, Linv, Linv, Linv, optimize=True)


def phib_riemann_blocks(bk: Backend, p) -> dict:
    """Non-zero lift blocks of the (phi, b)-Riemann tensor from classical data."""
    R0 = riemann(bk, p, 0)
    out = {}
    for s in SIGNS:
        Rs = riemann(bk, p, s)
        Gs = nabla_phi_coefficients(bk, p, s)
        nphi = covariant_form_derivative(bk, bk.field("phi"), p, Gs)  # nphi[x, y, z, w]
        mixed = Rs - 0.5 * s * nphi
        out[(s, s, s, s)] = R0
        out[(-s, -s, s, s)] = Rs
        out[(-s, s, s, s)] = mixed
        out[(s, -s, s, s)] = -np.transpose(mixed, (1, 0, 2, 3))
    return out


def phib_route_gap(bk: Backend, p) -> tuple[CurvatureTensor, float, float]:
    """(commutator-route tensor, |commutator - block assembly|, scale)."""
    R = curvature_tensor(phib_connection(bk), p)
    assembled = _from_blocks(R.metric, phib_riemann_blocks(bk, p))
    return R, float(np.abs(R.tensor - assembled).max()), max(1.0, float(np.abs(assembled).max()))


def riemann_phib(bk: Backend, p, tol: float | None = None) -> CurvatureTensor:
    """(phi, b)-Riemann tensor by the commutator route, checked against the block assembly."""
    tol = default_tol(bk) if tol is None else tol
    R, gap, scale = phib_route_gap(bk, p)
    if gap > tol * scale:
        raise RouteDisagreement(f"commutator and block routes differ by {gap:.3e}")
    return R


def bismut_curvature(bk: Backend, p, tol: float | None = None) -> CurvatureTensor:
    tol = default_tol(bk) if tol is None else tol
    R = curvature_tensor(bismut_connection(bk), p, phib_connection(bk))
    blocks = {}
    for s in SIGNS:
        Rs = riemann(bk, p, s)
        for s1 in SIGNS:
            for s2 in SIGNS:
                blocks[(s1, s2, s, s)] = Rs
    assembled = _from_blocks(R.metric, blocks)
    gap = float(np.abs(R.tensor - assembled).max())
    if gap > tol * max(1.0, float(np.abs(assembled).max())):
        raise RouteDisagreement(f"commutator and block routes differ by {gap:.3e}")
    return R


@dataclass
class RicciOperator:
    """Ricci endomorphism (columns Ric(E_A)) and tensor Rc(x, y) = G^b(Ric x, y)."""

    matrix: np.ndarray
    metric: GenMetric

    @property
    def tensor(self) -> np.ndarray:
        return self.matrix.T @ self.metric.bilinear

    def block(self, s: int, t: int) -> np.ndarray:
        return self.metric.lift_matrix(s).T @ self.tensor @ self.metric.lift_matrix(t)

    def symmetry_residual(self) -> float:
        T = self.tensor
        return float(np.abs(T - T.T).max())

    def trace(self) -> float:
        ep, em = self.metric.orthonormal_frame()
        T = self.tensor
        return float(np.einsum("ai,ab,bi->", ep, T, ep) + np.einsum("ai,ab,bi->", em, T, em))


def ricci_from_curvature(R: CurvatureTensor) -> RicciOperator:
    """Ric(x) = sum over the generalized-orthonormal frame of R_{x, f} f."""
    ep, em = R.metric.orthonormal_frame()
    F = np.hstack([ep, em])
    Rop = R.operator()
    mat = np.einsum("ABCD,Bf,Df->CA", Rop, F, F)
    return RicciOperator(mat, R.metric)


def ricci_phib(bk: Backend, p, tol: float | None = None) -> RicciOperator:
    return ricci_from_curvature(riemann_phib(bk, p, tol))


def bismut_ricci(bk: Backend, p, tol: float | None = None) -> RicciOperator:
    return ricci_from_curvature(bismut_curvature(bk, p, tol))


def scalar_curvatures(bk: Backend, p) -> tuple[float, float]:
    return ricci_phib(bk, p).trace(), bismut_ricci(bk, p).trace()


# ---------------------------------------------------------------------------
# Jacobiator and Bianchi identities


def jacobiator_from_curvature(R: CurvatureTensor, x, y, z) -> np.ndarray:
    """-R_{x,y} z - cyclic."""
    Rop = R.operator()

    def r(a, b, c):
        return np.einsum("ABCD,A,B,D->C", Rop, a, b, c)

    return -(r(x, y, z) + r(y, z, x) + r(z, x, y))


def jacobiator(D: GenConnection, x: Callable, y: Callable, z: Callable, p) -> np.ndarray:
    """(x <> y) <> z + cyclic, computed from nested diamond brackets of the fields."""
    from .connections import diamond

    def dfield(a, b):
        if D.backend.invariant and all(isinstance(f, ConstantField) for f in (a, b)):
            return ConstantField(diamond(D, a, b, p))
        return Field(lambda q: diamond(D, a, b, q))

    return (
        diamond(D, dfield(x, y), z, p)
        + diamond(D, dfield(y, z), x, p)
        + diamond(D, dfield(z, x), y, p)
    )


def jacobiator_closed_form(bk: Backend, p, signs: tuple[int, int, int], X, Y, Z) -> np.ndarray:
    """Value on lifts: (s, s, -s) gives s * 2 g(R^{-s phi}_{X,Y} Z) as a covector; the
    other patterns are obtained by cyclic symmetry and the rest vanish."""
    n = bk.n
    g = bk.g(p)
    out = np.zeros(2 * n)
    vecs = [np.asarray(X, float), np.asarray(Y, float), np.asarray(Z, float)]
    s = list(signs)
    for shift in range(3):
        a, b, c = (shift) % 3, (shift + 1) % 3, (shift + 2) % 3
        if s[a] == s[b] and s[c] == -s[a]:
            sg = s[a]
            Rm = classical_curvature(bk, lambda q: nabla_phi_coefficients(bk, q, -sg), p)
            RZ = np.einsum("abkj,a,b,j->k", Rm, vecs[a], vecs[b], vecs[c])
            out[n:] += sg * 2 * (g @ RZ)
    return out


def first_bianchi_residual(bk: Backend, p, R: CurvatureTensor | None = None) -> float:
    """Max over frame triples of |R_{x,y}z + c.p. - (closed form)| for chirality (-s,-s,s)
    and |cyclic sum| for pure chiralities."""
    R = riemann_phib(bk, p) if R is None else R
    G = R.metric
    n = bk.n
    g = bk.g(p)
    Rop = R.operator()
    worst = 0.0
    I = np.eye(n)
    for s in SIGNS:
        Rm = classical_curvature(bk, lambda q: nabla_phi_coefficients(bk, q, s), p)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    x, y = G.lift(I[i], -s), G.lift(I[j], -s)
                    z = G.lift(I[k], s)
                    lhs = (
                        np.einsum("ABCD,A,B,D->C", Rop, x, y, z)
                        + np.einsum("ABCD,A,B,D->C", Rop, y, z, x)
                        + np.einsum("ABCD,A,B,D->C", Rop, z, x, y)
                    )
                    rhs = np.zeros(2 * n)
                    rhs[n:] = s * 2 * g @ Rm[i, j, :, k]
                    worst = max(worst, float(np.abs(lhs - rhs).max()))
                    xs, ys, zs = G.lift(I[i], s), G.lift(I[j], s), G.lift(I[k], s)
                    pure = (
                        np.einsum("ABCD,A,B,D->C", Rop, xs, ys, zs)
                        + np.einsum("ABCD,A,B,D->C", Rop, ys, zs, xs)
                        + np.einsum("ABCD,A,B,D->C", Rop, zs, xs, ys)
                    )
                    worst = max(worst, float(np.abs(pure).max()))
    return worst


def classical_bianchi_residuals(bk: Backend, p, sign: int = 0) -> tuple[float, float]:
    """Algebraic and differential Bianchi residuals of a classical connection (torsion-free case)."""
    gam_fn = lambda q: nabla_phi_coefficients(bk, q, sign)
    Rm = classical_curvature(bk, gam_fn, p)
    # R_{a,b} e_c + R_{b,c} e_a + R_{c,a} e_b
    cyc = np.einsum("abkc->abck", Rm)
    alg = cyc + np.transpose(cyc, (1, 2, 0, 3)) + np.transpose(cyc, (2, 0, 1, 3))
    Gam = gam_fn(p)
    if bk.invariant:
        dRm = np.zeros((bk.n,) + Rm.shape)
    else:
        dRm = bk.derivative(Field(lambda q: classical_curvature(bk, gam_fn, q)), p)
    # (nabla_e R)_{a,b} = d_e R_ab + [Gam_e, R_ab] - R(nabla_e E_a, E_b) - R(E_a, nabla_e E_b)
    nab = (
        dRm
        + np.einsum("eij,abjk->eabik", Gam, Rm)
        - np.einsum("abij,ejk->eabik", Rm, Gam)
        - np.einsum("eca,cbij->eabij", Gam, Rm)
        - np.einsum("ecb,acij->eabij", Gam, Rm)
    )
    diff = nab + np.transpose(nab, (1, 2, 0, 3, 4)) + np.transpose(nab, (2, 0, 1, 3, 4))
    return float(np.abs(alg).max()), float(np.abs(diff).max())


def double_switch(bk: Backend, p) -> float:
    """max |R^{+phi}(X, Y, Z, W) - R^{-phi}(Z, W, X, Y)| (valid when d phi = 0)."""
    Rp = riemann(bk, p, 1)
    Rm = riemann(bk, p, -1)
    return float(np.abs(Rp - np.transpose(Rm, (2, 3, 0, 1))).max())


def covariant_curvature_derivative(
    bk: Backend, F_fn: Callable, D_form: GenConnection, C_end_fn: Callable, p
) -> np.ndarray:
    """(D_{E_X} F)_{A,B} for an End-valued 2-form F[A, B] (matrices), the form slots
    differentiated by ``D_form`` and the endomorphism part by coefficients ``C_end_fn``."""
    n = bk.n
    m = 2 * n
    F = np.asarray(F_fn(p))
    Cf = D_form.coefficients(p)
    Ce = np.asarray(C_end_fn(p))
    dF = np.zeros((m,) + F.shape, dtype=F.dtype)
    if not bk.invariant:
        dF[:n] = bk.derivative(Field(F_fn), p)
    return (
        dF
        + np.einsum("Xij,ABjk->XABik", Ce, F)
        - np.einsum("ABij,Xjk->XABik", F, Ce)
        - np.einsum("XCA,CBij->XABij", Cf, F)
        - np.einsum("XCB,ACij->XABij", Cf, F)
    )


def differential_bianchi(bk: Backend, D_end: GenConnection, p) -> np.ndarray:
    """Cyclic sum (d^{phi,b}_D F)_{x,y,z} of the curvature of D_end (a connection on the
    generalized tangent bundle viewed as a vector bundle), with D^{phi,b} on the form slots."""
    Dphib = phib_connection(bk)
    F_fn = lambda q: frame_curvature(D_end, q, Dphib)
    nab = covariant_curvature_derivative(bk, F_fn, Dphib, D_end.coeff_fn, p)
    return nab + np.transpose(nab, (1, 2, 0, 3, 4)) + np.transpose(nab, (2, 0, 1, 3, 4))


# ---------------------------------------------------------------------------
# line bundles


def bundle_curvature(Dv: LineBundleConnection, DT: GenConnection, p) -> np.ndarray:
    """F[A, B] = F^T_{E_A, E_B} (complex scalars) for a line-bundle connection."""
    bk = Dv.backend
    n = bk.n
    a = Dv.form(p)
    C = DT.coefficients(p)
    m = 2 * n
    da = np.zeros((m, m), dtype=complex)
    da[:n] = bk.derivative(Dv.form_field(), p)
    w = np.transpose(C, (0, 2, 1)) - np.transpose(C, (2, 0, 1))
    return da - da.T - np.einsum("ABk,k->AB", w, a)


def bundle_curvature_direct(Dv: LineBundleConnection, DT: GenConnection, x: Callable, y: Callable, f: Callable, p) -> complex:
    """(D_x D_y - D_y D_x - D_{x <> y}) f for a section f s, from nested field derivatives."""
    from .connections import diamond

    Dy = Field(lambda q: Dv.apply(y, f, q))
    Dx = Field(lambda q: Dv.apply(x, f, q))
    xy = diamond(DT, x, y, p)
    return Dv.apply(x, Dy, p) - Dv.apply(y, Dx, p) - Dv.apply(xy, f, p)


def bundle_curvature_blocks(F: np.ndarray, G: GenMetric) -> dict:
    """F on lifts: {(s, t): matrix F(lift_s E_a, lift_t E_b)}."""
    return {(s, t): G.lift_matrix(s).T @ F @ G.lift_matrix(t) for s in SIGNS for t in SIGNS}


def mixed_curvature(Dv: LineBundleConnection, p) -> np.ndarray:
    """F_{+,-}(E_a, E_b) from the defining combination of covariant derivatives."""
    bk = Dv.backend
    Ap = Field(lambda q: eigendecompose_bundle(Dv, q).plus)
    Am = Field(lambda q: eigendecompose_bundle(Dv, q).minus)
    dAp = bk.derivative(Ap, p)
    dAm = bk.derivative(Am, p)
    Gp = nabla_phi_coefficients(bk, p, 1)
    Gm = nabla_phi_coefficients(bk, p, -1)
    ap, am = Ap(p), Am(p)
    # d_a A-_b - d_b A+_a - A-(nabla^-_a E_b) + A+(nabla^+_b E_a)
    return dAm - dAp.T - np.einsum("akb,k->ab", Gm, am) + np.einsum("bka,k->ab", Gp, ap)


def _classical_d(bk: Backend, A: Callable, p) -> np.ndarray:
    from .backends import exterior_d

    return exterior_d(bk, A, 1, p)


def mixed_curvature_decomposition(Dv: LineBundleConnection, p) -> np.ndarray:
    """F_+ - 2 nabla psi - phi(g^{-1} psi, ., .), with nabla the Levi-Civita connection."""
    bk = Dv.backend
    Ap = Field(lambda q: eigendecompose_bundle(Dv, q).plus)
    psi = Field(lambda q: eigendecompose_bundle(Dv, q).psi)
    Fp = _classical_d(bk, Ap, p)
    npsi = covariant_form_derivative(bk, psi, p)
    gi = np.linalg.inv(bk.g(p))
    iphi = np.einsum("i,ij,jab->ab", psi(p), gi, bk.phi(p))
    return Fp - 2 * npsi - iphi


def mixed_curvature_alternative(Dv: LineBundleConnection, p, phi_sign: int = -1) -> np.ndarray:
    """F_0 + phi_sign * phi(g^{-1} psi, ., .) - [psi, psi] - (nabla_0 psi + its transpose).

    ``phi_sign = -1`` is the value consistent with the defining combination; +1 is kept to
    exhibit the discrepancy of the opposite sign.  The commutator vanishes for line bundles
    and the covariant derivative of psi uses the Levi-Civita connection on its form slot.
    """
    bk = Dv.backend
    A0 = Field(lambda q: eigendecompose_bundle(Dv, q).neutral)
    psi = Field(lambda q: eigendecompose_bundle(Dv, q).psi)
    F0 = _classical_d(bk, A0, p)
    npsi = covariant_form_derivative(bk, psi, p)
    gi = np.linalg.inv(bk.g(p))
    iphi = np.einsum("i,ij,jab->ab", psi(p), gi, bk.phi(p))
    return F0 + phi_sign * iphi - (npsi + npsi.T)


def bundle_eigen_curvatures(Dv: LineBundleConnection, p) -> tuple[np.ndarray, np.ndarray]:
    """Classical curvatures F^b_+ and F^b_- of the eigen-connections."""
    bk = Dv.backend
    Ap = Field(lambda q: eigendecompose_bundle(Dv, q).plus)
    Am = Field(lambda q: eigendecompose_bundle(Dv, q).minus)
    return _classical_d(bk, Ap, p), _classical_d(bk, Am, p)


def chern_trace(F: np.ndarray, k: int) -> GTForm:
    """tr (sqrt(-1) F)^k as a 2k T-form (line bundle: the k-th wedge power)."""
    base = GTForm._raw(1j * np.asarray(F))
    out = GTForm.scalar(1.0 + 0j)
    for _ in range(k):
        out = out.wedge(base)
    return out


def chern_number(Dv: LineBundleConnection, DT: GenConnection, k: int = 1, m: int = 16) -> complex:
    """Integral of (1/2pi)^k pi^+_* tr (iF)^k when 2k equals the dimension."""
    bk = Dv.backend
    n = bk.n
    if 2 * k != n:
        raise ValueError("top-degree integral needs 2k = n")

    def density(q):
        F = bundle_curvature(Dv, DT, q)
        G = bk.metric(q)
        c = chern_trace(F, k).transform(G.lift_matrix(1)).coeffs
        top = c[tuple(range(n))]
        return top / np.sqrt(np.linalg.det(bk.g(q)))

    return integrate(bk, density, m=m) / (2 * np.pi) ** k


def form_norm_sq(F: np.ndarray, G: GenMetric) -> float:
    """|F|^2 = 1/2 sum_{alpha, beta} |F(f_alpha, f_beta)|^2 over a G-orthonormal frame."""
    ep, em = G.orthonormal_frame()
    Fr = np.hstack([ep, em])
    v = Fr.T @ F @ Fr
    return 0.5 * float(np.sum(np.abs(v) ** 2))


def classical_norm_sq(T: np.ndarray, g: np.ndarray) -> float:
    """|T|^2 = 1/2 sum_{i,j} |T(X_i, X_j)|^2 for any 2-tensor."""
    gi = np.linalg.inv(g)
    return 0.5 * float(np.real(np.einsum("ab,cd,ac,bd->", T, np.conj(T), gi, gi)))


def yang_mills(Dv: LineBundleConnection, DT: GenConnection | None = None, m: int = 16, dims=None) -> float:
    bk = Dv.backend
    DT = phib_connection(bk) if DT is None else DT
    return float(np.real(integrate(bk, lambda q: form_norm_sq(bundle_curvature(Dv, DT, q), bk.metric(q)), m=m, dims=dims)))


def yang_mills_split(Dv: LineBundleConnection, m: int = 16, dims=None) -> tuple[float, float, float]:
    """(YM(nabla_+), YM(nabla_-), integral of |F_{+,-}|^2) with the classical norms."""
    bk = Dv.backend

    def parts(q):
        Fp, Fm = bundle_eigen_curvatures(Dv, q)
        g = bk.g(q)
        return classical_norm_sq(Fp, g), classical_norm_sq(Fm, g), classical_norm_sq(mixed_curvature(Dv, q), g)

    return tuple(float(integrate(bk, lambda q, i=i: parts(q)[i], m=m, dims=dims)) for i in range(3))
