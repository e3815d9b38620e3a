"""Generalized almost complex and Hermitian structures.

A generalized almost Hermitian structure is stored through its classical data
(g, b, I_+, I_-); J acts on the lift x^{b+-} of X as the lift of I_+- X.  Complex
types follow the convention that a form of type (p, q) is non-zero on p arguments
from L = T^{1,0}_J and q arguments from its conjugate.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .backends import Backend, ConstantField, Field, exterior_d, lie_bracket
from .connections import (
    GenConnection,
    bismut_connection,
    dT,
    diamond,
    levi_civita,
    nabla_phi_coefficients,
    phib_connection,
)
from .curvature import bismut_curvature, riemann, riemann_phib
from .gt_linalg import GenMetric, index_sets, is_generalized_almost_complex

SIGNS = (1, -1)


def standard_complex_structure(n: int) -> np.ndarray:
    """I e_{2k} = e_{2k+1} on R^n, n even."""
    if n % 2:
        raise ValueError("odd dimension")
    I = np.zeros((n, n))
    for k in range(0, n, 2):
        I[k + 1, k] = 1.0
        I[k, k + 1] = -1.0
    return I


def hermitian_residual(g: np.ndarray, I: np.ndarray) -> float:
    """max(|I^2 + 1|, |I^T g I - g|)."""
    n = g.shape[0]
    return float(max(np.abs(I @ I + np.eye(n)).max(), np.abs(I.T @ g @ I - g).max()))


def projectors(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(P^{1,0}, P^{0,1}) = (1/2 (1 - iJ), 1/2 (1 + iJ))."""
    E = np.eye(J.shape[0])
    return 0.5 * (E - 1j * J), 0.5 * (E + 1j * J)


@dataclass(frozen=True)
class GenComplexStructure:
    J: np.ndarray
    metric: GenMetric | None = None
    tol: float = 1e-10

    def __post_init__(self) -> None:
        J = np.asarray(self.J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] % 2:
            raise ValueError("J must be 2n x 2n")
        scale = max(1.0, float(np.abs(J).max())) ** 2
        if not is_generalized_almost_complex(J, self.tol * scale):
            raise ValueError("J is not an orthogonal almost complex structure")
        object.__setattr__(self, "J", J)

    @property
    def n(self) -> int:
        return self.J.shape[0] // 2

    @property
    def commutes_with_metric(self) -> bool:
        if self.metric is None:
            return False
        G = self.metric.matrix
        return float(np.abs(self.J @ G - G @ self.J).max()) <= self.tol * max(1.0, float(np.abs(G).max())) ** 2

    def induced(self, sign: int) -> np.ndarray:
        if not self.commutes_with_metric:
            raise ValueError("J does not commute with G^b")
        return (self.J @ self.metric.lift_matrix(sign))[: self.n]

    @property
    def I_plus(self) -> np.ndarray:
        return self.induced(1)

    @property
    def I_minus(self) -> np.ndarray:
        return self.induced(-1)

    def partner(self) -> "GenComplexStructure":
        """J_- = G^b J."""
        if self.metric is None:
            raise ValueError("no metric attached")
        return GenComplexStructure(self.metric.matrix @ self.J, self.metric, self.tol)

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        return projectors(self.J)


def assemble_J(G: GenMetric, I_plus: np.ndarray, I_minus: np.ndarray) -> np.ndarray:
    E = G.eigenbasis()
    n = G.n
    blocks = np.zeros((2 * n, 2 * n))
    blocks[:n, :n] = I_plus
    blocks[n:, n:] = I_minus
    return E @ blocks @ np.linalg.inv(E)


def from_bihermitian(g, b, I_plus, I_minus, tol: float = 1e-10) -> tuple[GenComplexStructure, GenComplexStructure]:
    """(J, J_-) from a bi-Hermitian quadruple."""
    g = np.asarray(g, dtype=float)
    for name, I in (("I_+", I_plus), ("I_-", I_minus)):
        if hermitian_residual(g, np.asarray(I, dtype=float)) > tol * max(1.0, float(np.abs(g).max())):
            raise ValueError(f"g is not Hermitian for {name}")
    G = GenMetric(g, np.asarray(b, dtype=float))
    J = GenComplexStructure(assemble_J(G, np.asarray(I_plus, float), np.asarray(I_minus, float)), G, tol)
    return J, J.partner()


def to_bihermitian(J, G: GenMetric) -> tuple[np.ndarray, np.ndarray]:
    s = J if isinstance(J, GenComplexStructure) else GenComplexStructure(np.asarray(J), G)
    if s.metric is None:
        s = GenComplexStructure(s.J, G, s.tol)
    return s.I_plus, s.I_minus


# ---------------------------------------------------------------------------
# structures on a backend


@dataclass(frozen=True, eq=False)
class GenHermitian:
    """Generalized almost Hermitian data (G^b of the backend, I_+, I_-)."""

    backend: Backend
    I_plus: Callable
    I_minus: Callable

    def I(self, sign: int, p) -> np.ndarray:
        return np.asarray((self.I_plus if sign > 0 else self.I_minus)(p), dtype=float)

    def I_field(self, sign: int) -> Callable:
        return self.I_plus if sign > 0 else self.I_minus

    def J(self, p) -> np.ndarray:
        return assemble_J(self.backend.metric(p), self.I(1, p), self.I(-1, p))

    def structure(self, p) -> GenComplexStructure:
        J, _ = from_bihermitian(self.backend.g(p), self.backend.b(p), self.I(1, p), self.I(-1, p))
        return J

    @property
    def constant(self) -> bool:
        return self.backend.invariant and all(isinstance(f, ConstantField) for f in (self.I_plus, self.I_minus))

    def J_field(self) -> Callable:
        if self.constant:
            return ConstantField(self.J(None))
        return Field(self.J)

    def with_backend(self, bk: Backend) -> "GenHermitian":
        return GenHermitian(bk, self.I_plus, self.I_minus)


def _point(hs: GenHermitian, p):
    return hs.backend.sample_point(np.random.default_rng(0)) if p is None else p


# ---------------------------------------------------------------------------
# complex types


def _apply_axes(c: np.ndarray, mats) -> np.ndarray:
    for axis, M in enumerate(mats):
        c = np.moveaxis(np.tensordot(c, M, axes=([axis], [0])), -1, axis)
    return c


def type_project(J: np.ndarray, theta) -> dict:
    """{(p, q): component} with p slots fed from T^{1,0} and q from T^{0,1}."""
    c = np.asarray(getattr(theta, "coeffs", theta))
    k = c.ndim
    P10, P01 = projectors(np.asarray(J))
    out = {(p, k - p): np.zeros(c.shape, dtype=complex) for p in range(k + 1)}
    for mask in itertools.product((0, 1), repeat=k):
        mats = [P10 if m else P01 for m in mask]
        p = sum(mask)
        out[(p, k - p)] = out[(p, k - p)] + _apply_axes(c.astype(complex), mats)
    return out


def _component_field(J_fn: Callable, theta: Callable, key: tuple[int, int], invariant: bool) -> Callable:
    if invariant and isinstance(theta, ConstantField) and isinstance(J_fn, ConstantField):
        return ConstantField(type_project(J_fn(None), theta(None))[key])
    return Field(lambda q: type_project(J_fn(q), theta(q))[key])


@dataclass(frozen=True)
class TypeSplit:
    partial: np.ndarray
    dbar: np.ndarray
    leak: float


def dbar_split(D: GenConnection, theta: Callable, k: int, J_fn: Callable, p) -> TypeSplit:
    """(d^T theta) split into its partial and dbar parts, with the norm of what is left.

    Each bidegree component of theta is differentiated separately; the part of d^T of a
    (a, b) component outside (a+1, b) and (a, b+1) is reported as leakage.
    """
    bk = D.backend
    Jp = np.asarray(J_fn(p))
    if k == 0:
        comps = {(0, 0): theta}
    else:
        comps = {(a, k - a): _component_field(J_fn, theta, (a, k - a), bk.invariant) for a in range(k + 1)}
    shape = (2 * bk.n,) * (k + 1)
    part = np.zeros(shape, dtype=complex)
    bar = np.zeros(shape, dtype=complex)
    leak = 0.0
    for (a, b), comp in comps.items():
        types = type_project(Jp, dT(D, comp, k, p))
        for key, val in types.items():
            if key == (a + 1, b):
                part = part + val
            elif key == (a, b + 1):
                bar = bar + val
            else:
                leak = max(leak, float(np.abs(val).max(initial=0.0)))
    return TypeSplit(part, bar, leak)


def dbar_function(D: GenConnection, f: Callable, J_fn: Callable) -> Field:
    """d_{Lbar} f as a field of 1-forms."""
    return Field(lambda q: type_project(J_fn(q), dT(D, f, 0, q))[(0, 1)])


def partial_function(D: GenConnection, f: Callable, J_fn: Callable) -> Field:
    return Field(lambda q: type_project(J_fn(q), dT(D, f, 0, q))[(1, 0)])


def vanishing_components(D: GenConnection, f: Callable, J_fn: Callable, p) -> dict:
    """Residuals of partial^2 f, dbar^2 f and (partial dbar + dbar partial) f."""
    s1 = dbar_split(D, partial_function(D, f, J_fn), 1, J_fn, p)
    s2 = dbar_split(D, dbar_function(D, f, J_fn), 1, J_fn, p)
    return {
        "partial_partial": float(np.abs(s1.partial).max()),
        "dbar_dbar": float(np.abs(s2.dbar).max()),
        "mixed": float(np.abs(s1.dbar + s2.partial).max()),
        "leak": max(s1.leak, s2.leak),
    }


def ddbar_function(D: GenConnection, f: Callable, J_fn: Callable, p) -> np.ndarray:
    """partial^T dbar^T f as a 2-form."""
    return dbar_split(D, dbar_function(D, f, J_fn), 1, J_fn, p).partial


def classical_ddbar(bk: Backend, f: Callable, I_fn: Callable, p) -> np.ndarray:
    """(partial dbar f)(X, Ybar) on X = P^{1,0} E_a, Ybar = P^{0,1} E_b, via d of dbar f."""
    n = bk.n

    def dbar_f(q):
        return np.asarray(bk.derivative(f, q)).astype(complex) @ projectors(np.asarray(I_fn(q)))[1]

    d = exterior_d(bk, Field(dbar_f), 1, p)
    P10, P01 = projectors(np.asarray(I_fn(p)))
    return P10.T @ d @ P01 if n else d


def ddbar_blocks(hs: GenHermitian, D: GenConnection, f: Callable, p) -> dict:
    """Generalized partial dbar f on (x_+-, ybar_+-) next to its classical counterpart."""
    bk = hs.backend
    G = bk.metric(p)
    gen = ddbar_function(D, f, hs.J_field(), p)
    out = {}
    for s in SIGNS:
        P10, P01 = projectors(hs.I(s, p))
        L = G.lift_matrix(s)
        out[s] = ((L @ P10).T @ gen @ (L @ P01), classical_ddbar(bk, f, hs.I_field(s), p))
    return out


# ---------------------------------------------------------------------------
# integrability


def covariant_endomorphism_derivative(bk: Backend, I_fn: Callable, p, Gam: np.ndarray) -> np.ndarray:
    """DI[a] = nabla_{E_a} I = E_a(I) + [Gam_a, I]."""
    I = np.asarray(I_fn(p), dtype=float)
    dI = np.asarray(bk.derivative(I_fn, p), dtype=float)
    return dI + np.einsum("akj,jl->akl", Gam, I) - np.einsum("kj,ajl->akl", I, Gam)


def gk_condition_residual(hs: GenHermitian, p=None) -> float:
    """max over signs of |nabla^{+-phi} I_+-| on the frame."""
    bk = hs.backend
    p = _point(hs, p)
    out = 0.0
    for s in SIGNS:
        Gam = nabla_phi_coefficients(bk, p, s)
        out = max(out, float(np.abs(covariant_endomorphism_derivative(bk, hs.I_field(s), p, Gam)).max()))
    return out


def bismut_J_derivative(hs: GenHermitian, p=None) -> np.ndarray:
    """DJ[A] = D^{phi,B}_{E_A} J as a 2n x 2n matrix for each frame direction."""
    bk = hs.backend
    p = _point(hs, p)
    n = bk.n
    C = bismut_connection(bk).coefficients(p)  # C[A, c, b]: D_{E_A} E_b = C[A, c, b] E_c
    J = hs.J(p)
    out = np.einsum("Acb,bd->Acd", C, J) - np.einsum("cb,Abd->Acd", J, C)
    if not hs.constant:
        out[:n] = out[:n] + np.asarray(bk.derivative(hs.J_field(), p))
    return out


def gk_equivalence(hs: GenHermitian, p=None, tol: float = 1e-8) -> tuple[bool, bool]:
    """(nabla^{+-phi} I_+- = 0, D^{phi,B} J = 0) as booleans at tol."""
    p = _point(hs, p)
    return gk_condition_residual(hs, p) <= tol, float(np.abs(bismut_J_derivative(hs, p)).max()) <= tol


def _frame_fields_of(bk: Backend, I_fn: Callable) -> tuple[list, list]:
    n = bk.n
    E = [ConstantField(np.eye(n)[a]) for a in range(n)]
    if isinstance(I_fn, ConstantField):
        IE = [ConstantField(np.asarray(I_fn(None)) @ np.eye(n)[a]) for a in range(n)]
    else:
        IE = [Field(lambda q, a=a: np.asarray(I_fn(q))[:, a]) for a in range(n)]
    return E, IE


def nijenhuis_bracket(bk: Backend, I_fn: Callable, p) -> np.ndarray:
    """N[a, b] = [X, Y] + I[IX, Y] + I[X, IY] - [IX, IY] on frame fields X = E_a, Y = E_b."""
    n = bk.n
    I = np.asarray(I_fn(p), dtype=float)
    E, IE = _frame_fields_of(bk, I_fn)
    N = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            N[a, b] = (
                lie_bracket(bk, E[a], E[b], p)
                + I @ lie_bracket(bk, IE[a], E[b], p)
                + I @ lie_bracket(bk, E[a], IE[b], p)
                - lie_bracket(bk, IE[a], IE[b], p)
            )
    return N


def nijenhuis_covariant(bk: Backend, I_fn: Callable, p) -> np.ndarray:
    """Same tensor from Levi-Civita derivatives of I."""
    I = np.asarray(I_fn(p), dtype=float)
    DI = covariant_endomorphism_derivative(bk, I_fn, p, levi_civita(bk, p))  # DI[c, k, j]
    t1 = np.einsum("ca,ckb->abk", I, DI)  # (nabla_{I E_a} I) E_b
    t3 = np.einsum("kl,alb->abk", I, DI)  # I (nabla_{E_a} I) E_b
    return -t1 + np.transpose(t1, (1, 0, 2)) + t3 - np.transpose(t3, (1, 0, 2))


def nijenhuis_via_phi(g: np.ndarray, phi: np.ndarray, I: np.ndarray, sign: int = 1) -> np.ndarray:
    """N[a, b] = sign g^{-1} of Z -> phi(IX, IY, Z) + phi(IX, Y, IZ) + phi(X, IY, IZ) - phi(X, Y, Z).

    Valid for I parallel under nabla^{sign phi}.
    """
    t = (
        np.einsum("ia,jb,ijz->abz", I, I, phi)
        + np.einsum("ia,kz,ibk->abz", I, I, phi)
        + np.einsum("jb,kz,ajk->abz", I, I, phi)
        - phi
    )
    return sign * np.einsum("abz,kz->abk", t, np.linalg.inv(g))


def nijenhuis_phi_residual(hs: GenHermitian, sign: int, p=None) -> float:
    bk = hs.backend
    p = _point(hs, p)
    N = nijenhuis_bracket(bk, hs.I_field(sign), p)
    return float(np.abs(N - nijenhuis_via_phi(bk.g(p), bk.phi(p), hs.I(sign, p), sign)).max())


def admissibility_residual(phi: np.ndarray, I_plus: np.ndarray, I_minus: np.ndarray) -> float:
    """max |phi(I_- X, Y, Z) + phi(X, I_+ Y, Z)|."""
    t = np.einsum("ia,ibc->abc", I_minus, phi) + np.einsum("ib,aic->abc", I_plus, phi)
    return float(np.abs(t).max())


def admissible_three_forms(I_plus: np.ndarray, I_minus: np.ndarray, tol: float = 1e-10) -> list[np.ndarray]:
    """Basis of the 3-forms satisfying the admissibility condition."""
    n = I_plus.shape[0]
    sets = index_sets(n, 3)
    cols = []
    for idx in sets:
        phi = np.zeros((n,) * 3)
        for perm in itertools.permutations(range(3)):
            sgn = np.linalg.det(np.eye(3)[list(perm)])
            phi[tuple(idx[i] for i in perm)] = sgn
        t = np.einsum("ia,ibc->abc", I_minus, phi) + np.einsum("ib,aic->abc", I_plus, phi)
        cols.append(t.ravel())
    A = np.array(cols).T
    _, s, Vt = np.linalg.svd(A)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    out = []
    for v in Vt[rank:]:
        phi = np.zeros((n,) * 3)
        for idx, c in zip(sets, v):
            for perm in itertools.permutations(range(3)):
                sgn = np.linalg.det(np.eye(3)[list(perm)])
                phi[tuple(idx[i] for i in perm)] = sgn * c
        out.append(phi)
    return out


# ---------------------------------------------------------------------------
# J-Ricci form and J-scalar curvature of the Bismut connection


def j_ricci_form(hs: GenHermitian, p=None) -> np.ndarray:
    """rho_J[A, B] = sum_i R(E_A, E_B, J e_i^{b+}, e_i^{b+}) + (same on C_-)."""
    bk = hs.backend
    p = _point(hs, p)
    R = bismut_curvature(bk, p)
    ep, em = R.metric.orthonormal_frame()
    J = hs.J(p)
    F = np.hstack([ep, em])
    return np.einsum("ABCD,Ci,Di->AB", R.tensor, J @ F, F)


def classical_bismut_ricci_forms(hs: GenHermitian, p=None) -> dict:
    """rho_+-(X, Y) = sum_i R^{+-phi}(X, Y, I_+- X_i, X_i) over a g-orthonormal frame."""
    from .gt_linalg import gram_schmidt

    bk = hs.backend
    p = _point(hs, p)
    X = gram_schmidt(bk.g(p))
    return {s: np.einsum("abcd,ci,di->ab", riemann(bk, p, s), hs.I(s, p) @ X, X) for s in SIGNS}


def j_scalar(hs: GenHermitian, p=None) -> float:
    bk = hs.backend
    p = _point(hs, p)
    rho = j_ricci_form(hs, p)
    ep, em = bk.metric(p).orthonormal_frame()
    J = hs.J(p)
    F = np.hstack([ep, em])
    return float(np.einsum("AB,Ai,Bi->", rho, J @ F, F))


def classical_scalars(hs: GenHermitian, p=None) -> dict:
    """S_+, S_-, and the mixed scalar computed from R^{+phi} and from R^{-phi}."""
    from .gt_linalg import gram_schmidt

    bk = hs.backend
    p = _point(hs, p)
    X = gram_schmidt(bk.g(p))
    Ip, Im = hs.I(1, p) @ X, hs.I(-1, p) @ X
    Rp, Rm = riemann(bk, p, 1), riemann(bk, p, -1)
    return {
        "S_plus": float(np.einsum("abcd,ai,bi,cj,dj->", Rp, Ip, X, Ip, X)),
        "S_minus": float(np.einsum("abcd,ai,bi,cj,dj->", Rm, Im, X, Im, X)),
        "S_mixed_plus": float(np.einsum("abcd,ai,bi,cj,dj->", Rp, Im, X, Ip, X)),
        "S_mixed_minus": float(np.einsum("abcd,ai,bi,cj,dj->", Rm, Ip, X, Im, X)),
    }


# ---------------------------------------------------------------------------
# holomorphic structure on T^{1,0}_J induced by the diamond bracket


def _basis_columns(hs: GenHermitian, which: int, p) -> list[int]:
    """n columns of P^{1,0} (which = 1) or P^{0,1} (which = 0) spanning its image at p."""
    from scipy.linalg import qr

    _, _, piv = qr(projectors(hs.J(p))[0 if which else 1], pivoting=True)
    return sorted(int(A) for A in piv[: hs.backend.n])


def _typed_frame(hs: GenHermitian, which: int, p) -> list[Callable]:
    k = 0 if which else 1
    cols = _basis_columns(hs, which, p)
    if hs.constant:
        P = projectors(hs.J(None))[k]
        return [ConstantField(P[:, A]) for A in cols]
    return [Field(lambda q, A=A: projectors(hs.J(q))[k][:, A]) for A in cols]


def _diamond_field(D: GenConnection, x: Callable, y: Callable, constant: bool, p) -> Callable:
    if constant:
        return ConstantField(diamond(D, x, y, p))
    return Field(lambda q: diamond(D, x, y, q))


def dbar_diamond_square(hs: GenHermitian, p=None, D: GenConnection | None = None, scale: Callable | None = None) -> np.ndarray:
    """T[A, B, C] = [xb <> (yb <> z) - yb <> (xb <> z) - (xb <> yb) <> z]_{1,0} on basis fields.

    ``scale`` multiplies the first argument field by a function, for tensoriality checks.
    """
    bk = hs.backend
    p = _point(hs, p)
    D = phib_connection(bk) if D is None else D
    bars = _typed_frame(hs, 0, p)
    zs = _typed_frame(hs, 1, p)
    const = hs.constant and scale is None
    if scale is not None:
        bars_x = [Field(lambda q, f=f: scale(q) * f(q)) for f in bars]
    else:
        bars_x = bars
    P10 = projectors(hs.J(p))[0]
    m = len(bars)
    out = np.zeros((m, m, m, 2 * bk.n), dtype=complex)
    for A in range(m):
        for B in range(m):
            xy = _diamond_field(D, bars_x[A], bars[B], const, p)
            for C in range(m):
                yz = _diamond_field(D, bars[B], zs[C], const, p)
                xz = _diamond_field(D, bars_x[A], zs[C], const, p)
                v = diamond(D, bars_x[A], yz, p) - diamond(D, bars[B], xz, p) - diamond(D, xy, zs[C], p)
                out[A, B, C] = P10 @ v
    return out


def dbar_diamond_from_curvature(hs: GenHermitian, p=None) -> np.ndarray:
    """Same tensor from R^{phi,b}: [R_{xb,yb} z + R_{yb,z} xb + R_{z,xb} yb]_{1,0}."""
    bk = hs.backend
    p = _point(hs, p)
    R = riemann_phib(bk, p)
    Rop = R.operator()  # Rop[A, B, :, C] = R_{E_A, E_B} E_C
    P10, P01 = projectors(hs.J(p))
    B01 = P01[:, _basis_columns(hs, 0, p)]
    B10 = P10[:, _basis_columns(hs, 1, p)]

    def r(a, b, c):
        return np.einsum("ABKC,Ai,Bj,Cl->ijlK", Rop, a, b, c)

    t = r(B01, B01, B10) + np.transpose(r(B01, B10, B01), (2, 0, 1, 3)) + np.transpose(r(B10, B01, B01), (1, 2, 0, 3))
    return np.einsum("kK,ijlK->ijlk", P10, t)


def holomorphic_obstruction(hs: GenHermitian, p=None) -> float:
    """max |R^{+-phi}_{Xbar_-+, Ybar_+-} Zbar_+-| over frame vectors."""
    bk = hs.backend
    p = _point(hs, p)
    g = bk.g(p)
    out = 0.0
    for s in SIGNS:
        Rs = riemann(bk, p, s)  # Rs[a, b, c, d] = g(R_{a b} E_c, E_d)
        Pa = projectors(hs.I(-s, p))[1]
        Pb = projectors(hs.I(s, p))[1]
        v = np.einsum("abcd,ai,bj,ck->ijkd", Rs, Pa, Pb, Pb)
        out = max(out, float(np.abs(np.einsum("ijkd,de->ijke", v, np.linalg.inv(g))).max()))
    return out


def dbar_diamond_residual(hs: GenHermitian, p=None) -> float:
    return float(np.abs(dbar_diamond_square(hs, p)).max())


# ---------------------------------------------------------------------------
# fixtures


def flat_kahler(n: int = 4) -> GenHermitian:
    """Flat torus, phi = 0, I_+ = I_- = standard."""
    from .backends import InvariantTorusBackend

    I = ConstantField(standard_complex_structure(n))
    return GenHermitian(InvariantTorusBackend(n=n), I, I)


def flat_bihermitian(n: int = 4) -> GenHermitian:
    """Flat torus, phi = b = 0, with constant I_+ != +-I_-."""
    from .backends import InvariantTorusBackend

    Ip = standard_complex_structure(n)
    Im = Ip.copy()
    Im[2:4, 2:4] = -Im[2:4, 2:4]
    return GenHermitian(InvariantTorusBackend(n=n), ConstantField(Ip), ConstantField(Im))


def flat_opposite(n: int = 6) -> GenHermitian:
    """Flat torus with I_- = -I_+, carrying a 2-dimensional admissible 3-form space for n = 6."""
    from .backends import InvariantTorusBackend

    Ip = standard_complex_structure(n)
    return GenHermitian(InvariantTorusBackend(n=n), ConstantField(Ip), ConstantField(-Ip))


def real_part_holomorphic_volume(n: int = 6) -> np.ndarray:
    """Re(dz^1 ^ dz^2 ^ dz^3) with z^k = x^{2k} + i x^{2k+1}."""
    if n != 6:
        raise ValueError("needs n = 6")
    dz = [np.eye(6)[2 * k] + 1j * np.eye(6)[2 * k + 1] for k in range(3)]
    t = np.einsum("a,b,c->abc", *dz)
    out = np.zeros((6, 6, 6), dtype=complex)
    for perm in itertools.permutations(range(3)):
        out = out + np.linalg.det(np.eye(3)[list(perm)]) * np.transpose(t, perm)
    return out.real


def sphere_kahler(opposite: bool = False, radius: float = 1.0) -> GenHermitian:
    """Round S^2 in stereographic coordinates; I_- = -I_+ when ``opposite``."""
    from .backends import chart_from_catalogue

    bk = chart_from_catalogue(2, metric="round_sphere", metric_params={"radius": radius})
    I = standard_complex_structure(2)
    return GenHermitian(bk, ConstantField(I), ConstantField(-I if opposite else I))


def lie_almost_hermitian(seed: int = 0, parallel_sign: int = -1) -> GenHermitian:
    """SU(2) x SU(2) with bi-invariant g, Cartan phi and a generic invariant orthogonal I on both sides.

    The sign of the Cartan form is chosen so that nabla^{parallel_sign phi} is the flat
    connection of the invariant frame; I is parallel for it and generically not integrable.
    """
    from .backends import LieGroupBackend, direct_sum_structure_constants, su2_structure_constants
    from .gt_linalg import gram_schmidt

    c = direct_sum_structure_constants(su2_structure_constants(), su2_structure_constants())
    bk = LieGroupBackend(n=6, c=c, kappa_gamma=-float(parallel_sign))
    g = bk.g(None)
    X = gram_schmidt(g)
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    I0 = Q @ standard_complex_structure(6) @ Q.T
    I = X @ I0 @ np.linalg.inv(X)
    return GenHermitian(bk, ConstantField(I), ConstantField(I))
