"""Laplacians on T-forms and cohomology of invariant complexes.

Pointwise operators (Bochner, Hodge, Weitzenbock) work on any backend: invariant data is
evaluated exactly, chart data by nested finite differences.  Everything cohomological is
restricted to invariant forms, where it is finite-dimensional linear algebra on the
component basis of increasing index sets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from .backends import (
    Backend,
    ConstantField,
    Field,
    direct_sum_structure_constants,
    exterior_d,
    jacobi_residual,
)
from .connections import GenConnection, dT, dT_star, diamond, levi_civita, phib_connection
from .curvature import ricci_phib, riemann_phib
from .gt_linalg import GTForm, antisymmetrize, index_sets

RANK_CUT = 1e-8


class RankInstability(RuntimeError):
    """A singular value sits too close to the rank cut for a reliable decision."""


def numerical_rank(M: np.ndarray, cut: float = RANK_CUT, guard: float = 1e3) -> int:
    """Rank with a relative singular-value cut; values within a factor ``guard`` of the
    cut are rejected as unstable."""
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    rel = s / s[0]
    if np.any((rel > cut / guard) & (rel < cut * guard)):
        raise RankInstability(f"singular values near cut: {rel[(rel > cut / guard) & (rel < cut * guard)]}")
    return int(np.sum(rel >= cut))


def null_space(M: np.ndarray, cut: float = RANK_CUT) -> np.ndarray:
    """Orthonormal basis (columns) of ker M."""
    r = numerical_rank(M, cut)
    _, _, vt = np.linalg.svd(M)
    return vt[r:].conj().T


def column_space(M: np.ndarray, cut: float = RANK_CUT) -> np.ndarray:
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    r = numerical_rank(M, cut)
    u, _, _ = np.linalg.svd(M)
    return u[:, :r]


# ---------------------------------------------------------------------------
# fields of forms


def _frame_columns(bk: Backend, q) -> np.ndarray:
    ep, em = bk.metric(q).orthonormal_frame()
    return np.hstack([ep, em])


def _frame_field(bk: Backend, alpha: int) -> Callable:
    if bk.invariant:
        return ConstantField(_frame_columns(bk, bk.sample_point(np.random.default_rng(0)))[:, alpha])
    return Field(lambda q: _frame_columns(bk, q)[:, alpha])


def _lazy(bk: Backend, fn: Callable, *deps) -> Callable:
    """Field of ``fn``; constant when the backend and all inputs are invariant."""
    if bk.invariant and all(isinstance(d, ConstantField) for d in deps):
        return ConstantField(fn(bk.sample_point(np.random.default_rng(0))))
    return Field(fn)


def _coeffs(t):
    return t.coeffs if isinstance(t, GTForm) else np.asarray(t)


def bochner(D: GenConnection, theta: Callable, p, DT: GenConnection | None = None) -> np.ndarray:
    """-sum_alpha (D_f D_f - D_{DT_f f}) theta over the G-orthonormal frame {f_alpha}.

    ``theta`` is a field of T-forms (or of fiber tensors with only covariant slots).
    ``DT`` defaults to the (phi, b) connection.
    """
    bk = D.backend
    DT = phib_connection(bk) if DT is None else DT
    out = None
    for alpha in range(2 * bk.n):
        f = _frame_field(bk, alpha)
        inner = _lazy(bk, lambda q, f=f: D.apply_form(f(q), theta, q), f, theta)
        fp = np.asarray(f(p))
        term = D.apply_form(fp, inner, p) - D.apply_form(DT.apply(fp, f, p), theta, p)
        out = -term if out is None else out - term
    return out


def hodge(D: GenConnection, theta: Callable, k: int, p) -> np.ndarray:
    """dT dT* + dT* dT on a k-form field."""
    bk = D.backend
    up = _lazy(bk, lambda q: dT(D, theta, k, q), theta)
    out = dT_star(D, up, k + 1, p)
    if k > 0:
        down = _lazy(bk, lambda q: dT_star(D, theta, k, q), theta)
        out = out + dT(D, down, k - 1, p)
    return out


def curvature_term(bk: Backend, theta: np.ndarray, p) -> np.ndarray:
    """-sum_{alpha, beta} eps^alpha ^ iota_{f_beta}(R_{f_alpha, f_beta} theta).

    eps^alpha = G^b(f_alpha, .) is the dual coframe; R acts on forms as a derivation.
    On 1-forms this is theta o Ric, the identification of G^b Ric G^b.
    """
    t = GTForm._raw(_coeffs(theta))
    k = t.degree
    m = 2 * bk.n
    if k == 0:
        return np.zeros(())
    R = riemann_phib(bk, p)
    Rop = R.operator()
    F = _frame_columns(bk, p)
    Gbil = R.metric.bilinear
    out = GTForm.zero(m, k)
    for a in range(m):
        eps = GTForm._raw(Gbil @ F[:, a])
        for b in range(m):
            M = np.einsum("ABEC,A,B->EC", Rop, F[:, a], F[:, b])
            out = out - eps.wedge(t.derivation(M).contract(F[:, b]))
    return out.coeffs


def ricci_action(bk: Backend, theta: np.ndarray, p) -> np.ndarray:
    """theta o Ric for a 1-form theta."""
    return np.asarray(theta) @ ricci_phib(bk, p).matrix


def weitzenbock_residual(bk: Backend, theta: Callable, k: int, p) -> float:
    """max |hodge - bochner - curvature term| for the (phi, b) connection."""
    D = phib_connection(bk)
    lhs = hodge(D, theta, k, p)
    rhs = bochner(D, theta, p, D) + curvature_term(bk, _coeffs(theta(p)), p)
    return float(np.abs(np.asarray(lhs) - np.asarray(rhs)).max(initial=0.0))


# ---------------------------------------------------------------------------
# invariant complex


def _check_invariant(bk: Backend) -> None:
    if not bk.invariant:
        raise ValueError("invariant backend required")


def basis_forms(m: int, k: int) -> list[GTForm]:
    return [GTForm.from_basis(m, I) for I in index_sets(m, k)]


def operator_matrix(op: Callable, m: int, k: int) -> np.ndarray:
    """Matrix of a linear map on constant k-forms, in component coordinates."""
    cols = [GTForm._raw(np.asarray(op(e))).components() for e in basis_forms(m, k)]
    return np.stack(cols, axis=1)


def _jacobiator_table(D: GenConnection, p) -> np.ndarray:
    """J[A, B, C] = (E_A <> E_B) <> E_C + cyclic for constant frame sections."""
    m = 2 * D.backend.n
    E = [ConstantField(np.eye(m)[A]) for A in range(m)]
    W = np.array([[diamond(D, E[A], E[B], p) for B in range(m)] for A in range(m)])
    WE = [[ConstantField(W[A, B]) for B in range(m)] for A in range(m)]
    J = np.zeros((m, m, m, m))
    for A in range(m):
        for B in range(m):
            for C in range(m):
                J[A, B, C] = (
                    diamond(D, WE[A][B], E[C], p)
                    + diamond(D, WE[B][C], E[A], p)
                    + diamond(D, WE[C][A], E[B], p)
                )
    return J


def jacobiator_map(J: np.ndarray, theta: GTForm) -> GTForm:
    """sum_{i<j<l} (-1)^{i+j+l+1} theta([x_i <> x_j <> x_l], rest) as a (k+2)-form."""
    k = theta.degree
    if k == 0:
        return GTForm.zero(J.shape[0], 2)
    Y = np.tensordot(J, theta.coeffs, axes=([3], [0]))
    return GTForm._raw(math.comb(k + 2, 3) * antisymmetrize(Y))


@dataclass
class InvariantComplex:
    """d^{phi,b} and the Jacobiator map on constant T-forms, degree by degree."""

    n: int
    d: list[np.ndarray]
    jac: list[np.ndarray]
    dstar: list[np.ndarray]

    @property
    def m(self) -> int:
        return 2 * self.n

    def dim(self, k: int) -> int:
        return math.comb(self.m, k) if 0 <= k <= self.m else 0

    def d_matrix(self, k: int) -> np.ndarray:
        if k < 0 or k >= self.m:
            return np.zeros((self.dim(k + 1), self.dim(k)))
        return self.d[k]

    def jac_image(self, k: int) -> np.ndarray:
        """Orthonormal basis of img(J: degree k-2 -> degree k)."""
        if k < 2 or k > self.m:
            return np.zeros((self.dim(k), 0))
        return column_space(self.jac[k - 2])

    def square_residual(self) -> float:
        """max |d d - J| over degrees."""
        r = 0.0
        for k in range(self.m - 1):
            r = max(r, float(np.abs(self.d[k + 1] @ self.d[k] - self.jac[k]).max(initial=0.0)))
        return r

    def commutation_residual(self) -> float:
        r = 0.0
        for k in range(self.m - 2):
            r = max(r, float(np.abs(self.d[k + 2] @ self.jac[k] - self.jac[k + 1] @ self.d[k]).max(initial=0.0)))
        return r

    def reduced_square_residual(self) -> float:
        """d~ d~ on the quotient: component of d d outside img J."""
        r = 0.0
        for k in range(self.m - 1):
            Q = self.jac_image(k + 2)
            dd = self.d[k + 1] @ self.d[k]
            r = max(r, float(np.abs(dd - Q @ (Q.T @ dd)).max(initial=0.0)))
        return r

    def laplacian(self, k: int) -> np.ndarray:
        L = np.zeros((self.dim(k), self.dim(k)))
        if k < self.m:
            L = L + self.dstar[k + 1] @ self.d[k]
        if k > 0:
            L = L + self.d[k - 1] @ self.dstar[k]
        return L


def invariant_complex(bk: Backend, D: GenConnection | None = None) -> InvariantComplex:
    _check_invariant(bk)
    D = phib_connection(bk) if D is None else D
    p = bk.sample_point(np.random.default_rng(0))
    m = 2 * bk.n
    d = [operator_matrix(lambda e, k=k: dT(D, ConstantField(e.coeffs), k, p), m, k) for k in range(m)]
    J = _jacobiator_table(D, p)
    jac = [operator_matrix(lambda e: jacobiator_map(J, e).coeffs, m, k) for k in range(m - 1)]
    dstar = [np.zeros((0, 1))] + [
        operator_matrix(lambda e, k=k: dT_star(D, ConstantField(e.coeffs), k, p), m, k) for k in range(1, m + 1)
    ]
    return InvariantComplex(bk.n, d, jac, dstar)


def reduced_cohomology(bk: Backend, cx: InvariantComplex | None = None) -> list[int]:
    """dims of H~^k, k = 0..2n, for the invariant reduced complex."""
    cx = invariant_complex(bk) if cx is None else cx
    dims = []
    for k in range(cx.m + 1):
        Ik = cx.jac_image(k)
        Inext = cx.jac_image(k + 1)
        dk = cx.d_matrix(k)
        # cocycles modulo img J: d theta lies in img J in degree k + 1
        proj = dk - Inext @ (Inext.T @ dk)
        Z = null_space(proj) if cx.dim(k) else np.zeros((0, 0))
        B = np.hstack([cx.d_matrix(k - 1), Ik]) if k > 0 else np.zeros((cx.dim(k), 0))
        dims.append(Z.shape[1] - (numerical_rank(B) if B.size else 0))
    return dims


# ---------------------------------------------------------------------------
# first cohomology through parallel forms


def parallel_forms_P1(bk: Backend) -> np.ndarray:
    """Basis (columns, frame components) of invariant xi with nabla xi = 0, iota_{g^-1 xi} phi = 0."""
    _check_invariant(bk)
    p = bk.sample_point(np.random.default_rng(0))
    n = bk.n
    Gam = levi_civita(bk, p)
    ginv = np.linalg.inv(bk.g(p))
    phi = bk.phi(p)
    rows = []
    for a in range(n):
        rows.append(-Gam[a].T)  # (nabla_a xi)_j = -Gam[a][k, j] xi_k
    rows.append(np.einsum("kjl,ki->jli", phi, ginv).reshape(n * n, n))
    return null_space(np.vstack(rows))


def _invariant_h1(bk: Backend) -> int:
    p = bk.sample_point(np.random.default_rng(0))
    n = bk.n
    cols = [exterior_d(bk, ConstantField(np.eye(n)[i]), 1, p).ravel() for i in range(n)]
    return n - numerical_rank(np.stack(cols, axis=1))


def h1_phib(bk: Backend) -> tuple[int, np.ndarray]:
    """dim H~^1 = dim H^1 + dim P^1, with a basis of the parallel part."""
    P = parallel_forms_P1(bk)
    return _invariant_h1(bk) + P.shape[1], P


def pseudo_cohomology_check(bk: Backend, cx: InvariantComplex | None = None) -> tuple[int, int, bool]:
    """(dim ker d ∩ ker d*, dim ker Laplacian, inclusion holds) on invariant 1-forms."""
    cx = invariant_complex(bk) if cx is None else cx
    check = null_space(np.vstack([cx.d[1], cx.dstar[1]]))
    lap = null_space(cx.laplacian(1))
    inside = numerical_rank(np.hstack([lap, check])) == lap.shape[1] if check.size else True
    return check.shape[1], lap.shape[1], inside


def form_gram(bk: Backend, k: int) -> np.ndarray:
    """Gram matrix of the induced metric on k-forms in component coordinates."""
    p = bk.sample_point(np.random.default_rng(0))
    F = _frame_columns(bk, p)
    m = 2 * bk.n
    V = np.stack([GTForm._raw(e.transform(F).coeffs).components() for e in basis_forms(m, k)], axis=1)
    return V.T @ V


# ---------------------------------------------------------------------------
# Chevalley-Eilenberg cohomology


@dataclass
class CEComplex:
    c: np.ndarray
    delta: list[np.ndarray]

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    def square_residual(self) -> float:
        r = 0.0
        for k in range(len(self.delta) - 1):
            r = max(r, float(np.abs(self.delta[k + 1] @ self.delta[k]).max(initial=0.0)))
        return r

    def betti(self) -> list[int]:
        N = self.dim
        ranks = [numerical_rank(D) if D.size else 0 for D in self.delta]
        out = []
        for k in range(N + 1):
            rk = ranks[k] if k < N else 0
            rprev = ranks[k - 1] if k > 0 else 0
            out.append(math.comb(N, k) - rk - rprev)
        return out


def ce_complex(c: np.ndarray, tol: float = 1e-10) -> CEComplex:
    """delta alpha(x_0..x_k) = sum_{i<j} (-1)^{i+j} alpha([x_i, x_j], x_0.. ^i ^j ..x_k),
    assembled on increasing index sets."""
    if jacobi_residual(c) > tol:
        raise ValueError("structure constants violate the Jacobi identity")
    N = c.shape[0]
    deltas = []
    for k in range(N):
        src = list(combinations(range(N), k))
        dst = list(combinations(range(N), k + 1))
        pos = {I: i for i, I in enumerate(src)}
        M = np.zeros((len(dst), len(src)))
        for r, J in enumerate(dst):
            for i, j in combinations(range(k + 1), 2):
                rest = [J[t] for t in range(k + 1) if t not in (i, j)]
                sgn0 = (-1) ** (i + j)
                for v in range(N):
                    coef = c[J[i], J[j], v]
                    if coef == 0.0 or v in rest:
                        continue
                    seq = [v] + rest
                    order = sorted(range(len(seq)), key=lambda t: seq[t])
                    sgn = _perm_sign(order)
                    M[r, pos[tuple(sorted(seq))]] += sgn0 * sgn * coef
        deltas.append(M)
    return CEComplex(c, deltas)


def _perm_sign(order: list[int]) -> int:
    sgn = 1
    seen = [False] * len(order)
    for i in range(len(order)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sgn = -sgn
    return sgn


def ce_cohomology(c: np.ndarray) -> list[int]:
    """Betti numbers of the Lie algebra g + g for structure constants c of g."""
    return ce_complex(direct_sum_structure_constants(c, c)).betti()


def kunneth(*bettis: list[int]) -> list[int]:
    out = [1]
    for b in bettis:
        out = list(np.convolve(out, b).astype(int))
    return [int(v) for v in out]
