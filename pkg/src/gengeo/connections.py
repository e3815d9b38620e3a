"""Covariant derivatives and brackets on TM and on the generalized tangent bundle.

A generalized connection on TM + T*M is stored through its coefficients in the fiber
basis {E_A} = {E_1..E_n, E^1..E^n}: ``coeffs[A][:, B]`` is D_{E_A} E_B.  Sections are
callables returning length-2n arrays; forms are callables returning (2n,)*k arrays of
values (see ``GTForm``).  Classical connections on TM are stored as ``Gam[a][k, j]`` with
nabla_{E_a} E_j = Gam[a][k, j] E_k.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .backends import Backend, ConstantField, Field, exterior_d
from .gt_linalg import GenMetric, GTForm, antisymmetrize, b_transform_matrix, swap_matrix


class RouteDisagreement(RuntimeError):
    """Two independent evaluations of the same quantity differ beyond tolerance."""


def default_tol(bk: Backend) -> float:
    return 1e-10 if bk.invariant else 5e-5


# ---------------------------------------------------------------------------
# classical connections on TM


def levi_civita(bk: Backend, p) -> np.ndarray:
    """Christoffel matrices of the Levi-Civita connection in the backend frame."""
    g = bk.g(p)
    ginv = np.linalg.inv(g)
    dg = bk.derivative(bk.field("g"), p)  # dg[a, j, k] = E_a g_jk
    c = bk.frame_brackets(p)
    cg = np.einsum("ajm,mk->ajk", c, g)  # g([E_a, E_j], E_k)
    low = 0.5 * (
        dg
        + np.transpose(dg, (1, 0, 2))
        - np.transpose(dg, (1, 2, 0))
        + cg
        - np.transpose(cg, (2, 0, 1))
        + np.transpose(cg, (1, 2, 0))
    )
    # low[a, j, k] = g(nabla_a E_j, E_k)
    return np.einsum("kl,ajl->akj", ginv, low)


def nabla_phi_coefficients(bk: Backend, p, sign: int, Gam: np.ndarray | None = None, phi=None) -> np.ndarray:
    """nabla^{+-phi} = nabla +- 1/2 g^{-1} phi(X, Y, .)."""
    if Gam is None:
        Gam = levi_civita(bk, p)
    if sign == 0:
        return Gam
    phi = bk.phi(p) if phi is None else phi
    ginv = np.linalg.inv(bk.g(p))
    return Gam + sign * 0.5 * np.einsum("kl,ajl->akj", ginv, phi)


def covariant_vector_derivative(bk: Backend, Y: Callable, p, Gam: np.ndarray) -> np.ndarray:
    """N[a, k] = (nabla_{E_a} Y)^k."""
    return bk.derivative(Y, p) + np.einsum("akj,j->ak", Gam, np.asarray(Y(p)))


def nabla_phi(bk: Backend, sign: int, X, Y: Callable, p) -> np.ndarray:
    Gam = nabla_phi_coefficients(bk, p, sign)
    Xp = np.asarray(X(p) if callable(X) else X, dtype=float)
    return Xp @ covariant_vector_derivative(bk, Y, p, Gam)


def act_on_tensor(M: np.ndarray, t: np.ndarray, axes=None) -> np.ndarray:
    """Derivation action of an endomorphism on covariant slots: -sum t(.., M e_i, ..)."""
    axes = range(t.ndim) if axes is None else axes
    out = np.zeros(t.shape, dtype=np.result_type(t, M))
    for ax in axes:
        out = out - np.moveaxis(np.tensordot(t, M, axes=([ax], [0])), -1, ax)
    return out


def covariant_form_derivative(bk: Backend, alpha: Callable, p, Gam: np.ndarray | None = None) -> np.ndarray:
    """nab[a, ...] = (nabla_{E_a} alpha)(...) for a classical covariant tensor field."""
    if Gam is None:
        Gam = levi_civita(bk, p)
    a = np.asarray(alpha(p))
    D = np.asarray(bk.derivative(alpha, p), dtype=np.result_type(a, float))
    return D + np.stack([act_on_tensor(Gam[i], a) for i in range(bk.n)])


def torsion_tensor(Gam: np.ndarray, c: np.ndarray) -> np.ndarray:
    """T[a, b, k] for T(E_a, E_b) = nabla_a E_b - nabla_b E_a - [E_a, E_b]."""
    return np.transpose(Gam, (0, 2, 1)) - np.transpose(Gam, (2, 0, 1)) - c


# ---------------------------------------------------------------------------
# fields of generalized vectors


def matrix_field(bk: Backend, M: Callable, y: Callable) -> Field:
    """q -> M(q) y(q) with the product rule for its frame derivative."""

    def fn(q):
        return np.asarray(M(q)) @ np.asarray(y(q))

    def deriv(q):
        Mq = np.asarray(M(q))
        dM = bk.derivative(M, q)
        dy = bk.derivative(y, q)
        return np.einsum("ij,aj->ai", Mq, dy) + np.einsum("aij,j->ai", dM, np.asarray(y(q)))

    return Field(fn, deriv)


def lift_field(bk: Backend, X: Callable, sign: int) -> Field:
    """q -> X + (b +- g) X as a section of C_+- ."""

    def M(q):
        return _lift_matrix(bk.g(q), bk.b(q), sign)

    Mf = ConstantField(M(None)) if bk.invariant else Field(M)
    return matrix_field(bk, Mf, X)


def _lift_matrix(g, b, sign):
    return np.vstack([np.eye(len(g)), b.T + sign * g])


def constant_section(v) -> ConstantField:
    return ConstantField(np.asarray(v, dtype=float))


def _frame_fields(m: int) -> list[ConstantField]:
    return [constant_section(np.eye(m)[A]) for A in range(m)]


# ---------------------------------------------------------------------------
# generalized connections on TM + T*M


@dataclass(frozen=True, eq=False)
class GenConnection:
    """Generalized connection on the generalized tangent bundle, given by its coefficients."""

    backend: Backend
    coeff_fn: Callable
    kind: str = "custom"

    def coefficients(self, p) -> np.ndarray:
        return np.asarray(self.coeff_fn(p))

    def coeff_field(self) -> Callable:
        if self.backend.invariant:
            return ConstantField(self.coefficients(self.backend.sample_point(np.random.default_rng(0))))
        return Field(self.coeff_fn)

    def frame_derivative(self, y: Callable, p) -> np.ndarray:
        """Dy[A, :] = D_{E_A} y."""
        bk = self.backend
        n = bk.n
        yp = np.asarray(y(p))
        C = self.coefficients(p)
        out = np.einsum("Acb,b->Ac", C, yp).astype(np.result_type(C, yp))
        out[:n] = out[:n] + bk.derivative(y, p)
        return out

    def apply(self, x, y: Callable, p) -> np.ndarray:
        xp = np.asarray(x(p) if callable(x) else x)
        return xp @ self.frame_derivative(y, p)

    def form_derivative(self, theta: Callable, p) -> np.ndarray:
        """Dt[A, ...] = (D_{E_A} theta)(...) for a field of T-forms (raw coefficients)."""
        bk = self.backend
        n = bk.n
        t = np.asarray(_coeffs(theta(p)))
        C = self.coefficients(p)
        out = np.stack([act_on_tensor(C[A], t) for A in range(2 * n)])
        if t.ndim == 0:
            out = np.zeros((2 * n,), dtype=t.dtype)
        tf = _coeff_field(theta)
        out = out.astype(np.result_type(out, t, float))
        out[:n] = out[:n] + bk.derivative(tf, p)
        return out

    def apply_form(self, x, theta: Callable, p) -> np.ndarray:
        xp = np.asarray(x(p) if callable(x) else x)
        return np.tensordot(xp, self.form_derivative(theta, p), axes=(0, 0))

    def bracket(self, x: Callable, y: Callable, p) -> np.ndarray:
        return diamond(self, x, y, p)


def _coeffs(t):
    return t.coeffs if isinstance(t, GTForm) else t


def _coeff_field(theta: Callable) -> Callable:
    if isinstance(theta, (ConstantField, Field)):
        return theta
    return lambda q: _coeffs(theta(q))


def _metric_field(bk: Backend, fn: Callable) -> Callable:
    if bk.invariant:
        return ConstantField(fn(bk.sample_point(np.random.default_rng(0))))
    return Field(fn)


def assemble_from_eigen(bk: Backend, p, blocks) -> np.ndarray:
    """Coefficients of the connection with D_{x^s} y^t = lift_t(nabla^{st}_X Y).

    ``blocks[(s, t)]`` are Christoffel matrices of classical connections; the lift of
    frame vectors gives a moving basis L of the fiber, and the standard-basis
    coefficients are L dL^{-1} + sum_alpha L^{-1}[alpha, A] L C_alpha L^{-1}.
    """
    n = bk.n
    G = bk.metric(p)
    L = G.eigenbasis()
    Linv = np.linalg.inv(L)
    C = np.zeros((2 * n, 2 * n, 2 * n))
    for si, s in enumerate((1, -1)):
        for ti, t in enumerate((1, -1)):
            Gam = blocks[(s, t)]
            for a in range(n):
                C[si * n + a, ti * n:(ti + 1) * n, ti * n:(ti + 1) * n] = Gam[a]
    out = np.einsum("aA,ij,ajk,kl->Ail", Linv, L, C, Linv, optimize=True)
    if not bk.invariant:
        dLinv = bk.derivative(lambda q: np.linalg.inv(bk.metric(q).eigenbasis()), p)
        out[:n] += np.einsum("ij,ajk->aik", L, dLinv)
    return out


def phib_blocks(bk: Backend, p) -> dict:
    Gam = levi_civita(bk, p)
    phi = bk.phi(p)
    plus = nabla_phi_coefficients(bk, p, +1, Gam, phi)
    minus = nabla_phi_coefficients(bk, p, -1, Gam, phi)
    return {(1, 1): Gam, (-1, -1): Gam, (1, -1): minus, (-1, 1): plus}


def phib_coefficients(bk: Backend, p) -> np.ndarray:
    """D^{phi,b} coefficients from its eigen-lift description."""
    return assemble_from_eigen(bk, p, phib_blocks(bk, p))


def phib_connection(bk: Backend) -> GenConnection:
    return GenConnection(bk, lambda p: phib_coefficients(bk, p), "phib")


def bismut_coefficients(bk: Backend, p) -> np.ndarray:
    Gam = levi_civita(bk, p)
    phi = bk.phi(p)
    plus = nabla_phi_coefficients(bk, p, +1, Gam, phi)
    minus = nabla_phi_coefficients(bk, p, -1, Gam, phi)
    return assemble_from_eigen(bk, p, {(1, 1): plus, (-1, 1): plus, (1, -1): minus, (-1, -1): minus})


def bismut_connection(bk: Backend) -> GenConnection:
    return GenConnection(bk, lambda p: bismut_coefficients(bk, p), "bismut")


def lift_coefficients(Gam: np.ndarray) -> np.ndarray:
    """Lift of a classical connection acting on vectors and covectors."""
    n = Gam.shape[0]
    C = np.zeros((2 * n, 2 * n, 2 * n))
    for a in range(n):
        C[a, :n, :n] = Gam[a]
        C[a, n:, n:] = -Gam[a].T
    return C


def lift_connection(bk: Backend, gam_fn: Callable | None = None) -> GenConnection:
    gam_fn = gam_fn or (lambda p: levi_civita(bk, p))
    return GenConnection(bk, lambda p: lift_coefficients(gam_fn(p)), "lift")


# --- standard splitting route ------------------------------------------------


def phib_standard_apply(bk: Backend, x: Callable, y: Callable, p) -> np.ndarray:
    """D^{phi,b}_x y from the formula in the splitting TM + T*M after undoing e^b."""
    n = bk.n
    g, b = bk.g(p), bk.b(p)
    ginv = np.linalg.inv(g)
    phi = bk.phi(p)
    Gam = levi_civita(bk, p)
    xp = np.asarray(x(p) if callable(x) else x, dtype=float)
    x0 = b_transform_matrix(-b) @ xp
    Mneg = _metric_field(bk, lambda q: b_transform_matrix(-bk.b(q)))
    y0f = matrix_field(bk, Mneg, y)
    y0 = y0f(p)
    X, xi = x0[:n], x0[n:]
    Y, eta = y0[:n], y0[n:]
    dy0 = bk.derivative(y0f, p)
    nab_Y = X @ dy0[:, :n] + np.einsum("a,akj,j->k", X, Gam, Y)
    nab_eta = X @ dy0[:, n:] - np.einsum("a,akj,k->j", X, Gam, eta)
    u, v = ginv @ xi, ginv @ eta
    vec = nab_Y + 0.25 * ginv @ (np.einsum("i,j,ijk->k", X, v, phi) - np.einsum("i,j,ijk->k", u, Y, phi))
    cov = nab_eta + 0.25 * (np.einsum("i,j,ijk->k", X, Y, phi) - np.einsum("i,j,ijk->k", u, v, phi))
    return b_transform_matrix(b) @ np.concatenate([vec, cov])


def phib_standard_coefficients(bk: Backend, p) -> np.ndarray:
    m = 2 * bk.n
    E = _frame_fields(m)
    C = np.zeros((m, m, m))
    for A in range(m):
        for B in range(m):
            C[A, :, B] = phib_standard_apply(bk, E[A](p), E[B], p)
    return C


def phib_connection_standard(bk: Backend) -> GenConnection:
    return GenConnection(bk, lambda p: phib_standard_coefficients(bk, p), "phib-standard")


def d_phib_apply(bk: Backend, x: Callable, y: Callable, p, tol: float | None = None) -> np.ndarray:
    """D^{phi,b}_x y evaluated by both routes; raises if they disagree."""
    tol = default_tol(bk) if tol is None else tol
    r1 = phib_connection(bk).apply(x, y, p)
    r2 = phib_standard_apply(bk, x, y, p)
    gap = float(np.abs(r1 - r2).max())
    if gap > tol * max(1.0, float(np.abs(r1).max())):
        raise RouteDisagreement(f"eigen-lift and standard routes differ by {gap:.3e}")
    return r1


def bismut_apply(bk: Backend, x, y: Callable, p) -> np.ndarray:
    return bismut_connection(bk).apply(x, y, p)


# ---------------------------------------------------------------------------
# brackets


def diamond(D: GenConnection, x: Callable, y: Callable, p) -> np.ndarray:
    return D.apply(x, y, p) - D.apply(y, x, p)


def diamond_field(D: GenConnection, x: Callable, y: Callable) -> Field:
    return Field(lambda q: diamond(D, x, y, q))


def tm_torsion(D: GenConnection, x: Callable, y: Callable, p) -> np.ndarray:
    from .backends import lie_bracket

    bk = D.backend
    X, Y = _split_field(bk, x, "vec"), _split_field(bk, y, "vec")
    return diamond(D, x, y, p)[: bk.n] - lie_bracket(bk, X, Y, p)


def _split_field(bk: Backend, x: Callable, part: str) -> Callable:
    n = bk.n
    sl = slice(0, n) if part == "vec" else slice(n, 2 * n)
    if isinstance(x, ConstantField):
        return ConstantField(np.asarray(x.value)[sl])
    f = Field(lambda q: np.asarray(x(q))[sl])
    if getattr(x, "deriv", None) is not None:
        f.deriv = lambda q: np.asarray(x.deriv(q))[:, sl]
    return f


def dorfman(bk: Backend, x: Callable, y: Callable, p, gamma=None) -> np.ndarray:
    """(X + xi) * (Y + eta) = [X, Y] + L_X eta - iota_Y d xi + gamma(X, Y, .)."""
    from .backends import lie_bracket

    X, xi = _split_field(bk, x, "vec"), _split_field(bk, x, "cov")
    Y, eta = _split_field(bk, y, "vec"), _split_field(bk, y, "cov")
    gam = bk.gamma(p) if gamma is None else (gamma(p) if callable(gamma) else np.asarray(gamma))
    Xp, Yp = X(p), Y(p)
    deta = exterior_d(bk, eta, 1, p)
    dxi = exterior_d(bk, xi, 1, p)
    if bk.invariant and all(isinstance(f, ConstantField) for f in (X, eta)):
        d_eta_X = np.zeros(bk.n)
    else:
        d_eta_X = bk.derivative(Field(lambda q: float(np.dot(eta(q), X(q)))), p)
    vec = lie_bracket(bk, X, Y, p)
    cov = Xp @ deta + d_eta_X - Yp @ dxi + np.einsum("i,j,ijk->k", Xp, Yp, gam)
    return np.concatenate([vec, cov])


# ---------------------------------------------------------------------------
# derivation d^T and friends


def dT(D: GenConnection, theta: Callable, k: int, p) -> np.ndarray:
    """Alternating-sum derivation: (k + 1) Alt(D theta)."""
    m = 2 * D.backend.n
    if k >= m:
        return np.zeros((m,) * (k + 1))
    Dt = D.form_derivative(theta, p)
    if k == 0:
        return Dt
    return (k + 1) * antisymmetrize(Dt)


def dT_frame(D: GenConnection, theta: Callable, k: int, p) -> np.ndarray:
    """Frame expression: sum_j <e_j^+, .> ^ D_{e_j^+} theta - <e_j^-, .> ^ D_{e_j^-} theta.

    The generalized-orthonormal frame is built from a Gram-Schmidt g-orthonormal frame.
    """
    bk = D.backend
    G = bk.metric(p)
    ep, em = G.orthonormal_frame()
    Dt = D.form_derivative(theta, p)
    m = 2 * bk.n
    out = GTForm.zero(m, k + 1, dtype=np.result_type(Dt, float))
    for frame, sgn in ((ep, 1.0), (em, -1.0)):
        for j in range(bk.n):
            e = frame[:, j]
            De = GTForm._raw(np.tensordot(e, Dt, axes=(0, 0)))
            out = out + (GTForm.from_vector(e) * (0.5 * sgn)).wedge(De)
    return out.coeffs


def dT_star(D: GenConnection, theta: Callable, k: int, p) -> np.ndarray:
    """Formal adjoint: -sum_alpha theta-derivative along f_alpha evaluated on f_alpha.

    {f_alpha} is the generalized-orthonormal frame with <f, f> = +-1; contraction is
    evaluation in the first slot.
    """
    if k == 0:
        raise ValueError("codifferential of a function")
    bk = D.backend
    G = bk.metric(p)
    ep, em = G.orthonormal_frame()
    Dt = D.form_derivative(theta, p)
    out = 0.0
    for frame in (ep, em):
        for j in range(bk.n):
            e = frame[:, j]
            out = out - np.tensordot(e, np.tensordot(e, Dt, axes=(0, 0)), axes=(0, 0))
    return np.asarray(out)


def contract_field(x: Callable, theta: Callable, bk: Backend | None = None) -> Field:
    """q -> iota_{x(q)} theta(q), with product-rule derivative when possible."""

    def fn(q):
        return np.tensordot(np.asarray(x(q)), _coeffs(theta(q)), axes=(0, 0))

    f = Field(fn)
    if bk is not None:
        tf = _coeff_field(theta)

        def deriv(q):
            xq = np.asarray(x(q))
            dx = bk.derivative(x, q)
            dt = bk.derivative(tf, q)
            tq = _coeffs(theta(q))
            return np.einsum("ai,i...->a...", dx, tq) + np.einsum("i,ai...->a...", xq, dt)

        f.deriv = deriv
    return f


def lie_T(D: GenConnection, x: Callable, theta: Callable, k: int, p) -> np.ndarray:
    """Cartan formula: iota_x dT theta + dT iota_x theta."""
    bk = D.backend
    xp = np.asarray(x(p))
    first = np.tensordot(xp, dT(D, theta, k, p), axes=(0, 0))
    if k == 0:
        return np.asarray(first)
    second = dT(D, contract_field(x, theta, bk), k - 1, p)
    return first + second


def pullback_form(bk: Backend, alpha: Callable, k: int) -> Callable:
    """pi^* of a classical k-form: nonzero only when every slot is a vector slot."""
    n = bk.n

    def fn(q):
        a = np.asarray(alpha(q))
        out = np.zeros((2 * n,) * k, dtype=a.dtype)
        out[(slice(0, n),) * k] = a
        return out

    f = Field(fn)
    if getattr(alpha, "deriv", None) is not None or isinstance(alpha, ConstantField):

        def deriv(q):
            da = bk.derivative(alpha, q)
            out = np.zeros((n,) + (2 * n,) * k, dtype=da.dtype)
            out[(slice(None),) + (slice(0, n),) * k] = da
            return out

        f.deriv = deriv
    return f


def project_form(G: GenMetric, theta: np.ndarray, sign: int) -> np.ndarray:
    """pi_*^{+-} theta: the classical form X_1..X_k -> theta(x_1^{b+-}, ...)."""
    return GTForm._raw(np.asarray(theta)).transform(G.lift_matrix(sign)).coeffs


# ---------------------------------------------------------------------------
# line bundles


@dataclass(frozen=True, eq=False)
class LineBundleConnection:
    """Unitary generalized connection on a trivialised Hermitian line bundle.

    With unit section s and generalized section u = Z + zeta, sqrt(-1) D_x s = 2<x, u> s,
    so D_x (f s) = (X f + A(x) f) s with A(x) = -2i <x, u>.
    """

    backend: Backend
    u: Callable
    hermitian: bool = True
    extra: Callable | None = None

    def __post_init__(self) -> None:
        if self.hermitian:
            up = np.asarray(self.u(self.backend.sample_point(np.random.default_rng(0))))
            if np.iscomplexobj(up) and np.abs(up.imag).max() > 0:
                raise ValueError("a unitary connection needs a real section u")

    def form(self, p) -> np.ndarray:
        """Connection coefficients A_A = A(E_A)."""
        out = -1j * (swap_matrix(self.backend.n) @ np.asarray(self.u(p)))
        if self.extra is not None:
            out = out + np.asarray(self.extra(p))
        return out

    def form_field(self) -> Callable:
        bk = self.backend
        if bk.invariant and isinstance(self.u, ConstantField) and self.extra is None:
            return ConstantField(self.form(None))
        f = Field(self.form)
        u = self.u
        if getattr(u, "deriv", None) is not None and self.extra is None:
            S = swap_matrix(bk.n)
            f.deriv = lambda q: -1j * np.einsum("ij,aj->ai", S, bk.derivative(u, q))
        return f

    def apply(self, x, f: Callable, p) -> complex:
        xp = np.asarray(x(p) if callable(x) else x)
        n = self.backend.n
        return complex(xp[:n] @ self.backend.derivative(f, p) + (xp @ self.form(p)) * f(p))

    def gauge(self, theta: Callable) -> "LineBundleConnection":
        """Push-forward by lambda = exp(i theta): A -> A + i dtheta."""
        bk = self.backend
        n = bk.n
        prev = self.extra

        def extra(q):
            out = np.zeros(2 * n, dtype=complex)
            out[:n] = 1j * bk.derivative(theta, q)
            if prev is not None:
                out = out + prev(q)
            return out

        return LineBundleConnection(bk, self.u, self.hermitian, extra)


def line_bundle_connection(bk: Backend, u: Callable, hermitian: bool = True) -> LineBundleConnection:
    return LineBundleConnection(bk, u, hermitian)


@dataclass(frozen=True)
class BundleEigendecomposition:
    """Classical 1-forms (complex, length n) of nabla^b_+, nabla^b_-, psi and nabla^b_0."""

    plus: np.ndarray
    minus: np.ndarray
    psi: np.ndarray
    neutral: np.ndarray


def eigendecompose_bundle(Dv: LineBundleConnection, p, b: np.ndarray | None = None) -> BundleEigendecomposition:
    bk = Dv.backend
    g = bk.g(p)
    b = bk.b(p) if b is None else np.asarray(b)
    A = Dv.form(p)
    n = bk.n
    plus = _lift_matrix(g, b, 1).T @ A
    minus = _lift_matrix(g, b, -1).T @ A
    psi = g @ A[n:]  # psi(X) = A(g X), X -> covector
    neutral = A[:n] + b @ A[n:]
    return BundleEigendecomposition(plus, minus, psi, neutral)
