"""Fiberwise linear algebra on TM + T*M.

Fiber vectors are length-2n arrays laid out as [vector | covector] with respect to a
frame {E_a} of TM and its dual coframe {E^a}.  All 2n x 2n matrices act in that basis.

Forms (``GTForm``) are stored as dense multilinear coefficient arrays:
theta(x_1, ..., x_k) = sum theta[A_1..A_k] x_1^{A_1} ... x_k^{A_k}.  Wedge products use
the determinant convention, so (a ^ b)(x, y) = a(x) b(y) - a(y) b(x).  A fiber vector y
defines the 1-form x -> 2<x, y> and contraction is insertion into the first slot,
hence iota_x y = 2<x, y>.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_FORM_DEGREE = 6
ANTISYM_TOL = 1e-12


def pairing_matrix(n: int) -> np.ndarray:
    """Matrix P with <x, y> = x^T P y."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return 0.5 * np.block([[zero, eye], [eye, zero]])


def swap_matrix(n: int) -> np.ndarray:
    """S = 2P; maps a fiber vector to the coefficients of its 2<,>-dual 1-form."""
    return 2.0 * pairing_matrix(n)


def _dim(v: np.ndarray) -> int:
    m = v.shape[-1]
    if m % 2:
        raise ValueError(f"fiber length {m} is odd")
    return m // 2


@dataclass(frozen=True)
class GenVector:
    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", np.asarray(self.data, dtype=float).reshape(-1))
        _dim(self.data)

    @classmethod
    def join(cls, vec, cov) -> "GenVector":
        vec = np.asarray(vec, dtype=float)
        cov = np.asarray(cov, dtype=float)
        if vec.shape != cov.shape:
            raise ValueError("vector and covector parts differ in length")
        return cls(np.concatenate([vec, cov]))

    @property
    def n(self) -> int:
        return self.data.size // 2

    @property
    def vec(self) -> np.ndarray:
        return self.data[: self.n]

    @property
    def cov(self) -> np.ndarray:
        return self.data[self.n:]

    def split(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vec.copy(), self.cov.copy()


def _arr(x) -> np.ndarray:
    return x.data if isinstance(x, GenVector) else np.asarray(x, dtype=float)


def pairing(x, y) -> float:
    """<x, y> = (eta(X) + xi(Y)) / 2."""
    a, b = _arr(x), _arr(y)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    n = _dim(a)
    return 0.5 * float(a[:n] @ b[n:] + a[n:] @ b[:n])


def iota_vec(X: np.ndarray, form2: np.ndarray) -> np.ndarray:
    """iota_X B for a 2-form with coefficient matrix B[i, j] = B(E_i, E_j)."""
    return np.asarray(X) @ form2


def b_transform_matrix(B: np.ndarray) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    out = np.eye(2 * n)
    out[n:, :n] = B.T
    return out


def b_transform(B: np.ndarray, x):
    """e^B(X + xi) = X + iota_X B + xi."""
    v = b_transform_matrix(B) @ _arr(x)
    return GenVector(v) if isinstance(x, GenVector) else v


@dataclass(frozen=True)
class GenMetric:
    """Generalized metric built from a Riemannian metric g and a 2-form b."""

    g: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.g, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or b.shape != g.shape:
            raise ValueError("g and b must be square matrices of equal size")
        scale = max(1.0, float(np.abs(g).max()))
        if np.abs(g - g.T).max() > 1e-12 * scale:
            raise ValueError("g is not symmetric")
        if np.abs(b + b.T).max() > 1e-12 * max(1.0, float(np.abs(b).max())):
            raise ValueError("b is not antisymmetric")
        g = 0.5 * (g + g.T)
        b = 0.5 * (b - b.T)
        if np.linalg.eigvalsh(g).min() <= 0:
            raise ValueError("g is not positive definite")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def ginv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @property
    def matrix(self) -> np.ndarray:
        """The operator G^b = e^b G^0 e^{-b} as a 2n x 2n matrix."""
        n = self.n
        g0 = np.zeros((2 * n, 2 * n))
        g0[:n, n:] = self.ginv
        g0[n:, :n] = self.g
        return b_transform_matrix(self.b) @ g0 @ b_transform_matrix(-self.b)

    @property
    def bilinear(self) -> np.ndarray:
        """Matrix M with G^b(x, y) = x^T M y."""
        return self.matrix.T @ pairing_matrix(self.n)

    def apply(self, x):
        v = self.matrix @ _arr(x)
        return GenVector(v) if isinstance(x, GenVector) else v

    def inner(self, x, y) -> float:
        return float(_arr(x) @ self.bilinear @ _arr(y))

    def lift(self, X, sign: int) -> np.ndarray:
        """x^{b+-} = X + (b +- g) X."""
        X = np.asarray(X, dtype=float)
        return np.concatenate([X, iota_vec(X, self.b) + sign * (self.g @ X)])

    def lift_matrix(self, sign: int) -> np.ndarray:
        n = self.n
        out = np.zeros((2 * n, n))
        out[:n] = np.eye(n)
        out[n:] = self.b.T + sign * self.g
        return out

    def eigenbasis(self) -> np.ndarray:
        """Columns: lifts of the frame, first to C+ then to C-."""
        return np.hstack([self.lift_matrix(+1), self.lift_matrix(-1)])

    def decompose(self, y) -> tuple[np.ndarray, np.ndarray]:
        """(Y+, Y-) with y = lift_+(Y+) + lift_-(Y-)."""
        y = _arr(y)
        n = self.n
        Y, eta = y[:n], y[n:]
        r = self.ginv @ (eta - iota_vec(Y, self.b))
        return 0.5 * (Y + r), 0.5 * (Y - r)

    def projector(self, sign: int) -> np.ndarray:
        return 0.5 * (np.eye(2 * self.n) + sign * self.matrix)

    def orthonormal_frame(self) -> tuple[np.ndarray, np.ndarray]:
        """G^b-orthonormal frame (e_i^{b+}, e_i^{b-}) from a g-orthonormal frame of TM.

        Returns two 2n x n matrices whose columns are e_i^{b+} and e_i^{b-}.
        """
        X = gram_schmidt(self.g)
        return self.lift_matrix(+1) @ X, self.lift_matrix(-1) @ X


def gram_schmidt(g: np.ndarray) -> np.ndarray:
    """Columns form a g-orthonormal basis obtained from the coordinate frame in order."""
    n = g.shape[0]
    basis = np.zeros((n, n))
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        for j in range(i):
            v = v - (basis[:, j] @ g @ v) * basis[:, j]
        basis[:, i] = v / math.sqrt(v @ g @ v)
    return basis


# ---------------------------------------------------------------------------
# forms


@lru_cache(maxsize=None)
def _perms(k: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    out = []
    for p in itertools.permutations(range(k)):
        inv = sum(1 for i in range(k) for j in range(i + 1, k) if p[i] > p[j])
        out.append((p, -1 if inv % 2 else 1))
    return tuple(out)


def antisymmetrize(a: np.ndarray) -> np.ndarray:
    """Projection onto the alternating part (average over signed permutations)."""
    k = a.ndim
    out = np.array(a, dtype=np.result_type(a, float), copy=True)
    # alternating in the first j axes -> first j + 1, coset representatives e, (i j)
    for j in range(1, k):
        acc = out.copy()
        for i in range(j):
            acc -= np.swapaxes(out, i, j)
        out = acc / (j + 1)
    return out


def index_sets(m: int, k: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(m), k))


class GTForm:
    """Alternating k-form on the 2n-dimensional fiber."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, check: bool = False) -> None:
        c = np.asarray(coeffs)
        if c.ndim > MAX_FORM_DEGREE:
            raise ValueError(f"degree {c.ndim} exceeds {MAX_FORM_DEGREE}")
        if c.ndim and len(set(c.shape)) != 1:
            raise ValueError("form coefficients must be a cube")
        a = antisymmetrize(c)
        if check:
            scale = max(1.0, float(np.abs(c).max()) if c.size else 1.0)
            if np.abs(a - c).max(initial=0.0) > ANTISYM_TOL * scale:
                raise ValueError("coefficients are not antisymmetric")
        self.coeffs = a

    @classmethod
    def _raw(cls, coeffs: np.ndarray) -> "GTForm":
        f = object.__new__(cls)
        f.coeffs = coeffs
        return f

    @property
    def degree(self) -> int:
        return self.coeffs.ndim

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0] if self.coeffs.ndim else 0

    @classmethod
    def zero(cls, m: int, k: int, dtype=float) -> "GTForm":
        return cls._raw(np.zeros((m,) * k, dtype=dtype))

    @classmethod
    def scalar(cls, value) -> "GTForm":
        return cls._raw(np.asarray(value))

    @classmethod
    def from_vector(cls, y) -> "GTForm":
        """The 1-form x -> 2<x, y>."""
        y = _arr(y)
        return cls._raw(swap_matrix(_dim(y)) @ y)

    @classmethod
    def from_bivector(cls, x, y) -> "GTForm":
        """The 2-form <x,.> ^ <y,.> paired with the bivector x ^ y."""
        x, y = _arr(x), _arr(y)
        P = pairing_matrix(_dim(x))
        a, c = P @ x, P @ y
        return cls._raw(np.outer(a, c) - np.outer(c, a))

    @classmethod
    def from_basis(cls, m: int, idx: tuple[int, ...]) -> "GTForm":
        """E^{i1} ^ ... ^ E^{ik} for increasing indices (value 1 on (E_i1, ..., E_ik))."""
        k = len(idx)
        c = np.zeros((m,) * k)
        for p, s in _perms(k):
            c[tuple(idx[i] for i in p)] = s
        return cls._raw(c)

    def components(self) -> np.ndarray:
        """Independent coefficients on increasing index sets."""
        if self.degree == 0:
            return self.coeffs.reshape(1)
        return np.array([self.coeffs[I] for I in index_sets(self.dim, self.degree)])

    @classmethod
    def from_components(cls, m: int, k: int, comps) -> "GTForm":
        out = np.zeros((m,) * k, dtype=np.result_type(np.asarray(comps), float))
        if k == 0:
            return cls._raw(np.asarray(comps).reshape(()))
        for I, v in zip(index_sets(m, k), comps):
            for p, s in _perms(k):
                out[tuple(I[i] for i in p)] = s * v
        return cls._raw(out)

    def __call__(self, *xs):
        if len(xs) != self.degree:
            raise ValueError(f"expected {self.degree} arguments")
        out = self.coeffs
        for x in reversed(xs):
            out = out @ _arr(x)
        return out

    def __add__(self, other: "GTForm") -> "GTForm":
        return GTForm._raw(self.coeffs + other.coeffs)

    def __sub__(self, other: "GTForm") -> "GTForm":
        return GTForm._raw(self.coeffs - other.coeffs)

    def __neg__(self) -> "GTForm":
        return GTForm._raw(-self.coeffs)

    def __mul__(self, s) -> "GTForm":
        return GTForm._raw(self.coeffs * s)

    __rmul__ = __mul__

    def wedge(self, other: "GTForm") -> "GTForm":
        k, l = self.degree, other.degree
        if k + l > MAX_FORM_DEGREE:
            raise ValueError("wedge degree too large")
        if k == 0 or l == 0:
            return GTForm._raw(self.coeffs * other.coeffs)
        t = np.multiply.outer(self.coeffs, other.coeffs)
        fac = math.factorial(k + l) / (math.factorial(k) * math.factorial(l))
        return GTForm._raw(fac * antisymmetrize(t))

    __xor__ = wedge

    def contract(self, x) -> "GTForm":
        return contract(x, self)

    def transform(self, M: np.ndarray) -> "GTForm":
        """Pull back by the linear map M: theta(M x_1, ..., M x_k)."""
        c = self.coeffs
        for axis in range(self.degree):
            c = np.moveaxis(np.tensordot(c, M, axes=([axis], [0])), -1, axis)
        return GTForm._raw(c)

    def derivation(self, A: np.ndarray) -> "GTForm":
        """Action of an endomorphism A as a derivation: -sum theta(.., A x_i, ..)."""
        c = self.coeffs
        out = np.zeros(c.shape, dtype=np.result_type(c, A))
        for axis in range(self.degree):
            out = out - np.moveaxis(np.tensordot(c, A, axes=([axis], [0])), -1, axis)
        return GTForm._raw(out)

    def norm(self) -> float:
        return float(np.abs(self.coeffs).max(initial=0.0))


def contract(x, theta: GTForm) -> GTForm:
    """iota_x theta = theta(x, ...)."""
    if theta.degree == 0:
        raise ValueError("cannot contract a function")
    return GTForm._raw(np.tensordot(_arr(x), theta.coeffs, axes=([0], [0])))


def wedge(a: GTForm, b: GTForm) -> GTForm:
    return a.wedge(b)


def is_generalized_almost_complex(J: np.ndarray, tol: float = 1e-10) -> bool:
    m = J.shape[0]
    P = pairing_matrix(m // 2)
    return (np.abs(J @ J + np.eye(m)).max() < tol) and (np.abs(J.T @ P @ J - P).max() < tol)


def lambda_jminus_bivector(G: GenMetric, J: np.ndarray, x, y) -> float:
    """Lambda(x ^ y) = G^b(J x, y)."""
    return float((J @ _arr(x)) @ G.bilinear @ _arr(y))


def lambda_jminus(G: GenMetric, J: np.ndarray, theta: GTForm):
    """J_- contraction of a 2-form.

    The form is read as a bivector through the <,> duality (the form <x,.> ^ <y,.>
    corresponds to x ^ y), then contracted with (x, y) -> G^b(J x, y).
    """
    J = np.asarray(J)
    if not is_generalized_almost_complex(J):
        raise ValueError("J is not an orthogonal almost complex structure")
    if theta.degree != 2:
        raise ValueError("expected a 2-form")
    Pinv = np.linalg.inv(pairing_matrix(G.n))
    beta = Pinv @ theta.coeffs @ Pinv.T
    M = J.T @ G.bilinear
    return 0.5 * np.sum(beta * M)


def kahler_contraction(g: np.ndarray, I: np.ndarray, F: np.ndarray):
    """Classical Lambda F for omega(X, Y) = g(I X, Y), normalised so that Lambda omega = n / 2."""
    ginv = np.linalg.inv(g)
    omega = I.T @ g
    return 0.5 * np.einsum("ij,ik,jl,kl->", F, ginv, ginv, omega)
