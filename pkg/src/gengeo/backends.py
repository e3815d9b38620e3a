"""Manifolds with data: a frame of TM, metric g, 2-form b and closed 3-form gamma.

Three providers share one interface:

* ``InvariantTorusBackend``: flat coordinates, constant data.
* ``LieGroupBackend``: left-invariant frame of a compact Lie group, points stored as
  matrices of the adjoint representation.
* ``ChartBackend``: a coordinate box with closed-form coefficient functions.

Everything is expressed in the backend frame {E_a}: vectors are length-n arrays, a
classical k-form is an alternating (n,)*k array of values on frame vectors.  Fields are
callables of the point; a field may carry an analytic frame derivative in ``.deriv``,
otherwise derivatives are central finite differences along the frame flow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .gt_linalg import GenMetric, antisymmetrize

_STENCILS = {
    2: ((-1, 1), (-0.5, 0.5)),
    4: ((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12)),
    6: ((-3, -2, -1, 1, 2, 3), (-1 / 60, 9 / 60, -45 / 60, 45 / 60, -9 / 60, 1 / 60)),
}


class Field:
    """A point-dependent array with an optional analytic frame derivative."""

    def __init__(self, fn: Callable, deriv: Callable | None = None) -> None:
        self.fn = fn
        self.deriv = deriv

    def __call__(self, p):
        return self.fn(p)


class ConstantField(Field):
    def __init__(self, value) -> None:
        value = np.asarray(value)
        self.value = value
        super().__init__(lambda p: value, None)

    def deriv_for(self, n: int) -> np.ndarray:
        return np.zeros((n,) + self.value.shape, dtype=self.value.dtype)


def as_field(obj) -> Callable:
    if callable(obj):
        return obj
    return ConstantField(obj)


@dataclass(frozen=True, eq=False)
class Backend:
    n: int
    h: float = 1e-3
    order: int = 4
    invariant: bool = False

    # --- data -------------------------------------------------------------
    def g(self, p) -> np.ndarray:
        raise NotImplementedError

    def b(self, p) -> np.ndarray:
        raise NotImplementedError

    def gamma(self, p) -> np.ndarray:
        raise NotImplementedError

    def frame_brackets(self, p) -> np.ndarray:
        """c[a, b, k] with [E_a, E_b] = c[a, b, k] E_k."""
        return np.zeros((self.n,) * 3)

    def move(self, p, a: int, t: float):
        raise NotImplementedError

    def sample_point(self, rng: np.random.Generator):
        raise NotImplementedError

    def with_data(self, g=None, b=None) -> "Backend":
        raise NotImplementedError

    # --- derived ------------------------------------------------------------
    def field(self, name: str) -> Callable:
        """Data as a differentiable field: one of g, b, gamma, phi."""
        if self.invariant:
            return ConstantField(getattr(self, name)(self.sample_point(np.random.default_rng(0))))
        return Field(getattr(self, name))

    def metric(self, p) -> GenMetric:
        return GenMetric(self.g(p), self.b(p))

    def phi(self, p) -> np.ndarray:
        """phi = gamma + db."""
        return self.gamma(p) + exterior_d(self, self.b, 2, p)

    def derivative(self, f: Callable, p) -> np.ndarray:
        """Array D[a, ...] = E_a(f) at p."""
        if isinstance(f, ConstantField):
            return f.deriv_for(self.n)
        deriv = getattr(f, "deriv", None)
        if deriv is not None:
            return np.asarray(deriv(p))
        offsets, weights = _STENCILS[self.order]
        h = self.h
        rows = []
        for a in range(self.n):
            acc = None
            for o, w in zip(offsets, weights):
                v = np.asarray(f(self.move(p, a, o * h))) * w
                acc = v if acc is None else acc + v
            rows.append(acc / h)
        return np.stack(rows)

    def directional_derivative(self, f: Callable, X, p) -> np.ndarray:
        return np.tensordot(np.asarray(X, dtype=float), self.derivative(f, p), axes=(0, 0))


# ---------------------------------------------------------------------------
# coordinate backends


def _const(value) -> Callable:
    value = np.asarray(value, dtype=float)
    return ConstantField(value)


@dataclass(frozen=True, eq=False)
class ChartBackend(Backend):
    """Coordinate box [0, L)^n with closed-form coefficient functions."""

    g_fn: Callable | None = None
    b_fn: Callable | None = None
    gamma_fn: Callable | None = None
    box: float = 1.0
    periodic: bool = True
    origin: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.g_fn is None:
            object.__setattr__(self, "g_fn", _const(np.eye(self.n)))
        if self.b_fn is None:
            object.__setattr__(self, "b_fn", _const(np.zeros((self.n, self.n))))
        if self.gamma_fn is None:
            object.__setattr__(self, "gamma_fn", _const(np.zeros((self.n,) * 3)))
        if self.order not in _STENCILS:
            raise ValueError(f"unsupported finite-difference order {self.order}")
        if self.h <= 1e-8 * self.box:
            raise ValueError("finite-difference step underflow")

    def g(self, p):
        return np.asarray(self.g_fn(p), dtype=float)

    def field(self, name):
        fn = {"g": self.g_fn, "b": self.b_fn, "gamma": self.gamma_fn}.get(name)
        if fn is not None:
            return fn
        return super().field(name)

    def b(self, p):
        return np.asarray(self.b_fn(p), dtype=float)

    def gamma(self, p):
        return np.asarray(self.gamma_fn(p), dtype=float)

    def move(self, p, a, t):
        q = np.array(p, dtype=float)
        q[a] += t
        return q

    def sample_point(self, rng):
        lo = np.zeros(self.n) if self.origin is None else np.asarray(self.origin)
        return lo + rng.uniform(0.0, self.box, size=self.n)

    def with_data(self, g=None, b=None):
        return replace(
            self,
            g_fn=self.g_fn if g is None else as_field(g),
            b_fn=self.b_fn if b is None else as_field(b),
        )

    def metric(self, p) -> GenMetric:
        g = self.g(p)
        if np.linalg.eigvalsh(0.5 * (g + g.T)).min() <= 0:
            raise ValueError(f"metric not positive definite at {p}")
        return GenMetric(g, self.b(p))


@dataclass(frozen=True, eq=False)
class InvariantTorusBackend(ChartBackend):
    """Flat torus R^n / (L Z)^n with translation-invariant g, b and gamma."""

    g0: np.ndarray | None = None
    b0: np.ndarray | None = None
    gamma0: np.ndarray | None = None
    volume_scale: float = 1.0

    def __post_init__(self) -> None:
        n = self.n
        g0 = np.eye(n) if self.g0 is None else np.asarray(self.g0, dtype=float)
        b0 = np.zeros((n, n)) if self.b0 is None else np.asarray(self.b0, dtype=float)
        c0 = np.zeros((n,) * 3) if self.gamma0 is None else antisymmetrize(np.asarray(self.gamma0, dtype=float))
        object.__setattr__(self, "g0", g0)
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "gamma0", c0)
        object.__setattr__(self, "g_fn", _const(g0))
        object.__setattr__(self, "b_fn", _const(b0))
        object.__setattr__(self, "gamma_fn", _const(c0))
        object.__setattr__(self, "invariant", True)
        super().__post_init__()

    def with_data(self, g=None, b=None):
        return replace(
            self,
            g0=self.g0 if g is None else np.asarray(g, dtype=float),
            b0=self.b0 if b is None else np.asarray(b, dtype=float),
        )

    def phi(self, p):
        return self.gamma0.copy()


# ---------------------------------------------------------------------------
# Lie groups


def killing_form(c: np.ndarray) -> np.ndarray:
    ad = adjoint_matrices(c)
    return np.einsum("aij,bji->ab", ad, ad)


def adjoint_matrices(c: np.ndarray) -> np.ndarray:
    """ad[a] with (ad_a)[k, j] = c[a, j, k], i.e. ad_a(u_j) = [u_a, u_j]."""
    return np.transpose(c, (0, 2, 1)).copy()


def jacobi_residual(c: np.ndarray) -> float:
    # [[u_i,u_j],u_k] + c.p.
    t = np.einsum("ijm,mkl->ijkl", c, c)
    r = t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))
    return float(np.abs(r).max())


def su2_structure_constants() -> np.ndarray:
    c = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[i, j, k] = 1.0
        c[j, i, k] = -1.0
    return c


def direct_sum_structure_constants(*cs: np.ndarray) -> np.ndarray:
    dims = [c.shape[0] for c in cs]
    d = sum(dims)
    out = np.zeros((d, d, d))
    o = 0
    for c, m in zip(cs, dims):
        out[o:o + m, o:o + m, o:o + m] = c
        o += m
    return out


def abelian_structure_constants(d: int) -> np.ndarray:
    return np.zeros((d, d, d))


LIE_ALGEBRAS = {
    "su2": su2_structure_constants,
    "so3": su2_structure_constants,
}


@dataclass(frozen=True, eq=False)
class LieGroupBackend(Backend):
    """Compact Lie group with left-invariant frame u_a.

    The default metric is kappa times the negative Killing form and the Cartan 3-form
    is gamma(u, v, w) = kappa_gamma * g0([u, v], w) with g0 the default metric.  Left
    invariant g and b may replace the defaults (flows do this); gamma stays fixed.
    """

    c: np.ndarray | None = None
    kappa: float = 1.0
    kappa_gamma: float = 1.0
    g0: np.ndarray | None = None
    b0: np.ndarray | None = None
    volume_scale: float = 1.0

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float)
        d = c.shape[0]
        if c.shape != (d, d, d) or d != self.n:
            raise ValueError("structure constants must be (n, n, n)")
        if np.abs(c + np.transpose(c, (1, 0, 2))).max() > 1e-12 or jacobi_residual(c) > 1e-12:
            raise ValueError("structure constants violate antisymmetry or Jacobi")
        object.__setattr__(self, "c", c)
        B = killing_form(c)
        if self.g0 is None:
            g0 = -self.kappa * B
            if np.linalg.eigvalsh(g0).min() <= 0:
                raise ValueError("negative Killing form is degenerate; pass g0 explicitly")
        else:
            g0 = np.asarray(self.g0, dtype=float)
        object.__setattr__(self, "g0", g0)
        if self.b0 is None:
            object.__setattr__(self, "b0", np.zeros((d, d)))
        ref = -self.kappa * B if np.linalg.eigvalsh(-B).min() > 0 else g0
        object.__setattr__(self, "_gamma", self.kappa_gamma * np.einsum("uvm,mw->uvw", c, ref))
        object.__setattr__(self, "_ad", adjoint_matrices(c))
        object.__setattr__(self, "invariant", True)

    def g(self, p):
        return self.g0

    def b(self, p):
        return self.b0

    def gamma(self, p):
        return self._gamma

    def frame_brackets(self, p):
        return self.c

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.n)

    def ad(self, u) -> np.ndarray:
        return np.tensordot(np.asarray(u, dtype=float), self._ad, axes=(0, 0))

    def move(self, p, a, t):
        return p @ expm(t * self._ad[a])

    def sample_point(self, rng):
        return expm(self.ad(rng.normal(size=self.n)))

    def with_data(self, g=None, b=None):
        return replace(
            self,
            g0=self.g0 if g is None else np.asarray(g, dtype=float),
            b0=self.b0 if b is None else np.asarray(b, dtype=float),
        )

    def bracket(self, u, v) -> np.ndarray:
        return np.einsum("a,b,abk->k", u, v, self.c)

    def right_invariant(self, u) -> Field:
        """Right-invariant vector field X_u^r in the left-invariant frame: Ad_{p^-1} u."""
        u = np.asarray(u, dtype=float)
        ad = self._ad

        def fn(p):
            return np.linalg.solve(p, u)

        def deriv(p):
            v = np.linalg.solve(p, u)
            return -np.einsum("akj,j->ak", ad, v)

        return Field(fn, deriv)


# ---------------------------------------------------------------------------
# calculus of classical forms


def exterior_d(bk: Backend, alpha: Callable, k: int, p) -> np.ndarray:
    """d of a classical k-form field, with frame-bracket terms for non-holonomic frames."""
    n = bk.n
    if k + 1 > n:
        return np.zeros((n,) * (k + 1))
    D = bk.derivative(alpha, p)
    if k == 0:
        return np.asarray(D)
    out = (k + 1) * antisymmetrize(D)
    c = bk.frame_brackets(p)
    if np.any(c):
        a = np.asarray(alpha(p))
        S = np.tensordot(c, a, axes=([2], [0]))
        out = out - math.comb(k + 1, 2) * antisymmetrize(S)
    return out


def d_star(bk: Backend, alpha: Callable, k: int, p) -> np.ndarray:
    """Codifferential -g^{ab} (nabla_a alpha)(E_b, ...) using Levi-Civita Christoffels."""
    from .connections import covariant_form_derivative

    if k == 0:
        raise ValueError("codifferential of a function")
    ginv = np.linalg.inv(bk.g(p))
    nab = covariant_form_derivative(bk, alpha, p)
    return -np.tensordot(ginv, nab, axes=([0, 1], [0, 1]))


def lie_bracket(bk: Backend, X: Callable, Y: Callable, p) -> np.ndarray:
    Xp, Yp = np.asarray(X(p)), np.asarray(Y(p))
    out = Xp @ bk.derivative(Y, p) - Yp @ bk.derivative(X, p)
    c = bk.frame_brackets(p)
    if np.any(c):
        out = out + np.einsum("a,b,abk->k", Xp, Yp, c)
    return out


def integrate(bk: Backend, f: Callable, m: int = 64, dims=None, riemannian: bool = True) -> float:
    """Integral of a scalar field against dvol_g.

    Invariant Lie-group integrands: value at the identity times the (normalised) volume.
    Coordinate boxes: periodic trapezoid rule with m points along each coordinate in
    ``dims`` (default: all); the integrand is assumed constant along the others.
    """
    if isinstance(bk, LieGroupBackend):
        p = bk.identity
        w = math.sqrt(np.linalg.det(bk.g(p))) if riemannian else 1.0
        return float(np.real(f(p))) * w * bk.volume_scale
    if not isinstance(bk, ChartBackend) or not bk.periodic:
        raise ValueError("integration needs a periodic box")
    n = bk.n
    dims = tuple(range(n)) if dims is None else tuple(dims)
    L = bk.box
    base = np.zeros(n) if bk.origin is None else np.asarray(bk.origin, dtype=float)
    grid = np.arange(m) * (L / m)
    total = 0.0
    for idx in np.ndindex(*(m,) * len(dims)):
        q = base.copy()
        for d, i in zip(dims, idx):
            q[d] += grid[i]
        w = math.sqrt(np.linalg.det(bk.g(q))) if riemannian else 1.0
        v = f(q)
        total = total + (complex(v) if np.iscomplexobj(v) else float(v)) * w
    vol = L ** n
    res = total / m ** len(dims) * vol
    if isinstance(bk, InvariantTorusBackend):
        res *= bk.volume_scale
    return res


# ---------------------------------------------------------------------------
# chart catalogue (closed-form data referenced by name)


def _conformal_sine(n: int, amp: float = 0.1, k: int = 1) -> Callable:
    def g(p):
        return math.exp(2 * amp * math.sin(2 * math.pi * k * p[0])) * np.eye(n)

    return g


def _round_sphere(radius: float = 1.0) -> Callable:
    def g(p):
        s = 1.0 + p[0] ** 2 + p[1] ** 2
        return (4 * radius ** 2 / s ** 2) * np.eye(2)

    return g


def _trig_metric(n: int, amp: float = 0.15) -> Callable:
    def g(p):
        m = np.eye(n)
        for i in range(n):
            m[i, i] += amp * math.sin(2 * math.pi * (p[(i + 1) % n] + 0.3 * i))
        for i in range(n - 1):
            v = 0.5 * amp * math.cos(2 * math.pi * (p[i] + p[i + 1]))
            m[i, i + 1] += v
            m[i + 1, i] += v
        return m

    return g


def _trig_two_form(n: int, amp: float = 0.2) -> Callable:
    def b(p):
        m = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                v = amp * math.sin(2 * math.pi * (p[(i + j) % n] + 0.1 * (i + 2 * j)))
                m[i, j] = v
                m[j, i] = -v
        return m

    return b


def _volume_form(n: int, c: float = 1.0) -> np.ndarray:
    out = np.zeros((n,) * 3)
    if n == 3:
        for (i, j, k), s in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1), ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)):
            out[i, j, k] = s * c
    elif n > 3:
        raise ValueError("volume 3-form only for n = 3")
    return out


def volume_three_form(c: float = 1.0) -> np.ndarray:
    """c dx^1 ^ dx^2 ^ dx^3 as coefficients on the frame."""
    return _volume_form(3, c)


CHART_METRICS = {
    "flat": lambda n, **kw: _const(np.eye(n)),
    "conformal_sine": lambda n, **kw: _conformal_sine(n, **kw),
    "round_sphere": lambda n, **kw: _round_sphere(**kw),
    "trig": lambda n, **kw: _trig_metric(n, **kw),
}

CHART_TWO_FORMS = {
    "zero": lambda n, **kw: _const(np.zeros((n, n))),
    "trig": lambda n, **kw: _trig_two_form(n, **kw),
}

CHART_THREE_FORMS = {
    "zero": lambda n, **kw: _const(np.zeros((n,) * 3)),
    "volume": lambda n, c=1.0: _const(_volume_form(n, c)),
}


def chart_from_catalogue(
    n: int,
    metric: str = "flat",
    two_form: str = "zero",
    three_form: str = "zero",
    metric_params: dict | None = None,
    two_form_params: dict | None = None,
    three_form_params: dict | None = None,
    **kw,
) -> ChartBackend:
    g = CHART_METRICS[metric](n, **(metric_params or {}))
    b = CHART_TWO_FORMS[two_form](n, **(two_form_params or {}))
    c = CHART_THREE_FORMS[three_form](n, **(three_form_params or {}))
    if metric == "round_sphere":
        kw.setdefault("periodic", False)
        kw.setdefault("box", 1.0)
        kw.setdefault("origin", np.array([-0.5, -0.5]))
    return ChartBackend(n=n, g_fn=g, b_fn=b, gamma_fn=c, **kw)


def dgamma_residual(bk: Backend, points) -> float:
    """max |d gamma| at the given points."""
    if bk.n < 4:
        return 0.0
    return max(float(np.abs(exterior_d(bk, bk.gamma, 3, p)).max()) for p in points)
