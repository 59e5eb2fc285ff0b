"""Explicit symplectic embeddings: the bi-disc ball embedding and its
transplant into disc bundles through the exponential map.

Phase-space points are arrays ``(..., 2n)`` laid out as ``(q, p)``; the
standard form is ``sum dq_i ^ dp_i`` and the Liouville form ``sum p_i dq_i``.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._sampling import DEFAULT_SEED, ball_points
from .manifolds import ModelError
from .riemannian import cometric_norm, injectivity_radius, orthonormal_frame


def standard_form(n):
    """Matrix Omega with ``x^T Omega y = omega_st(x, y)``."""
    return np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])


# -- series for the auxiliary functions of the radial extension --------------


def _series_coefficients(terms=40):
    def binom_half(k):
        out = Fraction(1)
        for i in range(k):
            out *= Fraction(1, 2) - i
        return out / math.factorial(k)

    a = [Fraction(math.comb(2 * k, k), 4**k * (2 * k + 1)) for k in range(terms + 2)]
    b = [binom_half(k) * (-1) ** k for k in range(terms + 2)]
    c = [Fraction(math.comb(2 * k, k), 4**k) for k in range(terms + 2)]
    hhat = [float(a[k] - b[k]) for k in range(1, terms + 1)]
    mser = [float(Fraction(3, 2) * (a[j + 1] - b[j + 1]) - c[j]) for j in range(1, terms + 1)]
    return np.array(hhat), np.array(mser)


_HHAT, _MSER = _series_coefficients()
_SERIES_CUTOFF = 0.5


def _hhat(s):
    # (arcsin s - s sqrt(1 - s^2)) / s^3
    s = np.asarray(s, float)
    small = s < _SERIES_CUTOFF
    ss = np.where(small, 0.7, s)
    direct = (np.arcsin(ss) - ss * np.sqrt(1 - ss * ss)) / ss**3
    return np.where(small, np.polynomial.polynomial.polyval(s * s, _HHAT), direct)


def _mfun(s):
    # (1.5 * hhat(s) - 1 / sqrt(1 - s^2)) / s^2
    s = np.asarray(s, float)
    small = s < _SERIES_CUTOFF
    ss = np.where(small, 0.7, s)
    direct = (1.5 * _hhat(ss) - 1 / np.sqrt(1 - ss * ss)) / ss**2
    return np.where(small, np.polynomial.polynomial.polyval(s * s, _MSER), direct)


def _arcsin_over_s(s):
    s = np.asarray(s, float)
    tiny = s < 1e-8
    return np.where(tiny, 1.0 + s * s / 6.0, np.arcsin(np.where(tiny, 0.5, s)) / np.where(tiny, 0.5, s))


def bidisc_radius(a, b):
    """Radius ``2 sqrt(ab/pi)`` of the ball the bi-disc construction fills."""
    return 2.0 * math.sqrt(a * b / math.pi)


def bidisc_profile(a, b, q):
    """Profile f with f' = sqrt(4ab/pi - q^2), f odd, f(2 sqrt(ab/pi)) = ab.

    Returns ``(f(q), f'(q))``.
    """
    R = bidisc_radius(a, b)
    q = np.asarray(q, float)
    if np.any(np.abs(q) > R * (1 + 1e-15)):
        raise ValueError(f"|q| must not exceed {R}")
    s = np.clip(q / R, -1.0, 1.0)
    f = 0.5 * R * R * np.arcsin(s) + 0.5 * q * np.sqrt(np.maximum(R * R - q * q, 0.0))
    return f, R * np.sqrt(np.maximum(1 - s * s, 0.0))


class _Radial:
    """Scalar factors of the radial extension at q, shared by map and Jacobian."""

    def __init__(self, a, b, q):
        self.R = R = bidisc_radius(a, b)
        self.q = q = np.asarray(q, float)
        r = np.linalg.norm(q, axis=-1)
        self.s = s = np.minimum(r / R, 1.0)
        self.g = 0.5 * R * (_arcsin_over_s(s) + np.sqrt(1 - s * s))  # f(r) / r
        self.fp = R * np.sqrt(1 - s * s)  # f'(r)
        self.hh = _hhat(s)
        self.kr = -self.hh / (2 * R)  # g'(r) / r

    def phi(self):
        return self.g[..., None] * self.q

    def dphi(self):
        n = self.q.shape[-1]
        qq = self.q[..., :, None] * self.q[..., None, :]
        return self.g[..., None, None] * np.eye(n) + self.kr[..., None, None] * qq

    def dphi_inv(self):
        n = self.q.shape[-1]
        qq = self.q[..., :, None] * self.q[..., None, :]
        coef = self.hh / (2 * self.R * self.fp * self.g)
        return (1 / self.g)[..., None, None] * np.eye(n) + coef[..., None, None] * qq

    def hessian_contraction(self, eta):
        """``sum_i eta_i * Hess(phi_i)``, symmetric (..., n, n)."""
        q = self.q
        n = q.shape[-1]
        eq = np.einsum("...i,...i->...", eta, q)
        qq = q[..., :, None] * q[..., None, :]
        sym = q[..., :, None] * eta[..., None, :] + eta[..., :, None] * q[..., None, :]
        return (_mfun(self.s) / self.R**3 * eq)[..., None, None] * qq + self.kr[..., None, None] * (
            eq[..., None, None] * np.eye(n) + sym
        )


def radial_extension(a, b, q):
    """``phi(q) = f(|q|) q / |q|`` and its derivative ``Dphi(q)`` (symmetric)."""
    rad = _Radial(a, b, q)
    if np.any(rad.s >= 1.0):
        raise ValueError("q must lie strictly inside the ball of radius 2 sqrt(ab/pi)")
    return rad.phi(), rad.dphi()


# -- regions ------------------------------------------------------------------


@dataclass
class Region:
    """Ball, bi-disc, box, or disc bundle over a model (in its canonical chart).

    ``margin(x)`` is positive inside and measures the slack to the boundary.
    """

    kind: str
    n: int
    params: dict = field(default_factory=dict)
    model: object = None

    def margin(self, x):
        x = np.asarray(x, float)
        q, p = x[..., : self.n], x[..., self.n :]
        if self.kind == "ball":
            return self.params["r"] - np.linalg.norm(x, axis=-1)
        if self.kind == "bi-disc":
            return np.minimum(
                self.params["a"] - np.linalg.norm(q, axis=-1), self.params["b"] - np.linalg.norm(p, axis=-1)
            )
        if self.kind == "box":
            lo, hi = np.asarray(self.params["lo"]), np.asarray(self.params["hi"])
            return np.min(np.minimum(x - lo, hi - x), axis=-1)
        if self.kind == "disc-bundle":
            return self.params["r"] - cometric_norm(self.model, q, p)
        if self.kind == "plane":
            return np.full(x.shape[:-1], np.inf)
        raise ValueError(f"unknown region kind {self.kind!r}")

    def contains(self, x):
        return self.margin(x) > 0

    def sample(self, count, seed=DEFAULT_SEED):
        """Quasi-random points of the closed region (ball or bi-disc)."""
        n = self.n
        if self.kind == "ball":
            return ball_points(2 * n, count, self.params["r"], seed)
        if self.kind == "bi-disc":
            q = ball_points(n, count, self.params["a"], seed)
            p = ball_points(n, count, self.params["b"], seed + 101)
            return np.concatenate([q, p], axis=-1)
        raise ValueError(f"cannot sample a {self.kind} region")

    def sample_boundary(self, count, seed=DEFAULT_SEED):
        from ._sampling import sphere_directions

        n = self.n
        if self.kind == "ball":
            return self.params["r"] * sphere_directions(2 * n, count, seed)
        if self.kind == "bi-disc":
            # half the points on |q| = a, half on |p| = b
            k = count // 2
            a, b = self.params["a"], self.params["b"]
            q = np.concatenate([a * sphere_directions(n, k, seed), ball_points(n, count - k, a, seed + 7)])
            p = np.concatenate([ball_points(n, k, b, seed + 101), b * sphere_directions(n, count - k, seed + 13)])
            return np.concatenate([q, p], axis=-1)
        raise ValueError(f"cannot sample the boundary of a {self.kind} region")

    def radius(self):
        if self.kind == "ball":
            return self.params["r"]
        if self.kind == "bi-disc":
            return max(self.params["a"], self.params["b"])
        return 1.0

    def to_dict(self):
        d = {"kind": self.kind, "n": self.n}
        d.update({k: (float(v) if np.isscalar(v) else np.asarray(v).tolist()) for k, v in self.params.items()})
        if self.model is not None:
            d["model"] = self.model.to_dict()
        return d


def ball(r, n):
    return Region("ball", n, {"r": float(r)})


def bidisc(a, b, n):
    return Region("bi-disc", n, {"a": float(a), "b": float(b)})


def disc_bundle(model, r=1.0):
    return Region("disc-bundle", model.dim, {"r": float(r)}, model)


# -- map specs ----------------------------------------------------------------


@dataclass
class SymplecticMapSpec:
    """A map between phase-space charts with its Jacobian.

    When `jacobian` is None, central differences with step
    ``1e-6 * domain.radius()`` are used.  `center`, `base_radius` and `model`
    describe where the zero section of the domain lands, when meaningful.
    """

    name: str
    n: int
    domain: Region
    target: Region
    mapping: object
    jacobian: object = None
    params: dict = field(default_factory=dict)
    center: np.ndarray = None
    base_radius: float = None
    model: object = None
    shrink: float = None
    fd_inside: bool = False  # an analytic-looking Jacobian built on finite differences

    @property
    def finite_difference(self):
        """True when the Jacobian involves finite differences anywhere."""
        return self.jacobian is None or self.fd_inside

    def __call__(self, x):
        return self.mapping(np.asarray(x, float))

    def jac(self, x):
        x = np.asarray(x, float)
        if self.jacobian is not None:
            return self.jacobian(x)
        return finite_difference_jacobian(self.mapping, x, 1e-6 * self.domain.radius())

    @property
    def capacity(self):
        """pi r^2 of the domain ball (None for non-ball domains)."""
        if self.domain.kind != "ball":
            return None
        return math.pi * self.domain.params["r"] ** 2


def finite_difference_jacobian(fn, x, h):
    # all 2m perturbed copies go through fn in one batch
    m = x.shape[-1]
    steps = h * np.eye(m)
    X = np.concatenate([x[..., None, :] + steps, x[..., None, :] - steps], axis=-2)
    F = fn(X)
    return np.swapaxes((F[..., :m, :] - F[..., m:, :]) / (2 * h), -1, -2)


def bidisc_embedding(a, b, eps=1e-3, n=2):
    """Relative embedding of ``B^{2n}(2 sqrt(ab/pi) (1 - eps))`` into ``P_L(a, b)``.

    ``(q, p) -> (phi(q) / b, b * Dphi(q)^{-T} p)`` where phi is the radial
    extension for ``P_L(ab, 1)`` followed by the linear rescaling onto
    ``P_L(a, b)``.
    """
    if not 0 < eps < 1:
        raise ValueError("shrink eps must lie in (0, 1)")
    if a <= 0 or b <= 0:
        raise ValueError("bi-disc radii must be positive")
    R = bidisc_radius(a, b)

    def mapping(x):
        q, p = x[..., :n], x[..., n:]
        rad = _Radial(a, b, q)
        eta = (rad.dphi_inv() @ p[..., None])[..., 0]
        return np.concatenate([rad.phi() / b, b * eta], axis=-1)

    def jacobian(x):
        q, p = x[..., :n], x[..., n:]
        rad = _Radial(a, b, q)
        Minv = rad.dphi_inv()
        eta = (Minv @ p[..., None])[..., 0]
        S = rad.hessian_contraction(eta)
        top = np.concatenate([rad.dphi() / b, np.zeros(Minv.shape)], axis=-1)
        bottom = np.concatenate([-b * (Minv @ S), b * Minv], axis=-1)
        return np.concatenate([top, bottom], axis=-2)

    f_edge, _ = bidisc_profile(a, b, R * (1 - eps))
    return SymplecticMapSpec(
        name="bidisc",
        n=n,
        domain=ball(R * (1 - eps), n),
        target=bidisc(a, b, n),
        mapping=mapping,
        jacobian=jacobian,
        params={"a": float(a), "b": float(b), "eps": float(eps), "n": n},
        center=np.zeros(n),
        base_radius=float(f_edge / b),
        shrink=float(eps),
    )


def fiber_frame_embedding(model, q0, d, rho_p, target_r=1.0):
    """Cotangent lift of ``x -> exp_{q0}(E x)`` on ``P_L(d, rho_p)``.

    E is the orthonormal frame at q0, so ``psi(x, xi) = (exp_{q0}(E x),
    (D_x exp_{q0}(E x))^{-T} xi)`` in the canonical chart of the cotangent
    bundle; it pulls the Liouville form back to the standard one.
    """
    q0 = model.check_point(q0)
    n = model.dim
    inj = injectivity_radius(model)
    if d > 0.5 * inj * (1 + 1e-12):
        raise ModelError(f"bi-disc radius {d} exceeds half the injectivity radius {inj}")
    E0 = orthonormal_frame(model, q0)

    def mapping(x):
        xs, xi = x[..., :n], x[..., n:]
        v = (E0 @ xs[..., None])[..., 0]
        base = np.broadcast_to(q0, v.shape)
        y, Dexp = model.exp_with_jacobian(base, v)
        Dphi = Dexp @ E0
        pc = np.linalg.solve(np.swapaxes(Dphi, -1, -2), xi[..., None])[..., 0]
        return np.concatenate([y, pc], axis=-1)

    jacobian = None
    if model.flat:

        def jacobian(x):
            return np.broadcast_to(np.eye(2 * n), x.shape + (2 * n,)).copy()

    return SymplecticMapSpec(
        name="fiber-frame",
        n=n,
        domain=bidisc(d, rho_p, n),
        target=disc_bundle(model, target_r),
        mapping=mapping,
        jacobian=jacobian,
        params={"d": float(d), "rho_p": float(rho_p), "q0": q0.tolist()},
        center=q0,
        base_radius=float(d),
        model=model,
    )


def compose(outer, inner, name=None):
    """``outer o inner`` with chain-rule Jacobian."""

    def mapping(x):
        return outer.mapping(inner.mapping(x))

    def jacobian(x):
        return outer.jac(inner.mapping(x)) @ inner.jac(x)

    return SymplecticMapSpec(
        name=name or f"{outer.name}*{inner.name}",
        n=inner.n,
        domain=inner.domain,
        target=outer.target,
        mapping=mapping,
        jacobian=jacobian,
        params={**inner.params, **outer.params},
        center=outer.center,
        base_radius=outer.base_radius,
        model=outer.model,
        shrink=inner.shrink,
        fd_inside=outer.finite_difference or inner.finite_difference,
    )


def local_ball_embedding(model, q0, d, rho_p, eps=1e-3, target_r=1.0):
    """Ball of capacity ``2 d rho_p (1 - eps)^2`` centred at q0 in a disc bundle.

    `d` is the distance budget of a pair: the bi-disc factor is
    ``P_L(d/2, rho_p)``, so two such balls around points at distance d have
    disjoint base tubes.
    """
    half = 0.5 * d
    outer = fiber_frame_embedding(model, q0, half, rho_p, target_r)
    inner = bidisc_embedding(half, rho_p, eps, model.dim)
    spec = compose(outer, inner, name="local-ball")
    spec.base_radius = inner.base_radius
    spec.params = {"d": float(d), "rho_p": float(rho_p), "eps": float(eps), "q0": outer.params["q0"]}
    return spec
