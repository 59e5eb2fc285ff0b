"""Riemannian operations on manifold models: metric, exp, distance, constants.

Tangent vectors passed to :func:`exp_map` are chart components.
:func:`d_exp` reports the derivative of ``exp_q`` in orthonormal frames
(Gram-Schmidt of the chart basis at q and at ``exp_q(v)``), so for a round
sphere its singular values are ``1`` and ``sin(theta)/theta``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from ._sampling import DEFAULT_SEED, ball_points, sphere_directions
from .manifolds import FlatTorus, InjectivityError, ModelError, RoundSphere


class SingularJacobianError(ModelError):
    pass


@dataclass
class PointAndCovector:
    q: np.ndarray
    p: np.ndarray


@dataclass
class GeodesicPath:
    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    length: float
    speeds: np.ndarray = field(repr=False)

    @property
    def endpoint(self):
        return self.q[-1]


@dataclass
class ConstantA:
    """Sampled minimum of the reciprocal norm of the inverse-transpose d_exp.

    `estimate` is the raw sampled minimum (an upper estimate of the true
    minimum); `value` is what lower bounds use, shrunk by 1% unless the
    model is flat and the value is exact.
    """

    estimate: float
    value: float
    samples: int
    exact: bool


def metric_at(model, q):
    G = model.metric(q)
    if not np.allclose(G, np.swapaxes(G, -1, -2), atol=1e-12):
        raise ModelError("metric is not symmetric")
    return G


def cometric_norm(model, x, p=None):
    """``sqrt(p^T G(q)^{-1} p)`` for a PointAndCovector or a (q, p) pair."""
    if p is None:
        q, p = x.q, x.p
    else:
        q = x
    G = model.metric(q)
    p = np.asarray(p, float)
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise ModelError("metric is not positive definite at q") from None
    sol = np.linalg.solve(G, p[..., None])[..., 0]
    return np.sqrt(np.maximum(np.einsum("...i,...i->...", p, sol), 0.0))


def tangent_norm(model, q, v):
    G = model.metric(q)
    v = np.asarray(v, float)
    return np.sqrt(np.maximum(np.einsum("...i,...ij,...j->...", v, G, v), 0.0))


def orthonormal_frame(model, q):
    """Upper-triangular E with ``E^T G(q) E = I`` (Gram-Schmidt of the chart basis)."""
    L = np.linalg.cholesky(model.metric(q))
    return np.swapaxes(np.linalg.inv(L), -1, -2)


def injectivity_radius(model):
    return model.injectivity_radius()


def injectivity_report(model):
    """Injectivity radius together with its status: 'exact' or 'assumed'."""
    status = "exact" if isinstance(model, (FlatTorus, RoundSphere)) else "assumed"
    return model.injectivity_radius(), status


def _check_injectivity(model, q, v):
    try:
        inj = model.injectivity_radius()
    except ModelError:
        return
    if np.any(tangent_norm(model, q, v) > inj * (1 + 1e-12)):
        raise InjectivityError("tangent vector longer than the injectivity radius")


def exp_map(model, q, v):
    _check_injectivity(model, q, v)
    return model.exp(q, v)


def d_exp(model, q, v):
    """Jacobian of ``exp_q`` at v in orthonormal frames at q and ``exp_q(v)``."""
    q = np.asarray(q, float)
    v = np.asarray(v, float)
    _check_injectivity(model, q, v)
    y = model.exp(q, v)
    J = model.exp_jacobian(q, v)
    Eq = orthonormal_frame(model, np.broadcast_to(q, y.shape))
    Ey = orthonormal_frame(model, y)
    D = np.linalg.solve(Ey, J @ Eq)
    if np.any(np.linalg.svd(D, compute_uv=False)[..., -1] < 1e-10):
        raise SingularJacobianError("exp has a (near) conjugate point in the sampled range")
    return D


def geodesic_integrate(model, q, v, T=1.0, steps=64):
    """Sampled geodesic ``t -> exp_q(t v)`` on ``[0, T]``."""
    q = model.check_point(q)
    v = np.asarray(v, float)
    if steps < 16:
        raise ValueError("geodesic_integrate needs at least 16 steps")
    if tangent_norm(model, q, v) <= 0:
        raise ValueError("initial velocity must be nonzero")
    ts = np.linspace(0.0, T, steps + 1)
    if isinstance(model, FlatTorus):
        qs = q + ts[:, None] * v
        qd = np.broadcast_to(v, qs.shape).copy()
    elif isinstance(model, RoundSphere):
        qs, qd = model.geodesic_samples(q, v * T, ts / T if T else ts)
        qd = qd / T
    else:
        qs, qd = model.geodesic_samples(q, v, T=T, steps=steps)
    speeds = tangent_norm(model, qs, qd)
    return GeodesicPath(ts, qs, qd, float(simpson(speeds, x=ts)), speeds)


def distance_report(model, q0, q1):
    """Distance and how it was obtained ('closed-form', 'shooting', 'graph-only')."""
    if model.analytic_distance:
        return float(model.distance(q0, q1)), "closed-form"
    return model.distance_report(q0, q1)


def distance(model, q0, q1):
    return model.distance(q0, q1)


# -- curves -------------------------------------------------------------------


@dataclass
class Curve:
    """Piecewise-smooth chart curve on ``[a, b]`` with optional breakpoints."""

    position: object
    velocity: object = None
    a: float = 0.0
    b: float = 1.0
    breakpoints: tuple = ()
    label: str = "curve"

    def __call__(self, t):
        return self.position(np.asarray(t, float))

    def derivative(self, t):
        t = np.asarray(t, float)
        if self.velocity is not None:
            return self.velocity(t)
        h = 1e-6 * max(1.0, self.b - self.a)
        return (self.position(t + h) - self.position(t - h)) / (2 * h)


def geodesic_curve(model, q, v):
    """``s -> exp_q(s v)`` on ``[0, 1]``; its length is ``|v|_g``."""
    q = model.check_point(q)
    v = np.asarray(v, float)

    def pos(s):
        return model.exp(q, np.asarray(s)[..., None] * v)

    def vel(s):
        J = model.exp_jacobian(q, np.asarray(s)[..., None] * v)
        return J @ v

    return Curve(pos, vel, 0.0, 1.0, label="geodesic")


def latitude_circle(model, colatitude):
    """Circle at fixed distance ``R * colatitude`` from the chart pole of a sphere."""
    if not isinstance(model, RoundSphere) or model.dim < 2:
        raise ModelError("latitude circles need a round sphere of dimension >= 2")
    rho = model.radius * colatitude
    n = model.dim

    def pos(t):
        t = np.asarray(t, float)
        out = np.zeros(t.shape + (n,))
        out[..., 0] = rho * np.cos(2 * np.pi * t)
        out[..., 1] = rho * np.sin(2 * np.pi * t)
        return out

    def vel(t):
        t = np.asarray(t, float)
        out = np.zeros(t.shape + (n,))
        out[..., 0] = -2 * np.pi * rho * np.sin(2 * np.pi * t)
        out[..., 1] = 2 * np.pi * rho * np.cos(2 * np.pi * t)
        return out

    return Curve(pos, vel, 0.0, 1.0, label="latitude")


def curve_length(model, curve, order=16, panels=32):
    """Composite Gauss-Legendre quadrature of ``|curve'(t)|_g``."""
    knots = np.unique(np.concatenate([[curve.a, curve.b], np.asarray(curve.breakpoints, float)]))
    x, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        edges = np.linspace(lo, hi, panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        ts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        speeds = tangent_norm(model, curve(ts), curve.derivative(ts)).reshape(panels, order)
        total += float(np.sum(half[:, None] * w[None, :] * speeds))
    return total


# -- constants used by the lower-bound constructions -------------------------


def constant_A(model, samples=10_000, seed=DEFAULT_SEED):
    """``min_q min_{|p| <= inj/2} 1 / |(Dexp_q(p)^{-1})^T|`` over Sobol samples."""

    def compute():
        n = model.dim
        radius = 0.5 * model.injectivity_radius()
        qs = model.sample_points(samples, seed)
        ps = ball_points(n, samples, radius, seed + 1)
        E = orthonormal_frame(model, qs)
        v = (E @ ps[..., None])[..., 0]
        smin = np.inf
        for lo in range(0, samples, 2048):
            D = d_exp(model, qs[lo : lo + 2048], v[lo : lo + 2048])
            smin = min(smin, float(np.linalg.svd(D, compute_uv=False)[..., -1].min()))
        est = min(smin, 1.0)
        exact = bool(model.flat)
        return ConstantA(est, est if exact else 0.99 * est, samples, exact)

    return model._cached(("constant_A", samples, seed), compute)


def local_distance_radius(model, bases=8, directions=16, radii=256, seed=DEFAULT_SEED):
    """Radius below which ``|G^{-1}(x) - I| <= |x|`` in normal coordinates.

    The metric in normal coordinates at q0 is ``D^T D`` with D = d_exp.  The
    largest grid radius before the first sampled violation, times 0.9, is
    returned; flat models return the injectivity radius.
    """

    def compute():
        inj = model.injectivity_radius()
        if model.flat:
            return inj
        rmax = 0.5 * inj
        ts = np.linspace(rmax / radii, rmax, radii)
        nb = 2 if model.homogeneous else bases
        q0s = model.sample_points(nb, seed)
        us = sphere_directions(model.dim, directions, seed + 3) if model.dim > 1 else np.array([[1.0], [-1.0]])
        raw = rmax
        for q0 in q0s:
            E = orthonormal_frame(model, q0)
            x = ts[:, None, None] * us[None, :, :]
            v = x @ E.T
            D = d_exp(model, np.broadcast_to(q0, v.shape), v)
            GN = np.swapaxes(D, -1, -2) @ D
            dev = np.linalg.norm(np.linalg.inv(GN) - np.eye(model.dim), ord=2, axis=(-2, -1))
            bad = np.any(dev > ts[:, None], axis=1)
            if bad.any():
                first = int(np.argmax(bad))
                if first == 0:
                    raise ModelError("metric deviates too fast from Euclidean to estimate delta_0")
                raw = min(raw, ts[first - 1])
        return 0.9 * raw

    return model._cached(("delta0", bases, directions, radii, seed), compute)


def admissible_threshold(model):
    """Largest consecutive-point distance allowed in an admissible partition."""
    return 0.9 * local_distance_radius(model)


def diameter_report(model, sources=16, seed=DEFAULT_SEED):
    """Diameter and status: closed form, or a graph-based estimate."""
    d = model.diameter()
    if d is not None:
        return d, "exact"
    from scipy.sparse.csgraph import dijkstra

    g = model.graph()
    mat = g._augmented(np.zeros((0, model.dim)))
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(g.nodes), size=min(sources, len(g.nodes)), replace=False)
    dist = dijkstra(mat, directed=False, indices=idx)
    return float(np.max(dist[np.isfinite(dist)])), "estimate"
