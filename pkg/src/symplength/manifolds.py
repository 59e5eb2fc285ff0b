"""Closed Riemannian manifolds given in coordinates.

Each model exposes a single chart that is good enough for every query:

* ``FlatTorus``: R^n modulo an orthogonal lattice; the chart is R^n itself
  and any representative of a point may be passed in.
* ``RoundSphere``: S^n of radius R in normal coordinates at the north pole,
  valid away from the south pole.
* ``SurfaceOfRevolution``: coordinates ``(z, theta)`` with metric
  ``(1 + r'(z)^2) dz^2 + r(z)^2 dtheta^2``, periodic in both variables.
* ``ChartMetric``: a user metric on a coordinate box.

All array arguments broadcast over leading axes; the last axis holds
coordinates.
"""

import functools
import math

import numpy as np

from . import expr
from ._sampling import DEFAULT_SEED, sobol, sphere_directions


class ModelError(ValueError):
    """Bad model description or a query outside the model's chart."""


class ChartExitError(ModelError):
    pass


class InjectivityError(ModelError):
    pass


def _sinc(s):
    return np.sinc(np.asarray(s) / np.pi)


def _cos_minus_sinc_over_s2(s):
    # (cos s - sin s / s) / s^2
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-2
    s_safe = np.where(small, 1.0, s)
    direct = (np.cos(s_safe) - _sinc(s_safe)) / s_safe**2
    s2 = s * s
    series = -1.0 / 3.0 + s2 / 30.0 - s2 * s2 / 840.0
    return np.where(small, series, direct)


@functools.lru_cache(maxsize=None)
def _gauss_unit(order):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _gram(vectors, metric):
    return np.einsum("...i,...ij,...j->...", vectors, metric, vectors)


class ManifoldModel:
    """Common interface; subclasses fill in the geometry."""

    kind = "abstract"
    homogeneous = False
    flat = False
    analytic_distance = False
    periods = None  # lattice periods of a periodic chart, else None

    def __init__(self, dim):
        self.dim = int(dim)
        self._cache = {}

    # -- geometry every model provides -------------------------------------
    def metric(self, q):
        raise NotImplementedError

    def exp(self, q, v):
        raise NotImplementedError

    def exp_jacobian(self, q, v):
        """Chart Jacobian of ``v -> exp_q(v)`` (tangent vectors in chart components)."""
        raise NotImplementedError

    def exp_with_jacobian(self, q, v):
        """``(exp_q(v), exp_jacobian(q, v))``; models may share the work."""
        return self.exp(q, v), self.exp_jacobian(q, v)

    def distance(self, q0, q1):
        raise NotImplementedError

    def injectivity_radius(self):
        raise NotImplementedError

    def diameter(self):
        """Exact diameter when known in closed form, else ``None``."""
        return None

    def volume(self):
        return None

    def check_point(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape[-1] != self.dim:
            raise ModelError(f"expected {self.dim} coordinates, got shape {q.shape}")
        return q

    def sample_points(self, count, seed=DEFAULT_SEED):
        raise NotImplementedError

    def chart_step(self, q0, q1):
        """Chart displacement from q0 to the representative of q1 nearest in chart terms."""
        d = np.asarray(q1, float) - np.asarray(q0, float)
        if self.periods is not None:
            d = d - self.periods * np.round(d / self.periods)
        return d

    def search_coords(self, q):
        """Coordinates used for nearest-neighbour search, plus a periodic box size."""
        q = np.asarray(q, float)
        if self.periods is not None:
            return np.mod(q, self.periods), self.periods
        return q, None

    def segment_length(self, q0, q1, order=6):
        """Length of the straight chart segment from q0 towards q1 (nearest image)."""
        q0 = np.asarray(q0, float)
        d = self.chart_step(q0, q1)
        x, w = _gauss_unit(order)
        total = 0.0
        for xi, wi in zip(x, w):
            g = self.metric(q0 + xi * d)
            total = total + wi * np.sqrt(np.maximum(_gram(d, g), 0.0))
        return total

    def to_dict(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]


class FlatTorus(ManifoldModel):
    kind = "flat-torus"
    homogeneous = True
    flat = True
    analytic_distance = True

    def __init__(self, periods):
        periods = np.asarray(periods, dtype=float).ravel()
        if periods.size == 0 or np.any(periods <= 0):
            raise ModelError("flat-torus periods must be positive")
        super().__init__(periods.size)
        self.periods = periods

    def metric(self, q):
        q = self.check_point(q)
        return np.broadcast_to(np.eye(self.dim), q.shape + (self.dim,)).copy()

    def exp(self, q, v):
        return self.check_point(q) + np.asarray(v, float)

    def exp_jacobian(self, q, v):
        shape = np.broadcast_shapes(np.shape(q), np.shape(v))
        return np.broadcast_to(np.eye(self.dim), shape + (self.dim,)).copy()

    def distance(self, q0, q1):
        return np.linalg.norm(self.chart_step(q0, q1), axis=-1)

    def injectivity_radius(self):
        return 0.5 * float(self.periods.min())

    def diameter(self):
        return 0.5 * float(np.linalg.norm(self.periods))

    def volume(self):
        return float(np.prod(self.periods))

    def sample_points(self, count, seed=DEFAULT_SEED):
        return sobol(self.dim, count, seed) * self.periods

    def to_dict(self):
        return {"kind": self.kind, "periods": self.periods.tolist()}


class RoundSphere(ManifoldModel):
    """Sphere of radius R in normal coordinates centred at the north pole."""

    kind = "round-sphere"
    homogeneous = True
    analytic_distance = True

    def __init__(self, dim, radius=1.0):
        if dim < 1 or radius <= 0:
            raise ModelError("round-sphere needs dim >= 1 and radius > 0")
        super().__init__(dim)
        self.radius = float(radius)
        self.pole = np.zeros(dim + 1)
        self.pole[-1] = 1.0

    # ambient picture
    def embed(self, q):
        q = self.check_point(q)
        r = np.linalg.norm(q, axis=-1)
        s = r / self.radius
        top = _sinc(s)[..., None] * q
        bottom = self.radius * np.cos(s)[..., None]
        return np.concatenate([top, bottom], axis=-1)

    def tangent_map(self, q):
        """Derivative of the chart-to-ambient map, shape (..., n+1, n)."""
        q = self.check_point(q)
        R = self.radius
        s = np.linalg.norm(q, axis=-1) / R
        n = self.dim
        top = _sinc(s)[..., None, None] * np.eye(n) + (
            _cos_minus_sinc_over_s2(s) / R**2
        )[..., None, None] * (q[..., :, None] * q[..., None, :])
        bottom = -(_sinc(s) / R)[..., None, None] * q[..., None, :]
        return np.concatenate([top, bottom], axis=-2)

    def chart(self, x):
        x = np.asarray(x, dtype=float)
        R = self.radius
        x = R * x / np.linalg.norm(x, axis=-1, keepdims=True)
        u = x / R
        theta = 2.0 * np.arctan2(
            np.linalg.norm(u - self.pole, axis=-1), np.linalg.norm(u + self.pole, axis=-1)
        )
        if np.any(theta > math.pi - 1e-7):
            raise ChartExitError("point too close to the antipode of the chart pole")
        return x[..., :-1] / _sinc(theta)[..., None]

    def metric(self, q):
        dX = self.tangent_map(q)
        return np.swapaxes(dX, -1, -2) @ dX

    def exp(self, q, v):
        x = self.embed(q)
        V = (self.tangent_map(q) @ np.asarray(v, float)[..., None])[..., 0]
        theta = np.linalg.norm(V, axis=-1) / self.radius
        y = np.cos(theta)[..., None] * x + _sinc(theta)[..., None] * V
        return self.chart(y)

    def _ambient_exp_derivative(self, x, V):
        R = self.radius
        theta = np.linalg.norm(V, axis=-1) / R
        m = x.shape[-1]
        return (
            _sinc(theta)[..., None, None] * np.eye(m)
            + (_cos_minus_sinc_over_s2(theta) / R**2)[..., None, None] * (V[..., :, None] * V[..., None, :])
            - (_sinc(theta) / R**2)[..., None, None] * (x[..., :, None] * V[..., None, :])
        )

    def _to_chart_vector(self, y_chart, W):
        dX = self.tangent_map(y_chart)
        G = np.swapaxes(dX, -1, -2) @ dX
        return np.linalg.solve(G, np.swapaxes(dX, -1, -2) @ W)

    def exp_jacobian(self, q, v):
        q = self.check_point(q)
        v = np.asarray(v, float)
        x = self.embed(q)
        dXq = self.tangent_map(q)
        V = (dXq @ v[..., None])[..., 0]
        y = self.exp(q, v)
        D = self._ambient_exp_derivative(x, V)
        return self._to_chart_vector(y, D @ dXq)

    def distance(self, q0, q1):
        x = self.embed(q0) / self.radius
        y = self.embed(q1) / self.radius
        return 2.0 * self.radius * np.arctan2(
            np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1)
        )

    def injectivity_radius(self):
        return math.pi * self.radius

    def diameter(self):
        return math.pi * self.radius

    def volume(self):
        n = self.dim
        return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2) * self.radius**n

    def sample_points(self, count, seed=DEFAULT_SEED, max_colatitude=0.9 * math.pi):
        """Sobol points on the sphere, kept at colatitude <= max_colatitude."""
        pts = []
        offset = 0
        while sum(len(p) for p in pts) < count:
            batch = sphere_directions(self.dim + 1, 2 * count + 64, seed + offset)
            keep = batch[:, -1] >= math.cos(max_colatitude)
            pts.append(self.chart(self.radius * batch[keep]))
            offset += 1
        return np.concatenate(pts)[:count]

    def search_coords(self, q):
        return self.embed(q), None

    def geodesic_samples(self, q, v, ts):
        x = self.embed(q)
        V = self.tangent_map(q) @ np.asarray(v, float)
        theta = np.linalg.norm(V) / self.radius
        ts = np.asarray(ts, float)
        y = np.cos(ts * theta)[:, None] * x + (ts * _sinc(ts * theta))[:, None] * V
        dy = -(theta * np.sin(ts * theta))[:, None] * x + np.cos(ts * theta)[:, None] * V
        yc = self.chart(y)
        return yc, self._to_chart_vector(yc, dy[..., None])[..., 0]

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "radius": self.radius}


class _HamiltonianGeodesics(ManifoldModel):
    """RK4 integration of the cogeodesic flow ``H = |p|^2 / 2`` in the chart."""

    default_steps = 64
    fd_step = 1e-5

    def __init__(self, dim, inj_bound=None, graph_size=10_000, graph_k=12):
        super().__init__(dim)
        self.inj_bound = None if inj_bound is None else float(inj_bound)
        self.graph_size = int(graph_size)
        self.graph_k = int(graph_k)

    def metric_grad(self, q):
        """Central differences of g_ij; result[..., k, i, j] = d_k g_ij."""
        q = np.asarray(q, float)
        h = self.fd_step
        grads = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            grads.append((self.metric(q + e) - self.metric(q - e)) / (2 * h))
        return np.stack(grads, axis=-3)

    def _rhs(self, z):
        n = self.dim
        q, p = z[..., :n], z[..., n:]
        G = self.metric(q)
        qd = np.linalg.solve(G, p[..., None])[..., 0]
        dG = self.metric_grad(q)
        pd = 0.5 * np.einsum("...i,...kij,...j->...k", qd, dG, qd)
        return np.concatenate([qd, pd], axis=-1)

    _rhs_jacobian = None  # exact linearisation of _rhs, when a model has one

    def _rhs_with_tangent(self, z, Phi):
        # Phi[..., :, j] is a tangent column; JVPs by central differences
        # unless the model supplies the exact linearisation.
        if self._rhs_jacobian is not None:
            return self._rhs(z), self._rhs_jacobian(z) @ Phi
        norms = np.linalg.norm(Phi, axis=-2)
        h = 1e-6 / np.maximum(norms, 1e-300)
        cols = np.swapaxes(Phi, -1, -2) * h[..., None]
        zz = np.concatenate([z[..., None, :], z[..., None, :] + cols, z[..., None, :] - cols], axis=-2)
        F = self._rhs(zz)
        m = Phi.shape[-1]
        jvp = (F[..., 1 : 1 + m, :] - F[..., 1 + m :, :]) / (2 * h[..., None])
        return F[..., 0, :], np.swapaxes(jvp, -1, -2)

    def _integrate(self, q, v, T=1.0, steps=None, tangent=False, record=False):
        n = self.dim
        steps = self.default_steps if steps is None else int(steps)
        q = np.asarray(q, float)
        v = np.asarray(v, float)
        q, v = np.broadcast_arrays(q, v)
        G0 = self.metric(q)
        z = np.concatenate([q, (G0 @ v[..., None])[..., 0]], axis=-1)
        h = T / steps
        Phi = None
        if tangent:
            Phi = np.concatenate([np.zeros(q.shape + (n,)), G0], axis=-2)
        rec = [z.copy()] if record else None
        for _ in range(steps):
            if tangent:
                k1, K1 = self._rhs_with_tangent(z, Phi)
                k2, K2 = self._rhs_with_tangent(z + 0.5 * h * k1, Phi + 0.5 * h * K1)
                k3, K3 = self._rhs_with_tangent(z + 0.5 * h * k2, Phi + 0.5 * h * K2)
                k4, K4 = self._rhs_with_tangent(z + h * k3, Phi + h * K3)
                Phi = Phi + (h / 6) * (K1 + 2 * K2 + 2 * K3 + K4)
            else:
                k1 = self._rhs(z)
                k2 = self._rhs(z + 0.5 * h * k1)
                k3 = self._rhs(z + 0.5 * h * k2)
                k4 = self._rhs(z + h * k3)
            z = z + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            if record:
                rec.append(z.copy())
        return z, Phi, rec

    def exp(self, q, v, steps=None):
        z, _, _ = self._integrate(self.check_point(q), v, steps=steps)
        y = z[..., : self.dim]
        self._check_inside(y)
        return y

    def exp_jacobian(self, q, v, steps=None):
        z, Phi, _ = self._integrate(self.check_point(q), v, steps=steps, tangent=True)
        self._check_inside(z[..., : self.dim])
        return Phi[..., : self.dim, :]

    def exp_with_jacobian(self, q, v, steps=None):
        z, Phi, _ = self._integrate(self.check_point(q), v, steps=steps, tangent=True)
        y = z[..., : self.dim]
        self._check_inside(y)
        return y, Phi[..., : self.dim, :]

    def _check_inside(self, q):
        pass

    def geodesic_samples(self, q, v, T=1.0, steps=None):
        steps = self.default_steps if steps is None else steps
        _, _, rec = self._integrate(self.check_point(q), v, T=T, steps=steps, record=True)
        z = np.stack(rec)
        qs = z[:, : self.dim]
        self._check_inside(qs)
        qd = np.linalg.solve(self.metric(qs), z[:, self.dim :, None])[..., 0]
        return qs, qd

    def injectivity_radius(self):
        if self.inj_bound is None:
            raise ModelError(f"{self.kind} model needs a user-provided injectivity radius bound")
        return self.inj_bound

    # -- distance by shooting, seeded and guarded by a metric graph --------
    def graph(self):
        from .graph import MetricGraph

        return self._cached(
            ("graph", self.graph_size, self.graph_k),
            lambda: MetricGraph(self, size=self.graph_size, k=self.graph_k),
        )

    def shoot(self, q0, target, v0, tol=1e-10, maxiter=25):
        """Newton iteration for v with exp_q0(v) = target; returns (v, converged)."""
        # diverging trial steps overflow; they are rejected as non-finite
        with np.errstate(over="ignore", invalid="ignore"):
            return self._shoot(q0, target, v0, tol, maxiter)

    def _shoot(self, q0, target, v0, tol, maxiter):
        v = np.asarray(v0, float).copy()
        for _ in range(maxiter):
            try:
                res = self.exp(q0, v) - target
            except ChartExitError:
                return v, False
            err = np.linalg.norm(res)
            if not np.isfinite(err):
                return v, False
            if err < tol:
                return v, True
            J = self.exp_jacobian(q0, v)
            if not np.all(np.isfinite(J)):
                return v, False
            try:
                dv = np.linalg.solve(J, -res)
            except np.linalg.LinAlgError:
                return v, False
            step = 1.0
            while step > 1.0 / 64:
                try:
                    trial = np.linalg.norm(self.exp(q0, v + step * dv) - target)
                except ChartExitError:
                    trial = np.inf
                if np.isfinite(trial) and trial < err:
                    break
                step *= 0.5
            else:
                return v, False
            v = v + step * dv
        return v, bool(np.linalg.norm(self.exp(q0, v) - target) < tol)

    def _polyline_length(self, pts):
        """Midpoint-rule length of an unrolled chart polyline and its gradient."""
        d = pts[1:] - pts[:-1]
        mid = 0.5 * (pts[1:] + pts[:-1])
        G = self.metric(mid)
        Gd = (G @ d[..., None])[..., 0]
        ell = np.sqrt(np.maximum(np.sum(d * Gd, axis=-1), 1e-300))
        dG = self.metric_grad(mid)
        # d/dm (d^T G(m) d) enters with weight 1/2 for both endpoints
        curv = np.einsum("si,skij,sj->sk", d, dG, d) / (4.0 * ell[:, None])
        lin = Gd / ell[:, None]
        grad = np.zeros_like(pts)
        grad[1:] += lin + curv
        grad[:-1] += -lin + curv
        return float(ell.sum()), grad

    def _seed_from_path(self, path, points=24):
        """Shorten a graph path as a polyline and return its initial velocity."""
        from scipy.optimize import minimize

        seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        grid = np.linspace(0.0, s[-1], points)
        poly = np.stack([np.interp(grid, s, path[:, i]) for i in range(self.dim)], axis=1)
        start, end = poly[0], poly[-1]

        def length(flat):
            pts = np.concatenate([start[None], flat.reshape(-1, self.dim), end[None]])
            try:
                val, grad = self._polyline_length(pts)
            except ChartExitError:
                return np.inf, np.zeros_like(flat)
            return val, grad[1:-1].ravel()

        res = minimize(length, poly[1:-1].ravel(), jac=True, method="L-BFGS-B", options={"maxiter": 200})
        pts = np.concatenate([start[None], res.x.reshape(-1, self.dim), end[None]])
        first = pts[1] - pts[0]
        G0 = self.metric(pts[0])
        return first * res.fun / np.sqrt(_gram(first, G0))

    def distance_report(self, q0, q1):
        """Distance and the method that produced it: 'shooting' or 'graph-only'."""
        q0 = self.check_point(q0)
        q1 = self.check_point(q1)
        if np.allclose(self.chart_step(q0, q1), 0.0, atol=1e-14):
            return 0.0, "shooting"
        graph_len, path = self.graph().shortest_path(q0, q1)
        G0 = self.metric(q0)
        chord = self.chart_step(q0, q1)
        lift = path[-1]
        seeds = [lambda: (q0 + chord, chord)]
        if not np.allclose(lift, q0 + chord):
            seeds.append(lambda: (lift, lift - q0))
        seeds.append(lambda: (lift, self._seed_from_path(path)))
        # a geodesic shorter than the injectivity radius is the minimiser;
        # longer ones may not be, so every seed is tried and the shortest kept
        short = self.inj_bound if self.inj_bound is not None else 0.0
        best = np.inf
        for make_seed in seeds:
            target, v0 = make_seed()
            v, ok = self.shoot(q0, target, v0)
            if ok:
                best = min(best, float(np.sqrt(_gram(v, G0))))
            if best < short:
                return best, "shooting"
        if best <= graph_len * (1 + 1e-9):
            return best, "shooting"
        return float(graph_len), "graph-only"

    def distance(self, q0, q1):
        q0, q1 = np.broadcast_arrays(np.asarray(q0, float), np.asarray(q1, float))
        flat0 = q0.reshape(-1, self.dim)
        flat1 = q1.reshape(-1, self.dim)
        out = np.array([self.distance_report(a, b)[0] for a, b in zip(flat0, flat1)])
        return out.reshape(q0.shape[:-1])


class SurfaceOfRevolution(_HamiltonianGeodesics):
    """Surface swept by the profile ``r(z)``; z periodic with period z_period."""

    kind = "surface-of-revolution"

    def __init__(self, profile="2+cos(z)", z_period=2 * math.pi, inj_bound=None, **kw):
        super().__init__(2, inj_bound=inj_bound, **kw)
        self.profile = str(profile)
        self.z_period = float(z_period)
        self.periods = np.array([self.z_period, 2 * math.pi])
        self.r, self.dr, self.ddr, self.dddr = expr.profile_functions(self.profile, order=3)
        self._jet = expr.profile_jet(self.profile, order=3)
        zs = np.linspace(0.0, self.z_period, 257)
        if np.any(self.r(zs) <= 0):
            raise ModelError("profile must stay positive")
        if abs(float(self.r(0.0)) - float(self.r(self.z_period))) > 1e-9:
            raise ModelError("profile must be periodic with period z_period")

    def metric(self, q):
        q = self.check_point(q)
        z = q[..., 0]
        G = np.zeros(q.shape + (2,))
        G[..., 0, 0] = 1.0 + self.dr(z) ** 2
        G[..., 1, 1] = self.r(z) ** 2
        return G

    def metric_grad(self, q):
        q = np.asarray(q, float)
        z = q[..., 0]
        r, dr, ddr = self.r(z), self.dr(z), self.ddr(z)
        out = np.zeros(q.shape[:-1] + (2, 2, 2))
        out[..., 0, 0, 0] = 2 * dr * ddr
        out[..., 0, 1, 1] = 2 * r * dr
        return out

    def _rhs(self, z):
        # diagonal metric: closed-form Hamiltonian vector field
        zc, pz, pt = z[..., 0], z[..., 2], z[..., 3]
        r, dr, ddr, _ = self._jet(zc)
        a = 1.0 + dr * dr
        qz = pz / a
        qt = pt / (r * r)
        out = np.empty_like(z)
        out[..., 0] = qz
        out[..., 1] = qt
        out[..., 2] = qz * qz * dr * ddr + qt * qt * r * dr
        out[..., 3] = 0.0
        return out

    def _rhs_jacobian(self, z):
        zc, pz, pt = z[..., 0], z[..., 2], z[..., 3]
        r, dr, ddr, dddr = self._jet(zc)
        a = 1.0 + dr * dr
        qz = pz / a
        qt = pt / (r * r)
        c, e = dr * ddr, r * dr
        dqz = -qz * 2 * c / a
        dqt = -2 * qt * dr / r
        J = np.zeros(z.shape + (4,))
        J[..., 0, 0] = dqz
        J[..., 0, 2] = 1 / a
        J[..., 1, 0] = dqt
        J[..., 1, 3] = 1 / (r * r)
        J[..., 2, 0] = 2 * qz * c * dqz + qz * qz * (ddr * ddr + dr * dddr) + 2 * qt * e * dqt + qt * qt * (dr * dr + r * ddr)
        J[..., 2, 2] = 2 * qz * c / a
        J[..., 2, 3] = 2 * qt * e / (r * r)
        return J

    def clairaut(self, q, qdot):
        """Angular momentum r(z)^2 * dtheta/dt, conserved along geodesics."""
        return self.r(np.asarray(q)[..., 0]) ** 2 * np.asarray(qdot)[..., 1]

    def volume(self):
        from scipy.integrate import quad

        area, _ = quad(lambda z: self.r(z) * np.sqrt(1 + self.dr(z) ** 2), 0.0, self.z_period, limit=200)
        return 2 * math.pi * area

    def sample_points(self, count, seed=DEFAULT_SEED):
        return sobol(2, count, seed) * self.periods

    def to_dict(self):
        d = {"kind": self.kind, "profile": self.profile, "z_period": self.z_period}
        if self.inj_bound is not None:
            d["inj_bound"] = self.inj_bound
        return d


class ChartMetric(_HamiltonianGeodesics):
    """Metric ``g_ij(q)`` on a coordinate box ``[lo, hi]``.

    ``metric_fn`` must broadcast over leading axes and return (..., n, n).
    A JSON description may give the metric as a matrix of expressions in the
    variables ``q1..qn``.
    """

    kind = "chart-metric"

    def __init__(self, metric_fn, lo, hi, inj_bound=None, expressions=None, **kw):
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ModelError("chart-metric domain box needs lo < hi")
        super().__init__(lo.size, inj_bound=inj_bound, **kw)
        self.lo, self.hi = lo, hi
        self._metric_fn = metric_fn
        self.expressions = expressions

    @classmethod
    def from_expressions(cls, rows, lo, hi, **kw):
        n = len(rows)
        names = tuple(f"q{i + 1}" for i in range(n))
        fns = [[expr.compile_scalar(expr.parse(e, names), names) for e in row] for row in rows]

        def metric_fn(q):
            q = np.asarray(q, float)
            args = [q[..., i] for i in range(n)]
            G = np.empty(q.shape + (n,))
            for i in range(n):
                for j in range(n):
                    G[..., i, j] = fns[i][j](*args)
            return 0.5 * (G + np.swapaxes(G, -1, -2))

        return cls(metric_fn, lo, hi, expressions=[list(map(str, r)) for r in rows], **kw)

    def in_domain(self, q):
        q = np.asarray(q, float)
        return np.all((q >= self.lo) & (q <= self.hi), axis=-1)

    def metric(self, q):
        q = self.check_point(q)
        if not np.all(self.in_domain(q)):
            raise ChartExitError("point outside the chart-metric domain box")
        return np.asarray(self._metric_fn(q), float)

    def _check_inside(self, q):
        if not np.all(self.in_domain(q)):
            raise ChartExitError("geodesic left the chart-metric domain box")

    def sample_points(self, count, seed=DEFAULT_SEED):
        return self.lo + sobol(self.dim, count, seed) * (self.hi - self.lo)

    def to_dict(self):
        if self.expressions is None:
            raise ModelError("chart-metric built from a Python callable has no JSON form")
        d = {"kind": self.kind, "metric": self.expressions, "domain": [self.lo.tolist(), self.hi.tolist()]}
        if self.inj_bound is not None:
            d["inj_bound"] = self.inj_bound
        return d


def load_model(doc):
    """Build a model from its JSON description (dict)."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ModelError("model document must be an object with a 'kind'")
    kind = doc["kind"]
    try:
        if kind == "flat-torus":
            return FlatTorus(doc["periods"])
        if kind == "round-sphere":
            return RoundSphere(int(doc.get("dim", 2)), float(doc.get("radius", 1.0)))
        if kind == "surface-of-revolution":
            return SurfaceOfRevolution(
                doc["profile"],
                z_period=float(doc.get("z_period", 2 * math.pi)),
                inj_bound=doc.get("inj_bound"),
            )
        if kind == "chart-metric":
            lo, hi = doc["domain"]
            return ChartMetric.from_expressions(doc["metric"], lo, hi, inj_bound=doc.get("inj_bound"))
    except (KeyError, TypeError) as exc:
        raise ModelError(f"incomplete {kind} model document: {exc}") from None
    raise ModelError(f"unknown model kind {kind!r}")
