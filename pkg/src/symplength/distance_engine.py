"""Two-sided brackets for the ball-packing distance rho_W and the lengths built on it.

``rho_W(q0, q1)`` is the supremum of ``pi r^2 / 2`` over pairs of disjoint
relative balls of equal capacity centred over q0 and q1 inside a
neighbourhood W of the zero section.  It is not computable, so the engine
returns brackets: the upper side is the packing inequality
``pi r0^2 + pi r1^2 <= 4 r d_g(q0, q1)`` for ``W = D*_r N``, the lower side
comes from certified explicit embeddings.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from ._sampling import DEFAULT_SEED
from .certify import DEFAULT_STORE, certify, check_disjoint
from .graph import DisconnectedGraphError, MetricGraph
from .manifolds import ModelError
from .riemannian import (
    admissible_threshold,
    constant_A,
    curve_length,
    diameter_report,
    distance,
    injectivity_radius,
)
from .symplectic import local_ball_embedding

DEFAULT_EPS = 1e-3
CERT_SAMPLES = 256

STORE = DEFAULT_STORE


class InadmissiblePartitionError(ValueError):
    """A partition gap is at least the admissibility threshold."""

    def __init__(self, index, gap, threshold):
        self.index, self.gap, self.threshold = index, gap, threshold
        super().__init__(f"partition gap {index} has d_g = {gap:.6g} >= threshold {threshold:.6g}")


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Neighbourhood W of the zero section.

    ``unit-disc-bundle`` and ``r-disc-bundle`` are ``D*_r N``; ``sandwich``
    is any W with ``D*_{r_min} N`` inside W inside ``D*_{r_max} N``.
    """

    model: object
    kind: str = "unit-disc-bundle"
    r_min: float = 1.0
    r_max: float = 1.0

    def __post_init__(self):
        if self.kind not in ("unit-disc-bundle", "r-disc-bundle", "sandwich"):
            raise ValueError(f"unknown neighbourhood kind {self.kind!r}")
        if not 0 < self.r_min <= self.r_max:
            raise ValueError("need 0 < r_min <= r_max")
        if self.kind != "sandwich" and self.r_min != self.r_max:
            raise ValueError("a disc bundle has a single radius")
        if self.kind == "unit-disc-bundle" and self.r_min != 1.0:
            raise ValueError("the unit disc bundle has radius 1")

    @classmethod
    def unit(cls, model):
        return cls(model)

    @classmethod
    def disc(cls, model, r):
        return cls(model, "unit-disc-bundle" if r == 1.0 else "r-disc-bundle", float(r), float(r))

    @classmethod
    def sandwich(cls, model, r_min, r_max):
        return cls(model, "sandwich", float(r_min), float(r_max))

    @property
    def is_disc(self):
        return self.kind != "sandwich"

    def to_dict(self):
        return {"kind": self.kind, "r_min": self.r_min, "r_max": self.r_max}

    @classmethod
    def from_dict(cls, model, doc):
        kind = doc.get("kind", "unit-disc-bundle")
        if kind == "sandwich":
            return cls.sandwich(model, doc["r_min"], doc["r_max"])
        if kind == "r-disc-bundle":
            return cls.disc(model, doc.get("r", doc.get("r_min", 1.0)))
        if kind == "unit-disc-bundle":
            return cls.unit(model)
        raise ValueError(f"unknown neighbourhood kind {kind!r}")


@dataclass
class RhoBound:
    """Bracket ``lower <= rho_W(q0, q1) <= upper`` with the source of each side."""

    lower: float
    upper: float
    d_g: float
    lower_source: str
    upper_source: str
    certificates: tuple = ()
    q_radius: float = 0.0
    rho_p: float = 0.0
    diagnostic: str = ""

    @property
    def ball_capacity(self):
        """``pi r^2`` of each of the two balls behind the lower side."""
        return 2.0 * self.lower

    def to_dict(self):
        return asdict(self)


# -- upper side ---------------------------------------------------------------


def _pair_distance(model, q0, q1):
    # canonical order keeps brackets symmetric for numeric distances
    a, b = np.asarray(q0, float), np.asarray(q1, float)
    if tuple(b) < tuple(a):
        a, b = b, a
    return float(distance(model, a, b))


def _upper_source(spec):
    return "packing-inequality" if spec.kind == "unit-disc-bundle" else "rescaled-packing-inequality"


def rho_upper(spec, q0, q1, d_g=None):
    """``r_max * d_g(q0, q1)``, from the packing inequality for ``D*_r N``."""
    d = _pair_distance(spec.model, q0, q1) if d_g is None else float(d_g)
    return spec.r_max * d


# -- lower side ---------------------------------------------------------------


def lower_construction(spec, d, eps=DEFAULT_EPS):
    """Construction used for a pair at distance d.

    Returns ``(name, q_radius, rho_p, lower)``: two local balls with bi-disc
    factor ``P_L(q_radius, rho_p)`` each have capacity
    ``4 q_radius rho_p (1 - eps)^2`` and ``lower`` is half of that.
    """
    model = spec.model
    if d <= 0:
        return "trivial", 0.0, 0.0, 0.0
    shrink = (1 - eps) ** 2
    inj = injectivity_radius(model)
    if spec.is_disc and d < admissible_threshold(model):
        r = spec.r_min
        rho_p = r * math.sqrt(1.0 / (1.0 + d))
        return "local-distance", 0.5 * d, rho_p, d * rho_p * shrink
    A = constant_A(model).value
    rho_p = A * spec.r_min
    if d <= inj:
        return "exp-frame", 0.5 * d, rho_p, rho_p * d * shrink
    return "exp-frame-far", 0.5 * inj, rho_p, rho_p * inj * shrink


def _sig12(x):
    return float(f"{x:.12g}")


def _ball_certificate(spec, name, q_radius, rho_p, center, eps, samples, store):
    """Certificate of one local ball, cached per construction.

    Homogeneous models are certified once per parameter set at the chart
    origin, where the chart is best conditioned; isometries carry the
    certificate to every other center.
    """
    model = spec.model
    homogeneous = model.homogeneous
    where = np.zeros(model.dim) if homogeneous else np.asarray(center, float)
    # id(model) is safe as a key because the entry keeps the model alive
    key = ("ball-cert", id(model), name, _sig12(q_radius), _sig12(rho_p), eps, samples, spec.r_min)
    if not homogeneous:
        key += (tuple(np.round(where, 12)),)
    if key not in store.memo:
        emb = local_ball_embedding(model, where, 2 * q_radius, rho_p, eps, target_r=spec.r_min)
        store.memo[key] = (model, certify(emb, samples=samples, store=store))
    return store.memo[key][1]


def rho_lower(spec, q0, q1, eps=DEFAULT_EPS, samples=CERT_SAMPLES, store=None, d_g=None):
    """Certified lower side for ``rho_W(q0, q1)``.

    Two local balls centred at q0 and q1 are built, certified (symplectic,
    Liouville, containment in ``D*_{r_min} N``, relative) and checked for
    disjoint base tubes.  On any failure the lower side is 0 and the
    diagnostic names the failed check.
    """
    store = STORE if store is None else store
    model = spec.model
    d = _pair_distance(model, q0, q1) if d_g is None else float(d_g)
    upper = rho_upper(spec, q0, q1, d)
    if d == 0.0:
        return RhoBound(0.0, 0.0, 0.0, "trivial", _upper_source(spec))
    name, qr, rho_p, lower = lower_construction(spec, d, eps)
    ids, diag = [], ""
    try:
        certs = [_ball_certificate(spec, name, qr, rho_p, c, eps, samples, store) for c in (q0, q1)]
        ids = [c.id for c in certs]
        failed = [f"{c.id}:{chk.name}" for c in certs for chk in c.checks if not chk.passed]
        if failed:
            diag = "certification failed: " + ", ".join(failed)
        else:
            a = local_ball_embedding(model, q0, 2 * qr, rho_p, eps, target_r=spec.r_min)
            b = local_ball_embedding(model, q1, 2 * qr, rho_p, eps, target_r=spec.r_min)
            disj = check_disjoint(a, b)
            if not disj.passed:
                diag = f"base tubes overlap by {disj.worst:.3g}"
    except ModelError as exc:
        diag = f"construction failed: {exc}"
    if diag:
        return RhoBound(0.0, upper, d, "none", _upper_source(spec), tuple(ids), qr, rho_p, diag)
    return RhoBound(min(lower, upper), upper, d, name, _upper_source(spec), tuple(ids), qr, rho_p)


def rho_bracket(spec, q0, q1, eps=DEFAULT_EPS, samples=CERT_SAMPLES, store=None):
    """Alias of :func:`rho_lower`, which already carries both sides."""
    return rho_lower(spec, q0, q1, eps, samples, store)


# -- partitions and the length functional -------------------------------------


@dataclass
class PartitionSums:
    lower: float
    upper: float
    sum_dg: float
    mesh: float
    bounds: list = field(default_factory=list, repr=False)


def length_rho(model, spec, curve, partition, eps=DEFAULT_EPS, samples=CERT_SAMPLES, store=None):
    """Lower and upper sums of rho brackets over consecutive partition points.

    Refuses partitions with a gap ``d_g >= admissible_threshold(model)``.
    """
    t = np.asarray(partition, float)
    if t.ndim != 1 or len(t) < 2:
        raise ValueError("a partition needs at least two times")
    if np.any(np.diff(t) <= 0):
        raise ValueError("partition times must be strictly increasing")
    pts = curve(t)
    threshold = admissible_threshold(model)
    gaps = [_pair_distance(model, a, b) for a, b in zip(pts[:-1], pts[1:])]
    for i, g in enumerate(gaps):
        if g >= threshold:
            raise InadmissiblePartitionError(i, g, threshold)
    bounds = [rho_lower(spec, a, b, eps, samples, store, d_g=g) for a, b, g in zip(pts[:-1], pts[1:], gaps)]
    lower = math.fsum(b.lower for b in bounds)
    upper = math.fsum(b.upper for b in bounds)
    return PartitionSums(lower, upper, math.fsum(gaps), max(gaps), bounds)


COLUMNS = ("k", "mesh", "sum_dg", "lower", "upper", "squeeze_factor", "riem_length")


@dataclass
class ConvergenceTable:
    """Rows of the partition-refinement experiment.

    Columns: k (partition into 2^k equal parameter intervals), mesh (largest
    gap d_g), sum_dg, lower, upper, squeeze_factor ``sqrt(1/(1+mesh))`` and
    riem_length (quadrature length of the curve).
    """

    rows: list
    eps: float = DEFAULT_EPS
    label: str = ""

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    @property
    def narrowing(self):
        """Distance of the bracket to the Riemannian length never grows."""
        gap = [max(r["riem_length"] - r["lower"], 0.0) + max(r["upper"] - r["riem_length"], 0.0) for r in self.rows]
        return all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(gap[:-1], gap[1:]))

    def violations(self):
        """Rows breaking ``squeeze * sum_dg * (1-eps)^2 <= lower <= upper <= r * sum_dg``."""
        bad = []
        shrink = (1 - self.eps) ** 2
        ulp = 1e-12  # both sides are sums of the same terms in different orders
        for r in self.rows:
            floor = r["squeeze_factor"] * r["sum_dg"] * shrink * r["r"] * (1 - ulp)
            if not (floor <= r["lower"] <= r["upper"] <= r["r"] * r["sum_dg"] * (1 + ulp)):
                bad.append(r["k"])
        return bad

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([r["k"]] + [repr(float(r[c])) for c in COLUMNS[1:]])
        return buf.getvalue()

    def to_dict(self):
        return {"label": self.label, "eps": self.eps, "columns": list(COLUMNS), "rows": [[r[c] for c in COLUMNS] for r in self.rows]}


def converge_length(model, spec, curve, ks=range(2, 11), eps=DEFAULT_EPS, samples=CERT_SAMPLES, store=None):
    """Bracket the rho-length of a curve along dyadic uniform partitions."""
    ks = list(ks)
    if any(b <= a for a, b in zip(ks[:-1], ks[1:])):
        raise ValueError("schedule must be strictly increasing")
    L = curve_length(model, curve)
    r = spec.r_max
    rows = []
    for k in ks:
        t = np.linspace(curve.a, curve.b, 2**k + 1)
        sums = length_rho(model, spec, curve, t, eps, samples, store)
        rows.append(
            {
                "k": k,
                "mesh": sums.mesh,
                "sum_dg": sums.sum_dg,
                "lower": sums.lower,
                "upper": sums.upper,
                "squeeze_factor": math.sqrt(1.0 / (1.0 + sums.mesh)),
                "riem_length": L,
                "r": r,
            }
        )
    return ConvergenceTable(rows, eps, curve.label)


# -- chain pseudo-metric -------------------------------------------------------


@dataclass
class DWBracket:
    """Graph estimates for the chain pseudo-metric D_W.

    `upper` is the shortest path with edge weights rho_upper (an estimate of
    D_W from above up to graph discretisation); `lower_graph` uses the
    uncertified lower-construction formula as edge weight;
    `certified_lower` is ``C1 (1-eps)^2 d_g``.
    """

    upper: float
    lower_graph: float
    certified_lower: float
    d_g: float
    mesh: float
    nodes: int

    def to_dict(self):
        return asdict(self)


def chain_metric_DW(model, spec, q0, q1, size=10_000, k=16, seed=DEFAULT_SEED, eps=DEFAULT_EPS):
    """Shortest chains through a Sobol graph with edges shorter than the admissibility threshold."""
    q0 = model.check_point(q0)
    q1 = model.check_point(q1)
    d = _pair_distance(model, q0, q1)
    C1, _ = equivalence_constants(model, spec)[:2]
    if d == 0.0:
        return DWBracket(0.0, 0.0, 0.0, 0.0, 0.0, 0)
    nodes = np.concatenate([model.sample_points(size, seed), q0[None], q1[None]])
    g = MetricGraph(model, nodes=nodes, k=k)
    threshold = admissible_threshold(model)
    keep = g.lengths < threshold
    n = len(nodes)
    # the two-point chain (q0, q1) is always available
    rows = np.r_[g.rows[keep], n - 2]
    cols = np.r_[g.cols[keep], n - 1]
    lens = np.r_[g.lengths[keep], d]
    up = spec.r_max * lens
    lo = np.array([lower_construction(spec, x, eps)[3] for x in lens])
    out = []
    for w in (up, lo):
        mat = coo_matrix((np.maximum(w, 1e-300), (rows, cols)), shape=(n, n)).tocsr()
        dist = dijkstra(mat, directed=False, indices=n - 2)[n - 1]
        if not np.isfinite(dist):
            raise DisconnectedGraphError("q0 and q1 are not connected; increase graph size")
        out.append(float(dist))
    return DWBracket(out[0], out[1], C1 * (1 - eps) ** 2 * d, d, g.covering_radius(), n)


# -- equivalence constants ---------------------------------------------------


@dataclass
class EquivalenceConstants:
    C1: float
    C2: float
    A: float
    r_min: float
    injectivity_radius: float
    diameter: float
    diameter_status: str

    def __iter__(self):
        return iter((self.C1, self.C2))

    def __getitem__(self, i):
        return (self.C1, self.C2)[i]

    def to_dict(self):
        return asdict(self)


def equivalence_constants(model, spec):
    """``C1 = A r_min inj / diam`` and ``C2 = r_max``.

    For models without a closed-form diameter the graph estimate is a lower
    estimate, which makes C1 an over-estimate; `diameter_status` says which.
    """
    A = constant_A(model).value
    inj = injectivity_radius(model)
    diam, status = diameter_report(model)
    C1 = A * spec.r_min * inj / diam
    return EquivalenceConstants(C1, spec.r_max, A, spec.r_min, inj, diam, status)


def pairs_to_csv(pairs, bounds):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q0", "q1", "d_g", "lower", "upper", "lower_source", "upper_source", "certificates"])
    for (a, b), r in zip(pairs, bounds):
        w.writerow([json.dumps(list(map(float, a))), json.dumps(list(map(float, b))), repr(r.d_g), repr(r.lower), repr(r.upper), r.lower_source, r.upper_source, " ".join(r.certificates)])
    return buf.getvalue()
