"""Capacities and volumes of bi-discs, disc bundles and ball packings."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._sampling import DEFAULT_SEED, sobol
from .certify import DEFAULT_STORE, certify
from .distance_engine import DEFAULT_EPS
from .manifolds import RoundSphere
from .riemannian import diameter_report
from .symplectic import Region, bidisc, bidisc_embedding

STORE = DEFAULT_STORE


class CertificationError(RuntimeError):
    pass


@dataclass
class CapacityBound:
    value: float
    method: str
    certificate: str = None

    def __float__(self):
        return float(self.value)


def unit_ball_volume(n):
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def bidisc_gromov_lower(a, b, eps=DEFAULT_EPS, n=2, samples=10_000, store=None):
    """``4ab (1 - eps)^2``, backed by a certified bi-disc ball embedding."""
    store = STORE if store is None else store
    key = ("bidisc", float(a), float(b), float(eps), int(n), int(samples))
    if key not in store.memo:
        store.memo[key] = certify(bidisc_embedding(a, b, eps, n), samples=samples, store=store)
    cert = store.memo[key]
    if not cert.verdict:
        raise CertificationError(f"bi-disc embedding a={a} b={b} failed: {cert.to_json()}")
    return CapacityBound(4.0 * a * b * (1 - eps) ** 2, "bidisc-ball-embedding", cert.id)


def bidisc_cyl_upper(a, b):
    """Cylindrical capacity bound 4ab: the (q1, p1) shadow sits in a 2a x 2b square."""
    return CapacityBound(4.0 * a * b, "projection-(q1,p1)")


def shadow_box_area(a, b, n=2, samples=100_000, seed=DEFAULT_SEED):
    """Bounding-box area of the (q1, p1) projection of sampled bi-disc points."""
    pts = bidisc(a, b, n).sample(samples, seed)
    q1, p1 = pts[:, 0], pts[:, n]
    return float((q1.max() - q1.min()) * (p1.max() - p1.min()))


def euclidean_volume(region):
    """Closed-form (Liouville) volume of a ball, bi-disc or disc bundle."""
    n = region.n
    if region.kind == "ball":
        r = region.params["r"]
        return math.pi**n * r ** (2 * n) / math.factorial(n)
    if region.kind == "bi-disc":
        return unit_ball_volume(n) ** 2 * (region.params["a"] * region.params["b"]) ** n
    if region.kind == "disc-bundle":
        vol = region.model.volume()
        if vol is None:
            raise ValueError(f"no closed-form volume for {region.model.kind}")
        return vol * unit_ball_volume(n) * region.params["r"] ** n
    raise ValueError(f"unsupported region {region.kind!r}")


def monte_carlo_volume(region, samples=100_000, seed=DEFAULT_SEED):
    """Hit-or-miss volume of a ball or bi-disc inside its bounding box."""
    n = region.n
    if region.kind == "ball":
        half = np.full(2 * n, region.params["r"])
    elif region.kind == "bi-disc":
        half = np.r_[np.full(n, region.params["a"]), np.full(n, region.params["b"])]
    else:
        raise ValueError(f"unsupported region {region.kind!r}")
    x = (2 * sobol(2 * n, samples, seed) - 1) * half
    return float(np.prod(2 * half) * np.mean(region.contains(x)))


def volume_width_bound(region):
    """Largest ``pi r^2`` a ball of equal volume could have: ``(n! Vol)^(1/n)``."""
    return (math.factorial(region.n) * euclidean_volume(region)) ** (1.0 / region.n)


@dataclass
class CapacityReport:
    domain: dict
    gromov_lower: float
    certificate: str
    cyl_upper: float
    cyl_method: str
    volume: float
    volume_bound: float
    flags: dict = field(default_factory=dict)

    @property
    def ordered(self):
        return self.gromov_lower <= self.cyl_upper

    def to_dict(self):
        d = asdict(self)
        d["ordered"] = self.ordered
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def bidisc_report(a, b, n=2, eps=DEFAULT_EPS, samples=10_000, store=None):
    """Capacity report for ``P_L(a, b)`` with conformality and monotonicity spot checks."""
    lo = bidisc_gromov_lower(a, b, eps, n, samples, store)
    up = bidisc_cyl_upper(a, b)
    region = bidisc(a, b, n)
    lam = 1.5
    flags = {
        "conformal": math.isclose(4 * (lam * a) * (lam * b) * (1 - eps) ** 2, lam**2 * lo.value, rel_tol=1e-12),
        "monotone": 4 * (a * 1.1) * b * (1 - eps) ** 2 >= lo.value,
    }
    return CapacityReport(
        region.to_dict(), lo.value, lo.certificate, up.value, up.method, euclidean_volume(region), volume_width_bound(region), flags
    )


def reports_to_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["region", "gromov_lower", "cyl_upper", "volume"])
    for r in reports:
        w.writerow([json.dumps(r.domain, sort_keys=True), repr(r.gromov_lower), repr(r.cyl_upper), repr(r.volume)])
    return buf.getvalue()


# -- packing examples ---------------------------------------------------------


def sphere_packing_example(n):
    """Two balls ``B^{2n}(1/sqrt(pi))`` against ``D*S^n`` with diameter 1/2.

    The balls have capacity 1 each, so their total volume ``2/n!`` should
    equal the Liouville volume of the unit disc bundle.
    """
    if n not in (1, 2, 3):
        raise ValueError("n must be 1, 2 or 3")
    sphere = RoundSphere(n, 1.0 / (2.0 * math.pi))
    balls = 2 * euclidean_volume(Region("ball", n, {"r": 1.0 / math.sqrt(math.pi)}))
    bundle = euclidean_volume(Region("disc-bundle", n, {"r": 1.0}, sphere))
    diam = sphere.diameter()
    return {
        "n": n,
        "diameter": diam,
        "balls_volume": balls,
        "bundle_volume": bundle,
        "ratio": balls / bundle,
        "four_diam": 4 * diam,
        "packing_number": 2.0,
    }


def projective_packing_example(n):
    """One ball ``B^{2n}(1/sqrt(pi))`` against ``D*RP^n`` with diameter 1/4.

    Only n = 1 is modelled (``RP^1`` is a circle of length 1/2); larger n is
    reported as not modelled.
    """
    if n != 1:
        return {"n": n, "status": "not modeled"}
    length = 0.5
    ball = euclidean_volume(Region("ball", 1, {"r": 1.0 / math.sqrt(math.pi)}))
    bundle = length * 2.0
    diam = length / 2.0
    return {"n": 1, "status": "ok", "diameter": diam, "balls_volume": ball, "bundle_volume": bundle, "ratio": ball / bundle, "four_diam": 4 * diam}


@dataclass
class AuditReport:
    pairs: int
    violations: list
    tightest_ratio: float
    skipped: int

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        d = asdict(self)
        d["pass"] = self.passed
        return d


def packing_audit(bounds, spec, slack=1e-9):
    """Check ``pi r0^2 + pi r1^2 <= 4 r d_g <= 4 r diam`` for certified ball pairs.

    `bounds` are :class:`~symplength.distance.RhoBound` objects whose lower
    side came from two equal balls of capacity ``2 * lower``.  Pairs without a
    certified lower side are skipped.  The ratio reported is the largest
    ``(pi r0^2 + pi r1^2) / (4 r d_g)`` seen.
    """
    diam, status = diameter_report(spec.model)
    r = spec.r_max
    bad, ratio, skipped, count = [], 0.0, 0, 0
    for i, b in enumerate(bounds):
        if b.lower <= 0.0 or not b.certificates:
            skipped += 1
            continue
        count += 1
        lhs = 2.0 * b.ball_capacity
        rhs = 4.0 * r * b.d_g
        if lhs > rhs + slack or (status == "exact" and rhs > 4.0 * r * diam * (1 + 1e-12)):
            bad.append(i)
        ratio = max(ratio, lhs / rhs)
    return AuditReport(count, bad, ratio, skipped)
