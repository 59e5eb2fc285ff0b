"""Sampled numerical certificates for symplectic embeddings.

Every check returns a :class:`CheckResult` that records the worst violation
seen, whether or not it passed.  :func:`certify` bundles checks into an
:class:`EmbeddingCertificate`.
"""

import itertools
import json
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ._sampling import DEFAULT_SEED
from .manifolds import ModelError
from .riemannian import distance
from .symplectic import standard_form

DEFAULT_TOLERANCES = {
    "symplectic": 1e-8,
    "liouville": 1e-8,
    "containment": 0.0,
    "relative": 1e-10,
    "disjoint": 0.0,
}
# finite-difference Jacobians cannot reach the analytic tolerance
FD_TOLERANCE = 1e-6
BATCH = 4096


@dataclass
class CheckResult:
    name: str
    samples: int
    tol: float
    worst: float
    passed: bool
    skipped: int = 0
    witness: list = None
    note: str = ""

    def to_dict(self):
        d = {"name": self.name, "samples": self.samples, "tol": self.tol, "worst": self.worst, "pass": self.passed}
        if self.skipped:
            d["skipped"] = self.skipped
        if self.witness is not None:
            d["witness"] = self.witness
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class EmbeddingCertificate:
    map: str
    params: dict
    checks: list
    shrink: float = None
    flags: list = field(default_factory=list)
    id: str = None

    @property
    def verdict(self):
        return all(c.passed for c in self.checks)

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        d = {"map": self.map, "params": self.params, "checks": [c.to_dict() for c in self.checks]}
        d["eps"] = self.shrink
        d["verdict"] = "pass" if self.verdict else "fail"
        if self.flags:
            d["flags"] = list(self.flags)
        if self.id is not None:
            d["id"] = self.id
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


class CertificateStore:
    """Append-only registry handing out unique certificate ids."""

    def __init__(self):
        self._items = {}
        self._lock = threading.Lock()
        self._counter = itertools.count(1)
        self.memo = {}  # construction key -> certificate, reused across calls

    def add(self, cert):
        with self._lock:
            cid = f"cert-{next(self._counter):06d}"
            cert.id = cid
            self._items[cid] = cert
        return cid

    def __getitem__(self, cid):
        return self._items[cid]

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items.values())

    def to_dict(self):
        return {cid: c.to_dict() for cid, c in self._items.items()}


# -- helpers ------------------------------------------------------------------


def _tol(spec, name, tol):
    if tol is not None:
        return float(tol)
    if name in ("symplectic", "liouville") and spec.finite_difference:
        return FD_TOLERANCE
    return DEFAULT_TOLERANCES[name]


def _batched(fn, X):
    """Evaluate fn on batches; rows where the map leaves its chart become NaN."""
    out, skipped = [], 0
    for lo in range(0, len(X), BATCH):
        chunk = X[lo : lo + BATCH]
        try:
            out.append(fn(chunk))
        except ModelError:
            # retry pointwise to isolate the offending samples
            rows = []
            for x in chunk:
                try:
                    rows.append(fn(x[None])[0])
                except ModelError:
                    rows.append(None)
                    skipped += 1
            shape = next((r.shape for r in rows if r is not None), None)
            if shape is None:
                out.append(np.full((len(chunk),) + (1,), np.nan))
                continue
            out.append(np.stack([np.full(shape, np.nan) if r is None else r for r in rows]))
    return np.concatenate(out), skipped


def _result(name, samples, tol, values, X, upper=True):
    """Worst value over finite samples; pass iff worst <= tol."""
    values = np.asarray(values, float)
    finite = np.isfinite(values)
    skipped = int((~finite).sum())
    if not finite.any():
        return CheckResult(name, samples, tol, float("nan"), False, skipped, note="no valid samples")
    i = int(np.nanargmax(np.where(finite, values, -np.inf)))
    worst = float(values[i])
    # samples the map could not evaluate leave the check unproven
    passed = worst <= tol and skipped == 0
    witness = None if passed else np.asarray(X[i]).tolist()
    note = f"{skipped} samples left the chart" if skipped else ""
    return CheckResult(name, samples, tol, worst, passed, skipped, witness, note)


# -- individual checks --------------------------------------------------------


def check_symplectic(spec, samples=10_000, tol=None, seed=DEFAULT_SEED):
    """``max |J^T Omega J - Omega|_F`` over Sobol samples of the domain."""
    tol = _tol(spec, "symplectic", tol)
    X = spec.domain.sample(samples, seed)
    J, _ = _batched(spec.jac, X)
    O = standard_form(spec.n)
    dev = np.linalg.norm(np.swapaxes(J, -1, -2) @ O @ J - O, axis=(-2, -1))
    return _result("symplectic", samples, tol, dev, X)


def check_liouville(spec, samples=10_000, tol=None, seed=DEFAULT_SEED):
    """``max |J^T lambda(e(x)) - lambda(x)|`` with ``lambda(q, p) = (p, 0)``."""
    tol = _tol(spec, "liouville", tol)
    n = spec.n
    X = spec.domain.sample(samples, seed)
    J, _ = _batched(spec.jac, X)
    Y, _ = _batched(spec.mapping, X)
    pulled = np.einsum("...ij,...i->...j", J[..., :n, :], Y[..., n:])
    own = np.concatenate([X[..., n:], np.zeros_like(X[..., n:])], axis=-1)
    dev = np.linalg.norm(pulled - own, axis=-1)
    return _result("liouville", samples, tol, dev, X)


def check_containment(spec, samples=10_000, margin=0.0, seed=DEFAULT_SEED):
    """Image of interior and boundary samples lies in the target.

    ``worst`` is ``margin - min target margin``: negative means slack.
    """
    X = np.concatenate([spec.domain.sample(samples, seed), spec.domain.sample_boundary(samples // 4 or 1, seed + 5)])
    Y, _ = _batched(spec.mapping, X)
    viol = margin - spec.target.margin(Y)
    res = _result("containment", len(X), 0.0, viol, X)
    # an open target needs strict slack
    res.passed = res.passed and res.worst < 0.0
    return res


def _center_offset(spec, Q):
    c = np.asarray(spec.center, float)
    if spec.model is not None:
        return np.linalg.norm(spec.model.chart_step(np.broadcast_to(c, Q.shape), Q), axis=-1)
    return np.linalg.norm(Q - c, axis=-1)


def check_relative_boundary(spec, samples=10_000, tol=None, seed=DEFAULT_SEED):
    """Real part maps to the zero section, imaginary part to the fiber over the center."""
    tol = _tol(spec, "relative", tol)
    n = spec.n
    X = spec.domain.sample(samples, seed)
    real = X.copy()
    real[..., n:] = 0.0
    imag = X.copy()
    imag[..., :n] = 0.0
    Yr, _ = _batched(spec.mapping, real)
    Yi, _ = _batched(spec.mapping, imag)
    dev = np.concatenate([np.linalg.norm(Yr[..., n:], axis=-1), _center_offset(spec, Yi[..., :n])])
    return _result("relative", 2 * samples, tol, dev, np.concatenate([real, imag]))


def _geometric_disjoint(a, b):
    d = distance(a.model, a.center, b.center)
    return (a.base_radius + b.base_radius) - float(d)


def check_disjoint(a, b, samples=4096, margin=None, seed=DEFAULT_SEED):
    """Disjoint images of two maps.

    When both maps carry a model, a center and a base radius, disjointness of
    the closed base tubes is decided geometrically: ``worst`` is the radius
    sum minus the center distance and must be negative.  Otherwise the sampled
    images must stay further apart than the Lipschitz margin
    ``L_a h_a + L_b h_b`` (max Jacobian norm times sample mesh).
    """
    geometric = all(m.model is not None and m.center is not None and m.base_radius is not None for m in (a, b))
    if geometric and a.model is b.model:
        worst = _geometric_disjoint(a, b)
        return CheckResult("disjoint", 1, 0.0, worst, worst < 0.0, note="base tubes")
    Xa, Xb = a.domain.sample(samples, seed), b.domain.sample(samples, seed + 17)
    Ya, _ = _batched(a.mapping, Xa)
    Yb, _ = _batched(b.mapping, Xb)
    gap = float(cKDTree(Yb).query(Ya)[0].min())
    if margin is None:
        margin = 0.0
        for spec, X in ((a, Xa), (b, Xb)):
            J, _ = _batched(spec.jac, X)
            L = float(np.nanmax(np.linalg.norm(J, ord=2, axis=(-2, -1))))
            probes = spec.domain.sample(1024, seed + 31)
            mesh = float(cKDTree(X).query(probes)[0].max())
            margin += L * mesh
    worst = margin - gap
    return CheckResult("disjoint", 2 * samples, 0.0, worst, worst < 0.0, note="sampled, Lipschitz margin")


ALL_CHECKS = ("symplectic", "liouville", "containment", "relative")


def certify(spec, constraints=ALL_CHECKS, samples=10_000, tol=None, others=(), seed=DEFAULT_SEED, store=None):
    """Run the requested checks and aggregate them into a certificate.

    `tol` is either a number applied to every tolerance-based check or a
    mapping from check name to tolerance.  `others` are maps the image must
    avoid; each adds a ``disjoint`` check.
    """
    tols = tol if isinstance(tol, dict) else {name: tol for name in DEFAULT_TOLERANCES}
    checks = []
    for name in constraints:
        if name == "symplectic":
            checks.append(check_symplectic(spec, samples, tols.get(name), seed))
        elif name == "liouville":
            checks.append(check_liouville(spec, samples, tols.get(name), seed))
        elif name == "containment":
            checks.append(check_containment(spec, samples, seed=seed))
        elif name == "relative":
            checks.append(check_relative_boundary(spec, samples, tols.get(name), seed))
        elif name == "disjoint":
            continue
        else:
            raise ValueError(f"unknown check {name!r}")
    for other in others:
        checks.append(check_disjoint(spec, other, min(samples, 4096), seed=seed))
    flags = [] if checks else ["no checks"]
    cert = EmbeddingCertificate(spec.name, dict(spec.params), checks, spec.shrink, flags)
    if store is not None:
        store.add(cert)
    return cert


#: registry used by the engine when no store is passed explicitly
DEFAULT_STORE = CertificateStore()


def certificate_from_dict(doc):
    checks = [
        CheckResult(c["name"], c["samples"], c["tol"], c["worst"], c["pass"], c.get("skipped", 0), c.get("witness"), c.get("note", ""))
        for c in doc["checks"]
    ]
    return EmbeddingCertificate(doc["map"], doc["params"], checks, doc.get("eps"), doc.get("flags", []), doc.get("id"))
