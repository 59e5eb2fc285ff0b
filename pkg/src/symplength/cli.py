"""Command-line runner: ``sml <command> --config FILE``.

Commands and their outputs
--------------------------
certify     certificate JSON for a named construction; exit 2 if any check fails
rho         CSV per pair: q0,q1,d_g,lower,upper,lower_source,upper_source,certificates
length      CSV: lower,upper,sum_dg,mesh for one partition of a curve
converge    CSV: k,mesh,sum_dg,lower,upper,squeeze_factor,riem_length
dw          CSV per pair: q0,q1,d_g,upper,lower_graph,certified_lower,mesh,nodes
capacities  JSON capacity reports for bi-discs plus the packing examples
audit       JSON packing-inequality audit; exit 2 on any violation

Exit codes: 0 success, 1 configuration error, 2 check failure, 3 other
library error.  SML_THREADS caps the worker threads of neighbour searches.
"""

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import capacities as cap
from .certify import CertificateStore, certify
from .config import ConfigError, ExperimentConfig, curve_from_doc
from .distance_engine import NeighborhoodSpec, chain_metric_DW, converge_length, length_rho, pairs_to_csv, rho_lower
from .expr import ExpressionError
from .manifolds import ModelError
from .symplectic import bidisc_embedding, local_ball_embedding

COMMANDS = ("certify", "rho", "length", "converge", "dw", "capacities", "audit")
DEFAULT_FORMAT = {"certify": "json", "capacities": "json", "audit": "json"}


class CheckFailure(Exception):
    def __init__(self, payload):
        self.payload = payload


def _spec(cfg, model):
    try:
        return NeighborhoodSpec.from_dict(model, cfg.get("spec", {}))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad neighbourhood spec: {exc}") from None


def _pairs(cfg, model, seed):
    if "pairs" in cfg.doc:
        pairs = [(np.asarray(a, float), np.asarray(b, float)) for a, b in cfg.get("pairs")]
    elif "q0" in cfg.doc:
        pairs = [(np.asarray(cfg.get("q0"), float), np.asarray(cfg.get("q1"), float))]
    elif "random_pairs" in cfg.doc:
        n = int(cfg.get("random_pairs"))
        pts = model.sample_points(2 * n, seed)
        pairs = list(zip(pts[:n], pts[n:]))
    else:
        raise ConfigError("need 'pairs', 'q0'/'q1' or 'random_pairs'")
    for a, b in pairs:
        model.check_point(a)
        model.check_point(b)
    return pairs


def cmd_certify(cfg, args):
    name = cfg.require("map")
    params = cfg.get("params", {})
    samples = args.samples or cfg.get("samples", 10_000)
    tol = args.tol if args.tol is not None else cfg.get("tol")
    if name == "bidisc":
        spec = bidisc_embedding(params["a"], params["b"], params.get("eps", 1e-3), params.get("n", 2))
    elif name == "local-ball":
        model = cfg.model()
        spec = local_ball_embedding(model, params["q0"], params["d"], params["rho_p"], params.get("eps", 1e-3), params.get("r", 1.0))
    else:
        raise ConfigError(f"unknown map {name!r}")
    constraints = cfg.get("checks", ["symplectic", "liouville", "containment", "relative"])
    cert = certify(spec, constraints, samples=samples, tol=tol, seed=args.seed, store=args.store)
    CertificateStore().add(cert)
    out = json.dumps(cert.to_dict(), sort_keys=True, indent=2) + "\n"
    if not cert.verdict:
        raise CheckFailure(out)
    return out


def cmd_rho(cfg, args):
    model = cfg.model()
    spec = _spec(cfg, model)
    pairs = _pairs(cfg, model, args.seed)
    samples = args.samples or cfg.get("samples", 256)
    bounds = [rho_lower(spec, a, b, cfg.get("eps", 1e-3), samples, args.store) for a, b in pairs]
    if args.format == "json":
        return json.dumps([b.to_dict() for b in bounds], sort_keys=True, indent=2) + "\n"
    return pairs_to_csv(pairs, bounds)


def cmd_length(cfg, args):
    model = cfg.model()
    spec = _spec(cfg, model)
    curve = curve_from_doc(model, cfg.require("curve"))
    if "partition" in cfg.doc:
        t = np.asarray(cfg.get("partition"), float)
    else:
        t = np.linspace(curve.a, curve.b, 2 ** int(cfg.get("k", 4)) + 1)
    s = length_rho(model, spec, curve, t, cfg.get("eps", 1e-3), args.samples or cfg.get("samples", 256), args.store)
    row = {"lower": s.lower, "upper": s.upper, "sum_dg": s.sum_dg, "mesh": s.mesh}
    if args.format == "json":
        return json.dumps(row, sort_keys=True, indent=2) + "\n"
    return "lower,upper,sum_dg,mesh\n" + ",".join(repr(row[c]) for c in ("lower", "upper", "sum_dg", "mesh")) + "\n"


def cmd_converge(cfg, args):
    model = cfg.model()
    spec = _spec(cfg, model)
    curve = curve_from_doc(model, cfg.require("curve"))
    ks = cfg.get("schedule", list(range(2, 11)))
    tab = converge_length(model, spec, curve, ks, cfg.get("eps", 1e-3), args.samples or cfg.get("samples", 256), args.store)
    out = json.dumps(tab.to_dict(), sort_keys=True, indent=2) + "\n" if args.format == "json" else tab.to_csv()
    if tab.violations():
        raise CheckFailure(out)
    return out


def cmd_dw(cfg, args):
    model = cfg.model()
    spec = _spec(cfg, model)
    pairs = _pairs(cfg, model, args.seed)
    size = int(cfg.get("graph_size", 10_000))
    res = [chain_metric_DW(model, spec, a, b, size, seed=args.seed, eps=cfg.get("eps", 1e-3)) for a, b in pairs]
    if args.format == "json":
        return json.dumps([r.to_dict() for r in res], sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q0", "q1", "d_g", "upper", "lower_graph", "certified_lower", "mesh", "nodes"])
    for (a, b), r in zip(pairs, res):
        w.writerow([json.dumps(a.tolist()), json.dumps(b.tolist()), repr(r.d_g), repr(r.upper), repr(r.lower_graph), repr(r.certified_lower), repr(r.mesh), r.nodes])
    return buf.getvalue()


def cmd_capacities(cfg, args):
    eps = cfg.get("eps", 1e-3)
    n = int(cfg.get("n", 2))
    samples = args.samples or cfg.get("samples", 10_000)
    reports = [cap.bidisc_report(a, b, n, eps, samples, args.store) for a, b in cfg.get("bidisc", [[1.0, 1.0]])]
    if args.format == "csv":
        return cap.reports_to_csv(reports)
    doc = {
        "bidisc": [r.to_dict() for r in reports],
        "sphere_examples": [cap.sphere_packing_example(k) for k in cfg.get("sphere_n", [1, 2, 3])],
        "projective_examples": [cap.projective_packing_example(k) for k in cfg.get("projective_n", [1])],
    }
    out = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if not all(r.ordered for r in reports):
        raise CheckFailure(out)
    return out


def cmd_audit(cfg, args):
    model = cfg.model()
    spec = _spec(cfg, model)
    pairs = _pairs(cfg, model, args.seed)
    samples = args.samples or cfg.get("samples", 256)
    bounds = [rho_lower(spec, a, b, cfg.get("eps", 1e-3), samples, args.store) for a, b in pairs]
    rep = cap.packing_audit(bounds, spec)
    out = json.dumps(rep.to_dict(), sort_keys=True, indent=2) + "\n"
    if not rep.passed:
        raise CheckFailure(out)
    return out


HANDLERS = {
    "certify": cmd_certify,
    "rho": cmd_rho,
    "length": cmd_length,
    "converge": cmd_converge,
    "dw": cmd_dw,
    "capacities": cmd_capacities,
    "audit": cmd_audit,
}


def build_parser():
    p = argparse.ArgumentParser(prog="sml", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="PATH", help="JSON experiment config")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples", type=int, help="override the sample count")
    p.add_argument("--tol", type=float, help="override check tolerances (certify)")
    p.add_argument("--format", choices=("csv", "json"))
    return p


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.format = args.format or DEFAULT_FORMAT.get(args.command, "csv")
    # a fresh store per invocation keeps certificate ids reproducible
    args.store = CertificateStore()
    try:
        if args.samples is not None and args.samples <= 0:
            raise ConfigError("--samples must be positive")
        if args.tol is not None and args.tol <= 0:
            raise ConfigError("--tol must be positive")
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_json(args.command, fh.read())
        out = HANDLERS[args.command](cfg, args)
    except CheckFailure as fail:
        _emit(fail.payload, args.out)
        print(f"sml {args.command}: check failed", file=sys.stderr)
        return 2
    except (ConfigError, ModelError, ExpressionError, KeyError, TypeError, OSError) as exc:
        print(f"sml {args.command}: config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"sml {args.command}: {exc}", file=sys.stderr)
        return 3
    _emit(out, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
