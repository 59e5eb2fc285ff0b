"""Experiment configuration documents (JSON) for the command-line runner."""

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .expr import compile_scalar, parse
from .manifolds import ModelError, load_model
from .riemannian import Curve, geodesic_curve, latitude_circle, tangent_norm


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """A command's parameters: model and neighbourhood documents plus the rest.

    The document is kept verbatim so it round-trips unchanged.
    """

    command: str
    doc: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, command, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        cfg = cls(command, doc)
        cfg.validate()
        return cfg

    def to_json(self):
        return json.dumps(self.doc, sort_keys=True, indent=2)

    def get(self, key, default=None):
        return copy.deepcopy(self.doc.get(key, default))

    def require(self, key):
        if key not in self.doc:
            raise ConfigError(f"'{self.command}' config needs '{key}'")
        return self.get(key)

    def validate(self):
        for key in ("tol", "eps"):
            if key in self.doc:
                val = self.doc[key]
                vals = val.values() if isinstance(val, dict) else [val]
                if any(not isinstance(v, (int, float)) or v <= 0 for v in vals):
                    raise ConfigError(f"'{key}' must be positive")
        if "schedule" in self.doc:
            s = self.doc["schedule"]
            if not isinstance(s, list) or not s or any(not isinstance(k, int) for k in s):
                raise ConfigError("'schedule' must be a list of integers")
            if any(b <= a for a, b in zip(s[:-1], s[1:])):
                raise ConfigError("'schedule' must be strictly increasing")
        if "samples" in self.doc and (not isinstance(self.doc["samples"], int) or self.doc["samples"] <= 0):
            raise ConfigError("'samples' must be a positive integer")

    def model(self):
        try:
            return load_model(self.require("model"))
        except ModelError as exc:
            raise ConfigError(str(exc)) from None


def curve_from_doc(model, doc):
    """Curves: geodesic ``{q, v}`` (optionally ``length`` to rescale v),
    latitude ``{colatitude}`` on a sphere, or expression ``{coords, a, b}``
    with one formula in ``t`` per coordinate."""
    kind = doc.get("kind")
    if kind == "geodesic":
        q = np.asarray(doc["q"], float)
        v = np.asarray(doc["v"], float)
        if "length" in doc:
            v = v * (float(doc["length"]) / float(tangent_norm(model, q, v)))
        return geodesic_curve(model, q, v)
    if kind == "latitude":
        return latitude_circle(model, float(doc["colatitude"]))
    if kind == "expression":
        coords = doc["coords"]
        if len(coords) != model.dim:
            raise ConfigError(f"expression curve needs {model.dim} coordinates")
        fns = [compile_scalar(parse(c, ("t",)), ("t",)) for c in coords]

        def pos(t):
            return np.stack([f(np.asarray(t, float)) for f in fns], axis=-1)

        return Curve(pos, None, float(doc.get("a", 0.0)), float(doc.get("b", 1.0)), label="expression")
    raise ConfigError(f"unknown curve kind {kind!r}")
