"""Declarative conductivity descriptions and their JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .errors import EllipticityError, SchemaError
from .profiles import (
    ExampleConductivity,
    PiecewisePolynomial,
    PowerSum,
    RadialProfile,
    SampledProfile,
    default_grid,
    norm_sobolev,
)

__all__ = ["ConductivitySpec", "example_family", "spec_from_json", "spec_to_json", "load_spec",
           "profile_from_family", "SPEC_SCHEMA"]

SPEC_SCHEMA = {
    "type": "object",
    "required": ["d", "family"],
    "properties": {
        "d": {"type": "integer", "minimum": 2},
        "K": {"type": "number", "exclusiveMinimum": 1},
        "N": {"type": "number", "exclusiveMinimum": 0},
        "p": {"anyOf": [{"type": "number", "exclusiveMinimum": 0}, {"const": "inf"}]},
        "family": {
            "type": "object",
            "required": ["name"],
            "oneOf": [
                {
                    "properties": {
                        "name": {"const": "example"},
                        "mu": {"type": "number", "exclusiveMinimum": 0},
                        "nu": {"type": "number", "minimum": 0},
                    },
                    "required": ["mu", "nu"],
                },
                {
                    "properties": {
                        "name": {"const": "piecewise"},
                        "breaks": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                        "coeffs": {
                            "type": "array",
                            "items": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                        },
                    },
                    "required": ["breaks", "coeffs"],
                },
                {
                    "properties": {
                        "name": {"const": "samples"},
                        "r": {"type": "array", "items": {"type": "number"}, "minItems": 5},
                        "values": {"type": "array", "items": {"type": "number"}, "minItems": 5},
                    },
                    "required": ["r", "values"],
                },
            ],
        },
    },
}

_VERIFY_GRID = np.concatenate([[0.0], default_grid(512)])


@dataclass(frozen=True)
class ConductivitySpec:
    """Radial conductivity with ellipticity bound ``K`` and Sobolev budget ``N``.

    ``p`` is the integrability exponent of the declared ``W^{2,p}`` bound and
    must exceed ``d/2``. ``family`` keeps the JSON description when the object
    was built from one.
    """

    d: int
    profile: RadialProfile
    K: float
    N: float = math.inf
    p: float = math.inf
    family: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.profile.d != self.d:
            raise ValueError("profile dimension does not match d")
        if not self.p > self.d / 2:
            raise ValueError("integrability exponent must exceed d/2")
        if not self.K > 1:
            raise ValueError("ellipticity bound K must exceed 1")
        vals = self.profile(_VERIFY_GRID)
        lo, hi = float(np.min(vals)), float(np.max(vals))
        if lo <= 0 or lo < 1.0 / self.K or hi > self.K:
            raise EllipticityError(
                f"conductivity range [{lo:.6g}, {hi:.6g}] leaves [1/K, K] with K={self.K:g}")

    @property
    def gamma(self) -> RadialProfile:
        return self.profile

    @classmethod
    def from_profile(cls, profile: RadialProfile, K: float | None = None, N: float | None = None,
                     p: float = math.inf, family: dict | None = None) -> "ConductivitySpec":
        """Build a spec, deriving ``K`` and ``N`` from the profile when omitted."""
        if K is None:
            vals = profile(_VERIFY_GRID)
            if np.min(vals) <= 0:
                raise EllipticityError("conductivity is not positive")
            K = 1.01 * max(float(np.max(vals)), 1.0 / float(np.min(vals)), 1.0)
        if N is None:
            N = norm_sobolev(profile, 2, p)
        return cls(profile.d, profile, float(K), float(N), p, dict(family or {}))


def example_family(d: int, mu: float, nu: float):
    """Example conductivity and its closed-form Born approximation.

    Returns
    -------
    spec : ConductivitySpec
    born : PowerSum
        Logarithmic when ``nu = 0`` (then ``d >= 3``), otherwise a
        constant plus a multiple of ``r^(2 nu)``.

    Raises
    ------
    DegenerateFamilyError
        For ``d = 2`` and ``nu = 0``.
    """
    gamma = ExampleConductivity(d, mu, nu)
    fam = {"name": "example", "mu": float(mu), "nu": float(nu)}
    return ConductivitySpec.from_profile(gamma, family=fam), gamma.born()


def profile_from_family(d: int, fam: dict) -> RadialProfile:
    """Profile described by a validated ``family`` object."""
    name = fam["name"]
    if name == "example":
        return ExampleConductivity(d, fam["mu"], fam["nu"])
    if name == "piecewise":
        if len(fam["breaks"]) == 2 and len(fam["coeffs"]) == 1:
            return PowerSum(d, [(c, float(j)) for j, c in enumerate(fam["coeffs"][0])])
        return PiecewisePolynomial(d, fam["breaks"], fam["coeffs"])
    return SampledProfile(d, fam["r"], fam["values"])


def spec_from_json(doc) -> ConductivitySpec:
    """Parse a spec from a JSON string or an already decoded mapping.

    Raises
    ------
    SchemaError
        With the offending line (syntax) or field path (structure).
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") \
                from None
    try:
        jsonschema.validate(doc, SPEC_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"field {where}: {exc.message}") from None
    d = int(doc["d"])
    p = doc.get("p", "inf")
    p = math.inf if p == "inf" else float(p)
    try:
        profile = profile_from_family(d, doc["family"])
        return ConductivitySpec.from_profile(profile, doc.get("K"), doc.get("N"), p,
                                             family=doc["family"])
    except (ValueError, TypeError) as exc:
        if isinstance(exc, EllipticityError):
            raise
        raise SchemaError(f"field family: {exc}") from None


def spec_to_json(spec: ConductivitySpec) -> str:
    """Serialize a spec that was built from a family description."""
    if not spec.family:
        raise ValueError("spec has no serializable family description")
    doc = {"d": spec.d, "family": spec.family, "K": spec.K, "N": spec.N,
           "p": "inf" if math.isinf(spec.p) else spec.p}
    return json.dumps(doc, sort_keys=True, indent=2)


def load_spec(path) -> ConductivitySpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_json(fh.read())
