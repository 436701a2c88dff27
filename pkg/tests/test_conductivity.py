import json
import math

import pytest

from radial_born.conductivity import ConductivitySpec, example_family, spec_from_json, spec_to_json
from radial_born.errors import EllipticityError, SchemaError
from radial_born.profiles import Constant, PowerSum


def test_from_profile_derives_bounds():
    spec = ConductivitySpec.from_profile(PowerSum(3, [(2.0, 0.0), (-1.0, 2.0)]))
    assert spec.K >= 2.0 and math.isinf(spec.p)
    assert spec.N > 0


def test_ellipticity_is_checked():
    with pytest.raises(EllipticityError):
        ConductivitySpec(3, PowerSum(3, [(1.0, 0.0), (3.0, 2.0)]), K=2.0)


def test_integrability_exponent_must_exceed_half_dimension():
    with pytest.raises(ValueError):
        ConductivitySpec(4, Constant(4), K=2.0, p=2.0)


def test_round_trip_json():
    spec, _ = example_family(3, 1, 3)
    again = spec_from_json(spec_to_json(spec))
    assert again.d == 3 and again.profile(0.3) == pytest.approx(spec.profile(0.3))


def test_piecewise_and_samples_families():
    pw = spec_from_json({"d": 2, "family": {"name": "piecewise", "breaks": [0, 0.5, 1],
                                            "coeffs": [[2.0], [2.0]]}})
    assert pw.profile(0.7) == 2.0
    sm = spec_from_json({"d": 3, "family": {"name": "samples", "r": [0, 0.25, 0.5, 0.75, 1],
                                            "values": [1, 1, 1, 1, 1]}})
    assert sm.profile(0.6) == pytest.approx(1.0)


def test_syntax_error_reports_line():
    with pytest.raises(SchemaError, match="line 2"):
        spec_from_json('{"d": 3,\n "family": }')


def test_structure_error_reports_field():
    with pytest.raises(SchemaError, match="family"):
        spec_from_json(json.dumps({"d": 3, "family": {"name": "example", "mu": 1}}))


def test_dimension_must_be_integer():
    with pytest.raises(SchemaError, match="d"):
        spec_from_json({"d": 2.5, "family": {"name": "example", "mu": 1, "nu": 1}})


def test_string_infinity_for_p():
    spec = spec_from_json({"d": 3, "p": "inf", "family": {"name": "example", "mu": 1, "nu": 3}})
    assert math.isinf(spec.p)
