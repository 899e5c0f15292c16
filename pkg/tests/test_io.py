import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggrolab import innovations as inn
from aggrolab import mixing as mix
from aggrolab.errors import SpecError
from aggrolab.io import fmt, innovation_from_dict, mixing_from_dict, sha256_file, spec_to_dict, write_csv, write_json

SPECS = [
    mix.BetaType(1, 1.5),
    mix.CanonicalRegVar(0.3),
    mix.Farima(0.2),
    mix.Tabulated((0.0, 0.5, 0.9), (1.0, 2.0, 1.0), beta=0.5),
]
INNOV = [
    inn.Gaussian(2.0),
    inn.Stable(1.5, 0.3, 2.0),
    inn.DomainAttraction(1.2, 3.0),
    inn.IdTriplet(0.1, 0.5, inn.LevySmallJumpSpec(1.4, 1.0, 0.5, 0.8, ((1.5, 0.2),)), ((2.0, 0.3),), 1e-2),
]


@pytest.mark.parametrize("spec", SPECS, ids=repr)
def test_mixing_roundtrip(spec):
    d = json.loads(json.dumps(spec_to_dict(spec)))
    assert mixing_from_dict(d) == spec


@pytest.mark.parametrize("spec", INNOV, ids=repr)
def test_innovation_roundtrip(spec):
    d = json.loads(json.dumps(spec_to_dict(spec)))
    assert innovation_from_dict(d) == spec


def test_farima_dict_has_no_derived_constant():
    assert spec_to_dict(mix.Farima(0.2)) == {"type": "Farima", "d": 0.2}


def test_tabulated_from_csv(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0.0,1\n0.5,1\n")
    spec = mixing_from_dict({"type": "Tabulated", "csv": str(p), "beta": 0.0})
    assert spec.x == (0.0, 0.5)


@pytest.mark.parametrize(
    "bad",
    [{"type": "Nope"}, {"type": "BetaType", "p": 1}, {"type": "BetaType", "p": 1, "q": 2, "r": 3}, {"type": "BetaType", "p": 1, "q": 0.5}, []],
)
def test_bad_mixing_dicts(bad):
    with pytest.raises(SpecError):
        mixing_from_dict(bad)


def test_bad_innovation_dict():
    with pytest.raises(SpecError):
        innovation_from_dict({"type": "Stable"})


def test_writers_are_byte_stable(tmp_path):
    rows = [(1, 0.1 + 0.2), (2, np.float64(1 / 3))]
    a = write_csv(tmp_path / "a.csv", ["k", "v"], rows)
    b = write_csv(tmp_path / "b.csv", ["k", "v"], rows)
    assert sha256_file(a) == sha256_file(b)
    assert a.read_text() == "k,v\n1,0.30000000000000004\n2,0.33333333333333331\n"
    j = write_json(tmp_path / "c.json", {"b": np.arange(2), "a": np.float64(0.5), "s": mix.BetaType(1, 2)})
    assert json.loads(j.read_text()) == {"a": 0.5, "b": [0, 1], "s": {"type": "BetaType", "p": 1, "q": 2}}


@settings(max_examples=100)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips(x):
    assert float(fmt(x)) == x
