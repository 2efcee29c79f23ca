import json
from pathlib import Path

import pytest

from resonance.problems import KINDS, ProblemFileError, load, loads

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"
SCALAR = {"kind": "scalar", "a": "0", "f": "0", "g": "x"}


def scalar_with(**extra):
    return json.dumps({**SCALAR, **extra})


@pytest.mark.parametrize("path", sorted(PROBLEMS.glob("*.json")), ids=lambda p: p.name)
def test_shipped_problems_load(path):
    pf = load(path)
    assert pf.kind in KINDS
    builder = {
        "linear-system": pf.linear_system,
        "scalar": pf.scalar,
        "system-semilinear": pf.semilinear,
        "pendulum": pf.pendulum,
        "curve-first-order": pf.curve,
        "curve-second-order": pf.curve,
    }[pf.kind]
    assert builder() is not None


@pytest.mark.parametrize("text, where", [
    ('{"kind": "scalar", "a": "0"', "line 1, column 28"),
    ("[1]", "$"),
    ('{"kind": "nope"}', "$.kind"),
    ('{"kind": "scalar", "a": "0", "f": "0"}', "$"),
    (scalar_with(bogus=1), "$"),
    (scalar_with(g="2x"), "$.g"),
    (scalar_with(limits=[1]), "$.limits"),
    (scalar_with(period=-1), "$.period"),
    (scalar_with(tolerances={"foo": 1}), "$.tolerances"),
    (scalar_with(parameters={"nu": "a"}), "$.parameters.nu"),
])
def test_errors_carry_positions(text, where):
    with pytest.raises(ProblemFileError) as info:
        loads(text, "case.json").scalar()
    assert info.value.where == where
    assert str(info.value).startswith("case.json: ")


def test_missing_field_is_named():
    with pytest.raises(ProblemFileError, match="missing required field 'g'"):
        loads('{"kind": "scalar", "a": "0", "f": "0"}')


def test_unknown_field_is_named():
    with pytest.raises(ProblemFileError, match="bogus"):
        loads(scalar_with(bogus=1))


def test_kind_mismatch():
    with pytest.raises(ProblemFileError, match="expected kind 'linear-system'"):
        load(PROBLEMS / "scalar_atan.json").linear_system()


def test_parameter_overrides():
    pf = load(PROBLEMS / "scalar_atan.json")
    assert str(pf.with_parameters({"nu": 2.0}).scalar().f) == "2 + sin(t)"
    with pytest.raises(ProblemFileError, match="zz"):
        pf.with_parameters({"zz": 1.0})


def test_period_accepts_constant_expressions():
    pf = loads(scalar_with(period="pi"))
    assert pf.period == pytest.approx(3.141592653589793)


def test_tolerances_are_read():
    pf = loads(scalar_with(tolerances={"rank": 1e-9, "ode": 1e-11}))
    assert pf.tolerances == {"rank": 1e-9, "ode": 1e-11}


def test_tune_family_from_file():
    name, family, bracket = load(PROBLEMS / "tune_growing.json").tune_family()
    assert name == "kappa" and bracket[0] < bracket[1]
    assert family(0.0).dimension == 2


def test_scalar_file_can_feed_a_curve():
    curve = load(PROBLEMS / "scalar_atan.json").curve()
    assert curve.order == 1 and curve.a is not None


def test_missing_file():
    with pytest.raises(ProblemFileError):
        load(PROBLEMS / "does-not-exist.json")
