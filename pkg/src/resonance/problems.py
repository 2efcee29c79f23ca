"""JSON problem files.

A problem file is one JSON object with a ``kind`` and kind-specific fields.
Expressions are strings over ``t`` (coefficients and forcing terms), ``x``
(scalar nonlinearities) or ``x1..xn`` (system nonlinearities) and may use
any name declared under ``parameters``.  ``period`` is a number or a
constant expression such as ``"2*pi"``.

Fields common to every kind::

    kind         one of KINDS
    period       number or expression (default 2*pi)
    parameters   {name: number}; overridden by --param name=value
    tolerances   {"rank": number, "ode": number}
    description  free text

Kind-specific fields are listed in ``SCHEMA``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

from . import expr as ex
from .curves import CurveProblem
from .errors import ProblemError
from .linear import PeriodicSystem
from .pendulum import PendulumProblem
from .scalar import ScalarProblem
from .semilinear import SystemProblem

__all__ = ["KINDS", "SCHEMA", "ProblemFileError", "ProblemFile", "load", "loads"]

COMMON = {"kind", "period", "parameters", "tolerances", "description"}

# kind -> (required fields, optional fields)
SCHEMA: dict[str, tuple[set[str], set[str]]] = {
    "linear-system": (set(), {"matrix", "A", "forcing", "tune", "x0"}),
    "scalar": ({"a", "f", "g"}, {"limits", "increasing"}),
    "system-semilinear": ({"A", "f", "alpha", "beta"}, {"g"}),
    "pendulum": ({"lambda", "g", "e", "mu"}, {"bound", "limits"}),
    "curve-first-order": ({"g", "e"}, {"a"}),
    "curve-second-order": ({"lambda", "g", "e"}, set()),
}
KINDS = tuple(SCHEMA)


class ProblemFileError(ProblemError):
    """Malformed problem file; ``where`` locates the offending field."""

    def __init__(self, message: str, where: str = "", source: str = ""):
        self.where = where
        self.source = source
        self.detail = message
        prefix = f"{source}: " if source else ""
        loc = f"{where}: " if where else ""
        super().__init__(f"{prefix}{loc}{message}")


def _number(value: Any, where: str, params: Mapping[str, float] = {}) -> float:
    if isinstance(value, bool):
        raise ProblemFileError("expected a number", where)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            tree = ex.parse(value, list(params))
            return float(ex.evaluate(tree, dict(params)))
        except ex.ExpressionError as exc:
            raise ProblemFileError(str(exc), where) from None
    raise ProblemFileError("expected a number or a constant expression", where)


def _string(value: Any, where: str) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise ProblemFileError("expected an expression string", where)
    return str(value)


def _list(value: Any, where: str, length: int | None = None) -> list:
    if not isinstance(value, list):
        raise ProblemFileError("expected a list", where)
    if length is not None and len(value) != length:
        raise ProblemFileError(f"expected {length} entries, got {len(value)}", where)
    return value


def _check_expr(src: str, variables: list[str], where: str) -> str:
    try:
        ex.parse(src, variables)
    except ex.ExpressionError as exc:
        raise ProblemFileError(str(exc), where) from None
    return src


@dataclass(frozen=True)
class ProblemFile:
    kind: str
    data: dict  # validated copy of ``raw`` with numeric fields evaluated
    parameters: dict[str, float]
    period: float
    tolerances: dict[str, float] = field(default_factory=dict)
    source: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def with_parameters(self, overrides: Mapping[str, float]) -> "ProblemFile":
        unknown = set(overrides) - set(self.parameters)
        if unknown:
            raise ProblemFileError(f"unknown parameter(s) {sorted(unknown)}", "$.parameters", self.source)
        return _interpret(self.raw, self.source, {**self.parameters, **overrides})

    # builders ---------------------------------------------------------------

    def linear_system(self, params: Mapping[str, float] | None = None) -> PeriodicSystem:
        self._expect("linear-system")
        p = dict(self.parameters if params is None else params)
        d = self.data
        negated = "A" in d
        matrix = d["A"] if negated else d["matrix"]
        period = self.period if params is None else _period(d, p)
        return PeriodicSystem.from_strings(matrix, d.get("forcing"), period, p, negated=negated)

    def tune_family(self) -> tuple[str, Callable[[float], PeriodicSystem], tuple[float, float]]:
        self._expect("linear-system")
        spec = self.data.get("tune")
        if spec is None:
            raise ProblemFileError("no 'tune' section", "$", self.source)
        name = spec["parameter"]

        def family(value: float) -> PeriodicSystem:
            return self.linear_system({**self.parameters, name: value})

        return name, family, (float(spec["bracket"][0]), float(spec["bracket"][1]))

    def scalar(self) -> ScalarProblem:
        self._expect("scalar")
        d = self.data
        lo, hi = d.get("limits", (None, None))
        return ScalarProblem.from_strings(d["a"], d["f"], d["g"], self.period, lo, hi,
                                          bool(d.get("increasing", False)), self.parameters)

    def semilinear(self) -> SystemProblem:
        self._expect("system-semilinear")
        d = self.data
        return SystemProblem.from_strings(d["A"], d["f"], d["alpha"], d["beta"], d.get("g"),
                                          self.period, self.parameters)

    def pendulum(self) -> PendulumProblem:
        self._expect("pendulum")
        d = self.data
        lo, hi = d.get("limits", (None, None))
        return PendulumProblem.from_strings(d["lambda"], d["g"], d["e"], d["mu"], self.period,
                                            d.get("bound"), lo, hi, self.parameters)

    def curve(self) -> CurveProblem:
        """Curve problem for curve kinds, and for scalar or pendulum files."""
        d = self.data
        if self.kind == "scalar":
            return CurveProblem.from_scalar(self.scalar())
        if self.kind == "pendulum":
            return CurveProblem.from_pendulum(self.pendulum())
        if self.kind == "curve-first-order":
            return CurveProblem.first_order(d["g"], d["e"], self.period, d.get("a"), self.parameters)
        if self.kind == "curve-second-order":
            return CurveProblem.second_order(d["g"], d["e"], d["lambda"], self.period, self.parameters)
        raise ProblemFileError(f"kind '{self.kind}' has no solution curve", "$.kind", self.source)

    def _expect(self, kind: str) -> None:
        if self.kind != kind:
            raise ProblemFileError(f"expected kind '{kind}', file has '{self.kind}'", "$.kind", self.source)


def _period(data: dict, params: Mapping[str, float]) -> float:
    period = _number(data.get("period", 2 * math.pi), "$.period", params)
    if not (period > 0 and math.isfinite(period)):
        raise ProblemFileError("period must be positive", "$.period")
    return period


def _validate(kind: str, d: dict, params: Mapping[str, float]) -> None:
    names = list(params)
    required, optional = SCHEMA[kind]
    for key in required:
        if key not in d:
            raise ProblemFileError(f"missing required field '{key}'", "$")
    unknown = set(d) - required - optional - COMMON
    if unknown:
        raise ProblemFileError(f"unknown field(s) {sorted(unknown)}", "$")

    def matrix(key: str) -> int:
        rows = _list(d[key], f"$.{key}")
        n = len(rows)
        if n == 0:
            raise ProblemFileError("matrix is empty", f"$.{key}")
        for i, row in enumerate(rows):
            for j, c in enumerate(_list(row, f"$.{key}[{i}]", n)):
                _check_expr(_string(c, f"$.{key}[{i}][{j}]"), ["t"] + names, f"$.{key}[{i}][{j}]")
        return n

    def vector(key: str, n: int, variables: list[str]) -> None:
        for i, c in enumerate(_list(d[key], f"$.{key}", n)):
            _check_expr(_string(c, f"$.{key}[{i}]"), variables + names, f"$.{key}[{i}]")

    def scalar_expr(key: str, var: str) -> None:
        _check_expr(_string(d[key], f"$.{key}"), [var] + names, f"$.{key}")

    def limits() -> None:
        if "limits" in d:
            lo, hi = (_number(v, f"$.limits[{i}]", params) for i, v in enumerate(_list(d["limits"], "$.limits", 2)))
            d["limits"] = [lo, hi]

    if kind == "linear-system":
        if ("matrix" in d) == ("A" in d):
            raise ProblemFileError("give exactly one of 'matrix' (x' = M x + q) or 'A' (x' + A x = q)", "$")
        n = matrix("A" if "A" in d else "matrix")
        if "forcing" in d:
            vector("forcing", n, ["t"])
        if "x0" in d:
            d["x0"] = [_number(v, f"$.x0[{i}]", params) for i, v in enumerate(_list(d["x0"], "$.x0", n))]
        if "tune" in d:
            t = d["tune"]
            if not isinstance(t, dict) or set(t) != {"parameter", "bracket"}:
                raise ProblemFileError("expected {'parameter': name, 'bracket': [lo, hi]}", "$.tune")
            if t["parameter"] not in params:
                raise ProblemFileError(f"'{t['parameter']}' is not a declared parameter", "$.tune.parameter")
            t["bracket"] = [_number(v, f"$.tune.bracket[{i}]", params)
                            for i, v in enumerate(_list(t["bracket"], "$.tune.bracket", 2))]
    elif kind == "scalar":
        scalar_expr("a", "t")
        scalar_expr("f", "t")
        scalar_expr("g", "x")
        limits()
        if "increasing" in d and not isinstance(d["increasing"], bool):
            raise ProblemFileError("expected true or false", "$.increasing")
    elif kind == "system-semilinear":
        n = matrix("A")
        vector("f", n, [f"x{i + 1}" for i in range(n)])
        if "g" in d:
            vector("g", n, ["t"])
        for key in ("alpha", "beta"):
            d[key] = [_number(v, f"$.{key}[{i}]", params) for i, v in enumerate(_list(d[key], f"$.{key}", n))]
    elif kind == "pendulum":
        scalar_expr("g", "x")
        scalar_expr("e", "t")
        d["lambda"] = _number(d["lambda"], "$.lambda", params)
        d["mu"] = _number(d["mu"], "$.mu", params)
        if "bound" in d:
            d["bound"] = _number(d["bound"], "$.bound", params)
        limits()
    elif kind == "curve-first-order":
        scalar_expr("g", "x")
        scalar_expr("e", "t")
        if "a" in d:
            scalar_expr("a", "t")
    elif kind == "curve-second-order":
        scalar_expr("g", "x")
        scalar_expr("e", "t")
        d["lambda"] = _number(d["lambda"], "$.lambda", params)


def _interpret(raw: Any, source: str, params: Mapping[str, float] | None = None) -> ProblemFile:
    try:
        if not isinstance(raw, dict):
            raise ProblemFileError("top level must be a JSON object", "$")
        d = json.loads(json.dumps(raw))
        kind = d.get("kind")
        if kind not in SCHEMA:
            raise ProblemFileError(f"'kind' must be one of {', '.join(KINDS)}", "$.kind")
        declared = d.get("parameters", {})
        if not isinstance(declared, dict):
            raise ProblemFileError("expected an object of name: number", "$.parameters")
        base = {}
        for k, v in declared.items():
            if not k.isidentifier() or k in ex.FUNCTIONS or k in ex.CONSTANTS or k in ("t", "x"):
                raise ProblemFileError(f"'{k}' cannot be a parameter name", f"$.parameters.{k}")
            base[k] = _number(v, f"$.parameters.{k}")
        params = dict(base if params is None else params)
        tolerances = d.get("tolerances", {})
        if not isinstance(tolerances, dict) or set(tolerances) - {"rank", "ode"}:
            raise ProblemFileError("only 'rank' and 'ode' may be given", "$.tolerances")
        tol = {k: _number(v, f"$.tolerances.{k}") for k, v in tolerances.items()}
        _validate(kind, d, params)
        period = _period(d, params)
    except ProblemFileError as exc:
        raise ProblemFileError(exc.detail, exc.where, source) from None
    return ProblemFile(kind, d, params, period, tol, source, raw)


def loads(text: str, source: str = "<string>") -> ProblemFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"invalid JSON: {exc.msg}", f"line {exc.lineno}, column {exc.colno}",
                               source) from None
    return _interpret(raw, source)


def load(path: str | Path) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFileError(f"cannot read file: {exc.strerror}", "", str(path)) from None
    return loads(text, str(path))
