"""Scalar expressions used in problem files.

Coefficients such as ``a(t)``, matrix entries, forcings and nonlinearities
``g(x)`` are written as plain-text formulas and parsed into an immutable
tree::

    >>> e = parse("2*sin(t)+1", ["t"])
    >>> evaluate(e, {"t": 0.0})
    1.0
    >>> str(differentiate(parse("atan(x)", ["x"]), "x"))
    '1 / (1 + x ^ 2)'

Grammar (``^`` binds tightest and is right-associative, then unary minus,
then ``* /``, then ``+ -``)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | NAME | NAME '(' sum ')' | '(' sum ')'

There is no implicit multiplication: ``2t`` is a syntax error.

Evaluation never returns NaN or infinity silently: logarithms of
non-positive numbers, division by zero, overflow and similar failures raise
:class:`DomainError` naming the offending subexpression.  The derivative of
``abs`` is ``sign`` with ``sign(0) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ProblemError

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExpressionError",
    "ExpressionSyntaxError",
    "DomainError",
    "FUNCTIONS",
    "CONSTANTS",
    "parse",
    "evaluate",
    "differentiate",
    "substitute",
    "free_variables",
    "compile_scalar",
    "compile_array",
    "compile_vector",
    "const",
    "var",
    "add",
    "sub",
    "mul",
    "div",
    "power",
    "neg",
    "call",
]


class ExpressionError(ProblemError):
    pass


class ExpressionSyntaxError(ExpressionError):
    """Malformed input; ``position`` is the 0-based character offset."""

    def __init__(self, message: str, source: str, position: int):
        super().__init__(f"{message} at offset {position} in {source!r}")
        self.source = source
        self.position = position


class DomainError(ExpressionError, ArithmeticError):
    """Evaluation left the domain of an operation."""

    def __init__(self, message: str, subexpression: "Expression | None" = None):
        where = f" in '{subexpression}'" if subexpression is not None else ""
        super().__init__(message + where)
        self.subexpression = subexpression


# ---------------------------------------------------------------------------
# tree

FUNCTIONS = ("sin", "cos", "tan", "atan", "exp", "ln", "sqrt", "abs", "tanh", "sign")
CONSTANTS = {"pi": math.pi, "e": math.e}

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5
_BINARY_PREC = {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}


@dataclass(frozen=True)
class Const:
    value: float

    prec = _PREC_ATOM

    def __str__(self) -> str:
        v = self.value
        if v == int(v) and abs(v) < 1e15:
            text = str(int(v))
        else:
            text = repr(v)
        return f"({text})" if v < 0 or text.startswith("-") else text


@dataclass(frozen=True)
class Var:
    name: str

    prec = _PREC_ATOM

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Neg:
    arg: "Expression"

    prec = _PREC_UNARY

    def __str__(self) -> str:
        inner = str(self.arg)
        if self.arg.prec < _PREC_POW:
            inner = f"({inner})"
        return f"-{inner}"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"

    @property
    def prec(self) -> int:
        return _BINARY_PREC[self.op]

    def __str__(self) -> str:
        p = self.prec
        lhs, rhs = str(self.left), str(self.right)
        if self.op == "^":
            # right-associative; the left operand must be an atom
            if self.left.prec <= _PREC_POW:
                lhs = f"({lhs})"
            if self.right.prec < _PREC_UNARY:
                rhs = f"({rhs})"
        else:
            if self.left.prec < p:
                lhs = f"({lhs})"
            # keep the tree shape: floating-point + and * are not associative
            if self.right.prec <= p:
                rhs = f"({rhs})"
            if self.right.prec == _PREC_UNARY:
                rhs = f"({rhs})"
        return f"{lhs} {self.op} {rhs}"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expression"

    prec = _PREC_ATOM

    def __str__(self) -> str:
        return f"{self.fn}({self.arg})"


Expression = Union[Const, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------------------
# parser

def _tokenize(src: str) -> list[tuple[str, object, int]]:
    tokens: list[tuple[str, object, int]] = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and src[j].isdigit():
                j += 1
            if j < n and src[j] == ".":
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    while k < n and src[k].isdigit():
                        k += 1
                    j = k
            value = float(src[i:j])
            if not math.isfinite(value):
                raise ExpressionSyntaxError("number out of range", src, i)
            tokens.append(("num", value, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("name", src[i:j], i))
            i = j
            continue
        if ch in "+-*/^()":
            tokens.append((ch, ch, i))
            i += 1
            continue
        raise ExpressionSyntaxError(f"unexpected character {ch!r}", src, i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, src: str, variables: Iterable[str]):
        self.src = src
        self.variables = frozenset(variables)
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self) -> tuple[str, object, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, object, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: tuple[str, object, int]):
        raise ExpressionSyntaxError(message, self.src, tok[2])

    def expect(self, kind: str):
        tok = self.take()
        if tok[0] != kind:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            self.fail(f"expected {kind!r}, found {what}", tok)
        return tok

    def parse(self) -> Expression:
        tree = self.sum()
        tok = self.peek()
        if tok[0] != "end":
            self.fail(f"unexpected token {tok[1]!r}", tok)
        return tree

    def sum(self) -> Expression:
        node = self.product()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            node = BinOp(op, node, self.product())
        return node

    def product(self) -> Expression:
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.peek()[0] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return Const(value)
        if kind == "(":
            node = self.sum()
            self.expect(")")
            return node
        if kind == "name":
            name = value
            if self.peek()[0] == "(":
                if name not in FUNCTIONS:
                    self.fail(f"unknown function {name!r}", tok)
                self.take()
                arg = self.sum()
                self.expect(")")
                return Call(name, arg)
            if name in self.variables:
                return Var(name)
            if name in CONSTANTS:
                return Const(CONSTANTS[name])
            if name in FUNCTIONS:
                self.fail(f"function {name!r} needs an argument", tok)
            self.fail(f"unknown identifier {name!r}", tok)
        if kind == "end":
            self.fail("unexpected end of input", tok)
        self.fail(f"unexpected token {value!r}", tok)
        raise AssertionError("unreachable")


def parse(src: str, variables: Sequence[str] = ()) -> Expression:
    """Parse ``src`` into an expression over the declared ``variables``.

    Raises :class:`ExpressionSyntaxError` on malformed input, unknown
    identifiers and unknown functions.
    """
    if not isinstance(src, str):
        raise ExpressionError(f"expression must be a string, got {type(src).__name__}")
    for name in variables:
        if name in CONSTANTS or name in FUNCTIONS:
            raise ExpressionError(f"variable name {name!r} is reserved")
    return _Parser(src, variables).parse()


def free_variables(e: Expression) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, (Neg, Call)):
        return free_variables(e.arg)
    return free_variables(e.left) | free_variables(e.right)


# ---------------------------------------------------------------------------
# evaluation

def _sign(x: float) -> float:
    return float((x > 0) - (x < 0))


def _apply(fn: str, x: float, node: Expression) -> float:
    try:
        if fn == "sin":
            return math.sin(x)
        if fn == "cos":
            return math.cos(x)
        if fn == "tan":
            return math.tan(x)
        if fn == "atan":
            return math.atan(x)
        if fn == "exp":
            return math.exp(x)
        if fn == "ln":
            if x <= 0:
                raise DomainError(f"ln of non-positive value {x!r}", node)
            return math.log(x)
        if fn == "sqrt":
            if x < 0:
                raise DomainError(f"sqrt of negative value {x!r}", node)
            return math.sqrt(x)
        if fn == "abs":
            return abs(x)
        if fn == "tanh":
            return math.tanh(x)
        if fn == "sign":
            return _sign(x)
    except DomainError:
        raise
    except (ValueError, OverflowError) as exc:
        raise DomainError(f"{fn}({x!r}) failed: {exc}", node) from None
    raise DomainError(f"unknown function {fn!r}", node)


def _eval(e: Expression, bindings: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(bindings[e.name])
        except KeyError:
            raise ExpressionError(f"no binding for variable {e.name!r}") from None
    if isinstance(e, Neg):
        return -_eval(e.arg, bindings)
    if isinstance(e, Call):
        value = _apply(e.fn, _eval(e.arg, bindings), e)
    else:
        a = _eval(e.left, bindings)
        b = _eval(e.right, bindings)
        op = e.op
        if op == "+":
            value = a + b
        elif op == "-":
            value = a - b
        elif op == "*":
            value = a * b
        elif op == "/":
            if b == 0:
                raise DomainError("division by zero", e)
            value = a / b
        else:
            try:
                value = math.pow(a, b)
            except (ValueError, ZeroDivisionError, OverflowError):
                raise DomainError(f"{a!r} ^ {b!r} is undefined", e) from None
    if not math.isfinite(value):
        raise DomainError("non-finite result", e)
    return value


def evaluate(e: Expression, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` in double precision."""
    return _eval(e, bindings)


# ---------------------------------------------------------------------------
# compilation to Python callables

_MATH_NAMES = {
    "sin": "_m.sin", "cos": "_m.cos", "tan": "_m.tan", "atan": "_m.atan",
    "exp": "_m.exp", "ln": "_m.log", "sqrt": "_m.sqrt", "abs": "abs",
    "tanh": "_m.tanh", "sign": "_sign",
}
_NUMPY_NAMES = {
    "sin": "_np.sin", "cos": "_np.cos", "tan": "_np.tan", "atan": "_np.arctan",
    "exp": "_np.exp", "ln": "_np.log", "sqrt": "_np.sqrt", "abs": "_np.abs",
    "tanh": "_np.tanh", "sign": "_np.sign",
}


def _codegen(e: Expression, names: Mapping[str, str], fnames: Mapping[str, str], pow_name: str) -> str:
    if isinstance(e, Const):
        return f"({e.value!r})"
    if isinstance(e, Var):
        return names[e.name]
    if isinstance(e, Neg):
        return f"(-{_codegen(e.arg, names, fnames, pow_name)})"
    if isinstance(e, Call):
        return f"{fnames[e.fn]}({_codegen(e.arg, names, fnames, pow_name)})"
    a = _codegen(e.left, names, fnames, pow_name)
    b = _codegen(e.right, names, fnames, pow_name)
    if e.op == "^":
        return f"{pow_name}({a}, {b})"
    return f"({a} {e.op} {b})"


def _check_names(exprs: Sequence[Expression], variables: Sequence[str]) -> None:
    allowed = set(variables)
    for e in exprs:
        extra = free_variables(e) - allowed
        if extra:
            raise ExpressionError(f"unbound variables {sorted(extra)} in '{e}'")


def _diagnose(exprs: Sequence[Expression], variables: Sequence[str], args) -> DomainError:
    """Re-run the tree evaluator to name the failing subexpression."""
    bindings = dict(zip(variables, (float(np.asarray(a).ravel()[0]) if np.ndim(a) else float(a) for a in args)))
    for e in exprs:
        try:
            _eval(e, bindings)
        except DomainError as exc:
            return exc
    return DomainError("non-finite result", exprs[0] if len(exprs) == 1 else None)


def compile_vector(exprs: Sequence[Expression], variables: Sequence[str]) -> Callable[..., tuple]:
    """Compile several expressions into one fast scalar function.

    The returned callable takes the variables positionally as floats and
    returns a tuple of floats, raising :class:`DomainError` on failure.
    """
    exprs = list(exprs)
    _check_names(exprs, variables)
    names = {v: f"_a{i}" for i, v in enumerate(variables)}
    body = ", ".join(_codegen(e, names, _MATH_NAMES, "_m.pow") for e in exprs)
    src = f"lambda {', '.join(names.values())}: ({body}{',' if len(exprs) == 1 else ''})"
    raw = eval(src, {"_m": math, "_sign": _sign, "abs": abs})  # generated from our own tree
    isfinite = math.isfinite

    def fn(*args):
        try:
            out = raw(*args)
        except (ValueError, ZeroDivisionError, OverflowError):
            raise _diagnose(exprs, variables, args) from None
        for v in out:
            if not isfinite(v):
                raise _diagnose(exprs, variables, args)
        return out

    fn.source = src
    return fn


def compile_scalar(e: Expression, variables: Sequence[str]) -> Callable[..., float]:
    """Compile ``e`` into a function of float arguments returning a float."""
    vec = compile_vector([e], variables)

    def fn(*args):
        return vec(*args)[0]

    fn.source = vec.source
    return fn


def compile_array(e: Expression, variables: Sequence[str]) -> Callable[..., np.ndarray]:
    """Compile ``e`` into a numpy-vectorised function.

    Arguments may be arrays (broadcast together); the result always has the
    broadcast shape, constants included.
    """
    _check_names([e], variables)
    names = {v: f"_a{i}" for i, v in enumerate(variables)}
    body = _codegen(e, names, _NUMPY_NAMES, "_np.power")
    src = f"lambda {', '.join(names.values())}: {body}"
    raw = eval(src, {"_np": np})

    def fn(*args):
        arrays = [np.asarray(a, dtype=float) for a in args]
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        with np.errstate(divide="raise", invalid="raise", over="raise", under="ignore"):
            try:
                out = raw(*arrays)
            except (FloatingPointError, ZeroDivisionError, ValueError):
                out = None
        if out is None or not np.all(np.isfinite(out)):
            flat = [np.broadcast_to(a, shape).ravel() for a in arrays]
            size = int(np.prod(shape)) if shape else 1
            for k in range(size):
                point = [float(a[k]) if a.size else 0.0 for a in flat] if flat else []
                try:
                    _eval(e, dict(zip(variables, point)))
                except DomainError as exc:
                    raise exc from None
            raise DomainError("non-finite result", e)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    fn.source = src
    return fn


# ---------------------------------------------------------------------------
# construction helpers with constant folding

def const(value: float) -> Const:
    return Const(float(value))


def var(name: str) -> Var:
    return Var(name)


def _is(e: Expression, value: float) -> bool:
    return isinstance(e, Const) and e.value == value


def neg(a: Expression) -> Expression:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(b, Neg):
        return BinOp("-", a, b.arg)
    return BinOp("+", a, b)


def sub(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return Const(0.0)
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    if _is(a, 0.0) and not _is(b, 0.0):
        return Const(0.0)
    if _is(b, 1.0):
        return a
    return BinOp("/", a, b)


def power(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        try:
            return Const(math.pow(a.value, b.value))
        except (ValueError, OverflowError, ZeroDivisionError):
            return BinOp("^", a, b)
    if _is(b, 0.0):
        return Const(1.0)
    if _is(b, 1.0):
        return a
    return BinOp("^", a, b)


def call(fn: str, a: Expression) -> Expression:
    if fn not in FUNCTIONS:
        raise ExpressionError(f"unknown function {fn!r}")
    if isinstance(a, Const):
        try:
            return Const(_apply(fn, a.value, Call(fn, a)))
        except DomainError:
            pass
    return Call(fn, a)


# ---------------------------------------------------------------------------
# symbolic operations

def differentiate(e: Expression, name: str) -> Expression:
    """Exact derivative of ``e`` with respect to ``name`` (constants folded)."""
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0 if e.name == name else 0.0)
    if isinstance(e, Neg):
        return neg(differentiate(e.arg, name))
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        du, dv = differentiate(u, name), differentiate(v, name)
        if e.op == "+":
            return add(du, dv)
        if e.op == "-":
            return sub(du, dv)
        if e.op == "*":
            return add(mul(du, v), mul(u, dv))
        if e.op == "/":
            return div(sub(mul(du, v), mul(u, dv)), power(v, Const(2.0)))
        # power
        if name not in free_variables(v):
            return mul(mul(v, power(u, sub(v, Const(1.0)))), du)
        if name not in free_variables(u):
            return mul(mul(e, call("ln", u)), dv)
        return mul(e, add(mul(dv, call("ln", u)), div(mul(v, du), u)))
    u = e.arg
    du = differentiate(u, name)
    if _is(du, 0.0):
        return Const(0.0)
    fn = e.fn
    if fn == "sin":
        outer = call("cos", u)
    elif fn == "cos":
        outer = neg(call("sin", u))
    elif fn == "tan":
        outer = add(Const(1.0), power(call("tan", u), Const(2.0)))
    elif fn == "atan":
        return div(du, add(Const(1.0), power(u, Const(2.0))))
    elif fn == "exp":
        outer = call("exp", u)
    elif fn == "ln":
        return div(du, u)
    elif fn == "sqrt":
        return div(du, mul(Const(2.0), call("sqrt", u)))
    elif fn == "abs":
        outer = call("sign", u)
    elif fn == "tanh":
        outer = sub(Const(1.0), power(call("tanh", u), Const(2.0)))
    elif fn == "sign":
        return Const(0.0)
    else:
        raise ExpressionError(f"unknown function {fn!r}")
    return mul(outer, du)


def substitute(e: Expression, values: Mapping[str, "float | Expression"]) -> Expression:
    """Replace variables by constants or expressions, folding constants."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        if e.name not in values:
            return e
        v = values[e.name]
        return v if isinstance(v, (Const, Var, Neg, BinOp, Call)) else Const(float(v))
    if isinstance(e, Neg):
        return neg(substitute(e.arg, values))
    if isinstance(e, Call):
        return call(e.fn, substitute(e.arg, values))
    a, b = substitute(e.left, values), substitute(e.right, values)
    return {"+": add, "-": sub, "*": mul, "/": div, "^": power}[e.op](a, b)
