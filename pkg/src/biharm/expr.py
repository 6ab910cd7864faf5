"""Scalar-field expressions over the coordinates of R^{m+1}.

Grammar (ASCII operators, whitespace ignored)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-'? power
    power  := atom ('^' factor)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

Identifiers that name a coordinate become :class:`Var` nodes; any other
identifier is a :class:`Param` resolved at evaluation time. Numeric
literals are always non-negative; a negative constant is ``Neg(Num(c))``.

Trees are immutable and hash structurally, so they can be used as dict
keys (the compiler relies on this for common-subexpression elimination).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping

from .errors import (
    DomainError,
    ExprSyntaxError,
    UnboundParameterError,
    UnknownFunctionError,
)

FUNCTIONS = ("sqrt", "exp", "ln", "sin", "cos")

ParameterBinding = Mapping[str, float]

_ADD, _MUL, _NEG, _POW, _ATOM = 1, 2, 3, 4, 5


# ---------------------------------------------------------------------------
# coordinates


@dataclass(frozen=True)
class CoordinateSystem:
    """Ambient coordinates ``x1..xm, z`` of R^{m+1} (indices 0..m)."""

    m: int
    names: tuple = ()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("hypersurface dimension m must be >= 1")
        if not self.names:
            names = tuple(f"x{i + 1}" for i in range(self.m)) + ("z",)
            object.__setattr__(self, "names", names)
        if len(self.names) != self.m + 1:
            raise ValueError("need exactly m+1 coordinate names")
        if len(set(self.names)) != len(self.names):
            raise ValueError("coordinate names must be unique")

    @property
    def n(self):
        return self.m + 1

    def index(self, name):
        return self.names.index(name)

    def var(self, name):
        return Var(self.index(name), name)


@dataclass(frozen=True)
class ChartCoordinates:
    """Parameters ``u1..um`` of a hypersurface chart."""

    m: int
    names: tuple = ()

    def __post_init__(self):
        if not self.names:
            object.__setattr__(self, "names", tuple(f"u{i + 1}" for i in range(self.m)))
        if len(self.names) != self.m or len(set(self.names)) != self.m:
            raise ValueError("need m unique chart parameter names")

    @property
    def n(self):
        return self.m

    def index(self, name):
        return self.names.index(name)

    def var(self, name):
        return Var(self.index(name), name)


# ---------------------------------------------------------------------------
# nodes


class Expr:
    __slots__ = ("_hash",)
    precedence = _ATOM

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._fields() == other._fields()

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"{type(self).__name__}{self._fields()!r}"

    def __str__(self):
        return format_expr(self)

    def _fields(self):
        raise NotImplementedError

    def _init_hash(self):
        object.__setattr__(self, "_hash", hash((type(self).__name__,) + self._fields()))

    def __setattr__(self, key, value):
        raise AttributeError("expressions are immutable")

    # operator sugar; builds through the folding constructors
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)


class Num(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        value = float(value)
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"numeric literal must be finite and >= 0, got {value}")
        object.__setattr__(self, "value", value)
        self._init_hash()

    def _fields(self):
        return (self.value,)


class Param(Expr):
    __slots__ = ("name",)

    def __init__(self, name):
        object.__setattr__(self, "name", name)
        self._init_hash()

    def _fields(self):
        return (self.name,)


class Var(Expr):
    __slots__ = ("index", "name")

    def __init__(self, index, name):
        object.__setattr__(self, "index", int(index))
        object.__setattr__(self, "name", name)
        self._init_hash()

    def _fields(self):
        return (self.index, self.name)


class BinOp(Expr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op, left, right):
        if op not in "+-*/^":
            raise ValueError(f"unknown operator {op!r}")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        self._init_hash()

    @property
    def precedence(self):
        return {"+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL, "^": _POW}[self.op]

    def _fields(self):
        return (self.op, self.left, self.right)


class Neg(Expr):
    __slots__ = ("operand",)
    precedence = _NEG

    def __init__(self, operand):
        object.__setattr__(self, "operand", operand)
        self._init_hash()

    def _fields(self):
        return (self.operand,)


class Call(Expr):
    __slots__ = ("func", "arg")

    def __init__(self, func, arg):
        if func not in FUNCTIONS:
            raise ValueError(f"unknown function {func!r}")
        object.__setattr__(self, "func", func)
        object.__setattr__(self, "arg", arg)
        self._init_hash()

    def _fields(self):
        return (self.func, self.arg)


Expression = Expr

ZERO = Num(0)
ONE = Num(1)


def num(value):
    """Constant node; negative values become ``Neg(Num(|v|))``."""
    value = float(value)
    if value < 0:
        return Neg(Num(-value))
    return Num(value)


def as_expr(value):
    return value if isinstance(value, Expr) else num(value)


def const_value(e):
    """Float value of a literal constant (``Num`` or ``Neg(Num)``), else None."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg) and isinstance(e.operand, Num):
        return -e.operand.value
    return None


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, names):
        self.text = text
        self.names = {name: i for i, name in enumerate(names)}
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ExprSyntaxError(message, tok[2], self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != value:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {found}")
        return self.take()

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self):
        left = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            left = BinOp(op, left, self.factor())
        return left

    def factor(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.power())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        tok = self.peek()
        kind, value, _ = tok
        if kind == "num":
            self.take()
            return Num(float(value))
        if kind == "ident":
            self.take()
            if self.peek()[:2] == ("op", "("):
                if value not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {value!r}", tok[2], self.text)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value in FUNCTIONS:
                raise self.error(f"function {value!r} needs an argument", tok)
            if value in self.names:
                return Var(self.names[value], value)
            return Param(value)
        if kind == "op" and value == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(value)
        raise self.error(f"expected operand, found {found}")


def parse(text, coords):
    """Parse ``text`` into an expression over ``coords`` (anything with ``.names``)."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text or "")
    return _Parser(text, coords.names).parse()


# ---------------------------------------------------------------------------
# printing


def _format_number(value):
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _wrap(e, parenthesize):
    text = format_expr(e)
    return f"({text})" if parenthesize else text


def format_expr(e):
    """Canonical text with the parentheses the grammar needs.

    A negation that is not the leading factor is always parenthesized
    (``a*(-b)``, ``x^(-1)``) for readability; the parse is unchanged.
    """
    if isinstance(e, Num):
        return _format_number(e.value)
    if isinstance(e, (Param, Var)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({format_expr(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, e.operand.precedence < _POW)
    op = e.op
    if op in "+-":
        left = _wrap(e.left, e.left.precedence < _ADD)
        right = _wrap(e.right, e.right.precedence <= _ADD or isinstance(e.right, Neg))
    elif op in "*/":
        left = _wrap(e.left, e.left.precedence < _MUL)
        right = _wrap(e.right, e.right.precedence <= _NEG)
    else:
        left = _wrap(e.left, e.left.precedence < _ATOM)
        right = _wrap(e.right, e.right.precedence <= _NEG)
    return f"{left}{op}{right}"


# ---------------------------------------------------------------------------
# evaluation

def _is_integral(x):
    return float(x).is_integer()


def _div(a, b):
    if b == 0:
        raise DomainError("division by zero")
    return a / b


def _pow(a, b):
    if _is_integral(b):
        if a == 0 and b < 0:
            raise DomainError("zero raised to a negative power")
        try:
            return a ** int(b) if abs(b) < 2**31 else a**b
        except (OverflowError, ZeroDivisionError) as exc:
            raise DomainError(str(exc)) from None
    if a <= 0:
        raise DomainError(f"non-integer power {b} of non-positive base {a}")
    try:
        return a**b
    except OverflowError as exc:
        raise DomainError(str(exc)) from None


def _sqrt(a):
    if a <= 0:
        raise DomainError(f"sqrt of non-positive value {a}")
    return math.sqrt(a)


def _ln(a):
    if a <= 0:
        raise DomainError(f"ln of non-positive value {a}")
    return math.log(a)


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        raise DomainError(f"exp overflow at {a}") from None


_FUNC_IMPL = {"sqrt": _sqrt, "exp": _exp, "ln": _ln, "sin": math.sin, "cos": math.cos}


def _finite(x):
    if not math.isfinite(x):
        raise DomainError("non-finite intermediate value")
    return x


def evaluate(e, point, binding=None):
    """Recursive evaluation of ``e`` at ``point`` (sequence indexed by Var.index)."""
    binding = binding or {}
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(point[e.index])
    if isinstance(e, Param):
        try:
            return float(binding[e.name])
        except KeyError:
            raise UnboundParameterError(f"parameter {e.name!r} is not bound") from None
    if isinstance(e, Neg):
        return -evaluate(e.operand, point, binding)
    if isinstance(e, Call):
        return _finite(_FUNC_IMPL[e.func](evaluate(e.arg, point, binding)))
    a = evaluate(e.left, point, binding)
    b = evaluate(e.right, point, binding)
    if e.op == "+":
        return _finite(a + b)
    if e.op == "-":
        return _finite(a - b)
    if e.op == "*":
        return _finite(a * b)
    if e.op == "/":
        return _finite(_div(a, b))
    return _finite(_pow(a, b))


def compile_expr(e, binding=None):
    """Compile ``e`` into a fast ``fn(point) -> float``.

    Shared subtrees are evaluated once. Semantics, including every domain
    error, match :func:`evaluate`.
    """
    return compile_many([e], binding)[0]


_OPS = {"+": "({} + {})", "-": "({} - {})", "*": "({} * {})"}


def compile_many(exprs, binding=None):
    """Compile several expressions sharing one CSE table; returns callables."""
    binding = dict(binding or {})
    lines = []
    names = {}

    def emit(node):
        if node in names:
            return names[node]
        if isinstance(node, Num):
            return repr(node.value)
        if isinstance(node, Var):
            return f"p[{node.index}]"
        if isinstance(node, Param):
            if node.name not in binding:
                raise UnboundParameterError(f"parameter {node.name!r} is not bound")
            return repr(float(binding[node.name]))
        if isinstance(node, Neg):
            code = f"(-{emit(node.operand)})"
        elif isinstance(node, Call):
            code = f"_{node.func}({emit(node.arg)})"
        elif node.op in _OPS:
            code = _OPS[node.op].format(emit(node.left), emit(node.right))
        elif node.op == "/":
            code = f"_div({emit(node.left)}, {emit(node.right)})"
        else:
            code = f"_pow({emit(node.left)}, {emit(node.right)})"
        name = f"t{len(names)}"
        lines.append(f"    {name} = _finite({code})")
        names[node] = name
        return name

    results = [emit(e) for e in exprs]
    body = "\n".join(lines) if lines else "    pass"
    src = f"def _fn(p):\n{body}\n    return ({', '.join(results)},)\n"
    env = {
        "_div": _div, "_pow": _pow, "_finite": _finite, "_sqrt": _sqrt,
        "_ln": _ln, "_exp": _exp, "_sin": math.sin, "_cos": math.cos,
    }
    exec(compile(src, "<biharm-expr>", "exec"), env)
    joint = env["_fn"]

    def single(k):
        def fn(point):
            return joint(point)[k]
        return fn

    fns = [single(k) for k in range(len(exprs))]
    for fn in fns:
        fn.joint = joint
    return fns


# ---------------------------------------------------------------------------
# folding constructors


def _fold(fn, *args):
    try:
        value = fn(*args)
    except (DomainError, OverflowError, ZeroDivisionError, ValueError):
        return None
    return num(value) if math.isfinite(value) else None


def add(a, b):
    ca, cb = const_value(a), const_value(b)
    if ca is not None and cb is not None:
        return _fold(lambda x, y: x + y, ca, cb) or BinOp("+", a, b)
    if ca == 0:
        return b
    if cb == 0:
        return a
    return BinOp("+", a, b)


def sub(a, b):
    ca, cb = const_value(a), const_value(b)
    if ca is not None and cb is not None:
        return _fold(lambda x, y: x - y, ca, cb) or BinOp("-", a, b)
    if cb == 0:
        return a
    if ca == 0:
        return neg(b)
    return BinOp("-", a, b)


def mul(a, b):
    ca, cb = const_value(a), const_value(b)
    if ca is not None and cb is not None:
        return _fold(lambda x, y: x * y, ca, cb) or BinOp("*", a, b)
    if ca == 0 or cb == 0:
        return ZERO
    if ca == 1:
        return b
    if cb == 1:
        return a
    if ca == -1:
        return neg(b)
    if cb == -1:
        return neg(a)
    return BinOp("*", a, b)


def div(a, b):
    ca, cb = const_value(a), const_value(b)
    if ca is not None and cb is not None and cb != 0:
        return _fold(_div, ca, cb) or BinOp("/", a, b)
    if ca == 0 and cb != 0:
        return ZERO
    if cb == 1:
        return a
    return BinOp("/", a, b)


def power(a, b):
    ca, cb = const_value(a), const_value(b)
    if ca is not None and cb is not None:
        folded = _fold(_pow, ca, cb)
        if folded is not None:
            return folded
    if cb == 1:
        return a
    if cb == 0:
        return ONE
    if ca == 1:
        return ONE
    return BinOp("^", a, b)


def neg(a):
    if isinstance(a, Neg):
        return a.operand
    if const_value(a) == 0:
        return ZERO
    return Neg(a)


def call(func, a):
    ca = const_value(a)
    if ca is not None:
        folded = _fold(_FUNC_IMPL[func], ca)
        if folded is not None:
            return folded
    return Call(func, a)


_BUILD = {"+": add, "-": sub, "*": mul, "/": div, "^": power}


def simplify(e):
    """Bottom-up constant folding and 0/1 identities.

    Applies e+0, e*1, e*0, e^1, e^0 (base assumed non-zero) and removes
    double negation. Value-preserving wherever the input is defined.
    """
    if isinstance(e, (Num, Param, Var)):
        return e
    if isinstance(e, Neg):
        return neg(simplify(e.operand))
    if isinstance(e, Call):
        return call(e.func, simplify(e.arg))
    return _BUILD[e.op](simplify(e.left), simplify(e.right))


# ---------------------------------------------------------------------------
# structure queries and rewriting


def variables(e):
    """Set of coordinate indices referenced by ``e``."""
    out = set()
    stack = [e]
    seen = set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            out.add(node.index)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, Call):
            stack.append(node.arg)
        elif isinstance(node, BinOp):
            stack.extend((node.left, node.right))
    return out


def parameters(e):
    out = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Param):
            out.add(node.name)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, Call):
            stack.append(node.arg)
        elif isinstance(node, BinOp):
            stack.extend((node.left, node.right))
    return out


def substitute(e, variables=None, params=None):
    """Replace ``Var`` nodes (by index) and ``Param`` nodes (by name).

    The result is rebuilt through the folding constructors, so binding
    parameters to numbers folds any constant subtrees.
    """
    variables = variables or {}
    params = params or {}
    memo = {}

    def go(node):
        if node in memo:
            return memo[node]
        if isinstance(node, Var):
            out = variables.get(node.index, node)
        elif isinstance(node, Param):
            out = as_expr(params[node.name]) if node.name in params else node
        elif isinstance(node, Num):
            out = node
        elif isinstance(node, Neg):
            out = neg(go(node.operand))
        elif isinstance(node, Call):
            out = call(node.func, go(node.arg))
        else:
            out = _BUILD[node.op](go(node.left), go(node.right))
        memo[node] = out
        return out

    return go(e)


def bind(e, binding):
    """Substitute numeric values for parameters and fold constants."""
    return substitute(e, params={k: num(v) for k, v in binding.items()})


# ---------------------------------------------------------------------------
# differentiation


def differentiate(e, index):
    """Exact symbolic partial derivative with respect to coordinate ``index``."""
    memo = {}
    depends = {}

    def dep(node):
        if node not in depends:
            if isinstance(node, Var):
                depends[node] = node.index == index
            elif isinstance(node, Neg):
                depends[node] = dep(node.operand)
            elif isinstance(node, Call):
                depends[node] = dep(node.arg)
            elif isinstance(node, BinOp):
                depends[node] = dep(node.left) or dep(node.right)
            else:
                depends[node] = False
        return depends[node]

    def d(node):
        if node in memo:
            return memo[node]
        out = _d(node)
        memo[node] = out
        return out

    def _d(node):
        if not dep(node):
            return ZERO
        if isinstance(node, Var):
            return ONE
        if isinstance(node, Neg):
            return neg(d(node.operand))
        if isinstance(node, Call):
            u = node.arg
            du = d(u)
            if node.func == "sqrt":
                return div(du, mul(Num(2), node))
            if node.func == "exp":
                return mul(du, node)
            if node.func == "ln":
                return div(du, u)
            if node.func == "sin":
                return mul(du, call("cos", u))
            return neg(mul(du, call("sin", u)))
        u, v = node.left, node.right
        if node.op == "+":
            return add(d(u), d(v))
        if node.op == "-":
            return sub(d(u), d(v))
        if node.op == "*":
            return add(mul(d(u), v), mul(u, d(v)))
        if node.op == "/":
            du, dv = d(u), d(v)
            if const_value(dv) == 0:
                return div(du, v)
            return div(sub(mul(du, v), mul(u, dv)), power(v, Num(2)))
        # power
        du, dv = d(u), d(v)
        if const_value(dv) == 0:
            return mul(mul(du, v), power(u, sub(v, ONE)))
        if const_value(du) == 0:
            return mul(mul(dv, call("ln", u)), node)
        return mul(node, add(mul(dv, call("ln", u)), div(mul(v, du), u)))

    return d(e)


def partial(e, indices):
    """Mixed partial along a sequence of coordinate indices."""
    for i in indices:
        e = differentiate(e, i)
    return e


def size(e):
    """Number of distinct subtrees (a rough cost measure)."""
    seen = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        if isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, Call):
            stack.append(node.arg)
        elif isinstance(node, BinOp):
            stack.extend((node.left, node.right))
    return len(seen)


__all__ = [
    "FUNCTIONS", "CoordinateSystem", "ChartCoordinates", "ParameterBinding",
    "Expr", "Expression", "Num", "Param", "Var", "BinOp", "Neg", "Call",
    "num", "as_expr", "const_value", "parse", "format_expr", "evaluate",
    "compile_expr", "compile_many", "simplify", "differentiate", "partial",
    "variables", "parameters", "substitute", "bind", "size",
    "add", "sub", "mul", "div", "power", "neg", "call",
]

