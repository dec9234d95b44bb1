"""Plain-text ODE system definitions.

A system file declares its variables and gives one polynomial equation per
state variable::

    state  x y u v w
    param  delta kappa eps F
    small  delta
    time   fast
    fast   x y
    dx/dt = -y - kappa*x
    ...

With ``time slow`` an equation ``dx/dt = f`` for a fast variable ``x`` is read
as ``small * dx/dtau = f``; :func:`rescale_to_fast_time` turns such a system
into the fast-time form in which every right-hand side is a polynomial.

Expressions allow integer literals, ``+ - * /``, unary minus, ``^`` with a
non-negative integer exponent and parentheses.  Division is only allowed by
a constant, so every right-hand side stays polynomial.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import gmpy2

from .poly import Poly, to_rational

__all__ = [
    "OdeSystem",
    "ParseError",
    "parse_system",
    "parse_expression",
    "serialize_system",
    "rescale_to_fast_time",
    "bind_params",
    "rename_vars",
]


class ParseError(ValueError):
    """Malformed system source; carries the 1-based line and column."""

    kind = "parse error"

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {col}" if col is not None else "") + ": "
        super().__init__(f"{where}{self.kind}: {message}")


class LexError(ParseError):
    kind = "lexical error"


class UndeclaredVariable(ParseError):
    kind = "undeclared variable"

    def __init__(self, name: str, line=None, col=None):
        self.name = name
        super().__init__(name, line, col)


class DuplicateDeclaration(ParseError):
    kind = "duplicate declaration"


class DuplicateEquation(ParseError):
    kind = "duplicate equation"


class MissingEquation(ParseError):
    kind = "missing equation"


class NonPolynomial(ParseError):
    kind = "non-polynomial expression"


class InvalidSystem(ValueError):
    """Invalid operation on a well-formed system."""


@dataclass(frozen=True)
class OdeSystem:
    """Autonomous polynomial ODE system.

    ``rhs[i]`` is the right-hand side for ``state_vars[i]`` in the context
    ``state_vars + params``.  ``time`` records whether fast-variable equations
    are written in fast time (``dx/dt = f``) or slow time
    (``small * dx/dtau = f``).
    """

    state_vars: tuple[str, ...]
    params: tuple[str, ...]
    rhs: tuple[Poly, ...]
    small_param: str | None = None
    fast_vars: tuple[str, ...] | None = None
    time: str = "fast"
    bindings: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.rhs) != len(self.state_vars):
            raise InvalidSystem("one right-hand side per state variable is required")
        if len(set(self.context)) != len(self.context):
            raise InvalidSystem(f"duplicate names in {self.context}")
        if self.small_param is not None:
            if self.small_param in self.state_vars:
                raise InvalidSystem("the small parameter cannot be a state variable")
            if self.small_param not in self.params:
                raise InvalidSystem(f"small parameter {self.small_param!r} is not a declared param")
        if self.fast_vars is not None and not set(self.fast_vars) <= set(self.state_vars):
            raise InvalidSystem("fast variables must be state variables")
        if self.time not in ("fast", "slow"):
            raise InvalidSystem(f"time must be 'fast' or 'slow', not {self.time!r}")
        for p in self.rhs:
            if p.vars != self.context:
                raise InvalidSystem("right-hand side context differs from state_vars + params")

    @property
    def context(self) -> tuple[str, ...]:
        return self.state_vars + self.params

    @property
    def dim(self) -> int:
        return len(self.state_vars)

    def rhs_of(self, var: str) -> Poly:
        return self.rhs[self.state_vars.index(var)]

    def slow_vars(self) -> tuple[str, ...]:
        fast = set(self.fast_vars or ())
        return tuple(v for v in self.state_vars if v not in fast)

    def embed(self, p: Poly) -> Poly:
        """Move a polynomial into this system's context."""
        return p.with_vars(self.context)

    def digest(self) -> str:
        return hashlib.sha256(serialize_system(self).encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<num>\d+(?:\.\d*)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, line: int, col0: int):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise LexError(f"unexpected character {text[pos]!r}", line, col0 + pos + 1)
        kind = m.lastgroup
        value = m.group()
        if kind == "num" and "." in value:
            raise LexError(f"decimal literal {value!r} not allowed; write a/b", line, col0 + pos + 1)
        if kind != "ws":
            tokens.append((kind, value, col0 + pos))
        pos = m.end()
    tokens.append(("end", "", col0 + len(text)))
    return tokens


# --------------------------------------------------------------------------
# expression parser: precedence climbing

_BINARY = {"+": (1, "left"), "-": (1, "left"), "*": (2, "left"), "/": (2, "left"), "^": (4, "right")}
_UNARY_PREC = 3


class _ExprParser:
    def __init__(self, tokens, context: tuple[str, ...], line: int):
        self.tokens = tokens
        self.i = 0
        self.context = context
        self.line = line

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, cls, msg, tok=None):
        tok = tok or self.peek()
        return cls(msg, self.line, tok[2] + 1)

    def parse(self) -> Poly:
        result = self.expression(0)
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(ParseError, f"unexpected {tok[1]!r}")
        return result

    def expression(self, min_prec: int) -> Poly:
        lhs = self.atom()
        while True:
            tok = self.peek()
            if tok[0] != "op" or tok[1] not in _BINARY:
                return lhs
            prec, assoc = _BINARY[tok[1]]
            if prec < min_prec:
                return lhs
            self.advance()
            if tok[1] == "^":
                lhs = self.power(lhs, tok)
                continue
            rhs_tok = self.peek()
            rhs = self.expression(prec + 1 if assoc == "left" else prec)
            if tok[1] == "+":
                lhs = lhs + rhs
            elif tok[1] == "-":
                lhs = lhs - rhs
            elif tok[1] == "*":
                lhs = lhs * rhs
            else:
                if not rhs.is_constant():
                    raise self.error(NonPolynomial, "division by a non-constant expression", rhs_tok)
                if rhs.is_zero():
                    raise self.error(NonPolynomial, "division by zero", rhs_tok)
                lhs = lhs.scale(1 / rhs.constant_value())

    def power(self, base: Poly, op_tok) -> Poly:
        tok = self.advance()
        if tok[0] != "num":
            raise self.error(NonPolynomial, "exponent must be a non-negative integer literal", tok)
        result = base ** int(tok[1])
        # right associativity: a^b^c = a^(b^c) only matters for literal towers
        if self.peek()[:2] == ("op", "^"):
            raise self.error(ParseError, "chained exponents are not supported", self.peek())
        return result

    def atom(self) -> Poly:
        tok = self.advance()
        kind, value = tok[0], tok[1]
        if kind == "num":
            return Poly.constant(self.context, int(value))
        if kind == "ident":
            if value not in self.context:
                raise UndeclaredVariable(value, self.line, tok[2] + 1)
            return Poly.var(self.context, value)
        if kind == "op" and value == "(":
            inner = self.expression(0)
            close = self.advance()
            if close[:2] != ("op", ")"):
                raise self.error(ParseError, "expected ')'", close)
            return inner
        if kind == "op" and value == "-":
            return -self.expression(_UNARY_PREC)
        if kind == "op" and value == "+":
            return self.expression(_UNARY_PREC)
        if kind == "end":
            raise self.error(ParseError, "unexpected end of expression", tok)
        raise self.error(ParseError, f"unexpected {value!r}", tok)


def parse_expression(text: str, context: Sequence[str], line: int = 1, col0: int = 0) -> Poly:
    """Parse one polynomial expression in the given variable context."""
    tokens = _tokenize(text, line, col0)
    return _ExprParser(tokens, tuple(context), line).parse()


# --------------------------------------------------------------------------
# system files

_EQUATION = re.compile(r"^\s*d([A-Za-z_][A-Za-z_0-9]*)\s*/\s*dt\s*=")
_DIRECTIVES = ("state", "param", "small", "time", "fast")


def _names(rest: str, line: int, col0: int) -> list[str]:
    names = []
    for tok in _tokenize(rest, line, col0)[:-1]:
        if tok[0] != "ident":
            raise LexError(f"expected a name, found {tok[1]!r}", line, tok[2] + 1)
        names.append(tok[1])
    return names


def parse_system(source: str) -> OdeSystem:
    """Parse and validate a system definition."""
    decl: dict[str, list[str] | str] = {}
    decl_line: dict[str, int] = {}
    equations: dict[str, tuple[int, int, str]] = {}
    order: list[str] = []

    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0].rstrip()
        if not text.strip():
            continue
        m = _EQUATION.match(text)
        if m:
            var = m.group(1)
            if var in equations:
                raise DuplicateEquation(f"second equation for {var!r} (first on line {equations[var][0]})",
                                        lineno, m.start(1) + 1)
            equations[var] = (lineno, m.end(), text[m.end():])
            order.append(var)
            continue
        word = text.split(None, 1)
        key = word[0]
        if key not in _DIRECTIVES:
            raise ParseError(f"unknown directive {key!r}", lineno, text.index(key) + 1)
        if key in decl:
            raise DuplicateDeclaration(f"directive {key!r} repeated (first on line {decl_line[key]})",
                                       lineno, 1)
        rest = word[1] if len(word) > 1 else ""
        col0 = len(text) - len(rest)
        names = _names(rest, lineno, col0)
        if key in ("small", "time"):
            if len(names) != 1:
                raise ParseError(f"{key!r} takes exactly one name", lineno, col0 + 1)
            decl[key] = names[0]
        else:
            decl[key] = names
        decl_line[key] = lineno

    if "state" not in decl:
        raise ParseError("missing 'state' declaration")
    state = tuple(decl["state"])
    params = tuple(decl.get("param", ()))
    seen = {}
    for name, where in [(v, "state") for v in state] + [(p, "param") for p in params]:
        if name in seen:
            raise DuplicateDeclaration(f"{name!r} declared twice ({seen[name]} and {where})",
                                       decl_line[where], None)
        seen[name] = where

    small = decl.get("small")
    if small is not None and small not in params:
        raise UndeclaredVariable(f"{small} (small parameter must be a declared param)",
                                 decl_line["small"])
    time = decl.get("time", "fast")
    if time not in ("fast", "slow"):
        raise ParseError(f"time must be 'fast' or 'slow', not {time!r}", decl_line["time"])
    fast = decl.get("fast")
    if fast is not None:
        for v in fast:
            if v not in state:
                raise UndeclaredVariable(f"{v} (fast variables must be state variables)",
                                         decl_line["fast"])
        if len(set(fast)) != len(fast):
            raise DuplicateDeclaration("repeated fast variable", decl_line["fast"])
        fast = tuple(fast)
    if time == "slow" and small is None:
        raise ParseError("'time slow' requires a 'small' parameter", decl_line["time"])

    context = state + params
    rhs = []
    for var in order:
        if var not in state:
            lineno = equations[var][0]
            raise UndeclaredVariable(f"d{var}/dt: {var} is not a state variable", lineno, 2)
    for var in state:
        if var not in equations:
            raise MissingEquation(f"no equation for state variable {var!r}")
        lineno, col0, expr = equations[var]
        rhs.append(parse_expression(expr, context, lineno, col0))

    return OdeSystem(state_vars=state, params=params, rhs=tuple(rhs), small_param=small,
                     fast_vars=fast, time=time)


def serialize_system(sys: OdeSystem) -> str:
    """Canonical system file text; ``parse_system`` reads it back unchanged."""
    lines = ["state " + " ".join(sys.state_vars)]
    lines.append(("param " + " ".join(sys.params)).rstrip())
    if sys.small_param is not None:
        lines.append(f"small {sys.small_param}")
    lines.append(f"time {sys.time}")
    if sys.fast_vars is not None:
        lines.append(("fast " + " ".join(sys.fast_vars)).rstrip())
    for name in sorted(sys.bindings):
        v = sys.bindings[name]
        lines.append(f"# bound {name} = {v}")
    for v, p in zip(sys.state_vars, sys.rhs):
        lines.append(f"d{v}/dt = {p.to_expr()}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# transformations


def rescale_to_fast_time(sys: OdeSystem) -> OdeSystem:
    """Fast-time polynomial form: slow right-hand sides gain a factor ``small``.

    A slow-time system reads ``small * x' = f`` for fast ``x`` and ``z' = g``
    for slow ``z``; with ``t = tau / small`` this is ``x' = f``, ``z' = small*g``.
    Fast-time input is returned unchanged.
    """
    if sys.small_param is None:
        raise InvalidSystem("system has no small parameter")
    if sys.time == "fast":
        return sys
    small = Poly.var(sys.context, sys.small_param)
    fast = set(sys.fast_vars or ())
    rhs = tuple(p if v in fast else small * p for v, p in zip(sys.state_vars, sys.rhs))
    return replace(sys, rhs=rhs, time="fast")


def bind_params(sys: OdeSystem, bindings: Mapping[str, object], force: bool = False) -> OdeSystem:
    """Substitute rational values for parameters and drop them from the context.

    Binding the small parameter needs ``force=True``; the system is moved to
    fast time first and loses its small parameter.
    """
    if not bindings:
        return sys
    values = {}
    for name, value in bindings.items():
        if name not in sys.params:
            if name in sys.state_vars:
                raise InvalidSystem(f"{name!r} is a state variable, not a parameter")
            raise InvalidSystem(f"unknown parameter {name!r}")
        if name == sys.small_param and not force:
            raise InvalidSystem(f"refusing to bind small parameter {name!r} without force")
        values[name] = to_rational(value)
    small = sys.small_param
    if small in values:
        sys = rescale_to_fast_time(sys)
        small = None
    params = tuple(p for p in sys.params if p not in values)
    context = sys.state_vars + params
    rhs = tuple(p.subs(values).with_vars(context) for p in sys.rhs)
    merged = dict(sys.bindings)
    merged.update(values)
    return replace(sys, params=params, rhs=rhs, small_param=small, bindings=merged)


def rename_vars(sys: OdeSystem, mapping: Mapping[str, str]) -> OdeSystem:
    """Rename state variables or parameters (simultaneously)."""
    for old in mapping:
        if old not in sys.context:
            raise InvalidSystem(f"unknown name {old!r}")

    def ren(v):
        return mapping.get(v, v)

    state = tuple(ren(v) for v in sys.state_vars)
    params = tuple(ren(p) for p in sys.params)
    context = state + params
    rhs = tuple(Poly(context, p.as_dict()) for p in sys.rhs)
    return OdeSystem(
        state_vars=state,
        params=params,
        rhs=rhs,
        small_param=ren(sys.small_param) if sys.small_param else None,
        fast_vars=tuple(ren(v) for v in sys.fast_vars) if sys.fast_vars is not None else None,
        time=sys.time,
        bindings={ren(k): v for k, v in sys.bindings.items()},
    )


def decimal_to_rational(text: str) -> gmpy2.mpq:
    """Exact rational for a decimal literal such as ``'0.05'`` or ``'-1.97'``.

    Scales by a power of ten, so ``'0.1'`` is exactly 1/10.
    """
    text = text.strip()
    m = re.fullmatch(r"([+-]?)(\d*)(?:\.(\d*))?(?:[eE]([+-]?\d+))?", text)
    if "/" in text:
        return to_rational(text)
    if not m or not (m.group(2) or m.group(3)):
        raise ValueError(f"not a number: {text!r}")
    sign, whole, frac, exp = m.groups()
    frac = frac or ""
    num = int((whole or "0") + frac)
    e = int(exp or 0) - len(frac)
    value = gmpy2.mpq(num * 10**e) if e >= 0 else gmpy2.mpq(num, 10 ** (-e))
    return -value if sign == "-" else value
