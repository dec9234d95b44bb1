"""Exact sparse multivariate polynomials over the rationals.

Every polynomial lives in an ordered variable context (a tuple of names).
Terms are kept in a dict keyed by a *packed* monomial: a single Python int
that encodes the exponent vector so that

* multiplying monomials is integer addition, and
* comparing packed keys is the graded reverse lexicographic order with
  variable precedence given by declaration order.

The packing is ``key = (deg << BITS*n) - sum(e_i << BITS*i)``.  Both halves
are linear in the exponents, hence additive, and the subtraction makes a
larger exponent on a later variable *decrease* the key, which is exactly
the reverse-lex tie break.

Coefficients are ``gmpy2.mpq``; ``Rational`` below is an alias for it.

Examples
--------
>>> x, y = Poly.variables(("x", "y"))
>>> (x + y) * (x - y)
Poly('x^2 - y^2', vars=('x', 'y'))
>>> divide_exact(x**2 - y**2, x - y)
(Poly('x + y', vars=('x', 'y')), Poly('0', vars=('x', 'y')))
"""

from __future__ import annotations

import heapq
import json
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence, Union

import gmpy2

Rational = gmpy2.mpq
_MPQ = type(gmpy2.mpq())

BITS = 12
MASK = (1 << BITS) - 1
MAX_DEGREE = MASK

#: Degree of the zero polynomial.  Compares below every integer.
DEG_ZERO = float("-inf")

POLY_FORMAT = "flowcurv.poly/1"

Scalar = Union[int, Fraction, "gmpy2.mpq", str]


class ContextMismatch(ValueError):
    """Operands live in different variable contexts."""


class UnknownVariable(KeyError):
    """A variable name is not part of the polynomial's context."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown variable"


def to_rational(value) -> gmpy2.mpq:
    """Convert ints, Fractions, mpq, and ``'a/b'`` strings exactly.

    Floats are rejected: their binary value is rarely what the caller meant.
    Use :func:`Rational` directly when the exact binary value is wanted.
    """
    if isinstance(value, float):
        raise TypeError("floats are not exact; pass a Fraction, int or 'a/b' string")
    if isinstance(value, str):
        return gmpy2.mpq(value.strip())
    return gmpy2.mpq(value)


# --------------------------------------------------------------------------
# monomial packing


@lru_cache(maxsize=None)
def _unit_keys(n: int) -> tuple[int, ...]:
    top = 1 << (BITS * n)
    return tuple(top - (1 << (BITS * i)) for i in range(n))


def pack(exponents: Sequence[int]) -> int:
    n = len(exponents)
    deg = 0
    low = 0
    for i, e in enumerate(exponents):
        if e < 0:
            raise ValueError("negative exponent")
        deg += e
        low += e << (BITS * i)
    if deg > MAX_DEGREE:
        raise OverflowError(f"total degree {deg} exceeds {MAX_DEGREE}")
    return (deg << (BITS * n)) - low


def unpack(key: int, n: int) -> tuple[int, ...]:
    shift = BITS * n
    deg = -((-key) >> shift)
    low = (deg << shift) - key
    return tuple((low >> (BITS * i)) & MASK for i in range(n))


def key_degree(key: int, n: int) -> int:
    return -((-key) >> (BITS * n))


# --------------------------------------------------------------------------


class Monomial(tuple):
    """Exponent vector; one slot per context variable."""

    __slots__ = ()

    def __new__(cls, exponents: Iterable[int]):
        exps = tuple(int(e) for e in exponents)
        if any(e < 0 for e in exps):
            raise ValueError("exponents must be non-negative")
        return super().__new__(cls, exps)

    @property
    def degree(self) -> int:
        return sum(self)

    def divides(self, other: "Monomial") -> bool:
        return all(a <= b for a, b in zip(self, other))


class Poly:
    """Immutable polynomial with rational coefficients.

    Do not build instances from raw packed dicts outside this module; use
    :meth:`from_terms`, :meth:`constant`, :meth:`variables` or arithmetic.
    """

    __slots__ = ("vars", "_t", "_hash")

    def __init__(self, vars: Sequence[str], terms: Mapping | None = None):
        # terms: {exponent tuple: coefficient}
        self.vars = tuple(vars)
        if len(set(self.vars)) != len(self.vars):
            raise ValueError(f"duplicate variable in context {self.vars}")
        t = {}
        if terms:
            n = len(self.vars)
            for exps, c in terms.items():
                if len(exps) != n:
                    raise ValueError(f"monomial {tuple(exps)} does not match context of {n} variables")
                c = to_rational(c)
                if c:
                    k = pack(exps)
                    c = t.get(k, 0) + c
                    if c:
                        t[k] = c
                    else:
                        t.pop(k, None)
        self._t = t
        self._hash = None

    @classmethod
    def _raw(cls, vars: tuple[str, ...], packed: dict) -> "Poly":
        p = cls.__new__(cls)
        p.vars = vars
        p._t = packed
        p._hash = None
        return p

    # construction helpers -------------------------------------------------

    @classmethod
    def from_terms(cls, vars: Sequence[str], terms: Mapping) -> "Poly":
        return cls(vars, terms)

    @classmethod
    def zero(cls, vars: Sequence[str]) -> "Poly":
        return cls._raw(tuple(vars), {})

    @classmethod
    def constant(cls, vars: Sequence[str], c: Scalar) -> "Poly":
        vars = tuple(vars)
        c = to_rational(c)
        return cls._raw(vars, {0: c} if c else {})

    @classmethod
    def var(cls, vars: Sequence[str], name: str) -> "Poly":
        vars = tuple(vars)
        try:
            i = vars.index(name)
        except ValueError:
            raise UnknownVariable(f"unknown variable {name!r}") from None
        return cls._raw(vars, {_unit_keys(len(vars))[i]: gmpy2.mpq(1)})

    @classmethod
    def variables(cls, vars: Sequence[str]) -> tuple["Poly", ...]:
        vars = tuple(vars)
        return tuple(cls.var(vars, v) for v in vars)

    # inspection -------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._t)

    def __bool__(self) -> bool:
        return bool(self._t)

    def is_zero(self) -> bool:
        return not self._t

    def is_constant(self) -> bool:
        return not self._t or (len(self._t) == 1 and 0 in self._t)

    def constant_value(self) -> gmpy2.mpq:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self._t.get(0, gmpy2.mpq(0))

    def terms(self) -> Iterator[tuple[Monomial, gmpy2.mpq]]:
        """Terms in descending monomial order."""
        n = len(self.vars)
        for k in sorted(self._t, reverse=True):
            yield Monomial(unpack(k, n)), self._t[k]

    def as_dict(self) -> dict[tuple[int, ...], gmpy2.mpq]:
        n = len(self.vars)
        return {unpack(k, n): c for k, c in self._t.items()}

    def leading_term(self) -> tuple[Monomial, gmpy2.mpq]:
        if not self._t:
            raise ValueError("zero polynomial has no leading term")
        k = max(self._t)
        return Monomial(unpack(k, len(self.vars))), self._t[k]

    def leading_coefficient(self) -> gmpy2.mpq:
        return self.leading_term()[1]

    def total_degree(self):
        if not self._t:
            return DEG_ZERO
        return key_degree(max(self._t), len(self.vars))

    def degree(self, var: str):
        """Largest exponent of ``var``; ``DEG_ZERO`` for the zero polynomial."""
        i = self._index(var)
        if not self._t:
            return DEG_ZERO
        n = len(self.vars)
        return max(unpack(k, n)[i] for k in self._t)

    def degree_profile(self, names: Iterable[str] | None = None) -> dict[str, object]:
        names = self.vars if names is None else tuple(names)
        return {v: self.degree(v) for v in names}

    def free_symbols(self) -> frozenset[str]:
        n = len(self.vars)
        used = [False] * n
        for k in self._t:
            for i, e in enumerate(unpack(k, n)):
                if e:
                    used[i] = True
        return frozenset(v for v, u in zip(self.vars, used) if u)

    def depends_on(self, names: Iterable[str]) -> bool:
        return bool(self.free_symbols() & set(names))

    def _index(self, var: str) -> int:
        try:
            return self.vars.index(var)
        except ValueError:
            raise UnknownVariable(f"unknown variable {var!r} (context {self.vars})") from None

    # arithmetic ----------------------------------------------------------------

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.vars != self.vars:
                raise ContextMismatch(f"context {self.vars} != {other.vars}")
            return other
        if isinstance(other, float):
            return NotImplemented
        try:
            return Poly.constant(self.vars, other)
        except (TypeError, ValueError):
            return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if len(other._t) > len(self._t):
            a, b = other._t, self._t
        else:
            a, b = self._t, other._t
        t = dict(a)
        for k, c in b.items():
            s = t.get(k, 0) + c
            if s:
                t[k] = s
            else:
                del t[k]
        return Poly._raw(self.vars, t)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.vars, {k: -c for k, c in self._t.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._t, other._t
        if not a or not b:
            return Poly._raw(self.vars, {})
        n = len(self.vars)
        if key_degree(max(a), n) + key_degree(max(b), n) > MAX_DEGREE:
            raise OverflowError("product degree exceeds packing capacity")
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1:
            (kb, cb), = b.items()
            return Poly._raw(self.vars, {ka + kb: ca * cb for ka, ca in a.items()})
        t: dict = {}
        get = t.get
        bi = list(b.items())
        for ka, ca in a.items():
            for kb, cb in bi:
                k = ka + kb
                t[k] = get(k, 0) + ca * cb
        return Poly._raw(self.vars, {k: c for k, c in t.items() if c})

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Poly.constant(self.vars, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def scale(self, c: Scalar) -> "Poly":
        c = to_rational(c)
        if not c:
            return Poly._raw(self.vars, {})
        return Poly._raw(self.vars, {k: v * c for k, v in self._t.items()})

    def __truediv__(self, c):
        if isinstance(c, Poly):
            q, r = divide_exact(self, c)
            if r:
                raise ValueError("polynomial division is not exact")
            return q
        return self.scale(1 / to_rational(c))

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.vars == other.vars and self._t == other._t
        if isinstance(other, (int, Fraction, _MPQ)):
            return self.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.vars, frozenset(self._t.items())))
        return self._hash

    # calculus and substitution -------------------------------------------------

    def diff(self, var: str) -> "Poly":
        i = self._index(var)
        n = len(self.vars)
        unit = _unit_keys(n)[i]
        shift = BITS * n
        lo = BITS * i
        t = {}
        for k, c in self._t.items():
            deg = -((-k) >> shift)
            e = (((deg << shift) - k) >> lo) & MASK
            if e:
                t[k - unit] = c * e
        return Poly._raw(self.vars, t)

    def subs(self, bindings: Mapping[str, object]) -> "Poly":
        """Simultaneous substitution of rationals or polynomials for variables.

        Polynomial values must share this context.
        """
        if not bindings:
            return self
        n = len(self.vars)
        idx = {}
        for name, value in bindings.items():
            i = self._index(name)
            if isinstance(value, Poly):
                if value.vars != self.vars:
                    raise ContextMismatch(f"binding for {name!r} has context {value.vars}")
            else:
                value = Poly.constant(self.vars, value)
            if value == Poly.var(self.vars, name):
                continue
            idx[i] = value
        if not idx:
            return self
        power_cache: dict = {}

        def power(i, e):
            key = (i, e)
            if key not in power_cache:
                power_cache[key] = idx[i] ** e
            return power_cache[key]

        # group terms by the exponents of substituted variables
        groups: dict = {}
        sub_idx = sorted(idx)
        for k, c in self._t.items():
            exps = list(unpack(k, n))
            sig = tuple(exps[i] for i in sub_idx)
            for i in sub_idx:
                exps[i] = 0
            groups.setdefault(sig, {})[pack(exps)] = c
        result = Poly._raw(self.vars, {})
        for sig, rest in groups.items():
            factor = Poly.constant(self.vars, 1)
            for i, e in zip(sub_idx, sig):
                if e:
                    factor = factor * power(i, e)
            result = result + Poly._raw(self.vars, rest) * factor
        return result

    def evaluate(self, point: Mapping[str, object], method: str = "direct") -> gmpy2.mpq:
        """Exact value at a point binding every context variable."""
        missing = [v for v in self.vars if v not in point]
        if missing:
            raise UnknownVariable(f"unbound variable(s) {missing}")
        vals = [to_rational(point[v]) for v in self.vars]
        if method == "horner":
            return _horner(self.as_dict(), vals, 0)
        if method != "direct":
            raise ValueError(f"unknown evaluation method {method!r}")
        n = len(self.vars)
        total = gmpy2.mpq(0)
        pow_cache: dict = {}
        for k, c in self._t.items():
            term = c
            for i, e in enumerate(unpack(k, n)):
                if e:
                    p = pow_cache.get((i, e))
                    if p is None:
                        p = pow_cache[(i, e)] = vals[i] ** e
                    term = term * p
            total += term
        return total

    def with_vars(self, new_vars: Sequence[str]) -> "Poly":
        """Re-embed into another context that contains every used variable."""
        new_vars = tuple(new_vars)
        if new_vars == self.vars:
            return self
        n = len(self.vars)
        used = self.free_symbols()
        missing = used - set(new_vars)
        if missing:
            raise ContextMismatch(f"variables {sorted(missing)} absent from {new_vars}")
        pos = {v: i for i, v in enumerate(new_vars)}
        m = len(new_vars)
        t = {}
        for k, c in self._t.items():
            exps = [0] * m
            for i, e in enumerate(unpack(k, n)):
                if e:
                    exps[pos[self.vars[i]]] = e
            t[pack(exps)] = c
        return Poly._raw(new_vars, t)

    def content_monomial(self, names: Iterable[str]) -> dict[str, int]:
        """Largest power of each named variable dividing every term."""
        n = len(self.vars)
        idx = [self._index(v) for v in names]
        if not self._t:
            return {self.vars[i]: 0 for i in idx}
        low = {i: min(unpack(k, n)[i] for k in self._t) for i in idx}
        return {self.vars[i]: e for i, e in low.items()}

    def integer_form(self) -> tuple["Poly", gmpy2.mpq]:
        """(primitive integer polynomial, rational factor) with self = factor * primitive.

        The primitive part has coprime integer coefficients and a positive
        leading coefficient.
        """
        if not self._t:
            return self, gmpy2.mpq(0)
        den = 1
        for c in self._t.values():
            den = gmpy2.lcm(den, c.denominator)
        g = 0
        for c in self._t.values():
            g = gmpy2.gcd(g, c.numerator * (den // c.denominator))
        factor = gmpy2.mpq(g, den)
        if self.leading_coefficient() < 0:
            factor = -factor
        return self.scale(1 / factor), factor

    # formatting ------------------------------------------------------------

    def to_expr(self) -> str:
        """Human-readable expression, parseable by the system language."""
        if not self._t:
            return "0"
        parts = []
        for mono, c in self.terms():
            factors = [v if e == 1 else f"{v}^{e}" for v, e in zip(self.vars, mono) if e]
            mag = abs(c)
            sign = "-" if c < 0 else "+"
            if not factors:
                body = _fmt_rational(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = _fmt_rational(mag) + "*" + "*".join(factors)
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    __str__ = to_expr

    def __repr__(self):
        expr = self.to_expr()
        if len(expr) > 200:
            expr = expr[:200] + "..."
        return f"Poly({expr!r}, vars={self.vars!r})"


def _fmt_rational(c) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _horner(terms: dict, vals: list, i: int):
    # recursive Horner in variable i, coefficients are polynomials in the rest
    if not terms:
        return gmpy2.mpq(0)
    if i == len(vals):
        return gmpy2.mpq(sum(terms.values(), gmpy2.mpq(0)))
    by_power: dict = {}
    for exps, c in terms.items():
        by_power.setdefault(exps[i], {})[exps] = c
    top = max(by_power)
    acc = gmpy2.mpq(0)
    x = vals[i]
    for e in range(top, -1, -1):
        acc = acc * x
        if e in by_power:
            acc += _horner(by_power[e], vals, i + 1)
    return acc


# --------------------------------------------------------------------------
# module-level operations


def add(p: Poly, q: Poly) -> Poly:
    _same_context(p, q)
    return p + q


def mul(p: Poly, q: Poly) -> Poly:
    _same_context(p, q)
    return p * q


def partial_derivative(p: Poly, var: str) -> Poly:
    return p.diff(var)


def substitute(p: Poly, bindings: Mapping[str, object]) -> Poly:
    return p.subs(bindings)


def evaluate(p: Poly, point: Mapping[str, object], method: str = "direct") -> gmpy2.mpq:
    return p.evaluate(point, method)


def degree_in(p: Poly, var: str):
    return p.degree(var)


def _same_context(p: Poly, q: Poly) -> None:
    if p.vars != q.vars:
        raise ContextMismatch(f"context {p.vars} != {q.vars}")


def divide_exact(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    """Divide ``p`` by a single divisor ``q`` under graded reverse lex.

    Returns ``(quotient, remainder)`` with ``p == quotient*q + remainder`` and
    no remainder term divisible by the leading monomial of ``q``.  When ``q``
    divides ``p`` the remainder is zero.
    """
    _same_context(p, q)
    if not q._t:
        raise ZeroDivisionError("division by the zero polynomial")
    n = len(p.vars)
    lead_k = max(q._t)
    lead_c = q._t[lead_k]
    lead_e = unpack(lead_k, n)
    tail = [(k - lead_k, c) for k, c in q._t.items() if k != lead_k]

    work = dict(p._t)
    heap = [-k for k in work]
    heapq.heapify(heap)
    quot: dict = {}
    rem: dict = {}
    while heap:
        k = -heapq.heappop(heap)
        c = work.pop(k, None)
        if c is None:
            continue
        if not c:
            continue
        exps = unpack(k, n)
        if all(a >= b for a, b in zip(exps, lead_e)):
            qk = k - lead_k
            qc = c / lead_c
            quot[qk] = qc
            for dk, dc in tail:
                kk = qk + lead_k + dk
                v = work.get(kk)
                if v is None:
                    work[kk] = -qc * dc
                    heapq.heappush(heap, -kk)
                else:
                    v = v - qc * dc
                    work[kk] = v
        else:
            rem[k] = c
    return Poly._raw(p.vars, quot), Poly._raw(p.vars, {k: c for k, c in rem.items() if c})


# --------------------------------------------------------------------------


class RationalFunction:
    """Quotient of two polynomials in a common context.

    The denominator is normalised to a positive leading coefficient.
    """

    __slots__ = ("numerator", "denominator")

    def __init__(self, numerator: Poly, denominator: Poly):
        _same_context(numerator, denominator)
        if denominator.is_zero():
            raise ZeroDivisionError("zero denominator")
        if denominator.leading_coefficient() < 0:
            numerator, denominator = -numerator, -denominator
        self.numerator = numerator
        self.denominator = denominator

    @property
    def vars(self):
        return self.numerator.vars

    def __eq__(self, other):
        if not isinstance(other, RationalFunction):
            return NotImplemented
        # cross multiplication: equal as functions
        return self.numerator * other.denominator == other.numerator * self.denominator

    # equality is up to a common factor, so no hash consistent with it
    __hash__ = None

    def evaluate(self, point):
        return self.numerator.evaluate(point) / self.denominator.evaluate(point)

    def __repr__(self):
        return f"RationalFunction(({self.numerator.to_expr()}) / ({self.denominator.to_expr()}))"


# --------------------------------------------------------------------------
# serialisation


def poly_to_document(p: Poly, extra: Mapping | None = None) -> str:
    """Canonical text form: context, then terms in descending order.

    Layout is fixed so that equal polynomials give byte-identical output.
    """
    lines = ["{", f'  "format": {json.dumps(POLY_FORMAT)},']
    if extra:
        for key in sorted(extra):
            lines.append(f"  {json.dumps(key)}: {json.dumps(extra[key], sort_keys=True)},")
    lines.append(f'  "vars": {json.dumps(list(p.vars))},')
    rows = [
        f'    [{json.dumps(list(m))}, "{c.numerator}", "{c.denominator}"]'
        for m, c in p.terms()
    ]
    if rows:
        lines.append('  "terms": [')
        lines.append(",\n".join(rows))
        lines.append("  ]")
    else:
        lines.append('  "terms": []')
    lines.append("}")
    return "\n".join(lines) + "\n"


def poly_from_document(text: str) -> tuple[Poly, dict]:
    """Inverse of :func:`poly_to_document`; returns ``(poly, extra fields)``."""
    doc = json.loads(text)
    if doc.get("format") != POLY_FORMAT:
        raise ValueError(f"not a polynomial document (format={doc.get('format')!r})")
    vars = tuple(doc["vars"])
    terms = {}
    for exps, num, den in doc["terms"]:
        terms[tuple(exps)] = gmpy2.mpq(int(num), int(den))
    extra = {k: v for k, v in doc.items() if k not in ("format", "vars", "terms")}
    return Poly(vars, terms), extra
