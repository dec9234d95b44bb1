"""Flow curvature manifolds and their Darboux invariance.

The curvature manifold of an n-dimensional polynomial flow is the zero set
of ``det(X', X'', ..., X^(n))`` where the rows are successive total time
derivatives of the state along the flow.  Everything here is exact.

Systems with a small parameter are always worked on in fast time, where the
right-hand sides are genuine polynomials (see
:func:`flowcurv.sysdsl.rescale_to_fast_time`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import gmpy2

from .poly import Poly, RationalFunction, divide_exact, to_rational
from .sysdsl import OdeSystem, rescale_to_fast_time

__all__ = [
    "ManifoldEq",
    "JetTable",
    "Invariant",
    "NotInvariant",
    "FactorCheck",
    "fast_form",
    "jacobian",
    "lie",
    "flow_jet",
    "tlsa_jet",
    "determinant",
    "curvature_manifold",
    "lie_derivative",
    "darboux_check",
    "tlsa_check",
    "singular_approximation",
    "restrict",
    "factor_check",
    "trace_identity_oracle",
    "manifold_from_expr",
]


class StructureError(ValueError):
    """The system does not have the structure an operation needs."""


class DegenerateFastBlock(StructureError):
    """The linear fast block has a vanishing determinant."""


class SingularSlowTime(ValueError):
    """A slow-time Lie derivative is not polynomial."""


@dataclass(frozen=True)
class JetTable:
    """``derivatives[m-1]`` holds ``X^(m)`` componentwise."""

    derivatives: tuple[tuple[Poly, ...], ...]

    def __getitem__(self, m: int) -> tuple[Poly, ...]:
        if m < 1:
            raise IndexError("jet orders start at 1")
        return self.derivatives[m - 1]

    def __len__(self):
        return len(self.derivatives)


@dataclass(frozen=True)
class ManifoldEq:
    """A manifold ``phi = 0`` in a system's variable context.

    ``stripped`` records powers of parameters divided out of the raw
    determinant: the determinant equals ``phi * prod(p**k)``.  ``jet`` names
    the rows the determinant was built from (``exact`` or ``tlsa``).
    """

    phi: Poly
    system_ref: str
    lie_order: int = 0
    substitutions: tuple[tuple[str, str], ...] = ()
    origin: str = "determinant"
    stripped: tuple[tuple[str, int], ...] = ()
    jet: str = "tlsa"

    def stripped_factor(self) -> Poly:
        f = Poly.constant(self.phi.vars, 1)
        for name, k in self.stripped:
            f = f * Poly.var(self.phi.vars, name) ** k
        return f

    def provenance(self) -> dict:
        return {
            "system": self.system_ref,
            "lie_order": self.lie_order,
            "origin": self.origin,
            "jet": self.jet,
            "stripped": [list(s) for s in self.stripped],
            "substitutions": [list(s) for s in self.substitutions],
        }


@dataclass(frozen=True)
class Invariant:
    cofactor: Poly
    lie: Poly
    time: str = "fast"

    @property
    def invariant(self) -> bool:
        return True


@dataclass(frozen=True)
class NotInvariant:
    remainder: Poly
    quotient: Poly
    lie: Poly
    time: str = "fast"

    @property
    def invariant(self) -> bool:
        return False

    def locally_invariant_on(self, locality: Poly) -> bool:
        """True when the remainder vanishes on ``locality = 0`` by divisibility."""
        _, r = divide_exact(self.remainder, locality)
        return r.is_zero()


@dataclass(frozen=True)
class FactorCheck:
    quotient: Poly
    ok: bool
    state_free: bool
    remainders: tuple[Poly, ...] = field(default=())

    @property
    def exact(self) -> bool:
        return all(r.is_zero() for r in self.remainders)


# --------------------------------------------------------------------------


def fast_form(sys: OdeSystem) -> OdeSystem:
    if sys.time == "fast":
        return sys
    return rescale_to_fast_time(sys)


def jacobian(sys: OdeSystem) -> list[list[Poly]]:
    """``J[i][j] = d rhs_i / d state_j``; parameters are constants."""
    sys = fast_form(sys)
    return [[f.diff(v) for v in sys.state_vars] for f in sys.rhs]


def lie(sys: OdeSystem, p: Poly) -> Poly:
    """Lie derivative of ``p`` along the fast-time vector field."""
    sys = fast_form(sys)
    p = sys.embed(p)
    total = Poly.zero(sys.context)
    for v, f in zip(sys.state_vars, sys.rhs):
        d = p.diff(v)
        if d:
            total = total + d * f
    return total


def flow_jet(sys: OdeSystem, upto: int) -> JetTable:
    """Successive total time derivatives ``X', ..., X^(upto)``."""
    if upto < 1:
        raise ValueError("upto must be at least 1")
    sys = fast_form(sys)
    rows = [tuple(sys.rhs)]
    for _ in range(upto - 1):
        rows.append(tuple(lie(sys, p) for p in rows[-1]))
    return JetTable(tuple(rows))


def tlsa_jet(sys: OdeSystem, upto: int) -> JetTable:
    """Rows ``X', J X', J^2 X', ...`` with the Jacobian held fixed.

    This is the flow jet under the tangent linear system approximation
    (``dJ/dt = 0``).  It agrees with :func:`flow_jet` up to ``X''`` and
    drops every ``dJ/dt`` term after that.
    """
    if upto < 1:
        raise ValueError("upto must be at least 1")
    sys = fast_form(sys)
    J = jacobian(sys)
    zero = Poly.zero(sys.context)
    rows = [tuple(sys.rhs)]
    for _ in range(upto - 1):
        prev = rows[-1]
        row = []
        for Ji in J:
            acc = zero
            for a, b in zip(Ji, prev):
                if a and b:
                    acc = acc + a * b
            row.append(acc)
        rows.append(tuple(row))
    return JetTable(tuple(rows))


# --------------------------------------------------------------------------
# determinants


def determinant(rows: Sequence[Sequence[Poly]], method: str = "laplace") -> Poly:
    """Exact determinant of a square matrix of polynomials.

    ``laplace`` expands along rows from the bottom up, memoising every minor
    over column subsets; the top row (the smallest entries for a flow jet)
    is multiplied in last.  ``bareiss`` is fraction-free elimination with an
    exact division at each step.
    """
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix is not square")
    if n == 0:
        raise ValueError("empty matrix")
    if method == "laplace":
        return _det_laplace(rows)
    if method == "bareiss":
        return _det_bareiss(rows)
    raise ValueError(f"unknown determinant method {method!r}")


def _det_laplace(rows):
    n = len(rows)
    # minors[S] = det of the last k rows restricted to the sorted columns S
    minors = {(j,): rows[n - 1][j] for j in range(n)}
    for k in range(2, n + 1):
        r = rows[n - k]
        nxt = {}
        for cols in itertools.combinations(range(n), k):
            acc = None
            for t, j in enumerate(cols):
                a = r[j]
                if not a:
                    continue
                m = minors[cols[:t] + cols[t + 1:]]
                if not m:
                    continue
                term = a * m
                if t % 2:
                    term = -term
                acc = term if acc is None else acc + term
            nxt[cols] = acc if acc is not None else Poly.zero(r[0].vars)
        minors = nxt
    return minors[tuple(range(n))]


def _det_bareiss(rows):
    n = len(rows)
    m = [list(r) for r in rows]
    vars = m[0][0].vars
    sign = 1
    prev = Poly.constant(vars, 1)
    for k in range(n - 1):
        if not m[k][k]:
            for i in range(k + 1, n):
                if m[i][k]:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return Poly.zero(vars)
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * pivot - m[i][k] * m[k][j]
                if prev.is_constant():
                    m[i][j] = num.scale(1 / prev.constant_value())
                else:
                    q, rem = divide_exact(num, prev)
                    if rem:
                        raise ArithmeticError("Bareiss step was not exact")
                    m[i][j] = q
            m[i][k] = Poly.zero(vars)
        prev = pivot
    det = m[n - 1][n - 1]
    return -det if sign < 0 else det


def _strip_params(phi: Poly, names: Sequence[str]) -> tuple[Poly, tuple[tuple[str, int], ...]]:
    content = phi.content_monomial(names) if phi else {}
    removed = tuple((v, k) for v, k in content.items() if k)
    if not removed:
        return phi, ()
    exps = [0] * len(phi.vars)
    for v, k in removed:
        exps[phi.vars.index(v)] = k
    divisor = Poly(phi.vars, {tuple(exps): 1})
    q, r = divide_exact(phi, divisor)
    assert r.is_zero()
    return q, removed


def curvature_manifold(sys: OdeSystem, method: str = "laplace", strip_small: bool = True,
                       jet: str = "tlsa") -> ManifoldEq:
    """``det(X', X'', ..., X^(n))`` for an n-dimensional system.

    ``jet='tlsa'`` (the default) uses ``X^(k+1) = J X^(k)``
    (:func:`tlsa_jet`), the form the published LK degree profiles and
    factorisations follow.  ``jet='exact'`` uses true time derivatives
    (:func:`flow_jet`); only that form satisfies
    ``L_X det(X', ..., X^(n)) = det(X', ..., X^(n-1), X^(n+1))``.

    In fast time every slow column carries a factor of the small parameter,
    so the raw determinant vanishes identically when it is set to zero.  With
    ``strip_small`` the largest power of the small parameter dividing the
    determinant is removed (and recorded in ``stripped``) so that the
    small-parameter limit can be taken by plain substitution.
    """
    sys = fast_form(sys)
    n = sys.dim
    if n < 2:
        raise StructureError("the curvature manifold needs at least two state variables")
    if jet == "exact":
        rows = flow_jet(sys, n)
    elif jet == "tlsa":
        rows = tlsa_jet(sys, n)
    else:
        raise ValueError(f"jet must be 'exact' or 'tlsa', not {jet!r}")
    phi = determinant(rows.derivatives, method)
    stripped = ()
    if strip_small and sys.small_param is not None:
        phi, stripped = _strip_params(phi, [sys.small_param])
    return ManifoldEq(phi=phi, system_ref=sys.digest(), lie_order=0, origin="determinant",
                      stripped=stripped, jet=jet)


def manifold_from_expr(sys: OdeSystem, phi: Poly) -> ManifoldEq:
    """Wrap a user-supplied polynomial as a manifold of ``sys``."""
    sys = fast_form(sys)
    return ManifoldEq(phi=sys.embed(phi), system_ref=sys.digest(), origin="expression")


def _slow_time(sys: OdeSystem, p: Poly) -> Poly:
    # slow-time derivative is the fast-time one divided by the small parameter
    if sys.small_param is None:
        raise SingularSlowTime("slow time needs a small parameter")
    small = Poly.var(sys.context, sys.small_param)
    q, r = divide_exact(p, small)
    if r:
        raise SingularSlowTime(
            "the slow-time Lie derivative has a 1/" + sys.small_param
            + " term: the manifold depends on fast variables at leading order")
    return q


def lie_derivative(sys: OdeSystem, m: ManifoldEq, time: str = "fast") -> ManifoldEq:
    """``L_X phi = sum d(phi)/dx_i * xdot_i``; ``lie_order`` goes up by one.

    ``time='slow'`` differentiates with respect to ``tau = small * t``.
    """
    sys = fast_form(sys)
    d = lie(sys, m.phi)
    if time == "slow":
        d = _slow_time(sys, d)
    elif time != "fast":
        raise ValueError(f"time must be 'fast' or 'slow', not {time!r}")
    return replace(m, phi=d, lie_order=m.lie_order + 1)


def darboux_check(sys: OdeSystem, m: ManifoldEq | Poly, time: str = "fast",
                  regime: Mapping[str, object] | None = None):
    """Exact Darboux test ``L_X phi = k * phi``.

    ``regime`` substitutes values (typically ``small -> 0``) into both the
    Lie derivative and ``phi`` before dividing; since parameters are never
    differentiated this is the same as substituting into the system first.
    With ``time='slow'`` the derivative is taken in slow time, which is what
    a small-parameter limit of a slow-time model means.
    """
    sys = fast_form(sys)
    phi = m.phi if isinstance(m, ManifoldEq) else sys.embed(m)
    if phi.is_zero():
        raise ValueError("zero manifold polynomial")
    d = lie(sys, phi)
    if time == "slow":
        d = _slow_time(sys, d)
    elif time != "fast":
        raise ValueError(f"time must be 'fast' or 'slow', not {time!r}")
    if regime:
        d = d.subs(regime)
        phi = phi.subs(regime)
        if phi.is_zero():
            raise ValueError("manifold polynomial vanishes identically in this regime")
    q, r = divide_exact(d, phi)
    if r.is_zero():
        return Invariant(cofactor=q, lie=d, time=time)
    return NotInvariant(remainder=r, quotient=q, lie=d, time=time)


def tlsa_check(sys: OdeSystem, need_flag: bool = True) -> tuple[list[list[Poly]], bool | None]:
    """Total time derivative of the Jacobian and whether it vanishes at small = 0."""
    sys = fast_form(sys)
    J = jacobian(sys)
    dJ = [[lie(sys, e) for e in row] for row in J]
    if sys.small_param is None:
        if need_flag:
            raise StructureError("system has no small parameter")
        return dJ, None
    zero = {sys.small_param: 0}
    flag = all(e.subs(zero).is_zero() for row in dJ for e in row)
    return dJ, flag


def singular_approximation(sys: OdeSystem) -> dict[str, RationalFunction]:
    """Solve the fast equations at ``small = 0`` for the fast variables.

    The fast right-hand sides must be affine in the fast variables once the
    small parameter is zero; the solution comes from Cramer's rule.
    """
    if not sys.fast_vars:
        raise StructureError("no fast variables declared")
    if sys.small_param is None:
        raise StructureError("system has no small parameter")
    ctx = sys.context
    zero = {sys.small_param: 0}
    fast = list(sys.fast_vars)
    eqs = [sys.rhs_of(v).subs(zero) for v in fast]
    # eq = A x + c
    A = [[e.diff(x) for x in fast] for e in eqs]
    for row in A:
        for a in row:
            if a.depends_on(fast):
                raise StructureError("fast subsystem is not affine in the fast variables")
    c = [e.subs({x: 0 for x in fast}) for e in eqs]
    D = determinant(A) if len(fast) > 1 else A[0][0]
    if D.is_zero():
        raise DegenerateFastBlock("fast block is singular at small = 0")
    out = {}
    for i, x in enumerate(fast):
        Ai = [list(r) for r in A]
        for k in range(len(fast)):
            Ai[k][i] = -c[k]
        Ni = determinant(Ai) if len(fast) > 1 else Ai[0][0]
        out[x] = RationalFunction(Ni, D)
    # canonical sign is applied by RationalFunction; keep a shared context
    for rf in out.values():
        assert rf.vars == ctx
    return out


def restrict(m: ManifoldEq, bindings: Mapping[str, object]) -> ManifoldEq:
    """Substitute values into ``phi``; the substitutions are recorded."""
    phi = m.phi.subs(bindings)
    rec = tuple((k, v.to_expr() if isinstance(v, Poly) else str(to_rational(v)))
                for k, v in bindings.items())
    return replace(m, phi=phi, substitutions=m.substitutions + rec)


def factor_check(m: ManifoldEq | Poly, candidates: Sequence[Poly],
                 state_vars: Sequence[str] | None = None) -> FactorCheck:
    """Divide by each candidate in turn.

    ``ok`` needs every division to be exact *and* the final quotient to be
    free of the state variables (a parameter-only factor).  ``state_vars``
    defaults to every variable of the context.
    """
    phi = m.phi if isinstance(m, ManifoldEq) else m
    q = phi
    rems = []
    for c in candidates:
        c = c.with_vars(phi.vars)
        if c.is_zero():
            raise ValueError("zero candidate factor")
        q, r = divide_exact(q, c)
        rems.append(r)
        if r:
            break
    names = phi.vars if state_vars is None else tuple(state_vars)
    exact = all(r.is_zero() for r in rems) and len(rems) == len(candidates)
    state_free = exact and not q.depends_on(names) and not q.is_zero()
    return FactorCheck(quotient=q, ok=exact and state_free, state_free=state_free,
                       remainders=tuple(rems))


# --------------------------------------------------------------------------


def _det_exact(mat: list[list]) -> gmpy2.mpq:
    # permutation expansion; independent of the polynomial code paths
    n = len(mat)
    total = gmpy2.mpq(0)
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = gmpy2.mpq(1)
        for i, p in enumerate(perm):
            prod *= mat[i][p]
            if not prod:
                break
        total += -prod if inv % 2 else prod
    return total


def trace_identity_oracle(J: Sequence[Sequence], vectors: Sequence[Sequence]) -> bool:
    """Check ``sum_i det(a_1, ..., J a_i, ..., a_n) == tr(J) det(a_1, ..., a_n)`` exactly."""
    n = len(J)
    if any(len(r) != n for r in J) or len(vectors) != n or any(len(a) != n for a in vectors):
        raise ValueError("dimension mismatch")
    J = [[to_rational(x) for x in r] for r in J]
    a = [[to_rational(x) for x in v] for v in vectors]
    lhs = gmpy2.mpq(0)
    for i in range(n):
        Ja = [sum((J[r][c] * a[i][c] for c in range(n)), gmpy2.mpq(0)) for r in range(n)]
        rows = [Ja if k == i else a[k] for k in range(n)]
        lhs += _det_exact(rows)
    tr = sum((J[i][i] for i in range(n)), gmpy2.mpq(0))
    return lhs == tr * _det_exact(a)
