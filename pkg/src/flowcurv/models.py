"""Lorenz-Krishnamurthy model variants and a catalogue of their known results.

Three systems ship both as constructors and as ``.ode`` files in
``flowcurv/data``:

* ``generalized_lk``: fast-time polynomial form, small parameter ``delta``.
* ``conservative_lk``: zero forcing and dissipation, stored in fast time,
  small parameter ``eps``.  Its native slow-time form is the shipped file.
* ``original_lk``: the unscaled five-mode model, no small parameter.

``known_results`` lists the published manifold facts for the first two
models in a form the curvature tools can check, and ``replay`` runs one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Mapping

from .curvature import (
    Invariant,
    ManifoldEq,
    curvature_manifold,
    darboux_check,
    factor_check,
    singular_approximation,
)
from .poly import Poly, RationalFunction, divide_exact
from .sysdsl import (
    OdeSystem,
    bind_params,
    parse_expression,
    parse_system,
    rename_vars,
    rescale_to_fast_time,
)

__all__ = [
    "KnownResult",
    "generalized_lk",
    "conservative_lk",
    "original_lk",
    "load_model_file",
    "model_source",
    "MODEL_FILES",
    "rescale_state",
    "generalized_from_original",
    "conservative_from_original",
    "known_results",
    "Replay",
    "replay",
]

STATE = ("x", "y", "u", "v", "w")

MODEL_FILES = {
    "generalized": "lk_generalized.ode",
    "generalized_slow": "lk_generalized_slow.ode",
    "conservative": "lk_conservative.ode",
    "original": "lk_original.ode",
}


def model_source(name: str) -> str:
    """Text of a shipped model file (``name`` is a key of ``MODEL_FILES``)."""
    try:
        fname = MODEL_FILES[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODEL_FILES)}") from None
    return resources.files("flowcurv").joinpath("data", fname).read_text()


def load_model_file(name: str) -> OdeSystem:
    return parse_system(model_source(name))


def _system(params, rows, small=None, fast=None, time="fast") -> OdeSystem:
    ctx = STATE + tuple(params)
    rhs = tuple(parse_expression(r, ctx) for r in rows)
    return OdeSystem(state_vars=STATE, params=tuple(params), rhs=rhs, small_param=small,
                     fast_vars=fast, time=time)


def generalized_lk() -> OdeSystem:
    """Generalized LK model in fast time; ``delta`` is the time-scale ratio."""
    return _system(
        ("delta", "kappa", "eps", "F"),
        [
            "-y - kappa*x",
            "x + eps*u*v - kappa*y",
            "delta*(-v*w + delta*eps*v*y - delta*u)",
            "delta*(u*w - delta*eps*u*y - delta*v + F)",
            "-delta*(u*v + delta*w)",
        ],
        small="delta",
        fast=("x", "y"),
    )


def conservative_lk(time: str = "fast") -> OdeSystem:
    """Conservative LK model.

    Stored in fast time by default; ``time='slow'`` gives the form with
    ``eps * x' = -y`` etc., which is what the shipped file contains.
    """
    slow = _system(
        ("eps", "b"),
        [
            "-y",
            "x + b*u*v",
            "-v*w + b*eps*v*y",
            "u*w - b*eps*u*y",
            "-u*v",
        ],
        small="eps",
        fast=("x", "y"),
        time="slow",
    )
    if time == "slow":
        return slow
    if time != "fast":
        raise ValueError(f"time must be 'fast' or 'slow', not {time!r}")
    return rescale_to_fast_time(slow)


def original_lk() -> OdeSystem:
    """Unscaled five-mode model with coupling ``eps`` and damping ``alpha``, ``kappa``."""
    return _system(
        ("eps", "alpha", "kappa", "F"),
        [
            "-y - kappa*x",
            "x + eps*u*v - kappa*y",
            "-v*w + eps*v*y - alpha*u",
            "u*w - eps*u*y - alpha*v + alpha*F",
            "-u*v - alpha*w",
        ],
    )


# --------------------------------------------------------------------------
# derivations between the variants


def rescale_state(sys: OdeSystem, factors: Mapping[str, Poly]) -> OdeSystem:
    """Change variables ``x -> c_x * x`` for the given state variables.

    Each equation becomes ``x' = rhs(scaled) / c_x``; the division has to be
    exact.  The factors may only involve parameters.
    """
    ctx = sys.context
    subs = {}
    for v, c in factors.items():
        if v not in sys.state_vars:
            raise ValueError(f"{v!r} is not a state variable")
        c = c.with_vars(ctx)
        if c.depends_on(sys.state_vars):
            raise ValueError("scaling factors must not depend on the state")
        subs[v] = c * Poly.var(ctx, v)
    rhs = []
    for v, p in zip(sys.state_vars, sys.rhs):
        p = p.subs(subs)
        if v in factors:
            q, r = divide_exact(p, factors[v].with_vars(ctx))
            if r:
                raise ArithmeticError(f"equation for {v} is not divisible by its scale factor")
            p = q
        rhs.append(p)
    return OdeSystem(state_vars=sys.state_vars, params=sys.params, rhs=tuple(rhs),
                     small_param=sys.small_param, fast_vars=sys.fast_vars, time=sys.time,
                     bindings=dict(sys.bindings))


def _with_param(sys: OdeSystem, name: str) -> OdeSystem:
    params = (name,) + sys.params
    ctx = sys.state_vars + params
    return OdeSystem(state_vars=sys.state_vars, params=params,
                     rhs=tuple(p.with_vars(ctx) for p in sys.rhs), small_param=sys.small_param,
                     fast_vars=sys.fast_vars, time=sys.time, bindings=dict(sys.bindings))


def _lk_scaling(sys: OdeSystem, small: str) -> OdeSystem:
    ctx = sys.context
    d = Poly.var(ctx, small)
    scaled = rescale_state(sys, {"x": d**2, "y": d**2, "u": d, "v": d, "w": d})
    return OdeSystem(state_vars=scaled.state_vars, params=scaled.params, rhs=scaled.rhs,
                     small_param=small, fast_vars=("x", "y"), time="fast",
                     bindings=dict(scaled.bindings))


def generalized_from_original() -> OdeSystem:
    """Original model with ``alpha = delta^2`` and the LK amplitude scaling.

    Reproduces :func:`generalized_lk` exactly.
    """
    sys = _with_param(original_lk(), "delta")
    ctx = sys.context
    d = Poly.var(ctx, "delta")
    rhs = tuple(p.subs({"alpha": d**2}) for p in sys.rhs)
    params = tuple(p for p in sys.params if p != "alpha")
    ctx2 = sys.state_vars + params
    sys = OdeSystem(state_vars=sys.state_vars, params=params,
                    rhs=tuple(p.with_vars(ctx2) for p in rhs))
    out = _lk_scaling(sys, "delta")
    # order parameters as in generalized_lk
    return _reorder(out, ("delta", "kappa", "eps", "F"))


def conservative_from_original() -> OdeSystem:
    """Original model with ``alpha = kappa = F = 0``, coupling renamed to ``b``.

    The same amplitude scaling then gives the fast-time conservative model
    with ``eps`` as the time-scale ratio.
    """
    sys = bind_params(original_lk(), {"alpha": 0, "kappa": 0, "F": 0})
    sys = rename_vars(sys, {"eps": "b"})
    sys = _with_param(sys, "eps")
    out = _lk_scaling(sys, "eps")
    return _reorder(out, ("eps", "b"))


def _reorder(sys: OdeSystem, params: tuple[str, ...]) -> OdeSystem:
    ctx = sys.state_vars + params
    return OdeSystem(state_vars=sys.state_vars, params=params,
                     rhs=tuple(p.with_vars(ctx) for p in sys.rhs), small_param=sys.small_param,
                     fast_vars=sys.fast_vars, time=sys.time)


# --------------------------------------------------------------------------
# catalogue


@dataclass(frozen=True)
class KnownResult:
    """A published fact about a model, in checkable form.

    ``payload`` keys by kind:

    * ``invariant_manifold``: ``phi``, ``cofactor``
    * ``singular_approximation``: ``graph`` (variable -> RationalFunction)
    * ``factorization``: ``factors`` (and ``phi`` for a printed polynomial)
    * ``cofactor``: ``phi``, ``lie`` (expected derivative or remainder), ``locality``
    * ``degree_profile``: ``degrees`` (variable -> int), ``small_order``

    ``bindings`` are parameter values substituted before the check,
    ``regime`` the substitutions under which the claim holds, ``time`` the
    time scale Lie derivatives are taken in, and ``jet`` the determinant
    rows a derived manifold is built from.  ``advisory`` entries document a
    printed formula that is known not to replay; they never gate a test run.
    """

    label: str
    kind: str
    payload: Mapping[str, object]
    regime: Mapping[str, object] = field(default_factory=dict)
    bindings: Mapping[str, object] = field(default_factory=dict)
    time: str = "fast"
    jet: str = "tlsa"
    advisory: bool = False
    note: str = ""

    KINDS = ("invariant_manifold", "singular_approximation", "factorization", "cofactor",
             "degree_profile")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")


def _p(text: str, ctx) -> Poly:
    return parse_expression(text, ctx)


def _generalized_results() -> list[KnownResult]:
    sys = generalized_lk()
    ctx = sys.context

    def P(t):
        return _p(t, ctx)

    zero_delta = {"delta": 0}
    phi32 = P("u^2*w^2*(v^2*delta^2*(1 + eps^2) - (delta^2 - kappa)^2) - w^2*(u^2 + v^2*w^2*delta^2)"
              " + u^4*(1 + (delta^2 - kappa)^2)"
              " + u*v*w*delta*(delta^2 - kappa)*(2*w^2 - u^2*(2 + eps^2))")
    return [
        KnownResult(
            "singular approximation", "singular_approximation",
            {"graph": {"x": RationalFunction(P("-eps*u*v"), P("1 + kappa^2")),
                       "y": RationalFunction(P("kappa*eps*u*v"), P("1 + kappa^2"))}},
            regime=zero_delta),
        KnownResult(
            "degree profile", "degree_profile",
            {"degrees": {"x": 5, "y": 11, "u": 10, "v": 10, "w": 10}, "small_order": 18}),
        KnownResult(
            "limit factorization", "factorization",
            {"factors": [P("v"), P("u^2 - w^2"),
                         P("(x*(1 + kappa^2) + eps*u*v)^2 + (y*(1 + kappa^2) - kappa*eps*u*v)^2")]},
            regime=zero_delta,
            bindings={"kappa": "1/2", "eps": "1/10", "F": "1/10"}),
        KnownResult(
            "v invariant", "invariant_manifold", {"phi": P("v"), "cofactor": P("0")},
            regime=zero_delta, time="fast",
            note="holds in fast time only; the slow-time derivative of v is u*w + F"),
        KnownResult(
            "u^2 - w^2 invariant", "invariant_manifold",
            {"phi": P("u^2 - w^2"), "cofactor": P("0")}, regime=zero_delta, time="fast"),
        KnownResult(
            "slow-plane restriction", "factorization", {"phi": phi32, "factors": [phi32]},
            regime={"x": 0, "y": 0}, advisory=True,
            note=("the printed polynomial divides the derived restriction but leaves a "
                  "state-dependent cofactor")),
        KnownResult(
            "slow-plane cofactor", "cofactor",
            {"phi": phi32.subs(zero_delta), "lie": P("u^2*(u^2 - w^2)*(1 + kappa^2)"),
             "locality": P("u^2 - w^2")},
            regime=zero_delta, time="slow", advisory=True,
            note="the derivative is -2uvw(u^2 - w^2)(1 + kappa^2); local invariance still holds"),
    ]


def _conservative_results() -> list[KnownResult]:
    sys = conservative_lk()
    ctx = sys.context

    def P(t):
        return _p(t, ctx)

    zero_eps = {"eps": 0}
    second = P("u^2*w^2 - u^4 + eps^2*v^2*w^2*(w^2 - (1 + b^2)*u^2)")
    return [
        KnownResult(
            "singular approximation", "singular_approximation",
            {"graph": {"x": RationalFunction(P("-b*u*v"), P("1")),
                       "y": RationalFunction(P("0"), P("1"))}},
            regime=zero_eps),
        KnownResult(
            "quadratic invariant", "invariant_manifold",
            {"phi": P("u^2 + v^2"), "cofactor": P("0")}, time="slow"),
        KnownResult(
            "degree profile", "degree_profile",
            {"degrees": {"x": 5, "y": 11, "u": 9, "v": 9, "w": 9}, "small_order": 13}),
        KnownResult(
            "limit factorization", "factorization",
            {"factors": [P("u^2 - w^2"), P("v^2 + w^2"), P("(x + b*u*v)^2 + y^2")]},
            regime=zero_eps, bindings={"b": "1/2"}),
        KnownResult(
            "u^2 - w^2 invariant", "invariant_manifold",
            {"phi": P("u^2 - w^2"), "cofactor": P("0")}, regime=zero_eps, time="slow"),
        KnownResult(
            "v^2 + w^2 invariant", "invariant_manifold",
            {"phi": P("v^2 + w^2"), "cofactor": P("0")}, regime=zero_eps, time="slow"),
        KnownResult(
            "slow-plane restriction", "factorization",
            {"factors": [P("u^2 + v^2"), second]},
            regime={"x": 0, "y": 0}, bindings={"b": "1/2"}),
        KnownResult(
            "slow-plane cofactor", "cofactor",
            {"phi": second, "lie": P("2*u*v*w*(u^2 - w^2)"), "locality": P("u^2 - w^2")},
            regime=zero_eps, time="slow"),
    ]


def known_results(model: str) -> list[KnownResult]:
    if model == "generalized":
        return _generalized_results()
    if model == "conservative":
        return _conservative_results()
    raise ValueError(f"model must be 'generalized' or 'conservative', not {model!r}")


# --------------------------------------------------------------------------
# replay


@dataclass(frozen=True)
class Replay:
    result: KnownResult
    ok: bool
    detail: str


def _short(p: Poly, limit: int = 160) -> str:
    text = p.to_expr()
    return text if len(text) <= limit else text[:limit] + f"... ({len(p)} terms)"


def replay(model: str, entry: KnownResult,
           derive: Callable[[OdeSystem], ManifoldEq] | None = None) -> Replay:
    """Check one catalogue entry with the curvature operations.

    ``derive`` maps the (bound) system to its manifold; pass a cached
    function to avoid recomputing determinants across entries.
    """
    sys = {"generalized": generalized_lk, "conservative": conservative_lk}[model]()
    if entry.bindings:
        sys = bind_params(sys, entry.bindings)
    ctx = sys.context
    state = sys.state_vars
    regime = dict(entry.regime)
    pl = entry.payload
    if derive is None:
        def derive(s):
            return curvature_manifold(s, jet=entry.jet)

    def fit(p: Poly) -> Poly:
        if entry.bindings:
            p = p.subs(entry.bindings)
        return p.with_vars(ctx)

    if entry.kind == "invariant_manifold":
        v = darboux_check(sys, fit(pl["phi"]), time=entry.time, regime=regime)
        if isinstance(v, Invariant):
            want = fit(pl["cofactor"]).subs(regime)
            return Replay(entry, v.cofactor == want, f"Invariant, cofactor {_short(v.cofactor)}")
        return Replay(entry, False, f"NotInvariant, remainder {_short(v.remainder)}")

    if entry.kind == "singular_approximation":
        got = singular_approximation(sys)
        want = {k: RationalFunction(fit(rf.numerator), fit(rf.denominator))
                for k, rf in pl["graph"].items()}
        ok = set(got) == set(want) and all(got[k] == want[k] for k in want)
        detail = ", ".join(f"{k} = ({got[k].numerator.to_expr()})/({got[k].denominator.to_expr()})"
                           for k in sorted(got))
        return Replay(entry, ok, detail)

    if entry.kind == "degree_profile":
        m = derive(sys)
        want = dict(pl["degrees"])
        prof = m.phi.degree_profile(tuple(want))
        order = m.phi.degree(sys.small_param)
        ok = prof == want and order == pl["small_order"]
        detail = " ".join(f"{k}:{d}" for k, d in prof.items()) + f", order {order} in {sys.small_param}"
        return Replay(entry, ok, detail)

    if entry.kind == "factorization":
        phi = derive(sys).phi.subs(regime)
        fc = factor_check(phi, [fit(f).subs(regime) for f in pl["factors"]], state_vars=state)
        detail = (f"exact {'yes' if fc.exact else 'no'}, "
                  f"state-free quotient {'yes' if fc.state_free else 'no'}")
        if not fc.ok:
            detail += f", quotient {_short(fc.quotient)}"
        return Replay(entry, fc.ok, detail)

    # cofactor: the remainder (or the derivative itself) matches the stated
    # polynomial up to a state-free factor, and vanishes on the locality
    v = darboux_check(sys, fit(pl["phi"]), time=entry.time, regime=regime)
    if isinstance(v, Invariant):
        return Replay(entry, False, f"Invariant, cofactor {_short(v.cofactor)}")
    want = fit(pl["lie"]).subs(regime)
    matches = False
    for got in (v.remainder, v.lie):
        q, r = divide_exact(got, want)
        if r.is_zero() and not q.is_zero() and not q.depends_on(state):
            matches = True
    local = v.locally_invariant_on(fit(pl["locality"]).subs(regime))
    detail = (f"NotInvariant, remainder {_short(v.remainder)}; "
              f"matches stated {'yes' if matches else 'no'}, "
              f"locally invariant {'yes' if local else 'no'}")
    return Replay(entry, matches and local, detail)
