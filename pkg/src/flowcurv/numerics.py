"""Floating-point side: RK4 trajectories, residuals along them, a numeric jet.

Right-hand sides are compiled from the exact polynomials into plain Python
functions once per run.  Manifold polynomials are never evaluated in
floating point: sample points are converted to exact dyadic rationals, the
polynomial is evaluated with integers and the result is rounded once.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .curvature import ManifoldEq, fast_form
from .poly import ContextMismatch, Poly, to_rational
from .sysdsl import OdeSystem, decimal_to_rational

__all__ = [
    "Trajectory",
    "Divergence",
    "UnboundParameter",
    "exact_bindings",
    "compile_rhs",
    "ExactEvaluator",
    "integrate",
    "eval_manifold_along",
    "conservation_check",
    "taylor_jet_numeric",
    "tlsa_jet_numeric",
    "compile_jacobian",
    "write_trajectory_csv",
    "write_sweep_csv",
]


class Divergence(ArithmeticError):
    """A non-finite state appeared during integration."""

    def __init__(self, step: int, time: float, last_good_time: float):
        super().__init__(f"non-finite state at step {step} (t={time:g}); "
                         f"last finite state at t={last_good_time:g}")
        self.step = step
        self.time = time
        self.last_good_time = last_good_time


class UnboundParameter(KeyError):
    def __str__(self):
        return str(self.args[0])


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    state_vars: tuple[str, ...]
    system: OdeSystem
    bindings: dict[str, Fraction]
    time: str = "fast"
    channels: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.states) != len(self.times):
            raise ValueError("one state per sample time is required")

    def add_channel(self, name: str, values) -> None:
        values = np.asarray(values, dtype=float)
        if len(values) != len(self.times):
            raise ValueError(f"channel {name!r} has {len(values)} samples, expected {len(self.times)}")
        self.channels[name] = values

    def column(self, var: str) -> np.ndarray:
        return self.states[:, self.state_vars.index(var)]


def _to_fraction(value) -> Fraction:
    if isinstance(value, float):
        # shortest decimal repr, so 0.1 means 1/10
        q = decimal_to_rational(repr(value))
    else:
        q = to_rational(value)
    return Fraction(int(q.numerator), int(q.denominator))


def exact_bindings(sys: OdeSystem, bindings: Mapping[str, object]) -> dict[str, Fraction]:
    """Exact values for every unbound parameter of ``sys``."""
    out = {}
    for name in sys.params:
        if name not in bindings:
            raise UnboundParameter(f"parameter {name!r} is not bound")
        out[name] = _to_fraction(bindings[name])
    extra = set(bindings) - set(sys.params)
    if extra:
        raise UnboundParameter(f"unknown parameter(s) {sorted(extra)}")
    return out


def compile_rhs(sys: OdeSystem, bindings: Mapping[str, Fraction],
                scale: Fraction = Fraction(1)) -> Callable[[Sequence[float]], list[float]]:
    """Float right-hand side ``f(state) -> list`` for a fast-time system."""
    sys = fast_form(sys)
    n = sys.dim
    rows = []
    for p in sys.rhs:
        q = p.subs({k: v for k, v in bindings.items()}).with_vars(sys.state_vars) \
            if bindings else p.with_vars(sys.state_vars)
        rows.append(_poly_source(q, "s", scale))
    src = "def f(s):\n    return [" + ", ".join(rows) + "]\n"
    env: dict = {}
    exec(compile(src, f"<rhs {sys.digest()}>", "exec"), env)
    f = env["f"]
    f.__doc__ = src
    f.dim = n
    return f


def _poly_source(p: Poly, arg: str, scale: Fraction = Fraction(1)) -> str:
    if p.is_zero():
        return "0.0"
    parts = []
    for mono, c in p.terms():
        coef = repr(float(Fraction(int(c.numerator), int(c.denominator)) * scale))
        factors = []
        for i, e in enumerate(mono):
            if e == 1:
                factors.append(f"{arg}[{i}]")
            elif e > 1:
                factors.append(f"{arg}[{i}]**{e}")
        parts.append("*".join([coef] + factors))
    return "(" + " + ".join(parts) + ")"


class ExactEvaluator:
    """Evaluate a polynomial at float points exactly, rounding once.

    Floats are dyadic rationals, so with a common power-of-two denominator
    the whole sum is an integer computation.
    """

    def __init__(self, p: Poly, var_order: Sequence[str]):
        var_order = tuple(var_order)
        q = p.with_vars(var_order)
        den = 1
        for _, c in q.terms():
            den = math.lcm(den, int(c.denominator))
        self.var_order = var_order
        self.den = den
        self.terms = [(tuple(m), int(c.numerator) * (den // int(c.denominator)), m.degree)
                      for m, c in q.terms()]
        self.max_deg = max((t[2] for t in self.terms), default=0)
        self.max_exp = [max((t[0][i] for t in self.terms), default=0) for i in range(len(var_order))]

    def __call__(self, point: Sequence[float]) -> float:
        if not self.terms:
            return 0.0
        ratios = [float(x).as_integer_ratio() for x in point]
        shift = max(d.bit_length() - 1 for _, d in ratios)
        ints = [n << (shift - (d.bit_length() - 1)) for n, d in ratios]
        powers = []
        for i, x in enumerate(ints):
            pw = [1]
            for _ in range(self.max_exp[i]):
                pw.append(pw[-1] * x)
            powers.append(pw)
        D = self.max_deg
        total = 0
        for exps, c, deg in self.terms:
            t = c
            for i, e in enumerate(exps):
                if e:
                    t *= powers[i][e]
            total += t << (shift * (D - deg))
        return float(Fraction(total, self.den << (shift * D)))


def integrate(sys: OdeSystem, bindings: Mapping[str, object], ic: Sequence[float],
              t_max: float, dt: float, time: str = "fast", sample_every: int = 1) -> Trajectory:
    """Classical fixed-step RK4.

    ``time='slow'`` integrates in ``tau = small * t``: every right-hand side
    of the fast-time form is divided by the small parameter's value.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if sample_every < 1:
        raise ValueError("sample_every must be at least 1")
    sys = fast_form(sys)
    exact = exact_bindings(sys, bindings)
    if len(ic) != sys.dim:
        raise ValueError(f"initial condition has {len(ic)} entries, system has {sys.dim} states")
    scale = Fraction(1)
    if time == "slow":
        if sys.small_param is None:
            raise ValueError("slow time needs a small parameter")
        s = exact[sys.small_param]
        if s == 0:
            raise ValueError("slow time needs a nonzero small parameter")
        scale = 1 / s
    elif time != "fast":
        raise ValueError(f"time must be 'fast' or 'slow', not {time!r}")
    f = compile_rhs(sys, exact, scale)
    nsteps = int(round(t_max / dt))
    if abs(nsteps * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ValueError("t_max must be an integer multiple of dt")
    n = sys.dim
    y = [float(v) for v in ic]
    if not all(math.isfinite(v) for v in y):
        raise ValueError("initial condition is not finite")
    nsamples = nsteps // sample_every + 1
    out = np.empty((nsamples, n))
    out[0] = y
    h = dt
    h2 = dt / 2
    h6 = dt / 6
    k = 1
    for step in range(1, nsteps + 1):
        try:
            k1 = f(y)
            k2 = f([a + h2 * b for a, b in zip(y, k1)])
            k3 = f([a + h2 * b for a, b in zip(y, k2)])
            k4 = f([a + h * b for a, b in zip(y, k3)])
        except OverflowError:
            # float ** int raises instead of returning inf
            raise Divergence(step, step * dt, (step - 1) * dt) from None
        y = [a + h6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]
        if not all(math.isfinite(v) for v in y):
            raise Divergence(step, step * dt, (step - 1) * dt)
        if step % sample_every == 0:
            out[k] = y
            k += 1
    out = out[:k]
    times = np.arange(k) * (dt * sample_every)
    return Trajectory(times=times, states=out, state_vars=sys.state_vars, system=sys,
                      bindings=exact, time=time)


# --------------------------------------------------------------------------
# numeric jets


def _series_mul(a: list[float], b: list[float], k: int) -> list[float]:
    return [sum(a[i] * b[j - i] for i in range(j + 1)) for j in range(k + 1)]


def taylor_jet_numeric(sys: OdeSystem, bindings: Mapping[str, object], point: Sequence[float],
                       upto: int) -> list[np.ndarray]:
    """``X^(1) .. X^(upto)`` at ``point`` by power-series arithmetic.

    The solution through ``point`` is ``x(t) = sum c_k t^k``.  Matching
    coefficients of ``x' = f(x)`` gives ``(k+1) c_{k+1} = [f(x(t))]_k``, and
    the k-th coefficient of each monomial is a truncated Cauchy product.
    Fast time is used throughout.
    """
    if upto < 1:
        raise ValueError("upto must be at least 1")
    sys = fast_form(sys)
    exact = exact_bindings(sys, bindings)
    n = sys.dim
    rows = []
    for p in sys.rhs:
        q = p.subs(dict(exact)).with_vars(sys.state_vars) if exact else p.with_vars(sys.state_vars)
        rows.append([(float(c), tuple(m)) for m, c in q.terms()])
    c = [[float(v)] for v in point]
    for k in range(upto):
        # coefficient k of f(x(t)) needs c_0..c_k
        for i in range(n):
            acc = 0.0
            for coef, exps in rows[i]:
                s = [1.0] + [0.0] * k
                for var, e in enumerate(exps):
                    for _ in range(e):
                        s = _series_mul(s, c[var], k)
                acc += coef * s[k]
            c[i].append(acc / (k + 1))
    return [np.array([math.factorial(k) * c[i][k] for i in range(n)]) for k in range(1, upto + 1)]


def compile_jacobian(sys: OdeSystem, bindings: Mapping[str, Fraction]) -> Callable:
    """Float Jacobian ``J(state) -> ndarray`` of the fast-time field."""
    sys = fast_form(sys)
    rows = []
    for p in sys.rhs:
        q = p.subs(dict(bindings)) if bindings else p
        rows.append("[" + ", ".join(_poly_source(q.diff(v).with_vars(sys.state_vars), "s")
                                    for v in sys.state_vars) + "]")
    src = "def J(s):\n    return [" + ", ".join(rows) + "]\n"
    env: dict = {}
    exec(compile(src, f"<jacobian {sys.digest()}>", "exec"), env)
    return env["J"]


def tlsa_jet_numeric(sys: OdeSystem, bindings: Mapping[str, object], point: Sequence[float],
                     upto: int) -> list[np.ndarray]:
    """``X', J X', ..., J^(upto-1) X'`` in floating point."""
    if upto < 1:
        raise ValueError("upto must be at least 1")
    exact = exact_bindings(fast_form(sys), bindings)
    f = compile_rhs(sys, exact)
    J = np.array(compile_jacobian(sys, exact)(list(point)))
    rows = [np.array(f(list(point)))]
    for _ in range(upto - 1):
        rows.append(J @ rows[-1])
    return rows


# --------------------------------------------------------------------------
# diagnostics


def eval_manifold_along(traj: Trajectory, m: ManifoldEq, normalize: bool = False) -> np.ndarray:
    """Full determinant value along a trajectory.

    The stripped small-parameter factor is multiplied back so that the value
    is the determinant of the fast-time jet rows.  With ``normalize`` it is
    divided by the product of the row norms (0/0 taken as 0).
    """
    sys = traj.system
    phi = m.phi
    if set(phi.vars) != set(sys.context) and not set(phi.free_symbols()) <= set(sys.context):
        raise ContextMismatch(f"manifold context {phi.vars} does not match system {sys.context}")
    try:
        phi = phi.with_vars(sys.context)
    except ContextMismatch as exc:
        raise ContextMismatch(f"manifold context {m.phi.vars} does not match system {sys.context}") from exc
    b = {k: v for k, v in traj.bindings.items() if k in sys.params}
    factor = Fraction(1)
    for name, k in m.stripped:
        if name in b:
            factor *= b[name] ** k
        elif name in traj.bindings:
            factor *= traj.bindings[name] ** k
    phi = phi.subs(b).with_vars(sys.state_vars) if b else phi.with_vars(sys.state_vars)
    ev = ExactEvaluator(phi, sys.state_vars)
    fac = float(factor)
    values = np.array([ev(s) * fac for s in traj.states])
    if not normalize:
        return values
    jet = tlsa_jet_numeric if m.jet == "tlsa" else taylor_jet_numeric
    out = np.empty_like(values)
    for i, s in enumerate(traj.states):
        rows = jet(sys, traj.bindings, s, sys.dim)
        norm = math.prod(float(np.linalg.norm(r)) for r in rows)
        if norm == 0.0:
            out[i] = 0.0
        else:
            out[i] = values[i] / norm
    return out


@dataclass(frozen=True)
class Drift:
    max_abs_drift: float
    max_rel_drift: float | None
    initial: float

    @property
    def relative_available(self) -> bool:
        return self.max_rel_drift is not None

    def __iter__(self):
        return iter((self.max_abs_drift, self.max_rel_drift))


def conservation_check(traj: Trajectory, q: Poly) -> Drift:
    """Largest change of ``q(state)`` from its initial value.

    When ``q`` starts at zero only the absolute drift is reported
    (``max_rel_drift`` is ``None``).
    """
    sys = traj.system
    try:
        q = q.with_vars(sys.context)
    except ContextMismatch as exc:
        raise ContextMismatch(f"{q.vars} does not fit system context {sys.context}") from exc
    b = {k: v for k, v in traj.bindings.items() if k in sys.params}
    q = q.subs(b).with_vars(sys.state_vars) if b else q.with_vars(sys.state_vars)
    ev = ExactEvaluator(q, sys.state_vars)
    vals = np.array([ev(s) for s in traj.states])
    q0 = vals[0]
    abs_drift = float(np.max(np.abs(vals - q0))) if len(vals) else 0.0
    rel = None if q0 == 0 else abs_drift / abs(q0)
    return Drift(abs_drift, rel, float(q0))


# --------------------------------------------------------------------------
# output


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(traj: Trajectory, fh: io.TextIOBase | None = None) -> str:
    """``t,<states>[,<channels>]`` with shortest round-trip floats."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(traj.channels)
    w.writerow(["t", *traj.state_vars, *names])
    cols = [traj.channels[n] for n in names]
    for i, t in enumerate(traj.times):
        w.writerow([_fmt(t), *(_fmt(v) for v in traj.states[i]), *(_fmt(c[i]) for c in cols)])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def write_sweep_csv(rows: Sequence[tuple[str, float, float]], fh: io.TextIOBase | None = None) -> str:
    """Summary ``epsilon,max_abs_phi,max_norm_phi``; the first column is kept verbatim."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "max_abs_phi", "max_norm_phi"])
    for label, a, b in rows:
        w.writerow([label, _fmt(a), _fmt(b)])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
