"""Command-line front end: ``flowcurv {derive,darboux,restrict,integrate,sweep}``.

Exit codes: 0 success, 1 usage, 2 parse error, 3 math error or divergence.
Every successful run that writes files also writes a JSON run manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import __version__
from .curvature import (
    Invariant,
    ManifoldEq,
    SingularSlowTime,
    StructureError,
    curvature_manifold,
    darboux_check,
    factor_check,
    fast_form,
    flow_jet,
    lie_derivative,
    restrict,
    tlsa_jet,
)
from .numerics import (
    Divergence,
    UnboundParameter,
    eval_manifold_along,
    integrate,
    write_sweep_csv,
    write_trajectory_csv,
)
from .poly import ContextMismatch, Poly, poly_from_document, poly_to_document
from .sysdsl import (
    InvalidSystem,
    OdeSystem,
    ParseError,
    bind_params,
    decimal_to_rational,
    parse_expression,
    parse_system,
)

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_MATH = 0, 1, 2, 3

DEFAULT_MAX_TERMS = 10**11


class UsageError(Exception):
    pass


class ParseFailure(Exception):
    pass


class MathFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# helpers


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _resolve_system_path(name: str) -> Path:
    p = Path(name)
    if p.is_file():
        return p
    # fall back to the shipped model files by base name
    if p.parent == Path(".") or not p.parent.exists():
        packaged = resources.files("flowcurv").joinpath("data", p.name)
        if packaged.is_file():
            return Path(str(packaged))
    raise UsageError(f"system file not found: {name}")


def _read(path: Path) -> str:
    try:
        return Path(path).read_text()
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}") from None
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _load_system(name: str) -> tuple[OdeSystem, Path, str]:
    path = _resolve_system_path(name)
    text = _read(path)
    try:
        return parse_system(text), path, text
    except ParseError as exc:
        raise ParseFailure(f"{path}: {exc}") from None


def _parse_assignments(items, flag: str) -> dict[str, object]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"{flag} expects name=value, got {item!r}")
        name, value = (s.strip() for s in item.split("=", 1))
        if not name:
            raise UsageError(f"{flag} expects name=value, got {item!r}")
        try:
            out[name] = decimal_to_rational(value)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"{flag} {name}: not a number: {value!r}") from None
    return out


def _rational_text(q) -> str:
    return str(q) if q.denominator != 1 else str(q.numerator)


def _manifest(args, inputs: dict[str, str], bindings: dict, outputs: list[str]) -> str:
    doc = {
        "tool": "flowcurv",
        "version": __version__,
        "command": ["flowcurv", *args.argv],
        "inputs": {k: _sha256(v) for k, v in sorted(inputs.items())},
        "bindings": {k: _rational_text(v) for k, v in sorted(bindings.items())},
        "outputs": sorted(outputs),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_manifest(args, out: Path, inputs, bindings, outputs) -> Path:
    path = Path(args.manifest) if getattr(args, "manifest", None) else Path(str(out) + ".manifest.json")
    _atomic_write(path, _manifest(args, inputs, bindings, [str(p) for p in outputs]))
    return path


def _profile_line(p: Poly, names) -> str:
    prof = p.degree_profile(names)
    return " ".join(f"{v}:{prof[v] if prof[v] != float('-inf') else '-inf'}" for v in names)


def _predict_terms(rows, context) -> int:
    """Upper bound on the determinant's term count.

    Counts exponent vectors under the per-variable degree bounds (sums of
    row maxima) and the total-degree bound.  Loose by orders of magnitude
    on dense-looking systems, but cheap and never an underestimate.
    """
    n = len(context)
    bounds = [0] * n
    total = 0
    for row in rows:
        row = [p for p in row if p]
        if not row:
            return 0
        for i, v in enumerate(context):
            bounds[i] += max(p.degree(v) for p in row)
        total += max(p.total_degree() for p in row)
    counts = [1] + [0] * total
    for b in bounds:
        nxt = [0] * (total + 1)
        for s, c in enumerate(counts):
            if c:
                for e in range(min(b, total - s) + 1):
                    nxt[s + e] += c
        counts = nxt
    return sum(counts)


def _load_phi(path: str) -> tuple[Poly, dict, str]:
    text = _read(Path(path))
    try:
        phi, extra = poly_from_document(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseFailure(f"{path}: not a polynomial document: {exc}") from None
    return phi, extra, text


def _parse_in(text: str, context, what: str) -> Poly:
    try:
        return parse_expression(text, context)
    except ParseError as exc:
        raise ParseFailure(f"{what}: {exc}") from None


# --------------------------------------------------------------------------
# subcommands


def cmd_derive(args) -> int:
    sys_, path, text = _load_system(args.system)
    if args.lie_order < 0:
        raise UsageError("--lie-order must be non-negative")
    bindings = _parse_assignments(args.bind, "--bind")
    try:
        sys_ = bind_params(sys_, bindings)
    except InvalidSystem as exc:
        raise UsageError(str(exc)) from None
    fast = fast_form(sys_) if sys_.small_param is not None else sys_
    rows = (tlsa_jet if args.jet == "tlsa" else flow_jet)(fast, fast.dim)
    predicted = _predict_terms(rows.derivatives, fast.context)
    if predicted > args.max_terms and not args.force:
        raise MathFailure(f"predicted determinant size {predicted} terms exceeds the cap "
                          f"{args.max_terms}; use --force or raise --max-terms")
    try:
        m = curvature_manifold(sys_, method=args.method, strip_small=not args.no_strip,
                               jet=args.jet)
        for _ in range(args.lie_order):
            m = lie_derivative(sys_, m, time=args.time or "fast")
    except (StructureError, SingularSlowTime, ArithmeticError) as exc:
        raise MathFailure(str(exc)) from None
    extra = {"provenance": m.provenance(),
             "bindings": {k: _rational_text(v) for k, v in sorted(bindings.items())},
             "state": list(fast.state_vars)}
    doc = poly_to_document(m.phi, extra)
    out = Path(args.out) if args.out else Path(path.stem + ".phi.json")
    _atomic_write(out, doc)
    man = _write_manifest(args, out, {str(path): text}, bindings, [out])
    print(f"terms: {len(m.phi)}")
    print("degrees: " + _profile_line(m.phi, fast.state_vars))
    if m.stripped:
        print("stripped: " + " ".join(f"{v}^{k}" for v, k in m.stripped))
        if fast.small_param:
            print(f"order in {fast.small_param}: {m.phi.degree(fast.small_param)}")
    print(f"wrote {out}")
    print(f"manifest {man}")
    return EXIT_OK


def cmd_darboux(args) -> int:
    sys_, path, text = _load_system(args.system)
    if (args.phi is None) == (args.phi_expr is None):
        raise UsageError("give exactly one of --phi and --phi-expr")
    regime = _parse_assignments(args.set, "--set")
    for name in regime:
        if name not in sys_.params:
            raise UsageError(f"--set {name}: only parameters can be set "
                             f"(parameters: {' '.join(sys_.params)})")
    fast = fast_form(sys_) if sys_.small_param is not None else sys_
    if args.phi_expr is not None:
        phi = _parse_in(args.phi_expr, fast.context, "--phi-expr")
    else:
        phi, extra, _ = _load_phi(args.phi)
        bound = {k: decimal_to_rational(v) for k, v in extra.get("bindings", {}).items()}
        if bound:
            fast = bind_params(fast, bound, force=True)
            regime = {k: v for k, v in regime.items() if k not in bound}
        try:
            phi = phi.with_vars(fast.context)
        except ContextMismatch as exc:
            raise UsageError(f"--phi: {exc}") from None
    time = args.time or sys_.time
    try:
        verdict = darboux_check(fast, phi, time=time, regime=regime or None)
    except (SingularSlowTime, StructureError) as exc:
        raise MathFailure(str(exc)) from None
    except ValueError as exc:
        raise MathFailure(str(exc)) from None
    print(f"time: {time}")
    if regime:
        print("regime: " + " ".join(f"{k}={_rational_text(v)}" for k, v in regime.items()))
    print(f"lie: {verdict.lie.to_expr()}")
    if isinstance(verdict, Invariant):
        print("Invariant")
        print(f"cofactor: {verdict.cofactor.to_expr()}")
    else:
        print("NotInvariant")
        print(f"remainder: {verdict.remainder.to_expr()}")
        for loc in args.locality or []:
            lp = _parse_in(loc, fast.context, "--locality")
            lp = lp.subs(regime) if regime else lp
            ok = verdict.locally_invariant_on(lp)
            print(f"locally invariant on {loc} = 0: {'yes' if ok else 'no'}")
    return EXIT_OK


def cmd_restrict(args) -> int:
    phi, extra, text = _load_phi(args.phi)
    bound = extra.get("bindings", {})
    settings = _parse_assignments(args.set, "--set")
    for name in settings:
        if name not in phi.vars:
            raise UsageError(f"--set {name}: not a variable of the document ({' '.join(phi.vars)})")
    prov = extra.get("provenance", {})
    m = ManifoldEq(phi=phi, system_ref=prov.get("system", ""),
                   lie_order=prov.get("lie_order", 0),
                   substitutions=tuple(tuple(s) for s in prov.get("substitutions", [])),
                   origin=prov.get("origin", "document"),
                   stripped=tuple((a, b) for a, b in prov.get("stripped", [])),
                   jet=prov.get("jet", "tlsa"))
    r = restrict(m, settings) if settings else m
    out_extra = dict(extra)
    out_extra["provenance"] = r.provenance()
    doc = poly_to_document(r.phi, out_extra)
    outputs = []
    if args.out:
        _atomic_write(Path(args.out), doc)
        outputs.append(Path(args.out))
    state = extra.get("state") or [v for v in r.phi.vars]
    # the document itself goes to stdout when there is nowhere else to put it
    to_stdout = args.out is None and not args.factors
    report = sys.stderr if to_stdout else sys.stdout
    print(f"terms: {len(r.phi)}", file=report)
    print("degrees: " + _profile_line(r.phi, [v for v in state if v in r.phi.vars]), file=report)
    if args.factors:
        ctx = tuple(r.phi.vars) + tuple(k for k in bound if k not in r.phi.vars)
        values = {k: decimal_to_rational(v) for k, v in bound.items()}
        cands = []
        for f in args.factors:
            p = _parse_in(f, ctx, "--factors")
            if values:
                p = p.subs(values)
            p = p.subs({k: v for k, v in settings.items() if k in p.vars}) if settings else p
            try:
                p = p.with_vars(r.phi.vars)
            except ContextMismatch as exc:
                raise UsageError(f"--factors {f!r}: {exc}") from None
            cands.append(p)
        try:
            fc = factor_check(r, cands, state_vars=[v for v in state if v in r.phi.vars])
        except ValueError as exc:
            raise MathFailure(str(exc)) from None
        print(f"exact: {'yes' if fc.exact else 'no'}")
        print(f"state-free quotient: {'yes' if fc.state_free else 'no'}")
        print(f"ok: {'yes' if fc.ok else 'no'}")
        if fc.exact:
            print(f"quotient: {fc.quotient.to_expr()}")
        else:
            print(f"first failing factor: {args.factors[len(fc.remainders) - 1]}")
    elif to_stdout:
        sys.stdout.write(doc)
    if outputs:
        man = _write_manifest(args, outputs[0], {args.phi: text}, settings, outputs)
        print(f"wrote {outputs[0]}")
        print(f"manifest {man}")
    return EXIT_OK


def _parse_ic(text: str, n: int) -> list[float]:
    try:
        ic = [float(s) for s in text.split(",")]
    except ValueError:
        raise UsageError(f"--ic: expected {n} comma-separated numbers, got {text!r}") from None
    if len(ic) != n:
        raise UsageError(f"--ic: expected {n} values, got {len(ic)}")
    return ic


def _check_steps(args):
    if not args.dt > 0:
        raise UsageError("--dt must be positive")
    if not args.tmax > 0:
        raise UsageError("--tmax must be positive")
    if args.sample_every < 1:
        raise UsageError("--sample-every must be at least 1")


def _missing_params(sys_: OdeSystem, bindings) -> list[str]:
    return [p for p in sys_.params if p not in bindings]


def _run_one(sys_: OdeSystem, bindings, ic, tmax, dt, time, sample_every, phi_doc, normalize):
    traj = integrate(sys_, bindings, ic, tmax, dt, time=time, sample_every=sample_every)
    if phi_doc is not None:
        m = _manifold_for(traj.system, phi_doc, bindings)
        traj.add_channel("phi", eval_manifold_along(traj, m))
        if normalize:
            traj.add_channel("phi_norm", eval_manifold_along(traj, m, normalize=True))
    return traj


def _manifold_for(fast: OdeSystem, phi_doc: str, bindings) -> ManifoldEq:
    phi, extra = poly_from_document(phi_doc)
    bound = {k: decimal_to_rational(v) for k, v in extra.get("bindings", {}).items()}
    for k, v in bound.items():
        if k in bindings and decimal_to_rational(str(bindings[k])) != v:
            raise UsageError(f"--phi was derived with {k}={_rational_text(v)}, "
                             f"run binds {k}={bindings[k]}")
    prov = extra.get("provenance", {})
    try:
        phi = phi.with_vars(fast.context)
    except ContextMismatch as exc:
        raise UsageError(f"--phi: {exc}") from None
    return ManifoldEq(phi=phi, system_ref=prov.get("system", ""),
                      stripped=tuple((a, b) for a, b in prov.get("stripped", [])),
                      jet=prov.get("jet", "tlsa"))


def cmd_integrate(args) -> int:
    sys_, path, text = _load_system(args.system)
    _check_steps(args)
    bindings = _parse_assignments(args.bind, "--bind")
    missing = _missing_params(sys_, bindings)
    if missing:
        raise UsageError(f"--bind: missing value for parameter(s) {' '.join(missing)}")
    extra = [k for k in bindings if k not in sys_.params]
    if extra:
        raise UsageError(f"--bind: unknown parameter(s) {' '.join(extra)}")
    ic = _parse_ic(args.ic, sys_.dim)
    phi_doc = _read(Path(args.phi)) if args.phi else None
    if phi_doc is not None:
        _load_phi(args.phi)
    time = args.time or sys_.time
    try:
        traj = _run_one(sys_, bindings, ic, args.tmax, args.dt, time, args.sample_every,
                        phi_doc, args.normalize)
    except Divergence as exc:
        raise MathFailure(f"integration diverged: {exc}") from None
    except UnboundParameter as exc:
        raise UsageError(str(exc)) from None
    csv_text = write_trajectory_csv(traj)
    out = Path(args.out)
    _atomic_write(out, csv_text)
    inputs = {str(path): text}
    if args.phi:
        inputs[args.phi] = phi_doc
    man = _write_manifest(args, out, inputs, bindings, [out])
    print(f"samples: {len(traj.times)}")
    print(f"final state: " + " ".join(f"{v}={x:.6g}" for v, x in zip(traj.state_vars, traj.states[-1])))
    if "phi" in traj.channels:
        print(f"max |phi|: {max(abs(traj.channels['phi'])):.6g}")
    if "phi_norm" in traj.channels:
        print(f"max normalized |phi|: {max(abs(traj.channels['phi_norm'])):.6g}")
    print(f"wrote {out}")
    print(f"manifest {man}")
    return EXIT_OK


def _sweep_point(payload):
    (sys_, bindings, ic, tmax, dt, time, sample_every, phi_doc) = payload
    traj = _run_one(sys_, bindings, ic, tmax, dt, time, sample_every, phi_doc, True)
    return (float(max(abs(traj.channels["phi"]))), float(max(abs(traj.channels["phi_norm"]))))


def cmd_sweep(args) -> int:
    sys_, path, text = _load_system(args.system)
    _check_steps(args)
    if not args.vary or "=" not in args.vary:
        raise UsageError("--vary expects name=v1,v2,...")
    name, values = args.vary.split("=", 1)
    name = name.strip()
    labels = [s.strip() for s in values.split(",") if s.strip()]
    if not labels:
        raise UsageError("--vary: no values given")
    if name not in sys_.params:
        raise UsageError(f"--vary: unknown parameter {name!r}")
    bindings = _parse_assignments(args.bind, "--bind")
    missing = [p for p in _missing_params(sys_, bindings) if p != name]
    if missing:
        raise UsageError(f"--bind: missing value for parameter(s) {' '.join(missing)}")
    try:
        vals = [decimal_to_rational(v) for v in labels]
    except ValueError as exc:
        raise UsageError(f"--vary: {exc}") from None
    ic = _parse_ic(args.ic, sys_.dim)
    time = args.time or sys_.time
    if args.phi:
        phi_doc = _read(Path(args.phi))
        _load_phi(args.phi)
    else:
        # derive with everything but the varied parameter bound
        fixed = {k: v for k, v in bindings.items() if k != sys_.small_param}
        try:
            m = curvature_manifold(bind_params(sys_, fixed), jet=args.jet)
        except (StructureError, ArithmeticError) as exc:
            raise MathFailure(str(exc)) from None
        phi_doc = poly_to_document(m.phi, {"provenance": m.provenance(), "bindings":
                                           {k: _rational_text(v) for k, v in sorted(fixed.items())}})
    payloads = []
    for v in vals:
        b = dict(bindings)
        b[name] = v
        payloads.append((sys_, b, ic, args.tmax, args.dt, time, args.sample_every, phi_doc))
    try:
        if args.jobs > 1 and len(payloads) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                results = list(ex.map(_sweep_point, payloads))
        else:
            results = [_sweep_point(p) for p in payloads]
    except Divergence as exc:
        raise MathFailure(f"integration diverged: {exc}") from None
    rows = [(lab, a, b) for lab, (a, b) in zip(labels, results)]
    out = Path(args.out)
    _atomic_write(out, write_sweep_csv(rows))
    man = _write_manifest(args, out, {str(path): text}, bindings, [out])
    for lab, a, b in rows:
        print(f"{name}={lab}: max|phi|={a:.6g} max normalized|phi|={b:.6g}")
    if len(rows) > 1:
        order = sorted(zip(vals, (r[2] for r in rows)), key=lambda t: t[0])
        mono = all(a[1] < b[1] for a, b in zip(order, order[1:]))
        print(f"max normalized residual strictly decreasing as {name} decreases: "
              f"{'yes' if mono else 'no'}")
    print(f"wrote {out}")
    print(f"manifest {man}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flowcurv", description="Flow curvature manifolds of polynomial ODE systems.")
    p.add_argument("--version", action="version", version=f"flowcurv {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    d = sub.add_parser("derive", help="curvature manifold of a system file")
    d.add_argument("system", help="system file (shipped model files are found by name)")
    d.add_argument("--lie-order", type=int, default=0, help="Lie derivatives to apply (default 0)")
    d.add_argument("--out", help="output document (default <system>.phi.json)")
    d.add_argument("--jet", choices=("tlsa", "exact"), default="tlsa",
                   help="determinant rows: J^k X' (tlsa, default) or exact time derivatives")
    d.add_argument("--method", choices=("laplace", "bareiss"), default="laplace",
                   help="determinant algorithm")
    d.add_argument("--bind", action="append", metavar="NAME=VALUE",
                   help="bind a parameter to an exact value before deriving")
    d.add_argument("--time", choices=("fast", "slow"),
                   help="time scale for --lie-order derivatives (default fast)")
    d.add_argument("--no-strip", action="store_true",
                   help="keep the small-parameter power in the determinant")
    d.add_argument("--max-terms", type=int, default=DEFAULT_MAX_TERMS,
                   help=f"size guard on the predicted term count (default {DEFAULT_MAX_TERMS})")
    d.add_argument("--force", action="store_true", help="ignore the size guard")
    d.add_argument("--manifest", help="manifest path (default <out>.manifest.json)")
    d.set_defaults(func=cmd_derive)

    b = sub.add_parser("darboux", help="Darboux invariance check of a polynomial")
    b.add_argument("system", help="system file")
    b.add_argument("--phi", help="polynomial document")
    b.add_argument("--phi-expr", help="polynomial in the system language")
    b.add_argument("--set", action="append", metavar="NAME=VALUE",
                   help="parameter value applied to the system and phi (e.g. delta=0)")
    b.add_argument("--time", choices=("fast", "slow"),
                   help="time scale of the Lie derivative (default: the file's)")
    b.add_argument("--locality", action="append", metavar="EXPR",
                   help="report whether the remainder vanishes on EXPR = 0")
    b.set_defaults(func=cmd_darboux)

    r = sub.add_parser("restrict", help="substitute values into a manifold document")
    r.add_argument("--phi", required=True, help="polynomial document")
    r.add_argument("--set", action="append", metavar="NAME=VALUE", help="substitution")
    r.add_argument("--factors", nargs="+", metavar="EXPR", help="candidate factors to divide out")
    r.add_argument("--out", help="restricted document (default: stdout when no --factors)")
    r.add_argument("--manifest", help="manifest path (default <out>.manifest.json)")
    r.set_defaults(func=cmd_restrict)

    i = sub.add_parser("integrate", help="RK4 trajectory to CSV")
    i.add_argument("system", help="system file")
    i.add_argument("--bind", action="append", metavar="NAME=VALUE", help="parameter value")
    i.add_argument("--ic", required=True, help="initial state, comma separated")
    i.add_argument("--tmax", type=float, required=True, help="final time")
    i.add_argument("--dt", type=float, required=True, help="step size")
    i.add_argument("--time", choices=("fast", "slow"),
                   help="integration time scale (default: the file's)")
    i.add_argument("--sample-every", type=int, default=1, help="keep every Nth step")
    i.add_argument("--phi", help="manifold document; adds a phi channel")
    i.add_argument("--normalize", action="store_true", help="also add a normalized phi channel")
    i.add_argument("--out", required=True, help="trajectory CSV")
    i.add_argument("--manifest", help="manifest path (default <out>.manifest.json)")
    i.set_defaults(func=cmd_integrate)

    s = sub.add_parser("sweep", help="residual summary over parameter values")
    s.add_argument("system", help="system file")
    s.add_argument("--vary", help="NAME=v1,v2,... values to sweep")
    s.add_argument("--bind", action="append", metavar="NAME=VALUE", help="fixed parameter value")
    s.add_argument("--ic", required=True, help="initial state, comma separated")
    s.add_argument("--tmax", type=float, required=True, help="final time")
    s.add_argument("--dt", type=float, required=True, help="step size")
    s.add_argument("--time", choices=("fast", "slow"),
                   help="integration time scale (default: the file's)")
    s.add_argument("--sample-every", type=int, default=10, help="keep every Nth step (default 10)")
    s.add_argument("--phi", help="manifold document (default: derived from the system)")
    s.add_argument("--jet", choices=("tlsa", "exact"), default="tlsa",
                   help="determinant rows when phi is derived here")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.add_argument("--out", required=True, help="summary CSV")
    s.add_argument("--manifest", help="manifest path (default <out>.manifest.json)")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    args.argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"flowcurv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseFailure as exc:
        print(f"flowcurv {args.command}: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except MathFailure as exc:
        print(f"flowcurv {args.command}: {exc}", file=sys.stderr)
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
