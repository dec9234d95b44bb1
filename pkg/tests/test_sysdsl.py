import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowcurv.models import conservative_lk, generalized_lk, load_model_file, model_source
from flowcurv.poly import Poly
from flowcurv.sysdsl import (
    DuplicateDeclaration,
    DuplicateEquation,
    InvalidSystem,
    LexError,
    MissingEquation,
    NonPolynomial,
    ParseError,
    UndeclaredVariable,
    bind_params,
    decimal_to_rational,
    parse_expression,
    parse_system,
    rename_vars,
    rescale_to_fast_time,
    serialize_system,
)

GEN_CTX = ("x", "y", "u", "v", "w", "delta", "kappa", "eps", "F")


def test_minimal_system():
    s = parse_system("state x\nparam\ndx/dt = -x")
    assert s.state_vars == ("x",) and s.params == ()
    assert s.rhs[0] == Poly.from_terms(("x",), {(1,): -1})
    assert s.time == "fast" and s.small_param is None


def test_undeclared_variable_names_line():
    with pytest.raises(UndeclaredVariable) as exc:
        parse_system("state x\n\ndx/dt = x*y\n")
    assert exc.value.name == "y"
    assert exc.value.line == 3
    assert "line 3" in str(exc.value) and "y" in str(exc.value)


def test_generalized_file_matches_hand_built_rhs():
    s = load_model_file("generalized")
    x, y, u, v, w, d, k, e, F = Poly.variables(GEN_CTX)
    want = (
        -y - k * x,
        x + e * u * v - k * y,
        d * (-v * w + d * e * v * y - d * u),
        d * (u * w - d * e * u * y - d * v + F),
        -d * (u * v + d * w),
    )
    assert s.rhs == want
    assert s.small_param == "delta" and s.fast_vars == ("x", "y")


def test_spec_listing_parses_to_generalized():
    src = """
state  x y u v w          # ordered state variables
param  delta kappa eps F  # ordered parameters
small  delta              # optional; must be a param
time   fast               # 'fast' (default) or 'slow'
fast   x y                # optional fast-variable subset
dx/dt = -y - kappa*x
dy/dt = x + eps*u*v - kappa*y
du/dt = delta*(-(v*w) + delta*eps*v*y - delta*u)
dv/dt = delta*(u*w - delta*eps*u*y - delta*v + F)
dw/dt = -delta*(u*v + delta*w)
"""
    assert parse_system(src) == generalized_lk()


def test_equations_in_any_order():
    a = parse_system("state x y\ndx/dt = y\ndy/dt = -x\n")
    b = parse_system("state x y\ndy/dt = -x\ndx/dt = y\n")
    assert a == b


@pytest.mark.parametrize("src, err", [
    ("state x\ndx/dt = 0.5*x", LexError),
    ("state x\ndx/dt = x $ 2", LexError),
    ("state x x\ndx/dt = x", DuplicateDeclaration),
    ("state x\nparam x\ndx/dt = x", DuplicateDeclaration),
    ("state x\nstate y\ndx/dt = x", DuplicateDeclaration),
    ("state x\ndx/dt = x\ndx/dt = -x", DuplicateEquation),
    ("state x y\ndx/dt = x", MissingEquation),
    ("state x y\ndx/dt = x/y\ndy/dt = 1", NonPolynomial),
    ("state x\ndx/dt = x/0", NonPolynomial),
    ("state x\ndx/dt = x^y", NonPolynomial),
    ("state x\ndx/dt = x^-1", NonPolynomial),
    ("state x\ndx/dt = x^2^2", ParseError),
    ("state x\ndx/dt = (x + 1", ParseError),
    ("state x\ndx/dt = 2 x", ParseError),
    ("state x\ndz/dt = x\ndx/dt = x", UndeclaredVariable),
    ("state x\nsmall e\ndx/dt = x", UndeclaredVariable),
    ("state x\nparam e\ntime slow\ndx/dt = x", ParseError),
    ("state x\nbogus q\ndx/dt = x", ParseError),
])
def test_parse_errors(src, err):
    with pytest.raises(err):
        parse_system(src)


def test_error_columns():
    with pytest.raises(LexError) as exc:
        parse_system("state x\ndx/dt = 1.5*x")
    assert (exc.value.line, exc.value.col) == (2, 9)


def test_rational_literals_and_precedence():
    ctx = ("x",)
    assert parse_expression("1/2*x", ctx) == Poly(ctx, {(1,): "1/2"})
    assert parse_expression("-x^2", ctx) == Poly(ctx, {(2,): -1})
    assert parse_expression("(x+1)^2/4", ctx) == Poly(ctx, {(2,): "1/4", (1,): "1/2", (0,): "1/4"})
    assert parse_expression("2-3-4", ctx) == Poly.constant(ctx, -5)
    assert parse_expression("x^0", ctx) == Poly.constant(ctx, 1)


def test_slow_time_files_rescale_to_fast_models():
    assert rescale_to_fast_time(load_model_file("generalized_slow")) == generalized_lk()
    assert rescale_to_fast_time(load_model_file("conservative")) == conservative_lk()


def test_conservative_slow_form_rhs():
    s = conservative_lk(time="slow")
    ctx = s.context
    assert s.rhs_of("u") == parse_expression("-v*w + b*eps*v*y", ctx)
    f = rescale_to_fast_time(s)
    assert f.rhs_of("x") == s.rhs_of("x")
    assert f.rhs_of("u") == parse_expression("eps*(-v*w + b*eps*v*y)", ctx)


def test_rescale_is_idempotent():
    g = generalized_lk()
    assert rescale_to_fast_time(g) is g
    once = rescale_to_fast_time(load_model_file("conservative"))
    assert rescale_to_fast_time(once) == once
    with pytest.raises(InvalidSystem):
        rescale_to_fast_time(parse_system("state x\ndx/dt = x"))


def test_bind_params():
    g = load_model_file("generalized_slow")
    b = bind_params(g, {"kappa": "1/2"})
    assert "kappa" not in b.params
    assert b.rhs_of("x") == parse_expression("-y - 1/2*x", b.context)
    assert bind_params(g, {}) is g
    with pytest.raises(InvalidSystem):
        bind_params(g, {"delta": 0})
    with pytest.raises(InvalidSystem):
        bind_params(g, {"nope": 1})
    forced = bind_params(g, {"delta": "1/3"}, force=True)
    assert forced.small_param is None and forced.time == "fast"


def test_binding_kappa_F_does_not_give_conservative():
    # the Rossby damping terms -delta^2 u etc. survive; see the route below
    b = bind_params(generalized_lk(), {"kappa": 0, "F": 0})
    b = rename_vars(b, {"eps": "b", "delta": "eps"})
    target = conservative_lk()
    assert b.params == ("eps", "b")
    ctx = b.context
    diff = b.rhs_of("u") - target.rhs_of("u").with_vars(ctx)
    assert diff == parse_expression("-eps^2*u", ctx)


def test_serialize_round_trip_on_shipped_files():
    for name in ("generalized", "generalized_slow", "conservative", "original"):
        s = load_model_file(name)
        text = serialize_system(s)
        again = parse_system(text)
        assert again == s
        assert serialize_system(again) == text


def test_serialize_records_bindings_as_comments():
    s = bind_params(conservative_lk(), {"b": "1/2"})
    text = serialize_system(s)
    assert "# bound b = 1/2" in text
    assert parse_system(text).params == ("eps",)


names = st.sampled_from(["a", "b", "c"])


@st.composite
def small_systems(draw):
    n = draw(st.integers(1, 3))
    state = ["x", "y", "z"][:n]
    params = draw(st.lists(names, unique=True, max_size=2))
    ctx = tuple(state + params)
    rows = []
    for _ in state:
        terms = draw(st.dictionaries(
            st.tuples(*[st.integers(0, 2)] * len(ctx)),
            st.fractions(min_value=-4, max_value=4, max_denominator=3), max_size=4))
        rows.append(Poly(ctx, terms).to_expr())
    src = f"state {' '.join(state)}\nparam {' '.join(params)}\n"
    src += "".join(f"d{v}/dt = {r}\n" for v, r in zip(state, rows))
    return src


@settings(max_examples=60, deadline=None)
@given(small_systems())
def test_parse_serialize_parse_is_stable(src):
    s = parse_system(src)
    assert parse_system(serialize_system(s)) == s


def test_decimal_to_rational():
    assert decimal_to_rational("0.1") == decimal_to_rational("1/10")
    assert decimal_to_rational("-1.97") == decimal_to_rational("-197/100")
    assert decimal_to_rational("5e-2") == decimal_to_rational("1/20")
    assert decimal_to_rational("3") == 3
    with pytest.raises(ValueError):
        decimal_to_rational("abc")


def test_model_source_is_text():
    assert model_source("conservative").startswith("#")
    with pytest.raises(KeyError):
        model_source("nine_mode")
