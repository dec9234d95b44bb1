# %% [markdown]
# # Curvature manifolds and Darboux invariants
#
# For an n-dimensional system the flow curvature manifold is the determinant
# of n jet vectors.  Two choices of rows are available:
#
# * `jet="tlsa"` (default): `X', J X', J^2 X', ...`, the tangent linear
#   system approximation.
# * `jet="exact"`: true time derivatives `X', X'', X''', ...`.

# %%
import sympy

from flowcurv.curvature import (
    Invariant,
    curvature_manifold,
    darboux_check,
    flow_jet,
    lie_derivative,
    determinant,
    tlsa_check,
)
from flowcurv.sysdsl import parse_expression, parse_system

s = parse_system("""
state x y
param eps
small eps
fast x
dx/dt = y - x
dy/dt = -eps*y
""")
m = curvature_manifold(s, strip_small=False)
print("phi =", m.phi.to_expr())

# %% [markdown]
# For a linear system the manifold is the union of the eigendirections;
# sympy confirms the factors.

# %%
print(sympy.factor(m.phi.to_expr().replace("^", "**")))

# %% [markdown]
# With exact jets, the Lie derivative of the determinant equals the determinant
# with the last row replaced by the next derivative.

# %%
q = parse_system("state x y\ndx/dt = x*y - y\ndy/dt = x^2 + 1/2*y")
me = curvature_manifold(q, jet="exact")
jet = flow_jet(q, 3)
print(lie_derivative(q, me).phi == determinant([jet[1], jet[3]]))

# %% [markdown]
# Darboux check: `L phi = k phi` with a polynomial cofactor `k`.

# %%
lv = parse_system("state x y\nparam a\ndx/dt = x*(1 - y)\ndy/dt = y*(x - a)")
r = darboux_check(lv, parse_expression("x^2*y", lv.context))
print(type(r).__name__, "cofactor:", r.cofactor.to_expr())

r = darboux_check(lv, parse_expression("x + y", lv.context))
print(type(r).__name__, "remainder:", r.remainder.to_expr())

# %% [markdown]
# For a linear field the TLSA determinant is invariant with the trace as cofactor.

# %%
lin = parse_system("state x y z\ndx/dt = x + 2*y\ndy/dt = -y + z\ndz/dt = 3*x - 2*z")
r = darboux_check(lin, curvature_manifold(lin))
assert isinstance(r, Invariant)
print("cofactor:", r.cofactor.to_expr())

# %% [markdown]
# `tlsa_check` returns `dJ/dt` and whether it vanishes when the small parameter is zero.

# %%
dJ, flag = tlsa_check(s)
print(flag)
