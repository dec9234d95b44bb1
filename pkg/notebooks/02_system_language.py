# %% [markdown]
# # Describing a system
#
# A system file declares ordered state variables and parameters, optionally a
# small parameter, a time scale and the fast variables, then one equation per
# state variable.

# %%
from flowcurv.models import model_source
from flowcurv.sysdsl import (
    ParseError,
    bind_params,
    parse_system,
    rescale_to_fast_time,
    serialize_system,
)

src = """
state x y
param a
small a
fast  x
dx/dt = -x + y^2
dy/dt = a*(x - y)
"""
s = parse_system(src)
print(s.state_vars, s.params, s.small_param, s.fast_vars)
print(serialize_system(s))

# %% [markdown]
# Errors carry the line and column.

# %%
for bad in ("state x\ndx/dt = 0.5*x", "state x\ndx/dt = x*y", "state x y\ndx/dt = x"):
    try:
        parse_system(bad)
    except ParseError as exc:
        print(type(exc).__name__, "->", exc)

# %% [markdown]
# The shipped conservative model is written in slow time.  The library works
# with the fast-time form, obtained by multiplying the slow equations by the
# small parameter.

# %%
print(model_source("conservative"))
slow = parse_system(model_source("conservative"))
fast = rescale_to_fast_time(slow)
for var in fast.state_vars:
    print(f"d{var}/dt =", fast.rhs_of(var).to_expr())

# %% [markdown]
# Binding a parameter substitutes an exact value; decimals are read as exact
# rationals.  The bound value is remembered and written as a comment.

# %%
bound = bind_params(fast, {"b": "0.5"})
print(bound.params, bound.bindings)
print(serialize_system(bound).splitlines()[0:3])
