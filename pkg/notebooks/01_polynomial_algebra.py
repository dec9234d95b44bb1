# %% [markdown]
# # Exact sparse polynomials
#
# `Poly` stores rational coefficients against a fixed, ordered variable
# context.  Terms iterate in graded reverse lexicographic order, largest first.

# %%
from flowcurv.poly import Poly, divide_exact, poly_from_document, poly_to_document
from flowcurv.sysdsl import parse_expression

ctx = ("x", "y", "u", "v", "w", "eps", "b")
x, y, u, v, w, eps, b = Poly.variables(ctx)

p = (u - w) * (u + w)
print(p.to_expr())
print(p.leading_term())

# %% [markdown]
# Expressions can also be parsed in the system language; the two routes give
# the same object.

# %%
q = parse_expression("(x + b*u*v)^2 + y^2", ctx)
assert q == (x + b * u * v) ** 2 + y**2
print(q.to_expr(), "| degrees:", q.degree_profile(("x", "y", "u", "v", "w")))

# %% [markdown]
# Division by a single polynomial returns quotient and remainder; an exact
# division leaves a zero remainder.

# %%
quo, rem = divide_exact(2 * u * v * w * (u**2 - w**2), u**2 - w**2)
print("quotient:", quo.to_expr(), " remainder:", rem.to_expr())

quo, rem = divide_exact(u**2 + 1, u)
print("quotient:", quo.to_expr(), " remainder:", rem.to_expr())

# %% [markdown]
# Substitution is simultaneous and accepts numbers or polynomials.
# Evaluation is exact.

# %%
swapped = (x * y**2).subs({"x": y, "y": x})
print(swapped.to_expr())
print((u**2 + v**2).evaluate({**{k: 0 for k in ctx}, "u": -2, "v": "197/100"}))

# %% [markdown]
# Polynomials serialize to a canonical JSON document; round trips are byte-exact.

# %%
doc = poly_to_document(q, {"note": "demo"})
print(doc)
again, extra = poly_from_document(doc)
assert again == q and poly_to_document(again, extra) == doc
