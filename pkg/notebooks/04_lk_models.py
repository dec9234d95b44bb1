# %% [markdown]
# # The Lorenz-Krishnamurthy model family
#
# Three variants ship with the package.  The generalized and conservative
# models are both obtained from the original five-mode model by an amplitude
# scaling (`x, y` by the small parameter squared, `u, v, w` by the small
# parameter).

# %%
import time

from flowcurv.curvature import curvature_manifold, singular_approximation
from flowcurv.models import (
    conservative_from_original,
    conservative_lk,
    generalized_from_original,
    generalized_lk,
    known_results,
    original_lk,
    replay,
)

for name, sys in (("original", original_lk()), ("generalized", generalized_lk()),
                  ("conservative", conservative_lk())):
    print(name, sys.params, "small:", sys.small_param)
    for v in sys.state_vars:
        print(f"  d{v}/dt =", sys.rhs_of(v).to_expr())

print(generalized_from_original() == generalized_lk(),
      conservative_from_original() == conservative_lk())

# %% [markdown]
# Singular approximation: solve the fast equations with the small parameter at zero.

# %%
for name, sys in (("generalized", generalized_lk()), ("conservative", conservative_lk())):
    for var, rf in singular_approximation(sys).items():
        print(name, var, "=", f"({rf.numerator.to_expr()}) / ({rf.denominator.to_expr()})")

# %% [markdown]
# Degree profiles of the curvature manifolds with symbolic parameters.  The
# generalized model takes about ten seconds.

# %%
for sys in (conservative_lk(), generalized_lk()):
    t = time.perf_counter()
    m = curvature_manifold(sys)
    prof = m.phi.degree_profile(sys.state_vars)
    print(len(m.phi), "terms", prof, "stripped", m.stripped,
          f"order {m.phi.degree(sys.small_param)} in {sys.small_param}",
          f"{time.perf_counter() - t:.1f} s")

# %% [markdown]
# Every catalogued result can be replayed.  Three factorizations divide
# exactly but leave a cofactor that still depends on the state; two entries
# are advisory (printed formulas that are known not to replay as written).

# %%
cache = {}


def derive(sys):
    key = sys.digest()
    if key not in cache:
        cache[key] = curvature_manifold(sys)
    return cache[key]


for model in ("conservative", "generalized"):
    for entry in known_results(model):
        r = replay(model, entry, derive=derive)
        tag = "advisory" if entry.advisory else ("ok" if r.ok else "FAILS")
        print(f"{model:12s} {entry.label:28s} {tag:8s} {r.detail[:90]}")
