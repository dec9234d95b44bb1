# %% [markdown]
# # The `flowcurv` command
#
# Every subcommand writes its output atomically and a JSON run manifest next
# to it.  Shipped model files are found by name.  Exit codes: 0 success,
# 1 usage, 2 parse error, 3 math error or divergence.

# %%
import subprocess
import sys
import tempfile
from pathlib import Path

work = Path(tempfile.mkdtemp())


def sh(*args):
    r = subprocess.run([sys.executable, "-m", "flowcurv", *args], cwd=work,
                       capture_output=True, text=True)
    print("$ flowcurv", " ".join(args), f"  [exit {r.returncode}]")
    print(r.stdout + r.stderr)


sh("derive", "lk_conservative.ode", "--bind", "b=1/2", "--out", "con.phi.json")
print((work / "con.phi.json.manifest.json").read_text())

# %%
sh("darboux", "lk_conservative.ode", "--phi-expr", "u^2+v^2")
sh("darboux", "lk_generalized.ode", "--phi-expr", "v", "--set", "delta=0")
sh("darboux", "lk_conservative.ode", "--phi-expr",
   "u^2*w^2-u^4+eps^2*v^2*w^2*(w^2-(1+b^2)*u^2)", "--set", "eps=0", "--locality", "u^2-w^2")

# %%
sh("restrict", "--phi", "con.phi.json", "--set", "eps=0",
   "--factors", "u^2-w^2", "v^2+w^2", "(x+b*u*v)^2+y^2")

# %%
sh("integrate", "lk_conservative.ode", "--bind", "b=0.5", "--bind", "eps=0.1",
   "--ic", "2,2,-2,1.97,2", "--tmax", "10", "--dt", "0.001", "--sample-every", "100",
   "--phi", "con.phi.json", "--normalize", "--out", "orbit.csv")
print("\n".join((work / "orbit.csv").read_text().splitlines()[:4]))

# %%
sh("sweep", "lk_conservative.ode", "--vary", "eps=0.2,0.1,0.05", "--bind", "b=1/2",
   "--ic", "1.97,0,-2,1.97,2", "--tmax", "20", "--dt", "0.001", "--sample-every", "20",
   "--jobs", "3", "--out", "sweep.csv")

# %%
sh("integrate", "lk_conservative.ode", "--ic", "2,2,-2,1.97,2", "--tmax", "1", "--dt", "0",
   "--bind", "b=1", "--bind", "eps=1", "--out", "x.csv")
