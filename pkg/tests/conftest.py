import functools

import pytest

from flowcurv.curvature import curvature_manifold
from flowcurv.models import conservative_lk, generalized_lk
from flowcurv.sysdsl import bind_params

GEN_BIND = {"kappa": "1/2", "eps": "1/10", "F": "1/10"}
CON_BIND = {"b": "1/2"}


@functools.lru_cache(maxsize=None)
def manifold(model: str, bound: bool, jet: str = "tlsa", strip: bool = True):
    """Cached curvature manifolds of the two LK models."""
    sys = generalized_lk() if model == "generalized" else conservative_lk()
    if bound:
        sys = bind_params(sys, GEN_BIND if model == "generalized" else CON_BIND)
    return sys, curvature_manifold(sys, jet=jet, strip_small=strip)


_BY_DIGEST: dict = {}


def derive_cached(sys):
    """TLSA manifold of an arbitrary system, cached by system digest."""
    key = sys.digest()
    if key not in _BY_DIGEST:
        _BY_DIGEST[key] = curvature_manifold(sys)
    return _BY_DIGEST[key]


@pytest.fixture(scope="session")
def lk_manifold():
    return manifold


_ACCEPTANCE: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
