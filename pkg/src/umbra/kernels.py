"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy twins
are used.  Set ``UMBRA_BACKEND=python`` to force the fallback.
"""

import logging
import os

from umbra import _kernels_py

logger = logging.getLogger(__name__)

BACKENDS = {"python": _kernels_py}

try:
    from umbra import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["cython"] = _compiled


def get_backend(name: str | None = None):
    if name is None:
        name = os.environ.get("UMBRA_BACKEND", "cython" if _compiled is not None else "python")
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}") from None


_impl = get_backend()
BACKEND = "cython" if _impl is _compiled else "python"
if BACKEND == "python":
    logger.debug("using pure-python kernels")

slic_assign = _impl.slic_assign
lbp_codes = _impl.lbp_codes
manhattan_distance = _impl.manhattan_distance
equal_components = _impl.equal_components
merge_fragments = _impl.merge_fragments

__all__ = ["slic_assign", "lbp_codes", "manhattan_distance", "equal_components", "merge_fragments"]
