"""Hot loops behind one interface, backed by numba when available.

Set ``SIGNEDBALL_DISABLE_NUMBA=1`` to force the pure-numpy path. Both backends expose the
same functions; ``get_backend(name)`` returns either explicitly.
"""

import logging
import os
from types import SimpleNamespace

from . import _numpy

log = logging.getLogger(__name__)

_FUNCS = ("distance", "distance_grad_first", "pair_distances", "project", "exp_map",
          "triple_batch", "apply_update", "mean_distances")

_numpy_backend = SimpleNamespace(name="numpy", triple_batch_parallel=_numpy.triple_batch,
                                 **{f: getattr(_numpy, f) for f in _FUNCS})


def _load_numba():
    try:
        from . import _numba
    except ImportError as exc:  # pragma: no cover - numba is a declared dependency
        log.warning("numba unavailable (%s); using numpy kernels", exc)
        return None
    return SimpleNamespace(name="numba", triple_batch_parallel=_numba.triple_batch_parallel,
                           **{f: getattr(_numba, f) for f in _FUNCS})


def numba_disabled():
    return os.environ.get("SIGNEDBALL_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")


_cache = {}


def get_backend(name=None):
    """Return the kernel namespace ``name`` (``"numba"``/``"numpy"``), or the default one.

    A namespace returned earlier passes through unchanged."""
    if isinstance(name, SimpleNamespace):
        return name
    if name is None:
        name = "numpy" if numba_disabled() else "numba"
    if name == "numpy":
        return _numpy_backend
    if name != "numba":
        raise ValueError(f"unknown backend {name!r}")
    if "numba" not in _cache:
        _cache["numba"] = _load_numba() or _numpy_backend
    return _cache["numba"]
