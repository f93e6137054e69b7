"""Select the stepping kernel: compiled when available, numpy otherwise.

``LEVICOOL_BACKEND=python`` forces the fallback.
"""

import os

from . import _pykernel

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _pykernel}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

DEFAULT = os.environ.get("LEVICOOL_BACKEND") or ("compiled" if _compiled is not None else "python")
if DEFAULT not in BACKENDS:
    raise ImportError(f"LEVICOOL_BACKEND={DEFAULT!r} is not available; have {sorted(BACKENDS)}")


def get_kernel(name=None):
    name = name or DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}") from None


def available():
    return sorted(BACKENDS)
