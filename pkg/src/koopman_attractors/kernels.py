"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``KOOPATTR_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback
if os.environ.get("KOOPATTR_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _fallback

hilmy_advance = _impl.hilmy_advance
hilmy_tail_atoms = _impl.hilmy_tail_atoms
greedy_net = _impl.greedy_net
decimate = _impl.decimate


def implementations():
    """Both implementations keyed by backend name (compiled only if built)."""
    out = {"python": _fallback}
    try:
        from . import _kernels
        out["compiled"] = _kernels
    except ImportError:  # pragma: no cover
        pass
    return out
