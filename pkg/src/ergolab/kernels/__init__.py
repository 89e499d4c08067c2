"""Kernel backend selection.

Two interchangeable backends provide the hot loops: a compiled Cython
extension (``_fastk``) and a NumPy reference implementation.  The compiled
backend is preferred when importable; ``ERGOLAB_BACKEND=reference`` or
``ERGOLAB_BACKEND=compiled`` forces a choice.  Within one backend all
results are deterministic; across backends they agree to roughly 1e-10
(summation order differs).
"""

from __future__ import annotations

import os

from . import reference as _reference

_compiled = None
_compiled_error: Exception | None = None
try:
    from . import _fastk as _compiled  # type: ignore[attr-defined]
except Exception as exc:  # pragma: no cover - depends on build environment
    _compiled_error = exc

_forced = os.environ.get("ERGOLAB_BACKEND", "").strip().lower()
if _forced in ("compiled", "fast", "ext"):
    if _compiled is None:  # pragma: no cover
        raise ImportError(
            f"ERGOLAB_BACKEND={_forced!r} but the compiled kernels are unavailable: {_compiled_error}"
        )
    _active = _compiled
elif _forced in ("reference", "ref", "numpy"):
    _active = _reference
elif _forced == "":
    _active = _compiled if _compiled is not None else _reference
else:  # pragma: no cover
    raise ImportError(f"unknown ERGOLAB_BACKEND={_forced!r}")

backend_name: str = _active.BACKEND
twisted_checkpoint_sums = _active.twisted_checkpoint_sums
twisted_sums_multi = _active.twisted_sums_multi
first_diff_profile = _active.first_diff_profile


def available_backends() -> tuple[str, ...]:
    return ("compiled", "reference") if _compiled is not None else ("reference",)


def get_backend(name: str):
    """Return the raw kernel module for an explicitly named backend."""
    if name == "reference":
        return _reference
    if name == "compiled":
        if _compiled is None:
            raise ImportError(f"compiled kernels unavailable: {_compiled_error}")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
