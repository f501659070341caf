"""Kernel backend selection: compiled Cython core with a NumPy fallback.

The compiled backend is preferred when importable; set TROCARDOCK_KERNELS to
``python`` or ``compiled`` to force one. ``use_backend`` switches at runtime
(replay uses it to re-run a session on the backend that recorded it).
"""

from __future__ import annotations

import os

from . import numpy_ref

_IMPLS = {"python": numpy_ref}

try:
    from . import _fastkin  # type: ignore[attr-defined]

    _IMPLS["compiled"] = _fastkin
except ImportError:
    _fastkin = None

_requested = os.environ.get("TROCARDOCK_KERNELS", "auto")
if _requested == "auto":
    _active = _IMPLS.get("compiled", numpy_ref)
elif _requested in _IMPLS:
    _active = _IMPLS[_requested]
else:
    raise ImportError(
        f"TROCARDOCK_KERNELS={_requested!r} not available; "
        f"choose from {sorted(_IMPLS)} or 'auto'"
    )


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def active_backend() -> str:
    return _active.BACKEND_NAME


def use_backend(name: str) -> None:
    """Switch the kernel backend for subsequent calls."""
    global _active
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} not available; have {sorted(_IMPLS)}")
    _active = _IMPLS[name]


def get_impl(name: str):
    """Raw backend module (used by the parity tests and the benchmark)."""
    return _IMPLS[name]


def chain_frames(parent_R, parent_p, axis, q):
    return _active.chain_frames(parent_R, parent_p, axis, q)


def point_jacobian(frames_R, frames_p, axis, ref_point, n_active):
    return _active.point_jacobian(frames_R, frames_p, axis, ref_point, n_active)


def rne(parent_R, parent_p, axis, q, qd, qdd, gravity, mass, com, inertia):
    return _active.rne(parent_R, parent_p, axis, q, qd, qdd, gravity, mass, com, inertia)
