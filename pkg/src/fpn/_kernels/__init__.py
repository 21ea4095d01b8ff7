"""Monte Carlo sampling kernels.

Two interchangeable backends execute the same compiled circuit:

* ``numpy``  — blocked, vectorised over trials;
* ``numba``  — JIT-compiled, parallel over trials.

Both draw randomness from the same counter-based generator, a chained
SplitMix64 finalizer::

    r = mix64(mix64(seed ^ MUL1*trial) ^ MUL2*site)

where ``site`` numbers the circuit's random-draw sites sequentially (one per
channel target, channel pair, or noisy measurement).  A draw is a pure
function of ``(seed, trial, site)``, so results are bit-identical across
backends, thread counts, and trial batch sizes.

Select a backend with the ``FPN_BACKEND`` environment variable (``numpy`` or
``numba``); the default is ``numba`` when importable, else ``numpy``.
"""

from __future__ import annotations

import os

__all__ = ["available_backends", "get_backend", "default_backend"]

_cached: dict[str, object] = {}


def available_backends() -> tuple[str, ...]:
    names = ["numpy"]
    try:
        import numba  # noqa: F401
        names.insert(0, "numba")
    except ImportError:
        pass
    return tuple(names)


def default_backend() -> str:
    env = os.environ.get("FPN_BACKEND", "").strip().lower()
    if env:
        if env not in ("numpy", "numba"):
            raise ValueError(f"FPN_BACKEND must be 'numpy' or 'numba', "
                             f"got {env!r}")
        return env
    return available_backends()[0]


def get_backend(name: str | None = None):
    """Return the backend module exposing ``run(compiled, trials, seed)``."""
    name = (name or default_backend()).strip().lower()
    if name in _cached:
        return _cached[name]
    if name == "numpy":
        from fpn._kernels import numpy_backend as mod
    elif name == "numba":
        from fpn._kernels import numba_backend as mod
    else:
        raise ValueError(f"unknown backend {name!r}")
    _cached[name] = mod
    return mod
