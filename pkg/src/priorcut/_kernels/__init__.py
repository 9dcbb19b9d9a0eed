"""Solver kernel selection: compiled extension when built, NumPy otherwise.

``PRIORCUT_FORCE_PYTHON_KERNELS=1`` in the environment pins the pure-Python
kernels (used by the benchmark and the cross-implementation tests).
"""

from __future__ import annotations

import os

from priorcut._kernels import _solve_py

if os.environ.get("PRIORCUT_FORCE_PYTHON_KERNELS") == "1":
    _impl = _solve_py
else:
    try:
        from priorcut._kernels import _solve_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _solve_py

BACKEND: str = _impl.BACKEND
bcd_sweep = _impl.bcd_sweep
greedy_sweep = _impl.greedy_sweep
lifted_objective = _solve_py.lifted_objective


def available_backends() -> dict:
    """Importable kernel modules keyed by backend name."""
    backends = {_solve_py.BACKEND: _solve_py}
    try:
        from priorcut._kernels import _solve_cy

        backends[_solve_cy.BACKEND] = _solve_cy
    except ImportError:
        pass
    return backends
