"""Hot inner loop of the two-component walk stepper.

Two interchangeable implementations: a numba-jitted scalar loop and a pure
numpy vectorized one. Set QCALAB_NO_NUMBA=1 to force the numpy path; the
numpy path is also selected automatically when numba is unavailable.
`benchmarks/bench_walk.py` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def numba_disabled() -> bool:
    return os.environ.get("QCALAB_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


def active_backend() -> str:
    return "numba" if (HAVE_NUMBA and not numba_disabled()) else "numpy"


def evolve_numpy(psi_plus: np.ndarray, psi_minus: np.ndarray, c: float, s: float, steps: int):
    """Vectorized reference path: roll-based periodic update."""
    pp = psi_plus.astype(np.complex128, copy=True)
    pm = psi_minus.astype(np.complex128, copy=True)
    for _ in range(steps):
        pp, pm = (
            c * np.roll(pp, 1) - 1j * s * pm,
            c * np.roll(pm, -1) - 1j * s * pp,
        )
    return pp, pm


if HAVE_NUMBA:

    @njit(cache=True)
    def _evolve_loop(pp, pm, c, s, steps):  # pragma: no cover - exercised via wrapper
        m = pp.shape[0]
        cur_p = pp.copy()
        cur_m = pm.copy()
        new_p = np.empty_like(cur_p)
        new_m = np.empty_like(cur_m)
        for _ in range(steps):
            for x in range(m):
                xl = x - 1 if x > 0 else m - 1
                xr = x + 1 if x < m - 1 else 0
                new_p[x] = c * cur_p[xl] - 1j * s * cur_m[x]
                new_m[x] = c * cur_m[xr] - 1j * s * cur_p[x]
            cur_p, new_p = new_p, cur_p
            cur_m, new_m = new_m, cur_m
        return cur_p, cur_m

    def evolve_numba(psi_plus, psi_minus, c, s, steps):
        return _evolve_loop(
            psi_plus.astype(np.complex128, copy=False),
            psi_minus.astype(np.complex128, copy=False),
            float(c),
            float(s),
            int(steps),
        )

else:  # pragma: no cover
    evolve_numba = None


def evolve(psi_plus: np.ndarray, psi_minus: np.ndarray, c: float, s: float, steps: int):
    """Run `steps` walk updates with the active backend."""
    if active_backend() == "numba":
        return evolve_numba(psi_plus, psi_minus, c, s, steps)
    return evolve_numpy(psi_plus, psi_minus, c, s, steps)
