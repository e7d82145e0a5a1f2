"""Iterative shrinkage inner loops, JIT-compiled when possible.

Two interchangeable implementations of the same update rule

    x <- shrink(x + step * A^T (y - A x), step * lam),    x_0 = 0,

stopping when ||x_new - x||_2 <= tol * max(1, ||x||_2) or at max_iters:

* ``ista_gram``: numba ``@njit`` kernel (default when numba imports
  cleanly). Works on the Gram matrix G = A^T A and correlation
  c = A^T y, tracking u = G x incrementally over the few coordinates
  the shrinkage actually moves; the iterate stays sparse, so this is
  much cheaper than dense products.
* ``ista_numpy``: vectorized pure-numpy fallback on A^T directly,
  maintaining the residual y - A x.

Set the environment variable ``CSFLOOD_NUMBA=0`` before import to force
the numpy path. ``backend()`` reports which one is active;
``benchmarks/bench_ista.py`` times both on representative sizes.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_VAR = "CSFLOOD_NUMBA"


def _env_wants_numba() -> bool:
    return os.environ.get(_ENV_VAR, "1").strip().lower() not in ("0", "false", "off", "no")


def ista_numpy(at: np.ndarray, y: np.ndarray, lam: float, step: float,
               tol: float, max_iters: int) -> tuple[np.ndarray, int]:
    """Pure-numpy shrinkage loop. ``at`` is the (Q, M) transpose of the
    sensing matrix. Returns (solution, iterations used)."""
    q = at.shape[0]
    x = np.zeros(q)
    r = y.astype(np.float64, copy=True)
    thr = step * lam
    n_it = 0
    for it in range(max_iters):
        g = x + step * (at @ r)
        x_new = np.sign(g) * np.maximum(np.abs(g) - thr, 0.0)
        dx = x_new - x
        dnorm = float(np.sqrt(dx @ dx))
        xnorm = float(np.sqrt(x @ x))
        x = x_new
        r -= dx @ at
        n_it = it + 1
        if dnorm <= tol * max(1.0, xnorm):
            break
    return x, n_it


def _gram_loops(gram, c, lam, step, tol, max_iters):
    # Same update as ista_numpy via A^T(y - Ax) = c - Gx, with u = Gx
    # maintained incrementally over the coordinates that moved.
    q = c.shape[0]
    x = np.zeros(q)
    u = np.zeros(q)
    moved = np.empty(q, dtype=np.int64)
    delta = np.empty(q)
    thr = step * lam
    n_it = 0
    for it in range(max_iters):
        dnorm2 = 0.0
        xnorm2 = 0.0
        n_moved = 0
        for i in range(q):
            g = x[i] + step * (c[i] - u[i])
            if g > thr:
                xn = g - thr
            elif g < -thr:
                xn = g + thr
            else:
                xn = 0.0
            d = xn - x[i]
            if d != 0.0:
                moved[n_moved] = i
                delta[n_moved] = d
                n_moved += 1
                dnorm2 += d * d
            xnorm2 += x[i] * x[i]
            x[i] = xn
        for t in range(n_moved):
            row = gram[moved[t]]
            d = delta[t]
            for i in range(q):
                u[i] += row[i] * d
        n_it = it + 1
        if np.sqrt(dnorm2) <= tol * max(1.0, np.sqrt(xnorm2)):
            break
    return x, n_it


_BACKEND = "numpy"
_gram_jit = None

if _env_wants_numba():
    try:
        import numba

        _gram_jit = numba.njit(cache=True, fastmath=True)(_gram_loops)
        _BACKEND = "numba"
    except ImportError:
        _BACKEND = "numpy"


def backend() -> str:
    """Which inner-loop implementation is active: 'numba' or 'numpy'."""
    return _BACKEND


def ista_gram(gram: np.ndarray, c: np.ndarray, lam: float, step: float,
              tol: float, max_iters: int) -> tuple[np.ndarray, int]:
    """Gram-form shrinkage loop (JIT-compiled when numba is active)."""
    if _gram_jit is not None:
        return _gram_jit(gram, c, float(lam), float(step), float(tol), int(max_iters))
    return _gram_loops(gram, c, lam, step, tol, max_iters)
