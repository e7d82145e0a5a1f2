"""Sparse recovery of superimposed measurements from a chip vector.

The receiver-side problem: given a noisy length-M reception y and the
signature matrix A, find the sparse coefficient vector x minimizing

    lam * ||x||_1 + 0.5 * ||y - A x||_2^2

by iterative shrinkage (proximal gradient descent), then quantize the
result to decoded (origin, hop, ±1) measurements. A brute-force
minimum-support search over ±1 coefficients is included as a desk-scale
verification oracle; it shares nothing with the shrinkage path.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import comb
from itertools import combinations, product
from typing import NamedTuple, Union

import numpy as np

from ._kernels import backend, ista_gram, ista_numpy
from .sensing import SignatureMatrix, origin_hop

MatrixLike = Union[SignatureMatrix, np.ndarray]


class CapacityError(ValueError):
    """Raised when a brute-force enumeration would be infeasibly large."""


class DecodedMeasurement(NamedTuple):
    """One recovered measurement: origin node id, hop stamp, ±1 value."""

    origin: int
    hop: int
    value: int


@dataclass(frozen=True)
class IstaConfig:
    """Shrinkage solver settings.

    lam: sparsity weight (>= 0).
    max_iters: iteration cap (>= 1).
    tol: relative-change stopping threshold (>= 0).
    step: gradient step size; "auto" uses 1 / sigma_max(A)^2, which
        guarantees monotone descent of the objective.
    """

    lam: float = 0.5
    max_iters: int = 500
    tol: float = 1e-4
    step: Union[float, str] = "auto"

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol < 0:
            raise ValueError(f"tol must be >= 0, got {self.tol}")
        if self.step != "auto":
            if not isinstance(self.step, (int, float)) or self.step <= 0:
                raise ValueError(f'step must be "auto" or > 0, got {self.step!r}')


def soft_threshold(v, theta):
    """Shrinkage kernel sign(v) * max(|v| - theta, 0), elementwise."""
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def _entries(a: MatrixLike) -> np.ndarray:
    if isinstance(a, SignatureMatrix):
        return a.entries
    return np.asarray(a, dtype=np.float64)


def objective(y: np.ndarray, a: MatrixLike, x: np.ndarray, lam: float) -> float:
    """lam * ||x||_1 + 0.5 * ||y - A x||_2^2."""
    ent = _entries(a)
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if ent.shape != (y.shape[0], x.shape[0]):
        raise ValueError(
            f"shape mismatch: A is {ent.shape}, y is {y.shape}, x is {x.shape}"
        )
    resid = y - ent @ x
    return float(lam * np.abs(x).sum() + 0.5 * (resid @ resid))


def largest_singular_value(a: MatrixLike, iters: int = 50, tol: float = 1e-8) -> float:
    """sigma_max by power iteration on A^T A, from a fixed start vector."""
    ent = _entries(a)
    q = ent.shape[1]
    v = np.full(q, 1.0 / np.sqrt(q))
    est = 0.0
    for _ in range(iters):
        w = ent.T @ (ent @ v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        if abs(norm - est) <= tol * norm:
            est = norm
            break
        est = norm
        v = w / norm
    return float(np.sqrt(est))


def _resolve_step(a: MatrixLike, config: IstaConfig) -> float:
    if config.step != "auto":
        return float(config.step)
    if isinstance(a, SignatureMatrix):
        if a._sigma_max is None:
            a._sigma_max = largest_singular_value(a)
        sigma = a._sigma_max
    else:
        sigma = largest_singular_value(a)
    if sigma <= 0.0:
        raise ValueError("cannot auto-step: matrix has zero largest singular value")
    return 1.0 / (sigma * sigma)


def ista_solve(y: np.ndarray, a: MatrixLike, config: IstaConfig,
               with_trace: bool = False):
    """Minimize the shrinkage objective from x = 0.

    Returns the solution vector, or ``(solution, objectives)`` with the
    per-iteration objective values when ``with_trace`` is set (the trace
    path recomputes the objective exactly each iteration and is meant
    for debugging, not the simulation hot loop).
    """
    ent = _entries(a)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != ent.shape[0]:
        raise ValueError(f"y has shape {y.shape}, expected ({ent.shape[0]},)")
    if not np.isfinite(y).all() or not np.isfinite(ent).all():
        raise ValueError("non-finite values in solver input")
    step = _resolve_step(a, config)

    if with_trace:
        return _ista_traced(y, ent, config, step)

    if backend() == "numba":
        if isinstance(a, SignatureMatrix):
            gram = a.gram
        else:
            gram = np.ascontiguousarray(ent.T @ ent)
        c = ent.T @ y
        x, _ = ista_gram(gram, c, config.lam, step, config.tol, config.max_iters)
    else:
        if isinstance(a, SignatureMatrix):
            at = a.entries_t
        else:
            at = np.ascontiguousarray(ent.T)
        x, _ = ista_numpy(at, y, config.lam, step, config.tol, config.max_iters)
    return x


def _ista_traced(y, ent, config, step):
    at = ent.T
    x = np.zeros(ent.shape[1])
    thr = step * config.lam
    objs = [objective(y, ent, x, config.lam)]
    for _ in range(config.max_iters):
        g = x + step * (at @ (y - ent @ x))
        x_new = soft_threshold(g, thr)
        dnorm = float(np.linalg.norm(x_new - x))
        xnorm = float(np.linalg.norm(x))
        x = x_new
        objs.append(objective(y, ent, x, config.lam))
        if dnorm <= config.tol * max(1.0, xnorm):
            break
    return x, np.asarray(objs)


def write_trace_csv(path: str, objectives: np.ndarray) -> None:
    """Dump a per-iteration objective trace for debugging."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective"])
        for i, val in enumerate(objectives):
            w.writerow([i, repr(float(val))])


def quantize_support(x: np.ndarray, tau: float,
                     matrix: SignatureMatrix) -> list[DecodedMeasurement]:
    """Hard-decide the solver output onto the ±1 alphabet.

    Components with |x_i| > tau become decoded measurements carrying
    sign(x_i); everything inside the dead zone is treated as zero.
    """
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    params = matrix.params
    out = []
    for col in np.flatnonzero(np.abs(x) > tau):
        origin, hop = origin_hop(params, int(col))
        out.append(DecodedMeasurement(origin, hop, 1 if x[col] > 0 else -1))
    return out


def brute_force_p0(y: np.ndarray, a: MatrixLike, k_max: int, fit_tol: float,
                   max_combinations: int = 10_000_000) -> np.ndarray:
    """Minimum-support exhaustive search with ±1 coefficients.

    Enumerates every support of size 0..k_max and every ±1 sign pattern
    on it, returning the sparsest x with ||y - A x||_2 <= fit_tol. Ties
    at the winning support size break by smaller residual, then by
    lexicographically smallest support. Verification oracle only: the
    support count C(Q, k_max) must stay within ``max_combinations``.
    """
    ent = _entries(a)
    y = np.asarray(y, dtype=np.float64)
    m, q = ent.shape
    if y.shape != (m,):
        raise ValueError(f"y has shape {y.shape}, expected ({m},)")
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    if comb(q, k_max) > max_combinations:
        raise CapacityError(
            f"C({q}, {k_max}) = {comb(q, k_max)} supports exceed the "
            f"enumeration guard of {max_combinations}"
        )

    if float(np.linalg.norm(y)) <= fit_tol:
        return np.zeros(q)

    chunk = 4096
    for k in range(1, k_max + 1):
        signs = np.array(list(product((1.0, -1.0), repeat=k)))
        best_res = np.inf
        best_combo = None
        best_signs = None
        combos_iter = combinations(range(q), k)
        while True:
            block = []
            for _ in range(chunk):
                c = next(combos_iter, None)
                if c is None:
                    break
                block.append(c)
            if not block:
                break
            idx = np.asarray(block)  # (n_c, k)
            cols = ent[:, idx.ravel()].reshape(m, idx.shape[0], k)
            # candidate receptions for every sign pattern: (s, n_c, m)
            ax = np.einsum("mck,sk->scm", cols, signs)
            resid = np.linalg.norm(y[None, None, :] - ax, axis=2)
            per_combo = resid.min(axis=0)
            c_star = int(np.argmin(per_combo))
            if per_combo[c_star] < best_res:
                best_res = float(per_combo[c_star])
                best_combo = tuple(int(i) for i in idx[c_star])
                best_signs = signs[int(np.argmin(resid[:, c_star])), :]
        if best_res <= fit_tol:
            x = np.zeros(q)
            x[list(best_combo)] = best_signs
            return x

    raise ValueError(
        f"no support of size <= {k_max} fits y within tolerance {fit_tol}"
    )
