"""Lawson-Hanson active-set solver for nonnegative least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure


@dataclass(frozen=True, eq=False)
class NnlsSolution:
    coefficients: np.ndarray
    residual_norm: float
    active_set: tuple  # indices with strictly positive coefficients
    iterations: int

    @property
    def all_zero(self):
        return not self.active_set


def nnls(A, b, max_outer=None):
    """Solve ``min ||A x - b||^2`` subject to ``x >= 0``.

    Parameters
    ----------
    A : array_like, shape (n, K)
    b : array_like, shape (n,)
    max_outer : int, optional
        Bound on the number of outer (variable-adding) iterations, ``3 * K``
        by default. Exceeding it raises :class:`NumericalFailure`.

    Returns
    -------
    NnlsSolution
        The zero vector is a legal answer; check ``all_zero``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] != b.shape[0] or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"incompatible shapes A{A.shape}, b{b.shape}")
    if not (np.isfinite(A).all() and np.isfinite(b).all()):
        raise ValueError("nnls inputs must be finite")
    n, K = A.shape
    max_outer = 3 * K if max_outer is None else max_outer
    tol = 10 * np.finfo(float).eps * max(n, K) * max(1.0, np.abs(A).max()) * max(1.0, np.abs(b).max())

    x = np.zeros(K)
    passive = np.zeros(K, dtype=bool)
    w = A.T @ b
    outer = 0
    while (~passive).any() and w[~passive].max() > tol:
        outer += 1
        if outer > max_outer:
            raise NumericalFailure(f"NNLS exceeded {max_outer} outer iterations")
        j = np.flatnonzero(~passive)[np.argmax(w[~passive])]
        passive[j] = True
        while True:
            s = np.zeros(K)
            s[passive] = np.linalg.lstsq(A[:, passive], b, rcond=None)[0]
            if s[passive].min() > 0:
                break
            # step back toward x until the first passive variable hits zero
            shrink = passive & (s <= 0)
            step = np.min(x[shrink] / (x[shrink] - s[shrink]))
            x = x + step * (s - x)
            passive &= x > tol
            x[~passive] = 0.0
            if not passive.any():
                s = np.zeros(K)
                break
        x = s
        w = A.T @ (b - A @ x)

    resid = float(np.linalg.norm(A @ x - b))
    return NnlsSolution(x, resid, tuple(int(i) for i in np.flatnonzero(x > 0)), outer)
