"""Eigenvalues of small dense symmetric matrices.

The solver is a plain cyclic Jacobi iteration.  Matrices here are edge
Laplacians of trees, so they stay small (``m = n - 1``) and well scaled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotSymmetric
from .graph import TreeGraph, graph_laplacian

__all__ = [
    "Spectrum",
    "sym_eigenvalues",
    "lambda_min",
    "algebraic_connectivity",
    "gershgorin_lower_bound",
]

DEFAULT_TOL = 1e-10
MAX_SWEEPS = 100


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    tolerance: float
    sweeps: int = 0

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def sym_eigenvalues(M, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS) -> Spectrum:
    """All eigenvalues of the symmetric matrix ``M``, ascending.

    Sweeps stop once the off-diagonal Frobenius norm drops below ``tol``.  For
    badly scaled input the target is raised to a few ulps of ``||M||_F``,
    below which no rotation can make progress.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.array(M, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {a.shape}")
    k = a.shape[0]
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if not np.all(np.isfinite(a)):
        raise NotSymmetric("matrix has non-finite entries")
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12 * max(scale, 1.0):
        raise NotSymmetric("matrix is not symmetric")
    if k == 1:
        return Spectrum(np.array([a[0, 0]]), 0.0, 0)
    a = 0.5 * (a + a.T)

    target = max(tol, 64 * np.finfo(float).eps * float(np.linalg.norm(a)))
    off = _off_norm(a)
    sweeps = 0
    while off >= target:
        if sweeps >= max_sweeps:
            raise NoConvergence(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off:.3e})"
            )
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J, rotating rows and columns p, q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
        sweeps += 1
        off = _off_norm(a)
    return Spectrum(np.sort(np.diag(a).copy()), off, sweeps)


def lambda_min(M, tol: float = DEFAULT_TOL) -> float:
    return float(sym_eigenvalues(M, tol).eigenvalues[0])


def algebraic_connectivity(g: TreeGraph) -> float:
    """Second-smallest eigenvalue of ``B B^T``."""
    return float(sym_eigenvalues(graph_laplacian(g)).eigenvalues[1])


def gershgorin_lower_bound(M) -> float:
    """``min_i (|m_ii| - sum_{j != i} |m_ij|)``.  Negative values carry no information."""
    a = np.abs(np.asarray(M, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    diag = np.diag(a)
    return float(np.min(2 * diag - a.sum(axis=1)))
