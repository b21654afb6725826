"""Bounds on the smallest eigenvalue of the weighted edge Laplacian and the
sufficient coupling strength for frequency synchronization.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateEpsilon, SandwichViolation
from .graph import TreeGraph, as_omega, degrees, incidence_matrix, weighted_edge_laplacian
from .spectral import algebraic_connectivity, lambda_min

__all__ = [
    "BoundsReport",
    "delta_omega_max",
    "lower_bound_spectral",
    "lower_bound_degree",
    "upper_bound",
    "sufficient_kappa",
    "bounds_report",
    "placement_sweep",
    "locking_kappa",
]

SANDWICH_SLACK = 1e-9


@dataclass(frozen=True)
class BoundsReport:
    lambda_min_exact: float
    lower_bound_spectral: float
    lower_bound_degree: float
    lower_bound_best: float
    upper_bound: float
    delta_omega_max: float
    epsilon: float
    kappa_sufficient: float

    def to_dict(self) -> dict:
        return asdict(self)


def _edge_ends(g: TreeGraph, w) -> tuple[np.ndarray, np.ndarray]:
    omega = as_omega(w, g.n)
    return omega[g.tails], omega[g.heads]


def delta_omega_max(g: TreeGraph, w) -> float:
    """Largest frequency gap across an edge (not across arbitrary node pairs)."""
    wt, wh = _edge_ends(g, w)
    return float(np.max(np.abs(wt - wh)))


def lower_bound_spectral(g: TreeGraph, w) -> float:
    omega = as_omega(w, g.n)
    return float(omega.min()) * algebraic_connectivity(g)


def lower_bound_degree(g: TreeGraph, w) -> float:
    """``min_k (2 - d_i) w_i + (2 - d_j) w_j`` over edges ``k = (i, j)``; may be negative."""
    omega = as_omega(w, g.n)
    d = degrees(g)
    t, h = g.tails, g.heads
    return float(np.min((2 - d[t]) * omega[t] + (2 - d[h]) * omega[h]))


def upper_bound(g: TreeGraph, w) -> float:
    wt, wh = _edge_ends(g, w)
    return float(np.min(wt + wh))


def _check_epsilon(epsilon: float) -> None:
    if not (0.0 <= epsilon < math.pi / 2):
        raise DegenerateEpsilon(f"epsilon must lie in [0, pi/2), got {epsilon}")


def sufficient_kappa(g: TreeGraph, w, epsilon: float = 0.0, conservative: bool = False) -> float:
    """Coupling that makes the cohesive set forward invariant.

    Uses the exact smallest eigenvalue unless ``conservative`` is set, in which
    case the best of the two lower bounds is used instead (a larger kappa).
    """
    _check_epsilon(epsilon)
    dw = delta_omega_max(g, w)
    if dw == 0.0:
        return 0.0
    if conservative:
        lam = max(lower_bound_spectral(g, w), lower_bound_degree(g, w))
    else:
        lam = lambda_min(weighted_edge_laplacian(g, w))
    return dw / (lam * math.cos(epsilon))


def bounds_report(g: TreeGraph, w, epsilon: float = 0.0) -> BoundsReport:
    _check_epsilon(epsilon)
    lam = lambda_min(weighted_edge_laplacian(g, w))
    lo_i = lower_bound_spectral(g, w)
    lo_ii = lower_bound_degree(g, w)
    best = max(lo_i, lo_ii)
    up = upper_bound(g, w)
    slack = SANDWICH_SLACK * max(1.0, abs(up))
    if not (best <= lam + slack and lam <= up + slack):
        raise SandwichViolation(
            f"bounds out of order: lower {best!r}, lambda_min {lam!r}, upper {up!r}"
        )
    dw = delta_omega_max(g, w)
    kappa = 0.0 if dw == 0.0 else dw / (lam * math.cos(epsilon))
    return BoundsReport(
        lambda_min_exact=lam,
        lower_bound_spectral=lo_i,
        lower_bound_degree=lo_ii,
        lower_bound_best=best,
        upper_bound=up,
        delta_omega_max=dw,
        epsilon=float(epsilon),
        kappa_sufficient=kappa,
    )


def placement_sweep(g: TreeGraph, base_omega: float, special_omega: float) -> np.ndarray:
    """Smallest eigenvalue with ``special_omega`` placed on each node in turn.

    Entry ``v`` corresponds to node ``v`` carrying ``special_omega`` while every
    other node carries ``base_omega``.
    """
    if base_omega <= 0 or special_omega <= 0:
        raise ValueError("frequencies must be positive")
    out = np.empty(g.n)
    for v in range(g.n):
        omega = np.full(g.n, float(base_omega))
        omega[v] = special_omega
        out[v] = lambda_min(weighted_edge_laplacian(g, omega))
    return out


def locking_kappa(g: TreeGraph, w) -> float:
    """Smallest coupling for which a frequency-locked state exists at all.

    At a locked state every node turns at the harmonic mean ``n / sum(1/omega)``
    of the frequencies (the coupling terms sum to zero over the tree), and the
    edge sines are then fixed uniquely by ``B^T B s = B^T (1 - Omega/omega) / kappa``.
    Locking needs ``|s_k| <= 1`` on every edge.  Below this value the network
    cannot frequency-synchronize from any initial phases.
    """
    omega = as_omega(w, g.n)
    common = g.n / np.sum(1.0 / omega)
    B = incidence_matrix(g)
    s = np.linalg.solve(B.T @ B, B.T @ (1.0 - common / omega))
    return float(np.max(np.abs(s)))
