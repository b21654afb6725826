"""Frequency-weighted Kuramoto dynamics on a tree.

Node ``i`` evolves as ``theta_i' = omega_i * (1 - kappa * sum_j sin(theta_i - theta_j))``,
in compact form ``theta' = diag(omega) (1 - kappa B sin(B^T theta))``.
Phases are unwrapped reals throughout.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateEpsilon, DimensionMismatch, NonFiniteState, ValidationError
from .graph import TreeGraph, as_omega, weighted_edge_laplacian

__all__ = [
    "PhaseState",
    "SimConfig",
    "Trajectory",
    "rk4_step",
    "phase_derivative",
    "relative_phases",
    "lyapunov_v",
    "lyapunov_rate",
    "level_set_c",
    "integrate",
    "integrate_many",
    "frequency_sync_metric",
    "sync_metric_series",
    "sync_time",
    "cohesiveness_check",
    "lyapunov_rate_residual",
    "edge_dynamics_residual",
    "write_trajectory_csv",
]

SYNC_THRESHOLD = 1e-3
SYNC_HOLD = 1.0
DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class PhaseState:
    theta: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    kappa: float
    dt: float = 1e-3
    t_end: float = 10.0
    sample_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= self.dt:
            raise ValidationError(f"t_end ({self.t_end}) must be at least dt ({self.dt})")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ValidationError(f"sample_stride must be an integer >= 1, got {self.sample_stride}")
        if self.kappa < 0:
            raise ValidationError(f"kappa must be non-negative, got {self.kappa}")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))


@dataclass
class Trajectory:
    times: np.ndarray
    thetas: np.ndarray
    theta_dots: np.ndarray
    relative_phases: np.ndarray
    lyapunov_v: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final_theta(self) -> np.ndarray:
        return self.thetas[-1]


def rk4_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float, k1=None) -> np.ndarray:
    """One classical Runge-Kutta step.  ``k1 = f(y)`` may be supplied if already known."""
    if k1 is None:
        k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _field(tails: np.ndarray, heads: np.ndarray, omega: np.ndarray, kappa) -> Callable:
    n = omega.shape[0]

    def f(theta: np.ndarray) -> np.ndarray:
        s = np.sin(theta[tails] - theta[heads])
        coupling = np.bincount(tails, s, minlength=n) - np.bincount(heads, s, minlength=n)
        return omega * (1.0 - kappa * coupling)

    return f


def _theta(g: TreeGraph, theta) -> np.ndarray:
    arr = np.asarray(theta, dtype=float).ravel()
    if arr.shape[0] != g.n:
        raise DimensionMismatch(f"expected {g.n} phases, got {arr.shape[0]}")
    return arr


def phase_derivative(g: TreeGraph, w, kappa: float, theta) -> np.ndarray:
    omega = as_omega(w, g.n)
    return _field(g.tails, g.heads, omega, kappa)(_theta(g, theta))


def relative_phases(g: TreeGraph, theta) -> np.ndarray:
    """``B^T theta``: positive-end phase minus negative-end phase, per edge."""
    th = _theta(g, theta)
    return th[g.tails] - th[g.heads]


def lyapunov_v(g: TreeGraph, theta) -> float:
    delta = relative_phases(g, theta)
    return float(2.0 * np.sum(np.sin(delta / 2.0) ** 2))


def lyapunov_rate(g: TreeGraph, w, kappa: float, theta) -> float:
    """Closed-form time derivative of :func:`lyapunov_v`: ``sin(B^T theta) . B^T theta'``."""
    th = _theta(g, theta)
    z = relative_phases(g, phase_derivative(g, w, kappa, th))
    return float(np.sin(relative_phases(g, th)) @ z)


def level_set_c(epsilon: float) -> float:
    """Largest level of ``V`` whose sublevel set keeps every edge within ``pi/2 - epsilon``.

    ``V`` is a sum of non-negative per-edge terms ``2 sin^2(delta/2)``, so
    ``V <= c`` bounds each term by ``c``; the level is therefore set by a single
    edge sitting at ``eta`` with every other edge at zero.
    """
    if not (0.0 <= epsilon < math.pi / 2):
        raise DegenerateEpsilon(f"epsilon must lie in [0, pi/2), got {epsilon}")
    eta = math.pi / 2 - epsilon
    return 2.0 * math.sin(eta / 2.0) ** 2


def _run(f, theta0: np.ndarray, cfg: SimConfig):
    n_steps = cfg.n_steps
    stride = int(cfg.sample_stride)
    rows = list(range(0, n_steps + 1, stride))
    if rows[-1] != n_steps:
        rows.append(n_steps)
    times = np.empty(len(rows))
    thetas = np.empty((len(rows), theta0.shape[0]))
    dots = np.empty_like(thetas)

    theta = theta0.copy()
    r = 0
    for step in range(n_steps + 1):
        k1 = f(theta)
        if not np.all(np.isfinite(k1)) or np.max(np.abs(k1)) > DIVERGENCE_LIMIT:
            raise NonFiniteState(f"state diverged at t={step * cfg.dt:.6g}", step * cfg.dt)
        if step == rows[r]:
            times[r] = step * cfg.dt
            thetas[r] = theta
            dots[r] = k1
            r += 1
        if step == n_steps:
            break
        theta = rk4_step(f, theta, cfg.dt, k1)
    return times, thetas, dots


def _assemble(g: TreeGraph, times, thetas, dots) -> Trajectory:
    t, h = g.tails, g.heads
    delta = thetas[:, t] - thetas[:, h]
    v = 2.0 * np.sum(np.sin(delta / 2.0) ** 2, axis=1)
    return Trajectory(times, thetas, dots, delta, v)


def integrate(g: TreeGraph, w, kappa: float, theta0, cfg: SimConfig) -> Trajectory:
    """Fixed-step RK4 integration, recording every ``cfg.sample_stride`` steps.

    The final state is always recorded.  Each recorded phase velocity is the
    vector field evaluated at the recorded phases.
    """
    omega = as_omega(w, g.n)
    th0 = _theta(g, theta0)
    f = _field(g.tails, g.heads, omega, kappa)
    return _assemble(g, *_run(f, th0, cfg))


def integrate_many(
    instances: Sequence[tuple[TreeGraph, object, float, object]],
    cfg: SimConfig,
) -> list[Trajectory]:
    """Integrate independent ``(graph, omega, kappa, theta0)`` runs in one batch.

    The trees are laid side by side as a forest and stepped together; each run
    is unaffected by the others.  ``cfg.kappa`` is ignored in favour of the
    per-instance value.
    """
    offsets = np.cumsum([0] + [g.n for g, *_ in instances])
    tails = np.concatenate([g.tails + o for (g, *_), o in zip(instances, offsets)])
    heads = np.concatenate([g.heads + o for (g, *_), o in zip(instances, offsets)])
    omega = np.concatenate([as_omega(w, g.n) for g, w, _, _ in instances])
    kappa = np.concatenate([np.full(g.n, float(k)) for g, _, k, _ in instances])
    theta0 = np.concatenate([_theta(g, th) for g, _, _, th in instances])
    times, thetas, dots = _run(_field(tails, heads, omega, kappa), theta0, cfg)
    out = []
    for (g, *_), lo in zip(instances, offsets):
        sl = slice(lo, lo + g.n)
        out.append(_assemble(g, times, thetas[:, sl].copy(), dots[:, sl].copy()))
    return out


def frequency_sync_metric(g: TreeGraph, w, kappa: float, theta) -> float:
    """``max_k |(B^T theta')_k|``; zero exactly when all node frequencies agree."""
    z = relative_phases(g, phase_derivative(g, w, kappa, theta))
    return float(np.max(np.abs(z)))


def sync_metric_series(g: TreeGraph, traj: Trajectory) -> np.ndarray:
    """Per-sample sync metric computed from the recorded phase velocities."""
    dots = traj.theta_dots
    return np.max(np.abs(dots[:, g.tails] - dots[:, g.heads]), axis=1)


def sync_time(
    times: np.ndarray,
    metric: np.ndarray,
    threshold: float = SYNC_THRESHOLD,
    hold: float = SYNC_HOLD,
) -> float | None:
    """First time from which ``metric < threshold`` holds for ``hold`` seconds.

    Returns ``None`` when no such window fits inside the record.
    """
    times = np.asarray(times)
    ok = np.asarray(metric) < threshold
    start = None
    for t, good in zip(times, ok):
        if not good:
            start = None
            continue
        if start is None:
            start = t
        if t - start >= hold - 1e-9:
            return float(start)
    return None


def cohesiveness_check(g: TreeGraph, theta, eta: float) -> bool:
    return bool(np.all(np.abs(relative_phases(g, theta)) <= eta))


def _flow_slope(f, th, quantity, h):
    """Time derivative of ``quantity(theta(t))`` at ``th`` by central differences
    along RK4 steps of the flow ``f``.  One Richardson step over ``h`` and ``h/2``
    cancels the ``h^2`` term, which dominates when ``kappa * omega`` is large."""

    def central(step):
        return (quantity(rk4_step(f, th, step)) - quantity(rk4_step(f, th, -step))) / (2.0 * step)

    return (4.0 * central(h / 2) - central(h)) / 3.0


def lyapunov_rate_residual(g: TreeGraph, w, kappa: float, theta, h: float = 1e-6) -> float:
    """``|closed-form V' - finite-difference V'|`` along the flow at ``theta``."""
    omega = as_omega(w, g.n)
    th = _theta(g, theta)
    f = _field(g.tails, g.heads, omega, kappa)
    fd = _flow_slope(f, th, lambda x: lyapunov_v(g, x), h)
    return abs(lyapunov_rate(g, omega, kappa, th) - float(fd))


def edge_dynamics_residual(g: TreeGraph, w, kappa: float, theta, h: float = 1e-6) -> float:
    """Discrepancy between the closed-form edge-frequency dynamics and finite differences.

    With ``z = B^T theta'`` the closed form is ``z' = -kappa A diag(cos B^T theta) z``
    where ``A = B^T diag(omega) B``.  The reference slope is a central difference
    of ``z`` along the flow (see :func:`_flow_slope`).
    """
    omega = as_omega(w, g.n)
    th = _theta(g, theta)
    f = _field(g.tails, g.heads, omega, kappa)
    z = relative_phases(g, f(th))
    A = weighted_edge_laplacian(g, omega)
    closed = -kappa * A @ (np.cos(relative_phases(g, th)) * z)
    fd = _flow_slope(f, th, lambda x: relative_phases(g, f(x)), h)
    return float(np.max(np.abs(closed - fd)))


def _header(n: int, m: int) -> list[str]:
    return (
        ["time"]
        + [f"theta_{i + 1}" for i in range(n)]
        + [f"theta_dot_{i + 1}" for i in range(n)]
        + [f"delta_{k + 1}" for k in range(m)]
        + ["V"]
    )


def write_trajectory_csv(traj: Trajectory, dest) -> None:
    """Write one row per sample: time, phases, phase velocities, edge differences, V.

    ``dest`` is a path or a text stream.  Floats use ``repr`` so output is
    byte-reproducible.
    """
    n = traj.thetas.shape[1]
    m = traj.relative_phases.shape[1]
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write_trajectory_csv(traj, fh)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(_header(n, m))
    for s in range(len(traj.times)):
        row = [traj.times[s], *traj.thetas[s], *traj.theta_dots[s], *traj.relative_phases[s], traj.lyapunov_v[s]]
        writer.writerow([repr(float(x)) for x in row])


def trajectory_csv_text(traj: Trajectory) -> str:
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    return buf.getvalue()
