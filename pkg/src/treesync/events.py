"""Event-triggered hub controller for star networks.

The hub watches ``|theta_h - theta_i|`` on every leaf.  A leaf armed for E1
fires when the gap exceeds ``eta``: its effective frequency is moved to
``omega*`` and the leaf is re-armed for E2.  A leaf armed for E2 fires when the
gap falls below ``eta - epsilon`` and is re-armed for E1.  Phases are
continuous across events; only the leaf corrections ``alpha`` jump.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import (
    DIVERGENCE_LIMIT,
    SYNC_HOLD,
    SYNC_THRESHOLD,
    SimConfig,
    Trajectory,
    _assemble,
    _field,
    _theta,
    rk4_step,
    sync_metric_series,
)
from .errors import AlternationViolation, DegenerateEpsilon, NonFiniteState, NotAStar, ValidationError
from .graph import TreeGraph, as_omega, degrees

__all__ = [
    "E1",
    "E2",
    "EventConfig",
    "HubControllerState",
    "EventEntry",
    "EventLog",
    "find_hub",
    "omega_star",
    "alpha_update",
    "detect_events",
    "simulate_hybrid",
    "dwell_time_stats",
    "post_settling_check",
    "write_event_log_csv",
]

E1 = "E1"
E2 = "E2"


@dataclass(frozen=True)
class EventConfig:
    """Controller settings.

    ``delta_gain`` defaults to ``kappa`` and ``eta`` to ``pi/2 - epsilon``.
    ``enabled=False`` runs the open-loop network with no event detection.
    """

    kappa: float
    epsilon: float
    delta_gain: float | None = None
    eta: float | None = None
    enabled: bool = True

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValidationError(f"kappa must be positive, got {self.kappa}")
        if not (0.0 < self.epsilon < math.pi / 2):
            raise DegenerateEpsilon(f"epsilon must lie in (0, pi/2), got {self.epsilon}")
        if self.delta_gain is None:
            object.__setattr__(self, "delta_gain", float(self.kappa))
        expected = math.pi / 2 - self.epsilon
        if self.eta is None:
            object.__setattr__(self, "eta", expected)
        elif abs(self.eta - expected) > 1e-12:
            raise ValidationError(f"eta must equal pi/2 - epsilon = {expected!r}, got {self.eta!r}")


def find_hub(g: TreeGraph) -> int:
    d = degrees(g)
    if g.n == 2:
        return 0
    hubs = np.flatnonzero(d == g.n - 1)
    if len(hubs) != 1:
        raise NotAStar(f"not a star: no node has degree {g.n - 1} (degrees {d.tolist()})")
    return int(hubs[0])


@dataclass
class HubControllerState:
    hub: int
    leaves: tuple[int, ...]
    alpha: np.ndarray
    modes: list[str]
    last_event_time: np.ndarray

    @classmethod
    def for_star(cls, g: TreeGraph) -> "HubControllerState":
        hub = find_hub(g)
        leaves = tuple(v for v in range(g.n) if v != hub)
        k = len(leaves)
        return cls(hub, leaves, np.zeros(k), [E1] * k, np.full(k, -np.inf))


@dataclass(frozen=True)
class EventEntry:
    time: float
    leaf: int
    kind: str
    alpha_before: float
    alpha_after: float


@dataclass
class EventLog:
    leaves: tuple[int, ...]
    entries: list[EventEntry] = field(default_factory=list)
    # phases immediately before and after each jump instant
    jump_states: list[tuple[float, np.ndarray, np.ndarray]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def last_time(self) -> float | None:
        return self.entries[-1].time if self.entries else None


def omega_star(omega_h: float, delta_gain: float, epsilon: float) -> float:
    """Target leaf frequency ``omega_h * (1 + delta_gain * cos(2 epsilon))``."""
    if omega_h <= 0:
        raise ValidationError(f"hub frequency must be positive, got {omega_h}")
    if not (0.0 <= epsilon < math.pi / 4):
        raise DegenerateEpsilon(f"epsilon must lie in [0, pi/4) so that cos(2 epsilon) > 0, got {epsilon}")
    return omega_h * (1.0 + delta_gain * math.cos(2.0 * epsilon))


def alpha_update(alpha_i: float, omega_i: float, omega_star: float) -> float:
    """New leaf correction: shift ``alpha_i`` by the gap between ``omega*`` and the
    current effective frequency ``omega_i + alpha_i``."""
    return alpha_i + (omega_star - (omega_i + alpha_i))


def detect_events(state: HubControllerState, theta, cfg: EventConfig) -> list[tuple[int, str]]:
    """Leaves whose armed condition holds at ``theta``, in ascending leaf order."""
    theta = np.asarray(theta, dtype=float)
    gaps = np.abs(theta[state.hub] - theta[list(state.leaves)])
    out = []
    for idx, leaf in enumerate(state.leaves):
        if state.modes[idx] == E1:
            if gaps[idx] > cfg.eta:
                out.append((leaf, E1))
        elif gaps[idx] < cfg.eta - cfg.epsilon:
            out.append((leaf, E2))
    return out


def _apply(state, triggers, t, omega, effective, w_star, log, theta):
    for leaf, kind in triggers:
        idx = state.leaves.index(leaf)
        before = float(state.alpha[idx])
        if kind == E1:
            state.alpha[idx] = alpha_update(before, omega[leaf], w_star)
            effective[leaf] = w_star
            state.modes[idx] = E2
        else:
            state.modes[idx] = E1
        state.last_event_time[idx] = t
        log.entries.append(EventEntry(t, leaf, kind, before, float(state.alpha[idx])))
    log.jump_states.append((t, theta.copy(), theta.copy()))


def simulate_hybrid(
    g: TreeGraph,
    w,
    cfg: EventConfig,
    theta0,
    sim: SimConfig,
) -> tuple[Trajectory, EventLog]:
    """Integrate the star network under the event-triggered controller.

    Events are checked at the end of every step.  When a step triggers, the
    step length is bisected down to ``dt/100`` to locate the first triggering
    instant, the jump is applied there and the rest of the step is integrated
    with the updated frequencies.  Triggers present at ``t = 0`` fire at once.
    """
    state = HubControllerState.for_star(g)
    omega = as_omega(w, g.n)
    theta = _theta(g, theta0).copy()
    effective = omega.copy()
    log = EventLog(state.leaves)
    w_star = omega_star(omega[state.hub], cfg.delta_gain, cfg.epsilon) if cfg.enabled else None
    tails, heads = g.tails, g.heads
    dt = sim.dt
    tol = dt / 100.0

    def detect(th):
        return detect_events(state, th, cfg) if cfg.enabled else []

    n_steps = sim.n_steps
    stride = int(sim.sample_stride)
    rows = list(range(0, n_steps + 1, stride))
    if rows[-1] != n_steps:
        rows.append(n_steps)
    times = np.empty(len(rows))
    thetas = np.empty((len(rows), g.n))
    dots = np.empty_like(thetas)

    triggers = detect(theta)
    if triggers:
        _apply(state, triggers, 0.0, omega, effective, w_star, log, theta)

    r = 0
    for step in range(n_steps + 1):
        t = step * dt
        f = _field(tails, heads, effective, sim.kappa)
        k1 = f(theta)
        if not np.all(np.isfinite(k1)) or np.max(np.abs(k1)) > DIVERGENCE_LIMIT:
            raise NonFiniteState(f"state diverged at t={t:.6g}", t)
        if step == rows[r]:
            times[r] = t
            thetas[r] = theta
            dots[r] = k1
            r += 1
        if step == n_steps:
            break

        done = 0.0
        while True:
            remaining = dt - done
            trial = rk4_step(f, theta, remaining)
            if not detect(trial):
                theta = trial
                break
            lo, hi = 0.0, remaining
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if detect(rk4_step(f, theta, mid)):
                    hi = mid
                else:
                    lo = mid
            theta = rk4_step(f, theta, hi)
            done += hi
            _apply(state, detect(theta), t + done, omega, effective, w_star, log, theta)
            f = _field(tails, heads, effective, sim.kappa)
            if dt - done <= 1e-12 * dt:
                break

    return _assemble(g, times, thetas, dots), log


def dwell_time_stats(log: EventLog) -> tuple[float, int, np.ndarray]:
    """``(min_gap, event_count, per_leaf_counts)``.

    ``min_gap`` is the smallest positive spacing between distinct event
    instants, ``inf`` with fewer than two instants.  Raises
    :class:`AlternationViolation` if any leaf does not strictly alternate
    E1, E2, E1, ...
    """
    counts = np.zeros(len(log.leaves), dtype=int)
    last_kind: dict[int, str] = {}
    for e in log.entries:
        expected = E2 if last_kind.get(e.leaf) == E1 else E1
        if e.kind != expected:
            raise AlternationViolation(f"leaf {e.leaf} fired {e.kind} at t={e.time} but {expected} was armed")
        last_kind[e.leaf] = e.kind
        counts[log.leaves.index(e.leaf)] += 1
    instants = sorted({e.time for e in log.entries})
    gaps = np.diff(instants)
    gaps = gaps[gaps > 0]
    min_gap = float(gaps.min()) if len(gaps) else math.inf
    return min_gap, len(log.entries), counts


def post_settling_check(
    g: TreeGraph,
    traj: Trajectory,
    log: EventLog,
    eta: float,
    threshold: float = SYNC_THRESHOLD,
    settle: float = SYNC_HOLD,
) -> dict:
    """Sync and cohesiveness over every sample from ``last event + settle`` on.

    Without events the reference instant is the start of the run.
    """
    t_ref = log.last_time if log.entries else float(traj.times[0])
    start = t_ref + settle
    mask = traj.times >= start - 1e-12
    metric = sync_metric_series(g, traj)[mask]
    delta = traj.relative_phases[mask]
    synced = bool(mask.any() and np.all(metric < threshold))
    cohesive = bool(mask.any() and np.all(np.abs(delta) <= eta))
    return {
        "reference_time": float(t_ref),
        "window_start": float(start),
        "samples": int(mask.sum()),
        "max_sync_metric": float(metric.max()) if mask.any() else math.nan,
        "max_abs_delta": float(np.abs(delta).max()) if mask.any() else math.nan,
        "synchronized": synced,
        "cohesive": cohesive,
        "passed": synced and cohesive,
    }


def write_event_log_csv(log: EventLog, dest, index_base: int = 1) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write_event_log_csv(log, fh, index_base)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["time", "leaf", "type", "alpha_before", "alpha_after"])
    for e in log.entries:
        writer.writerow([repr(float(e.time)), e.leaf + index_base, e.kind, repr(e.alpha_before), repr(e.alpha_after)])
