"""Exact best-response dynamics ``x' = BR(x) - x`` as a chain of linear segments.

Between switches the best response is a fixed pure profile ``a`` and the
solution is ``x(t) = a + (x(t0) - a) exp(-(t - t0))``.  Switch times are found
by substituting ``s = exp(-dt)``: every payoff difference along a segment is a
polynomial in ``s`` of degree at most ``N - 1``.
"""

from __future__ import annotations

import bisect
import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .game import (
    DEFAULT_TIE_TOL,
    PotentialDecomposition,
    _contract,
    _sigmas,
    all_action_values,
    expected_potential,
    in_strategy_space,
    vertex,
)


class Status(str, enum.Enum):
    CONVERGED_PURE = "converged-pure"
    MIXED_EQUILIBRIUM = "reached-mixed-equilibrium"
    DEGENERATE = "reached-degenerate-point"
    MAX_TIME = "max-time-exceeded"


class EventLocalizationError(ArithmeticError):
    pass


@dataclass
class FlowOptions:
    t_max: float = 100.0
    tie_tol: float = DEFAULT_TIE_TOL
    eq_tol: float = 1e-9
    cross_eps: float = 1e-9
    # a crossing whose payoff gap grows slower than this (per unit time, relative
    # to the payoff range) is treated as tangential
    slope_tol: float = 1e-5
    grid: int = 64
    root_tol: float = 1e-14
    max_bisections: int = 200
    max_switches: int = 1000


@dataclass(frozen=True)
class Tie:
    """Players whose best response is not unique, with their tied actions."""

    players: dict

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True, eq=False)
class TrajectorySegment:
    start_time: float
    duration: float
    start_point: np.ndarray
    target_vertex: tuple
    target_point: np.ndarray

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration

    @property
    def end_point(self) -> np.ndarray:
        if math.isinf(self.duration):
            return self.target_point.copy()
        return self.state(self.end_time)

    def state(self, t: float) -> np.ndarray:
        return segment_state(self, t)


@dataclass(frozen=True, eq=False)
class Event:
    time: float
    point: np.ndarray
    player: int
    actions: tuple  # (action left, action taken)


@dataclass(eq=False)
class Trajectory:
    x0: np.ndarray
    segments: list = field(default_factory=list)
    events: list = field(default_factory=list)
    status: Status = Status.MAX_TIME
    limit: np.ndarray | None = None
    switch_count: int = 0

    @property
    def end_time(self) -> float:
        return self.segments[-1].end_time if self.segments else 0.0

    @property
    def stop_point(self) -> np.ndarray:
        if self.limit is not None:
            return self.limit
        if not self.segments:
            return self.x0
        return self.segments[-1].end_point

    def segment_at(self, t: float) -> int:
        starts = [s.start_time for s in self.segments]
        return max(0, bisect.bisect_right(starts, t) - 1)

    def state(self, t: float) -> np.ndarray:
        if not self.segments:
            return self.x0.copy()
        seg = self.segments[self.segment_at(t)]
        return segment_state(seg, min(t, seg.end_time))

    def sample(self, dt: float, t_end: float | None = None):
        """Times (a ``dt`` grid plus every event time), points and segment ids."""
        if t_end is None:
            t_end = self.end_time if math.isfinite(self.end_time) else (self.segments[-1].start_time + 10.0 if self.segments else 0.0)
        times = set(np.arange(0.0, t_end, dt).tolist()) if dt > 0 else {0.0}
        times.update(e.time for e in self.events if e.time <= t_end)
        times.add(t_end)
        times = np.array(sorted(times))
        ids = np.array([self.segment_at(t) for t in times])
        pts = np.array([self.state(t) for t in times]) if self.segments else np.tile(self.x0, (len(times), 1))
        return times, pts, ids


def best_response_target(decomp: PotentialDecomposition, x, tie_tol: float = DEFAULT_TIE_TOL):
    """The joint pure best response, or a :class:`Tie` naming the tied players."""
    target, ties = [], {}
    for i, v in enumerate(all_action_values(decomp, x)):
        best = np.flatnonzero(v >= v.max() - tie_tol)
        if len(best) > 1:
            ties[i] = tuple(best.tolist())
        target.append(int(best[0]))
    if ties:
        return Tie(ties)
    return tuple(target)


def segment_state(seg: TrajectorySegment, t: float) -> np.ndarray:
    if t < seg.start_time or t > seg.end_time:
        raise ValueError(f"time {t} outside segment [{seg.start_time}, {seg.end_time}]")
    if t == seg.start_time:
        return seg.start_point.copy()
    return seg.target_point + (seg.start_point - seg.target_point) * math.exp(-(t - seg.start_time))


def _make_segment(decomp, t0, x0, target, duration=math.inf) -> TrajectorySegment:
    return TrajectorySegment(t0, duration, np.array(x0, dtype=float), tuple(target), vertex(target, decomp.action_counts))


def _value_polys(u: np.ndarray, alphas, betas, i: int) -> np.ndarray:
    """Coefficients (ascending in s) of ``U(y_i^k, sigma_{-i}(s))``, sigma_j(s) = alpha_j + s beta_j."""
    t = u[..., None]
    for j in range(u.ndim - 1, -1, -1):
        if j == i:
            continue
        a = np.tensordot(t, alphas[j], axes=([j], [0]))
        b = np.tensordot(t, betas[j], axes=([j], [0]))
        out = np.zeros(a.shape[:-1] + (a.shape[-1] + 1,))
        out[..., :-1] += a
        out[..., 1:] += b
        t = out
    return t


def _event_candidates(decomp, seg, opts: FlowOptions):
    """Yields (player, best, other, coeffs) for each payoff gap that must stay positive."""
    counts = decomp.action_counts
    alphas = _sigmas(seg.target_point, counts)
    start = _sigmas(seg.start_point, counts)
    betas = [s - a for s, a in zip(start, alphas)]
    for i in range(decomp.num_players):
        P = _value_polys(decomp.potential, alphas, betas, i)
        b = seg.target_vertex[i]
        for k in range(counts[i]):
            if k != b:
                yield i, b, k, P[b] - P[k]


def _horner(c, s):
    acc = 0.0
    for coef in reversed(c):
        acc = acc * s + coef
    return acc


def _locate_event(decomp, seg, opts: FlowOptions):
    """Largest crossing s* in (0, 1) over all gaps, with the implicated pair; None if absorbing."""
    cands = list(_event_candidates(decomp, seg, opts))
    if not cands:
        return None
    C = np.array([c for *_, c in cands])
    grid = np.linspace(0.0, 1.0, opts.grid + 1)
    vals = npoly.polyval(grid, C.T)  # (pairs, grid+1)
    # the start (s = 1) is on the positive side by construction
    neg = vals[:, :-1] <= 0.0
    neg[:, 0] = vals[:, 0] < 0.0
    best_s, best_pair = -1.0, None
    for p in np.flatnonzero(neg.any(axis=1)):
        j = int(np.flatnonzero(neg[p])[-1])
        lo, hi = grid[j], grid[j + 1]
        if hi <= best_s:
            continue
        c = C[p].tolist()
        if _horner(c, lo) == 0.0:
            root = lo
        else:
            for _ in range(opts.max_bisections):
                if hi - lo < opts.root_tol:
                    break
                mid = 0.5 * (lo + hi)
                if _horner(c, mid) <= 0.0:
                    lo = mid
                else:
                    hi = mid
            else:
                raise EventLocalizationError(
                    f"bisection did not converge for player {cands[p][0] + 1}, bracket [{lo}, {hi}]"
                )
            root = 0.5 * (lo + hi)
        if root > best_s:
            best_s, best_pair = root, cands[p][:3]
    if best_pair is None or best_s <= 0.0:
        return None
    return -math.log(best_s), best_pair


def next_event_time(decomp: PotentialDecomposition, seg: TrajectorySegment, opts: FlowOptions | None = None):
    """Time from the segment start to the first indifference crossing, or None."""
    found = _locate_event(decomp, seg, opts or FlowOptions())
    return None if found is None else found[0]


def _payoff_scale(decomp) -> float:
    u = decomp.potential
    return max(1.0, float(u.max() - u.min()))


def _unique_target(decomp, x, tol):
    t = best_response_target(decomp, x, tol)
    return None if isinstance(t, Tie) else t


def _resolve_start(decomp, x0, tie, opts):
    """Pick the unique self-consistent target for a start point on an indifference surface."""
    options = [tie.players.get(i, (None,)) for i in range(decomp.num_players)]
    tight = opts.slope_tol * opts.cross_eps * _payoff_scale(decomp)
    consistent = []
    for combo in itertools.product(*options):
        target = []
        for i, c in enumerate(combo):
            target.append(c if c is not None else _strict_best(decomp, x0, i))
        a = vertex(target, decomp.action_counts)
        probe = a + (x0 - a) * math.exp(-opts.cross_eps)
        if _unique_target(decomp, probe, tight) == tuple(target):
            consistent.append(tuple(target))
    return consistent[0] if len(consistent) == 1 else None


def _strict_best(decomp, x, i):
    v = _contract(decomp.potential, _sigmas(x, decomp.action_counts), keep=(i,))
    return int(np.argmax(v))


def _is_pure_point(x, counts, tol=1e-12) -> bool:
    return all(np.sum(s > tol) == 1 for s in _sigmas(x, counts))


def _equilibrium_gap(decomp, x, tol) -> float:
    from .equilibrium import equilibrium_residual

    return equilibrium_residual(decomp, x, support_tol=tol)


def integrate_trajectory(decomp: PotentialDecomposition, x0, opts: FlowOptions | None = None) -> Trajectory:
    """Follow the exact best-response flow from ``x0`` until absorption, a stop, or ``t_max``."""
    opts = opts or FlowOptions()
    counts = decomp.action_counts
    x0 = np.array(x0, dtype=float)
    if not in_strategy_space(x0, counts, 1e-12):
        raise ValueError(f"initial point {x0.tolist()} is not in the strategy space")
    traj = Trajectory(x0=x0.copy())
    tight = opts.slope_tol * opts.cross_eps * _payoff_scale(decomp)

    target = best_response_target(decomp, x0, opts.tie_tol)
    if isinstance(target, Tie):
        if _equilibrium_gap(decomp, x0, opts.eq_tol) <= opts.eq_tol and not _is_pure_point(x0, counts):
            traj.status, traj.limit = Status.MIXED_EQUILIBRIUM, x0.copy()
            return traj
        target = _resolve_start(decomp, x0, target, opts)
        if target is None:
            traj.status, traj.limit = Status.DEGENERATE, x0.copy()
            return traj

    t, x = 0.0, x0
    while True:
        seg = _make_segment(decomp, t, x, target)
        found = _locate_event(decomp, seg, opts)
        if found is None:
            traj.segments.append(seg)
            traj.status, traj.limit = Status.CONVERGED_PURE, seg.target_point.copy()
            return traj
        dt, (player, old, new) = found
        if t + dt > opts.t_max:
            traj.segments.append(_make_segment(decomp, t, x, target, opts.t_max - t))
            traj.status = Status.MAX_TIME
            return traj
        seg = _make_segment(decomp, t, x, target, dt)
        traj.segments.append(seg)
        t = t + dt
        x_e = seg.end_point
        traj.switch_count += 1
        traj.events.append(Event(t, x_e, player, (old, new)))
        if _equilibrium_gap(decomp, x_e, opts.eq_tol) <= opts.eq_tol and not _is_pure_point(x_e, counts):
            traj.status, traj.limit = Status.MIXED_EQUILIBRIUM, x_e
            return traj
        nudged = seg.target_point + (x_e - seg.target_point) * math.exp(-opts.cross_eps)
        far = _unique_target(decomp, nudged, tight)
        if far is None or traj.switch_count > opts.max_switches:
            traj.status, traj.limit = Status.DEGENERATE, x_e
            return traj
        target, x = far, x_e


def classify_outcome(traj: Trajectory, equilibria, match_tol: float = 1e-6):
    """The equilibrium record matching the trajectory's limit / stop point, or None."""
    if traj.status == Status.MAX_TIME:
        return None
    p = traj.stop_point
    best, dist = None, match_tol
    for rec in equilibria:
        d = float(np.linalg.norm(rec.profile - p))
        if d <= dist:
            best, dist = rec, d
    return best


@dataclass
class RateEstimate:
    rate: float
    constant: float
    residual: float
    switch_time: float
    times: np.ndarray
    distances: np.ndarray


def estimate_convergence_rate(traj: Trajectory, n_samples: int = 10, horizon: float = 10.0) -> RateEstimate:
    """Fit ``log d(x(t), x*)`` against ``t`` on the absorbing segment."""
    if traj.status != Status.CONVERGED_PURE:
        raise ValueError(f"rate estimation needs a trajectory converging to a pure equilibrium, got {traj.status.value}")
    final = traj.segments[-1]
    target = traj.limit
    t_s = final.start_time
    d_s = float(np.linalg.norm(final.start_point - target))
    if d_s == 0.0:
        raise ValueError("trajectory starts at its limit; the rate is undefined")
    times = t_s + np.linspace(0.0, horizon, n_samples)
    dists = np.array([np.linalg.norm(segment_state(final, tt) - target) for tt in times])
    logd = np.log(dists)
    slope, intercept = np.polyfit(times, logd, 1)
    resid = float(np.max(np.abs(logd - (slope * times + intercept))))
    # distance to a fixed point is convex along each segment, so the sup sits at a segment start
    sup = max(float(np.linalg.norm(s.start_point - target)) for s in traj.segments)
    return RateEstimate(float(-slope), sup * math.exp(t_s), resid, t_s, times, dists)


@dataclass
class FictitiousPlayPath:
    points: np.ndarray
    targets: list
    final_target: tuple


def euler_fictitious_play(decomp: PotentialDecomposition, x0, step_schedule=None, n_steps: int = 1000,
                          tie_tol: float = DEFAULT_TIE_TOL) -> FictitiousPlayPath:
    """Discrete fictitious play ``x_{n+1} = x_n + alpha_n (b_n - x_n)``.

    ``step_schedule`` is a constant, a callable ``n -> alpha_n`` or None for ``1/(n+2)``.
    Ties are broken toward the lowest action index.
    """
    if step_schedule is None:
        def alpha(n):
            return 1.0 / (n + 2)
    elif callable(step_schedule):
        alpha = step_schedule
    else:
        const = float(step_schedule)

        def alpha(n):
            return const
    x = np.array(x0, dtype=float)
    points = [x.copy()]
    targets = []
    for n in range(n_steps):
        a_n = alpha(n)
        if not 0.0 < a_n <= 1.0:
            raise ValueError(f"step size alpha_{n} = {a_n} is outside (0, 1]")
        vals = all_action_values(decomp, x)
        b = tuple(int(np.flatnonzero(v >= v.max() - tie_tol)[0]) for v in vals)
        targets.append(b)
        x = x + a_n * (vertex(b, decomp.action_counts) - x)
        points.append(x.copy())
    vals = all_action_values(decomp, x)
    final = tuple(int(np.flatnonzero(v >= v.max() - tie_tol)[0]) for v in vals)
    return FictitiousPlayPath(np.array(points), targets, final)


def trajectory_potential(decomp: PotentialDecomposition, traj: Trajectory, dt: float):
    times, pts, ids = traj.sample(dt)
    return times, np.array([expected_potential(decomp, p) for p in pts]), ids
