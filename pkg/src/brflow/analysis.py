"""Projection to the reduced game, inequality/tangency/volume probes and Monte Carlo experiments."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import EquilibriumRecord, SolverOptions, solve_mixed_equilibria
from .flow import (
    FlowOptions,
    Status,
    Tie,
    _locate_event,
    _make_segment,
    best_response_target,
    classify_outcome,
    integrate_trajectory,
)
from .game import (
    DEFAULT_TIE_TOL,
    Carrier,
    GameStructureError,
    NormalFormGame,
    PotentialDecomposition,
    _sigmas,
    action_values,
    best_response_sets,
    expected_potential,
    in_strategy_space,
    mixed_hessian,
    potential_gradient,
    vertex,
    verify_potential_decomposition,
)


class ClassificationError(ValueError):
    """The equilibrium is degenerate where a regular one is required."""


@dataclass
class ExperimentReport:
    seed: int
    samples: int
    tallies: dict = field(default_factory=dict)
    fitted_constants: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "samples": self.samples,
            "tallies": dict(self.tallies),
            "fitted_constants": dict(self.fitted_constants),
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# projection to the reduced game


@dataclass(frozen=True, eq=False)
class ProjectionContext:
    """Carrier-first coordinates around a mixed equilibrium.

    ``perm_decomp`` is the potential with each player's actions reordered so
    the carrier comes first; ``m_index``/``p_index`` split those permuted
    reduced coordinates into free carrier weights and the rest.
    """

    equilibrium: EquilibriumRecord
    perms: tuple
    perm_decomp: PotentialDecomposition
    m_index: np.ndarray
    p_index: np.ndarray
    z_star: np.ndarray

    @property
    def gamma_total(self) -> int:
        return len(self.m_index)

    @property
    def completely_mixed(self) -> bool:
        return len(self.p_index) == 0

    @property
    def mixing_players(self) -> tuple:
        return self.equilibrium.carrier.mixing_players

    def to_perm(self, x) -> np.ndarray:
        sig = _sigmas(x, self.equilibrium_counts)
        return np.concatenate([s[p][1:] for s, p in zip(sig, self.perms)])

    def from_perm(self, z) -> np.ndarray:
        sig = _sigmas(z, self.equilibrium_counts)
        out = []
        for s, p in zip(sig, self.perms):
            orig = np.empty_like(s)
            orig[p] = s
            out.append(orig[1:])
        return np.concatenate(out)

    @property
    def equilibrium_counts(self):
        return self.perm_decomp.action_counts

    @property
    def reduced_star(self) -> np.ndarray:
        return self.z_star[self.m_index]


def projection_context(decomp: PotentialDecomposition, record: EquilibriumRecord) -> ProjectionContext:
    carrier = record.carrier
    carrier.check(decomp.action_counts)
    if not carrier.mixing_players:
        raise ClassificationError("projection needs a mixed equilibrium")
    counts = decomp.action_counts
    perms = tuple(carrier.permutation(i, k) for i, k in enumerate(counts))
    u_perm = decomp.potential[np.ix_(*perms)]
    perm_decomp = PotentialDecomposition(decomp.weights, u_perm, tuple(tuple(decomp.labels[i][a] for a in p) for i, p in enumerate(perms)))
    m_index = []
    for i in carrier.mixing_players:
        start = perm_decomp.coord_index(i, 0)
        m_index.extend(range(start, start + carrier.gamma[i] - 1))
    m_index = np.array(m_index, dtype=int)
    p_index = np.array(sorted(set(range(decomp.kappa)) - set(m_index.tolist())), dtype=int)
    ctx = ProjectionContext(record, perms, perm_decomp, m_index, p_index, np.zeros(decomp.kappa))
    z_star = ctx.to_perm(record.profile)
    z_star[p_index] = 0.0
    object.__setattr__(ctx, "z_star", z_star)
    return ctx


def _carrier_residual(ctx: ProjectionContext, z) -> np.ndarray:
    out = []
    for i in ctx.mixing_players:
        v = action_values(ctx.perm_decomp, i, z)
        g = ctx.equilibrium.carrier.gamma[i]
        out.append(v[1:g] - v[0])
    return np.concatenate(out)


def _carrier_jacobian(ctx: ProjectionContext, z) -> np.ndarray:
    local = Carrier(tuple(tuple(range(g)) for g in ctx.equilibrium.carrier.gamma))
    return mixed_hessian(ctx.perm_decomp, local, z)


def projection_g(ctx: ProjectionContext, decomp: PotentialDecomposition, x_p, tol: float = 1e-13,
                 max_iter: int = 50, svd_tol: float = 1e-8, domain_tol: float = 1e-5):
    """Solve the carrier indifference system for the free weights given ``x_p``.

    Returns None when Newton fails or the solution leaves the strategy space.
    """
    x_p = np.asarray(x_p, dtype=float).reshape(-1)
    if x_p.shape != ctx.p_index.shape:
        raise GameStructureError(f"x_p has {x_p.size} entries, expected {ctx.p_index.size}")
    z = ctx.z_star.copy()
    z[ctx.p_index] = x_p
    for _ in range(max_iter):
        F = _carrier_residual(ctx, z)
        if np.max(np.abs(F)) < tol:
            break
        J = _carrier_jacobian(ctx, z)
        sv = np.linalg.svd(J, compute_uv=False)
        if sv.min() <= svd_tol:
            raise ClassificationError("carrier Hessian is singular: equilibrium is second-order degenerate")
        z[ctx.m_index] -= np.linalg.solve(J, F)
    else:
        if np.max(np.abs(_carrier_residual(ctx, z))) >= max(tol, 1e-10):
            return None
    if not in_strategy_space(z, ctx.equilibrium_counts, domain_tol):
        return None
    return z[ctx.m_index].copy()


@dataclass
class ProjectionImage:
    full: np.ndarray      # image on the equilibrium's face, original coordinates
    reduced: np.ndarray   # coordinates in the reduced game


def projection_map(ctx: ProjectionContext, decomp: PotentialDecomposition, x):
    """``x* + (x - (x_p, g(x_p)))`` on the face, plus its reduced-game coordinates; None if outside the domain."""
    z = ctx.to_perm(x)
    if ctx.completely_mixed:
        return ProjectionImage(np.asarray(x, dtype=float).copy(), z[ctx.m_index])
    g = projection_g(ctx, decomp, z[ctx.p_index])
    if g is None:
        return None
    image = ctx.z_star.copy()
    image[ctx.m_index] += z[ctx.m_index] - g
    return ProjectionImage(ctx.from_perm(image), image[ctx.m_index].copy())


def reduced_game(ctx: ProjectionContext, decomp: PotentialDecomposition) -> PotentialDecomposition:
    """Potential over the carrier actions of the mixing players, pure players pinned."""
    rec = ctx.equilibrium
    if not rec.regular:
        raise ClassificationError("reduced game is only defined here for regular equilibria")
    mixers = ctx.mixing_players
    if len(mixers) < 2:
        raise ClassificationError("fewer than two mixing players: equilibrium is degenerate")
    gam = rec.carrier.gamma
    index = tuple(slice(0, gam[i]) if i in mixers else 0 for i in range(decomp.num_players))
    u = ctx.perm_decomp.potential[index]
    labels = tuple(ctx.perm_decomp.labels[i][: gam[i]] for i in mixers)
    return PotentialDecomposition(decomp.weights[list(mixers)], u, labels)


# ---------------------------------------------------------------------------
# inequality probe


def _sample_ball(rng, center, radius, counts, n, max_tries=200):
    pts = []
    dim = center.size
    for _ in range(max_tries):
        d = rng.normal(size=(4 * n, dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = radius * rng.uniform(size=(4 * n, 1)) ** (1.0 / dim)
        for p in center + r * d:
            if in_strategy_space(p, counts, 0.0):
                pts.append(p)
                if len(pts) == n:
                    return np.array(pts)
    return np.array(pts)


def _reduced_rate(ctx, decomp, reduced, x, xdot, h):
    cols = []
    for c in range(x.size):
        e = np.zeros_like(x)
        e[c] = h
        hi = projection_map(ctx, decomp, x + e)
        lo = projection_map(ctx, decomp, x - e)
        if hi is None or lo is None:
            return None
        cols.append((hi.reduced - lo.reduced) / (2 * h))
    jac = np.column_stack(cols)
    here = projection_map(ctx, decomp, x)
    if here is None:
        return None
    return float(potential_gradient(reduced, here.reduced) @ (jac @ xdot)), here.reduced


def inequality_probe(ctx: ProjectionContext, decomp: PotentialDecomposition, trajectories=None, radius: float = 0.05,
                     points=None, n_points: int = 1000, n_starts: int = 200, per_segment: int = 20,
                     seed: int = 0, fd_step: float = 1e-6, opts: FlowOptions | None = None) -> ExperimentReport:
    """Empirical constants for the quadratic bound and the potential-production bound near ``x*``.

    ``c1`` is the largest ``|U~(P x*) - U~(P x)| / d^2`` over points within
    ``radius``; ``c2`` is the smallest ``(d/dt U~(P x(t))) / d`` over
    trajectory samples within ``radius``.
    """
    rng = np.random.default_rng(seed)
    counts = decomp.action_counts
    x_star = ctx.equilibrium.profile
    reduced = reduced_game(ctx, decomp)
    p_star = ctx.reduced_star
    u_star = expected_potential(reduced, p_star)
    report = ExperimentReport(seed=seed, samples=0)

    if points is None:
        points = _sample_ball(rng, x_star, radius, counts, n_points)
    c1, n1 = 0.0, 0
    for x in points:
        if np.linalg.norm(x - x_star) >= radius:
            continue
        img = projection_map(ctx, decomp, x)
        if img is None:
            continue
        d = np.linalg.norm(img.reduced - p_star)
        if d < 1e-12:
            continue
        c1 = max(c1, abs(u_star - expected_potential(reduced, img.reduced)) / d**2)
        n1 += 1

    if trajectories is None:
        starts = _sample_ball(rng, x_star, radius, counts, n_starts)
        trajectories = [integrate_trajectory(decomp, x0, opts) for x0 in starts]
    c2, n2 = math.inf, 0
    for traj in trajectories:
        for seg in traj.segments:
            span = seg.duration if math.isfinite(seg.duration) else 10.0
            for f in (np.arange(per_segment) + 0.5) / per_segment:
                t = seg.start_time + f * span
                x = seg.state(t)
                if np.linalg.norm(x - x_star) >= radius:
                    continue
                out = _reduced_rate(ctx, decomp, reduced, x, seg.target_point - x, fd_step)
                if out is None:
                    continue
                rate, img = out
                d = np.linalg.norm(img - p_star)
                if d < 1e-9:
                    continue
                c2 = min(c2, rate / d)
                n2 += 1

    report.samples = n1 + n2
    report.tallies = {"quadratic_bound_points": n1, "production_bound_points": n2}
    report.fitted_constants = {"c1": float(c1), "c2": float(c2) if n2 else float("nan"), "radius": float(radius)}
    if n1 == 0 and n2 == 0:
        raise ValueError(f"no samples within radius {radius} of the equilibrium")
    report.notes.append("c1 and c2 are empirical summaries over the listed samples, not certified constants")
    return report


# ---------------------------------------------------------------------------
# indifference surfaces


@dataclass
class SurfaceSample:
    player: int
    actions: tuple
    solve_for: int
    points: np.ndarray
    residuals: np.ndarray
    notes: list


def _payoff_gap(decomp, i, k, l, x) -> float:
    v = action_values(decomp, i, x)
    return float(v[k] - v[l])


def sample_indifference_surface(decomp: PotentialDecomposition, i: int, k: int, l: int, grid=5, solve_for=None,
                                own=None, tol: float = 1e-15) -> SurfaceSample:
    """Points where player ``i`` is indifferent between actions ``k`` and ``l``.

    One opponent coordinate (``solve_for``, a flat index; default the first
    opponent coordinate) is solved by bisection for each grid value of the
    remaining opponent coordinates.  ``grid`` is a point count per free
    coordinate or an explicit list of value tuples.
    """
    counts = decomp.action_counts
    own_slice = decomp.player_slice(i)
    own_idx = set(range(own_slice.start, own_slice.stop))
    opp = [c for c in range(decomp.kappa) if c not in own_idx]
    if solve_for is None:
        solve_for = opp[0]
    if solve_for in own_idx:
        raise ValueError("the solved coordinate must belong to an opponent")
    free = [c for c in opp if c != solve_for]
    if isinstance(grid, int):
        axis = np.linspace(0.0, 1.0, grid)
        values = list(itertools.product(axis, repeat=len(free)))
    else:
        values = [tuple(np.atleast_1d(v).tolist()) for v in grid]
    owner = next(j for j in range(decomp.num_players) if decomp.player_slice(j).start <= solve_for < decomp.player_slice(j).stop)
    owner_slice = decomp.player_slice(owner)

    pts, res, notes = [], [], []
    for vals in values:
        x = np.zeros(decomp.kappa)
        if own is not None:
            x[own_slice] = own
        x[free] = vals
        rest = x[owner_slice].sum() - x[solve_for]
        hi_bound = 1.0 - rest
        if hi_bound < 0 or not in_strategy_space(np.where(np.arange(decomp.kappa) == solve_for, 0.0, x), counts, 0.0):
            notes.append(f"grid point {vals} outside the strategy space")
            continue
        lo, hi = 0.0, hi_bound
        x[solve_for] = lo
        f_lo = _payoff_gap(decomp, i, k, l, x)
        x[solve_for] = hi
        f_hi = _payoff_gap(decomp, i, k, l, x)
        if f_lo == 0.0:
            hi = lo
        elif f_hi == 0.0:
            lo = hi
        elif f_lo * f_hi > 0:
            notes.append(f"no sign change at grid point {vals}")
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            x[solve_for] = mid
            f_mid = _payoff_gap(decomp, i, k, l, x)
            if f_mid == 0.0:
                lo = hi = mid
                break
            if (f_mid < 0) == (f_lo < 0):
                lo = mid
            else:
                hi = mid
        x[solve_for] = 0.5 * (lo + hi)
        pts.append(x.copy())
        res.append(abs(_payoff_gap(decomp, i, k, l, x)))
    return SurfaceSample(i, (k, l), solve_for, np.array(pts).reshape(-1, decomp.kappa), np.array(res), notes)


@dataclass
class TangencyResult:
    verdict: str
    normal: np.ndarray
    products: list  # (selection, nu . z)


def tangency_probe(decomp: PotentialDecomposition, x, surface, tol: float = 1e-7, surface_tol: float = 1e-9,
                   tie_tol: float = DEFAULT_TIE_TOL, fd_step: float = 1e-6) -> TangencyResult:
    """Is every best-response direction at ``x`` tangent to the surface ``(player, k, l)``?"""
    i, k, l = surface
    x = np.asarray(x, dtype=float)
    gap = _payoff_gap(decomp, i, k, l, x)
    if abs(gap) > surface_tol:
        raise ValueError(f"point is not on the indifference surface (gap {gap:.3g})")
    nu = np.empty(decomp.kappa)
    for c in range(decomp.kappa):
        e = np.zeros(decomp.kappa)
        e[c] = fd_step
        nu[c] = (_payoff_gap(decomp, i, k, l, x + e) - _payoff_gap(decomp, i, k, l, x - e)) / (2 * fd_step)
    norm = np.linalg.norm(nu)
    if norm == 0.0:
        raise ValueError("surface normal vanishes at this point")
    nu /= norm
    products = []
    for sel in itertools.product(*best_response_sets(decomp, x, tie_tol)):
        z = vertex(sel, decomp.action_counts) - x
        products.append((sel, float(nu @ z)))
    verdict = "tangential" if all(abs(p) < tol for _, p in products) else "transversal"
    return TangencyResult(verdict, nu, products)


# ---------------------------------------------------------------------------
# Monte Carlo and probes


def uniform_profile(rng, action_counts) -> np.ndarray:
    """Lebesgue-uniform draw from the reduced strategy space (Dirichlet(1) per player)."""
    return np.concatenate([rng.dirichlet(np.ones(k))[1:] for k in action_counts])


def outcome_label(record: EquilibriumRecord | None, labels, traj) -> str:
    if record is None:
        return "max-time" if traj.status == Status.MAX_TIME else "non-equilibrium-stop"
    if record.kind == "pure":
        acts = ",".join(labels[i][s[0]] for i, s in enumerate(record.carrier.supports))
        return f"pure:({acts})"
    return "mixed:(" + ",".join(f"{v:.6g}" for v in record.profile) + ")"


def _basin_chunk(args):
    decomp, equilibria, seed, indices, opts = args
    out = []
    for idx in indices:
        rng = np.random.default_rng([seed, idx])
        x0 = uniform_profile(rng, decomp.action_counts)
        traj = integrate_trajectory(decomp, x0, opts)
        rec = classify_outcome(traj, equilibria)
        out.append((traj.status.value, outcome_label(rec, decomp.labels, traj), traj.switch_count))
    return out


def basin_monte_carlo(decomp: PotentialDecomposition, n_samples: int, seed: int = 0, opts: FlowOptions | None = None,
                      equilibria=None, n_jobs: int = 1) -> ExperimentReport:
    """Tally where the flow goes from uniformly sampled initial conditions."""
    opts = opts or FlowOptions()
    if equilibria is None:
        equilibria = solve_mixed_equilibria(decomp, SolverOptions(seed=seed)).equilibria
    indices = list(range(n_samples))
    if n_jobs > 1 and n_samples > 1:
        chunks = [indices[c::n_jobs] for c in range(n_jobs)]
        with ProcessPoolExecutor(n_jobs) as pool:
            parts = list(pool.map(_basin_chunk, [(decomp, equilibria, seed, ch, opts) for ch in chunks]))
        by_index = {}
        for ch, part in zip(chunks, parts):
            by_index.update(zip(ch, part))
        results = [by_index[i] for i in indices]
    else:
        results = _basin_chunk((decomp, equilibria, seed, indices, opts))

    tallies: dict = {}
    for _, label, _ in results:
        tallies[label] = tallies.get(label, 0) + 1
    statuses = [s for s, _, _ in results]
    switches = [n for *_, n in results]
    n = max(n_samples, 1)
    mixed = sum(s == Status.MIXED_EQUILIBRIUM.value for s in statuses)
    degenerate = sum(s == Status.DEGENERATE.value for s in statuses)
    report = ExperimentReport(seed=seed, samples=n_samples, tallies=dict(sorted(tallies.items())))
    report.fitted_constants = {
        "fraction_pure": sum(s == Status.CONVERGED_PURE.value for s in statuses) / n,
        "fraction_mixed": mixed / n,
        "fraction_degenerate": degenerate / n,
        "fraction_mixed_or_degenerate": (mixed + degenerate) / n,
        "max_switches": max(switches, default=0),
        "mean_switches": float(np.mean(switches)) if switches else 0.0,
    }
    return report


def _limit_key(traj, equilibria):
    rec = classify_outcome(traj, equilibria)
    if rec is None:
        return ("none", traj.status.value)
    return (rec.kind, tuple(np.round(rec.profile, 9)))


def locate_basin_boundary(decomp, p, q, equilibria, tol: float = 1e-12, opts: FlowOptions | None = None):
    """Bisect the segment p-q for a point where the limit changes; None if both ends share a basin."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    key_lo = _limit_key(integrate_trajectory(decomp, p, opts), equilibria)
    key_hi = _limit_key(integrate_trajectory(decomp, q, opts), equilibria)
    if key_lo == key_hi:
        return None
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        key = _limit_key(integrate_trajectory(decomp, p + mid * (q - p), opts), equilibria)
        if key == key_lo:
            lo = mid
        elif key == key_hi:
            hi = mid
        else:
            return p + mid * (q - p)
    return p + 0.5 * (lo + hi) * (q - p)


def finite_time_probe(decomp: PotentialDecomposition, eq: EquilibriumRecord, n_manifold_points: int = 10,
                      seed: int = 0, segments=None, opts: FlowOptions | None = None, equilibria=None) -> ExperimentReport:
    """Integrate from points on the stable set of ``eq`` and record arrival times.

    For a completely mixed equilibrium of a 2x2 game the stable set is built
    analytically (rays from ``x*`` pointing away from a vertex whose cell they
    lie in).  Otherwise each segment in ``segments`` (or random pairs) is
    bisected between basins.
    """
    opts = opts or FlowOptions()
    x_star = eq.profile
    counts = decomp.action_counts
    if equilibria is None:
        equilibria = solve_mixed_equilibria(decomp, SolverOptions(seed=seed)).equilibria
    report = ExperimentReport(seed=seed, samples=0)
    starts, expected = [], []

    if decomp.kappa == 2 and eq.kind == "completely-mixed" and segments is None:
        for y in itertools.product(*(range(k) for k in counts)):
            v = vertex(y, counts)
            d = x_star - v
            if best_response_target(decomp, x_star + 1e-6 * d, 0.0) != y:
                continue
            # largest lambda keeping x* + lambda d inside the square
            lam_max = min((1.0 - x_star[c]) / d[c] if d[c] > 0 else -x_star[c] / d[c] for c in range(2) if d[c] != 0)
            for j in range(n_manifold_points):
                lam = lam_max * (j + 1) / (n_manifold_points + 1)
                starts.append(x_star + lam * d)
                expected.append(math.log1p(lam))
    else:
        rng = np.random.default_rng(seed)
        pairs = list(segments) if segments is not None else []
        tries = 0
        while segments is None and len(pairs) < n_manifold_points and tries < 50 * n_manifold_points:
            tries += 1
            pairs.append((uniform_profile(rng, counts), uniform_profile(rng, counts)))
        for p, q in pairs:
            b = locate_basin_boundary(decomp, p, q, equilibria, opts=opts)
            if b is None:
                report.notes.append(f"segment {np.round(p, 6).tolist()} - {np.round(q, 6).tolist()} lies in one basin")
                continue
            starts.append(b)
            expected.append(math.nan)
            if segments is None and len(starts) >= n_manifold_points:
                break

    arrivals, errors, tallies = [], [], {}
    for x0, t_exp in zip(starts, expected):
        traj = integrate_trajectory(decomp, x0, opts)
        tallies[traj.status.value] = tallies.get(traj.status.value, 0) + 1
        if traj.status == Status.MIXED_EQUILIBRIUM:
            arrivals.append(traj.end_time)
            if not math.isnan(t_exp):
                errors.append(abs(traj.end_time - t_exp))
    report.samples = len(starts)
    report.tallies = tallies
    report.fitted_constants = {
        "max_arrival_time": max(arrivals, default=float("nan")),
        "max_arrival_time_error": max(errors, default=float("nan")),
        "fraction_arrived": len(arrivals) / len(starts) if starts else float("nan"),
    }
    report.extra = {"starts": np.array(starts).reshape(-1, decomp.kappa), "arrival_times": arrivals}
    return report


@dataclass
class VolumeResult:
    ratio: float
    expected: float
    target: tuple


def volume_contraction_probe(decomp: PotentialDecomposition, lo, hi, t: float, opts: FlowOptions | None = None) -> VolumeResult:
    """Volume ratio of an axis-aligned box after flowing for time ``t`` inside one best-response cell."""
    opts = opts or FlowOptions()
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    counts = decomp.action_counts
    if lo.shape != (decomp.kappa,) or hi.shape != lo.shape or np.any(hi <= lo):
        raise ValueError("box bounds must be kappa-vectors with lo < hi")
    target = None
    for corner in itertools.product(*zip(lo, hi)):
        corner = np.array(corner)
        if not in_strategy_space(corner, counts, 0.0):
            raise ValueError(f"box corner {corner.tolist()} is outside the strategy space")
        a = best_response_target(decomp, corner, opts.tie_tol)
        if isinstance(a, Tie) or (target is not None and a != target):
            raise ValueError("box is not inside a single best-response cell")
        target = a
        found = _locate_event(decomp, _make_segment(decomp, 0.0, corner, a), opts)
        if found is not None and found[0] <= t:
            raise ValueError(f"corner {corner.tolist()} switches best response before time {t}")
    a = vertex(target, counts)
    lo_t = a + (lo - a) * math.exp(-t)
    hi_t = a + (hi - a) * math.exp(-t)
    ratio = float(np.prod(np.abs(hi_t - lo_t)) / np.prod(hi - lo))
    return VolumeResult(ratio, math.exp(-decomp.kappa * t), target)


def random_potential_game(rng, shape, game_class: str = "identical"):
    """A (game, decomposition) pair with potential coefficients uniform on [-1, 1]."""
    shape = tuple(int(k) for k in shape)
    u = rng.uniform(-1.0, 1.0, size=shape)
    n = len(shape)
    if game_class == "identical":
        w = np.ones(n)
        payoffs = [u.copy() for _ in range(n)]
    elif game_class in ("exact", "weighted"):
        w = np.ones(n) if game_class == "exact" else 1.0 - rng.uniform(0.0, 1.0, size=n)  # (0, 1]
        payoffs = []
        for i in range(n):
            # a term independent of the player's own action keeps the potential intact
            other = rng.uniform(-1.0, 1.0, size=shape[:i] + (1,) + shape[i + 1 :])
            payoffs.append(w[i] * u + other)
    else:
        raise ValueError(f"unknown game class {game_class!r}")
    return NormalFormGame(tuple(payoffs)), PotentialDecomposition(w, u)


def genericity_census(shape, n_games: int, seed: int = 0, game_class: str = "identical", planted=(),
                      solver: SolverOptions | None = None) -> ExperimentReport:
    """Fraction of random potential games whose found equilibria are all regular."""
    solver = solver or SolverOptions()
    regular = 0
    for g in range(n_games):
        rng = np.random.default_rng([seed, g])
        game, decomp = random_potential_game(rng, shape, game_class)
        if not verify_potential_decomposition(game, decomp, 1e-9).ok:
            raise AssertionError("generated game fails its own potential check")
        eqs = solve_mixed_equilibria(decomp, SolverOptions(**{**solver.__dict__, "seed": seed})).equilibria
        regular += all(r.regular for r in eqs)
    report = ExperimentReport(seed=seed, samples=n_games,
                              tallies={"regular": regular, "non-regular": n_games - regular})
    report.fitted_constants = {"regular_fraction": regular / n_games if n_games else float("nan")}
    planted_out = {}
    for name, decomp in planted:
        eqs = solve_mixed_equilibria(decomp, solver).equilibria
        planted_out[name] = [
            {
                "profile": r.profile.tolist(),
                "kind": r.kind,
                "first_order_ok": r.first_order_ok,
                "second_order_ok": r.second_order_ok,
                "regular": r.regular,
            }
            for r in eqs
        ]
        flagged = not all(r.regular for r in eqs)
        report.notes.append(f"planted game {name}: {'flagged non-regular' if flagged else 'all equilibria regular'}")
    report.extra["planted"] = planted_out
    return report
