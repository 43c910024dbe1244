"""Command-line front end.

Exit status: 0 on success, 1 on domain errors (not a potential game, no
suitable equilibrium, failed probe precondition), 2 on I/O or parse errors.
Diagnostics go to stderr as a single ``error: ...`` line.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import io as bio
from .analysis import (
    ClassificationError,
    basin_monte_carlo,
    finite_time_probe,
    genericity_census,
    inequality_probe,
    projection_context,
    projection_g,
    projection_map,
    reduced_game,
    sample_indifference_surface,
    tangency_probe,
    volume_contraction_probe,
)
from .equilibrium import NotAnEquilibriumError, SolverOptions, solve_mixed_equilibria
from .flow import (
    EventLocalizationError,
    FlowOptions,
    Status,
    classify_outcome,
    estimate_convergence_rate,
    euler_fictitious_play,
    integrate_trajectory,
    trajectory_potential,
)
from .game import (
    GameStructureError,
    NotPotentialGameError,
    PotentialDecomposition,
    expected_potential,
    from_simplex,
    verify_potential_decomposition,
)


class UsageError(ValueError):
    """Bad command-line values; reported with exit status 2."""


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return v


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()], dtype=float)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_common(p: argparse.ArgumentParser, game: bool = True) -> None:
    if game:
        p.add_argument("game", help="game file (JSON)")
    p.add_argument("--tol", type=_positive, default=1e-9, help="tie tolerance for best responses (default 1e-9)")
    p.add_argument("--svd-tol", type=_positive, default=1e-8, help="Hessian singular-value threshold (default 1e-8)")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out", default="-", help="output file (default: standard output)")
    p.add_argument("--simplex", action="store_true", help="read and write full simplex coordinates")
    p.add_argument("--threads", type=_nonneg_int, default=1, help="worker processes; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brflow", description="Best-response dynamics in weighted potential games.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the game file and its potential")
    _add_common(p)

    p = sub.add_parser("equilibria", help="enumerate and classify equilibria")
    _add_common(p)
    p.add_argument("--extra-starts", type=_nonneg_int, default=8)

    p = sub.add_parser("flow", help="integrate one trajectory and write it as CSV")
    _add_common(p)
    p.add_argument("--x0", type=_vector, required=True)
    p.add_argument("--t-max", type=_positive, default=100.0)
    p.add_argument("--dt", type=_positive, default=0.05)
    p.add_argument("--t-end", type=_positive, help="sampling horizon (default: last event plus 10)")

    p = sub.add_parser("basin", help="Monte Carlo tally of trajectory limits")
    _add_common(p)
    p.add_argument("--samples", type=_nonneg_int, default=10000)
    p.add_argument("--t-max", type=_positive, default=100.0)

    p = sub.add_parser("rate", help="fit the exponential convergence rate")
    _add_common(p)
    p.add_argument("--x0", type=_vector, help="single start; random generic starts otherwise")
    p.add_argument("--samples", type=_nonneg_int, default=100)
    p.add_argument("--t-max", type=_positive, default=100.0)

    p = sub.add_parser("surfaces", help="sample an indifference surface to CSV")
    _add_common(p)
    p.add_argument("--player", type=int, required=True, help="indifferent player (1-based)")
    p.add_argument("--actions", required=True, help="two action labels or indices, e.g. A,B")
    p.add_argument("--grid", type=int, default=11, help="grid points per free coordinate")
    p.add_argument("--solve-for", type=int, help="flat reduced coordinate (0-based) solved by bisection")

    p = sub.add_parser("project", help="projection of a point onto a mixed equilibrium's reduced game")
    _add_common(p)
    p.add_argument("--x0", type=_vector, required=True)
    p.add_argument("--equilibrium", type=int, help="index into the equilibrium list (default: first regular mixed)")

    p = sub.add_parser("probe-inequalities", help="empirical constants of the quadratic and production bounds")
    _add_common(p)
    p.add_argument("--radius", type=_positive, default=0.05)
    p.add_argument("--samples", type=_nonneg_int, default=1000)
    p.add_argument("--equilibrium", type=int)

    p = sub.add_parser("probe-tangency", help="tangential or transversal at a surface point")
    _add_common(p)
    p.add_argument("--x0", type=_vector, required=True)
    p.add_argument("--player", type=int, required=True)
    p.add_argument("--actions", required=True)
    p.add_argument("--surface-tol", type=_positive, default=1e-9)

    p = sub.add_parser("probe-volume", help="volume ratio of a box flowed inside one best-response cell")
    _add_common(p)
    p.add_argument("--lo", type=_vector, required=True)
    p.add_argument("--hi", type=_vector, required=True)
    p.add_argument("--t", type=float, required=True)

    p = sub.add_parser("finite-time", help="arrival times of starts on a mixed equilibrium's stable set")
    _add_common(p)
    p.add_argument("--samples", type=_nonneg_int, default=10, help="number of stable-set points")
    p.add_argument("--segment", type=_vector, action="append",
                   help="p1,..,pk,q1,..,qk endpoints of a segment to bisect (repeatable)")
    p.add_argument("--equilibrium", type=int)

    p = sub.add_parser("census", help="fraction of random potential games that are regular")
    _add_common(p, game=False)
    p.add_argument("--shape", type=lambda s: tuple(int(v) for v in s.split(",")), default=(2, 2))
    p.add_argument("--samples", type=_nonneg_int, default=1000)
    p.add_argument("--class", dest="game_class", choices=("identical", "exact", "weighted"), default="identical")
    p.add_argument("--planted", action="append", default=[], help="game file evaluated alongside the sample")

    p = sub.add_parser("fp-compare", help="discrete fictitious play against the continuous flow")
    _add_common(p)
    p.add_argument("--x0", type=_vector, required=True)
    p.add_argument("--steps", type=_nonneg_int, default=5000)
    p.add_argument("--step-size", type=float, help="constant step size (default 1/(n+2))")
    p.add_argument("--t-max", type=_positive, default=100.0)
    return parser


# ---------------------------------------------------------------------------


def _point(args, decomp: PotentialDecomposition, values) -> np.ndarray:
    counts = decomp.action_counts
    if args.simplex:
        if values.size != sum(counts):
            raise UsageError(f"expected {sum(counts)} simplex coordinates, got {values.size}")
        return from_simplex(np.split(values, np.cumsum(counts)[:-1]), args.tol)
    if values.size != decomp.kappa:
        raise UsageError(f"expected {decomp.kappa} reduced coordinates, got {values.size}")
    return values


def _action(decomp, i, token: str) -> int:
    labels = decomp.labels[i]
    if token in labels:
        return labels.index(token)
    try:
        k = int(token)
    except ValueError as exc:
        raise UsageError(f"player {i + 1} has no action {token!r}") from exc
    if not 0 <= k < len(labels):
        raise UsageError(f"action index {k} out of range for player {i + 1}")
    return k


def _surface(args, decomp):
    i = args.player - 1
    if not 0 <= i < decomp.num_players:
        raise UsageError(f"player {args.player} out of range")
    parts = args.actions.split(",")
    if len(parts) != 2:
        raise UsageError("--actions needs exactly two actions")
    k, l = (_action(decomp, i, t.strip()) for t in parts)
    if k == l:
        raise UsageError("--actions must name two different actions")
    return i, k, l


def _solver(args) -> SolverOptions:
    return SolverOptions(tie_tol=args.tol, svd_tol=args.svd_tol, seed=args.seed,
                         extra_starts=getattr(args, "extra_starts", 8))


def _flow_opts(args) -> FlowOptions:
    return FlowOptions(t_max=getattr(args, "t_max", 100.0), tie_tol=args.tol)


def _settings(args) -> dict:
    keys = ("tol", "svd_tol", "seed", "samples", "t_max", "dt", "radius", "t")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _pick_mixed(args, equilibria):
    idx = getattr(args, "equilibrium", None)
    if idx is not None:
        if not 0 <= idx < len(equilibria):
            raise UsageError(f"equilibrium index {idx} out of range (found {len(equilibria)})")
        rec = equilibria[idx]
        if rec.kind == "pure":
            raise ClassificationError(f"equilibrium {idx} is pure")
        return rec
    for rec in equilibria:
        if rec.kind != "pure" and rec.regular:
            return rec
    raise ClassificationError("the game has no regular mixed equilibrium")


def _emit(args, obj) -> None:
    bio.write_json(args.out, obj)


def cmd_validate(args, game, decomp):
    check = verify_potential_decomposition(game, decomp, args.tol)
    _emit(args, {
        "action_counts": list(decomp.action_counts),
        "kappa": decomp.kappa,
        "identical_interest": game.is_identical_interest(),
        "weights": decomp.weights.tolist(),
        "potential": decomp.potential.reshape(-1).tolist(),
        "max_residual": check.max_residual,
        "potential_game": bool(check.ok),
    })


def cmd_equilibria(args, game, decomp):
    report = solve_mixed_equilibria(decomp, _solver(args))
    out = bio.equilibrium_report(report.equilibria, decomp, _settings(args))
    out["singular_carriers"] = [list(map(list, c.supports)) for c in report.singular_carriers]
    _emit(args, out)


def cmd_flow(args, game, decomp):
    x0 = _point(args, decomp, args.x0)
    traj = integrate_trajectory(decomp, x0, _flow_opts(args))
    t_end = args.t_end
    if t_end is None and not math.isfinite(traj.end_time):
        t_end = traj.segments[-1].start_time + 10.0
    times, pts, ids = traj.sample(args.dt, t_end)
    pot = [expected_potential(decomp, p) for p in pts]
    bio.write_trajectory_csv(args.out, times, pts, pot, ids, decomp.action_counts, args.simplex)
    print(f"status: {traj.status.value}; switches: {traj.switch_count}; stop point: "
          f"{[float(v) for v in traj.stop_point]}", file=sys.stderr)


def cmd_basin(args, game, decomp):
    eqs = solve_mixed_equilibria(decomp, _solver(args)).equilibria
    report = basin_monte_carlo(decomp, args.samples, args.seed, _flow_opts(args), eqs, n_jobs=max(1, args.threads))
    _emit(args, report.to_dict())


def cmd_rate(args, game, decomp):
    opts = _flow_opts(args)
    if args.x0 is not None:
        starts = [_point(args, decomp, args.x0)]
    else:
        from .analysis import uniform_profile

        starts = [uniform_profile(np.random.default_rng([args.seed, k]), decomp.action_counts) for k in range(args.samples)]
    rows = []
    for x0 in starts:
        traj = integrate_trajectory(decomp, x0, opts)
        if traj.status != Status.CONVERGED_PURE:
            if args.x0 is not None:
                raise ClassificationError(f"trajectory did not converge to a pure equilibrium ({traj.status.value})")
            continue
        est = estimate_convergence_rate(traj)
        rows.append({"x0": x0.tolist(), "rate": est.rate, "constant": est.constant,
                     "fit_residual": est.residual, "last_switch_time": est.switch_time, "limit": traj.limit.tolist()})
    rates = [r["rate"] for r in rows]
    _emit(args, {
        "samples": len(rows),
        "max_rate_error": max((abs(r - 1.0) for r in rates), default=None),
        "max_fit_residual": max((r["fit_residual"] for r in rows), default=None),
        "trajectories": rows,
    })


def cmd_surfaces(args, game, decomp):
    i, k, l = _surface(args, decomp)
    s = sample_indifference_surface(decomp, i, k, l, grid=args.grid, solve_for=args.solve_for)
    bio.write_points_csv(args.out, s.points, s.residuals, decomp.kappa)
    for note in s.notes:
        print(f"note: {note}", file=sys.stderr)


def cmd_project(args, game, decomp):
    eqs = solve_mixed_equilibria(decomp, _solver(args)).equilibria
    rec = _pick_mixed(args, eqs)
    ctx = projection_context(decomp, rec)
    x = _point(args, decomp, args.x0)
    img = projection_map(ctx, decomp, x)
    if img is None:
        raise ClassificationError("point is outside the domain of the projection")
    z = ctx.to_perm(x)
    g = projection_g(ctx, decomp, z[ctx.p_index]) if not ctx.completely_mixed else ctx.reduced_star
    red = reduced_game(ctx, decomp)
    _emit(args, {
        "equilibrium": bio.equilibrium_to_dict(rec, decomp),
        "x_p": z[ctx.p_index].tolist(),
        "g": g.tolist(),
        "image": img.full.tolist(),
        "reduced_image": img.reduced.tolist(),
        "reduced_equilibrium": ctx.reduced_star.tolist(),
        "reduced_game": {
            "players": [{"actions": list(a)} for a in red.labels],
            "weights": red.weights.tolist(),
            "potential": red.potential.reshape(-1).tolist(),
        },
    })


def cmd_probe_inequalities(args, game, decomp):
    eqs = solve_mixed_equilibria(decomp, _solver(args)).equilibria
    ctx = projection_context(decomp, _pick_mixed(args, eqs))
    report = inequality_probe(ctx, decomp, radius=args.radius, n_points=args.samples, seed=args.seed, opts=_flow_opts(args))
    _emit(args, report.to_dict())


def cmd_probe_tangency(args, game, decomp):
    surface = _surface(args, decomp)
    x = _point(args, decomp, args.x0)
    res = tangency_probe(decomp, x, surface, surface_tol=args.surface_tol, tie_tol=args.tol)
    _emit(args, {
        "verdict": res.verdict,
        "normal": res.normal.tolist(),
        "selections": [{"target": list(sel), "normal_velocity": p} for sel, p in res.products],
    })


def cmd_probe_volume(args, game, decomp):
    res = volume_contraction_probe(decomp, args.lo, args.hi, args.t, _flow_opts(args))
    _emit(args, {"ratio": res.ratio, "expected": res.expected, "target": list(res.target),
                 "abs_error": abs(res.ratio - res.expected)})


def cmd_finite_time(args, game, decomp):
    eqs = solve_mixed_equilibria(decomp, _solver(args)).equilibria
    rec = _pick_mixed(args, eqs)
    segments = None
    if args.segment:
        segments = []
        for v in args.segment:
            if v.size != 2 * decomp.kappa:
                raise UsageError(f"--segment needs {2 * decomp.kappa} numbers")
            segments.append((v[: decomp.kappa], v[decomp.kappa:]))
    report = finite_time_probe(decomp, rec, args.samples, args.seed, segments, _flow_opts(args), eqs)
    out = report.to_dict()
    out["starts"] = report.extra["starts"].tolist()
    out["arrival_times"] = report.extra["arrival_times"]
    _emit(args, out)


def cmd_census(args):
    planted = []
    for path in args.planted:
        _, d = bio.load_game(path, args.tol)
        planted.append((path, d))
    report = genericity_census(args.shape, args.samples, args.seed, args.game_class, planted,
                               SolverOptions(tie_tol=args.tol, svd_tol=args.svd_tol, seed=args.seed))
    out = report.to_dict()
    out["planted"] = report.extra["planted"]
    _emit(args, out)


def cmd_fp_compare(args, game, decomp):
    x0 = _point(args, decomp, args.x0)
    if args.step_size is not None and not 0.0 < args.step_size <= 1.0:
        raise UsageError("--step-size must lie in (0, 1]")
    path = euler_fictitious_play(decomp, x0, args.step_size, args.steps, args.tol)
    traj = integrate_trajectory(decomp, x0, _flow_opts(args))
    eqs = solve_mixed_equilibria(decomp, _solver(args)).equilibria
    rec = classify_outcome(traj, eqs)
    final = path.points[-1]
    _emit(args, {
        "fp_final_point": final.tolist(),
        "fp_final_target": list(path.final_target),
        "flow_status": traj.status.value,
        "flow_limit": traj.stop_point.tolist(),
        "flow_equilibrium": None if rec is None else rec.profile.tolist(),
        "distance": float(np.linalg.norm(final - traj.stop_point)),
    })


COMMANDS = {
    "validate": cmd_validate,
    "equilibria": cmd_equilibria,
    "flow": cmd_flow,
    "basin": cmd_basin,
    "rate": cmd_rate,
    "surfaces": cmd_surfaces,
    "project": cmd_project,
    "probe-inequalities": cmd_probe_inequalities,
    "probe-tangency": cmd_probe_tangency,
    "probe-volume": cmd_probe_volume,
    "finite-time": cmd_finite_time,
    "fp-compare": cmd_fp_compare,
}

DOMAIN_ERRORS = (NotPotentialGameError, ClassificationError, NotAnEquilibriumError, EventLocalizationError, ValueError)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "census":
            cmd_census(args)
        else:
            game, decomp = bio.load_game(args.game, args.tol)
            COMMANDS[args.command](args, game, decomp)
    except (bio.GameFileError, GameStructureError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NotPotentialGameError as exc:
        print(f"error: not exact potential: {exc}", file=sys.stderr)
        return 1
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
