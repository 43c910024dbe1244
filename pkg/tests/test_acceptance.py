"""Acceptance criteria, one PASS/FAIL line each.

Run under pytest (lines are repeated in the terminal summary) or directly:
``python3 tests/test_acceptance.py``.
"""

import json
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from brflow.analysis import (  # noqa: E402
    basin_monte_carlo,
    finite_time_probe,
    genericity_census,
    inequality_probe,
    projection_context,
    projection_g,
    reduced_game,
    sample_indifference_surface,
    tangency_probe,
    uniform_profile,
    volume_contraction_probe,
)
from brflow.cli import run  # noqa: E402
from brflow.equilibrium import find_equilibria  # noqa: E402
from brflow.flow import Status, estimate_convergence_rate, integrate_trajectory  # noqa: E402
from brflow.game import (  # noqa: E402
    Carrier,
    PotentialDecomposition,
    expected_potential,
    mixed_hessian,
    potential_gradient,
)
from brflow.io import load_game  # noqa: E402

from conftest import ACCEPTANCE_LINES, data_path, random_point  # noqa: E402
from test_equilibrium import _grid_oracle_2x2  # noqa: E402

CRITERIA = {}


def criterion(number, title):
    def register(fn):
        CRITERIA[number] = (title, fn)
        return fn
    return register


def game(name):
    return load_game(data_path(name))[1]


def mixed_of(d):
    return next(r for r in find_equilibria(d) if r.kind != "pure")


def surface_value(x3):
    return (1 + 5 * x3) / (3 + 6 * x3)


@criterion(1, "coordination game equilibria and regularity")
def check_1():
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "eq.json"
        code = run(["equilibria", str(data_path("example21.json")), "--out", str(out)])
        eqs = json.loads(out.read_text())["equilibria"]
    elapsed = time.perf_counter() - t0
    profiles = sorted(e["profile"] for e in eqs)
    expected = [[0.0, 0.0], [1 / 3, 1 / 3], [1.0, 1.0]]
    same = len(profiles) == 3 and np.allclose(profiles, expected, atol=1e-9, rtol=0)
    mixed = [e for e in eqs if e["kind"] != "pure"]
    smin = mixed[0]["hessian_min_singular_value"] if mixed else float("nan")
    return [
        ("exit 0", code == 0, code),
        ("equilibrium set", same, profiles),
        ("mixed regular", len(mixed) == 1 and mixed[0]["regular"], None),
        ("min singular value 3", abs(smin - 3.0) <= 1e-9, smin),
        ("runtime < 1 s", elapsed < 1.0, f"{elapsed:.3f}s"),
    ]


@criterion(2, "incompletely mixed equilibrium, reduced game and implicit function")
def check_2():
    t0 = time.perf_counter()
    d41, d21 = game("example41.json"), game("example21.json")
    rec = mixed_of(d41)
    ctx = projection_context(d41, rec)
    red = reduced_game(ctx, d41)
    g = projection_g(ctx, d41, [0.1])
    elapsed = time.perf_counter() - t0
    return [
        ("equilibrium ((1/3),(1/3,0))", np.allclose(rec.profile, [1 / 3, 1 / 3, 0], atol=1e-10, rtol=0), rec.profile),
        ("residual < 1e-10", rec.residual < 1e-10, rec.residual),
        ("reduced game equals coordination game", np.array_equal(red.potential, d21.potential), red.potential.tolist()),
        ("g(0.1) = (1/3, 0.3)", np.allclose(g, [1 / 3, 0.3], atol=1e-9, rtol=0), g),
        ("runtime < 1 s", elapsed < 1.0, f"{elapsed:.3f}s"),
    ]


@criterion(3, "three-player equilibrium, surfaces and tangency")
def check_3():
    t0 = time.perf_counter()
    d = game("example51.json")
    eqs = find_equilibria(d)
    found = any(np.allclose(r.profile, [2 / 3, 2 / 3, 1], atol=1e-9, rtol=0) for r in eqs)
    xs = [0.0, 0.25, 0.5, 1.0]
    s = sample_indifference_surface(d, 0, 0, 1, grid=[(v,) for v in xs], solve_for=1)
    surf_err = float(np.max(np.abs(s.points[:, 1] - [surface_value(v) for v in xs])))
    # (x2, x3) = (1/2, 1/4) lies on the surface where player 1 is indifferent
    tangent = tangency_probe(d, [0.7, 0.5, 0.25], (0, 0, 1))
    generic = tangency_probe(d, [0.7, surface_value(0.6), 0.6], (0, 0, 1))
    elapsed = time.perf_counter() - t0
    return [
        ("equilibrium (2/3,2/3,1)", found, None),
        ("surface samples to 1e-9", surf_err <= 1e-9, f"{surf_err:.2e}"),
        ("tangential at (0.7,1/2,1/4)", tangent.verdict == "tangential",
         f"{tangent.verdict}, normal velocity {[round(p, 6) for _, p in tangent.products]}"),
        ("transversal at generic point", generic.verdict == "transversal", generic.verdict),
        ("runtime < 2 s", elapsed < 2.0, f"{elapsed:.3f}s"),
    ]


@criterion(4, "no mixed or degenerate outcomes from 10,000 uniform starts per game")
def check_4():
    t0 = time.perf_counter()
    checks = []
    for name in ("example21.json", "example41.json", "example51.json"):
        rep = basin_monte_carlo(game(name), 10_000, seed=0)
        bad = round((rep.fitted_constants["fraction_mixed_or_degenerate"]) * rep.samples)
        checks.append((f"{name}: 0 mixed/degenerate", bad == 0 and sum(rep.tallies.values()) == 10_000, rep.tallies))
    elapsed = time.perf_counter() - t0
    checks.append(("runtime < 30 s", elapsed < 30.0, f"{elapsed:.1f}s"))
    return checks


@criterion(5, "exponential rate on absorbing segments")
def check_5():
    d = game("example21.json")
    rng = np.random.default_rng(5)
    worst_rate, worst_resid, n = 0.0, 0.0, 0
    while n < 100:
        traj = integrate_trajectory(d, uniform_profile(rng, d.action_counts))
        if traj.status != Status.CONVERGED_PURE:
            continue
        est = estimate_convergence_rate(traj)
        worst_rate = max(worst_rate, abs(est.rate - 1.0))
        worst_resid = max(worst_resid, est.residual)
        n += 1
    return [
        ("rate = 1 within 1e-6", worst_rate <= 1e-6, f"{worst_rate:.2e}"),
        ("log-distance residual < 1e-9", worst_resid < 1e-9, f"{worst_resid:.2e}"),
    ]


@criterion(6, "finite-time arrival at the mixed equilibrium")
def check_6():
    d = game("example21.json")
    traj = integrate_trajectory(d, [1 / 3 - 0.2, 1 / 3 + 0.1])
    rep = finite_time_probe(d, mixed_of(d), segments=[([0.1, 0.9], [0.1, 0.1])])
    arrived = rep.tallies.get(Status.MIXED_EQUILIBRIUM.value, 0) == 1
    t_arr = rep.fitted_constants["max_arrival_time"]
    return [
        ("status reached-mixed-equilibrium", traj.status == Status.MIXED_EQUILIBRIUM, traj.status.value),
        ("arrival at ln 1.3", abs(traj.end_time - math.log(1.3)) <= 1e-9, f"{abs(traj.end_time - math.log(1.3)):.2e}"),
        ("bisected manifold point arrives", arrived and math.isfinite(t_arr), f"t = {t_arr:.6f}"),
    ]


@criterion(7, "exact event arithmetic")
def check_7():
    d = game("example21.json")
    traj = integrate_trajectory(d, [0.9, 0.2])
    ev = traj.events[0]
    t_err = abs(ev.time - math.log(1.2))
    x_err = float(np.max(np.abs(ev.point - [0.75, 1 / 3])))
    return [
        ("event time ln 1.2 +- 1e-12", t_err <= 1e-12, f"{t_err:.2e}"),
        ("event point (0.75, 1/3) +- 1e-12", x_err <= 1e-12, f"{x_err:.2e}"),
        ("limit (1,1)", traj.status == Status.CONVERGED_PURE and np.array_equal(traj.limit, [1, 1]), traj.limit),
    ]


@criterion(8, "quadratic and production bounds near the mixed equilibrium")
def check_8():
    checks = []
    for name in ("example21.json", "example41.json"):
        d = game(name)
        rep = inequality_probe(projection_context(d, mixed_of(d)), d, radius=0.05, n_points=1000, seed=0)
        c1, c2 = rep.fitted_constants["c1"], rep.fitted_constants["c2"]
        n1, n2 = rep.tallies["quadratic_bound_points"], rep.tallies["production_bound_points"]
        checks.append((f"{name}: c1 <= 1.6", c1 <= 1.6, f"{c1:.6f}"))
        checks.append((f"{name}: c2 > 0", c2 > 0, f"{c2:.6f}"))
        checks.append((f"{name}: >= 1000 samples each", min(n1, n2) >= 1000, (n1, n2)))
    return checks


@criterion(9, "volume contraction e^(-kappa t)")
def check_9():
    r21 = volume_contraction_probe(game("example21.json"), [0.05, 0.05], [0.15, 0.15], 1.0)
    r51 = volume_contraction_probe(game("example51.json"), [0.05, 0.05, 0.85], [0.15, 0.15, 0.95], 0.5)
    e21, e51 = abs(r21.ratio - math.exp(-2.0)), abs(r51.ratio - math.exp(-1.5))
    return [
        ("kappa = 2 box", e21 <= 1e-9, f"{e21:.1e}"),
        ("kappa = 3 box", e51 <= 1e-9, f"{e51:.1e}"),
    ]


@criterion(10, "property suites")
def check_10():
    rng = np.random.default_rng(10)
    worst_fd, blocks_zero = 0.0, True
    for _ in range(100):
        shape = tuple(int(k) for k in rng.integers(2, 4, size=rng.integers(2, 4)))
        d = PotentialDecomposition.identical_interest(rng.uniform(-1, 1, shape))
        x = random_point(rng, shape)
        g = potential_gradient(d, x)
        h = 1e-6
        fd = np.array([(expected_potential(d, x + h * e) - expected_potential(d, x - h * e)) / (2 * h)
                       for e in np.eye(x.size)])
        worst_fd = max(worst_fd, float(np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g)))))
        H = mixed_hessian(d, Carrier(tuple(tuple(range(k)) for k in shape)), x)
        blocks_zero &= all(np.all(H[d.player_slice(i), d.player_slice(i)] == 0.0) for i in range(len(shape)))
        blocks_zero &= bool(np.array_equal(H, H.T))

    monotone, n_traj = True, 0
    for name in ("example21.json", "example41.json", "example51.json"):
        d = game(name)
        for _ in range(100):
            traj = integrate_trajectory(d, random_point(rng, d.action_counts))
            for seg in traj.segments:
                end = seg.end_point if math.isfinite(seg.duration) else seg.state(seg.start_time + 20.0)
                monotone &= expected_potential(d, end) >= expected_potential(d, seg.start_point) - 1e-10
            n_traj += 1

    agree = 0
    for _ in range(50):
        u = rng.uniform(-1, 1, (2, 2))
        found = sorted(tuple(np.round(r.profile, 6)) for r in find_equilibria(PotentialDecomposition.identical_interest(u)))
        agree += found == sorted(tuple(np.round(p, 6)) for p in _grid_oracle_2x2(u))

    identical = True
    with tempfile.TemporaryDirectory() as tmp:
        for args in (["basin", str(data_path("example51.json")), "--samples", "500", "--seed", "7"],
                     ["census", "--samples", "50", "--seed", "7"],
                     ["equilibria", str(data_path("example41.json"))]):
            a, b = Path(tmp) / "a", Path(tmp) / "b"
            run(args + ["--out", str(a)])
            run(args + ["--out", str(b)])
            identical &= a.read_bytes() == b.read_bytes()
    return [
        ("gradient vs finite differences < 1e-6", worst_fd < 1e-6, f"{worst_fd:.1e}"),
        ("within-player Hessian blocks zero", blocks_zero, None),
        ("Lyapunov monotonicity", monotone, f"{n_traj} trajectories"),
        ("solver vs grid search 50/50", agree == 50, agree),
        ("byte-identical re-runs", identical, None),
    ]


@criterion(11, "genericity census and planted degenerate game")
def check_11():
    planted = PotentialDecomposition.identical_interest([[1.0, 0.0], [1.0, 2.0]])
    rep = genericity_census((2, 2), 1000, seed=0, game_class="identical", planted=[("planted", planted)])
    flagged = any(e["kind"] == "pure" and not e["first_order_ok"] for e in rep.extra["planted"]["planted"])
    frac = rep.fitted_constants["regular_fraction"]
    return [
        ("regular fraction 1.0", frac == 1.0, frac),
        ("planted fixture first-order degenerate", flagged, None),
    ]


def evaluate(number):
    title, fn = CRITERIA[number]
    checks = fn()
    ok = all(c[1] for c in checks)
    failed = [f"{name} ({detail})" for name, passed, detail in checks if not passed]
    summary = "; ".join(failed) if failed else "; ".join(name for name, *_ in checks)
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {summary}"
    return ok, line


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    ok, line = evaluate(number)
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
