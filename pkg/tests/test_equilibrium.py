import logging

import numpy as np
import pytest

from brflow.equilibrium import (
    EquilibriumRecord,
    NotAnEquilibriumError,
    SolverOptions,
    classify_regularity,
    enumerate_carriers,
    enumerate_pure_equilibria,
    find_equilibria,
    solve_mixed_equilibria,
    verify_equilibrium,
)
from brflow.game import Carrier, PotentialDecomposition, potential_gradient

COORD = PotentialDecomposition.identical_interest([[1.0, 0.0], [0.0, 2.0]])


def pure_set(records, labels):
    return {tuple(labels[i][s[0]] for i, s in enumerate(r.carrier.supports)) for r in records if r.kind == "pure"}


def test_verify_equilibrium_examples(ex51):
    assert verify_equilibrium(COORD, [1 / 3, 1 / 3])[0]
    assert not verify_equilibrium(COORD, [0.5, 0.5])[0]
    assert verify_equilibrium(ex51, [2 / 3, 2 / 3, 1.0])[0]


def test_pure_equilibria(ex21, ex41, ex51):
    assert pure_set(enumerate_pure_equilibria(ex21), ex21.labels) == {("A", "A"), ("B", "B")}
    assert pure_set(enumerate_pure_equilibria(ex41), ex41.labels) == {("A", "A"), ("B", "B")}
    # player 3 strictly prefers B at every profile of the shipped table
    assert pure_set(enumerate_pure_equilibria(ex51), ex51.labels) == {("A", "A", "B"), ("B", "B", "B")}


def test_pure_equilibria_brute_force_oracle():
    rng = np.random.default_rng(5)
    for _ in range(30):
        u = rng.integers(-2, 3, size=(2, 3, 2)).astype(float)
        d = PotentialDecomposition.identical_interest(u)
        expected = set()
        for y in np.ndindex(u.shape):
            if all(u[y] >= max(u[y[:i] + (a,) + y[i + 1:]] for a in range(u.shape[i])) for i in range(3)):
                expected.add(y)
        got = {tuple(s[0] for s in r.carrier.supports) for r in enumerate_pure_equilibria(d)}
        assert got == expected


def test_mixed_examples(ex21, ex41, ex51):
    mixed = [r for r in find_equilibria(ex21) if r.kind != "pure"]
    assert len(mixed) == 1
    np.testing.assert_allclose(mixed[0].profile, [1 / 3, 1 / 3], atol=1e-12)
    assert mixed[0].kind == "completely-mixed" and mixed[0].regular
    assert mixed[0].hessian_min_singular_value == pytest.approx(3.0, abs=1e-9)

    mixed = [r for r in find_equilibria(ex41) if r.kind != "pure"]
    assert len(mixed) == 1 and mixed[0].kind == "incompletely-mixed"
    np.testing.assert_allclose(mixed[0].profile, [1 / 3, 1 / 3, 0.0], atol=1e-12)

    mixed = [r for r in find_equilibria(ex51) if r.kind != "pure"]
    assert len(mixed) == 1 and mixed[0].regular
    np.testing.assert_allclose(mixed[0].profile, [2 / 3, 2 / 3, 1.0], atol=1e-12)


def test_first_order_degenerate_pure_equilibrium():
    d = PotentialDecomposition.identical_interest([[1.0, 0.0], [1.0, 2.0]])
    rec = next(r for r in enumerate_pure_equilibria(d) if tuple(r.profile) == (0.0, 0.0))
    rec = classify_regularity(d, rec)
    assert not rec.first_order_ok and not rec.regular


def test_strict_pure_equilibrium_is_regular():
    rec = next(r for r in enumerate_pure_equilibria(COORD) if tuple(r.profile) == (1.0, 1.0))
    rec = classify_regularity(COORD, rec)
    assert rec.first_order_ok and rec.second_order_ok and rec.regular
    assert rec.hessian_min_singular_value == np.inf


def test_classify_rejects_non_equilibrium():
    rec = EquilibriumRecord(np.array([0.5, 0.5]), Carrier(((0, 1), (0, 1))), "completely-mixed")
    with pytest.raises(NotAnEquilibriumError):
        classify_regularity(COORD, rec)


def test_second_order_degenerate_mixed_equilibrium():
    # constant potential: every profile is an equilibrium and the Hessian vanishes
    d = PotentialDecomposition.identical_interest([[1.0, 1.0], [1.0, 1.0]])
    rec = EquilibriumRecord(np.array([0.5, 0.5]), Carrier(((0, 1), (0, 1))), "completely-mixed")
    rec = classify_regularity(d, rec)
    assert rec.first_order_ok and not rec.second_order_ok and not rec.regular


def test_carrier_order_is_size_then_lexicographic():
    carriers = enumerate_carriers((2, 3), min_mixers=1)
    sizes = [c.size for c in carriers]
    assert sizes == sorted(sizes)
    assert carriers[0].supports == ((0,), (0, 1))
    assert len(enumerate_carriers((2, 2), min_mixers=2)) == 1


def test_solver_is_deterministic():
    rng = np.random.default_rng(1)
    d = PotentialDecomposition.identical_interest(rng.uniform(-1, 1, (3, 3)))
    a = solve_mixed_equilibria(d, SolverOptions(seed=4)).equilibria
    b = solve_mixed_equilibria(d, SolverOptions(seed=4)).equilibria
    assert [r.profile.tobytes() for r in a] == [r.profile.tobytes() for r in b]


def _grid_oracle_2x2(u, step=1e-3):
    """Equilibria of a 2x2 identical-interest game by grid scan plus bisection."""
    def gap1(x2):  # player 1: U(B) - U(A) given player 2 mixes x2 on B
        return (1 - x2) * (u[1, 0] - u[0, 0]) + x2 * (u[1, 1] - u[0, 1])

    def gap2(x1):
        return (1 - x1) * (u[0, 1] - u[0, 0]) + x1 * (u[1, 1] - u[1, 0])

    def roots(f):
        grid = np.arange(0.0, 1.0 + step / 2, step)
        vals = np.array([f(g) for g in grid])
        out = []
        for j in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
            lo, hi = grid[j], grid[j + 1]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if np.sign(f(mid)) == np.sign(f(lo)):
                    lo = mid
                else:
                    hi = mid
            out.append(0.5 * (lo + hi))
        return out

    eqs = []
    for y in np.ndindex(2, 2):
        if u[y] >= u[1 - y[0], y[1]] and u[y] >= u[y[0], 1 - y[1]]:
            eqs.append(np.array(y, dtype=float))
    for x2 in roots(gap1):
        for x1 in roots(gap2):
            eqs.append(np.array([x1, x2]))
    return eqs


def test_solver_matches_grid_search_on_random_2x2_games():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        u = rng.uniform(-1, 1, (2, 2))
        d = PotentialDecomposition.identical_interest(u)
        found = sorted(tuple(np.round(r.profile, 6)) for r in find_equilibria(d))
        oracle = sorted(tuple(np.round(p, 6)) for p in _grid_oracle_2x2(u))
        assert found == oracle


def test_records_verify_and_first_order_condition_holds():
    rng = np.random.default_rng(9)
    for _ in range(20):
        shape = tuple(rng.integers(2, 4, size=2))
        d = PotentialDecomposition.identical_interest(rng.uniform(-1, 1, shape))
        opts = SolverOptions()
        eqs = solve_mixed_equilibria(d, opts).equilibria
        n = len(eqs)
        logging.getLogger(__name__).info("shape %s: %d equilibria (%s)", shape, n, "odd" if n % 2 else "even")
        for r in eqs:
            ok, res = verify_equilibrium(d, r.profile, opts.tie_tol)
            assert ok and res < opts.solve_tol
            if r.kind == "completely-mixed":
                np.testing.assert_allclose(potential_gradient(d, r.profile), 0.0, atol=opts.solve_tol)


def test_one_mixer_roots_are_flagged():
    d = PotentialDecomposition.identical_interest([[1.0, 0.0], [1.0, 2.0]])
    for r in find_equilibria(d):
        if r.kind != "pure" and len(r.carrier.mixing_players) < 2:
            assert not r.regular
