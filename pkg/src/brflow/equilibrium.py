"""Pure and mixed Nash equilibria of potential games and their regularity."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .game import (
    DEFAULT_TIE_TOL,
    Carrier,
    PotentialDecomposition,
    _contract,
    _sigmas,
    best_response_sets,
    carrier_of,
    kind_of,
    mixed_hessian,
    pure_profiles,
    vertex,
)


class NotAnEquilibriumError(ValueError):
    pass


@dataclass(frozen=True)
class EquilibriumRecord:
    profile: np.ndarray
    carrier: Carrier
    kind: str
    first_order_ok: bool = True
    second_order_ok: bool = True
    regular: bool = True
    hessian_min_singular_value: float = math.inf
    residual: float = 0.0
    hessian_singular_values: tuple = ()

    def simplex(self, action_counts) -> list[np.ndarray]:
        return _sigmas(self.profile, action_counts)


@dataclass
class SolverOptions:
    tie_tol: float = DEFAULT_TIE_TOL
    solve_tol: float = 1e-10
    dedup_tol: float = 1e-7
    svd_tol: float = 1e-8
    extra_starts: int = 8
    max_iter: int = 100
    max_halvings: int = 30
    seed: int = 0
    single_mixer: bool = True


@dataclass
class SolveReport:
    equilibria: list
    carriers_tried: int = 0
    singular_carriers: list = field(default_factory=list)


def equilibrium_residual(decomp: PotentialDecomposition, x, support_tol: float = 1e-9) -> float:
    """Largest payoff shortfall of a carrier action against the best action, over players."""
    sig = _sigmas(x, decomp.action_counts)
    worst = 0.0
    for i in range(decomp.num_players):
        v = _contract(decomp.potential, sig, keep=(i,))
        supp = sig[i] > support_tol
        worst = max(worst, float(v.max() - v[supp].min()))
    return worst


def verify_equilibrium(decomp: PotentialDecomposition, x, tol: float = 1e-9) -> tuple[bool, float]:
    """True iff every carrier action of every player is a best response within ``tol``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.concatenate(_sigmas(x, decomp.action_counts)) < -tol):
        return False, math.inf
    r = equilibrium_residual(decomp, x, support_tol=tol)
    return r <= tol, r


def _is_strict(decomp, profile, tie_tol) -> bool:
    u = decomp.potential
    for i, a in enumerate(profile):
        idx = list(profile)
        idx[i] = slice(None)
        col = u[tuple(idx)]
        others = np.delete(col, a)
        if np.any(others >= col[a] - tie_tol):
            return False
    return True


def enumerate_pure_equilibria(decomp: PotentialDecomposition, tie_tol: float = DEFAULT_TIE_TOL) -> list[EquilibriumRecord]:
    u = decomp.potential
    ok = np.ones(u.shape, dtype=bool)
    for i in range(u.ndim):
        ok &= u >= u.max(axis=i, keepdims=True) - tie_tol
    out = []
    for y in pure_profiles(u.shape):
        if not ok[y]:
            continue
        strict = _is_strict(decomp, y, tie_tol)
        out.append(
            EquilibriumRecord(
                profile=vertex(y, u.shape),
                carrier=Carrier(tuple((a,) for a in y)),
                kind="pure",
                first_order_ok=strict,
                second_order_ok=True,
                regular=strict,
            )
        )
    return out


def classify_regularity(
    decomp: PotentialDecomposition,
    record: EquilibriumRecord,
    svd_tol: float = 1e-8,
    tie_tol: float = DEFAULT_TIE_TOL,
    eq_tol: float = 1e-8,
) -> EquilibriumRecord:
    """Fill in first/second-order verdicts (quasi-strong carrier, nonsingular carrier Hessian)."""
    x = record.profile
    ok, res = verify_equilibrium(decomp, x, eq_tol)
    if not ok:
        raise NotAnEquilibriumError(f"profile is not an equilibrium (residual {res:.3g})")
    carrier = record.carrier
    brs = best_response_sets(decomp, x, tie_tol)
    first = all(tuple(b) == tuple(c) for b, c in zip(brs, carrier.supports))
    if not carrier.mixing_players:
        return replace(record, kind="pure", first_order_ok=first, second_order_ok=True, regular=first,
                       hessian_min_singular_value=math.inf, hessian_singular_values=(), residual=res)
    H = mixed_hessian(decomp, carrier, x)
    sv = np.linalg.svd(H, compute_uv=False)
    smin = float(sv.min())
    second = smin > svd_tol
    return replace(
        record,
        kind=kind_of(carrier, decomp.action_counts),
        first_order_ok=first,
        second_order_ok=second,
        regular=first and second,
        hessian_min_singular_value=smin,
        hessian_singular_values=tuple(float(s) for s in sv),
        residual=max(record.residual, res),
    )


def enumerate_carriers(action_counts, min_mixers: int = 1):
    """Carriers with at least ``min_mixers`` mixing players, by size then lexicographically."""
    per_player = []
    for k in action_counts:
        subsets = [c for r in range(1, k + 1) for c in itertools.combinations(range(k), r)]
        per_player.append(subsets)
    carriers = [Carrier(sup) for sup in itertools.product(*per_player)]
    carriers = [c for c in carriers if len(c.mixing_players) >= min_mixers]
    carriers.sort(key=lambda c: (c.size, c.supports))
    return carriers


class _CarrierSystem:
    """F(z) = 0 on the face of one carrier; z are the free weights (support order, reference dropped)."""

    def __init__(self, decomp: PotentialDecomposition, carrier: Carrier):
        self.decomp = decomp
        self.carrier = carrier
        self.mixers = carrier.mixing_players
        self.sizes = [carrier.gamma[i] - 1 for i in self.mixers]
        self.dim = sum(self.sizes)

    def sigmas(self, z) -> list[np.ndarray]:
        sig = []
        pos = 0
        for i, k in enumerate(self.decomp.action_counts):
            s = np.zeros(k)
            sup = self.carrier.supports[i]
            if len(sup) == 1:
                s[sup[0]] = 1.0
            else:
                w = z[pos : pos + len(sup) - 1]
                pos += len(sup) - 1
                s[list(sup[1:])] = w
                s[sup[0]] = 1.0 - w.sum()
            sig.append(s)
        return sig

    def profile(self, z) -> np.ndarray:
        return np.concatenate([s[1:] for s in self.sigmas(z)])

    def residual(self, z) -> np.ndarray:
        sig = self.sigmas(z)
        out = []
        for i in self.mixers:
            v = _contract(self.decomp.potential, sig, keep=(i,))
            sup = self.carrier.supports[i]
            out.append(v[list(sup[1:])] - v[sup[0]])
        return np.concatenate(out)

    def jacobian(self, z) -> np.ndarray:
        return mixed_hessian(self.decomp, self.carrier, self.profile(z))

    def barycenter(self) -> np.ndarray:
        return np.concatenate([np.full(n, 1.0 / (n + 1)) for n in self.sizes])

    def random_start(self, rng) -> np.ndarray:
        return np.concatenate([rng.dirichlet(np.ones(n + 1))[1:] for n in self.sizes])

    def interior(self, z, margin: float = 0.0) -> bool:
        sig = self.sigmas(z)
        for i in self.mixers:
            if np.any(sig[i][list(self.carrier.supports[i])] <= margin):
                return False
        return True


def _damped_newton(system: _CarrierSystem, z0, opts: SolverOptions):
    """Returns (z, residual_norm, singular_flag)."""
    z = np.array(z0, dtype=float)
    F = system.residual(z)
    norm = float(np.max(np.abs(F)))
    for _ in range(opts.max_iter):
        if norm < opts.solve_tol:
            return z, norm, False
        J = system.jacobian(z)
        sv = np.linalg.svd(J, compute_uv=False)
        if sv.min() <= opts.svd_tol * max(1.0, sv.max()):
            return z, norm, True
        step = np.linalg.solve(J, -F)
        lam = 1.0
        for _ in range(opts.max_halvings + 1):
            z_new = z + lam * step
            F_new = system.residual(z_new)
            n_new = float(np.max(np.abs(F_new)))
            if n_new < norm:
                break
            lam *= 0.5
        else:
            return z, norm, False
        z, F, norm = z_new, F_new, n_new
    return z, norm, False


def solve_mixed_equilibria(decomp: PotentialDecomposition, opts: SolverOptions | None = None) -> SolveReport:
    """All equilibria found by support enumeration plus damped Newton, pure ones included."""
    opts = opts or SolverOptions()
    found = [classify_regularity(decomp, r, opts.svd_tol, opts.tie_tol) for r in enumerate_pure_equilibria(decomp, opts.tie_tol)]
    report = SolveReport(equilibria=found)
    carriers = enumerate_carriers(decomp.action_counts, 1 if opts.single_mixer else 2)
    for index, carrier in enumerate(carriers):
        report.carriers_tried += 1
        system = _CarrierSystem(decomp, carrier)
        rng = np.random.default_rng([opts.seed, index])
        starts = [system.barycenter()] + [system.random_start(rng) for _ in range(opts.extra_starts)]
        singular = False
        for z0 in starts:
            z, norm, sing = _damped_newton(system, z0, opts)
            singular |= sing
            if norm >= opts.solve_tol or not system.interior(z):
                continue
            x = system.profile(z)
            ok, res = verify_equilibrium(decomp, x, max(opts.solve_tol, opts.tie_tol))
            if not ok:
                continue
            if any(np.linalg.norm(x - r.profile) < opts.dedup_tol for r in found):
                continue
            rec = EquilibriumRecord(profile=x, carrier=carrier_of(x, decomp.action_counts, 0.0),
                                    kind=kind_of(carrier, decomp.action_counts), residual=max(norm, res))
            rec = classify_regularity(decomp, rec, opts.svd_tol, opts.tie_tol, eq_tol=max(opts.solve_tol, opts.tie_tol))
            if len(carrier.mixing_players) < 2:
                rec = replace(rec, second_order_ok=False, regular=False)
            found.append(rec)
        if singular:
            report.singular_carriers.append(carrier)
    return report


def find_equilibria(decomp: PotentialDecomposition, **kwargs) -> list[EquilibriumRecord]:
    return solve_mixed_equilibria(decomp, SolverOptions(**kwargs)).equilibria
