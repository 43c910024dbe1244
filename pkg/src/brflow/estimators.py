"""Estimator-style wrappers around the equilibrium solver and the flow integrator."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .equilibrium import SolverOptions, solve_mixed_equilibria
from .flow import FlowOptions, classify_outcome, integrate_trajectory
from .game import (
    GameStructureError,
    NormalFormGame,
    PotentialDecomposition,
    from_simplex,
    in_strategy_space,
    infer_exact_potential,
)


def as_decomposition(game, tol: float = 1e-9) -> PotentialDecomposition:
    """Accept a decomposition, a normal-form game, or a single identical-interest payoff array."""
    if isinstance(game, PotentialDecomposition):
        return game
    if isinstance(game, NormalFormGame):
        if game.is_identical_interest():
            return PotentialDecomposition(np.ones(game.num_players), game.payoffs[0], game.labels)
        return infer_exact_potential(game, tol)
    arr = np.asarray(game, dtype=float)
    if arr.ndim < 2:
        raise GameStructureError("a payoff array needs one axis per player")
    return PotentialDecomposition.identical_interest(arr)


def check_profiles(X, decomp: PotentialDecomposition, simplex: bool = False, tol: float = 1e-9) -> np.ndarray:
    """Validate a batch of profiles (one per row) and return them in reduced coordinates."""
    counts = decomp.action_counts
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if simplex:
        if X.shape[1] != sum(counts):
            raise ValueError(f"expected {sum(counts)} simplex columns, got {X.shape[1]}")
        splits = np.cumsum(counts)[:-1]
        X = np.array([from_simplex(np.split(row, splits), tol) for row in X]).reshape(-1, decomp.kappa)
    elif X.shape[1] != decomp.kappa:
        raise ValueError(f"expected {decomp.kappa} reduced coordinates, got {X.shape[1]}")
    bad = [r for r, x in enumerate(X) if not in_strategy_space(x, counts, tol)]
    if bad:
        raise ValueError(f"rows {bad[:5]} are outside the strategy space")
    return X


class NashEquilibriumSolver(BaseEstimator):
    """Find and classify the equilibria of a potential game.

    After ``fit``, ``equilibria_`` holds the records (pure first, then mixed
    in carrier order) and ``singular_carriers_`` the carriers on which Newton
    met a singular Hessian.
    """

    def __init__(self, tie_tol=1e-9, solve_tol=1e-10, dedup_tol=1e-7, svd_tol=1e-8, extra_starts=8, seed=0):
        self.tie_tol = tie_tol
        self.solve_tol = solve_tol
        self.dedup_tol = dedup_tol
        self.svd_tol = svd_tol
        self.extra_starts = extra_starts
        self.seed = seed

    def _options(self) -> SolverOptions:
        return SolverOptions(tie_tol=self.tie_tol, solve_tol=self.solve_tol, dedup_tol=self.dedup_tol,
                             svd_tol=self.svd_tol, extra_starts=self.extra_starts, seed=self.seed)

    def fit(self, game, y=None):
        self.decomposition_ = as_decomposition(game)
        report = solve_mixed_equilibria(self.decomposition_, self._options())
        self.equilibria_ = report.equilibria
        self.singular_carriers_ = report.singular_carriers
        return self

    @property
    def is_regular_(self) -> bool:
        check_is_fitted(self, "equilibria_")
        return all(r.regular for r in self.equilibria_)

    def predict(self, X):
        """Index of the nearest equilibrium for each profile."""
        check_is_fitted(self, "equilibria_")
        X = check_profiles(X, self.decomposition_)
        P = np.array([r.profile for r in self.equilibria_])
        return np.argmin(np.linalg.norm(X[:, None, :] - P[None, :, :], axis=2), axis=1)


class BestResponseDynamics(BaseEstimator):
    """Exact best-response flow as a basin classifier.

    ``predict`` maps initial profiles to the index of the equilibrium their
    trajectory reaches (``-1`` for a non-equilibrium stop); ``transform``
    returns the limit or stop points.
    """

    def __init__(self, t_max=100.0, tie_tol=1e-9, cross_eps=1e-9, match_tol=1e-6, svd_tol=1e-8, seed=0):
        self.t_max = t_max
        self.tie_tol = tie_tol
        self.cross_eps = cross_eps
        self.match_tol = match_tol
        self.svd_tol = svd_tol
        self.seed = seed

    def fit(self, game, y=None):
        self.decomposition_ = as_decomposition(game)
        solver = NashEquilibriumSolver(tie_tol=self.tie_tol, svd_tol=self.svd_tol, seed=self.seed)
        self.equilibria_ = solver.fit(self.decomposition_).equilibria_
        self.flow_options_ = FlowOptions(t_max=self.t_max, tie_tol=self.tie_tol, cross_eps=self.cross_eps)
        return self

    def trajectories(self, X):
        check_is_fitted(self, "equilibria_")
        X = check_profiles(X, self.decomposition_)
        return [integrate_trajectory(self.decomposition_, x, self.flow_options_) for x in X]

    def transform(self, X):
        trajs = self.trajectories(X)
        return np.array([t.stop_point for t in trajs]).reshape(-1, self.decomposition_.kappa)

    def predict(self, X):
        labels = []
        for traj in self.trajectories(X):
            rec = classify_outcome(traj, self.equilibria_, self.match_tol)
            labels.append(-1 if rec is None else next(k for k, r in enumerate(self.equilibria_) if r is rec))
        return np.array(labels, dtype=int)
