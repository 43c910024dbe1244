"""Finite N-player games, weighted potentials and the multilinear potential.

Mixed profiles are stored in *reduced coordinates*: a flat float vector that
concatenates, player by player, the weights on actions ``1..K_i-1``.  The
weight on action ``0`` is implied.  The total length is ``kappa``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TIE_TOL = 1e-9


class GameStructureError(ValueError):
    """Raised when a game, decomposition or profile has an invalid shape or value."""


class NotPotentialGameError(ValueError):
    """Raised when payoffs admit no (exact) potential within tolerance."""


def _freeze(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def default_labels(action_counts) -> tuple[tuple[str, ...], ...]:
    out = []
    for k in action_counts:
        if k <= 26:
            out.append(tuple(chr(ord("A") + a) for a in range(k)))
        else:
            out.append(tuple(f"a{a}" for a in range(k)))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class NormalFormGame:
    """Payoff tensors ``payoffs[i][y_1, ..., y_N]`` for every player ``i``."""

    payoffs: tuple
    labels: tuple = None

    def __post_init__(self):
        tensors = tuple(_freeze(p) for p in self.payoffs)
        if len(tensors) < 2:
            raise GameStructureError("a game needs at least two players")
        shape = tensors[0].shape
        if len(shape) != len(tensors):
            raise GameStructureError(
                f"payoff tensors have {len(shape)} axes but there are {len(tensors)} players"
            )
        for i, t in enumerate(tensors):
            if t.shape != shape:
                raise GameStructureError(f"payoff tensor of player {i + 1} has shape {t.shape}, expected {shape}")
            if not np.all(np.isfinite(t)):
                raise GameStructureError(f"payoffs of player {i + 1} contain non-finite entries")
        if any(k < 2 for k in shape):
            raise GameStructureError("every player needs at least two actions")
        object.__setattr__(self, "payoffs", tensors)
        labels = self.labels if self.labels is not None else default_labels(shape)
        labels = tuple(tuple(str(a) for a in ls) for ls in labels)
        if tuple(len(ls) for ls in labels) != shape:
            raise GameStructureError("action labels do not match the payoff shape")
        object.__setattr__(self, "labels", labels)

    @property
    def num_players(self) -> int:
        return len(self.payoffs)

    @property
    def action_counts(self) -> tuple[int, ...]:
        return self.payoffs[0].shape

    @property
    def kappa(self) -> int:
        return int(sum(k - 1 for k in self.action_counts))

    def is_identical_interest(self, tol: float = 0.0) -> bool:
        first = self.payoffs[0]
        return all(np.max(np.abs(p - first)) <= tol for p in self.payoffs[1:])


@dataclass(frozen=True, eq=False)
class PotentialDecomposition:
    """Positive player weights plus the pure form ``u`` of a potential."""

    weights: np.ndarray
    potential: np.ndarray
    labels: tuple = None
    _offsets: tuple = field(init=False, repr=False)

    def __post_init__(self):
        w = _freeze(self.weights)
        u = _freeze(self.potential)
        if w.ndim != 1 or w.shape[0] != u.ndim:
            raise GameStructureError(f"{w.size} weights given for a {u.ndim}-player potential")
        if u.ndim < 2 or any(k < 2 for k in u.shape):
            raise GameStructureError("a potential needs at least two players with two actions each")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise GameStructureError(f"weights must be positive and finite, got {w.tolist()}")
        if not np.all(np.isfinite(u)):
            raise GameStructureError("potential contains non-finite entries")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "potential", u)
        labels = self.labels if self.labels is not None else default_labels(u.shape)
        object.__setattr__(self, "labels", tuple(tuple(ls) for ls in labels))
        object.__setattr__(self, "_offsets", tuple(np.cumsum([0] + [k - 1 for k in u.shape]).tolist()))

    @classmethod
    def identical_interest(cls, payoff) -> "PotentialDecomposition":
        u = np.asarray(payoff, dtype=float)
        return cls(np.ones(u.ndim), u)

    @property
    def num_players(self) -> int:
        return self.potential.ndim

    @property
    def action_counts(self) -> tuple[int, ...]:
        return self.potential.shape

    @property
    def kappa(self) -> int:
        return self._offsets[-1]

    def player_slice(self, i: int) -> slice:
        return slice(self._offsets[i], self._offsets[i + 1])

    def coord_index(self, i: int, k: int) -> int:
        """Flat index of reduced coordinate ``k`` (0-based, weight on action k+1) of player ``i``."""
        return self._offsets[i] + k

    def to_game(self) -> NormalFormGame:
        return NormalFormGame(tuple(w * self.potential for w in self.weights), self.labels)


@dataclass(frozen=True)
class Carrier:
    """Per-player sorted supports."""

    supports: tuple

    def __post_init__(self):
        sup = tuple(tuple(sorted(int(a) for a in s)) for s in self.supports)
        if any(len(s) == 0 for s in sup):
            raise GameStructureError("every player needs a non-empty support")
        object.__setattr__(self, "supports", sup)

    @property
    def gamma(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.supports)

    @property
    def mixing_players(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.supports) if len(s) >= 2)

    @property
    def size(self) -> int:
        return sum(self.gamma)

    def check(self, action_counts) -> None:
        if len(self.supports) != len(action_counts):
            raise GameStructureError("carrier has the wrong number of players")
        for i, (s, k) in enumerate(zip(self.supports, action_counts)):
            if s[0] < 0 or s[-1] >= k:
                raise GameStructureError(f"carrier action out of range for player {i + 1}")

    def permutation(self, i: int, num_actions: int) -> list[int]:
        """Carrier-first action ordering for player ``i``."""
        s = self.supports[i]
        return list(s) + [a for a in range(num_actions) if a not in s]


# ---------------------------------------------------------------------------
# coordinate maps


def to_simplex(x, action_counts, tol: float = 1e-9) -> list[np.ndarray]:
    """Map reduced coordinates to per-player probability vectors."""
    x = np.asarray(x, dtype=float)
    kappa = sum(k - 1 for k in action_counts)
    if x.shape != (kappa,):
        raise GameStructureError(f"profile has shape {x.shape}, expected ({kappa},)")
    out = []
    pos = 0
    for k in action_counts:
        xi = x[pos : pos + k - 1]
        pos += k - 1
        sigma = np.empty(k)
        sigma[0] = 1.0 - xi.sum()
        sigma[1:] = xi
        if np.any(sigma < -tol):
            raise GameStructureError(f"profile leaves the strategy space: {sigma.tolist()}")
        out.append(sigma)
    return out


def from_simplex(sigmas, tol: float = 1e-9) -> np.ndarray:
    parts = []
    for s in sigmas:
        s = np.asarray(s, dtype=float)
        if np.any(s < -tol) or abs(s.sum() - 1.0) > tol:
            raise GameStructureError(f"not a probability vector: {s.tolist()}")
        parts.append(s[1:])
    return np.concatenate(parts)


def _sigmas(x, action_counts) -> list[np.ndarray]:
    # no membership check: the multilinear formula is evaluated as a polynomial
    x = np.asarray(x, dtype=float)
    out = []
    pos = 0
    for k in action_counts:
        sigma = np.empty(k)
        sigma[1:] = x[pos : pos + k - 1]
        sigma[0] = 1.0 - sigma[1:].sum()
        pos += k - 1
        out.append(sigma)
    return out


def in_strategy_space(x, action_counts, tol: float = 1e-12) -> bool:
    x = np.asarray(x, dtype=float)
    if x.shape != (sum(k - 1 for k in action_counts),):
        return False
    return all(np.all(s >= -tol) for s in _sigmas(x, action_counts))


def vertex(profile, action_counts) -> np.ndarray:
    """Reduced coordinates of the pure profile ``profile``."""
    parts = []
    for a, k in zip(profile, action_counts):
        v = np.zeros(k - 1)
        if a > 0:
            v[a - 1] = 1.0
        parts.append(v)
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# multilinear evaluation


def _contract(u: np.ndarray, sigmas, keep=()) -> np.ndarray:
    """Contract every axis of ``u`` not in ``keep`` against the matching sigma."""
    t = u
    for j in range(u.ndim - 1, -1, -1):
        if j in keep:
            continue
        t = np.tensordot(t, sigmas[j], axes=([j], [0]))
    return t


def action_values(decomp: PotentialDecomposition, i: int, x) -> np.ndarray:
    """``U(y_i^k, x_{-i})`` for every action ``k`` of player ``i``."""
    return _contract(decomp.potential, _sigmas(x, decomp.action_counts), keep=(i,))


def all_action_values(decomp: PotentialDecomposition, x) -> list[np.ndarray]:
    sig = _sigmas(x, decomp.action_counts)
    return [_contract(decomp.potential, sig, keep=(i,)) for i in range(decomp.num_players)]


def expected_potential(decomp: PotentialDecomposition, x) -> float:
    """Multilinear extension ``U(x) = sum_y u(y) prod_i sigma_i(y_i)``."""
    return float(_contract(decomp.potential, _sigmas(x, decomp.action_counts)))


def expected_utility(game: NormalFormGame, i: int, x) -> float:
    if not 0 <= i < game.num_players:
        raise IndexError(f"player index {i} out of range")
    return float(_contract(game.payoffs[i], _sigmas(x, game.action_counts)))


def partial_potential(decomp: PotentialDecomposition, i: int, k: int, x) -> float:
    """dU/dx_i^k = U(y_i^{k+1}, x_{-i}) - U(y_i^1, x_{-i}) with ``k`` 0-based."""
    if not 0 <= i < decomp.num_players or not 0 <= k < decomp.action_counts[i] - 1:
        raise IndexError(f"coordinate ({i}, {k}) out of range")
    v = action_values(decomp, i, x)
    return float(v[k + 1] - v[0])


def potential_gradient(decomp: PotentialDecomposition, x) -> np.ndarray:
    vals = all_action_values(decomp, x)
    return np.concatenate([v[1:] - v[0] for v in vals])


def mixed_hessian(decomp: PotentialDecomposition, carrier: Carrier, x) -> np.ndarray:
    """Hessian of ``U`` in the coordinates left free by ``carrier``.

    Rows and columns are ordered by mixing player, then by the player's
    support (smallest action index is the implied reference action).
    """
    carrier.check(decomp.action_counts)
    sig = _sigmas(x, decomp.action_counts)
    mixers = carrier.mixing_players
    sizes = [carrier.gamma[i] - 1 for i in mixers]
    starts = np.cumsum([0] + sizes)
    H = np.zeros((starts[-1], starts[-1]))
    for a, i in enumerate(mixers):
        ci = carrier.supports[i]
        for b in range(a + 1, len(mixers)):
            j = mixers[b]
            cj = carrier.supports[j]
            M = _contract(decomp.potential, sig, keep=(i, j))
            M = M[np.ix_(ci, cj)]
            block = M[1:, 1:] - M[1:, :1] - M[:1, 1:] + M[0, 0]
            H[starts[a] : starts[a + 1], starts[b] : starts[b + 1]] = block
            H[starts[b] : starts[b + 1], starts[a] : starts[a + 1]] = block.T
    return H


def best_response_set(decomp: PotentialDecomposition, i: int, x, tie_tol: float = DEFAULT_TIE_TOL) -> tuple[int, ...]:
    v = action_values(decomp, i, x)
    return tuple(np.flatnonzero(v >= v.max() - tie_tol).tolist())


def best_response_sets(decomp: PotentialDecomposition, x, tie_tol: float = DEFAULT_TIE_TOL):
    return tuple(tuple(np.flatnonzero(v >= v.max() - tie_tol).tolist()) for v in all_action_values(decomp, x))


def carrier_of(x, action_counts, tol: float = 1e-12) -> Carrier:
    return Carrier(tuple(tuple(np.flatnonzero(s > tol).tolist()) for s in _sigmas(x, action_counts)))


def kind_of(carrier: Carrier, action_counts) -> str:
    if all(g == 1 for g in carrier.gamma):
        return "pure"
    if all(g == k for g, k in zip(carrier.gamma, action_counts)):
        return "completely-mixed"
    return "incompletely-mixed"


# ---------------------------------------------------------------------------
# potential structure


@dataclass
class DecompositionCheck:
    ok: bool
    max_residual: float
    worst: tuple | None = None  # (player, y_-i profile, y_i', y_i'')

    def __bool__(self) -> bool:
        return self.ok


def verify_potential_decomposition(game: NormalFormGame, decomp: PotentialDecomposition, tol: float = 1e-9) -> DecompositionCheck:
    """Check ``u_i(y', y_-i) - u_i(y'', y_-i) = w_i (u(y', y_-i) - u(y'', y_-i))`` everywhere."""
    if tuple(game.action_counts) != tuple(decomp.action_counts):
        raise GameStructureError(f"game shape {game.action_counts} does not match potential shape {decomp.action_counts}")
    worst_val, worst = 0.0, None
    for i in range(game.num_players):
        r = game.payoffs[i] - decomp.weights[i] * decomp.potential
        r = np.moveaxis(r, i, 0)
        dev = r - r[:1]
        # worst pair (y', y'') for each y_-i is the spread of the residual over y_i
        hi = dev.max(axis=0)
        lo = dev.min(axis=0)
        spread = hi - lo
        idx = np.unravel_index(np.argmax(spread), spread.shape)
        if spread[idx] > worst_val:
            worst_val = float(spread[idx])
            col = dev[(slice(None),) + idx]
            opp = list(idx)
            opp.insert(i, None)
            worst = (i, tuple(opp), int(np.argmax(col)), int(np.argmin(col)))
    ok = worst_val <= tol
    return DecompositionCheck(ok, worst_val, None if ok else worst)


def infer_exact_potential(game: NormalFormGame, tol: float = 1e-9, weights=None) -> PotentialDecomposition:
    """Solve for ``u`` with ``u_i / w_i`` differences; anchored so ``u(0,...,0) = u_1(0,...,0) / w_1``."""
    w = np.ones(game.num_players) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (game.num_players,) or np.any(w <= 0):
        raise GameStructureError("weights must be one positive value per player")
    shape = game.action_counts
    K = int(np.prod(shape))
    index = np.arange(K).reshape(shape)
    rows, rhs = [], []
    for i in range(game.num_players):
        scaled = game.payoffs[i] / w[i]
        idx_i = np.moveaxis(index, i, 0).reshape(shape[i], -1)
        val_i = np.moveaxis(scaled, i, 0).reshape(shape[i], -1)
        for a in range(1, shape[i]):
            for col in range(idx_i.shape[1]):
                rows.append((idx_i[a, col], idx_i[0, col]))
                rhs.append(val_i[a, col] - val_i[0, col])
    A = np.zeros((len(rows) + 1, K))
    for r, (p, q) in enumerate(rows):
        A[r, p] = 1.0
        A[r, q] = -1.0
    A[-1, 0] = 1.0
    b = np.array(rhs + [game.payoffs[0].flat[0] / w[0]])
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    decomp = PotentialDecomposition(w, sol.reshape(shape), game.labels)
    check = verify_potential_decomposition(game, decomp, tol)
    if not check.ok:
        raise NotPotentialGameError(f"not an exact potential game (residual {check.max_residual:.3g})")
    return decomp


def pure_profiles(action_counts):
    return itertools.product(*(range(k) for k in action_counts))
