"""Readers and writers for game files, equilibrium reports and CSV artifacts.

JSON floats are written with ``repr`` and CSV floats with 17 significant
digits, so every value round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .equilibrium import EquilibriumRecord
from .game import (
    Carrier,
    GameStructureError,
    NormalFormGame,
    NotPotentialGameError,
    PotentialDecomposition,
    _sigmas,
    infer_exact_potential,
    verify_potential_decomposition,
)

FLOAT_FORMAT = "%.17g"


class GameFileError(ValueError):
    """The file could not be read or does not follow the game format."""


# ---------------------------------------------------------------------------
# game files


def parse_game(data: dict, tol: float = 1e-9) -> tuple[NormalFormGame, PotentialDecomposition]:
    """Build the game and a verified potential decomposition from the JSON object.

    Raises GameFileError for malformed content and NotPotentialGameError when
    no weighted potential is given or inferable.
    """
    if not isinstance(data, dict):
        raise GameFileError("game file must hold a JSON object")
    try:
        players = data["players"]
        labels = tuple(tuple(str(a) for a in p["actions"]) for p in players)
        counts = tuple(len(a) for a in labels)
        flat = data["payoffs"]
        if len(flat) != len(counts):
            raise GameFileError(f"{len(flat)} payoff lists for {len(counts)} players")
        payoffs = tuple(_tensor(p, counts, "payoffs") for p in flat)
    except (KeyError, TypeError) as exc:
        raise GameFileError(f"malformed game file: {exc!r}") from exc
    try:
        game = NormalFormGame(payoffs, labels)
    except GameStructureError as exc:
        raise GameFileError(str(exc)) from exc

    weights = data.get("weights")
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(counts),):
            raise GameFileError("weights must list one value per player")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise GameStructureError("weights must be positive and finite")
    if "potential" in data:
        u = _tensor(data["potential"], counts, "potential")
        decomp = PotentialDecomposition(np.ones(len(counts)) if weights is None else weights, u, labels)
        check = verify_potential_decomposition(game, decomp, tol)
        if not check.ok:
            raise NotPotentialGameError(f"declared potential fails the decomposition check (residual {check.max_residual:.3g})")
        return game, decomp
    if weights is None and game.is_identical_interest():
        return game, PotentialDecomposition(np.ones(len(counts)), payoffs[0], labels)
    return game, infer_exact_potential(game, tol, weights=weights)


def _tensor(values, counts, what) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    size = int(np.prod(counts))
    if arr.ndim != 1 or arr.size != size:
        raise GameFileError(f"{what} must be a flat list of {size} numbers")
    if not np.all(np.isfinite(arr)):
        raise GameFileError(f"{what} contains non-finite values")
    return arr.reshape(counts)


def load_game(path, tol: float = 1e-9) -> tuple[NormalFormGame, PotentialDecomposition]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise GameFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFileError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return parse_game(data, tol)


def game_to_dict(game: NormalFormGame, decomp: PotentialDecomposition | None = None) -> dict:
    out = {
        "players": [{"actions": list(a)} for a in game.labels],
        "payoffs": [p.reshape(-1).tolist() for p in game.payoffs],
    }
    if decomp is not None:
        out["weights"] = decomp.weights.tolist()
        out["potential"] = decomp.potential.reshape(-1).tolist()
    return out


def write_game(path, game: NormalFormGame, decomp: PotentialDecomposition | None = None) -> None:
    write_json(path, game_to_dict(game, decomp))


# ---------------------------------------------------------------------------
# JSON reports


def dumps(obj) -> str:
    """Strict JSON: NaN and infinities become null."""
    return json.dumps(_strict(obj), indent=2, default=_json_default, allow_nan=False) + "\n"


def _strict(obj):
    if isinstance(obj, dict):
        return {k: _strict(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_strict(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _strict(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj) -> None:
    _write_text(path, dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise GameFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise GameFileError(f"{path}: invalid JSON ({exc.msg})") from exc


def _write_text(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise GameFileError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _finite_or_none(v: float):
    return v if math.isfinite(v) else None


def equilibrium_to_dict(record: EquilibriumRecord, decomp: PotentialDecomposition) -> dict:
    labels = decomp.labels
    return {
        "profile": record.profile.tolist(),
        "simplex": [s.tolist() for s in _sigmas(record.profile, decomp.action_counts)],
        "support": [[labels[i][a] for a in sup] for i, sup in enumerate(record.carrier.supports)],
        "carrier": [list(sup) for sup in record.carrier.supports],
        "kind": record.kind,
        "first_order_ok": record.first_order_ok,
        "second_order_ok": record.second_order_ok,
        "regular": record.regular,
        "hessian_min_singular_value": _finite_or_none(record.hessian_min_singular_value),
        "hessian_singular_values": list(record.hessian_singular_values),
        "residual": record.residual,
    }


def equilibrium_from_dict(d: dict) -> EquilibriumRecord:
    smin = d.get("hessian_min_singular_value")
    return EquilibriumRecord(
        profile=np.asarray(d["profile"], dtype=float),
        carrier=Carrier(tuple(tuple(int(a) for a in sup) for sup in d["carrier"])),
        kind=d["kind"],
        first_order_ok=bool(d["first_order_ok"]),
        second_order_ok=bool(d["second_order_ok"]),
        regular=bool(d["regular"]),
        hessian_min_singular_value=math.inf if smin is None else float(smin),
        residual=float(d["residual"]),
        hessian_singular_values=tuple(float(s) for s in d.get("hessian_singular_values", ())),
    )


def equilibrium_report(records, decomp: PotentialDecomposition, settings: dict | None = None) -> dict:
    return {
        "action_counts": list(decomp.action_counts),
        "settings": dict(settings or {}),
        "equilibria": [equilibrium_to_dict(r, decomp) for r in records],
    }


def read_equilibrium_report(path) -> list[EquilibriumRecord]:
    data = read_json(path)
    try:
        return [equilibrium_from_dict(d) for d in data["equilibria"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise GameFileError(f"{path}: malformed equilibrium report ({exc!r})") from exc


# ---------------------------------------------------------------------------
# CSV artifacts


def coordinate_names(action_counts, simplex: bool = False) -> list[str]:
    """``x_<player>_<k>`` with 1-based players; k counts reduced coordinates (or all actions with ``simplex``)."""
    names = []
    for i, k in enumerate(action_counts):
        rng = range(k) if simplex else range(1, k)
        names.extend(f"x_{i + 1}_{a}" for a in rng)
    return names


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([FLOAT_FORMAT % v if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def trajectory_csv(times, points, potentials, segment_ids, action_counts, simplex: bool = False) -> str:
    header = ["t", *coordinate_names(action_counts, simplex), "U", "segment_id"]
    rows = []
    for t, x, u, s in zip(times, points, potentials, segment_ids):
        coords = np.concatenate(_sigmas(x, action_counts)) if simplex else x
        rows.append([float(t), *map(float, coords), float(u), int(s)])
    return _csv_text(header, rows)


def write_trajectory_csv(path, times, points, potentials, segment_ids, action_counts, simplex: bool = False) -> None:
    _write_text(path, trajectory_csv(times, points, potentials, segment_ids, action_counts, simplex))


def read_trajectory_csv(path) -> dict:
    """Columns of a trajectory CSV: ``t``, ``points`` (one row per sample), ``U``, ``segment_id``, ``columns``."""
    header, rows = _read_csv(path)
    if not header or header[0] != "t" or header[-2:] != ["U", "segment_id"]:
        raise GameFileError(f"{path}: not a trajectory CSV")
    data = np.array([[float(v) for v in r] for r in rows]).reshape(-1, len(header))
    return {
        "columns": header[1:-2],
        "t": data[:, 0],
        "points": data[:, 1:-2],
        "U": data[:, -2],
        "segment_id": data[:, -1].astype(int),
    }


def points_csv(points, residuals, kappa: int) -> str:
    header = [f"coord_{c}" for c in range(kappa)] + ["residual"]
    rows = [[*map(float, p), float(r)] for p, r in zip(points, residuals)]
    return _csv_text(header, rows)


def write_points_csv(path, points, residuals, kappa: int) -> None:
    _write_text(path, points_csv(points, residuals, kappa))


def read_points_csv(path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = _read_csv(path)
    if not header or header[-1] != "residual":
        raise GameFileError(f"{path}: not a surface/manifold CSV")
    data = np.array([[float(v) for v in r] for r in rows]).reshape(-1, len(header))
    return data[:, :-1], data[:, -1]


def _read_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise GameFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        return [], []
    return rows[0], rows[1:]
