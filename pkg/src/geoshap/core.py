"""Data model, player indexing, and the interventional coalition game.

A coalition game is induced by a prediction oracle plus background data:
members of a coalition keep the explained row's values, everyone else is
replaced by background values, and the game value is the mean prediction
over the background rows. Coordinates act as one joint GEO player covering
both coordinate columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .errors import OracleError, ValidationError


def _as_float_matrix(arr, name, ncols=None):
    out = np.asarray(arr, dtype=np.float64)
    if out.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {out.shape}")
    if ncols is not None and out.shape[1] != ncols:
        raise ValidationError(f"{name} must have {ncols} columns, got {out.shape[1]}")
    if not np.isfinite(out).all():
        raise ValidationError(f"{name} contains non-finite values")
    return out


@dataclass(frozen=True)
class DataSet:
    """n observations: p named features, one coordinate pair per row.

    Coordinate columns are kept apart from ``features``; ``matrix()`` lays
    rows out as [features | coords], the column order every oracle sees.
    """

    features: np.ndarray
    coords: np.ndarray
    feature_names: tuple[str, ...]
    target: np.ndarray | None = None
    row_ids: tuple = ()

    def __post_init__(self):
        feats = _as_float_matrix(self.features, "features")
        coords = _as_float_matrix(self.coords, "coords", ncols=2)
        n, p = feats.shape
        if n < 1 or p < 1:
            raise ValidationError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
        if coords.shape[0] != n:
            raise ValidationError("coords row count does not match features")
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != p:
            raise ValidationError(f"{len(names)} feature names for {p} columns")
        if len(set(names)) != p:
            raise ValidationError("feature names must be unique")
        target = self.target
        if target is not None:
            target = np.asarray(target, dtype=np.float64).reshape(-1)
            if target.shape[0] != n:
                raise ValidationError("target length does not match row count")
            if not np.isfinite(target).all():
                raise ValidationError("target contains non-finite values")
        row_ids = tuple(self.row_ids) if self.row_ids else tuple(range(n))
        if len(row_ids) != n:
            raise ValidationError("row_ids length does not match row count")
        feats.setflags(write=False)
        coords.setflags(write=False)
        if target is not None:
            target.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "row_ids", row_ids)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def matrix(self) -> np.ndarray:
        """Rows as the oracle sees them: (n, p+2) with coords last."""
        return np.hstack([self.features, self.coords])

    def row(self, i: int) -> np.ndarray:
        return np.concatenate([self.features[i], self.coords[i]])


@dataclass(frozen=True)
class BackgroundSet:
    """Reference rows defining feature absence, aligned with DataSet columns."""

    rows: np.ndarray
    provenance: str = "user-supplied"

    def __post_init__(self):
        rows = _as_float_matrix(self.rows, "background rows")
        if rows.shape[0] < 1:
            raise ValidationError("background needs at least one row")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    @property
    def n_columns(self) -> int:
        return self.rows.shape[1]


def sample_background(dataset: DataSet, k: int = 100, seed: int = 0) -> BackgroundSet:
    """Sample k rows without replacement; k > n clamps to n."""
    if k < 1:
        raise ValidationError(f"background size must be >= 1, got {k}")
    k = min(k, dataset.n)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(dataset.n, size=k, replace=False))
    return BackgroundSet(dataset.matrix()[idx], provenance=f"sampled(seed={seed},k={k})")


GEO = "GEO"


@dataclass(frozen=True)
class PlayerIndex:
    """Players of the coalition game: one per feature, plus an optional GEO
    player that covers both coordinate columns jointly (always the last
    player when present)."""

    p: int
    has_geo: bool
    feature_names: tuple[str, ...]

    @property
    def m(self) -> int:
        return self.p + 1 if self.has_geo else self.p

    @property
    def geo_player(self) -> int | None:
        return self.p if self.has_geo else None

    def columns_for(self, player: int) -> tuple[int, ...]:
        """Matrix columns owned by a player (GEO owns both coordinate cols)."""
        if player < 0 or player >= self.m:
            raise ValidationError(f"player {player} out of range for m={self.m}")
        if self.has_geo and player == self.p:
            return (self.p, self.p + 1)
        return (player,)

    def player_name(self, player: int) -> str:
        if self.has_geo and player == self.p:
            return GEO
        return self.feature_names[player]

    @property
    def full_mask(self) -> int:
        return (1 << self.m) - 1


def build_players(dataset: DataSet, include_geo: bool = True) -> PlayerIndex:
    """Index the game's players; GEO participates iff include_geo."""
    return PlayerIndex(p=dataset.p, has_geo=bool(include_geo),
                       feature_names=dataset.feature_names)


def coalition_size(mask: int) -> int:
    return int(mask).bit_count()


@runtime_checkable
class PredictionOracle(Protocol):
    """Batch map from (r, p+2) matrices to length-r predictions."""

    trainable: bool
    concurrency_safe: bool

    def predict(self, X: np.ndarray) -> np.ndarray: ...


@dataclass
class FunctionOracle:
    """Adapter turning a plain batch function into a PredictionOracle."""

    fn: Callable[[np.ndarray], np.ndarray]
    trainable: bool = False
    concurrency_safe: bool = True

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(X, dtype=np.float64)), dtype=np.float64)


def oracle_predict(oracle: PredictionOracle, X: np.ndarray, context: str = "") -> np.ndarray:
    """Call the oracle and validate its output; failures carry the batch context."""
    where = f" ({context})" if context else ""
    try:
        preds = np.asarray(oracle.predict(X), dtype=np.float64).reshape(-1)
    except Exception as exc:
        raise OracleError(
            f"oracle failed on batch of {X.shape[0]} rows{where}: {exc}"
        ) from exc
    if preds.shape[0] != X.shape[0]:
        raise OracleError(
            f"oracle returned {preds.shape[0]} values for {X.shape[0]} rows{where}"
        )
    if not np.isfinite(preds).all():
        bad = int(np.flatnonzero(~np.isfinite(preds))[0])
        raise OracleError(f"oracle returned a non-finite prediction at batch row {bad}{where}")
    return preds


def coalition_value(
    oracle: PredictionOracle,
    instance: np.ndarray,
    coalition: int,
    background: BackgroundSet,
    players: PlayerIndex,
) -> float:
    """Interventional value v(S): mean prediction over background composites.

    Composite rows start as background rows; every coalition member's
    columns are overwritten with the instance's values (GEO membership sets
    both coordinate columns). Issues exactly one oracle batch of k rows.
    """
    instance = np.asarray(instance, dtype=np.float64).reshape(-1)
    if instance.shape[0] != background.n_columns:
        raise ValidationError(
            f"instance has {instance.shape[0]} columns, background has {background.n_columns}"
        )
    composite = background.rows.copy()
    mask = int(coalition)
    for player in range(players.m):
        if mask >> player & 1:
            for col in players.columns_for(player):
                composite[:, col] = instance[col]
    preds = oracle_predict(oracle, composite, context=f"coalition mask {mask:#x}")
    return float(preds.mean())
