"""Scalable estimation of the location-aware Shapley decomposition.

Every prediction is split into four parts that sum exactly to the model
output: a base value (empty-coalition value), an intrinsic location effect,
location-invariant feature effects, and GEO x feature interaction effects.

Estimation solves a constrained weighted least squares over a 0/1 coalition
design with interaction columns. The design splits into two half-cubes by
GEO membership; each half is a feature-player Shapley-kernel system whose
endpoint coalitions (empty, {GEO}, all-features-without-GEO, full) enter as
hard constraints. This makes four properties exact rather than approximate:
efficiency, the dummy axiom, reduction to plain kernel Shapley when the
model ignores coordinates, and feature mains equal to the exact Shapley
values of the GEO-frozen game.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from threading import Lock

import numpy as np

from .core import (
    BackgroundSet,
    DataSet,
    PlayerIndex,
    PredictionOracle,
    build_players,
    coalition_value,
)
from .errors import DesignError, EfficiencyError, ExplainError, OracleError, ValidationError

EFFICIENCY_TOL = 1e-8


def shapley_kernel_weight(s: int, m: int) -> float:
    """Shapley-compliant regression weight (m-1) / (C(m,s) * s * (m-s)).

    Defined only for interior coalition sizes; the endpoints are hard
    constraints, not weighted rows.
    """
    if not 0 < s < m:
        raise ValidationError(
            f"kernel weight undefined for s={s}, m={m}: endpoint coalitions are constraints"
        )
    return (m - 1) / (math.comb(m, s) * s * (m - s))


def default_budget(m: int) -> int:
    """Full enumeration for m <= 11, otherwise a sampled design."""
    return min(2 ** m, 2048 + 2 * m)


def _mask_from_cols(cols) -> int:
    mask = 0
    for c in cols:
        mask |= 1 << int(c)
    return mask


def build_design(m: int, budget: int, seed: int = 0) -> np.ndarray:
    """Deterministic coalition list for an m-player design.

    Full enumeration when 2^m fits the budget. Otherwise coalitions are
    sampled in complement pairs, stratified by size from the extremes
    inward: the empty/full pair first, then all singletons and
    co-singletons, then size 2 / m-2, and so on; the first stratum that
    does not fit entirely is sampled without replacement. An odd leftover
    budget slot stays unused so pairing is never broken.
    """
    if m < 1:
        raise ValidationError(f"need at least one player, got m={m}")
    # full enumeration can undercut 2m+2 only when the whole cube is tiny
    minimum = min(2 ** m, 2 * m + 2)
    if budget < minimum:
        raise DesignError(
            f"budget {budget} too small for m={m}: need at least {minimum} "
            "(endpoints plus all singletons and co-singletons)"
        )
    if 2 ** m <= budget:
        return np.arange(2 ** m, dtype=np.int64)

    rng = np.random.default_rng(seed)
    full = (1 << m) - 1
    masks = [0, full]
    remaining = budget - 2
    s = 1
    while remaining >= 2 and s <= m - s:
        if s < m - s:
            count = math.comb(m, s)
            if 2 * count <= remaining:
                for cols in combinations(range(m), s):
                    mask = _mask_from_cols(cols)
                    masks.append(mask)
                    masks.append(full ^ mask)
                remaining -= 2 * count
            else:
                pairs = remaining // 2
                seen = set()
                while len(seen) < pairs:
                    mask = _mask_from_cols(rng.choice(m, size=s, replace=False))
                    seen.add(mask)
                for mask in sorted(seen):
                    masks.append(mask)
                    masks.append(full ^ mask)
                remaining -= 2 * pairs
        else:  # middle stratum of an even m: complements stay inside it
            count = math.comb(m, s)
            if count <= remaining:
                for cols in combinations(range(m), s):
                    masks.append(_mask_from_cols(cols))
                remaining -= count
            else:
                pairs = remaining // 2
                seen = set()
                while len(seen) < 2 * pairs:
                    mask = _mask_from_cols(rng.choice(m, size=s, replace=False))
                    comp = full ^ mask
                    if mask in seen or comp in seen:
                        continue
                    seen.add(mask)
                    seen.add(comp)
                for mask in sorted(seen):
                    masks.append(mask)
                remaining -= 2 * pairs
        s += 1
    return np.asarray(masks, dtype=np.int64)


def anchor_masks(players: PlayerIndex) -> tuple[int, ...]:
    """Coalitions pinned by hard constraints instead of kernel weights."""
    full = players.full_mask
    if not players.has_geo:
        return (0, full)
    geo_bit = 1 << players.geo_player
    return (0, geo_bit, full ^ geo_bit, full)


def design_rows(players: PlayerIndex, masks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """0/1 design rows and kernel weights for a coalition list.

    Columns: [intercept | m player memberships | p GEO x feature
    interactions]. With a GEO player the weight of a row is the Shapley
    kernel at its feature-subset size over p feature players (each GEO
    half-cube forms its own Shapley system); without GEO it is the plain
    m-player kernel. Anchor rows carry weight 0 and are handled as
    constraints by the solver.
    """
    m, p = players.m, players.p
    q = len(masks)
    Z = np.zeros((q, 1 + m + p))
    Z[:, 0] = 1.0
    weights = np.zeros(q)
    anchors = set(anchor_masks(players))
    geo = players.geo_player
    for r, mask in enumerate(np.asarray(masks, dtype=np.int64)):
        mask = int(mask)
        for player in range(m):
            if mask >> player & 1:
                Z[r, 1 + player] = 1.0
        if players.has_geo and mask >> geo & 1:
            for j in range(p):
                if mask >> j & 1:
                    Z[r, 1 + m + j] = 1.0
        if mask in anchors:
            continue
        if players.has_geo:
            s_f = int(mask & ~(1 << geo)).bit_count()
            weights[r] = shapley_kernel_weight(s_f, p)
        else:
            weights[r] = shapley_kernel_weight(int(mask).bit_count(), m)
    return Z, weights


@dataclass(frozen=True)
class DesignMatrix:
    """Coalition design bound to one row's coalition values."""

    players: PlayerIndex
    masks: np.ndarray
    Z: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        masks = np.asarray(self.masks, dtype=np.int64)
        if len(np.unique(masks)) != len(masks):
            raise DesignError("design contains duplicate coalition rows")
        present = set(int(x) for x in masks)
        for anchor in anchor_masks(self.players):
            if anchor not in present:
                raise DesignError(f"design is missing required coalition {anchor:#x}")
        if not np.isfinite(self.values).all():
            raise DesignError("design has non-finite coalition values")
        if not np.isfinite(self.weights).all():
            raise DesignError("design has non-finite weights")
        anchors = set(anchor_masks(self.players))
        interior = np.array([int(x) not in anchors for x in masks])
        if interior.any() and not (self.weights[interior] > 0).all():
            raise DesignError("non-anchor design rows must have positive weights")

    def value_at(self, mask: int) -> float:
        idx = np.flatnonzero(self.masks == mask)
        if len(idx) != 1:
            raise DesignError(f"coalition {mask:#x} not present exactly once")
        return float(self.values[idx[0]])


@dataclass(frozen=True)
class Attribution:
    """One row's decomposition: base + location + mains + interactions."""

    phi0: float
    phi_geo: float
    phi: np.ndarray
    phi_geo_x: np.ndarray

    def total(self) -> float:
        return self.phi0 + self.phi_geo + float(self.phi.sum()) + float(self.phi_geo_x.sum())


def _constrained_fit(A: np.ndarray, y: np.ndarray, w: np.ndarray, total: float) -> np.ndarray:
    """Weighted least squares of y on A subject to sum(theta) == total.

    The constraint is eliminated algebraically (substitute the last
    coefficient), then the reduced system is solved by QR-based lstsq.
    """
    d = A.shape[1]
    if d == 1:
        return np.array([total])
    reduced = A[:, :-1] - A[:, -1:]
    target = y - A[:, -1] * total
    sw = np.sqrt(w)
    theta, _, rank, _ = np.linalg.lstsq(reduced * sw[:, None], target * sw, rcond=None)
    if rank < d - 1:
        raise DesignError(
            f"design rank {rank} insufficient for {d} coefficients; increase the budget"
        )
    return np.append(theta, total - theta.sum())


def solve_attributions(design: DesignMatrix, v_empty: float, v_full: float) -> Attribution:
    """Solve the constrained design for one row's components.

    The intercept is pinned to v_empty and total attribution to
    v_full - v_empty. With a GEO player the two half-cubes are solved as
    separate feature-player Shapley systems sharing those constraints;
    the intrinsic location effect is the GEO-singleton lift and the
    interaction effects are the per-feature difference between the
    location-present and location-absent solutions.
    """
    players = design.players
    p = players.p
    masks = np.asarray(design.masks, dtype=np.int64)
    if not (np.isfinite(v_empty) and np.isfinite(v_full)):
        raise DesignError("constraint values must be finite")

    membership = design.Z[:, 1:1 + p]  # feature-player membership columns

    if not players.has_geo:
        interior = design.weights > 0
        phi = _constrained_fit(
            membership[interior],
            design.values[interior] - v_empty,
            design.weights[interior],
            v_full - v_empty,
        )
        return Attribution(phi0=v_empty, phi_geo=0.0, phi=phi, phi_geo_x=np.zeros(p))

    geo_bit = 1 << players.geo_player
    feats_full = players.full_mask ^ geo_bit
    v_geo = design.value_at(geo_bit)
    v_feats = design.value_at(feats_full)

    has_geo_bit = (masks & geo_bit) != 0
    interior = design.weights > 0

    absent = interior & ~has_geo_bit
    mains = _constrained_fit(
        membership[absent],
        design.values[absent] - v_empty,
        design.weights[absent],
        v_feats - v_empty,
    )
    present = interior & has_geo_bit
    with_geo = _constrained_fit(
        membership[present],
        design.values[present] - v_geo,
        design.weights[present],
        v_full - v_geo,
    )
    return Attribution(
        phi0=v_empty,
        phi_geo=v_geo - v_empty,
        phi=mains,
        phi_geo_x=with_geo - mains,
    )


@dataclass(frozen=True)
class ExplainConfig:
    budget: int | None = None
    seed: int = 0
    include_geo: bool = True
    threads: int = 1
    background_size: int = 100
    background_seed: int = 0


@dataclass(frozen=True)
class Explanation:
    """Decomposition of a single prediction."""

    row_id: object
    coords: np.ndarray
    prediction: float
    phi0: float
    phi_geo: float
    phi: np.ndarray
    phi_geo_x: np.ndarray

    def total(self) -> float:
        return self.phi0 + self.phi_geo + float(self.phi.sum()) + float(self.phi_geo_x.sum())


@dataclass
class ExplanationSet:
    """Per-row decompositions for a whole dataset, stored columnwise."""

    feature_names: tuple[str, ...]
    include_geo: bool
    base_value: float
    row_ids: tuple
    coords: np.ndarray
    predictions: np.ndarray
    phi_geo: np.ndarray
    phi: np.ndarray
    phi_geo_x: np.ndarray

    def __len__(self) -> int:
        return len(self.row_ids)

    @property
    def p(self) -> int:
        return len(self.feature_names)

    def row(self, i: int) -> Explanation:
        return Explanation(
            row_id=self.row_ids[i],
            coords=self.coords[i],
            prediction=float(self.predictions[i]),
            phi0=self.base_value,
            phi_geo=float(self.phi_geo[i]),
            phi=self.phi[i],
            phi_geo_x=self.phi_geo_x[i],
        )

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise ValidationError(f"unknown feature {name!r}; have {self.feature_names}") from None

    def to_dict(self) -> dict:
        rows = []
        for i in range(len(self)):
            row = {
                "row_id": self.row_ids[i],
                "coords": [float(self.coords[i, 0]), float(self.coords[i, 1])],
                "prediction": float(self.predictions[i]),
            }
            if self.include_geo:
                row["phi_geo"] = float(self.phi_geo[i])
            row["phi"] = {name: float(self.phi[i, j]) for j, name in enumerate(self.feature_names)}
            if self.include_geo:
                row["phi_geo_x"] = {
                    name: float(self.phi_geo_x[i, j]) for j, name in enumerate(self.feature_names)
                }
            rows.append(row)
        return {
            "base_value": float(self.base_value),
            "feature_names": list(self.feature_names),
            "include_geo": self.include_geo,
            "rows": rows,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExplanationSet":
        names = tuple(data["feature_names"])
        rows = data["rows"]
        n, p = len(rows), len(names)
        include_geo = bool(data["include_geo"])
        coords = np.zeros((n, 2))
        predictions = np.zeros(n)
        phi_geo = np.zeros(n)
        phi = np.zeros((n, p))
        phi_geo_x = np.zeros((n, p))
        row_ids = []
        for i, row in enumerate(rows):
            row_ids.append(row["row_id"])
            coords[i] = row["coords"]
            predictions[i] = row["prediction"]
            phi_geo[i] = row.get("phi_geo", 0.0)
            for j, name in enumerate(names):
                phi[i, j] = row["phi"][name]
                if include_geo:
                    phi_geo_x[i, j] = row["phi_geo_x"][name]
        return cls(
            feature_names=names,
            include_geo=include_geo,
            base_value=float(data["base_value"]),
            row_ids=tuple(row_ids),
            coords=coords,
            predictions=predictions,
            phi_geo=phi_geo,
            phi=phi,
            phi_geo_x=phi_geo_x,
        )


class _LockedOracle:
    """Funnels predict calls of a non-concurrency-safe oracle through one lock."""

    def __init__(self, oracle):
        self._oracle = oracle
        self._lock = Lock()
        self.trainable = getattr(oracle, "trainable", False)
        self.concurrency_safe = True

    def predict(self, X):
        with self._lock:
            return self._oracle.predict(X)


def explain(
    dataset: DataSet,
    oracle: PredictionOracle,
    background: BackgroundSet,
    config: ExplainConfig = ExplainConfig(),
) -> ExplanationSet:
    """Decompose every row's prediction; deterministic under a fixed seed.

    The coalition design is built once and shared across rows; only the
    coalition values differ per row. Row failures are collected and
    reported together with their row ids.
    """
    players = build_players(dataset, config.include_geo)
    if background.n_columns != dataset.p + 2:
        raise ValidationError(
            f"background has {background.n_columns} columns, dataset rows have {dataset.p + 2}"
        )
    budget = config.budget if config.budget is not None else default_budget(players.m)
    masks = build_design(players.m, budget, config.seed)
    Z, weights = design_rows(players, masks)
    empty_pos = int(np.flatnonzero(masks == 0)[0])
    full_pos = int(np.flatnonzero(masks == players.full_mask)[0])

    threads = max(1, int(config.threads))
    worker_oracle = oracle
    if threads > 1 and not getattr(oracle, "concurrency_safe", False):
        worker_oracle = _LockedOracle(oracle)

    matrix = dataset.matrix()

    def explain_row(i):
        instance = matrix[i]
        values = np.array([
            coalition_value(worker_oracle, instance, int(S), background, players)
            for S in masks
        ])
        design = DesignMatrix(players, masks, Z, weights, values)
        att = solve_attributions(design, values[empty_pos], values[full_pos])
        prediction = float(values[full_pos])
        gap = abs(att.total() - prediction)
        if gap > EFFICIENCY_TOL:
            raise EfficiencyError(
                f"row {dataset.row_ids[i]}: components sum off by {gap:.3e} (> {EFFICIENCY_TOL})"
            )
        return att, prediction

    results: list = [None] * dataset.n
    failures: list[tuple[object, Exception]] = []

    def run(i):
        try:
            results[i] = explain_row(i)
        except (OracleError, DesignError, EfficiencyError) as exc:
            failures.append((dataset.row_ids[i], exc))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(dataset.n)))
    else:
        for i in range(dataset.n):
            run(i)

    if failures:
        ids = [rid for rid, _ in sorted(failures, key=lambda f: str(f[0]))]
        first = failures[0][1]
        raise ExplainError(
            f"explanation failed for {len(ids)} row(s) {ids}: first error: {first}",
            row_ids=ids,
        )

    p = dataset.p
    phi0s = np.array([att.phi0 for att, _ in results])
    if np.ptp(phi0s) > 1e-9:
        raise OracleError(
            "oracle is not deterministic: empty-coalition value varies across rows"
        )
    return ExplanationSet(
        feature_names=dataset.feature_names,
        include_geo=players.has_geo,
        base_value=float(phi0s[0]),
        row_ids=dataset.row_ids,
        coords=np.array(dataset.coords),
        predictions=np.array([pred for _, pred in results]),
        phi_geo=np.array([att.phi_geo for att, _ in results]),
        phi=np.vstack([att.phi for att, _ in results]).reshape(dataset.n, p),
        phi_geo_x=np.vstack([att.phi_geo_x for att, _ in results]).reshape(dataset.n, p),
    )
