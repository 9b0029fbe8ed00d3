"""Brute-force reference semantics by exhaustive coalition enumeration.

These operations are the ground-truth oracles for the scalable estimator:
exact Shapley values from the weighted-marginal-contribution sum, and the
full-enumeration variant of the location-aware decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BackgroundSet, PlayerIndex, PredictionOracle, coalition_value
from .errors import DesignError, ValidationError
from .kernel import Attribution, DesignMatrix, design_rows, solve_attributions


@dataclass(frozen=True)
class ExactAttribution:
    """Per-player Shapley values plus the base value; sums to f(x)."""

    phi0: float
    phi: np.ndarray

    def total(self) -> float:
        return self.phi0 + float(self.phi.sum())


def tabulate_values(
    oracle: PredictionOracle,
    instance: np.ndarray,
    background: BackgroundSet,
    players: PlayerIndex,
) -> np.ndarray:
    """v(S) for every coalition, indexed by bitmask."""
    return np.array([
        coalition_value(oracle, instance, mask, background, players)
        for mask in range(2 ** players.m)
    ])


def _guard_enumeration(m: int, k: int, limit: int):
    if m > limit:
        raise DesignError(
            f"exhaustive enumeration refused for m={m} players (limit {limit}): "
            f"it needs 2^{m} = {2 ** m} coalition values, i.e. {k * 2 ** m} model rows"
        )


def shapley_exact(
    oracle: PredictionOracle,
    instance: np.ndarray,
    background: BackgroundSet,
    players: PlayerIndex,
    max_players: int = 20,
) -> ExactAttribution:
    """Exact Shapley values: one pass over all 2^m coalition values with
    size weights s!(m-s-1)!/m! accumulated per player."""
    m = players.m
    _guard_enumeration(m, background.k, max_players)
    v = tabulate_values(oracle, instance, background, players)
    fact_m = math.factorial(m)
    size_w = [math.factorial(s) * math.factorial(m - s - 1) / fact_m for s in range(m)]
    phi = np.zeros(m)
    for mask in range(2 ** m):
        s = int(mask).bit_count()
        for j in range(m):
            if mask >> j & 1:
                continue
            phi[j] += size_w[s] * (v[mask | (1 << j)] - v[mask])
    return ExactAttribution(phi0=float(v[0]), phi=phi)


def geoshapley_enumerated(
    oracle: PredictionOracle,
    instance: np.ndarray,
    background: BackgroundSet,
    players: PlayerIndex,
    max_players: int = 16,
) -> Attribution:
    """Ground-truth location-aware decomposition over all 2^m coalitions.

    Solves the same constrained weighted least squares as the sampled
    estimator, with the design fully enumerated.
    """
    if not players.has_geo:
        raise ValidationError("geoshapley_enumerated requires a GEO player")
    m = players.m
    _guard_enumeration(m, background.k, max_players)
    masks = np.arange(2 ** m, dtype=np.int64)
    values = tabulate_values(oracle, instance, background, players)
    Z, weights = design_rows(players, masks)
    design = DesignMatrix(players, masks, Z, weights, values)
    return solve_attributions(design, float(values[0]), float(values[-1]))


def verify_efficiency(attribution, prediction: float, tol: float = 1e-9) -> bool:
    """True when base value plus all components reproduces the prediction."""
    return abs(attribution.total() - float(prediction)) <= tol
