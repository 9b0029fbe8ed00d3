import itertools
import math
import os
import sys

import numpy as np

from geoshap import BackgroundSet, DataSet, FunctionOracle

SERVERS = os.path.join(os.path.dirname(__file__), "servers")


def server_cmd(name, *args):
    return [sys.executable, os.path.join(SERVERS, name), *map(str, args)]


def make_dataset(n=6, p=2, seed=0, with_target=False):
    rng = np.random.default_rng(seed)
    features = rng.normal(size=(n, p))
    coords = rng.uniform(0.0, 1.0, size=(n, 2))
    target = rng.normal(size=n) if with_target else None
    names = tuple(f"x{j + 1}" for j in range(p))
    return DataSet(features=features, coords=coords, feature_names=names, target=target)


def background_of(dataset, rows=None):
    mat = dataset.matrix()
    return BackgroundSet(mat if rows is None else mat[rows])


def oracle_of(fn):
    return FunctionOracle(fn)


def shapley_by_permutations(values, m):
    """Independent reference: average marginal contribution over all m! orders."""
    phi = np.zeros(m)
    for perm in itertools.permutations(range(m)):
        mask = 0
        for j in perm:
            phi[j] += values[mask | (1 << j)] - values[mask]
            mask |= 1 << j
    return phi / math.factorial(m)
