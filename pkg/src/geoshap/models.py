"""Built-in trainable oracles and synthetic spatial-process generators.

All models consume the full (n, p+2) matrix of features plus coordinate
columns and are safe for concurrent prediction. The boosted-tree trainer is
the package's strong desk-scale learner; its split search and prediction
run on the accelerated kernels in :mod:`geoshap._accel`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _accel
from .core import DataSet
from .errors import ModelError, ValidationError

MODEL_FORMAT = "geoshap-model"
MODEL_VERSION = 1


class LinearModel:
    kind = "linear"
    trainable = False
    concurrency_safe = True

    def __init__(self, intercept: float, coef: np.ndarray):
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=np.float64)

    @property
    def n_columns(self) -> int:
        return len(self.coef)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef + self.intercept

    def params(self) -> dict:
        return {"intercept": self.intercept, "coef": self.coef.tolist()}


def train_linear(X: np.ndarray, y: np.ndarray) -> LinearModel:
    """Ordinary least squares with an intercept."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n, d = X.shape
    if n <= d + 3:
        raise ModelError(f"need n > d+3 rows to fit OLS, got n={n}, d={d}")
    A = np.hstack([np.ones((n, 1)), X])
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < d + 1:
        raise ModelError(f"design matrix is rank deficient (rank {rank} < {d + 1})")
    return LinearModel(intercept=coef[0], coef=coef[1:])


def _rbf_kernel(A: np.ndarray, B: np.ndarray, lengthscale: float) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-0.5 * sq / (lengthscale * lengthscale))


class KernelRidgeModel:
    kind = "kernel-ridge"
    trainable = False
    concurrency_safe = True

    def __init__(self, X_train, alpha, y_mean, lengthscale, ridge):
        self.X_train = np.asarray(X_train, dtype=np.float64)
        self.alpha = np.asarray(alpha, dtype=np.float64)
        self.y_mean = float(y_mean)
        self.lengthscale = float(lengthscale)
        self.ridge = float(ridge)

    @property
    def n_columns(self) -> int:
        return self.X_train.shape[1]

    def predict(self, X: np.ndarray) -> np.ndarray:
        K = _rbf_kernel(np.asarray(X, dtype=np.float64), self.X_train, self.lengthscale)
        return K @ self.alpha + self.y_mean

    def params(self) -> dict:
        return {
            "X_train": self.X_train.tolist(),
            "alpha": self.alpha.tolist(),
            "y_mean": self.y_mean,
            "lengthscale": self.lengthscale,
            "ridge": self.ridge,
        }


def train_kernel_ridge(
    X: np.ndarray, y: np.ndarray, lengthscale: float = 1.0, ridge: float = 1e-3
) -> KernelRidgeModel:
    """Radial-basis kernel ridge regression on centered targets."""
    if ridge <= 0:
        raise ModelError(f"ridge must be positive, got {ridge}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    y_mean = float(y.mean())
    K = _rbf_kernel(X, X, lengthscale)
    n = len(y)
    for jitter in (0.0, 1e-12, 1e-9, 1e-6):
        M = K + (ridge + jitter) * np.eye(n)
        try:
            np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            continue
        alpha = np.linalg.solve(M, y - y_mean)
        return KernelRidgeModel(X, alpha, y_mean, lengthscale, ridge)
    raise ModelError("kernel matrix is not positive definite even after jitter")


@dataclass(frozen=True)
class GBTConfig:
    trees: int = 200
    depth: int = 3
    rate: float = 0.1
    seed: int = 0
    min_leaf: int = 3


class BoostedTreesModel:
    """Gradient-boosted regression trees, squared loss, greedy splits.

    Trees are stored as flat node arrays (feature < 0 marks a leaf) with
    per-tree offsets, the layout the accelerated predictor consumes.
    """

    kind = "boosted-trees"
    trainable = False
    concurrency_safe = True

    def __init__(self, init_value, rate, feat, thr, left, right, leaf, offsets,
                 n_columns, config: GBTConfig):
        self.init_value = float(init_value)
        self.rate = float(rate)
        self.feat = np.asarray(feat, dtype=np.int64)
        self.thr = np.asarray(thr, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.leaf = np.asarray(leaf, dtype=np.float64)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.n_columns = int(n_columns)
        self.config = config
        self.training_mse: tuple = ()  # filled by the trainer, not serialized

    @property
    def n_trees(self) -> int:
        return len(self.offsets) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if self.n_trees == 0:
            return np.full(X.shape[0], self.init_value)
        return _accel.gbt_predict(
            X, self.feat, self.thr, self.left, self.right, self.leaf,
            self.offsets, self.rate, self.init_value,
        )

    def params(self) -> dict:
        return {
            "init_value": self.init_value,
            "rate": self.rate,
            "feat": self.feat.tolist(),
            "thr": self.thr.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf": self.leaf.tolist(),
            "offsets": self.offsets.tolist(),
            "n_columns": self.n_columns,
            "config": {
                "trees": self.config.trees,
                "depth": self.config.depth,
                "rate": self.config.rate,
                "seed": self.config.seed,
                "min_leaf": self.config.min_leaf,
            },
        }


def _fit_tree(X, resid, max_depth, min_leaf, pred_out):
    feat, thr, left, right, leaf = [], [], [], [], []

    def build(rows, depth):
        idx = len(feat)
        feat.append(-1)
        thr.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf.append(0.0)
        node_resid = resid[rows]
        if depth < max_depth and len(rows) >= 2 * min_leaf:
            f, t, gain = _accel.best_split(
                np.ascontiguousarray(X[rows]), np.ascontiguousarray(node_resid), min_leaf
            )
            if f >= 0 and gain > 0.0:
                feat[idx] = int(f)
                thr[idx] = float(t)
                go_left = X[rows, f] <= t
                left[idx] = build(rows[go_left], depth + 1)
                right[idx] = build(rows[~go_left], depth + 1)
                return idx
        value = float(node_resid.mean())
        leaf[idx] = value
        pred_out[rows] = value
        return idx

    build(np.arange(X.shape[0]), 0)
    return (
        np.array(feat, dtype=np.int64),
        np.array(thr, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(leaf, dtype=np.float64),
    )


def train_boosted_trees(X, y, config: GBTConfig = GBTConfig()) -> BoostedTreesModel:
    """Fit residual trees with shrinkage; training MSE is non-increasing.

    Deterministic: greedy splits with fixed tie-breaking, no subsampling
    (the seed is carried in the config for interface stability).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n, d = X.shape
    if n < 20:
        raise ModelError(f"boosted trees need n >= 20 rows, got {n}")
    init = float(y.mean())
    parts = {"feat": [], "thr": [], "left": [], "right": [], "leaf": []}
    offsets = [0]
    mse_path = []
    resid = y - init
    if float(np.var(y)) > 0.0:
        pred = np.empty(n)
        for _ in range(config.trees):
            feat, thr, left, right, leaf = _fit_tree(
                X, resid, config.depth, config.min_leaf, pred
            )
            base = offsets[-1]
            parts["feat"].append(feat)
            parts["thr"].append(thr)
            parts["left"].append(np.where(left >= 0, left + base, -1))
            parts["right"].append(np.where(right >= 0, right + base, -1))
            parts["leaf"].append(leaf)
            offsets.append(base + len(feat))
            resid = resid - config.rate * pred
            mse_path.append(float(np.mean(resid * resid)))

    def cat(name, dtype):
        if not parts[name]:
            return np.empty(0, dtype=dtype)
        return np.concatenate(parts[name]).astype(dtype)

    model = BoostedTreesModel(
        init_value=init,
        rate=config.rate,
        feat=cat("feat", np.int64),
        thr=cat("thr", np.float64),
        left=cat("left", np.int64),
        right=cat("right", np.int64),
        leaf=cat("leaf", np.float64),
        offsets=np.array(offsets, dtype=np.int64),
        n_columns=d,
        config=config,
    )
    model.training_mse = tuple(mse_path)
    return model


def trainer(kind: str, **params):
    """A (X, y) -> model factory for the built-in model kinds."""
    kind = kind.lower()
    if kind in ("linear", "ols"):
        return lambda X, y: train_linear(X, y)
    if kind in ("ridge", "kernel-ridge", "krr"):
        lengthscale = float(params.get("lengthscale", 1.0))
        ridge = float(params.get("ridge", 1e-3))
        return lambda X, y: train_kernel_ridge(X, y, lengthscale=lengthscale, ridge=ridge)
    if kind in ("gbt", "boosted-trees", "trees"):
        config = GBTConfig(
            trees=int(params.get("trees", GBTConfig.trees)),
            depth=int(params.get("depth", GBTConfig.depth)),
            rate=float(params.get("rate", GBTConfig.rate)),
            seed=int(params.get("seed", GBTConfig.seed)),
            min_leaf=int(params.get("min_leaf", GBTConfig.min_leaf)),
        )
        return lambda X, y: train_boosted_trees(X, y, config)
    raise ModelError(f"unknown model kind {kind!r}; expected linear, ridge, or gbt")


def cross_val_r2(trainer_fn, X, y, folds: int = 5, seed: int = 0):
    """Seeded k-fold out-of-sample R^2; returns (mean, per-fold list)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = len(y)
    if n < folds * 2:
        raise ModelError(f"too few rows ({n}) for {folds}-fold cross-validation")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    scores = []
    for f in range(folds):
        test = order[f::folds]
        train = np.setdiff1d(order, test)
        model = trainer_fn(X[train], y[train])
        pred = model.predict(X[test])
        resid = y[test] - pred
        denom = float(np.sum((y[test] - y[test].mean()) ** 2))
        scores.append(1.0 - float(resid @ resid) / denom if denom > 0 else 0.0)
    return float(np.mean(scores)), scores


# ---------------------------------------------------------------------------
# synthetic generators with known ground truth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticTruth:
    """A generated dataset plus the exact surfaces that produced it."""

    dataset: DataSet
    noiseless: np.ndarray
    noise_sd: float
    beta0: np.ndarray | None = None
    betas: np.ndarray | None = None


def gen_svc(n: int, seed: int = 0, noise_sd: float = 0.2) -> SyntheticTruth:
    """Spatially varying coefficient process on the unit square.

    beta0(u,v) = 3(u+v); beta1(u,v) = 1+2u varies over space; beta2 = 2 is
    constant; x1, x2 are standard normal. The surfaces are linear in the
    coordinates so the true SVC is known in closed form.
    """
    if n < 100:
        raise ValidationError(f"gen_svc needs n >= 100, got {n}")
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, 1.0, size=(n, 2))
    x = rng.standard_normal((n, 2))
    beta0 = 3.0 * (coords[:, 0] + coords[:, 1])
    beta1 = 1.0 + 2.0 * coords[:, 0]
    beta2 = np.full(n, 2.0)
    noiseless = beta0 + beta1 * x[:, 0] + beta2 * x[:, 1]
    y = noiseless + rng.normal(0.0, 1.0, size=n) * noise_sd
    dataset = DataSet(features=x, coords=coords, feature_names=("x1", "x2"), target=y)
    return SyntheticTruth(
        dataset=dataset,
        noiseless=noiseless,
        noise_sd=float(noise_sd),
        beta0=beta0,
        betas=np.column_stack([beta1, beta2]),
    )


def s_curve(x: np.ndarray) -> np.ndarray:
    """Logistic s-curve, odd around 0, range (-1.5, 1.5)."""
    return 3.0 / (1.0 + np.exp(-2.0 * np.asarray(x, dtype=np.float64))) - 1.5


def gen_nonlinear(n: int, seed: int = 0, noise_sd: float = 0.05) -> SyntheticTruth:
    """Aspatial process y = s_curve(x1) + noise; coordinates carry no signal."""
    if n < 100:
        raise ValidationError(f"gen_nonlinear needs n >= 100, got {n}")
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, 1.0, size=(n, 2))
    x1 = rng.standard_normal(n)
    noiseless = s_curve(x1)
    y = noiseless + rng.normal(0.0, 1.0, size=n) * noise_sd
    dataset = DataSet(
        features=x1[:, None], coords=coords, feature_names=("x1",), target=y
    )
    return SyntheticTruth(dataset=dataset, noiseless=noiseless, noise_sd=float(noise_sd))


# ---------------------------------------------------------------------------
# model serialization (versioned JSON, round-trip exact)
# ---------------------------------------------------------------------------

def save_model(model, path):
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "params": model.params(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model artifact {path}: {exc}") from exc
    if payload.get("format") != MODEL_FORMAT:
        raise ModelError(f"{path} is not a {MODEL_FORMAT} artifact")
    if payload.get("version") != MODEL_VERSION:
        raise ModelError(f"unsupported model version {payload.get('version')}")
    kind = payload.get("kind")
    params = payload.get("params", {})
    if kind == "linear":
        return LinearModel(intercept=params["intercept"], coef=np.array(params["coef"]))
    if kind == "kernel-ridge":
        return KernelRidgeModel(
            X_train=np.array(params["X_train"]),
            alpha=np.array(params["alpha"]),
            y_mean=params["y_mean"],
            lengthscale=params["lengthscale"],
            ridge=params["ridge"],
        )
    if kind == "boosted-trees":
        cfg = params["config"]
        return BoostedTreesModel(
            init_value=params["init_value"],
            rate=params["rate"],
            feat=params["feat"],
            thr=params["thr"],
            left=params["left"],
            right=params["right"],
            leaf=params["leaf"],
            offsets=params["offsets"],
            n_columns=params["n_columns"],
            config=GBTConfig(
                trees=cfg["trees"], depth=cfg["depth"], rate=cfg["rate"],
                seed=cfg["seed"], min_leaf=cfg["min_leaf"],
            ),
        )
    raise ModelError(f"unknown model kind {kind!r} in {path}")
