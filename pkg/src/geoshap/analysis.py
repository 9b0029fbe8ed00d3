"""Downstream products: global importance, dependence data, spatially
varying coefficients via a kernel-weighted local regression, and bootstrap
confidence intervals with CI masking."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _accel
from .core import DataSet, sample_background
from .errors import AnalysisError, GeoShapError
from .kernel import ExplainConfig, ExplanationSet, explain

_KERNEL_IDS = {
    "bisquare": _accel.KERNEL_BISQUARE,
    "gaussian": _accel.KERNEL_GAUSSIAN,
    "uniform": _accel.KERNEL_UNIFORM,
}
MIN_NEIGHBORS = 10


@dataclass(frozen=True)
class ImportanceRow:
    name: str
    primary_part: float
    geo_part: float

    @property
    def total(self) -> float:
        return self.primary_part + self.geo_part


@dataclass(frozen=True)
class ImportanceTable:
    """Mean absolute components per feature, ranked by total."""

    rows: tuple[ImportanceRow, ...]

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def by_name(self, name: str) -> ImportanceRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise AnalysisError(f"no importance row named {name!r}")


def global_importance(explanations: ExplanationSet) -> ImportanceTable:
    """Split each feature's importance into primary and location-varying
    parts; the GEO row carries the mean absolute intrinsic location effect."""
    if len(explanations) == 0:
        raise AnalysisError("cannot rank an empty explanation set")
    rows = []
    for j, name in enumerate(explanations.feature_names):
        rows.append(ImportanceRow(
            name=name,
            primary_part=float(np.mean(np.abs(explanations.phi[:, j]))),
            geo_part=float(np.mean(np.abs(explanations.phi_geo_x[:, j]))),
        ))
    if explanations.include_geo:
        rows.append(ImportanceRow(
            name="GEO",
            primary_part=float(np.mean(np.abs(explanations.phi_geo))),
            geo_part=0.0,
        ))
    rows.sort(key=lambda r: (-r.total, r.name))
    return ImportanceTable(rows=tuple(rows))


def _check_aligned(explanations: ExplanationSet, dataset: DataSet):
    if len(explanations) != dataset.n or explanations.row_ids != dataset.row_ids:
        raise AnalysisError(
            "explanations and dataset are misaligned (row ids differ); "
            "re-run explain on this dataset"
        )
    if explanations.feature_names != dataset.feature_names:
        raise AnalysisError(
            f"explanations cover features {explanations.feature_names}, "
            f"dataset has {dataset.feature_names}; re-ingest with the same column selection"
        )


def pdp_points(explanations: ExplanationSet, dataset: DataSet, feature: str) -> np.ndarray:
    """Primary-effect dependence data: (x_j, phi_j) pairs sorted by x_j,
    one point per observation, no aggregation."""
    _check_aligned(explanations, dataset)
    j = explanations.feature_index(feature)
    x = dataset.features[:, j]
    order = np.argsort(x, kind="stable")
    return np.column_stack([x[order], explanations.phi[order, j]])


@dataclass(frozen=True)
class SvcSurface:
    """Per-location coefficient for one feature from the local smoother."""

    feature: str
    beta: np.ndarray
    intercept: np.ndarray
    bandwidth: float
    method: str
    masked: np.ndarray
    row_ids: tuple
    coords: np.ndarray


def _resolve_kernel(kernel: str) -> int:
    if kernel not in _KERNEL_IDS:
        raise AnalysisError(f"unknown kernel {kernel!r}; expected one of {sorted(_KERNEL_IDS)}")
    return _KERNEL_IDS[kernel]


def _combined_effect(explanations: ExplanationSet, j: int) -> np.ndarray:
    # primary plus location-varying part; the quantity the smoother regresses
    return explanations.phi[:, j] + explanations.phi_geo_x[:, j]


def _validate_adaptive_bandwidth(bandwidth, n):
    bw = int(bandwidth)
    if bw != bandwidth:
        raise AnalysisError(f"adaptive bandwidth must be an integer neighbor count, got {bandwidth}")
    if bw < MIN_NEIGHBORS:
        raise AnalysisError(f"bandwidth {bw} below the minimum of {MIN_NEIGHBORS} neighbors")
    if bw > n:
        raise AnalysisError(f"bandwidth {bw} exceeds the {n} available locations")
    return bw


def svc_extract(
    explanations: ExplanationSet,
    dataset: DataSet,
    feature: str,
    bandwidth="auto",
    kernel: str = "bisquare",
) -> SvcSurface:
    """Local slope of the combined effect against the feature at every
    location: weighted regression of phi_j + phi_geo_x_j on x_j with an
    intercept, kernel weights over the bandwidth neighborhood."""
    _check_aligned(explanations, dataset)
    j = explanations.feature_index(feature)
    x = dataset.features[:, j]
    if float(np.var(x)) <= 0.0:
        raise AnalysisError(f"feature {feature!r} is constant; no coefficient is identified")
    kernel_id = _resolve_kernel(kernel)
    g = _combined_effect(explanations, j)
    n = dataset.n
    if kernel == "gaussian":
        if bandwidth == "auto":
            raise AnalysisError("the fixed Gaussian kernel needs an explicit distance bandwidth")
        bw = float(bandwidth)
        if bw <= 0:
            raise AnalysisError(f"Gaussian bandwidth must be positive, got {bw}")
        tag = "gwr-gaussian-fixed"
    else:
        if bandwidth == "auto":
            bw = float(select_bandwidth(dataset, g, feature, kernel=kernel))
        else:
            bw = float(_validate_adaptive_bandwidth(bandwidth, n))
        tag = f"gwr-{kernel}-adaptive"
    intercept, beta = _accel.local_linear(
        np.ascontiguousarray(dataset.coords),
        np.ascontiguousarray(x),
        np.ascontiguousarray(g),
        bw,
        kernel_id,
        False,
    )
    return SvcSurface(
        feature=feature,
        beta=beta,
        intercept=intercept,
        bandwidth=bw,
        method=tag,
        masked=np.zeros(n, dtype=bool),
        row_ids=dataset.row_ids,
        coords=np.array(dataset.coords),
    )


def _loo_cv_score(coords, x, g, bw, kernel_id) -> float:
    intercept, beta = _accel.local_linear(coords, x, g, float(bw), kernel_id, True)
    resid = g - (intercept + beta * x)
    return float(resid @ resid)


def select_bandwidth(dataset: DataSet, g: np.ndarray, feature: str,
                     kernel: str = "bisquare") -> int:
    """Golden-section search over neighbor counts in [10, n] minimizing the
    leave-one-out CV error of the local fits.

    Deterministic; near-ties (including a flat CV curve) resolve to the
    largest candidate, i.e. the smoothest fit.
    """
    if kernel == "gaussian":
        raise AnalysisError("bandwidth search applies to adaptive kernels only")
    kernel_id = _resolve_kernel(kernel)
    n = dataset.n
    if n < 30:
        raise AnalysisError(f"bandwidth selection needs n >= 30 locations, got {n}")
    if dataset.feature_names.count(feature) == 0:
        raise AnalysisError(f"unknown feature {feature!r}")
    j = dataset.feature_names.index(feature)
    coords = np.ascontiguousarray(dataset.coords)
    x = np.ascontiguousarray(dataset.features[:, j])
    g = np.ascontiguousarray(np.asarray(g, dtype=np.float64).reshape(-1))
    if g.shape[0] != n:
        raise AnalysisError(f"effect vector has {g.shape[0]} entries for {n} locations")

    cache: dict[int, float] = {}

    def score(bw: int) -> float:
        if bw not in cache:
            cache[bw] = _loo_cv_score(coords, x, g, bw, kernel_id)
        return cache[bw]

    lo, hi = MIN_NEIGHBORS, n
    score(lo)
    score(hi)
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    while hi - lo > 2:
        span = hi - lo
        c = hi - int(round(ratio * span))
        d = lo + int(round(ratio * span))
        c = max(c, lo + 1)
        d = min(d, hi - 1)
        if c >= d:
            break
        s_c, s_d = score(c), score(d)
        eps = 1e-12 * (1.0 + min(abs(s_c), abs(s_d)))
        if s_c < s_d - eps:
            hi = d
        else:
            lo = c
    for bw in range(lo, hi + 1):
        score(bw)
    best = min(cache.values())
    eps = 1e-12 * (1.0 + abs(best))
    return max(bw for bw, s in cache.items() if s <= best + eps)


@dataclass
class BootstrapSummary:
    """Percentile intervals per (row, component) over model-refit replicates."""

    row_ids: tuple
    components: tuple[str, ...]
    point: np.ndarray  # (n, C), re-estimated on the full data
    lower: np.ndarray
    upper: np.ndarray
    replicates: int
    completed: int
    failed: int
    seed: int

    def component_index(self, name: str) -> int:
        try:
            return self.components.index(name)
        except ValueError:
            raise AnalysisError(
                f"no bootstrap component {name!r}; have {self.components}"
            ) from None

    def intervals(self, name: str):
        c = self.component_index(name)
        return self.point[:, c], self.lower[:, c], self.upper[:, c]

    def to_dict(self) -> dict:
        return {
            "row_ids": list(self.row_ids),
            "components": list(self.components),
            "point": self.point.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "replicates": self.replicates,
            "completed": self.completed,
            "failed": self.failed,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BootstrapSummary":
        return cls(
            row_ids=tuple(data["row_ids"]),
            components=tuple(data["components"]),
            point=np.asarray(data["point"], dtype=np.float64),
            lower=np.asarray(data["lower"], dtype=np.float64),
            upper=np.asarray(data["upper"], dtype=np.float64),
            replicates=int(data["replicates"]),
            completed=int(data["completed"]),
            failed=int(data["failed"]),
            seed=int(data["seed"]),
        )


def _component_matrix(expl: ExplanationSet, components, svc_spec, dataset):
    cols = []
    for name in components:
        if name == "phi_geo":
            cols.append(expl.phi_geo)
        elif name.startswith("phi:"):
            cols.append(expl.phi[:, expl.feature_index(name[4:])])
        elif name.startswith("phi_geo_x:"):
            cols.append(expl.phi_geo_x[:, expl.feature_index(name[10:])])
        elif name.startswith("svc_beta:"):
            feature = name[9:]
            surface = svc_extract(
                expl, dataset, feature,
                bandwidth=svc_spec["bandwidths"][feature],
                kernel=svc_spec["kernel"],
            )
            cols.append(surface.beta)
        else:
            raise AnalysisError(f"unknown bootstrap component {name!r}")
    return np.column_stack(cols)


def bootstrap(
    dataset: DataSet,
    trainer_fn,
    config: ExplainConfig = ExplainConfig(),
    B: int = 500,
    seed: int = 0,
    svc_features: tuple[str, ...] = (),
    svc_bandwidth="auto",
    svc_kernel: str = "bisquare",
    threads: int = 1,
) -> BootstrapSummary:
    """Refit on B seeded resamples and re-explain at the original instances.

    The background set is sampled once from the original data and shared by
    every replicate, so the intervals isolate model-refit variation. When
    SVC features are named, coefficient surfaces are re-extracted per
    replicate with the bandwidth frozen at the point estimate's selection.
    Replicate failures are counted; more than 10% aborts the run.
    """
    if B < 1:
        raise AnalysisError(f"bootstrap needs at least one replicate, got B={B}")
    if dataset.target is None:
        raise AnalysisError("bootstrap needs a dataset with a target to retrain on")
    X = dataset.matrix()
    y = dataset.target
    background = sample_background(dataset, config.background_size, config.background_seed)

    def close_model(model):
        close = getattr(model, "close", None)
        if callable(close):
            close()

    point_model = trainer_fn(X, y)
    try:
        point_expl = explain(dataset, point_model, background, config)
    finally:
        close_model(point_model)

    components = []
    if point_expl.include_geo:
        components.append("phi_geo")
    components += [f"phi:{name}" for name in point_expl.feature_names]
    if point_expl.include_geo:
        components += [f"phi_geo_x:{name}" for name in point_expl.feature_names]

    svc_spec = None
    if svc_features:
        bandwidths = {}
        for feature in svc_features:
            j = point_expl.feature_index(feature)
            if svc_bandwidth == "auto":
                bandwidths[feature] = select_bandwidth(
                    dataset, _combined_effect(point_expl, j), feature, kernel=svc_kernel
                )
            else:
                bandwidths[feature] = _validate_adaptive_bandwidth(svc_bandwidth, dataset.n)
        svc_spec = {"bandwidths": bandwidths, "kernel": svc_kernel}
        components += [f"svc_beta:{feature}" for feature in svc_features]

    components = tuple(components)
    point = _component_matrix(point_expl, components, svc_spec, dataset)

    n = dataset.n
    replicate_values: list = [None] * B
    failures = [0]

    def run_replicate(r):
        rng = np.random.default_rng([seed, r])
        idx = rng.integers(0, n, size=n)
        model = None
        try:
            model = trainer_fn(X[idx], y[idx])
            expl = explain(dataset, model, background, config)
            replicate_values[r] = _component_matrix(expl, components, svc_spec, dataset)
        except GeoShapError:
            failures[0] += 1
        finally:
            if model is not None:
                close_model(model)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_replicate, range(B)))
    else:
        for r in range(B):
            run_replicate(r)

    failed = failures[0]
    if failed * 10 > B:
        raise AnalysisError(
            f"{failed} of {B} bootstrap replicates failed (> 10%); aborting"
        )
    kept = np.stack([v for v in replicate_values if v is not None])
    lower = np.minimum(np.percentile(kept, 2.5, axis=0), point)
    upper = np.maximum(np.percentile(kept, 97.5, axis=0), point)
    return BootstrapSummary(
        row_ids=dataset.row_ids,
        components=components,
        point=point,
        lower=lower,
        upper=upper,
        replicates=B,
        completed=B - failed,
        failed=failed,
        seed=seed,
    )


def mask_by_ci(target, summary: BootstrapSummary, component: str | None = None):
    """Flag entries whose 95% interval contains 0 (boundaries inclusive).

    Values are never altered, only flags are set. An SvcSurface comes back
    as a new surface with its ``masked`` flags populated from the
    ``svc_beta:<feature>`` component; an array target returns the flags.
    """
    if isinstance(target, SvcSurface):
        name = component or f"svc_beta:{target.feature}"
        if summary.row_ids != target.row_ids:
            raise AnalysisError("bootstrap summary and surface are misaligned (row ids differ)")
        _, lower, upper = summary.intervals(name)
        flags = (lower <= 0.0) & (upper >= 0.0)
        return replace(target, masked=flags)
    if component is None:
        raise AnalysisError("masking an array needs the component name")
    values = np.asarray(target, dtype=np.float64).reshape(-1)
    if values.shape[0] != len(summary.row_ids):
        raise AnalysisError(
            f"values have {values.shape[0]} entries, summary has {len(summary.row_ids)} rows"
        )
    _, lower, upper = summary.intervals(component)
    return (lower <= 0.0) & (upper >= 0.0)
