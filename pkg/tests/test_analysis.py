import json

import numpy as np
import pytest

from geoshap import (
    DataSet,
    ExplainConfig,
    FunctionOracle,
    bootstrap,
    explain,
    gen_svc,
    global_importance,
    mask_by_ci,
    pdp_points,
    sample_background,
    select_bandwidth,
    svc_extract,
    trainer,
)
from geoshap.analysis import BootstrapSummary
from geoshap.errors import AnalysisError

from conftest import make_dataset


def _linear_explanations(n=40, beta=3.0, seed=0):
    rng = np.random.default_rng(seed)
    x1 = np.repeat([0.0, 2.0], n // 2)
    rng.shuffle(x1)
    features = np.column_stack([x1])
    ds = DataSet(features=features, coords=rng.uniform(0, 1, (n, 2)),
                 feature_names=("x1",))
    # background with mean x1 = 1 exactly
    bg_rows = np.zeros((2, 3))
    bg_rows[0, 0], bg_rows[1, 0] = 0.0, 2.0
    from geoshap import BackgroundSet

    bg = BackgroundSet(bg_rows)
    oracle = FunctionOracle(lambda X: beta * X[:, 0])
    return ds, explain(ds, oracle, bg)


# --- importance --------------------------------------------------------------

def test_importance_linear_two_level_feature():
    ds, es = _linear_explanations()
    # phi_1 = 3 * (x1 - 1) in {-3, +3}
    assert sorted(set(np.round(es.phi[:, 0], 9))) == [-3.0, 3.0]
    table = global_importance(es)
    row = table.by_name("x1")
    assert row.primary_part == pytest.approx(3.0, abs=1e-9)
    assert row.geo_part == pytest.approx(0.0, abs=1e-12)
    assert row.total == pytest.approx(3.0, abs=1e-9)


def test_importance_pure_location_model():
    ds = make_dataset(n=12, p=2, seed=1)
    bg = sample_background(ds, k=6, seed=0)
    es = explain(ds, FunctionOracle(lambda X: 5.0 * X[:, 2]), bg)
    table = global_importance(es)
    assert table.rows[0].name == "GEO"
    for name in ("x1", "x2"):
        assert table.by_name(name).total == pytest.approx(0.0, abs=1e-10)


def test_importance_constant_model_and_permutation_invariance():
    ds = make_dataset(n=10, p=2, seed=2)
    bg = sample_background(ds, k=5, seed=0)
    es = explain(ds, FunctionOracle(lambda X: np.full(X.shape[0], 1.0)), bg)
    table = global_importance(es)
    assert all(r.total == 0.0 for r in table)
    # permuting rows leaves the table unchanged
    perm = np.random.default_rng(3).permutation(len(es))
    es2 = type(es)(
        feature_names=es.feature_names, include_geo=es.include_geo,
        base_value=es.base_value, row_ids=tuple(es.row_ids[i] for i in perm),
        coords=es.coords[perm], predictions=es.predictions[perm],
        phi_geo=es.phi_geo[perm], phi=es.phi[perm], phi_geo_x=es.phi_geo_x[perm],
    )
    t1 = [(r.name, r.primary_part, r.geo_part) for r in global_importance(es)]
    t2 = [(r.name, r.primary_part, r.geo_part) for r in global_importance(es2)]
    assert t1 == t2


def test_importance_tie_break_by_name():
    ds = make_dataset(n=8, p=2, seed=4)
    bg = sample_background(ds, k=4, seed=0)
    es = explain(ds, FunctionOracle(lambda X: X[:, 0] + X[:, 1]), bg)
    es.phi[:, 1] = es.phi[:, 0]  # force identical totals
    es.phi_geo_x[:, 1] = es.phi_geo_x[:, 0]
    table = global_importance(es)
    names = [r.name for r in table if r.name != "GEO"]
    assert names == sorted(names)


# --- pdp ---------------------------------------------------------------------

def test_pdp_linear_points_on_line():
    ds, es = _linear_explanations()
    pts = pdp_points(es, ds, "x1")
    assert pts.shape == (len(es), 2)
    assert np.all(np.diff(pts[:, 0]) >= 0)
    assert pts[:, 1] == pytest.approx(3.0 * (pts[:, 0] - 1.0), abs=1e-9)


def test_pdp_zero_at_background_mean():
    rng = np.random.default_rng(5)
    n = 30
    features = rng.normal(size=(n, 1))
    features[0, 0] = 0.5  # equals the background mean below
    ds = DataSet(features=features, coords=rng.uniform(0, 1, (n, 2)),
                 feature_names=("x1",))
    from geoshap import BackgroundSet

    bg = BackgroundSet(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))
    es = explain(ds, FunctionOracle(lambda X: 2.0 * X[:, 0] + 1.0), bg)
    pts = pdp_points(es, ds, "x1")
    at_mean = pts[np.isclose(pts[:, 0], 0.5)]
    assert at_mean[:, 1] == pytest.approx(0.0, abs=1e-9)


def test_pdp_unknown_feature():
    ds, es = _linear_explanations()
    with pytest.raises(Exception, match="unknown feature"):
        pdp_points(es, ds, "bogus")


def test_pdp_scurve_shape_recovered():
    from geoshap import gen_nonlinear, train_boosted_trees
    from geoshap.models import GBTConfig

    truth = gen_nonlinear(300, seed=21, noise_sd=0.05)
    ds = truth.dataset
    model = train_boosted_trees(ds.matrix(), ds.target, GBTConfig(trees=60, depth=3))
    es = explain(ds, model, sample_background(ds, 50, 0), ExplainConfig(seed=0))
    pts = pdp_points(es, ds, "x1")
    # monotone non-decreasing within noise tolerance (binned means)
    bins = np.array_split(pts[:, 1], 12)
    means = np.array([b.mean() for b in bins])
    span = means.max() - means.min()
    assert (np.diff(means) >= -0.02 * span).all()
    assert span > 1.0  # the curve's swing is recovered, not flattened


# --- svc ---------------------------------------------------------------------

def _effect_dataset(n=60, seed=6, slope=2.0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 1))
    ds = DataSet(features=x, coords=rng.uniform(0, 1, (n, 2)), feature_names=("x1",))
    from geoshap import BackgroundSet

    bg = BackgroundSet(np.hstack([np.zeros((1, 1)), np.zeros((1, 2))]))
    es = explain(ds, FunctionOracle(lambda X: slope * X[:, 0]), bg)
    return ds, es


def test_svc_exactly_linear_effect_any_bandwidth():
    ds, es = _effect_dataset()
    for bw in (10, 25, 60):
        surface = svc_extract(es, ds, "x1", bandwidth=bw)
        assert surface.beta == pytest.approx(np.full(ds.n, 2.0), abs=1e-8)
        assert surface.masked.any() == False


def test_svc_uniform_full_bandwidth_is_global_ols():
    ds, es = _effect_dataset(seed=7)
    g = es.phi[:, 0] + es.phi_geo_x[:, 0]
    x = ds.features[:, 0]
    A = np.column_stack([np.ones_like(x), x])
    slope = np.linalg.lstsq(A, g, rcond=None)[0][1]
    surface = svc_extract(es, ds, "x1", bandwidth=ds.n, kernel="uniform")
    assert surface.beta == pytest.approx(np.full(ds.n, slope), abs=1e-10)


def test_svc_scaling_equivariance():
    ds, es = _effect_dataset(seed=8)
    surface = svc_extract(es, ds, "x1", bandwidth=20)
    scaled_ds = DataSet(features=ds.features * 4.0, coords=ds.coords,
                        feature_names=ds.feature_names, row_ids=ds.row_ids)
    surface_scaled = svc_extract(es, scaled_ds, "x1", bandwidth=20)
    assert surface_scaled.beta == pytest.approx(surface.beta / 4.0, abs=1e-9)


def test_svc_constant_feature_rejected():
    ds, es = _effect_dataset(seed=9)
    const_ds = DataSet(features=np.ones_like(ds.features), coords=ds.coords,
                       feature_names=ds.feature_names, row_ids=ds.row_ids)
    with pytest.raises(AnalysisError, match="constant"):
        svc_extract(es, const_ds, "x1", bandwidth=20)


def test_svc_bandwidth_floor():
    ds, es = _effect_dataset(seed=10)
    with pytest.raises(AnalysisError, match="below the minimum"):
        svc_extract(es, ds, "x1", bandwidth=9)


def test_svc_gaussian_needs_explicit_bandwidth():
    ds, es = _effect_dataset(seed=11)
    with pytest.raises(AnalysisError, match="explicit distance"):
        svc_extract(es, ds, "x1", bandwidth="auto", kernel="gaussian")
    surface = svc_extract(es, ds, "x1", bandwidth=0.3, kernel="gaussian")
    assert surface.method == "gwr-gaussian-fixed"


def test_svc_misalignment_detected():
    ds, es = _effect_dataset(seed=12)
    other = DataSet(features=ds.features, coords=ds.coords,
                    feature_names=ds.feature_names,
                    row_ids=tuple(range(100, 100 + ds.n)))
    with pytest.raises(AnalysisError, match="misaligned"):
        svc_extract(es, other, "x1", bandwidth=20)


# --- bandwidth selection -----------------------------------------------------

def test_bandwidth_flat_cv_returns_largest():
    ds, es = _effect_dataset(n=40, seed=13)
    g = es.phi[:, 0] + es.phi_geo_x[:, 0]  # exactly linear in x1
    assert select_bandwidth(ds, g, "x1") == ds.n


def test_bandwidth_small_for_steep_surface():
    truth = gen_svc(300, seed=14, noise_sd=0.0)
    ds = truth.dataset
    # combined effect with a steeply varying local slope in space
    g = (truth.betas[:, 0] - truth.betas[:, 0].mean()) * ds.features[:, 0]
    bw = select_bandwidth(ds, g, "x1")
    assert bw < ds.n / 2


def test_bandwidth_needs_30_locations():
    ds, es = _effect_dataset(n=29, seed=15)
    with pytest.raises(AnalysisError, match="n >= 30"):
        select_bandwidth(ds, es.phi[:, 0], "x1")


def test_bandwidth_deterministic():
    truth = gen_svc(150, seed=16, noise_sd=0.1)
    ds = truth.dataset
    g = truth.betas[:, 0] * ds.features[:, 0]
    assert select_bandwidth(ds, g, "x1") == select_bandwidth(ds, g, "x1")


# --- bootstrap ---------------------------------------------------------------

def test_bootstrap_rejects_zero_replicates():
    truth = gen_svc(120, seed=17)
    with pytest.raises(AnalysisError, match="at least one replicate"):
        bootstrap(truth.dataset, trainer("linear"), ExplainConfig(), B=0)


def test_bootstrap_default_is_500_replicates():
    import inspect

    assert inspect.signature(bootstrap).parameters["B"].default == 500


def test_bootstrap_collapses_for_deterministic_linear_fit():
    rng = np.random.default_rng(18)
    X = rng.normal(size=(120, 2))
    coords = rng.uniform(0, 1, (120, 2))
    y = 1.0 + 2.0 * X[:, 0] - X[:, 1]  # exactly linear, zero noise
    ds = DataSet(features=X, coords=coords, feature_names=("a", "b"), target=y)
    summary = bootstrap(ds, trainer("linear"), ExplainConfig(background_size=30),
                        B=10, seed=19)
    assert float((summary.upper - summary.lower).max()) <= 1e-9
    assert (summary.lower <= summary.point).all()
    assert (summary.point <= summary.upper).all()


def test_bootstrap_reproducible_bit_for_bit():
    truth = gen_svc(120, seed=20, noise_sd=0.2)
    cfg = ExplainConfig(background_size=30)
    t = trainer("gbt", trees=20, depth=2)
    a = bootstrap(truth.dataset, t, cfg, B=6, seed=21)
    b = bootstrap(truth.dataset, t, cfg, B=6, seed=21)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


def test_bootstrap_aborts_on_failure_rate():
    truth = gen_svc(120, seed=22, noise_sd=0.2)
    calls = {"n": 0}

    def flaky_trainer(X, y):
        calls["n"] += 1
        if calls["n"] > 1:  # point fit succeeds, replicates all fail
            from geoshap.errors import ModelError

            raise ModelError("synthetic failure")
        return trainer("linear")(X, y)

    with pytest.raises(AnalysisError, match="> 10%"):
        bootstrap(truth.dataset, flaky_trainer, ExplainConfig(background_size=20),
                  B=5, seed=23)


def test_bootstrap_svc_component_and_masking():
    truth = gen_svc(120, seed=24, noise_sd=0.1)
    summary = bootstrap(
        truth.dataset, trainer("gbt", trees=20, depth=2),
        ExplainConfig(background_size=30), B=8, seed=25,
        svc_features=("x1",), svc_bandwidth=40,
    )
    assert "svc_beta:x1" in summary.components
    es = explain(truth.dataset,
                 trainer("gbt", trees=20, depth=2)(truth.dataset.matrix(), truth.dataset.target),
                 sample_background(truth.dataset, 30, 0))
    surface = svc_extract(es, truth.dataset, "x1", bandwidth=40)
    masked = mask_by_ci(surface, summary)
    assert masked.beta == pytest.approx(surface.beta, abs=0)  # values untouched
    assert masked.masked.dtype == bool


# --- masking -----------------------------------------------------------------

def _toy_summary(lower, upper):
    n = len(lower)
    return BootstrapSummary(
        row_ids=tuple(range(n)), components=("phi:x1",),
        point=np.zeros((n, 1)),
        lower=np.asarray(lower, dtype=float)[:, None],
        upper=np.asarray(upper, dtype=float)[:, None],
        replicates=10, completed=10, failed=0, seed=0,
    )


def test_mask_rules_boundary_inclusive():
    summary = _toy_summary([-1.0, 0.2, -0.3], [1.0, 0.9, 0.0])
    flags = mask_by_ci(np.zeros(3), summary, component="phi:x1")
    assert flags.tolist() == [True, False, True]


def test_mask_misalignment():
    summary = _toy_summary([-1.0], [1.0])
    with pytest.raises(AnalysisError, match="entries"):
        mask_by_ci(np.zeros(3), summary, component="phi:x1")
