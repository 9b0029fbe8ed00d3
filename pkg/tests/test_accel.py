"""The numba kernels and the numpy fallbacks must agree."""

import subprocess
import sys

import numpy as np
import pytest

from geoshap import _accel

HAVE_BOTH = set(_accel.IMPLEMENTATIONS) >= {"numpy", "numba"}
needs_both = pytest.mark.skipif(not HAVE_BOTH, reason="numba backend unavailable")


@needs_both
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_best_split_backends_agree(seed):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(rng.normal(size=(200, 4)))
    X[:, 2] = np.round(X[:, 2])  # ties on purpose
    r = np.ascontiguousarray(rng.normal(size=200))
    for min_leaf in (1, 5, 20):
        f_np, t_np, g_np = _accel.IMPLEMENTATIONS["numpy"]["best_split"](X, r, min_leaf)
        f_nb, t_nb, g_nb = _accel.IMPLEMENTATIONS["numba"]["best_split"](X, r, min_leaf)
        assert f_np == f_nb
        assert t_np == pytest.approx(t_nb, abs=1e-12)
        assert g_np == pytest.approx(g_nb, rel=1e-9, abs=1e-12)


@needs_both
def test_gbt_predict_backends_agree():
    from geoshap import GBTConfig, train_boosted_trees

    rng = np.random.default_rng(3)
    X = rng.normal(size=(150, 3))
    y = np.sin(X[:, 0]) + X[:, 1]
    model = train_boosted_trees(X, y, GBTConfig(trees=25, depth=3))
    Xq = np.ascontiguousarray(rng.normal(size=(40, 3)))
    args = (Xq, model.feat, model.thr, model.left, model.right, model.leaf,
            model.offsets, model.rate, model.init_value)
    a = _accel.IMPLEMENTATIONS["numpy"]["gbt_predict"](*args)
    b = _accel.IMPLEMENTATIONS["numba"]["gbt_predict"](*args)
    assert a == pytest.approx(b, abs=1e-12)


@needs_both
@pytest.mark.parametrize("kernel_id,bw", [
    (_accel.KERNEL_BISQUARE, 20.0),
    (_accel.KERNEL_UNIFORM, 35.0),
    (_accel.KERNEL_GAUSSIAN, 0.15),
])
@pytest.mark.parametrize("loo", [False, True])
def test_local_linear_backends_agree(kernel_id, bw, loo):
    rng = np.random.default_rng(4)
    coords = np.ascontiguousarray(rng.uniform(0, 1, size=(80, 2)))
    x = np.ascontiguousarray(rng.normal(size=80))
    g = np.ascontiguousarray(2.0 * x + rng.normal(0, 0.1, 80))
    b0_np, b1_np = _accel.IMPLEMENTATIONS["numpy"]["local_linear"](coords, x, g, bw, kernel_id, loo)
    b0_nb, b1_nb = _accel.IMPLEMENTATIONS["numba"]["local_linear"](coords, x, g, bw, kernel_id, loo)
    assert b0_np == pytest.approx(b0_nb, abs=1e-9)
    assert b1_np == pytest.approx(b1_nb, abs=1e-9)


def test_env_flag_selects_numpy_backend():
    code = (
        "import geoshap._accel as a; "
        "assert a.BACKEND == 'numpy', a.BACKEND; "
        "assert a.best_split is a.IMPLEMENTATIONS['numpy']['best_split']"
    )
    subprocess.run(
        [sys.executable, "-c", code],
        check=True,
        env={"PATH": "/usr/bin:/bin", "GEOSHAP_BACKEND": "numpy",
             "PYTHONPATH": ":".join(sys.path)},
    )


def test_unknown_backend_rejected():
    code = "import geoshap._accel"
    proc = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "GEOSHAP_BACKEND": "cuda",
             "PYTHONPATH": ":".join(sys.path)},
    )
    assert proc.returncode != 0
    assert "GEOSHAP_BACKEND" in proc.stderr
