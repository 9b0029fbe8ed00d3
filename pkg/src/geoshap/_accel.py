"""Hot numeric kernels: numba-jitted with a pure-numpy fallback.

Two loops dominate runtime in this package: greedy split search / prediction
for the boosted-tree trainer, and the kernel-weighted local regressions used
for SVC extraction and bandwidth cross-validation. Both are implemented twice
with identical semantics:

* ``_nb_*``  -- numba ``@njit`` kernels (cached, nogil)
* ``_np_*``  -- vectorized numpy fallbacks

The active backend is chosen once at import from ``GEOSHAP_BACKEND``:
``auto`` (default: numba when importable), ``numba``, or ``numpy``.
``benchmarks/bench_backends.py`` times both paths; tests assert they agree.
"""

from __future__ import annotations

import os

import numpy as np

KERNEL_BISQUARE = 0   # adaptive: bandwidth = neighbor count
KERNEL_GAUSSIAN = 1   # fixed: bandwidth = distance
KERNEL_UNIFORM = 2    # adaptive: neighbor count, flat weights

_choice = os.environ.get("GEOSHAP_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ImportError(
        f"GEOSHAP_BACKEND must be 'auto', 'numba' or 'numpy', got {_choice!r}"
    )

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False
    if _choice == "numba":
        raise ImportError("GEOSHAP_BACKEND=numba but numba is not importable")


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _np_best_split(x, resid, min_leaf):
    """Best variance-reduction split over all features of one tree node.

    Returns (feature, threshold, gain). feature == -1 means no valid split.
    Gain is the decrease in summed squared error; thresholds are midpoints
    between consecutive distinct values and rows go left when
    ``value <= threshold``. Ties keep the lowest feature index and the
    lowest threshold within a feature.
    """
    k, d = x.shape
    total = resid.sum()
    base = total * total / k
    best_feat, best_thr, best_gain = -1, 0.0, 0.0
    if k < 2 * min_leaf:
        return best_feat, best_thr, best_gain
    n_left = np.arange(1, k, dtype=np.float64)
    for f in range(d):
        order = np.argsort(x[:, f], kind="mergesort")
        sv = x[order, f]
        sl = np.cumsum(resid[order])[:-1]
        part = sl * sl / n_left + (total - sl) ** 2 / (k - n_left)
        valid = (sv[:-1] < sv[1:]) & (n_left >= min_leaf) & (k - n_left >= min_leaf)
        if not valid.any():
            continue
        part = np.where(valid, part, -np.inf)
        i = int(np.argmax(part))
        gain = part[i] - base
        if gain > best_gain:
            best_gain = gain
            best_feat = f
            best_thr = (sv[i] + sv[i + 1]) / 2.0
    return best_feat, best_thr, best_gain


def _np_gbt_predict(x, feat, thr, left, right, leaf, offsets, rate, init):
    """Sum of shrunken tree outputs; trees stored as flat node arrays."""
    n = x.shape[0]
    out = np.full(n, init, dtype=np.float64)
    rows = np.arange(n)
    for t in range(len(offsets) - 1):
        cur = np.full(n, offsets[t], dtype=np.int64)
        while True:
            f = feat[cur]
            internal = f >= 0
            if not internal.any():
                break
            idx = rows[internal]
            node = cur[internal]
            go_left = x[idx, f[internal]] <= thr[node]
            cur[idx] = np.where(go_left, left[node], right[node])
        out += rate * leaf[cur]
    return out


def _np_local_linear(coords, x, g, bandwidth, kernel_id, loo):
    """Weighted local regression of g on [1, x] at every location.

    bandwidth is a neighbor count for the adaptive kernels and a distance
    for the fixed Gaussian kernel. With ``loo`` the self-weight is zeroed
    (bandwidth distances still rank the full sample). Returns per-location
    (intercept, slope); degenerate local designs fall back to slope 0 and
    the weighted mean.
    """
    n = coords.shape[0]
    b0 = np.empty(n)
    b1 = np.empty(n)
    for i in range(n):
        du = coords[:, 0] - coords[i, 0]
        dv = coords[:, 1] - coords[i, 1]
        d2 = du * du + dv * dv
        if kernel_id == KERNEL_GAUSSIAN:
            bsq = bandwidth * bandwidth
            w = np.exp(-0.5 * d2 / bsq)
        else:
            kth = int(bandwidth)
            bsq = np.partition(d2, kth - 1)[kth - 1]
            if kernel_id == KERNEL_BISQUARE:
                if bsq <= 0.0:
                    w = (d2 == 0.0).astype(np.float64)
                else:
                    u = d2 / bsq
                    w = np.where(d2 < bsq, (1.0 - u) ** 2, 0.0)
            else:
                w = (d2 <= bsq).astype(np.float64)
        if loo:
            w = w.copy()
            w[i] = 0.0
        sw = w.sum()
        sx = w @ x
        sxx = w @ (x * x)
        sy = w @ g
        sxy = w @ (x * g)
        det = sw * sxx - sx * sx
        if det <= 1e-12 * (abs(sw * sxx) + 1e-300) or sw <= 0.0:
            b1[i] = 0.0
            b0[i] = sy / sw if sw > 0.0 else 0.0
        else:
            b1[i] = (sw * sxy - sx * sy) / det
            b0[i] = (sy - b1[i] * sx) / sw
    return b0, b1


# ---------------------------------------------------------------------------
# numba implementations (same contracts as the numpy versions above)
# ---------------------------------------------------------------------------

if _HAVE_NUMBA and _choice != "numpy":

    @numba.njit(cache=True, nogil=True)
    def _nb_best_split(x, resid, min_leaf):
        k, d = x.shape
        total = 0.0
        for i in range(k):
            total += resid[i]
        base = total * total / k
        best_feat = -1
        best_thr = 0.0
        best_gain = 0.0
        if k < 2 * min_leaf:
            return best_feat, best_thr, best_gain
        for f in range(d):
            order = np.argsort(x[:, f], kind="mergesort")
            sl = 0.0
            for i in range(k - 1):
                sl += resid[order[i]]
                nl = i + 1
                nr = k - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                lo = x[order[i], f]
                hi = x[order[i + 1], f]
                if not lo < hi:
                    continue
                sr = total - sl
                gain = sl * sl / nl + sr * sr / nr - base
                if gain > best_gain:
                    best_gain = gain
                    best_feat = f
                    best_thr = (lo + hi) / 2.0
        return best_feat, best_thr, best_gain

    @numba.njit(cache=True, nogil=True)
    def _nb_gbt_predict(x, feat, thr, left, right, leaf, offsets, rate, init):
        n = x.shape[0]
        out = np.full(n, init, dtype=np.float64)
        for t in range(len(offsets) - 1):
            root = offsets[t]
            for i in range(n):
                node = root
                while feat[node] >= 0:
                    if x[i, feat[node]] <= thr[node]:
                        node = left[node]
                    else:
                        node = right[node]
                out[i] += rate * leaf[node]
        return out

    @numba.njit(cache=True, nogil=True)
    def _nb_local_linear(coords, x, g, bandwidth, kernel_id, loo):
        n = coords.shape[0]
        b0 = np.empty(n)
        b1 = np.empty(n)
        d2 = np.empty(n)
        w = np.empty(n)
        for i in range(n):
            for j in range(n):
                du = coords[j, 0] - coords[i, 0]
                dv = coords[j, 1] - coords[i, 1]
                d2[j] = du * du + dv * dv
            if kernel_id == KERNEL_GAUSSIAN:
                bsq = bandwidth * bandwidth
                for j in range(n):
                    w[j] = np.exp(-0.5 * d2[j] / bsq)
            else:
                kth = int(bandwidth)
                tmp = d2.copy()
                bsq = np.partition(tmp, kth - 1)[kth - 1]
                if kernel_id == KERNEL_BISQUARE:
                    if bsq <= 0.0:
                        for j in range(n):
                            w[j] = 1.0 if d2[j] == 0.0 else 0.0
                    else:
                        for j in range(n):
                            if d2[j] < bsq:
                                u = d2[j] / bsq
                                w[j] = (1.0 - u) * (1.0 - u)
                            else:
                                w[j] = 0.0
                else:
                    for j in range(n):
                        w[j] = 1.0 if d2[j] <= bsq else 0.0
            if loo:
                w[i] = 0.0
            sw = 0.0
            sx = 0.0
            sxx = 0.0
            sy = 0.0
            sxy = 0.0
            for j in range(n):
                wj = w[j]
                if wj == 0.0:
                    continue
                sw += wj
                sx += wj * x[j]
                sxx += wj * x[j] * x[j]
                sy += wj * g[j]
                sxy += wj * x[j] * g[j]
            det = sw * sxx - sx * sx
            if det <= 1e-12 * (abs(sw * sxx) + 1e-300) or sw <= 0.0:
                b1[i] = 0.0
                b0[i] = sy / sw if sw > 0.0 else 0.0
            else:
                b1[i] = (sw * sxy - sx * sy) / det
                b0[i] = (sy - b1[i] * sx) / sw
        return b0, b1

    _NUMBA_IMPL = {
        "best_split": _nb_best_split,
        "gbt_predict": _nb_gbt_predict,
        "local_linear": _nb_local_linear,
    }
else:
    _NUMBA_IMPL = None

_NUMPY_IMPL = {
    "best_split": _np_best_split,
    "gbt_predict": _np_gbt_predict,
    "local_linear": _np_local_linear,
}

IMPLEMENTATIONS = {"numpy": _NUMPY_IMPL}
if _NUMBA_IMPL is not None:
    IMPLEMENTATIONS["numba"] = _NUMBA_IMPL

if _choice == "numpy" or _NUMBA_IMPL is None:
    BACKEND = "numpy"
else:
    BACKEND = "numba"

_active = IMPLEMENTATIONS[BACKEND]

best_split = _active["best_split"]
gbt_predict = _active["gbt_predict"]
local_linear = _active["local_linear"]
