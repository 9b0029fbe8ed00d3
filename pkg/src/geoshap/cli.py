"""Batch front door: CSV ingestion, model selection (built-in, artifact, or
bridged), the command pipeline, and plot-ready artifact emission.

Every command writes its artifact plus a run manifest. The manifest hash
covers command, config echo, seeds, and versions (not timings), and is
embedded in each artifact, so identical manifests produce byte-identical
artifacts.
"""

from __future__ import annotations

import argparse
import csv as csvmod
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .analysis import (
    BootstrapSummary,
    SvcSurface,
    bootstrap,
    global_importance,
    mask_by_ci,
    pdp_points,
    svc_extract,
)
from .bridge import BridgedOracle, fit_remote, handshake
from .core import DataSet, sample_background
from .errors import (
    AnalysisError,
    BridgeError,
    DataError,
    DesignError,
    EfficiencyError,
    ExplainError,
    GeoShapError,
    ModelError,
    OracleError,
    OutputError,
    ValidationError,
)
from .kernel import ExplainConfig, ExplanationSet, explain
from .models import cross_val_r2, gen_nonlinear, gen_svc, load_model, save_model, trainer

_NA_TOKENS = {"", "na", "nan", "null", "none"}
THREADS_ENV = "GEOSHAP_THREADS"


def _exit_code(exc: GeoShapError) -> int:
    if isinstance(exc, (DataError, ValidationError)):
        return 3
    if isinstance(exc, (OracleError, ModelError)):
        return 4
    if isinstance(exc, BridgeError):
        return 5
    if isinstance(exc, (DesignError, EfficiencyError, ExplainError, AnalysisError)):
        return 6
    if isinstance(exc, OutputError):
        return 7
    return 1


@dataclass
class IngestReport:
    dropped_row_ids: tuple
    n_rows: int

    def describe(self) -> str:
        if not self.dropped_row_ids:
            return f"ingested {self.n_rows} rows"
        shown = ", ".join(str(r) for r in self.dropped_row_ids[:20])
        more = "" if len(self.dropped_row_ids) <= 20 else f" (+{len(self.dropped_row_ids) - 20} more)"
        return (
            f"ingested {self.n_rows} rows; dropped {len(self.dropped_row_ids)} "
            f"row(s) with missing values: {shown}{more}"
        )


def ingest_csv(path, coord_names, target=None, features=None, exclude=(), id_column=None):
    """Read a header CSV into a DataSet.

    Selected cells must be numeric; NA-like tokens drop the whole row (ids
    reported), anything else non-numeric is an error. Row ids come from
    ``id_column`` (a column literally named ``row_id`` is picked up
    automatically), otherwise they are 1-based data-row numbers from the
    file, so dropped rows leave visible gaps.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csvmod.reader(line for line in fh if not line.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        col_index = {name: i for i, name in enumerate(header)}

        for name in coord_names:
            if name not in col_index:
                raise DataError(f"{path} has no coordinate column {name!r}")
        if target is not None and target not in col_index:
            raise DataError(f"{path} has no target column {target!r}")
        if id_column is None and "row_id" in col_index:
            id_column = "row_id"
        if id_column is not None and id_column not in col_index:
            raise DataError(f"{path} has no id column {id_column!r}")
        if features is not None:
            feature_names = list(features)
            for name in feature_names:
                if name not in col_index:
                    raise DataError(f"{path} has no feature column {name!r}")
        else:
            skip = set(coord_names) | set(exclude) | ({target} if target else set())
            if id_column is not None:
                skip.add(id_column)
            feature_names = [name for name in header if name not in skip]
        drop = set(exclude)
        feature_names = [name for name in feature_names if name not in drop]
        if not feature_names:
            raise DataError(f"no feature columns selected from {path}")

        selected = feature_names + list(coord_names) + ([target] if target else [])
        rows, row_ids, dropped = [], [], []
        for data_row, record in enumerate(reader, start=1):
            parsed = []
            missing = False
            for name in selected:
                i = col_index[name]
                token = record[i].strip() if i < len(record) else ""
                if token.lower() in _NA_TOKENS:
                    missing = True
                    break
                try:
                    parsed.append(float(token))
                except ValueError:
                    raise DataError(
                        f"non-numeric value {token!r} in column {name!r}, data row {data_row}"
                    ) from None
            rid = data_row
            if id_column is not None:
                token = record[col_index[id_column]].strip()
                try:
                    rid = int(token)
                except ValueError:
                    rid = token
            if missing:
                dropped.append(rid)
                continue
            rows.append(parsed)
            row_ids.append(rid)
        if not rows:
            raise DataError(f"{path} has zero usable rows after filtering")

    arr = np.asarray(rows, dtype=np.float64)
    p = len(feature_names)
    dataset = DataSet(
        features=arr[:, :p],
        coords=arr[:, p:p + 2],
        feature_names=tuple(feature_names),
        target=arr[:, p + 2] if target else None,
        row_ids=tuple(row_ids),
    )
    return dataset, IngestReport(dropped_row_ids=tuple(dropped), n_rows=dataset.n)


# ---------------------------------------------------------------------------
# manifest and artifact emission
# ---------------------------------------------------------------------------

_OUTPUT_KEYS = ("out", "truth_out", "model_out")


def build_manifest(command: str, config: dict, seeds: dict) -> dict:
    """Config echo plus a hash over everything that determines artifact
    content (output locations are recorded but do not enter the hash)."""
    versions = {
        "geoshap": __version__,
        "numpy": np.__version__,
        "python": ".".join(str(v) for v in sys.version_info[:3]),
    }
    hashed = {
        "command": command,
        "config": {k: v for k, v in config.items() if k not in _OUTPUT_KEYS},
        "seeds": seeds,
        "versions": versions,
    }
    digest = hashlib.sha256(
        json.dumps(hashed, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()
    return {"command": command, "config": config, "seeds": seeds,
            "versions": versions, "manifest_hash": digest}


def write_manifest(manifest: dict, timings: dict, out_path: str):
    path = out_path + ".manifest.json"
    payload = {**manifest, "timings": timings}
    _write_text(path, json.dumps(payload, indent=2) + "\n")
    return path


def _write_text(path: str, text: str):
    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_explanations(expl: ExplanationSet, path: str, manifest_hash: str):
    payload = {"manifest_hash": manifest_hash, **expl.to_dict()}
    _write_text(path, json.dumps(payload) + "\n")


def load_explanations(path: str) -> tuple[ExplanationSet, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read explanation file {path}: {exc}") from exc
    return ExplanationSet.from_dict(payload), payload.get("manifest_hash", "")


def emit_importance(table, path: str, manifest_hash: str):
    lines = [f"# manifest_hash: {manifest_hash}", "feature,primary_part,geo_part,total"]
    for row in table:
        lines.append(f"{row.name},{_fmt(row.primary_part)},{_fmt(row.geo_part)},{_fmt(row.total)}")
    _write_text(path, "\n".join(lines) + "\n")


def emit_pdp(points: np.ndarray, path: str, manifest_hash: str):
    lines = [f"# manifest_hash: {manifest_hash}", "x,phi"]
    for x, phi in points:
        lines.append(f"{_fmt(x)},{_fmt(phi)}")
    _write_text(path, "\n".join(lines) + "\n")


def emit_svc_geojson(surface: SvcSurface, path: str, manifest_hash: str):
    features = []
    for i in range(len(surface.beta)):
        features.append({
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [float(surface.coords[i, 0]), float(surface.coords[i, 1])],
            },
            "properties": {
                "row_id": surface.row_ids[i],
                "beta": float(surface.beta[i]),
                "intercept": float(surface.intercept[i]),
                "masked": bool(surface.masked[i]),
            },
        })
    payload = {
        "type": "FeatureCollection",
        "manifest_hash": manifest_hash,
        "feature_name": surface.feature,
        "method": surface.method,
        "bandwidth": surface.bandwidth,
        "features": features,
    }
    _write_text(path, json.dumps(payload) + "\n")


def emit_bootstrap(summary: BootstrapSummary, path: str, manifest_hash: str):
    payload = {"manifest_hash": manifest_hash, **summary.to_dict()}
    _write_text(path, json.dumps(payload) + "\n")


def load_bootstrap(path: str) -> BootstrapSummary:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read bootstrap file {path}: {exc}") from exc
    return BootstrapSummary.from_dict(payload)


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_data_args(p: argparse.ArgumentParser, need_target=False):
    p.add_argument("--data", required=True, help="input CSV with a header row")
    p.add_argument("--coords", required=True, metavar="U,V",
                   help="names of the two coordinate columns")
    p.add_argument("--target", required=need_target, default=None)
    p.add_argument("--features", default=None,
                   help="comma list of feature columns (default: all non-coordinate numeric columns)")
    p.add_argument("--exclude", default="", help="comma list of columns to drop")
    p.add_argument("--id-column", default=None,
                   help="column holding row identifiers (default: 'row_id' when present)")


def _add_model_args(p: argparse.ArgumentParser):
    p.add_argument("--model", default=None, choices=["linear", "ridge", "gbt"],
                   help="built-in trainable model")
    p.add_argument("--model-param", action="append", default=[], metavar="K=V",
                   help="built-in model hyperparameter, repeatable")
    p.add_argument("--model-cmd", default=None,
                   help="command line of an external model server (bridge protocol)")
    p.add_argument("--model-file", default=None, help="serialized model artifact to load")
    p.add_argument("--model-out", default=None, help="write the trained model artifact here")


def _add_explain_args(p: argparse.ArgumentParser):
    p.add_argument("--background", type=int, default=100,
                   help="background rows sampled without replacement (default 100)")
    p.add_argument("--background-seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=None,
                   help="coalition design budget (default: full enumeration up to m=11)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-geo", action="store_true",
                   help="treat coordinates as background-only (plain kernel Shapley)")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get(THREADS_ENV, "1")))


def _parse_coords(spec: str):
    parts = [s.strip() for s in spec.split(",")]
    if len(parts) != 2 or not all(parts):
        raise ValidationError(f"--coords expects two column names, got {spec!r}")
    return tuple(parts)


def _parse_list(spec):
    if not spec:
        return None
    items = [s.strip() for s in spec.split(",") if s.strip()]
    return items or None


def _parse_params(pairs):
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValidationError(f"--model-param expects K=V, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _ingest_from_args(args):
    coords = _parse_coords(args.coords)
    dataset, report = ingest_csv(
        args.data,
        coords,
        target=args.target,
        features=_parse_list(args.features),
        exclude=_parse_list(args.exclude) or (),
        id_column=args.id_column,
    )
    print(report.describe(), file=sys.stderr)
    return dataset


def _config_echo(args, keys):
    return {key: getattr(args, key.replace("-", "_")) for key in keys}


class _OracleHandle:
    """Oracle plus how it came to be; closes bridge sessions when done."""

    def __init__(self, oracle, kind, session=None, cv_r2=None):
        self.oracle = oracle
        self.kind = kind
        self.session = session
        self.cv_r2 = cv_r2

    def close(self):
        if self.session is not None:
            self.session.close()


def _build_oracle(args, dataset) -> _OracleHandle:
    chosen = [x for x in (args.model, args.model_cmd, args.model_file) if x]
    if len(chosen) != 1:
        raise ValidationError("choose exactly one of --model, --model-cmd, --model-file")
    n_columns = dataset.p + 2

    if args.model_file:
        model = load_model(args.model_file)
        if getattr(model, "n_columns", n_columns) != n_columns:
            raise ValidationError(
                f"model artifact expects {model.n_columns} columns, dataset rows have {n_columns}"
            )
        return _OracleHandle(model, f"file:{args.model_file}")

    if args.model_cmd:
        session = handshake(args.model_cmd, expect_columns=n_columns)
        oracle = BridgedOracle(session)
        cv = None
        if dataset.target is not None and session.capabilities.trainable:
            X, y = dataset.matrix(), dataset.target

            def bridged_trainer(Xf, yf):
                fit_remote(session, Xf, yf)
                return oracle

            cv = cross_val_r2(bridged_trainer, X, y, folds=5, seed=args.seed)
            fit_remote(session, X, y)  # final refit on the full data
        return _OracleHandle(oracle, f"bridged:{args.model_cmd}", session=session, cv_r2=cv)

    if dataset.target is None:
        raise ValidationError(f"built-in model {args.model!r} needs --target to train")
    params = _parse_params(args.model_param)
    train = trainer(args.model, **params)
    X, y = dataset.matrix(), dataset.target
    cv = cross_val_r2(train, X, y, folds=5, seed=args.seed)
    model = train(X, y)
    if args.model_out:
        save_model(model, args.model_out)
        print(f"wrote model artifact {args.model_out}", file=sys.stderr)
    return _OracleHandle(model, f"builtin:{args.model}", cv_r2=cv)


def _explain_config(args) -> ExplainConfig:
    return ExplainConfig(
        budget=args.budget,
        seed=args.seed,
        include_geo=not args.no_geo,
        threads=args.threads,
        background_size=args.background,
        background_seed=args.background_seed,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = _config_echo(args, ["process", "n", "seed", "noise_sd", "out", "truth_out"])
    manifest = build_manifest("simulate", config, {"seed": args.seed})
    started = time.perf_counter()
    if args.process == "svc":
        truth = gen_svc(args.n, seed=args.seed, noise_sd=args.noise_sd)
    else:
        truth = gen_nonlinear(args.n, seed=args.seed, noise_sd=args.noise_sd)
    ds = truth.dataset
    header = ["row_id", *ds.feature_names, "u", "v", "y"]
    lines = [f"# manifest_hash: {manifest['manifest_hash']}", ",".join(header)]
    for i in range(ds.n):
        cells = [str(ds.row_ids[i])]
        cells += [_fmt(v) for v in ds.features[i]]
        cells += [_fmt(ds.coords[i, 0]), _fmt(ds.coords[i, 1]), _fmt(ds.target[i])]
        lines.append(",".join(cells))
    _write_text(args.out, "\n".join(lines) + "\n")
    if args.truth_out:
        cols = ["row_id", "noiseless"]
        if truth.betas is not None:
            cols += ["beta0"] + [f"beta_{name}" for name in ds.feature_names]
        tlines = [f"# manifest_hash: {manifest['manifest_hash']}", ",".join(cols)]
        for i in range(ds.n):
            cells = [str(ds.row_ids[i]), _fmt(truth.noiseless[i])]
            if truth.betas is not None:
                cells.append(_fmt(truth.beta0[i]))
                cells += [_fmt(b) for b in truth.betas[i]]
            tlines.append(",".join(cells))
        _write_text(args.truth_out, "\n".join(tlines) + "\n")
    write_manifest(manifest, {"seconds": round(time.perf_counter() - started, 3)}, args.out)
    print(f"wrote {args.out} ({ds.n} rows)", file=sys.stderr)
    return 0


def cmd_explain(args) -> int:
    dataset = _ingest_from_args(args)
    config_keys = ["data", "coords", "target", "features", "exclude", "model",
                   "model_cmd", "model_file", "background", "budget", "no_geo", "out"]
    seeds = {"seed": args.seed, "background_seed": args.background_seed,
             "cv_fold_seed": args.seed}
    manifest = build_manifest("explain", _config_echo(args, config_keys), seeds)
    started = time.perf_counter()
    handle = _build_oracle(args, dataset)
    try:
        background = sample_background(dataset, args.background, args.background_seed)
        expl = explain(dataset, handle.oracle, background, _explain_config(args))
    finally:
        handle.close()
    emit_explanations(expl, args.out, manifest["manifest_hash"])
    timings = {"seconds": round(time.perf_counter() - started, 3)}
    extras = {"model": handle.kind, "background_provenance": background.provenance}
    if handle.cv_r2 is not None:
        mean_r2, folds = handle.cv_r2
        extras["cv_r2"] = mean_r2
        extras["cv_r2_folds"] = folds
        print(f"5-fold CV R^2 = {mean_r2:.4f}", file=sys.stderr)
    write_manifest({**manifest, **extras}, timings, args.out)
    print(f"wrote {args.out} ({len(expl)} rows)", file=sys.stderr)
    return 0


def cmd_importance(args) -> int:
    expl, _ = load_explanations(args.explanations)
    manifest = build_manifest("importance", _config_echo(args, ["explanations", "out"]), {})
    started = time.perf_counter()
    table = global_importance(expl)
    emit_importance(table, args.out, manifest["manifest_hash"])
    write_manifest(manifest, {"seconds": round(time.perf_counter() - started, 3)}, args.out)
    print(f"wrote {args.out} ({len(table)} rows)", file=sys.stderr)
    return 0


def cmd_pdp(args) -> int:
    expl, _ = load_explanations(args.explanations)
    dataset = _ingest_from_args(args)
    manifest = build_manifest(
        "pdp", _config_echo(args, ["explanations", "data", "coords", "feature", "out"]), {}
    )
    started = time.perf_counter()
    points = pdp_points(expl, dataset, args.feature)
    emit_pdp(points, args.out, manifest["manifest_hash"])
    write_manifest(manifest, {"seconds": round(time.perf_counter() - started, 3)}, args.out)
    print(f"wrote {args.out} ({len(points)} points)", file=sys.stderr)
    return 0


def cmd_svc(args) -> int:
    expl, _ = load_explanations(args.explanations)
    dataset = _ingest_from_args(args)
    config_keys = ["explanations", "data", "coords", "feature", "bandwidth", "kernel",
                   "bootstrap", "out"]
    manifest = build_manifest("svc", _config_echo(args, config_keys), {})
    started = time.perf_counter()
    bandwidth = args.bandwidth
    if bandwidth != "auto":
        bandwidth = float(bandwidth) if args.kernel == "gaussian" else int(bandwidth)
    surface = svc_extract(expl, dataset, args.feature, bandwidth=bandwidth, kernel=args.kernel)
    if args.bootstrap:
        summary = load_bootstrap(args.bootstrap)
        surface = mask_by_ci(surface, summary)
        print(f"masked {int(surface.masked.sum())} of {len(surface.masked)} locations",
              file=sys.stderr)
    emit_svc_geojson(surface, args.out, manifest["manifest_hash"])
    write_manifest({**manifest, "selected_bandwidth": surface.bandwidth},
                   {"seconds": round(time.perf_counter() - started, 3)}, args.out)
    print(f"wrote {args.out} (bandwidth {surface.bandwidth})", file=sys.stderr)
    return 0


def cmd_bootstrap(args) -> int:
    dataset = _ingest_from_args(args)
    if dataset.target is None:
        raise ValidationError("bootstrap needs --target to retrain")
    config_keys = ["data", "coords", "target", "features", "exclude", "model", "model_cmd",
                   "background", "budget", "no_geo", "replicates", "svc_features",
                   "bandwidth", "kernel", "out"]
    seeds = {"seed": args.seed, "background_seed": args.background_seed,
             "bootstrap_seed": args.bootstrap_seed}
    manifest = build_manifest("bootstrap", _config_echo(args, config_keys), seeds)
    started = time.perf_counter()

    if args.model_cmd:
        probe = handshake(args.model_cmd, expect_columns=dataset.p + 2)
        trainable = probe.capabilities.trainable
        probe.close()
        if not trainable:
            raise ValidationError("bootstrap over --model-cmd needs a trainable server")

        def trainer_fn(X, y):
            session = handshake(args.model_cmd, expect_columns=X.shape[1])
            fit_remote(session, X, y)
            return BridgedOracle(session)
    elif args.model:
        trainer_fn = trainer(args.model, **_parse_params(args.model_param))
    else:
        raise ValidationError("choose --model or --model-cmd for bootstrap")

    svc_features = tuple(_parse_list(args.svc_features) or ())
    bandwidth = args.bandwidth
    if bandwidth != "auto":
        bandwidth = int(bandwidth)
    summary = bootstrap(
        dataset,
        trainer_fn,
        _explain_config(args),
        B=args.replicates,
        seed=args.bootstrap_seed,
        svc_features=svc_features,
        svc_bandwidth=bandwidth,
        svc_kernel=args.kernel,
        threads=args.threads,
    )
    emit_bootstrap(summary, args.out, manifest["manifest_hash"])
    write_manifest(manifest, {"seconds": round(time.perf_counter() - started, 3)}, args.out)
    print(
        f"wrote {args.out} ({summary.completed}/{summary.replicates} replicates)",
        file=sys.stderr,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoshap",
        description="Location-aware Shapley explanations for geospatial tabular models",
    )
    parser.add_argument("--version", action="version", version=f"geoshap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset with known truth")
    p.add_argument("--process", choices=["svc", "nonlinear"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sd", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.add_argument("--truth-out", default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("explain", help="compute per-row attributions")
    _add_data_args(p)
    _add_model_args(p)
    _add_explain_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_explain)

    p = sub.add_parser("importance", help="global importance table from explanations")
    p.add_argument("--explanations", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_importance)

    p = sub.add_parser("pdp", help="primary-effect dependence data for one feature")
    p.add_argument("--explanations", required=True)
    _add_data_args(p)
    p.add_argument("--feature", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_pdp)

    p = sub.add_parser("svc", help="spatially varying coefficient surface for one feature")
    p.add_argument("--explanations", required=True)
    _add_data_args(p)
    p.add_argument("--feature", required=True)
    p.add_argument("--bandwidth", default="auto")
    p.add_argument("--kernel", default="bisquare", choices=["bisquare", "gaussian", "uniform"])
    p.add_argument("--bootstrap", default=None,
                   help="bootstrap summary JSON used to set CI mask flags")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_svc)

    p = sub.add_parser("bootstrap", help="refit/re-explain intervals per row and component")
    _add_data_args(p, need_target=True)
    _add_model_args(p)
    _add_explain_args(p)
    p.add_argument("--replicates", type=int, default=500,
                   help="bootstrap resamples (default 500)")
    p.add_argument("--bootstrap-seed", type=int, default=0)
    p.add_argument("--svc-features", default=None,
                   help="comma list of features whose SVC surfaces get intervals too")
    p.add_argument("--bandwidth", default="auto")
    p.add_argument("--kernel", default="bisquare", choices=["bisquare", "uniform"])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_bootstrap)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except GeoShapError as exc:
        print(f"geoshap {args.command}: error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
