"""``tuberegress`` command-line front end.

Each command reads upstream JSON artifacts from the output directory, runs
one stage and writes its own artifacts next to them. Every artifact carries
the config hash; downstream commands refuse artifacts written under a
different configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ablation import AblationConfig, ablation_csv, ablation_report, run_ablation
from .config import ExperimentConfig, load_config
from .dataset import eda_document, load_csv, load_fixture, sample_subset, stratified_split
from .errors import ConfigInvalid, MissingArtifact, TubeRegressError
from .evaluation import compute_metrics, cross_validate, r2_score
from .features import derive_features, select_features
from .importance import ensemble_scores, top_k
from .kernel import KernelSpec
from .model_selection import ParamSpace, randomized_search
from .pipeline import (ForestEstimator, KnnEstimator, OlsEstimator, Pipeline, RidgeEstimator,
                       SvrEstimator, TreeEstimator)
from .preprocess import default_partition, partition_from_groups
from .svr import SvrParams
from .trees import TreeParams

log = logging.getLogger("tuberegress")

SCHEMA = 1
COMMANDS = ("eda", "split", "importance", "tune", "train", "crossval", "ablate", "compare", "report")
# artifact -> command that writes it
PRODUCER = {"eda": "eda", "split": "split", "importance": "importance", "search": "tune",
            "search_linear": "tune", "model": "train", "metrics": "train", "cv": "crossval",
            "ablation": "ablate", "comparison": "compare", "report": "report"}


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


class Workspace:
    """Artifact store for one configuration, plus cached derived data."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self.hash = cfg.hash()
        self._data = None

    # --- artifacts -------------------------------------------------------
    def write(self, stage: str, payload: dict) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        doc = {"artifact": stage, "schema": SCHEMA, "version": __version__, "config_hash": self.hash,
               "data": payload}
        path = self.out / f"{stage}.json"
        path.write_text(json.dumps(doc, indent=2, default=_jsonable) + "\n")
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        return path

    def read(self, stage: str) -> dict:
        path = self.out / f"{stage}.json"
        if not path.is_file():
            raise MissingArtifact(stage, f"{path} not found; run `tuberegress {PRODUCER.get(stage, stage)}` first")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise MissingArtifact(stage, f"unreadable: {e}") from e
        if doc.get("config_hash") != self.hash:
            raise MissingArtifact(stage, f"stale (config hash {doc.get('config_hash')} != {self.hash})")
        if doc.get("schema") != SCHEMA:
            raise MissingArtifact(stage, f"schema {doc.get('schema')} != {SCHEMA}")
        return doc["data"]

    # --- data --------------------------------------------------------------
    def dataset(self):
        if self._data is None:
            self._data = load_fixture() if self.cfg.fixture else load_csv(self.cfg.data, self.cfg.target)
        return self._data

    def split(self):
        """Engineered train/test sets rebuilt from the split artifact's row ids."""
        s = self.read("split")
        ds = self.dataset()
        return derive_features(ds.take(s["train_rows"])), derive_features(ds.take(s["test_rows"]))

    def features(self):
        return self.read("importance")["selected"]

    def partition(self):
        part = default_partition()
        part.update(partition_from_groups(self.cfg.scalers))
        return part

    def subset(self, train):
        n = self.cfg.subset_n
        return train if n >= train.n else sample_subset(train, n, self.cfg.seeds.subset)

    def selected(self):
        train, test = self.split()
        feats = self.features()
        return select_features(self.subset(train), feats), select_features(train, feats), select_features(test, feats)


def _params_from(d: dict, kernel="rbf") -> SvrParams:
    return SvrParams(C=float(d["C"]), epsilon=float(d["epsilon"]), kernel=KernelSpec(kernel, d["gamma"]))


# --- commands ----------------------------------------------------------------

def cmd_eda(ws: Workspace):
    ds = ws.dataset()
    doc = eda_document(ds)
    ws.write("eda", doc)
    names = doc["correlation_names"]
    ws.write_text("correlations.csv", _csv_text([""] + names, [[n] + row for n, row in zip(names, doc["correlations"])]))
    cols = doc["columns"]
    ws.write_text("summary.csv", _csv_text(list(cols[0]), [list(c.values()) for c in cols]))
    for name, h in doc["histograms"].items():
        rows = [(h["edges"][i], h["edges"][i + 1], h["counts"][i]) for i in range(len(h["counts"]))]
        ws.write_text(f"hist_{name}.csv", _csv_text(["left", "right", "count"], rows))
    log.info("eda: %d rows, %d columns", ds.n, ds.d)


def cmd_split(ws: Workspace):
    c = ws.cfg
    sp = stratified_split(ws.dataset(), c.split.test_fraction, c.split.n_bins, c.seeds.split)
    payload = {
        "test_fraction": c.split.test_fraction, "n_bins": c.split.n_bins, "seed": c.seeds.split,
        "n_train": sp.train.n, "n_test": sp.test.n,
        "train_mean": float(sp.train.y.mean()), "test_mean": float(sp.test.y.mean()),
        "train_std": float(sp.train.y.std()), "test_std": float(sp.test.y.std()),
        "train_rows": sp.train.row_ids.tolist(), "test_rows": sp.test.row_ids.tolist(),
    }
    ws.write("split", payload)
    log.info("split: %d train / %d test", sp.train.n, sp.test.n)


def cmd_importance(ws: Workspace):
    c = ws.cfg
    train, _ = ws.split()
    rep = ensemble_scores(train, c.importance.weights, c.importance.forest_size, c.seeds.forest,
                          k=c.importance.mi_neighbors, n_jobs=c.n_jobs)
    k = min(c.importance.feature_k, len(rep.features))
    payload = rep.to_dict()
    payload["selected"] = top_k(rep, k)
    ws.write("importance", payload)
    ws.write_text("importance.csv", rep.to_csv())
    log.info("importance: top %d = %s", k, ", ".join(payload["selected"]))


def _search(ws: Workspace, sub, kernel: str):
    c = ws.cfg
    space = ParamSpace(c.search.C, c.search.epsilon, c.search.gamma, kernel=kernel)
    res = randomized_search(sub, space, c.search.n_iter, c.search.cv, c.seeds.search,
                            partition=ws.partition(), refit=False, n_jobs=c.n_jobs)
    stage = "search" if kernel == "rbf" else f"search_{kernel}"
    ws.write(stage, res.as_dict())
    ws.write_text(f"timing/{stage}.json", json.dumps(res.timings(), indent=2) + "\n")
    rows = [(t.index, t.params.C, t.params.epsilon, str(t.params.kernel.gamma), t.mean_score) for t in res.trials]
    ws.write_text(f"{stage}_trials.csv", _csv_text(["trial", "C", "epsilon", "gamma", "mean_r2"], rows))
    log.info("%s search: best %s mean R2 %.4f over %d fits", kernel, res.best.as_dict(), res.best_mean_score,
             res.total_fits)


def cmd_tune(ws: Workspace):
    sub, _, _ = ws.selected()
    _search(ws, sub, "rbf")
    if ws.cfg.search.linear:
        _search(ws, sub, "linear")


def cmd_train(ws: Workspace):
    sub, _, test = ws.selected()
    best = ws.read("search")["best"]
    params = _params_from(best)
    fitted = Pipeline(SvrEstimator(params), ws.partition()).fit(sub)
    yhat_train, yhat_test = fitted.predict(sub), fitted.predict(test)
    m_train, m_test = compute_metrics(sub.y, yhat_train), compute_metrics(test.y, yhat_test)
    model = fitted.model
    ws.write("model", {"preprocessor": fitted.preprocessor.as_dict(), "svr": model.to_dict()})
    ws.write("metrics", {
        "params": {"C": params.C, "epsilon": params.epsilon, "gamma": params.kernel.gamma},
        "train": m_train.as_dict(), "test": m_test.as_dict(), "r2_gap": m_train.r2 - m_test.r2,
        "n_train": sub.n, "n_test": test.n, "n_support": len(model.beta), "converged": model.converged,
    })
    rows = zip(test.row_ids.tolist(), test.y.tolist(), yhat_test.tolist(), (test.y - yhat_test).tolist())
    ws.write_text("predictions.csv", _csv_text(["row", "actual", "predicted", "residual"], rows))
    log.info("train: test R2 %.4f RMSE %.4f MAE %.4f", m_test.r2, m_test.rmse, m_test.mae)


def cmd_crossval(ws: Workspace):
    c = ws.cfg
    sub, _, _ = ws.selected()
    params = _params_from(ws.read("search")["best"])
    res = cross_validate(Pipeline(SvrEstimator(params), ws.partition()), sub, c.final_cv, c.seeds.cv)
    ws.write("cv", dict(res.as_dict(), k=c.final_cv, seed=c.seeds.cv, n_rows=sub.n))
    ws.write_text("cv_folds.csv", _csv_text(["fold", "r2"], enumerate(res.fold_scores, 1)))
    log.info("crossval: mean R2 %.4f (std %.4f)", res.mean, res.std)


def cmd_ablate(ws: Workspace):
    c = ws.cfg
    train, test = ws.split()
    acfg = AblationConfig(engineered=tuple(ws.features()), partition=ws.partition(),
                          tuned_params=_params_from(c.ablation.tuned), subset_n=c.subset_n,
                          subset_seed=c.seeds.subset)
    res = run_ablation(train, test, acfg)
    ws.write("ablation", ablation_report(res))
    ws.write_text("ablation.csv", ablation_csv(res))
    log.info("ablate: %s", ", ".join(f"{s.stage}={s.r2:.4f}" for s in res.stages))


def load_external_scores(path) -> list:
    """Rows from ``{"models": [{"model", "r2", "notes"?}]}`` or ``{"name": r2}``."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigInvalid(f"cannot read external scores {path}: {e}") from e
    items = raw.get("models") if isinstance(raw, dict) and "models" in raw else raw
    if isinstance(items, dict):
        items = [{"model": k, "r2": v} for k, v in items.items()]
    rows = []
    for it in items:
        try:
            rows.append({"model": str(it["model"]), "r2": float(it["r2"]), "notes": str(it.get("notes", "")),
                         "source": "external"})
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigInvalid(f"bad external score entry {it!r}") from e
    return rows


def rank_rows(rows) -> list:
    rows = sorted(rows, key=lambda r: (-r["r2"], r["model"]))
    return [dict(r, rank=i) for i, r in enumerate(rows, 1)]


def cmd_compare(ws: Workspace):
    c = ws.cfg
    sub, train, test = ws.selected()
    part = ws.partition()
    forest = TreeParams(seed=c.seeds.forest)
    estimators = [
        ("Random Forest", ForestEstimator(c.baselines.forest_size, forest, c.n_jobs), "full training set"),
        ("K-Nearest Neighbours", KnnEstimator(c.baselines.knn_k), f"k={c.baselines.knn_k}"),
        ("Ridge Regression", RidgeEstimator(c.baselines.ridge_lambda), f"lambda={c.baselines.ridge_lambda}"),
        ("Linear Regression", OlsEstimator(), "ordinary least squares"),
        ("Decision Tree", TreeEstimator(TreeParams(seed=c.seeds.forest)), "unlimited depth"),
    ]
    rows = []
    for name, est, notes in estimators:
        r2 = r2_score(test.y, Pipeline(est, part).fit(train).predict(test))
        rows.append({"model": name, "r2": r2, "notes": notes, "source": "internal"})
        log.info("compare: %s R2 %.4f", name, r2)
    rows.append({"model": "SVR-RBF (Tuned)", "r2": ws.read("metrics")["test"]["r2"],
                 "notes": f"{sub.n}-row subset", "source": "internal"})
    if c.search.linear:
        params = _params_from(ws.read("search_linear")["best"], kernel="linear")
        r2 = r2_score(test.y, Pipeline(SvrEstimator(params), part).fit(sub).predict(test))
        rows.append({"model": "SVR-Linear Kernel", "r2": r2, "notes": f"{sub.n}-row subset", "source": "internal"})
    if c.external_scores:
        rows.extend(load_external_scores(c.external_scores))
    table = rank_rows(rows)
    ws.write("comparison", {"rows": table})
    ws.write_text("comparison.csv", _csv_text(["rank", "model", "r2", "source", "notes"],
                                              [(r["rank"], r["model"], r["r2"], r["source"], r["notes"]) for r in table]))


REPORT_PARTS = ("eda", "split", "importance", "search", "metrics", "cv", "ablation", "comparison")


def cmd_report(ws: Workspace):
    parts = {p: ws.read(p) for p in REPORT_PARTS}
    split = parts["split"]
    report = {
        "config": ws.cfg.result_settings(),
        "dataset": {"n_rows": parts["eda"]["n_rows"], "columns": parts["eda"]["columns"],
                    "n_train": split["n_train"], "n_test": split["n_test"],
                    "train_mean": split["train_mean"], "test_mean": split["test_mean"]},
        "importance": parts["importance"],
        "search": parts["search"],
        "final": parts["metrics"],
        "cv": parts["cv"],
        "ablation": parts["ablation"],
        "comparison": parts["comparison"]["rows"],
    }
    if ws.cfg.search.linear:
        report["search_linear"] = ws.read("search_linear")
    ws.write("report", report)
    log.info("report: written to %s", ws.out / "report.json")


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def run_all(ws: Workspace):
    for name in COMMANDS:
        HANDLERS[name](ws)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tuberegress", description="Leakage-safe SVR regression experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS + ("run",), help="stage to run; `run` runs all of them in order")
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--seed", type=int, help="override every seed")
    p.add_argument("--subset", type=int, help="SVR training subset size")
    p.add_argument("--test-frac", type=float, help="held-out test fraction")
    p.add_argument("--out", help="output directory")
    p.add_argument("--external-scores", help="JSON file of externally computed test R2 rows")
    p.add_argument("--fixture", action="store_true", help="use the bundled 200-row synthetic dataset")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def overrides_from(args) -> dict:
    o = {}
    if args.seed is not None:
        for k in ("split", "subset", "search", "forest", "cv"):
            o[f"seeds.{k}"] = args.seed
    if args.subset is not None:
        o["subset_n"] = args.subset
    if args.test_frac is not None:
        o["split.test_fraction"] = args.test_frac
    if args.out is not None:
        o["out_dir"] = args.out
    if args.external_scores is not None:
        o["external_scores"] = args.external_scores
    if args.fixture:
        o["fixture"] = True
    return o


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s",
                        stream=sys.stderr)
    try:
        ws = Workspace(load_config(args.config, overrides_from(args)))
        if args.command == "run":
            run_all(ws)
        else:
            HANDLERS[args.command](ws)
    except TubeRegressError as e:
        print(f"tuberegress {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
