"""Cross-validated evaluation: MAE plus Top-N confusion-matrix metrics.

For every fold the model is fitted on the training part and every test pair
is predicted.  MAE covers all test pairs.  Classification metrics look only
at the items inside each user's Top-N list, where the list is built from
that user's *test* items ranked by predicted value; an item counts as
predicted-positive when its prediction is >= T and actual-positive when its
true rating is >= T.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._accel import resolve_backend
from .dataset import kfold_split
from .errors import ConfigError, NoDataError
from .prediction import COMBINATIONS, CupModel, PredictConfig, select_combination
from .recommend import RecommendationList, merge_lists

log = logging.getLogger(__name__)

RANKING_MODES = ("cup", "merged")
AVERAGING = ("micro", "macro")
METRIC_NAMES = ("accuracy", "precision", "recall")
METHOD_NAMES = {"cup": "CUPCF", "nhsm": "NHSM-only", "pearson": "Pearson-only"}

# Reproduction bands checked by `cupcf evaluate --check-bands`.
MAE_BAND = (0.70, 0.78)
PRECISION_BAND_TOP5_T3 = (0.88, 0.94)
RECALL_MIN_TOP5_T3 = 0.98
MONOTONE_SLACK = 0.005


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts laid out as actual x predicted: a=(neg, neg), b=(neg, pos), c=(pos, neg), d=(pos, pos)."""

    a: int = 0
    b: int = 0
    c: int = 0
    d: int = 0

    def __add__(self, other):
        return ConfusionMatrix(self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d)

    @property
    def total(self):
        return self.a + self.b + self.c + self.d

    @classmethod
    def from_labels(cls, actual_pos, predicted_pos):
        actual_pos = np.asarray(actual_pos, dtype=bool)
        predicted_pos = np.asarray(predicted_pos, dtype=bool)
        return cls(
            int(np.sum(~actual_pos & ~predicted_pos)),
            int(np.sum(~actual_pos & predicted_pos)),
            int(np.sum(actual_pos & ~predicted_pos)),
            int(np.sum(actual_pos & predicted_pos)),
        )


def _ratio(num, den):
    return num / den if den else None


def metrics(cm):
    """(accuracy, precision, recall); an entry is None when its denominator is 0."""
    return (
        _ratio(cm.a + cm.d, cm.total),
        _ratio(cm.d, cm.b + cm.d),
        _ratio(cm.d, cm.c + cm.d),
    )


def mae(pairs):
    """Mean absolute error over ``(predicted, actual)`` pairs."""
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.float64)
    if arr.size == 0:
        raise NoDataError("MAE of an empty prediction set")
    arr = arr.reshape(-1, 2)
    return float(np.mean(np.abs(arr[:, 0] - arr[:, 1])))


def confusion_for_user(topn, test_ratings, predictions, threshold):
    """Confusion counts over the items of one user's Top-N list.

    ``test_ratings`` maps (or lists ``(item, actual)`` for) the user's test
    items; ``predictions`` maps item -> predicted value.
    """
    actual = dict(test_ratings)
    pred = dict(predictions)
    items = topn.items
    if not items:
        return ConfusionMatrix()
    return ConfusionMatrix.from_labels(
        [actual[i] >= threshold for i in items],
        [pred[i] >= threshold for i in items],
    )


# -- experiment ---------------------------------------------------------------


@dataclass(frozen=True)
class EvalConfig:
    k_folds: int = 5
    seed: int = 0
    splits_dir: str | None = None
    k_neighbors: int = 300
    n_values: tuple = (5, 10, 15, 20, 30)
    thresholds: tuple = (3, 4)
    ranking_mode: str = "cup"
    measure: str = "cup"
    averaging: str = "micro"
    clamp: bool = True
    backend: str | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "thresholds", tuple(int(t) for t in self.thresholds))
        object.__setattr__(self, "backend", resolve_backend(self.backend))
        if self.ranking_mode not in RANKING_MODES:
            raise ConfigError(f"ranking_mode must be one of {RANKING_MODES}")
        if self.measure not in COMBINATIONS:
            raise ConfigError(f"measure must be one of {COMBINATIONS}")
        if self.averaging not in AVERAGING:
            raise ConfigError(f"averaging must be one of {AVERAGING}")
        if self.ranking_mode == "merged" and self.measure != "cup":
            raise ConfigError("merged ranking needs both measures (measure=cup)")
        if not self.n_values or min(self.n_values) < 1:
            raise ConfigError("n_values must be positive")
        if not self.thresholds:
            raise ConfigError("at least one threshold is required")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")
        PredictConfig(self.k_neighbors, self.clamp)

    def echo(self):
        """Settings that affect results (worker count does not)."""
        d = asdict(self)
        d.pop("workers")
        d["n_values"] = list(self.n_values)
        d["thresholds"] = list(self.thresholds)
        return d


@dataclass
class EvalReport:
    method: str
    config: dict
    input: dict
    folds: list = field(default_factory=list)

    @property
    def fingerprint(self):
        blob = json.dumps({"config": self.config, "input": self.input}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def fold_maes(self):
        return [f["mae"] for f in self.folds]

    def cell(self, fold, n, t):
        for c in self.folds[fold]["cells"]:
            if c["n"] == n and c["t"] == t:
                return c
        raise KeyError((fold, n, t))

    def summary(self):
        """Fold-averaged MAE and metrics (undefined entries skipped)."""
        out = {"mae": float(np.mean(self.fold_maes())) if self.folds else None, "cells": []}
        if not self.folds:
            return out
        for c0 in self.folds[0]["cells"]:
            n, t = c0["n"], c0["t"]
            row = {"n": n, "t": t}
            for name in METRIC_NAMES:
                vals = [self.cell(i, n, t)[name] for i in range(len(self.folds))]
                vals = [v for v in vals if v is not None]
                row[name] = float(np.mean(vals)) if vals else None
            out["cells"].append(row)
        return out

    def to_dict(self):
        return {
            "method": self.method,
            "fingerprint": self.fingerprint,
            "config": self.config,
            "input": self.input,
            "folds": self.folds,
            "summary": self.summary(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self):
        return render_markdown(self)


def _fmt(v):
    return "n/a" if v is None else f"{v:.4f}"


def render_markdown(report):
    n_values = report.config["n_values"]
    lines = [f"# {report.method} evaluation", ""]
    lines.append(f"Config fingerprint: `{report.fingerprint}`")
    lines.append("")
    for t in report.config["thresholds"]:
        lines.append(f"## Threshold (T) = {t}")
        lines.append("")
        header = ["Fold", "Method Name", "T", "Evaluation Metric"] + [f"Top {n} Items" for n in n_values]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "---|" * len(header))
        for i, fold in enumerate(report.folds):
            for j, name in enumerate(METRIC_NAMES + ("mae",)):
                lead = [str(fold["fold"]), report.method, str(t)] if j == 0 else ["", "", ""]
                if name == "mae":
                    vals = [_fmt(fold["mae"])] * len(n_values)
                else:
                    vals = [_fmt(report.cell(i, n, t)[name]) for n in n_values]
                label = "MAE" if name == "mae" else name.capitalize()
                lines.append("| " + " | ".join(lead + [label] + vals) + " |")
        lines.append("")
    return "\n".join(lines)


def _topn_positions(items, scores, n):
    order = np.lexsort((items, -scores))
    return order[:n]


def _merged_positions(user, items, nhsm_scores, pearson_scores, n):
    a = RecommendationList(user, tuple((int(items[i]), float(nhsm_scores[i]))
                                       for i in _topn_positions(items, nhsm_scores, n)), n)
    b = RecommendationList(user, tuple((int(items[i]), float(pearson_scores[i]))
                                       for i in _topn_positions(items, pearson_scores, n)), n)
    merged = merge_lists(a, b, n)
    where = {int(it): k for k, it in enumerate(items)}
    return (np.array([where[it] for it in merged.items], dtype=np.int64),
            np.array([s for _, s in merged.entries]))


def score_fold(test, predicted, config, batch=None, scale=(1, 5)):
    """Per-(N, T) cells for one fold's predictions.

    ``test`` is the (n, 3) array of (user, item, actual) rows grouped by user;
    ``predicted`` holds the ranking score of each row.
    """
    users, items, actual = test[:, 0], test[:, 1], test[:, 2]
    bounds = np.flatnonzero(np.diff(users)) + 1
    groups = np.split(np.arange(len(users)), bounds) if len(users) else []
    lo, hi = scale
    if batch is not None and config.ranking_mode == "merged":
        nh = select_combination(batch, "nhsm", config.clamp, lo, hi)
        pe = select_combination(batch, "pearson", config.clamp, lo, hi)

    cells = []
    for n in config.n_values:
        for t in config.thresholds:
            pooled = ConfusionMatrix()
            per_user = []
            for g in groups:
                if config.ranking_mode == "merged":
                    pos, score = _merged_positions(int(users[g[0]]), items[g], nh[g], pe[g], n)
                else:
                    pos = _topn_positions(items[g], predicted[g], n)
                    score = predicted[g][pos]
                cm = ConfusionMatrix.from_labels(actual[g][pos] >= t, score >= t)
                pooled = pooled + cm
                per_user.append(cm)
            if config.averaging == "micro":
                acc, prec, rec = metrics(pooled)
            else:
                acc, prec, rec = _macro(per_user)
            cells.append({
                "n": n, "t": t,
                "accuracy": acc, "precision": prec, "recall": rec,
                "confusion": asdict(pooled),
            })
    return cells


def _macro(per_user):
    out = []
    for k in range(3):
        vals = [m[k] for m in map(metrics, per_user) if m[k] is not None]
        out.append(float(np.mean(vals)) if vals else None)
    return tuple(out)


def _evaluate_fold(fold, config, combinations):
    test = np.asarray(fold.test)
    model = CupModel.fit(fold.train, PredictConfig(config.k_neighbors, config.clamp), config.backend)
    batch = model.predict(test[:, 0], test[:, 1])
    out = {}
    for comb in combinations:
        sub = EvalConfig(**{**asdict(config), "measure": comb,
                            "ranking_mode": config.ranking_mode if comb == "cup" else "cup"})
        predicted = select_combination(batch, comb, config.clamp, fold.train.scale_min, fold.train.scale_max)
        out[comb] = {
            "fold": fold.fold_index + 1,
            "n_train": int(fold.train.n_ratings),
            "n_test": int(len(test)),
            "mae": mae(np.column_stack([predicted, test[:, 2]])),
            "fallback": {
                "nhsm": int(batch.nhsm_fellback.sum()),
                "pearson": int(batch.pearson_fellback.sum()),
                "cold_user": int(batch.cold_user.sum()),
            },
            "cells": score_fold(test, predicted, sub, batch,
                                (fold.train.scale_min, fold.train.scale_max)),
        }
    log.info("fold %d done: %s", fold.fold_index + 1,
             ", ".join(f"{c} MAE {out[c]['mae']:.4f}" for c in combinations))
    return out


def make_folds(dataset, config):
    if config.splits_dir:
        from .dataset import load_fold_files

        return load_fold_files(config.splits_dir, config.k_folds)
    return kfold_split(dataset, config.k_folds, config.seed)


def _input_echo(dataset, folds):
    if dataset is not None:
        return {"checksum": dataset.checksum(), "n_users": dataset.n_users,
                "n_items": dataset.n_items, "n_ratings": dataset.n_ratings}
    h = hashlib.sha256()
    for f in folds:
        h.update(f.train.checksum().encode())
        h.update(np.ascontiguousarray(f.test, dtype="<i8").tobytes())
    return {"checksum": h.hexdigest()}


def compare_measures(dataset, config=EvalConfig(), combinations=COMBINATIONS, folds=None):
    """Run several combination modes on identical folds, sharing the fitted models.

    Returns ``{combination: EvalReport}``.
    """
    if folds is None:
        folds = make_folds(dataset, config)
    echo_in = _input_echo(dataset, folds)
    with ThreadPoolExecutor(max_workers=int(config.workers)) as pool:
        results = list(pool.map(lambda f: _evaluate_fold(f, config, combinations), folds))
    reports = {}
    for comb in combinations:
        cfg = config.echo()
        cfg["measure"] = comb
        if comb != "cup":
            cfg["ranking_mode"] = "cup"
        reports[comb] = EvalReport(METHOD_NAMES[comb], cfg, echo_in, [r[comb] for r in results])
    return reports


def run_experiment(dataset, config=EvalConfig(), folds=None):
    """Evaluate ``config.measure`` under k-fold cross-validation."""
    return compare_measures(dataset, config, (config.measure,), folds)[config.measure]


# -- reproduction bands -------------------------------------------------------


def check_bands(report, baselines=None):
    """Check a CUPCF report against the reproduction bands.

    Returns a list of ``(name, passed, detail)``.  ``baselines`` maps
    ``"nhsm"``/``"pearson"`` to reports on the same folds for the
    directional MAE checks.
    """
    checks = []
    maes = report.fold_maes()
    ok = all(MAE_BAND[0] <= m <= MAE_BAND[1] for m in maes)
    checks.append(("mae_band", ok, f"fold MAE {[round(m, 4) for m in maes]} in {list(MAE_BAND)}"))

    for name, other in (baselines or {}).items():
        mine, theirs = float(np.mean(maes)), float(np.mean(other.fold_maes()))
        per_fold = all(a < b for a, b in zip(maes, other.fold_maes()))
        checks.append((f"beats_{name}", mine < theirs and per_fold,
                       f"mean MAE {mine:.4f} vs {name} {theirs:.4f}; every fold lower: {per_fold}"))

    cfg = report.config
    if 5 in cfg["n_values"] and 3 in cfg["thresholds"]:
        prec = [report.cell(i, 5, 3)["precision"] for i in range(len(report.folds))]
        rec = [report.cell(i, 5, 3)["recall"] for i in range(len(report.folds))]
        lo, hi = PRECISION_BAND_TOP5_T3
        checks.append(("top5_t3_precision", all(p is not None and lo <= p <= hi for p in prec),
                       f"{[None if p is None else round(p, 4) for p in prec]} in {[lo, hi]}"))
        checks.append(("top5_t3_recall", all(r is not None and r >= RECALL_MIN_TOP5_T3 for r in rec),
                       f"{[None if r is None else round(r, 4) for r in rec]} >= {RECALL_MIN_TOP5_T3}"))

    ns = sorted(cfg["n_values"])
    for t in cfg["thresholds"]:
        bad = []
        for i in range(len(report.folds)):
            seq = [report.cell(i, n, t)["precision"] for n in ns]
            for n0, n1, p0, p1 in zip(ns, ns[1:], seq, seq[1:]):
                if p0 is not None and p1 is not None and p1 > p0 + MONOTONE_SLACK:
                    bad.append((i + 1, n0, n1))
        checks.append((f"precision_nonincreasing_t{t}", not bad,
                       "ok" if not bad else f"increases at (fold, N, N') {bad}"))
    return checks
