"""Experiment orchestration: assembles every populated results-table cell
(feature method x selector), runs the leakage-free split/standardize/CV
protocol, repeats it over paired splits, and renders the results.

Per pipeline run: standardization is fitted on training rows only; every
feature learner sees training rows only (semi-supervised SAE pretraining
may additionally use standardized unlabeled rows); all hyperparameters are
tuned by stratified k-fold CV inside the training set; the test rows are
touched exactly once, for the final accuracy.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, fields, replace

import numpy as np

from .data import (Dataset, SplitIndices, StandardizationParams, kfold,
                   random_split, standardize_fit, stratified_split)
from .lasso import lambda_path, lasso_cv, lasso_fit, selected_features
from .pca import PcaModel, pca_fit, pca_transform
from .sae import SaeModel, TrainConfig, sae_features, sae_predict, semi_pretrain_finetune
from .svm import LinearSvmModel, accuracy, svm_cv, svm_predict, svm_train
from .ttest import select_top_m, ttest_cv, two_sample_t

METHODS = ("LLF", "LLF_SAEF", "LLF_SEMI_SAEF", "SAEF", "SEMI_SAEF")
SELECTORS = ("NONE", "LASSO", "TTEST", "PCA")

METHOD_LABELS = {
    "LLF": "LLF",
    "LLF_SAEF": "LLF+SAEF",
    "LLF_SEMI_SAEF": "LLF+semi-SAEF",
    "SAEF": "SAEF",
    "SEMI_SAEF": "semi-SAEF",
}
SELECTOR_LABELS = {"NONE": "No FS", "LASSO": "Lasso", "TTEST": "t-test", "PCA": "PCA"}

# The populated cells: selectors beyond "none" apply only where a learned
# subset makes sense (lasso on any LLF-bearing stack, t-test/PCA on LLF).
_ALLOWED = {
    "NONE": set(METHODS),
    "LASSO": {"LLF", "LLF_SAEF", "LLF_SEMI_SAEF"},
    "TTEST": {"LLF"},
    "PCA": {"LLF"},
}

# Sub-stream tags for deriving stage seeds from the per-repeat seed
_TAG_SPLIT = 1
_TAG_FOLDS = 2
_TAG_SAE = 3


class PipelineStageError(RuntimeError):
    """Wraps a failure with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"pipeline stage {stage!r} failed: {cause}")
        self.stage = stage
        self.__cause__ = cause


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc


def _derive(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence([seed, *tags]).generate_state(1)[0])


@dataclass(frozen=True)
class PipelineSpec:
    """One results-table cell: a feature method plus an optional selector."""

    method: str
    selector: str = "NONE"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.selector not in SELECTORS:
            raise ValueError(f"unknown selector {self.selector!r}; expected one of {SELECTORS}")
        if self.method not in _ALLOWED[self.selector]:
            raise ValueError(f"selector {self.selector!r} is not defined for method {self.method!r}")

    @property
    def uses_sae(self) -> bool:
        return self.method != "LLF"

    @property
    def semi_supervised(self) -> bool:
        return self.method in ("SEMI_SAEF", "LLF_SEMI_SAEF")

    @staticmethod
    def table_cells() -> tuple["PipelineSpec", ...]:
        """All populated cells, row by row."""
        cells = []
        for selector in SELECTORS:
            for method in METHODS:
                if method in _ALLOWED[selector]:
                    cells.append(PipelineSpec(method=method, selector=selector))
        return tuple(cells)


@dataclass(frozen=True)
class ExperimentConfig:
    """Protocol knobs; the defaults are the reference protocol (20% test
    split, 10-fold CV, 100 repetitions, 40-15 stack at lr 0.01 for 150
    iterations)."""

    repeats: int = 100
    test_frac: float = 0.2
    k: int = 10
    base_seed: int = 0
    stratify: bool = True
    sae_dims: tuple[int, ...] = (40, 15)
    sae_learning_rate: float = 0.01
    sae_iterations: int = 150
    l2_grid: tuple[float, ...] = (1e-4, 1e-3, 1e-2)
    c_grid: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0)
    pca_grid: tuple[int, ...] = (2, 5, 10, 15, 20, 30, 40)
    ttest_grid: tuple[int, ...] = (1, 2, 4, 6, 8, 12, 16, 24, 32, 48)
    n_lambdas: int = 20
    lambda_ratio: float = 0.01
    svm_epochs: int = 600
    svm_cv_epochs: int = 150
    jobs: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if not 0.0 < self.test_frac < 1.0:
            raise ValueError("test_frac must lie in (0, 1)")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        for name in ("sae_dims", "l2_grid", "c_grid", "pca_grid", "ttest_grid"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")


@dataclass(frozen=True, eq=False)
class MethodFeatures:
    """Fitted method stage: raw features, SAE encodings, or both."""

    method: str
    sae: SaeModel | None = None

    def apply(self, X: np.ndarray) -> np.ndarray:
        if self.method == "LLF":
            return X
        F = sae_features(self.sae, X)
        if self.method in ("LLF_SAEF", "LLF_SEMI_SAEF"):
            return np.hstack([X, F])
        return F


@dataclass(frozen=True, eq=False)
class ColumnScaler:
    """Centering/scaling of learned features, fitted on training rows;
    near-constant columns are centered but left unscaled."""

    means: np.ndarray
    stds: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (X - self.means) / self.stds


def _fit_scaler(F: np.ndarray) -> ColumnScaler:
    means = F.mean(axis=0)
    stds = F.std(axis=0, ddof=1)
    stds = np.where(stds > 1e-12, stds, 1.0)
    return ColumnScaler(means=means, stds=stds)


@dataclass(frozen=True, eq=False)
class SelectorTransform:
    """Fitted selector stage: a column subset or a PCA projection."""

    selector: str
    indices: np.ndarray | None = None
    pca: PcaModel | None = None

    def apply(self, F: np.ndarray) -> np.ndarray:
        if self.selector == "NONE":
            return F
        if self.selector == "PCA":
            return pca_transform(self.pca, F)
        return F[:, self.indices]


@dataclass(frozen=True, eq=False)
class PipelineFit:
    """Everything fitted by one pipeline on one training set."""

    spec: PipelineSpec
    standardization: StandardizationParams
    method_map: MethodFeatures
    feature_scaler: ColumnScaler
    selector_map: SelectorTransform
    svm: LinearSvmModel
    chosen: dict

    def transform(self, X_raw: np.ndarray) -> np.ndarray:
        Xs = (X_raw - self.standardization.means) / self.standardization.stds
        return self.selector_map.apply(self.feature_scaler.apply(self.method_map.apply(Xs)))

    def predict01(self, X_raw: np.ndarray) -> np.ndarray:
        pred = svm_predict(self.svm, self.transform(X_raw))
        return ((pred + 1) // 2).astype(np.int64)


def _local_folds(train: np.ndarray, folds_global) -> list[np.ndarray]:
    return [np.searchsorted(train, fold) for fold in folds_global]


def _cv_svm_trainer(cfg: ExperimentConfig):
    """Fixed-C classifier used while tuning selector hyperparameters; the
    final C is tuned afterwards on the selected features."""

    def trainer(Xtr, ytr01):
        model = svm_train(Xtr, 2.0 * np.asarray(ytr01) - 1.0, C=1.0,
                          tol=1e-6, max_epochs=cfg.svm_cv_epochs)

        def predict(Xval):
            return ((svm_predict(model, Xval) + 1) // 2).astype(np.int64)

        return predict

    return trainer


def _fit_sae_stage(Xtr, ytr01, X_extra, folds_local, cfg: ExperimentConfig, seed: int):
    """Choose the fine-tuning L2 by k-fold CV on the SAE classifier's own
    validation accuracy, then train the final stack on all training rows."""
    base = dict(learning_rate=cfg.sae_learning_rate, iterations=cfg.sae_iterations)
    n = Xtr.shape[0]
    grid = sorted(cfg.l2_grid)
    best_l2, best_acc = grid[0], -1.0
    for l2 in grid:
        score = 0.0
        for f, val in enumerate(folds_local):
            mask = np.ones(n, dtype=bool)
            mask[val] = False
            model = semi_pretrain_finetune(
                Xtr[mask], ytr01[mask], X_extra, cfg.sae_dims,
                TrainConfig(l2=l2, seed=_derive(seed, _TAG_SAE, f), **base))
            score += float(np.mean(sae_predict(model, Xtr[val]) == ytr01[val]))
        if score > best_acc:
            best_l2, best_acc = l2, score
    final = semi_pretrain_finetune(
        Xtr, ytr01, X_extra, cfg.sae_dims,
        TrainConfig(l2=best_l2, seed=_derive(seed, _TAG_SAE, len(folds_local)), **base))
    return final, best_l2


def _fit_lasso_selector(F, ytr01, folds_local, cfg: ExperimentConfig):
    y_pm = 2.0 * np.asarray(ytr01, dtype=float) - 1.0
    lambdas = lambda_path(F, y_pm - y_pm.mean(), cfg.n_lambdas, cfg.lambda_ratio)
    best_lam = lasso_cv(F, y_pm, folds_local, lambdas, tol=1e-6, max_iter=2000)
    fit = lasso_fit(F, y_pm - y_pm.mean(), best_lam)
    idx = selected_features(fit)
    if idx.size == 0:
        # nothing survived the penalty; degrade to no selection
        idx = np.arange(F.shape[1])
    return SelectorTransform(selector="LASSO", indices=idx), {"lambda": best_lam,
                                                              "n_selected": int(idx.size)}


def _fit_ttest_selector(F, ytr01, folds_local, cfg: ExperimentConfig):
    q = F.shape[1]
    grid = sorted({m for m in cfg.ttest_grid if 1 <= m <= q}) or [q]
    m = ttest_cv(F, ytr01, folds_local, grid, _cv_svm_trainer(cfg))
    stats = two_sample_t(Dataset.from_arrays(F, ytr01))
    idx = select_top_m(stats, m)
    return SelectorTransform(selector="TTEST", indices=idx), {"m": m}


def _fit_pca_selector(F, ytr01, folds_local, cfg: ExperimentConfig):
    n, q = F.shape
    min_train = min(n - len(val) for val in folds_local)
    r_cap = min(min_train - 1, q)
    grid = sorted({r for r in cfg.pca_grid if 1 <= r <= r_cap}) or [r_cap]
    r_max = grid[-1]
    trainer = _cv_svm_trainer(cfg)
    scores = np.zeros(len(grid))
    for val in folds_local:
        mask = np.ones(n, dtype=bool)
        mask[val] = False
        model = pca_fit(F[mask], r_max)
        scores_tr = pca_transform(model, F[mask])
        scores_val = pca_transform(model, F[val])
        for i, r in enumerate(grid):
            predict = trainer(scores_tr[:, :r], ytr01[mask])
            scores[i] += float(np.mean(predict(scores_val[:, :r]) == ytr01[val]))
    best = 0
    for i in range(1, len(grid)):
        if scores[i] > scores[best]:
            best = i
    r = grid[best]
    model = pca_fit(F, r)
    return SelectorTransform(selector="PCA", pca=model), {"r": r}


def fit_pipeline(ds: Dataset, spec: PipelineSpec, split: SplitIndices,
                 unlabeled_rows, cfg: ExperimentConfig, seed: int) -> PipelineFit:
    """Fit one pipeline on the training side of ``split``.

    Test rows are never consulted; unlabeled rows feed SAE pretraining only
    when the method is semi-supervised.
    """
    unlabeled_rows = np.asarray(unlabeled_rows, dtype=np.intp)
    chosen: dict = {}

    with _stage("standardize"):
        params = standardize_fit(ds, split.train)
        Xtr = (ds.features[split.train] - params.means) / params.stds
        ytr01 = ds.labels[split.train].astype(np.int64)

    with _stage("folds"):
        folds_global = kfold(split.train, ds, cfg.k, _derive(seed, _TAG_FOLDS))
        folds_local = _local_folds(split.train, folds_global)

    with _stage("method-features"):
        if spec.uses_sae:
            if spec.semi_supervised:
                X_extra = (ds.features[unlabeled_rows] - params.means) / params.stds
            else:
                X_extra = np.zeros((0, ds.p))
            sae_model, l2 = _fit_sae_stage(Xtr, ytr01, X_extra, folds_local, cfg, seed)
            method_map = MethodFeatures(method=spec.method, sae=sae_model)
            chosen["l2"] = l2
        else:
            method_map = MethodFeatures(method="LLF")
        Ftr = method_map.apply(Xtr)
        scaler = _fit_scaler(Ftr)
        Ftr = scaler.apply(Ftr)

    with _stage("selector"):
        if spec.selector == "NONE":
            selector_map = SelectorTransform(selector="NONE")
        elif spec.selector == "LASSO":
            selector_map, picked = _fit_lasso_selector(Ftr, ytr01, folds_local, cfg)
            chosen.update(picked)
        elif spec.selector == "TTEST":
            selector_map, picked = _fit_ttest_selector(Ftr, ytr01, folds_local, cfg)
            chosen.update(picked)
        else:
            selector_map, picked = _fit_pca_selector(Ftr, ytr01, folds_local, cfg)
            chosen.update(picked)
        Gtr = selector_map.apply(Ftr)

    with _stage("svm"):
        y_pm = 2.0 * ytr01.astype(float) - 1.0
        C = svm_cv(Gtr, y_pm, folds_local, cfg.c_grid, tol=1e-6, max_epochs=cfg.svm_cv_epochs)
        chosen["C"] = C
        model = svm_train(Gtr, y_pm, C, tol=1e-7, max_epochs=cfg.svm_epochs)

    return PipelineFit(spec=spec, standardization=params, method_map=method_map,
                       feature_scaler=scaler, selector_map=selector_map, svm=model,
                       chosen=chosen)


def run_pipeline(ds: Dataset, spec: PipelineSpec, split: SplitIndices,
                 unlabeled_rows, cfg: ExperimentConfig, seed: int) -> float:
    """Fit on the training side, return accuracy on the test side."""
    fit = fit_pipeline(ds, spec, split, unlabeled_rows, cfg, seed)
    with _stage("evaluate"):
        pred = fit.predict01(ds.features[split.test])
        return accuracy(pred, ds.labels[split.test].astype(np.int64))


@dataclass(frozen=True)
class CellStats:
    mean_pct: float
    std_pct: float
    repeats: int


@dataclass(frozen=True, eq=False)
class ResultsTable:
    """Per-cell accuracy fractions for every repeat, keyed by
    (method, selector)."""

    accuracies: dict

    def cells(self) -> dict:
        out = {}
        for key, accs in self.accuracies.items():
            a = np.asarray(accs, dtype=float)
            std = float(a.std(ddof=1)) if a.size > 1 else 0.0
            out[key] = CellStats(mean_pct=100.0 * float(a.mean()),
                                 std_pct=100.0 * std, repeats=int(a.size))
        return out


def _make_split(ds: Dataset, cfg: ExperimentConfig, seed: int) -> SplitIndices:
    if cfg.stratify:
        return stratified_split(ds, cfg.test_frac, seed)
    return random_split(ds, cfg.test_frac, seed)


def _repeat_worker(args) -> tuple[int, list[float]]:
    ds, specs, cfg, r = args
    seed = cfg.base_seed + r
    split = _make_split(ds, cfg, seed)
    unlabeled = ds.unlabeled_indices()
    return r, [run_pipeline(ds, spec, split, unlabeled, cfg, seed) for spec in specs]


def run_experiment(ds: Dataset, specs, cfg: ExperimentConfig) -> ResultsTable:
    """Repeat the split/fit/evaluate protocol cfg.repeats times.

    Every spec sees the same split within a repeat (paired comparison);
    repeat r uses seed base_seed + r. With cfg.jobs > 1 the repeats run in
    worker processes; results are identical for any jobs value.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("specs must be nonempty")
    tasks = [(ds, specs, cfg, r) for r in range(cfg.repeats)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_repeat_worker, tasks))
    else:
        outcomes = [_repeat_worker(t) for t in tasks]
    by_repeat = dict(outcomes)
    table: dict = {}
    for i, spec in enumerate(specs):
        key = (spec.method, spec.selector)
        table[key] = tuple(by_repeat[r][i] for r in range(cfg.repeats))
    return ResultsTable(accuracies=table)


def _grid(results: ResultsTable):
    cells = results.cells()
    present_selectors = [s for s in SELECTORS if any(k[1] == s for k in cells)]
    return cells, present_selectors


def render_table(results: ResultsTable, fmt: str = "text") -> str:
    """Rows are selectors, columns are feature methods, means rendered to
    one decimal in percent; unpopulated combinations stay blank. A std-dev
    block (an extension over the mean-only layout) follows the means."""
    if fmt not in ("text", "csv"):
        raise ValueError(f"unknown format {fmt!r}")
    cells, selectors = _grid(results)

    def cell_text(selector, method, attr):
        stats = cells.get((method, selector))
        return "" if stats is None else f"{getattr(stats, attr):.1f}"

    headers = [METHOD_LABELS[m] for m in METHODS]
    if fmt == "csv":
        lines = ["selector," + ",".join(headers)]
        for s in selectors:
            lines.append(",".join([SELECTOR_LABELS[s]] +
                                  [cell_text(s, m, "mean_pct") for m in METHODS]))
        lines.append("")
        lines.append("std dev (%) across repeats (extension)")
        lines.append("selector," + ",".join(headers))
        for s in selectors:
            lines.append(",".join([SELECTOR_LABELS[s]] +
                                  [cell_text(s, m, "std_pct") for m in METHODS]))
        return "\n".join(lines) + "\n"

    widths = [max(len(h), 13) for h in headers]
    name_w = max(len(SELECTOR_LABELS[s]) for s in SELECTORS)

    def text_row(name, vals):
        return (name.ljust(name_w) + "  "
                + "  ".join(v.rjust(w) for v, w in zip(vals, widths))).rstrip()

    lines = ["Mean accuracy (%) over repeats", ""]
    lines.append(text_row("", headers))
    for s in selectors:
        lines.append(text_row(SELECTOR_LABELS[s], [cell_text(s, m, "mean_pct") for m in METHODS]))
    lines.append("")
    lines.append("Std dev (%) across repeats (extension)")
    for s in selectors:
        lines.append(text_row(SELECTOR_LABELS[s], [cell_text(s, m, "std_pct") for m in METHODS]))
    return "\n".join(lines) + "\n"


def write_runs_csv(results: ResultsTable, path: str) -> None:
    """One row per (method, selector, repeat) plus mean/std summary rows."""
    lines = ["method,selector,repeat,accuracy"]
    for (method, selector), accs in results.accuracies.items():
        for r, a in enumerate(accs):
            lines.append(f"{method},{selector},{r},{a:.17g}")
    for (method, selector), accs in results.accuracies.items():
        a = np.asarray(accs)
        std = float(a.std(ddof=1)) if a.size > 1 else 0.0
        lines.append(f"{method},{selector},mean,{float(a.mean()):.17g}")
        lines.append(f"{method},{selector},std,{std:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_runs_csv(path: str) -> ResultsTable:
    """Rebuild a ResultsTable from write_runs_csv output."""
    per_cell: dict = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "method,selector,repeat,accuracy":
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            method, selector, rep, acc = line.strip().split(",")
            if rep in ("mean", "std"):
                continue
            per_cell.setdefault((method, selector), {})[int(rep)] = float(acc)
    table = {key: tuple(v[r] for r in sorted(v)) for key, v in per_cell.items()}
    return ResultsTable(accuracies=table)


_CONFIG_FIELDS = {f.name: f.type for f in fields(ExperimentConfig)}


def config_to_text(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(f"{x:g}" if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Flat key = value format; '#' starts a comment, lists are
    comma-separated. Unknown keys are rejected."""
    cfg = base or ExperimentConfig()
    updates: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        current = getattr(cfg, key)
        if isinstance(current, bool):
            if value.lower() not in ("true", "false"):
                raise ValueError(f"config line {lineno}: {key} must be true or false")
            updates[key] = value.lower() == "true"
        elif isinstance(current, int):
            updates[key] = int(value)
        elif isinstance(current, float):
            updates[key] = float(value)
        else:  # tuple-valued
            parts = [p for p in value.split(",") if p.strip()]
            elem = float if key in ("l2_grid", "c_grid") else int
            updates[key] = tuple(elem(p.strip()) for p in parts)
    return replace(cfg, **updates)
