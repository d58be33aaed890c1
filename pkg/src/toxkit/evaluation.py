"""Metrics and reports: ROC-AUC, P/R/F1, recall at fixed precision,
Pearson correlation matrices, category breakdowns, quantile curves and
aggregate rows.

The prediction rule everywhere is score >= threshold (ties predicted
positive). Undefined precision (no predicted positives) is reported as 0
with an explicit flag rather than omitted.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import ValidationError
from .languages import DETOXIFY_LANGUAGES


def _fmt(x: float) -> str:
    """Floats rendered with 6 significant digits for stable file output."""
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return str(x)
    return f"{x:.6g}"


@dataclass(frozen=True)
class LabeledScores:
    utterance_ids: tuple[str, ...]
    scores: np.ndarray
    labels: np.ndarray
    provider: str = ""
    language: str = ""

    def __post_init__(self):
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=np.float64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        if len(self.utterance_ids) != len(self.scores) or len(self.scores) != len(self.labels):
            raise ValidationError("utterance_ids, scores and labels must be parallel")
        if len(self.scores) == 0:
            raise ValidationError("empty labeled score set")
        if not set(np.unique(self.labels)).issubset({0, 1}):
            raise ValidationError("labels must be 0/1")

    def __len__(self):
        return len(self.scores)


def roc_auc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUC with average ranks for ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs both classes present")
    ranks = rankdata(scores, method="average")
    return float((ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class PrfResult:
    precision: float
    recall: float
    f1: float
    no_predictions: bool = False  # precision denominator was zero


def prf_at_threshold(scores, labels, threshold: float) -> PrfResult:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pred = scores >= threshold
    tp = int(np.sum(pred & (labels == 1)))
    fp = int(np.sum(pred & (labels == 0)))
    fn = int(np.sum(~pred & (labels == 1)))
    no_pred = (tp + fp) == 0
    precision = 0.0 if no_pred else tp / (tp + fp)
    recall = 0.0 if (tp + fn) == 0 else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return PrfResult(precision=precision, recall=recall, f1=f1, no_predictions=no_pred)


@dataclass(frozen=True)
class FixedPrecisionResult:
    target_precision: float
    chosen_threshold: float
    precision_at_threshold: float
    recall: float
    reachable: bool


def recall_at_fixed_precision(
    scores, labels, baseline_precision: float, floor: float = 0.3
) -> FixedPrecisionResult:
    """Best recall among thresholds whose precision meets
    max(baseline_precision, floor); ties resolved toward the lower
    threshold. Candidate thresholds are the distinct scores plus +inf.
    """
    if not 0.0 <= floor <= 1.0:
        raise ValidationError(f"floor {floor} outside [0, 1]")
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    target = max(baseline_precision, floor)
    best = None
    for thr in sorted(set(scores.tolist())) + [math.inf]:
        r = prf_at_threshold(scores, labels, thr)
        if r.no_predictions or r.precision < target:
            continue
        if best is None or r.recall > best[1].recall:
            best = (thr, r)
    if best is None:
        return FixedPrecisionResult(
            target_precision=target,
            chosen_threshold=math.inf,
            precision_at_threshold=0.0,
            recall=0.0,
            reachable=False,
        )
    thr, r = best
    return FixedPrecisionResult(
        target_precision=target,
        chosen_threshold=thr,
        precision_at_threshold=r.precision,
        recall=r.recall,
        reachable=True,
    )


def pearson_r(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        raise ValidationError("zero-variance vector in Pearson correlation")
    return float(xc @ yc) / denom


def pearson_matrix(score_sets: dict[str, np.ndarray]) -> tuple[list[str], np.ndarray]:
    """Symmetric Pearson matrix over id-aligned provider score vectors.

    Returns (provider order, matrix). Zero-variance providers are
    reported together in one error.
    """
    providers = list(score_sets)
    if len(providers) < 2:
        raise ValidationError("need at least two providers")
    vectors = [np.asarray(score_sets[p], dtype=np.float64) for p in providers]
    n = len(vectors[0])
    if any(len(v) != n for v in vectors):
        raise ValidationError("providers must cover the same shared id set")
    degenerate = [p for p, v in zip(providers, vectors) if np.ptp(v) == 0.0]
    if degenerate:
        raise ValidationError(f"zero-variance score vectors for providers {degenerate}")
    k = len(providers)
    mat = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            mat[i, j] = mat[j, i] = pearson_r(vectors[i], vectors[j])
    return providers, mat


@dataclass(frozen=True)
class CategoryBreakdown:
    threshold: float
    recalls: dict[str, float]
    recall_variance: float
    omitted: tuple[str, ...] = ()  # empty categories


TOXICITY_CATEGORIES = ("Profanity", "HateSpeech", "Pornographic", "ViolenceBullying")


def category_breakdown(
    data: LabeledScores,
    categories: dict[str, set[str]],
    fixed_precision_target: float,
    floor: float = 0.3,
) -> CategoryBreakdown:
    """Per-category recall at one global fixed-precision threshold."""
    fp = recall_at_fixed_precision(data.scores, data.labels, fixed_precision_target, floor)
    thr = fp.chosen_threshold
    recalls = {}
    omitted = []
    for cat in TOXICITY_CATEGORIES:
        idx = [
            i
            for i, uid in enumerate(data.utterance_ids)
            if data.labels[i] == 1 and cat in categories.get(uid, set())
        ]
        if not idx:
            omitted.append(cat)
            continue
        hits = sum(1 for i in idx if data.scores[i] >= thr)
        recalls[cat] = hits / len(idx)
    values = list(recalls.values())
    variance = float(np.var(values)) if values else 0.0
    return CategoryBreakdown(
        threshold=thr, recalls=recalls, recall_variance=variance, omitted=tuple(omitted)
    )


@dataclass(frozen=True)
class QuantileReport:
    bin_counts: tuple[int, ...]
    toxic_fractions: tuple[float, ...]
    pearson: float


def quantile_report(scores, verdicts, n_quantiles: int) -> QuantileReport:
    """Equal-count score bins (remainder to lower bins) with toxic
    fraction per bin, plus Pearson r(score, verdict)."""
    scores = np.asarray(scores, dtype=np.float64)
    verdicts = np.asarray(verdicts, dtype=np.float64)
    if n_quantiles < 2:
        raise ValidationError("need at least 2 quantiles")
    n = len(scores)
    if n < n_quantiles:
        raise ValidationError(f"{n} items cannot fill {n_quantiles} quantiles")
    order = np.argsort(scores, kind="stable")
    base, rem = divmod(n, n_quantiles)
    counts = [base + 1 if i < rem else base for i in range(n_quantiles)]
    fractions = []
    start = 0
    for c in counts:
        chunk = verdicts[order[start : start + c]]
        fractions.append(float(chunk.mean()))
        start += c
    return QuantileReport(
        bin_counts=tuple(counts),
        toxic_fractions=tuple(fractions),
        pearson=pearson_r(scores, verdicts),
    )


def f1_improvement_pct(baseline_f1: float, improved_f1: float) -> float:
    """Relative F1 change in percent, e.g. 0.19 -> 0.38 is +100%."""
    if baseline_f1 <= 0:
        raise ValidationError("baseline F1 must be positive")
    return (improved_f1 - baseline_f1) / baseline_f1 * 100.0


@dataclass
class LanguageResult:
    language: str
    provider: str
    auc: float
    prf: PrfResult
    fixed_precision: FixedPrecisionResult
    category_recalls: dict[str, float] = field(default_factory=dict)
    size: int = 0
    n_toxic: int = 0


@dataclass
class EvalReport:
    results: list[LanguageResult]
    aggregates: dict[str, dict[str, dict[str, float]]] = field(default_factory=dict)
    correlation: tuple[list[str], np.ndarray] | None = None
    quantiles: QuantileReport | None = None
    avg7_languages: frozenset = DETOXIFY_LANGUAGES
    baseline_provider: str | None = None
    f1_improvements: dict[str, float] = field(default_factory=dict)


def _macro(rows: list[LanguageResult]) -> dict[str, float]:
    return {
        "auc": float(np.mean([r.auc for r in rows])),
        "precision": float(np.mean([r.prf.precision for r in rows])),
        "recall": float(np.mean([r.prf.recall for r in rows])),
        "f1": float(np.mean([r.prf.f1 for r in rows])),
        "recall_at_fixed_precision": float(np.mean([r.fixed_precision.recall for r in rows])),
    }


def build_report(
    per_language: list[LanguageResult],
    correlation=None,
    quantiles=None,
    avg7_languages=DETOXIFY_LANGUAGES,
    baseline_provider: str | None = None,
) -> EvalReport:
    """Attach avg / avg7 macro-aggregate rows per provider, plus the
    relative F1 change of every provider against the baseline."""
    if not per_language:
        raise ValidationError("no per-language results to report")
    report = EvalReport(
        results=sorted(per_language, key=lambda r: (r.provider, r.language)),
        correlation=correlation,
        quantiles=quantiles,
        avg7_languages=frozenset(avg7_languages),
        baseline_provider=baseline_provider,
    )
    providers = sorted({r.provider for r in per_language})
    for provider in providers:
        rows = [r for r in report.results if r.provider == provider]
        aggs = {"avg": _macro(rows)}
        rows7 = [r for r in rows if r.language in report.avg7_languages]
        if rows7:
            aggs["avg7"] = _macro(rows7)
        report.aggregates[provider] = aggs
    if baseline_provider is not None and baseline_provider in report.aggregates:
        base_f1 = report.aggregates[baseline_provider]["avg"]["f1"]
        if base_f1 > 0:
            for provider in providers:
                if provider == baseline_provider:
                    continue
                report.f1_improvements[provider] = f1_improvement_pct(
                    base_f1, report.aggregates[provider]["avg"]["f1"]
                )
    return report


def emit_report(report: EvalReport, out_dir) -> list[str]:
    """Write the CSV tables plus a versioned JSON dump; deterministic
    row order (language ascending, aggregates last) and byte-stable."""
    if not report.results:
        raise ValidationError("empty report")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def w(name, lines):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
        written.append(path)

    auc_lines = ["provider,language,size,n_toxic,auc"]
    prf_lines = [
        "provider,language,precision,recall,f1,no_predictions,"
        "fixed_precision_target,fixed_precision_threshold,recall_at_fixed_precision,reachable"
    ]
    for r in report.results:
        auc_lines.append(
            f"{r.provider},{r.language},{r.size},{r.n_toxic},{_fmt(r.auc)}"
        )
        prf_lines.append(
            f"{r.provider},{r.language},{_fmt(r.prf.precision)},{_fmt(r.prf.recall)},"
            f"{_fmt(r.prf.f1)},{int(r.prf.no_predictions)},"
            f"{_fmt(r.fixed_precision.target_precision)},"
            f"{_fmt(r.fixed_precision.chosen_threshold)},"
            f"{_fmt(r.fixed_precision.recall)},{int(r.fixed_precision.reachable)}"
        )
    for provider in sorted(report.aggregates):
        for agg_name in ("avg7", "avg"):
            agg = report.aggregates[provider].get(agg_name)
            if agg is None:
                continue
            auc_lines.append(f"{provider},{agg_name},,,{_fmt(agg['auc'])}")
            prf_lines.append(
                f"{provider},{agg_name},{_fmt(agg['precision'])},{_fmt(agg['recall'])},"
                f"{_fmt(agg['f1'])},,,,{_fmt(agg['recall_at_fixed_precision'])},"
            )
    w("auc.csv", auc_lines)
    w("recall.csv", prf_lines)

    if report.f1_improvements:
        imp_lines = ["provider,baseline,f1_improvement_pct"]
        for provider in sorted(report.f1_improvements):
            imp_lines.append(
                f"{provider},{report.baseline_provider},"
                f"{_fmt(report.f1_improvements[provider])}"
            )
        w("f1_improvement.csv", imp_lines)

    cat_lines = ["provider,language,category,recall"]
    for r in report.results:
        for cat in sorted(r.category_recalls):
            cat_lines.append(
                f"{r.provider},{r.language},{cat},{_fmt(r.category_recalls[cat])}"
            )
    w("category_recall.csv", cat_lines)

    if report.correlation is not None:
        providers, mat = report.correlation
        corr_lines = ["provider," + ",".join(providers)]
        for i, p in enumerate(providers):
            corr_lines.append(p + "," + ",".join(_fmt(v) for v in mat[i]))
        w("correlation.csv", corr_lines)

    if report.quantiles is not None:
        q_lines = ["quantile,count,toxic_fraction"]
        for i, (c, f) in enumerate(
            zip(report.quantiles.bin_counts, report.quantiles.toxic_fractions), start=1
        ):
            q_lines.append(f"{i},{c},{_fmt(f)}")
        w("quantiles.csv", q_lines)

    doc = {
        "schema": 1,
        "results": [
            {
                "provider": r.provider,
                "language": r.language,
                "size": r.size,
                "n_toxic": r.n_toxic,
                "auc": float(_fmt(r.auc)),
                "precision": float(_fmt(r.prf.precision)),
                "recall": float(_fmt(r.prf.recall)),
                "f1": float(_fmt(r.prf.f1)),
                "no_predictions": r.prf.no_predictions,
                "fixed_precision": {
                    "target": float(_fmt(r.fixed_precision.target_precision)),
                    "threshold": None
                    if math.isinf(r.fixed_precision.chosen_threshold)
                    else float(_fmt(r.fixed_precision.chosen_threshold)),
                    "recall": float(_fmt(r.fixed_precision.recall)),
                    "reachable": r.fixed_precision.reachable,
                },
                "category_recalls": {
                    k: float(_fmt(v)) for k, v in sorted(r.category_recalls.items())
                },
            }
            for r in report.results
        ],
        "aggregates": {
            p: {a: {k: float(_fmt(v)) for k, v in m.items()} for a, m in aggs.items()}
            for p, aggs in sorted(report.aggregates.items())
        },
    }
    if report.f1_improvements:
        doc["f1_improvements"] = {
            "baseline": report.baseline_provider,
            "pct": {k: float(_fmt(v)) for k, v in sorted(report.f1_improvements.items())},
        }
    if report.correlation is not None:
        providers, mat = report.correlation
        doc["correlation"] = {"providers": providers, "matrix": [[float(_fmt(v)) for v in row] for row in mat]}
    if report.quantiles is not None:
        doc["quantiles"] = {
            "counts": list(report.quantiles.bin_counts),
            "toxic_fractions": [float(_fmt(f)) for f in report.quantiles.toxic_fractions],
            "pearson": float(_fmt(report.quantiles.pearson)),
        }
    path = os.path.join(out_dir, "report.json")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written
