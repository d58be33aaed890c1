"""Command-line entry point orchestrating the whole pipeline.

Subcommands: select-primary, select-hp, split, train, score, eval, corr,
wordlist-analyze, quantiles, annotate-serve, report.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error. Stochastic
subcommands require an explicit --seed. ``--config`` points at a
key=value file; precedence is CLI flag > config file > default. Every
run writes a run manifest (resolved config, seed, input checksums,
version) next to its outputs, so reruns are reproducible and auditable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .classifier import (
    LabeledEmbedding,
    MlpConfig,
    TrainConfig,
    ZS_LANGUAGES,
    derive_seed,
    fnv1a64,
    load_model,
    persist_model,
    score_batch,
    train,
)
from .corpus import load_embeddings, load_manifest, load_scores, save_scores
from .errors import ToxkitError, ValidationError
from .evaluation import (
    LanguageResult,
    build_report,
    emit_report,
    category_breakdown,
    pearson_matrix,
    prf_at_threshold,
    quantile_report,
    recall_at_fixed_precision,
    roc_auc,
)
from .languages import LanguageRegistry
from .selection import (
    HpSelectionConfig,
    PrimarySelectionConfig,
    SplitConfig,
    load_selection,
    load_splits,
    make_splits,
    preselect_hp,
    preselect_primary,
    save_selection,
    save_splits,
    save_stage_distribution,
)
from .synth import generate_fixture, load_labels
from .wordlist import detect, load_wordlist, token_report

STOCHASTIC_COMMANDS = {"select-primary", "select-hp", "split", "train"}


class CliParser(argparse.ArgumentParser):
    """argparse, but usage errors exit 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_config_file(path) -> dict:
    """Minimal key = value config format; '#' starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{line_no}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value.strip("\"'")
    return out


def _coerce(value, like):
    if like is None or isinstance(like, str):
        return value
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes")
    return type(like)(value)


class Resolved:
    """flag > config file > default resolution, with a record of the
    effective values for the run manifest."""

    def __init__(self, args, defaults: dict):
        self.config = _read_config_file(args.config) if getattr(args, "config", None) else {}
        self.args = args
        self.defaults = defaults
        self.effective = {}

    def get(self, key):
        flag = getattr(self.args, key, None)
        if flag is not None:
            value = flag
        elif key in self.config:
            value = _coerce(self.config[key], self.defaults.get(key))
        else:
            value = self.defaults.get(key)
        self.effective[key] = value
        return value


def _checksum(path) -> str:
    with open(path, "rb") as fh:
        return f"{fnv1a64(fh.read()):016x}"


def _write_run_manifest(out_path, subcommand, resolved: Resolved, inputs):
    record = {
        "tool": "toxkit",
        "version": __version__,
        "subcommand": subcommand,
        "config": {
            k: (sorted(v) if isinstance(v, (set, frozenset)) else v)
            for k, v in sorted(resolved.effective.items())
        },
        "inputs": {str(p): _checksum(p) for p in inputs if p},
    }
    if os.path.isdir(out_path):
        path = os.path.join(out_path, "run-manifest.json")
    else:
        path = str(out_path) + ".run.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _registry(args) -> LanguageRegistry:
    return LanguageRegistry(allow_unregistered=bool(getattr(args, "allow_unregistered_lang", False)))


def _load_wordlists(wordlist_dir, langs):
    lists = {}
    for lang in sorted(langs):
        path = os.path.join(wordlist_dir, f"{lang}.txt")
        if not os.path.exists(path):
            raise ValidationError(f"no wordlist for language {lang!r} under {wordlist_dir}")
        lists[lang] = load_wordlist(path, lang=lang)
    return lists


def _detect_all(manifest, wordlists):
    return {
        u.id: detect(u.transcript or "", wordlists[u.lang], utterance_id=u.id)
        for u in manifest
    }


# ---------------------------------------------------------------- commands


def cmd_select_primary(args):
    r = Resolved(
        args,
        {
            "duration_min": 2.0,
            "duration_max": 8.0,
            "clean_threshold": 0.5,
            "clean_quota": 0,
        },
    )
    manifest = load_manifest(args.manifest, registry=_registry(args))
    scores = load_scores(args.scores)
    config = PrimarySelectionConfig(
        duration_range=(r.get("duration_min"), r.get("duration_max")),
        clean_threshold=r.get("clean_threshold"),
        clean_quota=r.get("clean_quota"),
        seed=args.seed,
    )
    outcome = preselect_primary(manifest, scores, config)
    save_selection(outcome, args.out)
    for note in outcome.shortfalls:
        print(f"shortfall: {note}", file=sys.stderr)
    per_lang = {}
    lang_of = {u.id: u.lang for u in manifest}
    for it in outcome.items:
        per_lang.setdefault(lang_of[it.utterance_id], Counter())[it.stage] += 1
    save_stage_distribution(per_lang, os.path.splitext(args.out)[0] + "_stages.csv")
    _write_run_manifest(args.out, "select-primary", r, [args.manifest, args.scores])
    return 0


def cmd_select_hp(args):
    r = Resolved(
        args,
        {
            "detox_threshold": 0.8,
            "per_token_cap": 200,
            "etox_stage_cap": 1000,
            "toxic_target": 2500,
            "total_target": 4000,
        },
    )
    manifest = load_manifest(args.manifest, registry=_registry(args))
    scores = load_scores(args.scores)
    langs = sorted({u.lang for u in manifest})
    wordlists = _load_wordlists(args.wordlists, langs)

    by_lang = {lang: [u for u in manifest if u.lang == lang] for lang in langs}
    score_by_id: dict[str, list] = {}
    for rec in scores:
        score_by_id.setdefault(rec.utterance_id, []).append(rec)

    def run_one(lang):
        from .corpus import DatasetManifest

        sub = DatasetManifest(utterances=tuple(by_lang[lang]))
        detections = _detect_all(sub, wordlists)
        sub_scores = [rec for u in sub for rec in score_by_id.get(u.id, [])]
        config = HpSelectionConfig(
            detox_threshold=r.get("detox_threshold"),
            per_token_cap=r.get("per_token_cap"),
            etox_stage_cap=r.get("etox_stage_cap"),
            toxic_target=r.get("toxic_target"),
            total_target=r.get("total_target"),
            seed=derive_seed(args.seed, f"select-hp/{lang}"),
        )
        return lang, preselect_hp(sub, detections, sub_scores, config)

    with ThreadPoolExecutor(max_workers=args.jobs or os.cpu_count()) as pool:
        outcomes = dict(pool.map(run_one, langs))

    all_items = []
    per_lang = {}
    for lang in langs:
        outcome = outcomes[lang]
        all_items.extend(outcome.items)
        per_lang[lang] = outcome.stage_counts()
        for note in outcome.shortfalls:
            print(f"shortfall [{lang}]: {note}", file=sys.stderr)
    from .selection import SelectionOutcome

    save_selection(SelectionOutcome(items=tuple(all_items)), args.out)
    save_stage_distribution(per_lang, os.path.splitext(args.out)[0] + "_stages.csv")
    _write_run_manifest(args.out, "select-hp", r, [args.manifest, args.scores])
    return 0


def cmd_split(args):
    r = Resolved(args, {"ratios": "0.70,0.05,0.10,0.15"})
    ratios = tuple(float(x) for x in r.get("ratios").split(","))
    labels, langs, categories = load_labels(args.labels)
    ids = sorted(labels)
    if args.selection:
        selected = load_selection(args.selection).ids()
        ids = [i for i in ids if i in selected]
    items = [
        (
            uid,
            (
                langs[uid],
                labels[uid],
                ",".join(sorted(categories[uid])),
            ),
        )
        for uid in ids
    ]
    assignment = make_splits(items, SplitConfig(ratios=ratios, seed=args.seed))
    save_splits(assignment, args.out)
    _write_run_manifest(
        args.out, "split", r, [args.labels] + ([args.selection] if args.selection else [])
    )
    return 0


def cmd_train(args):
    r = Resolved(
        args,
        {
            "hidden_dims": "512,128",
            "learning_rate": 0.001,
            "batch_size": 256,
            "max_epochs": 100,
            "patience": 10,
            "positive_weight": 1.0,
            "preset": "supervised",
            "name": "toxicity-head",
        },
    )
    embeddings = load_embeddings(args.embeddings)
    if not embeddings:
        raise ValidationError("no embeddings to train on")
    labels, langs, _ = load_labels(args.labels)
    splits = load_splits(args.splits)
    manifest = load_manifest(args.manifest, registry=_registry(args)) if args.manifest else None
    modality = {u.id: u.modality for u in manifest} if manifest else {}

    def bucket(subset):
        items = []
        for rec in embeddings:
            uid = rec.utterance_id
            if splits.get(uid) != subset or uid not in labels:
                continue
            items.append(
                LabeledEmbedding(
                    utterance_id=uid,
                    lang=langs[uid],
                    modality=modality.get(uid, "speech"),
                    vector=rec.vector,
                    label=labels[uid],
                )
            )
        return items

    preset = r.get("preset")
    language_filter = ZS_LANGUAGES if preset == "zs" else None
    dim = len(embeddings[0].vector)
    hidden = tuple(int(x) for x in str(r.get("hidden_dims")).split(","))
    mlp_config = MlpConfig(input_dim=dim, hidden_dims=hidden, seed=args.seed)
    train_config = TrainConfig(
        learning_rate=r.get("learning_rate"),
        batch_size=r.get("batch_size"),
        max_epochs=r.get("max_epochs"),
        early_stop_patience=r.get("patience"),
        language_filter=language_filter,
        positive_weight=r.get("positive_weight"),
        seed=args.seed,
    )
    model, report = train(
        bucket("train"),
        bucket("dev"),
        mlp_config,
        train_config,
        metadata={"name": r.get("name"), "preset": preset},
    )
    persist_model(model, args.out)
    print(
        f"trained {r.get('name')}: stopped at epoch {report.stopped_epoch}, "
        f"best dev AUC {report.best_dev_auc:.4f}"
    )
    _write_run_manifest(
        args.out,
        "train",
        r,
        [args.embeddings, args.labels, args.splits] + ([args.manifest] if args.manifest else []),
    )
    return 0


def cmd_score(args):
    r = Resolved(args, {})
    model = load_model(args.model)
    embeddings = load_embeddings(args.embeddings, expected_dim=model.config.input_dim)
    save_scores(score_batch(model, embeddings), args.out)
    _write_run_manifest(args.out, "score", r, [args.model, args.embeddings])
    return 0


def _labeled_sets(scores, labels, langs):
    """Group overall scores into per-(provider, language) parallel arrays."""
    grouped: dict[tuple[str, str], list[tuple[str, float]]] = {}
    for rec in scores:
        if rec.category not in (None, "overall"):
            continue
        uid = rec.utterance_id
        if uid not in labels:
            continue
        grouped.setdefault((rec.provider, langs[uid]), []).append((uid, rec.score))
    return grouped


def cmd_eval(args):
    r = Resolved(args, {"floor": 0.3, "baseline_provider": "etox", "threshold": 0.5})
    score_records = []
    for path in args.scores:
        score_records.extend(load_scores(path))
    labels, langs, categories = load_labels(args.labels)
    grouped = _labeled_sets(score_records, labels, langs)
    if not grouped:
        raise ValidationError("no scores overlap the labeled ids")
    floor = r.get("floor")
    threshold = r.get("threshold")
    baseline_provider = r.get("baseline_provider")

    # baseline precision per language, at the fixed operating threshold
    baseline_precision: dict[str, float] = {}
    for (provider, lang), pairs in grouped.items():
        if provider != baseline_provider:
            continue
        y = np.array([labels[uid] for uid, _ in pairs])
        s = np.array([sc for _, sc in pairs])
        if len(set(y.tolist())) < 2:
            continue
        baseline_precision[lang] = prf_at_threshold(s, y, threshold).precision

    keys = sorted(grouped)

    def eval_one(key):
        provider, lang = key
        pairs = grouped[key]
        uids = [uid for uid, _ in pairs]
        s = np.array([sc for _, sc in pairs])
        y = np.array([labels[uid] for uid in uids])
        if len(set(y.tolist())) < 2:
            return None  # AUC undefined; skipped with a note
        from .evaluation import LabeledScores

        data = LabeledScores(
            utterance_ids=tuple(uids), scores=s, labels=y, provider=provider, language=lang
        )
        base = baseline_precision.get(lang, 0.0)
        fp = recall_at_fixed_precision(s, y, base, floor)
        cats = {uid: categories.get(uid, set()) for uid in uids}
        breakdown = category_breakdown(data, cats, base, floor)
        return LanguageResult(
            language=lang,
            provider=provider,
            auc=roc_auc(s, y),
            prf=prf_at_threshold(s, y, threshold),
            fixed_precision=fp,
            category_recalls=breakdown.recalls,
            size=len(y),
            n_toxic=int(y.sum()),
        )

    with ThreadPoolExecutor(max_workers=args.jobs or os.cpu_count()) as pool:
        results = list(pool.map(eval_one, keys))
    skipped = [k for k, res in zip(keys, results) if res is None]
    for provider, lang in skipped:
        print(f"note: single-class labels for {provider}/{lang}; skipped", file=sys.stderr)
    results = [res for res in results if res is not None]
    report = build_report(results, baseline_provider=baseline_provider)
    os.makedirs(args.out, exist_ok=True)
    emit_report(report, args.out)
    _write_run_manifest(args.out, "eval", r, list(args.scores) + [args.labels])
    return 0


def cmd_corr(args):
    r = Resolved(args, {})
    records = []
    for path in args.scores:
        records.extend(load_scores(path))
    by_provider: dict[str, dict[str, float]] = {}
    provider_order = []
    for rec in records:
        if rec.category not in (None, "overall"):
            continue
        if rec.provider not in by_provider:
            provider_order.append(rec.provider)
        by_provider.setdefault(rec.provider, {})[rec.utterance_id] = rec.score
    if len(provider_order) < 2:
        raise ValidationError("correlation needs at least two providers")
    shared = sorted(set.intersection(*(set(m) for m in by_provider.values())))
    if not shared:
        raise ValidationError("providers share no utterance ids")
    vectors = {p: np.array([by_provider[p][uid] for uid in shared]) for p in provider_order}
    providers, mat = pearson_matrix(vectors)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("provider," + ",".join(providers) + "\n")
        for i, p in enumerate(providers):
            fh.write(p + "," + ",".join(f"{v:.6g}" for v in mat[i]) + "\n")
    _write_run_manifest(args.out, "corr", r, list(args.scores))
    return 0


def cmd_wordlist_analyze(args):
    r = Resolved(args, {})
    manifest = load_manifest(args.manifest, registry=_registry(args))
    labels, _, _ = load_labels(args.labels)
    wordlists = _load_wordlists(args.wordlists, {u.lang for u in manifest})
    detections = _detect_all(manifest, wordlists)
    verdicts = {uid: bool(lbl) for uid, lbl in labels.items()}
    missing = [uid for uid in detections if uid not in verdicts]
    if missing:
        raise ValidationError(f"{len(missing)} detections lack labels (first: {missing[0]!r})")
    report = token_report(detections.values(), verdicts)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("token,output_count,true_positives,precision,recall_share\n")
        for t in report.tokens:
            fh.write(
                f"{t.token},{t.output_count},{t.true_positive_count},"
                f"{t.precision:.6g},{t.recall_share:.6g}\n"
            )
    with open(str(args.out) + ".summary.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "distinct_tokens": len(report.tokens),
                "total_toxic": report.total_toxic,
                "deduplicated_recall_share": round(report.deduplicated_recall_share, 6),
                "raw_recall_share_sum": round(report.raw_recall_share_sum, 6),
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    _write_run_manifest(args.out, "wordlist-analyze", r, [args.manifest, args.labels])
    return 0


def cmd_quantiles(args):
    r = Resolved(args, {"provider": "detoxify", "bins": 10})
    records = load_scores(args.scores)
    labels, _, _ = load_labels(args.labels)
    provider = r.get("provider")
    pairs = [
        (rec.utterance_id, rec.score)
        for rec in records
        if rec.provider == provider
        and rec.category in (None, "overall")
        and rec.utterance_id in labels
    ]
    if not pairs:
        raise ValidationError(f"no labeled scores for provider {provider!r}")
    s = np.array([sc for _, sc in pairs])
    y = np.array([labels[uid] for uid, _ in pairs])
    q = quantile_report(s, y, r.get("bins"))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("quantile,count,toxic_fraction\n")
        for i, (c, f) in enumerate(zip(q.bin_counts, q.toxic_fractions), start=1):
            fh.write(f"{i},{c},{f:.6g}\n")
    with open(str(args.out) + ".summary.json", "w", encoding="utf-8") as fh:
        json.dump({"pearson": round(q.pearson, 6), "provider": provider}, fh, sort_keys=True)
        fh.write("\n")
    _write_run_manifest(args.out, "quantiles", r, [args.scores, args.labels])
    return 0


def cmd_annotate_serve(args):
    import uvicorn

    from .annotation import Campaign, create_app

    manifest = load_manifest(args.manifest, registry=_registry(args))
    campaign = Campaign.from_manifest(args.campaign_id, manifest, args.log)
    app = create_app({args.campaign_id: campaign}, media_dir=args.media_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


FIGURES = {
    "categories": ("fig1_category_counts.csv", "labels", "annotate-serve/export or labels"),
    "stages": ("fig2_selection_stages.csv", "stages", "select-hp"),
    "quantiles": ("fig4_quantile_curve.csv", "quantiles", "quantiles"),
    "category-recall": ("fig5_category_recall.csv", "eval_dir", "eval"),
    "token-scatter": ("fig6_token_scatter.csv", "token_report", "wordlist-analyze"),
}


def cmd_report(args):
    r = Resolved(args, {})
    os.makedirs(args.out, exist_ok=True)
    inputs = {
        "labels": args.labels,
        "stages": args.stages,
        "quantiles": args.quantiles,
        "eval_dir": args.eval_dir,
        "token_report": args.token_report,
    }
    wanted = args.figures.split(",") if args.figures else [
        name for name, (_, key, _) in FIGURES.items() if inputs[key]
    ]
    if not wanted:
        raise ValidationError("no figure inputs supplied; nothing to report")
    used_inputs = []
    for name in wanted:
        if name not in FIGURES:
            raise ValidationError(f"unknown figure {name!r} (choose from {sorted(FIGURES)})")
        out_name, key, needed_cmd = FIGURES[name]
        src = inputs[key]
        if not src:
            raise ValidationError(
                f"figure {name!r} needs output of the `{needed_cmd}` subcommand"
            )
        out_path = os.path.join(args.out, out_name)
        if name == "categories":
            labels, langs, categories = load_labels(src)
            counts: dict[tuple[str, str], int] = Counter()
            for uid, lbl in labels.items():
                if lbl:
                    for cat in categories.get(uid, ()):  # toxic items only
                        counts[(langs[uid], cat)] += 1
            with open(out_path, "w", encoding="utf-8", newline="") as fh:
                fh.write("language,category,count\n")
                for (lang, cat), n in sorted(counts.items()):
                    fh.write(f"{lang},{cat},{n}\n")
            used_inputs.append(src)
        elif name == "category-recall":
            src_file = os.path.join(src, "category_recall.csv")
            if not os.path.exists(src_file):
                raise ValidationError(
                    "figure 'category-recall' needs output of the `eval` subcommand"
                )
            with open(src_file, encoding="utf-8") as fh_in, open(
                out_path, "w", encoding="utf-8", newline=""
            ) as fh_out:
                fh_out.write(fh_in.read())
            used_inputs.append(src_file)
        elif name == "token-scatter":
            with open(src, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
            with open(out_path, "w", encoding="utf-8", newline="") as fh:
                fh.write("token,output_count,precision\n")
                for ln in lines[1:]:
                    token, out_n, _tp, prec, _rs = ln.split(",")
                    fh.write(f"{token},{out_n},{prec}\n")
            used_inputs.append(src)
        else:  # stages, quantiles: pass the series through verbatim
            with open(src, encoding="utf-8") as fh_in, open(
                out_path, "w", encoding="utf-8", newline=""
            ) as fh_out:
                fh_out.write(fh_in.read())
            used_inputs.append(src)
    _write_run_manifest(args.out, "report", r, used_inputs)
    return 0


def cmd_make_fixture(args):
    generate_fixture(
        args.out,
        n_per_lang=args.n_per_lang,
        embedding_dim=args.embedding_dim,
        seed=args.seed,
    )
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> CliParser:
    parser = CliParser(prog="toxkit", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="PRNG seed (required for stochastic subcommands)")
        p.add_argument("--jobs", type=int, default=None, help="worker pool size")
        p.add_argument(
            "--allow-unregistered-lang",
            action="store_true",
            help="accept language codes outside the built-in registry",
        )
        return p

    p = add("select-primary", cmd_select_primary, "duration screen + category/clean sampling")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--duration-min", type=float, dest="duration_min")
    p.add_argument("--duration-max", type=float, dest="duration_max")
    p.add_argument("--clean-threshold", type=float, dest="clean_threshold")
    p.add_argument("--clean-quota", type=int, dest="clean_quota")

    p = add("select-hp", cmd_select_hp, "3-stage toxic selection with random fill, per language")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--wordlists", required=True, help="directory of <lang>.txt files")
    p.add_argument("--out", required=True)
    p.add_argument("--detox-threshold", type=float, dest="detox_threshold")
    p.add_argument("--per-token-cap", type=int, dest="per_token_cap")
    p.add_argument("--etox-stage-cap", type=int, dest="etox_stage_cap")
    p.add_argument("--toxic-target", type=int, dest="toxic_target")
    p.add_argument("--total-target", type=int, dest="total_target")

    p = add("split", cmd_split, "stratified train/dev/devtest/test split")
    p.add_argument("--labels", required=True)
    p.add_argument("--selection", help="restrict to ids in a selection TSV")
    p.add_argument("--out", required=True)
    p.add_argument("--ratios", help="four comma-separated ratios summing to 1")

    p = add("train", cmd_train, "train the feed-forward classifier head")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--splits", required=True)
    p.add_argument("--manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=["zs", "supervised"])
    p.add_argument("--hidden-dims", dest="hidden_dims")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--patience", type=int)
    p.add_argument("--positive-weight", type=float, dest="positive_weight")
    p.add_argument("--name")

    p = add("score", cmd_score, "score embeddings with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)

    p = add("eval", cmd_eval, "full per-language metric suite")
    p.add_argument("--scores", required=True, nargs="+")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--baseline-provider", dest="baseline_provider")
    p.add_argument("--floor", type=float)
    p.add_argument("--threshold", type=float)

    p = add("corr", cmd_corr, "Pearson matrix across providers")
    p.add_argument("--scores", required=True, nargs="+")
    p.add_argument("--out", required=True)

    p = add("wordlist-analyze", cmd_wordlist_analyze, "per-token precision/output analysis")
    p.add_argument("--manifest", required=True)
    p.add_argument("--wordlists", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)

    p = add("quantiles", cmd_quantiles, "toxic fraction per score quantile")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--provider")
    p.add_argument("--bins", type=int)

    p = add("annotate-serve", cmd_annotate_serve, "run the annotation HTTP service")
    p.add_argument("--manifest", required=True)
    p.add_argument("--log", required=True, help="append-only label log (JSON lines)")
    p.add_argument("--campaign-id", default="default")
    p.add_argument("--media-dir")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8111)

    p = add("report", cmd_report, "emit plot-ready data series per figure")
    p.add_argument("--out", required=True)
    p.add_argument("--labels", help="labels TSV for category counts")
    p.add_argument("--stages", help="stage distribution CSV from select-hp/select-primary")
    p.add_argument("--quantiles", help="quantile curve CSV from the quantiles subcommand")
    p.add_argument("--eval-dir", dest="eval_dir", help="output directory of the eval subcommand")
    p.add_argument("--token-report", dest="token_report", help="CSV from wordlist-analyze")
    p.add_argument("--figures", help="comma-separated figure names to force")

    p = add("make-fixture", cmd_make_fixture, "generate the synthetic multilingual fixture")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-lang", type=int, default=60, dest="n_per_lang")
    p.add_argument("--embedding-dim", type=int, default=16, dest="embedding_dim")

    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    if args.command in STOCHASTIC_COMMANDS | {"make-fixture"} and args.seed is None:
        print(f"toxkit {args.command}: error: --seed is required", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"toxkit {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except ToxkitError as exc:
        print(f"toxkit {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"toxkit {args.command}: I/O error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
