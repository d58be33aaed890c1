"""Data curation: primary-language pre-selection, the 3-stage
high-priority-language selection, and stratified split generation.

Every selector is a deterministic function of its inputs plus the config
seed. Selection output TSV: ``id  stage  justification  score``; split
output TSV: ``id  subset``.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .corpus import DatasetManifest, filter_by_duration
from .errors import ValidationError

DETOXIFY_CATEGORIES = ("severe", "obscene", "identity", "insult", "threat", "sexual")

SPLIT_SUBSETS = ("train", "dev", "devtest", "test")


@dataclass(frozen=True)
class SelectedItem:
    utterance_id: str
    stage: str  # intersection | etox_only | detoxify | random_fill | toxic | clean
    justification: str = ""
    score: float = 0.0


@dataclass(frozen=True)
class SelectionOutcome:
    items: tuple[SelectedItem, ...]
    shortfalls: tuple[str, ...] = ()

    def __post_init__(self):
        ids = [it.utterance_id for it in self.items]
        if len(ids) != len(set(ids)):
            raise ValidationError("selection contains duplicate ids")

    def ids(self) -> set[str]:
        return {it.utterance_id for it in self.items}

    def stage_counts(self) -> dict[str, int]:
        return dict(Counter(it.stage for it in self.items))


@dataclass(frozen=True)
class PrimarySelectionConfig:
    duration_range: tuple[float, float] = (2.0, 8.0)
    category_thresholds: dict = field(
        default_factory=lambda: {c: 0.5 for c in DETOXIFY_CATEGORIES}
    )
    clean_threshold: float = 0.5
    category_quotas: dict = field(default_factory=dict)
    clean_quota: int = 0
    seed: int = 0

    def __post_init__(self):
        for c, t in self.category_thresholds.items():
            if not 0.0 <= t <= 1.0:
                raise ValidationError(f"threshold for {c} outside [0, 1]")
        if any(q < 0 for q in self.category_quotas.values()) or self.clean_quota < 0:
            raise ValidationError("quotas must be nonnegative")


def preselect_primary(
    manifest: DatasetManifest, scores, config: PrimarySelectionConfig
) -> SelectionOutcome:
    """Duration screen, then per-category toxic sampling plus an
    all-scores-below-threshold clean pool. Pools are disjoint; quota
    shortfalls are flagged, not fatal."""
    manifest = filter_by_duration(manifest, *config.duration_range)
    by_item: dict[str, dict[str, float]] = defaultdict(dict)
    for rec in scores:
        if rec.provider == "detoxify" and rec.category in DETOXIFY_CATEGORIES:
            by_item[rec.utterance_id][rec.category] = rec.score

    toxic_pool: dict[str, list[tuple[str, float]]] = defaultdict(list)
    clean_pool: list[str] = []
    for u in manifest:
        cat_scores = by_item.get(u.id, {})
        qualifying = [
            (c, s)
            for c, s in cat_scores.items()
            if s >= config.category_thresholds.get(c, 0.5)
        ]
        if qualifying:
            # argmax over qualifying categories, ties by category order
            cat, s = max(qualifying, key=lambda cs: (cs[1], -DETOXIFY_CATEGORIES.index(cs[0])))
            toxic_pool[cat].append((u.id, s))
        elif cat_scores and all(s < config.clean_threshold for s in cat_scores.values()):
            clean_pool.append(u.id)

    rng = np.random.default_rng(config.seed)
    items: list[SelectedItem] = []
    shortfalls: list[str] = []
    for cat in DETOXIFY_CATEGORIES:
        pool = sorted(toxic_pool.get(cat, []))
        quota = config.category_quotas.get(cat, len(pool))
        if quota > len(pool):
            shortfalls.append(f"toxic:{cat}: quota {quota} exceeds pool {len(pool)}")
            quota = len(pool)
        chosen = rng.permutation(len(pool))[:quota]
        for i in sorted(chosen):
            uid, s = pool[i]
            items.append(SelectedItem(uid, stage="toxic", justification=cat, score=s))
    clean_pool.sort()
    quota = config.clean_quota or len(clean_pool)
    if quota > len(clean_pool):
        shortfalls.append(f"clean: quota {quota} exceeds pool {len(clean_pool)}")
        quota = len(clean_pool)
    for i in sorted(rng.permutation(len(clean_pool))[:quota]):
        items.append(SelectedItem(clean_pool[i], stage="clean"))
    return SelectionOutcome(items=tuple(items), shortfalls=tuple(shortfalls))


@dataclass(frozen=True)
class HpSelectionConfig:
    detox_threshold: float = 0.8
    per_token_cap: int = 200
    etox_stage_cap: int = 1000
    toxic_target: int = 2500
    total_target: int = 4000
    native_detoxify_langs: frozenset = frozenset({"ita", "por", "tur", "rus", "fra"})
    seed: int = 0

    def __post_init__(self):
        if self.toxic_target > self.total_target:
            raise ValidationError("toxic_target must not exceed total_target")
        if min(self.per_token_cap, self.etox_stage_cap, self.toxic_target, self.total_target) < 0:
            raise ValidationError("caps must be nonnegative")


def _detox_score(uid: str, lang: str, native: dict, parallel: dict, config) -> float | None:
    if lang in config.native_detoxify_langs and uid in native:
        return native[uid]
    return parallel.get(uid, native.get(uid))


def preselect_hp(
    manifest: DatasetManifest,
    etox_detections: dict,
    detoxify_scores,
    config: HpSelectionConfig,
) -> SelectionOutcome:
    """Three-stage toxic selection plus random fill.

    Stage 1 (intersection): wordlist-positive and trainable-classifier
    score strictly above the threshold; never truncated.
    Stage 2 (etox_only): remaining wordlist-positive items, descending
    classifier score then id, at most per_token_cap per matched token
    and etox_stage_cap in total.
    Stage 3 (detoxify): remaining scored items by descending score until
    toxic_target is reached.
    Random fill with the seeded PRNG up to total_target.
    """
    native: dict[str, float] = {}
    parallel: dict[str, float] = {}
    for rec in detoxify_scores:
        if rec.provider != "detoxify":
            continue
        if rec.category not in (None, "overall"):
            continue
        if rec.score_side == "native":
            native[rec.utterance_id] = rec.score
        else:
            parallel[rec.utterance_id] = rec.score

    missing = [u.id for u in manifest if u.id not in etox_detections]
    if missing:
        raise ValidationError(
            f"{len(missing)} utterances lack a wordlist detection record "
            f"(first: {missing[0]!r})"
        )

    score_of = {
        u.id: _detox_score(u.id, u.lang, native, parallel, config) for u in manifest
    }
    items: list[SelectedItem] = []
    selected: set[str] = set()
    shortfalls: list[str] = []

    etox_pos = [u.id for u in manifest if etox_detections[u.id].is_toxic]

    # stage 1: intersection, no truncation
    for uid in sorted(etox_pos, key=lambda i: (-(score_of[i] or 0.0), i)):
        s = score_of[uid]
        if s is not None and s > config.detox_threshold:
            items.append(
                SelectedItem(uid, stage="intersection", justification="etox+detoxify", score=s)
            )
            selected.add(uid)

    def toxic_count():
        return len(items)

    # stage 2: capped wordlist-only additions
    token_counts: Counter = Counter()
    stage2_total = 0
    for uid in sorted(etox_pos, key=lambda i: (-(score_of[i] or 0.0), i)):
        if uid in selected or toxic_count() >= config.toxic_target:
            continue
        if stage2_total >= config.etox_stage_cap:
            break
        tokens = set(etox_detections[uid].matched_tokens)
        if any(token_counts[t] >= config.per_token_cap for t in tokens):
            continue
        for t in tokens:
            token_counts[t] += 1
        stage2_total += 1
        selected.add(uid)
        items.append(
            SelectedItem(
                uid,
                stage="etox_only",
                justification=",".join(sorted(tokens)),
                score=score_of[uid] or 0.0,
            )
        )

    # stage 3: classifier-scored additions up to the toxic target
    scored_rest = [
        (uid, s)
        for uid, s in score_of.items()
        if uid not in selected and s is not None
    ]
    for uid, s in sorted(scored_rest, key=lambda t: (-t[1], t[0])):
        if toxic_count() >= config.toxic_target:
            break
        selected.add(uid)
        items.append(SelectedItem(uid, stage="detoxify", justification="detoxify", score=s))

    # random fill to the total target
    rest = sorted(u.id for u in manifest if u.id not in selected)
    rng = np.random.default_rng(config.seed)
    fill_n = min(config.total_target - len(items), len(rest))
    if fill_n > 0:
        for i in rng.permutation(len(rest))[:fill_n]:
            items.append(SelectedItem(rest[i], stage="random_fill"))
    if len(items) < config.total_target:
        shortfalls.append(
            f"candidate pool {len(manifest)} below total target {config.total_target}"
        )
    return SelectionOutcome(items=tuple(items), shortfalls=tuple(shortfalls))


@dataclass(frozen=True)
class SplitConfig:
    ratios: tuple[float, float, float, float] = (0.70, 0.05, 0.10, 0.15)
    seed: int = 0

    def __post_init__(self):
        if any(r < 0 for r in self.ratios):
            raise ValidationError("ratios must be nonnegative")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValidationError(f"ratios sum to {sum(self.ratios)}, expected 1")


def apportion(n: int, ratios) -> list[int]:
    """Largest-remainder apportionment of n items over the ratios;
    remainder ties go to the earlier subset."""
    exact = [n * r for r in ratios]
    floors = [int(e) for e in exact]
    remainder = n - sum(floors)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - floors[i]), i))
    for i in order[:remainder]:
        floors[i] += 1
    return floors


def make_splits(items_with_strata, config: SplitConfig) -> dict[str, str]:
    """Assign each item to train/dev/devtest/test.

    ``items_with_strata`` is an iterable of (item_id, stratum_key).
    Within each stratum items are shuffled with a stratum-derived seed
    and apportioned by largest remainder, so the four subsets partition
    the input deterministically.
    """
    strata: dict = defaultdict(list)
    for item_id, key in items_with_strata:
        strata[key].append(item_id)
    assignment: dict[str, str] = {}
    for key in sorted(strata, key=repr):
        ids = sorted(strata[key])
        # per-stratum seed keeps assignment independent of other strata
        h = 0xCBF29CE484222325
        for b in repr(key).encode("utf-8"):
            h = ((h ^ b) * 0x100000001B3) & ((1 << 64) - 1)
        rng = np.random.default_rng((config.seed ^ h) & ((1 << 64) - 1))
        order = rng.permutation(len(ids))
        sizes = apportion(len(ids), config.ratios)
        pos = 0
        for subset, size in zip(SPLIT_SUBSETS, sizes):
            for i in order[pos : pos + size]:
                assignment[ids[i]] = subset
            pos += size
    return assignment


def save_selection(outcome: SelectionOutcome, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id\tstage\tjustification\tscore\n")
        for it in outcome.items:
            fh.write(f"{it.utterance_id}\t{it.stage}\t{it.justification}\t{it.score:.8g}\n")


def load_selection(path) -> SelectionOutcome:
    from .errors import FormatError

    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    if not lines or lines[0] != "id\tstage\tjustification\tscore":
        raise FormatError(f"{path}: bad selection header")
    items = []
    for ln in lines[1:]:
        uid, stage, just, score = ln.split("\t")
        items.append(SelectedItem(uid, stage=stage, justification=just, score=float(score)))
    return SelectionOutcome(items=tuple(items))


def save_splits(assignment: dict[str, str], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id\tsubset\n")
        for item_id in sorted(assignment):
            fh.write(f"{item_id}\t{assignment[item_id]}\n")


def load_splits(path) -> dict[str, str]:
    from .errors import FormatError

    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    if not lines or lines[0] != "id\tsubset":
        raise FormatError(f"{path}: bad split header")
    out = {}
    for ln in lines[1:]:
        uid, subset = ln.split("\t")
        if subset not in SPLIT_SUBSETS:
            raise FormatError(f"{path}: unknown subset {subset!r}")
        out[uid] = subset
    return out


def save_stage_distribution(per_language: dict[str, dict[str, int]], path) -> None:
    """Per-language stage counts as CSV for plotting."""
    stages = ("intersection", "etox_only", "detoxify", "random_fill", "toxic", "clean")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("language," + ",".join(stages) + "\n")
        for lang in sorted(per_language):
            counts = per_language[lang]
            fh.write(lang + "," + ",".join(str(counts.get(s, 0)) for s in stages) + "\n")
