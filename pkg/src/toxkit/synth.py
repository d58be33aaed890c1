"""Deterministic synthetic fixtures: a miniature 30-language corpus with
transcripts, wordlists, classifier scores, labels and embeddings.

Everything is derived from a single seed, so two generations with the
same parameters are byte-identical. The fixture exists for pipeline
exercises and demos; it contains no real toxic data, only placeholder
tokens.
"""

from __future__ import annotations

import os

import numpy as np

from .corpus import (
    DatasetManifest,
    EmbeddingRecord,
    ScoreRecord,
    Utterance,
    save_embeddings,
    save_manifest,
    save_scores,
)
from .languages import DEFAULT_LANGUAGES, DETOXIFY_LANGUAGES

BENIGN_VOCAB = (
    "river", "stone", "cloud", "window", "garden", "music", "walking",
    "yellow", "thought", "morning", "letter", "bridge", "quiet", "market",
)

# Placeholder "toxic" tokens, namespaced per language.
TOXIC_TOKENS = ("zorg", "blix", "quent", "vash")

LABELS_HEADER = "id\tlang\tlabel\tcategories"

CATEGORY_CYCLE = ("Profanity", "HateSpeech", "Pornographic", "ViolenceBullying")


def toxic_tokens_for(lang: str) -> list[str]:
    return [f"{t}{lang}" for t in TOXIC_TOKENS]


def generate_fixture(
    out_dir,
    n_per_lang: int = 60,
    embedding_dim: int = 16,
    seed: int = 7,
    languages=None,
):
    """Write manifest.tsv, scores.tsv, labels.tsv, embeddings.mtxe and a
    wordlists/ directory under out_dir. Returns the manifest."""
    languages = sorted(languages or DEFAULT_LANGUAGES)
    rng = np.random.default_rng(seed)
    os.makedirs(out_dir, exist_ok=True)
    wl_dir = os.path.join(out_dir, "wordlists")
    os.makedirs(wl_dir, exist_ok=True)

    utterances = []
    scores: list[ScoreRecord] = []
    embeddings = []
    label_rows = []
    toxic_direction = rng.normal(size=embedding_dim)
    toxic_direction /= np.linalg.norm(toxic_direction)

    for lang in languages:
        tokens = toxic_tokens_for(lang)
        mode = "substring" if lang == "cmn" else "token"
        with open(os.path.join(wl_dir, f"{lang}.txt"), "w", encoding="utf-8") as fh:
            fh.write(f"!match: {mode}\n")
            fh.write("# synthetic placeholder tokens\n")
            for t in tokens:
                fh.write(t + "\n")
        for i in range(n_per_lang):
            uid = f"{lang}-{i:04d}"
            # ~30% lexically toxic, ~10% contextually toxic (no token)
            r = rng.random()
            lexical = r < 0.30
            contextual = 0.30 <= r < 0.40
            toxic = lexical or contextual
            words = list(rng.choice(BENIGN_VOCAB, size=5))
            if lexical:
                words[int(rng.integers(len(words)))] = tokens[i % len(tokens)]
            transcript = " ".join(words)
            duration = float(np.round(rng.uniform(1.0, 9.5), 2))
            utterances.append(
                Utterance(
                    id=uid,
                    lang=lang,
                    modality="speech",
                    duration_s=duration,
                    transcript=transcript,
                    source="synthetic",
                    parallel_eng_id=None if lang == "eng" else f"eng-{i:04d}",
                )
            )
            # trainable-classifier style score, correlated with toxicity
            base = rng.beta(6, 2) if toxic else rng.beta(2, 8)
            side = "native" if lang in DETOXIFY_LANGUAGES else "english_parallel"
            scores.append(
                ScoreRecord(
                    utterance_id=uid,
                    provider="detoxify",
                    category="overall",
                    score=float(np.round(base, 6)),
                    score_side=side,
                )
            )
            vec = rng.normal(scale=0.6, size=embedding_dim)
            if toxic:
                vec = vec + 1.4 * toxic_direction
            embeddings.append(
                EmbeddingRecord(utterance_id=uid, vector=vec.astype(np.float32))
            )
            cats = [CATEGORY_CYCLE[i % len(CATEGORY_CYCLE)]] if toxic else []
            label_rows.append((uid, lang, int(toxic), ",".join(cats)))

    manifest = DatasetManifest(utterances=tuple(utterances))
    save_manifest(manifest, os.path.join(out_dir, "manifest.tsv"))
    save_scores(scores, os.path.join(out_dir, "scores.tsv"))
    save_embeddings(embeddings, os.path.join(out_dir, "embeddings.mtxe"))
    with open(os.path.join(out_dir, "labels.tsv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(LABELS_HEADER + "\n")
        for uid, lang, label, cats in label_rows:
            fh.write(f"{uid}\t{lang}\t{label}\t{cats}\n")
    return manifest


def load_labels(path):
    """Read a labels TSV into (labels, langs, categories) maps."""
    from .errors import FormatError

    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    if not lines or lines[0] != LABELS_HEADER:
        raise FormatError(f"{path}: bad labels header (expected {LABELS_HEADER!r})")
    labels: dict[str, int] = {}
    langs: dict[str, str] = {}
    categories: dict[str, set] = {}
    for row_no, ln in enumerate(lines[1:], start=2):
        cols = ln.split("\t")
        if len(cols) != 4:
            raise FormatError(f"{path}: row {row_no}: expected 4 columns")
        uid, lang, label, cats = cols
        if label not in ("0", "1"):
            raise FormatError(f"{path}: row {row_no}: label must be 0 or 1")
        labels[uid] = int(label)
        langs[uid] = lang
        categories[uid] = set(c for c in cats.split(",") if c)
    return labels, langs, categories
