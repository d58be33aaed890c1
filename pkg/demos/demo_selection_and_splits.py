"""Candidate selection and stratified splitting on the synthetic fixture.

Runs the 3-stage toxic-enrichment selection (wordlist+classifier
intersection, wordlist-only with per-token caps, classifier-only) and
then apportions items into train/dev/devtest/test with the
largest-remainder rule, per stratum.
"""

import tempfile
from collections import Counter
from pathlib import Path

from toxkit.corpus import DatasetManifest, load_manifest, load_scores
from toxkit.selection import HpSelectionConfig, SplitConfig, apportion, make_splits, preselect_hp
from toxkit.synth import generate_fixture, load_labels
from toxkit.wordlist import detect, load_wordlist


def main():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        generate_fixture(out, n_per_lang=40, embedding_dim=8, seed=7,
                         languages=["eng", "ita", "cmn"])
        manifest = load_manifest(out / "manifest.tsv")
        scores = load_scores(out / "scores.tsv")

        for lang in ("eng", "ita", "cmn"):
            wl = load_wordlist(out / "wordlists" / f"{lang}.txt", lang=lang)
            sub = DatasetManifest(
                utterances=tuple(u for u in manifest if u.lang == lang)
            )
            detections = {
                u.id: detect(u.transcript or "", wl, utterance_id=u.id) for u in sub
            }
            sub_scores = [s for s in scores if s.utterance_id in {u.id for u in sub}]
            outcome = preselect_hp(
                sub, detections, sub_scores,
                HpSelectionConfig(per_token_cap=5, etox_stage_cap=10,
                                  toxic_target=12, total_target=20, seed=3),
            )
            print(f"{lang}: {dict(outcome.stage_counts())}")

        # exact largest-remainder apportionment
        sizes = apportion(19_453, (0.70, 0.05, 0.10, 0.15))
        print(f"\n19,453 items at 70/5/10/15 -> {sizes}")

        labels, langs, categories = load_labels(out / "labels.tsv")
        items = [(uid, (langs[uid], labels[uid])) for uid in sorted(labels)]
        assignment = make_splits(items, SplitConfig(seed=11))
        print("split sizes:", dict(Counter(assignment.values())))


if __name__ == "__main__":
    main()
