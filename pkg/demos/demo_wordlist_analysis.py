"""Lexical detection and per-token precision analysis.

Shows why wordlist matching alone is a weak classifier: it flags
"school sucks!" (non-toxic in context) and misses contextual toxicity
with no trigger word. The token report quantifies exactly that.
"""

from toxkit.wordlist import LexicalDetection, WordList, detect, token_report

wordlist = WordList(
    lang="eng",
    entries=frozenset({"sucks", "trash", "total trash"}),
    match_mode="token",
)

SAMPLES = {
    "s1": ("school sucks!", False),            # lexical false positive
    "s2": ("you are total trash", True),       # multi-word entry
    "s3": ("what a lovely morning", False),
    "s4": ("I know where you live...", True),  # contextual, no trigger word
    "s5": ("this movie sucks so bad", True),
}


def main():
    detections = []
    labels = {}
    for uid, (text, toxic) in SAMPLES.items():
        d = detect(text, wordlist, utterance_id=uid)
        detections.append(d)
        labels[uid] = toxic
        flag = "TOXIC" if d.is_toxic else "clean"
        print(f"{uid} [{flag:5}] {text!r} -> matched {list(d.matched_tokens)}")

    report = token_report(detections, labels)
    print("\nper-token precision (descending):")
    for t in report.tokens:
        print(f"  {t.token!r}: output {t.output_count}, "
              f"precision {t.precision:.2f}, recall share {t.recall_share:.2f}")
    print(f"deduplicated recall share: {report.deduplicated_recall_share:.2f}")


if __name__ == "__main__":
    main()
