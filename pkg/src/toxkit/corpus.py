"""Data model and ingestion for utterances, classifier scores and embeddings.

On-disk formats:

* Manifest TSV, UTF-8, header row exactly
  ``id  lang  modality  duration_s  transcript  audio_path  source  parallel_eng_id``
  (tab separated). Empty string means absent. Literal tabs/newlines inside
  transcripts are escaped as ``\\t`` / ``\\n``.
* Scores TSV, header ``id  provider  category  score  score_side``.
* Embedding file (MTXE): magic ``MTXE``, u8 version = 1, u32 LE dim,
  u64 LE count, then per record u16 LE id byte-length, UTF-8 id bytes,
  dim x f32 LE.

All values are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FormatError, ValidationError
from .languages import LanguageRegistry

MANIFEST_COLUMNS = (
    "id",
    "lang",
    "modality",
    "duration_s",
    "transcript",
    "audio_path",
    "source",
    "parallel_eng_id",
)

SCORE_COLUMNS = ("id", "provider", "category", "score", "score_side")

SCORE_CATEGORIES = ("severe", "obscene", "identity", "insult", "threat", "sexual", "overall")

MTXE_MAGIC = b"MTXE"
MTXE_VERSION = 1


@dataclass(frozen=True)
class Utterance:
    id: str
    lang: str
    modality: str  # "speech" | "text"
    duration_s: float | None = None
    transcript: str | None = None
    audio_path: str | None = None
    source: str = ""
    parallel_eng_id: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("utterance id must be nonempty")
        if self.modality not in ("speech", "text"):
            raise ValidationError(f"unknown modality {self.modality!r} for {self.id!r}")
        if self.duration_s is not None and self.duration_s < 0:
            raise ValidationError(f"negative duration for {self.id!r}")


@dataclass(frozen=True)
class EmbeddingRecord:
    utterance_id: str
    vector: np.ndarray
    encoder_id: str = ""
    modality: str = "speech"


@dataclass(frozen=True)
class ScoreRecord:
    utterance_id: str
    provider: str
    score: float
    category: str | None = None
    score_side: str = "native"  # "native" | "english_parallel"

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(
                f"score {self.score} for {self.utterance_id!r}/{self.provider} outside [0, 1]"
            )
        if self.category is not None and self.category not in SCORE_CATEGORIES:
            raise ValidationError(f"unknown score category {self.category!r}")
        if self.score_side not in ("native", "english_parallel"):
            raise ValidationError(f"unknown score_side {self.score_side!r}")


@dataclass(frozen=True)
class DatasetManifest:
    utterances: tuple[Utterance, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [u.id for u in self.utterances]
        if len(ids) != len(set(ids)):
            seen, dup = set(), None
            for i in ids:
                if i in seen:
                    dup = i
                    break
                seen.add(i)
            raise ValidationError(f"duplicate utterance id {dup!r} in manifest")

    def __len__(self):
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def by_id(self) -> dict[str, Utterance]:
        return {u.id: u for u in self.utterances}


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unescape(value: str) -> str:
    out = []
    it = iter(range(len(value)))
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "\\" and i + 1 < len(value):
            nxt = value[i + 1]
            if nxt == "t":
                out.append("\t")
                i += 2
                continue
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def load_manifest(
    path,
    registry: LanguageRegistry | None = None,
) -> DatasetManifest:
    """Parse a manifest TSV into a DatasetManifest, preserving row order."""
    registry = registry or LanguageRegistry()
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(f"{path}: empty manifest file")
    header = tuple(lines[0].split("\t"))
    if header != MANIFEST_COLUMNS:
        missing = set(MANIFEST_COLUMNS) - set(header)
        extra = set(header) - set(MANIFEST_COLUMNS)
        raise FormatError(
            f"{path}: bad manifest header (missing columns {sorted(missing)}, "
            f"extra columns {sorted(extra)})"
        )
    utterances = []
    seen = set()
    for row_no, line in enumerate(lines[1:], start=2):
        cols = line.split("\t")
        if len(cols) != len(MANIFEST_COLUMNS):
            raise FormatError(
                f"{path}: row {row_no}: expected {len(MANIFEST_COLUMNS)} columns, got {len(cols)}"
            )
        rec = dict(zip(MANIFEST_COLUMNS, cols))
        uid = rec["id"]
        if not uid:
            raise FormatError(f"{path}: row {row_no}: empty id")
        if uid in seen:
            raise FormatError(f"{path}: row {row_no}: duplicate id {uid!r}")
        seen.add(uid)
        if not registry.check(rec["lang"]):
            raise FormatError(
                f"{path}: row {row_no}: unregistered language code {rec['lang']!r}"
            )
        duration = None
        if rec["duration_s"]:
            try:
                duration = float(rec["duration_s"])
            except ValueError:
                raise FormatError(
                    f"{path}: row {row_no}: column duration_s: "
                    f"non-numeric value {rec['duration_s']!r}"
                ) from None
        try:
            utterances.append(
                Utterance(
                    id=uid,
                    lang=rec["lang"],
                    modality=rec["modality"],
                    duration_s=duration,
                    transcript=_unescape(rec["transcript"]) or None,
                    audio_path=rec["audio_path"] or None,
                    source=rec["source"],
                    parallel_eng_id=rec["parallel_eng_id"] or None,
                )
            )
        except ValidationError as exc:
            raise FormatError(f"{path}: row {row_no}: {exc}") from exc
    return DatasetManifest(
        utterances=tuple(utterances),
        provenance={"path": str(path), "rows": len(utterances)},
    )


def save_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(MANIFEST_COLUMNS) + "\n")
        for u in manifest:
            duration = "" if u.duration_s is None else repr(u.duration_s)
            fh.write(
                "\t".join(
                    (
                        u.id,
                        u.lang,
                        u.modality,
                        duration,
                        _escape(u.transcript or ""),
                        u.audio_path or "",
                        u.source,
                        u.parallel_eng_id or "",
                    )
                )
                + "\n"
            )


def load_scores(path) -> list[ScoreRecord]:
    """Parse a scores TSV; (id, provider, category) must be unique."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln != ""]
    if not lines:
        raise FormatError(f"{path}: empty scores file")
    header = tuple(lines[0].split("\t"))
    if header != SCORE_COLUMNS:
        raise FormatError(f"{path}: bad scores header {header!r}")
    records = []
    seen = set()
    for row_no, line in enumerate(lines[1:], start=2):
        cols = line.split("\t")
        if len(cols) != len(SCORE_COLUMNS):
            raise FormatError(f"{path}: row {row_no}: expected 5 columns, got {len(cols)}")
        uid, provider, category, score_str, side = cols
        key = (uid, provider, category or None)
        if key in seen:
            raise FormatError(f"{path}: row {row_no}: duplicate score key {key!r}")
        seen.add(key)
        try:
            score = float(score_str)
        except ValueError:
            raise FormatError(
                f"{path}: row {row_no}: column score: non-numeric value {score_str!r}"
            ) from None
        try:
            records.append(
                ScoreRecord(
                    utterance_id=uid,
                    provider=provider,
                    category=category or None,
                    score=score,
                    score_side=side or "native",
                )
            )
        except ValidationError as exc:
            raise FormatError(f"{path}: row {row_no}: {exc}") from exc
    return records


def save_scores(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(SCORE_COLUMNS) + "\n")
        for r in records:
            fh.write(
                f"{r.utterance_id}\t{r.provider}\t{r.category or ''}\t"
                f"{r.score:.8g}\t{r.score_side}\n"
            )


def filter_by_duration(
    manifest: DatasetManifest, min_s: float, max_s: float
) -> DatasetManifest:
    """Keep utterances with min_s <= duration_s <= max_s (bounds inclusive).

    Utterances without a duration (text items) pass through unchanged; the
    filter targets audio screening only.
    """
    if min_s > max_s:
        raise ValidationError(f"min_s {min_s} > max_s {max_s}")
    kept = tuple(
        u
        for u in manifest
        if u.duration_s is None or min_s <= u.duration_s <= max_s
    )
    return replace(manifest, utterances=kept)


def save_embeddings(records, path, dim: int | None = None) -> None:
    """Write EmbeddingRecords in the MTXE binary layout."""
    records = list(records)
    if dim is None:
        if not records:
            raise ValidationError("cannot infer dimension from an empty record set")
        dim = len(records[0].vector)
    with open(path, "wb") as fh:
        fh.write(MTXE_MAGIC)
        fh.write(struct.pack("<BIQ", MTXE_VERSION, dim, len(records)))
        for rec in records:
            vec = np.asarray(rec.vector, dtype="<f4")
            if vec.shape != (dim,):
                raise ValidationError(
                    f"vector for {rec.utterance_id!r} has length {vec.shape}, expected {dim}"
                )
            id_bytes = rec.utterance_id.encode("utf-8")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(vec.tobytes())


def load_embeddings(path, expected_dim: int | None = None) -> list[EmbeddingRecord]:
    """Read an MTXE file; vectors come back float32, all entries finite."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MTXE_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 17:
        raise FormatError(f"{path}: truncated header")
    version, dim, count = struct.unpack_from("<BIQ", data, 4)
    if version != MTXE_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if expected_dim is not None and dim != expected_dim:
        raise FormatError(f"{path}: dimension {dim} does not match expected {expected_dim}")
    offset = 17
    records = []
    for i in range(count):
        if offset + 2 > len(data):
            raise FormatError(f"{path}: truncated at record {i}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + 4 * dim > len(data):
            raise FormatError(f"{path}: truncated payload at record {i}")
        uid = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += 4 * dim
        if not np.all(np.isfinite(vec)):
            raise FormatError(f"{path}: non-finite entry in vector for {uid!r}")
        records.append(EmbeddingRecord(utterance_id=uid, vector=vec))
    return records
