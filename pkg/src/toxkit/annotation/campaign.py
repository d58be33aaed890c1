"""Annotation campaign state: task queue, questionnaire validation and
an append-only JSON-lines label log.

The questionnaire is two-step: Q1 is the verdict (Toxic / NotToxic /
CannotSay); a Toxic verdict requires Q2 to be answered with at least one
toxic span or one perlocutionary effect. Non-toxic verdicts must leave
categories, spans and effects empty.

Campaign state is fully replayable from the log; resubmissions by the
same (task, annotator) supersede earlier entries (last write wins).
"""

from __future__ import annotations

import json
import os
import threading
import time
from collections import Counter
from dataclasses import dataclass

from ..errors import ValidationError
from ..evaluation import TOXICITY_CATEGORIES

VERDICTS = ("Toxic", "NotToxic", "CannotSay")
EFFECTS = ("RaisedVoice", "AggressiveTone", "VeiledThreat")


@dataclass
class AnnotationTask:
    task_id: str
    utterance_id: str
    lang: str
    audio_path: str | None = None
    transcript: str | None = None
    status: str = "pending"  # pending -> assigned -> done
    assigned_to: str | None = None
    lease_expires: float = 0.0

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "utterance_id": self.utterance_id,
            "lang": self.lang,
            "audio_path": self.audio_path,
            "transcript": self.transcript,
            "status": self.status,
        }


@dataclass(frozen=True)
class AnnotationResponse:
    task_id: str
    annotator_id: str
    verdict: str
    categories: tuple[str, ...] = ()
    toxic_spans: tuple[str, ...] = ()
    effects: tuple[str, ...] = ()
    timestamp: float = 0.0

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValidationError(f"unknown verdict {self.verdict!r}")
        bad_effects = set(self.effects) - set(EFFECTS)
        if bad_effects:
            raise ValidationError(
                f"effects outside the allowed options: {sorted(bad_effects)}"
            )
        bad_cats = set(self.categories) - set(TOXICITY_CATEGORIES)
        if bad_cats:
            raise ValidationError(f"unknown categories: {sorted(bad_cats)}")
        if self.verdict == "Toxic":
            if not self.toxic_spans and not self.effects:
                raise ValidationError(
                    "Q2 unanswered: a Toxic verdict needs at least one "
                    "toxic span or one perlocutionary effect"
                )
        else:
            if self.categories or self.toxic_spans or self.effects:
                raise ValidationError(
                    "categories, spans and effects must be empty unless the verdict is Toxic"
                )

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "annotator_id": self.annotator_id,
            "verdict": self.verdict,
            "categories": list(self.categories),
            "toxic_spans": list(self.toxic_spans),
            "effects": list(self.effects),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AnnotationResponse":
        return cls(
            task_id=obj["task_id"],
            annotator_id=obj["annotator_id"],
            verdict=obj["verdict"],
            categories=tuple(obj.get("categories", ())),
            toxic_spans=tuple(obj.get("toxic_spans", ())),
            effects=tuple(obj.get("effects", ())),
            timestamp=obj.get("timestamp", 0.0),
        )


class Campaign:
    """One labeling campaign; thread-safe, durably logged."""

    def __init__(
        self,
        campaign_id: str,
        tasks: list[AnnotationTask],
        log_path,
        lease_seconds: float = 30 * 60,
        clock=time.time,
    ):
        self.campaign_id = campaign_id
        self.tasks = {t.task_id: t for t in sorted(tasks, key=lambda t: t.task_id)}
        if len(self.tasks) != len(tasks):
            raise ValidationError("duplicate task ids in campaign")
        self.log_path = log_path
        self.lease_seconds = lease_seconds
        self.clock = clock
        self._lock = threading.Lock()
        self._seq = 0
        # latest response per (task, annotator); replay applies supersession
        self._responses: dict[tuple[str, str], AnnotationResponse] = {}
        if os.path.exists(log_path):
            self._replay()

    @classmethod
    def from_manifest(cls, campaign_id, manifest, log_path, **kwargs) -> "Campaign":
        tasks = [
            AnnotationTask(
                task_id=f"t-{u.id}",
                utterance_id=u.id,
                lang=u.lang,
                audio_path=u.audio_path,
                transcript=u.transcript,
            )
            for u in manifest
        ]
        return cls(campaign_id, tasks, log_path, **kwargs)

    def _replay(self) -> None:
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                resp = AnnotationResponse.from_json(obj)
                self._seq = max(self._seq, obj.get("seq", 0))
                self._apply(resp)

    def _apply(self, resp: AnnotationResponse) -> None:
        self._responses[(resp.task_id, resp.annotator_id)] = resp
        task = self.tasks.get(resp.task_id)
        if task is not None:
            task.status = "done"
            task.assigned_to = None

    def _append(self, resp: AnnotationResponse) -> None:
        self._seq += 1
        record = resp.to_json()
        record["seq"] = self._seq
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def next_task(self, annotator_id: str) -> AnnotationTask | None:
        """Lowest-id pending task not yet answered by this annotator;
        idempotent while the annotator holds a live lease."""
        now = self.clock()
        with self._lock:
            for task in self.tasks.values():
                if task.status == "assigned" and task.lease_expires <= now:
                    task.status = "pending"
                    task.assigned_to = None
            # idempotent re-issue of a held assignment
            for task in self.tasks.values():
                if task.status == "assigned" and task.assigned_to == annotator_id:
                    return task
            for task in self.tasks.values():
                if task.status != "pending":
                    continue
                if (task.task_id, annotator_id) in self._responses:
                    continue
                task.status = "assigned"
                task.assigned_to = annotator_id
                task.lease_expires = now + self.lease_seconds
                return task
            return None

    def submit_label(self, resp: AnnotationResponse, allow_unassigned: bool = False) -> int:
        """Validate, append to the log and mark the task done.

        Returns the log sequence number. A resubmission by the same
        annotator supersedes the earlier entry on replay.
        """
        with self._lock:
            task = self.tasks.get(resp.task_id)
            if task is None:
                raise ValidationError(f"unknown task {resp.task_id!r}")
            held = task.status == "assigned" and task.assigned_to == resp.annotator_id
            resubmit = (resp.task_id, resp.annotator_id) in self._responses
            if not held and not resubmit and not allow_unassigned:
                raise ValidationError(
                    f"task {resp.task_id!r} is not assigned to annotator "
                    f"{resp.annotator_id!r}"
                )
            self._append(resp)
            self._apply(resp)
            return self._seq

    def consolidated_labels(self) -> dict[str, AnnotationResponse]:
        """One label per task: the latest superseding entry.

        With multiple annotators on one task the majority verdict wins;
        ties resolve to CannotSay (a representative response with that
        verdict is synthesized from the tying entries).
        """
        with self._lock:
            per_task: dict[str, list[AnnotationResponse]] = {}
            for (task_id, _), resp in self._responses.items():
                per_task.setdefault(task_id, []).append(resp)
        out = {}
        for task_id, resps in per_task.items():
            if len(resps) == 1:
                out[task_id] = resps[0]
                continue
            counts = Counter(r.verdict for r in resps)
            top = counts.most_common()
            if len(top) > 1 and top[0][1] == top[1][1]:
                out[task_id] = AnnotationResponse(
                    task_id=task_id,
                    annotator_id="consensus",
                    verdict="CannotSay",
                    timestamp=max(r.timestamp for r in resps),
                )
            else:
                winner = top[0][0]
                out[task_id] = max(
                    (r for r in resps if r.verdict == winner), key=lambda r: r.timestamp
                )
        return out

    def progress(self) -> dict:
        with self._lock:
            status = Counter(t.status for t in self.tasks.values())
        labels = self.consolidated_labels()
        verdicts = Counter(r.verdict for r in labels.values())
        return {
            "total": len(self.tasks),
            "status": {s: status.get(s, 0) for s in ("pending", "assigned", "done")},
            "verdicts": {v: verdicts.get(v, 0) for v in VERDICTS},
        }


def export_labels(campaign: Campaign):
    """Consolidated label rows plus a campaign summary.

    The summary row order follows the Total / CannotSay / NotToxic /
    Toxic layout; rows carry the utterance id so they can feed classifier
    training directly.
    """
    labels = campaign.consolidated_labels()
    rows = []
    for task_id in sorted(labels):
        resp = labels[task_id]
        task = campaign.tasks[task_id]
        rows.append(
            {
                "task_id": task_id,
                "utterance_id": task.utterance_id,
                "lang": task.lang,
                "verdict": resp.verdict,
                "categories": sorted(resp.categories),
                "toxic_spans": list(resp.toxic_spans),
                "effects": sorted(resp.effects),
                "label": 1 if resp.verdict == "Toxic" else 0,
            }
        )
    verdicts = Counter(r["verdict"] for r in rows)
    categories = Counter(c for r in rows for c in r["categories"])
    summary = {
        "total": len(rows),
        "CannotSay": verdicts.get("CannotSay", 0),
        "NotToxic": verdicts.get("NotToxic", 0),
        "Toxic": verdicts.get("Toxic", 0),
        "categories": dict(sorted(categories.items())),
    }
    return rows, summary
