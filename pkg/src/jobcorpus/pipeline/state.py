"""Pipeline state: the labeled/unlabeled/discarded partition and review tasks.

Every document the run ingested sits in exactly one of the three pools at all
times; stages and tasks carry enough bookkeeping to rebuild the construction
ledger and to replay the run from its event log.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import StateError
from ..taxonomy import CategoryCode


@dataclass(frozen=True)
class Verdict:
    decision: str  # "accepted" | "rejected"
    yes_votes: int
    no_votes: int


@dataclass
class ReviewTask:
    """One (document, candidate code) pair awaiting quorum review."""

    task_id: str
    doc_id: str
    code: CategoryCode
    score: float
    runner_up: float
    origin: str  # "wecos" | "svm-<stage>"
    stage: int
    votes: dict[str, bool] = field(default_factory=dict)
    verdict: Verdict | None = None

    @property
    def decided(self) -> bool:
        return self.verdict is not None

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "doc_id": self.doc_id,
            "code": self.code.render(),
            "score": self.score,
            "runner_up": self.runner_up,
            "origin": self.origin,
            "stage": self.stage,
            "votes": dict(self.votes),
            "verdict": None
            if self.verdict is None
            else {
                "decision": self.verdict.decision,
                "yes_votes": self.verdict.yes_votes,
                "no_votes": self.verdict.no_votes,
            },
        }

    @staticmethod
    def from_json(obj: dict) -> "ReviewTask":
        verdict = obj.get("verdict")
        return ReviewTask(
            task_id=obj["task_id"],
            doc_id=obj["doc_id"],
            code=CategoryCode.parse(obj["code"]),
            score=float(obj["score"]),
            runner_up=float(obj["runner_up"]),
            origin=obj["origin"],
            stage=int(obj["stage"]),
            votes={str(j): bool(v) for j, v in obj["votes"].items()},
            verdict=None
            if verdict is None
            else Verdict(
                decision=verdict["decision"],
                yes_votes=int(verdict["yes_votes"]),
                no_votes=int(verdict["no_votes"]),
            ),
        )


@dataclass(frozen=True)
class CorpusEntry:
    doc_id: str
    code: CategoryCode
    origin: str
    stage: int


@dataclass
class StageStats:
    """Per-stage counters backing one construction-ledger row."""

    index: int
    kind: str  # "wecos" | "svm"
    unclassified_at_start: int
    tasks: int = 0
    accepted: int = 0
    rejected: int = 0
    auto_rejected: int = 0
    sealed: bool = False

    @property
    def decided(self) -> int:
        return self.accepted + self.rejected

    @property
    def closed(self) -> bool:
        return self.sealed and self.decided == self.tasks

    @property
    def remainder(self) -> int:
        return self.unclassified_at_start - self.accepted

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "kind": self.kind,
            "unclassified_at_start": self.unclassified_at_start,
            "tasks": self.tasks,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "auto_rejected": self.auto_rejected,
            "sealed": self.sealed,
        }

    @staticmethod
    def from_json(obj: dict) -> "StageStats":
        return StageStats(**{k: obj[k] for k in (
            "index", "kind", "unclassified_at_start", "tasks", "accepted",
            "rejected", "auto_rejected", "sealed",
        )})


class PipelineState:
    """The document partition plus stage history for one construction run."""

    def __init__(self, doc_ids):
        ids = list(doc_ids)
        self.all_ids: frozenset[str] = frozenset(ids)
        if len(ids) != len(self.all_ids):
            raise StateError("duplicate document ids in pipeline input")
        self.input_total: int = len(ids)
        self.labeled: dict[str, CorpusEntry] = {}
        self.unlabeled: set[str] = set(ids)
        self.discarded: dict[str, str] = {}
        self.rejected_pairs: set[tuple[str, str]] = set()
        self.stages: list[StageStats] = []
        self.finalized: bool = False
        self.stop_reason: str | None = None

    @property
    def closed_stages(self) -> list[StageStats]:
        return [s for s in self.stages if s.closed]

    @property
    def current_stage(self) -> StageStats | None:
        if self.stages and not self.stages[-1].closed:
            return self.stages[-1]
        return None

    @property
    def last_added(self) -> int | None:
        closed = self.closed_stages
        return closed[-1].accepted if closed else None

    @property
    def iteration(self) -> int:
        """Number of completed stages (stage 0 is the similarity pass)."""
        return len(self.closed_stages)

    def check_partition(self) -> None:
        labeled = set(self.labeled)
        discarded = set(self.discarded)
        overlap = (labeled & self.unlabeled) | (labeled & discarded) | (self.unlabeled & discarded)
        if overlap:
            raise StateError(f"pools overlap on {sorted(overlap)[:5]}")
        union = labeled | self.unlabeled | discarded
        if union != self.all_ids:
            missing = self.all_ids - union
            extra = union - self.all_ids
            raise StateError(
                f"partition broken: missing={sorted(missing)[:5]} extra={sorted(extra)[:5]}"
            )

    def to_json(self) -> dict:
        return {
            "all_ids": sorted(self.all_ids),
            "labeled": {
                doc_id: {
                    "code": entry.code.render(),
                    "origin": entry.origin,
                    "stage": entry.stage,
                }
                for doc_id, entry in self.labeled.items()
            },
            "unlabeled": sorted(self.unlabeled),
            "discarded": dict(self.discarded),
            "rejected_pairs": sorted([d, c] for d, c in self.rejected_pairs),
            "stages": [s.to_json() for s in self.stages],
            "finalized": self.finalized,
            "stop_reason": self.stop_reason,
        }

    @staticmethod
    def from_json(obj: dict) -> "PipelineState":
        state = PipelineState(obj["all_ids"])
        state.labeled = {
            doc_id: CorpusEntry(
                doc_id=doc_id,
                code=CategoryCode.parse(spec["code"]),
                origin=spec["origin"],
                stage=int(spec["stage"]),
            )
            for doc_id, spec in obj["labeled"].items()
        }
        state.unlabeled = set(obj["unlabeled"])
        state.discarded = dict(obj["discarded"])
        state.rejected_pairs = {(d, c) for d, c in obj["rejected_pairs"]}
        state.stages = [StageStats.from_json(s) for s in obj["stages"]]
        state.finalized = bool(obj["finalized"])
        state.stop_reason = obj["stop_reason"]
        return state
