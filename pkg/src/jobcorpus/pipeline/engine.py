"""The corpus construction engine.

One CorpusBuilder owns the document pool, the weighted category descriptions,
the review tasks, and the event log.  All mutation funnels through event
emission, so a run can be stopped anywhere and replayed from the log (plus an
optional snapshot) into the identical state.

Stage 0 scores every document against the active categories and queues the
argmax candidates for review; stages 1..n retrain the configured classifier
on the labeled pool and queue its predictions, skipping (document, code)
pairs a reviewer already rejected.  The run stops when the unlabeled
remainder drops below the configured fraction of the input or a completed
stage accepted nothing.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from ..classifiers import TextClassifier, build_dictionary, train_forest, train_svm, vectorize
from ..embeddings import EmbeddingTable
from ..errors import ConfigError, StateError
from ..records import dumps_record
from ..similarity import CategoryScorer, PreparedCategories, SimilarityConfig
from ..taxonomy import CategoryCode, Taxonomy
from ..textprep import Document
from ..tfidf import fit_tfidf, weigh, weigh_tokens
from .events import MemoryEventLog
from .state import CorpusEntry, PipelineState, ReviewTask, StageStats, Verdict


class TaskNotFound(StateError):
    pass


class TaskAlreadyDecided(StateError):
    pass


class VoteConflict(StateError):
    """The same judge sent a different decision for the same task."""


@dataclass(frozen=True)
class RunConfig:
    p: float = 0.8
    quorum: int = 5
    classifier: str = "svm"
    gamma: float = 0.6
    c: float = 1.0
    tol: float = 1e-3
    max_passes: int = 10
    min_count: int = 1
    trees: int = 300
    rf_seed: int = 0
    stop_fraction: float = 0.05
    jobs: int = 1
    backend: str | None = None

    def __post_init__(self):
        if self.quorum < 1 or self.quorum % 2 == 0:
            raise ConfigError(f"quorum must be a positive odd number, got {self.quorum}")
        if self.classifier not in ("svm", "rf"):
            raise ConfigError(f"classifier must be 'svm' or 'rf', got {self.classifier!r}")
        if not (0.0 < self.stop_fraction < 1.0):
            raise ConfigError(f"stop_fraction must be in (0, 1), got {self.stop_fraction}")
        SimilarityConfig(p=self.p, jobs=self.jobs, backend=self.backend)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "quorum": self.quorum,
            "classifier": self.classifier,
            "gamma": self.gamma,
            "c": self.c,
            "tol": self.tol,
            "max_passes": self.max_passes,
            "min_count": self.min_count,
            "trees": self.trees,
            "rf_seed": self.rf_seed,
            "stop_fraction": self.stop_fraction,
            "jobs": self.jobs,
            "backend": self.backend,
        }

    @staticmethod
    def from_json(obj: dict) -> "RunConfig":
        known = {k: obj[k] for k in RunConfig.__dataclass_fields__ if k in obj}
        return RunConfig(**known)


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    reason: str | None = None


@dataclass(frozen=True)
class Progress:
    open_tasks: int
    decided_tasks: int
    accepted: int
    rejected: int
    iteration: int
    labeled: int
    unlabeled: int
    discarded: int
    input_total: int
    finalized: bool

    @property
    def percent_unlabeled(self) -> float:
        return 100.0 * self.unlabeled / self.input_total if self.input_total else 0.0

    def to_json(self) -> dict:
        return {
            "open_tasks": self.open_tasks,
            "decided_tasks": self.decided_tasks,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "iteration": self.iteration,
            "labeled": self.labeled,
            "unlabeled": self.unlabeled,
            "discarded": self.discarded,
            "input_total": self.input_total,
            "finalized": self.finalized,
            "percent_unlabeled": self.percent_unlabeled,
        }


class CorpusBuilder:
    """Drives one construction run over a fixed document pool."""

    def __init__(
        self,
        documents: Sequence[Document],
        taxonomy: Taxonomy,
        embeddings: EmbeddingTable,
        config: RunConfig = RunConfig(),
        log=None,
        strict_invariants: bool = False,
    ):
        self.taxonomy = taxonomy
        self.embeddings = embeddings
        self.config = config
        self.log = log if log is not None else MemoryEventLog()
        self.strict_invariants = strict_invariants
        self.lock = threading.RLock()

        self.documents: dict[str, Document] = {}
        for doc in documents:
            if doc.id in self.documents:
                raise StateError(f"duplicate document id {doc.id!r}")
            if not doc.tokens:
                raise StateError(f"document {doc.id!r} has no tokens; ingest should drop it")
            self.documents[doc.id] = doc

        active = taxonomy.active_nodes()
        corpus_for_df: list = [list(d.tokens) for d in self.documents.values()]
        corpus_for_df.extend(list(n.description_tokens) for n in active)
        self.tfidf = fit_tfidf(corpus_for_df) if corpus_for_df else None
        self.weighted = {
            doc_id: weigh(doc, self.tfidf) for doc_id, doc in self.documents.items()
        }
        self.categories = [
            (n.code, weigh_tokens(n.code.render(), list(n.description_tokens), self.tfidf))
            for n in active
        ]
        self._prepared_categories: PreparedCategories | None = None

        self.state = PipelineState(self.documents.keys())
        self.tasks: dict[str, ReviewTask] = {}
        self._task_order: list[str] = []
        self.last_model: TextClassifier | None = None

        existing = list(self.log.events())
        if existing:
            self._replay(existing)
        else:
            self._emit({"t": "init", "ids": sorted(self.documents)})

    # ------------------------------------------------------------------
    # Event plumbing

    def _emit(self, event: dict) -> None:
        self.log.append(event)
        self._apply(event)

    def _apply(self, event: dict) -> None:
        kind = event["t"]
        state = self.state
        if kind == "init":
            if set(event["ids"]) != state.all_ids:
                raise StateError("event log belongs to a different document pool")
        elif kind == "stage":
            if state.current_stage is not None:
                raise StateError("previous stage still open")
            if event["index"] != len(state.stages):
                raise StateError("stage index out of order")
            state.stages.append(
                StageStats(
                    index=event["index"],
                    kind=event["kind"],
                    unclassified_at_start=event["unclassified"],
                )
            )
        elif kind == "task":
            stage = self._open_stage(event["stage"])
            task = ReviewTask(
                task_id=event["task"],
                doc_id=event["doc"],
                code=CategoryCode.parse(event["code"]),
                score=event["score"],
                runner_up=event["runner_up"],
                origin=event["origin"],
                stage=event["stage"],
            )
            if task.task_id in self.tasks:
                raise StateError(f"duplicate task id {task.task_id}")
            if task.doc_id not in state.unlabeled:
                raise StateError(f"task for {task.doc_id!r} which is not unlabeled")
            self.tasks[task.task_id] = task
            self._task_order.append(task.task_id)
            stage.tasks += 1
        elif kind == "auto_reject":
            stage = self._open_stage(event["stage"])
            state.rejected_pairs.add((event["doc"], event["code"]))
            stage.auto_rejected += 1
        elif kind == "sealed":
            stage = self._open_stage(event["stage"])
            if stage.sealed:
                raise StateError(f"stage {stage.index} already sealed")
            stage.sealed = True
        elif kind == "vote":
            task = self.tasks.get(event["task"])
            if task is None:
                raise TaskNotFound(event["task"])
            if task.decided:
                raise TaskAlreadyDecided(task.task_id)
            task.votes[event["judge"]] = bool(event["yes"])
        elif kind == "verdict":
            task = self.tasks.get(event["task"])
            if task is None:
                raise TaskNotFound(event["task"])
            if task.decided:
                raise StateError(f"verdict repeated for task {task.task_id}")
            yes = sum(1 for v in task.votes.values() if v)
            no = len(task.votes) - yes
            task.verdict = Verdict(decision=event["decision"], yes_votes=yes, no_votes=no)
            stage = self._stage(task.stage)
            if event["decision"] == "accepted":
                if task.doc_id not in state.unlabeled:
                    raise StateError(f"accepting {task.doc_id!r} which is not unlabeled")
                state.unlabeled.discard(task.doc_id)
                state.labeled[task.doc_id] = CorpusEntry(
                    doc_id=task.doc_id, code=task.code, origin=task.origin, stage=task.stage
                )
                stage.accepted += 1
            else:
                state.rejected_pairs.add((task.doc_id, task.code.render()))
                stage.rejected += 1
        elif kind == "finalized":
            if state.finalized:
                raise StateError("run already finalized")
            for doc_id in sorted(state.unlabeled):
                state.discarded[doc_id] = "unlabeled-at-stop"
            state.unlabeled.clear()
            state.finalized = True
            state.stop_reason = event["reason"]
        else:
            raise StateError(f"unknown event type {kind!r}")
        if self.strict_invariants:
            state.check_partition()

    def _stage(self, index: int) -> StageStats:
        try:
            return self.state.stages[index]
        except IndexError:
            raise StateError(f"no stage {index}") from None

    def _open_stage(self, index: int) -> StageStats:
        stage = self._stage(index)
        if stage.sealed:
            raise StateError(f"stage {index} is sealed")
        return stage

    def _replay(self, events: Iterable[dict]) -> None:
        for event in events:
            self._apply(event)
        self._recover_verdicts()

    def _recover_verdicts(self) -> None:
        """Apply verdicts for tasks whose quorum arrived before a crash."""
        for task_id in self._task_order:
            task = self.tasks[task_id]
            if not task.decided and len(task.votes) >= self.config.quorum:
                self._emit_verdict(task)

    # ------------------------------------------------------------------
    # Snapshots

    def snapshot(self) -> dict:
        with self.lock:
            return {
                "seq": self.log.last_seq,
                "config": self.config.to_json(),
                "state": self.state.to_json(),
                "tasks": [self.tasks[t].to_json() for t in self._task_order],
            }

    @classmethod
    def resume(
        cls,
        documents: Sequence[Document],
        taxonomy: Taxonomy,
        embeddings: EmbeddingTable,
        config: RunConfig,
        log,
        snapshot: dict | None = None,
        strict_invariants: bool = False,
    ) -> "CorpusBuilder":
        """Rebuild a run from its log, optionally fast-forwarded by a snapshot."""
        builder = cls.__new__(cls)
        builder.taxonomy = taxonomy
        builder.embeddings = embeddings
        builder.config = config
        builder.log = log
        builder.strict_invariants = strict_invariants
        builder.lock = threading.RLock()
        builder.documents = {}
        for doc in documents:
            if doc.id in builder.documents:
                raise StateError(f"duplicate document id {doc.id!r}")
            builder.documents[doc.id] = doc
        active = taxonomy.active_nodes()
        corpus_for_df = [list(d.tokens) for d in builder.documents.values()]
        corpus_for_df.extend(list(n.description_tokens) for n in active)
        builder.tfidf = fit_tfidf(corpus_for_df) if corpus_for_df else None
        builder.weighted = {
            doc_id: weigh(doc, builder.tfidf) for doc_id, doc in builder.documents.items()
        }
        builder.categories = [
            (n.code, weigh_tokens(n.code.render(), list(n.description_tokens), builder.tfidf))
            for n in active
        ]
        builder._prepared_categories = None
        builder.last_model = None
        builder.tasks = {}
        builder._task_order = []
        after = 0
        if snapshot is not None:
            builder.state = PipelineState.from_json(snapshot["state"])
            if builder.state.all_ids != frozenset(builder.documents):
                raise StateError("snapshot belongs to a different document pool")
            for obj in snapshot["tasks"]:
                task = ReviewTask.from_json(obj)
                builder.tasks[task.task_id] = task
                builder._task_order.append(task.task_id)
            after = int(snapshot["seq"])
        else:
            builder.state = PipelineState(builder.documents.keys())
        events = list(log.events(after_seq=after))
        if snapshot is None and not events:
            raise StateError("nothing to resume: event log is empty")
        builder._replay(events)
        return builder

    # ------------------------------------------------------------------
    # Stage orchestration

    def _prepared(self) -> PreparedCategories:
        if self._prepared_categories is None:
            if not self.categories:
                raise ConfigError("no active taxonomy leaves to assign against")
            self._prepared_categories = PreparedCategories(self.categories, self.embeddings)
        return self._prepared_categories

    def module1_run(self) -> list[ReviewTask]:
        """Score every unlabeled document and queue the argmax candidates."""
        with self.lock:
            if self.state.finalized:
                raise StateError("run is finalized")
            if self.state.stages:
                raise StateError("similarity stage already ran")
            if not self.state.unlabeled:
                raise StateError("no unlabeled documents to assign")
            if not self.categories:
                raise ConfigError("no active taxonomy leaves to assign against")
            scorer = CategoryScorer(
                self._prepared(),
                SimilarityConfig(p=self.config.p, jobs=self.config.jobs, backend=self.config.backend),
            )
            doc_ids = sorted(self.state.unlabeled)
            candidates = scorer.assign_many([self.weighted[d] for d in doc_ids])
            self._emit({
                "t": "stage", "index": 0, "kind": "wecos", "unclassified": len(doc_ids),
            })
            for cand in candidates:
                self._emit({
                    "t": "task",
                    "stage": 0,
                    "task": f"t000-{cand.doc_id}",
                    "doc": cand.doc_id,
                    "code": cand.code.render(),
                    "score": cand.score,
                    "runner_up": cand.runner_up_score,
                    "origin": "wecos",
                })
            self._emit({"t": "sealed", "stage": 0})
            return self.open_tasks()

    def module2_iterate(self) -> list[ReviewTask]:
        """Retrain on the labeled pool and queue predictions for review."""
        with self.lock:
            if self.state.finalized:
                raise StateError("run is finalized")
            if not self.state.stages:
                raise StateError("similarity stage has not run yet")
            if self.state.current_stage is not None:
                raise StateError("previous stage still open")
            if not self.state.labeled:
                raise StateError("no labeled documents to train on")
            decision = self.should_stop()
            if decision.stop:
                raise StateError(f"stop rule already fired ({decision.reason})")
            index = len(self.state.stages)
            bundle = self._train_bundle()
            doc_ids = sorted(self.state.unlabeled)
            predictions = bundle.predict_docs([self.documents[d] for d in doc_ids])
            self.last_model = bundle
            self._emit({
                "t": "stage", "index": index, "kind": "svm", "unclassified": len(doc_ids),
            })
            origin = f"svm-{index}"
            for doc_id, code in zip(doc_ids, predictions):
                rendered = code.render()
                if (doc_id, rendered) in self.state.rejected_pairs:
                    self._emit({
                        "t": "auto_reject", "stage": index, "doc": doc_id, "code": rendered,
                    })
                else:
                    self._emit({
                        "t": "task",
                        "stage": index,
                        "task": f"t{index:03d}-{doc_id}",
                        "doc": doc_id,
                        "code": rendered,
                        "score": 0.0,
                        "runner_up": 0.0,
                        "origin": origin,
                    })
            self._emit({"t": "sealed", "stage": index})
            return self.open_tasks()

    def _train_bundle(self) -> TextClassifier:
        train_docs = [self.documents[d] for d in sorted(self.state.labeled)]
        labels = [self.state.labeled[d.id].code for d in train_docs]
        dictionary = build_dictionary(train_docs, min_count=self.config.min_count)
        data = [
            (vectorize(doc, dictionary, self.tfidf), code)
            for doc, code in zip(train_docs, labels)
        ]
        if self.config.classifier == "svm":
            model = train_svm(
                data,
                gamma=self.config.gamma,
                c=self.config.c,
                tol=self.config.tol,
                max_passes=self.config.max_passes,
                dim=len(dictionary),
                n_jobs=self.config.jobs,
            )
            return TextClassifier(kind="svm", dictionary=dictionary, tfidf=self.tfidf, svm=model)
        model = train_forest(
            data,
            num_trees=self.config.trees,
            seed=self.config.rf_seed,
            dim=len(dictionary),
        )
        return TextClassifier(kind="rf", dictionary=dictionary, tfidf=self.tfidf, forest=model)

    # ------------------------------------------------------------------
    # Voting

    def open_tasks(self) -> list[ReviewTask]:
        with self.lock:
            return [self.tasks[t] for t in self._task_order if not self.tasks[t].decided]

    def next_task_for(self, judge: str) -> ReviewTask | None:
        with self.lock:
            for task_id in self._task_order:
                task = self.tasks[task_id]
                if not task.decided and judge not in task.votes:
                    return task
            return None

    def record_vote(self, task_id: str, judge: str, yes: bool) -> ReviewTask:
        """Record one judge's decision; applies the verdict at quorum.

        A repeated identical vote is a no-op; a contradicting one is refused.
        """
        with self.lock:
            task = self.tasks.get(task_id)
            if task is None:
                raise TaskNotFound(task_id)
            if task.decided:
                raise TaskAlreadyDecided(task_id)
            if judge in task.votes:
                if task.votes[judge] == yes:
                    return task
                raise VoteConflict(f"judge {judge!r} already voted differently on {task_id}")
            self._emit({"t": "vote", "task": task_id, "judge": judge, "yes": bool(yes)})
            if len(task.votes) >= self.config.quorum:
                self._emit_verdict(task)
            return task

    def _emit_verdict(self, task: ReviewTask) -> None:
        yes = sum(1 for v in task.votes.values() if v)
        no = len(task.votes) - yes
        decision = "accepted" if yes > no else "rejected"
        self._emit({"t": "verdict", "task": task.task_id, "decision": decision,
                    "yes": yes, "no": no})

    # ------------------------------------------------------------------
    # Stop rule, finalize, export

    def should_stop(self) -> StopDecision:
        state = self.state
        if len(state.unlabeled) < self.config.stop_fraction * state.input_total:
            return StopDecision(True, "below-threshold")
        last = state.last_added
        if last is not None and last == 0:
            return StopDecision(True, "no-expansion")
        return StopDecision(False, None)

    def finalize(self) -> StopDecision:
        with self.lock:
            if self.state.finalized:
                raise StateError("run already finalized")
            if self.state.current_stage is not None:
                raise StateError("cannot finalize with an open stage")
            decision = self.should_stop()
            if not decision.stop:
                raise StateError("stop rule has not fired; refusing to finalize")
            self._emit({"t": "finalized", "reason": decision.reason})
            return decision

    def export_rows(self) -> list[dict]:
        """Corpus export records, sorted by document id."""
        with self.lock:
            rows = []
            for doc_id in sorted(self.state.labeled):
                entry = self.state.labeled[doc_id]
                doc = self.documents[doc_id]
                rows.append({
                    "id": doc_id,
                    "title": doc.title,
                    "description": doc.body,
                    "code": entry.code.render(),
                    "top_level": entry.code.top_level.render(),
                    "origin": entry.origin,
                    "iteration": entry.stage,
                })
            return rows

    def export(self, path) -> int:
        rows = self.export_rows()
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(dumps_record(row))
                fh.write("\n")
        return len(rows)

    # ------------------------------------------------------------------
    # Reporting

    def progress(self) -> Progress:
        with self.lock:
            state = self.state
            decided = sum(1 for t in self.tasks.values() if t.decided)
            return Progress(
                open_tasks=len(self.tasks) - decided,
                decided_tasks=decided,
                accepted=sum(s.accepted for s in state.stages),
                rejected=sum(s.rejected for s in state.stages),
                iteration=state.iteration,
                labeled=len(state.labeled),
                unlabeled=len(state.unlabeled),
                discarded=len(state.discarded),
                input_total=state.input_total,
                finalized=state.finalized,
            )

    def ledger_rows(self) -> list[StageStats]:
        with self.lock:
            return [s for s in self.state.stages if s.closed]
