"""Two-module corpus construction: similarity bootstrap, then classifier loops.

Module 1 proposes a best-scoring category per document and human quorum votes
accept or reject each proposal; module 2 retrains a classifier on everything
accepted so far and sends its predictions back through review, iterating
until the unlabeled remainder is small or an iteration adds nothing.
"""

from .state import CorpusEntry, PipelineState, ReviewTask, StageStats, Verdict
from .events import FileEventLog, MemoryEventLog
from .engine import CorpusBuilder, RunConfig, StopDecision
from .stats import CorpusStats, TopLevelRow, corpus_stats
from .audit import AuditReport, AuditSession, AuditTask, audit_run, tally_choices

__all__ = [
    "CorpusEntry",
    "PipelineState",
    "ReviewTask",
    "StageStats",
    "Verdict",
    "FileEventLog",
    "MemoryEventLog",
    "CorpusBuilder",
    "RunConfig",
    "StopDecision",
    "CorpusStats",
    "TopLevelRow",
    "corpus_stats",
    "AuditReport",
    "AuditSession",
    "AuditTask",
    "audit_run",
    "tally_choices",
]
