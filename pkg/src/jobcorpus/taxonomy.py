"""The four-level occupation taxonomy and its category codes.

Codes render as dash-joined segments, zero-padded to two digits past the top
level: the leaf under major group 2, sub-group 2, minor group 10, slot 3 is
"2-02-10-03".  Every non-root node's parent prefix must be present (hierarchy
closure), and only level-4 leaves are eligible as assignment targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InvalidCode, TaxonomyError, UnknownCodeError
from .records import read_jsonl, require_fields
from .textprep import Preprocessor

MAX_LEVEL = 4


@dataclass(frozen=True, order=True)
class CategoryCode:
    """A 1- to 4-segment numeric path into the taxonomy tree."""

    segments: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.segments) <= MAX_LEVEL:
            raise InvalidCode(f"code must have 1..{MAX_LEVEL} segments, got {self.segments!r}")
        if any(s < 0 for s in self.segments):
            raise InvalidCode(f"code segments must be nonnegative, got {self.segments!r}")

    @property
    def level(self) -> int:
        return len(self.segments)

    def render(self) -> str:
        head = str(self.segments[0])
        rest = [f"{s:02d}" for s in self.segments[1:]]
        return "-".join([head, *rest])

    @staticmethod
    def parse(text: str) -> "CategoryCode":
        parts = text.split("-")
        if not 1 <= len(parts) <= MAX_LEVEL:
            raise InvalidCode(f"code {text!r} must have 1..{MAX_LEVEL} segments")
        segments = []
        for part in parts:
            if not part.isdigit():
                raise InvalidCode(f"code {text!r} has a non-numeric segment {part!r}")
            segments.append(int(part))
        return CategoryCode(tuple(segments))

    def parent(self) -> "CategoryCode | None":
        if len(self.segments) == 1:
            return None
        return CategoryCode(self.segments[:-1])

    def prefix(self, level: int) -> "CategoryCode":
        if not 1 <= level <= len(self.segments):
            raise InvalidCode(f"level {level} out of range for {self.render()}")
        return CategoryCode(self.segments[:level])

    @property
    def top_level(self) -> "CategoryCode":
        return CategoryCode(self.segments[:1])

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class TaxonomyNode:
    code: CategoryCode
    label: str
    description: str
    description_tokens: tuple[str, ...] = ()


class Taxonomy:
    """Code-indexed node store with an active-leaf subset."""

    def __init__(
        self,
        nodes: Mapping[CategoryCode, TaxonomyNode],
        active_leaves: Iterable[CategoryCode] | None = None,
    ):
        self.nodes: dict[CategoryCode, TaxonomyNode] = dict(nodes)
        for code in self.nodes:
            parent = code.parent()
            if parent is not None and parent not in self.nodes:
                raise TaxonomyError(f"node {code.render()} is missing parent {parent.render()}")
        leaves = frozenset(c for c in self.nodes if c.level == MAX_LEVEL)
        if active_leaves is None:
            self.active_leaves = leaves
        else:
            active = frozenset(active_leaves)
            bad = sorted(active - leaves)
            if bad:
                raise TaxonomyError(
                    f"active leaves must be level-{MAX_LEVEL} nodes; bad: "
                    + ", ".join(c.render() for c in bad)
                )
            self.active_leaves = active

    @property
    def leaves(self) -> frozenset[CategoryCode]:
        return frozenset(c for c in self.nodes if c.level == MAX_LEVEL)

    def __contains__(self, code: CategoryCode) -> bool:
        return code in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, code: CategoryCode) -> TaxonomyNode:
        try:
            return self.nodes[code]
        except KeyError:
            raise UnknownCodeError(code.render()) from None

    def ancestors(self, code: CategoryCode) -> list[TaxonomyNode]:
        """Nodes from the top level down to the direct parent (empty for level 1)."""
        if code not in self.nodes:
            raise UnknownCodeError(code.render())
        return [self.node(code.prefix(level)) for level in range(1, code.level)]

    def active_nodes(self) -> list[TaxonomyNode]:
        return [self.node(c) for c in sorted(self.active_leaves)]

    def restrict_active(self, observed: Iterable[CategoryCode]) -> "Taxonomy":
        observed = frozenset(observed)
        for code in sorted(observed):
            if code not in self.nodes:
                raise TaxonomyError(f"cannot activate unknown code {code.render()}")
            if code.level != MAX_LEVEL:
                raise TaxonomyError(f"cannot activate non-leaf code {code.render()}")
        return Taxonomy(self.nodes, active_leaves=observed)


def load_taxonomy(path, preprocessor: Preprocessor | None = None) -> Taxonomy:
    """Read a line-delimited taxonomy file (fields: code, label, description).

    Descriptions are segmented and stop-filtered once here, through the same
    path documents take; level-4 nodes must keep a nonempty token list.
    """
    prep = preprocessor if preprocessor is not None else Preprocessor()
    nodes: dict[CategoryCode, TaxonomyNode] = {}
    for lineno, rec in read_jsonl(path):
        require_fields(rec, ("code", "label", "description"), path=path, line=lineno)
        try:
            code = CategoryCode.parse(str(rec["code"]))
        except InvalidCode as exc:
            raise TaxonomyError(f"malformed code: {exc}", path=path, line=lineno)
        if code in nodes:
            raise TaxonomyError(f"duplicate code {code.render()}", path=path, line=lineno)
        tokens = tuple(prep.token_stream(str(rec["description"])))
        if code.level == MAX_LEVEL and not tokens:
            raise TaxonomyError(
                f"leaf {code.render()} has an empty description after preprocessing",
                path=path,
                line=lineno,
            )
        nodes[code] = TaxonomyNode(
            code=code,
            label=str(rec["label"]),
            description=str(rec["description"]),
            description_tokens=tokens,
        )
    try:
        return Taxonomy(nodes)
    except TaxonomyError as exc:
        raise TaxonomyError(str(exc), path=path)
