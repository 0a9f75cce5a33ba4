"""Concept-graph data model: concepts, expansion, weights, valence, emotions.

A graph holds an append-only list of concepts over a fixed alphabet.  Most
concepts denote a token sequence (their "expansion"); associations, affect
primitives and markers are relational nodes that never expand.  Templates
carry holes and only expand through an Apply that fills them.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .errors import (
    ArityMismatch,
    DanglingReference,
    InvalidCount,
    MalformedTemplate,
    NonExpandingConcept,
    UnknownConcept,
)

Token = str

PLEASURE = 1
PAIN = -1


@dataclass(frozen=True, slots=True)
class Hole:
    index: int


@dataclass(frozen=True, slots=True)
class SlotRef:
    concept: int


Slot = Union[Hole, SlotRef]


@dataclass(frozen=True, slots=True)
class Primitive:
    token: Token


@dataclass(frozen=True, slots=True)
class Concat:
    children: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class Repeat:
    child: int
    count: int


@dataclass(frozen=True, slots=True)
class Template:
    body: tuple[Slot, ...]

    @property
    def holes(self) -> int:
        indices = {s.index for s in self.body if isinstance(s, Hole)}
        return len(indices)


@dataclass(frozen=True, slots=True)
class Apply:
    template: int
    fillers: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class Association:
    a: int
    b: int


@dataclass(frozen=True, slots=True)
class AffectPrimitive:
    sign: int  # PLEASURE or PAIN


@dataclass(frozen=True, slots=True)
class Marker:
    label: str


Kind = Union[Primitive, Concat, Repeat, Template, Apply, Association, AffectPrimitive, Marker]

# Kinds that take part in the reference code (weights count toward the
# code denominator).  Templates are codeable (their definitions cost model
# bits, Apply bodies reference them) but cannot expand on their own.
_CODEABLE = (Primitive, Concat, Repeat, Template, Apply)
# Kinds that denote a token sequence and may appear in descriptions.
_PARSEABLE = (Primitive, Concat, Repeat, Apply)


@dataclass
class Config:
    """Engine thresholds.  Defaults follow the documented desk-scale values."""

    contrast_threshold: float = 1.0
    repeat_threshold: int = 2
    decay: float = 0.9
    fast_path_threshold: float = 8.0
    assoc_threshold: int = 3
    generalize_threshold: int = 3
    valence_decay: float = 0.5
    valence_hop_cap: int = 6
    beam_base: int = 4
    pool_base: int = 64
    synth_size_cap: int = 7
    iter_cap: int = 100
    value_cap: int = 10**6
    smoothness_threshold: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.decay <= 1.0):
            raise ValueError("decay must be in (0, 1]")
        if not (0.0 < self.valence_decay < 1.0):
            raise ValueError("valence_decay must be in (0, 1)")
        for name in ("repeat_threshold", "assoc_threshold", "generalize_threshold",
                     "beam_base", "pool_base", "synth_size_cap", "iter_cap",
                     "value_cap", "valence_hop_cap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.fast_path_threshold < 0:
            raise ValueError("fast_path_threshold must be non-negative")


@dataclass
class Concept:
    id: int
    kind: Kind
    weight: float
    created_at: int


class ConceptGraph:
    """Single-writer graph of concepts plus the bookkeeping the inducer needs.

    Concepts are appended with strictly increasing ids and deduplicated
    structurally.  Primitives (one per alphabet symbol) and the two affect
    primitives are created at initialization.
    """

    def __init__(self, alphabet: Sequence[Token], config: Optional[Config] = None):
        if len(alphabet) < 1:
            raise ValueError("alphabet must contain at least one symbol")
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet symbols must be unique")
        self.alphabet: tuple[Token, ...] = tuple(alphabet)
        self.config = config or Config()
        self.concepts: list[Concept] = []
        self.episode: int = 0
        self.assoc_counts: dict[tuple[int, int], int] = {}
        # adjacent Ref pair counts accumulated over stored descriptions
        self.digram_counts: dict[tuple[int, int], int] = {}
        # episode id -> refinement chain (level 0 first)
        self.refinement_store: dict[int, list] = {}
        self.raw_bits_total: float = 0.0
        # run-length observations feeding number generalization: k -> child ids
        self.run_observations: dict[int, set[int]] = {}
        self.follows_marker_id: Optional[int] = None
        # derived caches / counters
        self._dedup: dict[Kind, int] = {}
        self._expansions: dict[int, tuple[Token, ...]] = {}
        self._codeable_count = 0
        self._codeable_weight = 0.0
        # child/hole slots across non-primitive codeable definitions
        self.model_child_slots = 0
        # Ref/Blob node totals across stored descriptions
        self.stored_ref_nodes = 0
        self.stored_blob_nodes = 0
        # when True, gated induction steps re-verify the full objective
        self.check_objective = False
        # learned function library (shell attaches/persists it)
        self.library = None

        for sym in self.alphabet:
            self.add(Primitive(sym))
        self.pleasure_id = self.add(AffectPrimitive(PLEASURE))
        self.pain_id = self.add(AffectPrimitive(PAIN))

    # ------------------------------------------------------------------
    # basic accessors

    def __len__(self) -> int:
        return len(self.concepts)

    def concept(self, cid: int) -> Concept:
        if not 0 <= cid < len(self.concepts):
            raise UnknownConcept(f"no concept {cid}")
        return self.concepts[cid]

    def is_codeable(self, cid: int) -> bool:
        return isinstance(self.concept(cid).kind, _CODEABLE)

    def is_parseable(self, cid: int) -> bool:
        return isinstance(self.concept(cid).kind, _PARSEABLE)

    def codeable_count(self) -> int:
        return self._codeable_count

    def codeable_weight(self) -> float:
        return self._codeable_weight

    def codeable_ids(self) -> list[int]:
        return [c.id for c in self.concepts if isinstance(c.kind, _CODEABLE)]

    def parseable_ids(self) -> list[int]:
        return [c.id for c in self.concepts if isinstance(c.kind, _PARSEABLE)]

    def primitive_id(self, token: Token) -> int:
        try:
            return self.alphabet.index(token)
        except ValueError:
            raise UnknownConcept(f"no primitive for token {token!r}") from None

    def find(self, kind: Kind) -> Optional[int]:
        """Id of a structurally identical concept, if one exists."""
        return self._dedup.get(kind)

    # ------------------------------------------------------------------
    # construction

    def _validate(self, kind: Kind) -> None:
        next_id = len(self.concepts)

        def check_ref(cid: int) -> None:
            if not isinstance(cid, int) or not 0 <= cid < next_id:
                raise DanglingReference(f"reference to missing concept {cid}")

        if isinstance(kind, Primitive):
            if kind.token not in self.alphabet:
                raise DanglingReference(f"token {kind.token!r} not in alphabet")
        elif isinstance(kind, Concat):
            if len(kind.children) < 2:
                raise ArityMismatch("concat needs at least 2 children")
            for cid in kind.children:
                check_ref(cid)
                if not self.is_parseable(cid):
                    raise NonExpandingConcept(f"concat child {cid} does not expand")
        elif isinstance(kind, Repeat):
            if kind.count < 2:
                raise InvalidCount("repeat count must be >= 2")
            check_ref(kind.child)
            if not self.is_parseable(kind.child):
                raise NonExpandingConcept(f"repeat child {kind.child} does not expand")
        elif isinstance(kind, Template):
            holes = [s.index for s in kind.body if isinstance(s, Hole)]
            if not kind.body:
                raise MalformedTemplate("template body is empty")
            if not holes:
                raise ArityMismatch("template needs at least 1 hole")
            if sorted(set(holes)) != list(range(max(holes) + 1)):
                raise ArityMismatch("hole indices must be contiguous from 0")
            for s in kind.body:
                if isinstance(s, SlotRef):
                    check_ref(s.concept)
                    if not self.is_parseable(s.concept):
                        raise NonExpandingConcept(f"template ref {s.concept} does not expand")
        elif isinstance(kind, Apply):
            check_ref(kind.template)
            tpl = self.concept(kind.template).kind
            if not isinstance(tpl, Template):
                raise ArityMismatch(f"concept {kind.template} is not a template")
            if len(kind.fillers) != tpl.holes:
                raise ArityMismatch(
                    f"template {kind.template} has {tpl.holes} holes, got {len(kind.fillers)} fillers")
            for cid in kind.fillers:
                check_ref(cid)
                if not self.is_parseable(cid):
                    raise NonExpandingConcept(f"filler {cid} does not expand")
        elif isinstance(kind, Association):
            check_ref(kind.a)
            check_ref(kind.b)
        elif isinstance(kind, AffectPrimitive):
            if kind.sign not in (PLEASURE, PAIN):
                raise ValueError("affect sign must be +1 or -1")
        elif isinstance(kind, Marker):
            pass
        else:
            raise TypeError(f"unknown kind {kind!r}")

    def add(self, kind: Kind) -> int:
        """Append a concept, or return the existing id of a structural twin."""
        existing = self._dedup.get(kind)
        if existing is not None:
            return existing
        self._validate(kind)
        cid = len(self.concepts)
        self.concepts.append(Concept(id=cid, kind=kind, weight=1.0, created_at=self.episode))
        self._dedup[kind] = cid
        if isinstance(kind, _CODEABLE):
            self._codeable_count += 1
            self._codeable_weight += 1.0
            self.model_child_slots += _kind_slots(kind)
        return cid

    def pop_last(self) -> None:
        """Remove the most recently added concept (speculative-add rollback)."""
        concept = self.concepts.pop()
        del self._dedup[concept.kind]
        self._expansions.pop(concept.id, None)
        if isinstance(concept.kind, _CODEABLE):
            self._codeable_count -= 1
            self._codeable_weight -= concept.weight
            self.model_child_slots -= _kind_slots(concept.kind)

    def rebuild_derived(self) -> None:
        """Recompute caches and counters after a bulk restore (load)."""
        self._dedup = {}
        self._expansions = {}
        self._codeable_count = 0
        self._codeable_weight = 0.0
        self.model_child_slots = 0
        for concept in self.concepts:
            self._dedup.setdefault(concept.kind, concept.id)
            if isinstance(concept.kind, _CODEABLE):
                self._codeable_count += 1
                self._codeable_weight += concept.weight
                self.model_child_slots += _kind_slots(concept.kind)

    def replace_kind(self, cid: int, kind: Kind) -> None:
        """Structural rewrite (Concat -> Apply abstraction).

        The expansion must be unchanged; id and weight are preserved.  The
        rewritten concept may reference a template with a higher id, which
        keeps the graph acyclic because the template body only references
        concepts older than `cid`.
        """
        concept = self.concept(cid)
        old = concept.kind
        if type(old) is type(kind) and old == kind:
            return
        before = self.expansion(cid)
        if isinstance(kind, Apply):
            tpl = self.concept(kind.template).kind
            if not isinstance(tpl, Template):
                raise ArityMismatch("replacement must reference a template")
            if len(kind.fillers) != tpl.holes:
                raise ArityMismatch("filler count does not match template holes")
        self.model_child_slots += _kind_slots(kind) - _kind_slots(old)
        del self._dedup[old]
        self._dedup.setdefault(kind, cid)
        concept.kind = kind
        self._expansions.pop(cid, None)
        assert self.expansion(cid) == before, "rewrite changed an expansion"

    # ------------------------------------------------------------------
    # expansion

    def expansion(self, cid: int) -> tuple[Token, ...]:
        """Token sequence denoted by `cid`; raises for relational concepts."""
        cached = self._expansions.get(cid)
        if cached is not None:
            return cached
        kind = self.concept(cid).kind
        if not isinstance(kind, _PARSEABLE):
            raise NonExpandingConcept(f"concept {cid} ({type(kind).__name__}) does not expand")
        if isinstance(kind, Primitive):
            result: tuple[Token, ...] = (kind.token,)
        elif isinstance(kind, Concat):
            parts = [self.expansion(c) for c in kind.children]
            result = tuple(t for part in parts for t in part)
        elif isinstance(kind, Repeat):
            result = self.expansion(kind.child) * kind.count
        else:  # Apply
            tpl = self.concept(kind.template).kind
            out: list[Token] = []
            for slot in tpl.body:
                if isinstance(slot, Hole):
                    out.extend(self.expansion(kind.fillers[slot.index]))
                else:
                    out.extend(self.expansion(slot.concept))
            result = tuple(out)
        self._expansions[cid] = result
        return result

    # ------------------------------------------------------------------
    # weight dynamics

    def set_weight(self, cid: int, weight: float) -> None:
        """Set one weight directly, keeping the code-mass counter in sync."""
        if weight < 0:
            raise ValueError("weight must be non-negative")
        concept = self.concept(cid)
        if isinstance(concept.kind, _CODEABLE):
            self._codeable_weight += weight - concept.weight
        concept.weight = weight

    def tick_weights(self, used: Iterable[int]) -> None:
        """Decay every weight geometrically, then reward the used concepts.

        Affect primitives are exempt from decay (their weight is unused).
        """
        gamma = self.config.decay
        for concept in self.concepts:
            if isinstance(concept.kind, AffectPrimitive):
                continue
            concept.weight *= gamma
        for cid in set(used):
            concept = self.concept(cid)
            if not isinstance(concept.kind, AffectPrimitive):
                concept.weight += 1.0
        self._codeable_weight = sum(
            c.weight for c in self.concepts if isinstance(c.kind, _CODEABLE))

    def fast_path_set(self) -> set[int]:
        """Concepts hot enough to bypass the ranked candidate pool."""
        theta = self.config.fast_path_threshold
        return {
            c.id for c in self.concepts
            if isinstance(c.kind, _PARSEABLE) and c.weight >= theta
        }

    def fast_path_index(self) -> dict[tuple[Token, ...], tuple[int, ...]]:
        """Exact-match index: expansion -> ids, over the fast-path set."""
        index: dict[tuple[Token, ...], list[int]] = {}
        for cid in sorted(self.fast_path_set()):
            index.setdefault(self.expansion(cid), []).append(cid)
        return {k: tuple(v) for k, v in index.items()}

    # ------------------------------------------------------------------
    # valence

    def reference_edges(self, cid: int) -> list[int]:
        """Concepts directly referenced by `cid` (the affinity-graph edges)."""
        kind = self.concept(cid).kind
        if isinstance(kind, Concat):
            return list(kind.children)
        if isinstance(kind, Repeat):
            return [kind.child]
        if isinstance(kind, Template):
            return [s.concept for s in kind.body if isinstance(s, SlotRef)]
        if isinstance(kind, Apply):
            return [kind.template, *kind.fillers]
        if isinstance(kind, Association):
            return [kind.a, kind.b]
        return []

    def propagate_valence(self) -> dict[int, float]:
        """Signed proximity to pleasure/pain over the undirected reference graph.

        valence(c) = clamp(alpha^d+ - alpha^d-, -1, +1) with hop cap H;
        unreachable or beyond-cap distances contribute 0.
        """
        alpha = self.config.valence_decay
        cap = self.config.valence_hop_cap
        adjacency: dict[int, set[int]] = {c.id: set() for c in self.concepts}
        for concept in self.concepts:
            for ref in self.reference_edges(concept.id):
                adjacency[concept.id].add(ref)
                adjacency[ref].add(concept.id)

        def distances(source: int) -> dict[int, int]:
            dist = {source: 0}
            frontier = deque([source])
            while frontier:
                node = frontier.popleft()
                d = dist[node]
                if d >= cap:
                    continue
                for other in adjacency[node]:
                    if other not in dist:
                        dist[other] = d + 1
                        frontier.append(other)
            return dist

        d_plus = distances(self.pleasure_id)
        d_minus = distances(self.pain_id)
        valences: dict[int, float] = {}
        for concept in self.concepts:
            cid = concept.id
            pos = alpha ** d_plus[cid] if cid in d_plus else 0.0
            neg = alpha ** d_minus[cid] if cid in d_minus else 0.0
            valences[cid] = max(-1.0, min(1.0, pos - neg))
        valences[self.pleasure_id] = 1.0
        valences[self.pain_id] = -1.0
        return valences


def _kind_slots(kind: Kind) -> int:
    """Reference/hole slots a definition contributes to the model code."""
    if isinstance(kind, Concat):
        return len(kind.children)
    if isinstance(kind, Repeat):
        return 1
    if isinstance(kind, Template):
        return len(kind.body)
    if isinstance(kind, Apply):
        return 1 + len(kind.fillers)
    return 0


# ----------------------------------------------------------------------
# function-style aliases for the graph operations

def add_concept(graph: ConceptGraph, kind: Kind) -> int:
    return graph.add(kind)


def expansion(graph: ConceptGraph, cid: int) -> tuple[Token, ...]:
    return graph.expansion(cid)


def tick_weights(graph: ConceptGraph, used: Iterable[int]) -> None:
    graph.tick_weights(used)


def fast_path_set(graph: ConceptGraph) -> set[int]:
    return graph.fast_path_set()


def propagate_valence(graph: ConceptGraph) -> dict[int, float]:
    return graph.propagate_valence()


# ----------------------------------------------------------------------
# emotion templates

@dataclass(frozen=True)
class SlotConstraint:
    """One pattern slot: exact id, label, valence sign, or wildcard."""

    kind: str  # "exact" | "label" | "valence" | "any"
    concept: Optional[int] = None
    label: Optional[str] = None
    sign: Optional[int] = None


@dataclass(frozen=True)
class EmotionTemplate:
    emotion: str
    pattern: tuple[SlotConstraint, ...]
    min_repeats: int = 1


def default_emotion_templates() -> list[EmotionTemplate]:
    """The two built-in templates; users supply more as data."""
    anger = EmotionTemplate(
        emotion="anger",
        pattern=(
            SlotConstraint(kind="label", label="other_action"),
            SlotConstraint(kind="valence", sign=-1),
        ),
    )
    frustration = EmotionTemplate(
        emotion="frustration",
        pattern=(
            SlotConstraint(kind="label", label="attempt"),
            SlotConstraint(kind="valence", sign=-1),
        ),
        min_repeats=3,
    )
    return [anger, frustration]


def _constraint_matches(constraint: SlotConstraint, node, valences,
                        labels: dict[int, str]) -> bool:
    if constraint.kind == "any":
        return True
    concept = getattr(node, "concept", None)
    if concept is None:  # blob: only wildcards match
        return False
    if constraint.kind == "exact":
        return concept == constraint.concept
    if constraint.kind == "label":
        return labels.get(concept) == constraint.label
    if constraint.kind == "valence":
        v = valences.get(concept, 0.0)
        return v > 0 if constraint.sign > 0 else v < 0
    raise MalformedTemplate(f"unknown constraint kind {constraint.kind!r}")


def match_emotion(desc, templates: Sequence[EmotionTemplate],
                  valences: dict[int, float],
                  labels: Optional[dict[int, str]] = None) -> list[tuple[str, tuple[int, int]]]:
    """Match emotion templates against top-level description spans.

    Returns (emotion, (start, end)) for every maximal contiguous span where
    the template pattern repeats at least `min_repeats` times, scanning left
    to right.  Spans are reported in ascending start order.
    """
    labels = labels or {}
    nodes = desc.nodes
    results: list[tuple[str, tuple[int, int]]] = []
    for template in templates:
        pattern = template.pattern
        if not pattern:
            raise MalformedTemplate(f"emotion {template.emotion!r} has an empty pattern")
        if template.min_repeats < 1:
            raise MalformedTemplate(f"emotion {template.emotion!r} has repeat count < 1")
        width = len(pattern)
        i = 0
        while i + width <= len(nodes):
            repeats = 0
            j = i
            while j + width <= len(nodes) and all(
                    _constraint_matches(pattern[k], nodes[j + k], valences, labels)
                    for k in range(width)):
                repeats += 1
                j += width
            if repeats >= template.min_repeats:
                results.append((template.emotion, (i, i + repeats * width)))
                i = i + repeats * width
            else:
                i += 1
    results.sort(key=lambda item: (item[1][0], item[1][1], item[0]))
    return results
