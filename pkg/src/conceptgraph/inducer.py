"""The induction loop: parse experiences, grow concepts, keep refinements.

Parsing is a left-to-right beam search over concept references and raw
blobs, minimizing description bits.  Induction proposes digram concats and
run repeats, accepting a candidate only when the episode's description
bits strictly drop; model bits are tracked in the reports but creation is
paid for by the data side, which is what lets structure bootstrap from
short experiences.  Number templates and common-component abstractions are
forced by their generalization thresholds: their payoff is expressive, not
an immediate bit gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from . import mdl
from .core import (
    Apply,
    Association,
    Concat,
    ConceptGraph,
    Config,
    Hole,
    Marker,
    Repeat,
    SlotRef,
    Template,
    Token,
)
from .errors import InvalidDescription, UnknownEpisode, UnknownToken
from .mdl import DLReport, description_dl, gamma_len, raw_dl
from .segmenter import RawStream, Segment, TOKEN, identity_token_class, segment_tokens


@dataclass(frozen=True, slots=True)
class Ref:
    concept: int


@dataclass(frozen=True, slots=True)
class Blob:
    tokens: tuple[Token, ...]


Node = Union[Ref, Blob]


@dataclass(frozen=True)
class Description:
    nodes: tuple[Node, ...]

    def refs(self) -> set[int]:
        return {n.concept for n in self.nodes if isinstance(n, Ref)}


EMPTY_DESCRIPTION = Description(())


@dataclass(frozen=True)
class Budget:
    """Search effort: beam width and candidate pool double per level."""

    level: int
    beam: int
    pool: int

    @staticmethod
    def from_config(config: Config, level: int = 0) -> "Budget":
        if level < 0:
            raise ValueError("budget level must be >= 0")
        return Budget(level=level, beam=config.beam_base << level,
                      pool=config.pool_base << level)


@dataclass(frozen=True)
class IngestReport:
    episode: int
    description: Description
    new_concepts: list[int]
    new_associations: list[tuple[int, int]]
    dl: DLReport


# ----------------------------------------------------------------------
# parsing

class _State:
    """Beam state: a partial description reaching `pos`, as a parent chain."""

    __slots__ = ("cost", "count", "pos", "node", "parent", "blob_len", "_sig")

    def __init__(self, cost, count, pos, node, parent, blob_len):
        self.cost = cost
        self.count = count
        self.pos = pos
        self.node = node          # ("r", cid) | ("b", start, end) | None
        self.parent = parent
        self.blob_len = blob_len  # length of trailing blob, 0 otherwise
        self._sig = None

    def signature(self, tokens) -> tuple:
        if self._sig is None:
            parts = []
            state = self
            while state.node is not None:
                entry = state.node
                if entry[0] == "r":
                    parts.append((0, entry[1]))
                else:
                    parts.append((1, tokens[entry[1]:entry[2]]))
                state = state.parent
            parts.reverse()
            self._sig = tuple(parts)
        return self._sig

    def nodes(self, tokens) -> tuple[Node, ...]:
        out = []
        for tag, payload in self.signature(tokens):
            out.append(Ref(payload) if tag == 0 else Blob(payload))
        return tuple(out)


def _order_states(bucket: list[_State], tokens) -> list[_State]:
    """Sort by cost; break exact ties by node signature, shorter first."""
    bucket.sort(key=lambda s: s.cost)
    out: list[_State] = []
    i = 0
    while i < len(bucket):
        j = i
        while j < len(bucket) and bucket[j].cost == bucket[i].cost:
            j += 1
        if j - i == 1:
            out.append(bucket[i])
        else:
            out.extend(sorted(bucket[i:j], key=lambda s: s.signature(tokens)))
        i = j
    return out


class _ParseContext:
    """Per-episode parse machinery: candidate pool, fast index, ref costs.

    Weights are constant between ticks, so one context serves every parse
    call an ingest makes (segments plus blob residue).
    """

    __slots__ = ("graph", "budget", "use_fast_index", "log_d", "sigma_bits",
                 "rc", "fast", "index", "index_lengths", "pool_order", "expansions")

    def __init__(self, graph: ConceptGraph, budget: Budget, use_fast_index: bool = True):
        self.graph = graph
        self.budget = budget
        self.use_fast_index = use_fast_index
        self.log_d = math.log2(graph.codeable_weight() + graph.codeable_count() + 1.0)
        self.sigma_bits = math.log2(len(graph.alphabet))
        self.rc: dict[int, float] = {}
        self.fast = graph.fast_path_set()
        self.index = graph.fast_path_index() if use_fast_index else None
        self.index_lengths = sorted({len(k) for k in self.index}) if use_fast_index else []
        self.pool_order = sorted(
            graph.parseable_ids(),
            key=lambda cid: (-graph.concepts[cid].weight, cid))[:budget.pool]
        self.expansions = {cid: graph.expansion(cid) for cid in self.pool_order}
        for cid in self.fast:
            self.expansions.setdefault(cid, graph.expansion(cid))

    def ref_bits(self, cid: int) -> float:
        bits = self.rc.get(cid)
        if bits is None:
            bits = self.log_d - math.log2(self.graph.concepts[cid].weight + 1.0)
            self.rc[cid] = bits
        return bits

    def candidates_at(self, tokens: tuple, pos: int) -> list[tuple[int, int]]:
        n = len(tokens)
        found: dict[int, int] = {}
        if self.use_fast_index:
            for length in self.index_lengths:
                if pos + length > n:
                    break
                for cid in self.index.get(tokens[pos:pos + length], ()):
                    found[cid] = length
        else:
            for cid in sorted(self.fast):
                exp = self.expansions[cid]
                if tokens[pos:pos + len(exp)] == exp:
                    found[cid] = len(exp)
        for cid in self.pool_order:
            if cid not in found:
                exp = self.expansions[cid]
                if tokens[pos:pos + len(exp)] == exp:
                    found[cid] = len(exp)
        return sorted(found.items())


def parse(graph: ConceptGraph, tokens: Sequence[Token],
          budget: Optional[Budget] = None, *, use_fast_index: bool = True,
          context: Optional[_ParseContext] = None) -> Description:
    """Minimum-description-length parse of `tokens` against the graph.

    Candidates at each position are fast-path exact matches, the top-pool
    concepts by weight whose expansion prefixes the remainder, and a
    single-token blob.  The all-blob description is always considered.  The
    memo index only accelerates the fast-path lookup; results are identical
    with it disabled.
    """
    tokens = tuple(tokens)
    alphabet = set(graph.alphabet)
    for t in tokens:
        if t not in alphabet:
            raise UnknownToken(f"token {t!r} not in alphabet")
    n = len(tokens)
    if n == 0:
        return EMPTY_DESCRIPTION
    if budget is None:
        budget = Budget.from_config(graph.config, 0)
    ctx = context if context is not None else _ParseContext(graph, budget, use_fast_index)
    log_d = ctx.log_d
    sigma_bits = ctx.sigma_bits
    ref_bits = ctx.ref_bits

    start = _State(float(gamma_len(1)), 0, 0, None, None, 0)
    frontier: dict[int, list[_State]] = {0: [start]}
    finals: list[_State] = []

    for pos in range(n):
        bucket = frontier.pop(pos, None)
        if not bucket:
            continue
        bucket = _order_states(bucket, tokens)[:budget.beam]
        cands = ctx.candidates_at(tokens, pos)
        for state in bucket:
            header_next = gamma_len(state.count + 2) - gamma_len(state.count + 1)
            for cid, length in cands:
                succ = _State(state.cost + header_next + ref_bits(cid),
                              state.count + 1, pos + length,
                              ("r", cid), state, 0)
                (finals if succ.pos == n else frontier.setdefault(succ.pos, [])).append(succ)
            if state.blob_len:
                # extend the trailing blob by one token
                old_len = state.blob_len
                delta = (gamma_len(old_len + 1) - gamma_len(old_len)) + sigma_bits
                prev = state.node
                succ = _State(state.cost + delta, state.count, pos + 1,
                              ("b", prev[1], pos + 1), state.parent, old_len + 1)
            else:
                delta = header_next + log_d + gamma_len(1) + sigma_bits
                succ = _State(state.cost + delta, state.count + 1, pos + 1,
                              ("b", pos, pos + 1), state, 1)
            (finals if succ.pos == n else frontier.setdefault(succ.pos, [])).append(succ)

    # the all-blob description is always a candidate
    all_blob = _State(gamma_len(2) + log_d + gamma_len(n) + n * sigma_bits,
                      1, n, ("b", 0, n), start, n)
    finals.append(all_blob)
    best = _order_states(finals, tokens)[0]
    return Description(best.nodes(tokens))


def reconstruct(graph: ConceptGraph, desc: Description) -> tuple[Token, ...]:
    """Exact inverse of parse: concatenated expansions and blob payloads."""
    out: list[Token] = []
    for node in desc.nodes:
        if isinstance(node, Ref):
            if not (0 <= node.concept < len(graph)) or not graph.is_parseable(node.concept):
                raise InvalidDescription(f"ref to non-expanding concept {node.concept}")
            out.extend(graph.expansion(node.concept))
        elif isinstance(node, Blob):
            if not node.tokens:
                raise InvalidDescription("empty blob")
            out.extend(node.tokens)
        else:
            raise InvalidDescription(f"unknown node {node!r}")
    return tuple(out)


# ----------------------------------------------------------------------
# induction rules

def _desc_dl(graph: ConceptGraph, nodes: list[Node]) -> float:
    return description_dl(graph, Description(tuple(nodes)))


def _gated_add(graph: ConceptGraph, kind, nodes: list[Node], rewrite) -> tuple[bool, Optional[int], list[Node]]:
    """Add `kind` and rewrite the episode nodes iff its description bits drop.

    Returns (accepted, new_cid_or_None, nodes_after).  The gate charges the
    episode's description bits at the post-add code state, so a candidate
    whose reference would be dearer than what it replaces is rolled back.
    """
    ep_before = _desc_dl(graph, nodes)
    existing = graph.find(kind)
    if existing is not None:
        new_nodes = rewrite(existing)
        if _desc_dl(graph, new_nodes) < ep_before - 1e-9:
            return True, None, new_nodes
        return False, None, nodes

    cid = graph.add(kind)
    new_nodes = rewrite(cid)
    ep_after = _desc_dl(graph, new_nodes)
    if ep_after < ep_before - 1e-9:
        if graph.check_objective:
            assert ep_after < _desc_dl(graph, nodes), "accepted step raised episode bits"
        return True, cid, new_nodes
    graph.pop_last()
    return False, None, nodes


def _episode_digrams(nodes: list[Node]) -> tuple[dict[tuple[int, int], int], dict[tuple[int, int], int]]:
    """Non-overlapping counts and first positions of adjacent Ref pairs
    (equal-element pairs belong to the run rule)."""
    counts: dict[tuple[int, int], int] = {}
    first: dict[tuple[int, int], int] = {}
    last_end: dict[tuple[int, int], int] = {}
    for i in range(len(nodes) - 1):
        a, b = nodes[i], nodes[i + 1]
        if not (isinstance(a, Ref) and isinstance(b, Ref)) or a.concept == b.concept:
            continue
        pair = (a.concept, b.concept)
        if last_end.get(pair, -1) > i:
            continue
        counts[pair] = counts.get(pair, 0) + 1
        last_end[pair] = i + 2
        first.setdefault(pair, i)
    return counts, first


def _digram_candidates(graph: ConceptGraph, nodes: list[Node]) -> list[tuple[int, int]]:
    """Pairs present in this episode whose count, accumulated over stored
    descriptions, reaches the repeat threshold; hottest and earliest first."""
    counts, first = _episode_digrams(nodes)
    combined = {pair: n + graph.digram_counts.get(pair, 0) for pair, n in counts.items()}
    threshold = graph.config.repeat_threshold
    ordered = sorted((p for p in combined if combined[p] >= threshold),
                     key=lambda p: (-combined[p], first[p], p))
    return [(p, combined[p]) for p in ordered]


def _rewrite_pair(nodes: list[Node], pair: tuple[int, int], cid: int) -> list[Node]:
    out: list[Node] = []
    i = 0
    while i < len(nodes):
        if (i + 1 < len(nodes)
                and isinstance(nodes[i], Ref) and nodes[i].concept == pair[0]
                and isinstance(nodes[i + 1], Ref) and nodes[i + 1].concept == pair[1]):
            out.append(Ref(cid))
            i += 2
        else:
            out.append(nodes[i])
            i += 1
    return out


def _maximal_runs(nodes: list[Node]) -> list[tuple[int, int, int]]:
    """Maximal runs of identical Refs: (concept, length, start), length >= 2."""
    runs = []
    i = 0
    while i < len(nodes):
        node = nodes[i]
        if isinstance(node, Ref):
            j = i
            while j < len(nodes) and nodes[j] == node:
                j += 1
            if j - i >= 2:
                runs.append((node.concept, j - i, i))
            i = j
        else:
            i += 1
    return runs


def _rewrite_runs(nodes: list[Node], concept: int, length: int, cid: int) -> list[Node]:
    out: list[Node] = []
    i = 0
    while i < len(nodes):
        node = nodes[i]
        if isinstance(node, Ref) and node.concept == concept:
            j = i
            while j < len(nodes) and nodes[j] == node:
                j += 1
            if j - i == length:
                out.append(Ref(cid))
            else:
                out.extend(nodes[i:j])
            i = j
        else:
            out.append(node)
            i += 1
    return out


def _number_template_id(graph: ConceptGraph, k: int) -> Optional[int]:
    return graph.find(Template((Hole(0),) * k))


def induce_repeats(graph: ConceptGraph, desc: Description) -> tuple[Description, list[int]]:
    """Grow concepts from within-episode repetition and rewrite the episode.

    Digram and run candidates must strictly lower the episode's description
    bits.  Once a k-fold number template exists, runs of length k are
    rewritten as template applications; the templates themselves appear as
    soon as runs of length k have been observed for enough distinct
    children.
    """
    nodes = list(desc.nodes)
    new_ids: list[int] = []

    changed = True
    while changed:
        changed = False
        for pair, _count in _digram_candidates(graph, nodes):
            accepted, cid, nodes = _gated_add(
                graph, Concat(pair), nodes,
                lambda c, p=pair, ns=nodes: _rewrite_pair(ns, p, c))
            if accepted:
                if cid is not None:
                    new_ids.append(cid)
                changed = True
                break
        if changed:
            continue

        runs = _maximal_runs(nodes)
        for concept, length, _start in runs:
            graph.run_observations.setdefault(length, set()).add(concept)
        for concept, length, _start in runs:
            num_tpl = _number_template_id(graph, length)
            if num_tpl is not None:
                before = len(graph)
                cid = graph.add(Apply(num_tpl, (concept,)))
                if cid >= before:
                    new_ids.append(cid)
                nodes = _rewrite_runs(nodes, concept, length, cid)
                changed = True
                break
            accepted, cid, nodes = _gated_add(
                graph, Repeat(concept, length), nodes,
                lambda c, cc=concept, ln=length, ns=nodes: _rewrite_runs(ns, cc, ln, c))
            if accepted:
                if cid is not None:
                    new_ids.append(cid)
                changed = True
                break

    new_ids.extend(_generalize_numbers(graph))
    return Description(tuple(nodes)), new_ids


def _generalize_numbers(graph: ConceptGraph) -> list[int]:
    """Create the k-fold template once runs of length k span enough children."""
    cfg = graph.config
    children_by_k: dict[int, set[int]] = {k: set(v) for k, v in graph.run_observations.items()}
    for concept in graph.concepts:
        if isinstance(concept.kind, Repeat):
            children_by_k.setdefault(concept.kind.count, set()).add(concept.kind.child)
    new_ids = []
    for k in sorted(children_by_k):
        if len(children_by_k[k]) >= cfg.generalize_threshold and _number_template_id(graph, k) is None:
            new_ids.append(graph.add(Template((Hole(0),) * k)))
    return new_ids


def abstract_common(graph: ConceptGraph) -> list[int]:
    """Abstract concats that agree everywhere but one position into a
    one-hole template, rewriting each as an application (same expansion)."""
    m = graph.config.generalize_threshold
    new_ids: list[int] = []
    changed = True
    while changed:
        changed = False
        buckets: dict[tuple, list[tuple[int, int]]] = {}
        for concept in graph.concepts:
            kind = concept.kind
            if not isinstance(kind, Concat):
                continue
            ch = kind.children
            for i in range(len(ch)):
                key = (len(ch), i, ch[:i], ch[i + 1:])
                buckets.setdefault(key, []).append((concept.id, ch[i]))
        for key, members in buckets.items():
            live = [(cid, differ) for cid, differ in members
                    if isinstance(graph.concept(cid).kind, Concat)]
            if len({differ for _, differ in live}) < m:
                continue
            length, pos, head, tail = key
            body = tuple(SlotRef(c) for c in head) + (Hole(0),) + tuple(SlotRef(c) for c in tail)
            before = len(graph)
            tpl = graph.add(Template(body))
            if tpl >= before:
                new_ids.append(tpl)
            for cid, differ in live:
                graph.replace_kind(cid, Apply(tpl, (differ,)))
            changed = True
            break
    return new_ids


def record_associations(graph: ConceptGraph, desc: Description) -> list[tuple[int, int]]:
    """Count adjacent Ref pairs; reify an Association at the threshold, and
    add the generic follows marker once enough distinct associations exist."""
    cfg = graph.config
    reified: list[tuple[int, int]] = []
    nodes = desc.nodes
    for i in range(len(nodes) - 1):
        a, b = nodes[i], nodes[i + 1]
        if not (isinstance(a, Ref) and isinstance(b, Ref)):
            continue
        pair = (a.concept, b.concept)
        count = graph.assoc_counts.get(pair, 0) + 1
        graph.assoc_counts[pair] = count
        if count == cfg.assoc_threshold:
            before = len(graph)
            graph.add(Association(*pair))
            if len(graph) > before:
                reified.append(pair)
    n_assoc = sum(1 for c in graph.concepts if isinstance(c.kind, Association))
    if n_assoc >= cfg.generalize_threshold and graph.follows_marker_id is None:
        graph.follows_marker_id = graph.add(Marker("follows"))
    return reified


# ----------------------------------------------------------------------
# episode pipeline

def _transitive_refs(graph: ConceptGraph, roots: set[int]) -> set[int]:
    """Everything exercised by expanding the description: a concept's use
    fires its whole subcircuit, so children share the usage reward."""
    seen: set[int] = set()
    stack = list(roots)
    while stack:
        cid = stack.pop()
        if cid in seen:
            continue
        seen.add(cid)
        stack.extend(graph.reference_edges(cid))
    return seen


def _store_description(graph: ConceptGraph, episode_id: int, desc: Description) -> None:
    graph.refinement_store.setdefault(episode_id, []).append(desc)
    refs = sum(1 for n in desc.nodes if isinstance(n, Ref))
    graph.stored_ref_nodes += refs
    graph.stored_blob_nodes += len(desc.nodes) - refs


def _drop_deepest(graph: ConceptGraph, chain: list[Description]) -> None:
    desc = chain.pop()
    refs = sum(1 for n in desc.nodes if isinstance(n, Ref))
    graph.stored_ref_nodes -= refs
    graph.stored_blob_nodes -= len(desc.nodes) - refs


FORGET_WEIGHT = 2.0 ** -20


def _apply_forgetting(graph: ConceptGraph) -> None:
    """Drop a chain's deepest level once its exclusive concepts fade away."""
    for chain in graph.refinement_store.values():
        if len(chain) < 2:
            continue
        shallow: set[int] = set()
        for desc in chain[:-1]:
            shallow |= desc.refs()
        exclusive = chain[-1].refs() - shallow
        if exclusive and all(graph.concept(c).weight < FORGET_WEIGHT for c in exclusive):
            _drop_deepest(graph, chain)


def _normalize_stream(experience) -> RawStream:
    if isinstance(experience, RawStream):
        return experience
    if isinstance(experience, str):
        return RawStream.from_text(experience)
    return RawStream.tokens(experience)


def _resegment_blobs(graph: ConceptGraph, desc: Description,
                     context: _ParseContext) -> Description:
    """One round of recursive contrast on blob residue.

    Unexplained stretches are re-divided at the finest contrast (symbol
    runs) and parsed again, so induction always gets reference material to
    work with; the caller keeps the original description if this ends up
    costlier even after induction.
    """
    out: list[Node] = []
    for node in desc.nodes:
        if isinstance(node, Blob) and len(node.tokens) > 1:
            runs = segment_tokens(RawStream.tokens(node.tokens), identity_token_class)
            for seg in runs:
                out.extend(parse(graph, seg.payload, context.budget,
                                 context=context).nodes)
        else:
            out.append(node)
    return Description(tuple(out))


def ingest(graph: ConceptGraph, experience,
           segments: Optional[list[Segment]] = None) -> IngestReport:
    """Run the full episode pipeline and return what changed.

    Segment by contrast, parse each segment, grow concepts from repetition,
    abstract commonality, record associations, decay-and-reward weights,
    store the description as refinement level 0, bump the episode counter.
    """
    stream = _normalize_stream(experience)
    if stream.kind != TOKEN:
        raise UnknownToken("ingest expects a token stream; quantize scalars first")
    alphabet = set(graph.alphabet)
    for t in stream.samples:
        if t not in alphabet:
            raise UnknownToken(f"token {t!r} not in alphabet")

    if segments is None:
        n = len(stream.samples)
        segments = [Segment(0, n, stream.samples)] if n else []
    else:
        pos = 0
        for seg in segments:
            if seg.start != pos or stream.samples[seg.start:seg.end] != tuple(seg.payload):
                raise ValueError("segments must cover the stream exactly, in order")
            pos = seg.end
        if pos != len(stream.samples):
            raise ValueError("segments must cover the stream exactly, in order")
    budget = Budget.from_config(graph.config, 0)
    context = _ParseContext(graph, budget)
    nodes: list[Node] = []
    for seg in segments:
        nodes.extend(parse(graph, seg.payload, budget, context=context).nodes)
    first_pass = Description(tuple(nodes))

    pre_count = len(graph)
    desc, _ = induce_repeats(graph, _resegment_blobs(graph, first_pass, context))
    if description_dl(graph, first_pass) < description_dl(graph, desc):
        desc = first_pass
    abstract_common(graph)
    new_pairs = record_associations(graph, desc)
    new_concepts = [c.id for c in graph.concepts[pre_count:]]

    graph.tick_weights(_transitive_refs(graph, desc.refs()))
    episode_id = graph.episode
    _store_description(graph, episode_id, desc)
    for pair, count in _episode_digrams(list(desc.nodes))[0].items():
        graph.digram_counts[pair] = graph.digram_counts.get(pair, 0) + count
    graph.raw_bits_total += raw_dl(len(stream.samples), len(graph.alphabet))
    _apply_forgetting(graph)
    graph.episode += 1

    report = DLReport(
        raw_bits=raw_dl(len(stream.samples), len(graph.alphabet)),
        described_bits=description_dl(graph, desc),
        model_bits=mdl.model_dl(graph),
    )
    return IngestReport(episode=episode_id, description=desc,
                        new_concepts=new_concepts, new_associations=new_pairs,
                        dl=report)


def refine(graph: ConceptGraph, episode_id: int) -> Description:
    """Append one refinement level: re-parse at a larger budget, never worse.

    The previous chain tail stays a candidate, so description bits are
    non-increasing along the chain and every level reconstructs exactly.
    """
    chain = graph.refinement_store.get(episode_id)
    if not chain:
        raise UnknownEpisode(f"no refinement chain for episode {episode_id}")
    tokens = reconstruct(graph, chain[0])
    budget = Budget.from_config(graph.config, len(chain))
    candidate = parse(graph, tokens, budget)
    previous = chain[-1]
    if description_dl(graph, previous) <= description_dl(graph, candidate):
        candidate = previous
    _store_description(graph, episode_id, candidate)
    return candidate
