"""Description-length accounting: the engine's minimized objective.

Costs are real-valued bits, never emitted as an actual bitstream.  The code
over concept references is weight-proportional with Laplace smoothing: a
concept c costs -log2((w_c + 1) / (W + N + 1)) bits, where W and N sum over
the codeable concepts and the trailing +1 reserves mass for the blob-escape
symbol.  The Kraft sum of this code is exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Optional

from .errors import (
    InvalidDescription,
    NonPositive,
    ReconstructionMismatch,
    UnknownConcept,
)
from .core import Apply, Concat, Hole, Primitive, Repeat, Template

if TYPE_CHECKING:
    from .core import ConceptGraph
    from .inducer import Description

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class DLReport:
    raw_bits: float
    described_bits: float
    model_bits: float

    @property
    def attention(self) -> float:
        return self.raw_bits - self.described_bits

    def as_text(self) -> str:
        return (
            f"raw_bits: {self.raw_bits:.9f}\n"
            f"described_bits: {self.described_bits:.9f}\n"
            f"model_bits: {self.model_bits:.9f}\n"
            f"attention: {self.attention:.9f}\n"
        )


def gamma_len(k: int) -> int:
    """Elias-gamma code length for a positive integer: 2*floor(log2 k) + 1."""
    if k < 1:
        raise NonPositive(f"gamma_len needs k >= 1, got {k}")
    return 2 * (k.bit_length() - 1) + 1


def raw_dl(n: int, sigma_size: int) -> float:
    """Bits to store n tokens verbatim: length header plus n symbols."""
    if n < 0 or sigma_size < 1:
        raise ValueError("need n >= 0 and sigma_size >= 1")
    return gamma_len(n + 1) + n * math.log2(sigma_size)


def _denominator(graph: "ConceptGraph") -> float:
    return graph.codeable_weight() + graph.codeable_count() + 1.0


def ref_cost(graph: "ConceptGraph", cid: int) -> float:
    if not graph.is_codeable(cid):
        raise UnknownConcept(f"concept {cid} is not in the reference code")
    w = graph.concept(cid).weight
    return math.log2(_denominator(graph)) - math.log2(w + 1.0)


def escape_cost(graph: "ConceptGraph") -> float:
    """Cost of the escape symbol that introduces a raw blob."""
    return math.log2(_denominator(graph))


def blob_cost(graph: "ConceptGraph", length: int, sigma_size: Optional[int] = None) -> float:
    if length < 1:
        raise ValueError("blob length must be >= 1")
    if sigma_size is None:
        sigma_size = len(graph.alphabet)
    return escape_cost(graph) + gamma_len(length) + length * math.log2(sigma_size)


def description_dl(graph: "ConceptGraph", desc: "Description") -> float:
    """Bits for one description: node-count header plus per-node costs.

    Referenced concept definitions are not recounted here; they live in
    model_dl (two-part code).
    """
    total = float(gamma_len(len(desc.nodes) + 1))
    sigma_bits = math.log2(len(graph.alphabet))
    log_d = math.log2(_denominator(graph))
    for node in desc.nodes:
        concept = getattr(node, "concept", None)
        if concept is not None:
            if not (0 <= concept < len(graph)) or not graph.is_parseable(concept):
                raise InvalidDescription(f"ref to non-expanding concept {concept}")
            total += log_d - math.log2(graph.concept(concept).weight + 1.0)
        else:
            tokens = node.tokens
            if not tokens:
                raise InvalidDescription("empty blob")
            total += log_d + gamma_len(len(tokens)) + len(tokens) * sigma_bits
    return total


def concept_model_dl(graph: "ConceptGraph", cid: int,
                     log_d: Optional[float] = None,
                     weight_of: Optional[Callable[[int], float]] = None) -> float:
    """Model bits for one definition: 2-bit kind header, body-count gamma,
    children coded with ref_cost; Repeat adds gamma_len(count), holes are
    coded as escape plus their index."""
    if log_d is None:
        log_d = math.log2(_denominator(graph))
    if weight_of is None:
        weight_of = lambda c: graph.concept(c).weight

    def rc(child: int) -> float:
        return log_d - math.log2(weight_of(child) + 1.0)

    kind = graph.concept(cid).kind
    if isinstance(kind, Concat):
        return 2.0 + gamma_len(len(kind.children)) + sum(rc(c) for c in kind.children)
    if isinstance(kind, Repeat):
        return 2.0 + gamma_len(1) + rc(kind.child) + gamma_len(kind.count)
    if isinstance(kind, Template):
        bits = 2.0 + gamma_len(len(kind.body))
        for slot in kind.body:
            if isinstance(slot, Hole):
                bits += log_d + gamma_len(slot.index + 1)
            else:
                bits += rc(slot.concept)
        return bits
    if isinstance(kind, Apply):
        return (2.0 + gamma_len(1 + len(kind.fillers)) + rc(kind.template)
                + sum(rc(c) for c in kind.fillers))
    return 0.0


def model_dl(graph: "ConceptGraph") -> float:
    """Total bits for all stored non-primitive definitions."""
    log_d = math.log2(_denominator(graph))
    total = 0.0
    for concept in graph.concepts:
        if graph.is_codeable(concept.id) and not isinstance(concept.kind, Primitive):
            total += concept_model_dl(graph, concept.id, log_d=log_d)
    return total


def attention(graph: "ConceptGraph", tokens, desc: "Description") -> float:
    """raw bits minus described bits; large when a complex input maps to a
    simple description."""
    from .inducer import reconstruct

    tokens = tuple(tokens)
    if reconstruct(graph, desc) != tokens:
        raise ReconstructionMismatch("description does not reconstruct the tokens")
    return raw_dl(len(tokens), len(graph.alphabet)) - description_dl(graph, desc)


def stored_description_dl(graph: "ConceptGraph") -> float:
    """Sum of description bits over every stored refinement level."""
    total = 0.0
    for chain in graph.refinement_store.values():
        for desc in chain:
            total += description_dl(graph, desc)
    return total


def two_part_total(graph: "ConceptGraph", extra_descs=()) -> float:
    """model bits + stored description bits: the induction objective."""
    total = model_dl(graph) + stored_description_dl(graph)
    for desc in extra_descs:
        total += description_dl(graph, desc)
    return total


def kraft_sum(graph: "ConceptGraph") -> float:
    """Sum of 2^-cost over the reference code plus the escape symbol."""
    total = 2.0 ** -escape_cost(graph)
    for cid in graph.codeable_ids():
        total += 2.0 ** -ref_cost(graph, cid)
    return total


def graph_report(graph: "ConceptGraph") -> DLReport:
    """Cumulative accounting: raw bits seen vs stored description bits."""
    return DLReport(
        raw_bits=graph.raw_bits_total,
        described_bits=stored_description_dl(graph),
        model_bits=model_dl(graph),
    )
