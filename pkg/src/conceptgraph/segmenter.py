"""Contrast-based stream segmentation and the smoothness detector."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import WrongKind

SCALAR = "scalar"
TOKEN = "token"

SMOOTH = "smooth"
ROUGH = "rough"


@dataclass(frozen=True)
class RawStream:
    samples: tuple
    kind: str

    @staticmethod
    def scalars(samples: Sequence[int]) -> "RawStream":
        return RawStream(tuple(int(s) for s in samples), SCALAR)

    @staticmethod
    def tokens(samples: Sequence[str]) -> "RawStream":
        return RawStream(tuple(samples), TOKEN)

    @staticmethod
    def from_text(text: str) -> "RawStream":
        return RawStream(tuple(text), TOKEN)


@dataclass(frozen=True)
class Segment:
    start: int
    end: int  # exclusive
    payload: tuple

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError("segment bounds must satisfy 0 <= start < end")


def _segments_from_boundaries(samples: tuple, cuts: list[int]) -> list[Segment]:
    # cuts are positions i such that a boundary sits between i and i+1
    out = []
    start = 0
    for cut in cuts:
        out.append(Segment(start, cut + 1, samples[start:cut + 1]))
        start = cut + 1
    if start < len(samples):
        out.append(Segment(start, len(samples), samples[start:]))
    return out


def segment_scalar(stream: RawStream, contrast_threshold: float) -> list[Segment]:
    """Cut wherever the jump between adjacent samples exceeds the threshold."""
    if stream.kind != SCALAR:
        raise WrongKind("segment_scalar needs a scalar stream")
    samples = stream.samples
    cuts = [i for i in range(len(samples) - 1)
            if abs(samples[i + 1] - samples[i]) > contrast_threshold]
    return _segments_from_boundaries(samples, cuts)


def segment_tokens(stream: RawStream, class_of: Callable[[str], object]) -> list[Segment]:
    """Cut wherever the class label changes between adjacent tokens."""
    if stream.kind != TOKEN:
        raise WrongKind("segment_tokens needs a token stream")
    samples = stream.samples
    cuts = [i for i in range(len(samples) - 1)
            if class_of(samples[i + 1]) != class_of(samples[i])]
    return _segments_from_boundaries(samples, cuts)


def smoothness(stream: RawStream, threshold: float) -> str:
    """SMOOTH iff every second difference is bounded by the threshold.

    Streams shorter than 3 samples are vacuously smooth.
    """
    if stream.kind != SCALAR:
        raise WrongKind("smoothness needs a scalar stream")
    samples = stream.samples
    if len(samples) < 3:
        return SMOOTH
    worst = max(abs(samples[i + 2] - 2 * samples[i + 1] + samples[i])
                for i in range(len(samples) - 2))
    return SMOOTH if worst <= threshold else ROUGH


def identity_token_class(token: str) -> str:
    """Finest contrast reading: every symbol change is a boundary, so
    segments are maximal runs of one symbol."""
    return token
