"""Bottom-up synthesis of an ensemble of integer functions from examples.

Terms are built from variables, the constants 0 and 1, calls to library
functions, and a bounded iteration combinator that applies a one-open-slot
section of a library function n times to a seed.  Enumeration is by
ascending term size with a fixed order inside each size, so the returned
term is the canonical smallest one consistent with every example.  Each
learned function joins the library and becomes a building block for the
rest, which is what lets later, harder functions become reachable at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

from .errors import ArityMismatch, IterCountExceeded, MalformedTerm, Overflow
from . import sexpr

DEFAULT_ITER_CAP = 100
DEFAULT_VALUE_CAP = 10**6
DEFAULT_SIZE_CAP = 7


@dataclass(frozen=True, slots=True)
class Var:
    index: int


@dataclass(frozen=True, slots=True)
class Const:
    value: int  # 0 or 1


@dataclass(frozen=True, slots=True)
class Call:
    fn: str
    args: tuple


@dataclass(frozen=True, slots=True)
class Section:
    """A library function with exactly one open slot; other slots hold leaves."""

    fn: str
    open_slot: int
    fillers: tuple  # Var/Const leaves for the remaining slots, in order


@dataclass(frozen=True, slots=True)
class Iter:
    section: Section
    count: "Term"
    seed: "Term"


Term = Union[Var, Const, Call, Iter]


def section_size(section: Section) -> int:
    return 1 + len(section.fillers)


def term_size(term: Term) -> int:
    if isinstance(term, (Var, Const)):
        return 1
    if isinstance(term, Call):
        return 1 + sum(term_size(a) for a in term.args)
    if isinstance(term, Iter):
        return 1 + section_size(term.section) + term_size(term.count) + term_size(term.seed)
    raise MalformedTerm(f"unknown term {term!r}")


@dataclass
class LibraryFn:
    name: str
    arity: int
    definition: Optional[Term]  # None marks a builtin


def _builtin_succ(x: int) -> int:
    return x + 1


_BUILTINS: dict[str, Callable] = {"succ": _builtin_succ}


class Library:
    """Ordered function store; definitions only reference earlier entries."""

    def __init__(self, entries: Optional[list[LibraryFn]] = None):
        self.entries: list[LibraryFn] = list(entries or [])
        self._by_name = {fn.name: i for i, fn in enumerate(self.entries)}
        if len(self._by_name) != len(self.entries):
            raise ValueError("duplicate function names")

    @staticmethod
    def initial() -> "Library":
        return Library([LibraryFn("succ", 1, None)])

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def fn(self, name: str) -> LibraryFn:
        idx = self._by_name.get(name)
        if idx is None:
            raise MalformedTerm(f"unknown function {name!r}")
        return self.entries[idx]

    def define(self, name: str, arity: int, definition: Term) -> None:
        if name in self._by_name:
            raise ValueError(f"function {name!r} already defined")
        self._by_name[name] = len(self.entries)
        self.entries.append(LibraryFn(name, arity, definition))

    def copy(self) -> "Library":
        return Library(list(self.entries))


class _Evaluator:
    """Term interpreter with value/iteration caps and a per-fn memo."""

    def __init__(self, library: Library, iter_cap: int, value_cap: int):
        self.library = library
        self.iter_cap = iter_cap
        self.value_cap = value_cap
        self.memo: dict[tuple[str, tuple[int, ...]], int] = {}

    def eval(self, term: Term, inputs: tuple[int, ...]) -> int:
        if isinstance(term, Var):
            if not 0 <= term.index < len(inputs):
                raise MalformedTerm(f"var {term.index} out of range for arity {len(inputs)}")
            return inputs[term.index]
        if isinstance(term, Const):
            return term.value
        if isinstance(term, Call):
            fn = self.library.fn(term.fn)
            if len(term.args) != fn.arity:
                raise MalformedTerm(f"{term.fn} expects {fn.arity} args")
            values = tuple(self.eval(a, inputs) for a in term.args)
            return self.apply(fn, values)
        if isinstance(term, Iter):
            count = self.eval(term.count, inputs)
            if count > self.iter_cap:
                raise IterCountExceeded(f"iteration count {count} exceeds cap {self.iter_cap}")
            value = self.eval(term.seed, inputs)
            fn = self.library.fn(term.section.fn)
            if len(term.section.fillers) != fn.arity - 1:
                raise MalformedTerm("section fillers do not match arity")
            filled = [self.eval(f, inputs) for f in term.section.fillers]
            slot = term.section.open_slot
            if not 0 <= slot < fn.arity:
                raise MalformedTerm("section open slot out of range")
            for _ in range(count):
                args = filled[:slot] + [value] + filled[slot:]
                value = self.apply(fn, tuple(args))
            return value
        raise MalformedTerm(f"unknown term {term!r}")

    def apply(self, fn: LibraryFn, values: tuple[int, ...]) -> int:
        if fn.definition is None:
            result = _BUILTINS[fn.name](*values)
        else:
            key = (fn.name, values)
            cached = self.memo.get(key)
            if cached is not None:
                result = cached
            else:
                result = self.eval(fn.definition, values)
                self.memo[key] = result
        if result > self.value_cap:
            raise Overflow(f"value {result} exceeds cap {self.value_cap}")
        return result


def eval_term(term: Term, inputs: Sequence[int], library: Library,
              iter_cap: int = DEFAULT_ITER_CAP,
              value_cap: int = DEFAULT_VALUE_CAP) -> int:
    """Evaluate a term on concrete inputs; raises Overflow/IterCountExceeded."""
    return _Evaluator(library, iter_cap, value_cap).eval(term, tuple(inputs))


@dataclass(frozen=True)
class FunctionExample:
    label: str
    inputs: tuple[int, ...]
    output: int


def _leaves(arity: int) -> list[Term]:
    return [Var(i) for i in range(arity)] + [Const(0), Const(1)]


def _sections(library: Library, arity: int) -> list[Section]:
    """All one-open-slot sections, in (fn index, slot, filler order)."""
    leaves = _leaves(arity)
    out: list[Section] = []
    for fn in library.entries:
        for slot in range(fn.arity):
            if fn.arity == 1:
                out.append(Section(fn.name, slot, ()))
                continue
            stack: list[tuple] = [()]
            for _ in range(fn.arity - 1):
                stack = [fillers + (leaf,) for fillers in stack for leaf in leaves]
            out.extend(Section(fn.name, slot, fillers) for fillers in stack)
    return out


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """Ordered compositions of `total` into `parts` positive integers."""
    if parts == 1:
        return [(total,)] if total >= 1 else []
    out = []
    for head in range(1, total - parts + 2):
        for rest in _compositions(total - head, parts - 1):
            out.append((head,) + rest)
    return out


class _Enumerator:
    """Terms by ascending size in a fixed order: Var < Const < Calls by
    registration index < Iter (sections by fn index, slot, fillers)."""

    def __init__(self, library: Library, arity: int):
        self.library = library
        self.arity = arity
        self.by_size: dict[int, list[Term]] = {1: _leaves(arity)}
        self.sections = _sections(library, arity)

    def terms_of(self, size: int) -> list[Term]:
        cached = self.by_size.get(size)
        if cached is not None:
            return cached
        out: list[Term] = []
        for fn in self.library.entries:
            for shape in _compositions(size - 1, fn.arity):
                pools = [self.terms_of(s) for s in shape]
                stack: list[tuple] = [()]
                for pool in pools:
                    stack = [args + (t,) for args in stack for t in pool]
                out.extend(Call(fn.name, args) for args in stack)
        for section in self.sections:
            budget = size - 1 - section_size(section)
            for count_size in range(1, budget):
                seed_size = budget - count_size
                for count in self.terms_of(count_size):
                    for seed in self.terms_of(seed_size):
                        out.append(Iter(section, count, seed))
        self.by_size[size] = out
        return out


def synthesize(examples: Sequence[FunctionExample], library: Library,
               size_cap: int = DEFAULT_SIZE_CAP,
               iter_cap: int = DEFAULT_ITER_CAP,
               value_cap: int = DEFAULT_VALUE_CAP) -> Optional[Term]:
    """Smallest term consistent with every example, or None if unlearnable.

    Overflow and iteration-cap breaches count as inconsistency, not errors.
    """
    if not examples:
        raise ArityMismatch("need at least one example")
    arity = len(examples[0].inputs)
    if any(len(ex.inputs) != arity for ex in examples):
        raise ArityMismatch("inconsistent example arity")
    rows = [(ex.inputs, ex.output) for ex in examples]
    evaluator = _Evaluator(library, iter_cap, value_cap)
    enum = _Enumerator(library, arity)
    for size in range(1, size_cap + 1):
        for term in enum.terms_of(size):
            ok = True
            for inputs, output in rows:
                try:
                    if evaluator.eval(term, inputs) != output:
                        ok = False
                        break
                except (Overflow, IterCountExceeded):
                    ok = False
                    break
            if ok:
                return term
    return None


def learn_all(example_sets: Sequence[tuple[str, Sequence[FunctionExample]]],
              library: Optional[Library] = None,
              size_cap: int = DEFAULT_SIZE_CAP,
              iter_cap: int = DEFAULT_ITER_CAP,
              value_cap: int = DEFAULT_VALUE_CAP) -> tuple[Library, list[str]]:
    """Learn every label it can, in repeated passes over the input order.

    Each success is appended to the library immediately, so later labels in
    the same pass can already build on it.  A label is only re-attempted
    after the library has grown (the search is deterministic, so an
    unchanged library would repeat the same failure).
    """
    library = library.copy() if library is not None else Library.initial()
    labels = [label for label, _ in example_sets]
    sets = dict(example_sets)
    unsolved = [label for label in labels if label not in library]
    attempted_at: dict[str, int] = {}
    progress = True
    while progress and unsolved:
        progress = False
        still: list[str] = []
        for label in unsolved:
            if attempted_at.get(label) == len(library):
                still.append(label)
                continue
            attempted_at[label] = len(library)
            term = synthesize(sets[label], library, size_cap, iter_cap, value_cap)
            if term is None:
                still.append(label)
            else:
                library.define(label, len(sets[label][0].inputs), term)
                progress = True
        unsolved = still
    return library, unsolved


# ----------------------------------------------------------------------
# external text formats

def parse_examples_text(text: str) -> list[tuple[str, list[FunctionExample]]]:
    """`label arity in1 .. inN out` per line; returns sets in input order."""
    sets: dict[str, list[FunctionExample]] = {}
    order: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 3:
            raise ValueError(f"line {lineno}: expected 'label arity in... out'")
        label = parts[0]
        try:
            arity = int(parts[1])
            numbers = [int(p) for p in parts[2:]]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if len(numbers) != arity + 1:
            raise ValueError(f"line {lineno}: arity {arity} needs {arity + 1} numbers")
        example = FunctionExample(label, tuple(numbers[:-1]), numbers[-1])
        if label not in sets:
            sets[label] = []
            order.append(label)
        if sets[label] and len(sets[label][0].inputs) != arity:
            raise ArityMismatch(f"line {lineno}: arity mismatch for {label!r}")
        sets[label].append(example)
    return [(label, sets[label]) for label in order]


def term_to_sexpr(term: Term) -> str:
    if isinstance(term, Var):
        return f"(var {term.index})"
    if isinstance(term, Const):
        return f"(const {term.value})"
    if isinstance(term, Call):
        inner = " ".join(term_to_sexpr(a) for a in term.args)
        return f"(call {term.fn} {inner})" if inner else f"(call {term.fn})"
    if isinstance(term, Iter):
        sec = term.section
        fillers = "".join(" " + term_to_sexpr(f) for f in sec.fillers)
        return (f"(iter (sec {sec.fn} {sec.open_slot}{fillers}) "
                f"{term_to_sexpr(term.count)} {term_to_sexpr(term.seed)})")
    raise MalformedTerm(f"unknown term {term!r}")


def term_from_sexpr(node) -> Term:
    if not isinstance(node, list) or not node:
        raise MalformedTerm(f"bad term node {node!r}")
    head = node[0]
    if head == "var":
        return Var(int(node[1]))
    if head == "const":
        return Const(int(node[1]))
    if head == "call":
        return Call(str(node[1]), tuple(term_from_sexpr(a) for a in node[2:]))
    if head == "iter":
        sec = node[1]
        if not isinstance(sec, list) or sec[0] != "sec":
            raise MalformedTerm("iter needs a (sec ...) section")
        section = Section(str(sec[1]), int(sec[2]),
                          tuple(term_from_sexpr(f) for f in sec[3:]))
        return Iter(section, term_from_sexpr(node[2]), term_from_sexpr(node[3]))
    raise MalformedTerm(f"unknown term head {head!r}")


def library_to_lines(library: Library) -> list[str]:
    """One s-expression per entry, already in dependency order."""
    lines = []
    for fn in library.entries:
        if fn.definition is None:
            lines.append(f"(builtin {fn.name} {fn.arity})")
        else:
            lines.append(f"(def {fn.name} {fn.arity} {term_to_sexpr(fn.definition)})")
    return lines


def library_from_lines(lines: Iterable[str]) -> Library:
    entries: list[LibraryFn] = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        node = sexpr.parse_one(line)
        if node[0] == "builtin":
            entries.append(LibraryFn(str(node[1]), int(node[2]), None))
        elif node[0] == "def":
            entries.append(LibraryFn(str(node[1]), int(node[2]), term_from_sexpr(node[3])))
        else:
            raise MalformedTerm(f"unknown library line {line!r}")
    return Library(entries)
