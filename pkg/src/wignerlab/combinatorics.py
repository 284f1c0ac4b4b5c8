"""Closed words, sentences and their multigraphs.

A word is a tuple of positive integer letters starting at 1. Its walk
defines an undirected multigraph whose edges are unordered letter pairs;
the passage count of an edge is the number of steps that traverse it in
either direction.  Words (and pairs of words) are considered up to a
relabeling of letters, and every class is represented by its canonical
form: letters are renumbered 1, 2, 3, ... in order of first occurrence.

Enumeration generates canonical forms directly by depth first search, so
no deduplication pass is needed.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

Edge = tuple[int, int]

WORD_CAP = 10
PAIR_CAP = 14

FILTERS = ("all", "U", "V", "weak_wigner", "wigner", "A")


class EnumerationCapError(ValueError):
    """Raised when an enumeration request exceeds the configured size cap."""


def edge(u: int, v: int) -> Edge:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Word:
    """A word starting at letter 1."""

    letters: tuple[int, ...]

    def __post_init__(self):
        letters = tuple(int(s) for s in self.letters)
        if not letters:
            raise ValueError("a word needs at least one letter")
        if letters[0] != 1:
            raise ValueError(f"words must start at 1, got {letters}")
        if min(letters) < 1:
            raise ValueError("letters must be positive integers")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, i):
        return self.letters[i]

    def __str__(self) -> str:
        return ",".join(map(str, self.letters))

    @property
    def closed(self) -> bool:
        return self.letters[0] == self.letters[-1]

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.letters)

    @property
    def weight(self) -> int:
        return len(set(self.letters))

    def steps(self) -> Iterator[Edge]:
        for u, v in zip(self.letters, self.letters[1:]):
            yield edge(u, v)

    @classmethod
    def parse(cls, text: str) -> "Word":
        return cls(tuple(int(s) for s in text.replace("(", "").replace(")", "").split(",") if s.strip()))


def as_word(w: Word | Sequence[int]) -> Word:
    return w if isinstance(w, Word) else Word(tuple(w))


@dataclass(frozen=True)
class WordGraph:
    vertices: frozenset[int]
    passage_count: Mapping[Edge, int]
    self_edges: frozenset[Edge] = field(init=False)
    connecting_edges: frozenset[Edge] = field(init=False)

    def __post_init__(self):
        counts = dict(sorted(self.passage_count.items()))
        object.__setattr__(self, "passage_count", counts)
        object.__setattr__(self, "self_edges", frozenset(e for e in counts if e[0] == e[1]))
        object.__setattr__(self, "connecting_edges", frozenset(e for e in counts if e[0] != e[1]))

    @property
    def edges(self) -> frozenset[Edge]:
        return frozenset(self.passage_count)

    @property
    def total_passages(self) -> int:
        return sum(self.passage_count.values())

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        adj: dict[int, set[int]] = {v: set() for v in self.vertices}
        for u, v in self.passage_count:
            adj[u].add(v)
            adj[v].add(u)
        start = next(iter(self.vertices))
        seen = {start}
        stack = [start]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(self.vertices)


@dataclass(frozen=True)
class Sentence:
    words: tuple[Word, ...]

    def __post_init__(self):
        words = tuple(as_word(w) for w in self.words)
        if not words:
            raise ValueError("a sentence needs at least one word")
        object.__setattr__(self, "words", words)

    @property
    def support(self) -> frozenset[int]:
        return frozenset().union(*(w.support for w in self.words))

    @property
    def weight(self) -> int:
        return len(self.support)

    @property
    def graph(self) -> WordGraph:
        return build_graph(self)


class PairKind(enum.Enum):
    TREE = "tree"
    CYCLE = "cycle"


def passage_counts(word: Word | Sequence[int]) -> Counter:
    letters = tuple(word)
    return Counter(edge(u, v) for u, v in zip(letters, letters[1:]))


def build_graph(sentence: Sentence | Word | Sequence[int]) -> WordGraph:
    """Graph of a word or sentence; passage counts are summed across words."""
    if isinstance(sentence, Sentence):
        words = sentence.words
    else:
        words = (as_word(sentence),)
    counts: Counter = Counter()
    vertices: set[int] = set()
    for w in words:
        counts.update(passage_counts(w))
        vertices.update(w.letters)
    return WordGraph(frozenset(vertices), dict(counts))


def _relabel(words: Iterable[Sequence[int]]) -> list[tuple[int, ...]]:
    mapping: dict[int, int] = {}
    out = []
    for w in words:
        new = []
        for s in w:
            if s not in mapping:
                mapping[s] = len(mapping) + 1
            new.append(mapping[s])
        out.append(tuple(new))
    return out


def canonicalize(word: Word | Sequence[int]) -> Word:
    """Relabel letters by order of first occurrence (1 stays 1)."""
    w = as_word(word)
    return Word(_relabel([w.letters])[0])


def canonicalize_sentence(words: Sequence[Word | Sequence[int]]) -> tuple[Word, ...]:
    """Joint relabeling of all words, scanning them in order."""
    ws = [as_word(w) for w in words]
    return tuple(Word(x) for x in _relabel([w.letters for w in ws]))


def is_canonical(word: Word | Sequence[int]) -> bool:
    return tuple(as_word(word)) == tuple(canonicalize(word))


def equivalent(w1: Word | Sequence[int], w2: Word | Sequence[int]) -> bool:
    return canonicalize(w1) == canonicalize(w2)


def simplify(word: Word | Sequence[int]) -> Word:
    """Collapse each run of equal adjacent letters to one letter."""
    w = as_word(word)
    out = [w.letters[0]]
    for s in w.letters[1:]:
        if s != out[-1]:
            out.append(s)
    return Word(tuple(out))


@dataclass(frozen=True)
class WordClass:
    weak_wigner: bool
    wigner: bool
    in_U: bool
    in_A: bool


def _is_wigner(w: Word) -> bool:
    if len(w) == 1:
        return True
    if not w.closed:
        return False
    counts = passage_counts(w)
    return all(c >= 2 for c in counts.values()) and 2 * w.weight == len(w) + 1


def classify_word(word: Word | Sequence[int]) -> WordClass:
    """Word-level classes used throughout.

    ``in_A`` holds when the walk crosses the loop (1,1) exactly once, that
    crossing is its only self-edge step, and dropping it leaves a Wigner
    word.  Such words have length k+1 with k odd.
    """
    w = as_word(word)
    if not w.closed:
        raise ValueError(f"word {w} is not closed")
    counts = passage_counts(w)
    weak = all(c >= 2 for c in counts.values())
    wigner = _is_wigner(w)
    self_steps = sum(c for e, c in counts.items() if e[0] == e[1])
    in_U = self_steps == 0
    in_A = counts.get((1, 1), 0) == 1 and self_steps == 1 and _is_wigner(simplify(w))
    return WordClass(weak_wigner=weak, wigner=wigner, in_U=in_U, in_A=in_A)


@dataclass(frozen=True)
class PairClass:
    weak_clt: bool
    clt: bool
    kind: PairKind | None
    weight: int
    n_edges: int


def classify_pair(w1: Word | Sequence[int], w2: Word | Sequence[int]) -> PairClass:
    """Classify a pair of closed words as weak CLT / CLT pair.

    For CLT pairs the tree/cycle dichotomy is checked together with its
    passage-count signature; a violation raises ``AssertionError``.
    """
    a, b = as_word(w1), as_word(w2)
    if not (a.closed and b.closed):
        raise ValueError("CLT pairs are made of closed words")
    c1, c2 = passage_counts(a), passage_counts(b)
    total = c1 + c2
    weak = all(c >= 2 for c in total.values()) and bool(set(c1) & set(c2))
    weight = len(set(a.letters) | set(b.letters))
    n_edges = len(total)
    clt = weak and 2 * weight == len(a) + len(b) - 2
    kind = None
    if clt:
        if weight == n_edges + 1:
            kind = PairKind.TREE
            fours = [e for e, c in total.items() if c == 4]
            assert len(fours) == 1 and all(c in (2, 4) for c in total.values()), (a, b)
        elif weight == n_edges:
            kind = PairKind.CYCLE
            assert all(c == 2 for c in total.values()), (a, b)
        else:
            raise AssertionError(f"CLT pair {a}, {b} violates the tree/cycle dichotomy")
    return PairClass(weak_clt=weak, clt=clt, kind=kind, weight=weight, n_edges=n_edges)


# -- enumeration -------------------------------------------------------------


def _check_cap(size: int, cap: int | None, default: int, what: str) -> None:
    limit = default if cap is None else cap
    if size > limit:
        raise EnumerationCapError(f"enumeration cap exceeded: {what}={size} > {limit}")


def _closed_words(k: int, no_self: bool = False, max_count: int | None = None,
                  need_revisit: bool = False, max_letter: int | None = None) -> Iterator[tuple[int, ...]]:
    """Canonical closed words of length k+1 in lexicographic order.

    Optional pruning: ``no_self`` forbids equal adjacent letters,
    ``max_count`` bounds every passage count, ``need_revisit`` requires
    that edges crossed once so far can still be crossed again.
    """
    letters = [1]
    counts: Counter = Counter()
    singles = 0

    def rec(top: int) -> Iterator[tuple[int, ...]]:
        nonlocal singles
        pos = len(letters)
        remaining = k + 1 - pos  # steps still to take, including this one
        if remaining == 0:
            if letters[-1] == 1:
                yield tuple(letters)
            return
        last = letters[-1]
        if remaining == 1:
            choices: Iterable[int] = (1,)
        else:
            limit = top + 1 if max_letter is None else min(top + 1, max_letter)
            choices = range(1, limit + 1)
        for s in choices:
            if no_self and s == last:
                continue
            e = edge(last, s)
            c = counts[e]
            if max_count is not None and c + 1 > max_count:
                continue
            counts[e] = c + 1
            delta = 1 if c == 0 else (-1 if c == 1 else 0)
            singles += delta
            if not need_revisit or singles <= remaining - 1:
                letters.append(s)
                yield from rec(max(top, s))
                letters.pop()
            singles -= delta
            counts[e] = c
            if c == 0:
                del counts[e]

    if k == 0:
        yield (1,)
        return
    yield from rec(1)


def word_filter(name: str) -> Callable[[Word], bool]:
    if name not in FILTERS:
        raise ValueError(f"unknown filter {name!r}; expected one of {FILTERS}")
    if name == "all":
        return lambda w: True
    if name == "U":
        return lambda w: classify_word(w).in_U
    if name == "V":
        return lambda w: not classify_word(w).in_U
    return lambda w: getattr(classify_word(w), {"A": "in_A"}.get(name, name))


def enumerate_words(k: int, filter: str = "all", cap: int | None = None) -> Iterator[Word]:
    """Canonical closed words of length k+1 in a class, lexicographically.

    ``filter`` is one of ``all``, ``U`` (no self edge), ``V`` (some self
    edge), ``weak_wigner``, ``wigner`` or ``A``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_cap(k, cap, WORD_CAP, "k")
    keep = word_filter(filter)
    prune = {}
    if filter == "U":
        prune = dict(no_self=True)
    elif filter == "weak_wigner":
        prune = dict(need_revisit=True)
    elif filter == "wigner":
        if k % 2:
            return
        prune = dict(no_self=True, max_count=2, need_revisit=True, max_letter=k // 2 + 1)
    elif filter == "A":
        if k % 2 == 0:
            return
        prune = dict(max_letter=(k + 1) // 2)
    for letters in _closed_words(k, **prune):
        w = Word(letters)
        if keep(w):
            yield w


def count_words(k: int, filter: str = "all", cap: int | None = None) -> int:
    return sum(1 for _ in enumerate_words(k, filter, cap))


def _pair_search(k1: int, k2: int, target_weight: int | None, no_self: bool) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Jointly canonical pairs of closed words of lengths k1+1, k2+1.

    With ``target_weight`` set the search only yields pairs whose union
    graph has all passage counts >= 2 and exactly that weight, pruning
    branches that can no longer reach it.
    """
    total_steps = k1 + k2
    seq = [1]
    counts: Counter = Counter()
    singles = 0
    boundary = k1 + 1  # index in seq where w2 starts

    def rec(top: int, steps_done: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
        nonlocal singles
        pos = len(seq)
        if pos == boundary:
            # w2 starts at 1; no step between the two words
            seq.append(1)
            yield from rec(top, steps_done)
            seq.pop()
            return
        if pos == k1 + k2 + 2:
            if target_weight is not None and (top != target_weight or singles):
                return
            yield tuple(seq[:boundary]), tuple(seq[boundary:])
            return
        last = seq[-1]
        end_of_word = pos == boundary - 1 or pos == k1 + k2 + 1
        remaining = total_steps - steps_done  # including this step
        if end_of_word:
            choices: Iterable[int] = (1,)
        else:
            limit = top + 1
            if target_weight is not None:
                limit = min(limit, target_weight)
            choices = range(1, limit + 1)
        for s in choices:
            if no_self and s == last:
                continue
            e = edge(last, s)
            c = counts[e]
            counts[e] = c + 1
            delta = 1 if c == 0 else (-1 if c == 1 else 0)
            singles += delta
            new_top = max(top, s)
            ok = True
            if target_weight is not None:
                left = remaining - 1
                ok = (singles + 2 * (target_weight - new_top) <= left
                      and 2 * len(counts) <= total_steps)
            if ok:
                seq.append(s)
                yield from rec(new_top, steps_done + 1)
                seq.pop()
            singles -= delta
            counts[e] = c
            if c == 0:
                del counts[e]

    yield from rec(1, 0)


def enumerate_clt_pairs(k1: int, k2: int, cap: int | None = None) -> Iterator[tuple[Word, Word, PairKind]]:
    """Representatives of CLT pairs of self-edge-free words.

    Words have lengths k1+1 and k2+1; classes are taken under a joint
    relabeling of both words.  Empty when k1+k2 is odd.
    """
    if k1 < 2 or k2 < 2:
        raise ValueError("CLT pairs are enumerated for k1, k2 >= 2")
    _check_cap(k1 + k2, cap, PAIR_CAP, "k1+k2")
    if (k1 + k2) % 2:
        return
    target = (k1 + k2) // 2
    for a, b in _pair_search(k1, k2, target, no_self=True):
        pc = classify_pair(a, b)
        if pc.clt:
            yield Word(a), Word(b), pc.kind


def enumerate_pairs(k1: int, k2: int, filter: str = "all", cap: int | None = None) -> Iterator[tuple[Word, Word]]:
    """Every jointly canonical pair of closed words (brute force).

    ``filter`` restricts both words to ``all`` or ``U``.  This is the
    unpruned scan used to cross-check :func:`enumerate_clt_pairs`.
    """
    if filter not in ("all", "U"):
        raise ValueError("pair filter must be 'all' or 'U'")
    _check_cap(k1 + k2, cap, PAIR_CAP, "k1+k2")
    for a, b in _pair_search(k1, k2, None, no_self=filter == "U"):
        yield Word(a), Word(b)
