"""Subshifts of finite type and their clopen subsets.

Convention used throughout: the shift acts by ``(Tx)_i = x_{i+1}``, so
``T^n [w]_a = [w]_{a-n}``.

A clopen set is a window ``[a, b]`` together with a set of admissible words
of length ``b - a + 1``.  Word sets are stored as hash-consed layered
decision diagrams: node ``0`` is the empty set, node ``1`` accepts the empty
word, every other node is a tuple of child ids indexed by symbol.  Because
nodes are interned bottom-up, two word sets on the same window are equal
exactly when their root ids are equal.
"""

from __future__ import annotations

import itertools
import sys
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import InvalidSymbol, SpaceMismatch

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

EMPTY, ACCEPT = 0, 1

_NODES: list[tuple[int, ...]] = [(), ()]
_INDEX: dict[tuple[int, ...], int] = {}


def _mk(children: tuple[int, ...]) -> int:
    if not any(children):
        return EMPTY
    nid = _INDEX.get(children)
    if nid is None:
        nid = len(_NODES)
        _NODES.append(children)
        _INDEX[children] = nid
    return nid


# node ids are canonical and carry their own depth, so memo tables are global
_MEMOS: dict[str, dict] = {"and": {}, "or": {}, "diff": {}}


def _apply(op: str, u: int, v: int, memo: dict | None = None) -> int:
    # u and v are roots of word sets of equal length
    if u == v:
        return EMPTY if op == "diff" else u
    if op == "and":
        if u == EMPTY or v == EMPTY:
            return EMPTY
    elif op == "or":
        if u == EMPTY:
            return v
        if v == EMPTY:
            return u
    else:
        if u == EMPTY:
            return EMPTY
        if v == EMPTY:
            return u
    if memo is None:
        memo = _MEMOS[op]
    key = (u, v) if (op == "diff" or u < v) else (v, u)
    hit = memo.get(key)
    if hit is not None:
        return hit
    res = _mk(tuple(_apply(op, a, b, memo) for a, b in zip(_NODES[u], _NODES[v])))
    memo[key] = res
    return res


_COUNTS: dict = {}


def _count(node: int, memo: dict) -> int:
    if node <= ACCEPT:
        return node
    hit = memo.get(node)
    if hit is None:
        hit = sum(_count(c, memo) for c in _NODES[node] if c)
        memo[node] = hit
    return hit


def _walk(node: int) -> Iterator[tuple[int, ...]]:
    if node == ACCEPT:
        yield ()
        return
    for s, c in enumerate(_NODES[node]):
        if c:
            for rest in _walk(c):
                yield (s,) + rest


def _truncate(node: int, keep: int, memo: dict) -> int:
    """Project a word set onto its first ``keep`` letters."""
    if node == EMPTY:
        return EMPTY
    if keep == 0:
        return ACCEPT
    key = (node, keep)
    hit = memo.get(key)
    if hit is None:
        hit = _mk(tuple(_truncate(c, keep - 1, memo) for c in _NODES[node]))
        memo[key] = hit
    return hit


def _drop_first(node: int) -> int:
    """Project a word set onto all letters but its first."""
    acc = EMPTY
    for c in _NODES[node]:
        if c:
            acc = _apply("or", acc, c)
    return acc


# ---------------------------------------------------------------------------
# Sft


class Sft:
    """An essential vertex shift (memory-1 subshift of finite type).

    ``alphabet`` holds the surviving symbol labels; symbol ``i`` may be
    followed by symbol ``j`` when ``j in succ[i]``.  Symbols pruned while
    making the graph essential are kept in ``removed``.
    """

    __slots__ = ("alphabet", "succ", "pred", "removed", "forbidden", "base_alphabet",
                 "block", "_succ_sets", "_index", "_tails", "_tail_level", "_full", "_key", "_ext")

    def __init__(self, alphabet: Sequence[str], edges: Iterable[tuple[int, int]],
                 removed: Sequence[str] = (), forbidden=None, base_alphabet=None, block: int = 1):
        self.alphabet = tuple(str(a) for a in alphabet)
        if len(set(self.alphabet)) != len(self.alphabet):
            raise InvalidSymbol("duplicate symbols in alphabet")
        q = len(self.alphabet)
        succ: list[set[int]] = [set() for _ in range(q)]
        pred: list[set[int]] = [set() for _ in range(q)]
        for i, j in edges:
            succ[i].add(j)
            pred[j].add(i)
        self.succ = tuple(tuple(sorted(s)) for s in succ)
        self.pred = tuple(tuple(sorted(p)) for p in pred)
        self._succ_sets = tuple(frozenset(s) for s in succ)
        self.removed = tuple(removed)
        self.forbidden = None if forbidden is None else tuple(forbidden)
        self.base_alphabet = tuple(base_alphabet) if base_alphabet is not None else self.alphabet
        self.block = block
        self._index = {a: i for i, a in enumerate(self.alphabet)}
        self._tails: dict[tuple[int, int], int] = {}
        self._tail_level = 0
        self._full: dict[int, int] = {}
        self._ext: dict[tuple[int, int], int] = {}
        self._key = (self.alphabet, self.succ)
        for i in range(q):
            if not self.succ[i] or not self.pred[i]:
                raise ValueError(f"graph is not essential at symbol {self.alphabet[i]!r}; "
                                 "use Sft.from_edges to prune")

    # construction -----------------------------------------------------------

    @classmethod
    def from_edges(cls, alphabet: Sequence[str], edges: Iterable[tuple[str, str]], **kw) -> "Sft":
        """Build from labelled edges, pruning sources and sinks."""
        alphabet = [str(a) for a in alphabet]
        index = {a: i for i, a in enumerate(alphabet)}
        pairs = set()
        for a, b in edges:
            if a not in index or b not in index:
                raise InvalidSymbol(f"edge {a}->{b} uses a symbol outside the alphabet")
            pairs.add((index[a], index[b]))
        alive = set(range(len(alphabet)))
        changed = True
        while changed:
            changed = False
            outs = {i for i, j in pairs if i in alive and j in alive}
            ins = {j for i, j in pairs if i in alive and j in alive}
            keep = alive & outs & ins
            if keep != alive:
                alive, changed = keep, True
        order = sorted(alive)
        renum = {old: new for new, old in enumerate(order)}
        kept = [(renum[i], renum[j]) for i, j in pairs if i in alive and j in alive]
        removed = [alphabet[i] for i in range(len(alphabet)) if i not in alive]
        return cls([alphabet[i] for i in order], kept, removed=removed, **kw)

    @property
    def is_empty(self) -> bool:
        return not self.alphabet

    @property
    def q(self) -> int:
        return len(self.alphabet)

    @property
    def sep(self) -> str:
        return "" if all(len(a) == 1 for a in self.alphabet) and all(
            len(a) == 1 for a in self.base_alphabet) else " "

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.q) for j in self.succ[i]]

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._succ_sets[i]

    def __eq__(self, other):
        return isinstance(other, Sft) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Sft(alphabet={list(self.alphabet)}, edges={len(self.edges())})"

    # words ------------------------------------------------------------------

    def encode(self, word) -> tuple[int, ...]:
        if isinstance(word, str):
            labels = list(word) if self.sep == "" else word.split()
        else:
            labels = [str(a) for a in word]
        try:
            return tuple(self._index[a] for a in labels)
        except KeyError as exc:
            raise InvalidSymbol(f"unknown symbol {exc.args[0]!r}") from None

    def decode(self, word: Sequence[int]) -> str:
        return self.sep.join(self.alphabet[s] for s in word)

    def is_admissible(self, word: Sequence[int]) -> bool:
        return all(self.has_edge(a, b) for a, b in zip(word, word[1:]))

    def words(self, n: int) -> Iterator[tuple[int, ...]]:
        """All admissible words of length ``n`` in lexicographic order."""
        yield from _walk(self._all(n)) if n > 0 else iter([()])

    # decision-diagram helpers -------------------------------------------------

    def _tail(self, s: int, n: int) -> int:
        """Words of length ``n`` that may follow symbol ``s``."""
        if n == 0:
            return ACCEPT
        hit = self._tails.get((s, n))
        if hit is None:
            for k in range(self._tail_level + 1, n + 1):
                for t in range(self.q):
                    ch = [EMPTY] * self.q
                    for u in self.succ[t]:
                        ch[u] = ACCEPT if k == 1 else self._tails[(u, k - 1)]
                    self._tails[(t, k)] = _mk(tuple(ch))
            self._tail_level = max(self._tail_level, n)
            hit = self._tails[(s, n)]
        return hit

    def _all(self, n: int) -> int:
        if n == 0:
            return ACCEPT
        hit = self._full.get(n)
        if hit is None:
            if self.is_empty:
                hit = EMPTY
            else:
                hit = _mk(tuple(self._tail(t, n - 1) for t in range(self.q)))
            self._full[n] = hit
        return hit

    def _bound_depth(self, node: int, n: int, prev: int, memo: dict) -> int:
        """Letters after which every path of ``node`` (words of length ``n``
        following ``prev``; ``-1`` for none) continues freely."""
        free = self._all(n) if prev < 0 else self._tail(prev, n)
        if node == free:
            return 0
        key = (node, prev)
        hit = memo.get(key)
        if hit is None:
            hit = 1 + max(self._bound_depth(c, n - 1, t, memo)
                          for t, c in enumerate(_NODES[node]) if c)
            memo[key] = hit
        return hit

    def _extend_left(self, node: int, e: int) -> int:
        for _ in range(e):
            ch = _NODES[node] if node > ACCEPT else ()
            node = _mk(tuple(
                _mk(tuple(ch[s] if s in self._succ_sets[t] else EMPTY for s in range(self.q)))
                for t in range(self.q)))
        return node

    def _extend_right(self, node: int, depth: int, e: int, memo: dict | None = None) -> int:
        if node == EMPTY or e == 0:
            return node
        memo = self._ext
        hit = memo.get((node, e))
        if hit is not None:
            return hit
        ch = _NODES[node]
        if depth == 1:
            res = _mk(tuple(self._tail(s, e) if c else EMPTY for s, c in enumerate(ch)))
        else:
            res = _mk(tuple(self._extend_right(c, depth - 1, e) for c in ch))
        memo[(node, e)] = res
        return res

    def _from_words(self, words: Iterable[Sequence[int]], length: int) -> int:
        """Decision diagram of a finite collection of admissible words."""
        trie: dict = {}
        for w in words:
            if len(w) != length:
                raise ValueError("words of mixed length")
            if not self.is_admissible(w):
                continue
            t = trie
            for s in w:
                t = t.setdefault(s, {})

        def build(t, depth):
            if depth == 0:
                return ACCEPT
            ch = [EMPTY] * self.q
            for s, sub in t.items():
                ch[s] = build(sub, depth - 1)
            return _mk(tuple(ch))

        return build(trie, length) if trie else EMPTY


def sft_from_forbidden(alphabet: Sequence[str], forbidden: Iterable) -> Sft:
    """Essential memory-1 presentation of the shift avoiding ``forbidden``.

    Forbidden words longer than two symbols are handled by recoding to
    blocks of length ``max_len - 1``; symbol ``i`` of the result then stands
    for the block ``x_i ... x_{i+max_len-2}``.
    """
    alphabet = [str(a) for a in alphabet]
    single = all(len(a) == 1 for a in alphabet)
    index = {a: i for i, a in enumerate(alphabet)}
    words = []
    for w in forbidden:
        labels = list(w) if isinstance(w, str) and single else (w.split() if isinstance(w, str) else list(w))
        if not labels:
            raise InvalidSymbol("forbidden words must be nonempty")
        for a in labels:
            if a not in index:
                raise InvalidSymbol(f"forbidden word {w!r} uses unknown symbol {a!r}")
        words.append(tuple(index[a] for a in labels))
    bad = set(words)
    longest = max((len(w) for w in words), default=1)

    def clean(w):
        return not any(w[i:j] in bad for i in range(len(w)) for j in range(i + 1, len(w) + 1))

    provenance = tuple("".join(alphabet[s] for s in w) if single else
                       " ".join(alphabet[s] for s in w) for w in words)
    if longest <= 2:
        edges = [(a, b) for a in alphabet for b in alphabet if clean((index[a], index[b]))]
        return Sft.from_edges(alphabet, edges, forbidden=provenance, base_alphabet=alphabet)
    k = longest - 1
    blocks = [w for w in itertools.product(range(len(alphabet)), repeat=k) if clean(w)]
    sep = "" if single else "."
    label = {w: sep.join(alphabet[s] for s in w) for w in blocks}
    edges = [(label[u], label[v]) for u in blocks for v in blocks
             if u[1:] == v[:-1] and clean(u + v[-1:])]
    return Sft.from_edges([label[w] for w in blocks], edges, forbidden=provenance,
                          base_alphabet=alphabet, block=k)


# ---------------------------------------------------------------------------
# ClopenSet


class ClopenSet:
    """``{x : x_a ... x_b in words}`` for an admissible word set.

    Instances are immutable.  Equality is set equality (computed on the hull
    of the two windows), so instances are deliberately unhashable.
    """

    __slots__ = ("space", "a", "b", "root")

    def __init__(self, space: Sft, a: int, b: int, root: int):
        if root == EMPTY:
            a, b = 0, 0
        if b < a:
            raise ValueError("empty window")
        self.space, self.a, self.b, self.root = space, a, b, root

    # constructors -------------------------------------------------------------

    @classmethod
    def empty(cls, space: Sft) -> "ClopenSet":
        return cls(space, 0, 0, EMPTY)

    @classmethod
    def full(cls, space: Sft) -> "ClopenSet":
        return cls(space, 0, 0, space._all(1))

    @classmethod
    def cylinder(cls, space: Sft, word, pos: int = 0) -> "ClopenSet":
        w = space.encode(word) if not (isinstance(word, tuple) and all(isinstance(s, int) for s in word)) else word
        if not w:
            return cls.full(space)
        if any(s >= space.q for s in w):
            raise InvalidSymbol("symbol index out of range")
        return cls(space, pos, pos + len(w) - 1, space._from_words([w], len(w)))

    @classmethod
    def from_words(cls, space: Sft, a: int, b: int, words: Iterable) -> "ClopenSet":
        enc = [space.encode(w) if isinstance(w, str) else tuple(w) for w in words]
        return cls(space, a, b, space._from_words(enc, b - a + 1))

    # basic views ----------------------------------------------------------------

    @property
    def window(self) -> tuple[int, int]:
        return (self.a, self.b)

    @property
    def length(self) -> int:
        return self.b - self.a + 1

    def is_empty(self) -> bool:
        return self.root == EMPTY

    def count(self) -> int:
        return _count(self.root, _COUNTS)

    def words(self) -> Iterator[tuple[int, ...]]:
        if self.root != EMPTY:
            yield from _walk(self.root)

    def word_strings(self) -> list[str]:
        return [self.space.decode(w) for w in self.words()]

    def first_word(self) -> tuple[int, ...] | None:
        return next(self.words(), None)

    def contains_word(self, word: Sequence[int]) -> bool:
        node = self.root
        for s in word:
            if node <= ACCEPT:
                return False
            node = _NODES[node][s]
        return node == ACCEPT

    def __repr__(self):
        if self.is_empty():
            return "ClopenSet(empty)"
        n = self.count()
        if n <= 4:
            shown = ", ".join(self.word_strings())
        else:
            shown = f"{n} words"
        return f"ClopenSet([{self.a},{self.b}]: {shown})"

    # window algebra ---------------------------------------------------------------

    def _check(self, other: "ClopenSet"):
        if not isinstance(other, ClopenSet):
            raise TypeError(f"expected ClopenSet, got {type(other).__name__}")
        if self.space != other.space:
            raise SpaceMismatch("clopen sets live in different shift spaces")

    def extended(self, a: int, b: int) -> "ClopenSet":
        """Same set, described on the larger window ``[a, b]``."""
        if self.root == EMPTY:
            return self
        if a > self.a or b < self.b:
            raise ValueError(f"window [{a},{b}] does not contain [{self.a},{self.b}]")
        node = self.root
        if b > self.b:
            node = self.space._extend_right(node, self.length, b - self.b, {})
        if a < self.a:
            node = self.space._extend_left(node, self.a - a)
        return ClopenSet(self.space, a, b, node)

    def _hull_roots(self, other: "ClopenSet") -> tuple[int, int, int, int]:
        if self.root == EMPTY and other.root == EMPTY:
            return self.a, self.b, EMPTY, EMPTY
        if self.root == EMPTY:
            return other.a, other.b, EMPTY, other.root
        if other.root == EMPTY:
            return self.a, self.b, self.root, EMPTY
        a, b = min(self.a, other.a), max(self.b, other.b)
        return a, b, self.extended(a, b).root, other.extended(a, b).root

    def _binary(self, op: str, other: "ClopenSet") -> "ClopenSet":
        self._check(other)
        a, b, u, v = self._hull_roots(other)
        return ClopenSet(self.space, a, b, _apply(op, u, v))

    def union(self, other):
        return self._binary("or", other)

    def intersect(self, other):
        return self._binary("and", other)

    def difference(self, other):
        return self._binary("diff", other)

    def complement(self) -> "ClopenSet":
        if self.root == EMPTY:
            return ClopenSet.full(self.space)
        full = self.space._all(self.length)
        return ClopenSet(self.space, self.a, self.b, _apply("diff", full, self.root))

    __or__ = union
    __and__ = intersect
    __sub__ = difference
    __invert__ = complement

    def shift(self, n: int) -> "ClopenSet":
        """``T^n`` of this set."""
        if self.root == EMPTY or n == 0:
            return self
        return ClopenSet(self.space, self.a - n, self.b - n, self.root)

    def equals(self, other: "ClopenSet") -> bool:
        self._check(other)
        _, _, u, v = self._hull_roots(other)
        return u == v

    def issubset(self, other: "ClopenSet") -> bool:
        self._check(other)
        _, _, u, v = self._hull_roots(other)
        return _apply("diff", u, v) == EMPTY

    def isdisjoint(self, other: "ClopenSet") -> bool:
        self._check(other)
        _, _, u, v = self._hull_roots(other)
        return _apply("and", u, v) == EMPTY

    def __eq__(self, other):
        if not isinstance(other, ClopenSet):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def __le__(self, other):
        return self.issubset(other)

    def __ge__(self, other):
        return other.issubset(self)

    def project(self, a: int, b: int) -> "ClopenSet":
        """Coordinates ``[a, b]`` of the points of this set (a superset)."""
        if self.root == EMPTY:
            return self
        lo, hi = min(a, self.a), max(b, self.b)
        node = self.extended(lo, hi).root
        node = _truncate(node, b - lo + 1, {})
        for _ in range(a - lo):
            node = _drop_first(node)
        return ClopenSet(self.space, a, b, node)

    def minimized(self) -> "ClopenSet":
        """Equal set on the shortest window reachable by peeling free ends."""
        if self.root == EMPTY:
            return self
        s = self
        while s.length > 1:
            inner = _drop_first(s.root)
            if s.space._extend_left(inner, 1) != s.root:
                break
            s = ClopenSet(s.space, s.a + 1, s.b, inner)
        keep = max(1, s.space._bound_depth(s.root, s.length, -1, {}))
        if keep < s.length:
            s = ClopenSet(s.space, s.a, s.a + keep - 1, _truncate(s.root, keep, {}))
        return s

    def contains_point(self, x: "EventuallyPeriodicPoint") -> bool:
        if x.space != self.space:
            raise SpaceMismatch("point lives in a different shift space")
        if self.root == EMPTY:
            return False
        return self.contains_word(x.window(self.a, self.b))

    def __contains__(self, x):
        return self.contains_point(x)


def union_all(sets: Iterable[ClopenSet], space: Sft) -> ClopenSet:
    acc = ClopenSet.empty(space)
    for s in sets:
        acc = acc | s
    return acc


def intersect_all(sets: Iterable[ClopenSet], space: Sft) -> ClopenSet:
    acc = ClopenSet.full(space)
    for s in sets:
        acc = acc & s
    return acc


# spec-level function names ----------------------------------------------------

def clopen_extend(s: ClopenSet, window: tuple[int, int]) -> ClopenSet:
    return s.extended(*window)


def clopen_boolean(op: str, s: ClopenSet, t: ClopenSet | None = None) -> ClopenSet:
    if op == "complement":
        return s.complement()
    try:
        return {"union": s.union, "intersect": s.intersect, "difference": s.difference}[op](t)
    except KeyError:
        raise ValueError(f"unknown boolean operation {op!r}") from None


def clopen_shift(s: ClopenSet, n: int) -> ClopenSet:
    return s.shift(n)


def clopen_is_empty(s: ClopenSet) -> bool:
    return s.is_empty()


def clopen_equals(s: ClopenSet, t: ClopenSet) -> bool:
    return s.equals(t)


def clopen_subset(s: ClopenSet, t: ClopenSet) -> bool:
    return s.issubset(t)


def clopen_contains_point(s: ClopenSet, x: "EventuallyPeriodicPoint") -> bool:
    return s.contains_point(x)


# ---------------------------------------------------------------------------
# points and periodic orbits


@dataclass(frozen=True)
class EventuallyPeriodicPoint:
    """The sequence ``...uuu w vvv...`` with ``w[0]`` at position ``anchor``.

    When ``w`` is empty, ``v[0]`` sits at ``anchor`` and ``u[-1]`` at
    ``anchor - 1``.
    """

    space: Sft
    left: tuple[int, ...]
    center: tuple[int, ...]
    right: tuple[int, ...]
    anchor: int = 0

    def __post_init__(self):
        if not self.left or not self.right:
            raise ValueError("left and right cycle words must be nonempty")
        sp = self.space
        u, w, v = self.left, self.center, self.right
        ok = (sp.is_admissible(u + u[:1]) and sp.is_admissible(v + v[:1])
              and sp.is_admissible(u[-1:] + w + v[:1]))
        if not ok:
            raise ValueError("point is not admissible")

    @classmethod
    def periodic(cls, space: Sft, cycle, phase: int = 0) -> "EventuallyPeriodicPoint":
        """Periodic point with ``x_0 = cycle[phase]``."""
        c = space.encode(cycle) if isinstance(cycle, str) else tuple(cycle)
        phase %= len(c)
        c = c[phase:] + c[:phase]
        return cls(space, c, (), c, 0)

    def symbol(self, i: int) -> int:
        k = i - self.anchor
        if k < 0:
            return self.left[k % len(self.left)]
        if k < len(self.center):
            return self.center[k]
        return self.right[(k - len(self.center)) % len(self.right)]

    def window(self, a: int, b: int) -> tuple[int, ...]:
        return tuple(self.symbol(i) for i in range(a, b + 1))

    def shift(self, n: int) -> "EventuallyPeriodicPoint":
        return EventuallyPeriodicPoint(self.space, self.left, self.center, self.right, self.anchor - n)

    def orbit_range(self) -> tuple[int, int]:
        """Times ``n`` such that every ``T^n x`` equals ``T^m x`` for some ``m`` in range."""
        lo = self.anchor - len(self.left)
        hi = self.anchor + len(self.center) + len(self.right)
        return lo, hi

    def __str__(self):
        d = self.space.decode
        return f"({d(self.left)})^inf {d(self.center)}@{self.anchor} ({d(self.right)})^inf"


def point_through(space: Sft, word, pos: int = 0) -> EventuallyPeriodicPoint:
    """An eventually periodic point carrying ``word`` at coordinates ``pos...``.

    The word is closed on both sides along graph cycles, which exist because
    the graph is essential.
    """
    w = space.encode(word) if isinstance(word, str) else tuple(word)
    if not w or not space.is_admissible(w):
        raise ValueError("word is not admissible")

    def forward(s, nxt):
        seen, path = {}, []
        while s not in seen:
            seen[s] = len(path)
            path.append(s)
            s = nxt[s][0]
        i = seen[s]
        return path[1:i] if i > 0 else [], path[i:]

    # right: continue from w[-1]
    pre, cyc = forward(w[-1], space.succ)
    # path starts at w[-1]; the cycle may start at w[-1] itself
    if cyc[0] == w[-1]:
        right_center, right = [], cyc[1:] + cyc[:1]
    else:
        right_center, right = pre, cyc
    pre_l, cyc_l = forward(w[0], space.pred)
    if cyc_l[0] == w[0]:
        left_center, left = [], cyc_l[1:] + cyc_l[:1]
    else:
        left_center, left = pre_l, cyc_l
    left = tuple(reversed(left))
    left_center = tuple(reversed(left_center))
    center = left_center + w + tuple(right_center)
    return EventuallyPeriodicPoint(space, left, center, tuple(right), pos - len(left_center))


@dataclass(frozen=True)
class PeriodicOrbit:
    """A periodic orbit, stored as its lexicographically least cycle word."""

    space: Sft
    word: tuple[int, ...]

    @property
    def period(self) -> int:
        return len(self.word)

    @property
    def label(self) -> str:
        return self.space.decode(self.word)

    def point(self, phase: int = 0) -> EventuallyPeriodicPoint:
        return EventuallyPeriodicPoint.periodic(self.space, self.word, phase)

    def points(self) -> list[EventuallyPeriodicPoint]:
        return [self.point(i) for i in range(self.period)]

    def __str__(self):
        return self.label


def _canonical_cycle(word: tuple[int, ...]) -> tuple[int, ...] | None:
    """Least rotation when ``word`` is primitive, else ``None``."""
    n = len(word)
    rots = [word[i:] + word[:i] for i in range(n)]
    if len(set(rots)) != n:
        return None
    return min(rots)


def periodic_orbits(space: Sft, max_period: int) -> list[PeriodicOrbit]:
    """Every orbit of least period ``< max_period``, ordered by (period, word)."""
    if max_period < 1:
        raise ValueError("max_period must be positive")
    found: list[tuple[int, ...]] = []
    for ell in range(1, max_period):
        for s0 in range(space.q):
            # the least rotation starts with the least symbol of the cycle
            stack = [(s0,)]
            while stack:
                w = stack.pop()
                if len(w) == ell:
                    if space.has_edge(w[-1], s0) and _canonical_cycle(w) == w:
                        found.append(w)
                    continue
                for t in reversed(space.succ[w[-1]]):
                    if t >= s0:
                        stack.append(w + (t,))
    found.sort(key=lambda w: (len(w), w))
    return [PeriodicOrbit(space, w) for w in found]


# ---------------------------------------------------------------------------
# maximal invariant subsets


@dataclass
class SubSft:
    """The maximal invariant subset of a clopen set, as a vertex shift.

    Child symbols are states of a deterministic scanner that reads parent
    symbols left to right and tracks which windows of the excluded set are
    still partially matched.  The child symbol at coordinate ``i`` is the
    state after reading ``x_i``; ``decode`` gives that parent symbol.  The
    state at ``i`` depends only on ``x_{i-L+2} ... x_i`` where ``L`` is the
    window length of the constraint.
    """

    parent: Sft
    child: Sft
    constraint: ClopenSet
    decode: tuple[int, ...]
    states: list = field(repr=False)
    delta: dict = field(repr=False)
    child_of_state: dict = field(repr=False)
    longest_free_run: int | None = None

    @property
    def is_empty(self) -> bool:
        return self.child.is_empty

    @property
    def block_length(self) -> int:
        return self.constraint.length

    def decode_word(self, word: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.decode[s] for s in word)

    def contains(self, x: EventuallyPeriodicPoint) -> bool:
        """Whether the whole orbit of ``x`` stays in the constraint set."""
        lo, hi = x.orbit_range()
        s = self.constraint
        return all(s.contains_point(x.shift(n)) for n in range(lo - s.b - 1, hi - s.a + 2))

    def lift(self, d: ClopenSet, k: int = 0) -> ClopenSet:
        """Parent clopen set ``C_k`` with ``C_k ∩ M = d`` and ``⋂_k C_k = d``.

        Points of ``C_k`` read, on coordinates ``[c - L + 1 - k, e + k]``
        (``[c, e]`` the window of ``d``), a parent word whose scanner run
        never completes an excluded window, stays on essential states once
        warmed up, and spells a word of ``d`` on ``[c, e]``.
        """
        if d.space != self.child:
            raise SpaceMismatch("set does not live in the child shift")
        parent = self.parent
        if d.is_empty() or self.is_empty:
            return ClopenSet.empty(parent)
        L = self.block_length
        c, e = d.a, d.b
        start, end = c - L + 1 - k, e + k
        warm = start + L - 1
        memo: dict = {}
        delta = self.delta
        child_of = self.child_of_state

        def build(pos, state, dnode):
            if pos > end:
                return ACCEPT
            key = (pos, state, dnode)
            hit = memo.get(key)
            if hit is not None:
                return hit
            ch = [EMPTY] * parent.q
            for t in range(parent.q):
                nxt = delta.get((state, t))
                if nxt is None:
                    continue
                cidx = child_of.get(nxt)
                if pos >= warm and cidx is None:
                    continue
                dn = dnode
                if c <= pos <= e:
                    if cidx is None:
                        continue
                    dn = _NODES[dnode][cidx]
                    if dn == EMPTY:
                        continue
                ch[t] = build(pos + 1, nxt, dn)
            res = _mk(tuple(ch))
            memo[key] = res
            return res

        root = build(start, 0, d.root)
        return ClopenSet(parent, start, end, root).minimized()

    def lift_full(self, k: int = 0) -> ClopenSet:
        return self.lift(ClopenSet.full(self.child), k) if not self.is_empty else ClopenSet.empty(self.parent)


def maximal_invariant(s: ClopenSet) -> SubSft:
    """``M = ⋂_n T^{-n} s`` presented as a vertex shift.

    Scanner states are ``(last symbol, frozenset of partially matched
    nodes of the complement's diagram)``; state ``0`` is the blank start.
    A transition is refused when a complement window completes.
    """
    parent = s.space
    bad = s.complement()
    L = 1 if bad.is_empty() else s.length
    broot = bad.root if not bad.is_empty() else EMPTY
    states: list = [(None, frozenset())]
    index = {states[0]: 0}
    delta: dict = {}
    queue = deque([0])
    while queue:
        sid = queue.popleft()
        last, active = states[sid]
        cands = range(parent.q) if last is None else parent.succ[last]
        for t in cands:
            nxt = set()
            dead = False
            for node in (active | {broot}) if broot else active:
                cnode = _NODES[node][t]
                if cnode == ACCEPT:
                    dead = True
                    break
                if cnode:
                    nxt.add(cnode)
            if dead:
                continue
            st = (t, frozenset(nxt))
            tid = index.get(st)
            if tid is None:
                tid = len(states)
                states.append(st)
                index[st] = tid
                queue.append(tid)
            delta[(sid, t)] = tid
    edges = [(i, j) for (i, _), j in delta.items() if i != 0]
    names = [f"q{i}" for i in range(len(states))]
    child = Sft.from_edges(names[1:], [(names[i], names[j]) for i, j in edges])
    child_of_state = {int(name[1:]): idx for idx, name in enumerate(child.alphabet)}
    decode = tuple(states[int(name[1:])][0] for name in child.alphabet)
    sub = SubSft(parent, child, s if not bad.is_empty() else ClopenSet.full(parent),
                 decode, states, delta, child_of_state)
    if child.is_empty:
        sub.longest_free_run = _longest_run(delta, len(states)) - (L - 1)
    return sub


def _longest_run(delta: dict, nstates: int) -> int:
    """Longest path (in symbols) from the blank state of an acyclic scanner."""
    out: dict[int, list[int]] = {}
    for (i, _), j in delta.items():
        out.setdefault(i, []).append(j)
    best: dict[int, int] = {}
    order: list[int] = []
    # iterative post-order to avoid deep recursion on long runs
    stack = [(0, False)]
    seen = set()
    while stack:
        v, done = stack.pop()
        if done:
            order.append(v)
            continue
        if v in seen:
            continue
        seen.add(v)
        stack.append((v, True))
        for w in out.get(v, ()):
            if w not in seen:
                stack.append((w, False))
    for v in order:
        best[v] = max((1 + best[w] for w in out.get(v, ())), default=0)
    return best[0]


def cycle_point(sub: SubSft) -> EventuallyPeriodicPoint | None:
    """A periodic point of the parent lying in the maximal invariant set."""
    child = sub.child
    if child.is_empty:
        return None
    s = 0
    seen: dict[int, int] = {}
    path = []
    while s not in seen:
        seen[s] = len(path)
        path.append(s)
        s = child.succ[s][0]
    cyc = path[seen[s]:]
    return EventuallyPeriodicPoint.periodic(sub.parent, sub.decode_word(cyc))
