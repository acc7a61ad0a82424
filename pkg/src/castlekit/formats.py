"""Text and JSON formats: SFT files, clopen expressions, castles, cocycles,
certificates, and DOT diagrams.  Grammars are documented in README.md.
"""

from __future__ import annotations

import json
import re
from typing import Iterable

import numpy as np

from .castles import Castle, Tower
from .cocycle import Cocycle
from .errors import ParseError
from .shiftspace import (ACCEPT, EMPTY, _NODES, _mk, ClopenSet, EventuallyPeriodicPoint, Sft,
                         point_through, sft_from_forbidden)

# ---------------------------------------------------------------------------
# SFT files

_KEYS = ("name", "alphabet", "forbid", "edges")


def parse_sft(text: str) -> Sft:
    """Parse an SFT file.

    ::

        # golden mean
        alphabet: 0 1
        forbid: 11

    or with a transition table::

        alphabet: a b
        edges:
          a -> a b
          b -> a
    """
    alphabet: list[str] | None = None
    forbid: list[tuple[str, int, int]] = []
    edges: list[tuple[str, str, int, int]] = []
    saw_edges = False
    in_edges = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indented = line[0].isspace()
        if in_edges and indented or (in_edges and "->" in line and ":" not in line):
            col = len(line) - len(line.lstrip()) + 1
            if "->" not in line:
                raise ParseError("expected 'symbol -> successors'", lineno, col)
            src, dst = line.split("->", 1)
            if len(src.split()) != 1:
                raise ParseError("exactly one source symbol before '->'", lineno, col)
            arrow = line.index("->") + 2
            targets = [(m.group(), arrow + m.start() + 1) for m in re.finditer(r"\S+", dst)]
            if not targets:
                raise ParseError("no successors after '->'", lineno, arrow + 1)
            edges.append((src.strip(), None, lineno, col))
            for t, tcol in targets:
                edges.append((src.strip(), t, lineno, tcol))
            continue
        in_edges = False
        if ":" not in line:
            raise ParseError("expected 'key: value'", lineno, 1)
        key, value = line.split(":", 1)
        key = key.strip()
        col = line.index(":") + 2
        starts = [col + m.start() for m in re.finditer(r"\S+", value)]
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}", lineno, 1)
        if key == "alphabet":
            if alphabet is not None:
                raise ParseError("alphabet given twice", lineno, 1)
            alphabet = value.split()
            if not alphabet:
                raise ParseError("empty alphabet", lineno, col)
            if len(set(alphabet)) != len(alphabet):
                raise ParseError("duplicate symbol in alphabet", lineno, col)
            bad = [a for a in alphabet if any(c in a for c in "[]()@:#.")]
            if bad:
                raise ParseError(f"symbol {bad[0]!r} uses a reserved character", lineno, col)
        elif key == "forbid":
            forbid.extend((w, lineno, c) for w, c in zip(value.split(), starts))
        elif key == "edges":
            saw_edges = True
            in_edges = True
            if value.strip():
                raise ParseError("edges are listed on the following lines", lineno, col)
    if alphabet is None:
        raise ParseError("missing 'alphabet:' line")
    if forbid and saw_edges:
        raise ParseError("give either 'forbid:' or 'edges:', not both")
    index = set(alphabet)
    if saw_edges:
        for a, b, ln, col in edges:
            s = a if b is None else b
            if s not in index:
                raise ParseError(f"unknown symbol {s!r}", ln, col)
        return Sft.from_edges(alphabet, [(a, b) for a, b, _, _ in edges if b is not None])
    single = all(len(a) == 1 for a in alphabet)
    words = []
    for w, ln, col in forbid:
        labels = list(w) if single else w.split(".")
        for s in labels:
            if s not in index:
                raise ParseError(f"unknown symbol {s!r} in forbidden word {w!r}", ln, col)
        words.append(labels)
    return sft_from_forbidden(alphabet, words)


def load_sft(path) -> Sft:
    with open(path) as fh:
        return parse_sft(fh.read())


def format_sft(space: Sft) -> str:
    lines = ["alphabet: " + " ".join(space.alphabet), "edges:"]
    for i in range(space.q):
        if space.succ[i]:
            lines.append(f"  {space.alphabet[i]} -> "
                         + " ".join(space.alphabet[j] for j in space.succ[i]))
    return "\n".join(lines) + "\n"


def sft_to_json(space: Sft) -> dict:
    return {"alphabet": list(space.alphabet), "edges": [list(e) for e in space.edges()]}


def sft_from_json(obj: dict) -> Sft:
    return Sft(obj["alphabet"], [tuple(e) for e in obj["edges"]])


# ---------------------------------------------------------------------------
# clopen expressions
#
#   expr  := diff ('|' diff)*
#   diff  := inter ('\' inter)*
#   inter := unary ('&' unary)*
#   unary := '~' unary | 'T^' INT '(' expr ')' | atom
#   atom  := '[' WORD ']' ('@' INT)? | '(' expr ')' | 'X' | 'empty'

_TOKEN = re.compile(r"\s*(?:(?P<num>-?\d+)|(?P<word>\[[^\]]*\])|(?P<op>T\^|[|&\\~()@])"
                    r"|(?P<name>X|empty))")


def _tokens(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[0]!r}", 1,
                             len(text[:pos]) + len(text[pos:]) - len(text[pos:].lstrip()) + 1)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    out.append(("end", "", len(text) + 1))
    return out


class _ExprParser:
    def __init__(self, space: Sft, text: str):
        self.space = space
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None, kind=None):
        tok = self.toks[self.i]
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = value if value is not None else kind
            got = tok[1] or "end of input"
            raise ParseError(f"expected {want!r}, got {got!r}", 1, tok[2])
        self.i += 1
        return tok

    def parse(self) -> ClopenSet:
        out = self.expr()
        self.take(kind="end")
        return out

    def expr(self):
        out = self.diff()
        while self.peek()[1] == "|":
            self.take()
            out = out | self.diff()
        return out

    def diff(self):
        out = self.inter()
        while self.peek()[1] == "\\":
            self.take()
            out = out - self.inter()
        return out

    def inter(self):
        out = self.unary()
        while self.peek()[1] == "&":
            self.take()
            out = out & self.unary()
        return out

    def unary(self):
        kind, val, col = self.peek()
        if val == "~":
            self.take()
            return ~self.unary()
        if val == "T^":
            self.take()
            n = int(self.take(kind="num")[1])
            self.take("(")
            inner = self.expr()
            self.take(")")
            return inner.shift(n)
        return self.atom()

    def atom(self):
        kind, val, col = self.peek()
        if kind == "word":
            self.take()
            pos = 0
            if self.peek()[1] == "@":
                self.take()
                pos = int(self.take(kind="num")[1])
            body = val[1:-1].strip()
            try:
                word = self.space.encode(body)
            except Exception as exc:
                raise ParseError(str(exc), 1, col) from None
            if not word:
                raise ParseError("empty cylinder word", 1, col)
            if not self.space.is_admissible(word):
                return ClopenSet.empty(self.space)
            return ClopenSet.cylinder(self.space, word, pos)
        if val == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        if kind == "name":
            self.take()
            return ClopenSet.full(self.space) if val == "X" else ClopenSet.empty(self.space)
        raise ParseError(f"unexpected {val or 'end of input'!r}", 1, col)


def parse_clopen(space: Sft, text: str) -> ClopenSet:
    """Evaluate a clopen expression such as ``~[0]@0 | T^2([01]@-1)``."""
    return _ExprParser(space, text).parse()


def parse_point(space: Sft, text: str) -> EventuallyPeriodicPoint:
    """``periodic:01`` or ``through:0110@-2``."""
    kind, _, rest = text.partition(":")
    if kind == "periodic" and rest:
        return EventuallyPeriodicPoint.periodic(space, space.encode(rest))
    if kind == "through" and rest:
        word, _, pos = rest.partition("@")
        return point_through(space, space.encode(word), int(pos or 0))
    raise ParseError(f"bad point {text!r}; use periodic:WORD or through:WORD@POS")


# ---------------------------------------------------------------------------
# shared decision-diagram node tables


class NodeTable:
    """Local numbering of diagram nodes: 0 empty, 1 accept, then interior."""

    def __init__(self):
        self.local: dict[int, int] = {EMPTY: 0, ACCEPT: 1}
        self.rows: list[list[int]] = []

    def add(self, root: int) -> int:
        """Register ``root`` and its descendants; return its local id."""
        work = [(root, False)]
        while work:
            n, expanded = work.pop()
            if n in self.local:
                continue
            if expanded:
                self.local[n] = len(self.rows) + 2
                self.rows.append([self.local[c] for c in _NODES[n]])
                continue
            work.append((n, True))
            work.extend((c, False) for c in _NODES[n] if c not in self.local)
        return self.local[root]

def _load_nodes(rows: list[list[int]]) -> list[int]:
    ids = [EMPTY, ACCEPT]
    for row in rows:
        if any(c >= len(ids) for c in row):
            raise ParseError("node table refers forward")
        ids.append(_mk(tuple(ids[c] for c in row)))
    return ids


def clopen_to_json(s: ClopenSet, table: NodeTable | None = None, word_limit: int = 64) -> dict:
    """Word dump when small, otherwise a root into ``table``."""
    if s.is_empty():
        return {"format": "words", "window": [0, 0], "words": []}
    if table is None or s.count() <= word_limit:
        return {"format": "words", "window": [s.a, s.b], "words": s.word_strings()}
    return {"format": "mdd", "window": [s.a, s.b], "root": table.add(s.root)}


def clopen_from_json(space: Sft, obj: dict, ids: list[int] | None = None) -> ClopenSet:
    a, b = obj["window"]
    if obj["format"] == "words":
        if not obj["words"]:
            return ClopenSet.empty(space)
        return ClopenSet.from_words(space, a, b, obj["words"])
    if obj["format"] == "mdd":
        if ids is None:
            raise ParseError("mdd set without a node table")
        return ClopenSet(space, a, b, ids[obj["root"]])
    raise ParseError(f"unknown set format {obj['format']!r}")


# ---------------------------------------------------------------------------
# castles


def castle_to_json(castle: Castle, checks: dict | None = None) -> dict:
    table = NodeTable()
    towers = [{"height": t.height, "role": t.role, "orbit": t.orbit,
               "base": clopen_to_json(t.base, table)} for t in castle.towers]
    out = {"format": "castlekit.castle/1", "sft": sft_to_json(castle.space), "N": castle.N,
           "depth": castle.depth, "nodes": table.rows, "towers": towers}
    if checks is not None:
        out["verification"] = checks
    return out


def castle_from_json(obj: dict, space: Sft | None = None) -> Castle:
    if obj.get("format") != "castlekit.castle/1":
        raise ParseError("not a castle file")
    space = space or sft_from_json(obj["sft"])
    ids = _load_nodes(obj.get("nodes", []))
    towers = [Tower(clopen_from_json(space, t["base"], ids), t["height"], t.get("role", "tower"),
                    t.get("orbit")) for t in obj["towers"]]
    return Castle(space, towers, N=obj.get("N"), depth=obj.get("depth"))


# ---------------------------------------------------------------------------
# matrices and cocycles


def matrix_to_json(a: np.ndarray):
    if np.iscomplexobj(a):
        return [[[float(z.real), float(z.imag)] for z in row] for row in a]
    return [[float(z) for z in row] for row in a]


def _entry(z, field: str):
    if isinstance(z, (list, tuple)):
        if field != "complex" or len(z) != 2:
            raise ValueError(f"bad entry {z!r}")
        return complex(float(z[0]), float(z[1]))
    if isinstance(z, bool) or not isinstance(z, (int, float)):
        raise ValueError(f"bad entry {z!r}")
    return float(z)


def matrix_from_json(obj, field: str, d: int) -> np.ndarray:
    """Nested ``d x d`` or flat row-major list; complex entries as ``[re, im]``."""
    if not isinstance(obj, list):
        raise ValueError("matrix must be a list")
    if len(obj) == d and all(isinstance(r, list) and len(r) == d for r in obj):
        rows = obj
    elif len(obj) == d * d:
        rows = [obj[i * d:(i + 1) * d] for i in range(d)]
    else:
        raise ValueError(f"expected {d} rows or {d * d} entries")
    for r in rows:
        if not isinstance(r, list) or len(r) != d:
            raise ValueError(f"expected rows of length {d}")
    dtype = complex if field == "complex" else float
    return np.array([[_entry(z, field) for z in r] for r in rows], dtype=dtype)


def parse_cocycle(space: Sft, text: str) -> Cocycle:
    """Parse a cocycle table.

    ::

        field: complex
        d: 2
        depth: 0
        0: [[1, 0], [0, 1]]
        1: [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]

    A line ``*: <matrix>`` sets every word not listed explicitly.
    """
    header: dict[str, str] = {}
    entries: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError("expected 'key: value'", lineno, 1)
        key, value = (p.strip() for p in line.split(":", 1))
        if key in ("field", "d", "depth") and not entries:
            header[key] = value
        else:
            entries.append((key, value, lineno))
    for k in ("field", "d", "depth"):
        if k not in header:
            raise ParseError(f"missing header '{k}:'")
    field = header["field"]
    if field not in ("real", "complex"):
        raise ParseError(f"field must be real or complex, got {field!r}")
    try:
        d, depth = int(header["d"]), int(header["depth"])
    except ValueError:
        raise ParseError("d and depth must be integers") from None
    table = {}
    default = None
    for key, value, lineno in entries:
        try:
            mat = matrix_from_json(json.loads(value), field, d)
        except (json.JSONDecodeError, ValueError) as exc:
            raise ParseError(f"bad matrix literal: {exc}", lineno, len(key) + 3) from None
        if key == "*":
            default = mat
            continue
        try:
            word = space.encode(key)
        except Exception as exc:
            raise ParseError(str(exc), lineno, 1) from None
        table[word] = mat
    if default is not None:
        for w in space.words(2 * depth + 1):
            table.setdefault(w, default)
    try:
        return Cocycle.from_table(space, table, depth, field)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def format_cocycle(f: Cocycle) -> str:
    if f.table is None:
        raise ValueError("only table cocycles have a text form; use cocycle_to_json")
    lines = [f"field: {f.field}", f"d: {f.dim}", f"depth: {f.depth}"]
    for w, a in sorted(f.table.items()):
        lines.append(f"{f.space.decode(w)}: {json.dumps(matrix_to_json(a))}")
    return "\n".join(lines) + "\n"


def cocycle_to_json(f: Cocycle) -> dict:
    table = NodeTable()
    pieces = [{"set": clopen_to_json(s, table), "matrix": matrix_to_json(a)}
              for s, a in f.pieces]
    return {"format": "castlekit.cocycle/1", "sft": sft_to_json(f.space), "field": f.field,
            "d": f.dim, "depth": f.depth, "nodes": table.rows, "pieces": pieces}


def cocycle_from_json(obj: dict, space: Sft | None = None, check: bool = False) -> Cocycle:
    if obj.get("format") != "castlekit.cocycle/1":
        raise ParseError("not a cocycle file")
    space = space or sft_from_json(obj["sft"])
    ids = _load_nodes(obj.get("nodes", []))
    field, d = obj["field"], obj["d"]
    pieces = [(clopen_from_json(space, p["set"], ids), matrix_from_json(p["matrix"], field, d))
              for p in obj["pieces"]]
    return Cocycle(space, pieces, field=field, depth=obj.get("depth", 0), check=check)


def load_cocycle(space: Sft, path) -> Cocycle:
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return cocycle_from_json(json.loads(text), space)
    return parse_cocycle(space, text)


# ---------------------------------------------------------------------------
# DOT


def castle_to_dot(castle: Castle, max_towers: int = 60) -> str:
    """Towers as columns of floors; ``T`` moves up a column and the top floor
    returns to the bases.  Capturing towers are shaded."""
    lines = ["digraph castle {", "  rankdir=BT;", "  node [shape=box, fontsize=10];",
             '  bases [shape=ellipse, label="bases"];']
    for i, t in enumerate(castle.towers[:max_towers]):
        fill = ', style=filled, fillcolor="#dddddd"' if t.role == "capture" else ""
        tag = f" orbit {t.orbit}" if t.orbit else ""
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f'    label="tower {i} ({t.role}{tag}, h={t.height})";')
        for j in range(t.height):
            lines.append(f'    t{i}_{j} [label="T^{j} B{i}"{fill}];')
        lines.append("  }")
        lines.append(f"  bases -> t{i}_0 [style=dotted];")
        for j in range(t.height - 1):
            lines.append(f'  t{i}_{j} -> t{i}_{j + 1} [label="T"];')
        lines.append(f'  t{i}_{t.height - 1} -> bases [label="T"];')
    if len(castle.towers) > max_towers:
        lines.append(f'  more [shape=plaintext, label="+{len(castle.towers) - max_towers} towers"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


def words_of(sets: Iterable[ClopenSet]) -> list[list[str]]:
    return [s.word_strings() for s in sets]
