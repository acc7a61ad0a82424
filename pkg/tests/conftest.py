import random

import numpy as np
import pytest
from hypothesis import strategies as st

from castlekit import ClopenSet, Sft, periodic_orbits, sft_from_forbidden
from castlekit.errors import InvalidSymbol


@pytest.fixture
def golden():
    return sft_from_forbidden("01", ["11"])


@pytest.fixture
def full2():
    return sft_from_forbidden("01", [])


def random_sft(rng: random.Random, max_symbols=4, max_len=3, max_words=4):
    """Nonempty SFT from random forbidden words; retries until nonempty."""
    while True:
        q = rng.randint(2, max_symbols)
        alphabet = "abcd"[:q]
        words = {"".join(rng.choice(alphabet) for _ in range(rng.randint(2, max_len)))
                 for _ in range(rng.randint(0, max_words))}
        sp = sft_from_forbidden(alphabet, sorted(words))
        if not sp.is_empty and sp.q <= 12:
            return sp


def sft_without_short_periods(rng: random.Random, n: int, vertices=6, p=0.45):
    """Random essential graph with every cycle of length < n broken."""
    if vertices < n:
        # a closed walk on fewer than n vertices contains a shorter cycle
        raise ValueError(f"{vertices} vertices cannot avoid periods below {n}")
    while True:
        names = [f"s{i}" for i in range(vertices)]
        edges = {(a, b) for a in names for b in names if rng.random() < p}
        while True:
            try:
                sp = Sft.from_edges(names, sorted(edges))
            except InvalidSymbol:
                break
            if sp.is_empty:
                break
            short = periodic_orbits(sp, n)
            if not short:
                return sp
            w = [sp.alphabet[s] for s in short[0].word]
            k = rng.randrange(len(w))
            edges.discard((w[k], w[(k + 1) % len(w)]))


@st.composite
def sfts(draw, max_symbols=3, max_len=3):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_sft(random.Random(seed), max_symbols, max_len)


# ---------------------------------------------------------------------------
# clopen expressions and a brute-force oracle


def random_expr(rng, sp: Sft, ops: int, span=3):
    """Expression tree with ``ops`` operators; leaves are short cylinders."""
    if ops == 0:
        ln = rng.randint(1, 2)
        word = tuple(rng.randrange(sp.q) for _ in range(ln))
        return ("cyl", word, rng.randint(-span, span))
    kind = rng.choice(["or", "and", "diff", "not", "shift"])
    if kind == "not":
        return ("not", random_expr(rng, sp, ops - 1, span))
    if kind == "shift":
        return ("shift", rng.randint(-2, 2), random_expr(rng, sp, ops - 1, span))
    left = rng.randint(0, ops - 1)
    return (kind, random_expr(rng, sp, left, span), random_expr(rng, sp, ops - 1 - left, span))


def expr_window(e):
    kind = e[0]
    if kind == "cyl":
        return e[2], e[2] + len(e[1]) - 1
    if kind == "not":
        return expr_window(e[1])
    if kind == "shift":
        a, b = expr_window(e[2])
        return a - e[1], b - e[1]
    a1, b1 = expr_window(e[1])
    a2, b2 = expr_window(e[2])
    return min(a1, a2), max(b1, b2)


def expr_text(sp, e):
    kind = e[0]
    if kind == "cyl":
        return f"[{sp.decode(e[1])}]@{e[2]}"
    if kind == "not":
        return f"~({expr_text(sp, e[1])})"
    if kind == "shift":
        return f"T^{e[1]}({expr_text(sp, e[2])})"
    op = {"or": "|", "and": "&", "diff": "\\"}[kind]
    return f"({expr_text(sp, e[1])} {op} {expr_text(sp, e[2])})"


def build(sp, e) -> ClopenSet:
    kind = e[0]
    if kind == "cyl":
        if not sp.is_admissible(e[1]):
            return ClopenSet.empty(sp)
        return ClopenSet.cylinder(sp, e[1], e[2])
    if kind == "not":
        return ~build(sp, e[1])
    if kind == "shift":
        return build(sp, e[2]).shift(e[1])
    a, b = build(sp, e[1]), build(sp, e[2])
    return {"or": a | b, "and": a & b, "diff": a - b}[kind]


def brute_member(e, get) -> bool:
    """Membership of the point ``i -> get(i)``; ``T`` is the left shift."""
    kind = e[0]
    if kind == "cyl":
        return all(get(e[2] + k) == s for k, s in enumerate(e[1]))
    if kind == "not":
        return not brute_member(e[1], get)
    if kind == "shift":
        n = e[1]
        return brute_member(e[2], lambda i: get(i - n))
    x, y = brute_member(e[1], get), brute_member(e[2], get)
    return {"or": x or y, "and": x and y, "diff": x and not y}[kind]


def brute_words(sp, e, a, b) -> set:
    out = set()
    for w in admissible_words(sp, b - a + 1):
        if brute_member(e, lambda i: w[i - a]):
            out.add(w)
    return out


def admissible_words(sp, n):
    """Depth-first walk of the edge list, in lexicographic order."""
    if n == 0:
        return [()]
    nxt = {i: sorted(j for a, j in sp.edges() if a == i) for i in range(sp.q)}
    out = []

    def walk(w):
        if len(w) == n:
            out.append(tuple(w))
            return
        for j in (nxt[w[-1]] if w else range(sp.q)):
            w.append(j)
            walk(w)
            w.pop()

    walk([])
    return out


def words_on(s: ClopenSet, a, b) -> set:
    """Words of ``s`` on ``[a, b]``; asserts ``s`` depends only on ``[a, b]``."""
    if s.is_empty():
        return set()
    hull = s.extended(min(a, s.a), max(b, s.b))
    words = set(hull.project(a, b).words())
    assert ClopenSet.from_words(s.space, a, b, words).equals(s)
    return words


# ---------------------------------------------------------------------------
# matrices


def random_matrix(rng: np.random.Generator, d, field, cond_cap=1e6):
    while True:
        a = rng.standard_normal((d, d))
        if field == "complex":
            a = a + 1j * rng.standard_normal((d, d))
        s = np.linalg.svd(a, compute_uv=False)
        if s[0] / s[-1] < cond_cap:
            return a


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
