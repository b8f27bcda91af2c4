"""Involution triples, braiding, and quilts of transplantable pairs.

A triple ``(a, b, c)`` of involutions on ``n`` sheets is a permutation action
of the free product of three groups of order two.  Two such actions form a
*transplantable pair* when they are equivalent as linear representations but
not as permutation representations.  The braiding automorphisms

    L: (a, b, c) -> (a b a^-1, a, c)
    R: (a, b, c) -> (a, c, c b c^-1)

act on pairs, and a *quilt* is an orbit of this action, with pairs identified
up to renaming the letters, swapping the two sides, and relabeling sheets.

Permutations are tuples of 0-based images.  Composition is
``(p o q)(i) = p(q(i))``, and ``conjugate(a, b)`` is ``a o b o a^-1``, i.e. the
cycles of ``b`` with every index replaced by its image under ``a``.  Files and
printed cycle notation use 1-based sheet numbers.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import random
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ResourceLimitError

log = logging.getLogger(__name__)

Perm = tuple[int, ...]
LETTERS = "abc"
LETTER_PERMS = tuple(itertools.permutations(range(3)))

#: Largest n for which `enumerate_pairs` runs the unrestricted search.
FULL_SEARCH_LIMIT = 11
DEFAULT_SIZE_BOUND = 15


# ---------------------------------------------------------------------------
# permutations


def identity(n: int) -> Perm:
    return tuple(range(n))


def compose(p: Perm, q: Perm) -> Perm:
    """Return ``p o q``."""
    return tuple(p[i] for i in q)


def inverse(p: Perm) -> Perm:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def conjugate(a: Perm, b: Perm) -> Perm:
    """Return ``a b a^-1``: relabel the cycles of ``b`` through ``a``."""
    out = [0] * len(b)
    for i in range(len(b)):
        out[a[i]] = a[b[i]]
    return tuple(out)


def fixed_points(p: Perm) -> int:
    return sum(1 for i, j in enumerate(p) if i == j)


def cycles(p: Perm) -> list[tuple[int, ...]]:
    """Nontrivial cycles of ``p``, each starting at its smallest element."""
    seen = set()
    out = []
    for i in range(len(p)):
        if i in seen:
            continue
        cyc = [i]
        seen.add(i)
        j = p[i]
        while j != i:
            cyc.append(j)
            seen.add(j)
            j = p[j]
        if len(cyc) > 1:
            out.append(tuple(cyc))
    return out


def format_cycles(p: Perm) -> str:
    cs = cycles(p)
    if not cs:
        return "()"
    return "".join("(" + " ".join(str(i + 1) for i in c) + ")" for c in cs)


def parse_cycles(text: str, n: int) -> Perm:
    """Parse 1-based cycle notation such as ``(1 2)(3 5)``; ``()`` is the identity."""
    text = text.strip()
    if not re.fullmatch(r"(\(\s*[\d\s,]*\))*", text):
        raise ParseError(f"not cycle notation: {text!r}")
    img = list(range(n))
    touched = set()
    for body in re.findall(r"\(([^)]*)\)", text):
        pts = [int(t) - 1 for t in re.split(r"[\s,]+", body.strip()) if t]
        if not pts:
            continue
        for q in pts:
            if not 0 <= q < n:
                raise ParseError(f"sheet {q + 1} out of range 1..{n}")
            if q in touched:
                raise ParseError(f"sheet {q + 1} appears twice in {text!r}")
            touched.add(q)
        for k, q in enumerate(pts):
            img[q] = pts[(k + 1) % len(pts)]
    return tuple(img)


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class InvolutionTriple:
    """Three involutions ``a, b, c`` on sheets ``0..n-1``."""

    n: int
    perms: tuple[Perm, Perm, Perm]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one sheet")
        if len(self.perms) != 3:
            raise ValueError("need exactly three permutations")
        perms = tuple(tuple(int(v) for v in p) for p in self.perms)
        object.__setattr__(self, "perms", perms)
        for x, p in zip(LETTERS, perms):
            if sorted(p) != list(range(self.n)):
                raise ValueError(f"{x} is not a permutation of {self.n} sheets")
            if any(p[p[i]] != i for i in range(self.n)):
                raise ValueError(f"{x} is not an involution")

    @classmethod
    def from_cycles(cls, n: int, a: str, b: str, c: str) -> "InvolutionTriple":
        return cls(n, (parse_cycles(a, n), parse_cycles(b, n), parse_cycles(c, n)))

    @classmethod
    def identity(cls, n: int = 1) -> "InvolutionTriple":
        e = identity(n)
        return cls(n, (e, e, e))

    @property
    def a(self) -> Perm:
        return self.perms[0]

    @property
    def b(self) -> Perm:
        return self.perms[1]

    @property
    def c(self) -> Perm:
        return self.perms[2]

    def word(self, w: str) -> Perm:
        """Permutation of a word over ``abc``, letters applied right to left."""
        p = identity(self.n)
        for ch in reversed(w):
            p = compose(self.perms[LETTERS.index(ch)], p)
        return p

    def transpositions(self) -> tuple[int, int, int]:
        return tuple((self.n - fixed_points(p)) // 2 for p in self.perms)

    def orbits(self) -> list[list[int]]:
        seen = [False] * self.n
        out = []
        for s in range(self.n):
            if seen[s]:
                continue
            comp = [s]
            seen[s] = True
            k = 0
            while k < len(comp):
                i = comp[k]
                k += 1
                for p in self.perms:
                    j = p[i]
                    if not seen[j]:
                        seen[j] = True
                        comp.append(j)
            out.append(sorted(comp))
        return out

    @property
    def is_transitive(self) -> bool:
        return len(self.orbits()) == 1

    @property
    def is_treelike(self) -> bool:
        """Transitive with exactly n-1 transpositions, so the sheet graph is a tree."""
        return self.is_transitive and sum(self.transpositions()) == self.n - 1

    def permute_letters(self, sigma: Sequence[int]) -> "InvolutionTriple":
        """New triple whose letter k is old letter ``sigma[k]``."""
        return InvolutionTriple(self.n, tuple(self.perms[s] for s in sigma))

    def relabel(self, mapping: Sequence[int]) -> "InvolutionTriple":
        """Move sheet ``i`` to ``mapping[i]``."""
        m = tuple(mapping)
        return InvolutionTriple(self.n, tuple(conjugate(m, p) for p in self.perms))

    def to_cycles(self) -> tuple[str, str, str]:
        return tuple(format_cycles(p) for p in self.perms)


@dataclass(frozen=True)
class TranspPair:
    """Two involution triples on the same number of sheets."""

    left: InvolutionTriple
    right: InvolutionTriple

    def __post_init__(self):
        if self.left.n != self.right.n:
            raise ValueError("both triples need the same sheet count")

    @property
    def n(self) -> int:
        return self.left.n

    def swap(self) -> "TranspPair":
        return TranspPair(self.right, self.left)

    def permute_letters(self, sigma: Sequence[int]) -> "TranspPair":
        return TranspPair(self.left.permute_letters(sigma), self.right.permute_letters(sigma))

    def map(self, f) -> "TranspPair":
        return TranspPair(f(self.left), f(self.right))


# ---------------------------------------------------------------------------
# pair file format


def format_pair(p: TranspPair) -> str:
    lines = [f"n={p.n}"]
    lines += list(p.left.to_cycles())
    lines.append("")
    lines += list(p.right.to_cycles())
    return "\n".join(lines) + "\n"


def parse_pair(text: str) -> TranspPair:
    """Read the pair text format.

    Line 1 is ``n=<int>``; the next three nonblank lines hold ``a, b, c`` of
    the left triple in cycle notation, then a blank line, then the right
    triple.  Whitespace inside lines is ignored.
    """
    raw = text.splitlines()
    while raw and not raw[0].strip():
        raw.pop(0)
    if not raw:
        raise ParseError("empty pair file")
    m = re.fullmatch(r"\s*n\s*=\s*(\d+)\s*", raw[0])
    if not m:
        raise ParseError("first line must be n=<int>")
    n = int(m.group(1))
    blocks: list[list[str]] = [[]]
    for line in raw[1:]:
        if line.strip():
            blocks[-1].append(line)
        elif blocks[-1]:
            blocks.append([])
    blocks = [b for b in blocks if b]
    if len(blocks) != 2 or any(len(b) != 3 for b in blocks):
        raise ParseError("expected two blocks of three cycle lines separated by a blank line")
    try:
        left, right = (InvolutionTriple.from_cycles(n, *b) for b in blocks)
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from exc
    return TranspPair(left, right)


def read_pair(path) -> TranspPair:
    with open(path) as fh:
        return parse_pair(fh.read())


# ---------------------------------------------------------------------------
# braiding


def _L(t: InvolutionTriple) -> InvolutionTriple:
    a, b, c = t.perms
    return InvolutionTriple(t.n, (conjugate(a, b), a, c))


def _R(t: InvolutionTriple) -> InvolutionTriple:
    a, b, c = t.perms
    return InvolutionTriple(t.n, (a, c, conjugate(c, b)))


def _L_inv(t: InvolutionTriple) -> InvolutionTriple:
    a, b, c = t.perms
    return InvolutionTriple(t.n, (b, conjugate(b, a), c))


def _R_inv(t: InvolutionTriple) -> InvolutionTriple:
    a, b, c = t.perms
    return InvolutionTriple(t.n, (a, conjugate(b, c), b))


def braid_left(p: TranspPair) -> TranspPair:
    """Apply ``L: (a, b, c) -> (aba^-1, a, c)`` to both triples."""
    return p.map(_L)


def braid_right(p: TranspPair) -> TranspPair:
    """Apply ``R: (a, b, c) -> (a, c, cbc^-1)`` to both triples."""
    return p.map(_R)


def braid_left_inverse(p: TranspPair) -> TranspPair:
    return p.map(_L_inv)


def braid_right_inverse(p: TranspPair) -> TranspPair:
    return p.map(_R_inv)


#: braid moves in left-first order; lowercase letters are inverses
MOVES = (
    ("L", braid_left),
    ("R", braid_right),
    ("l", braid_left_inverse),
    ("r", braid_right_inverse),
)


def apply_braid_word(p: TranspPair, word: str) -> TranspPair:
    """Apply a braid word, read left to right."""
    table = dict(MOVES)
    for ch in word:
        p = table[ch](p)
    return p


# ---------------------------------------------------------------------------
# canonical forms


def _bfs_code(perms: Sequence[Perm], start: int) -> tuple[list[int], list[int]]:
    lab = {start: 0}
    order = [start]
    code = []
    k = 0
    while k < len(order):
        o = order[k]
        k += 1
        for p in perms:
            j = p[o]
            if j not in lab:
                lab[j] = len(order)
                order.append(j)
            code.append(lab[j])
    return code, order


def triple_code(t: InvolutionTriple) -> tuple[int, ...]:
    """Canonical code of a triple under sheet relabeling.

    Each component gets the smallest breadth-first code over all start
    sheets; components are sorted by (size, code) and concatenated with
    offsets.
    """
    comps = []
    for orbit in t.orbits():
        best = min(_bfs_code(t.perms, s)[0] for s in orbit)
        comps.append((len(orbit), best))
    comps.sort()
    out = []
    off = 0
    for size, code in comps:
        out.extend(v + off for v in code)
        off += size
    return tuple(out)


def canonical_triple(t: InvolutionTriple) -> InvolutionTriple:
    """The triple rebuilt from its canonical code."""
    code = triple_code(t)
    perms = [[0] * t.n for _ in range(3)]
    for pos, v in enumerate(code):
        perms[pos % 3][pos // 3] = v
    return InvolutionTriple(t.n, tuple(tuple(p) for p in perms))


def _encode(n: int, codes: Iterable[Sequence[int]]) -> bytes:
    if n > 255:
        raise ValueError("byte encoding supports at most 255 sheets")
    out = bytearray([n])
    for code in codes:
        out.extend(code)
    return bytes(out)


def canonical_form(p: TranspPair) -> bytes:
    """Encoding of a pair, minimal over letter renamings, side swap, and sheet relabelings."""
    best = None
    for sigma in LETTER_PERMS:
        lc = triple_code(p.left.permute_letters(sigma))
        rc = triple_code(p.right.permute_letters(sigma))
        for key in ((lc, rc), (rc, lc)):
            if best is None or key < best:
                best = key
    return _encode(p.n, best)


def pair_from_canonical(code: bytes) -> TranspPair:
    n = code[0]
    body = code[1:]
    triples = []
    for side in range(2):
        part = body[side * 3 * n:(side + 1) * 3 * n]
        perms = [[0] * n for _ in range(3)]
        for pos, v in enumerate(part):
            perms[pos % 3][pos // 3] = v
        triples.append(InvolutionTriple(n, tuple(tuple(q) for q in perms)))
    return TranspPair(*triples)


# ---------------------------------------------------------------------------
# equivalence tests


def _joint_generators(p: TranspPair) -> list[Perm]:
    n = p.n
    return [lp + tuple(v + n for v in rp) for lp, rp in zip(p.left.perms, p.right.perms)]


def _random_word_screen(p: TranspPair, trials: int = 200, seed: int = 0) -> bool:
    rng = random.Random(seed)
    for _ in range(trials):
        w = "".join(rng.choice(LETTERS) for _ in range(rng.randint(1, 40)))
        if fixed_points(p.left.word(w)) != fixed_points(p.right.word(w)):
            return False
    return True


def joint_group_order(p: TranspPair, max_elements: int = 10**7) -> int:
    """Order of the group generated by the paired permutations ``(P(x), Q(x))``."""
    return _joint_closure(p, max_elements, check=False)[1]


def _joint_closure(p: TranspPair, max_elements: int, check: bool) -> tuple[bool, int]:
    n = p.n
    gens = _joint_generators(p)
    e = identity(2 * n)
    seen = {e}
    queue = deque([e])
    while queue:
        g = queue.popleft()
        if check:
            lf = sum(1 for i in range(n) if g[i] == i)
            rf = sum(1 for i in range(n, 2 * n) if g[i] == i)
            if lf != rf:
                return False, len(seen)
        for h in gens:
            k = tuple(h[i] for i in g)
            if k not in seen:
                seen.add(k)
                if len(seen) > max_elements:
                    raise ResourceLimitError(
                        f"joint group exceeds {max_elements} elements"
                    )
                queue.append(k)
    return True, len(seen)


def is_transplantable(p: TranspPair, max_elements: int = 10**7) -> bool:
    """True iff every element of the joint group has equal fixed-point counts on both sides.

    Equivalently the two permutation characters agree, so the two actions are
    equivalent as linear representations.
    """
    if not _random_word_screen(p):
        return False
    return _joint_closure(p, max_elements, check=True)[0]


def is_permutation_isomorphic(p: TranspPair) -> bool:
    """True iff one sheet bijection conjugates all three letters simultaneously."""
    n = p.n
    P, Q = p.left.perms, p.right.perms
    if [fixed_points(x) for x in P] != [fixed_points(x) for x in Q]:
        return False
    fwd = [-1] * n
    bwd = [-1] * n

    def extend(i0, j0):
        # map i0 -> j0 and propagate along generators; return assigned list or None
        assigned = []
        stack = [(i0, j0)]
        while stack:
            i, j = stack.pop()
            if fwd[i] == -1 and bwd[j] == -1:
                fwd[i] = j
                bwd[j] = i
                assigned.append(i)
                for x in range(3):
                    stack.append((P[x][i], Q[x][j]))
            elif fwd[i] != j or bwd[j] != i:
                for k in assigned:
                    bwd[fwd[k]] = -1
                    fwd[k] = -1
                return None
        return assigned

    def solve():
        try:
            i = fwd.index(-1)
        except ValueError:
            return True
        for j in range(n):
            if bwd[j] != -1:
                continue
            assigned = extend(i, j)
            if assigned is None:
                continue
            if solve():
                return True
            for k in assigned:
                bwd[fwd[k]] = -1
                fwd[k] = -1
        return False

    return solve()


def _orbitals(p: TranspPair) -> list[list[tuple[int, int]]]:
    """Orbits of the joint group on (right sheet, left sheet) pairs."""
    n = p.n
    P, Q = p.left.perms, p.right.perms
    parent = list(range(n * n))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for i in range(n):
        for j in range(n):
            u = i * n + j
            for x in range(3):
                v = Q[x][i] * n + P[x][j]
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[max(ru, rv)] = min(ru, rv)
    groups: dict[int, list[tuple[int, int]]] = {}
    for u in range(n * n):
        groups.setdefault(find(u), []).append(divmod(u, n))
    return [groups[k] for k in sorted(groups)]


def intertwiner_basis(p: TranspPair) -> list[np.ndarray]:
    """0/1 matrices spanning all ``T`` with ``T P(x) = Q(x) T``."""
    n = p.n
    basis = []
    for orb in _orbitals(p):
        T = np.zeros((n, n), dtype=np.int64)
        for i, j in orb:
            T[i, j] = 1
        basis.append(T)
    return basis


def permutation_matrix(perm: Perm) -> np.ndarray:
    n = len(perm)
    M = np.zeros((n, n), dtype=np.int64)
    M[list(perm), list(range(n))] = 1
    return M


def _is_permutation_matrix(T: np.ndarray) -> bool:
    return bool(np.all(T.sum(axis=0) == 1) and np.all(T.sum(axis=1) == 1))


def transplantation_matrix(p: TranspPair) -> np.ndarray | None:
    """Minimal nonnegative integer intertwiner that is not a scaled permutation matrix.

    Every nonnegative integer intertwiner is a nonnegative integer combination
    of orbital indicator matrices, so the minimum entry sum is attained either
    by one non-permutation orbital or by the sum of two distinct permutation
    orbitals.  Returns None when no such matrix exists.
    """
    basis = intertwiner_basis(p)
    perms = [T for T in basis if _is_permutation_matrix(T)]
    cands = [T for T in basis if not _is_permutation_matrix(T)]
    if len(perms) >= 2:
        cands.append(perms[0] + perms[1])
    if not cands:
        return None
    return min(cands, key=lambda T: int(T.sum()))


# ---------------------------------------------------------------------------
# quilts


@dataclass
class QuiltGraph:
    """Braid orbit of a pair; nodes keyed by canonical encoding."""

    seed: bytes
    name: str = ""
    nodes: dict[bytes, TranspPair] = field(default_factory=dict)
    words: dict[bytes, str] = field(default_factory=dict)
    edges: list[tuple[bytes, bytes, str]] = field(default_factory=list)
    group_order: int | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def order(self) -> list[bytes]:
        """Nodes in discovery order."""
        return list(self.nodes)

    def label(self, key: bytes, style: str = "index") -> str:
        """Paper-style label: ``7(3)`` (style 'index') or ``7LR`` (style 'word')."""
        if style == "word":
            return f"{self.name}{self.words[key]}"
        return f"{self.name}({self.order.index(key) + 1})"

    def pairs(self) -> list[TranspPair]:
        return list(self.nodes.values())


def explore_quilt(
    seed: TranspPair,
    max_nodes: int = 10_000,
    name: str = "",
    shuffle_seed: int | None = None,
) -> QuiltGraph:
    """Breadth-first closure of ``seed`` under L, R and their inverses.

    Nodes are canonical classes; each stores the pair and a braid word that
    reaches it from the seed (lowercase letters mark inverse moves).  Moves are
    tried in the order L, R, l, r unless ``shuffle_seed`` randomizes them, which
    is only useful for checking that the node set does not depend on order.
    Letter-renamed copies of each witness are braided as well, so the node set
    is a union of full classes.
    """
    rng = random.Random(shuffle_seed) if shuffle_seed is not None else None
    key = canonical_form(seed)
    q = QuiltGraph(seed=key, name=name)
    q.nodes[key] = seed
    q.words[key] = ""
    queue = deque([key])
    while queue:
        k = queue.popleft()
        pair, word = q.nodes[k], q.words[k]
        variants = [("", pair)] + [
            ("~" + "".join(LETTERS[s] for s in sigma), pair.permute_letters(sigma))
            for sigma in LETTER_PERMS[1:]
        ]
        moves = list(MOVES)
        if rng is not None:
            rng.shuffle(moves)
            rng.shuffle(variants)
        for tag, v in variants:
            for mname, move in moves:
                nxt = move(v)
                nk = canonical_form(nxt)
                if nk != k:
                    q.edges.append((k, nk, tag + mname))
                if nk not in q.nodes:
                    if len(q.nodes) >= max_nodes:
                        raise ResourceLimitError(f"quilt exceeds {max_nodes} nodes")
                    q.nodes[nk] = nxt
                    q.words[nk] = word + tag + mname
                    queue.append(nk)
    return q


# ---------------------------------------------------------------------------
# exhaustive search


def _reduced_cyclic_words(maxlen: int) -> list[tuple[int, ...]]:
    reps = set()

    def grow(w):
        if w and (len(w) == 1 or w[0] != w[-1]):
            rots = [w[i:] + w[:i] for i in range(len(w))]
            rots += [r[::-1] for r in rots]
            reps.add(min(rots))
        if len(w) == maxlen:
            return
        for x in range(3):
            if not w or w[-1] != x:
                grow(w + (x,))

    grow(())
    return sorted(reps, key=lambda w: (len(w), w))


def _random_words(count: int, seed: int) -> list[tuple[int, ...]]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        length = int(rng.integers(8, 40))
        w = [int(rng.integers(3))]
        while len(w) < length:
            x = int(rng.integers(3))
            if x != w[-1]:
                w.append(x)
        out.append(tuple(w))
    return out


def _fingerprints(trips: np.ndarray, words: list[tuple[int, ...]]) -> np.ndarray:
    from ._kernels import word_fixed_counts

    flat = np.array([x for w in words for x in w], dtype=np.int64)
    off = np.cumsum([0] + [len(w) for w in words]).astype(np.int64)
    return word_fixed_counts(trips, flat, off)


def _colliding(fp: np.ndarray, idx: np.ndarray) -> np.ndarray:
    if len(idx) == 0:
        return idx
    _, inv, cnt = np.unique(fp, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    return idx[cnt[inv] > 1]


def transitive_triples(n: int, treelike: bool = False) -> list[InvolutionTriple]:
    """One triple per isomorphism class of transitive actions on n sheets."""
    from ._kernels import enumerate_transitive

    return [InvolutionTriple(n, tuple(tuple(int(v) for v in r) for r in t))
            for t in enumerate_transitive(n, treelike)]


def find_transplantable_pairs(
    n: int, treelike: bool = False, max_elements: int = 10**7
) -> list[TranspPair]:
    """All transplantable, non-isomorphic pairs of transitive triples on n sheets.

    Each triple class appears once per side, so every pair is reported with a
    fixed letter assignment.  Candidates are bucketed by fixed-point counts of
    short cyclic words, then of random long words, and verified exactly.
    """
    from ._kernels import enumerate_transitive

    trips = enumerate_transitive(n, treelike)
    idx = np.arange(len(trips))
    fp = _fingerprints(trips, _reduced_cyclic_words(7))
    idx = _colliding(fp, idx)
    fp = fp[idx]
    if len(idx):
        fp = np.hstack([fp, _fingerprints(trips[idx], _random_words(64, seed=n))])
        keep = _colliding(fp, np.arange(len(idx)))
        idx, fp = idx[keep], fp[keep]
    buckets: dict[bytes, list[int]] = {}
    for k, row in zip(idx, fp):
        buckets.setdefault(row.tobytes(), []).append(int(k))
    log.info("n=%d: %d triples, %d in colliding buckets", n, len(trips), len(idx))
    out = []
    for members in buckets.values():
        for i, j in itertools.combinations(members, 2):
            P = InvolutionTriple(n, tuple(tuple(int(v) for v in r) for r in trips[i]))
            Q = InvolutionTriple(n, tuple(tuple(int(v) for v in r) for r in trips[j]))
            pair = TranspPair(P, Q)
            if is_transplantable(pair, max_elements) and not is_permutation_isomorphic(pair):
                out.append(pair)
    return out


def enumerate_pairs(
    n: int,
    treelike: bool | None = None,
    bound: int = DEFAULT_SIZE_BOUND,
    max_nodes: int = 10_000,
) -> list[QuiltGraph]:
    """Quilts of transplantable pairs of transitive involution triples on n sheets.

    ``treelike=None`` runs the unrestricted search for ``n <= FULL_SEARCH_LIMIT``
    and the treelike search above that (the unrestricted class count grows
    past 10^7 at n=13).  Treelike means the sheet graph is a tree; braiding
    preserves the transposition counts of the three letters, so treelike pairs
    form whole quilts.  Quilts are named ``<n>`` when alone, otherwise
    ``<n>a, <n>b, ...`` ordered by decreasing size then encoding.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > bound:
        raise ResourceLimitError(f"n={n} exceeds the size bound {bound}")
    if treelike is None:
        treelike = n > FULL_SEARCH_LIMIT
    if not treelike and n > FULL_SEARCH_LIMIT + 1:
        raise ResourceLimitError(
            f"unrestricted search at n={n} is infeasible; pass treelike=True"
        )
    pairs = find_transplantable_pairs(n, treelike)
    seen: set[bytes] = set()
    quilts = []
    for pair in pairs:
        if canonical_form(pair) in seen:
            continue
        q = explore_quilt(pair, max_nodes=max_nodes)
        seen.update(q.nodes)
        quilts.append(q)
    for q in quilts:
        # start each quilt from its smallest encoding so naming is reproducible
        start = min(q.nodes)
        if start != q.seed:
            fresh = explore_quilt(pair_from_canonical(start), max_nodes=max_nodes)
            q.seed, q.nodes, q.words, q.edges = fresh.seed, fresh.nodes, fresh.words, fresh.edges
        q.group_order = joint_group_order(q.nodes[q.seed])
    quilts.sort(key=lambda q: (-len(q), q.seed))
    for k, q in enumerate(quilts):
        q.name = str(n) if len(quilts) == 1 else f"{n}{chr(ord('a') + k)}"
    return quilts


# ---------------------------------------------------------------------------
# structured output


def quilts_to_json(quilts: Sequence[QuiltGraph]) -> str:
    doc = []
    for q in quilts:
        doc.append({
            "name": q.name,
            "size": next(iter(q.nodes.values())).n if q.nodes else None,
            "group_order": q.group_order,
            "pairs": [
                {
                    "label": q.label(k),
                    "braid_label": q.label(k, "word"),
                    "word": q.words[k],
                    "canonical": k.hex(),
                    "treelike": p.left.is_treelike and p.right.is_treelike,
                    "left": list(p.left.to_cycles()),
                    "right": list(p.right.to_cycles()),
                }
                for k, p in q.nodes.items()
            ],
            "edges": [[q.label(a), q.label(b), m] for a, b, m in q.edges],
        })
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# diagrams


@dataclass(frozen=True)
class DiagramStyle:
    """Drawing options for `emit_diagram`."""

    tile: float = 28.0
    spacing: float = 60.0
    thin: float = 1.2
    thick: float = 4.0
    dashes: tuple[str, str, str] = ("2,3", "7,4", "")
    seed: int = 0
    iterations: int = 300
    margin: float = 40.0


def _layout(t: InvolutionTriple, style: DiagramStyle) -> np.ndarray:
    """Deterministic spring layout of the sheet graph."""
    n = t.n
    rng = np.random.default_rng(style.seed)
    pos = rng.standard_normal((n, 2))
    edges = {(min(i, p[i]), max(i, p[i])) for p in t.perms for i in range(n) if p[i] != i}
    k = 1.0
    for it in range(style.iterations):
        disp = np.zeros_like(pos)
        d = pos[:, None, :] - pos[None, :, :]
        dist = np.linalg.norm(d, axis=-1) + np.eye(n)
        disp += (d / dist[..., None] ** 2 * k * k).sum(axis=1)
        for i, j in edges:
            v = pos[i] - pos[j]
            r = np.linalg.norm(v) + 1e-9
            f = v * r / k
            disp[i] -= f
            disp[j] += f
        temp = 0.1 * (1 - it / style.iterations) + 1e-3
        ln = np.linalg.norm(disp, axis=1, keepdims=True) + 1e-12
        pos += disp / ln * np.minimum(ln, temp)
    pos -= pos.mean(axis=0)
    return pos


def _panel(t: InvolutionTriple, style: DiagramStyle, x0: float, y0: float, title: str):
    pos = _layout(t, style) * style.spacing
    pos[:, 0] += x0 - pos[:, 0].min() + style.margin
    pos[:, 1] += y0 - pos[:, 1].min() + style.margin
    r = style.tile / 2
    corners = [np.array([r * math.cos(math.pi / 2 + 2 * math.pi * k / 3),
                         -r * math.sin(math.pi / 2 + 2 * math.pi * k / 3)]) for k in range(3)]
    parts = [f'<g class="panel" data-title="{title}">']
    parts.append(f'<text x="{x0 + style.margin:.2f}" y="{y0 + 16:.2f}" font-size="14">{title}</text>')
    for i in range(t.n):
        cx, cy = pos[i]
        pts = " ".join(f"{cx + c[0]:.2f},{cy + c[1]:.2f}" for c in corners)
        parts.append(f'<polygon class="tile" data-sheet="{i + 1}" points="{pts}" '
                     f'fill="#eef" stroke="none"/>')
        for x in range(3):
            # side x is opposite corner x
            p1 = corners[(x + 1) % 3]
            p2 = corners[(x + 2) % 3]
            if t.perms[x][i] == i:
                dash = f' stroke-dasharray="{style.dashes[x]}"' if style.dashes[x] else ""
                parts.append(
                    f'<line class="fixed" data-letter="{LETTERS[x]}" data-sheet="{i + 1}" '
                    f'x1="{cx + p1[0]:.2f}" y1="{cy + p1[1]:.2f}" x2="{cx + p2[0]:.2f}" '
                    f'y2="{cy + p2[1]:.2f}" stroke="black" stroke-width="{style.thick}"{dash}/>'
                )
    for x in range(3):
        for i in range(t.n):
            j = t.perms[x][i]
            if j > i:
                dash = f' stroke-dasharray="{style.dashes[x]}"' if style.dashes[x] else ""
                parts.append(
                    f'<line class="swap" data-letter="{LETTERS[x]}" data-sheets="{i + 1},{j + 1}" '
                    f'x1="{pos[i, 0]:.2f}" y1="{pos[i, 1]:.2f}" x2="{pos[j, 0]:.2f}" '
                    f'y2="{pos[j, 1]:.2f}" stroke="black" stroke-width="{style.thin}"{dash}/>'
                )
    parts.append("</g>")
    width = pos[:, 0].max() - x0 + style.margin + r
    height = pos[:, 1].max() - y0 + style.margin + r
    return parts, width, height


def emit_diagram(p: TranspPair | InvolutionTriple, style: DiagramStyle = DiagramStyle()) -> str:
    """SVG drawing of a pair (or a single triple).

    Each sheet is a triangle tile.  Thin lines join sheets swapped by a letter,
    thick tile sides mark sheets the letter fixes; letters a, b, c are dotted,
    dashed and solid.
    """
    triples = [("left", p.left), ("right", p.right)] if isinstance(p, TranspPair) else [("triple", p)]
    body = []
    x = 0.0
    height = 0.0
    for title, t in triples:
        parts, w, h = _panel(t, style, x, 0.0, title)
        body += parts
        x += w + style.margin
        height = max(height, h)
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{x:.2f}" height="{height:.2f}" '
            f'viewBox="0 0 {x:.2f} {height:.2f}">')
    return "\n".join([head] + body + ["</svg>"]) + "\n"
