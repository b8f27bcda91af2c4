"""Hyperbolic triangle reflection groups and orbifolds glued from triangles.

Points live on the hyperboloid ``x^2 + y^2 - z^2 = -1`` (``z > 0``) with the
form ``J = diag(1, 1, -1)``.  A triangle group is generated by reflections in
the three sides of a triangle with angles ``pi/p, pi/q, pi/r``; letters
``a, b, c`` name the reflections, with

* ``pi/p`` between sides ``a`` and ``b`` (that corner sits at ``x0 = (0,0,1)``),
* ``pi/q`` between sides ``b`` and ``c``,
* ``pi/r`` between sides ``c`` and ``a``.

An involution triple on ``n`` sheets turns into a finite permutation action
of the group; the stabilizer of a sheet is the deck group of the orbifold
glued from ``n`` triangle copies, sheet ``i`` meeting sheet ``x(i)`` across
side ``x``.
"""

from __future__ import annotations

import csv
import io
import math
import dataclasses
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .errors import ClassificationError, CoverageError, ResourceLimitError
from .permquilt import InvolutionTriple, compose
from .selberg import (
    GeodesicClassEntry, Geometry, OrbifoldFeatureSet, TraceCurve,
)

J = np.diag([1.0, 1.0, -1.0])
X0 = np.array([0.0, 0.0, 1.0])
LETTERS = "abc"


def lorentz(x, y):
    """Bilinear form ``x . J y`` (vectorised over leading axes)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return x[..., 0] * y[..., 0] + x[..., 1] * y[..., 1] - x[..., 2] * y[..., 2]


def hyp_distance(x, y):
    """Distance between hyperboloid points, stable for nearby points."""
    d = np.asarray(x, float) - np.asarray(y, float)
    return 2 * np.arcsinh(np.sqrt(np.maximum(lorentz(d, d), 0.0)) / 2)


def reflection_matrix(normal) -> np.ndarray:
    """Matrix of ``x -> x - 2 <x, n> n`` for a unit spacelike ``n``."""
    n = np.asarray(normal, float)
    return np.eye(3) - 2 * np.outer(n, J @ n)


def _timelike_unit(v):
    v = np.asarray(v, float)
    q = -lorentz(v, v)
    if q <= 0:
        raise ValueError("vector is not timelike")
    v = v / math.sqrt(q)
    return v if v[2] > 0 else -v


def _intersection(n1, n2):
    """Point where the lines with unit normals n1, n2 meet."""
    return _timelike_unit(J @ np.cross(n1, n2))


def boost_along(normal, ends, t: float) -> np.ndarray:
    """Translation by ``t`` along the line with unit normal ``normal``.

    ``ends = (v_plus, v_minus)`` are null vectors at the attracting and
    repelling ends; the translation moves toward ``v_plus``.
    """
    vp, vm = (np.asarray(e, float) for e in ends)
    n = np.asarray(normal, float)
    P = np.column_stack([vp, vm, n])
    return P @ np.diag([math.exp(t), math.exp(-t), 1.0]) @ np.linalg.inv(P)


# ---------------------------------------------------------------------------
# triangle groups


@dataclass
class TriangleGroup:
    orders: tuple
    normals: np.ndarray  # outward unit normals of sides a, b, c (rows)
    reflections: np.ndarray  # (3, 3, 3)
    vertices: np.ndarray  # corners ab, bc, ca (rows)
    sides: tuple  # lengths of sides a, b, c
    area: float
    incenter: np.ndarray
    inradius: float

    @property
    def diameter(self) -> float:
        return max(self.sides)

    @property
    def circumradius_from_incenter(self) -> float:
        return float(max(hyp_distance(self.incenter, v) for v in self.vertices))

    def side_opposite(self, order: int) -> float:
        """Length of the side facing the corner with angle ``pi/order``."""
        p, q, r = self.orders
        # side a faces corner bc, side b faces ca, side c faces ab
        by_corner = {p: self.sides[2], q: self.sides[0], r: self.sides[1]}
        if list(self.orders).count(order) != 1:
            raise ValueError("ambiguous or missing corner order")
        return by_corner[order]

    def contains(self, x, tol: float = 1e-12) -> bool:
        return bool(np.all(lorentz(self.normals, np.asarray(x, float)) <= tol))

    def word_matrix(self, word: str) -> np.ndarray:
        M = np.eye(3)
        for ch in word:
            M = M @ self.reflections[LETTERS.index(ch)]
        return M

    def reduce(self, M, tol: float = 1e-7, max_steps: int = 100_000):
        """Word for ``M`` by folding its image of the incenter back into the triangle.

        Returns the word (string) or ``None`` when ``M`` is not a group element.
        """
        M = np.array(M, float)
        z = M @ self.incenter
        word = []
        for _ in range(max_steps):
            vals = lorentz(self.normals, z)
            s = int(np.argmax(vals))
            if vals[s] <= 0:
                break
            z = self.reflections[s] @ z
            M = self.reflections[s] @ M
            word.append(LETTERS[s])
        else:
            raise ResourceLimitError("folding did not terminate")
        scale = max(1.0, float(np.max(np.abs(M))))
        if np.max(np.abs(M - np.eye(3))) > tol * scale:
            return None
        return "".join(word)


def triangle_group(p: int, q: int, r: int) -> TriangleGroup:
    """Reflection group of the triangle with angles ``pi/p, pi/q, pi/r``."""
    if min(p, q, r) < 2:
        raise ValueError("orders must be at least 2")
    if Fraction(1, p) + Fraction(1, q) + Fraction(1, r) >= 1:
        raise ValueError(f"({p},{q},{r}) is not a hyperbolic triangle")
    cp, cq, cr = (math.cos(math.pi / k) for k in (p, q, r))
    sp = math.sin(math.pi / p)
    na = np.array([0.0, -1.0, 0.0])
    nb = np.array([-sp, cp, 0.0])
    x = (cq + cr * cp) / sp
    y = cr
    nc = np.array([x, y, math.sqrt(x * x + y * y - 1)])
    normals = np.array([na, nb, nc])
    refl = np.array([reflection_matrix(nv) for nv in normals])
    verts = np.array([X0, _intersection(nb, nc), _intersection(nc, na)])
    # side a runs from corner ab to corner ca, and so on
    sides = (
        float(hyp_distance(verts[0], verts[2])),
        float(hyp_distance(verts[0], verts[1])),
        float(hyp_distance(verts[1], verts[2])),
    )
    area = math.pi * (1 - 1 / p - 1 / q - 1 / r)
    # incenter: equal negative form with each outward normal
    y_in = np.linalg.solve(normals @ J, -np.ones(3))
    y_in = _timelike_unit(y_in)
    inradius = float(math.asinh(-lorentz(normals[0], y_in)))
    return TriangleGroup((p, q, r), normals, refl, verts, sides, area, y_in, inradius)


# ---------------------------------------------------------------------------
# elements


@dataclass(frozen=True)
class GroupElement:
    matrix: np.ndarray
    word: str
    displacement: float


@dataclass(frozen=True)
class Classification:
    kind: str  # identity | reflection | rotation | translation | glide
    angle: float | None = None
    length: float | None = None
    axis_normal: np.ndarray | None = None
    axis_ends: tuple | None = None  # (attracting, repelling) null vectors, third coord 1
    axis_distance: float | None = None  # from x0

    @property
    def det(self) -> int:
        return -1 if self.kind in ("reflection", "glide") else 1


def _null_eigvec(M, lam):
    w, V = np.linalg.eig(M)
    k = int(np.argmin(np.abs(w - lam)))
    v = np.real(V[:, k])
    return v / v[2]


def classify_element(g, margin: float = 1e-7) -> Classification:
    """Type of an isometry given by a Lorentz matrix (or a GroupElement)."""
    M = g.matrix if isinstance(g, GroupElement) else np.asarray(g, float)
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - np.eye(3))) <= 1e-9 * scale:
        return Classification("identity")
    det = float(np.linalg.det(M))
    tr = float(np.trace(M))
    if det < 0:
        if abs(tr - 1) < margin * scale:
            w, V = np.linalg.eig(M)
            k = int(np.argmin(np.abs(w + 1)))
            n = np.real(V[:, k])
            n = n / math.sqrt(lorentz(n, n))
            return Classification("reflection", axis_normal=n,
                                  axis_distance=float(abs(math.asinh(lorentz(X0, n)))))
        if tr < 1:
            raise ClassificationError(f"orientation-reversing matrix with trace {tr} < 1")
        ell = math.acosh((tr + 1) / 2)
        nvec_eig = -1.0
    else:
        if tr < 3 - margin * scale:
            cos_t = max(-1.0, min(1.0, (tr - 1) / 2))
            return Classification("rotation", angle=math.acos(cos_t))
        if tr <= 3 + margin * scale:
            raise ClassificationError(f"trace {tr} too close to 3 (parabolic?)")
        ell = math.acosh((tr - 1) / 2)
        nvec_eig = 1.0
    vp = _null_eigvec(M, math.exp(ell))
    vm = _null_eigvec(M, math.exp(-ell))
    n = J @ np.cross(vp, vm)
    n = n / math.sqrt(lorentz(n, n))
    w, V = np.linalg.eig(M)
    k = int(np.argmin(np.abs(w - nvec_eig)))
    return Classification(
        "translation" if det > 0 else "glide", length=ell, axis_normal=n,
        axis_ends=(vp, vm), axis_distance=float(abs(math.asinh(lorentz(X0, n)))),
    )


def axis_distance(point, cls: Classification) -> float:
    return float(abs(math.asinh(lorentz(np.asarray(point, float), cls.axis_normal))))


# ---------------------------------------------------------------------------
# subgroups from glueing patterns


@dataclass
class OrbifoldSubgroup:
    parent: TriangleGroup
    action: InvolutionTriple
    sheet: int = 0

    @property
    def index(self) -> int:
        return self.action.n

    @property
    def area(self) -> float:
        return self.index * self.parent.area

    def perm_of_word(self, word: str) -> tuple:
        p = tuple(range(self.index))
        for ch in word:
            p = compose(p, self.action.perms[LETTERS.index(ch)])
        return p

    def contains_word(self, word: str) -> bool:
        return self.perm_of_word(word)[self.sheet] == self.sheet

    def tiles(self) -> dict:
        """Element ``g_j`` per sheet ``j`` with tile ``g_j T`` carrying sheet ``j``.

        Tile ``g T`` carries sheet ``perm(g)^-1 (base sheet)``; crossing side
        ``x`` of a tile moves to sheet ``x(j)``.
        """
        out = {self.sheet: ""}
        queue = [self.sheet]
        while queue:
            j = queue.pop(0)
            for k, ch in enumerate(LETTERS):
                i = self.action.perms[k][j]
                if i not in out:
                    out[i] = out[j] + ch
                    queue.append(i)
        return out

    def tile_matrices(self) -> dict:
        return {j: self.parent.word_matrix(w) for j, w in self.tiles().items()}

    def radius_about(self, point) -> float:
        """Largest distance from ``point`` to a vertex of the glued tiles."""
        best = 0.0
        for M in self.tile_matrices().values():
            for v in self.parent.vertices:
                best = max(best, float(hyp_distance(point, M @ v)))
        return best


def glue_subgroup(T: TriangleGroup, triple: InvolutionTriple, sheet: int = 0) -> OrbifoldSubgroup:
    """Deck group of the orbifold glued from ``triple.n`` copies of the triangle."""
    if not 0 <= sheet < triple.n:
        raise ValueError("sheet out of range")
    if not triple.is_transitive:
        raise ValueError("glueing pattern is not transitive (disconnected cover)")
    return OrbifoldSubgroup(T, triple, sheet)


def _group_of(S):
    if isinstance(S, OrbifoldSubgroup):
        return S.parent, S
    return S, None


def _dfs(T: TriangleGroup, S, base, prune, keep, axial=False, lmax=0.0, rho_max=0.0,
         max_elements=20_000_000, capacity=None, store_words=True):
    gperms = (np.array(S.action.perms, dtype=np.int64) if S is not None
              else np.zeros((3, 1), np.int64))
    if capacity is None:
        # ball of radius keep contains about 2 pi (cosh keep - 1) / area elements
        est = 2 * math.pi * (math.cosh(min(keep, 40)) - 1) / T.area
        capacity = int(min(max_elements, 4 * est + 1000))
    while True:
        count, visited, status, mats, perms, words, depths = _kernels.coxeter_dfs(
            T.reflections, T.normals, T.incenter, np.asarray(base, float), float(prune),
            float(keep), gperms, axial, float(lmax), float(rho_max), int(max_elements),
            int(capacity), 512, store_words,
        )
        if status == 1 and capacity < max_elements:
            capacity = min(max_elements, capacity * 4)
            continue
        if status in (1, 2):
            raise ResourceLimitError(
                f"element cap {max_elements} exceeded (visited {visited}); raise max_elements"
            )
        if status == 3:
            raise ResourceLimitError("word-length cap exceeded")
        return mats, perms, words, depths, visited


def enumerate_elements(S, max_disp: float, margin: float | None = None,
                       max_elements: int = 20_000_000) -> list[GroupElement]:
    """All elements moving ``x0`` by at most ``max_disp``, each exactly once.

    ``S`` is a TriangleGroup or an OrbifoldSubgroup.  The word search is pruned
    at ``max_disp + margin`` (default one triangle diameter).
    """
    if max_disp <= 0:
        raise ValueError("max_disp must be positive")
    T, sub = _group_of(S)
    margin = 2 * T.diameter if margin is None else margin
    mats, perms, words, depths, _ = _dfs(T, sub, X0, max_disp + margin, max_disp,
                                         max_elements=max_elements)
    out = []
    for k in range(len(mats)):
        if sub is not None and perms[k, sub.sheet] != sub.sheet:
            continue
        w = "".join(LETTERS[x] for x in words[k, : depths[k]])
        out.append(GroupElement(mats[k], w, float(hyp_distance(X0, mats[k] @ X0))))
    out.sort(key=lambda e: (round(e.displacement, 9), len(e.word), e.word))
    return out


# ---------------------------------------------------------------------------
# signature


@dataclass
class OrbifoldSignature:
    area: float
    mirror_length: float
    cones: list  # interior cone orders, sorted
    boundaries: list  # per boundary component, corner orders in cyclic order
    euler_underlying: int

    @property
    def corners(self) -> list:
        return sorted(k for b in self.boundaries for k in b)

    @property
    def orbifold_euler(self) -> Fraction:
        chi = Fraction(self.euler_underlying)
        chi -= sum(Fraction(k - 1, k) for k in self.cones)
        chi -= sum(Fraction(k - 1, 2 * k) for k in self.corners)
        return chi

    def conway_symbol(self) -> str:
        """Cone digits then one ``*``-block per boundary (underlying sphere with holes only)."""
        cones = "".join(str(k) for k in sorted(self.cones, reverse=True))
        return cones + "".join("*" + "".join(map(str, _canonical_cycle(b))) for b in self.boundaries)

    def features(self) -> OrbifoldFeatureSet:
        return OrbifoldFeatureSet.from_signature(
            self.area, self.mirror_length, cones=self.cones, corners=self.corners,
            geometry=Geometry.HYPERBOLIC,
        )


def _canonical_cycle(seq) -> tuple:
    seq = tuple(seq)
    if not seq:
        return seq
    cands = []
    for s in (seq, seq[::-1]):
        cands += [s[i:] + s[:i] for i in range(len(s))]
    return min(cands)


def same_cycle(a, b) -> bool:
    """Whether two corner sequences agree up to rotation and reversal."""
    return _canonical_cycle(a) == _canonical_cycle(b)


def _corner_order(T: TriangleGroup, x: int, y: int) -> int:
    p, q, r = T.orders
    return {frozenset((0, 1)): p, frozenset((1, 2)): q, frozenset((0, 2)): r}[frozenset((x, y))]


def orbifold_signature(S: OrbifoldSubgroup) -> OrbifoldSignature:
    """Area, mirror length, cone orders and cyclic corner sequences of the glued orbifold."""
    T = S.parent
    perms = S.action.perms
    n = S.index
    cones: list = []
    vertex_count = 0
    for x, y in ((0, 1), (1, 2), (0, 2)):
        N = _corner_order(T, x, y)
        seen = set()
        for j in range(n):
            if j in seen:
                continue
            orb, stack = {j}, [j]
            while stack:
                i = stack.pop()
                for k in (perms[x][i], perms[y][i]):
                    if k not in orb:
                        orb.add(k)
                        stack.append(k)
            seen |= orb
            vertex_count += 1
            mirrored = any(perms[x][i] == i or perms[y][i] == i for i in orb)
            if not mirrored:
                if (2 * N) % len(orb):
                    raise ClassificationError("vertex orbit incompatible with the corner angle")
                k = 2 * N // len(orb)
                if k > 1:
                    cones.append(k)
    # boundary walk
    bedges = {(j, s) for s in range(3) for j in range(n) if perms[s][j] == j}
    edges_total = (3 * n + len(bedges)) // 2
    boundaries, mirror = [], 0.0
    unused = set(bedges)
    while unused:
        start = min(unused)
        j, s = start
        # leave side s towards the corner shared with the smaller other letter
        t = min(u for u in range(3) if u != s)
        seq = []
        cur = (j, s, t)  # on edge (j, s), heading to corner {s, t}
        while True:
            j, s, t = cur
            unused.discard((j, s))
            mirror += T.sides[s]
            m, i, cross = 1, j, t
            while perms[cross][i] != i:
                i = perms[cross][i]
                cross = s if cross == t else t
                m += 1
            N = _corner_order(T, s, t)
            if N % m:
                raise ClassificationError("corner walk incompatible with the corner angle")
            if N // m > 1:
                seq.append(N // m)
            # new boundary edge (i, cross); continue to its other corner
            new_s = cross
            other = s if cross == t else t
            new_t = next(u for u in range(3) if u not in (new_s, other))
            cur = (i, new_s, new_t)
            if (i, new_s) not in unused and (i, new_s) == start:
                break
            if (i, new_s) not in unused:
                break
        boundaries.append(seq)
    euler = vertex_count - edges_total + n
    return OrbifoldSignature(S.area, mirror, sorted(cones), boundaries, euler)


def isospectral_triangle_pair():
    """The two orbifolds glued from seven (6,3,4) triangles by the size-7 quilt seed.

    Returns ``(T, left, right)``; their types are ``*224236`` and ``*224623``.
    """
    left = InvolutionTriple.from_cycles(7, "(3 4)(5 6)", "(2 3)(5 7)", "(1 2)(4 5)")
    right = InvolutionTriple.from_cycles(7, "(2 3)(6 7)", "(2 4)(5 6)", "(1 2)(3 5)")
    T = triangle_group(6, 3, 4)
    return T, glue_subgroup(T, left, 0), glue_subgroup(T, right, 0)


# ---------------------------------------------------------------------------
# geodesic census


def _displacement_bound(ell: float, rho: float) -> float:
    """Largest displacement of a point within ``rho`` of the axis of a length-``ell`` element."""
    trans = 2 * math.asinh(math.cosh(rho) * math.sinh(ell / 2))
    glide = math.acosh(math.cosh(rho) ** 2 * math.cosh(ell) + math.sinh(rho) ** 2)
    return max(trans, glide)


def _axis_point(cls: Classification, t: float) -> np.ndarray:
    vp, vm = cls.axis_ends
    nrm = math.sqrt(-2 * lorentz(vp, vm))
    return (math.exp(t) * vp + math.exp(-t) * vm) / nrm


def _axis_param(cls: Classification, x) -> float:
    vp, vm = cls.axis_ends
    return 0.5 * math.log(lorentz(x, vm) / lorentz(x, vp))


def _fold_point(T: TriangleGroup, p):
    """Word ``w`` with ``p`` in the tile ``w T``."""
    z = np.array(p, float)
    word = []
    for _ in range(100_000):
        vals = lorentz(T.normals, z)
        s = int(np.argmax(vals))
        if vals[s] <= 1e-12:
            return "".join(word)
        z = T.reflections[s] @ z
        word.append(LETTERS[s])
    raise ResourceLimitError("folding did not terminate")


def _axis_key(cls: Classification) -> np.ndarray:
    """Boundary points of the oriented axis, the det and the length.

    Long words drift slightly off the Lorentz group, which moves the computed
    null eigenvectors off the light cone but barely changes their direction,
    so each end is keyed by its direction only.
    """
    vp, vm = cls.axis_ends
    up, um = vp[:2] / np.hypot(*vp[:2]), vm[:2] / np.hypot(*vm[:2])
    return np.concatenate([up, um, [cls.det, cls.length]])


# An axis through a tile vertex, or along a tile edge, touches the tile only
# up to round-off.  The pool of class representatives admits touching axes at
# _TOUCH; the conjugate walk visits tiles at the looser _TOUCH_OUTER and insists
# on finding a representative only for tiles the axis crosses by more than
# _CROSS, so the two numerical tests never disagree about a borderline tile.
_TOUCH, _TOUCH_OUTER, _CROSS = 1e-7, 1e-6, 1e-6


def _meets(side, tol: float) -> bool:
    """Whether a line with signed vertex values ``side`` meets the closed tile, up to ``tol``."""
    return bool(side.min() <= tol and side.max() >= -tol)


@dataclass
class _AxialClass:
    """A conjugacy class of the full triangle group, with its centralizer data."""

    matrix: np.ndarray
    word: str
    cls: Classification
    root_word: str  # primitive element of the axis stabilizer
    root_length: float
    mirror_word: str | None  # reflection in the axis, if in the group


def _walk_conjugates(T: TriangleGroup, h: np.ndarray, cls: Classification):
    """Tiles ``g T`` meeting the axis over one period (plus slack).

    Yields ``(word, matrix, required)``; the conjugates ``g^-1 h g`` are exactly
    the elements of the class whose axis meets ``T``.  ``required`` is false
    for tiles the axis only grazes within round-off.
    """
    t0 = _axis_param(cls, T.incenter)
    # one period centered on the base tile keeps the tile matrices small
    lo, hi = t0 - cls.length / 2 - 1.0, t0 + cls.length / 2 + 1.0
    start = _fold_point(T, _axis_point(cls, t0))
    n = cls.axis_normal
    seen = {}
    queue = [start]
    out = []
    while queue:
        w = queue.pop()
        M = T.word_matrix(w)
        key = tuple(np.round(M @ T.incenter, 6))
        if key in seen:
            continue
        seen[key] = True
        verts = (M @ T.vertices.T).T
        side = lorentz(verts, n)
        scale = max(1.0, float(np.max(np.abs(verts))))
        if not _meets(side, _TOUCH_OUTER * scale):
            continue
        # vertices project onto the axis via the nearest-point map
        ts = [_axis_param(cls, v - lorentz(v, n) * n) for v in verts]
        if max(ts) < lo or min(ts) > hi:
            continue
        out.append((w, M, _meets(side, -_CROSS * scale)))
        for ch in LETTERS:
            queue.append(w + ch)
    return out


def _perm_power_fixes(p, m, j):
    for _ in range(m):
        j = p[j]
    return j


def _full_group_classes(T: TriangleGroup, lmax: float, lengths=None, margin=None,
                        max_elements=20_000_000, tol=1e-6):
    """Conjugacy classes of translations and glides of length <= lmax (or in ``lengths``)."""
    rho = T.circumradius_from_incenter
    margin = T.diameter if margin is None else margin
    D = _displacement_bound(lmax, rho)
    mats, _, words, depths, visited = _dfs(
        T, None, T.incenter, D + margin, D, axial=True, lmax=lmax + tol,
        rho_max=rho + 1e-6, max_elements=max_elements, capacity=200_000,
    )
    # lengths from traces, vectorised; only classes in ``lengths`` and their
    # possible roots (lengths dividing them) are classified
    det = np.sign(np.linalg.det(mats)) if len(mats) else np.zeros(0)
    tr = np.trace(mats, axis1=1, axis2=2) if len(mats) else np.zeros(0)
    ell = np.arccosh(np.maximum((tr - det) / 2, 1.0))
    if lengths is not None:
        ratio = np.array(lengths)[None, :] / np.maximum(ell, 1e-9)[:, None]
        near = np.abs(ratio - np.round(ratio)) * ell[:, None] < tol
        wanted = np.nonzero(near.any(axis=1) & (ell > 1e-6))[0]
    else:
        wanted = np.nonzero(ell > 1e-6)[0]
    pool = []  # axial elements whose axis meets the base tile
    for k in wanted:
        cls = classify_element(mats[k])
        if cls.kind not in ("translation", "glide"):
            continue
        if not _meets(lorentz(T.vertices, cls.axis_normal), _TOUCH):
            continue  # axis misses the base tile
        pool.append((k, cls))
    if not pool:
        return [], visited
    ends_tree = cKDTree(np.array([_axis_key(c)[:4] for _, c in pool]))
    cands = []
    for k, cls in pool:
        if lengths is not None and not any(abs(cls.length - L) < tol for L in lengths):
            continue
        w = "".join(LETTERS[x] for x in words[k, : depths[k]])
        # the primitive element of the axis stabilizer shares the oriented axis
        same_axis = ends_tree.query_ball_point(_axis_key(cls)[:4], r=1e-7)
        r = min(same_axis, key=lambda i: pool[i][1].length)
        root_w = "".join(LETTERS[x] for x in words[pool[r][0], : depths[pool[r][0]]])
        mirror = T.reduce(reflection_matrix(cls.axis_normal))
        cands.append((mats[k], w, cls, root_w, pool[r][1].length, mirror))
    # an axial element is fixed by its oriented axis, length and det; the axis
    # endpoints are well conditioned where images of points are not
    keys = np.array([_axis_key(c[2]) for c in cands]) if cands else np.zeros((0, 6))
    tree = cKDTree(keys) if len(cands) else None
    label = [-1] * len(cands)
    classes = []
    for k, (M, w, cls, root_w, root_len, mirror) in enumerate(cands):
        if label[k] >= 0:
            continue
        cid = len(classes)
        for _, g, required in _walk_conjugates(T, M, cls):
            # conjugating a long matrix loses digits; moving its axis does not
            ends = tuple(np.linalg.solve(g, v) for v in cls.axis_ends)
            moved = dataclasses.replace(cls, axis_ends=ends)
            err = 1e-12 * float(np.abs(g).max()) ** 2
            hits = tree.query_ball_point(_axis_key(moved), r=max(1e-6, err))
            if not hits and not required:
                continue
            if not hits:
                raise CoverageError(
                    "a conjugate with axis through the base tile was not enumerated; "
                    "increase the search margin"
                )
            for i in hits:
                if label[i] not in (-1, cid):
                    raise ClassificationError("conjugacy classes overlap")
                label[i] = cid
        classes.append(_AxialClass(M, w, cls, root_w, root_len, mirror))
    return classes, visited


def _census_records(S: OrbifoldSubgroup, Lmax: float, lengths=None, margin=None,
                    max_elements: int = 20_000_000) -> list[tuple[GeodesicClassEntry, bool]]:
    """Census entries, each paired with whether its axis runs along triangle edges."""
    if Lmax <= 0:
        raise ValueError("Lmax must be positive")
    T = S.parent
    classes, _ = _full_group_classes(T, Lmax, lengths, margin, max_elements)
    out = []
    for c in classes:
        ph = S.perm_of_word(c.word)
        proot = S.perm_of_word(c.root_word)
        pmir = S.perm_of_word(c.mirror_word) if c.mirror_word is not None else None
        fixed = [j for j in range(S.index) if ph[j] == j]
        seen: set = set()
        for j in fixed:
            if j in seen:
                continue
            orb, stack = {j}, [j]
            while stack:
                i = stack.pop()
                for g in (proot,) + ((pmir,) if pmir is not None else ()):
                    k = g[i]
                    if k not in orb:
                        orb.add(k)
                        stack.append(k)
            seen |= orb
            boundary = pmir is not None and pmir[j] == j
            m = 1
            while True:
                jm = _perm_power_fixes(proot, m, j)
                if jm == j or (pmir is not None and pmir[jm] == j):
                    break
                m += 1
            prim = m * c.root_length
            power = round(c.cls.length / prim)
            if abs(power * prim - c.cls.length) > 1e-6:
                raise ClassificationError("class length is not a multiple of its primitive length")
            kind = "recto" if c.cls.kind == "translation" else "verso"
            entry = GeodesicClassEntry.make(c.cls.length, kind, prim, power, boundary)
            out.append((entry, c.mirror_word is not None))
    out.sort(key=lambda r: (round(r[0].length, 6), r[0].orientability, r[0].boundary, r[0].power))
    return out


def geodesic_census(S: OrbifoldSubgroup, Lmax: float, lengths=None, margin=None,
                    max_elements: int = 20_000_000) -> list[GeodesicClassEntry]:
    """One entry per conjugacy class of translations and glides in ``S`` with length <= Lmax.

    With ``lengths`` given, only classes of (approximately) those lengths are returned.
    Boundary classes come as recto/verso twins of weight ``1/(2k)`` each.
    """
    return [e for e, _ in _census_records(S, Lmax, lengths, margin, max_elements)]


def edge_length_rows(T: TriangleGroup, deep: bool = False) -> dict:
    """Named lengths of closed paths along triangle edges.

    ``c`` is the side opposite the ``pi/3`` corner and ``a, b`` are the other two.
    """
    c = T.side_opposite(3)
    ab = sum(T.sides) - c
    rows = {"2c": 2 * c, "2a+2b": 2 * ab, "4c": 4 * c}
    if deep:
        rows["4a+4b"] = 4 * ab
    return rows


@dataclass
class EdgeGeodesicTotals:
    """Weighted counts of edge-running geodesic classes at one length."""

    label: str
    length: float
    boundary: dict  # orientability -> Fraction
    interior: dict

    def total(self, orientability: str) -> Fraction:
        return self.boundary[orientability] + self.interior[orientability]


def edge_geodesic_table(S: OrbifoldSubgroup, rows: dict, tol: float = 1e-6,
                        **census_kw) -> list[EdgeGeodesicTotals]:
    """Totals of geodesic classes whose axes run along triangle edges, per named length.

    Classes whose axes cross triangle interiors are left out: they pair up
    between transplantable orbifolds class by class.
    """
    records = _census_records(S, max(rows.values()) + tol, list(rows.values()), **census_kw)
    out = []
    for label, L in rows.items():
        bd = {"recto": Fraction(0), "verso": Fraction(0)}
        it = {"recto": Fraction(0), "verso": Fraction(0)}
        for e, on_edges in records:
            if on_edges and abs(e.length - L) < tol:
                (bd if e.boundary else it)[e.orientability] += e.weight
        out.append(EdgeGeodesicTotals(label, L, bd, it))
    return out


def census_to_csv(entries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["length", "orientability", "primitive_length", "power", "boundary", "weight"])
    for e in entries:
        w.writerow([f"{e.length:.12g}", e.orientability, f"{e.primitive_length:.12g}",
                    e.power, int(e.boundary), str(e.weight)])
    return buf.getvalue()


def format_edge_table(title: str, rows: list[EdgeGeodesicTotals]) -> str:
    """Plain-text table: boundary, interior and total recto/verso weights per length."""
    head = f"{'length':<8}{'value':>10} | {'bdy recto':>9} {'bdy verso':>9} | " \
           f"{'int recto':>9} {'int verso':>9} | {'recto':>6} {'verso':>6}"
    lines = [title, head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r.label:<8}{r.length:>10.6f} | {str(r.boundary['recto']):>9} "
            f"{str(r.boundary['verso']):>9} | {str(r.interior['recto']):>9} "
            f"{str(r.interior['verso']):>9} | {str(r.total('recto')):>6} {str(r.total('verso')):>6}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Monte Carlo counting trace


def sample_triangle(T: TriangleGroup, size: int, rng) -> np.ndarray:
    """Points uniform (hyperbolic area) in the base triangle, by rejection from a disk."""
    rho = T.circumradius_from_incenter * (1 + 1e-9)
    # orthonormal frame at the incenter
    y = T.incenter
    e1 = np.array([1.0, 0.0, 0.0]) + lorentz([1.0, 0.0, 0.0], y) * y
    e1 /= math.sqrt(lorentz(e1, e1))
    e2 = J @ np.cross(y, e1)
    e2 /= math.sqrt(lorentz(e2, e2))
    out = []
    need = size
    while need > 0:
        m = max(64, int(1.5 * need * 2 * math.pi * (math.cosh(rho) - 1) / T.area))
        r = np.arccosh(1 + rng.random(m) * (math.cosh(rho) - 1))
        th = 2 * math.pi * rng.random(m)
        pts = (np.cosh(r)[:, None] * y
               + (np.sinh(r) * np.cos(th))[:, None] * e1
               + (np.sinh(r) * np.sin(th))[:, None] * e2)
        inside = np.all(pts @ J @ T.normals.T <= 0, axis=1)
        pts = pts[inside][:need]
        out.append(pts)
        need -= len(pts)
    return np.concatenate(out)


def monte_carlo_trace(S: OrbifoldSubgroup, grid, samples: int = 2000, rng_seed=None,
                      max_elements: int = 20_000_000) -> TraceCurve:
    """Estimate of the counting trace by averaging ``#{g in S : d(x, g x) <= s}`` over ``x``.

    Points ``x`` are uniform in the union of the glued tiles; the band holds
    one standard error.
    """
    grid = np.asarray(grid, float)
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(rng_seed)
    T = S.parent
    tiles = list(S.tile_matrices().values())
    # enumerate around the most central tile incenter
    centers = [M @ T.incenter for M in tiles]
    center = min(centers, key=S.radius_about)
    reach = float(grid.max()) + 2 * S.radius_about(center)
    mats, perms, _, _, _ = _dfs(T, S, center, reach + 2 * T.diameter, reach,
                                max_elements=max_elements, store_words=False)
    G = mats[perms[:, S.sheet] == S.sheet]
    which = rng.integers(len(tiles), size=samples)
    base = sample_triangle(T, samples, rng)
    pts = np.einsum("nij,nj->ni", np.array(tiles)[which], base)
    counts = np.empty((samples, len(grid)))
    for i, x in enumerate(pts):
        d = np.sort(hyp_distance(G @ x, x))
        counts[i] = np.searchsorted(d, grid, side="right")
    mean = S.area * counts.mean(axis=0)
    err = S.area * counts.std(axis=0, ddof=1) / math.sqrt(samples)
    return TraceCurve(grid, mean, "counting", err)
