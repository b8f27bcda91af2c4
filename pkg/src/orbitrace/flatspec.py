"""Exact Laplace spectra of flat tori and their wallpaper-group quotients.

A flat torus ``Lambda \\ R^2`` has eigenfunctions ``exp(2 pi i k.x)`` for
dual-lattice vectors ``k`` and eigenvalues ``4 pi^2 |k|^2``.  For a quotient
by a finite group ``G`` of affine maps ``x -> A x + t`` the multiplicity of an
eigenvalue is the dimension of the ``G``-invariant part of the torus
eigenspace, obtained by averaging traces::

    mult = 1/|G| sum_{(A,t)} chi(A,t) sum_{k in E, A^T k = k} exp(2 pi i k.t)

with ``chi`` trivial (Neumann / plain quotient) or ``det A`` (Dirichlet
condition on mirrors).

All lattice bookkeeping is done in integer lattice coordinates so that
eigenvalues are grouped by exact integer quadratic-form values.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import ConsistencyError, OrbitraceError, ParseError

TWO_PI = 2 * math.pi


class CutoffError(OrbitraceError):
    """The spectrum cutoff is too low for the requested accuracy."""

    def __init__(self, message, required_cutoff):
        super().__init__(message)
        self.required_cutoff = required_cutoff


def _as_fraction(x: float, max_den: int = 10_000, tol: float = 1e-12) -> Fraction | None:
    f = Fraction(x).limit_denominator(max_den)
    if abs(float(f) - x) <= tol * max(1.0, abs(x)):
        return f
    return None


@dataclass(frozen=True)
class Lattice2:
    """Lattice in R^2 spanned by the columns of ``basis``."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float).reshape(2, 2)
        if abs(np.linalg.det(B)) < 1e-14:
            raise ValueError("lattice basis is degenerate")
        object.__setattr__(self, "basis", B)

    @classmethod
    def from_vectors(cls, v1, v2) -> "Lattice2":
        return cls(np.column_stack([v1, v2]))

    @property
    def covolume(self) -> float:
        return abs(float(np.linalg.det(self.basis)))

    @property
    def dual_gram(self) -> np.ndarray:
        """Gram matrix of the dual basis: |k|^2 = m^T G m for integer m."""
        B = self.basis
        return np.linalg.inv(B.T @ B)

    def integer_form(self):
        """``(A, unit)`` with integer symmetric ``A`` and ``|k|^2 = unit * m^T A m``.

        Returns None when the dual Gram matrix is not a real multiple of a
        rational matrix.
        """
        G = self.dual_gram
        ratios = [_as_fraction(float(v / G[0, 0])) for v in (G[0, 0], G[0, 1], G[1, 1])]
        if any(r is None for r in ratios):
            return None
        den = reduce(math.lcm, (r.denominator for r in ratios))
        a, b, c = (int(r * den) for r in ratios)
        # m^T A m with off-diagonal entries 2b so A stays integral
        return np.array([[a, b], [b, c]], dtype=np.int64), float(G[0, 0]) / den

    def to_lattice_coords(self, v) -> np.ndarray:
        return np.linalg.solve(self.basis, np.asarray(v, dtype=float))


HEXAGONAL = Lattice2.from_vectors([1.0, 0.0], [-0.5, math.sqrt(3) / 2])
SQUARE = Lattice2.from_vectors([1.0, 0.0], [0.0, 1.0])


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def reflection(phi: float) -> np.ndarray:
    """Reflection across the line through the origin at angle ``phi``."""
    c, s = math.cos(2 * phi), math.sin(2 * phi)
    return np.array([[c, s], [s, -c]])


@dataclass
class WallpaperQuotient:
    """Torus ``lattice \\ R^2`` divided by a finite group of affine isometries.

    ``point_group`` lists pairs ``(A, t)`` (orthogonal 2x2 matrix, translation)
    forming a group modulo the lattice.  ``character`` is ``"trivial"`` or
    ``"det"``; the latter gives the signed (Dirichlet-on-mirrors) spectrum.
    """

    lattice: Lattice2
    point_group: list = field(default_factory=list)
    name: str = ""
    character: str = "trivial"

    def __post_init__(self):
        if not self.point_group:
            self.point_group = [(np.eye(2), np.zeros(2))]
        self.point_group = [(np.asarray(A, float), np.asarray(t, float)) for A, t in self.point_group]
        if self.character not in ("trivial", "det"):
            raise ValueError("character must be 'trivial' or 'det'")
        self._integral = [self._lattice_action(A, t) for A, t in self.point_group]

    def _lattice_action(self, A, t):
        B = self.lattice.basis
        M = np.linalg.solve(B, A @ B)
        Mi = np.rint(M)
        if np.max(np.abs(M - Mi)) > 1e-9:
            raise ValueError(f"{self.name}: a point-group matrix does not preserve the lattice")
        return Mi.astype(np.int64), np.linalg.solve(B, t)

    @property
    def order(self) -> int:
        return len(self.point_group)

    @property
    def area(self) -> float:
        return self.lattice.covolume / self.order

    def chi(self, k: int) -> int:
        if self.character == "trivial":
            return 1
        return int(round(np.linalg.det(self.point_group[k][0])))

    def check_group(self, tol: float = 1e-9) -> None:
        """Raise ConsistencyError unless the maps form a group modulo the lattice."""
        elems = self._integral
        ident = [k for k, (M, tau) in enumerate(elems)
                 if np.array_equal(M, np.eye(2, dtype=np.int64)) and _is_integral(tau, tol)]
        if len(ident) != 1:
            raise ConsistencyError(f"{self.name}: identity missing or repeated")

        def find(M, tau):
            for k, (M2, tau2) in enumerate(elems):
                if np.array_equal(M, M2) and _is_integral(tau - tau2, tol):
                    return k
            return -1

        for M1, t1 in elems:
            for M2, t2 in elems:
                if find(M1 @ M2, M1 @ t2 + t1) < 0:
                    raise ConsistencyError(f"{self.name}: not closed under composition")
        if self.character == "det":
            for (M1, t1), k1 in zip(elems, range(len(elems))):
                for (M2, t2), k2 in zip(elems, range(len(elems))):
                    k3 = find(M1 @ M2, M1 @ t2 + t1)
                    if self.chi(k3) != self.chi(k1) * self.chi(k2):
                        raise ConsistencyError("det character is not multiplicative")


def _is_integral(v, tol):
    v = np.asarray(v, float)
    return bool(np.max(np.abs(v - np.rint(v))) <= tol)


@dataclass
class SpectrumMultiset:
    """Eigenvalues (strictly increasing) with positive integer multiplicities.

    ``coeffs`` holds exact rationals ``c`` with ``eigenvalue = c * pi^2`` when
    the lattice allows it.
    """

    values: np.ndarray
    mults: np.ndarray
    cutoff: float
    coeffs: tuple | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        self.mults = np.asarray(self.mults, np.int64)
        if len(self.values) != len(self.mults):
            raise ValueError("values and multiplicities differ in length")
        if len(self.values) and (np.any(np.diff(self.values) <= 0) or self.values[0] < 0):
            raise ValueError("eigenvalues must be nonnegative and strictly increasing")
        if np.any(self.mults <= 0):
            raise ValueError("multiplicities must be positive")
        if len(self.values) and self.values[-1] > self.cutoff * (1 + 1e-12):
            raise ValueError("eigenvalue above cutoff")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def total(self) -> int:
        """Number of eigenvalues counted with multiplicity."""
        return int(self.mults.sum())

    def keys(self) -> list:
        if self.coeffs is not None:
            return list(self.coeffs)
        return [round(float(v), 9) for v in self.values]

    def as_dict(self) -> dict:
        return dict(zip(self.keys(), (int(m) for m in self.mults)))

    def multiplicity(self, lam: float, rtol: float = 1e-9) -> int:
        hit = np.nonzero(np.abs(self.values - lam) <= rtol * max(1.0, lam))[0]
        return int(self.mults[hit[0]]) if len(hit) else 0

    def expanded(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity."""
        return np.repeat(self.values, self.mults)

    def counting_function(self, lam: float) -> int:
        return int(self.mults[self.values <= lam].sum())

    def truncate(self, cutoff: float) -> "SpectrumMultiset":
        keep = self.values <= cutoff
        coeffs = None if self.coeffs is None else tuple(c for c, k in zip(self.coeffs, keep) if k)
        return SpectrumMultiset(self.values[keep], self.mults[keep], cutoff, coeffs)


def _dual_vectors(lat: Lattice2, lam_max: float):
    """Integer coordinates m of all dual vectors with 4 pi^2 |k|^2 <= lam_max, plus exact keys."""
    kmax = math.sqrt(lam_max) / TWO_PI
    # |m_i| = |b_i . k| <= |b_i| kmax; one extra row as a margin
    r = [int(math.ceil(np.linalg.norm(lat.basis[:, i]) * kmax)) + 1 for i in range(2)]
    m1, m2 = np.meshgrid(np.arange(-r[0], r[0] + 1), np.arange(-r[1], r[1] + 1), indexing="ij")
    m = np.stack([m1.ravel(), m2.ravel()], axis=1).astype(np.int64)
    form = lat.integer_form()
    if form is not None:
        A, unit = form
        q = A[0, 0] * m[:, 0] ** 2 + 2 * A[0, 1] * m[:, 0] * m[:, 1] + A[1, 1] * m[:, 1] ** 2
        lam = 4 * math.pi ** 2 * unit * q
        keep = lam <= lam_max * (1 + 1e-12)
        return m[keep], q[keep], lam[keep], unit
    G = lat.dual_gram
    lam = 4 * math.pi ** 2 * np.einsum("ni,ij,nj->n", m, G, m)
    keep = lam <= lam_max * (1 + 1e-12)
    return m[keep], None, lam[keep], None


def _assemble(q, lam, mult_by_q, lam_max, unit):
    keys = np.unique(q)
    out_vals, out_mults, coeffs = [], [], []
    unit_frac = _as_fraction(4 * unit) if unit is not None else None
    for key in keys:
        mlt = mult_by_q[key]
        if mlt == 0:
            continue
        out_vals.append(float(lam[q == key][0]))
        out_mults.append(mlt)
        if unit_frac is not None:
            coeffs.append(unit_frac * int(key))
    return SpectrumMultiset(
        np.array(out_vals), np.array(out_mults, dtype=np.int64), lam_max,
        tuple(coeffs) if unit_frac is not None else None,
    )


def torus_spectrum(lat: Lattice2, lam_max: float) -> SpectrumMultiset:
    """All eigenvalues <= lam_max of the flat torus, multiplicity = number of dual vectors."""
    return quotient_spectrum(WallpaperQuotient(lat, name="torus"), lam_max)


def quotient_spectrum(qt: WallpaperQuotient, lam_max: float, tol: float = 1e-9) -> SpectrumMultiset:
    """Spectrum of a wallpaper quotient by character averaging over its point group."""
    if lam_max <= 0:
        raise ValueError("lam_max must be positive")
    m, q, lam, unit = _dual_vectors(qt.lattice, lam_max)
    if q is None:
        q = np.rint(lam / lam_max * 1e12).astype(np.int64)
    acc = np.zeros(len(m), dtype=complex)
    for k, (M, tau) in enumerate(qt._integral):
        fixed = np.all(m @ M == m, axis=1)  # M^T m = m, row form
        phase = np.exp(2j * math.pi * (m[fixed] @ tau))
        acc[fixed] += qt.chi(k) * phase
    acc /= qt.order
    uq, inv = np.unique(q, return_inverse=True)
    sums = np.zeros(len(uq), dtype=complex)
    np.add.at(sums, inv.ravel(), acc)
    mult_by_q = {}
    for key, s in zip(uq, sums):
        r = round(s.real)
        if abs(s - r) > tol or r < 0:
            raise ConsistencyError(
                f"{qt.name}: non-integer multiplicity {s} (malformed point group?)"
            )
        mult_by_q[key] = int(r)
    return _assemble(q, lam, mult_by_q, lam_max, unit)


# ---------------------------------------------------------------------------
# relations between spectra


@dataclass
class RelationReport:
    equal: bool
    cutoff: float
    first_discrepancy: tuple | None  # (eigenvalue, lhs multiplicity, rhs multiplicity)
    lhs_count: int
    rhs_count: int

    def __str__(self) -> str:
        if self.equal:
            return f"EQUAL up to {self.cutoff:g} ({self.lhs_count} eigenvalues)"
        lam, a, b = self.first_discrepancy
        return f"DIFFERENT: first discrepancy at {lam:.12g} (multiplicity {a} vs {b})"


def merge_spectra(spectra: Iterable[SpectrumMultiset]) -> dict:
    """Disjoint union of spectra as a {key: multiplicity} dict."""
    out: dict = {}
    for s in spectra:
        for k, m in s.as_dict().items():
            out[k] = out.get(k, 0) + m
    return out


def _key_value(k) -> float:
    return float(k) * math.pi ** 2 if isinstance(k, Fraction) else float(k)


def verify_relation(
    lhs: Sequence[WallpaperQuotient], rhs: Sequence[WallpaperQuotient], lam_max: float
) -> RelationReport:
    """Compare the disjoint unions of both sides' spectra up to lam_max."""
    cache: dict[int, SpectrumMultiset] = {}

    def spec(q):
        if id(q) not in cache:
            cache[id(q)] = quotient_spectrum(q, lam_max)
        return cache[id(q)]

    a = merge_spectra(spec(q) for q in lhs)
    b = merge_spectra(spec(q) for q in rhs)
    keys = sorted(set(a) | set(b), key=_key_value)
    first = None
    for k in keys:
        if a.get(k, 0) != b.get(k, 0):
            first = (_key_value(k), a.get(k, 0), b.get(k, 0))
            break
    return RelationReport(first is None, lam_max, first, sum(a.values()), sum(b.values()))


def parse_relation(text: str, catalog: dict | None = None):
    """Parse ``"H2+H6=2H3"`` into (lhs list, rhs list) of catalog quotients."""
    catalog = catalog or standard_quotients()
    if text.count("=") != 1:
        raise ParseError("relation needs exactly one '='")

    def side(s):
        out = []
        for term in s.split("+"):
            term = term.strip()
            m = re.fullmatch(r"(\d*)\s*\*?\s*([A-Za-z][\w-]*)", term)
            if not m or m.group(2) not in catalog:
                raise ParseError(f"bad relation term {term!r}")
            out += [catalog[m.group(2)]] * int(m.group(1) or 1)
        return out

    left, right = text.split("=")
    return side(left), side(right)


# ---------------------------------------------------------------------------
# conepoint arithmetic


def conepoint_weight(n: int) -> Fraction:
    """Relative flat-heat-trace weight (n^2 - 1)/n of an order-n conepoint."""
    if n < 2:
        raise ValueError("cone order must be at least 2")
    return Fraction(n * n - 1, n)


def feature_total(orders: Iterable[int]) -> Fraction:
    """Sum of conepoint weights over a multiset of cone orders, e.g. ``[2, 3, 6]``."""
    return sum((conepoint_weight(n) for n in orders), Fraction(0))


def parse_signature(sig: str) -> list[int]:
    """Cone orders from a digit string such as ``'2222'`` or ``'236'``."""
    return [int(ch) for ch in sig if ch.isdigit()]


# ---------------------------------------------------------------------------
# heat trace


def heat_trace_spectral(
    s: SpectrumMultiset, t: float, tol: float = 1e-10, return_bound: bool = False
):
    """``sum_i exp(-lambda_i t)`` with a Weyl-type tail bound.

    The tail beyond the cutoff is bounded assuming ``N(lambda) <= 2 a lambda + N(0)``
    where ``a`` is the empirical Weyl slope ``N(cutoff)/cutoff``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    total = float(np.sum(s.mults * np.exp(-s.values * t)))
    lam = s.cutoff
    a = max(s.total / lam, 1e-300)

    def tail(L):
        return (2 * a * (L + 1 / t) + s.mults[0]) * math.exp(-L * t)

    bound = tail(lam)
    if bound > tol:
        need = lam
        while tail(need) > tol:
            need *= 1.5
        raise CutoffError(
            f"cutoff {lam:g} leaves tail bound {bound:.3g} > {tol:g} at t={t}", need
        )
    return (total, bound) if return_bound else total


# ---------------------------------------------------------------------------
# catalog


def _rotation_group(order: int):
    return [(rotation(2 * math.pi * k / order), np.zeros(2)) for k in range(order)]


def standard_quotients() -> dict[str, WallpaperQuotient]:
    """The hexagonal torus H1, its quotients H2 (2222), H3 (333), H6 (236),
    the square torus T1 with T2 (2222) and T4 (244), and the mirror triangle
    *333 with side 1/sqrt(3) (Neumann and Dirichlet).

    All rotations are about the lattice point at the origin.  The *333 point
    group is D3 with mirrors perpendicular to the shortest lattice vectors, so
    its covering torus is H1.
    """
    cat = {
        "H1": WallpaperQuotient(HEXAGONAL, _rotation_group(1), "H1"),
        "H2": WallpaperQuotient(HEXAGONAL, _rotation_group(2), "H2"),
        "H3": WallpaperQuotient(HEXAGONAL, _rotation_group(3), "H3"),
        "H6": WallpaperQuotient(HEXAGONAL, _rotation_group(6), "H6"),
        "T1": WallpaperQuotient(SQUARE, _rotation_group(1), "T1"),
        "T2": WallpaperQuotient(SQUARE, _rotation_group(2), "T2"),
        "T4": WallpaperQuotient(SQUARE, _rotation_group(4), "T4"),
    }
    d3 = _rotation_group(3) + [(reflection(math.radians(a)), np.zeros(2)) for a in (30, 90, 150)]
    cat["star333"] = WallpaperQuotient(HEXAGONAL, d3, "star333")
    cat["star333-dirichlet"] = WallpaperQuotient(HEXAGONAL, d3, "star333-dirichlet", character="det")
    return cat


#: cone orders of the catalog quotients (corners count under the mirror flag)
SIGNATURES = {"H1": [], "H2": [2, 2, 2, 2], "H3": [3, 3, 3], "H6": [2, 3, 6],
              "T1": [], "T2": [2, 2, 2, 2], "T4": [2, 4, 4]}


# ---------------------------------------------------------------------------
# spectrum file format


def _format_coeff(c: Fraction) -> str:
    if c == 0:
        return "0"
    s = f"{c.numerator}*pi^2"
    return s if c.denominator == 1 else f"{s}/{c.denominator}"


def format_spectrum(s: SpectrumMultiset) -> str:
    lines = [f"cutoff={s.cutoff:.12g}"]
    if s.coeffs is not None:
        lines += [f"{_format_coeff(c)} {m}" for c, m in zip(s.coeffs, s.mults)]
    else:
        lines += [f"{v:.12g} {m}" for v, m in zip(s.values, s.mults)]
    return "\n".join(lines) + "\n"


_EXACT = re.compile(r"(-?\d+)\s*\*\s*pi\^2(?:\s*/\s*(\d+))?")


def _parse_value(tok: str):
    m = _EXACT.fullmatch(tok)
    if m:
        c = Fraction(int(m.group(1)), int(m.group(2) or 1))
        return float(c) * math.pi ** 2, c
    if tok == "0":
        return 0.0, Fraction(0)
    try:
        return float(tok), None
    except ValueError as exc:
        raise ParseError(f"bad eigenvalue {tok!r}") from exc


def parse_spectrum(text: str) -> SpectrumMultiset:
    """Read the spectrum text format (``cutoff=`` header, then value/multiplicity lines).

    A line with a single value counts as multiplicity 1; repeated values are merged.
    """
    lines = [ln.split("#")[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParseError("empty spectrum file")
    m = re.fullmatch(r"cutoff\s*=\s*(\S+)", lines[0])
    if not m:
        raise ParseError("first line must be cutoff=<real>")
    cutoff = float(m.group(1))
    acc: dict = {}
    exact = True
    for ln in lines[1:]:
        parts = ln.replace(",", " ").split()
        if len(parts) not in (1, 2):
            raise ParseError(f"bad spectrum line {ln!r}")
        val, c = _parse_value(parts[0])
        mult = int(parts[1]) if len(parts) == 2 else 1
        if c is None:
            exact = False
        key = c if c is not None else round(val, 9)
        prev = acc.get(key, (val, 0))
        acc[key] = (val, prev[1] + mult)
    items = sorted(acc.items(), key=lambda kv: kv[1][0])
    if not exact:
        # mixed or decimal input: merge on rounded float values
        merged: dict = {}
        for _, (v, mlt) in items:
            k = round(v, 9)
            merged[k] = (v, merged.get(k, (v, 0))[1] + mlt)
        items = sorted(merged.items(), key=lambda kv: kv[1][0])
    vals = np.array([v for _, (v, _) in items])
    mults = np.array([mlt for _, (_, mlt) in items], dtype=np.int64)
    coeffs = tuple(k for k, _ in items) if exact else None
    return SpectrumMultiset(vals, mults, cutoff, coeffs)


def read_spectrum(path) -> SpectrumMultiset:
    with open(path) as fh:
        return parse_spectrum(fh.read())


def write_spectrum(s: SpectrumMultiset, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_spectrum(s))
