"""Counting traces of flat and hyperbolic 2-orbifolds.

The counting trace ``C(s)`` adds up, over the deck group, the volume of the
set of points moved a distance at most ``s``.  It can be computed two ways:

* geometrically, from orbifold features (area, mirror length, cone orders,
  closed geodesics), see :func:`assemble_trace`;
* spectrally, as ``sum_i theta_s(lambda_i)`` where ``theta_s`` is the Selberg
  transform of the ball indicator, see :func:`reconstruct_trace`.

Agreement of the two is the content of the trace formula; the helpers here
also read features back off a curve and locate jumps and bends.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special
from scipy.integrate import solve_ivp

from .errors import ConditioningError, IntegrationError, OrbitraceError
from .flatspec import Lattice2, SpectrumMultiset


class Geometry(str, enum.Enum):
    FLAT = "flat"
    HYPERBOLIC = "hyperbolic"


def _geom(g) -> Geometry:
    return Geometry(g) if not isinstance(g, Geometry) else g


# ---------------------------------------------------------------------------
# radial eigenfunctions and the Selberg transform

_TAYLOR_START = 1e-3
_RTOL = 1e-10


def _series_coeffs(lam: float, terms: int) -> list[float]:
    """Coefficients c_k of f = sum c_k (-sinh^2(r/2))^k for the hyperbolic radial eigenfunction."""
    c = [1.0]
    for k in range(1, terms):
        j = k - 1
        c.append(c[-1] * (lam + j * (j + 1)) / (k * k))
    return c


def hyperbolic_radial_series(lam: float, r, terms: int = 60):
    """Hypergeometric power series for the hyperbolic radial eigenfunction.

    Converges for ``sinh(r/2) < 1`` (``r < 1.76``).  Used to start the ODE
    integration and as an independent reference.
    """
    x = -np.sinh(np.asarray(r, float) / 2) ** 2
    if np.any(np.abs(x) >= 1):
        raise ValueError("series only converges for sinh(r/2) < 1")
    out = np.zeros_like(x)
    for c in reversed(_series_coeffs(lam, terms)):
        out = out * x + c
    return out


def _start_state(lam: float, r0: float, terms: int = 5):
    """(f, f', integral of f sinh) at r0 from the degree-8 Taylor start."""
    c = _series_coeffs(lam, terms)
    x = -math.sinh(r0 / 2) ** 2
    u = -2 * x  # cosh r0 - 1
    f = sum(ck * x ** k for k, ck in enumerate(c))
    df = sum(k * ck * x ** (k - 1) for k, ck in enumerate(c) if k) * (-math.sinh(r0) / 2)
    integral = sum(ck * (-0.5) ** k * u ** (k + 1) / (k + 1) for k, ck in enumerate(c))
    return [f, df, integral]


def _hyperbolic_solve(lam: float, r_eval: np.ndarray):
    """Integrate f'' + coth(r) f' + lam f = 0 together with int f sinh r dr."""
    r_eval = np.asarray(r_eval, float)
    out = np.empty((3, len(r_eval)))
    small = r_eval <= _TAYLOR_START
    c = _series_coeffs(lam, 5)
    if np.any(small):
        rs = r_eval[small]
        x = -np.sinh(rs / 2) ** 2
        out[0, small] = sum(ck * x ** k for k, ck in enumerate(c))
        out[1, small] = sum(k * ck * x ** (k - 1) for k, ck in enumerate(c) if k) * (-np.sinh(rs) / 2)
        u = -2 * x
        out[2, small] = sum(ck * (-0.5) ** k * u ** (k + 1) / (k + 1) for k, ck in enumerate(c))
    big = ~small
    if np.any(big):
        rb = r_eval[big]
        order = np.argsort(rb)

        def rhs(r, y):
            f, df, _ = y
            return [df, -df / math.tanh(r) - lam * f, f * math.sinh(r)]

        sol = solve_ivp(
            rhs, (_TAYLOR_START, float(rb.max())), _start_state(lam, _TAYLOR_START),
            method="DOP853", rtol=_RTOL, atol=1e-13, t_eval=rb[order],
        )
        if sol.status != 0:
            raise IntegrationError(f"radial ODE failed at lambda={lam}: {sol.message}")
        vals = np.empty((3, len(rb)))
        vals[:, order] = sol.y
        out[:, big] = vals
    return out


def radial_eigenfunction(lam: float, geom, r):
    """Radial eigenfunction with ``f(0) = 1``, ``f'(0) = 0`` and ``-Laplace f = lam f``."""
    geom = _geom(geom)
    r_arr = np.asarray(r, float)
    if np.any(r_arr < 0):
        raise ValueError("r must be nonnegative")
    if lam == 0:
        return np.ones_like(r_arr)[()] if r_arr.ndim else 1.0
    if geom is Geometry.FLAT:
        return special.j0(math.sqrt(lam) * r_arr)
    vals = _hyperbolic_solve(lam, np.atleast_1d(r_arr))[0]
    return vals if r_arr.ndim else float(vals[0])


def selberg_transform(lam: float, s, geom):
    """Eigenvalue of the ball-averaging operator of radius ``s`` on a ``lam``-eigenfunction.

    Equals the integral of the radial eigenfunction over the ball of radius ``s``.
    """
    geom = _geom(geom)
    s_arr = np.asarray(s, float)
    if np.any(s_arr < 0):
        raise ValueError("s must be nonnegative")
    if geom is Geometry.FLAT:
        return _flat_transform(np.atleast_1d(float(lam)), np.atleast_1d(s_arr))[0].reshape(s_arr.shape)[()]
    if lam == 0:
        return 2 * math.pi * (np.cosh(s_arr) - 1)
    vals = 2 * math.pi * _hyperbolic_solve(lam, np.atleast_1d(s_arr))[2]
    return vals.reshape(s_arr.shape)[()]


def _flat_transform(lams: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Matrix ``theta[i, j] = 2 pi s_j J1(sqrt(lam_i) s_j) / sqrt(lam_i)``."""
    k = np.sqrt(lams)[:, None]
    x = k * s[None, :]
    out = np.empty_like(x)
    tiny = x < 1e-6
    # J1(x)/x -> 1/2 - x^2/16
    out[tiny] = math.pi * (s[None, :] ** 2 * (1 - x ** 2 / 8))[tiny]
    big = ~tiny
    out[big] = (2 * math.pi * s[None, :] * special.j1(x) / np.where(k > 0, k, 1))[big]
    return out


# ---------------------------------------------------------------------------
# curves and windows


@dataclass
class TraceCurve:
    grid: np.ndarray
    values: np.ndarray
    kind: str = "counting"  # counting | integrated | signed
    band: np.ndarray | None = None  # standard error, for estimates

    def __post_init__(self):
        self.grid = np.asarray(self.grid, float)
        self.values = np.asarray(self.values, float)
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if np.any(np.diff(self.grid) <= 0) or (len(self.grid) and self.grid[0] < 0):
            raise ValueError("grid must be nonnegative and strictly increasing")

    def __call__(self, s):
        return np.interp(s, self.grid, self.values)

    def __add__(self, other: "TraceCurve") -> "TraceCurve":
        _same_grid(self, other)
        return TraceCurve(self.grid, self.values + other.values, self.kind)

    def __sub__(self, other: "TraceCurve") -> "TraceCurve":
        _same_grid(self, other)
        return TraceCurve(self.grid, self.values - other.values, self.kind)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "value"] + (["stderr"] if self.band is not None else []))
        for i, (s, v) in enumerate(zip(self.grid, self.values)):
            row = [f"{s:.12g}", f"{v:.12g}"]
            if self.band is not None:
                row.append(f"{self.band[i]:.12g}")
            w.writerow(row)
        return buf.getvalue()


def _same_grid(a: TraceCurve, b: TraceCurve):
    if a.grid.shape != b.grid.shape or not np.allclose(a.grid, b.grid, rtol=0, atol=1e-14):
        raise ValueError("curves live on different grids")


@dataclass(frozen=True)
class Window:
    kind: str = "quadratic"  # quadratic | none
    kmax: float = math.inf

    def __post_init__(self):
        if self.kind not in ("quadratic", "none"):
            raise ValueError("window kind must be 'quadratic' or 'none'")
        if self.kind == "quadratic" and not (self.kmax > 0 and math.isfinite(self.kmax)):
            raise ValueError("quadratic window needs a finite positive kmax")

    def weight(self, k):
        k = np.asarray(k, float)
        if self.kind == "none":
            return np.ones_like(k)
        return np.clip(1 - (k / self.kmax) ** 2, 0.0, 1.0)


def reconstruct_trace(
    spec: SpectrumMultiset, grid, win: Window | None = None, geom=Geometry.FLAT,
    chunk: int = 512,
) -> TraceCurve:
    """Counting trace from eigenvalues: ``sum_i mult_i w(sqrt(lam_i)) theta_s(lam_i)``.

    With ``win=None`` a quadratic window with ``kmax = sqrt(largest eigenvalue)`` is used.
    """
    geom = _geom(geom)
    grid = np.asarray(grid, float)
    if win is None:
        win = Window("quadratic", math.sqrt(spec.values[-1]) if spec.values[-1] > 0 else 1.0)
    if win.kind == "quadratic" and spec.cutoff < win.kmax ** 2 * (1 - 1e-9):
        raise OrbitraceError(
            f"spectrum cutoff {spec.cutoff:g} is below kmax^2 = {win.kmax ** 2:g}"
        )
    if win.kind == "none":
        weights = spec.mults.astype(float)
    else:
        weights = spec.mults * win.weight(np.sqrt(spec.values))
    keep = weights != 0
    lams, weights = spec.values[keep], weights[keep]
    total = np.zeros_like(grid)
    if geom is Geometry.FLAT:
        # chunked to bound memory; chunk order is fixed so results are reproducible
        for i in range(0, len(lams), chunk):
            total += weights[i:i + chunk] @ _flat_transform(lams[i:i + chunk], grid)
    else:
        for lam, w in zip(lams, weights):
            total += w * np.atleast_1d(selberg_transform(lam, grid, geom))
    return TraceCurve(grid, total, "counting")


# ---------------------------------------------------------------------------
# feature contributions


def reflector_contrib(R: float, s, geom=Geometry.HYPERBOLIC):
    """Combined contribution of mirrors of total length ``R``."""
    if R < 0:
        raise ValueError("mirror length must be nonnegative")
    s = np.asarray(s, float)
    if _geom(geom) is Geometry.FLAT:
        return R * s / 2
    return R * np.sinh(s / 2)


def rotation_contrib(theta: float, s, geom=Geometry.HYPERBOLIC):
    """Volume displaced by at most ``s`` under a rotation by ``theta`` (per full turn of the cone)."""
    h = math.sin(theta / 2)
    if abs(h) < 1e-14:
        raise ValueError("rotation angle must not be a multiple of 2 pi")
    s = np.asarray(s, float)
    if _geom(geom) is Geometry.FLAT:
        return math.pi * (s / 2) ** 2 / h ** 2
    return 2 * math.pi * (np.sqrt(1 + np.sinh(s / 2) ** 2 / h ** 2) - 1)


def cone_contrib(n: int, count, s, geom=Geometry.HYPERBOLIC):
    """Contribution of ``count`` cone points of order ``n`` (a mirror corner counts 1/2)."""
    if n < 2:
        raise ValueError("cone order must be at least 2")
    if count < 0:
        raise ValueError("count must be nonnegative")
    total = sum(rotation_contrib(2 * math.pi * k / n, s, geom) for k in range(1, n))
    return float(count) * total / n


@dataclass(frozen=True)
class GeodesicClassEntry:
    """A conjugacy class of axial elements.

    ``power`` is ``length / primitive_length``; ``weight`` is ``1/power`` for
    interior classes and half of that for each twin of a boundary class.
    """

    length: float
    orientability: str  # recto | verso
    primitive_length: float
    power: int = 1
    boundary: bool = False
    weight: Fraction = Fraction(1)

    def __post_init__(self):
        if self.orientability not in ("recto", "verso"):
            raise ValueError("orientability must be 'recto' or 'verso'")
        if self.length <= 0 or self.primitive_length <= 0 or self.power < 1:
            raise ValueError("lengths must be positive and power >= 1")
        expected = Fraction(1, self.power) * (Fraction(1, 2) if self.boundary else 1)
        if Fraction(self.weight) != expected:
            raise ValueError(f"weight {self.weight} inconsistent with power/boundary ({expected})")

    @classmethod
    def make(cls, length, orientability, primitive_length, power=1, boundary=False):
        w = Fraction(1, power) * (Fraction(1, 2) if boundary else 1)
        return cls(length, orientability, primitive_length, power, boundary, w)


def recto_law(ell: float, s):
    """Width factor for a hyperbolic translation of length ``ell``: 0 below ``ell``."""
    s = np.asarray(s, float)
    ratio = np.sinh(s / 2) ** 2 / math.sinh(ell / 2) ** 2 - 1
    return np.where(s >= ell, np.sqrt(np.maximum(ratio, 0.0)), 0.0)


def verso_law(ell: float, s):
    """Width factor for a hyperbolic glide reflection of length ``ell``."""
    s = np.asarray(s, float)
    ratio = np.maximum(np.cosh(s / 2) / math.cosh(ell / 2), 1.0)
    return np.where(s >= ell, np.sinh(np.arccosh(ratio)), 0.0)


def geodesic_contrib(entry: GeodesicClassEntry, s):
    """Volume of ``{x : d(x, g x) <= s}`` modulo the centralizer, for a class entry."""
    law = recto_law if entry.orientability == "recto" else verso_law
    half = 0.5 if entry.boundary else 1.0
    return half * 2 * entry.primitive_length * law(entry.length, s)


# ---------------------------------------------------------------------------
# feature sets


@dataclass
class OrbifoldFeatureSet:
    """Geometric data entering the counting trace.

    ``conepoints`` maps order to count (multiples of 1/2).  ``atoms`` are flat
    translation classes ``(length, mass)`` that add ``mass`` once ``s`` reaches
    ``length``; they describe tori and other flat pieces.
    """

    volume: float
    mirror_length: float = 0.0
    conepoints: dict = field(default_factory=dict)
    geodesics: list = field(default_factory=list)
    character: str = "trivial"  # trivial | det
    geometry: Geometry = Geometry.HYPERBOLIC
    atoms: list = field(default_factory=list)

    def __post_init__(self):
        self.geometry = _geom(self.geometry)
        if self.volume <= 0:
            raise ValueError("volume must be positive")
        if self.mirror_length < 0:
            raise ValueError("mirror length must be nonnegative")
        if self.character not in ("trivial", "det"):
            raise ValueError("character must be 'trivial' or 'det'")
        cp = {}
        for n, c in self.conepoints.items():
            c = Fraction(c).limit_denominator(1000)
            if n < 2 or c < 0 or (2 * c).denominator != 1:
                raise ValueError(f"bad conepoint entry {n}: {c}")
            if c:
                cp[int(n)] = c
        self.conepoints = cp

    @classmethod
    def from_signature(cls, volume, mirror_length, cones=(), corners=(), **kw):
        """Build from lists of interior cone orders and mirror-corner orders."""
        cp: dict = {}
        for n in cones:
            cp[n] = cp.get(n, Fraction(0)) + 1
        for n in corners:
            cp[n] = cp.get(n, Fraction(0)) + Fraction(1, 2)
        return cls(volume, mirror_length, cp, **kw)

    def union(self, other: "OrbifoldFeatureSet") -> "OrbifoldFeatureSet":
        if self.geometry is not other.geometry or self.character != other.character:
            raise ValueError("cannot combine different geometries or characters")
        cp = dict(self.conepoints)
        for n, c in other.conepoints.items():
            cp[n] = cp.get(n, 0) + c
        return OrbifoldFeatureSet(
            self.volume + other.volume, self.mirror_length + other.mirror_length, cp,
            self.geodesics + other.geodesics, self.character, self.geometry,
            self.atoms + other.atoms,
        )


def assemble_trace(f: OrbifoldFeatureSet, grid) -> TraceCurve:
    """Counting trace from features.

    Under the ``det`` character orientation-reversing classes (mirrors and
    glides) change sign; rotations, including those at mirror corners,
    preserve orientation and keep theirs.
    """
    grid = np.asarray(grid, float)
    sign = -1.0 if f.character == "det" else 1.0
    c = np.full_like(grid, f.volume)
    c += sign * reflector_contrib(f.mirror_length, grid, f.geometry)
    for n, count in f.conepoints.items():
        c += cone_contrib(n, count, grid, f.geometry)
    if f.geodesics and f.geometry is Geometry.FLAT:
        raise ValueError("geodesic class entries are hyperbolic; use atoms for flat translations")
    for e in f.geodesics:
        c += (sign if e.orientability == "verso" else 1.0) * geodesic_contrib(e, grid)
    for length, mass in f.atoms:
        c += np.where(grid >= length, mass, 0.0)
    kind = "signed" if f.character == "det" else "counting"
    return TraceCurve(grid, c, kind)


def flat_torus_features(lat: Lattice2, smax: float) -> OrbifoldFeatureSet:
    """Exact features of a flat torus: one atom of mass ``area`` per nonzero lattice vector."""
    # coordinates of v are rows of B^-1 applied to v
    inv = np.linalg.inv(lat.basis)
    r = [int(math.ceil(smax * np.linalg.norm(inv[i]))) + 1 for i in range(2)]
    m1, m2 = np.meshgrid(np.arange(-r[0], r[0] + 1), np.arange(-r[1], r[1] + 1), indexing="ij")
    vecs = lat.basis @ np.stack([m1.ravel(), m2.ravel()])
    lengths = np.linalg.norm(vecs, axis=0)
    lengths = np.sort(lengths[(lengths > 0) & (lengths <= smax)])
    area = lat.covolume
    return OrbifoldFeatureSet(area, geometry=Geometry.FLAT, atoms=[(float(l), area) for l in lengths])


# ---------------------------------------------------------------------------
# integrated trace and heat trace


def integrate_trace(c: TraceCurve) -> TraceCurve:
    """Cumulative trapezoidal integral ``D(s) = int_0^s C``."""
    if c.kind not in ("counting", "signed"):
        raise ValueError("can only integrate a counting trace")
    g, v = c.grid, c.values
    d = np.concatenate([[0.0], np.cumsum(np.diff(g) * (v[1:] + v[:-1]) / 2)])
    if g[0] > 0:
        d += g[0] * v[0]  # C taken constant on [0, g0]
    return TraceCurve(g, d, "integrated")


def heat_kernel_flat(d, t: float):
    d = np.asarray(d, float)
    return np.exp(-d * d / (4 * t)) / (4 * math.pi * t)


def heat_trace_from_counting(c, t: float, geom=Geometry.FLAT) -> float:
    """``K(t) = int h(s, t) dC(s)`` for the flat heat kernel ``h``.

    ``c`` is a sampled :class:`TraceCurve` (Stieltjes sum on its grid) or a
    flat :class:`OrbifoldFeatureSet` (closed-form integrals of each feature).
    """
    if _geom(geom) is not Geometry.FLAT:
        raise ValueError("only the flat heat kernel is implemented")
    if t <= 0:
        raise ValueError("t must be positive")
    if isinstance(c, OrbifoldFeatureSet):
        if c.geometry is not Geometry.FLAT or c.geodesics:
            raise ValueError("feature set must be flat without hyperbolic geodesics")
        sign = -1.0 if c.character == "det" else 1.0
        k = c.volume / (4 * math.pi * t)
        # int_0^inf h d(R s/2) = R / (8 sqrt(pi t))
        k += sign * c.mirror_length / (8 * math.sqrt(math.pi * t))
        for n, count in c.conepoints.items():
            # flat cone term is coef * s^2; int h d(s^2) = 1/pi
            coef = float(count) * sum(math.pi / 4 / math.sin(math.pi * j / n) ** 2
                                      for j in range(1, n)) / n
            k += coef / math.pi
        if c.atoms:
            lengths = np.array([a[0] for a in c.atoms])
            masses = np.array([a[1] for a in c.atoms])
            if heat_kernel_flat(lengths.max(), t) * masses.sum() > 1e-12 * k and len(lengths) > 0:
                reach = lengths.max()
                if reach < 6 * math.sqrt(4 * t):
                    raise OrbitraceError("atoms do not reach far enough for this t")
            k += float(np.sum(masses * heat_kernel_flat(lengths, t)))
        return float(k)
    smax = c.grid[-1]
    if smax < 12 * math.sqrt(t):
        raise OrbitraceError(
            f"curve ends at s={smax:g}; need at least {12 * math.sqrt(t):.3g} for t={t}"
        )
    mids = (c.grid[1:] + c.grid[:-1]) / 2
    return float(c.values[0] * heat_kernel_flat(c.grid[0], t)
                 + np.sum(np.diff(c.values) * heat_kernel_flat(mids, t)))


# ---------------------------------------------------------------------------
# jump and bend detection


@dataclass(frozen=True)
class Break:
    """A feature of a sampled curve: ``kind`` is jump, bend or jump+bend."""

    s: float
    kind: str
    height: float  # excess rise over the local slope (jumps)
    slope_change: float  # post minus pre slope, per unit s (bends)

    @property
    def bend_direction(self) -> int:
        return int(np.sign(self.slope_change)) if "bend" in self.kind else 0


def detect_breaks(
    c: TraceCurve, factor: float = 5.0, window: int = 40, side: int = 10, gap: int = 3
) -> list[Break]:
    """Locate jumps and bends of a sampled curve on a uniform grid.

    Candidate events are spikes of the second difference above ``factor``
    times its local median (and above ``factor`` times the local median
    forward difference, to ignore round-off).  Each event is then classified:
    a jump when the rise across it, beyond what the slope just after it
    explains, exceeds ``factor`` times the local median forward difference; a
    bend when the median slopes on either side differ by more than the median
    step size just before the event (floored at a quarter of the global median
    step).
    """
    g, v = c.grid, c.values
    n = len(g)
    if n < 4 * side:
        raise ValueError("curve too short for break detection")
    ds = float(np.median(np.diff(g)))
    d = np.diff(v)
    d2 = np.diff(d)
    abs_d, abs_d2 = np.abs(d), np.abs(d2)

    def local_median(a, i):
        return float(np.median(a[max(0, i - window): i + window + 1]))

    floor = 0.25 * float(np.median(abs_d))
    thr_d = np.array([local_median(abs_d, i) for i in range(len(d2))])
    thr_d2 = np.array([local_median(abs_d2, i) for i in range(len(d2))])
    hot = np.nonzero((abs_d2 > factor * thr_d2) & (abs_d2 > factor * thr_d / 10))[0]
    clusters: list[list[int]] = []
    for i in hot:
        if clusters and i - clusters[-1][-1] <= gap:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    out = []
    for cl in clusters:
        # the event sits at the largest forward difference of the cluster,
        # or at the largest curvature spike when the curve only bends
        lo, hi = cl[0], cl[-1] + 2
        j = lo + int(np.argmax(d[lo:hi])) if np.max(abs_d[lo:hi]) > 0 else cl[0]
        pre = d[max(0, lo - side): max(1, lo - 1)]
        post = d[hi + 1: hi + 1 + side]
        if len(post) == 0:
            continue
        pre_slope = float(np.median(pre)) if len(pre) and lo > 1 else float(np.median(post))
        post_slope = float(np.median(post))
        # smooth reference level from the far side of the event
        scale = local_median(abs_d, j)
        a, b = max(0, lo - 1), min(n - 1, hi + 1)
        rise = v[b] - v[a]
        excess = rise - (b - a) * d[min(hi + 1, len(d) - 1)]
        is_jump = excess > factor * scale
        # ringing after a jump tilts the side slopes a little; a bend must
        # change the slope by more than the typical step just before it
        bend_scale = max(float(np.median(np.abs(pre))) if len(pre) else 0.0, floor)
        is_bend = abs(post_slope - pre_slope) > bend_scale and lo > 1
        if not (is_jump or is_bend):
            continue
        kind = "jump+bend" if is_jump and is_bend else ("jump" if is_jump else "bend")
        if is_jump:
            s_at = float((g[j] + g[j + 1]) / 2)
        else:
            s_at = float(g[cl[int(np.argmax(abs_d2[cl]))] + 1])
        out.append(Break(s_at, kind, float(excess), (post_slope - pre_slope) / ds))
    return out


def residual_is_flat(residual: TraceCurve, reference: TraceCurve, factor: float = 5.0) -> tuple[bool, float, float]:
    """Whether a residual's steps stay below the detector's jump threshold.

    Returns ``(flat, largest residual step, threshold)`` with threshold
    ``factor`` times the median step of ``reference`` on the same grid.
    """
    _same_grid(residual, reference)
    step = float(np.max(np.abs(np.diff(residual.values))))
    thr = factor * float(np.median(np.abs(np.diff(reference.values))))
    return step < thr, step, thr


# ---------------------------------------------------------------------------
# reading features off a curve


@dataclass
class Readoff:
    volume: float
    mirror_length: float
    cone_weight: float  # sum of count * (n^2 - 1)/n
    counts: dict  # raw least-squares counts per order (hyperbolic only)
    conepoints: dict  # counts rounded to multiples of 1/2
    residual: TraceCurve
    condition: float

    def features(self, geom=Geometry.HYPERBOLIC) -> OrbifoldFeatureSet:
        return OrbifoldFeatureSet(self.volume, max(self.mirror_length, 0.0),
                                  self.conepoints, geometry=geom)


def readoff_features(
    c: TraceCurve, geom=Geometry.HYPERBOLIC, max_order: int = 9,
    s_range: tuple | None = None, cond_max: float = 1e12,
) -> Readoff:
    """Least-squares fit of volume, mirror length and cone content to a curve.

    Only points with ``s`` in ``s_range`` are used; the range must lie below
    the shortest closed geodesic.  In flat geometry every rotation contributes
    a multiple of ``s^2``, so only the combined cone weight is recoverable.
    """
    geom = _geom(geom)
    lo, hi = s_range if s_range is not None else (c.grid[0], c.grid[-1])
    sel = (c.grid >= lo) & (c.grid <= hi)
    s = c.grid[sel]
    if len(s) < 3:
        raise ValueError("too few grid points in the fitting range")
    cols = [np.ones_like(s), reflector_contrib(1.0, s, geom)]
    orders = []
    if geom is Geometry.FLAT:
        cols.append(s ** 2)
    else:
        orders = list(range(2, max_order + 1))
        cols += [cone_contrib(n, 1, s, geom) for n in orders]
    A = np.array(cols).T
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1
    As = A / norms
    cond = float(np.linalg.cond(As))
    if not np.isfinite(cond) or cond > cond_max:
        raise ConditioningError(
            f"feature basis up to order {max_order} on s in [{lo:g}, {hi:g}] is ill-conditioned",
            cond,
        )
    coef, *_ = np.linalg.lstsq(As, c.values[sel], rcond=None)
    coef = coef / norms
    volume, mirror = float(coef[0]), float(coef[1])
    if geom is Geometry.FLAT:
        # coefficient of s^2 equals (pi/12) * sum count (n^2-1)/n
        weight = float(coef[2] * 12 / math.pi)
        counts, rounded = {}, {}
    else:
        counts = {n: float(x) for n, x in zip(orders, coef[2:])}
        rounded = {n: Fraction(round(2 * x), 2) for n, x in counts.items() if round(2 * x)}
        weight = sum(x * (n * n - 1) / n for n, x in counts.items())
    model = TraceCurve(c.grid, volume + mirror * reflector_contrib(1.0, c.grid, geom)
                       + (coef[2] * c.grid ** 2 if geom is Geometry.FLAT else
                          sum(x * cone_contrib(n, 1, c.grid, geom) for n, x in counts.items())))
    return Readoff(volume, mirror, weight, counts, rounded, c - model, cond)


# ---------------------------------------------------------------------------
# plots


def curves_to_csv(curves: dict) -> str:
    """Several curves on a common grid as CSV with one column per curve."""
    names = list(curves)
    grid = curves[names[0]].grid
    for n in names[1:]:
        _same_grid(curves[names[0]], curves[n])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s"] + names)
    for i, s in enumerate(grid):
        w.writerow([f"{s:.12g}"] + [f"{curves[n].values[i]:.12g}" for n in names])
    return buf.getvalue()


def plot_curves_svg(curves: dict, width: int = 640, height: int = 400, title: str = "") -> str:
    """Standalone SVG line plot of named curves sharing one grid."""
    names = list(curves)
    xs = curves[names[0]].grid
    ys = np.concatenate([curves[n].values for n in names])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if y1 - y0 < 1e-12:
        y1 = y0 + 1
    m = 40
    colors = ["#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400"]

    def px(x):
        return m + (x - x0) / (x1 - x0) * (width - 2 * m)

    def py(y):
        return height - m - (y - y0) / (y1 - y0) * (height - 2 * m)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{m}" y1="{py(max(y0, min(0, y1))):.2f}" x2="{width - m}" '
        f'y2="{py(max(y0, min(0, y1))):.2f}" stroke="#999" stroke-width="0.5"/>',
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="#999" stroke-width="0.5"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="13">{title}</text>')
    for k, name in enumerate(names):
        cv = curves[name]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(cv.grid, cv.values))
        col = colors[k % len(colors)]
        parts.append(f'<polyline class="curve" data-name="{name}" fill="none" stroke="{col}" '
                     f'stroke-width="1" points="{pts}"/>')
        parts.append(f'<text x="{width - m - 90}" y="{m + 14 * k}" font-size="11" fill="{col}">{name}</text>')
    for x in range(int(math.ceil(x0)), int(math.floor(x1)) + 1):
        parts.append(f'<text x="{px(x):.2f}" y="{height - m + 14}" text-anchor="middle" font-size="10">{x}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
