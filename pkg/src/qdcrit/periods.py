"""Period quadrature of sqrt(D)/z along explicit paths, with closed-form
candidate matching and the reality criterion on (sqrt(a) +/- sqrt(b))^2.

The period of a path joining the two zeros equals one of the four values
+/- (i pi / 2) (sqrt(a) +/- sqrt(b))^2, the sign pattern depending on the
homotopy class of the path in the punctured plane.  The quadrature side is
computed here from scratch (composite Gauss-Legendre with a square-root
substitution at the endpoints, branch continued along the path); the
closed-form side is the candidate set, and the mismatch between them is
the quantity every caller is expected to inspect.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ContinuationError,
    DegenerateError,
    DomainError,
    QDiff,
    branch_sqrt,
    eval_D,
)

TWO_PI = 2.0 * math.pi

#: relative band for "is real" in the criterion
TAU_CRIT = 1e-9
#: relative band flagged boundary-ambiguous for classification purposes
TAU_BAND = 1e-3

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class RealityClass(str, enum.Enum):
    BOTH = "both_real"
    PLUS = "plus_real"
    MINUS = "minus_real"
    NEITHER = "neither"


@dataclass(frozen=True)
class CriterionResult:
    """Reality classification of (sqrt(a) +/- sqrt(b))^2 with its margins.

    ``im_plus``/``im_minus`` are Im(a+b) +/- 2 Im(sqrt(ab)) normalized by
    |a| + |b|; ``ambiguous`` flags points inside the boundary band where
    the classification should not be trusted.
    """

    label: RealityClass
    im_plus: float
    im_minus: float
    s_plus: complex
    s_minus: complex
    ambiguous: bool


def reality_details(q: QDiff, tol: float = TAU_CRIT, band: float = TAU_BAND) -> CriterionResult:
    a, b = q.a, q.b
    if q.is_degenerate_zero:
        raise DegenerateError("criterion undefined when a zero sits at the origin (ab = 0)")
    w = cmath.sqrt(a * b)
    s_plus = a + b + 2 * w
    s_minus = a + b - 2 * w
    norm = abs(a) + abs(b)
    ip = abs(s_plus.imag) / norm
    im = abs(s_minus.imag) / norm
    plus_real = ip < tol
    minus_real = im < tol
    if plus_real and minus_real:
        label = RealityClass.BOTH
    elif plus_real:
        label = RealityClass.PLUS
    elif minus_real:
        label = RealityClass.MINUS
    else:
        label = RealityClass.NEITHER
    ambiguous = (tol <= ip < band) or (tol <= im < band)
    return CriterionResult(label, ip, im, s_plus, s_minus, ambiguous)


def criterion_reality(q: QDiff, tol: float = TAU_CRIT) -> RealityClass:
    """Which of (sqrt(a) +/- sqrt(b))^2 is real, up to a relative band."""
    return reality_details(q, tol=tol).label


def period_candidates(q: QDiff) -> list[complex]:
    """The four closed-form period values, closed under negation.

    Computed with principal roots; as an unordered set the values do not
    depend on the branch choices of sqrt(a) and sqrt(b).
    """
    u = cmath.sqrt(q.a)
    v = cmath.sqrt(q.b)
    half_i_pi = 0.5j * math.pi
    c1 = half_i_pi * (u + v) ** 2
    c2 = half_i_pi * (u - v) ** 2
    return [c1, -c1, c2, -c2]


@dataclass(frozen=True)
class PeriodResult:
    value: complex
    candidates: list[complex]
    matched: int
    mismatch: float


# ---------------------------------------------------------------------------
# path handling


def _polyline_lengths(pts: list[complex]) -> list[float]:
    acc = [0.0]
    for p0, p1 in zip(pts, pts[1:]):
        acc.append(acc[-1] + abs(p1 - p0))
    return acc


def _point_at(pts: list[complex], cum: list[float], ell: float) -> complex:
    """Point at arc length ell along the polyline."""
    if ell <= 0:
        return pts[0]
    if ell >= cum[-1]:
        return pts[-1]
    lo, hi = 0, len(cum) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if cum[mid] <= ell:
            lo = mid
        else:
            hi = mid
    seg = cum[hi] - cum[lo]
    t = (ell - cum[lo]) / seg if seg > 0 else 0.0
    return pts[lo] + t * (pts[hi] - pts[lo])


def _refine(pts: list[complex], max_seg: float) -> list[complex]:
    out = [pts[0]]
    for p0, p1 in zip(pts, pts[1:]):
        d = abs(p1 - p0)
        if d <= max_seg:
            out.append(p1)
            continue
        k = int(math.ceil(d / max_seg))
        for j in range(1, k + 1):
            out.append(p0 + (j / k) * (p1 - p0))
    return out


def _min_distance_to_origin(pts: list[complex]) -> float:
    best = float("inf")
    for p0, p1 in zip(pts, pts[1:]):
        d = p1 - p0
        L2 = (d * d.conjugate()).real
        if L2 == 0:
            best = min(best, abs(p0))
            continue
        t = max(0.0, min(1.0, -((p0 * d.conjugate()).real) / L2))
        best = min(best, abs(p0 + t * d))
    return min(best, abs(pts[0]), abs(pts[-1]))


class _BranchLine:
    """Branch values of sqrt(D) at the vertices of a refined polyline.

    Values are continued outward from a seed at the vertex nearest the
    midpoint by arc length; endpoint vertices that sit on a zero of D get
    the value 0.  Panel quadratures then re-seed locally from the nearest
    vertex, which keeps every continuation step short.
    """

    def __init__(self, q: QDiff, pts: list[complex], cum: list[float], seed: complex | None):
        self.q = q
        self.pts = pts
        self.cum = cum
        n = len(pts)
        mid = min(range(n), key=lambda i: abs(cum[i] - cum[-1] / 2))
        d_mid = eval_D(q, pts[mid])
        if abs(d_mid) == 0:
            raise DomainError("path midpoint coincides with a zero of D")
        if seed is None:
            seed = cmath.sqrt(d_mid)
        elif abs(seed * seed - d_mid) > 1e-6 * abs(d_mid):
            raise DomainError("sheet seed does not square to D at the path midpoint")
        vals: list[complex] = [0j] * n
        vals[mid] = seed
        for i in range(mid + 1, n):
            vals[i] = self._step(vals[i - 1], pts[i - 1], pts[i])
        for i in range(mid - 1, -1, -1):
            vals[i] = self._step(vals[i + 1], pts[i + 1], pts[i])
        self.vals = vals
        self.mid = mid

    def _step(self, w_prev: complex, z_prev: complex, z: complex) -> complex:
        d = eval_D(self.q, z)
        if abs(d) == 0:
            return 0j
        if abs(w_prev) == 0:
            raise ContinuationError("cannot continue the branch out of a zero of D")
        w = branch_sqrt(d, w_prev)
        if abs(cmath.phase(w / w_prev)) >= math.pi / 2:
            raise ContinuationError("sheet ambiguity along the period path")
        return w

    def vertex_near(self, ell: float) -> tuple[complex, complex]:
        """(point, branch value) at the nearest vertex with a nonzero value."""
        lo, hi = 0, len(self.cum) - 1
        while hi - lo > 1:
            m = (lo + hi) // 2
            if self.cum[m] <= ell:
                lo = m
            else:
                hi = m
        n = len(self.vals)
        for off in range(n):
            for i in (lo + off, lo - off):
                if 0 <= i < n and abs(self.vals[i]) > 0:
                    return self.pts[i], self.vals[i]
        raise ContinuationError("no usable branch value along the path")


def _panel_integral(q: QDiff, line: _BranchLine, zfun, dzfun, t0: float, t1: float) -> complex:
    """16-point Gauss-Legendre of sqrt(D)(z(t))/z(t) * z'(t) over [t0, t1]."""
    half = 0.5 * (t1 - t0)
    mid = 0.5 * (t0 + t1)
    ts = mid + half * _GL_NODES
    # seed the branch from the precomputed vertex value nearest the panel start
    _, w_prev = line.vertex_near(zfun.ell_of(ts[0]))
    total = 0j
    for t, wt in zip(ts, _GL_WEIGHTS):
        z = zfun(t)
        d = eval_D(q, z)
        if abs(d) == 0:
            continue
        w = branch_sqrt(d, w_prev)
        if abs(cmath.phase(w / w_prev)) >= math.pi / 2:
            raise ContinuationError("sheet ambiguity inside a quadrature panel")
        total += wt * (w / z) * dzfun(t)
        w_prev = w
    return total * half


class _EllMap:
    """z as a function of a panel parameter t, with ell(t) exposed.

    mode "linear": t is arc length.  mode "sq0": ell = t^2 (start end);
    mode "sq1": ell = L - t^2 (finish end), which flips orientation.
    """

    def __init__(self, pts, cum, mode: str, L: float):
        self.pts, self.cum, self.mode, self.L = pts, cum, mode, L

    def ell_of(self, t: float) -> float:
        if self.mode == "linear":
            return t
        if self.mode == "sq0":
            return t * t
        return self.L - t * t

    def __call__(self, t: float) -> complex:
        return _point_at(self.pts, self.cum, self.ell_of(t))


def _derivative_factory(pts, cum, mode: str, L: float):
    """dz/dt along the polyline; piecewise constant tangent times d(ell)/dt."""

    def tangent(ell: float) -> complex:
        lo, hi = 0, len(cum) - 1
        while hi - lo > 1:
            m = (lo + hi) // 2
            if cum[m] <= ell:
                lo = m
            else:
                hi = m
        seg = pts[hi] - pts[lo]
        return seg / abs(seg) if abs(seg) > 0 else 0j

    if mode == "linear":
        return lambda t: tangent(t)
    if mode == "sq0":
        return lambda t: tangent(t * t) * (2.0 * t)
    return lambda t: tangent(L - t * t) * (-2.0 * t)


def _corner_breaks(cum: list[float], lo: float, hi: float) -> list[float]:
    inner = [c for c in cum if lo < c < hi]
    return [lo] + inner + [hi]


def period_integral(
    q: QDiff,
    path: list[complex],
    seed: complex | None = None,
    tol: float = 1e-10,
) -> complex:
    """Quadrature of the branch-continued sqrt(D)/z along a path from a to b.

    The path must start at a, end at b, and keep its interior away from the
    origin and the zeros.  The sheet is pinned by ``seed`` at the midpoint
    (principal square root of D there by default).  The terminal 10% of arc
    length at each end is integrated in the variable ell = t^2 so that the
    square-root vanishing of the integrand is smoothed out.
    """
    pts = [complex(p) for p in path]
    if len(pts) < 2:
        raise DomainError("period path needs at least two points")
    s_tol = 1e-6 * q.scale
    if abs(pts[0] - q.a) > s_tol or abs(pts[-1] - q.b) > s_tol:
        raise DomainError("period path must run from a to b")
    if q.is_degenerate_equal:
        return 0j
    if _min_distance_to_origin(pts) < 1e-12 * q.scale:
        raise DomainError("period path passes through the origin")

    cum0 = _polyline_lengths(pts)
    L = cum0[-1]
    refined = _refine(pts, max(L / 256.0, 1e-12))
    cum = _polyline_lengths(refined)
    line = _BranchLine(q, refined, cum, seed)

    ell_a = 0.10 * L
    ell_b = 0.90 * L

    def integrate(n_split: int) -> complex:
        total = 0j
        # start end: ell = t^2 on [0, sqrt(ell_a)]
        zf = _EllMap(refined, cum, "sq0", L)
        df = _derivative_factory(refined, cum, "sq0", L)
        t_hi = math.sqrt(ell_a)
        breaks = sorted({math.sqrt(c) for c in cum if 0 < c < ell_a} | {0.0, t_hi})
        for b0, b1 in zip(breaks, breaks[1:]):
            for j in range(n_split):
                t0 = b0 + (b1 - b0) * j / n_split
                t1 = b0 + (b1 - b0) * (j + 1) / n_split
                total += _panel_integral(q, line, zf, df, t0, t1)
        # middle: linear in arc length
        zf = _EllMap(refined, cum, "linear", L)
        df = _derivative_factory(refined, cum, "linear", L)
        breaks = _corner_breaks(cum, ell_a, ell_b)
        for b0, b1 in zip(breaks, breaks[1:]):
            for j in range(n_split):
                t0 = b0 + (b1 - b0) * j / n_split
                t1 = b0 + (b1 - b0) * (j + 1) / n_split
                total += _panel_integral(q, line, zf, df, t0, t1)
        # finish end: ell = L - t^2, orientation flip absorbed by dz/dt
        zf = _EllMap(refined, cum, "sq1", L)
        df = _derivative_factory(refined, cum, "sq1", L)
        t_hi = math.sqrt(L - ell_b)
        breaks = sorted({math.sqrt(L - c) for c in cum if ell_b < c < L} | {0.0, t_hi})
        for b0, b1 in zip(breaks, breaks[1:]):
            for j in range(n_split):
                t0 = b0 + (b1 - b0) * j / n_split
                t1 = b0 + (b1 - b0) * (j + 1) / n_split
                total -= _panel_integral(q, line, zf, df, t0, t1)
        return total

    prev = integrate(1)
    for n_split in (2, 4, 8, 16):
        cur = integrate(n_split)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


def lemma_check(q: QDiff, path: list[complex], seed: complex | None = None) -> PeriodResult:
    """Period quadrature wrapped with nearest-candidate matching."""
    value = period_integral(q, path, seed=seed)
    cands = period_candidates(q)
    dists = [abs(value - c) for c in cands]
    matched = dists.index(min(dists))
    return PeriodResult(value=value, candidates=cands, matched=matched, mismatch=dists[matched])


def origin_circle_quadrature(
    q: QDiff,
    radius: float | None = None,
    sheet: int = +1,
    panels: int = 64,
) -> complex:
    """Counter-clockwise quadrature of sqrt(D)/z over a small origin circle.

    The branch is seeded on the chosen sheet of sqrt(ab) near the center
    and continued around; the result should equal
    2 pi i * residue_origin(q, sheet).
    """
    if q.is_degenerate_zero:
        raise DegenerateError("origin is a simple pole; sqrt(D)/z is not single-valued in |z|<r")
    if radius is None:
        radius = 0.5 * min(abs(q.a), abs(q.b))
    if radius <= 0 or radius >= min(abs(q.a), abs(q.b)):
        raise DomainError("circle radius must lie strictly inside both zeros")
    # seed: continue sheet * sqrt(ab) from near the center out to |z| = radius
    w = sheet * cmath.sqrt(q.a * q.b)
    steps = 64
    for j in range(1, steps + 1):
        z = radius * j / steps
        w = branch_sqrt(eval_D(q, z), w)
    total = 0j
    w_prev = w
    for p in range(panels):
        th0 = TWO_PI * p / panels
        th1 = TWO_PI * (p + 1) / panels
        half = 0.5 * (th1 - th0)
        mid = 0.5 * (th1 + th0)
        for t, wt in zip(_GL_NODES, _GL_WEIGHTS):
            th = mid + half * t
            z = radius * cmath.exp(1j * th)
            wv = branch_sqrt(eval_D(q, z), w_prev)
            if abs(cmath.phase(wv / w_prev)) >= math.pi / 2:
                raise ContinuationError("sheet ambiguity on the origin circle")
            total += wt * (wv / z) * (1j * z) * half
            w_prev = wv
    return total
