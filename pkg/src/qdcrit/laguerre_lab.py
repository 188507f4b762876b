"""Rescaled Laguerre polynomials with parameter growing like n*A, their
root-counting measures, and the algebraic Cauchy transform they converge to.

The degree-n polynomial here is L_n^(nA)(n z): the binomial is evaluated as
a product of n-k factors so complex A is admitted, and the argument is
rescaled by n so the roots stay on a fixed compact set.  Its normalized
root-counting measure converges weakly to a measure supported on a critical
arc of -(z-a)(z-b)/z^2 dz^2 with a, b = A+2 +/- 2 sqrt(A+1), and the Cauchy
transform of the limit solves z h^2 + (A - z) h + 1 = 0 with h ~ 1/z.
"""

from __future__ import annotations

import cmath
import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .core import DegenerateError, DomainError, QDiff, require_finite
from .graph import classify_graph
from .tracer import RADIAL, SHORT, Arc, TraceConfig

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RescaledLaguerre:
    """Coefficients (ascending powers) of L_n^(nA)(n z), possibly rescaled.

    A common positive factor exp(log_scale) has been divided out when the
    raw coefficients would overflow; roots and root measures are unaffected.
    """

    n: int
    A: complex
    coefficients: list[complex]
    log_scale: float = 0.0

    @property
    def degree(self) -> int:
        d = len(self.coefficients) - 1
        while d > 0 and abs(self.coefficients[d]) == 0:
            d -= 1
        return d

    def __call__(self, z: complex) -> complex:
        acc = 0j
        for c in reversed(self.coefficients):
            acc = acc * z + c
        return acc

    def derivative(self, z: complex) -> complex:
        acc = 0j
        for k in range(len(self.coefficients) - 1, 0, -1):
            acc = acc * z + k * self.coefficients[k]
        return acc


def build_polynomial(n: int, A: complex) -> RescaledLaguerre:
    """Exact coefficient recurrence for L_n^(nA)(n z).

    The coefficient of z^k is C(n+nA, n-k) (-n)^k / k!; they are generated
    downward from k = n so every step is a short product, with a running
    rescale once magnitudes threaten the float range.
    """
    if n < 1:
        raise DomainError("polynomial degree n must be >= 1")
    A = require_finite(complex(A), "A")
    M = n + n * A
    coeffs = [0j] * (n + 1)
    log_cn = n * math.log(n) - math.lgamma(n + 1)
    log_scale = 0.0
    if log_cn > 600.0:
        log_scale = log_cn
        coeffs[n] = complex((-1.0) ** n)
    else:
        coeffs[n] = complex((-1.0) ** n * math.exp(log_cn))
    biggest = abs(coeffs[n])
    for k in range(n, 0, -1):
        nxt = coeffs[k] * k * (M - n + k) / ((n - k + 1) * (-n))
        coeffs[k - 1] = nxt
        biggest = max(biggest, abs(nxt))
        if biggest > 1e250:
            for j in range(k - 1, n + 1):
                coeffs[j] *= 1e-100
            log_scale += 100.0 * math.log(10.0)
            biggest *= 1e-100
    return RescaledLaguerre(n=n, A=A, coefficients=coeffs, log_scale=log_scale)


@dataclass(frozen=True)
class RootMeasure:
    """Roots with uniform weight 1/n; the empirical root-counting measure."""

    roots: list[complex]
    n: int
    residuals: list[float]
    certified: list[bool]

    @property
    def weight(self) -> float:
        return 1.0 / self.n

    @property
    def all_certified(self) -> bool:
        return all(self.certified)


def _poly_and_deriv(coeffs_asc: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for c in coeffs_asc[::-1]:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _residual_scale(coeffs_asc: np.ndarray, z: np.ndarray) -> np.ndarray:
    s = np.zeros(z.shape, dtype=float)
    az = np.abs(z)
    for c in np.abs(coeffs_asc)[::-1]:
        s = s * az + c
    return s


def _aberth(coeffs_asc: np.ndarray, r: np.ndarray, iters: int = 80) -> np.ndarray:
    n = len(r)
    for _ in range(iters):
        p, dp = _poly_and_deriv(coeffs_asc, r)
        dp = np.where(np.abs(dp) == 0, 1e-300, dp)
        w = p / dp
        diff = r[:, None] - r[None, :]
        np.fill_diagonal(diff, np.inf)
        s = (1.0 / diff).sum(axis=1)
        denom = 1.0 - w * s
        denom = np.where(np.abs(denom) < 1e-30, 1e-30, denom)
        corr = w / denom
        r = r - corr
        if np.max(np.abs(corr)) < 1e-15 * max(1.0, float(np.max(np.abs(r)))):
            break
    return r


def roots(p: RescaledLaguerre, residual_tol: float = 1e-8) -> RootMeasure:
    """All n roots, companion-matrix seeded, refined, residual-certified.

    Roots come back sorted by (Re, Im).  If some root's residual cannot be
    driven below the tolerance within the iteration budget the measure is
    still returned, with that root left uncertified.
    """
    deg = p.degree
    if deg < 1:
        raise DomainError("polynomial has no roots")
    coeffs = np.array(p.coefficients[: deg + 1], dtype=complex)
    coeffs = coeffs / np.max(np.abs(coeffs))
    r = np.roots(coeffs[::-1])
    if p.n > 60:
        r = _aberth(coeffs, r)
    else:
        r = _aberth(coeffs, r, iters=8)
    pv, _ = _poly_and_deriv(coeffs, r)
    scale = _residual_scale(coeffs, r)
    res = np.abs(pv) / np.where(scale == 0, 1.0, scale)
    certified = res < residual_tol
    if not np.all(certified):
        r = _aberth(coeffs, r, iters=200)
        pv, _ = _poly_and_deriv(coeffs, r)
        scale = _residual_scale(coeffs, r)
        res = np.abs(pv) / np.where(scale == 0, 1.0, scale)
        certified = res < residual_tol
    order = np.lexsort((r.imag, r.real))
    r = r[order]
    res = res[order]
    certified = certified[order]
    return RootMeasure(
        roots=[complex(v) for v in r],
        n=p.n,
        residuals=[float(v) for v in res],
        certified=[bool(v) for v in certified],
    )


def empirical_cauchy(m: RootMeasure, z: complex) -> complex:
    """(1/n) sum 1/(z - root); the Cauchy transform of the root measure."""
    z = complex(z)
    arr = np.array(m.roots, dtype=complex)
    d = z - arr
    if np.min(np.abs(d)) < 1e-9:
        raise DomainError("evaluation point within 1e-9 of a root")
    return complex(np.mean(1.0 / d))


# ---------------------------------------------------------------------------
# the algebraic branch h and its cut


TwoSided = namedtuple("TwoSided", ["plus", "minus"])


def laguerre_zeros(A: complex) -> tuple[complex, complex]:
    """Zeros a, b = A + 2 +/- 2 sqrt(A+1) of the discriminant (z-A)^2 - 4z."""
    A = complex(A)
    s = cmath.sqrt(A + 1)
    return A + 2 + 2 * s, A + 2 - 2 * s


@dataclass
class AlgebraicBranch:
    """The solution h of z h^2 + (A - z) h + 1 = 0 with h ~ 1/z at infinity.

    ``cut`` is the support arc (a polyline from a to b); sqrt(D) is defined
    off the cut and normalized to ~ z - A at infinity.
    """

    A: complex
    a: complex
    b: complex
    cut: list[complex]

    def __post_init__(self):
        if len(self.cut) < 2:
            raise DomainError("cut polyline needs at least two points")
        if abs(self.cut[0] - self.a) > abs(self.cut[0] - self.b):
            self.cut = list(reversed(self.cut))

    @property
    def scale(self) -> float:
        return max(1.0, abs(self.a), abs(self.b))

    def discriminant(self, z: complex) -> complex:
        return (z - self.A) ** 2 - 4 * z

    def _segment_cut_sqrt(self, z: complex) -> complex:
        c = (self.a + self.b) / 2
        d = (self.a - self.b) / 2
        if abs(z - c) < 1e-13 * self.scale:
            z = z + 1e-12 * self.scale
        w = d / (z - c)
        return (z - c) * cmath.sqrt(1 - w * w)

    def _flip_parity(self, z: complex) -> int:
        """1 if z lies between the cut arc and the straight segment [a, b]."""
        poly = list(self.cut) + [self.a]
        total = 0.0
        for p0, p1 in zip(poly, poly[1:]):
            u0, u1 = p0 - z, p1 - z
            if abs(u0) == 0 or abs(u1) == 0:
                return 0
            total += cmath.phase(u1 / u0)
        return int(round(total / TWO_PI)) % 2

    def sqrt_D(self, z: complex) -> complex:
        """sqrt((z-a)(z-b)) cut along the support arc, ~ z at infinity."""
        base = self._segment_cut_sqrt(z)
        return -base if self._flip_parity(complex(z)) else base

    def distance_to_cut(self, z: complex) -> float:
        z = complex(z)
        best = float("inf")
        for p0, p1 in zip(self.cut, self.cut[1:]):
            d = p1 - p0
            L2 = (d * d.conjugate()).real
            if L2 == 0:
                best = min(best, abs(z - p0))
                continue
            t = max(0.0, min(1.0, ((z - p0) * d.conjugate()).real / L2))
            best = min(best, abs(z - (p0 + t * d)))
        return best

    def cut_tangent(self, z: complex) -> complex:
        z = complex(z)
        best, tan = float("inf"), 1 + 0j
        for p0, p1 in zip(self.cut, self.cut[1:]):
            d = p1 - p0
            L2 = (d * d.conjugate()).real
            if L2 == 0:
                continue
            t = max(0.0, min(1.0, ((z - p0) * d.conjugate()).real / L2))
            dist = abs(z - (p0 + t * d))
            if dist < best:
                best, tan = dist, d / abs(d)
        return tan


def algebraic_h(branch: AlgebraicBranch, z: complex):
    """h(z) = ((z - A) - sqrt(D)) / (2 z) off the cut; two-sided on it.

    On the cut the one-sided limits are returned as TwoSided(plus, minus),
    the plus side lying to the left of the cut's a -> b orientation.
    """
    z = complex(z)
    if abs(z) < 1e-12 * branch.scale:
        raise DomainError("h evaluated at the pole z = 0")
    if branch.distance_to_cut(z) < 1e-9 * branch.scale:
        tau = branch.cut_tangent(z)
        off = 1e-7 * branch.scale * 1j * tau
        return TwoSided(plus=algebraic_h(branch, z + off), minus=algebraic_h(branch, z - off))
    w = branch.sqrt_D(z)
    return ((z - branch.A) - w) / (2 * z)


def motherbody_density(branch: AlgebraicBranch, z: complex) -> float:
    """Density of the limit measure per unit arc length at a cut point.

    Computed as the Plemelj jump tau (h_minus - h_plus) / (2 pi i); along a
    horizontal trajectory this is real with magnitude |sqrt(D)| / (2 pi |z|).
    Positivity is a property the caller checks, not an assumption here.
    """
    z = complex(z)
    if abs(z - branch.a) < 1e-9 * branch.scale or abs(z - branch.b) < 1e-9 * branch.scale:
        return 0.0
    if branch.distance_to_cut(z) > 1e-6 * branch.scale:
        raise DomainError("density requested away from the support arc")
    two = algebraic_h(branch, z)
    if not isinstance(two, TwoSided):
        raise DomainError("point did not register as on-cut")
    tau = branch.cut_tangent(z)
    rho = tau * (two.minus - two.plus) / (2j * math.pi)
    if abs(rho.imag) > 1e-6 * (1.0 + abs(rho)):
        raise DomainError(f"jump density has a non-negligible imaginary part: {rho!r}")
    return rho.real


def support_arc(A: complex, cfg: TraceConfig | None = None) -> tuple[list[complex], "object"]:
    """Trace the critical graph of the associated differential and pick the
    arc supporting the limit measure.

    Among the critical arcs joining a and b, the supporting one is the arc
    for which the infinity-normalized sqrt(D) takes the value -A at the
    origin (total measure mass 1); picking the other arc flips the residue
    and the mass test fails.
    """
    a, b = laguerre_zeros(A)
    q = QDiff(a, b)
    g = classify_graph(q, cfg)
    candidates: list[Arc] = [
        arc for arc in g.unique if arc.termination.tag == SHORT
    ]
    if q.is_degenerate_zero:
        candidates += [arc for arc in g.unique if arc.termination.tag == RADIAL]
    if not candidates:
        raise DegenerateError(
            f"no critical arc joins the zeros for A={A!r}; "
            f"graph label {g.case_label.value}: nothing can support the measure"
        )
    best, best_err = None, float("inf")
    for arc in candidates:
        br = AlgebraicBranch(A=complex(A), a=a, b=b, cut=list(arc.samples))
        err = abs(br.sqrt_D(0.0 + 0j) + complex(A)) if abs(complex(A)) > 0 else 0.0
        if q.is_degenerate_zero:
            err = 0.0  # single candidate; mass test degenerates with sqrt(D)(0) = 0
        if err < best_err:
            best, best_err = arc, err
    return list(best.samples), g


def algebraic_branch(A: complex, cfg: TraceConfig | None = None, cut: list[complex] | None = None) -> AlgebraicBranch:
    a, b = laguerre_zeros(A)
    if cut is None:
        cut, _ = support_arc(A, cfg)
    return AlgebraicBranch(A=complex(A), a=a, b=b, cut=list(cut))


def branch_alpha(branch: AlgebraicBranch, radius_factor: float = 1e6) -> complex:
    """z h(z) at a far point; the coefficient of 1/z in h (expected 1)."""
    z = radius_factor * branch.scale
    return z * algebraic_h(branch, z)


# ---------------------------------------------------------------------------
# convergence of the empirical Cauchy transform


def default_probes(branch: AlgebraicBranch) -> list[complex]:
    """Eight points on a circle of radius 2 max(|a|, |b|, 1) around the
    support centroid."""
    centroid = sum(branch.cut) / len(branch.cut)
    radius = 2.0 * max(abs(branch.a), abs(branch.b), 1.0)
    return [centroid + radius * cmath.exp(1j * TWO_PI * k / 8) for k in range(8)]


@dataclass
class ConvergenceReport:
    A: complex
    n_values: list[int]
    probes: list[complex]
    errors: dict[int, list[float]]
    max_errors: dict[int, float]
    monotone: bool
    alpha: complex

    def rows(self) -> list[dict]:
        out = []
        for n in self.n_values:
            for p, e in zip(self.probes, self.errors[n]):
                out.append({"n": n, "probe_re": p.real, "probe_im": p.imag, "error": e})
        return out


def convergence_report(
    A: complex,
    n_values: list[int],
    probes: list[complex] | None = None,
    cfg: TraceConfig | None = None,
) -> ConvergenceReport:
    """Table of |C_mu_n(z) - h(z)| over probe points and n values.

    Probe points must keep distance >= 1 from the traced support.  The
    report never asserts convergence; it records the per-n error columns
    and whether their maxima decrease monotonically.
    """
    branch = algebraic_branch(A, cfg)
    if probes is None:
        probes = default_probes(branch)
    for p in probes:
        if branch.distance_to_cut(p) < 1.0:
            raise DomainError(f"probe {p!r} is closer than 1 to the traced support")
    errors: dict[int, list[float]] = {}
    max_errors: dict[int, float] = {}
    for n in n_values:
        m = roots(build_polynomial(n, A))
        col = []
        for p in probes:
            c = empirical_cauchy(m, p)
            h = algebraic_h(branch, p)
            col.append(abs(c - h))
        errors[n] = col
        max_errors[n] = max(col)
    ordered = sorted(n_values)
    monotone = all(
        max_errors[n1] > max_errors[n2] for n1, n2 in zip(ordered, ordered[1:])
    )
    return ConvergenceReport(
        A=complex(A),
        n_values=list(n_values),
        probes=list(probes),
        errors=errors,
        max_errors=max_errors,
        monotone=monotone,
        alpha=branch_alpha(branch),
    )
