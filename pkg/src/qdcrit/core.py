"""Canonical parameters and local geometry of -(z-a)(z-b)/z^2 dz^2.

The differential generically has simple zeros at a and b, a double pole at
the origin and a pole of order four at infinity.  This module owns the
canonical normal form, evaluation of the discriminant D(z) = (z-a)(z-b),
sign-tracked continuation of sqrt(D) along sampled paths, the two residues
of sqrt(D)/z that control every period computation, and the ray geometry
at the zeros from which trajectories are launched.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi

# Relative band inside which the two zeros count as coincident, and the
# band inside which the product a*b counts as zero (simple pole at 0).
EQUAL_BAND = 1e-12
PRODUCT_BAND = 1e-12

#: sentinel for the order-4 pole at infinity in critical-point inventories
INFINITY = "infinity"


class QDError(Exception):
    """Base class for every failure raised by this package."""


class InvalidDifferentialError(QDError):
    """Input does not define an admissible differential."""


class ContinuationError(QDError):
    """sqrt(D) could not be continued without a sheet ambiguity."""


class DegenerateError(QDError):
    """Operation undefined for this degenerate configuration."""


class DomainError(QDError):
    """Argument outside the operation's domain."""


class ResolutionError(QDError):
    """Traced data too coarse for the requested measurement."""


def require_finite(z: complex, what: str = "value") -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidDifferentialError(f"non-finite {what}: {z!r}")
    return z


@dataclass(frozen=True)
class QDiff:
    """Zeros (a, b) of the canonical differential -(z-a)(z-b)/z^2 dz^2.

    Stored after normalization: leading coefficient 1, double pole at the
    origin.  Use :func:`canonicalize` to bring raw data into this form.
    """

    a: complex
    b: complex

    def __post_init__(self):
        a = require_finite(self.a, "a")
        b = require_finite(self.b, "b")
        if abs(a) == 0.0 and abs(b) == 0.0:
            raise InvalidDifferentialError("a = b = 0 leaves no zeros (constant differential)")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def scale(self) -> float:
        return max(1.0, abs(self.a), abs(self.b))

    @property
    def is_degenerate_equal(self) -> bool:
        return abs(self.a - self.b) < EQUAL_BAND * self.scale

    @property
    def is_degenerate_zero(self) -> bool:
        return abs(self.a * self.b) < PRODUCT_BAND

    def zeros(self) -> list[complex]:
        """Distinct zeros of the differential (the origin never counts)."""
        if self.is_degenerate_equal:
            return [self.a]
        if self.is_degenerate_zero:
            return [self.a if abs(self.a) > abs(self.b) else self.b]
        return [self.a, self.b]


@dataclass(frozen=True)
class CriticalPoint:
    """One entry of the critical-point inventory.

    ``order`` follows the usual convention: +1 simple zero, +2 double zero,
    -1 simple pole, -2 double pole, -4 for the pole at infinity.
    ``ray_count`` is order + 2 for zeros and simple poles, 0 for the rest.
    """

    location: complex | str
    order: int
    ray_count: int


def critical_points(q: QDiff) -> list[CriticalPoint]:
    """Full inventory of zeros and poles, finite and infinite."""
    pts: list[CriticalPoint] = []
    if q.is_degenerate_equal:
        pts.append(CriticalPoint(q.a, 2, 4))
        pts.append(CriticalPoint(0j, -2, 0))
    elif q.is_degenerate_zero:
        z = q.zeros()[0]
        pts.append(CriticalPoint(z, 1, 3))
        pts.append(CriticalPoint(0j, -1, 1))
    else:
        pts.append(CriticalPoint(q.a, 1, 3))
        pts.append(CriticalPoint(q.b, 1, 3))
        pts.append(CriticalPoint(0j, -2, 0))
    pts.append(CriticalPoint(INFINITY, -4, 0))
    return pts


@dataclass(frozen=True)
class CanonicalMap:
    """Forward map y = sqrt(A) (z - c) used by :func:`canonicalize`.

    ``pullback`` sends canonical coordinates back to the caller's frame.
    """

    shift: complex
    scale: complex
    qdiff: QDiff

    def push(self, z: complex) -> complex:
        return self.scale * (z - self.shift)

    def pullback(self, y: complex) -> complex:
        return y / self.scale + self.shift


def canonical_map(a_raw: complex, b_raw: complex, c: complex = 0j, A: complex = 1 + 0j) -> CanonicalMap:
    """Normalize A (z-a)(z-b)/(z-c)^2 dz^2: pole to the origin, A to 1."""
    a_raw = require_finite(a_raw, "a")
    b_raw = require_finite(b_raw, "b")
    c = require_finite(c, "c")
    A = require_finite(A, "A")
    if A == 0:
        raise InvalidDifferentialError("leading coefficient A must be nonzero")
    s = cmath.sqrt(A)
    return CanonicalMap(shift=c, scale=s, qdiff=QDiff(s * (a_raw - c), s * (b_raw - c)))


def canonicalize(a_raw: complex, b_raw: complex, c: complex = 0j, A: complex = 1 + 0j) -> QDiff:
    return canonical_map(a_raw, b_raw, c, A).qdiff


def eval_D(q: QDiff, z: complex) -> complex:
    """Discriminant D(z) = (z - a)(z - b)."""
    return (z - q.a) * (z - q.b)


def eval_Q(q: QDiff, z: complex) -> complex:
    """The differential's coefficient Q(z) = -(z-a)(z-b)/z^2."""
    if z == 0:
        raise DomainError("Q has a pole at the origin")
    return -eval_D(q, z) / (z * z)


def branch_sqrt(d: complex, near: complex) -> complex:
    """Square root of d on the sheet closer to ``near``."""
    w = cmath.sqrt(d)
    return w if abs(w - near) <= abs(-w - near) else -w


@dataclass(frozen=True)
class BranchPath:
    """A path together with the continued values of sqrt(D) along it."""

    samples: list[complex]
    branch_values: list[complex]

    def verify(self, q: QDiff, rel: float = 1e-12) -> None:
        """Assert the defining invariants; raises ContinuationError."""
        for z, w in zip(self.samples, self.branch_values):
            d = eval_D(q, z)
            if abs(w * w - d) > rel * max(abs(d), 1e-300):
                if abs(d) > 0 or abs(w) > 0:
                    raise ContinuationError(f"branch value {w!r} does not square to D({z!r})")
        for w0, w1 in zip(self.branch_values, self.branch_values[1:]):
            if abs(w0) == 0 or abs(w1) == 0:
                continue
            if abs(cmath.phase(w1 / w0)) >= math.pi / 2:
                raise ContinuationError("sheet jump between consecutive branch values")


def continue_sqrt_D(q: QDiff, path: list[complex], seed: complex) -> BranchPath:
    """Continue sqrt(D) along ``path`` starting from ``seed``.

    The seed pins the sheet at path[0].  Consecutive samples must be close
    enough that the argument of sqrt(D) moves by less than pi/2; one
    midpoint-bisection pass is applied to offending segments, after which a
    persistent jump raises :class:`ContinuationError`.  Interior samples
    must not sit exactly on a zero of D.
    """
    if not path:
        raise DomainError("empty path")
    pts = [complex(p) for p in path]
    d0 = eval_D(q, pts[0])
    if abs(seed * seed - d0) > 1e-9 * max(abs(d0), 1e-300):
        raise DomainError("seed^2 does not match D at the start of the path")
    for p in pts[1:-1]:
        if p == q.a or p == q.b:
            raise DomainError("interior path sample coincides with a zero of D")

    def jump_ok(w0: complex, w1: complex) -> bool:
        if abs(w0) == 0 or abs(w1) == 0:
            return True
        return abs(cmath.phase(w1 / w0)) < math.pi / 2

    samples = [pts[0]]
    values = [complex(seed)]
    for p in pts[1:]:
        w_prev = values[-1]
        ref = w_prev
        if abs(ref) == 0:
            # restarting from a branch point: take the principal sheet
            ref = cmath.sqrt(eval_D(q, p))
        w = branch_sqrt(eval_D(q, p), ref)
        if jump_ok(w_prev, w):
            samples.append(p)
            values.append(w)
            continue
        # one bisection pass on the offending segment
        mid = 0.5 * (samples[-1] + p)
        w_mid = branch_sqrt(eval_D(q, mid), w_prev)
        w_end = branch_sqrt(eval_D(q, p), w_mid)
        if not (jump_ok(w_prev, w_mid) and jump_ok(w_mid, w_end)):
            raise ContinuationError("sheet ambiguity persists after one bisection refinement")
        samples.extend([mid, p])
        values.extend([w_mid, w_end])
    return BranchPath(samples, values)


def residue_origin(q: QDiff, sheet: int = +1) -> complex:
    """Residue of sqrt(D)/z at the origin: sheet * principal sqrt(ab)."""
    if sheet not in (+1, -1):
        raise DomainError("sheet must be +1 or -1")
    if q.is_degenerate_zero:
        raise DegenerateError("origin is a simple pole; the residue sqrt(ab) degenerates")
    return sheet * cmath.sqrt(q.a * q.b)


def residue_infinity(q: QDiff) -> complex:
    """Residue of sqrt(D)/z at infinity on the sheet sqrt(D) ~ z: (a+b)/2."""
    return (q.a + q.b) / 2


def _leading_coefficient(q: QDiff, z0: complex) -> complex:
    """Leading coefficient of Q at the zero z0 (Q'(z0), or -1/a^2 if double)."""
    if q.is_degenerate_equal:
        return -1.0 / (q.a * q.a)
    if abs(z0 - q.a) <= abs(z0 - q.b):
        this, other = q.a, q.b
    else:
        this, other = q.b, q.a
    return -(this - other) / (this * this)


def launch_directions(q: QDiff, at: complex, kind: str = "horizontal") -> list[float]:
    """Trajectory launch angles at a zero, sorted ascending in [0, 2pi).

    A simple zero emits three rays spaced 2pi/3 apart; coincident zeros
    emit four rays spaced pi/2.  Horizontal rays solve
    arg(c) + (r+2) theta = 0 (mod 2pi) for the leading coefficient c of Q
    at the zero; vertical rays are offset by pi/(r+2).
    """
    if kind not in ("horizontal", "vertical"):
        raise DomainError(f"unknown trajectory kind {kind!r}")
    at = complex(at)
    tol = 1e-9 * q.scale
    zero = None
    for z in q.zeros():
        if abs(at - z) <= tol:
            zero = z
            break
    if zero is None:
        raise DomainError(f"{at!r} is not a zero of the differential")
    r = 2 if q.is_degenerate_equal else 1
    c = _leading_coefficient(q, zero)
    base = -cmath.phase(c)
    if kind == "vertical":
        base += math.pi
    n = r + 2
    return sorted(((base + TWO_PI * k) / n) % TWO_PI for k in range(n))


def pole_ray(q: QDiff) -> float:
    """Launch angle of the single trajectory at a simple pole at the origin.

    Only defined when one zero coincides with the origin.
    """
    if not q.is_degenerate_zero:
        raise DegenerateError("origin is a double pole; no single launch ray exists")
    w = q.zeros()[0]
    # Q(z) ~ w/z near 0, so the lone ray solves arg(w) + theta = 0 (mod 2pi)
    return (-cmath.phase(w)) % TWO_PI
