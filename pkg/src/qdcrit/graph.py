"""Critical-graph assembly, topology classification, polygon-face angle
sums, the reality locus in the b-plane, and parameter surveys.

The classifier launches every ray, reads the termination evidence, and
assigns one label from the complete case catalogue; the reality criterion
is recomputed independently and any disagreement outside the boundary band
is surfaced as a hard validation failure rather than silently reconciled.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DegenerateError,
    DomainError,
    INFINITY,
    QDiff,
    ResolutionError,
    launch_directions,
)
from .periods import (
    TAU_BAND,
    TAU_CRIT,
    CriterionResult,
    RealityClass,
    reality_details,
)
from .tracer import (
    ESCAPE,
    LOOP,
    RADIAL,
    SHORT,
    SPIRAL,
    BUDGET,
    Arc,
    TraceConfig,
    trace_all_from_zeros,
    unique_arcs,
)

TWO_PI = 2.0 * math.pi


class CaseLabel(str, enum.Enum):
    EQUAL_ZEROS_REAL = "EqualZeros_Real"
    EQUAL_ZEROS_IMAGINARY = "EqualZeros_Imaginary"
    EQUAL_ZEROS_GENERIC = "EqualZeros_Generic"
    ZERO_AT_ORIGIN = "ZeroAtOrigin"
    REAL_PAIR = "RealPair_SegmentPlusLoop"
    CONJUGATE_PAIR = "ConjugatePair_LoopThroughBoth"
    ONE_REALITY = "OneReality_SpiralPlusCritical"
    NO_CRITICAL = "NoCritical_SpiralCases"


@dataclass
class CriticalGraph:
    """All launched arcs plus the topology label and its cross-checks."""

    qdiff: QDiff
    arcs: list[Arc]
    case_label: CaseLabel
    critical_count: int
    criterion: CriterionResult | None
    agreement: bool
    ambiguous: bool

    @property
    def unique(self) -> list[Arc]:
        return unique_arcs(self.arcs)


def _critical_arcs(arcs: list[Arc]) -> tuple[list[Arc], list[Arc]]:
    shorts = [a for a in arcs if a.duplicate_of is None and a.termination.tag == SHORT]
    loops = [a for a in arcs if a.duplicate_of is None and a.termination.tag == LOOP]
    return shorts, loops


def classify_graph(q: QDiff, cfg: TraceConfig | None = None) -> CriticalGraph:
    """Trace every launch ray and classify the resulting graph topology.

    Arc evidence decides the label; the reality criterion is recorded as a
    cross-check, with ``agreement`` False on any conflict outside the
    boundary-ambiguity band.
    """
    arcs = trace_all_from_zeros(q, cfg)
    shorts, loops = _critical_arcs(arcs)
    critical_count = len(shorts) + len(loops)

    if q.is_degenerate_equal:
        a = q.a
        if abs(a.imag) <= 1e-12 * q.scale:
            label = CaseLabel.EQUAL_ZEROS_REAL
        elif abs(a.real) <= 1e-12 * q.scale:
            label = CaseLabel.EQUAL_ZEROS_IMAGINARY
        else:
            label = CaseLabel.EQUAL_ZEROS_GENERIC
        return CriticalGraph(q, arcs, label, critical_count, reality_details(q), True, False)
    if q.is_degenerate_zero:
        return CriticalGraph(q, arcs, CaseLabel.ZERO_AT_ORIGIN, critical_count, None, True, False)

    crit = reality_details(q)
    if len(shorts) >= 2:
        label = CaseLabel.CONJUGATE_PAIR
    elif len(shorts) == 1 and len(loops) >= 1:
        label = CaseLabel.REAL_PAIR
    elif len(shorts) == 1:
        label = CaseLabel.ONE_REALITY
    else:
        label = CaseLabel.NO_CRITICAL

    expected = {
        RealityClass.BOTH: {CaseLabel.REAL_PAIR, CaseLabel.CONJUGATE_PAIR},
        RealityClass.PLUS: {CaseLabel.ONE_REALITY},
        RealityClass.MINUS: {CaseLabel.ONE_REALITY},
        RealityClass.NEITHER: {CaseLabel.NO_CRITICAL},
    }[crit.label]
    agreement = label in expected or crit.ambiguous
    return CriticalGraph(q, arcs, label, critical_count, crit, agreement, crit.ambiguous)


# ---------------------------------------------------------------------------
# polygon faces and the angle-sum validation


@dataclass(frozen=True)
class FaceVertex:
    """(critical point, interior angle, multiplicity) at one boundary visit."""

    location: complex | str
    theta: float
    order: int


@dataclass(frozen=True)
class PolygonFace:
    vertices: list[FaceVertex]
    contains_origin: bool


def teichmuller_sum(face: PolygonFace) -> float:
    """Sum of 1 - theta_j (n_j + 2) / (2 pi) over the face's vertices.

    Equals 0 when the origin lies inside the face and 2 otherwise; the
    caller asserts that dichotomy.
    """
    total = 0.0
    for v in face.vertices:
        total += 1.0 - v.theta * (v.order + 2) / TWO_PI
    return total


@dataclass
class _Dart:
    arc_idx: int
    end: int            # 0 = arc start, 1 = arc end
    angle: float | None  # outgoing direction at the node (finite nodes)
    phi: float | None = None    # circle-crossing angle (infinity node)
    psi: float | None = None    # escape asymptote angle in z (infinity node)


def _arc_endpoint_node(q: QDiff, arc: Arc) -> tuple[str, _Dart]:
    t = arc.termination
    pts = arc.samples
    if t.tag in (SHORT, LOOP):
        if t.tag == SHORT:
            label = t.endpoint
        else:
            label = arc.anchor
        zero = _node_point(q, label)
        # measure the arrival tangent a little away from the terminal noise,
        # then snap it onto the exact ray it provably arrives along
        k = len(pts) - 1
        d_meas = max(min(1e-4 * q.scale, 0.25 * arc.length), 2e-11 * q.scale)
        while k > 0 and abs(pts[k] - zero) < d_meas:
            k -= 1
        ang = cmath.phase(pts[k] - zero) % TWO_PI
        rays = launch_directions(q, zero)
        gaps = [min(abs(ang - r), TWO_PI - abs(ang - r)) for r in rays]
        j = gaps.index(min(gaps))
        if gaps[j] > 0.35:
            raise ResolutionError(
                f"arrival tangent {ang:.4f} is {gaps[j]:.3f} rad from the nearest ray"
            )
        return ("zero:" + label, _Dart(0, 1, rays[j]))
    if t.tag == RADIAL:
        k = len(pts) - 1
        while k > 0 and abs(pts[k]) < 1e-14 * q.scale:
            k -= 1
        ang = cmath.phase(pts[k]) % TWO_PI
        return ("origin", _Dart(0, 1, ang))
    if t.tag == SPIRAL:
        return ("origin", _Dart(0, 1, None))
    if t.tag == ESCAPE:
        phi = cmath.phase(pts[-1])
        psi = math.pi / 2 if t.direction == "+iinf" else -math.pi / 2
        return ("inf", _Dart(0, 1, None, phi=phi, psi=psi))
    raise ResolutionError(f"cannot build faces from an arc tagged {t.tag}")


def _node_point(q: QDiff, label: str | None) -> complex:
    if label == "a":
        return q.a
    if label == "b":
        return q.b
    if label == "zero":
        return q.zeros()[0]
    if label == "pole":
        return 0j
    raise DomainError(f"unknown node label {label!r}")


def _node_order(q: QDiff, key: str) -> int:
    if key.startswith("zero:"):
        return 2 if q.is_degenerate_equal else 1
    if key == "origin":
        return -1 if q.is_degenerate_zero else -2
    if key == "inf":
        return -4
    raise DomainError(f"unknown node key {key!r}")


def _node_location(q: QDiff, key: str) -> complex | str:
    if key.startswith("zero:"):
        return _node_point(q, key.split(":", 1)[1])
    if key == "origin":
        return 0j
    return INFINITY


def extract_faces(graph: CriticalGraph, hop_samples: int = 90) -> list[PolygonFace]:
    """Faces of the traced critical graph (clipped at the escape radius).

    Uses the planar rotation system of the arcs: trajectories of one kind
    never cross at regular points, so arcs only meet at zeros, at the
    origin, and at infinity.  Angles at infinity come from the asymptotic
    directions of the escapes (trajectories reach infinity parallel to the
    imaginary axis); angles at a double-pole vertex never enter the sum.
    """
    q = graph.qdiff
    arcs = graph.unique
    if any(a.termination.tag == BUDGET for a in arcs):
        raise ResolutionError("graph contains an arc that exhausted its step budget")

    darts_by_node: dict[str, list[_Dart]] = {}
    arc_node: list[tuple[str, str]] = []  # (start node key, end node key) per arc
    for i, arc in enumerate(arcs):
        if arc.anchor == "pole":
            start_key = "origin"
            s_dart = _Dart(i, 0, arc.launch_angle % TWO_PI)
        else:
            start_key = "zero:" + arc.anchor
            s_dart = _Dart(i, 0, arc.launch_angle % TWO_PI)
        end_key, e_dart = _arc_endpoint_node(q, arc)
        e_dart.arc_idx = i
        darts_by_node.setdefault(start_key, []).append(s_dart)
        darts_by_node.setdefault(end_key, []).append(e_dart)
        arc_node.append((start_key, end_key))

    # rotation order: ccw by angle at finite nodes, descending phi at infinity,
    # arc index for spiral darts at the origin (two interleaved spirals have a
    # unique cyclic order anyway)
    rotations: dict[str, list[_Dart]] = {}
    for key, darts in darts_by_node.items():
        if key == "inf":
            rotations[key] = sorted(darts, key=lambda d: -d.phi)
        else:
            rotations[key] = sorted(
                darts, key=lambda d: (d.angle if d.angle is not None else float(d.arc_idx))
            )

    def dart_of(arc_idx: int, end: int) -> tuple[str, int]:
        key = arc_node[arc_idx][end]
        for j, d in enumerate(rotations[key]):
            if d.arc_idx == arc_idx and d.end == end:
                return key, j
        raise ResolutionError("dart lookup failed")

    # half-edge (arc, dir): dir 0 travels start->end, dir 1 travels end->start
    visited: set[tuple[int, int]] = set()
    faces: list[PolygonFace] = []
    for i0 in range(len(arcs)):
        for dir0 in (0, 1):
            if (i0, dir0) in visited:
                continue
            boundary: list[tuple[int, int]] = []
            visits: list[tuple[str, _Dart, _Dart]] = []
            he = (i0, dir0)
            for _ in range(10 * len(arcs) + 10):
                if he in visited:
                    break
                visited.add(he)
                boundary.append(he)
                arc_idx, d = he
                arrive_end = 1 if d == 0 else 0
                key, j = dart_of(arc_idx, arrive_end)
                rot = rotations[key]
                nxt = rot[(j - 1) % len(rot)]
                visits.append((key, rot[j], nxt))
                he = (nxt.arc_idx, 0 if nxt.end == 0 else 1)
                if he == (i0, dir0):
                    break
            faces.append(_build_face(q, arcs, visits, boundary, rotations, hop_samples))
    return faces


def _inf_theta(d_in: _Dart, d_out: _Dart) -> float:
    t_in = -d_in.psi
    t_out = -d_out.psi
    raw = (t_in - t_out) % TWO_PI
    span = (d_out.phi - d_in.phi) % TWO_PI
    if d_in is d_out:
        span = TWO_PI
    best = min((raw, raw - TWO_PI, raw + TWO_PI), key=lambda c: abs(c - span))
    return min(max(best, 0.0), TWO_PI)


def _build_face(q, arcs, visits, boundary, rotations, hop_samples) -> PolygonFace:
    verts: list[FaceVertex] = []
    origin_on_boundary = False
    for key, d_in, d_out in visits:
        order = _node_order(q, key)
        if key == "inf":
            theta = _inf_theta(d_in, d_out)
        elif d_in.angle is None or d_out.angle is None:
            theta = 0.0  # spiral flank at the double pole; beta is 1 regardless
        elif d_in is d_out:
            theta = TWO_PI
        else:
            theta = (d_in.angle - d_out.angle) % TWO_PI
            if theta == 0.0:
                theta = TWO_PI
        if key == "origin":
            origin_on_boundary = True
        verts.append(FaceVertex(_node_location(q, key), theta, order))

    contains = False
    if not origin_on_boundary:
        poly = _boundary_polyline(q, arcs, visits, boundary, hop_samples)
        contains = abs(_winding_about_origin(poly)) > 0.5
    return PolygonFace(vertices=verts, contains_origin=contains)


def _boundary_polyline(q, arcs, visits, boundary, hop_samples) -> list[complex]:
    pts: list[complex] = []
    for (arc_idx, d), (key, d_in, d_out) in zip(boundary, visits):
        samples = arcs[arc_idx].samples
        pts.extend(samples if d == 0 else samples[::-1])
        if key == "inf":
            phi0 = d_in.phi
            span = (d_out.phi - phi0) % TWO_PI
            if d_in is d_out:
                span = TWO_PI
            r0 = abs(arcs[arc_idx].samples[-1])
            r1 = abs(arcs[d_out.arc_idx].samples[-1])
            for k in range(1, hop_samples):
                t = k / hop_samples
                r = r0 + (r1 - r0) * t
                pts.append(r * cmath.exp(1j * (phi0 + span * t)))
    return pts


def _winding_about_origin(pts: list[complex]) -> float:
    total = 0.0
    for z0, z1 in zip(pts, pts[1:] + pts[:1]):
        if abs(z0) == 0 or abs(z1) == 0:
            continue
        total += cmath.phase(z1 / z0)
    return total / TWO_PI


def validate_teichmuller(graph: CriticalGraph, tol: float = 1e-3) -> list[tuple[PolygonFace, float, bool]]:
    """Angle sums of every face with the 0-inside / 2-outside check applied."""
    out = []
    for face in extract_faces(graph):
        s = teichmuller_sum(face)
        expected = 0.0 if face.contains_origin else 2.0
        out.append((face, s, abs(s - expected) < tol))
    return out


# ---------------------------------------------------------------------------
# the reality locus in the b-plane


@dataclass(frozen=True)
class LocusBranch:
    """One branch of the locus, parameterized by a real parameter t.

    family "shift":  b = (t - sqrt(a))^2   (reduces to a ray for real a > 0)
    family "ishift": b = (i t - sqrt(a))^2 (reduces to a ray for real a < 0)
    """

    family: str
    sqrt_a: complex
    kind: str  # "parabola" or "ray"

    def point(self, t: float) -> complex:
        if self.family == "shift":
            s = t - self.sqrt_a
        else:
            s = 1j * t - self.sqrt_a
        return s * s

    def sample(self, n: int, t_max: float | None = None) -> list[complex]:
        if t_max is None:
            t_max = 2.0 + 2.0 * abs(self.sqrt_a)
        return [self.point(-t_max + 2.0 * t_max * k / (n - 1)) for k in range(n)]


@dataclass(frozen=True)
class GammaLocus:
    a: complex
    branches: tuple[LocusBranch, LocusBranch]

    def sample(self, n: int, t_max: float | None = None) -> list[complex]:
        per = (n + 1) // 2
        pts = self.branches[0].sample(per, t_max) + self.branches[1].sample(per, t_max)
        return pts[:n]


def gamma_locus(a: complex) -> GammaLocus:
    """The set of b for which (sqrt(a) +/- sqrt(b))^2 is real, given a.

    Derived directly from the reality conditions: with u = sqrt(a), the
    criterion holds exactly when sqrt(b) = t - u or sqrt(b) = i t - u for
    some real t, giving two parabolas through b = a; for real a one of them
    flattens onto the positive (a > 0) or negative (a < 0) real ray.
    """
    a = complex(a)
    if a == 0:
        raise DegenerateError("locus undefined for a = 0")
    u = cmath.sqrt(a)
    real_a = abs(a.imag) <= 1e-14 * abs(a)
    kind_shift = "ray" if (real_a and a.real > 0) else "parabola"
    kind_ishift = "ray" if (real_a and a.real < 0) else "parabola"
    return GammaLocus(
        a=a,
        branches=(
            LocusBranch("shift", u, kind_shift),
            LocusBranch("ishift", u, kind_ishift),
        ),
    )


def printed_parabola_discrepancy(a: complex, n: int = 400) -> dict[str, float]:
    """Check the printed parabola formulas against the reality conditions.

    For each printed parabola the worst normalized criterion margin
    min(|Im s_plus|, |Im s_minus|) / (|a| + |b|) over its points is
    returned: a locus member gives ~1e-16.  The first printed formula
    matches the derived branch identically; the second mixes Re sqrt(a) and
    Im sqrt(a) in its denominators and the returned margin documents how
    far off the reality locus its points actually are.
    """
    a = complex(a)
    u = cmath.sqrt(a)
    al, be = u.real, u.imag
    if abs(a.imag) <= 1e-14 * abs(a) or al == 0 or be == 0:
        raise DomainError("printed formulas apply to a with nonzero real and imaginary parts of sqrt(a)")

    def margin(b: complex) -> float:
        if abs(b) < 1e-12:
            return 0.0
        det = reality_details(QDiff(a, b))
        return min(det.im_plus, det.im_minus)

    ys = [a.imag + (k / (n - 1) - 0.5) * 8.0 * max(1.0, abs(a)) for k in range(n)]
    out = {}
    # printed first parabola: x = Re a + 2 lam Re u + lam^2, lam = (y - Im a)/(2 Im u)
    worst = 0.0
    for y in ys:
        lam = (y - a.imag) / (2.0 * be)
        x = a.real + 2.0 * lam * al + lam * lam
        worst = max(worst, margin(complex(x, y)))
    out["P1"] = worst
    # printed second parabola with its mixed denominators, transcribed as-is
    worst = 0.0
    for y in ys:
        lam1 = (y - a.imag) / (2.0 * al)
        lam2 = (y - a.imag) / (2.0 * be)
        x = a.real - 2.0 * lam1 * al - lam2 * lam2
        worst = max(worst, margin(complex(x, y)))
    out["P2"] = worst
    return out


# ---------------------------------------------------------------------------
# parameter survey over a rectangle in the b-plane


_CLASS_CODES = {
    RealityClass.NEITHER: 0,
    RealityClass.PLUS: 1,
    RealityClass.MINUS: 2,
    RealityClass.BOTH: 3,
}


@dataclass
class SurveyGrid:
    """Per-cell criterion classes over a rectangle of b values."""

    a: complex
    region: tuple[float, float, float, float]
    xs: np.ndarray
    ys: np.ndarray
    classes: np.ndarray          # int8 codes, see _CLASS_CODES
    im_margin: np.ndarray        # min normalized |Im| over the +/- pair
    ambiguous: np.ndarray        # bool mask
    trace_checks: list[dict]

    @property
    def class_names(self) -> dict[int, str]:
        return {v: k.value for k, v in _CLASS_CODES.items()}


def survey(
    a: complex,
    region: tuple[float, float, float, float],
    resolution: int,
    trace_subsample: int = 0,
    seed: int = 0,
    cfg: TraceConfig | None = None,
    tol: float = TAU_CRIT,
    band: float = TAU_BAND,
) -> SurveyGrid:
    """Classify the criterion over a grid of b values; optionally verify a
    random subsample of cells by full tracing."""
    if resolution < 2:
        raise DomainError("survey resolution must be at least 2x2")
    x0, x1, y0, y1 = region
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    B = xs[None, :] + 1j * ys[:, None]
    ab = complex(a) * B
    w = np.sqrt(ab.astype(complex))
    s = complex(a) + B
    ip = np.abs((s + 2 * w).imag) / (abs(complex(a)) + np.abs(B) + 1e-300)
    im = np.abs((s - 2 * w).imag) / (abs(complex(a)) + np.abs(B) + 1e-300)
    plus = ip < tol
    minus = im < tol
    classes = np.zeros(B.shape, dtype=np.int8)
    classes[plus & ~minus] = _CLASS_CODES[RealityClass.PLUS]
    classes[minus & ~plus] = _CLASS_CODES[RealityClass.MINUS]
    classes[plus & minus] = _CLASS_CODES[RealityClass.BOTH]
    ambiguous = ((ip >= tol) & (ip < band)) | ((im >= tol) & (im < band))
    margin = np.minimum(ip, im)

    checks: list[dict] = []
    if trace_subsample > 0:
        rng = np.random.default_rng(seed)
        total = resolution * resolution
        picked = 0
        attempts = 0
        while picked < trace_subsample and attempts < 50 * trace_subsample:
            attempts += 1
            flat = int(rng.integers(0, total))
            i, j = divmod(flat, resolution)
            b = complex(B[i, j])
            if abs(b) < 1e-9 or ambiguous[i, j]:
                continue
            try:
                g = classify_graph(QDiff(complex(a), b), cfg)
            except Exception as exc:  # keep surveying; record the failure
                checks.append({"i": i, "j": j, "b": b, "error": str(exc)})
                picked += 1
                continue
            has_critical = g.critical_count > 0
            crit_says = classes[i, j] != _CLASS_CODES[RealityClass.NEITHER]
            checks.append(
                {
                    "i": i,
                    "j": j,
                    "b": b,
                    "criterion_nonneither": bool(crit_says),
                    "traced_critical": bool(has_critical),
                    "agree": bool(has_critical == crit_says),
                }
            )
            picked += 1
    return SurveyGrid(
        a=complex(a),
        region=(x0, x1, y0, y1),
        xs=xs,
        ys=ys,
        classes=classes,
        im_margin=margin,
        ambiguous=ambiguous,
        trace_checks=checks,
    )
