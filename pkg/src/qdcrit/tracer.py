"""Adaptive tracing of horizontal and vertical trajectories.

A trajectory is integrated as the unit-speed flow of u(z) = i z / sqrt(D(z))
(drop the i for vertical arcs), with the square-root sheet continued along
the arc.  Step sizes are capped near the zeros and the origin so that the
sheet can never flip between accepted points, and every accepted step runs
the termination detector: hitting the other zero, closing into a loop,
falling into the origin radially or in a spiral, escaping to infinity, or
exhausting the step budget.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

from .core import (
    ContinuationError,
    DegenerateError,
    DomainError,
    QDiff,
    branch_sqrt,
    eval_D,
    launch_directions,
    pole_ray,
)

TWO_PI = 2.0 * math.pi

# Dormand-Prince 5(4) tableau
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    35 / 384 - 5179 / 57600,
    500 / 1113 - 7571 / 16695,
    125 / 192 - 393 / 640,
    -2187 / 6784 + 92097 / 339200,
    11 / 84 - 187 / 2100,
    -1 / 40,
)

# 4-point Gauss-Legendre on [-1, 1] for the per-step level quadrature
_G4_N = (-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526)
_G4_W = (0.34785484513745385, 0.6521451548625461, 0.6521451548625461, 0.34785484513745385)


@dataclass(frozen=True)
class TraceConfig:
    """Knobs for the tracer; factors are relative to the differential's scale."""

    rtol: float = 1e-10
    atol: float = 1e-12
    launch_offset_factor: float = 1e-6
    hit_factor: float = 1e-5
    close_factor: float = 1e-8
    r_max_factor: float = 20.0
    r_min_factor: float = 1e-8
    max_step_factor: float = 0.1
    near_cap: float = 0.4
    max_steps: int = 200_000
    level_tol: float = 1e-7
    spiral_min_windings: float = 3.0
    spiral_decay: float = 4.0

    @classmethod
    def from_mapping(cls, data: dict) -> "TraceConfig":
        kwargs = {}
        for f in cls.__dataclass_fields__:
            if f in data:
                raw = data[f]
                kwargs[f] = int(raw) if f == "max_steps" else float(raw)
        cfg = cls(**kwargs)
        for name in ("rtol", "atol", "launch_offset_factor", "hit_factor", "close_factor",
                     "r_max_factor", "r_min_factor", "max_step_factor", "near_cap", "level_tol"):
            if getattr(cfg, name) <= 0:
                raise DomainError(f"trace config {name} must be positive")
        return cfg


@dataclass(frozen=True)
class _Resolved:
    launch_offset: float
    eps_hit: float
    eps_close: float
    r_max: float
    r_min: float
    max_step: float


def _resolve(q: QDiff, cfg: TraceConfig) -> _Resolved:
    sep = max(1.0, abs(q.a - q.b))
    nonzero = [m for m in (abs(q.a), abs(q.b)) if m > 1e-12]
    min_scale = min([1.0] + nonzero)
    return _Resolved(
        launch_offset=cfg.launch_offset_factor * sep,
        eps_hit=cfg.hit_factor * sep,
        eps_close=cfg.close_factor * sep,
        r_max=cfg.r_max_factor * q.scale,
        r_min=cfg.r_min_factor * min_scale,
        max_step=cfg.max_step_factor * q.scale,
    )


@dataclass(frozen=True)
class Termination:
    """Why an arc stopped; exactly one tag fires per arc."""

    tag: str  # ShortTrajectory | Loop | SpiralToOrigin | RadialToOrigin | EscapeToInfinity | StepBudgetExceeded
    endpoint: str | None = None     # zero label for ShortTrajectory
    winding: int | None = None      # Loop winding about the origin
    windings: int | None = None     # SpiralToOrigin full turns
    direction: str | None = None    # "+iinf" / "-iinf" (horizontal), "+inf" / "-inf" (vertical)
    closing_gap: float | None = None


SHORT = "ShortTrajectory"
LOOP = "Loop"
SPIRAL = "SpiralToOrigin"
RADIAL = "RadialToOrigin"
ESCAPE = "EscapeToInfinity"
BUDGET = "StepBudgetExceeded"


@dataclass
class Arc:
    """One traced trajectory with its conserved-level diagnostics.

    ``level`` is the accumulated Re (Im for vertical) of sqrt(D)/z dz from
    the first sample: it measures how far the polyline drifted off the
    trajectory's level set and should stay near zero.  ``level_drift`` is
    the maximum of |level| along the way.
    """

    kind: str
    origin: complex
    launch_angle: float | None
    samples: list[complex]
    termination: Termination
    level: float
    level_drift: float
    length: float
    anchor: str | None = None       # "a" / "b" / "zero" / "pole" for launched arcs
    ray_index: int | None = None
    duplicate_of: int | None = None


def _unit(u: complex) -> complex:
    return u / abs(u)


class _Tracer:
    def __init__(self, q: QDiff, kind: str, cfg: TraceConfig):
        self.q = q
        self.kind = kind
        self.cfg = cfg
        self.res = _resolve(q, cfg)
        self.rot = 1j if kind == "horizontal" else 1 + 0j

    def field(self, z: complex, w_ref: complex) -> tuple[complex, complex]:
        """Unit direction of the trajectory field at z, tracking the sheet."""
        d = eval_D(self.q, z)
        if abs(d) == 0:
            raise ContinuationError("field evaluated exactly at a zero of D")
        w = branch_sqrt(d, w_ref)
        return _unit(self.rot * z / w), w

    def level_increment(self, z0: complex, z1: complex, w_ref: complex) -> tuple[float, complex]:
        """Quadrature of sqrt(D)/z over the chord; return drift part and new branch."""
        dz = z1 - z0
        total = 0j
        w = w_ref
        for t, wt in zip(_G4_N, _G4_W):
            z = z0 + 0.5 * (t + 1.0) * dz
            w = branch_sqrt(eval_D(self.q, z), w)
            total += wt * (w / z)
        total *= 0.5 * dz
        w_end = branch_sqrt(eval_D(self.q, z1), w)
        drift = total.real if self.kind == "horizontal" else total.imag
        return drift, w_end


def trace(
    q: QDiff,
    seed: complex,
    direction: complex,
    kind: str = "horizontal",
    cfg: TraceConfig | None = None,
    anchor: str | None = None,
    ray_index: int | None = None,
    launch_angle: float | None = None,
) -> Arc:
    """Trace one trajectory from ``seed`` in (roughly) ``direction``.

    The field sign is chosen to align with ``direction``; the sheet of
    sqrt(D) rides along the integration.  For arcs launched from a zero,
    pass ``anchor`` ("a", "b" or "zero") so loop closure is detected at the
    zero rather than at the offset seed.
    """
    cfg = cfg or TraceConfig()
    if kind not in ("horizontal", "vertical"):
        raise DomainError(f"unknown trajectory kind {kind!r}")
    tr = _Tracer(q, kind, cfg)
    res = tr.res
    z = complex(seed)
    if abs(eval_D(q, z)) == 0:
        raise DomainError("seed sits exactly on a zero of D (zero field)")
    direction = _unit(complex(direction))

    # pin the sheet so the field points along the requested direction
    w = cmath.sqrt(eval_D(q, z))
    u, w = tr.field(z, w)
    if (u * direction.conjugate()).real < 0:
        w = -w
        u = -u

    # hit targets: the other zero(s) -> ShortTrajectory, the anchor -> Loop
    anchor_point: complex | None = None
    targets: list[tuple[str, complex]] = []
    if q.is_degenerate_equal:
        zero = q.zeros()[0]
        targets.append(("zero", zero))
        if anchor is not None:
            anchor_point = zero
    elif q.is_degenerate_zero:
        zero = q.zeros()[0]
        targets.append(("a" if abs(zero - q.a) <= abs(zero - q.b) else "b", zero))
        if anchor in ("a", "b"):
            anchor_point = zero
        elif anchor == "pole":
            anchor_point = 0j
    else:
        targets.append(("a", q.a))
        targets.append(("b", q.b))
        if anchor == "a":
            anchor_point = q.a
        elif anchor == "b":
            anchor_point = q.b
    if anchor is not None and anchor_point is None and anchor != "pole":
        raise DomainError(f"unknown anchor {anchor!r}")

    arm_radius = max(2.0 * res.eps_hit, 5.0 * res.launch_offset)
    armed = {}
    for label, zpt in targets:
        near_launch = anchor_point is not None and abs(zpt - anchor_point) < res.eps_hit
        armed[label] = not near_launch

    samples = [z]
    s = 0.0
    level_acc = 0.0
    level_max = 0.0
    theta_acc = 0.0
    r_hist: list[tuple[float, float]] = [(0.0, abs(z))]
    r_max_seen = abs(z)
    h = min(res.max_step, 1e-3)
    steps = 0
    termination: Termination | None = None

    def cap_step(hh: float, zz: complex) -> float:
        c = cfg.near_cap
        hh = min(hh, res.max_step)
        hh = min(hh, c * abs(zz) + res.r_min)
        for _, zpt in targets:
            hh = min(hh, c * abs(zz - zpt) + res.eps_close)
        return max(hh, 1e-300)

    def classify_origin_fall() -> Termination:
        turns = abs(theta_acc) / TWO_PI
        if turns >= 1.5:
            return Termination(tag=SPIRAL, windings=int(round(turns)))
        return Termination(tag=RADIAL)

    def spiral_fires(r_now: float) -> Termination | None:
        if abs(theta_acc) < cfg.spiral_min_windings * TWO_PI:
            return None
        if r_now > r_max_seen / cfg.spiral_decay:
            return None
        # monotone decay over the last full winding
        target = abs(theta_acc) - TWO_PI
        r_then = None
        for th, r in reversed(r_hist):
            if abs(th) <= target:
                r_then = r
                break
        if r_then is not None and r_now <= 0.8 * r_then:
            return Termination(tag=SPIRAL, windings=int(round(abs(theta_acc) / TWO_PI)))
        return None

    def close_in(zc: complex, wc: complex, target: complex, lvl: float) -> tuple[list[complex], float]:
        """March into a zero/pole with geometrically shrinking RK4 steps.

        After each step the accumulated level error is projected out along
        the gradient of the conserved quantity; without this the numerical
        point sweeps past the zero at a distance set by the level error
        (which the quadratic level sets of a double zero amplify to its
        square root).
        """
        pts = []
        zz, ww = zc, wc
        d = abs(zz - target)
        for _ in range(400):
            if d <= res.eps_close:
                break
            hh = 0.45 * d
            try:
                k1, ww = tr.field(zz, ww)
                k2, _ = tr.field(zz + 0.5 * hh * k1, ww)
                k3, _ = tr.field(zz + 0.5 * hh * k2, ww)
                k4, _ = tr.field(zz + hh * k3, ww)
            except ContinuationError:
                break
            z_new = zz + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if abs(eval_D(tr.q, z_new)) == 0:
                d = abs(z_new - target)
                zz = z_new
                pts.append(zz)
                break
            inc, w_new = tr.level_increment(zz, z_new, ww)
            lvl += inc
            # cancel the conserved-level error: dz = -lvl conj(g)/|g|^2 with
            # g the derivative of the level coordinate
            g = w_new / z_new if tr.kind == "horizontal" else 1j * (w_new / z_new)
            g2 = (g * g.conjugate()).real
            if g2 > 0:
                dz = -lvl * g.conjugate() / g2
                if abs(dz) < 0.2 * abs(z_new - target):
                    z2 = z_new + dz
                    if abs(eval_D(tr.q, z2)) > 0:
                        inc2, w2 = tr.level_increment(z_new, z2, w_new)
                        lvl += inc2
                        z_new, w_new = z2, w2
            d_new = abs(z_new - target)
            if d_new >= d:
                break
            zz, ww, d = z_new, w_new, d_new
            pts.append(zz)
        return pts, d

    while termination is None:
        if steps >= cfg.max_steps:
            termination = Termination(tag=BUDGET)
            break
        h = cap_step(h, z)
        # one embedded RK step with sheet-consistent stages
        try:
            k1, w1 = tr.field(z, w)
            k2, _ = tr.field(z + h * _A21 * k1, w1)
            k3, _ = tr.field(z + h * (_A31 * k1 + _A32 * k2), w1)
            k4, _ = tr.field(z + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), w1)
            k5, _ = tr.field(z + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), w1)
            k6, _ = tr.field(z + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), w1)
        except ContinuationError:
            h *= 0.25
            steps += 1
            continue
        z_new = z + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        try:
            k7, _ = tr.field(z_new, w1)
        except ContinuationError:
            h *= 0.25
            steps += 1
            continue
        err = abs(h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7))
        tol = cfg.atol + cfg.rtol * abs(z_new)
        steps += 1
        if err > tol:
            h *= max(0.2, 0.9 * (tol / err) ** 0.2)
            continue

        # accepted
        drift, w_new = tr.level_increment(z, z_new, w)
        if abs(z) > 0 and abs(z_new) > 0:
            theta_acc += cmath.phase(z_new / z)
        level_acc += drift
        level_max = max(level_max, abs(level_acc))
        s += abs(z_new - z)
        r_now = abs(z_new)
        r_max_seen = max(r_max_seen, r_now)
        r_hist.append((theta_acc, r_now))
        if len(r_hist) > 20000:
            del r_hist[:10000]
        z, w = z_new, w_new
        samples.append(z)
        if err > 0:
            h *= min(5.0, max(0.2, 0.9 * (tol / err) ** 0.2))
        else:
            h *= 5.0

        # --- termination checks, one tag only ---
        for label, zpt in targets:
            d = abs(z - zpt)
            if not armed[label]:
                if d > arm_radius:
                    armed[label] = True
                continue
            if d < res.eps_hit:
                extra, gap = close_in(z, w, zpt, level_acc)
                samples.extend(extra)
                samples.append(zpt)
                if anchor_point is not None and abs(zpt - anchor_point) < res.eps_hit:
                    termination = Termination(
                        tag=LOOP,
                        winding=int(round(theta_acc / TWO_PI)),
                        closing_gap=gap,
                    )
                else:
                    termination = Termination(tag=SHORT, endpoint=label, closing_gap=gap)
                break
        if termination is not None:
            break
        if r_now < res.r_min:
            termination = classify_origin_fall()
            if termination.tag == RADIAL:
                extra, gap = close_in(z, w, 0j, level_acc)
                samples.extend(extra)
                samples.append(0j)
                termination = replace(termination, closing_gap=gap)
            break
        t_spiral = spiral_fires(r_now)
        if t_spiral is not None:
            termination = t_spiral
            break
        if r_now > res.r_max:
            if kind == "horizontal":
                direction_tag = "+iinf" if z.imag > 0 else "-iinf"
            else:
                direction_tag = "+inf" if z.real > 0 else "-inf"
            termination = Termination(tag=ESCAPE, direction=direction_tag)
            break

    return Arc(
        kind=kind,
        origin=complex(seed),
        launch_angle=launch_angle,
        samples=samples,
        termination=termination,
        level=level_acc,
        level_drift=level_max,
        length=s,
        anchor=anchor,
        ray_index=ray_index,
    )


def _launch_plan(q: QDiff) -> list[tuple[str, complex, int, float]]:
    """(anchor label, zero point, ray index, angle) for every horizontal launch."""
    plan: list[tuple[str, complex, int, float]] = []
    if q.is_degenerate_equal:
        zero = q.zeros()[0]
        for i, th in enumerate(launch_directions(q, zero)):
            plan.append(("zero", zero, i, th))
    elif q.is_degenerate_zero:
        zero = q.zeros()[0]
        label = "a" if abs(zero - q.a) <= abs(zero - q.b) else "b"
        for i, th in enumerate(launch_directions(q, zero)):
            plan.append((label, zero, i, th))
        plan.append(("pole", 0j, 0, pole_ray(q)))
    else:
        for label, zero in (("a", q.a), ("b", q.b)):
            for i, th in enumerate(launch_directions(q, zero)):
                plan.append((label, zero, i, th))
    return plan


def trace_all_from_zeros(q: QDiff, cfg: TraceConfig | None = None) -> list[Arc]:
    """One horizontal arc per launch ray, in deterministic (zero, ray) order.

    Six arcs for distinct nonzero zeros, four if a = b, three plus the
    single pole ray if one zero sits at the origin.  Arcs that retrace a
    short trajectory or loop from its other end are marked via
    ``duplicate_of`` (the canonical arc keeps the lower index).
    """
    cfg = cfg or TraceConfig()
    res = _resolve(q, cfg)
    arcs: list[Arc] = []
    for anchor, zero, ray_idx, th in _launch_plan(q):
        off = res.launch_offset if anchor != "pole" else max(res.launch_offset, 10 * res.r_min)
        seed = zero + off * cmath.exp(1j * th)
        arc = trace(
            q,
            seed,
            cmath.exp(1j * th),
            kind="horizontal",
            cfg=cfg,
            anchor=anchor,
            ray_index=ray_idx,
            launch_angle=th,
        )
        arcs.append(arc)

    # identify retraced critical arcs by their unordered endpoint-ray pairs
    def endpoint_key(arc: Arc) -> frozenset | None:
        start = (arc.anchor, arc.ray_index)
        t = arc.termination
        if t.tag == LOOP:
            end_zero = _anchor_point(q, arc.anchor)
            ray = _arrival_ray(q, arc, end_zero)
            return frozenset([start, (arc.anchor, ray)])
        if t.tag == SHORT:
            end_zero = _anchor_point(q, t.endpoint)
            ray = _arrival_ray(q, arc, end_zero)
            return frozenset([start, (t.endpoint, ray)])
        if t.tag == RADIAL and q.is_degenerate_zero:
            # the radial arc into the simple pole is also traced from the pole ray
            return frozenset([start, ("pole", 0)])
        return None

    seen: dict[frozenset, int] = {}
    for i, arc in enumerate(arcs):
        key = endpoint_key(arc)
        if key is None:
            continue
        if key in seen:
            arc.duplicate_of = seen[key]
        else:
            seen[key] = i
    return arcs


def _anchor_point(q: QDiff, label: str | None) -> complex:
    if label == "a":
        return q.a
    if label == "b":
        return q.b
    if label == "zero":
        return q.zeros()[0]
    if label == "pole":
        return 0j
    raise DomainError(f"unknown zero label {label!r}")


def _arrival_ray(q: QDiff, arc: Arc, zero: complex) -> int:
    """Index of the launch ray along which the arc arrives at ``zero``."""
    pts = arc.samples
    k = len(pts) - 1
    while k > 0 and abs(pts[k] - zero) < 1e-12 * q.scale:
        k -= 1
    direction = cmath.phase(pts[k] - zero) % TWO_PI
    if abs(zero) < 1e-12:
        return 0  # the simple pole has a single ray
    rays = launch_directions(q, zero)
    diffs = [min(abs(direction - r), TWO_PI - abs(direction - r)) for r in rays]
    return diffs.index(min(diffs))


def unique_arcs(arcs: list[Arc]) -> list[Arc]:
    return [a for a in arcs if a.duplicate_of is None]


def detect_termination(
    q: QDiff,
    z: complex,
    theta_acc: float,
    r_max_seen: float,
    r_then: float | None,
    armed_targets: list[tuple[str, complex, bool]],
    anchor_point: complex | None,
    steps: int,
    cfg: TraceConfig | None = None,
    kind: str = "horizontal",
) -> Termination | None:
    """Pure form of the per-step termination rule used by :func:`trace`.

    ``r_then`` is |z| one full winding ago (None if unknown).  Returns the
    fired tag or None to continue; never fires two tags (checks run in hit,
    origin-fall, spiral, escape, budget order).
    """
    cfg = cfg or TraceConfig()
    res = _resolve(q, cfg)
    for label, zpt, armed in armed_targets:
        if not armed:
            continue
        if abs(z - zpt) < res.eps_hit:
            if anchor_point is not None and abs(zpt - anchor_point) < res.eps_hit:
                return Termination(tag=LOOP, winding=int(round(theta_acc / TWO_PI)))
            return Termination(tag=SHORT, endpoint=label)
    r_now = abs(z)
    if r_now < res.r_min:
        turns = abs(theta_acc) / TWO_PI
        if turns >= 1.5:
            return Termination(tag=SPIRAL, windings=int(round(turns)))
        return Termination(tag=RADIAL)
    if (
        abs(theta_acc) >= cfg.spiral_min_windings * TWO_PI
        and r_now <= r_max_seen / cfg.spiral_decay
        and r_then is not None
        and r_now <= 0.8 * r_then
    ):
        return Termination(tag=SPIRAL, windings=int(round(abs(theta_acc) / TWO_PI)))
    if r_now > res.r_max:
        if kind == "horizontal":
            return Termination(tag=ESCAPE, direction="+iinf" if z.imag > 0 else "-iinf")
        return Termination(tag=ESCAPE, direction="+inf" if z.real > 0 else "-inf")
    if steps >= cfg.max_steps:
        return Termination(tag=BUDGET)
    return None
