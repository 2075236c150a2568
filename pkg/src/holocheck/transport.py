"""Geodesic integration and parallel transport along piecewise-smooth curves.

The workhorse is an embedded Dormand-Prince 5(4) pair with PI step-size
control.  Geodesics solve x'' + Gamma(x)[x', x'] = 0; escape through the
chart floor is an event on the fiber coordinate, detected at accepted step
endpoints and refined by bisection in the affine parameter.  Transport
solves w' + Gamma(c)[c', w] = 0 segment by segment along a curve whose
tangents are carried exactly by the curve model, never differenced from
sampled positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .tensor_core import (
    ChartDomainError,
    ChartPoint,
    MetricField,
    TangentVector,
    Z_FLOOR,
    _christoffel,
    _vector,
    fiber_index,
)

COMPLETED = "completed"
BOUNDARY_ESCAPE = "boundary_escape"
STEP_LIMIT = "step_limit"

# Bisection window for the escape parameter.
EVENT_T_TOL = 1e-9


class CurveError(ValueError):
    """A curve description is inconsistent (gaps, too few segments, ...)."""


class IntegrationError(RuntimeError):
    """The integrator could not finish (step underflow or step budget)."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive step control settings shared by all integrations."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 1_000_000
    z_floor: float = 1e-6

    def __post_init__(self):
        if self.rel_tol < 1e-14:
            raise ValueError("rel_tol below 1e-14 is not resolvable in double precision")
        if self.abs_tol <= 0 or self.z_floor <= 0 or self.max_steps <= 0:
            raise ValueError("integrator settings must be positive")


DEFAULT_CONFIG = IntegratorConfig()


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) core
# ---------------------------------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
])
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# Hairer's PI controller for order 5: err^-alpha * err_prev^beta.
_PI_ALPHA = 0.17
_PI_BETA = 0.04


def _rk_step(f, t, y, h, k1):
    """One Dormand-Prince step; returns (y_new, error_vector, k_last)."""
    k = np.empty((7, y.size))
    k[0] = k1
    for s in range(1, 6):
        k[s] = f(t + _C[s] * h, y + h * (_A[s, :s] @ k[:s]))
    y_new = y + h * (_B5[:6] @ k[:6])
    k[6] = f(t + h, y_new)
    err = h * (_E @ k)
    return y_new, err, k[6]


def _error_norm(err, y0, y1, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f, y0, f0, t_end, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_end)
    f1 = f(h0, y0 + h0 * f0)
    if not np.all(np.isfinite(f1)):
        return max(1e-8 * t_end, 1e-12)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_end)


def _bisect_event(f, t, y, k1, h, event):
    """Refine the first event crossing inside the step [t, t+h].

    The event value is positive at offset 0 and non-positive at offset h;
    single embedded steps from the last known-good state evaluate the state
    inside the interval.  Returns (t_cross, y_cross) at the right end of the
    final bracket, so the crossing parameter is never underestimated.
    """
    lo, hi = 0.0, h
    y_lo, k_lo = y, k1
    while hi - lo > EVENT_T_TOL:
        mid = 0.5 * (lo + hi)
        y_mid, _, _ = _rk_step(f, t + lo, y_lo, mid - lo, k_lo)
        if not np.all(np.isfinite(y_mid)) or event(y_mid) <= 0.0:
            hi = mid
        else:
            lo, y_lo = mid, y_mid
            k_lo = f(t + lo, y_lo)
    y_hi, _, _ = _rk_step(f, t + lo, y_lo, hi - lo, k_lo)
    return t + hi, y_hi


def _integrate(f, y0, t_end, cfg, event=None):
    """Adaptive integration of y' = f(t, y) on [0, t_end].

    Returns ``(samples, status, t_event)`` where samples is a list of
    (t, y) at accepted steps (including the initial state and, for an event
    stop, the refined crossing state).  ``status`` is COMPLETED,
    BOUNDARY_ESCAPE or STEP_LIMIT; the step budget counts attempted steps.
    """
    y = np.asarray(y0, dtype=float)
    t = 0.0
    samples = [(0.0, y.copy())]
    if t_end <= 0.0:
        return samples, COMPLETED, None
    k1 = f(0.0, y)
    if not np.all(np.isfinite(k1)):
        raise IntegrationError("derivative is not finite at the initial state")
    h = _initial_step(f, y, k1, t_end, cfg)
    err_prev = None
    attempts = 0
    while t < t_end:
        if attempts >= cfg.max_steps:
            return samples, STEP_LIMIT, None
        h = min(h, t_end - t)
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t}")
        attempts += 1
        y_new, err, k_last = _rk_step(f, t, y, h, k1)
        if np.all(np.isfinite(y_new)) and np.all(np.isfinite(err)):
            err_norm = _error_norm(err, y, y_new, cfg)
        else:
            err_norm = np.inf
        if err_norm > 1.0:
            factor = _MIN_FACTOR if not np.isfinite(err_norm) else max(
                _MIN_FACTOR, _SAFETY * err_norm ** -_PI_ALPHA)
            h *= min(factor, 1.0)
            err_prev = None
            continue
        t_new = t + h
        if event is not None and event(y_new) <= 0.0:
            t_cross, y_cross = _bisect_event(f, t, y, k1, h, event)
            samples.append((t_cross, y_cross))
            return samples, BOUNDARY_ESCAPE, t_cross
        samples.append((t_new, y_new.copy()))
        if err_norm == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * err_norm ** -_PI_ALPHA
            if err_prev is not None:
                factor *= err_prev ** _PI_BETA
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        h *= factor
        err_prev = max(err_norm, 1e-4)
        t, y, k1 = t_new, y_new, k_last
    return samples, COMPLETED, None


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Termination:
    """How an integration ended; ``t_escape`` is set for boundary escapes."""

    status: str
    t_escape: Optional[float] = None

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    @property
    def escaped(self) -> bool:
        return self.status == BOUNDARY_ESCAPE


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    point: ChartPoint
    velocity: TangentVector


@dataclass(frozen=True)
class Trajectory:
    """Accepted integration samples of a geodesic plus its termination."""

    samples: Tuple[TrajectorySample, ...]
    termination: Termination

    @property
    def final(self) -> TrajectorySample:
        return self.samples[-1]


def _geodesic_rhs(m: MetricField, fi: Optional[int]):
    dim = m.dim

    def rhs(t, y):
        x = y[:dim]
        v = y[dim:]
        if fi is not None and x[fi] <= 0.0:
            return np.full(2 * dim, np.nan)
        gamma = _christoffel(m, x)
        acc = -np.einsum("kij,i,j->k", gamma, v, v)
        return np.concatenate([v, acc])

    return rhs


def integrate_geodesic_coords(m: MetricField, x0: Sequence[float],
                              v0: Sequence[float], t_max: float,
                              cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Dimension-generic geodesic integration in raw coordinates.

    Returns ``(ts, xs, vs, termination)`` with one row per accepted step.
    """
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if x0.shape != (m.dim,) or v0.shape != (m.dim,):
        raise ValueError(f"state must have {m.dim} coordinates")
    if not np.any(v0):
        raise ValueError("initial velocity is zero")
    fi = fiber_index(m)
    if fi is not None and x0[fi] <= cfg.z_floor:
        raise ChartDomainError(
            f"initial point has fiber coordinate {x0[fi]} <= floor {cfg.z_floor}")
    event = (lambda y: y[fi] - cfg.z_floor) if fi is not None else None
    samples, status, t_event = _integrate(
        _geodesic_rhs(m, fi), np.concatenate([x0, v0]), float(t_max), cfg, event)
    ts = np.array([t for t, _ in samples])
    ys = np.array([y for _, y in samples])
    return ts, ys[:, :m.dim], ys[:, m.dim:], Termination(status, t_event)


def integrate_geodesic(m: MetricField, p0: ChartPoint, v0: TangentVector,
                       t_max: float,
                       cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Geodesic of ``m`` from p0 with initial velocity v0, up to ``t_max``.

    The trajectory terminates early with BOUNDARY_ESCAPE when the fiber
    coordinate reaches ``cfg.z_floor`` (escape parameter refined by
    bisection), or with STEP_LIMIT when the step budget runs out; a step
    limit is reported, never silently truncated.
    """
    if m.dim != 3:
        raise ValueError("chart trajectories require a 3D metric; "
                         "use integrate_geodesic_coords for other dimensions")
    v0c = _vector(v0, 3, base=p0.coords)
    ts, xs, vs, term = integrate_geodesic_coords(m, p0.coords, v0c, t_max, cfg)
    samples = []
    for t, x, v in zip(ts, xs, vs):
        pt = ChartPoint.from_coords(x)
        samples.append(TrajectorySample(float(t), pt, TangentVector(pt, v)))
    return Trajectory(samples=tuple(samples), termination=term)


def geodesic_energy_drift(m: MetricField, traj: Trajectory) -> float:
    """Max relative drift of g(v, v) along the trajectory samples."""
    energies = []
    for s in traj.samples:
        g = np.asarray(m.components(s.point.coords), dtype=float)
        energies.append(float(s.velocity.comp @ g @ s.velocity.comp))
    e0 = energies[0]
    return float(np.max(np.abs(np.array(energies) - e0)) / abs(e0))


def completeness_probe(m: MetricField, seeds, t_max: float,
                       cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Run a batch of geodesic seeds; returns [(seed, Termination), ...].

    A boundary escape among the results certifies geodesic incompleteness
    of the chart metric; seeds are processed in input order.
    """
    results = []
    for seed in seeds:
        p0, v0 = seed
        traj = integrate_geodesic(m, p0, v0, t_max, cfg)
        results.append((seed, traj.termination))
    return results


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoordinateLine:
    """Run of signed ``length`` along one coordinate axis from ``start``."""

    start: ChartPoint
    axis: int
    length: float

    def __post_init__(self):
        vel = np.zeros(3)
        vel[self.axis] = self.length
        vel.setflags(write=False)
        c0 = self.start.coords
        c0.setflags(write=False)
        object.__setattr__(self, "_c0", c0)
        object.__setattr__(self, "_vel", vel)

    def point(self, s: float) -> np.ndarray:
        return self._c0 + s * self._vel

    def velocity(self, s: float) -> np.ndarray:
        return self._vel

    def reversed(self) -> "CoordinateLine":
        return CoordinateLine(ChartPoint.from_coords(self.point(1.0)),
                              self.axis, -self.length)


@dataclass(frozen=True)
class StraightSegment:
    """Straight chart segment between two points."""

    start: ChartPoint
    end: ChartPoint

    def __post_init__(self):
        delta = self.end.coords - self.start.coords
        delta.setflags(write=False)
        c0 = self.start.coords
        c0.setflags(write=False)
        object.__setattr__(self, "_c0", c0)
        object.__setattr__(self, "_delta", delta)

    def point(self, s: float) -> np.ndarray:
        return self._c0 + s * self._delta

    def velocity(self, s: float) -> np.ndarray:
        return self._delta

    def reversed(self) -> "StraightSegment":
        return StraightSegment(self.end, self.start)


@dataclass(frozen=True)
class ParametricSegment:
    """Curve segment s in [0, 1] with an exact tangent supplied alongside."""

    path: Callable[[float], ChartPoint]
    tangent: Callable[[float], np.ndarray]

    def point(self, s: float) -> np.ndarray:
        return self.path(s).coords

    def velocity(self, s: float) -> np.ndarray:
        return np.asarray(self.tangent(s), dtype=float)

    def reversed(self) -> "ParametricSegment":
        return ParametricSegment(lambda s: self.path(1.0 - s),
                                 lambda s: -np.asarray(self.tangent(1.0 - s), float))


Segment = Union[CoordinateLine, StraightSegment, ParametricSegment]


@dataclass(frozen=True)
class CurveSpec:
    """Piecewise-smooth chart curve: consecutive segments share endpoints."""

    segments: Tuple[Segment, ...]

    def __init__(self, segments: Sequence[Segment]):
        segments = tuple(segments)
        if not segments:
            raise CurveError("curve needs at least one segment")
        for a, b in zip(segments, segments[1:]):
            gap = np.max(np.abs(a.point(1.0) - b.point(0.0)))
            if gap > 1e-12:
                raise CurveError(f"consecutive segments differ by {gap} at the joint")
        for seg in segments:
            for s in np.linspace(0.0, 1.0, 17):
                if seg.point(s)[2] <= Z_FLOOR:
                    raise ChartDomainError(
                        f"curve reaches z={seg.point(s)[2]} at or below the floor")
        object.__setattr__(self, "segments", segments)

    @classmethod
    def from_points(cls, points: Sequence[ChartPoint]) -> "CurveSpec":
        """Polyline through the given chart points."""
        if len(points) < 2:
            raise CurveError("polyline needs at least two points")
        return cls([StraightSegment(a, b) for a, b in zip(points, points[1:])])

    @property
    def start(self) -> ChartPoint:
        return ChartPoint.from_coords(self.segments[0].point(0.0))

    @property
    def end(self) -> ChartPoint:
        return ChartPoint.from_coords(self.segments[-1].point(1.0))

    def reversed(self) -> "CurveSpec":
        return CurveSpec([seg.reversed() for seg in reversed(self.segments)])


def coordinate_rectangle(p: ChartPoint, i: int, j: int, eps: float) -> CurveSpec:
    """Closed rectangle loop at p: +eps e_i, +eps e_j, -eps e_i, -eps e_j."""
    c0 = p.coords
    ei = np.zeros(3)
    ei[i] = eps
    ej = np.zeros(3)
    ej[j] = eps
    corners = [c0, c0 + ei, c0 + ei + ej, c0 + ej, c0]
    return CurveSpec.from_points([ChartPoint.from_coords(c) for c in corners])


# ---------------------------------------------------------------------------
# Parallel transport
# ---------------------------------------------------------------------------

def _transport_rhs(m: MetricField, seg: Segment, width: int):
    def rhs(s, w):
        c = seg.point(s)
        if c[2] <= 0.0:
            return np.full(w.size, np.nan)
        gamma = _christoffel(m, c)
        a = -np.einsum("kij,i->kj", gamma, seg.velocity(s))
        return (a @ w.reshape(3, width)).ravel()

    return rhs


def _transport_segments(m: MetricField, curve: CurveSpec, w0: np.ndarray,
                        cfg: IntegratorConfig, record: bool):
    """Transport the columns of w0 along the curve; optionally keep samples."""
    if m.dim != 3:
        raise ValueError("curve transport requires a 3D metric")
    for seg in curve.segments:
        for s in np.linspace(0.0, 1.0, 17):
            if seg.point(s)[2] <= cfg.z_floor:
                raise ChartDomainError(
                    f"curve reaches z={seg.point(s)[2]} at or below the floor "
                    f"{cfg.z_floor}")
    width = 1 if w0.ndim == 1 else w0.shape[1]
    w = w0.reshape(3, width)
    trace = []
    for idx, seg in enumerate(curve.segments):
        rhs = _transport_rhs(m, seg, width)
        samples, status, _ = _integrate(rhs, w.ravel(), 1.0, cfg)
        if status != COMPLETED:
            raise IntegrationError(
                f"transport ran out of steps on segment {idx} ({status})")
        if record:
            for s, y in samples:
                trace.append((idx + s, seg.point(s), y.reshape(3, width).copy()))
        w = samples[-1][1].reshape(3, width)
    return w.reshape(w0.shape), trace


def parallel_transport(m: MetricField, curve: CurveSpec, w0: TangentVector,
                       cfg: IntegratorConfig = DEFAULT_CONFIG) -> TangentVector:
    """Parallel transport of w0 along the curve; returns the endpoint vector."""
    w = _vector(w0, 3, base=curve.start.coords)
    w_end, _ = _transport_segments(m, curve, w, cfg, record=False)
    return TangentVector(curve.end, w_end)


def transport_matrix(m: MetricField, curve: CurveSpec,
                     cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Matrix P whose columns are the transports of the coordinate frame.

    P is a g-isometry between the endpoint tangent spaces:
    ``P.T g(end) P = g(start)`` up to integration tolerance.
    """
    p_end, _ = _transport_segments(m, curve, np.eye(3), cfg, record=False)
    return p_end


def transport_frame_trace(m: MetricField, curve: CurveSpec,
                          cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Accepted-step history of the frame transport along the curve.

    Returns [(t, coords, P), ...] with t the global curve parameter
    (segment index plus the in-segment parameter).
    """
    _, trace = _transport_segments(m, curve, np.eye(3), cfg, record=True)
    return trace


def curvature_via_loop(m: MetricField, p: ChartPoint, i: int, j: int,
                       eps: float,
                       cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """(P_loop - I) / eps^2 around the coordinate rectangle at p.

    As eps -> 0 this converges, at second order in eps, to the matrix with
    entries ``-R^k_{l i j}``, tying the transport engine back to the
    curvature pipeline.
    """
    loop = coordinate_rectangle(p, i, j, eps)
    p_loop = transport_matrix(m, loop, cfg)
    return (p_loop - np.eye(3)) / eps**2


def trajectory_to_csv(traj: Trajectory) -> str:
    """CSV dump of a trajectory: columns t, xt, yt, z, v1, v2, v3."""
    lines = ["t,xt,yt,z,v1,v2,v3"]
    for s in traj.samples:
        row = [s.t, s.point.xt, s.point.yt, s.point.z, *s.velocity.comp]
        lines.append(",".join(f"{x:.17g}" for x in row))
    return "\n".join(lines) + "\n"
