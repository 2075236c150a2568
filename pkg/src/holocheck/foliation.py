"""Checks on the two holonomy foliations of the chart.

The reducible holonomy splits the tangent space into the parallel line
spanned by d/dxt and its g-orthogonal complement span(d/dyt, d/dz).  The
corresponding leaves through a point are the xt-coordinate line, whose
induced metric is the constant [1] (flat, and complete as far as a
long-horizon integration can tell), and the (yt, z) half-plane, whose
induced warped metric diag(z^4, 1) has Gaussian curvature -2/z^2 and runs
into the boundary at finite affine parameter.  The chart metric is the
orthogonal product of the two.

Leaf metrics are genuine coordinate restrictions of the 3D model, and the
half-plane curvature runs through the same tensor pipeline with the
dimension set to 2; nothing here is special-cased to closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .tensor_core import (
    ChartPoint,
    MetricField,
    TangentVector,
    _metric,
    christoffel_at,
    riemann_at,
    sectional_curvature,
)
from .transport import (
    BOUNDARY_ESCAPE,
    CurveSpec,
    DEFAULT_CONFIG,
    IntegratorConfig,
    StraightSegment,
    integrate_geodesic,
    integrate_geodesic_coords,
    parallel_transport,
)

LINE_LEAF = "line_leaf"
HALFPLANE_LEAF = "halfplane_leaf"


@dataclass(frozen=True)
class CheckItem:
    """One named residual with its tolerance and verdict."""

    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: str = ""


def check_item(name: str, residual: float, tolerance: float,
               detail: str = "") -> CheckItem:
    residual = float(residual)
    passed = bool(np.isfinite(residual) and residual <= tolerance)
    return CheckItem(name, residual, float(tolerance), passed, detail)


@dataclass(frozen=True)
class FoliationReport:
    """Bundle of check items for one leaf or splitting property."""

    kind: str
    items: Tuple[CheckItem, ...]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)


@dataclass(frozen=True)
class LeafModel:
    """A leaf kind together with the induced metric restricted to it."""

    kind: str
    induced_metric: MetricField


def induced_line_metric(m: MetricField) -> MetricField:
    """Restriction of ``m`` to the xt-line through (., 0, 1): a 1x1 metric."""

    def components(c):
        g = _metric(m, np.array([c[0], 0.0, 1.0]))
        return g[:1, :1]

    return MetricField(components, None, label=f"line leaf of ({m.label})",
                       dim=1, fiber_axis=None)


def induced_halfplane_metric(m: MetricField) -> MetricField:
    """Restriction of ``m`` to the (yt, z) half-plane through xt = 0."""

    def components(c):
        g = _metric(m, np.array([0.0, c[0], c[1]]))
        return g[1:, 1:]

    partials = None
    if m.exact_partials is not None:
        base_p = m.exact_partials

        def partials(c):
            d = np.asarray(base_p(np.array([0.0, c[0], c[1]])), dtype=float)
            return d[1:, 1:, 1:]

    return MetricField(components, partials,
                       label=f"half-plane leaf of ({m.label})", dim=2)


def line_leaf(m: MetricField) -> LeafModel:
    return LeafModel(LINE_LEAF, induced_line_metric(m))


def halfplane_leaf(m: MetricField) -> LeafModel:
    return LeafModel(HALFPLANE_LEAF, induced_halfplane_metric(m))


def gaussian_curvature(m2: MetricField, coords: Sequence[float]) -> float:
    """Gaussian curvature of a 2D metric: the only sectional curvature."""
    if m2.dim != 2:
        raise ValueError("gaussian curvature is defined for 2D metrics")
    coords = np.asarray(coords, dtype=float)
    curv = riemann_at(m2, coords)
    g = _metric(m2, coords)
    return sectional_curvature(g, curv.riemann,
                               np.array([1.0, 0.0]), np.array([0.0, 1.0]))


def leaf_first_check(m: MetricField, t_max: float = 1e3,
                     cfg: IntegratorConfig = DEFAULT_CONFIG) -> FoliationReport:
    """Line leaf: constant (flat) induced metric, long-horizon completeness.

    Completeness is numerical evidence only: a geodesic integrated to
    ``t_max`` without escape, not a proof for all time.
    """
    leaf = line_leaf(m)
    samples = np.linspace(-8.0, 8.0, 9)
    g_ref = _metric(leaf.induced_metric, samples[:1])
    const_res = max(float(np.max(np.abs(_metric(leaf.induced_metric, np.array([x]))
                                        - g_ref))) for x in samples)
    p0 = ChartPoint(0.0, 0.0, 1.0)
    traj = integrate_geodesic(m, p0, TangentVector(p0, [1.0, 0.0, 0.0]), t_max, cfg)
    horizon_res = 0.0 if traj.termination.completed else np.inf
    end = traj.final.point
    drift_res = max(abs(end.yt), abs(end.z - 1.0))
    curve = CurveSpec([StraightSegment(p0, ChartPoint(7.0, 0.0, 1.0))])
    w = parallel_transport(m, curve, TangentVector(p0, [1.0, 0.0, 0.0]), cfg)
    fix_res = float(np.max(np.abs(w.comp - np.array([1.0, 0.0, 0.0]))))
    return FoliationReport(LINE_LEAF, (
        check_item("induced_metric_constant", const_res, 1e-12),
        check_item("long_horizon_geodesic_completes", horizon_res, 0.0,
                   detail=f"t_max={t_max:g}, evidence only"),
        check_item("geodesic_stays_in_leaf", drift_res, 1e-7),
        check_item("transport_fixes_leaf_tangent", fix_res, 1e-8),
    ))


def leaf_second_check(m: MetricField, z_samples: Sequence[float],
                      cfg: IntegratorConfig = DEFAULT_CONFIG) -> FoliationReport:
    """Half-plane leaf: Gaussian curvature -2/z^2 and finite-time escape."""
    leaf = halfplane_leaf(m)
    curv_res = 0.0
    for z in z_samples:
        k = gaussian_curvature(leaf.induced_metric, np.array([0.0, float(z)]))
        curv_res = max(curv_res, abs(k * z * z / -2.0 - 1.0))
    ts, _, _, term = integrate_geodesic_coords(
        leaf.induced_metric, np.array([0.0, 1.0]), np.array([0.0, -1.0]), 2.0, cfg)
    if term.status == BOUNDARY_ESCAPE:
        escape_res = abs(term.t_escape - 1.0)
    else:
        escape_res = np.inf
    return FoliationReport(HALFPLANE_LEAF, (
        check_item("gaussian_curvature_times_z2_is_minus_2", curv_res, 1e-6),
        check_item("downward_geodesic_escapes_at_t1", escape_res, 1e-6),
    ))


def product_split_check(m: MetricField, points: Sequence[ChartPoint],
                        cfg: Optional[IntegratorConfig] = None,
                        seed: int = 0) -> FoliationReport:
    """Orthogonal product splitting span(e1) + span(e2, e3) at sample points.

    Checks block-diagonality of g, constancy of the line block, pure
    z-dependence of the half-plane block, vanishing of every Christoffel
    symbol touching the line direction, and flatness of planes containing
    it.
    """
    rng = np.random.default_rng(seed)
    block_res = 0.0
    const_res = 0.0
    zdep_res = 0.0
    mixed_gamma_res = 0.0
    mixed_plane_res = 0.0
    for p in points:
        c = p.coords
        g = _metric(m, c)
        block_res = max(block_res, abs(g[0, 1]), abs(g[0, 2]))
        const_res = max(const_res, abs(g[0, 0] - 1.0))
        shifted = c + np.array([1.3, -0.7, 0.0])
        zdep_res = max(zdep_res, float(np.max(np.abs(_metric(m, shifted) - g))))
        gamma = christoffel_at(m, p).gamma
        mask = np.zeros((3, 3, 3), dtype=bool)
        mask[0, :, :] = mask[:, 0, :] = mask[:, :, 0] = True
        mixed_gamma_res = max(mixed_gamma_res, float(np.max(np.abs(gamma[mask]))))
        curv = riemann_at(m, p)
        theta = rng.uniform(0.0, 2 * np.pi)
        v = np.array([rng.uniform(-1.0, 1.0), np.cos(theta), np.sin(theta)])
        k = sectional_curvature(g, curv.riemann, np.array([1.0, 0.0, 0.0]), v)
        mixed_plane_res = max(mixed_plane_res, abs(k))
    return FoliationReport("product_split", (
        check_item("metric_block_diagonal", block_res, 1e-12),
        check_item("line_block_constant", const_res, 1e-12),
        check_item("blocks_depend_only_on_z", zdep_res, 1e-12),
        check_item("mixed_christoffel_vanish", mixed_gamma_res, 1e-10),
        check_item("planes_containing_line_flat", mixed_plane_res, 1e-8),
    ))
