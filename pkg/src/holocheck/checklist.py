"""The verification checklist: twelve checks, one per geometric claim.

Each check computes a residual and compares it against a pinned tolerance.
Single-quantity checks report the raw residual; composite checks report
the worst residual/tolerance ratio against 1.0 and list the raw parts in
the note.  A module error inside a check becomes a failed check with
diagnostic text, never a crash of the run.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .foliation import leaf_first_check, leaf_second_check, product_split_check
from .quotient import (
    LoopClass,
    ToralMatrixError,
    eigen_basis,
    holonomy_element,
    holonomy_of_loop,
    pullback_metric_residual,
    quotient_conformal_metric,
    validate_toral_matrix,
)
from .report import CheckResult, VerificationReport, check_result
from .tensor_core import (
    ChartPoint,
    TangentVector,
    conformal_deviation_at,
    covariant_metric_derivative_at,
    riemann_at,
    sectional_curvature,
    warped_metric,
    _metric,
)
from .transport import (
    CurveSpec,
    IntegratorConfig,
    coordinate_rectangle,
    integrate_geodesic,
    parallel_transport,
    trajectory_to_csv,
    transport_frame_trace,
    transport_matrix,
)


class ConfigError(ValueError):
    """The checklist configuration itself is unusable."""


@dataclass(frozen=True)
class ChecklistConfig:
    """Inputs of a verification run; defaults reproduce the certified case."""

    matrix: Tuple[Tuple[int, int], Tuple[int, int]] = ((2, 1), (1, 1))
    samples: int = 1000
    tol_abs: float = 1e-8
    tol_rel: float = 1e-6
    seed: int = 0
    t_max: float = 100.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    # Test hook: any exponent other than 4 breaks the deck homothety (C2).
    metric_exponent: float = 4.0
    emit_traces_dir: Optional[str] = None

    def __post_init__(self):
        if self.samples <= 0:
            raise ConfigError("samples must be positive")
        if self.tol_abs <= 0 or self.tol_rel <= 0:
            raise ConfigError("tolerances must be positive")
        if self.t_max <= 0:
            raise ConfigError("t_max must be positive")
        try:
            IntegratorConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol)
        except ValueError as exc:
            raise ConfigError(f"bad integrator settings: {exc}") from exc


_DESCRIPTIONS = {
    "C1": "gluing matrix is hyperbolic in SL(2,Z)",
    "C2": "deck homothety f*g = lambda^2 g",
    "C3": "metric compatibility grad g = 0",
    "C4": "nonflat curvature profile",
    "C5": "parallel frame field v1",
    "C6": "holonomy reducibility (invariant line)",
    "C7": "deck-loop similarity with scale 1/lambda",
    "C8": "geodesic incompleteness at the chart floor",
    "C9": "conformal class of z^-2 g preserved",
    "C10": "line leaf flat and long-horizon complete",
    "C11": "half-plane leaf curved and incomplete",
    "C12": "orthogonal product splitting",
}

_CLAIMS = {
    "C1": "the gluing matrix lies in SL(2,Z) with real positive eigenvalues "
          "lambda > 1 > 1/lambda",
    "C2": "the deck map rescales the metric by the constant factor lambda^2 "
          "(a homothety), so connection and conformal class descend to the quotient",
    "C3": "the connection is the Levi-Civita connection of the chart metric: "
          "grad g = 0 identically (locally metric)",
    "C4": "the metric is not flat: scalar curvature equals -4/z^2 and the "
          "(v2, v3) plane has sectional curvature -2/z^2, while planes "
          "containing v1 are flat",
    "C5": "the coordinate field v1 is parallel: transport along arbitrary "
          "curves fixes it",
    "C6": "every holonomy element maps the line spanned by v1 to itself "
          "(the holonomy group is reducible)",
    "C7": "the deck-loop holonomy is the strict similarity (1/lambda) I while "
          "torus and contractible loops are isometric, so the holonomy lies in "
          "no orthogonal group and the connection is not globally metric",
    "C8": "the chart metric is geodesically incomplete: a downward vertical "
          "geodesic ends at affine parameter equal to its starting height, "
          "while the upward one continues",
    "C9": "the connection preserves the conformal class of g' = z^-2 g: "
          "grad_V g' = mu(V) g' with mu(V) = -2 V_z / z, and g' is invariant "
          "under the deck map",
    "C10": "the v1 line leaf carries a constant flat induced metric and its "
           "geodesics run to a long horizon without escape",
    "C11": "the (v2, v3) half-plane leaf has Gaussian curvature -2/z^2 and a "
           "geodesic that leaves it in finite affine time",
    "C12": "the chart metric is the orthogonal product of the flat line leaf "
           "and the curved half-plane leaf",
}


class _Context:
    """Shared artifacts for one run; all randomness is drawn up front."""

    def __init__(self, config: ChecklistConfig, matrix):
        self.config = config
        self.matrix = matrix
        self.frame = eigen_basis(matrix)
        self.metric = warped_metric(config.metric_exponent)
        self.gprime = quotient_conformal_metric(self.metric)
        self.cfg = IntegratorConfig(rel_tol=config.rel_tol, abs_tol=config.abs_tol)
        rng = np.random.default_rng(config.seed)
        n = config.samples
        xs = rng.uniform(-5.0, 5.0, n)
        ys = rng.uniform(-5.0, 5.0, n)
        zs = rng.uniform(0.2, 10.0, n)
        self.points = [ChartPoint(x, y, z) for x, y, z in zip(xs, ys, zs)]
        dirs = rng.uniform(-1.0, 1.0, (n, 3))
        self.directions = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        self.curves = []
        for _ in range(20):
            nodes = [ChartPoint(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                                rng.uniform(0.5, 5.0)) for _ in range(3)]
            self.curves.append(CurveSpec.from_points(nodes))
        self.mixed_planes = rng.uniform(0.0, 2.0 * np.pi, n)
        self._holonomies = None

    def holonomies(self):
        """Generator-loop and contractible-loop holonomy elements at (0,0,1)."""
        if self._holonomies is None:
            base = ChartPoint(0.0, 0.0, 1.0)
            elems = {}
            for gen in ("gx", "gy", "gz"):
                elems[gen] = holonomy_of_loop(
                    self.matrix, self.metric, LoopClass([gen], base), self.cfg)
            rect = coordinate_rectangle(base, 1, 2, 0.4)
            elems["contractible"] = holonomy_element(
                transport_matrix(self.metric, rect, self.cfg),
                _metric(self.metric, base.coords))
            self._holonomies = elems
        return self._holonomies


def _composite(check_id: str, parts) -> CheckResult:
    """Fold named (residual, tolerance) parts into one normalized check."""
    worst = 0.0
    details = []
    for name, residual, tolerance in parts:
        if not math.isfinite(residual):
            ratio = math.inf
        elif tolerance > 0:
            ratio = residual / tolerance
        else:
            ratio = 0.0 if residual <= 0.0 else math.inf
        worst = max(worst, ratio)
        details.append(f"{name}: residual={residual:.3e} tol={tolerance:.1e}")
    return check_result(check_id, _DESCRIPTIONS[check_id], _CLAIMS[check_id],
                        worst, 1.0, "; ".join(details))


def _check_homothety(ctx: _Context) -> CheckResult:
    residual = max(pullback_metric_residual(ctx.matrix, ctx.metric, p)
                   for p in ctx.points)
    return check_result("C2", _DESCRIPTIONS["C2"], _CLAIMS["C2"], residual, 1e-10,
                        f"max over {len(ctx.points)} points")


def _check_compatibility(ctx: _Context) -> CheckResult:
    m = ctx.metric
    exact = 0.0
    numeric = 0.0
    for p in ctx.points:
        exact = max(exact, float(np.max(np.abs(
            covariant_metric_derivative_at(m, m, p, method="exact")))))
        numeric = max(numeric, float(np.max(np.abs(
            covariant_metric_derivative_at(m, m, p, method="numeric", h=1e-5)))))
    return _composite("C3", [("exact_partials_path", exact, ctx.config.tol_abs),
                             ("numeric_partials_path_h=1e-5", numeric, 1e-5)])


def _check_nonflat(ctx: _Context) -> CheckResult:
    scalar_rel = 0.0
    halfplane_rel = 0.0
    flat_planes = 0.0
    e1 = np.array([1.0, 0.0, 0.0])
    for p, theta in zip(ctx.points, ctx.mixed_planes):
        curv = riemann_at(ctx.metric, p)
        g = _metric(ctx.metric, p.coords)
        scalar_rel = max(scalar_rel, abs(curv.scalar * p.z**2 / -4.0 - 1.0))
        k23 = sectional_curvature(g, curv.riemann,
                                  np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))
        halfplane_rel = max(halfplane_rel, abs(k23 * p.z**2 / -2.0 - 1.0))
        v = np.array([0.3, math.cos(theta), math.sin(theta)])
        flat_planes = max(flat_planes, abs(sectional_curvature(g, curv.riemann, e1, v)))
    return _composite("C4", [
        ("scalar_times_z2_is_minus_4", scalar_rel, ctx.config.tol_rel),
        ("halfplane_sectional_times_z2_is_minus_2", halfplane_rel, ctx.config.tol_rel),
        ("planes_containing_v1_flat", flat_planes, ctx.config.tol_abs),
    ])


def _check_parallel_field(ctx: _Context) -> CheckResult:
    e1 = np.array([1.0, 0.0, 0.0])
    residual = 0.0
    for curve in ctx.curves:
        w = parallel_transport(ctx.metric, curve,
                               TangentVector(curve.start, e1), ctx.cfg)
        residual = max(residual, float(np.max(np.abs(w.comp - e1))))
    return check_result("C5", _DESCRIPTIONS["C5"], _CLAIMS["C5"], residual, 1e-8,
                        f"max over {len(ctx.curves)} random polylines")


def _check_reducibility(ctx: _Context) -> CheckResult:
    parts = [(name, elem.invariant_line_residual, 1e-7)
             for name, elem in ctx.holonomies().items()]
    return _composite("C6", parts)


def _check_similarity(ctx: _Context) -> CheckResult:
    elems = ctx.holonomies()
    lam = ctx.frame.lam
    gz_matrix_res = float(np.max(np.abs(elems["gz"].matrix - np.eye(3) / lam)))
    parts = [("gz_matrix_is_inverse_lambda_identity", gz_matrix_res, 1e-6)]
    for name in ("gx", "gy", "contractible"):
        parts.append((f"{name}_scale_is_1", abs(elems[name].scale - 1.0), 1e-7))
    return _composite("C7", parts)


def _check_incompleteness(ctx: _Context) -> CheckResult:
    p0 = ChartPoint(0.0, 0.0, 1.0)
    down = integrate_geodesic(ctx.metric, p0, TangentVector(p0, [0.0, 0.0, -1.0]),
                              2.0, ctx.cfg)
    if down.termination.escaped:
        escape_res = abs(down.termination.t_escape - 1.0)
    else:
        escape_res = math.inf
    up = integrate_geodesic(ctx.metric, p0, TangentVector(p0, [0.0, 0.0, 1.0]),
                            ctx.config.t_max, ctx.cfg)
    up_res = 0.0 if up.termination.completed else math.inf
    return _composite("C8", [("downward_escape_at_t=1", escape_res, 1e-6),
                             ("upward_completes", up_res, 0.0)])


def _check_conformal(ctx: _Context) -> CheckResult:
    residual = 0.0
    mu_err = 0.0
    for p, d in zip(ctx.points, ctx.directions):
        mu, res = conformal_deviation_at(ctx.metric, ctx.gprime, p, d)
        residual = max(residual, res)
        mu_err = max(mu_err, abs(mu - (-2.0 * d[2] / p.z)))
    invariance = max(pullback_metric_residual(ctx.matrix, ctx.gprime, p,
                                              expected_factor=1.0)
                     for p in ctx.points)
    return _composite("C9", [
        ("conformal_residual", residual, ctx.config.tol_abs),
        ("mu_matches_-2Vz_over_z", mu_err, 1e-8),
        ("deck_invariance_of_gprime", invariance, 1e-10),
    ])


def _check_line_leaf(ctx: _Context) -> CheckResult:
    report = leaf_first_check(ctx.metric, t_max=1e3, cfg=ctx.cfg)
    return _composite("C10", [(i.name, i.residual, i.tolerance) for i in report.items])


def _check_halfplane_leaf(ctx: _Context) -> CheckResult:
    z_samples = [p.z for p in ctx.points]
    report = leaf_second_check(ctx.metric, z_samples, cfg=ctx.cfg)
    return _composite("C11", [(i.name, i.residual, i.tolerance) for i in report.items])


def _check_product_split(ctx: _Context) -> CheckResult:
    report = product_split_check(ctx.metric, ctx.points, seed=ctx.config.seed)
    return _composite("C12", [(i.name, i.residual, i.tolerance) for i in report.items])


_CHECKS = [
    ("C2", _check_homothety),
    ("C3", _check_compatibility),
    ("C4", _check_nonflat),
    ("C5", _check_parallel_field),
    ("C6", _check_reducibility),
    ("C7", _check_similarity),
    ("C8", _check_incompleteness),
    ("C9", _check_conformal),
    ("C10", _check_line_leaf),
    ("C11", _check_halfplane_leaf),
    ("C12", _check_product_split),
]


def _config_echo(config: ChecklistConfig) -> dict:
    return {
        "matrix": [list(row) for row in config.matrix],
        "samples": config.samples,
        "tol_abs": config.tol_abs,
        "tol_rel": config.tol_rel,
        "seed": config.seed,
        "t_max": config.t_max,
        "integrator_rel_tol": config.rel_tol,
        "integrator_abs_tol": config.abs_tol,
        "metric_exponent": config.metric_exponent,
        "emit_traces_dir": config.emit_traces_dir,
    }


def run_checklist(config: ChecklistConfig = ChecklistConfig()) -> VerificationReport:
    """Run all twelve checks and assemble the verification report.

    An invalid gluing matrix fails C1 and marks the dependent checks as
    not run; any exception inside a check is converted into a failed check
    with the exception text as its note.
    """
    checks = []
    try:
        matrix = validate_toral_matrix(config.matrix)
        checks.append(check_result("C1", _DESCRIPTIONS["C1"], _CLAIMS["C1"],
                                   0.0, 0.0, note=f"trace={matrix.trace}, det=1"))
    except ToralMatrixError as exc:
        matrix = None
        checks.append(check_result("C1", _DESCRIPTIONS["C1"], _CLAIMS["C1"],
                                   math.inf, 0.0, note=str(exc)))
    traces: Tuple[str, ...] = ()
    if matrix is None:
        for check_id, _ in _CHECKS:
            checks.append(check_result(check_id, _DESCRIPTIONS[check_id],
                                       _CLAIMS[check_id], math.inf, 0.0,
                                       note="not run: invalid gluing matrix"))
    else:
        ctx = _Context(config, matrix)
        for check_id, fn in _CHECKS:
            try:
                checks.append(fn(ctx))
            except Exception as exc:
                checks.append(check_result(check_id, _DESCRIPTIONS[check_id],
                                           _CLAIMS[check_id], math.inf, 0.0,
                                           note=f"{type(exc).__name__}: {exc}"))
        if config.emit_traces_dir is not None:
            traces = tuple(os.path.basename(p) for p in emit_traces(config))
    return VerificationReport(config_echo=_config_echo(config),
                              checks=tuple(checks), traces_emitted=traces)


def emit_traces(config: ChecklistConfig):
    """Write the escape-geodesic and deck-lift transport CSV traces.

    Returns the list of written file paths.  The geodesic trace has columns
    t, xt, yt, z, v1, v2, v3; the transport trace carries the accumulated
    frame matrix entries p11..p33 along the deck lift from z=1 to z=lambda.
    """
    if config.emit_traces_dir is None:
        raise ConfigError("emit_traces requires emit_traces_dir")
    matrix = validate_toral_matrix(config.matrix)
    lam = eigen_basis(matrix).lam
    metric = warped_metric(config.metric_exponent)
    cfg = IntegratorConfig(rel_tol=config.rel_tol, abs_tol=config.abs_tol)
    out_dir = config.emit_traces_dir
    os.makedirs(out_dir, exist_ok=True)
    written = []

    p0 = ChartPoint(0.0, 0.0, 1.0)
    traj = integrate_geodesic(metric, p0, TangentVector(p0, [0.0, 0.0, -1.0]),
                              2.0, cfg)
    path = os.path.join(out_dir, "escape_geodesic.csv")
    _write_text(path, trajectory_to_csv(traj))
    written.append(path)

    lift = CurveSpec.from_points([p0, ChartPoint(0.0, 0.0, lam)])
    trace = transport_frame_trace(metric, lift, cfg)
    lines = ["t,xt,yt,z," + ",".join(f"p{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3))]
    for t, coords, frame in trace:
        row = [t, *coords, *frame.ravel()]
        lines.append(",".join(f"{x:.17g}" for x in row))
    path = os.path.join(out_dir, "gz_transport.csv")
    _write_text(path, "\n".join(lines) + "\n")
    written.append(path)
    return written


def _write_text(path: str, text: str):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write trace file {path}: {exc}") from exc
