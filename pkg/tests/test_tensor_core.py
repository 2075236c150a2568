"""Pointwise tensor pipeline against hand-derived closed forms.

For the model metric dx^2 + z^4 dy^2 + dz^2 the Koszul formula gives, in
0-based indices, gamma[1,1,2] = gamma[1,2,1] = 2/z and gamma[2,1,1] =
-2 z^3 as the only nonzero symbols; from those the scalar curvature is
-4/z^2 and the (e1, e2) plane has sectional curvature -2/z^2.  The
numeric-partials path is the independent oracle for the exact one.
"""

import numpy as np
import pytest

import holocheck as hc
from holocheck import (
    ChartDomainError,
    ChartPoint,
    DegeneratePlaneError,
    MetricError,
    MetricField,
    TangentVector,
)


def gamma_closed_form(z):
    g = np.zeros((3, 3, 3))
    g[1, 1, 2] = g[1, 2, 1] = 2.0 / z
    g[2, 1, 1] = -2.0 * z**3
    return g


class TestChartTypes:
    def test_rejects_nonpositive_z(self):
        with pytest.raises(ChartDomainError):
            ChartPoint(0.0, 0.0, 0.0)
        with pytest.raises(ChartDomainError):
            ChartPoint(0.0, 0.0, -1.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ChartDomainError):
            ChartPoint(np.nan, 0.0, 1.0)
        with pytest.raises(ValueError):
            TangentVector(ChartPoint(0, 0, 1), [np.inf, 0.0, 0.0])

    def test_coords_roundtrip(self):
        p = ChartPoint(1.5, -2.0, 0.25)
        assert np.array_equal(p.coords, [1.5, -2.0, 0.25])
        assert ChartPoint.from_coords(p.coords) == p

    def test_tangent_vector_is_frozen(self):
        v = TangentVector(ChartPoint(0, 0, 1), [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            v.comp[0] = 5.0


class TestMetricAt:
    def test_model_at_z2(self, model):
        g = hc.metric_at(model, ChartPoint(0, 0, 2))
        np.testing.assert_allclose(g, np.diag([1.0, 16.0, 1.0]), atol=0)

    def test_model_at_z1_is_identity(self, model):
        g = hc.metric_at(model, ChartPoint(5, -3, 1))
        np.testing.assert_allclose(g, np.eye(3), atol=0)

    def test_euclidean_anywhere(self, euclid):
        g = hc.metric_at(euclid, ChartPoint(9.0, -7.0, 0.3))
        np.testing.assert_allclose(g, np.eye(3), atol=0)

    def test_rejects_floor(self, model):
        with pytest.raises(ChartDomainError):
            hc.metric_at(model, ChartPoint(0, 0, 1e-7))

    def test_rejects_bad_metric(self):
        lopsided = MetricField(lambda c: np.array([[1.0, 0.5, 0.0],
                                                   [0.0, 1.0, 0.0],
                                                   [0.0, 0.0, 1.0]]))
        with pytest.raises(MetricError):
            hc.metric_at(lopsided, ChartPoint(0, 0, 1))
        indefinite = MetricField(lambda c: np.diag([1.0, -1.0, 1.0]))
        with pytest.raises(MetricError):
            hc.metric_at(indefinite, ChartPoint(0, 0, 1))


class TestMetricPartials:
    def test_exact_at_z1(self, model):
        d = hc.metric_partials_at(model, ChartPoint(0, 0, 1))
        expected = np.zeros((3, 3, 3))
        expected[2, 1, 1] = 4.0
        np.testing.assert_allclose(d, expected, atol=0)

    def test_euclidean_zero(self, euclid):
        d = hc.metric_partials_at(euclid, ChartPoint(1, 2, 3))
        assert np.all(d == 0.0)

    def test_numeric_matches_exact_derivative(self, model):
        # oracle: d_z z^4 = 4 z^3 = 32 at z = 2
        d = hc.metric_partials_at(model, ChartPoint(0, 0, 2), h=1e-5, method="numeric")
        assert abs(d[2, 1, 1] - 32.0) < 1e-6
        d[2, 1, 1] = 0.0
        assert np.max(np.abs(d)) < 1e-9

    def test_explicit_step_must_stay_in_chart(self, model):
        with pytest.raises(ChartDomainError):
            hc.metric_partials_at(model, ChartPoint(0, 0, 2e-6), h=1e-5, method="numeric")
        with pytest.raises(ChartDomainError):
            hc.metric_partials_at(model, ChartPoint(0, 0, 0.5), h=0.6, method="numeric")

    def test_default_step_caps_near_floor(self, model):
        # the automatic step shrinks so the stencil stays inside the chart
        d = hc.metric_partials_at(model, ChartPoint(0, 0, 2e-6), method="numeric")
        assert np.all(np.isfinite(d))

    def test_exact_method_requires_exact_partials(self):
        bare = MetricField(lambda c: np.eye(3))
        with pytest.raises(ValueError):
            hc.metric_partials_at(bare, ChartPoint(0, 0, 1), method="exact")


class TestChristoffel:
    @pytest.mark.parametrize("z", [1.0, 2.0, 0.37, 6.0])
    def test_matches_closed_form(self, model, z):
        gamma = hc.christoffel_at(model, ChartPoint(0.4, -1.0, z)).gamma
        np.testing.assert_allclose(gamma, gamma_closed_form(z), rtol=1e-13, atol=1e-13)

    def test_euclidean_zero(self, euclid):
        gamma = hc.christoffel_at(euclid, ChartPoint(1, 1, 1)).gamma
        assert np.all(gamma == 0.0)

    def test_lower_index_symmetry_exact(self, model):
        rng = np.random.default_rng(2)
        for _ in range(20):
            p = ChartPoint(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.2, 10))
            gamma = hc.christoffel_at(model, p).gamma
            assert np.array_equal(gamma, gamma.transpose(0, 2, 1))

    def test_numeric_path_second_order(self, model):
        # halving h divides the defect against the exact path by ~4
        p = ChartPoint(0.4, -1.3, 1.7)
        exact = hc.christoffel_at(model, p, method="exact").gamma
        e1 = np.max(np.abs(hc.christoffel_at(model, p, method="numeric", h=1e-4).gamma - exact))
        e2 = np.max(np.abs(hc.christoffel_at(model, p, method="numeric", h=5e-5).gamma - exact))
        assert 3.5 < e1 / e2 < 4.5


class TestCurvature:
    @pytest.mark.parametrize("z,scalar", [(1.0, -4.0), (2.0, -1.0)])
    def test_scalar_values(self, model, z, scalar):
        curv = hc.riemann_at(model, ChartPoint(0, 0, z))
        assert abs(curv.scalar - scalar) < 1e-8

    def test_scalar_times_z2_constant(self, model):
        rng = np.random.default_rng(5)
        for _ in range(25):
            z = rng.uniform(0.2, 10.0)
            curv = hc.riemann_at(model, ChartPoint(rng.uniform(-5, 5), 0.0, z))
            assert abs(curv.scalar * z * z / -4.0 - 1.0) < 1e-6

    def test_antisymmetry_and_bianchi(self, model):
        curv = hc.riemann_at(model, ChartPoint(0.3, 1.1, 0.8))
        r = curv.riemann
        assert np.max(np.abs(r + r.transpose(0, 1, 3, 2))) < 1e-10
        bianchi = r + r.transpose(0, 2, 3, 1) + r.transpose(0, 3, 1, 2)
        assert np.max(np.abs(bianchi)) < 1e-6
        assert np.max(np.abs(curv.ricci - curv.ricci.T)) < 1e-10

    def test_euclidean_flat(self, euclid):
        curv = hc.riemann_at(euclid, ChartPoint(2, -2, 4))
        assert np.all(curv.riemann == 0.0)
        assert curv.scalar == 0.0

    def test_two_dimensional_pipeline(self):
        # same engine, dim = 2: warped half-plane diag(z^4, 1) over (yt, z)
        def components(c):
            return np.diag([c[1] ** 4, 1.0])

        m2 = MetricField(components, dim=2)
        k = hc.sectional_curvature_at(m2, np.array([0.0, 2.0]),
                                      np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert abs(k - (-0.5)) < 1e-6


class TestSectional:
    def test_curved_plane(self, model):
        p = ChartPoint(0, 0, 1)
        u = TangentVector(p, [0, 1, 0])
        v = TangentVector(p, [0, 0, 1])
        assert abs(hc.sectional_curvature_at(model, p, u, v) - (-2.0)) < 1e-8

    def test_flat_plane(self, model):
        p = ChartPoint(0, 0, 1)
        u = TangentVector(p, [1, 0, 0])
        v = TangentVector(p, [0, 0, 1])
        assert abs(hc.sectional_curvature_at(model, p, u, v)) < 1e-10

    def test_degenerate_plane(self, model):
        p = ChartPoint(1, 1, 1)
        u = TangentVector(p, [1, 0, 0])
        with pytest.raises(DegeneratePlaneError):
            hc.sectional_curvature_at(model, p, u, TangentVector(p, [2, 0, 0]))

    def test_vector_based_elsewhere_rejected(self, model):
        p = ChartPoint(0, 0, 1)
        stray = TangentVector(ChartPoint(0, 0, 2), [0, 1, 0])
        with pytest.raises(ValueError):
            hc.sectional_curvature_at(model, p, stray, TangentVector(p, [0, 0, 1]))


class TestCovariantDerivative:
    def test_metric_compatibility(self, model):
        nabla = hc.covariant_metric_derivative_at(model, model, ChartPoint(0, 0, 1.7))
        assert np.max(np.abs(nabla)) < 1e-8

    def test_conformal_target(self, model):
        # grad (z^-2 g) = d(z^-2) tensor g: only the z-direction survives
        gprime = hc.quotient_conformal_metric(model)
        p = ChartPoint(0, 0, 1)
        nabla = hc.covariant_metric_derivative_at(model, gprime, p)
        gp = gprime.components(p.coords)
        np.testing.assert_allclose(nabla[2], -2.0 * gp, atol=1e-10)
        assert np.max(np.abs(nabla[0])) < 1e-10
        assert np.max(np.abs(nabla[1])) < 1e-10

    def test_euclidean_zero(self, euclid):
        nabla = hc.covariant_metric_derivative_at(euclid, euclid, ChartPoint(3, 3, 3))
        assert np.all(nabla == 0.0)


class TestConformalDeviation:
    def test_vertical_direction(self, model):
        gprime = hc.quotient_conformal_metric(model)
        p = ChartPoint(0, 0, 2)
        mu, res = hc.conformal_deviation_at(model, gprime, p,
                                            TangentVector(p, [0, 0, 1]))
        assert abs(mu - (-1.0)) < 1e-10
        assert res < 1e-8

    def test_horizontal_direction(self, model):
        gprime = hc.quotient_conformal_metric(model)
        p = ChartPoint(0, 0, 1)
        mu, res = hc.conformal_deviation_at(model, gprime, p,
                                            TangentVector(p, [1, 0, 0]))
        assert abs(mu) < 1e-10
        assert res < 1e-8

    def test_metric_itself_has_zero_deviation(self, model):
        p = ChartPoint(1.0, -4.0, 3.3)
        mu, res = hc.conformal_deviation_at(model, model, p,
                                            TangentVector(p, [0.3, -1.0, 0.4]))
        assert abs(mu) < 1e-10
        assert res < 1e-8

    def test_zero_direction_rejected(self, model):
        p = ChartPoint(0, 0, 1)
        with pytest.raises(ValueError):
            hc.conformal_deviation_at(model, model, p, TangentVector(p, [0, 0, 0]))
