"""
Tests for sphere, subsphere and radial quadrature

Covers:
- Exactness of product Gauss rules on low-degree polynomials
- Seeded determinism and read-only rule arrays
- Error estimates and oracle failure diagnostics
- Deterministic complement bases
"""

import math

import numpy as np
import pytest
from dirty_equals import IsApprox, IsPositive
from inline_snapshot import snapshot
from pydantic import ValidationError

from src.errors import ConfigError, InputDomainError, QuadratureError
from src.quadrature import (
    Estimate,
    RadialRule,
    RuleSet,
    ball_volume,
    complement_bases,
    integrate_sphere,
    integrate_subsphere,
    orthonormal_complement,
    radial_integral,
    ratio,
    require_unit,
    residual,
    sphere_area,
    sphere_rule,
    subsphere_rule,
)


@pytest.mark.unit
class TestSphereConstants:
    """Tests for sphere areas and ball volumes"""

    @pytest.mark.parametrize(
        "n,area",
        [(2, 2 * math.pi), (3, 4 * math.pi), (4, 2 * math.pi**2)],
    )
    def test_sphere_area(self, n, area):
        """Test |S^{n-1}| against closed forms"""
        assert sphere_area(n) == IsApprox(area, delta=1e-12)

    def test_ball_volume(self):
        """Test unit ball volume in R^3"""
        assert ball_volume(3) == IsApprox(4 * math.pi / 3, delta=1e-12)


@pytest.mark.unit
class TestSphereRule:
    """Tests for sphere rule construction and integration"""

    def test_weights_sum_to_area(self):
        """Test every method reproduces the sphere area"""
        for method, size in (("monte_carlo", 100), ("antithetic_mc", 100), ("product_gauss", 16)):
            rule = sphere_rule(3, method, size, 0)
            assert float(rule.weights.sum()) == IsApprox(4 * math.pi, delta=1e-10)

    def test_product_rule_exact_on_polynomials(self):
        """Test product Gauss rule integrates x_3^2 and x_1^2 x_2^2 exactly"""
        rule = sphere_rule(3, "product_gauss", 32, 0)

        quadratic = integrate_sphere(lambda x: x[:, 2] ** 2, rule)
        quartic = integrate_sphere(lambda x: x[:, 0] ** 2 * x[:, 1] ** 2, rule)

        assert quadratic.value == IsApprox(4 * math.pi / 3, delta=1e-12)
        assert quartic.value == IsApprox(4 * math.pi / 15, delta=1e-12)
        assert quadratic.err < 1e-10
        assert quadratic.n_evals == rule.size + rule.coarse.size

    def test_circle_rule(self):
        """Test equispaced circle rule on cos^2"""
        rule = sphere_rule(2, "product_gauss", 16, 0)
        estimate = integrate_sphere(lambda x: x[:, 0] ** 2, rule)
        assert estimate.value == IsApprox(math.pi, delta=1e-12)

    def test_antithetic_cancels_odd_integrands(self):
        """Test antithetic pairs integrate odd functions to exactly zero"""
        rule = sphere_rule(4, "antithetic_mc", 200, 3)
        estimate = integrate_sphere(lambda x: x[:, 0] * x[:, 1] ** 2 + x[:, 3], rule)
        assert estimate.value == 0.0
        assert estimate.err == 0.0

    def test_monte_carlo_constant_has_zero_spread(self):
        """Test MC error estimate vanishes on constants"""
        rule = sphere_rule(3, "monte_carlo", 50, 1)
        estimate = integrate_sphere(lambda x: np.full(x.shape[0], 2.0), rule)
        assert estimate.value == IsApprox(8 * math.pi, delta=1e-10)
        assert estimate.err == 0.0

    def test_monte_carlo_error_positive(self):
        """Test MC error estimate on a non-constant integrand"""
        rule = sphere_rule(3, "monte_carlo", 2000, 1)
        estimate = integrate_sphere(lambda x: x[:, 0] ** 2, rule)
        assert estimate.err == IsPositive
        assert abs(estimate.value - 4 * math.pi / 3) < 5 * estimate.err

    def test_seeded_determinism(self):
        """Test identical seeds give identical nodes and estimates"""
        a = sphere_rule(5, "antithetic_mc", 64, 11)
        sphere_rule.cache_clear()
        b = sphere_rule(5, "antithetic_mc", 64, 11)
        assert np.array_equal(a.nodes, b.nodes)
        f = lambda x: np.exp(x[:, 0])  # noqa: E731
        assert integrate_sphere(f, a) == integrate_sphere(f, b)

    def test_rule_arrays_are_read_only(self):
        """Test rules cannot be mutated"""
        rule = sphere_rule(3, "monte_carlo", 10, 0)
        with pytest.raises(ValueError):
            rule.nodes[0, 0] = 2.0

    @pytest.mark.parametrize(
        "n,method,size",
        [
            (1, "monte_carlo", 10),
            (3, "antithetic_mc", 11),
            (3, "product_gauss", 7),
            (3, "sobol", 10),
            (3, "monte_carlo", 1),
        ],
    )
    def test_invalid_rules(self, n, method, size):
        """Test unsupported combinations raise ConfigError"""
        with pytest.raises(ConfigError):
            sphere_rule(n, method, size, 0)


@pytest.mark.unit
class TestOracleFailures:
    """Tests for oracle diagnostics"""

    def test_non_finite_value(self):
        """Test a NaN node is reported with its index"""
        rule = sphere_rule(3, "monte_carlo", 10, 0)

        def oracle(x):
            values = np.ones(x.shape[0])
            values[4] = np.nan
            return values

        with pytest.raises(QuadratureError) as exc_info:
            integrate_sphere(oracle, rule)

        assert exc_info.value.diagnostics == snapshot({"node_index": 4, "bad_nodes": 1})

    def test_wrong_shape(self):
        """Test an oracle returning the wrong shape"""
        rule = sphere_rule(3, "monte_carlo", 10, 0)
        with pytest.raises(QuadratureError) as exc_info:
            integrate_sphere(lambda x: np.ones(3), rule)
        assert "expected (10,)" in str(exc_info.value)


@pytest.mark.unit
class TestComplementBases:
    """Tests for deterministic Gram-Schmidt complements"""

    def test_orthonormal_and_orthogonal(self):
        """Test complement rows are orthonormal and orthogonal to xi"""
        xi = np.array([1.0, 2.0, -2.0, 0.5])
        xi /= np.linalg.norm(xi)
        basis = orthonormal_complement(xi)

        assert basis.shape == (3, 4)
        assert np.allclose(basis @ basis.T, np.eye(3), atol=1e-14)
        assert np.allclose(basis @ xi, 0.0, atol=1e-14)

    def test_sign_independent(self):
        """Test xi and -xi share the same complement basis"""
        xi = np.array([0.6, 0.0, 0.8])
        assert np.allclose(orthonormal_complement(xi), orthonormal_complement(-xi), atol=1e-15)

    def test_batched_frames(self):
        """Test a batch of two-vector frames"""
        frames = np.array([[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]])
        bases = complement_bases(frames)
        assert bases.shape == (1, 2, 4)
        assert np.allclose(bases[0], [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])

    def test_require_unit(self):
        """Test non-unit directions are rejected"""
        with pytest.raises(InputDomainError):
            require_unit(np.array([1.0, 1.0]))


@pytest.mark.unit
class TestSubsphereRule:
    """Tests for rules on great subspheres"""

    def test_nodes_in_hyperplane(self):
        """Test embedded nodes are unit vectors orthogonal to xi"""
        xi = np.array([0.0, 0.6, 0.8])
        rule = subsphere_rule(xi, sphere_rule(2, "product_gauss", 16, 0))
        assert np.allclose(rule.nodes @ xi, 0.0, atol=1e-14)
        assert np.allclose(np.linalg.norm(rule.nodes, axis=1), 1.0)

    def test_circle_length(self):
        """Test the great circle has length 2 pi"""
        xi = np.array([1.0, 0.0, 0.0])
        rule = subsphere_rule(xi, sphere_rule(2, "product_gauss", 16, 0))
        estimate = integrate_subsphere(lambda x: np.ones(x.shape[0]), rule)
        assert estimate.value == IsApprox(2 * math.pi, delta=1e-12)

    def test_dimension_mismatch(self):
        """Test base rule of the wrong dimension"""
        with pytest.raises(ConfigError):
            subsphere_rule(np.array([1.0, 0.0, 0.0]), sphere_rule(3, "monte_carlo", 10, 0))


@pytest.mark.unit
class TestRadialQuadrature:
    """Tests for composite Gauss-Legendre radial integration"""

    def test_polynomial(self):
        """Test int_0^2 r^2 dr"""
        values, errs, n_evals = RadialRule(tol=1e-12).integrate(
            lambda rows, r: np.ones_like(r), np.array([2.0]), 2
        )
        assert values[0] == IsApprox(8.0 / 3.0, delta=1e-13)
        assert n_evals == IsPositive

    def test_batched_limits(self):
        """Test independent upper limits per row"""
        upper = np.array([1.0, 2.0, 3.0])
        values, _, _ = RadialRule(tol=1e-12).integrate(
            lambda rows, r: np.ones_like(r), upper, 0
        )
        assert np.allclose(values, upper, rtol=1e-13)

    def test_gaussian_half_line(self):
        """Test int_0^inf exp(-r^2/2) dr with a declared tail"""
        estimate = radial_integral(
            lambda r: np.exp(-0.5 * r**2), 0, math.inf, tol=1e-10, tail_radius=10.0
        )
        assert estimate.value == IsApprox(math.sqrt(math.pi / 2), delta=1e-8)

    def test_power_law_over_long_range(self):
        """Test int_0^inf r / (1 + r^3) dr with a cutoff at 1e10"""
        estimate = radial_integral(
            lambda r: 1.0 / (1.0 + r**3), 1, math.inf, tol=1e-10, tail_radius=1e10
        )
        assert estimate.value == IsApprox(2 * math.pi / (3 * math.sqrt(3)), delta=1e-8)
        assert estimate.n_evals < 10**5

    def test_infinite_range_needs_tail(self):
        """Test an infinite range without a tail bound"""
        with pytest.raises(InputDomainError):
            radial_integral(lambda r: np.exp(-r), 0, math.inf)

    def test_non_positive_limit(self):
        """Test a non-positive upper limit"""
        with pytest.raises(InputDomainError):
            radial_integral(lambda r: np.ones_like(r), 0, 0.0)

    def test_refinement_failure(self):
        """Test non-convergence is reported with diagnostics"""
        rule = RadialRule(order=2, tol=1e-14, max_level=1)
        with pytest.raises(QuadratureError) as exc_info:
            rule.integrate(lambda rows, r: np.ones_like(r), np.array([1.0]), 0.5)
        assert exc_info.value.diagnostics["level"] == 1
        assert exc_info.value.diagnostics["unconverged_rows"] == 1


@pytest.mark.unit
class TestEstimate:
    """Tests for Estimate arithmetic"""

    def test_relative_error(self):
        """Test relative error including the zero cases"""
        assert Estimate(value=2.0, err=0.1, n_evals=1).relative_err == IsApprox(0.05)
        assert Estimate(value=0.0, err=0.0, n_evals=1).relative_err == 0.0
        assert Estimate(value=0.0, err=1.0, n_evals=1).relative_err == math.inf

    def test_compatible_with_zero(self):
        """Test the k-sigma zero test"""
        assert Estimate(value=0.2, err=0.1, n_evals=1).compatible_with_zero()
        assert not Estimate(value=0.5, err=0.1, n_evals=1).compatible_with_zero()

    def test_residual_and_ratio(self):
        """Test error propagation of residual and ratio"""
        a = Estimate(value=3.0, err=0.3, n_evals=10)
        b = Estimate(value=2.0, err=0.4, n_evals=5)

        assert residual(a, b).model_dump() == snapshot(
            {"value": 1.0, "err": IsApprox(0.5), "n_evals": 15}
        )
        assert ratio(a, b).value == 1.5
        assert ratio(a, b).err == IsApprox(1.5 * math.hypot(0.1, 0.2))

    def test_ratio_zero_denominator(self):
        """Test division by a vanishing estimate"""
        with pytest.raises(InputDomainError):
            ratio(Estimate(value=1.0, err=0.0, n_evals=1), Estimate(value=0.0, err=0.0, n_evals=1))

    def test_negative_error_rejected(self):
        """Test err >= 0 is enforced"""
        with pytest.raises(ValidationError):
            Estimate(value=1.0, err=-1.0, n_evals=1)

    def test_scaled(self):
        """Test scaling keeps the error non-negative"""
        scaled = Estimate(value=2.0, err=0.5, n_evals=3).scaled(-2.0)
        assert (scaled.value, scaled.err) == (-4.0, 1.0)


@pytest.mark.unit
class TestRuleSet:
    """Tests for experiment rule sets"""

    def test_subrule_selection(self):
        """Test point pair, circle and Monte Carlo subsphere rules"""
        rules = RuleSet(sphere_nodes=100, subsphere_nodes=64, seed=5)

        assert rules.subrule(1).method == "point_pair"
        assert rules.subrule(2).method == "product_gauss"
        assert rules.subrule(4).method == "antithetic_mc"
        assert rules.subrule(4).seed == 6

    def test_sphere_rule_from_set(self):
        """Test the full-sphere rule honors size, method and seed"""
        rule = RuleSet(sphere_nodes=100, seed=5).sphere(3)
        assert (rule.size, rule.method, rule.seed) == (100, "antithetic_mc", 5)

    def test_snapshot(self):
        """Test rule sets serialize their settings"""
        rules = RuleSet(
            sphere_nodes=100,
            subsphere_nodes=64,
            seed=5,
            radial_tol=1e-8,
            radial_order=10,
        )
        assert rules.snapshot() == snapshot(
            {
                "sphere_nodes": 100,
                "subsphere_nodes": 64,
                "method": "antithetic_mc",
                "subsphere_method": "auto",
                "seed": 5,
                "radial_tol": 1e-8,
                "radial_order": 10,
            }
        )
