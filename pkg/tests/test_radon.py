"""
Tests for the spherical Radon transform and intersection bodies

Covers:
- Transform values on constants and zonal polynomials
- Funk-Hecke multipliers
- Self-duality residuals
- Zonal inversion certificates and their failure modes
"""

import math

import numpy as np
import pytest
from dirty_equals import IsApprox
from inline_snapshot import snapshot

import src.radon as radon_module
from src.errors import ConfigError, InputDomainError, ResolutionError
from src.geometry import cube, euclidean_ball, random_directions, zonal
from src.radon import (
    SphereFunction,
    certify_zonal_body,
    funk_hecke_multiplier,
    intersection_body_of,
    radon,
    radon_batch,
    selfduality_residual,
    zonal_radon_forward,
    zonal_radon_inverse,
)

E3 = np.array([0.0, 0.0, 1.0])


@pytest.mark.unit
class TestRadonTransform:
    """Tests for Rf evaluated by subsphere quadrature"""

    def test_constant_on_s2(self, exact_rules):
        """Test R1 = 2 pi on S^2"""
        estimate = radon(SphereFunction.constant(3, 1.0), np.array([0.6, 0.0, 0.8]), exact_rules)
        assert estimate.value == IsApprox(2 * math.pi, delta=1e-12)

    def test_constant_on_s3(self, mc_rules):
        """Test R1 = |S^2| on S^3"""
        estimate = radon(SphereFunction.constant(4, 1.0), random_directions(4, 1, 0)[0], mc_rules)
        assert estimate.value == IsApprox(4 * math.pi, delta=1e-10)

    def test_zonal_eigenfunction(self, exact_rules):
        """Test R P_2(<., e3>) = -pi P_2(<xi, e3>)"""
        f = SphereFunction.legendre_series(E3, [0.0, 1.0])
        xis = random_directions(3, 5, 1)
        estimates = radon_batch(f, xis, exact_rules)
        expected = -math.pi * 0.5 * (3 * xis[:, 2] ** 2 - 1)
        assert np.allclose([e.value for e in estimates], expected, atol=1e-12)

    def test_batch_keeps_order(self, exact_rules):
        """Test batch results match single evaluations"""
        f = SphereFunction.body_power(cube(3), 2.0)
        xis = random_directions(3, 3, 2)
        batch = radon_batch(f, xis, exact_rules)
        assert batch[2].value == IsApprox(radon(f, xis[2], exact_rules).value, delta=1e-13)

    def test_wrong_dimension(self):
        """Test directions must live in the function's space"""
        with pytest.raises(InputDomainError):
            radon_batch(SphereFunction.constant(3, 1.0), np.array([[1.0, 0.0]]))


@pytest.mark.unit
class TestFunkHecke:
    """Tests for transform multipliers"""

    def test_multipliers_s2(self):
        """Test 2 pi P_k(0) on S^2"""
        values = [funk_hecke_multiplier(k, 3) for k in range(5)]
        assert values == snapshot(
            [IsApprox(2 * math.pi), 0.0, IsApprox(-math.pi), 0.0, IsApprox(0.75 * math.pi)]
        )

    def test_multiplier_circle(self):
        """Test the point-pair transform on S^1"""
        assert funk_hecke_multiplier(0, 2) == 2.0
        assert funk_hecke_multiplier(2, 2) == IsApprox(-2.0)

    def test_multiplier_higher_dimension(self):
        """Test degree 0 gives the subsphere area"""
        assert funk_hecke_multiplier(0, 5) == IsApprox(2 * math.pi**2)

    def test_invalid_degree(self):
        """Test negative degrees are rejected"""
        with pytest.raises(InputDomainError):
            funk_hecke_multiplier(-2, 3)


@pytest.mark.unit
class TestSelfDuality:
    """Tests for int Rf g = int f Rg"""

    def test_polynomial_pair(self, exact_rules):
        """Test the residual is compatible with zero"""
        f = SphereFunction.from_callable(3, lambda x: x[..., 0] ** 2)
        g = SphereFunction.from_callable(3, lambda x: 1.0 + x[..., 2] ** 2)
        assert selfduality_residual(f, g, exact_rules).compatible_with_zero()

    def test_dimension_mismatch(self):
        """Test functions must live on the same sphere"""
        with pytest.raises(InputDomainError):
            selfduality_residual(SphereFunction.constant(3, 1.0), SphereFunction.constant(4, 1.0))


@pytest.mark.unit
class TestZonalInversion:
    """Tests for exact inversion on bodies of revolution"""

    def test_forward_then_inverse(self):
        """Test R^{-1} R g = g on a Legendre series"""
        g = SphereFunction.legendre_series(E3, [1.0, 0.5])
        h = zonal_radon_forward(g)
        assert h.legendre == snapshot([IsApprox(2 * math.pi), IsApprox(-0.5 * math.pi)])

        certificate = zonal_radon_inverse(h, 2)
        assert certificate.degrees == [0, 2]
        assert certificate.coeffs == [IsApprox(1.0), IsApprox(0.5)]
        assert certificate.min_g == IsApprox(0.75)
        assert certificate.verdict == "certified-positive"

    def test_positive_body(self):
        """Test a mildly elongated body of revolution is certified"""
        certificate = certify_zonal_body(zonal(E3, legendre=[1.0, 0.2]))
        assert certificate.verdict == "certified-positive"
        assert certificate.min_g == IsApprox(1 / (2 * math.pi) - 0.2 / math.pi)

    def test_negative_body(self):
        """Test a strongly elongated body gets a negative certificate"""
        certificate = certify_zonal_body(zonal(E3, legendre=[1.0, 0.6]))
        assert certificate.verdict == "certified-negative"
        assert certificate.min_g < 0.0

    def test_truncation_too_coarse(self):
        """Test a non-polynomial profile at degree 2"""
        body = zonal(E3, profile=lambda t: 1.0 + np.abs(t))
        with pytest.raises(ResolutionError):
            certify_zonal_body(body, degree_cut=2)

    def test_non_zonal_input(self):
        """Test inversion needs a zonal function"""
        with pytest.raises(InputDomainError):
            zonal_radon_inverse(SphereFunction.from_callable(3, lambda x: x[..., 0]), 4)

    def test_only_s2(self):
        """Test other dimensions are rejected"""
        with pytest.raises(ConfigError):
            zonal_radon_inverse(SphereFunction.constant(4, 1.0), 2, n=4)

    def test_non_zonal_body(self):
        """Test certificates need a body of revolution"""
        with pytest.raises(InputDomainError):
            certify_zonal_body(cube(3))


@pytest.mark.unit
class TestIntersectionBody:
    """Tests for intersection bodies built from section volumes"""

    def test_ball(self, exact_rules):
        """Test I B_2^3 = pi B_2^3"""
        body = intersection_body_of(euclidean_ball(3), exact_rules)
        radii = body.radii(random_directions(3, 6, 3))
        assert np.allclose(radii, math.pi, rtol=1e-12)
        assert body.family.family == "intersection_body_of"
        assert body.convex

    def test_memoized(self, exact_rules):
        """Test repeated directions return identical radii"""
        body = intersection_body_of(cube(3), exact_rules)
        xis = random_directions(3, 4, 4)
        first = body.radii(xis)
        assert np.array_equal(body.radii(xis[::-1])[::-1], first)

    def test_memo_is_bounded(self, exact_rules, monkeypatch):
        """Test least recently used directions are evicted beyond cache_size"""
        calls = []
        compute = radon_module.section_volumes

        def counting(body, directions, rules):
            calls.append(len(directions))
            return compute(body, directions, rules)

        monkeypatch.setattr(radon_module, "section_volumes", counting)
        body = intersection_body_of(cube(3), exact_rules, cache_size=2)
        a, b, c = random_directions(3, 3, 5)
        body.radii(np.stack([a, b]))
        body.radii(a[None])
        body.radii(c[None])
        body.radii(a[None])
        body.radii(b[None])
        assert calls == [2, 1, 1]

    def test_batch_larger_than_memo(self, exact_rules):
        """Test a batch beyond cache_size still returns every radius"""
        xis = random_directions(3, 5, 6)
        small = intersection_body_of(cube(3), exact_rules, cache_size=2).radii(xis)
        full = intersection_body_of(cube(3), exact_rules).radii(xis)
        assert np.array_equal(small, full)

    def test_cache_size_positive(self):
        """Test a zero-sized memo is rejected"""
        with pytest.raises(InputDomainError):
            intersection_body_of(cube(3), cache_size=0)
