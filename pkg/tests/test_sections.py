"""
Tests for polar formulas of body and section measures

Covers:
- Closed-form volumes and Gaussian measures
- Real and complex central sections
- Evenness and parallel determinism of direction sweeps
- Maximal section search
"""

import math

import numpy as np
import pytest
from dirty_equals import IsApprox

from src.config import LabConfig
from src.errors import ConfigError, InputDomainError
from src.geometry import complex_lp, cube, ellipsoid, euclidean_ball, random_directions
from src.measures import anisotropic_gaussian, gaussian, lebesgue
from src.sections import (
    SectionQuery,
    complex_measure_of_body,
    complex_section_sweep,
    max_section,
    measure_of_body,
    radial_moments,
    section_measure,
    section_measures,
    section_volume,
    section_volumes,
    volume_of_body,
)

E3 = np.array([0.0, 0.0, 1.0])


@pytest.mark.unit
class TestBodyMeasure:
    """Tests for mu(K)"""

    def test_lebesgue_ball(self, exact_rules):
        """Test vol(B_2^3)"""
        q = SectionQuery(body=euclidean_ball(3), density=lebesgue(3), rules=exact_rules)
        assert measure_of_body(q).value == IsApprox(4 * math.pi / 3, delta=1e-12)

    def test_volume_matches_lebesgue_measure(self, exact_rules):
        """Test volume_of_body agrees with the Lebesgue measure"""
        body = ellipsoid([1.2, 1.0, 0.8])
        vol = volume_of_body(body, exact_rules.sphere(3))
        assert vol.value == IsApprox(4 * math.pi / 3 * 0.96, delta=1e-7)

    def test_gaussian_total_mass(self, exact_rules):
        """Test the Gaussian mass of a large ball is (2 pi)^{3/2}"""
        q = SectionQuery(body=euclidean_ball(3, 12.0), density=gaussian(3), rules=exact_rules)
        assert measure_of_body(q).value == IsApprox((2 * math.pi) ** 1.5, delta=1e-8)

    def test_dimension_mismatch(self):
        """Test body and density dimensions must agree"""
        with pytest.raises(InputDomainError):
            SectionQuery(body=cube(3), density=gaussian(4))


@pytest.mark.unit
class TestRadialMoments:
    """Tests for the inner radial integral"""

    def test_constant_density_exact(self):
        """Test constant densities need no density evaluations"""
        thetas = random_directions(3, 5, 0)
        values, errs, evals = radial_moments(cube(3), lebesgue(3), thetas, 2)
        assert np.allclose(values, cube(3).radii(thetas) ** 3 / 3, rtol=1e-15)
        assert np.all(errs == 0.0)
        assert evals == 0

    def test_parallel_sweep_is_bit_identical(self, monkeypatch):
        """Test chunked thread evaluation reproduces the serial result"""
        thetas = random_directions(3, 1300, 1)
        serial, _, _ = radial_moments(cube(3), gaussian(3), thetas, 1)

        monkeypatch.setattr(LabConfig, "WORKERS", 4)
        parallel, _, _ = radial_moments(cube(3), gaussian(3), thetas, 1)

        assert np.array_equal(serial, parallel)


@pytest.mark.unit
class TestSectionMeasure:
    """Tests for mu(K cap xi-perp)"""

    def test_gaussian_ball_section(self, exact_rules):
        """Test 2 pi (1 - exp(-1/2)) for the unit disc"""
        q = SectionQuery(
            body=euclidean_ball(3), density=gaussian(3), direction=E3, rules=exact_rules
        )
        expected = 2 * math.pi * (1 - math.exp(-0.5))
        assert section_measure(q).value == IsApprox(expected, delta=1e-9)

    def test_ellipsoid_section(self, exact_rules):
        """Test the central ellipse of semiaxes 2 and 1"""
        estimate = section_volume(ellipsoid([2.0, 1.0, 0.5]), E3, exact_rules)
        assert estimate.value == IsApprox(2 * math.pi, delta=1e-10)

    def test_cube_section(self, exact_rules):
        """Test the square section of the cube"""
        estimate = section_volume(cube(3), E3, exact_rules)
        assert estimate.value == IsApprox(4.0, delta=0.05)

    def test_sections_are_even(self, mc_rules):
        """Test xi and -xi give identical estimates"""
        xi = random_directions(4, 1, 2)[0]
        plus, minus = section_measures(cube(4), gaussian(4), np.stack([xi, -xi]), mc_rules)
        assert plus == minus

    def test_volume_and_lebesgue_section_agree(self, exact_rules):
        """Test section_volumes matches the Lebesgue section measure"""
        xis = random_directions(3, 4, 3)
        body = ellipsoid([1.5, 1.0, 0.7])
        volumes = section_volumes(body, xis, exact_rules)
        measures = section_measures(body, lebesgue(3), xis, exact_rules)
        for v, m in zip(volumes, measures):
            assert v.value == IsApprox(m.value, delta=1e-12)

    def test_missing_direction(self):
        """Test section_measure needs a direction"""
        with pytest.raises(InputDomainError):
            section_measure(SectionQuery(body=cube(3), density=gaussian(3)))

    def test_non_unit_direction(self):
        """Test directions must be unit vectors"""
        with pytest.raises(InputDomainError):
            SectionQuery(body=cube(3), density=gaussian(3), direction=np.array([1.0, 1.0, 0.0]))


@pytest.mark.unit
class TestMaxSection:
    """Tests for the multistart section maximizer"""

    def test_ellipsoid_maximum(self, exact_rules):
        """Test the search approaches the section orthogonal to the short axis"""
        best = max_section(lebesgue(3), ellipsoid([2.0, 1.0, 0.5]), exact_rules, n_dirs=16)

        assert best.value.value <= 2 * math.pi * (1 + 1e-6)
        assert best.value.value >= math.pi
        assert best.candidates == 16 + 3 * 3 * 2
        assert len(best.candidate_values) == 16
        assert best.value.value >= max(best.candidate_values)

    def test_needs_candidates(self):
        """Test n_dirs >= 1"""
        with pytest.raises(InputDomainError):
            max_section(gaussian(3), cube(3), n_dirs=0)


@pytest.mark.unit
class TestComplexSections:
    """Tests for sections by complex hyperplanes"""

    def test_complex_line_of_ball(self, exact_rules):
        """Test a complex line cuts the unit ball of C^2 in a unit disc"""
        xis = random_directions(4, 3, 4)
        estimates = complex_section_sweep(complex_lp(2, 2.0), lebesgue(4), xis, exact_rules)
        for estimate in estimates:
            assert estimate.value == IsApprox(math.pi, delta=1e-12)

    def test_complex_body_measure(self, exact_rules):
        """Test vol(B_2^4) = pi^2 / 2"""
        q = SectionQuery(body=complex_lp(2, 2.0), density=lebesgue(4), rules=exact_rules)
        assert complex_measure_of_body(q).value == IsApprox(math.pi**2 / 2, delta=1e-10)

    def test_requires_invariant_body(self, exact_rules):
        """Test the real cube is rejected"""
        with pytest.raises(ConfigError):
            complex_section_sweep(cube(4), gaussian(4), random_directions(4, 1, 0), exact_rules)

    def test_requires_invariant_density(self, exact_rules):
        """Test an anisotropic density must be symmetrized first"""
        density = anisotropic_gaussian(np.diag([1.0, 2.0, 3.0, 4.0]))
        with pytest.raises(ConfigError, match="symmetrize_complex"):
            complex_section_sweep(
                complex_lp(2, 2.0), density, random_directions(4, 1, 0), exact_rules
            )

    def test_odd_dimension(self, exact_rules):
        """Test complex formulas need an even dimension"""
        q = SectionQuery(body=cube(3), density=gaussian(3), rules=exact_rules)
        with pytest.raises(ConfigError):
            complex_measure_of_body(q)
