"""Pytest configuration and shared fixtures."""
import sys
from pathlib import Path

import pytest

# Add repo root to path so tests import the src package
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.quadrature import RuleSet  # noqa: E402


@pytest.fixture
def exact_rules():
    """Small product Gauss rules: exact on low-degree polynomial integrands"""
    return RuleSet(
        sphere_nodes=32,
        subsphere_nodes=64,
        method="product_gauss",
        subsphere_method="product_gauss",
        seed=0,
        radial_tol=1e-11,
    )


@pytest.fixture
def mc_rules():
    """Small seeded antithetic Monte Carlo rules"""
    return RuleSet(sphere_nodes=4000, subsphere_nodes=128, seed=7, radial_tol=1e-9)


@pytest.fixture
def output_dir(tmp_path):
    """Isolated run directory"""
    return tmp_path / "runs"
