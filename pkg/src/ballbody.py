"""
Bodies K_f with sections preserved from (K, f)

||x||_{K_f} = ((n-1) int_0^inf (1_K f)(r x) r^{n-2} dr)^{-1/(n-1)}. The
indicator is applied by integrating up to the exact radial boundary of K, so
rho_{K_f}(theta) = ((n-1) M_{n-2}(theta))^{1/(n-1)} with M_k the radial moment
of f along theta inside K.
"""

from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel

from .config import logger, timed
from .errors import DegenerateBodyError, InputDomainError
from .geometry import BallBodyFamily, StarBody, quasi_random_directions, random_directions
from .measures import DensitySpec, rescaled
from .quadrature import Estimate, RadialRule, RuleSet, ratio, reduce_rule, residual
from .sections import SectionQuery, radial_moments, section_measure, section_volume

TRIANGLE_RTOL = 1e-9


def ball_body(
    K: StarBody, f: DensitySpec, radial_rule: Optional[RadialRule] = None
) -> StarBody:
    """
    The body K_f

    Raises:
        InputDomainError: Dimension mismatch or n < 2
        DegenerateBodyError: f vanishes on K along every sampled direction
    """
    n = K.dim
    if f.dim != n:
        raise InputDomainError(f"body lives in R^{n}, density in R^{f.dim}")
    if n < 2:
        raise InputDomainError("K_f needs n >= 2")
    radial_rule = radial_rule or RadialRule()

    mass, _, _ = radial_moments(K, f, quasi_random_directions(n, 256), n - 2, radial_rule)
    if not np.any(mass > 0.0):
        raise DegenerateBodyError(f"{f.family} density carries no mass on the body")

    def fn(thetas: np.ndarray) -> np.ndarray:
        shape = thetas.shape[:-1]
        moments, _, _ = radial_moments(K, f, thetas.reshape(-1, n), n - 2, radial_rule)
        return ((n - 1) * moments).reshape(shape) ** (1.0 / (n - 1))

    return StarBody(
        n,
        fn,
        BallBodyFamily(dim=n, base=K.family, density=f.descriptor.model_dump(mode="json")),
        r_theta_invariant=K.r_theta_invariant and f.flags.r_theta_invariant,
        convex=K.convex and f.is_convex_measure,
    )


class NormAxiomReport(BaseModel):
    """Sampled defects of the norm axioms for a gauge"""

    trials: int
    triangle_violations: int
    worst_gap: float
    homogeneity_defect: float
    evenness_defect: float


@timed
def verify_norm_axioms(Kf: StarBody, trials: int = 10_000, seed: int = 0) -> NormAxiomReport:
    """
    Check ||x+y|| <= ||x|| + ||y||, ||tx|| = t||x|| and ||-x|| = ||x|| on seeded samples

    Violations are counted beyond TRIANGLE_RTOL relative to ||x|| + ||y||; they
    are informative for densities that are not -1/n-concave.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((trials, Kf.dim))
    y = rng.standard_normal((trials, Kf.dim))
    t = rng.uniform(0.1, 10.0, trials)

    gx, gy, gxy = Kf.gauge(x), Kf.gauge(y), Kf.gauge(x + y)
    gap = (gxy - gx - gy) / (gx + gy)
    homogeneity = np.abs(Kf.gauge(t[:, None] * x) - t * gx) / (t * gx)
    evenness = np.abs(Kf.gauge(-x) - gx) / gx

    report = NormAxiomReport(
        trials=trials,
        triangle_violations=int(np.sum(gap > TRIANGLE_RTOL)),
        worst_gap=float(max(0.0, gap.max())),
        homogeneity_defect=float(homogeneity.max()),
        evenness_defect=float(evenness.max()),
    )
    logger.info("Norm axioms checked", extra={"extra_fields": report.model_dump()})
    return report


def independent_rules(rules: RuleSet) -> RuleSet:
    """
    A second rule set sharing no nodes with rules beyond chance

    Half again as many subsphere nodes (a multiple of 4, so product rules keep
    a coarse level), a fresh seed, and a higher-order, tighter radial rule.
    """
    return rules.model_copy(
        update={
            "subsphere_nodes": 4 * ((3 * rules.subsphere_nodes + 7) // 8),
            "seed": rules.seed + 7919,
            "radial_order": rules.radial_order + 4,
            "radial_tol": max(rules.radial_tol / 10.0, 1e-13),
        }
    )


def section_identity_residual(
    K: StarBody, f: DensitySpec, xi: np.ndarray, rules: Optional[RuleSet] = None
) -> Estimate:
    """
    |vol_{n-1}(K_f cap xi-perp) - mu(K cap xi-perp)| with combined error

    The K_f side runs on independent_rules(rules): the radial function of K_f
    is a radial moment of (K, f), so on a shared rule both sides would be the
    same sum.
    """
    rules = rules or RuleSet()
    other = independent_rules(rules)
    Kf = ball_body(K, f, other.radial())
    left = section_volume(Kf, xi, other)
    right = section_measure(SectionQuery(body=K, density=f, direction=xi, rules=rules))
    return residual(left, right)


class MomentRatioStudy(BaseModel):
    """Directional moment ratios and the global volume ratio vol(K_f) / mu(K)"""

    normalization: float
    ratios: List[float]
    min: float
    max: float
    global_ratio: Estimate
    positive_finite: bool


@timed
def klartag_ratio_study(
    f: DensitySpec,
    K: StarBody,
    directions: Union[int, np.ndarray] = 1000,
    rules: Optional[RuleSet] = None,
) -> MomentRatioStudy:
    """
    Ratios int t^{n-1} g / (int t^{n-2} g)^{n/(n-1)} with g(t) = (1_K f)(t theta),
    after rescaling f so that f(0) = 1, plus vol_n(K_f) / mu(K) on the full sphere rule

    Only positivity and finiteness are asserted.
    """
    rules = rules or RuleSet()
    n = K.dim
    f0 = f.f0
    if not f0 > 0.0:
        raise InputDomainError(f"ratio study needs f(0) > 0, got {f0}")
    g = f if f0 == 1.0 else rescaled(f, 1.0 / f0)
    radial_rule = rules.radial()

    if isinstance(directions, int):
        directions = random_directions(n, directions, rules.seed)
    upper, _, _ = radial_moments(K, g, directions, n - 1, radial_rule)
    lower, _, _ = radial_moments(K, g, directions, n - 2, radial_rule)
    ratios = upper / lower ** (n / (n - 1))

    rule = rules.sphere(n)

    def both(nodes: np.ndarray):
        mu_vals, mu_errs, _ = radial_moments(K, g, nodes, n - 1, radial_rule)
        low_vals, _, _ = radial_moments(K, g, nodes, n - 2, radial_rule)
        return mu_vals, mu_errs, ((n - 1) * low_vals) ** (n / (n - 1)) / n

    mu_vals, mu_errs, vol_vals = both(rule.nodes)
    coarse_mu = coarse_vol = None
    if rule.method == "product_gauss" and rule.coarse is not None:
        coarse_mu, _, coarse_vol = both(rule.coarse.nodes)
    mu_total, mu_err = reduce_rule(mu_vals, rule, coarse_mu)
    vol_total, vol_err = reduce_rule(vol_vals, rule, coarse_vol)
    mu = Estimate(
        value=float(mu_total),
        err=float(mu_err + np.sum(mu_errs * rule.weights)),
        n_evals=rule.size,
    )
    vol = Estimate(value=float(vol_total), err=float(vol_err), n_evals=rule.size)
    global_ratio = ratio(vol, mu)

    finite = bool(np.all(np.isfinite(ratios)) and np.all(ratios > 0.0))
    return MomentRatioStudy(
        normalization=f0,
        ratios=ratios.tolist(),
        min=float(ratios.min()),
        max=float(ratios.max()),
        global_ratio=global_ratio,
        positive_finite=finite and global_ratio.value > 0.0,
    )
