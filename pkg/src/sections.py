"""
Polar formulas for measures of star bodies and of their central sections

Every integral here has the form int_S int_0^{rho_K(theta)} r^k f(r theta) dr dtheta
over the full sphere, a great subsphere xi-perp, or the real form of a complex
hyperplane H_xi. The inner integral is computed by radial_moments; the outer
one by a sphere rule from the quadrature module.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import LabConfig, logger
from .errors import ConfigError, InputDomainError
from .geometry import ComplexDirection, StarBody, complex_directions, random_directions
from .measures import DensitySpec
from .quadrature import (
    Estimate,
    RadialRule,
    RuleSet,
    SphereRule,
    complement_bases,
    reduce_rule,
    require_unit,
)

CHUNK = 512

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
    """Order-preserving map over LabConfig.WORKERS threads"""
    if LabConfig.WORKERS <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=LabConfig.WORKERS) as pool:
        return list(pool.map(fn, items))


class SectionQuery(BaseModel):
    """A body, a density, an optional direction and the rules to integrate with"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    body: StarBody
    density: DensitySpec
    direction: Optional[np.ndarray] = None
    rules: RuleSet = Field(default_factory=RuleSet)

    @model_validator(mode="after")
    def _check_dims(self) -> "SectionQuery":
        if self.body.dim != self.density.dim:
            raise InputDomainError(
                f"body lives in R^{self.body.dim}, density in R^{self.density.dim}"
            )
        if self.direction is not None:
            self.direction = require_unit(self.direction)
            if self.direction.shape != (self.body.dim,):
                raise InputDomainError(f"direction must be a unit vector in R^{self.body.dim}")
        return self


def radial_moments(
    body: StarBody,
    density: DensitySpec,
    thetas: np.ndarray,
    k: float,
    radial_rule: Optional[RadialRule] = None,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    int_0^{rho_K(theta)} r^k f(r theta) dr for a batch of unit directions

    Exact for constant densities; otherwise adaptive Gauss-Legendre panels with
    the truncation at the exact radial boundary of K.

    Returns:
        Tuple of (values, error bounds, density evaluations)
    """
    thetas = np.asarray(thetas, dtype=float)
    radii = body.radii(thetas)
    if density.constant is not None:
        values = density.constant * radii ** (k + 1.0) / (k + 1.0)
        return values, np.zeros_like(values), 0

    radial_rule = radial_rule or RadialRule()
    starts = list(range(0, thetas.shape[0], CHUNK))

    def run(start: int):
        block = thetas[start : start + CHUNK]
        return radial_rule.integrate(
            lambda rows, r: density.along(block[rows], r), radii[start : start + CHUNK], k
        )

    parts = parallel_map(run, starts)
    values = np.concatenate([p[0] for p in parts])
    errs = np.concatenate([p[1] for p in parts])
    return values, errs, int(sum(p[2] for p in parts))


def _rule_estimates(
    body: StarBody,
    density: DensitySpec,
    rule: SphereRule,
    k: float,
    radial_rule: RadialRule,
    bases: Optional[np.ndarray] = None,
) -> List[Estimate]:
    """
    Apply a sphere rule to radial moments, once per basis

    Args:
        bases: (B, m, n) orthonormal rows mapping the rule's S^{m-1} into R^n;
               None integrates over the full sphere of R^n

    Returns:
        One Estimate per basis; errors add the rule error and the weighted radial gaps
    """

    def moments(nodes: np.ndarray):
        if bases is None:
            values, errs, evals = radial_moments(body, density, nodes, k, radial_rule)
            return values[None], errs[None], evals
        mapped = np.einsum("im,bmn->bin", nodes, bases)
        batch, count, n = mapped.shape
        values, errs, evals = radial_moments(
            body, density, mapped.reshape(batch * count, n), k, radial_rule
        )
        return values.reshape(batch, count), errs.reshape(batch, count), evals

    values, errs, n_evals = moments(rule.nodes)
    coarse_values = None
    if rule.method == "product_gauss" and rule.coarse is not None:
        coarse_values, _, coarse_evals = moments(rule.coarse.nodes)
        n_evals += coarse_evals
    totals, rule_errs = reduce_rule(values, rule, coarse_values)
    radial_errs = np.sum(errs * rule.weights, axis=-1)
    per_basis = max(1, n_evals // values.shape[0])
    return [
        Estimate(value=float(t), err=float(e + r), n_evals=per_basis)
        for t, e, r in zip(totals, rule_errs, radial_errs)
    ]


def measure_of_body(q: SectionQuery) -> Estimate:
    """mu(K) = int_{S^{n-1}} int_0^{rho_K} r^{n-1} f(r theta) dr dtheta"""
    n = q.body.dim
    return _rule_estimates(q.body, q.density, q.rules.sphere(n), n - 1, q.rules.radial())[0]


def volume_of_body(body: StarBody, rule: SphereRule) -> Estimate:
    """vol_n(K) = (1/n) int_{S^{n-1}} rho_K^n"""
    n = body.dim
    if rule.dim != n:
        raise ConfigError(f"rule lives on S^{rule.dim - 1}, body in R^{n}")

    def integrand(nodes: np.ndarray) -> np.ndarray:
        return body.radii(nodes) ** n / n

    values = integrand(rule.nodes)
    coarse_values = None
    n_evals = rule.size
    if rule.method == "product_gauss" and rule.coarse is not None:
        coarse_values = integrand(rule.coarse.nodes)
        n_evals += rule.coarse.size
    total, err = reduce_rule(values, rule, coarse_values)
    return Estimate(value=float(total), err=float(err), n_evals=n_evals)


def _section_bases(directions: np.ndarray) -> np.ndarray:
    directions = require_unit(np.atleast_2d(directions))
    return complement_bases(directions[:, None, :])


def section_measures(
    body: StarBody,
    density: DensitySpec,
    directions: np.ndarray,
    rules: Optional[RuleSet] = None,
) -> List[Estimate]:
    """mu(K cap xi-perp) for a sweep of directions, in input order"""
    rules = rules or RuleSet()
    n = body.dim
    if density.dim != n:
        raise InputDomainError(f"body lives in R^{n}, density in R^{density.dim}")
    bases = _section_bases(directions)
    logger.debug(
        "Section sweep",
        extra={"extra_fields": {"directions": int(bases.shape[0]), "dim": n}},
    )
    return _rule_estimates(body, density, rules.subrule(n - 1), n - 2, rules.radial(), bases)


def section_measure(q: SectionQuery) -> Estimate:
    """mu(K cap xi-perp) = int_{S^{n-1} cap xi-perp} int_0^{rho_K} r^{n-2} f(r theta) dr dtheta"""
    if q.direction is None:
        raise InputDomainError("section measure needs a direction")
    return section_measures(q.body, q.density, q.direction[None], q.rules)[0]


def section_volumes(
    body: StarBody, directions: np.ndarray, rules: Optional[RuleSet] = None
) -> List[Estimate]:
    """vol_{n-1}(K cap xi-perp) = (1/(n-1)) R(rho_K^{n-1})(xi) for a sweep of directions"""
    rules = rules or RuleSet()
    n = body.dim
    bases = _section_bases(directions)
    rule = rules.subrule(n - 1)

    def integrand(nodes: np.ndarray) -> np.ndarray:
        mapped = np.einsum("im,bmn->bin", nodes, bases)
        flat = body.radii(mapped.reshape(-1, n))
        return flat.reshape(mapped.shape[:2]) ** (n - 1) / (n - 1)

    values = integrand(rule.nodes)
    coarse_values = None
    per_basis = rule.size
    if rule.method == "product_gauss" and rule.coarse is not None:
        coarse_values = integrand(rule.coarse.nodes)
        per_basis += rule.coarse.size
    totals, errs = reduce_rule(values, rule, coarse_values)
    return [
        Estimate(value=float(t), err=float(e), n_evals=per_basis) for t, e in zip(totals, errs)
    ]


def section_volume(body: StarBody, xi: np.ndarray, rules: Optional[RuleSet] = None) -> Estimate:
    return section_volumes(body, np.asarray(xi, dtype=float)[None], rules)[0]


class MaxSection(BaseModel):
    """Best section found by multistart and coordinate ascent; a lower bound on the true max"""

    xi: List[float]
    value: Estimate
    candidates: int
    candidate_values: List[float]


def max_section(
    density: DensitySpec,
    body: StarBody,
    rules: Optional[RuleSet] = None,
    n_dirs: int = 64,
    seed: int = 0,
    rounds: int = 3,
    step: float = 0.2,
) -> MaxSection:
    """
    Largest mu(K cap xi-perp) over seeded candidate directions, refined by
    coordinate ascent on the sphere with a halving step

    Raises:
        InputDomainError: n_dirs < 1
    """
    if n_dirs < 1:
        raise InputDomainError("max_section needs at least one candidate direction")
    rules = rules or RuleSet()
    n = body.dim
    candidates = random_directions(n, n_dirs, seed)
    estimates = section_measures(body, density, candidates, rules)
    values = [e.value for e in estimates]
    best = int(np.argmax(values))
    xi, current = candidates[best], estimates[best]
    evaluated = n_dirs

    for level in range(rounds):
        h = step / 2**level
        for i in range(n):
            moves = np.stack([xi, xi])
            moves[0, i] += h
            moves[1, i] -= h
            moves /= np.linalg.norm(moves, axis=1, keepdims=True)
            trial = section_measures(body, density, moves, rules)
            evaluated += 2
            pick = int(np.argmax([t.value for t in trial]))
            if trial[pick].value > current.value:
                xi, current = moves[pick], trial[pick]

    return MaxSection(
        xi=xi.tolist(), value=current, candidates=evaluated, candidate_values=values
    )


def _require_complex(body: StarBody, density: DensitySpec, need_density_flag: bool) -> None:
    if body.dim % 2:
        raise ConfigError("complex polar formulas need an even ambient dimension")
    if body.dim != density.dim:
        raise ConfigError(f"body lives in R^{body.dim}, density in R^{density.dim}")
    if not body.r_theta_invariant:
        raise ConfigError(f"{body.family.family} body is not flagged R_theta-invariant")
    if need_density_flag and not density.flags.r_theta_invariant:
        raise ConfigError(
            f"{density.family} density is not R_theta-invariant; apply symmetrize_complex"
        )


def complex_measure_of_body(q: SectionQuery) -> Estimate:
    """mu(K) for an R_theta-invariant body in R^{2n}, int_{S^{2n-1}} int_0^{rho} r^{2n-1} f"""
    _require_complex(q.body, q.density, need_density_flag=False)
    return measure_of_body(q)


def complex_section_measures(
    body: StarBody,
    density: DensitySpec,
    cdirs: Sequence[ComplexDirection],
    rules: Optional[RuleSet] = None,
) -> List[Estimate]:
    """mu(K cap H_xi) over the (2n-3)-sphere of each H_xi, with radial power 2n-3"""
    rules = rules or RuleSet()
    _require_complex(body, density, need_density_flag=True)
    big_n = body.dim
    bases = np.stack([c.basis_H for c in cdirs])
    return _rule_estimates(
        body, density, rules.subrule(big_n - 2), big_n - 3, rules.radial(), bases
    )


def complex_section_measure(
    body: StarBody,
    density: DensitySpec,
    cdir: ComplexDirection,
    rules: Optional[RuleSet] = None,
) -> Estimate:
    """mu(K cap H_xi) = int_{S^{2n-1} cap H_xi} int_0^{rho_K} r^{2n-3} f(r theta) dr dtheta"""
    return complex_section_measures(body, density, [cdir], rules)[0]


def complex_section_sweep(
    body: StarBody,
    density: DensitySpec,
    directions: np.ndarray,
    rules: Optional[RuleSet] = None,
) -> List[Estimate]:
    """complex_section_measures for raw unit directions"""
    return complex_section_measures(body, density, complex_directions(directions), rules)
