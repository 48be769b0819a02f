"""
Verification harnesses for the isomorphic Busemann-Petty inequalities

Each harness computes the quantities of one inequality by quadrature, compares
them with the constant the inequality asserts, and returns a pydantic report.
Domination is only ever verified at finitely many sampled directions.
"""

import math
import time
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import gammaln

from .ballbody import ball_body, section_identity_residual, verify_norm_axioms
from .config import logger, runtime_snapshot, timed
from .errors import BoundViolationError, ConfigError, InputDomainError, QuadratureError
from .geometry import (
    ComplexLpFamily,
    EllipsoidFamily,
    IntersectionBodyFamily,
    LinearImageFamily,
    LpBallFamily,
    StarBody,
    ZonalFamily,
    ball_distance_bound,
    complex_lp,
    coordinate_lp_family,
    cube,
    ellipsoid,
    euclidean_ball,
    lp_ball,
    random_directions,
    scaled,
)
from .measures import DensitySpec, cauchy, density_from_descriptor, gaussian, symmetrize_complex
from .quadrature import (
    Estimate,
    RuleSet,
    radial_integral,
    ratio,
    sphere_area,
)
from .radon import SphereFunction, certify_zonal_body, selfduality_residual
from .sections import (
    SectionQuery,
    complex_measure_of_body,
    complex_section_sweep,
    max_section,
    measure_of_body,
    section_measures,
    volume_of_body,
)

Domination = Literal["verified", "violated", "inconclusive"]
SectionSweep = Callable[[StarBody, DensitySpec, np.ndarray, RuleSet], List[Estimate]]

LEMMA_TOL = 1e-12
BISECTION_STEPS = 40


def default_directions(n: int) -> int:
    return 200 if n <= 4 else 500


class DirectionRow(BaseModel):
    xi: List[float]
    section_K: Estimate
    section_M: Estimate


class BoundCheck(BaseModel):
    """One inequality constant; holds is None until a verified domination lets it be assessed"""

    name: str
    constant: float
    asserted: bool = True
    holds: Optional[bool] = None
    note: str = ""


class ExperimentReport(BaseModel):
    """Persistence unit of every experiment run"""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    experiment_id: str
    kind: str
    config: Dict[str, Any] = Field(default_factory=dict)
    rows: List[DirectionRow] = Field(default_factory=list)
    domination: Optional[Domination] = None
    directions: int = 0
    mu_K: Optional[Estimate] = None
    mu_M: Optional[Estimate] = None
    ratio: Optional[Estimate] = None
    bounds: List[BoundCheck] = Field(default_factory=list)
    applicable_bound: Optional[float] = None
    verdict: Literal["holds", "violated", "not-assessed"] = "not-assessed"
    details: Dict[str, Any] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    wall_time: float = 0.0

    @model_validator(mode="after")
    def _verified_needs_ratio(self) -> "ExperimentReport":
        if self.domination == "verified" and (self.ratio is None or not self.bounds):
            raise ValueError("verified domination requires ratio and bound fields")
        return self

    @property
    def violated(self) -> bool:
        return self.verdict == "violated"


def domination_verdict(
    sections_K: Sequence[Estimate], sections_M: Sequence[Estimate]
) -> Domination:
    """
    violated: some mu(K cap xi-perp) exceeds mu(M cap xi-perp) by more than 3 combined errors;
    verified: no direction exceeds at all; inconclusive otherwise
    """
    worst = "verified"
    for k, m in zip(sections_K, sections_M):
        diff = k.value - m.value
        slack = 1e-12 * max(abs(m.value), 1e-300)
        if diff > 3.0 * math.hypot(k.err, m.err) + slack:
            return "violated"
        if diff > slack:
            worst = "inconclusive"
    return worst


def _is_intersection_body(body: StarBody) -> Tuple[bool, str]:
    fam = body.family
    while isinstance(fam, LinearImageFamily):
        fam = fam.base
    if isinstance(fam, LpBallFamily) and fam.p <= 2.0:
        return True, f"l_{fam.p:g} ball embeds in L_q with q <= 2"
    if isinstance(fam, ComplexLpFamily) and fam.p <= 2.0:
        return True, f"complex l_{fam.p:g} ball embeds in L_q with q <= 2"
    if isinstance(fam, EllipsoidFamily):
        return True, "ellipsoid"
    if isinstance(fam, IntersectionBodyFamily):
        return True, "intersection body by construction"
    if isinstance(body.family, ZonalFamily):
        certificate = certify_zonal_body(body)
        if certificate.verdict == "certified-positive":
            return True, f"zonal certificate, min g = {certificate.min_g:.6g}"
    return False, ""


def applicable_bounds(K: StarBody) -> List[BoundCheck]:
    """Bound catalogue for the real Busemann-Petty ratio mu(K) / mu(M)"""
    n = K.dim
    bounds = [BoundCheck(name="sqrt_n", constant=math.sqrt(n))]

    distance = ball_distance_bound(K)
    bounds.append(
        BoundCheck(
            name="distance",
            constant=distance.d,
            asserted=distance.method == "analytic",
            note=f"d_I(K) <= d_BM(K, B_2^n) <= {distance.d:.6g} ({distance.method})",
        )
    )

    member, reason = _is_intersection_body(K)
    if member:
        bounds.append(BoundCheck(name="intersection_body", constant=1.0, note=reason))

    fam = coordinate_lp_family(K.family)
    if fam is not None and fam.p > 2.0:
        exponent = 0.5 if math.isinf(fam.p) else 0.5 - 1.0 / fam.p
        bounds.append(
            BoundCheck(name="lp_position", constant=n**exponent, note=f"l_{fam.p:g} ball, p > 2")
        )
    return bounds


def _assess(report: ExperimentReport) -> ExperimentReport:
    if report.domination != "verified" or report.ratio is None:
        report.verdict = "not-assessed"
        return report
    r = report.ratio
    for bound in report.bounds:
        bound.holds = r.value <= bound.constant * (1.0 + 3.0 * r.relative_err) + 1e-12
    asserted = [b for b in report.bounds if b.asserted]
    report.applicable_bound = min(b.constant for b in asserted) if asserted else None
    report.verdict = "holds" if all(b.holds for b in asserted) else "violated"
    return report


def _real_sweep(body, density, directions, rules):
    return section_measures(body, density, directions, rules)


def _complex_sweep(body, density, directions, rules):
    return complex_section_sweep(body, density, directions, rules)


def _config(kind: str, seed: int, rules: RuleSet, **items: Any) -> Dict[str, Any]:
    config = {"kind": kind, "seed": seed, "rules": rules.snapshot(), "runtime": runtime_snapshot()}
    for key, value in items.items():
        config[key] = value.model_dump(mode="json") if isinstance(value, BaseModel) else value
    return config


@timed
def bp_check(
    density: DensitySpec,
    K: StarBody,
    M: StarBody,
    n_dirs: Optional[int] = None,
    rules: Optional[RuleSet] = None,
    seed: int = 0,
    directions: Optional[np.ndarray] = None,
) -> ExperimentReport:
    """
    Real isomorphic Busemann-Petty check

    Verifies mu(K cap xi-perp) <= mu(M cap xi-perp) at seeded directions and,
    when domination is verified, compares mu(K) / mu(M) with every applicable
    constant (sqrt n always). M may be any star body.

    Raises:
        ConfigError: K is not flagged convex or the dimensions disagree
    """
    start = time.perf_counter()
    rules = rules or RuleSet(seed=seed)
    n = K.dim
    if not K.convex:
        raise ConfigError(f"{K.family.family} body K must be convex")
    if M.dim != n or density.dim != n:
        raise ConfigError("K, M and the density must share a dimension")
    if directions is None:
        directions = random_directions(n, n_dirs or default_directions(n), seed)

    report = ExperimentReport(
        experiment_id=f"bp-check-seed{seed}",
        kind="bp-check",
        config=_config(
            "bp-check", seed, rules, K=K.family, M=M.family, density=density.descriptor
        ),
        bounds=applicable_bounds(K),
        **_compare(density, K, M, directions, rules, _real_sweep, measure_of_body),
    )
    _assess(report)
    report.wall_time = time.perf_counter() - start
    return report


def _compare(
    density: DensitySpec,
    K: StarBody,
    M: StarBody,
    directions: np.ndarray,
    rules: RuleSet,
    sweep: SectionSweep,
    measure: Callable[[SectionQuery], Estimate],
) -> Dict[str, Any]:
    sections_K = sweep(K, density, directions, rules)
    sections_M = sweep(M, density, directions, rules)
    verdict = domination_verdict(sections_K, sections_M)
    mu_K = measure(SectionQuery(body=K, density=density, rules=rules))
    mu_M = measure(SectionQuery(body=M, density=density, rules=rules))
    rows = [
        DirectionRow(xi=xi.tolist(), section_K=a, section_M=b)
        for xi, a, b in zip(directions, sections_K, sections_M)
    ]
    return {
        "rows": rows,
        "domination": verdict,
        "directions": len(rows),
        "mu_K": mu_K,
        "mu_M": mu_M,
        "ratio": ratio(mu_K, mu_M),
        "notes": [f"domination {verdict} at {len(rows)} sampled directions"],
    }


@timed
def complex_bp_check(
    density: DensitySpec,
    K: StarBody,
    M: StarBody,
    n_dirs: Optional[int] = None,
    rules: Optional[RuleSet] = None,
    seed: int = 0,
    directions: Optional[np.ndarray] = None,
) -> ExperimentReport:
    """
    Complex isomorphic Busemann-Petty check over complex hyperplanes H_xi

    Densities that are not R_theta-invariant are replaced by f_c first; the
    ratio is compared with the real dimension 2n of the ambient space.
    """
    start = time.perf_counter()
    rules = rules or RuleSet(seed=seed)
    big_n = K.dim
    if big_n % 2 or M.dim != big_n or density.dim != big_n:
        raise ConfigError("complex check needs K, M and the density in a common R^{2n}")
    if not (K.r_theta_invariant and M.r_theta_invariant):
        raise ConfigError("complex check needs R_theta-invariant K and M")
    notes = []
    if not density.flags.r_theta_invariant:
        density = symmetrize_complex(density)
        notes.append("density replaced by its R_theta symmetrization f_c")
    if directions is None:
        directions = random_directions(big_n, n_dirs or default_directions(big_n), seed)

    bounds = [BoundCheck(name="complex_2n", constant=float(big_n))]
    if isinstance(K.family, ComplexLpFamily):
        p = K.family.p
        exponent = 0.5 if math.isinf(p) else abs(0.5 - 1.0 / p)
        bounds.append(
            BoundCheck(
                name="complex_distance",
                constant=float((big_n // 2) ** (2.0 * exponent)),
                note="d_IC(K)^2 with the identity normalization",
            )
        )
    fields = _compare(density, K, M, directions, rules, _complex_sweep, complex_measure_of_body)
    fields["notes"] = notes + fields["notes"]
    report = ExperimentReport(
        experiment_id=f"complex-bp-check-seed{seed}",
        kind="complex-bp-check",
        config=_config(
            "complex-bp-check", seed, rules, K=K.family, M=M.family, density=density.descriptor
        ),
        bounds=bounds,
        **fields,
    )
    _assess(report)
    report.wall_time = time.perf_counter() - start
    return report


class DominatedPair(BaseModel):
    """Largest dilation s such that sK is dominated by M at the sampled directions"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    scale: float
    body: StarBody


def dominated_candidate(
    density: DensitySpec,
    M: StarBody,
    K: StarBody,
    directions: np.ndarray,
    rules: Optional[RuleSet] = None,
    complex_sections: bool = False,
    steps: int = BISECTION_STEPS,
) -> DominatedPair:
    """Bisection for the largest s with mu(sK cap xi-perp) <= mu(M cap xi-perp) at all directions"""
    rules = rules or RuleSet()
    sweep = _complex_sweep if complex_sections else _real_sweep
    targets = [e.value for e in sweep(M, density, directions, rules)]

    def dominated(s: float) -> bool:
        values = sweep(scaled(K, s), density, directions, rules)
        return all(v.value <= t for v, t in zip(values, targets))

    lo, hi = 1.0, 1.0
    if dominated(1.0):
        while dominated(hi * 2.0):
            hi *= 2.0
            if hi > 2.0**30:
                raise InputDomainError("K stays dominated at every dilation")
        lo, hi = hi, hi * 2.0
    else:
        while not dominated(lo / 2.0):
            lo /= 2.0
            if lo < 2.0**-30:
                raise InputDomainError("no dilation of K is dominated by M")
        lo, hi = lo / 2.0, lo
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if dominated(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-9 * hi:
            break
    return DominatedPair(scale=lo, body=scaled(K, lo))


class SuitePair(BaseModel):
    index: int
    dim: int
    density: str
    K: str
    M: str
    scale: float
    domination: Domination
    ratio: Optional[Estimate]
    ratio_over_sqrt_n: Optional[float]
    applicable_bound: Optional[float]
    verdict: str


class SuiteReport(BaseModel):
    kind: str
    seed: int
    pairs: List[SuitePair]
    verified: int
    max_ratio_over_sqrt_n: Optional[float]
    all_hold: bool


def _suite_density(name: str, n: int) -> DensitySpec:
    if name == "cauchy":
        return cauchy(n, n + 1.0)
    return density_from_descriptor({"family": name, "dim": n})


def _random_convex_body(rng: np.random.Generator, n: int) -> StarBody:
    kind = rng.integers(0, 3)
    if kind == 0:
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0, 4.0, math.inf]))
        return lp_ball(n, p, rng.uniform(0.5, 2.0, n).tolist())
    if kind == 1:
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        a = q @ np.diag(rng.uniform(0.5, 2.0, n)) @ q.T
        return ellipsoid(0.5 * (a + a.T))
    return cube(n, float(rng.uniform(0.5, 1.5)))


def _random_complex_body(rng: np.random.Generator, m: int) -> StarBody:
    p = float(rng.choice([1.0, 2.0, 4.0, math.inf]))
    return scaled(complex_lp(m, p), float(rng.uniform(0.5, 2.0)))


def _suite(
    kind: str,
    densities: Sequence[str],
    dims: Sequence[int],
    pairs: int,
    seed: int,
    rules: RuleSet,
    n_dirs: Optional[int],
    complex_sections: bool,
) -> SuiteReport:
    rows = []
    for i in range(pairs):
        rng = np.random.default_rng([seed, i])
        dim = int(dims[i % len(dims)])
        name = densities[(i // len(dims)) % len(densities)]
        if complex_sections:
            big_n = 2 * dim
            density = _suite_density(name, big_n)
            M, K0 = _random_complex_body(rng, dim), _random_complex_body(rng, dim)
        else:
            big_n = dim
            density = _suite_density(name, big_n)
            M, K0 = _random_convex_body(rng, dim), _random_convex_body(rng, dim)
        directions = random_directions(big_n, n_dirs or default_directions(big_n), seed + i)
        pair = dominated_candidate(density, M, K0, directions, rules, complex_sections)
        check = complex_bp_check if complex_sections else bp_check
        report = check(density, pair.body, M, rules=rules, seed=seed + i, directions=directions)
        over = None if report.ratio is None else report.ratio.value / math.sqrt(big_n)
        rows.append(
            SuitePair(
                index=i,
                dim=big_n,
                density=name,
                K=K0.family.family,
                M=M.family.family,
                scale=pair.scale,
                domination=report.domination,
                ratio=report.ratio,
                ratio_over_sqrt_n=over,
                applicable_bound=report.applicable_bound,
                verdict=report.verdict,
            )
        )
        logger.info(
            "Suite pair finished",
            extra={"extra_fields": {"kind": kind, "index": i, "verdict": report.verdict}},
        )
    assessed = [r.ratio_over_sqrt_n for r in rows if r.ratio_over_sqrt_n is not None]
    return SuiteReport(
        kind=kind,
        seed=seed,
        pairs=rows,
        verified=sum(r.domination == "verified" for r in rows),
        max_ratio_over_sqrt_n=max(assessed) if assessed else None,
        all_hold=all(r.verdict != "violated" for r in rows),
    )


@timed
def bp_suite(
    densities: Sequence[str] = ("gaussian", "cauchy"),
    dims: Sequence[int] = (3, 4, 5),
    pairs: int = 100,
    seed: int = 0,
    rules: Optional[RuleSet] = None,
    n_dirs: Optional[int] = None,
) -> SuiteReport:
    """
    Seeded random (K, M) pairs of l_p balls, ellipsoids and cubes with constructed domination

    Each pair is swept over n_dirs directions, by default 200 for n <= 4 and 500 above.
    """
    rules = rules or RuleSet(seed=seed)
    return _suite("bp-suite", densities, dims, pairs, seed, rules, n_dirs, False)


@timed
def complex_bp_suite(
    densities: Sequence[str] = ("gaussian", "cauchy"),
    complex_dims: Sequence[int] = (2, 3),
    pairs: int = 25,
    seed: int = 0,
    rules: Optional[RuleSet] = None,
    n_dirs: Optional[int] = None,
) -> SuiteReport:
    """Seeded random pairs of dilated complex l_p balls in R^{2n}; n_dirs as in bp_suite"""
    rules = rules or RuleSet(seed=seed)
    return _suite("complex-bp-suite", densities, complex_dims, pairs, seed, rules, n_dirs, True)


class LemmaReport(BaseModel):
    n: int
    trials: int
    violations: int
    worst_gap: float


def _piecewise_moment(x: float, power: float, breaks: np.ndarray, values: np.ndarray) -> float:
    """int_0^x t^power alpha(t) dt for alpha = values[j] on [breaks[j], breaks[j+1])"""
    edges = np.append(breaks, math.inf)
    lo = np.minimum(edges[:-1], x)
    hi = np.minimum(edges[1:], x)
    return float(np.sum(values * (hi ** (power + 1) - lo ** (power + 1))) / (power + 1))


def lemma_sides(
    n: int,
    omega: float,
    a: float,
    b: float,
    breaks: np.ndarray,
    values: np.ndarray,
    complex_form: bool = False,
) -> Tuple[float, float]:
    """
    Both sides of (w/a^e) int_0^a t^{hi} alpha - w int_0^a t^{lo} alpha
    <= (w/a^e) int_0^b t^{hi} alpha - w int_0^b t^{lo} alpha

    Real form: (hi, lo, e, w) = (n-1, n-2, 1, omega); complex form: (2n-1, 2n-3, 2, omega^2).
    """
    if complex_form:
        hi, lo, e, w = 2 * n - 1, 2 * n - 3, 2, omega**2
    else:
        hi, lo, e, w = n - 1, n - 2, 1, omega
    breaks = np.asarray(breaks, dtype=float)
    values = np.asarray(values, dtype=float)

    def side(x: float) -> float:
        return (w / a**e) * _piecewise_moment(x, hi, breaks, values) - w * _piecewise_moment(
            x, lo, breaks, values
        )

    return side(a), side(b)


def _lemma_property(n: int, trials: int, seed: int, complex_form: bool) -> LemmaReport:
    if n < 2:
        raise InputDomainError(f"lemma property needs n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    violations, worst = 0, 0.0
    for _ in range(trials):
        omega = float(rng.uniform(0.1, 5.0))
        a, b = (float(v) for v in rng.uniform(0.05, 3.0, 2))
        pieces = int(rng.integers(1, 7))
        breaks = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 1.2 * max(a, b), pieces - 1))])
        values = rng.uniform(0.0, 2.0, pieces) * (rng.uniform(size=pieces) > 0.2)
        left, right = lemma_sides(n, omega, a, b, breaks, values, complex_form)
        gap = (left - right) / max(1.0, abs(left), abs(right))
        worst = max(worst, gap)
        if gap > LEMMA_TOL:
            violations += 1
    return LemmaReport(n=n, trials=trials, violations=violations, worst_gap=worst)


def lemma_elementary_property(n: int, trials: int = 10_000, seed: int = 0) -> LemmaReport:
    """Exact piecewise-constant trials of the real elementary lemma"""
    return _lemma_property(n, trials, seed, complex_form=False)


def lemma_elemcomp_property(n: int, trials: int = 10_000, seed: int = 0) -> LemmaReport:
    """Exact piecewise-constant trials of the complex elementary lemma"""
    return _lemma_property(n, trials, seed, complex_form=True)


def cn_constant(n: int) -> float:
    """
    c_n = vol_n(B_2^n)^{(n-1)/n} / vol_{n-1}(B_2^{n-1}) in log-gamma form

    Raises:
        InputDomainError: n < 2
        BoundViolationError: c_n >= 1
    """
    if n < 2:
        raise InputDomainError(f"c_n needs n >= 2, got {n}")

    def log_volume(k: int) -> float:
        return 0.5 * k * math.log(math.pi) - float(gammaln(0.5 * k + 1.0))

    c = math.exp((n - 1) / n * log_volume(n) - log_volume(n - 1))
    if c >= 1.0:
        raise BoundViolationError(f"c_{n} = {c} is not below 1")
    return c


class HyperplaneStudy(BaseModel):
    lhs: Estimate
    max_sec: Estimate
    max_xi: List[float]
    voln: Estimate
    ratio_sqrtn: float
    bound_sqrtn: float
    holds: bool
    ratio_bob: float
    bob_assertable: bool
    quarter_power_constant: float


@timed
def hyperplane_study(
    density: DensitySpec,
    K: StarBody,
    rules: Optional[RuleSet] = None,
    seed: int = 0,
    n_dirs: int = 64,
) -> HyperplaneStudy:
    """
    mu(K) <= sqrt(n) (n/(n-1)) c_n max_xi mu(K cap xi-perp) vol_n(K)^{1/n} for every density,
    plus the empirical constant of max_sec / (mu(K)^{(n-1)/n} f(0)^{1/n})
    """
    rules = rules or RuleSet(seed=seed)
    n = K.dim
    if not K.convex:
        raise ConfigError(f"{K.family.family} body K must be convex")
    mu = measure_of_body(SectionQuery(body=K, density=density, rules=rules))
    best = max_section(density, K, rules, n_dirs=n_dirs, seed=seed)
    vol = volume_of_body(K, rules.sphere(n))
    denominator = best.value.value * vol.value ** (1.0 / n)
    value = mu.value / denominator
    rel = math.hypot(mu.relative_err, best.value.relative_err, vol.relative_err / n)
    bound = math.sqrt(n) * (n / (n - 1)) * cn_constant(n)
    f0 = density.f0
    ratio_bob = best.value.value / (mu.value ** ((n - 1) / n) * f0 ** (1.0 / n))
    return HyperplaneStudy(
        lhs=mu,
        max_sec=best.value,
        max_xi=best.xi,
        voln=vol,
        ratio_sqrtn=value,
        bound_sqrtn=bound,
        holds=value <= bound * (1.0 + 3.0 * rel) + 1e-12,
        ratio_bob=ratio_bob,
        bob_assertable=density.is_convex_measure,
        quarter_power_constant=value / n**0.25,
    )


class CounterexampleRow(BaseModel):
    t: float
    section: Estimate
    mu: Estimate
    ratio_bob: float


class CounterexampleScan(BaseModel):
    n: int
    p: float
    rows: List[CounterexampleRow]
    strictly_decreasing: bool
    observed_slope: Optional[float]
    asymptotic_slope: float


@timed
def counterexample_scan(
    n: int, p: float, t_grid: Sequence[float], rules: Optional[RuleSet] = None
) -> CounterexampleScan:
    """
    Section-to-measure ratio of tB_2^n under f(x) = 1/(1+|x|^p) along a radius grid;
    it decays like t^{-p/n}, so no constant works for general measures

    Raises:
        InputDomainError: p outside (0, n) or a non-increasing grid
    """
    if not 0.0 < p < n:
        raise InputDomainError(f"counterexample needs 0 < p < n, got p={p}, n={n}")
    grid = [float(t) for t in t_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] <= 0.0:
        raise InputDomainError("t grid must be positive and strictly increasing")
    rules = rules or RuleSet()
    density = cauchy(n, p)
    axis = np.zeros(n)
    axis[0] = 1.0
    f0 = density.f0

    rows = []
    for t in grid:
        body = euclidean_ball(n, t)
        section = section_measures(body, density, axis[None], rules)[0]
        mu = measure_of_body(SectionQuery(body=body, density=density, rules=rules))
        rows.append(
            CounterexampleRow(
                t=t,
                section=section,
                mu=mu,
                ratio_bob=section.value / (mu.value ** ((n - 1) / n) * f0 ** (1.0 / n)),
            )
        )

    slope = None
    if len(rows) >= 2:
        a, b = rows[-2], rows[-1]
        slope = math.log(b.ratio_bob / a.ratio_bob) / math.log(b.t / a.t)
    return CounterexampleScan(
        n=n,
        p=p,
        rows=rows,
        strictly_decreasing=all(b.ratio_bob < a.ratio_bob for a, b in zip(rows, rows[1:])),
        observed_slope=slope,
        asymptotic_slope=-p / n,
    )


class ConstantSectionBody(BaseModel):
    n: int
    Lambda: float
    admissible: bool
    admissibility_bound: Optional[float]
    t: Optional[float] = None
    constant: float
    mu: Optional[Estimate] = None
    voln: Optional[Estimate] = None
    hyperplane_holds: Optional[bool] = None


@timed
def constant_section_body(
    density: DensitySpec,
    Lambda: float,
    n: Optional[int] = None,
    rules: Optional[RuleSet] = None,
    tol: float = 1e-10,
) -> ConstantSectionBody:
    """
    Ball tB_2^n all of whose central sections have measure Lambda

    Solves |S^{n-2}| int_0^t r^{n-2} f(r) dr = Lambda by bisection and checks
    mu(K) <= C Lambda vol_n(K)^{1/n} with C = |S^{n-1}|^{(n-1)/n} n^{1/n} / |S^{n-2}|.

    Raises:
        InputDomainError: The density is not rotation-invariant or Lambda <= 0
    """
    n = n or density.dim
    if n != density.dim:
        raise InputDomainError(f"density lives in R^{density.dim}, not R^{n}")
    if not density.flags.rotation_invariant:
        raise InputDomainError("constant-section bodies need a rotation-invariant density")
    if not Lambda > 0.0:
        raise InputDomainError(f"Lambda must be positive, got {Lambda}")
    rules = rules or RuleSet()
    axis = np.zeros(n)
    axis[0] = 1.0

    def profile(r: np.ndarray) -> np.ndarray:
        return density(np.asarray(r)[..., None] * axis)

    sub_area = sphere_area(n - 1)
    constant = sphere_area(n) ** ((n - 1) / n) * n ** (1.0 / n) / sub_area

    bound = None
    try:
        cutoff = density.tail_radius(n - 2, tol)
    except InputDomainError:
        cutoff = None
    if cutoff is not None:
        bound = sub_area * radial_integral(profile, n - 2, math.inf, tol, tail_radius=cutoff).value
    if bound is not None and Lambda > bound:
        logger.info(
            "Inadmissible section value",
            extra={"extra_fields": {"Lambda": Lambda, "bound": bound}},
        )
        return ConstantSectionBody(
            n=n, Lambda=Lambda, admissible=False, admissibility_bound=bound, constant=constant
        )

    target = Lambda / sub_area

    def moment(t: float) -> float:
        return radial_integral(profile, n - 2, t, tol * 1e-3).value

    lo, hi = 0.0, 1.0
    for _ in range(200):
        if moment(hi) >= target:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise QuadratureError("could not bracket the section radius", {"target": target})
    while hi - lo > 1e-10 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if moment(mid) < target:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)

    body = euclidean_ball(n, t)
    mu = measure_of_body(SectionQuery(body=body, density=density, rules=rules))
    vol = volume_of_body(body, rules.sphere(n))
    rhs = constant * Lambda * vol.value ** (1.0 / n)
    return ConstantSectionBody(
        n=n,
        Lambda=Lambda,
        admissible=True,
        admissibility_bound=bound,
        t=t,
        constant=constant,
        mu=mu,
        voln=vol,
        hyperplane_holds=mu.value <= rhs * (1.0 + 3.0 * mu.relative_err) + 1e-12,
    )


class PropertySuiteReport(BaseModel):
    lemma: List[LemmaReport]
    lemma_complex: List[LemmaReport]
    selfduality: List[Estimate]
    section_identity: List[Estimate]
    norm_axioms: Dict[str, int]
    passed: bool


@timed
def property_suite(
    trials: int = 10_000, seed: int = 0, rules: Optional[RuleSet] = None
) -> PropertySuiteReport:
    """Lemma suites, Radon self-duality, K_f section identity and K_f norm axioms"""
    rules = rules or RuleSet(seed=seed)
    lemma = [lemma_elementary_property(n, trials, seed + n) for n in (2, 3, 5)]
    lemma_complex = [lemma_elemcomp_property(n, trials, seed + n) for n in (2, 3)]

    rng = np.random.default_rng(seed)
    pairs = [
        (SphereFunction.constant(3, 1.0), SphereFunction.constant(3, 1.0)),
        (
            SphereFunction.from_callable(3, lambda x: x[..., 0] ** 2),
            SphereFunction.from_callable(3, lambda x: x[..., 2] ** 2),
        ),
        (
            SphereFunction.body_power(cube(3), 2.0),
            SphereFunction.from_callable(3, lambda x: 1.0 + x[..., 1] ** 4),
        ),
    ]
    selfduality = [selfduality_residual(f, g, rules) for f, g in pairs]

    identity = []
    for body in (euclidean_ball(3), cube(3), ellipsoid([2.0, 1.0, 0.5])):
        xi = random_directions(3, 1, int(rng.integers(0, 2**31)))[0]
        identity.append(section_identity_residual(body, gaussian(3), xi, rules))

    axioms = {}
    for name, body in (("cube", cube(3)), ("cross", lp_ball(3, 1.0))):
        report = verify_norm_axioms(ball_body(body, gaussian(3), rules.radial()), 1000, seed)
        axioms[name] = report.triangle_violations

    passed = (
        all(r.violations == 0 for r in lemma + lemma_complex)
        and all(e.compatible_with_zero() for e in selfduality + identity)
        and all(v == 0 for v in axioms.values())
    )
    return PropertySuiteReport(
        lemma=lemma,
        lemma_complex=lemma_complex,
        selfduality=selfduality,
        section_identity=identity,
        norm_axioms=axioms,
        passed=passed,
    )
