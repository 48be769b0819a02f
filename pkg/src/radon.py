"""
Spherical Radon (Funk) transform and intersection bodies

Rf(xi) integrates f over the great subsphere S^{n-1} cap xi-perp. On zonal
functions the transform acts diagonally on Legendre/Gegenbauer components
(Funk-Hecke), which gives an exact inversion for bodies of revolution in R^3
and a positivity certificate for intersection-body membership.
"""

import math
import threading
from collections import OrderedDict
from typing import Callable, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.special import eval_gegenbauer, eval_legendre, roots_legendre

from .config import logger, timed
from .errors import ConditioningError, ConfigError, InputDomainError, ResolutionError
from .geometry import IntersectionBodyFamily, StarBody
from .quadrature import (
    Estimate,
    RuleSet,
    complement_bases,
    reduce_rule,
    require_unit,
    residual,
    sphere_area,
)
from .sections import CHUNK, parallel_map, section_volumes

MULTIPLIER_FLOOR = 1e-12
GRID_POINTS = 2001


class SphereFunction:
    """
    Function on S^{n-1} given by a vectorized oracle

    Zonal functions also carry their axis and profile t -> phi(<theta, axis>);
    Legendre series additionally keep their even-degree coefficients.
    """

    def __init__(
        self,
        dim: int,
        fn: Callable[[np.ndarray], np.ndarray],
        even: bool = True,
        axis: Optional[np.ndarray] = None,
        profile: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        legendre: Optional[List[float]] = None,
    ):
        self.dim = dim
        self._fn = fn
        self.even = even
        self.axis = axis
        self.profile = profile
        self.legendre = legendre

    @property
    def is_zonal(self) -> bool:
        return self.axis is not None and self.profile is not None

    def __call__(self, thetas: np.ndarray) -> np.ndarray:
        return np.asarray(self._fn(np.asarray(thetas, dtype=float)), dtype=float)

    @classmethod
    def constant(cls, n: int, c: float) -> "SphereFunction":
        axis = np.zeros(n)
        axis[-1] = 1.0
        return cls(
            n,
            lambda x: np.full(x.shape[:-1], float(c)),
            axis=axis,
            profile=lambda t: np.full(np.shape(t), float(c)),
            legendre=[float(c)],
        )

    @classmethod
    def from_callable(
        cls, n: int, fn: Callable[[np.ndarray], np.ndarray], even: bool = True
    ) -> "SphereFunction":
        return cls(n, fn, even=even)

    @classmethod
    def zonal(
        cls, axis: np.ndarray, profile: Callable[[np.ndarray], np.ndarray], even: bool = True
    ) -> "SphereFunction":
        e = require_unit(axis)
        return cls(
            e.shape[0],
            lambda x: profile(np.clip(x @ e, -1.0, 1.0)),
            even=even,
            axis=e,
            profile=profile,
        )

    @classmethod
    def legendre_series(cls, axis: np.ndarray, coeffs: Sequence[float]) -> "SphereFunction":
        """sum_j coeffs[j] * P_{2j}(<theta, axis>)"""
        coeffs = [float(c) for c in coeffs]

        def profile(t: np.ndarray) -> np.ndarray:
            t = np.asarray(t, dtype=float)
            return sum(c * eval_legendre(2 * j, t) for j, c in enumerate(coeffs))

        fn = cls.zonal(axis, profile)
        fn.legendre = coeffs
        return fn

    @classmethod
    def body_power(cls, body: StarBody, power: float) -> "SphereFunction":
        """theta -> ||theta||_K^{-power} = rho_K(theta)^power"""
        return cls(body.dim, lambda x: body.radii(x) ** power)


def radon_batch(
    f: SphereFunction, xis: np.ndarray, rules: Optional[RuleSet] = None
) -> List[Estimate]:
    """Rf at many directions, in input order"""
    rules = rules or RuleSet()
    xis = require_unit(np.atleast_2d(xis))
    n = f.dim
    if xis.shape[1] != n:
        raise InputDomainError(f"directions must live in R^{n}")
    rule = rules.subrule(n - 1)

    def block(start: int) -> List[Estimate]:
        bases = complement_bases(xis[start : start + CHUNK, None, :])

        def evaluate(nodes: np.ndarray) -> np.ndarray:
            mapped = np.einsum("im,bmn->bin", nodes, bases)
            return f(mapped.reshape(-1, n)).reshape(mapped.shape[:2])

        values = evaluate(rule.nodes)
        coarse_values = None
        per_direction = rule.size
        if rule.method == "product_gauss" and rule.coarse is not None:
            coarse_values = evaluate(rule.coarse.nodes)
            per_direction += rule.coarse.size
        totals, errs = reduce_rule(values, rule, coarse_values)
        return [
            Estimate(value=float(t), err=float(e), n_evals=per_direction)
            for t, e in zip(totals, errs)
        ]

    parts = parallel_map(block, list(range(0, xis.shape[0], CHUNK)))
    return [estimate for part in parts for estimate in part]


def radon(f: SphereFunction, xi: np.ndarray, rules: Optional[RuleSet] = None) -> Estimate:
    """Rf(xi) = int_{S^{n-1} cap xi-perp} f"""
    return radon_batch(f, np.asarray(xi, dtype=float)[None], rules)[0]


def _pairing(outer: SphereFunction, inner: SphereFunction, rules: RuleSet) -> Estimate:
    """int_{S^{n-1}} R(inner)(xi) outer(xi) dxi"""
    rule = rules.sphere(outer.dim)
    transformed = radon_batch(inner, rule.nodes, rules)
    weights_g = outer(rule.nodes)
    values = np.array([t.value for t in transformed]) * weights_g
    inner_errs = np.array([t.err for t in transformed])
    inner_err = float(np.sum(inner_errs * np.abs(weights_g) * rule.weights))
    coarse_values = None
    n_evals = sum(t.n_evals for t in transformed) + rule.size
    if rule.method == "product_gauss" and rule.coarse is not None:
        coarse = radon_batch(inner, rule.coarse.nodes, rules)
        coarse_values = np.array([t.value for t in coarse]) * outer(rule.coarse.nodes)
        n_evals += sum(t.n_evals for t in coarse)
    total, err = reduce_rule(values, rule, coarse_values)
    return Estimate(value=float(total), err=float(err) + inner_err, n_evals=n_evals)


@timed
def selfduality_residual(
    f: SphereFunction, g: SphereFunction, rules: Optional[RuleSet] = None
) -> Estimate:
    """|int Rf g - int f Rg| with combined error; compatible with zero for every pair"""
    rules = rules or RuleSet()
    if f.dim != g.dim:
        raise InputDomainError("self-duality needs functions on the same sphere")
    return residual(_pairing(g, f, rules), _pairing(f, g, rules))


def funk_hecke_multiplier(k: int, n: int) -> float:
    """
    Eigenvalue of R on degree-k spherical harmonics of S^{n-1}

    |S^{n-2}| times the normalized Gegenbauer polynomial C_k^{(n-2)/2}(t)/C_k^{(n-2)/2}(1)
    at t = 0 (Legendre for n = 3, Chebyshev for n = 2). Zero for odd k.
    """
    if n < 2 or k < 0:
        raise InputDomainError(f"multiplier needs n >= 2 and k >= 0, got n={n}, k={k}")
    if k % 2:
        return 0.0
    if n == 2:
        return 2.0 * math.cos(k * math.pi / 2.0)
    if n == 3:
        return sphere_area(2) * float(eval_legendre(k, 0.0))
    lam = (n - 2) / 2.0
    return sphere_area(n - 1) * float(eval_gegenbauer(k, lam, 0.0) / eval_gegenbauer(k, lam, 1.0))


def zonal_radon_forward(g: SphereFunction, n: int = 3) -> SphereFunction:
    """R g for a zonal Legendre series g on S^2: coefficient of P_{2j} times m_{2j}"""
    if n != 3:
        raise ConfigError("zonal transforms are implemented on S^2 only")
    if g.legendre is None or g.axis is None:
        raise InputDomainError("forward zonal transform needs a Legendre series")
    coeffs = [c * funk_hecke_multiplier(2 * j, 3) for j, c in enumerate(g.legendre)]
    return SphereFunction.legendre_series(g.axis, coeffs)


class ZonalCertificate(BaseModel):
    """Recovered zonal g with R g = h, and the positivity verdict for g"""

    degrees: List[int]
    coeffs: List[float]
    multipliers: List[float]
    min_g: float
    residual: float
    verdict: Literal["certified-positive", "certified-negative", "inconclusive"]


def zonal_radon_inverse(
    h: SphereFunction, degree_cut: int, n: int = 3, tol: float = 1e-8
) -> ZonalCertificate:
    """
    Invert R on an even zonal function of S^2

    Legendre coefficients of h's profile come from Gauss-Legendre quadrature on
    [-1, 1] with 4 * degree_cut nodes; each even-degree coefficient is divided by
    its Funk-Hecke multiplier 2 pi P_k(0).

    Raises:
        ConfigError: n != 3
        InputDomainError: h is not zonal
        ResolutionError: Truncated series misses h by more than tol on the grid
        ConditioningError: A multiplier vanishes
    """
    if n != 3:
        raise ConfigError("zonal Radon inversion is implemented for n = 3 only")
    if not h.is_zonal:
        raise InputDomainError("zonal inversion needs a zonal sphere function")
    degree_cut = max(0, int(degree_cut))
    degrees = list(range(0, degree_cut + 1, 2))
    nodes, weights = roots_legendre(max(4 * degree_cut, 8))
    phi = np.asarray(h.profile(nodes), dtype=float)

    h_coeffs, g_coeffs, multipliers = [], [], []
    for k in degrees:
        a_k = (2 * k + 1) / 2.0 * float(np.sum(weights * phi * eval_legendre(k, nodes)))
        m_k = funk_hecke_multiplier(k, 3)
        if abs(m_k) < MULTIPLIER_FLOOR:
            raise ConditioningError(f"Funk-Hecke multiplier of degree {k} vanishes ({m_k:g})")
        h_coeffs.append(a_k)
        multipliers.append(m_k)
        g_coeffs.append(a_k / m_k)

    grid = np.linspace(-1.0, 1.0, GRID_POINTS)
    basis = np.stack([eval_legendre(k, grid) for k in degrees])
    truncation = float(np.max(np.abs(np.asarray(h_coeffs) @ basis - h.profile(grid))))
    if truncation > tol:
        raise ResolutionError(
            f"degree {degree_cut} Legendre series misses h by {truncation:.3e} > {tol:g}"
        )
    min_g = float(np.min(np.asarray(g_coeffs) @ basis))

    if min_g > 3.0 * truncation:
        verdict = "certified-positive"
    elif min_g < -3.0 * truncation:
        verdict = "certified-negative"
    else:
        verdict = "inconclusive"

    logger.info(
        "Zonal inversion",
        extra={
            "extra_fields": {"degree_cut": degree_cut, "min_g": min_g, "verdict": verdict}
        },
    )
    return ZonalCertificate(
        degrees=degrees,
        coeffs=g_coeffs,
        multipliers=multipliers,
        min_g=min_g,
        residual=truncation,
        verdict=verdict,
    )


def certify_zonal_body(
    body: StarBody, degree_cut: Optional[int] = None, tol: float = 1e-8
) -> ZonalCertificate:
    """
    Positivity certificate for a body of revolution in R^3: invert R on its
    radial profile rho_K = ||.||_K^{-1}

    Bodies built from Legendre coefficients use their own degree by default.
    """
    if body.dim != 3 or body.profile is None:
        raise InputDomainError("zonal certificates need a body of revolution in R^3")
    axis = np.asarray(body.family.axis, dtype=float)
    legendre = getattr(body.family, "legendre", None)
    if degree_cut is None:
        degree_cut = 2 * (len(legendre) - 1) if legendre else 16
    h = SphereFunction.zonal(axis, body.profile)
    return zonal_radon_inverse(h, degree_cut, n=3, tol=tol)


def intersection_body_of(
    L: StarBody, rules: Optional[RuleSet] = None, cache_size: int = 4096
) -> StarBody:
    """
    Intersection body IL with rho_{IL}(xi) = vol_{n-1}(L cap xi-perp)

    The radial oracle is evaluated lazily and memoized per direction (rounded
    to 12 decimals) behind a lock; the memo keeps the cache_size most recently
    used directions.
    """
    if cache_size < 1:
        raise InputDomainError(f"cache_size must be positive, got {cache_size}")
    rules = rules or RuleSet()
    cache: "OrderedDict[bytes, float]" = OrderedDict()
    lock = threading.Lock()

    def key(theta: np.ndarray) -> bytes:
        return (np.round(theta, 12) + 0.0).tobytes()

    def fn(thetas: np.ndarray) -> np.ndarray:
        flat = np.asarray(thetas, dtype=float).reshape(-1, L.dim)
        keys = [key(t) for t in flat]
        values = np.empty(len(keys))
        missing = []
        with lock:
            for i, k in enumerate(keys):
                if k in cache:
                    cache.move_to_end(k)
                    values[i] = cache[k]
                else:
                    missing.append(i)
        if missing:
            directions = flat[missing]
            directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
            computed = section_volumes(L, directions, rules)
            with lock:
                for i, estimate in zip(missing, computed):
                    values[i] = estimate.value
                    cache[keys[i]] = estimate.value
                    cache.move_to_end(keys[i])
                while len(cache) > cache_size:
                    cache.popitem(last=False)
        return values.reshape(np.shape(thetas)[:-1])

    return StarBody(
        L.dim,
        fn,
        IntersectionBodyFamily(dim=L.dim, base=L.family),
        r_theta_invariant=L.r_theta_invariant,
        convex=L.convex,
    )
