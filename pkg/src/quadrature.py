"""
Seeded quadrature on spheres, great subspheres and radial intervals

Every integral estimate produced by the laboratory flows through this module.
Rules are pure functions of (dimension, method, size, seed): they are memoized,
their arrays are read-only, and reductions run in a fixed index order so that a
fixed seed always yields bit-identical estimates.
"""

import math
from functools import lru_cache
from typing import Callable, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import roots_gegenbauer, roots_legendre

from .config import LabConfig
from .errors import ConfigError, InputDomainError, QuadratureError

SphereMethod = Literal["monte_carlo", "antithetic_mc", "product_gauss", "point_pair"]
SubsphereMethod = Literal["auto", "monte_carlo", "antithetic_mc", "product_gauss"]

UNIT_TOL = 1e-12


def sphere_area(n: int) -> float:
    """Surface area |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2) of the unit sphere in R^n"""
    return float(2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0))


def ball_volume(n: int) -> float:
    """Volume of the unit Euclidean ball in R^n"""
    return sphere_area(n) / n


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


class Estimate(BaseModel):
    """Numerical value with error estimate and node count"""

    model_config = ConfigDict(frozen=True)

    value: float
    err: float = Field(ge=0.0)
    n_evals: int = Field(ge=0)

    @property
    def relative_err(self) -> float:
        if self.value == 0.0:
            return 0.0 if self.err == 0.0 else math.inf
        return self.err / abs(self.value)

    def compatible_with_zero(self, k: float = 3.0) -> bool:
        """True when |value| <= k * err (up to rounding)"""
        return abs(self.value) <= k * self.err + 64 * np.finfo(float).eps * max(
            1.0, abs(self.value)
        )

    def scaled(self, factor: float) -> "Estimate":
        return Estimate(
            value=float(factor * self.value),
            err=float(abs(factor) * self.err),
            n_evals=self.n_evals,
        )


def residual(a: Estimate, b: Estimate) -> Estimate:
    """|a - b| with the two errors combined in quadrature"""
    return Estimate(
        value=float(abs(a.value - b.value)),
        err=float(math.hypot(a.err, b.err)),
        n_evals=a.n_evals + b.n_evals,
    )


def ratio(a: Estimate, b: Estimate) -> Estimate:
    """a / b with first-order relative error propagation"""
    if b.value == 0.0:
        raise InputDomainError("ratio with a vanishing denominator")
    value = a.value / b.value
    rel = math.hypot(a.relative_err, b.relative_err)
    return Estimate(value=float(value), err=float(abs(value) * rel), n_evals=a.n_evals + b.n_evals)


class SphereRule(BaseModel):
    """Node-weight set on S^{n-1} (n = dim)"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    method: SphereMethod
    seed: Optional[int] = None
    coarse: Optional["SphereRule"] = None

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])


SphereRule.model_rebuild()


def _point_pair_rule() -> SphereRule:
    # S^0 = {+1, -1}, counting measure
    return SphereRule(
        dim=1,
        nodes=_frozen(np.array([[1.0], [-1.0]])),
        weights=_frozen(np.ones(2)),
        method="point_pair",
    )


def _product_nodes(n: int, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """Product Gauss rule: equispaced circle, Gegenbauer levels for each extra dimension"""
    if n == 2:
        angles = 2.0 * np.pi * np.arange(size) / size
        nodes = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        return nodes, np.full(size, 2.0 * np.pi / size)

    levels = max(2, size // 2)
    t, wt = roots_gegenbauer(levels, (n - 2) / 2.0)
    inner, winner = _product_nodes(n - 1, size)
    stretch = np.sqrt(np.clip(1.0 - t**2, 0.0, None))
    nodes = np.concatenate(
        [
            (stretch[:, None, None] * inner[None, :, :]).reshape(-1, n - 1),
            np.repeat(t, inner.shape[0])[:, None],
        ],
        axis=1,
    )
    weights = (wt[:, None] * winner[None, :]).ravel()
    return nodes, weights


@lru_cache(maxsize=64)
def sphere_rule(n: int, method: str, size: int, seed: Optional[int] = None) -> SphereRule:
    """
    Build a deterministic quadrature rule on S^{n-1}

    Args:
        n: Ambient dimension (n >= 2)
        method: monte_carlo, antithetic_mc or product_gauss
        size: Node count (MC methods) or azimuthal node count (product_gauss)
        seed: Seed of the MC stream

    Returns:
        SphereRule whose weights sum to |S^{n-1}|

    Raises:
        ConfigError: Unsupported method/dimension/size combination
    """
    if n < 2:
        raise ConfigError(f"sphere rules need n >= 2, got {n}")
    if size < 2:
        raise ConfigError(f"sphere rules need at least 2 nodes, got {size}")

    area = sphere_area(n)

    if method in ("monte_carlo", "antithetic_mc"):
        rng = np.random.default_rng(seed)
        if method == "antithetic_mc":
            if size % 2:
                raise ConfigError(f"antithetic rules need an even size, got {size}")
            half = rng.standard_normal((size // 2, n))
            half /= np.linalg.norm(half, axis=1, keepdims=True)
            nodes = np.concatenate([half, -half], axis=0)
        else:
            nodes = rng.standard_normal((size, n))
            nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
        weights = np.full(size, area / size)
        return SphereRule(
            dim=n, nodes=_frozen(nodes), weights=_frozen(weights), method=method, seed=seed
        )

    if method == "product_gauss":
        if size % 2:
            raise ConfigError(f"product rules need an even azimuthal size, got {size}")
        nodes, weights = _product_nodes(n, size)
        weights = weights * (area / weights.sum())
        coarse = None
        if size >= 4 and (size // 2) % 2 == 0:
            coarse = sphere_rule(n, method, size // 2, seed)
        return SphereRule(
            dim=n,
            nodes=_frozen(nodes),
            weights=_frozen(weights),
            method=method,
            seed=seed,
            coarse=coarse,
        )

    raise ConfigError(f"unsupported sphere rule method: {method}")


def reduce_rule(
    values: np.ndarray, rule: SphereRule, coarse_values: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weighted sums and error estimates along the last axis of values

    MC rules report the standard error of the sample mean (pair means for
    antithetic rules); product rules report the gap to their coarse rule.
    """
    values = np.asarray(values, dtype=float)
    area = float(rule.weights.sum())
    if rule.method == "antithetic_mc":
        # pair sums first: odd integrands cancel exactly
        half = values.shape[-1] // 2
        total = np.sum((values[..., :half] + values[..., half:]) * rule.weights[:half], axis=-1)
    else:
        total = np.sum(values * rule.weights, axis=-1)

    if rule.method == "point_pair":
        err = np.zeros_like(total)
    elif rule.method == "product_gauss":
        if coarse_values is None or rule.coarse is None:
            err = np.zeros_like(total)
        else:
            coarse_values = np.asarray(coarse_values, dtype=float)
            coarse_total = np.sum(coarse_values * rule.coarse.weights, axis=-1)
            err = np.abs(total - coarse_total)
    else:
        samples = values
        if rule.method == "antithetic_mc":
            half = values.shape[-1] // 2
            samples = 0.5 * (values[..., :half] + values[..., half:])
        count = samples.shape[-1]
        if count < 2:
            err = np.zeros_like(total)
        else:
            # shifting by the first sample keeps constant integrands at exactly zero spread
            shifted = samples - samples[..., :1]
            err = area * np.std(shifted, axis=-1, ddof=1) / math.sqrt(count)
    return total, err


def _check_values(values: np.ndarray, expected: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (expected,):
        raise QuadratureError(
            f"oracle returned shape {values.shape}, expected ({expected},)",
            {"expected": expected},
        )
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise QuadratureError(
            f"oracle returned a non-finite value at node {int(bad[0])}",
            {"node_index": int(bad[0]), "bad_nodes": int(bad.size)},
        )
    return values


def integrate_sphere(f: Callable[[np.ndarray], np.ndarray], rule: SphereRule) -> Estimate:
    """
    Integrate a vectorized sphere oracle against a rule

    Args:
        f: Oracle mapping an (N, n) array of unit vectors to N values
        rule: Quadrature rule

    Returns:
        Estimate of the integral over the sphere
    """
    values = _check_values(f(rule.nodes), rule.size)
    n_evals = rule.size
    coarse_values = None
    if rule.method == "product_gauss" and rule.coarse is not None:
        coarse_values = _check_values(f(rule.coarse.nodes), rule.coarse.size)
        n_evals += rule.coarse.size
    total, err = reduce_rule(values, rule, coarse_values)
    return Estimate(value=float(total), err=float(err), n_evals=n_evals)


def complement_bases(frames: np.ndarray) -> np.ndarray:
    """
    Orthonormal complements of a batch of orthonormal frames

    Deterministic Gram-Schmidt over the fixed candidate order e_1, ..., e_n
    (two passes per candidate). A frame and its negative yield the same basis.

    Args:
        frames: (B, k, n) array of orthonormal rows

    Returns:
        (B, n - k, n) array of orthonormal rows orthogonal to each frame
    """
    frames = np.asarray(frames, dtype=float)
    batch, k, n = frames.shape
    basis = np.zeros((batch, n, n))
    basis[:, :k] = frames
    count = np.full(batch, k)
    rows = np.arange(batch)

    for i in range(n):
        v = np.zeros((batch, n))
        v[:, i] = 1.0
        for _ in range(2):
            coeffs = np.einsum("bjn,bn->bj", basis, v)
            v = v - np.einsum("bj,bjn->bn", coeffs, basis)
        norm = np.linalg.norm(v, axis=1)
        accept = (norm > 1e-6) & (count < n)
        idx = rows[accept]
        basis[idx, count[idx]] = v[idx] / norm[idx, None]
        count[accept] += 1

    if np.any(count < n):
        raise InputDomainError("frame vectors are not linearly independent")
    return basis[:, k:]


def orthonormal_complement(xi: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the hyperplane orthogonal to a unit vector"""
    xi = np.asarray(xi, dtype=float)
    return complement_bases(xi[None, None, :])[0]


def require_unit(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    norms = np.linalg.norm(xi, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise InputDomainError(f"direction must be a unit vector (|xi| = {np.max(norms):.15g})")
    return xi


class SubsphereRule(BaseModel):
    """Rule on S^{n-1} cap xi-perp, obtained by embedding a rule on S^{n-2}"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xi: np.ndarray
    basis: np.ndarray
    base: SphereRule

    @property
    def nodes(self) -> np.ndarray:
        return self.base.nodes @ self.basis

    @property
    def weights(self) -> np.ndarray:
        return self.base.weights

    @property
    def coarse_nodes(self) -> Optional[np.ndarray]:
        if self.base.coarse is None:
            return None
        return self.base.coarse.nodes @ self.basis


def subsphere_rule(xi: np.ndarray, base: SphereRule) -> SubsphereRule:
    """Map a rule on S^{n-2} into the great subsphere orthogonal to xi"""
    xi = require_unit(xi)
    if base.dim != xi.shape[0] - 1:
        raise ConfigError(f"base rule lives on S^{base.dim - 1}, need S^{xi.shape[0] - 2}")
    return SubsphereRule(xi=_frozen(xi), basis=_frozen(orthonormal_complement(xi)), base=base)


def integrate_subsphere(f: Callable[[np.ndarray], np.ndarray], rule: SubsphereRule) -> Estimate:
    """Integrate a vectorized oracle over a great subsphere"""
    values = _check_values(f(rule.nodes), rule.base.size)
    n_evals = rule.base.size
    coarse_values = None
    if rule.coarse_nodes is not None and rule.base.method == "product_gauss":
        coarse_values = _check_values(f(rule.coarse_nodes), rule.base.coarse.size)
        n_evals += rule.base.coarse.size
    total, err = reduce_rule(values, rule.base, coarse_values)
    return Estimate(value=float(total), err=float(err), n_evals=n_evals)


@lru_cache(maxsize=32)
def _gauss_legendre_unit(order: int) -> Tuple[np.ndarray, np.ndarray]:
    t, w = roots_legendre(order)
    return _frozen(0.5 * (t + 1.0)), _frozen(0.5 * w)


class RadialRule(BaseModel):
    """Composite Gauss-Legendre panels on [0, R] refined by panel doubling"""

    model_config = ConfigDict(frozen=True)

    order: int = Field(default_factory=lambda: LabConfig.RADIAL_ORDER, ge=2)
    tol: float = Field(default_factory=lambda: LabConfig.RADIAL_TOL, gt=0.0)
    max_level: int = Field(default=12, ge=1)

    def integrate(
        self,
        g: Callable[[np.ndarray, np.ndarray], np.ndarray],
        upper: np.ndarray,
        k: float,
    ) -> Tuple[np.ndarray, np.ndarray, int]:
        """
        Integrate r^k g_j(r) over [0, upper_j] for a batch of integrands

        Args:
            g: Oracle g(rows, r) returning g_j(r) for the given row indices and
               an (len(rows), m) array of radii
            upper: Upper limits, one per row
            k: Power of r

        Returns:
            Tuple of (values, refinement gaps, evaluation count)

        Raises:
            QuadratureError: Refinement did not converge within max_level doublings
        """
        upper = np.asarray(upper, dtype=float)
        x, w = _gauss_legendre_unit(self.order)
        rows_all = np.arange(upper.shape[0])

        def level_estimate(level: int, rows: np.ndarray) -> np.ndarray:
            panels = 2**level
            s = ((np.arange(panels)[:, None] + x[None, :]) / panels).ravel()
            ws = np.tile(w, panels) / panels
            r = upper[rows, None] * s[None, :]
            vals = np.asarray(g(rows, r), dtype=float) * r**k
            return upper[rows] * np.sum(vals * ws, axis=-1)

        values = level_estimate(0, rows_all)
        errs = np.zeros_like(values)
        n_evals = self.order * rows_all.size
        active = rows_all

        for level in range(1, self.max_level + 1):
            fine = level_estimate(level, active)
            n_evals += self.order * (2**level) * active.size
            gap = np.abs(fine - values[active])
            values[active] = fine
            errs[active] = gap
            done = gap <= self.tol * np.abs(fine)
            active = active[~done]
            if active.size == 0:
                break
        else:
            worst = float(np.max(errs[active] / np.maximum(np.abs(values[active]), 1e-300)))
            raise QuadratureError(
                "radial refinement did not converge",
                {
                    "level": self.max_level,
                    "unconverged_rows": int(active.size),
                    "worst_relative_gap": worst,
                    "tol": self.tol,
                },
            )

        if not np.all(np.isfinite(values)):
            raise QuadratureError("radial integrand produced non-finite values", {"k": k})
        return values, errs, int(n_evals)


def _dyadic_breaks(R: float) -> np.ndarray:
    """0, 1, 2, 4, ... up to R; long ranges get panels of geometric width"""
    if R <= 1.0:
        return np.array([0.0, R])
    inner = 2.0 ** np.arange(int(math.ceil(math.log2(R))))
    return np.concatenate([[0.0], inner[inner < R], [R]])


def radial_integral(
    g: Callable[[np.ndarray], np.ndarray],
    k: float,
    R: float,
    tol: float = 1e-10,
    tail_radius: Optional[float] = None,
    order: Optional[int] = None,
) -> Estimate:
    """
    Integrate r^k g(r) over [0, R]

    [0, R] is split at 1, 2, 4, ... and each piece is refined on its own, so
    cutoffs of power-law tails (R of order 1e10) stay within a few dozen panels.

    Args:
        g: Vectorized oracle on [0, R]
        k: Power of r
        R: Upper limit (math.inf allowed when tail_radius is given)
        tol: Target relative tolerance
        tail_radius: Finite cutoff replacing an infinite R (from the density's tail bound)
        order: Gauss-Legendre order per panel

    Returns:
        Estimate of the integral
    """
    if math.isinf(R):
        if tail_radius is None:
            raise InputDomainError("infinite radial range needs a declared tail bound")
        R = float(tail_radius)
    if not R > 0.0:
        raise InputDomainError(f"radial upper limit must be positive, got {R}")

    breaks = _dyadic_breaks(R)
    lower = breaks[:-1]

    def shifted(rows: np.ndarray, s: np.ndarray) -> np.ndarray:
        r = lower[rows, None] + s
        return r**k * g(r)

    rule = RadialRule(tol=tol, **({"order": order} if order else {}))
    values, errs, n_evals = rule.integrate(shifted, np.diff(breaks), 0.0)
    value = float(np.sum(values))
    err = float(np.sum(errs))
    if tail_radius is not None:
        err += tol * abs(value)
    return Estimate(value=value, err=err, n_evals=n_evals)


class RuleSet(BaseModel):
    """Rule sizes, methods and seed for one experiment; builds the concrete rules"""

    model_config = ConfigDict(frozen=True)

    sphere_nodes: int = Field(default_factory=lambda: LabConfig.SPHERE_NODES, ge=2)
    subsphere_nodes: int = Field(default_factory=lambda: LabConfig.SUBSPHERE_NODES, ge=2)
    method: Literal["monte_carlo", "antithetic_mc", "product_gauss"] = "antithetic_mc"
    subsphere_method: SubsphereMethod = "auto"
    seed: int = Field(default_factory=lambda: LabConfig.SEED)
    radial_tol: float = Field(default_factory=lambda: LabConfig.RADIAL_TOL, gt=0.0)
    radial_order: int = Field(default_factory=lambda: LabConfig.RADIAL_ORDER, ge=2)

    def sphere(self, n: int) -> SphereRule:
        """Rule on S^{n-1}"""
        return sphere_rule(n, self.method, self.sphere_nodes, self.seed)

    def subrule(self, m: int) -> SphereRule:
        """Rule on the unit sphere of an m-dimensional subspace"""
        if m == 1:
            return _point_pair_rule()
        method = self.subsphere_method
        if method == "auto":
            method = "product_gauss" if m == 2 else "antithetic_mc"
        return sphere_rule(m, method, self.subsphere_nodes, self.seed + 1)

    def radial(self) -> RadialRule:
        return RadialRule(order=self.radial_order, tol=self.radial_tol)

    def snapshot(self) -> dict:
        return self.model_dump()


