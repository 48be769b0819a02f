"""
Origin-symmetric star bodies represented by radial-function oracles

A body is a dimension, a vectorized radial oracle theta -> rho_K(theta) on the
unit sphere, and a family descriptor. The gauge is derived from the radial
function, ||x||_K = |x| / rho_K(x/|x|). Complex bodies live in R^{2n} with the
interleaved coordinate order (x_11, x_12, ..., x_n1, x_n2).
"""

import math
from typing import Annotated, Any, Callable, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import eval_legendre
from scipy.stats import norm, qmc

from .config import LabConfig
from .errors import BodyIntegrityError, InputDomainError
from .quadrature import complement_bases, require_unit

RadialOracle = Callable[[np.ndarray], np.ndarray]


class _Descriptor(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    dim: int = Field(ge=1)


class LpBallFamily(_Descriptor):
    """Unit ball of the weighted l_p norm (sum |x_i / s_i|^p)^(1/p); p may be inf"""

    family: Literal["lp_ball"] = "lp_ball"
    p: float = Field(gt=0)
    scales: List[float]


class EllipsoidFamily(_Descriptor):
    """Image A B_2^n of the Euclidean ball under a positive-definite matrix A"""

    family: Literal["ellipsoid"] = "ellipsoid"
    matrix: List[List[float]]


class PolytopeFamily(_Descriptor):
    """Intersection of halfspaces <a_i, x> <= b_i given in +/- pairs"""

    family: Literal["polytope"] = "polytope"
    normals: List[List[float]]
    offsets: List[float]


class LinearImageFamily(_Descriptor):
    family: Literal["linear_image"] = "linear_image"
    matrix: List[List[float]]
    base: "BodyDescriptor"


class IntersectionBodyFamily(_Descriptor):
    family: Literal["intersection_body_of"] = "intersection_body_of"
    base: "BodyDescriptor"


class ZonalFamily(_Descriptor):
    """Body of revolution; legendre[j] multiplies P_{2j}(<theta, axis>) in the radial profile"""

    family: Literal["zonal"] = "zonal"
    axis: List[float]
    legendre: Optional[List[float]] = None


class BallBodyFamily(_Descriptor):
    family: Literal["ball_body_of"] = "ball_body_of"
    base: "BodyDescriptor"
    density: Dict[str, Any]


class ComplexLpFamily(_Descriptor):
    """Unit ball of (sum |z_k|^p)^(1/p) on C^m = R^{2m}; p may be inf"""

    family: Literal["complex_lp"] = "complex_lp"
    p: float = Field(gt=0)


class ComplexifiedFamily(_Descriptor):
    """Body with ||x||^{-2} equal to the R_theta-average of ||R_theta x||_base^{-2}"""

    family: Literal["complexified"] = "complexified"
    base: "BodyDescriptor"
    angular_nodes: int = Field(ge=2)


class CustomFamily(_Descriptor):
    family: Literal["custom"] = "custom"
    label: str = "custom"


BodyDescriptor = Annotated[
    Union[
        LpBallFamily,
        EllipsoidFamily,
        PolytopeFamily,
        LinearImageFamily,
        IntersectionBodyFamily,
        ZonalFamily,
        BallBodyFamily,
        ComplexLpFamily,
        ComplexifiedFamily,
        CustomFamily,
    ],
    Field(discriminator="family"),
]

for _model in (LinearImageFamily, IntersectionBodyFamily, BallBodyFamily, ComplexifiedFamily):
    _model.model_rebuild()


class StarBody:
    """
    Origin-symmetric star body

    Bodies are immutable after construction; oracles are pure and may be
    shared across threads.
    """

    def __init__(
        self,
        dim: int,
        radial_fn: RadialOracle,
        family: BaseModel,
        r_theta_invariant: bool = False,
        convex: bool = False,
        profile: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        if dim < 1:
            raise InputDomainError(f"dimension must be positive, got {dim}")
        if r_theta_invariant and dim % 2:
            raise InputDomainError("R_theta-invariant bodies need an even dimension")
        self.dim = dim
        self.family = family
        self.origin_symmetric = True
        self.r_theta_invariant = r_theta_invariant
        self.convex = convex
        self.profile = profile
        self._radial_fn = radial_fn

    def __repr__(self) -> str:
        return f"StarBody(dim={self.dim}, family={self.family.family!r})"

    def radii(self, thetas: np.ndarray) -> np.ndarray:
        """Radial function on unit vectors without the unit-norm check"""
        thetas = np.asarray(thetas, dtype=float)
        values = np.asarray(self._radial_fn(thetas), dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            bad = values[~(np.isfinite(values) & (values > 0.0))]
            raise BodyIntegrityError(
                f"{self.family.family} body produced a non-positive or non-finite radius "
                f"({bad.ravel()[0]!r})"
            )
        return values

    def radial(self, theta: np.ndarray) -> Union[float, np.ndarray]:
        """rho_K(theta) for a unit vector (or an array of unit vectors)"""
        theta = require_unit(theta)
        if theta.shape[-1] != self.dim:
            raise InputDomainError(f"expected vectors in R^{self.dim}, got {theta.shape[-1]}")
        values = self.radii(theta)
        return float(values) if values.ndim == 0 else values

    def gauge(self, x: np.ndarray) -> Union[float, np.ndarray]:
        """Minkowski functional ||x||_K = |x| / rho_K(x/|x|); zero at the origin"""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InputDomainError(f"expected vectors in R^{self.dim}, got {x.shape[-1]}")
        norms = np.linalg.norm(x, axis=-1)
        zero = norms == 0.0
        safe = np.where(zero, 1.0, norms)
        directions = np.where(zero[..., None], _first_axis(self.dim), x / safe[..., None])
        values = np.where(zero, 0.0, norms / self.radii(directions))
        return float(values) if values.ndim == 0 else values

    def descriptor(self) -> BaseModel:
        return self.family


def _first_axis(n: int) -> np.ndarray:
    e = np.zeros(n)
    e[0] = 1.0
    return e


def radial(body: StarBody, theta: np.ndarray) -> Union[float, np.ndarray]:
    """Radial function rho_K(theta) of a body at a unit direction"""
    return body.radial(theta)


def gauge(body: StarBody, x: np.ndarray) -> Union[float, np.ndarray]:
    """Minkowski functional ||x||_K = min{a >= 0 : x in aK}"""
    return body.gauge(x)


def _lp_norm(y: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(y)
    peak = a.max(axis=-1)
    if math.isinf(p):
        return peak
    safe = np.where(peak > 0.0, peak, 1.0)
    return peak * np.sum((a / safe[..., None]) ** p, axis=-1) ** (1.0 / p)


def complex_structure(x: np.ndarray) -> np.ndarray:
    """J: rotate every coordinate pair by pi/2, (a, b) -> (-b, a)"""
    x = np.asarray(x, dtype=float)
    pairs = x.reshape(*x.shape[:-1], -1, 2)
    return np.stack([-pairs[..., 1], pairs[..., 0]], axis=-1).reshape(x.shape)


def r_theta_rotate(x: np.ndarray, angle: float) -> np.ndarray:
    """Simultaneous rotation R_theta of every coordinate pair by the given angle"""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 2:
        raise InputDomainError("R_theta acts on even dimensions only")
    pairs = x.reshape(*x.shape[:-1], -1, 2)
    c, s = math.cos(angle), math.sin(angle)
    rotated = np.stack(
        [c * pairs[..., 0] - s * pairs[..., 1], s * pairs[..., 0] + c * pairs[..., 1]], axis=-1
    )
    return rotated.reshape(x.shape)


def commutes_with_j(matrix: np.ndarray) -> bool:
    n = matrix.shape[0]
    if n % 2:
        return False
    j = complex_structure(np.eye(n)).T
    return bool(np.allclose(matrix @ j, j @ matrix, atol=1e-12))


def lp_ball(n: int, p: float, scales: Optional[List[float]] = None) -> StarBody:
    """Weighted l_p ball; p = inf gives the box with half-widths scales"""
    scales = [1.0] * n if scales is None else [float(s) for s in scales]
    if len(scales) != n or min(scales) <= 0.0:
        raise InputDomainError("l_p ball needs n positive scales")
    if not p > 0:
        raise InputDomainError(f"l_p ball needs p > 0, got {p}")
    s = np.asarray(scales)

    def fn(thetas: np.ndarray) -> np.ndarray:
        return 1.0 / _lp_norm(thetas / s, p)

    uniform = bool(np.allclose(s, s[0]))
    return StarBody(
        n,
        fn,
        LpBallFamily(dim=n, p=float(p), scales=scales),
        r_theta_invariant=(n % 2 == 0 and p == 2 and uniform),
        convex=p >= 1,
    )


def euclidean_ball(n: int, radius: float = 1.0) -> StarBody:
    return lp_ball(n, 2.0, [radius] * n)


def cube(n: int, half_width: float = 1.0) -> StarBody:
    return lp_ball(n, math.inf, [half_width] * n)


def cross_polytope(n: int) -> StarBody:
    return lp_ball(n, 1.0)


def ellipsoid(matrix: Union[np.ndarray, List[float], List[List[float]]]) -> StarBody:
    """
    Ellipsoid A B_2^n

    Args:
        matrix: Symmetric positive-definite matrix A, or a list of semiaxes (A = diag)
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim == 1:
        a = np.diag(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputDomainError("ellipsoid needs a square matrix or a semiaxis list")
    if not np.allclose(a, a.T, atol=1e-12) or np.linalg.eigvalsh(a).min() <= 0.0:
        raise InputDomainError("ellipsoid matrix must be symmetric positive-definite")
    a_inv = np.linalg.inv(a)
    n = a.shape[0]

    def fn(thetas: np.ndarray) -> np.ndarray:
        return 1.0 / np.linalg.norm(thetas @ a_inv.T, axis=-1)

    return StarBody(
        n,
        fn,
        EllipsoidFamily(dim=n, matrix=a.tolist()),
        r_theta_invariant=commutes_with_j(a),
        convex=True,
    )


def polytope(normals: np.ndarray, offsets: np.ndarray) -> StarBody:
    """Symmetric polytope {x : <a_i, x> <= b_i}; halfspaces must come in +/- pairs"""
    a = np.asarray(normals, dtype=float)
    b = np.asarray(offsets, dtype=float)
    if a.ndim != 2 or b.shape != (a.shape[0],) or np.any(b <= 0.0):
        raise InputDomainError("polytope needs (m, n) normals and m positive offsets")
    for i in range(a.shape[0]):
        partner = np.all(np.isclose(a, -a[i], atol=1e-12), axis=1) & np.isclose(b, b[i])
        if not partner.any():
            raise InputDomainError(f"halfspace {i} has no opposite partner")
    n = a.shape[1]
    scaled_normals = a / b[:, None]

    def fn(thetas: np.ndarray) -> np.ndarray:
        support = np.max(thetas @ scaled_normals.T, axis=-1)
        with np.errstate(divide="ignore"):
            return np.where(support > 0.0, 1.0 / np.maximum(support, 1e-300), np.inf)

    return StarBody(
        n, fn, PolytopeFamily(dim=n, normals=a.tolist(), offsets=b.tolist()), convex=True
    )


def complex_lp(m: int, p: float) -> StarBody:
    """Complex l_p ball in C^m = R^{2m}; p = inf gives the complex cube max |z_k| <= 1"""
    if not p > 0:
        raise InputDomainError(f"complex l_p ball needs p > 0, got {p}")

    def fn(thetas: np.ndarray) -> np.ndarray:
        pairs = thetas.reshape(*thetas.shape[:-1], m, 2)
        return 1.0 / _lp_norm(np.hypot(pairs[..., 0], pairs[..., 1]), p)

    return StarBody(
        2 * m,
        fn,
        ComplexLpFamily(dim=2 * m, p=float(p)),
        r_theta_invariant=True,
        convex=p >= 1,
    )


def zonal(
    axis: np.ndarray,
    legendre: Optional[List[float]] = None,
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    convex: bool = False,
) -> StarBody:
    """
    Body of revolution with radius rho(<theta, axis>)

    Args:
        axis: Unit axis of revolution
        legendre: Coefficients c_j of P_{2j} in the radial profile
        profile: Even radial profile t -> rho(t) on [-1, 1] (instead of legendre)
        convex: Declared convexity of the body
    """
    e = require_unit(axis)
    if (legendre is None) == (profile is None):
        raise InputDomainError("zonal body needs exactly one of legendre or profile")
    if legendre is not None:
        coeffs = [float(c) for c in legendre]

        def profile(t: np.ndarray) -> np.ndarray:
            t = np.asarray(t, dtype=float)
            return sum(c * eval_legendre(2 * j, t) for j, c in enumerate(coeffs))

    def fn(thetas: np.ndarray) -> np.ndarray:
        return np.asarray(profile(np.clip(thetas @ e, -1.0, 1.0)), dtype=float)

    return StarBody(
        e.shape[0],
        fn,
        ZonalFamily(dim=e.shape[0], axis=e.tolist(), legendre=legendre),
        convex=convex,
        profile=profile,
    )


def linear_image(body: StarBody, T: np.ndarray) -> StarBody:
    """
    Linear image TK with ||x||_{TK} = ||T^{-1} x||_K

    Raises:
        InputDomainError: T is singular or has the wrong shape
    """
    t = np.asarray(T, dtype=float)
    if t.shape != (body.dim, body.dim):
        raise InputDomainError(f"matrix must be {body.dim}x{body.dim}")
    if np.linalg.matrix_rank(t) < body.dim:
        raise InputDomainError("linear image needs an invertible matrix")
    t_inv = np.linalg.inv(t)

    def fn(thetas: np.ndarray) -> np.ndarray:
        return 1.0 / body.gauge(thetas @ t_inv.T)

    return StarBody(
        body.dim,
        fn,
        LinearImageFamily(dim=body.dim, matrix=t.tolist(), base=body.family),
        r_theta_invariant=body.r_theta_invariant and commutes_with_j(t),
        convex=body.convex,
    )


def scaled(body: StarBody, t: float) -> StarBody:
    """Dilate tK"""
    if not t > 0:
        raise InputDomainError(f"dilation factor must be positive, got {t}")
    return linear_image(body, t * np.eye(body.dim))


def coordinate_lp_family(family: "BodyDescriptor") -> Optional[LpBallFamily]:
    """
    Weighted l_p ball behind a chain of diagonal linear images, or None

    D B_p(s) is the l_p ball with scales |d_i| s_i; a non-diagonal image or
    any other family gives None.
    """
    factors = np.ones(family.dim)
    while isinstance(family, LinearImageFamily):
        matrix = np.asarray(family.matrix)
        diagonal = np.diag(matrix)
        if np.any(matrix != np.diag(diagonal)):
            return None
        factors = factors * np.abs(diagonal)
        family = family.base
    if not isinstance(family, LpBallFamily):
        return None
    return LpBallFamily(
        dim=family.dim, p=family.p, scales=(factors * np.asarray(family.scales)).tolist()
    )


def complexified(body: StarBody, angular_nodes: Optional[int] = None) -> StarBody:
    """
    R_theta-invariant body E_c with ||x||_{E_c}^{-2} = (1/2pi) int ||R_theta x||_E^{-2} dtheta

    The angular average uses the periodic trapezoid rule.
    """
    if body.dim % 2:
        raise InputDomainError("complexification needs an even dimension")
    count = angular_nodes or LabConfig.ANGULAR_NODES
    angles = 2.0 * np.pi * np.arange(count) / count

    def fn(thetas: np.ndarray) -> np.ndarray:
        squares = [body.radii(r_theta_rotate(thetas, a)) ** 2 for a in angles]
        return np.sqrt(np.mean(squares, axis=0))

    return StarBody(
        body.dim,
        fn,
        ComplexifiedFamily(dim=body.dim, base=body.family, angular_nodes=count),
        r_theta_invariant=True,
    )


def custom_body(
    dim: int, radial_fn: RadialOracle, label: str = "custom", **flags: bool
) -> StarBody:
    return StarBody(dim, radial_fn, CustomFamily(dim=dim, label=label), **flags)


def random_directions(n: int, count: int, seed: int) -> np.ndarray:
    """Seeded i.i.d. uniform directions on S^{n-1}"""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((count, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def quasi_random_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Scrambled Halton points pushed to S^{n-1} through the Gaussian quantile"""
    u = qmc.Halton(d=n, scramble=True, seed=seed).random(count)
    z = norm.ppf(np.clip(u, 1e-12, 1.0 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_radii(body: StarBody, count: int = 10_000, seed: int = 0):
    """Quasi-random directions and the body's radii along them"""
    thetas = quasi_random_directions(body.dim, count, seed)
    return thetas, body.radii(thetas)


def r_theta_invariance_defect(
    body: StarBody, trials: int = 1000, seed: int = 0, angles: int = 32
) -> float:
    """Largest relative change of the gauge under sampled rotations R_theta"""
    rng = np.random.default_rng(seed)
    xs = random_directions(body.dim, trials, seed)
    base = body.gauge(xs)
    worst = 0.0
    for angle in rng.uniform(0.0, 2.0 * np.pi, angles):
        moved = body.gauge(r_theta_rotate(xs, angle))
        worst = max(worst, float(np.max(np.abs(moved - base) / base)))
    return worst


class DistanceBound(BaseModel):
    """Upper bound d on the geometric distance from a normalized body to the ball"""

    d: float = Field(ge=1.0)
    normalization: List[List[float]]
    method: Literal["analytic", "inertia_whitening"]
    unnormalized_ratio: float
    samples: int = 0


def ball_distance_bound(body: StarBody, samples: int = 10_000) -> DistanceBound:
    """
    Upper bound on d_G(T K, B_2^n) for a linear normalization T

    l_p balls (also behind diagonal linear images), complex l_p balls and
    ellipsoids use their analytic values; any other body is whitened by the
    inertia matrix of its radial measure and bounded by the sampled max/min
    radius ratio of the whitened body.

    An ellipsoid A B_2^n is normalized by A^{-1}, which maps it onto B_2^n
    exactly, so d = 1 rather than the axis ratio; the axis ratio is kept as
    unnormalized_ratio.

    Raises:
        BodyIntegrityError: The sampled radius ratio is unbounded
    """
    fam = body.family
    n = body.dim

    lp = coordinate_lp_family(fam)
    if lp is not None:
        exponent = 0.5 if math.isinf(lp.p) else abs(0.5 - 1.0 / lp.p)
        _, radii = sample_radii(body, 2048)
        return DistanceBound(
            d=max(1.0, n**exponent),
            normalization=np.diag(1.0 / np.asarray(lp.scales)).tolist(),
            method="analytic",
            unnormalized_ratio=float(radii.max() / radii.min()),
        )

    if isinstance(fam, ComplexLpFamily):
        p = fam.p
        exponent = 0.5 if math.isinf(p) else abs(0.5 - 1.0 / p)
        return DistanceBound(
            d=max(1.0, (n // 2) ** exponent),
            normalization=np.eye(n).tolist(),
            method="analytic",
            unnormalized_ratio=max(1.0, (n // 2) ** exponent),
        )

    if isinstance(fam, EllipsoidFamily):
        a = np.asarray(fam.matrix)
        singular = np.linalg.svd(a, compute_uv=False)
        return DistanceBound(
            d=1.0,
            normalization=np.linalg.inv(a).tolist(),
            method="analytic",
            unnormalized_ratio=float(singular.max() / singular.min()),
        )

    thetas, radii = sample_radii(body, samples)
    inertia = np.einsum("i,ij,ik->jk", radii ** (n + 2), thetas, thetas) / samples
    eigenvalues, eigenvectors = np.linalg.eigh(inertia)
    if eigenvalues.min() <= 0.0:
        raise BodyIntegrityError("inertia matrix of the body is singular")
    whiten = eigenvectors @ np.diag(eigenvalues**-0.5) @ eigenvectors.T
    unwhiten = eigenvectors @ np.diag(eigenvalues**0.5) @ eigenvectors.T
    normalized = 1.0 / body.gauge(thetas @ unwhiten.T)
    d = float(normalized.max() / normalized.min())
    if not math.isfinite(d):
        raise BodyIntegrityError("radius ratio of the whitened body is unbounded")
    return DistanceBound(
        d=max(1.0, d),
        normalization=whiten.tolist(),
        method="inertia_whitening",
        unnormalized_ratio=float(radii.max() / radii.min()),
        samples=samples,
    )


class ComplexDirection(BaseModel):
    """Unit xi in R^{2n} and an orthonormal basis of the real form of H_xi"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xi: np.ndarray
    basis_H: np.ndarray


def complex_direction(xi: np.ndarray) -> ComplexDirection:
    """
    Orthonormal basis of H_xi = span{xi, J xi}^perp by Gram-Schmidt over e_1, ..., e_2n

    Raises:
        InputDomainError: Odd dimension or non-unit xi
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] % 2:
        raise InputDomainError("complex hyperplanes need an even ambient dimension")
    xi = require_unit(xi)
    frame = np.stack([xi, complex_structure(xi)])[None]
    basis = complement_bases(frame)[0]
    basis.setflags(write=False)
    return ComplexDirection(xi=xi, basis_H=basis)


def complex_directions(xis: np.ndarray) -> List[ComplexDirection]:
    """Batched complex_direction"""
    xis = require_unit(xis)
    if xis.shape[-1] % 2:
        raise InputDomainError("complex hyperplanes need an even ambient dimension")
    frames = np.stack([xis, complex_structure(xis)], axis=1)
    bases = complement_bases(frames)
    return [ComplexDirection(xi=x, basis_H=b) for x, b in zip(xis, bases)]


def body_from_descriptor(desc: BaseModel) -> StarBody:
    """Rebuild a body from its JSON descriptor"""
    if isinstance(desc, LpBallFamily):
        return lp_ball(desc.dim, desc.p, desc.scales)
    if isinstance(desc, EllipsoidFamily):
        return ellipsoid(desc.matrix)
    if isinstance(desc, PolytopeFamily):
        return polytope(desc.normals, desc.offsets)
    if isinstance(desc, LinearImageFamily):
        return linear_image(body_from_descriptor(desc.base), np.asarray(desc.matrix))
    if isinstance(desc, ComplexLpFamily):
        return complex_lp(desc.dim // 2, desc.p)
    if isinstance(desc, ComplexifiedFamily):
        return complexified(body_from_descriptor(desc.base), desc.angular_nodes)
    if isinstance(desc, ZonalFamily):
        if desc.legendre is None:
            raise InputDomainError("zonal descriptor without legendre coefficients")
        return zonal(np.asarray(desc.axis), legendre=desc.legendre)
    if isinstance(desc, IntersectionBodyFamily):
        from .radon import intersection_body_of

        return intersection_body_of(body_from_descriptor(desc.base))
    if isinstance(desc, BallBodyFamily):
        from .ballbody import ball_body
        from .measures import density_from_descriptor

        return ball_body(body_from_descriptor(desc.base), density_from_descriptor(desc.density))
    raise InputDomainError(f"descriptor family {desc.family!r} cannot be rebuilt")
