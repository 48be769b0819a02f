"""
Density oracles for measures with even continuous densities

A DensitySpec wraps a vectorized oracle x -> f(x) >= 0 on R^n together with
its declared symmetry and concavity flags. Flags are declared by the family
constructors; the check_* functions are randomized falsifiers that guard
against misdeclared flags, not provers.
"""

import math
from enum import Enum
from typing import Any, Callable, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import LabConfig
from .errors import DensityIntegrityError, InputDomainError
from .geometry import commutes_with_j, r_theta_rotate, random_directions

DensityOracle = Callable[[np.ndarray], np.ndarray]

CONCAVITY_RTOL = 1e-9


class ConcavityClass(str, Enum):
    """Borell concavity class of the measure"""

    NONE = "none"
    CONVEX_MEASURE = "convex_measure"
    LOG_CONCAVE = "log_concave"
    S_CONCAVE = "s_concave"


class DensityFlags(BaseModel):
    even: Literal[True] = True
    rotation_invariant: bool = False
    r_theta_invariant: bool = False
    concavity_class: ConcavityClass = ConcavityClass.NONE
    s: Optional[float] = None


class DensityDescriptor(BaseModel):
    """JSON form of a density; family parameters not used by a family stay None"""

    family: Literal[
        "lebesgue",
        "gaussian",
        "laplace",
        "cauchy",
        "student",
        "anisotropic_gaussian",
        "cosine_bump",
        "quadratic",
        "symmetrized",
        "custom",
    ]
    dim: int = Field(ge=1)
    p: Optional[float] = None
    beta: Optional[float] = None
    matrix: Optional[List[List[float]]] = None
    epsilon: Optional[float] = None
    omega: Optional[float] = None
    base: Optional["DensityDescriptor"] = None
    angular_nodes: Optional[int] = None
    label: Optional[str] = None
    scale: float = Field(default=1.0, gt=0.0)
    flags: DensityFlags = Field(default_factory=DensityFlags)


DensityDescriptor.model_rebuild()


class DensitySpec:
    """
    Even density oracle with declared flags

    Args:
        dim: Ambient dimension n
        fn: Vectorized oracle mapping (..., n) arrays to (...) values
        descriptor: JSON descriptor of the density
        tail: Function (k, tol) -> R with int_R^inf r^k f(r theta) dr <= tol, if integrable
        modulus: Declared Lipschitz bound used by continuity_defect
        constant: Value of f when f is constant
        sampling_radius: Half-width of the cube used by the randomized checks
    """

    def __init__(
        self,
        dim: int,
        fn: DensityOracle,
        descriptor: DensityDescriptor,
        tail: Optional[Callable[[float, float], float]] = None,
        modulus: Optional[float] = None,
        constant: Optional[float] = None,
        sampling_radius: float = 3.0,
    ):
        self.dim = dim
        self._fn = fn
        self.descriptor = descriptor
        self.tail = tail
        self.modulus = modulus
        self.constant = constant
        self.sampling_radius = sampling_radius

    def __repr__(self) -> str:
        return f"DensitySpec(dim={self.dim}, family={self.family!r})"

    @property
    def family(self) -> str:
        return self.descriptor.family

    @property
    def flags(self) -> DensityFlags:
        return self.descriptor.flags

    @property
    def is_convex_measure(self) -> bool:
        return self.flags.concavity_class != ConcavityClass.NONE

    @property
    def gamma(self) -> float:
        """Exponent gamma such that the density is gamma-concave"""
        cls = self.flags.concavity_class
        if cls == ConcavityClass.CONVEX_MEASURE:
            return -1.0 / self.dim
        if cls == ConcavityClass.LOG_CONCAVE:
            return 0.0
        if cls == ConcavityClass.S_CONCAVE:
            s = self.flags.s
            if s is None or s >= 1.0 / self.dim:
                raise InputDomainError(f"s-concave class needs s < 1/n, got {s}")
            return s / (1.0 - s * self.dim)
        raise InputDomainError(f"{self.family} density has no declared concavity class")

    @property
    def f0(self) -> float:
        return float(self(np.zeros(self.dim)))

    def __call__(self, x: np.ndarray) -> Union[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InputDomainError(f"expected points in R^{self.dim}, got {x.shape[-1]}")
        values = np.asarray(self._fn(x), dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            bad = values[~(np.isfinite(values) & (values >= 0.0))]
            raise DensityIntegrityError(
                f"{self.family} density produced an invalid value ({bad.ravel()[0]!r})"
            )
        return float(values) if values.ndim == 0 else values

    def along(self, thetas: np.ndarray, r: np.ndarray) -> np.ndarray:
        """f(r_j theta_i) for directions (B, n) and radii (B, m)"""
        return self(r[..., None] * thetas[:, None, :])

    def tail_radius(self, k: float, tol: Optional[float] = None) -> float:
        """
        Radial cutoff R with int_R^inf r^k f(r theta) dr <= tol

        Raises:
            InputDomainError: The family declares no integrable tail for this power
        """
        tol = tol or LabConfig.RADIAL_TOL
        if self.tail is None:
            raise InputDomainError(f"{self.family} density declares no integrable tail")
        return float(self.tail(k, tol))


def _sq_norm(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


def _power_tail(decay: float) -> Callable[[float, float], float]:
    """Cutoff for f(r) <= r^{-decay}: int_R^inf r^{k-decay} dr = R^{k+1-decay}/(decay-k-1)"""

    def tail(k: float, tol: float) -> float:
        if decay <= k + 1.0:
            raise InputDomainError(
                f"tail r^(-{decay:g}) is not integrable against r^{k:g}"
            )
        return max(1.0, (tol * (decay - k - 1.0)) ** (1.0 / (k + 1.0 - decay)))

    return tail


def _compact_tail(radius: float) -> Callable[[float, float], float]:
    return lambda k, tol: radius


def _radial_flags(n: int, cls: ConcavityClass) -> DensityFlags:
    return DensityFlags(
        rotation_invariant=True, r_theta_invariant=(n % 2 == 0), concavity_class=cls
    )


def lebesgue(n: int) -> DensitySpec:
    """f = 1"""
    desc = DensityDescriptor(
        family="lebesgue", dim=n, flags=_radial_flags(n, ConcavityClass.LOG_CONCAVE)
    )
    return DensitySpec(
        n, lambda x: np.ones(x.shape[:-1]), desc, modulus=0.0, constant=1.0
    )


def gaussian(n: int) -> DensitySpec:
    """f(x) = exp(-|x|^2 / 2)"""
    desc = DensityDescriptor(
        family="gaussian", dim=n, flags=_radial_flags(n, ConcavityClass.LOG_CONCAVE)
    )

    def tail(k: float, tol: float) -> float:
        return math.sqrt(2.0 * (k + 2.0) * math.log(1.0 / tol))

    return DensitySpec(
        n, lambda x: np.exp(-0.5 * _sq_norm(x)), desc, tail=tail, modulus=math.exp(-0.5)
    )


def laplace(n: int) -> DensitySpec:
    """f(x) = exp(-|x|)"""
    desc = DensityDescriptor(
        family="laplace", dim=n, flags=_radial_flags(n, ConcavityClass.LOG_CONCAVE)
    )

    def tail(k: float, tol: float) -> float:
        # fixed point of R = ln(1/tol) + k ln R + ln(k + 1) dominates the gamma tail
        radius = math.log(1.0 / tol) + k + 1.0
        for _ in range(50):
            radius = math.log(1.0 / tol) + k * math.log(radius) + math.log(k + 1.0)
        return radius

    return DensitySpec(
        n, lambda x: np.exp(-np.sqrt(_sq_norm(x))), desc, tail=tail, modulus=1.0
    )


def cauchy(n: int, p: float) -> DensitySpec:
    """
    f(x) = 1 / (1 + |x|^p)

    Flagged as a convex measure exactly when p >= n: f^{-1/n} is then the
    composition of the l_n norm of (1, |x|^{p/n}) with a convex radial map.
    """
    if not p > 0:
        raise InputDomainError(f"Cauchy-type density needs p > 0, got {p}")
    cls = ConcavityClass.CONVEX_MEASURE if p >= n else ConcavityClass.NONE
    desc = DensityDescriptor(family="cauchy", dim=n, p=p, flags=_radial_flags(n, cls))
    return DensitySpec(
        n,
        lambda x: 1.0 / (1.0 + np.sqrt(_sq_norm(x)) ** p),
        desc,
        tail=_power_tail(p),
        sampling_radius=5.0,
    )


def student(n: int, beta: Optional[float] = None) -> DensitySpec:
    """
    f(x) = (1 + |x|^2)^(-beta); convex measure iff beta >= n/2

    The default beta = (n+1)/2 is the multivariate Cauchy law.
    """
    beta = (n + 1) / 2.0 if beta is None else float(beta)
    if not beta > 0:
        raise InputDomainError(f"student density needs beta > 0, got {beta}")
    cls = ConcavityClass.CONVEX_MEASURE if beta >= n / 2.0 else ConcavityClass.NONE
    desc = DensityDescriptor(family="student", dim=n, beta=beta, flags=_radial_flags(n, cls))
    return DensitySpec(
        n,
        lambda x: (1.0 + _sq_norm(x)) ** (-beta),
        desc,
        tail=_power_tail(2.0 * beta),
        sampling_radius=5.0,
    )


def anisotropic_gaussian(matrix: np.ndarray) -> DensitySpec:
    """f(x) = exp(-x^T A x / 2) for a positive-definite A"""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.allclose(a, a.T, atol=1e-12):
        raise InputDomainError("anisotropic gaussian needs a symmetric matrix")
    smallest = float(np.linalg.eigvalsh(a).min())
    if smallest <= 0.0:
        raise InputDomainError("anisotropic gaussian needs a positive-definite matrix")
    n = a.shape[0]
    isotropic = bool(np.allclose(a, a[0, 0] * np.eye(n), atol=1e-12))
    desc = DensityDescriptor(
        family="anisotropic_gaussian",
        dim=n,
        matrix=a.tolist(),
        flags=DensityFlags(
            rotation_invariant=isotropic,
            r_theta_invariant=commutes_with_j(a),
            concavity_class=ConcavityClass.LOG_CONCAVE,
        ),
    )

    def tail(k: float, tol: float) -> float:
        return math.sqrt(2.0 * (k + 2.0) * math.log(1.0 / tol) / smallest)

    return DensitySpec(
        n, lambda x: np.exp(-0.5 * np.einsum("...i,ij,...j->...", x, a, x)), desc, tail=tail
    )


def cosine_bump(n: int, epsilon: float = 0.5, omega: float = 2.0) -> DensitySpec:
    """
    f(x) = 1 + epsilon * cos(omega * x_1)

    Not -1/n-concave: f^{-1/n} is concave near every minimum of f.
    """
    if not 0.0 <= epsilon < 1.0 or not omega > 0:
        raise InputDomainError("cosine bump needs 0 <= epsilon < 1 and omega > 0")
    desc = DensityDescriptor(family="cosine_bump", dim=n, epsilon=epsilon, omega=omega)
    return DensitySpec(
        n,
        lambda x: 1.0 + epsilon * np.cos(omega * x[..., 0]),
        desc,
        modulus=epsilon * omega,
        sampling_radius=max(3.0, 2.0 * math.pi / omega),
    )


def quadratic(matrix: np.ndarray) -> DensitySpec:
    """f(x) = max(0, 1 + x^T Q x); compactly supported and log-concave when Q < 0"""
    q = np.asarray(matrix, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1] or not np.allclose(q, q.T, atol=1e-12):
        raise InputDomainError("quadratic density needs a symmetric matrix")
    n = q.shape[0]
    eigenvalues = np.linalg.eigvalsh(q)
    negative = bool(eigenvalues.max() < 0.0)
    isotropic = bool(np.allclose(q, q[0, 0] * np.eye(n), atol=1e-12))
    desc = DensityDescriptor(
        family="quadratic",
        dim=n,
        matrix=q.tolist(),
        flags=DensityFlags(
            rotation_invariant=isotropic,
            r_theta_invariant=commutes_with_j(q),
            concavity_class=ConcavityClass.LOG_CONCAVE if negative else ConcavityClass.NONE,
        ),
    )
    support = 1.0 / math.sqrt(-eigenvalues.max()) if negative else None
    return DensitySpec(
        n,
        lambda x: np.maximum(0.0, 1.0 + np.einsum("...i,ij,...j->...", x, q, x)),
        desc,
        tail=_compact_tail(support) if support else None,
        sampling_radius=support if support else 3.0,
    )


def custom_density(
    dim: int,
    fn: DensityOracle,
    label: str = "custom",
    flags: Optional[DensityFlags] = None,
    tail: Optional[Callable[[float, float], float]] = None,
    modulus: Optional[float] = None,
    sampling_radius: float = 3.0,
) -> DensitySpec:
    """User oracle; flags, tail and continuity modulus are user-declared"""
    desc = DensityDescriptor(
        family="custom", dim=dim, label=label, flags=flags or DensityFlags()
    )
    return DensitySpec(
        dim, fn, desc, tail=tail, modulus=modulus, sampling_radius=sampling_radius
    )


def rescaled(d: DensitySpec, c: float) -> DensitySpec:
    """The density c * f"""
    if not c > 0:
        raise InputDomainError(f"rescaling factor must be positive, got {c}")
    desc = d.descriptor.model_copy(update={"scale": d.descriptor.scale * c})
    base = d._fn
    return DensitySpec(
        d.dim,
        lambda x: c * base(x),
        desc,
        tail=None if d.tail is None else (lambda k, tol: d.tail(k, tol / c)),
        modulus=None if d.modulus is None else c * d.modulus,
        constant=None if d.constant is None else c * d.constant,
        sampling_radius=d.sampling_radius,
    )


def eval_density(d: DensitySpec, x: np.ndarray) -> Union[float, np.ndarray]:
    """
    f(x) with integrity checks

    Raises:
        InputDomainError: Dimension mismatch
        DensityIntegrityError: Negative or non-finite value
    """
    return d(x)


def symmetrize_complex(d: DensitySpec, angular_nodes: Optional[int] = None) -> DensitySpec:
    """
    f_c(x) = (1/2pi) int_0^{2pi} f(R_theta x) dtheta by the periodic trapezoid rule

    Raises:
        InputDomainError: Odd dimension
    """
    if d.dim % 2:
        raise InputDomainError("complex symmetrization needs an even dimension")
    count = angular_nodes or LabConfig.ANGULAR_NODES
    if count < 2:
        raise InputDomainError("complex symmetrization needs at least two angular nodes")
    angles = 2.0 * np.pi * np.arange(count) / count

    def fn(x: np.ndarray) -> np.ndarray:
        return np.mean([d(r_theta_rotate(x, a)) for a in angles], axis=0)

    fixed = d.flags.r_theta_invariant or d.flags.rotation_invariant
    flags = DensityFlags(
        rotation_invariant=d.flags.rotation_invariant,
        r_theta_invariant=True,
        concavity_class=d.flags.concavity_class if fixed else ConcavityClass.NONE,
        s=d.flags.s if fixed else None,
    )
    desc = DensityDescriptor(
        family="symmetrized",
        dim=d.dim,
        base=d.descriptor,
        angular_nodes=count,
        flags=flags,
    )
    return DensitySpec(
        d.dim,
        fn,
        desc,
        tail=d.tail,
        modulus=d.modulus,
        constant=d.constant,
        sampling_radius=d.sampling_radius,
    )


class ConcavityReport(BaseModel):
    """Outcome of a randomized concavity falsification run"""

    gamma: float
    trials: int
    pairs_checked: int
    violations: int
    worst_gap: float


def check_concavity(
    d: DensitySpec, gamma: float, trials: int = 10_000, seed: int = 0
) -> ConcavityReport:
    """
    Randomized falsifier for gamma-concavity of f on its support

    gamma < 0: f^gamma convex; gamma = 0: log f concave; gamma > 0: f^gamma concave.
    Pairs are drawn uniformly from the cube of half-width d.sampling_radius and
    gaps are measured relative to the larger side of each inequality.

    Raises:
        InputDomainError: No sampled pair lies in the positive support
    """
    rng = np.random.default_rng(seed)
    radius = d.sampling_radius
    x = rng.uniform(-radius, radius, (trials, d.dim))
    y = rng.uniform(-radius, radius, (trials, d.dim))
    lam = rng.uniform(0.0, 1.0, trials)
    fx, fy = d(x), d(y)
    keep = (fx > 0.0) & (fy > 0.0)
    if not keep.any():
        raise InputDomainError(f"no positive-support samples found for {d.family} density")
    x, y, lam, fx, fy = x[keep], y[keep], lam[keep], fx[keep], fy[keep]
    fz = d(lam[:, None] * x + (1.0 - lam[:, None]) * y)

    with np.errstate(divide="ignore"):
        if gamma == 0.0:
            rhs = lam * np.log(fx) + (1.0 - lam) * np.log(fy)
            lhs = np.where(fz > 0.0, np.log(np.where(fz > 0.0, fz, 1.0)), -np.inf)
            gap = rhs - lhs
            scale = np.maximum(1.0, np.abs(rhs))
        elif gamma < 0.0:
            rhs = lam * fx**gamma + (1.0 - lam) * fy**gamma
            lhs = np.where(fz > 0.0, np.where(fz > 0.0, fz, 1.0) ** gamma, np.inf)
            gap = lhs - rhs
            scale = np.abs(rhs)
        else:
            rhs = lam * fx**gamma + (1.0 - lam) * fy**gamma
            lhs = fz**gamma
            gap = rhs - lhs
            scale = np.abs(rhs)

    relative = np.where(np.isfinite(gap), gap / scale, np.inf)
    violations = int(np.sum(relative > CONCAVITY_RTOL))
    worst = float(np.max(relative))
    return ConcavityReport(
        gamma=gamma,
        trials=trials,
        pairs_checked=int(keep.sum()),
        violations=violations,
        worst_gap=max(0.0, worst) if math.isfinite(worst) else math.inf,
    )


def check_neg_inv_n_concave(
    d: DensitySpec, trials: int = 10_000, seed: int = 0
) -> ConcavityReport:
    """Falsifier for -1/n-concavity, Borell's criterion for convex measures"""
    return check_concavity(d, -1.0 / d.dim, trials, seed)


def check_evenness(d: DensitySpec, trials: int = 1000, seed: int = 0) -> float:
    """Largest relative difference |f(x) - f(-x)| over sampled x"""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-d.sampling_radius, d.sampling_radius, (trials, d.dim))
    a, b = d(x), d(-x)
    scale = np.maximum(np.maximum(a, b), 1e-300)
    return float(np.max(np.abs(a - b) / scale))


def check_rotation_invariance(d: DensitySpec, trials: int = 1000, seed: int = 0) -> float:
    """Largest relative difference between f(x) and f(|x| e_1) over sampled x"""
    rng = np.random.default_rng(seed)
    radii = rng.uniform(0.0, d.sampling_radius, trials)
    thetas = random_directions(d.dim, trials, seed)
    axis = np.zeros(d.dim)
    axis[0] = 1.0
    a = d(radii[:, None] * thetas)
    b = d(radii[:, None] * axis)
    scale = np.maximum(np.maximum(a, b), 1e-300)
    return float(np.max(np.abs(a - b) / scale))


class ContinuityReport(BaseModel):
    """Largest jumps between neighbouring points on sampled segments at two resolutions"""

    model_config = ConfigDict(frozen=True)

    coarse_jump: float
    fine_jump: float
    shrinking: bool
    modulus_ok: Optional[bool] = None


def continuity_defect(
    d: DensitySpec, segments: int = 100, seed: int = 0, points: int = 64
) -> ContinuityReport:
    """
    Refinement test of continuity: the largest jump between neighbouring grid
    points must shrink when the grid on each segment is halved, and stay below
    modulus * step when a modulus is declared
    """
    rng = np.random.default_rng(seed)
    radius = d.sampling_radius
    starts = rng.uniform(-radius, radius, (segments, d.dim))
    ends = rng.uniform(-radius, radius, (segments, d.dim))
    lengths = np.linalg.norm(ends - starts, axis=1)

    def max_jump(count: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, count)
        pts = starts[:, None, :] + t[None, :, None] * (ends - starts)[:, None, :]
        return np.max(np.abs(np.diff(d(pts), axis=1)), axis=1)

    coarse = max_jump(points)
    fine = max_jump(2 * points - 1)
    coarse_max, fine_max = float(coarse.max()), float(fine.max())
    modulus_ok = None
    if d.modulus is not None:
        step = lengths / (2 * points - 2)
        modulus_ok = bool(np.all(fine <= d.modulus * step * (1.0 + 1e-9) + 1e-15))
    return ContinuityReport(
        coarse_jump=coarse_max,
        fine_jump=fine_max,
        shrinking=fine_max <= 0.75 * coarse_max or fine_max < 1e-12,
        modulus_ok=modulus_ok,
    )


def density_from_descriptor(desc: Union[DensityDescriptor, Dict[str, Any]]) -> DensitySpec:
    """Rebuild a density from its JSON descriptor"""
    if isinstance(desc, dict):
        desc = DensityDescriptor.model_validate(desc)
    n = desc.dim
    if desc.family == "lebesgue":
        d = lebesgue(n)
    elif desc.family == "gaussian":
        d = gaussian(n)
    elif desc.family == "laplace":
        d = laplace(n)
    elif desc.family == "cauchy":
        if desc.p is None:
            raise InputDomainError("cauchy descriptor needs p")
        d = cauchy(n, desc.p)
    elif desc.family == "student":
        d = student(n, desc.beta)
    elif desc.family == "anisotropic_gaussian":
        d = anisotropic_gaussian(np.asarray(desc.matrix))
    elif desc.family == "cosine_bump":
        d = cosine_bump(
            n,
            0.5 if desc.epsilon is None else desc.epsilon,
            2.0 if desc.omega is None else desc.omega,
        )
    elif desc.family == "quadratic":
        d = quadratic(np.asarray(desc.matrix))
    elif desc.family == "symmetrized":
        if desc.base is None:
            raise InputDomainError("symmetrized descriptor needs a base density")
        d = symmetrize_complex(density_from_descriptor(desc.base), desc.angular_nodes)
    else:
        raise InputDomainError(f"descriptor family {desc.family!r} cannot be rebuilt")
    return d if desc.scale == 1.0 else rescaled(d, desc.scale)
