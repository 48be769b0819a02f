"""
Command-line entry point for the isomorphic Busemann-Petty laboratory

Exit codes: 0 when every asserted bound holds, 1 when a bound or property
violation is detected, 2 on configuration or numerical failures.
"""

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Type

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from . import experiments, reports
from .ballbody import (
    NormAxiomReport,
    ball_body,
    klartag_ratio_study,
    section_identity_residual,
    verify_norm_axioms,
)
from .config import LabConfig, logger, runtime_snapshot
from .errors import BoundViolationError, ConfigError, LabError
from .geometry import (
    BodyDescriptor,
    StarBody,
    complex_lp,
    cross_polytope,
    cube,
    ellipsoid,
    euclidean_ball,
    lp_ball,
    random_directions,
    zonal,
)
from .measures import (
    DensityDescriptor,
    DensitySpec,
    cauchy,
    gaussian,
    laplace,
    lebesgue,
    student,
)
from .quadrature import Estimate, RuleSet
from .radon import (
    SphereFunction,
    ZonalCertificate,
    certify_zonal_body,
    intersection_body_of,
    radon_batch,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_FAILURE = 2

Kind = Literal[
    "bp-check",
    "complex-bp-check",
    "hyperplane",
    "counterexample",
    "const-section",
    "radon",
    "ballbody",
    "property-suite",
]

BODY_TOKENS = {
    "ball:N[:R]": "Euclidean ball of radius R in R^N",
    "cube:N": "cube [-1, 1]^N",
    "cross:N": "cross-polytope (l_1 ball) in R^N",
    "lp:P:N": "l_P ball in R^N (P may be inf)",
    "ellipsoid:a1,...,an": "axis-parallel ellipsoid with the given semiaxes",
    "clp:P:N": "complex l_P ball in C^N = R^{2N}",
    "ccube:N": "complex cube max |z_k| <= 1 in R^{2N}",
    "zonal:c0,c2,...": "body of revolution in R^3 with radius sum c_j P_{2j}(<theta, e_3>)",
}

DENSITY_TOKENS = {
    "lebesgue": "f = 1",
    "gaussian": "f(x) = exp(-|x|^2/2)",
    "laplace": "f(x) = exp(-|x|)",
    "cauchy:P": "f(x) = 1/(1+|x|^P)",
    "student[:BETA]": "f(x) = (1+|x|^2)^(-BETA), BETA defaults to (n+1)/2",
}


class RunConfig(BaseModel):
    """Validated experiment configuration; embedded verbatim in every report"""

    kind: Kind
    density: str = "gaussian"
    K: Optional[str] = None
    M: Optional[str] = None
    body: Optional[str] = None
    n: Optional[int] = Field(default=None, ge=2)
    p: Optional[float] = None
    t: List[float] = Field(default_factory=lambda: [10.0, 10.0**1.5, 100.0, 10.0**2.5, 1000.0])
    Lambda: Optional[float] = None
    dirs: Optional[int] = Field(default=None, ge=1)
    pairs: Optional[int] = Field(default=None, ge=1)
    trials: int = Field(default=10_000, ge=1)
    degree_cut: Optional[int] = Field(default=None, ge=0)
    seed: int = Field(default_factory=lambda: LabConfig.SEED)
    sphere_nodes: Optional[int] = Field(default=None, ge=2)
    subsphere_nodes: Optional[int] = Field(default=None, ge=2)
    radial_tol: Optional[float] = Field(default=None, gt=0.0)
    output_dir: str = Field(default_factory=lambda: LabConfig.OUTPUT_DIR)
    suite: bool = False
    all: bool = False
    plot: bool = False

    def rules(self) -> RuleSet:
        overrides = {
            key: value
            for key in ("sphere_nodes", "subsphere_nodes", "radial_tol")
            if (value := getattr(self, key)) is not None
        }
        return RuleSet(seed=self.seed, **overrides)


class RadonSweep(BaseModel):
    directions: int


class BallBodySummary(BaseModel):
    norm_axioms: NormAxiomReport
    identity_residuals: List[Estimate]
    ratio_min: float
    ratio_max: float
    global_ratio: float


def _number(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError(text)
    return value


def parse_body(token: str) -> StarBody:
    """Body token to StarBody; see BODY_TOKENS"""
    name, _, rest = token.partition(":")
    parts = rest.split(":") if rest else []
    try:
        if name == "ball" and len(parts) in (1, 2):
            radius = _number(parts[1]) if len(parts) == 2 else 1.0
            return euclidean_ball(int(parts[0]), radius)
        if name == "cube" and len(parts) == 1:
            return cube(int(parts[0]))
        if name == "cross" and len(parts) == 1:
            return cross_polytope(int(parts[0]))
        if name == "lp" and len(parts) == 2:
            return lp_ball(int(parts[1]), _number(parts[0]))
        if name == "ellipsoid" and len(parts) == 1:
            return ellipsoid([_number(a) for a in parts[0].split(",")])
        if name == "clp" and len(parts) == 2:
            return complex_lp(int(parts[1]), _number(parts[0]))
        if name == "ccube" and len(parts) == 1:
            return complex_lp(int(parts[0]), math.inf)
        if name == "zonal" and len(parts) == 1:
            coeffs = [_number(c) for c in parts[0].split(",")]
            return zonal(np.array([0.0, 0.0, 1.0]), legendre=coeffs)
    except ValueError as e:
        raise ConfigError(f"malformed body token {token!r}: {e}") from e
    raise ConfigError(f"unknown body token {token!r}")


def parse_density(token: str, n: int) -> DensitySpec:
    """Density token to DensitySpec in R^n; see DENSITY_TOKENS"""
    name, _, rest = token.partition(":")
    try:
        if name == "lebesgue" and not rest:
            return lebesgue(n)
        if name == "gaussian" and not rest:
            return gaussian(n)
        if name == "laplace" and not rest:
            return laplace(n)
        if name == "cauchy" and rest:
            return cauchy(n, _number(rest))
        if name == "student":
            return student(n, _number(rest) if rest else None)
    except ValueError as e:
        raise ConfigError(f"malformed density token {token!r}: {e}") from e
    raise ConfigError(f"unknown density token {token!r}")


def _require(value: Optional[str], flag: str) -> str:
    if value is None:
        raise ConfigError(f"{flag} is required for this experiment")
    return value


def _wrap(
    cfg: RunConfig, name: str, result: BaseModel, holds: Optional[bool]
) -> experiments.ExperimentReport:
    verdict = "not-assessed" if holds is None else ("holds" if holds else "violated")
    return experiments.ExperimentReport(
        experiment_id=name,
        kind=cfg.kind,
        config={"run": cfg.model_dump(mode="json"), "runtime": runtime_snapshot()},
        verdict=verdict,
        details=result.model_dump(mode="json"),
    )


def _bp(cfg: RunConfig) -> Tuple[BaseModel, str, Dict[str, list], List[Path]]:
    rules = cfg.rules()
    complex_case = cfg.kind == "complex-bp-check"
    name = f"{cfg.kind}-seed{cfg.seed}"
    if cfg.suite:
        suite_fn = experiments.complex_bp_suite if complex_case else experiments.bp_suite
        suite = suite_fn(
            pairs=cfg.pairs or (25 if complex_case else 100),
            seed=cfg.seed,
            rules=rules,
            n_dirs=cfg.dirs,
        )
        name = f"{suite.kind}-seed{cfg.seed}"
        plots = []
        if cfg.plot:
            plots.append(
                reports.plot_ratio_histogram(suite, Path(cfg.output_dir) / f"{name}.svg")
            )
        return suite, name, {"pairs": reports.suite_table(suite)}, plots

    K = parse_body(_require(cfg.K, "--K"))
    M = parse_body(_require(cfg.M, "--M"))
    density = parse_density(cfg.density, K.dim)
    check = experiments.complex_bp_check if complex_case else experiments.bp_check
    report = check(density, K, M, n_dirs=cfg.dirs, rules=rules, seed=cfg.seed)
    report.config["run"] = cfg.model_dump(mode="json")
    return report, name, {"directions": reports.direction_table(report)}, []


def run(cfg: RunConfig) -> int:
    """Execute one configured experiment and persist its outputs"""
    rules = cfg.rules()
    out = Path(cfg.output_dir)
    name = f"{cfg.kind}-seed{cfg.seed}"
    tables: Dict[str, list] = {}
    plots: List[Path] = []

    if cfg.kind in ("bp-check", "complex-bp-check"):
        result, name, tables, plots = _bp(cfg)
        if isinstance(result, experiments.ExperimentReport):
            report = result
            violated = report.violated
        else:
            report = _wrap(cfg, name, result, result.all_hold)
            violated = not result.all_hold

    elif cfg.kind == "hyperplane":
        K = parse_body(_require(cfg.K, "--K"))
        study = experiments.hyperplane_study(
            parse_density(cfg.density, K.dim), K, rules, cfg.seed, n_dirs=cfg.dirs or 64
        )
        report = _wrap(cfg, name, study, study.holds)
        violated = not study.holds

    elif cfg.kind == "counterexample":
        scan = experiments.counterexample_scan(cfg.n or 5, cfg.p or 2.0, cfg.t, rules)
        report = _wrap(cfg, name, scan, scan.strictly_decreasing)
        violated = not scan.strictly_decreasing
        tables["table"] = reports.counterexample_table(scan)
        if cfg.plot:
            plots.append(reports.plot_ratio_curve(scan, out / f"{name}.svg"))

    elif cfg.kind == "const-section":
        n = cfg.n or 3
        result = experiments.constant_section_body(
            parse_density(cfg.density, n), cfg.Lambda or math.pi, n, rules
        )
        report = _wrap(cfg, name, result, result.hyperplane_holds)
        violated = result.hyperplane_holds is False

    elif cfg.kind == "radon":
        body = parse_body(cfg.body or "zonal:1")
        if body.family.family == "zonal":
            certificate = certify_zonal_body(body, cfg.degree_cut)
            report = _wrap(cfg, name, certificate, None)
        else:
            directions = random_directions(body.dim, cfg.dirs or 32, cfg.seed)
            transform = SphereFunction.body_power(body, body.dim - 1)
            estimates = radon_batch(transform, directions, rules)
            intersection = intersection_body_of(body, rules)
            radii = intersection.radii(directions)
            tables["radon"] = reports.sweep_table(directions, estimates)
            for row, radius in zip(tables["radon"], radii):
                row["intersection_radius"] = float(radius)
            report = _wrap(cfg, name, RadonSweep(directions=len(estimates)), None)
        violated = False

    elif cfg.kind == "ballbody":
        K = parse_body(cfg.body or _require(cfg.K, "--body"))
        density = parse_density(cfg.density, K.dim)
        directions = random_directions(K.dim, cfg.dirs or 20, cfg.seed)
        Kf = ball_body(K, density, rules.radial())
        axioms = verify_norm_axioms(Kf, cfg.trials, cfg.seed)
        identity = [section_identity_residual(K, density, xi, rules) for xi in directions]
        study = klartag_ratio_study(density, K, directions, rules)
        summary = BallBodySummary(
            norm_axioms=axioms,
            identity_residuals=identity,
            ratio_min=study.min,
            ratio_max=study.max,
            global_ratio=study.global_ratio.value,
        )
        identity_ok = all(e.compatible_with_zero() for e in identity)
        guaranteed = K.convex and density.is_convex_measure
        holds = identity_ok and study.positive_finite
        if guaranteed:
            holds = holds and axioms.triangle_violations == 0
        report = _wrap(cfg, name, summary, holds)
        violated = not holds
        tables["identity"] = reports.sweep_table(directions, identity)

    else:
        result = experiments.property_suite(
            cfg.trials if cfg.all else min(cfg.trials, 1000), cfg.seed, rules
        )
        report = _wrap(cfg, name, result, result.passed)
        violated = not result.passed

    written = reports.persist(report, name, out, tables) + plots
    print(
        json.dumps(
            {
                "experiment_id": name,
                "verdict": report.verdict,
                "files": [str(p) for p in written],
            }
        )
    )
    return EXIT_VIOLATION if violated else EXIT_OK


REPORT_MODELS: Dict[str, Type[BaseModel]] = {
    "ExperimentReport": experiments.ExperimentReport,
    "RunConfig": RunConfig,
    "SuiteReport": experiments.SuiteReport,
    "HyperplaneStudy": experiments.HyperplaneStudy,
    "CounterexampleScan": experiments.CounterexampleScan,
    "ConstantSectionBody": experiments.ConstantSectionBody,
    "PropertySuiteReport": experiments.PropertySuiteReport,
    "ZonalCertificate": ZonalCertificate,
    "BallBodySummary": BallBodySummary,
    "RadonSweep": RadonSweep,
}

SCHEMAS: Dict[str, Callable[[], Dict[str, Any]]] = {
    **{name: model.model_json_schema for name, model in REPORT_MODELS.items()},
    "BodyDescriptor": lambda: TypeAdapter(BodyDescriptor).json_schema(),
    "DensityDescriptor": lambda: DensityDescriptor.model_json_schema(),
}


def write_schemas(directory: Path) -> List[Path]:
    """Write one <Model>.json per report model; the committed schemas/ directory is this output"""
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, model in REPORT_MODELS.items():
        path = directory / f"{name}.json"
        path.write_text(json.dumps(model.model_json_schema(), indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isobp", description="Isomorphic Busemann-Petty numerical laboratory"
    )
    parser.add_argument("--list-bodies", action="store_true", help="List body tokens")
    parser.add_argument("--list-densities", action="store_true", help="List density tokens")
    sub = parser.add_subparsers(dest="kind")

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="JSON RunConfig file; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--sphere-nodes", dest="sphere_nodes", type=int)
        p.add_argument("--subsphere-nodes", dest="subsphere_nodes", type=int)
        p.add_argument("--radial-tol", dest="radial_tol", type=float)
        p.add_argument("--plot", action="store_true", default=None)

    for kind in ("bp-check", "complex-bp-check"):
        p = sub.add_parser(kind, help=f"{kind.replace('-', ' ')} of mu(K)/mu(M)")
        common(p)
        p.add_argument("--density")
        p.add_argument("--K")
        p.add_argument("--M")
        p.add_argument("--dirs", type=int)
        p.add_argument("--suite", action="store_true", default=None)
        p.add_argument("--pairs", type=int)

    p = sub.add_parser("hyperplane", help="hyperplane inequality study")
    common(p)
    p.add_argument("--density")
    p.add_argument("--K")
    p.add_argument("--dirs", type=int)

    p = sub.add_parser("counterexample", help="section ratio scan for 1/(1+|x|^p)")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--t", type=lambda s: [float(v) for v in s.split(",")])

    p = sub.add_parser("const-section", help="ball with constant section measure Lambda")
    common(p)
    p.add_argument("--density")
    p.add_argument("--n", type=int)
    p.add_argument("--Lambda", type=float)

    p = sub.add_parser("radon", help="zonal certificate or Radon sweep of a body")
    common(p)
    p.add_argument("--body")
    p.add_argument("--degree-cut", dest="degree_cut", type=int)
    p.add_argument("--dirs", type=int)

    p = sub.add_parser("ballbody", help="K_f norm axioms, section identity and ratios")
    common(p)
    p.add_argument("--body")
    p.add_argument("--density")
    p.add_argument("--dirs", type=int)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("property-suite", help="lemma, self-duality and K_f property suites")
    common(p)
    p.add_argument("--all", action="store_true", default=None)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("schema", help="print a JSON schema or write all report schemas")
    p.add_argument("model", nargs="?", choices=sorted(SCHEMAS))
    p.add_argument("--write", type=Path, help="directory for <Model>.json files")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    data: Dict[str, Any] = {}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        try:
            data = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {config_path}: {e}") from e
    for key, value in vars(args).items():
        if key in ("config", "list_bodies", "list_densities") or value is None:
            continue
        data[key] = value
    return RunConfig.model_validate(data)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.list_bodies or args.list_densities:
        listing = BODY_TOKENS if args.list_bodies else DENSITY_TOKENS
        for token, text in listing.items():
            print(f"{token:24s} {text}")
        return EXIT_OK
    if args.kind is None:
        parser.print_help()
        return EXIT_FAILURE
    if args.kind == "schema":
        if args.write is not None:
            for path in write_schemas(args.write):
                print(path)
            return EXIT_OK
        if args.model is None:
            print("schema needs a model name or --write DIR", file=sys.stderr)
            return EXIT_FAILURE
        print(json.dumps(SCHEMAS[args.model](), indent=2))
        return EXIT_OK

    try:
        cfg = _load_config(args)
        return run(cfg)
    except ValidationError as e:
        logger.error("Invalid run configuration", extra={"extra_fields": {"errors": e.errors()}})
        print(f"invalid configuration: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except BoundViolationError as e:
        print(f"bound violation: {e}", file=sys.stderr)
        return EXIT_VIOLATION
    except LabError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
