"""
cli.py - Batch front door: configuration, orchestration of one experiment, artifacts.

    sel-lab classify --p 0.25 --q 0.25 --r 0.25 --s 0.25
    sel-lab solve-scalar --config configs/scalar_power.json --n 1600
    sel-lab acceptance --quick --jobs 4

Precedence of settings: command-line flags > config file > $SEL_OUTPUT_DIR (output directory only) > defaults.
Exit status: 0 success, 2 configuration, 3 solver failure or failed acceptance, 4 unsupported regime.
"""
import argparse
import csv
import dataclasses
import datetime
import io
import json
import sys
import typing
from dataclasses import dataclass, field

import numpy as np

import nb_log

from sel_lab import __version__
from sel_lab.exceptions import ConfigError, IterationError, SelLabError
from sel_lab.geometry import Domain, GridFunction, build_grid
from sel_lab.operators import OperatorSpec
from sel_lab.sel_path import SelPath, csv_text

logger = nb_log.get_logger('sel_lab.cli')

COMMANDS = ("classify", "sweep", "eigen", "barrier", "solve-scalar", "solve-system", "rates", "acceptance")


@dataclass
class OperatorSection:
    lam: float = 1.0
    Lam: float = 1.0
    pucci_sign: str = "plus"
    Gamma: float = 0.0
    gamma: float = 0.0
    drift: typing.Optional[typing.List[float]] = None
    zeroth: float = 0.0


@dataclass
class DomainSection:
    kind: str = "interval"
    extents: typing.List[float] = field(default_factory=lambda: [0.0, 1.0])
    n: typing.Union[int, typing.List[int]] = 401
    grading: str = "boundary_graded"
    strength: float = 1.0


@dataclass
class ExponentsSection:
    p: float = 0.25
    q: float = 0.25
    r: float = 0.25
    s: float = 0.25


@dataclass
class WeightSection:
    form: str = "power"
    q_w: float = 0.0
    a_w: float = 0.0
    A_w: typing.Optional[float] = None


@dataclass
class SolverSection:
    tol: float = 1e-8
    max_iter: int = 50
    epsilon0: float = 1.0
    epsilon_ratio: float = 0.25
    epsilon_min: float = 1e-10
    step_floor: float = 2.0 ** -20
    clamp: bool = False
    jobs: int = 1
    progress: bool = False


@dataclass
class OutputSection:
    dir: typing.Optional[str] = None
    formats: typing.List[str] = field(default_factory=lambda: ["json", "csv"])


@dataclass
class SweepSection:
    p: typing.Any = field(default_factory=lambda: {"start": 0.0, "stop": 2.0, "step": 0.25})
    q: typing.Any = field(default_factory=lambda: {"start": 0.25, "stop": 2.25, "step": 0.25})
    r: typing.Any = field(default_factory=lambda: {"start": 0.25, "stop": 2.25, "step": 0.25})
    s: typing.Any = field(default_factory=lambda: {"start": 0.0, "stop": 2.0, "step": 0.25})


@dataclass
class BarrierSection:
    alpha_ode: float = 0.3
    beta_ode: float = 0.4
    b: float = 0.5
    n: int = 2000


@dataclass
class RatesSection:
    input: typing.Optional[str] = None
    model: str = "linear"
    power: float = 1.0
    logpow: float = 0.0
    scale_A: float = float(np.e)
    fit_scale: bool = False


@dataclass
class AcceptanceSection:
    quick: bool = False
    items: typing.List[str] = field(default_factory=list)


_SECTIONS = {
    "operator": OperatorSection,
    "domain": DomainSection,
    "exponents": ExponentsSection,
    "weight": WeightSection,
    "solver": SolverSection,
    "output": OutputSection,
    "sweep": SweepSection,
    "barrier": BarrierSection,
    "rates": RatesSection,
    "acceptance": AcceptanceSection,
}


@dataclass
class RunConfig:
    command: str = "classify"
    operator: OperatorSection = field(default_factory=OperatorSection)
    domain: DomainSection = field(default_factory=DomainSection)
    exponents: ExponentsSection = field(default_factory=ExponentsSection)
    weight: WeightSection = field(default_factory=WeightSection)
    solver: SolverSection = field(default_factory=SolverSection)
    output: OutputSection = field(default_factory=OutputSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    barrier: BarrierSection = field(default_factory=BarrierSection)
    rates: RatesSection = field(default_factory=RatesSection)
    acceptance: AcceptanceSection = field(default_factory=AcceptanceSection)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Build a config from a nested dict; unknown sections or keys raise ConfigError."""
        if not isinstance(data, dict):
            raise ConfigError(f"A run config must be a JSON object, got {type(data).__name__}.")
        unknown = sorted(set(data) - set(_SECTIONS) - {"command"})
        if unknown:
            raise ConfigError(f"Unknown config sections {unknown}; expected 'command' or one of {list(_SECTIONS)}.",
                              keys=",".join(unknown))
        kwargs = {}
        for name, section_cls in _SECTIONS.items():
            kwargs[name] = _section(section_cls, data.get(name, {}), name)
        config = cls(command=data.get("command", "classify"), **kwargs)
        config.validate()
        return config

    @classmethod
    def load(cls, path: typing.Union[str, SelPath]) -> "RunConfig":
        path = SelPath(path)
        if not path.is_file():
            raise ConfigError(f"{path} is not a file.", path=str(path))
        try:
            data = path.read_json()
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}", path=str(path))
        return cls.from_dict(data)

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command {self.command!r}; expected one of {COMMANDS}.")
        solver = self.solver
        if not solver.tol > 0:
            raise ConfigError(f"solver.tol must be > 0, got {solver.tol}.")
        if solver.max_iter < 1 or solver.jobs < 1:
            raise ConfigError(f"solver.max_iter and solver.jobs must be >= 1, got {solver.max_iter}, {solver.jobs}.")
        if not 0 < solver.epsilon_ratio < 1:
            raise ConfigError(f"solver.epsilon_ratio must lie in (0, 1), got {solver.epsilon_ratio}.")
        unknown_formats = sorted(set(self.output.formats) - {"json", "csv"})
        if unknown_formats:
            raise ConfigError(f"Unknown output formats {unknown_formats}; expected 'json' and/or 'csv'.")
        if self.domain.kind not in ("interval", "rectangle", "disk"):
            raise ConfigError(f"Unknown domain kind {self.domain.kind!r}.")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _matches(value, hint) -> bool:
    """Whether a decoded JSON value fits a section field annotation."""
    if hint is typing.Any:
        return True
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        return any(_matches(value, arg) for arg in typing.get_args(hint))
    if origin is list:
        (item,) = typing.get_args(hint)
        return isinstance(value, list) and all(_matches(v, item) for v in value)
    if hint is type(None):
        return value is None
    if isinstance(value, bool):
        return hint is bool
    if hint is float:
        return isinstance(value, (int, float))
    if hint is int:
        return isinstance(value, int) or (isinstance(value, float) and value.is_integer())
    return isinstance(value, hint)


def _section(section_cls, data: dict, name: str):
    if not isinstance(data, dict):
        raise ConfigError(f"Config section {name!r} must be an object, got {type(data).__name__}.")
    known = {f.name for f in dataclasses.fields(section_cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown keys {unknown} in section {name!r}; expected some of {sorted(known)}.",
                          section=name, keys=",".join(unknown))
    hints = typing.get_type_hints(section_cls)
    for key, value in data.items():
        if not _matches(value, hints[key]):
            raise ConfigError(f"{name}.{key} = {value!r} does not match the expected type {hints[key]}.",
                              section=name, key=key)
    return section_cls(**data)


# (flag dest, section, key)
_FLAG_TARGETS = (
    ("output", "output", "dir"),
    ("n", "domain", "n"),
    ("grading", "domain", "grading"),
    ("strength", "domain", "strength"),
    ("p", "exponents", "p"),
    ("q", "exponents", "q"),
    ("r", "exponents", "r"),
    ("s", "exponents", "s"),
    ("form", "weight", "form"),
    ("q_w", "weight", "q_w"),
    ("a_w", "weight", "a_w"),
    ("tol", "solver", "tol"),
    ("max_iter", "solver", "max_iter"),
    ("jobs", "solver", "jobs"),
    ("progress", "solver", "progress"),
    ("clamp", "solver", "clamp"),
    ("alpha_ode", "barrier", "alpha_ode"),
    ("beta_ode", "barrier", "beta_ode"),
    ("b", "barrier", "b"),
    ("input", "rates", "input"),
    ("model", "rates", "model"),
    ("quick", "acceptance", "quick"),
)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config; flags override its values")
    common.add_argument("--output", help="output directory (default $SEL_OUTPUT_DIR, then ./sel_output)")
    grid = common.add_argument_group("grid")
    grid.add_argument("--n", type=int, help="nodes per axis")
    grid.add_argument("--grading", choices=("uniform", "boundary_graded"))
    grid.add_argument("--strength", type=float, help="grading strength k in [0, 4]")
    exps = common.add_argument_group("exponents")
    for name in ("p", "q", "r", "s"):
        exps.add_argument(f"--{name}", type=float)
    weight = common.add_argument_group("weight")
    weight.add_argument("--form", choices=("power", "power_log", "loglog_free"))
    weight.add_argument("--q-w", dest="q_w", type=float)
    weight.add_argument("--a-w", dest="a_w", type=float)
    solver = common.add_argument_group("solver")
    solver.add_argument("--tol", type=float)
    solver.add_argument("--max-iter", dest="max_iter", type=int)
    solver.add_argument("--jobs", type=int, help="worker processes for sweeps and acceptance items")
    solver.add_argument("--progress", action="store_true", default=None, help="tqdm progress bar for sweeps")
    solver.add_argument("--clamp", action="store_true", default=None, help="project Picard iterates onto the cone")

    parser = argparse.ArgumentParser(prog="sel-lab", description="Singular elliptic systems laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("classify", "sweep", "eigen", "solve-scalar", "solve-system"):
        sub.add_parser(name, parents=[common])
    barrier = sub.add_parser("barrier", parents=[common])
    barrier.add_argument("--alpha-ode", dest="alpha_ode", type=float)
    barrier.add_argument("--beta-ode", dest="beta_ode", type=float)
    barrier.add_argument("--b", type=float)
    rates = sub.add_parser("rates", parents=[common])
    rates.add_argument("--input", help="CSV with columns delta and value")
    rates.add_argument("--model", choices=("linear", "linear_logpow", "power", "power_of_log", "loglog"))
    acceptance = sub.add_parser("acceptance", parents=[common])
    acceptance.add_argument("--quick", action="store_true", default=None, help="reduced resolutions")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    config.command = args.command
    for dest, section, key in _FLAG_TARGETS:
        value = getattr(args, dest, None)
        if value is not None:
            setattr(getattr(config, section), key, value)
    config.validate()
    return config


def _operator(config: RunConfig) -> OperatorSpec:
    return OperatorSpec(**dataclasses.asdict(config.operator))


def _domain(config: RunConfig) -> Domain:
    d = config.domain
    factory = {"interval": Domain.interval, "rectangle": Domain.rectangle, "disk": Domain.disk}[d.kind]
    return factory(*d.extents)


def _grid(config: RunConfig):
    d = config.domain
    return build_grid(_domain(config), d.n, d.grading, d.strength)


def _quad(config: RunConfig):
    from sel_lab.classifier import ExponentQuad

    e = config.exponents
    return ExponentQuad(e.p, e.q, e.r, e.s)


def _weight(config: RunConfig):
    from sel_lab.scalar_solver import WeightSpec

    return WeightSpec(**dataclasses.asdict(config.weight))


# Every runner returns (results dict, {csv name: csv text}, ok flag).

def run_classify(config: RunConfig):
    from sel_lab.classifier import classify

    report = classify(_quad(config))
    return report.to_dict(), {}, True


def run_sweep(config: RunConfig):
    from sel_lab.classifier import audit_sweep, sweep, sweep_csv

    reports = sweep(dataclasses.asdict(config.sweep), config.solver.jobs, config.solver.progress)
    audit = audit_sweep(reports)
    results = {
        "quads": len(reports),
        "asymmetric": [list(q) for q in audit.asymmetric],
        "contradictory": [list(q) for q in audit.contradictory],
        "missing_rates": [list(q) for q in audit.missing_rates],
    }
    for kind in ("asymmetric", "contradictory"):
        if results[kind]:
            logger.warning(f"Sweep found {len(results[kind])} {kind} quads")
    return results, {"sweep.csv": sweep_csv(reports)}, True


def run_eigen(config: RunConfig):
    from sel_lab.eigensolver import principal_eigenpair, verify_eigen_bounds

    grid = _grid(config)
    pair = principal_eigenpair(_operator(config), grid, config.solver.tol, max(config.solver.max_iter, 200))
    bounds = verify_eigen_bounds(pair, grid)
    return pair.summary(bounds), {"phi.csv": pair.phi.to_csv()}, True


def run_barrier(config: RunConfig):
    from sel_lab.barrier import solve_barrier_ode

    b = config.barrier
    sol = solve_barrier_ode(b.alpha_ode, b.beta_ode, b.b, b.n)
    return sol.summary(), {"barrier.csv": sol.to_csv()}, True


def run_solve_scalar(config: RunConfig):
    from sel_lab.classifier import predicted_rate
    from sel_lab.exceptions import LayerError, UnsupportedRegimeError
    from sel_lab.rates import compare, fit_rate, rate_table
    from sel_lab.scalar_solver import epsilon_schedule, integral_criterion, solve_scalar_singular

    grid = _grid(config)
    weight = _weight(config)
    s = config.solver
    p = config.exponents.p
    res = solve_scalar_singular(
        _operator(config), grid, p, weight, s.tol, s.max_iter,
        epsilons=epsilon_schedule(s.epsilon0, s.epsilon_ratio, s.epsilon_min), step_floor=s.step_floor,
    )
    results = {"p": p, "weight": weight.to_dict(), "integral": integral_criterion(weight, grid.domain)}
    results.update(res.summary())
    tables = {"u.csv": res.u.to_csv()}
    try:
        predicted = predicted_rate(p, weight.q_w, weight.scale(grid.domain), weight.a_w)
        fit = fit_rate(res.u, grid, predicted, fit_scale=predicted.logpow != 0)
        cmp = compare(fit, predicted)
        results.update(predicted=predicted.to_dict(), fit=fit.to_dict(), comparison=cmp._asdict())
        tables["rates.csv"] = rate_table([("u", fit, predicted, cmp)])
    except (LayerError, UnsupportedRegimeError) as exc:
        logger.warning(f"No rate comparison for this solve: {exc.message}")
        results["rate_error"] = exc.message
    return results, tables, True


def run_solve_system(config: RunConfig):
    from sel_lab.classifier import classify
    from sel_lab.system_solver import solve_system, system_residual

    grid = _grid(config)
    quad = _quad(config)
    s = config.solver
    res = solve_system(_operator(config), grid, quad, s.tol, max(s.max_iter, 60), s.clamp, s.jobs)
    residual = system_residual(_operator(config), grid, res.u, res.v, quad)
    results = {"quad": quad.to_dict(), "regime": classify(quad).to_dict()}
    results.update(res.summary())
    results["residual"] = residual._asdict()
    values = np.column_stack([res.u.values, res.v.values])
    header = ["x"] if grid.dim == 1 else ["x", "y"]
    rows = (list(grid.nodes[k]) + [float(grid.delta[k]), float(values[k, 0]), float(values[k, 1])]
            for k in range(grid.n_nodes))
    return results, {"solution.csv": csv_text(header + ["delta", "u", "v"], rows)}, res.converged


def _read_layer_csv(path: str) -> typing.Tuple[np.ndarray, np.ndarray]:
    source = SelPath(path)
    if not source.is_file():
        raise ConfigError(f"{source} is not a file.", path=str(source))
    reader = csv.DictReader(io.StringIO(source.read_text()))
    if not reader.fieldnames or not {"delta", "value"} <= set(reader.fieldnames):
        raise ConfigError(f"{source} needs the columns 'delta' and 'value', got {reader.fieldnames}.")
    rows = [(float(r["delta"]), float(r["value"])) for r in reader]
    data = np.array(rows, dtype=float).reshape(-1, 2)
    return data[:, 0], data[:, 1]


def run_rates(config: RunConfig):
    from sel_lab.classifier import RateSpec
    from sel_lab.rates import fit_rate_arrays

    r = config.rates
    if not r.input:
        raise ConfigError("The rates command needs an input CSV (--input or rates.input).")
    delta, values = _read_layer_csv(r.input)
    model = RateSpec(r.model, r.power, r.logpow, r.scale_A)
    fit = fit_rate_arrays(delta, values, model, fit_scale=r.fit_scale)
    table = csv_text(("model", "fitted_power", "fitted_logpow", "r_squared", "scale_A", "n_points"),
                     [(fit.model, fit.fitted_power, fit.fitted_logpow, fit.r_squared, fit.scale_A, fit.n_points)])
    return fit.to_dict(), {"rates.csv": table}, True


def run_acceptance(config: RunConfig):
    from sel_lab.acceptance import acceptance_csv, run_acceptance as run_suite

    rows = run_suite(config.acceptance.items, config.acceptance.quick, config.solver.jobs)
    failed = [f"{r.item}: {r.check}" for r in rows if not r.passed]
    results = {"checks": len(rows), "passed": len(rows) - len(failed), "failed": failed,
               "quick": config.acceptance.quick}
    return results, {"acceptance.csv": acceptance_csv(rows)}, not failed


RUNNERS = {
    "classify": run_classify,
    "sweep": run_sweep,
    "eigen": run_eigen,
    "barrier": run_barrier,
    "solve-scalar": run_solve_scalar,
    "solve-system": run_solve_system,
    "rates": run_rates,
    "acceptance": run_acceptance,
}


def emit_report(out_dir: SelPath, config: RunConfig, results: dict, tables: typing.Dict[str, str],
                partial: bool = False) -> typing.List[SelPath]:
    """
    Write summary.json and the CSV tables under ``out_dir``. Apart from ``timestamp`` the
    files are byte-identical across runs of the same config.
    """
    written = []
    formats = set(config.output.formats)
    if "json" in formats:
        summary = {
            "version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
            "command": config.command,
            "config": config.to_dict(),
            "results": results,
        }
        path = out_dir / "summary.json"
        written.append((path.as_partial() if partial else path).write_json(_jsonable(summary)))
    if "csv" in formats:
        for name, text in tables.items():
            path = out_dir / name
            written.append((path.as_partial() if partial else path).write_csv_text(text))
    for path in written:
        logger.info(f"Wrote {path}")
    return written


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def _partial_tables(exc: IterationError) -> typing.Dict[str, str]:
    last = exc.last_iterate
    if isinstance(last, GridFunction):
        return {"last_iterate.csv": last.to_csv()}
    if isinstance(last, np.ndarray):
        return {"last_iterate.csv": csv_text(["value"], ([float(v)] for v in np.ravel(last)))}
    return {}


def run(config: RunConfig) -> int:
    """Execute the configured command, write its artifacts and return the exit status."""
    out_dir = SelPath.output_dir(config.output.dir)
    try:
        results, tables, ok = RUNNERS[config.command](config)
    except SelLabError as exc:
        payload = exc.to_payload()
        logger.error(f"{config.command} failed with {payload['error']}: {exc.message}")
        if isinstance(exc, IterationError):
            emit_report(out_dir, config, {"error": payload}, _partial_tables(exc), partial=True)
        print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)
        return exc.exit_code
    emit_report(out_dir, config, results, tables)
    if not ok:
        logger.error(f"{config.command} finished without meeting its convergence or acceptance criteria")
        return 3
    return 0


def main(argv: typing.Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        logger.error(f"Invalid configuration: {exc.message}")
        print(json.dumps(exc.to_payload(), ensure_ascii=False), file=sys.stderr)
        return exc.exit_code
    except (TypeError, ValueError) as exc:
        error = ConfigError(f"Invalid configuration: {exc}")
        logger.error(error.message)
        print(json.dumps(error.to_payload(), ensure_ascii=False), file=sys.stderr)
        return error.exit_code
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
