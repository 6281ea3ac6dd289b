"""
classifier.py - Regime classification of the exponent quad (p, q, r, s) of

    F(D2u, Du, u, x) = u^-p v^-q,   F(D2v, Dv, v, x) = u^-r v^-s,   u = v = 0 on the boundary,

into non-existence, existence (with the cone subcase), C1-regularity and uniqueness verdicts,
together with the predicted boundary rates of u and v.
"""
import itertools
import math
import typing
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

import nb_log

from sel_lab.exceptions import ContractViolation, UnsupportedRegimeError, NO_SOLUTION_WEIGHT
from sel_lab.sel_path import csv_text

logger = nb_log.get_logger('sel_lab.classifier')

EQ_TOL = 1e-9
RATE_MODELS = ("linear", "linear_logpow", "power", "power_of_log", "loglog")
SUBCASES = ("I", "II", "III", "IV", "V", "VI", "case3")
_MIRROR = {"N1": "N2", "N2": "N1", "N3": "N4", "N4": "N3", "E1": "E2", "E2": "E1", "E3": "E3"}


def _eq(a: float, b: float) -> bool:
    return abs(a - b) <= EQ_TOL


def _lt(a: float, b: float) -> bool:
    return a < b - EQ_TOL


def _le(a: float, b: float) -> bool:
    return a <= b + EQ_TOL


@dataclass(frozen=True)
class ExponentQuad:
    p: float
    q: float
    r: float
    s: float

    def __post_init__(self):
        for name in ("p", "q", "r", "s"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ContractViolation(f"Exponent {name} must be finite, got {value}.")
            object.__setattr__(self, name, value)
        if self.p < 0 or self.s < 0:
            raise ContractViolation(f"Need p, s >= 0, got p={self.p}, s={self.s}.")
        if self.q <= 0 or self.r <= 0:
            raise ContractViolation(f"Need q, r > 0 (the coupling exponents), got q={self.q}, r={self.r}.")

    @property
    def det(self) -> float:
        return (1 + self.p) * (1 + self.s) - self.q * self.r

    @property
    def alpha(self) -> float:
        return self.p + self.q * min(1.0, (2 - self.r) / (1 + self.s))

    @property
    def beta(self) -> float:
        return self.r + self.s * min(1.0, (2 - self.q) / (1 + self.p))

    @property
    def alpha_variant(self) -> float:
        """(p+q) min{1, (2-r)/(1+s)}: the alternative reading of alpha."""
        return (self.p + self.q) * min(1.0, (2 - self.r) / (1 + self.s))

    @property
    def beta_variant(self) -> float:
        return (self.r + self.s) * min(1.0, (2 - self.q) / (1 + self.p))

    @property
    def contraction_bound(self) -> float:
        """qr / ((1+p)(1+s)): the two-step contraction factor of the decoupled map."""
        return self.q * self.r / ((1 + self.p) * (1 + self.s))

    def swap(self) -> "ExponentQuad":
        """The quad of the system with the roles of u and v exchanged."""
        return ExponentQuad(self.s, self.r, self.q, self.p)

    def as_tuple(self) -> typing.Tuple[float, float, float, float]:
        return self.p, self.q, self.r, self.s

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "r": self.r, "s": self.s, "det": self.det,
                "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class RateSpec:
    """
    Boundary rate model u ~ rate(delta):
        linear         delta
        linear_logpow  delta * log^logpow(A/delta)
        power          delta^power * log^logpow(A/delta)
        power_of_log   log^logpow(A/delta)
        loglog         delta * (log log(A/delta))^logpow
    """

    model: str
    power: float = 1.0
    logpow: float = 0.0
    scale_A: float = math.e

    def __post_init__(self):
        if self.model not in RATE_MODELS:
            raise ContractViolation(f"Unknown rate model {self.model!r}; expected one of {RATE_MODELS}.")
        if self.model in ("linear", "linear_logpow", "loglog") and self.power != 1.0:
            object.__setattr__(self, "power", 1.0)
        if self.model == "power_of_log":
            object.__setattr__(self, "power", 0.0)
        if self.model == "power" and not 0 < self.power <= 1 + EQ_TOL:
            raise ContractViolation(f"A power rate needs 0 < power <= 1, got {self.power}.")

    def evaluate(self, delta: np.ndarray) -> np.ndarray:
        delta = np.asarray(delta, dtype=float)
        log_term = np.log(self.scale_A / delta)
        if self.model == "loglog":
            return delta * np.log(log_term) ** self.logpow
        out = delta ** self.power
        if self.logpow != 0:
            out = out * log_term ** self.logpow
        return out

    def with_scale(self, A: float) -> "RateSpec":
        return RateSpec(self.model, self.power, self.logpow, A)

    def to_dict(self) -> dict:
        return {"model": self.model, "power": self.power, "logpow": self.logpow, "scale_A": self.scale_A}


def predicted_rate(p_eff: float, q_eff: float, A: float = math.e, a_eff: float = 0.0) -> RateSpec:
    """
    Boundary rate of the positive solution of F(D2u, Du, u, x) = delta^-q log^-a(A/delta) u^-p.

    p+q < 1 gives a linear rate; p+q = 1 a logarithmic correction (1-a)/(1+p) (loglog when a = 1);
    p+q > 1 the power (2-q)/(1+p); q = 2 the pure log power (1-a)/(1+p), which needs a > 1.

    Example:
        >>> predicted_rate(3, 0.5).power
        0.375
    """
    p, q, a = float(p_eff), float(q_eff), float(a_eff)
    if _eq(q, 2.0):
        if a > 1 + EQ_TOL:
            return RateSpec("power_of_log", 0.0, (1 - a) / (1 + p), A)
        raise UnsupportedRegimeError(
            f"Weight exponent q = 2 with log power a = {a} <= 1 admits no positive solution.",
            result=NO_SOLUTION_WEIGHT,
        )
    if q > 2:
        raise UnsupportedRegimeError(
            f"Weight exponent q = {q} > 2 admits no positive solution.", result=NO_SOLUTION_WEIGHT
        )
    if _lt(p + q, 1.0):
        return RateSpec("linear", 1.0, 0.0, A)
    if _eq(p + q, 1.0):
        if _lt(a, 1.0):
            return RateSpec("linear_logpow", 1.0, (1 - a) / (1 + p), A)
        if _eq(a, 1.0):
            return RateSpec("loglog", 1.0, 1.0 / (1 + p), A)
        return RateSpec("linear", 1.0, 0.0, A)
    logpow = -a / (1 + p) if a != 0 else 0.0
    return RateSpec("power", (2 - q) / (1 + p), logpow, A)


def _component_rates(quad: ExponentQuad, A: float, max_rounds: int = 200):
    """
    Bootstrap the coupled rates: u sees the weight v^-q, v sees u^-r. Each rate is
    delta^rho log^theta, so u's effective exponents are q*rho_v and a = q*theta_v.
    """
    try:
        return _bootstrap(quad.p, quad.q, quad.r, quad.s, A, max_rounds)
    except UnsupportedRegimeError:
        # starting from a linear v can overshoot q_eff >= 2 when only u is known to be linear
        rate_v, rate_u = _bootstrap(quad.s, quad.r, quad.q, quad.p, A, max_rounds)
        return rate_u, rate_v


def _bootstrap(p, q, r, s, A, max_rounds):
    rho_u = rho_v = 1.0
    th_u = th_v = 0.0
    rate_u = rate_v = None
    for _ in range(max_rounds):
        rate_u = predicted_rate(p, q * rho_v, A, q * th_v)
        rate_v = predicted_rate(s, r * rate_u.power, A, r * rate_u.logpow)
        new = (rate_u.power, rate_u.logpow, rate_v.power, rate_v.logpow)
        if max(abs(x - y) for x, y in zip(new, (rho_u, th_u, rho_v, th_v))) < 1e-13:
            break
        rho_u, th_u, rho_v, th_v = new
    return rate_u, rate_v


@dataclass(frozen=True)
class RegimeReport:
    quad: ExponentQuad
    nonexistence: typing.Optional[str] = None
    nonexistence_all: typing.Tuple[str, ...] = ()
    existence: typing.Optional[str] = None
    subcase: typing.Optional[str] = None
    existence_all: typing.Tuple[str, ...] = ()
    subcase_by_case: typing.Dict[str, str] = field(default_factory=dict)
    u_c1: bool = False
    v_c1: bool = False
    both_c1: bool = False
    unique: bool = False
    rate_u: typing.Optional[RateSpec] = None
    rate_v: typing.Optional[RateSpec] = None
    alpha_variant_disagrees: bool = False
    findings: typing.Tuple[str, ...] = ()

    @property
    def verdict(self) -> str:
        if self.nonexistence and self.existence:
            return "contradictory"
        if self.nonexistence:
            return "nonexistent"
        if self.existence:
            return "existent"
        return "undetermined"

    def key(self) -> dict:
        """The comparable content of the report (used by the swap-symmetry check)."""
        return {
            "det": round(self.quad.det, 12),
            "nonexistence": tuple(sorted(self.nonexistence_all)),
            "existence": tuple(sorted(self.existence_all)),
            "subcases": tuple(sorted(self.subcase_by_case.items())),
            "c1": (self.u_c1, self.v_c1, self.both_c1),
            "unique": self.unique,
            "rates": (_rate_key(self.rate_u), _rate_key(self.rate_v)),
        }

    def mirror_key(self) -> dict:
        """key() of the report the swapped quad should produce."""
        return {
            "det": round(self.quad.det, 12),
            "nonexistence": tuple(sorted(_MIRROR[t] for t in self.nonexistence_all)),
            "existence": tuple(sorted(_MIRROR[t] for t in self.existence_all)),
            "subcases": tuple(sorted((_MIRROR[k], v) for k, v in self.subcase_by_case.items())),
            "c1": (self.v_c1, self.u_c1, self.both_c1),
            "unique": self.unique,
            "rates": (_rate_key(self.rate_v), _rate_key(self.rate_u)),
        }

    def to_dict(self) -> dict:
        return {
            "quad": self.quad.to_dict(),
            "alpha_variant": self.quad.alpha_variant,
            "beta_variant": self.quad.beta_variant,
            "verdict": self.verdict,
            "nonexistence": self.nonexistence,
            "nonexistence_all": list(self.nonexistence_all),
            "existence": self.existence,
            "subcase": self.subcase,
            "existence_all": list(self.existence_all),
            "u_c1": self.u_c1,
            "v_c1": self.v_c1,
            "both_c1": self.both_c1,
            "unique": self.unique,
            "rate_u": self.rate_u.to_dict() if self.rate_u else None,
            "rate_v": self.rate_v.to_dict() if self.rate_v else None,
            "alpha_variant_disagrees": self.alpha_variant_disagrees,
            "findings": list(self.findings),
        }


def _rate_key(rate: typing.Optional[RateSpec]):
    if rate is None:
        return None
    return rate.model, round(rate.power, 10), round(rate.logpow, 10)


def nonexistence_cases(quad: ExponentQuad) -> typing.Tuple[str, ...]:
    p, q, r, s = quad.as_tuple()
    cases = []
    if r * min(1.0, (2 - q) / (1 + p)) >= 2 - EQ_TOL:
        cases.append("N1")
    if q * min(1.0, (2 - r) / (1 + s)) >= 2 - EQ_TOL:
        cases.append("N2")
    if p > max(1.0, r - 1) and 2 * r > (1 - s) * (1 + p) and q * (1 + p - r) > (1 + p) * (1 + s):
        cases.append("N3")
    if s > max(1.0, q - 1) and 2 * q > (1 - p) * (1 + s) and r * (1 + s - q) > (1 + p) * (1 + s):
        cases.append("N4")
    return tuple(cases)


def existence_cases(quad: ExponentQuad, variant: bool = False) -> typing.Tuple[str, ...]:
    p, q, r, s = quad.as_tuple()
    if not quad.det > 0:
        return ()
    alpha = quad.alpha_variant if variant else quad.alpha
    beta = quad.beta_variant if variant else quad.beta
    cases = []
    if _le(alpha, 1.0) and r < 2:
        cases.append("E1")
    if _le(beta, 1.0) and q < 2:
        cases.append("E2")
    if p >= 1 and s >= 1 and q < 2 and r < 2:
        cases.append("E3")
    return tuple(cases)


def first_case_subcase(quad: ExponentQuad) -> str:
    """Subcase of existence case E1 from the (r+s, alpha) trichotomies."""
    rs = quad.r + quad.s
    at_one = _eq(quad.alpha, 1.0)
    if _eq(rs, 1.0):
        return "VI" if at_one else "II"
    if rs > 1:
        return "V" if at_one else "I"
    return "IV" if at_one else "III"


def classify(quad: ExponentQuad, A: float = math.e) -> RegimeReport:
    """
    Evaluate every non-existence, existence, C1 and uniqueness condition on ``quad``.

    Example:
        >>> classify(ExponentQuad(0.25, 0.25, 0.25, 0.25)).subcase
        'III'
    """
    p, q, r, s = quad.as_tuple()
    det = quad.det
    non = nonexistence_cases(quad)
    exist = existence_cases(quad)
    subcases = {}
    if "E1" in exist:
        subcases["E1"] = first_case_subcase(quad)
    if "E2" in exist:
        subcases["E2"] = first_case_subcase(quad.swap())
    if "E3" in exist:
        subcases["E3"] = "case3"
    existence = exist[0] if exist else None
    findings = []
    if non and exist:
        findings.append(f"quad {quad.as_tuple()} flagged both non-existent {non} and existent {exist}")
        logger.warning(findings[-1])
    variant_disagrees = bool(exist) != bool(existence_cases(quad, variant=True))
    if variant_disagrees:
        findings.append("the (p+q)min{...} reading of alpha/beta gives a different existence verdict")
    if "E1" in exist and _eq(quad.alpha, 1.0):
        findings.append("alpha = 1: existence without C1 regularity of u (boundary of the E1 region)")
    if "E2" in exist and _eq(quad.beta, 1.0):
        findings.append("beta = 1: existence without C1 regularity of v (boundary of the E2 region)")
    solvable = det > 0 and not non
    u_c1 = solvable and _lt(quad.alpha, 1.0) and r < 2
    v_c1 = solvable and _lt(quad.beta, 1.0) and q < 2
    both_c1 = solvable and _lt(p + q, 1.0) and _lt(r + s, 1.0)
    unique = det > 0 and ((_lt(p + q, 1.0) and r < 2) or (_lt(r + s, 1.0) and q < 2))
    rate_u = rate_v = None
    if exist:
        try:
            rate_u, rate_v = _component_rates(quad, A)
        except UnsupportedRegimeError as exc:
            findings.append(f"rate bootstrap left the solvable range: {exc.message}")
    return RegimeReport(
        quad=quad,
        nonexistence=non[0] if non else None,
        nonexistence_all=non,
        existence=existence,
        subcase=subcases.get(existence) if existence else None,
        existence_all=exist,
        subcase_by_case=subcases,
        u_c1=u_c1,
        v_c1=v_c1,
        both_c1=both_c1,
        unique=unique,
        rate_u=rate_u,
        rate_v=rate_v,
        alpha_variant_disagrees=variant_disagrees,
        findings=tuple(findings),
    )


def axis_values(spec: typing.Union[typing.Sequence[float], typing.Tuple[float, float, float]]) -> np.ndarray:
    """
    Values of one sweep axis: an explicit list, or {'start', 'stop', 'step'} (stop included).
    """
    if isinstance(spec, dict):
        start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        if not step > 0:
            raise ContractViolation(f"Sweep step must be > 0, got {step}.")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(count), 12)
    return np.asarray(list(spec), dtype=float)


def sweep_quads(ranges: typing.Dict[str, typing.Any]) -> typing.Tuple[typing.List[ExponentQuad], int]:
    """All valid quads of the Cartesian product, in p-major order, and the number skipped as invalid."""
    axes = [axis_values(ranges[name]) for name in ("p", "q", "r", "s")]
    quads, skipped = [], 0
    for p, q, r, s in itertools.product(*axes):
        if p < 0 or s < 0 or q <= 0 or r <= 0:
            skipped += 1
            continue
        quads.append(ExponentQuad(p, q, r, s))
    return quads, skipped


def _classify_chunk(quads: typing.List[ExponentQuad]) -> typing.List[RegimeReport]:
    return [classify(q) for q in quads]


def sweep(ranges: typing.Dict[str, typing.Any], jobs: int = 1, progress: bool = False) -> typing.List[RegimeReport]:
    """
    Classify the Cartesian product of the four exponent axes.
    Quads with q <= 0 or r <= 0 are outside the coupled family and are skipped.
    """
    quads, skipped = sweep_quads(ranges)
    if skipped:
        logger.info(f"Sweep skipped {skipped} quads with q <= 0 or r <= 0")
    if jobs <= 1:
        iterator = quads
        if progress:
            iterator = _progress(quads, "classify")
        return [classify(q) for q in iterator]
    from concurrent.futures import ProcessPoolExecutor

    size = max(1, len(quads) // (4 * jobs))
    chunks = [quads[i:i + size] for i in range(0, len(quads), size)]
    reports = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_classify_chunk, chunk) for chunk in chunks]
        if progress:
            futures = _progress(futures, "classify")
        for future in futures:
            reports.extend(future.result())
    return reports


def _progress(items, desc: str):
    try:
        from tqdm import tqdm
    except ImportError:
        raise ImportError("tqdm is required for progress bars. Please run 'pip install sel-lab[progress]'.")
    return tqdm(items, desc=desc, unit="item")


SWEEP_COLUMNS = (
    "p", "q", "r", "s", "det", "alpha", "beta", "alpha_variant", "beta_variant",
    "verdict", "nonexistence", "existence", "subcase", "u_c1", "v_c1", "both_c1", "unique",
    "alpha_variant_disagrees",
    "rate_u_model", "rate_u_power", "rate_u_logpow", "rate_v_model", "rate_v_power", "rate_v_logpow",
)


def sweep_rows(reports: typing.Iterable[RegimeReport]) -> typing.Iterator[list]:
    for rep in reports:
        q = rep.quad
        ru, rv = rep.rate_u, rep.rate_v
        yield [
            q.p, q.q, q.r, q.s, q.det, q.alpha, q.beta, q.alpha_variant, q.beta_variant,
            rep.verdict, rep.nonexistence, rep.existence, rep.subcase,
            rep.u_c1, rep.v_c1, rep.both_c1, rep.unique, rep.alpha_variant_disagrees,
            ru.model if ru else None, ru.power if ru else None, ru.logpow if ru else None,
            rv.model if rv else None, rv.power if rv else None, rv.logpow if rv else None,
        ]


def sweep_csv(reports: typing.Iterable[RegimeReport]) -> str:
    return csv_text(SWEEP_COLUMNS, sweep_rows(reports))


SweepAudit = namedtuple("SweepAudit", ["asymmetric", "contradictory", "missing_rates"])


def audit_sweep(reports: typing.Sequence[RegimeReport]) -> SweepAudit:
    """
    Swap symmetry, disjointness of the verdicts and rate totality over a sweep.
    Violations are returned as findings, never raised.
    """
    asymmetric, contradictory, missing = [], [], []
    for rep in reports:
        mirrored = classify(rep.quad.swap())
        if rep.mirror_key() != mirrored.key():
            asymmetric.append(rep.quad.as_tuple())
        if rep.nonexistence and rep.existence:
            contradictory.append(rep.quad.as_tuple())
        if rep.existence and (rep.rate_u is None or rep.rate_v is None):
            missing.append(rep.quad.as_tuple())
    return SweepAudit(asymmetric, contradictory, missing)
