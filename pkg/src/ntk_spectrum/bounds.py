"""Closed-form eigenvalue bounds, truncation-degree selection, width requirements.

Every constant hidden behind an asymptotic inequality is an explicit argument
defaulting to 1.0, and reports record which values were used.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from .errors import DomainError
from .specfun import Activation, funk_hecke_coeff, harmonic_count

SQRT2 = math.sqrt(2.0)
WIDTH_SATURATION = 2**31


@dataclass(frozen=True)
class BoundConstants:
    """Universal constants left unspecified by the asymptotic statements."""

    truncation: float = 1.0
    width_shallow: float = 1.0
    width_deep_first: float = 1.0
    width_deep_last: float = 1.0
    cap: float = 1.0

    @classmethod
    def from_dict(cls, obj: dict | None) -> "BoundConstants":
        obj = dict(obj or {})
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown constants: {sorted(unknown)}")
        consts = cls(**{k: float(v) for k, v in obj.items()})
        for k, v in asdict(consts).items():
            if not v > 0:
                raise DomainError(f"constant {k} must be positive")
        return consts


@dataclass(frozen=True)
class RegimePlan:
    """Truncation degree chosen by the three-case analysis.

    ``N`` counts the harmonics of degree ``2r + beta`` for ``r <= R``.
    """

    case_id: int
    R: int
    N: int
    universal_const: float
    beta: int = 1


@dataclass
class BoundReport:
    """Theoretical bracket for one dataset, optionally with the measured eigenvalue."""

    d: int
    n: int
    delta: float
    delta_prime: float
    eps: float
    lambda_lower: float
    lambda_upper: float
    d1_required: int
    regime: RegimePlan
    c_min_sq: float
    constants: BoundConstants = field(default_factory=BoundConstants)
    saturated: bool = False
    empirical_lambda_min: float | None = None
    ratio_lower: float | None = None
    ratio_upper: float | None = None

    def with_empirical(self, lambda_min: float) -> "BoundReport":
        self.empirical_lambda_min = float(lambda_min)
        self.ratio_lower = lambda_min / self.lambda_lower
        self.ratio_upper = lambda_min / self.lambda_upper
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _prefactor(d: int, delta: float) -> float:
    # log(1/delta) is clamped at 0: for delta > 1 the raw base can reach zero or go negative
    return (1.0 + d * max(math.log(1.0 / delta), 0.0) / math.log(d)) ** -3


def shallow_lambda_lower(d: int, delta: float) -> float:
    """Lower-bound scale for the shallow NTK eigenvalue, ``delta`` in ``(0, sqrt 2)``."""
    if d < 3:
        raise DomainError(f"need d >= 3, got {d}")
    if not 0.0 < delta < SQRT2:
        raise DomainError(f"shallow bound needs delta in (0, sqrt 2), got {delta}")
    return _prefactor(d, delta) * delta**2


def deep_lambda_lower(d0: int, delta: float) -> float:
    """Lower-bound scale for the deep NTK eigenvalue, ``delta`` in ``(0, sqrt 2]``."""
    if d0 < 3:
        raise DomainError(f"need d0 >= 3, got {d0}")
    if not 0.0 < delta <= SQRT2:
        raise DomainError(f"deep bound needs delta in (0, sqrt 2], got {delta}")
    return _prefactor(d0, delta) * delta**4


def uniform_bounds(d: int, n: int, eps: float) -> tuple[float, float]:
    """Eigenvalue bracket for ``n`` uniform points holding with probability ``1 - eps``."""
    if d < 3 or n < 2:
        raise DomainError(f"need d >= 3 and n >= 2, got d={d}, n={n}")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    lam = (1.0 + math.log(n / eps) / math.log(d)) ** -3 * (eps**2 / n**4) ** (1.0 / (d - 1))
    upper = (math.log(1.0 / eps) / n**2) ** (1.0 / (d - 1))
    return lam, upper


def select_truncation(d: int, delta: float, beta: int = 1,
                      universal_const: float = 1.0) -> RegimePlan:
    """Pick the harmonic truncation degree ``R`` by the first case whose guard holds."""
    if d < 3:
        raise DomainError(f"need d >= 3, got {d}")
    if not 0.0 < delta < SQRT2:
        raise DomainError(f"delta must lie in (0, sqrt 2), got {delta}")
    if not universal_const > 0:
        raise DomainError("universal_const must be positive")
    if beta not in (0, 1):
        raise DomainError("beta must be 0 or 1")
    C = universal_const
    log_guard = math.log(C) - (d - 2) / 2.0 * math.log(delta**4 / 2.0)
    if math.log(d) >= log_guard:
        case, R = 1, 1
    elif math.sqrt(d) * math.log(d) >= (8.0 * math.log1p(C) + 16.0 * d) * math.log(2.0 / delta):
        case = 2
        R = math.ceil((math.log1p(C) + 2.0 * d * math.log(2.0 / delta)) / math.log(d))
        assert R <= math.sqrt(d) / 4.0, "case-2 degree exceeds sqrt(d)/4"
    else:
        case = 3
        R = math.ceil((1.0 + 2.0 * C) * d * (2.0 / delta) ** (2.0 * (d - 2) / (d - 1)))
    return RegimePlan(case, R, harmonic_count(R, beta, d), C, beta)


def implicit_transform_rate(d: int, R: int, psi: Activation) -> float:
    """Decay rate of the hemisphere transform bound at truncation degree ``R``."""
    psi = Activation.parse(psi)
    if R < 1 or d < 1:
        raise DomainError("need R >= 1 and d >= 1")
    if psi is Activation.RELU_DERIVATIVE:
        return math.sqrt(d + R) / math.sqrt(d) * R**-1.5
    return math.sqrt(d) / math.sqrt(d + R) * R**-1.5


def harmonic_lower_bound(d: int, plan: RegimePlan,
                         psi: Activation = Activation.RELU_DERIVATIVE) -> tuple[float, float]:
    """``(N/2 * min c^2, min c^2)`` over the degrees ``2r + beta`` kept by ``plan``."""
    c_min_sq = min(funk_hecke_coeff(2 * r + plan.beta, d, psi) ** 2 for r in range(plan.R + 1))
    return plan.N / 2.0 * c_min_sq, c_min_sq


def _ceil_saturating(x: float) -> int:
    if not math.isfinite(x) or x >= WIDTH_SATURATION:
        return WIDTH_SATURATION
    return max(int(math.ceil(x)), 0)


def width_requirement_shallow(n: int, d: int, delta: float, opnorm_sq: float, eps: float,
                              const: float = 1.0) -> int:
    """Hidden width making the shallow bound hold with probability ``1 - eps``.

    Values of ``2**31`` and above saturate at ``WIDTH_SATURATION``.
    """
    if n < 1 or opnorm_sq <= 0 or const <= 0:
        raise DomainError("n, opnorm_sq and const must be positive")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    lam = shallow_lambda_lower(d, delta)
    return _ceil_saturating(const * opnorm_sq / lam * math.log(n / eps))


def width_requirement_deep(n: int, d0: int, delta: float, L: int, eps: float,
                           consts: BoundConstants | None = None) -> tuple[int, int]:
    """First-layer and last-hidden-layer widths for the deep bound."""
    consts = consts or BoundConstants()
    if L < 3:
        raise DomainError(f"deep width requirement needs L >= 3, got {L}")
    if n < 1:
        raise DomainError("n must be positive")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    lam = deep_lambda_lower(d0, delta)
    d1 = consts.width_deep_first * (n / lam) * math.log(n / lam) * math.log(n / eps)
    last = consts.width_deep_last * 2.0**L * math.log(n * L / eps)
    return _ceil_saturating(d1), _ceil_saturating(last)


def shallow_bound_report(d: int, n: int, delta: float, delta_prime: float, opnorm_sq: float,
                         eps: float, consts: BoundConstants | None = None) -> BoundReport:
    """Assemble every bound quantity for one shallow configuration."""
    consts = consts or BoundConstants()
    lam = shallow_lambda_lower(d, delta)
    plan = select_truncation(d, delta, 1, consts.truncation)
    _, c_min_sq = harmonic_lower_bound(d, plan)
    d1 = width_requirement_shallow(n, d, delta, opnorm_sq, eps, consts.width_shallow)
    return BoundReport(d=d, n=n, delta=delta, delta_prime=delta_prime, eps=eps,
                       lambda_lower=lam, lambda_upper=delta_prime, d1_required=d1,
                       regime=plan, c_min_sq=c_min_sq, constants=consts,
                       saturated=d1 >= WIDTH_SATURATION)
