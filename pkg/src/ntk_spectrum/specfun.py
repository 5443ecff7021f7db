"""Special functions for the spectral analysis on the sphere.

Gamma ratios are evaluated in log space with explicit sign tracking so that
degrees in the hundreds do not overflow, and reciprocal-Gamma poles give an
exact zero.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, QuadratureError

INT64_MAX = 2**63 - 1


class Activation(enum.Enum):
    """The two functions whose hemisphere transforms drive the NTK bounds.

    ``RELU_DERIVATIVE`` is the step function with value 0 at the origin and
    ``SCALED_RELU`` is ``sqrt(d) * max(t, 0)``.
    """

    RELU_DERIVATIVE = "relu-derivative"
    SCALED_RELU = "scaled-relu"

    @classmethod
    def parse(cls, value) -> "Activation":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if key in (member.value, member.name.lower().replace("_", "-")):
                return member
        raise DomainError(f"unknown activation {value!r}")

    def apply(self, t, d: int):
        """Evaluate psi at ``t`` for ambient dimension ``d``."""
        t = np.asarray(t, dtype=np.float64)
        if self is Activation.RELU_DERIVATIVE:
            return (t > 0).astype(np.float64)
        return math.sqrt(d) * np.maximum(t, 0.0)


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def _recip_gamma(a: float) -> tuple[int, float]:
    """Return ``(sign, log|1/Gamma(a)|)``, with sign 0 at the poles."""
    if a <= 0 and float(a).is_integer():
        return 0, -math.inf
    if a > 0:
        return 1, -math.lgamma(a)
    # Gamma alternates sign between consecutive negative integers
    sign = -1 if math.floor(-a) % 2 == 0 else 1
    return sign, -math.lgamma(a)


def gegenbauer(r: int, nu: float, t):
    """Gegenbauer polynomial ``C_r^nu(t)`` by the three-term recurrence.

    Accepts scalar or array ``t``.
    """
    if r < 0:
        raise DomainError("degree must be non-negative")
    if not nu > 0:
        raise DomainError("nu must be positive")
    t = np.asarray(t, dtype=np.float64)
    prev = np.ones_like(t)
    if r == 0:
        return prev if prev.ndim else float(prev)
    cur = 2.0 * nu * t
    for k in range(2, r + 1):
        prev, cur = cur, (2.0 * (k + nu - 1.0) * t * cur - (k + 2.0 * nu - 2.0) * prev) / k
    return cur if cur.ndim else float(cur)


def gegenbauer_table(r_max: int, nu: float, t) -> np.ndarray:
    """All ``C_r^nu(t)`` for ``r = 0..r_max``, stacked along axis 0."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty((r_max + 1,) + t.shape)
    out[0] = 1.0
    if r_max >= 1:
        out[1] = 2.0 * nu * t
    for k in range(2, r_max + 1):
        out[k] = (2.0 * (k + nu - 1.0) * t * out[k - 1] - (k + 2.0 * nu - 2.0) * out[k - 2]) / k
    return out


def _comb(top: int, bottom: int) -> int:
    if top < 0 or bottom < 0 or bottom > top:
        return 0
    return math.comb(top, bottom)


def harmonic_dim(r: int, d: int) -> int:
    """Dimension of the degree-``r`` spherical harmonics on the sphere in ``R^d``."""
    if r < 0 or d < 2:
        raise DomainError(f"need r >= 0 and d >= 2, got r={r}, d={d}")
    value = _comb(r + d - 1, d - 1) - _comb(r + d - 3, d - 1)
    if value > INT64_MAX:
        raise OverflowError(f"dim H_{r}^{d} exceeds 64-bit range")
    return value


def harmonic_count(R: int, beta: int, d: int) -> int:
    """``N = sum_{r<=R} dim H_{2r+beta}^d``, which telescopes to a binomial.

    Returned as an exact Python integer; it can exceed 64 bits for large ``R``.
    """
    if beta not in (0, 1):
        raise DomainError("beta must be 0 or 1")
    return _comb(2 * R + beta + d - 1, d - 1)


def addition_kernel(r: int, d: int, t):
    """``sum_s Y_{r,s}(x) Y_{r,s}(x')`` as a function of ``t = <x, x'>``."""
    if d < 3:
        raise DomainError("addition kernel needs d >= 3")
    nu = (d - 2) / 2.0
    return (2 * r + d - 2) * gegenbauer(r, nu, t) / (d - 2)


def addition_tail_bound(R: int, beta: int, d: int, delta: float) -> float:
    """Bound on off-diagonal harmonic Gram entries for ``delta``-separated points.

    ``(delta**4/2)**(-(d-2)/4) * sqrt(C(2R+beta+d-1, d-1))`` with constant 1.
    """
    if not 0.0 < delta < math.sqrt(2.0):
        raise DomainError(f"delta must lie in (0, sqrt 2), got {delta}")
    if d < 3 or R < 0 or beta not in (0, 1):
        raise DomainError("need d >= 3, R >= 0, beta in {0, 1}")
    log_b = -(d - 2) / 4.0 * math.log(delta**4 / 2.0)
    log_b += 0.5 * math.log(_comb(2 * R + beta + d - 1, d - 1))
    return math.exp(log_b)


def funk_hecke_coeff(r: int, d: int, psi: Activation) -> float:
    """Closed-form eigenvalue ``c_{r,d}`` of the hemisphere transform on degree ``r``."""
    psi = Activation.parse(psi)
    if r < 0:
        raise DomainError("degree must be non-negative")
    if d < 3:
        raise DomainError(f"Funk-Hecke coefficients need d >= 3, got {d}")
    if psi is Activation.RELU_DERIVATIVE:
        s1, l1 = _recip_gamma(1.0 - r / 2.0)
        s2, l2 = _recip_gamma(r / 2.0 + d / 2.0)
        if s1 == 0 or s2 == 0:
            return 0.0
        return s1 * s2 * math.exp(math.lgamma(d / 2.0) + l1 + l2 - math.log(2.0))
    s1, l1 = _recip_gamma((3.0 - r) / 2.0)
    s2, l2 = _recip_gamma((d + r + 1.0) / 2.0)
    if s1 == 0 or s2 == 0:
        return 0.0
    return s1 * s2 * math.exp(0.5 * math.log(d) + math.lgamma(d / 2.0) + l1 + l2 - math.log(4.0))


def odd_coeff_floor(R: int, d: int) -> float:
    """Lower bound on ``|c_{2r+1,d}|`` for ``r <= R`` (step-function case)."""
    return math.exp(
        math.lgamma(d / 2.0) + math.lgamma((2 * R + 1) / 2.0)
        - math.log(2.0 * math.pi) - math.lgamma((d + 2 * R + 1) / 2.0)
    )


def even_coeff_floor(R: int, d: int) -> float:
    """Lower bound on ``|c_{2r,d}|`` for ``1 <= r <= R`` (scaled ReLU case)."""
    if R < 1:
        raise DomainError("even floor needs R >= 1")
    return math.exp(
        0.5 * math.log(d) + math.lgamma(d / 2.0) + math.lgamma((2 * R - 1) / 2.0)
        - math.log(4.0 * math.pi) - math.lgamma((d + 2 * R + 1) / 2.0)
    )


# 15-point Gauss-Kronrod rule on [-1, 1] with its embedded 7-point Gauss rule
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
_GWEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(f, a, b):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    vals = f(mid + half * _NODES)
    kron = half * np.dot(_KWEIGHTS, vals)
    gauss = half * np.dot(_GWEIGHTS, vals[_GAUSS_IDX])
    return kron, abs(kron - gauss)


def adaptive_gk(f, a: float, b: float, tol: float, max_evals: int = 10**6) -> float:
    """Globally adaptive Gauss-Kronrod quadrature of a vectorized ``f``.

    Bisects the interval with the largest error estimate until the summed
    estimate is at most ``tol``. Raises :class:`QuadratureError` when the
    evaluation budget runs out first.
    """
    val, err = _gk15(f, a, b)
    segments = [(err, a, b, val)]
    evals = 15
    while True:
        total_err = math.fsum(s[0] for s in segments)
        if total_err <= tol:
            return math.fsum(s[3] for s in segments)
        if evals + 30 > max_evals:
            raise QuadratureError(
                f"no convergence after {evals} evaluations (error estimate {total_err:.3e})"
            )
        idx = max(range(len(segments)), key=lambda i: segments[i][0])
        _, lo, hi, _ = segments.pop(idx)
        mid = 0.5 * (lo + hi)
        for s, e in ((lo, mid), (mid, hi)):
            v, er = _gk15(f, s, e)
            segments.append((er, s, e, v))
        evals += 30


def funk_hecke_prefactor(r: int, d: int) -> float:
    """Gamma prefactor turning the weighted Gegenbauer integral into ``c_{r,d}``."""
    log_p = (math.lgamma(r + 1.0) + math.lgamma(d - 2.0) + math.lgamma(d / 2.0)
             - 0.5 * math.log(math.pi) - math.lgamma(d - 2.0 + r) - math.lgamma((d - 1) / 2.0))
    return math.exp(log_p)


def funk_hecke_quadrature(r: int, d: int, psi: Activation, tol: float = 1e-10) -> float:
    """Numerical ``c_{r,d}`` from the Funk-Hecke integral, independent of the closed form.

    Both activations vanish for ``t <= 0`` so the integral runs over ``[0, 1]``.
    ``tol`` bounds the error of the returned coefficient, not of the raw integral.
    """
    psi = Activation.parse(psi)
    if not tol > 0:
        raise DomainError("tol must be positive")
    if d < 3 or r < 0:
        raise DomainError("need d >= 3 and r >= 0")
    nu = (d - 2) / 2.0
    pref = funk_hecke_prefactor(r, d)
    expo = (d - 3) / 2.0

    def integrand(t):
        w = (1.0 - t * t) ** expo if expo else 1.0
        return psi.apply(t, d) * gegenbauer(r, nu, t) * w

    return pref * adaptive_gk(integrand, 0.0, 1.0, tol / pref)


@dataclass(frozen=True)
class SpectrumTable:
    """Funk-Hecke coefficients ``c_{r,d}`` for ``r = 0..r_max`` of one activation."""

    dim: int
    activation: Activation
    coeffs: tuple[float, ...] = field(repr=False)

    @classmethod
    def build(cls, d: int, psi: Activation, r_max: int = 64) -> "SpectrumTable":
        psi = Activation.parse(psi)
        return cls(d, psi, tuple(funk_hecke_coeff(r, d, psi) for r in range(r_max + 1)))

    @property
    def r_max(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, r: int) -> float:
        """Tabulated coefficient, computed on demand past ``r_max``."""
        if 0 <= r <= self.r_max:
            return self.coeffs[r]
        return funk_hecke_coeff(r, self.dim, self.activation)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("activation,d,r,c_rd\n")
        for r, c in enumerate(self.coeffs):
            buf.write(f"{self.activation.value},{self.dim},{r},{c!r}\n")
        return buf.getvalue()
