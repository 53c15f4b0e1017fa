"""Complex Airy function Ai, its derivative, zeros, and model eigenvalues.

Evaluation strategy by region of |z|:
  <= 4.5          float64 Maclaurin series (cancellation costs < 3 digits)
  4.5 .. 9        the same series accumulated in extended precision
  >= 9, |arg z| <= pi/3   classical asymptotic expansion in zeta = (2/3) z^(3/2)
  >= 9 otherwise  extended-precision series again
Arguments with |z| > 40 are outside the supported envelope and raise.

The half-line model operator -d^2/dy^2 + e^{i omega} y with a Dirichlet or
Neumann condition at 0 has eigenvalues nu_k = e^{i(2 omega/3 - pi)} mu_k
where mu_k runs over the (negative) zeros of Ai or Ai'.  Eigenfunctions are
rotated translated Airy functions.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp

__all__ = [
    "AiryZeroTable",
    "ModelEigenvalue",
    "airy_ai",
    "airy_ai_prime",
    "ai_zero",
    "ai_prime_zero",
    "airy_zero_table",
    "model_nu",
    "airy_eigenfunction",
    "ENVELOPE_RADIUS",
]

ENVELOPE_RADIUS = 40.0

_C1 = 0.3550280538878172392600631860041831763980  # Ai(0)  = 3^(-2/3)/Gamma(2/3)
_C2 = 0.2588194037928067984051835601892039634793  # -Ai'(0) = 3^(-1/3)/Gamma(1/3)
_SQRTPI = math.sqrt(math.pi)

_F64_RADIUS = 4.5
_ASYMP_RADIUS = 9.0


def _series_f64(z: complex) -> tuple[complex, complex]:
    """Maclaurin series for (Ai, Ai') in float64.

    Ai = C1*f - C2*g with f = sum a_k, g = sum b_k,
    a_0 = 1, a_{k+1} = a_k z^3 / ((3k+2)(3k+3)),
    b_0 = z, b_{k+1} = b_k z^3 / ((3k+3)(3k+4)).
    Termwise derivative: f' = sum 3k a_k / z, g' = sum (3k+1) b_k / z.
    """
    if z == 0:
        return complex(_C1), complex(-_C2)
    z3 = z * z * z
    a = 1.0 + 0.0j
    b = z
    f = a
    g = b
    fp = 0.0 + 0.0j
    gp = b / z  # (3*0+1) * b_0 / z = 1
    for k in range(0, 200):
        a = a * z3 / ((3 * k + 2) * (3 * k + 3))
        b = b * z3 / ((3 * k + 3) * (3 * k + 4))
        f += a
        g += b
        fp += 3 * (k + 1) * a / z
        gp += (3 * (k + 1) + 1) * b / z
        if abs(a) + abs(b) < 1e-18 * (abs(f) + abs(g)):
            break
    return _C1 * f - _C2 * g, _C1 * fp - _C2 * gp


def _series_mp(z: complex) -> tuple[complex, complex]:
    """Same Maclaurin recurrences accumulated with enough guard digits.

    The series suffers cancellation ~ exp((2/3)|z|^(3/2)); working precision
    grows accordingly so the float64 result stays fully accurate.
    """
    dps = 30 + int(0.29 * abs(z) ** 1.5)
    with mp.workdps(dps):
        zz = mp.mpc(z)
        c1 = mp.power(3, mp.mpf(-2) / 3) / mp.gamma(mp.mpf(2) / 3)
        c2 = mp.power(3, mp.mpf(-1) / 3) / mp.gamma(mp.mpf(1) / 3)
        z3 = zz * zz * zz
        a = mp.mpc(1)
        b = zz
        f = a
        g = b
        fp = mp.mpc(0)
        gp = mp.mpc(1)
        tiny = mp.mpf(10) ** (-(dps + 5))
        for k in range(0, 3000):
            a = a * z3 / ((3 * k + 2) * (3 * k + 3))
            b = b * z3 / ((3 * k + 3) * (3 * k + 4))
            f += a
            g += b
            fp += 3 * (k + 1) * a / zz
            gp += (3 * (k + 1) + 1) * b / zz
            if abs(a) + abs(b) < tiny * (abs(f) + abs(g) + 1):
                break
        ai = c1 * f - c2 * g
        aip = c1 * fp - c2 * gp
        return complex(ai), complex(aip)


def _asymptotic(z: complex) -> tuple[complex, complex]:
    """Poincare expansion for the right sector |arg z| <= pi/3, |z| >= 9.

    zeta = (2/3) z^(3/2); u_0 = v_0 = 1,
    u_{n+1} = u_n (6n+1)(6n+3)(6n+5) / (216 (n+1)(2n+1)), v_n = -u_n (6n+1)/(6n-1);
    Ai ~ e^{-zeta}/(2 sqrt(pi) z^{1/4}) * sum (-1)^n u_n zeta^{-n},
    Ai' ~ -z^{1/4} e^{-zeta}/(2 sqrt(pi)) * sum (-1)^n v_n zeta^{-n}.
    Truncated at the smallest term.
    """
    sq = cmath.sqrt(z)
    zeta = (2.0 / 3.0) * z * sq
    s1 = 1.0 + 0.0j
    s2 = 1.0 + 0.0j
    u = 1.0
    term_prev = 1.0
    sign = 1.0
    zinv = 1.0 / zeta
    power = 1.0 + 0.0j
    for n in range(0, 40):
        u_next = u * (6 * n + 1) * (6 * n + 3) * (6 * n + 5) / (216.0 * (n + 1) * (2 * n + 1))
        power *= zinv
        sign = -sign
        t1 = sign * u_next * power
        if abs(t1) >= term_prev:
            break
        term_prev = abs(t1)
        v_next = -u_next * (6 * (n + 1) + 1) / (6 * (n + 1) - 1)
        s1 += t1
        s2 += sign * v_next * power
        u = u_next
    zq = cmath.sqrt(sq)  # z^{1/4}, principal
    pref = cmath.exp(-zeta) / (2.0 * _SQRTPI)
    return pref * s1 / zq, -zq * pref * s2


@lru_cache(maxsize=65536)
def _ai_both(z: complex) -> tuple[complex, complex]:
    r = abs(z)
    if r > ENVELOPE_RADIUS:
        raise ValueError(f"|z| = {r:.3g} outside the supported envelope |z| <= {ENVELOPE_RADIUS}")
    if r <= _F64_RADIUS:
        return _series_f64(z)
    if r >= _ASYMP_RADIUS and abs(cmath.phase(z)) <= math.pi / 3.0 + 1e-14:
        return _asymptotic(z)
    return _series_mp(z)


def airy_ai(z: complex) -> complex:
    """Ai(z) for |z| <= 40."""
    return _ai_both(complex(z))[0]


def airy_ai_prime(z: complex) -> complex:
    """Ai'(z) for |z| <= 40."""
    return _ai_both(complex(z))[1]


def _newton_zero(seed: float, derivative_target: bool) -> float:
    """Polish a real zero of Ai (or Ai') by a step-clamped Newton iteration.

    For Ai' zeros the Newton denominator uses Ai'' = z Ai.
    """
    x = seed
    for _ in range(60):
        ai, aip = _ai_both(complex(x))
        if derivative_target:
            f = aip.real
            df = x * ai.real  # ODE: Ai'' = z Ai
        else:
            f = ai.real
            df = aip.real
        if df == 0:
            break
        step = f / df
        limit = 0.1 * max(1.0, abs(x))
        if abs(step) > limit:
            step = math.copysign(limit, step)
        x -= step
        if abs(step) < 1e-15 * max(1.0, abs(x)):
            break
    return x


def ai_zero(k: int) -> float:
    """k-th negative zero mu_k of Ai (k >= 1), decreasing in k."""
    if k < 1:
        raise ValueError("zero index starts at 1")
    seed = -((3.0 * math.pi * (4 * k - 1) / 8.0) ** (2.0 / 3.0))
    if abs(seed) > ENVELOPE_RADIUS - 1:
        raise ValueError(f"zero index {k} outside the accuracy envelope")
    return _newton_zero(seed, derivative_target=False)


def ai_prime_zero(k: int) -> float:
    """k-th negative zero mu'_k of Ai' (k >= 1), decreasing in k."""
    if k < 1:
        raise ValueError("zero index starts at 1")
    seed = -((3.0 * math.pi * (4 * k - 3) / 8.0) ** (2.0 / 3.0))
    if abs(seed) > ENVELOPE_RADIUS - 1:
        raise ValueError(f"zero index {k} outside the accuracy envelope")
    if k == 1:
        seed = -1.02
    return _newton_zero(seed, derivative_target=True)


@dataclass(frozen=True)
class AiryZeroTable:
    mu: tuple[float, ...]
    mu_prime: tuple[float, ...]
    tolerance: float

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.mu, self.mu[1:])):
            raise ValueError("Ai zeros must decrease strictly")
        if any(b >= a for a, b in zip(self.mu_prime, self.mu_prime[1:])):
            raise ValueError("Ai' zeros must decrease strictly")
        for m in self.mu:
            if abs(airy_ai(m)) > 1e-10:
                raise ValueError(f"table zero {m} has |Ai| residual above 1e-10")


@lru_cache(maxsize=8)
def airy_zero_table(kmax: int = 20) -> AiryZeroTable:
    return AiryZeroTable(
        mu=tuple(ai_zero(k) for k in range(1, kmax + 1)),
        mu_prime=tuple(ai_prime_zero(k) for k in range(1, kmax + 1)),
        tolerance=1e-12,
    )


@dataclass(frozen=True)
class ModelEigenvalue:
    k: int
    omega: float
    bc: str
    value: complex


def model_nu(k: int, omega: float, bc: str = "dirichlet") -> ModelEigenvalue:
    """k-th eigenvalue e^{i(2 omega/3 - pi)} mu_k of the rotated half-line model.

    Dirichlet uses Ai zeros, Neumann Ai' zeros.  Requires |omega| <= pi/2.
    """
    if not -math.pi / 2 <= omega <= math.pi / 2:
        raise ValueError("omega must lie in [-pi/2, pi/2]")
    if bc == "dirichlet":
        mu = ai_zero(k)
    elif bc == "neumann":
        mu = ai_prime_zero(k)
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    value = cmath.exp(1j * (2.0 * omega / 3.0 - math.pi)) * mu
    return ModelEigenvalue(k=k, omega=omega, bc=bc, value=value)


def airy_eigenfunction(k: int, y: complex, omega: float = math.pi / 2, bc: str = "dirichlet") -> complex:
    """Model eigenfunction Ai(e^{i omega/3} y + mu_k) evaluated at y."""
    if bc == "dirichlet":
        mu = ai_zero(k)
    elif bc == "neumann":
        mu = ai_prime_zero(k)
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    arg = cmath.exp(1j * omega / 3.0) * complex(y) + mu
    return airy_ai(arg)
