"""The ratio phi of a variable and the solvability-by-radicals classifier.

phi is the unique root ``x >= 1`` of ``x**r - x**(r - l) - 1``. Solvers work on
the scaled trinomial ``y**q - y**(q - 1) - 1`` with ``q = r / l`` whose root is
``y = phi**l`` and always lies in ``(1, 2]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Hashable

from .core import Variable, as_variable
from .errors import DomainError, NoConvergence

MAX_ITERATIONS = 200
LAGUERRE_MAX_Q = 200.0


class Method(str, enum.Enum):
    LAGUERRE = "Laguerre"
    FIXED_POINT = "FixedPoint"
    CLOSED_FORM = "ClosedForm"
    BISECTION = "Bisection"


@dataclass(frozen=True)
class PhiResult:
    phi: float
    phi_pow_l: float
    iterations: int
    method: Method


class PhiCache(dict):
    """Warm-start store mapping a variable key to its last scaled root."""


def trinomial_residual(x: float, q: float) -> tuple[float, float, float]:
    """Value, first and second derivative of ``x**q - x**(q-1) - 1``."""
    if not x > 1.0:
        raise DomainError(f"trinomial_residual needs x > 1, got {x!r}")
    if q < 1.0:
        raise DomainError(f"trinomial_residual needs q >= 1, got {q!r}")
    lx = math.log(x)
    a = math.exp(q * lx)  # x**q
    b = math.exp((q - 1.0) * lx)  # x**(q-1)
    f = a - b - 1.0
    df = (q * a - (q - 1.0) * b) / x
    d2f = (q * (q - 1.0) * a - (q - 1.0) * (q - 2.0) * b) / (x * x)
    return f, df, d2f


def _laguerre(q: float, x: float, tol: float) -> tuple[float, int]:
    # Bracket [lo, hi] keeps f(lo) < 0 <= f(hi); f(1) = -1, f(2) = 2**(q-1) - 1.
    lo, hi = 1.0, 2.0
    for it in range(1, MAX_ITERATIONS + 1):
        f, df, d2f = trinomial_residual(x, q)
        if f == 0.0:
            return x, it
        if f < 0.0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        g = df / f
        h = g * g - d2f / f
        root = math.sqrt(max((q - 1.0) * (q * h - g * g), 0.0))
        denom = g + root if abs(g + root) >= abs(g - root) else g - root
        x_new = x - q / denom if denom != 0.0 else 0.5 * (lo + hi)
        if lo <= x_new <= hi and abs(x_new - x) <= tol:
            return x_new, it
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        x = x_new
    raise NoConvergence(f"Laguerre iteration did not converge for q={q}")


def _fixed_point(q: float, x: float, tol: float) -> tuple[float, int]:
    inv_q = 1.0 / q
    for it in range(1, MAX_ITERATIONS + 1):
        x_new = (1.0 - 1.0 / x) ** (-inv_q)
        if not 1.0 < x_new <= 2.0 or math.isnan(x_new):
            raise NoConvergence(f"fixed-point iterate left (1, 2] for q={q}")
        if abs(x_new - x) <= tol:
            return x_new, it
        x = x_new
    raise NoConvergence(f"fixed-point iteration did not converge for q={q}")


def _bisection(q: float, tol: float) -> tuple[float, int]:
    lo, hi = 1.0, 2.0
    it = 0
    while hi - lo > tol:
        it += 1
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if trinomial_residual(mid, q)[0] < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), it


def compute_phi(
    v,
    cache: PhiCache | None = None,
    tol: float = 1e-12,
    key: Hashable | None = None,
) -> PhiResult:
    """Solve for the ratio of ``v``.

    ``cache`` is consulted and updated under ``key`` (default: the ``(l, r)``
    pair). A cached scaled root is used as the starting point.
    """
    v = as_variable(v)
    if tol <= 0:
        raise ValueError("tol must be positive")
    l, r = v.l, v.r
    if l == r:
        return PhiResult(2.0 ** (1.0 / r), 2.0, 0, Method.CLOSED_FORM)

    q = r / l
    if key is None:
        key = (l, r)
    x0 = None
    if cache is not None:
        x0 = cache.get(key)
    if x0 is None or not 1.0 < x0 < 2.0:
        x0 = 2.0 ** (1.0 / q)

    try:
        if q <= LAGUERRE_MAX_Q:
            y, iterations = _laguerre(q, x0, tol)
            method = Method.LAGUERRE
        else:
            y, iterations = _fixed_point(q, x0, tol)
            method = Method.FIXED_POINT
    except NoConvergence:
        y, iterations = _bisection(q, tol)
        method = Method.BISECTION
        if not abs(trinomial_residual(y, q)[0]) <= 1e-9:
            raise

    if cache is not None:
        cache[key] = y
    return PhiResult(y ** (1.0 / l), y, iterations, method)


def phi(v) -> float:
    return compute_phi(v).phi


def characteristic_residual(v, x: float) -> float:
    """``x**r - x**(r-l) - 1`` evaluated directly (unscaled)."""
    v = as_variable(v)
    return x**v.r - x ** (v.r - v.l) - 1.0


# -- solvability by radicals -------------------------------------------------


class Verdict(str, enum.Enum):
    SOLVABLE = "Solvable"
    NOT_SOLVABLE = "NotSolvable"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class SolvabilityVerdict:
    verdict: Verdict
    d: int
    k1: int
    k2: int
    reducible: bool
    detail: str


def classify_solvability(v) -> SolvabilityVerdict:
    """Decide whether phi(l, r) is expressible by radicals.

    Works on the reduced exponents ``k1 = r/d``, ``k2 = l/d`` with
    ``d = gcd(r, l)``; the reduced trinomial is solvable iff the original is.
    """
    v = as_variable(v)
    d = math.gcd(v.r, v.l)
    k1, k2 = v.r // d, v.l // d
    reducible = k1 != k2 and k1 % 2 == 1 and k2 % 2 == 1 and (k1 + k2) % 3 == 0

    def verdict(kind, detail):
        return SolvabilityVerdict(kind, d, k1, k2, reducible, detail)

    if k1 == k2:
        return verdict(Verdict.SOLVABLE, "l == r: x^r - 2 has root 2^(1/r)")
    if k1 <= 4:
        return verdict(Verdict.SOLVABLE, f"reduced degree {k1} <= 4")
    if reducible:
        cofactor = k1 - 2
        if cofactor <= 4:
            return verdict(Verdict.SOLVABLE, f"reducible: (x^2-x+1) times degree-{cofactor} factor")
        if (k1, k2) == (7, 5):
            return verdict(
                Verdict.NOT_SOLVABLE,
                "reducible: (x^2-x+1)(x^5+x^4-x^2-x-1), quintic has Galois group S5",
            )
        return verdict(Verdict.UNKNOWN, f"reducible with degree-{cofactor} cofactor: open case")
    return verdict(Verdict.NOT_SOLVABLE, f"irreducible of degree {k1} >= 5: Galois group S{k1}")


def reduced_trinomial(k1: int, k2: int) -> list[int]:
    """Coefficients (highest degree first) of ``x**k1 - x**(k1-k2) - 1``."""
    coeffs = [0] * (k1 + 1)
    coeffs[0] = 1
    coeffs[k2] -= 1
    coeffs[k1] -= 1
    return coeffs


def divide_by_monic(num: list[int], den: list[int]) -> tuple[list[int], list[int]]:
    """Exact integer long division by a monic polynomial (highest degree first)."""
    if den[0] != 1:
        raise ValueError("divisor must be monic")
    rem = list(num)
    quot = []
    for i in range(len(num) - len(den) + 1):
        c = rem[i]
        quot.append(c)
        if c:
            for j, dc in enumerate(den):
                rem[i + j] -= c * dc
    tail = rem[len(num) - len(den) + 1 :]
    return quot, tail


def quadratic_factor_check(k1: int, k2: int) -> dict[str, bool]:
    """Which of ``x^2 - x + 1`` / ``x^2 - x - 1`` divides the reduced trinomial."""
    f = reduced_trinomial(k1, k2)
    out = {}
    for name, den in (("x^2-x+1", [1, -1, 1]), ("x^2-x-1", [1, -1, -1])):
        _, rem = divide_by_monic(f, den)
        out[name] = not any(rem)
    return out
