"""Wigner 3j/6j symbols and Landé factor composition.

Angular momenta may be passed as ints, floats or :class:`fractions.Fraction`
as long as they are integers or half-integers. Internally everything is
carried as twice the value so that the Racah sums run in exact integer
arithmetic; the single square root is taken at the very end.
"""

from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt

from .constants import mu_B, mu_N


def twice(x):
    """Return 2*x as an int, rejecting anything that is not a half-integer."""
    if isinstance(x, int):
        return 2 * x
    doubled = Fraction(x) * 2
    if doubled.denominator != 1:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(doubled)


def _triangle_ok(a, b, c):
    # arguments are doubled values
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b


def _delta(a, b, c):
    # triangle coefficient for doubled arguments, as an exact Fraction
    return Fraction(
        factorial((a + b - c) // 2) * factorial((a - b + c) // 2) * factorial((-a + b + c) // 2),
        factorial((a + b + c) // 2 + 1),
    )


def _signed_sqrt(squared):
    # squared = sign * value^2 carried as Fraction; returns float
    if squared == 0:
        return 0.0
    sign = 1.0 if squared > 0 else -1.0
    magnitude = abs(squared)
    return sign * sqrt(magnitude.numerator) / sqrt(magnitude.denominator)


@lru_cache(maxsize=65536)
def _wigner_3j_twice(j1, j2, j3, m1, m2, m3):
    if m1 + m2 + m3 != 0:
        return 0.0
    if not _triangle_ok(j1, j2, j3):
        return 0.0
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if abs(m) > j or (j + m) % 2:
            return 0.0

    # Racah closed form, all quantities below are integers
    a = (j1 + j2 - j3) // 2
    b = (j1 - m1) // 2
    cc = (j2 + m2) // 2
    d = (j3 - j2 + m1) // 2
    ee = (j3 - j1 - m2) // 2
    k_min = max(0, -d, -ee)
    k_max = min(a, b, cc)
    total = 0
    for k in range(k_min, k_max + 1):
        denom = (
            factorial(k)
            * factorial(d + k)
            * factorial(ee + k)
            * factorial(a - k)
            * factorial(b - k)
            * factorial(cc - k)
        )
        total += Fraction((-1) ** k, denom)
    if total == 0:
        return 0.0

    prefactor = _delta(j1, j2, j3) * (
        factorial((j1 + m1) // 2)
        * factorial((j1 - m1) // 2)
        * factorial((j2 + m2) // 2)
        * factorial((j2 - m2) // 2)
        * factorial((j3 + m3) // 2)
        * factorial((j3 - m3) // 2)
    )
    phase = -1 if ((j1 - j2 - m3) // 2) % 2 else 1
    squared = prefactor * total * total
    sign = phase * (1 if total > 0 else -1)
    return sign * _signed_sqrt(squared)


def wigner_3j(j1, j2, j3, m1, m2, m3):
    """Wigner 3j symbol (j1 j2 j3; m1 m2 m3).

    Returns 0 whenever the triangle condition, the projection sum rule or
    |m| <= j fails.
    """
    return _wigner_3j_twice(twice(j1), twice(j2), twice(j3), twice(m1), twice(m2), twice(m3))


@lru_cache(maxsize=65536)
def _wigner_6j_twice(j1, j2, j3, j4, j5, j6):
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle_ok(*t) for t in triads):
        return 0.0

    a1 = (j1 + j2 + j3) // 2
    a2 = (j1 + j5 + j6) // 2
    a3 = (j4 + j2 + j6) // 2
    a4 = (j4 + j5 + j3) // 2
    b1 = (j1 + j2 + j4 + j5) // 2
    b2 = (j2 + j3 + j5 + j6) // 2
    b3 = (j3 + j1 + j6 + j4) // 2

    total = 0
    for t in range(max(a1, a2, a3, a4), min(b1, b2, b3) + 1):
        denom = (
            factorial(t - a1)
            * factorial(t - a2)
            * factorial(t - a3)
            * factorial(t - a4)
            * factorial(b1 - t)
            * factorial(b2 - t)
            * factorial(b3 - t)
        )
        total += Fraction((-1) ** t * factorial(t + 1), denom)
    if total == 0:
        return 0.0

    deltas = _delta(*triads[0]) * _delta(*triads[1]) * _delta(*triads[2]) * _delta(*triads[3])
    sign = 1 if total > 0 else -1
    return sign * _signed_sqrt(deltas * total * total)


def wigner_6j(j1, j2, j3, j4, j5, j6):
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}; zero if any triad is not a triangle."""
    return _wigner_6j_twice(twice(j1), twice(j2), twice(j3), twice(j4), twice(j5), twice(j6))


def lande_gF(gJ, gI, F, J, I):
    """Hyperfine Landé factor g_F in units of the Bohr magneton.

    ``gI`` is the nuclear g-factor in nuclear magnetons, entering with the
    same sign convention as ``g_J mu_B - g_I mu_N`` in the Zeeman Hamiltonian.
    """
    tF, tJ, tI = twice(F), twice(J), twice(I)
    if not (abs(tJ - tI) <= tF <= tJ + tI) or (tF + tJ + tI) % 2:
        raise ValueError(f"F={F} is outside the coupling range of J={J}, I={I}")
    if tF == 0:
        return 0.0
    FF = tF * (tF + 2) / 4
    JJ = tJ * (tJ + 2) / 4
    II = tI * (tI + 2) / 4
    electronic = (FF + JJ - II) / (2 * FF)
    nuclear = (FF + II - JJ) / (2 * FF)
    return gJ * electronic - gI * (mu_N / mu_B) * nuclear
