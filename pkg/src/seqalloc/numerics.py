"""Exact rationals and the auxiliary sequences gamma, gamma-bar and delta.

``gamma(k)`` is the half-Wallis product ``prod_{j=1}^{floor((k-1)/2)} (2j+1)/(2j)``
with ``gamma(1) = gamma(2) = 1``; ``gamma_bar(k) = gamma(k) / k``; and
``delta(k) = (k + (-1)**k * gamma(k)) / 3`` is the expected utility gap between
the two agents of the alternating policy of length ``k - 1``.

The tables are extended incrementally through the gamma-bar recursion::

    gamma_bar(k + 1) = gamma_bar(k)                 if k is even
    gamma_bar(k + 1) = k / (k + 1) * gamma_bar(k)   if k is odd

so a sweep over ``k`` costs O(1) rational operations per step.
"""

from __future__ import annotations

import threading
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction

Rational = Fraction

DEFAULT_PLACES = 6

_lock = threading.Lock()
_gamma_bar: list[Fraction] = [Fraction(0), Fraction(1)]  # index 0 unused


def _extend(k: int) -> None:
    with _lock:
        table = _gamma_bar
        while len(table) <= k:
            j = len(table) - 1
            prev = table[j]
            table.append(prev if j % 2 == 0 else prev * Fraction(j, j + 1))


def gamma_bar(k: int) -> Fraction:
    if k < 1:
        raise ValueError(f"gamma_bar needs k >= 1, got {k}")
    if k >= len(_gamma_bar):
        _extend(k)
    return _gamma_bar[k]


def gamma(k: int) -> Fraction:
    if k < 1:
        raise ValueError(f"gamma needs k >= 1, got {k}")
    return k * gamma_bar(k)


def gamma_product(k: int) -> Fraction:
    """gamma(k) straight from its defining product (no memo), used as a cross-check."""
    if k < 1:
        raise ValueError(f"gamma needs k >= 1, got {k}")
    out = Fraction(1)
    for j in range(1, (k - 1) // 2 + 1):
        out *= Fraction(2 * j + 1, 2 * j)
    return out


def delta(k: int) -> Fraction:
    if k < 2:
        raise ValueError(f"delta needs k >= 2, got {k}")
    sign = 1 if k % 2 == 0 else -1
    return (k + sign * gamma(k)) / 3


# -- serialization -----------------------------------------------------------

def format_exact(x: Fraction | int) -> str:
    """Render as ``"num/den"``; integers keep the ``/1``."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_exact(text: str) -> Fraction:
    return Fraction(text.strip())


def to_decimal(x: Fraction | int, places: int = DEFAULT_PLACES) -> float:
    """Round half-even to ``places`` decimals and return the nearest float."""
    x = Fraction(x)
    with localcontext() as ctx:
        ctx.prec = max(50, len(str(abs(x.numerator) // x.denominator)) + places + 10)
        d = Decimal(x.numerator) / Decimal(x.denominator)
        q = d.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_EVEN)
    return float(q)


def exact_payload(x: Fraction | int, places: int = DEFAULT_PLACES) -> dict:
    return {"exact": format_exact(x), "decimal": to_decimal(x, places)}
