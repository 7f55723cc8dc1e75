"""Exact scalars: rationals and Gaussian rationals.

Coefficients of function symbols and normal forms are kept exact so that
normalization is idempotent and certificates serialize without float drift.
Real values are plain :class:`fractions.Fraction`; complex values are
:class:`GaussQ`. Use :func:`scalar` to coerce and canonicalize.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union


@dataclass(frozen=True)
class GaussQ:
    re: Fraction
    im: Fraction

    def __add__(self, other):
        o = _as_gauss(other)
        return scalar(GaussQ(self.re + o.re, self.im + o.im))

    __radd__ = __add__

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-_as_gauss(other))

    def __rsub__(self, other):
        return _as_gauss(other) - self

    def __mul__(self, other):
        o = _as_gauss(other)
        return scalar(GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_gauss(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero scalar")
        num = self * GaussQ(o.re, -o.im)
        num = _as_gauss(num)
        return scalar(GaussQ(num.re / den, num.im / den))

    def __rtruediv__(self, other):
        return _as_gauss(other) / self

    def __abs__(self):
        return math.hypot(self.re, self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self):
        return GaussQ(self.re, -self.im)


Scalar = Union[Fraction, GaussQ]


def _as_gauss(x) -> GaussQ:
    if isinstance(x, GaussQ):
        return x
    x = scalar(x)
    if isinstance(x, GaussQ):
        return x
    return GaussQ(x, Fraction(0))


def scalar(x) -> Scalar:
    """Coerce ``x`` to a canonical exact scalar.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10``.
    Complex values with zero imaginary part collapse to a Fraction.
    """
    if isinstance(x, GaussQ):
        if x.im == 0:
            return x.re
        return x
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite scalar {x!r}")
        return Fraction(repr(float(x)))
    if isinstance(x, complex):
        return scalar(GaussQ(scalar(x.real), scalar(x.imag)))
    if isinstance(x, str):
        return parse_scalar(x)
    # numpy scalars
    if hasattr(x, "item"):
        return scalar(x.item())
    raise TypeError(f"cannot convert {type(x).__name__} to a scalar")


def to_complex(x: Scalar) -> complex:
    return complex(x)


def to_float(x: Scalar) -> float:
    if isinstance(x, GaussQ):
        raise TypeError("complex scalar where a real one is required")
    return float(x)


def is_real(x: Scalar) -> bool:
    return not isinstance(x, GaussQ)


def modulus(x: Scalar) -> float:
    return abs(x) if isinstance(x, GaussQ) else abs(float(x))


def exact_modulus(x: Scalar) -> Fraction | None:
    """|x| as a Fraction when it is rational, else None."""
    if not isinstance(x, GaussQ):
        return abs(x)
    sq = x.re * x.re + x.im * x.im
    n, d = _isqrt_exact(sq.numerator), _isqrt_exact(sq.denominator)
    if n is None or d is None:
        return None
    return Fraction(n, d)


def _isqrt_exact(n: int) -> int | None:
    r = math.isqrt(n)
    return r if r * r == n else None


_REAL = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:/\d+)?"
_REAL_RE = re.compile(rf"^{_REAL}$")


def _parse_real(s: str) -> Fraction:
    s = s.strip()
    if not _REAL_RE.match(s):
        raise ValueError(f"malformed number {s!r}")
    return Fraction(s)


def parse_scalar(text: str) -> Scalar:
    """Parse ``0.5``, ``-1/3``, ``0.5+0.5i``, ``-i``, ``2/3i``."""
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty scalar")
    if not s.endswith("i"):
        return _parse_real(s)
    body = s[:-1]
    split = max(body.rfind("+"), body.rfind("-"))
    if split <= 0:
        re_part, im_part = "", body
    else:
        re_part, im_part = body[:split], body[split:]
    if im_part in ("", "+"):
        im = Fraction(1)
    elif im_part == "-":
        im = Fraction(-1)
    else:
        im = _parse_real(im_part)
    re_ = _parse_real(re_part) if re_part else Fraction(0)
    return scalar(GaussQ(re_, im))


def _format_real(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    places = max(twos, fives)
    digits = abs(q.numerator) * (10**places) // q.denominator
    sign = "-" if q < 0 else ""
    whole, frac = divmod(digits, 10**places)
    return f"{sign}{whole}.{frac:0{places}d}"


def format_scalar(x: Scalar) -> str:
    """Inverse of :func:`parse_scalar` (exact)."""
    x = scalar(x)
    if not isinstance(x, GaussQ):
        return _format_real(x)
    im = _format_real(x.im)
    if x.re == 0:
        return f"{im}i"
    sign = "" if im.startswith("-") else "+"
    return f"{_format_real(x.re)}{sign}{im}i"


def root_of_unity(k: int, m: int, digits: int = 17) -> Scalar:
    """exp(2 pi i k / m) rounded to ``digits`` decimals (exact rational parts)."""
    z = complex(math.cos(2 * math.pi * k / m), math.sin(2 * math.pi * k / m))
    q = 10**digits
    return scalar(GaussQ(Fraction(round(z.real * q), q), Fraction(round(z.imag * q), q)))
