"""Complex arithmetic and the one-step amplification function.

Applied to ``y' = lam * y`` with step ``h``, the randomized Taylor scheme of
order ``r`` multiplies the state by

    f(t) = sum_{j=0}^{r+1} z^j / j!  +  z^{r+2} / (r+1)! * t^{r+1},   z = lam*h,

where ``t`` is the uniform random node. The first sum is the *head* and the
coefficient of ``t^{r+1}`` is the *tail*. Every routine here accepts either
Python/numpy complex values or :class:`RationalComplex` for exact work.
"""
from __future__ import annotations

import math
import numbers
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

import numpy as np

MAX_ORDER = 32


class RandTaylorError(Exception):
    """Base class for errors raised by this package."""


class OrderTooLarge(RandTaylorError, ValueError):
    pass


class DomainError(RandTaylorError, ValueError):
    pass


@dataclass(frozen=True, slots=True)
class RationalComplex:
    """Exact complex number with :class:`fractions.Fraction` components.

    Fractions are always kept in lowest terms, so equality is structural.
    """

    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, value) -> "RationalComplex":
        if isinstance(value, RationalComplex):
            return value
        if isinstance(value, (numbers.Rational, str)):
            return cls(Fraction(value))
        if isinstance(value, numbers.Complex):
            # floats convert exactly (binary expansion), not by decimal repr
            c = complex(value)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise DomainError(f"non-finite value {value!r}")
            return cls(Fraction(c.real), Fraction(c.imag))
        raise TypeError(f"cannot convert {type(value).__name__} to RationalComplex")

    def __add__(self, other):
        o = RationalComplex.coerce(other)
        return RationalComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = RationalComplex.coerce(other)
        return RationalComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return RationalComplex.coerce(other) - self

    def __mul__(self, other):
        o = RationalComplex.coerce(other)
        return RationalComplex(self.re * o.re - self.im * o.im,
                               self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = RationalComplex.coerce(other)
        d = o.abs2()
        if d == 0:
            raise ZeroDivisionError("division by zero RationalComplex")
        n = self * o.conjugate()
        return RationalComplex(n.re / d, n.im / d)

    def __neg__(self):
        return RationalComplex(-self.re, -self.im)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result, base = RationalComplex(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        try:
            o = RationalComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self) -> "RationalComplex":
        return RationalComplex(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __str__(self):
        sign = "-" if self.im < 0 else "+"
        return f"{self.re}{sign}{abs(self.im)}i"


Number = Union[complex, float, np.ndarray, RationalComplex]


def check_order(r: int, cap: int = MAX_ORDER) -> int:
    if isinstance(r, bool) or not isinstance(r, numbers.Integral):
        raise TypeError(f"order must be an integer, got {r!r}")
    r = int(r)
    if r < 0:
        raise DomainError(f"order must be nonnegative, got {r}")
    if r > cap:
        raise OrderTooLarge(f"order {r} exceeds cap {cap}")
    return r


def check_finite(z) -> complex:
    """Validate a scalar double-precision point and return it as ``complex``."""
    c = complex(z)
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise DomainError(f"non-finite point {z!r}")
    return c


def _is_exact(z) -> bool:
    return isinstance(z, (RationalComplex, numbers.Rational))


def _as_numeric(z):
    if _is_exact(z):
        return RationalComplex.coerce(z)
    if isinstance(z, np.ndarray):
        return z.astype(complex, copy=False)
    return check_finite(z)


def exp_taylor_partial(z: Number, m: int):
    """Return ``sum_{j=0}^{m} z^j / j!``.

    Powers are accumulated in ascending order and divided by the exact
    integer ``j!``. Works elementwise on numpy arrays.
    """
    if m < 0:
        raise DomainError(f"degree must be nonnegative, got {m}")
    z = _as_numeric(z)
    if isinstance(z, RationalComplex):
        total = RationalComplex(0)
        power = RationalComplex(1)
        for j in range(m + 1):
            total = total + RationalComplex(power.re / math.factorial(j),
                                            power.im / math.factorial(j))
            power = power * z
        return total
    total = np.zeros_like(z) if isinstance(z, np.ndarray) else 0j
    power = np.ones_like(z) if isinstance(z, np.ndarray) else 1 + 0j
    for j in range(m + 1):
        total = total + power / float(math.factorial(j))
        power = power * z
    return total


class StepFunctionCoeffs(NamedTuple):
    """``f(t) = head + tail * t**(r+1)``."""

    r: int
    head: Number
    tail: Number

    def __call__(self, t):
        return self.head + self.tail * t ** (self.r + 1)


def step_coeffs(r: int, z: Number) -> StepFunctionCoeffs:
    r = check_order(r)
    z = _as_numeric(z)
    head = exp_taylor_partial(z, r + 1)
    if isinstance(z, RationalComplex):
        p = z ** (r + 2)
        k = math.factorial(r + 1)
        tail = RationalComplex(p.re / k, p.im / k)
    else:
        power = z
        for _ in range(r + 1):
            power = power * z
        tail = power / float(math.factorial(r + 1))
    return StepFunctionCoeffs(r, head, tail)


def f_eval(r: int, z: Number, t):
    """Evaluate the amplification factor at node(s) ``t`` in ``[0, 1]``."""
    if _is_exact(t):
        tt = Fraction(t)
        if not 0 <= tt <= 1:
            raise DomainError(f"t={t} outside [0, 1]")
    else:
        arr = np.asarray(t, dtype=float)
        if np.any(~(arr >= 0.0)) or np.any(~(arr <= 1.0)):
            raise DomainError("t outside [0, 1]")
    c = step_coeffs(r, z)
    if isinstance(c.head, RationalComplex):
        return c.head + c.tail * RationalComplex(Fraction(t) ** (r + 1))
    return c(t)


def f_direct(r: int, z: complex, t: float) -> complex:
    """Straight summation of the defining display; used as a test oracle."""
    total = 0j
    for j in range(r + 2):
        total += z ** j / math.factorial(j)
    return total + t ** (r + 1) / math.factorial(r + 1) * z ** (r + 2)


_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?"
_COMPLEX_RE = re.compile(rf"^\s*(?P<re>[+-]?{_NUM})?\s*(?:(?P<sign>[+-])\s*(?P<im>{_NUM})?\s*i)?\s*$")


def parse_complex(text: str) -> RationalComplex:
    """Parse ``"<real>[+|-]<imag>i"``; components are decimals or ``p/q``.

    Decimal components are read exactly (``"0.01"`` becomes ``1/100``).
    A bare real (``"-2.1"``) or a signed imaginary part (``"+2i"``) is accepted.
    """
    m = _COMPLEX_RE.match(text)
    if not m or (m.group("re") is None and m.group("sign") is None):
        raise ValueError(f"cannot parse complex literal {text!r}")
    re_part = Fraction(m.group("re")) if m.group("re") else Fraction(0)
    im_part = Fraction(0)
    if m.group("sign"):
        im_part = Fraction(m.group("im")) if m.group("im") else Fraction(1)
        if m.group("sign") == "-":
            im_part = -im_part
    return RationalComplex(re_part, im_part)
