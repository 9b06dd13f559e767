"""Exact scalar arithmetic: rationals and complex rationals.

Rationals are gmpy2.mpq when available (much faster), fractions.Fraction
otherwise; both are kept in lowest terms with positive denominator.  QC is
a minimal complex number over the rationals, used for the exact values of
step functions on piecewise-linear maps.  Mixing an exact scalar with a
float or complex deliberately degrades to python complex; gmpy2's mpfr is
never allowed to leak into results.
"""

from __future__ import annotations

import math
from fractions import Fraction

try:
    from gmpy2 import mpq as _mpq

    _RAT_TYPES = (type(_mpq(1)), Fraction)
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _mpq = Fraction
    _RAT_TYPES = (Fraction,)

#: Types accepted as exact rational scalars.
RATIONAL_TYPES = _RAT_TYPES + (int,)


_MPQ_TYPE = type(_mpq(1))


def qq(x, den=None):
    """Exact rational from int, string 'p/q', Fraction, mpq or float.

    Floats convert to their exact binary value (qq(0.5) == 1/2 exactly,
    qq(0.3) == 5404319552844595/2**54).  Two-argument form qq(p, q) builds
    p/q.
    """
    if den is not None:
        return _mpq(x, den)
    if type(x) is _MPQ_TYPE:
        return x
    if isinstance(x, RATIONAL_TYPES):
        return _mpq(x)
    if isinstance(x, float):
        return _mpq(Fraction(x))
    if isinstance(x, str):
        return _mpq(x.strip())
    raise TypeError(f"cannot build a rational from {type(x).__name__}")


QQ_ZERO = qq(0)
QQ_ONE = qq(1)


def qq_str(q) -> str:
    """Canonical 'p/q' (or 'p') string form."""
    q = qq(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def snap_dyadic(x: float, bits: int = 48):
    """Round a float to the nearest multiple of 2**-bits, as an exact rational.

    Used when float breakpoints (smooth-map preimages) must enter the exact
    step-function representation; the snap error is at most 2**-(bits+1).
    """
    scale = 1 << bits
    return _mpq(round(x * scale), scale)


def snap_dyadic_array(xs, bits: int = 48) -> list:
    """Vectorized snap_dyadic for a numpy float array."""
    import numpy as np

    scale = 1 << bits
    ints = np.rint(np.asarray(xs, dtype=float) * scale).astype(np.int64)
    return [_mpq(int(n), scale) for n in ints]


class QC:
    """Complex number with exact rational real and imaginary parts.

    Arithmetic with int / Fraction / mpq / QC stays exact; arithmetic with
    float or complex returns a python complex.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = qq(re)
        self.im = qq(im)

    @classmethod
    def _raw(cls, re, im) -> "QC":
        # internal: components already rational; skips re-validation
        out = cls.__new__(cls)
        out.re = re
        out.im = im
        return out

    @classmethod
    def from_complex(cls, z) -> "QC":
        """Exact conversion: the binary values of z.real and z.imag."""
        if isinstance(z, QC):
            return z
        z = complex(z)
        return cls(qq(z.real), qq(z.imag))

    # -- arithmetic (type checks ordered for the exact hot path) ---------

    def __add__(self, other):
        t = type(other)
        if t is QC:
            return QC._raw(self.re + other.re, self.im + other.im)
        if t is _MPQ_TYPE or t is int:
            return QC._raw(self.re + other, self.im)
        if t is float or t is complex:
            return complex(self) + other
        if isinstance(other, RATIONAL_TYPES):
            return QC._raw(self.re + other, self.im)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        t = type(other)
        if t is QC:
            return QC._raw(self.re - other.re, self.im - other.im)
        if t is _MPQ_TYPE or t is int:
            return QC._raw(self.re - other, self.im)
        if t is float or t is complex:
            return complex(self) - other
        if isinstance(other, RATIONAL_TYPES):
            return QC._raw(self.re - other, self.im)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        t = type(other)
        if t is QC:
            return QC._raw(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        if t is _MPQ_TYPE or t is int:
            return QC._raw(self.re * other, self.im * other)
        if t is float or t is complex:
            return complex(self) * other
        if isinstance(other, RATIONAL_TYPES):
            return QC._raw(self.re * other, self.im * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, RATIONAL_TYPES):
            return QC(self.re / other, self.im / other)
        if isinstance(other, QC):
            d = other.re * other.re + other.im * other.im
            if d == 0:
                raise ZeroDivisionError("division by QC zero")
            return QC(
                (self.re * other.re + self.im * other.im) / d,
                (self.im * other.re - self.re * other.im) / d,
            )
        if isinstance(other, (float, complex)):
            return complex(self) / other
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, RATIONAL_TYPES):
            return QC(other) / self
        if isinstance(other, (float, complex)):
            return other / complex(self)
        return NotImplemented

    def __neg__(self):
        return QC._raw(-self.re, -self.im)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            return complex(self) ** n
        out = QC(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self) -> "QC":
        return QC(self.re, -self.im)

    def abs2(self):
        """|z|^2 as an exact rational."""
        return self.re * self.re + self.im * self.im

    def __abs__(self) -> float:
        return math.hypot(float(self.re), float(self.im))

    # -- conversions & comparisons --------------------------------------

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, QC):
            return self.re == other.re and self.im == other.im
        if isinstance(other, RATIONAL_TYPES):
            return self.im == 0 and self.re == other
        if isinstance(other, (float, complex)):
            return complex(self) == complex(other)
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        return f"QC({qq_str(self.re)}, {qq_str(self.im)})"


QC_ZERO = QC(0)
QC_ONE = QC(1)


def is_exact(v) -> bool:
    """True for scalars carried exactly (int, Fraction, mpq, QC)."""
    return isinstance(v, RATIONAL_TYPES) or isinstance(v, QC)


def as_exact(v):
    """Promote a scalar to an exact one (floats via their binary value)."""
    if isinstance(v, QC) or isinstance(v, RATIONAL_TYPES):
        return v
    if isinstance(v, float):
        return qq(v)
    if isinstance(v, complex):
        return QC.from_complex(v)
    raise TypeError(f"cannot promote {type(v).__name__} to exact")


def to_complex(v) -> complex:
    """Float-complex view of any accepted scalar."""
    if isinstance(v, (int, float, complex)):
        return complex(v)
    if isinstance(v, QC):
        return complex(v)
    return complex(float(v), 0.0)


def vmul_rat(v, q):
    """v * q for rational q: exact when v is exact, float otherwise."""
    if isinstance(v, QC) or isinstance(v, RATIONAL_TYPES):
        return v * q
    return v * float(q)


def vabs(v) -> float:
    if isinstance(v, (int, float, complex)):
        return abs(v)
    if isinstance(v, QC):
        return abs(v)
    return float(abs(v))  # rational


def vabs_exact(v):
    """|v| kept exact for real exact scalars; QC falls back to float."""
    if isinstance(v, RATIONAL_TYPES):
        return abs(v)
    if isinstance(v, QC) and v.im == 0:
        return abs(v.re)
    return vabs(v)


def vconj(v):
    if isinstance(v, QC):
        return v.conjugate()
    if isinstance(v, complex):
        return v.conjugate()
    return v  # real scalars
