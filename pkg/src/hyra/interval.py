"""Closed real intervals with outward rounding.

Intervals are plain ``(lo, hi)`` tuples so they stay cheap inside the
propagation loops.  Every primitive widens its result by one ulp on each
side; that is the only rounding control we rely on.
"""

import math
from typing import NamedTuple

INF = math.inf
_down = math.nextafter


class Interval(NamedTuple):
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            if self.lo == -INF and self.hi == INF:
                return 0.0
            return self.lo if math.isinf(self.hi) else self.hi
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"


ENTIRE = Interval(-INF, INF)


def point(x: float) -> Interval:
    return Interval(x, x)


def outward(lo: float, hi: float) -> Interval:
    if lo != lo or hi != hi:  # NaN from inf - inf and friends
        return ENTIRE
    return Interval(_down(lo, -INF), _down(hi, INF))


def is_empty(a) -> bool:
    return a[0] > a[1]


def meet(a, b):
    """Intersection; returns None when empty."""
    lo = a[0] if a[0] > b[0] else b[0]
    hi = a[1] if a[1] < b[1] else b[1]
    if lo > hi:
        return None
    return Interval(lo, hi)


def hull(a, b) -> Interval:
    return Interval(min(a[0], b[0]), max(a[1], b[1]))


def add(a, b) -> Interval:
    return outward(a[0] + b[0], a[1] + b[1])


def sub(a, b) -> Interval:
    return outward(a[0] - b[1], a[1] - b[0])


def neg(a) -> Interval:
    return Interval(-a[1], -a[0])


def _mul0(x: float, y: float) -> float:
    # 0 * inf counts as 0 for enclosure purposes
    if x == 0.0 or y == 0.0:
        return 0.0
    return x * y


def mul(a, b) -> Interval:
    if a[0] == a[1] == 0.0 or b[0] == b[1] == 0.0:
        return Interval(0.0, 0.0)
    a0, a1 = a
    b0, b1 = b
    p, q, r, s = a0 * b0, a0 * b1, a1 * b0, a1 * b1
    if p != p or q != q or r != r or s != s:
        p, q, r, s = _mul0(a0, b0), _mul0(a0, b1), _mul0(a1, b0), _mul0(a1, b1)
    lo = p if p < q else q
    lo = lo if lo < r else r
    lo = lo if lo < s else s
    hi = p if p > q else q
    hi = hi if hi > r else r
    hi = hi if hi > s else s
    return Interval(_down(lo, -INF), _down(hi, INF))


def scale(c: float, a) -> Interval:
    return mul((c, c), a)


def div(a, b) -> Interval:
    """a / b.  A divisor straddling zero yields the entire line."""
    if b[0] > 0.0 or b[1] < 0.0:
        qs = (a[0] / b[0], a[0] / b[1], a[1] / b[0], a[1] / b[1])
        return outward(min(qs), max(qs))
    if b[0] == 0.0 and b[1] > 0.0:
        if a[0] >= 0.0:
            return outward(a[0] / b[1], INF)
        if a[1] <= 0.0:
            return outward(-INF, a[1] / b[1])
    if b[1] == 0.0 and b[0] < 0.0:
        if a[0] >= 0.0:
            return outward(-INF, a[0] / b[0])
        if a[1] <= 0.0:
            return outward(a[1] / b[0], INF)
    return ENTIRE


def sqr(a) -> Interval:
    lo, hi = a
    if lo >= 0.0:
        return outward(lo * lo, hi * hi)
    if hi <= 0.0:
        return outward(hi * hi, lo * lo)
    return Interval(0.0, _down(max(lo * lo, hi * hi), INF))  # 0 is exact


def ipow(a, n: int) -> Interval:
    if n == 0:
        return Interval(1.0, 1.0)
    if n == 1:
        return Interval(a[0], a[1])
    if n == 2:
        return sqr(a)
    lo, hi = a
    try:
        if n % 2 == 1:
            return outward(_pw(lo, n), _pw(hi, n))
        if lo >= 0.0:
            return outward(_pw(lo, n), _pw(hi, n))
        if hi <= 0.0:
            return outward(_pw(hi, n), _pw(lo, n))
        return Interval(0.0, _down(max(_pw(lo, n), _pw(hi, n)), INF))
    except OverflowError:
        return ENTIRE


def _pw(x: float, n: int) -> float:
    try:
        return x ** n
    except OverflowError:
        return math.copysign(INF, x) if n % 2 else INF


def sqrt(a):
    """Square root restricted to the non-negative part; None if none."""
    lo, hi = a
    if hi < 0.0:
        return None
    lo = max(lo, 0.0)
    return Interval(max(0.0, _down(math.sqrt(lo), -INF)), _down(math.sqrt(hi), INF))


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return INF


def exp(a) -> Interval:
    lo = _exp(a[0]) if a[0] != -INF else 0.0
    hi = _exp(a[1])
    return Interval(max(0.0, _down(lo, -INF)), _down(hi, INF))


def log(a):
    lo, hi = a
    if hi <= 0.0:
        return None
    lo_v = math.log(lo) if lo > 0.0 else -INF
    hi_v = math.log(hi) if hi != INF else INF
    return outward(lo_v, hi_v)


_TWO_PI = 2.0 * math.pi


def _trig(fn, a, first_peak: float) -> Interval:
    """Enclosure of sin or cos; extrema sit at first_peak + k*pi, alternating +1/-1."""
    lo, hi = a
    if math.isinf(lo) or math.isinf(hi) or hi - lo >= _TWO_PI:
        return Interval(-1.0, 1.0)
    vals = [fn(lo), fn(hi)]
    k = math.ceil((lo - first_peak) / math.pi)
    while first_peak + k * math.pi <= hi:
        vals.append(1.0 if k % 2 == 0 else -1.0)
        k += 1
    # libm is not correctly rounded; two ulps of slack on each side
    r = outward(*outward(min(vals), max(vals)))
    return Interval(max(r[0], -1.0), min(r[1], 1.0))


def sin(a) -> Interval:
    return _trig(math.sin, a, math.pi / 2)


def cos(a) -> Interval:
    return _trig(math.cos, a, 0.0)


def imin(a, b) -> Interval:
    return Interval(min(a[0], b[0]), min(a[1], b[1]))


def imax(a, b) -> Interval:
    return Interval(max(a[0], b[0]), max(a[1], b[1]))


def nth_root_hull(r, n: int):
    """Preimage of r under x -> x**n (n >= 1); None if empty."""
    lo, hi = r
    if n % 2 == 1:
        return Interval(_root(lo, n, -1), _root(hi, n, 1))
    if hi < 0.0:
        return None
    m = _root(hi, n, 1)
    return Interval(-m, m)


def _root(x: float, n: int, side: int) -> float:
    """n-th root of x rounded towards -inf (side -1) or +inf (side 1)."""
    if math.isinf(x) or x == 0.0:
        return x
    r = math.copysign(abs(x) ** (1.0 / n), x)
    # 1/n is inexact, so the error grows with |log x|
    slack = abs(r) * (abs(math.log(abs(x))) + 4.0) * 2.3e-16
    return r + side * slack + side * 5e-324
