"""Student-t significance tests for comparing recall samples.

The two-tailed p value comes from the regularized incomplete beta
function, evaluated with a Lentz-style continued fraction so the
package carries no dependency on a stats library.  Numerics follow the
standard treatment: the fraction converges quickly for
x < (a + 1)/(a + b + 2) and the symmetry I_x(a, b) = 1 - I_{1-x}(b, a)
covers the rest.
"""

import math
from dataclasses import dataclass

import numpy as np

_CF_EPS = 3e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 600


class DegenerateTestError(ValueError):
    """Raised when the data have no variance to test against."""


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    std: float


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float


def summarize(values) -> SampleSummary:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty sample")
    std = float(arr.std(ddof=1)) if arr.size > 1 else math.nan
    return SampleSummary(n=int(arr.size), mean=float(arr.mean()), std=std)


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz form."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        numerator = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + numerator * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + numerator / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        numerator = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + numerator * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + numerator / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _CF_EPS:
            return h
    raise RuntimeError(f"incomplete beta fraction did not converge for a={a}, b={b}, x={x}")


def _betainc_reg(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """Two-tailed p value for a t statistic: P(|T| >= |t|)."""
    if df <= 0.0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    x = df / (df + t * t)
    return _betainc_reg(df / 2.0, 0.5, x)


def paired_t_test(a, b) -> TTestResult:
    """Test whether paired samples differ; positive t means b exceeds a."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in length: {a.size} vs {b.size}")
    n = a.size
    if n < 2:
        raise ValueError("paired test needs at least 2 pairs")
    d = b - a
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateTestError("paired differences are constant")
    t = float(d.mean()) / (sd / math.sqrt(n))
    df = n - 1
    return TTestResult(t=t, df=float(df), p=t_sf(t, df))


def welch_t_test(a, b) -> TTestResult:
    """Unequal-variance two-sample test; positive t means b exceeds a."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    va = float(a.var(ddof=1)) / a.size
    vb = float(b.var(ddof=1)) / b.size
    se2 = va + vb
    if se2 == 0.0:
        raise DegenerateTestError("both samples are constant")
    t = (float(b.mean()) - float(a.mean())) / math.sqrt(se2)
    df = se2**2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    return TTestResult(t=t, df=df, p=t_sf(t, df))
