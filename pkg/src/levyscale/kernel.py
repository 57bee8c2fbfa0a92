"""Numeric kernel: precision contexts, special functions and the fractional FFT.

Everything that needs more than double precision goes through an explicit
:class:`PrecisionContext`.  Contexts are cached per number of digits and are
never mutated after creation, so they can be shared freely between threads.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
import scipy.fft
import scipy.special as sps

__all__ = [
    "AccuracyWarning",
    "PrecisionContext",
    "MpOps",
    "NpOps",
    "NP_OPS",
    "mp_context",
    "mittag_leffler",
    "mittag_leffler_negative_params",
    "incomplete_gamma",
    "lower_incomplete_gamma",
    "frac_fft",
]


class AccuracyWarning(UserWarning):
    """Raised (as a warning) when a result may not meet its nominal accuracy."""


# --------------------------------------------------------------------------
# precision contexts
# --------------------------------------------------------------------------

@functools.lru_cache(maxsize=64)
def mp_context(digits: int) -> mpmath.ctx_mp.MPContext:
    """Return a private mpmath context working with ``digits`` decimal digits.

    The returned object is shared through a cache, callers must not change
    its precision.
    """
    if digits < 1:
        raise ValueError("digits must be positive")
    ctx = mpmath.MPContext()
    ctx.dps = int(digits)
    return ctx


_MODES = ("native-double", "extended", "arbitrary")


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision for multi-precision computations.

    Parameters
    ----------
    digits : int
        Significant decimal digits.
    mode : str
        ``"native-double"`` (hardware doubles, about 16 digits),
        ``"extended"`` (32 digits) or ``"arbitrary"`` (``digits`` as given).
    """

    digits: int = 16
    mode: str = "native-double"

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown precision mode {self.mode!r}")
        if self.digits < 1:
            raise ValueError("digits must be positive")
        if self.mode == "native-double" and self.digits != 16:
            object.__setattr__(self, "digits", 16)
        if self.mode == "extended" and self.digits != 32:
            object.__setattr__(self, "digits", 32)

    @classmethod
    def double(cls) -> "PrecisionContext":
        return cls(16, "native-double")

    @classmethod
    def extended(cls) -> "PrecisionContext":
        return cls(32, "extended")

    @classmethod
    def with_digits(cls, digits: int) -> "PrecisionContext":
        """Pick the cheapest mode that carries ``digits`` digits."""
        if digits <= 15:
            return cls.double()
        return cls(int(digits), "arbitrary")

    @property
    def ctx(self):
        if self.mode == "native-double":
            return mpmath.fp
        return mp_context(self.digits)

    @property
    def ops(self) -> "MpOps":
        return mp_ops(self.digits if self.mode != "native-double" else 0)

    @property
    def eps(self) -> float:
        return 10.0 ** (1 - self.digits)


class MpOps:
    """Scalar math namespace on top of an mpmath context (``fp`` or ``mp``)."""

    is_array = False

    def __init__(self, ctx):
        self.ctx = ctx
        self.pi = ctx.pi
        self.j = ctx.mpc(0, 1)

    def real(self, x):
        return self.ctx.mpf(x)

    def cplx(self, z):
        return self.ctx.mpc(z)

    def sqrt(self, z):
        return self.ctx.sqrt(z)

    def exp(self, z):
        return self.ctx.exp(z)

    def expm1(self, z):
        return self.ctx.expm1(z)

    def log(self, z):
        return self.ctx.log(z)

    def power(self, z, p):
        return self.ctx.power(z, p)

    def ipow(self, z, k):
        return z ** int(k)

    def coth(self, z):
        return self.ctx.coth(z)

    def cot(self, z):
        return self.ctx.cot(z)

    def gamma(self, x):
        return self.ctx.gamma(x)

    def rgamma(self, x):
        return self.ctx.rgamma(x)

    def loggamma(self, z):
        return self.ctx.loggamma(z)

    def beta(self, x, y):
        return self.ctx.beta(x, y)

    def polygamma(self, n, z):
        return self.ctx.psi(n, z)

    def binomial(self, n, k):
        return self.ctx.binomial(n, k)

    def re(self, z):
        return self.ctx.re(z)

    def im(self, z):
        return self.ctx.im(z)

    def fabs(self, z):
        return abs(z)


@functools.lru_cache(maxsize=64)
def mp_ops(digits: int) -> MpOps:
    """Cached :class:`MpOps`; ``digits=0`` means the hardware ``fp`` context."""
    return MpOps(mpmath.fp if digits == 0 else mp_context(digits))


class NpOps:
    """Vectorised complex-double namespace with the same surface as MpOps."""

    is_array = True
    pi = math.pi
    j = 1j

    def real(self, x):
        return float(x)

    def cplx(self, z):
        return np.asarray(z, dtype=np.complex128)

    sqrt = staticmethod(np.sqrt)
    exp = staticmethod(np.exp)
    expm1 = staticmethod(np.expm1)
    log = staticmethod(np.log)

    @staticmethod
    def power(z, p):
        return np.power(z, p)

    @staticmethod
    def ipow(z, k):
        return z ** int(k)

    @staticmethod
    def coth(z):
        return 1.0 / np.tanh(z)

    @staticmethod
    def cot(z):
        return 1.0 / np.tan(z)

    @staticmethod
    def gamma(x):
        return sps.gamma(x)

    @staticmethod
    def rgamma(x):
        return sps.rgamma(x)

    @staticmethod
    def loggamma(z):
        return sps.loggamma(z)

    @staticmethod
    def beta(x, y):
        return _np_beta(x, y)

    @staticmethod
    def polygamma(n, z):
        if n == 0:
            return sps.digamma(z)
        z = np.asarray(z)
        if np.iscomplexobj(z) and np.any(z.imag != 0):
            raise ValueError("polygamma of order >= 1 needs a real argument in double mode")
        return sps.polygamma(n, np.real(z))

    @staticmethod
    def binomial(n, k):
        return sps.binom(n, k)

    re = staticmethod(np.real)
    im = staticmethod(np.imag)
    fabs = staticmethod(np.abs)


NP_OPS = NpOps()


def _np_beta(x, y):
    """Complex Beta function ``B(x, y)`` for array ``x`` and real scalar ``y``.

    Evaluated as ``Gamma(y) * Gamma(x)/Gamma(x+y)`` where the ratio goes
    through log-gamma differences.  For ``Re(x) < 1/2`` the reflection
    formula is applied first so that the log-gammas are taken at arguments
    with positive real part; this keeps the ratio finite far out on the
    negative axis.
    """
    x = np.asarray(x, dtype=np.complex128)
    gy = sps.gamma(y)
    out = np.empty_like(x)
    right = x.real >= 0.5
    xr = x[right]
    out[right] = gy * np.exp(sps.loggamma(xr) - sps.loggamma(xr + y))
    xl = x[~right]
    if xl.size:
        ratio = np.sin(np.pi * (xl + y)) / np.sin(np.pi * xl)
        out[~right] = gy * ratio * np.exp(sps.loggamma(1 - xl - y) - sps.loggamma(1 - xl))
    return out


# --------------------------------------------------------------------------
# Mittag-Leffler functions
# --------------------------------------------------------------------------

_SERIES_GUARD_LIMIT = 300     # extra digits we are willing to spend on the series


def _ml_series(alpha, beta, x, digits, guard):
    ctx = mp_context(digits + guard)
    a = ctx.mpf(alpha)
    b = ctx.mpf(beta)
    if isinstance(x, complex):
        xx = ctx.mpc(x)
    else:
        xx = ctx.mpf(x)
    eps = ctx.mpf(10) ** (-(digits + 2))
    total = ctx.rgamma(b)
    power = ctx.mpf(1)
    # terms can only be discarded after they have started to decrease
    n_peak = int(abs(complex(x)) ** (1.0 / alpha) / alpha) + 2
    small_run = 0
    n = 0
    scale = abs(total)
    while True:
        n += 1
        power *= xx
        term = power * ctx.rgamma(a * n + b)
        total += term
        at = abs(term)
        if at > scale:
            scale = at
        # below ctx.eps * scale a term is lost in the rounding of the partial sums
        if n > n_peak and at <= max(eps * abs(total), ctx.eps * scale):
            small_run += 1
            if small_run >= 3:
                break
        else:
            small_run = 0
        if n > 200000:
            raise ArithmeticError("Mittag-Leffler series did not converge")
    return total


def _ml_asymptotic(alpha, beta, x, digits):
    """Algebraic expansion for large negative ``x`` and ``0 < alpha < 1``."""
    ctx = mp_context(digits + 10)
    a = ctx.mpf(alpha)
    b = ctx.mpf(beta)
    xx = ctx.mpf(x)
    total = ctx.mpf(0)
    best = None
    xinv = 1 / xx
    p = ctx.mpf(1)
    for k in range(1, 400):
        p *= xinv
        term = -p * ctx.rgamma(b - a * k)
        at = abs(term)
        if best is not None and at > best and at != 0:
            break
        total += term
        if at != 0:
            best = at if best is None else min(best, at)
        if best is not None and best < ctx.mpf(10) ** (-(digits + 4)) * abs(total):
            break
    return total


def mittag_leffler(alpha: float, beta: float, x, digits: int = 16):
    """Two-parameter Mittag-Leffler function ``E_{alpha,beta}(x)``.

    Parameters
    ----------
    alpha, beta : float
        Positive parameters.
    x : float or complex
        Argument.  Complex arguments are summed by the power series.
    digits : int
        Target number of correct decimal digits (default: double precision).

    Returns
    -------
    float or complex
        ``sum_n x**n / Gamma(alpha*n + beta)``.

    Notes
    -----
    The power series is accumulated with extra working digits so that the
    cancellation for negative arguments (largest term of size about
    ``exp(|x|**(1/alpha))``) is absorbed.  Only when that would need more than
    a few hundred guard digits, and ``0 < alpha < 1``, the algebraic
    expansion ``-sum_k x**-k / Gamma(beta - alpha*k)`` is used instead; an
    :class:`AccuracyWarning` is emitted there when ``alpha < 0.5``.
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError("mittag_leffler needs alpha > 0 and beta > 0")
    is_complex = isinstance(x, complex) or np.iscomplexobj(x)
    if is_complex:
        x = complex(x)
        if x.imag == 0:
            is_complex = False
            x = x.real
    else:
        x = float(x)
    if alpha == 1 and beta == 1:
        ctx = mp_context(digits + 5)
        val = ctx.exp(ctx.mpc(x) if is_complex else ctx.mpf(x))
        return complex(val) if is_complex else float(val)
    if x == 0:
        return float(mpmath.rgamma(beta)) if not is_complex else complex(mpmath.rgamma(beta))
    mag = abs(x) ** (1.0 / alpha)
    negative = (not is_complex) and x < 0
    if negative or is_complex:
        guard = int(mag / math.log(10.0)) + 20
    else:
        guard = 20
    if guard <= _SERIES_GUARD_LIMIT:
        val = _ml_series(alpha, beta, x, digits, guard)
    elif negative and alpha < 1:
        if alpha < 0.5:
            warnings.warn(
                "Mittag-Leffler asymptotic branch used with alpha < 0.5; "
                "accuracy may be reduced", AccuracyWarning, stacklevel=2)
        val = _ml_asymptotic(alpha, beta, x, digits)
    else:
        if guard > 4 * _SERIES_GUARD_LIMIT:
            raise ValueError("argument too large for the Mittag-Leffler series")
        val = _ml_series(alpha, beta, x, digits, guard)
    return complex(val) if is_complex else float(val)


def mittag_leffler_negative_params(alpha: float, beta: float, x, digits: int = 16):
    """Mittag-Leffler function written with negative parameters.

    The scale-function literature writes ``E_{-a,-a}`` for ``a < 0`` inside
    the Laplace pair

        int_0^inf e^{-t x} lam^{-1} x^{-a-1} E_{-a,-a}(x^{-a}/lam) dx
            = lam / (lam - t**a) - 1.

    With ``alpha = a < 0`` the subscripts ``-a`` are positive, so the value
    that satisfies the pair is the ordinary function ``E_{|a|,|a|}``.  That
    is what this returns; only ``-1 < alpha < 0`` and ``beta == alpha`` are
    accepted because that is the only place the notation occurs.
    """
    if not (-1 < alpha < 0):
        raise ValueError("alpha must lie in (-1, 0)")
    if beta != alpha:
        raise ValueError("only beta == alpha is supported")
    return mittag_leffler(-alpha, -beta, x, digits)


# --------------------------------------------------------------------------
# incomplete gamma
# --------------------------------------------------------------------------

def incomplete_gamma(a: float, b: float) -> float:
    """Upper incomplete gamma ``Gamma(a, b) = int_b^inf t^(a-1) e^-t dt``."""
    if not a > 0:
        raise ValueError("incomplete_gamma needs a > 0")
    if b < 0:
        raise ValueError("incomplete_gamma needs b >= 0")
    ctx = mp_context(25)
    return float(ctx.gammainc(ctx.mpf(a), ctx.mpf(b)))


def lower_incomplete_gamma(a: float, b: float) -> float:
    """Lower incomplete gamma ``gamma(a, b) = int_0^b t^(a-1) e^-t dt``."""
    if not a > 0:
        raise ValueError("lower_incomplete_gamma needs a > 0")
    if b < 0:
        raise ValueError("lower_incomplete_gamma needs b >= 0")
    ctx = mp_context(25)
    return float(ctx.gammainc(ctx.mpf(a), 0, ctx.mpf(b)))


# --------------------------------------------------------------------------
# fractional FFT
# --------------------------------------------------------------------------

_TWO_PI_LD = np.longdouble("6.283185307179586476925286766559005768394")


def _chirp(alpha: float, k: np.ndarray, sign: float) -> np.ndarray:
    """``exp(sign * i * alpha * k**2 / 2)`` with the phase reduced in long double."""
    k2 = np.asarray(k, dtype=np.longdouble) ** 2
    phase = np.fmod(np.longdouble(alpha) * k2 / 2, _TWO_PI_LD)
    phase = phase.astype(np.float64)
    return np.cos(phase) + 1j * sign * np.sin(phase)


def frac_fft(v, alpha: float, m: int | None = None) -> np.ndarray:
    """Fractional discrete Fourier transform.

    Computes ``V_k = sum_{n=0}^{N-1} v_n exp(i*alpha*n*k)`` for
    ``k = 0..m-1`` (``m`` defaults to ``N``) with three FFTs, using the
    identity ``n*k = (n**2 + k**2 - (k-n)**2)/2``.

    The quadratic chirp phases are reduced modulo ``2*pi`` in extended
    precision, which keeps the result accurate for large ``N*|alpha|``.
    """
    v = np.asarray(v, dtype=np.complex128).ravel()
    n = v.size
    if n == 0:
        raise ValueError("frac_fft needs at least one sample")
    m = n if m is None else int(m)
    if m < 1:
        raise ValueError("output length must be positive")
    if n == 1:
        return np.full(m, v[0], dtype=np.complex128)
    length = scipy.fft.next_fast_len(n + m - 1)
    a = np.zeros(length, dtype=np.complex128)
    a[:n] = v * _chirp(alpha, np.arange(n), +1.0)
    b = np.zeros(length, dtype=np.complex128)
    b[:m] = _chirp(alpha, np.arange(m), -1.0)
    if n > 1:
        b[length - n + 1:] = _chirp(alpha, np.arange(n - 1, 0, -1), -1.0)
    conv = scipy.fft.ifft(scipy.fft.fft(a) * scipy.fft.fft(b))
    return conv[:m] * _chirp(alpha, np.arange(m), +1.0)
