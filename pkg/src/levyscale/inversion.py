"""Numerical inversion of Laplace transforms.

Four algorithms are provided:

* :func:`invert_filon` integrates the Bromwich integral written as a cosine
  transform with composite Filon quadrature; the oscillatory sums for a whole
  uniform ``x`` grid are obtained with the fractional FFT.  Works in double.
* :func:`gaver_stehfest`, :func:`euler_inversion` and :func:`talbot` are the
  classical multi-precision sums; they evaluate the transform at ``O(M)``
  points and need ``O(M)`` decimal digits.

A transform is wrapped in a :class:`TransformFn`.  Its evaluator is called
with mpmath numbers for the multi-precision methods and with complex numpy
arrays for Filon.
"""

from __future__ import annotations

import functools
import math
import threading
import warnings
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ChecksumError, ConfigError
from .kernel import NP_OPS, AccuracyWarning, frac_fft, mp_ops

__all__ = [
    "TransformFn",
    "FilonConfig",
    "MpConfig",
    "CutoffWarning",
    "filon_weights",
    "filon_cosine",
    "invert_filon",
    "filon_at",
    "gaver_stehfest",
    "euler_inversion",
    "talbot",
    "gs_coefficients",
    "euler_coefficients",
    "talbot_nodes",
    "rule_of_thumb_M",
]


class CutoffWarning(AccuracyWarning):
    """The transform has not decayed at the Filon cutoff ``b``."""


@dataclass(frozen=True)
class TransformFn:
    """A Laplace transform ``g`` to be inverted.

    Parameters
    ----------
    evaluator : callable
        ``evaluator(z)`` or, when ``takes_ops`` is true, ``evaluator(z, ops)``
        where ``ops`` is the math namespace matching the type of ``z``
        (:class:`~levyscale.kernel.MpOps` for scalars,
        :data:`~levyscale.kernel.NP_OPS` for arrays).
    analytic_halfplane : float
        ``g`` is analytic for ``Re(z)`` larger than this.
    real_symmetric : bool
        ``g(conj z) == conj g(z)``.
    array_evaluator : callable, optional
        Vectorised evaluator on complex arrays; defaults to ``evaluator``.
    """

    evaluator: Callable
    analytic_halfplane: float = 0.0
    real_symmetric: bool = True
    takes_ops: bool = False
    array_evaluator: Callable | None = None

    def at(self, z, ops):
        if self.takes_ops:
            return self.evaluator(z, ops)
        return self.evaluator(z)

    def on_array(self, z: np.ndarray) -> np.ndarray:
        if self.array_evaluator is not None:
            return np.asarray(self.array_evaluator(z), dtype=np.complex128)
        if self.takes_ops:
            return np.asarray(self.evaluator(z, NP_OPS), dtype=np.complex128)
        return np.asarray(self.evaluator(z), dtype=np.complex128)

    def scaled(self, factor) -> "TransformFn":
        """The transform multiplied by a constant (used for linearity checks)."""
        base = self

        def ev(z, ops=None):
            return factor * (base.at(z, ops) if ops is not None else base.on_array(z))

        return TransformFn(ev, self.analytic_halfplane, self.real_symmetric, True,
                           lambda z: factor * base.on_array(z))


# --------------------------------------------------------------------------
# configs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FilonConfig:
    """Parameters of the Filon/fractional-FFT inverter.

    The cosine integral over ``[0, b]`` is split at ``b_j = b (j/n)**p`` and
    each piece gets ``2N+1`` equally spaced nodes.  Output grid:
    ``x_m = x0 + m*delta_x`` for ``m = 0..Nx-1``.
    """

    c: float = 0.1
    b: float = 1e7
    n: int = 10
    p: float = 5.0
    N: int = 10_000
    x0: float | None = None
    delta_x: float | None = None
    Nx: int = 10_000

    def __post_init__(self):
        if not (self.c > 0 and self.b > 0):
            raise ConfigError("Filon: c and b must be positive")
        if self.n < 1 or self.N < 1 or self.Nx < 1:
            raise ConfigError("Filon: n, N and Nx must be positive")
        if self.p < 1:
            raise ConfigError("Filon: schedule exponent must be >= 1")
        if self.delta_x is None:
            object.__setattr__(self, "delta_x", 5.0 / self.Nx)
        if self.x0 is None:
            object.__setattr__(self, "x0", self.delta_x)
        if not self.delta_x > 0 or self.x0 < 0:
            raise ConfigError("Filon: need delta_x > 0 and x0 >= 0")

    def breaks(self) -> np.ndarray:
        j = np.arange(self.n + 1, dtype=float)
        return self.b * (j / self.n) ** self.p

    def grid(self) -> np.ndarray:
        return self.x0 + self.delta_x * np.arange(self.Nx)

    def snapshot(self) -> dict:
        return {"method": "filon", **asdict(self)}


@dataclass(frozen=True)
class MpConfig:
    """``M`` and the working precision for the multi-precision inverters.

    ``digits=None`` selects the usual rule of thumb at call time:
    ``ceil(2.2 M)`` for Gaver-Stehfest and ``M`` for Euler and Talbot.
    """

    M: int = 20
    digits: int | None = None

    def __post_init__(self):
        if self.M < 1:
            raise ConfigError("M must be positive")
        if self.digits is not None and self.digits < 5:
            raise ConfigError("digits must be at least 5")

    def digits_for(self, method: str) -> int:
        if self.digits is not None:
            return int(self.digits)
        if method == "gaver_stehfest":
            return int(math.ceil(2.2 * self.M))
        return max(int(self.M), 16)

    def snapshot(self, method: str) -> dict:
        return {"method": method, "M": self.M, "digits": self.digits_for(method)}


def rule_of_thumb_M(method: str, significant_digits: int) -> int:
    """Number of terms for ``significant_digits`` correct digits."""
    j = int(significant_digits)
    if method == "gaver_stehfest":
        return int(math.ceil(1.1 * j))
    if method in ("euler", "talbot"):
        return int(math.ceil(1.7 * j))
    raise ConfigError(f"no rule of thumb for {method!r}")


# --------------------------------------------------------------------------
# Filon
# --------------------------------------------------------------------------

# Taylor coefficients (in theta) of the Filon weights, used below _THETA_SMALL
_A_SERIES = (2 / 45, -2 / 315, 2 / 4725, -8 / 467775, 4 / 8513505, -2 / 212837625)
_B_SERIES = (2 / 3, 2 / 15, -4 / 105, 2 / 567, -4 / 22275, 4 / 675675, -8 / 58046625)
_C_SERIES = (4 / 3, -2 / 15, 1 / 210, -1 / 11340, 1 / 997920, -1 / 129729600, 1 / 23351328000)
_THETA_SMALL = 0.2


def filon_weights(theta):
    """Filon weights ``A, B, C`` at ``theta = h x`` (array in, arrays out)."""
    t = np.asarray(theta, dtype=float)
    small = np.abs(t) < _THETA_SMALL
    A = np.empty_like(t)
    B = np.empty_like(t)
    C = np.empty_like(t)
    ts = t[small]
    if ts.size:
        t2 = ts * ts
        A[small] = ts ** 3 * np.polyval(_A_SERIES[::-1], t2)
        B[small] = np.polyval(_B_SERIES[::-1], t2)
        C[small] = np.polyval(_C_SERIES[::-1], t2)
    tl = t[~small]
    if tl.size:
        s, c = np.sin(tl), np.cos(tl)
        A[~small] = 1 / tl + np.sin(2 * tl) / (2 * tl ** 2) - 2 * s ** 2 / tl ** 3
        B[~small] = 2 * ((1 + c ** 2) / tl ** 2 - np.sin(2 * tl) / tl ** 3)
        C[~small] = 4 * (s / tl ** 3 - c / tl ** 2)
    return A, B, C


def filon_cosine(G: Callable, a: float, b: float, N: int, x: float) -> float:
    """Composite Filon rule for ``int_a^b G(u) cos(x u) du`` with ``2N`` panels.

    Exact whenever ``G`` is a polynomial of degree at most two on each
    pair of panels.
    """
    if not a < b:
        raise ConfigError("filon_cosine needs a < b")
    if N < 1:
        raise ConfigError("filon_cosine needs N >= 1")
    h = (b - a) / (2 * N)
    u = a + h * np.arange(2 * N + 1)
    g = np.asarray(G(u), dtype=float)
    A, B, C = (float(w) for w in filon_weights(h * x))
    c1 = float(np.sum(g[1::2] * np.cos(x * u[1::2])))
    c2 = float(np.sum(g[2::2] * np.cos(x * u[2::2])))
    ga, gb = g[0], g[-1]
    return h * (A * (gb * math.sin(b * x) - ga * math.sin(a * x))
                + B * (c2 - 0.5 * (gb * math.cos(b * x) - ga * math.cos(a * x)))
                + C * c1)


def _filon_panel_fft(g: np.ndarray, a: float, h: float, x: np.ndarray, x0: float,
                     dx: float) -> np.ndarray:
    """Filon value of one sub-interval on the uniform grid ``x`` via fractional FFT."""
    N = (g.size - 1) // 2
    Nx = x.size
    b = a + 2 * N * h
    nn = np.arange(N)
    shift = np.exp(1j * 2 * h * x0 * nn)
    alpha = 2 * h * dx
    S1 = frac_fft(g[1::2] * shift, alpha, Nx)
    S2 = frac_fft(g[2::2] * shift, alpha, Nx)
    c1 = np.real(np.exp(1j * (a + h) * x) * S1)
    c2 = np.real(np.exp(1j * (a + 2 * h) * x) * S2)
    A, B, C = filon_weights(h * x)
    ga, gb = g[0], g[-1]
    return h * (A * (gb * np.sin(b * x) - ga * np.sin(a * x))
                + B * (c2 - 0.5 * (gb * np.cos(b * x) - ga * np.cos(a * x)))
                + C * c1)


def _filon_panel_direct(g: np.ndarray, a: float, h: float, x: np.ndarray) -> np.ndarray:
    N = (g.size - 1) // 2
    b = a + 2 * N * h
    u = a + h * np.arange(2 * N + 1)
    out = np.empty(x.size)
    A, B, C = filon_weights(h * x)
    ga, gb = g[0], g[-1]
    step = max(1, 2_000_000 // max(N, 1))
    for s in range(0, x.size, step):
        xs = x[s:s + step]
        c1 = np.cos(np.outer(xs, u[1::2])) @ g[1::2]
        c2 = np.cos(np.outer(xs, u[2::2])) @ g[2::2]
        out[s:s + step] = h * (A[s:s + step] * (gb * np.sin(b * xs) - ga * np.sin(a * xs))
                               + B[s:s + step] * (c2 - 0.5 * (gb * np.cos(b * xs) - ga * np.cos(a * xs)))
                               + C[s:s + step] * c1)
    return out


def _cosine_integrand(g: TransformFn, c: float, u: np.ndarray) -> np.ndarray:
    return np.real(g.on_array(c + 1j * u))


def _check_cutoff(g: TransformFn, cfg: FilonConfig):
    tail = abs(_cosine_integrand(g, cfg.c, np.array([cfg.b]))[0])
    head = abs(_cosine_integrand(g, cfg.c, np.array([0.0]))[0])
    if tail > 1e-10 * head:
        warnings.warn(f"Filon cutoff b={cfg.b:g}: |Re g(c+ib)| = {tail:.3g} is not negligible",
                      CutoffWarning, stacklevel=3)


def _check_filon_pre(g: TransformFn, cfg: FilonConfig):
    if not g.real_symmetric:
        raise ConfigError("Filon inversion needs a real-symmetric transform")
    if not cfg.c > g.analytic_halfplane:
        raise ConfigError(f"Filon abscissa c={cfg.c} must exceed the analytic half-plane "
                          f"bound {g.analytic_halfplane}")


def invert_filon(g: TransformFn, cfg: FilonConfig = FilonConfig()):
    """Invert ``g`` on the grid ``cfg.grid()``.

    Returns
    -------
    (x, f) : tuple of ndarray
    """
    _check_filon_pre(g, cfg)
    _check_cutoff(g, cfg)
    x = cfg.grid()
    total = np.zeros(x.size)
    br = cfg.breaks()
    for a, b in zip(br[:-1], br[1:]):
        h = (b - a) / (2 * cfg.N)
        u = a + h * np.arange(2 * cfg.N + 1)
        gv = _cosine_integrand(g, cfg.c, u)
        total += _filon_panel_fft(gv, a, h, x, cfg.x0, cfg.delta_x)
    return x, 2 * np.exp(cfg.c * x) / math.pi * total


def _uniform(x: np.ndarray):
    if x.size < 2:
        return None
    d = np.diff(x)
    dx = (x[-1] - x[0]) / (x.size - 1)
    if dx > 0 and np.all(np.abs(d - dx) <= 1e-9 * dx):
        return float(x[0]), float(dx)
    return None


def filon_at(g: TransformFn, x, cfg: FilonConfig = FilonConfig()) -> np.ndarray:
    """Filon inversion at arbitrary points ``x``.

    A uniform grid goes through the fractional FFT with ``x0``, ``delta_x``
    and ``Nx`` taken from ``x``; anything else is summed directly.
    """
    _check_filon_pre(g, cfg)
    _check_cutoff(g, cfg)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(x.size)
    uni = _uniform(x)
    br = cfg.breaks()
    for a, b in zip(br[:-1], br[1:]):
        h = (b - a) / (2 * cfg.N)
        u = a + h * np.arange(2 * cfg.N + 1)
        gv = _cosine_integrand(g, cfg.c, u)
        if uni is not None:
            out += _filon_panel_fft(gv, a, h, x, uni[0], uni[1])
        else:
            out += _filon_panel_direct(gv, a, h, x)
    return 2 * np.exp(cfg.c * x) / math.pi * out


# --------------------------------------------------------------------------
# multi-precision coefficient caches
# --------------------------------------------------------------------------

_cache_lock = threading.Lock()


@functools.lru_cache(maxsize=None)
def _gs_exact(M: int) -> tuple:
    fM = math.factorial(M)
    out = []
    for n in range(1, 2 * M + 1):
        s = Fraction(0)
        for j in range((n + 1) // 2, min(n, M) + 1):
            s += Fraction(j ** (M + 1), fM) * math.comb(M, j) * math.comb(2 * j, j) * math.comb(j, n - j)
        out.append(s if (M + n) % 2 == 0 else -s)
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _euler_exact(M: int) -> tuple:
    a = [Fraction(0)] * (2 * M + 1)
    a[0] = Fraction(1, 2)
    for n in range(1, M + 1):
        a[n] = Fraction(1)
    a[2 * M] = Fraction(1, 2 ** M)
    for k in range(1, M):
        a[2 * M - k] = a[2 * M - k + 1] + Fraction(math.comb(M, k), 2 ** M)
    return tuple(a)


def _to_ctx(fr: Fraction, ctx):
    return ctx.mpf(fr.numerator) / ctx.mpf(fr.denominator)


@functools.lru_cache(maxsize=256)
def gs_coefficients(M: int, digits: int) -> tuple:
    """Gaver-Stehfest weights ``a_1..a_2M`` rounded to ``digits`` digits."""
    ctx = mp_ops(digits).ctx
    return tuple(_to_ctx(fr, ctx) for fr in _gs_exact(M))


@functools.lru_cache(maxsize=256)
def euler_coefficients(M: int, digits: int) -> tuple:
    """Euler-summation weights ``a_0..a_2M`` rounded to ``digits`` digits."""
    ctx = mp_ops(digits).ctx
    return tuple(_to_ctx(fr, ctx) for fr in _euler_exact(M))


@functools.lru_cache(maxsize=256)
def talbot_nodes(M: int, digits: int) -> tuple:
    """Fixed-Talbot nodes ``b_n`` and weights ``a_n`` (``n = 0..M-1``)."""
    ctx = mp_ops(digits).ctx
    nodes = [ctx.mpf(2 * M) / 5]
    weights = [ctx.mpc(0, 1) / 5 * ctx.exp(nodes[0])]
    for n in range(1, M):
        th = ctx.pi * n / M
        b = 2 * ctx.pi * n / 5 * (ctx.cot(th) + ctx.mpc(0, 1))
        a = (b - ctx.mpf(5) / (2 * M) * abs(b) ** 2) * ctx.exp(b) / (n * ctx.pi)
        nodes.append(b)
        weights.append(a)
    return tuple(nodes), tuple(weights)


def _gs_checksum(M: int, digits: int) -> None:
    ctx = mp_ops(digits).ctx
    a = gs_coefficients(M, digits)
    # the weights reach 10**(M) in size, so the residue is measured against
    # the largest one; an absolute test would reject every usable precision
    scale = max(abs(w) for w in a)
    s = ctx.fsum(a)
    if abs(s) > scale * ctx.mpf(10) ** (3 - digits):
        raise ChecksumError(f"Gaver-Stehfest weights do not sum to zero at {digits} digits "
                            f"(|sum| = {float(abs(s)):.3g}); increase the precision")


def _euler_checksum(M: int, digits: int) -> None:
    ctx = mp_ops(digits).ctx
    a = euler_coefficients(M, digits)
    s = ctx.fsum((-1) ** n * a[n] for n in range(len(a)))
    if abs(s) > ctx.mpf(10) ** (3 - digits):
        raise ChecksumError(f"Euler weights fail the alternating-sum check at {digits} digits")


def _check_x(x):
    if not x > 0:
        raise ConfigError("inversion point x must be positive")


# --------------------------------------------------------------------------
# multi-precision inverters
# --------------------------------------------------------------------------

def gaver_stehfest(g: TransformFn, x: float, cfg: MpConfig = MpConfig(), *, raw: bool = False):
    """Gaver-Stehfest inversion at ``x > 0``.

    Only real arguments ``n ln2 / x`` are used.  Returns a float unless
    ``raw`` is set, in which case the mpmath number is returned.
    """
    _check_x(x)
    digits = cfg.digits_for("gaver_stehfest")
    _gs_checksum(cfg.M, digits)
    K = mp_ops(digits)
    ctx = K.ctx
    coeffs = gs_coefficients(cfg.M, digits)
    xx = ctx.mpf(x)
    step = ctx.ln2 / xx
    total = ctx.mpf(0)
    for n, a in enumerate(coeffs, start=1):
        total += a * ctx.re(g.at(n * step, K))
    val = step * total
    return val if raw else float(val)


def euler_inversion(g: TransformFn, x: float, cfg: MpConfig = MpConfig(), *, raw: bool = False):
    """Euler-accelerated Fourier-series inversion at ``x > 0``."""
    _check_x(x)
    digits = cfg.digits_for("euler")
    _euler_checksum(cfg.M, digits)
    K = mp_ops(digits)
    ctx = K.ctx
    M = cfg.M
    a = euler_coefficients(M, digits)
    xx = ctx.mpf(x)
    A = M * ctx.ln10 / 3
    total = ctx.mpf(0)
    for n in range(2 * M + 1):
        z = ctx.mpc(A, ctx.pi * n) / xx
        term = a[n] * ctx.re(g.at(z, K))
        total += term if n % 2 == 0 else -term
    val = ctx.power(10, ctx.mpf(M) / 3) / xx * total
    return val if raw else float(val)


def talbot(g: TransformFn, x: float, cfg: MpConfig = MpConfig(), *, raw: bool = False):
    """Fixed-Talbot inversion at ``x > 0``."""
    _check_x(x)
    digits = cfg.digits_for("talbot")
    K = mp_ops(digits)
    ctx = K.ctx
    nodes, weights = talbot_nodes(cfg.M, digits)
    xx = ctx.mpf(x)
    total = ctx.mpf(0)
    for b, a in zip(nodes, weights):
        total += ctx.im(a * g.at(b / xx, K))
    val = total / xx
    return val if raw else float(val)


MP_METHODS = {
    "gaver_stehfest": gaver_stehfest,
    "euler": euler_inversion,
    "talbot": talbot,
}
