"""Spectrally negative Levy processes described by their Laplace exponent.

A :class:`LevyModel` is an immutable sum of closed-form components.  Each
component knows its contribution to the Laplace exponent ``psi`` and the
first three derivatives, both for scalar multi-precision arguments (through
an :class:`~levyscale.kernel.MpOps` namespace) and for numpy arrays.

Conventions: ``psi(z) = log E exp(z X_1)``; jumps are downward and a jump
"of size y" means a jump from ``x`` to ``x - y`` with ``y > 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import ClassVar, Sequence

import mpmath
import numpy as np
import scipy.special as sps

from .errors import BracketError, ConfigError, DomainError, PoleError
from .kernel import NP_OPS, MpOps, PrecisionContext, mp_ops

__all__ = [
    "JumpComponent",
    "Gaussian",
    "Drift",
    "TemperedStable",
    "Stable",
    "Atom",
    "ShiftedExponential",
    "RationalTerm",
    "Rational",
    "Theta",
    "Beta",
    "Tilted",
    "LevyModel",
    "PathClass",
    "psi",
    "psi_derivative",
    "phi_q",
    "classify",
    "boundary_values",
    "model_from_dict",
    "model_to_dict",
    "load_model",
]

_POLE_RTOL = 1e-12


def _ops_for(ops):
    return mp_ops(0) if ops is None else ops


def _is_real_point(z) -> bool:
    return complex(z).imag == 0.0


def _coerce(z, K):
    """``z`` in the number type of ``K``, real when it lies on the real axis."""
    if _is_real_point(z):
        return K.real(z.real if hasattr(z, "imag") else z)
    return K.cplx(z)


# --------------------------------------------------------------------------
# components
# --------------------------------------------------------------------------

class JumpComponent:
    """Interface shared by all exponent components."""

    kind: ClassVar[str] = ""
    #: small jumps of finite variation (or no jumps at all)
    finite_variation: ClassVar[bool] = True
    #: finite total jump intensity
    finite_activity: ClassVar[bool] = True

    def value(self, z, K):
        raise NotImplementedError

    def deriv(self, z, n, K):
        raise NotImplementedError

    def check_point(self, z) -> None:
        """Raise :class:`PoleError`/:class:`DomainError` for bad evaluation points."""

    def linear_bv_drift(self) -> float:
        """Extra linear coefficient entering the bounded-variation drift."""
        return 0.0

    def jump_mass(self) -> float:
        return 0.0

    def density(self, y):
        """Levy density at jump size ``y > 0`` (array in, array out)."""
        return np.zeros_like(np.asarray(y, dtype=float))

    def tail(self, y):
        """``Pi(-inf, -y)`` for ``y > 0``."""
        return np.zeros_like(np.asarray(y, dtype=float))

    def derivative_at_zero(self) -> float:
        return float(complex(self.deriv(0.0, 1, mp_ops(0))).real)

    def to_dict(self) -> dict:
        raise NotImplementedError


def _cx(z):
    return {"re": float(z.real), "im": float(z.imag)}


def _from_cx(v):
    if isinstance(v, dict):
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    return complex(v)


@dataclass(frozen=True)
class Gaussian(JumpComponent):
    """Brownian part ``sigma**2 z**2 / 2``."""

    sigma: float
    kind: ClassVar[str] = "gaussian"

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ConfigError("gaussian: sigma must be >= 0")

    def value(self, z, K):
        s2 = K.real(self.sigma) ** 2
        return s2 * z * z / 2

    def deriv(self, z, n, K):
        s2 = K.real(self.sigma) ** 2
        if n == 1:
            return s2 * z
        if n == 2:
            return s2 + 0 * z
        return 0 * z

    def to_dict(self):
        return {"type": self.kind, "sigma": self.sigma}


@dataclass(frozen=True)
class Drift(JumpComponent):
    """Linear term ``mu z``."""

    mu: float
    kind: ClassVar[str] = "drift"

    def value(self, z, K):
        return K.real(self.mu) * z

    def deriv(self, z, n, K):
        if n == 1:
            return K.real(self.mu) + 0 * z
        return 0 * z

    def to_dict(self):
        return {"type": self.kind, "mu": self.mu}


@dataclass(frozen=True)
class TemperedStable(JumpComponent):
    """Tempered stable jumps with density ``c exp(-lam y) y**(-1-alpha)``.

    Contribution ``c Gamma(-alpha) [(z+lam)**alpha - lam**alpha - alpha lam**(alpha-1) z]``;
    ``alpha < 0`` gives a compound Poisson component.
    """

    c: float
    lam: float
    alpha: float
    kind: ClassVar[str] = "tempered_stable"

    def __post_init__(self):
        if not (self.c > 0 and self.lam > 0):
            raise ConfigError("tempered_stable: c and lambda must be positive")
        if not self.alpha < 2 or self.alpha in (0.0, 1.0):
            raise ConfigError("tempered_stable: alpha must lie in (-inf, 2) without 0 and 1")

    @property
    def finite_variation(self):  # type: ignore[override]
        return self.alpha < 1

    @property
    def finite_activity(self):  # type: ignore[override]
        return self.alpha < 0

    def _k(self, K):
        return K.real(self.c) * K.gamma(K.real(-self.alpha))

    def value(self, z, K):
        a = K.real(self.alpha)
        lam = K.real(self.lam)
        return self._k(K) * (K.power(z + lam, a) - K.power(lam, a) - a * K.power(lam, a - 1) * z)

    def deriv(self, z, n, K):
        a = K.real(self.alpha)
        lam = K.real(self.lam)
        k = self._k(K)
        if n == 1:
            return k * a * (K.power(z + lam, a - 1) - K.power(lam, a - 1))
        coef = a
        for i in range(1, n):
            coef = coef * (a - i)
        return k * coef * K.power(z + lam, a - n)

    def check_point(self, z):
        zc = complex(z)
        if zc.imag == 0 and zc.real <= -self.lam:
            raise DomainError("tempered_stable: point on the branch cut z <= -lambda")

    def linear_bv_drift(self):
        if self.alpha < 1:
            return -self.c * math.gamma(-self.alpha) * self.alpha * self.lam ** (self.alpha - 1)
        return 0.0

    def jump_mass(self):
        if self.alpha < 0:
            return self.c * math.gamma(-self.alpha) * self.lam ** self.alpha
        return math.inf

    def density(self, y):
        y = np.asarray(y, dtype=float)
        return self.c * np.exp(-self.lam * y) * y ** (-1 - self.alpha)

    def tail(self, y):
        ctx = mpmath.fp
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = [self.c * self.lam ** self.alpha * float(mpmath.gammainc(-self.alpha, self.lam * t))
               for t in y]
        return np.asarray(out)

    def to_dict(self):
        return {"type": self.kind, "c": self.c, "lambda": self.lam, "alpha": self.alpha}


@dataclass(frozen=True)
class Stable(JumpComponent):
    """Stable jumps with density ``c y**(-1-alpha)``; contribution ``c Gamma(-alpha) z**alpha``."""

    c: float
    alpha: float
    kind: ClassVar[str] = "stable"
    finite_activity: ClassVar[bool] = False

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError("stable: c must be positive")
        if not (0 < self.alpha < 2) or self.alpha == 1:
            raise ConfigError("stable: alpha must lie in (0, 2) without 1")

    @property
    def finite_variation(self):  # type: ignore[override]
        return self.alpha < 1

    def value(self, z, K):
        a = K.real(self.alpha)
        return K.real(self.c) * K.gamma(-a) * K.power(z, a)

    def deriv(self, z, n, K):
        a = K.real(self.alpha)
        coef = a
        for i in range(1, n):
            coef = coef * (a - i)
        return K.real(self.c) * K.gamma(-a) * coef * K.power(z, a - n)

    def check_point(self, z):
        zc = complex(z)
        if zc.imag == 0 and zc.real < 0:
            raise DomainError("stable: point on the branch cut z < 0")

    def derivative_at_zero(self):
        return 0.0 if self.alpha > 1 else -math.inf

    def jump_mass(self):
        return math.inf

    def density(self, y):
        y = np.asarray(y, dtype=float)
        return self.c * y ** (-1 - self.alpha)

    def tail(self, y):
        y = np.asarray(y, dtype=float)
        return self.c * y ** (-self.alpha) / self.alpha

    def to_dict(self):
        return {"type": self.kind, "c": self.c, "alpha": self.alpha}


@dataclass(frozen=True)
class Atom(JumpComponent):
    """Jumps of fixed size ``a`` at rate ``c``: ``c (exp(-a z) - 1)``."""

    c: float
    a: float
    kind: ClassVar[str] = "atom"

    def __post_init__(self):
        if not (self.c >= 0 and self.a > 0):
            raise ConfigError("atom: need c >= 0 and a > 0")

    def value(self, z, K):
        return K.real(self.c) * K.expm1(-K.real(self.a) * z)

    def deriv(self, z, n, K):
        a = K.real(self.a)
        return K.real(self.c) * (-a) ** n * K.exp(-a * z)

    def jump_mass(self):
        return self.c

    def density(self, y):
        raise DomainError("atom component has no Levy density")

    def tail(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y < self.a, self.c, 0.0)

    def to_dict(self):
        return {"type": self.kind, "c": self.c, "a": self.a}


@dataclass(frozen=True)
class ShiftedExponential(JumpComponent):
    """Unit-rate exponential jumps shifted by ``a``: ``c [exp(-a z)/(z+1) - 1]``.

    The jump density is ``c exp(-(y - a))`` for ``y > a``.
    """

    c: float
    a: float
    kind: ClassVar[str] = "shifted_exponential"

    def __post_init__(self):
        if not (self.c >= 0 and self.a > 0):
            raise ConfigError("shifted_exponential: need c >= 0 and a > 0")

    def value(self, z, K):
        a = K.real(self.a)
        return K.real(self.c) * (K.exp(-a * z) / (z + 1) - 1)

    def deriv(self, z, n, K):
        a = K.real(self.a)
        e = K.exp(-a * z)
        g = 1 / (z + 1)
        total = 0 * z
        for k in range(n + 1):
            fk = (-a) ** (n - k) * e
            gk = (-1) ** k * math.factorial(k) * g ** (k + 1)
            total = total + math.comb(n, k) * fk * gk
        return K.real(self.c) * total

    def check_point(self, z):
        if abs(complex(z) + 1) <= _POLE_RTOL:
            raise PoleError("shifted_exponential: pole at z = -1")

    def jump_mass(self):
        return self.c

    def density(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y > self.a, self.c * np.exp(-(y - self.a)), 0.0)

    def tail(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y < self.a, self.c, self.c * np.exp(-(y - self.a)))

    def to_dict(self):
        return {"type": self.kind, "c": self.c, "a": self.a}


@dataclass(frozen=True)
class RationalTerm:
    a: complex
    rho: complex
    m: int


@dataclass(frozen=True)
class Rational(JumpComponent):
    """Jumps with rational transform: density ``sum_j a_j y**(m_j-1) exp(-rho_j y)``.

    Contribution ``sum_j a_j (m_j-1)! [(rho_j+z)**(-m_j) - rho_j**(-m_j)]``.
    """

    terms: tuple
    kind: ClassVar[str] = "rational"

    def __post_init__(self):
        terms = tuple(t if isinstance(t, RationalTerm) else
                      RationalTerm(complex(t[0]), complex(t[1]), int(t[2])) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ConfigError("rational: need at least one term")
        for t in terms:
            if t.m < 1:
                raise ConfigError("rational: multiplicities must be positive")
            if not t.rho.real > 0:
                raise ConfigError("rational: every rho must have positive real part")
        for t in terms:
            if t.rho.imag == 0 and t.a.imag == 0:
                continue
            ok = any(abs(u.rho - t.rho.conjugate()) <= 1e-12 * max(1, abs(t.rho))
                     and abs(u.a - t.a.conjugate()) <= 1e-12 * max(1, abs(t.a))
                     and u.m == t.m for u in terms)
            if not ok:
                raise ConfigError("rational: terms must be closed under complex conjugation")
        y = np.logspace(-6, 3, 1000)
        dens = self.density(y)
        scale = np.max(np.abs([t.a for t in terms]))
        if np.any(dens < -1e-12 * scale):
            raise ConfigError("rational: jump density is negative at a sample point")

    def value(self, z, K):
        total = 0 * z
        for t in self.terms:
            rho = K.cplx(t.rho) if (t.rho.imag or t.a.imag) else K.real(t.rho.real)
            a = K.cplx(t.a) if (t.rho.imag or t.a.imag) else K.real(t.a.real)
            f = math.factorial(t.m - 1)
            total = total + a * f * ((rho + z) ** (-t.m) - rho ** (-t.m))
        return total

    def deriv(self, z, n, K):
        total = 0 * z
        for t in self.terms:
            rho = K.cplx(t.rho) if (t.rho.imag or t.a.imag) else K.real(t.rho.real)
            a = K.cplx(t.a) if (t.rho.imag or t.a.imag) else K.real(t.a.real)
            f = (-1) ** n * math.factorial(t.m + n - 1)
            total = total + a * f * (rho + z) ** (-t.m - n)
        return total

    def check_point(self, z):
        zc = complex(z)
        for t in self.terms:
            if abs(zc + t.rho) <= _POLE_RTOL * max(1.0, abs(t.rho)):
                raise PoleError(f"rational: pole at z = {-t.rho}")

    def jump_mass(self):
        return float(sum(t.a * math.factorial(t.m - 1) / t.rho ** t.m for t in self.terms).real)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape, dtype=complex)
        for t in self.terms:
            out = out + t.a * y ** (t.m - 1) * np.exp(-t.rho * y)
        return out.real

    def tail(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros(y.shape, dtype=complex)
        for t in self.terms:
            vals = [complex(mpmath.gammainc(t.m, t.rho * v)) for v in y]
            out = out + t.a * np.asarray(vals) / t.rho ** t.m
        return out.real

    def to_dict(self):
        return {"type": self.kind,
                "terms": [{"a": _cx(t.a), "rho": _cx(t.rho), "m": t.m} for t in self.terms]}


class _Meromorphic(JumpComponent):
    """Common pieces of the theta and beta families (poles on the negative axis)."""

    finite_activity: ClassVar[bool] = False

    @property
    def finite_variation(self):  # type: ignore[override]
        return self.lam < 2

    def pole(self, j):
        raise NotImplementedError

    def weight(self, j):
        raise NotImplementedError

    def poles(self, count: int) -> np.ndarray:
        return np.array([self.pole(j) for j in range(1, count + 1)], dtype=float)

    def check_point(self, z):
        zc = complex(z)
        if abs(zc.imag) > _POLE_RTOL * max(1.0, abs(zc)):
            return
        x = -zc.real
        if x <= 0:
            return
        j = self._nearest_index(x)
        for jj in (j - 1, j, j + 1):
            if jj >= 1:
                rho = self.pole(jj)
                if abs(x - rho) <= _POLE_RTOL * max(1.0, rho):
                    raise PoleError(f"{self.kind}: pole at z = {-rho}")

    def jump_mass(self):
        return math.inf

    def _series_terms(self, y):
        ymin = float(np.min(y))
        jmax = self._nearest_index(self.pole(1) + 60.0 / max(ymin, 1e-300)) + 2
        return min(max(jmax, 50), 2_000_000)

    def density(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros(y.shape)
        J = self._series_terms(y)
        for start in range(1, J + 1, 4096):
            js = np.arange(start, min(J, start + 4095) + 1)
            w = np.array([self.weight(j) for j in js]) if self.kind == "beta" else self._weights(js)
            r = self._poles(js)
            out += (w[None, :] * np.exp(-np.outer(y, r))).sum(axis=1)
        return out

    def tail(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros(y.shape)
        J = self._series_terms(y)
        for start in range(1, J + 1, 4096):
            js = np.arange(start, min(J, start + 4095) + 1)
            w = np.array([self.weight(j) for j in js]) if self.kind == "beta" else self._weights(js)
            r = self._poles(js)
            out += ((w / r)[None, :] * np.exp(-np.outer(y, r))).sum(axis=1)
        return out


@dataclass(frozen=True)
class Theta(_Meromorphic):
    """Theta-process jumps with ``lam`` in {3/2, 5/2}.

    With ``w = alpha + z/beta`` the contribution is
    ``c (-1)**(lam-1/2) [w**(lam-1) coth(pi sqrt(w)) - alpha**(lam-1) coth(pi sqrt(alpha))]``.
    Since ``2 lam - 2`` is an odd integer, ``w**(lam-1) coth(pi sqrt w)`` is an
    even function of ``sqrt(w)`` and hence single valued.
    """

    c: float
    alpha: float
    beta: float
    lam: float
    kind: ClassVar[str] = "theta"

    def __post_init__(self):
        if not (self.c > 0 and self.alpha > 0 and self.beta > 0):
            raise ConfigError("theta: c, alpha, beta must be positive")
        if self.lam not in (1.5, 2.5):
            raise ConfigError("theta: lambda must be 3/2 or 5/2")

    @property
    def _m(self):
        return int(round(2 * self.lam - 2))

    @property
    def _sign(self):
        return -1 if self.lam == 1.5 else 1

    def pole(self, j):
        return self.beta * (self.alpha + j * j)

    def _poles(self, js):
        return self.beta * (self.alpha + js.astype(float) ** 2)

    def weight(self, j):
        return 2.0 / math.pi * self.c * self.beta * float(j) ** (2 * self.lam - 1)

    def _weights(self, js):
        return 2.0 / math.pi * self.c * self.beta * js.astype(float) ** (2 * self.lam - 1)

    def _nearest_index(self, x):
        return max(1, int(round(math.sqrt(max(x / self.beta - self.alpha, 0.0)))))

    def _h_derivs(self, r, K, nmax):
        """``h(r) = r**m coth(pi r)`` and its r-derivatives up to ``nmax``."""
        m = self._m
        pi = K.pi
        C = K.coth(pi * r)
        C2m1 = C * C - 1
        dC = [C, -pi * C2m1, 2 * pi ** 2 * C * C2m1, -2 * pi ** 3 * C2m1 * (3 * C * C - 1)]
        pw = [K.ipow(r, m - k) for k in range(nmax + 1)]
        fall = [1, m, m * (m - 1), m * (m - 1) * (m - 2)]
        out = []
        for n in range(nmax + 1):
            s = 0 * r
            for k in range(n + 1):
                s = s + math.comb(n, k) * fall[k] * pw[k] * dC[n - k]
            out.append(s)
        return out

    def _const(self, K):
        a = K.real(self.alpha)
        ra = K.sqrt(a)
        return K.ipow(ra, self._m) * K.coth(K.pi * ra)

    def value(self, z, K):
        w = K.real(self.alpha) + z / K.real(self.beta)
        r = K.sqrt(K.cplx(w))
        h = K.ipow(r, self._m) * K.coth(K.pi * r)
        return self._sign * K.real(self.c) * (h - self._const(K))

    def deriv(self, z, n, K):
        b = K.real(self.beta)
        w = K.real(self.alpha) + z / b
        r = K.sqrt(K.cplx(w))
        h = self._h_derivs(r, K, n)
        if n == 1:
            g = h[1] / (2 * r)
        elif n == 2:
            g = (h[2] - h[1] / r) / (4 * r * r)
        else:
            g = (h[3] - 3 * h[2] / r + 3 * h[1] / (r * r)) / (8 * r ** 3)
        return self._sign * K.real(self.c) * g / b ** n

    def to_dict(self):
        return {"type": self.kind, "c": self.c, "alpha": self.alpha, "beta": self.beta,
                "lambda": self.lam}


@dataclass(frozen=True)
class Beta(_Meromorphic):
    """Beta-process jumps: ``c [B(1+alpha+z/beta, 1-lam) - B(1+alpha, 1-lam)]``."""

    c: float
    alpha: float
    beta: float
    lam: float
    kind: ClassVar[str] = "beta"

    def __post_init__(self):
        if not (self.c > 0 and self.alpha > 0 and self.beta > 0):
            raise ConfigError("beta: c, alpha, beta must be positive")
        if not (1 < self.lam < 3) or self.lam == 2:
            raise ConfigError("beta: lambda must lie in (1,2) or (2,3)")

    def pole(self, j):
        return self.beta * (self.alpha + j)

    def _poles(self, js):
        return self.beta * (self.alpha + js.astype(float))

    def weight(self, j):
        return self.c * self.beta * float(sps.binom(j + self.lam - 2, j - 1))

    def _nearest_index(self, x):
        return max(1, int(round(x / self.beta - self.alpha)))

    def density(self, y):
        y = np.asarray(y, dtype=float)
        b = self.beta
        return self.c * b * np.exp(-(1 + self.alpha) * b * y) / (-np.expm1(-b * y)) ** self.lam

    def value(self, z, K):
        y = K.real(1 - self.lam)
        x0 = 1 + K.real(self.alpha)
        x = x0 + z / K.real(self.beta)
        return K.real(self.c) * (K.beta(x, y) - K.beta(x0, y))

    def deriv(self, z, n, K):
        y = K.real(1 - self.lam)
        b = K.real(self.beta)
        x = 1 + K.real(self.alpha) + z / b
        B = K.beta(x, y)
        D = K.polygamma(0, x) - K.polygamma(0, x + y)
        if n == 1:
            g = B * D
        else:
            D1 = K.polygamma(1, x) - K.polygamma(1, x + y)
            if n == 2:
                g = B * (D * D + D1)
            else:
                D2 = K.polygamma(2, x) - K.polygamma(2, x + y)
                g = B * (D ** 3 + 3 * D * D1 + D2)
        return K.real(self.c) * g / b ** n

    def to_dict(self):
        return {"type": self.kind, "c": self.c, "alpha": self.alpha, "beta": self.beta,
                "lambda": self.lam}


# --------------------------------------------------------------------------
# the model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Tilted(JumpComponent):
    """Jump and drift part of an exponentially tilted model.

    A model with exponent ``psi`` tilted by ``c >= 0`` has exponent
    ``psi(z + c) - psi(c)``.  The Gaussian coefficient is unchanged, so it is
    kept as a separate :class:`Gaussian` component and this component holds
    everything else (including the extra linear term ``sigma^2 c z``).
    """

    base: "LevyModel"
    c: float
    kind: ClassVar[str] = "tilted"

    @classmethod
    def of(cls, model: "LevyModel", c: float) -> "LevyModel":
        if c < 0:
            raise DomainError("tilts must be nonnegative")
        comps = []
        if model.sigma > 0:
            comps.append(Gaussian(model.sigma))
        comps.append(cls(model, float(c)))
        label = f"{model.label} tilted by {c:g}" if model.label else ""
        return LevyModel(tuple(comps), label)

    @property
    def finite_variation(self):  # type: ignore[override]
        return all(c.finite_variation for c in self.base.jump_components)

    @property
    def finite_activity(self):  # type: ignore[override]
        return math.isfinite(self.base.jump_mass())

    def _shift(self, K):
        key = ("tilt_psi", self.c, getattr(getattr(K, "ctx", None), "dps", 0))
        if key not in self.base._cache:
            self.base._cache[key] = self.base.psi_real(self.c, None if K is NP_OPS else K)
        return self.base._cache[key]

    def value(self, z, K):
        s2 = self.base.sigma ** 2
        if K is NP_OPS:
            return self.base.psi_array(z + self.c) - self._shift(K) - 0.5 * s2 * z * z
        return self.base.psi(z + K.real(self.c), K) - self._shift(K) - K.real(s2) / 2 * z * z

    def deriv(self, z, n, K):
        s2 = self.base.sigma ** 2
        if K is NP_OPS:
            d = self.base.dpsi_array(z + self.c, n)
        else:
            d = self.base.psi_derivative(z + K.real(self.c), n, K)
        if n == 1:
            return d - s2 * z
        if n == 2:
            return d - s2
        return d

    def check_point(self, z):
        self.base.check_point(complex(z) + self.c)

    def linear_bv_drift(self):
        pc = classify(self.base)
        return pc.delta if pc.bounded else 0.0

    def jump_mass(self):
        m = self.base.jump_mass()
        pc = classify(self.base)
        if not (math.isfinite(m) and pc.bounded):
            return m
        return m + float(self.base.psi_real(self.c)) - pc.delta * self.c

    def density(self, y):
        y = np.asarray(y, dtype=float)
        return np.exp(-self.c * y) * self.base.levy_density(y)

    def tail(self, y):
        if self.c == 0:
            return self.base.levy_tail(y)
        raise DomainError("tail of a tilted Levy measure is not available in closed form")

    def to_dict(self):
        return {"type": self.kind, "c": self.c, "base": model_to_dict(self.base)}


@dataclass(frozen=True)
class PathClass:
    """Path-variation classification.

    ``delta`` is the drift in ``X_t = delta t - S_t`` and is present exactly
    when ``variation == "bounded"``.
    """

    variation: str
    delta: float | None
    creeps_down: bool

    @property
    def bounded(self) -> bool:
        return self.variation == "bounded"


@dataclass(frozen=True)
class LevyModel:
    """Immutable spectrally negative Levy process given by exponent components."""

    components: tuple
    label: str = ""
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False,
                         hash=False)

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ConfigError("a model needs at least one component")
        for c in comps:
            if not isinstance(c, JumpComponent):
                raise ConfigError(f"not an exponent component: {c!r}")
        if self.sigma == 0 and not any(c.kind not in ("gaussian", "drift") for c in comps):
            raise ConfigError("model without Gaussian part or jumps is degenerate")
        pc = classify(self)
        if pc.bounded and not pc.delta > 0:
            raise ConfigError("bounded variation model needs a positive drift "
                              "(otherwise it has monotone paths)")

    # -- structural data -------------------------------------------------
    @property
    def sigma(self) -> float:
        return math.sqrt(sum(c.sigma ** 2 for c in self.components if c.kind == "gaussian"))

    @property
    def mu(self) -> float:
        return float(sum(c.mu for c in self.components if c.kind == "drift"))

    @property
    def jump_components(self):
        return tuple(c for c in self.components if c.kind not in ("gaussian", "drift"))

    def has(self, kind: str) -> bool:
        return any(c.kind == kind for c in self.components)

    @property
    def is_rational(self) -> bool:
        return all(c.kind in ("gaussian", "drift", "rational") for c in self.components)

    @property
    def is_meromorphic(self) -> bool:
        kinds = {c.kind for c in self.jump_components}
        return bool(kinds) and kinds <= {"theta", "beta"}

    @property
    def atoms(self) -> tuple:
        """Abscissae where the Levy measure has atoms."""
        return tuple(sorted(c.a for c in self.components if c.kind == "atom" and c.c > 0))

    def jump_mass(self) -> float:
        return float(sum(c.jump_mass() for c in self.jump_components))

    def levy_density(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        for c in self.jump_components:
            out = out + c.density(y)
        return out

    def levy_tail(self, y):
        """``Pi(-inf, -y)`` for ``y > 0``."""
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        for c in self.jump_components:
            out = out + c.tail(y)
        return out

    # -- evaluation ------------------------------------------------------
    def check_point(self, z) -> None:
        for c in self.components:
            c.check_point(z)

    def psi(self, z, ops: MpOps | None = None):
        """Laplace exponent at a scalar point (double by default)."""
        K = _ops_for(ops)
        self.check_point(z)
        zz = _coerce(z, K)
        total = 0 * zz
        for c in self.components:
            total = total + c.value(zz, K)
        return total

    def psi_derivative(self, z, n: int, ops: MpOps | None = None):
        if n not in (1, 2, 3):
            raise ConfigError("psi_derivative supports n = 1, 2, 3")
        K = _ops_for(ops)
        self.check_point(z)
        zz = _coerce(z, K)
        total = 0 * zz
        for c in self.components:
            total = total + c.deriv(zz, n, K)
        return total

    def psi_real(self, x: float, ops: MpOps | None = None):
        """``psi`` at a real point, returned as a real number."""
        v = self.psi(x, ops)
        return v.real if hasattr(v, "real") else v

    def dpsi_real(self, x: float, n: int = 1, ops: MpOps | None = None):
        v = self.psi_derivative(x, n, ops)
        return v.real if hasattr(v, "real") else v

    def psi_array(self, z) -> np.ndarray:
        """Vectorised ``psi`` in complex double precision."""
        z = np.asarray(z, dtype=np.complex128)
        total = np.zeros_like(z)
        for c in self.components:
            total = total + c.value(z, NP_OPS)
        return total

    def dpsi_array(self, z, n: int = 1) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        total = np.zeros_like(z)
        for c in self.components:
            total = total + c.deriv(z, n, NP_OPS)
        return total

    def mean(self) -> float:
        """``psi'(0+)``; may be ``-inf`` for stable components with alpha < 1."""
        return float(sum(c.derivative_at_zero() for c in self.components))

    def to_dict(self) -> dict:
        return model_to_dict(self)

    def __hash__(self):
        return hash((self.components, self.label))


# --------------------------------------------------------------------------
# module-level operations
# --------------------------------------------------------------------------

def psi(model: LevyModel, z, prec: PrecisionContext | None = None):
    """Laplace exponent ``psi(z)``; a Python complex in double precision."""
    v = model.psi(z, None if prec is None else prec.ops)
    return complex(v) if prec is None or prec.mode == "native-double" else v


def psi_derivative(model: LevyModel, z, n: int, prec: PrecisionContext | None = None):
    """``n``-th derivative of ``psi`` (``n <= 3``) from the closed forms."""
    v = model.psi_derivative(z, n, None if prec is None else prec.ops)
    return complex(v) if prec is None or prec.mode == "native-double" else v


def phi_q(model: LevyModel, q: float, prec: PrecisionContext | None = None):
    """Right inverse ``Phi(q) = sup{t >= 0 : psi(t) = q}``.

    The set ``{t >= 0 : psi(t) <= q}`` is the interval ``[0, Phi(q)]`` by
    convexity, so a doubling search for an upper bracket followed by
    bisection and Newton steps from the right converges safely.  With a
    multi-precision ``prec`` the double result is polished by Newton
    iterations at that precision.
    """
    if q < 0:
        raise ConfigError("phi_q needs q >= 0")
    key = ("phi", float(q))
    if key not in model._cache:
        model._cache[key] = _phi_double(model, float(q))
    phi = model._cache[key]
    if prec is None or prec.mode == "native-double" or phi == 0.0:
        return phi
    mkey = ("phi_mp", float(q), prec.digits)
    if mkey not in model._cache:
        model._cache[mkey] = _phi_refine(model, q, phi, prec)
    return model._cache[mkey]


def _phi_double(model: LevyModel, q: float) -> float:
    f = lambda t: model.psi_real(t) - q
    if q == 0 and model.mean() >= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    it = 0
    while f(hi) <= 0:
        lo, hi = hi, hi * 2
        it += 1
        if it > 1100:
            raise BracketError("could not bracket Phi(q)")
    # bisection until the bracket is small, then Newton from the right
    for _ in range(200):
        if hi - lo <= 1e-6 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    x = hi
    tol = 1e-13 * max(1.0, q)
    for _ in range(100):
        fx = f(x)
        if abs(fx) <= tol * 0.01:
            break
        d = model.dpsi_real(x)
        step = fx / d if d > 0 else math.inf
        xn = x - step
        if not (lo <= xn <= hi) or not math.isfinite(xn):
            xn = 0.5 * (lo + hi)
        if f(xn) <= 0:
            lo = xn
        else:
            hi = xn
        if abs(xn - x) <= 1e-16 * max(1.0, abs(x)):
            x = xn
            break
        x = xn
    # pick the better of x and the bracket ends
    best = min((abs(f(t)), t) for t in (x, lo, hi) if t > 0)
    return float(best[1])


def _phi_refine(model: LevyModel, q, phi0: float, prec: PrecisionContext):
    K = prec.ops
    ctx = K.ctx
    qq = ctx.mpf(q)
    x = ctx.mpf(phi0)
    for _ in range(60):
        fx = model.psi_real(x, K) - qq
        d = model.dpsi_real(x, 1, K)
        dx = fx / d
        x = x - dx
        if abs(dx) <= ctx.mpf(10) ** (-(prec.digits + 2)) * max(1, abs(x)):
            break
    return x


def classify(model: LevyModel) -> PathClass:
    """Bounded or unbounded variation, bounded-variation drift and creeping."""
    sigma = model.sigma
    bounded = sigma == 0 and all(c.finite_variation for c in model.jump_components)
    delta = None
    if bounded:
        delta = model.mu + sum(c.linear_bv_drift() for c in model.jump_components)
    return PathClass("bounded" if bounded else "unbounded", delta, sigma > 0)


def boundary_values(model: LevyModel, q: float = 0.0):
    """``(W(0+), W'(0+))`` for the q-scale function."""
    pc = classify(model)
    if pc.bounded:
        w0 = 1.0 / pc.delta
    else:
        w0 = 0.0
    sigma = model.sigma
    if sigma > 0:
        return w0, 2.0 / sigma ** 2
    mass = model.jump_mass()
    if pc.bounded and math.isfinite(mass):
        return w0, (mass + q) / pc.delta ** 2
    return w0, math.inf


# --------------------------------------------------------------------------
# JSON schema
# --------------------------------------------------------------------------

def _component_from_dict(d: dict) -> JumpComponent:
    t = d.get("type")
    try:
        if t == "gaussian":
            return Gaussian(float(d["sigma"]))
        if t == "drift":
            return Drift(float(d["mu"]))
        if t == "tempered_stable":
            return TemperedStable(float(d["c"]), float(d["lambda"]), float(d["alpha"]))
        if t == "stable":
            return Stable(float(d["c"]), float(d["alpha"]))
        if t == "atom":
            return Atom(float(d["c"]), float(d["a"]))
        if t == "shifted_exponential":
            return ShiftedExponential(float(d["c"]), float(d["a"]))
        if t == "rational":
            return Rational(tuple(RationalTerm(_from_cx(u["a"]), _from_cx(u["rho"]), int(u["m"]))
                                  for u in d["terms"]))
        if t == "theta":
            return Theta(float(d["c"]), float(d["alpha"]), float(d["beta"]), float(d["lambda"]))
        if t == "tilted":
            return Tilted(model_from_dict(d["base"]), float(d["c"]))
        if t == "beta":
            return Beta(float(d["c"]), float(d["alpha"]), float(d["beta"]), float(d["lambda"]))
    except KeyError as exc:
        raise ConfigError(f"component {t!r} is missing field {exc}") from None
    raise ConfigError(f"unknown component type {t!r}")


def model_from_dict(d: dict) -> LevyModel:
    if "components" not in d:
        raise ConfigError("model JSON needs a 'components' list")
    comps = tuple(_component_from_dict(c) for c in d["components"])
    return LevyModel(comps, str(d.get("label", "")))


def model_to_dict(model: LevyModel) -> dict:
    return {"label": model.label, "components": [c.to_dict() for c in model.components]}


def load_model(path) -> LevyModel:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"model file is not valid JSON: {exc}") from None
    return model_from_dict(data)
