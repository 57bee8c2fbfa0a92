"""Closed-form potential densities.

For rational exponents the equation ``psi(z) = q`` is polynomial and the
potential density is a finite sum of exponential polynomials.  For
meromorphic exponents (theta and beta families) the roots interlace with the
poles on the negative half-line and the density is an infinite exponential
mixture, truncated after ``J`` terms.

Roots are reported as ``zeta_j`` with ``psi(-zeta_j) = q``; the positive
root ``Phi(q)`` of ``psi(z) = q`` is stored separately.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
import mpmath
import numpy as np

from .errors import BracketError, ConfigError, DomainError, NumericalError
from .kernel import AccuracyWarning, PrecisionContext, mp_context, mp_ops
from .model import LevyModel, phi_q

__all__ = [
    "RootSet",
    "PartialFractionExpansion",
    "MultiplicityWarning",
    "rational_roots",
    "partial_fractions",
    "u_hat_rational",
    "meromorphic_roots",
    "meromorphic_poles",
    "u_hat_meromorphic",
]

_CLUSTER = 1e-8


class MultiplicityWarning(AccuracyWarning):
    """Two roots are closer than the clustering threshold."""


@dataclass(frozen=True)
class RootSet:
    """Roots ``zeta_j`` of ``psi(-z) = q`` with multiplicities.

    ``roots`` is a tuple of ``(zeta, multiplicity)``; ``zeta`` is an mpmath
    number carrying ``digits`` digits.
    """

    q: float
    phi: object
    roots: tuple
    source: str
    digits: int = 30
    poles: tuple = ()

    def zetas(self) -> np.ndarray:
        return np.array([complex(z) for z, _ in self.roots])

    def to_json(self) -> str:
        def enc(z):
            z = mpmath.mpmathify(z)
            if isinstance(z, mpmath.mpc):
                return {"re": mpmath.nstr(z.real, self.digits), "im": mpmath.nstr(z.imag, self.digits)}
            return {"re": mpmath.nstr(z, self.digits), "im": "0"}

        return json.dumps({
            "q": self.q,
            "phi": enc(self.phi),
            "source": self.source,
            "digits": self.digits,
            "roots": [{"zeta": enc(z), "multiplicity": m} for z, m in self.roots],
            "poles": [float(p) for p in self.poles],
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "RootSet":
        d = json.loads(text)
        ctx = mp_context(int(d["digits"]))

        def dec(v):
            re, im = ctx.mpf(v["re"]), ctx.mpf(v["im"])
            return re if im == 0 else ctx.mpc(re, im)

        roots = tuple((dec(r["zeta"]), int(r["multiplicity"])) for r in d["roots"])
        return cls(float(d["q"]), dec(d["phi"]), roots, d["source"], int(d["digits"]),
                   tuple(d.get("poles", ())))

    def check_interlacing(self) -> bool:
        """``zeta_1 < rho_1 < zeta_2 < rho_2 < ...`` for meromorphic sets."""
        if self.source != "meromorphic":
            return True
        z = [float(mpmath.re(r)) for r, _ in self.roots]
        p = list(self.poles)
        for j, zj in enumerate(z):
            lo = p[j - 1] if j > 0 else 0.0
            hi = p[j] if j < len(p) else math.inf
            if not lo <= zj < hi:
                return False
        return True


@dataclass(frozen=True)
class PartialFractionExpansion:
    """``1/(psi(z) - q) = phi_coeff/(z - Phi) + sum c_{j,k} / (z + zeta_j)**k``."""

    phi_coeff: object
    terms: tuple  # (zeta, k, c)

    def evaluate(self, z, phi) -> complex:
        total = self.phi_coeff / (z - phi)
        for zeta, k, c in self.terms:
            total += c / (z + zeta) ** k
        return total


# --------------------------------------------------------------------------
# rational exponents
# --------------------------------------------------------------------------

def _rational_parts(model: LevyModel):
    allowed = {"gaussian", "drift", "rational"}
    for c in model.components:
        if c.kind not in allowed:
            raise ConfigError(f"rational_roots: component {c.kind!r} has no rational exponent")
    terms = [t for c in model.components if c.kind == "rational" for t in c.terms]
    return terms


def _poly_coeffs(model: LevyModel, q: float, ctx):
    """``P(z) - q Q(z)`` (highest degree first) with ``Q = prod (z + rho)^m``."""
    terms = _rational_parts(model)
    # group by distinct rho with maximal multiplicity
    dens = {}
    for t in terms:
        key = complex(t.rho)
        dens[key] = max(dens.get(key, 0), t.m)
    def mul(a, b):
        out = [ctx.mpf(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                out[i + j] += x * y
        return out

    def add(a, b):
        n = max(len(a), len(b))
        a = [ctx.mpf(0)] * (n - len(a)) + a
        b = [ctx.mpf(0)] * (n - len(b)) + b
        return [x + y for x, y in zip(a, b)]

    def cx(v):
        v = complex(v)
        return ctx.mpf(v.real) if v.imag == 0 else ctx.mpc(v.real, v.imag)

    Q = [ctx.mpf(1)]
    for rho, m in dens.items():
        for _ in range(m):
            Q = mul(Q, [ctx.mpf(1), cx(rho)])
    s2 = ctx.mpf(model.sigma) ** 2 / 2
    mu = ctx.mpf(model.mu)
    P = mul(Q, [s2, mu, ctx.mpf(0)]) if s2 else mul(Q, [mu, ctx.mpf(0)])
    const = ctx.mpf(0)
    for t in terms:
        a = cx(t.a) * math.factorial(t.m - 1)
        const -= a / cx(t.rho) ** t.m
        # a (m-1)! Q(z)/(z+rho)^m
        rest = [ctx.mpf(1)]
        for rho, m in dens.items():
            e = m - t.m if complex(rho) == complex(t.rho) else m
            for _ in range(e):
                rest = mul(rest, [ctx.mpf(1), cx(rho)])
        P = add(P, [a * v for v in rest])
    P = add(P, [(const - q) * v for v in Q])
    while len(P) > 1 and P[0] == 0:
        P = P[1:]
    return P, Q


def _newton_polish(model, q, z, K, steps=60):
    ctx = K.ctx
    z = ctx.mpmathify(z)
    real = not isinstance(z, mpmath.mpc)
    tol = ctx.mpf(10) ** (-(ctx.dps - 3))
    for _ in range(steps):
        f = model.psi(z, K) - q
        d = model.psi_derivative(z, 1, K)
        if real:
            f, d = ctx.re(f), ctx.re(d)
        if d == 0:
            break
        dz = f / d
        z = z - dz
        if abs(dz) <= tol * max(1, abs(z)):
            break
    if isinstance(z, mpmath.mpc) and abs(z.imag) <= tol * max(1, abs(z)):
        z = z.real
    return z


def rational_roots(model: LevyModel, q: float, *, digits: int = 30) -> RootSet:
    """All roots of ``psi(z) = q`` for a rational exponent.

    Companion-matrix eigenvalues give starting points, which are polished
    by Newton iterations on ``psi`` at ``digits`` digits.  Roots closer than
    ``1e-8`` are merged into one root of higher multiplicity.
    """
    if q < 0:
        raise DomainError("q must be nonnegative")
    K = mp_ops(digits)
    ctx = K.ctx
    P, Q = _poly_coeffs(model, q, ctx)
    coeffs = np.array([complex(v) for v in P])
    coeffs = coeffs / coeffs[0]
    guesses = np.roots(coeffs)
    # cluster
    order = np.argsort(guesses.real)
    guesses = guesses[order]
    clusters = []
    for g in guesses:
        for cl in clusters:
            if abs(cl[0] - g) <= _CLUSTER * max(1.0, abs(g)) ** 1:
                cl.append(g)
                break
        else:
            clusters.append([g])
    if any(len(cl) > 1 for cl in clusters):
        warnings.warn("repeated roots of psi(z) = q; treating them as one root of higher "
                      "multiplicity", MultiplicityWarning, stacklevel=2)
    roots = []
    phi = None
    qq = ctx.mpf(q)
    for cl in clusters:
        g = complex(np.mean(cl))
        if abs(g.imag) <= 1e-10 * max(1, abs(g)):
            g = g.real
        z = _newton_polish(model, qq, g, K) if len(cl) == 1 else ctx.mpmathify(g)
        zr = complex(z)
        if zr.real > 0 or (q == 0 and zr.real == 0 and phi is None and abs(zr) < 1e-14):
            if phi is not None and zr.real > 0:
                raise NumericalError("more than one root with positive real part")
            phi = z.real if isinstance(z, mpmath.mpc) else z
            continue
        roots.append((-z, len(cl)))
    if phi is None:
        phi = ctx.mpf(0)
    # the double-precision Phi is the reference for consistency
    ref = phi_q(model, q)
    if abs(float(phi) - ref) > 1e-8 * max(1.0, ref):
        raise NumericalError(f"rational root Phi={float(phi)} disagrees with Phi(q)={ref}")
    roots.sort(key=lambda r: (float(mpmath.re(r[0])), float(mpmath.im(r[0]))))
    return RootSet(float(q), phi, tuple(roots), "rational", digits)


def partial_fractions(model: LevyModel, rs: RootSet) -> PartialFractionExpansion:
    """Coefficients of ``1/(psi(z)-q)`` in the basis ``1/(z + zeta)^k``."""
    K = mp_ops(rs.digits)
    ctx = K.ctx
    qq = ctx.mpf(rs.q)
    phi_coeff = 1 / model.psi_derivative(rs.phi, 1, K) if rs.phi != 0 or rs.q > 0 else None
    terms = []
    for zeta, m in rs.roots:
        r = -zeta
        if m == 1:
            terms.append((zeta, 1, 1 / model.psi_derivative(r, 1, K)))
            continue
        # Laurent coefficients from the Taylor series of (z-r)^m/(psi-q)
        def g(z, r=r, m=m):
            return (z - r) ** m / (model.psi(z, K) - qq)

        coeffs = _taylor_contour(g, r, m - 1, ctx)
        for k in range(1, m + 1):
            terms.append((zeta, k, coeffs[m - k]))
    return PartialFractionExpansion(phi_coeff, tuple(terms))


def _taylor_contour(g, r, n, ctx):
    """First ``n+1`` Taylor coefficients of ``g`` at ``r`` by the trapezoid rule on a circle."""
    rad = ctx.mpf(10) ** (-3)
    P = 64
    out = []
    vals = [g(r + rad * ctx.expjpi(2 * ctx.mpf(k) / P)) for k in range(P)]
    for j in range(n + 1):
        s = ctx.fsum(vals[k] * ctx.expjpi(-2 * ctx.mpf(j * k) / P) for k in range(P))
        out.append(s / P / rad ** j)
    return out


def _term_value(zeta, k, x, derivative, ctx):
    """``d^n/dx^n`` (``n=1``), value or running integral of ``x^{k-1} e^{-zeta x}/(k-1)!``."""
    e = ctx.exp(-zeta * x)
    if derivative == 0:
        return x ** (k - 1) * e / ctx.factorial(k - 1)
    if derivative == 1:
        a = x ** (k - 2) * e / ctx.factorial(k - 2) if k >= 2 else 0
        return a - zeta * x ** (k - 1) * e / ctx.factorial(k - 1)
    # integral from 0 to x
    s = ctx.fsum((zeta * x) ** i / ctx.factorial(i) for i in range(k))
    return (1 - e * s) / zeta ** k


def u_hat_rational(rs: RootSet, pf: PartialFractionExpansion, x: float, *,
                   derivative: int = 0) -> float:
    """Potential density ``u(x) = -sum_j e^{-zeta_j x} sum_k c_{j,k} x^{k-1}/(k-1)!``.

    ``derivative=1`` gives ``u'(x)`` and ``derivative=-1`` gives ``int_0^x u``.
    """
    if x < 0:
        raise DomainError("x must be nonnegative")
    ctx = mp_context(rs.digits)
    xx = ctx.mpf(x)
    total = ctx.mpf(0)
    for zeta, k, c in pf.terms:
        total -= c * _term_value(zeta, k, xx, derivative, ctx)
    im = abs(ctx.im(total)) if isinstance(total, mpmath.mpc) else 0
    if im > 1e-12 * max(1, abs(total)):
        raise NumericalError("potential density has a non-negligible imaginary part")
    return float(ctx.re(total))


# --------------------------------------------------------------------------
# meromorphic exponents
# --------------------------------------------------------------------------

def meromorphic_poles(model: LevyModel, J: int) -> np.ndarray:
    """The first ``J`` distinct poles ``rho_1 < rho_2 < ...`` of ``psi(-z)``."""
    comps = [c for c in model.jump_components]
    if not comps or any(c.kind not in ("theta", "beta") for c in comps):
        raise ConfigError("meromorphic backend needs theta/beta jump components only")
    cand = np.unique(np.concatenate([c.poles(J) for c in comps]))
    return cand[:J]


def _f_double(model, q, z):
    return (model.psi_array(-np.asarray(z, dtype=float) + 0j)).real - q


def meromorphic_roots(model: LevyModel, q: float, J: int = 1000, *,
                      digits: int = 30) -> RootSet:
    """The first ``J`` roots of ``psi(-z) = q`` for a meromorphic exponent.

    Each root is bracketed by consecutive poles.  A vectorised bisection in
    double precision is followed by safeguarded Newton steps at ``digits``.
    """
    if q < 0:
        raise DomainError("q must be nonnegative")
    if J < 1:
        raise ConfigError("J must be positive")
    poles = meromorphic_poles(model, J)
    lo = np.concatenate([[0.0], poles[:-1]])
    hi = poles.copy()
    gap = hi - lo
    phi = phi_q(model, q)
    K = mp_ops(digits)
    ctx = K.ctx
    qq = ctx.mpf(q)
    zero_root = q == 0 and model.mean() <= 0
    # ends of the brackets, nudged off the poles
    a = lo + 1e-9 * gap
    b = hi - 1e-9 * gap
    a[0] = 0.0
    fa = _f_double(model, q, a)
    fb = _f_double(model, q, b)
    if q == 0:
        fa[0] = 0.0
    ok = np.sign(fa) * np.sign(fb) <= 0
    if not np.all(ok):
        bad = int(np.argmin(ok))
        raise BracketError(f"no sign change of psi(-z) - q on bracket {bad + 1} "
                           f"({lo[bad]}, {hi[bad]})")
    sa = np.sign(fa)
    for _ in range(80):
        mid = 0.5 * (a + b)
        fm = _f_double(model, q, mid)
        left = np.sign(fm) == sa
        a = np.where(left, mid, a)
        b = np.where(left, b, mid)
    guess = 0.5 * (a + b)
    roots = []
    tol = ctx.mpf(10) ** (-(digits - 2))
    for j, g in enumerate(guess):
        if j == 0 and (zero_root or (q == 0 and abs(g) < 1e-300)):
            roots.append((ctx.mpf(0), 1))
            continue
        L, R = ctx.mpf(lo[j]), ctx.mpf(hi[j])
        z = ctx.mpf(g)
        for _ in range(100):
            f = model.psi(-z, K) - qq
            d = -model.psi_derivative(-z, 1, K)
            f = ctx.re(f)
            d = ctx.re(d)
            zn = z - f / d
            if not (L < zn < R):
                zn = (z + (L if zn <= L else R)) / 2
            if abs(zn - z) <= tol * max(1, abs(z)):
                z = zn
                break
            z = zn
        roots.append((z, 1))
    rs = RootSet(float(q), phi_q(model, q, PrecisionContext(digits, "arbitrary"))
                 if phi > 0 else ctx.mpf(0), tuple(roots), "meromorphic", digits,
                 tuple(float(p) for p in poles))
    if not rs.check_interlacing():
        raise BracketError("computed roots do not interlace with the poles")
    return rs


def _mero_coeffs(rs: RootSet, model: LevyModel):
    key = ("mero_coeffs", rs.q, rs.digits, len(rs.roots))
    if key in model._cache:
        return model._cache[key]
    K = mp_ops(rs.digits)
    out = []
    for j, (z, _) in enumerate(rs.roots):
        d = K.ctx.re(model.psi_derivative(-z, 1, K))
        c = -1 / d
        if not c > 0:
            raise NumericalError(f"coefficient of root {j + 1} is not positive "
                                 f"(zeta={float(z)}); wrong root or derivative")
        out.append(c)
    model._cache[key] = out
    return out


def u_hat_meromorphic(rs: RootSet, model: LevyModel, x: float, J: int | None = None, *,
                      derivative: int = 0):
    """``u(x) = sum_j c_j e^{-zeta_j x}`` with ``c_j = -1/psi'(-zeta_j) > 0``.

    Returns ``(value, truncation_estimate)`` as mpmath numbers.
    ``derivative=1`` and ``derivative=-1`` select ``u'`` and ``int_0^x u``.
    """
    if x < 0:
        raise DomainError("x must be nonnegative")
    J = len(rs.roots) if J is None else min(int(J), len(rs.roots))
    ctx = mp_context(rs.digits)
    cs = _mero_coeffs(rs, model)
    xx = ctx.mpf(x)
    terms = []
    for j in range(J):
        z = rs.roots[j][0]
        c = cs[j]
        e = ctx.exp(-z * xx)
        if derivative == 0:
            terms.append(c * e)
        elif derivative == 1:
            terms.append(-c * z * e)
        else:
            terms.append(c * xx if z == 0 else c * (1 - e) / z)
    val = ctx.fsum(terms)
    if J >= 2 and terms[-2] != 0:
        r = abs(terms[-1] / terms[-2])
        est = abs(terms[-1]) * (r / (1 - r) if r < 1 else ctx.inf)
    else:
        est = abs(terms[-1]) if terms else ctx.mpf(0)
    if derivative == -1:
        # the integrated tail decays only like sum c_j/zeta_j; bound it by the last term
        est = max(est, abs(terms[-1]) * J)
    return val, est
