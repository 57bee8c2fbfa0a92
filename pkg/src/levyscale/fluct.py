"""Fluctuation identities expressed through scale functions.

Every function takes a model, a killing rate ``q`` and the identity's own
parameters.  Scale-function values come from a :class:`ScaleEvaluator`,
which memoises evaluations so that identities sharing points (``W(a)`` in a
sweep over ``x``, say) do not repeat work.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConfigError, DomainError
from .inversion import AccuracyWarning, MpConfig
from .model import LevyModel, boundary_values, phi_q
from .scale import canonical_backend, eval_scale

__all__ = [
    "exp_weighted_integral",
    "ScaleEvaluator",
    "KinkWarning",
    "IdentityResult",
    "two_sided_exit_up",
    "one_sided_down",
    "creeping_transform",
    "two_sided_down",
    "two_sided_creep",
    "resolvent_density",
    "resolvent_total_mass",
    "reflected_exit",
    "gerber_shiu_density",
    "gerber_shiu_total_mass",
    "overshoot_marginal",
    "joint_laplace_at_ruin",
    "infimum_law",
    "infimum_total_mass",
    "busy_period",
    "csbp_supremum",
]


class KinkWarning(AccuracyWarning):
    """A derivative was requested where ``W`` has a kink; the one-sided value is used."""


@dataclass
class IdentityResult:
    """JSON-friendly record of an identity evaluation."""

    identity: str
    params: dict
    value: float
    backend: str
    error_estimate: float | None = None

    def to_dict(self) -> dict:
        return {"identity": self.identity, "params": self.params, "value": self.value,
                "backend": self.backend, "error_estimate": self.error_estimate}


class ScaleEvaluator:
    """Memoised ``W``, ``W'``, ``Z``, ``u``, ``v`` of one model at one ``q``."""

    def __init__(self, model: LevyModel, q: float, backend: str = "euler", cfg=None):
        if q < 0:
            raise DomainError("q must be nonnegative")
        self.model = model
        self.q = float(q)
        self.backend = canonical_backend(backend)
        if cfg is None and self.backend in ("euler", "talbot"):
            cfg = MpConfig(20, 32)
        if cfg is None and self.backend == "gaver_stehfest":
            cfg = MpConfig(20, 44)
        self.cfg = cfg
        self.phi = phi_q(model, q)
        self.w0, self.wp0 = boundary_values(model, q)
        self._memo: dict = {}

    def _get(self, key: str, x) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        missing = sorted({float(v) for v in xs if (key, float(v)) not in self._memo})
        if missing:
            g = eval_scale(self.model, self.q, np.array(missing), (key,), self.backend, self.cfg)
            for xv, val in zip(missing, g[key]):
                self._memo[(key, xv)] = float(val)
        return np.array([self._memo[(key, float(v))] for v in xs])

    def _out(self, key, x):
        vals = self._get(key, x)
        return float(vals[0]) if np.ndim(x) == 0 else vals

    def W(self, x):
        return self._out("W", x)

    def Wprime(self, x):
        return self._out("Wprime", x)

    def Z(self, x):
        return self._out("Z", x)

    def u(self, x):
        return self._out("u", x)

    def uprime(self, x):
        return self._out("uprime", x)

    def v(self, x):
        return self._out("v", x)

    def intW(self, x):
        """``int_0^x W`` (zero for ``x <= 0``), from ``Z`` or from ``v``."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(xs.size)
        pos = xs > 0
        if np.any(pos):
            if self.q > 0:
                out[pos] = (self._get("Z", xs[pos]) - 1) / self.q
            else:
                a1 = self.model.mean()
                phi = self.phi
                vv = self._get("v", xs[pos])
                base = np.expm1(phi * xs[pos]) / (phi * a1) if phi > 0 else xs[pos] / a1
                out[pos] = base - vv
        return float(out[0]) if np.ndim(x) == 0 else out

    def kink(self, x: float) -> bool:
        return any(abs(x - a) <= 1e-12 * max(1.0, a) for a in self.model.atoms)


def _ev(model, q, backend, cfg, ev):
    if ev is not None:
        if ev.model is not model or ev.q != float(q):
            raise ConfigError("evaluator does not match model and q")
        return ev
    return ScaleEvaluator(model, q, backend, cfg)


def exp_weighted_integral(ev: ScaleEvaluator, rate: float, x: float, kinks=(),
                          nodes: int = 48) -> float:
    """``int_0^x e^{-rate y} W(y) dy`` by Gauss-Legendre, split at ``kinks``.

    ``W`` may behave like a fractional power at 0, so the first panel is
    mapped through ``y = hi s^2``.
    """
    pts = [0.0] + sorted(k for k in kinks if 0 < k < x) + [x]
    t, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (t + 1)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if lo == 0:
            ys, jac = hi * s * s, hi * s
        else:
            ys, jac = lo + s * (hi - lo), 0.5 * (hi - lo)
        total += float(np.sum(w * jac * np.exp(-rate * ys) * ev.W(ys)))
    return total


# --------------------------------------------------------------------------
# exit problems
# --------------------------------------------------------------------------

def two_sided_exit_up(model, q, x, a, backend="euler", cfg=None, *, ev=None) -> float:
    """``E_x[e^{-q tau_a^+}; tau_a^+ < tau_0^-] = W(x)/W(a)``."""
    if not a > 0:
        raise DomainError("a must be positive")
    if x < 0:
        return 0.0
    if x >= a:
        return 1.0
    e = _ev(model, q, backend, cfg, ev)
    return e.W(x) / e.W(a)


def one_sided_down(model, q, x, backend="euler", cfg=None, *, ev=None) -> float:
    """``E_x[e^{-q tau_0^-}; tau_0^- < inf] = Z(x) - (q/Phi) W(x)``."""
    if x < 0:
        return 1.0
    e = _ev(model, q, backend, cfg, ev)
    if q == 0:
        m = model.mean()
        if not m > 0:
            return 1.0
        return 1.0 - m * e.W(x)
    # written through u and v so that the two e^{Phi x} growths cancel analytically
    a1 = float(model.dpsi_real(e.phi))
    return 1.0 - q / (e.phi * a1) - q * e.v(x) + q / e.phi * e.u(x)


def creeping_transform(model, q, x, backend="euler", cfg=None, *, ev=None) -> float:
    """``E_x[e^{-q tau_0^-}; X_{tau_0^-} = 0] = (sigma^2/2)(W'(x) - Phi W(x))``."""
    if x < 0:
        raise DomainError("x must be nonnegative")
    s = model.sigma
    if s == 0:
        return 0.0
    e = _ev(model, q, backend, cfg, ev)
    if x == 0:
        return 1.0
    return 0.5 * s * s * (e.Wprime(x) - e.phi * e.W(x))


def two_sided_down(model, q, x, a, backend="euler", cfg=None, *, ev=None) -> float:
    """``E_x[e^{-q tau_0^-}; tau_0^- < tau_a^+] = Z(x) - Z(a) W(x)/W(a)``."""
    if not 0 <= x <= a:
        raise DomainError("need 0 <= x <= a")
    e = _ev(model, q, backend, cfg, ev)
    return e.Z(x) - e.Z(a) * e.W(x) / e.W(a)


def two_sided_creep(model, q, x, a, backend="euler", cfg=None, *, ev=None) -> float:
    """Creeping part of the two-sided downward exit: ``(sigma^2/2)(W'(x) - W(x) W'(a)/W(a))``."""
    if not 0 <= x <= a:
        raise DomainError("need 0 <= x <= a")
    s = model.sigma
    if s == 0:
        return 0.0
    e = _ev(model, q, backend, cfg, ev)
    if x == 0:
        return 1.0
    return 0.5 * s * s * (e.Wprime(x) - e.W(x) * e.Wprime(a) / e.W(a))


# --------------------------------------------------------------------------
# resolvents
# --------------------------------------------------------------------------

_CASES = {"two-sided": "i", "i": "i", "up-to-a": "ii", "ii": "ii",
          "above-0": "iii", "iii": "iii", "free": "iv", "iv": "iv"}


def resolvent_density(model, q, x, y, horizon="free", a=None, backend="euler", cfg=None,
                      *, ev=None) -> float:
    """q-potential densities of ``X`` killed on leaving a set.

    ``horizon``: ``two-sided`` (``[0,a]``), ``up-to-a`` (``(-inf,a]``),
    ``above-0`` (``[0,inf)``) or ``free``.
    """
    case = _CASES.get(str(horizon))
    if case is None:
        raise ConfigError(f"unknown resolvent horizon {horizon!r}")
    if case in ("i", "ii") and (a is None or not a > 0):
        raise DomainError("this resolvent needs a > 0")
    if case == "i" and not (0 <= x <= a and 0 <= y <= a):
        raise DomainError("two-sided resolvent needs 0 <= x, y <= a")
    if case == "ii" and not (x <= a and y <= a):
        raise DomainError("resolvent up to a needs x, y <= a")
    if case == "iii" and not (x >= 0 and y >= 0):
        raise DomainError("resolvent above 0 needs x, y >= 0")
    if case == "iv" and not q > 0:
        raise DomainError("the free resolvent needs q > 0")
    e = _ev(model, q, backend, cfg, ev)
    Wxy = e.W(x - y) if x - y > 0 else (e.w0 if x == y else 0.0)
    if case == "i":
        return e.W(x) * e.W(a - y) / e.W(a) - Wxy
    if case == "ii":
        Way = e.W(a - y) if a > y else e.w0
        return math.exp(-e.phi * (a - x)) * Way - Wxy
    if case == "iii":
        return math.exp(-e.phi * y) * e.W(x) - Wxy
    # free: Phi'(q) e^{-Phi y} - W(-y)  (density at y of the q-potential started at 0)
    a1 = float(model.dpsi_real(e.phi))
    Wmy = e.W(-y) if -y > 0 else 0.0
    return math.exp(-e.phi * y) / a1 - Wmy


def resolvent_total_mass(model, q, backend="euler", cfg=None, *, T=None, ev=None) -> float:
    """``int_R`` of the free resolvent density; equals ``1/q``.

    On ``y > 0`` the density is ``Phi' e^{-Phi y}``; on ``y < 0`` it is the
    potential density ``u(-y)``, whose integral up to ``T`` is ``v(T)`` and
    whose exponential tail is completed from ``u(T)`` and ``u'(T)``.
    """
    if not q > 0:
        raise DomainError("q must be positive")
    e = _ev(model, q, backend, cfg, ev)
    a1 = float(model.dpsi_real(e.phi))
    T = T if T is not None else 40.0 / e.phi
    right = 1.0 / (a1 * e.phi)
    uT, upT, vT = e.u(T), e.uprime(T), e.v(T)
    tail = uT * uT / (-upT) if upT < 0 else 0.0
    return right + vT + tail


# --------------------------------------------------------------------------
# reflected processes
# --------------------------------------------------------------------------

def reflected_exit(model, q, x, a, which="from-infimum", backend="euler", cfg=None,
                   *, ev=None) -> float:
    """Exit transforms of the process reflected at its infimum or supremum.

    ``from-infimum``: ``Z(x)/Z(a)``.  ``from-supremum``:
    ``Z(a-x) - q W(a-x) W(a)/W'_+(a)``.
    """
    if not 0 <= x <= a:
        raise DomainError("need 0 <= x <= a")
    e = _ev(model, q, backend, cfg, ev)
    if which in ("from-infimum", "i", "infimum"):
        return e.Z(x) / e.Z(a)
    if which in ("from-supremum", "ii", "supremum"):
        if e.kink(a):
            warnings.warn(f"W has a kink at a={a}; using the right derivative", KinkWarning,
                          stacklevel=2)
            wp = e.Wprime(a * (1 + 1e-9))
        else:
            wp = e.Wprime(a)
        y = a - x
        Wy = e.W(y) if y > 0 else e.w0
        Zy = e.Z(y) if y > 0 else 1.0
        return Zy - q * Wy * e.W(a) / wp
    raise ConfigError(f"unknown reflected exit {which!r}")


# --------------------------------------------------------------------------
# ruin quantities
# --------------------------------------------------------------------------

def gerber_shiu_density(model, q, x, u, v, y, backend="euler", cfg=None, *, ev=None) -> float:
    """Continuous part of the joint density of overshoot, undershoot and running infimum."""
    if min(u, v, y, x) < 0:
        raise DomainError("x, u, v, y must be nonnegative")
    if not (0 < y < min(v, x) and u > 0):
        return 0.0
    e = _ev(model, q, backend, cfg, ev)
    dens = float(model.levy_density(np.array([u + v]))[0])
    return math.exp(-e.phi * (v - y)) * (e.Wprime(x - y) - e.phi * e.W(x - y)) * dens


def gerber_shiu_total_mass(model, q, x, backend="euler", cfg=None, *, nodes: int = 48,
                           ev=None) -> tuple:
    """Integral of the Gerber-Shiu density plus the creeping atom.

    Integrating out ``u`` replaces the density by the tail ``Pi(-inf, -v)``.
    Returns ``(jump_part, creep_part)``; their sum equals ``one_sided_down``.
    """
    if not x > 0:
        raise DomainError("x must be positive")
    e = _ev(model, q, backend, cfg, ev)
    phi = e.phi
    tail = lambda s: float(model.levy_tail(np.array([s]))[0])

    def inner(y):
        f = lambda v: math.exp(-phi * (v - y)) * tail(v)
        val, _ = integrate.quad(f, y, y + 1.0, limit=200)
        val2, _ = integrate.quad(f, y + 1.0, np.inf, limit=200)
        return val + val2

    # Gauss-Legendre in y on (0, x) after the substitution y = x - s^2 / x
    # smooths the endpoint behaviour of W' at s = 0
    t, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (t + 1) * math.sqrt(x)
    ws = 0.5 * w * math.sqrt(x)
    ys = x - s * s
    jac = 2 * s
    xs = x - ys
    Wp = e.Wprime(xs)
    Wv = e.W(xs)
    total = 0.0
    for yi, ji, wi, wpi, wvi in zip(ys, jac, ws, Wp, Wv):
        total += wi * ji * (wpi - phi * wvi) * inner(yi)
    return total, creeping_transform(model, q, x, ev=e)


def overshoot_marginal(model, q, x, a, B=(-math.inf, 0.0), A=(0.0, None), backend="euler",
                       cfg=None, *, ev=None) -> float:
    """``int_A Pi(B - y) U(x, dy)`` with the two-sided resolvent on ``[0, a]``.

    ``A = (lo, hi)`` inside ``[0, a)`` and ``B = (b1, b2)`` inside ``(-inf, 0)``.
    """
    lo, hi = A
    hi = a if hi is None else hi
    b1, b2 = B
    if not (0 <= lo <= hi <= a):
        raise DomainError("A must lie in [0, a]")
    if not (b1 <= b2 <= 0):
        raise DomainError("B must lie in (-inf, 0]")
    if hi == lo or b1 == b2:
        return 0.0
    e = _ev(model, q, backend, cfg, ev)

    def tail(s):
        return float(model.levy_tail(np.array([s]))[0]) if s > 0 else math.inf

    def jump_into_B(y):
        # Pi((b1 - y, b2 - y)) = tail(y - b2) - tail(y - b1)
        hi_part = tail(y - b2)
        lo_part = 0.0 if b1 == -math.inf else tail(y - b1)
        return hi_part - lo_part

    Wa = e.W(a)
    Wx = e.W(x)
    t, w = np.polynomial.legendre.leggauss(48)
    cuts = sorted({lo, hi} | {p for p in [x] + [x - c for c in model.atoms] if lo < p < hi})
    total = 0.0
    for k, (p0, p1) in enumerate(zip(cuts[:-1], cuts[1:])):
        # y = p0 + (p1 - p0) s^2 clusters nodes near the left end, where the
        # Levy tail can blow up (y = 0) or W(x - y) has a kink
        s = 0.5 * (t + 1)
        ys = p0 + (p1 - p0) * s * s
        jac = (p1 - p0) * s * w
        xy = x - ys
        Wxy = np.where(xy > 0, e.W(np.where(xy > 0, xy, 1.0)), 0.0)
        dens = Wx * e.W(a - ys) / Wa - Wxy
        total += float(sum(j * d * jump_into_B(y) for j, d, y in zip(jac, dens, ys)))
    return total


def joint_laplace_at_ruin(model, u, v, x, backend="euler", cfg=None, *, ev=None) -> float:
    """``E_x[e^{-u tau_0^- + v X_{tau_0^-}}; tau_0^- < inf]`` for ``u > 0``, ``v >= 0``."""
    if not u > 0:
        raise DomainError("u must be positive")
    if v < 0:
        raise DomainError("v must be nonnegative")
    if x < 0:
        return math.exp(v * x)
    e = _ev(model, u, backend, cfg, ev)
    pv = float(model.psi_real(v)) if v > 0 else 0.0
    d = u - pv
    gap = e.phi - v
    if abs(gap) <= 1e-8 * max(1.0, abs(v)):
        ratio = float(model.dpsi_real(v))
    else:
        ratio = d / gap
    if x == 0:
        return 1.0 - ratio * e.W(0.0) if e.w0 else 1.0
    integ = exp_weighted_integral(e, v, x, model.atoms)
    return math.exp(v * x) * (1 + d * integ - ratio * math.exp(-v * x) * e.W(x))


def infimum_law(model, q, x, backend="euler", cfg=None, *, ev=None) -> tuple:
    """Law of ``-inf_{s <= e_q} X_s``: ``(density at x, atom at 0)``."""
    if not q > 0:
        raise DomainError("q must be positive")
    if x < 0:
        raise DomainError("x must be nonnegative")
    e = _ev(model, q, backend, cfg, ev)
    if e.kink(x):
        warnings.warn(f"W has a kink at x={x}; the density uses W'(x+)", KinkWarning,
                      stacklevel=2)
    atom = q / e.phi * e.w0
    if x == 0:
        dens = q / e.phi * e.wp0 - q * e.w0
    else:
        dens = q / e.phi * e.Wprime(x) - q * e.W(x)
    return dens, atom


def infimum_total_mass(model, q, backend="euler", cfg=None, *, ev=None) -> float:
    """Atom plus integral of the density; equals one.

    ``int_0^T`` of the density is ``(q/Phi)(W(T) - W(0+)) - (Z(T) - 1)``, so
    atom plus integral is ``1 - one_sided_down(T)``; the remainder vanishes as
    ``T`` grows and is evaluated without cancellation.
    """
    e = _ev(model, q, backend, cfg, ev)
    T = 40.0 / e.phi
    return 1.0 - one_sided_down(model, q, T, ev=e)


# --------------------------------------------------------------------------
# applications
# --------------------------------------------------------------------------

def busy_period(model, q, x, B, backend="euler", cfg=None, *, ev=None) -> float:
    """Buffer-adjusted busy period transform ``(1 + q int_0^{x-B} W)/(1 + q int_0^B W)``.

    The integral over ``[0, x-B]`` is zero when ``x < B``.
    """
    if not B > 0:
        raise DomainError("B must be positive")
    e = _ev(model, q, backend, cfg, ev)
    num = 1.0 + q * (e.intW(x - B) if x > B else 0.0)
    return num / (1.0 + q * e.intW(B))


def csbp_supremum(model, x, y, backend="euler", cfg=None, *, ev=None) -> float:
    """``P_y(sup Y <= x) = W(x - y)/W(x)`` for the branching process with branching mechanism ``psi``."""
    if not (0 < y <= x):
        raise DomainError("need 0 < y <= x")
    e = _ev(model, 0.0, backend, cfg, ev)
    num = e.W(x - y) if x > y else e.w0
    return num / e.W(x)
