"""Closed-form constructions of scale functions and their parent processes.

The central object is :class:`ScaleClosedForm`, a sum of elementary terms
(powers, exponential polynomials, Mittag-Leffler kernels and incomplete
gamma functions) that can be evaluated anywhere on ``[0, inf)`` and written
to or read from JSON.  Ladder-height data enter through :class:`LadderSpec`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import ConfigError, DomainError, PreconditionError
from .kernel import mittag_leffler
from .inversion import FilonConfig
from .model import Drift, Gaussian, LevyModel, Stable, TemperedStable, phi_q

__all__ = [
    "Term",
    "ScaleClosedForm",
    "LadderSpec",
    "ParentProcess",
    "stable_ladder",
    "sum_stable_ladder",
    "tempered_stable_ladder",
    "drift_ladder",
    "parent_from_ladder",
    "conjugate_pair",
    "t_transform_scale",
    "t_transform_stable",
    "tilt_conjugates",
    "conditioned_parent_scale",
    "conditioned_parent_form",
    "shifted_scale",
    "ShiftedScale",
    "laplace_transform",
    "monotone_spot_check",
]


def _gammainc(a, lo, hi=None):
    """Incomplete gamma with possibly negative first argument, at 30 digits."""
    with mpmath.workdps(30):
        if hi is None:
            return float(mpmath.gammainc(a, lo))
        return float(mpmath.gammainc(a, lo, hi))


# --------------------------------------------------------------------------
# terms
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    """One summand of a closed form.

    ``kind`` selects the formula; ``p`` holds its parameters:

    ``power``        ``c x^p``
    ``exp_poly``     ``c x^degree e^{rate x}``
    ``ml``           ``c e^{outer x} G(x)`` with ``g(t) = e^{tilt t} t^{beta-1} E_{alpha,beta}(scale t^alpha)``
                     and ``G = g`` or ``G = int_0^x g`` when ``integrated``
    ``lower_gamma``  ``c e^{outer x} gamma(s, rate x)``
    ``tilted_power`` ``c int_0^x e^{-tilt y} y^p dy``
    ``min_moment``   ``c int_0^inf min(z, x) e^{-tilt z} z^p dz``
    """

    kind: str
    p: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.p}

    @staticmethod
    def from_dict(d: dict) -> "Term":
        d = dict(d)
        kind = d.pop("kind")
        if kind not in _TERM_EVAL:
            raise ConfigError(f"unknown closed-form term {kind!r}")
        return Term(kind, d)

    def __call__(self, x: float) -> float:
        return _TERM_EVAL[self.kind](self.p, float(x))

    def derivative(self, x: float) -> float:
        fn = _TERM_DERIV.get(self.kind)
        if fn is not None:
            r = fn(self.p, float(x))
            if r is not None:
                return r
        h = 1e-6 * max(1.0, x)
        lo = max(x - h, 0.0)
        return (self(x + h) - self(lo)) / (x + h - lo)


def _ml_kernel(p, t):
    if t <= 0:
        return 0.0
    return (math.exp(p.get("tilt", 0.0) * t) * t ** (p["beta"] - 1)
            * mittag_leffler(p["alpha"], p["beta"], p["scale"] * t ** p["alpha"]))


def _ml_integral_series(alpha, beta, lam, m, x):
    """``int_0^x e^{-m t} t^{beta-1} E_{alpha,beta}(lam t^alpha) dt`` for ``m > 0``.

    Termwise: ``m^{-beta} sum_n (lam m^{-alpha})^n P(n alpha + beta, m x)`` with
    the regularised lower incomplete gamma ``P``.  Returns ``None`` when the
    partial sums cancel too much to trust in double precision.
    """
    r = lam * m ** (-alpha)
    n = np.arange(0, 400)
    s = n * alpha + beta
    logs = n * math.log(abs(r)) if r != 0 else np.where(n == 0, 0.0, -np.inf)
    terms = np.exp(logs) * special.gammainc(s, m * x)
    if r < 0:
        terms = terms * np.where(n % 2 == 0, 1.0, -1.0)
    if abs(terms[-1]) > 1e-300 and abs(terms[-1]) > 1e-17 * np.max(np.abs(terms)):
        return None
    total = float(np.sum(terms))
    if np.max(np.abs(terms)) > 1e6 * max(abs(total), 1e-300):
        return None
    return m ** (-beta) * total


def _ml_value(p, x):
    if x <= 0:
        if p.get("integrated") or p["beta"] > 1:
            return 0.0
        if p["beta"] == 1:
            return p["c"] / math.gamma(1.0)
        return math.inf
    a, b, lam, tilt = p["alpha"], p["beta"], p["scale"], p.get("tilt", 0.0)
    val = None
    if p.get("integrated"):
        if tilt == 0.0:
            # termwise integration raises beta by one
            val = x ** b * mittag_leffler(a, b + 1, lam * x ** a)
        elif tilt < 0:
            val = _ml_integral_series(a, b, lam, -tilt, x)
        if val is None:
            # integrate in s = t^b to remove the endpoint singularity t^(b-1)
            f = lambda s: (_ml_kernel(p, s ** (1 / b)) * s ** (1 / b - 1) / b if s > 0
                           else 1 / (b * math.gamma(b)))
            val, _ = integrate.quad(f, 0.0, x ** b, epsabs=0, epsrel=1e-13, limit=200)
    else:
        val = _ml_kernel(p, x)
    return p["c"] * math.exp(p.get("outer", 0.0) * x) * val


def _ml_deriv(p, x):
    outer = p.get("outer", 0.0)
    if p.get("integrated"):
        base = _ml_value(p, x)
        return outer * base + p["c"] * math.exp(outer * x) * _ml_kernel(p, x)
    if p.get("tilt", 0.0) == 0.0 and outer == 0.0 and x > 0:
        a, b, lam = p["alpha"], p["beta"], p["scale"]
        if b == 1.0:
            return p["c"] * lam * x ** (a - 1) * mittag_leffler(a, a, lam * x ** a)
        if b > 1.0:
            return p["c"] * x ** (b - 2) * mittag_leffler(a, b - 1, lam * x ** a)
    return None


def _power(p, x):
    if p["p"] == 0:
        return p["c"]
    return p["c"] * x ** p["p"] if x > 0 else (0.0 if p["p"] > 0 else math.inf)


def _power_d(p, x):
    if p["p"] == 0:
        return 0.0
    return p["c"] * p["p"] * x ** (p["p"] - 1) if x > 0 else None


def _exp_poly(p, x):
    return p["c"] * x ** p.get("degree", 0) * math.exp(p["rate"] * x)


def _exp_poly_d(p, x):
    d, r = p.get("degree", 0), p["rate"]
    lead = d * x ** (d - 1) if d else 0.0
    return p["c"] * math.exp(r * x) * (lead + r * x ** d)


def _lower_gamma(p, x):
    if x <= 0:
        return 0.0
    return p["c"] * math.exp(p.get("outer", 0.0) * x) * _gammainc(p["s"], 0, p["rate"] * x)


def _lower_gamma_d(p, x):
    if x <= 0:
        return None
    o, s, r = p.get("outer", 0.0), p["s"], p["rate"]
    core = (r * x) ** (s - 1) * math.exp(-r * x) * r
    return p["c"] * math.exp(o * x) * (o * _gammainc(s, 0, r * x) + core)


def _tilted_power(p, x):
    if x <= 0:
        return 0.0
    t, e = p["tilt"], p["p"]
    if t == 0:
        return p["c"] * x ** (e + 1) / (e + 1)
    return p["c"] * t ** (-e - 1) * _gammainc(e + 1, 0, t * x)


def _tilted_power_d(p, x):
    return p["c"] * math.exp(-p["tilt"] * x) * x ** p["p"] if x > 0 else None


def _min_moment(p, x):
    if x <= 0:
        return 0.0
    t, e = p["tilt"], p["p"]
    lower = t ** (-e - 2) * _gammainc(e + 2, 0, t * x)
    upper = x * t ** (-e - 1) * _gammainc(e + 1, t * x)
    return p["c"] * (lower + upper)


def _min_moment_d(p, x):
    if x <= 0:
        return None
    t, e = p["tilt"], p["p"]
    return p["c"] * t ** (-e - 1) * _gammainc(e + 1, t * x)


_TERM_EVAL = {"power": _power, "exp_poly": _exp_poly, "ml": _ml_value,
              "lower_gamma": _lower_gamma, "tilted_power": _tilted_power,
              "min_moment": _min_moment}
_TERM_DERIV = {"power": _power_d, "exp_poly": _exp_poly_d, "ml": _ml_deriv,
               "lower_gamma": _lower_gamma_d, "tilted_power": _tilted_power_d,
               "min_moment": _min_moment_d}


def power(c, p) -> Term:
    return Term("power", {"c": float(c), "p": float(p)})


# --------------------------------------------------------------------------
# parent exponents as JSON
# --------------------------------------------------------------------------

def _psi_from_spec(spec: dict) -> Callable[[float], float]:
    """Exponent described by ``spec``.

    ``{"monomials": [[c, k, s, r], ...]}`` means ``sum c t^k (t + s)^r``;
    ``{"t_transform": {...}}`` and ``{"shifted": {...}}`` wrap another spec.
    """
    if "monomials" in spec:
        mons = [tuple(map(float, m)) for m in spec["monomials"]]
        return lambda t: sum(c * t ** k * (t + s) ** r for c, k, s, r in mons)
    if "t_transform" in spec:
        d = spec["t_transform"]
        base = _psi_from_spec(d["base"])
        q, beta, delta = float(d.get("q", 0.0)), float(d["beta"]), float(d["delta"])
        if beta == 0:
            return lambda u: (u - delta) / u * (base(u) - q)
        const = (beta - delta) / beta * (base(beta) - q)
        return lambda u: (u + beta - delta) / (u + beta) * (base(u + beta) - q) - const
    if "square_over" in spec:
        base = _psi_from_spec(spec["square_over"])
        return lambda t: t * t / base(t)
    if "shifted" in spec:
        base = _psi_from_spec(spec["shifted"])
        return lambda t: t * base(t) / (t + base(t))
    if "model" in spec:
        from .model import model_from_dict

        m = model_from_dict(spec["model"])
        q = float(spec.get("q", 0.0))
        return lambda t: float(m.psi_real(t)) - q
    raise ConfigError("unrecognised parent exponent description")


@dataclass
class ScaleClosedForm:
    """A scale function ``W`` written as a finite sum of :class:`Term` objects.

    ``parent`` describes the exponent ``psi`` whose scale function this is
    (see :func:`_psi_from_spec`); ``W`` has Laplace transform ``1/psi``.
    Non-exportable pieces (callables from user-supplied ladder data) go in
    ``extra`` and are added after the terms.
    """

    representation: str
    terms: tuple
    parent: dict | None = None
    domain: str = "x >= 0"
    extra: Callable[[float], float] | None = None
    extra_derivative: Callable[[float], float] | None = None
    label: str = ""

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([self._one(v) for v in xs])
        return float(out[0]) if np.ndim(x) == 0 else out

    def _one(self, x: float) -> float:
        if x < 0:
            return 0.0
        val = sum(t(x) for t in self.terms)
        if self.extra is not None:
            val += self.extra(x)
        return float(val)

    def derivative(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = []
        for v in xs:
            d = sum(t.derivative(v) for t in self.terms)
            if self.extra is not None:
                if self.extra_derivative is not None:
                    d += self.extra_derivative(v)
                else:
                    h = 1e-6 * max(1.0, v)
                    d += (self.extra(v + h) - self.extra(max(v - h, 0.0))) / (v + h - max(v - h, 0.0))
            out.append(d)
        out = np.asarray(out, dtype=float)
        return float(out[0]) if np.ndim(x) == 0 else out

    def value_at_zero(self) -> float:
        """``W(0+)``."""
        return self._one(0.0)

    def psi(self, t: float) -> float:
        if self.parent is None:
            raise ConfigError("this closed form carries no parent exponent")
        return _psi_from_spec(self.parent)(t)

    def laplace_check(self, thetas, rtol: float = 1e-6) -> list:
        """``[(theta, numeric LT, 1/psi(theta), rel err), ...]``."""
        out = []
        for th in thetas:
            lt = laplace_transform(self, th)
            ref = 1.0 / self.psi(th)
            out.append((th, lt, ref, abs(lt / ref - 1)))
        return out

    def to_dict(self) -> dict:
        if self.extra is not None:
            raise ConfigError("closed form contains a quadrature term built from a callable; "
                              "it cannot be exported")
        return {"representation": self.representation, "label": self.label,
                "domain": self.domain, "parent": self.parent,
                "parameters": {"terms": [t.to_dict() for t in self.terms]}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_dict(d: dict) -> "ScaleClosedForm":
        try:
            terms = tuple(Term.from_dict(t) for t in d["parameters"]["terms"])
            return ScaleClosedForm(d["representation"], terms, d.get("parent"),
                                   d.get("domain", "x >= 0"), label=d.get("label", ""))
        except KeyError as exc:
            raise ConfigError(f"closed form JSON lacks {exc}") from None

    @staticmethod
    def from_json(text: str) -> "ScaleClosedForm":
        return ScaleClosedForm.from_dict(json.loads(text))


def laplace_transform(f, theta: float, *, upper: float | None = None) -> float:
    """``int_0^inf e^{-theta x} f(x) dx`` by adaptive quadrature.

    ``f`` may grow like ``e^{c x}`` with ``c < theta``.  The range is split at
    ``1`` so integrable endpoint singularities stay in the first panel.
    """
    upper = upper if upper is not None else 60.0 / theta + 10.0
    g = lambda x: math.exp(-theta * x) * float(f(x))
    a, _ = integrate.quad(g, 0.0, 1.0, epsabs=0, epsrel=1e-11, limit=200)
    b, _ = integrate.quad(g, 1.0, upper, epsabs=0, epsrel=1e-11, limit=400)
    return a + b


# --------------------------------------------------------------------------
# ladder data
# --------------------------------------------------------------------------

@dataclass
class LadderSpec:
    """Descending ladder height data ``phi(t) = kappa + delta t + int (1 - e^{-t x}) Upsilon(dx)``.

    ``tail`` is ``x -> Upsilon(x, inf)`` and ``density`` its (nonnegative)
    density; ``tail_terms`` optionally writes the tail as closed-form terms
    so that integrals of it can be exported.  ``conjugate`` holds the same
    data for the conjugate Bernstein function when it is known.
    """

    kappa: float
    delta: float
    tail: Callable[[float], float]
    phi: Callable[[float], float]
    nonincreasing_density: bool = False
    density: Callable[[float], float] | None = None
    tail_terms: tuple | None = None
    density_terms: tuple | None = None
    total_mass: float = math.inf
    conjugate: "LadderSpec | None" = None
    phi_monomials: list | None = None
    label: str = ""

    def __post_init__(self):
        if self.kappa < 0 or self.delta < 0:
            raise ConfigError("kappa and delta must be nonnegative")

    def check(self, grid=None) -> None:
        """Spot-check ``phi(0) = kappa`` and a nonincreasing tail."""
        if abs(self.phi(0.0) - self.kappa) > 1e-9 * max(1.0, self.kappa):
            raise PreconditionError("phi(0) does not equal kappa")
        g = np.asarray(grid if grid is not None else np.geomspace(1e-3, 20, 40))
        vals = np.array([self.tail(v) for v in g])
        if np.any(np.diff(vals) > 1e-12 * np.maximum(1.0, np.abs(vals[:-1]))):
            raise PreconditionError("the ladder tail must be nonincreasing")

    def upsilon_density(self, x: float) -> float:
        if self.density is not None:
            return float(self.density(x))
        h = 1e-6 * max(1.0, x)
        return float((self.tail(max(x - h, 0.5 * x)) - self.tail(x + h)) / (x + h - max(x - h, 0.5 * x)))


def _stable_tail_terms(c: float, gam: float) -> tuple:
    """Tail ``Upsilon(x, inf)`` of ``phi(t) = c t^gam`` as a power term."""
    return (power(c / math.gamma(1 - gam), -gam),)


def stable_ladder(b: float, beta: float) -> LadderSpec:
    """``phi(t) = b t^beta`` with ``0 < beta < 1``, together with its conjugate ``t^{1-beta}/b``."""
    if not (b > 0 and 0 < beta < 1):
        raise ConfigError("stable ladder needs b > 0 and 0 < beta < 1")

    def make(c, g, label):
        tt = _stable_tail_terms(c, g)
        return LadderSpec(0.0, 0.0, tail=lambda x: sum(t(x) for t in tt),
                          phi=lambda t: c * t ** g, nonincreasing_density=True,
                          density=lambda x: c * g / math.gamma(1 - g) * x ** (-1 - g),
                          tail_terms=tt,
                          density_terms=(power(c * g / math.gamma(1 - g), -1 - g),),
                          phi_monomials=[[c, g, 0.0, 0.0]], label=label)

    spec = make(b, beta, f"stable({b},{beta})")
    spec.conjugate = make(1 / b, 1 - beta, f"stable({1 / b},{1 - beta})")
    spec.conjugate.conjugate = spec
    return spec


def sum_stable_ladder(a: float, b: float, alpha: float, beta: float) -> LadderSpec:
    """``phi(t) = a t^{beta-alpha} + b t^beta`` with ``0 < alpha < beta < 1``.

    The conjugate ``t/phi(t)`` has zero killing and drift and tail
    ``(1/b) x^{beta-1} E_{alpha,beta}(-a x^alpha / b)``.
    """
    if not (a > 0 and b > 0 and 0 < alpha < beta < 1):
        raise ConfigError("sum of stables needs a, b > 0 and 0 < alpha < beta < 1")
    g1 = beta - alpha
    tt = (power(a / math.gamma(1 - g1), -g1), power(b / math.gamma(1 - beta), -beta))
    dt = (power(a * g1 / math.gamma(1 - g1), -1 - g1), power(b * beta / math.gamma(1 - beta), -1 - beta))
    spec = LadderSpec(0.0, 0.0, tail=lambda x: sum(t(x) for t in tt),
                      phi=lambda t: a * t ** g1 + b * t ** beta, nonincreasing_density=True,
                      density=lambda x: sum(t(x) for t in dt), tail_terms=tt, density_terms=dt,
                      phi_monomials=[[a, g1, 0.0, 0.0], [b, beta, 0.0, 0.0]],
                      label=f"sum_stable({a},{b},{alpha},{beta})")
    ct = (Term("ml", {"c": 1 / b, "alpha": alpha, "beta": beta, "scale": -a / b}),)
    conj = LadderSpec(0.0, 0.0, tail=lambda x: sum(t(x) for t in ct),
                      phi=lambda t: t / (a * t ** g1 + b * t ** beta) if t > 0 else 0.0,
                      nonincreasing_density=True, tail_terms=ct, label="sum_stable conjugate")
    spec.conjugate = conj
    conj.conjugate = spec
    return spec


def tempered_stable_ladder(kappa: float, c: float, alpha: float, gamma: float) -> LadderSpec:
    """Killed tempered stable subordinator, Levy density ``c x^{-1-alpha} e^{-gamma x}``.

    ``phi(t) = kappa - c Gamma(-alpha) ((gamma + t)^alpha - gamma^alpha)`` for
    ``alpha`` in ``(-1, 1)`` without 0.
    """
    if not (-1 < alpha < 1) or alpha == 0:
        raise ConfigError("alpha must lie in (-1, 1) without 0")
    if not c > 0 or gamma < 0 or kappa < 0:
        raise ConfigError("need c > 0, gamma >= 0, kappa >= 0")
    if alpha < 0 and gamma == 0:
        raise ConfigError("alpha < 0 needs gamma > 0")
    k = -c * math.gamma(-alpha)

    def tail(x):
        if gamma == 0:
            return c * x ** (-alpha) / alpha
        return c * gamma ** alpha * _gammainc(-alpha, gamma * x)

    mass = c * math.gamma(-alpha) * gamma ** alpha if alpha < 0 else math.inf
    return LadderSpec(kappa, 0.0, tail=tail,
                      phi=lambda t: kappa + k * ((gamma + t) ** alpha - gamma ** alpha),
                      nonincreasing_density=True,
                      density=lambda x: c * x ** (-1 - alpha) * math.exp(-gamma * x),
                      total_mass=mass, label=f"tempered_stable({kappa},{c},{alpha},{gamma})")


def drift_ladder(delta: float) -> LadderSpec:
    """``phi(t) = delta t``: pure drift ladder."""
    if not delta > 0:
        raise ConfigError("delta must be positive")
    return LadderSpec(0.0, float(delta), tail=lambda x: 0.0, phi=lambda t: delta * t,
                      nonincreasing_density=True, density=lambda x: 0.0, tail_terms=(),
                      density_terms=(), total_mass=0.0,
                      phi_monomials=[[delta, 1.0, 0.0, 0.0]], label=f"drift({delta})")


# --------------------------------------------------------------------------
# parent processes
# --------------------------------------------------------------------------

@dataclass
class ParentProcess:
    """Spectrally negative process with a prescribed descending ladder height."""

    ladder: LadderSpec
    phi_killrate: float
    sigma: float
    model: LevyModel | None = None
    bv_drift: float | None = None
    scale: ScaleClosedForm | None = None

    def psi(self, t: float) -> float:
        return (t - self.phi_killrate) * self.ladder.phi(t)

    def levy_tail(self, x: float) -> float:
        """``Pi(-inf, -x) = phi_killrate Upsilon(x, inf) + Upsilon density at x``."""
        return self.phi_killrate * self.ladder.tail(x) + self.ladder.upsilon_density(x)

    @property
    def unbounded_variation(self) -> bool:
        return self.ladder.delta > 0 or not math.isfinite(self.ladder.total_mass)


def _ts_parent_model(spec: LadderSpec, c: float, alpha: float, gamma: float) -> LevyModel:
    comps = []
    if spec.delta > 0:
        comps.append(Gaussian(math.sqrt(2 * spec.delta)))
    comps.append(Drift(spec.kappa))
    if gamma == 0:
        comps.append(Stable(c * (1 + alpha), alpha + 1))
    else:
        comps.append(TemperedStable(c * (1 + alpha), gamma, alpha + 1))
        comps.append(TemperedStable(c * gamma, gamma, alpha))
    return LevyModel(tuple(comps), label=f"parent of {spec.label}")


def _ts_scale(kappa, c, alpha, gamma, phik) -> ScaleClosedForm:
    if alpha > 0:
        k = -c * math.gamma(-alpha)
        terms = (Term("ml", {"c": 1 / k, "alpha": alpha, "beta": alpha,
                             "scale": gamma ** alpha - kappa / k, "tilt": -(gamma + phik),
                             "outer": phik, "integrated": True}),)
    else:
        k = c * math.gamma(-alpha)
        A = kappa + k * gamma ** alpha
        a = -alpha
        terms = (Term("exp_poly", {"c": 1 / A, "rate": phik, "degree": 0}),
                 Term("ml", {"c": k / A ** 2, "alpha": a, "beta": a, "scale": k / A,
                             "tilt": -(gamma + phik), "outer": phik, "integrated": True}))
    parent = {"monomials": _ts_psi_monomials(kappa, c, alpha, gamma, phik)}
    return ScaleClosedForm("ml_series", terms, parent, label="tempered stable parent")


def _ts_psi_monomials(kappa, c, alpha, gamma, phik) -> list:
    # (t - phik) (kappa - cG(-a) gamma^a + (-cG(-a)) (t + gamma)^a)
    k = -c * math.gamma(-alpha)
    const = kappa - k * gamma ** alpha
    return [[const, 1.0, 0.0, 0.0], [k, 1.0, gamma, alpha],
            [-phik * const, 0.0, 0.0, 0.0], [-phik * k, 0.0, gamma, alpha]]


def parent_from_ladder(spec: LadderSpec, phi_killrate: float = 0.0) -> ParentProcess:
    """Parent process of the ladder height ``spec`` with ``P(tau_x^+ < inf) = e^{-phi_killrate x}``.

    Its exponent is ``(t - phi_killrate) phi(t)``, its Gaussian coefficient
    ``sqrt(2 delta)``.  For tempered stable ladders (with ``phi_killrate = 0``)
    the parent is also returned as a :class:`LevyModel`, and for the
    tempered stable and drift families the scale function in closed form.
    """
    if not spec.nonincreasing_density:
        raise PreconditionError("the ladder Levy measure must have a nonincreasing density")
    if phi_killrate < 0:
        raise ConfigError("phi_killrate must be nonnegative")
    if phi_killrate * spec.kappa != 0:
        raise PreconditionError("need phi_killrate * kappa = 0")
    sigma = math.sqrt(2 * spec.delta)
    bv = None
    if spec.delta == 0 and math.isfinite(spec.total_mass):
        bv = spec.kappa + spec.total_mass - spec.delta * phi_killrate
    model, scale = None, None
    if spec.label.startswith("tempered_stable"):
        kappa, c, alpha, gamma = (float(v) for v in spec.label[len("tempered_stable("):-1].split(","))
        if phi_killrate == 0:
            model = _ts_parent_model(spec, c, alpha, gamma)
        scale = _ts_scale(kappa, c, alpha, gamma, phi_killrate)
    elif spec.label.startswith("drift") and spec.total_mass == 0:
        model = LevyModel((Gaussian(sigma),), label=f"parent of {spec.label}")
        if phi_killrate == 0:
            scale = ScaleClosedForm("exp_mixture", (power(1 / spec.delta, 1.0),),
                                    {"monomials": [[spec.delta, 2.0, 0.0, 0.0]]})
        else:
            # 1/((t - p) delta t) = (1/(p delta)) (1/(t - p) - 1/t)
            p = phi_killrate
            scale = ScaleClosedForm(
                "exp_mixture",
                (Term("exp_poly", {"c": 1 / (p * spec.delta), "rate": p, "degree": 0}),
                 power(-1 / (p * spec.delta), 0.0)),
                {"monomials": [[spec.delta, 2.0, 0.0, 0.0], [-p * spec.delta, 1.0, 0.0, 0.0]]})
    return ParentProcess(spec, float(phi_killrate), sigma, model, bv, scale)


# --------------------------------------------------------------------------
# conjugate pairs
# --------------------------------------------------------------------------

def _integrate_terms(terms, tilt: float = 0.0) -> tuple:
    """Terms of ``int_0^x e^{-tilt y} f(y) dy`` for ``f`` given as terms."""
    out = []
    for t in terms:
        if t.kind == "power":
            out.append(Term("tilted_power", {"c": t.p["c"], "p": t.p["p"], "tilt": float(tilt)}))
        elif t.kind == "ml" and not t.p.get("integrated") and t.p.get("outer", 0.0) == 0.0:
            p = dict(t.p)
            p["tilt"] = p.get("tilt", 0.0) - tilt
            p["integrated"] = True
            out.append(Term("ml", p))
        else:
            raise ConfigError(f"cannot integrate a {t.kind} term in closed form")
    return tuple(out)


def _kappa_star(spec: LadderSpec) -> float:
    if spec.kappa > 0:
        return 0.0
    mean = spec.delta + integrate.quad(spec.tail, 0.0, np.inf, limit=200)[0] \
        if spec.tail_terms != () else spec.delta
    return 1.0 / mean if math.isfinite(mean) and mean > 0 else 0.0


def _delta_star(spec: LadderSpec) -> float:
    if spec.delta > 0 or not math.isfinite(spec.total_mass):
        return 0.0
    return 1.0 / (spec.kappa + spec.total_mass)


def _special_W(spec: LadderSpec, conj: LadderSpec, tilt: float = 0.0, *, label="") -> ScaleClosedForm:
    """``conj.delta + conj.kappa x + int_0^x e^{-tilt y} conj-tail(y) dy``; parent filled in by the caller."""
    terms = []
    if conj.delta:
        terms.append(power(conj.delta, 0.0))
    if conj.kappa:
        terms.append(power(conj.kappa, 1.0) if tilt == 0 else
                     Term("tilted_power", {"c": conj.kappa, "p": 0.0, "tilt": float(tilt)}))
    extra = None
    extra_d = None
    if conj.tail_terms is not None:
        terms.extend(_integrate_terms(conj.tail_terms, tilt))
    else:
        f = lambda y: math.exp(-tilt * y) * conj.tail(y)
        extra = lambda x: integrate.quad(f, 0.0, x, limit=200)[0] if x > 0 else 0.0
        extra_d = lambda x: f(x)
    return ScaleClosedForm("affine_plus_integral", tuple(terms), None,
                           extra=extra, extra_derivative=extra_d, label=label)


def conjugate_pair(spec: LadderSpec) -> tuple:
    """Conjugate scale functions ``(W, W*)`` with parents ``t phi(t)`` and ``t phi*(t)``."""
    conj = spec.conjugate
    if conj is None:
        raise PreconditionError("conjugate data are required")
    if not (spec.nonincreasing_density and conj.nonincreasing_density):
        raise PreconditionError("both ladder measures need nonincreasing densities")
    W = _special_W(spec, conj, label=f"W for {spec.label}")
    Wstar = _special_W(conj, spec, label=f"W* for {spec.label}")
    if W.parent is None:
        W.parent = _parent_for(spec)
    if Wstar.parent is None:
        Wstar.parent = _parent_for(conj)
    return W, Wstar


def _parent_for(spec: LadderSpec):
    # t phi(t), or t^2 / phi*(t) when only the conjugate has a monomial form
    if spec.phi_monomials is not None:
        return {"monomials": [[c, k + 1.0, s, r] for c, k, s, r in spec.phi_monomials]}
    conj = spec.conjugate
    if conj is not None and conj.phi_monomials is not None:
        return {"square_over": {"monomials": conj.phi_monomials}}
    return None


# --------------------------------------------------------------------------
# tilting and conditioning
# --------------------------------------------------------------------------

def tilt_conjugates(spec: LadderSpec, beta: float) -> tuple:
    """Scale functions ``(W_beta, W*_beta)`` of the tilted conjugate parents.

    ``W_beta(x) = delta* + int_0^x e^{-beta y} Upsilon*(y, inf) dy`` and
    ``W*_beta(x) = delta + phi(beta) x + int_0^inf min(z, x) e^{-beta z} Upsilon(dz)``.
    """
    conj = spec.conjugate
    if conj is None:
        raise PreconditionError("conjugate data are required")
    if not beta > 0:
        raise DomainError("beta must be positive")
    dstar = _delta_star(spec) if conj.delta == 0 else conj.delta
    terms = [power(dstar, 0.0)] if dstar else []
    if conj.tail_terms is None:
        raise ConfigError("the conjugate tail must be given as closed-form terms")
    terms.extend(_integrate_terms(conj.tail_terms, beta))
    parent_b = None
    if spec.phi_monomials is not None:
        parent_b = {"monomials": [[c, 1.0, beta, k] for c, k, s, r in spec.phi_monomials
                                  if s == 0 and r == 0]}
    Wb = ScaleClosedForm("ml_series" if any(t.kind == "ml" for t in terms) else "affine_plus_integral",
                         tuple(terms), parent_b, label=f"W_beta, beta={beta}")
    sterms = []
    if spec.delta:
        sterms.append(power(spec.delta, 0.0))
    sterms.append(power(spec.phi(beta), 1.0))
    if spec.density_terms is None:
        raise ConfigError("the ladder density must be given as closed-form terms")
    for t in spec.density_terms:
        if t.kind != "power":
            raise ConfigError("only power densities are supported for W*_beta")
        sterms.append(Term("min_moment", {"c": t.p["c"], "p": t.p["p"], "tilt": float(beta)}))
    Wsb = ScaleClosedForm("affine_plus_integral", tuple(sterms), None,
                          label=f"W*_beta, beta={beta}")
    return Wb, Wsb


def conditioned_parent_form(spec: LadderSpec, beta: float) -> ScaleClosedForm:
    """Scale function of ``(t - beta) phi(t)`` as ``e^{beta x} W_beta(x)``."""
    if spec.kappa != 0:
        raise PreconditionError("the conditioned parent needs kappa = 0")
    if not spec.nonincreasing_density:
        raise PreconditionError("the ladder Levy measure must have a nonincreasing density")
    Wb, _ = tilt_conjugates(spec, beta)
    terms = []
    for t in Wb.terms:
        p = dict(t.p)
        if t.kind == "ml":
            p["outer"] = p.get("outer", 0.0) + beta
            terms.append(Term("ml", p))
        elif t.kind == "power" and p["p"] == 0:
            terms.append(Term("exp_poly", {"c": p["c"], "rate": beta, "degree": 0}))
        elif t.kind == "tilted_power" and p["tilt"] > 0:
            # c int_0^x e^{-t y} y^e dy = c t^{-e-1} gamma(e+1, t x)
            tt, e = p["tilt"], p["p"]
            terms.append(Term("lower_gamma", {"c": p["c"] * tt ** (-e - 1), "s": e + 1,
                                              "rate": tt, "outer": beta}))
        else:
            raise ConfigError(f"cannot shift a {t.kind} term")
    parent = None
    if spec.phi_monomials is not None:
        parent = {"monomials": [[c, k + 1.0, s, r] for c, k, s, r in spec.phi_monomials]
                  + [[-beta * c, k, s, r] for c, k, s, r in spec.phi_monomials]}
    return ScaleClosedForm("ml_series", tuple(terms), parent,
                           label=f"conditioned parent, beta={beta}")


def conditioned_parent_scale(spec: LadderSpec, beta: float, x):
    """``W(x) = delta* e^{beta x} + e^{beta x} int_0^x e^{-beta y} Upsilon*(y, inf) dy``."""
    return conditioned_parent_form(spec, beta)(x)


# --------------------------------------------------------------------------
# the T-transform
# --------------------------------------------------------------------------

def t_transform_scale(model: LevyModel, q: float, beta: float, x, backend: str = "euler",
                      cfg=None, *, delta: float | None = None, ev=None):
    """Scale function of the T-transformed exponent, evaluated at ``x``.

    Without ``delta``: ``e^{-beta x} W(x) + beta int_0^x e^{-beta y} W(y) dy``
    (the exponent ``T_{beta,beta} psi^(q)``).  With ``delta``:
    ``e^{-Phi(0) x}(W(x) + delta e^{delta x} int_0^x e^{-delta y} W(y) dy)``
    for ``T_{delta,Phi(0)} psi^(q)``, which needs ``psi'(0+) <= 0``.
    """
    from .fluct import ScaleEvaluator, exp_weighted_integral

    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if delta is None:
        if beta < 0:
            raise DomainError("beta must be nonnegative")
        if beta == 0:
            if not (q == 0 and model.mean() == 0):
                raise PreconditionError("beta = 0 needs psi'(0+) = q = 0")
        e = ev or ScaleEvaluator(model, q, backend, cfg)
        out = np.array([math.exp(-beta * v) * e.W(v)
                        + beta * exp_weighted_integral(e, beta, v, model.atoms)
                        if v > 0 else (e.w0 if v == 0 else 0.0) for v in xs])
    else:
        if delta < 0:
            raise DomainError("delta must be nonnegative")
        if model.mean() > 0:
            raise PreconditionError("the delta form needs psi'(0+) <= 0")
        e = ev or ScaleEvaluator(model, q, backend, cfg)
        p0 = phi_q(model, 0.0)
        out = np.array([math.exp(-p0 * v) * (e.W(v) + delta * math.exp(delta * v)
                                              * exp_weighted_integral(e, delta, v, model.atoms))
                        if v > 0 else (e.w0 if v == 0 else 0.0) for v in xs])
    return float(out[0]) if np.ndim(x) == 0 else out


def t_transform_stable(alpha: float, delta: float) -> ScaleClosedForm:
    """Scale function of ``T_{delta,0}`` applied to ``psi(t) = t^alpha``, ``1 < alpha < 2``.

    ``delta^{1-alpha} e^{delta x} gamma(alpha-1, delta x) / Gamma(alpha-1)``.
    """
    if not (1 < alpha < 2):
        raise ConfigError("alpha must lie in (1, 2)")
    if not delta > 0:
        raise ConfigError("delta must be positive")
    term = Term("lower_gamma", {"c": delta ** (1 - alpha) / math.gamma(alpha - 1),
                                "s": alpha - 1, "rate": delta, "outer": delta})
    parent = {"t_transform": {"base": {"monomials": [[1.0, alpha, 0.0, 0.0]]},
                              "q": 0.0, "beta": 0.0, "delta": delta}}
    return ScaleClosedForm("affine_plus_integral", (term,), parent,
                           label=f"T-transform of stable({alpha}), delta={delta}")


# --------------------------------------------------------------------------
# shifted scale functions
# --------------------------------------------------------------------------

@dataclass
class ShiftedScale:
    """Result of :func:`shifted_scale`."""

    psi: Callable[[float], float]
    scale: Callable
    jump_tail: Callable
    closed_form: ScaleClosedForm | None = None
    tail_form: ScaleClosedForm | None = None


def shifted_scale(model=None, *, complete: bool = False, stable_alpha: float | None = None,
                  backend: str = "filon", cfg=None) -> ShiftedScale:
    """Shift construction ``psi^s = t psi/(t + psi)`` with scale function ``1 + W``.

    Pass ``stable_alpha`` for ``psi(t) = t^alpha`` (closed forms throughout)
    or a complete, unbounded-variation, zero-mean ``model`` asserted by
    ``complete=True``; then ``W`` and the jump tail ``W~'`` (with ``W~`` the
    scale function of ``psi(t) + t``) are computed numerically.
    """
    if stable_alpha is not None:
        a = float(stable_alpha)
        if not (1 < a < 2):
            raise ConfigError("alpha must lie in (1, 2)")
        form = ScaleClosedForm("affine_plus_integral",
                               (power(1.0, 0.0), power(1 / math.gamma(a), a - 1)),
                               {"shifted": {"monomials": [[1.0, a, 0.0, 0.0]]}},
                               label=f"shifted stable({a})")
        wt = ScaleClosedForm("ml_series",
                             (power(1.0, 0.0),
                              Term("ml", {"c": -1.0, "alpha": a - 1, "beta": 1.0, "scale": -1.0})),
                             {"monomials": [[1.0, a, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]]},
                             label="W~")
        return ShiftedScale(psi=lambda t: t ** (1 + a) / (t + t ** a), scale=form,
                            jump_tail=wt.derivative, closed_form=form, tail_form=wt)
    if model is None:
        raise ConfigError("give a model or stable_alpha")
    if not complete:
        raise PreconditionError("the shift construction needs a complete parent (assert complete=True)")
    from .model import classify

    if classify(model).variation != "unbounded":
        raise PreconditionError("the shift construction needs unbounded variation")
    if abs(model.mean()) > 1e-12:
        raise PreconditionError("the shift construction needs psi'(0+) = 0")
    from .scale import canonical_backend, eval_scale

    plus = LevyModel(tuple(model.components) + (Drift(1.0),), label="psi + t")

    def scale(x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = 1.0 + eval_scale(model, 0.0, xs, ("W",), backend, cfg)["W"]
        return float(out[0]) if np.ndim(x) == 0 else out

    # W~' is singular at 0, so its transform decays slowly and needs a far cutoff
    tail_cfg = cfg if cfg is not None or canonical_backend(backend) != "filon" else \
        FilonConfig(b=1e14, n=60, p=8.0)

    def jump_tail(x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = eval_scale(plus, 0.0, xs, ("Wprime",), backend, tail_cfg)["Wprime"]
        return float(out[0]) if np.ndim(x) == 0 else out

    def psi_s(t):
        p = float(model.psi_real(t))
        return t * p / (t + p)

    return ShiftedScale(psi=psi_s, scale=scale, jump_tail=jump_tail)


# --------------------------------------------------------------------------
# spot checks
# --------------------------------------------------------------------------

def monotone_spot_check(f: Callable[[float], float], grid=None, order: int = 4) -> bool:
    """Sign-alternation of forward differences up to ``order`` on a grid.

    A completely monotone function has ``(-1)^k Delta^k f >= 0``; this is a
    necessary-condition spot check, not a proof.
    """
    g = np.asarray(grid if grid is not None else np.linspace(0.1, 5.0, 60))
    vals = np.array([f(v) for v in g], dtype=float)
    for k in range(order + 1):
        d = vals if k == 0 else np.diff(vals, n=k)
        if np.any((-1) ** k * d < -1e-12 * np.max(np.abs(vals))):
            return False
    return True
