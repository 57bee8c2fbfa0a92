"""Scale functions ``W``, ``Z`` and the potential density ``u`` of a model.

Everything is routed through the transform

    F(z) = 1/(psi'(Phi) (z - Phi)) - 1/(psi(z) - q),

which is the Laplace transform of the potential density ``u(x)`` and is
analytic in ``Re z > 0`` (the pole of the second term at ``Phi`` is cancelled
by the first).  After inverting ``F`` (or ``F/z``, or ``zF + const``) the
scale functions follow from

    W  = e^{Phi x}/psi'(Phi) - u,
    W' = Phi e^{Phi x}/psi'(Phi) - u',
    Z  = 1 + (q/Phi)(e^{Phi x} - 1)/psi'(Phi) - q v,   v = int_0^x u.

When ``q = Phi(q) = 0`` the transform ``1/psi`` itself is inverted with
Filon's method instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _accel
from .errors import ConfigError, DomainError, RouteError, SearchLimitError, TruncationError
from .inversion import (FilonConfig, MpConfig, TransformFn, filon_at, MP_METHODS)
from .kernel import NP_OPS, PrecisionContext, mp_ops
from .model import LevyModel, boundary_values, classify, phi_q

__all__ = [
    "QUANTITIES",
    "BACKENDS",
    "FqTransform",
    "ScaleGrid",
    "fq_transform",
    "f_q",
    "eval_scale",
    "scale_W",
    "convolution_series_W",
    "spectral_gap",
    "tilt_scale",
    "tilted_model",
    "X_MIN",
]

QUANTITIES = ("W", "Wprime", "Z", "u", "uprime", "v")
BACKENDS = ("filon", "gaver_stehfest", "euler", "talbot", "rational", "meromorphic")
_ALIASES = {
    "gs": "gaver_stehfest",
    "stehfest": "gaver_stehfest",
    "gaver-stehfest": "gaver_stehfest",
    "euler_inversion": "euler",
}
X_MIN = 1e-8  # below this the two-term boundary expansion replaces inversion


def canonical_backend(name: str) -> str:
    key = str(name).strip().lower()
    key = _ALIASES.get(key, key)
    if key not in BACKENDS:
        raise ConfigError(f"unknown backend {name!r}; choose from {', '.join(BACKENDS)}")
    return key


# --------------------------------------------------------------------------
# the transform F^(q)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FqTransform:
    """``F^(q)`` for one model and one ``q``, with its Taylor data at ``Phi``.

    ``taylor_coeffs`` holds ``psi'``, ``psi''`` and ``psi'''`` at ``Phi(q)``.
    Within ``switch_radius`` of ``Phi`` the first-order Taylor expansion of
    ``F`` replaces the cancelling difference.
    """

    model: LevyModel
    q: float
    phi: float
    psi_prime_at_phi: float
    taylor_coeffs: tuple
    switch_radius: float
    _mp: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def constants(self, K):
        """``(Phi, a1, a2, a3)`` in the number type of the namespace ``K``."""
        if K is NP_OPS or K.ctx.__class__.__name__ == "FPContext":
            return (self.phi,) + tuple(self.taylor_coeffs)
        digits = K.ctx.dps
        if digits not in self._mp:
            prec = PrecisionContext(digits, "arbitrary")
            phi = phi_q(self.model, self.q, prec)
            phi = K.ctx.mpf(phi)
            a = tuple(self.model.dpsi_real(phi, n, K) for n in (1, 2, 3))
            self._mp[digits] = (phi,) + a
        return self._mp[digits]

    def w0(self) -> float:
        return boundary_values(self.model, self.q)[0]

    def wprime0(self) -> float:
        return boundary_values(self.model, self.q)[1]


def _default_radius(phi: float, digits: int) -> float:
    # direct evaluation loses about eps/r^2, the Taylor tail is about r^2
    return 10.0 ** (-max(digits, 16) / 4.0) * max(1.0, phi)


def fq_transform(model: LevyModel, q: float, switch_radius: float | None = None) -> FqTransform:
    """Build :class:`FqTransform`; needs ``Phi(q) > 0``."""
    if q < 0:
        raise DomainError("q must be nonnegative")
    phi = phi_q(model, q)
    if not phi > 0:
        raise RouteError("the transform F^(q) needs Phi(q) > 0")
    a = tuple(float(model.dpsi_real(phi, n)) for n in (1, 2, 3))
    if not a[0] > 0:
        raise DomainError("psi'(Phi(q)) must be positive")
    r = _default_radius(phi, 16) if switch_radius is None else float(switch_radius)
    if not r > 0:
        raise ConfigError("switch_radius must be positive")
    return FqTransform(model, float(q), float(phi), a[0], a, r)


def _taylor(w, a1, a2, a3):
    return a2 / (2 * a1 ** 2) + (a3 / (6 * a1 ** 2) - a2 ** 2 / (4 * a1 ** 3)) * w


def f_q(t: FqTransform, z, ops=None, *, radius=None):
    """Evaluate ``F^(q)(z)`` at a scalar ``z`` (``ops`` selects the precision).

    Numpy arrays are handled by the vectorised path.
    """
    if isinstance(z, np.ndarray):
        return _f_q_array(t, z)
    K = ops if ops is not None else mp_ops(0)
    phi, a1, a2, a3 = t.constants(K)
    if radius is None:
        radius = t.switch_radius if K.ctx.__class__.__name__ == "FPContext" \
            else _default_radius(t.phi, K.ctx.dps)
    w = z - phi
    if abs(w) <= radius:
        return _taylor(w, a1, a2, a3)
    return 1 / (a1 * w) - 1 / (t.model.psi(z, K) - t.q)


def _f_q_array(t: FqTransform, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    phi, a1, a2, a3 = t.phi, *t.taylor_coeffs
    w = z - phi
    near = np.abs(w) <= t.switch_radius
    out = np.empty_like(z)
    if np.any(~near):
        zz = z[~near]
        out[~near] = 1 / (a1 * w[~near]) - 1 / (_accel.psi_grid(t.model, zz) - t.q)
    if np.any(near):
        out[near] = _taylor(w[near], a1, a2, a3)
    return out


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------

@dataclass
class ScaleGrid:
    """Values of the selected quantities on an ``x`` grid."""

    x: np.ndarray
    q: float
    which: tuple
    values: dict
    backend: str
    config: dict
    flags: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def check(self, rtol: float = 1e-12) -> list:
        """Names of violated invariants (empty when all hold)."""
        bad = []
        pos = self.x > 0
        if "W" in self.values:
            w = self.values["W"][pos]
            if np.any(w < -rtol * np.max(np.abs(w), initial=1.0)):
                bad.append("W nonnegative")
            if np.any(np.diff(w) < -rtol * np.abs(w[1:])):
                bad.append("W nondecreasing")
        if "Z" in self.values:
            z = self.values["Z"]
            if np.any(z < 1 - rtol):
                bad.append("Z >= 1")
            if np.any(np.diff(z[self.x >= 0]) < -rtol * np.abs(z[self.x >= 0][1:])):
                bad.append("Z nondecreasing")
        return bad

    def records(self) -> list:
        out = []
        for i, xv in enumerate(self.x):
            rec = {"x": float(xv)}
            for k in self.which:
                rec[k] = float(self.values[k][i])
            out.append(rec)
        return out


# --------------------------------------------------------------------------
# eval_scale
# --------------------------------------------------------------------------

def _parse_which(which) -> tuple:
    if which is None:
        return ("W",)
    if isinstance(which, str):
        which = [w.strip() for w in which.split(",") if w.strip()]
    out = []
    for w in which:
        if w not in QUANTITIES:
            raise ConfigError(f"unknown quantity {w!r}; choose from {', '.join(QUANTITIES)}")
        if w not in out:
            out.append(w)
    if not out:
        raise ConfigError("no quantity selected")
    return tuple(out)


def _u_transforms(t: FqTransform, need: set) -> dict:
    """Transforms of u, u' and v built on F."""
    w0 = t.w0()
    tr = {}

    def F(z, K):
        return f_q(t, z, K)

    if "u" in need:
        tr["u"] = TransformFn(F, 0.0, True, True, lambda z: _f_q_array(t, z))
    if "uprime" in need:
        def Fp(z, K):
            phi, a1 = t.constants(K)[:2]
            return z * f_q(t, z, K) + w0 - 1 / a1
        tr["uprime"] = TransformFn(Fp, 0.0, True, True,
                                   lambda z: z * _f_q_array(t, z) + w0 - 1 / t.psi_prime_at_phi)
    if "v" in need:
        tr["v"] = TransformFn(lambda z, K: f_q(t, z, K) / z, 0.0, True, True,
                              lambda z: _f_q_array(t, z) / z)
    return tr


def _needs(which: tuple) -> set:
    need = set()
    for w in which:
        need.add({"W": "u", "Wprime": "uprime", "Z": "v", "u": "u", "uprime": "uprime",
                  "v": "v"}[w])
    return need


def _assemble(which, x, phi, a1, q, u, up, v) -> dict:
    """Combine inverted transforms into the requested quantities (doubles)."""
    e = np.exp(phi * x)
    out = {}
    for w in which:
        if w == "W":
            out[w] = e / a1 - u
        elif w == "Wprime":
            out[w] = phi * e / a1 - up
        elif w == "Z":
            out[w] = 1 + (q / phi) * np.expm1(phi * x) / a1 - q * v
        elif w == "u":
            out[w] = u
        elif w == "uprime":
            out[w] = up
        else:
            out[w] = v
    return out


def _fill_nonpositive(which, xs, phi, a1, q, w0, wp0) -> dict:
    """Quantities at ``x <= 0``: W vanishes on the negative half-line."""
    out = {}
    for w in which:
        vals = np.empty(xs.size)
        for i, xv in enumerate(xs):
            if xv < 0:
                W, Wp = 0.0, 0.0
            else:
                W, Wp = w0, wp0
            e = math.exp(phi * xv)
            if w == "W":
                vals[i] = W
            elif w == "Wprime":
                vals[i] = Wp
            elif w == "Z":
                vals[i] = 1.0
            elif w == "u":
                vals[i] = e / a1 - W if a1 else math.nan
            elif w == "uprime":
                vals[i] = phi * e / a1 - Wp if a1 else math.nan
            else:
                vals[i] = (math.expm1(phi * xv) / (phi * a1) if phi > 0 else xv / a1) \
                    if a1 else math.nan
        out[w] = vals
    return out


def _blend_small(which, xs, phi, a1, q, w0, wp0) -> dict:
    """Two-term boundary expansion used below :data:`X_MIN`."""
    W = w0 + wp0 * xs
    intW = w0 * xs + 0.5 * wp0 * xs ** 2
    e = np.exp(phi * xs)
    out = {}
    for w in which:
        if w == "W":
            out[w] = W
        elif w == "Wprime":
            out[w] = np.full(xs.size, wp0)
        elif w == "Z":
            out[w] = 1 + q * intW
        elif w == "u":
            out[w] = e / a1 - W
        elif w == "uprime":
            out[w] = phi * e / a1 - wp0
        else:
            out[w] = np.expm1(phi * xs) / (phi * a1) - intW
    return out


def eval_scale(model: LevyModel, q: float, x, which=("W",), backend: str = "euler",
               cfg=None) -> ScaleGrid:
    """Evaluate scale functions on a grid.

    Parameters
    ----------
    model, q
        The process and the killing rate ``q >= 0``.
    x : array_like
        Evaluation points; negative points are allowed (``W = 0`` there).
    which : iterable of str
        Any of ``W, Wprime, Z, u, uprime, v``.
    backend : str
        ``filon``, ``gaver_stehfest``, ``euler``, ``talbot`` or one of the
        exact backends ``rational`` and ``meromorphic``.
    cfg
        :class:`FilonConfig` for Filon, :class:`MpConfig` for the
        multi-precision methods, a dict of options for the exact backends.
    """
    if q < 0:
        raise DomainError("q must be nonnegative")
    which = _parse_which(which)
    backend = canonical_backend(backend)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if xs.ndim != 1:
        raise ConfigError("x must be one-dimensional")
    if not np.all(np.isfinite(xs)):
        raise ConfigError("x must be finite")

    phi = phi_q(model, q)
    if phi == 0.0:
        return _eval_direct(model, xs, which, backend, cfg)

    t = fq_transform(model, q)
    a1 = t.psi_prime_at_phi
    w0, wp0 = boundary_values(model, q)
    values = {w: np.empty(xs.size) for w in which}
    flags = {}

    nonpos = xs <= 0
    if np.any(nonpos):
        sub = _fill_nonpositive(which, xs[nonpos], phi, a1, q, w0, wp0)
        for w in which:
            values[w][nonpos] = sub[w]

    small = (~nonpos) & (xs < X_MIN) & math.isfinite(wp0) \
        & (backend in ("gaver_stehfest", "euler", "talbot"))
    if np.any(small):
        sub = _blend_small(which, xs[small], phi, a1, q, w0, wp0)
        for w in which:
            values[w][small] = sub[w]
        flags["blended"] = xs[small].tolist()

    main = (~nonpos) & (~small)
    xm = xs[main]
    need = _needs(which)
    if xm.size:
        if backend == "filon":
            cfg = cfg if cfg is not None else FilonConfig()
            if not isinstance(cfg, FilonConfig):
                raise ConfigError("the filon backend takes a FilonConfig")
            tr = _u_transforms(t, need)
            inv = {k: filon_at(g, xm, cfg) for k, g in tr.items()}
            snapshot = cfg.snapshot()
        elif backend in MP_METHODS:
            cfg = cfg if cfg is not None else MpConfig()
            if not isinstance(cfg, MpConfig):
                raise ConfigError(f"the {backend} backend takes an MpConfig")
            tr = _u_transforms(t, need)
            method = MP_METHODS[backend]
            inv = {k: np.array([method(g, float(xv), cfg) for xv in xm]) for k, g in tr.items()}
            snapshot = cfg.snapshot(backend)
        else:
            inv, snapshot = _exact_u(model, q, xm, need, backend, cfg or {})
        res = _assemble(which, xm, phi, a1, q, inv.get("u"), inv.get("uprime"), inv.get("v"))
        for w in which:
            values[w][main] = res[w]
    else:
        snapshot = {"method": backend}
    kinks = [float(v) for v in xs if v in set(model.atoms)]
    if kinks and "Wprime" in which:
        flags["one_sided_derivative"] = kinks
    return ScaleGrid(xs, float(q), which, values, backend, snapshot, flags)


def _exact_u(model, q, xm, need, backend, opts) -> tuple:
    from . import exact

    if backend == "rational":
        rs = exact.rational_roots(model, q)
        pf = exact.partial_fractions(model, rs)
        u = np.array([exact.u_hat_rational(rs, pf, xv) for xv in xm]) if "u" in need else None
        up = np.array([exact.u_hat_rational(rs, pf, xv, derivative=1) for xv in xm]) \
            if "uprime" in need else None
        v = np.array([exact.u_hat_rational(rs, pf, xv, derivative=-1) for xv in xm]) \
            if "v" in need else None
        snap = {"method": "rational", "roots": len(rs.roots)}
    else:
        J = int(opts.get("J", 1000))
        digits = int(opts.get("digits", 30))
        rs = exact.meromorphic_roots(model, q, J, digits=digits)
        u = up = v = None
        if "u" in need:
            u = np.array([float(exact.u_hat_meromorphic(rs, model, xv, J)[0]) for xv in xm])
        if "uprime" in need:
            up = np.array([float(exact.u_hat_meromorphic(rs, model, xv, J, derivative=1)[0])
                           for xv in xm])
        if "v" in need:
            v = np.array([float(exact.u_hat_meromorphic(rs, model, xv, J, derivative=-1)[0])
                          for xv in xm])
        snap = {"method": "meromorphic", "J": J, "digits": digits}
    return {"u": u, "uprime": up, "v": v}, snap


def _eval_direct(model, xs, which, backend, cfg) -> ScaleGrid:
    """``q = Phi(q) = 0``: invert ``1/psi`` along the Bromwich line."""
    if backend != "filon":
        raise RouteError(f"q = Phi(q) = 0: the potential-density route is unavailable and "
                         f"the {backend} backend cannot be used; use backend 'filon'")
    cfg = cfg if cfg is not None else FilonConfig()
    if not isinstance(cfg, FilonConfig):
        raise ConfigError("the filon backend takes a FilonConfig")
    w0, wp0 = boundary_values(model, 0.0)
    a1 = model.mean()
    a1 = a1 if math.isfinite(a1) and a1 > 0 else 0.0
    if a1 == 0.0 and any(w in ("u", "uprime", "v") for w in which):
        raise RouteError("the potential density needs psi'(0+) > 0 when Phi(0) = 0")
    values = {w: np.empty(xs.size) for w in which}
    nonpos = xs <= 0
    if np.any(nonpos):
        sub = _fill_nonpositive(which, xs[nonpos], 0.0, a1, 0.0, w0, wp0)
        for w in which:
            values[w][nonpos] = sub[w]
    xm = xs[~nonpos]
    if xm.size:
        psi_arr = lambda z: _accel.psi_grid(model, z)
        needW = any(w in ("W", "u") for w in which)
        needWp = any(w in ("Wprime", "uprime") for w in which)
        W = filon_at(TransformFn(None, 0.0, True, False, lambda z: 1 / psi_arr(z)), xm, cfg) \
            if needW else None
        Wp = filon_at(TransformFn(None, 0.0, True, False, lambda z: z / psi_arr(z) - w0),
                      xm, cfg) if needWp else None
        intW = filon_at(TransformFn(None, 0.0, True, False, lambda z: 1 / (z * psi_arr(z))),
                        xm, cfg) if "v" in which else None
        for w in which:
            if w == "W":
                values[w][~nonpos] = W
            elif w == "Wprime":
                values[w][~nonpos] = Wp
            elif w == "Z":
                values[w][~nonpos] = 1.0
            elif w == "u":
                values[w][~nonpos] = 1 / a1 - W
            elif w == "uprime":
                values[w][~nonpos] = -Wp
            else:
                values[w][~nonpos] = xm / a1 - intW
    return ScaleGrid(xs, 0.0, which, values, "filon", {**cfg.snapshot(), "route": "direct"})


def scale_W(model: LevyModel, q: float, x, backend: str = "euler", cfg=None):
    """Shortcut for ``W^(q)`` on ``x`` (scalar in, scalar out)."""
    scalar = np.ndim(x) == 0
    g = eval_scale(model, q, x, ("W",), backend, cfg)
    return float(g["W"][0]) if scalar else g["W"]


# --------------------------------------------------------------------------
# analytic series in q
# --------------------------------------------------------------------------

def _convolve(f: np.ndarray, g: np.ndarray, h: float) -> np.ndarray:
    """``(f*g)(x_i) = int_0^{x_i} f(x_i - y) g(y) dy`` by the trapezoid rule on a uniform grid."""
    n = f.size
    from scipy.signal import fftconvolve

    full = fftconvolve(f, g)[:n]
    corr = 0.5 * (f[0] * g + g[0] * f)
    return h * (full - corr)


def convolution_series_W(model: LevyModel, q, x, K: int = 30, *, h: float = 1e-4,
                         W0_fn=None, tol: float | None = None, return_bound: bool = False):
    """``W^(q)`` from ``sum_k q^k W^{*(k+1)}`` (valid for real or complex ``q``).

    The zero-scale function is taken from ``W0_fn(grid)`` or, by default,
    from Filon inversion of ``1/psi`` on a uniform grid of step ``h``.
    Convolutions use the trapezoid rule, with Richardson extrapolation
    against the half-resolution grid to reach Simpson-like accuracy.
    The bound ``x^K W(x)^{K+1}/K! |q|^K`` on the first omitted term is
    returned when ``return_bound`` is set; with ``tol`` it must stay below it.
    """
    if K < 0:
        raise ConfigError("K must be nonnegative")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0):
        raise DomainError("x must be nonnegative")
    xmax = float(np.max(xs))
    if xmax == 0:
        vals = np.full(xs.size, boundary_values(model, 0.0)[0], dtype=complex)
        return (vals, np.zeros(xs.size)) if return_bound else vals
    n = int(math.ceil(xmax / h))
    h = xmax / n
    grid = h * np.arange(n + 1)
    if W0_fn is None:
        W0_fn = _zero_scale_on_grid(model)
    Wg = np.asarray(W0_fn(grid), dtype=float)

    def series(Wgrid, step):
        total = Wgrid.astype(complex)
        term = Wgrid.astype(float)
        qk = complex(1.0)
        for _ in range(K):
            term = _convolve(term, Wgrid, step)
            qk = qk * q
            total = total + qk * term
        return total

    fine = series(Wg, h)
    if n % 2 == 0 and n >= 4:
        coarse = series(Wg[::2], 2 * h)
        grid_c = grid[::2]
        fine_at_c = fine[::2]
        extra = fine_at_c + (fine_at_c - coarse) / 3.0
        # Richardson on the coarse nodes, interpolated correction elsewhere
        corr = np.interp(grid, grid_c, (extra - fine_at_c).real) \
            + 1j * np.interp(grid, grid_c, (extra - fine_at_c).imag)
        fine = fine + corr
    vals = np.interp(xs, grid, fine.real) + 1j * np.interp(xs, grid, fine.imag)
    Wx = np.interp(xs, grid, Wg)
    bound = np.abs(q) ** (K + 1) * xs ** (K + 1) * Wx ** (K + 2) / math.factorial(K + 1)
    if tol is not None and np.any(bound > tol):
        raise TruncationError(f"series truncation bound {float(np.max(bound)):.3g} exceeds "
                              f"tolerance {tol:.3g}; increase K")
    if np.isrealobj(q) or (isinstance(q, complex) and q.imag == 0):
        vals = vals.real
    return (vals, bound) if return_bound else vals


def _zero_scale_on_grid(model: LevyModel):
    """``W = W^(0)`` on a uniform grid starting at zero."""
    phi0 = phi_q(model, 0.0)
    w0, _ = boundary_values(model, 0.0)

    def fn(grid):
        out = np.empty(grid.size)
        out[0] = w0
        xg = grid[1:]
        if phi0 > 0:
            g = eval_scale(model, 0.0, xg, ("W",), "filon", _grid_cfg(xg))
        else:
            g = eval_scale(model, 0.0, xg, ("W",), "filon", _grid_cfg(xg))
        out[1:] = g["W"]
        return out

    return fn


def _grid_cfg(xg: np.ndarray) -> FilonConfig:
    dx = float(xg[1] - xg[0]) if xg.size > 1 else float(xg[0])
    return FilonConfig(c=0.1, b=1e7, n=10, p=5, N=10_000, x0=float(xg[0]), delta_x=dx,
                       Nx=int(xg.size))


def spectral_gap(model: LevyModel, a: float, *, q_max: float = 1e3, K: int | None = None,
                 h: float | None = None, tol: float = 1e-10, W0_fn=None) -> float:
    """Smallest ``rho >= 0`` with ``W^(-rho)(a) = 0``.

    ``q -> W^(-q)(a)`` is evaluated through the analytic series on an
    increasing grid until it changes sign; the root is then refined by
    bisection.
    """
    if not a > 0:
        raise DomainError("a must be positive")
    h = h if h is not None else a / 4000
    n = int(math.ceil(a / h))
    h = a / n
    grid = h * np.arange(n + 1)
    Wg = np.asarray((W0_fn or _zero_scale_on_grid(model))(grid), dtype=float)
    Wa = float(Wg[-1])
    fixed = lambda g: Wg

    def value(qq):
        kk = K if K is not None else _terms_for(qq, a, Wa)
        return float(convolution_series_W(model, -qq, [a], kk, h=h, W0_fn=fixed)[0])

    lo, flo = 0.0, value(0.0)
    if flo <= 0:
        raise DomainError("W(a) must be positive")
    step = max(1e-3, 0.25 / max(a * Wa, 1e-300))
    hi = step
    while True:
        fhi = value(hi)
        if fhi <= 0:
            break
        lo, flo = hi, fhi
        if hi >= q_max:
            raise SearchLimitError(f"no sign change of W^(-q)(a) for q <= {q_max:g}")
        hi = min(q_max, hi * 1.5 + step)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = value(mid)
        if fm > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _terms_for(q: float, x: float, Wx: float) -> int:
    """Smallest ``K`` with ``(q x W)^K W / K!`` below 1e-16 relative."""
    r = abs(q) * x * Wx
    k = 1
    term = r
    while term > 1e-17 and k < 2000:
        k += 1
        term *= r / k
    return k + 2


# --------------------------------------------------------------------------
# exponential tilting
# --------------------------------------------------------------------------

def tilted_model(model: LevyModel, c: float):
    """Model with exponent ``psi_c(t) = psi(t + c) - psi(c)``."""
    from .model import Tilted

    return Tilted.of(model, c)


def tilt_scale(model: LevyModel, q: float, c: float, x, backend: str = "euler",
               cfg=None, *, check: bool = False, rtol: float = 1e-8):
    """``W^(q)(x)`` computed as ``e^{cx} W_c^{(q - psi(c))}(x)``.

    With ``check`` the result is compared with the untilted evaluation.
    """
    if c < 0:
        raise DomainError("tilts must be nonnegative")
    pc = float(model.psi_real(c)) if c > 0 else 0.0
    if not math.isfinite(pc):
        raise DomainError(f"psi({c}) is not finite")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if c == 0:
        out = eval_scale(model, q, xs, ("W",), backend, cfg)["W"]
    else:
        qc = q - pc
        if qc < 0:
            raise DomainError("the tilted killing rate q - psi(c) must be nonnegative")
        mc = tilted_model(model, c)
        out = np.exp(c * xs) * eval_scale(mc, qc, xs, ("W",), backend, cfg)["W"]
    if check:
        ref = eval_scale(model, q, xs, ("W",), backend, cfg)["W"]
        err = np.max(np.abs(out - ref) / np.maximum(np.abs(ref), 1e-300))
        if err > rtol:
            raise AssertionError(f"tilt identity violated: rel error {err:.3g}")
    return float(out[0]) if np.ndim(x) == 0 else out
