"""Pure numpy versions of the hot exponent kernels.

The compiled module exposes the same ``psi_packed(kinds, params, z)``
working on a packed parameter table.  Components without a packed form
(meromorphic families, tilted models) are always evaluated through their
own numpy code and added on top.
"""

from __future__ import annotations

import math

import numpy as np

from .kernel import NP_OPS

# kind codes shared with the compiled kernels
GAUSSIAN, DRIFT, TEMPERED_STABLE, STABLE, ATOM, SHIFTED_EXP, RATIONAL_TERM = range(7)


def pack(model):
    """Split ``model`` into a packed table and a tuple of leftover components.

    Rows hold five parameters per component; the constant part of rational
    components is folded into a single ``offset``.
    """
    cache = model._cache
    if "packed" in cache:
        return cache["packed"]
    kinds, params, rest = [], [], []
    offset = 0j
    for c in model.components:
        k = c.kind
        if k == "gaussian":
            kinds.append(GAUSSIAN)
            params.append((0.5 * c.sigma ** 2, 0, 0, 0, 0))
        elif k == "drift":
            kinds.append(DRIFT)
            params.append((c.mu, 0, 0, 0, 0))
        elif k == "tempered_stable":
            kinds.append(TEMPERED_STABLE)
            params.append((c.c * math.gamma(-c.alpha), c.lam, c.alpha, c.lam ** c.alpha,
                           c.alpha * c.lam ** (c.alpha - 1)))
        elif k == "stable":
            kinds.append(STABLE)
            params.append((c.c * math.gamma(-c.alpha), c.alpha, 0, 0, 0))
        elif k == "atom":
            kinds.append(ATOM)
            params.append((c.c, c.a, 0, 0, 0))
        elif k == "shifted_exponential":
            kinds.append(SHIFTED_EXP)
            params.append((c.c, c.a, 0, 0, 0))
        elif k == "rational":
            for t in c.terms:
                a = t.a * math.factorial(t.m - 1)
                kinds.append(RATIONAL_TERM)
                params.append((a.real, a.imag, t.rho.real, t.rho.imag, t.m))
                offset -= a / t.rho ** t.m
        else:
            rest.append(c)
    out = (np.asarray(kinds, dtype=np.int64),
           np.asarray(params, dtype=np.float64).reshape(-1, 5), tuple(rest), complex(offset))
    cache["packed"] = out
    return out


def psi_packed(kinds, params, z):
    """Sum of the packed components at the points ``z`` (complex array)."""
    z = np.asarray(z, dtype=np.complex128)
    out = np.zeros_like(z)
    for k, p in zip(kinds, params):
        if k == GAUSSIAN:
            out += p[0] * z * z
        elif k == DRIFT:
            out += p[0] * z
        elif k == TEMPERED_STABLE:
            out += p[0] * ((z + p[1]) ** p[2] - p[3] - p[4] * z)
        elif k == STABLE:
            out += p[0] * z ** p[1]
        elif k == ATOM:
            out += p[0] * np.expm1(-p[1] * z)
        elif k == SHIFTED_EXP:
            out += p[0] * (np.exp(-p[1] * z) / (z + 1) - 1)
        elif k == RATIONAL_TERM:
            out += complex(p[0], p[1]) * (z + complex(p[2], p[3])) ** (-int(p[4]))
    return out


def psi_grid(model, z, impl=None):
    """``psi(z)`` for a complex array, packed part through ``impl``."""
    impl = impl if impl is not None else _this()
    z = np.asarray(z, dtype=np.complex128)
    kinds, params, rest, offset = pack(model)
    shape = z.shape
    zf = np.ascontiguousarray(z.ravel())
    out = np.asarray(impl.psi_packed(kinds, params, zf))
    if offset:
        out = out + offset
    for c in rest:
        out = out + c.value(zf, NP_OPS)
    return out.reshape(shape)


def fq_grid(model, q, phi, a1, z, impl=None):
    z = np.asarray(z, dtype=np.complex128)
    return 1 / (a1 * (z - phi)) - 1 / (psi_grid(model, z, impl) - q)


def _this():
    import sys

    return sys.modules[__name__]
