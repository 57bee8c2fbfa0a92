import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy import integrate

from levyscale.errors import ChecksumError, ConfigError
from levyscale.inversion import (CutoffWarning, FilonConfig, MpConfig, TransformFn,
                                 euler_coefficients, euler_inversion, filon_at, filon_cosine,
                                 filon_weights, gaver_stehfest, gs_coefficients, invert_filon,
                                 rule_of_thumb_M, talbot)

PAIRS = {
    "one": (lambda z: 1 / z, lambda x: 1.0),
    "ramp": (lambda z: 1 / (z * z), lambda x: x),
    "decay": (lambda z: 1 / (z + 1), lambda x: math.exp(-x)),
    "sine": (lambda z: 1 / (z * z + 1), math.sin),
}
TOL = {"filon": 1e-8, "gaver_stehfest": 1e-8, "euler": 1e-10, "talbot": 1e-10}


def tf(name):
    return TransformFn(PAIRS[name][0])


def run(method, g, x):
    if method == "filon":
        return float(filon_at(g, [x], FilonConfig(N=40_000))[0])
    cfg = MpConfig(20, 44) if method == "gaver_stehfest" else MpConfig(20, 32)
    return {"gaver_stehfest": gaver_stehfest, "euler": euler_inversion, "talbot": talbot}[method](g, x, cfg)


# ---------------------------------------------------------------- Filon rule

def test_filon_constant_integrates_cosine_exactly():
    assert abs(filon_cosine(lambda u: np.ones_like(u), 0.0, math.pi, 5, 1.0)) <= 1e-14


@pytest.mark.parametrize("N", [1, 2, 7])
def test_filon_exact_on_quadratics(N):
    assert filon_cosine(lambda u: u ** 2, 0.0, 1.0, N, 0.0) == pytest.approx(1 / 3, abs=1e-15)
    # degree two with oscillation
    for x in (0.3, 4.0, 25.0):
        G = lambda u: 1 - 2 * u + 3 * u ** 2
        with mpmath.workdps(30):
            ref = float(mpmath.quad(lambda u: (1 - 2 * u + 3 * u ** 2) * mpmath.cos(x * u),
                                    mpmath.linspace(0, 2, 20)))
        assert filon_cosine(G, 0.0, 2.0, N, x) == pytest.approx(ref, abs=1e-14)


def test_filon_smooth_integrand():
    ref = integrate.quad(lambda u: math.exp(-u) * math.cos(5 * u), 0, 10, epsabs=1e-14)[0]
    assert filon_cosine(lambda u: np.exp(-u), 0, 10, 10_000, 5.0) \
        == pytest.approx(ref, abs=1e-8)


def test_filon_weights_continuous_at_series_switch():
    t = np.array([0.2 - 1e-12, 0.2 + 1e-12])
    for w in filon_weights(t):
        assert abs(w[0] - w[1]) <= 1e-13


def test_invert_filon_ramp_on_grid():
    cfg = FilonConfig(b=1e7, N=40_000, n=10, p=5, Nx=100, delta_x=0.05, x0=0.05)
    x, f = invert_filon(tf("ramp"), cfg)
    assert np.max(np.abs(f / x - 1)) <= 1e-9


def test_filon_known_pair():
    v = filon_at(tf("decay"), [1.0])[0]
    assert v == pytest.approx(math.exp(-1), abs=1e-9)


def test_filon_fft_and_direct_paths_agree():
    g = tf("decay")
    cfg = FilonConfig(b=1e4, N=2000, n=4, p=3, Nx=50, delta_x=0.1, x0=0.1)
    with pytest.warns(CutoffWarning):
        x, f_grid = invert_filon(g, cfg)
        f_pts = filon_at(g, x[::-1].copy(), cfg)[::-1]
    assert np.max(np.abs(f_grid - f_pts)) <= 1e-12


def test_filon_linear_in_g():
    g1, g2 = tf("ramp"), tf("one")
    both = TransformFn(lambda z: 2 / (z * z) - 3 / z)
    cfg = FilonConfig(N=4000, Nx=20, delta_x=0.25, x0=0.25)
    _, f1 = invert_filon(g1, cfg)
    _, f2 = invert_filon(g2, cfg)
    _, f12 = invert_filon(both, cfg)
    assert np.max(np.abs(f12 - (2 * f1 - 3 * f2))) <= 1e-10


def test_filon_preconditions():
    with pytest.raises(ConfigError):
        filon_at(TransformFn(lambda z: 1 / z, real_symmetric=False), [1.0])
    with pytest.raises(ConfigError):
        filon_at(TransformFn(lambda z: 1 / (z - 1), analytic_halfplane=1.0), [1.0])
    with pytest.raises(ConfigError):
        FilonConfig(b=-1)


# ------------------------------------------------------- mp inverters

def test_gs_constant():
    assert gaver_stehfest(tf("one"), 1.0, MpConfig(10)) == pytest.approx(1.0, abs=1e-8)


def test_gs_known_pair():
    assert gaver_stehfest(tf("decay"), 1.0, MpConfig(20, 44)) == pytest.approx(math.exp(-1), abs=1e-9)


def test_euler_ramp():
    assert euler_inversion(tf("ramp"), 2.0, MpConfig(20)) == pytest.approx(2.0, abs=1e-10)


def test_talbot_known_pair():
    assert talbot(tf("decay"), 1.0, MpConfig(20)) == pytest.approx(0.3678794412, abs=1e-10)


@pytest.mark.parametrize("M", [10, 20, 40, 80])
def test_weight_checksums(M):
    gs = gs_coefficients(M, math.ceil(2.2 * M))
    with mpmath.workdps(2 * M + 40):
        s = mpmath.fsum(gs)
        assert abs(s) <= max(abs(a) for a in gs) * mpmath.mpf(10) ** (3 - math.ceil(2.2 * M))
    eu = euler_coefficients(M, max(M, 16))
    with mpmath.workdps(M + 40):
        s = mpmath.fsum((-1) ** n * a for n, a in enumerate(eu))
        assert abs(s) <= mpmath.mpf(10) ** (3 - max(M, 16))


def test_euler_weights_follow_the_binomial_recursion():
    M = 12
    a = [Fraction(1, 2)] + [Fraction(1)] * M + [None] * M
    a[2 * M] = Fraction(1, 2 ** M)
    for k in range(1, M):
        a[2 * M - k] = a[2 * M - k + 1] + Fraction(math.comb(M, k), 2 ** M)
    got = euler_coefficients(M, 40)
    for exact, approx in zip(a, got):
        assert abs(float(approx) - float(exact)) <= 1e-15


def test_corrupted_weights_fail_the_checksum(monkeypatch):
    import levyscale.inversion as inv
    good = inv.gs_coefficients(12, 30)
    monkeypatch.setattr(inv, "gs_coefficients", lambda M, d: (good[0] * 1.001,) + good[1:])
    with pytest.raises(ChecksumError):
        gaver_stehfest(tf("decay"), 1.0, MpConfig(12, 30))
    monkeypatch.undo()
    inv.euler_coefficients.cache_clear()
    good_e = inv.euler_coefficients(12, 30)
    monkeypatch.setattr(inv, "euler_coefficients", lambda M, d: good_e[:-1] + (good_e[-1] * 2,))
    with pytest.raises(ChecksumError):
        euler_inversion(tf("decay"), 1.0, MpConfig(12, 30))


def test_cutoff_warning_for_slow_tails():
    with pytest.warns(CutoffWarning):
        filon_at(TransformFn(lambda z: 1 / (z + 1)), [1.0], FilonConfig(b=1e3, N=100))


def test_mp_inverters_need_positive_x():
    for f in (gaver_stehfest, euler_inversion, talbot):
        with pytest.raises(ConfigError):
            f(tf("decay"), 0.0)


@pytest.mark.parametrize("name", ["one", "ramp", "decay", "sine"])
def test_pairwise_agreement(name):
    methods = ["filon", "gaver_stehfest", "euler", "talbot"]
    if name == "sine":
        # poles on the imaginary axis: outside the fixed-Talbot contour's
        # assumptions, and Gaver-Stehfest cannot resolve oscillations
        methods = ["filon", "euler"]
    for x in (0.5, 1.0, 2.0, 5.0):
        exact = PAIRS[name][1](x)
        vals = {}
        for m in methods:
            import warnings
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", CutoffWarning)
                vals[m] = run(m, tf(name), x)
            assert vals[m] == pytest.approx(exact, abs=TOL[m] * max(1, abs(exact)))
        for m1 in methods:
            for m2 in methods:
                assert abs(vals[m1] - vals[m2]) <= max(TOL[m1], TOL[m2]) * 2 * max(1, abs(exact))


@pytest.mark.parametrize("method", [euler_inversion, talbot])
def test_doubling_M_does_not_hurt(method):
    g = TransformFn(lambda z: 1 / (z + 1) ** 2 + 1 / (z * z))   # x e^{-x} + x
    for x in (0.5, 2.0, 5.0):
        exact = x * math.exp(-x) + x
        e1 = abs(method(g, x, MpConfig(10, 20)) - exact)
        e2 = abs(method(g, x, MpConfig(20, 40)) - exact)
        assert e2 <= 10 * e1 + 1e-15


def test_rule_of_thumb():
    assert rule_of_thumb_M("gaver_stehfest", 20) == 22
    assert rule_of_thumb_M("euler", 10) == 17
    assert MpConfig(20).digits_for("gaver_stehfest") == 44
    with pytest.raises(ConfigError):
        rule_of_thumb_M("filon", 5)
