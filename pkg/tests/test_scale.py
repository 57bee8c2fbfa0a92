import json
import math
from importlib import resources

import numpy as np
import pytest
from scipy import integrate

from levyscale.errors import ConfigError, DomainError, RouteError
from levyscale.inversion import CutoffWarning, FilonConfig, MpConfig
from levyscale.kernel import mittag_leffler, mp_ops
from levyscale.model import boundary_values, phi_q, psi
from levyscale.scale import (convolution_series_W, eval_scale, f_q, fq_transform,
                             scale_W, spectral_gap, tilt_scale, tilted_model)

from conftest import GRID, brownian, stable

EXT = MpConfig(20, 32)


def fixture(name):
    return json.loads(resources.files("levyscale").joinpath("data", f"{name}.json").read_text())


def ml_scale(alpha, q, x):
    """W^(q) for psi = t^alpha: x^{alpha-1} E_{alpha,alpha}(q x^alpha)."""
    return x ** (alpha - 1) * mittag_leffler(alpha, alpha, q * x ** alpha)


# ---------------------------------------------------------------- F^(q)

def test_fq_at_phi_is_the_taylor_constant():
    t = fq_transform(stable(1.5), 1.0)
    assert t.phi == pytest.approx(1.0, rel=1e-14)
    assert complex(f_q(t, 1.0)).real == pytest.approx(0.75 / (2 * 2.25), rel=1e-12)


def test_fq_continuous_at_switch_radius(theta):
    t = fq_transform(theta, 0.5)
    K = mp_ops(32)
    phi = t.phi
    r = 10.0 ** (-8) * max(1.0, phi)
    for direction in (1, 1j, -1, -1j):
        z = K.ctx.mpf(phi) + K.ctx.mpf(r) * direction
        taylor = f_q(t, z, K, radius=2 * r)
        direct = f_q(t, z, K, radius=r / 2)
        assert abs(complex(taylor - direct)) <= 1e-10 * abs(complex(direct))


def test_fq_vector_and_scalar_agree(rational):
    t = fq_transform(rational, 0.5)
    z = np.array([0.1 + 2j, 1.0, 3 - 1j, t.phi + 1e-6])
    vec = f_q(t, z)
    scal = [complex(f_q(t, complex(v))) for v in z]
    assert np.allclose(vec, scal, rtol=1e-9, atol=0)


def test_fq_needs_positive_phi():
    with pytest.raises(RouteError):
        fq_transform(brownian(1.0, 1.0), 0.0)


# ---------------------------------------------------------------- eval_scale

def test_stable_zero_scale_direct_route():
    assert scale_W(stable(1.5), 0.0, 1.0, "filon") == pytest.approx(1 / math.gamma(1.5), abs=1e-8)


def test_mp_backends_refuse_q_phi_zero():
    with pytest.raises(RouteError):
        eval_scale(stable(1.5), 0.0, [1.0], "W", "euler")


def test_negative_x_gives_zero(theta, rational):
    for m in (theta, rational):
        g = eval_scale(m, 0.5, [-1.0, -0.1], ("W", "Wprime", "Z"), "euler", EXT)
        assert np.all(g["W"] == 0) and np.all(g["Wprime"] == 0) and np.all(g["Z"] == 1)


def test_talbot_reproduces_theta_reference(theta):
    ref = fixture("table1")
    g = eval_scale(theta, 0.5, GRID, "W", "talbot", EXT)
    assert np.max(np.abs(g["W"] / np.array(ref["reference"]) - 1)) <= 1e-11


def test_talbot_and_euler_agree_on_theta(theta):
    a = eval_scale(theta, 0.5, GRID, "W", "talbot", EXT)["W"]
    b = eval_scale(theta, 0.5, GRID, "W", "euler", EXT)["W"]
    assert np.max(np.abs(a - b) / np.abs(b)) <= 1e-10


def test_stable_killed_matches_mittag_leffler():
    x = np.array([0.1, 0.7, 1.5, 3.0])
    g = eval_scale(stable(1.5), 0.5, x, ("W",), "euler", EXT)
    ref = [ml_scale(1.5, 0.5, v) for v in x]
    assert np.allclose(g["W"], ref, rtol=1e-12, atol=0)


def test_unknown_backend_and_quantity(theta):
    with pytest.raises(ConfigError):
        eval_scale(theta, 0.5, [1.0], "W", "simpson")
    with pytest.raises(ConfigError):
        eval_scale(theta, 0.5, [1.0], "Q", "euler")
    with pytest.raises(ConfigError):
        eval_scale(theta, 0.5, [1.0], "W", "filon", MpConfig())
    with pytest.raises(DomainError):
        eval_scale(theta, -0.5, [1.0], "W", "euler")


def test_laplace_round_trip(theta, rational):
    backend = "filon"
    for m in (theta, rational):
        q = 0.5
        phi = phi_q(m, q)
        a1 = psi(m, phi + 1e-7).real - psi(m, phi - 1e-7).real
        a1 /= 2e-7
        T = 40 / phi
        # W bends sharply near the origin, so the first unit gets its own fine panel
        near, far = np.linspace(0, 1, 4001), np.linspace(1, T, 8001)
        xs = np.concatenate([near, far[1:]])
        W = np.concatenate([eval_scale(m, q, near, "W", backend)["W"],
                            eval_scale(m, q, far, "W", backend)["W"][1:]])
        k = near.size
        for beta in (phi + 1, phi + 2, phi + 4):
            f = np.exp(-beta * xs) * W
            head = integrate.simpson(f[:k], x=xs[:k]) + integrate.simpson(f[k - 1:], x=xs[k - 1:])
            tail = math.exp(-(beta - phi) * T) / ((beta - phi) * a1)
            expected = 1 / (psi(m, beta).real - q)
            assert head + tail == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("which", ["theta", "rational"])
def test_asymptotics(which, theta, rational):
    m = {"theta": theta, "rational": rational}[which]
    q = 0.5
    phi = phi_q(m, q)
    x = 40 / phi
    g = eval_scale(m, q, [x], ("W", "Z"), "euler", EXT)
    a1 = fq_transform(m, q).psi_prime_at_phi
    assert abs(math.exp(-phi * x) * g["W"][0] * a1 - 1) <= 1e-4
    assert abs(g["Z"][0] / g["W"][0] - q / phi) <= 1e-3 * q / phi


def test_monotone_outputs(theta, rational, set1):
    for m in (theta, rational, set1):
        g = eval_scale(m, 0.5, GRID, ("W", "Z"), "talbot", EXT)
        assert np.all(np.diff(g["W"]) > 0)
        assert np.all(np.diff(g["Z"]) >= 0) and np.all(g["Z"] >= 1)
        assert g.check() == []


@pytest.mark.parametrize("name", ["theta", "rational"])
def test_boundary_extrapolation(name, theta, rational):
    m = {"theta": theta, "rational": rational}[name]
    step = 1e-4
    xs = np.array([step, 2 * step])
    g = eval_scale(m, 0.5, xs, ("W", "Wprime"), "euler", EXT)
    w0, wp0 = boundary_values(m, 0.5)
    w_ext = 2 * g["W"][0] - g["W"][1]
    assert abs(w_ext - w0) <= 0.02 * max(abs(w0), g["W"][0])
    wp_ext = 2 * g["Wprime"][0] - g["Wprime"][1]
    assert wp_ext == pytest.approx(wp0, rel=0.02)


def test_bounded_variation_starts_at_one_over_delta(theta0):
    g = eval_scale(theta0, 0.5, [1e-4, 2e-4], ("W",), "euler", EXT)
    w0, _ = boundary_values(theta0, 0.5)
    assert 2 * g["W"][0] - g["W"][1] == pytest.approx(w0, rel=0.02)


def test_atom_kink_flagged(set4):
    # the atom keeps the transform from decaying fast, so the cutoff complains
    with pytest.warns(CutoffWarning):
        g = eval_scale(set4, 0.5, [0.5, 1.0, 1.5], ("W", "Wprime"), "filon")
    assert g.flags["one_sided_derivative"] == [1.0]


def test_exact_backends_agree_with_inversion(rational, theta):
    x = np.array([0.05, 1.0, 4.0])
    r = eval_scale(rational, 0.5, x, ("W", "Wprime", "Z"), "rational")
    e = eval_scale(rational, 0.5, x, ("W", "Wprime", "Z"), "euler", MpConfig(40))
    for k in ("W", "Wprime", "Z"):
        assert np.allclose(r[k], e[k], rtol=1e-12, atol=0)
    mero = eval_scale(theta, 0.5, x, ("W", "Z"), "meromorphic", {"J": 1000, "digits": 30})
    t40 = eval_scale(theta, 0.5, x, ("W", "Z"), "talbot", MpConfig(40))
    for k in ("W", "Z"):
        assert np.allclose(mero[k], t40[k], rtol=1e-13, atol=0)


# ---------------------------------------------------------------- series in q

def test_series_with_zero_q_is_W():
    m = stable(1.5)
    x = np.array([0.5, 1.0])
    W0 = lambda grid: grid ** 0.5 / math.gamma(1.5)
    v = convolution_series_W(m, 0.0, x, 5, W0_fn=W0)
    assert np.allclose(v, W0(x), rtol=1e-15)


def test_series_reproduces_mittag_leffler():
    m = stable(1.5)
    v = convolution_series_W(m, 0.5, [1.0], 30, h=1e-4)
    assert v[0] == pytest.approx(ml_scale(1.5, 0.5, 1.0), rel=1e-6)


def test_series_with_complex_q():
    m = stable(1.5)
    W0 = lambda grid: grid ** 0.5 / math.gamma(1.5)
    v = convolution_series_W(m, 1j, [1.0], 30, h=1e-4, W0_fn=W0)
    ref = complex(mittag_leffler(1.5, 1.5, 1j))
    assert abs(v[0] - ref) <= 1e-6 * abs(ref)


def test_series_bound_reported():
    W0 = lambda grid: grid ** 0.5 / math.gamma(1.5)
    _, bound = convolution_series_W(stable(1.5), 0.5, [1.0], 3, W0_fn=W0, return_bound=True)
    assert bound[0] > 0
    from levyscale.errors import TruncationError
    with pytest.raises(TruncationError):
        convolution_series_W(stable(1.5), 0.5, [1.0], 3, W0_fn=W0, tol=1e-12)


# ---------------------------------------------------------------- spectral gap

def test_brownian_spectral_gap():
    bm = brownian(math.sqrt(2.0))
    W0 = lambda grid: grid          # psi = t^2
    rho = spectral_gap(bm, math.pi, W0_fn=W0)
    assert rho == pytest.approx(1.0, abs=1e-4)
    rho2 = spectral_gap(bm, 2 * math.pi, W0_fn=W0)
    assert rho2 == pytest.approx(rho / 4, abs=1e-4)


def test_spectral_gap_from_numerical_zero_scale():
    rho = spectral_gap(brownian(math.sqrt(2.0)), math.pi, h=math.pi / 2000)
    assert rho == pytest.approx(1.0, abs=1e-4)


def test_negative_q_scale_positive_below_gap():
    bm = brownian(math.sqrt(2.0))
    W0 = lambda grid: grid
    for q in (0.2, 0.6, 0.95):
        xs = np.linspace(0.1, math.pi - 0.1, 7)
        v = convolution_series_W(bm, -q, xs, 40, W0_fn=W0, h=1e-3)
        assert np.all(v > 0)


# ---------------------------------------------------------------- tilting

def test_tilt_zero_is_identity(theta):
    x = np.array([0.5, 2.0])
    a = tilt_scale(theta, 0.5, 0.0, x, "euler", EXT)
    b = eval_scale(theta, 0.5, x, "W", "euler", EXT)["W"]
    assert np.array_equal(a, b)


def test_tempered_stable_from_tilting():
    c, q, alpha = 0.7, 0.3, 1.5
    mc = tilted_model(stable(alpha), c)
    x = np.array([0.2, 1.0, 2.5])
    g = eval_scale(mc, q, x, "W", "euler", EXT)["W"]
    ref = [math.exp(-c * v) * ml_scale(alpha, q + c ** alpha, v) for v in x]
    assert np.allclose(g, ref, rtol=1e-10, atol=0)


def test_theta_tilted_matches_direct(theta):
    x = np.array([0.05, 1.0, 3.0, 5.0])
    v = tilt_scale(theta, 0.5, 0.1, x, "euler", EXT, check=True, rtol=1e-9)
    assert np.all(v > 0)


def test_tilt_domain(theta):
    with pytest.raises(DomainError):
        tilt_scale(theta, 0.5, -0.1, 1.0)
    with pytest.raises(DomainError):
        tilt_scale(theta, 0.0, 1.0, 1.0)   # q - psi(c) < 0
