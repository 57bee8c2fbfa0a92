import warnings

import mpmath
import numpy as np
import pytest

from levyscale.errors import ConfigError, DomainError
from levyscale.exact import (MultiplicityWarning, RootSet, meromorphic_roots, partial_fractions,
                             rational_roots, u_hat_meromorphic, u_hat_rational)
from levyscale.inversion import MpConfig
from levyscale.kernel import mp_ops
from levyscale.model import model_from_dict, phi_q, psi
from levyscale.scale import eval_scale, fq_transform

from conftest import GRID, brownian


@pytest.fixture(scope="module")
def rs(rational):
    return rational_roots(rational, 0.5)


def beta_process(sigma=0.0):
    comps = [{"type": "drift", "mu": 2.0},
             {"type": "beta", "c": 1.0, "alpha": 1.0, "beta": 1.5, "lambda": 1.5}]
    if sigma:
        comps.insert(0, {"type": "gaussian", "sigma": sigma})
    return model_from_dict({"components": comps})


# ---------------------------------------------------------------- rational

def test_rational_roots_known_values(rs):
    assert float(rs.phi) == pytest.approx(0.37519, abs=1e-5)
    z = rs.zetas()
    assert z.size == 4
    assert z[0].real == pytest.approx(0.64448, abs=1e-5) and z[0].imag == 0
    cpx = z[np.abs(z.imag) > 0]
    assert np.allclose(sorted(cpx.imag), [-4.0518, 4.0518], atol=1e-4)
    assert np.allclose(cpx.real, 0.97265, atol=1e-5)
    assert z[-1].real == pytest.approx(64.7854, abs=1e-4)


def test_rational_residuals_and_half_plane(rational, rs):
    K = mp_ops(rs.digits)
    for zeta, _ in rs.roots:
        assert abs(complex(rational.psi(-zeta, K) - K.ctx.mpf(0.5))) <= 1e-10
        assert complex(zeta).real > 0


def test_rational_conjugate_closure(rs):
    z = rs.zetas()
    zc = np.conj(z)
    for v in zc:
        assert np.min(np.abs(z - v)) <= 1e-10


def test_brownian_quadratic():
    bm = brownian(1.0, 1.0)         # psi(z) = z^2/2 + z
    q = 0.75
    r = rational_roots(bm, q)
    disc = np.sqrt(1 + 2 * q)
    assert float(r.phi) == pytest.approx(-1 + disc, rel=1e-14)
    assert r.zetas() == pytest.approx([1 + disc], rel=1e-14)


def test_root_count_without_gaussian():
    m = model_from_dict({"components": [
        {"type": "drift", "mu": 2.0},
        {"type": "rational", "terms": [{"a": 1.0, "rho": 1.0, "m": 1},
                                       {"a": 2.0, "rho": 3.0, "m": 1}]}]})
    r = rational_roots(m, 0.5)
    assert len(r.roots) == 2          # degree M + 1 = 3, one of them is Phi


def test_partial_fractions_reconstruct(rational, rs):
    pf = partial_fractions(rational, rs)
    K = mp_ops(rs.digits)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-3, 3, 20) + 1j * rng.uniform(-6, 6, 20)
    for z in pts:
        zz = K.ctx.mpc(z.real, z.imag)
        direct = 1 / (rational.psi(zz, K) - K.ctx.mpf(0.5))
        rebuilt = pf.evaluate(zz, rs.phi)
        assert abs(complex(rebuilt - direct)) <= 1e-10 * abs(complex(direct))


def test_simple_roots_coefficients(rational, rs):
    pf = partial_fractions(rational, rs)
    K = mp_ops(rs.digits)
    for zeta, k, c in pf.terms:
        assert k == 1
        assert abs(complex(c - 1 / rational.psi_derivative(-zeta, 1, K))) <= 1e-20


def test_u_hat_rational_is_real(rational, rs):
    pf = partial_fractions(rational, rs)
    for x in (0.0, 0.3, 2.0, 10.0):
        v = u_hat_rational(rs, pf, x)
        assert isinstance(v, float) and np.isfinite(v)
    with pytest.raises(DomainError):
        u_hat_rational(rs, pf, -1.0)


def test_rational_W_matches_euler(rational):
    x = np.linspace(0.05, 5, 25)
    a = eval_scale(rational, 0.5, x, "W", "rational")["W"]
    b = eval_scale(rational, 0.5, x, "W", "euler", MpConfig(40))["W"]
    assert np.max(np.abs(a / b - 1)) <= 1e-12


def test_rational_W_at_zero():
    bv = model_from_dict({"components": [
        {"type": "drift", "mu": 2.0},
        {"type": "rational", "terms": [{"a": 1.0, "rho": 1.0, "m": 1}]}]})
    assert eval_scale(bv, 0.5, [1e-12], "W", "rational")["W"][0] == pytest.approx(0.5, rel=1e-9)
    uv = model_from_dict({"components": [
        {"type": "gaussian", "sigma": 0.25}, {"type": "drift", "mu": 2.0},
        {"type": "rational", "terms": [{"a": 1.0, "rho": 1.0, "m": 1}]}]})
    assert abs(eval_scale(uv, 0.5, [1e-12], "W", "rational")["W"][0]) <= 1e-9


def test_repeated_roots_warn():
    m = model_from_dict({"components": [{"type": "gaussian", "sigma": 1.0}]})
    with warnings.catch_warnings():
        warnings.simplefilter("error", MultiplicityWarning)
        rational_roots(m, 0.5)      # two simple roots
    with pytest.warns(MultiplicityWarning):
        rational_roots(m, 0.0)      # z^2/2 = 0 has a double root


def test_rootset_json_round_trip(rs):
    back = RootSet.from_json(rs.to_json())
    assert np.allclose(back.zetas(), rs.zetas(), rtol=1e-25, atol=0)
    assert back.source == "rational" and float(back.phi) == float(rs.phi)


def test_rational_needs_rational_parts(theta):
    with pytest.raises(ConfigError):
        rational_roots(theta, 0.5)


# ---------------------------------------------------------------- meromorphic

@pytest.fixture(scope="module")
def mrs(theta):
    return meromorphic_roots(theta, 0.5, 1000)


def test_theta_interlacing(mrs):
    z = np.array([float(r) for r, _ in mrs.roots])
    j = np.arange(1, z.size + 1)
    assert np.all(z > 0.5 * (1 + (j - 1) ** 2) - 1e-12 * (j > 1))
    assert np.all(z < 0.5 * (1 + j ** 2))
    assert mrs.check_interlacing()


def test_theta_residuals(theta, mrs):
    K = mp_ops(mrs.digits)
    for zeta, _ in mrs.roots[:50] + mrs.roots[-5:]:
        f = theta.psi(-zeta, K) - K.ctx.mpf(0.5)
        scale = abs(theta.psi_derivative(-zeta, 1, K)) * max(1, abs(zeta))
        assert abs(complex(f)) <= 1e-13 * float(scale)


def test_zero_root_when_mean_nonpositive():
    m = model_from_dict({"components": [
        {"type": "drift", "mu": 0.5},       # jumps pull the mean below zero
        {"type": "theta", "c": 1.0, "alpha": 1.0, "beta": 0.5, "lambda": 1.5}]})
    assert m.mean() < 0
    r = meromorphic_roots(m, 0.0, 20)
    assert r.roots[0][0] == 0 and float(r.phi) > 0


def test_beta_process_spacing():
    # the gaps tend to beta, but slowly: roughly like j^(-3/2)
    r = meromorphic_roots(beta_process(), 0.5, 420)
    z = np.array([float(v) for v, _ in r.roots])
    err = np.abs(np.diff(z) - 1.5)
    assert err[199] <= 2e-4
    assert err[99] / err[199] > 2 and err[199] / err[399] > 2
    assert np.all(np.diff(err[20:]) < 0)


@pytest.mark.parametrize("x", [0.0, 0.05, 0.5, 3.0, 20.0])
def test_u_hat_bounded_and_decreasing(theta, mrs, x):
    bound = 1 / fq_transform(theta, 0.5).psi_prime_at_phi
    v, _ = u_hat_meromorphic(mrs, theta, max(x, 1e-3))
    v2, _ = u_hat_meromorphic(mrs, theta, max(x, 1e-3) + 0.01)
    assert 0 < float(v2) < float(v) <= bound


def test_truncation_stable_in_J(theta, mrs):
    big = meromorphic_roots(theta, 0.5, 1100)
    for x in (0.05, 0.2, 1.0, 5.0):
        a, est = u_hat_meromorphic(mrs, theta, x)
        b, _ = u_hat_meromorphic(big, theta, x)
        assert abs(float(a / b) - 1) <= 1e-12
        assert float(est) <= 1e-10


def test_meromorphic_W_matches_talbot(theta):
    a = eval_scale(theta, 0.5, GRID, "W", "meromorphic", {"J": 1000, "digits": 30})["W"]
    b = eval_scale(theta, 0.5, GRID, "W", "talbot", MpConfig(40))["W"]
    assert np.max(np.abs(a / b - 1)) <= 1e-13


def test_meromorphic_needs_theta_or_beta(rational):
    with pytest.raises(ConfigError):
        meromorphic_roots(rational, 0.5, 10)
    with pytest.raises(ConfigError):
        meromorphic_roots(beta_process(), 0.5, 0)
