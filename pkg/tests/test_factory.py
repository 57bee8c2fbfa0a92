import math

import numpy as np
import pytest
from scipy import integrate, special

from levyscale.errors import ConfigError, DomainError, PreconditionError
from levyscale.factory import (ScaleClosedForm, conditioned_parent_form, conditioned_parent_scale,
                               conjugate_pair, drift_ladder, laplace_transform, monotone_spot_check,
                               parent_from_ladder, shifted_scale, stable_ladder, sum_stable_ladder,
                               t_transform_scale, t_transform_stable, tempered_stable_ladder,
                               tilt_conjugates)
from levyscale.inversion import CutoffWarning
from levyscale.kernel import mittag_leffler
from levyscale.model import phi_q
from levyscale.scale import eval_scale

from conftest import brownian, stable

THETAS = (1.0, 2.0, 4.0)
XS = np.array([0.01, 0.3, 1.0, 2.5, 5.0])


def assert_laplace(form, thetas=THETAS, rtol=1e-6):
    for th, lt, ref, err in form.laplace_check(thetas):
        assert err <= rtol, (th, lt, ref)


# ---------------------------------------------------------------- conjugate pairs

def test_stable_pair_formulas():
    b, beta = 1.7, 0.35
    W, Ws = conjugate_pair(stable_ladder(b, beta))
    for x in XS:
        assert W(x) == pytest.approx(x ** beta / (b * math.gamma(1 + beta)), rel=1e-12)
        assert Ws(x) == pytest.approx(b * x ** (1 - beta) / math.gamma(2 - beta), rel=1e-12)
    assert_laplace(W)
    assert_laplace(Ws)


def test_sum_stable_conjugate():
    a, b, alpha, beta = 0.8, 1.3, 0.3, 0.7
    W, Ws = conjugate_pair(sum_stable_ladder(a, b, alpha, beta))
    for x in XS:
        ref = a * x ** (1 - beta + alpha) / math.gamma(2 - beta + alpha) \
            + b * x ** (1 - beta) / math.gamma(2 - beta)
        assert Ws(x) == pytest.approx(ref, rel=1e-12)
    assert_laplace(W)
    assert_laplace(Ws)


@pytest.mark.parametrize("spec", [stable_ladder(1.0, 0.4), sum_stable_ladder(0.5, 1.0, 0.2, 0.6)],
                         ids=["stable", "sum_stable"])
def test_convolution_identity(spec):
    # W * W*(dx) = dx, i.e. theta^2 LT(W) LT(W*) = 1/theta
    W, Ws = conjugate_pair(spec)
    for th in THETAS:
        lhs = th ** 2 * laplace_transform(W, th) * laplace_transform(Ws, th)
        assert lhs == pytest.approx(1 / th, rel=1e-6)


def test_conjugate_needs_data():
    with pytest.raises(PreconditionError):
        conjugate_pair(tempered_stable_ladder(0.0, 1.0, 0.5, 1.0))


# ---------------------------------------------------------------- tilting

def _tilt_by_quadrature(W, beta, x):
    return math.exp(-beta * x) * W(x) + beta * integrate.quad(
        lambda z: math.exp(-beta * z) * W(z), 0, x, epsabs=0, epsrel=1e-13, limit=200)[0]


@pytest.mark.parametrize("spec", [stable_ladder(1.2, 0.45), sum_stable_ladder(0.5, 1.0, 0.2, 0.6)],
                         ids=["stable", "sum_stable"])
def test_tilt_two_forms_agree(spec):
    W, _ = conjugate_pair(spec)
    Wb, _ = tilt_conjugates(spec, 0.8)
    for x in np.linspace(0.05, 5, 9):
        assert Wb(x) == pytest.approx(_tilt_by_quadrature(W, 0.8, x), rel=1e-10)


def test_tilt_small_beta_recovers_pair():
    spec = stable_ladder(1.0, 0.4)
    W, Ws = conjugate_pair(spec)
    Wb, Wsb = tilt_conjugates(spec, 1e-10)
    for x in XS:
        assert Wb(x) == pytest.approx(W(x), rel=1e-8)
        assert Wsb(x) == pytest.approx(Ws(x), rel=1e-8)


def test_tilted_sum_stable_formula():
    a, b, alpha, beta, m = 0.5, 1.0, 0.2, 0.6, 0.7
    Wb, _ = tilt_conjugates(sum_stable_ladder(a, b, alpha, beta), m)
    f = lambda t: math.exp(-m * t) * t ** (beta - 1) * mittag_leffler(alpha, beta, -a * t ** alpha / b)
    for x in (0.2, 1.0, 3.0):
        ref = integrate.quad(f, 0, x, epsabs=0, epsrel=1e-12, limit=200)[0] / b
        assert Wb(x) == pytest.approx(ref, rel=1e-9)
    assert_laplace(Wb, (m + 1, m + 2, m + 4))


def test_tilt_domain():
    with pytest.raises(DomainError):
        tilt_conjugates(stable_ladder(1.0, 0.4), 0.0)


# ---------------------------------------------------------------- conditioned parent

def test_conditioned_parent_is_shifted_tilt():
    spec = sum_stable_ladder(0.5, 1.0, 0.2, 0.6)
    beta = 0.6
    Wb, _ = tilt_conjugates(spec, beta)
    form = conditioned_parent_form(spec, beta)
    for x in XS:
        assert form(x) == pytest.approx(math.exp(beta * x) * Wb(x), rel=1e-12)
    assert_laplace(form, (beta + 1, beta + 2, beta + 4))


def test_conditioned_parent_at_zero():
    # a finite-mass ladder has delta* = 1/(kappa + mass); the stable one has none
    assert conditioned_parent_scale(stable_ladder(1.0, 0.4), 0.5, 0.0) == 0.0
    assert conditioned_parent_scale(stable_ladder(1.0, 0.4), 0.5, [0.0, 1.0])[1] > 0


def test_conditioned_parent_needs_zero_killing():
    with pytest.raises(PreconditionError):
        conditioned_parent_form(tempered_stable_ladder(0.5, 1.0, 0.5, 1.0), 0.5)


# ---------------------------------------------------------------- parents

def test_drift_ladder_gives_brownian():
    p = parent_from_ladder(drift_ladder(0.8))
    assert p.sigma == pytest.approx(math.sqrt(1.6))
    assert p.psi(2.0) == pytest.approx(0.8 * 4)
    assert p.model.psi_real(2.0) == pytest.approx(0.8 * 4, rel=1e-14)
    assert p.scale(1.5) == pytest.approx(1.5 / 0.8)
    assert_laplace(p.scale)


def test_drift_ladder_with_upward_killing():
    p = parent_from_ladder(drift_ladder(0.8), phi_killrate=0.5)
    assert_laplace(p.scale)


def test_tempered_stable_parent():
    spec = tempered_stable_ladder(0.0, 1.0, 0.6, 0.8)
    p = parent_from_ladder(spec)
    t = np.array([0.5, 1.0, 3.0])
    assert np.allclose([p.model.psi_real(v) for v in t], [v * spec.phi(v) for v in t], rtol=1e-12)
    assert_laplace(p.scale)
    x = np.array([0.5, 1.0, 2.0])
    num = eval_scale(p.model, 0.0, x, "W", "filon")["W"]
    assert np.allclose(p.scale(x), num, rtol=1e-7)


def test_tempered_stable_parent_killed():
    p = parent_from_ladder(tempered_stable_ladder(0.7, 1.0, 0.6, 0.8))
    assert_laplace(p.scale, (0.5, 1.0, 2.0))


def test_bounded_variation_parent_drift():
    spec = tempered_stable_ladder(0.3, 1.0, -0.5, 2.0)
    p = parent_from_ladder(spec)
    assert p.bv_drift == pytest.approx(0.3 + spec.total_mass)
    assert not p.unbounded_variation
    assert_laplace(p.scale)


def test_parent_preconditions():
    spec = tempered_stable_ladder(0.5, 1.0, 0.5, 1.0)
    with pytest.raises(PreconditionError):
        parent_from_ladder(spec, phi_killrate=0.2)
    spec.nonincreasing_density = False
    with pytest.raises(PreconditionError):
        parent_from_ladder(spec)


def test_ladder_validation():
    with pytest.raises(ConfigError):
        stable_ladder(1.0, 1.2)
    with pytest.raises(ConfigError):
        sum_stable_ladder(1.0, 1.0, 0.6, 0.4)
    with pytest.raises(ConfigError):
        drift_ladder(0.0)
    tempered_stable_ladder(0.5, 1.0, 0.5, 1.0).check()


# ---------------------------------------------------------------- T-transform

def test_t_transform_zero_beta_is_identity():
    m = stable(1.5)
    x = np.array([0.5, 1.0, 2.0])
    a = t_transform_scale(m, 0.0, 0.0, x, "filon")
    b = eval_scale(m, 0.0, x, "W", "filon")["W"]
    assert np.allclose(a, b, rtol=1e-14)


def test_t_transform_stable_closed_form():
    alpha, d = 1.5, 0.7
    form = t_transform_stable(alpha, d)
    for x in (0.3, 1.0, 2.0):
        ref = d ** (1 - alpha) * math.exp(d * x) * special.gammainc(alpha - 1, d * x)
        assert form(x) == pytest.approx(ref, rel=1e-12)
    assert_laplace(form)
    num = t_transform_scale(stable(alpha), 0.0, 0.0, [0.3, 1.0, 2.0], "filon", delta=d)
    assert np.allclose(num, form([0.3, 1.0, 2.0]), rtol=1e-7)


def test_t_transform_laplace():
    m = brownian(1.0, 0.5)
    q, beta = 0.5, 1.0
    nodes, weights = np.polynomial.laguerre.laggauss(80)
    for th in (1.0, 2.0):
        vals = t_transform_scale(m, q, beta, nodes / th, "rational")
        lt = float(np.sum(weights * vals)) / th
        ref = (th + beta) / (th * (m.psi_real(th + beta) - q))
        assert lt == pytest.approx(ref, rel=1e-6)


def test_t_transform_keeps_value_at_zero(theta0):
    # infinite jump activity makes W - W(0+) grow like sqrt(x), hence the loose check
    v = t_transform_scale(theta0, 0.5, 1.0, [0.0, 1e-9, 1e-12], "euler")
    assert v[0] == 0.5
    assert abs(v[1] - 0.5) <= 1e-4 and abs(v[2] - 0.5) < abs(v[1] - 0.5)


def test_t_transform_preconditions(theta):
    with pytest.raises(PreconditionError):
        t_transform_scale(theta, 0.5, 0.0, 1.0)
    with pytest.raises(PreconditionError):
        t_transform_scale(theta, 0.5, 0.0, 1.0, delta=0.5)    # positive mean
    with pytest.raises(DomainError):
        t_transform_scale(theta, 0.5, -1.0, 1.0)


# ---------------------------------------------------------------- shifted scale

def test_shifted_stable():
    a = 1.5
    s = shifted_scale(stable_alpha=a)
    for x in XS:
        assert s.scale(x) == pytest.approx(1 + x ** (a - 1) / math.gamma(a), rel=1e-13)
        assert s.tail_form(x) == pytest.approx(1 - mittag_leffler(a - 1, 1, -x ** (a - 1)), rel=1e-12)
    assert s.scale.value_at_zero() == 1.0          # unit jump at the origin
    assert s.psi(2.0) == pytest.approx(4 / (2 ** 0.5 + 2))
    assert_laplace(s.closed_form)
    assert_laplace(s.tail_form)


def test_shifted_numeric_route_matches_closed_form():
    s = shifted_scale(stable(1.5), complete=True)
    c = shifted_scale(stable_alpha=1.5)
    x = np.array([0.25, 1.0, 2.0])
    assert np.allclose(s.scale(x), c.scale(x), rtol=1e-7)
    # the transform of W~' decays like z^(-1/2); the cutoff warning is expected
    with pytest.warns(CutoffWarning):
        tail = s.jump_tail(x)
    assert np.allclose(tail, c.jump_tail(x), rtol=1e-6)
    assert s.psi(2.0) == pytest.approx(c.psi(2.0), rel=1e-12)


def test_shifted_preconditions(theta):
    with pytest.raises(PreconditionError):
        shifted_scale(stable(1.5))
    with pytest.raises(PreconditionError):
        shifted_scale(theta, complete=True)          # nonzero mean
    with pytest.raises(ConfigError):
        shifted_scale(stable_alpha=2.5)


# ---------------------------------------------------------------- misc

def test_json_round_trip():
    W, _ = conjugate_pair(sum_stable_ladder(0.5, 1.0, 0.2, 0.6))
    back = ScaleClosedForm.from_json(W.to_json())
    assert np.allclose(back(XS), W(XS), rtol=0, atol=0)
    assert_laplace(back)
    with pytest.raises(ConfigError):
        ScaleClosedForm.from_json('{"representation": "x"}')


def test_monotone_spot_check():
    assert monotone_spot_check(lambda x: math.exp(-x))
    assert not monotone_spot_check(math.sin)
    _, Ws = conjugate_pair(stable_ladder(1.0, 0.4))
    assert monotone_spot_check(Ws.derivative)        # W*' is completely monotone
