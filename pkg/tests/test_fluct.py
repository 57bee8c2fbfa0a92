import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from levyscale.errors import ConfigError, DomainError
from levyscale.fluct import (KinkWarning, ScaleEvaluator, busy_period, creeping_transform,
                             csbp_supremum, gerber_shiu_density, gerber_shiu_total_mass,
                             infimum_law, infimum_total_mass, joint_laplace_at_ruin,
                             one_sided_down, overshoot_marginal, reflected_exit,
                             resolvent_density, resolvent_total_mass, two_sided_creep,
                             two_sided_down, two_sided_exit_up)
from levyscale.model import phi_q

from conftest import brownian, stable

Q = 0.5


def mass_with_tail(f, T, cuts=(0.0, 0.1, 1.0, 5.0)):
    """``int_0^inf f`` from Gauss-Legendre panels up to ``T`` and an exponential tail.

    ``f`` takes arrays.  Beyond ``T`` the integrand is taken as
    ``f(T) e^{-r (x - T)}`` with ``r`` read off the last unit of the grid.
    """
    t, w = np.polynomial.legendre.leggauss(64)
    edges = [c for c in cuts if c < T] + [T]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs = lo + 0.5 * (t + 1) * (hi - lo)
        total += 0.5 * (hi - lo) * float(np.sum(w * f(xs)))
    fT, fT1 = f(np.array([T, T - 1.0]))
    r = math.log(fT1 / fT)
    return total + fT / r


@pytest.fixture(scope="module")
def ev_theta(theta):
    return ScaleEvaluator(theta, Q)


@pytest.fixture(scope="module")
def ev_rational(rational):
    return ScaleEvaluator(rational, Q, "rational")


@pytest.fixture(scope="module")
def ev_theta0(theta0):
    return ScaleEvaluator(theta0, Q)


# ---------------------------------------------------------------- exits

def test_exit_up_edges(theta, ev_theta):
    assert two_sided_exit_up(theta, Q, 2.0, 2.0, ev=ev_theta) == 1.0
    assert two_sided_exit_up(theta, Q, -1.0, 2.0, ev=ev_theta) == 0.0
    vals = [two_sided_exit_up(theta, Q, x, 3.0, ev=ev_theta) for x in np.linspace(0.1, 2.9, 15)]
    assert np.all(np.diff(vals) > 0) and 0 < vals[0] and vals[-1] < 1


def test_gamblers_ruin():
    bm = brownian(1.0)
    ev = ScaleEvaluator(bm, 0.0, "filon")
    for x in (0.5, 1.0, 2.5):
        assert two_sided_exit_up(bm, 0.0, x, 3.0, ev=ev) == pytest.approx(x / 3.0, rel=1e-8)


def test_one_sided_down_zero_q():
    neg = brownian(1.0, -0.5)
    assert one_sided_down(neg, 0.0, 2.0, "filon") == 1.0
    pos = brownian(1.0, 0.5)
    ev = ScaleEvaluator(pos, 0.0, "filon")
    x = 40 / phi_q(pos, 1.0)
    assert abs(one_sided_down(pos, 0.0, x, ev=ev)) <= 1e-4     # exact value e^{-40}
    # ruin probability of Brownian motion with drift: e^{-2 mu x / sigma^2}
    assert one_sided_down(pos, 0.0, 1.0, ev=ev) == pytest.approx(math.exp(-1.0), rel=1e-8)


def test_one_sided_down_at_zero_bounded_variation(theta0):
    d = 2.0
    val = one_sided_down(theta0, 0.0, 0.0, "filon")
    assert val == pytest.approx(1 - theta0.mean() / d, rel=1e-9)


def test_one_sided_down_is_a_probability(theta, ev_theta):
    vals = [one_sided_down(theta, Q, x, ev=ev_theta) for x in (0.0, 0.5, 2.0, 5.0)]
    assert vals[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(vals) < 0) and vals[-1] > 0


def test_creeping(theta, theta0, ev_theta):
    assert creeping_transform(theta0, Q, 1.0) == 0.0
    for x in (0.1, 1.0, 3.0):
        c = creeping_transform(theta, Q, x, ev=ev_theta)
        assert 0 <= c <= one_sided_down(theta, Q, x, ev=ev_theta)
    bm = brownian(0.8)
    ev = ScaleEvaluator(bm, 0.0, "filon")
    for x in (0.3, 1.0, 2.0):
        assert creeping_transform(bm, 0.0, x, ev=ev) == pytest.approx(1.0, rel=1e-8)
    with pytest.raises(DomainError):
        creeping_transform(theta, Q, -1.0)


def test_two_sided_down(theta, ev_theta):
    assert two_sided_down(theta, Q, 2.0, 2.0, ev=ev_theta) == pytest.approx(0.0, abs=1e-14)
    for x in (0.2, 1.0, 1.9):
        s = two_sided_down(theta, Q, x, 2.0, ev=ev_theta) + two_sided_exit_up(theta, Q, x, 2.0, ev=ev_theta)
        assert s <= 1
    a = 40 / ev_theta.phi
    for x in (0.5, 2.0):
        assert two_sided_down(theta, Q, x, a, ev=ev_theta) == pytest.approx(
            one_sided_down(theta, Q, x, ev=ev_theta), rel=1e-3)
    with pytest.raises(DomainError):
        two_sided_down(theta, Q, 3.0, 2.0)


def test_exhaustivity_for_oscillating_model():
    m = stable(1.5)
    q = 1e-6
    ev = ScaleEvaluator(m, q)
    for x in (0.3, 1.0, 2.0):
        total = two_sided_exit_up(m, q, x, 2.5, ev=ev) + two_sided_down(m, q, x, 2.5, ev=ev)
        assert total <= 1 + 1e-12
        assert total == pytest.approx(1.0, abs=1e-3)


# ---------------------------------------------------------------- resolvents

@pytest.mark.parametrize("horizon,a", [("two-sided", 3.0), ("up-to-a", 3.0), ("above-0", None),
                                       ("free", None)])
def test_resolvent_nonnegative(theta, ev_theta, horizon, a):
    pts = np.linspace(0.05, 2.95, 8)
    for x in pts:
        for y in pts:
            if horizon == "free":
                y = y - 1.5
            assert resolvent_density(theta, Q, x, y, horizon, a, ev=ev_theta) >= -1e-12


@pytest.mark.parametrize("q", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("name", ["theta", "rational"])
def test_free_resolvent_mass(q, name, theta, rational):
    m, backend = {"theta": (theta, "euler"), "rational": (rational, "rational")}[name]
    assert resolvent_total_mass(m, q, backend) == pytest.approx(1 / q, rel=1e-4)


def test_free_resolvent_mass_by_quadrature(rational, ev_rational):
    # independent of the u/v shortcut: integrate the density itself.
    # On y < 0 it is Phi' e^{Phi |y|} - W(|y|), a difference of two growing
    # terms, so the grid stops at 30 where they still agree to many digits
    e = ev_rational
    a1 = float(rational.dpsi_real(e.phi))
    right = 1 / (a1 * e.phi)
    left = mass_with_tail(lambda z: np.exp(e.phi * z) / a1 - e.W(z), 30.0)
    assert right + left == pytest.approx(1 / Q, rel=1e-4)


def test_above_zero_is_limit_of_two_sided(theta, ev_theta):
    a = 40 / ev_theta.phi
    for x, y in ((0.5, 1.0), (2.0, 0.3), (1.0, 1.0)):
        lim = resolvent_density(theta, Q, x, y, "above-0", ev=ev_theta)
        two = resolvent_density(theta, Q, x, y, "two-sided", a, ev=ev_theta)
        assert two == pytest.approx(lim, rel=1e-6)


def test_resolvent_domains(theta):
    with pytest.raises(DomainError):
        resolvent_density(theta, Q, 2.0, 4.0, "two-sided", 3.0)
    with pytest.raises(DomainError):
        resolvent_density(theta, 0.0, 0.0, 1.0, "free")
    with pytest.raises(ConfigError):
        resolvent_density(theta, Q, 1.0, 1.0, "sideways")


# ---------------------------------------------------------------- reflected

def test_reflected_exits(theta, ev_theta):
    assert reflected_exit(theta, Q, 2.0, 2.0, ev=ev_theta) == pytest.approx(1.0)
    for which in ("from-infimum", "from-supremum"):
        for x in (0.0, 0.7, 2.0):
            v = reflected_exit(theta, Q, x, 2.0, which, ev=ev_theta)
            assert 0 < v <= 1 + 1e-12
    # starting at 0 the infimum-reflected exit is the busy period with x = B = a
    assert reflected_exit(theta, Q, 0.0, 2.0, ev=ev_theta) == pytest.approx(
        busy_period(theta, Q, 2.0, 2.0, ev=ev_theta), rel=1e-12)


@pytest.mark.filterwarnings("ignore::levyscale.inversion.CutoffWarning")
def test_reflected_kink_warning(set4):
    ev = ScaleEvaluator(set4, Q, "filon")
    with pytest.warns(KinkWarning):
        v = reflected_exit(set4, Q, 0.5, 1.0, "from-supremum", ev=ev)
    assert 0 < v <= 1


# ---------------------------------------------------------------- ruin

def test_gerber_shiu_density_support(theta, ev_theta):
    assert gerber_shiu_density(theta, Q, 1.0, 0.5, 0.4, 0.6, ev=ev_theta) == 0.0   # y >= v
    assert gerber_shiu_density(theta, Q, 1.0, 0.5, 2.0, 1.2, ev=ev_theta) == 0.0   # y >= x
    assert gerber_shiu_density(theta, Q, 1.0, 0.5, 2.0, 0.5, ev=ev_theta) > 0


@pytest.mark.slow
@pytest.mark.parametrize("name", ["theta", "rational"])
def test_gerber_shiu_total_mass(name, theta, rational, ev_theta, ev_rational):
    m, ev = {"theta": (theta, ev_theta), "rational": (rational, ev_rational)}[name]
    for x in (0.5, 2.0):
        jump, creep = gerber_shiu_total_mass(m, Q, x, ev=ev)
        assert jump + creep == pytest.approx(one_sided_down(m, Q, x, ev=ev), rel=1e-3)


def test_gerber_shiu_no_creeping_without_gaussian(theta0, ev_theta0):
    _, creep = gerber_shiu_total_mass(theta0, Q, 1.0, ev=ev_theta0, nodes=16)
    assert creep == 0.0


def test_overshoot_marginal(theta, ev_theta):
    a, x = 2.0, 0.8
    full = overshoot_marginal(theta, Q, x, a, ev=ev_theta)
    ref = two_sided_down(theta, Q, x, a, ev=ev_theta) - two_sided_creep(theta, Q, x, a, ev=ev_theta)
    assert full == pytest.approx(ref, rel=1e-3)
    part = overshoot_marginal(theta, Q, x, a, B=(-2.0, -0.5), ev=ev_theta)
    more = overshoot_marginal(theta, Q, x, a, B=(-3.0, -0.2), ev=ev_theta)
    assert 0 < part < more < full
    assert overshoot_marginal(theta, Q, x, a, A=(0.5, 0.5), ev=ev_theta) == 0.0


def test_joint_laplace_at_ruin(theta):
    ev = ScaleEvaluator(theta, Q)
    for x in (0.5, 2.0):
        assert joint_laplace_at_ruin(theta, Q, 0.0, x, ev=ev) == pytest.approx(
            one_sided_down(theta, Q, x, ev=ev), rel=1e-9)
        assert joint_laplace_at_ruin(theta, Q, 0.0, x, ev=ev) <= 1
    v = 0.3
    u0 = float(theta.psi_real(v))
    vals = [joint_laplace_at_ruin(theta, u0 + d, v, 1.0) for d in (-1e-6, 0.0, 1e-6)]
    assert vals[1] == pytest.approx(vals[0], rel=1e-5) and vals[1] == pytest.approx(vals[2], rel=1e-5)
    with pytest.raises(DomainError):
        joint_laplace_at_ruin(theta, 0.0, 0.1, 1.0)


# ---------------------------------------------------------------- infimum

def test_infimum_law(theta, theta0, ev_theta, ev_theta0):
    dens, atom = infimum_law(theta, Q, 1.0, ev=ev_theta)
    assert atom == 0.0
    for x in (0.0, 0.3, 1.0, 4.0):
        assert infimum_law(theta, Q, x, ev=ev_theta)[0] >= 0
        assert infimum_law(theta0, Q, x, ev=ev_theta0)[0] >= 0
    _, atom0 = infimum_law(theta0, Q, 1.0, ev=ev_theta0)
    assert atom0 == pytest.approx(Q / ev_theta0.phi * 0.5)
    assert infimum_total_mass(theta, Q, ev=ev_theta) == pytest.approx(1.0, rel=1e-4)


def test_infimum_mass_by_quadrature(rational, ev_rational):
    e = ev_rational
    dens = lambda x: Q / e.phi * e.Wprime(x) - Q * e.W(x)
    mass = mass_with_tail(dens, 30.0)
    assert mass + infimum_law(rational, Q, 1.0, ev=e)[1] == pytest.approx(1.0, rel=1e-4)


@pytest.mark.filterwarnings("ignore::levyscale.inversion.CutoffWarning")
def test_infimum_kink_warning(set4):
    ev = ScaleEvaluator(set4, Q, "filon")
    with pytest.warns(KinkWarning):
        infimum_law(set4, Q, 1.0, ev=ev)


# ---------------------------------------------------------------- applications

def test_busy_period(theta, ev_theta):
    B = 1.5
    assert busy_period(theta, Q, B, B, ev=ev_theta) == pytest.approx(1 / ev_theta.Z(B), rel=1e-12)
    assert busy_period(theta, Q, 0.5, B, ev=ev_theta) == pytest.approx(1 / ev_theta.Z(B), rel=1e-12)
    assert 0 < busy_period(theta, Q, 2.5, B, ev=ev_theta) < 1


def test_csbp_supremum(theta, theta0):
    ev = ScaleEvaluator(theta, 0.0, "filon")
    assert csbp_supremum(theta, 2.0, 2.0, ev=ev) == 0.0
    vals = [csbp_supremum(theta, x, 0.5, ev=ev) for x in (0.6, 1.0, 2.0, 4.0)]
    assert np.all(np.diff(vals) > 0) and vals[-1] < 1
    ev0 = ScaleEvaluator(theta0, 0.0, "filon")
    assert csbp_supremum(theta0, 2.0, 2.0, ev=ev0) == pytest.approx(0.5 / ev0.W(2.0))


def test_evaluator_mismatch(theta, rational, ev_theta):
    with pytest.raises(ConfigError):
        two_sided_exit_up(rational, Q, 1.0, 2.0, ev=ev_theta)
