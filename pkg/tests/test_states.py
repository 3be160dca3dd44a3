import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import eval_hermite

from quadnc.errors import InputError, ParameterError
from quadnc.states import (
    SQRT_2_OVER_PI,
    ClassLabel,
    Family,
    StateSpec,
    density,
    density_grid,
    fock_density_tabulated,
    hermite,
    ideal_fock_density,
    integrate_density,
    label_of,
    squeezed_variance,
    tail_mass,
)

ETA = 0.6


def vacuum(x):
    return SQRT_2_OVER_PI * np.exp(-2.0 * np.asarray(x) ** 2)


def literal_cat(x, a, eta, phi):
    """Odd-cat density written exactly as tabulated (complex exponential form)."""
    se = math.sqrt(eta)
    return SQRT_2_OVER_PI / (2 - 2 * math.exp(-2 * a * a)) * (
        np.exp(-2 * (x - se * a * math.cos(phi)) ** 2)
        - 2 * math.exp(-2 * a * a) * np.real(np.exp(-2 * (x + 1j * se * a * math.sin(phi)) ** 2))
        + np.exp(-2 * (x + se * a * math.cos(phi)) ** 2)
    )


def test_vacuum_peak():
    assert density(StateSpec(Family.COHERENT, alpha=0.0, eta=0.6), 0.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)
    assert density(StateSpec(Family.COHERENT, alpha=0.0, eta=0.6), 0.0) == pytest.approx(0.7978846, abs=1e-7)


@pytest.mark.parametrize("eta", [0.1, 0.6, 1.0])
def test_thermal_zero_is_vacuum(eta):
    x = np.linspace(-8, 8, 501)
    np.testing.assert_allclose(density(StateSpec(Family.THERMAL, nbar=0.0, eta=eta), x), vacuum(x), rtol=1e-15)


def test_spacs_single_photon_limit():
    spec = StateSpec(Family.SPACS, alpha=0.0, eta=1.0)
    expected = 4 * math.sqrt(2 / math.pi) * math.exp(-2)
    assert density(spec, 1.0) == pytest.approx(expected, rel=1e-14)
    assert density(spec, 1.0) == pytest.approx(0.431928, abs=1e-6)
    x = np.linspace(-5, 5, 301)
    np.testing.assert_allclose(density(spec, x), math.sqrt(2 / math.pi) * 4 * x**2 * np.exp(-2 * x**2), atol=1e-15)


def test_odd_cat_normalized():
    spec = StateSpec(Family.ODD_CAT, alpha=2.0, eta=0.6, phi=math.pi / 2)
    val, _ = integrate.quad(lambda t: density(spec, t), -8, 8, limit=200)
    assert abs(val - 1) < 1e-6


@pytest.mark.parametrize("alpha", [0.05, 0.3, 1.0, 2.0, 4.5, -3.0])
@pytest.mark.parametrize("phi", [0.0, 0.7, math.pi / 2, 2.5])
def test_odd_cat_matches_tabulated_expression(alpha, phi):
    x = np.linspace(-8, 8, 801)
    spec = StateSpec(Family.ODD_CAT, alpha=alpha, eta=ETA, phi=phi)
    np.testing.assert_allclose(density(spec, x), literal_cat(x, alpha, ETA, phi), atol=1e-12)


def test_odd_cat_even_and_single_photon_limit():
    x = np.linspace(-6, 6, 601)
    spec = StateSpec(Family.ODD_CAT, alpha=1.7, eta=ETA, phi=math.pi / 2)
    np.testing.assert_allclose(density(spec, x), density(spec, -x), atol=1e-15)
    p0 = [density(StateSpec(Family.ODD_CAT, alpha=a, eta=1.0, phi=math.pi / 2), 0.0) for a in (0.5, 0.1, 1e-3, 1e-6)]
    assert p0[-1] < 1e-10
    assert all(b <= a for a, b in zip(p0, p0[1:]))
    # alpha = 0 is the analytic limit
    np.testing.assert_allclose(
        density(StateSpec(Family.ODD_CAT, alpha=0.0, eta=ETA), x),
        density(StateSpec(Family.ODD_CAT, alpha=1e-7, eta=ETA), x),
        atol=1e-12,
    )


def test_density_grid_examples():
    g = density_grid(StateSpec(Family.COHERENT, alpha=0.0, eta=0.6), -8, 8, 3)
    assert [x for x, _ in g] == [-8.0, 0.0, 8.0]
    assert g[0][1] == pytest.approx(math.sqrt(2 / math.pi) * math.exp(-128), rel=1e-12)
    assert g[0][1] == pytest.approx(2.6e-56, rel=0.05)
    assert g[1][1] == pytest.approx(0.7978845608, rel=1e-10)
    assert g[2][1] == g[0][1]
    with pytest.raises(InputError):
        density_grid(StateSpec(Family.COHERENT), -8, 8, 1)
    with pytest.raises(InputError):
        density_grid(StateSpec(Family.COHERENT), 1, -1, 10)


def test_density_grid_fock_even():
    g = density_grid(StateSpec(Family.FOCK, n=3, eta=ETA), -8, 8, 1001)
    ps = np.array([p for _, p in g])
    # linspace mirror points agree only to an ulp
    np.testing.assert_allclose(ps, ps[::-1], rtol=1e-12, atol=0)


def test_tail_mass_examples():
    assert tail_mass(StateSpec(Family.COHERENT, alpha=5.0, eta=0.6)) < 1e-6
    assert tail_mass(StateSpec(Family.COHERENT, alpha=0.0, eta=0.6)) < 1e-30
    assert tail_mass(StateSpec(Family.FOCK, n=6, eta=0.6)) < 1e-6


def test_tail_mass_plus_body_is_one():
    # the Gaussian tail has a closed form: erfc
    spec = StateSpec(Family.THERMAL, nbar=5.0, eta=0.6)
    sigma = math.sqrt((1 + 2 * 0.6 * 5.0) / 4)
    assert tail_mass(spec) == pytest.approx(math.erfc(8 / (sigma * math.sqrt(2))), rel=1e-8)
    assert abs(integrate_density(spec, -8, 8) + tail_mass(spec) - 1) < 1e-9


def test_invalid_parameters():
    with pytest.raises(ParameterError):
        StateSpec(Family.THERMAL, nbar=-1.0)
    for eta in (0.0, -0.1, 1.5):
        with pytest.raises(ParameterError):
            StateSpec(Family.COHERENT, eta=eta)
    with pytest.raises(ParameterError):
        StateSpec(Family.FOCK, n=1.5)
    with pytest.raises(InputError):
        density(StateSpec(Family.COHERENT), float("nan"))
    with pytest.raises(InputError):
        density(StateSpec(Family.COHERENT), np.array([0.0, np.inf]))
    with pytest.raises(ParameterError, match="valid tags"):
        Family.parse("squeezy")


def test_labels():
    assert {f for f in Family if label_of(f) is ClassLabel.CLASSICAL} == {
        Family.COHERENT, Family.THERMAL, Family.COHERENT_MIXTURE, Family.PHASE_AVERAGED_COHERENT,
    }
    assert int(StateSpec(Family.SPACS).label) == 1


def test_irrelevant_fields_ignored():
    x = np.linspace(-4, 4, 101)
    a = StateSpec(Family.COHERENT, alpha=1.2, eta=ETA)
    b = StateSpec(Family.COHERENT, alpha=1.2, eta=ETA, nbar=3.0, n=4, xi=0.9)
    np.testing.assert_array_equal(density(a, x), density(b, x))


@pytest.mark.parametrize("k", range(0, 13))
def test_hermite_recurrence(k):
    y = np.linspace(-3, 3, 41)
    np.testing.assert_allclose(hermite(k, y), eval_hermite(k, y), rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("n", range(0, 7))
@pytest.mark.parametrize("eta", [0.3, 0.6, 1.0])
def test_fock_loss_mixture(n, eta):
    x = np.linspace(-8, 8, 2001)
    mix = sum(
        math.comb(n, k) * eta**k * (1 - eta) ** (n - k)
        * SQRT_2_OVER_PI * np.exp(-2 * x**2) * eval_hermite(k, math.sqrt(2) * x) ** 2 / (2**k * math.factorial(k))
        for k in range(n + 1)
    )
    np.testing.assert_allclose(density(StateSpec(Family.FOCK, n=n, eta=eta), x), mix, atol=1e-12)


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("eta", [0.3, 0.6, 1.0])
def test_fock_even_hermite_form_is_equivalent(n, eta):
    # the single-sum H_2k form is a linearization of the binomial mixture
    x = np.linspace(-8, 8, 2001)
    np.testing.assert_allclose(
        fock_density_tabulated(n, eta, x), density(StateSpec(Family.FOCK, n=n, eta=eta), x), atol=1e-12
    )


def test_ideal_fock_normalized():
    for k in range(7):
        val, _ = integrate.quad(lambda t: ideal_fock_density(k, t), -10, 10, limit=200)
        assert val == pytest.approx(1.0, abs=1e-12)


def test_mixture_and_squeezed_reductions():
    x = np.linspace(-8, 8, 401)
    np.testing.assert_allclose(density(StateSpec(Family.COHERENT_MIXTURE, alpha=0.0, eta=ETA), x), vacuum(x), rtol=1e-15)
    # xi = 0 is a coherent state
    np.testing.assert_allclose(
        density(StateSpec(Family.SQUEEZED_COHERENT, alpha=1.3, xi=0.0, eta=ETA, phi=0.4), x),
        density(StateSpec(Family.COHERENT, alpha=1.3, eta=ETA, phi=0.4), x),
        rtol=1e-12,
    )


def test_squeezed_variance_convention():
    # phi = 0 is the squeezed axis
    assert squeezed_variance(1.0, 0.6, 0.0) == pytest.approx((0.4 + 0.6 * math.exp(-2)) / 4)
    assert squeezed_variance(0.5, 0.6, 0.0) == pytest.approx(0.155, abs=1e-3)
    assert squeezed_variance(0.5, 0.6, math.pi / 2) > 0.25
    spec = StateSpec(Family.SQUEEZED_COHERENT, alpha=0.7, xi=0.8, eta=ETA, phi=0.3)
    m = integrate.quad(lambda t: t * density(spec, t), -8, 8)[0]
    v = integrate.quad(lambda t: (t - m) ** 2 * density(spec, t), -8, 8)[0]
    assert m == pytest.approx(math.sqrt(ETA) * 0.7 * math.cos(0.3), abs=1e-10)
    assert v == pytest.approx(squeezed_variance(0.8, ETA, 0.3), abs=1e-10)


def test_phase_averaged_is_phase_independent():
    x = np.linspace(-6, 6, 301)
    a = density(StateSpec(Family.PHASE_AVERAGED_COHERENT, alpha=2.0, eta=ETA, phi=0.0), x)
    b = density(StateSpec(Family.PHASE_AVERAGED_COHERENT, alpha=2.0, eta=ETA, phi=1.1), x)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_phase_averaged_against_adaptive_quadrature():
    spec = StateSpec(Family.PHASE_AVERAGED_COHERENT, alpha=4.0, eta=ETA)
    for x in (-3.0, 0.0, 1.7, 3.1):
        ref = integrate.quad(
            lambda th: density(StateSpec(Family.COHERENT, alpha=4.0, eta=ETA, phi=th), x), 0, 2 * math.pi,
            epsabs=1e-14, limit=200,
        )[0] / (2 * math.pi)
        assert density(spec, x) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(-5, 5),
    phi=st.floats(0, 2 * math.pi, exclude_max=True),
    x=st.floats(-8, 8),
)
def test_coherent_phase_covariance(alpha, phi, x):
    lhs = density(StateSpec(Family.COHERENT, alpha=alpha, eta=ETA, phi=phi), x)
    rhs = density(StateSpec(Family.COHERENT, alpha=alpha * math.cos(phi), eta=ETA, phi=0.0), x)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(
    family=st.sampled_from(list(Family)),
    alpha=st.floats(-3, 3),
    nbar=st.floats(0, 5),
    n=st.integers(0, 6),
    xi=st.floats(0, 1),
    eta=st.floats(0.05, 1.0),
    phi=st.floats(0, 2 * math.pi, exclude_max=True),
)
def test_density_nonnegative_and_normalized(family, alpha, nbar, n, xi, eta, phi):
    spec = StateSpec(family, alpha=alpha, nbar=nbar, n=n, xi=xi, eta=eta, phi=phi)
    p = density(spec, np.linspace(-8, 8, 2001))
    assert np.all(p >= 0)
    assert abs(integrate_density(spec, -8, 8) + tail_mass(spec) - 1) < 1e-9
