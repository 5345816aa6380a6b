import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from radfriction import (
    WITH_SHIFT,
    ZERO_SHIFT,
    AtomParams,
    ParameterError,
    band_self_energy,
    build_grid,
    couple_dipole,
    derive_gamma0,
    dipole_from_gamma0,
    friction_force,
    friction_force_vec,
    gaussian_wavepacket,
    level_shift,
    lineshape,
    mean_acceleration,
    pole_amplitudes,
    single_momentum,
    total_impulse,
)
from radfriction.analytic import emission_prefactor
from radfriction.experiments import SimSetup
from radfriction.wavepacket import MomentumWavepacket


def atom_with_gamma(gamma0=0.01, omega0=1.0, mass=1.0, c=1.0, **kw):
    return AtomParams(omega0, mass, dipole_from_gamma0(gamma0, omega0, c, 1.0), c_light=c, **kw)


def test_shift_at_twice_omega0():
    a = atom_with_gamma(cutoff_omega=2.0)
    s = level_shift(a)
    assert math.isclose(s.b_r, -a.gamma0 / math.pi, rel_tol=1e-14)
    assert s.b_i == -a.gamma0 / 2


@given(st.floats(min_value=1.0001, max_value=1e4))
def test_shift_imaginary_part_and_sign(cutoff):
    a = atom_with_gamma(cutoff_omega=cutoff)
    s = level_shift(a)
    assert s.b_i == -0.5 * a.gamma0 * a.hbar
    assert math.isfinite(s.b_r)
    if cutoff >= 2.0:
        assert s.b_r < 0


def test_shift_domain_error():
    with pytest.raises(ParameterError):
        level_shift(atom_with_gamma(cutoff_omega=1.0))
    with pytest.raises(ParameterError):
        level_shift(atom_with_gamma(cutoff_omega=0.5))


def test_acceleration_example():
    a = atom_with_gamma(0.01)
    acc = mean_acceleration(a, single_momentum(0.1), 0.0, ZERO_SHIFT)
    assert math.isclose(acc[0], -2.5e-4, rel_tol=1e-12)
    assert acc[1] == 0.0 and acc[2] == 0.0


def test_force_example():
    a = atom_with_gamma(0.01)
    f = friction_force(a, single_momentum(0.1), 0.0, ZERO_SHIFT)
    assert math.isclose(f.f_vec[0], -2.5e-4, rel_tol=1e-12)
    assert f.t == 0.0


def test_zero_momentum_gives_zero():
    a = atom_with_gamma(0.01)
    pack = gaussian_wavepacket(0.0)
    np.testing.assert_array_equal(mean_acceleration(a, pack, 3.0), 0.0)
    np.testing.assert_array_equal(friction_force(a, pack, 3.0).f_vec, 0.0)
    np.testing.assert_array_equal(total_impulse(a, pack), 0.0)


def test_half_life():
    a = atom_with_gamma(0.01)
    pack = single_momentum(1.0)
    f0 = mean_acceleration(a, pack, 0.0)[0]
    fh = mean_acceleration(a, pack, math.log(2.0) / a.gamma0)[0]
    assert math.isclose(fh, 0.5 * f0, rel_tol=1e-14)


def test_unnormalized_pack_rejected():
    pack = MomentumWavepacket(np.array([1.0]), np.array([0.9]))
    with pytest.raises(ParameterError):
        mean_acceleration(atom_with_gamma(), pack, 0.0)
    with pytest.raises(ParameterError):
        friction_force(atom_with_gamma(), pack, 0.0)


def test_total_impulse_example():
    a = atom_with_gamma(0.01, mass=100.0)
    dp = total_impulse(a, single_momentum(1.0), ZERO_SHIFT)
    assert math.isclose(dp[0], -2.5e-3, rel_tol=1e-12)


@pytest.mark.parametrize("upper", [20.0, 30.0])
def test_total_impulse_quadrature(upper):
    a = atom_with_gamma(0.01, mass=100.0)
    pack = gaussian_wavepacket(1.0)
    for mode in (ZERO_SHIFT, WITH_SHIFT):
        val, _ = integrate.quad(
            lambda t: friction_force_vec(a, pack, t, mode)[0], 0.0, upper / a.gamma0, epsabs=0, epsrel=1e-12
        )
        assert math.isclose(val, total_impulse(a, pack, mode)[0], rel_tol=1e-6)


def test_with_vs_zero_shift_gap():
    a = atom_with_gamma(0.01, cutoff_omega=2.0)
    pack = single_momentum(1.0)
    fw = friction_force(a, pack, 1.0, WITH_SHIFT).f_vec[0]
    fz = friction_force(a, pack, 1.0, ZERO_SHIFT).f_vec[0]
    expected = (1.0 - a.gamma0 / (math.pi * a.omega0)) ** 2
    assert math.isclose(fw / fz, expected, rel_tol=1e-14)


valid = st.tuples(
    st.floats(1e-4, 0.05),  # gamma ratio
    st.floats(0.1, 10.0),  # omega0
    st.floats(1.0, 1e4),  # mass
    st.floats(0.5, 5.0),  # c
    st.floats(1.5, 500.0),  # cutoff / omega0
    st.floats(-5.0, 5.0),  # mean p
    st.floats(0.0, 5.0),  # t * gamma0
)


@settings(max_examples=100)
@given(valid, st.sampled_from([WITH_SHIFT, ZERO_SHIFT]))
def test_two_forms_agree(v, mode):
    gr, w0, m, c, cut, p, tg = v
    a = AtomParams(w0, m, dipole_from_gamma0(gr * w0, w0, c, 1.0), cutoff_omega=cut * w0, c_light=c)
    pack = gaussian_wavepacket(p, 0.1, 5)
    t = tg / a.gamma0
    f = friction_force_vec(a, pack, t, mode)
    acc = mean_acceleration(a, pack, t, mode)
    assert abs(m * acc[0] - f[0]) <= 1e-12 * abs(f[0])


@settings(max_examples=50)
@given(st.floats(1e-3, 10.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_direction_linearity_decay(p, t1, t2):
    a = atom_with_gamma(0.01, mass=100.0)
    g = a.gamma0
    f1 = friction_force_vec(a, single_momentum(p), t1 / g)
    assert f1[0] < 0 and f1[1] == 0.0 and f1[2] == 0.0
    f2 = friction_force_vec(a, single_momentum(2 * p), t1 / g)
    assert math.isclose(f2[0], 2 * f1[0], rel_tol=1e-15)
    later = friction_force_vec(a, single_momentum(p), (t1 + t2) / g)
    assert math.isclose(later[0] * math.exp(t2), f1[0], rel_tol=1e-13)


def test_array_times_shape():
    a = atom_with_gamma(0.01, mass=100.0)
    f = friction_force_vec(a, single_momentum(1.0), np.linspace(0, 100, 7))
    assert f.shape == (7, 3)


def test_prefactor_modes():
    a = atom_with_gamma(0.01)
    assert emission_prefactor(a, ZERO_SHIFT) == 1.0
    b = level_shift(a).b_r
    assert math.isclose(emission_prefactor(a, WITH_SHIFT), (1.0 + b) ** 2, rel_tol=1e-15)


@pytest.fixture(scope="module")
def small_coupled():
    a = atom_with_gamma(0.01, mass=100.0)
    grid = build_grid((0.8, 1.2), 200, 4, 4, skirt=1.0)
    return a, couple_dipole(grid, a)


def test_pole_initial_state(small_coupled):
    a, c = small_coupled
    c_e, cm = pole_amplitudes(a, c, 1.0, 0.0)
    assert c_e == 1.0
    assert np.all(cm == 0)


def test_pole_survival_at_lifetime(small_coupled):
    a, c = small_coupled
    c_e, _ = pole_amplitudes(a, c, 1.0, 1.0 / a.gamma0)
    assert math.isclose(abs(c_e) ** 2, math.exp(-1.0), rel_tol=1e-14)


def test_lineshape_is_lorentzian(small_coupled):
    a, c = small_coupled
    from radfriction.modegrid import detunings

    shape = lineshape(a, c, 1.0)
    d = detunings(c.grid, a, 1.0)
    expected = c.g2 / (d[:, None] ** 2 + 0.25 * a.gamma0**2)
    np.testing.assert_allclose(shape, expected, rtol=1e-12)


def test_pole_norm_default_grid():
    setup = SimSetup(atom_with_gamma(0.01, mass=100.0))
    c = setup.couplings(0.01)
    b_r, gamma = band_self_energy(setup.atom, c, 1.0)
    for t in (5.0 / setup.gamma0, math.inf):
        c_e, cm = pole_amplitudes(setup.atom, c, 1.0, t, b_r=b_r, gamma=gamma)
        assert abs(c_e) ** 2 + np.sum(np.abs(cm) ** 2) >= 0.99


def test_pole_norm_grows_with_bandwidth():
    a = atom_with_gamma(0.01, mass=100.0)
    norms = []
    for half in (10, 20, 40):
        c = couple_dipole(build_grid((1 - half * 0.01, 1 + half * 0.01), 20 * half, 2, 2), a)
        _, cm = pole_amplitudes(a, c, 0.0, math.inf)
        norms.append(np.sum(np.abs(cm) ** 2))
    assert norms[0] < norms[1] < norms[2] < 1.0


def test_band_rate_close_to_gamma0(small_coupled):
    a, c = small_coupled
    b_r, gamma = band_self_energy(a, c, 0.0)
    # recoil moves the resonance by hbar omega0^2/(2 m c^2) and stretches the dispersion
    assert abs(gamma / a.gamma0 - 1.0) < 0.02
    assert abs(b_r) < 0.2 * a.gamma0
