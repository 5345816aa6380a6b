import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radfriction import (
    AmplitudeState,
    DtPolicy,
    ParameterError,
    StepSizeError,
    build_grid,
    couple_dipole,
    evolve,
    force_from_trajectory,
    gaussian_wavepacket,
    observables,
    rotating_frame_rhs,
    single_momentum,
)
from radfriction.dynamics import (
    SERIES_COLUMNS,
    ObservableSeries,
    build_sector,
    export_series_csv,
    hemisphere_mean_frequency,
)
from radfriction.experiments import fit_decay
from radfriction.modegrid import detunings


@pytest.fixture(scope="module")
def tiny(atom):
    grid = build_grid((0.9, 1.1), 24, 2, 4, skirt=0.5)
    return couple_dipole(grid, atom, (0.0, 0.6, 0.8))


def random_state(rng, shape, t=0.0):
    c = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    e = complex(rng.normal(), rng.normal())
    s = math.sqrt(abs(e) ** 2 + np.sum(np.abs(c) ** 2))
    return AmplitudeState(t=t, c_e=e / s, c_modes=c / s)


def rk4_reference(coupled, atom, p0, t_final, n_steps):
    """Mode-by-mode RK4 straight from the public right-hand side."""
    dt = t_final / n_steps
    c_e, c = 1.0 + 0j, np.zeros(coupled.g.shape, complex)
    for n in range(n_steps):
        t = n * dt

        def f(tt, e, m):
            return rotating_frame_rhs(AmplitudeState(tt, e, m), coupled, atom, p0)

        k1 = f(t, c_e, c)
        k2 = f(t + dt / 2, c_e + dt / 2 * k1[0], c + dt / 2 * k1[1])
        k3 = f(t + dt / 2, c_e + dt / 2 * k2[0], c + dt / 2 * k2[1])
        k4 = f(t + dt, c_e + dt * k3[0], c + dt * k3[1])
        c_e = c_e + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        c = c + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return c_e, c


# right-hand side ---------------------------------------------------------

def test_rhs_zero_couplings(tiny, atom):
    zero = couple_dipole(tiny.grid, atom.replace(dipole_mag=0.0))
    state = random_state(np.random.default_rng(0), zero.g.shape, t=3.0)
    de, dm = rotating_frame_rhs(state, zero, atom, 1.0)
    assert de == 0 and np.all(dm == 0)


def test_rhs_initial_readoff(tiny, atom):
    state = AmplitudeState(0.0, 1.0 + 0j, np.zeros(tiny.g.shape, complex))
    _, dm = rotating_frame_rhs(state, tiny, atom, 1.0)
    np.testing.assert_allclose(np.abs(dm), np.abs(tiny.g) / atom.hbar, rtol=1e-15)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1e3), st.floats(-2.0, 2.0))
def test_rhs_norm_preserving(tiny, atom, seed, t, p0):
    state = random_state(np.random.default_rng(seed), tiny.g.shape, t)
    de, dm = rotating_frame_rhs(state, tiny, atom, p0)
    scale = abs(de) + np.sum(np.abs(dm))
    dn = (np.conj(state.c_e) * de).real + math.fsum((np.conj(state.c_modes) * dm).real.ravel())
    assert abs(dn) <= 1e-14 * max(scale, 1e-300)


def test_rhs_misaligned(tiny, atom):
    state = AmplitudeState(0.0, 1.0 + 0j, np.zeros((3, 2), complex))
    with pytest.raises(ParameterError):
        rotating_frame_rhs(state, tiny, atom, 1.0)


# evolution ----------------------------------------------------------------

def test_zero_couplings_unchanged(tiny, atom):
    a0 = atom.replace(dipole_mag=0.0)
    zero = couple_dipole(tiny.grid, a0)
    tr = evolve(single_momentum(1.0), zero, a0, 100.0, n_out=5)[0]
    assert np.all(tr.c_e == 1.0)
    assert np.all(tr.state(-1).c_modes == 0)


def test_reduced_matches_unreduced_and_reference(tiny, atom):
    t_final, n_out = 50.0, 11
    red = evolve(single_momentum(1.0), tiny, atom, t_final, n_out=n_out)[0]
    full = evolve(single_momentum(1.0), tiny, atom, t_final, n_out=n_out, reduce=False)[0]
    assert red.sector.n_groups < full.sector.n_groups
    np.testing.assert_allclose(red.c_e, full.c_e, rtol=0, atol=1e-12)
    np.testing.assert_allclose(red.state().c_modes, full.state().c_modes, rtol=0, atol=1e-12)
    ref_e, ref_c = rk4_reference(tiny, atom, 1.0, t_final, red.n_steps)
    assert abs(ref_e - red.c_e[-1]) < 1e-11
    assert np.max(np.abs(ref_c - red.state().c_modes)) < 1e-11


def test_reduction_merges_degenerate_modes(tiny, atom):
    moving = build_sector(tiny, atom, 1.0)
    still = build_sector(tiny, atom, 0.0)
    assert still.n_groups < moving.n_groups
    d = detunings(tiny.grid, atom, 0.0)
    assert still.n_groups == np.unique(d).size


def test_semigroup(tiny, atom):
    pack = gaussian_wavepacket(1.0, 0.1, 3)
    whole = evolve(pack, tiny, atom, 40.0, n_out=9)
    first = evolve(pack, tiny, atom, 20.0, n_out=5)
    second = evolve(pack, tiny, atom, 40.0, n_out=5, t_start=20.0, initial=[tr.final_state() for tr in first])
    for w, s in zip(whole, second):
        assert abs(w.c_e[-1] - s.c_e[-1]) < 1e-10
        assert np.max(np.abs(w.state().c_modes - s.state().c_modes)) < 1e-10


def test_continuation_from_arbitrary_state(tiny, atom):
    # a state with a dark part must keep it constant
    state = random_state(np.random.default_rng(3), tiny.g.shape)
    tr = evolve(single_momentum(0.5), tiny, atom, 30.0, n_out=4, initial=[state])[0]
    assert np.max(np.abs(tr.norm() - 1.0)) < 1e-12
    ref = evolve(single_momentum(0.5), tiny, atom, 30.0, n_out=4, initial=[state], reduce=False)[0]
    assert np.max(np.abs(tr.state().c_modes - ref.state().c_modes)) < 1e-12


def test_step_size_refused(tiny, atom):
    with pytest.raises(StepSizeError, match="refusing to run"):
        evolve(single_momentum(1.0), tiny, atom, 10.0, DtPolicy(dt=100.0), n_out=3)


def test_explicit_small_dt_accepted(tiny, atom):
    tr = evolve(single_momentum(1.0), tiny, atom, 10.0, DtPolicy(dt=0.01), n_out=3)[0]
    assert tr.dt <= 0.01


def test_bad_span(tiny, atom):
    with pytest.raises(ParameterError):
        evolve(single_momentum(1.0), tiny, atom, 0.0)


def test_worker_count_independent(tiny, atom, monkeypatch):
    pack = gaussian_wavepacket(1.0, 0.1, 5)
    one = evolve(pack, tiny, atom, 30.0, n_out=4, workers=1)
    three = evolve(pack, tiny, atom, 30.0, n_out=4, workers=3)
    monkeypatch.setenv("RADFRICTION_WORKERS", "2")
    env = evolve(pack, tiny, atom, 30.0, n_out=4, workers=1)
    for a, b, c in zip(one, three, env):
        assert np.array_equal(a.c_groups, b.c_groups) and np.array_equal(a.c_groups, c.c_groups)
        assert np.array_equal(a.c_e, b.c_e)


def test_bad_worker_env(tiny, atom, monkeypatch):
    monkeypatch.setenv("RADFRICTION_WORKERS", "many")
    with pytest.raises(ParameterError):
        evolve(single_momentum(1.0), tiny, atom, 10.0, n_out=3)


# observables and force ----------------------------------------------------

def test_observables_initial_values(tiny, atom):
    pack = gaussian_wavepacket(1.0, 0.1, 3)
    s = observables(evolve(pack, tiny, atom, 30.0, n_out=4), pack, atom.hbar)
    assert s.survival[0] == 1.0
    np.testing.assert_allclose(s.p_atom[0], [pack.mean_p, 0, 0], rtol=1e-15)
    assert np.all(s.p_photon[0] == 0)


def test_observables_conserve_momentum(tiny, atom):
    pack = gaussian_wavepacket(1.0, 0.1, 3)
    s = observables(evolve(pack, tiny, atom, 300.0, n_out=11), pack, atom.hbar)
    total = s.p_atom + s.p_photon
    assert np.max(np.abs(total - total[0])) <= 1e-10 * atom.hbar * atom.omega0 / atom.c_light


def _series(times, p_atom):
    n = len(times)
    return ObservableSeries(times=np.asarray(times, float), survival=np.ones(n), p_atom=np.asarray(p_atom, float),
                            p_photon=np.zeros((n, 3)), norms=np.ones((1, n)))


def test_force_constant_momentum():
    s = _series(np.linspace(0, 1, 6), np.tile([1.0, 2.0, 3.0], (6, 1)))
    assert np.all(force_from_trajectory(s).f_sim == 0)


def test_force_linear_ramp():
    t = np.linspace(0, 2, 9)
    p = np.outer(t, [-0.5, 0.25, 0.0])
    f = force_from_trajectory(_series(t, p)).f_sim
    np.testing.assert_allclose(f[1:-1], np.tile([-0.5, 0.25, 0.0], (7, 1)), rtol=1e-13, atol=1e-15)


def test_force_needs_three_uniform_points():
    with pytest.raises(ParameterError):
        force_from_trajectory(_series([0.0, 1.0], np.zeros((2, 3))))
    with pytest.raises(ParameterError):
        force_from_trajectory(_series([0.0, 1.0, 3.0], np.zeros((3, 3))))


def test_export_series(tmp_path, tiny, atom):
    pack = single_momentum(1.0)
    s = observables(evolve(pack, tiny, atom, 30.0, n_out=4), pack)
    f = force_from_trajectory(s, atom, pack)
    export_series_csv(s, f, tmp_path / "s.csv")
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == SERIES_COLUMNS
    assert len(rows) == 5 and all(len(r) == 12 for r in rows)


# default toy-regime run ---------------------------------------------------

def test_default_norm_and_momentum(default_run, atom):
    _, series, _ = default_run
    assert np.max(np.abs(series.norms - 1.0)) <= 1e-10
    total = series.p_atom + series.p_photon
    assert np.max(np.abs(total - total[0])) <= 1e-10 * atom.hbar * atom.omega0 / atom.c_light


def test_default_friction_sign_and_transverse(default_run, atom):
    _, series, force = default_run
    sel = (force.times > 0) & (force.times <= 5.0 / atom.gamma0 + 1e-9)
    fx = force.f_sim[sel, 0]
    assert np.all(fx < 0)
    assert np.all(np.abs(force.f_sim[sel, 1:]) <= 1e-3 * np.abs(fx)[:, None])


def test_default_doppler_asymmetry(default_run):
    trajs, series, _ = default_run
    pack = gaussian_wavepacket(series.mean_p, 0.1, len(trajs))
    forward, backward = hemisphere_mean_frequency(trajs, pack)
    assert forward > backward


def test_default_survival_rate(default_run, atom):
    _, series, _ = default_run
    fit = fit_decay(series.times, series.survival, (0.0, 5.0 / atom.gamma0))
    assert abs(fit.rate / atom.gamma0 - 1.0) <= 0.02


def test_default_survival_pointwise(default_run, atom):
    """Pointwise deviation from exp(-Gamma0 t) over [0, 5/Gamma0]."""
    _, series, _ = default_run
    sel = series.times <= 5.0 / atom.gamma0 + 1e-9
    ref = np.exp(-atom.gamma0 * series.times[sel])
    dev = np.max(np.abs(series.survival[sel] / ref - 1.0))
    print(f"max relative survival deviation = {dev:.4f}")
    assert dev <= 0.02


def test_default_force_vs_closed_form(default_run, atom):
    """Simulated F_x against the zero_shift closed form over [0.5, 3]/Gamma0."""
    _, _, force = default_run
    g = atom.gamma0
    sel = (force.times >= 0.5 / g - 1e-9) & (force.times <= 3.0 / g + 1e-9)
    rel = np.abs(force.f_sim[sel, 0] / force.f_analytic_x[sel] - 1.0)
    print(f"max relative force error = {rel.max():.3f}")
    assert rel.max() <= 0.15


def test_stationary_null(stationary_run, atom):
    _, series, force = stationary_run
    unit = atom.hbar * atom.omega0 / atom.c_light
    assert np.max(np.abs(force.f_sim)) <= 1e-6 * unit * atom.gamma0
    assert np.max(np.abs(series.p_atom)) <= 1e-6 * unit
