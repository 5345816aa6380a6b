"""Closed-form results: level shift, pole-approximation amplitudes, the mean
acceleration of an emitting atom and the radiative friction force."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modegrid import Couplings, detunings
from .params import AtomParams, ParameterError, check_atom, derive_gamma0
from .wavepacket import MomentumWavepacket

WITH_SHIFT = "with_shift"
ZERO_SHIFT = "zero_shift"
SHIFT_MODES = (WITH_SHIFT, ZERO_SHIFT)


@dataclass(frozen=True)
class LevelShift:
    b_r: float
    b_i: float

    @property
    def complex(self) -> complex:
        return complex(self.b_r, self.b_i)


@dataclass(frozen=True)
class ForceSample:
    t: float
    f_vec: np.ndarray


def level_shift(atom: AtomParams) -> LevelShift:
    """Excited-state self-energy with cutoff ``Omega``.

    ``B_r = -(Gamma0 hbar/(2 pi omega0)) [Omega + omega0 ln((Omega - omega0)/omega0)]``
    and ``B_i = -Gamma0 hbar/2``.
    """
    check_atom(atom)
    gamma0 = derive_gamma0(atom)
    w0, cut = atom.omega0, atom.cutoff_omega
    b_r = -(gamma0 * atom.hbar / (2.0 * w0 * math.pi)) * (cut + w0 * math.log((cut - w0) / w0))
    return LevelShift(b_r=b_r, b_i=-0.5 * gamma0 * atom.hbar)


def _shift(atom: AtomParams, shift_mode: str) -> float:
    if shift_mode == WITH_SHIFT:
        return level_shift(atom).b_r
    if shift_mode == ZERO_SHIFT:
        return 0.0
    raise ParameterError(f"shift_mode must be one of {SHIFT_MODES}, got {shift_mode!r}")


def emission_prefactor(atom: AtomParams, shift_mode: str = WITH_SHIFT) -> float:
    """``(omega0 + B_r/hbar)^2``; ``B_r`` is dropped for ``zero_shift``."""
    return (atom.omega0 + _shift(atom, shift_mode) / atom.hbar) ** 2


def _mean_momentum(pack: MomentumWavepacket) -> np.ndarray:
    pack.check_normalized()
    return pack.mean_vector


def mean_acceleration(atom, pack, t, shift_mode: str = WITH_SHIFT) -> np.ndarray:
    """Orientation-averaged ``d^2<R>/dt^2``.

    x component: ``-(omega0^2 |mu|^2/(3 m^2 c^5)) (omega0 + B_r/hbar)^2 e^{-Gamma0 t} <p0>``;
    y and z are exactly zero. Accepts scalar ``t`` (returns shape (3,)) or an
    array of times (returns shape (n, 3)).
    """
    check_atom(atom)
    p_mean = _mean_momentum(pack)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ParameterError("t must be non-negative")
    c = atom.c_light
    coef = -(atom.omega0**2 * atom.dipole_mag**2 / (3.0 * atom.mass**2 * c**5)) * emission_prefactor(
        atom, shift_mode
    )
    decay = np.exp(-derive_gamma0(atom) * t_arr)
    return np.multiply.outer(coef * decay, p_mean)


def friction_force_vec(atom, pack, t, shift_mode: str = WITH_SHIFT) -> np.ndarray:
    """Friction force in its Gamma0 form,
    ``-((omega0 + B_r/hbar)^2 hbar Gamma0/(4 m omega0 c^2)) e^{-Gamma0 t} <p0>``.
    Same shape conventions as :func:`mean_acceleration`."""
    check_atom(atom)
    p_mean = _mean_momentum(pack)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ParameterError("t must be non-negative")
    gamma0 = derive_gamma0(atom)
    coef = -emission_prefactor(atom, shift_mode) * atom.hbar * gamma0 / (
        4.0 * atom.mass * atom.omega0 * atom.c_light**2
    )
    return np.multiply.outer(coef * np.exp(-gamma0 * t_arr), p_mean)


def friction_force(atom, pack, t: float, shift_mode: str = WITH_SHIFT) -> ForceSample:
    return ForceSample(t=float(t), f_vec=friction_force_vec(atom, pack, float(t), shift_mode))


def total_impulse(atom, pack, shift_mode: str = WITH_SHIFT) -> np.ndarray:
    """Time integral of the friction force over ``[0, inf)``."""
    check_atom(atom)
    p_mean = _mean_momentum(pack)
    coef = -emission_prefactor(atom, shift_mode) * atom.hbar / (4.0 * atom.mass * atom.omega0 * atom.c_light**2)
    return coef * p_mean


def pole_amplitudes(
    atom: AtomParams,
    coupled: Couplings,
    p0: float,
    t: float,
    shift_mode: str = ZERO_SHIFT,
    *,
    b_r: float | None = None,
    gamma: float | None = None,
):
    """Pole-approximation amplitudes for one momentum sample at time ``t``.

    Interaction-picture amplitudes: ``c_E = exp(-i B_r t/hbar - gamma t/2)`` and,
    per mode, ``c_j = -(i/hbar) g_j (exp((i D_j - gamma/2) t) - 1)/(i D_j - gamma/2)``
    with ``D_j`` the recoil/Doppler detuning measured from the shifted level.
    ``t = inf`` gives the long-time (Lorentzian) amplitudes.

    ``b_r`` overrides the shift selected by ``shift_mode`` (e.g. with the band's
    own shift); ``gamma`` overrides Gamma0.
    """
    check_atom(atom)
    if t < 0:
        raise ParameterError("t must be non-negative")
    shift = _shift(atom, shift_mode) if b_r is None else float(b_r)
    rate = derive_gamma0(atom) if gamma is None else float(gamma)
    d = detunings(coupled.grid, atom, p0, b_r=shift)[:, None]
    z = 1j * d - 0.5 * rate
    if math.isinf(t):
        c_e = 0j if rate > 0 else complex(math.nan)
        growth = 0.0
    else:
        c_e = complex(np.exp(-1j * shift * t / atom.hbar - 0.5 * rate * t))
        growth = np.exp(z * t)
    with np.errstate(invalid="ignore", divide="ignore"):
        c_modes = -1j / atom.hbar * coupled.g * (growth - 1.0) / z
    if not math.isinf(t):
        # z -> 0 limit (undamped, exactly resonant)
        c_modes = np.where(z == 0, -1j / atom.hbar * coupled.g * t, c_modes)
    return c_e, c_modes


def lineshape(atom: AtomParams, coupled: Couplings, p0: float, shift_mode: str = ZERO_SHIFT, **kw) -> np.ndarray:
    """Long-time photon populations ``|c_j(inf)|^2`` (Lorentzian in detuning)."""
    _, c_modes = pole_amplitudes(atom, coupled, p0, math.inf, shift_mode, **kw)
    return np.abs(c_modes) ** 2


def band_self_energy(atom: AtomParams, coupled: Couplings, p0: float) -> tuple[float, float]:
    """Level shift and decay rate generated by the finite mode band itself.

    The shift is the real part of the discrete self-energy evaluated a
    half-width off the real axis, ``-sum |g_j|^2 D_j / (hbar (D_j^2 + Gamma0^2/4))``;
    for a narrow band it is unrelated to the cutoff formula. The rate is the
    golden rule at the recoil/Doppler-shifted resonance ``D = 0``: the
    spectral density per unit detuning, linearly interpolated along each
    direction (hat kernel of half-width one detuning spacing). Recoil moves
    the resonance and stretches the dispersion, so this differs from Gamma0
    at first order in the recoil parameter.

    These are the values to feed :func:`pole_amplitudes` when comparing
    against a simulation on the same grid. Returns ``(b_r, gamma)``.
    """
    grid = coupled.grid
    d = detunings(grid, atom, p0)
    half = 0.5 * derive_gamma0(atom)
    b_r = -math.fsum(coupled.g2_cell * d / (d * d + half * half)) / atom.hbar
    c = atom.c_light
    slope = 1.0 + atom.hbar * grid.omega / (atom.mass * c * c) - grid.k_hat[:, 0] * p0 / (atom.mass * c)
    h = grid.d_omega * slope
    kernel = np.maximum(0.0, 1.0 - np.abs(d) / h) / h
    gamma = 2.0 * np.pi / atom.hbar**2 * math.fsum(coupled.g2_cell * kernel)
    return b_r, gamma


def band_shift(atom: AtomParams, coupled: Couplings, p0: float) -> float:
    """Real part of :func:`band_self_energy`."""
    return band_self_energy(atom, coupled, p0)[0]
