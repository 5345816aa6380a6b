"""Brute-force evolution in the single-excitation sector.

For each momentum sample p0 the state is ``c_E |p0, E, 0> + sum_j c_j |p0 - hbar k_j, G, 1_j>``.
In the interaction picture

    dc_E/dt = -(i/hbar) sum_j g_j^* exp(-i D_j t) c_j
    dc_j/dt = -(i/hbar) g_j exp(+i D_j t) c_E

with ``D_j`` the recoil/Doppler detuning of :func:`radfriction.modegrid.detunings`.
Samples never couple to each other, so each one is an independent task.

Modes with bitwise-equal detuning are integrated through their bright
combination ``C = sum_j g_j^* c_j / G`` (``G^2 = sum_j |g_j|^2``); the orthogonal
dark combinations are constants of motion. This is an exact change of basis,
and with ``reduce=False`` every mode is its own group.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._fmt import write_csv
from .analytic import ZERO_SHIFT, friction_force_vec
from .modegrid import Couplings, detunings
from .params import AtomParams, ParameterError, check_atom
from .wavepacket import MomentumWavepacket, gaussian_wavepacket, single_momentum  # noqa: F401

WORKERS_ENV = "RADFRICTION_WORKERS"


class StepSizeError(ParameterError):
    """Requested time step does not resolve the fastest detuning."""


@dataclass(frozen=True)
class DtPolicy:
    """Fixed-step RK4 policy: ``dt <= safety / max|D_j|``.

    An explicit ``dt`` larger than that bound is refused.
    """

    safety: float = 0.05
    dt: float | None = None


@dataclass
class AmplitudeState:
    t: float
    c_e: complex
    c_modes: np.ndarray

    @property
    def norm(self) -> float:
        return abs(self.c_e) ** 2 + math.fsum(np.abs(self.c_modes).ravel() ** 2)


@dataclass(frozen=True, eq=False)
class Sector:
    """Mode grouping for one momentum sample."""

    p0: float
    group_of: np.ndarray  # (n_modes,) group id, -1 for uncoupled modes
    detuning: np.ndarray  # (n_groups,)
    coupling: np.ndarray  # (n_groups,) G >= 0
    k_mean: np.ndarray  # (n_groups, 3) |g|^2-weighted mean wave vector
    shape: tuple

    @property
    def n_groups(self) -> int:
        return self.detuning.size


def build_sector(coupled: Couplings, atom: AtomParams, p0: float, reduce: bool = True) -> Sector:
    g = coupled.g.ravel()
    n_pol = coupled.g.shape[1]
    g2 = np.abs(g) ** 2
    d_mode = np.repeat(detunings(coupled.grid, atom, p0), n_pol)
    k_mode = np.repeat(coupled.grid.k_vec, n_pol, axis=0)
    live = np.flatnonzero(g2 > 0)
    group_of = np.full(g.size, -1, dtype=np.int64)
    if reduce:
        d_unique, inverse = np.unique(d_mode[live], return_inverse=True)
    else:
        d_unique, inverse = d_mode[live], np.arange(live.size)
    group_of[live] = inverse
    n_groups = d_unique.size
    G2 = np.bincount(inverse, weights=g2[live], minlength=n_groups)
    k_mean = np.empty((n_groups, 3))
    for a in range(3):
        k_mean[:, a] = np.bincount(inverse, weights=g2[live] * k_mode[live, a], minlength=n_groups)
    with np.errstate(invalid="ignore", divide="ignore"):
        k_mean /= G2[:, None]
    return Sector(
        p0=float(p0),
        group_of=group_of,
        detuning=d_unique,
        coupling=np.sqrt(G2),
        k_mean=k_mean,
        shape=coupled.g.shape,
    )


@dataclass(eq=False)
class Trajectory:
    """Amplitudes of one momentum sample at the output times.

    ``c_groups`` holds the bright-combination amplitudes; :meth:`state`
    expands them back to one amplitude per mode.
    """

    p0: float
    times: np.ndarray
    c_e: np.ndarray
    c_groups: np.ndarray
    sector: Sector
    coupled: Couplings
    dark: np.ndarray | None = None
    dt: float = 0.0
    n_steps: int = 0

    def norm(self) -> np.ndarray:
        n = np.abs(self.c_e) ** 2 + np.sum(np.abs(self.c_groups) ** 2, axis=1)
        if self.dark is not None:
            n = n + math.fsum(np.abs(self.dark) ** 2)
        return n

    def state(self, i: int = -1) -> AmplitudeState:
        g = self.coupled.g.ravel()
        gid = self.sector.group_of
        G = self.sector.coupling
        c = np.zeros(g.size, dtype=complex)
        live = gid >= 0
        c[live] = g[live] / G[gid[live]] * self.c_groups[i][gid[live]]
        if self.dark is not None:
            c = c + self.dark
        return AmplitudeState(t=float(self.times[i]), c_e=complex(self.c_e[i]), c_modes=c.reshape(self.sector.shape))

    def final_state(self) -> AmplitudeState:
        return self.state(-1)

    def photon_momentum(self, hbar: float = 1.0) -> np.ndarray:
        """``sum_j |c_j|^2 hbar k_j`` at every output time, shape (n_t, 3)."""
        pop = np.abs(self.c_groups) ** 2
        out = np.stack([np.sum(pop * self.sector.k_mean[:, a], axis=1) for a in range(3)], axis=1)
        if self.dark is not None:
            kd = np.repeat(self.coupled.grid.k_vec, self.sector.shape[1], axis=0)
            d2 = np.abs(self.dark) ** 2
            out = out + np.array([math.fsum(d2 * kd[:, a]) for a in range(3)])
        return hbar * out


def rotating_frame_rhs(state: AmplitudeState, coupled: Couplings, atom: AtomParams, p0: float):
    """Time derivative of ``(c_E, c_modes)``; ``c_modes`` shaped like ``coupled.g``."""
    c_modes = np.asarray(state.c_modes)
    if c_modes.shape != coupled.g.shape:
        raise ParameterError(f"state has {c_modes.shape} mode amplitudes, couplings have {coupled.g.shape}")
    d = detunings(coupled.grid, atom, p0)[:, None]
    phase = np.exp(1j * d * state.t)
    ih = -1j / atom.hbar
    dc_e = ih * np.sum(np.conj(coupled.g) * np.conj(phase) * c_modes)
    dc_modes = ih * coupled.g * phase * state.c_e
    return complex(dc_e), dc_modes


def _project(state: AmplitudeState, coupled: Couplings, sector: Sector):
    g = coupled.g.ravel()
    c = np.asarray(state.c_modes, dtype=complex).ravel()
    if c.size != g.size:
        raise ParameterError("initial state does not match the coupling list")
    gid = sector.group_of
    live = gid >= 0
    C = np.zeros(sector.n_groups, dtype=complex)
    np.add.at(C, gid[live], np.conj(g[live]) * c[live])
    C /= sector.coupling
    bright = np.zeros_like(c)
    bright[live] = g[live] / sector.coupling[gid[live]] * C[gid[live]]
    dark = c - bright
    return complex(state.c_e), C, (dark if np.any(dark != 0) else None)


def _integrate(sector: Sector, c_e0: complex, C0: np.ndarray, t0: float, n_out: int, n_sub: int, dt: float, hbar: float):
    """Classical RK4 with ``n_sub`` steps between consecutive outputs.

    Phase factors are advanced by multiplication and re-seeded from the exact
    exponential at every output time.
    """
    D, G = sector.detuning, sector.coupling
    ih = -1j / hbar
    half = np.exp(0.5j * D * dt)
    h = n_sub * dt
    c_e, C = complex(c_e0), np.array(C0, dtype=complex)
    out_e = np.empty(n_out, dtype=complex)
    out_C = np.empty((n_out, D.size), dtype=complex)
    out_e[0], out_C[0] = c_e, C
    for k in range(1, n_out):
        ph = np.exp(1j * D * (t0 + (k - 1) * h))
        for _ in range(n_sub):
            g0 = G * ph
            ph_mid = ph * half
            g1 = G * ph_mid
            ph = ph_mid * half
            g2 = G * ph
            k1e = ih * np.sum(np.conj(g0) * C)
            k1 = ih * g0 * c_e
            C2 = C + 0.5 * dt * k1
            k2e = ih * np.sum(np.conj(g1) * C2)
            k2 = ih * g1 * (c_e + 0.5 * dt * k1e)
            C3 = C + 0.5 * dt * k2
            k3e = ih * np.sum(np.conj(g1) * C3)
            k3 = ih * g1 * (c_e + 0.5 * dt * k2e)
            C4 = C + dt * k3
            k4e = ih * np.sum(np.conj(g2) * C4)
            k4 = ih * g2 * (c_e + dt * k3e)
            c_e = c_e + dt / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
            C = C + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out_e[k], out_C[k] = c_e, C
    return out_e, out_C


def resolve_workers(workers: int | None = None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ParameterError(f"{WORKERS_ENV} must be an integer, got {env!r}") from exc
    else:
        n = 1 if workers is None else int(workers)
    return max(1, n)


def step_size(sectors, t_span: float, n_out: int, policy: DtPolicy):
    """Steps per output interval and the resulting ``dt``."""
    d_max = max((float(np.max(np.abs(s.detuning))) for s in sectors if s.n_groups), default=0.0)
    h = t_span / (n_out - 1)
    dt_max = policy.safety / d_max if d_max > 0 else math.inf
    if policy.dt is not None:
        if policy.dt > dt_max:
            raise StepSizeError(
                f"dt={policy.dt:.6g} exceeds {policy.safety}/max|detuning| = {dt_max:.6g} "
                f"(max|detuning| = {d_max:.6g}); refusing to run"
            )
        dt_max = policy.dt
    n_sub = max(1, math.ceil(h / dt_max * (1.0 - 1e-12))) if math.isfinite(dt_max) else 1
    return n_sub, h / n_sub


def evolve(
    pack: MomentumWavepacket,
    coupled: Couplings,
    atom: AtomParams,
    t_final: float,
    dt_policy: DtPolicy | None = None,
    *,
    n_out: int = 101,
    t_start: float = 0.0,
    initial: list[AmplitudeState] | None = None,
    workers: int | None = None,
    reduce: bool = True,
) -> list[Trajectory]:
    """Integrate every momentum sample from ``t_start`` to ``t_final``.

    Outputs are at ``n_out`` equally spaced times including both ends. The
    initial state defaults to the excited atom in the vacuum. Samples run as
    independent tasks on ``workers`` threads (``RADFRICTION_WORKERS``
    overrides); results do not depend on the worker count.
    """
    check_atom(atom)
    policy = dt_policy or DtPolicy()
    if not t_final > t_start:
        raise ParameterError("t_final must exceed t_start")
    if n_out < 2:
        raise ParameterError("n_out must be >= 2")
    if initial is not None and len(initial) != len(pack):
        raise ParameterError("need one initial state per momentum sample")
    sectors = [build_sector(coupled, atom, p, reduce) for p in pack.p0]
    n_sub, dt = step_size(sectors, t_final - t_start, n_out, policy)
    times = t_start + (t_final - t_start) / (n_out - 1) * np.arange(n_out)

    def task(i):
        sector = sectors[i]
        if initial is None:
            c_e0, C0, dark = 1.0 + 0j, np.zeros(sector.n_groups, dtype=complex), None
        else:
            c_e0, C0, dark = _project(initial[i], coupled, sector)
        out_e, out_C = _integrate(sector, c_e0, C0, t_start, n_out, n_sub, dt, atom.hbar)
        return Trajectory(
            p0=sector.p0, times=times, c_e=out_e, c_groups=out_C, sector=sector,
            coupled=coupled, dark=dark, dt=dt, n_steps=n_sub * (n_out - 1),
        )

    n_workers = min(resolve_workers(workers), len(pack))
    if n_workers == 1:
        return [task(i) for i in range(len(pack))]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(task, range(len(pack))))


@dataclass
class ObservableSeries:
    times: np.ndarray
    survival: np.ndarray
    p_atom: np.ndarray
    p_photon: np.ndarray
    norms: np.ndarray  # (n_samples, n_t)
    mean_p: float = 0.0
    f_sim: np.ndarray | None = None


def _weighted_fsum(weights, arrays) -> np.ndarray:
    """Compensated, index-ordered weighted sum of equally shaped arrays."""
    stacked = np.stack([w * a for w, a in zip(weights, arrays)])
    flat = stacked.reshape(stacked.shape[0], -1)
    return np.array([math.fsum(flat[:, j]) for j in range(flat.shape[1])]).reshape(stacked.shape[1:])


def observables(trajectories: list[Trajectory], pack: MomentumWavepacket, hbar: float = 1.0) -> ObservableSeries:
    """Weight-summed survival and atom/photon momenta.

    Atom momentum per sample: ``|c_E|^2 p0 + sum_j |c_j|^2 (p0 - hbar k_j)``.
    """
    if len(trajectories) != len(pack):
        raise ParameterError("one trajectory per momentum sample required")
    times = trajectories[0].times
    w = pack.weights
    surv, p_ph, p_at, norms = [], [], [], []
    for tr, p0 in zip(trajectories, pack.p0):
        if tr.times.shape != times.shape or np.any(tr.times != times):
            raise ParameterError("trajectories have different output times")
        n = tr.norm()
        photon = tr.photon_momentum(hbar)
        atom = -photon
        atom[:, 0] += n * p0
        surv.append(np.abs(tr.c_e) ** 2)
        p_ph.append(photon)
        p_at.append(atom)
        norms.append(n)
    return ObservableSeries(
        times=times,
        survival=_weighted_fsum(w, surv),
        p_atom=_weighted_fsum(w, p_at),
        p_photon=_weighted_fsum(w, p_ph),
        norms=np.array(norms),
        mean_p=pack.mean_p,
    )


@dataclass
class ForceSeries:
    times: np.ndarray
    f_sim: np.ndarray  # (n, 3)
    f_analytic: np.ndarray  # (n, 3), zero_shift closed form (NaN when unavailable)
    fit: object | None = field(default=None)

    @property
    def f_analytic_x(self) -> np.ndarray:
        return self.f_analytic[:, 0]


def force_from_trajectory(series: ObservableSeries, atom: AtomParams | None = None, pack: MomentumWavepacket | None = None) -> ForceSeries:
    """Force as ``d<P>_atom/dt`` by finite differences on the output times.

    Central differences inside, second-order one-sided at the ends. The
    closed-form (zero_shift) force is paired in when ``atom`` and ``pack``
    are given.
    """
    t = np.asarray(series.times, dtype=float)
    if t.size < 3:
        raise ParameterError("need at least 3 output times for a force estimate")
    steps = np.diff(t)
    if np.max(np.abs(steps - steps.mean())) > 1e-9 * abs(steps.mean()):
        raise ParameterError("output times must be uniformly spaced")
    p = np.asarray(series.p_atom, dtype=float)
    h = (t[-1] - t[0]) / (t.size - 1)
    f = np.empty_like(p)
    # differences first, so constant data gives exactly zero
    f[1:-1] = (p[2:] - p[:-2]) / (2.0 * h)
    f[0] = (4.0 * (p[1] - p[0]) - (p[2] - p[0])) / (2.0 * h)
    f[-1] = ((p[-3] - p[-1]) - 4.0 * (p[-2] - p[-1])) / (2.0 * h)
    series.f_sim = f
    if atom is not None and pack is not None:
        ref = friction_force_vec(atom, pack, t, ZERO_SHIFT)
    else:
        ref = np.full_like(f, np.nan)
    return ForceSeries(times=t, f_sim=f, f_analytic=ref)


def hemisphere_mean_frequency(trajectories: list[Trajectory], pack: MomentumWavepacket, i: int = -1):
    """Population-weighted mean photon frequency emitted into ``k_x > 0`` and
    ``k_x < 0`` at output ``i``. Returns ``(forward, backward)``."""
    sums = np.zeros((2, 2))
    for tr, w in zip(trajectories, pack.weights):
        grid = tr.coupled.grid
        n_pol = tr.sector.shape[1]
        pop = np.abs(tr.state(i).c_modes.ravel()) ** 2
        omega = np.repeat(grid.omega, n_pol)
        kx = np.repeat(grid.k_vec[:, 0], n_pol)
        for row, mask in enumerate((kx > 0, kx < 0)):
            sums[row, 0] += w * math.fsum(pop[mask] * omega[mask])
            sums[row, 1] += w * math.fsum(pop[mask])
    return sums[0, 0] / sums[0, 1], sums[1, 0] / sums[1, 1]


SERIES_COLUMNS = [
    "t", "survival",
    "p_atom_x", "p_atom_y", "p_atom_z",
    "p_photon_x", "p_photon_y", "p_photon_z",
    "f_sim_x", "f_sim_y", "f_sim_z",
    "f_analytic_x",
]


def export_series_csv(series: ObservableSeries, force: ForceSeries, path) -> None:
    rows = np.column_stack(
        [series.times, series.survival, series.p_atom, series.p_photon, force.f_sim, force.f_analytic_x]
    )
    write_csv(path, SERIES_COLUMNS, rows)


def simulate(atom, coupled, pack, t_final, *, n_out=101, dt_policy=None, workers=None, reduce=True):
    """evolve -> observables -> force, in one call."""
    trajs = evolve(pack, coupled, atom, t_final, dt_policy, n_out=n_out, workers=workers, reduce=reduce)
    series = observables(trajs, pack, atom.hbar)
    force = force_from_trajectory(series, atom, pack)
    return trajs, series, force
