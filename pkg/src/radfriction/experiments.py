"""Fits, force comparisons, velocity sweeps and grid-convergence studies."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from ._fmt import write_csv, write_summary
from .analytic import ZERO_SHIFT, friction_force_vec
from .dynamics import DtPolicy, ForceSeries, evolve, force_from_trajectory, observables, resolve_workers
from .modegrid import ISOTROPIC, build_grid, couple_dipole, default_window, golden_rule_rate
from .params import AtomParams, ParameterError, derive_gamma0, dimensionless_groups, validate_params
from .wavepacket import gaussian_wavepacket

FLOOR_FRACTION = 1e-3
MONOTONE_ATOL = 1e-12


@dataclass(frozen=True)
class FitResult:
    rate: float
    amplitude: float
    r_squared: float
    residual_max: float


def fit_decay(times, values, window: tuple[float, float] | None = None) -> FitResult:
    """Log-linear least squares of ``values ~ amplitude * exp(-rate * t)``."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if window is not None:
        sel = (t >= window[0] - 1e-12 * abs(window[0])) & (t <= window[1] + 1e-12 * abs(window[1]))
        t, y = t[sel], y[sel]
    if t.size < 5:
        raise ParameterError(f"need >= 5 points in the fit window, got {t.size}")
    if np.any(~(y > 0)):
        raise ParameterError("values must be positive inside the fit window")
    res = stats.linregress(t, np.log(y))
    amplitude = math.exp(res.intercept)
    model = amplitude * np.exp(res.slope * t)
    return FitResult(
        rate=-res.slope,
        amplitude=amplitude,
        r_squared=min(1.0, res.rvalue**2),
        residual_max=float(np.max(np.abs(y / model - 1.0))),
    )


@dataclass(frozen=True)
class ForceComparison:
    times: np.ndarray
    signed: np.ndarray  # (sim - ref)_x / max(|ref_x|, floor)
    floor: float
    transverse: np.ndarray  # max(|d F_y|, |d F_z|) per time
    transverse_ok: bool

    @property
    def max(self) -> float:
        return float(np.max(np.abs(self.signed)))

    @property
    def mean(self) -> float:
        return float(np.mean(np.abs(self.signed)))


def _force_array(series):
    if isinstance(series, ForceSeries):
        return series.times, series.f_sim
    times, f = series
    return np.asarray(times, dtype=float), np.asarray(f, dtype=float)


def compare_force(sim, reference, window: tuple[float, float] | None = None) -> ForceComparison:
    """Component-wise force errors.

    ``sim`` is a :class:`ForceSeries` (its ``f_sim`` is used) or a
    ``(times, forces)`` pair; so is ``reference``, or pass the string
    ``"analytic"`` to use the series' own paired closed form. The x error is
    relative to the reference with a floor of 1e-3 of the larger peak |F_x|
    of the two series. Transverse components pass when their difference
    stays below 1e-3 of the local reference |F_x| (or the floor).
    """
    if isinstance(reference, str):
        if reference != "analytic" or not isinstance(sim, ForceSeries):
            raise ParameterError("reference='analytic' needs a ForceSeries")
        ref_t, ref_f = sim.times, sim.f_analytic
    else:
        ref_t, ref_f = _force_array(reference)
    t, f = _force_array(sim)
    if t.shape != ref_t.shape or np.any(np.abs(t - ref_t) > 1e-12 * max(1.0, float(np.max(np.abs(t))))):
        raise ParameterError("force series are not aligned in time")
    sel = np.ones(t.shape, bool) if window is None else (t >= window[0] - 1e-12 * abs(window[0])) & (
        t <= window[1] + 1e-12 * abs(window[1])
    )
    if not np.any(sel):
        raise ParameterError("comparison window contains no samples")
    floor = FLOOR_FRACTION * max(float(np.max(np.abs(f[:, 0]))), float(np.max(np.abs(ref_f[:, 0]))))
    denom = np.maximum(np.abs(ref_f[sel, 0]), floor)
    signed = (f[sel, 0] - ref_f[sel, 0]) / np.where(denom > 0, denom, 1.0)
    dtrans = np.max(np.abs(f[sel, 1:] - ref_f[sel, 1:]), axis=1)
    allowed = FLOOR_FRACTION * np.maximum(np.abs(ref_f[sel, 0]), np.abs(f[sel, 0]))
    return ForceComparison(
        times=t[sel],
        signed=signed,
        floor=floor,
        transverse=dtrans,
        transverse_ok=bool(np.all(dtrans <= np.maximum(allowed, floor * FLOOR_FRACTION))),
    )


@dataclass(frozen=True)
class SimSetup:
    """Everything needed to run the brute-force pipeline for one atom.

    Times (``t_final``, ``stride``) are in units of 1/Gamma0.
    """

    atom: AtomParams
    n_omega: int = 400
    n_theta: int = 16
    n_phi: int = 16
    halfwidth: float = 20.0
    guard: float = 2.0
    skirt: float = 1.5
    window: tuple[float, float] | None = None
    orientation: object = ISOTROPIC
    rel_width: float = 0.1
    n_samples: int = 7
    t_final: float = 5.0
    stride: float = 0.05
    safety: float = 0.05
    workers: int | None = None

    @property
    def gamma0(self) -> float:
        return derive_gamma0(self.atom)

    def mean_p(self, beta: float) -> float:
        return self.atom.mass * beta * self.atom.c_light

    def pack(self, beta: float):
        return gaussian_wavepacket(self.mean_p(beta), self.rel_width, self.n_samples)

    def grid(self, beta_max: float, resolution: tuple[int, int, int] | None = None):
        n_omega, n_theta, n_phi = resolution or (self.n_omega, self.n_theta, self.n_phi)
        window = self.window or default_window(self.atom, beta_max, halfwidth=self.halfwidth, guard=self.guard)
        return build_grid(window, n_omega, n_theta, n_phi, self.atom.c_light, skirt=self.skirt)

    def couplings(self, beta_max: float, resolution=None):
        return couple_dipole(self.grid(beta_max, resolution), self.atom, self.orientation)

    def n_out(self, t_final: float | None = None) -> int:
        span = self.t_final if t_final is None else t_final
        n = span / self.stride
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ParameterError(f"t_final={span} is not a multiple of the output stride {self.stride}")
        return int(round(n)) + 1

    def run(self, beta: float, *, beta_max: float | None = None, t_final: float | None = None, resolution=None, coupled=None):
        """Simulate one velocity. Returns ``(trajectories, series, force)``."""
        span = self.t_final if t_final is None else t_final
        coupled = coupled or self.couplings(beta if beta_max is None else beta_max, resolution)
        pack = self.pack(beta)
        trajs = evolve(
            pack, coupled, self.atom, span / self.gamma0, DtPolicy(self.safety),
            n_out=self.n_out(span), workers=self.workers,
        )
        series = observables(trajs, pack, self.atom.hbar)
        return trajs, series, force_from_trajectory(series, self.atom, pack)


def _map(fn, items, workers):
    n = min(resolve_workers(workers), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SweepPoint:
    beta: float
    mean_p: float
    force_x: float
    warning: str = ""


@dataclass(frozen=True)
class SweepResult:
    points: list
    slope: float
    intercept: float
    r_squared: float
    t_star: float

    @property
    def max_force(self) -> float:
        return max(abs(p.force_x) for p in self.points)

    @property
    def passed(self) -> bool:
        return self.r_squared >= 0.999 and abs(self.intercept) <= FLOOR_FRACTION * self.max_force and self.slope < 0


def _index_of(times, t):
    i = int(np.argmin(np.abs(times - t)))
    if abs(times[i] - t) > 1e-9 * max(1.0, abs(t)):
        raise ParameterError(f"readout time {t} is not an output time")
    return i


def linearity_sweep(betas, setup: SimSetup, t_star: float = 1.0, source: str = "simulation") -> SweepResult:
    """Fit ``F_x(t*)`` against ``<p0>`` over a set of velocities.

    ``t_star`` is in units of 1/Gamma0. All simulated points share one grid
    sized for the largest beta. Out-of-regime betas are kept but tagged.
    """
    betas = sorted(float(b) for b in betas)
    if len(betas) < 4:
        raise ParameterError("need at least 4 beta values")
    if betas[0] < 0:
        raise ParameterError("betas must be non-negative")
    beta_max = betas[-1]
    gamma0 = setup.gamma0

    def warning_for(beta):
        report = validate_params(setup.atom, dimensionless_groups(setup.atom, setup.mean_p(beta)))
        return "; ".join(report.warnings)

    if source == "analytic":
        def point(beta):
            pack = setup.pack(beta)
            f = friction_force_vec(setup.atom, pack, t_star / gamma0, ZERO_SHIFT)
            return SweepPoint(beta, pack.mean_p, float(f[0]), warning_for(beta))
    elif source == "simulation":
        coupled = setup.couplings(beta_max)
        span = t_star + 2 * setup.stride
        span = setup.stride * math.ceil(span / setup.stride - 1e-9)

        def point(beta):
            _, series, force = setup.run(beta, t_final=span, coupled=coupled)
            i = _index_of(force.times, t_star / gamma0)
            return SweepPoint(beta, series.mean_p, float(force.f_sim[i, 0]), warning_for(beta))
    else:
        raise ParameterError(f"unknown sweep source {source!r}")

    points = sorted(_map(point, betas, setup.workers), key=lambda p: p.beta)
    x = np.array([p.mean_p for p in points])
    y = np.array([p.force_x for p in points])
    res = stats.linregress(x, y)
    return SweepResult(points=points, slope=res.slope, intercept=res.intercept, r_squared=res.rvalue**2, t_star=t_star)


@dataclass(frozen=True)
class ConvergenceResult:
    metric: str
    resolutions: list
    errors: list
    monotone: bool

    @property
    def rows(self):
        return list(zip(self.resolutions, self.errors))


def _check_refining(resolutions):
    if len(resolutions) < 3:
        raise ParameterError("need at least 3 resolutions")
    for a, b in zip(resolutions, resolutions[1:]):
        if not (all(y >= x for x, y in zip(a, b)) and any(y > x for x, y in zip(a, b))):
            raise ParameterError(f"resolutions must strictly refine: {a} -> {b}")


def is_monotone_decreasing(errors, atol: float = MONOTONE_ATOL) -> bool:
    """Non-increasing sequence; steps within ``atol`` (roundoff) are allowed."""
    return all(b <= a + atol for a, b in zip(errors, errors[1:]))


def convergence_study(
    resolutions,
    metric: str,
    setup: SimSetup,
    *,
    beta: float = 0.01,
    source: str = "simulation",
    window: tuple[float, float] = (0.5, 3.0),
) -> ConvergenceResult:
    """Error against the closed-form target on a ladder of grids.

    ``rate_error``: relative error of the golden-rule rate against Gamma0.
    ``force_error``: mean relative error of the simulated F_x against the
    zero_shift friction force over ``window`` (units of 1/Gamma0).
    ``source="analytic"`` feeds the closed forms back in (errors vanish).
    """
    resolutions = [tuple(int(v) for v in r) for r in resolutions]
    _check_refining(resolutions)
    gamma0 = setup.gamma0
    if metric not in ("rate_error", "force_error"):
        raise ParameterError(f"unknown metric {metric!r}")
    if source not in ("simulation", "analytic"):
        raise ParameterError(f"unknown source {source!r}")

    def error(res):
        if metric == "rate_error":
            if source == "analytic":
                rate = derive_gamma0(setup.atom)
            else:
                rate = golden_rule_rate(setup.couplings(beta, res), setup.atom)
            return abs(rate - gamma0) / gamma0
        pack = setup.pack(beta)
        if source == "analytic":
            t = np.arange(setup.n_out()) * setup.stride / gamma0
            f = friction_force_vec(setup.atom, pack, t, ZERO_SHIFT)
            force = ForceSeries(times=t, f_sim=f, f_analytic=f)
        else:
            _, _, force = setup.run(beta, resolution=res)
        cmp = compare_force(force, "analytic", (window[0] / gamma0, window[1] / gamma0))
        return cmp.mean

    errors = [float(e) for e in _map(error, resolutions, setup.workers)]
    return ConvergenceResult(metric, resolutions, errors, is_monotone_decreasing(errors))


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    relation: str = "<="


@dataclass
class Verdict:
    checks: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def add(self, name, value, threshold, passed=None, relation="<="):
        if passed is None:
            passed = value <= threshold if relation == "<=" else value >= threshold
        self.checks.append(Check(name, float(value), float(threshold), bool(passed), relation))
        return self.checks[-1]

    def note(self, key, value):
        self.values.append((key, value))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def write(self, csv_path, summary_path) -> None:
        write_csv(
            csv_path,
            ["check", "value", "relation", "threshold", "result"],
            [[c.name, c.value, c.relation, c.threshold, "pass" if c.passed else "fail"] for c in self.checks],
        )
        items = list(self.values)
        items += [(f"check.{c.name}", c.passed) for c in self.checks]
        items.append(("all_checks", self.passed))
        write_summary(summary_path, items)


def simulation_checks(setup: SimSetup, trajs, series, force, verdict: Verdict | None = None) -> Verdict:
    """Checks on a single simulated run: conservation, decay, force sign,
    transverse nulls, exponential force decay and magnitude."""
    v = verdict or Verdict()
    gamma0 = setup.gamma0
    t = series.times
    unit = setup.atom.hbar * setup.atom.omega0 / setup.atom.c_light
    norm_drift = float(np.max(np.abs(series.norms - 1.0)))
    total = series.p_atom + series.p_photon
    mom_drift = float(np.max(np.abs(total - total[0]))) / unit
    v.add("norm_drift", norm_drift, 1e-10)
    v.add("momentum_drift", mom_drift, 1e-10)

    decay_window = (0.0, min(5.0, setup.t_final) / gamma0)
    surv = fit_decay(t, series.survival, decay_window)
    v.note("survival_rate_over_gamma0", surv.rate / gamma0)
    v.add("survival_rate_error", abs(surv.rate / gamma0 - 1.0), 0.02)

    fx = force.f_sim[:, 0]
    interior = slice(1, -1)
    if series.mean_p > 0:
        v.add("friction_sign_max_fx", float(np.max(fx[interior])), 0.0, bool(np.all(fx[interior] < 0)), "<")
        ratio = float(np.max(np.max(np.abs(force.f_sim[interior, 1:]), axis=1) / np.abs(fx[interior])))
        v.add("transverse_ratio", ratio, 1e-3)
        fwin = (0.5 / gamma0, min(3.0, setup.t_final) / gamma0)
        ffit = fit_decay(t, np.abs(fx), fwin)
        force.fit = ffit
        v.note("force_rate_over_gamma0", ffit.rate / gamma0)
        v.add("force_rate_error", abs(ffit.rate / gamma0 - 1.0), 0.05)
        cmp = compare_force(force, "analytic", fwin)
        sel = (t >= fwin[0] - 1e-12) & (t <= fwin[1] + 1e-12)
        v.note("force_ratio_sim_over_analytic", float(np.mean(fx[sel] / force.f_analytic_x[sel])))
        v.add("force_mean_relative_error", cmp.mean, 0.15)
    else:
        bound = 1e-6 * unit * gamma0
        v.add("stationary_force_max", float(np.max(np.abs(force.f_sim))) / (unit * gamma0), 1e-6,
              bool(np.max(np.abs(force.f_sim)) <= bound))
    return v


def with_resolution(setup: SimSetup, resolution) -> SimSetup:
    n_omega, n_theta, n_phi = resolution
    return replace(setup, n_omega=n_omega, n_theta=n_theta, n_phi=n_phi)
