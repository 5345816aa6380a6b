"""Layered ``section.key = value`` run configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .analytic import SHIFT_MODES, ZERO_SHIFT
from .experiments import SimSetup
from .modegrid import ISOTROPIC
from .params import AtomParams, ParameterError, derive_gamma0, dipole_from_gamma0

COUPLING_RTOL = 1e-12
METRICS = ("rate_error", "force_error")
SOURCES = ("simulation", "analytic")


class ConfigError(ParameterError):
    pass


@dataclass(frozen=True)
class GridConfig:
    window: str = "auto"
    omega_min: float | None = None
    omega_max: float | None = None
    n_omega: int = 400
    n_theta: int = 16
    n_phi: int = 16
    halfwidth: float = 20.0
    guard: float = 2.0
    skirt: float = 1.5
    orientation: object = ISOTROPIC


@dataclass(frozen=True)
class PackConfig:
    beta: float = 0.01
    rel_width: float = 0.1
    n_samples: int = 7


@dataclass(frozen=True)
class RunOptions:
    t_final: float = 5.0
    stride: float = 0.05
    shift_mode: str = ZERO_SHIFT
    safety: float = 0.05
    workers: int | None = None
    t_star: float = 1.0
    betas: tuple = (0.002, 0.005, 0.008, 0.01)
    ladder: tuple = ((100, 8, 8), (200, 12, 12), (400, 16, 16))
    metric: str = "rate_error"
    source: str = "simulation"


@dataclass(frozen=True)
class RunConfig:
    atom: AtomParams
    grid: GridConfig = GridConfig()
    pack: PackConfig = PackConfig()
    run: RunOptions = RunOptions()

    @property
    def gamma0(self) -> float:
        return derive_gamma0(self.atom)

    def setup(self) -> SimSetup:
        window = None if self.grid.window == "auto" else (self.grid.omega_min, self.grid.omega_max)
        return SimSetup(
            atom=self.atom,
            n_omega=self.grid.n_omega,
            n_theta=self.grid.n_theta,
            n_phi=self.grid.n_phi,
            halfwidth=self.grid.halfwidth,
            guard=self.grid.guard,
            skirt=self.grid.skirt,
            window=window,
            orientation=self.grid.orientation,
            rel_width=self.pack.rel_width,
            n_samples=self.pack.n_samples,
            t_final=self.run.t_final,
            stride=self.run.stride,
            safety=self.run.safety,
            workers=self.run.workers,
        )


# value parsers -------------------------------------------------------------

def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _int(s):
    return int(s)


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


def _float_list(s):
    return tuple(_float(x) for x in s.split(",") if x.strip())


def _ladder(s):
    out = []
    for item in s.split(","):
        parts = item.strip().lower().split("x")
        if len(parts) != 3:
            raise ValueError(f"grid spec {item.strip()!r} is not n_omega x n_theta x n_phi")
        out.append(tuple(int(p) for p in parts))
    return tuple(out)


def _orientation(s):
    if s == ISOTROPIC:
        return s
    parts = tuple(_float(x) for x in s.split(","))
    if len(parts) != 3:
        raise ValueError("expected 'isotropic' or three comma-separated components")
    return parts


def _optional(parse):
    def wrapped(s):
        return None if s.lower() == "none" else parse(s)
    return wrapped


REQUIRED = object()

# key -> (parser, default); defaults of REQUIRED must be present
SCHEMA = {
    "atom": {
        "omega0": (_float, REQUIRED),
        "mass": (_float, REQUIRED),
        "dipole_mag": (_float, None),
        "gamma0": (_float, None),
        "cutoff_omega": (_float, None),
        "c_light": (_float, 1.0),
        "hbar": (_float, 1.0),
    },
    "grid": {
        "window": (_choice("auto", "explicit"), "auto"),
        "omega_min": (_float, None),
        "omega_max": (_float, None),
        "n_omega": (_int, 400),
        "n_theta": (_int, 16),
        "n_phi": (_int, 16),
        "halfwidth": (_float, 20.0),
        "guard": (_float, 2.0),
        "skirt": (_float, 1.5),
        "orientation": (_orientation, ISOTROPIC),
    },
    "pack": {
        "beta": (_float, 0.01),
        "rel_width": (_float, 0.1),
        "n_samples": (_int, 7),
    },
    "run": {
        "t_final": (_float, 5.0),
        "stride": (_float, 0.05),
        "shift_mode": (_choice(*SHIFT_MODES), ZERO_SHIFT),
        "safety": (_float, 0.05),
        "workers": (_optional(_int), None),
        "t_star": (_float, 1.0),
        "betas": (_float_list, RunOptions.betas),
        "ladder": (_ladder, RunOptions.ladder),
        "metric": (_choice(*METRICS), "rate_error"),
        "source": (_choice(*SOURCES), "simulation"),
    },
}


def _read_pairs(text: str) -> dict:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.count(".") != 1:
            raise ConfigError(f"line {lineno}: key {key!r} is not of the form section.key")
        if key in pairs:
            raise ConfigError(f"{key}: given more than once")
        pairs[key] = value
    return pairs


def parse_config(text: str) -> RunConfig:
    """Parse and materialize a run configuration.

    Unknown keys, missing required keys and unparsable values raise
    :class:`ConfigError` naming the key path. Exactly one of
    ``atom.gamma0`` / ``atom.dipole_mag`` is needed; giving both is accepted
    only when they agree to 1e-12.
    """
    pairs = _read_pairs(text)
    unknown = sorted(k for k in pairs if k.split(".")[1] not in SCHEMA.get(k.split(".")[0], {}))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")

    values = {}
    missing = []
    for section, keys in SCHEMA.items():
        sec = values.setdefault(section, {})
        for key, (parse, default) in keys.items():
            path = f"{section}.{key}"
            if path in pairs:
                try:
                    sec[key] = parse(pairs[path])
                except ValueError as exc:
                    raise ConfigError(f"{path}: cannot parse {pairs[path]!r} ({exc})") from None
            elif default is REQUIRED:
                missing.append(path)
            else:
                sec[key] = default
    a = values["atom"]
    if a.get("dipole_mag") is None and a.get("gamma0") is None:
        missing.append("atom.dipole_mag|atom.gamma0")
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    c, hbar = a["c_light"], a["hbar"]
    if a["dipole_mag"] is None:
        dipole = dipole_from_gamma0(a["gamma0"], a["omega0"], c, hbar)
    else:
        dipole = a["dipole_mag"]
        if a["gamma0"] is not None:
            implied = derive_gamma0(AtomParams(a["omega0"], a["mass"], dipole, c_light=c, hbar=hbar))
            if not math.isclose(implied, a["gamma0"], rel_tol=COUPLING_RTOL):
                raise ConfigError(
                    f"atom.gamma0, atom.dipole_mag: overdetermined coupling "
                    f"(dipole_mag implies gamma0={implied!r}, got {a['gamma0']!r})"
                )
    atom = AtomParams(a["omega0"], a["mass"], dipole, cutoff_omega=a["cutoff_omega"], c_light=c, hbar=hbar)

    g = values["grid"]
    if g["window"] == "explicit":
        gaps = [f"grid.{k}" for k in ("omega_min", "omega_max") if g[k] is None]
        if gaps:
            raise ConfigError(f"missing required key(s) for explicit window: {', '.join(gaps)}")
    cfg = RunConfig(atom=atom, grid=GridConfig(**g), pack=PackConfig(**values["pack"]), run=RunOptions(**values["run"]))
    _check_ranges(cfg)
    return cfg


def _check_ranges(cfg: RunConfig) -> None:
    checks = [
        ("atom.omega0", cfg.atom.omega0 > 0),
        ("atom.mass", cfg.atom.mass > 0),
        ("atom.c_light", cfg.atom.c_light > 0),
        ("atom.hbar", cfg.atom.hbar > 0),
        ("atom.dipole_mag", cfg.atom.dipole_mag > 0),
        ("pack.beta", cfg.pack.beta >= 0),
        ("pack.rel_width", cfg.pack.rel_width >= 0),
        ("pack.n_samples", cfg.pack.n_samples >= 1),
        ("run.t_final", cfg.run.t_final > 0),
        ("run.stride", cfg.run.stride > 0),
        ("run.safety", cfg.run.safety > 0),
        ("run.workers", cfg.run.workers is None or cfg.run.workers >= 1),
        ("grid.skirt", cfg.grid.skirt >= 0),
    ]
    bad = [k for k, ok in checks if not ok]
    if bad:
        raise ConfigError(f"out-of-range value(s): {', '.join(bad)}")


def _emit(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, tuple) and value and isinstance(value[0], tuple):
        return ", ".join("x".join(str(n) for n in r) for r in value)
    if isinstance(value, tuple):
        return ", ".join(_emit(float(v)) for v in value)
    return str(value)


def format_config(cfg: RunConfig) -> str:
    """Emit the materialized config; ``parse_config`` reads it back equal."""
    a = cfg.atom
    lines = [
        f"atom.omega0 = {_emit(a.omega0)}",
        f"atom.mass = {_emit(a.mass)}",
        f"atom.dipole_mag = {_emit(a.dipole_mag)}",
        f"atom.cutoff_omega = {_emit(a.cutoff_omega)}",
        f"atom.c_light = {_emit(a.c_light)}",
        f"atom.hbar = {_emit(a.hbar)}",
    ]
    for name, block in (("grid", cfg.grid), ("pack", cfg.pack), ("run", cfg.run)):
        for f in fields(block):
            value = getattr(block, f.name)
            if value is None and f.name != "workers":
                continue
            lines.append(f"{name}.{f.name} = {_emit(value)}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def with_overrides(cfg: RunConfig, **blocks) -> RunConfig:
    """``with_overrides(cfg, run={"t_final": 10.0})``."""
    return replace(cfg, **{k: replace(getattr(cfg, k), **v) for k, v in blocks.items()})
