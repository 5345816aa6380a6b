"""Atom parameters, natural units and regime bookkeeping.

Everything internal uses hbar = 1. The ``hbar`` field is kept on
:class:`AtomParams` so formulas can be written with it explicitly and
dimensional audits can vary it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


class ParameterError(ValueError):
    """Raised when physical parameters violate a hard invariant."""


@dataclass(frozen=True)
class AtomParams:
    """Two-level atom in vacuum.

    The energy zero is put on the ground state, so only ``omega0`` enters.
    ``cutoff_omega`` defaults to ``100 * omega0``.
    """

    omega0: float
    mass: float
    dipole_mag: float
    cutoff_omega: float | None = None
    c_light: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.cutoff_omega is None:
            object.__setattr__(self, "cutoff_omega", 100.0 * self.omega0)

    @property
    def gamma0(self) -> float:
        return derive_gamma0(self)

    def replace(self, **changes) -> "AtomParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class SimScales:
    gamma_ratio: float
    recoil_param: float
    beta: float


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __len__(self) -> int:
        return len(self.errors) + len(self.warnings)

    def raise_if_errors(self) -> None:
        if self.errors:
            raise ParameterError("; ".join(self.errors))


def _hard_errors(atom: AtomParams) -> list[str]:
    errors = []
    for name in ("omega0", "mass", "c_light", "hbar"):
        value = getattr(atom, name)
        if not (math.isfinite(value) and value > 0):
            errors.append(f"{name} must be positive and finite, got {value!r}")
    if not (math.isfinite(atom.dipole_mag) and atom.dipole_mag >= 0):
        errors.append(f"dipole_mag must be non-negative, got {atom.dipole_mag!r}")
    if not math.isfinite(atom.cutoff_omega) or atom.cutoff_omega <= atom.omega0:
        errors.append(
            f"cutoff below transition frequency: cutoff_omega={atom.cutoff_omega!r} "
            f"must exceed omega0={atom.omega0!r}"
        )
    return errors


def check_atom(atom: AtomParams) -> AtomParams:
    errors = _hard_errors(atom)
    if errors:
        raise ParameterError("; ".join(errors))
    return atom


def derive_gamma0(atom: AtomParams) -> float:
    """Spontaneous emission rate of the atom at rest,
    ``4 |mu|^2 omega0^3 / (3 hbar c^3)``."""
    check_atom(atom)
    return 4.0 * atom.dipole_mag**2 * atom.omega0**3 / (3.0 * atom.hbar * atom.c_light**3)


def dipole_from_gamma0(gamma0: float, omega0: float, c_light: float = 1.0, hbar: float = 1.0) -> float:
    """Invert :func:`derive_gamma0` for the dipole magnitude."""
    if gamma0 < 0:
        raise ParameterError(f"gamma0 must be non-negative, got {gamma0!r}")
    return math.sqrt(3.0 * hbar * c_light**3 * gamma0 / (4.0 * omega0**3))


def dimensionless_groups(atom: AtomParams, mean_p: float) -> SimScales:
    check_atom(atom)
    c = atom.c_light
    return SimScales(
        gamma_ratio=derive_gamma0(atom) / atom.omega0,
        recoil_param=atom.hbar * atom.omega0 / (atom.mass * c * c),
        beta=abs(mean_p) / (atom.mass * c),
    )


def validate_params(
    atom: AtomParams,
    scales: SimScales | None = None,
    *,
    gamma_ratio_max: float = 0.05,
    recoil_max: float = 0.05,
    beta_max: float = 0.05,
) -> ValidationReport:
    """Collect hard errors and soft regime warnings without raising.

    Hard errors are non-positive physical quantities and a cutoff at or below
    the transition frequency (the level-shift logarithm is then undefined).
    Warnings flag dimensionless groups above their thresholds, where the
    weak-coupling / nonrelativistic treatment stops being trustworthy.
    """
    report = ValidationReport(errors=_hard_errors(atom))
    if scales is None:
        if report.errors:
            return report
        scales = dimensionless_groups(atom, 0.0)
    for name, value, limit in (
        ("gamma_ratio", scales.gamma_ratio, gamma_ratio_max),
        ("recoil_param", scales.recoil_param, recoil_max),
        ("beta", scales.beta, beta_max),
    ):
        if not math.isfinite(value) or value < 0:
            report.errors.append(f"{name} must be a non-negative number, got {value!r}")
        elif value > limit:
            report.warnings.append(f"{name}={value:.3g} exceeds regime threshold {limit:.3g}")
    return report


def toy_atom(
    gamma_ratio: float = 1e-2,
    recoil_param: float = 1e-2,
    *,
    omega0: float = 1.0,
    c_light: float = 1.0,
    hbar: float = 1.0,
    cutoff_ratio: float = 100.0,
) -> AtomParams:
    """Atom in the desk-scale toy regime (all groups ~1e-2 by default)."""
    gamma0 = gamma_ratio * omega0
    return AtomParams(
        omega0=omega0,
        mass=hbar * omega0 / (recoil_param * c_light**2),
        dipole_mag=dipole_from_gamma0(gamma0, omega0, c_light, hbar),
        cutoff_omega=cutoff_ratio * omega0,
        c_light=c_light,
        hbar=hbar,
    )
