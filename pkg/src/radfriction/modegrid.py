"""Finite discretization of the vacuum field modes.

Frequencies are cell midpoints on a uniform mesh; directions are
Gauss-Legendre nodes in the polar cosine times uniform azimuths. The
quantization box never appears: couplings are normalized to the mode
continuum, so ``|g|^2`` already contains the density ``omega^2/((2 pi)^3 c^3)``
and the cell measure.

Frequencies can optionally extend past the nominal window by a *skirt* in
which couplings roll off smoothly to zero. A hard band edge makes the
emitted-photon momentum ring at the band-edge frequency; the skirt removes
that artifact without touching the modes inside the window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._fmt import write_csv
from .params import AtomParams, ParameterError, check_atom, derive_gamma0

ISOTROPIC = "isotropic"
_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """Arrays over k-cells, index order (omega, polar, azimuth).

    ``pol`` has shape (n, 2, 3): two orthonormal polarizations per cell.
    ``taper`` is 1 inside the window and rolls off in the skirt.
    """

    k_vec: np.ndarray
    omega: np.ndarray
    pol: np.ndarray
    weight: np.ndarray
    taper: np.ndarray
    i_omega: np.ndarray
    window: tuple[float, float]
    resolution: tuple[int, int, int]
    n_skirt: int
    d_omega: float
    c_light: float
    axis: str

    def __len__(self) -> int:
        return self.omega.size

    @property
    def k_hat(self) -> np.ndarray:
        return self.k_vec * (self.c_light / self.omega)[:, None]

    @property
    def in_window(self) -> np.ndarray:
        return self.taper == 1.0

    def mode(self, j: int) -> dict:
        return {
            "k_vec": self.k_vec[j],
            "omega": self.omega[j],
            "pol1": self.pol[j, 0],
            "pol2": self.pol[j, 1],
            "weight": self.weight[j],
        }


def polarization_basis(k_hat: np.ndarray) -> np.ndarray:
    """Two transverse unit vectors per direction, shape (n, 2, 3).

    pol1 = normalize(k x a) with a = z, or x near the z poles; pol2 = k x pol1.
    """
    k_hat = np.atleast_2d(k_hat)
    ref = np.zeros_like(k_hat)
    near_pole = np.abs(k_hat[:, 2]) > 0.9
    ref[~near_pole, 2] = 1.0
    ref[near_pole, 0] = 1.0
    p1 = np.cross(k_hat, ref)
    p1 /= np.linalg.norm(p1, axis=1)[:, None]
    p2 = np.cross(k_hat, p1)
    return np.stack([p1, p2], axis=1)


def direction_set(n_theta: int, n_phi: int, axis: str = "x"):
    """Unit directions and solid-angle weights (sum 4 pi)."""
    u, wu = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    s = np.sqrt(1.0 - u * u)
    along = np.repeat(u, n_phi)
    perp1 = (s[:, None] * np.cos(phi)[None, :]).ravel()
    perp2 = (s[:, None] * np.sin(phi)[None, :]).ravel()
    dirs = np.empty((n_theta * n_phi, 3))
    a = _AXES[axis]
    dirs[:, a] = along
    dirs[:, (a + 1) % 3] = perp1
    dirs[:, (a + 2) % 3] = perp2
    weights = np.repeat(wu, n_phi) * (2.0 * np.pi / n_phi)
    return dirs, weights


def build_grid(
    window: tuple[float, float],
    n_omega: int,
    n_theta: int,
    n_phi: int,
    c_light: float = 1.0,
    *,
    skirt: float = 0.0,
    axis: str = "x",
) -> ModeGrid:
    """Build the mode grid.

    ``skirt`` is the width of the roll-off band on each side, as a fraction of
    the window half-width; skirt cells use the same frequency spacing.
    ``axis`` is the polar axis of the direction quadrature.
    """
    omega_min, omega_max = (float(w) for w in window)
    if not (omega_min > 0 and omega_max > omega_min and math.isfinite(omega_max)):
        raise ParameterError(f"invalid frequency window {window!r}")
    if min(n_omega, n_theta, n_phi) < 2:
        raise ParameterError("n_omega, n_theta and n_phi must all be >= 2")
    if n_theta % 2 or n_phi % 2:
        raise ParameterError("n_theta and n_phi must be even (antipodal symmetry)")
    if axis not in _AXES:
        raise ParameterError(f"axis must be one of x, y, z; got {axis!r}")
    if skirt < 0 or c_light <= 0:
        raise ParameterError("skirt must be >= 0 and c_light > 0")

    d_omega = (omega_max - omega_min) / n_omega
    n_skirt = int(round(skirt * n_omega / 2))
    cells = np.arange(-n_skirt, n_omega + n_skirt)
    omega_1d = omega_min + d_omega * (cells + 0.5)
    if omega_1d[0] <= 0:
        raise ParameterError("skirt extends below zero frequency")
    # raised-cosine roll-off, measured from the window edge to the skirt edge
    beyond = np.maximum(np.maximum(-cells - 0.5, cells + 0.5 - n_omega), 0.0)
    taper_1d = np.ones_like(omega_1d)
    if n_skirt:
        taper_1d = np.where(beyond > 0, np.cos(0.5 * np.pi * beyond / n_skirt) ** 2, 1.0)

    dirs, dir_w = direction_set(n_theta, n_phi, axis)
    n_dir = len(dir_w)
    omega = np.repeat(omega_1d, n_dir)
    k_vec = (np.repeat(omega_1d / c_light, n_dir)[:, None]) * np.tile(dirs, (omega_1d.size, 1))
    pol = np.tile(polarization_basis(dirs), (omega_1d.size, 1, 1))
    weight = d_omega * np.tile(dir_w, omega_1d.size)
    return ModeGrid(
        k_vec=k_vec,
        omega=omega,
        pol=pol,
        weight=weight,
        taper=np.repeat(taper_1d, n_dir),
        i_omega=np.repeat(cells, n_dir),
        window=(omega_min, omega_max),
        resolution=(n_omega, n_theta, n_phi),
        n_skirt=n_skirt,
        d_omega=d_omega,
        c_light=c_light,
        axis=axis,
    )


def default_window(atom: AtomParams, beta_max: float = 0.0, *, halfwidth: float = 20.0, guard: float = 2.0):
    """``omega0 -/+ (halfwidth * Gamma0 + guard * beta_max * omega0)``."""
    gamma0 = derive_gamma0(atom)
    half = halfwidth * gamma0 + guard * beta_max * atom.omega0
    return (atom.omega0 - half, atom.omega0 + half)


@dataclass(frozen=True, eq=False)
class Couplings:
    """Effective coupling energies ``g[j, p]`` for cell j, polarization p."""

    grid: ModeGrid
    g: np.ndarray
    orientation: object

    def __len__(self) -> int:
        return self.g.size

    @property
    def g2(self) -> np.ndarray:
        return np.abs(self.g) ** 2

    @property
    def g2_cell(self) -> np.ndarray:
        return self.g2.sum(axis=1)


def _orientation_factor(grid: ModeGrid, orientation) -> np.ndarray:
    if isinstance(orientation, str):
        if orientation != ISOTROPIC:
            raise ParameterError(f"unknown orientation {orientation!r}")
        return np.full((len(grid), 2), 1.0 / math.sqrt(3.0))
    mu_hat = np.asarray(orientation, dtype=float)
    if mu_hat.shape != (3,) or abs(np.linalg.norm(mu_hat) - 1.0) > 1e-12:
        raise ParameterError(f"orientation must be a unit 3-vector, got {orientation!r}")
    return grid.pol @ mu_hat


def couple_dipole(grid: ModeGrid, atom: AtomParams, orientation=ISOTROPIC) -> Couplings:
    """Continuum-normalized couplings,
    ``|g|^2 = (2 pi hbar omega0^2/omega) |mu.eps|^2 omega^2/((2 pi)^3 c^3) * weight``.

    ``ISOTROPIC`` replaces ``|mu.eps|^2`` by ``|mu|^2/3``.
    """
    check_atom(atom)
    proj = _orientation_factor(grid, orientation)
    c = atom.c_light
    base = (
        2.0 * np.pi * atom.hbar * atom.omega0**2 / grid.omega
        * grid.omega**2 / ((2.0 * np.pi) ** 3 * c**3)
        * grid.weight
        * grid.taper
    )
    g = 1j * np.sqrt(base)[:, None] * (atom.dipole_mag * proj)
    return Couplings(grid=grid, g=g, orientation=orientation)


def detunings(grid: ModeGrid, atom: AtomParams, p0: float, *, b_r: float = 0.0) -> np.ndarray:
    """Energy mismatch (angular frequency) of ``|p0 - hbar k, G, 1_k>`` against
    ``|p0, E, 0>``, including recoil and Doppler terms.

    Per cell: ``omega + hbar k^2/(2m) - k_x p0/m - omega0 - b_r/hbar``.
    """
    k2 = (grid.omega / grid.c_light) ** 2
    return (
        grid.omega
        + atom.hbar * k2 / (2.0 * atom.mass)
        - grid.k_vec[:, 0] * p0 / atom.mass
        - atom.omega0
        - b_r / atom.hbar
    )


def golden_rule_rate(coupled: Couplings, atom: AtomParams) -> float:
    """Discrete golden-rule decay rate ``2 pi/hbar^2 sum |g|^2 K(omega - omega0)``.

    K is a unit-area hat function of half-width one frequency spacing, i.e.
    linear interpolation of the grid's spectral density at ``omega0``.
    """
    grid = coupled.grid
    lo = grid.omega.min() - 0.5 * grid.d_omega
    hi = grid.omega.max() + 0.5 * grid.d_omega
    if not lo <= atom.omega0 <= hi:
        raise ParameterError(f"omega0={atom.omega0} lies outside the grid band [{lo}, {hi}]")
    kernel = np.maximum(0.0, 1.0 - np.abs(grid.omega - atom.omega0) / grid.d_omega) / grid.d_omega
    return 2.0 * np.pi / atom.hbar**2 * math.fsum(coupled.g2_cell * kernel)


def coupling_sum(coupled: Couplings, band: tuple[float, float] | None = None) -> float:
    """``sum |g|^2`` over cells whose frequency lies in ``band`` (default: all)."""
    om = coupled.grid.omega
    mask = np.ones(om.shape, bool) if band is None else (om >= band[0]) & (om <= band[1])
    return math.fsum(coupled.g2_cell[mask])


def export_grid_csv(coupled: Couplings, path) -> None:
    grid = coupled.grid
    rows = np.column_stack([grid.k_vec, grid.omega, grid.weight, coupled.g2_cell])
    write_csv(path, ["kx", "ky", "kz", "omega", "weight", "g2"], rows)
