"""Screen patterns for a two-path atom interferometer.

Each path is a paraxially propagated Gaussian slit mode; lengths are in
units of the slit width and propagation distance in units of the
Rayleigh-like length. A path register of dimension 3 carries a third mode,
the right path with a back-action kick, R'.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .hilbert import StateVector, contract, partial_trace

ATOM = "atom-path"
DEFAULT_WINDOW = 4.0


@dataclass(frozen=True)
class SlitGeometry:
    separation: float = 8.0
    zeta: float = 3.0
    width: float = 1.0

    def __post_init__(self):
        if not self.separation > 0:
            raise ConfigError(f"slit separation must be > 0, got {self.separation}")
        if not self.zeta >= 0:
            raise ConfigError(f"zeta must be >= 0, got {self.zeta}")
        if self.width != 1.0:
            raise ConfigError("slit width is the length unit and must be 1")


@dataclass(frozen=True)
class ScreenGrid:
    x_min: float = -30.0
    x_max: float = 30.0
    # odd so that x = 0 is a sample point of the default symmetric grid
    n: int = 2049

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ConfigError(f"grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"grid needs n >= 2 points, got {self.n}")

    @property
    def x(self) -> np.ndarray:
        i = np.arange(self.n)
        return self.x_min + (self.x_max - self.x_min) * i / (self.n - 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)


@dataclass(frozen=True, eq=False)
class PathField:
    grid: ScreenGrid
    psi_L: np.ndarray
    psi_R: np.ndarray
    kick: float = 0.0

    def __post_init__(self):
        for name in ("psi_L", "psi_R"):
            a = np.asarray(getattr(self, name), dtype=np.complex128)
            if a.shape != (self.grid.n,):
                raise ConfigError(f"{name} must have length {self.grid.n}")
            if not np.all(np.isfinite(a)):
                raise ConfigError(f"{name} has non-finite values")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def psi_R_kicked(self) -> np.ndarray:
        return self.psi_R * np.exp(1j * self.kick * self.grid.x)

    def modes(self, count: int) -> np.ndarray:
        """Spatial wavefunctions of the path basis states, shape (count, n)."""
        if count == 2:
            return np.array([self.psi_L, self.psi_R])
        if count == 3:
            return np.array([self.psi_L, self.psi_R, self.psi_R_kicked])
        raise ConfigError(f"path register must have dim 2 or 3, got {count}")


@dataclass(frozen=True, eq=False)
class ScreenPattern:
    """Density on the screen, with its split into single-path and cross parts.

    ``density = incoherent + Re(cross)`` pointwise; the split is what lets
    :func:`fringe_visibility` separate fringes from the slowly varying
    envelope.
    """

    grid: ScreenGrid
    density: np.ndarray
    label: str = "total"
    incoherent: np.ndarray | None = None
    cross: np.ndarray | None = None

    def __post_init__(self):
        d = np.asarray(self.density, dtype=np.float64)
        if d.shape != (self.grid.n,):
            raise ConfigError(f"density must have length {self.grid.n}")
        if d.min(initial=0.0) < -1e-12:
            raise ConfigError("pattern density is negative beyond the numerical floor")
        d.setflags(write=False)
        object.__setattr__(self, "density", d)

    def integral(self) -> float:
        return float(np.sum(self.density) * self.grid.dx)

    def relabel(self, label: str) -> ScreenPattern:
        return replace(self, label=label)

    def __add__(self, other: ScreenPattern) -> ScreenPattern:
        if other.grid != self.grid:
            raise ConfigError("patterns live on different grids")
        inc = cross = None
        if self.incoherent is not None and other.incoherent is not None:
            inc = self.incoherent + other.incoherent
            cross = self.cross + other.cross
        return ScreenPattern(self.grid, self.density + other.density, f"{self.label}+{other.label}", inc, cross)


def gaussian_slit_field(geom: SlitGeometry, grid: ScreenGrid, kick: float = 0.0) -> PathField:
    x = grid.x
    q = 1.0 + 1j * geom.zeta
    half = geom.separation / 2.0
    pre = 1.0 / np.sqrt(q)
    psi_L = pre * np.exp(-((x + half) ** 2) / (2.0 * geom.width**2 * q))
    psi_R = pre * np.exp(-((x - half) ** 2) / (2.0 * geom.width**2 * q))
    return PathField(grid, psi_L, psi_R, kick)


def envelope_width(grid: ScreenGrid, psi: np.ndarray) -> float:
    """Gaussian amplitude width: sqrt(2 * variance of |psi|^2)."""
    w = np.abs(psi) ** 2
    x = grid.x
    mean = np.sum(w * x) / np.sum(w)
    var = np.sum(w * (x - mean) ** 2) / np.sum(w)
    return math.sqrt(2.0 * var)


def _parts(field: PathField, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Single-path and cross parts of sum_ab rho_ab phi_a phi_b^*."""
    phi = field.modes(rho.shape[0])
    inc = np.einsum("a,ax->x", np.real(np.diag(rho)), np.abs(phi) ** 2)
    cross = np.zeros(field.grid.n, dtype=np.complex128)
    k = rho.shape[0]
    for a in range(k):
        for b in range(a + 1, k):
            cross += 2.0 * rho[a, b] * phi[a] * np.conj(phi[b])
    return inc, cross


def _pattern(field: PathField, rho: np.ndarray, scale: float, label: str) -> ScreenPattern:
    inc, cross = _parts(field, rho)
    dens = inc + np.real(cross)
    # rounding can leave |a + b|^2 a hair below zero at dark fringes
    floor = -1e-13 * max(inc.max(initial=0.0), 1e-300)
    dens = np.where((dens < 0) & (dens >= floor), 0.0, dens)
    return ScreenPattern(field.grid, dens / scale, label, inc / scale, cross / scale)


def _grid_norm(field: PathField, rho: np.ndarray) -> float:
    inc, cross = _parts(field, rho)
    z = float(np.sum(inc + np.real(cross)) * field.grid.dx)
    if z <= 0.0:
        raise ConfigError("pattern has zero total weight on the grid")
    return z


def three_term_expansion(field: PathField, cL: complex, cR: complex) -> np.ndarray:
    """|cL psiL|^2 + |cR psiR|^2 + 2 Re[(cL psiL)^* cR psiR], unnormalized."""
    a = cL * field.psi_L
    b = cR * field.psi_R
    return np.abs(a) ** 2 + np.abs(b) ** 2 + 2.0 * np.real(np.conj(a) * b)


def pattern_pure(field: PathField, cL: complex, cR: complex, label: str = "total") -> ScreenPattern:
    if abs(abs(cL) ** 2 + abs(cR) ** 2 - 1.0) > 1e-9:
        raise ConfigError(f"path amplitudes must satisfy |cL|^2+|cR|^2 = 1, got {abs(cL)**2 + abs(cR)**2}")
    c = np.array([cL, cR], dtype=np.complex128)
    rho = np.outer(c, c.conj())
    return _pattern(field, rho, _grid_norm(field, rho), label)


def _atom_rho(joint: StateVector) -> np.ndarray:
    if not joint.has(ATOM):
        raise ConfigError(f"state has no {ATOM!r} factor")
    return partial_trace(joint, [ATOM]).entries


def pattern_ignore(field: PathField, joint: StateVector, label: str = "total") -> ScreenPattern:
    rho = _atom_rho(joint)
    return _pattern(field, rho, _grid_norm(field, rho), label)


def pattern_conditional(
    field: PathField, joint: StateVector, detector_outcome: StateVector, label: str = "cond"
) -> ScreenPattern:
    """Pattern of atoms correlated with one detector outcome vector.

    Scaled by the same constant as the ignored pattern of ``joint``, so the
    conditional patterns of a complete orthonormal outcome set add up to it
    pointwise and each integrates to (close to) the outcome's Born weight.
    """
    rho_all = _atom_rho(joint)
    expected = sorted(n for n in joint.names if n != ATOM)
    if sorted(detector_outcome.names) != expected:
        raise ConfigError(
            f"outcome factors {sorted(detector_outcome.names)} do not match detector factors {expected}"
        )
    c = contract(joint.without_records(), detector_outcome).amps
    rho = np.outer(c, c.conj())
    return _pattern(field, rho, _grid_norm(field, rho_all), label)


def pattern_component(
    field: PathField, joint: StateVector, component: StateVector, label: str
) -> ScreenPattern:
    """Pattern carried by one (unnormalized) branch component of ``joint``."""
    rho = _atom_rho(component)
    return _pattern(field, rho, _grid_norm(field, _atom_rho(joint)), label)


def cross_pattern(field: PathField, rho: np.ndarray, joint: StateVector) -> np.ndarray:
    """Density of an arbitrary (possibly non-Hermitian-diagonal) path operator."""
    phi = field.modes(rho.shape[0])
    dens = np.einsum("ab,ax,bx->x", rho, phi, np.conj(phi))
    return np.real(dens) / _grid_norm(field, _atom_rho(joint))


def fringe_visibility(p: ScreenPattern, window: float = DEFAULT_WINDOW) -> float:
    """Best local two-beam contrast over |x| <= window.

    Locally the density oscillates between incoherent +/- |cross|, so
    (max - min) / (max + min) = |cross| / incoherent there; the largest
    value across the window is returned. Patterns without a stored split
    fall back to the raw (max - min) / (max + min) of the density.
    """
    x = p.grid.x
    sel = np.abs(x) <= window
    if np.count_nonzero(sel) < 2:
        raise ConfigError(f"visibility window |x| <= {window} holds fewer than 2 grid points")
    if p.incoherent is None:
        d = p.density[sel]
        hi, lo = d.max(), d.min()
        return float((hi - lo) / (hi + lo)) if hi + lo > 0 else 0.0
    inc = p.incoherent[sel]
    amp = np.abs(p.cross[sel])
    floor = 1e-300 + 1e-12 * inc.max(initial=0.0)
    ok = inc > floor
    if not np.any(ok):
        return 0.0
    return float(min(1.0, np.max(amp[ok] / inc[ok])))


def coherence_visibility(joint: StateVector) -> float:
    """2|rho_LR| / (rho_LL + rho_RR) of the reduced path matrix."""
    rho = _atom_rho(joint)
    if rho.shape != (2, 2):
        raise ConfigError("coherence visibility needs a two-mode path register (no back-action kick)")
    den = float(np.real(rho[0, 0] + rho[1, 1]))
    if den == 0.0:
        raise ConfigError("state has zero norm")
    return float(2.0 * abs(rho[0, 1]) / den)
