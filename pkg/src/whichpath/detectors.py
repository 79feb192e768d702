"""Which-path detector candidates coupled to the right arm of the interferometer.

Each ``couple_*`` map takes a pure path state over ``atom-path`` (basis
L, R) and returns the entangled atom-detector state. When a detector has a
nonzero back-action kick the path register grows to three modes
(L, R, R') so that kicked and unkicked right-path amplitudes stay distinct.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, ResourceError
from .hilbert import (
    Factor,
    Record,
    StateVector,
    basis_state,
    contract,
    ket,
    make_rng,
    _haar,
    _orthogonal_partner,
    overlap_pair,
    partial_trace,
    project,
    remap_records,
    tensor,
)
from .labels import COLD, HOT
from .optics import ATOM

L, R, R_KICKED = 0, 1, 2
MAX_DIM = 2**20
ENV = "env-ext"


def atom_state(cL: complex, cR: complex) -> StateVector:
    return ket(ATOM, [cL, cR])


def _check_atom(atom: StateVector) -> np.ndarray:
    if atom.names != (ATOM,) or atom.dims != (2,):
        raise ConfigError(f"coupling expects a bare two-mode {ATOM!r} state, got {atom!r}")
    if abs(atom.norm() - 1.0) > 1e-9:
        raise ConfigError(f"atom state must be normalized, norm = {atom.norm()}")
    return atom.amps


def _path_dim(kick: float) -> int:
    return 3 if kick != 0.0 else 2


def _right_prime(kick: float) -> int:
    return R_KICKED if kick != 0.0 else R


@dataclass(frozen=True)
class QubitDetector:
    backaction_kick: float = 0.0
    efficiency: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError(f"qubit efficiency must lie in [0, 1], got {self.efficiency}")


@dataclass(frozen=True)
class ReadoutBasis:
    """Orthonormal qubit basis from Bloch angles; theta=pi/2, phi=0 is {|+>, |->}."""

    theta: float = 0.0
    phi: float = 0.0

    @classmethod
    def computational(cls) -> ReadoutBasis:
        return cls(0.0, 0.0)

    @classmethod
    def eraser(cls) -> ReadoutBasis:
        return cls(math.pi / 2, 0.0)

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        e = np.exp(1j * self.phi)
        return np.array([c, e * s]), np.array([s, -e * c])

    def labels(self) -> tuple[str, str]:
        if self.theta == 0.0 and self.phi == 0.0:
            return "0", "1"
        if self.theta == math.pi / 2 and self.phi == 0.0:
            return "+", "-"
        if self.theta == math.pi / 2 and self.phi == math.pi / 2:
            return "+i", "-i"
        return "b0", "b1"


@dataclass(frozen=True)
class MoleculeDetector:
    alpha: float = math.sqrt(0.1)
    beta: float = math.sqrt(0.9)
    overlap_c: float = 0.0
    mol_dim: int = 8
    seed: int = 0
    backaction_kick: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("molecule amplitudes alpha, beta must be nonnegative")
        if abs(self.alpha**2 + self.beta**2 - 1.0) > 1e-9:
            raise ConfigError(f"alpha^2 + beta^2 must be 1, got {self.alpha**2 + self.beta**2}")
        if not 0.0 <= self.overlap_c <= 1.0:
            raise ConfigError(f"overlap_c must lie in [0, 1], got {self.overlap_c}")
        if self.mol_dim < 2:
            raise ConfigError("mol_dim must be >= 2")

    @classmethod
    def from_efficiency(cls, efficiency: float, **kw) -> MoleculeDetector:
        if not 0.0 <= efficiency <= 1.0:
            raise ConfigError(f"efficiency must lie in [0, 1], got {efficiency}")
        return cls(alpha=math.sqrt(efficiency), beta=math.sqrt(1.0 - efficiency), **kw)

    def states(self) -> tuple[StateVector, StateVector]:
        """(unbumped, bumped) molecule states."""
        return overlap_pair(self.mol_dim, self.overlap_c, self.seed, name="molecule")


@dataclass(frozen=True)
class Bolometer:
    n_molecules: int = 8
    p_hit: float = 0.3
    mol_dim: int = 2
    ext_dim: int = 2
    ext_overlap_kappa: float = 0.0
    seed: int = 0
    backaction_kick: float = 0.0

    def __post_init__(self):
        if int(self.n_molecules) != self.n_molecules or self.n_molecules < 1:
            raise ConfigError("n_molecules must be an integer >= 1")
        if not 0.0 < self.p_hit <= 1.0:
            raise ConfigError(f"p_hit must lie in (0, 1], got {self.p_hit}")
        if self.mol_dim < 2 or self.ext_dim < 2:
            raise ConfigError("mol_dim and ext_dim must be >= 2")
        if not 0.0 <= self.ext_overlap_kappa <= 1.0:
            raise ConfigError(f"ext_overlap_kappa must lie in [0, 1], got {self.ext_overlap_kappa}")

    @property
    def molecule_names(self) -> list[str]:
        return [f"mol-{k}" for k in range(1, self.n_molecules + 1)]

    def hit_amplitudes(self) -> np.ndarray:
        """b_n for a first hit at molecule n = 1..N (single-scattering ladder)."""
        n = np.arange(1, self.n_molecules + 1)
        return np.sqrt(self.p_hit * (1.0 - self.p_hit) ** (n - 1))

    def miss_amplitude(self) -> float:
        return math.sqrt((1.0 - self.p_hit) ** self.n_molecules)

    def site_states(self, k: int) -> tuple[StateVector, StateVector]:
        """(unbumped, bumped) states of molecule k (1-based); always orthogonal."""
        return overlap_pair(self.mol_dim, 0.0, site_seed(self.seed, k), name=f"mol-{k}")


def site_seed(seed: int, k: int) -> int:
    """Seed of bolometer molecule ``k``; derived deterministically from the detector seed."""
    return int(make_rng(seed, "site", k).integers(0, 2**63))


def detector_efficiency(det: MoleculeDetector | Bolometer) -> float:
    if isinstance(det, MoleculeDetector):
        return det.alpha**2
    if isinstance(det, Bolometer):
        return 1.0 - (1.0 - det.p_hit) ** det.n_molecules
    raise ConfigError(f"no efficiency defined for {type(det).__name__}")


def _path_ket(dim: int, mode: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[mode] = 1.0
    return v


def couple_qubit(atom: StateVector, det: QubitDetector) -> StateVector:
    cL, cR = _check_atom(atom)
    k = _path_dim(det.backaction_kick)
    e = det.efficiency
    q0, q1 = np.array([1, 0], dtype=np.complex128), np.array([0, 1], dtype=np.complex128)
    amps = (
        cL * np.kron(_path_ket(k, L), q0)
        + cR * math.sqrt(1.0 - e) * np.kron(_path_ket(k, R), q0)
        + cR * math.sqrt(e) * np.kron(_path_ket(k, _right_prime(det.backaction_kick)), q1)
    )
    records = (
        Record("0", COLD, basis_state("qubit", 2, 0)),
        Record("1", HOT, basis_state("qubit", 2, 1)),
    )
    return StateVector((Factor(ATOM, k), Factor("qubit", 2)), amps, records)


def readout_records(basis: ReadoutBasis) -> tuple[Record, Record]:
    """Records for reading the qubit out in ``basis`` (eraser branches)."""
    b0, b1 = basis.vectors()
    l0, l1 = basis.labels()
    return Record(l0, COLD, ket("qubit", b0)), Record(l1, HOT, ket("qubit", b1))


def rewrite_in_basis(
    joint: StateVector, basis: ReadoutBasis | Sequence[np.ndarray]
) -> dict[str, np.ndarray]:
    """Effective (unnormalized) path amplitudes conditioned on each basis vector."""
    if sorted(joint.names) != sorted([ATOM, "qubit"]):
        raise ConfigError("rewrite_in_basis expects an atom (x) qubit state")
    if isinstance(basis, ReadoutBasis):
        vecs = basis.vectors()
        labels = basis.labels()
    else:
        vecs = tuple(np.asarray(v, dtype=np.complex128) for v in basis)
        labels = tuple(f"b{i}" for i in range(len(vecs)))
    m = np.array(vecs)
    if m.shape != (2, 2) or not np.allclose(m.conj() @ m.T, np.eye(2), atol=1e-12, rtol=0):
        raise ConfigError("readout basis is not orthonormal")
    return {
        lab: contract(joint.without_records(), ket("qubit", v)).amps.copy()
        for lab, v in zip(labels, vecs)
    }


def couple_molecule(atom: StateVector, det: MoleculeDetector) -> StateVector:
    cL, cR = _check_atom(atom)
    k = _path_dim(det.backaction_kick)
    u, b = det.states()
    # without a kick the hit and miss terms share |R>, and for c > 0 their sum
    # alpha|b> + beta|u> has norm^2 = 1 + 2 alpha beta c; rescale to stay unitary
    scale = 1.0 if k == 3 else 1.0 / math.sqrt(1.0 + 2.0 * det.alpha * det.beta * det.overlap_c)
    amps = (
        cL * np.kron(_path_ket(k, L), u.amps)
        + cR * scale * det.alpha * np.kron(_path_ket(k, _right_prime(det.backaction_kick)), b.amps)
        + cR * scale * det.beta * np.kron(_path_ket(k, R), u.amps)
    )
    # the distinguishable part of "bumped" is its component orthogonal to "unbumped"
    records = [Record("unbumped", COLD, u)]
    if det.overlap_c < 1.0:
        perp = (b.amps - det.overlap_c * u.amps) / math.sqrt(1.0 - det.overlap_c**2)
        records.append(Record("bumped", HOT, ket("molecule", perp)))
    return StateVector((Factor(ATOM, k), Factor("molecule", det.mol_dim)), amps, records)


def _check_dim(total: int, what: str) -> None:
    if total > MAX_DIM:
        raise ResourceError(
            f"{what} needs a {total}-dimensional state (cap {MAX_DIM}); "
            "reduce n_molecules, mol_dim or ext_dim"
        )


def _product(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1, dtype=np.complex128)
    for v in vectors:
        out = np.kron(out, v)
    return out


def couple_bolometer(atom: StateVector, det: Bolometer) -> StateVector:
    """Right-path atom passes molecules 1..N; configuration n is a first hit at n.

    Amplitudes: b_n = sqrt(p (1-p)^(n-1)) for |R'>|H_n>, sqrt((1-p)^N) for the
    all-miss |R>|C>. The left path leaves the cold state |C> untouched.
    """
    cL, cR = _check_atom(atom)
    k = _path_dim(det.backaction_kick)
    _check_dim(k * det.mol_dim**det.n_molecules, "bolometer")
    sites = [det.site_states(j) for j in range(1, det.n_molecules + 1)]
    unb = [s[0].amps for s in sites]
    cold = _product(unb)
    hot = []
    for n in range(det.n_molecules):
        vecs = list(unb)
        vecs[n] = sites[n][1].amps
        hot.append(_product(vecs))
    rp = _right_prime(det.backaction_kick)
    amps = cL * np.kron(_path_ket(k, L), cold)
    amps = amps + cR * det.miss_amplitude() * np.kron(_path_ket(k, R), cold)
    for bn, h in zip(det.hit_amplitudes(), hot):
        amps = amps + cR * bn * np.kron(_path_ket(k, rp), h)
    mols = [Factor(name, det.mol_dim) for name in det.molecule_names]
    mol_factors = tuple(mols)
    records = [Record("C", COLD, StateVector(mol_factors, cold))]
    records += [
        Record(f"H{n}", HOT, StateVector(mol_factors, h)) for n, h in enumerate(hot, start=1)
    ]
    return StateVector((Factor(ATOM, k),) + mol_factors, amps, records)


def environment_state(det: Bolometer, key: str | None = None) -> np.ndarray:
    """|eps_C> for key None, otherwise |eps_key> with <eps_C|eps_key> = kappa."""
    eps_cold = _haar(det.ext_dim, make_rng(det.seed, "env"))
    if key is None:
        return eps_cold
    return _orthogonal_partner(eps_cold, det.ext_overlap_kappa, make_rng(det.seed, "env", key))


def attach_external_environment(joint: StateVector, det: Bolometer) -> StateVector:
    """Append the external environment factor.

    Cold records pick up a shared |eps_C>; hot configuration n picks up
    |eps_n> with <eps_C|eps_n> = kappa.
    """
    missing = [n for n in det.molecule_names if not joint.has(n)]
    if missing or not joint.records:
        raise ConfigError(f"state lacks bolometer factors/records (missing {missing})")
    if joint.has(ENV):
        raise ConfigError("external environment already attached")
    _check_dim(joint.dim * det.ext_dim, "external environment")
    eps_cold = environment_state(det)
    new = []
    for rec in joint.records:
        eps = eps_cold if rec.label.detector == "Cold" else environment_state(det, rec.key)
        new.append(Record(rec.key, rec.label, tensor(rec.vector, ket(ENV, eps))))
    return remap_records(joint, new, extra=(Factor(ENV, det.ext_dim),), residual=ket(ENV, eps_cold))


def right_path_hot_weight(joint: StateVector) -> float:
    """Born weight of the hot records given the right path, read off the state."""
    total_r = 0.0
    hot_r = 0.0
    for rec in joint.records:
        comp = project(joint.without_records(), rec.vector)
        rho = partial_trace(comp, [ATOM]).entries
        w = float(np.real(np.trace(rho) - rho[0, 0]))
        total_r += w
        if rec.label.detector == "Hot":
            hot_r += w
    return hot_r / total_r
