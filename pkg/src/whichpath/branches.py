"""Branch bookkeeping: observer chain, decomposition, Born weights, sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import ConfigError, QueryError
from .hilbert import (
    Factor,
    Record,
    StateVector,
    apply_local,
    check_seed,
    ket,
    make_rng,
    project,
    remap_records,
    tensor,
)
from .labels import MacroLabel
from .optics import PathField, _atom_rho, cross_pattern, pattern_component

ARROW = "arrow"
CAT = "cat"
SAMPLE_CHUNK = 1 << 16


class Grouping(str, Enum):
    MACRO2 = "Macro2"
    MICRO = "Micro"


@dataclass(frozen=True, eq=False)
class BranchRecord:
    label: MacroLabel
    weight: float
    component: StateVector
    keys: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class BranchDecomposition:
    branches: tuple[BranchRecord, ...]
    grouping: Grouping

    @property
    def weights(self) -> np.ndarray:
        return np.array([b.weight for b in self.branches])

    @property
    def labels(self) -> list[MacroLabel]:
        return [b.label for b in self.branches]

    def table(self) -> list[dict]:
        return [
            {"label": b.label.text, "keys": list(b.keys), "weight": b.weight}
            for b in self.branches
        ]


def cat_state(seed: int, key: str, side: int, cat_dim: int) -> np.ndarray:
    """Microscopic cat state for record ``key``; side 0 saw L, side 1 saw R."""
    return _subspace_vector(cat_dim, side, make_rng(seed, "cat", key))


def _subspace_vector(dim: int, half: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector in the first (half=0) or second (half=1) half of C^dim."""
    k = dim // 2
    z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    v = np.zeros(dim, dtype=np.complex128)
    v[half * k:(half + 1) * k] = z / np.linalg.norm(z)
    return v


def _side(rec: Record) -> int:
    return 0 if rec.label.detector == "Cold" else 1


def attach_observer_chain(joint: StateVector, seed: int = 0, cat_dim: int = 4) -> StateVector:
    """Append an arrow (Left on cold, Right on hot) and a cat watching it.

    Each record gets its own microscopic cat state, drawn inside the
    left-seeing or right-seeing half of the cat space.
    """
    if not joint.records:
        raise ConfigError("observer chain needs a state with detector records")
    if joint.has(ARROW) or joint.has(CAT):
        raise ConfigError("observer chain already attached")
    if cat_dim < 2 or cat_dim % 2:
        raise ConfigError(f"cat_dim must be an even integer >= 2, got {cat_dim}")
    check_seed(seed)
    new = []
    for rec in joint.records:
        side = _side(rec)
        arrow = np.eye(2, dtype=np.complex128)[side]
        cat = cat_state(seed, rec.key, side, cat_dim)
        label = MacroLabel(rec.label.detector, ("Left", "Right")[side], ("SawL", "SawR")[side])
        new.append(Record(rec.key, label, tensor(rec.vector, ket(ARROW, arrow), ket(CAT, cat))))
    residual = tensor(
        ket(ARROW, [1, 0]), ket(CAT, cat_state(seed, "ready", 0, cat_dim))
    )
    return remap_records(joint, new, extra=(Factor(ARROW, 2), Factor(CAT, cat_dim)), residual=residual)


def closed_eyes_unitary(seed: int, cat_dim: int) -> np.ndarray:
    """Haar unitary on each half of the cat space: closing the eyes keeps what was seen."""
    rng = make_rng(seed, "closed")
    k = cat_dim // 2
    u = np.zeros((cat_dim, cat_dim), dtype=np.complex128)
    for half in (0, 1):
        z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        q, r = np.linalg.qr(z)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        u[half * k:(half + 1) * k, half * k:(half + 1) * k] = q
    return u


def attach_closed_eyes(joint: StateVector, seed: int = 0) -> StateVector:
    """Evolve the cat into an eyes-closed state that is still branch-specific.

    The evolution is a unitary on the cat factor alone that does not mix the
    left-seeing and right-seeing halves, so every branch weight is unchanged.
    """
    if not joint.has(ARROW) or not joint.has(CAT):
        raise ConfigError("closed-eyes cat needs the arrow and cat attached first")
    u = closed_eyes_unitary(check_seed(seed), joint.factor(CAT).dim)
    new = []
    for rec in joint.records:
        side = _side(rec)
        label = MacroLabel(rec.label.detector, rec.label.arrow, ("EyesClosedL", "EyesClosedR")[side])
        new.append(Record(rec.key, label, apply_local(rec.vector, CAT, u)))
    return apply_local(joint, CAT, u).with_records(new)


def decompose(joint: StateVector, grouping: Grouping | str = Grouping.MACRO2) -> BranchDecomposition:
    try:
        grouping = Grouping(grouping)
    except ValueError:
        raise ConfigError(f"unknown grouping {grouping!r}; use Macro2 or Micro") from None
    bare = joint.without_records()
    if not joint.records:
        return BranchDecomposition((BranchRecord(MacroLabel(), joint.norm() ** 2, bare, ()),), grouping)
    comps = [(rec, project(bare, rec.vector)) for rec in joint.records]
    recon = sum((c.amps for _, c in comps), np.zeros_like(bare.amps))
    residual = float(np.linalg.norm(bare.amps - recon))
    if residual > 1e-9:
        raise ConfigError(f"state has weight {residual**2:.3g} outside its detector records")
    if grouping is Grouping.MICRO:
        branches = tuple(
            BranchRecord(rec.label, c.norm() ** 2, c, (rec.key,)) for rec, c in comps
        )
        return BranchDecomposition(branches, grouping)
    groups: dict[MacroLabel, list] = {}
    for rec, c in comps:
        groups.setdefault(rec.label, []).append((rec, c))
    branches = []
    for label in sorted(groups, key=lambda lab: (lab.detector != "Cold", lab.text)):
        members = groups[label]
        amps = sum((c.amps for _, c in members), np.zeros_like(bare.amps))
        comp = StateVector(bare.factors, amps)
        branches.append(BranchRecord(label, comp.norm() ** 2, comp, tuple(r.key for r, _ in members)))
    return BranchDecomposition(tuple(branches), grouping)


def decompose_with(joint: StateVector, records: Iterable[Record], grouping=Grouping.MACRO2) -> BranchDecomposition:
    """Decompose against an explicit record basis instead of the detector's own."""
    return decompose(joint.with_records(records), grouping)


def branch_interference(d: BranchDecomposition, field: PathField) -> list[float]:
    """Per-branch maximum |interference term| in pattern units."""
    joint = _total(d)
    out = []
    for b in d.branches:
        p = pattern_component(field, joint, b.component, b.label.text)
        out.append(float(np.max(np.abs(np.real(p.cross)))))
    return out


def _total(d: BranchDecomposition) -> StateVector:
    first = d.branches[0].component
    amps = sum((b.component.amps for b in d.branches), np.zeros_like(first.amps))
    return StateVector(first.factors, amps)


def cross_branch_interference(d: BranchDecomposition, field: PathField) -> float:
    """max_x |sum_{i != j} density_ij(x)| between distinct branch components."""
    if len(d.branches) < 2:
        return 0.0
    joint = _total(d)
    rho_all = _atom_rho(joint)
    rho_diag = sum(_atom_rho(b.component) for b in d.branches)
    return float(np.max(np.abs(cross_pattern(field, rho_all - rho_diag, joint))))


def self_location_probability(d: BranchDecomposition, label: MacroLabel) -> float:
    """Born weight of all branches whose label agrees with ``label``."""
    hits = [b.weight for b in d.branches if b.label.matches(label)]
    if not hits:
        raise QueryError(f"no branch carries label {label.text!r}")
    return float(sum(hits))


def sample_outcomes(d: BranchDecomposition, trials: int, seed: int) -> dict[MacroLabel, int]:
    """I.i.d. Born-weighted draws of a branch label.

    Trials are drawn in fixed-size chunks, each from its own stream split off
    ``seed``, so any chunk-parallel execution reproduces the serial counts.
    """
    if int(trials) != trials or trials < 1:
        raise ConfigError(f"trials must be a positive integer, got {trials}")
    check_seed(seed)
    w = d.weights
    if np.any(w < -1e-15):
        raise ConfigError("negative branch weight")
    p = np.clip(w, 0.0, None)
    p = p / p.sum()
    counts = np.zeros(len(p), dtype=np.int64)
    for i, start in enumerate(range(0, trials, SAMPLE_CHUNK)):
        counts += sample_chunk(p, min(SAMPLE_CHUNK, trials - start), seed, i)
    out: dict[MacroLabel, int] = {}
    for b, c in zip(d.branches, counts):
        out[b.label] = out.get(b.label, 0) + int(c)
    return out


def sample_chunk(p: np.ndarray, size: int, seed: int, index: int) -> np.ndarray:
    rng = make_rng(seed, "sample", index)
    draws = rng.choice(len(p), size=size, p=p)
    return np.bincount(draws, minlength=len(p))


def binomial_band(p: float, trials: int, sigmas: float = 3.0) -> float:
    return sigmas * math.sqrt(p * (1.0 - p) / trials)
