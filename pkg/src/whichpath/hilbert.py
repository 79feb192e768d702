"""Dense state vectors over labeled tensor-product spaces.

Subsystems are always addressed by factor name. Factor order is the
insertion order and fixes the row-major layout of the amplitude vector.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .labels import MacroLabel

SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class Factor:
    name: str
    dim: int

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ConfigError("factor name must be a non-empty string")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError(f"factor {self.name!r}: dim must be a positive integer, got {self.dim}")


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=np.complex128).reshape(-1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Record:
    """One orthonormal record vector over some non-atom factors.

    Coupling maps attach records to the states they build so that branch
    decomposition can project onto exactly the vectors the detector wrote.
    """

    key: str
    label: MacroLabel
    vector: StateVector


@dataclass(frozen=True, eq=False)
class StateVector:
    factors: tuple[Factor, ...]
    amps: np.ndarray
    records: tuple[Record, ...] = field(default=())

    def __post_init__(self):
        factors = tuple(self.factors)
        names = [f.name for f in factors]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate factor names in {names}")
        amps = _frozen(self.amps)
        expected = math.prod(f.dim for f in factors)
        if amps.size != expected:
            raise ConfigError(f"amplitude length {amps.size} != product of dims {expected}")
        if not np.all(np.isfinite(amps)):
            raise ConfigError("amplitudes must be finite")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "records", tuple(self.records))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        return self.amps.size

    def factor(self, name: str) -> Factor:
        for f in self.factors:
            if f.name == name:
                return f
        raise ConfigError(f"no factor named {name!r} in {list(self.names)}")

    def has(self, name: str) -> bool:
        return name in self.names

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalize(self) -> StateVector:
        n = self.norm()
        if n == 0.0:
            raise ConfigError("cannot normalize the zero vector")
        return replace(self, amps=self.amps / n)

    def tensor_view(self) -> np.ndarray:
        return self.amps.reshape(self.dims) if self.factors else self.amps.reshape(())

    def scaled(self, c: complex) -> StateVector:
        return replace(self, amps=self.amps * c)

    def without_records(self) -> StateVector:
        return replace(self, records=())

    def with_records(self, records: Iterable[Record]) -> StateVector:
        return replace(self, records=tuple(records))

    def __add__(self, other: StateVector) -> StateVector:
        _require_same_factors(self, other)
        return StateVector(self.factors, self.amps + other.amps, self.records)

    def __sub__(self, other: StateVector) -> StateVector:
        _require_same_factors(self, other)
        return StateVector(self.factors, self.amps - other.amps, self.records)

    def __repr__(self) -> str:
        fs = ", ".join(f"{f.name}:{f.dim}" for f in self.factors)
        return f"StateVector([{fs}], norm={self.norm():.6g})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    factors: tuple[Factor, ...]
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.complex128)
        d = math.prod(f.dim for f in self.factors)
        if entries.shape != (d, d):
            raise ConfigError(f"density matrix shape {entries.shape} != ({d}, {d})")
        entries.setflags(write=False)
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "entries", entries)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.entries + self.entries.conj().T) / 2)

    def is_valid(self, tol: float = 1e-12) -> bool:
        """Hermitian, unit trace, PSD (eigenvalues >= -1e-10)."""
        m = self.entries
        return (
            np.allclose(m, m.conj().T, atol=tol, rtol=0)
            and abs(self.trace() - 1) <= tol
            and self.eigenvalues().min() >= -1e-10
        )


def _require_same_factors(a: StateVector, b: StateVector) -> None:
    if a.factors != b.factors:
        raise ConfigError(f"factor lists differ: {list(a.names)} vs {list(b.names)}")


# -- construction -----------------------------------------------------------

def ket(name: str, amps: Sequence[complex]) -> StateVector:
    amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
    return StateVector((Factor(name, amps.size),), amps)


def basis_state(name: str, dim: int, index: int) -> StateVector:
    if not 0 <= index < dim:
        raise ConfigError(f"basis index {index} out of range for dim {dim}")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector((Factor(name, dim),), amps)


def tensor(a: StateVector, b: StateVector, *more: StateVector) -> StateVector:
    """Kronecker product; the factor list is the concatenation."""
    if more:
        return tensor(tensor(a, b), *more)
    clash = set(a.names) & set(b.names)
    if clash:
        raise ConfigError(f"duplicate factor name(s) in tensor product: {sorted(clash)}")
    records = a.records if not b.records else b.records if not a.records else ()
    return StateVector(a.factors + b.factors, np.kron(a.amps, b.amps), records)


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _require_same_factors(a, b)
    return complex(np.vdot(a.amps, b.amps))


def permute(s: StateVector, order: Sequence[str]) -> StateVector:
    order = list(order)
    if sorted(order) != sorted(s.names):
        raise ConfigError(f"permutation {order} does not match factors {list(s.names)}")
    if tuple(order) == s.names:
        return s
    axes = [s.names.index(n) for n in order]
    amps = np.transpose(s.tensor_view(), axes).reshape(-1)
    return StateVector(tuple(s.factors[i] for i in axes), amps, s.records)


def _split(s: StateVector, sub: Sequence[str]) -> tuple[np.ndarray, tuple[Factor, ...], tuple[Factor, ...]]:
    """Matrix view M[rest, sub] with ``rest`` in the state's own order."""
    sub = list(sub)
    for n in sub:
        s.factor(n)
    if len(set(sub)) != len(sub):
        raise ConfigError(f"repeated factor in {sub}")
    rest = [n for n in s.names if n not in sub]
    p = permute(s, rest + sub)
    rest_f = p.factors[: len(rest)]
    sub_f = p.factors[len(rest):]
    m = p.amps.reshape(math.prod(f.dim for f in rest_f), math.prod(f.dim for f in sub_f))
    return m, rest_f, sub_f


def partial_trace(s: StateVector, keep: Iterable[str | Factor]) -> DensityMatrix:
    """Reduced density matrix over ``keep`` (ordered as in ``s``).

    The trace equals norm(s)**2; unnormalized inputs are allowed.
    """
    keep_names = {k.name if isinstance(k, Factor) else k for k in keep}
    for n in keep_names:
        s.factor(n)
    kept = [n for n in s.names if n in keep_names]
    traced = [n for n in s.names if n not in keep_names]
    m, kept_f, _ = _split(s, traced)
    return DensityMatrix(kept_f, m @ m.conj().T)


def contract(s: StateVector, v: StateVector) -> StateVector:
    """Partial inner product <v|s> over v's factors; the rest keep s's order."""
    for f in v.factors:
        if s.factor(f.name).dim != f.dim:
            raise ConfigError(f"factor {f.name!r} has dim {s.factor(f.name).dim} in state, {f.dim} in outcome")
    m, rest_f, sub_f = _split(s, v.names)
    vv = permute(v, [f.name for f in sub_f]).amps
    return StateVector(rest_f, m @ vv.conj())


def project(s: StateVector, v: StateVector) -> StateVector:
    """(1 (x) |v><v|) s, returned in s's factor order, records kept."""
    c = contract(s, v)
    out = permute(tensor(c.without_records(), v.without_records()), s.names)
    return StateVector(out.factors, out.amps, s.records)


def apply_local(s: StateVector, name: str, matrix: np.ndarray) -> StateVector:
    """Apply an operator on one factor. Records are dropped: they no longer describe the state."""
    d = s.factor(name).dim
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape[1] != d:
        raise ConfigError(f"operator shape {matrix.shape} incompatible with factor {name!r} dim {d}")
    axis = s.names.index(name)
    t = np.moveaxis(np.tensordot(matrix, s.tensor_view(), axes=([1], [axis])), 0, axis)
    factors = tuple(Factor(f.name, matrix.shape[0]) if f.name == name else f for f in s.factors)
    return StateVector(factors, t.reshape(-1))


# -- randomness -------------------------------------------------------------

def _key(k: int | str) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode())
    if k < 0:
        raise ConfigError("seed keys must be nonnegative")
    return int(k)


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) <= SEED_MAX:
        raise ConfigError(f"seed must fit in 64 bits, got {seed}")
    return int(seed)


def make_rng(seed: int, *keys: int | str) -> np.random.Generator:
    """Counter-based (Philox) generator; ``keys`` split independent streams off one seed."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def _haar(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def _orthogonal_partner(u: np.ndarray, c: float, rng: np.random.Generator) -> np.ndarray:
    """Unit vector b with <u|b> = c, built from a random direction orthogonal to u."""
    if not 0.0 <= c <= 1.0:
        raise ConfigError(f"overlap must lie in [0, 1], got {c}")
    if c == 1.0:
        return u.copy()
    if u.size < 2:
        raise ConfigError("an orthogonal partner needs dim >= 2")
    w = _haar(u.size, rng)
    w = w - np.vdot(u, w) * u
    w = w - np.vdot(u, w) * u
    w /= np.linalg.norm(w)
    return c * u + math.sqrt(1.0 - c * c) * w


def random_unit_vector(dim: int, seed: int, name: str = "rand") -> StateVector:
    if int(dim) != dim or dim < 1:
        raise ConfigError(f"dim must be >= 1, got {dim}")
    return ket(name, _haar(dim, make_rng(seed, "haar")))


def overlap_pair(dim: int, c: float, seed: int, name: str = "rand") -> tuple[StateVector, StateVector]:
    """Haar-random unit u and b with <u|b> = c exactly (c real in [0, 1])."""
    if int(dim) != dim or dim < 2:
        raise ConfigError(f"overlap_pair needs dim >= 2, got {dim}")
    if not 0.0 <= c <= 1.0:
        raise ConfigError(f"overlap must lie in [0, 1], got {c}")
    rng = make_rng(seed, "pair")
    u = _haar(dim, rng)
    b = _orthogonal_partner(u, c, rng)
    return ket(name, u), ket(name, b)


# -- records ----------------------------------------------------------------

def record_overlaps(records: Sequence[Record]) -> np.ndarray:
    """Gram matrix of the record vectors (all must share one factor list)."""
    if not records:
        return np.zeros((0, 0), dtype=np.complex128)
    vs = [permute(r.vector, records[0].vector.names).amps for r in records]
    m = np.array(vs)
    return m.conj() @ m.T


def remap_records(
    s: StateVector,
    new_records: Sequence[Record],
    extra: Sequence[Factor] = (),
    residual: StateVector | None = None,
) -> StateVector:
    """Isometry |rec_k> -> |new_k>, carrying every other factor along.

    ``new_records[k]`` replaces ``s.records[k]``; its vector may span the
    old record factors plus the appended ``extra`` factors. Any part of ``s``
    outside the record span is tensored with ``residual`` (over ``extra``).
    """
    old = s.records
    if len(new_records) != len(old):
        raise ConfigError("record remap needs one new record per existing record")
    if not old:
        raise ConfigError("state carries no detector records")
    gram = record_overlaps(old)
    if not np.allclose(gram, np.eye(len(old)), atol=1e-9, rtol=0):
        raise ConfigError("detector records are not orthonormal")
    for f in extra:
        if s.has(f.name):
            raise ConfigError(f"factor {f.name!r} already present")
    out_names = list(s.names) + [f.name for f in extra]
    out_factors = tuple(s.factors) + tuple(extra)
    total = np.zeros(math.prod(f.dim for f in out_factors), dtype=np.complex128)
    remainder = s.without_records()
    for rec, new in zip(old, new_records):
        c = contract(s.without_records(), rec.vector)
        part = permute(tensor(c, new.vector.without_records()), out_names)
        total += part.amps
        remainder = remainder - project(s.without_records(), rec.vector)
    if extra:
        if residual is None:
            raise ConfigError("appending factors requires a residual state for unrecorded components")
        res = permute(tensor(remainder, residual.without_records()), out_names)
        total += res.amps
    else:
        total += remainder.amps
    return StateVector(out_factors, total, tuple(new_records))
