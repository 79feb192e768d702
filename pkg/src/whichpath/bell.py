"""Singlet pair measured by two observers, without collapse.

A measurement entangles a party's spin with that party's observer register
(|ready> = |0>, saw-up = |0>, saw-down = |1>). Nothing is projected out;
statistics are read from the observer registers of the full state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, UsageError
from .hilbert import Factor, StateVector, make_rng, partial_trace

PARTIES = ("you", "me")
ORDERS = ("remote-first", "local-first")

_PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)


@dataclass(frozen=True)
class MeasurementAxis:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if abs(math.sqrt(self.x**2 + self.y**2 + self.z**2) - 1.0) > 1e-12:
            raise ConfigError(f"measurement axis must be a unit vector, got {self.vector}")

    @classmethod
    def of(cls, v: Sequence[float]) -> MeasurementAxis:
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v)
        if v.shape != (3,) or n == 0:
            raise ConfigError(f"axis needs three components, not all zero: {v}")
        return cls(*(v / n))

    @classmethod
    def in_xz_plane(cls, angle_deg: float) -> MeasurementAxis:
        t = math.radians(angle_deg)
        return cls(math.sin(t), 0.0, math.cos(t))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Projectors onto spin +1/2 and -1/2 along this axis."""
        sn = np.einsum("i,ijk->jk", self.vector, _PAULI)
        eye = np.eye(2)
        return (eye + sn) / 2, (eye - sn) / 2


X = MeasurementAxis(1.0, 0.0, 0.0)
Y = MeasurementAxis(0.0, 1.0, 0.0)
Z = MeasurementAxis(0.0, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class TwoPartyState:
    state: StateVector
    event_log: tuple[tuple[str, MeasurementAxis], ...] = field(default=())

    def measured(self, party: str) -> bool:
        return any(p == party for p, _ in self.event_log)


def singlet(obs_dim: int = 2) -> TwoPartyState:
    """(|up,down> - |down,up>)/sqrt 2 with both observers ready."""
    if obs_dim < 2:
        raise ConfigError("observer registers need dim >= 2")
    spins = np.array([0, 1, -1, 0], dtype=np.complex128) / math.sqrt(2)
    ready = np.zeros(obs_dim, dtype=np.complex128)
    ready[0] = 1.0
    amps = np.kron(spins, np.kron(ready, ready))
    factors = (Factor("you", 2), Factor("me", 2), Factor("you-obs", obs_dim), Factor("me-obs", obs_dim))
    return TwoPartyState(StateVector(factors, amps))


def _record_unitary(axis: MeasurementAxis, obs_dim: int) -> np.ndarray:
    """P_up (x) 1 + P_down (x) S where S swaps |0> and |1> of the observer."""
    p_up, p_dn = axis.projectors()
    swap = np.eye(obs_dim, dtype=np.complex128)
    swap[[0, 1]] = swap[[1, 0]]
    return np.kron(p_up, np.eye(obs_dim)) + np.kron(p_dn, swap)


def _apply_pair(s: StateVector, spin: str, obs: str, u: np.ndarray) -> StateVector:
    t = s.tensor_view()
    i, j = s.names.index(spin), s.names.index(obs)
    d = s.factor(obs).dim
    u4 = u.reshape(2, d, 2, d)
    t = np.tensordot(u4, t, axes=([2, 3], [i, j]))
    t = np.moveaxis(t, [0, 1], [i, j])
    return StateVector(s.factors, t.reshape(-1))


def measure_local(s: TwoPartyState, party: str, axis: MeasurementAxis) -> TwoPartyState:
    if party not in PARTIES:
        raise ConfigError(f"party must be one of {PARTIES}, got {party!r}")
    if s.measured(party):
        raise UsageError(f"{party} has already measured")
    u = _record_unitary(axis, s.state.factor(f"{party}-obs").dim)
    out = _apply_pair(s.state, party, f"{party}-obs", u)
    return TwoPartyState(out, s.event_log + ((party, axis),))


def unmeasure(s: TwoPartyState) -> TwoPartyState:
    """Undo the most recent measurement by inverting its record unitary."""
    if not s.event_log:
        raise UsageError("nothing to undo")
    party, axis = s.event_log[-1]
    u = _record_unitary(axis, s.state.factor(f"{party}-obs").dim)
    out = _apply_pair(s.state, party, f"{party}-obs", u.conj().T)
    return TwoPartyState(out, s.event_log[:-1])


def record_weights(s: TwoPartyState) -> dict[tuple[int, int], float]:
    """Joint weights of (you, me) observer records; +1 = saw up, -1 = saw down."""
    rho = partial_trace(s.state, ["you-obs", "me-obs"]).entries
    d = s.state.factor("me-obs").dim
    diag = np.real(np.diag(rho)).reshape(-1, d)
    sign = {0: 1, 1: -1}
    return {(sign[i], sign[j]): float(diag[i, j]) for i in (0, 1) for j in (0, 1)}


def local_marginal(s: TwoPartyState, party: str) -> float:
    """Weight of the party's 'saw up' record; for an unmeasured party, of spin up along z."""
    name = f"{party}-obs" if s.measured(party) else party
    rho = partial_trace(s.state, [name]).entries
    return float(np.real(rho[0, 0]))


@dataclass(frozen=True)
class JointStatistics:
    probabilities: dict[tuple[int, int], float]
    E: float


def joint_statistics(a: MeasurementAxis, b: MeasurementAxis) -> JointStatistics:
    s = measure_local(measure_local(singlet(), "you", a), "me", b)
    p = record_weights(s)
    e = sum(sa * sb * w for (sa, sb), w in p.items())
    return JointStatistics(p, float(e))


def correlation(a: MeasurementAxis, b: MeasurementAxis) -> float:
    return joint_statistics(a, b).E


def chsh(a1: MeasurementAxis, a2: MeasurementAxis, b1: MeasurementAxis, b2: MeasurementAxis) -> float:
    return correlation(a1, b1) + correlation(a1, b2) + correlation(a2, b1) - correlation(a2, b2)


def standard_chsh_axes() -> tuple[MeasurementAxis, ...]:
    """Settings reaching |S| = 2 sqrt 2 for S = E11 + E12 + E21 - E22."""
    return tuple(MeasurementAxis.in_xz_plane(t) for t in (0.0, 90.0, 45.0, -45.0))


def no_signaling_check(
    axes_remote: Iterable[MeasurementAxis],
    axis_local: MeasurementAxis,
    order: str | Sequence[str] = ORDERS,
) -> float:
    """Max |P(local saw up) - 1/2| over remote settings and measurement orders.

    "you" is the remote party, "me" the local one.
    """
    axes_remote = list(axes_remote)
    if not axes_remote:
        raise ConfigError("no remote axes given")
    orders = [order] if isinstance(order, str) else list(order)
    for o in orders:
        if o not in ORDERS:
            raise ConfigError(f"order must be one of {ORDERS}, got {o!r}")
    worst = 0.0
    for a in axes_remote:
        for o in orders:
            s = singlet()
            if o == "remote-first":
                s = measure_local(measure_local(s, "you", a), "me", axis_local)
            else:
                s = measure_local(measure_local(s, "me", axis_local), "you", a)
            worst = max(worst, abs(local_marginal(s, "me") - 0.5))
    return worst


def random_axes(count: int, seed: int) -> list[MeasurementAxis]:
    rng = make_rng(seed, "axes")
    return [MeasurementAxis.of(v) for v in rng.standard_normal((count, 3))]


def report(axes_remote: Sequence[MeasurementAxis], axis_local: MeasurementAxis, order=ORDERS) -> dict:
    a1, a2, b1, b2 = standard_chsh_axes()
    settings = [{"remote": list(a.vector), "local": list(axis_local.vector)} for a in axes_remote]
    table = []
    for a in axes_remote:
        st = joint_statistics(a, axis_local)
        table.append(
            {
                "remote": list(a.vector),
                "local": list(axis_local.vector),
                "probabilities": {f"{i:+d},{j:+d}": w for (i, j), w in st.probabilities.items()},
                "E": st.E,
            }
        )
    return {
        "settings": settings,
        "statistics": table,
        "S": chsh(a1, a2, b1, b2),
        "chsh_axes": [list(v.vector) for v in (a1, a2, b1, b2)],
        "max_marginal_deviation": no_signaling_check(axes_remote, axis_local, order),
    }
