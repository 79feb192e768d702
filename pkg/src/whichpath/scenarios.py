"""Scenario documents: built-ins, JSON loading and validation."""
from __future__ import annotations

import cmath
import copy
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .bell import ORDERS, MeasurementAxis
from .detectors import Bolometer, MoleculeDetector, QubitDetector, ReadoutBasis
from .errors import ConfigError
from .hilbert import check_seed, make_rng
from .optics import ScreenGrid, SlitGeometry

EXPERIMENTS = ("interferometer", "bell")
DEFAULT_SEED = 20251019


@dataclass(frozen=True)
class Observers:
    attach_arrow_cat: bool = False
    eyes_closed: bool = False
    cat_dim: int = 4


@dataclass(frozen=True)
class Sampling:
    trials: int = 0
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class BellSettings:
    axes: tuple[MeasurementAxis, ...]
    local_axis: MeasurementAxis
    order: tuple[str, ...] = ORDERS


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str = ""
    experiment: str = "interferometer"
    geometry: SlitGeometry = field(default_factory=SlitGeometry)
    grid: ScreenGrid = field(default_factory=ScreenGrid)
    amp_left: complex = 1 / math.sqrt(2)
    amp_right: complex = 1 / math.sqrt(2)
    detector: QubitDetector | MoleculeDetector | Bolometer | None = None
    external_environment: bool = True
    readout: ReadoutBasis | None = None
    observers: Observers = field(default_factory=Observers)
    sampling: Sampling = field(default_factory=Sampling)
    bell: BellSettings | None = None


_SQ2 = 1 / math.sqrt(2)

BUILTINS: dict[str, dict[str, Any]] = {
    "fig1a": {
        "name": "fig1a",
        "description": "Nothing inserted: balanced two-path interferometer",
    },
    "fig1b": {
        "name": "fig1b",
        "description": "Qubit detector, read out in {0,1} and in the eraser basis {+,-}",
        "detector": {"type": "qubit", "efficiency": 1.0},
        "readout": {"theta": math.pi / 2, "phi": 0.0},
    },
    "fig1c": {
        "name": "fig1c",
        "description": "Single gas molecule detector (alpha^2 = 0.1, orthogonal bumped state)",
        "detector": {"type": "molecule", "alpha": math.sqrt(0.1), "overlap_c": 0.0, "mol_dim": 8},
        "sampling": {"trials": 10000},
    },
    "fig1d": {
        "name": "fig1d",
        "description": "Bolometer of 8 gas molecules (p = 0.3) with external environment",
        "detector": {"type": "bolometer", "n_molecules": 8, "p_hit": 0.3, "ext_overlap_kappa": 0.0},
        "sampling": {"trials": 10000},
    },
    "eraser": {
        "name": "eraser",
        "description": "Quantum eraser: qubit read out in the y basis recovers shifted fringes",
        "detector": {"type": "qubit", "efficiency": 1.0},
        "readout": {"theta": math.pi / 2, "phi": math.pi / 2},
    },
    "born": {
        "name": "born",
        "description": "Imbalanced 1/100 : 99/100 paths, efficient bolometer, arrow and cat; Born sampling",
        "atom": {"amp_left": [0.1, 0.0], "amp_right": [math.sqrt(0.99), 0.0]},
        "detector": {"type": "bolometer", "n_molecules": 4, "p_hit": 1.0},
        "observers": {"attach_arrow_cat": True},
        "sampling": {"trials": 100000},
    },
    "eyes-closed": {
        "name": "eyes-closed",
        "description": "Eyes-closed cat: self-location probability before looking (99% R)",
        "atom": {"amp_left": [0.1, 0.0], "amp_right": [math.sqrt(0.99), 0.0]},
        "detector": {"type": "bolometer", "n_molecules": 4, "p_hit": 1.0},
        "observers": {"attach_arrow_cat": True, "eyes_closed": True},
        "sampling": {"trials": 100000},
    },
    "bell": {
        "name": "bell",
        "description": "Singlet pair: correlations, CHSH and no-signaling across settings and orders",
        "experiment": "bell",
        "bell": {
            "axes": [[1, 0, 0], [0, 1, 0], [0, 0, 1], [_SQ2, 0, _SQ2]],
            "local_axis": [0, 0, 1],
            "order": list(ORDERS),
        },
    },
}


def list_scenarios() -> list[tuple[str, str]]:
    return [(name, doc["description"]) for name, doc in BUILTINS.items()]


_TOP_KEYS = {
    "name", "description", "experiment", "geometry", "grid", "atom", "detector",
    "external_environment", "readout", "observers", "sampling", "bell",
}
_SECTION_KEYS = {
    "geometry": {"separation", "zeta"},
    "grid": {"x_min", "x_max", "n"},
    "atom": {"amp_left", "amp_right"},
    "readout": {"theta", "phi"},
    "observers": {"attach_arrow_cat", "eyes_closed", "cat_dim"},
    "sampling": {"trials", "seed"},
    "bell": {"axes", "local_axis", "order"},
}
_DETECTOR_KEYS = {
    "qubit": {"type", "efficiency", "backaction_kick"},
    "molecule": {"type", "alpha", "beta", "overlap_c", "mol_dim", "seed", "backaction_kick"},
    "bolometer": {
        "type", "n_molecules", "p_hit", "mol_dim", "ext_dim", "ext_overlap_kappa", "seed",
        "backaction_kick",
    },
}


class _Locator:
    """Maps keys back to source lines for error messages."""

    def __init__(self, text: str | None, source: str):
        self.text = text
        self.source = source

    def where(self, key: str | None = None) -> str:
        if self.text is None or key is None:
            return self.source
        m = re.search(r'"%s"\s*:' % re.escape(key), self.text)
        if not m:
            return self.source
        return f"{self.source}:{self.text.count(chr(10), 0, m.start()) + 1}"

    def fail(self, msg: str, key: str | None = None):
        raise ConfigError(f"{self.where(key)}: {msg}")


def _no_dupes(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _section(doc: dict, name: str, loc: _Locator) -> dict:
    sec = doc.get(name) or {}
    if not isinstance(sec, dict):
        loc.fail(f"section {name!r} must be an object", name)
    unknown = set(sec) - _SECTION_KEYS[name]
    if unknown:
        key = sorted(unknown)[0]
        loc.fail(f"unknown key {key!r} in section {name!r}", key)
    return sec


def _num(sec: dict, key: str, default, loc: _Locator, kind=float):
    v = sec.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        loc.fail(f"{key!r} must be a number, got {v!r}", key)
    if kind is int:
        if int(v) != v:
            loc.fail(f"{key!r} must be an integer, got {v!r}", key)
        return int(v)
    return float(v)


def _flag(sec: dict, key: str, default: bool, loc: _Locator) -> bool:
    v = sec.get(key, default)
    if not isinstance(v, bool):
        loc.fail(f"{key!r} must be true or false", key)
    return v


def _amp(v, key: str, loc: _Locator) -> complex:
    if (
        not isinstance(v, (list, tuple))
        or len(v) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
    ):
        loc.fail(f"{key!r} must be [magnitude, phase]", key)
    mag, phase = v
    if mag < 0:
        loc.fail(f"{key!r} magnitude must be >= 0", key)
    return cmath.rect(mag, phase)


def _axis(v, key: str, loc: _Locator) -> MeasurementAxis:
    try:
        return MeasurementAxis.of(v)
    except (ConfigError, ValueError, TypeError) as exc:
        loc.fail(f"bad axis in {key!r}: {exc}", key)


def _detector(cfg, master_seed: int, loc: _Locator):
    if cfg is None:
        return None
    if not isinstance(cfg, dict) or cfg.get("type") not in _DETECTOR_KEYS:
        loc.fail(f"detector.type must be one of {sorted(_DETECTOR_KEYS)}", "detector")
    kind = cfg["type"]
    unknown = set(cfg) - _DETECTOR_KEYS[kind]
    if unknown:
        key = sorted(unknown)[0]
        loc.fail(f"unknown key {key!r} for a {kind} detector", key)
    seed = cfg.get("seed")
    if seed is None:
        seed = int(make_rng(master_seed, "detector").integers(0, 2**63))
    try:
        if kind == "qubit":
            return QubitDetector(
                backaction_kick=_num(cfg, "backaction_kick", 0.0, loc),
                efficiency=_num(cfg, "efficiency", 1.0, loc),
            )
        if kind == "molecule":
            alpha = _num(cfg, "alpha", math.sqrt(0.1), loc)
            beta = _num(cfg, "beta", math.sqrt(max(0.0, 1.0 - alpha**2)), loc)
            return MoleculeDetector(
                alpha=alpha,
                beta=beta,
                overlap_c=_num(cfg, "overlap_c", 0.0, loc),
                mol_dim=_num(cfg, "mol_dim", 8, loc, int),
                seed=check_seed(seed),
                backaction_kick=_num(cfg, "backaction_kick", 0.0, loc),
            )
        return Bolometer(
            n_molecules=_num(cfg, "n_molecules", 8, loc, int),
            p_hit=_num(cfg, "p_hit", 0.3, loc),
            mol_dim=_num(cfg, "mol_dim", 2, loc, int),
            ext_dim=_num(cfg, "ext_dim", 2, loc, int),
            ext_overlap_kappa=_num(cfg, "ext_overlap_kappa", 0.0, loc),
            seed=check_seed(seed),
            backaction_kick=_num(cfg, "backaction_kick", 0.0, loc),
        )
    except ConfigError as exc:
        loc.fail(str(exc), "detector")


def scenario_from_dict(doc: dict, text: str | None = None, source: str = "<scenario>",
                       seed_override: int | None = None) -> Scenario:
    loc = _Locator(text, source)
    if not isinstance(doc, dict):
        loc.fail("scenario must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        key = sorted(unknown)[0]
        loc.fail(f"unknown key {key!r}", key)
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        loc.fail("scenario needs a non-empty 'name'", "name")
    experiment = doc.get("experiment", "interferometer")
    if experiment not in EXPERIMENTS:
        loc.fail(f"experiment must be one of {EXPERIMENTS}", "experiment")

    samp = _section(doc, "sampling", loc)
    seed = samp.get("seed", DEFAULT_SEED) if seed_override is None else seed_override
    try:
        seed = check_seed(seed)
    except ConfigError as exc:
        loc.fail(str(exc), "seed")
    sampling = Sampling(trials=_num(samp, "trials", 0, loc, int), seed=seed)
    if sampling.trials < 0:
        loc.fail("trials must be >= 0", "trials")

    geo = _section(doc, "geometry", loc)
    grd = _section(doc, "grid", loc)
    try:
        geometry = SlitGeometry(_num(geo, "separation", 8.0, loc), _num(geo, "zeta", 3.0, loc))
        grid = ScreenGrid(_num(grd, "x_min", -30.0, loc), _num(grd, "x_max", 30.0, loc),
                          _num(grd, "n", 2049, loc, int))
    except ConfigError as exc:
        loc.fail(str(exc), "geometry" if "slit" in str(exc) or "zeta" in str(exc) else "grid")

    atom = _section(doc, "atom", loc)
    cL = _amp(atom.get("amp_left", [_SQ2, 0.0]), "amp_left", loc)
    cR = _amp(atom.get("amp_right", [_SQ2, 0.0]), "amp_right", loc)
    if abs(abs(cL) ** 2 + abs(cR) ** 2 - 1.0) > 1e-9:
        loc.fail(f"|amp_left|^2 + |amp_right|^2 = {abs(cL)**2 + abs(cR)**2:.12g}, must be 1", "atom")

    detector = _detector(doc.get("detector"), seed, loc)
    external = _flag(doc, "external_environment", True, loc)

    readout = None
    if doc.get("readout") is not None:
        ro = _section(doc, "readout", loc)
        if not isinstance(detector, QubitDetector):
            loc.fail("a readout basis needs a qubit detector", "readout")
        readout = ReadoutBasis(_num(ro, "theta", 0.0, loc), _num(ro, "phi", 0.0, loc))

    obs = _section(doc, "observers", loc)
    observers = Observers(
        _flag(obs, "attach_arrow_cat", False, loc),
        _flag(obs, "eyes_closed", False, loc),
        _num(obs, "cat_dim", 4, loc, int),
    )
    if observers.eyes_closed and not observers.attach_arrow_cat:
        loc.fail("eyes_closed needs attach_arrow_cat", "eyes_closed")
    if observers.attach_arrow_cat and detector is None:
        loc.fail("observers need a detector to watch", "observers")
    if observers.cat_dim < 2 or observers.cat_dim % 2:
        loc.fail("cat_dim must be an even integer >= 2", "cat_dim")

    bell = None
    if experiment == "bell":
        b = _section(doc, "bell", loc)
        axes = b.get("axes", [[0, 0, 1]])
        if not isinstance(axes, list) or not axes:
            loc.fail("bell.axes must be a non-empty list of 3-vectors", "axes")
        order = b.get("order", list(ORDERS))
        order = [order] if isinstance(order, str) else order
        if not isinstance(order, list) or not order or any(o not in ORDERS for o in order):
            loc.fail(f"bell.order entries must be among {ORDERS}", "order")
        bell = BellSettings(
            tuple(_axis(a, "axes", loc) for a in axes),
            _axis(b.get("local_axis", [0, 0, 1]), "local_axis", loc),
            tuple(order),
        )
        if detector is not None:
            loc.fail("a bell experiment takes no interferometer detector", "detector")
    elif doc.get("bell") is not None:
        loc.fail("a 'bell' section needs experiment = 'bell'", "bell")

    return Scenario(
        name=name,
        description=str(doc.get("description", "")),
        experiment=experiment,
        geometry=geometry,
        grid=grid,
        amp_left=cL,
        amp_right=cR,
        detector=detector,
        external_environment=external,
        readout=readout,
        observers=observers,
        sampling=sampling,
        bell=bell,
    )


def load_scenario(ref: str | Path, seed_override: int | None = None) -> Scenario:
    """A built-in name or a path to a JSON scenario file."""
    ref = str(ref)
    if ref in BUILTINS:
        return scenario_from_dict(copy.deepcopy(BUILTINS[ref]), source=f"builtin:{ref}",
                                  seed_override=seed_override)
    path = Path(ref)
    if not path.exists():
        raise ConfigError(f"{ref}: no such scenario file or built-in (try 'list')")
    text = path.read_text()
    try:
        doc = json.loads(text, object_pairs_hook=_no_dupes)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return scenario_from_dict(doc, text, str(path), seed_override)
