"""Scenario execution: build the state, emit artifacts, run the invariant suite."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bell as bellmod
from . import io
from .branches import (
    Grouping,
    attach_closed_eyes,
    attach_observer_chain,
    cross_branch_interference,
    decompose,
    sample_outcomes,
    self_location_probability,
)
from .detectors import (
    Bolometer,
    MoleculeDetector,
    QubitDetector,
    ReadoutBasis,
    atom_state,
    attach_external_environment,
    couple_bolometer,
    couple_molecule,
    couple_qubit,
    detector_efficiency,
)
from .errors import ConfigError, InvariantError
from .hilbert import ket, make_rng, record_overlaps
from .labels import MacroLabel
from .optics import (
    coherence_visibility,
    fringe_visibility,
    gaussian_slit_field,
    pattern_component,
    pattern_conditional,
    pattern_ignore,
    three_term_expansion,
)
from .scenarios import Scenario

FORMATS = ("csv", "json", "svg")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3e} (tol {self.tolerance:.0e})"


@dataclass
class RunReport:
    scenario: str
    files: list[str] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, value: float, tol: float) -> None:
        self.checks.append(Check(name, bool(value <= tol), float(value), tol))

    def to_json(self) -> dict:
        # wall time is left out so that reruns stay byte-identical
        return {
            "scenario": self.scenario,
            "files": self.files,
            "ok": self.ok,
            "checks": [
                {"name": c.name, "passed": c.passed, "value": c.value, "tolerance": c.tolerance}
                for c in self.checks
            ],
        }


@dataclass
class Outcome:
    """Everything a run computes; ``run`` serializes it."""

    patterns: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    branches: list | None = None
    micro: list | None = None
    sampling: dict | None = None
    bell: dict | None = None


def _build_state(s: Scenario):
    atom = atom_state(s.amp_left, s.amp_right)
    det = s.detector
    if det is None:
        return atom
    if isinstance(det, QubitDetector):
        joint = couple_qubit(atom, det)
    elif isinstance(det, MoleculeDetector):
        joint = couple_molecule(atom, det)
    else:
        joint = couple_bolometer(atom, det)
        if s.external_environment:
            joint = attach_external_environment(joint, det)
    if s.observers.attach_arrow_cat:
        obs_seed = int(make_rng(s.sampling.seed, "observers").integers(0, 2**63))
        joint = attach_observer_chain(joint, obs_seed, s.observers.cat_dim)
        if s.observers.eyes_closed:
            joint = attach_closed_eyes(joint, obs_seed)
    return joint


def _qubit_patterns(field_, joint, readout: ReadoutBasis | None, report: RunReport, total):
    bases = [ReadoutBasis.computational()]
    if readout is not None and readout != bases[0]:
        bases.append(readout)
    out = []
    for basis in bases:
        conds = [
            pattern_conditional(field_, joint, ket("qubit", v), f"cond:{lab}")
            for v, lab in zip(basis.vectors(), basis.labels())
        ]
        err = float(np.max(np.abs(conds[0].density + conds[1].density - total.density)))
        report.check(f"sum_rule[{'/'.join(basis.labels())}]", err, 1e-9)
        out.extend(conds)
    return out


def _branch_patterns(field_, joint, report: RunReport, total, names: dict[str, str]):
    d = decompose(joint, Grouping.MACRO2)
    pats = [
        pattern_component(field_, joint, b.component, f"cond:{names[b.label.detector]}")
        for b in d.branches
    ]
    err = float(np.max(np.abs(sum(p.density for p in pats) - total.density)))
    report.check("sum_rule[branches]", err, 1e-9)
    return pats


def compute(s: Scenario, report: RunReport) -> Outcome:
    out = Outcome()
    out.summary["scenario"] = s.name
    if s.experiment == "bell":
        b = s.bell
        rep = bellmod.report(b.axes, b.local_axis, b.order)
        out.bell = rep
        report.check("no_signaling", rep["max_marginal_deviation"], 1e-12)
        report.check("chsh_tsirelson", abs(abs(rep["S"]) - 2 * math.sqrt(2)), 1e-9)
        worst = max(abs(row["E"] + float(np.dot(row["remote"], row["local"]))) for row in rep["statistics"])
        report.check("singlet_correlation", worst, 1e-12)
        s0 = bellmod.singlet()
        norms = []
        for a in b.axes:
            m = bellmod.measure_local(bellmod.measure_local(s0, "you", a), "me", b.local_axis)
            norms.append(abs(m.state.norm() - 1.0))
        report.check("measurement_norm", max(norms), 1e-12)
        out.summary.update({"S": rep["S"], "max_marginal_deviation": rep["max_marginal_deviation"]})
        return out

    field_ = gaussian_slit_field(s.geometry, s.grid, getattr(s.detector, "backaction_kick", 0.0))
    joint = _build_state(s)
    report.check("norm", abs(joint.norm() - 1.0), 1e-12)
    total = pattern_ignore(field_, joint, "total")
    pats = [total]
    det = s.detector
    if det is None:
        expansion = three_term_expansion(field_, s.amp_left, s.amp_right)
        expansion = expansion / (np.sum(expansion) * s.grid.dx)
        report.check("three_term_expansion", float(np.max(np.abs(expansion - total.density))), 1e-12)
        x = s.grid.x
        symmetric = np.allclose(x, -x[::-1], atol=1e-12, rtol=0)
        if symmetric and abs(s.amp_left - s.amp_right) < 1e-15:
            report.check("mirror_symmetry", float(np.max(np.abs(total.density - total.density[::-1]))), 1e-12)
    elif isinstance(det, QubitDetector):
        pats += _qubit_patterns(field_, joint, s.readout, report, total)
    elif isinstance(det, MoleculeDetector):
        pats += _branch_patterns(field_, joint, report, total, {"Cold": "unbumped", "Hot": "bumped"})
    else:
        pats += _branch_patterns(field_, joint, report, total, {"Cold": "C", "Hot": "H"})
    out.patterns = pats
    out.summary["fringe_visibility"] = {p.label: fringe_visibility(p) for p in pats}
    if joint.factor("atom-path").dim == 2:
        out.summary["coherence_visibility"] = coherence_visibility(joint)
    if isinstance(det, (MoleculeDetector, Bolometer)):
        out.summary["efficiency"] = detector_efficiency(det)

    if det is not None:
        gram = record_overlaps(joint.records)
        report.check("record_orthonormality", float(np.max(np.abs(gram - np.eye(len(gram))))), 1e-9)
        macro = decompose(joint, Grouping.MACRO2)
        micro = decompose(joint, Grouping.MICRO)
        out.branches = macro.table()
        out.micro = micro.table()
        report.check("branch_weights_sum", abs(float(macro.weights.sum()) - 1.0), 1e-9)
        grouped = {b.label: 0.0 for b in macro.branches}
        for b in micro.branches:
            grouped[b.label] += b.weight
        report.check(
            "grouping_consistency",
            max(abs(grouped[b.label] - b.weight) for b in macro.branches),
            1e-12,
        )
        report.check("cross_branch_interference", cross_branch_interference(macro, field_), 1e-9)
        if s.observers.attach_arrow_cat:
            out.summary["self_location"] = {
                side: self_location_probability(macro, MacroLabel(arrow=side)) for side in ("Left", "Right")
            }
        if s.sampling.trials > 0:
            counts = sample_outcomes(macro, s.sampling.trials, s.sampling.seed)
            report.check("sampling_total", abs(sum(counts.values()) - s.sampling.trials), 0)
            out.sampling = {
                "trials": s.sampling.trials,
                "seed": s.sampling.seed,
                "counts": {lab.text: c for lab, c in counts.items()},
                "weights": {b.label.text: b.weight for b in macro.branches},
            }
    return out


def _emit(out: Outcome, out_dir: Path, fmt: str, title: str) -> list[str]:
    files = []

    def put(name: str, text: str):
        io.write_text(out_dir / name, text)
        files.append(name)

    if out.patterns:
        if fmt == "csv":
            put("patterns.csv", io.patterns_csv(out.patterns))
        elif fmt == "json":
            put("patterns.json", io.dumps(io.patterns_json(out.patterns)))
        else:
            put("patterns.svg", io.patterns_svg(out.patterns, title))
    table_fmt = "csv" if fmt == "csv" else "json"
    if out.branches is not None:
        rows = [{"grouping": "Macro2", **r} for r in out.branches] + [
            {"grouping": "Micro", **r} for r in out.micro
        ]
        if table_fmt == "csv":
            flat = [{**r, "keys": " ".join(r["keys"])} for r in rows]
            put("branches.csv", io.table_csv(flat, ["grouping", "label", "keys", "weight"]))
        else:
            put("branches.json", io.dumps({"Macro2": out.branches, "Micro": out.micro}))
    if out.sampling is not None:
        if table_fmt == "csv":
            rows = [
                {"label": k, "count": v, "weight": out.sampling["weights"][k]}
                for k, v in out.sampling["counts"].items()
            ]
            put("sampling.csv", io.table_csv(rows, ["label", "count", "weight"]))
        else:
            put("sampling.json", io.dumps(out.sampling))
    if out.bell is not None:
        put("bell.json", io.dumps(out.bell))
    put("summary.json", io.dumps(out.summary))
    return files


def run(s: Scenario, out_dir: str | Path | None, fmt: str = "csv") -> RunReport:
    """Compute a scenario; write artifacts when ``out_dir`` is given."""
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    t0 = time.perf_counter()
    report = RunReport(s.name)
    out = compute(s, report)
    if out_dir is not None:
        out_dir = Path(out_dir)
        report.files = _emit(out, out_dir, fmt, s.name)
        report.files.append("report.json")
        io.write_text(out_dir / "report.json", io.dumps(report.to_json()))
    report.wall_time = time.perf_counter() - t0
    return report


def require_ok(report: RunReport) -> None:
    if not report.ok:
        bad = ", ".join(c.name for c in report.checks if not c.passed)
        raise InvariantError(f"{report.scenario}: invariant check(s) failed: {bad}")
