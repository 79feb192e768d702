import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whichpath.branches import (
    ARROW,
    CAT,
    SAMPLE_CHUNK,
    Grouping,
    attach_closed_eyes,
    attach_observer_chain,
    binomial_band,
    closed_eyes_unitary,
    cross_branch_interference,
    decompose,
    decompose_with,
    sample_chunk,
    sample_outcomes,
    self_location_probability,
)
from whichpath.detectors import (
    Bolometer,
    QubitDetector,
    ReadoutBasis,
    atom_state,
    attach_external_environment,
    couple_bolometer,
    couple_qubit,
    readout_records,
)
from whichpath.errors import ConfigError, QueryError
from whichpath.hilbert import partial_trace, record_overlaps
from whichpath.labels import MacroLabel
from whichpath.optics import ScreenGrid, SlitGeometry, gaussian_slit_field

SQ = 1 / math.sqrt(2)
FIELD = gaussian_slit_field(SlitGeometry(), ScreenGrid(n=513))


def born_state(n=4, p=1.0, seed=3, cL=0.1):
    det = Bolometer(n_molecules=n, p_hit=p, seed=seed)
    atom = atom_state(cL, math.sqrt(1 - cL**2))
    return attach_external_environment(couple_bolometer(atom, det), det)


def test_state_without_records_is_a_single_branch():
    d = decompose(atom_state(SQ, SQ))
    assert len(d.branches) == 1
    assert d.branches[0].label == MacroLabel()
    assert abs(d.weights[0] - 1) < 1e-12


def test_unknown_grouping_is_rejected():
    with pytest.raises(ConfigError):
        decompose(born_state(), "Macro3")


def test_macro_groups_cold_first_and_micro_keeps_every_record():
    joint = born_state(p=0.3)
    macro = decompose(joint, Grouping.MACRO2)
    micro = decompose(joint, "Micro")
    assert [b.label.detector for b in macro.branches] == ["Cold", "Hot"]
    assert macro.branches[1].keys == ("H1", "H2", "H3", "H4")
    assert [b.keys for b in micro.branches] == [("C",), ("H1",), ("H2",), ("H3",), ("H4",)]
    # micro weights follow the single-scattering ladder b_n^2 on the right path
    pR = 1 - 0.01
    expected = [0.01 + pR * 0.7**4] + [pR * 0.3 * 0.7 ** (n - 1) for n in range(1, 5)]
    np.testing.assert_allclose(micro.weights, expected, atol=1e-12)


def test_residual_weight_outside_records_is_an_error():
    joint = couple_qubit(atom_state(SQ, SQ), QubitDetector())
    half = joint.with_records(joint.records[:1])
    with pytest.raises(ConfigError, match="outside"):
        decompose(half)


def test_decompose_with_eraser_records():
    joint = couple_qubit(atom_state(SQ, SQ), QubitDetector())
    d = decompose_with(joint, readout_records(ReadoutBasis.eraser()), Grouping.MICRO)
    np.testing.assert_allclose(d.weights, [0.5, 0.5], atol=1e-12)
    # branch amplitudes are (|L> +/- |R>)/2: each is a fully coherent path superposition
    for b in d.branches:
        rho = partial_trace(b.component, ["atom-path"]).entries
        assert abs(2 * abs(rho[0, 1]) / np.trace(rho).real - 1) < 1e-12


def test_observer_chain_labels_and_orthogonality():
    joint = attach_observer_chain(born_state(), seed=9)
    assert joint.has(ARROW) and joint.has(CAT)
    labels = {r.key: r.label.text for r in joint.records}
    assert labels["C"] == "Cold/Left/SawL"
    assert labels["H1"] == "Hot/Right/SawR"
    np.testing.assert_allclose(record_overlaps(joint.records), np.eye(5), atol=1e-12)
    with pytest.raises(ConfigError):
        attach_observer_chain(joint)
    with pytest.raises(ConfigError):
        attach_observer_chain(born_state(), cat_dim=3)


def test_closed_eyes_keeps_cats_in_their_halves():
    joint = attach_closed_eyes(attach_observer_chain(born_state(), seed=9), seed=4)
    u = closed_eyes_unitary(4, 4)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    assert np.all(u[:2, 2:] == 0) and np.all(u[2:, :2] == 0)
    d = decompose(joint)
    assert [b.label.cat for b in d.branches] == ["EyesClosedL", "EyesClosedR"]
    # the two cat reduced states live on orthogonal halves
    cats = [partial_trace(b.component, [CAT]).entries for b in d.branches]
    assert abs(np.trace(cats[0] @ cats[1])) < 1e-14
    with pytest.raises(ConfigError):
        attach_closed_eyes(born_state())


def test_self_location_probability():
    d = decompose(attach_closed_eyes(attach_observer_chain(born_state(), seed=1), seed=2))
    assert abs(self_location_probability(d, MacroLabel(arrow="Right")) - 0.99) < 1e-12
    assert abs(self_location_probability(d, MacroLabel(arrow="Left", cat="EyesClosedL")) - 0.01) < 1e-12
    assert abs(self_location_probability(d, MacroLabel()) - 1) < 1e-12
    with pytest.raises(QueryError):
        self_location_probability(d, MacroLabel(arrow="Left", cat="SawL"))


def test_cross_branch_interference_vanishes_only_with_orthogonal_records():
    joint = couple_qubit(atom_state(SQ, SQ), QubitDetector())
    assert cross_branch_interference(decompose(joint), FIELD) < 1e-15
    single = decompose(atom_state(SQ, SQ))
    assert cross_branch_interference(single, FIELD) == 0.0


def test_sampling_is_deterministic_and_seed_sensitive():
    d = decompose(born_state(p=0.3))
    a = sample_outcomes(d, 5000, 42)
    assert a == sample_outcomes(d, 5000, 42)
    assert a != sample_outcomes(d, 5000, 43)
    assert sum(a.values()) == 5000


def test_chunk_parallel_sampling_equals_serial():
    d = decompose(born_state(p=0.3), Grouping.MICRO)
    trials = 3 * SAMPLE_CHUNK + 1234
    serial = sample_outcomes(d, trials, 7)
    p = d.weights / d.weights.sum()
    sizes = [min(SAMPLE_CHUNK, trials - s) for s in range(0, trials, SAMPLE_CHUNK)]
    with ThreadPoolExecutor(max_workers=4) as pool:
        parts = list(pool.map(lambda i: sample_chunk(p, sizes[i], 7, i), range(len(sizes))))
    total = np.sum(parts, axis=0)
    merged = {}
    for b, c in zip(d.branches, total):
        merged[b.label] = merged.get(b.label, 0) + int(c)
    assert merged == serial


def test_sampling_rejects_bad_arguments():
    d = decompose(born_state())
    for trials in (0, -5, 2.5):
        with pytest.raises(ConfigError):
            sample_outcomes(d, trials, 1)
    with pytest.raises(ConfigError):
        sample_outcomes(d, 10, -1)


def test_binomial_band():
    assert binomial_band(0.99, 100_000) == pytest.approx(0.000944, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(cL=st.floats(0.05, 0.95), p=st.floats(0.05, 1.0), seed=st.integers(0, 2**32))
def test_weights_are_invariant_under_observers(cL, p, seed):
    joint = born_state(n=2, p=p, seed=seed % 1000, cL=cL)
    w0 = decompose(joint).weights
    w1 = decompose(attach_observer_chain(joint, seed=seed)).weights
    w2 = decompose(attach_closed_eyes(attach_observer_chain(joint, seed=seed), seed=seed + 1)).weights
    np.testing.assert_allclose(w1, w0, atol=1e-12)
    np.testing.assert_allclose(w2, w0, atol=1e-12)
    pR = 1 - cL**2
    np.testing.assert_allclose(w0, [cL**2 + pR * (1 - p) ** 2, pR * (1 - (1 - p) ** 2)], atol=1e-12)


def test_total_weight_is_basis_independent():
    joint = couple_qubit(atom_state(0.6, 0.8), QubitDetector(efficiency=0.7))
    d0 = decompose(joint, Grouping.MICRO)
    d1 = decompose_with(joint, readout_records(ReadoutBasis(1.1, 0.4)), Grouping.MICRO)
    assert abs(d0.weights.sum() - d1.weights.sum()) < 1e-12
