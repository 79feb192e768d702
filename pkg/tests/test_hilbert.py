import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from whichpath.errors import ConfigError
from whichpath.hilbert import (
    Factor,
    Record,
    StateVector,
    basis_state,
    check_seed,
    contract,
    inner,
    ket,
    make_rng,
    overlap_pair,
    partial_trace,
    permute,
    project,
    random_unit_vector,
    record_overlaps,
    remap_records,
    tensor,
)
from whichpath.labels import COLD, HOT

SQ = 1 / math.sqrt(2)


def rand_state(rng, dims, names=None):
    names = names or [f"f{i}" for i in range(len(dims))]
    z = rng.standard_normal(math.prod(dims)) + 1j * rng.standard_normal(math.prod(dims))
    return StateVector(tuple(Factor(n, d) for n, d in zip(names, dims)), z / np.linalg.norm(z))


def test_tensor_layout_matches_mixed_radix_index():
    a, b, c = np.array([1, 2j]), np.array([3, 4, 5]), np.array([6, -1j])
    s = tensor(ket("a", a), ket("b", b), ket("c", c))
    assert s.names == ("a", "b", "c")
    assert s.dims == (2, 3, 2)
    np.testing.assert_allclose(s.amps, oracles.product_vector([a, b, c]), atol=0)
    assert s.amps[oracles.index([1, 2, 0], [2, 3, 2])] == 2j * 5 * 6


def test_tensor_rejects_duplicate_names():
    with pytest.raises(ConfigError, match="duplicate"):
        tensor(ket("a", [1, 0]), ket("a", [0, 1]))


def test_amplitudes_are_read_only():
    s = ket("a", [1, 0])
    with pytest.raises(ValueError):
        s.amps[0] = 2


def test_inner_is_conjugate_linear_in_first_argument():
    a = ket("q", [1j, 0])
    b = ket("q", [1, 0])
    assert inner(a, b) == -1j
    assert inner(b, a) == 1j
    with pytest.raises(ConfigError):
        inner(a, ket("r", [1, 0]))


def test_partial_trace_matches_explicit_sum():
    rng = np.random.default_rng(0)
    s = rand_state(rng, [3, 2, 4])
    rho = partial_trace(s, ["f0"]).entries
    np.testing.assert_allclose(rho, oracles.reduced_path_matrix(s.amps, 3), atol=1e-14)
    # keeping a middle factor: sum over the others by hand
    t = s.amps.reshape(3, 2, 4)
    expected = np.einsum("aib,ajb->ij", t, t.conj())
    np.testing.assert_allclose(partial_trace(s, ["f1"]).entries, expected, atol=1e-14)


def test_partial_trace_of_product_state_is_pure():
    s = tensor(ket("a", [0.6, 0.8]), ket("b", [1j, 0, 0]))
    rho = partial_trace(s, ["a"]).entries
    np.testing.assert_allclose(rho, np.outer([0.6, 0.8], [0.6, 0.8]), atol=1e-15)


def test_permute_round_trip_and_contract_project():
    rng = np.random.default_rng(1)
    s = rand_state(rng, [2, 3, 2], ["x", "y", "z"])
    p = permute(s, ["z", "x", "y"])
    assert p.dims == (2, 2, 3)
    np.testing.assert_array_equal(permute(p, ["x", "y", "z"]).amps, s.amps)
    v = ket("y", [0, 1, 0])
    c = contract(s, v)
    np.testing.assert_allclose(c.amps, s.amps.reshape(2, 3, 2)[:, 1, :].reshape(-1))
    pr = project(s, v)
    np.testing.assert_allclose(project(pr, v).amps, pr.amps, atol=1e-15)
    assert pr.names == s.names


def test_seed_validation():
    assert check_seed(2**64 - 1) == 2**64 - 1
    for bad in (-1, 2**64, 1.5, True, "3"):
        with pytest.raises(ConfigError):
            check_seed(bad)


def test_streams_are_reproducible_and_independent():
    a = make_rng(5, "x").standard_normal(4)
    assert np.array_equal(a, make_rng(5, "x").standard_normal(4))
    assert not np.array_equal(a, make_rng(5, "y").standard_normal(4))
    assert not np.array_equal(a, make_rng(6, "x").standard_normal(4))


def test_haar_overlap_statistics():
    """E|<v1|v2>|^2 = 1/d for independent Haar vectors; checked at d = 8 over 1e4 pairs."""
    d, n = 8, 10_000
    vals = np.array([
        abs(inner(random_unit_vector(d, 2 * i), random_unit_vector(d, 2 * i + 1))) ** 2 for i in range(n)
    ])
    # |<v1|v2>|^2 ~ Beta(1, d-1): variance (d-1) / (d^2 (d+1))
    sigma = math.sqrt((d - 1) / (d**2 * (d + 1)) / n)
    assert abs(vals.mean() - 1 / d) < 3 * sigma


@pytest.mark.parametrize("c", [0.0, 0.1, 0.5, 0.9, 0.999, 1.0])
@pytest.mark.parametrize("dim", [2, 5, 16])
def test_overlap_pair_hits_target_overlap(c, dim):
    u, b = overlap_pair(dim, c, seed=17)
    assert abs(u.norm() - 1) < 1e-12 and abs(b.norm() - 1) < 1e-12
    assert abs(inner(u, b) - c) < 1e-12


def test_overlap_pair_rejects_bad_input():
    with pytest.raises(ConfigError):
        overlap_pair(1, 0.5, 0)
    with pytest.raises(ConfigError):
        overlap_pair(4, 1.5, 0)


def test_remap_records_is_an_isometry_and_checks_orthonormality():
    rng = np.random.default_rng(2)
    recs = (Record("0", COLD, basis_state("d", 2, 0)), Record("1", HOT, basis_state("d", 2, 1)))
    s = rand_state(rng, [2, 2], ["a", "d"]).with_records(recs)
    new = [
        Record(r.key, r.label, tensor(r.vector, ket("e", v)))
        for r, v in zip(recs, ([1, 0, 0], [0, 0.6, 0.8j]))
    ]
    out = remap_records(s, new, extra=(Factor("e", 3),), residual=ket("e", [1, 0, 0]))
    assert abs(out.norm() - 1) < 1e-12
    np.testing.assert_allclose(record_overlaps(out.records), np.eye(2), atol=1e-12)
    bad = (recs[0], Record("x", HOT, ket("d", [SQ, SQ])))
    with pytest.raises(ConfigError, match="orthonormal"):
        remap_records(s.with_records(bad), new, extra=(Factor("e", 3),), residual=ket("e", [1, 0, 0]))


dims_strategy = st.lists(st.integers(1, 4), min_size=2, max_size=3)


@settings(max_examples=40, deadline=None)
@given(dims=dims_strategy, seed=st.integers(0, 2**32))
def test_reduced_states_are_valid_density_matrices(dims, seed):
    s = rand_state(np.random.default_rng(seed), dims)
    for keep in (["f0"], ["f1"], ["f0", "f1"]):
        rho = partial_trace(s, keep)
        assert rho.is_valid(1e-12)
        assert abs(rho.trace() - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(dims=st.tuples(st.integers(1, 5), st.integers(1, 5)), seed=st.integers(0, 2**32))
def test_both_halves_share_a_spectrum(dims, seed):
    """Schmidt decomposition: the two reduced states have the same nonzero eigenvalues."""
    s = rand_state(np.random.default_rng(seed), list(dims))
    ea = np.sort(partial_trace(s, ["f0"]).eigenvalues())[::-1]
    eb = np.sort(partial_trace(s, ["f1"]).eigenvalues())[::-1]
    k = min(dims)
    np.testing.assert_allclose(ea[:k], eb[:k], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), scale=st.floats(0.1, 3.0))
def test_partial_trace_trace_equals_squared_norm(seed, scale):
    s = rand_state(np.random.default_rng(seed), [3, 3]).scaled(scale)
    assert abs(partial_trace(s, ["f0"]).trace() - scale**2) < 1e-12
