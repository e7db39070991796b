import json

import numpy as np
import pytest

from dlnflow import scatter
from dlnflow.scatter import (
    SPD_NOT_POSITIVE_DEFINITE,
    SPD_NOT_SYMMETRIC,
    SPD_OK,
    ScatterPair,
    pair_from_json,
    pair_to_json,
    raw_uniform_factors,
    splitmix64,
    synthesize_scatter,
    uniform_doubles,
    validate_spd,
)


def test_splitmix64_reference_outputs():
    # first three outputs for seed 0, from the published reference sequence
    out = splitmix64(0, 3)
    assert [int(x) for x in out] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_uniform_doubles_in_unit_interval():
    u = uniform_doubles(123, 10_000)
    assert np.all(u >= 0.0) and np.all(u < 1.0)
    # crude uniformity sanity check, not a statistical test
    assert abs(u.mean() - 0.5) < 0.02


def test_synthesis_bit_identical(reference_pair):
    again = synthesize_scatter(5, 8086, (0.4, 0.6))
    assert np.array_equal(reference_pair.s_w, again.s_w)
    assert np.array_equal(reference_pair.s_b, again.s_b)


def test_synthesized_pair_is_valid_spd(reference_pair):
    assert validate_spd(reference_pair.s_w) == SPD_OK
    assert validate_spd(reference_pair.s_b) == SPD_OK
    assert np.array_equal(reference_pair.s_w, reference_pair.s_w.T)
    assert np.array_equal(reference_pair.s_b, reference_pair.s_b.T)


@pytest.mark.parametrize("dim", [1, 2, 3, 7, 16])
@pytest.mark.parametrize("seed", [0, 42, 2**63])
def test_synthesis_valid_across_dims_and_seeds(dim, seed):
    pair = synthesize_scatter(dim, seed, (0.4, 0.6))
    assert pair.dim == dim
    assert validate_spd(pair.s_w) == SPD_OK
    assert validate_spd(pair.s_b) == SPD_OK


def test_degenerate_spread_collapses_distribution():
    pair = synthesize_scatter(1, 0, (1, 1))
    eps = 1 * 1.0 * 1.0 * 1e-6
    assert pair.s_w[0, 0] == 1.0 + eps
    assert np.array_equal(pair.s_w, pair.s_b)


def test_two_by_two_pd_by_determinant_and_trace():
    # independent closed-form SPD criterion for 2x2 symmetric matrices
    pair = synthesize_scatter(2, 42, (0.4, 0.6))
    for m in (pair.s_w, pair.s_b):
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        assert det > 0.0
        assert m[0, 0] + m[1, 1] > 0.0


def test_raw_factors_within_spread():
    g_w, g_b = raw_uniform_factors(6, 99, (0.4, 0.6))
    for g in (g_w, g_b):
        assert g.shape == (6, 6)
        assert np.all(g >= 0.4) and np.all(g <= 0.6)


def test_substreams_decorrelated():
    g_w, g_b = raw_uniform_factors(4, 7, (0.4, 0.6))
    assert not np.array_equal(g_w, g_b)


@pytest.mark.parametrize(
    "dim,seed,spread",
    [
        (0, 1, (0.4, 0.6)),
        (3, -1, (0.4, 0.6)),
        (3, 2**64, (0.4, 0.6)),
        (3, 1, (0.0, 0.6)),
        (3, 1, (-0.1, 0.6)),
        (3, 1, (0.6, 0.4)),
    ],
)
def test_synthesis_rejects_bad_arguments(dim, seed, spread):
    with pytest.raises(ValueError):
        synthesize_scatter(dim, seed, spread)


def test_validate_spd_identity_ok():
    assert validate_spd(np.eye(3)) == SPD_OK


def test_validate_spd_indefinite():
    # eigenvalues 3 and -1
    assert validate_spd(np.array([[1.0, 2.0], [2.0, 1.0]])) == SPD_NOT_POSITIVE_DEFINITE


def test_validate_spd_asymmetric():
    assert validate_spd(np.array([[1.0, 0.0], [0.5, 1.0]])) == SPD_NOT_SYMMETRIC


def test_validate_spd_rejects_non_square():
    with pytest.raises(ValueError):
        validate_spd(np.ones((2, 3)))


def test_pair_constructor_rejects_bad_matrices():
    with pytest.raises(ValueError):
        ScatterPair(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2))
    with pytest.raises(ValueError):
        ScatterPair(np.eye(2), np.eye(3))


def test_pair_arrays_read_only(reference_pair):
    with pytest.raises(ValueError):
        reference_pair.s_w[0, 0] = 2.0


def test_json_round_trip(reference_pair):
    text = pair_to_json(reference_pair, 8086, (0.4, 0.6))
    doc = json.loads(text)
    assert set(doc) == {"dim", "seed", "spread", "s_w", "s_b"}
    assert len(doc["s_w"]) == 25
    back, seed, spread = pair_from_json(text)
    assert seed == 8086
    assert spread == (0.4, 0.6)
    assert np.array_equal(back.s_w, reference_pair.s_w)
    assert np.array_equal(back.s_b, reference_pair.s_b)


def test_gram_matrix_matches_brute_force():
    # entry (i, j) of the synthesized matrix is the dot of factor rows i and j
    dim, seed, spread = 4, 5150, (0.4, 0.6)
    g_w, _ = raw_uniform_factors(dim, seed, spread)
    pair = synthesize_scatter(dim, seed, spread)
    eps = dim * spread[1] ** 2 * 1e-6
    for i in range(dim):
        for j in range(dim):
            expect = sum(g_w[i, k] * g_w[j, k] for k in range(dim)) + (eps if i == j else 0.0)
            assert pair.s_w[i, j] == pytest.approx(expect, rel=1e-14)


def test_scatter_module_determinism_is_pure():
    a = scatter.synthesize_scatter(3, 11, (0.5, 0.7))
    b = scatter.synthesize_scatter(3, 11, (0.5, 0.7))
    c = scatter.synthesize_scatter(3, 12, (0.5, 0.7))
    assert np.array_equal(a.s_w, b.s_w) and np.array_equal(a.s_b, b.s_b)
    assert not np.array_equal(a.s_w, c.s_w)
