import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparc_gamp import core
from sparc_gamp.channels import ChannelModel

BSC01 = ChannelModel.bsc(0.1)


def test_make_params_rounds_m_up():
    p = core.make_params(4, 1000, 0.3, BSC01)
    assert p.N == 4000
    assert p.K == 2000
    assert p.M == math.ceil(2000 / 0.3)
    assert p.R <= 0.3
    assert p.R == pytest.approx(2000 / p.M)


def test_make_params_exact_rate_keeps_m():
    # K / R is an integer: no extra row
    p = core.make_params(2, 1000, 0.5, BSC01)
    assert p.M == 2000
    assert p.R == 0.5


@pytest.mark.parametrize("B", [0, 1, 3, 6, 12])
def test_make_params_rejects_bad_section_size(B):
    with pytest.raises(ValueError):
        core.make_params(B, 10, 0.5, BSC01)


@pytest.mark.parametrize("L,R", [(0, 0.5), (10, 0.0), (10, -1.0), (2.5, 0.5)])
def test_make_params_rejects_bad_dims(L, R):
    with pytest.raises(ValueError):
        core.make_params(2, L, R, BSC01)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([2, 4, 8, 16, 32, 64]), st.integers(1, 3000), st.floats(0.01, 3.0))
def test_realized_rate_never_exceeds_target(B, L, R):
    p = core.make_params(B, L, R, BSC01)
    assert p.R <= R * (1 + 1e-12)
    # one row fewer would overshoot the target
    if p.M > 1:
        assert p.K / (p.M - 1) > R * (1 - 1e-12)


def test_sample_message_one_hot(rng):
    p = core.make_params(8, 500, 0.5, BSC01)
    x = core.sample_message(p, rng)
    sec = core.sections(x, 8)
    assert sec.shape == (500, 8)
    assert np.all(sec.sum(axis=1) == 1)
    assert set(np.unique(x)) <= {0.0, 1.0}


def test_message_index_roundtrip(rng):
    idx = rng.integers(16, size=100)
    x = core.indices_to_message(idx, 16)
    np.testing.assert_array_equal(core.message_to_indices(x, 16), idx)


def test_design_matrix_scaling(rng):
    p = core.make_params(4, 250, 0.5, BSC01)
    A = core.sample_design_matrix(p, rng)
    assert A.shape == (p.M, p.N)
    assert A.dtype == np.float64
    assert np.var(A) * p.L == pytest.approx(1.0, rel=0.02)
    assert abs(np.mean(A)) < 3 / math.sqrt(A.size * p.L)


def test_design_matrix_float32_option(rng):
    p = core.make_params(2, 50, 0.5, BSC01)
    A = core.sample_design_matrix(p, rng, dtype=np.float32)
    assert A.dtype == np.float32


def test_codeword_power_near_one(rng):
    p = core.make_params(4, 1000, 0.5, BSC01)
    A = core.sample_design_matrix(p, rng)
    z = core.encode(A, core.sample_message(p, rng))
    assert np.mean(z**2) == pytest.approx(1.0, rel=0.05)


def test_encode_dimension_mismatch():
    with pytest.raises(ValueError):
        core.encode(np.ones((3, 4)), np.ones(5))


def test_mse_counts_per_section():
    x = core.indices_to_message([0, 1], 2)
    xhat = np.array([0.5, 0.5, 0.0, 1.0])
    assert core.mse(x, xhat, 2) == pytest.approx(0.25)
    assert core.mse(x, np.zeros(4), 2) == 1.0


def test_hard_decision_ties_pick_lowest_index():
    xhat = np.array([0.25, 0.25, 0.25, 0.25, 0.1, 0.4, 0.4, 0.1])
    np.testing.assert_array_equal(core.hard_decision(xhat, 4), [1, 0, 0, 0, 0, 1, 0, 0])


def test_ser():
    x = core.indices_to_message([0, 1, 2, 3], 4)
    wrong = core.indices_to_message([0, 1, 3, 3], 4)
    assert core.ser(x, x, 4) == 0.0
    assert core.ser(x, wrong, 4) == 0.25


def test_ser_length_mismatch():
    with pytest.raises(ValueError):
        core.ser(np.ones(4), np.ones(6), 2)
