import numpy as np
import pytest

from sparc_gamp.channels import AWGN, BSC, Z, ChannelModel, flip, quantize_sign, transmit


def test_sign_of_zero_is_plus_one():
    np.testing.assert_array_equal(quantize_sign([-2.0, -0.0, 0.0, 3.0]), [-1, 1, 1, 1])


@pytest.mark.parametrize("kind,eps", [(BSC, -0.1), (BSC, 0.6), (Z, 1.0), (Z, -0.01)])
def test_invalid_epsilon(kind, eps):
    with pytest.raises(ValueError):
        ChannelModel.from_name(kind, epsilon=eps)


def test_invalid_kind_and_snr():
    with pytest.raises(ValueError):
        ChannelModel("erasure", epsilon=0.1)
    with pytest.raises(ValueError):
        ChannelModel.awgn(0.0)
    with pytest.raises(ValueError):
        ChannelModel(AWGN)


def test_bsc_zero_epsilon_is_identity(rng):
    z = rng.standard_normal(1000)
    y = transmit(ChannelModel.bsc(0.0), z, rng)
    np.testing.assert_array_equal(y, quantize_sign(z))


def test_bsc_always_flips(rng):
    s = quantize_sign(rng.standard_normal(500))
    np.testing.assert_array_equal(flip(s, BSC, 1.0, rng), -s)


def test_bsc_flip_rate(rng):
    s = np.ones(200_000)
    y = flip(s, BSC, 0.1, rng)
    assert np.mean(y < 0) == pytest.approx(0.1, abs=0.003)


def test_z_only_flips_minus_one(rng):
    plus = flip(np.ones(10_000), Z, 0.5, rng)
    assert np.all(plus == 1.0)
    minus = flip(-np.ones(200_000), Z, 0.1, rng)
    assert np.mean(minus > 0) == pytest.approx(0.1, abs=0.003)


def test_flip_rejects_non_binary(rng):
    with pytest.raises(ValueError):
        flip(np.array([1.0, 0.5]), BSC, 0.1, rng)


def test_awgn_noise_variance(rng):
    ch = ChannelModel.awgn(4.0)
    y = transmit(ch, np.zeros(200_000), rng)
    assert np.var(y) == pytest.approx(0.25, rel=0.02)
    assert ch.noise_var == 0.25


def test_parameter_and_str():
    assert ChannelModel.bsc(0.1).parameter == 0.1
    assert ChannelModel.awgn(15).parameter == 15
    assert str(ChannelModel.z(0.05)) == "z(epsilon=0.05)"
    assert not ChannelModel.awgn(1).is_binary


def test_transmit_reproducible():
    z = np.linspace(-1, 1, 101)
    ch = ChannelModel.bsc(0.2)
    a = transmit(ch, z, np.random.default_rng(5))
    b = transmit(ch, z, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)
