import pickle

import numpy as np
import pytest

from spherepack.channel import SymmetricCqChannel, empirical_distribution, preset, probability_vector
from spherepack.errors import DomainError, ValidationError
from spherepack.qcore import DensityOperator


def test_bsc_second_output(bsc):
    assert np.allclose(bsc.output(2).matrix, np.diag([0.1, 0.9]))


def test_hadamard_second_output(pure):
    assert np.allclose(pure.output(2).matrix, np.full((2, 2), 0.5), atol=1e-12)


@pytest.mark.parametrize("name, params", [("bsc", {"p": 0.1}), ("bec", {"e": 0.3}),
                                          ("pure-hadamard", {}), ("mixed-hadamard", {"eps": 0.1})])
def test_first_output_is_generator(name, params):
    ch = preset(name, params)
    assert np.allclose(ch.output(1).matrix, ch.w1.matrix)


def test_output_range(bsc):
    with pytest.raises(DomainError) as err:
        bsc.output(3)
    assert err.value.code == "SYMBOL_RANGE"


def test_bec_outputs(bec):
    assert np.allclose(bec.output(2).matrix, np.diag([0.0, 0.3, 0.7]))


@pytest.mark.parametrize("name, params", [("bsc", {"p": 1.5}), ("bec", {"e": -0.1}),
                                          ("mixed-hadamard", {"eps": 2})])
def test_preset_param_range(name, params):
    with pytest.raises(DomainError) as err:
        preset(name, params)
    assert err.value.code == "PRESET_PARAM"


def test_unknown_preset():
    with pytest.raises(DomainError) as err:
        preset("awgn")
    assert err.value.code == "UNKNOWN_PRESET"


@pytest.mark.parametrize("name, params", [("bsc", {"p": 0.1}), ("bec", {"e": 0.3}),
                                          ("pure-hadamard", {}), ("mixed-hadamard", {"eps": 0.1})])
def test_outputs_are_states_and_average_commutes(name, params):
    ch = preset(name, params)
    for w in ch.outputs:
        DensityOperator(w.matrix)
    v = ch.v.matrix
    avg = ch.average_output()
    assert np.max(np.abs(v @ avg - avg @ v)) <= 1e-10
    # cyclicity: one more conjugation returns to W_1
    vk = np.linalg.matrix_power(v, ch.k)
    assert np.allclose(vk @ ch.w1.matrix @ vk.conj().T, ch.w1.matrix, atol=1e-10)


@pytest.mark.parametrize("xs, expected", [((1, 1, 2, 1), (0.75, 0.25)), ((2, 2, 2), (0.0, 1.0))])
def test_empirical_distribution(xs, expected):
    assert np.allclose(empirical_distribution(xs, 2), expected)


def test_empirical_distribution_errors():
    with pytest.raises(DomainError):
        empirical_distribution((), 2)
    with pytest.raises(DomainError):
        empirical_distribution((1, 3), 2)


def test_probability_vector_checks():
    with pytest.raises(ValidationError):
        probability_vector([0.5, 0.6])
    with pytest.raises(ValidationError):
        probability_vector([1.5, -0.5])
    with pytest.raises(ValidationError):
        probability_vector([1.0], 2)


def test_channel_hash_and_pickle(bsc):
    again = preset("bsc", p=0.1)
    assert again == bsc and hash(again) == hash(bsc)
    assert pickle.loads(pickle.dumps(bsc)) == bsc
    assert preset("bsc", p=0.2) != bsc


def test_three_symbol_channel():
    shift = np.roll(np.eye(3), 1, axis=0).astype(complex)
    ch = SymmetricCqChannel(np.diag([0.8, 0.15, 0.05]), shift, 3)
    assert ch.k == 3
    assert np.allclose(np.diag(ch.output(2).matrix).real, [0.05, 0.8, 0.15])
