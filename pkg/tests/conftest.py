import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def fixtures_dir():
    import os

    import anqs

    return os.path.join(os.path.dirname(anqs.__file__), "fixtures")


def randomized_model(n_qubits, hidden, seed, scale=0.35):
    """Model with fully random parameters (biases included).

    The default initialization leaves biases at zero, which parks some
    activations exactly on the rectifier kink where central differences
    are invalid; tests probing derivatives use this generic point instead.
    """
    from anqs.network import ANQSModel

    model = ANQSModel(n_qubits, hidden=hidden, seed=seed)
    gen = np.random.default_rng(seed + 7000)
    model.set_parameters_vector(gen.normal(scale=scale, size=model.n_parameters))
    return model
