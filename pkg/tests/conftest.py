import pytest

from slqlab.model import ModelData, symmetric_two_class


@pytest.fixture
def sym_model():
    return symmetric_two_class(beta1=0.5)


@pytest.fixture
def conv_model():
    return ModelData(mu=(2.0, 2.0), lam=(1.0, 1.0), sigma_sq=(1.0, 1.0), gamma_sq=(1.0, 1.0), beta=1.0)
