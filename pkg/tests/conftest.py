import pytest

from smpra import kernels

BACKENDS = ["numpy"] + (["cython"] if kernels._ckernels is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param
