import pytest

from superliouville import spinor


@pytest.fixture(scope="session")
def basis8():
    return spinor.assemble_dirac_basis(8)


@pytest.fixture(scope="session")
def basis16():
    return spinor.assemble_dirac_basis(16)
