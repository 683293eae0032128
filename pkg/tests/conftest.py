import pytest

from twistbound import Disc, Ellipse, assemble_h_beta0, build_cross_section


@pytest.fixture(scope="session")
def disc16():
    return build_cross_section(Disc(), 1.0 / 16)


@pytest.fixture(scope="session")
def disc16_h(disc16):
    return assemble_h_beta0(disc16, 1.0)


@pytest.fixture(scope="session")
def ellipse16():
    return build_cross_section(Ellipse(eps=0.3), 1.0 / 16)
