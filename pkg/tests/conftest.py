import pytest

from crplocal import CrpModel, GeometricTail, JumpDistribution


@pytest.fixture(scope="session")
def dist4():
    """tau uniform on {1,2}, independent zeta uniform on {0,1}."""
    return JumpDistribution(((1, 0, 0.25), (1, 1, 0.25), (2, 0, 0.25), (2, 1, 0.25)))


@pytest.fixture(scope="session")
def model4(dist4):
    return CrpModel(dist4)


@pytest.fixture(scope="session")
def dist3():
    """Three dependent atoms; a_tau = 1.2, a_zeta = 0.4."""
    return JumpDistribution(((1, 0, 0.4), (1, 1, 0.4), (2, 0, 0.2)))


@pytest.fixture(scope="session")
def model3(dist3):
    return CrpModel(dist3)


@pytest.fixture(scope="session")
def dist_tail():
    """Two atoms plus a constant-reward geometric tail (q = 1/2, k0 = 2)."""
    return JumpDistribution(((1, 0, 0.5), (1, 1, 0.3)), GeometricTail(q=0.5, k0=2, z0=1, c=0.4))


@pytest.fixture(scope="session")
def model_tail(dist_tail):
    return CrpModel(dist_tail)


@pytest.fixture(scope="session")
def dist_beta():
    """Sloped-tail law with a non-empty excluded interval.

    lambda_plus = -ln 0.7 ~ 0.357 < D(0) ~ 0.550, so the level set where the
    tilt exponent reaches the radius is the interval [~-0.552, ~0.535].
    """
    return JumpDistribution(((1, 1, 0.72), (1, -1, 0.08)),
                            GeometricTail(q=0.7, k0=1, z0=0, c=0.2 * 3 / 7, zslope=1))


@pytest.fixture(scope="session")
def model_beta(dist_beta):
    return CrpModel(dist_beta)


@pytest.fixture(scope="session")
def first_jump():
    """Nonhomogeneous first jump with a mild tilt factor."""
    return JumpDistribution(((1, 1, 0.5), (3, 1, 0.5)), min_t=0)


@pytest.fixture(scope="session")
def model_nonhom(dist4, first_jump):
    return CrpModel(dist4, first_jump)


@pytest.fixture(scope="session")
def dist_line():
    """Support on the diagonal line t = z: violates the arithmetic condition."""
    return JumpDistribution(((1, 1, 0.5), (2, 2, 0.5)))
