import pytest

from slicecauchy import Gis, PlanarDomain, get_algebra

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def H():
    return get_algebra("quaternion")


@pytest.fixture(scope="session")
def R3():
    return get_algebra("clifford:3")


@pytest.fixture(scope="session")
def full_gis():
    return Gis.full_quaternion()


@pytest.fixture(scope="session")
def para3(R3):
    return Gis.paravector(R3)


@pytest.fixture(scope="session")
def disk():
    return PlanarDomain.disk(0.0, 1.0)
