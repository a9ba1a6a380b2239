import pytest

from diskhopf.model import builtin, find_equilibrium, taylor_expand
from diskhopf.spectrum import min_hopf


@pytest.fixture(scope="session")
def predprey():
    model = builtin("predprey")
    td = taylor_expand(model, find_equilibrium(model))
    hp = min_hopf(td, 4, 4, 50.0, model.domain_R)
    return model, td, hp


@pytest.fixture(scope="session")
def brusselator():
    model = builtin("brusselator")
    td = taylor_expand(model, find_equilibrium(model))
    hp = min_hopf(td, 4, 4, 50.0, model.domain_R)
    return model, td, hp


@pytest.fixture(scope="session")
def predprey_nf(predprey):
    from diskhopf.normal_form import normal_form
    model, td, hp = predprey
    return normal_form(td, hp, 20)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
