import pytest
from hypothesis import settings

from bmlp.petri import ElementaryNet

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

CHAIN3 = """\
flight(c0,c1).
flight(c1,c2).
route(X,Y) :- flight(X,Y).
route(X,Y) :- flight(X,Z), route(Z,Y).
"""

# Route network: berlin and paris fly together to london and toronto, that
# pair continues to new_york, and new_york returns to london.
FLIGHT_NET = """\
place berlin.
place paris.
place london.
place toronto.
place new_york.
transition flight_1: berlin paris -> london toronto.
transition flight_2: london toronto -> new_york.
transition flight_3: new_york -> london.
"""

# Small token-game net: t2 moves a token from p3 to p5; t1 and t3 only make
# sure other transitions are present.
TOKEN_NET = """\
transition t1: p1 p2 -> p3.
transition t2: p3 -> p5.
transition t3: p4 p5 -> p1.
"""


@pytest.fixture
def flights():
    from bmlp.petri import parse_net

    return parse_net(FLIGHT_NET)


@pytest.fixture
def token_net() -> ElementaryNet:
    from bmlp.petri import parse_net

    return parse_net(TOKEN_NET)


# -- acceptance summary ------------------------------------------------------

_acceptance: dict[str, dict] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    entry = _acceptance.setdefault(props["criterion"], {"passed": True, "detail": ""})
    entry["detail"] = props.get("detail", entry["detail"])
    if report.failed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance, key=lambda s: int(s.split()[0][1:])):
        entry = _acceptance[name]
        status = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"{status}  {name}: {entry['detail']}")
