import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bmlp.bench import GenSpec, gen_net
from bmlp.datalog import Atom, classify_lir, parse_program, render_program
from bmlp.petri import (
    ElementaryNet,
    NetError,
    NetSyntaxError,
    TransitionNotEnabled,
    UnknownPlace,
    cross_check,
    enabled,
    fire,
    hypernodes,
    marking_constant,
    parse_net,
    reach_query,
    reachable_places,
    render_net,
    tf_step,
    tf_step_acc,
    transform,
)
from oracles import simulate_tokens

FLIGHT_PROGRAM = """\
flight(m1,berlin_paris).
flight_1(berlin_paris,london_toronto).
flight_1(berlin_paris,london).
flight_1(berlin_paris,toronto).
flight_2(london_toronto,new_york).
flight_3(new_york,london).
flight(X,Y) :- flight_1(X,Y).
flight(X,Y) :- flight_2(X,Y).
flight(X,Y) :- flight_3(X,Y).
route(X,Y) :- flight(X,Y).
route(X,Y) :- flight(X,Z), route(Z,Y).
"""


@st.composite
def nets(draw, max_places=8, max_transitions=10):
    n = draw(st.integers(1, max_places))
    places = [f"p{i}" for i in range(n)]
    place_sets = st.sets(st.sampled_from(places), min_size=1, max_size=min(3, n))
    ts = draw(st.lists(st.tuples(place_sets, place_sets), max_size=max_transitions))
    return ElementaryNet.build([(f"t{i}", ins, outs) for i, (ins, outs) in enumerate(ts)], places)


@st.composite
def net_and_markings(draw):
    net = draw(nets())
    sub = st.sets(st.sampled_from(net.places))
    m1 = draw(sub)
    m2 = m1 | draw(sub)
    return net, frozenset(m1), frozenset(m2)


# -- firing ------------------------------------------------------------------


def test_token_net_enabled_and_fire(token_net):
    assert enabled(token_net, frozenset({"p3", "p4"}), "t2")
    assert enabled(token_net, frozenset({"p3"}), "t2")
    assert fire(token_net, frozenset({"p3", "p4"}), "t2") == {"p4", "p5"}


def test_empty_marking_enables_nothing(token_net):
    assert not any(enabled(token_net, frozenset(), t) for t in token_net.transitions)


def test_fire_requires_enabled(token_net):
    with pytest.raises(TransitionNotEnabled):
        fire(token_net, frozenset({"p4"}), "t2")


def test_self_loop_and_saturation():
    net = ElementaryNet.build([("loop", ["a"], ["a"]), ("dup", ["a"], ["a", "b"])])
    assert fire(net, frozenset({"a"}), "loop") == {"a"}
    assert fire(net, frozenset({"a", "b"}), "dup") == {"a", "b"}


def test_unknown_transition(token_net):
    with pytest.raises(NetError):
        fire(token_net, frozenset({"p3"}), "t9")


@given(net_and_markings(), st.data())
def test_fire_stays_within_places(nm, data):
    net, m, _ = nm
    live = [t for t in net.transitions if enabled(net, m, t)]
    if live:
        t = data.draw(st.sampled_from(live))
        after = fire(net, m, t)
        assert after <= set(net.places) and t.outputs <= after


# -- T_F ---------------------------------------------------------------------


def test_tf_step_examples(token_net):
    assert tf_step(token_net, frozenset()) == frozenset()
    assert "p5" in tf_step(token_net, frozenset({"p3", "p4"}))


@given(net_and_markings())
def test_tf_monotone(nm):
    net, m1, m2 = nm
    assert tf_step(net, m1) <= tf_step(net, m2)


@given(net_and_markings())
def test_tf_compact(nm):
    net, m, _ = nm
    for p in tf_step(net, m):
        witnesses = [t for t in net.transitions if t.inputs <= m and p in t.outputs]
        assert any(p in tf_step(net, t.inputs) for t in witnesses)


def test_reachable_places_flights(flights):
    assert {"london", "toronto", "new_york"} <= reachable_places(flights, {"berlin", "paris"})
    assert reachable_places(flights, {"berlin"}) == {"berlin"}
    assert reachable_places(flights, set()) == frozenset()


@given(net_and_markings())
def test_reachable_places_properties(nm):
    net, m1, m2 = nm
    r1 = reachable_places(net, m1)
    assert reachable_places(net, r1) == r1
    assert r1 <= reachable_places(net, m2)
    assert r1 == simulate_tokens([(t.inputs, t.outputs) for t in net.transitions], m1)
    assert tf_step_acc(net, r1) == r1


def test_unknown_place_in_marking(flights):
    with pytest.raises(UnknownPlace):
        reachable_places(flights, {"rome"})


# -- transformation ----------------------------------------------------------


def test_flight_transform_matches_program(flights):
    got = transform(flights, {"berlin", "paris"}, union="flight", recursive="route")
    text = render_program(got).replace("marking_berlin_paris", "m1")
    expected = parse_program(FLIGHT_PROGRAM)
    assert set(parse_program(text).facts) == set(expected.facts)
    assert set(parse_program(text).rules) == set(expected.rules)


def test_flights_transform_without_joint_marking(flights):
    got = transform(flights, {"berlin"}, union="flight", recursive="route")
    assert not any(f.predicate == "flight" for f in got.facts)
    assert len(got.facts) == 5


def test_single_place_source_gets_marking_link():
    net = ElementaryNet.build([("t", ["a"], ["b"])])
    p = transform(net, {"a"})
    assert Atom.of("r1", "marking_a", "a") in p.facts
    assert Atom.of("t", "a", "b") in p.facts
    assert reach_query(net, {"a"}) == reachable_places(net, {"a"}) == {"a", "b"}


def test_hypernode_names_and_collision():
    net = ElementaryNet.build([("t", ["b", "a"], ["c"]), ("u", ["a_b"], ["c"])])
    hs = hypernodes(net)
    (h,) = hs.values()
    assert h.members == ("a", "b") and h.name == "a_b#"
    assert marking_constant(net, frozenset({"a", "b"})) == "marking_a_b"


def test_transform_names_must_not_clash():
    net = ElementaryNet.build([("r2", ["a"], ["b"])])
    with pytest.raises(NetError):
        transform(net, {"a"})
    with pytest.raises(NetError):
        transform(net, {"a"}, union="x", recursive="x")


def test_shared_predicate_skips_bridges(flights):
    p = transform(flights, {"berlin", "paris"}, union="flight", recursive="route", shared_predicate="flight")
    assert all(len(r.body) == 2 or r.head.predicate == "route" for r in p.rules)
    assert classify_lir(p).bases == ()


def test_empty_net_transform():
    assert len(transform(ElementaryNet((), ()), set())) == 0


# -- reachability queries ----------------------------------------------------


def test_reach_query_flights(flights):
    for algorithm in ("ie", "rms"):
        got = reach_query(flights, {"berlin", "paris"}, algorithm)
        assert {"london", "toronto", "new_york"} <= got
        assert got <= {"london", "toronto", "new_york", "berlin", "paris"}
        assert reach_query(flights, {"berlin"}, algorithm) == frozenset()
        assert reach_query(flights, set(), algorithm) == frozenset()


def test_reach_on_random_pairwise_nets():
    rng = random.Random(11)
    for seed in range(200):
        n = rng.randint(2, 24)
        net = gen_net(GenSpec(n, rng.choice([0.02, 0.1, 0.3]), seed))
        for _ in range(3):
            m0 = frozenset(rng.sample(net.places, rng.randint(0, min(3, n))))
            expected = reachable_places(net, m0)
            for algorithm in ("ie", "rms"):
                assert reach_query(net, m0, algorithm) | m0 == expected
            assert cross_check(net, m0).agrees


@given(nets(max_places=10, max_transitions=14), st.data())
def test_reach_query_is_sound(net, data):
    m0 = frozenset(data.draw(st.sets(st.sampled_from(net.places))))
    simulated = reachable_places(net, m0)
    check = cross_check(net, m0)
    assert check.derived <= simulated
    assert not check.extra
    for p in check.missing:
        assert check.witnesses, p


def test_divergence_is_reported():
    net = ElementaryNet.build([("t1", ["a"], ["x"]), ("t2", ["b"], ["y"]), ("t3", ["x", "y"], ["z"])])
    check = cross_check(net, {"a", "b"})
    assert not check.agrees
    assert check.missing == {"z"} and check.witnesses == ("t3",)
    report = check.report()
    assert report.splitlines()[0] == "DIVERGENCE marking=a,b"
    assert report.splitlines()[-1] == "END DIVERGENCE"
    assert "t3" in report


# -- text format -------------------------------------------------------------


def test_net_round_trip(flights):
    assert parse_net(render_net(flights)) == flights


@given(nets())
def test_net_round_trip_random(net):
    assert parse_net(render_net(net)) == net


@pytest.mark.parametrize(
    "text",
    [
        "transition t: a -> b",
        "arc a b.",
        "transition t: -> b.",
        "transition t a -> b.",
        "place Bad.",
        "transition t: a -> b.\ntransition t: b -> a.",
        "transition a: a -> b.",
    ],
)
def test_net_syntax_errors(text):
    with pytest.raises(NetSyntaxError):
        parse_net(text)
