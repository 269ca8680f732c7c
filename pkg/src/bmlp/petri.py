"""One-bounded elementary nets: firing, the step-consequence fixpoint, and translation to datalog."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Literal

from .bitmat import BitVector
from .compiler import build_table, compile_ie, compile_rms
from .datalog import Atom, Clause, Program, Term, classify_lir
from .solve import bmlp_ie, bmlp_rms, strip_reflexive

Marking = frozenset  # of place names

_PLACE = re.compile(r"[a-z0-9][A-Za-z0-9_]*\Z")
_TRANSITION = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


class NetError(ValueError):
    pass


class NetSyntaxError(NetError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TransitionNotEnabled(NetError):
    pass


class UnknownPlace(NetError, KeyError):
    def __str__(self) -> str:
        return ValueError.__str__(self)


@dataclass(frozen=True)
class Transition:
    name: str
    inputs: frozenset[str]
    outputs: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", frozenset(self.inputs))
        object.__setattr__(self, "outputs", frozenset(self.outputs))
        if not self.inputs or not self.outputs:
            raise NetError(f"transition {self.name} needs at least one input and one output")


@dataclass(frozen=True)
class ElementaryNet:
    """Places in a fixed order and unit-weight transitions between them."""

    places: tuple[str, ...]
    transitions: tuple[Transition, ...]
    _by_name: dict[str, Transition] = field(init=False, repr=False, compare=False)
    _order: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "places", tuple(self.places))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        order = {p: i for i, p in enumerate(self.places)}
        if len(order) != len(self.places):
            raise NetError("duplicate place")
        for p in self.places:
            if not _PLACE.match(p):
                raise NetError(f"invalid place name {p!r}")
        by_name: dict[str, Transition] = {}
        for t in self.transitions:
            if not _TRANSITION.match(t.name):
                raise NetError(f"invalid transition name {t.name!r}")
            if t.name in by_name:
                raise NetError(f"duplicate transition {t.name}")
            if t.name in order:
                raise NetError(f"{t.name} is both a place and a transition")
            if not (t.inputs <= order.keys() and t.outputs <= order.keys()):
                missing = (t.inputs | t.outputs) - set(order)
                raise NetError(f"transition {t.name} refers to unknown places {sorted(missing)}")
            by_name[t.name] = t
        object.__setattr__(self, "_by_name", by_name)
        object.__setattr__(self, "_order", order)

    @classmethod
    def build(cls, transitions: Iterable[tuple[str, Iterable[str], Iterable[str]]], places: Iterable[str] = ()) -> ElementaryNet:
        """Create a net, inferring places from arcs in order of first use."""
        specs = [(name, list(i), list(o)) for name, i, o in transitions]
        seen = dict.fromkeys(places)
        for _, i, o in specs:
            for p in (*i, *o):
                seen.setdefault(p)
        ts = [Transition(name, frozenset(i), frozenset(o)) for name, i, o in specs]
        return cls(tuple(seen), tuple(ts))

    def transition(self, t: Transition | str) -> Transition:
        name = t if isinstance(t, str) else t.name
        try:
            found = self._by_name[name]
        except KeyError:
            raise NetError(f"unknown transition {name!r}") from None
        if not isinstance(t, str) and t != found:
            raise NetError(f"transition {name!r} does not belong to this net")
        return found

    def ordered(self, places: Iterable[str]) -> list[str]:
        return sorted(places, key=self._order.__getitem__)

    def check_marking(self, m: Iterable[str]) -> Marking:
        m = frozenset(m)
        unknown = m - self._order.keys()
        if unknown:
            raise UnknownPlace(f"unknown places {sorted(unknown)}")
        return m

    def marking_vector(self, m: Iterable[str]) -> BitVector:
        return BitVector.from_indices(len(self.places), [self._order[p] for p in self.check_marking(m)])


# -- firing semantics --------------------------------------------------------


def enabled(net: ElementaryNet, m: Marking, t: Transition | str) -> bool:
    return net.transition(t).inputs <= m


def fire(net: ElementaryNet, m: Marking, t: Transition | str) -> Marking:
    """Consume the input tokens and mark the outputs; a place holds at most one token."""
    t = net.transition(t)
    if not t.inputs <= m:
        raise TransitionNotEnabled(f"{t.name} is not enabled by {sorted(m)}")
    return (frozenset(m) - t.inputs) | t.outputs


def tf_step(net: ElementaryNet, m: Marking) -> Marking:
    """Places produced by one round of every transition enabled under ``m``."""
    out: set[str] = set()
    for t in net.transitions:
        if t.inputs <= m:
            out |= t.outputs
    return frozenset(out)


def tf_step_acc(net: ElementaryNet, m: Marking) -> Marking:
    return frozenset(m) | tf_step(net, m)


def reachable_places(net: ElementaryNet, m0: Marking) -> Marking:
    """Least fixpoint of ``m -> m | tf_step(m)`` from ``m0``; tokens are never consumed."""
    m = net.check_marking(m0)
    while True:
        nxt = tf_step_acc(net, m)
        if nxt == m:
            return m
        m = nxt


# -- translation to datalog --------------------------------------------------


@dataclass(frozen=True)
class Hypernode:
    members: tuple[str, ...]
    name: str


def _fresh(name: str, taken: set[str]) -> str:
    while name in taken:
        name += "#"
    taken.add(name)
    return name


def hypernodes(net: ElementaryNet) -> dict[frozenset[str], Hypernode]:
    """One hypernode per distinct multi-place input set, in transition order."""
    taken = set(net.places)
    out: dict[frozenset[str], Hypernode] = {}
    for t in net.transitions:
        if len(t.inputs) >= 2 and t.inputs not in out:
            members = tuple(sorted(t.inputs))
            out[t.inputs] = Hypernode(members, _fresh("_".join(members), taken))
    return out


def marking_constant(net: ElementaryNet, m0: Marking, hyper: dict | None = None) -> str:
    hyper = hypernodes(net) if hyper is None else hyper
    taken = set(net.places) | {h.name for h in hyper.values()}
    return _fresh("_".join(["marking", *sorted(m0)]), taken)


def _source(t: Transition, hyper: dict[frozenset[str], Hypernode]) -> str:
    if len(t.inputs) >= 2:
        return hyper[t.inputs].name
    (p,) = t.inputs
    return p


def transform(
    net: ElementaryNet,
    m0: Marking,
    union: str = "r1",
    recursive: str = "r2",
    shared_predicate: str | None = None,
) -> Program:
    """Translate a net and initial marking into a linear recursive program.

    Each transition contributes facts from its input constant (a hypernode for
    two or more inputs) to every output place and to every hypernode whose
    members it produces. The marking constant is linked to each hypernode and
    single-place transition source fully contained in ``m0``.

    Transition names are used as predicates unless ``shared_predicate`` is
    given; when that equals ``union`` the facts are written directly as union
    facts and no bridging rules are emitted.
    """
    m0 = net.check_marking(m0)
    if not net.places:
        return Program()
    if union == recursive:
        raise NetError("union and recursive predicates must differ")
    if shared_predicate is None:
        clash = [t.name for t in net.transitions if t.name in (union, recursive)]
        if clash:
            raise NetError(f"transition name {clash[0]!r} collides with a closure predicate")
    elif shared_predicate == recursive:
        raise NetError("shared predicate cannot be the recursive predicate")
    hyper = hypernodes(net)
    by_first: dict[str, list[Hypernode]] = {}
    for h in hyper.values():
        by_first.setdefault(h.members[0], []).append(h)

    facts: list[Atom] = []
    if m0:
        mc = marking_constant(net, m0, hyper)
        linked: set[str] = set()
        for t in net.transitions:
            src = _source(t, hyper)
            if src not in linked and t.inputs <= m0:
                linked.add(src)
                facts.append(Atom.of(union, mc, src))

    preds: dict[str, None] = {}
    for t in net.transitions:
        pred = shared_predicate or t.name
        preds.setdefault(pred)
        src = _source(t, hyper)
        for q in net.ordered(t.outputs):
            facts.append(Atom.of(pred, src, q))
        for q in net.ordered(t.outputs):
            for h in by_first.get(q, ()):
                if t.outputs.issuperset(h.members):
                    facts.append(Atom.of(pred, src, h.name))

    x, y, z = Term("X"), Term("Y"), Term("Z")
    rules = [Clause(Atom(union, (x, y)), (Atom(p, (x, y)),)) for p in preds if p != union]
    rules.append(Clause(Atom(recursive, (x, y)), (Atom(union, (x, y)),)))
    rules.append(Clause(Atom(recursive, (x, y)), (Atom(union, (x, z)), Atom(recursive, (z, y)))))
    return Program.from_clauses([*(Clause(f) for f in facts), *rules])


def _expand(names: Iterable[str], hyper: dict[frozenset[str], Hypernode], drop: str) -> Marking:
    members = {h.name: h.members for h in hyper.values()}
    out: set[str] = set()
    for c in names:
        if c != drop:
            out.update(members.get(c, (c,)))
    return frozenset(out)


def reach_constants(net: ElementaryNet, m0: Marking, algorithm: Literal["ie", "rms"] = "ie") -> tuple[list[str], str]:
    """Constants of the translated program reachable from the marking constant."""
    m0 = net.check_marking(m0)
    prog = transform(net, m0)
    mc = marking_constant(net, m0)
    table = build_table(prog)
    if mc not in table:
        return [], mc
    prof = classify_lir(prog)
    if algorithm == "ie":
        v = bmlp_ie(compile_ie(prof, table, mc)).vector
    elif algorithm == "rms":
        inp = compile_rms(prof, table)
        v = strip_reflexive(bmlp_rms(inp), inp).row(table.index(mc))
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return [table.names[i] for i in v.indices()], mc


def reach_query(net: ElementaryNet, m0: Marking, algorithm: Literal["ie", "rms"] = "ie") -> Marking:
    """Places reached from ``m0`` through the translated program.

    Hypernodes expand to their members and the marking constant is dropped, so
    places of ``m0`` appear only when some edge leads to them.
    """
    names, mc = reach_constants(net, m0, algorithm)
    return _expand(names, hypernodes(net), mc)


@dataclass(frozen=True)
class CrossCheck:
    """Comparison of the translated program against the token-accumulating simulation.

    ``missing`` places are simulated but not derived. ``witnesses`` are
    multi-input transitions whose inputs were each derived but never jointly
    produced by one transition or the marking, so their hypernode stays unreached.
    """

    marking: Marking
    derived: Marking
    simulated: Marking
    missing: Marking
    extra: Marking
    witnesses: tuple[str, ...]

    @property
    def agrees(self) -> bool:
        return not self.missing and not self.extra

    def report(self) -> str:
        if self.agrees:
            return ""
        lines = [f"DIVERGENCE marking={','.join(sorted(self.marking))}"]
        if self.missing:
            lines.append(f"  simulated-only: {' '.join(sorted(self.missing))}")
        if self.extra:
            lines.append(f"  derived-only: {' '.join(sorted(self.extra))}")
        if self.witnesses:
            lines.append(f"  unjoined hypernode inputs: {' '.join(self.witnesses)}")
        lines.append("END DIVERGENCE")
        return "\n".join(lines)


def cross_check(net: ElementaryNet, m0: Marking, algorithm: Literal["ie", "rms"] = "ie") -> CrossCheck:
    m0 = net.check_marking(m0)
    derived = reach_query(net, m0, algorithm) | m0
    simulated = reachable_places(net, m0)
    witnesses = tuple(
        t.name
        for t in net.transitions
        if len(t.inputs) >= 2 and t.inputs <= derived and not t.outputs <= derived
    )
    return CrossCheck(m0, derived, simulated, simulated - derived, derived - simulated, witnesses)


# -- text format -------------------------------------------------------------

_DECL = re.compile(r"(place|transition)\s+(.*)\Z", re.S)
_TRANS = re.compile(r"([^\s:]+)\s*:(.*?)->(.*)\Z", re.S)


def parse_net(text: str) -> ElementaryNet:
    """Parse ``place <name>.`` and ``transition <name>: <in>... -> <out>....`` lines."""
    places: dict[str, None] = {}
    transitions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        if not line.endswith("."):
            raise NetSyntaxError("declaration must end with '.'", lineno)
        m = _DECL.match(line[:-1].strip())
        if m is None:
            raise NetSyntaxError("expected 'place' or 'transition'", lineno)
        kind, rest = m.groups()
        if kind == "place":
            name = rest.strip()
            if not _PLACE.match(name):
                raise NetSyntaxError(f"invalid place name {name!r}", lineno)
            places.setdefault(name)
            continue
        tm = _TRANS.match(rest.strip())
        if tm is None:
            raise NetSyntaxError("expected 'transition <name>: <inputs> -> <outputs>.'", lineno)
        name, ins, outs = tm.group(1), tm.group(2).split(), tm.group(3).split()
        for p in (*ins, *outs):
            if not _PLACE.match(p):
                raise NetSyntaxError(f"invalid place name {p!r}", lineno)
        if not _TRANSITION.match(name):
            raise NetSyntaxError(f"invalid transition name {name!r}", lineno)
        if not ins or not outs:
            raise NetSyntaxError(f"transition {name} needs inputs and outputs", lineno)
        transitions.append((name, ins, outs))
        for p in (*ins, *outs):
            places.setdefault(p)
    try:
        return ElementaryNet.build(transitions, places)
    except NetError as exc:
        raise NetSyntaxError(str(exc), 0) from None


def render_net(net: ElementaryNet) -> str:
    lines = [f"place {p}." for p in net.places]
    for t in net.transitions:
        lines.append(f"transition {t.name}: {' '.join(net.ordered(t.inputs))} -> {' '.join(net.ordered(t.outputs))}.")
    return "".join(line + "\n" for line in lines)
