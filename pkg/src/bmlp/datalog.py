"""Arity-2 datalog: parsing, rendering, LIR classification and bottom-up evaluation.

The evaluators here work on tuples of constant names and never touch bit
matrices, so they serve as an independent check on the matrix solvers.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable, Iterator

from .timing import NO_DEADLINE, Deadline

_CONST = re.compile(r"[a-z0-9][A-Za-z0-9_#]*\Z")
_VAR = re.compile(r"[A-Z_][A-Za-z0-9_]*\Z")
_PRED = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


class DatalogError(ValueError):
    pass


class DatalogSyntaxError(DatalogError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class ClassificationError(DatalogError):
    """The program is not linear and immediately recursive in the supported shape."""

    def __init__(self, message: str, clause: Clause | None = None):
        if clause is not None:
            message = f"{message}: {render_clause(clause)}"
        super().__init__(message)
        self.clause = clause


@lru_cache(maxsize=1 << 16)
def _is_var_name(name: str) -> bool:
    if _VAR.match(name):
        return True
    if _CONST.match(name):
        return False
    raise DatalogError(f"invalid term {name!r}")


@lru_cache(maxsize=1 << 12)
def _valid_predicate(name: str) -> bool:
    return bool(_PRED.match(name))


@dataclass(frozen=True, order=True)
class Term:
    name: str

    def __post_init__(self) -> None:
        _is_var_name(self.name)

    @property
    def is_var(self) -> bool:
        return _is_var_name(self.name)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, Term]

    def __post_init__(self) -> None:
        if not _valid_predicate(self.predicate):
            raise DatalogError(f"invalid predicate {self.predicate!r}")
        if len(self.args) != 2:
            raise DatalogError(f"{self.predicate} has arity {len(self.args)}, expected 2")

    @classmethod
    def of(cls, predicate: str, a: str, b: str) -> Atom:
        return cls(predicate, (Term(a), Term(b)))

    @property
    def is_ground(self) -> bool:
        return not any(t.is_var for t in self.args)

    def variables(self) -> set[str]:
        return {t.name for t in self.args if t.is_var}

    def __str__(self) -> str:
        return f"{self.predicate}({self.args[0]},{self.args[1]})"


@dataclass(frozen=True)
class Clause:
    head: Atom
    body: tuple[Atom, ...] = ()

    def __post_init__(self) -> None:
        if len(self.body) > 2:
            raise DatalogError("at most two body atoms are supported")
        if not self.body and not self.head.is_ground:
            raise DatalogError(f"fact {self.head} is not ground")
        body_vars = set().union(*(a.variables() for a in self.body)) if self.body else set()
        if not self.head.variables() <= body_vars:
            raise DatalogError(f"unsafe rule: head variables of {self.head} not bound in body")

    @property
    def is_fact(self) -> bool:
        return not self.body


@dataclass(frozen=True)
class Program:
    """Ground facts (in order of first appearance) followed by rules."""

    facts: tuple[Atom, ...] = ()
    rules: tuple[Clause, ...] = ()

    @classmethod
    def from_clauses(cls, clauses: Iterable[Clause]) -> Program:
        facts: dict[Atom, None] = {}
        rules: dict[Clause, None] = {}
        for c in clauses:
            if c.is_fact:
                facts.setdefault(c.head)
            else:
                rules.setdefault(c)
        return cls(tuple(facts), tuple(rules))

    @property
    def clauses(self) -> tuple[Clause, ...]:
        return tuple(Clause(f) for f in self.facts) + self.rules

    def constants(self) -> list[str]:
        """Constant names in order of first appearance."""
        seen: dict[str, None] = {}
        for f in self.facts:
            seen.setdefault(f.args[0].name)
            seen.setdefault(f.args[1].name)
        for c in self.rules:
            for atom in (c.head, *c.body):
                for t in atom.args:
                    if not t.is_var:
                        seen.setdefault(t.name)
        return list(seen)

    def __len__(self) -> int:
        return len(self.facts) + len(self.rules)


@dataclass(frozen=True)
class FactSet:
    predicate: str
    pairs: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class LIRProfile:
    """Shape of a linear, immediately recursive program.

    ``edges`` is the union relation with every bridged base predicate folded in,
    deduplicated and kept in program order.
    """

    recursive: str
    union: str
    bases: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    @property
    def fact_set(self) -> FactSet:
        return FactSet(self.union, frozenset(self.edges))


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>%[^\n]*)|(?P<neck>:-)"
    r"|(?P<punct>[(),.])|(?P<ident>[A-Za-z0-9_][A-Za-z0-9_#]*)"
)


def _tokenize(text: str) -> Iterator[tuple[str, str, int, int]]:
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DatalogSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            yield kind, m.group(), line, pos - line_start + 1
        pos = m.end()
    yield "eof", "", line, pos - line_start + 1


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, value: str | None = None, kind: str | None = None):
        tok = self.tokens[self.i]
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = repr(value) if value is not None else kind
            got = repr(tok[1]) if tok[0] != "eof" else "end of input"
            raise DatalogSyntaxError(f"expected {want}, got {got}", tok[2], tok[3])
        self.i += 1
        return tok

    def error(self, message: str, tok) -> DatalogSyntaxError:
        return DatalogSyntaxError(message, tok[2], tok[3])

    def program(self) -> list[Clause]:
        clauses = []
        while self.peek()[0] != "eof":
            clauses.append(self.clause())
        return clauses

    def clause(self) -> Clause:
        start = self.peek()
        head = self.atom()
        body = []
        if self.peek()[1] == ":-":
            self.take(":-")
            body.append(self.atom())
            while self.peek()[1] == ",":
                self.take(",")
                body.append(self.atom())
        self.take(".")
        try:
            return Clause(head, tuple(body))
        except DatalogError as exc:
            raise self.error(str(exc), start) from None

    def atom(self) -> Atom:
        tok = self.take(kind="ident")
        if not _PRED.match(tok[1]):
            raise self.error(f"invalid predicate name {tok[1]!r}", tok)
        if self.peek()[1] != "(":
            raise self.error(f"{tok[1]} has arity 0, expected 2", tok)
        self.take("(")
        args = [self.term()]
        while self.peek()[1] == ",":
            self.take(",")
            args.append(self.term())
        self.take(")")
        if len(args) != 2:
            raise self.error(f"{tok[1]} has arity {len(args)}, expected 2", tok)
        return Atom(tok[1], (args[0], args[1]))

    def term(self) -> Term:
        tok = self.take(kind="ident")
        if self.peek()[1] == "(":
            raise self.error(f"function symbol {tok[1]!r} not allowed in datalog", tok)
        try:
            return Term(tok[1])
        except DatalogError as exc:
            raise self.error(str(exc), tok) from None


def parse_program(text: str) -> Program:
    """Parse facts and rules such as ``route(X,Y) :- flight(X,Z), route(Z,Y).``

    Duplicate clauses are dropped; facts keep their first-appearance order.
    """
    return Program.from_clauses(_Parser(text).program())


def render_clause(c: Clause) -> str:
    if c.is_fact:
        return f"{c.head}."
    return f"{c.head} :- {', '.join(str(a) for a in c.body)}."


def render_program(p: Program) -> str:
    return "".join(render_clause(c) + "\n" for c in p.clauses)


# -- classification ----------------------------------------------------------


def _distinct_vars(*terms: Term) -> bool:
    return all(t.is_var for t in terms) and len({t.name for t in terms}) == len(terms)


def classify_lir(p: Program) -> LIRProfile:
    """Identify the recursive predicate, the union (edge) predicate and its bridged bases.

    Accepted shape::

        r2(X,Y) :- r1(X,Z), r2(Z,Y).   % exactly one
        r2(X,Y) :- r1(X,Y).            % exactly one
        r1(X,Y) :- t(X,Y).             % any number of bridges
        r1(a,b).  t(c,d).              % ground facts of r1 or a bridged t
    """
    recursive_rules = [c for c in p.rules if len(c.body) == 2]
    if not recursive_rules:
        raise ClassificationError("no recursive clause of the form r2(X,Y) :- r1(X,Z), r2(Z,Y)")
    rec = recursive_rules[0]
    if len(recursive_rules) > 1:
        raise ClassificationError("more than one two-literal clause", recursive_rules[1])
    (hx, hy), (b1, b2) = rec.head.args, rec.body
    r2, r1 = rec.head.predicate, b1.predicate
    if r1 == r2 or b2.predicate != r2:
        raise ClassificationError("recursive clause is not linear with a single base literal", rec)
    if not (
        _distinct_vars(hx, hy, b1.args[1])
        and b1.args[0] == hx
        and b2.args == (b1.args[1], hy)
    ):
        raise ClassificationError("recursive clause must have the form r2(X,Y) :- r1(X,Z), r2(Z,Y)", rec)

    exits = 0
    bases: list[str] = []
    for c in p.rules:
        if c is rec:
            continue
        (body,) = c.body
        chain = _distinct_vars(*c.head.args) and body.args == c.head.args
        if c.head.predicate == r2 and body.predicate == r1 and chain:
            exits += 1
        elif c.head.predicate == r1 and body.predicate not in (r1, r2) and chain:
            if body.predicate not in bases:
                bases.append(body.predicate)
        else:
            raise ClassificationError("clause outside the linear recursive shape", c)
    if exits != 1:
        raise ClassificationError(f"expected exactly one clause {r2}(X,Y) :- {r1}(X,Y), found {exits}")

    allowed = {r1, *bases}
    edges: dict[tuple[str, str], None] = {}
    for f in p.facts:
        if f.predicate not in allowed:
            raise ClassificationError(f"fact does not feed {r1}", Clause(f))
        edges.setdefault((f.args[0].name, f.args[1].name))
    return LIRProfile(recursive=r2, union=r1, bases=tuple(bases), edges=tuple(edges))


# -- evaluation --------------------------------------------------------------


class _Relation:
    __slots__ = ("pairs", "fwd", "bwd")

    def __init__(self, pairs: Iterable[tuple[str, str]] = ()):
        self.pairs: set[tuple[str, str]] = set()
        self.fwd: dict[str, set[str]] = defaultdict(set)
        self.bwd: dict[str, set[str]] = defaultdict(set)
        self.update(pairs)

    def update(self, pairs: Iterable[tuple[str, str]]) -> None:
        for x, y in pairs:
            if (x, y) not in self.pairs:
                self.pairs.add((x, y))
                self.fwd[x].add(y)
                self.bwd[y].add(x)


_EMPTY = _Relation()


def _match(atom: Atom, binding: dict[str, str], rel: _Relation, deadline: Deadline) -> Iterator[dict[str, str]]:
    a, b = atom.args
    va = binding.get(a.name) if a.is_var else a.name
    vb = binding.get(b.name) if b.is_var else b.name
    if va is not None and vb is not None:
        if (va, vb) in rel.pairs:
            yield binding
    elif va is not None:
        for y in rel.fwd.get(va, ()):
            deadline.check()
            yield {**binding, b.name: y}
    elif vb is not None:
        for x in rel.bwd.get(vb, ()):
            deadline.check()
            yield {**binding, a.name: x}
    else:
        same = a.name == b.name
        for x, y in rel.pairs:
            deadline.check()
            if not same:
                yield {**binding, a.name: x, b.name: y}
            elif x == y:
                yield {**binding, a.name: x}


def _solve_body(body, rels, binding, deadline) -> Iterator[dict[str, str]]:
    if not body:
        yield binding
        return
    for b in _match(body[0], binding, rels[0], deadline):
        yield from _solve_body(body[1:], rels[1:], b, deadline)


def _chain_plan(rule: Clause):
    """For ``h(U,W) :- a(.., S ..), b(.. S ..)`` with one shared variable, the
    positions needed to join by set products; ``None`` for any other shape."""
    if len(rule.body) != 2 or not all(t.is_var for at in (rule.head, *rule.body) for t in at.args):
        return None
    (a0, a1), (b0, b1) = ([t.name for t in at.args] for at in rule.body)
    shared = {a0, a1} & {b0, b1}
    if len(shared) != 1 or a0 == a1 or b0 == b1:
        return None
    (s,) = shared
    u = a1 if a0 == s else a0
    w = b1 if b0 == s else b0
    h = [t.name for t in rule.head.args]
    if u == w or sorted(h) != sorted([u, w]):
        return None
    return a0 == s, b0 == s, h[0] == u


def _chain_join(plan, ra: _Relation, rb: _Relation, out: set, deadline: Deadline) -> None:
    a_first, b_first, u_first = plan
    ga = ra.fwd if a_first else ra.bwd
    gb = rb.fwd if b_first else rb.bwd
    small, large = (ga, gb) if len(ga) <= len(gb) else (gb, ga)
    for s, vals in small.items():
        other = large.get(s)
        if not other:
            continue
        deadline.enforce()
        us, ws = (vals, other) if small is ga else (other, vals)
        out.update(product(us, ws) if u_first else product(ws, us))


def _instantiate(head: Atom, binding: dict[str, str]) -> tuple[str, str]:
    a, b = head.args
    return (binding[a.name] if a.is_var else a.name, binding[b.name] if b.is_var else b.name)


def _base_model(p: Program) -> dict[str, set[tuple[str, str]]]:
    model: dict[str, set[tuple[str, str]]] = defaultdict(set)
    for f in p.facts:
        model[f.predicate].add((f.args[0].name, f.args[1].name))
    return model


def seminaive_model(p: Program, deadline: Deadline = NO_DEADLINE) -> tuple[dict[str, set[tuple[str, str]]], int]:
    """Least Herbrand model by delta iteration; returns (model, rounds)."""
    full: dict[str, _Relation] = defaultdict(_Relation)
    delta: dict[str, _Relation] = {}
    for pred, pairs in _base_model(p).items():
        full[pred].update(pairs)
        delta[pred] = _Relation(pairs)
    plans = {id(rule): _chain_plan(rule) for rule in p.rules}
    rounds = 0
    while delta:
        rounds += 1
        deadline.enforce()
        derived: dict[str, set[tuple[str, str]]] = defaultdict(set)
        for rule in p.rules:
            head = rule.head
            for i, atom in enumerate(rule.body):
                if atom.predicate not in delta:
                    continue
                rels = [delta[atom.predicate] if j == i else full.get(a.predicate, _EMPTY) for j, a in enumerate(rule.body)]
                out = derived[head.predicate]
                plan = plans[id(rule)]
                if plan is not None:
                    _chain_join(plan, rels[0], rels[1], out, deadline)
                    continue
                for binding in _solve_body(rule.body, rels, {}, deadline):
                    out.add(_instantiate(head, binding))
        delta = {}
        for pred, pairs in derived.items():
            new = pairs - full[pred].pairs if pred in full else pairs
            if new:
                delta[pred] = _Relation(new)
        for pred, rel in delta.items():
            full[pred].update(rel.pairs)
    return {pred: set(rel.pairs) for pred, rel in full.items() if rel.pairs}, rounds


def seminaive_fixpoint(p: Program, predicate: str | None = None, deadline: Deadline = NO_DEADLINE) -> FactSet:
    """Ground facts of ``predicate`` (default: the recursive predicate) in the least model."""
    if predicate is None:
        predicate = classify_lir(p).recursive
    model, _ = seminaive_model(p, deadline)
    return FactSet(predicate, frozenset(model.get(predicate, ())))


def immediate_consequence(p: Program, interp: dict[str, set[tuple[str, str]]]) -> dict[str, set[tuple[str, str]]]:
    """One application of the immediate consequence operator: facts plus one round of every rule."""
    out = _base_model(p)
    rels = {pred: _Relation(pairs) for pred, pairs in interp.items()}
    for rule in p.rules:
        body_rels = [rels.get(a.predicate, _EMPTY) for a in rule.body]
        for binding in _solve_body(rule.body, body_rels, {}, NO_DEADLINE):
            out[rule.head.predicate].add(_instantiate(rule.head, binding))
    return {k: v for k, v in out.items() if v}


def naive_model(p: Program) -> dict[str, set[tuple[str, str]]]:
    """Iterate the immediate consequence operator from the empty interpretation."""
    interp: dict[str, set[tuple[str, str]]] = {}
    while True:
        nxt = immediate_consequence(p, interp)
        if nxt == interp:
            return interp
        interp = nxt
