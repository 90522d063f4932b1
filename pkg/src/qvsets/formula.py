"""First-order formulas with finite quantifier domains.

Grammar (whitespace-insensitive)::

    formula := quant | impl
    quant   := ("forall"|"exists") IDENT "in" IDENT "." formula
    impl    := or ("->" impl)?
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "~" unary | "(" formula ")" | quant | atom
    atom    := term ("="|"<="|"in") term | IDENT "(" term ("," term)* ")"
    term    := IDENT | RATIONAL            RATIONAL := INT ("/" POSINT)?

A quantifier is also accepted in unary position, where its body extends as
far right as possible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Union

from .errors import FormulaSyntaxError, UnboundVariableError, UnknownDomainError

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Rat:
    value: Fraction

    def __post_init__(self):
        # Fraction already normalises to lowest terms with positive denominator
        object.__setattr__(self, "value", Fraction(self.value))


Term = Union[Var, Const, Rat]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Leq:
    left: Term
    right: Term


@dataclass(frozen=True)
class In:
    left: Term
    right: Term


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    domain: str
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    domain: str
    body: "Formula"


Atom = Union[Eq, Leq, In, Rel]
Formula = Union[Eq, Leq, In, Rel, Not, And, Or, Implies, Forall, Exists]
ATOMS = (Eq, Leq, In, Rel)
BINARY = (And, Or, Implies)
QUANTIFIERS = (Forall, Exists)

# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<leq><=)
  | (?P<int>-?\d+)
  | (?P<sym>[=|&~(),./])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)
_KEYWORDS = {"forall", "exists", "in"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            val = m.group()
            if kind == "ident" and val in _KEYWORDS:
                kind = val
            elif kind in ("sym", "arrow", "leq"):
                kind = val
            out.append(_Tok(kind, val, pos))
        pos = m.end()
    out.append(_Tok("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, domains, constants, free):
        self.toks = _tokenize(text)
        self.i = 0
        self.domains = None if domains is None else frozenset(domains)
        self.constants = frozenset(constants)
        self.scope: list[str] = list(free)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str) -> _Tok:
        t = self.tok
        if t.kind != kind:
            want = "identifier" if kind == "ident" else repr(kind)
            got = "end of input" if t.kind == "eof" else repr(t.text)
            raise FormulaSyntaxError(f"expected {want}, found {got}", t.pos)
        self.i += 1
        return t

    def formula(self) -> Formula:
        if self.tok.kind in ("forall", "exists"):
            return self.quant()
        return self.impl()

    def quant(self) -> Formula:
        kw = self.take(self.tok.kind)
        var = self.take("ident").text
        self.take("in")
        dom = self.take("ident")
        if self.domains is not None and dom.text not in self.domains:
            raise UnknownDomainError(f"unknown domain {dom.text!r} at position {dom.pos}")
        self.take(".")
        self.scope.append(var)
        try:
            body = self.formula()
        finally:
            self.scope.pop()
        cls = Forall if kw.kind == "forall" else Exists
        return cls(var, dom.text, body)

    def impl(self) -> Formula:
        left = self.disj()
        if self.tok.kind == "->":
            self.i += 1
            return Implies(left, self.impl())
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.tok.kind == "|":
            self.i += 1
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.tok.kind == "&":
            self.i += 1
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        t = self.tok
        if t.kind == "~":
            self.i += 1
            return Not(self.unary())
        if t.kind == "(":
            self.i += 1
            f = self.formula()
            self.take(")")
            return f
        if t.kind in ("forall", "exists"):
            return self.quant()
        return self.atom()

    def atom(self) -> Formula:
        t = self.tok
        if t.kind == "ident" and self.toks[self.i + 1].kind == "(":
            self.i += 2
            args = [self.term()]
            while self.tok.kind == ",":
                self.i += 1
                args.append(self.term())
            self.take(")")
            return Rel(t.text, tuple(args))
        left = self.term()
        op = self.tok
        if op.kind not in ("=", "<=", "in"):
            raise FormulaSyntaxError(f"expected '=', '<=' or 'in', found {op.text or 'end of input'!r}", op.pos)
        self.i += 1
        right = self.term()
        return {"=": Eq, "<=": Leq, "in": In}[op.kind](left, right)

    def term(self) -> Term:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            num = int(t.text)
            if self.tok.kind == "/":
                self.i += 1
                den = self.take("int")
                if int(den.text) <= 0:
                    raise FormulaSyntaxError("denominator must be positive", den.pos)
                return Rat(Fraction(num, int(den.text)))
            return Rat(Fraction(num))
        if t.kind == "ident":
            self.i += 1
            if t.text in self.scope:
                return Var(t.text)
            if t.text in self.constants:
                return Const(t.text)
            raise UnboundVariableError(f"unbound variable {t.text!r} at position {t.pos}")
        raise FormulaSyntaxError(f"expected a term, found {t.text or 'end of input'!r}", t.pos)


def parse(text: str, domains: Iterable[str] | None = None, constants: Iterable[str] = (),
          *, free: Iterable[str] = ()) -> Formula:
    """Parse ``text`` into a formula.

    Identifiers that are neither bound by a quantifier, listed in ``free``, nor
    declared in ``constants`` raise :class:`UnboundVariableError`. When
    ``domains`` is given, quantifier domains must be among them.
    """
    p = _Parser(text, domains, constants, free)
    f = p.formula()
    if p.tok.kind != "eof":
        raise FormulaSyntaxError(f"unexpected {p.tok.text!r}", p.tok.pos)
    return f


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------


def term_text(t: Term) -> str:
    if isinstance(t, Rat):
        v = t.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return t.name


def to_text(f: Formula) -> str:
    """Render ``f`` in the parser's syntax; binary nodes are fully parenthesised."""
    if isinstance(f, Eq):
        return f"{term_text(f.left)} = {term_text(f.right)}"
    if isinstance(f, Leq):
        return f"{term_text(f.left)} <= {term_text(f.right)}"
    if isinstance(f, In):
        return f"{term_text(f.left)} in {term_text(f.right)}"
    if isinstance(f, Rel):
        return f"{f.name}({', '.join(term_text(a) for a in f.args)})"
    if isinstance(f, Not):
        return "~" + _wrapped(f.body)
    if isinstance(f, BINARY):
        op = {And: "&", Or: "|", Implies: "->"}[type(f)]
        return f"({_wrapped(f.left)} {op} {_wrapped(f.right)})"
    kw = "forall" if isinstance(f, Forall) else "exists"
    return f"{kw} {f.var} in {f.domain} . {to_text(f.body)}"


def _wrapped(f: Formula) -> str:
    s = to_text(f)
    return f"({s})" if isinstance(f, QUANTIFIERS) or isinstance(f, ATOMS) else s


# ---------------------------------------------------------------------------
# structural helpers
# ---------------------------------------------------------------------------


def _terms(f: Formula) -> Iterator[Term]:
    if isinstance(f, (Eq, Leq, In)):
        yield f.left
        yield f.right
    elif isinstance(f, Rel):
        yield from f.args


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.body)
    elif isinstance(f, BINARY):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, QUANTIFIERS):
        yield from subformulas(f.body)


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, ATOMS):
        return frozenset(t.name for t in _terms(f) if isinstance(t, Var))
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, BINARY):
        return free_vars(f.left) | free_vars(f.right)
    return free_vars(f.body) - {f.var}


def constants_of(f: Formula) -> frozenset[str]:
    return frozenset(t.name for g in subformulas(f) for t in _terms(g) if isinstance(t, Const))


def domains_of(f: Formula) -> frozenset[str]:
    return frozenset(g.domain for g in subformulas(f) if isinstance(g, QUANTIFIERS))


def godel_translate(f: Formula) -> Formula:
    """Goedel-Gentzen negative translation.

    Atoms become doubly negated, disjunction and the existential are
    rewritten through negation, and the remaining connectives commute.
    """
    if isinstance(f, ATOMS):
        return Not(Not(f))
    if isinstance(f, Not):
        return Not(godel_translate(f.body))
    if isinstance(f, And):
        return And(godel_translate(f.left), godel_translate(f.right))
    if isinstance(f, Implies):
        return Implies(godel_translate(f.left), godel_translate(f.right))
    if isinstance(f, Or):
        return Not(And(Not(godel_translate(f.left)), Not(godel_translate(f.right))))
    if isinstance(f, Forall):
        return Forall(f.var, f.domain, godel_translate(f.body))
    return Not(Forall(f.var, f.domain, Not(godel_translate(f.body))))
