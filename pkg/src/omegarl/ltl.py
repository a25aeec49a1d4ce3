"""Linear temporal logic: syntax trees, a small concrete grammar, and exact
evaluation on ultimately periodic words.

An infinite word is represented as a :class:`LassoWord` ``prefix . cycle^w``
whose letters are sets of atomic-proposition names.  Temporal operators are
decided exactly by fixpoint iteration over the finitely many distinct suffix
classes of the lasso, so the evaluator serves as a ground-truth oracle for
the automata in this package.

Grammar (tightest binding first)::

    unary   !  X  F  G
    until   U            (right-associative)
    and     &            (left-associative)
    or      |            (left-associative)
    implies ->           (right-associative)

Atoms match ``[a-z][a-z0-9_]*``; ``true`` and ``false`` are constants;
parentheses group.
"""

from __future__ import annotations

from dataclasses import dataclass


class ParseError(ValueError):
    """Malformed formula text; carries the offending character position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class TrueBool(Formula):
    pass


@dataclass(frozen=True)
class FalseBool(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    operand: Formula


@dataclass(frozen=True)
class Globally(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


def atoms(phi: Formula) -> frozenset[str]:
    """Set of atomic-proposition names occurring in the formula."""
    if isinstance(phi, Atom):
        return frozenset([phi.name])
    if isinstance(phi, (Not, Next, Eventually, Globally)):
        return atoms(phi.operand)
    if isinstance(phi, (And, Or, Implies, Until)):
        return atoms(phi.left) | atoms(phi.right)
    return frozenset()


def is_propositional(phi: Formula) -> bool:
    """True when the formula contains no temporal operator."""
    if isinstance(phi, (Next, Eventually, Globally, Until)):
        return False
    if isinstance(phi, Not):
        return is_propositional(phi.operand)
    if isinstance(phi, (And, Or, Implies)):
        return is_propositional(phi.left) and is_propositional(phi.right)
    return True


@dataclass(frozen=True)
class LassoWord:
    """The infinite word ``prefix . cycle^w`` with set-valued letters."""

    prefix: tuple[frozenset[str], ...]
    cycle: tuple[frozenset[str], ...]

    def __post_init__(self):
        if len(self.cycle) < 1:
            raise ValueError("lasso cycle must be nonempty")

    @property
    def positions(self) -> int:
        """Number of distinct suffix classes."""
        return len(self.prefix) + len(self.cycle)

    def letter(self, i: int) -> frozenset[str]:
        """Letter at position ``i`` of the infinite word."""
        p = len(self.prefix)
        if i < p:
            return self.prefix[i]
        return self.cycle[(i - p) % len(self.cycle)]


def lasso(prefix, cycle) -> LassoWord:
    """Convenience constructor accepting any iterables of AP collections."""
    return LassoWord(
        tuple(frozenset(x) for x in prefix),
        tuple(frozenset(x) for x in cycle),
    )


# --- parsing -----------------------------------------------------------

_UNARY = {"!": Not, "X": Next, "F": Eventually, "G": Globally}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("->", i):
            tokens.append(("OP", "->", i))
            i += 2
        elif ch in "!&|()":
            tokens.append(("OP", ch, i))
            i += 1
        elif ch in "XUFG":
            tokens.append(("OP", ch, i))
            i += 1
        elif "a" <= ch <= "z":
            j = i + 1
            while j < n and (text[j].isdigit() or text[j] == "_" or "a" <= text[j] <= "z"):
                j += 1
            word = text[i:j]
            if word == "true":
                tokens.append(("CONST", "true", i))
            elif word == "false":
                tokens.append(("CONST", "false", i))
            else:
                tokens.append(("IDENT", word, i))
            i = j
        elif ch.isupper():
            raise ParseError(f"unknown operator {ch!r}", i)
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str, int]], length: int):
        self.tokens = tokens
        self.pos = 0
        self.length = length

    def _peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return ("EOF", "", self.length)

    def _take(self):
        tok = self._peek()
        self.pos += 1
        return tok

    def parse(self) -> Formula:
        phi = self.implies()
        kind, value, at = self._peek()
        if kind != "EOF":
            raise ParseError(f"unexpected {value!r}", at)
        return phi

    def implies(self) -> Formula:
        left = self.disjunction()
        kind, value, _ = self._peek()
        if kind == "OP" and value == "->":
            self._take()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        phi = self.conjunction()
        while True:
            kind, value, _ = self._peek()
            if kind == "OP" and value == "|":
                self._take()
                phi = Or(phi, self.conjunction())
            else:
                return phi

    def conjunction(self) -> Formula:
        phi = self.until()
        while True:
            kind, value, _ = self._peek()
            if kind == "OP" and value == "&":
                self._take()
                phi = And(phi, self.until())
            else:
                return phi

    def until(self) -> Formula:
        left = self.unary()
        kind, value, _ = self._peek()
        if kind == "OP" and value == "U":
            self._take()
            return Until(left, self.until())
        return left

    def unary(self) -> Formula:
        kind, value, at = self._peek()
        if kind == "OP" and value in _UNARY:
            self._take()
            return _UNARY[value](self.unary())
        return self.atom()

    def atom(self) -> Formula:
        kind, value, at = self._take()
        if kind == "CONST":
            return TrueBool() if value == "true" else FalseBool()
        if kind == "IDENT":
            return Atom(value)
        if kind == "OP" and value == "(":
            phi = self.implies()
            kind2, value2, at2 = self._take()
            if not (kind2 == "OP" and value2 == ")"):
                raise ParseError("expected ')'", at2)
            return phi
        if kind == "EOF":
            raise ParseError("unexpected end of input", at)
        raise ParseError(f"unexpected {value!r}", at)


def parse_ltl(text: str) -> Formula:
    """Parse formula text. Raises :class:`ParseError` with a position."""
    return _Parser(_tokenize(text), len(text)).parse()


def load_formula(path) -> Formula:
    """Read one formula from a UTF-8 file; ``#`` starts a line comment."""
    with open(path, encoding="utf-8") as fh:
        body = " ".join(line.split("#", 1)[0] for line in fh)
    return parse_ltl(body)


# --- printing ----------------------------------------------------------

_LEVEL_ATOM = 5
_LEVEL_UNARY = 4
_LEVEL_UNTIL = 3
_LEVEL_AND = 2
_LEVEL_OR = 1
_LEVEL_IMPLIES = 0


def _fmt(phi: Formula) -> tuple[str, int]:
    if isinstance(phi, TrueBool):
        return "true", _LEVEL_ATOM
    if isinstance(phi, FalseBool):
        return "false", _LEVEL_ATOM
    if isinstance(phi, Atom):
        return phi.name, _LEVEL_ATOM
    if isinstance(phi, Not):
        return "!" + _wrap(phi.operand, _LEVEL_UNARY), _LEVEL_UNARY
    if isinstance(phi, Next):
        return "X " + _wrap(phi.operand, _LEVEL_UNARY), _LEVEL_UNARY
    if isinstance(phi, Eventually):
        return "F " + _wrap(phi.operand, _LEVEL_UNARY), _LEVEL_UNARY
    if isinstance(phi, Globally):
        return "G " + _wrap(phi.operand, _LEVEL_UNARY), _LEVEL_UNARY
    if isinstance(phi, Until):
        return _wrap(phi.left, _LEVEL_UNARY) + " U " + _wrap(phi.right, _LEVEL_UNTIL), _LEVEL_UNTIL
    if isinstance(phi, And):
        return _wrap(phi.left, _LEVEL_AND) + " & " + _wrap(phi.right, _LEVEL_AND + 1), _LEVEL_AND
    if isinstance(phi, Or):
        return _wrap(phi.left, _LEVEL_OR) + " | " + _wrap(phi.right, _LEVEL_OR + 1), _LEVEL_OR
    if isinstance(phi, Implies):
        return _wrap(phi.left, _LEVEL_IMPLIES + 1) + " -> " + _wrap(phi.right, _LEVEL_IMPLIES), _LEVEL_IMPLIES
    raise TypeError(f"not a formula: {phi!r}")


def _wrap(phi: Formula, min_level: int) -> str:
    text, level = _fmt(phi)
    return f"({text})" if level < min_level else text


def format_ltl(phi: Formula) -> str:
    """Render with minimal parentheses; re-parses to an equal tree."""
    return _fmt(phi)[0]


# --- evaluation --------------------------------------------------------

def eval_lasso(phi: Formula, w: LassoWord) -> bool:
    """Exact satisfaction of ``phi`` on the infinite word ``w``.

    Every subformula is evaluated as a truth vector over the lasso's
    distinct positions.  Until/Eventually are least fixpoints and Globally
    is a greatest fixpoint of their one-step expansions, which is exact on
    the finite suffix graph.
    """
    n = w.positions
    succ = list(range(1, n)) + [len(w.prefix)]
    letters = [w.letter(i) for i in range(n)]
    memo: dict[Formula, list[bool]] = {}

    def ev(f: Formula) -> list[bool]:
        got = memo.get(f)
        if got is not None:
            return got
        if isinstance(f, TrueBool):
            vals = [True] * n
        elif isinstance(f, FalseBool):
            vals = [False] * n
        elif isinstance(f, Atom):
            vals = [f.name in letters[i] for i in range(n)]
        elif isinstance(f, Not):
            vals = [not v for v in ev(f.operand)]
        elif isinstance(f, And):
            le, ri = ev(f.left), ev(f.right)
            vals = [le[i] and ri[i] for i in range(n)]
        elif isinstance(f, Or):
            le, ri = ev(f.left), ev(f.right)
            vals = [le[i] or ri[i] for i in range(n)]
        elif isinstance(f, Implies):
            le, ri = ev(f.left), ev(f.right)
            vals = [(not le[i]) or ri[i] for i in range(n)]
        elif isinstance(f, Next):
            op = ev(f.operand)
            vals = [op[succ[i]] for i in range(n)]
        elif isinstance(f, Until):
            le, ri = ev(f.left), ev(f.right)
            vals = _lfp(lambda v, i: ri[i] or (le[i] and v[succ[i]]), n)
        elif isinstance(f, Eventually):
            op = ev(f.operand)
            vals = _lfp(lambda v, i: op[i] or v[succ[i]], n)
        elif isinstance(f, Globally):
            op = ev(f.operand)
            vals = _gfp(lambda v, i: op[i] and v[succ[i]], n)
        else:
            raise TypeError(f"not a formula: {f!r}")
        memo[f] = vals
        return vals

    return ev(phi)[0]


def _lfp(step, n: int) -> list[bool]:
    vals = [False] * n
    changed = True
    while changed:
        changed = False
        for i in range(n):
            if not vals[i] and step(vals, i):
                vals[i] = True
                changed = True
    return vals


def _gfp(step, n: int) -> list[bool]:
    vals = [True] * n
    changed = True
    while changed:
        changed = False
        for i in range(n):
            if vals[i] and not step(vals, i):
                vals[i] = False
                changed = True
    return vals
