"""Transition-based generalized Buchi automata with epsilon moves.

Provides the data model, a line-oriented text format, limit-determinism
checking, degeneralization to a single accepting set, and an exact
acceptance test for ultimately periodic words.  Transitions carry explicit
letters (subsets of the AP universe); the file format accepts Boolean guard
shorthands that are expanded at parse time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from . import ltl
from .graphs import strongly_connected_components
from .ltl import LassoWord


class _Epsilon:
    """Distinguished non-letter symbol for guess transitions."""

    __slots__ = ()

    def __repr__(self):
        return "eps"


EPSILON = _Epsilon()


class AutomatonError(ValueError):
    pass


class NotLimitDeterministic(AutomatonError):
    """Raised with the first violated limit-determinism condition."""


@dataclass(frozen=True)
class Transition:
    src: int
    letter: object  # frozenset of AP names, or EPSILON
    dst: int

    def is_epsilon(self) -> bool:
        return self.letter is EPSILON


@dataclass(frozen=True)
class TGba:
    """Generalized Buchi automaton with transition-based acceptance.

    States are the integers ``0..num_states-1``.  ``acceptance`` is the
    ordered list of accepting transition sets; a run is accepting when it
    takes transitions from every set infinitely often.
    """

    num_states: int
    initial: int
    ap: frozenset[str]
    transitions: frozenset[Transition]
    acceptance: tuple[frozenset[Transition], ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.num_states < 1:
            raise AutomatonError("automaton needs at least one state")
        if not 0 <= self.initial < self.num_states:
            raise AutomatonError(f"initial state {self.initial} out of range")
        if len(self.acceptance) < 1:
            raise AutomatonError("automaton needs at least one accepting set")
        for t in self.transitions:
            if not (0 <= t.src < self.num_states and 0 <= t.dst < self.num_states):
                raise AutomatonError(f"transition {t} references an undeclared state")
            if t.letter is not EPSILON and not frozenset(t.letter) <= self.ap:
                raise AutomatonError(f"transition {t} uses undeclared propositions")
        for j, acc in enumerate(self.acceptance):
            if not acc <= self.transitions:
                raise AutomatonError(f"accepting set {j + 1} contains unknown transitions")
        if self.names is not None and len(self.names) != self.num_states:
            raise AutomatonError("state name list does not match state count")

    def name_of(self, state: int) -> str:
        return self.names[state] if self.names else f"x{state}"

    def states(self) -> range:
        return range(self.num_states)


@dataclass(frozen=True)
class LimitDetPartition:
    x_initial: frozenset[int]
    x_final: frozenset[int]


def letter_key(letter, ap_sorted: tuple[str, ...]) -> tuple:
    """Total order on letters: epsilon first, then bitstring over sorted AP."""
    if letter is EPSILON:
        return (0, "")
    return (1, "".join("1" if x in letter else "0" for x in ap_sorted))


def _sorted_transitions(b: TGba) -> list[Transition]:
    ap_sorted = tuple(sorted(b.ap))
    return sorted(b.transitions, key=lambda t: (t.src, letter_key(t.letter, ap_sorted), t.dst))


def _by_src(b: TGba) -> list[list[Transition]]:
    out: list[list[Transition]] = [[] for _ in range(b.num_states)]
    for t in _sorted_transitions(b):
        out[t.src].append(t)
    return out


# --- limit determinism --------------------------------------------------

def check_limit_deterministic(b: TGba) -> LimitDetPartition:
    """Find the state partition required of a limit-deterministic automaton.

    The final part is the forward closure of all accepting-transition
    endpoints and all epsilon targets; it is the unique minimal candidate,
    so if it violates any condition no valid partition exists.  Determinism
    inside the final part is checked per letter (at most one successor for
    each state/letter pair), the reading under which standard constructions
    satisfy the transition-count condition.
    """
    succ: list[set[int]] = [set() for _ in range(b.num_states)]
    for t in b.transitions:
        succ[t.src].add(t.dst)

    seeds: set[int] = set()
    for acc in b.acceptance:
        for t in acc:
            seeds.add(t.src)
            seeds.add(t.dst)
    for t in b.transitions:
        if t.is_epsilon():
            seeds.add(t.dst)

    x_final = set(seeds)
    queue = list(seeds)
    while queue:
        v = queue.pop()
        for w in succ[v]:
            if w not in x_final:
                x_final.add(w)
                queue.append(w)

    for j, acc in enumerate(b.acceptance):
        for t in acc:
            if t.src not in x_final or t.dst not in x_final:
                raise NotLimitDeterministic(
                    f"accepting set {j + 1} transition {_render(b, t)} leaves the final part"
                )
            if t.is_epsilon():
                raise NotLimitDeterministic(
                    f"accepting set {j + 1} contains the epsilon transition {_render(b, t)}"
                )

    per_letter: dict[tuple[int, object], int] = {}
    for t in b.transitions:
        if t.src not in x_final:
            continue
        if t.is_epsilon():
            raise NotLimitDeterministic(
                f"epsilon transition {_render(b, t)} starts inside the final part"
            )
        if t.dst not in x_final:
            raise NotLimitDeterministic(
                f"transition {_render(b, t)} escapes the final part"
            )
        key = (t.src, t.letter)
        per_letter[key] = per_letter.get(key, 0) + 1
        if per_letter[key] > 1:
            raise NotLimitDeterministic(
                f"state {b.name_of(t.src)} has {per_letter[key]} successors on letter "
                f"{sorted(t.letter)} inside the final part "
                "(per-letter reading of the determinism condition failed)"
            )

    x_initial = frozenset(b.states()) - x_final
    return LimitDetPartition(frozenset(x_initial), frozenset(x_final))


# --- text format ---------------------------------------------------------

def _guard_text(letter, ap_sorted) -> str:
    if letter is EPSILON:
        return "eps"
    if not ap_sorted:
        return "true"
    return " & ".join(a if a in letter else f"!{a}" for a in ap_sorted)


def serialize_automaton(b: TGba) -> str:
    """Canonical text form: sorted states, sorted letters, full-conjunction guards."""
    ap_sorted = tuple(sorted(b.ap))
    lines = [
        f"ap: {' '.join(ap_sorted)}".rstrip(),
        f"states: {b.num_states}",
        f"initial: {b.initial}",
        f"acceptance-sets: {len(b.acceptance)}",
    ]
    for t in _sorted_transitions(b):
        accs = [str(j + 1) for j, acc in enumerate(b.acceptance) if t in acc]
        line = f"{t.src} {_guard_text(t.letter, ap_sorted)} {t.dst}"
        if accs:
            line += f" acc: {','.join(accs)}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_automaton(text: str) -> TGba:
    """Parse the line-oriented automaton format (see package docs).

    Guards are Boolean expressions over the declared AP universe (or
    ``eps``) and expand to one transition per satisfying letter.  Repeated
    (src, letter, dst) triples merge, with accepting-set memberships
    unioned.
    """
    headers: dict[str, str] = {}
    body: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key = line.split(":", 1)[0].strip()
        if key in ("ap", "states", "initial", "acceptance-sets") and ":" in line:
            if key in headers:
                raise AutomatonError(f"line {lineno}: duplicate header {key!r}")
            headers[key] = line.split(":", 1)[1].strip()
        else:
            body.append((lineno, line))

    for key in ("states", "initial", "acceptance-sets"):
        if key not in headers:
            raise AutomatonError(f"missing header {key!r}")
    ap_list = headers.get("ap", "").split()
    if len(set(ap_list)) != len(ap_list):
        raise AutomatonError("duplicate atomic proposition in 'ap' header")
    ap = frozenset(ap_list)
    num_states = int(headers["states"])
    initial = int(headers["initial"])
    n_sets = int(headers["acceptance-sets"])
    if n_sets < 1:
        raise AutomatonError("acceptance-sets must be at least 1")

    ap_sorted = tuple(sorted(ap))
    letters = [
        frozenset(a for a, bit in zip(ap_sorted, bits) if bit)
        for bits in itertools.product((False, True), repeat=len(ap_sorted))
    ]

    membership: dict[Transition, set[int]] = {}
    for lineno, line in body:
        tokens = line.split()
        if len(tokens) < 3:
            raise AutomatonError(f"line {lineno}: expected 'src <guard> dst [acc: ...]'")
        acc_indices: list[int] = []
        if "acc:" in tokens:
            k = tokens.index("acc:")
            acc_text = "".join(tokens[k + 1 :])
            tokens = tokens[:k]
            for part in acc_text.split(","):
                if not part:
                    continue
                j = int(part)
                if not 1 <= j <= n_sets:
                    raise AutomatonError(
                        f"line {lineno}: acceptance index {j} out of range 1..{n_sets}"
                    )
                acc_indices.append(j - 1)
        if len(tokens) < 3:
            raise AutomatonError(f"line {lineno}: expected 'src <guard> dst'")
        try:
            src = int(tokens[0])
            dst = int(tokens[-1])
        except ValueError as exc:
            raise AutomatonError(f"line {lineno}: bad state id ({exc})") from None
        if not (0 <= src < num_states and 0 <= dst < num_states):
            raise AutomatonError(f"line {lineno}: state id out of range")
        guard = " ".join(tokens[1:-1])
        if guard == "eps":
            expanded = [Transition(src, EPSILON, dst)]
        else:
            try:
                phi = ltl.parse_ltl(guard)
            except ltl.ParseError as exc:
                raise AutomatonError(f"line {lineno}: bad guard: {exc}") from None
            if not ltl.is_propositional(phi):
                raise AutomatonError(f"line {lineno}: temporal operator in guard")
            undeclared = ltl.atoms(phi) - ap
            if undeclared:
                raise AutomatonError(
                    f"line {lineno}: undeclared proposition(s) {sorted(undeclared)}"
                )
            expanded = [
                Transition(src, letter, dst)
                for letter in letters
                if ltl.eval_lasso(phi, LassoWord((), (letter,)))
            ]
        for t in expanded:
            membership.setdefault(t, set()).update(acc_indices)

    transitions = frozenset(membership)
    acceptance = tuple(
        frozenset(t for t, js in membership.items() if j in js) for j in range(n_sets)
    )
    return TGba(
        num_states=num_states,
        initial=initial,
        ap=ap,
        transitions=transitions,
        acceptance=acceptance,
        names=tuple(f"x{i}" for i in range(num_states)),
    )


def load_automaton(path) -> TGba:
    with open(path, encoding="utf-8") as fh:
        return parse_automaton(fh.read())


def save_automaton(b: TGba, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_automaton(b))


# --- degeneralization ----------------------------------------------------

def degeneralize(b: TGba) -> TGba:
    """Counter product collapsing the acceptance condition to a single set.

    State (x, j) tracks that sets 1..j-1 have been seen this round; taking a
    transition of set j while the counter is j advances it (wrapping from n
    back to 1).  The single accepting set holds the wrap transitions, so the
    language is preserved while the order of visits becomes fixed.
    """
    n = len(b.acceptance)
    out = _by_src(b)
    start = (b.initial, 1)
    index: dict[tuple[int, int], int] = {start: 0}
    order = [start]
    new_transitions: list[Transition] = []
    accepting: list[Transition] = []
    queue = [start]
    while queue:
        x, j = queue.pop(0)
        i_src = index[(x, j)]
        for t in out[x]:
            j2 = j + 1 if t in b.acceptance[j - 1] else j
            if j2 > n:
                j2 = 1
            key = (t.dst, j2)
            if key not in index:
                index[key] = len(order)
                order.append(key)
                queue.append(key)
            nt = Transition(i_src, t.letter, index[key])
            new_transitions.append(nt)
            if j == n and t in b.acceptance[n - 1]:
                accepting.append(nt)
    names = tuple(f"{b.name_of(x)}.{j}" for (x, j) in order)
    return TGba(
        num_states=len(order),
        initial=0,
        ap=b.ap,
        transitions=frozenset(new_transitions),
        acceptance=(frozenset(accepting),),
        names=names,
    )


# --- acceptance of lasso words -------------------------------------------

@lru_cache(maxsize=64)
def _run_index(b: TGba):
    """Per-state letter lookup plus accepting-set bitmasks, cached per automaton."""
    n_sets = len(b.acceptance)
    mask_of: dict[Transition, int] = {}
    for t in b.transitions:
        m = 0
        for j, acc in enumerate(b.acceptance):
            if t in acc:
                m |= 1 << j
        mask_of[t] = m
    by_letter: list[dict[frozenset, list[tuple[int, int]]]] = [
        {} for _ in range(b.num_states)
    ]
    eps_out: list[list[tuple[int, int]]] = [[] for _ in range(b.num_states)]
    deterministic = True
    for t in _sorted_transitions(b):
        if t.is_epsilon():
            eps_out[t.src].append((t.dst, mask_of[t]))
            deterministic = False
        else:
            lst = by_letter[t.src].setdefault(t.letter, [])
            lst.append((t.dst, mask_of[t]))
            if len(lst) > 1:
                deterministic = False
    full_mask = (1 << n_sets) - 1
    return by_letter, eps_out, full_mask, deterministic


def accepts_lasso(b: TGba, w: LassoWord) -> bool:
    """Exact membership of ``prefix . cycle^w`` in the automaton's language.

    Epsilon transitions consume no letter.  For automata that are epsilon
    free and deterministic per letter the unique run is followed directly;
    otherwise the product graph of (word position, state) nodes is analysed
    by SCC: the word is accepted iff some reachable SCC's internal
    transitions meet every accepting set.
    """
    by_letter, eps_out, full_mask, deterministic = _run_index(b)
    n = w.positions
    loop = len(w.prefix)
    letters = [w.letter(i) for i in range(n)]
    succ = list(range(1, n)) + [loop]

    if deterministic:
        pos, x = 0, b.initial
        seen: dict[tuple[int, int], int] = {}
        masks: list[int] = []
        while (pos, x) not in seen:
            seen[(pos, x)] = len(masks)
            step = by_letter[x].get(letters[pos])
            if not step:
                return False
            dst, mask = step[0]
            masks.append(mask)
            pos, x = succ[pos], dst
        acc = 0
        for m in masks[seen[(pos, x)] :]:
            acc |= m
        return acc == full_mask

    # epsilon cycles would allow runs that never consume the word
    _assert_no_epsilon_cycles(b, eps_out)

    adj: dict[tuple[int, int], list[tuple[tuple[int, int], int]]] = {}
    start = (0, b.initial)
    stack = [start]
    adj[start] = []
    order = [start]
    while stack:
        node = stack.pop()
        pos, x = node
        edges = []
        for dst, mask in by_letter[x].get(letters[pos], ()):
            edges.append(((succ[pos], dst), mask))
        for dst, mask in eps_out[x]:
            edges.append(((pos, dst), mask))
        adj[node] = edges
        for nxt, _ in edges:
            if nxt not in adj:
                adj[nxt] = []
                order.append(nxt)
                stack.append(nxt)

    comps = strongly_connected_components(order, lambda v: (e[0] for e in adj[v]))
    comp_of = {}
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci
    comp_mask = [None] * len(comps)  # None = no internal edge yet
    for v, edges in adj.items():
        ci = comp_of[v]
        for nxt, mask in edges:
            if comp_of[nxt] == ci:
                comp_mask[ci] = (comp_mask[ci] or 0) | mask
    return any(m == full_mask for m in comp_mask if m is not None)


def _assert_no_epsilon_cycles(b: TGba, eps_out) -> None:
    color = [0] * b.num_states  # 0 unvisited, 1 active, 2 done
    for root in b.states():
        if color[root]:
            continue
        stack = [(root, iter(eps_out[root]))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            advanced = False
            for dst, _ in it:
                if color[dst] == 1:
                    raise AutomatonError("epsilon transitions form a cycle")
                if color[dst] == 0:
                    color[dst] = 1
                    stack.append((dst, iter(eps_out[dst])))
                    advanced = True
                    break
            if not advanced:
                color[v] = 2
                stack.pop()


def _render(b: TGba, t: Transition) -> str:
    letter = "eps" if t.is_epsilon() else "{" + ",".join(sorted(t.letter)) + "}"
    return f"({b.name_of(t.src)},{letter},{b.name_of(t.dst)})"


# --- fixtures ------------------------------------------------------------

def fixture_gfa_gfb_gnc() -> TGba:
    """Two-state limit-deterministic automaton for ``G F a & G F b & G !c``.

    State x0 loops on every c-free letter; any letter containing c falls
    into the absorbing trap x1.  Set 1 holds the a-loops, set 2 the
    b-loops; the {a,b} loop belongs to both.
    """
    ap = frozenset({"a", "b", "c"})
    subsets = [
        frozenset(s)
        for r in range(4)
        for s in itertools.combinations(sorted(ap), r)
    ]
    transitions = []
    for letter in subsets:
        transitions.append(Transition(0, letter, 1 if "c" in letter else 0))
        transitions.append(Transition(1, letter, 1))
    f1 = frozenset(
        {Transition(0, frozenset({"a"}), 0), Transition(0, frozenset({"a", "b"}), 0)}
    )
    f2 = frozenset(
        {Transition(0, frozenset({"b"}), 0), Transition(0, frozenset({"a", "b"}), 0)}
    )
    return TGba(
        num_states=2,
        initial=0,
        ap=ap,
        transitions=frozenset(transitions),
        acceptance=(f1, f2),
        names=("x0", "x1"),
    )


def fixture_fg_a() -> TGba:
    """Three-state limit-deterministic automaton for ``F G a``.

    x0 is the nondeterministic part (loops on everything, epsilon guess to
    x1); x1 accepts on each a-letter and falls into the trap x2 on the
    empty letter, so the automaton is total.
    """
    ap = frozenset({"a"})
    a = frozenset({"a"})
    empty = frozenset()
    transitions = frozenset(
        {
            Transition(0, empty, 0),
            Transition(0, a, 0),
            Transition(0, EPSILON, 1),
            Transition(1, a, 1),
            Transition(1, empty, 2),
            Transition(2, a, 2),
            Transition(2, empty, 2),
        }
    )
    acceptance = (frozenset({Transition(1, a, 1)}),)
    return TGba(
        num_states=3,
        initial=0,
        ap=ap,
        transitions=transitions,
        acceptance=acceptance,
        names=("x0", "x1", "x2"),
    )


FIXTURES = {
    "gfa_gfb_gnc": fixture_gfa_gfb_gnc,
    "fg_a": fixture_fg_a,
}


def named_fixture(name: str) -> TGba:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise AutomatonError(
            f"unknown fixture {name!r}; available: {', '.join(sorted(FIXTURES))}"
        ) from None
