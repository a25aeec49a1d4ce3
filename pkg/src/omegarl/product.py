"""Product of a labeled MDP with a specification automaton.

The product synchronizes MDP transitions with automaton moves on the
produced labels and adds a probability-one action for each automaton
epsilon transition.  Accepting transition sets lift to product transitions
and drive the two reward schemes: the memoryless accepting-transition
reward and the working-set ("frontier") baseline.  Policies are evaluated
exactly through recurrence decomposition of the induced chain.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .automata import TGba, Transition
from .mdp import (
    LabeledMdp,
    PositionalPolicy,
    decompose,
    induce_chain,
    reach_probability,
)

ProductTransition = tuple[int, str, int]  # (state index, action, state index)


class ProductError(ValueError):
    pass


class AlphabetMismatch(ProductError):
    pass


class MissingAutomatonMove(ProductError):
    """The automaton has no move for a label the MDP can produce."""


class NondeterministicMove(ProductError):
    """The automaton has several moves for one (state, letter) pair."""


@dataclass(frozen=True)
class ProductMdp:
    """Reachable product, exposed as a labeled MDP plus acceptance data.

    ``pairs[i]`` gives the (MDP state, automaton state) decomposition of
    product state ``i``; ``aut_edge`` maps each product transition to the
    automaton transition it synchronizes with (epsilon actions included).
    """

    mdp: LabeledMdp
    pairs: tuple[tuple[int, int], ...]
    acceptance: tuple[frozenset[ProductTransition], ...]
    aut_edge: dict[ProductTransition, Transition]
    base_mdp: LabeledMdp
    automaton: TGba

    @property
    def num_states(self) -> int:
        return self.mdp.num_states

    def name_of(self, i: int) -> str:
        return self.mdp.name_of(i)

    def render_transition(self, t: ProductTransition) -> str:
        src, a, dst = t
        return f"{self.name_of(src)} -{a}-> {self.name_of(dst)}"

    def accepting_transitions(self) -> frozenset[ProductTransition]:
        return frozenset().union(*self.acceptance)


def build_product(m: LabeledMdp, b: TGba) -> ProductMdp:
    """Reachable synchronous product of ``m`` with ``b``.

    Labels are projected onto the automaton's AP universe before lookup.
    The automaton must be deterministic per letter (epsilon guesses model
    the allowed nondeterminism) and must offer a move for every label the
    MDP can produce from a reachable pair; otherwise construction fails
    with a diagnostic rather than dropping probability mass.
    """
    if not b.ap <= m.ap:
        raise AlphabetMismatch(
            f"automaton propositions {sorted(b.ap - m.ap)} missing from the MDP"
        )

    lookup: list[dict[frozenset, Transition]] = [{} for _ in range(b.num_states)]
    eps_out: list[list[Transition]] = [[] for _ in range(b.num_states)]
    for t in sorted(b.transitions, key=lambda t: (t.src, t.dst)):
        if t.is_epsilon():
            eps_out[t.src].append(t)
        else:
            if t.letter in lookup[t.src]:
                raise NondeterministicMove(
                    f"automaton state {b.name_of(t.src)} has two successors on "
                    f"letter {sorted(t.letter)}"
                )
            lookup[t.src][t.letter] = t

    start = (m.initial, b.initial)
    index: dict[tuple[int, int], int] = {start: 0}
    order: list[tuple[int, int]] = [start]
    enabled: dict[int, list[str]] = {}
    prob: dict[tuple[int, str], tuple[tuple[int, float], ...]] = {}
    label: dict[tuple[int, str, int], frozenset[str]] = {}
    aut_edge: dict[ProductTransition, Transition] = {}
    acceptance: list[set[ProductTransition]] = [set() for _ in b.acceptance]

    queue = deque([start])
    while queue:
        s, x = queue.popleft()
        i = index[(s, x)]
        actions: list[str] = []
        for a in m.enabled[s]:
            row = []
            for dst, p in m.prob[(s, a)]:
                letter = m.label_of(s, a, dst) & b.ap
                t = lookup[x].get(letter)
                if t is None:
                    raise MissingAutomatonMove(
                        f"automaton state {b.name_of(x)} has no move on label "
                        f"{sorted(letter)} produced by ({m.name_of(s)}, {a}, {m.name_of(dst)})"
                    )
                key = (dst, t.dst)
                if key not in index:
                    index[key] = len(order)
                    order.append(key)
                    queue.append(key)
                j = index[key]
                row.append((j, p))
                pt = (i, a, j)
                aut_edge[pt] = t
                full_label = m.label_of(s, a, dst)
                if full_label:
                    label[(i, a, j)] = full_label
                for k, acc in enumerate(b.acceptance):
                    if t in acc:
                        acceptance[k].add(pt)
            prob[(i, a)] = tuple(sorted(row))
            actions.append(a)
        for t in eps_out[x]:
            a = f"eps->{b.name_of(t.dst)}"
            key = (s, t.dst)
            if key not in index:
                index[key] = len(order)
                order.append(key)
                queue.append(key)
            j = index[key]
            prob[(i, a)] = ((j, 1.0),)
            aut_edge[(i, a, j)] = t
            actions.append(a)
        # action ids keep the base MDP's ordering, epsilon guesses last
        enabled[i] = actions

    names = tuple(f"({m.name_of(s)}|{b.name_of(x)})" for (s, x) in order)
    product_mdp = LabeledMdp(
        num_states=len(order),
        initial=0,
        ap=m.ap,
        enabled=tuple(tuple(enabled[i]) for i in range(len(order))),
        prob=prob,
        label=label,
        state_names=names,
    )
    return ProductMdp(
        mdp=product_mdp,
        pairs=tuple(order),
        acceptance=tuple(frozenset(acc) for acc in acceptance),
        aut_edge=aut_edge,
        base_mdp=m,
        automaton=b,
    )


# --- rewards ---------------------------------------------------------------

def reward_accepting(
    t: ProductTransition, acceptance: tuple[frozenset[ProductTransition], ...], r_p: float
) -> float:
    """Fixed positive reward on transitions inside any accepting set."""
    if r_p <= 0:
        raise ValueError("r_p must be positive")
    return r_p if any(t in acc for acc in acceptance) else 0.0


@dataclass(frozen=True)
class FrontierState:
    """Working set of accepting automaton transitions not yet taken."""

    remaining: frozenset[Transition]


def frontier_init(acceptance: tuple[frozenset[Transition], ...]) -> FrontierState:
    return FrontierState(frozenset().union(*acceptance))


def frontier_step(
    f: FrontierState,
    t: Transition,
    acceptance: tuple[frozenset[Transition], ...],
) -> tuple[FrontierState, bool]:
    """Remove every accepting set containing ``t`` when ``t`` is still pending.

    Returns the new state and whether the transition scored.  An emptied
    working set is re-initialized to all accepting transitions.
    """
    if t not in f.remaining:
        return f, False
    removed = frozenset().union(*(acc for acc in acceptance if t in acc))
    remaining = f.remaining - removed
    if not remaining:
        remaining = frozenset().union(*acceptance)
    return FrontierState(remaining), True


class AcceptingReward:
    """Reward scheme of the memory-augmented method: stateless per episode."""

    def __init__(self, product: ProductMdp, r_p: float):
        if r_p <= 0:
            raise ValueError("r_p must be positive")
        self.r_p = float(r_p)
        self._accepting = product.accepting_transitions()

    def reset(self) -> None:
        pass

    def __call__(self, t: ProductTransition) -> float:
        return self.r_p if t in self._accepting else 0.0


class FrontierReward:
    """Working-set baseline: scores the first occurrence of each accepting
    set's transitions, re-initializing once every set has been hit."""

    def __init__(self, product: ProductMdp, r_p: float):
        if r_p <= 0:
            raise ValueError("r_p must be positive")
        self.r_p = float(r_p)
        self._product = product
        self._acceptance = product.automaton.acceptance
        self._state = frontier_init(self._acceptance)

    def reset(self) -> None:
        self._state = frontier_init(self._acceptance)

    def __call__(self, t: ProductTransition) -> float:
        aut_t = self._product.aut_edge[t]
        if aut_t.is_epsilon():
            return 0.0
        self._state, scored = frontier_step(self._state, aut_t, self._acceptance)
        return self.r_p if scored else 0.0


# --- exact policy evaluation -------------------------------------------------

@dataclass(frozen=True)
class ClassReport:
    """One recurrent class: its states, which accepting sets its internal
    transitions cover, and one witness transition per covered set."""

    states: tuple[int, ...]
    coverage: tuple[bool, ...]
    accepting: bool
    witnesses: dict[int, ProductTransition]


@dataclass(frozen=True)
class PolicyEvaluation:
    sat_probability: float
    positively_satisfies: bool
    transient: tuple[int, ...]
    classes: tuple[ClassReport, ...]

    def to_dict(self, product: ProductMdp, pi: PositionalPolicy) -> dict:
        return {
            "policy": {
                product.name_of(s): a for s, a in sorted(pi.choice.items())
            },
            "sat_probability": self.sat_probability,
            "positively_satisfies": self.positively_satisfies,
            "transient_count": len(self.transient),
            "classes": [
                {
                    "states": [product.name_of(s) for s in c.states],
                    "coverage": [int(x) for x in c.coverage],
                    "accepting": c.accepting,
                    "witnesses": {
                        str(j + 1): product.render_transition(t)
                        for j, t in sorted(c.witnesses.items())
                    },
                }
                for c in self.classes
            ],
        }


def evaluate_policy(p: ProductMdp, pi: PositionalPolicy) -> PolicyEvaluation:
    """Exact satisfaction analysis of a positional policy on the product.

    A recurrent class of the induced chain is accepting when its internal
    transitions intersect every accepting set; the satisfaction probability
    is the probability of reaching the union of accepting classes.  The
    all-accepting and no-accepting cases short-circuit to exact 1.0/0.0
    (a finite chain enters its recurrent part with probability one).
    """
    chain = induce_chain(p.mdp, pi)
    dec = decompose(chain)
    n_sets = len(p.acceptance)

    classes: list[ClassReport] = []
    accepting_states: set[int] = set()
    for members in dec.recurrent_classes:
        edges = []
        for s in members:
            a = pi.choice[s]
            for dst, _ in chain.prob[s]:
                edges.append((s, a, dst))
        coverage = []
        witnesses: dict[int, ProductTransition] = {}
        for j in range(n_sets):
            hit = next((e for e in sorted(edges) if e in p.acceptance[j]), None)
            coverage.append(hit is not None)
            if hit is not None:
                witnesses[j] = hit
        accepting = all(coverage)
        if accepting:
            accepting_states.update(members)
        classes.append(
            ClassReport(
                states=tuple(sorted(members)),
                coverage=tuple(coverage),
                accepting=accepting,
                witnesses=witnesses,
            )
        )

    if not accepting_states:
        sat = 0.0
    elif all(c.accepting for c in classes):
        sat = 1.0
    else:
        sat = reach_probability(chain, accepting_states)[chain.initial]
    return PolicyEvaluation(
        sat_probability=sat,
        positively_satisfies=sat > 0.0,
        transient=tuple(sorted(dec.transient)),
        classes=tuple(classes),
    )


def check_positional_impossibility(p: ProductMdp) -> bool:
    """Certificate that no positional policy can hit two accepting sets.

    True when two accepting sets exist whose transitions all depart from
    one common product state under disjoint action sets; a positional
    policy fixes a single action there, so it can intersect at most one of
    the two sets.
    """
    n = len(p.acceptance)
    for i in range(n):
        for j in range(i + 1, n):
            fi, fj = p.acceptance[i], p.acceptance[j]
            if not fi or not fj:
                continue
            srcs = {t[0] for t in fi} | {t[0] for t in fj}
            if len(srcs) != 1:
                continue
            acts_i = {t[1] for t in fi}
            acts_j = {t[1] for t in fj}
            if acts_i.isdisjoint(acts_j):
                return True
    return False
