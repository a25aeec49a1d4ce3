"""Labeled Markov decision processes and induced-chain analysis.

Includes the nine-room gridworld environment used by the experiments, a
text format for external MDPs, transient/recurrent decomposition of induced
chains, and exact reachability probabilities via a direct linear solve.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .graphs import backward_closure, strongly_connected_components

ROW_SUM_TOL = 1e-12


class MdpError(ValueError):
    pass


class UndefinedChoice(MdpError):
    """A state reachable under the policy has no action choice."""

    def __init__(self, state):
        super().__init__(f"policy undefined on reachable state {state}")
        self.state = state


@dataclass(frozen=True)
class LabeledMdp:
    """Finite MDP whose transitions carry sets of atomic propositions.

    ``prob[(s, a)]`` is a tuple of (successor, probability) pairs summing to
    one; ``label`` is defined exactly on positive-probability triples and
    defaults to the empty set.
    """

    num_states: int
    initial: int
    ap: frozenset[str]
    enabled: tuple[tuple[str, ...], ...]
    prob: dict[tuple[int, str], tuple[tuple[int, float], ...]]
    label: dict[tuple[int, str, int], frozenset[str]]
    state_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.enabled) != self.num_states:
            raise MdpError("enabled-action table does not match state count")
        if not 0 <= self.initial < self.num_states:
            raise MdpError(f"initial state {self.initial} out of range")
        triples = set()
        for s, actions in enumerate(self.enabled):
            if not actions:
                raise MdpError(f"state {s} has no enabled action")
            for a in actions:
                row = self.prob.get((s, a))
                if row is None:
                    raise MdpError(f"missing distribution for ({s}, {a})")
                total = 0.0
                for dst, p in row:
                    if not 0 <= dst < self.num_states:
                        raise MdpError(f"({s}, {a}) targets undeclared state {dst}")
                    if p <= 0:
                        raise MdpError(f"({s}, {a}, {dst}) has nonpositive probability")
                    total += p
                    triples.add((s, a, dst))
                if abs(total - 1.0) > ROW_SUM_TOL:
                    raise MdpError(f"({s}, {a}) probabilities sum to {total!r}, not 1")
        for key, letter in self.label.items():
            if key not in triples:
                raise MdpError(f"label on zero-probability triple {key}")
            if not letter <= self.ap:
                raise MdpError(f"label {sorted(letter)} uses undeclared propositions")
        if self.state_names is not None and len(self.state_names) != self.num_states:
            raise MdpError("state name list does not match state count")

    def name_of(self, state: int) -> str:
        return self.state_names[state] if self.state_names else f"s{state}"

    def label_of(self, s: int, a: str, dst: int) -> frozenset[str]:
        return self.label.get((s, a, dst), frozenset())

    def states(self) -> range:
        return range(self.num_states)


@dataclass(frozen=True)
class PositionalPolicy:
    """Deterministic stationary policy: one enabled action per state."""

    choice: dict[int, str]


@dataclass(frozen=True)
class MarkovChain:
    """Chain over a subset of MDP states (those reachable under a policy)."""

    states: tuple[int, ...]
    prob: dict[int, tuple[tuple[int, float], ...]]
    initial: int
    state_names: tuple[str, ...] | None = None

    def __post_init__(self):
        members = set(self.states)
        if self.initial not in members:
            raise MdpError("chain initial state missing from state set")
        for s in self.states:
            row = self.prob.get(s)
            if row is None:
                raise MdpError(f"missing distribution for chain state {s}")
            total = 0.0
            for dst, p in row:
                if dst not in members:
                    raise MdpError(f"chain row {s} leaves the state set")
                if p <= 0:
                    raise MdpError(f"chain edge ({s}, {dst}) has nonpositive probability")
                total += p
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise MdpError(f"chain row {s} sums to {total!r}, not 1")


@dataclass(frozen=True)
class RecurrenceDecomposition:
    """Transient states plus the closed irreducible recurrent classes."""

    transient: frozenset[int]
    recurrent_classes: tuple[frozenset[int], ...]


# --- gridworld -----------------------------------------------------------

_MOVES = {"right": (0, 1), "left": (0, -1), "up": (-1, 0), "down": (1, 0)}
_OPPOSITE = {"right": "left", "left": "right", "up": "down", "down": "up"}
UNSAFE_ROOMS = (2, 3, 5, 6)
CORRIDOR = 4


def _grid_move(s: int, direction: str) -> int:
    """4-neighbour move on the 3x3 grid; off-grid attempts stay put."""
    r, c = divmod(s, 3)
    dr, dc = _MOVES[direction]
    r2, c2 = r + dr, c + dc
    if 0 <= r2 < 3 and 0 <= c2 < 3:
        return r2 * 3 + c2
    return s


def build_gridworld() -> LabeledMdp:
    """Eight rooms around a central corridor on a 3x3 grid.

    Rooms use the four compass actions: the intended neighbour is reached
    with probability 0.9 and the opposite one with 0.1, staying put when a
    move would leave the grid.  The corridor s4 has one action per room,
    reaching it with probability 0.9 and staying with 0.1.  Entering any of
    the four unsafe rooms is labeled {c}; the corridor-to-s0 transition is
    labeled {a} and corridor-to-s8 {b}.
    """
    enabled: list[tuple[str, ...]] = []
    prob: dict[tuple[int, str], tuple[tuple[int, float], ...]] = {}
    label: dict[tuple[int, str, int], frozenset[str]] = {}

    for s in range(9):
        if s == CORRIDOR:
            actions = tuple(f"to_s{i}" for i in range(9) if i != CORRIDOR)
            for a in actions:
                target = int(a[4:])
                prob[(s, a)] = tuple(sorted(((target, 0.9), (CORRIDOR, 0.1))))
        else:
            # action ids follow the environment's listing order
            actions = ("right", "left", "up", "down")
            for a in actions:
                intended = _grid_move(s, a)
                slip = _grid_move(s, _OPPOSITE[a])
                dist: dict[int, float] = {intended: 0.9}
                dist[slip] = dist.get(slip, 0.0) + 0.1
                prob[(s, a)] = tuple(sorted(dist.items()))
        enabled.append(actions)

    for (s, a), row in prob.items():
        for dst, _ in row:
            if dst in UNSAFE_ROOMS:
                label[(s, a, dst)] = frozenset({"c"})
    label[(CORRIDOR, "to_s0", 0)] = frozenset({"a"})
    label[(CORRIDOR, "to_s8", 8)] = frozenset({"b"})

    return LabeledMdp(
        num_states=9,
        initial=7,
        ap=frozenset({"a", "b", "c"}),
        enabled=tuple(enabled),
        prob=prob,
        label=label,
        state_names=tuple(f"s{i}" for i in range(9)),
    )


ENVIRONMENTS = {"grid9": build_gridworld}


# --- text format ----------------------------------------------------------

def serialize_mdp(m: LabeledMdp) -> str:
    lines = [
        f"states: {m.num_states}",
        f"initial: {m.initial}",
        f"ap: {' '.join(sorted(m.ap))}".rstrip(),
    ]
    for s in m.states():
        for a in m.enabled[s]:
            for dst, p in m.prob[(s, a)]:
                lines.append(f"prob {s} {a} {dst} {p!r}")
    for (s, a, dst) in sorted(m.label):
        letter = m.label[(s, a, dst)]
        if letter:
            lines.append(f"label {s} {a} {dst} {{{','.join(sorted(letter))}}}")
    return "\n".join(lines) + "\n"


def parse_mdp(text: str) -> LabeledMdp:
    headers: dict[str, str] = {}
    prob_rows: dict[tuple[int, str], dict[int, float]] = {}
    labels: dict[tuple[int, str, int], frozenset[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith(("states:", "initial:", "ap:")):
            key, value = line.split(":", 1)
            headers[key.strip()] = value.strip()
            continue
        tokens = line.split()
        if tokens[0] == "prob" and len(tokens) == 5:
            s, a, dst, p = int(tokens[1]), tokens[2], int(tokens[3]), float(tokens[4])
            row = prob_rows.setdefault((s, a), {})
            row[dst] = row.get(dst, 0.0) + p
        elif tokens[0] == "label" and len(tokens) == 5:
            s, a, dst = int(tokens[1]), tokens[2], int(tokens[3])
            body = tokens[4].strip()
            if not (body.startswith("{") and body.endswith("}")):
                raise MdpError(f"line {lineno}: label must be written as {{a,b}}")
            inner = body[1:-1].strip()
            letter = frozenset(x.strip() for x in inner.split(",") if x.strip())
            labels[(s, a, dst)] = letter
        else:
            raise MdpError(f"line {lineno}: expected 'prob s a s2 p' or 'label s a s2 {{..}}'")
    for key in ("states", "initial"):
        if key not in headers:
            raise MdpError(f"missing header {key!r}")
    num_states = int(headers["states"])
    enabled: list[list[str]] = [[] for _ in range(num_states)]
    prob: dict[tuple[int, str], tuple[tuple[int, float], ...]] = {}
    # action ids per state follow first appearance in the file
    for (s, a), row in prob_rows.items():
        if not 0 <= s < num_states:
            raise MdpError(f"prob line references undeclared state {s}")
        enabled[s].append(a)
        prob[(s, a)] = tuple(sorted(row.items()))
    return LabeledMdp(
        num_states=num_states,
        initial=int(headers["initial"]),
        ap=frozenset(headers.get("ap", "").split()),
        enabled=tuple(tuple(actions) for actions in enabled),
        prob=prob,
        label=labels,
        state_names=tuple(f"s{i}" for i in range(num_states)),
    )


def load_mdp(path) -> LabeledMdp:
    with open(path, encoding="utf-8") as fh:
        return parse_mdp(fh.read())


# --- analysis --------------------------------------------------------------

def induce_chain(m: LabeledMdp, pi: PositionalPolicy) -> MarkovChain:
    """Markov chain over the states reachable from the initial state under ``pi``."""
    prob: dict[int, tuple[tuple[int, float], ...]] = {}
    seen = {m.initial}
    queue = deque([m.initial])
    while queue:
        s = queue.popleft()
        a = pi.choice.get(s)
        if a is None:
            raise UndefinedChoice(s)
        if a not in m.enabled[s]:
            raise MdpError(f"policy chooses disabled action {a!r} at state {s}")
        row = m.prob[(s, a)]
        prob[s] = row
        for dst, _ in row:
            if dst not in seen:
                seen.add(dst)
                queue.append(dst)
    return MarkovChain(
        states=tuple(sorted(seen)),
        prob=prob,
        initial=m.initial,
        state_names=m.state_names,
    )


def decompose(mc: MarkovChain) -> RecurrenceDecomposition:
    """Recurrent classes are the bottom SCCs of the positive-probability digraph."""
    succ = {s: tuple(dst for dst, _ in mc.prob[s]) for s in mc.states}
    comps = strongly_connected_components(mc.states, lambda v: succ[v])
    classes = []
    for comp in comps:
        members = set(comp)
        if all(dst in members for v in comp for dst in succ[v]):
            classes.append(frozenset(members))
    classes.sort(key=min)
    recurrent = set().union(*classes) if classes else set()
    transient = frozenset(set(mc.states) - recurrent)
    return RecurrenceDecomposition(transient=transient, recurrent_classes=tuple(classes))


def reach_probability(
    mc: MarkovChain, target: set[int], residual_tol: float = 1e-10
) -> dict[int, float]:
    """Exact per-state probability of ever reaching ``target``.

    States that cannot reach the target get 0, target states get 1, and the
    rest solve the standard linear system directly; the solution's residual
    must stay below ``residual_tol``.
    """
    target = set(target) & set(mc.states)
    if not target:
        raise MdpError("target set is empty (or disjoint from the chain)")
    preds: dict[int, list[int]] = {s: [] for s in mc.states}
    for s in mc.states:
        for dst, _ in mc.prob[s]:
            preds[dst].append(s)
    can_reach = backward_closure(target, lambda v: preds[v])

    result = {s: 0.0 for s in mc.states}
    for s in target:
        result[s] = 1.0
    unknown = sorted(can_reach - target)
    if unknown:
        pos = {s: i for i, s in enumerate(unknown)}
        n = len(unknown)
        a = np.eye(n)
        bvec = np.zeros(n)
        for s in unknown:
            i = pos[s]
            for dst, p in mc.prob[s]:
                if dst in target:
                    bvec[i] += p
                elif dst in pos:
                    a[i, pos[dst]] -= p
        x = np.linalg.solve(a, bvec)
        residual = float(np.max(np.abs(a @ x - bvec)))
        if residual > residual_tol:
            raise MdpError(f"reachability solve residual {residual} exceeds {residual_tol}")
        for s in unknown:
            result[s] = float(x[pos[s]])
    return result
