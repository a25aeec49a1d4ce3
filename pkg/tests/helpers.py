"""Independent oracles and generators shared across the test modules.

Everything here deliberately avoids the library's own decision procedures:
formula evaluation walks suffixes directly, automaton acceptance searches
for accepting closed walks with a layered DP, and reachability is estimated
by vectorized simulation.
"""

from __future__ import annotations

import itertools

import numpy as np

from omegarl import EPSILON, LassoWord, Transition, ltl
from omegarl.graphs import backward_closure

AP3 = ("a", "b", "c")


def letters_over(ap):
    return [
        frozenset(s)
        for r in range(len(ap) + 1)
        for s in itertools.combinations(sorted(ap), r)
    ]


# --- formula-side oracle -----------------------------------------------------

def bf_eval(phi, w: LassoWord) -> bool:
    """Direct semantic evaluation by walking suffix positions.

    Until/Eventually/Globally scan the (finitely many) positions reachable
    from the current one; n+1 walk entries cover every distinct suffix.
    """
    n = w.positions
    loop = len(w.prefix)

    def succ(i):
        return i + 1 if i + 1 < n else loop

    def walk(i):
        seq = [i]
        for _ in range(n):
            i = succ(i)
            seq.append(i)
        return seq

    def ev(f, i):
        if isinstance(f, ltl.TrueBool):
            return True
        if isinstance(f, ltl.FalseBool):
            return False
        if isinstance(f, ltl.Atom):
            return f.name in w.letter(i)
        if isinstance(f, ltl.Not):
            return not ev(f.operand, i)
        if isinstance(f, ltl.And):
            return ev(f.left, i) and ev(f.right, i)
        if isinstance(f, ltl.Or):
            return ev(f.left, i) or ev(f.right, i)
        if isinstance(f, ltl.Implies):
            return (not ev(f.left, i)) or ev(f.right, i)
        if isinstance(f, ltl.Next):
            return ev(f.operand, succ(i))
        if isinstance(f, ltl.Until):
            for k in walk(i):
                if ev(f.right, k):
                    return True
                if not ev(f.left, k):
                    return False
            return False
        if isinstance(f, ltl.Eventually):
            return any(ev(f.operand, k) for k in walk(i))
        if isinstance(f, ltl.Globally):
            return all(ev(f.operand, k) for k in walk(i))
        raise TypeError(f)

    return ev(phi, 0)


# --- automaton-side oracle ---------------------------------------------------

def enum_accepts(b, w: LassoWord) -> bool:
    """Acceptance by explicit bounded search for an accepting closed walk.

    Builds the (position, state) run graph, then for every reachable anchor
    node runs a layered (node, visited-set-mask) reachability of bounded
    depth looking for a closed walk through the anchor that covers every
    accepting set.  The bound (#sets + 1) * #nodes suffices: inside one
    strongly connected region each set needs at most a #nodes-long detour.
    """
    n_sets = len(b.acceptance)
    full = (1 << n_sets) - 1
    mask_of = {}
    for t in b.transitions:
        mask_of[t] = 0
        for j, acc in enumerate(b.acceptance):
            if t in acc:
                mask_of[t] |= 1 << j

    n = w.positions
    loop = len(w.prefix)

    def succ(i):
        return i + 1 if i + 1 < n else loop

    edges: dict[tuple[int, int], list[tuple[tuple[int, int], int]]] = {}
    start = (0, b.initial)
    stack = [start]
    edges[start] = []
    while stack:
        node = stack.pop()
        pos, x = node
        out = []
        for t in b.transitions:
            if t.src != x:
                continue
            if t.letter is EPSILON:
                out.append(((pos, t.dst), mask_of[t]))
            elif t.letter == w.letter(pos):
                out.append(((succ(pos), t.dst), mask_of[t]))
        edges[node] = out
        for nxt, _ in out:
            if nxt not in edges:
                edges[nxt] = []
                stack.append(nxt)

    nodes = list(edges)
    bound = max(12, (n_sets + 1) * len(nodes))
    for anchor in nodes:
        frontier = {(anchor, 0)}
        seen = set(frontier)
        for _ in range(bound):
            nxt_frontier = set()
            for node, mask in frontier:
                for nxt, m in edges[node]:
                    state = (nxt, mask | m)
                    if state not in seen:
                        seen.add(state)
                        nxt_frontier.add(state)
            if (anchor, full) in seen:
                return True
            frontier = nxt_frontier
            if not frontier:
                break
        if (anchor, full) in seen:
            return True
    return False


# --- random generators ---------------------------------------------------------

def random_formula(rng, depth: int):
    kinds = ("atom", "true", "false", "not", "next", "even", "glob", "and", "or", "imp", "until")
    if depth == 0:
        kind = kinds[rng.integers(3)]
    else:
        kind = kinds[rng.integers(len(kinds))]
    if kind == "atom":
        return ltl.Atom(AP3[rng.integers(3)])
    if kind == "true":
        return ltl.TrueBool()
    if kind == "false":
        return ltl.FalseBool()
    sub = depth - 1
    if kind == "not":
        return ltl.Not(random_formula(rng, sub))
    if kind == "next":
        return ltl.Next(random_formula(rng, sub))
    if kind == "even":
        return ltl.Eventually(random_formula(rng, sub))
    if kind == "glob":
        return ltl.Globally(random_formula(rng, sub))
    left, right = random_formula(rng, sub), random_formula(rng, sub)
    if kind == "and":
        return ltl.And(left, right)
    if kind == "or":
        return ltl.Or(left, right)
    if kind == "imp":
        return ltl.Implies(left, right)
    return ltl.Until(left, right)


def random_lasso(rng, max_prefix=3, max_cycle=3, ap=AP3) -> LassoWord:
    letters = letters_over(ap)
    np_ = rng.integers(max_prefix + 1)
    nc = rng.integers(1, max_cycle + 1)
    return LassoWord(
        tuple(letters[rng.integers(len(letters))] for _ in range(np_)),
        tuple(letters[rng.integers(len(letters))] for _ in range(nc)),
    )


def random_tgba(rng, n_states=3, ap=("a", "b"), n_sets=2, allow_eps=True):
    """Random small automaton; may be nondeterministic and partial, with
    acyclic epsilon edges (source id < target id)."""
    from omegarl import TGba

    letters = letters_over(ap)
    transitions = []
    for s in range(n_states):
        for letter in letters:
            k = rng.integers(3)  # 0, 1 or 2 successors
            dsts = rng.choice(n_states, size=min(k, n_states), replace=False)
            for d in dsts:
                transitions.append(Transition(s, letter, int(d)))
    if allow_eps:
        for s in range(n_states):
            for d in range(s + 1, n_states):
                if rng.random() < 0.25:
                    transitions.append(Transition(s, EPSILON, d))
    non_eps = [t for t in transitions if t.letter is not EPSILON]
    acceptance = []
    for _ in range(n_sets):
        members = [t for t in non_eps if rng.random() < 0.35]
        acceptance.append(frozenset(members))
    return TGba(
        num_states=n_states,
        initial=0,
        ap=frozenset(ap),
        transitions=frozenset(transitions),
        acceptance=tuple(acceptance),
    )


def random_chain(rng, n_states=20, n_absorbing=3):
    """Random sparse Markov chain with a few absorbing states."""
    from omegarl import MarkovChain

    prob = {}
    absorbing = set(rng.choice(n_states, size=n_absorbing, replace=False).tolist())
    for s in range(n_states):
        if s in absorbing:
            prob[s] = ((s, 1.0),)
            continue
        deg = int(rng.integers(2, 5))
        dsts = sorted(set(rng.choice(n_states, size=deg, replace=False).tolist()))
        weights = rng.random(len(dsts)) + 0.05
        weights = weights / weights.sum()
        weights[-1] = 1.0 - float(weights[:-1].sum())
        prob[s] = tuple((d, float(p)) for d, p in zip(dsts, weights))
    return MarkovChain(states=tuple(range(n_states)), prob=prob, initial=0)


# --- simulation estimators -----------------------------------------------------

def _chain_arrays(mc):
    states = list(mc.states)
    pos = {s: i for i, s in enumerate(states)}
    n = len(states)
    deg = max(len(mc.prob[s]) for s in states)
    dst = np.zeros((n, deg), dtype=np.int64)
    cum = np.ones((n, deg))
    for s in states:
        row = mc.prob[s]
        acc = 0.0
        for k, (d, p) in enumerate(row):
            acc += p
            dst[pos[s], k] = pos[d]
            cum[pos[s], k] = acc
        for k in range(len(row), deg):
            dst[pos[s], k] = dst[pos[s], len(row) - 1]
    return states, pos, dst, cum


def mc_reach_estimate(mc, target, runs, max_steps, rng):
    """Monte Carlo estimate of the reach probability, stopping each run as
    soon as its verdict is decided (target hit, or no path to the target
    remains)."""
    states, pos, dst, cum = _chain_arrays(mc)
    preds = {s: [] for s in states}
    for s in states:
        for d, _ in mc.prob[s]:
            preds[d].append(s)
    can_reach = backward_closure(set(target) & set(states), lambda v: preds[v])
    is_target = np.array([s in target for s in states])
    is_null = np.array([s not in can_reach for s in states])

    cur = np.full(runs, pos[mc.initial], dtype=np.int64)
    verdict = np.full(runs, -1, dtype=np.int64)
    for _ in range(max_steps + 1):
        undecided = verdict < 0
        if not undecided.any():
            break
        idx = np.flatnonzero(undecided)
        here = cur[idx]
        verdict[idx[is_target[here]]] = 1
        verdict[idx[is_null[here]]] = 0
        undecided = verdict < 0
        if not undecided.any():
            break
        idx = np.flatnonzero(undecided)
        u = rng.random(idx.size)
        rows = cur[idx]
        choice = (u[:, None] > cum[rows]).sum(axis=1)
        cur[idx] = dst[rows, choice]
    assert (verdict >= 0).all(), "some simulated runs never reached a verdict"
    return float((verdict == 1).mean())


def mc_absorption_estimate(mc, accepting_states, other_recurrent, runs, max_steps, rng):
    """Fraction of runs that settle in an accepting recurrent class."""
    states, pos, dst, cum = _chain_arrays(mc)
    acc = np.array([s in accepting_states for s in states])
    rej = np.array([s in other_recurrent for s in states])
    cur = np.full(runs, pos[mc.initial], dtype=np.int64)
    verdict = np.full(runs, -1, dtype=np.int64)
    for _ in range(max_steps + 1):
        undecided = verdict < 0
        if not undecided.any():
            break
        idx = np.flatnonzero(undecided)
        here = cur[idx]
        verdict[idx[acc[here]]] = 1
        verdict[idx[rej[here]]] = 0
        undecided = verdict < 0
        if not undecided.any():
            break
        idx = np.flatnonzero(undecided)
        u = rng.random(idx.size)
        rows = cur[idx]
        choice = (u[:, None] > cum[rows]).sum(axis=1)
        cur[idx] = dst[rows, choice]
    assert (verdict >= 0).all()
    return float((verdict == 1).mean())
