"""Policy synthesis for labeled MDPs under LTL specifications.

The pipeline: an LTL specification is recognized by a limit-deterministic
generalized Buchi automaton; the automaton is augmented with a memory
vector recording visited accepting sets; the product with the controlled
MDP yields a reward function whose optimal discounted policies positively
satisfy the specification, learnable by tabular Q-learning.
"""

from .augment import (
    AugmentedState,
    augment,
    augment_with_states,
    merge_unaccepting,
    reset,
    vec_max,
    visitf,
)
from .automata import (
    EPSILON,
    AutomatonError,
    LimitDetPartition,
    NotLimitDeterministic,
    TGba,
    Transition,
    accepts_lasso,
    check_limit_deterministic,
    degeneralize,
    fixture_fg_a,
    fixture_gfa_gfb_gnc,
    load_automaton,
    named_fixture,
    parse_automaton,
    serialize_automaton,
)
from .learn import (
    LearningCurve,
    QTable,
    TrainConfig,
    TrainResult,
    alpha,
    epsilon,
    greedy_policy,
    q_update,
    train,
    value_iteration,
)
from .ltl import (
    Formula,
    LassoWord,
    ParseError,
    atoms,
    eval_lasso,
    format_ltl,
    lasso,
    load_formula,
    parse_ltl,
)
from .mdp import (
    LabeledMdp,
    MarkovChain,
    MdpError,
    PositionalPolicy,
    RecurrenceDecomposition,
    UndefinedChoice,
    build_gridworld,
    decompose,
    induce_chain,
    load_mdp,
    parse_mdp,
    reach_probability,
    serialize_mdp,
)
from .product import (
    AcceptingReward,
    AlphabetMismatch,
    FrontierReward,
    FrontierState,
    MissingAutomatonMove,
    NondeterministicMove,
    PolicyEvaluation,
    ProductMdp,
    build_product,
    check_positional_impossibility,
    evaluate_policy,
    frontier_init,
    frontier_step,
    reward_accepting,
)

__version__ = "0.1.0"
