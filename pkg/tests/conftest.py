import pytest

from omegarl import (
    augment,
    build_gridworld,
    build_product,
    degeneralize,
    fixture_fg_a,
    fixture_gfa_gfb_gnc,
    merge_unaccepting,
)


@pytest.fixture(scope="session")
def fig_automaton():
    return fixture_gfa_gfb_gnc()


@pytest.fixture(scope="session")
def eps_automaton():
    return fixture_fg_a()


@pytest.fixture(scope="session")
def grid():
    return build_gridworld()


@pytest.fixture(scope="session")
def augmented_product(grid, fig_automaton):
    return build_product(grid, merge_unaccepting(augment(fig_automaton)))


@pytest.fixture(scope="session")
def unmerged_product(grid, fig_automaton):
    return build_product(grid, augment(fig_automaton))


@pytest.fixture(scope="session")
def raw_product(grid, fig_automaton):
    return build_product(grid, fig_automaton)


@pytest.fixture(scope="session")
def degeneralized_product(grid, fig_automaton):
    return build_product(grid, augment(degeneralize(fig_automaton)))
