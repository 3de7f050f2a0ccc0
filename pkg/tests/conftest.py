from fractions import Fraction

import pytest

from mdpwf import AsymMdp, builtin


@pytest.fixture
def investment():
    return builtin("investment")


@pytest.fixture
def ex2():
    return builtin("appendix_ex2")


@pytest.fixture
def ex3():
    return builtin("appendix_ex3")


@pytest.fixture
def ex4():
    return builtin("appendix_ex4")


@pytest.fixture
def twins():
    """Three principals, two sharing a discount factor."""
    return AsymMdp.build(
        states=["s0", "s1"],
        principals=[("A", Fraction(1, 2)), ("B", Fraction(1, 2)), ("C", Fraction(9, 10))],
        actions=[
            ("s0", "a", [("s0", 1)], [1, 2, 3]),
            ("s0", "b", [("s1", 1)], [0, 1, 0]),
            ("s1", "b", [("s1", 1)], [6, 5, 4]),
        ],
    )
