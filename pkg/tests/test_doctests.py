"""Keep the docstring examples honest."""

import doctest

import mbflow.examples
import mbflow.homalg


def test_homalg_doctests():
    failures, tried = doctest.testmod(mbflow.homalg)
    assert tried > 0
    assert failures == 0


def test_examples_doctests():
    failures, tried = doctest.testmod(mbflow.examples)
    assert tried > 0
    assert failures == 0
