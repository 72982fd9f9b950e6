"""The three estimation problems and their registry."""

from __future__ import annotations

from .ar import ArProblem
from .base import EstimatorError, Problem
from .gk import GkProblem
from .lad import LadProblem

PROBLEM_NAMES = ("lad", "ar", "gk")


def get_problem(name: str) -> Problem:
    """Instantiate a problem by its short code."""
    try:
        cls = {"lad": LadProblem, "ar": ArProblem, "gk": GkProblem}[name.lower()]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; expected one of {PROBLEM_NAMES}") from None
    return cls()


__all__ = [
    "ArProblem",
    "EstimatorError",
    "GkProblem",
    "LadProblem",
    "PROBLEM_NAMES",
    "Problem",
    "get_problem",
]
