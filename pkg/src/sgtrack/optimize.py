"""Greedy coordinate-ascent over scene graphs with restarts.

One object varies at a time while the others stay fixed; a move is taken
only if it strictly raises the score. A run ends after a sweep over all
objects changes nothing, or after ``max_sweeps`` sweeps.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np


class Scorer(Protocol):
    n_objects: int

    def n_options(self, i: int) -> int: ...

    def option_scores(self, choice: Sequence[int], i: int) -> np.ndarray: ...

    def total(self, choice: Sequence[int]) -> float: ...


@dataclass
class RunResult:
    choice: list[int]
    score: float
    sweeps: int
    converged: bool
    # score after every accepted move, starting with the initial selection
    trace: list[float] = field(default_factory=list)


@dataclass
class OptimizationResult:
    choice: list[int]
    score: float
    runs: list[RunResult]


def greedy_run(scorer: Scorer, init: Sequence[int], order: Sequence[int], max_sweeps: int) -> RunResult:
    choice = list(init)
    score = scorer.total(choice)
    trace = [score]
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        changed = False
        for i in order:
            if scorer.n_options(i) < 2:
                continue
            s = scorer.option_scores(choice, i)
            current = s[choice[i]]
            best = int(np.argmax(s))
            if s[best] > current:
                score += s[best] - current
                choice[i] = best
                trace.append(score)
                changed = True
        if not changed:
            converged = True
            break
    # re-derive the final score from scratch to shed accumulated rounding
    return RunResult(choice, scorer.total(choice), sweeps, converged, trace)


def greedy_optimize(
    scorer: Scorer,
    guided_init: Sequence[int],
    guided_order: Sequence[int],
    max_sweeps: int,
    n_random: int,
    rng: np.random.Generator,
) -> OptimizationResult:
    """One guided run plus ``n_random`` runs from random selections in random order.

    Returns the best selection found; earlier runs win ties.
    """
    n = scorer.n_objects
    runs = [greedy_run(scorer, guided_init, guided_order, max_sweeps)]
    for _ in range(n_random):
        init = [int(rng.integers(scorer.n_options(i))) for i in range(n)]
        order = [int(i) for i in rng.permutation(n)]
        runs.append(greedy_run(scorer, init, order, max_sweeps))
    best = runs[0]
    for run in runs[1:]:
        if run.score > best.score:
            best = run
    return OptimizationResult(list(best.choice), best.score, runs)


def exhaustive_optimum(scorer: Scorer) -> tuple[list[int], float]:
    """Brute-force maximum over every selection. Only for small instances."""
    best_choice, best_score = None, -np.inf
    ranges = [range(scorer.n_options(i)) for i in range(scorer.n_objects)]
    for choice in itertools.product(*ranges):
        s = scorer.total(choice)
        if s > best_score:
            best_choice, best_score = list(choice), s
    return best_choice, float(best_score)
