"""Built-in example systems."""
from __future__ import annotations

import numpy as np

from .prob_core import Channel, ProbVec, System


def survey_system() -> System:
    """Yes/No question answered truthfully with probability 5/6; half the
    population has X = Yes."""
    return System(
        ProbVec([0.5, 0.5]),
        Channel([[5 / 6, 1 / 6], [1 / 6, 5 / 6]]),
        x_labels=("Yes", "No"),
        y_labels=("Yes", "No"),
    )


def ternary_system(prior=(0.6, 0.3, 0.1), s: float = 0.4) -> System:
    """Three inputs; the output equals the input w.p. 1 - s and is otherwise
    one of the two other symbols uniformly."""
    k = len(prior)
    rows = np.full((k, k), s / (k - 1))
    np.fill_diagonal(rows, 1.0 - s)
    return System(ProbVec(prior), Channel(rows))


BUILTIN = {"survey": survey_system, "ternary": ternary_system}
# short aliases accepted by the command line
BUILTIN["fig2"] = survey_system
BUILTIN["fig3"] = ternary_system
