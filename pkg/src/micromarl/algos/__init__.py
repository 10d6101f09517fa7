from .coma import COMA
from .common import (
    greedy_actions,
    linear_schedule,
    select_epsilon_greedy,
    unroll_agent,
)
from .qlearners import IQL, QMIX, VDN, QLearnerBase
from .qtran import QTRAN

ALGORITHMS = {
    "iql": IQL,
    "vdn": VDN,
    "qmix": QMIX,
    "qtran": QTRAN,
    "coma": COMA,
}


def make_learner(name: str, meta: dict, cfg, rng):
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return cls(meta, cfg, rng)


__all__ = ["ALGORITHMS", "COMA", "IQL", "QLearnerBase", "QMIX", "QTRAN", "VDN",
           "greedy_actions", "linear_schedule", "make_learner",
           "select_epsilon_greedy", "unroll_agent"]
