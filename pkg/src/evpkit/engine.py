"""Constructive minimal-point engine over a finite pre-order.

Given an oracle enumerating lower sections S(x) and a monotone potential,
produce a terminal point: a member of S(x0) whose own lower section contains
nothing but itself. Two selection modes are provided:

* ``faithful`` picks, at step n, any successor whose potential is within
  ``2**-n`` of the section infimum (preferring a point different from the
  current iterate, then lowest label order), mirroring the recurrence the
  existence argument is built on;
* ``greedy`` picks the potential argmin outright (label order on ties),
  which finite instances always attain.

Under the strict-decrease hypothesis both modes terminate within |X| outer
steps; longer runs are converted into a strict-decrease violation diagnostic
carrying the offending cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import HypothesisError, InputError

MODES = ("faithful", "greedy")


@dataclass(frozen=True, eq=False)
class PreorderOracle:
    """Raw order data: per-label successor lists (lower sections) and the
    potential eta. Labels are hashables; list order fixes tie-breaking."""

    labels: tuple
    successors: dict
    eta: dict

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        known = set(labels)
        for x in labels:
            if x not in self.successors:
                raise InputError(f"no successor list for {x!r}")
            if x not in self.eta:
                raise InputError(f"no potential value for {x!r}")
            for xp in self.successors[x]:
                if xp not in known:
                    raise InputError(f"successor {xp!r} of {x!r} is not a label")
        order = {x: i for i, x in enumerate(labels)}
        object.__setattr__(self, "_order", order)

    def section(self, x):
        return self.successors[x]

    def rank(self, x):
        return self._order[x]

    def validate_monotone(self, tol=0.0):
        """Sweep: eta may not increase along the order."""
        for x in self.labels:
            for xp in self.successors[x]:
                if self.eta[xp] > self.eta[x] + tol:
                    raise InputError(
                        f"potential is not monotone: eta({xp!r}) > eta({x!r})")
        return self


@dataclass(frozen=True)
class EngineStep:
    label: object
    eta: float
    inf_prev: float
    slack: float


@dataclass(frozen=True)
class EngineTrace:
    mode: str
    steps: tuple
    terminal: object

    def to_dict(self):
        return {
            "mode": self.mode,
            "terminal": self.terminal,
            "steps": [
                {"label": s.label, "eta": s.eta, "inf_prev": s.inf_prev,
                 "slack": s.slack}
                for s in self.steps
            ],
        }


def _section_inf(oracle, x):
    return min(oracle.eta[z] for z in oracle.section(x))


def _terminal(oracle, x):
    return all(z == x for z in oracle.section(x))


def solve(oracle: PreorderOracle, x0, mode="greedy"):
    """Return ``(terminal_label, EngineTrace)``.

    Raises HypothesisError when the start section is empty, when its
    potential infimum is not finite, or when the iteration fails to settle
    within |X|+1 outer steps (a strict-decrease violation; the repeated
    cycle is attached as the witness).
    """
    if mode not in MODES:
        raise InputError(f"unknown mode {mode!r}")
    if x0 not in oracle._order:
        raise InputError(f"unknown start label {x0!r}")
    start_section = oracle.section(x0)
    if not start_section:
        raise HypothesisError("nonempty_start",
                              f"the lower section of {x0!r} is empty")
    inf0 = _section_inf(oracle, x0)
    if not math.isfinite(inf0):
        raise HypothesisError(
            "bounded",
            f"potential infimum over the start section is {inf0}")

    steps = [EngineStep(x0, oracle.eta[x0], math.inf, math.inf)]
    current = x0
    visited = [x0]
    cap = len(oracle.labels) + 1
    for n in range(1, cap + 1):
        if _terminal(oracle, current):
            return current, EngineTrace(mode, tuple(steps), current)
        section = oracle.section(current)
        inf_here = min(oracle.eta[z] for z in section)
        if mode == "greedy":
            slack = 0.0
            best = min(oracle.eta[z] for z in section)
            candidates = [z for z in section if oracle.eta[z] <= best]
            nxt = min(candidates, key=oracle.rank)
        else:
            slack = 2.0 ** (-n)
            candidates = [z for z in section
                          if oracle.eta[z] < inf_here + slack]
            others = [z for z in candidates if z != current]
            pool = others if others else candidates
            nxt = min(pool, key=oracle.rank)
        steps.append(EngineStep(nxt, oracle.eta[nxt], inf_here, slack))
        visited.append(nxt)
        current = nxt
    # out of budget: extract the repeated segment as the offending cycle
    seen = {}
    cycle = visited
    for i, lab in enumerate(visited):
        if lab in seen:
            cycle = visited[seen[lab]:i + 1]
            break
        seen[lab] = i
    raise HypothesisError(
        "strict_decrease",
        f"no terminal point within {cap} steps",
        witness={"cycle": cycle})


def brute_force_minimals(oracle: PreorderOracle, x0):
    """All members of S(x0) whose own section is contained in themselves,
    by full enumeration. Independent of the iterative construction."""
    return {x for x in oracle.section(x0) if _terminal(oracle, x)}


def verify_conclusions(oracle: PreorderOracle, x0, xhat):
    """Re-derive both conclusions from the raw successor function."""
    in_start_section = xhat in set(oracle.section(x0))
    section_trivial = _terminal(oracle, xhat)
    return {
        "in_start_section": in_start_section,
        "section_trivial": section_trivial,
        "ok": in_start_section and section_trivial,
    }


def audit_trace(oracle: PreorderOracle, trace: EngineTrace, tol=0.0):
    """Post-hoc check that every recorded step obeys the selection rule's
    inequality and that the potential never increased along the run."""
    steps = trace.steps
    for prev, step in zip(steps, steps[1:]):
        section = oracle.section(prev.label)
        if step.label not in set(section):
            return False
        inf_here = min(oracle.eta[z] for z in section)
        if trace.mode == "faithful":
            if not step.eta < inf_here + step.slack:
                return False
        else:
            if step.eta > inf_here + tol:
                return False
        if step.eta > prev.eta + tol:
            return False
    return True
