"""Exact classical reference solver for the population master equation.

Evolves the full probability table over occupation vectors with the
explicit first-order update: each state loses ``r_h * P`` to the
post-collision state of every feasible transition ``h``.  Written as
probability flows, conservation holds to rounding error by construction.
A Gillespie sampler provides an independent continuous-time cross-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .states import (
    MassDistribution,
    StateSpaceError,
    TransitionTable,
    apply_transition,
    transition_rate,
)

PROB_TOL = 1e-12


class StepSizeError(StateSpaceError):
    """The explicit update would move more probability than a state holds."""


@dataclass(frozen=True)
class ProbabilityTable:
    """One time slice of the state distribution.

    ``entries`` maps occupation vectors to probabilities; ``step`` counts
    applied updates (time is ``step * dt``).  Entries are kept even when
    tiny so that conservation checks stay exact.
    """

    entries: Mapping[MassDistribution, float]
    step: int = 0

    def total(self):
        return sum(self.entries.values())

    def validate(self, tol: float = PROB_TOL) -> None:
        for state, prob in self.entries.items():
            if prob < -tol or prob > 1 + tol:
                raise StateSpaceError(f"probability {prob} of {state.counts} outside [0,1]")
        drift = abs(self.total() - 1)
        if drift > tol:
            raise StateSpaceError(f"total probability off by {drift}")

    def states(self) -> list[MassDistribution]:
        return sorted(self.entries, key=lambda s: s.counts)

    @classmethod
    def point_mass(cls, state: MassDistribution) -> "ProbabilityTable":
        return cls({state: 1.0}, step=0)


@dataclass(frozen=True)
class SsaConfig:
    """Gillespie run configuration; ``seed`` fixes every trajectory."""

    n_runs: int
    seed: int
    t_end: float

    def __post_init__(self) -> None:
        if self.n_runs < 1:
            raise StateSpaceError(f"need n_runs >= 1, got {self.n_runs}")
        if not self.t_end >= 0:
            raise StateSpaceError(f"need t_end >= 0, got {self.t_end}")


def _check_step_size(table: TransitionTable, states: Iterable[MassDistribution]) -> None:
    worst_state, worst = None, 0.0
    for state in states:
        total = sum(
            transition_rate(table, state, h) for h in range(1, table.num_labels + 1)
        )
        if total > worst:
            worst_state, worst = state, total
    if worst > 1:
        raise StepSizeError(
            f"sum of transition probabilities {worst} > 1 for state "
            f"{worst_state.counts}; reduce dt"
        )


def euler_step(p: ProbabilityTable, table: TransitionTable) -> ProbabilityTable:
    """One explicit update of the discretized master equation.

    Probability is moved flow-by-flow, which is algebraically identical to
    the gain/loss form of the update and conserves the total exactly up to
    rounding.  Raises :class:`StepSizeError` when any populated state has
    ``sum_h r_h > 1``.
    """
    support = sorted(p.entries, key=lambda s: s.counts)
    _check_step_size(table, (s for s in support if p.entries[s] != 0))
    new = {state: prob for state, prob in p.entries.items()}
    for state in support:
        prob = p.entries[state]
        if prob == 0:
            continue
        for label in range(1, table.num_labels + 1):
            rate = transition_rate(table, state, label)
            if rate == 0:
                continue
            flow = prob * rate
            target = apply_transition(table, state, label)
            new[state] -= flow
            new[target] = new.get(target, 0 * flow) + flow
    return ProbabilityTable(new, step=p.step + 1)


def evolve(p0: ProbabilityTable, table: TransitionTable, steps: int) -> ProbabilityTable:
    """``steps``-fold composition of :func:`euler_step`."""
    if steps < 0:
        raise StateSpaceError(f"need steps >= 0, got {steps}")
    p = p0
    for _ in range(steps):
        p = euler_step(p, table)
    return p


def evolve_series(
    p0: ProbabilityTable, table: TransitionTable, steps: int
) -> list[ProbabilityTable]:
    """All intermediate tables from step 0 to ``steps`` inclusive."""
    series = [p0]
    for _ in range(steps):
        series.append(euler_step(series[-1], table))
    return series


def marginal(p: ProbabilityTable, bin_index: int, value: int):
    """Probability that bin ``bin_index`` holds exactly ``value`` droplets."""
    total = 0.0
    for state, prob in p.entries.items():
        if not 1 <= bin_index <= state.num_bins:
            raise StateSpaceError(f"bin {bin_index} outside [1, {state.num_bins}]")
        if state.counts[bin_index - 1] == value:
            total += prob
    return total


def expected_count(p: ProbabilityTable, bin_index: int):
    """Expected droplet count of bin ``bin_index``."""
    total = 0.0
    for state, prob in p.entries.items():
        if not 1 <= bin_index <= state.num_bins:
            raise StateSpaceError(f"bin {bin_index} outside [1, {state.num_bins}]")
        total += state.counts[bin_index - 1] * prob
    return total


def mass_expectation(p: ProbabilityTable):
    """``sum_i i * <n_i>``; conserved by every update."""
    return sum(state.mass() * prob for state, prob in p.entries.items())


def _propensities(table: TransitionTable, counts: list[int]) -> np.ndarray:
    """Continuous-time rates ``r_h / dt`` for the current counts."""
    values = np.empty(table.num_labels)
    for idx, (i, j) in enumerate(table.pairs):
        kernel = table.kernel_values[idx]
        if i == j:
            n = counts[i - 1]
            values[idx] = kernel * n * (n - 1) / 2 if n >= 2 else 0.0
        else:
            values[idx] = kernel * counts[i - 1] * counts[j - 1]
    return values


def ssa_trajectory(
    table: TransitionTable,
    t_end: float,
    rng: np.random.Generator,
    initial: MassDistribution | None = None,
) -> MassDistribution:
    """One exact Gillespie trajectory, returning the state at ``t_end``."""
    state = initial or MassDistribution.monodisperse(table.num_bins)
    counts = list(state.counts)
    t = 0.0
    while True:
        props = _propensities(table, counts)
        total = props.sum()
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t > t_end:
            break
        label = int(np.searchsorted(np.cumsum(props) / total, rng.uniform()))
        i, j = table.pairs[label]
        if i == j:
            counts[i - 1] -= 2
        else:
            counts[i - 1] -= 1
            counts[j - 1] -= 1
        counts[i + j - 1] += 1
    return MassDistribution(tuple(counts))


def ssa_population_estimate(
    table: TransitionTable,
    cfg: SsaConfig,
    initial: MassDistribution | None = None,
) -> list[tuple[float, float]]:
    """Per-bin (mean, standard error) at ``t_end`` from one trajectory set.

    Trajectories are seeded from ``(cfg.seed, run_index)`` spawn keys, so
    results are reproducible and independent of execution order.
    """
    if cfg.n_runs < 2:
        raise StateSpaceError("standard error needs n_runs >= 2")
    samples = np.empty((cfg.n_runs, table.num_bins))
    for run in range(cfg.n_runs):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(run,)))
        )
        final = ssa_trajectory(table, cfg.t_end, rng, initial)
        samples[run] = final.counts
    means = samples.mean(axis=0)
    stderrs = samples.std(axis=0, ddof=1) / math.sqrt(cfg.n_runs)
    return [(float(m), float(s)) for m, s in zip(means, stderrs)]


def ssa_estimate(
    table: TransitionTable,
    cfg: SsaConfig,
    bin_index: int,
    initial: MassDistribution | None = None,
) -> tuple[float, float]:
    """Mean droplet count of ``bin_index`` at ``t_end`` with standard error."""
    return ssa_population_estimate(table, cfg, initial)[bin_index - 1]


def write_expected_series(
    series: Sequence[ProbabilityTable], path: str
) -> None:
    """CSV export with columns (step, bin, expected_count)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", "bin", "expected_count"])
        for table in series:
            n_bins = next(iter(table.entries)).num_bins
            for bin_index in range(1, n_bins + 1):
                writer.writerow(
                    [table.step, bin_index, repr(expected_count(table, bin_index))]
                )


def state_id(state: MassDistribution) -> str:
    """Stable textual key for CSV output, e.g. ``2|0|1``."""
    return "|".join(str(c) for c in state.counts)


def write_probability_series(
    series: Sequence[ProbabilityTable], path: str
) -> None:
    """CSV export with columns (step, state_id, probability)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", "state_id", "probability"])
        for table in series:
            for state in table.states():
                writer.writerow([table.step, state_id(state), repr(table.entries[state])])
