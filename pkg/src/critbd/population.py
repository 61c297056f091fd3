"""Fitness-ranked type bookkeeping and the max-type persistence estimate.

Each alive type carries a fitness drawn Uniform(0,1) at birth (only ranks
matter, so any continuous law is equivalent) and a unique integer id.
Deaths always remove the minimum-fitness type, and variant A forbids death
when a single type is alive, so the maximal type can only be displaced by
a fitter newborn, never killed.

Two engines estimate P(maximal type at alpha*t and at t is the same type):

* `full` keeps the whole population in a min-heap (the audit oracle);
* `reduced` tracks only (count, max fitness, max id), which is exact
  because the running maximum never dies.

Both engines consume random draws in the same order (holding time,
direction, fitness-on-birth), so shared streams give identical paths.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .streams import replicate_rng

__all__ = [
    "TypePopulation",
    "ReducedPopulation",
    "PersistenceEstimate",
    "ForbiddenDeathError",
    "birth_event",
    "death_event",
    "estimate_persistence",
    "persistence_outcomes",
]


class ForbiddenDeathError(ValueError):
    """Death requested while a single type is alive (variant A forbids it)."""


@dataclass
class TypePopulation:
    """Alive types as (fitness, id) pairs in a min-heap, plus an id counter."""

    heap: list[tuple[float, int]] = field(default_factory=list)
    next_id: int = 0
    _fitness_seen: set[float] = field(default_factory=set)

    @property
    def size(self) -> int:
        return len(self.heap)

    def min_type(self) -> tuple[float, int]:
        return self.heap[0]

    def max_type(self) -> tuple[float, int]:
        return max(self.heap)


@dataclass
class ReducedPopulation:
    """Count plus the running maximum; distributionally equivalent to
    (size, max element) of TypePopulation under these dynamics."""

    count: int = 0
    max_fitness: float = -1.0
    max_id: int = -1
    next_id: int = 0


def birth_event(pop: TypePopulation, rng: np.random.Generator) -> TypePopulation:
    """Insert one newborn with fresh Uniform(0,1) fitness and a fresh id."""
    f = rng.random()
    while f in pop._fitness_seen:  # distinct-fitness invariant; prob-0 resample
        f = rng.random()
    pop._fitness_seen.add(f)
    heapq.heappush(pop.heap, (f, pop.next_id))
    pop.next_id += 1
    return pop


def death_event(pop: TypePopulation) -> TypePopulation:
    """Remove exactly the minimum-fitness type; the maximum is untouched."""
    if pop.size <= 1:
        raise ForbiddenDeathError("a lone type cannot die")
    f, _ = heapq.heappop(pop.heap)
    pop._fitness_seen.discard(f)
    return pop


def reduced_birth(pop: ReducedPopulation, rng: np.random.Generator) -> ReducedPopulation:
    f = rng.random()
    pop.count += 1
    if f > pop.max_fitness:
        pop.max_fitness = f
        pop.max_id = pop.next_id
    pop.next_id += 1
    return pop


def reduced_death(pop: ReducedPopulation) -> ReducedPopulation:
    if pop.count <= 1:
        raise ForbiddenDeathError("a lone type cannot die")
    pop.count -= 1
    return pop


@dataclass(frozen=True)
class PersistenceEstimate:
    lam: float
    alpha: float
    t: float
    replicates: int
    completed: int
    same_count: int
    estimate: float
    stderr: float


@njit(cache=True)
def _persistence_reduced_kernel(rng, lam, alpha, horizon, event_cap):
    """One replicate; returns (same, completed, events).

    Starts from a single type.  The max-type id is read cadlag at
    alpha*horizon (state after the last event at or before it) and at the
    horizon.  Draw order per event: holding, direction, fitness-on-birth.
    """
    t = 0.0
    n = 1
    next_id = 1
    max_id = 0
    max_fit = rng.random()  # fitness of the initial type (id 0)
    t_alpha = alpha * horizon
    max_id_alpha = max_id if t_alpha <= 0.0 else -1
    events = 0
    while True:
        birth = lam * n
        death = float(n) if n >= 2 else 0.0
        total = birth + death
        dt = rng.exponential(1.0 / total)
        t_next = t + dt
        if max_id_alpha < 0 and t_next > t_alpha:
            max_id_alpha = max_id
        if t_next > horizon:
            return (max_id_alpha == max_id), True, events
        t = t_next
        events += 1
        if events > event_cap:
            return False, False, events
        if rng.random() * total < birth:
            f = rng.random()
            n += 1
            if f > max_fit:
                max_fit = f
                max_id = next_id
            next_id += 1
        else:
            n -= 1


def _persistence_full_replicate(rng, lam, alpha, horizon, event_cap):
    """Full-population replicate with the same draw order as the kernel."""
    pop = TypePopulation()
    birth_event(pop, rng)
    t = 0.0
    t_alpha = alpha * horizon
    max_id_alpha = pop.max_type()[1] if t_alpha <= 0.0 else -1
    events = 0
    trajectory_max_ids = [pop.max_type()[1]]
    while True:
        n = pop.size
        birth = lam * n
        death = float(n) if n >= 2 else 0.0
        total = birth + death
        dt = rng.exponential(1.0 / total)
        t_next = t + dt
        if max_id_alpha < 0 and t_next > t_alpha:
            max_id_alpha = pop.max_type()[1]
        if t_next > horizon:
            return (max_id_alpha == pop.max_type()[1]), True, events, trajectory_max_ids
        t = t_next
        events += 1
        if events > event_cap:
            return False, False, events, trajectory_max_ids
        if rng.random() * total < birth:
            birth_event(pop, rng)
        else:
            death_event(pop)
        trajectory_max_ids.append(pop.max_type()[1])


def persistence_outcomes(
    lam: float,
    alpha: float,
    t: float,
    replicates: int,
    seed: int,
    indices: range | None = None,
    event_cap: int = 10**7,
    engine: str = "reduced",
) -> np.ndarray:
    """Per-replicate rows (same, completed, events) as an int64 array."""
    if engine not in ("reduced", "full"):
        raise ValueError(f"engine must be 'reduced' or 'full', got {engine!r}")
    if indices is None:
        indices = range(replicates)
    out = np.empty((len(indices), 3), dtype=np.int64)
    for row, idx in enumerate(indices):
        rng = replicate_rng(seed, idx)
        if engine == "reduced":
            same, completed, events = _persistence_reduced_kernel(
                rng, lam, alpha, t, event_cap
            )
        else:
            same, completed, events, _ = _persistence_full_replicate(
                rng, lam, alpha, t, event_cap
            )
        out[row] = (int(same), int(completed), events)
    return out


def estimate_persistence(
    lam: float,
    alpha: float,
    t: float,
    replicates: int,
    seed: int,
    event_cap: int = 10**7,
    engine: str = "reduced",
) -> PersistenceEstimate:
    """Monte Carlo estimate of P(maximal type at alpha*t and t coincide).

    Aborted replicates (event cap exceeded, relevant for lam > 1) are
    excluded from the denominator; the completion count is reported.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    rows = persistence_outcomes(lam, alpha, t, replicates, seed, None, event_cap, engine)
    completed = int(rows[:, 1].sum())
    same = int((rows[:, 0] & rows[:, 1]).sum())
    if completed == 0:
        raise RuntimeError("no replicate completed within the event cap")
    est = same / completed
    return PersistenceEstimate(
        lam=lam,
        alpha=alpha,
        t=t,
        replicates=replicates,
        completed=completed,
        same_count=same,
        estimate=est,
        stderr=float(np.sqrt(est * (1.0 - est) / completed)),
    )
