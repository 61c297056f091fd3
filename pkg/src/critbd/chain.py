"""Continuous-time Markov chain for the number of alive viral types.

Two variants of the birth-death chain with per-capita birth rate `lam` and
unit per-capita death rate:

* variant A: state space {1, 2, ...}; a lone type cannot die, so the death
  rate at state 1 is 0.
* variant B: classical chain on {0, 1, ...} with 0 absorbing.

The module samples first-passage (hitting) times exactly, both by
event-by-event simulation with competing exponential clocks and, for the
down-excursion 2 -> 1 of variant A, by an equivalent-in-law level
decomposition that is orders of magnitude faster on heavy-tailed
excursions.  On top of that it samples the total time of n return cycles
to state 1 (one exponential sojourn at 1 plus one excursion per cycle).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .streams import replicate_rng

__all__ = [
    "ModelSpec",
    "HittingSample",
    "TnSample",
    "rates",
    "simulate_hitting",
    "simulate_path",
    "sample_hitting_batch",
    "fast_hitting_excursion",
    "sample_tn",
    "sample_tn_batch",
    "DEFAULT_TIME_CAP",
    "DEFAULT_EVENT_CAP",
]

DEFAULT_TIME_CAP = 1e6
DEFAULT_EVENT_CAP = 10**7


@dataclass(frozen=True)
class ModelSpec:
    """Chain variant and birth-rate multiplier."""

    variant: str = "A"
    lam: float = 1.0

    def __post_init__(self):
        if self.variant not in ("A", "B"):
            raise ValueError(f"variant must be 'A' or 'B', got {self.variant!r}")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")


@dataclass(frozen=True)
class HittingSample:
    """One simulated first-passage time.

    `censored` means a cap fired before the target state was reached: for a
    time cap, `time` equals the cap; for an event cap, `events` equals the
    cap and `time` is the time of the last executed jump.
    """

    time: float
    censored: bool
    events: int


@dataclass(frozen=True)
class TnSample:
    """Total time of n completed return cycles to state 1 (variant A).

    total_time = sojourn_time + excursion_time, where sojourn_time sums the
    n exponential holding times at state 1 and excursion_time sums the n
    hitting times from 2 back to 1.
    """

    n: int
    total_time: float
    sojourn_time: float
    excursion_time: float
    events: int
    censored: bool


def rates(n: int, model: ModelSpec) -> tuple[float, float]:
    """Birth and death rates at state n.

    Variant A: birth lam*n and death n, except death 0 at n = 1 (a lone
    type cannot die).  Variant B: birth lam*n, death n, both 0 at the
    absorbing state 0.
    """
    if model.variant == "A":
        if n < 1:
            raise ValueError(f"variant A state space is {{1, 2, ...}}, got n={n}")
        return model.lam * n, float(n) if n >= 2 else 0.0
    if n < 0:
        raise ValueError(f"variant B state space is {{0, 1, ...}}, got n={n}")
    return model.lam * n, float(n)


def _check_hitting_args(model: ModelSpec, start: int, target: int) -> None:
    if start == target:
        raise ValueError(f"start and target must differ, got {start}")
    if model.variant == "A":
        if target != 1:
            raise ValueError("variant A only hits downward to state 1")
        if start < 2:
            raise ValueError(f"variant A start must be >= 2, got {start}")
    else:
        if target not in (0, 1):
            raise ValueError("variant B hitting targets are 0 or 1")
        if start <= target:
            raise ValueError(
                f"target {target} is not reachable from start {start} (0 is absorbing)"
            )


@njit(cache=True)
def _gillespie_hit(rng, lam, start, target, variant_b, time_cap, event_cap):
    """Event-by-event first passage; returns (time, events, censored)."""
    t = 0.0
    n = start
    events = 0
    while True:
        birth = lam * n
        death = float(n) if (variant_b or n >= 2) else 0.0
        total = birth + death
        dt = rng.exponential(1.0 / total)
        if t + dt > time_cap:
            return time_cap, events, True
        t += dt
        if rng.random() * total < birth:
            n += 1
        else:
            n -= 1
        events += 1
        if n == target:
            return t, events, False
        if events >= event_cap:
            return t, events, True


def simulate_hitting(
    model: ModelSpec,
    start: int,
    target: int,
    rng: np.random.Generator,
    time_cap: float = DEFAULT_TIME_CAP,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> HittingSample:
    """First-passage time from `start` to `target` by competing exponential
    clocks: hold Exp(birth+death), jump up with probability birth/(birth+death).
    """
    _check_hitting_args(model, start, target)
    t, events, censored = _gillespie_hit(
        rng, model.lam, start, target, model.variant == "B", time_cap, event_cap
    )
    return HittingSample(time=t, censored=censored, events=events)


def simulate_path(
    model: ModelSpec,
    start: int,
    rng: np.random.Generator,
    t_max: float,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> tuple[np.ndarray, np.ndarray]:
    """Jump times and post-jump states on [0, t_max] (testing/audit path).

    The returned arrays start with (0, start).  Simulation stops at the
    first jump beyond t_max, at an absorbing state, or at event_cap.
    """
    times = [0.0]
    states = [start]
    t, n = 0.0, start
    for _ in range(event_cap):
        birth, death = rates(n, model)
        total = birth + death
        if total == 0.0:  # absorbing (variant B state 0)
            break
        dt = rng.exponential(1.0 / total)
        if t + dt > t_max:
            break
        t += dt
        n = n + 1 if rng.random() * total < birth else n - 1
        times.append(t)
        states.append(n)
    return np.asarray(times), np.asarray(states, dtype=np.int64)


def sample_hitting_batch(
    model: ModelSpec,
    start: int,
    target: int,
    seed: int,
    indices: range,
    time_cap: float = DEFAULT_TIME_CAP,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> np.ndarray:
    """Hitting samples for the given replicate indices, one independent
    stream per replicate.  Returns a (len, 3) array of (time, censored, events).
    """
    _check_hitting_args(model, start, target)
    out = np.empty((len(indices), 3))
    variant_b = model.variant == "B"
    for row, idx in enumerate(indices):
        rng = replicate_rng(seed, idx)
        t, ev, cen = _gillespie_hit(
            rng, model.lam, start, target, variant_b, time_cap, event_cap
        )
        out[row, 0] = t
        out[row, 1] = 1.0 if cen else 0.0
        out[row, 2] = ev
    return out


@njit(cache=True)
def _fast_excursion(rng, lam, time_cap, event_cap):
    """Exact-in-law sample of the variant A excursion 2 -> 1.

    The jump chain's upcrossing counts per level form a branching
    recursion: the number of upcrossings of edge (k+1, k+2) given u
    upcrossings of (k, k+1) is NegBin(u, 1/(1+lam)), drawn here as
    Poisson(Gamma(u, lam)).  Given the visit counts the holding times at
    level k are a Gamma(visits, rate (1+lam)k) sum.  Time and event totals
    match the event-by-event simulation in distribution; the cost is
    O(max level) instead of O(events).
    """
    total_time = 0.0
    events = 0
    u = rng.poisson(rng.gamma(1.0, lam))  # upcrossings of edge (2, 3)
    v = 1 + u  # visits to state 2
    total_time += rng.gamma(v, 1.0 / ((1.0 + lam) * 2.0))
    events += v
    k = 2
    while u > 0:
        k += 1
        u_next = rng.poisson(rng.gamma(u, lam))
        v = u + u_next  # arrivals from below + from above
        total_time += rng.gamma(v, 1.0 / ((1.0 + lam) * k))
        events += v
        u = u_next
        if events >= event_cap:
            return total_time, events, True
    if total_time > time_cap:
        return time_cap, events, True
    return total_time, events, False


def fast_hitting_excursion(
    lam: float,
    rng: np.random.Generator,
    time_cap: float = DEFAULT_TIME_CAP,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> HittingSample:
    """Variant A hitting time 2 -> 1 via the level decomposition.

    Identical in law to simulate_hitting(A, 2, 1, ...); requires lam <= 1
    (for lam > 1 the excursion may never return and the level recursion
    would not terminate).
    """
    if lam > 1.0:
        raise ValueError("fast excursion sampling requires lam <= 1")
    t, events, censored = _fast_excursion(rng, lam, time_cap, event_cap)
    return HittingSample(time=t, censored=censored, events=events)


@njit(cache=True)
def _tn_kernel(rng, lam, n, time_cap, event_cap):
    x_part = 0.0
    h_part = 0.0
    events = 0
    censored = False
    for _ in range(n):
        x_part += rng.exponential(1.0 / lam)  # sojourn at 1: only birth, rate lam
        events += 1
        ht, ev, cen = _fast_excursion(rng, lam, time_cap, event_cap - events)
        h_part += ht
        events += ev
        if cen:
            censored = True
            break
    return x_part, h_part, events, censored


def sample_tn(
    model: ModelSpec,
    n: int,
    rng: np.random.Generator,
    time_cap: float = 1e18,
    event_cap: int = 10**18,
) -> TnSample:
    """Total time of n return cycles to state 1 under variant A.

    Each cycle is an Exp(lam) sojourn at 1 followed by an excursion from 2
    back to 1; excursions use the exact level decomposition, so the default
    caps are effectively off (event counts are tallied, not simulated).
    A censored excursion flags the whole sample.
    """
    if model.variant != "A":
        raise ValueError("return cycles to state 1 are defined for variant A")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    x_part, h_part, events, censored = _tn_kernel(rng, model.lam, n, time_cap, event_cap)
    return TnSample(
        n=n,
        total_time=x_part + h_part,
        sojourn_time=x_part,
        excursion_time=h_part,
        events=events,
        censored=censored,
    )


def sample_tn_batch(
    model: ModelSpec,
    n: int,
    seed: int,
    indices: range,
    time_cap: float = 1e18,
    event_cap: int = 10**18,
) -> np.ndarray:
    """Rows (total_time, censored, events) for the given replicate indices."""
    out = np.empty((len(indices), 3))
    for row, idx in enumerate(indices):
        s = sample_tn(model, n, replicate_rng(seed, idx), time_cap, event_cap)
        out[row, 0] = s.total_time
        out[row, 1] = 1.0 if s.censored else 0.0
        out[row, 2] = s.events
    return out
