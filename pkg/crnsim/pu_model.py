"""Primary-user traffic and sleep-slot estimation.

Two-state Markov PU activity, the per-CR history window with ACK-based
correction, and the busy-run statistics that decide how long to sleep.
"""
import logging
import math
from itertools import groupby
from typing import Dict, List, Optional

import numpy as np
from typing_extensions import TypedDict


IDLE = 0
BUSY = 1

DEFAULT_WINDOW = 50


class PuChain(TypedDict):
    """Row-stochastic transition probabilities plus the current state."""
    p_ii: float
    p_ib: float
    p_bi: float
    p_bb: float
    state: int


class PuHistory(TypedDict):
    bits: List[int]  # oldest first; 1 = busy
    capacity: int


class RunStats(TypedDict):
    np: int
    n1: int
    n_min: Optional[int]  # None when no run of length >= 2 exists
    n_max: Optional[int]
    g: Dict[int, int]
    singles: int


# --- Markov Chain ---

def make_chain(p_ib: float, p_bi: float, state: int = IDLE) -> PuChain:
    if not (0.0 <= p_ib <= 1.0 and 0.0 <= p_bi <= 1.0):
        raise ValueError(f"Transition probabilities must be in [0,1], got p_ib={p_ib}, p_bi={p_bi}")
    if state not in (IDLE, BUSY):
        raise ValueError(f"PU state must be 0 or 1, got {state}")
    chain = PuChain(p_ii=1.0 - p_ib, p_ib=p_ib, p_bi=p_bi, p_bb=1.0 - p_bi, state=state)
    if not (chain['p_ii'] > chain['p_ib'] and chain['p_bb'] > chain['p_bi']):
        logging.warning(
            f"PU chain is not positively correlated (p_ib={p_ib}, p_bi={p_bi}); "
            f"sleep estimates will be unreliable"
        )
    return chain


def stationary_idle(chain: PuChain) -> float:
    """Long-run probability of the idle state, P_0 = p_bi / (p_ib + p_bi)."""
    total = chain['p_ib'] + chain['p_bi']
    if total == 0:
        return 1.0 if chain['state'] == IDLE else 0.0
    return chain['p_bi'] / total


def initial_state(p0: float, rng: np.random.Generator) -> int:
    """Idle with probability p0."""
    return IDLE if rng.random() < p0 else BUSY


def pu_step(chain: PuChain, rng: np.random.Generator) -> int:
    """One Markov transition; returns the new state (the chain is not mutated)."""
    u = rng.random()
    if chain['state'] == IDLE:
        return BUSY if u < chain['p_ib'] else IDLE
    return IDLE if u < chain['p_bi'] else BUSY


def simulate_chain(chain: PuChain, steps: int, rng: np.random.Generator) -> np.ndarray:
    """State trace of length `steps`, starting after the chain's current state."""
    trace = np.empty(steps, dtype=np.int8)
    current = dict(chain)
    for k in range(steps):
        current['state'] = pu_step(current, rng)
        trace[k] = current['state']
    return trace


# --- History Window ---

def empty_history(capacity: int = DEFAULT_WINDOW) -> PuHistory:
    if capacity < 1:
        raise ValueError(f"History capacity must be >= 1, got {capacity}")
    return PuHistory(bits=[], capacity=capacity)


def history_from_string(text: str, capacity: Optional[int] = None) -> PuHistory:
    """Parse a 0/1 string like '101101110'; the last character is the newest slot."""
    text = text.strip()
    if any(ch not in "01" for ch in text):
        raise ValueError(f"History string may only contain 0 and 1, got {text!r}")
    capacity = capacity if capacity is not None else max(len(text), 1)
    bits = [int(ch) for ch in text][-capacity:]
    return PuHistory(bits=bits, capacity=capacity)


def history_to_string(history: PuHistory) -> str:
    return "".join(str(b) for b in history['bits'])


def append_bit(history: PuHistory, bit: int) -> PuHistory:
    bits = (history['bits'] + [bit])[-history['capacity']:]
    return {**history, 'bits': bits}


def record_slot(history: PuHistory, decision: int, ack_observed: Optional[bool] = None) -> PuHistory:
    """Append this slot's bit, corrected by ACK evidence when the CR transmitted.

    decision 0: the CR used the channel, so a missing ACK means the PU was there.
    decision 1: the CR stayed silent, the decision is recorded as-is.
    """
    if decision not in (IDLE, BUSY):
        raise ValueError(f"decision must be 0 or 1, got {decision}")
    if decision == IDLE:
        bit = IDLE if ack_observed else BUSY
    else:
        bit = BUSY
    return append_bit(history, bit)


# --- Run Statistics ---

def busy_runs(bits: List[int]) -> List[int]:
    """Lengths of maximal runs of 1s, oldest first."""
    return [len(list(group)) for value, group in groupby(bits) if value == BUSY]


def run_stats(history: PuHistory) -> RunStats:
    runs = busy_runs(history['bits'])
    long_runs = [r for r in runs if r >= 2]
    singles = len(runs) - len(long_runs)

    if not long_runs:
        return RunStats(np=len(runs), n1=sum(runs), n_min=None, n_max=None, g={}, singles=singles)

    n_min, n_max = min(long_runs), max(long_runs)
    g = {i: 0 for i in range(n_min, n_max + 1)}
    for r in long_runs:
        g[r] += 1
    return RunStats(np=len(runs), n1=sum(runs), n_min=n_min, n_max=n_max, g=g, singles=singles)


def _check_run_index(stats: RunStats, i: int) -> None:
    if stats['n_min'] is None or not stats['n_min'] <= i <= stats['n_max']:
        raise ValueError(f"Run length {i} outside [{stats['n_min']}, {stats['n_max']}]")


def g_cumulative(stats: RunStats, i: int) -> int:
    """Non-overlapping occurrences of i consecutive busy slots, longer runs included."""
    _check_run_index(stats, i)
    return stats['g'][i] + sum(
        stats['g'][j] * (j // i) for j in range(i + 1, stats['n_max'] + 1)
    )


def pr_nz(stats: RunStats) -> float:
    """Probability of a PU appearance per busy bit: NP / N_1."""
    if stats['n1'] == 0:
        raise ValueError("pr_nz is undefined for a history without busy slots")
    return stats['np'] / stats['n1']


def pr_gis(stats: RunStats, i: int) -> float:
    """Probability that the PU stays busy for i consecutive slots."""
    _check_run_index(stats, i)
    if stats['n1'] == 0:
        raise ValueError("pr_gis is undefined for a history without busy slots")
    return g_cumulative(stats, i) * i / stats['n1']


def estimate_sleep_slots(history: PuHistory) -> int:
    """Smallest run length whose probability beats Pr(NZ); 0 when none does."""
    if len(history['bits']) < 2:
        return 0
    stats = run_stats(history)
    if stats['n_min'] is None or stats['n1'] == 0:
        return 0
    threshold = pr_nz(stats)
    for i in range(stats['n_min'], stats['n_max'] + 1):
        if pr_gis(stats, i) > threshold:
            return i
    return 0


def sleep_duration(n_s: int, t_slot: float, t_set: float, tau_s: float, t_r: float) -> float:
    """n_s whole slots plus what is left of the current slot after setup, sensing and reporting."""
    if n_s < 0:
        raise ValueError(f"n_s must be non-negative, got {n_s}")
    t_rem = t_slot - t_set - tau_s - t_r
    # Allow float noise when the stages fill the slot exactly
    if t_rem < -1e-12 * max(t_slot, 1.0):
        raise ValueError(
            f"Slot stages ({t_set} + {tau_s} + {t_r} s) exceed the slot time {t_slot} s"
        )
    return n_s * t_slot + max(t_rem, 0.0)


def expected_busy_run(chain: PuChain) -> float:
    """Mean busy-run length of the chain, 1 / p_bi."""
    if chain['p_bi'] == 0:
        return math.inf
    return 1.0 / chain['p_bi']
