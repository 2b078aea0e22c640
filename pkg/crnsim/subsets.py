"""Subset formation, active-subset choice and sensing-node selection.

A cluster is cut into K disjoint subsets of about S nodes with little
coverage overlap. One subset is active per round, and within it a greedy pass
picks the fewest high-SNR nodes that reach the global detection target.
"""
import logging
from typing import List, Optional, Union

from typing_extensions import TypedDict

from .sensing_math import (
    SubsetSize, Probability, num_subsets, or_fuse, sensing_time, achieved_detection_prob,
)
from .topology import SensorNode, distance


class Subset(TypedDict):
    members: List[int]
    total_energy: float


class SensingSelection(TypedDict):
    """Nodes that sense this round, in TDMA (descending SNR) order."""
    selected: List[int]
    taus: List[float]
    pds: List[Probability]
    achieved_qd: Probability
    e_s: float
    infeasible: bool


def pd_node_target(mode: str, pd_min: Probability) -> Probability:
    if mode == "pd_min":
        return pd_min
    if mode == "fixed_half":
        return 0.5
    raise ValueError(f"Unknown pd_node_mode: {mode}")


# --- Subset Formation ---

def _capacity(s: Union[int, SubsetSize]) -> int:
    return int(s['s']) if isinstance(s, dict) else int(s)


def form_subsets(cluster_nodes: List[SensorNode], r_s: float, s: Union[int, SubsetSize]) -> List[Subset]:
    """Partition a cluster into K subsets with chain-like minimal overlap.

    Each subset starts from the richest unassigned node, then repeatedly adds
    the pool node farthest from the last-added node among those whose coverage
    still overlaps it (distance < 2*r_s). Leftovers go to the last subset.
    """
    if not cluster_nodes:
        raise ValueError("form_subsets needs a non-empty cluster")
    capacity = _capacity(s)
    k, _ = num_subsets(len(cluster_nodes), capacity)

    pool = sorted(cluster_nodes, key=lambda n: n['id'])
    subsets: List[Subset] = []
    for _ in range(k):
        if not pool:
            break
        seed = max(pool, key=lambda n: (n['e_rem'], -n['id']))
        pool.remove(seed)
        members = [seed]
        selector = seed
        while len(members) < capacity and pool:
            dists = [(distance(selector['pos'], n['pos']), n) for n in pool]
            overlapping = [(d, n) for d, n in dists if d < 2.0 * r_s]
            if overlapping:
                _, pick = max(overlapping, key=lambda dn: (dn[0], -dn[1]['id']))
            else:
                _, pick = min(dists, key=lambda dn: (dn[0], dn[1]['id']))
            pool.remove(pick)
            members.append(pick)
            selector = pick
        subsets.append(Subset(
            members=[n['id'] for n in members],
            total_energy=sum(n['e_rem'] for n in members),
        ))

    if pool:
        last = subsets[-1]
        last['members'].extend(n['id'] for n in pool)
        last['total_energy'] += sum(n['e_rem'] for n in pool)
    return subsets


def refresh_energies(subsets: List[Subset], nodes: List[SensorNode]) -> List[Subset]:
    return [
        Subset(members=list(sub['members']),
               total_energy=sum(nodes[nid]['e_rem'] for nid in sub['members']))
        for sub in subsets
    ]


def select_active_subset(subsets: List[Subset]) -> int:
    """Index of the subset with the most total energy; lowest index on ties."""
    if not subsets:
        raise ValueError("select_active_subset needs at least one subset")
    best = 0
    for i, sub in enumerate(subsets):
        if sub['total_energy'] > subsets[best]['total_energy']:
            best = i
    return best


def tdma_schedule(members: List[int], nodes: List[SensorNode]) -> List[int]:
    """Reporting order: highest SNR first, lowest id on ties."""
    return sorted(members, key=lambda nid: (-nodes[nid]['snr']['db'], nid))


# --- Sensing Node Selection ---

def select_sensing_nodes(
    members: List[int],
    nodes: List[SensorNode],
    qd_min: Probability,
    pf_target: Probability,
    tau_max: float,
    f_s: float,
    p_sense: float,
    pd_target: Probability,
    max_nodes: Optional[int] = None,
) -> SensingSelection:
    """Greedy minimum-energy selection over the active subset.

    Walks the nodes by descending SNR, skipping any that cannot reach
    pd_target within tau_max, and OR-folds their detection probability until
    the global target is met. `max_nodes` caps the selection at S.
    """
    if not members:
        raise ValueError("select_sensing_nodes needs a non-empty subset")

    selected: List[int] = []
    taus: List[float] = []
    miss = 1.0
    e_s = 0.0
    for nid in tdma_schedule(members, nodes):
        if 1.0 - miss >= qd_min:
            break
        if max_nodes is not None and len(selected) >= max_nodes:
            break
        tau = sensing_time(nodes[nid]['snr'], pf_target, pd_target, f_s)
        if tau > tau_max:
            continue
        selected.append(nid)
        taus.append(tau)
        miss *= 1.0 - pd_target
        e_s += p_sense * tau

    achieved = 1.0 - miss
    infeasible = achieved < qd_min
    if infeasible:
        logging.debug(f"Sensing selection reached Qd={achieved:.4f} < {qd_min} over {len(members)} nodes")
    return SensingSelection(
        selected=selected,
        taus=taus,
        pds=[pd_target] * len(selected),
        achieved_qd=achieved,
        e_s=e_s,
        infeasible=infeasible,
    )


def full_sensing(
    members: List[int],
    nodes: List[SensorNode],
    pf_target: Probability,
    tau_max: float,
    f_s: float,
    p_sense: float,
) -> SensingSelection:
    """Every member senses for the whole tau_max window.

    Used by the subset-free modes and as the fallback when the greedy
    selection cannot meet the target: each node's detection probability is
    what tau_max buys at its SNR, not the per-node target.
    """
    if not members:
        raise ValueError("full_sensing needs at least one node")
    order = tdma_schedule(members, nodes)
    pds = [achieved_detection_prob(nodes[nid]['snr'], pf_target, tau_max, f_s) for nid in order]
    return SensingSelection(
        selected=order,
        taus=[tau_max] * len(order),
        pds=pds,
        achieved_qd=or_fuse(pds),
        e_s=p_sense * tau_max * len(order),
        infeasible=False,
    )


def partition_ok(subsets: List[Subset], registered: List[int]) -> bool:
    """Subsets are disjoint and together cover exactly the registered nodes."""
    flat = [nid for sub in subsets for nid in sub['members']]
    return len(flat) == len(set(flat)) and set(flat) == set(registered)
