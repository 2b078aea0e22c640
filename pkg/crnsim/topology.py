"""Network placement, CR mobility, and cluster formation/updating.

Sensor nodes are fixed infrastructure; CRs move by random waypoint steps and
run the ADV / J_REQ / L_REQ protocol. Every exchanged message is returned so
the energy ledger can charge it.
"""
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from typing_extensions import TypedDict

from .pu_model import PuHistory, empty_history
from .sensing_math import Snr, snr_from_db


# Distances closer than this are treated as equal
TIE_TOLERANCE = 1e-9

BROADCAST = -1

# Message kinds
ADV = "ADV"
J_REQ = "J_REQ"
L_REQ = "L_REQ"
SCHED = "SCHED"

# Node modes
ACTIVE = "active"
SLEEP = "sleep"
UNCLUSTERED = "unclustered"


class Position(TypedDict):
    x: float
    y: float


class SensorNode(TypedDict):
    id: int
    pos: Position
    e_rem: float
    snr: Snr
    cluster: Optional[int]
    subset: Optional[int]
    mode: str
    tau_s: float
    alive: bool


class CognitiveRadio(TypedDict):
    id: int
    pos: Position
    registered: List[int]
    subsets: List[List[int]]
    active_subset: Optional[int]
    history: PuHistory
    tdma: List[int]


class Message(TypedDict):
    """Control message on the common control channel.

    ADV/SCHED go CR -> nodes; receivers lists the nodes that act on it (the
    ones answering an ADV, the new members getting a SCHED). J_REQ/L_REQ go
    node -> CR.
    """
    kind: str
    size: int
    src: int
    dst: int
    receivers: List[int]
    payload: Dict[str, object]


# Result of a formation/update pass: messages plus the CRs whose membership changed
ClusterUpdate = Tuple[List[Message], List[int]]


# --- Geometry ---

def distance(a: Position, b: Position) -> float:
    return math.hypot(a['x'] - b['x'], a['y'] - b['y'])


def clamp_to_area(x: float, y: float, width: float, height: float) -> Position:
    return Position(x=min(max(x, 0.0), width), y=min(max(y, 0.0), height))


# --- Placement ---

def place_network(config: dict, rng: np.random.Generator) -> Tuple[List[SensorNode], List[CognitiveRadio]]:
    """Uniform placement of nodes and CRs; all nodes start unclustered with E_0."""
    n = config['num_nodes']
    width, height = config['area_width'], config['area_height']

    xs = rng.uniform(0.0, width, n)
    ys = rng.uniform(0.0, height, n)
    snr_db = rng.uniform(config['snr_db_min'], config['snr_db_max'], n)
    nodes = [
        SensorNode(
            id=i,
            pos=Position(x=float(xs[i]), y=float(ys[i])),
            e_rem=float(config['e0']),
            snr=snr_from_db(float(snr_db[i])),
            cluster=None,
            subset=None,
            mode=UNCLUSTERED,
            tau_s=0.0,
            alive=True,
        )
        for i in range(n)
    ]

    m = config['num_crs']
    cx = rng.uniform(0.0, width, m)
    cy = rng.uniform(0.0, height, m)
    crs = [
        CognitiveRadio(
            id=j,
            pos=Position(x=float(cx[j]), y=float(cy[j])),
            registered=[],
            subsets=[],
            active_subset=None,
            history=empty_history(config['window']),
            tdma=[],
        )
        for j in range(m)
    ]
    logging.debug(f"Placed {n} nodes and {m} CRs in {width}x{height} m")
    return nodes, crs


# --- Mobility ---

def move_cr(cr: CognitiveRadio, config: dict, rng: np.random.Generator) -> Position:
    """One random-waypoint step of length d_CR, clamped to the area."""
    heading = rng.uniform(0.0, 2.0 * math.pi)
    x = cr['pos']['x'] + config['d_cr'] * math.cos(heading)
    y = cr['pos']['y'] + config['d_cr'] * math.sin(heading)
    return clamp_to_area(x, y, config['area_width'], config['area_height'])


# --- Messages ---

def make_adv(cr: CognitiveRadio, receivers: List[int], size: int) -> Message:
    return Message(
        kind=ADV, size=size, src=cr['id'], dst=BROADCAST, receivers=receivers,
        payload={'header': ADV, 'id': cr['id'], 'position': dict(cr['pos']),
                 'nodes': list(cr['registered'])},
    )


def make_join(node: SensorNode, cr: CognitiveRadio, size: int) -> Message:
    return Message(
        kind=J_REQ, size=size, src=node['id'], dst=cr['id'], receivers=[],
        payload={'n_id': node['id'], 'cr_id': cr['id'], 'e_rem': node['e_rem'],
                 'snr': node['snr']['db']},
    )


def make_leave(node: SensorNode, cr: CognitiveRadio, size: int) -> Message:
    return Message(
        kind=L_REQ, size=size, src=node['id'], dst=cr['id'], receivers=[],
        payload={'n_id': node['id'], 'cr_id': cr['id']},
    )


def make_schedule(cr: CognitiveRadio, size: int, receivers: Optional[List[int]] = None) -> Message:
    """Subset / TDMA information from the CR; all registered nodes unless `receivers` is given."""
    targets = list(cr['registered']) if receivers is None else list(receivers)
    return Message(
        kind=SCHED, size=size, src=cr['id'], dst=BROADCAST, receivers=targets,
        payload={'subsets': [list(s) for s in cr['subsets']], 'tdma': list(cr['tdma'])},
    )


def responders(messages: List[Message]) -> List[int]:
    """Nodes that answered with a J_REQ or L_REQ, ascending."""
    return sorted({m['src'] for m in messages if m['kind'] in (J_REQ, L_REQ)})


# --- Membership ---

def register(node: SensorNode, cr: CognitiveRadio) -> None:
    cr['registered'].append(node['id'])
    node['cluster'] = cr['id']
    node['mode'] = ACTIVE


def deregister(node: SensorNode, cr: CognitiveRadio) -> None:
    cr['registered'].remove(node['id'])
    node['cluster'] = None
    node['subset'] = None
    node['mode'] = UNCLUSTERED


def best_cr_in_range(node: SensorNode, crs: List[CognitiveRadio], r_s: float) -> Optional[CognitiveRadio]:
    """Nearest CR within r_s; ties by fewest registered nodes, then lowest id."""
    in_range = [(distance(node['pos'], cr['pos']), cr) for cr in crs]
    in_range = [(d, cr) for d, cr in in_range if d <= r_s]
    if not in_range:
        return None
    nearest = min(d for d, _ in in_range)
    tied = [cr for d, cr in in_range if d - nearest <= TIE_TOLERANCE]
    return min(tied, key=lambda cr: (len(cr['registered']), cr['id']))


def form_clusters(nodes: List[SensorNode], crs: List[CognitiveRadio], config: dict) -> ClusterUpdate:
    """Cluster formation: every CR advertises, unclustered nodes in range join the nearest.

    Each ADV is charged to the nodes that join its CR; nodes that stay
    unclustered pay nothing.
    """
    size = config['packet_bits']
    adverts = {cr['id']: make_adv(cr, [], size) for cr in crs}
    before = {cr['id']: list(cr['registered']) for cr in crs}

    joins: List[Message] = []
    for node in nodes:
        if not node['alive'] or node['cluster'] is not None:
            continue
        target = best_cr_in_range(node, crs, config['r_s'])
        if target is None:
            continue
        joins.append(make_join(node, target, size))
        register(node, target)
        adverts[target['id']]['receivers'].append(node['id'])
    messages = [adverts[cr['id']] for cr in crs] + joins

    changed = [cr['id'] for cr in crs if cr['registered'] != before[cr['id']]]
    logging.debug(f"Cluster formation: sizes {[len(cr['registered']) for cr in crs]}")
    return messages, changed


def update_clusters(
    nodes: List[SensorNode], crs: List[CognitiveRadio], moved_cr_id: int, config: dict
) -> ClusterUpdate:
    """Cluster updating after one CR relocated and broadcast its ADV.

    - unclustered nodes within r_s of the moved CR join it
    - nodes of other clusters leave only when strictly closer to the moved CR
    - members of the moved CR left out of range (or now nearer a static CR)
      re-join the best static CR in range, or become unclustered
    """
    size = config['packet_bits']
    r_s = config['r_s']
    by_id = {cr['id']: cr for cr in crs}
    moved = by_id[moved_cr_id]
    before = {cr['id']: list(cr['registered']) for cr in crs}
    messages: List[Message] = []

    advert = make_adv(moved, [], size)
    messages.append(advert)
    heard = [n['id'] for n in nodes
             if n['alive'] and distance(n['pos'], moved['pos']) <= config['r_cr']]

    # Members of the moved CR first: they decide against the static CRs
    for node_id in list(moved['registered']):
        node = nodes[node_id]
        d_moved = distance(node['pos'], moved['pos'])
        others = [cr for cr in crs if cr['id'] != moved_cr_id]
        alternative = best_cr_in_range(node, others, r_s)
        if d_moved > r_s:
            deregister(node, moved)
            if alternative is not None:
                messages.append(make_join(node, alternative, size))
                register(node, alternative)
        elif alternative is not None and distance(node['pos'], alternative['pos']) < d_moved - TIE_TOLERANCE:
            messages.append(make_leave(node, moved, size))
            deregister(node, moved)
            messages.append(make_join(node, alternative, size))
            register(node, alternative)

    for node_id in heard:
        node = nodes[node_id]
        d_moved = distance(node['pos'], moved['pos'])
        if d_moved > r_s or node['cluster'] == moved_cr_id:
            continue
        if node['cluster'] is None:
            messages.append(make_join(node, moved, size))
            register(node, moved)
            continue
        old = by_id[node['cluster']]
        if d_moved < distance(node['pos'], old['pos']) - TIE_TOLERANCE:
            messages.append(make_leave(node, old, size))
            deregister(node, old)
            messages.append(make_join(node, moved, size))
            register(node, moved)

    advert['receivers'] = responders(messages)
    changed = [cr['id'] for cr in crs if cr['registered'] != before[cr['id']]]
    return messages, changed


def drop_dead_nodes(nodes: List[SensorNode], crs: List[CognitiveRadio]) -> List[int]:
    """Deregister dead nodes; returns ids of CRs that lost members."""
    changed = []
    for cr in crs:
        dead = [nid for nid in cr['registered'] if not nodes[nid]['alive']]
        for nid in dead:
            deregister(nodes[nid], cr)
        if dead:
            changed.append(cr['id'])
    return changed


def assert_cluster_invariants(nodes: List[SensorNode], crs: List[CognitiveRadio], r_s: float) -> None:
    """Raises AssertionError when a membership invariant is broken."""
    seen = set()
    for cr in crs:
        assert len(set(cr['registered'])) == len(cr['registered']), f"CR {cr['id']} has duplicates"
        for nid in cr['registered']:
            assert nid not in seen, f"node {nid} registered twice"
            seen.add(nid)
            node = nodes[nid]
            assert node['cluster'] == cr['id'], f"node {nid} cluster field mismatch"
            d = distance(node['pos'], cr['pos'])
            assert d <= r_s + TIE_TOLERANCE, f"node {nid} out of range of CR {cr['id']}"
            for other in crs:
                if other['id'] != cr['id']:
                    assert distance(node['pos'], other['pos']) >= d - TIE_TOLERANCE, \
                        f"node {nid} has a nearer CR than {cr['id']}"
    for node in nodes:
        if node['cluster'] is None:
            assert node['mode'] == UNCLUSTERED
        else:
            assert node['id'] in seen
