"""Per-node energy ledger.

First-order radio model for transmit/receive, constant-power sensing, and a
ledger that splits each round's consumption into setup, sense and send.
"""
import logging
import math
from typing import Dict, List

from typing_extensions import TypedDict

from .topology import ADV, J_REQ, L_REQ, SCHED, CognitiveRadio, Message, SensorNode, distance


SETUP = "setup"
SENSE = "sense"
SEND = "send"
STAGES = (SETUP, SENSE, SEND)


class RadioParams(TypedDict):
    e_elec: float   # J/bit
    e_amp: float    # J/bit/m^2
    p_sense: float  # W


class StageTotals(TypedDict):
    setup: float
    sense: float
    send: float


class EnergyLedger(TypedDict):
    """Consumption bookkeeping for one run.

    `nodes` references the live SensorNode records so e_rem stays in one place.
    `cluster_stages` maps round -> CR id -> stage totals, attributed by the
    node's cluster at the moment of the draw; draws by unclustered nodes only
    reach the network-wide totals.
    """
    e0: float
    nodes: List[SensorNode]
    consumed: Dict[int, float]
    round_stages: Dict[int, StageTotals]
    cluster_stages: Dict[int, Dict[int, StageTotals]]
    totals: StageTotals
    dead_charges: int


def make_radio(e_elec: float, e_amp: float, p_sense: float) -> RadioParams:
    if e_elec <= 0 or e_amp <= 0 or p_sense <= 0:
        raise ValueError(f"Radio parameters must be positive: e_elec={e_elec}, e_amp={e_amp}, p_sense={p_sense}")
    return RadioParams(e_elec=float(e_elec), e_amp=float(e_amp), p_sense=float(p_sense))


def radio_from_config(config: dict) -> RadioParams:
    return make_radio(config['e_elec'], config['e_amp'], config['p_sense'])


# --- Radio Model ---

def tx_energy(l: float, d: float, radio: RadioParams) -> float:
    """l*E_elec + l*E_amp*d^2."""
    if l < 0 or d < 0:
        raise ValueError(f"tx_energy needs l >= 0 and d >= 0, got l={l}, d={d}")
    return l * radio['e_elec'] + l * radio['e_amp'] * d * d


def rx_energy(l: float, radio: RadioParams) -> float:
    if l < 0:
        raise ValueError(f"rx_energy needs l >= 0, got {l}")
    return l * radio['e_elec']


def setup_energy(l: float, d: float, radio: RadioParams) -> float:
    """ADV receive + subset-info receive + one request transmit."""
    return 2.0 * rx_energy(l, radio) + tx_energy(l, d, radio)


def sensing_energy(tau: float, radio: RadioParams) -> float:
    if tau < 0:
        raise ValueError(f"sensing time must be non-negative, got {tau}")
    return radio['p_sense'] * tau


# --- Ledger ---

def _zero_stages() -> StageTotals:
    return StageTotals(setup=0.0, sense=0.0, send=0.0)


def make_ledger(nodes: List[SensorNode], e0: float) -> EnergyLedger:
    return EnergyLedger(
        e0=float(e0),
        nodes=nodes,
        consumed={n['id']: 0.0 for n in nodes},
        round_stages={},
        cluster_stages={},
        totals=_zero_stages(),
        dead_charges=0,
    )


def begin_round(ledger: EnergyLedger, round_index: int) -> None:
    ledger['round_stages'][round_index] = _zero_stages()
    ledger['cluster_stages'][round_index] = {}


def charge(ledger: EnergyLedger, node_id: int, stage: str, amount: float, round_index: int) -> bool:
    """Draw `amount` joules from a node for one stage.

    The draw is clamped to what the node has left. Returns False (and charges
    nothing) when the node is already dead.
    """
    if stage not in STAGES:
        raise ValueError(f"Unknown energy stage: {stage}")
    if amount < 0:
        raise ValueError(f"Energy charge must be non-negative, got {amount}")

    node = ledger['nodes'][node_id]
    if not node['alive']:
        ledger['dead_charges'] += 1
        logging.warning(f"Ignoring {stage} charge of {amount:.3e} J to dead node {node_id}")
        return False
    if amount == 0:
        return True

    drawn = min(amount, node['e_rem'])
    ledger['consumed'][node_id] += drawn
    node['e_rem'] = max(ledger['e0'] - ledger['consumed'][node_id], 0.0)
    stages = ledger['round_stages'].setdefault(round_index, _zero_stages())
    stages[stage] += drawn
    ledger['totals'][stage] += drawn
    if node['cluster'] is not None:
        by_cluster = ledger['cluster_stages'].setdefault(round_index, {})
        by_cluster.setdefault(node['cluster'], _zero_stages())[stage] += drawn

    if node['e_rem'] <= 0.0:
        node['e_rem'] = 0.0
        node['alive'] = False
        logging.info(f"Node {node_id} ran out of energy in round {round_index}")
    return True


def charge_messages(
    ledger: EnergyLedger,
    messages: List[Message],
    nodes: List[SensorNode],
    crs: List[CognitiveRadio],
    radio: RadioParams,
    round_index: int,
) -> float:
    """Setup-stage cost of control traffic; returns joules drawn.

    CR -> node broadcasts cost each live receiver one receive; node -> CR
    requests cost the sender one transmit over its distance to that CR.
    """
    before = ledger['totals'][SETUP]
    by_id = {cr['id']: cr for cr in crs}
    for msg in messages:
        if msg['kind'] in (ADV, SCHED):
            cost = rx_energy(msg['size'], radio)
            for nid in msg['receivers']:
                if nodes[nid]['alive']:
                    charge(ledger, nid, SETUP, cost, round_index)
        elif msg['kind'] in (J_REQ, L_REQ):
            node = nodes[msg['src']]
            if node['alive']:
                d = distance(node['pos'], by_id[msg['dst']]['pos'])
                charge(ledger, node['id'], SETUP, tx_energy(msg['size'], d, radio), round_index)
        else:
            raise ValueError(f"Unknown message kind: {msg['kind']}")
    return ledger['totals'][SETUP] - before


def cluster_stage_totals(ledger: EnergyLedger, round_index: int, cr_id: int) -> StageTotals:
    """One cluster's consumption per stage in one round; zeros when it drew nothing."""
    return ledger['cluster_stages'].get(round_index, {}).get(cr_id, _zero_stages())


def total_consumed(ledger: EnergyLedger) -> float:
    return math.fsum(ledger['consumed'].values())


def initial_energy(ledger: EnergyLedger) -> float:
    return ledger['e0'] * len(ledger['nodes'])


def residual_energy(ledger: EnergyLedger) -> float:
    return math.fsum(n['e_rem'] for n in ledger['nodes'])


def stage_shares(ledger: EnergyLedger) -> Dict[str, float]:
    """Fraction of all consumed energy per stage; zeros before any charge."""
    total = math.fsum(ledger['totals'][s] for s in STAGES)
    if total == 0:
        return {s: 0.0 for s in STAGES}
    return {s: ledger['totals'][s] / total for s in STAGES}
