"""Round loop, baseline modes and run metrics.

Every round runs the setup, sense, send and sleep stages for each cluster,
then advances the PU one Markov step. A run is a list of SlotRecords plus a
summary computed from them.
"""
import logging
import math
from functools import reduce
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple, TypeVar

import numpy as np
from typing_extensions import TypedDict

from .config import SimConfig, validate_config
from .energy import (
    SEND, SENSE, SETUP, EnergyLedger, RadioParams,
    begin_round, charge, charge_messages, cluster_stage_totals, initial_energy, make_ledger, radio_from_config,
    residual_energy, rx_energy, sensing_energy, stage_shares, total_consumed, tx_energy,
)
from .pu_model import (
    BUSY, IDLE, PuChain,
    estimate_sleep_slots, initial_state, make_chain, pu_step, record_slot, sleep_duration,
)
from .sensing_math import SubsetSize, subset_size
from .subsets import (
    SensingSelection, Subset,
    form_subsets, full_sensing, partition_ok, pd_node_target, refresh_energies,
    select_active_subset, select_sensing_nodes, tdma_schedule,
)
from .topology import (
    ACTIVE, SLEEP, CognitiveRadio, Message, Position, SensorNode,
    assert_cluster_invariants, distance, drop_dead_nodes, form_clusters, make_schedule,
    move_cr, place_network, update_clusters,
)


# Independent random streams, so topology and PU traffic match across policies
STREAMS = ("placement", "mobility", "pu", "sensing", "ack")

# Residual fraction that ends the network lifetime
LIFETIME_FRACTION = 0.5

# Progress log interval, in rounds
PROGRESS_EVERY = 1000

T = TypeVar('T')


def pipeline(*steps: Callable[[T], T]) -> Callable[[T], T]:
    """Compose left-to-right: pipeline(f, g, h)(x) = h(g(f(x)))"""
    return lambda initial: reduce(lambda state, step: step(state), steps, initial)


# --- Records ---

class RoundState(TypedDict):
    """Mutable state of one simulation instance."""
    config: SimConfig
    nodes: List[SensorNode]
    crs: List[CognitiveRadio]
    ledger: EnergyLedger
    radio: RadioParams
    chain: PuChain
    rngs: Dict[str, np.random.Generator]
    subsets: Dict[int, List[Subset]]
    sleep_left: Dict[int, int]
    size: SubsetSize
    pd_target: float
    round: int


class ClusterOutcome(TypedDict):
    decision: Optional[int]
    delay: Optional[float]
    members: int
    k: int
    s_bar: int
    n_s: Optional[int]
    asleep: bool
    infeasible: bool
    t_sleep: Optional[float]
    e_head: float


class SlotRecord(TypedDict):
    """One round; list fields are indexed by CR id."""
    round: int
    pu_state: int
    decisions: List[Optional[int]]
    delays: List[Optional[float]]
    members: List[int]
    k: List[int]
    s_bar: List[int]
    n_s: List[Optional[int]]
    asleep: List[bool]
    infeasible: List[bool]
    t_sleep: List[Optional[float]]
    e_setup_cr: List[float]
    e_sense_cr: List[float]
    e_send_cr: List[float]
    e_setup: float
    e_sense: float
    e_send: float
    e_head: float
    residual: float
    alive: int


class RoundWork(TypedDict, total=False):
    """Per-round scratch passed through the stage pipeline."""
    state: RoundState
    pu_state: int
    updated: Set[int]
    outcomes: Dict[int, ClusterOutcome]
    selections: Dict[int, SensingSelection]
    record: SlotRecord


class RunSummary(TypedDict):
    mode: str
    sleep: str
    seed: int
    rounds: int
    energy_total: float
    energy_setup: float
    energy_sense: float
    energy_send: float
    energy_head: float
    setup_share: float
    sense_share: float
    send_share: float
    energy_per_node: Optional[float]
    residual_final: float
    residual_fraction: float
    dead_nodes: int
    mean_delay: Optional[float]
    max_delay: Optional[float]
    mse: Optional[float]
    detection_probability: Optional[float]
    false_alarm_rate: Optional[float]
    mean_n_s: Optional[float]
    modal_n_s: Optional[int]
    mean_s_bar: Optional[float]
    modal_s_bar: Optional[int]
    mean_k: Optional[float]
    modal_k: Optional[int]
    subset_capacity: int
    subset_feasible: bool
    infeasible_rounds: int
    asleep_rounds: int
    lifetime_rounds: Optional[float]
    lifetime_measured: bool
    rounds_per_e0: Optional[float]


# --- Initialization ---

def spawn_streams(seed: int) -> Dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


def init_state(config: SimConfig) -> RoundState:
    rngs = spawn_streams(config['seed'])
    nodes, crs = place_network(config, rngs['placement'])
    chain = make_chain(config['p_ib'], config['p_bi'], initial_state(config['p0'], rngs['pu']))
    return RoundState(
        config=config,
        nodes=nodes,
        crs=crs,
        ledger=make_ledger(nodes, config['e0']),
        radio=radio_from_config(config),
        chain=chain,
        rngs=rngs,
        subsets={cr['id']: [] for cr in crs},
        sleep_left={cr['id']: 0 for cr in crs},
        size=subset_size(config['qd_min'], config['qf_max'], config['pd_min'], config['pf_max']),
        pd_target=pd_node_target(config['pd_node_mode'], config['pd_min']),
        round=0,
    )


def rebuild_cluster(state: RoundState, cr: CognitiveRadio) -> None:
    """Re-form subsets and the TDMA order after a membership change."""
    nodes = state['nodes']
    members = cr['registered']
    if not members:
        state['subsets'][cr['id']] = []
        cr['subsets'], cr['tdma'], cr['active_subset'] = [], [], None
        return

    if state['config']['mode'] == "cusf":
        subs = form_subsets([nodes[nid] for nid in members], state['config']['r_s'], state['size'])
    else:
        subs = [Subset(members=sorted(members), total_energy=sum(nodes[nid]['e_rem'] for nid in members))]
    for index, sub in enumerate(subs):
        for nid in sub['members']:
            nodes[nid]['subset'] = index
    state['subsets'][cr['id']] = subs
    cr['subsets'] = [list(sub['members']) for sub in subs]
    cr['tdma'] = tdma_schedule(members, nodes)


# --- Metrics ---

def global_decision(local_decisions: Sequence[int]) -> int:
    """OR rule: busy when any node reports busy."""
    if len(local_decisions) == 0:
        raise ValueError("global_decision needs at least one local decision")
    return BUSY if any(local_decisions) else IDLE


def hop_count(a: Position, b: Position, r_s: float) -> int:
    return max(1, math.ceil(distance(a, b) / r_s))


def end_to_end_delay(cr: CognitiveRadio, selection: SensingSelection, config: SimConfig) -> float:
    """Seconds from the start of sensing until the fused report is in.

    Sensing runs in parallel, reports are serialized in TDMA slots. The
    head-based baseline adds aggregation plus one head-to-base packet; the
    sink-based one adds aggregation, per-hop forwarding to the sink and sink
    processing.
    """
    if not selection['selected']:
        raise ValueError("end_to_end_delay needs a non-empty selection")
    t_report = config['report_bits'] / config['bit_rate']
    delay = max(selection['taus']) + len(selection['selected']) * t_report
    if config['mode'] == "leachc_like":
        delay += config['t_agg'] + t_report
    elif config['mode'] == "sendora_like":
        sink = Position(x=config['sink_x'], y=config['sink_y'])
        delay += config['t_agg'] + hop_count(cr['pos'], sink, config['r_s']) * t_report + config['t_sink']
    return delay


def decision_pairs(records: List[SlotRecord]) -> List[Tuple[int, int]]:
    """(actual PU state, cluster decision) for every deciding cluster in every round."""
    return [
        (rec['pu_state'], d)
        for rec in records
        for d in rec['decisions']
        if d is not None
    ]


def mse(records: List[SlotRecord]) -> float:
    pairs = decision_pairs(records)
    if not pairs:
        raise ValueError("mse needs at least one cluster decision")
    return sum((h - d) ** 2 for h, d in pairs) / len(pairs)


def detection_probability(records: List[SlotRecord]) -> float:
    """Fraction of PU-busy (round, cluster) pairs decided busy."""
    busy = [d for h, d in decision_pairs(records) if h == BUSY]
    if not busy:
        raise ValueError("detection_probability is undefined without busy rounds")
    return sum(busy) / len(busy)


def false_alarm_rate(records: List[SlotRecord]) -> float:
    idle = [d for h, d in decision_pairs(records) if h == IDLE]
    if not idle:
        raise ValueError("false_alarm_rate is undefined without idle rounds")
    return sum(idle) / len(idle)


def network_lifetime(records: List[SlotRecord], initial: float) -> Tuple[Optional[float], bool]:
    """Rounds until residual energy drops below half, and whether that was observed.

    When the run ends first, the average per-round consumption is extrapolated.
    """
    for rec in records:
        if rec['residual'] < LIFETIME_FRACTION * initial:
            return float(rec['round'] + 1), True
    if not records:
        return None, False
    consumed = initial - records[-1]['residual']
    if consumed <= 0:
        return None, False
    return LIFETIME_FRACTION * initial / (consumed / len(records)), False


# --- Round Stages ---

def step_setup(work: RoundWork) -> RoundWork:
    """CR movement, cluster formation/updating, subset (re)formation and their control traffic."""
    state = work['state']
    config, nodes, crs = state['config'], state['nodes'], state['crs']
    ledger, radio, r = state['ledger'], state['radio'], state['round']
    rng = state['rngs']['mobility']
    begin_round(ledger, r)
    before = {cr['id']: set(cr['registered']) for cr in crs}

    messages: List[Message] = []
    changed: Set[int] = set()
    moved: Set[int] = set()
    if r == 0:
        messages, _ = form_clusters(nodes, crs, config)
        changed = {cr['id'] for cr in crs}
    else:
        for cr in crs:
            moves = rng.random() < config['p_move']
            target = move_cr(cr, config, rng)
            if not moves or target == cr['pos']:
                continue
            cr['pos'] = target
            moved.add(cr['id'])
            msgs, ch = update_clusters(nodes, crs, cr['id'], config)
            messages.extend(msgs)
            changed.update(ch)
    changed.update(drop_dead_nodes(nodes, crs))

    for cid in sorted(changed):
        cr = crs[cid]
        rebuild_cluster(state, cr)
        # Subset info goes to the nodes that joined this round
        joined = [nid for nid in cr['registered'] if nid not in before[cid]]
        if joined:
            messages.append(make_schedule(cr, config['packet_bits'], joined))
    charge_messages(ledger, messages, nodes, crs, radio, r)

    if config['mode'] == "leachc_like":
        # Centralized setup: status packet to the base station, assignment back
        base = Position(x=config['base_x'], y=config['base_y'])
        for node in nodes:
            if node['alive']:
                cost = tx_energy(config['packet_bits'], distance(node['pos'], base), radio) \
                    + rx_energy(config['packet_bits'], radio)
                charge(ledger, node['id'], SETUP, cost, r)

    if changed or moved:
        logging.debug(f"Round {r}: {len(moved)} CRs moved, {len(changed)} clusters changed, {len(messages)} messages")
    return {**work, 'updated': changed | moved}


def _choose_sensing(state: RoundState, cr: CognitiveRadio, live: List[int]) -> Tuple[SensingSelection, int]:
    config, nodes = state['config'], state['nodes']
    full = dict(pf_target=config['pf_max'], tau_max=config['tau_max'], f_s=config['f_s'], p_sense=config['p_sense'])

    if config['mode'] != "cusf":
        for nid in live:
            nodes[nid]['mode'] = ACTIVE
        return full_sensing(live, nodes, **full), 1

    subs = refresh_energies(state['subsets'][cr['id']], nodes)
    active = select_active_subset(subs)
    cr['active_subset'] = active
    for index, sub in enumerate(subs):
        for nid in sub['members']:
            if nodes[nid]['alive']:
                nodes[nid]['mode'] = ACTIVE if index == active else SLEEP
    members = [nid for nid in subs[active]['members'] if nodes[nid]['alive']] or live

    selection = select_sensing_nodes(members, nodes, config['qd_min'], pd_target=state['pd_target'],
                                     max_nodes=state['size']['s'], **full)
    if selection['infeasible']:
        selection = {**full_sensing(members, nodes, **full), 'infeasible': True}
    return selection, len(subs)


def _empty_outcome(members: int) -> ClusterOutcome:
    return ClusterOutcome(decision=None, delay=None, members=members, k=0, s_bar=0, n_s=None,
                          asleep=False, infeasible=False, t_sleep=None, e_head=0.0)


def step_sense(work: RoundWork) -> RoundWork:
    """Local energy-detection decisions and their OR fusion, per cluster."""
    state = work['state']
    config, nodes, ledger, r = state['config'], state['nodes'], state['ledger'], state['round']
    rng = state['rngs']['sensing']
    busy = work['pu_state'] == BUSY

    outcomes: Dict[int, ClusterOutcome] = {}
    selections: Dict[int, SensingSelection] = {}
    for cr in state['crs']:
        cid = cr['id']
        live = [nid for nid in cr['registered'] if nodes[nid]['alive']]
        outcome = _empty_outcome(len(live))
        for nid in live:
            nodes[nid]['tau_s'] = 0.0

        if state['sleep_left'][cid] > 0:
            state['sleep_left'][cid] -= 1
            for nid in live:
                nodes[nid]['mode'] = SLEEP
            outcomes[cid] = {**outcome, 'asleep': True, 'decision': BUSY if live else None}
            continue
        if not live:
            outcomes[cid] = outcome
            continue

        selection, k = _choose_sensing(state, cr, live)
        local = []
        for nid, tau, pd in zip(selection['selected'], selection['taus'], selection['pds']):
            charge(ledger, nid, SENSE, sensing_energy(tau, state['radio']), r)
            nodes[nid]['tau_s'] = tau
            local.append(int(rng.random() < (pd if busy else config['pf_max'])))

        selections[cid] = selection
        outcomes[cid] = {
            **outcome,
            'decision': global_decision(local),
            'k': k,
            's_bar': len(selection['selected']),
            'infeasible': selection['infeasible'],
        }
        if selection['infeasible']:
            logging.debug(f"Round {r}: CR {cid} missed Qd_min, all {len(selection['selected'])} subset nodes sensed for tau_max")
    return {**work, 'outcomes': outcomes, 'selections': selections}


def step_send(work: RoundWork) -> RoundWork:
    """TDMA reporting to the CR, or multi-hop forwarding toward the sink."""
    state = work['state']
    config, nodes, ledger, radio, r = state['config'], state['nodes'], state['ledger'], state['radio'], state['round']
    bits = config['report_bits']
    sink = Position(x=config['sink_x'], y=config['sink_y'])
    base = Position(x=config['base_x'], y=config['base_y'])

    outcomes = dict(work['outcomes'])
    relay = 0.0
    for cid, selection in work['selections'].items():
        cr = state['crs'][cid]
        for nid in selection['selected']:
            if config['mode'] == "sendora_like":
                hop_cost = rx_energy(bits, radio) + tx_energy(bits, config['r_s'], radio)
                charge(ledger, nid, SEND, tx_energy(bits, config['r_s'], radio), r)
                relay += (hop_count(nodes[nid]['pos'], sink, config['r_s']) - 1) * hop_cost
            else:
                charge(ledger, nid, SEND, tx_energy(bits, distance(nodes[nid]['pos'], cr['pos']), radio), r)

        e_head = 0.0
        if config['mode'] == "leachc_like":
            e_head = len(selection['selected']) * rx_energy(bits, radio) \
                + tx_energy(bits, distance(cr['pos'], base), radio)
        outcomes[cid] = {**outcomes[cid], 'delay': end_to_end_delay(cr, selection, config), 'e_head': e_head}

    if relay > 0:
        # Relay hops are carried by the sensor backbone as a whole
        live = [n for n in nodes if n['alive']]
        if live:
            share = relay / len(live)
            for node in live:
                charge(ledger, node['id'], SEND, share, r)
    return {**work, 'outcomes': outcomes}


def step_sleep(work: RoundWork) -> RoundWork:
    """History update with ACK correction, n_s estimation and sleep scheduling."""
    state = work['state']
    config, r = state['config'], state['round']
    rng = state['rngs']['ack']
    estimates = config['mode'] == "cusf" and config['sleep'] != "none"
    t_report = config['report_bits'] / config['bit_rate']

    outcomes = dict(work['outcomes'])
    for cr in state['crs']:
        cid = cr['id']
        outcome = outcomes[cid]
        decision = outcome['decision']
        if decision is None:
            continue
        if outcome['asleep']:
            if config['sleep_history'] == "hold":
                cr['history'] = record_slot(cr['history'], BUSY)
            continue

        ack_lost = rng.random() < config['p_ack_loss']
        ack = work['pu_state'] == IDLE and not ack_lost
        cr['history'] = record_slot(cr['history'], decision, ack)

        if not estimates or decision != BUSY:
            continue
        n_s = estimate_sleep_slots(cr['history'])
        outcome = {**outcome, 'n_s': n_s}
        if config['sleep'] == "all_sleep_ns" and n_s > 0:
            state['sleep_left'][cid] = n_s
            selection = work['selections'][cid]
            t_set = config['t_set'] if cid in work['updated'] else 0.0
            try:
                t_sleep = sleep_duration(n_s, config['slot_time'], t_set, max(selection['taus']),
                                         len(selection['selected']) * t_report)
            except ValueError as e:
                logging.warning(f"Round {r}: CR {cid} {e}; sleeping whole slots only")
                t_sleep = n_s * config['slot_time']
            outcome = {**outcome, 't_sleep': t_sleep}
        outcomes[cid] = outcome
    return {**work, 'outcomes': outcomes}


def step_record(work: RoundWork) -> RoundWork:
    state = work['state']
    ledger, r = state['ledger'], state['round']
    stages = ledger['round_stages'][r]
    outcomes = [work['outcomes'][cr['id']] for cr in state['crs']]
    by_cluster = [cluster_stage_totals(ledger, r, cr['id']) for cr in state['crs']]
    record = SlotRecord(
        round=state['round'],
        pu_state=work['pu_state'],
        decisions=[o['decision'] for o in outcomes],
        delays=[o['delay'] for o in outcomes],
        members=[o['members'] for o in outcomes],
        k=[o['k'] for o in outcomes],
        s_bar=[o['s_bar'] for o in outcomes],
        n_s=[o['n_s'] for o in outcomes],
        asleep=[o['asleep'] for o in outcomes],
        infeasible=[o['infeasible'] for o in outcomes],
        t_sleep=[o['t_sleep'] for o in outcomes],
        e_setup_cr=[c[SETUP] for c in by_cluster],
        e_sense_cr=[c[SENSE] for c in by_cluster],
        e_send_cr=[c[SEND] for c in by_cluster],
        e_setup=stages[SETUP],
        e_sense=stages[SENSE],
        e_send=stages[SEND],
        e_head=math.fsum(o['e_head'] for o in outcomes),
        residual=residual_energy(ledger),
        alive=sum(1 for n in state['nodes'] if n['alive']),
    )
    return {**work, 'record': record}


def step_pu(work: RoundWork) -> RoundWork:
    state = work['state']
    state['chain'] = {**state['chain'], 'state': pu_step(state['chain'], state['rngs']['pu'])}
    state['round'] += 1
    return work


def run_round(state: RoundState) -> SlotRecord:
    """Advance the simulation by one time slot."""
    round_pipeline = pipeline(step_setup, step_sense, step_send, step_sleep, step_record, step_pu)
    work = round_pipeline(RoundWork(state=state, pu_state=state['chain']['state']))
    return work['record']


def check_invariants(state: RoundState) -> None:
    """Raise AssertionError if cluster membership or subset partitions are inconsistent."""
    assert_cluster_invariants(state['nodes'], state['crs'], state['config']['r_s'])
    for cr in state['crs']:
        assert partition_ok(state['subsets'][cr['id']], cr['registered']), \
            f"CR {cr['id']} subsets do not partition its cluster"


# --- Experiment ---

def _mean(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def _mode(values: List[int]) -> Optional[int]:
    """Most frequent value; smallest on ties."""
    return int(np.bincount(values).argmax()) if values else None


def _or_none(metric: Callable[[List[SlotRecord]], float], records: List[SlotRecord]) -> Optional[float]:
    try:
        return metric(records)
    except ValueError:
        return None


def summarize(records: List[SlotRecord], state: RoundState) -> RunSummary:
    config, ledger = state['config'], state['ledger']
    totals = ledger['totals']
    total = total_consumed(ledger)
    shares = stage_shares(ledger)
    initial = initial_energy(ledger)
    residual = residual_energy(ledger)

    deciding = [(rec, j) for rec in records for j, d in enumerate(rec['decisions'])
                if d is not None and not rec['asleep'][j]]
    delays = [rec['delays'][j] for rec, j in deciding if rec['delays'][j] is not None]
    s_bars = [rec['s_bar'][j] for rec, j in deciding]
    ks = [rec['k'][j] for rec, j in deciding]
    n_ss = [n for rec in records for n in rec['n_s'] if n is not None]

    lifetime, measured = network_lifetime(records, initial)
    per_node_round = total / (len(state['nodes']) * len(records)) if records and state['nodes'] else 0.0

    return RunSummary(
        mode=config['mode'],
        sleep=config['sleep'],
        seed=config['seed'],
        rounds=len(records),
        energy_total=total,
        energy_setup=totals[SETUP],
        energy_sense=totals[SENSE],
        energy_send=totals[SEND],
        energy_head=math.fsum(rec['e_head'] for rec in records),
        setup_share=shares[SETUP],
        sense_share=shares[SENSE],
        send_share=shares[SEND],
        energy_per_node=total / len(state['nodes']) if state['nodes'] else None,
        residual_final=residual,
        residual_fraction=residual / initial if initial > 0 else 0.0,
        dead_nodes=sum(1 for n in state['nodes'] if not n['alive']),
        mean_delay=_mean(delays),
        max_delay=max(delays) if delays else None,
        mse=_or_none(mse, records),
        detection_probability=_or_none(detection_probability, records),
        false_alarm_rate=_or_none(false_alarm_rate, records),
        mean_n_s=_mean(n_ss),
        modal_n_s=_mode(n_ss),
        mean_s_bar=_mean(s_bars),
        modal_s_bar=_mode(s_bars),
        mean_k=_mean(ks),
        modal_k=_mode(ks),
        subset_capacity=state['size']['s'],
        subset_feasible=state['size']['feasible'],
        infeasible_rounds=sum(sum(rec['infeasible']) for rec in records),
        asleep_rounds=sum(sum(rec['asleep']) for rec in records),
        lifetime_rounds=lifetime,
        lifetime_measured=measured,
        rounds_per_e0=config['e0'] / per_node_round if per_node_round > 0 else None,
    )


def run_experiment(config: SimConfig) -> Tuple[List[SlotRecord], RunSummary]:
    """Validate, initialize and run `config['rounds']` rounds."""
    validate_config(config)
    state = init_state(config)
    logging.info(f"Running {config['rounds']} rounds: mode={config['mode']}, sleep={config['sleep']}, seed={config['seed']}")

    records: List[SlotRecord] = []
    for _ in range(config['rounds']):
        records.append(run_round(state))
        if state['round'] % PROGRESS_EVERY == 0:
            logging.debug(f"Completed {state['round']} rounds, residual {records[-1]['residual']:.4f} J")

    summary = summarize(records, state)
    if summary['infeasible_rounds']:
        logging.info(f"{summary['infeasible_rounds']} cluster-rounds fell back to full-subset sensing at tau_max")
    logging.info(f"Run finished: {summary['energy_total']:.6f} J consumed, {summary['dead_nodes']} dead nodes")
    return records, summary
