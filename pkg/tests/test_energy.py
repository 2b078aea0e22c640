"""Tests for the radio model and the per-node energy ledger."""
import logging
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from crnsim.energy import (
    SEND,
    SENSE,
    SETUP,
    begin_round,
    charge,
    charge_messages,
    cluster_stage_totals,
    initial_energy,
    make_ledger,
    make_radio,
    radio_from_config,
    residual_energy,
    rx_energy,
    sensing_energy,
    setup_energy,
    stage_shares,
    total_consumed,
    tx_energy,
)
from crnsim.topology import Message, form_clusters, make_schedule


@pytest.fixture
def radio(default_config):
    return radio_from_config(default_config)


# --- Radio Model ---

class TestRadioModel:
    def test_transmit(self, radio):
        assert tx_energy(4000, 10.0, radio) == pytest.approx(4000 * 50e-9 + 4000 * 10e-12 * 100)

    def test_receive(self, radio):
        assert rx_energy(4000, radio) == pytest.approx(2e-4)

    def test_setup_bundle(self, radio):
        assert setup_energy(4000, 10.0, radio) == pytest.approx(2 * 2e-4 + 2.04e-4)

    def test_sensing(self, radio):
        assert sensing_energy(0.002, radio) == pytest.approx(2e-4)

    def test_zero_distance_is_electronics_only(self, radio):
        assert tx_energy(4000, 0.0, radio) == rx_energy(4000, radio)

    @pytest.mark.parametrize("call", [
        lambda r: tx_energy(-1, 1.0, r),
        lambda r: tx_energy(10, -1.0, r),
        lambda r: rx_energy(-1, r),
        lambda r: sensing_energy(-0.1, r),
    ])
    def test_negative_inputs_rejected(self, radio, call):
        with pytest.raises(ValueError):
            call(radio)

    def test_non_positive_parameters_rejected(self):
        with pytest.raises(ValueError):
            make_radio(0.0, 10e-12, 0.1)


# --- Ledger ---

class TestCharge:
    def test_charge_updates_node_and_stage(self, make_node):
        nodes = [make_node(0, 0, 0)]
        ledger = make_ledger(nodes, 5.0)
        begin_round(ledger, 0)

        assert charge(ledger, 0, SENSE, 0.5, 0)
        assert nodes[0]['e_rem'] == pytest.approx(4.5)
        assert ledger['round_stages'][0][SENSE] == pytest.approx(0.5)
        assert ledger['totals'][SENSE] == pytest.approx(0.5)

    def test_overdraw_is_clamped_and_kills(self, make_node, caplog):
        nodes = [make_node(0, 0, 0)]
        ledger = make_ledger(nodes, 5.0)
        with caplog.at_level(logging.INFO):
            assert charge(ledger, 0, SEND, 7.0, 3)
        assert nodes[0]['e_rem'] == 0.0
        assert not nodes[0]['alive']
        assert ledger['totals'][SEND] == pytest.approx(5.0)
        assert "ran out of energy in round 3" in caplog.text

    def test_dead_node_is_not_charged(self, make_node, caplog):
        nodes = [make_node(0, 0, 0)]
        ledger = make_ledger(nodes, 5.0)
        charge(ledger, 0, SEND, 5.0, 0)
        with caplog.at_level(logging.WARNING):
            assert not charge(ledger, 0, SETUP, 1.0, 1)
        assert ledger['dead_charges'] == 1
        assert ledger['totals'][SETUP] == 0.0
        assert "dead node 0" in caplog.text

    def test_invalid_stage_and_amount(self, make_node):
        ledger = make_ledger([make_node(0, 0, 0)], 5.0)
        with pytest.raises(ValueError):
            charge(ledger, 0, "idle", 1.0, 0)
        with pytest.raises(ValueError):
            charge(ledger, 0, SENSE, -1.0, 0)

    def test_conservation(self, make_node):
        nodes = [make_node(i, 0, 0) for i in range(5)]
        ledger = make_ledger(nodes, 5.0)
        for r in range(40):
            begin_round(ledger, r)
            for i in range(5):
                charge(ledger, i, SENSE, 0.01 * (i + 1), r)
                charge(ledger, i, SEND, 0.03 * i, r)
        assert residual_energy(ledger) + total_consumed(ledger) == pytest.approx(initial_energy(ledger))
        assert initial_energy(ledger) == 25.0
        assert all(n['e_rem'] >= 0.0 for n in nodes)
        # Node 4 draws 0.17 J per round and is exhausted before the last round
        assert not nodes[4]['alive']
        assert nodes[0]['alive']

    def test_draws_are_attributed_to_the_cluster(self, make_node):
        nodes = [make_node(0, 0, 0), make_node(1, 5, 5)]
        nodes[0]['cluster'] = 2
        ledger = make_ledger(nodes, 5.0)
        begin_round(ledger, 0)
        charge(ledger, 0, SENSE, 0.25, 0)
        charge(ledger, 0, SETUP, 0.5, 0)
        charge(ledger, 1, SEND, 1.0, 0)

        assert cluster_stage_totals(ledger, 0, 2) == {SETUP: 0.5, SENSE: 0.25, SEND: 0.0}
        assert cluster_stage_totals(ledger, 0, 0) == {SETUP: 0.0, SENSE: 0.0, SEND: 0.0}
        assert cluster_stage_totals(ledger, 7, 2) == {SETUP: 0.0, SENSE: 0.0, SEND: 0.0}
        assert ledger['round_stages'][0][SEND] == 1.0

    def test_stage_shares(self, make_node):
        ledger = make_ledger([make_node(0, 0, 0)], 5.0)
        assert stage_shares(ledger) == {SETUP: 0.0, SENSE: 0.0, SEND: 0.0}
        charge(ledger, 0, SETUP, 0.1, 0)
        charge(ledger, 0, SENSE, 0.3, 0)
        shares = stage_shares(ledger)
        assert shares[SETUP] == pytest.approx(0.25)
        assert shares[SENSE] == pytest.approx(0.75)
        assert shares[SEND] == 0.0


class TestChargeMessages:
    def test_simple_join_matches_setup_bundle(self, default_config, make_node, make_cr, radio):
        nodes = [make_node(0, 52, 50), make_node(1, 90, 90), make_node(2, 65, 50)]
        crs = [make_cr(0, 50, 50)]
        ledger = make_ledger(nodes, 5.0)
        messages, _ = form_clusters(nodes, crs, default_config)
        messages.append(make_schedule(crs[0], default_config['packet_bits']))

        drawn = charge_messages(ledger, messages, nodes, crs, radio, 0)

        assert drawn == pytest.approx(setup_energy(4000, 2.0, radio))
        assert nodes[0]['e_rem'] == pytest.approx(5.0 - drawn)
        assert nodes[1]['e_rem'] == 5.0

    def test_node_that_never_clusters_keeps_full_energy(self, default_config, make_node, make_cr, radio):
        # Within CR radio range, outside sensing range
        nodes = [make_node(0, 52, 50), make_node(1, 65, 50)]
        crs = [make_cr(0, 50, 50)]
        ledger = make_ledger(nodes, 5.0)
        messages, _ = form_clusters(nodes, crs, default_config)
        messages.append(make_schedule(crs[0], default_config['packet_bits']))
        charge_messages(ledger, messages, nodes, crs, radio, 0)

        assert nodes[1]['cluster'] is None
        assert nodes[1]['e_rem'] == 5.0
        assert ledger['consumed'][1] == 0.0

    def test_dead_receivers_are_skipped(self, default_config, make_node, make_cr, radio):
        nodes = [make_node(0, 52, 50), make_node(1, 48, 50)]
        crs = [make_cr(0, 50, 50)]
        ledger = make_ledger(nodes, 5.0)
        nodes[1]['alive'] = False
        advert = Message(kind="ADV", size=4000, src=0, dst=-1, receivers=[0, 1], payload={})

        assert charge_messages(ledger, [advert], nodes, crs, radio, 0) == pytest.approx(2e-4)
        assert ledger['dead_charges'] == 0

    def test_leave_request_charged_over_distance(self, make_node, make_cr, radio):
        nodes = [make_node(0, 56, 50)]
        crs = [make_cr(0, 50, 50)]
        ledger = make_ledger(nodes, 5.0)
        leave = Message(kind="L_REQ", size=4000, src=0, dst=0, receivers=[], payload={})
        assert charge_messages(ledger, [leave], nodes, crs, radio, 0) == pytest.approx(tx_energy(4000, 6.0, radio))

    def test_unknown_kind_rejected(self, make_node, make_cr, radio):
        nodes = [make_node(0, 56, 50)]
        ledger = make_ledger(nodes, 5.0)
        bogus = Message(kind="PING", size=10, src=0, dst=0, receivers=[], payload={})
        with pytest.raises(ValueError):
            charge_messages(ledger, [bogus], nodes, [make_cr(0, 50, 50)], radio, 0)
