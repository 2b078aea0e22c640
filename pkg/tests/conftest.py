# Test configuration and shared fixtures
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from crnsim.config import load_config, with_overrides
from crnsim.pu_model import empty_history, history_from_string
from crnsim.sensing_math import snr_from_db
from crnsim.topology import UNCLUSTERED, CognitiveRadio, Position, SensorNode


WORKED_HISTORY = "101101110110001111101"


@pytest.fixture
def default_config():
    """Full default parameter set."""
    return load_config("")


@pytest.fixture
def short_config(default_config):
    """Defaults with a run short enough for unit tests."""
    return with_overrides(default_config, rounds=60)


@pytest.fixture
def dense_config(default_config):
    """Clusters large enough for several subsets and feasible node selection."""
    return with_overrides(
        default_config,
        num_nodes=300, r_s=20.0, r_cr=30.0, snr_db_min=-10.0, snr_db_max=-5.0,
        pd_node_mode="fixed_half", rounds=300,
    )


@pytest.fixture
def worked_history():
    return history_from_string(WORKED_HISTORY)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_node():
    """Factory for sensor nodes at explicit positions."""
    def _make(node_id, x, y, e_rem=5.0, snr_db=-10.0):
        return SensorNode(
            id=node_id, pos=Position(x=float(x), y=float(y)), e_rem=float(e_rem),
            snr=snr_from_db(snr_db), cluster=None, subset=None, mode=UNCLUSTERED,
            tau_s=0.0, alive=True,
        )
    return _make


@pytest.fixture
def make_cr():
    """Factory for cognitive radios at explicit positions."""
    def _make(cr_id, x, y):
        return CognitiveRadio(
            id=cr_id, pos=Position(x=float(x), y=float(y)), registered=[], subsets=[],
            active_subset=None, history=empty_history(50), tdma=[],
        )
    return _make
