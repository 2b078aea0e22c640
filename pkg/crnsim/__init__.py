"""CRN Sensor Network Simulator Package.

Re-exports commonly used components for convenience.
"""
from .sensing_math import (
    Snr,
    DetectorParams,
    SubsetSize,
    snr_from_db,
    make_detector,
    marcum_q,
    regularized_upper_gamma,
    local_detection_prob,
    local_false_alarm_prob,
    or_fuse,
    subset_size,
    num_subsets,
    sensing_time,
    achieved_detection_prob,
)
from .topology import (
    SensorNode,
    CognitiveRadio,
    Message,
    place_network,
    form_clusters,
    move_cr,
    update_clusters,
)
from .subsets import (
    Subset,
    SensingSelection,
    form_subsets,
    select_active_subset,
    tdma_schedule,
    select_sensing_nodes,
)
from .pu_model import (
    PuChain,
    PuHistory,
    RunStats,
    pu_step,
    record_slot,
    run_stats,
    g_cumulative,
    pr_nz,
    pr_gis,
    estimate_sleep_slots,
    sleep_duration,
)
from .energy import (
    RadioParams,
    EnergyLedger,
    tx_energy,
    rx_energy,
    setup_energy,
    sensing_energy,
    charge,
)
from .engine import (
    SlotRecord,
    RunSummary,
    run_round,
    global_decision,
    end_to_end_delay,
    mse,
    detection_probability,
    run_experiment,
)
from .config import SimConfig, ConfigError, DEFAULT_CONFIG, load_config, dump_config, with_overrides
from .workflow import run_workflow, sweep_workflow
from .ui import print_header, print_section, print_summary
from .cli import main, get_run_command

__all__ = [
    # Sensing math
    'Snr',
    'DetectorParams',
    'SubsetSize',
    'snr_from_db',
    'make_detector',
    'marcum_q',
    'regularized_upper_gamma',
    'local_detection_prob',
    'local_false_alarm_prob',
    'or_fuse',
    'subset_size',
    'num_subsets',
    'sensing_time',
    'achieved_detection_prob',
    # Topology
    'SensorNode',
    'CognitiveRadio',
    'Message',
    'place_network',
    'form_clusters',
    'move_cr',
    'update_clusters',
    # Subsets
    'Subset',
    'SensingSelection',
    'form_subsets',
    'select_active_subset',
    'tdma_schedule',
    'select_sensing_nodes',
    # PU model
    'PuChain',
    'PuHistory',
    'RunStats',
    'pu_step',
    'record_slot',
    'run_stats',
    'g_cumulative',
    'pr_nz',
    'pr_gis',
    'estimate_sleep_slots',
    'sleep_duration',
    # Energy
    'RadioParams',
    'EnergyLedger',
    'tx_energy',
    'rx_energy',
    'setup_energy',
    'sensing_energy',
    'charge',
    # Engine
    'SlotRecord',
    'RunSummary',
    'run_round',
    'global_decision',
    'end_to_end_delay',
    'mse',
    'detection_probability',
    'run_experiment',
    # Config
    'SimConfig',
    'ConfigError',
    'DEFAULT_CONFIG',
    'load_config',
    'dump_config',
    'with_overrides',
    # Workflow
    'run_workflow',
    'sweep_workflow',
    # UI
    'print_header',
    'print_section',
    'print_summary',
    # CLI
    'main',
    'get_run_command',
]
