"""Run and sweep orchestration.

Runs simulations and writes their results: rounds.csv, summary.json, the
resolved config.txt and a run.log, plus comparison tables for sweeps.
"""
import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple
from typing_extensions import TypedDict

from .config import SWEEPABLE, ConfigError, SimConfig, coerce_value, format_value, save_config, with_overrides
from .engine import RunSummary, SlotRecord, pipeline, run_experiment


SCHEMA_VERSION = 1

# Significant digits for every float written to disk
SIG_DIGITS = 12

ROUND_COLUMNS = ("round", "pu_state", "e_setup", "e_sense", "e_send", "e_total", "e_head", "residual", "alive")
CLUSTER_COLUMNS = (
    "members", "decision", "delay", "s_bar", "k", "n_s", "asleep", "infeasible", "t_sleep",
    "e_setup", "e_sense", "e_send",
)

# SlotRecord list field behind each per-cluster column
_CLUSTER_FIELDS = {
    "members": "members", "decision": "decisions", "delay": "delays", "s_bar": "s_bar",
    "k": "k", "n_s": "n_s", "asleep": "asleep", "infeasible": "infeasible", "t_sleep": "t_sleep",
    "e_setup": "e_setup_cr", "e_sense": "e_sense_cr", "e_send": "e_send_cr",
}

SUMMARY_COLUMNS = (
    "energy_total", "energy_setup", "energy_sense", "energy_send", "energy_head",
    "setup_share", "sense_share", "send_share", "energy_per_node", "residual_final",
    "residual_fraction", "dead_nodes", "mean_delay", "max_delay", "mse",
    "detection_probability", "false_alarm_rate", "mean_n_s", "modal_n_s", "mean_s_bar",
    "modal_s_bar", "mean_k", "modal_k", "infeasible_rounds", "asleep_rounds",
    "lifetime_rounds", "lifetime_measured", "rounds_per_e0",
)

ROUNDS_FILE = "rounds.csv"
SUMMARY_FILE = "summary.json"
CONFIG_FILE = "config.txt"
LOG_FILE = "run.log"
ERROR_FILE = "critical_error.log"
COMPARISON_FILE = "comparison.csv"
CUMULATIVE_FILE = "cumulative.csv"

# r_cr used for a swept r_s that reaches the CR radio range
R_CR_PER_R_S = 2.0

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class WorkflowState(TypedDict, total=False):
    """Immutable state for pipeline. Each step returns {**state, 'key': new}."""
    config: SimConfig
    output_dir: Path
    records: List[SlotRecord]
    summary: RunSummary
    log_entries: List[str]
    files: List[Path]


def log_step(state: WorkflowState, msg: str) -> WorkflowState:
    entries = list(state.get('log_entries', []))
    entries.append(f"{time.strftime('%Y-%m-%d %H:%M:%S')} - {msg}")
    logging.info(msg)
    return {**state, 'log_entries': entries}


# --- Formatting ---

def format_cell(value: Any) -> str:
    """CSV cell: empty for None, 0/1 for flags, 12 significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def round_significant(value: Any) -> Any:
    if isinstance(value, float) and math.isfinite(value):
        return float(f"{value:.{SIG_DIGITS}g}")
    return value


def rounds_header(num_crs: int) -> List[str]:
    return list(ROUND_COLUMNS) + [f"{col}_cr{j}" for j in range(num_crs) for col in CLUSTER_COLUMNS]


def round_row(record: SlotRecord) -> List[str]:
    e_total = math.fsum((record['e_setup'], record['e_sense'], record['e_send']))
    row = [record['round'], record['pu_state'], record['e_setup'], record['e_sense'], record['e_send'],
           e_total, record['e_head'], record['residual'], record['alive']]
    for j in range(len(record['decisions'])):
        row += [record[_CLUSTER_FIELDS[col]][j] for col in CLUSTER_COLUMNS]
    return [format_cell(v) for v in row]


# --- Writers ---

def write_rounds_csv(records: List[SlotRecord], num_crs: int, path: Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(rounds_header(num_crs))
        for record in records:
            writer.writerow(round_row(record))


def summary_document(summary: RunSummary) -> Dict[str, Any]:
    return {'schema_version': SCHEMA_VERSION, **{k: round_significant(v) for k, v in summary.items()}}


def write_summary_json(summary: RunSummary, path: Path) -> None:
    with open(path, "w", newline="\n") as f:
        json.dump(summary_document(summary), f, indent=2, sort_keys=True)
        f.write("\n")


def cumulative_per_node(records: List[SlotRecord], num_nodes: int) -> List[float]:
    """Running per-node energy consumption after each round."""
    series, total = [], 0.0
    for record in records:
        total += record['e_setup'] + record['e_sense'] + record['e_send']
        series.append(total / num_nodes if num_nodes else 0.0)
    return series


def write_comparison_csv(param: str, labels: Sequence[str], summaries: Sequence[RunSummary], path: Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["param", "value", "mode", "sleep", "rounds"] + list(SUMMARY_COLUMNS))
        for label, summary in zip(labels, summaries):
            writer.writerow([param, label, summary['mode'], summary['sleep'], summary['rounds']]
                            + [format_cell(summary[col]) for col in SUMMARY_COLUMNS])


def write_cumulative_csv(labels: Sequence[str], series: Sequence[List[float]], path: Path) -> None:
    length = max((len(s) for s in series), default=0)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["round"] + list(labels))
        for r in range(length):
            writer.writerow([str(r)] + [format_cell(s[r]) if r < len(s) else "" for s in series])


def write_error_log(output_dir: Path, error: Exception) -> None:
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        with open(output_dir / ERROR_FILE, "w") as f:
            f.write(f"CRITICAL ERROR: {error}")
    except OSError as e:
        logging.error(f"Could not write {ERROR_FILE}: {e}")


# --- Run Workflow ---

def simulate_to_dir(config: SimConfig, output_dir: Path) -> WorkflowState:
    """Run one simulation and write its files. Exceptions propagate."""

    def step_init(state: WorkflowState) -> WorkflowState:
        state['output_dir'].mkdir(parents=True, exist_ok=True)
        cfg = state['config']
        return log_step(state, f"Starting {cfg['rounds']} rounds (mode={cfg['mode']}, sleep={cfg['sleep']}, seed={cfg['seed']})")

    def step_simulate(state: WorkflowState) -> WorkflowState:
        records, summary = run_experiment(state['config'])
        state = {**state, 'records': records, 'summary': summary}
        return log_step(state, f"Simulated {len(records)} rounds, {summary['energy_total']:.6g} J consumed")

    def step_write_rounds(state: WorkflowState) -> WorkflowState:
        path = state['output_dir'] / ROUNDS_FILE
        write_rounds_csv(state['records'], state['config']['num_crs'], path)
        state = {**state, 'files': state.get('files', []) + [path]}
        return log_step(state, f"Wrote {path}")

    def step_write_summary(state: WorkflowState) -> WorkflowState:
        path = state['output_dir'] / SUMMARY_FILE
        write_summary_json(state['summary'], path)
        state = {**state, 'files': state.get('files', []) + [path]}
        return log_step(state, f"Wrote {path}")

    def step_write_config(state: WorkflowState) -> WorkflowState:
        path = state['output_dir'] / CONFIG_FILE
        save_config(state['config'], path)
        state = {**state, 'files': state.get('files', []) + [path]}
        return log_step(state, f"Wrote {path}")

    def step_write_log(state: WorkflowState) -> WorkflowState:
        state = log_step(state, "Run complete")
        path = state['output_dir'] / LOG_FILE
        path.write_text("\n".join(state['log_entries']) + "\n")
        return {**state, 'files': state.get('files', []) + [path]}

    initial_state: WorkflowState = {
        'config': config,
        'output_dir': output_dir,
        'records': [],
        'log_entries': [],
        'files': [],
    }
    workflow = pipeline(
        step_init,
        step_simulate,
        step_write_rounds,
        step_write_summary,
        step_write_config,
        step_write_log,
    )
    return workflow(initial_state)


def run_workflow(config: SimConfig, output_dir: Path) -> Tuple[int, Optional[RunSummary]]:
    """Single run. Returns (exit status, summary or None)."""
    try:
        final_state = simulate_to_dir(config, output_dir)
        return EXIT_OK, final_state['summary']
    except ConfigError as e:
        logging.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG, None
    except Exception as e:
        logging.error(f"Run failed: {e}")
        write_error_log(output_dir, e)
        return EXIT_RUNTIME, None


# --- Sweep Workflow ---

def sweep_label(param: str, config: SimConfig) -> str:
    return format_value(config[param])


def _sweep_job(job: Tuple[SimConfig, Path]) -> Tuple[RunSummary, List[float]]:
    config, sub_dir = job
    state = simulate_to_dir(config, sub_dir)
    return state['summary'], cumulative_per_node(state['records'], config['num_nodes'])


def sweep_point(config: SimConfig, param: str, value: str) -> SimConfig:
    """Config for one sweep value.

    A sensing range that reaches the CR radio range lifts r_cr to twice r_s,
    so an r_s sweep past the configured r_cr still runs.
    """
    if param == "r_s":
        r_s = coerce_value("r_s", value)
        if r_s >= config['r_cr']:
            r_cr = R_CR_PER_R_S * r_s
            logging.info(f"r_s={format_value(r_s)} reaches r_cr={format_value(config['r_cr'])}; "
                         f"using r_cr={format_value(r_cr)}")
            return with_overrides(config, r_s=r_s, r_cr=r_cr)
    return with_overrides(config, **{param: value})


def sweep_configs(config: SimConfig, param: str, values: Sequence[str]) -> List[SimConfig]:
    if param not in SWEEPABLE:
        raise ConfigError(f"not sweepable (choose from {', '.join(SWEEPABLE)})", key=param)
    if not values:
        raise ConfigError("sweep needs at least one value", key=param)
    return [sweep_point(config, param, value) for value in values]


def sweep_workflow(
    config: SimConfig, param: str, values: Sequence[str], output_dir: Path, jobs: int = 1
) -> Tuple[int, List[RunSummary]]:
    """One sub-run per value with a shared seed, then comparison tables."""
    try:
        configs = sweep_configs(config, param, values)
    except ConfigError as e:
        logging.error(f"Invalid sweep: {e}")
        return EXIT_CONFIG, []

    labels = [sweep_label(param, c) for c in configs]
    jobs_list = [(c, output_dir / f"{param}-{label}") for c, label in zip(configs, labels)]
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        logging.info(f"Sweeping {param} over {', '.join(labels)} with {jobs} job(s)")
        if jobs > 1 and len(jobs_list) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_sweep_job, jobs_list))
        else:
            results = [_sweep_job(job) for job in jobs_list]

        summaries = [summary for summary, _ in results]
        write_comparison_csv(param, labels, summaries, output_dir / COMPARISON_FILE)
        write_cumulative_csv(labels, [series for _, series in results], output_dir / CUMULATIVE_FILE)
        logging.info(f"Wrote {output_dir / COMPARISON_FILE} and {output_dir / CUMULATIVE_FILE}")
        return EXIT_OK, summaries
    except Exception as e:
        logging.error(f"Sweep failed: {e}")
        write_error_log(output_dir, e)
        return EXIT_RUNTIME, []
