"""Terminal output primitives.

Headers, section dividers and the end-of-run metrics table.
"""
from typing import List, Optional, Sequence, Tuple

from .engine import RunSummary


# --- UI Primitives ---

def print_header(title: str, width: int = 60) -> None:
    """Print a centered header banner."""
    print("\n" + "=" * width)
    print(f"    {title}")
    print("=" * width)


def print_section(title: str, width: int = 40) -> None:
    """Print a section divider."""
    print(f"\n{title}")
    print("-" * width)


def format_metric(value: Optional[float], unit: str = "", digits: int = 4) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, int):
        return f"{value}{unit}"
    return f"{value:.{digits}g}{unit}"


def summary_lines(summary: RunSummary) -> List[Tuple[str, str]]:
    delay = summary['mean_delay'] * 1e3 if summary['mean_delay'] is not None else None
    return [
        ("Energy consumed", format_metric(summary['energy_total'], " J")),
        ("  setup / sense / send", " / ".join(
            f"{summary[k] * 100:.1f}%" for k in ('setup_share', 'sense_share', 'send_share'))),
        ("Residual fraction", format_metric(summary['residual_fraction'])),
        ("Dead nodes", format_metric(summary['dead_nodes'])),
        ("Mean delay", format_metric(delay, " ms")),
        ("MSE", format_metric(summary['mse'])),
        ("Detection probability", format_metric(summary['detection_probability'])),
        ("Mean n_s", format_metric(summary['mean_n_s'], digits=3)),
        ("Mean S-bar / K", f"{format_metric(summary['mean_s_bar'], digits=3)} / {format_metric(summary['mean_k'], digits=3)}"),
        ("Subset capacity S", f"{summary['subset_capacity']}" + ("" if summary['subset_feasible'] else " (infeasible)")),
        ("Lifetime", format_metric(summary['lifetime_rounds'], " rounds", digits=6)
         + ("" if summary['lifetime_measured'] or summary['lifetime_rounds'] is None else " (extrapolated)")),
    ]


def print_summary(summary: RunSummary, title: Optional[str] = None) -> None:
    print_section(title or f"{summary['mode']} / {summary['sleep']} ({summary['rounds']} rounds)")
    for label, value in summary_lines(summary):
        print(f"  {label:<24} {value}")


def print_comparison(param: str, labels: Sequence[str], summaries: Sequence[RunSummary]) -> None:
    """One line per sweep value."""
    print_section(f"Sweep over {param}", width=60)
    print(f"  {'value':<18} {'energy (J)':>12} {'mse':>8} {'Qd':>8} {'delay (ms)':>11}")
    for label, s in zip(labels, summaries):
        delay = s['mean_delay'] * 1e3 if s['mean_delay'] is not None else None
        print(f"  {label:<18} {format_metric(s['energy_total']):>12} {format_metric(s['mse']):>8} "
              f"{format_metric(s['detection_probability']):>8} {format_metric(delay):>11}")
