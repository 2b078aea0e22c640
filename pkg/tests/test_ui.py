"""Terminal output tests. Uses capsys."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from crnsim.ui import format_metric, print_comparison, print_header, print_section, print_summary


def summary_with(**overrides):
    summary = {
        'mode': "cusf", 'sleep': "max_energy_subset", 'rounds': 100,
        'energy_total': 1.2345, 'setup_share': 0.5, 'sense_share': 0.25, 'send_share': 0.25,
        'residual_fraction': 0.99, 'dead_nodes': 0, 'mean_delay': 0.0331, 'mse': 0.09,
        'detection_probability': 0.87, 'mean_n_s': 2.1, 'mean_s_bar': 3.0, 'mean_k': 2.5,
        'subset_capacity': 5, 'subset_feasible': True, 'lifetime_rounds': 1234.5,
        'lifetime_measured': False,
    }
    summary.update(overrides)
    return summary


class TestPrintHelpers:
    def test_header(self, capsys):
        print_header("Test Title")
        out = capsys.readouterr().out
        assert "Test Title" in out
        assert "=" * 60 in out

    def test_section(self, capsys):
        print_section("Section")
        out = capsys.readouterr().out
        assert "Section" in out
        assert "-" * 40 in out


class TestFormatMetric:
    def test_missing(self):
        assert format_metric(None) == "n/a"

    def test_flags_and_ints(self):
        assert format_metric(True) == "yes"
        assert format_metric(3, " rounds") == "3 rounds"

    def test_float_digits(self):
        assert format_metric(0.123456, " J") == "0.1235 J"


class TestPrintSummary:
    def test_default_title_and_lines(self, capsys):
        print_summary(summary_with())
        out = capsys.readouterr().out
        assert "cusf / max_energy_subset (100 rounds)" in out
        assert "50.0% / 25.0% / 25.0%" in out
        assert "33.1 ms" in out
        assert "(extrapolated)" in out
        assert "(infeasible)" not in out

    def test_infeasible_and_missing_metrics(self, capsys):
        print_summary(summary_with(subset_feasible=False, mean_delay=None, mse=None), title="Custom")
        out = capsys.readouterr().out
        assert "Custom" in out
        assert "(infeasible)" in out
        assert "n/a" in out

    def test_comparison(self, capsys):
        print_comparison("d_cr", ["5.0", "20.0"], [summary_with(), summary_with(energy_total=2.0)])
        out = capsys.readouterr().out
        assert "Sweep over d_cr" in out
        assert "20.0" in out
