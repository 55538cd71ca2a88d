"""Experiment orchestration: scenarios, power studies, real data, reports and the CLI."""

from .geomagia import GeomagiaRecord, RealDataReport, ingest_geomagia_csv, run_real_data_analysis
from .power import ExperimentSpec, PowerRow, PowerTable, run_power_study
from .report import emit_report
from .scenarios import Scenario, acg_sigma, mu1, mu2, one, preset

__all__ = [
    "GeomagiaRecord", "RealDataReport", "ingest_geomagia_csv", "run_real_data_analysis",
    "ExperimentSpec", "PowerRow", "PowerTable", "run_power_study", "emit_report",
    "Scenario", "acg_sigma", "mu1", "mu2", "one", "preset",
]
