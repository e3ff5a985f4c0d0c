from .engine import RunResult, Simulation, compute_routes, run
from .report import CSV_FIELDS, MetricsRow, emit_csv, emit_summary, format_summary
from .scenario import Scenario, parse_scenario
