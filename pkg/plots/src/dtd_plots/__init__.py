"""Figure rendering for the misinfo-dtd simulator's file outputs.

Consumes only the documented CSV/JSON schemas (daily.csv, sweep.csv,
summary.json); no import of the simulator itself.
"""

from .schema import SchemaError, read_daily, read_summary, read_sweep  # noqa: F401
from .figures import FIGURE_KINDS, render  # noqa: F401
