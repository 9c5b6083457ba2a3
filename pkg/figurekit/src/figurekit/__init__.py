"""Figure rendering for gpfaraday run directories, via documented file
formats only."""

from .formats import (Decomposition, FormatError, Snapshot, load_run,
                      read_config, read_decomposition, read_manifest,
                      read_snapshot, read_tsv)
from .figures import FigureSpec, RenderReport, render

__version__ = "0.1.0"
