from .base import TableRenderer
from .csv_table import CsvRenderer
from .gnuplot import GnuplotRenderer

__all__ = ['TableRenderer', 'CsvRenderer', 'GnuplotRenderer']
