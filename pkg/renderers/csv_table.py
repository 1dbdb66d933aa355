import csv
import io

from .base import TableRenderer


class CsvRenderer(TableRenderer):
    """
    Comment lines naming the model, the sequence and the parameters, one
    header row, then one row per result. Numbers are written with 12
    significant digits so output is byte-stable across runs.
    """

    def render(self) -> str:
        buffer = io.StringIO()
        for line in self._header_lines():
            buffer.write(line + "\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.table['rows']:
            writer.writerow([self._format_cell(row[column]) for column in self.columns])
        return buffer.getvalue()
