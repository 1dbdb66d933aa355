from records import Cell, ResultTable


class TableRenderer:
    def __init__(self, table: ResultTable):
        self.table = table
        self.columns = list(table['columns'])

    def render(self) -> str:
        raise NotImplementedError

    def _format_cell(self, value: Cell) -> str:
        # bool before int: True is an int
        if value is None:
            return "NOT_ACHIEVABLE"
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, int):
            return str(value)
        if isinstance(value, float):
            return format(value, '.12g')
        return str(value)

    def _header_lines(self, prefix: str = "# ") -> list:
        lines = [f"{prefix}{self.table['name']}"]
        for key, value in self.table['header'].items():
            lines.append(f"{prefix}{key}: {value}")
        return lines
