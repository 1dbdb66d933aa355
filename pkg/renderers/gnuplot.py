from .base import TableRenderer


class GnuplotRenderer(TableRenderer):
    """Plot script for the CSV written next to it."""

    def __init__(self, table, csv_name: str):
        super().__init__(table)
        self.csv_name = csv_name

    def _column(self, name: str) -> int:
        return self.columns.index(name) + 1

    def render(self) -> str:
        plot = self.table['plot']
        lines = self._header_lines()
        lines += [
            'set datafile separator ","',
            'set datafile commentschars "#"',
            f'set xlabel "{plot["xlabel"]}"',
            f'set ylabel "{plot["ylabel"]}"',
            'set key outside right',
            'set grid',
        ]
        if plot.get('logy'):
            lines.append('set logscale y')
        data = f'"{self.csv_name}"'
        x = self._column(plot['x'])

        if plot['style'] == 'heatmap':
            z = self._column(plot['z'])
            y = self._column(plot['y'][0])
            lines += [
                'set view map',
                'set pm3d map',
                'set cblabel "fidelity"',
                f'splot {data} every ::1 using {x}:{y}:{z} with image notitle',
            ]
            return "\n".join(lines) + "\n"

        errors = plot.get('yerr') or [None] * len(plot['y'])
        curves = []
        for name, err in zip(plot['y'], errors):
            y = self._column(name)
            if plot['style'] == 'errorbars' and err:
                curves.append(f'{data} every ::1 using {x}:{y}:{self._column(err)} '
                              f'with yerrorlines title "{name}"')
            else:
                curves.append(f'{data} every ::1 using {x}:{y} with linespoints title "{name}"')
        lines.append("plot " + ", \\\n     ".join(curves))
        return "\n".join(lines) + "\n"
