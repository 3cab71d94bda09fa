"""Tabular experiment results with reproducible CSV and SVG emission.

The CSV layout is a ``#``-prefixed metadata block (one ``key = value``
line per effective parameter, sorted), a header row, then the data rows.
Floats are written with ``repr`` so the numeric payload round-trips
exactly and the file is byte-for-byte reproducible for a fixed
(config, seed, version) triple.  The SVG emitter draws a plain polyline
chart of the first two numeric columns; CSV is the contract surface and
the chart is a convenience.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["ResultTable"]


def _fmt_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _parse_cell(text: str):
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class ResultTable:
    """Rectangular result set: column names, rows, provenance metadata."""

    columns: tuple[str, ...]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.columns = tuple(self.columns)
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("every row must match the column count")

    def to_csv_text(self) -> str:
        if not self.rows:
            raise ValueError("refusing to emit an empty table")
        lines = [f"# {key} = {self.metadata[key]}" for key in sorted(self.metadata)]
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_fmt_cell(cell) for cell in row))
        return "\n".join(lines) + "\n"

    def to_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text())

    @classmethod
    def parse_csv(cls, path: str | Path) -> "ResultTable":
        metadata: dict = {}
        columns: tuple[str, ...] | None = None
        rows: list[tuple] = []
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                metadata[key.strip()] = value.strip()
                continue
            if columns is None:
                columns = tuple(line.split(","))
                continue
            rows.append(tuple(_parse_cell(cell) for cell in line.split(",")))
        if columns is None:
            raise ValueError(f"no header row found in {path}")
        return cls(columns=columns, rows=rows, metadata=metadata)

    def _first_numeric_pair(self) -> tuple[int, int]:
        numeric = [
            i for i in range(len(self.columns))
            if all(isinstance(row[i], (int, float)) for row in self.rows)
        ]
        if len(numeric) < 2:
            raise ValueError("need two numeric columns for a chart")
        return numeric[0], numeric[1]

    def to_svg_text(self, width: int = 720, height: int = 480) -> str:
        if not self.rows:
            raise ValueError("refusing to emit an empty table")
        ix, iy = self._first_numeric_pair()
        xs = [float(row[ix]) for row in self.rows]
        ys = [float(row[iy]) for row in self.rows]
        pad = 70
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
        x_span = (x_hi - x_lo) or 1.0
        y_span = (y_hi - y_lo) or 1.0

        def sx(x: float) -> float:
            return pad + (x - x_lo) / x_span * (width - 2 * pad)

        def sy(y: float) -> float:
            return height - pad - (y - y_lo) / y_span * (height - 2 * pad)

        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        title = self.metadata.get("experiment", "result")
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<text x="{width / 2:.0f}" y="28" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>',
            f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
            'stroke="black"/>',
            f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
            f'<text x="{width / 2:.0f}" y="{height - 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{self.columns[ix]}</text>',
            f'<text x="20" y="{height / 2:.0f}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="12" transform="rotate(-90 20 {height / 2:.0f})">{self.columns[iy]}</text>',
            f'<text x="{pad}" y="{height - pad + 16}" font-family="sans-serif" '
            f'font-size="10">{x_lo:.4g}</text>',
            f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{x_hi:.4g}</text>',
            f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end" font-family="sans-serif" '
            f'font-size="10">{y_lo:.4g}</text>',
            f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end" font-family="sans-serif" '
            f'font-size="10">{y_hi:.4g}</text>',
            f'<polyline points="{points}" fill="none" stroke="#1f6fb4" stroke-width="1.5"/>',
            "</svg>",
        ]
        return "\n".join(parts) + "\n"

    def to_svg(self, path: str | Path) -> None:
        Path(path).write_text(self.to_svg_text())

    def emit(self, path: str | Path, fmt: str = "csv") -> None:
        if fmt == "csv":
            self.to_csv(path)
        elif fmt == "svg":
            self.to_svg(path)
        else:
            raise ValueError(f"unknown output format {fmt!r}; expected 'csv' or 'svg'")
