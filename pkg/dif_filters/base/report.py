# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
#
# Sweep report files: the long-format report.csv, per-pair matrix CSVs and the text
# matrices printed by `report`.

import csv
import math
import os
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .constants import (ALGORITHM_PAIRS, DIVERGED_MARK, POSITION_INDICES,
                        REPORT_HEADER)
from .exceptions import ReportSchemaError


@dataclass(frozen=True)
class ReportRow:
    q1: float
    sigma2: float
    algorithm: str
    pos_rmse: float
    vel_rmse: float
    diverged: bool
    # relative RMSE against the baseline, None for baselines
    v_pos: Optional[float] = None
    v_vel: Optional[float] = None

    def as_record(self) -> List[str]:
        return [
            format_value(self.q1),
            format_value(self.sigma2),
            self.algorithm,
            format_value(self.pos_rmse),
            format_value(self.vel_rmse),
            '1' if self.diverged else '0',
            '' if self.v_pos is None else format_value(self.v_pos),
            '' if self.v_vel is None else format_value(self.v_vel),
        ]


def format_value(value: float) -> str:
    # repr is the shortest string that parses back to the same float
    return repr(float(value))


def _parse_optional(text: str) -> Optional[float]:
    return None if text == '' else float(text)


def write_report(rows: Iterable[ReportRow], path: str) -> None:
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(REPORT_HEADER)
        for row in rows:
            writer.writerow(row.as_record())


def read_report(path: str) -> List[ReportRow]:
    expected = ','.join(REPORT_HEADER)
    with open(path, newline='', encoding='utf-8') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != REPORT_HEADER:
            raise ReportSchemaError(f'{path} does not look like a sweep report, expected header: {expected}')
        rows = []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(REPORT_HEADER):
                raise ReportSchemaError(f'{path}:{line_no}: expected {len(REPORT_HEADER)} fields '
                                        f'({expected}), got {len(record)}')
            try:
                rows.append(ReportRow(
                    q1=float(record[0]),
                    sigma2=float(record[1]),
                    algorithm=record[2],
                    pos_rmse=float(record[3]),
                    vel_rmse=float(record[4]),
                    diverged=_parse_flag(record[5]),
                    v_pos=_parse_optional(record[6]),
                    v_vel=_parse_optional(record[7]),
                ))
            except ValueError as e:
                raise ReportSchemaError(f'{path}:{line_no}: {e}')
    return rows


def _parse_flag(text: str) -> bool:
    if text not in ('0', '1'):
        raise ValueError(f'diverged must be 0 or 1, got "{text}"')
    return text == '1'


def axes(rows: Sequence[ReportRow]) -> Tuple[List[float], List[float]]:
    """ (q1 values, sigma2 values), both ascending """
    return sorted({r.q1 for r in rows}), sorted({r.sigma2 for r in rows})


def _index(rows: Sequence[ReportRow]) -> Dict[Tuple[float, float, str], ReportRow]:
    return {(r.q1, r.sigma2, r.algorithm): r for r in rows}


def present_pairs(rows: Sequence[ReportRow]) -> List[Tuple[str, str]]:
    algorithms = {r.algorithm for r in rows}
    return [(it, base) for it, base in ALGORITHM_PAIRS if it in algorithms and base in algorithms]


def algorithm_order(rows: Sequence[ReportRow]) -> List[str]:
    seen = []  # type: List[str]
    for r in rows:
        if r.algorithm not in seen:
            seen.append(r.algorithm)
    return seen


def matrix(rows: Sequence[ReportRow], algorithm: str, field: str) -> np.ndarray:
    """
    q1 x sigma2 matrix of one report column for one algorithm; missing cells are NaN.
    """
    q1s, s2s = axes(rows)
    lookup = _index(rows)
    out = np.full((len(q1s), len(s2s)), np.nan)
    for i, q1 in enumerate(q1s):
        for j, s2 in enumerate(s2s):
            row = lookup.get((q1, s2, algorithm))
            value = None if row is None else getattr(row, field)
            if value is not None:
                out[i, j] = float(value)
    return out


def _write_matrix(path: str, q1s: Sequence[float], s2s: Sequence[float], values: np.ndarray) -> None:
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['q1\\sigma2'] + [format_value(s) for s in s2s])
        for q1, line in zip(q1s, values):
            writer.writerow([format_value(q1)] + ['' if math.isnan(v) else format_value(v) for v in line])


def write_matrices(rows: Sequence[ReportRow], out_dir: str) -> List[str]:
    """
    Per pair: iterated and baseline position/velocity RMSE plus V_pos / V_vel, each as a
    q1 (rows, ascending) x sigma2 (columns, ascending) CSV. Returns the written paths.
    """
    q1s, s2s = axes(rows)
    written = []
    for iterated, baseline in present_pairs(rows):
        tag = f'{iterated}_{baseline}'
        grids = (
            (f'pos_rmse_{tag}_{iterated}.csv', matrix(rows, iterated, 'pos_rmse')),
            (f'pos_rmse_{tag}_{baseline}.csv', matrix(rows, baseline, 'pos_rmse')),
            (f'vel_rmse_{tag}_{iterated}.csv', matrix(rows, iterated, 'vel_rmse')),
            (f'vel_rmse_{tag}_{baseline}.csv', matrix(rows, baseline, 'vel_rmse')),
            (f'V_pos_{tag}.csv', matrix(rows, iterated, 'v_pos')),
            (f'V_vel_{tag}.csv', matrix(rows, iterated, 'v_vel')),
        )
        for name, values in grids:
            path = os.path.join(out_dir, name)
            _write_matrix(path, q1s, s2s, values)
            written.append(path)
    return written


def divergence_counts(rows: Sequence[ReportRow]) -> Dict[str, int]:
    counts = {alg: 0 for alg in algorithm_order(rows)}
    for r in rows:
        counts[r.algorithm] += int(r.diverged)
    return counts


def _table(corner: str, col_labels: Sequence[str], row_labels: Sequence[str], cells: List[List[str]]) -> str:
    widths = [max(len(corner), *(len(r) for r in row_labels))]
    for j, label in enumerate(col_labels):
        widths.append(max(len(label), *(len(line[j]) for line in cells)))
    lines = [' | '.join(s.rjust(w) for s, w in zip([corner, *col_labels], widths))]
    lines.append('-+-'.join('-' * w for w in widths))
    for label, line in zip(row_labels, cells):
        lines.append(' | '.join(s.rjust(w) for s, w in zip([label, *line], widths)))
    return '\n'.join(lines)


def _rmse_cell(row: Optional[ReportRow], field: str) -> str:
    if row is None:
        return '?'
    if row.diverged:
        return DIVERGED_MARK
    return format_value(getattr(row, field))


def render_pair(rows: Sequence[ReportRow], iterated: str, baseline: str, metric: str = 'pos') -> str:
    """
    Each cell reads "iterated/baseline V" with the RMSEs as stored in the report and V
    rounded to two decimals; a diverged filter shows as the diverged mark.
    """
    field, v_field = f'{metric}_rmse', f'v_{metric}'
    q1s, s2s = axes(rows)
    lookup = _index(rows)
    cells = []
    for q1 in q1s:
        line = []
        for s2 in s2s:
            it_row, base_row = lookup.get((q1, s2, iterated)), lookup.get((q1, s2, baseline))
            cell = f'{_rmse_cell(it_row, field)}/{_rmse_cell(base_row, field)}'
            v = None if it_row is None else getattr(it_row, v_field)
            if v is not None:
                cell += f' {v:.2f}'
            line.append(cell)
        cells.append(line)
    unit = 'm' if metric == 'pos' else 'm/s'
    title = f'{iterated} vs {baseline}: {"position" if metric == "pos" else "velocity"} RMSE [{unit}] (rows q1, columns sigma2)'
    table = _table('q1\\sigma2', [f'{s:g}' for s in s2s], [f'{q:g}' for q in q1s], cells)
    return f'{title}\n{table}'


def render_report(rows: Sequence[ReportRow]) -> str:
    blocks = []
    for iterated, baseline in present_pairs(rows):
        for metric in ('pos', 'vel'):
            blocks.append(render_pair(rows, iterated, baseline, metric))
    return '\n\n'.join(blocks)


def render_divergence_summary(rows: Sequence[ReportRow]) -> str:
    """ One q1 x sigma2 map per algorithm with the diverged mark where the filter diverged """
    q1s, s2s = axes(rows)
    lookup = _index(rows)
    counts = divergence_counts(rows)
    blocks = []
    for alg in algorithm_order(rows):
        cells = []
        for q1 in q1s:
            line = []
            for s2 in s2s:
                row = lookup.get((q1, s2, alg))
                line.append('?' if row is None else (DIVERGED_MARK if row.diverged else '.'))
            cells.append(line)
        header = f'{alg}: diverged in {counts[alg]} of {len(q1s) * len(s2s)} configurations'
        blocks.append(header + '\n' + _table('q1\\sigma2', [f'{s:g}' for s in s2s], [f'{q:g}' for q in q1s], cells))
    return '\n\n'.join(blocks)


def write_trajectories(path: str, truths: np.ndarray, measurements: np.ndarray) -> None:
    """
    truths: (n, K + 1, state_dim); measurements: (n, K, 2), one realization per trajectory.
    Time 0 carries no measurement.
    """
    px, py = POSITION_INDICES
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['trajectory', 'k', 'px', 'py', 'y_x', 'y_y'])
        for t, (truth, ys) in enumerate(zip(truths, measurements)):
            for k, x in enumerate(truth):
                meas = ['', ''] if k == 0 else [format_value(ys[k - 1, 0]), format_value(ys[k - 1, 1])]
                writer.writerow([t, k, format_value(x[px]), format_value(x[py])] + meas)
