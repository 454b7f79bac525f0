# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0
import csv
import os

import numpy as np
import pytest

from dif_filters.base.exceptions import ReportSchemaError
from dif_filters.base.report import (ReportRow, axes, divergence_counts,
                                     matrix, present_pairs, read_report,
                                     render_divergence_summary, render_pair,
                                     render_report, write_matrices,
                                     write_report, write_trajectories)

HEADER = 'q1,sigma2,algorithm,pos_rmse,vel_rmse,diverged,V_pos,V_vel'


def sample_rows():
    return [
        ReportRow(1e-3, 1.0, 'EKF', 0.7, 0.35, False),
        ReportRow(1e-3, 1.0, 'DIEKF', 0.63, 0.3, False, 0.63 / 0.7, 0.3 / 0.35),
        ReportRow(1e-3, 100.0, 'EKF', 57.25, 12.5, True),
        ReportRow(1e-3, 100.0, 'DIEKF', 31.0, 6.0, True, 31.0 / 57.25, 6.0 / 12.5),
        ReportRow(1.0, 1.0, 'EKF', 2.0, 1.0, True),
        ReportRow(1.0, 1.0, 'DIEKF', 0.9, 0.8, False, 0.45, 0.8),
        ReportRow(1.0, 100.0, 'EKF', 9.5, 2.0, False),
        ReportRow(1.0, 100.0, 'DIEKF', 8.55, 1.9, False, 0.9, 0.95),
    ]


class TestReportFile:

    def test_write_read_is_exact(self, tmp_path):
        rows = sample_rows() + [ReportRow(0.1, 10.0, 'UKF', 1.0 / 3.0, 2.0 / 7.0, False)]
        path = str(tmp_path / 'report.csv')
        write_report(rows, path)
        assert read_report(path) == rows

    def test_layout(self, tmp_path):
        path = str(tmp_path / 'report.csv')
        write_report(sample_rows()[:2], path)
        with open(path, encoding='utf-8') as f:
            lines = f.read().splitlines()
        assert lines[0] == HEADER
        assert lines[1] == '0.001,1.0,EKF,0.7,0.35,0,,'
        assert lines[2].startswith('0.001,1.0,DIEKF,0.63,0.3,0,')

    def test_wrong_header(self, tmp_path):
        path = tmp_path / 'other.csv'
        path.write_text('a,b,c\n1,2,3\n', encoding='utf-8')
        with pytest.raises(ReportSchemaError) as e:
            read_report(str(path))
        assert HEADER in str(e.value)

    def test_empty_file(self, tmp_path):
        path = tmp_path / 'empty.csv'
        path.write_text('', encoding='utf-8')
        with pytest.raises(ReportSchemaError):
            read_report(str(path))

    @pytest.mark.parametrize('record', [
        '0.001,1.0,EKF,0.7,0.35,yes,,',
        '0.001,1.0,EKF,0.7,0.35,0',
        '0.001,1.0,EKF,abc,0.35,0,,',
    ])
    def test_bad_record(self, tmp_path, record):
        path = tmp_path / 'bad.csv'
        path.write_text(f'{HEADER}\n{record}\n', encoding='utf-8')
        with pytest.raises(ReportSchemaError) as e:
            read_report(str(path))
        assert ':2' in str(e.value)


class TestMatrices:

    def test_axes_and_pairs(self):
        rows = sample_rows()
        assert axes(rows) == ([1e-3, 1.0], [1.0, 100.0])
        assert present_pairs(rows) == [('DIEKF', 'EKF')]

    def test_matrix(self):
        m = matrix(sample_rows(), 'EKF', 'pos_rmse')
        np.testing.assert_array_equal(m, [[0.7, 57.25], [2.0, 9.5]])
        v = matrix(sample_rows(), 'EKF', 'v_pos')
        assert np.all(np.isnan(v))

    def test_missing_cells_are_nan(self):
        m = matrix(sample_rows()[:6], 'DIEKF', 'vel_rmse')
        assert m[0, 0] == 0.3
        assert np.isnan(m[1, 1])

    def test_files(self, tmp_path):
        paths = write_matrices(sample_rows(), str(tmp_path))
        names = sorted(os.path.basename(p) for p in paths)
        assert names == sorted([
            'pos_rmse_DIEKF_EKF_DIEKF.csv', 'pos_rmse_DIEKF_EKF_EKF.csv',
            'vel_rmse_DIEKF_EKF_DIEKF.csv', 'vel_rmse_DIEKF_EKF_EKF.csv',
            'V_pos_DIEKF_EKF.csv', 'V_vel_DIEKF_EKF.csv',
        ])
        with open(tmp_path / 'V_pos_DIEKF_EKF.csv', newline='', encoding='utf-8') as f:
            records = list(csv.reader(f))
        assert records[0] == ['q1\\sigma2', '1.0', '100.0']
        assert records[2] == ['1.0', '0.45', '0.9']
        assert [r[0] for r in records[1:]] == ['0.001', '1.0']


class TestRendering:

    def test_both_diverged(self):
        text = render_pair(sample_rows(), 'DIEKF', 'EKF')
        assert '−/−' in text

    def test_cells(self):
        text = render_pair(sample_rows(), 'DIEKF', 'EKF')
        assert '0.9/−' in text
        assert '8.55/9.5 0.90' in text
        assert '0.63/0.7 0.90' in text
        assert text.splitlines()[0].startswith('DIEKF vs EKF: position RMSE')

    def test_velocity(self):
        text = render_pair(sample_rows(), 'DIEKF', 'EKF', 'vel')
        assert 'velocity RMSE [m/s]' in text
        assert '1.9/2.0 0.95' in text

    def test_report_has_both_metrics(self):
        text = render_report(sample_rows())
        assert 'position RMSE' in text and 'velocity RMSE' in text

    def test_divergence_summary(self):
        rows = sample_rows()
        assert divergence_counts(rows) == {'EKF': 2, 'DIEKF': 1}
        text = render_divergence_summary(rows)
        assert 'EKF: diverged in 2 of 4 configurations' in text
        assert 'DIEKF: diverged in 1 of 4 configurations' in text
        assert text.count('−') == 3


class TestTrajectories:

    def test_layout(self, tmp_path):
        truths = np.arange(2 * 3 * 5, dtype=float).reshape(2, 3, 5)
        ys = np.arange(2 * 2 * 2, dtype=float).reshape(2, 2, 2) + 0.5
        path = str(tmp_path / 'trajectories.csv')
        write_trajectories(path, truths, ys)
        with open(path, newline='', encoding='utf-8') as f:
            records = list(csv.reader(f))
        assert records[0] == ['trajectory', 'k', 'px', 'py', 'y_x', 'y_y']
        assert len(records) == 1 + 2 * 3
        assert records[1] == ['0', '0', '0.0', '2.0', '', '']
        assert records[2] == ['0', '1', '5.0', '7.0', '0.5', '1.5']
        assert records[6] == ['1', '2', '25.0', '27.0', '6.5', '7.5']
