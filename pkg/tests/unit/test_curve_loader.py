"""
Unit tests for curve and coefficient file ingestion
Tests header parsing, CSV validation and the point-count comparison
"""

import pytest
import sys
from pathlib import Path

# Add src to path for imports
sys.path.append(str(Path(__file__).parent.parent.parent / 'src'))

from data.curve_loader import compare_with_curve, load_coeff_file, load_curve_file, resolve_curve
from models.errors import ConfigError, MissingCoefficientError
from models.global_q import CURVES


class TestCurveFiles:
    """Test suite for .curve files"""

    def test_bundled_11a(self, project_paths, curve_11a):
        curve = load_curve_file(project_paths['raw_data'] / '11a.curve')
        assert curve == curve_11a

    def test_bundled_37a(self, project_paths):
        curve = load_curve_file(project_paths['raw_data'] / '37a.curve')
        assert curve.conductor == 37
        assert curve.root_number == -1

    def test_missing_header(self, tmp_path):
        path = tmp_path / 'bad.curve'
        path.write_text("0,-1,1,-10,-20\n")
        with pytest.raises(ConfigError):
            load_curve_file(path)

    def test_wrong_coefficient_count(self, tmp_path):
        path = tmp_path / 'short.curve'
        path.write_text("# N=11 w=1\n0,-1,1,-10\n")
        with pytest.raises(ConfigError):
            load_curve_file(path)

    def test_singular(self, tmp_path):
        path = tmp_path / 'cusp.curve'
        path.write_text("# N=1 w=1\n0,0,0,0,0\n")
        with pytest.raises(ConfigError):
            load_curve_file(path)

    def test_resolve(self, tmp_path):
        assert resolve_curve('37a', tmp_path) == CURVES['37a']
        with pytest.raises(ConfigError):
            resolve_curve('389a', tmp_path)


class TestCoeffFiles:
    """Test suite for coefficient CSV files"""

    def test_bundled_table(self, project_paths, curve_11a):
        table = load_coeff_file(project_paths['raw_data'] / '11a_coeffs.csv')
        assert table.label == '11a'
        assert table.n_max == 31
        assert table[31] == 7
        assert compare_with_curve(table, curve_11a)['ok']

    def test_extension_past_file(self, project_paths, curve_11a):
        table = load_coeff_file(project_paths['raw_data'] / '11a_coeffs.csv', n_max=36)
        # a_2 = -2: a_4 = 2, a_8 = 0, a_16 = -4, a_32 = 8
        assert table[32] == 8
        assert table[33] == table[3] * table[11]
        with pytest.raises(MissingCoefficientError):
            load_coeff_file(project_paths['raw_data'] / '11a_coeffs.csv', n_max=40)

    def test_columns(self, tmp_path):
        path = tmp_path / 'x_coeffs.csv'
        path.write_text("# N=11 w=1\nk,a\n1,1\n")
        with pytest.raises(ConfigError):
            load_coeff_file(path)

    def test_non_integer(self, tmp_path):
        path = tmp_path / 'x_coeffs.csv'
        path.write_text("# N=11 w=1\nn,a_n\n1,1\n2,-2.5\n")
        with pytest.raises(ConfigError):
            load_coeff_file(path)

    def test_inconsistent_composite(self, tmp_path):
        path = tmp_path / 'x_coeffs.csv'
        path.write_text("# N=11 w=1\nn,a_n\n1,1\n2,-2\n3,-1\n4,2\n5,1\n6,3\n")
        with pytest.raises(ConfigError):
            load_coeff_file(path)

    def test_mismatch_with_curve(self, tmp_path, curve_11a):
        path = tmp_path / 'x_coeffs.csv'
        path.write_text("# N=11 w=1\nn,a_n\n1,1\n2,-2\n3,1\n5,1\n7,-2\n")
        table = load_coeff_file(path)
        report = compare_with_curve(table, curve_11a)
        assert not report['ok']
        assert 3 in report['mismatches']
