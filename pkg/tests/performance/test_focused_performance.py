"""
Focused Performance Metrics for the p-adic L-function Workbench
Times the hot paths: Gauss sums, lattice balls, Bessel evaluation and finite-level measures
"""

import json
import os
import statistics
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List

# Add src path
project_root = Path(__file__).parent.parent.parent
sys.path.append(str(project_root / 'src'))

from models import archimedean, bt_lattice  # noqa: E402
from models.char_gauss import AddChar, gauss_sum, primitive_chars  # noqa: E402
from models.global_q import CURVES, GlobalMeasure, coeffs_from_curve  # noqa: E402
from models.local_dist import SPHERICAL, LocalDist, LocalRep, prop27_check  # noqa: E402
from models.padic_core import field  # noqa: E402


class TestBenchmarks:
    """pytest-benchmark suite for the hot paths"""

    def test_gauss_sums_level_two(self, benchmark):
        fld = field(7, 1, 20)
        psi = AddChar(fld)
        chars = primitive_chars(fld, 2)
        taus = benchmark(lambda: [gauss_sum(chi, psi) for chi in chars])
        assert all(abs(abs(t) - 7.0) < 1e-9 for t in taus)

    def test_lattice_ball(self, benchmark):
        fld = field(3, 1, 20)
        vertices = benchmark(bt_lattice.ball, fld, 3)
        assert len(vertices) > 0

    def test_bessel_grid(self, benchmark):
        grid = [0.1 * k for k in range(1, 200)]
        values = benchmark(lambda: [archimedean.bessel_K(0, x) for x in grid])
        assert all(v > 0 for v in values)

    def test_prop27_ramified(self, benchmark):
        fld = field(5, 1, 20)
        mu = LocalDist(LocalRep(fld, 2, 3, SPHERICAL))
        chi = primitive_chars(fld, 2)[0]
        report = benchmark(prop27_check, mu, chi, 1e-8)
        assert report["ok"]

    def test_finite_level_measure(self, benchmark, curve_11a, coeffs_11a):
        measure = GlobalMeasure(curve_11a, 5, n_trunc=1000, table=coeffs_11a)
        fl = benchmark.pedantic(measure.finite_level, args=(2,), rounds=2, iterations=1)
        assert len(fl.values) == 4 * 5


class FocusedPerformanceMetrics:
    """Stand-alone timing report, written to data/performance_report.json"""

    def __init__(self, repeats: int = 5):
        self.repeats = repeats
        self.results: Dict[str, Dict] = {}

        # Change to src directory for data access
        os.chdir(project_root / 'src')

    def _time(self, name: str, fn: Callable[[], object]) -> Dict:
        times: List[float] = []
        for _ in range(self.repeats):
            start_time = time.perf_counter()
            fn()
            times.append(time.perf_counter() - start_time)
        metrics = {
            'avg_ms': statistics.mean(times) * 1000,
            'max_ms': max(times) * 1000,
            'stdev_ms': statistics.stdev(times) * 1000 if len(times) > 1 else 0.0,
        }
        print(f"   ⏱️ {name}: {metrics['avg_ms']:.2f} ms avg, {metrics['max_ms']:.2f} ms max")
        self.results[name] = metrics
        return metrics

    def test_local_performance(self) -> Dict:
        """Gauss sums and the character integral"""
        print("🔢 Testing local computations...")
        fld = field(7, 1, 20)
        psi = AddChar(fld)
        chars = primitive_chars(fld, 2)
        self._time('gauss_sums_7_level2', lambda: [gauss_sum(chi, psi) for chi in chars])
        mu = LocalDist(LocalRep(field(5, 1, 20), 2, 3, SPHERICAL))
        chi = primitive_chars(mu.rep.field, 2)[0]
        return self._time('prop27_ramified', lambda: prop27_check(mu, chi, 1e-8))

    def test_tree_performance(self) -> Dict:
        print("🌳 Testing lattice balls...")
        return self._time('ball_q3_r3', lambda: bt_lattice.ball(field(3, 1, 20), 3))

    def test_archimedean_performance(self) -> Dict:
        print("📈 Testing Bessel evaluation...")
        grid = [0.1 * k for k in range(1, 200)]
        return self._time('bessel_K0_grid', lambda: [archimedean.bessel_K(0, x) for x in grid])

    def test_global_performance(self) -> Dict:
        print("🌐 Testing finite-level measures...")
        curve = CURVES['11a']
        table = coeffs_from_curve(curve, 1000)
        measure = GlobalMeasure(curve, 5, n_trunc=1000, table=table)
        return self._time('finite_level_11a_p5_n2', lambda: measure.finite_level(2))

    def generate_final_report(self) -> Dict:
        """Run every timing and save the report"""
        print("🚀 Generating performance report...")
        self.test_local_performance()
        self.test_tree_performance()
        self.test_archimedean_performance()
        self.test_global_performance()

        final_report = {
            'timestamp': time.strftime('%Y-%m-%d %H:%M:%S'),
            'repeats': self.repeats,
            'metrics': self.results,
            'slowest': max(self.results, key=lambda k: self.results[k]['avg_ms']),
        }

        report_path = project_root / 'data' / 'performance_report.json'
        report_path.parent.mkdir(exist_ok=True)
        with open(report_path, 'w') as f:
            json.dump(final_report, f, indent=2)

        print(f"   📄 Report saved: {report_path}")
        return final_report


if __name__ == "__main__":
    FocusedPerformanceMetrics().generate_final_report()
