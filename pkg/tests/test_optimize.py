import math

import numpy as np
import pytest

from d2dsched.model import CGBC, RBC
from d2dsched.optimize import (golden_section_minimize, iteration_bound,
                               optimize_delta, select_scheme)


class TestIterationBound:
    def test_paper_case(self):
        assert iteration_bound(1.0, 1e-6) == 29

    def test_trivial(self):
        assert iteration_bound(1e-6, 1e-6) == 0

    def test_direct_logarithm(self):
        # ceil(ln(100)/ln(K)) = 10
        assert iteration_bound(1.0, 0.01) == 10

    def test_rejects_bad(self):
        with pytest.raises(ValueError):
            iteration_bound(0.0, 1e-6)
        with pytest.raises(ValueError):
            iteration_bound(1.0, 0.0)


class TestGoldenSection:
    def test_quadratic(self):
        x, fx, iters = golden_section_minimize(lambda x: (x - 0.3) ** 2,
                                               0.0, 1.0, 1e-6)
        assert abs(x - 0.3) <= 1e-6
        assert iters == 29

    @pytest.mark.parametrize("f,lo,hi,x_star", [
        (lambda x: abs(x - 0.7), 0.0, 1.0, 0.7),
        (lambda x: math.cosh(x - 2.0), 0.0, 5.0, 2.0),
        (lambda x: -math.exp(-(x - 1.2) ** 2), -1.0, 4.0, 1.2),
    ])
    def test_unimodal_functions(self, f, lo, hi, x_star):
        eps = 1e-6
        x, fx, iters = golden_section_minimize(f, lo, hi, eps)
        assert abs(x - x_star) <= eps
        assert iters == iteration_bound(hi - lo, eps)

    def test_constant_function(self):
        x, fx, iters = golden_section_minimize(lambda x: 2.5, 0.0, 1.0, 1e-4)
        assert 0.0 <= x <= 1.0
        assert fx == 2.5

    def test_evaluation_count(self):
        # n iterations take exactly n + 1 objective evaluations
        calls = []

        def f(x):
            calls.append(x)
            return (x - 0.42) ** 2

        _, _, iters = golden_section_minimize(f, 0.0, 1.0, 1e-6)
        assert iters == 29
        assert len(calls) == iters + 1

    def test_bracket_shrinks_per_iteration(self):
        # accuracy scales like K^-n: tightening eps by K adds one iteration
        for eps, n_want in ((1e-2, 10), (1e-4, 20), (1e-6, 29)):
            _, _, iters = golden_section_minimize(lambda x: (x - 0.5) ** 2,
                                                  0.0, 1.0, eps)
            assert iters == n_want == iteration_bound(1.0, eps)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            golden_section_minimize(lambda x: math.nan, 0.0, 1.0, 1e-3)

    def test_rejects_bad_interval(self):
        with pytest.raises(ValueError):
            golden_section_minimize(lambda x: x, 1.0, 0.0, 1e-3)


class TestOptimizeDelta:
    def test_rbc_reference(self, params64):
        res = optimize_delta(params64, RBC)
        assert res.delta_star == pytest.approx(0.59, abs=0.05)
        assert res.reduction_pct == pytest.approx(6.0, abs=3.0)
        assert res.tau_star is None and res.tau_star_db is None

    def test_cgbc_reference(self, params16, params64):
        res16 = optimize_delta(params16, CGBC)
        assert res16.delta_star == pytest.approx(0.37, abs=0.05)
        assert res16.reduction_pct == pytest.approx(40.0, abs=5.0)
        assert math.exp(-res16.tau_star) == pytest.approx(res16.delta_star,
                                                          rel=1e-12)
        res64 = optimize_delta(params64, CGBC)
        assert res64.delta_star == pytest.approx(0.32, abs=0.05)
        assert res64.reduction_pct == pytest.approx(49.0, abs=5.0)

    def test_never_worse_than_conventional(self, params16, params64):
        for p in (params16, params64):
            for kind in (RBC, CGBC):
                res = optimize_delta(p, kind)
                assert res.d_star <= res.d_conventional * (1 + 1e-12)
                assert res.iterations >= 1
                assert 0 < res.delta_star <= 1

    def test_grid_verification(self, params64):
        # the optimum beats a fresh uniform verification grid
        from d2dsched.analytics import delay
        from d2dsched.model import ClusteringScheme
        res = optimize_delta(params64, RBC)
        grid = np.linspace(1e-3, 1.0, 100)
        best_grid = min(delay(params64, ClusteringScheme(RBC, float(g)))
                        for g in grid)
        assert res.d_star <= best_grid + 1e-9

    def test_rbc_low_density_stays_conventional(self, params16):
        res = optimize_delta(params16, RBC)
        assert res.delta_star == 1.0
        assert res.reduction_pct == 0.0


class TestSelectScheme:
    def test_picks_elementwise_minimum(self, params16, params64):
        for p in (params16, params64):
            both = {k: optimize_delta(p, k) for k in (RBC, CGBC)}
            sel = select_scheme(p)
            best = min(both.values(), key=lambda r: r.d_star)
            assert sel.scheme.kind == best.scheme.kind
            assert sel.d_star == best.d_star

    def test_reference_selects_gain_based(self, params16, params64):
        assert select_scheme(params16).scheme.kind == CGBC
        assert select_scheme(params64).scheme.kind == CGBC
