import math

import numpy as np
import pytest

from cqclab.capacity2 import (
    BoxViolationError,
    constraint_value,
    eliminate_gamma2,
    objective_2user,
    solve_capacity_2user,
    solve_on_alpha_slice,
)
from cqclab.dist import h_tilde


class TestObjective:
    def test_reported_operating_point(self):
        assert objective_2user(0.177, 0.43, 0.407) == pytest.approx(0.8114, abs=5e-4)

    def test_all_short_windows_zero_rate(self):
        assert objective_2user(1.0, 0.0, 0.3) == 0.0

    def test_all_long_windows_uniform(self):
        assert objective_2user(0.0, 0.1, 0.5) == pytest.approx(
            math.log2(3) / 2, abs=1e-12
        )

    @pytest.mark.parametrize(
        "args",
        [(-0.1, 0.3, 0.3), (1.5, 0.3, 0.3), (0.5, 0.6, 0.3), (0.5, 0.3, 0.7)],
    )
    def test_box_violations(self, args):
        with pytest.raises(BoxViolationError):
            objective_2user(*args)


class TestSolve:
    def test_capacity_and_maximizer(self, cap2):
        assert cap2.capacity_bits_per_slot == pytest.approx(0.8114, abs=5e-4)
        assert cap2.alpha == pytest.approx(0.177, abs=0.01)
        assert cap2.gamma1 == pytest.approx(0.43, abs=0.01)
        assert cap2.gamma2 == pytest.approx(0.407, abs=0.01)

    def test_constraint_and_boxes(self, cap2):
        assert cap2.constraint_residual < 1e-9
        assert 0 <= cap2.alpha <= 1
        assert 0 <= cap2.gamma1 <= 0.5
        assert 0 <= cap2.gamma2 <= 0.5

    def test_dominates_feasible_samples(self, cap2):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a = float(rng.uniform(0, 0.99))
            g1 = float(rng.uniform(0, 0.5))
            g2 = eliminate_gamma2(a, g1)
            if not 0 <= g2 <= 0.5:
                continue
            assert objective_2user(a, g1, g2) <= cap2.capacity_bits_per_slot + 1e-9

    def test_alpha_zero_slice(self):
        res = solve_on_alpha_slice(0.0)
        assert res.capacity_bits_per_slot == pytest.approx(
            math.log2(3) / 2, abs=1e-9
        )
        assert res.gamma2 == pytest.approx(0.5, abs=1e-9)

    def test_alpha_one_slice_forces_zero(self):
        res = solve_on_alpha_slice(1.0)
        assert res.capacity_bits_per_slot == 0.0
        assert res.gamma1 == 0.0

    def test_zero_rate_slice(self):
        # gamma1 = gamma2 = 0 is feasible only at alpha = 1 and carries nothing
        assert constraint_value(1.0, 0.0, 0.0) == pytest.approx(1.0)
        assert objective_2user(1.0, 0.0, 0.0) == 0.0

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValueError):
            solve_capacity_2user(tolerance=0.0)


class TestConcavityAlongConstraint:
    def test_scheme_mixtures_dominate(self):
        # mixing two feasible schemes in measure space stays feasible and
        # cannot lose objective (mixture concavity of the ceiling)
        rng = np.random.default_rng(11)
        for _ in range(300):
            pts = []
            while len(pts) < 2:
                a = float(rng.uniform(0, 0.98))
                g1 = float(rng.uniform(0, 0.5))
                g2 = eliminate_gamma2(a, g1)
                if 0 <= g2 <= 0.5:
                    pts.append((a, g1, g2))
            (a1, g11, g21), (a2, g12, g22) = pts
            am = 0.5 * (a1 + a2)
            g1m = (0.5 * a1 * g11 + 0.5 * a2 * g12) / am if am else 0.0
            g2m = (0.5 * (1 - a1) * g21 + 0.5 * (1 - a2) * g22) / (1 - am)
            assert constraint_value(am, g1m, g2m) == pytest.approx(1.0, abs=1e-12)
            mixed = objective_2user(am, g1m, g2m)
            mean = 0.5 * objective_2user(a1, g11, g21) + 0.5 * objective_2user(
                a2, g12, g22
            )
            assert mixed >= mean - 1e-9


def test_window_value_baselines(cap2):
    # the optimum beats both pure-window baselines
    pure_short = h_tilde(0.0, 1).bits_per_slot  # budget forces gamma1 = 0
    pure_long = h_tilde(0.5, 2).bits_per_slot
    assert cap2.capacity_bits_per_slot >= max(pure_short, pure_long)
