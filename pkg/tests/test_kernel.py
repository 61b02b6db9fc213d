import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stratselect.kernel import (
    DomainError,
    NoBracket,
    NoConvergence,
    RootConfig,
    find_root,
    lambert_w,
    normal_cdf,
    normal_pdf,
    normal_quantile,
)


class TestNormalPdf:
    def test_at_zero(self):
        assert normal_pdf(0.0) == pytest.approx(0.3989422804014327, abs=1e-16)

    def test_at_one(self):
        assert normal_pdf(1.0) == pytest.approx(0.24197072451914337, abs=1e-16)

    @given(st.floats(min_value=-20, max_value=20))
    def test_symmetry_and_positivity(self, z):
        assert normal_pdf(z) == normal_pdf(-z)
        assert normal_pdf(z) > 0.0

    def test_is_derivative_of_cdf(self):
        h = 1e-5
        for z in np.linspace(-6, 6, 121):
            fd = (normal_cdf(z + h) - normal_cdf(z - h)) / (2 * h)
            assert abs(fd - normal_pdf(z)) <= 1e-6

    def test_z_pdf_extrema_at_unit_z(self):
        # z * pdf(z) peaks at z = 1 and bottoms at z = -1.
        grid = np.linspace(-6, 6, 4001)
        vals = grid * normal_pdf(grid)
        assert grid[np.argmax(vals)] == pytest.approx(1.0, abs=5e-3)
        assert grid[np.argmin(vals)] == pytest.approx(-1.0, abs=5e-3)
        assert vals.max() == pytest.approx(normal_pdf(1.0), abs=1e-6)
        assert vals.min() == pytest.approx(-normal_pdf(1.0), abs=1e-6)


class TestNormalCdf:
    def test_at_zero(self):
        assert normal_cdf(0.0) == 0.5

    def test_at_one(self):
        assert normal_cdf(1.0) == pytest.approx(0.8413447460685429, abs=1e-15)

    def test_strictly_increasing(self):
        grid = np.linspace(-8, 8, 200)
        vals = normal_cdf(grid)
        assert np.all(np.diff(vals) > 0)
        assert np.all((vals > 0) & (vals < 1))

    def test_array_matches_scalar(self):
        grid = np.linspace(-5, 5, 11)
        vals = normal_cdf(grid)
        for z, v in zip(grid, vals):
            assert v == pytest.approx(normal_cdf(float(z)), abs=1e-16)


class TestNormalQuantile:
    @pytest.mark.parametrize("z", [-3.0, -1.0, 0.0, 1.0, 3.0])
    def test_inverse_pair(self, z):
        assert normal_quantile(normal_cdf(z)) == pytest.approx(z, abs=1e-10)

    def test_median(self):
        assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.7])
    def test_rejects_out_of_range(self, p):
        with pytest.raises(DomainError):
            normal_quantile(p)

    def test_rejects_bad_arrays(self):
        with pytest.raises(DomainError):
            normal_quantile(np.array([0.5, 1.0]))

    @given(st.floats(min_value=1e-12, max_value=1.0 - 1e-12))
    def test_roundtrip_from_probability(self, p):
        assert normal_cdf(normal_quantile(p)) == pytest.approx(p, rel=1e-9, abs=1e-13)


class TestLambertW:
    def test_principal_at_zero(self):
        assert lambert_w("principal", 0.0) == 0.0

    def test_principal_at_e(self):
        assert lambert_w("principal", math.e) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("branch", ["principal", "minus_one"])
    def test_branch_point(self, branch):
        assert lambert_w(branch, -math.exp(-1.0)) == -1.0

    def test_minus_one_branch_example(self):
        w = lambert_w("minus_one", -0.1)
        assert w < -1.0
        assert abs(w * math.exp(w) + 0.1) <= 1e-12
        assert w == pytest.approx(-3.5771520639572972, abs=1e-12)

    def test_principal_branch_range(self):
        assert lambert_w("principal", -0.1) == pytest.approx(
            -0.11183255915896296, abs=1e-14
        )

    @pytest.mark.parametrize(
        "branch, x",
        [("principal", -0.5), ("minus_one", -0.5), ("minus_one", 0.1), ("minus_one", 0.0)],
    )
    def test_domain_errors(self, branch, x):
        with pytest.raises(DomainError):
            lambert_w(branch, x)

    def test_unknown_branch(self):
        with pytest.raises(ValueError):
            lambert_w("zero", 1.0)

    @given(st.floats(min_value=-0.3678, max_value=100.0))
    def test_principal_residual(self, x):
        w = lambert_w("principal", x)
        assert w >= -1.0 - 1e-12
        assert abs(w * math.exp(w) - x) <= 1e-10 * max(1.0, abs(x))

    @given(st.floats(min_value=-0.3678, max_value=-1e-12))
    def test_minus_one_residual(self, x):
        w = lambert_w("minus_one", x)
        assert w <= -1.0 + 1e-12
        assert abs(w * math.exp(w) - x) <= 1e-10 * max(1.0, abs(x))

    def test_near_branch_point_both_branches(self):
        # This singular neighbourhood is exactly where the three-root window
        # degenerates, so the residual must stay tight.
        for eps in (1e-13, 1e-10, 1e-7, 1e-4):
            x = -math.exp(-1.0) + eps
            for branch in ("principal", "minus_one"):
                w = lambert_w(branch, x)
                assert abs(w * math.exp(w) - x) <= 1e-10


class TestFindRoot:
    def test_linear(self):
        assert find_root(lambda x: x - 2.0, 0.0, 5.0) == pytest.approx(2.0, abs=1e-12)

    def test_cosine(self):
        root = find_root(math.cos, 1.0, 2.0)
        assert root == pytest.approx(math.pi / 2.0, abs=1e-10)

    def test_no_bracket(self):
        with pytest.raises(NoBracket):
            find_root(lambda x: x * x, 1.0, 2.0)

    def test_no_convergence(self):
        cfg = RootConfig(abs_tol=1e-15, max_iter=2)
        with pytest.raises(NoConvergence):
            find_root(math.cos, 1.0, 2.0, cfg)

    def test_endpoint_root(self):
        assert find_root(lambda x: x, 0.0, 1.0) == 0.0

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            find_root(lambda x: x, 2.0, 1.0)

    @given(st.floats(min_value=-50.0, max_value=50.0))
    def test_shifted_cubic(self, c):
        root = find_root(lambda x: (x - c) ** 3, c - 10.0, c + 11.0)
        assert root == pytest.approx(c, abs=1e-4)

    def test_deterministic(self):
        f = lambda x: math.expm1(x) - 0.5
        assert find_root(f, -1.0, 1.0) == find_root(f, -1.0, 1.0)


class TestRootConfig:
    def test_defaults(self):
        cfg = RootConfig()
        assert cfg.abs_tol == 1e-12
        assert cfg.max_iter == 200

    @pytest.mark.parametrize("kwargs", [{"abs_tol": 0.0}, {"abs_tol": -1.0}, {"max_iter": 0}])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            RootConfig(**kwargs)
