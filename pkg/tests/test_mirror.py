import numpy as np
import pytest

from imocp.mirror import InverseMapError, MirrorMap
from imocp.priors import Regularizer, Uniform
from oracles import bisect_increasing


@pytest.fixture
def mirror(regularizer):
    return MirrorMap(regularizer)


class TestForward:
    def test_uniform_examples(self):
        m = MirrorMap(Regularizer(Uniform(1.0), alpha=0.1, sigma=0.5))
        assert m.forward(0.0) == pytest.approx(-0.9, abs=1e-15)
        assert m.forward(1.0) == pytest.approx(0.6, abs=1e-15)

    def test_delegates_to_gradient(self, mirror, regularizer):
        for r in np.linspace(-1, 2, 31):
            assert mirror.forward(r) == regularizer.grad(r)

    def test_strictly_increasing(self, mirror):
        vals = [mirror.forward(r) for r in np.linspace(-1, 2, 3001)]
        assert np.all(np.diff(vals) > 0)


class TestInverse:
    def test_uniform_affine_example(self):
        m = MirrorMap(Regularizer(Uniform(1.0), alpha=0.1, sigma=0.5))
        assert m.inverse(0.15) == pytest.approx(0.7, abs=1e-12)
        assert bisect_increasing(m.forward, 0.15, -5.0, 5.0) == pytest.approx(0.7, abs=1e-12)

    def test_branch_boundaries(self, mirror):
        assert mirror.inverse(mirror.forward(0.0)) == 0.0
        assert mirror.inverse(mirror.forward(1.0)) == 1.0

    def test_outer_branches_closed_form(self, mirror):
        # slope sigma outside the support
        assert mirror.inverse(-0.9 - 0.5) == pytest.approx(-1.0, abs=1e-15)
        assert mirror.inverse(0.1 + 1.0) == pytest.approx(2.0, abs=1e-15)

    def test_round_trip(self, mirror):
        rng = np.random.default_rng(42)
        rs = rng.uniform(-1.0, 2.0, 1000)
        err = max(abs(mirror.inverse(mirror.forward(r)) - r) for r in rs)
        assert err <= 1e-10
        ds = rng.uniform(mirror.forward(-1.0), mirror.forward(2.0), 1000)
        err = max(abs(mirror.forward(mirror.inverse(d)) - d) for d in ds)
        assert err <= 1e-12

    def test_matches_bisection_oracle(self, mirror):
        for d in np.linspace(-0.89, 0.59, 40):
            expected = bisect_increasing(mirror.forward, d, -5.0, 5.0)
            assert mirror.inverse(d) == pytest.approx(expected, abs=1e-11)

    def test_hint_does_not_change_result(self, mirror):
        for d, hint in [(-0.3, 0.01), (0.2, 0.99), (0.0, 5.0), (-0.5, None)]:
            assert mirror.inverse(d, hint=hint) == pytest.approx(mirror.inverse(d), abs=1e-11)

    def test_monotone_and_lipschitz(self, mirror, regularizer):
        rng = np.random.default_rng(8)
        mu = regularizer.mu
        for _ in range(1000):
            d1, d2 = sorted(rng.uniform(-2.0, 2.0, 2))
            r1, r2 = mirror.inverse(d1), mirror.inverse(d2)
            assert r1 <= r2
            assert r2 - r1 <= (d2 - d1) / mu + 1e-12

    def test_iteration_limit(self, regularizer):
        m = MirrorMap(regularizer, tolerance=1e-300, max_iterations=2)
        with pytest.raises(InverseMapError):
            m.inverse(-0.37)

    def test_rejects_bad_settings(self, regularizer):
        with pytest.raises(ValueError):
            MirrorMap(regularizer, tolerance=0.0)
        with pytest.raises(ValueError):
            MirrorMap(regularizer, max_iterations=0)
