import numpy as np
import pytest

from cdqp import (
    Iterate,
    QpProblem,
    ValidationError,
    project_box,
    residuals,
    validate,
)
from helpers import SMALL_A, SMALL_L, SMALL_P, SMALL_Q, SMALL_U, random_box_problem


class TestValidate:
    def test_accepts_reference_data(self):
        prob = validate(QpProblem(P=SMALL_P, q=SMALL_Q, A=SMALL_A, l=SMALL_L, u=SMALL_U))
        assert prob.n == 4 and prob.m == 4
        np.testing.assert_array_equal(prob.P, prob.P.T)
        assert not prob.P.flags.writeable

    def test_symmetrizes_p(self):
        P = np.array([[2.0, 1.0 + 1e-14], [1.0, 2.0]])
        prob = validate(QpProblem(P=P, q=np.zeros(2), A=np.eye(2), l=-np.ones(2), u=np.ones(2)))
        assert prob.P[0, 1] == prob.P[1, 0]

    def test_bound_inversion_names_index(self):
        with pytest.raises(ValidationError) as err:
            validate(QpProblem(P=np.eye(1), q=np.zeros(1), A=np.eye(1),
                               l=np.array([0.0]), u=np.array([-1.0])))
        assert err.value.index == 0
        assert "inverted" in str(err.value)

    def test_indefinite_p(self):
        with pytest.raises(ValidationError, match="semidefinite"):
            validate(QpProblem(P=np.array([[-1.0]]), q=np.zeros(1), A=np.eye(1),
                               l=np.array([-1.0]), u=np.array([1.0])))

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(q=np.zeros(3)),
            dict(A=np.ones((2, 3))),
            dict(l=np.zeros(3)),
            dict(u=np.zeros(3)),
        ],
    )
    def test_dimension_mismatch(self, kwargs):
        base = dict(P=np.eye(2), q=np.zeros(2), A=np.eye(2), l=-np.ones(2), u=np.ones(2))
        base.update(kwargs)
        with pytest.raises(ValidationError):
            validate(QpProblem(**base))

    def test_forbidden_infinite_bounds(self):
        with pytest.raises(ValidationError):
            validate(QpProblem(P=np.eye(1), q=np.zeros(1), A=np.eye(1),
                               l=np.array([np.inf]), u=np.array([np.inf])))
        with pytest.raises(ValidationError):
            validate(QpProblem(P=np.eye(1), q=np.zeros(1), A=np.eye(1),
                               l=np.array([-np.inf]), u=np.array([-np.inf])))

    def test_nan_rejected(self):
        with pytest.raises(ValidationError):
            validate(QpProblem(P=np.array([[np.nan]]), q=np.zeros(1), A=np.eye(1),
                               l=np.array([0.0]), u=np.array([1.0])))


class TestProjectBox:
    def test_clamp(self):
        out = project_box(np.array([5.0, -3.0]), np.array([-2.0, -1.0]), np.array([10.0, 1.0]))
        np.testing.assert_array_equal(out, [5.0, -1.0])

    def test_fixed_point_at_lower(self):
        l = np.array([-2.0, -1.0])
        u = np.array([10.0, 1.0])
        np.testing.assert_array_equal(project_box(l, l, u), l)

    def test_one_sided_bound(self):
        out = project_box(np.array([7.0]), np.array([-np.inf]), np.array([3.0]))
        np.testing.assert_array_equal(out, [3.0])

    def test_idempotent(self, rng):
        for _ in range(50):
            m = int(rng.integers(1, 9))
            l = rng.normal(size=m) - rng.uniform(0, 2, m)
            u = l + rng.uniform(0, 3, m)
            l = np.where(rng.random(m) < 0.2, -np.inf, l)
            u = np.where(rng.random(m) < 0.2, np.inf, u)
            v = 5 * rng.normal(size=m)
            once = project_box(v, l, u)
            np.testing.assert_array_equal(project_box(once, l, u), once)

    def test_nonexpansive(self, rng):
        for _ in range(50):
            m = int(rng.integers(1, 9))
            l = rng.normal(size=m) - 1
            u = l + rng.uniform(0, 3, m)
            v = 5 * rng.normal(size=m)
            w = 5 * rng.normal(size=m)
            lhs = np.linalg.norm(project_box(v, l, u) - project_box(w, l, u))
            assert lhs <= np.linalg.norm(v - w) + 1e-12


class TestResiduals:
    def test_origin(self, small):
        res = residuals(small, Iterate(x=np.zeros(4), z=np.zeros(4), y=np.zeros(4)))
        np.testing.assert_array_equal(res.r_prim, np.zeros(4))
        np.testing.assert_array_equal(res.r_dual, small.q)

    def test_kkt_point_gives_zero(self, rng):
        # Manufacture a problem whose stationarity holds at a chosen point.
        prob = random_box_problem(rng, 3, 4)
        x = rng.normal(size=3)
        y = rng.normal(size=4)
        q = -(prob.P @ x + prob.A.T @ y)
        prob = validate(QpProblem(P=prob.P, q=q, A=prob.A, l=prob.l, u=prob.u))
        res = residuals(prob, Iterate(x=x, z=prob.A @ x, y=y))
        assert res.prim_norm_inf == 0.0
        assert res.dual_norm_inf <= 1e-12

    def test_norms_recomputable_exactly(self, small, rng):
        it = Iterate(x=rng.normal(size=4), z=rng.normal(size=4), y=rng.normal(size=4))
        res = residuals(small, it)
        assert res.prim_norm_2 == float(np.linalg.norm(res.r_prim))
        assert res.dual_norm_2 == float(np.linalg.norm(res.r_dual))
        assert res.prim_norm_inf == float(np.max(np.abs(res.r_prim)))
        assert res.dual_norm_inf == float(np.max(np.abs(res.r_dual)))

    def test_affine_in_iterate(self, small, rng):
        x1, z1, y1 = rng.normal(size=4), rng.normal(size=4), rng.normal(size=4)
        x2, z2, y2 = rng.normal(size=4), rng.normal(size=4), rng.normal(size=4)
        a = 0.37
        blend = residuals(small, Iterate(x=a * x1 + (1 - a) * x2,
                                         z=a * z1 + (1 - a) * z2,
                                         y=a * y1 + (1 - a) * y2))
        r1 = residuals(small, Iterate(x=x1, z=z1, y=y1))
        r2 = residuals(small, Iterate(x=x2, z=z2, y=y2))
        np.testing.assert_allclose(blend.r_prim, a * r1.r_prim + (1 - a) * r2.r_prim,
                                   atol=1e-12)
        # Dual residual is affine (the +q enters both sides once).
        np.testing.assert_allclose(blend.r_dual, a * r1.r_dual + (1 - a) * r2.r_dual,
                                   atol=1e-12)
