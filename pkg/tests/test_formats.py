import numpy as np
import pytest

from cdqp import (
    ParseError,
    ValidationError,
    conjugacy_check,
    load_cache,
    load_problem,
    write_cache,
    write_problem,
    write_trace,
)
from cdqp.data import problem_path
from cdqp.solver import SolverSettings, solve
from helpers import SMALL_A, SMALL_L, SMALL_P, SMALL_Q, SMALL_U, random_box_problem


class TestProblemDocuments:
    def test_bundled_problem_matches_reference_data(self):
        prob = load_problem(problem_path())
        np.testing.assert_array_equal(prob.P, SMALL_P)
        np.testing.assert_array_equal(prob.q, SMALL_Q)
        np.testing.assert_array_equal(prob.A, SMALL_A)
        np.testing.assert_array_equal(prob.l, SMALL_L)
        np.testing.assert_array_equal(prob.u, SMALL_U)
        assert prob.name == "small-dense-4"

    def test_round_trip_exact(self, tmp_path, rng):
        for k in range(5):
            prob = random_box_problem(rng, int(rng.integers(1, 6)), int(rng.integers(1, 6)),
                                      with_infinite=True)
            path = tmp_path / f"p{k}.qp"
            write_problem(path, prob)
            back = load_problem(path)
            np.testing.assert_array_equal(back.P, prob.P)
            np.testing.assert_array_equal(back.q, prob.q)
            np.testing.assert_array_equal(back.A, prob.A)
            np.testing.assert_array_equal(back.l, prob.l)
            np.testing.assert_array_equal(back.u, prob.u)

    def test_infinite_bound_tokens(self, tmp_path):
        path = tmp_path / "oneside.qp"
        path.write_text(
            "n 1\nm 1\nP\n1\nq\n0\nA\n1\nl\n-inf\nu\n3\n", encoding="utf-8"
        )
        prob = load_problem(path)
        assert prob.l[0] == -np.inf and prob.u[0] == 3.0

    def test_inverted_bounds_report_index(self, tmp_path):
        path = tmp_path / "bad.qp"
        path.write_text(
            "n 1\nm 2\nP\n1\nq\n0\nA\n1\n1\nl\n0 5\nu\n1 2\n", encoding="utf-8"
        )
        with pytest.raises(ValidationError) as err:
            load_problem(path)
        assert err.value.index == 1

    def test_truncated_file_names_line(self, tmp_path):
        path = tmp_path / "trunc.qp"
        path.write_text("n 2\nm 2\nP\n1 0\n0", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            load_problem(path)
        assert "line" in str(err.value)

    def test_junk_token_rejected(self, tmp_path):
        path = tmp_path / "junk.qp"
        path.write_text("n 1\nm 1\nP\nbanana\nq\n0\nA\n1\nl\n0\nu\n1\n", encoding="utf-8")
        with pytest.raises(ParseError, match="banana"):
            load_problem(path)

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "c.qp"
        path.write_text(
            "# header\n\nn 1\nm 1 # trailing\nP\n2\nq\n0\nA\n1\nl\n-1\nu\n1\n",
            encoding="utf-8",
        )
        prob = load_problem(path)
        assert prob.P[0, 0] == 2.0


class TestCacheDocuments:
    def test_round_trip(self, tmp_path, small, small_offline):
        dirs, rho = small_offline
        path = tmp_path / "ref.cache"
        write_cache(path, dirs, rho, 1e-4)
        dirs2, rho2, sigma = load_cache(path)
        assert sigma == 1e-4
        assert dirs2.fingerprint == dirs.fingerprint
        assert dirs2.strategy == dirs.strategy
        np.testing.assert_array_equal(dirs2.directions, dirs.directions)
        np.testing.assert_array_equal(dirs2.t1, dirs.t1)
        np.testing.assert_array_equal(dirs2.t2, dirs.t2)
        np.testing.assert_array_equal(rho2.rho_base, rho.rho_base)
        assert conjugacy_check(dirs2, small, sigma, rho2, tol=1e-8).passed

    def test_missing_field_rejected(self, tmp_path, small_offline):
        dirs, rho = small_offline
        path = tmp_path / "broken.cache"
        write_cache(path, dirs, rho, 1e-4)
        text = path.read_text().replace("t2", "# t2 gone", 1)
        path.write_text(text)
        with pytest.raises(ParseError):
            load_cache(path)


class TestTraceFiles:
    def test_rows_match_iterations(self, tmp_path, small, small_offline):
        settings = SolverSettings(backend="cached-cd", rho_mode="offline", max_outer=3)
        result = solve(small, settings, offline=small_offline,
                       x0=np.array([1.0, 2.0, 3.0, 4.0]))
        path = tmp_path / "trace.csv"
        write_trace(path, result)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "k,r_prim_2,r_dual_2,scale"
        assert len(lines) == 1 + result.outer_iterations
        first = lines[1].split(",")
        assert first[0] == "1"
        assert float(first[3]) == result.rho_scale_history[0]
