import numpy as np
import pytest
from scipy.optimize import linprog

from sepkit.cascade import (
    ALWAYS_PASS,
    METHOD_FISHER,
    METHOD_PERCEPTRON,
    METHOD_VACUOUS,
    CascadePair,
    complementary_set,
    fit_second_stage,
    pair_fire,
    pair_second_scores,
    project_to_hyperplane,
)
from sepkit.data import RngSpec
from sepkit.errors import ValidationError
from sepkit.nodes import CorrectorNode


def node(w, c, cid=0):
    w = np.asarray(w, dtype=float)
    return CorrectorNode(w / np.linalg.norm(w), float(c), cid)


class TestComplementarySet:
    def test_empty_when_threshold_above_everything(self):
        points = RngSpec(0).generator().standard_normal(size=(30, 3))
        result = complementary_set(node([1, 0, 0], 100.0), points)
        assert result.shape[0] == 0

    def test_hand_built(self):
        points = np.array([[0.9, 0.0], [0.0, 0.9]])
        result = complementary_set(node([1, 0], 0.5), points)
        assert np.array_equal(result, [[0.9, 0.0]])

    def test_count_matches_brute_force(self):
        points = RngSpec(1).generator().standard_normal(size=(100, 4))
        nd = node([1, 1, 0, 0], 0.3)
        result = complementary_set(nd, points)
        brute = sum(1 for x in points if x @ nd.w >= nd.c)
        assert result.shape[0] == brute


class TestProjection:
    def test_fixed_point(self):
        nd = node([0, 1], 2.0)
        x = np.array([7.0, 2.0])
        assert np.allclose(project_to_hyperplane(nd, x), x, atol=1e-12)

    def test_arithmetic(self):
        image = project_to_hyperplane(node([1, 0], 0.5), np.array([2.0, 3.0]))
        assert np.allclose(image, [0.5, 3.0], atol=1e-12)

    def test_idempotent(self):
        nd = node([1, 2, -1], 0.7)
        x = RngSpec(2).generator().standard_normal(size=(10, 3))
        once = project_to_hyperplane(nd, x)
        twice = project_to_hyperplane(nd, once)
        assert np.allclose(once, twice, atol=1e-12)

    def test_image_on_plane(self):
        nd = node([3, -1, 2], -0.4)
        x = RngSpec(3).generator().standard_normal(size=(25, 3))
        image = project_to_hyperplane(nd, x)
        assert np.abs(image @ nd.w - nd.c).max() < 1e-10


def lp_separable(neg, pos):
    """Exact feasibility oracle: strict separation via a margin-1 LP."""
    dim = pos.shape[1]
    rows = []
    for x in neg:
        rows.append(np.r_[x, -1.0])          # w.x - c <= -1
    for x in pos:
        rows.append(np.r_[-x, 1.0])          # -(w.x - c) <= -1
    a_ub = np.array(rows)
    b_ub = -np.ones(len(rows))
    res = linprog(np.zeros(dim + 1), A_ub=a_ub, b_ub=b_ub,
                  bounds=[(None, None)] * (dim + 1), method="highs")
    return res.success


class TestSecondStage:
    def test_separable_line(self):
        w2, c2, method = fit_second_stage(np.array([[-1.0, 0.0]]), np.array([[1.0, 0.0]]))
        assert method == METHOD_PERCEPTRON
        assert np.array([[-1.0, 0.0]]) @ w2 - c2 < 0
        assert np.array([[1.0, 0.0]]) @ w2 - c2 >= 0

    def test_perceptron_sign_contract(self):
        g = RngSpec(4).generator()
        neg = g.standard_normal(size=(20, 3)) - 4.0
        pos = g.standard_normal(size=(15, 3)) + 4.0
        w2, c2, method = fit_second_stage(neg, pos, rng=RngSpec(5))
        assert method == METHOD_PERCEPTRON
        assert (neg @ w2 - c2 < 0).all()
        assert (pos @ w2 - c2 >= 0).all()

    def test_empty_pickups_vacuous(self):
        pos = np.array([[1.0, 2.0], [3.0, 4.0]])
        w2, c2, method = fit_second_stage(np.empty((0, 2)), pos)
        assert method == METHOD_VACUOUS
        assert c2 == ALWAYS_PASS

    def test_vacuous_pair_equals_bare_node(self):
        nd = node([1, 1], 0.4)
        pair = CascadePair(nd, np.array([1.0, 0.0]), ALWAYS_PASS, METHOD_VACUOUS)
        points = RngSpec(6).generator().standard_normal(size=(50, 2))
        node_fired = points @ nd.w >= nd.c
        pair_fired = node_fired & (pair_second_scores(points, pair) >= pair.c2)
        assert np.array_equal(node_fired, pair_fired)

    def test_fallback_on_inseparable(self):
        neg = np.array([[0.0, 0.0], [2.0, 0.0]])
        pos = np.array([[1.0, 0.0], [3.0, 0.0]])  # interleaved: not separable
        assert not lp_separable(neg, pos)
        w2, c2, method = fit_second_stage(neg, pos, max_epochs=20, rng=RngSpec(7))
        assert method == METHOD_FISHER
        assert (pos @ w2 - c2 >= 0).all()  # cluster side still fires

    def test_both_empty(self):
        with pytest.raises(ValidationError):
            fit_second_stage(np.empty((0, 2)), np.empty((0, 2)))

    def test_general_position_separates(self):
        # Up to m+1 points in general position on an m-dim plane are
        # linearly separable; the perceptron must agree with an exact
        # LP feasibility oracle there.
        g = RngSpec(8).generator()
        for trial in range(20):
            dim = int(g.integers(3, 6))
            n_neg = int(g.integers(1, dim))
            n_pos = int(g.integers(1, dim - n_neg + 2))
            neg = g.standard_normal(size=(n_neg, dim))
            pos = g.standard_normal(size=(n_pos, dim))
            assert lp_separable(neg, pos)
            _, _, method = fit_second_stage(neg, pos, rng=RngSpec(9, trial))
            assert method == METHOD_PERCEPTRON


class TestPairFire:
    def test_conjunction(self):
        from sepkit.preprocess import PreprocessModel

        prep = PreprocessModel(np.zeros(2), np.eye(2), np.eye(2), False)
        nd = node([1, 0], 0.5)
        pair = CascadePair(nd, np.array([0.0, 1.0]), 0.0, METHOD_PERCEPTRON)
        assert not pair_fire(prep, pair, np.array([0.0, 5.0]))   # first stage vetoes
        assert pair_fire(prep, pair, np.array([1.0, 1.0]))
        assert not pair_fire(prep, pair, np.array([1.0, -1.0]))  # second stage vetoes

    def test_second_stage_ignores_normal_component(self):
        nd = node([1, 0, 0], 0.2)
        pair = CascadePair(nd, np.array([0.0, 1.0, 0.0]), 0.1, METHOD_PERCEPTRON)
        x = np.array([[0.5, 0.3, -0.2]])
        shifted = x + 2.0 * nd.w
        assert pair_second_scores(x, pair)[0] == pytest.approx(
            pair_second_scores(shifted, pair)[0], abs=1e-12
        )
