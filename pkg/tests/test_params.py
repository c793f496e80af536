import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainreduce.params import (
    DimensionError, GradientMessage, InvariantError, ParamVector, TrainHyper, central_aggregate, chain_reduce,
    neighbor_aggregate, neighbor_round, pair_aggregate, sgd_step,
)


def pv(*vals, theta=1.0):
    return ParamVector(np.array(vals, dtype=float), theta)


def mean_oracle(vectors):
    # summation loop kept deliberately separate from the library code
    n = len(vectors)
    acc = [0.0] * len(vectors[0])
    for v in vectors:
        for i, x in enumerate(v):
            acc[i] += x
    return [a / n for a in acc]


def random_reduce_order(n, rng):
    """A random valid (sender, receiver) sequence over n holders."""
    alive = list(range(n))
    pairs = []
    while len(alive) > 1:
        s, r = rng.choice(len(alive), 2, replace=False)
        pairs.append((alive[s], alive[r]))
        alive.pop(s)
    return pairs


class TestParamVector:
    def test_theta_must_be_at_least_one(self):
        with pytest.raises(InvariantError):
            ParamVector(np.zeros(2), 0.5)

    def test_values_are_copied_and_read_only(self):
        arr = np.array([1.0, 2.0])
        v = ParamVector(arr)
        arr[0] = 99
        assert v.values[0] == 1.0
        with pytest.raises(ValueError):
            v.values[0] = 5

    def test_roundtrip(self):
        v = pv(1.5, -2.0, theta=3)
        w = ParamVector.from_dict(v.to_dict())
        assert w.allclose(v) and w.theta == 3

    def test_message_roundtrip(self):
        m = GradientMessage(2, pv(1.0, 2.0, theta=2), 7)
        back = GradientMessage.from_dict(m.to_dict())
        assert back.sender_id == 2 and back.iteration == 7 and back.theta == 2
        with pytest.raises(ValueError):
            GradientMessage(0, pv(1.0), -1)


def test_train_hyper_validation():
    with pytest.raises(ValueError):
        TrainHyper(eta=0)
    with pytest.raises(ValueError):
        TrainHyper(epochs=0)
    with pytest.raises(ValueError):
        TrainHyper(agg_rounds_per_epoch=0)


class TestCentral:
    def test_two_values(self):
        out = central_aggregate([pv(2), pv(4)])
        assert out.values.tolist() == [3.0] and out.theta == 2

    def test_single_is_identity(self):
        out = central_aggregate([pv(5, 5, 5)])
        assert out.values.tolist() == [5, 5, 5] and out.theta == 1

    def test_matches_oracle(self):
        rng = np.random.default_rng(0)
        vecs = [rng.normal(size=8) for _ in range(6)]
        out = central_aggregate([ParamVector(v) for v in vecs])
        np.testing.assert_allclose(out.values, mean_oracle(vecs), rtol=0, atol=1e-15)

    def test_errors(self):
        with pytest.raises(ValueError):
            central_aggregate([])
        with pytest.raises(DimensionError):
            central_aggregate([pv(1), pv(1, 2)])


class TestNeighbor:
    def test_examples(self):
        assert neighbor_aggregate(pv(4), [pv(2)], 1).values.tolist() == [3.0]
        assert neighbor_aggregate(pv(7.5), [pv(7.5), pv(7.5)], 2).values.tolist() == [7.5]
        assert neighbor_aggregate(pv(1), [pv(2), pv(3), pv(4)], 3).values.tolist() == [2.0]

    def test_m_must_match(self):
        with pytest.raises(ValueError):
            neighbor_aggregate(pv(1), [pv(2)], 2)

    def test_round_averages_over_devices(self):
        grads = [pv(1), pv(2), pv(3)]
        out = neighbor_round(grads, {0: [1], 1: [2], 2: [0]})
        # device j: (g_in + g_j)/2 ; then mean over devices equals the plain mean on a cycle
        assert out.values[0] == pytest.approx(2.0)

    def test_line_topology_is_biased(self):
        # iterated midpoint along a line: ((1+2)/2 + 3)/2 ... differs from the mean 2.5
        grads = [pv(1), pv(2), pv(3), pv(4)]
        acc = grads[0]
        for g in grads[1:]:
            acc = neighbor_aggregate(g, [acc], 1)
        assert acc.values[0] == pytest.approx(3.125)
        assert abs(acc.values[0] - 2.5) > 1e-6


class TestPair:
    def test_midpoint(self):
        out = pair_aggregate(pv(2), pv(4))
        assert out.values.tolist() == [3.0] and out.theta == 2

    def test_weighted(self):
        out = pair_aggregate(pv(3, theta=2), pv(6))
        assert out.values[0] == pytest.approx(4.0) and out.theta == 3

    def test_inputs_untouched(self):
        a, b = pv(1.0, 2.0), pv(3.0, 4.0)
        pair_aggregate(a, b)
        assert a.values.tolist() == [1.0, 2.0] and b.theta == 1

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            pair_aggregate(pv(1), pv(1, 2))

    def test_every_order_of_four(self):
        grads = [pv(1), pv(2), pv(3), pv(4)]
        seen = 0
        for perm in itertools.permutations(range(4)):
            # chain in permutation order plus a star variant
            pairs = [(perm[i], perm[i + 1]) for i in range(3)]
            surv, out = chain_reduce(grads, pairs)
            assert out.values[0] == pytest.approx(2.5, abs=1e-15) and out.theta == 4
            seen += 1
        assert seen == 24

    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=2),
           st.integers(1, 20), st.integers(1, 20))
    def test_commutative(self, xs, ta, tb):
        a, b = ParamVector(np.array([xs[0]]), ta), ParamVector(np.array([xs[1]]), tb)
        ab, ba = pair_aggregate(a, b), pair_aggregate(b, a)
        assert ab.theta == ba.theta == ta + tb
        assert ab.values[0] == pytest.approx(ba.values[0], abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2**32 - 1))
def test_chain_equivalence_property(n, seed):
    rng = np.random.default_rng(seed)
    grads = [ParamVector(rng.normal(size=5)) for _ in range(n)]
    _, out = chain_reduce(grads, random_reduce_order(n, rng))
    assert out.theta == n
    np.testing.assert_allclose(out.values, central_aggregate(grads).values, rtol=0, atol=1e-12)


def test_chain_reduce_rejects_bad_orders():
    grads = [pv(1), pv(2), pv(3)]
    with pytest.raises(ValueError):
        chain_reduce(grads, [(0, 1)])
    with pytest.raises(ValueError):
        chain_reduce(grads, [(0, 1), (0, 2)])


class TestSGD:
    def test_zero_gradient(self):
        assert sgd_step(pv(1, 1), pv(0, 0), 0.1).values.tolist() == [1, 1]

    def test_arithmetic(self):
        out = sgd_step(pv(1), pv(2), 0.5)
        assert out.values.tolist() == [0.0] and out.theta == 1

    def test_theta_reset(self):
        assert sgd_step(pv(1), pv(2, theta=5), 0.1).theta == 1

    def test_matches_loop(self):
        rng = np.random.default_rng(3)
        w, g = rng.normal(size=10), rng.normal(size=10)
        out = sgd_step(ParamVector(w), ParamVector(g), 0.01)
        for i in range(10):
            assert out.values[i] == w[i] - 0.01 * g[i]

    @given(st.floats(-10, 10), st.floats(1e-4, 1.0))
    def test_linear_in_gradient(self, a, eta):
        rng = np.random.default_rng(1)
        w, d = rng.normal(size=4), rng.normal(size=4)
        out = sgd_step(ParamVector(w), ParamVector(a * d), eta)
        np.testing.assert_allclose(out.values, w - a * eta * d, rtol=0, atol=1e-12)

    def test_errors(self):
        with pytest.raises(DimensionError):
            sgd_step(pv(1), pv(1, 2), 0.1)
        with pytest.raises(ValueError):
            sgd_step(pv(1), pv(1), 0.0)
