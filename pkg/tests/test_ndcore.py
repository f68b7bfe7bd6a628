import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from twostep import ndcore as nd

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def param(store, name, value, trainable=True):
    return store.add(name, np.asarray(value, dtype=float), trainable)


def check(loss_fn, store, bound=1e-6, **kw):
    err = nd.grad_check(loss_fn, store, **kw)
    assert err < bound, err


class TestConv1d:
    def test_hand_example(self):
        out = nd.conv1d(nd.Tensor([[1.0], [2.0], [4.0], [7.0]]), nd.Tensor([[[1.0]], [[-1.0]]]), nd.Tensor([0.0]))
        assert out.data.ravel().tolist() == [-1.0, -2.0, -3.0]

    def test_identity_kernel(self):
        x = np.random.default_rng(0).normal(size=(6, 1))
        out = nd.conv1d(nd.Tensor(x), nd.Tensor([[[1.0]]]), nd.Tensor([0.0]))
        assert np.array_equal(out.data, x)

    def test_zero_input_gives_bias(self):
        out = nd.conv1d(nd.Tensor(np.zeros((5, 3))), nd.Tensor(np.ones((2, 3, 4))), nd.Tensor([1.0, 2, 3, 4]))
        assert np.array_equal(out.data, np.tile([1.0, 2, 3, 4], (4, 1)))

    def test_too_short(self):
        with pytest.raises(ValueError, match="shorter"):
            nd.conv1d(nd.Tensor(np.zeros((2, 1))), nd.Tensor(np.zeros((3, 1, 1))), nd.Tensor([0.0]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**16), finite, finite)
    def test_linearity(self, seed, a, b):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=(2, 9, 3)), rng.normal(size=(2, 9, 3))
        f = nd.Tensor(rng.normal(size=(3, 3, 4)))
        zero = nd.Tensor(np.zeros(4))
        lhs = nd.conv1d(nd.Tensor(a * x + b * y), f, zero).data
        rhs = a * nd.conv1d(nd.Tensor(x), f, zero).data + b * nd.conv1d(nd.Tensor(y), f, zero).data
        assert np.allclose(lhs, rhs, atol=1e-9)

    def test_onehot_variant_matches_dense(self):
        rng = np.random.default_rng(1)
        ids = rng.integers(0, 8, size=(3, 10))
        ids[0, 7:] = 7                        # id == depth acts as PAD
        s = nd.ParamStore()
        f, b = param(s, "f.weight", rng.normal(size=(3, 7, 4))), param(s, "f.bias", rng.normal(size=4))
        dense = nd.conv1d(nd.onehot(ids, 7), f, b)
        fast = nd.conv1d_onehot(ids, 7, f, b)
        assert np.allclose(dense.data, fast.data, atol=1e-12)
        nd.backward(nd.sum_squares(fast))
        g_fast = f.grad.copy(), b.grad.copy()
        f.grad = b.grad = None
        nd.backward(nd.sum_squares(nd.conv1d(nd.onehot(ids, 7), f, b)))
        assert np.allclose(g_fast[0], f.grad) and np.allclose(g_fast[1], b.grad)


class TestPooling:
    def test_maxpool_examples(self):
        x = nd.Tensor(np.array([1.0, 3, 2, 5])[:, None])
        assert nd.maxpool1d(x, 2, 2).data.ravel().tolist() == [3, 5]
        assert nd.maxpool1d(x, 4, 4).data.ravel().tolist() == [5]
        y = nd.Tensor(np.array([5.0, 1, 1, 1, 1, 9])[:, None])
        assert nd.maxpool1d(y, 3, 3).data.ravel().tolist() == [5, 9]

    def test_maxpool_too_short(self):
        with pytest.raises(ValueError):
            nd.maxpool1d(nd.Tensor(np.zeros((2, 1))), 3)

    def test_global_examples(self):
        assert nd.global_maxpool(nd.Tensor([[1.0, 9], [4, 2], [3, 3]])).data.tolist() == [4, 9]
        assert nd.global_maxpool(nd.Tensor([[2.0, -1]])).data.tolist() == [2, -1]

    def test_global_tie_goes_to_first(self):
        x = nd.Tensor(np.full((4, 1), 2.0), requires_grad=True)
        nd.backward(nd.total(nd.global_maxpool(x)))
        assert x.grad.ravel().tolist() == [1, 0, 0, 0]

    @given(hnp.arrays(float, (6, 3), elements=finite), st.permutations(range(6)))
    def test_global_permutation_invariant(self, x, perm):
        assert np.array_equal(nd.global_maxpool(nd.Tensor(x)).data, nd.global_maxpool(nd.Tensor(x[list(perm)])).data)


class TestDense:
    def test_examples(self):
        x = nd.Tensor([1.0, 2.0])
        assert nd.dense(x, nd.Tensor(np.eye(2)), nd.Tensor(np.zeros(2))).data.tolist() == [1, 2]
        assert nd.dense(x, nd.Tensor(np.zeros((2, 2))), nd.Tensor([4.0, 5])).data.tolist() == [4, 5]
        assert nd.dense(x, nd.Tensor([[1.0, 0], [1, 1]]), nd.Tensor([0.0, 1])).data.tolist() == [3, 3]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            nd.dense(nd.Tensor([1.0, 2, 3]), nd.Tensor(np.eye(2)), nd.Tensor(np.zeros(2)))

    def test_sparse_matches_dense(self):
        rng = np.random.default_rng(2)
        x = sp.random(4, 6, density=0.4, random_state=2, format="csr")
        w, b = nd.Tensor(rng.normal(size=(6, 3))), nd.Tensor(rng.normal(size=3))
        assert np.allclose(nd.sparse_dense(x, w, b).data, nd.dense(nd.Tensor(x.toarray()), w, b).data)


class TestActivations:
    def test_relu(self):
        assert nd.relu(nd.Tensor([-1.0, 0, 2])).data.tolist() == [0, 0, 2]

    def test_dropout_identities(self):
        x = nd.Tensor(np.arange(5.0))
        rng = np.random.default_rng(0)
        assert nd.dropout(x, 0.0, "train", rng) is x
        assert nd.dropout(x, 0.0, "infer") is x
        assert nd.dropout(x, 0.5, "infer") is x

    def test_dropout_mean(self):
        n, rate = 100_000, 0.5
        out = nd.dropout(nd.Tensor(np.ones(n)), rate, "train", np.random.default_rng(3)).data
        sigma = math.sqrt(rate / (1 - rate) / n)   # std of the mean of survivors scaled by 1/(1-rate)
        assert abs(out.mean() - 1.0) < 3 * sigma
        assert set(np.unique(out)) <= {0.0, 2.0}

    def test_dropout_bad_rate(self):
        with pytest.raises(ValueError):
            nd.dropout(nd.Tensor([1.0]), 1.0, "train", np.random.default_rng(0))


class TestSoftmax:
    def test_uniform(self):
        loss, probs = nd.softmax_xent(nd.Tensor([0.0, 0, 0]), 1)
        assert np.allclose(probs, 1 / 3)
        assert loss.data == pytest.approx(math.log(3), abs=1e-12)

    def test_saturated(self):
        loss, _ = nd.softmax_xent(nd.Tensor([100.0, 0, 0]), 0)
        assert loss.data == pytest.approx(0.0, abs=1e-40)

    def test_hand_value(self):
        loss, _ = nd.softmax_xent(nd.Tensor([1.0, 2, 3]), 2)
        assert loss.data == pytest.approx(math.log(1 + math.exp(-1) + math.exp(-2)), abs=1e-12)
        assert round(float(loss.data), 4) == 0.4076

    def test_gold_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            nd.softmax_xent(nd.Tensor([1.0, 2]), 2)

    @given(hnp.arrays(float, (4, 3), elements=st.floats(-500, 500)))
    def test_probs_normalized(self, z):
        _, probs = nd.softmax_xent(nd.Tensor(z), np.zeros(4, dtype=int))
        assert np.allclose(probs.sum(axis=1), 1, atol=1e-6)
        assert np.all(probs >= 0) and np.all(probs <= 1)


class TestBackward:
    def test_square(self):
        s = nd.ParamStore()
        w = param(s, "w", 3.0)
        nd.backward(nd.sum_squares(w), s)
        assert w.grad == 6.0

    def test_unused_param_zero_grad(self):
        s = nd.ParamStore()
        w, v = param(s, "w", [1.0, 2.0]), param(s, "v", [5.0])
        frozen = param(s, "frozen", [1.0], trainable=False)
        nd.backward(nd.sum_squares(nd.mul(w, frozen)), s)
        assert np.array_equal(v.grad, [0.0])
        assert frozen.grad is None

    def test_without_forward(self):
        with pytest.raises(nd.GraphError):
            nd.backward(nd.Tensor(1.0))

    def test_non_scalar(self):
        s = nd.ParamStore()
        w = param(s, "w", [1.0, 2.0])
        with pytest.raises(nd.GraphError, match="scalar"):
            nd.backward(nd.mul(w, 2.0))

    def test_shared_node_accumulates(self):
        s = nd.ParamStore()
        w = param(s, "w", 2.0)
        y = nd.mul(w, w)
        nd.backward(nd.add(y, y), s)
        assert w.grad == 8.0


class TestGradCheck:
    def test_quadratic(self):
        s = nd.ParamStore()
        w = param(s, "w", np.random.default_rng(0).normal(size=5))
        assert nd.grad_check(lambda: nd.sum_squares(w), s) < 1e-8

    def test_corrupted_backward_detected(self):
        rng = np.random.default_rng(4)
        s = nd.ParamStore()
        w, b = param(s, "fc.weight", rng.normal(size=(4, 3))), param(s, "fc.bias", rng.normal(size=3))
        x = rng.normal(size=(5, 4))

        def loss():
            return nd.softmax_xent(nd.dense(x, w, b), [0, 1, 2, 0, 1])[0]

        assert nd.grad_check(loss, s) < 1e-6
        with nd.corrupt_backward("dense"):
            assert nd.grad_check(loss, s) > 0.1

    @pytest.mark.parametrize("op", ["conv1d", "maxpool", "global", "relu", "concat", "gather", "mean", "hinge"])
    def test_ops(self, op):
        rng = np.random.default_rng(5)
        s = nd.ParamStore()
        x = param(s, "x", rng.normal(size=(2, 8, 3)))
        f = param(s, "f.weight", rng.normal(size=(3, 3, 2)))
        b = param(s, "f.bias", rng.normal(size=2))
        table = param(s, "t", rng.normal(size=(6, 3)))
        ids = rng.integers(0, 6, size=(2, 5))

        def loss():
            if op == "conv1d":
                h = nd.conv1d(x, f, b)
            elif op == "maxpool":
                h = nd.maxpool1d(x, 3, 2)
            elif op == "global":
                h = nd.global_maxpool(x)
            elif op == "relu":
                h = nd.relu(x)
            elif op == "concat":
                h = nd.concat([x, nd.mul(x, 2.0)], axis=-1)
            elif op == "gather":
                h = nd.gather(table, ids)
            elif op == "mean":
                h = nd.masked_mean(nd.gather(table, ids), ids > 1)
            else:
                return nd.squared_hinge(nd.reshape(x, (4, 12)), [0, 3, 5, 11])
            return nd.sum_squares(h)

        check(loss, s, bound=1e-6)


class TestL2:
    def test_zero_lambda(self):
        s = nd.ParamStore()
        param(s, "a.weight", [3.0, 4.0])
        loss = nd.Tensor(1.5)
        assert nd.add_l2(loss, s, 0.0) is loss

    def test_sum_of_squares(self):
        s = nd.ParamStore()
        param(s, "a.weight", [3.0, 4.0])
        param(s, "a.bias", [10.0])
        assert nd.add_l2(nd.Tensor(0.0), s, 1.0).data == 25.0

    def test_gradient(self):
        s = nd.ParamStore()
        w = param(s, "a.weight", [3.0, -4.0])
        nd.backward(nd.add_l2(nd.Tensor(0.0), s, 0.5), s)
        assert np.array_equal(w.grad, 2 * 0.5 * np.array([3.0, -4.0]))

    def test_embeddings_excluded(self):
        s = nd.ParamStore()
        param(s, "embedding.table", [[1.0, 1.0]], trainable=False)
        param(s, "x.weight", [0.0])
        assert nd.add_l2(nd.Tensor(0.0), s, 1.0).data == 0.0

    @given(hnp.arrays(float, 3, elements=finite), st.floats(1e-3, 10))
    def test_strictly_larger(self, w, lam):
        s = nd.ParamStore()
        param(s, "a.weight", w)
        # zero base loss so a tiny penalty is not absorbed by rounding
        penalized = float(nd.add_l2(nd.Tensor(0.0), s, lam).data)
        if lam * float(np.sum(w * w)) > 0:
            assert penalized > 0.0
        else:
            assert not np.any(w * w)


class TestAdam:
    def test_zero_grad_no_change(self):
        s = nd.ParamStore()
        w = param(s, "w", [1.0, -2.0])
        nd.backward(nd.mul(nd.total(w), 0.0), s)
        nd.adam_step(s, nd.AdamHyper())
        assert w.data.tolist() == [1.0, -2.0]

    @given(st.floats(-100, 100).filter(lambda g: abs(g) > 1e-6))
    def test_first_step(self, g):
        s = nd.ParamStore()
        w = param(s, "w", 0.5)
        hyper = nd.AdamHyper()
        nd.backward(nd.mul(w, g), s)
        nd.adam_step(s, hyper)
        assert w.data - 0.5 == pytest.approx(-hyper.lr * g / (abs(g) + hyper.eps), rel=1e-9)
        assert hyper.t == 1

    def test_two_steps_constant_grad(self):
        s = nd.ParamStore()
        w = param(s, "w", 0.0)
        hyper = nd.AdamHyper()
        deltas = []
        for _ in range(2):
            before = float(w.data)
            nd.backward(nd.mul(w, 3.0), s)
            nd.adam_step(s, hyper)
            deltas.append(float(w.data) - before)
        assert abs(deltas[1]) <= abs(deltas[0]) * (1 + 1e-9)
        assert deltas[0] == pytest.approx(-1e-3, rel=1e-6) and deltas[1] == pytest.approx(-1e-3, rel=1e-6)

    def test_grads_zeroed_and_frozen_untouched(self):
        s = nd.ParamStore()
        w = param(s, "w", [1.0])
        frozen = param(s, "e", [2.0], trainable=False)
        nd.backward(nd.sum_squares(nd.mul(w, frozen)), s)
        nd.adam_step(s, nd.AdamHyper())
        assert w.grad.tolist() == [0.0]
        assert frozen.data.tolist() == [2.0]

    def test_step_without_grads(self):
        s = nd.ParamStore()
        param(s, "w", [1.0])
        with pytest.raises(nd.GraphError):
            nd.adam_step(s, nd.AdamHyper())

    def test_invalid_hyper(self):
        with pytest.raises(ValueError):
            nd.AdamHyper(beta1=1.0)
        with pytest.raises(ValueError):
            nd.AdamHyper(lr=0.0)


class TestParamStore:
    def test_state_round_trip_and_digest(self):
        s = nd.ParamStore()
        param(s, "a", [1.0, 2.0])
        before = s.digest()
        state = s.state()
        s["a"].data[0] = 9.0
        assert s.digest() != before
        s.load_state(state)
        assert s.digest() == before

    def test_load_state_mismatch(self):
        s = nd.ParamStore()
        param(s, "a", [1.0, 2.0])
        with pytest.raises(KeyError):
            s.load_state({"b": np.zeros(2)})
        with pytest.raises(ValueError):
            s.load_state({"a": np.zeros(3)})

    def test_check_finite(self):
        s = nd.ParamStore()
        param(s, "a", [np.inf])
        with pytest.raises(nd.NumericError):
            nd.check_finite(s)
