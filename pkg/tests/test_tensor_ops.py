import numpy as np
import pytest

from micromarl import tensor as T


def fd_check(fn, tensors, tol=1e-4, step=1e-5):
    err, name = T.grad_check(fn, tensors, step=step)
    assert err <= tol, f"finite-difference mismatch {err:.3e} on {name}"


def leaf(rng, *shape):
    return T.Tensor(rng.standard_normal(shape), requires_grad=True)


def test_elu_value():
    y = T.elu(T.Tensor([-1.0, 0.0, 2.0]))
    assert np.allclose(y.data, [np.exp(-1) - 1, 0.0, 2.0])


def test_abs_subgradient_zero():
    x = T.Tensor([0.0, -3.0, 2.0], requires_grad=True)
    T.sum(T.abs(x)).backward()
    assert np.array_equal(x.grad, [0.0, -1.0, 1.0])


def test_shared_subexpression_accumulates():
    x = T.Tensor([2.0], requires_grad=True)
    y = x + x
    T.sum(y).backward()
    assert x.grad[0] == 2.0


def test_deep_chain_visits_once():
    x = T.Tensor([1.5], requires_grad=True)
    y = x
    for _ in range(3000):  # deeper than the recursion limit
        y = y + 0.0
    T.sum(y).backward()
    assert x.grad[0] == 1.0


@pytest.mark.parametrize("op", [T.add, T.sub, T.mul])
def test_elementwise_broadcast_grads(op):
    rng = np.random.default_rng(3)
    a = leaf(rng, 4, 3)
    b = leaf(rng, 3)
    fd_check(lambda: T.sum(T.tanh(op(a, b))), [a, b])


@pytest.mark.parametrize(
    "op", [T.relu, T.elu, T.abs, T.tanh, T.sigmoid])
def test_unary_grads(op):
    rng = np.random.default_rng(5)
    x = leaf(rng, 6, 4)
    # keep relu/abs away from the kink where FD is ill-defined
    x.data[np.fabs(x.data) < 0.05] = 0.3
    fd_check(lambda: T.sum(op(x)), [x])


def test_matmul_grads():
    rng = np.random.default_rng(7)
    a = leaf(rng, 5, 4)
    b = leaf(rng, 4, 3)
    fd_check(lambda: T.sum(T.matmul(a, b)), [a, b])


def test_batched_matmul_grads():
    rng = np.random.default_rng(8)
    a = leaf(rng, 6, 2, 4)
    b = leaf(rng, 6, 4, 3)
    fd_check(lambda: T.sum(T.matmul(a, b)), [a, b])


def test_matmul_broadcast_batch_grads():
    rng = np.random.default_rng(9)
    a = leaf(rng, 6, 2, 4)
    b = leaf(rng, 4, 3)
    fd_check(lambda: T.sum(T.matmul(a, b)), [a, b])


def test_softmax_grads_and_rows_sum_to_one():
    rng = np.random.default_rng(11)
    x = leaf(rng, 5, 7)
    w = rng.standard_normal((5, 7))
    y = T.softmax(x, axis=-1)
    assert np.allclose(y.data.sum(axis=-1), 1.0)
    fd_check(lambda: T.sum(T.mul(T.softmax(x, axis=-1), w)), [x])


def test_gather_grads():
    rng = np.random.default_rng(13)
    x = leaf(rng, 6, 5)
    idx = rng.integers(0, 5, size=(6, 1))
    fd_check(lambda: T.sum(T.gather(x, idx, axis=-1)), [x])


def test_gather_values():
    x = T.Tensor(np.arange(12.0).reshape(3, 4))
    out = T.gather(x, np.array([[1], [0], [3]]), axis=-1)
    assert out.data.tolist() == [[1.0], [4.0], [11.0]]


def test_concat_and_split_grads():
    rng = np.random.default_rng(17)
    a = leaf(rng, 3, 2)
    b = leaf(rng, 3, 4)
    w = rng.standard_normal((3, 6))

    def loss():
        joined = T.concat([a, b], axis=1)
        parts = T.split(joined, 3, axis=1)
        return T.sum(T.mul(T.concat(parts, axis=1), w))

    fd_check(loss, [a, b])


def test_sum_mean_axis_grads():
    rng = np.random.default_rng(19)
    x = leaf(rng, 4, 3, 2)
    fd_check(lambda: T.sum(T.mul(T.mean(x, axis=1), 2.0)), [x])
    fd_check(lambda: T.mean(T.sum(x, axis=(0))), [x])


def test_mse_grads_and_value():
    rng = np.random.default_rng(23)
    a = leaf(rng, 8)
    b = leaf(rng, 8)
    out = T.mse(a, b)
    assert np.isclose(out.data, np.mean((a.data - b.data) ** 2))
    fd_check(lambda: T.mse(a, b), [a, b])


def test_one_hot_constant():
    out = T.one_hot(np.array([2, 0]), 4)
    assert out.data.tolist() == [[0, 0, 1, 0], [1, 0, 0, 0]]
    assert not out.requires_grad


def test_reshape_grads():
    rng = np.random.default_rng(29)
    x = leaf(rng, 4, 6)
    w = rng.standard_normal((2, 12))
    fd_check(lambda: T.sum(T.mul(T.reshape(x, (2, 12)), w)), [x])


def test_shape_errors_name_both_shapes():
    a = T.Tensor(np.zeros((2, 3)))
    b = T.Tensor(np.zeros((4, 5)))
    with pytest.raises(T.ShapeError, match=r"2, 3.*4, 5"):
        T.matmul(a, b)
    with pytest.raises(T.ShapeError, match=r"2, 3.*4, 5"):
        T.add(a, b)


def test_no_grad_blocks_tape():
    x = T.Tensor([1.0], requires_grad=True)
    with T.no_grad():
        y = x + 1.0
    assert not y.requires_grad
    y2 = x + 1.0
    assert y2.requires_grad


def test_float32_mode_preserved():
    x = T.Tensor(np.ones(3, dtype=np.float32), requires_grad=True)
    y = T.mul(x, 2.0)
    assert y.data.dtype == np.float32
