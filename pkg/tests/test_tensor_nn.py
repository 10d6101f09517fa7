import numpy as np
import pytest

from micromarl import tensor as T


def make_gru_params(rng, input_size, hidden):
    params = T.ParamSet()
    T.add_gru(params, rng, "gru", input_size, hidden)
    return params


def numpy_gru_reference(x, h, wi, bi, uzr, uh):
    """Plain-numpy transcription of the documented cell equations."""
    proj = x @ wi + bi
    H = h.shape[-1]
    xz, xr, xc = proj[:, :H], proj[:, H:2 * H], proj[:, 2 * H:]
    rec = h @ uzr
    hz, hr = rec[:, :H], rec[:, H:]
    sig = lambda v: 1.0 / (1.0 + np.exp(-v))
    z = sig(xz + hz)
    r = sig(xr + hr)
    c = np.tanh(xc + (r * h) @ uh)
    return (1.0 - z) * h + z * c


def test_gru_zero_params_halves_hidden():
    params = T.ParamSet()
    params.add("gru.wi", np.zeros((3, 6)))
    params.add("gru.bi", np.zeros(6))
    params.add("gru.uzr", np.zeros((2, 4)))
    params.add("gru.uh", np.zeros((2, 2)))
    h = T.Tensor([[1.0, -2.0]])
    out = T.gru_cell(T.Tensor([[0.5, 0.1, -0.3]]), h, params, "gru")
    # z = r = sigmoid(0) = 0.5, candidate = tanh(0) = 0  =>  h' = 0.5 h
    assert np.allclose(out.data, [[0.5, -1.0]])


def test_gru_matches_reference_two_dim():
    rng = np.random.default_rng(42)
    params = make_gru_params(rng, 3, 2)
    x = rng.standard_normal((4, 3))
    h = rng.standard_normal((4, 2))
    out = T.gru_cell(T.Tensor(x), T.Tensor(h), params, "gru")
    ref = numpy_gru_reference(x, h, params["gru.wi"].data, params["gru.bi"].data,
                              params["gru.uzr"].data, params["gru.uh"].data)
    assert np.allclose(out.data, ref, atol=1e-12)


def test_gru_gradient_through_three_steps():
    rng = np.random.default_rng(7)
    params = make_gru_params(rng, 3, 4)
    xs = [T.Tensor(rng.standard_normal((2, 3))) for _ in range(3)]
    w = rng.standard_normal((2, 4))

    def loss():
        h = T.Tensor(np.zeros((2, 4)))
        for x in xs:
            h = T.gru_cell(x, h, params, "gru")
        return T.sum(T.mul(h, w))

    err, name = T.grad_check(loss, params)
    assert err <= 1e-4, f"{name}: {err}"


def test_gru_batching_matches_per_row_calls():
    rng = np.random.default_rng(11)
    params = make_gru_params(rng, 3, 4)
    x = rng.standard_normal((5, 3))
    h = rng.standard_normal((5, 4))
    batched = T.gru_cell(T.Tensor(x), T.Tensor(h), params, "gru").data
    for i in range(5):
        row = T.gru_cell(T.Tensor(x[i:i + 1]), T.Tensor(h[i:i + 1]), params, "gru").data
        assert np.allclose(row, batched[i:i + 1], atol=1e-12)


def test_gru_dim_mismatch_raises():
    rng = np.random.default_rng(1)
    params = make_gru_params(rng, 3, 4)
    with pytest.raises(ValueError, match="input width"):
        T.gru_cell(T.Tensor(np.zeros((2, 5))), T.Tensor(np.zeros((2, 4))), params, "gru")


def test_linear_grad_check_tight():
    rng = np.random.default_rng(3)
    params = T.ParamSet()
    T.add_linear(params, rng, "fc", 4, 3)
    x = T.Tensor(rng.standard_normal((5, 4)))
    err, _ = T.grad_check(lambda: T.sum(T.linear(x, params, "fc")), params)
    assert err <= 1e-6


def test_rmsprop_zero_grad_no_change():
    params = T.ParamSet()
    p = params.add("p", np.array([1.0, 2.0]))
    opt = T.RMSprop(params)
    p.grad = np.zeros(2)
    opt.step()
    assert np.array_equal(p.data, [1.0, 2.0])


def test_rmsprop_first_step_value():
    # v = 0.01, delta = -lr * 1 / (sqrt(0.01) + 1e-5)
    params = T.ParamSet()
    p = params.add("p", np.array([0.0]))
    opt = T.RMSprop(params, lr=5e-4, alpha=0.99, eps=1e-5)
    p.grad = np.array([1.0])
    opt.step()
    expected = -5e-4 / (0.1 + 1e-5)
    assert np.isclose(p.data[0], expected, rtol=1e-12)
    assert np.isclose(p.data[0], -4.9995e-3, rtol=1e-4)


def test_rmsprop_identical_groups_update_identically():
    params = T.ParamSet()
    a = params.add("a", np.full(3, 0.5))
    b = params.add("b", np.full(3, 0.5))
    opt = T.RMSprop(params)
    for _ in range(4):
        a.grad = np.array([0.1, -0.2, 0.3])
        b.grad = np.array([0.1, -0.2, 0.3])
        opt.step()
    assert np.array_equal(a.data, b.data)


def test_paramset_copy_is_value_only():
    rng = np.random.default_rng(5)
    src = T.ParamSet()
    T.add_linear(src, rng, "fc", 2, 2)
    dst = src.clone()
    src["fc.w"].data += 1.0
    assert not np.allclose(dst["fc.w"].data, src["fc.w"].data)
    dst.copy_from(src)
    assert np.array_equal(dst["fc.w"].data, src["fc.w"].data)
    src["fc.w"].data += 1.0  # no aliasing
    assert not np.array_equal(dst["fc.w"].data, src["fc.w"].data)


def test_checkpoint_roundtrip_bitexact(tmp_path):
    rng = np.random.default_rng(9)
    tensors = {
        "layer.w": rng.standard_normal((4, 3)),
        "layer.b": rng.standard_normal(3).astype(np.float32),
        "steps": np.array([1, 2, 3], dtype=np.int64),
        "mask": np.array([True, False, True]),
        "idx32": np.arange(6, dtype=np.int32).reshape(2, 3),
    }
    path = tmp_path / "params.mmt"
    T.save_tensors(path, tensors)
    loaded = T.load_tensors(path)
    assert set(loaded) == set(tensors)
    for name, arr in tensors.items():
        assert loaded[name].dtype == arr.dtype
        assert np.array_equal(loaded[name], arr)
        assert loaded[name].tobytes() == arr.tobytes()


def test_checkpoint_corrupt_file_errors(tmp_path):
    path = tmp_path / "bad.mmt"
    path.write_bytes(b"NOTATENSORFILE")
    with pytest.raises(T.CheckpointError, match="bad header"):
        T.load_tensors(path)
    good = tmp_path / "good.mmt"
    T.save_tensors(good, {"a": np.zeros(4)})
    truncated = good.read_bytes()[:-8]
    bad2 = tmp_path / "trunc.mmt"
    bad2.write_bytes(truncated)
    with pytest.raises(T.CheckpointError):
        T.load_tensors(bad2)
