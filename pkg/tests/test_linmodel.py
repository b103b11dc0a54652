import numpy as np
import pytest

from ampsi.errors import DimensionError, ParameterError
from ampsi.linmodel import (
    LinearSystem,
    SignalModel,
    gen_matrix,
    gen_signal_pair,
    make_system,
    measure,
    prior_second_moment,
    split_streams,
)


def test_model_validation():
    with pytest.raises(ParameterError):
        SignalModel.gg(0.0, 0.2)
    with pytest.raises(ParameterError):
        SignalModel.bg(0.0, 0.2)
    with pytest.raises(ParameterError):
        SignalModel.bg(1.5, 0.2)
    with pytest.raises(ParameterError):
        SignalModel.block_sparse(0, 0.2)
    with pytest.raises(ParameterError):
        SignalModel("Laplace", sigma=1.0)
    assert SignalModel.block_sparse(5, 0.3).block_size == 5
    assert SignalModel.bernoulli_sep(5, 0.3).block_size == 1


def test_matrix_column_norms():
    A = gen_matrix(300, 1000, np.random.default_rng(0))
    norms = np.sum(A**2, axis=0)
    assert abs(norms.mean() - 1.0) < 0.01
    assert abs(A.var() * 300 - 1.0) < 0.01


def test_matrix_bad_shape():
    with pytest.raises(DimensionError):
        gen_matrix(0, 10, np.random.default_rng(0))


@pytest.mark.parametrize(
    "model",
    [SignalModel.gg(1.0, 0.2), SignalModel.bg(0.2, 0.5), SignalModel.block_sparse(5, 0.3), SignalModel.bernoulli_sep(4, 0.3)],
)
def test_second_moment_and_side_info(model):
    n = 200_000
    x, xt = gen_signal_pair(model, n, np.random.default_rng(1))
    assert abs(np.mean(x**2) - prior_second_moment(model)) < 0.01
    noise = xt - x
    assert abs(noise.std() - model.sigma) < 0.01 * model.sigma
    assert abs(np.corrcoef(noise, x)[0, 1]) < 0.01


def test_block_sparse_one_hot():
    x, _ = gen_signal_pair(SignalModel.block_sparse(10, 0.3), 1000, np.random.default_rng(2))
    blocks = x.reshape(-1, 10)
    assert np.all(blocks.sum(axis=1) == 1.0)
    assert set(np.unique(x)) == {0.0, 1.0}
    # position is uniform over the block
    pos = np.argmax(blocks, axis=1)
    assert len(np.unique(pos)) == 10


def test_block_sparse_divisibility():
    with pytest.raises(DimensionError):
        gen_signal_pair(SignalModel.block_sparse(7, 0.3), 100, np.random.default_rng(0))


def test_bg_sparsity():
    x, _ = gen_signal_pair(SignalModel.bg(0.2, 0.5), 100_000, np.random.default_rng(3))
    assert abs(np.mean(x != 0) - 0.2) < 0.005


def test_measure_noise():
    rng = np.random.default_rng(4)
    A = gen_matrix(2000, 50, rng)
    x = rng.standard_normal(50)
    y = measure(A, x, 0.1, np.random.default_rng(5))
    resid = y - A @ x
    assert abs(resid.std() - 0.1) < 0.005
    np.testing.assert_array_equal(measure(A, x, 0.0, rng), A @ x)
    with pytest.raises(DimensionError):
        measure(A, x[:-1], 0.1, rng)


def test_streams_reproducible():
    a = [g.standard_normal(5) for g in split_streams(7, 3)]
    b = [g.standard_normal(5) for g in split_streams(7, 3)]
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)
    assert not np.allclose(a[0], a[1])


def test_make_system_shapes():
    gens = split_streams(0, 3)
    s = make_system(SignalModel.gg(1.0, 0.2), 100, 30, 0.1, *gens)
    assert (s.m, s.n) == (30, 100)
    assert s.delta == pytest.approx(0.3)
    with pytest.raises(DimensionError):
        LinearSystem(A=s.A, y=s.y[:-1], x_true=s.x_true, side_info=s.side_info, sigma_w=0.1)
