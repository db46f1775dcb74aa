import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulse_recover.kernels import cauchy, eval_kernel, gaussian, tensor
from pulse_recover.signal import (
    NoiseSpec,
    SampledSignal,
    SampleGrid,
    SpikeTrain,
    add_noise,
    condition_number,
    convolution_matrix,
    random_amplitudes,
    random_separated_support,
    read_signal_csv,
    read_spikes_csv,
    sample_signal,
    sample_signal_2d,
    spikes_to_vector,
    write_signal_csv,
    write_spikes_csv,
)


def test_sample_signal_examples():
    y = sample_signal(gaussian(), 1.0, SpikeTrain([0.0], [1.0]), SampleGrid(1, (-1, 1)))
    assert np.allclose(y.values, [np.exp(-0.5), 1.0, np.exp(-0.5)], atol=1e-15)
    empty = sample_signal(cauchy(), 0.3, SpikeTrain.empty(), SampleGrid(10, (-1, 1)))
    assert not np.any(empty.values)
    grid = SampleGrid(100, (0, 1))
    y = sample_signal(cauchy(), 0.1, SpikeTrain([0.5], [2.0]), grid)
    assert y.values[50] == 2.0


def test_signal_equals_matrix_product():
    grid = SampleGrid(100, (-1, 1))
    spikes = SpikeTrain([-0.4, 0.13, 0.7], [1.5, -0.3, 2.0])
    K = convolution_matrix(gaussian(), 0.1, grid)
    y = sample_signal(gaussian(), 0.1, spikes, grid)
    assert np.max(np.abs(K @ spikes_to_vector(spikes, grid) - y.values)) < 1e-13


def test_convolution_matrix_examples():
    K = convolution_matrix(gaussian(), 0.1, SampleGrid(100, (-1, 1)))
    assert K.shape == (201, 201)
    assert np.array_equal(K, K.T) and np.all(np.diag(K) == 1.0)
    assert np.allclose(convolution_matrix(cauchy(), 1.0, SampleGrid(1, (0, 1))),
                       [[1, 0.5], [0.5, 1]])


def test_condition_number_examples():
    assert condition_number(np.eye(4)) == pytest.approx(1.0)
    assert condition_number(np.diag([2.0, 1.0])) == pytest.approx(2.0)
    assert condition_number(np.zeros((2, 2))) == float("inf")
    with pytest.raises(ValueError):
        condition_number(np.ones((2, 3)))
    K = convolution_matrix(gaussian(), 0.1, SampleGrid(100, (-1, 1)))
    assert condition_number(K) >= 1e15


def test_sample_signal_2d_is_separable():
    gt, gu = SampleGrid(10, (-1, 1)), SampleGrid(5, (0, 1))
    spikes = SpikeTrain([[0.0, 0.4]], [3.0])
    Y = sample_signal_2d(tensor("gaussian"), (0.2, 0.3), spikes, gt, gu)
    a = eval_kernel(gaussian(), (gt.times - 0.0) / 0.2)
    b = eval_kernel(gaussian(), (gu.times - 0.4) / 0.3)
    assert np.allclose(Y, 3.0 * np.outer(a, b), atol=1e-15)


def test_add_noise_l1_budget():
    grid = SampleGrid(50, (-1, 1))
    y = sample_signal(gaussian(), 0.1, SpikeTrain([0.0], [1.0]), grid)
    same, d0, _ = add_noise(y, NoiseSpec("l1_budget", 0.0, 1))
    assert d0 == 0.0 and np.array_equal(same.values, y.values)
    noisy, d, _ = add_noise(y, NoiseSpec("l1_budget", 20.0, 5))
    assert np.abs(noisy.values - y.values).sum() == pytest.approx(20.0, abs=1e-12)
    assert d == pytest.approx(20.0, abs=1e-12)


def test_add_noise_snr_target():
    grid = SampleGrid(100, (-1, 1))
    y = sample_signal(gaussian(), 0.1, SpikeTrain([-0.5, 0.2], [1.0, -2.0]), grid)
    _, _, snr = add_noise(y, NoiseSpec("snr_db", 17.9, 3))
    assert snr == pytest.approx(17.9, abs=1e-9)
    with pytest.raises(ValueError):
        add_noise(SampledSignal(grid, np.zeros(len(grid))), NoiseSpec("snr_db", 10, 0))


def test_support_examples():
    pos = random_separated_support(5, (-1, 1), 0.01, 0.11, seed=7)
    assert len(pos) == 5
    assert np.all(np.diff(pos) >= 0.11 - 1e-12)
    assert np.allclose(pos * 100, np.rint(pos * 100), atol=1e-9)
    assert len(random_separated_support(1000, (-1, 1), 0.01, 0.5, seed=3)) <= 5


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), gap_steps=st.integers(1, 60))
def test_support_gap_property(seed, gap_steps):
    gap = gap_steps * 0.01
    pos = random_separated_support(50, (-1, 1), 0.01, gap, seed=seed, max_rejections=500)
    assert np.all(pos >= -1 - 1e-12) and np.all(pos <= 1 + 1e-12)
    assert np.all(np.diff(pos) >= gap - 1e-9)


def test_random_amplitudes_seeded():
    a = random_amplitudes(10, 2.0, seed=4)
    assert np.array_equal(a, random_amplitudes(10, 2.0, seed=4))
    assert np.all(a != 0)
    with pytest.raises(ValueError):
        random_amplitudes(3, 0.0)


def test_spike_train_validation():
    with pytest.raises(ValueError):
        SpikeTrain([0.1, 0.0], [1, 1])
    with pytest.raises(ValueError):
        SpikeTrain([0.1], [0.0])
    s = SpikeTrain.from_unsorted([0.3, -0.2], [1.0, -2.0])
    assert list(s.positions) == [-0.2, 0.3] and s.l1_mass == 3.0


def test_csv_round_trips(tmp_path):
    grid = SampleGrid(20, (-1, 1))
    y = sample_signal(cauchy(), 0.1, SpikeTrain([0.25], [1.5]), grid)
    write_signal_csv(tmp_path / "y.csv", y)
    back = read_signal_csv(tmp_path / "y.csv")
    assert back.grid == grid and np.array_equal(back.values, y.values)
    spikes = SpikeTrain([-0.3, 0.45], [0.1234567890123, -7.0])
    write_spikes_csv(tmp_path / "x.csv", spikes)
    back = read_spikes_csv(tmp_path / "x.csv")
    assert np.array_equal(back.positions, spikes.positions)
    assert np.array_equal(back.amplitudes, spikes.amplitudes)
