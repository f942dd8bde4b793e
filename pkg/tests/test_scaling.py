import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slqlab.conv_sim import ConvTrajectory
from slqlab.errors import GridMismatch, GridOutOfRange
from slqlab.hw_sim import PSI, Q, HwTrajectory
from slqlab.model import ModelData, derive
from slqlab.scaling import GridPath, conv_scale, default_grid, diffusion_scale_hw, ssc_deviation_hw


def hw_traj(n, initial, states=None, times=None, horizon=1.0):
    p = derive(ModelData(mu=(2, 2), lam=(1, 1)), n)
    states = np.zeros((0, 6, 2), np.int64) if states is None else np.asarray(states, np.int64)
    times = np.zeros(0) if times is None else np.asarray(times, float)
    m = len(times)
    return HwTrajectory(p, horizon, np.asarray(initial, np.int64), times, np.zeros(m, np.int8),
                        np.zeros(m, np.int64), states), p


def initial(Q_=(0, 0), Psi=(0, 0)):
    s = np.zeros((6, 2), np.int64)
    s[Q], s[PSI] = Q_, Psi
    return s


def test_empty_system():
    tr, p = hw_traj(400, initial())
    x, q, psi, r = diffusion_scale_hw(tr, p, default_grid(1.0, 16))
    assert np.all(x.values == -10.0)
    assert np.all(q.values == 0.0)


def test_centered():
    tr, p = hw_traj(400, initial(Psi=(200, 200)))
    x, *_ = diffusion_scale_hw(tr, p, default_grid(1.0, 16))
    assert np.all(x.values == 0.0)


def test_queue_scaling_and_identity():
    tr, p = hw_traj(400, initial(Q_=(5, 0), Psi=(200, 200)))
    x, q, psi, _ = diffusion_scale_hw(tr, p, [0.0, 0.5])
    assert np.all(q.values[:, 0] == 0.25)
    assert np.array_equal(x.values, q.values + psi.values)


def test_right_continuous_sampling():
    later = initial(Q_=(3, 0), Psi=(200, 200))
    tr, p = hw_traj(400, initial(Psi=(200, 200)), states=[later], times=[0.5])
    _, q, _, _ = diffusion_scale_hw(tr, p, [0.25, 0.5, 0.75])
    assert list(q.values[:, 0]) == [0.0, 0.15, 0.15]


def test_grid_out_of_range():
    tr, p = hw_traj(400, initial())
    with pytest.raises(GridOutOfRange):
        diffusion_scale_hw(tr, p, [0.0, 1.5])


def test_gridpath_validation():
    with pytest.raises(ValueError):
        GridPath([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        GridPath([0.0, 1.0], [1.0, np.nan])


def test_ssc_examples():
    g = [0.0, 1.0]
    xh = GridPath(g, [[0.5, 0.5], [1.0, 0.0]])
    assert ssc_deviation_hw(xh, GridPath(g, [[0.5, 0.5], [0.5, 0.5]])) == 0.0
    assert ssc_deviation_hw(GridPath([0.0], [[1.0, 0.0]]), GridPath([0.0], [[1.0, 0.0]])) == 0.5
    zero = GridPath(g, np.zeros((2, 2)))
    assert ssc_deviation_hw(zero, zero) == 0.0
    with pytest.raises(GridMismatch):
        ssc_deviation_hw(zero, GridPath([0.0, 2.0], np.zeros((2, 2))))


def conv_traj(X_):
    p = derive(ModelData(mu=(2, 2), lam=(1, 1)), 4, regime="conventional")
    counts = np.zeros((1, 4, 2), np.int64)
    counts[0, 0] = X_
    counts[0, 1] = X_
    return ConvTrajectory(p, 1.0, np.array([0.0]), np.zeros(1, np.int8), np.zeros(1, np.int64), counts,
                          np.zeros((1, 2)), np.array([0]))


def test_conv_scale_example():
    xh, xt, gap = conv_scale(conv_traj((4, 1)), ModelData(mu=(2, 2), lam=(1, 1)), 4, [0.5])
    assert list(xh.values[0]) == [2.0, 0.5]
    assert xt.values[0, 0] == 1.25
    assert gap == 1.5


def test_conv_scale_collapsed_and_empty():
    m = ModelData(mu=(2, 2), lam=(1, 1))
    _, _, gap = conv_scale(conv_traj((3, 3)), m, 4, [0.5])
    assert gap == 0.0
    xh, xt, gap = conv_scale(conv_traj((0, 0)), m, 4, [0.5])
    assert not xh.values.any() and not xt.values.any() and gap == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50)), min_size=1, max_size=20))
def test_scaling_linear_in_counts(qs):
    qs = np.array(qs, np.int64)
    times = np.linspace(0.05, 0.95, len(qs))

    def build(mult):
        states = np.zeros((len(qs), 6, 2), np.int64)
        states[:, Q] = mult * qs
        states[:, PSI] = 200
        return hw_traj(400, initial(Psi=(200, 200)), states, times)

    grid = default_grid(1.0, 64)
    t1, p = build(1)
    t2, _ = build(2)
    q1 = diffusion_scale_hw(t1, p, grid)[1].values
    q2 = diffusion_scale_hw(t2, p, grid)[1].values
    assert np.array_equal(q2, 2 * q1)
    dev = ssc_deviation_hw(*diffusion_scale_hw(t1, p, grid)[:2])
    assert dev >= 0
