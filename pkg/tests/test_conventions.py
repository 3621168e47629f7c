import numpy as np

from submonotone import conventions as cv

INF = np.inf


def test_zero_times_inf():
    assert cv.mul(0.0, INF) == 0.0
    assert cv.mul(INF, 0.0) == 0.0
    assert cv.mul(2.0, INF) == INF


def test_zero_over_zero_and_inf_over_inf():
    assert cv.div(0.0, 0.0) == 0.0
    assert cv.div(INF, INF) == 0.0
    assert cv.div(1.0, 0.0) == INF
    assert cv.div(1.0, INF) == 0.0


def test_exp_log_zero():
    assert cv.exp(cv.log(0.0)) == 0.0


def test_ratio_scalar():
    assert cv.ratio(INF, INF) == 0.0
    assert cv.ratio(3.0, 2.0) == 1.5
    assert isinstance(cv.ratio(1.0, 2.0), float)


def test_vectorized():
    a = np.array([0.0, 1.0, INF])
    b = np.array([INF, 2.0, 0.0])
    assert np.array_equal(cv.mul(a, b), [0.0, 2.0, 0.0])
