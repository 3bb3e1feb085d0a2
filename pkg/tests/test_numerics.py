import mpmath
import numpy as np
import pytest

from reat.numerics import (
    DimensionError,
    affine,
    elementwise,
    hadamard,
    make_rng,
    safe_divide,
    sigmoid,
    softmax,
    tanh,
)


def test_affine_identity():
    out = affine(np.eye(2), [3.0, 4.0], [0.0, 0.0])
    assert np.array_equal(out, [3.0, 4.0])


def test_affine_zero_matrix_returns_bias():
    out = affine(np.zeros((2, 2)), [5.0, 6.0], [1.0, 2.0])
    assert np.array_equal(out, [1.0, 2.0])


def test_affine_matches_triple_loop_oracle():
    rng = make_rng(1)
    m = rng.normal(size=(4, 3))
    v = rng.normal(size=3)
    b = rng.normal(size=4)
    expected = np.zeros(4)
    for i in range(4):
        acc = 0.0
        for j in range(3):
            acc += m[i, j] * v[j]
        expected[i] = acc + b[i]
    assert np.max(np.abs(affine(m, v, b) - expected)) < 1e-12


def test_affine_dimension_errors():
    with pytest.raises(DimensionError):
        affine(np.eye(2), [1.0, 2.0, 3.0], [0.0, 0.0])
    with pytest.raises(DimensionError):
        affine(np.eye(2), [1.0, 2.0], [0.0])
    with pytest.raises(DimensionError):
        affine(np.eye(2), [np.nan, 1.0], [0.0, 0.0])


def test_affine_is_linear():
    rng = make_rng(2)
    zero = np.zeros(4)
    for _ in range(25):
        m = rng.normal(size=(4, 6))
        u, v = rng.normal(size=6), rng.normal(size=6)
        a = float(rng.normal())
        lhs = affine(m, a * u + v, zero)
        rhs = a * affine(m, u, zero) + affine(m, v, zero)
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_sigmoid_at_zero_and_saturation():
    assert np.array_equal(sigmoid(np.zeros(2)), [0.5, 0.5])
    out = sigmoid(np.array([800.0, -800.0]))
    assert np.all(np.isfinite(out))
    assert out[0] > 1.0 - 1e-12 and out[1] < 1e-12


def test_hadamard():
    assert np.array_equal(hadamard([1.0, 2.0], [3.0, 4.0]), [3.0, 8.0])
    with pytest.raises(DimensionError):
        hadamard([1.0], [1.0, 2.0])


def test_safe_divide_clamps_tiny_denominators():
    assert np.array_equal(safe_divide([1.0], [1e-12]), [1e8])
    assert np.array_equal(safe_divide([1.0], [-1e-12]), [-1e8])
    # an untouched denominator divides exactly
    assert np.array_equal(safe_divide([1.0], [0.5]), [2.0])


def test_safe_divide_undoes_hadamard_away_from_zero():
    rng = make_rng(3)
    for _ in range(50):
        a = rng.normal(size=8)
        b = rng.uniform(1e-6, 2.0, size=8) * rng.choice([-1.0, 1.0], size=8)
        back = safe_divide(hadamard(a, b), b)
        assert np.max(np.abs(back - a)) < 1e-9


def test_elementwise_dispatch():
    assert np.array_equal(elementwise("sigmoid", [0.0, 0.0]), [0.5, 0.5])
    assert np.allclose(elementwise("tanh", [0.0]), [0.0])
    assert np.array_equal(elementwise("hadamard", [2.0], [3.0]), [6.0])
    with pytest.raises(ValueError):
        elementwise("exp", [1.0])
    with pytest.raises(DimensionError):
        elementwise("sigmoid", [1.0], [2.0])
    with pytest.raises(DimensionError):
        elementwise("hadamard", [1.0])


def test_softmax_symmetry_and_stability():
    assert np.allclose(softmax([0.0, 0.0]), [0.5, 0.5], atol=1e-15)
    out = softmax([1000.0, 0.0])
    assert np.all(np.isfinite(out))
    assert out[0] > 1.0 - 1e-12


def test_softmax_matches_extended_precision_oracle():
    z = [1.0, 2.0, 3.0]
    with mpmath.workdps(50):
        exps = [mpmath.exp(x) for x in z]
        total = mpmath.fsum(exps)
        expected = np.array([float(e / total) for e in exps])
    assert np.max(np.abs(softmax(z) - expected)) < 1e-12


def test_softmax_properties():
    rng = make_rng(4)
    for _ in range(50):
        z = rng.normal(size=int(rng.integers(1, 9))) * 10.0
        p = softmax(z)
        assert abs(float(np.sum(p)) - 1.0) < 1e-12
        assert np.all(p > 0.0) and np.all(p < 1.0 + 1e-15)
        shifted = softmax(z + float(rng.normal()) * 5.0)
        assert np.max(np.abs(p - shifted)) < 1e-12
    with pytest.raises(DimensionError):
        softmax([])


def test_make_rng_deterministic_and_splittable():
    a = make_rng(7).normal(size=5)
    b = make_rng(7).normal(size=5)
    assert np.array_equal(a, b)
    kids = make_rng(7).spawn(2)
    assert not np.array_equal(kids[0].normal(size=5), kids[1].normal(size=5))
