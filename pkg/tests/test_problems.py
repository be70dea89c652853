import io
import math
import warnings

import numpy as np
import pytest

from accelopt.errors import ParseError
from accelopt.oracle import check_gradient, check_hess_vec
from accelopt.problems import (SparseDataset, logistic_eval,
                               make_l1_least_squares, make_logistic,
                               make_quadratic, parse_libsvm,
                               random_sparse_dataset, serialize_libsvm,
                               synthetic_logistic_dataset)


# ---------------------------------------------------------------- parser

def test_parse_basic():
    ds = parse_libsvm("1 1:0.5 3:-2\n-1 2:1")
    assert ds.n == 2 and ds.d == 3
    assert ds.rows[0] == (1, ((1, 0.5), (3, -2.0)))
    assert ds.rows[1] == (-1, ((2, 1.0),))


def test_parse_comments_and_blank_lines():
    ds = parse_libsvm("# header\n\n+1 1:2.0  # trailing\n")
    assert ds.n == 1
    assert ds.rows[0] == (1, ((1, 2.0),))


def test_parse_non_increasing_index():
    with pytest.raises(ParseError) as exc:
        parse_libsvm("+1 2:1 1:3")
    assert exc.value.line_no == 1
    assert "non-increasing" in str(exc.value)


def test_parse_error_line_numbers():
    text = "+1 1:1\n-1 1:1\nbogus 1:1\n"
    with pytest.raises(ParseError) as exc:
        parse_libsvm(text)
    assert exc.value.line_no == 3


def test_parse_malformations():
    cases = [
        ("x 1:1", "non-numeric label"),
        ("2 1:1", "unsupported label"),
        ("+1 11", "missing colon"),
        ("+1 a:1", "non-numeric token"),
        ("+1 1:b", "non-numeric token"),
        ("+1 0:1", "below 1"),
        ("+1 -3:1", "below 1"),
    ]
    for text, fragment in cases:
        with pytest.raises(ParseError) as exc:
            parse_libsvm(text)
        assert fragment in str(exc.value)
        assert exc.value.line_no == 1


def test_parse_01_labels_remapped_with_warning():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ds = parse_libsvm("0 1:1\n1 1:2\n0 2:3")
    assert [label for label, _ in ds.rows] == [-1, 1, -1]
    assert sum("remapped" in str(w.message) for w in caught) == 1


def test_round_trip_random_datasets():
    rng = np.random.default_rng(123)
    for _ in range(300):
        ds = random_sparse_dataset(rng)
        again = parse_libsvm(serialize_libsvm(ds))
        assert again.rows == ds.rows
        assert again.n == ds.n


def test_parse_accepts_stream():
    ds = parse_libsvm(io.StringIO("+1 1:1\n"))
    assert ds.n == 1


# ---------------------------------------------------------------- logistic

def test_logistic_single_row_values():
    ds = parse_libsvm("+1 1:1 2:0\n")
    value, gradient, _ = logistic_eval(ds)
    assert math.isclose(value(np.zeros(2)), math.log(2.0), rel_tol=1e-15)
    np.testing.assert_allclose(gradient(np.zeros(2)), [-0.5, 0.0],
                               atol=1e-15)


def test_logistic_stable_at_large_margin():
    ds = parse_libsvm("+1 1:1\n")
    value, gradient, _ = logistic_eval(ds)
    v = value(np.array([40.0]))
    assert 0.0 < v < 1e-15  # ~ e^{-40}, no overflow
    v2 = value(np.array([-40.0]))
    assert math.isclose(v2, 40.0, rel_tol=1e-12)


def test_logistic_oracle_derivative_checks():
    ds = synthetic_logistic_dataset(30, 5, 9)
    oracle = make_logistic(ds)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.standard_normal(5)
        assert check_gradient(oracle, x, tol=1e-5)
        assert check_hess_vec(oracle, x, rng.standard_normal(5), tol=1e-4)


def test_logistic_value_at_zero_is_log2():
    ds = synthetic_logistic_dataset(100, 8, 5)
    oracle = make_logistic(ds)
    assert math.isclose(oracle.value(np.zeros(8)), math.log(2.0),
                        rel_tol=1e-12)


def test_to_dense_to_csr_agree():
    rng = np.random.default_rng(8)
    ds = random_sparse_dataset(rng)
    Xd, yd = ds.to_dense()
    Xs, ys = ds.to_csr()
    np.testing.assert_allclose(Xd, Xs.toarray())
    np.testing.assert_allclose(yd, ys)


# ---------------------------------------------------------------- quadratics

def test_quadratic_identity():
    oracle = make_quadratic(np.eye(2), np.zeros(2))
    np.testing.assert_allclose(oracle.x_star, np.zeros(2))
    assert oracle.f_star == 0.0


def test_quadratic_known_minimizer():
    oracle = make_quadratic(np.array([1.0, 10.0]), np.array([1.0, 1.0]))
    np.testing.assert_allclose(oracle.x_star, [1.0, 0.1])
    assert math.isclose(oracle.f_star, -0.55)
    assert oracle.lipschitz_gradient == 10.0
    assert oracle.strong_convexity == 1.0


def test_quadratic_rejects_indefinite():
    with pytest.raises(ValueError):
        make_quadratic(np.array([1.0, -1.0]), np.zeros(2))


# ---------------------------------------------------------------- l1 ls

def test_l1_least_squares_reg_zero_plain():
    oracle = make_l1_least_squares(np.eye(2), np.array([1.0, 2.0]), reg=0.0)
    assert oracle.composite_part is None
    assert math.isclose(oracle.value(np.array([1.0, 2.0])), 0.0, abs_tol=1e-15)


def test_l1_least_squares_prox():
    oracle = make_l1_least_squares(np.eye(2), np.array([2.0, 0.0]), reg=1.0)
    z = oracle.composite_part.prox(np.array([2.0, 0.0]), 1.0)
    np.testing.assert_allclose(z, [1.0, 0.0])
    with pytest.raises(ValueError):
        make_l1_least_squares(np.eye(2), np.zeros(2), reg=-1.0)


# ---------------------------------------------------------------- synthetic

def test_synthetic_dataset_deterministic():
    a = synthetic_logistic_dataset(50, 6, 42)
    b = synthetic_logistic_dataset(50, 6, 42)
    assert a == b
    c = synthetic_logistic_dataset(50, 6, 43)
    assert a != c
