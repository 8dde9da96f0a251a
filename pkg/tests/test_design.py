import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from onesided import design as design_mod
from onesided.design import DesignState, init_design, rank1_update, width
from onesided.exceptions import DesignCorrupted, EigenFloorViolated


def test_init_design_2d_example():
    st_ = init_design([[1, 0], [0, 1], [1, 1]], 0.5)
    np.testing.assert_array_equal(st_.A, [[2, 1], [1, 2]])
    assert np.linalg.eigvalsh(st_.A)[0] == pytest.approx(1.0)
    np.testing.assert_allclose(st_.A @ st_.A_inv, np.eye(2), atol=1e-12)


def test_init_design_rank_one_rejected():
    with pytest.raises(EigenFloorViolated):
        init_design([[1, 0], [1, 0], [1, 0]], 0.1)


def test_init_design_too_few_rows():
    with pytest.raises(EigenFloorViolated):
        init_design([[1, 0], [0, 1]], 0.1)


def test_init_design_diagonal_example():
    st_ = init_design(np.vstack([np.eye(3), [1, 0, 0]]), 1.0)
    np.testing.assert_array_equal(st_.A, np.diag([2.0, 1, 1]))
    np.testing.assert_allclose(st_.A_inv, np.diag([0.5, 1, 1]), atol=1e-15)


def test_eigen_floor_boundary_and_message():
    init_design(np.vstack([np.eye(2), np.eye(2)]), 2.0)
    with pytest.raises(EigenFloorViolated, match="smallest eigenvalue 2"):
        init_design(np.vstack([np.eye(2), np.eye(2)]), 2.5)


def test_rank1_update_examples():
    new = rank1_update(DesignState(2 * np.eye(2)), [1, 0])
    np.testing.assert_allclose(new.A_inv, np.diag([1 / 3, 1 / 2]), atol=1e-15)

    old = DesignState(np.eye(2))
    new = rank1_update(old, [1, 1])
    np.testing.assert_array_equal(new.A, [[2, 1], [1, 2]])
    np.testing.assert_allclose(new.A_inv, [[2 / 3, -1 / 3], [-1 / 3, 2 / 3]], atol=1e-15)
    # functional update leaves the input alone
    np.testing.assert_array_equal(old.A, np.eye(2))


def test_zero_update_is_noop():
    st_ = DesignState([[2.0, 0.5], [0.5, 1.0]])
    new = rank1_update(st_, [0.0, 0.0])
    np.testing.assert_array_equal(new.A, st_.A)
    np.testing.assert_array_equal(new.A_inv, st_.A_inv)
    assert new.update_count == 0


def test_width_examples():
    st_ = DesignState(np.eye(3))
    assert width(st_, np.array([0.6, 0.8, 0.0])) == pytest.approx(1.0)
    assert width(DesignState(np.diag([4.0, 1.0])), [2.0, 0.0]) == pytest.approx(1.0)
    assert width(st_, np.zeros(3)) == 0.0


def test_width_clamps_round_off_only():
    st_ = DesignState(np.eye(2))
    st_.A_inv = np.diag([-1e-13, 1.0])
    assert st_.width([1.0, 0.0]) == 0.0
    st_.A_inv = np.diag([-1e-6, 1.0])
    with pytest.raises(DesignCorrupted):
        st_.width([1.0, 0.0])
    with pytest.raises(DesignCorrupted):
        st_.widths([[1.0, 0.0]])


def test_vectorized_widths_match_scalar():
    rng = np.random.default_rng(0)
    st_ = init_design(rng.normal(size=(10, 4)), 1e-3)
    X = rng.normal(size=(7, 4))
    np.testing.assert_allclose(st_.widths(X), [st_.width(x) for x in X], rtol=1e-12)


def test_periodic_refresh(monkeypatch):
    monkeypatch.setattr(design_mod, "REFRESH_EVERY", 3)
    st_ = DesignState(np.eye(2))
    calls = []
    real = design_mod._inverse
    monkeypatch.setattr(design_mod, "_inverse", lambda A: calls.append(1) or real(A))
    for x in ([1, 0], [0, 1], [1, 1], [1, 2]):
        st_.update(x)
    assert len(calls) == 1
    np.testing.assert_allclose(st_.A_inv, np.linalg.inv(st_.A), atol=1e-12)


def updates(max_d=6, max_n=500):
    return st.tuples(st.integers(1, max_d), st.integers(1, max_n), st.integers(0, 2**32 - 1))


@settings(max_examples=30, deadline=None)
@given(updates())
def test_sherman_morrison_matches_factorization(args):
    d, n, seed = args
    rng = np.random.default_rng(seed)
    st_ = init_design(rng.normal(size=(d + 1, d)) + np.eye(d + 1, d), 1e-8)
    for _ in range(n):
        st_.update(rng.normal(size=d))
        assert np.max(np.abs(st_.A - st_.A.T)) <= 1e-9
    ref = linalg.cho_solve(linalg.cho_factor(st_.A), np.eye(d))
    assert np.max(np.abs(st_.A_inv - ref)) <= 1e-6
    linalg.cholesky(st_.A)
    probe = rng.normal(size=(20, d))
    np.testing.assert_allclose(probe @ st_.A @ st_.A_inv, probe, atol=1e-6)
    assert np.all(np.einsum("ij,jk,ik->i", probe, st_.A_inv, probe) >= 0)


@settings(max_examples=50)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_widths_never_increase(d, seed):
    rng = np.random.default_rng(seed)
    st_ = init_design(rng.normal(size=(d + 2, d)), 1e-9)
    x, z = rng.normal(size=d), rng.normal(size=d) * rng.uniform(0, 5)
    assert rank1_update(st_, z).width(x) <= st_.width(x) + 1e-9


def test_copy_is_independent():
    st_ = DesignState(np.eye(2))
    cp = st_.copy()
    cp.update([1.0, 0.0])
    np.testing.assert_array_equal(st_.A, np.eye(2))
    assert st_.update_count == 0 and cp.update_count == 1
