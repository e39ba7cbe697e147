import math

import mpmath
import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from splitkleinian.errors import (
    ConditioningError,
    MagnitudeOverflowError,
    NoRealLogarithmError,
    NotHyperbolicError,
    NotInvertibleError,
    NotStableError,
    NotUnimodularError,
)
from splitkleinian.linalg import (
    IntMatrix,
    eigen_split,
    expm,
    int_det_and_power,
    logm,
    operator_norm,
    rational_inverse,
    solve_lyapunov,
)

CAT = [[2, 1], [1, 1]]
GOLDEN = (1 + math.sqrt(5)) / 2


def random_matrix(rng, n, scale):
    X = rng.standard_normal((n, n))
    return X / np.linalg.norm(X, 2) * scale


def random_hurwitz(rng, n):
    X = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(X).real) + rng.uniform(0.1, 2.0)
    return X - shift * np.eye(n)


# --- expm -------------------------------------------------------------------


def test_expm_zero_time_is_identity():
    M = np.random.default_rng(0).standard_normal((4, 4))
    assert np.array_equal(expm(M, 0.0), np.eye(4))


def test_expm_diagonal():
    np.testing.assert_allclose(expm(np.diag([-1.0, 1.0]), math.log(2)), np.diag([0.5, 2.0]), rtol=1e-14)


@pytest.mark.parametrize("seed", range(3))
def test_expm_matches_mpmath(seed):
    rng = np.random.default_rng(seed)
    for _ in range(15):
        n = int(rng.integers(1, 6))
        M = random_matrix(rng, n, rng.uniform(0, 10))
        t = rng.uniform(-2, 2)
        with mpmath.workdps(40):
            ref = np.array(mpmath.expm(mpmath.matrix((t * M).tolist())).tolist(), dtype=float)
        # squaring amplifies roundoff roughly with ||tM||^2
        tol = 100 * np.finfo(float).eps * (1 + abs(t) * np.linalg.norm(M, 2)) ** 2
        assert np.linalg.norm(expm(M, t) - ref, 2) <= tol * max(1.0, np.linalg.norm(ref, 2))


def test_expm_nilpotent_exact():
    N = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    expected = np.array([[1.0, 2.0, 2.0], [0.0, 1.0, 2.0], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(expm(N, 2.0), expected, atol=1e-14)


def test_expm_overflow():
    with pytest.raises(MagnitudeOverflowError):
        expm(np.array([[1.0]]), 1000.0)
    with pytest.raises(OverflowError):
        expm(np.diag([800.0, -1.0]))


def test_expm_rejects_bad_input():
    with pytest.raises(ValueError):
        expm(np.ones((2, 3)))
    with pytest.raises(ValueError):
        expm(np.array([[np.nan]]))


def test_expm_group_law_seeded():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 7))
        M = random_matrix(rng, n, rng.uniform(0, 5))
        s, t = rng.uniform(-3, 3, 2)
        E = expm(M, s + t)
        worst = max(worst, np.linalg.norm(E - expm(M, s) @ expm(M, t), 2) / (1 + np.linalg.norm(E, 2)))
    assert worst <= 1e-10


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), s=st.floats(-3, 3), t=st.floats(-3, 3))
def test_expm_group_law_conditioning_aware(seed, n, s, t):
    # roundoff in E(s)E(t) scales with |E(s)||E(t)|, which can exceed |E(s+t)|
    rng = np.random.default_rng(seed)
    M = random_matrix(rng, n, rng.uniform(0, 5))
    E = expm(M, s + t)
    Es, Et = expm(M, s), expm(M, t)
    bound = 1e-10 * (1 + np.linalg.norm(Es, 2) * np.linalg.norm(Et, 2))
    assert np.linalg.norm(E - Es @ Et, 2) <= bound


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), t=st.floats(-3, 3))
def test_expm_determinant(seed, n, t):
    M = random_matrix(np.random.default_rng(seed), n, 3.0)
    d = np.linalg.det(expm(M, t))
    ref = math.exp(t * np.trace(M))
    assert abs(d - ref) <= 1e-9 * ref


# --- logm -------------------------------------------------------------------


def test_logm_identity():
    r = logm(np.eye(3))
    assert r.power == 1
    np.testing.assert_allclose(r.M, 0.0, atol=1e-15)


def test_logm_diagonal():
    r = logm(np.diag([math.e, 1 / math.e]))
    assert r.power == 1
    np.testing.assert_allclose(r.M, np.diag([1.0, -1.0]), atol=1e-14)


def test_logm_cat_map():
    r = logm(CAT)
    assert r.power == 1
    np.testing.assert_allclose(expm(r.M, 1), CAT, atol=1e-9)
    lam = math.log((3 + math.sqrt(5)) / 2)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(r.M).real), [-lam, lam], rtol=1e-12)


def test_logm_matches_scipy_on_spd():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((4, 4))
    C = X @ X.T + np.eye(4)
    np.testing.assert_allclose(logm(C).M, sla.logm(C).real, atol=1e-10)


def test_logm_square_fallback():
    # eigenvalues -2.414 and 0.414 are negative/positive: no real log of B, but B^2 has one
    B = np.array([[-2.0, 1.0], [1.0, 0.0]])
    r = logm(B)
    assert r.power == 2
    np.testing.assert_allclose(expm(r.M), B @ B, atol=1e-9)


def test_logm_errors():
    with pytest.raises(NotInvertibleError):
        logm(np.array([[1.0, 2.0], [2.0, 4.0]]))
    # a Jordan block with eigenvalue -1: B^2 is a defective matrix, no diagonalizable branch
    with pytest.raises(NoRealLogarithmError):
        logm(np.array([[-1.0, 1.0], [0.0, -1.0]]))


# --- eigen_split --------------------------------------------------------------


def test_eigen_split_diagonal():
    rep, sp = eigen_split(np.diag([-1.0, 2.0]))
    assert (rep.n_stable, rep.n_unstable) == (1, 1)
    np.testing.assert_allclose(np.abs(sp.V_s[:, 0]), [1, 0], atol=1e-15)
    np.testing.assert_allclose(np.abs(sp.V_u[:, 0]), [0, 1], atol=1e-15)


def test_eigen_split_rotation_not_hyperbolic():
    with pytest.raises(NotHyperbolicError):
        eigen_split(np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_eigen_split_cat_discrete():
    rep, sp = eigen_split(np.array(CAT, dtype=float), "discrete")
    np.testing.assert_allclose(rep.eigenvalues.real, [(3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2], rtol=1e-14)
    assert rep.classification == ("stable", "unstable")
    v = np.array([1.0, (-1 - math.sqrt(5)) / 2])
    assert abs(abs(sp.V_s[:, 0] @ v) / np.linalg.norm(v) - 1) < 1e-14


def test_eigen_split_margin_and_tolerance():
    rep, _ = eigen_split(np.diag([-1.0, 2.0]))
    assert rep.margin == 1.0
    with pytest.raises(NotHyperbolicError) as err:
        eigen_split(np.diag([-1.0, 1e-12]))
    assert err.value.details["margin"] == pytest.approx(1e-12)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 7))
def test_eigen_split_invariants(seed, n):
    M = np.random.default_rng(seed).standard_normal((n, n))
    try:
        rep, sp = eigen_split(M, tol=1e-6)
    except NotHyperbolicError:
        return
    assert sp.n_stable + sp.n_unstable == n
    assert sp.residual <= 1e-9 * max(1.0, np.linalg.norm(M, 2))
    np.testing.assert_allclose(sp.pi_s + sp.pi_u, np.eye(n), atol=1e-9)
    scale = 1 + np.linalg.norm(sp.pi_s, 2)
    assert np.linalg.norm(sp.pi_s @ M - M @ sp.pi_s, 2) <= 1e-9 * scale * max(1.0, np.linalg.norm(M, 2))
    # stable block eigenvalues are exactly the stable spectrum
    Ms = sp.V_s.T @ M @ sp.V_s
    assert np.all(np.linalg.eigvals(Ms).real < 0) if sp.n_stable else True


def test_eigen_split_defective():
    M = np.array([[-1.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]])
    rep, sp = eigen_split(M)
    assert (sp.n_stable, sp.n_unstable) == (2, 1)
    assert sp.residual < 1e-14


# --- Lyapunov ---------------------------------------------------------------


def test_lyapunov_closed_forms():
    np.testing.assert_allclose(solve_lyapunov(-np.eye(2)), 0.5 * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(solve_lyapunov(np.diag([-1.0, -2.0])), np.diag([0.5, 0.25]), atol=1e-15)


def test_lyapunov_cat_stable_block():
    M = logm(CAT).M
    _, sp = eigen_split(M)
    Ms = sp.V_s.T @ M @ sp.V_s
    P = solve_lyapunov(Ms)
    assert np.linalg.norm(P @ Ms + Ms.T @ P + np.eye(1)) < 1e-10
    assert P[0, 0] > 0


@pytest.mark.parametrize("seed", range(4))
def test_lyapunov_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    for n in range(1, 7):
        M = random_hurwitz(rng, n)
        ref = sla.solve_continuous_lyapunov(M.T, -np.eye(n))
        np.testing.assert_allclose(solve_lyapunov(M), ref, rtol=1e-8, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_lyapunov_invariants(seed, n):
    rng = np.random.default_rng(seed)
    M = random_hurwitz(rng, n)
    P = solve_lyapunov(M)
    assert np.max(np.abs(P - P.T)) <= 1e-12 * max(1.0, np.max(np.abs(P)))
    scale = max(1.0, np.linalg.norm(P, 2) * np.linalg.norm(M, 2))
    assert np.linalg.norm(P @ M + M.T @ P + np.eye(n), 2) <= 1e-10 * scale
    X = rng.standard_normal((100, n))
    assert np.all(np.einsum("ij,jk,ik->i", X, P, X) > 0)


def test_lyapunov_errors():
    with pytest.raises(NotStableError):
        solve_lyapunov(np.diag([-1.0, 1.0]))
    with pytest.raises(ConditioningError) as err:
        solve_lyapunov(np.diag([-1.0, -1e-14]))
    assert err.value.condition > 1e13


# --- norms and integer arithmetic --------------------------------------------


def test_operator_norm_examples():
    assert operator_norm(np.eye(3)) == pytest.approx(1.0)
    assert operator_norm(np.diag([3.0, -4.0])) == pytest.approx(4.0)
    assert operator_norm(np.array([[0.0, -1.0], [-1.0, 1.0]])) == pytest.approx(GOLDEN, abs=1e-15)
    assert operator_norm(np.array([[1j, 0], [0, 2]])) == pytest.approx(2.0)


def test_int_det_and_power_examples():
    B = IntMatrix.from_array(CAT)
    assert int_det_and_power(B, 1) == (1, B)
    assert int_det_and_power(B, 2) == (1, IntMatrix(((5, 3), (3, 2))))
    assert int_det_and_power(B, -1) == (1, IntMatrix(((1, -1), (-1, 2))))
    assert int_det_and_power(B, 0)[1] == IntMatrix.identity(2)


def test_int_power_not_unimodular():
    with pytest.raises(NotUnimodularError):
        int_det_and_power(IntMatrix(((2, 0), (0, 1))), -1)


def test_int_power_is_exact_beyond_float():
    B = IntMatrix.from_array(CAT)
    P = B.power(200)
    # B^n = [[F(2n+1), F(2n)], [F(2n), F(2n-1)]]
    fib = [0, 1]
    while len(fib) < 402:
        fib.append(fib[-1] + fib[-2])
    assert P.rows == ((fib[401], fib[400]), (fib[400], fib[399]))


@pytest.mark.parametrize("B", [CAT, [[1, 1, 0], [1, 2, 1], [0, 1, 2]], [[0, 1], [-1, 3]]])
def test_power_inverse_identity(B):
    B = IntMatrix.from_array(B)
    I = IntMatrix.identity(B.n)
    for n in range(0, 65, 7):
        assert B.power(n) @ B.power(-n) == I


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=9, max_size=9))
def test_bareiss_det_matches_float(entries):
    A = IntMatrix.from_array(np.array(entries).reshape(3, 3))
    assert A.det() == round(np.linalg.det(A.to_array()))


def test_rational_inverse_exact():
    B = IntMatrix.from_array(CAT)
    IB = IntMatrix.identity(2) - B.power(30)
    inv = rational_inverse(IB)
    prod = [[sum(IB.rows[i][k] * inv[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
    assert prod == [[1, 0], [0, 1]]
    with pytest.raises(NotInvertibleError):
        rational_inverse(IntMatrix(((1, 2), (2, 4))))


def test_intmatrix_validation():
    with pytest.raises(ValueError):
        IntMatrix.from_array([[1.5, 0], [0, 1]])
    with pytest.raises(ValueError):
        IntMatrix(((1, 2), (3,)))
