import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitkleinian.errors import DomainError, PointAtInfinityError
from splitkleinian.group import (
    GroupContext,
    GroupElement,
    LatticeElement,
    LieAlgebraElement,
    LiftElement,
    ProjectivePoint,
    act_affine,
    act_projective,
    adjoint_matrix,
    chart,
    compose,
    identity,
    inverse,
    lie_bracket_matrix,
    nilradical_test,
    rho,
    unchart,
)
from splitkleinian.linalg import IntMatrix

E = math.e
DIAG = GroupContext(np.diag([-1.0, 1.0]))
CAT = GroupContext.from_integer_matrix([[2, 1], [1, 1]])


def random_element(rng, n, t_range=1.0):
    return GroupElement(rng.standard_normal(n), rng.uniform(-t_range, t_range))


def random_context(rng, n):
    return GroupContext(rng.standard_normal((n, n)) / math.sqrt(n))


def close(g, h, tol):
    return np.linalg.norm(g.b - h.b) <= tol * (1 + np.linalg.norm(g.b)) and abs(g.t - h.t) <= tol


# --- compose / inverse ------------------------------------------------------


def test_compose_identity():
    g = GroupElement([0.3, -2.0], 0.7)
    h = compose(identity(DIAG), g, DIAG)
    assert close(h, g, 0) and close(compose(g, identity(DIAG), DIAG), g, 1e-15)


def test_compose_closed_form():
    g = compose(GroupElement([1.0, 0.0], 1.0), GroupElement([0.0, 1.0], 0.0), DIAG)
    np.testing.assert_allclose(g.b, [1.0, E], rtol=1e-15)
    assert g.t == 1.0


def test_inverse_examples():
    assert close(inverse(identity(DIAG), DIAG), identity(DIAG), 0)
    g = inverse(GroupElement([2.0, -1.0], 0.0), DIAG)
    np.testing.assert_array_equal(g.b, [-2.0, 1.0])
    g = inverse(GroupElement([1.0, 0.0], 1.0), DIAG)
    np.testing.assert_allclose(g.b, [-E, 0.0], rtol=1e-15)
    assert g.t == -1.0


def test_group_laws_random():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        ctx = random_context(rng, n)
        f, g, h = (random_element(rng, n) for _ in range(3))
        lhs = compose(compose(f, g, ctx), h, ctx)
        rhs = compose(f, compose(g, h, ctx), ctx)
        assert close(lhs, rhs, 1e-10)
        e = compose(g, inverse(g, ctx), ctx)
        assert np.linalg.norm(e.b) <= 1e-10 and abs(e.t) <= 1e-10
        e = compose(inverse(g, ctx), g, ctx)
        assert np.linalg.norm(e.b) <= 1e-10 and abs(e.t) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5))
def test_rho_homomorphism(seed, n):
    rng = np.random.default_rng(seed)
    ctx = random_context(rng, n)
    g, h = random_element(rng, n, 2.0), random_element(rng, n, 2.0)
    R = rho(compose(g, h, ctx), ctx)
    assert np.linalg.norm(R - rho(g, ctx) @ rho(h, ctx), 2) <= 1e-10 * (1 + np.linalg.norm(R, 2))


def test_element_validation():
    with pytest.raises(DomainError):
        GroupElement([np.inf, 0.0], 0.0)
    with pytest.raises(DomainError):
        LiftElement(GroupElement([0.0], 0.0), 2)
    with pytest.raises(TypeError):
        compose(GroupElement([0.0, 0.0]), LatticeElement((0, 0), 0), CAT)


# --- lattice elements -------------------------------------------------------


def test_rho_examples():
    np.testing.assert_array_equal(rho(identity(DIAG), DIAG), np.eye(3))
    np.testing.assert_array_equal(rho(GroupElement([2.0, 3.0], 0.0), DIAG), [[1, 0, 2], [0, 1, 3], [0, 0, 1]])
    R = rho(LatticeElement((1, 0), 1), CAT)
    assert R.dtype == np.int64
    np.testing.assert_array_equal(R, [[2, 1, 1], [1, 1, 0], [0, 0, 1]])


def test_lattice_compose_exact():
    g, h = LatticeElement((1, -2), 3), LatticeElement((0, 5), -7)
    gh = compose(g, h, CAT)
    np.testing.assert_array_equal(rho(gh, CAT), rho(g, CAT) @ rho(h, CAT))
    assert compose(g, inverse(g, CAT), CAT) == LatticeElement((0, 0), 0)


def test_lattice_rho_big_integers():
    R = rho(LatticeElement((0, 0), 100), CAT)
    assert R.dtype == object
    assert R[0, 0] == IntMatrix(((2, 1), (1, 1))).power(100).rows[0][0]


def test_lattice_matches_flow():
    # B = A(1), so (b, n) acts like the flow element (b, n)
    g = LatticeElement((1, 2), 3)
    z = np.array([0.3 + 1j, -0.2 + 0.5j])
    lhs = act_affine(g, z, CAT)
    rhs = act_affine(GroupElement([1.0, 2.0], 3.0), z, CAT)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9)


def test_disconnected_lift():
    # eigenvalues of B are negative, so B is not exp(M) but B^2 is
    ctx = GroupContext.from_integer_matrix([[-2, 1], [1, -1]])
    assert ctx.mode == "disconnected" and ctx.power == 2
    Bf = ctx.B.to_array()
    g = LiftElement(GroupElement([0.5, -1.0], 0.3), 1)
    h = LiftElement(GroupElement([2.0, 1.0], -0.8), 1)
    gh = compose(g, h, ctx)
    # two factors of B fold into one unit of flow time
    assert gh.parity == 0
    np.testing.assert_allclose(rho(gh, ctx), rho(g, ctx) @ rho(h, ctx), atol=1e-10)
    np.testing.assert_allclose(rho(inverse(g, ctx), ctx) @ rho(g, ctx), np.eye(3), atol=1e-10)
    np.testing.assert_allclose(rho(LiftElement(GroupElement([0, 0], 0.0), 1), ctx)[:2, :2], Bf)


# --- projective action ------------------------------------------------------


def test_chart_examples():
    np.testing.assert_array_equal(chart(ProjectivePoint([0, 0, 1])), [0, 0])
    with pytest.raises(PointAtInfinityError):
        chart(ProjectivePoint([1, 0, 0]))
    p = ProjectivePoint([1j, 2, 0])
    q = act_projective(GroupElement([5.0, -3.0], 0.0), p, DIAG)
    assert q.distance(p) < 1e-15


def test_act_projective_cat_example():
    z = act_affine(LatticeElement((0, 0), 1), np.array([1j, 0]), CAT)
    np.testing.assert_array_equal(z, [2j, 1j])
    q = act_projective(LatticeElement((0, 0), 1), unchart([1j, 0]), CAT)
    assert q.distance(unchart([2j, 1j])) < 1e-15


def test_canonical_representative():
    a = ProjectivePoint([1j, 2, 3 - 1j])
    b = ProjectivePoint(np.array([1j, 2, 3 - 1j]) * (-2.5 + 0.7j))
    np.testing.assert_allclose(a.homogeneous, b.homogeneous, atol=1e-15)
    assert a.homogeneous[0].imag == 0 and a.homogeneous[0].real > 0
    with pytest.raises(DomainError):
        ProjectivePoint([0, 0])


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_chart_equivariance(seed, n):
    rng = np.random.default_rng(seed)
    ctx = random_context(rng, n)
    g = random_element(rng, n)
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert act_projective(g, unchart(z), ctx).distance(unchart(act_affine(g, z, ctx))) < 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_translations_fix_infinity(seed, n):
    rng = np.random.default_rng(seed)
    ctx = random_context(rng, n)
    p = ProjectivePoint(np.append(rng.standard_normal(n) + 1j * rng.standard_normal(n), 0.0))
    q = act_projective(GroupElement(10 * rng.standard_normal(n), 0.0), p, ctx)
    assert q.distance(p) < 1e-14 and q.at_infinity()


# --- adjoint and nilradical -------------------------------------------------


def test_adjoint_examples():
    np.testing.assert_array_equal(adjoint_matrix(identity(DIAG), DIAG), np.eye(3))
    w = np.linalg.eigvals(adjoint_matrix(GroupElement([1.0, 2.0], 0.0), DIAG))
    np.testing.assert_allclose(w, 1.0, atol=1e-12)
    w = np.sort(np.linalg.eigvals(adjoint_matrix(GroupElement([0.0, 0.0], 0.7), DIAG)).real)
    np.testing.assert_allclose(w, np.sort([1.0, math.exp(-0.7), math.exp(0.7)]), rtol=1e-14)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_adjoint_matches_conjugation(seed, n):
    rng = np.random.default_rng(seed)
    ctx = random_context(rng, n)
    g = random_element(rng, n)
    X = LieAlgebraElement(rng.standard_normal(), rng.standard_normal(n))
    Y = adjoint_matrix(g, ctx) @ X.coords()
    np.testing.assert_allclose(LieAlgebraElement(Y[0], Y[1:]).matrix(ctx.M), lie_bracket_matrix(X, g, ctx), atol=1e-10)


def test_nilradical_examples():
    strict = GroupContext(np.array([[0.0, 1.0, 3.0], [0.0, 0.0, -2.0], [0.0, 0.0, 0.0]]))
    rep = nilradical_test(strict)
    assert rep.group_is_nilpotent and not rep.nilradical_is_RN
    assert nilradical_test(DIAG).nilradical_is_RN
    assert nilradical_test(CAT).nilradical_is_RN
    assert nilradical_test(GroupContext(np.zeros((2, 2)))).group_is_nilpotent


def test_context_validation():
    with pytest.raises(DomainError):
        GroupContext(np.diag([-1.0, 1.0]), B=IntMatrix(((2, 1), (1, 1))))
    with pytest.raises(DomainError):
        GroupContext(np.ones((2, 3)))
    with pytest.raises(DomainError):
        DIAG.B_power(1)
