"""Dense matrix kernels.

Real matrices are plain ``numpy.ndarray`` objects.  Integer matrices use
:class:`IntMatrix`, which keeps Python integers so determinants, powers
and inverses are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (
    ConditioningError,
    DomainError,
    MagnitudeOverflowError,
    NoRealLogarithmError,
    NotHyperbolicError,
    NotInvertibleError,
    NotStableError,
    NotUnimodularError,
)

__all__ = [
    "IntMatrix",
    "InvariantSplitting",
    "RealLogarithm",
    "SpectrumReport",
    "eigen_split",
    "expm",
    "int_det_and_power",
    "logm",
    "operator_norm",
    "rational_inverse",
    "rational_solve",
    "solve_lyapunov",
]

_EPS = np.finfo(float).eps

def _as_square(M, name="M") -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} has non-finite entries")
    return A


def expm(M, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(t M)`` by Pade scaling and squaring.

    The kernel is :func:`scipy.linalg.expm`; this wrapper validates the
    input and turns overflow into an error instead of ``inf`` entries.

    Raises
    ------
    MagnitudeOverflowError
        If ``|t| ||M||`` or the result is not representable.
    """
    A = _as_square(M) * float(t)
    if A.shape[0] == 0:
        return np.zeros((0, 0))
    norm1 = np.linalg.norm(A, 1)
    if not math.isfinite(norm1):
        raise MagnitudeOverflowError("magnitude overflow: |t|*||M|| is not finite")
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise MagnitudeOverflowError(f"magnitude overflow in exp(tM), ||tM||_1 = {norm1:.3e}")
    return E


@dataclass(frozen=True, eq=False)
class RealLogarithm:
    """Real logarithm ``M`` with ``expm(M) = B**power``."""

    M: np.ndarray
    power: int


def logm(B, tol: float = 1e-9) -> RealLogarithm:
    """Real logarithm of ``B``, falling back to ``B @ B``.

    Only the diagonalizable case is handled: if ``B`` has an eigenvalue on
    the closed negative real axis (or is defective) the same construction
    is applied to ``B**2``, whose real negative eigenvalues become
    positive.  The returned ``power`` records which branch succeeded.
    """
    B = _as_square(B, "B")
    n = B.shape[0]
    if n == 0:
        return RealLogarithm(np.zeros((0, 0)), 1)
    sv = np.linalg.svd(B, compute_uv=False)
    if sv[-1] <= _EPS * n * sv[0]:
        raise NotInvertibleError("not invertible: B is numerically singular")

    for power in (1, 2):
        C = B if power == 1 else B @ B
        w, V = np.linalg.eig(C)
        scale = np.abs(w)
        if np.any((w.real <= 0) & (np.abs(w.imag) <= tol * scale)):
            continue
        if np.linalg.cond(V) > 1e8:
            continue
        L = (V * np.log(w)) @ np.linalg.inv(V)
        Lnorm = max(1.0, np.linalg.norm(L, 2))
        if np.max(np.abs(L.imag), initial=0.0) > 1e-8 * Lnorm:
            continue
        M = np.ascontiguousarray(L.real)
        err = np.linalg.norm(expm(M) - C, 2)
        if err <= 1e-8 * (1.0 + np.linalg.norm(C, 2)):
            return RealLogarithm(M, power)
    raise NoRealLogarithmError("no real logarithm found for B or B^2")


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    classification: tuple
    margin: float
    mode: str

    @property
    def n_stable(self) -> int:
        return sum(tag == "stable" for tag in self.classification)

    @property
    def n_unstable(self) -> int:
        return sum(tag == "unstable" for tag in self.classification)

    @classmethod
    def from_eigenvalues(cls, w, mode: str, tol: float) -> "SpectrumReport":
        """Classify eigenvalues, rejecting any within ``tol`` of the forbidden locus.

        Continuous mode measures ``|Re lambda|`` against ``tol`` times the
        spectral radius; discrete mode measures ``||lambda| - 1|`` against
        ``tol`` directly since the unit circle has a fixed scale.
        """
        w = np.asarray(w, dtype=complex)
        order = np.lexsort((w.imag, w.real))
        w = w[order]
        if mode == "continuous":
            radius = float(np.max(np.abs(w), initial=0.0))
            dist = np.abs(w.real)
            threshold = tol * radius
            stable = w.real < 0
            if radius == 0.0:
                raise NotHyperbolicError("not hyperbolic: spectrum is {0}", margin=0.0)
        elif mode == "discrete":
            dist = np.abs(np.abs(w) - 1.0)
            threshold = tol
            stable = np.abs(w) < 1.0
        else:
            raise DomainError(f"unknown mode {mode!r}")
        margin = float(np.min(dist, initial=np.inf))
        if np.any(dist <= threshold):
            raise NotHyperbolicError(
                f"not hyperbolic: eigenvalue margin {margin:.3e} <= {threshold:.3e}",
                margin=margin,
            )
        tags = tuple("stable" if s else "unstable" for s in stable)
        return cls(w, tags, margin, mode)


@dataclass(frozen=True, eq=False)
class InvariantSplitting:
    """Orthonormal bases of the stable and unstable invariant subspaces.

    ``pi_s`` and ``pi_u`` are the complementary (generally oblique)
    projections of R^N onto E^s along E^u and vice versa.
    """

    V_s: np.ndarray
    V_u: np.ndarray
    pi_s: np.ndarray
    pi_u: np.ndarray
    residual: float

    @property
    def n_stable(self) -> int:
        return self.V_s.shape[1]

    @property
    def n_unstable(self) -> int:
        return self.V_u.shape[1]


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # Deterministic orientation: largest-magnitude entry of each column positive.
    V = V.copy()
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def _invariant_residual(M: np.ndarray, V: np.ndarray) -> float:
    if V.shape[1] == 0:
        return 0.0
    R = V.T @ M @ V
    return float(np.max(np.linalg.norm(M @ V - V @ R, axis=0)))


def eigen_split(M, mode: str = "continuous", tol: float = 1e-9):
    """Split R^N into the stable and unstable invariant subspaces of ``M``.

    Returns ``(SpectrumReport, InvariantSplitting)``.  The bases come from
    ordered real Schur decompositions, so they stay well defined for
    defective matrices.
    """
    M = _as_square(M)
    n = M.shape[0]
    report = SpectrumReport.from_eigenvalues(np.linalg.eigvals(M), mode, tol)
    sort_s, sort_u = ("lhp", "rhp") if mode == "continuous" else ("iuc", "ouc")
    _, Zs, ns = scipy.linalg.schur(M, output="real", sort=sort_s)
    _, Zu, nu = scipy.linalg.schur(M, output="real", sort=sort_u)
    if ns != report.n_stable or nu != report.n_unstable or ns + nu != n:
        raise NotHyperbolicError(
            f"not hyperbolic: Schur reordering gave {ns}+{nu} != {n} eigenvalues"
        )
    V_s = _fix_signs(Zs[:, :ns])
    V_u = _fix_signs(Zu[:, :nu])
    W = np.hstack([V_s, V_u])
    Winv = np.linalg.inv(W)
    pi_s = V_s @ Winv[:ns]
    pi_u = V_u @ Winv[ns:]
    residual = max(_invariant_residual(M, V_s), _invariant_residual(M, V_u))
    return report, InvariantSplitting(V_s, V_u, pi_s, pi_u, residual)


def solve_lyapunov(M, max_condition: float = 1e13) -> np.ndarray:
    """Solve ``P M + M^T P = -I`` for Hurwitz ``M``.

    Uses the Kronecker-vectorized system
    ``(M^T (x) I + I (x) M^T) vec(P) = -vec(I)`` (column-major ``vec``)
    followed by one step of iterative refinement.
    """
    M = _as_square(M)
    n = M.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    w = np.linalg.eigvals(M)
    if np.max(w.real) >= 0:
        raise NotStableError(
            f"not stable: max Re(lambda) = {np.max(w.real):.3e}", spectral_abscissa=float(np.max(w.real))
        )
    I = np.eye(n)
    K = np.kron(M.T, I) + np.kron(I, M.T)
    cond = np.linalg.cond(K)
    if not cond < max_condition:
        raise ConditioningError(f"conditioning failure: cond = {cond:.3e}", condition=float(cond))
    rhs = -I.reshape(-1, order="F")
    P = np.linalg.solve(K, rhs).reshape((n, n), order="F")
    P = 0.5 * (P + P.T)
    R = P @ M + M.T @ P + I
    dP = np.linalg.solve(K, -R.reshape(-1, order="F")).reshape((n, n), order="F")
    P = P + 0.5 * (dP + dP.T)
    if np.min(np.linalg.eigvalsh(P)) <= 0:
        raise ConditioningError("conditioning failure: computed P is not positive definite", condition=float(cond))
    return P


def operator_norm(A) -> float:
    """Largest singular value of ``A`` (real or complex)."""
    A = np.asarray(A)
    if A.dtype == object:
        A = A.astype(float)
    if not np.all(np.isfinite(A)):
        raise DomainError("operator_norm: non-finite entries")
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


# ---------------------------------------------------------------------------
# exact integer matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntMatrix:
    """Square matrix of arbitrary-precision integers."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(_as_int(x) for x in row) for row in self.rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DomainError("IntMatrix must be square")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def from_array(cls, A) -> "IntMatrix":
        A = np.asarray(A)
        if A.dtype.kind == "f":
            if not np.all(A == np.round(A)):
                raise DomainError("IntMatrix entries must be integers")
            A = A.astype(object)
        return cls(tuple(tuple(int(x) for x in row) for row in A.tolist()))

    @property
    def n(self) -> int:
        return len(self.rows)

    def tolist(self) -> list:
        return [list(r) for r in self.rows]

    def to_array(self, dtype=float) -> np.ndarray:
        if dtype is object:
            return np.array(self.tolist(), dtype=object).reshape(self.n, self.n)
        return np.array([[float(x) for x in r] for r in self.rows], dtype=dtype).reshape(self.n, self.n)

    def __matmul__(self, other):
        if isinstance(other, IntMatrix):
            cols = list(zip(*other.rows))
            return IntMatrix(tuple(tuple(sum(a * b for a, b in zip(r, c)) for c in cols) for r in self.rows))
        return tuple(sum(a * b for a, b in zip(r, other)) for r in self.rows)

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(tuple(tuple(-a for a in r) for r in self.rows))

    def det(self) -> int:
        return _bareiss_det(self.rows)

    def inverse(self) -> "IntMatrix":
        """Exact inverse; requires ``det = +-1``."""
        d = self.det()
        if abs(d) != 1:
            raise NotUnimodularError(f"not unimodular: det = {d}")
        inv = rational_inverse(self)
        return IntMatrix(tuple(tuple(int(x) for x in r) for r in inv))

    def power(self, k: int) -> "IntMatrix":
        return _int_power(self, int(k))


def _as_int(x) -> int:
    if isinstance(x, (bool, np.bool_)):
        raise DomainError("IntMatrix entries must be integers, got bool")
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    if isinstance(x, float) and x.is_integer():
        return int(x)
    raise DomainError(f"IntMatrix entries must be integers, got {x!r}")


def _bareiss_det(rows) -> int:
    n = len(rows)
    if n == 0:
        return 1
    A = [list(r) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * akk - aik * A[k][j]) // prev
        prev = akk
    return sign * A[n - 1][n - 1]


@lru_cache(maxsize=1024)
def _int_power(B: IntMatrix, k: int) -> IntMatrix:
    if k < 0:
        return _int_power(B.inverse(), -k)
    result = IntMatrix.identity(B.n)
    base = B
    while k:
        if k & 1:
            result = result @ base
        k >>= 1
        if k:
            base = base @ base
    return result


def _fraction_rows(A) -> list:
    rows = A.rows if isinstance(A, IntMatrix) else A
    return [[Fraction(x) for x in r] for r in rows]


def rational_inverse(A) -> list:
    """Exact inverse of an integer or rational matrix as nested ``Fraction`` lists."""
    a = _fraction_rows(A)
    n = len(a)
    aug = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise NotInvertibleError("not invertible: exact matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def rational_solve(A, b: Sequence) -> list:
    """Exact solution ``x`` of ``A x = b`` for integer/rational data."""
    inv = rational_inverse(A)
    bb = [Fraction(x) for x in b]
    return [sum((c * y for c, y in zip(row, bb)), Fraction(0)) for row in inv]


def int_det_and_power(B: IntMatrix, n: int):
    """Exact determinant and power ``B**n``.

    Negative powers require ``|det B| = 1``.
    """
    if not isinstance(B, IntMatrix):
        B = IntMatrix.from_array(B)
    d = B.det()
    if n < 0 and abs(d) != 1:
        raise NotUnimodularError(f"not unimodular: det = {d}, cannot take power {n}")
    return d, B.power(n)
