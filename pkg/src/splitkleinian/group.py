"""The semidirect product R^N x|_A R, its integer lattice, and their actions.

A :class:`GroupElement` ``(b, t)`` is represented by the affine matrix
``[[A(t), b], [0, 1]]`` with ``A(t) = exp(tM)``.  A :class:`LatticeElement`
``(b, n)`` uses ``B**n`` instead, computed exactly.  When the generator
only satisfies ``exp(M) = B**2``, :class:`LiftElement` carries the extra
parity bit for the disconnected lift ``C = B**parity A(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DomainError, PointAtInfinityError
from .linalg import IntMatrix, expm, logm, operator_norm

__all__ = [
    "AFFINE_INFINITY_TOL",
    "GroupContext",
    "GroupElement",
    "LatticeElement",
    "LieAlgebraElement",
    "LiftElement",
    "NilradicalReport",
    "ProjectivePoint",
    "act_affine",
    "act_projective",
    "adjoint_matrix",
    "chart",
    "compose",
    "identity",
    "inverse",
    "linear_part",
    "lie_bracket_matrix",
    "nilradical_test",
    "rho",
    "unchart",
]

# |z_{N+1}| <= AFFINE_INFINITY_TOL * ||z|| puts a point on the hyperplane at infinity.
AFFINE_INFINITY_TOL = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GroupElement:
    b: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        b = _frozen(self.b)
        if b.ndim != 1 or not np.all(np.isfinite(b)) or not np.isfinite(self.t):
            raise DomainError("GroupElement needs a finite vector b and finite t")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "t", float(self.t))

    @property
    def N(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class LatticeElement:
    b: tuple
    n: int = 0

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(int(x) for x in self.b))
        object.__setattr__(self, "n", int(self.n))

    @property
    def N(self) -> int:
        return len(self.b)


@dataclass(frozen=True, eq=False)
class LiftElement:
    """Element of the disconnected lift: linear part ``B**parity @ A(g.t)``."""

    g: GroupElement
    parity: int = 0

    def __post_init__(self):
        if self.parity not in (0, 1):
            raise DomainError("parity must be 0 or 1")

    @property
    def N(self) -> int:
        return self.g.N


@dataclass(frozen=True, eq=False)
class LieAlgebraElement:
    """``X = [[s M, p], [0, 0]]`` in the Lie algebra of the image of rho."""

    s: float
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p))
        object.__setattr__(self, "s", float(self.s))

    def coords(self) -> np.ndarray:
        return np.concatenate([[self.s], self.p])

    def matrix(self, M) -> np.ndarray:
        M = np.asarray(M, dtype=float)
        n = M.shape[0]
        X = np.zeros((n + 1, n + 1))
        X[:n, :n] = self.s * M
        X[:n, n] = self.p
        return X


Element = Union[GroupElement, LatticeElement, LiftElement]


@dataclass(frozen=True, eq=False)
class GroupContext:
    """Generator ``M`` of ``A(t) = exp(tM)`` plus an optional integer matrix.

    With ``B`` given, ``expm(M) = B**power`` must hold; ``power == 2``
    means the group generated by ``B`` only embeds in the disconnected
    lift and ``mode`` is ``"disconnected"``.
    """

    M: np.ndarray
    B: Optional[IntMatrix] = None
    power: int = 1
    mode: str = field(default="connected")

    def __post_init__(self):
        M = _frozen(self.M)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DomainError("generator M must be square")
        object.__setattr__(self, "M", M)
        if self.B is not None:
            if self.B.n != M.shape[0]:
                raise DomainError("B and M have different sizes")
            if self.power not in (1, 2):
                raise DomainError("power must be 1 or 2")
            target = self.B.power(self.power).to_array()
            err = operator_norm(expm(M) - target)
            if err > 1e-9 * (1.0 + operator_norm(target)):
                raise DomainError(f"expm(M) differs from B^{self.power} by {err:.3e}")
        if self.mode not in ("connected", "disconnected"):
            raise DomainError(f"unknown mode {self.mode!r}")

    @classmethod
    def from_integer_matrix(cls, B) -> "GroupContext":
        """Context whose one-parameter group passes through ``B`` or ``B**2``."""
        if not isinstance(B, IntMatrix):
            B = IntMatrix.from_array(B)
        log = logm(B.to_array())
        mode = "connected" if log.power == 1 else "disconnected"
        return cls(log.M, B=B, power=log.power, mode=mode)

    @property
    def N(self) -> int:
        return self.M.shape[0]

    def A(self, t: float) -> np.ndarray:
        return expm(self.M, t)

    def B_power(self, n: int) -> IntMatrix:
        if self.B is None:
            raise DomainError("context has no integer matrix B")
        return self.B.power(n)


def identity(ctx: GroupContext) -> GroupElement:
    return GroupElement(np.zeros(ctx.N), 0.0)


def linear_part(g: Element, ctx: GroupContext) -> np.ndarray:
    if isinstance(g, GroupElement):
        return ctx.A(g.t)
    if isinstance(g, LatticeElement):
        return ctx.B_power(g.n).to_array()
    if isinstance(g, LiftElement):
        A = ctx.A(g.g.t)
        return ctx.B_power(1).to_array() @ A if g.parity else A
    raise TypeError(f"not a group element: {g!r}")


def _normalize_lift(b, t, parity, ctx) -> LiftElement:
    # B**power = A(1), so two factors of B fold into the flow time.
    if parity >= 2 or (parity == 1 and ctx.power == 1):
        steps = parity // ctx.power
        parity -= steps * ctx.power
        t += steps
    return LiftElement(GroupElement(b, t), parity)


def compose(g: Element, h: Element, ctx: GroupContext) -> Element:
    """Group law ``g . h``: ``(g.b + L(g) h.b, g.t + h.t)``."""
    if isinstance(g, GroupElement) and isinstance(h, GroupElement):
        return GroupElement(g.b + ctx.A(g.t) @ h.b, g.t + h.t)
    if isinstance(g, LatticeElement) and isinstance(h, LatticeElement):
        Bg = ctx.B_power(g.n)
        shift = Bg @ h.b
        return LatticeElement(tuple(x + y for x, y in zip(g.b, shift)), g.n + h.n)
    if isinstance(g, LiftElement) and isinstance(h, LiftElement):
        b = g.g.b + linear_part(g, ctx) @ h.g.b
        return _normalize_lift(b, g.g.t + h.g.t, g.parity + h.parity, ctx)
    raise TypeError("compose needs two elements of the same kind")


def inverse(g: Element, ctx: GroupContext) -> Element:
    if isinstance(g, GroupElement):
        return GroupElement(-ctx.A(-g.t) @ g.b, -g.t)
    if isinstance(g, LatticeElement):
        Binv = ctx.B_power(-g.n)
        return LatticeElement(tuple(-x for x in Binv @ g.b), -g.n)
    if isinstance(g, LiftElement):
        if g.parity == 0:
            return LiftElement(inverse(g.g, ctx), 0)
        # (B A(t))^{-1} = A(-t) B^{-1} = B A(-t) B^{-2}
        Linv = np.linalg.inv(linear_part(g, ctx))
        if ctx.power == 2:
            return LiftElement(GroupElement(-Linv @ g.g.b, -g.g.t - 1.0), 1)
        return LiftElement(GroupElement(-Linv @ g.g.b, -g.g.t - 1.0), 0)
    raise TypeError(f"not a group element: {g!r}")


def rho(g: Element, ctx: GroupContext) -> np.ndarray:
    """Affine matrix ``[[L, b], [0, 1]]`` of ``g``.

    Lattice elements give an integer array (``object`` dtype when entries
    exceed 64 bits).
    """
    n = ctx.N
    if isinstance(g, LatticeElement):
        Bn = ctx.B_power(g.n)
        rows = [list(r) + [bi] for r, bi in zip(Bn.rows, g.b)]
        rows.append([0] * n + [1])
        big = any(abs(x) >= 2**62 for r in rows for x in r)
        return np.array(rows, dtype=object if big else np.int64)
    b = g.b if isinstance(g, GroupElement) else g.g.b
    R = np.zeros((n + 1, n + 1))
    R[:n, :n] = linear_part(g, ctx)
    R[:n, n] = b
    R[n, n] = 1.0
    return R


def act_affine(g: Element, z, ctx: GroupContext) -> np.ndarray:
    """Affine action ``L(g) z + b`` on C^N (real and imaginary parts separately)."""
    z = np.asarray(z)
    L = linear_part(g, ctx)
    b = g.g.b if isinstance(g, LiftElement) else np.asarray(g.b, dtype=float)
    return L @ z + b


@dataclass(frozen=True, eq=False)
class ProjectivePoint:
    """Point of CP^N stored as a canonical unit representative.

    The first coordinate whose modulus exceeds ``1e-12`` is rotated to the
    positive real axis.
    """

    homogeneous: np.ndarray

    def __post_init__(self):
        v = np.array(self.homogeneous, dtype=complex)
        if v.ndim != 1 or v.size < 2:
            raise DomainError("homogeneous coordinates must be a vector of length >= 2")
        if not np.all(np.isfinite(v)):
            raise DomainError("homogeneous coordinates must be finite")
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise DomainError("the zero vector is not a projective point")
        v = v / nrm
        lead = np.flatnonzero(np.abs(v) > 1e-12)[0]
        v = v * (abs(v[lead]) / v[lead])
        v[lead] = abs(v[lead])
        v.setflags(write=False)
        object.__setattr__(self, "homogeneous", v)

    @property
    def N(self) -> int:
        return self.homogeneous.size - 1

    def at_infinity(self, tol: float = AFFINE_INFINITY_TOL) -> bool:
        return abs(self.homogeneous[-1]) <= tol

    def distance(self, other: "ProjectivePoint") -> float:
        """Chordal distance ``sin(theta)`` with ``cos(theta) = |<u, v>|``.

        Computed as the residual of projecting ``u`` onto ``v``, which keeps
        full accuracy for nearby points.
        """
        u, v = self.homogeneous, other.homogeneous
        return float(np.linalg.norm(u - v * np.vdot(v, u)))


def chart(p: ProjectivePoint, tol: float = AFFINE_INFINITY_TOL) -> np.ndarray:
    """Affine coordinates ``(z_1/z_{N+1}, ..., z_N/z_{N+1})``."""
    if p.at_infinity(tol):
        raise PointAtInfinityError("point at infinity has no affine chart coordinates")
    v = p.homogeneous
    return v[:-1] / v[-1]


def unchart(z) -> ProjectivePoint:
    z = np.asarray(z, dtype=complex)
    return ProjectivePoint(np.append(z, 1.0))


def act_projective(g: Element, p: ProjectivePoint, ctx: GroupContext) -> ProjectivePoint:
    R = rho(g, ctx)
    if R.dtype == object:
        R = R.astype(float)
    return ProjectivePoint(R @ p.homogeneous)


def adjoint_matrix(g: GroupElement, ctx: GroupContext) -> np.ndarray:
    """Matrix of ``Ad_g`` in Lie algebra coordinates ``(s, p)``.

    ``Ad_g X = g X g^{-1}`` sends ``(s, p)`` to ``(s, -s M b + A(t) p)``.
    """
    if not isinstance(g, GroupElement):
        raise TypeError("adjoint_matrix expects a GroupElement")
    n = ctx.N
    Ad = np.zeros((n + 1, n + 1))
    Ad[0, 0] = 1.0
    Ad[1:, 0] = -ctx.M @ g.b
    Ad[1:, 1:] = ctx.A(g.t)
    return Ad


def lie_bracket_matrix(X: LieAlgebraElement, g: GroupElement, ctx: GroupContext) -> np.ndarray:
    """``rho(g) X rho(g)^{-1}`` computed directly, for cross-checking :func:`adjoint_matrix`."""
    R = rho(g, ctx)
    return R @ X.matrix(ctx.M) @ np.linalg.inv(R)


@dataclass(frozen=True)
class NilradicalReport:
    nilradical_is_RN: bool
    group_is_nilpotent: bool


def nilradical_test(ctx: GroupContext, tol: float = 1e-9) -> NilradicalReport:
    """Decide whether ``M`` has a nonzero eigenvalue.

    ``M`` has spectrum ``{0}`` exactly when ``M**N = 0``; testing the power
    avoids the ``eps**(1/N)`` eigenvalue smear of defective nilpotents.
    """
    M = np.asarray(ctx.M)
    n = M.shape[0]
    scale = operator_norm(M)
    if scale == 0.0:
        return NilradicalReport(False, True)
    Mn = np.linalg.matrix_power(M / scale, n)
    nilpotent = operator_norm(Mn) <= tol
    return NilradicalReport(not nilpotent, nilpotent)
