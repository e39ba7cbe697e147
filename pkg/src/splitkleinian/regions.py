"""Discontinuity regions, stable spheres and the maps psi^-/psi^+.

C^N is split as R^N + iE^s + iE^u.  A point belongs to U^- when the
stable part of its imaginary component is nonzero, to U^+ when the
unstable part is, and to the limit set of the chart when its imaginary
part vanishes.  Points on the hyperplane at infinity are always in the
limit set.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DomainError,
    InvalidStableVectorError,
    NotInUMinusError,
    NotInUPlusError,
    NotOnSphereError,
    SplitMismatchError,
    WrongRegionsError,
)
from .group import (
    GroupContext,
    GroupElement,
    ProjectivePoint,
    act_affine,
    chart,
    compose,
    unchart,
)
from .linalg import SpectrumReport, eigen_split, expm, solve_lyapunov

__all__ = [
    "ChartDecomposition",
    "HyperbolicSplitting",
    "InducedMaps",
    "LyapunovMetric",
    "RegionLabel",
    "WitnessRow",
    "WitnessTable",
    "build_splitting",
    "classify",
    "classify_detailed",
    "divergence_witness",
    "induced_sphere_map",
    "psi_minus",
    "psi_minus_inv",
    "psi_plus",
    "psi_plus_inv",
    "psi_selfcheck",
    "random_sphere_point",
    "time_to_sphere",
    "time_to_unstable_sphere",
]


class RegionLabel(str, enum.Enum):
    OMEGA_MINUS_ONLY = "OmegaMinusOnly"
    OMEGA_PLUS_ONLY = "OmegaPlusOnly"
    BOTH = "Both"
    LIMIT_SET_CHART = "LimitSetChart"
    LIMIT_SET_INFINITY = "LimitSetInfinity"

    def __str__(self) -> str:
        return self.value

    @property
    def in_limit_set(self) -> bool:
        return self in (RegionLabel.LIMIT_SET_CHART, RegionLabel.LIMIT_SET_INFINITY)


@dataclass(frozen=True, eq=False)
class LyapunovMetric:
    """SPD ``P`` with ``P R + R^T P = -I`` and decay constants.

    ``|exp(tR) x| <= C exp(-lam t) |x|`` for ``t >= 0`` with
    ``C = sqrt(cond P)`` and ``lam = 1 / (2 lambda_max(P))``.
    """

    P: np.ndarray
    C: float
    lam: float

    @classmethod
    def for_generator(cls, R) -> "LyapunovMetric":
        P = solve_lyapunov(R)
        ev = np.linalg.eigvalsh(P)
        return cls(P, float(math.sqrt(ev[-1] / ev[0])), float(1.0 / (2.0 * ev[-1])))

    def value(self, c) -> float:
        c = np.asarray(c)
        return float(c @ self.P @ c)


@dataclass(frozen=True, eq=False)
class HyperbolicSplitting:
    """Stable/unstable data for a continuous-time generator ``M``.

    ``V_s``/``V_u`` are orthonormal, so the Lyapunov metrics live in their
    coordinates: ``P_s`` for ``M_s = V_s^T M V_s`` and ``P_u`` for the
    reversed flow ``-M_u``.
    """

    M: np.ndarray
    V_s: np.ndarray
    V_u: np.ndarray
    M_s: np.ndarray
    M_u: np.ndarray
    P_s: Optional[LyapunovMetric]
    P_u: Optional[LyapunovMetric]
    pi_s: np.ndarray
    pi_u: np.ndarray
    spectrum: SpectrumReport
    residual: float

    @property
    def N(self) -> int:
        return self.M.shape[0]

    @property
    def n_stable(self) -> int:
        return self.V_s.shape[1]

    @property
    def n_unstable(self) -> int:
        return self.V_u.shape[1]

    @property
    def degenerate(self) -> bool:
        return self.n_stable == 0 or self.n_unstable == 0

    def lyapunov_stable(self, x) -> float:
        """``V(x)`` for ``x`` in E^s (ambient coordinates)."""
        if self.P_s is None:
            raise DomainError("E^s is trivial")
        return self.P_s.value(self.V_s.T @ np.asarray(x, dtype=float))

    def lyapunov_unstable(self, y) -> float:
        if self.P_u is None:
            raise DomainError("E^u is trivial")
        return self.P_u.value(self.V_u.T @ np.asarray(y, dtype=float))


def build_splitting(M, tol: float = 1e-9) -> HyperbolicSplitting:
    M = np.asarray(M, dtype=float)
    report, inv = eigen_split(M, "continuous", tol)
    M_s = inv.V_s.T @ M @ inv.V_s
    M_u = inv.V_u.T @ M @ inv.V_u
    P_s = LyapunovMetric.for_generator(M_s) if inv.n_stable else None
    P_u = LyapunovMetric.for_generator(-M_u) if inv.n_unstable else None
    return HyperbolicSplitting(
        M=M,
        V_s=inv.V_s,
        V_u=inv.V_u,
        M_s=M_s,
        M_u=M_u,
        P_s=P_s,
        P_u=P_u,
        pi_s=inv.pi_s,
        pi_u=inv.pi_u,
        spectrum=report,
        residual=inv.residual,
    )


@dataclass(frozen=True, eq=False)
class ChartDecomposition:
    """``z = b + i (y_s + y_u)`` with ``y_s`` in E^s and ``y_u`` in E^u."""

    b: np.ndarray
    y_s: np.ndarray
    y_u: np.ndarray

    @classmethod
    def of(cls, z, split: HyperbolicSplitting) -> "ChartDecomposition":
        z = np.asarray(z, dtype=complex)
        y = z.imag
        y_s = split.pi_s @ y
        return cls(z.real.copy(), y_s, y - y_s)

    def reconstruct(self) -> np.ndarray:
        return self.b + 1j * (self.y_s + self.y_u)


# ---------------------------------------------------------------------------
# time to the sphere
# ---------------------------------------------------------------------------


def _time_to_level(R: np.ndarray, P: np.ndarray, c: np.ndarray, sign: float) -> float:
    """Root of ``f(t) = V(exp(tR) c) - 1`` where ``f`` is monotone.

    ``sign = -1`` for a stable generator (``V`` decreasing along the flow),
    ``+1`` for the unstable one.  Since ``d/dt V = sign |y|^2`` the root of
    ``log V`` is polished by safeguarded Newton steps inside a bracket
    found by doubling.
    """

    def state(t):
        y = expm(R, t) @ c
        v = float(y @ P @ y)
        return math.log(v), sign * float(y @ y) / v

    g0, d0 = state(0.0)
    if g0 == 0.0:
        return 0.0
    # g is monotone with slope sign; step against the sign of g0 * sign
    direction = -math.copysign(1.0, g0) * sign
    lo, glo = 0.0, g0
    step = 1.0
    hi, ghi = None, None
    for _ in range(200):
        t = direction * step
        gt, _ = state(t)
        if (gt > 0) != (g0 > 0) or gt == 0.0:
            hi, ghi = t, gt
            break
        lo, glo = t, gt
        step *= 2.0
    if hi is None:
        raise InvalidStableVectorError("time_to_sphere: could not bracket the sphere")
    a, b = (lo, hi) if lo < hi else (hi, lo)
    ga = glo if lo < hi else ghi
    t = 0.5 * (a + b)
    for _ in range(200):
        gt, dt = state(t)
        if abs(gt) <= 1e-15:
            return t
        if (gt > 0) == (ga > 0):
            a, ga = t, gt
        else:
            b = t
        tn = t - gt / dt if dt != 0 else 0.5 * (a + b)
        if not (a < tn < b):
            tn = 0.5 * (a + b)
        if abs(tn - t) <= 1e-15 * max(1.0, abs(t)):
            return tn
        t = tn
    return t


def _check_in_subspace(x, proj, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    nx = np.linalg.norm(x)
    if nx == 0.0 or not np.isfinite(nx):
        raise InvalidStableVectorError(f"invalid {what} vector: zero or non-finite")
    if np.linalg.norm(proj @ x - x) > 1e-8 * nx:
        raise InvalidStableVectorError(f"invalid {what} vector: not in the {what} subspace")
    return x


def time_to_sphere(x, split: HyperbolicSplitting) -> float:
    """The unique ``t`` with ``V(exp(tM) x) = 1`` for nonzero ``x`` in E^s."""
    if split.P_s is None:
        raise InvalidStableVectorError("invalid stable vector: E^s is trivial")
    x = _check_in_subspace(x, split.pi_s, "stable")
    return _time_to_level(split.M_s, split.P_s.P, split.V_s.T @ x, -1.0)


def time_to_unstable_sphere(y, split: HyperbolicSplitting) -> float:
    """The unique ``t`` with ``V_u(exp(tM) y) = 1`` for nonzero ``y`` in E^u."""
    if split.P_u is None:
        raise InvalidStableVectorError("invalid unstable vector: E^u is trivial")
    y = _check_in_subspace(y, split.pi_u, "unstable")
    return _time_to_level(split.M_u, split.P_u.P, split.V_u.T @ y, +1.0)


# ---------------------------------------------------------------------------
# psi maps
# ---------------------------------------------------------------------------


def psi_minus(g, x, y, ctx: GroupContext, split: HyperbolicSplitting, tol: float = 1e-9) -> np.ndarray:
    """``psi^-(g, x, y) = g * (ix + iy)`` for ``x`` on the stable sphere, ``y`` in E^u."""
    x = np.asarray(x, dtype=float)
    if split.P_s is None or abs(split.lyapunov_stable(x) - 1.0) > tol:
        raise NotOnSphereError("not on sphere: V(x) != 1")
    return act_affine(g, 1j * (x + np.asarray(y, dtype=float)), ctx)


def psi_plus(g, x, y, ctx: GroupContext, split: HyperbolicSplitting, tol: float = 1e-9) -> np.ndarray:
    """Mirror of :func:`psi_minus`: ``x`` on the unstable sphere, ``y`` in E^s."""
    x = np.asarray(x, dtype=float)
    if split.P_u is None or abs(split.lyapunov_unstable(x) - 1.0) > tol:
        raise NotOnSphereError("not on sphere: V_u(x) != 1")
    return act_affine(g, 1j * (x + np.asarray(y, dtype=float)), ctx)


def psi_minus_inv(z, ctx: GroupContext, split: HyperbolicSplitting, tol: float = 1e-12):
    """Inverse of :func:`psi_minus`; returns ``(GroupElement, x, y)``."""
    d = ChartDecomposition.of(z, split)
    if split.P_s is None or np.linalg.norm(d.y_s) <= tol * (1.0 + np.linalg.norm(z)):
        raise NotInUMinusError("not in U-minus: stable imaginary part vanishes")
    tau = time_to_sphere(d.y_s, split)
    A = ctx.A(tau)
    return GroupElement(d.b, -tau), A @ d.y_s, A @ d.y_u


def psi_plus_inv(z, ctx: GroupContext, split: HyperbolicSplitting, tol: float = 1e-12):
    d = ChartDecomposition.of(z, split)
    if split.P_u is None or np.linalg.norm(d.y_u) <= tol * (1.0 + np.linalg.norm(z)):
        raise NotInUPlusError("not in U-plus: unstable imaginary part vanishes")
    tau = time_to_unstable_sphere(d.y_u, split)
    A = ctx.A(tau)
    return GroupElement(d.b, -tau), A @ d.y_u, A @ d.y_s


def random_sphere_point(split: HyperbolicSplitting, rng, side: str = "stable") -> np.ndarray:
    """Uniform direction in E^s (or E^u) rescaled onto the Lyapunov sphere."""
    V, metric = (split.V_s, split.P_s) if side == "stable" else (split.V_u, split.P_u)
    if metric is None:
        raise DomainError(f"E^{side[0]} is trivial")
    c = rng.standard_normal(V.shape[1])
    c /= math.sqrt(metric.value(c))
    return V @ c


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def classify_detailed(p, split: HyperbolicSplitting, tol: float = 1e-9):
    """Return ``(label, s, u, boundary)``.

    ``s`` and ``u`` are the stable/unstable imaginary norms relative to
    ``1 + |z|``; ``boundary`` flags values within a decade of ``tol``.
    Off-chart points give ``s = u = nan``.
    """
    if not isinstance(p, ProjectivePoint):
        p = unchart(p)
    if p.at_infinity():
        return RegionLabel.LIMIT_SET_INFINITY, math.nan, math.nan, False
    z = chart(p)
    d = ChartDecomposition.of(z, split)
    scale = 1.0 + float(np.linalg.norm(z))
    s = float(np.linalg.norm(d.y_s)) / scale
    u = float(np.linalg.norm(d.y_u)) / scale
    boundary = any(0.1 * tol <= v <= 10.0 * tol for v in (s, u))
    if s <= tol and u <= tol:
        label = RegionLabel.LIMIT_SET_CHART
    elif u <= tol:
        label = RegionLabel.OMEGA_MINUS_ONLY
    elif s <= tol:
        label = RegionLabel.OMEGA_PLUS_ONLY
    else:
        label = RegionLabel.BOTH
    return label, s, u, boundary


def classify(p, split: HyperbolicSplitting, tol: float = 1e-9) -> RegionLabel:
    """Region of a projective point (a chart vector is accepted too)."""
    return classify_detailed(p, split, tol)[0]


# ---------------------------------------------------------------------------
# divergence witness
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WitnessRow:
    n: int
    w: np.ndarray
    gw: np.ndarray
    dist_w: float
    dist_gw: float


@dataclass(frozen=True, eq=False)
class WitnessTable:
    rows: list
    n0: Optional[int]

    def records(self) -> list:
        return [
            {"n": r.n, "w": r.w, "gw": r.gw, "dist_w_z2": r.dist_w, "dist_gw_z1": r.dist_gw}
            for r in self.rows
        ]


def divergence_witness(z1, z2, n_max: int, ctx: GroupContext, split: HyperbolicSplitting,
                       tol: float = 1e-9) -> WitnessTable:
    """Sequence showing no proper open set meets both U^+ \\ U^- and U^- \\ U^+.

    ``z1 = x1 + i y1`` with ``y1`` in E^u, ``z2 = x2 + i y2`` with ``y2``
    in E^s.  For ``w_n = x2 + i A(-n) y1 + i y2`` and
    ``g_n = (x1 - A(n) x2, n)`` we get ``w_n -> z2`` and
    ``g_n * w_n = z1 + i A(n) y2 -> z1`` while ``g_n`` leaves every
    compact set.
    """
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    if (classify(z1, split, tol) is not RegionLabel.OMEGA_PLUS_ONLY
            or classify(z2, split, tol) is not RegionLabel.OMEGA_MINUS_ONLY):
        raise WrongRegionsError("wrong regions: need z1 in U+ \\ U- and z2 in U- \\ U+")
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    x1, y1 = z1.real, z1.imag
    x2, y2 = z2.real, z2.imag
    rows = []
    for n in range(1, n_max + 1):
        w = x2 + 1j * (ctx.A(-n) @ y1 + y2)
        g = GroupElement(x1 - ctx.A(n) @ x2, float(n))
        gw = act_affine(g, w, ctx)
        rows.append(WitnessRow(n, w, gw, float(np.linalg.norm(w - z2)), float(np.linalg.norm(gw - z1))))
    n0 = None
    for i in range(len(rows) - 1, 0, -1):
        if rows[i].dist_w < rows[i - 1].dist_w and rows[i].dist_gw < rows[i - 1].dist_gw:
            n0 = rows[i - 1].n
        else:
            break
    return WitnessTable(rows, n0)


# ---------------------------------------------------------------------------
# induced maps on the sphere
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InducedMaps:
    f1: np.ndarray
    f2: np.ndarray
    t: float


def induced_sphere_map(x, B, ctx: GroupContext, split: HyperbolicSplitting, tol: float = 1e-9) -> InducedMaps:
    """``f1(x) = A(t(Bx)) B x`` on the stable sphere and ``f2(x) = A(t(Bx)) B |E^u``.

    ``f2`` is expressed in the ``V_u`` coordinates.
    """
    x = np.asarray(x, dtype=float)
    if split.P_s is None or abs(split.lyapunov_stable(x) - 1.0) > tol:
        raise NotOnSphereError("not on sphere: V(x) != 1")
    B = np.asarray(B.to_array() if hasattr(B, "to_array") else B, dtype=float)
    Bx = B @ x
    if np.linalg.norm(split.pi_s @ Bx - Bx) > 1e-8 * np.linalg.norm(Bx):
        raise SplitMismatchError("split mismatch: B x leaves E^s")
    BVu = B @ split.V_u
    if split.n_unstable and np.linalg.norm(split.pi_u @ BVu - BVu) > 1e-8 * np.linalg.norm(BVu):
        raise SplitMismatchError("split mismatch: B does not preserve E^u")
    tau = time_to_sphere(Bx, split)
    F = ctx.A(tau) @ B
    return InducedMaps(F @ x, split.V_u.T @ F @ split.V_u, tau)


# ---------------------------------------------------------------------------
# self check used by the CLI
# ---------------------------------------------------------------------------


def psi_selfcheck(ctx: GroupContext, split: HyperbolicSplitting, samples: int, rng,
                  t_range: float = 2.0) -> dict:
    """Worst roundtrip and equivariance errors of psi^- over random samples."""
    if split.P_s is None:
        raise DomainError("psi check needs a nontrivial stable subspace")
    n = split.N
    fwd = bwd = equi = 0.0
    for _ in range(samples):
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        g, x, y = psi_minus_inv(z, ctx, split)
        fwd = max(fwd, float(np.linalg.norm(psi_minus(g, x, y, ctx, split) - z)))

        g0 = GroupElement(rng.standard_normal(n), rng.uniform(-t_range, t_range))
        x0 = random_sphere_point(split, rng)
        y0 = split.V_u @ rng.standard_normal(split.n_unstable)
        g1, x1, y1 = psi_minus_inv(psi_minus(g0, x0, y0, ctx, split), ctx, split)
        bwd = max(bwd, float(np.linalg.norm(g1.b - g0.b)), abs(g1.t - g0.t),
                  float(np.linalg.norm(x1 - x0)), float(np.linalg.norm(y1 - y0)))

        h = GroupElement(rng.standard_normal(n), rng.uniform(-t_range, t_range))
        lhs = psi_minus(compose(g0, h, ctx), x0, y0, ctx, split)
        rhs = act_affine(g0, psi_minus(h, x0, y0, ctx, split), ctx)
        equi = max(equi, float(np.linalg.norm(lhs - rhs)))
    return {"samples": samples, "roundtrip_z": fwd, "roundtrip_gxy": bwd, "equivariance": equi}
