"""Lattice dynamics of hyperbolic toral automorphisms.

Points that feed long orbits are held as integer vectors over their
common denominator ``L``.  A float is a dyadic rational, so ``B**n x mod 1``
is computed exactly for the point actually supplied; no rounding error
accumulates along the orbit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DomainError,
    EmptySweepError,
    NotHyperbolicError,
    NotInSLError,
    NotUnimodularError,
)
from .linalg import (
    IntMatrix,
    SpectrumReport,
    expm,
    operator_norm,
    rational_inverse,
    rational_solve,
)

__all__ = [
    "DensityReport",
    "FIXED_BITS",
    "FixedPointRecord",
    "LatticeCheck",
    "LatticeSpec",
    "NormScan",
    "OrbitApprox",
    "SweepRecord",
    "SweepResult",
    "affine_orbit_approx",
    "check_hyperbolic_toral",
    "check_lattice_condition",
    "density_report",
    "eventual_period",
    "fixed_point",
    "fixed_point_sweep",
    "generic_point",
    "norm_bound_scan",
    "rational_orbit",
    "torus_orbit",
]

FIXED_BITS = 96
_GENERIC_RADICANDS = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


def _as_intmatrix(B) -> IntMatrix:
    return B if isinstance(B, IntMatrix) else IntMatrix.from_array(B)


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


def generic_point(N: int, exact: bool = False, bits: int = FIXED_BITS):
    """``(sqrt2 - 1, sqrt3 - 1, sqrt5 - 2, ...)`` truncated to ``N`` coordinates.

    With ``exact=True`` each coordinate is the ``bits``-bit truncation as a
    ``Fraction``, computed with integer square roots.  An orbit of length
    ``n`` follows the irrational point only while ``n log2(rho(B)) < bits``.
    """
    if N > len(_GENERIC_RADICANDS):
        raise DomainError(f"generic point defined for N <= {len(_GENERIC_RADICANDS)}")
    K = int(bits)
    coords = []
    for p in _GENERIC_RADICANDS[:N]:
        r = math.isqrt(p << (2 * K))
        r -= math.isqrt(p) << K
        coords.append(Fraction(r, 1 << K))
    if exact:
        return coords
    return np.array([float(c) for c in coords])


def _fixed(x):
    """Integer numerators and common denominator for the point ``x``."""
    fr = [_to_fraction(v) for v in x]
    if not all(math.isfinite(f) for f in map(float, fr)):
        raise DomainError("point must be finite")
    L = 1
    for f in fr:
        L = L * f.denominator // math.gcd(L, f.denominator)
    return [int(f * L) for f in fr], L


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


def check_hyperbolic_toral(B, tol: float = 1e-9) -> SpectrumReport:
    """Certify ``B`` in SL(N, Z) with no eigenvalue of unit modulus."""
    B = _as_intmatrix(B)
    d = B.det()
    if d != 1:
        raise NotInSLError(f"not in SL(N,Z): det = {d}", det=d)
    return SpectrumReport.from_eigenvalues(np.linalg.eigvals(B.to_array()), "discrete", tol)


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Data of the lattice ``sigma^-1 Z^N x|_A hZ`` with ``expm(M, h) = sigma^-1 B sigma``."""

    B: IntMatrix
    sigma: np.ndarray
    h: float
    M: np.ndarray
    spectrum: SpectrumReport = field(repr=False, default=None)

    def __post_init__(self):
        if self.h <= 0:
            raise DomainError("h must be positive")
        spectrum = check_hyperbolic_toral(self.B)
        object.__setattr__(self, "spectrum", spectrum)
        sigma = np.asarray(self.sigma, dtype=float)
        target = np.linalg.solve(sigma, self.B.to_array() @ sigma)
        A = expm(self.M, self.h)
        res = operator_norm(A - target)
        if res > 1e-8 * (1.0 + operator_norm(target)):
            raise DomainError(f"expm(M, h) differs from sigma^-1 B sigma by {res:.3e}")


@dataclass(frozen=True, eq=False)
class LatticeCheck:
    passed: bool
    max_deviation: float
    reason: str
    K: np.ndarray
    B: Optional[IntMatrix] = None
    spec: Optional[LatticeSpec] = None


def check_lattice_condition(M, sigma, h: float, tol: float = 1e-8, hyp_tol: float = 1e-9) -> LatticeCheck:
    """Test whether ``sigma expm(M, h) sigma^-1`` lies in SL(N, Z).

    Failures are returned as a report rather than raised; ``reason`` names
    the first condition that failed.
    """
    M = np.asarray(M, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if abs(np.linalg.det(sigma)) < 1e-300 or np.linalg.cond(sigma) > 1e14:
        raise DomainError("sigma must be invertible")
    K = sigma @ expm(M, h) @ np.linalg.inv(sigma)
    R = np.round(K)
    dev = float(np.max(np.abs(K - R), initial=0.0))
    if dev > tol:
        return LatticeCheck(False, dev, "non-integral", K)
    B = IntMatrix.from_array(R)
    d = B.det()
    if d != 1:
        return LatticeCheck(False, dev, f"not unimodular (det = {d})", K, B)
    try:
        check_hyperbolic_toral(B, hyp_tol)
    except NotHyperbolicError as exc:
        return LatticeCheck(False, dev, str(exc), K, B)
    return LatticeCheck(True, dev, "ok", K, B, LatticeSpec(B, sigma, float(h), M))


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FixedPointRecord:
    """Point ``x = (I - B^n)^-1 b`` fixed by the lattice element ``(b, n)``.

    ``x_exact`` is the rational solution and ``x`` its correctly rounded
    float.  ``residual`` is ``||(I - B^n) x - b||`` evaluated exactly on
    the float ``x``, so it measures the rounding of ``x`` amplified by
    ``||I - B^n||`` and nothing else.
    """

    b: tuple
    n: int
    x: np.ndarray
    residual: float
    x_exact: tuple = field(default=(), repr=False)

    def record(self) -> dict:
        return {"b": list(self.b), "n": self.n, "x": self.x, "residual": self.residual}


def _exact_fixed_point(B: IntMatrix, b, n: int):
    IB = IntMatrix.identity(B.n) - B.power(n)
    if IB.det() == 0:
        raise NotHyperbolicError(f"not hyperbolic: I - B^{n} is singular")
    return IB, rational_solve(IB, b)


def _residual(IB: IntMatrix, x: np.ndarray, b) -> float:
    xq = [Fraction(float(v)) for v in x]
    r = [sum((c * v for c, v in zip(row, xq)), Fraction(0)) - bi for row, bi in zip(IB.rows, b)]
    return math.sqrt(sum(float(v) ** 2 for v in r))


def fixed_point(B, b: Sequence[int], n: int) -> FixedPointRecord:
    B = _as_intmatrix(B)
    n = int(n)
    if n == 0:
        raise DomainError("n must be nonzero")
    b = tuple(int(v) for v in b)
    IB, xq = _exact_fixed_point(B, b, n)
    x = np.array([float(v) for v in xq])
    return FixedPointRecord(b, n, x, _residual(IB, x, b), tuple(xq))


@dataclass(frozen=True, eq=False)
class SweepRecord:
    fixed: FixedPointRecord
    distance: float
    y_distance: float
    bound: float

    @property
    def bound_ok(self) -> bool:
        return self.distance <= self.bound * (1.0 + 1e-9) + 1e-15

    def record(self) -> dict:
        rec = self.fixed.record()
        rec.update(distance=self.distance, y_distance=self.y_distance,
                   bound=self.bound, bound_ok=self.bound_ok)
        return rec


@dataclass(frozen=True, eq=False)
class SweepResult:
    records: list
    C: float
    target: np.ndarray

    @property
    def best(self) -> SweepRecord:
        return self.records[0]

    @property
    def bound_ok(self) -> bool:
        return all(r.bound_ok for r in self.records)


def _sweep_one(args):
    B, X, L, n, radius = args
    Bn = B.power(n)
    BX = Bn @ X
    # b0 = round(x* - B^n x*) puts y = B^n x* + b0 in the tile of x*
    base = [_round_div(xi - bxi, L) for xi, bxi in zip(X, BX)]
    IB = IntMatrix.identity(B.n) - Bn
    if IB.det() == 0:
        raise NotHyperbolicError(f"not hyperbolic: I - B^{n} is singular")
    inv = rational_inverse(IB)
    xstar = [Fraction(v, L) for v in X]
    out = []
    for off in _box(B.n, radius):
        b = tuple(c + o for c, o in zip(base, off))
        xq = [sum((c * bi for c, bi in zip(row, b)), Fraction(0)) for row in inv]
        x = np.array([float(v) for v in xq])
        res = _residual(IB, x, b)
        dist = math.sqrt(sum(float(v - s) ** 2 for v, s in zip(xq, xstar)))
        ydist = math.sqrt(sum(float(Fraction(bx + bi * L - xi, L)) ** 2 for bx, bi, xi in zip(BX, b, X)))
        out.append((FixedPointRecord(b, n, x, res, tuple(xq)), dist, ydist))
    return out


def _box(N: int, radius: int):
    if radius == 0:
        yield (0,) * N
        return
    rng = range(-radius, radius + 1)
    for off in np.ndindex(*([2 * radius + 1] * N)):
        yield tuple(rng[i] for i in off)


def _round_div(num: int, den: int) -> int:
    """Nearest integer to ``num / den`` (ties toward +inf)."""
    return (2 * num + den) // (2 * den)


def _pmap(fn, items, workers: int):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(it) for it in items]


def fixed_point_sweep(B, target, n_max: int, b_box: int = 0, workers: int = 1) -> SweepResult:
    """Approximate ``target`` by fixed points ``x(b, n)`` for ``1 <= n <= n_max``.

    For each ``n`` the translation ``b`` is the rounding that puts
    ``B^n x* + b`` in the unit tile of ``x*``; ``b_box > 0`` also tries
    every ``b`` within that many units of it (exhaustive mode).  Every
    record carries the bound ``C |y(b, n) - x*|`` with ``C`` the supremum
    of ``||(I - B^n)^-1||`` over the swept range.
    """
    B = _as_intmatrix(B)
    if n_max < 1 or b_box < 0:
        raise EmptySweepError("empty sweep: need n_max >= 1 and b_box >= 0")
    check_hyperbolic_toral(B)
    target = list(target)
    if len(target) != B.n:
        raise DomainError("target has the wrong dimension")
    X, L = _fixed(target)
    C = norm_bound_scan(B, range(1, n_max + 1), workers=workers).sup
    chunks = _pmap(_sweep_one, [(B, X, L, n, int(b_box)) for n in range(1, n_max + 1)], workers)
    records = [SweepRecord(fp, d, yd, C * yd) for chunk in chunks for fp, d, yd in chunk]
    records.sort(key=lambda r: (r.distance, r.fixed.n))
    return SweepResult(records, C, np.array([float(Fraction(v, L)) for v in X]))


# ---------------------------------------------------------------------------
# norm bound scan
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NormScan:
    ns: np.ndarray
    values: np.ndarray
    sup: float
    sup_at: int
    stabilized_at: Optional[int]
    limit: float

    def records(self) -> list:
        return [{"n": int(n), "norm": float(v)} for n, v in zip(self.ns, self.values)]


def _resolvent_norm_exact(args) -> float:
    B, n = args
    IB = IntMatrix.identity(B.n) - B.power(n)
    inv = rational_inverse(IB)
    return operator_norm(np.array([[float(v) for v in row] for row in inv]))


def norm_bound_scan(B, n_range, tol: float = 1e-9, stab_tol: float = 1e-6,
                    stab_run: int = 20, workers: int = 1) -> NormScan:
    """``||(I - B^n)^-1||_2`` over ``n_range``.

    Integer matrices are inverted exactly before rounding; ``I - B^n`` is
    far too ill-conditioned for a floating-point inverse once ``n`` is
    large.  Real matrices use floating-point powers and inverses.
    Stabilization is declared at the first ``n`` that starts a run of
    ``stab_run`` successive differences below ``stab_tol``.
    """
    ns = [int(n) for n in n_range]
    if not ns:
        raise EmptySweepError("empty sweep: n_range is empty")
    if 0 in ns:
        raise DomainError("n_range must exclude 0")
    if isinstance(B, IntMatrix) or np.asarray(B).dtype.kind in "iu" or np.asarray(B).dtype == object:
        B = _as_intmatrix(B)
        SpectrumReport.from_eigenvalues(np.linalg.eigvals(B.to_array()), "discrete", tol)
        if min(ns) < 0 and abs(B.det()) != 1:
            raise NotUnimodularError("not unimodular: negative powers need |det B| = 1")
        values = _pmap(_resolvent_norm_exact, [(B, n) for n in ns], workers)
    else:
        A = np.asarray(B, dtype=float)
        SpectrumReport.from_eigenvalues(np.linalg.eigvals(A), "discrete", tol)
        I = np.eye(A.shape[0])
        values = [operator_norm(np.linalg.inv(I - np.linalg.matrix_power(A, n))) for n in ns]
    values = np.array(values, dtype=float)
    k = int(np.argmax(values))
    stabilized = None
    diffs = np.abs(np.diff(values))
    run = 0
    for i, d in enumerate(diffs):
        run = run + 1 if d < stab_tol else 0
        if run >= stab_run:
            stabilized = ns[i - stab_run + 1]
            break
    return NormScan(np.array(ns), values, float(values[k]), ns[k], stabilized, float(values[-1]))


# ---------------------------------------------------------------------------
# torus orbits and density
# ---------------------------------------------------------------------------


def _orbit_ints(B: IntMatrix, v, L: int, n_max: int):
    rows = B.rows
    v = [x % L for x in v]
    yield v
    for _ in range(n_max):
        v = [sum(a * x for a, x in zip(r, v)) % L for r in rows]
        yield v


def torus_orbit(B, x0, n_max: int) -> np.ndarray:
    """Points ``B^n x0 mod 1`` for ``0 <= n <= n_max`` as an ``(n_max+1, N)`` array.

    ``x0`` (floats or ``Fraction``) is taken at its exact rational value and
    iterated with integer arithmetic modulo its denominator.
    """
    B = _as_intmatrix(B)
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    X, L = _fixed(x0)
    if len(X) != B.n:
        raise DomainError("x0 has the wrong dimension")
    out = np.empty((n_max + 1, B.n))
    for i, v in enumerate(_orbit_ints(B, X, L, n_max)):
        out[i] = [x / L for x in v]
    # x/L can round up to 1.0 when L exceeds 2**53
    np.minimum(out, np.nextafter(1.0, 0.0), out=out)
    return out


def rational_orbit(B, x0, n_max: int) -> list:
    """Exact orbit of a rational point as tuples of ``Fraction``."""
    B = _as_intmatrix(B)
    X, L = _fixed(x0)
    return [tuple(Fraction(x, L) for x in v) for v in _orbit_ints(B, X, L, n_max)]


def eventual_period(B, x0, max_steps: int = 10**6):
    """``(preperiod, period)`` of the orbit of a rational point on the torus."""
    B = _as_intmatrix(B)
    X, L = _fixed(x0)
    seen = {}
    for i, v in enumerate(_orbit_ints(B, X, L, max_steps)):
        key = tuple(v)
        if key in seen:
            return seen[key], i - seen[key]
        seen[key] = i
    raise DomainError(f"no period found within {max_steps} steps")


@dataclass(frozen=True)
class DensityReport:
    epsilon: float
    boxes_total: int
    boxes_hit: int
    coverage: float
    max_gap: float


def density_report(points, epsilon: float) -> DensityReport:
    """Box coverage of the unit torus at resolution ``epsilon``.

    ``max_gap`` is the largest torus distance from a box center to the
    nearest point.
    """
    if not (0 < epsilon <= 0.5):
        raise DomainError("epsilon must lie in (0, 1/2]")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise DomainError("density_report needs at least one point")
    if np.any(pts < 0) or np.any(pts >= 1):
        raise DomainError("points must lie in [0, 1)^N")
    N = pts.shape[1]
    k = int(math.ceil(1.0 / epsilon - 1e-12))
    idx = np.minimum((pts * k).astype(np.int64), k - 1)
    flat = np.ravel_multi_index(idx.T, (k,) * N)
    hit = int(np.unique(flat).size)
    total = k ** N
    centers = (np.stack(np.meshgrid(*([np.arange(k)] * N), indexing="ij"), -1).reshape(-1, N) + 0.5) / k
    tree = cKDTree(pts, boxsize=1.0)
    gap, _ = tree.query(centers)
    return DensityReport(float(epsilon), total, hit, hit / total, float(np.max(gap)))


# ---------------------------------------------------------------------------
# orbit approximation of a target
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitApprox:
    b: tuple
    n: int
    distance: float


def affine_orbit_approx(B, x_star, target, n_max: int, include_zero: bool = True) -> OrbitApprox:
    """Best ``(b, n)`` with ``B^n x* + b`` near ``target`` over ``n <= n_max``.

    ``b = round(target - B^n x*)``; ``B^n x*`` is kept exactly, so ``b``
    is the true integer translation even when it has thousands of digits.
    """
    B = _as_intmatrix(B)
    x_star, target = list(x_star), list(target)
    if len(x_star) != B.n or len(target) != B.n:
        raise DomainError("x* and target must have dimension N")
    XT, L = _fixed(x_star + target)
    X, T = XT[:B.n], XT[B.n:]
    rows = B.rows
    v = list(X)
    best = None
    for n in range(0, n_max + 1):
        if n:
            v = [sum(a * x for a, x in zip(r, v)) for r in rows]
        if n == 0 and not include_zero:
            continue
        b = tuple(_round_div(t - x, L) for t, x in zip(T, v))
        d = math.sqrt(sum(((x + bi * L - t) / L) ** 2 for x, bi, t in zip(v, b, T)))
        if best is None or d < best.distance:
            best = OrbitApprox(b, n, d)
    if best is None:
        raise EmptySweepError("empty sweep: no admissible n")
    return best
