"""
Finite-dimensional maximally monotone operators with exact resolvents.

Every operator exposes four capabilities:

* ``resolve(gamma, x)``       -- the resolvent ``(Id + gamma A)^{-1} x``
* ``graph_element(gamma, x)`` -- the pair ``(J x, (x - J x) / gamma)`` in gra A
* ``min_norm_value(x)``       -- ``d(0, A x)``, ``inf`` when ``A x`` is empty
* ``project_zero_set(x)``     -- projection onto ``zer A`` and the distance

Operators are immutable after construction; the only mutable state is a
per-``gamma`` LU cache for linear operators, which is safe to share.
"""

from __future__ import annotations

import copy
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .errors import (
    DimensionMismatch,
    InvalidSpec,
    NoZeroSetInfo,
    NotMonotone,
    SolveFailure,
)

MONOTONE_TOL = 1e-10
ZERO_RESIDUAL_TOL = 1e-10
LU_CACHE_SIZE = 16


def as_vector(x, dim=None) -> np.ndarray:
    """Validate ``x`` as a finite 1-D float vector (optionally of length ``dim``)."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def _check_gamma(gamma):
    gamma = float(gamma)
    if not (gamma > 0 and math.isfinite(gamma)):
        raise ValueError(f"gamma must be a positive finite real, got {gamma}")
    return gamma


# ---------------------------------------------------------------------------
# zero sets


class ZeroProjection(NamedTuple):
    point: np.ndarray
    dist: float
    exact: bool


class ZeroSet:
    exact = True
    singleton = False

    def project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class Singleton(ZeroSet):
    singleton = True

    def __init__(self, point):
        self.point = as_vector(point)
        self.point.setflags(write=False)

    def project(self, x):
        return self.point.copy()

    def describe(self):
        return {"type": "singleton", "point": self.point.tolist()}


class Box(ZeroSet):
    """Axis-aligned box ``[lo, hi]``; infinite bounds allowed."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float).copy()
        self.hi = np.asarray(hi, dtype=float).copy()
        if self.lo.shape != self.hi.shape or np.any(self.lo > self.hi):
            raise InvalidSpec("box bounds must satisfy lo <= hi")
        self.lo.setflags(write=False)
        self.hi.setflags(write=False)

    def project(self, x):
        return np.clip(x, self.lo, self.hi)

    def describe(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Subspace(ZeroSet):
    """Linear subspace spanned by the orthonormal columns of ``basis``."""

    def __init__(self, basis):
        self.basis = np.asarray(basis, dtype=float).copy()
        self.basis.setflags(write=False)

    def project(self, x):
        return self.basis @ (self.basis.T @ x)

    def describe(self):
        return {"type": "subspace", "dim": int(self.basis.shape[1])}


class ReferenceRun(ZeroSet):
    """High-accuracy surrogate: the limit of an exact proximal point run.

    The run uses unit relaxation and ``c = 10`` from ``start`` until the
    residual drops to 1e-12, then behaves like a singleton.  Every distance
    computed against it is tagged approximate.
    """

    exact = False
    singleton = True
    c = 10.0
    residual_tol = 1e-12
    max_iter = 200_000

    def __init__(self, op, start=None):
        self._op = op
        self._start = None if start is None else as_vector(start, op.dim)
        self._point = None

    @property
    def point(self):
        if self._point is None:
            x = np.zeros(self._op.dim) if self._start is None else self._start.copy()
            for _ in range(self.max_iter):
                j = self._op.resolve(self.c, x)
                if np.linalg.norm(x - j) <= self.residual_tol:
                    x = j
                    break
                x = j
            else:
                raise NoZeroSetInfo("reference run did not reach residual 1e-12")
            x.setflags(write=False)
            self._point = x
        return self._point

    def project(self, x):
        return self.point.copy()

    def describe(self):
        return {"type": "reference_run", "c": self.c, "residual_tol": self.residual_tol}


# ---------------------------------------------------------------------------
# regularity metadata


@dataclass(frozen=True)
class SubregMeta:
    """Claimed metric-subregularity triple ``(kappa, delta, center)``."""

    kappa: float
    delta: float
    center: tuple

    def as_dict(self):
        return {"kappa": self.kappa, "delta": _finite_or_none(self.delta),
                "center": list(self.center)}


@dataclass(frozen=True)
class LipschitzMeta:
    """Claimed Lipschitz-at-0 data ``(alpha, tau)`` for the inverse operator."""

    alpha: float
    tau: float

    def as_dict(self):
        return {"alpha": self.alpha, "tau": _finite_or_none(self.tau)}


def _finite_or_none(v):
    return v if math.isfinite(v) else None


# ---------------------------------------------------------------------------
# operators


class MonotoneOperator:
    """Base class; subclasses implement ``_resolve`` and ``min_norm_value``."""

    kind = "abstract"

    def __init__(self, dim, zero_set, subreg_meta=None, lipschitz_meta=None, name=None):
        self.dim = int(dim)
        if self.dim < 1:
            raise InvalidSpec("dimension must be >= 1")
        self.zero_set = zero_set
        self.subreg_meta = subreg_meta
        self.lipschitz_meta = lipschitz_meta
        self.name = name or self.kind
        if lipschitz_meta is not None and (zero_set is None or not zero_set.singleton):
            raise InvalidSpec("Lipschitz-at-0 metadata requires a singleton zero set")
        self._check_zero_points()

    def _check_zero_points(self):
        points = []
        if isinstance(self.zero_set, Singleton):
            points.append(self.zero_set.point)
        if self.subreg_meta is not None:
            points.append(np.asarray(self.subreg_meta.center, dtype=float))
        for p in points:
            r = np.linalg.norm(p - self._resolve(1.0, p))
            if r > ZERO_RESIDUAL_TOL:
                raise InvalidSpec(f"claimed zero {p} has resolvent residual {r:.3e}")

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r} dim={self.dim}>"

    def resolve(self, gamma, x):
        return self._resolve(_check_gamma(gamma), as_vector(x, self.dim))

    def _resolve(self, gamma, x):
        raise NotImplementedError

    def graph_element(self, gamma, x):
        gamma = _check_gamma(gamma)
        x = as_vector(x, self.dim)
        p = self._resolve(gamma, x)
        return p, (x - p) / gamma

    def min_norm_value(self, x) -> float:
        raise NotImplementedError

    def project_zero_set(self, x) -> ZeroProjection:
        x = as_vector(x, self.dim)
        if self.zero_set is None:
            raise NoZeroSetInfo(f"{self.name}: no zero-set description or reference run")
        p = self.zero_set.project(x)
        return ZeroProjection(p, float(np.linalg.norm(x - p)), self.zero_set.exact)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "dim": self.dim,
            "zero_set": None if self.zero_set is None else self.zero_set.describe(),
            "subreg": None if self.subreg_meta is None else self.subreg_meta.as_dict(),
            "lipschitz": None if self.lipschitz_meta is None else self.lipschitz_meta.as_dict(),
        }


class LinearOperator(MonotoneOperator):
    """``A x = M x`` for a square matrix whose symmetric part is PSD.

    Resolvents solve ``(I + gamma M) p = x`` by LU with partial pivoting;
    the factorization is cached per ``gamma``.
    """

    kind = "linear"

    def __init__(self, M, name=None, check_monotone=True):
        M = np.array(M, dtype=float, ndmin=2)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix entries must be finite")
        self.min_sym_eig = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
        if check_monotone and self.min_sym_eig < -MONOTONE_TOL:
            raise NotMonotone(f"symmetric part has eigenvalue {self.min_sym_eig:.3e} < 0")
        M.setflags(write=False)
        self.M = M
        self._lu = {}
        n = M.shape[0]

        sv = np.linalg.svd(M, compute_uv=False)
        rank_tol = max(M.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
        positive = sv[sv > rank_tol]
        kernel = scipy.linalg.null_space(M, rcond=np.finfo(float).eps * max(M.shape))
        if kernel.shape[1] == 0:
            zero_set = Singleton(np.zeros(n))
        else:
            zero_set = Subspace(kernel)

        subreg = lip = None
        if positive.size and check_monotone:
            kappa = float(1.0 / positive[-1])
            subreg = SubregMeta(kappa, math.inf, tuple([0.0] * n))
            if kernel.shape[1] == 0:
                lip = LipschitzMeta(kappa, 1.0)
        super().__init__(n, zero_set, subreg, lip, name)

    def _factor(self, gamma):
        lu = self._lu.get(gamma)
        if lu is None:
            A = np.eye(self.dim) + gamma * self.M
            with warnings.catch_warnings():
                # singularity is reported below as SolveFailure
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
            d = np.abs(np.diag(lu))
            if d.min() <= self.dim * np.finfo(float).eps * max(d.max(), 1.0):
                raise SolveFailure(f"I + {gamma} M is numerically singular")
            lu = (lu, piv)
            if len(self._lu) >= LU_CACHE_SIZE:
                self._lu.pop(next(iter(self._lu)))
            self._lu[gamma] = lu
        return lu

    def _resolve(self, gamma, x):
        return scipy.linalg.lu_solve(self._factor(gamma), x, check_finite=False)

    def min_norm_value(self, x):
        return float(np.linalg.norm(self.M @ as_vector(x, self.dim)))

    def describe(self):
        d = super().describe()
        d["matrix"] = self.M.tolist()
        return d


class SkewRotation(LinearOperator):
    """Block-diagonal rotation by ``theta`` on ``m`` planes (dimension ``2m``).

    Monotone for ``|theta| <= pi/2``; ``theta = pi/2`` gives the pure skew
    map ``[[0, -1], [1, 0]]`` whose resolvent shrinks norms by
    ``1 / sqrt(1 + gamma^2)``.
    """

    kind = "skew_rotation"

    def __init__(self, m=1, theta=math.pi / 2, name=None):
        if abs(theta) > math.pi / 2 + 1e-15:
            raise NotMonotone("rotation angle must satisfy |theta| <= pi/2")
        c, s = math.cos(theta), math.sin(theta)
        if abs(c) < 1e-15:
            c = 0.0
        if abs(abs(s) - 1.0) < 1e-15:
            s = math.copysign(1.0, s)
        block = np.array([[c, -s], [s, c]])
        self.m = int(m)
        self.theta = float(theta)
        super().__init__(np.kron(np.eye(self.m), block), name=name or f"rotation{2 * self.m}")


# ---------------------------------------------------------------------------
# separable subdifferentials


class Piece:
    """A closed proper convex function on the real line."""

    tag = "piece"

    def prox(self, v, gamma):
        raise NotImplementedError

    def min_subgradient(self, v):
        """Minimal-norm element of the subdifferential (``inf`` off the domain)."""
        raise NotImplementedError

    def argmin(self):
        raise NotImplementedError

    def as_list(self):
        raise NotImplementedError


class ZeroPiece(Piece):
    tag = "zero"

    def prox(self, v, gamma):
        return v

    def min_subgradient(self, v):
        return 0.0

    def argmin(self):
        return -math.inf, math.inf

    def as_list(self):
        return ["zero"]


class AbsPiece(Piece):
    tag = "abs"

    def __init__(self, weight=1.0):
        if not weight > 0:
            raise InvalidSpec("abs weight must be positive")
        self.weight = float(weight)

    def prox(self, v, gamma):
        return math.copysign(max(abs(v) - gamma * self.weight, 0.0), v)

    def min_subgradient(self, v):
        return 0.0 if v == 0 else self.weight

    def argmin(self):
        return 0.0, 0.0

    def as_list(self):
        return ["abs", self.weight]


class BoxPiece(Piece):
    """Indicator of ``[lo, hi]``; its subdifferential is the normal cone."""

    tag = "box"

    def __init__(self, lo, hi):
        if not lo <= hi:
            raise InvalidSpec("box piece needs lo <= hi")
        self.lo, self.hi = float(lo), float(hi)

    def prox(self, v, gamma):
        return min(max(v, self.lo), self.hi)

    def min_subgradient(self, v):
        return 0.0 if self.lo <= v <= self.hi else math.inf

    def argmin(self):
        return self.lo, self.hi

    def as_list(self):
        return ["box", self.lo, self.hi]


class QuadPiece(Piece):
    """``(a/2) (x - b)^2`` with ``a > 0``."""

    tag = "quad"

    def __init__(self, a, b=0.0):
        if not a > 0:
            raise InvalidSpec("quadratic curvature must be positive")
        self.a, self.b = float(a), float(b)

    def prox(self, v, gamma):
        return (v + gamma * self.a * self.b) / (1.0 + gamma * self.a)

    def min_subgradient(self, v):
        return abs(self.a * (v - self.b))

    def argmin(self):
        return self.b, self.b

    def as_list(self):
        return ["quad", self.a, self.b]


_PIECES = {"zero": ZeroPiece, "abs": AbsPiece, "box": BoxPiece, "quad": QuadPiece}

# Lipschitz modulus attached to an abs coordinate: its inverse is {0} on |w| < weight.
ABS_INVERSE_MODULUS = 0.01


def make_piece(spec) -> Piece:
    if isinstance(spec, Piece):
        return spec
    if isinstance(spec, str):
        spec = [spec]
    tag, *args = spec
    try:
        cls = _PIECES[tag]
    except KeyError:
        raise InvalidSpec(f"unknown convex piece {tag!r}") from None
    try:
        return cls(*args)
    except TypeError as exc:
        raise InvalidSpec(f"bad arguments for piece {tag!r}: {exc}") from None


class SeparableSubdifferential(MonotoneOperator):
    """Subdifferential of ``f(x) = sum_i f_i(x_i)``; resolvent is the coordinatewise prox."""

    kind = "separable_subdifferential"

    def __init__(self, pieces: Sequence, name=None):
        self.pieces = tuple(make_piece(p) for p in pieces)
        if not self.pieces:
            raise InvalidSpec("need at least one coordinate piece")
        bounds = np.array([p.argmin() for p in self.pieces], dtype=float)
        lo, hi = bounds[:, 0], bounds[:, 1]
        if np.all(lo == hi):
            zero_set = Singleton(lo)
        else:
            zero_set = Box(lo, hi)
        center = tuple(float(v) for v in np.clip(0.0, lo, hi))

        # local error-bound constant on B[center; 1]: max over coordinates
        kappas = []
        for p in self.pieces:
            if isinstance(p, AbsPiece):
                kappas.append(1.0 / p.weight)
            elif isinstance(p, QuadPiece):
                kappas.append(1.0 / p.a)
        subreg = SubregMeta(max(kappas, default=1.0), 1.0, center)

        lip = None
        if zero_set.singleton:
            abs_w = [p.weight for p in self.pieces if isinstance(p, AbsPiece)]
            alphas = [1.0 / p.a for p in self.pieces if isinstance(p, QuadPiece)]
            if abs_w:
                alphas.append(ABS_INVERSE_MODULUS)
            tau = 0.5 * min(abs_w) if abs_w else 1.0
            lip = LipschitzMeta(max(alphas), tau)
        super().__init__(len(self.pieces), zero_set, subreg, lip, name)

    def _resolve(self, gamma, x):
        return np.array([p.prox(v, gamma) for p, v in zip(self.pieces, x)])

    def min_norm_value(self, x):
        x = as_vector(x, self.dim)
        g = np.array([p.min_subgradient(v) for p, v in zip(self.pieces, x)])
        return float(np.linalg.norm(g))

    def describe(self):
        d = super().describe()
        d["pieces"] = [p.as_list() for p in self.pieces]
        return d


# ---------------------------------------------------------------------------
# scalar monotone maps applied coordinatewise


class ScalarMonotone(MonotoneOperator):
    """Coordinatewise continuous nondecreasing map ``x_i -> f(x_i)``."""

    kind = "scalar_monotone"

    def f(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def min_norm_value(self, x):
        return float(np.linalg.norm(self.f(as_vector(x, self.dim))))


class PowerMap(ScalarMonotone):
    """``f(x) = s * sign(x - c) * |x - c|^p`` coordinatewise.

    The resolvent equation ``u + gamma s sign(u)|u|^p = v`` is solved in
    closed form for ``p = 1`` and by bracketed root finding to machine
    precision otherwise.  For ``p <= 1`` the inverse is Lipschitz at 0 with
    ``tau = 1`` and ``alpha = s^(-1/p)``; ``p > 1`` (e.g. the cubic) carries no
    regularity metadata because it is not metrically subregular.
    """

    def __init__(self, power=1.0, scale=1.0, center=0.0, dim=1, name=None):
        if not (power > 0 and scale > 0):
            raise InvalidSpec("power map needs power > 0 and scale > 0")
        self.power, self.scale, self.center = float(power), float(scale), float(center)
        zero = Singleton(np.full(dim, self.center))
        subreg = lip = None
        if self.power <= 1.0:
            tau = 1.0
            alpha = tau ** (1.0 / self.power - 1.0) * self.scale ** (-1.0 / self.power)
            lip = LipschitzMeta(alpha, tau)
            subreg = SubregMeta(alpha, alpha * tau, tuple(float(v) for v in zero.point))
        super().__init__(dim, zero, subreg, lip, name or f"power{self.power:g}")

    def f(self, v):
        u = v - self.center
        return self.scale * np.sign(u) * np.abs(u) ** self.power

    def _solve_abs(self, a, gamma):
        if a == 0.0:
            return 0.0
        k = gamma * self.scale
        p = self.power
        if p == 1.0:
            return a / (1.0 + k)
        if p == 0.5:
            # w = sqrt(t) solves w^2 + k w - a = 0; cancellation-free root
            w = 2.0 * a / (k + math.sqrt(k * k + 4.0 * a))
            return w * w
        g = lambda t: t + k * t ** p - a
        try:
            return brentq(g, 0.0, a, xtol=a * 1e-17, rtol=4 * np.finfo(float).eps, maxiter=500)
        except RuntimeError as exc:
            raise SolveFailure(f"power-map resolvent: {exc}") from None

    def _resolve(self, gamma, x):
        u = x - self.center
        out = np.array([math.copysign(self._solve_abs(abs(v), gamma), v) for v in u])
        return out + self.center

    def describe(self):
        d = super().describe()
        d.update(power=self.power, scale=self.scale, center=self.center)
        return d


class PiecewiseLinearMap(ScalarMonotone):
    """Continuous nondecreasing piecewise-linear ``f`` given by knots and values.

    Outside the knot range ``f`` extends linearly with the end slopes.
    """

    def __init__(self, knots, values, dim=1, name=None):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.size < 2 or knots.shape != values.shape:
            raise InvalidSpec("need at least two knots with matching values")
        if np.any(np.diff(knots) <= 0) or np.any(np.diff(values) < 0):
            raise InvalidSpec("knots must increase and values must be nondecreasing")
        slopes = np.diff(values) / np.diff(knots)
        if slopes[0] <= 0 or slopes[-1] <= 0:
            raise InvalidSpec("end slopes must be positive so that zer A is bounded")
        self.knots, self.values, self.slopes = knots, values, slopes
        zeros = knots[values == 0.0]
        if zeros.size:
            lo, hi = zeros.min(), zeros.max()
        else:
            if values[0] > 0 or values[-1] < 0:
                raise InvalidSpec("f has no zero inside the knot range")
            i = int(np.searchsorted(values, 0.0)) - 1
            lo = hi = knots[i] - values[i] / slopes[i]
        zero = Singleton(np.full(dim, lo)) if lo == hi else Box(np.full(dim, lo), np.full(dim, hi))
        self._zlo, self._zhi = float(lo), float(hi)
        kappa = self._error_bound_constant()
        center = float(np.clip(0.0, lo, hi))
        subreg = SubregMeta(kappa, math.inf, (center,) * dim)
        lip = LipschitzMeta(kappa, 1.0) if lo == hi else None
        super().__init__(dim, zero, subreg, lip, name or "piecewise")

    def f(self, v):
        v = np.asarray(v, dtype=float)
        out = np.interp(v, self.knots, self.values)
        left, right = v < self.knots[0], v > self.knots[-1]
        out[left] = self.values[0] + self.slopes[0] * (v[left] - self.knots[0])
        out[right] = self.values[-1] + self.slopes[-1] * (v[right] - self.knots[-1])
        return out

    def _error_bound_constant(self):
        # d(x, Z) / |f(x)| is linear-fractional on each segment, so its sup is
        # attained at knots or in the limits at the zero set and at infinity.
        last = self.slopes.size - 1
        i_r = min(max(int(np.searchsorted(self.knots, self._zhi, side="right")) - 1, 0), last)
        i_l = min(max(int(np.searchsorted(self.knots, self._zlo, side="left")) - 1, 0), last)
        cands = [1.0 / self.slopes[0], 1.0 / self.slopes[-1],
                 1.0 / self.slopes[i_r], 1.0 / self.slopes[i_l]]
        for t, fv in zip(self.knots, self.values):
            if t > self._zhi and fv != 0:
                cands.append((t - self._zhi) / abs(fv))
            elif t < self._zlo and fv != 0:
                cands.append((self._zlo - t) / abs(fv))
        return float(max(cands))

    def _resolve(self, gamma, x):
        # g(y) = y + gamma f(y) is increasing and piecewise linear
        g_knots = self.knots + gamma * self.values
        out = np.empty_like(x)
        for idx, v in enumerate(x):
            if v <= g_knots[0]:
                s = self.slopes[0]
                out[idx] = self.knots[0] + (v - g_knots[0]) / (1.0 + gamma * s)
            elif v >= g_knots[-1]:
                s = self.slopes[-1]
                out[idx] = self.knots[-1] + (v - g_knots[-1]) / (1.0 + gamma * s)
            else:
                i = int(np.searchsorted(g_knots, v, side="right")) - 1
                i = min(i, self.slopes.size - 1)
                s = self.slopes[i]
                out[idx] = self.knots[i] + (v - g_knots[i]) / (1.0 + gamma * s)
        return out

    def describe(self):
        d = super().describe()
        d.update(knots=self.knots.tolist(), values=self.values.tolist())
        return d


# ---------------------------------------------------------------------------
# functional surface


def make_linear(M, name=None) -> LinearOperator:
    """Wrap a square matrix as a monotone linear operator (raises NotMonotone)."""
    return LinearOperator(M, name=name)


def make_separable_subdifferential(pieces, name=None) -> SeparableSubdifferential:
    return SeparableSubdifferential(pieces, name=name)


def resolve(op: MonotoneOperator, gamma, x) -> np.ndarray:
    return op.resolve(gamma, x)


def graph_element(op: MonotoneOperator, gamma, x):
    return op.graph_element(gamma, x)


def min_norm_value(op: MonotoneOperator, x) -> float:
    return op.min_norm_value(x)


def project_zero_set(op: MonotoneOperator, x) -> ZeroProjection:
    return op.project_zero_set(x)


def with_reference_zero_set(op: MonotoneOperator, start=None) -> MonotoneOperator:
    """Copy of ``op`` whose zero set is replaced by an approximate reference run."""
    clone = copy.copy(op)
    clone.zero_set = ReferenceRun(op, start)
    clone.lipschitz_meta = None
    return clone
