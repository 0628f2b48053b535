"""Exponent fields p(.), cubes and piecewise-constant grid functions.

An :class:`ExponentField` is either a constant, one of a handful of analytic
families, or a grid-sampled array.  Every checker in the package consumes a
:class:`GridFunction` obtained from :func:`discretize` at a caller-chosen
resolution, so all downstream computations (rearrangements, modulars) are
exact on the discretization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import DomainError, InvalidExponentError, PreconditionError, ShapeError

E = math.e


@dataclass(frozen=True)
class Cube:
    """Open axis-aligned cube ``prod_j (corner_j, corner_j + side)``."""

    corner: tuple
    side: float

    def __post_init__(self):
        corner = tuple(float(c) for c in np.atleast_1d(self.corner))
        object.__setattr__(self, "corner", corner)
        object.__setattr__(self, "side", float(self.side))
        if not self.side > 0 or not math.isfinite(self.side):
            raise PreconditionError(f"cube side must be positive, got {self.side}")
        if len(corner) == 0:
            raise ShapeError("cube needs at least one coordinate")

    @property
    def dim(self) -> int:
        return len(self.corner)

    @property
    def volume(self) -> float:
        return self.side ** self.dim

    @property
    def upper(self) -> tuple:
        return tuple(c + self.side for c in self.corner)

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.corner) + self.side / 2

    def contains(self, x, closed=False) -> bool:
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.corner)
        hi = lo + self.side
        if closed:
            return bool(np.all((x >= lo) & (x <= hi)))
        return bool(np.all((x > lo) & (x < hi)))

    def overlaps(self, other: "Cube") -> bool:
        """True when the open cubes intersect."""
        if other.dim != self.dim:
            raise ShapeError("cubes of different dimension")
        for a, b in zip(self.corner, other.corner):
            if a + self.side <= b or b + other.side <= a:
                return False
        return True

    def subdivide(self, k: int = 1) -> list:
        """The ``2**(n*k)`` dyadic subcubes of generation ``k`` (row-major)."""
        per = 2**k
        h = self.side / per
        idx = np.indices((per,) * self.dim).reshape(self.dim, -1).T
        return [Cube(tuple(c + i * h for c, i in zip(self.corner, row)), h) for row in idx]

    def to_dict(self) -> dict:
        return {"corner": list(self.corner), "side": self.side}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Cube":
        return cls(tuple(d["corner"]), d["side"])

    @classmethod
    def interval(cls, a: float, b: float) -> "Cube":
        return cls((a,), b - a)

    @classmethod
    def centered(cls, radius: float, dim: int = 1) -> "Cube":
        return cls((-radius,) * dim, 2 * radius)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant function on ``cube`` with ``m`` cells per side.

    ``values`` holds the ``m**n`` cell values in row-major order; axis 0 of
    :attr:`grid` is the first coordinate.
    """

    cube: Cube
    m: int
    values: np.ndarray

    def __post_init__(self):
        m = int(self.m)
        if m < 1:
            raise PreconditionError("cells_per_side must be >= 1")
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size != m**self.cube.dim:
            raise ShapeError(
                f"expected {m ** self.cube.dim} values for m={m}, n={self.cube.dim}; got {vals.size}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.cube.dim

    @property
    def n_cells(self) -> int:
        return self.values.size

    @property
    def cell_side(self) -> float:
        return self.cube.side / self.m

    @property
    def cell_volume(self) -> float:
        return self.cube.volume / self.n_cells

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape((self.m,) * self.dim)

    def centers(self) -> np.ndarray:
        """Cell centers, shape ``(m**n, n)``, row-major."""
        h = self.cell_side
        axes = [c + (np.arange(self.m) + 0.5) * h for c in self.cube.corner]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.cube, self.m, values)

    def same_grid(self, other: "GridFunction") -> bool:
        return self.m == other.m and self.cube == other.cube

    @classmethod
    def from_callable(cls, cube: Cube, m: int, func: Callable) -> "GridFunction":
        proto = cls(cube, m, np.zeros(m**cube.dim))
        return cls(cube, m, np.asarray(func(proto.centers()), dtype=float).reshape(-1))

    @classmethod
    def constant(cls, cube: Cube, m: int, value: float) -> "GridFunction":
        return cls(cube, m, np.full(m**cube.dim, float(value)))

    def to_dict(self) -> dict:
        return {"cube": self.cube.to_dict(), "m": self.m, "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "GridFunction":
        return cls(Cube.from_dict(d["cube"]), d["m"], d["values"])


# ---------------------------------------------------------------------------
# One-dimensional radial profiles s(t), t >= 0.


def _phi_family(name: str) -> Callable:
    table = {
        "one": lambda y: np.ones_like(y),
        "log": np.log,
        "loglog": lambda y: np.log(np.log(y)),
        "sqrtlog": lambda y: np.sqrt(np.log(y)),
    }
    try:
        return table[name]
    except KeyError:
        raise PreconditionError(f"unknown phi family {name!r}; choose from {sorted(table)}") from None


_LOG_MAX = 700.0  # exp(u) stays finite below this
_SINI_SWITCH = 4096.0  # sinintegral: quadrature below, tail expansion above
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _gauss_pieces(g, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """24-point Gauss-Legendre integral of ``g`` over each ``[left_i, right_i]``."""
    h = right - left
    y = left[:, None] + (_GL_NODES + 1.0)[None, :] * (h[:, None] / 2)
    return (g(y) * _GL_WEIGHTS).sum(axis=1) * h / 2


def _cumulative_integral(g, a: float, ts: np.ndarray, piece: float = 2.0) -> np.ndarray:
    """``int_a^t g`` for ``ts >= a`` on fixed knots ``a + k piece``.

    The knots do not depend on the other entries of ``ts``, so the value at
    each ``t`` is the same whichever batch it is evaluated in.
    """
    ts = np.asarray(ts, dtype=float)
    if ts.size == 0:
        return np.zeros(0)
    k = np.floor((ts - a) / piece).astype(np.int64)
    n_knots = int(k.max()) + 1
    knots = a + piece * np.arange(n_knots + 1)
    cum = np.concatenate([[0.0], np.cumsum(_gauss_pieces(g, knots[:-1], knots[1:]))])
    return cum[k] + _gauss_pieces(g, knots[k], ts)


class _Profile:
    """Base for analytic radial profiles."""

    required: tuple = ()
    defaults: dict = {}

    def __init__(self, params: Mapping[str, Any]):
        missing = [k for k in self.required if k not in params]
        if missing:
            raise PreconditionError(f"{type(self).__name__} missing parameters {missing}")
        self.p = {**self.defaults, **params}

    def __call__(self, t):
        raise NotImplementedError

    def derivative(self, t):
        return None

    def scaled_derivative(self, u):
        """``t log(t) s'(t)`` at ``t = exp(u)``, or ``None`` if unknown."""
        u = np.asarray(u, dtype=float)
        if np.any(u > _LOG_MAX):
            return None
        t = np.exp(u)
        d = self.derivative(t)
        return None if d is None else d * t * u

    def bounds(self):
        raise NotImplementedError


class _LogHolderPrototype(_Profile):
    # base + amp / log(e + t)
    defaults = {"base": 2.0, "amp": 1.0}

    def __call__(self, t):
        return self.p["base"] + self.p["amp"] / np.log(E + np.asarray(t, dtype=float))

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return -self.p["amp"] / ((E + t) * np.log(E + t) ** 2)

    def scaled_derivative(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore"):
            shift = np.exp(1.0 - u)           # e / t
        log_et = u + np.log1p(shift)          # log(e + t)
        return -self.p["amp"] * u / ((1.0 + shift) * log_et ** 2)

    def bounds(self):
        a, b = self.p["base"], self.p["base"] + self.p["amp"]
        return (min(a, b), max(a, b))


class _SinLogLog(_Profile):
    # c + alpha*sin(log log t) for t > e, c otherwise
    required = ("c", "alpha")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, float(self.p["c"]))
        big = t > E
        out[big] = self.p["c"] + self.p["alpha"] * np.sin(np.log(np.log(t[big])))
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        big = t > E
        lt = np.log(t[big])
        out[big] = self.p["alpha"] * np.cos(np.log(lt)) / (t[big] * lt)
        return out

    def scaled_derivative(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        big = u > 1
        out[big] = self.p["alpha"] * np.cos(np.log(u[big]))
        return out

    def bounds(self):
        a = abs(self.p["alpha"])
        return (self.p["c"] - a, self.p["c"] + a)


class _SinLog(_Profile):
    # c + alpha*sin(log t) for t > 1, c otherwise
    required = ("c", "alpha")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, float(self.p["c"]))
        big = t > 1
        out[big] = self.p["c"] + self.p["alpha"] * np.sin(np.log(t[big]))
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        big = t > 1
        out[big] = self.p["alpha"] * np.cos(np.log(t[big])) / t[big]
        return out

    def scaled_derivative(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        big = u > 0
        out[big] = self.p["alpha"] * np.cos(u[big]) * u[big]
        return out

    def bounds(self):
        a = abs(self.p["alpha"])
        return (self.p["c"] - a, self.p["c"] + a)


class _SinIntegral(_Profile):
    """c + alpha * int_{t0}^t sin(y) / (y log(y) phi(y)) dy for t > t0."""

    required = ("c",)
    defaults = {"alpha": 1.0, "t0": E, "phi": "log"}

    def __init__(self, params):
        super().__init__(params)
        self.t0 = float(self.p["t0"])
        if self.t0 < E:
            raise PreconditionError("sinintegral needs t0 >= e")
        if self.t0 >= _SINI_SWITCH:
            raise PreconditionError(f"sinintegral needs t0 < {_SINI_SWITCH:g}")
        self.phi = _phi_family(str(self.p["phi"]))
        if not float(self.phi(np.array(self.t0))) > 0:
            raise PreconditionError(f"phi={self.p['phi']!r} is not positive at t0={self.t0}")
        self._head_value = None

    def _weight(self, y):
        return 1.0 / (y * np.log(y) * self.phi(y))

    def _integrand(self, y):
        return np.sin(y) * self._weight(y)

    def _tail(self, T):
        # int_T^inf sin(y) w(y) dy after three integrations by parts:
        # cos(T) w - sin(T) w' - cos(T) w'', error of the order of w'''.
        T = np.asarray(T, dtype=float)
        h = 1e-3 * T
        w0 = self._weight(T)
        wp, wm = self._weight(T + h), self._weight(T - h)
        w1 = (wp - wm) / (2 * h)
        w2 = (wp - 2 * w0 + wm) / (h * h)
        return np.cos(T) * w0 - np.sin(T) * w1 - np.cos(T) * w2

    def _head(self) -> float:
        if self._head_value is None:
            self._head_value = float(
                _cumulative_integral(self._integrand, self.t0, np.array([_SINI_SWITCH]))[0])
        return self._head_value

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, float(self.p["c"]))
        big = t > self.t0
        if not np.any(big):
            return out
        tb = t[big]
        vals = np.empty(tb.shape)
        near = tb <= _SINI_SWITCH
        if np.any(near):
            vals[near] = _cumulative_integral(self._integrand, self.t0, tb[near])
        if np.any(~near):
            with np.errstate(over="ignore", invalid="ignore"):
                far = self._head() + self._tail(_SINI_SWITCH) - self._tail(tb[~near])
            vals[~near] = np.where(np.isfinite(far), far, self._head() + self._tail(_SINI_SWITCH))
        out[big] = self.p["c"] + self.p["alpha"] * vals
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        big = t > self.t0
        out[big] = self.p["alpha"] * self._integrand(t[big])
        return out

    def scaled_derivative(self, u):
        # alpha sin(t) / phi(t); past exp(_LOG_MAX) the sine is replaced by its
        # envelope 1, which can only overstate the ratio.
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        big = u > math.log(self.t0)
        ub = u[big]
        phi_u = {"one": np.ones_like(ub), "log": ub, "loglog": np.log(ub),
                 "sqrtlog": np.sqrt(ub)}[str(self.p["phi"])]
        finite = ub <= _LOG_MAX
        sine = np.ones_like(ub)
        sine[finite] = np.sin(np.exp(ub[finite]))
        out[big] = self.p["alpha"] * sine / phi_u
        return out

    def bounds(self):
        # Decreasing amplitude: the alternating lobes put both extremes within
        # the first few half-periods after t0.
        ts = np.union1d(
            np.linspace(self.t0, self.t0 + 8 * np.pi, 4001),
            np.pi * np.arange(math.ceil(self.t0 / np.pi), math.ceil(self.t0 / np.pi) + 9),
        )
        vals = self(ts[ts >= self.t0])
        c = float(self.p["c"])
        return (min(c, float(vals.min())), max(c, float(vals.max())))


class _ConstantProfile(_Profile):
    required = ("value",)

    def __call__(self, t):
        return np.full(np.shape(t), float(self.p["value"]))

    def derivative(self, t):
        return np.zeros(np.shape(t))

    def scaled_derivative(self, u):
        return np.zeros(np.shape(u))

    def bounds(self):
        v = float(self.p["value"])
        return (v, v)


_RADIAL_FAMILIES = {
    "constant": _ConstantProfile,
    "lh_prototype": _LogHolderPrototype,
    "sinloglog": _SinLogLog,
    "sinlog": _SinLog,
    "sinintegral": _SinIntegral,
}

KINDS = ("constant", "step", "lh_prototype", "sinloglog", "sinlog", "sinintegral", "radial", "grid", "conjugate")


def _default_box(dim: int) -> Cube:
    return Cube.centered(8.0, dim)


@dataclass(frozen=True, eq=False)
class ExponentField:
    """An exponent ``p(.)`` on R^n with ``1 < p_- <= p_+ < inf``.

    Build instances with the constructors (:meth:`constant`, :meth:`step`,
    :meth:`family`, :meth:`radial`, :meth:`from_grid`) rather than directly.
    Non-grid kinds evaluate everywhere; ``domain_box`` is only the region of
    interest.  Analytic families other than ``step`` are radial: they evaluate
    a one-dimensional profile at ``|x|``.
    """

    kind: str
    params: Mapping[str, Any]
    dimension: int
    domain_box: Cube
    grid: GridFunction | None = None
    profile: "ExponentField | None" = None
    base: "ExponentField | None" = None
    _impl: Any = field(default=None, repr=False)
    _bounds: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown exponent kind {self.kind!r}")
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        if self.domain_box.dim != self.dimension:
            raise ShapeError("domain_box dimension differs from field dimension")
        impl = None
        if self.kind in _RADIAL_FAMILIES:
            params = dict(self.params)
            impl = _RADIAL_FAMILIES[self.kind](params)
            lo, hi = impl.bounds()
        elif self.kind == "step":
            lo = min(self.params["low"], self.params["high"])
            hi = max(self.params["low"], self.params["high"])
        elif self.kind == "grid":
            if self.grid is None:
                raise PreconditionError("grid kind needs a grid")
            lo, hi = float(self.grid.values.min()), float(self.grid.values.max())
        elif self.kind == "radial":
            if self.profile is None or self.profile.dimension != 1:
                raise PreconditionError("radial kind needs a one-dimensional profile")
            lo, hi = self.profile.p_minus, self.profile.p_plus
        else:  # conjugate
            lo, hi = _conj(self.base.p_plus), _conj(self.base.p_minus)
        if not (lo > 1 and math.isfinite(hi)):
            raise InvalidExponentError(f"need 1 < p_- <= p_+ < inf, got [{lo}, {hi}]")
        object.__setattr__(self, "_impl", impl)
        object.__setattr__(self, "_bounds", (float(lo), float(hi)))

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, value: float, dimension: int = 1, domain_box: Cube | None = None):
        box = domain_box or _default_box(dimension)
        return cls("constant", {"value": float(value)}, dimension, box)

    @classmethod
    def step(cls, low: float, high: float, threshold: float = 0.0, axis: int = 0,
             dimension: int = 1, domain_box: Cube | None = None):
        """``low`` where ``x[axis] < threshold``, ``high`` elsewhere."""
        box = domain_box or _default_box(dimension)
        params = {"low": float(low), "high": float(high), "threshold": float(threshold), "axis": int(axis)}
        return cls("step", params, dimension, box)

    @classmethod
    def family(cls, kind: str, dimension: int = 1, domain_box: Cube | None = None, **params):
        if kind not in _RADIAL_FAMILIES:
            raise PreconditionError(f"{kind!r} is not a builtin analytic family")
        return cls(kind, params, dimension, domain_box or _default_box(dimension))

    @classmethod
    def radial(cls, profile: "ExponentField", dimension: int, domain_box: Cube | None = None):
        """``p(x) = s(|x|)`` for a one-dimensional field ``s``."""
        return cls("radial", {}, dimension, domain_box or _default_box(dimension), profile=profile)

    @classmethod
    def from_grid(cls, grid: GridFunction):
        return cls("grid", {}, grid.dim, grid.cube, grid=grid)

    # -- evaluation ---------------------------------------------------------
    @property
    def p_minus(self) -> float:
        return self._bounds[0]

    @property
    def p_plus(self) -> float:
        return self._bounds[1]

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dimension:
            raise ShapeError(f"points must have trailing dimension {self.dimension}")
        return x

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points of shape ``(..., n)`` (or ``(...)`` when n=1)."""
        x = self._points(x)
        lead = x.shape[:-1]
        if self.kind == "constant":
            return np.full(lead, float(self.params["value"]))
        if self.kind == "step":
            coord = x[..., int(self.params["axis"])]
            return np.where(coord < self.params["threshold"], self.params["low"], self.params["high"])
        if self.kind == "grid":
            return self._eval_grid(x)
        if self.kind == "conjugate":
            return _conj(self.base(x))
        r = np.sqrt((x * x).sum(axis=-1))
        if self.kind == "radial":
            return self.profile(r)
        return np.asarray(self._impl(r), dtype=float).reshape(lead)

    def _eval_grid(self, x):
        g = self.grid
        lo = np.asarray(g.cube.corner)
        rel = (x - lo) / g.cell_side
        if np.any(rel < 0) or np.any(rel > g.m):
            raise DomainError("point outside the grid-sampled exponent's domain")
        idx = np.minimum(np.floor(rel).astype(np.int64), g.m - 1)
        flat = np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), (g.m,) * g.dim)
        return g.values[flat]

    def radial_profile(self, t):
        """The one-dimensional profile ``s(t)`` of a radial field."""
        t = np.asarray(t, dtype=float)
        if self.kind == "radial":
            return self.profile.radial_profile(t)
        if self.kind in _RADIAL_FAMILIES:
            return np.asarray(self._impl(t), dtype=float)
        if self.kind == "conjugate":
            return _conj(self.base.radial_profile(t))
        if self.dimension == 1:
            return self(t)
        raise PreconditionError(f"{self.kind!r} field is not radial")

    def radial_derivative(self, t):
        """``ds/dt`` when known in closed form, else ``None``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "radial":
            return self.profile.radial_derivative(t)
        if self.kind in _RADIAL_FAMILIES:
            return self._impl.derivative(t)
        if self.kind == "conjugate":
            d = self.base.radial_derivative(t)
            if d is None:
                return None
            p = self.base.radial_profile(t)
            return -d / (p - 1) ** 2
        return None

    def radial_scaled_derivative(self, u):
        """``t log(t) s'(t)`` at ``t = exp(u)``; usable far beyond double range
        for the builtin families.  ``None`` when unknown."""
        u = np.asarray(u, dtype=float)
        if self.kind == "radial":
            return self.profile.radial_scaled_derivative(u)
        if self.kind in _RADIAL_FAMILIES:
            return self._impl.scaled_derivative(u)
        if np.any(u > _LOG_MAX):
            return None
        t = np.exp(u)
        d = self.radial_derivative(t)
        return None if d is None else d * t * u

    def to_dict(self) -> dict:
        return field_to_dict(self)


def _conj(p):
    p = np.asarray(p, dtype=float) if not np.isscalar(p) else float(p)
    return p / (p - 1)


# ---------------------------------------------------------------------------
# Operations


def eval(field: ExponentField, x) -> np.ndarray:  # noqa: A001 - public name
    """Evaluate ``field`` at ``x``; scalars in, scalar out."""
    out = field(x)
    return float(out) if np.ndim(out) == 0 else out


def conjugate(field: ExponentField) -> ExponentField:
    """The conjugate exponent ``p/(p-1)`` with swapped bounds."""
    if not field.p_minus > 1:
        raise InvalidExponentError("conjugate needs p_- > 1")
    if field.kind == "constant":
        return ExponentField.constant(_conj(field.params["value"]), field.dimension, field.domain_box)
    if field.kind == "step":
        q = dict(field.params)
        q["low"], q["high"] = _conj(q["low"]), _conj(q["high"])
        return ExponentField("step", q, field.dimension, field.domain_box)
    if field.kind == "grid":
        return ExponentField.from_grid(field.grid.with_values(_conj(field.grid.values)))
    return ExponentField("conjugate", {}, field.dimension, field.domain_box, base=field)


def conjugate_values(p):
    """Pointwise ``p/(p-1)`` on arrays or grid functions."""
    if isinstance(p, GridFunction):
        if np.any(p.values <= 1):
            raise InvalidExponentError("conjugate needs p > 1")
        return p.with_values(_conj(p.values))
    p = np.asarray(p, dtype=float)
    if np.any(p <= 1):
        raise InvalidExponentError("conjugate needs p > 1")
    return _conj(p)


def discretize(field: ExponentField, region: Cube, m: int) -> GridFunction:
    """Sample ``field`` at the cell centers of an ``m``-per-side grid on ``region``."""
    if region.dim != field.dimension:
        raise ShapeError("region dimension differs from field dimension")
    if field.kind == "grid" and field.grid.cube == region and field.grid.m == m:
        return field.grid
    return GridFunction.from_callable(region, m, field)


def essential_bounds(field: ExponentField, region: Cube, m: int):
    """``(min, max)`` of the cell values of the discretization on ``region``."""
    if m < 1:
        raise PreconditionError("m must be >= 1")
    g = discretize(field, region, m)
    return float(g.values.min()), float(g.values.max())


def exponent_tower(k: int) -> float:
    """``e_0 = 1``, ``e_{k+1} = exp(e_k)``; overflows to ``inf`` from k=4."""
    v = 1.0
    for _ in range(k):
        v = math.exp(v) if v < 709 else math.inf
    return v


def iterated_log(t, k: int):
    """``log_k t`` (``log_0 t = t``)."""
    out = np.asarray(t, dtype=float)
    for _ in range(k):
        out = np.log(out)
    return out


def nekvinda_envelope(k: int, alpha: float, t):
    """Nekvinda's derivative envelope ``b_{k,alpha}(t) = 1/(t log t phi_{k,alpha}(t))``.

    ``phi_{k,alpha}`` is ``log^alpha t`` for k=1, ``(log log t)^(1+alpha)`` for
    k=2 and ``(prod_{j=2}^{k-1} log_j t) * (log_k t)^(1+alpha)`` for k >= 3.
    Requires ``t > e_k``.
    """
    if k < 1 or int(k) != k:
        raise PreconditionError("k must be a positive integer")
    if not 0 < alpha < 1:
        raise PreconditionError("alpha must lie in (0, 1)")
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > exponent_tower(k))):
        raise DomainError(f"b_{{k,alpha}} is defined only for t > e_{k}")
    logs = [iterated_log(t_arr, j) for j in range(1, k + 1)]
    if k == 1:
        phi = logs[0] ** alpha
    else:
        phi = np.prod(logs[1:k - 1], axis=0) * logs[k - 1] ** (1 + alpha) if k > 2 else logs[1] ** (1 + alpha)
    out = 1.0 / (t_arr * logs[0] * phi)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# JSON exponent definitions


def field_to_dict(f: ExponentField) -> dict:
    d: dict = {"kind": f.kind, "params": dict(f.params), "dimension": f.dimension,
               "domain": f.domain_box.to_dict()}
    if f.kind == "grid":
        d["m"] = f.grid.m
        d["cells"] = f.grid.values.tolist()
    elif f.kind == "radial":
        d["profile"] = field_to_dict(f.profile)
    elif f.kind == "conjugate":
        d["base"] = field_to_dict(f.base)
    return d


def field_from_dict(d: Mapping) -> ExponentField:
    try:
        kind = d["kind"]
        dim = int(d.get("dimension", 1))
        box = Cube.from_dict(d["domain"]) if "domain" in d else _default_box(dim)
        params = dict(d.get("params", {}))
    except (KeyError, TypeError) as exc:
        raise PreconditionError(f"malformed exponent definition: {exc}") from exc
    if kind == "grid":
        return ExponentField.from_grid(GridFunction(box, int(d["m"]), d["cells"]))
    if kind == "radial":
        return ExponentField.radial(field_from_dict(d["profile"]), dim, box)
    if kind == "conjugate":
        return conjugate(field_from_dict(d["base"]))
    if kind == "step":
        return ExponentField.step(dimension=dim, domain_box=box, **params)
    if kind == "constant":
        return ExponentField.constant(params["value"], dim, box)
    return ExponentField.family(kind, dim, box, **params)


def load_exponent(path) -> ExponentField:
    return field_from_dict(json.loads(Path(path).read_text()))


def save_exponent(f: ExponentField, path) -> None:
    Path(path).write_text(json.dumps(field_to_dict(f), indent=2, sort_keys=True) + "\n")


def two_valued_grid(cube: Cube, m: int, low: float, high: float, fraction_high: float = 0.5,
                    axis: int = 0) -> GridFunction:
    """Grid taking ``high`` on the last ``fraction_high`` of slices along ``axis``."""
    k = round(fraction_high * m)
    if abs(k - fraction_high * m) > 1e-9 * m:
        raise PreconditionError("fraction_high * m must be an integer")
    idx = np.indices((m,) * cube.dim)[axis].ravel()
    return GridFunction(cube, m, np.where(idx >= m - k, high, low))


def as_points(xs: Sequence) -> np.ndarray:
    return np.asarray(xs, dtype=float)
