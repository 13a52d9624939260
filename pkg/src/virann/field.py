"""Vector fields on the circle in mode coordinates, and their matrix action.

A field is stored as finitely many complex coefficients a_n of the basis
fields z^{n+1} d/dz (equivalently -i e^{in theta} d/dtheta).  This basis
diagonalizes both the Witt bracket and the central cocycle, and the matrix
action on a truncated module is the plain mode sum over ``lmat``.

Inward-pointing means Re(sum a_n e^{in theta}) <= 0 on the circle: the flow
moves boundary curves weakly into the disk.  Such fields admit the
expectation bound Re<pi(X)v, v> <= mu_X computed by ``qei_bound``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, GridError, NotInwardError, TruncationError
from .virmod import ModuleData

#: admit tangential (boundary-of-cone) fields in the inwardness test
DEFAULT_INWARD_TOL = 1e-10

#: below this, a sample of Im g counts as a zero of the field
DEFAULT_GRIDTOL = 1e-12

DEFAULT_GRID = 512


class VectorField:
    """Finitely supported mode coefficients {n: a_n}."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict[int, complex] | None = None):
        clean: dict[int, complex] = {}
        for n, a in (coeffs or {}).items():
            a = complex(a)
            if a != 0:
                clean[int(n)] = a
        self.coeffs = clean

    @property
    def maxmode(self) -> int:
        return max((abs(n) for n in self.coeffs), default=0)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.coeffs))

    def coeff(self, n: int) -> complex:
        return self.coeffs.get(n, 0j)

    def __add__(self, other: "VectorField") -> "VectorField":
        out = dict(self.coeffs)
        for n, a in other.coeffs.items():
            out[n] = out.get(n, 0j) + a
        return VectorField(out)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + (-1.0) * other

    def __rmul__(self, scalar) -> "VectorField":
        s = complex(scalar)
        return VectorField({n: s * a for n, a in self.coeffs.items()})

    __mul__ = __rmul__

    def __eq__(self, other) -> bool:
        return isinstance(other, VectorField) and self.coeffs == other.coeffs

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}: {a:.6g}" for n, a in sorted(self.coeffs.items()))
        return f"VectorField({{{inner}}})"

    def norm1(self) -> float:
        return float(sum(abs(a) for a in self.coeffs.values()))

    def to_dict(self) -> dict:
        return {"modes": [[n, float(a.real), float(a.imag)]
                          for n, a in sorted(self.coeffs.items())]}

    @classmethod
    def from_dict(cls, doc: dict) -> "VectorField":
        return cls({int(n): complex(re, im) for n, re, im in doc["modes"]})


def mode_field(n: int, a: complex = 1.0) -> VectorField:
    """The single basis field a * z^{n+1} d/dz."""
    return VectorField({n: a})


def zero_field() -> VectorField:
    return VectorField({})


def adjoint_field(X: VectorField) -> VectorField:
    """Coefficient map a_n -> conj(a_{-n}); realizes pi(X)* = pi(adjoint)."""
    return VectorField({-n: np.conj(a) for n, a in X.coeffs.items()})


# ---------------------------------------------------------------------------
# algebra


def witt_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y] with [e_m, e_n] = (m - n) e_{m+n} on basis fields.

    Accumulated over unordered mode pairs as (m-n)(a_m b_n - a_n b_m), so
    antisymmetry and [X, X] = 0 hold exactly in floating point, not just up
    to rounding.
    """
    modes = sorted(set(X.coeffs) | set(Y.coeffs))
    out: dict[int, complex] = {}
    for i, m in enumerate(modes):
        for n in modes[:i]:
            cross = X.coeff(m) * Y.coeff(n) - X.coeff(n) * Y.coeff(m)
            if cross != 0:
                k = m + n
                out[k] = out.get(k, 0j) + (m - n) * cross
    return VectorField(out)


def cocycle(X: VectorField, Y: VectorField, c: float) -> complex:
    """Central pairing (c/12) sum_m (m^3 - m) a_m b_{-m}.

    Paired over +-m for exact antisymmetry in floating point.
    """
    total = 0j
    for m in sorted(set(X.coeffs) | set(Y.coeffs)):
        if m <= 1:  # m^3 - m vanishes at 0, +-1; m <= -2 pairs with its mirror
            continue
        cross = X.coeff(m) * Y.coeff(-m) - X.coeff(-m) * Y.coeff(m)
        total += (m**3 - m) * cross
    return complex(c) * total / 12.0


def field_norm(X: VectorField, t: float) -> float:
    """Weighted l1 norm sum_m (1 + |m|)^t |a_m|."""
    return float(sum((1.0 + abs(m)) ** t * abs(a) for m, a in X.coeffs.items()))


# ---------------------------------------------------------------------------
# circle samples


def _theta_grid(G: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(G) / G


def _mode_samples(X: VectorField, G: int) -> np.ndarray:
    """Samples of w(theta) = sum a_n e^{in theta}."""
    theta = _theta_grid(G)
    w = np.zeros(G, dtype=complex)
    for n, a in X.coeffs.items():
        w += a * np.exp(1j * n * theta)
    return w


def to_theta(X: VectorField, grid: int = DEFAULT_GRID) -> np.ndarray:
    """Samples of g with X = g(theta) d/dtheta, i.e. g = -i sum a_n e^{in theta}."""
    if grid <= 2 * X.maxmode:
        raise GridError(f"grid {grid} cannot resolve modes up to {X.maxmode}")
    return -1j * _mode_samples(X, grid)


def inward_margin(X: VectorField, grid: int = DEFAULT_GRID) -> float:
    """max_theta Re(sum a_n e^{in theta}); <= 0 means inward-pointing."""
    if grid <= 2 * X.maxmode:
        raise GridError(f"grid {grid} cannot resolve modes up to {X.maxmode}")
    return float(_mode_samples(X, grid).real.max(initial=0.0))


def is_inward(X: VectorField, grid: int = DEFAULT_GRID,
              tol: float = DEFAULT_INWARD_TOL) -> bool:
    return inward_margin(X, grid) <= tol


def qei_bound(X: VectorField, c: float, grid: int = DEFAULT_GRID,
              gridtol: float = DEFAULT_GRIDTOL,
              tol: float = DEFAULT_INWARD_TOL) -> float:
    """Expectation bound mu_X = (c/24) * integral of (d/dtheta sqrt(g))^2.

    Here g = Im of the theta-coefficient of X, nonnegative for inward X.
    The integrand is evaluated as (g')^2 / (4g) with spectrally exact g'
    (g is a trigonometric polynomial), which extends smoothly through
    quadratic zeros of g; at samples with g <= gridtol the removable-limit
    value max(g'', 0)/2 is used.  Trapezoidal quadrature on the uniform
    grid is then spectrally accurate, unlike direct differencing of
    sqrt(g), whose kinks at zeros cost two orders of accuracy.
    """
    M = X.maxmode
    if grid <= 4 * M:
        grid = max(DEFAULT_GRID, 8 * (M + 1))
    margin = inward_margin(X, grid)
    if margin > tol:
        raise NotInwardError(
            f"field is not inward-pointing (margin {margin:.3e} > tol {tol:.3e})",
            margin=margin,
        )

    theta = _theta_grid(grid)
    # g and its derivatives from the exact mode coefficients of Im g
    modes = np.array(sorted(set(X.coeffs) | {-n for n in X.coeffs}), dtype=int)
    if modes.size == 0:
        return 0.0
    ghat = np.array([-0.5 * (X.coeff(n) + np.conj(X.coeff(-n))) for n in modes])
    phase = np.exp(1j * np.outer(modes, theta))
    g = (ghat @ phase).real
    g1 = ((1j * modes * ghat) @ phase).real
    g2 = ((-(modes.astype(float) ** 2) * ghat) @ phase).real

    scale = max(float(np.abs(g).max()), 1.0)
    near_zero = g <= gridtol * scale
    integrand = np.empty(grid)
    safe = ~near_zero
    integrand[safe] = g1[safe] ** 2 / (4.0 * g[safe])
    integrand[near_zero] = np.maximum(g2[near_zero], 0.0) / 2.0
    mu = (c / 24.0) * (2.0 * np.pi / grid) * float(integrand.sum())
    return max(mu, 0.0)


# ---------------------------------------------------------------------------
# matrix action


def pi_field(X: VectorField, module: ModuleData) -> np.ndarray:
    """Dense matrix sum_n a_n lmat(n) on the truncated module."""
    if X.maxmode > module.lmax:
        raise TruncationError(
            f"field has modes up to {X.maxmode}, module matrices stop at {module.lmax}"
        )
    out = np.zeros((module.dim, module.dim), dtype=complex)
    for n, a in X.coeffs.items():
        out += a * module.lmat(n)
    return out


def energy_bound_constant(c: float) -> float:
    return 1.0 + np.sqrt(2.0) + np.sqrt(c / 12.0)


# ---------------------------------------------------------------------------
# paths of fields


class FieldPath:
    """Time-sampled path of fields on [0, 1] with an interpolation rule.

    Knots are strictly increasing with t_0 = 0 and t_K = 1.  ``linear``
    interpolates coefficients between knots; ``constant`` holds the field of
    the knot at or before t.  Subclasses may override ``field_at`` entirely
    (composite paths built by annulus gluing do).
    """

    def __init__(self, knots, fields, interp: str = "linear"):
        knots = [float(t) for t in knots]
        fields = list(fields)
        if len(knots) != len(fields):
            raise ArgumentError("one field per knot required")
        if len(knots) < 1:
            raise ArgumentError("path needs at least one knot")
        if abs(knots[0]) > 1e-14 or abs(knots[-1] - 1.0) > 1e-14:
            raise ArgumentError("knots must start at 0 and end at 1")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ArgumentError("knots must be strictly increasing")
        if interp not in ("linear", "constant"):
            raise ArgumentError(f"unknown interpolation rule {interp!r}")
        self.knots = knots
        self.fields = fields
        self.interp = interp

    @classmethod
    def constant_path(cls, X: VectorField) -> "FieldPath":
        return cls([0.0, 1.0], [X, X], interp="linear")

    @property
    def maxmode(self) -> int:
        return max((f.maxmode for f in self.fields), default=0)

    def field_at(self, t: float) -> VectorField:
        t = min(max(float(t), 0.0), 1.0)
        i = bisect.bisect_right(self.knots, t) - 1
        if i >= len(self.knots) - 1:
            return self.fields[-1]
        if self.interp == "constant":
            return self.fields[i]
        t0, t1 = self.knots[i], self.knots[i + 1]
        lam = (t - t0) / (t1 - t0)
        return (1.0 - lam) * self.fields[i] + lam * self.fields[i + 1]

    def reversed_adjoint(self) -> "FieldPath":
        """The path t -> adjoint_field(X(1 - t)), knots mirrored."""
        ks = [1.0 - t for t in reversed(self.knots)]
        ks[0], ks[-1] = 0.0, 1.0
        fs = [adjoint_field(f) for f in reversed(self.fields)]
        return FieldPath(ks, fs, self.interp)

    def max_inward_margin(self, grid: int = DEFAULT_GRID) -> float:
        return max(inward_margin(f, grid) for f in self.fields)

    def to_dict(self) -> dict:
        return {
            "knots": list(self.knots),
            "fields": [f.to_dict() for f in self.fields],
            "interp": self.interp,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FieldPath":
        return cls(doc["knots"],
                   [VectorField.from_dict(f) for f in doc["fields"]],
                   doc.get("interp", "linear"))


# ---------------------------------------------------------------------------
# randomized inputs for the verification suites


def random_field(maxmode: int, rng: np.random.Generator,
                 amplitude: float = 1.0) -> VectorField:
    coeffs = {}
    for n in range(-maxmode, maxmode + 1):
        re, im = rng.standard_normal(2)
        coeffs[n] = amplitude * complex(re, im)
    return VectorField(coeffs)


def random_inward_field(maxmode: int, rng: np.random.Generator,
                        amplitude: float = 1.0, margin: float = 0.0,
                        grid: int = 1024) -> VectorField:
    """Random field pushed into the inward cone.

    Draws random oscillating modes, then lowers the constant mode so that
    Re(sum a_n e^{in theta}) <= -margin * amplitude on a fine grid.  The
    cone is scale-invariant, so ``amplitude`` simply scales the result.
    """
    osc = {}
    for n in range(-maxmode, maxmode + 1):
        if n == 0:
            continue
        re, im = rng.standard_normal(2)
        osc[n] = complex(re, im)
    X = VectorField(osc)
    # fine-grid max plus a slack for the continuum max between samples
    peak = inward_margin(X, grid) * (1.0 + 10.0 / grid) + 1e-13
    osc[0] = complex(rng.standard_normal() * 0.0 - peak - margin,
                     rng.standard_normal())
    return amplitude * VectorField(osc)


def random_inward_path(maxmode: int, rng: np.random.Generator, knots: int = 5,
                       amplitude: float = 1.0, wiggle: float = 0.3,
                       margin: float = 0.0) -> FieldPath:
    """Piecewise-linear inward path: base inward field plus small inward wiggles.

    Convex combinations of inward fields stay inward, so linear
    interpolation between inward knot fields is inward for every t.
    """
    base = random_inward_field(maxmode, rng, amplitude=1.0, margin=margin)
    fields = []
    for _ in range(knots):
        w = random_inward_field(maxmode, rng, amplitude=wiggle, margin=0.0)
        fields.append(amplitude * (base + w))
    ts = np.linspace(0.0, 1.0, knots)
    return FieldPath(ts, fields)
