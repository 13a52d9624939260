"""Level-truncated unitary lowest-weight modules for the Virasoro algebra.

Conventions used throughout the package:

    [L_m, L_n] = (m - n) L_{m+n} + (c/12)(m^3 - m) delta_{m+n,0}
    L_n* = L_{-n},   L_0 v = h v,   L_n v = 0 for n > 0.

A module is built from the free (Verma) action on words L_{-p1}...L_{-pk} v,
indexed by integer partitions, by quotienting null directions of the invariant
inner product and orthonormalizing level by level.  Everything at or below a
cutoff level N is kept; the matrices ``lmat(n)`` are the compressions of L_n
to the truncation.  On vectors supported in levels <= N - |n| the compression
acts exactly as the infinite-dimensional operator, which is what makes the
truncated identities testable at tight tolerances.

Scalars may be ``fractions.Fraction`` (exact arithmetic, used by the oracle
tests) or floats; the reduction code is generic over both.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ArgumentError, NonUnitaryError, TruncationError

Partition = tuple[int, ...]
Scalar = "Fraction | float"

#: relative eigenvalue threshold below which a gram direction is quotiented
DEFAULT_NULLTOL = 1e-9


# ---------------------------------------------------------------------------
# partitions


@lru_cache(maxsize=None)
def partitions_of(k: int) -> tuple[Partition, ...]:
    """All partitions of ``k`` with parts in weakly decreasing order.

    The list itself is in reverse-lexicographic order, e.g. for k = 2 it is
    ((2,), (1, 1)); the empty partition () is the sole partition of 0.
    """
    if k < 0:
        raise ArgumentError("negative level has no partitions")
    if k == 0:
        return ((),)

    def gen(rem: int, maxpart: int):
        if rem == 0:
            yield ()
            return
        for part in range(min(rem, maxpart), 0, -1):
            for tail in gen(rem - part, part):
                yield (part,) + tail

    return tuple(gen(k, k))


def enumerate_basis(N: int) -> tuple[tuple[Partition, ...], ...]:
    """Partition labels for levels 0..N, each level in reverse-lex order."""
    if N < 0:
        raise ArgumentError("truncation level must be >= 0")
    return tuple(partitions_of(k) for k in range(N + 1))


# ---------------------------------------------------------------------------
# exact normal ordering


class VirasoroOracle:
    """Normal ordering of Virasoro words applied to a lowest-weight vector.

    States are stored as dicts {partition: coefficient} meaning
    sum_lambda coeff * L_{-lambda_1}...L_{-lambda_k} v.  All reductions use
    only the bracket, L_0 v = h v and L_n v = 0 (n > 0), so with Fraction
    inputs every coefficient is exact.
    """

    def __init__(self, c, h):
        self.c = c
        self.h = h
        self._zero = c * 0  # scalar zero in the working arithmetic
        self._apply_cache: dict[tuple[int, Partition], dict[Partition, object]] = {}
        self._pair_cache: dict[tuple[Partition, Partition], object] = {}

    # -- single-mode action

    def apply_mode(self, n: int, lam: Partition) -> dict[Partition, object]:
        """Coefficients of L_n L_{-lam} v in the partition basis."""
        key = (n, lam)
        cached = self._apply_cache.get(key)
        if cached is not None:
            return cached

        out: dict[Partition, object] = {}
        if not lam:
            if n < 0:
                out[(-n,)] = self._one()
            elif n == 0:
                if self.h != 0:
                    out[()] = self.h + self._zero
            # n > 0 annihilates v
        elif n < 0 and -n >= lam[0]:
            out[(-n,) + lam] = self._one()
        else:
            head, rest = lam[0], lam[1:]
            # L_n L_{-head} = L_{-head} L_n + (n + head) L_{n-head}
            #                (+ central term when n == head)
            for mu, a in self.apply_mode(n, rest).items():
                for nu, b in self.apply_mode(-head, mu).items():
                    _acc(out, nu, a * b)
            coeff = n + head
            if coeff != 0:
                for mu, a in self.apply_mode(n - head, rest).items():
                    _acc(out, mu, a * coeff)
            if n == head:
                central = (self.c * (n**3 - n)) / 12
                if central != 0:
                    for mu, a in self._as_state(rest).items():
                        _acc(out, mu, a * central)

        out = {p: v for p, v in out.items() if v != 0}
        self._apply_cache[key] = out
        return out

    def _one(self):
        return self._zero + 1

    @staticmethod
    def _as_state(lam: Partition) -> dict[Partition, object]:
        return {lam: 1}

    # -- words

    def reduce_word(self, word: list[int] | tuple[int, ...]) -> dict[Partition, object]:
        """Normal order L_{word[0]} L_{word[1]} ... L_{word[-1]} v."""
        state: dict[Partition, object] = {(): self._one()}
        for n in reversed(list(word)):
            nxt: dict[Partition, object] = {}
            for lam, a in state.items():
                for mu, b in self.apply_mode(n, lam).items():
                    _acc(nxt, mu, a * b)
            state = {p: v for p, v in nxt.items() if v != 0}
        return state

    # -- Shapovalov pairing

    def pairing(self, lam: Partition, mu: Partition):
        """<L_{-lam} v, L_{-mu} v> with <v, v> = 1."""
        if sum(lam) != sum(mu):
            return self._zero
        if not lam:
            return self._one() if not mu else self._zero
        key = (lam, mu)
        cached = self._pair_cache.get(key)
        if cached is not None:
            return cached
        # <L_{-a} L_{-rest} v, .> = <L_{-rest} v, L_a .>
        total = self._zero
        for nu, b in self.apply_mode(lam[0], mu).items():
            total = total + b * self.pairing(lam[1:], nu)
        self._pair_cache[key] = total
        self._pair_cache[(mu, lam)] = total  # the form is symmetric here
        return total

    def gram(self, k: int) -> list[list[object]]:
        basis = partitions_of(k)
        return [[self.pairing(lam, mu) for mu in basis] for lam in basis]


def _acc(d: dict, key, val) -> None:
    cur = d.get(key)
    d[key] = val if cur is None else cur + val


def normal_order_reduce(word, params: "ModuleParams") -> dict[Partition, object]:
    """Rewrite L_{word[0]}...L_{word[-1]} v as a combination of lowering words.

    Coefficients are exact rationals in (c, h) when the parameters are
    Fractions.  This is the brute-force oracle every matrix element is
    checked against.
    """
    return VirasoroOracle(params.c, params.h).reduce_word(word)


def gram_matrix(params: "ModuleParams", level: int) -> np.ndarray:
    """Shapovalov matrix at one level, in the partition basis.

    Exact (dtype=object with Fractions) when c and h are Fractions, float64
    otherwise.
    """
    if level > params.N:
        raise ArgumentError(f"level {level} exceeds cutoff N = {params.N}")
    c, h = params.c, params.h
    rows = VirasoroOracle(c, h).gram(level)
    exact = isinstance(c, Fraction) or isinstance(h, Fraction)
    if exact:
        arr = np.empty((len(rows), len(rows)), dtype=object)
        for i, row in enumerate(rows):
            for j, x in enumerate(row):
                arr[i, j] = x
        return arr
    return np.array(rows, dtype=float)


# ---------------------------------------------------------------------------
# module parameters and unitarity screening


@dataclass(frozen=True)
class ModuleParams:
    """Central charge, lowest weight and truncation level."""

    c: "float | Fraction"
    h: "float | Fraction"
    N: int

    def __post_init__(self):
        if self.N < 0:
            raise ArgumentError("truncation level N must be >= 0")
        if self.c < 0 or self.h < 0:
            raise NonUnitaryError(
                f"(c, h) = ({self.c}, {self.h}) lies outside the closed unitary region"
            )

    def as_floats(self) -> tuple[float, float]:
        return float(self.c), float(self.h)


def check_unitarity(params: ModuleParams, probe_level: int = 6,
                    tol: float = DEFAULT_NULLTOL) -> tuple[bool, str]:
    """Screen (c, h) for unitarity.

    c >= 1, h >= 0 is accepted outright.  Below c = 1 the verdict is
    empirical: the gram matrices up to ``probe_level`` (capped by N) must be
    positive semidefinite up to a relative tolerance.  This accepts the
    discrete-series points and rejects generic (c, h) with c < 1.
    """
    c, h = params.as_floats()
    if h < 0 or c < 0:
        return False, "negative c or h"
    if c >= 1:
        return True, "c >= 1 and h >= 0"
    depth = min(probe_level, params.N)
    for k in range(1, depth + 1):
        g = np.array(VirasoroOracle(c, h).gram(k), dtype=float)
        scaled, _ = _scale_unit_diagonal(g, tol)
        if scaled.size:
            w = np.linalg.eigvalsh(scaled)
            if w.min() < -tol * max(w.max(), 1.0):
                return False, f"gram not positive semidefinite at level {k}"
    return True, f"gram positive semidefinite through level {depth}"


def _scale_unit_diagonal(g: np.ndarray, nulltol: float):
    """Drop exactly-null rows (zero diagonal) and rescale to unit diagonal.

    Returns (scaled gram, (kept index array, scale factors)).  Scaling keeps
    the eigensolve well conditioned: raw Shapovalov entries legitimately
    spread over many orders of magnitude at high level (the cut must NOT be
    relative to the largest diagonal), while the normalized matrix stays
    tame.  A diagonal entry <L_{-lam} v, L_{-lam} v> vanishes only for an
    identically null vector, and then it vanishes exactly, in floats too,
    because every term in the reduction carries a factor that is exactly 0.
    """
    diag = np.diag(g).astype(float).copy()
    if diag.size == 0 or diag.max(initial=0.0) <= 0.0:
        return np.zeros((0, 0)), (np.array([], dtype=int), np.array([]))
    keep = np.flatnonzero(diag > 0.0)
    scale = 1.0 / np.sqrt(diag[keep])
    sub = g[np.ix_(keep, keep)]
    return sub * scale[:, None] * scale[None, :], (keep, scale)


# ---------------------------------------------------------------------------
# the built module


@dataclass
class ModuleData:
    """A built truncation: orthonormal graded basis plus compressed L_n.

    dims[k] is the surviving dimension at level k after the null quotient;
    ``lmat(n)`` is dense of shape (dim, dim), graded so that its only nonzero
    blocks map level k to level k - n.
    """

    params: ModuleParams
    dims: tuple[int, ...]
    basis: tuple[tuple[Partition, ...], ...]
    ortho: list[np.ndarray]
    gram: list[np.ndarray]
    lmax: int
    lmat_by_n: dict[int, np.ndarray]
    nulltol: float

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def dim(self) -> int:
        return int(sum(self.dims))

    @property
    def level_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)]).astype(int)

    def level_slice(self, k: int) -> slice:
        off = self.level_offsets
        return slice(off[k], off[k + 1])

    def level_index(self) -> np.ndarray:
        """Level of each coordinate, shape (dim,)."""
        return np.repeat(np.arange(self.N + 1), self.dims)

    def weights(self) -> np.ndarray:
        """L_0 eigenvalue h + k of each coordinate."""
        return float(self.params.h) + self.level_index().astype(float)

    def lmat(self, n: int) -> np.ndarray:
        if abs(n) > self.lmax:
            raise TruncationError(
                f"module built with lmax = {self.lmax}, no matrix for L_{n}"
            )
        return self.lmat_by_n[n]

    def protected_dim(self, budget: int) -> int:
        """Dimension of the span of levels <= N - budget."""
        top = self.N - budget
        if top < 0:
            return 0
        return int(self.level_offsets[top + 1])

    def protected_projector(self, budget: int) -> np.ndarray:
        p = self.protected_dim(budget)
        P = np.zeros((self.dim, self.dim))
        P[:p, :p] = np.eye(p)
        return P


def _to_longdouble(x) -> np.longdouble:
    """Exact-as-possible conversion of a gram scalar to 80-bit precision."""
    if isinstance(x, Fraction):
        return np.longdouble(x.numerator) / np.longdouble(x.denominator)
    return np.longdouble(x)


def build_module(params: ModuleParams, nulltol: float = DEFAULT_NULLTOL,
                 lmax: int | None = None) -> ModuleData:
    """Construct the truncated module at ``params``.

    Per level: assemble the Shapovalov matrix (exactly when (c, h) are
    Fractions), quotient directions with relative eigenvalue below
    ``nulltol``, and orthonormalize.  Raises NonUnitaryError on an eigenvalue
    that is negative beyond tolerance.  ``lmax`` bounds which L_n matrices are
    assembled (default: all |n| <= N); matrices for -n are the conjugate
    transposes of those for n, which is exact for the compression.

    Numerical note: the partition-monomial basis becomes severely
    ill-conditioned with level (normalized gram condition ~1e8 at level 12),
    and the contraction B^T G C B mixes entries spread over ~17 orders of
    magnitude.  Orthonormalization is therefore Newton-refined and the
    cancellation-heavy product G @ B evaluated in 80-bit arithmetic, keeping
    commutator residuals of the assembled matrices near float64 roundoff.
    At default nulltol, levels >= 13 may still quotient a few genuinely
    positive directions whose normalized eigenvalue sinks below the cut;
    pass a smaller nulltol to keep them.
    """
    N = params.N
    if lmax is None:
        lmax = N
    lmax = max(0, min(lmax, N))

    exact = isinstance(params.c, Fraction) and isinstance(params.h, Fraction)
    if exact:
        oracle = VirasoroOracle(params.c, params.h)
    else:
        oracle = VirasoroOracle(_to_longdouble(params.c), _to_longdouble(params.h))
    basis = enumerate_basis(N)

    grams: list[np.ndarray] = []
    ortho: list[np.ndarray] = []
    ortho_ld: list[np.ndarray] = []
    gram_ld: list[np.ndarray] = []
    dims: list[int] = []
    eye_cache = {}
    for k in range(N + 1):
        g_ld = np.array(
            [[_to_longdouble(x) for x in row] for row in oracle.gram(k)],
            dtype=np.longdouble,
        )
        g = g_ld.astype(float)
        grams.append(g)
        gram_ld.append(g_ld)
        scaled, (keep, scale) = _scale_unit_diagonal(g, nulltol)
        if scaled.size == 0:
            ortho.append(np.zeros((len(basis[k]), 0)))
            ortho_ld.append(np.zeros((len(basis[k]), 0), dtype=np.longdouble))
            dims.append(0)
            continue
        w, v = np.linalg.eigh(scaled)
        wmax = w.max()
        if w.min() < -max(nulltol, 1e3 * np.finfo(float).eps) * wmax:
            raise NonUnitaryError(
                f"negative gram eigenvalue {w.min():.3e} at level {k}",
                level=k, eigenvalue=float(w.min()),
            )
        retained = np.flatnonzero(w > nulltol * wmax)
        b_small = (v[:, retained] / np.sqrt(w[retained])) * scale[:, None]
        b = np.zeros((len(basis[k]), b_small.shape[1]), dtype=np.longdouble)
        b[keep] = b_small
        # Newton refinement of G-orthonormality in 80-bit:
        #   B <- B (3I - B^T G B) / 2
        d = b.shape[1]
        ident = eye_cache.setdefault(d, np.eye(d, dtype=np.longdouble))
        for _ in range(4):
            e = b.T @ (g_ld @ b) - ident
            if float(np.abs(e).max()) < 1e-17:
                break
            b = b @ (ident - 0.5 * e)
        ortho_ld.append(b)
        ortho.append(b.astype(float))
        dims.append(d)

    data = ModuleData(
        params=params, dims=tuple(dims), basis=basis, ortho=ortho,
        gram=grams, lmax=lmax, lmat_by_n={}, nulltol=nulltol,
    )

    dim = data.dim
    offsets = data.level_offsets
    weights = data.weights()

    data.lmat_by_n[0] = np.diag(weights).astype(complex)
    for n in range(1, lmax + 1):
        mat = np.zeros((dim, dim), dtype=complex)
        for k in range(n, N + 1):
            if dims[k] == 0 or dims[k - n] == 0:
                continue
            src, dst = basis[k], basis[k - n]
            dst_index = {lam: i for i, lam in enumerate(dst)}
            cmat = np.zeros((len(dst), len(src)), dtype=np.longdouble)
            for j, lam in enumerate(src):
                for mu, coeff in oracle.apply_mode(n, lam).items():
                    cmat[dst_index[mu], j] = _to_longdouble(coeff)
            # (G B)^T (C B): G @ B is where 17 orders of magnitude cancel
            gb = gram_ld[k - n] @ ortho_ld[k - n]
            block = (gb.T @ (cmat @ ortho_ld[k])).astype(float)
            mat[offsets[k - n]:offsets[k - n + 1], offsets[k]:offsets[k + 1]] = block
        data.lmat_by_n[n] = mat
        data.lmat_by_n[-n] = mat.conj().T
    return data


# ---------------------------------------------------------------------------
# graded vectors


@dataclass
class GradedVector:
    """Coefficients in the orthonormal graded basis of one module."""

    coeffs: np.ndarray
    module: ModuleData

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.module.dim,):
            raise ArgumentError(
                f"expected {self.module.dim} coefficients, got {self.coeffs.shape}"
            )

    def level_part(self, k: int) -> np.ndarray:
        return self.coeffs[self.module.level_slice(k)]

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def sobolev_norm(v, n: float, module: ModuleData) -> float:
    """|| (1 + L_0)^n v ||, i.e. sqrt(sum_k (1 + h + k)^{2n} ||v_k||^2)."""
    coeffs = v.coeffs if isinstance(v, GradedVector) else np.asarray(v)
    if coeffs.shape != (module.dim,):
        raise ArgumentError("vector does not match module dimension")
    factors = (1.0 + module.weights()) ** float(n)
    return float(np.linalg.norm(factors * coeffs))


def random_protected_vector(module: ModuleData, budget: int,
                            rng: np.random.Generator,
                            unit: bool = True) -> np.ndarray:
    """Random complex vector supported in levels <= N - budget."""
    p = module.protected_dim(budget)
    if p == 0:
        raise TruncationError("no protected levels left at this budget")
    v = np.zeros(module.dim, dtype=complex)
    v[:p] = rng.standard_normal(p) + 1j * rng.standard_normal(p)
    if unit:
        v /= np.linalg.norm(v)
    return v


# ---------------------------------------------------------------------------
# serialization


def module_to_dict(module: ModuleData) -> dict:
    """JSON-ready form: {"c","h","N","dims","lmat":{n: [[[re,im],...],...]}}."""
    c, h = module.params.as_floats()
    return {
        "c": c,
        "h": h,
        "N": module.N,
        "dims": list(module.dims),
        "lmat": {
            str(n): _complex_matrix_to_json(m)
            for n, m in sorted(module.lmat_by_n.items())
        },
    }


def module_from_dict(data: dict) -> ModuleData:
    params = ModuleParams(float(data["c"]), float(data["h"]), int(data["N"]))
    dims = tuple(int(d) for d in data["dims"])
    lmat = {int(n): _complex_matrix_from_json(m) for n, m in data["lmat"].items()}
    lmax = max((abs(n) for n in lmat), default=0)
    return ModuleData(
        params=params, dims=dims, basis=enumerate_basis(params.N),
        ortho=[], gram=[], lmax=lmax, lmat_by_n=lmat, nulltol=DEFAULT_NULLTOL,
    )


def _complex_matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _complex_matrix_from_json(rows: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])
