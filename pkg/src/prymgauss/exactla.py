"""Exact arithmetic kernel.

Arbitrary-precision rationals (``fractions.Fraction``), prime fields,
dense univariate polynomials and dense matrices with exact rank,
nullspace and determinant computations.

Rank certificates come in two independent flavours:

* modulo a prime -- fast numpy-backed Gaussian elimination over GF(p);
  the result is a lower bound for the rational rank, so hitting the
  maximal possible value certifies maximal rank over the rationals;
* over the rationals -- fraction-free (Bareiss) elimination, used as the
  final arbiter when modular certificates are inconclusive.

Everything here is immutable after construction and therefore safe to
share between concurrent workers; results do not depend on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence, Union

import numpy as np

try:  # gmpy2's C-implemented rationals are ~5x faster; Fraction is exact too
    from gmpy2 import mpq as RAT
except ImportError:  # pragma: no cover - slower but identical results
    RAT = Fraction

Rational = Union[int, Fraction]

DEFAULT_PRIME = 131
DEFAULT_PRIMES = (131, 137)

_MAX_MODULUS = 2**31 - 1  # products of two residues must fit in int64


class BadPrimeError(ArithmeticError):
    """A denominator vanishes modulo the chosen prime; retry with the next one."""


class DomainMismatchError(TypeError):
    """Operands live over different coefficient domains."""


class InexactDivisionError(ArithmeticError):
    """A division that is guaranteed exact left a remainder (internal bug)."""


class RankDisagreement(ArithmeticError):
    """Modular ranks differ between primes; never silently pick one."""

    def __init__(self, per_prime):
        self.per_prime = tuple(per_prime)
        super().__init__(f"modular ranks disagree: {self.per_prime}")


@lru_cache(maxsize=None)
def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_stream(start: int = DEFAULT_PRIME) -> Iterator[int]:
    """Primes >= start in increasing order."""
    n = max(2, start)
    while True:
        if is_prime(n):
            yield n
        n += 1


# ---------------------------------------------------------------------------
# Prime field elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrimeFieldElem:
    """An element of GF(p), residue reduced into [0, p)."""

    residue: int
    modulus: int = DEFAULT_PRIME

    def __post_init__(self):
        if not is_prime(self.modulus):
            raise ValueError(f"modulus {self.modulus} is not prime")
        object.__setattr__(self, "residue", self.residue % self.modulus)

    def _coerce(self, other) -> "PrimeFieldElem":
        if isinstance(other, PrimeFieldElem):
            if other.modulus != self.modulus:
                raise DomainMismatchError(
                    f"mixed moduli {self.modulus} and {other.modulus}")
            return other
        if isinstance(other, int):
            return PrimeFieldElem(other, self.modulus)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return PrimeFieldElem(self.residue + other.residue, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return PrimeFieldElem(self.residue - other.residue, self.modulus)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return PrimeFieldElem(self.residue * other.residue, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return PrimeFieldElem(-self.residue, self.modulus)

    def inverse(self) -> "PrimeFieldElem":
        if self.residue == 0:
            raise ZeroDivisionError(f"0 has no inverse mod {self.modulus}")
        return PrimeFieldElem(pow(self.residue, -1, self.modulus), self.modulus)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __bool__(self):
        return self.residue != 0

    def __eq__(self, other):
        if isinstance(other, PrimeFieldElem):
            return self.modulus == other.modulus and self.residue == other.residue
        if isinstance(other, int):
            return self.residue == other % self.modulus
        return NotImplemented

    def __hash__(self):
        return hash((self.residue, self.modulus))

    @classmethod
    def from_rational(cls, q: Rational, p: int) -> "PrimeFieldElem":
        q = RAT(q)
        if q.denominator % p == 0:
            raise BadPrimeError(f"prime {p} divides denominator of {q}")
        return cls(q.numerator * pow(q.denominator % p, -1, p), p)


# ---------------------------------------------------------------------------
# Dense univariate polynomials
# ---------------------------------------------------------------------------


class _MinusInfinity:
    """Degree of the zero polynomial; compares below every integer."""

    __slots__ = ()

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __repr__(self):
        return "-inf"


NEG_INF = _MinusInfinity()


class UniPoly:
    """Dense univariate polynomial; ``coeffs[i]`` is the coefficient of t**i.

    Canonical form: no trailing zero coefficients.  Coefficients live over
    one exact domain (Fraction/int, or PrimeFieldElem of a fixed modulus).
    """

    __slots__ = ("coeffs", "zero")

    def __init__(self, coeffs: Sequence = (), zero=None):
        cs = list(coeffs)
        if zero is None:
            zero = cs[0] * 0 if cs else RAT(0)
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)
        self.zero = zero

    # -- basic structure ----------------------------------------------------

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading_coefficient(self):
        return self.coeffs[-1] if self.coeffs else self.zero

    def _require_same_domain(self, other: "UniPoly"):
        a, b = self.zero, other.zero
        a_gf = isinstance(a, PrimeFieldElem)
        b_gf = isinstance(b, PrimeFieldElem)
        if a_gf != b_gf or (a_gf and a.modulus != b.modulus):
            raise DomainMismatchError("polynomials over different domains")

    @classmethod
    def from_roots(cls, roots: Sequence, one=None) -> "UniPoly":
        """Monic product of (t - r) over the given roots (repeats allowed)."""
        if one is None:
            one = RAT(1)
        p = cls([one])
        for r in roots:
            p = p * cls([-r, one])
        return p

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "UniPoly") -> "UniPoly":
        self._require_same_domain(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = out[i] + c
        return UniPoly(out, zero=self.zero)

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + (-other)

    def __neg__(self) -> "UniPoly":
        return UniPoly([-c for c in self.coeffs], zero=self.zero)

    def __mul__(self, other) -> "UniPoly":
        if not isinstance(other, UniPoly):
            return UniPoly([c * other for c in self.coeffs], zero=self.zero)
        self._require_same_domain(other)
        if self.is_zero or other.is_zero:
            return UniPoly([], zero=self.zero)
        out = [self.zero] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return UniPoly(out, zero=self.zero)

    def __rmul__(self, other) -> "UniPoly":
        return self * other

    def __call__(self, x):
        acc = self.zero
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "UniPoly":
        return UniPoly([i * c for i, c in enumerate(self.coeffs)][1:],
                       zero=self.zero)

    def div_rem(self, other: "UniPoly"):
        """Euclidean division over the coefficient field."""
        self._require_same_domain(other)
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        d = len(other.coeffs) - 1
        lead = other.coeffs[-1]
        if len(rem) <= d:
            return UniPoly([], zero=self.zero), UniPoly(rem, zero=self.zero)
        quot = [self.zero] * (len(rem) - d)
        for k in range(len(rem) - 1, d - 1, -1):
            c = rem[k]
            if not c:
                continue
            if isinstance(c, int) and isinstance(lead, int):
                q = Fraction(c, lead)  # never divide ints into a float
            else:
                q = c / lead
            quot[k - d] = q
            for j in range(d + 1):
                rem[k - d + j] = rem[k - d + j] - q * other.coeffs[j]
        return UniPoly(quot, zero=self.zero), UniPoly(rem, zero=self.zero)

    def exact_div(self, other: "UniPoly") -> "UniPoly":
        """Division known to be exact; a remainder aborts loudly."""
        q, r = self.div_rem(other)
        if not r.is_zero:
            raise InexactDivisionError(
                f"division left remainder of degree {r.degree}")
        return q

    def __eq__(self, other):
        if not isinstance(other, UniPoly):
            return NotImplemented
        if len(self.coeffs) != len(other.coeffs):
            return False
        return all(a == b for a, b in zip(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"UniPoly(deg={self.degree}, coeffs={self.coeffs!r})"


def poly_mul(p: UniPoly, q: UniPoly) -> UniPoly:
    """Product of two polynomials over the same coefficient domain."""
    return p * q


def poly_derivative(p: UniPoly) -> UniPoly:
    """Formal derivative."""
    return p.derivative()


# ---------------------------------------------------------------------------
# Dense exact matrices
# ---------------------------------------------------------------------------


class ExactMatrix:
    """Immutable dense matrix over Fraction or PrimeFieldElem entries."""

    __slots__ = ("rows", "cols", "entries", "modulus")

    def __init__(self, rows):
        data = [list(r) for r in rows]
        nrows = len(data)
        ncols = len(data[0]) if data else 0
        modulus = None
        out = []
        for r in data:
            if len(r) != ncols:
                raise ValueError("ragged rows")
            row = []
            for e in r:
                if isinstance(e, PrimeFieldElem):
                    if modulus is None:
                        modulus = e.modulus
                    elif e.modulus != modulus:
                        raise DomainMismatchError("mixed moduli in matrix")
                    row.append(e)
                else:
                    row.append(RAT(e))
            out.append(tuple(row))
        if modulus is not None and any(
                not isinstance(e, PrimeFieldElem) for row in out for e in row):
            raise DomainMismatchError("mixed rational and prime-field entries")
        self.rows = nrows
        self.cols = ncols
        self.entries = tuple(out)
        self.modulus = modulus

    # -- construction helpers -----------------------------------------------

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "ExactMatrix":
        return cls([[RAT(0)] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls([[RAT(int(i == j)) for j in range(n)] for i in range(n)])

    @classmethod
    def vstack(cls, mats: Sequence["ExactMatrix"]) -> "ExactMatrix":
        mats = list(mats)
        cols = {m.cols for m in mats}
        if len(cols) > 1:
            raise ValueError(f"column counts differ: {sorted(cols)}")
        rows = []
        for m in mats:
            rows.extend(m.entries)
        return cls(rows)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def entry(self, i: int, j: int):
        return self.entries[i][j]

    def mul_vector(self, v: Sequence[Rational]):
        if len(v) != self.cols:
            raise ValueError("vector length mismatch")
        return tuple(sum((e * x for e, x in zip(row, v)),
                         start=RAT(0)) for row in self.entries)

    # -- modular reduction and rank ------------------------------------------

    def _reduce_mod(self, p: int) -> np.ndarray:
        if self.modulus is not None:
            raise DomainMismatchError("matrix already lives over a prime field")
        inv_cache: dict[int, int] = {}
        arr = np.empty((self.rows, self.cols), dtype=np.int64)
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                den = int(e.denominator % p)
                if den == 0:
                    raise BadPrimeError(
                        f"prime {p} divides denominator of entry ({i},{j})")
                inv = inv_cache.get(den)
                if inv is None:
                    inv = pow(den, -1, p)
                    inv_cache[den] = inv
                arr[i, j] = int(e.numerator % p) * inv % p
        return arr

    def rank_mod_p(self, p: int) -> int:
        """Rank of the reduction mod p (a lower bound for the rational rank)."""
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        if p > _MAX_MODULUS:
            raise ValueError(f"prime {p} too large for int64 elimination")
        return _gf_rank(self._reduce_mod(p), p)

    def rank_exact(self) -> int:
        """Rank over the rationals via fraction-free (Bareiss) elimination."""
        if self.modulus is not None:
            return _gf_rank(self._residue_array(), self.modulus)
        return _bareiss_rank(self._integer_rows(strip_content=True))

    def rank(self) -> int:
        if self.modulus is not None:
            return _gf_rank(self._residue_array(), self.modulus)
        return self.rank_exact()

    def _residue_array(self) -> np.ndarray:
        arr = np.empty((self.rows, self.cols), dtype=np.int64)
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                arr[i, j] = e.residue
        return arr

    def _integer_rows(self, strip_content: bool = False) -> list[list[int]]:
        out = []
        for row in self.entries:
            scale = math.lcm(*(e.denominator for e in row)) if row else 1
            ints = [int(e * scale) for e in row]
            if strip_content:
                g = math.gcd(*ints) if ints else 0
                if g > 1:
                    ints = [x // g for x in ints]
            out.append(ints)
        return out

    # -- exact kernels --------------------------------------------------------

    def nullspace(self):
        """Basis of the right kernel.

        Rational matrices return Fraction vectors scaled so the first
        nonzero coordinate is 1; m.mul_vector(v) == 0 exactly for each.
        """
        if self.modulus is not None:
            return self._gf_nullspace()
        rref, pivots = _fraction_rref([list(r) for r in self.entries])
        return _kernel_from_rref(rref, pivots, self.cols, RAT(0), RAT(1))

    def _gf_nullspace(self):
        p = self.modulus
        arr, pivots = _gf_rref(self._residue_array(), p)
        one = PrimeFieldElem(1, p)
        zero = PrimeFieldElem(0, p)
        rows = [[PrimeFieldElem(int(x), p) for x in r] for r in arr]
        return _kernel_from_rref(rows, pivots, self.cols, zero, one)

    def det_exact(self) -> Fraction:
        """Exact determinant (square, rational entries)."""
        if self.modulus is not None:
            raise DomainMismatchError("det_exact requires rational entries")
        if self.rows != self.cols:
            raise ValueError(f"matrix is {self.rows}x{self.cols}, not square")
        if self.rows == 0:
            return RAT(1)
        scale = RAT(1)
        int_rows = []
        for row in self.entries:
            s = math.lcm(*(e.denominator for e in row))
            scale *= s
            int_rows.append([int(e * s) for e in row])
        return RAT(_bareiss_det(int_rows), 1) / scale

    # -- serialization --------------------------------------------------------

    def dump_csv(self, path):
        """Write the matrix as CSV of "num/den" fractions; header "rows,cols"."""
        if self.modulus is not None:
            raise DomainMismatchError("CSV format is for rational matrices")
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"{self.rows},{self.cols}\n")
            for row in self.entries:
                fh.write(",".join(f"{e.numerator}/{e.denominator}" for e in row))
                fh.write("\n")

    @classmethod
    def load_csv(cls, path) -> "ExactMatrix":
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            nrows, ncols = (int(x) for x in header.split(","))
            rows = []
            for _ in range(nrows):
                parts = fh.readline().strip().split(",")
                if len(parts) != ncols:
                    raise ValueError("CSV row width does not match header")
                rows.append([RAT(p) for p in parts])
        m = cls(rows) if rows else cls.zeros(0, ncols)
        if m.shape != (nrows, ncols):
            raise ValueError("CSV shape does not match header")
        return m

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return (self.shape == other.shape and self.modulus == other.modulus
                and self.entries == other.entries)

    def __hash__(self):
        return hash((self.shape, self.entries))

    def __repr__(self):
        dom = "QQ" if self.modulus is None else f"GF({self.modulus})"
        return f"ExactMatrix({self.rows}x{self.cols} over {dom})"


# ---------------------------------------------------------------------------
# Elimination engines
# ---------------------------------------------------------------------------


def _gf_rank(arr: np.ndarray, p: int) -> int:
    """Row echelon rank over GF(p); vectorized elimination below each pivot."""
    a = arr % p
    nrows, ncols = a.shape
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nonzero = np.nonzero(a[r:, c])[0]
        if nonzero.size == 0:
            continue
        i = r + int(nonzero[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        inv = pow(int(a[r, c]), -1, p)
        a[r, c:] = (a[r, c:] * inv) % p
        col = a[r + 1:, c]
        nz = np.nonzero(col)[0]
        if nz.size:
            a[r + 1 + nz, c:] = (a[r + 1 + nz, c:]
                                 - np.outer(col[nz], a[r, c:])) % p
        r += 1
    return r


def _gf_rref(arr: np.ndarray, p: int):
    """Reduced row echelon form over GF(p); returns (rref, pivot columns)."""
    a = arr % p
    nrows, ncols = a.shape
    r = 0
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        nonzero = np.nonzero(a[r:, c])[0]
        if nonzero.size == 0:
            continue
        i = r + int(nonzero[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        inv = pow(int(a[r, c]), -1, p)
        a[r, c:] = (a[r, c:] * inv) % p
        col = a[:, c].copy()
        col[r] = 0
        nz = np.nonzero(col)[0]
        if nz.size:
            a[nz, c:] = (a[nz, c:] - np.outer(col[nz], a[r, c:])) % p
        pivots.append(c)
        r += 1
    return a, pivots


def _fraction_rref(rows: list[list[Fraction]]):
    """Gauss-Jordan over the rationals; returns (rref rows, pivot columns)."""
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    r = 0
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [e * inv for e in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [e - f * q for e, q in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return rows, pivots


def _kernel_from_rref(rref, pivots, ncols, zero, one):
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for r, c in enumerate(pivots):
            v[c] = -rref[r][f]
        lead = next(x for x in v if x)
        if lead != one:
            inv = one / lead
            v = [x * inv for x in v]
        basis.append(tuple(v))
    return basis


def _bareiss_rank(rows: list[list[int]]) -> int:
    """Fraction-free elimination rank of an integer matrix."""
    m = [list(r) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    prev = 1
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if m[i][c]), None)
        if piv is None:
            continue
        if piv != r:
            m[r], m[piv] = m[piv], m[r]
        pv = m[r][c]
        for i in range(r + 1, nrows):
            fi = m[i][c]
            mi, mr = m[i], m[r]
            for j in range(c + 1, ncols):
                mi[j] = (pv * mi[j] - fi * mr[j]) // prev
            mi[c] = 0
        prev = pv
        r += 1
    return r


def _bareiss_det(rows: list[list[int]]) -> int:
    """Exact determinant of a square integer matrix (Bareiss)."""
    m = [list(r) for r in rows]
    n = len(m)
    prev = 1
    sign = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            sign = -sign
        pv = m[c][c]
        for i in range(c + 1, n):
            fi = m[i][c]
            mi, mc = m[i], m[c]
            for j in range(c + 1, n):
                mi[j] = (pv * mi[j] - fi * mc[j]) // prev
            mi[c] = 0
        prev = pv
    return sign * m[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Certified ranks across several primes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankCertificate:
    rank: int
    primes: tuple[int, ...]


def modular_ranks(m: ExactMatrix, primes: Sequence[int],
                  replace_bad: bool = True):
    """Rank of m modulo each prime; bad primes are swapped for larger ones.

    Returns a tuple of (prime, rank) pairs, one per requested prime.
    """
    primes = list(primes)
    out = []
    used = set()
    fallback = prime_stream(max(primes) + 1 if primes else DEFAULT_PRIME)
    for p in primes:
        while True:
            if p in used:
                p = next(fallback)
                continue
            try:
                rank = m.rank_mod_p(p)
            except BadPrimeError:
                if not replace_bad:
                    raise
                p = next(fallback)
                continue
            out.append((p, rank))
            used.add(p)
            break
    return tuple(out)


def certified_rank(m: ExactMatrix,
                   primes: Sequence[int] = DEFAULT_PRIMES) -> RankCertificate:
    """Modular rank agreeing across all primes; raises RankDisagreement else."""
    pairs = modular_ranks(m, primes)
    ranks = {rank for _, rank in pairs}
    if len(ranks) != 1:
        raise RankDisagreement(pairs)
    return RankCertificate(ranks.pop(), tuple(p for p, _ in pairs))
