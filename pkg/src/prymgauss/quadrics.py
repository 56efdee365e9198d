"""The linear system cutting out the quadrics through the curve.

Quadrics through either rational component are the solutions of a linear
system in the C(g-1,2) unknowns s_ij (one per coordinate pair).  The
system rows come from a three-term recurrence in truncated power sums of
the node parameters; the same space is cut out by direct polynomial
expansion, which serves as the independent oracle.  A structured g x g
minor of the single-component block has a closed-form determinant
(Vandermonde times linear factors) that we verify exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .exactla import RAT, ExactMatrix, Rational, UniPoly
from .prymcurve import PrymCurveParams, component_polys, node_polynomial


class QuadricRankError(ArithmeticError):
    """The quadric system has unexpected rank (degenerate parameters)."""


def pair_columns(g: int) -> tuple[tuple[int, int], ...]:
    """Column order: pairs (i,j), 1 <= i < j <= g-1, lexicographic."""
    return tuple((i, j) for i in range(1, g) for j in range(i + 1, g))


def q_power_sum(h: int, x: Rational, y: Rational) -> Rational:
    """Truncated power sum: sum of x**m * y**(h-m) for m = 0..h.

    Returns 0 for h < 0 (the convention the three-term recurrence needs).
    """
    if h < 0:
        return RAT(0)
    x = RAT(x)
    y = RAT(y)
    xp = [RAT(1)]
    yp = [RAT(1)]
    for _ in range(h):
        xp.append(xp[-1] * x)
        yp.append(yp[-1] * y)
    return sum((xp[m] * yp[h - m] for m in range(h + 1)), start=RAT(0))


def tilde_q(r: int, k: int, i: int, j: int,
            params: PrymCurveParams) -> Rational:
    """Entry of the quadric system: the three-term combination of power sums
    weighted by the delta/c scalars of the pair (i,j) on component k."""
    g = params.g
    if not 0 <= r <= g - 1:
        raise ValueError(f"row index r={r} outside 0..{g - 1}")
    if not 1 <= i < j <= g - 1:
        raise ValueError(f"bad pair ({i},{j}) for genus {g}")
    ai, aj = params.a_of(k, i), params.a_of(k, j)
    di, dj = params.delta_of(i), params.delta_of(j)
    ci, cj = params.c_of(k, i), params.c_of(k, j)
    return (q_power_sum(r, ai, aj) * di * dj
            - q_power_sum(r - 1, ai, aj) * (di * cj + ci * dj)
            + q_power_sum(r - 2, ai, aj) * ci * cj)


def _tilde_q_rows(params: PrymCurveParams, k: int) -> list[list[Rational]]:
    """All g rows (r = 0..g-1) of the component-k block, one pass per pair.

    Uses the q-recurrence q_{h+1} = a_i*q_h + a_j**(h+1); entries agree
    with tilde_q() and are cheaper to produce in bulk.
    """
    g = params.g
    pairs = pair_columns(g)
    rows: list[list[Rational]] = [[RAT(0)] * len(pairs) for _ in range(g)]
    for col, (i, j) in enumerate(pairs):
        ai, aj = params.a_of(k, i), params.a_of(k, j)
        di, dj = params.delta_of(i), params.delta_of(j)
        ci, cj = params.c_of(k, i), params.c_of(k, j)
        dd = di * dj
        dc = di * cj + ci * dj
        cc = ci * cj
        q2, q1, q0 = RAT(0), RAT(0), RAT(1)
        ajp = RAT(1)
        for h in range(g):
            rows[h][col] = q0 * dd - q1 * dc + q2 * cc
            ajp *= aj
            q2, q1, q0 = q1, q0, ai * q0 + ajp
    return rows


def component_system(params: PrymCurveParams, k: int) -> ExactMatrix:
    """The g x C(g-1,2) block of rows for a single component."""
    return ExactMatrix(_tilde_q_rows(params, k))


@dataclass(frozen=True)
class QuadricSystem:
    """Stacked system (both components, 2g rows) plus its column order."""

    params: PrymCurveParams
    Z: ExactMatrix
    pairs: tuple[tuple[int, int], ...]

    def column_of(self, i: int, j: int) -> int:
        return self.pairs.index((i, j))


def build_Z(params: PrymCurveParams) -> QuadricSystem:
    """Both component blocks stacked: rows r = 0..g-1 for k = 1 then k = 2.

    All 2g rows are kept (two of the second block are dependent for valid
    parameters, which is a free consistency check on the expected rank
    2g-2).
    """
    rows = _tilde_q_rows(params, 1) + _tilde_q_rows(params, 2)
    return QuadricSystem(params=params, Z=ExactMatrix(rows),
                         pairs=pair_columns(params.g))


def expand_P(params: PrymCurveParams, k: int) -> ExactMatrix:
    """Coefficient rows of the quadric-restriction polynomial, by expansion.

    Row n holds, per pair (i,j), the t**n coefficient of
    M_k(t) * (delta_i*t - c_i) * (delta_j*t - c_j) / ((t - a_i)(t - a_j)).
    Entirely independent of the power-sum recurrence; the two rowspaces
    must agree.
    """
    g = params.g
    pairs = pair_columns(g)
    M = node_polynomial(params, k)
    rows: list[list[Rational]] = [[RAT(0)] * len(pairs) for _ in range(g)]
    one = RAT(1)
    for col, (i, j) in enumerate(pairs):
        numer = (M
                 * UniPoly([-params.c_of(k, i), params.delta_of(i)])
                 * UniPoly([-params.c_of(k, j), params.delta_of(j)]))
        poly = numer.exact_div(UniPoly([-params.a_of(k, i), one]))
        poly = poly.exact_div(UniPoly([-params.a_of(k, j), one]))
        for n, cf in enumerate(poly.coeffs):
            rows[n][col] = cf
    return ExactMatrix(rows)


@dataclass(frozen=True)
class QuadricBasis:
    """Exact basis of the space of quadrics through the full curve."""

    pairs: tuple[tuple[int, int], ...]
    vectors: tuple[tuple[Rational, ...], ...]

    def __len__(self):
        return len(self.vectors)

    def to_json_obj(self):
        return [{f"{i},{j}": f"{x.numerator}/{x.denominator}"
                 for (i, j), x in zip(self.pairs, v)} for v in self.vectors]


def i2_basis(params: PrymCurveParams, verify: bool = True) -> QuadricBasis:
    """Nullspace basis of the stacked system, dimension C(g-1,2) - (2g-2).

    With verify=True every basis vector is substituted back into the
    expansion rows of both components; a nonzero value aborts.
    """
    g = params.g
    system = build_Z(params)
    basis = system.Z.nullspace()
    rank = system.Z.cols - len(basis)
    if rank != 2 * g - 2:
        raise QuadricRankError(
            f"quadric system has rank {rank}, expected {2 * g - 2}: "
            "degenerate parameters")
    if verify:
        for k in (1, 2):
            P = expand_P(params, k)
            for v in basis:
                image = P.mul_vector(v)
                if any(image):
                    raise QuadricRankError(
                        f"basis vector does not annihilate component {k}")
    return QuadricBasis(pairs=system.pairs, vectors=tuple(basis))


# ---------------------------------------------------------------------------
# The structured g x g minor and its closed-form determinant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MtildeCheck:
    lhs: Rational  # determinant of the scaled minor
    rhs: Rational  # closed-form product
    match: bool    # |lhs| == |rhs| (the formula is stated up to sign)


def _mtilde_columns(g: int) -> list[tuple[int, int]]:
    half = g // 2
    cols = [(1, j) for j in range(2, g)]
    cols.append((2, half + 1))
    cols.append((g - 2, g - 1))
    return cols


def mtilde_det_check(params: PrymCurveParams, k: int) -> MtildeCheck:
    """Compare the structured minor's determinant with its product formula.

    The minor takes columns (1,2)..(1,g-1), (2,half+1), (g-2,g-1) of the
    component-k block and divides each column by its leading scalar
    (mu**2, -mu*c_j, or c_{g-2}c_{g-1}); the result must equal, up to
    sign, Vandermonde(a_3..a_{g-1}) times explicit linear factors.
    """
    g = params.g
    half = g // 2
    mu = params.mu

    def scaling(i: int, j: int) -> Rational:
        if i == 1 and j <= half:
            return mu * mu
        if i == 1 or (i, j) == (2, half + 1):
            return -mu * params.c_of(k, j)
        return params.c_of(k, g - 2) * params.c_of(k, g - 1)

    cols = _mtilde_columns(g)
    factors = []
    for (i, j) in cols:
        s = scaling(i, j)
        if s == 0:
            raise ZeroDivisionError(
                f"column scaling factor for pair ({i},{j}) is zero")
        factors.append(s)
    rows = [[tilde_q(h, k, i, j, params) / f
             for (i, j), f in zip(cols, factors)] for h in range(g)]
    lhs = ExactMatrix(rows).det_exact()

    a = [params.a_of(k, i) for i in range(1, g)]  # a[i-1] = a_{i,k}
    rhs = RAT(1)
    for u in range(3, g):            # Vandermonde on a_3..a_{g-1}
        for v in range(u + 1, g):
            rhs *= a[v - 1] - a[u - 1]
    for r in range(1, g):
        if r in (2, half + 1):
            continue
        rhs *= a[r - 1] - a[1]
    for s in range(3, half + 1):
        rhs *= a[s - 1]
    for j in range(1, g - 2):
        rhs *= a[j - 1]
    return MtildeCheck(lhs=lhs, rhs=rhs, match=abs(lhs) == abs(rhs))
