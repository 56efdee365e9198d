"""Prym-canonical binary curve data.

A genus-g binary curve is a pair of rational curves glued at g+1 nodes.
Each component is parametrized into projective (g-2)-space by g-1
coordinate polynomials of degree g-1; the whole datum is determined by
the two rows of node parameters a[j][i].  Derived scalars place the two
extra nodes at prescribed coordinate points and force the twisting line
bundle to be 2-torsion, which we verify through residue ratios.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from typing import Sequence

from .exactla import RAT, Rational, UniPoly


class InvalidParamsError(ValueError):
    """Parameter rows violate the distinct/nonzero preconditions."""


@dataclass(frozen=True)
class PrymCurveParams:
    """Full datum of a Prym-canonical binary curve of genus g.

    ``a[j-1][i-1]`` is the node parameter of node i on component j
    (i = 1..g-1, j = 1,2).  Within each row entries are nonzero and
    pairwise distinct; the two rows may overlap freely.  All other
    fields are derived from ``a`` and the scalars mu, d2.
    """

    g: int
    a: tuple[tuple[Rational, ...], tuple[Rational, ...]]
    mu: Rational
    d1: Rational
    d2: Rational
    delta: tuple[Rational, ...]
    c: tuple[tuple[Rational, ...], tuple[Rational, ...]]
    svec: tuple[int, ...]
    tvec: tuple[int, ...]
    A1: Rational
    A2: Rational

    # 1-based accessors mirroring the double-index notation a_{i,j}

    def a_of(self, j: int, i: int) -> Rational:
        return self.a[j - 1][i - 1]

    def c_of(self, j: int, i: int) -> Rational:
        return self.c[j - 1][i - 1]

    def delta_of(self, i: int) -> Rational:
        return self.delta[i - 1]

    @property
    def half(self) -> int:
        return self.g // 2

    @property
    def num_pairs(self) -> int:
        n = self.g - 1
        return n * (n - 1) // 2

    def digest(self) -> str:
        return hashlib.sha256(to_json(self).encode("ascii")).hexdigest()[:16]


@dataclass(frozen=True)
class TorsionCharacter:
    """Gluing signs of the 2-torsion bundle at the g+1 nodes."""

    h: tuple[int, ...]

    def __post_init__(self):
        if any(x not in (1, -1) for x in self.h):
            raise ValueError("character entries must be +-1")
        if self.h[-1] != 1:
            raise ValueError("character not normalized: last entry must be +1")


def build_params(g: int, a_rows: Sequence[Sequence[Rational]],
                 mu: Rational = 1, d2: Rational = 1) -> PrymCurveParams:
    """Assemble curve parameters from the two rows of node values.

    Node coordinates follow the standard choice: the first half of the
    nodes carries the 1-pattern of svec, the complementary pattern tvec
    places the node at t=0; d1 = -d2*A1/A2 makes the bundle 2-torsion.
    """
    if g < 6:
        raise InvalidParamsError(f"genus {g} < 6")
    if len(a_rows) != 2 or any(len(r) != g - 1 for r in a_rows):
        raise InvalidParamsError(f"need 2 rows of {g - 1} values")
    a = tuple(tuple(RAT(x) for x in row) for row in a_rows)
    for j, row in enumerate(a, start=1):
        for i, x in enumerate(row, start=1):
            if x == 0:
                raise InvalidParamsError(f"a[{j}][{i}] is zero")
        seen: dict = {}
        for i, x in enumerate(row, start=1):
            if x in seen:
                raise InvalidParamsError(
                    f"a[{j}][{i}] repeats a[{j}][{seen[x]}] = {x}")
            seen[x] = i
    mu = RAT(mu)
    d2 = RAT(d2)
    if mu == 0 or d2 == 0:
        raise InvalidParamsError("mu and d2 must be nonzero")
    half = g // 2
    svec = tuple(1 if i <= half else 0 for i in range(1, g))
    tvec = tuple(0 if i <= half else 1 for i in range(1, g))
    A1 = RAT(1)
    for x in a[0]:
        A1 *= x
    A2 = RAT(1)
    for x in a[1]:
        A2 *= x
    d1 = -d2 * A1 / A2
    delta = tuple(mu * s for s in svec)
    dj = (d1, d2)
    c = tuple(
        tuple(dj[j] * tvec[i] * a[j][i] / (A1 if j == 0 else A2)
              for i in range(g - 1))
        for j in range(2))
    return PrymCurveParams(g=g, a=a, mu=mu, d1=d1, d2=d2, delta=delta, c=c,
                           svec=svec, tvec=tvec, A1=A1, A2=A2)


def scelta_params(g: int, a: Rational) -> PrymCurveParams:
    """The structured parameter choice used for the induction certificates.

    Row 1 is (a, 2a, ..., (g-1)a); row 2 is (1, 3, 4, ..., g).
    """
    a = RAT(a)
    if a in (0, 1):
        raise InvalidParamsError("scelta parameter a must avoid 0 and 1")
    row1 = [i * a for i in range(1, g)]
    row2 = [RAT(1)] + [RAT(r + 1) for r in range(2, g)]
    return build_params(g, [row1, row2])


def random_params(g: int, seed: int) -> PrymCurveParams:
    """Seeded generic parameters: distinct integers from [1, 10g] per row."""
    rng = random.Random(seed)
    row1 = rng.sample(range(1, 10 * g + 1), g - 1)
    row2 = rng.sample(range(1, 10 * g + 1), g - 1)
    return build_params(g, [row1, row2])


def node_polynomial(params: PrymCurveParams, j: int) -> UniPoly:
    """Monic degree-(g-1) polynomial with the component-j node parameters
    as roots."""
    return UniPoly.from_roots(params.a[j - 1])


def component_polys(params: PrymCurveParams, j: int) -> list[UniPoly]:
    """Coordinate polynomials of component j, each of degree g-1.

    The i-th polynomial is M_j(t) * (delta_i*t - c_{i,j}) / (t - a_{i,j});
    the division is exact by construction and any remainder aborts.
    """
    M = node_polynomial(params, j)
    out = []
    for i in range(1, params.g):
        numer = M * UniPoly([-params.c_of(j, i), params.delta_of(i)])
        out.append(numer.exact_div(UniPoly([-params.a_of(j, i), RAT(1)])))
    return out


def torsion_character(params: PrymCurveParams) -> TorsionCharacter:
    """Gluing signs computed from residue ratios at the g+1 nodes.

    Every ratio must be +-1, otherwise the bundle is not 2-torsion and we
    refuse to continue.
    """
    g = params.g
    ratios: list = []
    for i in range(1, g):
        num = params.delta_of(i) - params.c_of(1, i) / params.a_of(1, i)
        den = params.delta_of(i) - params.c_of(2, i) / params.a_of(2, i)
        if den == 0:
            raise InvalidParamsError(f"undefined residue ratio at node {i}")
        ratios.append(num / den)
    num = params.c_of(1, g - 1) / params.a_of(1, g - 1)
    den = params.c_of(2, g - 1) / params.a_of(2, g - 1)
    if den == 0:
        raise InvalidParamsError(f"undefined residue ratio at node {g}")
    ratios.append(num / den)
    if params.delta[0] == 0:
        raise InvalidParamsError(f"undefined residue ratio at node {g + 1}")
    ratios.append(params.delta[0] / params.delta[0])
    last = ratios[-1]
    ratios = [r / last for r in ratios]
    if any(r not in (1, -1) for r in ratios):
        raise InvalidParamsError(f"not 2-torsion: character {ratios}")
    return TorsionCharacter(tuple(int(r) for r in ratios))


# ---------------------------------------------------------------------------
# Serialization: only g and the a-rows travel; derived fields are recomputed
# ---------------------------------------------------------------------------


def _frac_str(x) -> str:
    return f"{x.numerator}/{x.denominator}"


def to_json(params: PrymCurveParams) -> str:
    doc = {"g": params.g,
           "a": [[_frac_str(x) for x in row] for row in params.a]}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> PrymCurveParams:
    doc = json.loads(text)
    return build_params(int(doc["g"]),
                        [[RAT(x) for x in row] for row in doc["a"]])


# Published node-parameter rows for the genus-20 reference computation.
G20_ROW1 = (25, 35, 54, 47, 67, 97, 73, 81, 22, 33,
            76, 27, 38, 44, 58, 69, 63, 80, 99)
G20_ROW2 = (1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20)


def g20_reference_params() -> PrymCurveParams:
    """The fixed genus-20 parameter set behind the published rank triple."""
    return build_params(20, [G20_ROW1, G20_ROW2])
