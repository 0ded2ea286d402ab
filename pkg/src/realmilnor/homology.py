"""Handle decompositions, relative homology from Morse data, and an exact
integer homology engine (Smith normal form over Z) for chain complexes.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

__all__ = [
    "HandleDecomposition",
    "HomologyReport",
    "ChainComplex",
    "IllFormedComplexError",
    "handle_decomposition",
    "relative_homology",
    "euler_rel",
    "smith_normal_form",
    "chain_homology",
]


# ---------------------------------------------------------------------------
# Morse side


@dataclass(frozen=True)
class HandleDecomposition:
    indices: tuple[int, ...]
    provenance: tuple[tuple[tuple[float, ...], float], ...] = ()

    @property
    def m(self) -> int:
        return len(self.indices)

    def describe(self) -> str:
        """Attached cells in the form ``Phi ~ dPhi u D^1 u D^2``."""
        cells = "".join(f" ∪ D^{k}" for k in sorted(self.indices))
        return f"Φ ∼ ∂Φ{cells}"

    def to_dict(self) -> dict:
        return {
            "indices": sorted(self.indices),
            "m": self.m,
            "cells": self.describe(),
            "points": [{"location": list(loc), "value": val} for loc, val in self.provenance],
        }


@dataclass(frozen=True)
class HomologyReport:
    ranks: dict[int, int]
    torsion: tuple[tuple[int, tuple[int, ...]], ...] = ()
    euler_rel: int = 0
    caveats: tuple[str, ...] = ()
    extrapolated_degrees: tuple[int, ...] = ()

    def rank(self, k: int) -> int:
        return self.ranks.get(k, 0)

    def torsion_free(self) -> bool:
        return not self.torsion

    def group(self, k: int) -> str:
        """Human-readable H_k, e.g. ``Z^2 + Z/2``."""
        parts = []
        r = self.rank(k)
        if r == 1:
            parts.append("Z")
        elif r > 1:
            parts.append(f"Z^{r}")
        for deg, factors in self.torsion:
            if deg == k:
                parts.extend(f"Z/{q}" for q in factors)
        return " + ".join(parts) if parts else "0"

    def to_dict(self) -> dict:
        return {
            "ranks": {str(k): v for k, v in sorted(self.ranks.items()) if v},
            "torsion": {str(k): list(q) for k, q in self.torsion},
            "euler_rel": self.euler_rel,
            "caveats": list(self.caveats),
            "extrapolated_degrees": list(self.extrapolated_degrees),
        }


def handle_decomposition(points) -> HandleDecomposition:
    """One handle per interior critical point, of dimension its Morse index."""
    indices = []
    prov = []
    for p in points:
        if p.morse_index is None:
            raise ValueError(f"degenerate critical point at {p.location} has no Morse index")
        indices.append(int(p.morse_index))
        prov.append((tuple(p.location), float(p.value)))
    return HandleDecomposition(tuple(indices), tuple(prov))


def euler_rel(h: HandleDecomposition | Iterable[int]) -> int:
    indices = h.indices if isinstance(h, HandleDecomposition) else tuple(h)
    return sum((-1) ** k for k in indices)


def relative_homology(h: HandleDecomposition, caveats: Sequence[str] = ()) -> HomologyReport:
    """Ranks of H_*(Phi, dPhi; Z) read off a handle decomposition.

    H_k has rank #{i : index_i = k}.  Index-0 handles fall outside the
    statement this rests on; they are still counted in degree 0 but flagged.
    """
    counts = Counter(h.indices)
    caveats = list(caveats)
    extrapolated = ()
    if counts.get(0):
        caveats.append("index_zero_handle")
        extrapolated = (0,)
    ranks = {k: c for k, c in sorted(counts.items()) if c}
    return HomologyReport(
        ranks=ranks,
        torsion=(),
        euler_rel=euler_rel(h),
        caveats=tuple(dict.fromkeys(caveats)),
        extrapolated_degrees=extrapolated,
    )


# ---------------------------------------------------------------------------
# Smith normal form


def _identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def smith_normal_form(A):
    """Return ``(U, D, V)`` with ``U A V = D``, ``U`` and ``V`` unimodular and
    ``D`` diagonal with ``D[i][i] | D[i+1][i+1]``.  Exact integer arithmetic.
    """
    D = [[int(x) for x in row] for row in A]
    m = len(D)
    n = len(D[0]) if m else 0
    U = _identity(m)
    V = _identity(n)

    def swap_rows(i, j):
        D[i], D[j] = D[j], D[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in D:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst += q * row_src
        if q:
            D[dst] = [a + q * b for a, b in zip(D[dst], D[src])]
            U[dst] = [a + q * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, q):  # col_dst += q * col_src
        if q:
            for row in D:
                row[dst] += q * row[src]
            for row in V:
                row[dst] += q * row[src]

    for t in range(min(m, n)):
        # pivot: smallest nonzero magnitude in the trailing block
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if D[i][j] and (best is None or abs(D[i][j]) < abs(D[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        swap_rows(t, best[0])
        swap_cols(t, best[1])
        while True:
            done = True
            for i in range(t + 1, m):
                if D[i][t]:
                    add_row(i, t, -(D[i][t] // D[t][t]))
                    if D[i][t]:
                        done = False
            for j in range(t + 1, n):
                if D[t][j]:
                    add_col(j, t, -(D[t][j] // D[t][t]))
                    if D[t][j]:
                        done = False
            if done:
                bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                            if D[i][j] % D[t][t]), None)
                if bad is None:
                    break
                add_row(t, bad[0], 1)
                continue
            # a remainder survived: move the smallest entry of row/column t to the pivot
            cand = [(abs(D[i][t]), i, t) for i in range(t, m) if D[i][t]]
            cand += [(abs(D[t][j]), t, j) for j in range(t, n) if D[t][j]]
            _, i, j = min(cand)
            swap_rows(t, i)
            swap_cols(t, j)
        if D[t][t] < 0:
            D[t] = [-a for a in D[t]]
            U[t] = [-a for a in U[t]]
    return U, D, V


def _diagonal(D):
    return [D[i][i] for i in range(min(len(D), len(D[0]) if D else 0))]


# ---------------------------------------------------------------------------
# chain complexes


class IllFormedComplexError(ValueError):
    pass


@dataclass
class ChainComplex:
    """Free chain complex over Z.

    ``dims[k]`` is the rank of C_k and ``boundaries[k]`` the matrix of
    ``d_k: C_k -> C_{k-1}`` stored sparsely as ``{column: {row: coeff}}``.
    Missing degrees mean zero maps.
    """

    dims: list[int]
    boundaries: dict[int, dict[int, dict[int, int]]] = field(default_factory=dict)

    @classmethod
    def from_dense(cls, matrices: Mapping[int, Sequence[Sequence[int]]], dims: Sequence[int] | None = None):
        """Build from dense ``d_k`` matrices (rows index C_{k-1})."""
        if dims is None:
            top = max(matrices, default=0)
            dims = [0] * (top + 1)
            for k, M in matrices.items():
                rows = len(M)
                cols = len(M[0]) if rows else 0
                dims[k] = max(dims[k], cols)
                dims[k - 1] = max(dims[k - 1], rows)
        sparse = {}
        for k, M in matrices.items():
            cols: dict[int, dict[int, int]] = {}
            for i, row in enumerate(M):
                for j, v in enumerate(row):
                    if v:
                        cols.setdefault(j, {})[i] = int(v)
            sparse[k] = cols
        return cls(list(dims), sparse)

    def dense(self, k: int) -> list[list[int]]:
        rows = self.dims[k - 1] if k - 1 >= 0 else 0
        cols = self.dims[k] if k < len(self.dims) else 0
        M = [[0] * cols for _ in range(rows)]
        for j, col in self.boundaries.get(k, {}).items():
            for i, v in col.items():
                M[i][j] = v
        return M

    def validate(self) -> None:
        top = len(self.dims) - 1
        for k, cols in self.boundaries.items():
            if k < 1 or k > top:
                if any(cols.values()):
                    raise IllFormedComplexError(f"boundary map in degree {k} outside 1..{top}")
                continue
            for j, col in cols.items():
                if not 0 <= j < self.dims[k]:
                    raise IllFormedComplexError(f"column {j} out of range in d_{k}")
                for i in col:
                    if not 0 <= i < self.dims[k - 1]:
                        raise IllFormedComplexError(f"row {i} out of range in d_{k}")
        for k in range(2, top + 1):
            lower = self.boundaries.get(k - 1, {})
            for j, col in self.boundaries.get(k, {}).items():
                acc: dict[int, int] = {}
                for i, v in col.items():
                    for r, w in lower.get(i, {}).items():
                        acc[r] = acc.get(r, 0) + v * w
                if any(acc.values()):
                    raise IllFormedComplexError(f"d_{k - 1} d_{k} != 0 on generator {j} of degree {k}")


class _Reducer:
    """Homology-preserving elimination of pairs (tau, sigma) with a unit
    incidence coefficient, followed by SNF on whatever survives."""

    def __init__(self, cx: ChainComplex):
        self.top = len(cx.dims) - 1
        self.alive = [set(range(d)) for d in cx.dims]
        # bd[k][tau] = {sigma: c} for tau in C_k; cob[k][sigma] = {tau: c} for sigma in C_k, tau in C_{k+1}
        self.bd = [dict() for _ in cx.dims]
        self.cob = [dict() for _ in cx.dims]
        for k in range(len(cx.dims)):
            for tau in range(cx.dims[k]):
                self.bd[k][tau] = {}
                self.cob[k][tau] = {}
        for k, cols in cx.boundaries.items():
            if not 1 <= k <= self.top:
                continue
            for tau, col in cols.items():
                for sigma, c in col.items():
                    if c:
                        self.bd[k][tau][sigma] = c
                        self.cob[k - 1][sigma][tau] = c

    def _eliminate(self, k: int, tau, sigma) -> None:
        """Remove tau in C_k and sigma in C_{k-1} where d tau has unit coefficient on sigma."""
        bd, cob = self.bd, self.cob
        c = bd[k][tau][sigma]
        btau = dict(bd[k][tau])
        for other, c2 in list(cob[k - 1][sigma].items()):
            if other == tau:
                continue
            mu = c2 * c  # c2 / c, since c = +-1
            col = bd[k][other]
            for s, v in btau.items():
                nv = col.get(s, 0) - mu * v
                if nv:
                    col[s] = nv
                    cob[k - 1][s][other] = nv
                else:
                    col.pop(s, None)
                    cob[k - 1][s].pop(other, None)
        for rho in list(cob[k][tau]):
            bd[k + 1][rho].pop(tau, None)
        for s in bd[k][tau]:
            cob[k - 1][s].pop(tau, None)
        for nu in bd[k - 1][sigma]:
            cob[k - 2][nu].pop(sigma, None)
        del bd[k][tau], cob[k][tau], bd[k - 1][sigma], cob[k - 1][sigma]
        self.alive[k].discard(tau)
        self.alive[k - 1].discard(sigma)

    def _free_pair(self, k: int, cell):
        """A fill-free pair touching ``cell`` in C_k, as (degree, tau, sigma)."""
        if k >= 1 and cell in self.bd[k]:
            b = self.bd[k][cell]
            if len(b) == 1:
                (sigma, c), = b.items()
                if abs(c) == 1:
                    return k, cell, sigma
        if k < self.top and cell in self.cob[k]:
            cb = self.cob[k][cell]
            if len(cb) == 1:
                (tau, c), = cb.items()
                if abs(c) == 1:
                    return k + 1, tau, cell
        return None

    def run(self) -> None:
        stack = [(k, cell) for k in range(self.top + 1) for cell in sorted(self.alive[k], reverse=True)]
        while True:
            while stack:
                k, cell = stack.pop()
                if cell not in self.alive[k]:
                    continue
                pair = self._free_pair(k, cell)
                if pair is None:
                    continue
                deg, tau, sigma = pair
                touched = self._neighbours(deg, tau, sigma)
                self._eliminate(deg, tau, sigma)
                stack.extend(touched)
            pair = self._cheapest_unit_pivot()
            if pair is None:
                return
            deg, tau, sigma = pair
            touched = self._neighbours(deg, tau, sigma)
            self._eliminate(deg, tau, sigma)
            stack.extend(touched)

    def _neighbours(self, deg, tau, sigma):
        touched = [(deg, o) for o in self.cob[deg - 1][sigma] if o != tau]
        touched += [(deg - 1, s) for s in self.bd[deg][tau] if s != sigma]
        touched += [(deg + 1, r) for r in self.cob[deg][tau]]
        if deg >= 2:
            touched += [(deg - 2, s) for s in self.bd[deg - 1][sigma]]
        return touched

    def _cheapest_unit_pivot(self):
        # dict order is insertion order, so the scan is deterministic without sorting;
        # a pair that is not fill-free costs at least 1, so stop at the first such
        best = None
        for k in range(1, self.top + 1):
            for tau, b in self.bd[k].items():
                for sigma, c in b.items():
                    if abs(c) != 1:
                        continue
                    cost = (len(self.cob[k - 1][sigma]) - 1) * (len(b) - 1)
                    if best is None or cost < best[0]:
                        best = (cost, k, tau, sigma)
                        if cost <= 1:
                            return best[1:]
        return None if best is None else best[1:]

    def remaining(self) -> ChainComplex:
        index = [{c: i for i, c in enumerate(sorted(a))} for a in self.alive]
        dims = [len(a) for a in self.alive]
        boundaries = {}
        for k in range(1, self.top + 1):
            cols = {}
            for tau in self.alive[k]:
                col = {index[k - 1][s]: c for s, c in self.bd[k][tau].items()}
                if col:
                    cols[index[k][tau]] = col
            boundaries[k] = cols
        return ChainComplex(dims, boundaries)


def chain_homology(cx: ChainComplex, reduce: bool = True) -> dict[int, tuple[int, tuple[int, ...]]]:
    """Integer homology ``{k: (rank, torsion coefficients)}`` of a chain complex.

    rank H_k = dim C_k - rank d_k - rank d_{k+1}; torsion of H_k is the list of
    invariant factors > 1 of d_{k+1}.  With ``reduce`` the complex is first
    shrunk by unit-pivot eliminations, which preserve homology over Z.
    """
    cx.validate()
    if reduce:
        red = _Reducer(cx)
        red.run()
        cx = red.remaining()
    top = len(cx.dims) - 1
    rank: dict[int, int] = {}
    factors: dict[int, list[int]] = {}
    for k in range(1, top + 1):
        M = cx.dense(k)
        if not M or not M[0]:
            rank[k], factors[k] = 0, []
            continue
        _, D, _ = smith_normal_form(M)
        diag = [d for d in _diagonal(D) if d]
        rank[k], factors[k] = len(diag), [d for d in diag if d > 1]
    out = {}
    for k in range(top + 1):
        r = cx.dims[k] - rank.get(k, 0) - rank.get(k + 1, 0)
        out[k] = (r, tuple(factors.get(k + 1, [])))
    return out
