"""Mesh-based check of H_*(Phi, dPhi; Z) for Phi = {f_t = eps} in the closed ball.

The level set is extracted from a uniform grid as the zero set of the
piecewise-linear interpolant on a Kuhn (Freudenthal) triangulation of the
grid: each square is split into 2 triangles, each cube into 6 tetrahedra
around its main diagonal.  This is the unambiguous variant of marching
squares/cubes and always produces a combinatorial manifold.  The result is
clipped to the ball by cutting edges exactly where they cross the sphere.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .homology import ChainComplex, HomologyReport, chain_homology
from .poly import NumericPolynomial

__all__ = [
    "MeshComplex",
    "NonManifoldMeshError",
    "UnsupportedDimensionError",
    "extract_fibre",
    "relative_homology_mesh",
    "compare",
    "Comparison",
    "write_off",
    "read_off",
]


class NonManifoldMeshError(RuntimeError):
    pass


class UnsupportedDimensionError(ValueError):
    pass


@dataclass
class MeshComplex:
    """Simplicial approximation of a fibre.

    ``cells`` holds the top simplices (segments for curves, triangles for
    surfaces) as rows of vertex ids; ``boundary_cells`` holds the simplices
    of the boundary subcomplex one dimension lower (vertex ids for curves,
    edges for surfaces).
    """

    vertices: np.ndarray
    cells: np.ndarray
    boundary_cells: np.ndarray
    resolution: float
    delta: float
    level: float = 0.0

    @property
    def n(self) -> int:
        return self.cells.shape[1] - 1

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_cells)

    def edges(self) -> np.ndarray:
        if self.n == 1:
            return np.sort(self.cells, axis=1)
        e = np.concatenate([self.cells[:, [0, 1]], self.cells[:, [1, 2]], self.cells[:, [0, 2]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def manifold_defects(self) -> list[str]:
        """Violations of the with-boundary manifold conditions (empty if none)."""
        problems = []
        if len(self.cells) and np.any([len(set(c)) != len(c) for c in self.cells.tolist()]):
            problems.append("cell with repeated vertex")
        if self.n == 1:
            deg = Counter(self.cells.ravel().tolist())
            bnd = set(self.boundary_cells.ravel().tolist())
            for v, k in deg.items():
                want = 1 if v in bnd else 2
                if k != want:
                    problems.append(f"vertex {v} has {k} incident segments, expected {want}")
        else:
            inc = Counter()
            for a, b, c in np.sort(self.cells, axis=1).tolist():
                inc[(a, b)] += 1
                inc[(b, c)] += 1
                inc[(a, c)] += 1
            bnd = {tuple(e) for e in np.sort(self.boundary_cells, axis=1).tolist()}
            for e, k in inc.items():
                want = 1 if e in bnd else 2
                if k != want:
                    problems.append(f"edge {e} has {k} incident triangles, expected {want}")
            missing = bnd - set(inc)
            if missing:
                problems.append(f"{len(missing)} boundary edges are not faces of triangles")
        return problems

    def check(self) -> None:
        problems = self.manifold_defects()
        if problems:
            raise NonManifoldMeshError("; ".join(problems[:5]))
        if len(self.boundary_cells):
            r = np.linalg.norm(self.vertices[self.boundary_vertices], axis=1)
            if np.max(np.abs(r - self.delta)) >= 2 * self.resolution:
                raise NonManifoldMeshError("boundary vertex farther than 2*resolution from the sphere")

    def relative_cell_counts(self) -> list[int]:
        bverts = set(self.boundary_vertices.tolist())
        nv = len(set(self.cells.ravel().tolist()) - bverts)
        if self.n == 1:
            return [nv, len(self.cells)]
        bedges = {tuple(e) for e in np.sort(self.boundary_cells, axis=1).tolist()}
        ne = sum(1 for e in self.edges().tolist() if tuple(e) not in bedges)
        return [nv, ne, len(self.cells)]

    def euler_rel(self) -> int:
        return sum((-1) ** k * c for k, c in enumerate(self.relative_cell_counts()))

    def boundary_components(self) -> int:
        """Number of connected components of the boundary subcomplex."""
        if len(self.boundary_cells) == 0:
            return 0
        if self.n == 1:
            return len(self.boundary_vertices)
        parent = {}

        def find(a):
            while parent.setdefault(a, a) != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in self.boundary_cells.tolist():
            parent[find(a)] = find(b)
        return len({find(v) for v in self.boundary_vertices.tolist()})


# ---------------------------------------------------------------------------
# extraction


def _grid(F: NumericPolynomial, delta: float, h: float, level: float):
    half = math.ceil(delta / h) + 1
    axis = h * np.arange(-half, half + 1)
    d = F.dim
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = F.value(pts) - level
    return axis, pts, vals.reshape((len(axis),) * d)


def _kuhn_simplices(d: int) -> list[list[tuple[int, ...]]]:
    """Simplices of the Kuhn triangulation of the unit d-cube, as corner offsets."""
    out = []
    for perm in itertools.permutations(range(d)):
        corner = [0] * d
        simplex = [tuple(corner)]
        for axis in perm:
            corner[axis] = 1
            simplex.append(tuple(corner))
        out.append(simplex)
    return out


def _crossed_simplices(vals: np.ndarray):
    """Global vertex ids (rows) of Kuhn simplices whose corners change sign."""
    d = vals.ndim
    m = vals.shape[0]
    pos = vals >= 0
    any_pos = np.zeros((m - 1,) * d, dtype=bool)
    all_pos = np.ones((m - 1,) * d, dtype=bool)
    for off in itertools.product((0, 1), repeat=d):
        sl = tuple(slice(o, o + m - 1) for o in off)
        any_pos |= pos[sl]
        all_pos &= pos[sl]
    base = np.argwhere(any_pos & ~all_pos)
    strides = np.array([m ** (d - 1 - i) for i in range(d)])
    simplices = []
    for simplex in _kuhn_simplices(d):
        ids = [(base + np.array(off)) @ strides for off in simplex]
        simplices.append(np.stack(ids, axis=1))
    return np.concatenate(simplices, axis=0) if simplices else np.zeros((0, d + 1), dtype=np.int64)


def _level_cells(S: np.ndarray, flat: np.ndarray):
    """Zero set of the PL interpolant in each simplex, as cells over crossing edges.

    Returns an array of shape (C, n+1, 2): each cell vertex is the grid edge
    it lies on.
    """
    k = S.shape[1]  # simplex vertices = d + 1
    pos = flat[S] >= 0
    out = []
    for code in range(1, 2 ** k - 1):
        mask = np.all(pos == np.array([(code >> i) & 1 for i in range(k)], dtype=bool), axis=1)
        if not np.any(mask):
            continue
        sel = S[mask]
        P = [i for i in range(k) if (code >> i) & 1]
        N = [i for i in range(k) if not (code >> i) & 1]
        for cell in _cell_table(P, N, k):
            out.append(np.stack([np.stack([sel[:, a], sel[:, b]], axis=1) for a, b in cell], axis=1))
    if not out:
        return np.zeros((0, k - 1, 2), dtype=np.int64)
    return np.concatenate(out, axis=0)


def _cell_table(P, N, k):
    if k == 3:  # triangle -> one segment
        lone, rest = (P[0], N) if len(P) == 1 else (N[0], P)
        return [[(lone, rest[0]), (lone, rest[1])]]
    # tetrahedron
    if len(P) == 1 or len(N) == 1:
        lone, rest = (P[0], N) if len(P) == 1 else (N[0], P)
        return [[(lone, r) for r in rest]]
    a, b = P
    c, d = N
    # quad (a,c) (a,d) (b,d) (b,c) split along (a,c)-(b,d)
    return [[(a, c), (a, d), (b, d)], [(a, c), (b, d), (b, c)]]


def _index_vertices(cells_on_edges, pts, flat):
    """Merge crossing points by grid edge and place them by linear interpolation."""
    e = np.sort(cells_on_edges.reshape(-1, 2), axis=1)
    keys, inverse = np.unique(e, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    va, vb = flat[keys[:, 0]], flat[keys[:, 1]]
    s = va / (va - vb)
    V = pts[keys[:, 0]] + s[:, None] * (pts[keys[:, 1]] - pts[keys[:, 0]])
    cells = inverse.reshape(cells_on_edges.shape[0], cells_on_edges.shape[1])
    return V, cells


def _sphere_cut(a, b, delta):
    """Point where the segment a->b crosses |x| = delta (a inside, b outside)."""
    u = b - a
    A = u @ u
    B = 2 * (a @ u)
    C = a @ a - delta ** 2
    s = (-B + math.sqrt(max(B * B - 4 * A * C, 0.0))) / (2 * A)
    s = min(max(s, 0.0), 1.0)
    p = a + s * u
    return delta * p / np.linalg.norm(p)


def _clip(V: np.ndarray, cells: np.ndarray, delta: float):
    """Keep the part of the complex inside the closed ball; returns (V, cells, boundary)."""
    inside = np.sum(V * V, axis=1) < delta ** 2
    new_vertices = [v for v in V]
    cut_index = {}

    def cut(i, j):  # i inside, j outside
        key = (i, j)
        if key not in cut_index:
            cut_index[key] = len(new_vertices)
            new_vertices.append(_sphere_cut(V[i], V[j], delta))
        return cut_index[key]

    kept, boundary = [], []
    k = cells.shape[1]
    for cell in cells.tolist():
        ins = [v for v in cell if inside[v]]
        if len(ins) == k:
            kept.append(cell)
            continue
        if not ins:
            continue
        out = [v for v in cell if not inside[v]]
        if k == 2:
            c = cut(ins[0], out[0])
            kept.append([ins[0], c])
            boundary.append([c])
        elif len(ins) == 1:
            a = ins[0]
            c1, c2 = cut(a, out[0]), cut(a, out[1])
            kept.append([a, c1, c2])
            boundary.append([c1, c2])
        else:
            a, b = ins
            c = out[0]
            cb, ca = cut(b, c), cut(a, c)
            kept.append([a, b, cb])
            kept.append([a, cb, ca])
            boundary.append([cb, ca])

    kept = np.array(kept, dtype=np.int64).reshape(-1, k)
    boundary = np.array(boundary, dtype=np.int64).reshape(-1, k - 1)
    allV = np.array(new_vertices).reshape(-1, V.shape[1])
    used = np.unique(np.concatenate([kept.ravel(), boundary.ravel()]))
    remap = -np.ones(len(allV), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return allV[used], remap[kept], remap[boundary]


def extract_fibre(f_t, level: float, delta: float, resolution: float | None = None,
                  max_refinements: int = 2) -> MeshComplex:
    """Mesh ``{f_t = level}`` inside the closed ball of radius ``delta``.

    Curves (2 variables) and surfaces (3 variables) only.  A non-manifold
    result is retried at half the resolution up to ``max_refinements`` times.
    """
    F = f_t if isinstance(f_t, NumericPolynomial) else NumericPolynomial(f_t)
    d = F.dim
    if d not in (2, 3):
        raise UnsupportedDimensionError(f"mesh oracle supports curves and surfaces, got {d} variables")
    if resolution is None:
        resolution = delta / (128 if d == 2 else 48)
    if resolution > delta / 16:
        raise ValueError("resolution must be at most delta/16")
    last_error = None
    h = resolution
    for _ in range(max_refinements + 1):
        axis, pts, vals = _grid(F, delta, h, level)
        flat = vals.ravel()
        S = _crossed_simplices(vals)
        level_cells = _level_cells(S, flat)
        if len(level_cells) == 0:
            mesh = MeshComplex(np.zeros((0, d)), np.zeros((0, d), dtype=np.int64),
                               np.zeros((0, d - 1), dtype=np.int64), h, delta, level)
            return mesh
        V, cells = _index_vertices(level_cells, pts, flat)
        V, cells, boundary = _clip(V, cells, delta)
        mesh = MeshComplex(V, cells, boundary, h, delta, level)
        try:
            mesh.check()
            return mesh
        except NonManifoldMeshError as err:
            last_error = err
            h /= 2
    raise NonManifoldMeshError(f"mesh not a manifold after {max_refinements} refinements: {last_error}")


# ---------------------------------------------------------------------------
# homology


def relative_chain_complex(M: MeshComplex) -> ChainComplex:
    """C_*(M) / C_*(dM) with simplices oriented by increasing vertex id."""
    bverts = set(M.boundary_vertices.tolist())
    verts = sorted(set(M.cells.ravel().tolist()) - bverts)
    vidx = {v: i for i, v in enumerate(verts)}
    if M.n == 1:
        d1 = {}
        for j, (a, b) in enumerate(np.sort(M.cells, axis=1).tolist()):
            col = {}
            if b in vidx:
                col[vidx[b]] = 1
            if a in vidx:
                col[vidx[a]] = -1
            if col:
                d1[j] = col
        return ChainComplex([len(verts), len(M.cells)], {1: d1})
    bedges = {tuple(e) for e in np.sort(M.boundary_cells, axis=1).tolist()}
    edges = [tuple(e) for e in M.edges().tolist() if tuple(e) not in bedges]
    eidx = {e: i for i, e in enumerate(edges)}
    d1 = {}
    for j, (a, b) in enumerate(edges):
        col = {}
        if b in vidx:
            col[vidx[b]] = 1
        if a in vidx:
            col[vidx[a]] = -1
        if col:
            d1[j] = col
    d2 = {}
    for j, (a, b, c) in enumerate(np.sort(M.cells, axis=1).tolist()):
        col = {}
        for e, sgn in (((b, c), 1), ((a, c), -1), ((a, b), 1)):
            if e in eidx:
                col[eidx[e]] = sgn
        if col:
            d2[j] = col
    return ChainComplex([len(verts), len(edges), len(M.cells)], {1: d1, 2: d2})


def relative_homology_mesh(M: MeshComplex) -> HomologyReport:
    cx = relative_chain_complex(M)
    H = chain_homology(cx)
    ranks = {k: r for k, (r, _) in H.items() if r}
    torsion = tuple((k, t) for k, (_, t) in sorted(H.items()) if t)
    return HomologyReport(ranks=ranks, torsion=torsion, euler_rel=M.euler_rel())


@dataclass(frozen=True)
class Comparison:
    agree: bool
    first_differing_degree: int | None
    rank_match: bool
    torsion_free: bool
    euler_match: bool
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "verdict": "agree" if self.agree else "disagree",
            "first_differing_degree": self.first_differing_degree,
            "rank_match": self.rank_match,
            "torsion_free": self.torsion_free,
            "euler_match": self.euler_match,
            "notes": list(self.notes),
        }


def compare(morse: HomologyReport, mesh: HomologyReport) -> Comparison:
    degrees = sorted(set(morse.ranks) | set(mesh.ranks))
    differing = [k for k in degrees if morse.rank(k) != mesh.rank(k)]
    first = differing[0] if differing else None
    torsion_free = mesh.torsion_free()
    if first is None and not torsion_free:
        first = min(k for k, _ in mesh.torsion)
    euler = morse.euler_rel == mesh.euler_rel
    notes = []
    if not torsion_free:
        notes.append("mesh homology has torsion")
    if not euler:
        notes.append(f"euler mismatch: morse {morse.euler_rel}, mesh {mesh.euler_rel}")
    return Comparison(
        agree=not differing and torsion_free and euler,
        first_differing_degree=first,
        rank_match=not differing,
        torsion_free=torsion_free,
        euler_match=euler,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# OFF export


def write_off(M: MeshComplex, path) -> None:
    """OFF text: counts header, vertex lines, cell lines, then a comment block
    listing the boundary subcomplex (see ``docs/off_format.md``)."""
    d = M.vertices.shape[1]
    lines = ["OFF"]
    lines.append(f"{len(M.vertices)} {len(M.cells)} 0")
    for v in M.vertices:
        coords = list(v) + [0.0] * (3 - d)
        lines.append(" ".join(format(float(c), ".17g") for c in coords))
    for c in M.cells.tolist():
        lines.append(" ".join([str(len(c))] + [str(i) for i in c]))
    lines.append(f"# boundary {len(M.boundary_cells)} {M.boundary_cells.shape[1]}")
    for c in M.boundary_cells.tolist():
        lines.append("# " + " ".join(str(i) for i in c))
    lines.append(f"# meta dim={d} n={M.n} delta={M.delta!r} level={M.level!r} resolution={M.resolution!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_off(path) -> MeshComplex:
    with open(path) as fh:
        raw = [ln.strip() for ln in fh if ln.strip()]
    if raw[0] != "OFF":
        raise ValueError("not an OFF file")
    body = [ln for ln in raw[1:] if not ln.startswith("#")]
    comments = [ln[1:].strip() for ln in raw[1:] if ln.startswith("#")]
    nv, nc, _ = (int(x) for x in body[0].split())
    meta = dict(kv.split("=") for kv in comments[-1].split()[1:])
    d = int(meta["dim"])
    V = np.array([[float(x) for x in ln.split()][:d] for ln in body[1:1 + nv]]).reshape(-1, d)
    C = np.array([[int(x) for x in ln.split()[1:]] for ln in body[1 + nv:1 + nv + nc]], dtype=np.int64)
    nb, width = (int(x) for x in comments[0].split()[1:3])
    B = np.array([[int(x) for x in c.split()] for c in comments[1:1 + nb]], dtype=np.int64).reshape(-1, width)
    n = int(meta["n"])
    return MeshComplex(V, C.reshape(-1, n + 1), B, float(meta["resolution"]), float(meta["delta"]), float(meta["level"]))
