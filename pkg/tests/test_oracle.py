from fractions import Fraction

import numpy as np
import pytest

from realmilnor.homology import HandleDecomposition, relative_homology
from realmilnor.oracle import (
    MeshComplex,
    NonManifoldMeshError,
    UnsupportedDimensionError,
    compare,
    extract_fibre,
    read_off,
    relative_chain_complex,
    relative_homology_mesh,
    write_off,
)
from realmilnor.poly import NumericPolynomial, parse, perturb

XY = ("x", "y")
XYZ = ("x", "y", "z")
CUSP = parse("x^3 - y^2", XY)
TWO = parse("x^2 - y^2", XY)
THREE = parse("x^3 - 3*x*y^2", XY)
CONE = parse("x^2 + y^2 - z^2", XYZ)


@pytest.fixture(scope="module")
def cone_mesh():
    return extract_fibre(CONE, 0.1, 1.0)


@pytest.fixture(scope="module")
def cone_homology(cone_mesh):
    return relative_homology_mesh(cone_mesh)


class TestCurves:
    def test_cusp_one_arc(self):
        M = extract_fibre(CUSP, 0.01, 1.0)
        assert M.n == 1
        assert len(M.boundary_vertices) == 2
        assert len(M.cells) == len(M.vertices) - 1  # a single arc is a tree
        H = relative_homology_mesh(M)
        assert H.ranks == {1: 1} and H.torsion_free()

    def test_two_arcs(self):
        M = extract_fibre(TWO, 0.1, 1.0)
        assert M.boundary_components() == 4
        assert relative_homology_mesh(M).ranks == {1: 2}

    def test_three_arcs(self):
        M = extract_fibre(THREE, 0.01, 1.0)
        assert relative_homology_mesh(M).ranks == {1: 3}

    def test_closed_curve_inside(self):
        # a circle of radius 1/2 has no boundary on the unit sphere: H_0 = H_1 = Z
        M = extract_fibre(parse("x^2 + y^2", XY), 0.25, 1.0)
        assert len(M.boundary_cells) == 0
        assert relative_homology_mesh(M).ranks == {0: 1, 1: 1}

    def test_empty(self):
        M = extract_fibre(parse("-x^2 - y^2", XY), 0.1, 1.0)
        assert len(M.cells) == 0
        assert relative_homology_mesh(M).ranks == {}


class TestSurfaces:
    def test_cone_annulus(self, cone_mesh, cone_homology):
        M = cone_mesh
        assert M.n == 2
        assert M.boundary_components() == 2
        assert M.euler_rel() == 0
        H = cone_homology
        assert H.ranks == {1: 1, 2: 1} and H.torsion_free()
        # chi(A) = V - E + F = 0 for the absolute complex too
        chi = len(M.vertices) - len(M.edges()) + len(M.cells)
        assert chi == 0

    def test_disc(self):
        # the plane z = 1/4 cut by the unit ball is a disc: H_2(D, dD) = Z
        M = extract_fibre(parse("z", XYZ), 0.25, 1.0, resolution=1 / 24)
        assert relative_homology_mesh(M).ranks == {2: 1}

    def test_manifold(self, cone_mesh):
        assert cone_mesh.manifold_defects() == []
        broken = MeshComplex(cone_mesh.vertices, np.concatenate([cone_mesh.cells, cone_mesh.cells[:1]]),
                             cone_mesh.boundary_cells, cone_mesh.resolution, cone_mesh.delta, cone_mesh.level)
        assert broken.manifold_defects()
        with pytest.raises(NonManifoldMeshError):
            broken.check()


@pytest.mark.parametrize("f,eps,res", [
    (CUSP, 0.01, 1 / 64),
    (TWO, 0.05, 1 / 64),
    (THREE, 0.02, 1 / 64),
    (perturb(CONE, [Fraction(1, 10), 0, 0]), 0.047, 1 / 24),
])
def test_resolution_stability(f, eps, res):
    a = relative_homology_mesh(extract_fibre(f, eps, 1.0, res))
    b = relative_homology_mesh(extract_fibre(f, eps, 1.0, res / 2))
    assert a.ranks == b.ranks and a.torsion == b.torsion


@pytest.mark.parametrize("f,eps", [(CUSP, 0.01), (TWO, 0.1), (CONE, 0.1)])
def test_invariants(f, eps, cone_mesh, cone_homology):
    M = cone_mesh if f is CONE else extract_fibre(f, eps, 1.0)
    F = NumericPolynomial(f)
    h = M.resolution
    # boundary vertices sit on the sphere
    r = np.linalg.norm(M.vertices[M.boundary_vertices], axis=1)
    assert np.all(np.abs(r - 1.0) < 2 * h)
    # every vertex lies inside the closed ball
    assert np.all(np.linalg.norm(M.vertices, axis=1) <= 1.0 + 1e-12)
    # vertices are close to the level set, sampled
    idx = np.random.default_rng(0).choice(len(M.vertices), size=min(500, len(M.vertices)), replace=False)
    V = M.vertices[idx]
    gbound = np.max(np.linalg.norm(F.grad(V), axis=1)) + 1.0
    assert np.all(np.abs(F.value(V) - eps) < 10 * h * gbound)
    # Euler identity on the relative complex
    H = cone_homology if f is CONE else relative_homology_mesh(M)
    assert M.euler_rel() == sum((-1) ** k * v for k, v in H.ranks.items())
    relative_chain_complex(M).validate()


class TestCompare:
    def test_cusp_agree(self):
        morse = relative_homology(HandleDecomposition((1,)))
        mesh = relative_homology_mesh(extract_fibre(CUSP, 0.01, 1.0))
        v = compare(morse, mesh)
        assert v.agree and v.first_differing_degree is None

    def test_cone_agree(self, cone_homology):
        v = compare(relative_homology(HandleDecomposition((1, 2))), cone_homology)
        assert v.agree

    def test_corrupted_disagrees(self):
        mesh = relative_homology_mesh(extract_fibre(CUSP, 0.01, 1.0))
        v = compare(relative_homology(HandleDecomposition((2,))), mesh)
        assert not v.agree and v.first_differing_degree == 1
        assert v.to_dict()["verdict"] == "disagree"


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimensionError):
        extract_fibre(parse("x^2 - y^2 + z^2 - w^2", ("x", "y", "z", "w")), 0.1, 1.0)
    with pytest.raises(ValueError):
        extract_fibre(CUSP, 0.01, 1.0, resolution=0.5)


def test_off_round_trip(tmp_path):
    M = extract_fibre(CUSP, 0.01, 1.0)
    path = tmp_path / "fib.off"
    write_off(M, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "OFF"
    nv, nc, ne = map(int, lines[1].split())
    assert (nv, nc, ne) == (len(M.vertices), len(M.cells), 0)
    assert all(len(ln.split()) == 3 for ln in lines[2:2 + nv])
    assert all(ln.split()[0] == "2" for ln in lines[2 + nv:2 + nv + nc])
    back = read_off(path)
    assert np.array_equal(back.cells, M.cells)
    assert np.array_equal(back.boundary_cells, M.boundary_cells)
    assert np.allclose(back.vertices, M.vertices, rtol=0, atol=0)
    assert relative_homology_mesh(back).ranks == {1: 1}


def test_off_surface(tmp_path, cone_mesh):
    path = tmp_path / "cone.off"
    write_off(cone_mesh, path)
    back = read_off(path)
    assert back.n == 2 and np.array_equal(back.boundary_cells, cone_mesh.boundary_cells)
