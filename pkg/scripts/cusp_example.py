#!/usr/bin/env python3
"""Walk through the cusp x^3 - y^2 with t = (-3, 0) step by step."""

from fractions import Fraction

from realmilnor.fibre import epsilon_bracket, filter_fibre, select_epsilon
from realmilnor.homology import handle_decomposition, relative_homology
from realmilnor.oracle import compare, extract_fibre, relative_homology_mesh
from realmilnor.poly import parse, perturb
from realmilnor.sphcrit import ambient_critical_points, find_critical_points

f = parse("x^3 - y^2", ("x", "y"))
f_t = perturb(f, [Fraction(-3), Fraction(0)])
print("f_t =", f_t)

points = find_critical_points(f_t, 1.0)
for p in points:
    print(f"  critical point {tuple(round(c, 9) for c in p.location)}  value {p.value:+.6f}  index {p.morse_index}")

ambient = [a.value for a in ambient_critical_points(f_t, 1.0)]
a, b = epsilon_bracket(points, ambient)
eps = select_epsilon(points, ambient)
print(f"bracket ({a:g}, {b:g}), epsilon {eps:g}")

handles = handle_decomposition(filter_fibre(points, eps, "+"))
morse = relative_homology(handles)
print(handles.describe(), " ranks", morse.ranks)

# the mesh needs a level the grid can resolve; any value in the bracket will do
mesh = extract_fibre(f_t, 0.01, 1.0)
mh = relative_homology_mesh(mesh)
print(f"mesh: {len(mesh.vertices)} vertices, {len(mesh.cells)} segments, ranks {mh.ranks}")
print("oracle:", compare(morse, mh).to_dict()["verdict"])
