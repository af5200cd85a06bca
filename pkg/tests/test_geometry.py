import numpy as np
import pytest

from trefftz_poly import _pykernels, kernels
from trefftz_poly.exceptions import MeshError
from trefftz_poly.geometry import (
    QuarterAnnulus,
    QuarterPlateWithHole,
    Rectangle,
    cvt_energy,
    generate_mesh,
    is_convex,
    lloyd_iterate,
    parse_domain,
    point_in_convex_polygon,
    polygon_centroid_area,
    random_seeds,
    raw_cells,
    tiled_area,
    voronoi_cells,
)

from conftest import UNIT_SQUARE, regular_polygon

UNIT = Rectangle(1.0, 1.0)


def test_centroid_area_examples():
    c, a = polygon_centroid_area(UNIT_SQUARE)
    np.testing.assert_allclose(c, [0.5, 0.5], atol=1e-15)
    assert a == 1.0
    c, a = polygon_centroid_area([[0, 0], [1, 0], [0, 1]])
    np.testing.assert_allclose(c, [1 / 3, 1 / 3], atol=1e-15)
    assert a == 0.5
    c, a = polygon_centroid_area(regular_polygon(6))
    assert abs(a - 3 * np.sqrt(3) / 2) < 1e-14
    np.testing.assert_allclose(c, [0, 0], atol=1e-15)


def test_centroid_area_rejects_short_input():
    with pytest.raises(MeshError):
        polygon_centroid_area([[0, 0], [1, 0]])


def test_clockwise_area_is_negative():
    assert polygon_centroid_area(UNIT_SQUARE[::-1])[1] == -1.0


def test_is_convex():
    assert is_convex(regular_polygon(7))
    dart = np.array([[0, 0], [2, 0], [1, 0.3], [1, 2]], dtype=float)
    assert not is_convex(dart)


def test_one_seed_gives_the_square():
    mesh = voronoi_cells([[0.3, 0.6]], UNIT)
    assert mesh.n_cells == 1 and mesh.n_nodes == 4
    assert abs(mesh.areas()[0] - 1.0) < 1e-15
    assert {tuple(p) for p in mesh.nodes} == {tuple(p) for p in UNIT_SQUARE}


def test_four_symmetric_seeds_give_quads():
    seeds = np.array([[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]])
    mesh = voronoi_cells(seeds, UNIT)
    assert mesh.n_cells == 4 and mesh.n_nodes == 9
    for i in range(4):
        xy = mesh.cell_coords(i)
        assert len(xy) == 4
        c, a = polygon_centroid_area(xy)
        assert abs(a - 0.25) < 1e-15
        np.testing.assert_allclose(c, seeds[i], atol=1e-15)


def test_hundred_seeds_tile_beam():
    dom = Rectangle(10.0, 2.0, 0.0, -1.0)
    mesh = voronoi_cells(random_seeds(dom, 100, seed=5), dom)
    assert mesh.n_cells == 100
    assert abs(mesh.areas().sum() - 20.0) <= 1e-8 * 20.0
    mesh.validate(dom)


@pytest.mark.parametrize("dom", [QuarterPlateWithHole(5.0, 1.0), QuarterAnnulus(1.0, 2.0)])
def test_arc_domains_tile(dom):
    mesh = voronoi_cells(random_seeds(dom, 150, seed=2), dom)
    total = mesh.areas().sum()
    # straight chords miss the circular segments; those are accounted for exactly
    assert abs(total - tiled_area(mesh, dom)) <= 1e-8 * dom.area
    assert abs(total - dom.area) <= 1e-3 * dom.area
    for arc in dom.arcs:
        ids = mesh.boundary_nodes(arc.marker)
        r = np.hypot(*mesh.nodes[ids].T)
        np.testing.assert_allclose(r, arc.radius, rtol=1e-12)
    assert all(is_convex(mesh.cell_coords(i)) for i in range(mesh.n_cells))


def test_voronoi_membership():
    dom = Rectangle(10.0, 2.0, 0.0, -1.0)
    seeds = random_seeds(dom, 60, seed=11)
    cells = raw_cells(seeds, dom)
    rng = np.random.default_rng(0)
    pts = rng.uniform([0, -1], [10, 1], size=(1000, 2))
    nearest = np.argmin(np.linalg.norm(pts[:, None] - seeds[None], axis=2), axis=1)
    for p, j in zip(pts, nearest):
        assert point_in_convex_polygon(cells[j], p, tol=1e-12)[0]


def test_lloyd_two_seeds():
    out = lloyd_iterate([[0.3, 0.5], [0.7, 0.5]], UNIT, max_iters=200, tol=1e-12)
    np.testing.assert_allclose(out, [[0.25, 0.5], [0.75, 0.5]], atol=1e-10)


def test_lloyd_fixed_point():
    seeds = np.array([[0.25, 0.5], [0.75, 0.5]])
    np.testing.assert_array_equal(lloyd_iterate(seeds, UNIT, max_iters=1), seeds)


def test_lloyd_zero_iterations_returns_input():
    seeds = np.array([[0.1, 0.2], [0.9, 0.4]])
    np.testing.assert_array_equal(lloyd_iterate(seeds, UNIT, max_iters=0), seeds)


def test_cvt_energy_non_increasing():
    dom = QuarterPlateWithHole(5.0, 1.0)
    seeds = random_seeds(dom, 40, seed=1)
    energies = [cvt_energy(seeds, dom)]
    for _ in range(10):
        seeds = lloyd_iterate(seeds, dom, max_iters=1)
        energies.append(cvt_energy(seeds, dom))
    assert all(b <= a * (1 + 1e-12) for a, b in zip(energies, energies[1:]))


@pytest.mark.parametrize("seeds", [[[1.5, 0.5]], [[0.2, 0.2], [0.2, 0.2]]])
def test_bad_seeds_rejected(seeds):
    with pytest.raises(MeshError):
        voronoi_cells(seeds, UNIT)


def test_seed_inside_hole_rejected():
    with pytest.raises(MeshError):
        voronoi_cells([[0.2, 0.2], [3.0, 3.0]], QuarterPlateWithHole())


def test_generated_cells_convex_and_ccw():
    mesh = generate_mesh(QuarterAnnulus(1.0, 2.0), 120, seed=4)
    for i in range(mesh.n_cells):
        xy = mesh.cell_coords(i)
        assert polygon_centroid_area(xy)[1] > 0 and is_convex(xy)


def test_generate_mesh_deterministic():
    a = generate_mesh(Rectangle(10.0, 2.0, 0.0, -1.0), 80, seed=42)
    b = generate_mesh(Rectangle(10.0, 2.0, 0.0, -1.0), 80, seed=42)
    np.testing.assert_array_equal(a.nodes, b.nodes)
    assert a.boundary_edges == b.boundary_edges


def test_generate_mesh_markers():
    assert generate_mesh(QuarterPlateWithHole(), 50).markers == {
        "symmetry_x", "symmetry_y", "hole", "right", "top"}
    assert generate_mesh(QuarterAnnulus(), 50).markers >= {"fixed", "loaded"}


def test_parse_domain():
    assert parse_domain("rect:10x2") == Rectangle(10.0, 2.0, 0.0, -1.0)
    assert parse_domain("rect:1x1@0,0") == Rectangle(1.0, 1.0)
    assert parse_domain("plate_hole:5,1") == QuarterPlateWithHole(5.0, 1.0)
    assert parse_domain("annulus:1,2") == QuarterAnnulus(1.0, 2.0)
    for bad in ("rect:0x1", "disk:1", "rect:ax2"):
        with pytest.raises(MeshError):
            parse_domain(bad)


def test_compiled_kernel_matches_fallback(monkeypatch):
    if not kernels.COMPILED:
        pytest.skip("compiled extension not built")
    dom = QuarterPlateWithHole()
    seeds = random_seeds(dom, 200, seed=9)
    ref = voronoi_cells(seeds, dom)
    monkeypatch.setattr(kernels, "clip_cells", _pykernels.clip_cells)
    monkeypatch.setattr(kernels, "polygon_moments", _pykernels.polygon_moments)
    alt = voronoi_cells(seeds, dom)
    np.testing.assert_array_equal(ref.nodes, alt.nodes)
    assert all(np.array_equal(a, b) for a, b in zip(ref.cells, alt.cells))


def test_pure_python_fallback_selected_by_env():
    import subprocess
    import sys

    code = ("from trefftz_poly import kernels; from trefftz_poly.geometry import *;"
            "m = generate_mesh(Rectangle(1.0, 1.0), 12, seed=1); print(kernels.COMPILED, m.n_cells)")
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                          env={**__import__("os").environ, "TREFFTZ_POLY_PURE": "1"})
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.split() == ["False", "12"]
