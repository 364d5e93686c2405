"""Sphere assembly: refining cylinders, handlebodies, the pipeline, doubling."""

import time
from dataclasses import asdict

import pytest
from hypothesis import given, settings, strategies as st

from cubulations.core import (
    build_complex,
    cube_faces,
    manifold_check,
    validate,
)
from cubulations.topology import betti_numbers, surface_invariants
from cubulations.transforms import torus_complex
from cubulations.basis import canonical_basis, refine_report
from cubulations.surface_gen import surface_report
from cubulations.sphere_builder import (
    AssemblyError,
    StructuralReport,
    _disk_cells,
    _wheel,
    assemble_sphere3,
    check_fill_request,
    handlebody,
    induct_dimension,
    refining_cylinder,
    sphere3,
    sphere_d,
)


def boundary_c3():
    return build_complex(2, list(cube_faces(tuple(range(8)))))


def boundary_c4():
    return build_complex(3, list(cube_faces(tuple(range(16)))))


TORUS_MERIDIAN = (0, 1, 2, 3)
TORUS_LONGITUDE = (0, 4, 8, 12)


@pytest.fixture(scope="module")
def toy_pieces():
    """Trivial-refinement pipeline over the cube boundary."""
    Q = boundary_c3()
    cyl = refining_cylinder(Q, Q)
    hb = handlebody(Q, [])
    return Q, cyl, hb


@pytest.fixture(scope="module")
def heegaard_pieces():
    """Genus-one splitting: torus cylinder capped by two solid tori."""
    T = torus_complex(2)
    cyl = refining_cylinder(T, T)
    hbA = handlebody(T, [TORUS_MERIDIAN])
    hbB = handlebody(T, [TORUS_LONGITUDE])
    return T, cyl, hbA, hbB


@pytest.fixture(scope="module")
def pipeline11():
    return sphere3(11, k=8, structural=True)


# ---------------------------------------------------------------------------
# refining cylinder


def test_trivial_refinement_gives_product_layer(toy_pieces):
    Q, cyl, _ = toy_pieces
    assert cyl.level == "full"
    assert cyl.end == Q
    assert cyl.census["pillows"] == 6
    assert cyl.census["parity_fixes"] == 0
    assert cyl.census["splits"] == 0
    # six pillows of one cube each, inset into seven
    assert cyl.complex.f_vector() == (64, 152, 132, 42)
    rep = validate(cyl.complex)
    assert rep.is_complex


def test_cylinder_ends_carry_the_surface_ids(toy_pieces):
    Q, cyl, _ = toy_pieces
    squares = set(cyl.complex.cells[2])
    for t in Q.cells[2]:
        assert t in squares
        assert tuple(Q.n_vertices + v for v in t) in squares


def test_cylinder_structural_level(toy_pieces):
    Q, _, _ = toy_pieces
    rep = refining_cylinder(Q, Q, structural=True)
    assert rep.level == "structural"
    assert rep.complex is None
    assert rep.failed == ()
    assert len(rep.requests) == 6
    for req in rep.requests:
        assert req.sphere.f_vector() == (8, 12, 6)
        check_fill_request(req)


def test_cylinder_is_deterministic(toy_pieces):
    Q, cyl, _ = toy_pieces
    again = refining_cylinder(Q, Q)
    assert again.complex == cyl.complex
    assert again.end == cyl.end


def test_refinement_without_chains_is_rejected():
    Q = boundary_c3()
    T = torus_complex(2)
    with pytest.raises(AssemblyError, match="edge chains"):
        refining_cylinder(Q, T)


def test_unevenly_subdivided_chains_are_rejected():
    Q = boundary_c3()
    chains = {tuple(e): tuple(e) for e in Q.cells[1]}
    chains[(0, 1)] = (0, 99, 1)
    with pytest.raises(AssemblyError, match="evenly"):
        refining_cylinder(Q, Q, chains=chains)


def test_cylinder_rejects_open_surface():
    Q = boundary_c3()
    open_Q = build_complex(2, list(Q.cells[2][:5]))
    with pytest.raises(AssemblyError, match="closed"):
        refining_cylinder(open_Q, open_Q)


def test_report_input_form():
    Q, _ = surface_report(11)
    B = canonical_basis(Q)
    rep = refine_report(Q, B)
    cyl = refining_cylinder(Q, rep, structural=True)
    assert cyl.level == "structural"
    assert len(cyl.requests) == len(Q.cells[2])


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=3, max_value=12))
def test_wheels_are_valid_disks(half):
    # over a 4-cycle the two wheel quads would share two edges; wall
    # construction uses a single square there, so start at six
    cycle = tuple(range(2 * half))
    disk = build_complex(2, _wheel(cycle, 2 * half))
    rep = validate(disk)
    assert rep.is_complex
    f = disk.f_vector()
    assert f[2] == half
    assert f[0] - f[1] + f[2] == 1  # a disk


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=2, max_value=10))
def test_capping_disks_are_valid(half):
    # the five-way subdivision also legalizes the 4-cycle case
    cycle = tuple(range(2 * half))
    cells, used = _disk_cells(cycle, 2 * half)
    disk = build_complex(2, cells)
    rep = validate(disk)
    assert rep.is_complex
    f = disk.f_vector()
    assert f[2] == 5 * half
    assert f[0] - f[1] + f[2] == 1
    assert f[0] == 2 * half + used


# ---------------------------------------------------------------------------
# handlebody


def test_ball_as_genus_zero_handlebody(toy_pieces):
    Q, _, hb = toy_pieces
    assert hb.level == "full"
    assert hb.complex.f_vector() == (16, 32, 24, 7)
    assert hb.census["fill_cubes"] == 1
    prof = betti_numbers(hb.complex, "z")
    assert prof.betti == (1, 0, 0, 0)


def test_solid_torus_from_meridian(heegaard_pieces):
    T, _, hbA, _ = heegaard_pieces
    assert hbA.level == "full"
    sphere = hbA.sphere
    assert sphere.f_vector() == (38, 72, 36)
    assert surface_invariants(sphere) == (True, True, 0)
    assert hbA.complex.f_vector() == (86, 230, 212, 68)
    # homology of a solid torus
    prof = betti_numbers(hbA.complex, "z")
    assert prof.betti == (1, 1, 0, 0)
    assert all(not t for t in prof.torsion)


def test_handlebody_boundary_is_the_input(heegaard_pieces):
    T, _, hbA, _ = heegaard_pieces
    count = {}
    for cube in hbA.complex.cells[3]:
        for f in cube_faces(cube):
            key = tuple(sorted(f))
            count[key] = count.get(key, 0) + 1
    rim_verts = {v for f, n in count.items() if n == 1 for v in f}
    assert rim_verts == set(hbA.boundary_map.values())


def test_handlebody_is_deterministic(heegaard_pieces):
    T, _, hbA, _ = heegaard_pieces
    again = handlebody(T, [TORUS_MERIDIAN])
    assert again.complex == hbA.complex
    assert again.boundary_map == hbA.boundary_map


def test_handlebody_structural_level():
    T = torus_complex(2)
    hb = handlebody(T, [TORUS_MERIDIAN], structural=True)
    assert hb.level == "structural"
    assert hb.complex is None
    assert len(hb.requests) == 1
    assert hb.requests[0].origin == "handlebody end"
    check_fill_request(hb.requests[0])


def test_handlebody_rejects_odd_curve():
    T = torus_complex(2)
    with pytest.raises(AssemblyError, match="odd"):
        handlebody(T, [(0, 1, 2)])


def test_handlebody_rejects_wrong_curve_count():
    T = torus_complex(2)
    with pytest.raises(AssemblyError, match="not a sphere"):
        handlebody(T, [])


# ---------------------------------------------------------------------------
# assembled 3-spheres


def test_toy_sphere_from_cube_boundary(toy_pieces):
    Q, cyl, hb = toy_pieces
    S3 = assemble_sphere3(Q, 2, cyl, hb, hb)
    assert S3.f_vector() == (152, 372, 330, 110)
    prof = betti_numbers(S3, "z")
    assert prof.betti == (1, 0, 0, 1)
    assert all(not t for t in prof.torsion)
    assert manifold_check(S3, 3)


def test_heegaard_sphere_from_torus(heegaard_pieces):
    T, cyl, hbA, hbB = heegaard_pieces
    S3 = assemble_sphere3(T, 2, cyl, hbA, hbB)
    assert S3.f_vector() == (578, 1566, 1482, 494)
    rep = validate(S3)
    assert rep.is_complex and rep.is_closed_pseudomanifold
    prof = betti_numbers(S3, "z")
    assert prof.betti == (1, 0, 0, 1)
    assert all(not t for t in prof.torsion)
    assert manifold_check(S3, 3)


def test_assembly_needs_full_pieces(toy_pieces):
    Q, cyl, hb = toy_pieces
    partial = refining_cylinder(Q, Q, structural=True)
    with pytest.raises(AssemblyError, match="full level"):
        assemble_sphere3(Q, 2, partial, hb, hb)


# ---------------------------------------------------------------------------
# pipeline census at n = 11


def test_pipeline_structural_outcome(pipeline11):
    res, census = pipeline11
    assert isinstance(res, StructuralReport)
    assert census.pillows == 42
    assert len(res.requests) == 44  # pillows plus two handlebody ends
    for req in res.requests:
        check_fill_request(req)
        closed, orientable, genus = surface_invariants(req.sphere)
        assert closed and orientable and genus == 0
        assert len(req.sphere.cells[2]) % 2 == 0


def test_pipeline_census_identities(pipeline11):
    _, census = pipeline11
    f_Q = census.stage_f["surface"]
    assert census.predicted_cylinder_vertices == (census.k + 1) * f_Q[0]
    assert census.predicted_cylinder_cubes == census.k * f_Q[2]
    assert census.measured_cylinder_vertices == census.predicted_cylinder_vertices
    assert census.measured_cylinder_cubes == census.predicted_cylinder_cubes
    assert census.cylinder_built
    assert census.scaffold_vertices <= census.predicted_cylinder_vertices \
        + census.growth_constant * census.n ** 4 + 1e-9


def test_pipeline_parity_chain(pipeline11):
    res, census = pipeline11
    assert census.stage_f["surface"][2] % 2 == 0
    assert census.stage_f["refined"][2] % 2 == 0
    assert census.stage_f["end"][2] % 2 == 0
    # the end differs from the refinement by at most one split per square
    assert census.parity_fixes <= census.pillows
    assert census.stage_f["end"][2] == census.stage_f["refined"][2] \
        + 9 * census.parity_fixes


def test_census_is_k_independent(pipeline11):
    res8, c8 = pipeline11
    _, c27 = sphere3(11, k=27, structural=True)
    d8, d27 = asdict(c8), asdict(c27)
    cylinder_keys = {
        "k", "stage_f", "predicted_cylinder_vertices",
        "measured_cylinder_vertices", "predicted_cylinder_cubes",
        "measured_cylinder_cubes", "scaffold_vertices",
    }
    assert {key for key in d8 if d8[key] != d27[key]} <= cylinder_keys
    stages8, stages27 = d8["stage_f"], d27["stage_f"]
    assert {key for key in stages8 if stages8[key] != stages27.get(key)} \
        == {"cylinder"}


def test_pipeline_input_validation():
    for n in (9, 12, 7, 10):
        with pytest.raises(AssemblyError, match="odd prime"):
            sphere3(n, k=1, structural=True)
    with pytest.raises(AssemblyError, match="k must be"):
        sphere3(11, k=0, structural=True)


# ---------------------------------------------------------------------------
# raising dimension


def test_double_cube_boundary():
    S4 = induct_dimension(boundary_c4())
    assert S4.f_vector() == (64, 192, 232, 136, 34)
    assert S4.n_vertices == 4 * 16
    assert len(S4.cells[4]) >= 2 * 8
    prof = betti_numbers(S4, "z")
    assert prof.betti == (1, 0, 0, 0, 1)
    assert all(not t for t in prof.torsion)


def test_doubling_twice_within_budget():
    start = time.time()
    S4 = induct_dimension(boundary_c4())
    S5 = induct_dimension(S4)
    assert S5.n_vertices == 256
    assert betti_numbers(S5, "q").betti == (1, 0, 0, 0, 0, 1)
    assert betti_numbers(S5, 2).betti == (1, 0, 0, 0, 0, 1)
    assert time.time() - start < 120


def test_doubling_is_facet_invariant():
    C4 = boundary_c4()
    outcomes = {induct_dimension(C4, facet=f).f_vector()
                for f in C4.cells[3]}
    assert outcomes == {(64, 192, 232, 136, 34)}


def test_doubling_rejects_non_spheres():
    with pytest.raises(AssemblyError, match="sphere homology"):
        induct_dimension(torus_complex(3))
    ball = build_complex(3, [tuple(range(8))])
    with pytest.raises(AssemblyError, match="closed"):
        induct_dimension(ball)


# ---------------------------------------------------------------------------
# dimension climber


def test_sphere_d_picks_the_largest_prime():
    res, census = sphere_d(3, 80_000, structural=True)
    assert isinstance(res, StructuralReport)
    assert census.n == 11
    assert census.k == 11 ** 3
    assert not census.cylinder_built


def test_sphere_d_budget_errors():
    with pytest.raises(AssemblyError, match="at least"):
        sphere_d(2, 100)
    with pytest.raises(AssemblyError, match="2\\^"):
        sphere_d(3, 15)
    with pytest.raises(AssemblyError, match="no pipeline scale"):
        sphere_d(3, 20_000)


def test_sphere_d_stops_at_structural_level():
    res, census = sphere_d(4, 300_000, k=8, structural=True)
    assert isinstance(res, StructuralReport)
    assert census.d == 4
    assert any("full 3-sphere" in note for note in res.notes)
