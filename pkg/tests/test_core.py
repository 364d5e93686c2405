"""Core cube model: canonical forms, closure, validation, links."""

from itertools import permutations

import pytest
from hypothesis import given, settings, strategies as st

from cubulations.core import (
    BoundReport,
    Cube,
    CubeComplex,
    MalformedCubeError,
    OddCycleError,
    bipartite_classes,
    build_complex,
    canonical,
    canonical_with_sign,
    cube_faces,
    from_json_obj,
    from_text,
    manifold_check,
    pseudomanifold_check,
    relabel_dense,
    to_json_obj,
    to_text,
    upper_bound_checks,
    validate,
    vertex_link,
)

SOLID_CUBE = (0, 1, 2, 3, 4, 5, 6, 7)


def boundary_c3() -> CubeComplex:
    return build_complex(2, list(cube_faces(SOLID_CUBE)))


# ---------------------------------------------------------------------------
# canonical form


def _orbit_with_signs(corners):
    """Brute-force enumeration of the symmetry group (reference oracle)."""
    k = len(corners).bit_length() - 1
    out = []
    for perm in permutations(range(k)):
        inv = 0
        for i in range(k):
            for j in range(i + 1, k):
                if perm[i] > perm[j]:
                    inv += 1
        psign = -1 if inv % 2 else 1
        for refl in range(1 << k):
            rsign = -1 if bin(refl).count("1") % 2 else 1
            arr = tuple(
                corners[refl ^ sum(((c >> j) & 1) << perm[j] for j in range(k))]
                for c in range(1 << k)
            )
            out.append((arr, psign * rsign))
    return out


@st.composite
def small_cubes(draw):
    k = draw(st.integers(min_value=0, max_value=3))
    ids = draw(
        st.lists(
            st.integers(min_value=0, max_value=60),
            min_size=1 << k,
            max_size=1 << k,
            unique=True,
        )
    )
    return tuple(ids)


@given(small_cubes())
@settings(max_examples=300)
def test_canonical_matches_group_minimum(corners):
    orbit = _orbit_with_signs(corners)
    best = min(arr for arr, _ in orbit)
    best_sign = next(s for arr, s in orbit if arr == best)
    got, sign = canonical_with_sign(corners)
    assert got == best
    assert sign == best_sign


@given(small_cubes())
@settings(max_examples=200)
def test_canonical_is_idempotent_and_orbit_invariant(corners):
    c, s = canonical_with_sign(corners)
    assert canonical_with_sign(c) == (c, 1)
    for arr, _ in _orbit_with_signs(corners):
        assert canonical(arr) == c


def test_canonical_signs_compose_over_the_orbit():
    corners = (3, 9, 1, 7)
    c, s = canonical_with_sign(corners)
    for arr, rel in _orbit_with_signs(corners):
        # arr = corners relabeled by an element of sign rel
        assert canonical_with_sign(arr) == (c, s * rel)


def test_same_square_different_corner_array():
    # both arrays describe the square with diagonals {0,3} and {1,2}
    assert canonical((0, 2, 1, 3)) == (0, 1, 2, 3)
    assert Cube((0, 2, 1, 3)) == Cube((0, 1, 2, 3))


def test_malformed_cubes_rejected():
    with pytest.raises(MalformedCubeError):
        Cube((0, 1, 2))  # not a power of two
    with pytest.raises(MalformedCubeError):
        Cube((0, 1, 1, 2))  # repeated corner
    with pytest.raises(MalformedCubeError):
        Cube((0, -1))


# ---------------------------------------------------------------------------
# build + f-vector


def test_boundary_of_cube_f_vector():
    C = boundary_c3()
    assert C.f_vector() == (8, 12, 6)
    assert C.euler_characteristic() == 2
    assert pseudomanifold_check(C)
    assert manifold_check(C, 2)


def test_solid_cube_f_vector():
    C = build_complex(3, [SOLID_CUBE])
    assert C.f_vector() == (8, 12, 6, 1)
    assert C.euler_characteristic() == 1
    assert not pseudomanifold_check(C)  # squares lie in one cube only


def test_build_deduplicates_symmetric_copies():
    C = build_complex(2, [(0, 1, 2, 3), (0, 2, 1, 3), (3, 1, 2, 0)])
    assert C.f_vector() == (4, 4, 1)


def test_build_requires_dense_ids():
    with pytest.raises(MalformedCubeError, match="dense"):
        build_complex(2, [(0, 1, 2, 4)])
    C = build_complex(2, [(0, 1, 2, 3)], n_vertices=4)
    assert C.n_vertices == 4


def test_relabel_dense():
    sparse = CubeComplex.from_cells(2, 7, {2: [(0, 2, 4, 6)]})
    D, mapping = relabel_dense(sparse)
    assert mapping == {0: 0, 2: 1, 4: 2, 6: 3}
    assert D.cells[2] == ((0, 1, 2, 3),)
    big = build_complex(2, [(0, 1, 2, 3), (2, 3, 4, 5)])
    D2, m2 = relabel_dense(big)
    assert D2 == big and m2 == {v: v for v in range(6)}


def test_maximal_cells_of_non_pure_complex():
    C = build_complex(2, [(0, 1, 2, 3), (3, 4)])
    m = C.maximal_cells()
    assert m[2] == ((0, 1, 2, 3),)
    assert m[1] == ((3, 4),)
    assert m[0] == ()


# ---------------------------------------------------------------------------
# validation


def test_two_squares_sharing_an_edge_are_valid():
    C = build_complex(2, [(0, 1, 2, 3), (2, 3, 4, 5)])
    assert C.f_vector() == (6, 7, 2)
    rep = validate(C)
    assert rep.is_complex
    assert rep.violations == ()


def test_two_squares_sharing_a_diagonal_are_invalid():
    C = build_complex(2, [(0, 1, 2, 3), (3, 4, 0, 5)])
    rep = validate(C)
    assert not rep.is_complex
    assert any(reason == "shared-diagonal" for *_, reason in rep.violations)


def test_three_shared_vertices_is_a_non_face_intersection():
    C = build_complex(2, [(0, 1, 2, 3), (0, 1, 4, 3)])
    rep = validate(C)
    assert not rep.is_complex
    assert any(reason == "non-face intersection" for *_, reason in rep.violations)


def test_boundary_cube_is_valid_closed_pseudomanifold():
    rep = validate(boundary_c3())
    assert rep.is_complex and rep.is_closed_pseudomanifold


def test_restricted_validation_sees_seam_violations():
    C = build_complex(2, [(0, 1, 2, 3), (3, 4, 0, 5)])
    rep = validate(C, restrict_to={0, 3})
    assert not rep.is_complex
    rep2 = validate(C, restrict_to={1})
    assert rep2.is_complex  # the bad pair does not meet the restricted seam


# ---------------------------------------------------------------------------
# links, manifolds, bounds, bipartition


def test_vertex_link_of_boundary_cube_is_triangle_cycle():
    link = vertex_link(boundary_c3(), 0)
    assert {s for s in link if len(s) == 1} == {
        frozenset({1}),
        frozenset({2}),
        frozenset({4}),
    }
    assert {s for s in link if len(s) == 2} == {
        frozenset({1, 2}),
        frozenset({1, 4}),
        frozenset({2, 4}),
    }


def test_manifold_check_rejects_pinched_surface():
    # two squares glued at a single vertex: link at the pinch is two points
    C = build_complex(2, [(0, 1, 2, 3), (3, 4, 5, 6)])
    assert not manifold_check(C, 2)


def test_manifold_check_dim3_boundary_c4():
    c4 = tuple(range(16))
    C = build_complex(3, list(cube_faces(c4)))
    assert C.f_vector() == (16, 32, 24, 8)
    assert manifold_check(C, 3)


def test_upper_bound_checks_on_boundary_cube():
    rep = upper_bound_checks(boundary_c3())
    assert isinstance(rep, BoundReport)
    assert rep.facet_bound == 8 * 7 // 4
    assert rep.facet_bound_ok
    assert rep.cube_bound is None


def test_upper_bound_checks_dim3():
    c4 = tuple(range(16))
    C = build_complex(3, list(cube_faces(c4)))
    rep = upper_bound_checks(C)
    assert rep.facet_bound_ok
    assert rep.cube_bound == 16 * 16 // 24
    assert rep.cube_bound_ok


def test_bipartite_classes_of_boundary_cube():
    zero, one = bipartite_classes(boundary_c3())
    assert zero == frozenset({0, 3, 5, 6})
    assert one == frozenset({1, 2, 4, 7})


def test_bipartite_classes_odd_cycle():
    C = CubeComplex.from_cells(1, 3, {1: [(0, 1), (0, 2), (1, 2)], 0: [(0,), (1,), (2,)]})
    with pytest.raises(OddCycleError):
        bipartite_classes(C)


# ---------------------------------------------------------------------------
# interchange format


def test_text_round_trip():
    C = boundary_c3()
    text = to_text(C)
    assert text.splitlines()[0] == "cubecomplex 2 8"
    assert from_text(text) == C
    assert to_text(from_text(text)) == text


def test_text_comments_and_errors():
    good = "# comment\ncubecomplex 2 4\ncube 2 0 1 2 3  # inline\n"
    assert from_text(good).f_vector() == (4, 4, 1)
    with pytest.raises(MalformedCubeError, match="header"):
        from_text("cube 2 0 1 2 3\n")
    with pytest.raises(MalformedCubeError, match="corners"):
        from_text("cubecomplex 2 4\ncube 2 0 1 2\n")
    with pytest.raises(MalformedCubeError, match="unknown"):
        from_text("cubecomplex 2 4\nsquare 0 1 2 3\n")


def test_json_round_trip():
    C = build_complex(2, [(0, 1, 2, 3), (2, 3, 4, 5), (4, 5)])
    assert from_json_obj(to_json_obj(C)) == C
