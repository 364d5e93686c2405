"""Sphere assembly: cylinders over a surface, handlebody caps, dimension raising.

The 3-sphere pipeline works outward from a closed quadrangulated surface Q.
A product cylinder Q x I_k supplies almost all facets at (k+1) * f0(Q)
vertices.  Each end is continued by a refining cylinder that interpolates
between Q and a fine quadrangulation Q'' in a single step: over every square
F of Q sits a pillow, the 2-sphere made of F at the bottom, the patch of Q''
over F at the top, and subdivided walls over the edges of F.  Filling every
pillow with solid cubes and insetting a cube into each produces the cylinder.
The two Q'' ends are then closed by handlebodies: cut Q'' along half of a
basis of curves, cap with disks, and the result is a sphere which bounds a
ball after one more product layer.  Gluing the five pieces yields a complex
with the homology of S^3.

Fills go through fillball's search, which is incomplete, so every stage comes
in two levels: "full" carries the complexes, "structural" carries verified
FillRequests describing exactly the spheres a full run would have to fill.

induct_dimension raises dimension by doubling: remove one facet from a
d-sphere S, take the product of the remaining ball with two intervals, and
return the boundary.  Vertices grow exactly 4x and facets at least 2x.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .core import (
    CubeComplex,
    CubeComplexError,
    build_complex,
    bipartite_classes,
    canonical,
    cube_faces,
    manifold_check,
    upper_bound_checks,
    validate,
)
from .topology import betti_numbers, homology_sphere_check, surface_invariants
from .transforms import (
    GADGETS,
    boundary_complex,
    cartesian_product,
    cut_along_curve,
    glue,
    interval_complex,
)
from .transforms import remove_facet as _remove_facet
from .fillball import DEFAULT_BUDGET, FillFailed, fill_ball
from .basis import EdgePathBasis, RefineReport, canonical_basis, refine_report, \
    regularize_with_chains
from .surface_gen import _is_odd_prime, surface_report

__all__ = [
    "AssemblyError",
    "FillRequest",
    "check_fill_request",
    "CylinderReport",
    "HandlebodyReport",
    "StructuralReport",
    "PipelineCensus",
    "refining_cylinder",
    "handlebody",
    "assemble_sphere3",
    "sphere3",
    "induct_dimension",
    "sphere_d",
]

Edge = tuple[int, int]

# a product cylinder beyond this many cubes is censused but not materialized
PRODUCT_BUILD_LIMIT = 20_000


class AssemblyError(CubeComplexError):
    pass


# ---------------------------------------------------------------------------
# fill requests


@dataclass(frozen=True)
class FillRequest:
    """A 2-sphere some stage needs filled, with where it came from."""

    sphere: CubeComplex
    origin: str


def check_fill_request(req: FillRequest) -> None:
    """Assert the filling lemma's hypotheses: a valid closed orientable
    quadrangulated 2-sphere with an even number of squares."""
    S = req.sphere
    if S.dim != 2:
        raise AssemblyError(f"{req.origin}: not a 2-complex")
    rep = validate(S)
    if not rep.is_complex:
        raise AssemblyError(f"{req.origin}: not a valid complex")
    closed, orientable, genus = surface_invariants(S)
    if not closed:
        raise AssemblyError(f"{req.origin}: surface is not closed")
    if not orientable or genus != 0:
        raise AssemblyError(f"{req.origin}: not a 2-sphere (genus {genus})")
    if len(S.cells[2]) % 2:
        raise AssemblyError(f"{req.origin}: odd number of squares")


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class CylinderReport:
    """Refining cylinder between a surface and its refinement.

    complex is None at the structural level; end is the adjusted
    refinement Q'' forming the far end.  In the built complex the near
    end keeps the surface's own vertex ids and the far end sits at
    offset f0(surface), in Q'' id order.
    """

    complex: CubeComplex | None
    end: CubeComplex
    requests: tuple[FillRequest, ...]
    level: str                     # "full" | "structural"
    failed: tuple[int, ...]        # request indices whose fill ran out
    census: dict[str, int]


@dataclass(frozen=True)
class HandlebodyReport:
    """Handlebody bounded by Q'': cut along curves, cap, thicken, fill.

    boundary_map sends each Q'' vertex to its id in the built complex;
    sphere is the genus-0 surface whose filling closes the far end.
    """

    complex: CubeComplex | None
    boundary_map: dict[int, int] | None
    sphere: CubeComplex
    requests: tuple[FillRequest, ...]
    level: str
    census: dict[str, int]
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class StructuralReport:
    """What a full run still has to fill, when the fills are out of reach."""

    requests: tuple[FillRequest, ...]
    stage_levels: dict[str, str]
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class PipelineCensus:
    """Cell bookkeeping for one pipeline run.

    stage_f holds f-vectors of the stages that were materialized.
    scaffold_vertices counts every vertex the construction pins down
    before any ball is filled (product cylinder, both refining
    cylinders' walls and ends, handlebody disks and far spheres);
    growth_constant is (scaffold - product part) / n^4.
    """

    n: int
    k: int
    d: int
    stage_f: dict[str, tuple[int, ...]]
    pillows: int
    pillow_squares: int
    parity_fixes: int
    predicted_cylinder_vertices: int
    measured_cylinder_vertices: int
    predicted_cylinder_cubes: int
    measured_cylinder_cubes: int
    cylinder_built: bool
    scaffold_vertices: int
    growth_constant: float


# ---------------------------------------------------------------------------
# refining cylinder


def _face_edge_keys(t: tuple[int, ...]) -> tuple[Edge, Edge, Edge, Edge]:
    a, b, c, d = t  # boundary walk a-b-d-c
    pairs = ((a, b), (b, d), (d, c), (c, a))
    return tuple(tuple(sorted(p)) for p in pairs)  # type: ignore[return-value]


def _wheel(cycle: Sequence[int], center: int) -> list[tuple[int, ...]]:
    """Disk over an even cycle: one quad per pair of consecutive edges."""
    L = len(cycle)
    if L % 2 or L < 4:
        raise AssemblyError(f"wheel needs an even cycle, got length {L}")
    out = []
    for i in range(0, L, 2):
        a, b, c = cycle[i], cycle[i + 1], cycle[(i + 2) % L]
        out.append((a, b, center, c))
    return out


def _vertex_images(chains: dict[Edge, tuple[int, ...]]) -> dict[int, int]:
    """Surface vertex -> refinement vertex, from the chain endpoints.

    Chains run low endpoint first, so (u, v) with u < v starts at the
    image of u.  Disagreement between two chains at a shared endpoint
    means the chains do not belong to this surface.
    """
    vmap: dict[int, int] = {}
    for (u, v), path in chains.items():
        for q, x in ((u, path[0]), (v, path[-1])):
            if vmap.setdefault(q, x) != x:
                raise AssemblyError(
                    f"chain endpoints disagree at surface vertex {q}")
    return vmap


def _patch_map(Q: CubeComplex, Qp: CubeComplex,
               chains: dict[Edge, tuple[int, ...]]
               ) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
    """Partition the refinement's squares into patches over the base squares.

    The subdivided base edges are walls; two squares of the refinement
    sharing a wall edge lie over different base squares, everything else
    connects.  Each component is identified by intersecting, over the
    walls it touches, the pairs of base squares those walls bound.
    """
    wall_of: dict[frozenset[int], Edge] = {}
    for key, path in chains.items():
        for a, b in zip(path, path[1:]):
            pe = frozenset((a, b))
            if wall_of.setdefault(pe, key) != key:
                raise AssemblyError("two subdivided edges share a segment")

    sqs = Qp.cells[2]
    by_edge: dict[frozenset[int], list[int]] = {}
    for idx, t in enumerate(sqs):
        a, b, c, d = t
        for p in ((a, b), (b, d), (d, c), (c, a)):
            by_edge.setdefault(frozenset(p), []).append(idx)
    for pe in wall_of:
        if len(by_edge.get(pe, ())) != 2:
            raise AssemblyError(
                f"subdivided edge segment {tuple(sorted(pe))} is not an "
                "interior edge of the refinement")

    comp = [-1] * len(sqs)
    n_comp = 0
    for start in range(len(sqs)):
        if comp[start] >= 0:
            continue
        comp[start] = n_comp
        stack = [start]
        while stack:
            i = stack.pop()
            a, b, c, d = sqs[i]
            for p in ((a, b), (b, d), (d, c), (c, a)):
                pe = frozenset(p)
                if pe in wall_of:
                    continue
                for j in by_edge[pe]:
                    if comp[j] < 0:
                        comp[j] = n_comp
                        stack.append(j)
        n_comp += 1

    faces_of_chain: dict[Edge, set[tuple[int, ...]]] = {}
    for F in Q.cells[2]:
        for e in _face_edge_keys(F):
            faces_of_chain.setdefault(e, set()).add(F)

    touched: list[set[Edge]] = [set() for _ in range(n_comp)]
    for idx, t in enumerate(sqs):
        a, b, c, d = t
        for p in ((a, b), (b, d), (d, c), (c, a)):
            key = wall_of.get(frozenset(p))
            if key is not None:
                touched[comp[idx]].add(key)

    patches: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for ci in range(n_comp):
        if not touched[ci]:
            raise AssemblyError("refinement has squares bounded by no "
                                "subdivided edge; patches are undefined")
        cands: set[tuple[int, ...]] | None = None
        for key in touched[ci]:
            fs = faces_of_chain.get(key)
            if fs is None:
                raise AssemblyError(f"chain {key} is not an edge of the base")
            cands = set(fs) if cands is None else cands & fs
        if not cands or len(cands) != 1:
            raise AssemblyError("patch does not sit over a unique base square")
        F = cands.pop()
        if F in patches:
            raise AssemblyError(f"two patches over base square {F}")
        patches[F] = [sqs[i] for i in range(len(sqs)) if comp[i] == ci]
    missing = set(Q.cells[2]) - set(patches)
    if missing:
        raise AssemblyError(f"no patch over base square {sorted(missing)[0]}")
    return patches


def refining_cylinder(Q: CubeComplex, Qp, Bpp: EdgePathBasis | None = None, *,
                      chains: dict[Edge, tuple[int, ...]] | None = None,
                      structural: bool = False,
                      budget: int = DEFAULT_BUDGET) -> CylinderReport:
    """Cylinder interpolating between Q and its refinement in one step.

    Qp may be a RefineReport (chains and basis are taken from it) or a
    plain complex with `chains` mapping each base edge to its subdivided
    vertex path.  Passing Qp equal to Q stands for the trivial
    refinement and yields a plain product layer.

    Every base edge must be subdivided into the same parity of edge
    counts: evenly for a genuine refinement, or not at all.  In the even
    case the vertical edge over each vertex of the lexicographically
    smaller bipartition class is split in two, which makes every wall an
    even cycle and every pillow an even sphere after at most one
    10-square split of a patch square (recorded as the parity fixes that
    turn the refinement into the returned end Q'').

    Full level fills every pillow and insets a cube into each solid
    cube; on any fill failure the report drops to the structural level
    with the complete pillow list.
    """
    if isinstance(Qp, RefineReport):
        if chains is None:
            chains = Qp.edge_chains
        if Bpp is None:
            Bpp = Qp.basis
        Qp = Qp.complex
    if chains is None:
        if Qp == Q:
            chains = {tuple(e): tuple(e) for e in Q.cells[1]}
        else:
            raise AssemblyError("a refinement needs its edge chains")

    for C, tag in ((Q, "base"), (Qp, "refinement")):
        if C.dim != 2:
            raise AssemblyError(f"{tag} must be a 2-complex")
        closed, orientable, _ = surface_invariants(C)
        if not (closed and orientable):
            raise AssemblyError(f"{tag} is not a closed orientable surface")
    if set(chains) != set(Q.cells[1]):
        raise AssemblyError("chains must cover the base edges exactly")

    lengths = {len(p) - 1 for p in chains.values()}
    if lengths == {1}:
        split: frozenset[int] = frozenset()
    elif all(l > 0 and l % 2 == 0 for l in lengths):
        zero, one = bipartite_classes(Q)
        split = min(zero, one, key=sorted)
    else:
        raise AssemblyError("every base edge must be subdivided evenly")

    vmap = _vertex_images(chains)
    patches = _patch_map(Q, Qp, chains)
    curve_verts: set[int] = set()
    if Bpp is not None:
        curve_verts = {v for path in Bpp.curves for v in path}

    # wall sizes, then one 10-square parity fix per odd pillow
    wall_half: dict[Edge, int] = {}
    for e, path in chains.items():
        u, v = e
        L = 1 + (len(path) - 1) + (2 if u in split else 1) \
            + (2 if v in split else 1)
        if L % 2:
            raise AssemblyError(f"wall over edge {e} has odd length {L}")
        wall_half[e] = L // 2

    fixes: dict[tuple[int, ...], tuple[int, ...]] = {}
    for F in Q.cells[2]:
        total = 1 + sum(wall_half[e] for e in _face_edge_keys(F)) \
            + len(patches[F])
        if total % 2:
            free = sorted(t for t in patches[F] if not set(t) & curve_verts)
            if not free:
                raise AssemblyError(
                    f"no square over {F} clear of the basis curves; cannot "
                    "fix the pillow parity")
            fixes[F] = free[0]

    if fixes:
        drop = set(fixes.values())
        tops = [t for t in Qp.cells[2] if t not in drop]
        base_id = Qp.n_vertices
        for F in sorted(fixes):
            cells10 = [canonical(c) for c in
                       GADGETS["square_10"].build(fixes[F], base_id)]
            base_id += GADGETS["square_10"].n_new_vertices
            tops.extend(cells10)
            patches[F] = [s for s in patches[F] if s != fixes[F]] + cells10
        Qpp = build_complex(2, tops, n_vertices=base_id)
    else:
        Qpp = Qp
    if (len(Qpp.cells[2]) - len(Q.cells[2])) % 2:
        raise AssemblyError("parity fixes failed to preserve square parity")
    if curve_verts:
        edges = set(Qpp.cells[1])
        for path in Bpp.curves:
            for i in range(len(path)):
                e = tuple(sorted((path[i], path[(i + 1) % len(path)])))
                if e not in edges:
                    raise AssemblyError(
                        "a parity fix destroyed a basis curve edge")

    # global id layout: base copy, then Q'' at offset f0, then verticals,
    # wall centers, and finally whatever the fills add
    nb = Q.n_vertices
    T0 = nb
    nxt = nb + Qpp.n_vertices
    mid: dict[int, int] = {}
    for v in sorted(split):
        mid[v] = nxt
        nxt += 1
    # Wall over (u, v): bottom edge, one vertical per endpoint (the split
    # one broken at its midpoint), the subdivided edge on top.  The wheel
    # cuts the cycle at even positions, so the walk starts two steps before
    # the midpoint: otherwise both vertical edges of the split endpoint end
    # up in one quad, and the neighboring wall would share three vertices
    # with it instead of an edge.
    walls: dict[Edge, list[tuple[int, ...]]] = {}
    n_centers = 0
    for e in sorted(chains):
        u, v = e
        path = chains[e]  # images of u .. v
        if v in split:
            cyc = [u, v, mid[v]]
            cyc.extend(T0 + x for x in reversed(path))
        elif u in split:
            cyc = [v, u, mid[u]]
            cyc.extend(T0 + x for x in path)
        else:
            cyc = [u, v]
            cyc.extend(T0 + x for x in reversed(path))
        if len(cyc) == 4:
            walls[e] = [(cyc[0], cyc[1], cyc[3], cyc[2])]
        else:
            walls[e] = _wheel(cyc, nxt)
            nxt += 1
            n_centers += 1
    scaffold = nxt

    requests: list[FillRequest] = []
    failed: list[int] = []
    all_cubes: list[tuple[int, ...]] = []
    for F in Q.cells[2]:
        sqs: list[tuple[int, ...]] = [F]
        for e in _face_edge_keys(F):
            sqs.extend(walls[e])
        sqs.extend(tuple(T0 + x for x in t) for t in patches[F])
        used = sorted({v for t in sqs for v in t})
        g2l = {g: i for i, g in enumerate(used)}
        local = build_complex(2, [tuple(g2l[v] for v in t) for t in sqs])
        req = FillRequest(local, f"pillow over base square {F}")
        check_fill_request(req)
        requests.append(req)
        if structural or failed:
            continue
        try:
            cert = fill_ball(local, budget=budget)
        except FillFailed:
            failed.append(len(requests) - 1)
            continue
        l2g = dict(enumerate(used))
        for lid in range(local.n_vertices, cert.ball.n_vertices):
            l2g[lid] = nxt
            nxt += 1
        all_cubes.extend(tuple(l2g[v] for v in cube)
                         for cube in cert.ball.cells[3])

    census = {
        "pillows": len(requests),
        "pillow_squares": sum(len(r.sphere.cells[2]) for r in requests),
        "splits": len(mid),
        "wall_centers": n_centers,
        "parity_fixes": len(fixes),
        "scaffold_vertices": scaffold,
    }
    if structural or failed:
        return CylinderReport(None, Qpp, tuple(requests), "structural",
                              tuple(failed), census)

    census["filled_cubes"] = len(all_cubes)
    inset = []
    g7 = GADGETS["inset_cube_7"]
    for cube in all_cubes:
        inset.extend(g7.build(cube, nxt))
        nxt += g7.n_new_vertices
    cyl = build_complex(3, inset, n_vertices=nxt)
    rep = validate(cyl)
    if not rep.is_complex:
        raise AssemblyError(
            f"pillow fills do not assemble: {rep.violations[:2]}")
    rim = _rim(cyl)
    want = set(Q.cells[2]) | {tuple(T0 + x for x in t) for t in Qpp.cells[2]}
    if rim != want:
        raise AssemblyError("cylinder boundary is not the two ends")
    census["inset_cubes"] = len(cyl.cells[3])
    return CylinderReport(cyl, Qpp, tuple(requests), "full", (), census)


def _rim(C: CubeComplex) -> set[tuple[int, ...]]:
    """Squares lying in exactly one cube."""
    count: dict[tuple[int, ...], int] = {}
    for cube in C.cells[3]:
        for f in cube_faces(cube):
            key = canonical(f)
            count[key] = count.get(key, 0) + 1
    return {f for f, m in count.items() if m == 1}


# ---------------------------------------------------------------------------
# handlebody


def _disk_cells(cycle: Sequence[int], base: int
                ) -> tuple[list[tuple[int, ...]], int]:
    """Capping disk: wheel over the cycle, every quad subdivided in five."""
    cells: list[tuple[int, ...]] = []
    nxt = base + 1
    g5 = GADGETS["insert_square_5"]
    for q in _wheel(cycle, base):
        cells.extend(g5.build(q, nxt))
        nxt += g5.n_new_vertices
    return cells, nxt - base


def handlebody(Qpp: CubeComplex, curves: Sequence[Sequence[int]], *,
               structural: bool = False,
               budget: int = DEFAULT_BUDGET) -> HandlebodyReport:
    """Handlebody bounded by Qpp, built by cutting along the given curves.

    Cut Qpp along each curve, cap both copies of each cut circle with a
    disk of half the curve's length in subdivided squares; the result
    must be a 2-sphere with evenly many squares.  The solid is that
    sphere times an interval with the two disk copies identified at one
    end and a filled ball at the other.  The identified end's boundary
    is Qpp again, reached through boundary_map.

    With no curves the input must already be a sphere and the handlebody
    is a thickened ball.  The far ball is filled as-is, without cube
    insets.
    """
    if Qpp.dim != 2:
        raise AssemblyError("handlebody needs a 2-complex")
    closed, orientable, genus = surface_invariants(Qpp)
    if not (closed and orientable):
        raise AssemblyError("handlebody needs a closed orientable surface")

    S = Qpp
    copy_ids: list[tuple[int, ...]] = []
    for c in curves:
        c = tuple(c)
        if len(c) % 2:
            raise AssemblyError(f"curve length {len(c)} is odd; the capping "
                                "disk needs an even cycle")
        base = S.n_vertices
        S = cut_along_curve(S, c)  # copies sit at base .. base+len-1
        copy_ids.append(tuple(range(base, base + len(c))))

    tops = list(S.cells[2])
    nxt = S.n_vertices
    disk_interiors: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    for c, cp in zip(curves, copy_ids):
        sides = []
        for cycle in (tuple(c), cp):
            cells, used = _disk_cells(cycle, nxt)
            tops.extend(cells)
            sides.append(tuple(range(nxt, nxt + used)))
            nxt += used
        disk_interiors.append((sides[0], sides[1]))
    sphere = build_complex(2, tops, n_vertices=nxt)

    closed, orientable, genus = surface_invariants(sphere)
    if not (closed and orientable and genus == 0):
        raise AssemblyError(
            f"cutting and capping left genus {genus}, not a sphere; the "
            "curves are not half of a basis")
    req = FillRequest(sphere, "handlebody end")
    check_fill_request(req)

    census = {
        "curves": len(curves),
        "cut_vertices": sum(len(c) for c in curves),
        "disk_squares": sum(5 * (len(c) // 2) for c in curves) * 2,
        "sphere_squares": len(sphere.cells[2]),
        "prism_cubes": len(sphere.cells[2]),
        "extra_vertices": sphere.n_vertices
        + sum(len(a) for a, _ in disk_interiors),
    }
    if structural:
        return HandlebodyReport(None, None, sphere, (req,), "structural",
                                census)

    try:
        cert = fill_ball(sphere, budget=budget)
    except FillFailed as e:
        return HandlebodyReport(None, None, sphere, (req,), "structural",
                                census, notes=(str(e),))

    P = cartesian_product(sphere, interval_complex(1))  # (x, t) -> 2x + t
    pairs: dict[int, int] = {}
    for c, cp, (in1, in2) in zip(curves, copy_ids, disk_interiors):
        for a, b in zip(cp, c):
            pairs[2 * a] = 2 * b
        for a, b in zip(in2, in1):
            pairs[2 * a] = 2 * b
    if pairs:
        H0, qmap = glue(P, P, pairs, with_map=True)
    else:
        H0, qmap = P, {v: v for v in range(P.n_vertices)}

    l2g = {x: qmap[2 * x + 1] for x in range(sphere.n_vertices)}
    fresh = H0.n_vertices
    for lid in range(sphere.n_vertices, cert.ball.n_vertices):
        l2g[lid] = fresh
        fresh += 1
    cubes = list(H0.cells[3])
    cubes.extend(tuple(l2g[v] for v in cube) for cube in cert.ball.cells[3])
    H = build_complex(3, cubes, n_vertices=fresh)
    rep = validate(H)
    if not rep.is_complex:
        raise AssemblyError(
            f"handlebody pieces do not assemble: {rep.violations[:2]}")

    bmap = {v: qmap[2 * v] for v in range(Qpp.n_vertices)}
    rim = _rim(H)
    want = {canonical([bmap[v] for v in t]) for t in Qpp.cells[2]}
    if rim != want:
        raise AssemblyError("handlebody boundary is not the input surface")
    census["fill_cubes"] = len(cert.ball.cells[3])
    return HandlebodyReport(H, bmap, sphere, (req,), "full", census)


# ---------------------------------------------------------------------------
# assembly


def assemble_sphere3(Q: CubeComplex, k: int, cyl: CylinderReport,
                     hb_bottom: HandlebodyReport, hb_top: HandlebodyReport,
                     ) -> CubeComplex:
    """Glue product cylinder, two refining cylinders and two handlebodies.

    The same cylinder report serves both ends (the construction is
    id-for-id identical on either side); the handlebodies may differ.
    All three reports must be at the full level.  The result is checked
    to be a closed pseudomanifold with the homology of S^3 whose vertex
    links are spheres.
    """
    if cyl.level != "full" or hb_bottom.level != "full" \
            or hb_top.level != "full":
        raise AssemblyError("assembly needs every piece at the full level")
    if k < 1:
        raise AssemblyError("the product cylinder needs at least one layer")
    nb = Q.n_vertices
    n_end = cyl.end.n_vertices

    P = cartesian_product(Q, interval_complex(k))
    A, m1 = glue(P, cyl.complex,
                 {v: v * (k + 1) for v in range(nb)}, with_map=True)
    A, m2 = glue(A, cyl.complex,
                 {v: v * (k + 1) + k for v in range(nb)}, with_map=True)
    A, _ = glue(A, hb_bottom.complex,
                {hb_bottom.boundary_map[x]: m1[nb + x] for x in range(n_end)},
                with_map=True)
    A, _ = glue(A, hb_top.complex,
                {hb_top.boundary_map[x]: m2[nb + x] for x in range(n_end)},
                with_map=True)

    rep = validate(A)
    if not rep.is_complex or not rep.is_closed_pseudomanifold:
        raise AssemblyError("assembled complex is not a closed pseudomanifold")
    prof = betti_numbers(A, "z") if sum(A.f_vector()) <= 20_000 \
        else betti_numbers(A, "q")
    if prof.betti != (1, 0, 0, 1):
        raise AssemblyError(f"assembled homology is {prof.betti}, "
                            "not a 3-sphere's")
    if not manifold_check(A, 3):
        raise AssemblyError("assembled complex has a bad vertex link")
    return A


def _split_alpha_beta(B: EdgePathBasis
                      ) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    # curves come in handle pairs (a_1, b_1, a_2, b_2, ...); the a side is
    # cut inside the bottom handlebody, the b side outside in the top one
    return list(B.curves[0::2]), list(B.curves[1::2])


def sphere3(n: int, k: int | None = None, *, structural: bool = False,
            budget: int = DEFAULT_BUDGET
            ) -> tuple[CubeComplex | StructuralReport, PipelineCensus]:
    """Run the full 3-sphere pipeline at scale n.

    n must be an odd prime at least 11; k (the product cylinder length)
    defaults to n^3.  Returns the complex and its census on full
    success, otherwise a StructuralReport whose FillRequests have all
    been verified against the filling lemma's hypotheses.
    """
    if not _is_odd_prime(n) or n < 11:
        raise AssemblyError("n must be an odd prime at least 11")
    if k is None:
        k = n ** 3
    if k < 1:
        raise AssemblyError("k must be at least 1")

    Q, _srep = surface_report(n)
    B = canonical_basis(Q)
    rep = refine_report(Q, B)
    Q2, B2, _certs, chains2 = regularize_with_chains(
        rep.complex, rep.basis, rep.edge_chains)

    cyl = refining_cylinder(Q, Q2, B2, chains=chains2,
                            structural=structural, budget=budget)
    alpha, beta = _split_alpha_beta(B2)
    hb_kwargs = dict(structural=structural or cyl.level != "full",
                     budget=budget)
    hbA = handlebody(cyl.end, alpha, **hb_kwargs)
    hbB = handlebody(cyl.end, beta, **hb_kwargs)

    f_Q = Q.f_vector()
    predicted_v = (k + 1) * f_Q[0]
    predicted_c = k * f_Q[2]
    stage_f: dict[str, tuple[int, ...]] = {
        "surface": f_Q,
        "refined": Q2.f_vector(),
        "end": cyl.end.f_vector(),
        "sphere_bottom": hbA.sphere.f_vector(),
        "sphere_top": hbB.sphere.f_vector(),
    }
    build_product = predicted_c <= PRODUCT_BUILD_LIMIT
    measured_v, measured_c = predicted_v, predicted_c
    if build_product:
        P = cartesian_product(Q, interval_complex(k))
        stage_f["cylinder"] = P.f_vector()
        measured_v, measured_c = P.f_vector()[0], P.f_vector()[3]

    cyl_extra = cyl.census["scaffold_vertices"] - f_Q[0]
    scaffold = predicted_v + 2 * cyl_extra \
        + hbA.census["extra_vertices"] + hbB.census["extra_vertices"]
    census = PipelineCensus(
        n=n, k=k, d=3,
        stage_f=stage_f,
        pillows=cyl.census["pillows"],
        pillow_squares=cyl.census["pillow_squares"],
        parity_fixes=cyl.census["parity_fixes"],
        predicted_cylinder_vertices=predicted_v,
        measured_cylinder_vertices=measured_v,
        predicted_cylinder_cubes=predicted_c,
        measured_cylinder_cubes=measured_c,
        cylinder_built=build_product,
        scaffold_vertices=scaffold,
        growth_constant=(scaffold - predicted_v) / n ** 4,
    )

    if cyl.level == "full" and hbA.level == "full" and hbB.level == "full":
        S3 = assemble_sphere3(Q, k, cyl, hbA, hbB)
        bounds = upper_bound_checks(S3)
        if not bounds.facet_bound_ok or bounds.cube_bound_ok is False:
            raise AssemblyError("assembled sphere exceeds the facet bounds")
        stage_f = dict(stage_f)
        stage_f["final"] = S3.f_vector()
        census = replace(census, stage_f=stage_f)
        return S3, census

    levels = {
        "refining_cylinder": cyl.level,
        "handlebody_bottom": hbA.level,
        "handlebody_top": hbB.level,
    }
    report = StructuralReport(
        requests=tuple(cyl.requests) + tuple(hbA.requests)
        + tuple(hbB.requests),
        stage_levels=levels,
        notes=("the refining cylinder is built once and used at both ends; "
               "its pillow fills are shared",),
    )
    return report, census


# ---------------------------------------------------------------------------
# raising dimension


def induct_dimension(S: CubeComplex, facet=None) -> CubeComplex:
    """One doubling step: a cubulated d-sphere to a (d+1)-sphere.

    Remove the interior of one facet (the first in canonical order by
    default), thicken the remaining ball by two interval products, and
    take the boundary.  The output has exactly 4 * f0(S) vertices and at
    least twice as many facets, and is checked to be a homology sphere.
    """
    d = S.dim
    if d < 2:
        raise AssemblyError("dimension raising needs a sphere of dim >= 2")
    rep = validate(S)
    if not rep.is_complex or not rep.is_closed_pseudomanifold:
        raise AssemblyError("input is not a closed pseudomanifold")
    if not homology_sphere_check(S, d):
        raise AssemblyError("input does not have sphere homology")

    target = canonical(facet) if facet is not None else S.cells[d][0]
    Q = _remove_facet(S, target)
    P = cartesian_product(Q, interval_complex(1))
    out = boundary_complex(cartesian_product(P, interval_complex(1)))

    if out.n_vertices != 4 * S.n_vertices:
        raise AssemblyError("vertex count is off; input was not a sphere")
    if len(out.cells[d + 1]) < 2 * len(S.cells[d]):
        raise AssemblyError("facet count did not double")
    if not homology_sphere_check(out, d + 1):
        raise AssemblyError("doubling lost the sphere homology")
    return out


def sphere_d(d: int, n: int, k: int | None = None, *,
             structural: bool = False, budget: int = DEFAULT_BUDGET
             ) -> tuple[CubeComplex | StructuralReport, PipelineCensus]:
    """d-sphere within a vertex budget of n, by doubling a 3-sphere run.

    Picks the largest usable prime p so that the predicted vertex count
    after d-3 doublings stays at most n, runs the 3-sphere pipeline
    there, and doubles.  Doubling needs the full complex, so a
    structural 3-sphere run ends the climb early with its report.
    """
    if d < 3:
        raise AssemblyError("dimension must be at least 3")
    if n < 2 ** (d + 1):
        raise AssemblyError(
            f"need at least 2^(d+1) = {2 ** (d + 1)} vertices in dim {d}")

    # predicted vertices: the product cylinder exactly, plus an n^4
    # allowance for the refinement stages (their measured constant is
    # well under 1); grows like p^4, so the scan terminates
    budget3 = n // 4 ** (d - 3)
    best = None
    p = 11
    while True:
        if _is_odd_prime(p):
            Qp, _ = surface_report(p)
            kp = k if k is not None else p ** 3
            if (kp + 1) * Qp.n_vertices + p ** 4 > budget3:
                break
            best = p
        p += 2
    if best is None:
        raise AssemblyError(
            f"no pipeline scale fits {budget3} vertices; the smallest run "
            "needs more room")

    result, census = sphere3(best, k=k, structural=structural, budget=budget)
    if d == 3:
        return result, census
    if isinstance(result, StructuralReport):
        notes = result.notes + (
            f"doubling to dimension {d} needs the full 3-sphere complex",)
        return replace(result, notes=notes), replace(census, d=d)

    S = result
    for _ in range(d - 3):
        S = induct_dimension(S)
    if S.n_vertices > n:
        raise AssemblyError("doubling exceeded the vertex budget")
    stage_f = dict(census.stage_f)
    stage_f["final"] = S.f_vector()
    return S, replace(census, d=d, stage_f=stage_f)
