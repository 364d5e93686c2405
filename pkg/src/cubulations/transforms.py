"""Reusable constructions: products, gadget subdivisions, glue/cut, warm-up.

Vertex id conventions are fixed and documented per operation so that outputs
are reproducible byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .core import (
    Cube,
    CubeComplex,
    CubeComplexError,
    build_complex,
    canonical,
    cube_faces,
    relabel,
    relabel_dense,
    validate,
)


class GlueError(CubeComplexError):
    pass


class CutError(CubeComplexError):
    pass


# ---------------------------------------------------------------------------
# products


def cartesian_product(A: CubeComplex, B: CubeComplex) -> CubeComplex:
    """Product complex. Vertex (a, b) becomes a * B.n_vertices + b; in a
    product cube the factor-A coordinates occupy the low bit positions."""
    nb = B.n_vertices
    tops: list[tuple[int, ...]] = []
    amax = A.maximal_cells()
    bmax = B.maximal_cells()
    for ka in sorted(amax):
        for pa in amax[ka]:
            for kb in sorted(bmax):
                for pb in bmax[kb]:
                    size = 1 << (ka + kb)
                    corners = [0] * size
                    for cq in range(1 << kb):
                        base = pb[cq]
                        shifted = cq << ka
                        for cp in range(1 << ka):
                            corners[shifted | cp] = pa[cp] * nb + base
                    tops.append(tuple(corners))
    return build_complex(A.dim + B.dim, tops,
                         n_vertices=A.n_vertices * B.n_vertices)


def interval_complex(k: int) -> CubeComplex:
    """Path with k edges on vertices 0..k."""
    if k < 1:
        raise CubeComplexError("interval needs at least one edge")
    return build_complex(1, [(i, i + 1) for i in range(k)])


def _cycle4() -> CubeComplex:
    return build_complex(1, [(0, 1), (1, 2), (2, 3), (0, 3)])


def torus_complex(d: int) -> CubeComplex:
    """Product of d 4-cycles."""
    if d < 1:
        raise CubeComplexError("torus dimension must be at least 1")
    C = _cycle4()
    for _ in range(d - 1):
        C = cartesian_product(C, _cycle4())
    return C


# ---------------------------------------------------------------------------
# gadget templates

@dataclass(frozen=True)
class GadgetTemplate:
    name: str
    cell_dim: int
    n_new_vertices: int
    n_new_cells: int
    build: Callable[[Sequence[int], int], list[tuple[int, ...]]]


def _insert_square_5(q: Sequence[int], base: int) -> list[tuple[int, ...]]:
    i0, i1, i2, i3 = base, base + 1, base + 2, base + 3
    return [
        (i0, i1, i2, i3),
        (q[0], q[1], i0, i1),
        (q[2], q[3], i2, i3),
        (q[0], q[2], i0, i2),
        (q[1], q[3], i1, i3),
    ]


def _inset_cube_7(q: Sequence[int], base: int) -> list[tuple[int, ...]]:
    w = tuple(range(base, base + 8))
    cells = [w]
    for axis in range(3):
        for side in (0, 1):
            outer = [q[c] for c in range(8) if (c >> axis) & 1 == side]
            inner = [w[c] for c in range(8) if (c >> axis) & 1 == side]
            cells.append(tuple(outer + inner))  # radial direction = top bit
    return cells


def _square_10(q: Sequence[int], base: int) -> list[tuple[int, ...]]:
    # boundary cycle of the corner array (a, b, c, d) is a-b-d-c
    a, b, c, d = q
    i1, i2, i3, i4, w = base, base + 1, base + 2, base + 3, base + 4
    j1, j2, j3, j4 = base + 5, base + 6, base + 7, base + 8
    return [
        (w, a, d, b),
        (w, d, i2, i3),
        (w, i2, a, i1),
        (d, c, i3, i4),
        (c, a, i4, i1),
        (i1, i2, j1, j2),
        (i2, i3, j2, j3),
        (i3, i4, j3, j4),
        (i4, i1, j4, j1),
        (j1, j2, j4, j3),
    ]


GADGETS: dict[str, GadgetTemplate] = {
    "insert_square_5": GadgetTemplate("insert_square_5", 2, 4, 5, _insert_square_5),
    "inset_cube_7": GadgetTemplate("inset_cube_7", 3, 8, 7, _inset_cube_7),
    "square_10": GadgetTemplate("square_10", 2, 9, 10, _square_10),
}


def check_template(g: GadgetTemplate) -> None:
    """Template invariants: right cell/vertex counts, valid pattern, boundary
    of the replaced cell untouched."""
    k = g.cell_dim
    cell = tuple(range(1 << k))
    cells = g.build(cell, 1 << k)
    assert len(cells) == g.n_new_cells
    pattern = build_complex(k, cells)
    assert pattern.n_vertices == (1 << k) + g.n_new_vertices
    rep = validate(pattern)
    assert rep.is_complex, rep.violations
    outer = {canonical(f) for f in cube_faces(cell)}
    count: dict[tuple[int, ...], int] = {}
    for c in pattern.cells[k]:
        for f in cube_faces(c):
            key = canonical(f)
            count[key] = count.get(key, 0) + 1
    boundary = {f for f, n in count.items() if n == 1}
    assert boundary == outer, "pattern boundary differs from the replaced cell"


def apply_gadget(C: CubeComplex, cell, g) -> CubeComplex:
    """Replace one maximal cell by a gadget pattern; new ids start at
    C.n_vertices in the template's documented order."""
    if isinstance(g, str):
        if g not in GADGETS:
            raise CubeComplexError(f"unknown gadget {g!r}")
        g = GADGETS[g]
    corners = tuple(cell.corners if isinstance(cell, Cube) else cell)
    k = len(corners).bit_length() - 1
    if k != g.cell_dim:
        raise CubeComplexError(
            f"gadget {g.name} replaces {g.cell_dim}-cells, got a {k}-cell")
    target = canonical(corners)
    maximal = C.maximal_cells()
    if target not in set(maximal.get(k, ())):
        if target in set(C.cells.get(k, ())):
            raise CubeComplexError("cell is a face of a higher cell")
        raise CubeComplexError(f"cell {corners} not in complex")
    tops: list[tuple[int, ...]] = []
    for kk in sorted(maximal):
        for c in maximal[kk]:
            if kk == k and c == target:
                continue
            tops.append(c)
    tops.extend(g.build(target, C.n_vertices))
    return build_complex(C.dim, tops, n_vertices=C.n_vertices + g.n_new_vertices)


# ---------------------------------------------------------------------------
# glue / cut / boundary


@dataclass(frozen=True)
class VertexMap:
    """Injective partial vertex map, used to identify a subcomplex of B with
    a subcomplex of A when gluing."""

    pairs: dict[int, int]  # B vertex -> A vertex

    def __post_init__(self):
        vals = list(self.pairs.values())
        if len(set(vals)) != len(vals):
            raise GlueError("vertex map is not injective")


def _identified_cells(C: CubeComplex, verts: set[int]) -> dict[int, set[tuple[int, ...]]]:
    out: dict[int, set[tuple[int, ...]]] = {}
    for k, level in C.cells.items():
        got = {c for c in level if all(v in verts for v in c)}
        if got:
            out[k] = got
    return out


def glue(A: CubeComplex, B: CubeComplex, m, *,
         full_validation: bool = True,
         with_map: bool = False):
    """Glue B onto A along the vertex identification m (B ids -> A ids).

    The identified vertex sets must span isomorphic subcomplexes cell by
    cell. Passing the same object as A and B performs a self-identification
    (quotient), e.g. closing an interval into a cycle. The result is
    re-validated: fully by default, or only near the seam with
    full_validation=False. With with_map=True, returns (complex, mapping of
    B vertices into the result).
    """
    pairs = dict(m.pairs) if isinstance(m, VertexMap) else dict(m)
    if len(set(pairs.values())) != len(pairs):
        raise GlueError("vertex map is not injective")

    if B is A:
        if set(pairs) & set(pairs.values()):
            raise GlueError("self-gluing domain and image overlap")
        mapping = {v: pairs.get(v, v) for v in range(A.n_vertices)}
        for level in A.maximal_cells().values():
            for c in level:
                if len({mapping[v] for v in c}) != len(c):
                    raise GlueError(f"self-gluing degenerates cell {c}")
        quot = relabel(A, mapping, n_vertices=A.n_vertices)
        dense, old_to_new = relabel_dense(quot)
        seam = {old_to_new[v] for v in pairs.values() if v in old_to_new}
        rep = validate(dense, restrict_to=None if full_validation else seam)
        if not rep.is_complex:
            raise GlueError(f"gluing produced an invalid complex: "
                            f"{rep.violations[:3]}")
        if with_map:
            return dense, {v: old_to_new[mapping[v]] for v in range(A.n_vertices)}
        return dense

    domain = set(pairs)
    image = set(pairs.values())
    if any(v < 0 or v >= B.n_vertices for v in domain):
        raise GlueError("map domain outside B")
    if any(v < 0 or v >= A.n_vertices for v in image):
        raise GlueError("map image outside A")
    sub_b = _identified_cells(B, domain)
    sub_a = _identified_cells(A, image)
    mapped = {
        k: {canonical([pairs[v] for v in c]) for c in cells}
        for k, cells in sub_b.items()
    }
    if mapped != sub_a:
        raise GlueError("identified subcomplexes are not isomorphic under the map")

    fresh = A.n_vertices
    b_to_out: dict[int, int] = {}
    for v in range(B.n_vertices):
        if v in pairs:
            b_to_out[v] = pairs[v]
        else:
            b_to_out[v] = fresh
            fresh += 1
    tops: list[tuple[int, ...]] = []
    for kk, level in A.maximal_cells().items():
        tops.extend(level)
    for kk, level in B.maximal_cells().items():
        for c in level:
            tops.append(tuple(b_to_out[v] for v in c))
    out = build_complex(max(A.dim, B.dim), tops, n_vertices=fresh)
    rep = validate(out, restrict_to=None if full_validation else image)
    if not rep.is_complex:
        raise GlueError(f"gluing produced an invalid complex: {rep.violations[:3]}")
    if with_map:
        return out, b_to_out
    return out


def _link_cycle_data(C: CubeComplex, v: int):
    """(adjacency of the link graph of v, neighbor pair -> square index).
    In a square (v, a, x, b) the link edge joins the neighbors a and b."""
    adj: dict[int, list[int]] = {}
    pair_sq: dict[frozenset[int], int] = {}
    for idx, cell in enumerate(C.cells.get(2, ())):
        for pos, w in enumerate(cell):
            if w == v:
                a, b = cell[pos ^ 1], cell[pos ^ 2]
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
                pair_sq[frozenset((a, b))] = idx
                break
    return adj, pair_sq


def cut_along_curve(S: CubeComplex, curve: Sequence[int]) -> CubeComplex:
    """Cut a closed surface along a simple closed edge path.

    Each curve vertex's link cycle is split by the two incident curve edges
    into two arcs; squares on one arc keep the vertex, squares on the other
    get a fresh copy. Arc sides are propagated through the squares flanking
    each curve edge, which is consistent exactly when the curve is
    two-sided. f0 and f1 each grow by the curve length, so chi is unchanged.
    """
    if S.dim != 2:
        raise CutError("cut_along_curve needs a 2-complex")
    L = len(curve)
    if L < 3:
        raise CutError("curve too short")
    if len(set(curve)) != L:
        raise CutError("curve is not simple")
    edge_set = set(S.cells.get(1, ()))
    for t in range(L):
        e = canonical((curve[t], curve[(t + 1) % L]))
        if e not in edge_set:
            raise CutError(f"curve step {e} is not an edge of the complex")

    curve_pos = {v: i for i, v in enumerate(curve)}
    squares = S.cells.get(2, ())
    edge_sq: dict[tuple[int, ...], list[int]] = {}
    for idx, cell in enumerate(squares):
        for f in cube_faces(cell):
            edge_sq.setdefault(tuple(sorted(f)), []).append(idx)

    # the two arcs of each curve vertex's link, as square index sets
    arcs_of: dict[int, tuple[frozenset[int], frozenset[int]]] = {}
    for i, v in enumerate(curve):
        prev = curve[(i - 1) % L]
        nxt = curve[(i + 1) % L]
        adj, pair_sq = _link_cycle_data(S, v)
        if prev not in adj or nxt not in adj:
            raise CutError(f"curve vertex {v} has no square on a curve edge")
        if any(len(ws) != 2 for ws in adj.values()):
            raise CutError(f"link of curve vertex {v} is not a single cycle")

        def walk(start_from: int) -> list[int]:
            path = [prev, start_from]
            while path[-1] != nxt:
                a, b = adj[path[-1]]
                path.append(b if a == path[-2] else a)
                if len(path) > len(adj) + 2:
                    raise CutError(
                        f"link of curve vertex {v} is not a single cycle")
            return path

        first, second = adj[prev]
        side1, side2 = walk(first), walk(second)
        if len(side1) + len(side2) != len(adj) + 2:
            raise CutError(f"curve edges do not split the link at vertex {v}")
        a1 = frozenset(pair_sq[frozenset(p)] for p in zip(side1, side1[1:]))
        a2 = frozenset(pair_sq[frozenset(p)] for p in zip(side2, side2[1:]))
        if not a1 or not a2 or a1 & a2:
            raise CutError(f"cut is ill-defined at vertex {v}")
        arcs_of[v] = (a1, a2)

    # propagate which arc keeps the original id; anchor at curve[0]
    side_of: dict[int, int] = {curve[0]: 0}
    for i in range(L):
        v = curve[i]
        nxt = curve[(i + 1) % L]
        flank = edge_sq[tuple(sorted((v, nxt)))]
        if len(flank) != 2:
            raise CutError(f"curve edge ({v},{nxt}) not interior to the surface")
        kept_v = arcs_of[v][side_of[v]]
        sq_keep = next(idx for idx in flank if idx in kept_v)
        want = 0 if sq_keep in arcs_of[nxt][0] else 1
        if nxt in side_of:
            if side_of[nxt] != want:
                raise CutError("curve is one-sided; cut undefined")
        else:
            side_of[nxt] = want

    copy_id = {v: S.n_vertices + i for i, v in enumerate(curve)}
    tops: list[tuple[int, ...]] = []
    for idx, cell in enumerate(squares):
        new = list(cell)
        for pos, w in enumerate(cell):
            if w in curve_pos and idx not in arcs_of[w][side_of[w]]:
                new[pos] = copy_id[w]
        tops.append(tuple(new))
    return build_complex(2, tops, n_vertices=S.n_vertices + L)


def boundary_complex(C: CubeComplex, with_map: bool = False):
    """Subcomplex of (d-1)-cells lying in exactly one d-cell, relabeled to
    dense ids (order preserving); with_map also returns new id -> old id."""
    d = C.dim
    facets = C.cells.get(d, ())
    if not facets:
        raise CubeComplexError("complex has no top-dimensional cells")
    count: dict[tuple[int, ...], int] = {}
    for cell in facets:
        for f in cube_faces(cell):
            key = canonical(f)
            count[key] = count.get(key, 0) + 1
    rim = [f for f, n in count.items() if n == 1]
    if not rim:
        raise CubeComplexError("complex is closed; boundary is empty")
    used = sorted({v for f in rim for v in f})
    old_to_new = {v: i for i, v in enumerate(used)}
    tops = [tuple(old_to_new[v] for v in f) for f in rim]
    B = build_complex(d - 1, tops, n_vertices=len(used))
    if with_map:
        return B, {i: v for v, i in old_to_new.items()}
    return B


def remove_facet(C: CubeComplex, F) -> CubeComplex:
    """Delete one open facet; every proper face of it stays."""
    corners = tuple(F.corners if isinstance(F, Cube) else F)
    target = canonical(corners)
    d = C.dim
    if target not in set(C.cells.get(d, ())):
        raise CubeComplexError(f"{corners} is not a facet")
    cells = {k: v for k, v in C.cells.items()}
    cells[d] = tuple(c for c in cells[d] if c != target)
    return CubeComplex.from_cells(d, C.n_vertices, cells)


# ---------------------------------------------------------------------------
# warm-up construction


def _k_mm(m: int) -> CubeComplex:
    """Complete bipartite graph on 0..m-1 (left) and m..2m-1 (right)."""
    return build_complex(1, [(l, m + r) for l in range(m) for r in range(m)])


def warmup_complex(m: int, d: int) -> CubeComplex:
    """Simply connected d-complex with many facets per vertex.

    d=2: K_{m,m} x K_{m,m}, plus cones over the two axis copies of K_{m,m}.
    Cone edges to the lexicographically smaller bipartition class are split
    in two, and every cone quad is subdivided in five. Vertex layout:
    product pairs (a,b) -> a*2m+b, then apex 1, apex 2, the m+m edge
    midpoints, then 4 ids per cone quad in lexicographic edge order.
    d>2: cartesian product with [0,1]^(d-2).
    """
    if m < 2:
        raise CubeComplexError("warm-up needs m >= 2")
    if d < 2:
        raise CubeComplexError("warm-up needs d >= 2")
    K = _k_mm(m)
    P = cartesian_product(K, K)
    n = 2 * m
    u1 = n * n
    u2 = u1 + 1
    mid1 = {l: u1 + 2 + l for l in range(m)}
    mid2 = {l: u1 + 2 + m + l for l in range(m)}
    tops: list[tuple[int, ...]] = list(P.cells[2])
    base = u1 + 2 + 2 * m
    for apex, mids, vert in (
        (u1, mid1, lambda a: a * n),  # cone over K x {0}
        (u2, mid2, lambda a: a),      # cone over {0} x K
    ):
        for l in range(m):
            for r in range(m, n):
                quad = (apex, mids[l], vert(r), vert(l))
                tops.extend(_insert_square_5(quad, base))
                base += 4
    C = build_complex(2, tops, n_vertices=base)
    for _ in range(d - 2):
        C = cartesian_product(C, interval_complex(1))
    return C
