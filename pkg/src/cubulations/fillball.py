"""Fill an even quadrangulated 2-sphere with a cubulated 3-ball.

The filler maintains the current boundary sphere as a set of squares and
glues one cube at a time. A move picks 1, 2, or 3 pairwise-adjacent
boundary squares, completes them to a combinatorial cube, removes the
glued squares, and replaces them with the remaining faces of the cube;
a remaining face that coincides with a boundary square cancels against
it instead. The search succeeds when the boundary becomes empty (a
boundary equal to the 6 squares of a single cube closes by its own
corner move, so no separate goal state is needed).

Moves are tried in a fixed order: corner moves (three squares around a
vertex) first, then roof moves (two squares sharing an edge), then bump
moves (a single square), each kind in lexicographic order. Corner and
roof moves identify missing cube corners with existing boundary
vertices where the boundary forces it; a bump move always introduces
four fresh vertices. A move must keep the boundary a valid sphere and
the new cube must meet every cube glued earlier in a common face.
Depth-first backtracking over this move order with a step budget gives
a deterministic search: the same sphere and budget always yield the
same certificate or the same failure. Two restrictions keep the search
bounded and are deliberate incompleteness: revisited boundary states
are pruned even though legality also depends on the glued interior,
and the working boundary may grow only a fixed slack beyond the input
sphere, so fillings needing a large excavation are not found. Both can
hide a fill that a slower search would reach; neither can produce a
wrong one.

Soundness does not rest on the search. Every certificate is passed
through verify_filling before it is returned, and the verifier rederives
the boundary of the ball from scratch. An exhausted budget raises
FillFailed with frontier statistics; a wrong certificate is never
returned. The verifier also accepts externally produced certificates,
see read_certificate.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .core import (
    CubeComplex,
    CubeComplexError,
    build_complex,
    canonical,
    validate,
)
from .fileio import FormatError, dumps_complex, loads_complex
from .topology import SnfTooLargeError, betti_numbers, surface_invariants
from .transforms import boundary_complex

__all__ = [
    "FillCertificate",
    "FillCheck",
    "FillError",
    "FillFailed",
    "fill_ball",
    "read_certificate",
    "verify_filling",
    "write_certificate",
]

DEFAULT_BUDGET = 50_000
GROWTH_SLACK = 16


class FillError(CubeComplexError):
    """The input does not satisfy the hypotheses of the filling step."""


class FillFailed(CubeComplexError):
    """The bounded search exhausted its budget without closing the sphere."""

    def __init__(self, steps: int, glued: int, states: int, best: int,
                 start: int, budget: int):
        super().__init__(
            f"fill search exhausted after {steps} examined moves and "
            f"{glued} glued cubes over {states} boundary states; the "
            f"boundary never dropped below {best} squares (started at "
            f"{start}, budget {budget})")
        self.steps = steps
        self.glued = glued
        self.states = states
        self.best = best
        self.start = start
        self.budget = budget


@dataclass(frozen=True)
class FillCertificate:
    """A 3-ball together with the identification of its boundary.

    boundary_iso maps vertex ids of the ball that lie on its boundary to
    vertex ids of the sphere being filled; it induces the cell bijection
    checked by verify_filling. The default filler keeps the sphere's
    vertex ids, so its map is the identity.
    """
    ball: CubeComplex
    boundary_iso: dict[int, int]

    @property
    def n_cubes(self) -> int:
        return len(self.ball.cells.get(3, ()))


@dataclass(frozen=True)
class FillCheck:
    ok: bool
    reason: str = ""
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


Square = tuple[int, int, int, int]


def _sq_edges(sq: Square) -> tuple[tuple[int, int], ...]:
    a, b, c, d = sq  # boundary walk a-b-d-c
    return ((a, b), (b, d), (d, c), (c, a))


def _neighbors(sq: Square, v: int) -> tuple[int, int]:
    a, b, c, d = sq
    at = sq.index(v)
    return ((b, c), (a, d), (a, d), (b, c))[at]


def _opposite(sq: Square, v: int) -> int:
    a, b, c, d = sq
    return (d, c, b, a)[sq.index(v)]


class _Boundary:
    """Index of one boundary state: stars, edge incidences, vertex sets."""

    def __init__(self, squares: frozenset[Square]):
        self.squares = squares
        self.star: dict[int, list[Square]] = {}
        self.at_edge: dict[tuple[int, int], list[Square]] = {}
        self.by_vset: dict[frozenset[int], Square] = {}
        for sq in sorted(squares):
            self.by_vset[frozenset(sq)] = sq
            for v in sq:
                self.star.setdefault(v, []).append(sq)
            for u, w in _sq_edges(sq):
                e = (u, w) if u < w else (w, u)
                self.at_edge.setdefault(e, []).append(sq)

    def with_three(self, a: int, b: int, c: int) -> list[Square]:
        return [sq for sq in self.star.get(a, ())
                if b in sq and c in sq]


def _resolve_corner(bd: _Boundary, known: tuple[int, int, int],
                    anchor: int) -> tuple[int | None, bool]:
    """Missing corner of a new cube face with three known vertices.

    The face is (k0, k1, k2, w) with w opposite `anchor` among the
    known three. A boundary square on all three known vertices must
    have its fourth vertex opposite the anchor as well, and then that
    vertex is the only consistent choice for w. Returns (w, ok); ok is
    False when a boundary square shares the three vertices with the
    wrong diagonal, which no choice of w can repair.
    """
    w: int | None = None
    for sq in bd.with_three(*known):
        u = next(x for x in sq if x not in known)
        if _opposite(sq, anchor) != u:
            return None, False
        if w is not None and w != u:
            return None, False
        w = u
    return w, True


def _cube_tuple(pos: dict[int, int]) -> tuple[int, ...]:
    return tuple(pos[i] for i in range(8))


def _corner_cube(bd: _Boundary, v: int, A: Square, B: Square, C: Square,
                 nid: int) -> tuple[tuple[int, ...], int] | None:
    """Cube glued along three squares meeting pairwise in edges at v."""
    sAB = set(A) & set(B)
    sBC = set(B) & set(C)
    sCA = set(C) & set(A)
    if not (len(sAB) == 2 and v in sAB and len(sBC) == 2 and v in sBC
            and len(sCA) == 2 and v in sCA):
        return None
    y = next(u for u in sAB if u != v)
    z = next(u for u in sBC if u != v)
    x = next(u for u in sCA if u != v)
    a = _opposite(A, v)
    b = _opposite(B, v)
    c = _opposite(C, v)
    corners = [v, x, y, a, z, c, b]
    if len(set(corners)) != 7:
        return None
    # the three faces away from v: (z,c,b,w), (x,a,c,w), (y,a,b,w),
    # with w opposite z, x, y respectively
    w = None
    for known, anchor in (((z, c, b), z), ((x, a, c), x), ((y, a, b), y)):
        u, ok = _resolve_corner(bd, known, anchor)
        if not ok:
            return None
        if u is not None:
            if w is not None and w != u:
                return None
            w = u
    if w is None:
        w, nid = nid, nid + 1
    if w in corners:
        return None
    pos = {0: v, 1: x, 2: y, 3: a, 4: z, 5: c, 6: b, 7: w}
    return _cube_tuple(pos), nid


def _roof_cube(bd: _Boundary, e: tuple[int, int], A: Square, B: Square,
               nid: int) -> tuple[tuple[int, ...], int] | None:
    """Cube glued along two squares sharing the edge e."""
    p, q = e
    a1 = next(u for u in _neighbors(A, p) if u != q)
    a2 = next(u for u in _neighbors(A, q) if u != p)
    b1 = next(u for u in _neighbors(B, p) if u != q)
    b2 = next(u for u in _neighbors(B, q) if u != p)
    corners = [p, q, a1, a2, b1, b2]
    if len(set(corners)) != 6:
        return None
    # side faces (p,a1,b1,w1) and (q,a2,b2,w2), w opposite p resp. q
    w1, ok1 = _resolve_corner(bd, (p, a1, b1), p)
    w2, ok2 = _resolve_corner(bd, (q, a2, b2), q)
    if not (ok1 and ok2):
        return None
    if w1 is None:
        w1, nid = nid, nid + 1
    if w2 is None:
        w2, nid = nid, nid + 1
    if w1 in corners or w2 in corners or w1 == w2:
        return None
    pos = {0: p, 1: q, 2: a1, 3: a2, 4: b1, 5: b2, 6: w1, 7: w2}
    return _cube_tuple(pos), nid


def _bump_cube(A: Square, nid: int) -> tuple[tuple[int, ...], int]:
    """Cube glued along a single square; the top layer is always fresh."""
    s0, s1, s2, s3 = A
    pos = {0: s0, 1: s1, 2: s2, 3: s3,
           4: nid, 5: nid + 1, 6: nid + 2, 7: nid + 3}
    return _cube_tuple(pos), nid + 4


def _cube_squares(cube: tuple[int, ...]) -> list[Square]:
    out = []
    for j in range(3):
        for side in (0, 1):
            out.append(canonical(
                tuple(cube[i] for i in range(8) if (i >> j) & 1 == side)))
    return out


def _cube_profile(cube: tuple[int, ...]
                  ) -> tuple[set[frozenset[int]], dict[frozenset[int], Square]]:
    """Edge set and face-set -> canonical-square map of one cube."""
    edges: set[frozenset[int]] = set()
    for i in range(8):
        for j in (1, 2, 4):
            if not i & j:
                edges.add(frozenset((cube[i], cube[i | j])))
    faces = {frozenset(f): f for f in _cube_squares(cube)}
    return edges, faces


def _cubes_meet_in_face(c1: tuple[int, ...], p1, c2: tuple[int, ...], p2
                        ) -> bool:
    """Whether two cubes intersect in a common face of both.

    The boundary surface cannot see the interior of the ball, so a cube
    that looks attachable from the current sphere may still collide
    with cubes glued earlier; every accepted cube is therefore checked
    against the whole path.
    """
    shared = set(c1) & set(c2)
    n = len(shared)
    if n <= 1:
        return True
    s = frozenset(shared)
    if n == 2:
        return s in p1[0] and s in p2[0]
    if n == 4:
        f = p1[1].get(s)
        return f is not None and f == p2[1].get(s)
    return False


def _next_boundary(state: frozenset[Square], bd: _Boundary,
                   glued: tuple[Square, ...],
                   cube: tuple[int, ...]) -> frozenset[Square] | None:
    """Boundary after gluing, or None when the move is illegal.

    The glued squares leave the boundary; each remaining cube face
    cancels an equal boundary square or joins the boundary. The result
    must stay a closed surface of sphere characteristic: every edge on
    exactly two squares, connected, Euler characteristic 2, and any two
    squares meeting in a common face.
    """
    faces = _cube_squares(cube)
    glued_set = set(glued)
    drop = set(glued)
    add: list[Square] = []
    for f in faces:
        if f in glued_set:
            continue
        if f in state:
            if f in drop:
                return None
            drop.add(f)
        else:
            hit = bd.by_vset.get(frozenset(f))
            if hit is not None:
                return None  # same four vertices, incompatible diagonal
            add.append(f)
    new_state = (state - drop) | set(add)
    if not new_state:
        return new_state
    # any two squares must meet in a common face; only pairs involving
    # an added square are new
    survivors = [sq for sq in new_state if sq not in set(add)]
    index: dict[int, list[Square]] = {}
    for sq in survivors:
        for v in sq:
            index.setdefault(v, []).append(sq)
    for i, f in enumerate(add):
        others = {sq for v in f for sq in index.get(v, ())}
        others.update(add[:i])
        fs = set(f)
        fe = {frozenset(e) for e in _sq_edges(f)}
        for sq in others:
            shared = fs & set(sq)
            if len(shared) < 2:
                continue
            if len(shared) != 2:
                return None
            if shared not in fe:
                return None
            if shared not in {frozenset(e) for e in _sq_edges(sq)}:
                return None
    count: dict[tuple[int, int], int] = {}
    verts: set[int] = set()
    for sq in new_state:
        verts.update(sq)
        for u, w in _sq_edges(sq):
            e = (u, w) if u < w else (w, u)
            count[e] = count.get(e, 0) + 1
    if any(k != 2 for k in count.values()):
        return None
    if len(verts) - len(count) + len(new_state) != 2:
        return None
    at: dict[tuple[int, int], list[Square]] = {}
    for sq in new_state:
        for u, w in _sq_edges(sq):
            e = (u, w) if u < w else (w, u)
            at.setdefault(e, []).append(sq)
    first = next(iter(sorted(new_state)))
    seen = {first}
    stack = [first]
    while stack:
        sq = stack.pop()
        for u, w in _sq_edges(sq):
            e = (u, w) if u < w else (w, u)
            for nb in at[e]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
    if len(seen) != len(new_state):
        return None
    return new_state


def _moves(state: frozenset[Square], nid: int, cap: int
           ) -> Iterator[tuple[tuple[int, ...], frozenset[Square], int]]:
    """Legal moves from one boundary state, best first.

    Corner moves come before roofs before bumps; within a kind, moves
    that introduce fewer fresh vertices and leave a smaller boundary
    come first, with the cube tuple as the lexicographic tiebreak. The
    order fixes the certificate the search returns. Moves whose
    boundary would exceed `cap` squares are not offered, which keeps
    the cost of a search step proportional to the input. Yields (cube,
    next boundary, next fresh id).
    """
    bd = _Boundary(state)
    corners: list[tuple[tuple, tuple[tuple[int, ...], frozenset[Square], int]]]
    corners = []
    for v in sorted(bd.star):
        st = bd.star[v]
        # the squares at v form a cycle, so three pairwise-adjacent ones
        # exist only when the cycle is all of them
        if len(st) != 3:
            continue
        A, B, C = st
        got = _corner_cube(bd, v, A, B, C, nid)
        if got is not None:
            cube, nid2 = got
            nxt = _next_boundary(state, bd, (A, B, C), cube)
            if nxt is not None and len(nxt) <= cap:
                corners.append(((nid2 - nid, len(nxt), cube),
                                (cube, nxt, nid2)))
    corners.sort(key=lambda kv: kv[0])
    for _, mv in corners:
        yield mv
    # roofs and bumps are rarely consumed, so their boundary updates are
    # computed only when the corner moves above are exhausted
    roofs = []
    for e in sorted(bd.at_edge):
        A, B = bd.at_edge[e]
        got = _roof_cube(bd, e, A, B, nid)
        if got is not None:
            roofs.append(((got[1] - nid, got[0]), got[0], got[1], (A, B)))
    roofs.sort(key=lambda r: r[0])
    for _, cube, nid2, glued in roofs:
        nxt = _next_boundary(state, bd, glued, cube)
        if nxt is not None and len(nxt) <= cap:
            yield cube, nxt, nid2
    if len(state) + 4 <= cap:
        for A in sorted(state):
            cube, nid2 = _bump_cube(A, nid)
            nxt = _next_boundary(state, bd, (A,), cube)
            if nxt is not None:
                yield cube, nxt, nid2


def fill_ball(S: CubeComplex, budget: int = DEFAULT_BUDGET,
              slack: int = GROWTH_SLACK) -> FillCertificate:
    """Cubulated 3-ball whose boundary is the given quadrangulated sphere.

    The sphere must be a valid closed 2-complex of genus zero with an
    even number of squares; each hypothesis failure raises FillError.
    The search examines at most `budget` candidate gluings, never lets
    the working boundary grow more than `slack` squares beyond the
    input, and raises FillFailed with frontier statistics when the
    budget runs out. A returned certificate has been passed through
    verify_filling; its boundary map is the identity on the sphere's
    vertex ids. The cube count is whatever the search found first, no
    bound on it is promised.
    """
    if S.dim != 2:
        raise FillError(f"fill_ball needs a 2-complex, got dimension {S.dim}")
    if not validate(S).is_complex:
        raise FillError("input sphere is not a valid complex")
    count: dict[tuple[int, int], int] = {}
    for sq in S.cells.get(2, ()):
        for u, w in _sq_edges(sq):
            e = (u, w) if u < w else (w, u)
            count[e] = count.get(e, 0) + 1
    if not count or any(k != 2 for k in count.values()):
        raise FillError("input surface is not closed")
    f2 = len(S.cells[2])
    if f2 % 2:
        raise FillError(f"sphere has an odd number of squares ({f2}); "
                        "a cubulated ball boundary always has evenly many")
    closed, orientable, genus = surface_invariants(S)
    if not closed or not orientable or genus is None:
        raise FillError("input surface is not a connected orientable "
                        "closed surface")
    if genus != 0:
        raise FillError(f"input surface has genus {genus}, not a sphere")

    start = frozenset(S.cells[2])
    cap = len(start) + slack
    visited: set[frozenset[Square]] = {start}
    steps = 0
    glued = 0
    best = len(start)
    frames: list[Iterator] = [_moves(start, S.n_vertices, cap)]
    cubes: list[tuple[int, ...]] = []
    profiles: list[tuple] = []
    final: frozenset[Square] | None = None
    while frames:
        got = next(frames[-1], None)
        if got is None:
            frames.pop()
            if cubes:
                cubes.pop()
                profiles.pop()
            continue
        steps += 1  # every examined candidate counts, or pruning is free
        if steps > budget:
            raise FillFailed(steps - 1, glued, len(visited), best,
                             len(start), budget)
        cube, nxt, nid = got
        if nxt in visited:
            continue
        prof = _cube_profile(cube)
        if any(not _cubes_meet_in_face(cube, prof, c, p)
               for c, p in zip(cubes, profiles)):
            continue
        glued += 1
        visited.add(nxt)
        cubes.append(cube)
        profiles.append(prof)
        if not nxt:
            final = nxt
            break
        if len(nxt) < best:
            best = len(nxt)
        frames.append(_moves(nxt, nid, cap))
    if final is None:
        raise FillFailed(steps, glued, len(visited), best, len(start), budget)
    ball = build_complex(3, cubes)
    cert = FillCertificate(ball, {v: v for v in range(S.n_vertices)})
    check = verify_filling(cert, S)
    if not check:  # pragma: no cover - soundness backstop
        raise FillError(f"search produced an invalid filling: {check.reason}")
    return cert


def verify_filling(cert: FillCertificate, S: CubeComplex) -> FillCheck:
    """Independent check of a filling certificate against its sphere.

    Re-derives the boundary of the ball, maps it through boundary_iso,
    and compares cell by cell with S in every dimension; also checks
    that the ball is a valid complex with the homology of a ball. The
    certificate's producer is not trusted, so external certificates go
    through the same gate. Returns a report; the witness on a cell
    mismatch is an unmatched cell.
    """
    ball = cert.ball
    if ball.dim != 3:
        return FillCheck(False, f"ball has dimension {ball.dim}, not 3")
    rep = validate(ball)
    if not rep.is_complex:
        return FillCheck(False, "ball is not a valid complex",
                         rep.violations[0] if rep.violations else None)
    try:
        prof = betti_numbers(ball)
    except SnfTooLargeError as e:
        return FillCheck(False, f"homology not checkable: {e}")
    if prof.betti != (1, 0, 0, 0) or any(prof.torsion):
        return FillCheck(False,
                         f"ball homology {prof.betti} differs from a ball")
    try:
        bdry, idmap = boundary_complex(ball, with_map=True)
    except CubeComplexError as e:
        return FillCheck(False, f"boundary not derivable: {e}")
    if bdry.dim != 2:
        return FillCheck(False, "ball boundary is not 2-dimensional")
    phi: dict[int, int] = {}
    for new, old in idmap.items():
        if old not in cert.boundary_iso:
            return FillCheck(False,
                             f"boundary vertex {old} missing from the map")
        phi[new] = cert.boundary_iso[old]
    if len(set(phi.values())) != len(phi):
        return FillCheck(False, "boundary map is not injective on vertices")
    if len(phi) != S.n_vertices:
        return FillCheck(
            False, f"boundary has {len(phi)} vertices, sphere has "
            f"{S.n_vertices}")
    for k in range(3):
        have = sorted(canonical(tuple(phi[v] for v in cell))
                      for cell in bdry.cells.get(k, ()))
        want = sorted(S.cells.get(k, ()))
        if have != want:
            extra = set(have) - set(want)
            missing = set(want) - set(have)
            witness = min(extra or missing)
            return FillCheck(
                False, f"boundary and sphere differ in dimension {k}",
                witness)
    return FillCheck(True)


# ---------------------------------------------------------------------------
# certificate files

def _global_index(C: CubeComplex) -> list[tuple[int, ...]]:
    """Cells of all dimensions in one list: dimensions ascending, each
    level in its canonical sorted order."""
    out: list[tuple[int, ...]] = []
    for k in range(C.dim + 1):
        out.extend(C.cells.get(k, ()))
    return out


def write_certificate(cert: FillCertificate, S: CubeComplex,
                      path: str | Path) -> None:
    """Write a filling certificate: the ball, then the boundary map.

    The ball is serialized in the interchange format; each following
    `bmap <sphere-cell-index> <ball-boundary-cell-index>` line pairs a
    cell of the sphere with a cell of boundary_complex(ball). Indices
    count all cells, dimensions ascending, each dimension in canonical
    order. Certificates from any producer are read back with
    read_certificate and checked with verify_filling.
    """
    bdry, idmap = boundary_complex(cert.ball, with_map=True)
    phi = {new: cert.boundary_iso[old] for new, old in idmap.items()}
    s_at = {cell: i for i, cell in enumerate(_global_index(S))}
    lines = [dumps_complex(cert.ball).rstrip("\n")]
    for j, cell in enumerate(_global_index(bdry)):
        image = canonical(tuple(phi[v] for v in cell))
        lines.append(f"bmap {s_at[image]} {j}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_certificate(path: str | Path, S: CubeComplex) -> FillCertificate:
    """Read a certificate written by write_certificate or a foreign filler.

    Only well-formedness is enforced here: the bmap lines must cover
    the boundary of the ball exactly once, pair cells of equal
    dimension, and agree with the vertex pairs they contain. Whether
    the map is an isomorphism onto S is decided by verify_filling.
    """
    text = Path(path).read_text()
    cc_lines: list[str] = []
    pairs: list[tuple[int, int]] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped.startswith("bmap"):
            parts = stripped.split()
            try:
                i, j = int(parts[1]), int(parts[2])
            except (IndexError, ValueError):
                raise FormatError(f"line {ln}: malformed bmap line") from None
            if len(parts) != 3:
                raise FormatError(f"line {ln}: malformed bmap line")
            pairs.append((i, j))
        else:
            cc_lines.append(raw)
    ball = loads_complex("\n".join(cc_lines))
    bdry, idmap = boundary_complex(ball, with_map=True)
    s_cells = _global_index(S)
    b_cells = _global_index(bdry)
    seen_j: set[int] = set()
    phi: dict[int, int] = {}
    for i, j in pairs:
        if not (0 <= i < len(s_cells)) or not (0 <= j < len(b_cells)):
            raise FormatError(f"bmap index pair ({i}, {j}) out of range")
        if j in seen_j:
            raise FormatError(f"boundary cell {j} mapped twice")
        seen_j.add(j)
        sc, bc = s_cells[i], b_cells[j]
        if len(sc) != len(bc):
            raise FormatError(f"bmap pair ({i}, {j}) mixes a "
                              f"{len(sc).bit_length() - 1}-cell with a "
                              f"{len(bc).bit_length() - 1}-cell")
        if len(bc) == 1:
            phi[bc[0]] = sc[0]
    if len(seen_j) != len(b_cells):
        raise FormatError(f"boundary map covers {len(seen_j)} of "
                          f"{len(b_cells)} boundary cells")
    for i, j in pairs:
        bc = b_cells[j]
        if canonical(tuple(phi[v] for v in bc)) != s_cells[i]:
            raise FormatError(f"bmap pair ({i}, {j}) contradicts the "
                              "vertex pairs in the same file")
    return FillCertificate(ball, {idmap[new]: s for new, s in phi.items()})
