"""Combinatorial cube complexes.

A k-cube is an array of 2^k vertex ids indexed by bitmask: bit j of the index
is the j-th coordinate of the corner. A complex stores, per dimension, the
set of cells in canonical form under the cube symmetry group (coordinate
permutations composed with reflections, order 2^k * k!). Two cubes are equal
iff they agree up to that symmetry.

Vertex ids of a complex are dense: they form the range [0, n_vertices).
Complexes are immutable after construction; all operations here are pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence


FVector = tuple[int, ...]


class CubeComplexError(Exception):
    """Base class for structural errors raised by this package."""


class MalformedCubeError(CubeComplexError):
    pass


class OddCycleError(CubeComplexError):
    """The 1-skeleton is not bipartite; args[1] is an odd closed walk."""


# ---------------------------------------------------------------------------
# canonical form

def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def canonical_with_sign(corners: Sequence[int]) -> tuple[tuple[int, ...], int]:
    """Canonical corner array and the orientation sign of the relabeling.

    The canonical representative is the lexicographically least corner array
    over all cube symmetries. It is found directly, without enumerating the
    group: translate the minimum corner to position 0, then order the
    coordinate axes by the labels of its k neighbors. Both steps are forced
    (corners are distinct), so the result is the lex minimum. The sign is
    sgn(axis permutation) * (-1)^popcount(translation): each set bit of the
    translation is a reflection.
    """
    m = len(corners)
    if m == 1:
        return (corners[0],), 1
    if m == 2:
        a, b = corners
        return ((a, b), 1) if a < b else ((b, a), -1)
    k = m.bit_length() - 1
    t = min(range(m), key=corners.__getitem__)
    axes = sorted(range(k), key=lambda j: corners[t ^ (1 << j)])
    res = [0] * m
    for c in range(m):
        src = t
        cc = c
        i = 0
        while cc:
            if cc & 1:
                src ^= 1 << axes[i]
            cc >>= 1
            i += 1
        res[c] = corners[src]
    sign = _perm_sign(axes)
    if bin(t).count("1") % 2:
        sign = -sign
    return tuple(res), sign


def canonical(corners: Sequence[int]) -> tuple[int, ...]:
    return canonical_with_sign(corners)[0]


def cube_faces(corners: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """The 2k facets of a k-cube, in axis/side order, not canonicalized."""
    m = len(corners)
    k = m.bit_length() - 1
    for j in range(k):
        for side in (0, 1):
            yield tuple(corners[c] for c in range(m) if (c >> j) & 1 == side)


class Cube:
    """A single cube, compared and hashed by canonical form."""

    __slots__ = ("corners", "_canon")

    def __init__(self, corners: Sequence[int], _canon: tuple[int, ...] | None = None):
        corners = tuple(corners)
        m = len(corners)
        if m == 0 or m & (m - 1):
            raise MalformedCubeError(f"corner array length {m} is not a power of two")
        if any(v < 0 for v in corners):
            raise MalformedCubeError("negative vertex id")
        if len(set(corners)) != m:
            raise MalformedCubeError(f"repeated corner in cube {corners}")
        self.corners = corners
        self._canon = _canon

    @property
    def dim(self) -> int:
        return len(self.corners).bit_length() - 1

    @property
    def canon(self) -> tuple[int, ...]:
        if self._canon is None:
            self._canon = canonical(self.corners)
        return self._canon

    def faces(self) -> list["Cube"]:
        return [Cube(f) for f in cube_faces(self.corners)]

    def vertices(self) -> frozenset[int]:
        return frozenset(self.corners)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cube):
            return NotImplemented
        return self.canon == other.canon

    def __hash__(self) -> int:
        return hash(self.canon)

    def __repr__(self) -> str:
        return f"Cube{self.corners}"


# ---------------------------------------------------------------------------
# the complex

@dataclass(frozen=True)
class ValidationReport:
    is_complex: bool
    is_closed_pseudomanifold: bool
    violations: tuple[tuple[tuple[int, ...], tuple[int, ...], str], ...]


@dataclass(frozen=True)
class BoundReport:
    f0: int
    fd: int
    facet_bound: int
    facet_bound_ok: bool
    cube_bound: int | None
    cube_bound_ok: bool | None


class CubeComplex:
    """Immutable cube complex, closed under faces, cells stored canonically.

    cells: dict dim -> sorted tuple of canonical corner tuples.
    """

    __slots__ = ("dim", "n_vertices", "cells", "_maximal")

    def __init__(self, dim: int, n_vertices: int,
                 cells: dict[int, tuple[tuple[int, ...], ...]]):
        self.dim = dim
        self.n_vertices = n_vertices
        self.cells = cells
        self._maximal: dict[int, tuple[tuple[int, ...], ...]] | None = None

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_cells(dim: int, n_vertices: int,
                   cells: dict[int, Iterable[tuple[int, ...]]]) -> "CubeComplex":
        """Trusted constructor: cells must already be canonical and closed."""
        packed = {k: tuple(sorted(v)) for k, v in cells.items() if v}
        for k in range(dim + 1):
            packed.setdefault(k, ())
        return CubeComplex(dim, n_vertices, packed)

    def f_vector(self) -> tuple[int, ...]:
        return tuple(len(self.cells.get(k, ())) for k in range(self.dim + 1))

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * len(self.cells.get(k, ())) for k in range(self.dim + 1))

    def cells_of_dim(self, k: int) -> tuple[tuple[int, ...], ...]:
        return self.cells.get(k, ())

    def has_cell(self, corners: Sequence[int]) -> bool:
        c = canonical(corners)
        k = len(c).bit_length() - 1
        return c in set(self.cells.get(k, ()))

    def maximal_cells(self) -> dict[int, tuple[tuple[int, ...], ...]]:
        """Cells that are not a proper face of any other cell."""
        if self._maximal is None:
            covered: set[tuple[int, ...]] = set()
            out: dict[int, tuple[tuple[int, ...], ...]] = {}
            for k in range(self.dim, -1, -1):
                level = [c for c in self.cells.get(k, ()) if c not in covered]
                out[k] = tuple(level)
                if k:
                    for c in self.cells.get(k, ()):
                        for f in cube_faces(c):
                            covered.add(canonical(f))
            self._maximal = out
        return self._maximal

    def vertices_used(self) -> set[int]:
        used: set[int] = set()
        for level in self.maximal_cells().values():
            for c in level:
                used.update(c)
        return used

    def edges(self) -> tuple[tuple[int, ...], ...]:
        return self.cells.get(1, ())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CubeComplex):
            return NotImplemented
        return (self.dim == other.dim and self.n_vertices == other.n_vertices
                and self.cells == other.cells)

    def __hash__(self) -> int:
        return hash((self.dim, self.n_vertices,
                     tuple(sorted(self.cells.items()))))

    def __repr__(self) -> str:
        return f"CubeComplex(dim={self.dim}, f={self.f_vector()})"


def build_complex(dim: int, top_cubes: Iterable[Sequence[int]],
                  n_vertices: int | None = None) -> CubeComplex:
    """Build a complex from top cells: canonicalize, close under faces, dedup.

    Vertex ids must be dense; n_vertices defaults to max id + 1 and is checked.
    """
    by_dim: dict[int, set[tuple[int, ...]]] = {k: set() for k in range(dim + 1)}
    used: set[int] = set()
    frontier: list[tuple[int, ...]] = []
    for corners in top_cubes:
        cube = Cube(corners)
        if cube.dim > dim:
            raise MalformedCubeError(
                f"cube of dimension {cube.dim} exceeds complex dimension {dim}")
        used.update(cube.corners)
        if cube.canon not in by_dim[cube.dim]:
            by_dim[cube.dim].add(cube.canon)
            frontier.append(cube.canon)
    # downward closure
    while frontier:
        c = frontier.pop()
        k = len(c).bit_length() - 1
        if k == 0:
            continue
        for f in cube_faces(c):
            fc = canonical(f)
            if fc not in by_dim[k - 1]:
                by_dim[k - 1].add(fc)
                frontier.append(fc)
    if n_vertices is None:
        n_vertices = (max(used) + 1) if used else 0
    if used and (min(used) < 0 or max(used) >= n_vertices):
        raise MalformedCubeError("vertex id out of range")
    missing = n_vertices - len(used)
    if missing:
        present = used
        gap = next(v for v in range(n_vertices) if v not in present)
        raise MalformedCubeError(
            f"vertex ids not dense: {missing} unused ids in [0, {n_vertices}), "
            f"first gap at {gap}")
    return CubeComplex.from_cells(dim, n_vertices, by_dim)


def relabel(C: CubeComplex, mapping: dict[int, int],
            n_vertices: int | None = None) -> CubeComplex:
    """Apply a vertex relabeling (total on used vertices), re-canonicalizing."""
    cells: dict[int, set[tuple[int, ...]]] = {}
    for k, level in C.cells.items():
        out = set()
        for c in level:
            out.add(canonical([mapping[v] for v in c]))
        cells[k] = out
    if n_vertices is None:
        n_vertices = max(mapping.values()) + 1 if mapping else 0
    return CubeComplex.from_cells(C.dim, n_vertices, {k: v for k, v in cells.items()})


def relabel_dense(C: CubeComplex) -> tuple[CubeComplex, dict[int, int]]:
    """Compress used vertex ids to [0, count), order preserving."""
    used = sorted(C.vertices_used())
    mapping = {v: i for i, v in enumerate(used)}
    return relabel(C, mapping, len(used)), mapping


# ---------------------------------------------------------------------------
# validation

def _spread(sub: int, positions: Sequence[int]) -> int:
    out = 0
    i = 0
    while sub:
        if sub & 1:
            out |= 1 << positions[i]
        sub >>= 1
        i += 1
    return out


def _shared_face(cell: tuple[int, ...], shared: frozenset[int]) -> tuple[int, ...] | None:
    """If the positions of `shared` in `cell` form a subcube, its canonical
    corner array; else None."""
    pos = [i for i, v in enumerate(cell) if v in shared]
    if len(pos) != len(shared):
        return None
    t = pos[0]
    offsets = {p ^ t for p in pos}
    mask = 0
    for x in offsets:
        mask |= x
    bits = [j for j in range(mask.bit_length()) if (mask >> j) & 1]
    if len(offsets) != 1 << len(bits):
        return None
    if any(x & ~mask for x in offsets):
        return None
    face = tuple(cell[t ^ _spread(s, bits)] for s in range(1 << len(bits)))
    return canonical(face)


def validate(C: CubeComplex, restrict_to: set[int] | None = None) -> ValidationReport:
    """Check the defining property: any two cells meet in a common face.

    It suffices to check pairs of maximal cells (faces of cubes meet in faces,
    and a common face of two cubes induces common faces of all their faces).
    Pairs are prefiltered through a vertex index: only pairs sharing at least
    two vertices can violate. With restrict_to, only pairs sharing a vertex
    of that set are examined (seam-local mode after gluing).
    """
    maximal: list[tuple[int, ...]] = []
    for k in sorted(C.maximal_cells(), reverse=True):
        maximal.extend(C.maximal_cells()[k])
    by_vertex: dict[int, list[int]] = {}
    for idx, cell in enumerate(maximal):
        for v in cell:
            by_vertex.setdefault(v, []).append(idx)
    pair_counts: dict[tuple[int, int], int] = {}
    for v, members in by_vertex.items():
        if restrict_to is not None and v not in restrict_to:
            continue
        for a, b in combinations(members, 2):
            key = (a, b)
            pair_counts[key] = pair_counts.get(key, 0) + 1
    violations: list[tuple[tuple[int, ...], tuple[int, ...], str]] = []
    for (a, b), cnt in pair_counts.items():
        if restrict_to is not None:
            # counts may miss shared vertices outside the seam; recount
            cnt = len(set(maximal[a]) & set(maximal[b]))
        if cnt < 2:
            continue
        ca, cb = maximal[a], maximal[b]
        shared = frozenset(ca) & frozenset(cb)
        fa = _shared_face(ca, shared)
        fb = _shared_face(cb, shared)
        if fa is None or fb is None or fa != fb:
            reason = "shared-diagonal" if len(shared) == 2 else "non-face intersection"
            violations.append((ca, cb, reason))
    violations.sort()
    is_complex = not violations
    closed_pm = pseudomanifold_check(C) if is_complex else False
    return ValidationReport(is_complex, closed_pm, tuple(violations))


def pseudomanifold_check(C: CubeComplex) -> bool:
    """Pure, every ridge in exactly two facets, facets strongly connected."""
    d = C.dim
    facets = C.cells.get(d, ())
    if not facets:
        return False
    maximal = C.maximal_cells()
    if any(maximal[k] for k in maximal if k != d):
        return False
    ridge_map: dict[tuple[int, ...], list[int]] = {}
    for idx, cell in enumerate(facets):
        for f in cube_faces(cell):
            ridge_map.setdefault(canonical(f), []).append(idx)
    if any(len(v) != 2 for v in ridge_map.values()):
        return False
    # connectivity over the facet adjacency graph
    parent = list(range(len(facets)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in ridge_map.values():
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(i) for i in range(len(facets))}) == 1


# ---------------------------------------------------------------------------
# links and manifold checks

def vertex_link(C: CubeComplex, v: int) -> set[frozenset[int]]:
    """Abstract simplicial link: each k-cube at v contributes the (k-1)-simplex
    of its k edge-neighbors of v. Closed under faces."""
    if not 0 <= v < C.n_vertices:
        raise CubeComplexError(f"vertex {v} out of range")
    simplices: set[frozenset[int]] = set()
    for k in range(1, C.dim + 1):
        for cell in C.cells.get(k, ()):
            for pos, w in enumerate(cell):
                if w != v:
                    continue
                nb = frozenset(cell[pos ^ (1 << j)] for j in range(k))
                simplices.add(nb)
                break
    closure: set[frozenset[int]] = set()
    for s in simplices:
        closure.add(s)
        for r in range(1, len(s)):
            for sub in combinations(sorted(s), r):
                closure.add(frozenset(sub))
    return closure


def _link_is_single_cycle(link: set[frozenset[int]]) -> bool:
    verts = {next(iter(s)) for s in link if len(s) == 1}
    edges = [tuple(sorted(s)) for s in link if len(s) == 2]
    if not verts or len(edges) != len(verts):
        return False
    deg: dict[int, int] = {v: 0 for v in verts}
    adj: dict[int, list[int]] = {v: [] for v in verts}
    for a, b in edges:
        if a not in deg or b not in deg:
            return False
        deg[a] += 1
        deg[b] += 1
        adj[a].append(b)
        adj[b].append(a)
    if any(d != 2 for d in deg.values()):
        return False
    start = next(iter(verts))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(verts)


def _link_is_2_sphere(link: set[frozenset[int]]) -> bool:
    verts = {next(iter(s)) for s in link if len(s) == 1}
    edges = {s for s in link if len(s) == 2}
    tris = {s for s in link if len(s) == 3}
    if not tris:
        return False
    edge_count: dict[frozenset[int], int] = {e: 0 for e in edges}
    for t in tris:
        for pair in combinations(sorted(t), 2):
            e = frozenset(pair)
            if e not in edge_count:
                return False
            edge_count[e] += 1
    if any(c != 2 for c in edge_count.values()):
        return False
    # connected?
    adj: dict[int, set[int]] = {v: set() for v in verts}
    for e in edges:
        a, b = sorted(e)
        adj[a].add(b)
        adj[b].add(a)
    start = next(iter(verts))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    if len(seen) != len(verts):
        return False
    return len(verts) - len(edges) + len(tris) == 2


def manifold_check(C: CubeComplex, d: int) -> bool:
    """Local sphere-link checks for d <= 3; for d > 3 only the pseudomanifold
    conditions are verified (partial check, as documented)."""
    if d != C.dim:
        return False
    if d > 3:
        return pseudomanifold_check(C)
    if d == 1:
        count: dict[int, int] = {}
        for e in C.cells.get(1, ()):
            for v in e:
                count[v] = count.get(v, 0) + 1
        return bool(count) and all(c == 2 for c in count.values())
    check = _link_is_single_cycle if d == 2 else _link_is_2_sphere
    for v in range(C.n_vertices):
        if not check(vertex_link(C, v)):
            return False
    return True


def upper_bound_checks(C: CubeComplex) -> BoundReport:
    """Diagonal bound f_d <= f0(f0-1)/2^d; for 3-pseudomanifolds also the
    quadratic cube bound f3 <= f0^2/24 (no two cubes share a diagonal)."""
    f = C.f_vector()
    f0, fd = f[0], f[-1]
    facet_bound = f0 * (f0 - 1) // (1 << C.dim) if C.dim else f0
    facet_ok = fd <= facet_bound
    cube_bound = None
    cube_ok = None
    if C.dim == 3 and pseudomanifold_check(C):
        cube_bound = f0 * f0 // 24
        cube_ok = f[3] <= cube_bound
    return BoundReport(f0, fd, facet_bound, facet_ok, cube_bound, cube_ok)


def bipartite_classes(C: CubeComplex) -> tuple[frozenset[int], frozenset[int]]:
    """Two-color the 1-skeleton; raises OddCycleError with a witness walk.

    Isolated vertices and component roots (in id order) get color 0, so the
    splitting is deterministic.
    """
    color: dict[int, int] = {}
    parent_of: dict[int, int] = {}
    adj: dict[int, list[int]] = {v: [] for v in range(C.n_vertices)}
    for e in C.cells.get(1, ()):
        a, b = e
        adj[a].append(b)
        adj[b].append(a)
    for root in range(C.n_vertices):
        if root in color:
            continue
        color[root] = 0
        queue = [root]
        while queue:
            x = queue.pop()
            for y in adj[x]:
                if y not in color:
                    color[y] = 1 - color[x]
                    parent_of[y] = x
                    queue.append(y)
                elif color[y] == color[x]:
                    walk_x = [x]
                    while walk_x[-1] != root and walk_x[-1] in parent_of:
                        walk_x.append(parent_of[walk_x[-1]])
                    walk_y = [y]
                    while walk_y[-1] != root and walk_y[-1] in parent_of:
                        walk_y.append(parent_of[walk_y[-1]])
                    raise OddCycleError("1-skeleton is not bipartite",
                                        walk_x[::-1] + walk_y)
    zero = frozenset(v for v, c in color.items() if c == 0)
    one = frozenset(v for v, c in color.items() if c == 1)
    return zero, one


# ---------------------------------------------------------------------------
# interchange format

def to_text(C: CubeComplex) -> str:
    """Serialize: header line, then one `cube` line per maximal cell in
    canonical sorted order. Round-trips bit-exactly."""
    lines = [f"cubecomplex {C.dim} {C.n_vertices}"]
    maximal = C.maximal_cells()
    for k in sorted(maximal):
        for cell in maximal[k]:
            lines.append(f"cube {k} " + " ".join(map(str, cell)))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> CubeComplex:
    dim = n_vertices = None
    tops: list[tuple[int, ...]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "cubecomplex":
            if dim is not None:
                raise MalformedCubeError(f"line {lineno}: duplicate header")
            if len(parts) != 3:
                raise MalformedCubeError(f"line {lineno}: bad header")
            dim, n_vertices = int(parts[1]), int(parts[2])
        elif parts[0] == "cube":
            if dim is None:
                raise MalformedCubeError(f"line {lineno}: cube before header")
            k = int(parts[1])
            corners = tuple(int(x) for x in parts[2:])
            if len(corners) != 1 << k:
                raise MalformedCubeError(
                    f"line {lineno}: cube {k} needs {1 << k} corners, got {len(corners)}")
            tops.append(corners)
        elif parts[0] == "bmap":
            continue  # fill certificates carry trailing bmap lines
        else:
            raise MalformedCubeError(f"line {lineno}: unknown record {parts[0]!r}")
    if dim is None:
        raise MalformedCubeError("missing cubecomplex header")
    return build_complex(dim, tops, n_vertices)


def to_json_obj(C: CubeComplex) -> dict:
    maximal = C.maximal_cells()
    cubes = [list(cell) for k in sorted(maximal) for cell in maximal[k]]
    return {"dim": C.dim, "n_vertices": C.n_vertices, "cubes": cubes}


def from_json_obj(obj: dict) -> CubeComplex:
    return build_complex(int(obj["dim"]),
                         [tuple(c) for c in obj["cubes"]],
                         int(obj["n_vertices"]))


def save_complex(C: CubeComplex, path: str, fmt: str = "cc") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == "json":
            json.dump(to_json_obj(C), fh, sort_keys=True)
            fh.write("\n")
        else:
            fh.write(to_text(C))


def load_complex(path: str, fmt: str | None = None) -> CubeComplex:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "json" or (fmt is None and text.lstrip().startswith("{")):
        return from_json_obj(json.loads(text))
    return from_text(text)
