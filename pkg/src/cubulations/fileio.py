"""Plain-text and JSON serialization of cube complexes.

The text format has one header line and one line per maximal cell:

    cubecomplex <dim> <n_vertices>
    cube <k> <v_0> ... <v_{2^k-1}>

Corners are listed in bitmask order: corner i differs from corner
i ^ (1 << j) exactly in axis j. Everything from `#` to the end of a
line is a comment, blank lines are skipped. The writer emits maximal
cells in canonical order by ascending dimension, so writing, reading
and writing again reproduces the file byte for byte; reading what the
writer produced reproduces the complex exactly.

The JSON form carries the same data ({"dim", "n_vertices", "cubes"})
for consumers that would rather not parse anything by hand.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import CubeComplex, CubeComplexError, build_complex

__all__ = [
    "FormatError",
    "dumps_complex",
    "loads_complex",
    "dumps_json",
    "loads_json",
    "read_complex",
    "write_complex",
]


class FormatError(CubeComplexError):
    """A serialized complex that does not parse."""


def dumps_complex(C: CubeComplex) -> str:
    lines = [f"cubecomplex {C.dim} {C.n_vertices}"]
    maximal = C.maximal_cells()
    for k in sorted(maximal):
        for cell in maximal[k]:
            lines.append(f"cube {k} " + " ".join(map(str, cell)))
    return "\n".join(lines) + "\n"


def _content_lines(text: str) -> list[tuple[int, list[str]]]:
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((i, line.split()))
    return out


def loads_complex(text: str) -> CubeComplex:
    lines = _content_lines(text)
    if not lines:
        raise FormatError("empty input, expected a cubecomplex header")
    ln, head = lines[0]
    if head[0] != "cubecomplex" or len(head) != 3:
        raise FormatError(f"line {ln}: expected 'cubecomplex <dim> "
                          f"<n_vertices>', got {' '.join(head)!r}")
    try:
        dim, n_vertices = int(head[1]), int(head[2])
    except ValueError:
        raise FormatError(f"line {ln}: dimension and vertex count must be "
                          "integers") from None
    tops: list[tuple[int, ...]] = []
    for ln, parts in lines[1:]:
        if parts[0] != "cube":
            raise FormatError(f"line {ln}: expected a 'cube' line, got "
                              f"{parts[0]!r}")
        try:
            k = int(parts[1])
            corners = tuple(int(p) for p in parts[2:])
        except (IndexError, ValueError):
            raise FormatError(f"line {ln}: malformed cube line") from None
        if len(corners) != 1 << k:
            raise FormatError(f"line {ln}: a {k}-cube needs {1 << k} "
                              f"corners, got {len(corners)}")
        tops.append(corners)
    try:
        return build_complex(dim, tops, n_vertices=n_vertices)
    except CubeComplexError as e:
        raise FormatError(str(e)) from e


def dumps_json(C: CubeComplex) -> str:
    maximal = C.maximal_cells()
    cubes = [list(cell) for k in sorted(maximal) for cell in maximal[k]]
    return json.dumps({"dim": C.dim, "n_vertices": C.n_vertices,
                       "cubes": cubes}, indent=2) + "\n"


def loads_json(text: str) -> CubeComplex:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e}") from None
    if not isinstance(data, dict) or not {"dim", "n_vertices",
                                          "cubes"} <= set(data):
        raise FormatError("JSON object needs keys dim, n_vertices, cubes")
    try:
        return build_complex(data["dim"],
                             [tuple(c) for c in data["cubes"]],
                             n_vertices=data["n_vertices"])
    except (TypeError, CubeComplexError) as e:
        raise FormatError(str(e)) from e


def _pick_format(path: Path, fmt: str | None, text: str | None = None) -> str:
    if fmt is not None:
        if fmt not in ("cc", "json"):
            raise FormatError(f"unknown format {fmt!r}, expected cc or json")
        return fmt
    if path.suffix == ".json":
        return "json"
    if text is not None and text.lstrip()[:1] == "{":
        return "json"
    return "cc"


def read_complex(path: str | Path, fmt: str | None = None) -> CubeComplex:
    p = Path(path)
    text = p.read_text()
    if _pick_format(p, fmt, text) == "json":
        return loads_json(text)
    return loads_complex(text)


def write_complex(C: CubeComplex, path: str | Path,
                  fmt: str | None = None) -> None:
    p = Path(path)
    out = dumps_json(C) if _pick_format(p, fmt) == "json" else dumps_complex(C)
    p.write_text(out)
