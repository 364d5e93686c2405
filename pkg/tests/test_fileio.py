"""Text and JSON serialization round-trips."""

import pytest

from cubulations.core import build_complex, cube_faces
from cubulations.fileio import (
    FormatError,
    dumps_complex,
    dumps_json,
    loads_complex,
    loads_json,
    read_complex,
    write_complex,
)
from cubulations.transforms import apply_gadget, torus_complex


def boundary_c3():
    return build_complex(2, list(cube_faces(tuple(range(8)))))


def samples():
    S = boundary_c3()
    return [
        S,
        torus_complex(2),
        apply_gadget(S, S.cells[2][0], "insert_square_5"),
        build_complex(3, [tuple(range(8))]),
        build_complex(2, [(0, 1, 2, 3), (4, 5)]),  # mixed-dim maximal cells
        build_complex(0, [(0,), (1,), (2,)]),
    ]


def test_text_round_trip_is_exact():
    for C in samples():
        text = dumps_complex(C)
        assert loads_complex(text) == C
        assert dumps_complex(loads_complex(text)) == text


def test_json_round_trip_is_exact():
    for C in samples():
        text = dumps_json(C)
        assert loads_json(text) == C
        assert dumps_json(loads_json(text)) == text


def test_header_shape():
    S = boundary_c3()
    first = dumps_complex(S).splitlines()[0]
    assert first == "cubecomplex 2 8"
    assert dumps_complex(S).count("cube 2 ") == 6


def test_comments_and_blank_lines_ignored():
    S = boundary_c3()
    body = dumps_complex(S).splitlines()
    noisy = ["# header to ignore", "", body[0] + "  # trailing",
             "   "] + body[1:]
    assert loads_complex("\n".join(noisy)) == S


def test_malformed_inputs_rejected():
    with pytest.raises(FormatError, match="empty"):
        loads_complex("# nothing here\n")
    with pytest.raises(FormatError, match="cubecomplex"):
        loads_complex("complex 2 8\n")
    with pytest.raises(FormatError, match="integers"):
        loads_complex("cubecomplex two 8\n")
    with pytest.raises(FormatError, match="cube"):
        loads_complex("cubecomplex 2 4\nsquare 0 1 2 3\n")
    with pytest.raises(FormatError, match="needs 4 corners"):
        loads_complex("cubecomplex 2 4\ncube 2 0 1 2\n")
    with pytest.raises(FormatError, match="malformed"):
        loads_complex("cubecomplex 2 4\ncube 2 0 1 2 x\n")
    with pytest.raises(FormatError):  # ids not dense
        loads_complex("cubecomplex 2 9\ncube 2 0 1 2 3\n")
    with pytest.raises(FormatError, match="JSON"):
        loads_json("{not json")
    with pytest.raises(FormatError, match="keys"):
        loads_json('{"dim": 2}')


def test_file_io_and_format_sniffing(tmp_path):
    C = torus_complex(2)
    cc = tmp_path / "t.cc"
    js = tmp_path / "t.json"
    write_complex(C, cc)
    write_complex(C, js)
    assert cc.read_text().startswith("cubecomplex")
    assert js.read_text().lstrip().startswith("{")
    assert read_complex(cc) == C
    assert read_complex(js) == C
    # explicit format overrides the extension
    write_complex(C, cc, fmt="json")
    assert read_complex(cc) == C  # sniffed from content
    assert read_complex(cc, fmt="json") == C
    with pytest.raises(FormatError, match="unknown format"):
        write_complex(C, cc, fmt="xml")
