"""Filling quadrangulated 2-spheres with cubulated 3-balls."""

import pytest

from cubulations.core import build_complex, cube_faces, validate
from cubulations.fileio import FormatError
from cubulations.fillball import (
    FillCertificate,
    FillError,
    FillFailed,
    fill_ball,
    read_certificate,
    verify_filling,
    write_certificate,
)
from cubulations.transforms import apply_gadget, torus_complex


def boundary_c3():
    return build_complex(2, list(cube_faces(tuple(range(8)))))


def pillar_sphere(depth: int = 1):
    """Boundary of C^3 with `depth` nested square-to-five replacements,
    each applied to a square on the original vertices."""
    C = boundary_c3()
    for i in range(depth):
        sq = C.cells[2][0] if i == 0 else next(
            t for t in C.cells[2] if max(t) < 8)
        C = apply_gadget(C, sq, "insert_square_5")
    return C


def pinwheel_pair():
    """Two square-to-ten replacements; each is odd, together even."""
    S = boundary_c3()
    T = apply_gadget(S, S.cells[2][0], "square_10")
    return apply_gadget(T, next(t for t in T.cells[2] if max(t) < 8),
                        "square_10")


def gadget_corpus():
    """Deterministic family of even quadrangulated spheres with budgets."""
    S = boundary_c3()
    out = [("boundary_c3", S, 4000)]
    for depth in range(1, 7):
        out.append((f"tower_{depth}", pillar_sphere(depth), 4000))
    for i in range(1, 6):
        out.append((f"pillar_at_{i}",
                    apply_gadget(S, S.cells[2][i], "insert_square_5"), 4000))
    base = pillar_sphere(1)
    inner = [t for t in base.cells[2] if max(t) >= 8]
    for i in range(3):
        out.append((f"nested_{i}",
                    apply_gadget(base, inner[i], "insert_square_5"), 4000))
    two = pillar_sphere(2)
    inner2 = [t for t in two.cells[2] if max(t) >= 12]
    for i in range(2):
        out.append((f"deep_nested_{i}",
                    apply_gadget(two, inner2[i], "insert_square_5"), 4000))
    twin = pinwheel_pair()
    out.append(("pinwheel_pair", twin, 1500))
    out.append(("pinwheel_tower",
                apply_gadget(twin, twin.cells[2][-1], "insert_square_5"),
                1500))
    side = apply_gadget(base, base.cells[2][-1], "insert_square_5")
    out.append(("two_pillars", side, 4000))
    out.append(("three_pillars",
                apply_gadget(side, next(t for t in side.cells[2]
                                        if max(t) < 8), "insert_square_5"),
                4000))
    return out


def test_cube_boundary_fills_with_one_cube():
    S = boundary_c3()
    cert = fill_ball(S)
    assert cert.n_cubes == 1
    assert cert.ball.f_vector() == (8, 12, 6, 1)
    assert cert.boundary_iso == {v: v for v in range(8)}


def test_certificate_verifies():
    S = boundary_c3()
    chk = verify_filling(fill_ball(S), S)
    assert chk
    assert chk.reason == ""
    assert chk.witness is None


def test_five_replaced_sphere_fills_small():
    S = pillar_sphere(1)
    cert = fill_ball(S)
    assert cert.n_cubes == 2
    assert cert.ball.f_vector() == (12, 20, 11, 2)
    assert cert.boundary_iso == {v: v for v in range(12)}
    assert verify_filling(cert, S)


def test_pillar_towers_fill_with_linear_cube_count():
    for depth in range(1, 7):
        S = pillar_sphere(depth)
        cert = fill_ball(S)
        assert cert.n_cubes == depth + 1
        assert verify_filling(cert, S)


def test_fill_is_deterministic():
    a = fill_ball(pillar_sphere(2))
    b = fill_ball(pillar_sphere(2))
    assert a.ball == b.ball
    assert a.boundary_iso == b.boundary_iso


def test_failure_is_deterministic():
    errs = []
    for _ in range(2):
        with pytest.raises(FillFailed) as ei:
            fill_ball(pinwheel_pair(), budget=1200)
        errs.append(ei.value)
    assert (errs[0].glued, errs[0].states, errs[0].best) == \
        (errs[1].glued, errs[1].states, errs[1].best)


def test_exhausted_search_reports_frontier():
    with pytest.raises(FillFailed) as ei:
        fill_ball(pinwheel_pair(), budget=1200)
    e = ei.value
    assert e.steps == 1200
    assert e.budget == 1200
    assert e.start == 24
    assert 0 < e.best <= e.start
    assert e.glued > 0 and e.states > e.glued // 2
    assert "never dropped below" in str(e)


def test_odd_square_count_rejected():
    S = boundary_c3()
    odd = apply_gadget(S, S.cells[2][0], "square_10")
    assert len(odd.cells[2]) == 15
    with pytest.raises(FillError, match="odd number of squares"):
        fill_ball(odd)


def test_positive_genus_rejected():
    with pytest.raises(FillError, match="genus 1"):
        fill_ball(torus_complex(2))


def test_open_surface_rejected():
    open_disk = build_complex(
        2, list(cube_faces(tuple(range(8))))[:-1])
    with pytest.raises(FillError, match="not closed"):
        fill_ball(open_disk)


def test_wrong_dimension_rejected():
    ball = fill_ball(boundary_c3()).ball
    with pytest.raises(FillError, match="2-complex"):
        fill_ball(ball)


def test_invalid_complex_rejected():
    C = build_complex(2, [(0, 1, 2, 3), (0, 1, 2, 4)])
    with pytest.raises(FillError, match="not a valid complex"):
        fill_ball(C)


def test_verify_rejects_deleted_cube():
    S = pillar_sphere(2)
    cert = fill_ball(S)
    assert cert.n_cubes == 3
    smaller = build_complex(3, cert.ball.cells[3][:2])
    chk = verify_filling(FillCertificate(smaller, cert.boundary_iso), S)
    assert not chk
    assert chk.reason


def test_verify_rejects_twisted_boundary_map():
    S = boundary_c3()
    cert = fill_ball(S)
    twisted = dict(cert.boundary_iso)
    twisted[1], twisted[2] = 2, 1
    chk = verify_filling(FillCertificate(cert.ball, twisted), S)
    assert not chk
    assert chk.witness is not None
    assert len(chk.witness) in (2, 4)


def test_verify_rejects_wrong_homology():
    two_balls = build_complex(3, [tuple(range(8)), tuple(range(8, 16))])
    assert validate(two_balls).is_complex
    iso = {v: v for v in range(16)}
    chk = verify_filling(FillCertificate(two_balls, iso), boundary_c3())
    assert not chk
    assert "homology" in chk.reason


def test_certificate_file_round_trip(tmp_path):
    S = pillar_sphere(1)
    cert = fill_ball(S)
    path = tmp_path / "ball.cc"
    write_certificate(cert, S, path)
    back = read_certificate(path, S)
    assert back.ball == cert.ball
    assert back.boundary_iso == cert.boundary_iso
    assert verify_filling(back, S)


def test_external_certificate_verified_independently(tmp_path):
    S = boundary_c3()
    n_cells = sum(len(S.cells[k]) for k in range(3))
    lines = ["cubecomplex 3 8", "cube 3 0 1 2 3 4 5 6 7"]
    lines += [f"bmap {i} {i}" for i in range(n_cells)]
    path = tmp_path / "external.cc"
    path.write_text("\n".join(lines) + "\n")
    cert = read_certificate(path, S)
    assert cert.n_cubes == 1
    assert verify_filling(cert, S)


def test_tampered_certificate_file_rejected(tmp_path):
    S = pillar_sphere(1)
    cert = fill_ball(S)
    path = tmp_path / "ball.cc"
    write_certificate(cert, S, path)
    text = path.read_text()
    path.write_text(text.replace("bmap 3 3\n", "bmap 3 4\n"))
    with pytest.raises(FormatError, match="mapped twice"):
        read_certificate(path, S)
    path.write_text("\n".join(text.splitlines()[:-4]) + "\n")
    with pytest.raises(FormatError, match="covers"):
        read_certificate(path, S)


def test_zero_growth_slack_still_fills_shrinking_instances():
    S = pillar_sphere(3)
    cert = fill_ball(S, slack=0)
    assert cert.n_cubes == 4
    assert verify_filling(cert, S)


def test_gadget_corpus_fills_or_fails_explicitly():
    outcomes = {}
    for name, sphere, budget in gadget_corpus():
        assert validate(sphere).is_complex, name
        assert len(sphere.cells[2]) % 2 == 0, name
        try:
            cert = fill_ball(sphere, budget=budget)
        except FillFailed as e:
            outcomes[name] = ("failed", e.best)
            continue
        chk = verify_filling(cert, sphere)
        assert chk, (name, chk.reason)
        outcomes[name] = ("filled", cert.n_cubes)
    assert len(outcomes) >= 20
    filled = sorted(n for n, (kind, _) in outcomes.items()
                    if kind == "filled")
    assert len(filled) >= 17
    # the two pinwheel spheres exceed what the bounded search explores
    assert outcomes["pinwheel_pair"][0] == "failed"
