"""Code model: generators, validation, brute-force distance oracle, files."""
from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpn.codes import (
    Check,
    LogicalOperator,
    TannerCode,
    code_distance_bruteforce,
    gen_rotated_surface,
    gen_toric,
    gen_triangular_color,
    hyperbolic_family_check,
    load_code,
    save_code,
    validate_code,
)


def test_rotated_surface_parameters():
    c = gen_rotated_surface(3)
    assert (c.n, c.k, c.dx, c.dz) == (9, 1, 3, 3)
    assert len(c.checks) == 8
    c5 = gen_rotated_surface(5)
    assert (c5.n, c5.k) == (25, 1)
    weights = sorted(ch.weight for ch in c5.checks)
    assert weights.count(4) == 16 and weights.count(2) == 8


def test_rotated_surface_degenerate_d1():
    c = gen_rotated_surface(1)
    assert (c.n, c.k, c.dx, c.dz) == (1, 1, 1, 1)
    assert len(c.checks) == 0


def test_rotated_surface_rejects_even_d():
    with pytest.raises(ValueError):
        gen_rotated_surface(4)


@pytest.mark.parametrize("d", [3, 5, 7])
def test_rotated_surface_edge_count(d):
    c = gen_rotated_surface(d)
    assert sum(ch.weight for ch in c.checks) == 4 * (d - 1) ** 2 + 4 * (d - 1)


def test_toric_parameters():
    assert (gen_toric(2).n, gen_toric(2).k) == (8, 2)
    assert (gen_toric(3).n, gen_toric(3).k) == (18, 2)
    assert all(ch.weight == 4 for ch in gen_toric(3).checks)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_toric_qubit_participation(d):
    c = gen_toric(d)
    for q in range(c.n):
        for basis in "XZ":
            assert sum(q in ch.support for ch in c.checks_of(basis)) == 2


def test_triangular_color_parameters():
    c3 = gen_triangular_color(3)
    assert (c3.n, c3.k, c3.dx, c3.dz) == (7, 1, 3, 3)
    assert len(c3.checks_of("X")) == 3 and len(c3.checks_of("Z")) == 3
    c5 = gen_triangular_color(5)
    assert (c5.n, c5.k, c5.dx, c5.dz) == (19, 1, 5, 5)
    assert len(c5.checks_of("X")) == 9


def test_triangular_color_face_structure():
    for d in (3, 5):
        c = gen_triangular_color(d)
        zs = {frozenset(ch.support): ch.color for ch in c.checks_of("Z")}
        xs = {frozenset(ch.support): ch.color for ch in c.checks_of("X")}
        assert zs == xs  # each face yields one X and one Z check on one support
        for q in range(c.n):
            faces = [ch for ch in c.checks_of("Z") if q in ch.support]
            assert 1 <= len(faces) <= 3
            if len(faces) == 3:  # bulk: one face of each color
                assert sorted(f.color for f in faces) == ["B", "G", "R"]


def test_triangular_color_rejects_bad_d():
    with pytest.raises(ValueError):
        gen_triangular_color(4)
    with pytest.raises(ValueError):
        gen_triangular_color(1)


@pytest.mark.parametrize(
    "gen,args,d",
    [
        (gen_rotated_surface, (3,), 3),
        (gen_rotated_surface, (5,), 5),
        (gen_toric, (2,), 2),
        (gen_toric, (3,), 3),
        (gen_triangular_color, (3,), 3),
        (gen_triangular_color, (5,), 5),
    ],
)
def test_generated_codes_validate_and_match_bruteforce_distance(gen, args, d):
    code = gen(*args)
    assert validate_code(code) == []
    assert code_distance_bruteforce(code, d) == (d, d)


def test_distance_reports_above_wmax():
    code = gen_rotated_surface(3)
    assert code_distance_bruteforce(code, 2) == (None, None)


def test_distance_cost_guard():
    with pytest.raises(ValueError):
        code_distance_bruteforce(gen_rotated_surface(7), 5)
    # w_max <= 4 is allowed at any n
    assert code_distance_bruteforce(gen_rotated_surface(7), 2) == (None, None)


def test_validate_reports_odd_overlap():
    bad = TannerCode(
        name="bad", n=2, k=0, dx=1, dz=1,
        checks=(Check(0, "X", (0,)), Check(1, "Z", (0, 1))),
        logicals=())
    report = validate_code(bad)
    assert any("X check 0" in r and "Z check 1" in r for r in report)


def test_validate_reports_logical_anticommutation():
    code = gen_rotated_surface(3)
    bad = TannerCode(
        name="bad", n=9, k=1, dx=3, dz=3, checks=code.checks,
        logicals=(LogicalOperator("X", 0, (0, 3, 6)),
                  LogicalOperator("Z", 0, (0, 1))))
    report = validate_code(bad)
    assert any("logical Z0 anticommutes" in r for r in report)


def test_validate_reports_rank_defect():
    code = gen_rotated_surface(3)
    short = TannerCode(
        name="bad", n=9, k=1, dx=3, dz=3,
        checks=code.checks[:-1], logicals=code.logicals)
    assert any("rank" in r for r in validate_code(short))


HYPERBOLIC_RATES = {
    (4, 5): Fraction(1, 10),
    (4, 6): Fraction(1, 6),
    (5, 5): Fraction(1, 5),
    (5, 6): Fraction(4, 15),
    (4, 8): Fraction(1, 4),
    (4, 10): Fraction(3, 10),
    (5, 8): Fraction(7, 20),
}


def test_hyperbolic_rates_exact():
    for (r, s), rate in HYPERBOLIC_RATES.items():
        valid, bound = hyperbolic_family_check(r, s)
        assert valid and bound == rate


def test_hyperbolic_flat_tilings_invalid():
    for r, s in [(4, 4), (3, 6), (6, 3)]:
        valid, _ = hyperbolic_family_check(r, s)
        assert not valid


@settings(max_examples=200)
@given(st.integers(3, 40), st.integers(3, 40))
def test_hyperbolic_check_monotone(r, s):
    valid, rate = hyperbolic_family_check(r, s)
    if valid:
        assert hyperbolic_family_check(r + 1, s)[0]
        assert hyperbolic_family_check(r, s + 1)[0]
        assert hyperbolic_family_check(r + 1, s)[1] >= rate


def test_code_file_roundtrip(tmp_path):
    for code in (gen_rotated_surface(3), gen_triangular_color(3), gen_toric(2)):
        path = tmp_path / f"{code.name}.json"
        save_code(code, path)
        loaded = load_code(path, verify_distance=code.n <= 19)
        assert (loaded.n, loaded.k, loaded.dx, loaded.dz) == \
            (code.n, code.k, code.dx, code.dz)
        assert {frozenset(c.support) for c in loaded.checks} == \
            {frozenset(c.support) for c in code.checks}
        assert all(c.color for c in loaded.checks) == code.is_color_code


def test_code_file_strictness(tmp_path):
    import json

    save_code(gen_rotated_surface(3), tmp_path / "ok.json")
    doc = json.loads((tmp_path / "ok.json").read_text())

    def expect_reject(mutate, needle):
        bad = json.loads(json.dumps(doc))
        mutate(bad)
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(bad))
        with pytest.raises(ValueError, match=needle):
            load_code(p)

    expect_reject(lambda d: d.update(extra=1), "unknown fields")
    expect_reject(lambda d: d["checks"][0]["support"].reverse(), "not sorted")
    expect_reject(lambda d: d["checks"][0].update(basis="Y"), "basis")
    expect_reject(lambda d: d["params"].pop("dx"), "missing fields")
    expect_reject(lambda d: d["logicals"][0].pop("index"), "missing fields")
    (tmp_path / "trunc.json").write_text("{")
    with pytest.raises(ValueError, match="invalid JSON"):
        load_code(tmp_path / "trunc.json")


def test_code_file_odd_overlap_rejected(tmp_path):
    code = gen_rotated_surface(3)
    bad_checks = (Check(0, "X", (0,)),) + tuple(
        Check(c.id, c.basis, c.support) for c in code.checks[:-1] if c.basis == "Z")
    bad = TannerCode("bad", 9, 1, 3, 3,
                     bad_checks, code.logicals)
    path = tmp_path / "bad.json"
    save_code(bad, path)
    with pytest.raises(ValueError, match="odd"):
        load_code(path)


def test_code_file_distance_verification(tmp_path):
    code = gen_rotated_surface(3)
    lied = TannerCode(code.name, code.n, code.k, 1, 1, code.checks, code.logicals)
    path = tmp_path / "lied.json"
    save_code(lied, path)
    load_code(path)  # trusted by default
    with pytest.raises(ValueError, match="brute force"):
        load_code(path, verify_distance=True)
