"""Abstract code model: CSS checks, logicals, validation, generators, code files.

A :class:`TannerCode` is the purely combinatorial description of a CSS code —
data-qubit count, X/Z checks with optional face colors, and explicit logical
operators.  Everything downstream (layout building, scheduling, circuit
lowering) consumes this type and nothing else, so external codes supplied as
JSON files are first-class citizens alongside the built-in generators.

Support order convention: the in-memory ``Check.support`` tuple is stored in
*syndrome-extraction preference order* (plaquette traversal order chosen so
that hook faults stay benign; face-cycle order for color codes).  The JSON
file format, by contrast, stores all arrays sorted ascending.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

BASES = ("X", "Z")
COLORS = ("R", "G", "B")


@dataclass(frozen=True)
class Check:
    """One stabilizer generator measured by a parity qubit."""

    id: int
    basis: str
    support: tuple[int, ...]
    color: str | None = None

    @property
    def weight(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class LogicalOperator:
    basis: str
    qubit_index: int
    support: tuple[int, ...]


@dataclass(frozen=True)
class TannerCode:
    name: str
    n: int
    k: int
    dx: int
    dz: int
    checks: tuple[Check, ...]
    logicals: tuple[LogicalOperator, ...]
    family: tuple[int, int] | None = None

    def checks_of(self, basis: str) -> tuple[Check, ...]:
        return tuple(c for c in self.checks if c.basis == basis)

    def logicals_of(self, basis: str) -> tuple[LogicalOperator, ...]:
        return tuple(l for l in self.logicals if l.basis == basis)

    @property
    def is_color_code(self) -> bool:
        return bool(self.checks) and all(c.color is not None for c in self.checks)


def _mask(support) -> int:
    m = 0
    for q in support:
        m |= 1 << q
    return m


def _odd(a: int, b: int) -> bool:
    return bool((a & b).bit_count() & 1)


def gf2_rank(rows: list[int]) -> int:
    """Rank of a GF(2) matrix given as row bitmasks."""
    rank = 0
    rows = [r for r in rows if r]
    while rows:
        pivot = rows.pop()
        if pivot == 0:
            continue
        low = pivot & -pivot
        rows = [r ^ pivot if r & low else r for r in rows]
        rank += 1
    return rank


def validate_code(code: TannerCode) -> list[str]:
    """Check every structural invariant; returns one message per violation."""
    report: list[str] = []
    if code.n < 1:
        report.append(f"n must be positive, got {code.n}")
        return report
    if not 0 <= code.k <= code.n:
        report.append(f"k={code.k} outside [0, n={code.n}]")

    ids = [c.id for c in code.checks]
    if len(set(ids)) != len(ids):
        report.append("check ids are not unique")
    for c in code.checks:
        if c.basis not in BASES:
            report.append(f"check {c.id}: bad basis {c.basis!r}")
        if len(set(c.support)) != len(c.support):
            report.append(f"check {c.id}: duplicate support entries")
        if any(q < 0 or q >= code.n for q in c.support):
            report.append(f"check {c.id}: support entry outside [0, {code.n})")
        if c.color is not None and c.color not in COLORS:
            report.append(f"check {c.id}: bad color {c.color!r}")
    colored = [c for c in code.checks if c.color is not None]
    if colored and len(colored) != len(code.checks):
        report.append("some checks are colored and some are not")

    xchecks = code.checks_of("X")
    zchecks = code.checks_of("Z")
    for cx in xchecks:
        mx = _mask(cx.support)
        for cz in zchecks:
            if _odd(mx, _mask(cz.support)):
                report.append(
                    f"X check {cx.id} and Z check {cz.id} overlap on an odd "
                    f"number of qubits")

    for basis in BASES:
        logs = code.logicals_of(basis)
        idxs = sorted(l.qubit_index for l in logs)
        if idxs != list(range(code.k)):
            report.append(f"{basis} logicals do not cover qubit indices 0..{code.k - 1}")
        for l in logs:
            if not l.support:
                report.append(f"logical {basis}{l.qubit_index}: empty support")
            if any(q < 0 or q >= code.n for q in l.support):
                report.append(f"logical {basis}{l.qubit_index}: support outside range")
            if len(l.support) < min(code.dx, code.dz):
                report.append(
                    f"logical {basis}{l.qubit_index}: weight {len(l.support)} below "
                    f"min(dx, dz) = {min(code.dx, code.dz)}")

    # logicals commute with all checks
    for l in code.logicals:
        lm = _mask(l.support)
        for c in code.checks:
            if c.basis != l.basis and _odd(lm, _mask(c.support)):
                report.append(
                    f"logical {l.basis}{l.qubit_index} anticommutes with "
                    f"{c.basis} check {c.id}")

    # symplectic pairing between X and Z logicals
    for lx in code.logicals_of("X"):
        for lz in code.logicals_of("Z"):
            want_odd = lx.qubit_index == lz.qubit_index
            if _odd(_mask(lx.support), _mask(lz.support)) != want_odd:
                kind = "commutes with" if want_odd else "anticommutes with"
                report.append(
                    f"logical X{lx.qubit_index} {kind} logical Z{lz.qubit_index}")

    rx = gf2_rank([_mask(c.support) for c in xchecks])
    rz = gf2_rank([_mask(c.support) for c in zchecks])
    if rx + rz != code.n - code.k:
        report.append(
            f"rank(Hx) + rank(Hz) = {rx}+{rz} != n-k = {code.n - code.k}")
    return report


def _checked(code: TannerCode) -> TannerCode:
    report = validate_code(code)
    if report:
        raise AssertionError("generator produced invalid code: " + "; ".join(report))
    return code


def gen_rotated_surface(d: int) -> TannerCode:
    """Rotated surface code [[d^2, 1, d]] on a d x d data grid.

    Bulk plaquette supports are ordered so that two-qubit hook faults from the
    syndrome-extraction schedule act along the matching logical direction
    (Z plaquettes traverse column-first, X plaquettes row-first).
    """
    if d < 1 or d % 2 == 0:
        raise ValueError(f"rotated surface code requires odd d >= 1, got {d}")
    q = lambda r, c: d * r + c
    zsup: list[tuple[int, ...]] = []
    xsup: list[tuple[int, ...]] = []
    for r in range(d - 1):
        for c in range(d - 1):
            if (r + c) % 2 == 0:
                xsup.append((q(r, c), q(r, c + 1), q(r + 1, c), q(r + 1, c + 1)))
            else:
                zsup.append((q(r, c), q(r + 1, c), q(r, c + 1), q(r + 1, c + 1)))
    for c in range(d - 1):  # top/bottom X boundary pairs
        if c % 2 == 1:
            xsup.append((q(0, c), q(0, c + 1)))
        else:
            xsup.append((q(d - 1, c), q(d - 1, c + 1)))
    for r in range(d - 1):  # left/right Z boundary pairs
        if r % 2 == 0:
            zsup.append((q(r, 0), q(r + 1, 0)))
        else:
            zsup.append((q(r, d - 1), q(r + 1, d - 1)))
    checks = tuple(
        [Check(i, "Z", s) for i, s in enumerate(zsup)]
        + [Check(len(zsup) + i, "X", s) for i, s in enumerate(xsup)])
    logicals = (
        LogicalOperator("X", 0, tuple(q(r, 0) for r in range(d))),
        LogicalOperator("Z", 0, tuple(q(0, c) for c in range(d))),
    )
    return _checked(TannerCode(
        name=f"rotated_surface_{d}", n=d * d, k=1, dx=d, dz=d,
        checks=checks, logicals=logicals))


def gen_toric(d: int) -> TannerCode:
    """Toric code [[2d^2, 2, d]] on a periodic d x d lattice."""
    if d < 2:
        raise ValueError(f"toric code requires d >= 2, got {d}")
    h = lambda r, c: (r % d) * d + (c % d)
    v = lambda r, c: d * d + (r % d) * d + (c % d)
    zsup = [
        (h(r, c), v(r, c), h(r + 1, c), v(r, c + 1))
        for r in range(d) for c in range(d)
    ]
    xsup = [
        (h(r, c), v(r, c), h(r, c - 1), v(r - 1, c))
        for r in range(d) for c in range(d)
    ]
    checks = tuple(
        [Check(i, "Z", s) for i, s in enumerate(zsup)]
        + [Check(d * d + i, "X", s) for i, s in enumerate(xsup)])
    logicals = (
        LogicalOperator("X", 0, tuple(h(r, 0) for r in range(d))),
        LogicalOperator("X", 1, tuple(v(0, c) for c in range(d))),
        LogicalOperator("Z", 0, tuple(h(0, c) for c in range(d))),
        LogicalOperator("Z", 1, tuple(v(r, 0) for r in range(d))),
    )
    return _checked(TannerCode(
        name=f"toric_{d}", n=2 * d * d, k=2, dx=d, dz=d,
        checks=checks, logicals=logicals))


# --- triangular (6.6.6) color codes -----------------------------------------
#
# Brick-wall honeycomb: vertices (x, y) with zigzag edges (x,y)-(x+1,y) and
# vertical edges (x,y)-(x,y+1) when x+y is even.  A distance-d triangular
# patch is cut out by three lattice-straight half-planes; corner hexagons
# become weight-4 faces.  Face color is the hexagon 3-coloring.

_HEX_CYCLE = ((0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (0, 1))


def _tri_y4(x: int, y: int) -> int:
    return 6 * y + (1 if (x + y) % 2 == 0 else -1)


def gen_triangular_color(d: int) -> TannerCode:
    """Triangular (6.6.6) color code [[(3d^2+1)/4, 1, d]] for odd d >= 3."""
    if d < 3 or d % 2 == 0:
        raise ValueError(f"triangular color code requires odd d >= 3, got {d}")
    b1 = -27 + 6 * (d - 3)
    keep: set[tuple[int, int]] = set()
    for y in range(-6 - d, 2):
        for x in range(-5, 2 * d):
            y4 = _tri_y4(x, y)
            if 2 * x + y4 <= b1 and 2 * x - y4 <= 19:
                keep.add((x, y))
    verts = sorted(keep)
    idx = {v: i for i, v in enumerate(verts)}

    faces: list[tuple[tuple[int, ...], str]] = []
    for y in range(min(v[1] for v in verts) - 1, max(v[1] for v in verts) + 1):
        for x in range(min(v[0] for v in verts) - 2, max(v[0] for v in verts) + 2):
            if (x + y) % 2:
                continue
            inside = [(x + dx, y + dy) in keep for dx, dy in _HEX_CYCLE]
            cnt = sum(inside)
            if cnt == 6 or (cnt == 4 and _removed_adjacent(inside)):
                cycle = tuple(
                    idx[(x + dx, y + dy)]
                    for i, (dx, dy) in enumerate(_HEX_CYCLE) if inside[i])
                color = COLORS[((x - y) // 2 - y) % 3]
                faces.append((cycle, color))
            elif cnt in (3, 5):
                raise AssertionError("triangle cut produced an odd face")
    faces.sort(key=lambda fc: min(fc[0]))

    n = len(verts)
    checks = tuple(
        [Check(i, "Z", sup, color) for i, (sup, color) in enumerate(faces)]
        + [Check(len(faces) + i, "X", sup, color)
           for i, (sup, color) in enumerate(faces)])
    side = tuple(idx[v] for v in verts if v[0] == -5)
    logicals = (
        LogicalOperator("X", 0, side),
        LogicalOperator("Z", 0, side),
    )
    return _checked(TannerCode(
        name=f"triangular_color_{d}", n=n, k=1, dx=d, dz=d,
        checks=checks, logicals=logicals))


def _removed_adjacent(inside: list[bool]) -> bool:
    out = [i for i, b in enumerate(inside) if not b]
    return (out[1] - out[0]) % 6 in (1, 5)


def hyperbolic_family_check(r: int, s: int) -> tuple[bool, Fraction]:
    """Whether the {r,s} tiling is hyperbolic, and its asymptotic rate bound."""
    if r < 3 or s < 3:
        raise ValueError(f"Schlafli parameters must be >= 3, got {{{r},{s}}}")
    valid = Fraction(1, r) + Fraction(1, s) < Fraction(1, 2)
    return valid, 1 - Fraction(2, r) - Fraction(2, s)


def code_distance_bruteforce(
    code: TannerCode, w_max: int,
) -> tuple[int | None, int | None]:
    """Exhaustive per-basis distance, exact up to ``w_max``.

    Returns ``(dx, dz)`` where an entry is the minimum weight of a Pauli of
    that basis commuting with all checks but anticommuting with some logical,
    or ``None`` when every such operator has weight > w_max.
    """
    if code.n > 30 and w_max > 4:
        raise ValueError(
            f"cost guard: need n <= 30 or w_max <= 4 (n={code.n}, w_max={w_max})")
    out: list[int | None] = []
    for basis in BASES:
        other = "Z" if basis == "X" else "X"
        check_masks = [_mask(c.support) for c in code.checks_of(other)]
        log_masks = [_mask(l.support) for l in code.logicals_of(other)]
        found: int | None = None
        for w in range(1, w_max + 1):
            for combo in combinations(range(code.n), w):
                word = _mask(combo)
                if any(_odd(word, m) for m in check_masks):
                    continue
                if any(_odd(word, m) for m in log_masks):
                    found = w
                    break
            if found is not None:
                break
        out.append(found)
    return out[0], out[1]


# --- JSON code files ---------------------------------------------------------

def _err(where: str, msg: str) -> ValueError:
    return ValueError(f"code file {where}: {msg}")


def _expect_keys(obj: dict, where: str, required: set[str], optional: set[str] = frozenset()):
    if not isinstance(obj, dict):
        raise _err(where, f"expected object, got {type(obj).__name__}")
    unknown = set(obj) - required - optional
    if unknown:
        raise _err(where, f"unknown fields {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise _err(where, f"missing fields {sorted(missing)}")


def _int_array(arr, where: str) -> tuple[int, ...]:
    if not isinstance(arr, list) or not all(isinstance(x, int) for x in arr):
        raise _err(where, "expected an integer array")
    if any(b <= a for a, b in zip(arr, arr[1:])):
        raise _err(where, "array not sorted strictly ascending")
    return tuple(arr)


def load_code(path, verify_distance: bool = False) -> TannerCode:
    """Parse a JSON code file (strict) and validate its algebra."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise _err(str(path), f"invalid JSON at line {e.lineno}: {e.msg}") from e
    return code_from_doc(doc, verify_distance=verify_distance)


def code_from_doc(doc: dict, verify_distance: bool = False) -> TannerCode:
    """Strictly parse the JSON document form of a code."""
    _expect_keys(doc, "top level", {"name", "params", "checks", "logicals"}, {"family"})
    params = doc["params"]
    _expect_keys(params, "params", {"n", "k", "dx", "dz"})
    if not all(isinstance(params[f], int) for f in ("n", "k", "dx", "dz")):
        raise _err("params", "n, k, dx, dz must be integers")
    family = None
    if "family" in doc:
        _expect_keys(doc["family"], "family", {"r", "s"})
        family = (doc["family"]["r"], doc["family"]["s"])
    checks = []
    for i, c in enumerate(doc["checks"]):
        where = f"checks[{i}]"
        _expect_keys(c, where, {"id", "basis", "support"}, {"color"})
        if c["basis"] not in BASES:
            raise _err(where, f"basis must be X or Z, got {c['basis']!r}")
        checks.append(Check(
            id=c["id"], basis=c["basis"],
            support=_int_array(c["support"], where + ".support"),
            color=c.get("color")))
    if [c.id for c in checks] != sorted(c.id for c in checks):
        raise _err("checks", "not sorted ascending by id")
    logicals = []
    for i, l in enumerate(doc["logicals"]):
        where = f"logicals[{i}]"
        _expect_keys(l, where, {"basis", "index", "support"})
        logicals.append(LogicalOperator(
            basis=l["basis"], qubit_index=l["index"],
            support=_int_array(l["support"], where + ".support")))
    code = TannerCode(
        name=doc["name"], n=params["n"], k=params["k"],
        dx=params["dx"], dz=params["dz"],
        checks=tuple(checks), logicals=tuple(logicals), family=family)
    report = validate_code(code)
    if report:
        raise _err("validation", "; ".join(report))
    if verify_distance:
        dx, dz = code_distance_bruteforce(code, max(code.dx, code.dz))
        if (dx, dz) != (code.dx, code.dz):
            raise _err("validation",
                       f"declared distances ({code.dx},{code.dz}) but brute force "
                       f"found ({dx},{dz})")
    return code


def save_code(code: TannerCode, path) -> None:
    """Write the canonical JSON form (all arrays sorted ascending)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(code_to_doc(code), fh, indent=1)
        fh.write("\n")


def code_to_doc(code: TannerCode) -> dict:
    doc: dict = {
        "name": code.name,
        "params": {"n": code.n, "k": code.k, "dx": code.dx, "dz": code.dz},
        "checks": [
            {"id": c.id, "basis": c.basis, "support": sorted(c.support),
             **({"color": c.color} if c.color is not None else {})}
            for c in sorted(code.checks, key=lambda c: c.id)
        ],
        "logicals": [
            {"basis": l.basis, "index": l.qubit_index, "support": sorted(l.support)}
            for l in sorted(code.logicals, key=lambda l: (l.basis, l.qubit_index))
        ],
    }
    if code.family is not None:
        doc["family"] = {"r": code.family[0], "s": code.family[1]}
    return doc
