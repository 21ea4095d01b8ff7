"""Scheduler tests: exact per-check solving, global constraints, FPN lowering."""
from __future__ import annotations

import pytest

from fpn.codes import Check, gen_rotated_surface, gen_toric, gen_triangular_color
from fpn.layout import build_fpn, build_naive_layout, insert_proxies
from fpn.scheduling import (
    CnotSchedule,
    TimingModel,
    load_schedule,
    round_latency,
    save_schedule,
    schedule_code,
    schedule_fpn,
    solve_check,
    verify_schedule,
)

ABSTRACT_CASES = [
    ("rotated-3", gen_rotated_surface(3)),
    ("rotated-5", gen_rotated_surface(5)),
    ("toric-2", gen_toric(2)),
    ("toric-3", gen_toric(3)),
    ("color-3", gen_triangular_color(3)),
    ("color-5", gen_triangular_color(5)),
]


# --- solve_check --------------------------------------------------------------

def test_isolated_weight4_check_gets_1234():
    check = Check(id=0, basis="Z", support=(10, 11, 12, 13))
    times = solve_check(check)
    assert times == {10: 1, 11: 2, 12: 3, 13: 4}


def test_solve_check_avoids_used_slots():
    check = Check(id=0, basis="Z", support=(0, 1))
    times = solve_check(check, used={0: {1}, 1: {2}})
    assert times[0] != 1 and times[1] != 2
    assert times[0] != times[1]
    assert max(times.values()) == 2  # {0: 2, 1: 1} still fits in two slots

    times = solve_check(check, used={0: {1, 2}, 1: {1, 2}})
    assert sorted(times.values()) == [3, 4]


def test_solve_check_commutation_parity():
    # Z check already placed on qubits {0, 1} at times {2, 3}; an X check
    # sharing both qubits must cross it an even number of times.
    xcheck = Check(id=1, basis="X", support=(0, 1))
    times = solve_check(xcheck, opposing=[{0: 2, 1: 3}])
    crossings = sum(1 for q in (0, 1) if times[q] < {0: 2, 1: 3}[q])
    assert crossings % 2 == 0


def test_solve_check_infeasible_returns_none():
    check = Check(id=0, basis="Z", support=(0, 1, 2))
    assert solve_check(check, used={q: {1, 2, 3} for q in range(3)},
                       bound=3) is None


# --- schedule_code ------------------------------------------------------------

@pytest.mark.parametrize("name,code", ABSTRACT_CASES)
def test_schedule_code_valid_and_within_depth_bound(name, code):
    sched = schedule_code(code)
    assert verify_schedule(sched, code) == []
    dz = max(c.weight for c in code.checks_of("Z"))
    dx = max(c.weight for c in code.checks_of("X"))
    assert sched.depth <= dx + dz
    # every CNOT slot is within the invariant window
    delta_max = max(c.weight for c in code.checks)
    assert all(1 <= t <= 2 * delta_max for t in sched.times.values())


def test_schedule_code_z_before_x_order():
    code = gen_rotated_surface(3)
    sched = schedule_code(code)
    bases = [code.checks[cid].basis for cid in sched.order]
    assert bases == sorted(bases, key=lambda b: b != "Z")


def test_schedule_code_deterministic():
    code = gen_triangular_color(3)
    a, b = schedule_code(code), schedule_code(code)
    assert a.times == b.times and a.order == b.order


def test_verify_schedule_reports_violations():
    code = gen_rotated_surface(3)
    sched = schedule_code(code)

    broken = dict(sched.times)
    victim = code.checks[0]
    q0, q1 = victim.support[0], victim.support[1]
    broken[(victim.id, q0)] = broken[(victim.id, q1)]
    report = verify_schedule(CnotSchedule(broken, sched.t_max, sched.order), code)
    assert any("duplicate" in line for line in report)

    # double-book one qubit across two checks at the same timestep
    zchecks = [c for c in code.checks_of("Z") if len(c.support) >= 2]
    shared_q = None
    for c1 in zchecks:
        for c2 in zchecks:
            if c1.id < c2.id and set(c1.support) & set(c2.support):
                shared_q = sorted(set(c1.support) & set(c2.support))[0]
                pair = (c1, c2)
        if shared_q is not None:
            break
    broken = dict(sched.times)
    broken[(pair[1].id, shared_q)] = broken[(pair[0].id, shared_q)]
    report = verify_schedule(CnotSchedule(broken, sched.t_max, sched.order), code)
    assert any("uniqueness" in line and str(shared_q) in line for line in report)


def test_verify_schedule_reports_commutation():
    # Two overlapping weight-2 checks crossing exactly once.
    from fpn.codes import TannerCode, LogicalOperator

    cz = Check(id=0, basis="Z", support=(0, 1))
    cx = Check(id=1, basis="X", support=(0, 1))
    code = TannerCode(name="toy", n=2, k=0, dx=1, dz=1,
                      checks=(cz, cx), logicals=())
    times = {(0, 0): 1, (0, 1): 4, (1, 0): 2, (1, 1): 3}
    report = verify_schedule(CnotSchedule(times, 4, (0, 1)), code)
    assert any("commutation" in line for line in report)
    # and the schedule produced by the solver is clean
    sched = schedule_code(code)
    assert verify_schedule(sched, code) == []


def test_schedule_unscheduled_reported():
    code = gen_toric(2)
    sched = schedule_code(code)
    times = dict(sched.times)
    missing = next(iter(times))
    del times[missing]
    report = verify_schedule(CnotSchedule(times, sched.t_max, sched.order), code)
    assert any("unscheduled" in line for line in report)


# --- latency ------------------------------------------------------------------

@pytest.mark.parametrize("depth,ns", [(2, 970), (4, 1050), (8, 1210)])
def test_round_latency_formula(depth, ns):
    sched = CnotSchedule(times={}, t_max=depth, order=())
    assert round_latency(sched) == ns


def test_round_latency_surface_schedules_in_range():
    for d in (3, 5):
        sched = schedule_code(gen_rotated_surface(d))
        assert 1050 <= round_latency(sched) <= 1210


def test_timing_model_defaults():
    t = TimingModel()
    assert (t.single_qubit_ns, t.two_qubit_ns, t.measure_ns, t.reset_ns) == \
        (30, 40, 800, 30)


# --- schedule_fpn: naive layouts ----------------------------------------------

def test_fpn_naive_layout_matches_base_schedule():
    code = gen_rotated_surface(3)
    base = schedule_code(code)
    layout = build_naive_layout(code)
    sched = schedule_fpn(layout, base)
    assert sched.times == base.times
    assert len(sched.physical_layers) == base.t_max
    # layer t-1 holds exactly the base CNOTs of slot t, oriented by basis
    basis_of = {c.id: c.basis for c in code.checks}
    for (cid, q), t in base.times.items():
        p = layout.parity_of(cid)
        cx = (q, p) if basis_of[cid] == "Z" else (p, q)
        assert cx in sched.physical_layers[t - 1]
    n_cx = sum(len(layer) for layer in sched.physical_layers)
    assert n_cx == len(base.times)


def _qubit_disjoint_layers(sched):
    for layer in sched.physical_layers:
        touched = [q for cx in layer for q in cx]
        if len(touched) != len(set(touched)):
            return False
    return True


def _all_adjacent(sched, layout):
    edges = layout.edges
    return all(frozenset(cx) in edges
               for layer in sched.physical_layers for cx in layer)


# --- schedule_fpn: flagged layouts --------------------------------------------

@pytest.mark.parametrize("name,code", ABSTRACT_CASES)
def test_fpn_schedule_properties(name, code):
    layout = build_fpn(code, degree_budget=4)
    base = schedule_code(code)
    sched = schedule_fpn(layout, base)
    assert _qubit_disjoint_layers(sched)
    assert _all_adjacent(sched, layout)
    assert sched.depth == len(sched.physical_layers)

    # every (check, data) pair has a slot, and same-basis checks sharing a
    # flag agree on the slot of each shared data qubit (equality constraint)
    basis_of = {c.id: c.basis for c in code.checks}
    for c in code.checks:
        for q in c.support:
            assert (c.id, q) in sched.times
    by_flag: dict[tuple[int, int, str], set[int]] = {}
    for c in code.checks:
        for f, grp in layout.flags_of_check(c.id).items():
            for q in grp:
                by_flag.setdefault((f, q, basis_of[c.id]), set()).add(
                    sched.times[(c.id, q)])
    for (f, q, basis), slots in by_flag.items():
        assert len(slots) == 1, f"flag {f}, qubit {q}: unequal slots {slots}"

    # basis split: every X-check data CNOT strictly after every Z-check one
    # on any shared data qubit
    for cx in code.checks_of("X"):
        for cz in code.checks_of("Z"):
            for q in set(cx.support) & set(cz.support):
                assert sched.times[(cx.id, q)] > sched.times[(cz.id, q)]


def test_fpn_schedule_flag_h_and_sandwich_counts():
    code = gen_rotated_surface(3)
    layout = build_fpn(code, degree_budget=4)
    sched = schedule_fpn(layout, base=schedule_code(code))
    zflags = set()
    for c in code.checks_of("Z"):
        zflags.update(layout.flags_of_check(c.id))
    h_ops = [op for op in sched.round_ops if op[0] == "H"]
    for f in zflags:
        assert sum(1 for op in h_ops if op[1] == f) == 2
    # each (flag, parity) coupling of a Z check appears exactly twice
    # (init + measure-out)
    cx_ops = [op for op in sched.round_ops if op[0] == "CX"]
    for c in code.checks_of("Z"):
        p = layout.parity_of(c.id)
        for f in layout.flags_of_check(c.id):
            count = sum(1 for op in cx_ops if (op[1], op[2]) == (f, p))
            assert count == 2


def test_fpn_schedule_proxy_expansion():
    # force proxies with a tight budget, then check the expansion is present
    code = gen_rotated_surface(3)
    layout = insert_proxies(build_fpn(code, degree_budget=4), degree_budget=3)
    proxies = layout.role_ids("proxy")
    assert proxies, "budget 3 should force at least one proxy"
    sched = schedule_fpn(layout, base=schedule_code(code))
    assert _qubit_disjoint_layers(sched)
    assert _all_adjacent(sched, layout)
    cx_ops = [op for op in sched.round_ops if op[0] == "CX"]
    touched = {q for op in cx_ops for q in (op[1], op[2])}
    assert set(proxies) <= touched
    # a proxy participates an even number of times in its outer sandwich CNOTs:
    # every CNOT with the proxy as target appears an even number of times
    for x in proxies:
        as_target = sum(1 for op in cx_ops if op[2] == x)
        assert as_target % 2 == 0


def test_fpn_schedule_deterministic():
    code = gen_triangular_color(3)
    layout = build_fpn(code, degree_budget=4)
    base = schedule_code(code)
    a = schedule_fpn(layout, base)
    b = schedule_fpn(layout, base)
    assert a.times == b.times
    assert a.physical_layers == b.physical_layers
    assert a.round_ops == b.round_ops


# --- serialization ------------------------------------------------------------

def test_schedule_roundtrip(tmp_path):
    code = gen_rotated_surface(3)
    layout = build_fpn(code, degree_budget=4)
    sched = schedule_fpn(layout, base=schedule_code(code))
    path = tmp_path / "sched.json"
    save_schedule(sched, path)
    back = load_schedule(path)
    assert back.times == sched.times
    assert back.t_max == sched.t_max
    assert back.order == sched.order
    assert back.physical_layers == sched.physical_layers
    assert back.round_ops == sched.round_ops

    import json
    doc = json.loads(path.read_text())
    assert doc["depth"] == sched.depth
    assert doc["latency_ns"] == round_latency(sched)
