"""Syndrome-extraction CNOT scheduling.

Two levels:

* ``schedule_code`` — the greedy per-check solver on the abstract code.  Each
  check is scheduled by an exact backtracking search minimizing its t_max
  under (a) all-different within the check, (b) per-qubit uniqueness against
  already-scheduled checks, and (c) the commutation-parity condition against
  every scheduled opposite-basis check sharing qubits.

* ``schedule_fpn`` — lowers a base schedule onto a physical layout.  Layouts
  without flags reproduce the base schedule as physical layers verbatim.
  Flagged layouts are rescheduled into two basis windows (all Z-check data
  CNOTs, then all X-check data CNOTs) with uniqueness keyed on flag qubits;
  a flag shared by two same-basis checks carries a single physical CNOT per
  data qubit, which is the equality constraint.  The window split makes the
  commutation parity hold trivially (every crossing counts zero).  Flag
  init/measure-out CNOTs are packed greedily around each window, and every
  CNOT between non-adjacent qubits is expanded along its proxy path as
  CNOT sandwiches that return each proxy to |0>.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from fpn.codes import Check, TannerCode
from fpn.layout import FpnLayout


@dataclass(frozen=True)
class TimingModel:
    single_qubit_ns: int = 30
    two_qubit_ns: int = 40
    measure_ns: int = 800
    reset_ns: int = 30


# round_ops entries: ("H", qubit) or ("CX", control, target, layer_index)
RoundOp = tuple


@dataclass
class CnotSchedule:
    times: dict[tuple[int, int], int]
    t_max: int
    order: tuple[int, ...]
    physical_layers: tuple[tuple[tuple[int, int], ...], ...] | None = None
    round_ops: tuple[RoundOp, ...] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def depth(self) -> int:
        if self.physical_layers is not None:
            return len(self.physical_layers)
        return self.t_max


def solve_check(
    check: Check,
    used: dict[int, set[int]] | None = None,
    opposing: list[dict[int, int]] = (),
    bound: int | None = None,
) -> dict[int, int] | None:
    """Exact minimum-t_max times for one check, or None if infeasible.

    ``used`` maps qubit → timesteps taken by other checks; ``opposing`` holds,
    per scheduled opposite-basis check sharing qubits, the map from shared
    qubit to its scheduled time.  Ties broken by the lexicographically
    smallest time tuple in support order.
    """
    support = check.support
    delta = len(support)
    if delta == 0:
        return {}
    if bound is None:
        bound = 2 * delta
    used = used or {}
    opp = [
        {q: T for q, T in shared.items() if q in support}
        for shared in opposing
    ]
    opp = [shared for shared in opp if shared]
    for ceiling in range(delta, bound + 1):
        sol = _search_check(support, ceiling, used, opp)
        if sol is not None:
            return dict(zip(support, sol))
    return None


def _search_check(support, ceiling, used, opposing):
    n = len(support)
    assigned: list[int] = []
    taken: set[int] = set()
    # per opposing check: [remaining shared count, parity of (t < T)]
    state = [[len(shared), 0] for shared in opposing]

    def bt(pos: int):
        if pos == n:
            return list(assigned)
        q = support[pos]
        blocked = used.get(q, ())
        for t in range(1, ceiling + 1):
            if t in taken or t in blocked:
                continue
            touched = []
            ok = True
            for j, shared in enumerate(opposing):
                if q in shared:
                    state[j][0] -= 1
                    state[j][1] ^= t < shared[q]
                    touched.append(j)
                    if state[j][0] == 0 and state[j][1]:
                        ok = False
            if ok:
                assigned.append(t)
                taken.add(t)
                res = bt(pos + 1)
                if res is not None:
                    return res
                assigned.pop()
                taken.discard(t)
            for j in touched:
                state[j][0] += 1
                state[j][1] ^= t < opposing[j][q]
        return None

    return bt(0)


def _check_order(code: TannerCode) -> list[Check]:
    return sorted(code.checks, key=lambda c: (c.basis != "Z", c.id))


def schedule_code(code: TannerCode) -> CnotSchedule:
    """Greedy schedule: ascending check id, Z before X, exact per-check."""
    order = _check_order(code)
    delta_max = max((c.weight for c in code.checks), default=0)
    times: dict[tuple[int, int], int] = {}
    used: dict[int, set[int]] = {}
    scheduled: list[Check] = []
    for c in order:
        opposing = []
        for prev in scheduled:
            if prev.basis == c.basis:
                continue
            shared = set(prev.support) & set(c.support)
            if shared:
                opposing.append({q: times[(prev.id, q)] for q in shared})
        res = solve_check(c, used, opposing, bound=2 * delta_max)
        if res is None:
            res = solve_check(c, used, opposing, bound=2 * delta_max + c.weight)
        if res is None:  # disjoint trailing window: always feasible
            start = max(times.values(), default=0)
            res = {q: start + i + 1 for i, q in enumerate(c.support)}
        for q, t in res.items():
            times[(c.id, q)] = t
            used.setdefault(q, set()).add(t)
        scheduled.append(c)
    return CnotSchedule(
        times=times,
        t_max=max(times.values(), default=0),
        order=tuple(c.id for c in order),
        meta={"check_order": "Z checks ascending id, then X checks ascending id"})


def verify_schedule(schedule: CnotSchedule, code: TannerCode) -> list[str]:
    """Independent constraint re-derivation; empty report iff valid."""
    report: list[str] = []
    times = schedule.times
    for c in code.checks:
        ts = []
        for q in c.support:
            t = times.get((c.id, q))
            if t is None:
                report.append(f"check {c.id}: qubit {q} unscheduled")
            else:
                if t < 1:
                    report.append(f"check {c.id}: qubit {q} at t={t} < 1")
                ts.append(t)
        if len(set(ts)) != len(ts):
            report.append(f"check {c.id}: duplicate timesteps {sorted(ts)}")
    slot: dict[tuple[int, int], list[int]] = {}
    for (cid, q), t in times.items():
        slot.setdefault((q, t), []).append(cid)
    for (q, t), cids in sorted(slot.items()):
        if len(cids) > 1:
            report.append(
                f"uniqueness: qubit {q} in checks {sorted(cids)} both at t={t}")
    for cx in code.checks_of("X"):
        for cz in code.checks_of("Z"):
            shared = sorted(set(cx.support) & set(cz.support))
            if not shared:
                continue
            pairs = [(times.get((cx.id, q)), times.get((cz.id, q))) for q in shared]
            if any(a is None or b is None for a, b in pairs):
                continue
            crossings = sum(1 for a, b in pairs if a < b)
            if crossings % 2:
                report.append(
                    f"commutation: X check {cx.id} / Z check {cz.id} cross an odd "
                    f"number of times ({crossings} of {len(shared)} shared)")
    return report


def round_latency(schedule: CnotSchedule, timing: TimingModel = TimingModel()) -> int:
    """890 ns + 40 ns per CNOT layer, per the fixed latency accounting."""
    return (2 * timing.single_qubit_ns
            + timing.two_qubit_ns * schedule.depth
            + timing.measure_ns + timing.reset_ns)


# --- FPN lowering -------------------------------------------------------------

def _route(adj: dict[int, set[int]], roles: dict[int, str], a: int, b: int) -> list[int]:
    """Shortest a→b path whose interior vertices are proxies only."""
    if b in adj[a]:
        return [a, b]
    frontier = [[a]]
    seen = {a}
    while frontier:
        nxt = []
        for path in frontier:
            for u in sorted(adj[path[-1]]):
                if u in seen:
                    continue
                if u == b:
                    return path + [u]
                if roles[u] == "proxy":
                    seen.add(u)
                    nxt.append(path + [u])
        frontier = nxt
    raise ValueError(f"no proxy path between qubits {a} and {b}")


def _expand(path: list[int]) -> list[tuple[int, int]]:
    """CNOT(path[0] → path[-1]) as a sandwich of adjacent CNOTs (2h+1)."""
    if len(path) == 2:
        return [(path[0], path[1])]
    outer = (path[0], path[1])
    inner = _expand(path[1:])
    return [outer] + inner + [outer]


class _LayerPacker:
    """Packs expanded CNOT sequences into physical layers.

    Each logical layer is placed into a fresh block of physical layers;
    within the block, sequences start as early as qubit-disjointness allows,
    and sequences routed through a common proxy never overlap in time (the
    proxy must return to |0> between expansions).
    """

    def __init__(self):
        self.layers: list[list[tuple[int, int]]] = []
        self.ops: list[RoundOp] = []
        self._block: list[RoundOp] = []

    def _flush(self):
        self.ops.extend(sorted(self._block, key=lambda op: op[3]))
        self._block.clear()

    def add_h(self, qubits):
        self._flush()
        for q in sorted(qubits):
            self.ops.append(("H", q))

    def add_cx_layer(self, cnots, adj, roles):
        base = len(self.layers)
        busy: list[set[int]] = []
        spans: dict[int, list[tuple[int, int]]] = {}  # proxy -> taken spans
        for ctrl, tgt in sorted(cnots):
            path = _route(adj, roles, ctrl, tgt)
            steps = _expand(path)
            proxies = [v for v in path[1:-1]]
            off = 0
            while True:
                ok = True
                for i, (a, b) in enumerate(steps):
                    while len(busy) <= off + i:
                        busy.append(set())
                    if a in busy[off + i] or b in busy[off + i]:
                        ok = False
                        break
                if ok:
                    for x in proxies:
                        for s0, s1 in spans.get(x, ()):
                            if off < s1 and s0 < off + len(steps):
                                ok = False
                                break
                        if not ok:
                            break
                if ok:
                    break
                off += 1
            for i, (a, b) in enumerate(steps):
                busy[off + i].update((a, b))
                while len(self.layers) <= base + off + i:
                    self.layers.append([])
                self.layers[base + off + i].append((a, b))
                self._block.append(("CX", a, b, base + off + i))
            for x in proxies:
                spans.setdefault(x, []).append((off, off + len(steps)))
        self._flush()

    def result(self):
        self._flush()
        return (tuple(tuple(sorted(layer)) for layer in self.layers),
                tuple(self.ops))


def _solve_window(layout: FpnLayout, basis: str, order: list[Check],
                  bound: int) -> tuple[dict[tuple[int, int], int], int]:
    """Data-CNOT slots for one basis window under flag-keyed uniqueness."""
    times: dict[tuple[int, int], int] = {}
    qubit_taken: dict[int, set[int]] = {}
    flag_taken: dict[int, set[int]] = {}
    placed: dict[tuple[int, int], int] = {}  # (data qubit, flag) -> slot
    for c in order:
        fmap = layout.flags_of_check(c.id)
        qflag = {q: f for f, grp in fmap.items() for q in grp}
        forced = {}
        free = []
        for q in c.support:
            key = (q, qflag[q])
            if key in placed:
                forced[q] = placed[key]
            else:
                free.append(q)
        sol = _search_window(free, qflag, forced, qubit_taken, flag_taken, bound)
        if sol is None:
            sol = _search_window(free, qflag, forced, qubit_taken, flag_taken,
                                 bound + c.weight)
        if sol is None:  # trailing window
            start = max([0] + [t for s in qubit_taken.values() for t in s]
                        + [t for s in flag_taken.values() for t in s]
                        + list(forced.values()))
            sol = {q: start + i + 1 for i, q in enumerate(free)}
        for q in free:
            t = sol[q]
            times[(c.id, q)] = t
            placed[(q, qflag[q])] = t
            qubit_taken.setdefault(q, set()).add(t)
            flag_taken.setdefault(qflag[q], set()).add(t)
        for q, t in forced.items():
            times[(c.id, q)] = t
    window_max = max(times.values(), default=0)
    return times, window_max


def _search_window(free, qflag, forced, qubit_taken, flag_taken, bound):
    n = len(free)
    if n == 0:
        return {}
    lo = max([1] + list(forced.values()))
    for ceiling in range(lo, bound + 1):
        assigned: dict[int, int] = {}

        def bt(pos: int):
            if pos == n:
                return dict(assigned)
            q = free[pos]
            f = qflag[q]
            for t in range(1, ceiling + 1):
                if t in qubit_taken.get(q, ()) or t in flag_taken.get(f, ()):
                    continue
                if any(t == tt and qflag[qq] == f
                       for qq, tt in assigned.items()):
                    continue
                if any(t == tt and qq == q for qq, tt in assigned.items()):
                    continue
                assigned[q] = t
                res = bt(pos + 1)
                if res is not None:
                    return res
                del assigned[q]
            return None

        sol = bt(0)
        if sol is not None:
            return sol
    return None


def _pack_pairs(pairs) -> list[list[tuple[int, int]]]:
    """Greedy first-fit of CNOT endpoint pairs into qubit-disjoint layers."""
    layers: list[list[tuple[int, int]]] = []
    occupied: list[set[int]] = []
    for a, b in sorted(pairs):
        for i, occ in enumerate(occupied):
            if a not in occ and b not in occ:
                layers[i].append((a, b))
                occ.update((a, b))
                break
        else:
            layers.append([(a, b)])
            occupied.append({a, b})
    return layers


def schedule_fpn(layout: FpnLayout, base: CnotSchedule) -> CnotSchedule:
    """Lower a base schedule onto the layout, producing physical layers."""
    code = layout.code
    adj = layout.adjacency()
    roles = {q.id: q.role for q in layout.qubits}
    has_flags = any(q.role == "flag" for q in layout.qubits)
    packer = _LayerPacker()

    if not has_flags:
        xparities = sorted(layout.parity_of(c.id) for c in code.checks_of("X"))
        packer.add_h(xparities)
        by_slot: dict[int, list[tuple[int, int]]] = {}
        basis_of = {c.id: c.basis for c in code.checks}
        for (cid, q), t in base.times.items():
            p = layout.parity_of(cid)
            cx = (q, p) if basis_of[cid] == "Z" else (p, q)
            by_slot.setdefault(t, []).append(cx)
        for t in sorted(by_slot):
            packer.add_cx_layer(by_slot[t], adj, roles)
        packer.add_h(xparities)
        layers, ops = packer.result()
        return CnotSchedule(
            times=dict(base.times), t_max=base.t_max, order=base.order,
            physical_layers=layers, round_ops=ops,
            meta={**base.meta, "fpn": "direct (no flags)"})

    delta_max = max(c.weight for c in code.checks)
    zorder = [c for c in _check_order(code) if c.basis == "Z"]
    xorder = [c for c in _check_order(code) if c.basis == "X"]
    ztimes, zmax = _solve_window(layout, "Z", zorder, 2 * delta_max)
    xtimes, xmax = _solve_window(layout, "X", xorder, 2 * delta_max)

    def window_flags(order):
        flags = set()
        for c in order:
            flags.update(layout.flags_of_check(c.id))
        return flags

    zflags = window_flags(zorder)
    xflags = window_flags(xorder)

    def init_pairs(order, basis):
        pairs = []
        for c in order:
            p = layout.parity_of(c.id)
            for f in layout.flags_of_check(c.id):
                pairs.append((f, p) if basis == "Z" else (p, f))
        return pairs

    def emit_window(basis, order, wtimes, wmax, flags):
        if basis == "Z":
            packer.add_h(flags)
        else:
            packer.add_h(sorted(layout.parity_of(c.id) for c in order))
        for layer in _pack_pairs(init_pairs(order, basis)):
            packer.add_cx_layer(layer, adj, roles)
        qflag_all = {}
        for c in order:
            for f, grp in layout.flags_of_check(c.id).items():
                for q in grp:
                    qflag_all[(c.id, q)] = f
        by_slot: dict[int, set[tuple[int, int]]] = {}
        for (cid, q), t in wtimes.items():
            f = qflag_all[(cid, q)]
            cx = (q, f) if basis == "Z" else (f, q)
            by_slot.setdefault(t, set()).add(cx)  # shared flags: one CNOT
        for t in sorted(by_slot):
            packer.add_cx_layer(sorted(by_slot[t]), adj, roles)
        for layer in _pack_pairs(init_pairs(order, basis)):
            packer.add_cx_layer(layer, adj, roles)
        if basis == "Z":
            packer.add_h(flags)
        else:
            packer.add_h(sorted(layout.parity_of(c.id) for c in order))

    emit_window("Z", zorder, ztimes, zmax, sorted(zflags))
    emit_window("X", xorder, xtimes, xmax, sorted(xflags))

    times = dict(ztimes)
    for (cid, q), t in xtimes.items():
        times[(cid, q)] = t + zmax
    layers, ops = packer.result()
    return CnotSchedule(
        times=times, t_max=max(times.values(), default=0),
        order=tuple(c.id for c in zorder + xorder),
        physical_layers=layers, round_ops=ops,
        meta={**base.meta,
              "fpn": "basis-split windows, flag-keyed uniqueness",
              "z_window_depth": zmax, "x_window_depth": xmax})


# --- serialization ------------------------------------------------------------

def save_schedule(schedule: CnotSchedule, path,
                  timing: TimingModel = TimingModel()) -> None:
    import json

    doc = {
        "times": sorted([cid, q, t] for (cid, q), t in schedule.times.items()),
        "t_max": schedule.t_max,
        "order": list(schedule.order),
        "depth": schedule.depth,
        "latency_ns": round_latency(schedule, timing),
        "meta": schedule.meta,
    }
    if schedule.physical_layers is not None:
        doc["layers"] = [
            [list(cx) for cx in layer] for layer in schedule.physical_layers]
        doc["round_ops"] = [list(op) for op in schedule.round_ops]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_schedule(path) -> CnotSchedule:
    import json

    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    layers = None
    ops = None
    if "layers" in doc:
        layers = tuple(tuple(tuple(cx) for cx in layer) for layer in doc["layers"])
        ops = tuple(tuple(op) for op in doc["round_ops"])
    return CnotSchedule(
        times={(cid, q): t for cid, q, t in doc["times"]},
        t_max=doc["t_max"],
        order=tuple(doc["order"]),
        physical_layers=layers,
        round_ops=ops,
        meta=doc.get("meta", {}))
