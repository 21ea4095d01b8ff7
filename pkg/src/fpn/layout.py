"""Flag-Proxy Network layout construction.

Pipeline: ``build_naive_layout`` (bipartite data-parity graph) →
``assign_flags`` (each check's data edges rerouted through ⌈δ/2⌉ flags) →
``share_flags`` (maximum-weight matching merges flags across checks) →
``insert_proxies`` (degree reduction to the budget Δ).  Layouts are plain
immutable-by-convention dataclasses; every stage returns a new object.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from fpn.codes import TannerCode, code_from_doc, code_to_doc
from fpn.matching import max_weight_matching

ROLES = ("data", "parity", "flag", "proxy")

# flag_assignments value: tuple of (check id, covered data-qubit group)
FlagDuty = tuple[int, tuple[int, ...]]


@dataclass(frozen=True)
class PhysicalQubit:
    id: int
    role: str
    source: int | None = None


@dataclass(frozen=True)
class ProxyChain:
    """Creation context of one proxy: the congested host and what moved."""

    host: int
    moved: tuple[int, ...]


@dataclass(frozen=True)
class FpnLayout:
    code: TannerCode
    qubits: tuple[PhysicalQubit, ...]
    edges: frozenset[frozenset[int]]
    flag_assignments: dict[int, tuple[FlagDuty, ...]] = field(default_factory=dict)
    proxy_chains: dict[int, ProxyChain] = field(default_factory=dict)
    degree_budget: int | None = None

    @property
    def N(self) -> int:
        return len(self.qubits)

    def role_ids(self, role: str) -> list[int]:
        return [q.id for q in self.qubits if q.role == role]

    def parity_of(self, check_id: int) -> int:
        for q in self.qubits:
            if q.role == "parity" and q.source == check_id:
                return q.id
        raise KeyError(f"no parity qubit for check {check_id}")

    def neighbors(self, qubit: int) -> list[int]:
        out = []
        for e in self.edges:
            if qubit in e:
                (other,) = e - {qubit}
                out.append(other)
        return sorted(out)

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {q.id: set() for q in self.qubits}
        for e in self.edges:
            u, v = tuple(e)
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def flags_of_check(self, check_id: int) -> dict[int, tuple[int, ...]]:
        """flag qubit id → the data group it covers for this check."""
        out = {}
        for fid, duties in self.flag_assignments.items():
            for cid, group in duties:
                if cid == check_id:
                    out[fid] = group
        return out


@dataclass(frozen=True)
class LayoutMetrics:
    effective_rate: Fraction
    ideal_rate: Fraction
    mean_degree: Fraction
    max_degree: int
    role_counts: dict[str, int]


def _edge(u: int, v: int) -> frozenset[int]:
    return frozenset((u, v))


def build_naive_layout(code: TannerCode) -> FpnLayout:
    """Bipartite data-parity layout: one edge per (check, support qubit)."""
    qubits = [PhysicalQubit(i, "data", i) for i in range(code.n)]
    parity_id = {}
    for c in sorted(code.checks, key=lambda c: c.id):
        qid = len(qubits)
        parity_id[c.id] = qid
        qubits.append(PhysicalQubit(qid, "parity", c.id))
    edges = {
        _edge(q, parity_id[c.id]) for c in code.checks for q in c.support
    }
    return FpnLayout(code=code, qubits=tuple(qubits), edges=frozenset(edges))


def _pair_consecutive(support: tuple[int, ...]) -> list[tuple[int, ...]]:
    groups = [tuple(support[i:i + 2]) for i in range(0, len(support) - 1, 2)]
    if len(support) % 2:
        groups.append((support[-1],))
    return groups


def assign_flags(layout: FpnLayout) -> FpnLayout:
    """Replace each check's data-parity edges with ⌈δ/2⌉ flag qubits."""
    if layout.flag_assignments:
        raise ValueError("layout already has flags")
    return _build_flagged(layout, shared_pairs=[])


def share_flags(layout: FpnLayout) -> FpnLayout:
    """Merge flags across checks via exact maximum-weight matching.

    Data qubits are paired on the graph whose edge weights count common
    checks (edges exist only where that count is ≥ 2); each matched pair gets
    a single flag serving all its common checks.
    """
    code = layout.code
    common: dict[tuple[int, int], int] = {}
    for a, b in combinations(range(code.n), 2):
        cnt = sum(1 for c in code.checks if a in c.support and b in c.support)
        if cnt >= 2:
            common[(a, b)] = cnt
    matched = max_weight_matching(common)
    pairs = sorted(tuple(sorted(p)) for p in matched)
    return _build_flagged(layout, shared_pairs=pairs)


def _build_flagged(layout: FpnLayout, shared_pairs) -> FpnLayout:
    """Rebuild the flag layer from the naive graph and a set of shared pairs."""
    code = layout.code
    parity_id = {c.id: layout.parity_of(c.id) for c in code.checks}
    qubits = [q for q in layout.qubits if q.role in ("data", "parity")]
    edges: set[frozenset[int]] = set()
    assignments: dict[int, tuple[FlagDuty, ...]] = {}

    def new_flag() -> int:
        qid = len(qubits)
        qubits.append(PhysicalQubit(qid, "flag", None))
        return qid

    # shared flags first, in sorted pair order
    pair_checks: dict[tuple[int, int], list[int]] = {}
    for pair in shared_pairs:
        a, b = pair
        cids = [c.id for c in code.checks if a in c.support and b in c.support]
        pair_checks[pair] = sorted(cids)
    for pair in shared_pairs:
        fid = new_flag()
        a, b = pair
        edges.add(_edge(a, fid))
        edges.add(_edge(b, fid))
        for cid in pair_checks[pair]:
            edges.add(_edge(fid, parity_id[cid]))
        assignments[fid] = tuple((cid, pair) for cid in pair_checks[pair])

    # per-check flags on whatever the shared pairs left uncovered
    shared_by_check: dict[int, list[tuple[int, ...]]] = {}
    for pair, cids in pair_checks.items():
        for cid in cids:
            shared_by_check.setdefault(cid, []).append(pair)
    for c in sorted(code.checks, key=lambda c: c.id):
        covered = {q for pair in shared_by_check.get(c.id, []) for q in pair}
        leftover = tuple(q for q in c.support if q not in covered)
        for group in _pair_consecutive(leftover):
            fid = new_flag()
            for q in group:
                edges.add(_edge(q, fid))
            edges.add(_edge(fid, parity_id[c.id]))
            assignments[fid] = ((c.id, group),)

    return FpnLayout(
        code=code, qubits=tuple(qubits), edges=frozenset(edges),
        flag_assignments=assignments, degree_budget=layout.degree_budget)


def _same_check_data_conflict(
    candidate: int, chosen: list[int], roles: dict[int, str], code: TannerCode,
) -> bool:
    if roles.get(candidate) != "data":
        return False
    for u in chosen:
        if roles.get(u) != "data":
            continue
        for c in code.checks:
            if candidate in c.support and u in c.support:
                return True
    return False


def insert_proxies(layout: FpnLayout, degree_budget: int = 4) -> FpnLayout:
    """Add proxy qubits until every degree is within the budget.

    Repeatedly takes the lowest-id over-budget qubit v and moves its
    ⌈deg(v)/2⌉ lowest-id neighbors onto a fresh proxy adjacent to v,
    preferring selections that never put two data qubits of one check on the
    same proxy (propagation-error rule).
    """
    if degree_budget < 3:
        raise ValueError(f"degree budget must be >= 3, got {degree_budget}")
    code = layout.code
    qubits = list(layout.qubits)
    adj = layout.adjacency()
    roles = {q.id: q.role for q in layout.qubits}
    chains = dict(layout.proxy_chains)

    while True:
        over = [q for q in sorted(adj) if len(adj[q]) > degree_budget]
        if not over:
            break
        v = over[0]
        want = -(-len(adj[v]) // 2)
        ordered = sorted(adj[v])
        chosen: list[int] = []
        skipped: list[int] = []
        for u in ordered:
            if len(chosen) == want:
                break
            if _same_check_data_conflict(u, chosen, roles, code):
                skipped.append(u)
            else:
                chosen.append(u)
        while len(chosen) < want and skipped:
            chosen.append(skipped.pop(0))
        proxy = len(qubits)
        qubits.append(PhysicalQubit(proxy, "proxy", None))
        roles[proxy] = "proxy"
        chains[proxy] = ProxyChain(host=v, moved=tuple(chosen))
        adj[proxy] = set(chosen) | {v}
        for u in chosen:
            adj[u].discard(v)
            adj[u].add(proxy)
            adj[v].discard(u)
        adj[v].add(proxy)

    edges = frozenset(_edge(u, w) for u, nbrs in adj.items() for w in nbrs)
    return FpnLayout(
        code=code, qubits=tuple(qubits), edges=edges,
        flag_assignments=dict(layout.flag_assignments),
        proxy_chains=chains, degree_budget=degree_budget)


def build_fpn(code: TannerCode, degree_budget: int = 4,
              flag_sharing: bool = True) -> FpnLayout:
    """Full pipeline from an abstract code to a degree-limited FPN."""
    naive = build_naive_layout(code)
    layout = share_flags(naive) if flag_sharing else assign_flags(naive)
    return insert_proxies(layout, degree_budget)


def layout_metrics(layout: FpnLayout) -> LayoutMetrics:
    degs = [len(nbrs) for nbrs in layout.adjacency().values()]
    counts = {role: 0 for role in ROLES}
    for q in layout.qubits:
        counts[q.role] += 1
    return LayoutMetrics(
        effective_rate=Fraction(layout.code.k, layout.N),
        ideal_rate=Fraction(layout.code.k, layout.code.n),
        mean_degree=Fraction(2 * len(layout.edges), layout.N),
        max_degree=max(degs) if degs else 0,
        role_counts=counts)


def save_layout(layout: FpnLayout, path) -> None:
    doc = {
        "degree_budget": layout.degree_budget,
        "qubits": [
            {"id": q.id, "role": q.role,
             **({"source": q.source} if q.source is not None else {})}
            for q in layout.qubits
        ],
        "edges": sorted(sorted(e) for e in layout.edges),
        "flag_assignments": {
            str(fid): [[cid, list(group)] for cid, group in duties]
            for fid, duties in sorted(layout.flag_assignments.items())
        },
        "proxy_chains": {
            str(pid): {"host": ch.host, "moved": list(ch.moved)}
            for pid, ch in sorted(layout.proxy_chains.items())
        },
        "code": code_to_doc(layout.code),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_layout(path) -> FpnLayout:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    code = code_from_doc(doc["code"])
    qubits = tuple(
        PhysicalQubit(q["id"], q["role"], q.get("source"))
        for q in doc["qubits"])
    edges = frozenset(_edge(u, v) for u, v in doc["edges"])
    assignments = {
        int(fid): tuple((cid, tuple(group)) for cid, group in duties)
        for fid, duties in doc["flag_assignments"].items()
    }
    chains = {
        int(pid): ProxyChain(host=ch["host"], moved=tuple(ch["moved"]))
        for pid, ch in doc["proxy_chains"].items()
    }
    return FpnLayout(
        code=code, qubits=qubits, edges=edges,
        flag_assignments=assignments, proxy_chains=chains,
        degree_budget=doc["degree_budget"])
