"""FPN layout pipeline: naive graph, flags, sharing, proxies, metrics."""
from __future__ import annotations

from fractions import Fraction

import pytest

from fpn.codes import Check, TannerCode, gen_rotated_surface, gen_toric, \
    gen_triangular_color
from fpn.layout import (
    assign_flags,
    build_fpn,
    build_naive_layout,
    insert_proxies,
    layout_metrics,
    load_layout,
    save_layout,
    share_flags,
)

ALL_CODES = [
    gen_rotated_surface(3),
    gen_rotated_surface(5),
    gen_toric(2),
    gen_toric(3),
    gen_triangular_color(3),
    gen_triangular_color(5),
]


@pytest.mark.parametrize(
    "d,n_expected,mean",
    [(3, 17, Fraction(48, 17)), (5, 49, Fraction(160, 49)), (7, 97, Fraction(336, 97))],
)
def test_naive_mean_degree_matches_table(d, n_expected, mean):
    layout = build_naive_layout(gen_rotated_surface(d))
    m = layout_metrics(layout)
    assert layout.N == n_expected
    assert m.mean_degree == mean


def test_naive_effective_rate_d5():
    m = layout_metrics(build_naive_layout(gen_rotated_surface(5)))
    assert m.effective_rate == Fraction(1, 49)
    assert m.ideal_rate == Fraction(1, 25)


def test_naive_is_bipartite_data_parity():
    layout = build_naive_layout(gen_triangular_color(3))
    roles = {q.id: q.role for q in layout.qubits}
    for e in layout.edges:
        assert sorted(roles[v] for v in e) == ["data", "parity"]


def _covering_groups(layout):
    """check id → sorted list of covered groups, from flag assignments."""
    cover = {}
    for duties in layout.flag_assignments.values():
        for cid, group in duties:
            cover.setdefault(cid, []).append(tuple(sorted(group)))
    return cover


def assert_flag_covering(layout):
    code = layout.code
    for c in code.checks:
        groups = _covering_groups(layout).get(c.id, [])
        assert len(groups) == -(-c.weight // 2)
        flat = sorted(q for g in groups for q in g)
        assert flat == sorted(c.support)  # exact partition, no overlap


@pytest.mark.parametrize("code", ALL_CODES, ids=lambda c: c.name)
def test_assign_flags_structure(code):
    layout = assign_flags(build_naive_layout(code))
    assert_flag_covering(layout)
    expected_flags = sum(-(-c.weight // 2) for c in code.checks)
    assert len(layout.role_ids("flag")) == expected_flags
    roles = {q.id: q.role for q in layout.qubits}
    for e in layout.edges:
        kinds = sorted(roles[v] for v in e)
        assert kinds in (["data", "flag"], ["flag", "parity"])


def test_assign_flags_counts_by_weight():
    # weight-8 -> 4 flags, weight-2 -> 1 flag, odd weights get a singleton
    code = TannerCode(
        "toy", 8, 7, 1, 1, (Check(0, "Z", tuple(range(8))),), ())
    layout = assign_flags(build_naive_layout(code))
    assert len(layout.role_ids("flag")) == 4
    code5 = TannerCode(
        "toy5", 5, 4, 1, 1, (Check(0, "Z", tuple(range(5))),), ())
    layout5 = assign_flags(build_naive_layout(code5))
    groups = _covering_groups(layout5)[0]
    assert sorted(len(g) for g in groups) == [1, 2, 2]


def test_share_flags_reduces_count_on_surface_code():
    naive = build_naive_layout(gen_rotated_surface(3))
    before = len(assign_flags(naive).role_ids("flag"))
    shared = share_flags(naive)
    after = len(shared.role_ids("flag"))
    assert after < before
    assert_flag_covering(shared)
    assert shared.N <= assign_flags(naive).N


def test_share_flags_serves_all_common_checks():
    shared = share_flags(build_naive_layout(gen_rotated_surface(3)))
    code = shared.code
    for fid, duties in shared.flag_assignments.items():
        if len(duties) < 2:
            continue
        (c1, pair), rest = duties[0], duties[1:]
        assert all(g == pair for _, g in rest)
        a, b = pair
        serving = {cid for cid, _ in duties}
        common = {c.id for c in code.checks if a in c.support and b in c.support}
        assert serving == common
        nbrs = set(shared.neighbors(fid))
        assert {a, b} <= nbrs
        assert {shared.parity_of(cid) for cid in serving} <= nbrs


def test_share_flags_noop_without_common_pairs():
    code = TannerCode(
        "rep3", 3, 1, 3, 1,
        (Check(0, "Z", (0, 1)), Check(1, "Z", (1, 2))),
        ())
    naive = build_naive_layout(code)
    assert {frozenset(d) for d in share_flags(naive).flag_assignments.values()} == \
        {frozenset(d) for d in assign_flags(naive).flag_assignments.values()}


def test_insert_proxies_degree6_single_proxy():
    code = TannerCode("star6", 6, 5, 1, 1,
                      (Check(0, "Z", tuple(range(6))),), ())
    layout = insert_proxies(build_naive_layout(code), 4)
    parity = layout.parity_of(0)
    adj = layout.adjacency()
    assert len(layout.role_ids("proxy")) == 1
    assert len(adj[parity]) == 4


def test_insert_proxies_degree9_two_insertions_on_host():
    code = TannerCode("star9", 9, 8, 1, 1,
                      (Check(0, "Z", tuple(range(9))),), ())
    layout = insert_proxies(build_naive_layout(code), 4)
    parity = layout.parity_of(0)
    hosted = [p for p, ch in layout.proxy_chains.items() if ch.host == parity]
    assert len(hosted) == 2
    assert all(len(nbrs) <= 4 for nbrs in layout.adjacency().values())


def test_insert_proxies_noop_when_within_budget():
    layout = assign_flags(build_naive_layout(gen_rotated_surface(3)))
    before_max = layout_metrics(layout).max_degree
    budget = max(4, before_max)
    out = insert_proxies(layout, budget)
    assert out.edges == layout.edges and not out.proxy_chains


def test_insert_proxies_rejects_small_budget():
    with pytest.raises(ValueError):
        insert_proxies(build_naive_layout(gen_toric(2)), 2)


@pytest.mark.parametrize("code", ALL_CODES, ids=lambda c: c.name)
def test_full_pipeline_invariants(code):
    layout = build_fpn(code, degree_budget=4)
    adj = layout.adjacency()
    assert all(len(nbrs) <= 4 for nbrs in adj.values())
    assert_flag_covering(layout)
    roles = {q.id: q.role for q in layout.qubits}

    # no proxy bridges two data qubits of one check
    for pid in layout.role_ids("proxy"):
        data_nbrs = [v for v in adj[pid] if roles[v] == "data"]
        for c in code.checks:
            assert sum(1 for v in data_nbrs if v in c.support) <= 1

    # parity reaches every data qubit of its check through flags/proxies
    for c in code.checks:
        start = layout.parity_of(c.id)
        seen, frontier = {start}, [start]
        while frontier:
            v = frontier.pop()
            for u in adj[v]:
                if u not in seen and roles[u] in ("flag", "proxy"):
                    seen.add(u)
                    frontier.append(u)
                elif u not in seen:
                    seen.add(u)
        assert set(c.support) <= seen

    m = layout_metrics(layout)
    assert m.effective_rate <= m.ideal_rate
    assert m.max_degree <= 4
    assert m.role_counts["data"] == code.n
    assert m.role_counts["parity"] == len(code.checks)


def test_layout_roundtrip(tmp_path):
    layout = build_fpn(gen_triangular_color(3))
    path = tmp_path / "layout.json"
    save_layout(layout, path)
    loaded = load_layout(path)
    assert loaded.edges == layout.edges
    assert loaded.flag_assignments == layout.flag_assignments
    assert loaded.proxy_chains == layout.proxy_chains
    assert loaded.degree_budget == layout.degree_budget
    assert [(q.id, q.role, q.source) for q in loaded.qubits] == \
        [(q.id, q.role, q.source) for q in layout.qubits]
