"""Decoder tests.

Oracles:
* a frozen five-member toy hypergraph (three equivalence classes over four
  detectors) whose correct decodes under each flag pattern are derived by
  hand from the class weights;
* the exhaustive most-likely-subset oracle, exact on small instances;
* exhaustive single-fault certification on the d=3 pipelines, cross-checking
  every decode against the injected frame bit;
* brute-force minimum-weight perfect matching on random instances.
"""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from fpn.circuits import NoiseModel, build_memory_circuit
from fpn.codes import gen_rotated_surface, gen_triangular_color
from fpn.dem import DecodingHypergraph, Hyperedge, extract_hypergraph
from fpn.decoders import (BOUNDARY, build_decoding_graph,
                          certify_effective_distance,
                          decode_flagged_mwpm, decode_flagged_restriction,
                          decode_ml_oracle, make_ml_decoder,
                          make_mwpm_decoder, make_restriction_decoder,
                          mwpm_exact)
from fpn.layout import build_fpn, build_naive_layout
from fpn.scheduling import schedule_code, schedule_fpn

F1, F2, F3 = (101, 1), (102, 1), (103, 1)


def _toy_hypergraph():
    """Three equivalence classes over four detectors, five mechanisms."""
    a1 = Hyperedge(frozenset({0, 1, 2}), frozenset(), 0.02, frames=1)
    a2 = Hyperedge(frozenset({0, 1, 2}), frozenset({F1, F2, F3}), 0.01,
                   frames=8)
    b1 = Hyperedge(frozenset({1, 2, 3}), frozenset(), 0.015, frames=2)
    c1 = Hyperedge(frozenset({0, 3}), frozenset({F1}), 0.012, frames=4)
    c2 = Hyperedge(frozenset({0, 3}), frozenset({F2, F3}), 0.009, frames=16)
    hg = DecodingHypergraph(
        num_detectors=4, num_flags=3, num_observables=5,
        detector_coords=((0, 1), (1, 1), (2, 1), (3, 1)),
        flag_coords=(F1, F2, F3), hyperedges=(a1, a2, b1, c1, c2), p_M=0.01)
    return hg, (a1, a2, b1, c1, c2)


def _rows(hg, dets, flags=()):
    det_row = np.zeros(hg.num_detectors, dtype=np.uint8)
    det_row[list(dets)] = 1
    flag_row = np.zeros(hg.num_flags, dtype=np.uint8)
    index = {tuple(c): i for i, c in enumerate(hg.flag_coords)}
    for c in flags:
        flag_row[index[c]] = 1
    return det_row, flag_row


@pytest.fixture(scope="module")
def rotated_z():
    code = gen_rotated_surface(3)
    layout = build_fpn(code)
    sched = schedule_fpn(layout, schedule_code(code))
    circ = build_memory_circuit(layout, sched, rounds=2, basis="Z",
                                noise=NoiseModel(1e-2))
    return circ, extract_hypergraph(circ)


@pytest.fixture(scope="module")
def color_z():
    code = gen_triangular_color(3)
    check_colors = {c.id: c.color for c in code.checks}
    layout = build_fpn(code)
    sched = schedule_fpn(layout, schedule_code(code))
    circ = build_memory_circuit(layout, sched, rounds=2, basis="Z",
                                noise=NoiseModel(1e-2))
    return circ, extract_hypergraph(circ), check_colors


# --- exact matching ----------------------------------------------------------


def _brute_force_matching(nodes, weights):
    nodes = list(nodes)
    best = None

    def recurse(rest, acc, pairs):
        nonlocal best
        if not rest:
            if best is None or acc < best[0]:
                best = (acc, tuple(pairs))
            return
        a = rest[0]
        for b in rest[1:]:
            w = weights.get((a, b), weights.get((b, a)))
            if w is None:
                continue
            pairs.append((a, b))
            recurse([x for x in rest[1:] if x != b], acc + w, pairs)
            pairs.pop()

    recurse(nodes, Fraction(0), [])
    return best


def test_mwpm_exact_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = 2 * int(rng.integers(1, 5))
        nodes = list(range(n))
        weights = {}
        for a, b in itertools.combinations(nodes, 2):
            if rng.random() < 0.85:
                weights[(a, b)] = Fraction(int(rng.integers(1, 1000)), 97)
        expected = _brute_force_matching(nodes, weights)
        if expected is None:
            continue
        got = mwpm_exact(nodes, weights)
        total = sum(weights.get((min(u, v), max(u, v)),
                                weights.get((max(u, v), min(u, v))))
                    for u, v in got.pairs)
        assert total == expected[0]


def test_mwpm_exact_prefers_cheap_cross_pairing():
    weights = {(0, 1): Fraction(10), (2, 3): Fraction(10),
               (0, 2): Fraction(1), (1, 3): Fraction(1)}
    got = mwpm_exact([0, 1, 2, 3], weights)
    assert {frozenset(p) for p in got.pairs} == {frozenset({0, 2}),
                                                 frozenset({1, 3})}


# --- decoding-graph construction ----------------------------------------------


def test_graph_excludes_all_flagged_class_when_no_flags_fired():
    hg, _ = _toy_hypergraph()
    graph = build_decoding_graph(hg)
    ends = {(e.u, e.v) for e in graph.edges}
    assert (0, 3) not in ends  # class {0,3} has only flagged members
    # the two surviving classes appear as cliques at their raw weights
    weights = sorted(round(e.weight, 4) for e in graph.edges)
    assert weights == [3.912, 3.912, 3.912, 4.1997, 4.1997, 4.1997]
    assert all(e.kind == "clique" for e in graph.edges)


def test_graph_includes_flag_matched_class_as_plain_edge():
    hg, _ = _toy_hypergraph()
    graph = build_decoding_graph(hg, frozenset({F1}))
    plain = [e for e in graph.edges if e.kind == "plain"]
    assert len(plain) == 1 and (plain[0].u, plain[0].v) == (0, 3)
    assert plain[0].weight == pytest.approx(-math.log(0.012))
    # the flagless members elsewhere now pay one measurement-error factor
    c1_clique = [e for e in graph.edges if e.kind == "clique"
                 and frozenset(e.source.sigma) == frozenset({0, 1, 2})]
    assert c1_clique[0].weight == pytest.approx(-math.log(0.02 * 0.01),
                                                abs=1e-6)


def test_graph_folds_consistent_split_into_graphlike_parts():
    # a 3-detector mechanism whose frames match the {0} + {1,2} split is
    # folded into those parts' probabilities (p <- p + w - p w)
    s0 = Hyperedge(frozenset({0}), frozenset(), 0.001, frames=0)
    p12 = Hyperedge(frozenset({1, 2}), frozenset(), 0.002, frames=1)
    big = Hyperedge(frozenset({0, 1, 2}), frozenset(), 0.01, frames=1)
    hg = DecodingHypergraph(
        num_detectors=3, num_flags=0, num_observables=1,
        detector_coords=((0, 1), (1, 1), (2, 1)), flag_coords=(),
        hyperedges=(s0, p12, big), p_M=0.0)
    graph = build_decoding_graph(hg)
    boundary = [e for e in graph.edges if e.kind == "boundary"][0]
    plain = [e for e in graph.edges if e.kind == "plain"][0]
    assert boundary.weight == pytest.approx(
        -math.log(0.001 + 0.01 - 0.001 * 0.01))
    assert plain.weight == pytest.approx(
        -math.log(0.002 + 0.01 - 0.002 * 0.01))
    # the clique expansion keeps the mechanism's full weight (plus the
    # tie-break epsilon), so the folded split wins exact ties
    cliques = [e for e in graph.edges if e.kind == "clique"]
    assert len(cliques) == 3
    assert all(e.weight == pytest.approx(-math.log(0.01) + 1e-9)
               for e in cliques)


# --- flagged MWPM on the frozen class scenarios ---------------------------------


def test_no_flags_decodes_symmetric_difference_of_flagless_members():
    hg, (a1, a2, b1, c1, c2) = _toy_hypergraph()
    res = decode_flagged_mwpm(hg, *_rows(hg, {0, 3}))
    assert not res.failed
    assert {frozenset(m.sigma) for m in res.applied} == {
        frozenset({0, 1, 2}), frozenset({1, 2, 3})}
    assert res.frames == a1.frames ^ b1.frames == 3


def test_single_flag_decodes_the_flag_matched_mechanism():
    hg, (_a1, _a2, _b1, c1, _c2) = _toy_hypergraph()
    res = decode_flagged_mwpm(hg, *_rows(hg, {0, 3}, {F1}))
    assert not res.failed
    assert res.applied == (c1,)
    assert res.frames == c1.frames == 4


def test_two_flags_decode_flag_heavy_class_via_subset_fallback():
    # odd syndrome, no boundary edges: the matching cannot pair it, and the
    # most-likely-subset fallback applies the class's flag-matched member
    hg, (_a1, a2, *_rest) = _toy_hypergraph()
    res = decode_flagged_mwpm(hg, *_rows(hg, {0, 1, 2}, {F2, F3}))
    assert not res.failed
    assert res.applied == (a2,)
    assert res.frames == a2.frames == 8
    assert res.meta["fallback"] == "subset"


def test_unexplainable_syndrome_fails_explicitly():
    hg, _ = _toy_hypergraph()
    res = decode_flagged_mwpm(hg, *_rows(hg, {0}))
    assert res.failed and res.frames == 0
    assert "no" in res.meta["reason"]


def test_decoder_is_deterministic(rotated_z):
    circ, hg = rotated_z
    decoder = make_mwpm_decoder(hg)
    det_row, flag_row = _rows(hg, {0, 4})
    assert decoder(det_row, flag_row) == decoder(det_row, flag_row)


def test_empty_shot_decodes_to_identity(rotated_z):
    _circ, hg = rotated_z
    res = decode_flagged_mwpm(hg, *_rows(hg, ()))
    assert not res.failed and res.frames == 0 and res.applied == ()


# --- single-fault exhaustive certification --------------------------------------


def test_rotated_mwpm_corrects_every_single_fault(rotated_z):
    circ, hg = rotated_z
    res = certify_effective_distance(circ, make_mwpm_decoder(hg), w=1,
                                     hypergraph=hg)
    assert res.passed and res.weight == 1
    assert res.witnesses == ()
    assert res.checked == 273


def test_certification_counts_fault_sites(rotated_z):
    circ, hg = rotated_z
    res = certify_effective_distance(circ, make_mwpm_decoder(hg), w=1,
                                     hypergraph=hg)
    assert res.fault_sites >= res.checked > 0
    with pytest.raises(ValueError, match="budget"):
        certify_effective_distance(circ, make_mwpm_decoder(hg), w=1,
                                   max_sites=10, hypergraph=hg)


# --- restriction decoder --------------------------------------------------------


def test_restriction_requires_check_colors(color_z):
    _circ, hg, _colors = color_z
    with pytest.raises(ValueError, match="check_colors"):
        decode_flagged_restriction(hg, np.zeros(hg.num_detectors), None)


def test_restriction_decodes_mixed_basis_single_fault(color_z):
    # a Y-type data error fires checks of both bases; only the prep-basis
    # detector carries frame information
    _circ, hg, colors = color_z
    res = decode_flagged_restriction(hg, *_rows(hg, {3, 6}), colors)
    assert not res.failed and res.frames == 1


def test_restriction_uses_flags_to_identify_benign_hook_faults(color_z):
    _circ, hg, colors = color_z
    cases = [({4}, ((13, 1), (16, 1))),
             ({3}, ((14, 1), (17, 1))),
             ({9}, ((15, 1),)),
             ({10}, ((13, 2), (16, 2)))]
    for dets, flags in cases:
        res = decode_flagged_restriction(hg, *_rows(hg, dets, flags), colors)
        assert not res.failed and res.frames == 0
        # the same shot with the flag bits suppressed is over-corrected:
        # these single faults are exactly what the flag information buys
        blind = decode_flagged_restriction(hg, _rows(hg, dets)[0], None,
                                           colors)
        assert blind.frames == 1


def test_restriction_empty_shot_is_identity(color_z):
    _circ, hg, colors = color_z
    res = decode_flagged_restriction(hg, *_rows(hg, ()), colors)
    assert not res.failed and res.frames == 0 and res.applied == ()


def test_restriction_decoder_is_deterministic(color_z):
    _circ, hg, colors = color_z
    decoder = make_restriction_decoder(hg, colors)
    det_row, flag_row = _rows(hg, {1, 4})
    assert decoder(det_row, flag_row) == decoder(det_row, flag_row)


def test_color_restriction_corrects_every_single_fault(color_z):
    circ, hg, colors = color_z
    res = certify_effective_distance(circ, make_restriction_decoder(hg, colors),
                                     w=1, hypergraph=hg)
    assert res.passed and res.witnesses == ()


# --- maximum-likelihood oracle ---------------------------------------------------


def test_oracle_agrees_with_hand_computed_likelihoods():
    hg, (a1, _a2, b1, c1, _c2) = _toy_hypergraph()
    res = decode_ml_oracle(hg, *_rows(hg, {0, 3}))
    assert {frozenset(m.sigma) for m in res.applied} == {
        frozenset({0, 1, 2}), frozenset({1, 2, 3})}
    assert res.meta["log_likelihood"] == pytest.approx(
        math.log(0.02) + math.log(0.015))
    res = decode_ml_oracle(hg, *_rows(hg, {0, 3}, {F1}))
    assert res.applied == (c1,)
    assert res.meta["log_likelihood"] == pytest.approx(math.log(0.012))


def test_oracle_budget_guard():
    hg, _ = _toy_hypergraph()
    with pytest.raises(ValueError, match="budget"):
        decode_ml_oracle(hg, *_rows(hg, {0, 3}), max_reps=1)


def test_oracle_reports_unexplainable_syndrome():
    hg, _ = _toy_hypergraph()
    res = decode_ml_oracle(hg, *_rows(hg, {0}))
    assert res.failed


def test_mwpm_never_beats_the_oracle_on_single_faults(rotated_z):
    # on every single-fault syndrome the matching must reach the oracle's
    # conclusion (both are certified, so both equal the injected frames)
    circ, hg = rotated_z
    mwpm = make_mwpm_decoder(hg)
    oracle = make_ml_decoder(hg)
    seen = set()
    for cls_key in sorted(hg.classes, key=sorted):
        if not cls_key or cls_key in seen:
            continue
        seen.add(cls_key)
        for member in hg.classes[cls_key].members[:2]:
            det_row, flag_row = _rows(hg, member.sigma, member.flags)
            assert mwpm(det_row, flag_row) == oracle(det_row, flag_row)
