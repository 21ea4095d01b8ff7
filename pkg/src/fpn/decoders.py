"""Flag-aware decoders over detector error hypergraphs.

All decoders share the same front end: the observed flag set ``F`` picks one
representative hyperedge per equivalence class (see
:func:`fpn.dem.select_representative`), and classes whose members all carry
flags are dropped entirely when none of their flags fired — those mechanisms
are ruled out by the flag information.

* :func:`decode_flagged_mwpm` — builds a weighted matching graph from the
  representatives (``|sigma|=1`` boundary edges, ``|sigma|=2`` plain edges,
  ``|sigma|>2`` expanded into a clique carrying the full weight), matches
  flipped detectors exactly, then walks the matched shortest paths applying
  each odd-multiplicity edge's correction.
* :func:`decode_flagged_restriction` — the color-code restriction decoder:
  matchings on the three two-color restricted lattices, duplicate-flag-edge
  cancellation, flattening to one round, and exact local lifting.
* :func:`decode_ml_oracle` — exhaustive most-likely-subset search, exact on
  small instances; the reference the other decoders are measured against.
* :func:`certify_effective_distance` — exhaustive fault-injection check that
  a decoder corrects every combination of up to ``w`` elementary faults.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from fpn.dem import (DecodingHypergraph, EquivalenceClass, Hyperedge,
                     enumerate_faults, extract_hypergraph,
                     select_representative)
from fpn.matching import min_weight_perfect_matching

__all__ = [
    "BOUNDARY",
    "GraphEdge",
    "DecodingGraph",
    "Matching",
    "CorrectionResult",
    "CertificateResult",
    "mwpm_exact",
    "build_decoding_graph",
    "decode_flagged_mwpm",
    "make_mwpm_decoder",
    "decode_flagged_restriction",
    "make_restriction_decoder",
    "decode_ml_oracle",
    "make_ml_decoder",
    "certify_effective_distance",
]

BOUNDARY = -1


@dataclass(frozen=True)
class GraphEdge:
    """One matching-graph edge derived from a representative hyperedge."""

    u: int
    v: int                   # BOUNDARY for boundary edges
    weight: float
    source: Hyperedge
    kind: str                # "plain" | "boundary" | "clique"


@dataclass
class DecodingGraph:
    num_detectors: int
    edges: tuple[GraphEdge, ...]
    adj: dict[int, list[tuple[int, int]]]  # node -> [(neighbor, edge idx)]


@dataclass(frozen=True)
class Matching:
    """An exact minimum-weight perfect matching."""

    pairs: tuple[tuple[int, int], ...]
    total_weight: float


@dataclass(frozen=True)
class CorrectionResult:
    frames: int
    failed: bool
    applied: tuple[Hyperedge, ...] = ()
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CertificateResult:
    """Outcome of exhaustive fault-injection certification."""

    passed: bool
    weight: int
    checked: int
    fault_sites: int
    witnesses: tuple = ()

    def __bool__(self) -> bool:
        return self.passed


def mwpm_exact(nodes, weights) -> Matching:
    """Exact minimum-weight perfect matching (rational-arithmetic blossom)."""
    pairs = min_weight_perfect_matching(list(nodes), weights)
    total = 0.0
    for u, v in pairs:
        w = weights.get((u, v), weights.get((v, u)))
        total += float(w)
    return Matching(pairs=tuple(pairs), total_weight=total)


# --- shared front end --------------------------------------------------------


def _observed_flags(hg: DecodingHypergraph, flags_row) -> frozenset:
    if flags_row is None:
        return frozenset()
    return frozenset(tuple(hg.flag_coords[i])
                     for i in np.nonzero(np.asarray(flags_row))[0])


def _effective_flags(cls: EquivalenceClass, F, det_rounds) -> frozenset:
    spanned = cls.spanned_rounds(det_rounds)
    return frozenset(c for c in F if c[1] in spanned)


def _class_representatives(hg: DecodingHypergraph, F,
                           renorm: str) -> list[tuple[Hyperedge, float]]:
    """Representatives of all classes usable under flags ``F``.

    A class whose members all carry flags is excluded when none of the flags
    it spans fired: with no corroborating flag, those mechanisms are rejected
    and the syndrome must be explained by flagless physics.

    The matching-graph edge probability is ``p_M^mismatch * pi(rep)``: the
    representative's raw probability, discounted by one measurement-error
    factor per flag bit it disagrees with.  (The class-level renormalized
    probability raises pi to ``|sigma|-1``, which degenerates for boundary
    edges — a flag-matched weight-1 class would yield a zero-weight edge —
    so edge weights keep the mismatch penalty but a fixed single power of
    pi.)
    """
    reps = []
    for key in sorted(hg.classes, key=sorted):
        usable = _usable_rep(hg, hg.classes[key], F, renorm)
        if usable is not None:
            reps.append(usable)
    return reps


def _usable_rep(hg: DecodingHypergraph, cls: EquivalenceClass, F,
                renorm: str):
    """Selected representative and edge probability, or None if rejected."""
    det_rounds = hg.det_rounds
    rep, _w = select_representative(cls, F, p_M=hg.p_M,
                                    det_rounds=det_rounds, renorm=renorm)
    f_eff = _effective_flags(cls, F, det_rounds)
    if rep.flags and not f_eff:
        return None
    w = rep.prob
    if renorm == "paper" and f_eff:
        w *= hg.p_M ** len(rep.flags ^ f_eff)
    if w <= 0.0:
        return None
    return rep, w


def _partitions(sigma: tuple, keys) -> "itertools.chain":
    """Partitions of ``sigma`` into parts of size <= 2 drawn from ``keys``.

    Yields tuples of frozensets, lexicographically by construction (the
    lowest detector is grouped first with nothing, then with each higher
    partner in order).
    """
    if not sigma:
        yield ()
        return
    head, rest = sigma[0], sigma[1:]
    single = frozenset((head,))
    if single in keys:
        for tail in _partitions(rest, keys):
            yield (single,) + tail
    for i, other in enumerate(rest):
        pair = frozenset((head, other))
        if pair in keys:
            for tail in _partitions(rest[:i] + rest[i + 1:], keys):
                yield (pair,) + tail


def build_decoding_graph(hg: DecodingHypergraph, F=frozenset(),
                         renorm: str = "paper") -> DecodingGraph:
    """Matching graph over detectors for the observed flag set ``F``.

    A hyperedge flipping more than two detectors cannot be used by a
    matching at its own cost (its clique edges each carry the full weight),
    so whenever its syndrome splits into graph-like classes whose frame
    flips combine to its own, its probability is folded into those parts.
    The single-mechanism explanation then prices correctly as the sum of
    its boosted parts.
    """
    reps = _class_representatives(hg, F, renorm)
    probs = {frozenset(rep.sigma): w for rep, w in reps}
    rep_by_key = {frozenset(rep.sigma): rep for rep, _w in reps}
    graphlike = {k for k in probs if len(k) <= 2}
    for rep, w in reps:
        if len(rep.sigma) <= 2:
            continue
        for parts in _partitions(tuple(sorted(rep.sigma)), graphlike):
            lam = 0
            for part in parts:
                lam ^= rep_by_key[part].frames
            if lam == rep.frames:
                for part in parts:
                    probs[part] = probs[part] + w - probs[part] * w
                break
    edges: list[GraphEdge] = []
    for rep, w in reps:
        sig = sorted(rep.sigma)
        if not sig:
            continue
        w = probs[frozenset(rep.sigma)]
        weight = -math.log(min(w, 1.0 - 1e-15)) if w < 1.0 else 1e-15
        if len(sig) == 1:
            edges.append(GraphEdge(sig[0], BOUNDARY, weight, rep,
                                   "boundary"))
        elif len(sig) == 2:
            edges.append(GraphEdge(sig[0], sig[1], weight, rep, "plain"))
        else:
            # the epsilon breaks exact weight ties in favour of plain and
            # boundary edges, whose endpoints name their own mechanism
            for a, b in itertools.combinations(sig, 2):
                edges.append(GraphEdge(a, b, weight + 1e-9, rep, "clique"))
    adj: dict[int, list[tuple[int, int]]] = {}
    for i, e in enumerate(edges):
        adj.setdefault(e.u, []).append((e.v, i))
        adj.setdefault(e.v, []).append((e.u, i))
    return DecodingGraph(num_detectors=hg.num_detectors,
                         edges=tuple(edges), adj=adj)


def _dijkstra(graph: DecodingGraph, source: int):
    """Shortest distances and predecessor edges from one node."""
    dist = {source: 0.0}
    pred: dict[int, int] = {}
    heap = [(0.0, source)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, math.inf):
            continue
        for nbr, ei in graph.adj.get(node, ()):
            nd = d + graph.edges[ei].weight
            if nd < dist.get(nbr, math.inf):
                dist[nbr] = nd
                pred[nbr] = ei
                heapq.heappush(heap, (nd, nbr))
    return dist, pred


def _walk_back(graph: DecodingGraph, pred: dict[int, int], source: int,
               target: int) -> list[int]:
    """Edge indices along the shortest path source -> target."""
    path = []
    node = target
    while node != source:
        ei = pred[node]
        path.append(ei)
        e = graph.edges[ei]
        node = e.u if e.v == node else e.v
    return path


# --- flag-aware minimum-weight perfect matching -------------------------------


def _match_and_walk(graph: DecodingGraph, flipped: list[int]):
    """Match flipped detectors (with boundary copies); returns the set of
    odd-multiplicity path edge indices and the matching's total weight, or
    None when no matching exists."""
    if not flipped:
        return set(), 0.0
    m = len(flipped)
    sssp = {}
    for d in flipped:
        sssp[d] = _dijkstra(graph, d)
    weights = {}
    for i in range(m):
        dist_i = sssp[flipped[i]][0]
        for j in range(i + 1, m):
            dij = dist_i.get(flipped[j], math.inf)
            if math.isfinite(dij):
                weights[(i, j)] = dij
        dib = dist_i.get(BOUNDARY, math.inf)
        if math.isfinite(dib):
            weights[(i, m + i)] = dib
        for j in range(i + 1, m):
            weights[(m + i, m + j)] = 0.0
    try:
        matching = min_weight_perfect_matching(list(range(2 * m)), weights)
    except ValueError:
        return None
    odd: set[int] = set()
    total = 0.0
    for a, b in matching:
        if a >= m and b >= m:
            continue  # paired-off boundary copies
        total += weights[(min(a, b), max(a, b))]
        src = flipped[min(a, b)]
        tgt = BOUNDARY if max(a, b) >= m else flipped[max(a, b)]
        _dist, pred = sssp[src]
        for ei in _walk_back(graph, pred, src, tgt):
            odd ^= {ei}
    return odd, total


def _apply_edges(hg: DecodingHypergraph, graph: DecodingGraph, odd, F):
    """Apply the corrections of the odd path edges.

    A clique edge's endpoint pair does not name a hyperedge of its own.
    When the class keyed by that pair holds a flag hyperedge corroborated
    by an observed flag, the most similar one — minimal flag mismatch with
    ``F``, ties to the higher probability — supplies the correction.
    Otherwise (no such class, no flag members, or none whose flags fired)
    the expanded source's correction applies.
    """
    det_rounds = hg.det_rounds
    frames = 0
    applied = []
    seen = set()
    for ei in sorted(odd):
        e = graph.edges[ei]
        chosen = e.source
        if e.kind == "clique":
            cls = hg.classes.get(frozenset((e.u, e.v)))
            if cls is not None:
                F_eff = _effective_flags(cls, F, det_rounds)
                flagged = [m for m in cls.flag_members() if m.flags & F_eff]
                if flagged:
                    chosen = min(flagged,
                                 key=lambda m: (len(m.flags ^ F_eff),
                                                -m.prob))
        if chosen in seen:
            continue  # several clique edges of one event: it happened once
        seen.add(chosen)
        frames ^= chosen.frames
        applied.append(chosen)
    return frames, tuple(applied)


def _subset_search(reps, target: frozenset, k_max: int):
    """Maximum-likelihood subset of ``reps`` whose syndromes XOR to target.

    Branches on the lowest unexplained detector; returns
    ``(log_likelihood, indices)`` of the best subset of size <= ``k_max``,
    or None when no subset explains the target.
    """
    by_det: dict[int, list[int]] = {}
    for i, (rep, _w) in enumerate(reps):
        for d in rep.sigma:
            by_det.setdefault(d, []).append(i)
    best: list | None = None

    def search(residual: frozenset, depth: int, logw: float, chosen: tuple):
        nonlocal best
        if not residual:
            if best is None or logw > best[0]:
                best = [logw, chosen]
            return
        if depth == k_max:
            return
        low = min(residual)
        for i in by_det.get(low, ()):
            if i in chosen:
                continue
            rep, w = reps[i]
            search(residual ^ rep.sigma, depth + 1, logw + math.log(w),
                   chosen + (i,))

    search(target, 0, 0.0, ())
    if best is None:
        return None
    return best[0], tuple(sorted(set(best[1])))


def decode_flagged_mwpm(hg: DecodingHypergraph, detectors, flags=None,
                        renorm: str = "paper",
                        _graph_cache: dict | None = None) -> CorrectionResult:
    """Flag-aware exact-MWPM decoding of one shot.

    The matched paths are accepted only when the corrections they name
    reproduce the flipped detector set (a matching can pair the syndrome of
    a many-detector event against unrelated mechanisms, which explains the
    detectors it paired but not the ones the event also flipped).  An
    inconsistent walk falls back to a bounded most-likely-subset search
    over the same representatives; failure is explicit, never silent.
    """
    det_row = np.asarray(detectors)
    flipped = [int(d) for d in np.nonzero(det_row)[0]]
    F = _observed_flags(hg, flags)
    if _graph_cache is not None and F in _graph_cache:
        graph = _graph_cache[F]
    else:
        graph = build_decoding_graph(hg, F, renorm)
        if _graph_cache is not None:
            _graph_cache[F] = graph
    walked = _match_and_walk(graph, flipped)
    if walked is None:
        # no perfect matching (e.g. an odd syndrome in a graph without
        # boundary edges): go straight to the most-likely-subset search
        reps = [(rep, w) for rep, w in _class_representatives(hg, F, renorm)
                if rep.sigma]
        found = _subset_search(reps, frozenset(flipped), k_max=4)
        if found is None:
            return CorrectionResult(frames=0, failed=True,
                                    meta={"reason": "no perfect matching and "
                                          "no explaining subset"})
        _logw, chosen = found
        frames = 0
        applied = []
        for i in chosen:
            rep, _w = reps[i]
            frames ^= rep.frames
            applied.append(rep)
        return CorrectionResult(frames=frames, failed=False,
                                applied=tuple(applied),
                                meta={"flags": tuple(sorted(F)),
                                      "fallback": "subset"})
    odd, total = walked
    frames, applied = _apply_edges(hg, graph, odd, F)
    if flipped:
        # a single mechanism flipping every observed detector beats the
        # matching whenever it is more likely than the paired story: a
        # many-detector event cannot be priced by the matching itself,
        # whose edges each carry its full weight
        cls = hg.classes.get(frozenset(flipped))
        if cls is not None:
            cand = _usable_rep(hg, cls, F, renorm)
            if cand is not None and -math.log(cand[1]) < total - 1e-12:
                rep = cand[0]
                return CorrectionResult(frames=rep.frames, failed=False,
                                        applied=(rep,),
                                        meta={"flags": tuple(sorted(F)),
                                              "fallback": "whole-syndrome"})
    explained = frozenset()
    for m in applied:
        explained = explained ^ m.sigma
    if explained != frozenset(flipped):
        reps = [(rep, w) for rep, w in _class_representatives(hg, F, renorm)
                if rep.sigma]
        found = _subset_search(reps, frozenset(flipped), k_max=4)
        if found is None:
            return CorrectionResult(frames=0, failed=True,
                                    meta={"reason": "inconsistent matching "
                                          "and no explaining subset"})
        _logw, chosen = found
        frames = 0
        applied = []
        for i in chosen:
            rep, _w = reps[i]
            frames ^= rep.frames
            applied.append(rep)
        return CorrectionResult(frames=frames, failed=False,
                                applied=tuple(applied),
                                meta={"flags": tuple(sorted(F)),
                                      "fallback": "subset"})
    return CorrectionResult(frames=frames, failed=False, applied=applied,
                            meta={"flags": tuple(sorted(F)),
                                  "matched_edges": len(odd)})


def make_mwpm_decoder(hg: DecodingHypergraph, renorm: str = "paper"):
    """Shot decoder ``(detectors, flags) -> frames`` with graph caching."""
    cache: dict = {}

    def decoder(detectors, flags=None) -> int:
        return decode_flagged_mwpm(hg, detectors, flags, renorm,
                                   _graph_cache=cache).frames

    return decoder


# --- color-code restriction decoder -------------------------------------------


_LATTICES = (("R", "G"), ("R", "B"), ("G", "B"))


def _restricted_graph(hg: DecodingHypergraph, reps, det_colors,
                      pair, frame_dets) -> DecodingGraph:
    """Decoding graph on the frame-basis detectors of two colors."""
    keep = set(pair)
    edges: list[GraphEdge] = []
    for rep, w in reps:
        ends = sorted(d for d in rep.sigma
                      if d in frame_dets and det_colors[d] in keep)
        if not ends:
            continue
        weight = -math.log(min(w, 1.0 - 1e-15)) if w < 1.0 else 1e-15
        if len(ends) == 1:
            edges.append(GraphEdge(ends[0], BOUNDARY, weight, rep,
                                   "boundary"))
        elif len(ends) == 2:
            edges.append(GraphEdge(ends[0], ends[1], weight, rep, "plain"))
        else:
            for a, b in itertools.combinations(ends, 2):
                edges.append(GraphEdge(a, b, weight, rep, "clique"))
    adj: dict[int, list[tuple[int, int]]] = {}
    for i, e in enumerate(edges):
        adj.setdefault(e.u, []).append((e.v, i))
        adj.setdefault(e.v, []).append((e.u, i))
    return DecodingGraph(num_detectors=hg.num_detectors, edges=tuple(edges),
                         adj=adj)


def _flatten_edge(hg: DecodingHypergraph, lat: int, e: GraphEdge):
    """Project a restricted-lattice edge onto round-1 coordinates.

    Returns ``(lat, a_check, b_check)`` with checks sorted and ``BOUNDARY``
    last, or None for a time-like self-loop (a measurement error: no data
    correction needed).  The key is pure geometry: lifting compares matched
    edges against hyperedge-induced edges, and which mechanism a lattice
    matching happened to route through must not block that comparison."""
    coords = hg.detector_coords
    a = coords[e.u][0]
    b = BOUNDARY if e.v == BOUNDARY else coords[e.v][0]
    if a == b:
        return None
    if b != BOUNDARY and b < a:
        a, b = b, a
    return (lat, a, b)


def _induced_flat_edges(check_colors, pair_of_lat, sigma_checks):
    """All flattened edges a hyperedge generates across the three lattices."""
    out = []
    for lat, pair in enumerate(pair_of_lat):
        keep = set(pair)
        ends = sorted(c for c in sigma_checks if check_colors[c] in keep)
        if len(ends) == 1:
            out.append((lat, ends[0], BOUNDARY))
        elif len(ends) == 2:
            out.append((lat, ends[0], ends[1]))
        elif len(ends) > 2:
            for a, b in itertools.combinations(ends, 2):
                out.append((lat, a, b))
    return out


def decode_flagged_restriction(hg: DecodingHypergraph, detectors, flags=None,
                               check_colors: dict | None = None,
                               renorm: str = "paper",
                               restriction_color: str = "R",
                               ) -> CorrectionResult:
    """Flag-aware restriction decoding of one color-code shot.

    ``check_colors`` maps check id -> "R" | "G" | "B".  Matchings on the
    three two-color restricted lattices produce a multiset of path edges;
    a flag edge used by two lattices is applied once and removed; the rest
    is flattened to one round and lifted at the ``restriction_color``-colored
    vertices (and at the boundary) by exact local search.
    """
    if check_colors is None:
        raise ValueError("restriction decoding requires check_colors")
    det_row = np.asarray(detectors)
    F = _observed_flags(hg, flags)
    reps = _class_representatives(hg, F, renorm)
    det_colors = {i: check_colors[c]
                  for i, (c, _r) in enumerate(hg.detector_coords)}

    # The lattice geometry is only sound on one check basis.  Frames are
    # carried by the prep-basis checks (the only ones with round-1
    # detectors); opposite-basis detectors say nothing about the measured
    # logical and their projections would corrupt the restricted lattices.
    coords = hg.detector_coords
    prep_checks = {c for c, r in coords if r == 1}
    frame_dets = {i for i, (c, _r) in enumerate(coords) if c in prep_checks}
    flipped_all = [int(d) for d in np.nonzero(det_row)[0] if d in frame_dets]

    # 1) matchings on the three restricted lattices
    occurrences: list[tuple[int, GraphEdge]] = []
    for lat, pair in enumerate(_LATTICES):
        keep = set(pair)
        flipped = [d for d in flipped_all if det_colors[d] in keep]
        graph = _restricted_graph(hg, reps, det_colors, pair, frame_dets)
        walked = _match_and_walk(graph, flipped)
        if walked is None:
            return CorrectionResult(
                frames=0, failed=True,
                meta={"reason": f"no matching on lattice {pair}"})
        odd, _total = walked
        occurrences.extend((lat, graph.edges[ei]) for ei in sorted(odd))

    frames = 0
    applied: list[Hyperedge] = []

    # 2) a flag edge appearing twice (once per lattice) is its own correction
    by_source: dict[Hyperedge, list[int]] = {}
    for i, (_lat, e) in enumerate(occurrences):
        if e.source.flags:
            by_source.setdefault(e.source, []).append(i)
    drop: set[int] = set()
    for src, occ in by_source.items():
        dup_pairs = len(occ) // 2
        if dup_pairs % 2:
            frames ^= src.frames
            applied.append(src)
        if dup_pairs:
            drop.update(occ[:2 * dup_pairs])

    # 3) flatten what remains to round-1 coordinates, keeping edge parity
    parity: dict[tuple, int] = {}
    for i, (lat, e) in enumerate(occurrences):
        if i in drop:
            continue
        flat = _flatten_edge(hg, lat, e)
        if flat is None:
            continue  # time-like self-loop: a measurement error
        parity[flat] = parity.get(flat, 0) ^ 1
    e_set = {flat for flat, odd_count in parity.items() if odd_count}

    # 4) lifting at restriction-colored vertices and at the boundary
    candidates_of: dict[int, list[Hyperedge]] = {}
    induced_of: dict[Hyperedge, list[tuple]] = {}
    logw_of: dict[Hyperedge, float] = {}
    proj_sigma_of: dict[Hyperedge, frozenset] = {}
    for rep, w in reps:
        if not rep.sigma:
            continue
        # spatial boundary of the event: a check flipped in an even number
        # of rounds cancels out (time-like pairs are measurement errors)
        odd_checks: dict[int, int] = {}
        for d in rep.sigma:
            if d not in frame_dets:
                continue
            c = hg.detector_coords[d][0]
            odd_checks[c] = odd_checks.get(c, 0) ^ 1
        sigma_checks = frozenset(c for c, odd in odd_checks.items() if odd)
        induced = _induced_flat_edges(check_colors, _LATTICES, sigma_checks)
        if not induced:
            continue
        induced_of[rep] = induced
        logw_of[rep] = math.log(min(w, 1.0 - 1e-15))
        proj_sigma_of[rep] = frozenset(d for d in rep.sigma
                                       if d in frame_dets)
        for c in sigma_checks:
            candidates_of.setdefault(c, []).append(rep)
        if any(b == BOUNDARY for _lat, _a, b in induced):
            candidates_of.setdefault(BOUNDARY, []).append(rep)
    flipped_set = frozenset(flipped_all)

    lift_vertices = sorted({c for c, col in check_colors.items()
                            if col == restriction_color})
    lift_vertices.append(BOUNDARY)

    def incident(vertex, edge_set):
        if vertex == BOUNDARY:
            return {fl for fl in edge_set if fl[2] == BOUNDARY}
        return {fl for fl in edge_set if fl[1] == vertex or fl[2] == vertex}

    progress = True
    iters = 0
    while e_set and progress and iters < 4 * len(lift_vertices):
        progress = False
        iters += 1
        for v in lift_vertices:
            target = incident(v, e_set)
            if not target:
                continue
            cands = candidates_of.get(v, [])
            # flattening erased the round index, so geometry alone cannot
            # tell time layers apart; prefer candidates whose detectors
            # actually fired, falling back to all candidates if none fit
            consistent = [rep for rep in cands
                          if proj_sigma_of[rep] <= flipped_set]
            found = None
            for pool in (consistent, cands):
                for size in range(1, min(len(pool), 3) + 1):
                    best_logw = -math.inf
                    for subset in itertools.combinations(pool, size):
                        produced: set[tuple] = set()
                        for rep in subset:
                            produced ^= incident(v, set(induced_of[rep]))
                        if produced == target:
                            logw = sum(logw_of[rep] for rep in subset)
                            if logw > best_logw:
                                best_logw = logw
                                found = subset
                    if found:
                        break
                if found:
                    break
            if found is None:
                continue
            for rep in found:
                frames ^= rep.frames
                applied.append(rep)
                # XOR, not subtraction: edges the candidate induces away
                # from v must flip parity so later lifts account for them
                e_set ^= set(induced_of[rep])
            progress = True
    if e_set:
        return CorrectionResult(
            frames=frames, failed=True, applied=tuple(applied),
            meta={"reason": "lifting stalled", "unresolved": sorted(e_set)})
    return CorrectionResult(frames=frames, failed=False,
                            applied=tuple(applied),
                            meta={"flags": tuple(sorted(F))})


def make_restriction_decoder(hg: DecodingHypergraph, check_colors: dict,
                             renorm: str = "paper"):
    """Shot decoder ``(detectors, flags) -> frames`` for color codes."""

    def decoder(detectors, flags=None) -> int:
        return decode_flagged_restriction(hg, detectors, flags, check_colors,
                                          renorm).frames

    return decoder


# --- maximum-likelihood oracle -------------------------------------------------


def decode_ml_oracle(hg: DecodingHypergraph, detectors, flags=None,
                     renorm: str = "paper", max_reps: int = 1000,
                     k_max: int = 4) -> CorrectionResult:
    """Most likely subset of class representatives explaining the syndrome.

    Exhaustive search over subsets of at most ``k_max`` representatives whose
    detector sets XOR to the observed syndrome; exact, and exponential, so
    guarded to ``max_reps`` representatives.
    """
    det_row = np.asarray(detectors)
    target = frozenset(int(d) for d in np.nonzero(det_row)[0])
    F = _observed_flags(hg, flags)
    reps = [(rep, w) for rep, w in _class_representatives(hg, F, renorm)
            if rep.sigma]
    if len(reps) > max_reps:
        raise ValueError(f"{len(reps)} representatives exceed the oracle "
                         f"budget of {max_reps}")
    found = _subset_search(reps, target, k_max)
    if found is None:
        return CorrectionResult(frames=0, failed=True,
                                meta={"reason": "no explaining subset "
                                                f"within {k_max} events"})
    logw, chosen = found
    frames = 0
    applied = []
    for i in chosen:
        rep, _w = reps[i]
        frames ^= rep.frames
        applied.append(rep)
    return CorrectionResult(frames=frames, failed=False,
                            applied=tuple(applied),
                            meta={"log_likelihood": logw})


def make_ml_decoder(hg: DecodingHypergraph, renorm: str = "paper",
                    max_reps: int = 1000, k_max: int = 4):
    def decoder(detectors, flags=None) -> int:
        return decode_ml_oracle(hg, detectors, flags, renorm, max_reps,
                                k_max).frames

    return decoder


# --- fault-tolerance certification ---------------------------------------------


def certify_effective_distance(circuit, decoder, w: int = 1,
                               max_sites: int = 5000,
                               hypergraph: DecodingHypergraph | None = None,
                               ) -> CertificateResult:
    """Check that ``decoder`` corrects every combination of <= ``w`` faults.

    Enumerates all elementary fault outcomes of the circuit (pre-merge,
    deduplicated by signature), injects every combination of up to ``w`` of
    them, and decodes.  A witness is any combination whose decoded frame
    differs from the injected one.  ``decoder`` is a shot decoder
    ``(detectors, flags) -> frames``; build it from the same circuit's
    hypergraph.
    """
    faults = enumerate_faults(circuit)
    if len(faults) > max_sites:
        raise ValueError(f"{len(faults)} fault sites exceed the "
                         f"certification budget of {max_sites}")
    hg = hypergraph if hypergraph is not None else extract_hypergraph(circuit)
    unique: dict[tuple, tuple] = {}
    for f in faults:
        unique.setdefault(f.signature, (f.sigma, f.flags, f.frames))
    outcomes = list(unique.values())

    flag_index = {tuple(c): i for i, c in enumerate(hg.flag_coords)}
    witnesses = []
    checked = 0
    for k in range(1, w + 1):
        for combo in itertools.combinations(range(len(outcomes)), k):
            sigma: frozenset = frozenset()
            flags: frozenset = frozenset()
            frames = 0
            for i in combo:
                s, fl, fr = outcomes[i]
                sigma = sigma ^ s
                flags = flags ^ fl
                frames ^= fr
            det_row = np.zeros(hg.num_detectors, dtype=np.uint8)
            det_row[sorted(sigma)] = 1
            flag_row = np.zeros(hg.num_flags, dtype=np.uint8)
            for c in flags:
                flag_row[flag_index[c]] = 1
            predicted = int(decoder(det_row, flag_row))
            checked += 1
            if predicted != frames:
                witnesses.append({
                    "faults": combo,
                    "sigma": tuple(sorted(sigma)),
                    "flags": tuple(sorted(flags)),
                    "expected": frames,
                    "predicted": predicted,
                })
    return CertificateResult(passed=not witnesses, weight=w, checked=checked,
                             fault_sites=len(faults),
                             witnesses=tuple(witnesses))
