"""Exact matching engines shared by the layout builder and the decoders.

Both entry points wrap networkx's blossom implementation.  Float weights are
converted to :class:`fractions.Fraction` first — the blossom dual updates
halve weights, which stays exact on dyadic rationals, so results are exact
optima rather than floating-point approximations.
"""
from __future__ import annotations

from fractions import Fraction

import networkx as nx

Edge = tuple[int, int]


def _exactify(w):
    if isinstance(w, float):
        return Fraction(w)
    return w


def max_weight_matching(weights: dict[Edge, object]) -> set[frozenset[int]]:
    """Exact maximum-weight matching; edges with non-positive weight unused."""
    g = nx.Graph()
    for (u, v), w in weights.items():
        if u == v:
            raise ValueError(f"self-loop on {u}")
        g.add_edge(u, v, weight=_exactify(w))
    mate = nx.max_weight_matching(g, maxcardinality=False)
    return {frozenset(pair) for pair in mate}


def min_weight_perfect_matching(
    nodes: list[int], weights: dict[Edge, object],
) -> list[Edge]:
    """Exact minimum-weight perfect matching over ``nodes``.

    ``weights`` must contain every unordered pair that may be matched; pairs
    are keyed either (u, v) or (v, u).  Raises if no perfect matching exists.
    """
    if len(nodes) % 2:
        raise ValueError(f"odd node count {len(nodes)} cannot be perfectly matched")
    if not nodes:
        return []
    g = nx.Graph()
    g.add_nodes_from(nodes)
    shift = max(_exactify(w) for w in weights.values()) if weights else 0
    for (u, v), w in weights.items():
        if u == v:
            raise ValueError(f"self-loop on {u}")
        # negate for min-weight; shift keeps weights positive so that
        # maxcardinality never prefers dropping a usable edge
        g.add_edge(u, v, weight=shift - _exactify(w))
    mate = nx.max_weight_matching(g, maxcardinality=True)
    if 2 * len(mate) != len(nodes):
        raise ValueError("no perfect matching exists on the given edges")
    return sorted((min(u, v), max(u, v)) for u, v in mate)
