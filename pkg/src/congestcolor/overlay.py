"""Relay overlays for almost-cliques, plus a measured-round routing scheduler.

An almost-clique has diameter 2, so every non-adjacent pair inside it can talk
through a common neighbor. The overlay assigns one relay per non-edge so that
no graph edge sits on more than two relay paths; with that bound, all-to-all
communication inside the clique costs only a constant factor over a true
clique. The construction treats non-edges as vertices of a conflict graph and
relays as colors: pairs sharing an endpoint must use distinct relays, which is
exactly what caps the per-edge congestion at 2.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from .sim import Network, SimError
from .trials import multi_trial


@dataclass
class CliqueOverlay:
    clique: int                      # AC-ID
    members: frozenset
    relays: dict                     # frozenset({u,v}) -> relay node w
    edge_congestion: dict            # (min,max) graph edge -> path count
    construction_rounds: int = 0


@dataclass
class OverlayReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _non_edges(graph, members):
    ms = sorted(members)
    out = []
    for i, u in enumerate(ms):
        nbrs = graph.neighbor_sets[u]
        out.extend((u, v) for v in ms[i + 1:] if v not in nbrs)
    return out


def compute_overlay(network: Network, clique, leader: int,
                    ac_id: int | None = None, epsilon: float = 1.0 / 3.0) -> CliqueOverlay:
    """Assign a relay to every non-edge of the clique.

    Runs paired simulated rounds: each non-edge's higher-ID endpoint proposes
    a candidate relay; a relay grants at most one proposal per round, refuses
    pairs that share an endpoint with one it already serves (which is what
    makes the relay assignment a proper conflict-graph coloring), and answers
    hopeless proposals with a permanent rejection so proposers stop retrying
    them. Leftover pairs after the round cap go through parallel-candidate
    finishing rounds; a pair still unserved after that is a hard failure.
    """
    g = network.graph
    cfg = network.config
    members = frozenset(clique)
    if leader not in members:
        raise SimError("overlay leader must belong to the clique")
    if ac_id is None:
        ac_id = leader
    if epsilon > 1.0 / 15.0:
        if cfg.mode == "theory":
            raise SimError(
                f"overlay requires epsilon <= 1/15 in theory mode, got {epsilon}"
            )
        network.log(leader, "overlay_warn",
                    f"epsilon {epsilon:.4f} above 1/15; slack margin not guaranteed")

    rounds_before = network.round_counter
    # leader-rooted renumbering so members know |C| and all member IDs, after
    # which one neighbor-exchange round reveals each node's non-neighbors
    network.tree_aggregate(members, leader, "sum",
                           {v: 1 for v in members}, phase="overlay_setup")
    network.tree_aggregate(members, leader, "broadcast",
                           {leader: len(members)}, phase="overlay_setup")
    m_int = sum(
        1 for u in members for w in g.neighbors[u] if w in members
    ) // 2
    network.charge_phase("overlay_setup", 1, 2 * m_int,
                         min(network.id_bits, network.bandwidth_bits))

    pending = {}
    for u, v in _non_edges(g, members):
        common = g.neighbor_sets[u] & g.neighbor_sets[v] & members
        if not common:
            raise SimError(f"non-edge ({u},{v}) has no common neighbor in clique")
        handler = max(u, v)
        # apparent palette: the handler only knows its own adjacencies, so it
        # starts from all its clique neighbors and prunes on rejections
        apparent = set(g.neighbor_sets[handler] & members)
        pending[(u, v)] = [handler, apparent, common]

    relays = {}
    serving = defaultdict(list)      # relay -> endpoint list of granted pairs
    grant_bits = 2 * network.id_bits + 1
    if grant_bits > network.bandwidth_bits:
        raise SimError("overlay grant message exceeds bandwidth")

    def relay_round(proposals):
        """One paired round: proposals is {(u,v): [candidate relays]}.
        Returns the set of pairs granted this round."""
        by_relay = defaultdict(list)
        messages = 0
        for pair, cands in proposals.items():
            handler = pending[pair][0]
            used = set()
            for w in cands:
                if w in used:
                    continue  # one proposal per (handler, relay) edge
                used.add(w)
                by_relay[w].append(pair)
                messages += 1
        tentative = defaultdict(list)
        for w, reqs in sorted(by_relay.items()):
            usable = []
            for pair in sorted(reqs):
                if w not in pending[pair][2]:
                    pending[pair][1].discard(w)      # permanent: not a common nbr
                elif any(e in pair for e in serving[w]):
                    pending[pair][1].discard(w)      # permanent: endpoint clash
                else:
                    usable.append(pair)
            if usable:
                # a relay serves at most one new pair per round; contenders
                # keep the color in their palettes and retry later
                pair = usable[0]
                tentative[pair].append(w)
                messages += g.degree(w)              # grant broadcast
        granted = {}
        for pair, ws in tentative.items():
            w = min(ws)   # handler keeps the lowest grant, releases the rest
            granted[pair] = w
            serving[w].extend(pair)
            messages += len(ws)                      # accept/release notices
        for pair, w in granted.items():
            relays[frozenset(pair)] = w
            del pending[pair]
        network.charge_phase("overlay_pair", 2, messages,
                             min(grant_bits, network.bandwidth_bits))
        return granted

    # duplicate candidates within one handler are dropped (not colored this
    # round), mirroring the one-message-per-edge constraint
    cap = cfg.overlay_round_mult * max(
        1, math.ceil(math.log2(max(2.0, math.log2(max(4, g.n)))))
    )
    for _ in range(cap):
        if not pending:
            break
        proposals = {}
        handler_picks = defaultdict(set)
        for pair, (handler, apparent, _) in pending.items():
            if not apparent:
                raise SimError(f"overlay: pair {pair} ran out of candidate relays")
            w = sorted(apparent)[int(network.rng(handler).integers(len(apparent)))]
            if w in handler_picks[handler]:
                continue  # same color sampled twice by one handler: skip round
            handler_picks[handler].add(w)
            proposals[pair] = [w]
        relay_round(proposals)

    # finishing: parallel candidates per remaining pair
    k = math.ceil(3 * math.log2(max(2, g.n)))
    finish_cap = 8
    for _ in range(finish_cap):
        if not pending:
            break
        proposals = {}
        handler_edges = defaultdict(set)
        for pair, (handler, apparent, _) in pending.items():
            if not apparent:
                raise SimError(f"overlay: pair {pair} ran out of candidate relays")
            cands = multi_trial(network, handler, k, palette=apparent)
            kept = [w for w in cands if w not in handler_edges[handler]]
            handler_edges[handler].update(kept)
            proposals[pair] = kept
        relay_round(proposals)
    if pending:
        raise SimError(
            f"overlay construction failed for {len(pending)} non-edges "
            f"in clique {ac_id}"
        )

    congestion = defaultdict(int)
    for pair, w in relays.items():
        for u in pair:
            e = (min(u, w), max(u, w))
            congestion[e] += 1
    return CliqueOverlay(
        ac_id, members, relays, dict(congestion),
        construction_rounds=network.round_counter - rounds_before,
    )


def verify_overlay(graph, overlay: CliqueOverlay) -> OverlayReport:
    """Brute-force audit: full non-edge coverage, relay adjacency, and the
    per-edge congestion bound."""
    rep = OverlayReport()
    members = overlay.members
    covered = set(overlay.relays)
    for u, v in _non_edges(graph, members):
        if frozenset((u, v)) not in covered:
            rep.violations.append(f"non-edge ({u},{v}) has no relay")
    for pair, w in overlay.relays.items():
        u, v = sorted(pair)
        if w not in members:
            rep.violations.append(f"relay {w} for ({u},{v}) outside the clique")
        if not (graph.has_edge(u, w) and graph.has_edge(v, w)):
            rep.violations.append(f"relay {w} not adjacent to both of ({u},{v})")
    congestion = defaultdict(int)
    for pair, w in overlay.relays.items():
        for u in pair:
            congestion[(min(u, w), max(u, w))] += 1
    for e, c in congestion.items():
        if c > 2:
            rep.violations.append(f"edge {e} lies on {c} relay paths")
    return rep


@dataclass
class RoutingRequest:
    src: int
    dst: int
    size: int = 1     # payload length in color-widths


def route(network: Network, overlay: CliqueOverlay, requests) -> int:
    """Deliver the requests over direct edges and relay paths, greedily
    packing each edge up to the bit budget per round; returns rounds used."""
    g = network.graph
    cap = network.config.load_cap * g.delta
    load = defaultdict(int)
    for r in requests:
        if r.src not in overlay.members or r.dst not in overlay.members:
            raise SimError(f"routing request ({r.src},{r.dst}) leaves the clique")
        load[r.src] += r.size
        load[r.dst] += r.size
    for v, l in load.items():
        if l > cap:
            raise SimError(
                f"node {v} carries {l} payload units, above the cap {cap}"
            )
    if not requests:
        return 0

    units_per_round = max(1, network.bandwidth_bits // network.color_bits)
    # expand each request into unit messages along its 1- or 2-edge path
    hops = []   # per unit: list of directed edges left to traverse
    for r in requests:
        if g.has_edge(r.src, r.dst):
            path = [(r.src, r.dst)]
        else:
            w = overlay.relays.get(frozenset((r.src, r.dst)))
            if w is None:
                raise SimError(f"no relay for non-adjacent pair ({r.src},{r.dst})")
            path = [(r.src, w), (w, r.dst)]
        hops.extend(list(path) for _ in range(r.size))

    rounds = 0
    messages = 0
    while any(hops):
        rounds += 1
        edge_used = defaultdict(int)
        for path in hops:
            if not path:
                continue
            e = path[0]
            if edge_used[e] < units_per_round:
                edge_used[e] += 1
                path.pop(0)
                messages += 1
        if rounds > 10_000:
            raise SimError("routing scheduler failed to make progress")
    network.charge_phase(
        "route", rounds, messages,
        min(units_per_round * network.color_bits, network.bandwidth_bits),
    )
    return rounds


def dump_overlay(overlay: CliqueOverlay) -> str:
    lines = []
    for pair in sorted(overlay.relays, key=sorted):
        u, v = sorted(pair)
        lines.append(f"{u} {v} via {overlay.relays[pair]}")
    return "\n".join(lines) + ("\n" if lines else "")
