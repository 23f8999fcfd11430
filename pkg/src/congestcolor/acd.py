"""Constant-round almost-clique decomposition and its brute-force auditor.

The distributed construction partitions the nodes into a sparse set plus
"almost-cliques": groups of size about Delta in which every member has at
least (1-eps)*Delta internal neighbors. It works by sampling a small set S,
gossiping sampled IDs so nodes can detect approximately-similar neighborhoods
without ever shipping a neighborhood across an edge, and then agreeing on a
minimum-ID anchor per group. All decisions use one ID (or one bit) per edge
per round.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .graphs import Graph, density_oracle
from .sim import Network, SimError


@dataclass
class AlmostCliqueDecomposition:
    graph: Graph
    v_sparse: set
    cliques: dict          # AC-ID (anchor node id) -> set of members
    leaders: dict          # AC-ID -> node id used as aggregation root
    epsilon: Fraction
    eta: Fraction
    skipped: bool = False  # small-Delta instances route everything to sparse
    f_edges: list = field(default_factory=list)  # detected similar-pair edges

    def clique_of(self, v: int):
        for ac, members in self.cliques.items():
            if v in members:
                return ac
        return None


def compute_acd(network: Network, delta: float | None = None) -> AlmostCliqueDecomposition:
    """Build the decomposition in a constant number of simulated rounds.

    delta is the detection slack parameter; epsilon = 27*delta and
    eta = epsilon/108 are derived from it. For Delta < 16 the square-root
    thresholds degenerate, so the whole graph goes to the sparse set (the
    small-degree pipeline branch handles that regime anyway).
    """
    g = network.graph
    cfg = network.config
    if delta is None:
        delta = cfg.delta_acd
    if not 0.0 < delta < 1.0 / 80.0:
        raise SimError(f"acd delta {delta} outside (0, 1/80)")
    eps = Fraction(delta).limit_denominator(10**9) * 27
    eta = eps / 108
    big_d = g.delta
    if big_d < 2:
        raise SimError("acd needs Delta >= 2")
    if cfg.mode == "theory":
        floor = cfg.c_theory * math.log2(max(2, g.n)) ** 2
        if big_d < floor:
            raise SimError(
                f"theory mode requires Delta >= c*log^2 n = {floor:.1f}, got {big_d}"
            )
    if big_d < 16:
        network.log(-1, "acd", "skipped (Delta < 16)")
        return AlmostCliqueDecomposition(
            g, set(range(g.n)), {}, {}, eps, eta, skipped=True
        )

    sqrt_d = math.sqrt(big_d)
    n = g.n

    # At desk-scale Delta the literal detection thresholds sit exactly at the
    # expected gossip counts and never separate (the analysis assumes
    # Delta >> log^2 n). Practical mode oversamples S, repeats the gossip, and
    # puts the thresholds at a fixed fraction of the expectation; theory mode
    # pins all three knobs so the computation below is the literal algorithm.
    if cfg.mode == "theory":
        s_mult, reps, margin = 1.0, 1, 1.0
    else:
        s_mult, reps, margin = cfg.acd_sample_mult, cfg.acd_gossip_reps, cfg.acd_margin
    p_s = min(1.0, s_mult / sqrt_d)
    exp_s_deg = big_d * p_s
    forward_p = min(1.0, exp_s_deg / (2.0 * sqrt_d))
    exp_count = reps * big_d * forward_p / exp_s_deg  # per friend edge

    # step 1: sample S
    in_s = [network.rng(v).random() < p_s for v in range(n)]
    # everyone learns which neighbors are sampled (one bit per edge)
    s_nbrs = [[u for u in g.neighbors[v] if in_s[u]] for v in range(n)]
    network.charge_phase("acd_sample", 1, 2 * g.m, 1)

    # step 2: gossip one sampled-neighbor ID to sampled neighbors
    counts: list = [Counter() for _ in range(n)]
    gossip_msgs = 0
    for _ in range(reps):
        for v in range(n):
            sn = s_nbrs[v]
            if not sn:
                continue
            rng = network.rng(v)
            pick = sn[int(rng.integers(len(sn)))]
            if rng.random() < min(1.0, len(sn) / (2.0 * sqrt_d)):
                for u in sn:
                    counts[u][pick] += 1
                    gossip_msgs += 1
    network.charge_phase(
        "acd_gossip", reps, gossip_msgs,
        min(network.id_bits, network.bandwidth_bits),
    )

    # step 3: similarity detection from gossip multiplicities
    sim_threshold = margin * (1.0 - 2.0 * delta) * exp_count
    detects = [
        {w for w, c in counts[u].items() if c >= sim_threshold} if in_s[u] else set()
        for u in range(n)
    ]

    # step 4: F-edges — either endpoint detected the other (one-bit notify)
    f_nbrs = [set() for _ in range(n)]
    notify_msgs = 0
    for u in range(n):
        for w in detects[u]:
            if g.has_edge(u, w):
                f_nbrs[u].add(w)
                f_nbrs[w].add(u)
                notify_msgs += 1
    network.charge_phase("acd_fedges", 1, notify_msgs, 1)
    f_edges = sorted(
        (u, w) for u in range(n) for w in f_nbrs[u] if u < w
    )

    # step 5: dense core of S
    dense_threshold = margin * (1.0 - 2.0 * delta) * exp_s_deg
    in_s_dense = [
        in_s[u] and len(f_nbrs[u]) > dense_threshold for u in range(n)
    ]
    network.charge_phase("acd_sdense", 1, 2 * g.m, 1)  # S_dense bit exchange

    # step 6: each dense-core node broadcasts its min dense-core F-neighbor
    proposals = {}
    for u in range(n):
        if in_s_dense[u]:
            cand = [w for w in f_nbrs[u] if in_s_dense[w]]
            if cand:
                proposals[u] = min(cand)
    bc_msgs = sum(g.degree(u) for u in proposals)
    network.charge_phase(
        "acd_anchor", 1, bc_msgs, min(network.id_bits, network.bandwidth_bits)
    )

    # step 7: adoption by multiplicity
    adopt_threshold = margin * (1.0 - 11.0 * delta) * exp_s_deg
    adopted: list = [None] * n
    for v in range(n):
        recv = Counter()
        for u in g.neighbors[v]:
            if u in proposals:
                recv[proposals[u]] += 1
        winners = [a for a, c in recv.items() if c >= adopt_threshold]
        if len(winners) > 1:
            raise SimError(f"node {v} qualifies for {len(winners)} anchors")
        if winners:
            adopted[v] = winners[0]

    # step 8: exchange adopted IDs, then leader-driven pruning
    network.charge_phase(
        "acd_adopt", 1, 2 * g.m, min(network.id_bits, network.bandwidth_bits)
    )
    groups = defaultdict(set)
    for v in range(n):
        if adopted[v] is not None:
            groups[adopted[v]].add(v)

    cliques = {}
    leaders = {}
    sparse = {v for v in range(n) if adopted[v] is None}
    size_floor = (1.0 - delta) * big_d
    internal_floor = (1.0 - 27.0 * delta) * big_d
    max_depth = 0
    prune_msgs = 0
    id_bits = min(network.id_bits, network.bandwidth_bits)
    for ac, members in groups.items():
        leader = ac if ac in members else min(members)
        reached, depth = _bfs_depth(g, members, leader)
        if reached != members:
            sparse |= members  # fragmented group cannot host an aggregation tree
            continue
        max_depth = max(max_depth, depth)
        prune_msgs += 3 * (len(members) - 1)
        internal_min = min(
            sum(1 for u in g.neighbors[v] if adopted[u] == ac) for v in members
        )
        if len(members) < size_floor or internal_min < internal_floor:
            sparse |= members
        else:
            cliques[ac] = set(members)
            leaders[ac] = leader
    # count/min convergecast plus the keep-or-drop broadcast, run in parallel
    # across groups, so rounds are charged at the deepest tree
    network.charge_phase("acd_prune", 3 * max(1, max_depth), prune_msgs, id_bits)

    network.log(-1, "acd", f"cliques={len(cliques)} sparse={len(sparse)}")
    return AlmostCliqueDecomposition(
        g, sparse, cliques, leaders, eps, eta, f_edges=f_edges
    )


def _bfs_depth(g: Graph, members: set, root: int):
    seen = {root}
    frontier = [root]
    depth = 0
    while frontier:
        nxt = []
        for u in frontier:
            for w in g.neighbors[u]:
                if w in members and w not in seen:
                    seen.add(w)
                    nxt.append(w)
        if nxt:
            depth += 1
        frontier = nxt
    return seen, depth


# ---------------------------------------------------------------------------
# validation


@dataclass
class AcdReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str):
        self.violations.append(msg)


def verify_acd(graph: Graph, acd: AlmostCliqueDecomposition) -> AcdReport:
    """Brute-force audit: partition, size bounds, internal degrees, sparse-set
    purity, diameter <= 2, and external degree <= eps*Delta."""
    rep = AcdReport()
    big_d = graph.delta
    eps = float(acd.epsilon)
    eta = float(acd.eta)
    assigned = set(acd.v_sparse)
    for ac, members in acd.cliques.items():
        overlap = assigned & members
        if overlap:
            rep.add(f"clique {ac} overlaps earlier assignment: {sorted(overlap)[:5]}")
        assigned |= members
    if assigned != set(range(graph.n)):
        rep.add("sparse set and cliques do not partition the node set")
    for v in acd.v_sparse:
        if density_oracle(graph, v, eta):
            rep.add(f"eta-dense node {v} left in the sparse set")
    for ac, members in acd.cliques.items():
        size = len(members)
        if not (1 - eps) * big_d <= size <= (1 + eps) * big_d:
            rep.add(f"clique {ac} size {size} outside [(1-eps)D,(1+eps)D]")
        for v in members:
            internal = sum(1 for u in graph.neighbors[v] if u in members)
            if internal < (1 - eps) * big_d:
                rep.add(f"node {v} has only {internal} neighbors inside clique {ac}")
            ext = external_degree(acd, v)
            if ext > eps * big_d:
                rep.add(f"node {v} external degree {ext} exceeds eps*Delta")
        if _diameter_within(graph, members) > 2:
            rep.add(f"clique {ac} has diameter > 2")
    return rep


def _diameter_within(graph: Graph, members: set) -> int:
    best = 0
    for s in members:
        dist = {s: 0}
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for w in graph.neighbors[u]:
                    if w in members and w not in dist:
                        dist[w] = dist[u] + 1
                        nxt.append(w)
            frontier = nxt
        if len(dist) != len(members):
            return graph.n  # disconnected: effectively infinite
        best = max(best, max(dist.values()))
    return best


def external_degree(acd: AlmostCliqueDecomposition, v: int) -> int:
    """Neighbors of v living in other almost-cliques."""
    home = acd.clique_of(v)
    if home is None:
        raise SimError(f"external_degree: node {v} is in the sparse set")
    count = 0
    for u in acd.graph.neighbors[v]:
        ac = acd.clique_of(u)
        if ac is not None and ac != home:
            count += 1
    return count


def antidegree(acd: AlmostCliqueDecomposition, v: int) -> int:
    """Members of v's almost-clique that are not adjacent to v."""
    home = acd.clique_of(v)
    if home is None:
        raise SimError(f"antidegree: node {v} is in the sparse set")
    members = acd.cliques[home]
    nbrs = acd.graph.neighbor_sets[v]
    return sum(1 for u in members if u != v and u not in nbrs)


def dump_acd(acd: AlmostCliqueDecomposition) -> str:
    lines = ["sparse: " + " ".join(str(v) for v in sorted(acd.v_sparse))]
    for ac in sorted(acd.cliques):
        members = " ".join(str(v) for v in sorted(acd.cliques[ac]))
        lines.append(f"clique {ac} leader {acd.leaders[ac]}: {members}")
    return "\n".join(lines) + "\n"
