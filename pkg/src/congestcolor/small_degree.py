"""(deg+1)-list coloring for low-degree subgraphs.

Four stages: random trials shatter the graph into small uncolored components;
each component is carved into low-diameter clusters grouped into independent
classes; each cluster deterministically computes a list-size-preserving map
from the huge original colorspace into one of size poly(cluster size), so that
a reduced color fits in a few bits; finally many parallel trial instances run
per cluster with their candidates packed into shared messages, and the cluster
adopts one instance that colored every member.

The colorspace reduction assigns each original color a distinct low-degree
polynomial over a prime field and maps it to the polynomial's value at a
common evaluation point g; g is fixed bit by bit via conditional expectation
so that no node's list shrinks. The cluster decomposition here is a
deterministic BFS ball-carving stand-in with the same interface and audited
outputs (independent classes, bounded weak diameter).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy

from .sim import Network, SimError
from .trials import random_color_trial

# ---------------------------------------------------------------------------
# cluster decomposition


@dataclass(eq=False)          # identity hashing: clusters key colormap dicts
class Cluster:
    nodes: frozenset
    root: int
    parent: dict
    depth: dict
    diameter: int
    class_index: int = -1

    @property
    def tree_depth(self) -> int:
        return max(self.depth.values(), default=0)


@dataclass
class ClusterDecomposition:
    classes: list                    # list of lists of Cluster
    component: frozenset

    def all_clusters(self):
        for cls in self.classes:
            yield from cls


def shatter(network: Network, subgraph) -> list:
    """Trial-color the subgraph until the uncolored remainder falls apart into
    small connected components, which are returned as node lists.

    Runs k6*ceil(log2 Delta_H) trial iterations, splits the survivors into a
    low- and a high-degree group at half the maximum uncolored degree, gives
    the high-degree group the same number of extra iterations, and then
    flood-fills the remaining uncolored components (charging diameter-many
    rounds).
    """
    cfg = network.config
    h = [v for v in subgraph if network.states[v].color is None]
    if not h:
        return []
    h_set = set(h)

    def udeg(v):
        return sum(1 for u in network.states[v].uncolored_neighbors if u in h_set)

    dh = max((udeg(v) for v in h), default=0)
    iters = cfg.k6 * max(1, math.ceil(math.log2(max(2, dh))))
    for _ in range(iters):
        active = [v for v in h if network.states[v].color is None]
        if not active:
            break
        random_color_trial(network, active, phase="small_shatter")

    survivors = [v for v in h if network.states[v].color is None]
    if survivors:
        thr = max((udeg(v) for v in survivors), default=0) / 2.0
        high = [v for v in survivors if udeg(v) > thr]
        for _ in range(iters):
            active = [v for v in high if network.states[v].color is None]
            if not active:
                break
            random_color_trial(network, active, phase="small_shatter")

    remaining = {v for v in h if network.states[v].color is None}
    components = []
    seen = set()
    max_diam = 0
    edge_count = 0
    for v in sorted(remaining):
        if v in seen:
            continue
        comp = []
        frontier = [v]
        seen.add(v)
        depth = 0
        while frontier:
            comp.extend(frontier)
            nxt = []
            for u in frontier:
                for w in network.graph.neighbors[u]:
                    if w in remaining:
                        edge_count += 1
                        if w not in seen:
                            seen.add(w)
                            nxt.append(w)
            frontier = nxt
            if nxt:
                depth += 1
        components.append(sorted(comp))
        max_diam = max(max_diam, depth)
    if components:
        network.charge_phase(
            "small_components", max(1, max_diam), edge_count,
            min(network.id_bits, network.bandwidth_bits),
        )
    return components


def decompose_clusters(network: Network, component,
                       r_cluster: int | None = None) -> ClusterDecomposition:
    """Deterministic BFS ball carving: repeatedly peel the ball of radius
    r_cluster around the lowest-ID remaining node, then greedy-color the
    cluster adjacency graph into independent classes."""
    comp = sorted(component)
    if len(comp) > network.config.n_max_component:
        raise SimError(
            f"component of size {len(comp)} exceeds the "
            f"{network.config.n_max_component}-node ceiling: shattering failed"
        )
    if r_cluster is None:
        r_cluster = max(1, math.ceil(math.log2(max(2, len(comp))) ** 2))
    g = network.graph
    remaining = set(comp)
    clusters = []
    carve_rounds = 0
    msgs = 0
    while remaining:
        root = min(remaining)
        parent = {root: None}
        depth = {root: 0}
        frontier = [root]
        d = 0
        while frontier and d < r_cluster:
            nxt = []
            for u in frontier:
                for w in g.neighbors[u]:
                    if w in remaining and w not in parent:
                        parent[w] = u
                        depth[w] = d + 1
                        nxt.append(w)
                        msgs += 1
            frontier = nxt
            d += 1
        nodes = frozenset(parent)
        clusters.append(Cluster(nodes, root, parent, depth,
                                _induced_diameter(g, nodes)))
        remaining -= nodes
        carve_rounds += d + 1
    network.charge_phase("small_decompose", carve_rounds, msgs,
                         min(network.id_bits, network.bandwidth_bits))

    # greedy class assignment on the cluster adjacency graph
    classes: list = []
    for c in clusters:
        used = set()
        for i, cls in enumerate(classes):
            for other in cls:
                if _adjacent(g, c.nodes, other.nodes):
                    used.add(i)
                    break
        slot = next(i for i in range(len(classes) + 1) if i not in used)
        if slot == len(classes):
            classes.append([])
        c.class_index = slot
        classes[slot].append(c)
    return ClusterDecomposition(classes, frozenset(comp))


def _adjacent(g, a, b):
    small, big = (a, b) if len(a) <= len(b) else (b, a)
    return any(not g.neighbor_sets[v].isdisjoint(big) for v in small)


def _induced_diameter(g, nodes):
    best = 0
    for s in nodes:
        dist = {s: 0}
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for w in g.neighbors[u]:
                    if w in nodes and w not in dist:
                        dist[w] = dist[u] + 1
                        nxt.append(w)
            frontier = nxt
        best = max(best, max(dist.values()))
    return best


# ---------------------------------------------------------------------------
# colorspace reduction


@dataclass
class ColorMap:
    n_bound: int          # N: size/diameter bound used in the formulas
    c0: float
    p: int
    degree: int           # polynomial degree d = ceil(p / N^5)
    g: int                # evaluation point
    lists_snapshot: tuple # the per-node lists the map was certified for

    def map_color(self, color: int) -> int:
        return _poly_eval(_color_poly(color, self.p, self.degree), self.g, self.p)

    def dump(self) -> str:
        return (f"N {self.n_bound}\nc0 {self.c0}\np {self.p}\n"
                f"d {self.degree}\ng {self.g}\n")


def _minimal_c0(n_bound: int, u_size: int) -> float:
    """Smallest c0 (on a 1/64 grid) with (N^c0/2)^(N^(c0-5)/2) > U."""
    log_u = math.log(u_size)
    log_n = math.log(n_bound)
    c0 = 3.0
    while c0 < 64.0:
        exponent = n_bound ** (c0 - 5.0) / 2.0
        if exponent * (c0 * log_n - math.log(2.0)) > log_u:
            return c0
        c0 += 1.0 / 64.0
    raise SimError("no workable colorspace-reduction exponent found")


def _color_poly(color: int, p: int, degree: int):
    """Distinct polynomial per color: base-p digits as coefficients."""
    coeffs = []
    x = color
    for _ in range(degree + 1):
        coeffs.append(x % p)
        x //= p
    if x:
        raise SimError(f"color {color} exceeds the polynomial family size")
    return coeffs


def _poly_eval(coeffs, g, p):
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * g + c) % p
    return acc


def _roots_mod_p(coeffs, p):
    cs = [c % p for c in coeffs]
    while cs and cs[-1] == 0:
        cs.pop()
    if len(cs) <= 1:
        if cs:
            return []
        raise SimError("identical polynomials for distinct colors")
    if p <= (1 << 16):
        gs = np.arange(p, dtype=np.int64)
        acc = np.zeros(p, dtype=np.int64)
        for c in reversed(cs):
            acc = (acc * gs + c) % p
        return np.nonzero(acc == 0)[0].tolist()
    if len(cs) == 2:
        return [(-cs[0] * pow(cs[1], -1, p)) % p]
    x = sympy.Symbol("x")
    poly = sympy.Poly([int(c) for c in reversed(cs)], x, modulus=p)
    return sorted(int(r) % p for r in poly.ground_roots())


def _cluster_lists(network: Network, cluster: Cluster):
    """Working lists for the reduced-space trials: each member keeps its
    |cluster| smallest palette colors (enough for a (deg+1) instance inside
    the cluster, and small enough for the reduction's size bound)."""
    cap = len(cluster.nodes)
    return {
        v: tuple(sorted(network.states[v].palette())[:max(
            cap, 1 + sum(1 for u in network.states[v].uncolored_neighbors
                         if u in cluster.nodes))])
        for v in cluster.nodes
    }


def reduce_colorspace(network: Network, cluster: Cluster,
                      charge: bool = True) -> ColorMap:
    """Deterministically pick an evaluation point g whose induced map keeps
    every member's list size intact (hard-checked)."""
    lists = _cluster_lists(network, cluster)
    n_bound = max(3, len(cluster.nodes), cluster.diameter + 1,
                  max(len(l) for l in lists.values()))
    u_size = network.palettes.colorspace_size
    c0 = _minimal_c0(n_bound, u_size)
    while True:
        p = int(sympy.nextprime(n_bound ** c0 / 2.0))
        if p > n_bound ** c0 + 1:
            raise SimError("no prime found in the target window")
        degree = max(1, math.ceil(p / n_bound ** 5))
        if p ** (degree + 1) > u_size:
            break
        c0 += 1.0 / 64.0   # family too small for the colorspace; widen

    # collision sets: the evaluation points where some pair of one node's
    # colors collides
    collision = {}
    for v, pal in lists.items():
        bad = set()
        for i, a in enumerate(pal):
            pa = _color_poly(a, p, degree)
            for b in pal[i + 1:]:
                pb = _color_poly(b, p, degree)
                diff = [(x - y) % p for x, y in zip(pa, pb)]
                bad.update(_roots_mod_p(diff, p))
        collision[v] = np.array(sorted(bad), dtype=np.int64)

    ell = max(1, math.ceil(math.log2(p)))
    scale = n_bound ** 5            # fixed-point denominator for expectations
    prefix = 0
    for i in range(1, ell + 1):
        span = 1 << (ell - i)
        scores = []
        for b in (0, 1):
            lo = (prefix << 1 | b) << (ell - i)
            hi = min(lo + span, p)
            total = 0
            for v, bad in collision.items():
                count = int(np.searchsorted(bad, hi) - np.searchsorted(bad, lo)) \
                    if hi > lo else 0
                exact = count / span
                total += round(exact * scale)       # node-local fixed point
            y_term = max(0, (lo + span) - max(lo, p)) / span
            scores.append(total / scale + y_term)
        prefix = prefix << 1 | (0 if scores[0] <= scores[1] else 1)
    g_point = prefix
    if charge:
        depth = max(1, cluster.tree_depth)
        width = network.chunks(max(1, math.ceil(math.log2(scale * n_bound + 1))))
        network.charge_phase(
            "small_reduce", ell * 2 * depth * width,
            ell * 2 * (len(cluster.nodes) - 1), min(
                network.bandwidth_bits,
                max(1, math.ceil(math.log2(scale * n_bound + 1)))),
        )

    if g_point >= p:
        raise SimError("colorspace reduction fixed an out-of-field point")
    cmap = ColorMap(n_bound, c0, p, degree, g_point,
                    tuple(sorted(lists.items())))
    for v, pal in lists.items():
        if len({cmap.map_color(c) for c in pal}) != len(pal):
            raise SimError(f"colorspace reduction shrank the list of node {v}")
    return cmap


# ---------------------------------------------------------------------------
# cluster coloring


def color_clusters(network: Network, decomposition: ClusterDecomposition,
                   colormaps: dict) -> dict:
    """Color every cluster, class by class, via packed parallel trial
    instances; each cluster adopts an instance that colored all its members.
    Returns per-phase round usage."""
    cfg = network.config
    start = network.stats.rounds
    n = network.graph.n
    instances = max(1, math.ceil(cfg.instance_mult * math.log2(max(4, n))))
    for cls in decomposition.classes:
        live = [c for c in cls
                if any(network.states[v].color is None for v in c.nodes)]
        if not live:
            continue
        plans = []
        for cluster in live:
            cmap = colormaps[cluster]
            lists = _cluster_lists(network, cluster)
            if tuple(sorted(lists.items())) != cmap.lists_snapshot:
                # palettes changed since the map was certified: re-derive
                cmap = reduce_colorspace(network, cluster)
                colormaps[cluster] = cmap
            plans.append((cluster, cmap, lists))

        iters = max(1, math.ceil(cfg.instance_mult * math.log2(max(
            4, max(p[1].n_bound for p in plans)))))
        width = max(1, math.ceil(math.log2(max(p[1].p for p in plans))))
        pack = max(1, network.bandwidth_bits // width)
        rounds_per_iter = 2 * math.ceil(instances / pack)
        cluster_msgs = 0

        winners = {}
        for cluster, cmap, lists in plans:
            members = sorted(cluster.nodes)
            reduced = {v: {cmap.map_color(c): c for c in lists[v]}
                       for v in members}
            for v in members:
                if len(reduced[v]) != len(lists[v]):
                    raise SimError(f"stale colorspace map at node {v}")
            nbrs = {v: [u for u in network.graph.neighbors[v]
                        if u in cluster.nodes] for v in members}
            pal = {(v, i): set(reduced[v]) for v in members
                   for i in range(instances)}
            got = {(v, i): None for v in members for i in range(instances)}
            for _ in range(iters):
                picks = {}
                for v in members:
                    rng = network.rng(v)
                    for i in range(instances):
                        if got[(v, i)] is None and pal[(v, i)]:
                            opts = sorted(pal[(v, i)])
                            picks[(v, i)] = opts[int(rng.integers(len(opts)))]
                for (v, i), c in picks.items():
                    if any(picks.get((u, i)) == c for u in nbrs[v]):
                        continue
                    got[(v, i)] = c
                    for u in nbrs[v]:
                        pal[(u, i)].discard(c)
                cluster_msgs += sum(len(nbrs[v]) for v in members) * math.ceil(
                    instances / pack) * 2
            success = 0
            for i in range(instances):
                if all(got[(v, i)] is not None for v in members):
                    success |= 1 << i
            if not success:
                raise SimError(
                    f"no trial instance colored cluster rooted at {cluster.root}"
                )
            chosen = (success & -success).bit_length() - 1
            winners[cluster] = {
                v: reduced[v][got[(v, chosen)]] for v in members
            }
        # simulate the per-class schedule: packed trials, success convergecast
        # (bitwise AND over instance masks), index broadcast, permanent colors
        max_depth = max(max(1, c.tree_depth) for c, _, _ in plans)
        agg_rounds = max_depth * network.chunks(instances) + max_depth + 1
        network.charge_phase(
            "small_color", iters * rounds_per_iter + agg_rounds,
            cluster_msgs + sum(2 * len(c.nodes) for c, _, _ in plans),
            min(network.bandwidth_bits, pack * width),
        )
        for cluster, assignment in winners.items():
            for v, c in sorted(assignment.items()):
                network.assign_color(v, c)
    return {"rounds": network.stats.rounds - start}


def color_small_degree(network: Network, subgraph) -> dict:
    """Full low-degree coloring: shatter, decompose, reduce, color. Returns
    per-stage round usage."""
    start = network.stats.rounds
    components = shatter(network, subgraph)
    for comp in components:
        decomp = decompose_clusters(network, comp)
        colormaps = {c: reduce_colorspace(network, c)
                     for c in decomp.all_clusters()}
        color_clusters(network, decomp, colormaps)
    leftovers = [v for v in subgraph if network.states[v].color is None]
    if leftovers:
        raise SimError(f"low-degree coloring left {len(leftovers)} nodes uncolored")
    return {"rounds": network.stats.rounds - start}


def dump_decomposition(decomp: ClusterDecomposition) -> str:
    lines = []
    for i, cls in enumerate(decomp.classes):
        for c in cls:
            members = " ".join(str(v) for v in sorted(c.nodes))
            lines.append(
                f"class {i} root {c.root} diameter {c.diameter}: {members}"
            )
    return "\n".join(lines) + ("\n" if lines else "")
