"""Uniform random generation and exhaustive small-instance enumeration.

The exact g-tree sampler draws from the uniform distribution on
well-labeled g-trees with n edges, with no approximation.  It exploits the
decomposition: conditionally on the scheme s, the chain lengths sigma, the
node labels l, the forest sizes m, the root offset u, the forests, their
labelings, and the Motzkin bridges are all either closed-form or uniform.
The number of trees with data (s, sigma, l) is

    sigma_root * C(2n, n-S) * 3^(n-S) * prod_edges motzkin(sigma_e, l_e)

with S the total chain length.  Proposals draw sigma from the closed-form
envelope sigma_root * C(2n, n-S) (the Motzkin product bounded by 3^S),
node labels along a spanning tree from free-walk endpoints, and accept
each co-tree edge by running an independent free walk and checking that
it hits the required endpoint: the acceptance probability is then exactly
motzkin(sigma_e, l_e)/3^sigma_e without ever computing the count.

Everything downstream of acceptance is exactly uniform: forest sizes come
from splitting one uniform forest (tilted to the root block by a Bernoulli
on the block length), labels are free increments, bridges are uniform via
walk rejection with an exact DP fallback.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import comb

import numpy as np

from .cms import PointedQuadrangulation, cms_forward
from .errors import GenusOutOfRange, TooLarge
from .forest import (
    MotzkinPath,
    WellLabeledForest,
    sample_forest,
    sample_forest_labels,
    sample_motzkin_bridge,
)
from .gtree import GTree, WellLabeledGTree, from_gluing_word
from .maps import CombinatorialMap, build_from_face_word
from .scheme import Decomposition, Scheme, enumerate_schemes, recompose_labeled


@dataclass(frozen=True)
class SamplerConfig:
    """Reproducible sampler settings; the RNG is PCG64 seeded with ``seed``."""

    genus: int = 1
    n: int = 100
    seed: int = 0
    mode: str = "exact"  # exact | asymptotic
    exact_limit: int = 2000

    def __post_init__(self):
        if not 0 <= self.genus <= 3:
            raise GenusOutOfRange("genus must be in 0..3")
        if self.mode not in ("exact", "asymptotic"):
            raise ValueError("mode must be 'exact' or 'asymptotic'")
        if self.mode == "exact" and self.n > self.exact_limit:
            raise TooLarge(f"exact mode capped at n = {self.exact_limit}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def _randbelow(rng: np.random.Generator, total: int) -> int:
    """Uniform integer in [0, total), exact for arbitrarily large totals."""
    if total <= 0:
        raise ValueError("empty range")
    nbits = (total - 1).bit_length() or 1
    nbytes = (nbits + 7) // 8
    shift = 8 * nbytes - nbits
    while True:
        x = int.from_bytes(rng.bytes(nbytes), "big") >> shift
        if x < total:
            return x


# -- plane trees and labelings ------------------------------------------------------


def sample_plane_tree(n: int, rng) -> GTree:
    """Exactly uniform rooted plane tree with n edges (cycle-lemma walk)."""
    f = sample_forest(1, n, rng)
    # gluing word from the contour of the single tree
    seq = f.facial_sequence_ids()[:-1]  # drop the trailing floor vertex
    par = f.parents()
    word = []
    sym = {}
    for a, b in zip(seq, seq[1:]):
        child = b if par[b] == a else a
        if child not in sym:
            sym[child] = len(sym)
        word.append(sym[child])
    return from_gluing_word(word)


def sample_labels(t: GTree, rng) -> WellLabeledGTree:
    """Exactly uniform well-labeling of a g-tree.

    Draws i.i.d. uniform {-1,0,1} increments along a spanning tree and
    accepts when every co-tree edge jump stays within 1; every valid
    labeling is hit with equal probability.  Plane trees never reject.
    """
    m = t.map
    vo = m.vertex_of()
    V = m.vertex_count()
    root_v = vo[m.root]
    adj: list[list[int]] = [[] for _ in range(V)]
    for h in range(0, m.half_edge_count, 2):
        adj[vo[h]].append(vo[h ^ 1])
        adj[vo[h ^ 1]].append(vo[h])
    parent = [-1] * V
    order = []
    seen = [False] * V
    seen[root_v] = True
    stack = [root_v]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if not seen[w]:
                seen[w] = True
                parent[w] = v
                order.append(w)
                stack.append(w)
    while True:
        labels = [0] * V
        incs = rng.integers(-1, 2, size=len(order))
        for v, d in zip(order, incs):
            labels[v] = labels[parent[v]] + int(d)
        ok = all(
            abs(labels[vo[h]] - labels[vo[h ^ 1]]) <= 1
            for h in range(0, m.half_edge_count, 2)
        )
        if ok:
            return WellLabeledGTree(t, labels)


# -- scheme-edge bookkeeping -----------------------------------------------------


def _scheme_edges(s: Scheme):
    """Edges as half-edge pairs (e, e^1) with e even, a BFS spanning tree
    over scheme vertices (edge set), and the co-tree edges."""
    m = s.map
    vo = m.vertex_of()
    V = m.vertex_count()
    edges = [(h, h ^ 1) for h in range(0, m.half_edge_count, 2)]
    adj: list[list[tuple[int, int]]] = [[] for _ in range(V)]
    for h, hb in edges:
        adj[vo[h]].append((vo[hb], h))
        adj[vo[hb]].append((vo[h], hb))
    root_v = vo[m.root]
    tree_edges = []  # half-edge oriented parent -> child
    seen = [False] * V
    seen[root_v] = True
    queue = [root_v]
    qi = 0
    used = set()
    while qi < len(queue):
        v = queue[qi]
        qi += 1
        for w, h in adj[v]:
            if not seen[w]:
                seen[w] = True
                used.add(h // 2)
                tree_edges.append(h)  # origin v, end w
                queue.append(w)
    cotree = [h for h, _ in edges if h // 2 not in used]
    return edges, tree_edges, cotree


# -- the exact sampler ----------------------------------------------------------------

_EXACT_TABLES: dict[tuple[int, int], dict] = {}


def _exact_tables(g: int, n: int) -> dict:
    """Sampling tables shared across schemes with equal edge count: the
    size-vector envelope depends on the scheme only through E."""
    key = (g, n)
    if key in _EXACT_TABLES:
        return _EXACT_TABLES[key]
    schemes = enumerate_schemes(g)
    by_edges: dict[int, list[Scheme]] = {}
    for s in schemes:
        by_edges.setdefault(s.edge_count, []).append(s)
    central = [comb(2 * n, n - S) for S in range(0, n + 1)]
    classes = []
    for E, group in sorted(by_edges.items()):
        cum = []
        run = 0
        for S in range(E, n + 1):
            run += central[S] * comb(S, E)
            cum.append(run)
        if run:
            classes.append(
                {"E": E, "schemes": group, "cum": cum, "class_total": run * len(group)}
            )
    cls_cum = []
    run = 0
    for c in classes:
        run += c["class_total"]
        cls_cum.append(run)
    tables = {
        "classes": classes,
        "class_cum": cls_cum,
        "grand": run,
        "edges_split": {},  # scheme id -> (edges, tree_edges, cotree), lazily
    }
    _EXACT_TABLES[key] = tables
    return tables


def _walk_endpoint(sigma: int, rng) -> int:
    return int(rng.integers(-1, 2, size=sigma).sum()) if sigma else 0


def _sample_sigma_vector(s: Scheme, n: int, cum, total, rng):
    """sigma per edge from the envelope sigma_root * C(2n, n-S)."""
    from bisect import bisect_right

    E = s.edge_count
    S = E + bisect_right(cum, _randbelow(rng, total))
    # sigma of the root edge: weight sigma* * C(S - sigma* - 1, E - 2)
    w = [a * comb(S - a - 1, E - 2) for a in range(1, S - E + 2)]
    sig_root = 1 + _pick_weighted(rng, w, sum(w))
    rest = _uniform_composition(S - sig_root, E - 1, rng)
    root_edge = s.map.root // 2
    sigma = {root_edge: sig_root}
    others = [k for k in range(E) if k != root_edge]
    for k, v in zip(others, rest):
        sigma[k] = v
    return sigma, S


def _pick_weighted(rng, weights, total) -> int:
    r = _randbelow(rng, total)
    for i, w in enumerate(weights):
        if r < w:
            return i
        r -= w
    raise AssertionError("weights exhausted")


def _uniform_composition(total: int, parts: int, rng) -> list[int]:
    """Uniform composition of ``total`` into ``parts`` parts, each >= 1."""
    if parts == 0:
        assert total == 0
        return []
    if parts == 1:
        return [total]
    cuts = rng.choice(total - 1, size=parts - 1, replace=False) + 1
    cuts = np.sort(cuts)
    prev = 0
    out = []
    for c in list(cuts) + [total]:
        out.append(int(c - prev))
        prev = c
    return out


def sample_wl_gtree_exact(g: int, n: int, rng, exact_limit: int = 2000) -> WellLabeledGTree:
    """Exactly uniform well-labeled g-tree with n edges, 1 <= g <= 3."""
    if not 1 <= g <= 3:
        raise GenusOutOfRange("exact g-tree sampler needs 1 <= g <= 3")
    if n > exact_limit:
        raise TooLarge(f"exact mode capped at n = {exact_limit}")
    tables = _exact_tables(g, n)
    if not tables["classes"]:
        raise TooLarge(f"no genus-{g} tree has only {n} edges")
    d = _sample_decomposition(g, n, tables, rng)
    return recompose_labeled(d)


def _sample_decomposition(g: int, n: int, tables, rng) -> Decomposition:
    from bisect import bisect_right

    grand = tables["grand"]
    while True:
        # scheme class, scheme, and sigma from the closed-form envelope
        cls = tables["classes"][
            bisect_right(tables["class_cum"], _randbelow(rng, grand))
        ]
        group = cls["schemes"]
        s: Scheme = group[_randbelow(rng, len(group))]
        total = cls["class_total"] // len(group)
        sigma_edge, S = _sample_sigma_vector(s, n, cls["cum"], total, rng)

        cache = tables["edges_split"]
        if id(s) not in cache:
            cache[id(s)] = _scheme_edges(s)
        edges, tree_edges, cotree = cache[id(s)]
        m = s.map
        vo = m.vertex_of()
        # node labels from free-walk endpoints along the spanning tree
        lab = [0] * m.vertex_count()
        for h in tree_edges:
            lab[vo[h ^ 1]] = lab[vo[h]] + _walk_endpoint(sigma_edge[h // 2], rng)
        # Bernoulli factory per co-tree edge: an independent free walk must
        # hit the prescribed endpoint, which happens with probability
        # motzkin(sigma, l)/3^sigma exactly
        ok = True
        for h in cotree:
            le = lab[vo[h ^ 1]] - lab[vo[h]]
            if _walk_endpoint(sigma_edge[h // 2], rng) != le:
                ok = False
                break
        if not ok:
            continue

        # forest sizes: split one uniform forest into consecutive tree groups
        # (this gives the product-of-counts law on sizes), then tilt to the
        # root block length by rejection; resampling only this stage keeps
        # the already-accepted (sigma, labels) marginal intact
        M = n - S
        order_he = list(range(m.half_edge_count))
        root_he = m.root
        while True:
            big = sample_forest(2 * S, M, rng)
            par = big.parents()
            tree_sizes = []
            cnt = 0
            for k, p in enumerate(par):
                if p == -1:
                    if k:
                        tree_sizes.append(cnt)
                    cnt = 0
                else:
                    cnt += 1
            tree_sizes = tree_sizes[: 2 * S]
            idx = 0
            m_he = {}
            for h in order_he:
                sig = sigma_edge[h // 2]
                m_he[h] = sum(tree_sizes[idx : idx + sig])
                idx += sig
            block_root = 2 * m_he[root_he] + sigma_edge[root_he // 2]
            # accept with probability block/(2n): the root offset u ranges
            # over the root block, so sizes are tilted by the block length
            if _randbelow(rng, 2 * n) < block_root:
                break
        u = _randbelow(rng, block_root)

        forests = {}
        for h in order_he:
            fh = sample_forest(sigma_edge[h // 2], m_he[h], rng)
            forests[h] = sample_forest_labels(fh, rng)

        motzkin = {}
        for h, hb in edges:
            le = lab[vo[hb]] - lab[vo[h]]
            mp = sample_motzkin_bridge(sigma_edge[h // 2], le, rng)
            motzkin[h] = mp
            motzkin[hb] = mp.reversed_shifted()

        return Decomposition(s, forests, motzkin, tuple(lab), u)


# -- asymptotic sampler -----------------------------------------------------------------


def sample_wl_gtree_asymptotic(g: int, n: int, rng) -> WellLabeledGTree:
    """Approximately uniform well-labeled g-tree for large n.

    Sizes, node labels, and the root offset come from an exact draw of the
    scaling-limit law (dominant schemes only); they are rounded to a valid
    integer size vector, and everything conditional on sizes is exactly
    uniform.  The bias vanishes as n grows; non-dominant schemes (mass
    O(n^-1/2)) are not produced.
    """
    from .continuum import sample_scheme_limit

    if not 1 <= g <= 3:
        raise GenusOutOfRange("asymptotic sampler needs 1 <= g <= 3")
    lim = sample_scheme_limit(g, rng)
    s = lim.scheme
    m = s.map
    vo = m.vertex_of()
    E = s.edge_count
    gamma_n = (8 * n / 9) ** 0.25

    sigma_edge = {}
    for k in range(E):
        sigma_edge[k] = max(1, round((2 * n) ** 0.5 * lim.sigma[k]))
    lab = [int(round(gamma_n * x)) for x in lim.node_labels]
    # Motzkin bridges need |label jump| <= sigma on every edge
    for k in range(E):
        h = 2 * k
        jump = abs(lab[vo[h ^ 1]] - lab[vo[h]])
        sigma_edge[k] = max(sigma_edge[k], jump)
    S = sum(sigma_edge.values())
    if S > n:
        scale = (n - E) / S if S else 0.0
        for k in range(E):
            h = 2 * k
            jump = abs(lab[vo[h ^ 1]] - lab[vo[h]])
            sigma_edge[k] = max(1, jump, int(sigma_edge[k] * scale))
        S = sum(sigma_edge.values())
        if S > n:
            # give up on labels; pull them toward 0 until feasible
            lab = [0] * len(lab)
            for k in range(E):
                sigma_edge[k] = max(1, int(sigma_edge[k] * (n - E) / S))
            S = sum(sigma_edge.values())
    M = n - S

    # forest sizes proportional to the limit masses, residue into the root
    m_he = {}
    order_he = list(range(m.half_edge_count))
    for h in order_he:
        target = max(0.0, n * lim.m[h] - sigma_edge[h // 2] / 2)
        m_he[h] = int(round(target))
    root_he = m.root
    residue = M - sum(m_he.values())
    m_he[root_he] += residue
    if m_he[root_he] < 0:
        deficit = -m_he[root_he]
        m_he[root_he] = 0
        donors = sorted(order_he, key=lambda h: -m_he[h])
        for h in donors:
            take = min(deficit, m_he[h])
            m_he[h] -= take
            deficit -= take
            if deficit == 0:
                break
    assert sum(m_he.values()) == M and all(v >= 0 for v in m_he.values())

    block_root = 2 * m_he[root_he] + sigma_edge[root_he // 2]
    u = min(block_root - 1, max(0, int(2 * n * lim.u)))

    forests = {}
    for h in order_he:
        fh = sample_forest(sigma_edge[h // 2], m_he[h], rng)
        forests[h] = sample_forest_labels(fh, rng)
    motzkin = {}
    for k in range(E):
        h = 2 * k
        le = lab[vo[h ^ 1]] - lab[vo[h]]
        mp = sample_motzkin_bridge(sigma_edge[k], le, rng)
        motzkin[h] = mp
        motzkin[h ^ 1] = mp.reversed_shifted()
    lab0 = lab[vo[m.root]]
    lab = [x - lab0 for x in lab]
    d = Decomposition(s, forests, motzkin, tuple(lab), u)
    return recompose_labeled(d)


def sample_wl_gtree(config: SamplerConfig, rng=None) -> WellLabeledGTree:
    """Uniform well-labeled g-tree per the config's mode."""
    rng = config.rng() if rng is None else rng
    if config.genus == 0:
        return sample_labels(sample_plane_tree(config.n, rng), rng)
    if config.mode == "exact":
        return sample_wl_gtree_exact(config.genus, config.n, rng, config.exact_limit)
    return sample_wl_gtree_asymptotic(config.genus, config.n, rng)


def sample_quadrangulation(
    g: int, n: int, rng, pointed: bool = True, mode: str = "exact", exact_limit: int = 2000
):
    """Uniform (pointed) bipartite quadrangulation of genus g with n faces."""
    if g == 0:
        wt = sample_labels(sample_plane_tree(n, rng), rng)
    elif mode == "exact":
        wt = sample_wl_gtree_exact(g, n, rng, exact_limit)
    else:
        wt = sample_wl_gtree_asymptotic(g, n, rng)
    eps = -1 if rng.integers(0, 2) == 0 else 1
    pq = cms_forward(wt, eps)
    if pointed:
        return pq
    # forgetting the base is uniform: every quadrangulation has n+2-2g vertices
    return pq.map


# -- exhaustive enumeration ----------------------------------------------------------


def _all_pairings(k: int):
    """All fixed-point-free involutions of 0..k-1 as pairing arrays."""

    def rec(items):
        if not items:
            yield []
            return
        a = items[0]
        for i in range(1, len(items)):
            b = items[i]
            for rest in rec(items[1:i] + items[i + 1 :]):
                yield [(a, b)] + rest

    for mt in rec(list(range(k))):
        pairing = [0] * k
        for a, b in mt:
            pairing[a] = b
            pairing[b] = a
        yield pairing


def double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def enumerate_gtrees(g: int, n: int, budget: int = 3_000_000) -> list[GTree]:
    """All rooted g-trees with n edges, by polygon pairing enumeration."""
    if double_factorial(2 * n - 1) > budget:
        raise TooLarge("pairing count exceeds the enumeration budget")
    out = []
    for pairing in _all_pairings(2 * n):
        m = build_from_face_word(pairing, 0)
        if m.genus() == g:
            out.append(GTree(m))
    return out


def enumerate_labelings(t: GTree) -> list[WellLabeledGTree]:
    """All well-labelings of a g-tree (root label 0, jumps at most 1)."""
    m = t.map
    vo = m.vertex_of()
    V = m.vertex_count()
    root_v = vo[m.root]
    adj: list[list[int]] = [[] for _ in range(V)]
    for h in range(0, m.half_edge_count, 2):
        adj[vo[h]].append(vo[h ^ 1])
        adj[vo[h ^ 1]].append(vo[h])
    parent = [-1] * V
    order = []
    seen = [False] * V
    seen[root_v] = True
    stack = [root_v]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if not seen[w]:
                seen[w] = True
                parent[w] = v
                order.append(w)
                stack.append(w)
    out = []
    for incs in product((-1, 0, 1), repeat=len(order)):
        labels = [0] * V
        for v, dd in zip(order, incs):
            labels[v] = labels[parent[v]] + dd
        if all(
            abs(labels[vo[h]] - labels[vo[h ^ 1]]) <= 1
            for h in range(0, m.half_edge_count, 2)
        ):
            out.append(WellLabeledGTree(t, labels))
    return out


def enumerate_wl_gtrees(g: int, n: int, budget: int = 3_000_000) -> list[WellLabeledGTree]:
    out = []
    for t in enumerate_gtrees(g, n, budget):
        out.extend(enumerate_labelings(t))
    return out


def enumerate_pointed_quadrangulations(
    g: int, n: int, budget: int = 300_000
) -> list[PointedQuadrangulation]:
    """All pointed bipartite quadrangulations of genus g with n faces,
    built independently of the bijection by gluing n squares.

    Dedupe is by rooted canonical form with the base vertex; epsilon is the
    derived root-orientation sign (larger-distance endpoint first means -1).
    """
    if double_factorial(4 * n - 1) > budget:
        raise TooLarge("square-gluing count exceeds the enumeration budget")
    out: dict[tuple, PointedQuadrangulation] = {}
    for pairing in _all_pairings(4 * n):
        # half-edge h lives on square h//4 at position h%4;
        # face_next(h) = next side of the square, so next[pair(h)] = face_next(h)
        nv = [0] * (4 * n)
        for h in range(4 * n):
            nv[pairing[h]] = (h // 4) * 4 + (h + 1) % 4
        try:
            m0 = CombinatorialMap(nv, 0)
            m0.validate()
        except Exception:
            continue
        if m0.genus() != g or not m0.is_bipartite_quadrangulation():
            continue
        for r in range(4 * n):
            cm, _ = CombinatorialMap(nv, r).canonical()
            new_vo = cm.vertex_of()
            for v in range(cm.vertex_count()):
                dist = _bfs_list(cm, v)
                du, dw = dist[new_vo[0]], dist[new_vo[1]]
                assert du != dw, "bipartite parity forbids equal root distances"
                eps = -1 if du > dw else 1
                pq = PointedQuadrangulation(cm, v, eps)
                out.setdefault((cm.next_at_vertex, cm.root, v), pq)
    return list(out.values())


def _bfs_list(q: CombinatorialMap, source: int) -> list[int]:
    from .cms import bfs_distances_list

    return bfs_distances_list(q, source)


def enumerate_small(g: int, n: int, kind: str = "gtrees", budget: int = 3_000_000):
    """Complete duplicate-free small-instance lists; the test oracle."""
    if kind == "gtrees":
        return enumerate_gtrees(g, n, budget)
    if kind == "wl_gtrees":
        return enumerate_wl_gtrees(g, n, budget)
    if kind == "pointed_quadrangulations":
        return enumerate_pointed_quadrangulations(g, n)
    raise ValueError(f"unknown kind {kind!r}")
