"""Schemes and the two-way decomposition of g-trees.

A scheme is a one-face map with all vertex degrees at least 3 (dominant:
exactly 3).  Every g-tree of genus g >= 1 decomposes uniquely into its
scheme, one forest per scheme half-edge (grafted along the chain replacing
that half-edge), one Motzkin path per half-edge carrying the chain labels,
the scheme node labels, and the root offset u inside the root block.
Recomposition inverts this exactly.

The g-tree is reassembled through its face word: blocks, one per scheme
half-edge in scheme facial order, each block being the facial walk of its
forest; tree steps pair up within a block and the k-th floor step of a
block pairs with the (sigma+1-k)-th floor step of the reversed half-edge's
block.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

from .errors import GenusZero, IncompatibleQuadruple, NotOneFace, OutOfRange
from .forest import (
    ContourPair,
    Forest,
    MotzkinPath,
    WellLabeledForest,
    contour_pair,
    decode_contour,
)
from .gtree import GTree, WellLabeledGTree
from .maps import (
    CombinatorialMap,
    build_from_face_word_with_ids,
    contract_edge,
    merge_three_vertices,
)


@dataclass(frozen=True)
class Scheme:
    """Rooted one-face map with minimum vertex degree 3."""

    map: CombinatorialMap

    def __post_init__(self):
        if len(self.map.faces().faces) != 1:
            raise NotOneFace("scheme must have exactly one face")
        if min(len(c) for c in self.map.vertices()) < 3:
            raise IncompatibleQuadruple("scheme has a vertex of degree < 3")

    @property
    def dominant(self) -> bool:
        return all(len(c) == 3 for c in self.map.vertices())

    def genus(self) -> int:
        return self.map.genus()

    @property
    def edge_count(self) -> int:
        return self.map.edge_count

    def facial_order(self) -> list[int]:
        return GTree(self.map).facial_order()

    def gluing_word(self) -> list[int]:
        return GTree(self.map).gluing_word()


@dataclass(frozen=True)
class Decomposition:
    """Scheme, per-half-edge well-labeled forests and Motzkin paths, node
    labels (0 at the root-chain origin), and root offset u.

    ``chain_start``, when present, maps each scheme half-edge to the first
    g-tree half-edge of its chain (decompose fills it; it is not part of
    the serialized quadruple)."""

    scheme: Scheme
    forests: dict[int, WellLabeledForest]
    motzkin: dict[int, MotzkinPath]
    node_labels: tuple[int, ...]
    u: int
    chain_start: dict | None = None

    def sigma(self, e: int) -> int:
        return self.forests[e].forest.tree_count

    def m(self, e: int) -> int:
        return self.forests[e].forest.tree_edge_count

    @property
    def n(self) -> int:
        tot = sum(2 * self.m(e) + self.sigma(e) for e in self.forests)
        assert tot % 2 == 0
        return tot // 2

    def validate(self) -> None:
        sm = self.scheme.map
        vo = sm.vertex_of()
        if len(self.node_labels) != sm.vertex_count():
            raise IncompatibleQuadruple("node label array has wrong length")
        if self.node_labels[vo[sm.root]] != 0:
            raise IncompatibleQuadruple("root-node label must be 0")
        for e in range(sm.half_edge_count):
            if e not in self.forests or e not in self.motzkin:
                raise IncompatibleQuadruple(f"missing data for half-edge {e}")
            f, M = self.forests[e], self.motzkin[e]
            try:
                f.validate()
            except Exception as exc:
                raise IncompatibleQuadruple(str(exc)) from exc
            if self.sigma(e) != self.sigma(e ^ 1):
                raise IncompatibleQuadruple("sigma differs across an edge")
            if M.lifetime != self.sigma(e):
                raise IncompatibleQuadruple("Motzkin lifetime != sigma")
            le = self.node_labels[vo[e ^ 1]] - self.node_labels[vo[e]]
            if M.endpoint != le:
                raise IncompatibleQuadruple("Motzkin endpoint != label jump")
            rev = self.motzkin[e ^ 1]
            if rev.values != M.reversed_shifted().values:
                raise IncompatibleQuadruple("Motzkin reversal relation violated")
        root_block = 2 * self.m(sm.root) + self.sigma(sm.root)
        if not 0 <= self.u < root_block:
            raise IncompatibleQuadruple("u outside the root block")

    # -- JSON ------------------------------------------------------------------

    def to_dict(self) -> dict:
        sm = self.scheme.map
        order = list(range(sm.half_edge_count))
        cps = {e: contour_pair(self.forests[e]) for e in order}
        return {
            "scheme_word": self.scheme.gluing_word(),
            "scheme_root": sm.root,
            "m": [self.m(e) for e in order],
            "sigma": [self.sigma(e) for e in order],
            "motzkin": [list(self.motzkin[e].values) for e in order],
            "node_labels": list(self.node_labels),
            "u": self.u,
            "forests": [
                {"C": list(cps[e].C), "L": list(cps[e].L)} for e in order
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Decomposition":
        from .gtree import from_gluing_word

        smap = from_gluing_word(d["scheme_word"]).map
        # the gluing word was read off starting at the scheme root, so the
        # rebuilt map's root is already the right half-edge
        scheme = Scheme(smap)
        forests = {}
        motzkin = {}
        for e, fd in enumerate(d["forests"]):
            forests[e] = decode_contour(ContourPair(fd["C"], fd["L"]))
            motzkin[e] = MotzkinPath(d["motzkin"][e])
        dec = cls(scheme, forests, motzkin, tuple(d["node_labels"]), d["u"])
        dec.validate()
        return dec


# -- decomposition ---------------------------------------------------------------


def _core(m: CombinatorialMap):
    """Strip degree-1 vertices repeatedly; return (alive_vertex, alive_edge)."""
    rot = m.vertices()
    vo = m.vertex_of()
    deg = [len(c) for c in rot]
    alive_v = [True] * m.vertex_count()
    alive_e = [True] * m.edge_count
    from collections import deque

    dq = deque(v for v in range(m.vertex_count()) if deg[v] == 1)
    while dq:
        v = dq.popleft()
        if not alive_v[v] or deg[v] != 1:
            continue
        h = next(x for x in rot[v] if alive_e[x // 2])
        alive_v[v] = False
        alive_e[h // 2] = False
        deg[v] = 0
        w = vo[h ^ 1]
        deg[w] -= 1
        if deg[w] == 1:
            dq.append(w)
        elif deg[w] == 0:
            alive_v[w] = False
    return alive_v, alive_e, deg


def _decompose_engine(t: GTree, labels):
    m = t.map
    if t.genus() == 0:
        raise GenusZero("genus-0 trees have no scheme")
    alive_v, alive_e, coredeg = _core(m)
    vo = m.vertex_of()
    rot = m.vertices()
    is_node = [alive_v[v] and coredeg[v] >= 3 for v in range(m.vertex_count())]

    # directed chains from node to node through degree-2 core vertices
    chain_start: dict[int, int] = {}  # first half-edge -> chain index
    chains: list[list[int]] = []
    for v in range(m.vertex_count()):
        if not is_node[v]:
            continue
        for h in rot[v]:
            if not alive_e[h // 2] or h in chain_start:
                continue
            lst = [h]
            cur = h
            while True:
                w = vo[cur ^ 1]
                if is_node[w]:
                    break
                ends = [x for x in rot[w] if alive_e[x // 2]]
                assert len(ends) == 2, "chain vertex must have core degree 2"
                cur = ends[0] if ends[0] != (cur ^ 1) else ends[1]
                lst.append(cur)
            chain_start[h] = len(chains)
            chains.append(lst)
    if not chains:
        raise GenusZero("no scheme structure found")

    reverse_of = [chain_start[c[-1] ^ 1] for c in chains]

    # walk the face from the root; locate chain steps and cut into blocks
    order = t.facial_order()
    two_n = len(order)
    pos_in_chain = {}
    for ci, c in enumerate(chains):
        for k, h in enumerate(c):
            pos_in_chain[h] = (ci, k + 1)
    cuts = []  # walk positions just after a chain's last step
    for i, h in enumerate(order):
        if h in pos_in_chain:
            ci, k = pos_in_chain[h]
            if k == len(chains[ci]):
                cuts.append((i + 1) % two_n)
    assert len(cuts) == len(chains)
    starts = sorted(cuts)
    # the block containing walk position 0 starts at 0 if 0 is a cut, else at
    # the largest cut (wrapping through position 0)
    first_start = 0 if starts[0] == 0 else starts[-1]
    idx0 = starts.index(first_start)
    ordered_starts = starts[idx0:] + starts[:idx0]
    blocks = []  # (start, length) in walk positions, in cyclic walk order
    for j, s in enumerate(ordered_starts):
        nxt = ordered_starts[(j + 1) % len(ordered_starts)]
        blocks.append((s, (nxt - s) % two_n or two_n))
    u = (0 - blocks[0][0]) % two_n

    # identify each block's chain and build the scheme from the block word
    block_chain = []
    for s, ln in blocks:
        cs = [pos_in_chain[order[(s + j) % two_n]] for j in range(ln) if order[(s + j) % two_n] in pos_in_chain]
        ci = cs[0][0]
        assert [x for x in cs] == [(ci, k) for k in range(1, len(chains[ci]) + 1)], "block must hold one chain in order"
        block_chain.append(ci)
    K = len(blocks)
    pairing = [0] * K
    chain_block = {ci: b for b, ci in enumerate(block_chain)}
    for b, ci in enumerate(block_chain):
        pairing[b] = chain_block[reverse_of[ci]]
    smap, block_ids = build_from_face_word_with_ids(pairing, 0)
    scheme = Scheme(smap)

    lab = labels if labels is not None else [0] * m.vertex_count()

    # per-block forest contours, Motzkin paths, and node labels
    forests: dict[int, WellLabeledForest] = {}
    motzkin: dict[int, MotzkinPath] = {}
    chain_start: dict[int, int] = {}
    svo = smap.vertex_of()
    node_labels = [None] * smap.vertex_count()
    root_node_label = lab[vo[chains[block_chain[0]][0]]]
    for b, (s, ln) in enumerate(blocks):
        ci = block_chain[b]
        chain = chains[ci]
        sigma = len(chain)
        chain_verts = [vo[chain[0]]] + [vo[h ^ 1] for h in chain]
        M = MotzkinPath([lab[v] - lab[chain_verts[0]] for v in chain_verts])
        e = block_ids[b]
        motzkin[e] = M
        chain_start[e] = chain[0]
        node_labels[svo[e]] = lab[chain_verts[0]] - root_node_label
        node_labels[svo[e ^ 1]] = lab[chain_verts[-1]] - root_node_label
        C = [sigma]
        L = [0]
        a = 1
        seen_edge = set()
        base = lab[chain_verts[0]]
        for j in range(ln):
            h = order[(s + j) % two_n]
            if h in pos_in_chain:
                a += 1
                base = lab[chain_verts[a - 1]]
                C.append(C[-1] - 1)
                L.append(0)
            else:
                eid = h // 2
                if eid in seen_edge:
                    C.append(C[-1] - 1)
                else:
                    seen_edge.add(eid)
                    C.append(C[-1] + 1)
                L.append(lab[vo[h ^ 1]] - base)
        forests[e] = decode_contour(ContourPair(C, L))
    assert all(x is not None for x in node_labels)
    dec = Decomposition(scheme, forests, motzkin, tuple(node_labels), u, chain_start)
    dec.validate()
    return dec


def decompose_labeled(t: WellLabeledGTree) -> Decomposition:
    return _decompose_engine(t.tree, list(t.labels))


def decompose(t: GTree):
    """Prop-3 decomposition: (scheme, unlabeled forests per half-edge, u)."""
    d = _decompose_engine(t, None)
    return d.scheme, {e: wf.forest for e, wf in d.forests.items()}, d.u


# -- recomposition ---------------------------------------------------------------


def _forest_step_structure(f: Forest):
    """Per facial-walk step: ('floor', k) for the k-th floor step (1-based) or
    ('tree', partner_step_index)."""
    seq = f.facial_sequence_ids()
    par = f.parents()
    first_visit: dict[int, int] = {}
    steps = []
    floor_k = 0
    for j in range(len(seq) - 1):
        a, b = seq[j], seq[j + 1]
        if par[b] == a:  # down into child = first traversal
            first_visit[b] = j
            steps.append(None)
        elif par[a] == b:  # back to parent
            steps.append(("tree", first_visit[a]))
            steps[first_visit[a]] = ("tree", j)
        else:
            floor_k += 1
            steps.append(("floor", floor_k))
    return steps, seq


def recompose_labeled(d: Decomposition) -> WellLabeledGTree:
    d.validate()
    sm = d.scheme.map
    svo = sm.vertex_of()
    sorder = GTree(sm).facial_order()  # e_1 = scheme root, ..., e_K
    block_of = {e: b for b, e in enumerate(sorder)}
    lengths = [2 * d.m(e) + d.sigma(e) for e in sorder]
    offset = [0] * len(sorder)
    for b in range(1, len(sorder)):
        offset[b] = offset[b - 1] + lengths[b - 1]
    two_n = offset[-1] + lengths[-1]

    structures = {e: _forest_step_structure(d.forests[e].forest) for e in sorder}
    floor_pos = {
        e: {st[1]: j for j, st in enumerate(steps) if st[0] == "floor"}
        for e, (steps, _) in structures.items()
    }

    pairing = [0] * two_n
    lab_seq = [0] * two_n  # label of the walk origin at each position
    for b, e in enumerate(sorder):
        wf = d.forests[e]
        M = d.motzkin[e]
        steps, seq = structures[e]
        a_of = wf.forest.tree_index()
        le_minus = d.node_labels[svo[e]]
        eb = block_of[e ^ 1]
        sig = d.sigma(e)
        for j, st in enumerate(steps):
            pos = offset[b] + j
            node = seq[j]
            lab_seq[pos] = le_minus + M.values[a_of[node] - 1] + wf.labels[node]
            if st[0] == "tree":
                pairing[pos] = offset[b] + st[1]
            else:
                # k-th floor step of e pairs with the (sigma+1-k)-th of e^1
                pairing[pos] = offset[eb] + floor_pos[e ^ 1][sig + 1 - st[1]]
    gmap, ids = build_from_face_word_with_ids(pairing, d.u)
    gv = gmap.vertex_of()
    labels = [None] * gmap.vertex_count()
    for pos in range(two_n):
        v = gv[ids[pos]]
        if labels[v] is None:
            labels[v] = lab_seq[pos]
        else:
            assert labels[v] == lab_seq[pos], "label mismatch at glued vertex"
    shift = labels[gv[gmap.root]]
    labels = [x - shift for x in labels]
    out = WellLabeledGTree(GTree(gmap), labels)
    out.validate()
    assert out.genus() == d.scheme.genus()
    return out


def recompose(scheme: Scheme, forests: dict[int, Forest], u: int) -> GTree:
    """Prop-3 recomposition from unlabeled data."""
    sm = scheme.map
    wl = {
        e: WellLabeledForest(f, [0] * f.size) for e, f in forests.items()
    }
    mz = {e: MotzkinPath([0] * (forests[e].tree_count + 1)) for e in forests}
    d = Decomposition(scheme, wl, mz, tuple([0] * sm.vertex_count()), u)
    return recompose_labeled(d).tree


def label_contour(d: Decomposition, e: int) -> list[int]:
    """Block label sequence Lab(t) = L(t) + M(sigma - running_min(C)(t))."""
    cp = contour_pair(d.forests[e])
    M = d.motzkin[e].values
    sig = d.sigma(e)
    out = []
    run = cp.C[0]
    for c, l in zip(cp.C, cp.L):
        run = min(run, c)
        out.append(l + M[sig - run])
    return out


# -- scheme enumeration ------------------------------------------------------------

_SCHEME_CACHE: dict[int, list[Scheme]] = {}


def _planted_shapes(k: int):
    """Plane subtrees with k edges below the root, root child count in {0, 2}."""
    if k == 0:
        return [()]
    out = []
    if k >= 2:
        for left in range(0, k - 1):
            for lt in _planted_shapes(left):
                for rt in _planted_shapes(k - 2 - left):
                    out.append((lt, rt))
    return out


def _shape_to_word(children, fresh):
    """Gluing word of a rooted plane tree given as nested child tuples."""
    word = []
    for sub in children:
        s = fresh[0]
        fresh[0] += 1
        word.append(s)
        word.extend(_shape_to_word(sub, fresh))
        word.append(s)
    return word


def _cubic_leaf_trees(edge_count: int) -> list[CombinatorialMap]:
    """Rooted plane trees with every vertex of degree 1 or 3."""
    from .gtree import from_gluing_word

    shapes = []
    # root vertex of degree 1: a single planted subtree
    for sub in _planted_shapes(edge_count - 1):
        shapes.append(((sub,),))
    # root vertex of degree 3: three planted subtrees
    rem = edge_count - 3
    if rem >= 0:
        for a in range(0, rem + 1):
            for b in range(0, rem - a + 1):
                c = rem - a - b
                for ta in _planted_shapes(a):
                    for tb in _planted_shapes(b):
                        for tc in _planted_shapes(c):
                            shapes.append(((ta, tb, tc),))
    out = []
    for (children,) in shapes:
        word = _shape_to_word(children, [0])
        out.append(from_gluing_word(word).map)
    return out


def _glue_leaf_triple(m: CombinatorialMap, hs: tuple[int, int, int]):
    """Merge the three degree-1 vertices carrying the given half-edges;
    returns the unique one-face result."""
    h1, h2, h3 = hs
    g0 = m.genus()
    results = []
    for arcs in (([h1], [h2], [h3]), ([h1], [h3], [h2])):
        cand = merge_three_vertices(m, arcs)
        if len(cand.faces().faces) == 1:
            assert cand.genus() == g0 + 1
            results.append(cand)
    assert len(results) == 1, "exactly one interleaving must give one face"
    return results[0]


def _partitions_into_triples(items: list[int]):
    if not items:
        yield []
        return
    first = items[0]
    for pair in combinations(items[1:], 2):
        triple = (first,) + pair
        rest = [x for x in items if x not in triple]
        for tail in _partitions_into_triples(rest):
            yield [triple] + tail


def _dominant_schemes(g: int) -> list[CombinatorialMap]:
    found: dict[tuple, CombinatorialMap] = {}
    arising: dict[tuple, int] = {}
    from itertools import permutations
    from math import factorial

    for tree in _cubic_leaf_trees(6 * g - 3):
        rot = tree.vertices()
        # half-edge of each leaf: stable across the vertex merges below
        leaf_hs = [cyc[0] for cyc in rot if len(cyc) == 1]
        assert len(leaf_hs) == 3 * g
        for partition in _partitions_into_triples(leaf_hs):
            # gluing order matters: each order is a distinct opening sequence
            for triples in permutations(partition):
                cur = tree
                for tri in triples:
                    cur = _glue_leaf_triple(cur, tri)
                key = cur.canonical_key()
                found.setdefault(key, cur.canonical()[0])
                arising[key] = arising.get(key, 0) + 1
    expected = 2**g * factorial(g)
    assert all(c == expected for c in arising.values()), (
        "each dominant scheme must arise 2^g g! times"
    )
    return list(found.values())


def _all_rootings(m: CombinatorialMap) -> list[CombinatorialMap]:
    out = {}
    for h in range(m.half_edge_count):
        c = CombinatorialMap(m.next_at_vertex, h).canonical()[0]
        out[c.canonical_key()] = c
    return list(out.values())


def _unrooted_key(m: CombinatorialMap) -> tuple:
    return min(
        CombinatorialMap(m.next_at_vertex, h).canonical_key()
        for h in range(m.half_edge_count)
    )


def enumerate_schemes(g: int) -> list[Scheme]:
    """All rooted schemes of genus g (g in {1,2,3}), dominant ones included.

    Dominant schemes are produced by gluing leaf triples onto plane trees
    with degrees in {1,3}; the rest follow by closing under single-edge
    contractions, which preserve genus, the one-face property, and the
    minimum-degree bound.
    """
    if not 1 <= g <= 3:
        raise OutOfRange("scheme enumeration supports genus 1..3")
    if g in _SCHEME_CACHE:
        return _SCHEME_CACHE[g]
    from .maps import contract_edge

    unrooted: dict[tuple, CombinatorialMap] = {}
    frontier = []
    for m in _dominant_schemes(g):
        k = _unrooted_key(m)
        if k not in unrooted:
            unrooted[k] = m
            frontier.append(m)
    while frontier:
        m = frontier.pop()
        vo = m.vertex_of()
        for h in range(0, m.half_edge_count, 2):
            if vo[h] == vo[h ^ 1]:
                continue
            mm = m if m.root not in (h, h ^ 1) else CombinatorialMap(
                m.next_at_vertex, next(x for x in range(m.half_edge_count) if x not in (h, h ^ 1))
            )
            c = contract_edge(mm, h)
            if min(len(cyc) for cyc in c.vertices()) < 3:
                continue
            assert c.genus() == g and len(c.faces().faces) == 1
            k = _unrooted_key(c)
            if k not in unrooted:
                unrooted[k] = c
                frontier.append(c)
    rooted: dict[tuple, CombinatorialMap] = {}
    for m in unrooted.values():
        for r in _all_rootings(m):
            rooted[r.canonical_key()] = r
    schemes = [Scheme(m) for _, m in sorted(rooted.items())]
    _SCHEME_CACHE[g] = schemes
    return schemes


def scheme_count_weight(scheme: Scheme, n: int) -> int:
    """Number of g-trees with n edges having this scheme (no labels):
    sum over S of C(S, E) * C(2n, n-S) with E = scheme edge count."""
    E = scheme.edge_count
    return sum(comb(S, E) * comb(2 * n, n - S) for S in range(E, n + 1))
