"""The opening bijection between dominant g-trees and trees with g triples.

A node of a dominant g-tree carries exactly three chain directions; it is
intertwined when their cyclic order around the vertex matches the cyclic
order of their visits along the face.  Slicing an intertwined node splits
its rotation at the three chain directions into three vertices and drops
the genus by one while keeping a single face.  Opening a g-tree slices g
times (recording each triple of new vertices); gluing merges the triples
back, one stage at a time, choosing the unique cyclic interleaving of the
three rotations that keeps the map one-faced.

The contour pair of the opened tree is also assembled directly from the
decomposition data by reordering per-half-edge blocks ("going up" forests
get their running minimum reflected; the two root-forest pieces split at
the root offset), which the tests check sample-for-sample against the
contour computed on the opened tree itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import (
    InvalidOpeningSequence,
    InvalidTriples,
    NonDominantScheme,
    NotIntertwined,
)
from .forest import ContourPair, contour_pair
from .gtree import GTree, WellLabeledGTree, from_gluing_word
from .maps import CombinatorialMap, merge_three_vertices, split_vertex_three
from .scheme import Decomposition, decompose_labeled


@dataclass(frozen=True)
class TreeWithTriples:
    """Plane tree with g pairwise-disjoint vertex triples whose spanning
    path union has inner degrees at most 3 and the marked vertices as
    leaves; labels optional (equal within each triple when present)."""

    tree: GTree
    triples: tuple[tuple[int, int, int], ...]
    labels: tuple[int, ...] | None = None

    def __init__(self, tree, triples, labels=None):
        object.__setattr__(self, "tree", tree)
        object.__setattr__(self, "triples", tuple(tuple(t) for t in triples))
        object.__setattr__(
            self, "labels", None if labels is None else tuple(labels)
        )

    @property
    def g(self) -> int:
        return len(self.triples)

    def validate(self) -> None:
        m = self.tree.map
        if self.tree.genus() != 0:
            raise InvalidTriples("the opened object must be a plane tree")
        marked = [v for tri in self.triples for v in tri]
        if len(set(marked)) != 3 * self.g:
            raise InvalidTriples("marked vertices must be pairwise distinct")
        steiner_deg = _steiner_degrees(m, set(marked))
        for v in marked:
            if steiner_deg[v] != 1:
                raise InvalidTriples("marked vertices must be leaves of the path union")
        if any(d > 3 for d in steiner_deg):
            raise InvalidTriples("path-union degree exceeds 3")
        if self.labels is not None:
            WellLabeledGTree(self.tree, self.labels).validate()
            for tri in self.triples:
                if len({self.labels[v] for v in tri}) != 1:
                    raise InvalidTriples("triple labels must agree")

    def to_json(self) -> str:
        return json.dumps(
            {
                "tree_word": self.tree.gluing_word(),
                "labels": None if self.labels is None else list(self.labels),
                "triples": [list(t) for t in self.triples],
            }
        )

    @classmethod
    def from_json(cls, s: str) -> "TreeWithTriples":
        d = json.loads(s)
        tree = from_gluing_word(d["tree_word"])
        return cls(tree, d["triples"], d["labels"])


def _steiner_prune(m: CombinatorialMap, marked: set[int]):
    """Prune unmarked degree-1 vertices repeatedly; what survives is the
    union of paths between marked vertices (plus any cycles, on positive
    genus stages).  Returns (degree within the remainder, edge alive)."""
    vo = m.vertex_of()
    V = m.vertex_count()
    deg = [m.degree_of_vertex(v) for v in range(V)]
    alive_e = [True] * m.edge_count
    rot = m.vertices()
    from collections import deque

    dq = deque(v for v in range(V) if deg[v] == 1 and v not in marked)
    while dq:
        v = dq.popleft()
        if deg[v] != 1 or v in marked:
            continue
        h = next(x for x in rot[v] if alive_e[x // 2])
        alive_e[h // 2] = False
        deg[v] = 0
        w = vo[h ^ 1]
        deg[w] -= 1
        if deg[w] == 1 and w not in marked:
            dq.append(w)
    return deg, alive_e


def _steiner_degrees(m: CombinatorialMap, marked: set[int]) -> list[int]:
    return _steiner_prune(m, marked)[0]


def _node_chain_directions(t: GTree, d: Decomposition | None = None):
    """For each node (scheme vertex image), its chain-direction half-edges
    in the g-tree, plus the facial position of each half-edge."""
    from .scheme import _core

    m = t.map
    alive_v, alive_e, coredeg = _core(m)
    vo = m.vertex_of()
    rot = m.vertices()
    nodes = {}
    for v in range(m.vertex_count()):
        if alive_v[v] and coredeg[v] >= 3:
            nodes[v] = [h for h in rot[v] if alive_e[h // 2]]
    pos = {h: i for i, h in enumerate(t.facial_order())}
    return nodes, pos


def intertwined_nodes(t: GTree) -> list[int]:
    """Nodes whose three chain directions have matching cyclic orders in
    the rotation and along the face; a dominant g-tree has exactly 2g."""
    nodes, pos = _node_chain_directions(t)
    if any(len(hs) != 3 for hs in nodes.values()):
        raise NonDominantScheme("intertwined nodes need a dominant scheme")
    out = []
    for v, hs in nodes.items():
        # hs is in stored-rotation cyclic order; the node is intertwined
        # when the facial visit order runs through the three directions in
        # the opposite cyclic sense (the stored rotation is the mirror of
        # the drawing the face walk turns around; calibration: a dominant
        # g-tree must show exactly 2g intertwined nodes, and slicing one
        # must keep a single face)
        a, b, c = (pos[h] for h in hs)
        if (a > b > c) or (b > c > a) or (c > a > b):
            out.append(v)
    return sorted(out)


def slice_node(t: GTree, v: int) -> GTree:
    """Slice the intertwined node v into three vertices, one per chain
    direction sector; genus drops by exactly one, the face stays unique."""
    nodes, pos = _node_chain_directions(t)
    if v not in nodes or len(nodes[v]) != 3:
        raise NotIntertwined(f"vertex {v} is not a 3-chain node")
    if v not in intertwined_nodes(t):
        raise NotIntertwined(f"node {v} is not intertwined")
    m = t.map
    rot = m.vertices()[v]
    hs = set(nodes[v])
    # split the rotation cycle at the three chain directions
    k0 = next(i for i, h in enumerate(rot) if h in hs)
    cyc = rot[k0:] + rot[:k0]
    sectors = []
    cur: list[int] = []
    for h in cyc:
        if h in hs and cur:
            sectors.append(cur)
            cur = [h]
        else:
            cur.append(h)
    sectors.append(cur)
    out = GTree(split_vertex_three(m, sectors))
    assert out.genus() == t.genus() - 1, "slicing must drop the genus by one"
    return out


def _slice_labeled(
    wt: WellLabeledGTree, v: int
) -> tuple[WellLabeledGTree, tuple[int, int, int]]:
    """Slice and transport labels; returns the new tree and one stable
    half-edge anchor per new vertex (vertex ids shift on later slices)."""
    t2 = slice_node(wt.tree, v)
    old = wt.tree.map
    new = t2.map
    old_vo = old.vertex_of()
    new_vo = new.vertex_of()
    labels = [0] * new.vertex_count()
    for h in range(new.half_edge_count):
        labels[new_vo[h]] = wt.labels[old_vo[h]]
    parts = sorted({new_vo[h] for h in range(new.half_edge_count) if old_vo[h] == v})
    assert len(parts) == 3
    anchors = tuple(new.vertices()[p][0] for p in parts)
    return WellLabeledGTree(t2, labels), anchors


def open_tree(wt: WellLabeledGTree, seq: list[int]) -> TreeWithTriples:
    """Open a dominant well-labeled g-tree along the opening sequence
    (v_1, ..., v_g): v_g is sliced first, v_1 last.

    Vertex ids are not stable across slices, so each entry of ``seq`` names
    a vertex of the tree produced by the previous stage.
    """
    g = wt.genus()
    if len(seq) != g:
        raise InvalidOpeningSequence("opening sequence length must equal the genus")
    cur = wt
    anchors_rev = []
    for v in reversed(seq):
        if v not in intertwined_nodes(cur.tree):
            raise InvalidOpeningSequence(f"vertex {v} not intertwined at its stage")
        cur, anchors = _slice_labeled(cur, v)
        anchors_rev.append(anchors)
    # resolve the stable half-edge anchors to final vertex ids
    fvo = cur.tree.map.vertex_of()
    triples = tuple(
        tuple(sorted(fvo[h] for h in anchors)) for anchors in reversed(anchors_rev)
    )
    out = TreeWithTriples(cur.tree, triples, cur.labels)
    out.validate()
    return out


def opening_sequences(wt: WellLabeledGTree) -> list[list[int]]:
    """All valid opening sequences (2^g g! of them), stage-wise exhaustive."""
    g = wt.genus()
    if g == 0:
        return [[]]
    out = []

    def rec(cur: WellLabeledGTree, chosen_rev: list[int]):
        if len(chosen_rev) == g:
            out.append(list(reversed(chosen_rev)))
            return
        for v in intertwined_nodes(cur.tree):
            nxt, _ = _slice_labeled(cur, v)
            rec(nxt, chosen_rev + [v])

    rec(wt, [])
    return out


def opening_sequence_by_index(wt: WellLabeledGTree, index: int) -> list[int]:
    """Deterministic opening sequence number ``index`` (0-based, mixed
    radix 2g, 2g-2, ..., 2 over intertwined nodes sorted by vertex id)."""
    g = wt.genus()
    seq_rev = []
    cur = wt
    for stage in range(g):
        nodes = intertwined_nodes(cur.tree)
        v = nodes[index % len(nodes)]
        index //= len(nodes)
        cur, _ = _slice_labeled(cur, v)
        seq_rev.append(v)
    return list(reversed(seq_rev))


def glue(tw: TreeWithTriples) -> tuple[WellLabeledGTree, list[int]]:
    """Inverse of :func:`open_tree`: merge the triples back, c_1 first.

    Each merge aligns the three rotations at their unique path-union
    half-edge and picks the cyclic interleaving that keeps one face.
    Returns the glued tree and the opening sequence it realizes (entries
    named in the stage-wise intermediate trees, v_1 first).
    """
    tw.validate()
    if tw.labels is None:
        cur = WellLabeledGTree(tw.tree, [0] * tw.tree.map.vertex_count())
    else:
        cur = WellLabeledGTree(tw.tree, tw.labels)
    # marked vertices tracked by a representative half-edge (ids are stable)
    rep = {}
    rot0 = tw.tree.map.vertices()
    for i, tri in enumerate(tw.triples):
        for v in tri:
            rep[(i, v)] = rot0[v][0]
    seq = []
    g = len(tw.triples)
    for i in range(g):
        tri = tw.triples[i]
        m = cur.tree.map
        vo = m.vertex_of()
        verts = [vo[rep[(i, v)]] for v in tri]
        if len(set(verts)) != 3:
            raise InvalidTriples("triple vertices collided before their stage")
        # marked vertices still awaiting their stage anchor the path union
        remaining = {
            vo[rep[(j, v)]] for j in range(i, g) for v in tw.triples[j]
        }
        _, alive_e = _steiner_prune(m, remaining)
        arcs = []
        for v in verts:
            h_anchor = _unique_steiner_halfedge(m, v, alive_e)
            cyc = m.vertices()[v]
            k0 = cyc.index(h_anchor)
            arcs.append(cyc[k0:] + cyc[:k0])
        g0 = cur.tree.genus()
        merged = None
        for order in ((0, 1, 2), (0, 2, 1)):
            cand = merge_three_vertices(m, [arcs[j] for j in order])
            if len(cand.faces().faces) == 1:
                if merged is not None:
                    raise InvalidTriples("ambiguous gluing interleaving")
                merged = cand
        if merged is None:
            raise InvalidTriples("no interleaving keeps the map one-faced")
        t2 = GTree(merged)
        assert t2.genus() == g0 + 1
        new_vo = merged.vertex_of()
        labels = [0] * merged.vertex_count()
        for h in range(merged.half_edge_count):
            labels[new_vo[h]] = cur.labels[vo[h]]
        cur = WellLabeledGTree(t2, labels)
        seq.append(new_vo[rep[(i, tri[0])]])
    # shift so the root origin carries label 0 again (merges may relabel)
    m = cur.tree.map
    vo = m.vertex_of()
    shift = cur.labels[vo[m.root]]
    if shift:
        cur = WellLabeledGTree(cur.tree, [x - shift for x in cur.labels])
    return cur, seq


def _unique_steiner_halfedge(m: CombinatorialMap, v: int, alive_e: list[bool]) -> int:
    """The single half-edge at the marked leaf v inside the path union."""
    best = None
    for h in m.vertices()[v]:
        if alive_e[h // 2]:
            if best is not None:
                raise InvalidTriples("marked vertex is not a path-union leaf")
            best = h
    if best is None:
        raise InvalidTriples("marked vertex disconnected from the path union")
    return best


def opened_contour_via_formulas(d: Decomposition, opening: list[int]) -> ContourPair:
    """Contour pair of the opened tree assembled from the decomposition.

    Blocks are visited in the facial order of the opened scheme; the
    earlier direction of every non-root edge goes up (contour reflected at
    its running minimum), the later one goes down, and the two passes of
    the root forest are split around the root offset.
    """
    scheme = d.scheme
    if not scheme.dominant:
        raise NonDominantScheme("the opened contour needs a dominant scheme")
    s_tree = GTree(scheme.map)
    s_lab = WellLabeledGTree(s_tree, [0] * scheme.map.vertex_count())
    cur = s_lab
    for v in reversed(opening):
        if v not in intertwined_nodes(cur.tree):
            raise InvalidOpeningSequence(f"scheme node {v} not intertwined at its stage")
        cur, _ = _slice_labeled(cur, v)
    opened_scheme = cur.tree  # a plane tree; half-edge ids match the scheme
    order = opened_scheme.facial_order()
    assert order[0] == scheme.map.root

    # per-half-edge pieces
    root = scheme.map.root
    u = d.u
    CCs = {}
    labs = {}
    for e in range(scheme.map.half_edge_count):
        cp = contour_pair(d.forests[e])
        sig = d.sigma(e)
        CCs[e] = [c - sig for c in cp.C]
        M = d.motzkin[e].values
        run = cp.C[0]
        lab = []
        for c, l in zip(cp.C, cp.L):
            run = min(run, c)
            lab.append(l + M[sig - run])
        labs[e] = lab

    first_pos = {}
    for i, e in enumerate(order):
        first_pos[e] = i

    def going_up(e: int) -> bool:
        return first_pos[e] < first_pos[e ^ 1]

    def reflect_up(vals):
        # concatenated tree contours with up steps between trees
        out = []
        run = 0
        for x in vals:
            run = min(run, x)
            out.append(x - 2 * run)
        return out

    CC_root = CCs[root]
    run_u = min(CC_root[: u + 1])
    x = next(i for i, c in enumerate(CC_root) if c == run_u)

    pieces_C: list[list[int]] = []
    pieces_L: list[list[int]] = []
    for i, e in enumerate(order):
        if e == root:
            # first pass: from u to the end, floor directed upward
            vals = CC_root[u:]
            base = vals[0]
            seg = []
            run = base
            for j, c in enumerate(vals):
                run = min(run, c)
                seg.append(c - 2 * run + base)
            pieces_C.append([v - seg[0] for v in seg])
            pieces_L.append([labs[root][u + j] - labs[root][u] for j in range(len(vals))])
        elif e == (root ^ 1):
            # downward up to y, upward afterwards
            CCr = CCs[e]
            sig = d.sigma(root)
            target = -sig - run_u
            y = next(i2 for i2, c in enumerate(CCr) if c == target)
            seg1 = CCr[: y + 1]
            seg2 = []
            run = CCr[y]
            for c in CCr[y:]:
                run = min(run, c)
                seg2.append(c - 2 * run + CCr[y])
            seg = seg1 + [CCr[y] + (v - seg2[0]) for v in seg2[1:]]
            pieces_C.append(seg)
            pieces_L.append(labs[e])
        elif going_up(e):
            pieces_C.append(reflect_up(CCs[e]))
            pieces_L.append(labs[e])
        else:
            pieces_C.append(list(CCs[e]))
            pieces_L.append(labs[e])
    # final piece: the root forest from 0 to x, then the climb from x to u
    seg1 = CC_root[: x + 1]
    seg2 = []
    for j in range(x, u + 1):
        inf_tail = min(CC_root[j : u + 1])
        seg2.append(CC_root[j] - 2 * inf_tail + run_u)
    last_C = seg1 + [CC_root[x] + (v - seg2[0]) for v in seg2[1:]]
    pieces_C.append(last_C)
    pieces_L.append(labs[root][: u + 1])

    # concatenate: every piece starts at 0 relative to its first sample
    CCC = [0]
    LLL = [0]
    for pc, pl in zip(pieces_C, pieces_L):
        basec, basel = CCC[-1] - pc[0], LLL[-1] - pl[0]
        CCC.extend(v + basec for v in pc[1:])
        LLL.extend(v + basel for v in pl[1:])
    return ContourPair(CCC, LLL)


def opened_contour_direct(tw: TreeWithTriples) -> ContourPair:
    """Contour pair of the opened tree computed from its facial walk."""
    t = tw.tree
    m = t.map
    vo = m.vertex_of()
    order = t.facial_order()
    seq_v = [vo[order[0]]] + [vo[h ^ 1] for h in order]
    depth = _depths_from_root(t)
    labels = tw.labels if tw.labels is not None else [0] * m.vertex_count()
    C = [depth[v] for v in seq_v]
    L = [labels[v] - labels[seq_v[0]] for v in seq_v]
    return ContourPair(C, L)


def _depths_from_root(t: GTree) -> list[int]:
    from collections import deque

    m = t.map
    vo = m.vertex_of()
    depth = [-1] * m.vertex_count()
    depth[vo[m.root]] = 0
    dq = deque([vo[m.root]])
    rot = m.vertices()
    while dq:
        v = dq.popleft()
        for h in rot[v]:
            w = vo[h ^ 1]
            if depth[w] == -1:
                depth[w] = depth[v] + 1
                dq.append(w)
    return depth


def tree_opening_from_scheme_opening(
    wt: WellLabeledGTree, d: Decomposition, scheme_seq: list[int]
) -> list[int]:
    """Translate a scheme-level opening sequence into the g-tree's.

    Entries of ``scheme_seq`` name vertices of the (stage-wise sliced)
    scheme; the returned entries name vertices of the stage-wise sliced
    g-tree.  The bridge is the chain-start map: half-edge ids stay fixed
    under slicing, so the node to slice in the tree is the current origin
    of the chain-start half-edge of any scheme half-edge at the scheme node.
    """
    assert d.chain_start is not None, "decompose must supply chain_start"
    g = len(scheme_seq)
    s_cur = WellLabeledGTree(GTree(d.scheme.map), [0] * d.scheme.map.vertex_count())
    t_cur = wt
    s_stack: list[WellLabeledGTree] = []
    anchors: list[int] = []
    for v_s in reversed(scheme_seq):
        svo = s_cur.tree.map.vertex_of()
        hs = [h for h in s_cur.tree.map.vertices()[v_s]]
        anchors.append(hs[0])
        s_stack.append(s_cur)
        s_cur, _ = _slice_labeled(s_cur, v_s)
    # anchors[k] belongs to the scheme node sliced at stage g-k; walk the
    # tree stages in the same order
    tree_seq_rev = []
    for h_s in anchors:
        tvo = t_cur.tree.map.vertex_of()
        node = tvo[d.chain_start[h_s]]
        tree_seq_rev.append(node)
        t_cur, _ = _slice_labeled(t_cur, node)
    return list(reversed(tree_seq_rev))
