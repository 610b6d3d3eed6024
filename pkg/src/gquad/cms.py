"""The Chapuy-Marcus-Schaeffer bijection.

Maps a well-labeled g-tree with n edges plus a sign to a pointed bipartite
quadrangulation of the same genus with n faces, and back.  Forward: shift
labels so the minimum is 1, put an extra vertex v* (label 0) in the unique
face, and draw one arc from every corner i to its successor: the first
subsequent corner (cyclically, wrapping past the start) whose shifted
label is one less, or v* when the label is already 1.  The arcs alone are
the edges of the quadrangulation; shifted labels become graph distances
to v*.

The inverse recovers labels by BFS from the base vertex, selects one
diagonal in each quadrilateral face (max-label corner to the following
corner for simple faces, the two equal-label opposite corners for
confluent faces), and reads the tree rotation off the host rotation
system.  Conventions (sweep direction inside a corner, face-rule
direction) are fixed by the exhaustive round-trip tests.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass

from .errors import NotBipartiteQuadrangulation
from .gtree import GTree, WellLabeledGTree
from .maps import CombinatorialMap

INFINITY = -1  # successor sentinel: the arc goes to the base vertex


@dataclass(frozen=True)
class PointedQuadrangulation:
    """Bipartite quadrangulation with a distinguished vertex and the root
    orientation sign of the bijection."""

    map: CombinatorialMap
    base: int
    epsilon: int

    def validate(self) -> None:
        if self.epsilon not in (-1, 1):
            raise NotBipartiteQuadrangulation("epsilon must be -1 or +1")
        if not self.map.is_bipartite_quadrangulation():
            raise NotBipartiteQuadrangulation("not a bipartite quadrangulation")

    @property
    def n(self) -> int:
        return len(self.map.faces().faces)

    def genus(self) -> int:
        return self.map.genus()

    def canonical(self) -> "PointedQuadrangulation":
        cm, new_id = self.map.canonical()
        old_vo = self.map.vertex_of()
        new_vo = cm.vertex_of()
        base = None
        for h in range(cm.half_edge_count):
            if old_vo[h] == self.base:
                base = new_vo[new_id[h]]
                break
        assert base is not None, "base vertex must carry at least one half-edge"
        return PointedQuadrangulation(cm, base, self.epsilon)

    def canonical_key(self) -> tuple:
        c = self.canonical()
        return (c.map.next_at_vertex, c.map.root, c.base, c.epsilon)

    def to_dict(self) -> dict:
        d = self.map.to_dict()
        d["base"] = self.base
        d["epsilon"] = self.epsilon
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "PointedQuadrangulation":
        return cls(CombinatorialMap(d["next"], d["root"]), d["base"], d["epsilon"])

    @classmethod
    def from_json(cls, s: str) -> "PointedQuadrangulation":
        return cls.from_dict(json.loads(s))


def successors(shifted) -> list[int]:
    """Successor of every corner 0..2n-1.

    ``shifted`` holds the shifted labels along the facial sequence, entries
    0..2n (the first and last repeat the root vertex).  Corner i maps to the
    first k >= i with label(k) = label(i) - 1, wrapping to k >= 1 when no
    such k exists; INFINITY when label(i) = 1.
    """
    two_n = len(shifted) - 1
    by_label: dict[int, list[int]] = {}
    for k in range(1, two_n + 1):
        by_label.setdefault(shifted[k], []).append(k)
    out = []
    for i in range(two_n):
        target = shifted[i] - 1
        if target == 0:
            out.append(INFINITY)
            continue
        ks = by_label.get(target)
        if not ks:
            raise ValueError("labels must step down through every level")
        j = bisect_left(ks, i)
        out.append(ks[j] if j < len(ks) else ks[0])
    return out


def successor(i: int, shifted) -> int:
    """Single-corner successor (first-hit rule); INFINITY means the base."""
    return successors(shifted)[i]


def cms_forward(wt: WellLabeledGTree, eps: int) -> PointedQuadrangulation:
    """Pointed quadrangulation of (tree, labels, eps).

    Arc k (drawn from corner k) carries half-edge ids 2k at the source
    corner and 2k+1 at the target, so the output ids are in corner order.
    """
    assert eps in (-1, 1)
    tree = wt.tree
    m = tree.map
    two_n = 2 * tree.n
    vo = m.vertex_of()
    order = tree.facial_order()  # e_1 .. e_2n
    seq_v = [vo[order[0]]] + [vo[h ^ 1] for h in order]  # tr(0..2n)
    lo = min(wt.labels)
    shifted = [wt.labels[v] - lo + 1 for v in seq_v]
    suc = successors(shifted)

    incoming: dict[int, list[int]] = {}
    for i, s in enumerate(suc):
        incoming.setdefault(s if s == INFINITY else s % two_n, []).append(i)

    # chain of arc ends inside corner i, swept from the arrival side
    # opposite(e_i) toward the departure side e_{i+1}: nearer sources first,
    # the outgoing arc last
    chains: list[list[int]] = []
    for i in range(two_n):
        srcs = sorted(incoming.get(i, []), key=lambda j: (i - j) % two_n)
        chains.append([2 * j + 1 for j in srcs] + [2 * i])

    # corner i is the rotation gap following host half-edge opposite(e_i),
    # where e_i = order[i-1] (and e_0 means e_2n); the next gap of the same
    # vertex follows next(opposite(e_i))
    arrival = [order[i - 1] ^ 1 for i in range(two_n)]  # i=0 wraps to e_2n
    corner_after = {arrival[i]: i for i in range(two_n)}

    nxt = [0] * (2 * two_n)
    for i in range(two_n):
        ch = chains[i]
        for a, b in zip(ch, ch[1:]):
            nxt[a] = b
        j = corner_after[m.next_at_vertex[arrival[i]]]
        nxt[ch[-1]] = chains[j][0]

    # the base vertex collects the arcs from label-1 corners; its rotation
    # runs through the sources in decreasing facial order (the mirror of the
    # tree-side rotations, fixed by the exhaustive small-case calibration)
    vs = incoming.get(INFINITY, [])
    assert vs, "some corner carries shifted label 1"
    vs = vs[::-1]
    for a, b in zip(vs, vs[1:] + vs[:1]):
        nxt[2 * a + 1] = 2 * b + 1

    root = 0 if eps == -1 else 1  # arc 0 from tr(0), or toward it
    q = CombinatorialMap(nxt, root)
    base = q.vertex_of()[2 * vs[0] + 1]
    return PointedQuadrangulation(q, base, eps)


def cms_inverse(pq: PointedQuadrangulation) -> tuple[WellLabeledGTree, int]:
    """Recover (well-labeled g-tree, eps) from a pointed quadrangulation."""
    pq.validate()
    q = pq.map
    vo = q.vertex_of()
    dist = bfs_distances_list(q, pq.base)
    faces = q.faces().faces

    # one diagonal per face; chord_at[g] = chord half-edge sitting in the
    # rotation gap following host half-edge g
    chord_at: dict[int, int] = {}
    for k, cyc in enumerate(faces):
        labs = [dist[vo[h]] for h in cyc]
        lo = min(labs)
        his = [idx for idx, l in enumerate(labs) if l == lo + 2]
        if his:
            a = his[0]
            b = (a - 1) % 4  # simple face: max corner to the preceding corner
        else:
            a = next(idx for idx, l in enumerate(labs) if l == lo + 1)
            b = (a + 2) % 4  # confluent face: the two l+1 corners
        # the face corner at position idx is the gap after the reverse of
        # the face-predecessor half-edge
        chord_at[cyc[(a - 1) % 4] ^ 1] = 2 * k
        chord_at[cyc[(b - 1) % 4] ^ 1] = 2 * k + 1

    two_n = 2 * len(faces)
    nxt = [0] * two_n
    for cyc_v in q.vertices():
        ordered = [chord_at[h] for h in cyc_v if h in chord_at]
        for a, b in zip(ordered, ordered[1:] + ordered[:1]):
            nxt[a] = b

    # root and sign: the root arc end with the larger distance sits at tr(0)
    r = q.root
    du, dw = dist[vo[r]], dist[vo[r ^ 1]]
    assert du != dw
    r_end_at_tr0 = r if du > dw else r ^ 1
    eps = -1 if du > dw else 1
    tree_root = chord_at[r_end_at_tr0]  # the corner right after that arc end

    tmap = CombinatorialMap(nxt, tree_root)
    tree = GTree(tmap)
    tvo = tmap.vertex_of()
    labels = [0] * tmap.vertex_count()
    for g, c in chord_at.items():
        labels[tvo[c]] = dist[vo[g]]
    root_lab = labels[tvo[tree_root]]
    labels = [l - root_lab for l in labels]
    wt = WellLabeledGTree(tree, labels)
    wt.validate()
    return wt, eps


def bfs_distances_list(q: CombinatorialMap, source: int) -> list[int]:
    vo = q.vertex_of()
    dist = [-1] * q.vertex_count()
    dist[source] = 0
    dq = deque([source])
    rot = q.vertices()
    while dq:
        v = dq.popleft()
        for h in rot[v]:
            w = vo[h ^ 1]
            if dist[w] == -1:
                dist[w] = dist[v] + 1
                dq.append(w)
    return dist


def distance_label_identity(pq: PointedQuadrangulation, wt: WellLabeledGTree) -> bool:
    """Exact check that shifted tree labels equal distances to the base.

    ``pq`` must be the forward image of ``wt`` (arc ids in corner order).
    """
    q = pq.map
    dist = bfs_distances_list(q, pq.base)
    if dist[pq.base] != 0:
        return False
    tree = wt.tree
    m = tree.map
    vo = m.vertex_of()
    order = tree.facial_order()
    seq_v = [vo[order[0]]] + [vo[h ^ 1] for h in order]
    lo = min(wt.labels)
    fvo = q.vertex_of()
    for i in range(2 * tree.n):
        if dist[fvo[2 * i]] != wt.labels[seq_v[i]] - lo + 1:
            return False
    return True


def check_distance_bound(
    pq: PointedQuadrangulation, wt: WellLabeledGTree, i: int, j: int
) -> bool:
    """Distance bound from labels over the two cyclic corner intervals:
    d(q(i), q(j)) <= l(i) + l(j) - 2 max(min over [i->j], min over [j->i]) + 2.

    ``pq`` must be the forward image of ``wt``.
    """
    q = pq.map
    fvo = q.vertex_of()
    tree = wt.tree
    two_n = 2 * tree.n
    vo = tree.map.vertex_of()
    order = tree.facial_order()
    seq_lab = [wt.labels[vo[order[0]]]] + [wt.labels[vo[h ^ 1]] for h in order]

    def interval_min(a: int, b: int) -> int:
        if a <= b:
            return min(seq_lab[a : b + 1])
        return min(min(seq_lab[a:]), min(seq_lab[: b + 1]))

    bound = (
        seq_lab[i] + seq_lab[j] - 2 * max(interval_min(i, j), interval_min(j, i)) + 2
    )
    dist = bfs_distances_list(q, fvo[2 * (i % two_n)])
    return dist[fvo[2 * (j % two_n)]] <= bound
