"""Half-edge combinatorial maps on orientable surfaces.

A map is stored as a rotation system on half-edges 0..2E-1.  The pairing
of a half-edge with its reverse is the fixed convention ``h ^ 1`` (ids 2k
and 2k+1 form one edge), so a map is determined by the permutation
``next_at_vertex`` together with a root half-edge.  ``next_at_vertex[h]``
is the half-edge following ``h`` in the rotation around the origin vertex
of ``h``.

The face traversal convention, fixed once here and inherited by every
module, is

    face_next(h) = next_at_vertex[opposite(h)]

so walking ``h, face_next(h), ...`` visits the half-edges along one face
boundary.  Genus comes from Euler's relation V - E + F = 2 - 2g.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import Disconnected, NotInvolution, NotPermutation


def opposite(h: int) -> int:
    """Reverse of half-edge ``h`` under the canonical 2k<->2k+1 pairing."""
    return h ^ 1


@dataclass(frozen=True)
class CombinatorialMap:
    """Rotation system on half-edges with canonical opposite pairing.

    Immutable after construction; all derived structure (vertices, faces,
    genus) is computed on demand and cached.
    """

    next_at_vertex: tuple[int, ...]
    root: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __init__(self, next_at_vertex: Sequence[int], root: int = 0):
        object.__setattr__(self, "next_at_vertex", tuple(next_at_vertex))
        object.__setattr__(self, "root", int(root))
        object.__setattr__(self, "_cache", {})

    # -- basic size accessors -------------------------------------------------

    @property
    def half_edge_count(self) -> int:
        return len(self.next_at_vertex)

    @property
    def edge_count(self) -> int:
        return len(self.next_at_vertex) // 2

    def opposite(self, h: int) -> int:
        return h ^ 1

    def next(self, h: int) -> int:
        return self.next_at_vertex[h]

    def face_next(self, h: int) -> int:
        return self.next_at_vertex[h ^ 1]

    # -- orbits ---------------------------------------------------------------

    def _orbits(self, perm: Sequence[int]) -> list[list[int]]:
        seen = [False] * len(perm)
        out = []
        for start in range(len(perm)):
            if seen[start]:
                continue
            cyc = []
            h = start
            while not seen[h]:
                seen[h] = True
                cyc.append(h)
                h = perm[h]
            out.append(cyc)
        return out

    def vertices(self) -> list[list[int]]:
        """Orbits of next_at_vertex; orbit i is the rotation of vertex i."""
        if "vertices" not in self._cache:
            self._cache["vertices"] = self._orbits(self.next_at_vertex)
        return self._cache["vertices"]

    def vertex_of(self) -> list[int]:
        """half-edge id -> vertex id of its origin."""
        if "vertex_of" not in self._cache:
            vo = [0] * self.half_edge_count
            for i, cyc in enumerate(self.vertices()):
                for h in cyc:
                    vo[h] = i
            self._cache["vertex_of"] = vo
        return self._cache["vertex_of"]

    def origin(self, h: int) -> int:
        return self.vertex_of()[h]

    def end(self, h: int) -> int:
        return self.vertex_of()[h ^ 1]

    def vertex_count(self) -> int:
        return len(self.vertices())

    def degree_of_vertex(self, v: int) -> int:
        return len(self.vertices()[v])

    # -- validation -----------------------------------------------------------

    def validate(self) -> None:
        """Check structural invariants; raise the first violation."""
        n = self.half_edge_count
        if n == 0 or n % 2 != 0:
            raise NotInvolution("half-edge count must be even and positive")
        # canonical pairing h <-> h^1 is fixed-point-free by construction;
        # what can fail is the rotation and connectivity
        nv = self.next_at_vertex
        if sorted(nv) != list(range(n)):
            raise NotPermutation("next_at_vertex is not a permutation")
        if not (0 <= self.root < n):
            raise NotPermutation("root out of range")
        # connectivity under the group generated by opposite and next
        seen = [False] * n
        stack = [self.root]
        seen[self.root] = True
        count = 1
        while stack:
            h = stack.pop()
            for k in (nv[h], h ^ 1):
                if not seen[k]:
                    seen[k] = True
                    count += 1
                    stack.append(k)
        if count != n:
            raise Disconnected("map is not connected")

    # -- faces and genus --------------------------------------------------------

    def genus(self) -> int:
        v = self.vertex_count()
        e = self.edge_count
        f = len(self.faces().faces)
        chi = v - e + f
        assert chi % 2 == 0, "Euler characteristic must be even"
        return (2 - chi) // 2

    def faces(self) -> "FaceDecomposition":
        if "faces" not in self._cache:
            perm = [self.next_at_vertex[h ^ 1] for h in range(self.half_edge_count)]
            cycles = self._orbits(perm)
            face_of = [0] * self.half_edge_count
            for i, cyc in enumerate(cycles):
                for h in cyc:
                    face_of[h] = i
            self._cache["faces"] = FaceDecomposition(cycles, face_of)
        return self._cache["faces"]

    def degree_of_face(self, i: int) -> int:
        return len(self.faces().faces[i])

    def is_bipartite_quadrangulation(self) -> bool:
        """True iff every face has degree 4 and vertices are 2-colorable."""
        fd = self.faces()
        if any(len(c) != 4 for c in fd.faces):
            return False
        color = [-1] * self.vertex_count()
        vo = self.vertex_of()
        color[vo[self.root]] = 0
        stack = [self.root]
        while stack:
            h = stack.pop()
            u, w = vo[h], vo[h ^ 1]
            if color[w] == -1:
                color[w] = 1 - color[u]
                for k in self.vertices()[w]:
                    stack.append(k)
            elif color[w] == color[u]:
                return False
        return True

    def bipartition(self) -> list[int]:
        """Vertex 2-coloring (0/1), root-origin colored 0."""
        color = [-1] * self.vertex_count()
        vo = self.vertex_of()
        color[vo[self.root]] = 0
        stack = [self.root]
        while stack:
            h = stack.pop()
            u, w = vo[h], vo[h ^ 1]
            if color[w] == -1:
                color[w] = 1 - color[u]
                stack.extend(self.vertices()[w])
        return color

    # -- canonical form ---------------------------------------------------------

    def canonical(self) -> tuple["CombinatorialMap", list[int]]:
        """Relabel half-edges canonically by BFS from the root.

        Returns (relabeled map, mapping old id -> new id).  Two rooted maps
        are isomorphic iff their canonical forms are equal.  The relabeling
        respects the 2k<->2k+1 pairing.
        """
        n = self.half_edge_count
        new_id = [-1] * n
        nv = self.next_at_vertex
        new_id[self.root] = 0
        new_id[self.root ^ 1] = 1
        nxt = 2
        queue = [self.root, self.root ^ 1]
        qi = 0
        while qi < len(queue):
            h = queue[qi]
            qi += 1
            for k in (nv[h], h ^ 1):
                if new_id[k] == -1:
                    new_id[k] = nxt
                    new_id[k ^ 1] = nxt + 1
                    nxt += 2
                    queue.append(k)
                    queue.append(k ^ 1)
        new_next = [0] * n
        for h in range(n):
            new_next[new_id[h]] = new_id[nv[h]]
        return CombinatorialMap(new_next, 0), new_id

    def canonical_key(self) -> tuple:
        cm, _ = self.canonical()
        return (cm.next_at_vertex, cm.root)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CombinatorialMap):
            return NotImplemented
        return (
            self.next_at_vertex == other.next_at_vertex and self.root == other.root
        )

    def __hash__(self) -> int:
        return hash((self.next_at_vertex, self.root))

    # -- serialization ------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "half_edges": self.half_edge_count,
            "next": list(self.next_at_vertex),
            "root": self.root,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "CombinatorialMap":
        m = cls(d["next"], d["root"])
        if m.half_edge_count != d["half_edges"]:
            raise NotPermutation("half_edges field inconsistent with next array")
        return m

    @classmethod
    def from_json(cls, s: str) -> "CombinatorialMap":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class FaceDecomposition:
    """Partition of half-edges into face cycles of face_next."""

    faces: list[list[int]]
    face_of: list[int]


# -- rotation surgery ----------------------------------------------------------
#
# The two local operations below are used by the scheme decomposition and the
# opening bijection.  They only rewrite rotations; half-edge ids are stable.


def rotation_cycles_replace(
    m: CombinatorialMap, groups: Iterable[Sequence[int]], root: int | None = None
) -> CombinatorialMap:
    """Rebuild a map from ``m`` with the rotations of some vertices replaced.

    ``groups`` lists the new rotation cycles; every half-edge of the affected
    vertices must appear in exactly one group.  Untouched vertices keep their
    rotation.
    """
    nv = list(m.next_at_vertex)
    for cyc in groups:
        for i, h in enumerate(cyc):
            nv[h] = cyc[(i + 1) % len(cyc)]
    return CombinatorialMap(nv, m.root if root is None else root)


def split_vertex_three(
    m: CombinatorialMap, sectors: Sequence[Sequence[int]]
) -> CombinatorialMap:
    """Split one vertex into three, one new vertex per rotation sector."""
    assert len(sectors) == 3
    return rotation_cycles_replace(m, sectors)


def merge_three_vertices(
    m: CombinatorialMap, rotations: Sequence[Sequence[int]]
) -> CombinatorialMap:
    """Merge three vertices into one; ``rotations`` are the three aligned
    rotation arcs, concatenated in the given cyclic order."""
    merged: list[int] = []
    for arc in rotations:
        merged.extend(arc)
    return rotation_cycles_replace(m, [merged])


def contract_edge(m: CombinatorialMap, h: int) -> CombinatorialMap:
    """Contract the non-loop edge {h, h^1}; half-edges are renumbered densely.

    Preserves genus and face count.  The root must not lie on the contracted
    edge.
    """
    vo = m.vertex_of()
    hb = h ^ 1
    if vo[h] == vo[hb]:
        raise ValueError("cannot contract a loop")
    if m.root in (h, hb):
        raise ValueError("cannot contract the root edge")
    nv = list(m.next_at_vertex)
    pred = [0] * len(nv)
    for a in range(len(nv)):
        pred[nv[a]] = a
    ph, pb = pred[h], pred[hb]
    sh, sb = nv[h], nv[hb]
    alone_h = sh == h  # h is the only half-edge at its origin
    alone_b = sb == hb
    if alone_h and alone_b:
        raise ValueError("contracting the only edge of the map")
    if alone_h:
        nv[pb] = sb  # merged rotation = other vertex minus hb
    elif alone_b:
        nv[ph] = sh
    else:
        # splice the two rotations at the removed edge ends
        nv[ph] = sb
        nv[pb] = sh
    # renumber densely, dropping h and hb; 2k<->2k+1 pairing is restored
    # because ids are dropped in pairs
    keep = [x for x in range(len(nv)) if x not in (h, hb)]
    # rename both ids of every edge together so partners remain xor-1 pairs
    new_next = [0] * len(keep)
    pair_fix = {}
    nxt = 0
    for old in keep:
        if old in pair_fix:
            continue
        pair_fix[old] = nxt
        pair_fix[old ^ 1] = nxt + 1
        nxt += 2
    for old in keep:
        new_next[pair_fix[old]] = pair_fix[nv[old]]
    return CombinatorialMap(new_next, pair_fix[m.root])


def build_from_face_word_with_ids(
    pairing: Sequence[int], root_pos: int = 0
) -> tuple[CombinatorialMap, list[int]]:
    """Construct the map whose single-face traversal is the given cyclic word.

    ``pairing[i]`` is the position paired with position ``i`` (a fixed-point
    free involution on 0..L-1).  Position i of the face walk becomes one
    half-edge; paired positions are reverses of each other.  The half-edge at
    ``root_pos`` becomes the root, and ids are assigned so that the edge first
    traversed (walking from the root) at the k-th distinct position gets ids
    (2k, 2k+1).  Returns the map and the position -> half-edge id table.

    This realizes the polygon-gluing picture: a 2n-gon with edges pairwise
    identified (orientation-reversing) so the polygon interior is the unique
    face.
    """
    L = len(pairing)
    ids = [-1] * L
    nxt_edge = 0
    for off in range(L):
        i = (root_pos + off) % L
        if ids[i] == -1:
            ids[i] = 2 * nxt_edge
            ids[pairing[i]] = 2 * nxt_edge + 1
            nxt_edge += 1
    # face_next must map the half-edge at position i to position i+1:
    # face_next(x) = next[x ^ 1], so next[ids[pairing[i]]] = ids[(i+1) % L]
    nv = [0] * L
    for i in range(L):
        nv[ids[pairing[i]]] = ids[(i + 1) % L]
    return CombinatorialMap(nv, ids[root_pos]), ids


def build_from_face_word(pairing: Sequence[int], root_pos: int = 0) -> CombinatorialMap:
    return build_from_face_word_with_ids(pairing, root_pos)[0]
