"""One-face maps (g-trees) and well-labeled g-trees.

A g-tree is a map of genus g with a single face; plane trees are the g=0
case.  Walking the unique face boundary from the root visits every
half-edge once, which gives the facial order e_1..e_2n and the facial
sequence tr(0..2n) of vertices.  A well-labeling puts an integer on each
vertex with label 0 at the root origin and jumps of at most 1 across
every edge.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BadWord, EdgeJumpTooLarge, NotOneFace, RootLabelNonzero
from .maps import CombinatorialMap, build_from_face_word


@dataclass(frozen=True)
class GTree:
    """A one-face map; ``n`` edges, facial walk of length 2n."""

    map: CombinatorialMap

    def __post_init__(self):
        if len(self.map.faces().faces) != 1:
            raise NotOneFace("g-tree must have exactly one face")

    @property
    def n(self) -> int:
        return self.map.edge_count

    def genus(self) -> int:
        return self.map.genus()

    def facial_order(self) -> list[int]:
        """Half-edges e_1..e_2n along the unique face, starting at the root."""
        m = self.map
        out = [m.root]
        h = m.face_next(m.root)
        while h != m.root:
            out.append(h)
            h = m.face_next(h)
        return out

    def facial_sequence(self) -> list[int]:
        """Vertices tr(0)..tr(2n); tr(i) is the endpoint of e_i."""
        m = self.map
        vo = m.vertex_of()
        order = self.facial_order()
        seq = [vo[order[0]]]
        for h in order:
            seq.append(vo[h ^ 1])
        return seq

    def gluing_word(self) -> list[int]:
        """Edge word along the face: symbol k at the two positions where
        edge k is traversed, edges numbered by first traversal."""
        order = self.facial_order()
        sym: dict[int, int] = {}
        word = []
        for h in order:
            e = h // 2
            if e not in sym:
                sym[e] = len(sym)
            word.append(sym[e])
        return word


def from_gluing_word(word) -> GTree:
    """Build the g-tree from a polygon gluing word.

    The word lists 2n symbols, each appearing exactly twice; the 2n-gon is
    read clockwise and paired sides are identified with reversal.  The root
    is the first polygon side.
    """
    word = list(word)
    pos: dict[object, list[int]] = {}
    for i, s in enumerate(word):
        pos.setdefault(s, []).append(i)
    pairing = [0] * len(word)
    for s, ps in pos.items():
        if len(ps) != 2:
            raise BadWord(f"symbol {s!r} appears {len(ps)} times, need exactly 2")
        pairing[ps[0]] = ps[1]
        pairing[ps[1]] = ps[0]
    return GTree(build_from_face_word(pairing, 0))


@dataclass(frozen=True)
class WellLabeledGTree:
    """A g-tree with integer vertex labels: 0 at the root origin and
    |difference| <= 1 across every edge."""

    tree: GTree
    labels: tuple[int, ...]

    def __init__(self, tree: GTree, labels):
        object.__setattr__(self, "tree", tree)
        object.__setattr__(self, "labels", tuple(labels))

    def validate(self) -> None:
        m = self.tree.map
        if len(self.labels) != m.vertex_count():
            raise EdgeJumpTooLarge("label array has wrong length")
        vo = m.vertex_of()
        if self.labels[vo[m.root]] != 0:
            raise RootLabelNonzero("root origin must carry label 0")
        for h in range(0, m.half_edge_count, 2):
            a, b = self.labels[vo[h]], self.labels[vo[h ^ 1]]
            if abs(a - b) > 1:
                raise EdgeJumpTooLarge(f"edge {h//2}: labels {a},{b}")

    @property
    def n(self) -> int:
        return self.tree.n

    def genus(self) -> int:
        return self.tree.genus()

    def shifted_labels(self) -> tuple[int, ...]:
        """Labels shifted so the minimum equals 1."""
        lo = min(self.labels)
        return tuple(l - lo + 1 for l in self.labels)

    def spatial_contour(self) -> list[int]:
        """Label sequence along the facial sequence, length 2n+1."""
        seq = self.tree.facial_sequence()
        return [self.labels[v] for v in seq]

    def canonical(self) -> "WellLabeledGTree":
        cm, new_id = self.tree.map.canonical()
        old_vo = self.tree.map.vertex_of()
        new_vo = cm.vertex_of()
        labels = [0] * cm.vertex_count()
        for h in range(cm.half_edge_count):
            labels[new_vo[new_id[h]]] = self.labels[old_vo[h]]
        return WellLabeledGTree(GTree(cm), labels)

    def canonical_key(self) -> tuple:
        c = self.canonical()
        return (c.tree.map.next_at_vertex, c.tree.map.root, c.labels)

    # -- text format: line 1 gluing word, line 2 labels ------------------------

    def to_text(self) -> str:
        word = self.tree.gluing_word()
        # labels in facial-sequence first-visit order
        seq = self.tree.facial_sequence()
        seen = []
        for v in seq:
            if v not in seen:
                seen.append(v)
        labs = [self.labels[v] for v in seen]
        return " ".join(map(str, word)) + "\n" + " ".join(map(str, labs)) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WellLabeledGTree":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        word = lines[0].split()
        tree = from_gluing_word(word)
        labs_first_visit = [int(x) for x in lines[1].split()]
        seq = tree.facial_sequence()
        seen = []
        for v in seq:
            if v not in seen:
                seen.append(v)
        labels = [0] * tree.map.vertex_count()
        for v, l in zip(seen, labs_first_visit):
            labels[v] = l
        return cls(tree, labels)


def validate_labels(t: WellLabeledGTree) -> None:
    t.validate()
