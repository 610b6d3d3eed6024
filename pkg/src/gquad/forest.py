"""Forests, well-labeled forests, contour encodings, and Motzkin paths.

A forest with t trees is a finite set of integer-sequence addresses whose
floor is {1, ..., t+1}, parent-closed, with children numbered 1..c_u and
the last floor vertex childless.  Internally nodes are stored by dense ids
in preorder of the facial walk (= lexicographic order of addresses);
addresses are reconstructed on demand so small cases stay convenient while
1e5-node forests stay cheap.

The contour pair (C, L) encodes a well-labeled forest losslessly:
C(i) = depth(f(i)) + t - a(f(i)) walks from t down to 0 in +-1 steps,
hitting 0 for the first time at the end, and L(i) is the label of f(i).
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import MalformedContour, Unreachable


@dataclass(frozen=True)
class Forest:
    """Forest with ``tree_count`` trees; ``num_children[k]`` is the child
    count of the k-th node in preorder (trees in floor order, the last
    floor vertex included and childless)."""

    tree_count: int
    num_children: tuple[int, ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __init__(self, tree_count: int, num_children):
        object.__setattr__(self, "tree_count", int(tree_count))
        object.__setattr__(self, "num_children", tuple(num_children))
        object.__setattr__(self, "_cache", {})
        if self.tree_count < 1:
            raise MalformedContour("forest needs at least one tree")
        if not self.num_children or self.num_children[-1] != 0:
            raise MalformedContour("last floor vertex must be childless")

    @property
    def size(self) -> int:
        """Total number of nodes, m + t + 1."""
        return len(self.num_children)

    @property
    def tree_edge_count(self) -> int:
        return self.size - self.tree_count - 1

    def parents(self) -> list[int]:
        """Parent node id per node, -1 for floor vertices."""
        if "parents" in self._cache:
            return self._cache["parents"]
        par = [-1] * self.size
        stack: list[list[int]] = []  # [node, children remaining]
        floor_seen = 0
        for k, c in enumerate(self.num_children):
            if stack:
                par[k] = stack[-1][0]
                stack[-1][1] -= 1
            else:
                floor_seen += 1
            if c > 0:
                stack.append([k, c])
            while stack and stack[-1][1] == 0:
                stack.pop()
        if floor_seen != self.tree_count + 1 or stack:
            raise MalformedContour("floor does not match tree count")
        self._cache["parents"] = par
        return par

    def children(self) -> list[list[int]]:
        if "children" in self._cache:
            return self._cache["children"]
        ch: list[list[int]] = [[] for _ in range(self.size)]
        for k, p in enumerate(self.parents()):
            if p != -1:
                ch[p].append(k)
        self._cache["children"] = ch
        return ch

    def floor_ids(self) -> list[int]:
        return [k for k, p in enumerate(self.parents()) if p == -1]

    def tree_index(self) -> list[int]:
        """1-based oldest-ancestor index a(u) per node."""
        par = self.parents()
        out = [0] * self.size
        t = 0
        for k, p in enumerate(par):
            if p == -1:
                t += 1
                out[k] = t
            else:
                out[k] = out[p]
        return out

    def depths(self) -> list[int]:
        """|u| per node (floor vertices have depth 1)."""
        par = self.parents()
        out = [1] * self.size
        for k, p in enumerate(par):
            if p != -1:
                out[k] = out[p] + 1
        return out

    def addresses(self) -> list[tuple[int, ...]]:
        """Address of each node id, in preorder."""
        par = self.parents()
        a = self.tree_index()
        child_rank = [0] * self.size
        counter = [0] * self.size
        for k, p in enumerate(par):
            if p != -1:
                counter[p] += 1
                child_rank[k] = counter[p]
        out: list[tuple[int, ...]] = [()] * self.size
        for k in range(self.size):
            if par[k] == -1:
                out[k] = (a[k],)
            else:
                out[k] = out[par[k]] + (child_rank[k],)
        return out

    @classmethod
    def from_children_dict(cls, tree_count: int, children: dict) -> "Forest":
        """Build from an address -> child count mapping."""
        nodes: list[tuple[int, ...]] = []

        def add(addr: tuple[int, ...]):
            nodes.append(addr)
            for i in range(1, children.get(addr, 0) + 1):
                add(addr + (i,))

        for r in range(1, tree_count + 2):
            add((r,))
        return cls(tree_count, [children.get(a, 0) for a in nodes])

    def facial_sequence_ids(self) -> list[int]:
        """Node ids f(0)..f(2m+t) of the facial walk: first unvisited child,
        else parent, else the next floor vertex."""
        ch = self.children()
        floor = self.floor_ids()
        seq: list[int] = [floor[0]]
        for j, root in enumerate(floor):
            if j > 0:
                seq.append(root)
            stack: list[list[int]] = [[root, 0]]
            while stack:
                node, ci = stack[-1]
                if ci < len(ch[node]):
                    stack[-1][1] += 1
                    c = ch[node][ci]
                    seq.append(c)
                    stack.append([c, 0])
                else:
                    stack.pop()
                    if stack:
                        seq.append(stack[-1][0])
        return seq

    def facial_sequence(self) -> list[tuple[int, ...]]:
        addr = self.addresses()
        return [addr[k] for k in self.facial_sequence_ids()]


@dataclass(frozen=True)
class WellLabeledForest:
    """Forest plus integer labels per node id; floor labels are 0 and tree
    edges change the label by at most 1."""

    forest: Forest
    labels: tuple[int, ...]

    def __init__(self, forest: Forest, labels):
        object.__setattr__(self, "forest", forest)
        object.__setattr__(self, "labels", tuple(labels))

    def validate(self) -> None:
        if len(self.labels) != self.forest.size:
            raise MalformedContour("label array has wrong length")
        par = self.forest.parents()
        for k, p in enumerate(par):
            if p == -1:
                if self.labels[k] != 0:
                    raise MalformedContour("floor labels must be 0")
            elif abs(self.labels[k] - self.labels[p]) > 1:
                raise MalformedContour("tree edge label jump exceeds 1")


@dataclass(frozen=True)
class ContourPair:
    """Height and label processes of a well-labeled forest.

    C has 2m+sigma+1 samples from sigma down to 0 in +-1 steps, first
    hitting 0 at the final time; L starts at 0 with steps in {-1,0,1} on
    tree edges and 0 on floor edges.
    """

    C: tuple[int, ...]
    L: tuple[int, ...]

    def __init__(self, C, L):
        object.__setattr__(self, "C", tuple(int(x) for x in C))
        object.__setattr__(self, "L", tuple(int(x) for x in L))

    @property
    def sigma(self) -> int:
        return self.C[0]

    @property
    def m(self) -> int:
        return (len(self.C) - 1 - self.C[0]) // 2

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["i", "C", "L"])
        for i, (c, l) in enumerate(zip(self.C, self.L)):
            w.writerow([i, c, l])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ContourPair":
        rows = list(csv.reader(io.StringIO(text)))
        body = rows[1:] if rows and rows[0] and rows[0][0] == "i" else rows
        body = [r for r in body if r]
        return cls([int(r[1]) for r in body], [int(r[2]) for r in body])


def contour_pair(wf: WellLabeledForest) -> ContourPair:
    f = wf.forest
    seq = f.facial_sequence_ids()
    depth = f.depths()
    a = f.tree_index()
    t = f.tree_count
    C = [depth[k] + t - a[k] for k in seq]
    L = [wf.labels[k] for k in seq]
    return ContourPair(C, L)


def decode_contour(cp: ContourPair) -> WellLabeledForest:
    """Inverse of :func:`contour_pair`; raises MalformedContour on bad input."""
    C, L = cp.C, cp.L
    if not C or len(C) != len(L):
        raise MalformedContour("empty or mismatched contour")
    sigma = C[0]
    if sigma < 1 or C[-1] != 0:
        raise MalformedContour("contour must run from sigma>=1 down to 0")
    if L[0] != 0:
        raise MalformedContour("label contour must start at 0")
    steps = len(C) - 1
    if (steps - sigma) % 2 != 0:
        raise MalformedContour("length parity inconsistent with sigma")
    if any(abs(C[i + 1] - C[i]) != 1 for i in range(steps)):
        raise MalformedContour("C must move by +-1")
    if any(C[i] <= 0 for i in range(steps)):
        raise MalformedContour("C may hit 0 only at the final time")

    # replay the walk to rebuild preorder child counts and labels
    num_children: list[int] = [0]
    labels: list[int] = [L[0]]
    run_min = sigma
    stack = [0]  # node-id stack, current node on top
    for i in range(steps):
        if C[i + 1] > C[i]:
            nid = len(num_children)
            num_children[stack[-1]] += 1
            num_children.append(0)
            if abs(L[i + 1] - L[i]) > 1:
                raise MalformedContour("tree edge label jump exceeds 1")
            labels.append(L[i + 1])
            stack.append(nid)
        elif C[i + 1] < run_min:
            # floor step to the next tree root
            run_min = C[i + 1]
            if L[i + 1] != 0:
                raise MalformedContour("floor labels must be 0")
            if len(stack) != 1:
                raise MalformedContour("floor step away from a floor vertex")
            nid = len(num_children)
            num_children.append(0)
            labels.append(0)
            stack = [nid]
        else:
            stack.pop()
            if not stack:
                raise MalformedContour("walked below the current floor")
            if L[i + 1] != labels[stack[-1]]:
                raise MalformedContour("second visit label mismatch")
    wf = WellLabeledForest(Forest(sigma, num_children), labels)
    wf.validate()
    return wf


def count_forests(sigma: int, m: int) -> int:
    """|F_sigma^m| = sigma/(2m+sigma) * C(2m+sigma, m), exactly."""
    if sigma < 1:
        raise MalformedContour("sigma must be >= 1")
    if m < 0:
        return 0
    return sigma * comb(2 * m + sigma, m) // (2 * m + sigma)


def enumerate_forests(sigma: int, m: int) -> list[Forest]:
    """All forests in F_sigma^m, by exhaustive contour enumeration."""
    out: list[Forest] = []
    L = 2 * m + sigma

    def rec(prefix: list[int]):
        done = len(prefix) - 1
        rem = L - done
        if rem == 0:
            cp = ContourPair(prefix, [0] * len(prefix))
            out.append(decode_contour(cp).forest)
            return
        for step in (1, -1):
            nh = prefix[-1] + step
            if rem == 1:
                if nh == 0:
                    rec(prefix + [nh])
            elif 1 <= nh <= rem - 1 and (rem - 1 - nh) % 2 == 0:
                rec(prefix + [nh])

    rec([sigma])
    return out


# -- Motzkin paths -------------------------------------------------------------


@dataclass(frozen=True)
class MotzkinPath:
    """Integer sequence M_0..M_sigma with M_0 = 0 and steps in {-1,0,1}."""

    values: tuple[int, ...]

    def __init__(self, values):
        object.__setattr__(self, "values", tuple(int(x) for x in values))
        v = self.values
        if not v or v[0] != 0:
            raise MalformedContour("Motzkin path must start at 0")
        if any(abs(v[i + 1] - v[i]) > 1 for i in range(len(v) - 1)):
            raise MalformedContour("Motzkin steps must lie in {-1,0,1}")

    @property
    def lifetime(self) -> int:
        return len(self.values) - 1

    @property
    def endpoint(self) -> int:
        return self.values[-1]

    def reversed_shifted(self) -> "MotzkinPath":
        """The path i -> M(sigma-i) - M(sigma), pairing a scheme half-edge
        with its reverse."""
        v = self.values
        l = v[-1]
        return MotzkinPath([v[len(v) - 1 - i] - l for i in range(len(v))])


def motzkin_count(sigma: int, l: int) -> int:
    """Number of {-1,0,1}-step paths of length sigma from 0 to l."""
    ll = abs(l)
    if ll > sigma:
        return 0
    total = 0
    for j in range(0, (sigma - ll) // 2 + 1):
        total += comb(sigma, j) * comb(sigma - j, j + ll)
    return total


def sample_motzkin_bridge(sigma: int, l: int, rng) -> MotzkinPath:
    """Exactly uniform Motzkin bridge 0 -> l of length sigma.

    Rejection from uniform free walks (accept when the endpoint hits l);
    falls back to exact DP stepping if rejection is unlucky, so the output
    law is exactly uniform either way.
    """
    if abs(l) > sigma:
        raise Unreachable(f"no Motzkin path of length {sigma} reaches {l}")
    if sigma == 0:
        return MotzkinPath([0])
    for _ in range(400):
        steps = rng.integers(-1, 2, size=sigma)
        if int(steps.sum()) == l:
            return MotzkinPath(np.concatenate([[0], np.cumsum(steps)]))
    # exact DP fallback: counts[k] = #paths of length k from value v to l
    counts: list[dict[int, int]] = [{l: 1}]
    for _ in range(sigma):
        prev = counts[-1]
        cur: dict[int, int] = {}
        for v, c in prev.items():
            for d in (-1, 0, 1):
                cur[v + d] = cur.get(v + d, 0) + c
        counts.append(cur)
    vals = [0]
    for k in range(sigma):
        rem = sigma - k - 1
        v = vals[-1]
        weights = [counts[rem].get(v + d, 0) for d in (-1, 0, 1)]
        r = int(rng.integers(0, sum(weights)))
        for d, w in zip((-1, 0, 1), weights):
            if r < w:
                vals.append(v + d)
                break
            r -= w
    return MotzkinPath(vals)


def sample_forest(sigma: int, m: int, rng) -> Forest:
    """Exactly uniform forest from F_sigma^m via shuffle plus cycle lemma.

    A uniform arrangement of m up and m+sigma down steps has exactly sigma
    rotation indices producing a walk from sigma that first hits 0 at the
    end; picking one of them uniformly yields the uniform forest.
    """
    L = 2 * m + sigma
    if m == 0:
        return Forest(sigma, [0] * (sigma + 1))
    steps = np.concatenate(
        [np.ones(m, dtype=np.int64), -np.ones(m + sigma, dtype=np.int64)]
    )
    rng.shuffle(steps)
    pref = np.concatenate([[0], np.cumsum(steps)])  # pref[L] = -sigma
    # rotation r is good iff pref extended periodically satisfies
    # pref_ext[s] > pref[r] for all s in (r-L, r); equivalently pref[r] is a
    # strict minimum of the trailing window of length L-1 in the extension
    ext = np.concatenate([pref[:-1] + sigma, pref[:-1]])  # index s+L for s in [-L, L)
    good = []
    window: deque[int] = deque()  # indices of increasing ext values
    for p in range(1, 2 * L):
        # maintain min over ext[p-L+1 .. p-1] before testing position p
        while window and window[0] < p - L + 1:
            window.popleft()
        if p >= L:
            r = p - L
            if not window or ext[window[0]] > ext[p]:
                good.append(r)
        while window and ext[window[-1]] >= ext[p]:
            window.pop()
        window.append(p)
    assert len(good) == sigma, (len(good), sigma)
    r = good[int(rng.integers(0, sigma))]
    rot = np.concatenate([steps[r:], steps[:r]])
    C = np.concatenate([[sigma], sigma + np.cumsum(rot)])
    return decode_contour(ContourPair(C, [0] * (L + 1))).forest


def sample_forest_labels(f: Forest, rng) -> WellLabeledForest:
    """Uniform well-labeling: i.i.d. uniform {-1,0,1} increments per tree edge."""
    labels = [0] * f.size
    incs = rng.integers(-1, 2, size=f.size)
    for k, p in enumerate(f.parents()):
        if p != -1:
            labels[k] = labels[p] + int(incs[k])
    return WellLabeledForest(f, labels)


def enumerate_well_labeled_forests(sigma: int, m: int):
    """All well-labeled forests in fF_sigma^m (3^m labelings per forest)."""
    from itertools import product

    out = []
    for f in enumerate_forests(sigma, m):
        par = f.parents()
        tree_nodes = [k for k, p in enumerate(par) if p != -1]
        for incs in product((-1, 0, 1), repeat=len(tree_nodes)):
            labels = [0] * f.size
            for k, d in zip(tree_nodes, incs):
                labels[k] = labels[par[k]] + d
            out.append(WellLabeledForest(f, labels))
    return out
