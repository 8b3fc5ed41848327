"""Folded core graphs for finitely generated subgroups of free groups.

A ``SubgroupGraph`` is stored in canonical form: states are renumbered by a
breadth-first traversal from the base in a fixed letter order, so structural
equality coincides with based labeled-graph isomorphism.
"""

from __future__ import annotations

import itertools
from collections import deque
from typing import Dict, List, Optional, Sequence, Set, Tuple

from ..errors import DomainError, FormatError, ResourceError
from .autos import FreeAut
from .words import FreeGroup, Letter, Word

STATE_BUDGET_DEFAULT = 10**6


class SubgroupGraph:
    """Folded, based core graph.  ``fwd[i][s]`` is the i-labeled successor."""

    __slots__ = ("group", "nstates", "fwd", "bwd", "_hash")

    base = 0  # canonical numbering puts the base state first

    def __init__(self, group: FreeGroup, nstates: int, fwd):
        self.group = group
        self.nstates = nstates
        self.fwd = tuple(tuple(row) for row in fwd)
        bwd = [[None] * nstates for _ in range(group.rank)]
        for i in range(group.rank):
            for s, t in enumerate(self.fwd[i]):
                if t is not None:
                    if bwd[i][t] is not None:
                        raise DomainError("graph is not folded (backward collision)")
                    bwd[i][t] = s
        self.bwd = tuple(tuple(row) for row in bwd)
        self._hash = hash((group._hash, nstates, self.fwd))

    def __eq__(self, other):
        return (
            isinstance(other, SubgroupGraph)
            and self.group == other.group
            and self.fwd == other.fwd
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"<SubgroupGraph {self.nstates} states over {self.group!r}>"

    def step(self, state: int, letter: Letter) -> Optional[int]:
        i, s = letter
        return self.fwd[i][state] if s > 0 else self.bwd[i][state]

    def membership(self, w: Word) -> bool:
        """True iff w labels a base-to-base loop."""
        if w.group != self.group:
            raise DomainError("word over a different group")
        state = self.base
        for letter in w.letters:
            state = self.step(state, letter)
            if state is None:
                return False
        return state == self.base

    def __contains__(self, w: Word) -> bool:
        return self.membership(w)

    def is_complete(self) -> bool:
        return all(t is not None for row in self.fwd for t in row)

    def index(self) -> Optional[int]:
        """Subgroup index: the state count when the graph is complete, else None.

        A folded core graph is the full coset graph exactly when it is
        complete, so no on-demand completion is attempted here.
        """
        return self.nstates if self.is_complete() else None

    def _tree(self) -> Tuple[List[Word], Set[Tuple[int, int]]]:
        """BFS spanning tree: path word per state, tree edges as (state, gen)."""
        words: List[Optional[Word]] = [None] * self.nstates
        words[self.base] = self.group.identity()
        tree_edges: Set[Tuple[int, int]] = set()
        queue = deque([self.base])
        while queue:
            s = queue.popleft()
            for i in range(self.group.rank):
                for sign in (1, -1):
                    t = self.step(s, (i, sign))
                    if t is not None and words[t] is None:
                        words[t] = words[s] * self.group.word([(i, sign)])
                        tree_edges.add((s, i) if sign > 0 else (t, i))
                        queue.append(t)
        assert all(w is not None for w in words)
        return words, tree_edges  # type: ignore[return-value]

    def spanning_tree_words(self) -> List[Word]:
        """Word labeling the tree path from base to each state."""
        return self._tree()[0]

    def generators(self) -> List[Word]:
        """A free basis of the subgroup, one word per non-tree transition."""
        path, tree_edges = self._tree()
        gens = []
        for i in range(self.group.rank):
            for s in range(self.nstates):
                t = self.fwd[i][s]
                if t is None or (s, i) in tree_edges:
                    continue
                gens.append(path[s] * self.group.word([(i, 1)]) * path[t].inverse())
        return gens

    def rank(self) -> int:
        """First Betti number: the rank of the subgroup."""
        nedges = sum(1 for row in self.fwd for t in row if t is not None)
        return nedges - self.nstates + 1

    def intersect(self, other: "SubgroupGraph", state_budget: int = STATE_BUDGET_DEFAULT) -> "SubgroupGraph":
        """Fiber product over the base states, cored and canonicalized."""
        if self.group != other.group:
            raise DomainError("graphs over different groups")
        rank = self.group.rank
        start = (self.base, other.base)
        numbering = {start: 0}
        order = [start]
        queue = deque([start])
        edges: List[Tuple[int, int, int]] = []
        while queue:
            s1, s2 = queue.popleft()
            for i in range(rank):
                t1, t2 = self.fwd[i][s1], other.fwd[i][s2]
                if t1 is None or t2 is None:
                    continue
                target = (t1, t2)
                if target not in numbering:
                    if len(numbering) >= state_budget:
                        raise ResourceError(
                            f"fiber product exceeded the state budget of {state_budget}"
                        )
                    numbering[target] = len(order)
                    order.append(target)
                    queue.append(target)
                edges.append((numbering[(s1, s2)], i, numbering[target]))
            # walk backward transitions too so the whole component is found
            for i in range(rank):
                t1, t2 = self.bwd[i][s1], other.bwd[i][s2]
                if t1 is None or t2 is None:
                    continue
                source = (t1, t2)
                if source not in numbering:
                    if len(numbering) >= state_budget:
                        raise ResourceError(
                            f"fiber product exceeded the state budget of {state_budget}"
                        )
                    numbering[source] = len(order)
                    order.append(source)
                    queue.append(source)
                edges.append((numbering[source], i, numbering[(s1, s2)]))
        fwd = [[None] * len(order) for _ in range(rank)]
        for u, i, v in edges:
            fwd[i][u] = v
        return _core_and_canonicalize(self.group, len(order), fwd, 0)

    def image_under(self, aut: FreeAut) -> "SubgroupGraph":
        return fold(self.group, [aut.apply(g) for g in self.generators()])

    def serialize(self) -> str:
        lines = [f"base: {self.base}"]
        for i in range(self.group.rank):
            for s in range(self.nstates):
                t = self.fwd[i][s]
                if t is not None:
                    lines.append(f"{s} --{self.group.names[i]}--> {t}")
        return "\n".join(lines) + "\n"

    @classmethod
    def deserialize(cls, group: FreeGroup, text: str) -> "SubgroupGraph":
        base = None
        edges = []
        states: Set[int] = set()
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("base:"):
                base = int(line.split(":", 1)[1])
                states.add(base)
                continue
            try:
                left, rest = line.split("--", 1)
                gen, right = rest.rsplit("-->", 1)
            except ValueError as exc:
                raise FormatError(f"bad graph line: {line!r}") from exc
            gen = gen.strip().rstrip("-")
            if gen not in group.names:
                raise FormatError(f"unknown generator {gen!r}")
            u, v = int(left), int(right)
            edges.append((u, group.names.index(gen), v))
            states.update((u, v))
        if base is None:
            raise FormatError("missing base: header")
        renumber = {s: k for k, s in enumerate(sorted(states))}
        fwd = [[None] * len(states) for _ in range(group.rank)]
        for u, i, v in edges:
            if fwd[i][renumber[u]] is not None and fwd[i][renumber[u]] != renumber[v]:
                raise FormatError("graph is not deterministic")
            fwd[i][renumber[u]] = renumber[v]
        return _core_and_canonicalize(group, len(states), fwd, renumber[base])


def _core_and_canonicalize(group, nstates, fwd, base) -> SubgroupGraph:
    rank = group.rank
    bwd = [[None] * nstates for _ in range(rank)]
    for i in range(rank):
        for s in range(nstates):
            if fwd[i][s] is not None:
                bwd[i][fwd[i][s]] = s

    def degree(s):
        return sum(1 for i in range(rank) if fwd[i][s] is not None) + sum(
            1 for i in range(rank) if bwd[i][s] is not None
        )

    alive = [True] * nstates
    queue = deque(s for s in range(nstates) if s != base and degree(s) <= 1)
    while queue:
        s = queue.popleft()
        if not alive[s] or s == base or degree(s) > 1:
            continue
        alive[s] = False
        for i in range(rank):
            t = fwd[i][s]
            if t is not None:
                fwd[i][s] = None
                bwd[i][t] = None
                if t != base and degree(t) <= 1:
                    queue.append(t)
            u = bwd[i][s]
            if u is not None:
                bwd[i][s] = None
                fwd[i][u] = None
                if u != base and degree(u) <= 1:
                    queue.append(u)

    # canonical renumbering: BFS from base, letters in fixed order
    numbering = {base: 0}
    order = [base]
    queue = deque([base])
    while queue:
        s = queue.popleft()
        for i in range(rank):
            for table in (fwd, bwd):
                t = table[i][s]
                if t is not None and alive[t] and t not in numbering:
                    numbering[t] = len(order)
                    order.append(t)
                    queue.append(t)
    new_fwd = [[None] * len(order) for _ in range(rank)]
    for s, num in numbering.items():
        for i in range(rank):
            t = fwd[i][s]
            if t is not None and t in numbering:
                new_fwd[i][num] = numbering[t]
    return SubgroupGraph(group, len(order), new_fwd)


class _Folder:
    """Union-find folding with merge queues; near-linear in the edge count."""

    def __init__(self, rank: int):
        self.rank = rank
        self.parent: List[int] = []
        self.out: List[Dict[int, int]] = []
        self.inc: List[Dict[int, int]] = []
        self.pending: deque = deque()

    def new_vertex(self) -> int:
        self.parent.append(len(self.parent))
        self.out.append({})
        self.inc.append({})
        return len(self.parent) - 1

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def add_edge(self, u: int, i: int, v: int):
        self.pending.append(("edge", u, i, v))
        self.drain()

    def drain(self):
        while self.pending:
            item = self.pending.popleft()
            if item[0] == "edge":
                _, u, i, v = item
                self._insert(self.find(u), i, self.find(v))
            else:
                _, a, b = item
                self._merge(self.find(a), self.find(b))

    def _insert(self, u: int, i: int, v: int):
        existing = self.out[u].get(i)
        if existing is not None:
            ev = self.find(existing)
            self.out[u][i] = ev
            if ev != v:
                self.pending.append(("merge", ev, v))
            return
        self.out[u][i] = v
        existing_in = self.inc[v].get(i)
        if existing_in is not None:
            eu = self.find(existing_in)
            self.inc[v][i] = eu
            if eu != u:
                self.pending.append(("merge", eu, u))
            return
        self.inc[v][i] = u

    def _merge(self, a: int, b: int):
        if a == b:
            return
        # keep the vertex with more incident entries
        if len(self.out[a]) + len(self.inc[a]) < len(self.out[b]) + len(self.inc[b]):
            a, b = b, a
        self.parent[b] = a
        out_b, inc_b = self.out[b], self.inc[b]
        self.out[b], self.inc[b] = {}, {}
        for i, v in out_b.items():
            self._insert(a, i, self.find(v))
        for i, u in inc_b.items():
            fu = self.find(u)
            cur = self.inc[a].get(i)
            if cur is None:
                self.inc[a][i] = fu
                self._insert(fu, i, a)
            else:
                fcur = self.find(cur)
                self.inc[a][i] = fcur
                if fcur != fu:
                    self.pending.append(("merge", fcur, fu))

    def extract(self, group: FreeGroup, base: int) -> SubgroupGraph:
        roots = sorted({self.find(v) for v in range(len(self.parent))})
        numbering = {r: k for k, r in enumerate(roots)}
        fwd = [[None] * len(roots) for _ in range(self.rank)]
        for r in roots:
            for i, v in self.out[r].items():
                fwd[i][numbering[r]] = numbering[self.find(v)]
        return _core_and_canonicalize(group, len(roots), fwd, numbering[self.find(base)])


def fold(group: FreeGroup, generators: Sequence[Word]) -> SubgroupGraph:
    """Folded core graph of the subgroup generated by the given words."""
    if not generators:
        raise DomainError("fold requires a nonempty generating set")
    folder = _Folder(group.rank)
    base = folder.new_vertex()
    for gen in generators:
        if gen.group != group:
            raise DomainError("generator over a different group")
        prev = base
        n = len(gen.letters)
        for pos, (i, s) in enumerate(gen.letters):
            nxt = base if pos == n - 1 else folder.new_vertex()
            if s > 0:
                folder.add_edge(prev, i, nxt)
            else:
                folder.add_edge(nxt, i, prev)
            prev = nxt
    return folder.extract(group, base)


def whole_group_graph(group: FreeGroup) -> SubgroupGraph:
    return fold(group, group.generators())


def _permutations(d: int):
    return itertools.permutations(range(d))


def _transitive(perms: Sequence[Sequence[int]], d: int) -> bool:
    seen = {0}
    queue = deque([0])
    while queue:
        p = queue.popleft()
        for perm in perms:
            for q in (perm[p], perm.index(p)):
                if q not in seen:
                    seen.add(q)
                    queue.append(q)
    return len(seen) == d


def subgroups_of_index_at_most(group: FreeGroup, m: int) -> List[SubgroupGraph]:
    """All subgroups of index <= m, via transitive actions on <= m points."""
    if m < 1:
        raise DomainError("index bound must be >= 1")
    found: Set[SubgroupGraph] = set()
    for d in range(1, m + 1):
        for perms in itertools.product(list(_permutations(d)), repeat=group.rank):
            if not _transitive(perms, d):
                continue
            fwd = [list(perm) for perm in perms]
            found.add(_core_and_canonicalize(group, d, fwd, 0))
    return sorted(found, key=lambda g: (g.nstates, g.fwd))


def congruence_kernel(
    ambient,
    m: int,
    state_budget: int = STATE_BUDGET_DEFAULT,
    auts: Optional[Sequence[FreeAut]] = None,
) -> SubgroupGraph:
    """Intersection of all subgroups of index <= m of the ambient group.

    The ambient group may be a FreeGroup or a SubgroupGraph; in the latter
    case the computation runs over the subgroup's own basis and the result is
    translated back to ambient words.  When ``auts`` is supplied the result
    is verified characteristic under them.

    Enumeration runs over all transitive actions on <= m points, so the cost
    grows like (m!)^rank; m <= 3 at rank <= 3 is the supported envelope, with
    the state budget guarding the intersection itself.
    """
    if isinstance(ambient, SubgroupGraph):
        basis = ambient.generators()
        inner_group = FreeGroup(len(basis))
        inner = congruence_kernel(inner_group, m, state_budget)
        translated = [_substitute(w, basis, ambient.group) for w in inner.generators()]
        return fold(ambient.group, translated)
    group: FreeGroup = ambient
    result = whole_group_graph(group)
    for sub in subgroups_of_index_at_most(group, m):
        result = result.intersect(sub, state_budget=state_budget)
    if auts is not None and not is_characteristic(result, auts):
        raise DomainError("congruence kernel failed the characteristic check")
    return result


def _substitute(w: Word, images: Sequence[Word], target: FreeGroup) -> Word:
    out = target.identity()
    for i, s in w.letters:
        out = out * (images[i] if s > 0 else images[i].inverse())
    return out


def is_characteristic(h: SubgroupGraph, auts: Sequence[FreeAut]) -> bool:
    """True iff every generator image under every aut stays in h.

    Requires finite index; there phi(H) <= H forces phi(H) == H, so the
    one-sided check suffices when the auts generate the automorphism group.
    """
    if not h.is_complete():
        raise DomainError("characteristic check requires a finite-index subgroup")
    gens = h.generators()
    for aut in auts:
        if aut.group != h.group:
            raise DomainError("automorphism of a different group")
        for g in gens:
            if not h.membership(aut.apply(g)):
                return False
    return True
