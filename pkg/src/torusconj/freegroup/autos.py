"""Automorphisms of free groups, built and inverted by folding with history.

``is_automorphism`` folds the wedge of the candidate images while each edge
remembers an expression in the abstract generators.  A fold that would drop
the graph's first Betti number proves the images are not a basis; otherwise
the final rose reads off the inverse images directly.
"""

from __future__ import annotations

from typing import Optional, Sequence

from ..errors import DomainError
from .words import FreeGroup, Letter, Word, is_conjugate, reduce_letters


class FreeAut:
    """An automorphism of a free group, with its inverse precomputed."""

    __slots__ = ("group", "images", "inverse_images", "_hash")

    def __init__(self, group: FreeGroup, images, inverse_images):
        self.group = group
        self.images = tuple(images)
        self.inverse_images = tuple(inverse_images)
        self._hash = hash((group._hash, tuple(w.letters for w in self.images)))

    @classmethod
    def identity(cls, group: FreeGroup) -> "FreeAut":
        gens = group.generators()
        return cls(group, gens, gens)

    def apply(self, w: Word) -> Word:
        letters: list[Letter] = []
        for i, s in w.letters:
            img = self.images[i] if s > 0 else self.images[i].inverse()
            letters.extend(img.letters)
        return Word(self.group, reduce_letters(letters))

    def apply_inverse(self, w: Word) -> Word:
        return self.inverse().apply(w)

    def inverse(self) -> "FreeAut":
        return FreeAut(self.group, self.inverse_images, self.images)

    def __mul__(self, other: "FreeAut") -> "FreeAut":
        """Composition: (self * other)(w) == self(other(w))."""
        if self.group != other.group:
            raise DomainError("automorphisms of different groups")
        images = [self.apply(img) for img in other.images]
        inv_images = [other.inverse().apply(img) for img in self.inverse_images]
        return FreeAut(self.group, images, inv_images)

    def __pow__(self, n: int) -> "FreeAut":
        if n < 0:
            return self.inverse() ** (-n)
        result = FreeAut.identity(self.group)
        for _ in range(n):
            result = self * result
        return result

    def is_identity(self) -> bool:
        return all(img == self.group.generator(i) for i, img in enumerate(self.images))

    def __eq__(self, other):
        return (
            isinstance(other, FreeAut)
            and self.group == other.group
            and self.images == other.images
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        parts = ", ".join(
            f"{self.group.names[i]} -> {img.format()}" for i, img in enumerate(self.images)
        )
        return f"FreeAut({parts})"

    def abelianized(self) -> list[list[int]]:
        """Column i is the exponent vector of the image of generator i."""
        n = self.group.rank
        mat = [[0] * n for _ in range(n)]
        for i, img in enumerate(self.images):
            for j, s in img.letters:
                mat[j][i] += s
        return mat


class _HistoryFolder:
    """Stallings folding where every edge carries a word in the petal symbols."""

    def __init__(self, group: FreeGroup, images: Sequence[Word]):
        self.group = group
        self.parent: list[int] = [0]
        # edge records: [alive, u, v, gen, expr]; traversing u->v reads gen
        # positively and contributes expr; v->u contributes expr^-1.
        self.edges: list[list] = []
        self.incidence: list[set] = [set()]
        self.base = 0
        self.ok = True
        for j, image in enumerate(images):
            self._add_petal(j, image)

    def _new_vertex(self) -> int:
        self.parent.append(len(self.parent))
        self.incidence.append(set())
        return len(self.parent) - 1

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def _add_edge(self, u, v, gen, expr):
        eid = len(self.edges)
        self.edges.append([True, u, v, gen, expr])
        self.incidence[u].add(eid)
        self.incidence[v].add(eid)

    def _add_petal(self, j: int, image: Word):
        if image.is_identity():
            return
        symbol = self.group.generator(j)
        prev = self.base
        n = len(image.letters)
        for pos, (i, s) in enumerate(image.letters):
            nxt = self.base if pos == n - 1 else self._new_vertex()
            expr = self.group.identity()
            if pos == 0:
                expr = symbol if s > 0 else symbol.inverse()
            if s > 0:
                self._add_edge(prev, nxt, i, expr)
            else:
                self._add_edge(nxt, prev, i, expr)
            prev = nxt

    def _gauge(self, x: int, c: Word):
        """Multiply path expressions by the gauge element c at vertex x."""
        for eid in self.incidence[x]:
            alive, u, v, gen, expr = self.edges[eid]
            if not alive:
                continue
            ru, rv = self.find(u), self.find(v)
            if ru == x and rv == x:
                self.edges[eid][4] = c * expr * c.inverse()
            elif ru == x:
                self.edges[eid][4] = c * expr
            elif rv == x:
                self.edges[eid][4] = expr * c.inverse()

    def fold(self) -> bool:
        queue = set(range(len(self.parent)))
        while queue:
            v = queue.pop()
            if self.find(v) != v:
                continue
            pair = self._find_foldable(v)
            if pair is None:
                continue
            e1, e2, outgoing = pair
            if not self._fold_pair(e1, e2, outgoing):
                return False
            queue.add(self.find(v))
            queue.add(self.find(self.edges[e1][1]))
            queue.add(self.find(self.edges[e1][2]))
        return True

    def _find_foldable(self, v: int):
        out_seen: dict[int, int] = {}
        in_seen: dict[int, int] = {}
        for eid in sorted(self.incidence[v]):
            alive, u, w, gen, _ = self.edges[eid]
            if not alive:
                continue
            ru, rw = self.find(u), self.find(w)
            if ru == v:
                if gen in out_seen:
                    return out_seen[gen], eid, True
                out_seen[gen] = eid
            if rw == v:
                if gen in in_seen:
                    return in_seen[gen], eid, False
                in_seen[gen] = eid
        return None

    def _fold_pair(self, e1: int, e2: int, outgoing: bool) -> bool:
        _, u1, v1, _, m1 = self.edges[e1]
        _, u2, v2, _, m2 = self.edges[e2]
        if outgoing:
            t1, t2 = self.find(v1), self.find(v2)
        else:
            t1, t2 = self.find(u1), self.find(u2)
        if t1 == t2:
            # a fold with both endpoints identified drops the rank
            return False
        base = self.find(self.base)
        if t2 != base:
            if outgoing:
                c = m1.inverse() * m2  # new expr(e2) = m2 * c^-1 = m1
            else:
                c = m1 * m2.inverse()  # new expr(e2) = c * m2 = m1
            self._gauge(t2, c)
            keep, drop = t1, t2
        else:
            if outgoing:
                d = m2.inverse() * m1
            else:
                d = m2 * m1.inverse()
            self._gauge(t1, d)
            keep, drop = t2, t1
        self.parent[drop] = keep
        self.incidence[keep] |= self.incidence[drop]
        self.incidence[drop] = set()
        self.edges[e2][0] = False
        return True

    def rose_expressions(self) -> Optional[list[Word]]:
        """If the folded graph is the full rose, the expression per loop."""
        base = self.find(self.base)
        exprs: dict[int, Word] = {}
        for alive, u, v, gen, expr in self.edges:
            if not alive:
                continue
            if self.find(u) != base or self.find(v) != base:
                return None
            if gen in exprs:
                return None
            exprs[gen] = expr
        if set(exprs) != set(range(self.group.rank)):
            return None
        return [exprs[i] for i in range(self.group.rank)]


def is_automorphism(group: FreeGroup, images: Sequence[Word]) -> Optional[FreeAut]:
    """Return the automorphism with the given generator images, or None.

    A surjective endomorphism of a finite-rank free group is an automorphism,
    so only generation is checked.  When the images do not generate, the
    folded graph of the image subgroup (via ``stallings.fold``) is the
    rejection certificate.
    """
    images = [group.word(w.letters) if isinstance(w, Word) else group.word(w) for w in images]
    if len(images) != group.rank:
        raise DomainError(f"need {group.rank} images, got {len(images)}")
    folder = _HistoryFolder(group, images)
    if not folder.fold():
        return None
    exprs = folder.rose_expressions()
    if exprs is None:
        return None
    aut = FreeAut(group, images, exprs)
    for i in range(group.rank):
        if aut.apply(exprs[i]) != group.generator(i):
            raise AssertionError("history folding produced a bad inverse")
    return aut


class BasisExpresser:
    """Constructive membership for a subgroup given by a free basis.

    The basis words must freely generate (rank-preserving folding); this is
    verified at construction.
    """

    def __init__(self, group: FreeGroup, basis: Sequence[Word]):
        if not basis:
            raise DomainError("empty basis")
        self.group = group
        self.symbols = FreeGroup(len(basis))
        folder = _HistoryFolder.__new__(_HistoryFolder)
        folder.group = self.symbols
        folder.parent = [0]
        folder.edges = []
        folder.incidence = [set()]
        folder.base = 0
        for j, image in enumerate(basis):
            if image.group != group:
                raise DomainError("basis words from the wrong group")
            _HistoryFolder._add_petal(folder, j, image)
        if not folder.fold():
            raise DomainError("basis words do not freely generate")
        self._folder = folder
        # deterministic transition maps of the folded graph, with expressions
        self.fwd: dict[tuple[int, int], tuple[int, Word]] = {}
        for alive, u, v, gen, expr in folder.edges:
            if not alive:
                continue
            self.fwd[(folder.find(u), gen)] = (folder.find(v), expr)
        self.bwd: dict[tuple[int, int], tuple[int, Word]] = {}
        for (u, gen), (v, expr) in self.fwd.items():
            self.bwd[(v, gen)] = (u, expr.inverse())
        self.base = folder.find(folder.base)

    def express(self, w: Word) -> Optional[Word]:
        """Express w in the basis symbols, or None if w is not in the subgroup."""
        state = self.base
        parts: list[Letter] = []
        for i, s in w.letters:
            table = self.fwd if s > 0 else self.bwd
            hop = table.get((state, i))
            if hop is None:
                return None
            state, expr = hop
            parts.extend(expr.letters)
        if state != self.base:
            return None
        return Word(self.symbols, reduce_letters(parts))


def nielsen_generators(group: FreeGroup) -> list[FreeAut]:
    """A standard generating set of the automorphism group."""
    gens = group.generators()
    auts = []
    if group.rank == 1:
        auts.append(is_automorphism(group, [gens[0].inverse()]))
        return auts
    # cyclic shift of generators
    auts.append(is_automorphism(group, gens[1:] + gens[:1]))
    # swap the first two
    auts.append(is_automorphism(group, [gens[1], gens[0]] + gens[2:]))
    # invert the first
    auts.append(is_automorphism(group, [gens[0].inverse()] + gens[1:]))
    # right-multiply the first by the second
    auts.append(is_automorphism(group, [gens[0] * gens[1]] + gens[1:]))
    return auts


def inner_conjugator(aut: FreeAut, length_bound: int = 16) -> Optional[Word]:
    """If aut == ad_g (x -> g^-1 x g) for some g found within bounds, return g.

    Abelianization pre-filter, then the conjugator is pinned down from a
    conjugacy witness for the first generator; the remaining ambiguity is a
    power of that generator, searched up to the bound.  A None return means
    "not found within bounds"; for rank 1 it is exact.
    """
    group = aut.group
    n = group.rank
    mat = aut.abelianized()
    if any(mat[i][j] != (1 if i == j else 0) for i in range(n) for j in range(n)):
        return None
    if n == 1:
        return group.identity() if aut.is_identity() else None
    x0 = group.generator(0)
    ok, witness = is_conjugate(x0, aut.images[0])
    if not ok:
        return None
    for k in range(-length_bound, length_bound + 1):
        g = (x0 ** k) * witness
        if len(g) > length_bound:
            continue
        if all(aut.images[i] == group.generator(i).conjugate(g) for i in range(n)):
            return g
    return None


def outer_order(aut: FreeAut, max_order: int, length_bound: int = 16) -> Optional[int]:
    """Least d <= max_order with aut^d inner, or None if none is found."""
    power = FreeAut.identity(aut.group)
    for d in range(1, max_order + 1):
        power = aut * power
        if inner_conjugator(power, length_bound) is not None:
            return d
    return None
