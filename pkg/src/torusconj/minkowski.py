"""Effective Minkowskian certificates for free groups, Z^2, and F_k x Z.

The pipeline: enumerate finite-order outer-automorphism representatives from
graph symmetries (realization on graphs with all vertex degrees >= 3), find
for each a witness element and finite quotient where the images of g and
alpha(g) are non-conjugate, then assemble a characteristic finite-index
kernel contained in every witness kernel.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .errors import DomainError, ResourceError, Undecided
from .freegroup import (
    FreeAut,
    FreeGroup,
    SubgroupGraph,
    Word,
    fold,
    inner_conjugator,
    is_automorphism,
    is_characteristic,
    nielsen_generators,
)
from .freegroup.stallings import STATE_BUDGET_DEFAULT, _core_and_canonicalize
from .fibercorrect import smith_normal_form

RANK_BOUND_DEFAULT = 3


@dataclass(frozen=True)
class Budgets:
    degree_bound: int = 5
    length_bound: int = 3
    state_budget: int = STATE_BUDGET_DEFAULT
    conjugator_bound: int = 16


# ---------------------------------------------------------------------------
# finite quotients as permutation images


@dataclass(frozen=True)
class FiniteQuotient:
    """A homomorphism to S_degree, one permutation per generator."""

    group: FreeGroup
    degree: int
    perms: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.perms) != self.group.rank:
            raise DomainError("one permutation per generator required")
        for p in self.perms:
            if sorted(p) != list(range(self.degree)):
                raise DomainError("images must be permutations of the degree")

    def image_of(self, w: Word) -> Tuple[int, ...]:
        current = tuple(range(self.degree))
        for i, s in w.letters:
            p = self.perms[i] if s > 0 else _perm_inverse(self.perms[i])
            current = _perm_compose(p, current)
        return current

    def image_group(self) -> Set[Tuple[int, ...]]:
        identity = tuple(range(self.degree))
        seen = {identity}
        frontier = [identity]
        while frontier:
            g = frontier.pop()
            for p in self.perms:
                h = _perm_compose(p, g)
                if h not in seen:
                    seen.add(h)
                    frontier.append(h)
        return seen

    def is_transitive(self) -> bool:
        seen = {0}
        frontier = [0]
        while frontier:
            x = frontier.pop()
            for p in self.perms:
                for y in (p[x], p.index(x)):
                    if y not in seen:
                        seen.add(y)
                        frontier.append(y)
        return len(seen) == self.degree

    def conjugate_in_image(self, a: Tuple[int, ...], b: Tuple[int, ...]) -> bool:
        for h in self.image_group():
            if _perm_compose(_perm_compose(_perm_inverse(h), a), h) == b:
                return True
        return False

    def kernel_graph(self) -> SubgroupGraph:
        """Coset graph of the kernel: the Cayley graph of the image."""
        elements = sorted(self.image_group())
        index = {g: k for k, g in enumerate(elements)}
        fwd = [
            [index[_perm_compose(self.perms[i], g)] for g in elements]
            for i in range(self.group.rank)
        ]
        identity = tuple(range(self.degree))
        return _core_and_canonicalize(self.group, len(elements), fwd, index[identity])


def _perm_compose(p, q):
    """(p compose q)(x) == p[q[x]]."""
    return tuple(p[q[x]] for x in range(len(p)))


def _perm_inverse(p):
    out = [0] * len(p)
    for i, v in enumerate(p):
        out[v] = i
    return tuple(out)


def cycle_type(p: Tuple[int, ...]) -> Tuple[int, ...]:
    seen = [False] * len(p)
    sizes = []
    for start in range(len(p)):
        if seen[start]:
            continue
        size = 0
        x = start
        while not seen[x]:
            seen[x] = True
            x = p[x]
            size += 1
        sizes.append(size)
    return tuple(sorted(sizes))


# ---------------------------------------------------------------------------
# graphs with all vertex degrees >= 3 and their symmetries


@dataclass(frozen=True)
class RealizingGraph:
    """Multigraph as a sorted tuple of unoriented edges (u, v) with u <= v."""

    nvertices: int
    edges: Tuple[Tuple[int, int], ...]

    def betti(self) -> int:
        return len(self.edges) - self.nvertices + 1

    def degrees(self) -> List[int]:
        deg = [0] * self.nvertices
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def is_connected(self) -> bool:
        if self.nvertices == 0:
            return False
        seen = {0}
        frontier = [0]
        while frontier:
            x = frontier.pop()
            for u, v in self.edges:
                for a, b in ((u, v), (v, u)):
                    if a == x and b not in seen:
                        seen.add(b)
                        frontier.append(b)
        return len(seen) == self.nvertices

    def canonical(self) -> Tuple[Tuple[int, int], ...]:
        best = None
        for perm in itertools.permutations(range(self.nvertices)):
            relabeled = tuple(
                sorted(tuple(sorted((perm[u], perm[v]))) for u, v in self.edges)
            )
            if best is None or relabeled < best:
                best = relabeled
        return best  # type: ignore[return-value]

    def name(self) -> str:
        loops = sum(1 for u, v in self.edges if u == v)
        if self.nvertices == 1:
            return f"rose{len(self.edges)}"
        if loops == 0 and self.nvertices == 2:
            return f"theta{len(self.edges)}"
        if loops == 2 and self.nvertices == 2:
            return "dumbbell"
        return f"graph_v{self.nvertices}_e{len(self.edges)}"


def realizing_graphs(rank: int) -> List[RealizingGraph]:
    """Connected multigraphs, all degrees >= 3, first Betti number == rank."""
    if rank < 2:
        raise DomainError("realizing graphs need rank >= 2")
    found: Dict[tuple, RealizingGraph] = {}
    max_vertices = 2 * rank - 2
    for nv in range(1, max_vertices + 1):
        ne = nv + rank - 1
        slots = [(u, v) for u in range(nv) for v in range(u, nv)]
        for combo in itertools.combinations_with_replacement(slots, ne):
            graph = RealizingGraph(nv, tuple(sorted(combo)))
            if min(graph.degrees(), default=0) < 3:
                continue
            if not graph.is_connected():
                continue
            key = (nv, graph.canonical())
            if key not in found:
                found[key] = graph
        # normalize representatives to their canonical edge lists
    return [
        RealizingGraph(nv, edges)
        for (nv, edges) in sorted(found.keys())
    ]


@dataclass(frozen=True)
class GraphSymmetry:
    """Vertex permutation plus an orientation-aware bijection on edges."""

    vperm: Tuple[int, ...]
    # per edge index: (image edge index, flipped?)
    emap: Tuple[Tuple[int, bool], ...]


def graph_symmetries(graph: RealizingGraph) -> List[GraphSymmetry]:
    edges = graph.edges
    out = []
    by_pair: Dict[Tuple[int, int], List[int]] = {}
    for idx, (u, v) in enumerate(edges):
        by_pair.setdefault((u, v), []).append(idx)
    for vperm in itertools.permutations(range(graph.nvertices)):
        image_pairs = {}
        ok = True
        for pair, idxs in by_pair.items():
            u, v = pair
            target = tuple(sorted((vperm[u], vperm[v])))
            if target not in by_pair or len(by_pair[target]) != len(idxs):
                ok = False
                break
            image_pairs[pair] = target
        if not ok:
            continue
        per_pair_choices = []
        pair_list = sorted(by_pair)
        for pair in pair_list:
            idxs = by_pair[pair]
            targets = by_pair[image_pairs[pair]]
            u, v = pair
            choices = []
            for tperm in itertools.permutations(targets):
                if u == v:
                    # loops: each image may be traversed either way
                    for flips in itertools.product((False, True), repeat=len(idxs)):
                        choices.append(list(zip(tperm, flips)))
                else:
                    swapped = vperm[u] > vperm[v]
                    choices.append([(t, swapped) for t in tperm])
            per_pair_choices.append(choices)
        for combo in itertools.product(*per_pair_choices):
            emap: List[Tuple[int, bool]] = [None] * len(edges)  # type: ignore[list-item]
            for pair, assignment in zip(pair_list, combo):
                for src_idx, (dst_idx, flip) in zip(by_pair[pair], assignment):
                    emap[src_idx] = (dst_idx, flip)
            out.append(GraphSymmetry(vperm, tuple(emap)))
    return out


def symmetry_to_automorphism(graph: RealizingGraph, sym: GraphSymmetry, group: FreeGroup) -> FreeAut:
    """Spanning-tree marking: petal loops read through the symmetry.

    Different tree choices move the representative by an inner factor only.
    """
    # build a spanning tree over the non-loop edges
    tree: Dict[int, Optional[int]] = {0: None}
    tree_edges: Set[int] = set()
    changed = True
    while changed:
        changed = False
        for idx, (u, v) in enumerate(graph.edges):
            if u == v:
                continue
            for a, b in ((u, v), (v, u)):
                if a in tree and b not in tree:
                    tree[b] = idx
                    tree_edges.add(idx)
                    changed = True
    basis_edges = [idx for idx in range(len(graph.edges)) if idx not in tree_edges]
    assert len(basis_edges) == group.rank
    basis_index = {idx: k for k, idx in enumerate(basis_edges)}

    def tree_path(v: int) -> List[Tuple[int, bool]]:
        """Oriented tree edges from vertex 0 to v: (edge index, reversed?)."""
        path = []
        while tree[v] is not None:
            idx = tree[v]
            u, w = graph.edges[idx]
            if w == v:
                path.append((idx, False))
                v = u
            else:
                path.append((idx, True))
                v = w
        return list(reversed(path))

    def rho(oriented: Sequence[Tuple[int, bool]]) -> List[Tuple[int, int]]:
        letters = []
        for idx, reversed_ in oriented:
            if idx in basis_index:
                letters.append((basis_index[idx], -1 if reversed_ else 1))
        return letters

    def apply_sym(oriented: Sequence[Tuple[int, bool]]):
        out = []
        for idx, reversed_ in oriented:
            dst, flip = sym.emap[idx]
            out.append((dst, reversed_ != flip))
        return out

    conj = rho(tree_path(sym.vperm[0]))
    images = []
    for idx in basis_edges:
        u, v = graph.edges[idx]
        loop = tree_path(u) + [(idx, False)] + [(e, not r) for e, r in reversed(tree_path(v))]
        image_letters = rho(apply_sym(loop))
        word = group.word(
            [(i, -s) for i, s in reversed(conj)] + image_letters + conj
        )
        images.append(word)
    aut = is_automorphism(group, images)
    if aut is None:
        raise AssertionError("graph symmetry failed to give an automorphism")
    return aut


# ---------------------------------------------------------------------------
# torsion representatives


@dataclass(frozen=True)
class TorsionRep:
    aut: FreeAut
    outer_order: int
    provenance: str


def _gl_conjugacy_invariant(aut: FreeAut, order: int) -> tuple:
    """Dedup key: order, characteristic data and Smith forms of M^k - I."""
    mat = aut.abelianized()
    n = len(mat)
    invariants = [order]
    power = [row[:] for row in mat]
    for _ in range(order):
        delta = [
            [power[i][j] - (1 if i == j else 0) for j in range(n)] for i in range(n)
        ]
        d, _, _ = smith_normal_form(delta)
        invariants.append(tuple(abs(d[i][i]) for i in range(n)))
        power = [
            [sum(power[i][t] * mat[t][j] for t in range(n)) for j in range(n)]
            for i in range(n)
        ]
    return tuple(invariants)


def culler_reps(rank: int, rank_bound: int = RANK_BOUND_DEFAULT) -> List[TorsionRep]:
    """Representatives of every finite-order outer class, from graph symmetries.

    Rank 1 is special-cased (the outer group is Z/2); otherwise realizing
    graphs with minimum degree 3 are enumerated and their symmetry groups
    converted through spanning-tree markings.
    """
    if rank > rank_bound:
        raise ResourceError(f"culler_reps supports rank <= {rank_bound}")
    group = FreeGroup(rank)
    if rank == 1:
        flip = is_automorphism(group, [group.generator(0).inverse()])
        return [
            TorsionRep(FreeAut.identity(group), 1, "rose1"),
            TorsionRep(flip, 2, "rose1"),
        ]
    reps: Dict[tuple, TorsionRep] = {}
    for graph in realizing_graphs(rank):
        for sym in graph_symmetries(graph):
            aut = symmetry_to_automorphism(graph, sym, group)
            order = _symmetry_order(sym)
            outer = _outer_order_bounded(aut, order)
            key = _gl_conjugacy_invariant(aut, outer)
            if key not in reps:
                reps[key] = TorsionRep(aut, outer, graph.name())
    return sorted(reps.values(), key=lambda r: (r.outer_order, r.provenance))


def _symmetry_order(sym: GraphSymmetry) -> int:
    order = 1
    vperm = sym.vperm
    emap = sym.emap
    cur_v, cur_e = vperm, emap
    identity_v = tuple(range(len(vperm)))
    identity_e = tuple((i, False) for i in range(len(emap)))
    while cur_v != identity_v or cur_e != identity_e:
        cur_v = tuple(vperm[x] for x in cur_v)
        cur_e = tuple(
            (emap[e][0], emap[e][1] != f) for e, f in cur_e
        )
        order += 1
        if order > 10_000:
            raise AssertionError("symmetry order runaway")
    return order


def _outer_order_bounded(aut: FreeAut, symmetry_order: int) -> int:
    """The outer order divides the symmetry order; check its divisors."""
    divisors = [d for d in range(1, symmetry_order + 1) if symmetry_order % d == 0]
    for d in divisors:
        power = aut ** d
        if inner_conjugator(power) is not None:
            return d
    raise AssertionError("outer order must divide the symmetry order")


# ---------------------------------------------------------------------------
# separation search


@dataclass(frozen=True)
class SeparationWitness:
    word: Word
    quotient: FiniteQuotient
    image_word: Tuple[int, ...]
    image_aut_word: Tuple[int, ...]

    def cycle_types(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        return cycle_type(self.image_word), cycle_type(self.image_aut_word)


def separate(aut: FreeAut, degree_bound: int = 5, length_bound: int = 3):
    """First (word, quotient) with non-conjugate images of g and aut(g).

    Deterministic interleaving: increasing word length plus quotient degree,
    permutation tuples in lexicographic order.  Returns Undecided when the
    budget is exhausted.
    """
    group = aut.group
    words_by_length = {
        l: list(group.words_of_length(l)) for l in range(1, length_bound + 1)
    }
    for cost in range(3, length_bound + degree_bound + 1):
        for length in range(1, length_bound + 1):
            degree = cost - length
            if degree < 2 or degree > degree_bound:
                continue
            for perms in itertools.product(
                sorted(itertools.permutations(range(degree))), repeat=group.rank
            ):
                quotient = FiniteQuotient(group, degree, perms)
                for g in words_by_length[length]:
                    img = quotient.image_of(g)
                    img_a = quotient.image_of(aut.apply(g))
                    if img == img_a:
                        continue
                    if not quotient.conjugate_in_image(img, img_a):
                        return SeparationWitness(g, quotient, img, img_a)
    return Undecided(
        f"no separating quotient with degree <= {degree_bound}, length <= {length_bound}"
    )


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class CertifiedRep:
    rep: TorsionRep
    witness: SeparationWitness


@dataclass(frozen=True)
class CongruenceCertificate:
    group: FreeGroup
    kernel: SubgroupGraph
    entries: Tuple[CertifiedRep, ...]
    center_modulus: Optional[int] = None  # for F_k x Z certificates

    def verify(self) -> bool:
        """Re-check characteristicity and every non-conjugacy witness."""
        if not is_characteristic(self.kernel, nielsen_generators(self.group)):
            return False
        for entry in self.entries:
            q = entry.witness.quotient
            img = q.image_of(entry.witness.word)
            img_a = q.image_of(entry.rep.aut.apply(entry.witness.word))
            if img != entry.witness.image_word or img_a != entry.witness.image_aut_word:
                return False
            if q.conjugate_in_image(img, img_a):
                return False
            # the certified kernel must sit inside the witness kernel
            kernel_q = q.kernel_graph()
            for gen in self.kernel.generators():
                if not kernel_q.membership(gen):
                    return False
        return True

    def serialize(self) -> str:
        lines = [f"rank: {self.group.rank}"]
        if self.center_modulus is not None:
            lines.append(f"center modulus: {self.center_modulus}")
        lines.append("kernel:")
        lines.append(self.kernel.serialize().rstrip())
        for entry in self.entries:
            rep, wit = entry.rep, entry.witness
            lines.append(f"representative: order {rep.outer_order} via {rep.provenance}")
            lines.append(
                "  images: "
                + ", ".join(
                    f"{self.group.names[i]} -> {img.format()}"
                    for i, img in enumerate(rep.aut.images)
                )
            )
            lines.append(f"  witness word: {wit.word.format()}")
            lines.append(f"  quotient degree: {wit.quotient.degree}")
            lines.append(
                "  quotient perms: "
                + "; ".join(str(list(p)) for p in wit.quotient.perms)
            )
            ct1, ct2 = wit.cycle_types()
            lines.append(f"  images: {list(wit.image_word)} vs {list(wit.image_aut_word)}")
            lines.append(f"  cycle types: {ct1} vs {ct2}")
        return "\n".join(lines) + "\n"


def characteristic_closure(
    graph: SubgroupGraph, state_budget: int = STATE_BUDGET_DEFAULT
) -> SubgroupGraph:
    """Intersection of the Aut-orbit of a finite-index subgroup.

    The orbit of a finite-index subgroup under the Nielsen generators is
    finite; the intersection is the largest characteristic subgroup inside
    all of its images.
    """
    auts = nielsen_generators(graph.group)
    orbit = {graph}
    frontier = [graph]
    while frontier:
        g = frontier.pop()
        for aut in auts:
            image = g.image_under(aut)
            if image not in orbit:
                if len(orbit) > 512:
                    raise ResourceError("Aut-orbit of the kernel exceeded 512 subgroups")
                orbit.add(image)
                frontier.append(image)
    result = None
    for g in sorted(orbit, key=lambda x: (x.nstates, x.fwd)):
        result = g if result is None else result.intersect(g, state_budget=state_budget)
    return result


def certify(rank: int, budgets: Budgets = Budgets()):
    """Run culler_reps, separate each nontrivial class, and assemble a
    verified characteristic kernel.  Undecided results propagate."""
    group = FreeGroup(rank)
    reps = culler_reps(rank)
    entries: List[CertifiedRep] = []
    kernels: List[SubgroupGraph] = []
    for rep in reps:
        if rep.outer_order == 1:
            continue
        witness = separate(rep.aut, budgets.degree_bound, budgets.length_bound)
        if isinstance(witness, Undecided):
            return Undecided(f"representative of order {rep.outer_order}: {witness.reason}")
        entries.append(CertifiedRep(rep, witness))
        kernels.append(witness.quotient.kernel_graph())
    if not kernels:
        kernel = fold(group, group.generators())
    else:
        merged = kernels[0]
        for k in kernels[1:]:
            merged = merged.intersect(k, state_budget=budgets.state_budget)
        kernel = characteristic_closure(merged, budgets.state_budget)
    certificate = CongruenceCertificate(group, kernel, tuple(entries))
    if not certificate.verify():
        return Undecided("assembled certificate failed verification")
    return certificate


# ---------------------------------------------------------------------------
# Z^2 specialization


@dataclass(frozen=True)
class ZSquareCertificate:
    modulus: int
    representatives: Tuple[Tuple[Tuple[int, ...], ...], ...]

    def verify(self) -> bool:
        for m in self.representatives:
            reduced = tuple(
                tuple(x % self.modulus for x in row) for row in m
            )
            if reduced == ((1, 0), (0, 1)):
                return False
        return True


def gl2_finite_order_classes(entry_bound: int = 2) -> List[Tuple[Tuple[int, ...], ...]]:
    """Bounded-entry enumeration of finite-order elements of GL_2(Z), one per
    conjugacy invariant (order, trace, det)."""
    classes: Dict[tuple, Tuple[Tuple[int, ...], ...]] = {}
    rng = range(-entry_bound, entry_bound + 1)
    for a, b, c, d in itertools.product(rng, repeat=4):
        det = a * d - b * c
        if det not in (1, -1):
            continue
        m = ((a, b), (c, d))
        order = _matrix_order(m, 12)
        if order is None:
            continue
        key = (order, a + d, det, _smith_key(m))
        if key not in classes:
            classes[key] = m
    return sorted(classes.values())


def _matrix_order(m, bound):
    identity = ((1, 0), (0, 1))
    cur = m
    for k in range(1, bound + 1):
        if cur == identity:
            return k
        cur = (
            (
                cur[0][0] * m[0][0] + cur[0][1] * m[1][0],
                cur[0][0] * m[0][1] + cur[0][1] * m[1][1],
            ),
            (
                cur[1][0] * m[0][0] + cur[1][1] * m[1][0],
                cur[1][0] * m[0][1] + cur[1][1] * m[1][1],
            ),
        )
    return None


def _smith_key(m):
    delta = [[m[0][0] - 1, m[0][1]], [m[1][0], m[1][1] - 1]]
    d, _, _ = smith_normal_form(delta)
    return tuple(abs(d[i][i]) for i in range(2))


def certify_zsquare() -> ZSquareCertificate:
    """Kernel 3 Z^2: Minkowski's congruence separates all finite order."""
    reps = tuple(m for m in gl2_finite_order_classes() if m != ((1, 0), (0, 1)))
    cert = ZSquareCertificate(3, reps)
    if not cert.verify():
        raise AssertionError("3 Z^2 failed to separate a finite-order class")
    return cert


# ---------------------------------------------------------------------------
# F_k x Z


def is_infinite_order_center_fixing(psi_images: Sequence[Word], lam: Sequence[int]) -> bool:
    """h -> psi(h) c^{lambda(h)}, c -> c with psi inner and lambda != 0 has
    infinite outer order: the abelianized lambda row grows linearly under
    powers and inner automorphisms cannot cancel it."""
    group = psi_images[0].group
    psi = is_automorphism(group, list(psi_images))
    if psi is None:
        raise DomainError("psi images do not define an automorphism")
    if inner_conjugator(psi) is None:
        raise DomainError("analysis applies to inner psi only")
    return any(lam)


def certify_product(rank: int, budgets: Budgets = Budgets()):
    """Certificate for F_rank x Z: the free-part certificate combined with a
    center quotient of order 3 that separates the orientation flip."""
    if rank < 2:
        raise DomainError("rank 1 products are Z^2; use certify_zsquare")
    base = certify(rank, budgets)
    if isinstance(base, Undecided):
        return base
    return CongruenceCertificate(base.group, base.kernel, base.entries, center_modulus=3)
