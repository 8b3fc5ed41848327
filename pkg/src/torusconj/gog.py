"""Graphs of groups over a closed family of vertex/edge group kinds.

Group slots are Z, Z^2, F_k, or F_k x Z, uniformly represented as a free
part with an optional central coordinate.  Oriented edges are named `e` and
`e~`; conjugation is a^g == g^-1 a g throughout, matching the free-group
convention.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import DomainError, FormatError
from .freegroup import (
    BasisExpresser,
    FreeAut,
    FreeGroup,
    Word,
    canonical_conjugate,
    fold,
    is_automorphism,
    primitive_root,
    root_power,
)

# ---------------------------------------------------------------------------
# group slots and their elements


@dataclass(frozen=True)
class GroupSlot:
    """One of Z, Z^2, F_k, F_k x Z: a free part plus an optional center."""

    free_rank: int
    has_center: bool

    def __post_init__(self):
        if self.free_rank < 1:
            raise DomainError("slot free rank must be >= 1")

    @property
    def free_group(self) -> FreeGroup:
        return FreeGroup(tuple(f"x{i}" for i in range(self.free_rank)))

    @property
    def kind(self) -> str:
        if self.has_center:
            return "Z2" if self.free_rank == 1 else "fxz"
        return "Z" if self.free_rank == 1 else "free"

    @property
    def ngens(self) -> int:
        return self.free_rank + (1 if self.has_center else 0)

    def gen_names(self) -> List[str]:
        names = list(self.free_group.names)
        if self.has_center:
            names.append("c")
        return names

    def identity(self) -> "SlotElement":
        return SlotElement(self, self.free_group.identity(), 0)

    def element(self, word: Word, center: int = 0) -> "SlotElement":
        return SlotElement(self, word, center)

    def generator(self, i: int) -> "SlotElement":
        if i < self.free_rank:
            return SlotElement(self, self.free_group.generator(i), 0)
        if self.has_center and i == self.free_rank:
            return SlotElement(self, self.free_group.identity(), 1)
        raise DomainError(f"slot has no generator {i}")

    def generators(self) -> List["SlotElement"]:
        return [self.generator(i) for i in range(self.ngens)]

    def parse(self, text: str) -> "SlotElement":
        """`w * c^k`, `c^k`, or a bare free-part word; `1` is the identity."""
        text = text.strip()
        center = 0
        parts = [p.strip() for p in text.split("*")]
        word_parts = []
        for part in parts:
            if part.startswith("c^") or part == "c":
                if not self.has_center:
                    raise FormatError("slot has no center")
                center += 1 if part == "c" else int(part[2:])
            else:
                word_parts.append(part)
        word = self.free_group.parse(" ".join(word_parts))
        return SlotElement(self, word, center)

    @staticmethod
    def from_kind(kind: str, rank: int = 1) -> "GroupSlot":
        kind = kind.strip().lower()
        if kind == "z":
            return GroupSlot(1, False)
        if kind == "z2":
            return GroupSlot(1, True)
        if kind == "free":
            return GroupSlot(rank, False)
        if kind == "fxz":
            return GroupSlot(rank, True)
        raise FormatError(f"unknown slot kind {kind!r}")


@dataclass(frozen=True)
class SlotElement:
    """(free word, center exponent); the center generator commutes with all."""

    slot: GroupSlot
    word: Word
    center: int = 0

    def __post_init__(self):
        if self.center and not self.slot.has_center:
            raise DomainError("center exponent in a centerless slot")
        if self.slot.free_rank == 1 and self.slot.has_center:
            pass  # Z^2: both coordinates commute; nothing to normalize
        if self.word.group != self.slot.free_group:
            raise DomainError("free part over the wrong group")

    def __mul__(self, other: "SlotElement") -> "SlotElement":
        if self.slot != other.slot:
            raise DomainError("elements of different slots")
        word = self.word * other.word
        if self.slot.kind == "Z2":
            # abelian: collapse the free part to a single exponent
            word = _z2_normalize(self.slot, word)
        return SlotElement(self.slot, word, self.center + other.center)

    def inverse(self) -> "SlotElement":
        return SlotElement(self.slot, self.word.inverse(), -self.center)

    def conjugate(self, g: "SlotElement") -> "SlotElement":
        """g^-1 * self * g; the center coordinate is untouched."""
        return SlotElement(self.slot, self.word.conjugate(g.word), self.center)

    def is_identity(self) -> bool:
        return self.word.is_identity() and self.center == 0

    def is_central(self) -> bool:
        if self.slot.kind in ("Z", "Z2"):
            return True
        return self.word.is_identity()

    def abelianized(self) -> Tuple[int, ...]:
        vec = [0] * self.slot.ngens
        for i, s in self.word.letters:
            vec[i] += s
        if self.slot.has_center:
            vec[-1] += self.center
        return tuple(vec)

    def format(self) -> str:
        if self.is_identity():
            return "1"
        parts = []
        if not self.word.is_identity():
            parts.append(self.word.format())
        if self.center:
            parts.append("c" if self.center == 1 else f"c^{self.center}")
        return " * ".join(parts)

    def __repr__(self):
        return f"<{self.format()}>"


def _z2_normalize(slot: GroupSlot, word: Word) -> Word:
    exp = sum(s for _, s in word.letters)
    return slot.free_group.generator(0) ** exp if exp else slot.free_group.identity()


def slot_is_conjugate(a: SlotElement, b: SlotElement) -> Tuple[bool, Optional[SlotElement]]:
    """Conjugacy in the slot group, with witness g so that a^g == b."""
    if a.slot != b.slot:
        raise DomainError("elements of different slots")
    if a.center != b.center:
        return False, None
    if a.slot.kind in ("Z", "Z2"):
        return (a == b), (a.slot.identity() if a == b else None)
    from .freegroup import is_conjugate

    ok, w = is_conjugate(a.word, b.word)
    if not ok:
        return False, None
    return True, SlotElement(a.slot, w, 0)


def slot_centralizer_of_subgroup(slot: GroupSlot, gens: Sequence[SlotElement]) -> List[SlotElement]:
    """Generators of the centralizer of <gens> in the slot group."""
    free_parts = [g.word for g in gens if not g.word.is_identity()]
    if slot.kind in ("Z", "Z2"):
        return slot.generators()
    out: List[SlotElement] = []
    if not free_parts:
        # subgroup inside the center: centralizer is everything
        return slot.generators()
    roots = [primitive_root(w) for w in free_parts]
    common = roots[0]
    for r in roots[1:]:
        if r != common and r != common.inverse():
            common = None
            break
    if common is not None:
        out.append(SlotElement(slot, common, 0))
    if slot.has_center:
        out.append(slot.generator(slot.free_rank))
    return out


# ---------------------------------------------------------------------------
# homomorphisms between slots


@dataclass(frozen=True)
class SlotHom:
    """A homomorphism given by generator images (free gens, then center)."""

    src: GroupSlot
    dst: GroupSlot
    images: Tuple[SlotElement, ...]

    def __post_init__(self):
        if len(self.images) != self.src.ngens:
            raise DomainError("wrong number of generator images")
        for img in self.images:
            if img.slot != self.dst:
                raise DomainError("image in the wrong slot")
        if self.src.has_center:
            c_img = self.images[-1]
            for img in self.images[: self.src.free_rank]:
                if not _commute(c_img, img):
                    raise DomainError("center image fails to commute with the images")
        if self.src.kind == "Z2" and not _commute(self.images[0], self.images[1]):
            raise DomainError("images of commuting generators fail to commute")

    def apply(self, x: SlotElement) -> SlotElement:
        if x.slot != self.src:
            raise DomainError("element from the wrong slot")
        out = self.dst.identity()
        for i, s in x.word.letters:
            img = self.images[i]
            out = out * (img if s > 0 else img.inverse())
        if x.center:
            out = out * _pow_slot(self.images[-1], x.center)
        return out

    def apply_word_part(self, w: Word) -> SlotElement:
        return self.apply(SlotElement(self.src, w, 0))


def _commute(a: SlotElement, b: SlotElement) -> bool:
    return a * b == b * a


def _pow_slot(x: SlotElement, n: int) -> SlotElement:
    out = x.slot.identity()
    step = x if n >= 0 else x.inverse()
    for _ in range(abs(n)):
        out = out * step
    return out


def validate_injection(hom: SlotHom) -> None:
    """Reject generator images that cannot define an injective map of the kind.

    Supported configurations mirror the closed slot enumeration; anything
    outside raises DomainError.
    """
    src, dst = hom.src, hom.dst
    if src.kind == "Z":
        if hom.images[0].is_identity():
            raise DomainError("Z edge group maps to the identity")
        return
    free_words = [hom.images[i].word for i in range(src.free_rank)]
    if src.kind == "Z2":
        v1 = _cyclic_coordinates(dst, hom.images[0], hom.images[1])
        if v1 is None:
            raise DomainError("Z2 edge group image is not rank two abelian")
        (m1, c1), (m2, c2) = v1
        if m1 * c2 - m2 * c1 == 0:
            raise DomainError("Z2 edge group image is degenerate")
        return
    # free or fxz source: the free images must freely generate their span
    nontrivial = [w for w in free_words]
    if any(w.is_identity() for w in nontrivial):
        raise DomainError("free edge generator maps to a central element")
    graph = fold(dst.free_group, nontrivial)
    if graph.rank() != src.free_rank:
        raise DomainError("free part of the edge group does not embed")
    if src.kind == "fxz":
        c_img = hom.images[-1]
        if not c_img.word.is_identity() or c_img.center == 0:
            raise DomainError("unsupported center image for an fxz edge group")


def _cyclic_coordinates(dst, g1: SlotElement, g2: SlotElement):
    """Coordinates of two commuting elements over (common root, center)."""
    if not _commute(g1, g2):
        return None
    words = [g for g in (g1.word, g2.word) if not g.is_identity()]
    if not words:
        return ((0, g1.center), (0, g2.center))
    root = primitive_root(words[0])

    def coord(g: SlotElement):
        if g.word.is_identity():
            return (0, g.center)
        r, n = root_power(g.word)
        if r == root:
            return (n, g.center)
        if r == root.inverse():
            return (-n, g.center)
        return None

    c1, c2 = coord(g1), coord(g2)
    if c1 is None or c2 is None:
        return None
    return (c1, c2)


def hom_preimage(hom: SlotHom, y: SlotElement) -> Optional[SlotElement]:
    """Solve hom(x) == y for injective homs of the supported configurations."""
    src, dst = hom.src, hom.dst
    if y.slot != dst:
        raise DomainError("element from the wrong slot")
    if src.kind == "Z":
        img = hom.images[0]
        if not img.word.is_identity():
            root, n = root_power(img.word)
            if y.word.is_identity():
                return src.identity() if y.is_identity() else None
            ry, ny = root_power(y.word)
            if ry == root:
                k, rem = divmod(ny, n)
            elif ry == root.inverse():
                k, rem = divmod(-ny, n)
            else:
                return None
            if rem:
                return None
        else:
            if not y.word.is_identity() or img.center == 0:
                return None
            k, rem = divmod(y.center, img.center)
            if rem:
                return None
        cand = src.generator(0)
        return _check_preimage(hom, _pow_slot(cand, k), y)
    if src.kind == "Z2":
        coords = _cyclic_coordinates(dst, hom.images[0], hom.images[1])
        if coords is None:
            return None
        (m1, c1), (m2, c2) = coords
        det = m1 * c2 - m2 * c1
        ty = _target_coordinates(dst, hom, y)
        if ty is None:
            return None
        p, q = ty
        # solve (a, b) with a*(m1,c1) + b*(m2,c2) == (p,q)
        num_a = p * c2 - q * m2
        num_b = q * m1 - p * c1
        if num_a % det or num_b % det:
            return None
        a, b = num_a // det, num_b // det
        cand = _pow_slot(src.generator(0), a) * _pow_slot(src.generator(1), b)
        return _check_preimage(hom, cand, y)
    # free / fxz
    basis = [hom.images[i].word for i in range(src.free_rank)]
    expresser = BasisExpresser(dst.free_group, basis)
    sym = expresser.express(y.word)
    if sym is None:
        return None
    word = Word(src.free_group, sym.letters)
    if src.kind == "free":
        return _check_preimage(hom, SlotElement(src, word, 0), y)
    c_img = hom.images[-1]
    partial = hom.apply(SlotElement(src, word, 0))
    residual = y.center - partial.center
    k, rem = divmod(residual, c_img.center)
    if rem:
        return None
    return _check_preimage(hom, SlotElement(src, word, k), y)


def _target_coordinates(dst, hom: SlotHom, y: SlotElement):
    words = [g.word for g in (hom.images[0], hom.images[1]) if not g.word.is_identity()]
    if not words:
        return (0, y.center) if y.word.is_identity() else None
    root = primitive_root(words[0])
    if y.word.is_identity():
        return (0, y.center)
    ry, ny = root_power(y.word)
    if ry == root:
        return (ny, y.center)
    if ry == root.inverse():
        return (-ny, y.center)
    return None


def _check_preimage(hom: SlotHom, cand: SlotElement, y: SlotElement) -> Optional[SlotElement]:
    return cand if hom.apply(cand) == y else None


# ---------------------------------------------------------------------------
# slot isomorphisms


@dataclass(frozen=True)
class SlotIso:
    """An isomorphism between slots of the same kind."""

    src: GroupSlot
    dst: GroupSlot
    images: Tuple[SlotElement, ...]

    def __post_init__(self):
        if (self.src.free_rank, self.src.has_center) != (self.dst.free_rank, self.dst.has_center):
            raise DomainError("slot isomorphism between different kinds")
        if len(self.images) != self.src.ngens:
            raise DomainError("wrong number of generator images")
        kind = self.src.kind
        if kind == "Z":
            w = self.images[0].word
            if len(w) != 1:
                raise DomainError("Z slot map is not invertible")
        elif kind == "Z2":
            m = self.matrix()
            if abs(m[0][0] * m[1][1] - m[0][1] * m[1][0]) != 1:
                raise DomainError("Z2 slot map is not invertible")
        else:
            free = [img.word for img in self.images[: self.src.free_rank]]
            if is_automorphism(self.dst.free_group, free) is None:
                raise DomainError("free part is not an automorphism")
            if kind == "fxz":
                c_img = self.images[-1]
                if not c_img.word.is_identity() or abs(c_img.center) != 1:
                    raise DomainError("center must map to a center generator")

    @staticmethod
    def identity(slot: GroupSlot) -> "SlotIso":
        return SlotIso(slot, slot, tuple(slot.generators()))

    def as_hom(self) -> SlotHom:
        return SlotHom(self.src, self.dst, self.images)

    def apply(self, x: SlotElement) -> SlotElement:
        return self.as_hom().apply(x)

    def matrix(self) -> List[List[int]]:
        """For Z2 slots: columns are generator images over (x0, c)."""
        cols = [img.abelianized() for img in self.images]
        return [[cols[j][i] for j in range(len(cols))] for i in range(2)]

    def compose(self, other: "SlotIso") -> "SlotIso":
        """(self.compose(other))(x) == self(other(x))."""
        if other.dst != self.src:
            raise DomainError("slot isomorphisms do not chain")
        return SlotIso(other.src, self.dst, tuple(self.apply(img) for img in other.images))

    def inverse(self) -> "SlotIso":
        kind = self.src.kind
        if kind == "Z":
            return SlotIso(self.dst, self.src, (SlotElement(self.src, Word(self.src.free_group, self.images[0].word.letters), 0),))
        if kind == "Z2":
            m = self.matrix()
            det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
            inv = [[m[1][1] * det, -m[0][1] * det], [-m[1][0] * det, m[0][0] * det]]
            gens = []
            for j in range(2):
                word = self.src.free_group.generator(0) ** inv[0][j] if inv[0][j] else self.src.free_group.identity()
                gens.append(SlotElement(self.src, word, inv[1][j]))
            return SlotIso(self.dst, self.src, tuple(gens))
        free_words = [img.word for img in self.images[: self.src.free_rank]]
        aut = is_automorphism(self.dst.free_group, free_words)
        assert aut is not None
        lam = [img.center for img in self.images[: self.src.free_rank]]
        if kind == "free":
            images = tuple(
                SlotElement(self.src, Word(self.src.free_group, w.letters), 0)
                for w in aut.inverse_images
            )
            return SlotIso(self.dst, self.src, images)
        eps = self.images[-1].center
        inv_images = []
        for i in range(self.src.free_rank):
            w = aut.inverse_images[i]
            lam_w = sum(s * lam[j] for j, s in w.letters)
            inv_images.append(
                SlotElement(self.src, Word(self.src.free_group, w.letters), -eps * lam_w)
            )
        inv_images.append(SlotElement(self.src, self.src.free_group.identity(), eps))
        return SlotIso(self.dst, self.src, tuple(inv_images))

    def is_identity(self) -> bool:
        return self.src == self.dst and all(
            img == self.src.generator(i) for i, img in enumerate(self.images)
        )


def ad_iso(g: SlotElement) -> SlotIso:
    """Conjugation x -> g^-1 x g as a slot automorphism."""
    slot = g.slot
    return SlotIso(slot, slot, tuple(x.conjugate(g) for x in slot.generators()))


# ---------------------------------------------------------------------------
# graphs and graphs of groups


def bar(edge: str) -> str:
    return edge[:-1] if edge.endswith("~") else edge + "~"


def unoriented(edge: str) -> str:
    return edge[:-1] if edge.endswith("~") else edge


class GraphOfGroups:
    """Finite graph with slot-valued vertex and edge groups and injections."""

    def __init__(
        self,
        vertices: Sequence[str],
        edge_ends: Dict[str, Tuple[str, str]],
        vertex_slots: Dict[str, GroupSlot],
        edge_slots: Dict[str, GroupSlot],
        injections: Dict[str, SlotHom],
    ):
        self.vertices = tuple(sorted(vertices))
        self.edge_names = tuple(sorted(edge_ends))
        self.edge_ends = dict(edge_ends)
        self.vertex_slots = dict(vertex_slots)
        self.edge_slots = dict(edge_slots)
        self.injections = dict(injections)
        self._validate()

    def _validate(self):
        for e, (u, v) in self.edge_ends.items():
            if e.endswith("~"):
                raise DomainError("edge names must be the canonical orientation")
            if u not in self.vertex_slots or v not in self.vertex_slots:
                raise DomainError(f"edge {e} touches an unknown vertex")
        for v in self.vertices:
            if v not in self.vertex_slots:
                raise DomainError(f"vertex {v} has no slot")
        for e in self.edge_names:
            for oe in (e, bar(e)):
                hom = self.injections.get(oe)
                if hom is None:
                    raise DomainError(f"missing injection for {oe}")
                if hom.src != self.edge_slots[e]:
                    raise DomainError(f"injection source mismatch on {oe}")
                if hom.dst != self.vertex_slots[self.term(oe)]:
                    raise DomainError(f"injection target mismatch on {oe}")
                validate_injection(hom)

    def oriented_edges(self) -> List[str]:
        out = []
        for e in self.edge_names:
            out.extend((e, bar(e)))
        return out

    def init(self, edge: str) -> str:
        e = unoriented(edge)
        u, v = self.edge_ends[e]
        return u if edge == e else v

    def term(self, edge: str) -> str:
        e = unoriented(edge)
        u, v = self.edge_ends[e]
        return v if edge == e else u

    def vslot(self, v: str) -> GroupSlot:
        return self.vertex_slots[v]

    def eslot(self, edge: str) -> GroupSlot:
        return self.edge_slots[unoriented(edge)]

    def injection(self, edge: str) -> SlotHom:
        return self.injections[edge]

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        seen = {self.vertices[0]}
        queue = [self.vertices[0]]
        while queue:
            v = queue.pop()
            for e in self.oriented_edges():
                if self.init(e) == v and self.term(e) not in seen:
                    seen.add(self.term(e))
                    queue.append(self.term(e))
        return len(seen) == len(self.vertices)

    def spanning_tree(self) -> List[str]:
        """BFS spanning tree, deterministic: sorted vertices and edges."""
        if not self.is_connected():
            raise DomainError("graph of groups is not connected")
        seen = {self.vertices[0]}
        tree = []
        frontier = [self.vertices[0]]
        while frontier:
            nxt = []
            for v in sorted(frontier):
                for e in self.oriented_edges():
                    if self.init(e) == v and self.term(e) not in seen:
                        seen.add(self.term(e))
                        tree.append(unoriented(e))
                        nxt.append(self.term(e))
            frontier = nxt
        return tree

    def __eq__(self, other):
        return (
            isinstance(other, GraphOfGroups)
            and self.vertices == other.vertices
            and self.edge_ends == other.edge_ends
            and self.vertex_slots == other.vertex_slots
            and self.edge_slots == other.edge_slots
            and self.injections == other.injections
        )

    def __repr__(self):
        return f"<GraphOfGroups V={list(self.vertices)} E={list(self.edge_names)}>"


# ---------------------------------------------------------------------------
# Bass words


class BassWord:
    """Alternating g0 e1 g1 ... en gn with the path condition t(ej) == i(ej+1)."""

    __slots__ = ("gog", "start", "parts")

    def __init__(self, gog: GraphOfGroups, start: str, parts: Sequence):
        self.gog = gog
        self.start = start
        parts = tuple(parts)
        if len(parts) % 2 == 0:
            raise DomainError("Bass word must alternate g0 e1 g1 ... gn")
        at = start
        for k, item in enumerate(parts):
            if k % 2 == 0:
                if not isinstance(item, SlotElement) or item.slot != gog.vslot(at):
                    raise DomainError(f"element at position {k} is not in G_{at}")
            else:
                if gog.init(item) != at:
                    raise DomainError(f"edge {item} does not start at {at}")
                at = gog.term(item)
        self.parts = parts

    @property
    def end(self) -> str:
        at = self.start
        for k, item in enumerate(self.parts):
            if k % 2 == 1:
                at = self.gog.term(item)
        return at

    def is_loop(self) -> bool:
        return self.start == self.end

    def edges(self) -> List[str]:
        return [item for k, item in enumerate(self.parts) if k % 2 == 1]

    def edge_exponent(self, edge: str) -> int:
        """Signed crossing count of the canonical orientation of `edge`."""
        e = unoriented(edge)
        count = 0
        for crossed in self.edges():
            if crossed == e:
                count += 1
            elif crossed == bar(e):
                count -= 1
        return count

    def reduced(self) -> "BassWord":
        """Collapse e, i_e(h), e~ patterns eagerly left to right."""
        parts = list(self.parts)
        changed = True
        while changed:
            changed = False
            for k in range(1, len(parts) - 2, 2):
                e, g, e2 = parts[k], parts[k + 1], parts[k + 2]
                if e2 != bar(e):
                    continue
                h = hom_preimage(self.gog.injection(e), g)
                if h is None:
                    continue
                merged = parts[k - 1] * self.gog.injection(bar(e)).apply(h) * parts[k + 3]
                parts[k - 1 : k + 4] = [merged]
                changed = True
                break
        return BassWord(self.gog, self.start, parts)

    def __eq__(self, other):
        if not isinstance(other, BassWord):
            return False
        a, b = self.reduced(), other.reduced()
        return a.gog == b.gog and a.start == b.start and a.parts == b.parts

    def __mul__(self, other: "BassWord") -> "BassWord":
        if self.end != other.start:
            raise DomainError("Bass words do not compose")
        merged = self.parts[-1] * other.parts[0]
        return BassWord(self.gog, self.start, self.parts[:-1] + (merged,) + other.parts[1:])

    def format(self) -> str:
        out = [self.start, ":"]
        for k, item in enumerate(self.parts):
            out.append(f"({item.format()})" if k % 2 == 0 else item)
        return " ".join(out)

    @staticmethod
    def parse(gog: GraphOfGroups, text: str) -> "BassWord":
        head, _, body = text.partition(":")
        start = head.strip()
        if start not in gog.vertex_slots:
            raise FormatError(f"unknown start vertex {start!r}")
        tokens = []
        pos = 0
        body = body.strip()
        while pos < len(body):
            ch = body[pos]
            if ch.isspace():
                pos += 1
                continue
            if ch == "(":
                close = body.index(")", pos)
                tokens.append(("elem", body[pos + 1 : close]))
                pos = close + 1
            else:
                end = pos
                while end < len(body) and not body[end].isspace():
                    end += 1
                tokens.append(("edge", body[pos:end]))
                pos = end
        parts = []
        at = start
        expect_elem = True
        for kind, value in tokens:
            if expect_elem and kind != "elem":
                parts.append(gog.vslot(at).identity())
                expect_elem = False
            if kind == "elem":
                parts.append(gog.vslot(at).parse(value))
                expect_elem = False
            else:
                if value not in gog.injections:
                    raise FormatError(f"unknown edge {value!r}")
                parts.append(value)
                at = gog.term(value)
                expect_elem = True
        if expect_elem or not parts:
            parts.append(gog.vslot(at).identity())
        return BassWord(gog, start, parts)

    def __repr__(self):
        return f"<BassWord {self.format()}>"


def identity_loop(gog: GraphOfGroups, vertex: str) -> BassWord:
    return BassWord(gog, vertex, (gog.vslot(vertex).identity(),))


# ---------------------------------------------------------------------------
# graph-of-groups morphisms


class BassDiagramError(DomainError):
    def __init__(self, edge: str, generator: SlotElement, lhs: SlotElement, rhs: SlotElement):
        self.edge = edge
        self.generator = generator
        super().__init__(
            f"Bass diagram fails at edge {edge} on generator {generator.format()}: "
            f"{lhs.format()} != {rhs.format()}"
        )


@dataclass(frozen=True)
class GoGMorphism:
    """(phi_X, (phi_v), (phi_e), (gamma_e)) between graphs of groups."""

    domain: GraphOfGroups
    codomain: GraphOfGroups
    vertex_map: Dict[str, str]
    edge_map: Dict[str, str]  # oriented, bar-equivariant
    vertex_isos: Dict[str, SlotIso]
    edge_isos: Dict[str, SlotIso]  # per unoriented edge
    gammas: Dict[str, SlotElement]  # per oriented edge, in G_{phi(t(e))}

    def graph_map(self, edge_or_vertex: str) -> str:
        if edge_or_vertex in self.vertex_map:
            return self.vertex_map[edge_or_vertex]
        return self.edge_map[edge_or_vertex]

    def canonical_key(self):
        vm = tuple(sorted(self.vertex_map.items()))
        em = tuple(sorted(self.edge_map.items()))
        vi = tuple(
            (v, tuple((img.word.letters, img.center) for img in iso.images))
            for v, iso in sorted(self.vertex_isos.items())
        )
        ga = tuple(
            (e, g.word.letters, g.center) for e, g in sorted(self.gammas.items())
        )
        return (vm, em, vi, ga)

    def __hash__(self):
        return hash(self.canonical_key())

    def __eq__(self, other):
        if not isinstance(other, GoGMorphism):
            return False
        return (
            self.domain == other.domain
            and self.codomain == other.codomain
            and self.vertex_map == other.vertex_map
            and self.edge_map == other.edge_map
            and self.vertex_isos == other.vertex_isos
            and self.edge_isos == other.edge_isos
            and self.gammas == other.gammas
        )


def validate(
    gog: GraphOfGroups,
    cand: dict,
    codomain: Optional[GraphOfGroups] = None,
) -> GoGMorphism:
    """Check the Bass diagram on every oriented edge and generator.

    `cand` has keys vertex_map, edge_map, vertex_isos, edge_isos, gammas.
    Raises BassDiagramError naming the first violated edge and generator.
    """
    codomain = codomain if codomain is not None else gog
    vertex_map = dict(cand["vertex_map"])
    edge_map = dict(cand["edge_map"])
    vertex_isos = dict(cand["vertex_isos"])
    edge_isos = dict(cand["edge_isos"])
    gammas = dict(cand["gammas"])

    _check_graph_map(gog, codomain, vertex_map, edge_map)
    for v in gog.vertices:
        iso = vertex_isos[v]
        if iso.src != gog.vslot(v) or iso.dst != codomain.vslot(vertex_map[v]):
            raise DomainError(f"vertex iso at {v} has wrong slots")
    for e in gog.edge_names:
        iso = edge_isos[e]
        if iso.src != gog.eslot(e) or iso.dst != codomain.eslot(edge_map[e]):
            raise DomainError(f"edge iso at {e} has wrong slots")
    for oe in gog.oriented_edges():
        gamma = gammas[oe]
        target_vertex = codomain.term(edge_map[oe])
        if gamma.slot != codomain.vslot(target_vertex):
            raise DomainError(f"gamma at {oe} lives in the wrong vertex group")
        phi_t = vertex_isos[gog.term(oe)]
        phi_e = edge_isos[unoriented(oe)]
        inj = gog.injection(oe)
        inj_img = codomain.injection(edge_map[oe])
        for gen in gog.eslot(oe).generators():
            lhs = phi_t.apply(inj.apply(gen))
            rhs = inj_img.apply(phi_e.apply(gen)).conjugate(gamma)
            if lhs != rhs:
                raise BassDiagramError(oe, gen, lhs, rhs)
    return GoGMorphism(gog, codomain, vertex_map, edge_map, vertex_isos, edge_isos, gammas)


def _check_graph_map(gog, codomain, vertex_map, edge_map):
    if sorted(vertex_map) != list(gog.vertices):
        raise DomainError("vertex map keys mismatch")
    if sorted(vertex_map.values()) != list(codomain.vertices):
        raise DomainError("vertex map is not a bijection")
    oriented = set(gog.oriented_edges())
    if set(edge_map) != oriented:
        raise DomainError("edge map keys mismatch")
    if sorted(set(edge_map.values())) != sorted(codomain.oriented_edges()):
        raise DomainError("edge map is not a bijection")
    for oe in oriented:
        if edge_map[bar(oe)] != bar(edge_map[oe]):
            raise DomainError(f"edge map is not bar-equivariant at {oe}")
        if codomain.init(edge_map[oe]) != vertex_map[gog.init(oe)]:
            raise DomainError(f"edge map breaks incidence at {oe}")


def identity_morphism(gog: GraphOfGroups) -> GoGMorphism:
    return validate(
        gog,
        {
            "vertex_map": {v: v for v in gog.vertices},
            "edge_map": {e: e for e in gog.oriented_edges()},
            "vertex_isos": {v: SlotIso.identity(gog.vslot(v)) for v in gog.vertices},
            "edge_isos": {e: SlotIso.identity(gog.eslot(e)) for e in gog.edge_names},
            "gammas": {e: gog.vslot(gog.term(e)).identity() for e in gog.oriented_edges()},
        },
    )


def compose(a: GoGMorphism, b: GoGMorphism) -> GoGMorphism:
    """a after b; b's codomain must be a's domain.  Revalidated on output."""
    if b.codomain != a.domain:
        raise DomainError("morphism domains do not chain")
    vertex_map = {v: a.vertex_map[b.vertex_map[v]] for v in b.domain.vertices}
    edge_map = {e: a.edge_map[b.edge_map[e]] for e in b.domain.oriented_edges()}
    vertex_isos = {
        v: a.vertex_isos[b.vertex_map[v]].compose(b.vertex_isos[v]) for v in b.domain.vertices
    }
    edge_isos = {
        e: a.edge_isos[unoriented(b.edge_map[e])].compose(b.edge_isos[e])
        for e in b.domain.edge_names
    }
    gammas = {}
    for e in b.domain.oriented_edges():
        relocated = b.edge_map[e]
        gammas[e] = a.vertex_isos[b.codomain.term(relocated)].apply(b.gammas[e]) * a.gammas[relocated]
    return validate(
        b.domain,
        {
            "vertex_map": vertex_map,
            "edge_map": edge_map,
            "vertex_isos": vertex_isos,
            "edge_isos": edge_isos,
            "gammas": gammas,
        },
        codomain=a.codomain,
    )


def invert(a: GoGMorphism) -> GoGMorphism:
    inv_vmap = {w: v for v, w in a.vertex_map.items()}
    inv_emap = {f: e for e, f in a.edge_map.items()}
    vertex_isos = {w: a.vertex_isos[inv_vmap[w]].inverse() for w in a.codomain.vertices}
    edge_isos = {
        f: a.edge_isos[unoriented(inv_emap[f])].inverse() for f in a.codomain.edge_names
    }
    gammas = {}
    for f in a.codomain.oriented_edges():
        e = inv_emap[f]
        gammas[f] = a.vertex_isos[a.domain.term(e)].inverse().apply(a.gammas[e].inverse())
    return validate(
        a.codomain,
        {
            "vertex_map": inv_vmap,
            "edge_map": inv_emap,
            "vertex_isos": vertex_isos,
            "edge_isos": edge_isos,
            "gammas": gammas,
        },
        codomain=a.domain,
    )


def induced_on_pi1(a: GoGMorphism, w: BassWord) -> BassWord:
    """Image loop: e -> gamma_{e~}^-1 phi_X(e) gamma_e, g -> phi_v(g)."""
    if not w.is_loop():
        raise DomainError("induced map needs a loop")
    if w.gog != a.domain:
        raise DomainError("loop lives in a different graph of groups")
    at = w.start
    out_parts: List = []
    current = a.vertex_isos[at].apply(w.parts[0])
    for k in range(1, len(w.parts), 2):
        e = w.parts[k]
        g_next = w.parts[k + 1]
        current = current * a.gammas[bar(e)].inverse()
        out_parts.append(current)
        out_parts.append(a.edge_map[e])
        at = w.gog.term(e)
        current = a.gammas[e] * a.vertex_isos[at].apply(g_next)
    out_parts.append(current)
    return BassWord(a.codomain, a.vertex_map[w.start], out_parts)


# ---------------------------------------------------------------------------
# presentations of the fundamental group


@dataclass(frozen=True)
class Presentation:
    generators: Tuple[str, ...]
    relators: Tuple[Tuple[Tuple[int, int], ...], ...]
    vertex_gen_index: Dict[Tuple[str, int], int]
    edge_gen_index: Dict[str, int]
    tree: Tuple[str, ...]
    gog: Optional[GraphOfGroups] = None
    base_vertex: Optional[str] = None

    def word_of_element(self, vertex: str, x: SlotElement) -> List[Tuple[int, int]]:
        letters = []
        for i, s in x.word.letters:
            letters.append((self.vertex_gen_index[(vertex, i)], s))
        if x.center:
            idx = self.vertex_gen_index[(vertex, x.slot.free_rank)]
            letters.extend([(idx, 1 if x.center > 0 else -1)] * abs(x.center))
        return letters


def pi1_presentation(gog: GraphOfGroups, tree: Sequence[str]) -> Presentation:
    """Presentation on vertex generators plus non-tree Bass generators."""
    tree = [unoriented(e) for e in tree]
    _check_spanning(gog, tree)
    generators: List[str] = []
    vertex_gen_index: Dict[Tuple[str, int], int] = {}
    for v in gog.vertices:
        slot = gog.vslot(v)
        for i, name in enumerate(slot.gen_names()):
            vertex_gen_index[(v, i)] = len(generators)
            generators.append(f"{v}.{name}")
    edge_gen_index: Dict[str, int] = {}
    for e in gog.edge_names:
        if e not in tree:
            edge_gen_index[e] = len(generators)
            generators.append(e)

    pres = Presentation(
        tuple(generators), (), vertex_gen_index, edge_gen_index, tuple(tree), gog, gog.vertices[0]
    )
    relators: List[Tuple[Tuple[int, int], ...]] = []
    for v in gog.vertices:
        slot = gog.vslot(v)
        if slot.has_center:
            c = vertex_gen_index[(v, slot.free_rank)]
            for i in range(slot.free_rank):
                x = vertex_gen_index[(v, i)]
                relators.append(((x, 1), (c, 1), (x, -1), (c, -1)))
    for e in gog.edge_names:
        for gen in gog.eslot(e).generators():
            left = pres.word_of_element(gog.term(bar(e)), gog.injection(bar(e)).apply(gen))
            right = pres.word_of_element(gog.term(e), gog.injection(e).apply(gen))
            if e in tree:
                relator = left + [(i, -s) for i, s in reversed(right)]
            else:
                be = edge_gen_index[e]
                relator = [(be, -1)] + left + [(be, 1)] + [(i, -s) for i, s in reversed(right)]
            relators.append(tuple(relator))
    return Presentation(
        tuple(generators),
        tuple(relators),
        vertex_gen_index,
        edge_gen_index,
        tuple(tree),
        gog,
        gog.vertices[0],
    )


def _check_spanning(gog: GraphOfGroups, tree: Sequence[str]) -> None:
    for e in tree:
        if e not in gog.edge_names:
            raise DomainError(f"tree edge {e} is not an edge")
    if len(tree) != len(gog.vertices) - 1:
        raise DomainError("tree edge count must be |V| - 1")
    seen = {gog.vertices[0]}
    changed = True
    while changed:
        changed = False
        for e in tree:
            u, v = gog.edge_ends[e]
            if u in seen and v not in seen:
                seen.add(v)
                changed = True
            elif v in seen and u not in seen:
                seen.add(u)
                changed = True
    if len(seen) != len(gog.vertices):
        raise DomainError("tree does not span the graph")


# ---------------------------------------------------------------------------
# small modular group


@dataclass(frozen=True)
class SmallModularElement:
    """(Id_X, (ad_{gamma_v}), (Id_e), (gamma_e)); the Bass diagram pins
    gamma_v gamma_e^-1 into the centralizer of the edge image."""

    gog: GraphOfGroups
    gamma_v: Dict[str, SlotElement]
    gamma_e: Dict[str, SlotElement]

    def __post_init__(self):
        for e in self.gog.oriented_edges():
            v = self.gog.term(e)
            g = self.gamma_v[v] * self.gamma_e[e].inverse()
            image = [self.gog.injection(e).apply(x) for x in self.gog.eslot(e).generators()]
            for y in image:
                if y.conjugate(g) != y:
                    raise DomainError(f"gamma_v gamma_e^-1 fails to centralize at {e}")

    def to_morphism(self) -> GoGMorphism:
        gog = self.gog
        return validate(
            gog,
            {
                "vertex_map": {v: v for v in gog.vertices},
                "edge_map": {e: e for e in gog.oriented_edges()},
                "vertex_isos": {v: ad_iso(self.gamma_v[v]) for v in gog.vertices},
                "edge_isos": {e: SlotIso.identity(gog.eslot(e)) for e in gog.edge_names},
                "gammas": dict(self.gamma_e),
            },
        )

    def twist_data(self) -> List[Tuple[str, SlotElement]]:
        """The oriented edges with a nontrivial gamma."""
        return [(e, g) for e, g in sorted(self.gamma_e.items()) if not g.is_identity()]


def dehn_twist(gog: GraphOfGroups, edge: str, z: SlotElement) -> SmallModularElement:
    gamma_v = {v: gog.vslot(v).identity() for v in gog.vertices}
    gamma_e = {e: gog.vslot(gog.term(e)).identity() for e in gog.oriented_edges()}
    gamma_e[edge] = z
    return SmallModularElement(gog, gamma_v, gamma_e)


def small_modular_generators(gog: GraphOfGroups) -> List[SmallModularElement]:
    """One Dehn twist per oriented edge per centralizer generator."""
    out = []
    for e in sorted(gog.oriented_edges()):
        v = gog.term(e)
        image = [gog.injection(e).apply(x) for x in gog.eslot(e).generators()]
        for z in slot_centralizer_of_subgroup(gog.vslot(v), image):
            out.append(dehn_twist(gog, e, z))
    return out


# ---------------------------------------------------------------------------
# coset representatives of delta_0 Aut in delta Aut


def graph_isomorphisms(g1: GraphOfGroups, g2: GraphOfGroups) -> Iterator[Tuple[Dict, Dict]]:
    """All (vertex_map, oriented edge_map) graph isomorphisms."""
    if len(g1.vertices) != len(g2.vertices) or len(g1.edge_names) != len(g2.edge_names):
        return
    for perm in itertools.permutations(g2.vertices):
        vmap = dict(zip(g1.vertices, perm))
        # group unoriented edges of g1 by endpoint pair images
        buckets: Dict[Tuple[str, str], List[str]] = {}
        target_buckets: Dict[Tuple[str, str], List[str]] = {}
        for e in g1.edge_names:
            u, v = g1.edge_ends[e]
            key = tuple(sorted((vmap[u], vmap[v])))
            buckets.setdefault(key, []).append(e)
        for f in g2.edge_names:
            u, v = g2.edge_ends[f]
            target_buckets.setdefault(tuple(sorted((u, v))), []).append(f)
        if set(buckets) != set(target_buckets):
            continue
        if any(len(buckets[k]) != len(target_buckets[k]) for k in buckets):
            continue
        keys = sorted(buckets)
        choices_per_key = []
        for key in keys:
            sources = buckets[key]
            targets = target_buckets[key]
            assignments = []
            for tperm in itertools.permutations(targets):
                for flips in itertools.product((False, True), repeat=len(sources)):
                    emap = {}
                    good = True
                    for e, f, flip in zip(sources, tperm, flips):
                        u, v = g1.edge_ends[e]
                        fu, fv = g2.edge_ends[f]
                        image = bar(f) if flip else f
                        if g2.init(image) != vmap[u] or g2.term(image) != vmap[v]:
                            good = False
                            break
                        emap[e] = image
                        emap[bar(e)] = bar(image)
                    if good:
                        assignments.append(emap)
                    # avoid duplicate orientation choices for non-loops
            # dedupe assignments
            unique = []
            seen = set()
            for emap in assignments:
                key2 = tuple(sorted(emap.items()))
                if key2 not in seen:
                    seen.add(key2)
                    unique.append(emap)
            choices_per_key.append(unique)
        for combo in itertools.product(*choices_per_key):
            emap: Dict[str, str] = {}
            for part in combo:
                emap.update(part)
            yield dict(vmap), emap


def default_vertex_iso_oracle(g1: GraphOfGroups, g2: GraphOfGroups, v: str, w: str) -> List[SlotIso]:
    s1, s2 = g1.vslot(v), g2.vslot(w)
    if (s1.free_rank, s1.has_center) != (s2.free_rank, s2.has_center):
        return []
    return [SlotIso(s1, s2, tuple(_transport(s2, x) for x in s1.generators()))]


def _transport(dst: GroupSlot, x: SlotElement) -> SlotElement:
    return SlotElement(dst, Word(dst.free_group, x.word.letters), x.center)


def coset_reps_delta0(
    gog: GraphOfGroups,
    gog2: Optional[GraphOfGroups] = None,
    vertex_iso_oracle: Optional[Callable] = None,
    gamma_candidates: Optional[Callable] = None,
) -> List[GoGMorphism]:
    """Graph maps extendable to graph-of-groups isomorphisms, one witness each.

    delta_0 Aut (identity graph map) has finite index in delta Aut; the list
    covers the quotient.  Vertex iso candidates come from the oracle; gammas
    are searched among the identity and slot conjugators derived from the
    mismatch between transported and target edge images.
    """
    gog2 = gog2 if gog2 is not None else gog
    oracle = vertex_iso_oracle if vertex_iso_oracle is not None else default_vertex_iso_oracle
    found: List[GoGMorphism] = []
    for vmap, emap in graph_isomorphisms(gog, gog2):
        vertex_choices = []
        for v in gog.vertices:
            candidates = oracle(gog, gog2, v, vmap[v])
            if not candidates:
                vertex_choices = None
                break
            vertex_choices.append(candidates)
        if vertex_choices is None:
            continue
        witness = None
        for combo in itertools.product(*vertex_choices):
            vertex_isos = dict(zip(gog.vertices, combo))
            attempt = _extend_to_morphism(gog, gog2, vmap, emap, vertex_isos, gamma_candidates)
            if attempt is not None:
                witness = attempt
                break
        if witness is not None:
            found.append(witness)
    return found


def _extend_to_morphism(gog, gog2, vmap, emap, vertex_isos, gamma_candidates=None):
    """Derive edge isos and gammas from vertex isos, or None."""
    edge_isos: Dict[str, SlotIso] = {}
    gammas: Dict[str, SlotElement] = {}
    for oe in gog.oriented_edges():
        v = gog.term(oe)
        phi_v = vertex_isos[v]
        inj = gog.injection(oe)
        inj2 = gog2.injection(emap[oe])
        transported = [phi_v.apply(inj.apply(x)) for x in gog.eslot(oe).generators()]
        targets = [inj2.apply(y) for y in gog2.eslot(emap[oe]).generators()]
        match = _match_edge_tuples(gog2.vslot(gog2.term(emap[oe])), transported, targets, gamma_candidates)
        if match is None:
            return None
        gamma, edge_iso_images = match
        gammas[oe] = gamma
        if not oe.endswith("~"):
            iso = _edge_iso_from_images(gog.eslot(oe), gog2.eslot(emap[oe]), edge_iso_images, inj2)
            if iso is None:
                return None
            prev = edge_isos.get(unoriented(oe))
            if prev is not None and prev != iso:
                return None
            edge_isos[unoriented(oe)] = iso
    try:
        return validate(
            gog,
            {
                "vertex_map": vmap,
                "edge_map": emap,
                "vertex_isos": vertex_isos,
                "edge_isos": edge_isos,
                "gammas": gammas,
            },
            codomain=gog2,
        )
    except DomainError:
        return None


def _match_edge_tuples(slot, transported, targets, gamma_candidates=None):
    """Find gamma with transported[i]^gamma in the image, expressed over targets.

    Returns (gamma, preimage exponent data) where the data lists, for each
    transported generator, its expression as a target-side edge element.
    """
    trans_words = tuple(x.word for x in transported)
    targ_words = tuple(y.word for y in targets)
    canon_t, gt = canonical_conjugate(trans_words)
    canon_s, gs = canonical_conjugate(targ_words)
    gamma_list: List[SlotElement] = []
    if canon_t == canon_s and all(
        x.center == y.center for x, y in zip(transported, targets)
    ):
        gamma_word = gt * gs.inverse()
        gamma_list.append(SlotElement(slot, gamma_word, 0))
    if gamma_candidates is not None:
        gamma_list.extend(gamma_candidates(slot, transported, targets))
    for gamma in gamma_list:
        moved = [x.conjugate(gamma) for x in transported]
        if moved == list(targets):
            return gamma, list(range(len(targets)))
    return None


def _edge_iso_from_images(src_slot, dst_slot, perm, inj2):
    if perm == list(range(src_slot.ngens)):
        if (src_slot.free_rank, src_slot.has_center) != (dst_slot.free_rank, dst_slot.has_center):
            return None
        return SlotIso(src_slot, dst_slot, tuple(_transport(dst_slot, x) for x in src_slot.generators()))
    return None


# ---------------------------------------------------------------------------
# file format


def serialize_gog(gog: GraphOfGroups) -> str:
    lines = ["[vertices]"]
    for v in gog.vertices:
        slot = gog.vslot(v)
        lines.append(f"{v}: {slot.kind} {slot.free_rank}")
    lines.append("[edges]")
    for e in gog.edge_names:
        u, v = gog.edge_ends[e]
        slot = gog.eslot(e)
        lines.append(f"{e}: {u} --> {v} ({slot.kind} {slot.free_rank})")
    lines.append("[injections]")
    for e in gog.edge_names:
        for oe in (e, bar(e)):
            hom = gog.injection(oe)
            names = gog.eslot(e).gen_names()
            for name, img in zip(names, hom.images):
                lines.append(f"{oe}: {name} -> {img.format()}")
    return "\n".join(lines) + "\n"


def parse_gog(text: str) -> GraphOfGroups:
    """Parse the sectioned graph-of-groups format; see serialize_gog."""
    section = None
    vertex_slots: Dict[str, GroupSlot] = {}
    edge_ends: Dict[str, Tuple[str, str]] = {}
    edge_slots: Dict[str, GroupSlot] = {}
    raw_injections: Dict[str, Dict[str, str]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]").lower()
            continue
        if section == "vertices":
            name, _, kind_text = line.partition(":")
            kind_parts = kind_text.split()
            rank = int(kind_parts[1]) if len(kind_parts) > 1 else 1
            vertex_slots[name.strip()] = GroupSlot.from_kind(kind_parts[0], rank)
        elif section == "edges":
            name, _, rest = line.partition(":")
            name = name.strip()
            head, _, slot_text = rest.partition("(")
            u, _, v = head.partition("-->")
            u, v = u.strip().rstrip("-").strip(), v.strip()
            edge_ends[name] = (u, v)
            if slot_text:
                slot_parts = slot_text.rstrip(")").split()
                rank = int(slot_parts[1]) if len(slot_parts) > 1 else 1
                edge_slots[name] = GroupSlot.from_kind(slot_parts[0], rank)
            else:
                edge_slots[name] = GroupSlot(1, False)
        elif section == "injections":
            edge, _, rest = line.partition(":")
            gen, _, image = rest.partition("->")
            raw_injections.setdefault(edge.strip(), {})[gen.strip()] = image.strip()
        elif section is None:
            raise FormatError(f"line outside a known section: {line!r}")
        # other sections belong to embedding formats and are skipped here
    injections: Dict[str, SlotHom] = {}
    for e, (u, v) in edge_ends.items():
        eslot = edge_slots[e]
        for oe, target in ((e, v), (bar(e), u)):
            table = raw_injections.get(oe)
            if table is None:
                raise FormatError(f"missing [injections] for {oe}")
            dst = vertex_slots[target]
            images = []
            for name in eslot.gen_names():
                if name not in table:
                    raise FormatError(f"injection {oe} misses generator {name}")
                images.append(dst.parse(table[name]))
            injections[oe] = SlotHom(eslot, dst, tuple(images))
    return GraphOfGroups(
        sorted(vertex_slots), edge_ends, vertex_slots, edge_slots, injections
    )


def parse_tree_section(text: str) -> List[str]:
    section = None
    tree: List[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]").lower()
            continue
        if section == "tree":
            tree.extend(line.replace(",", " ").split())
    return tree
