import random

import pytest

from torusconj.errors import DomainError
from torusconj.freegroup import (
    BasisExpresser,
    FreeAut,
    FreeGroup,
    fold,
    inner_conjugator,
    is_automorphism,
    nielsen_generators,
    outer_order,
)

from .helpers import random_word, subgroup_elements_up_to

F2 = FreeGroup(2)
F3 = FreeGroup(3)


def random_aut(rng, group, steps=5):
    aut = FreeAut.identity(group)
    moves = nielsen_generators(group)
    for _ in range(steps):
        aut = rng.choice(moves) * aut
    return aut


class TestIsAutomorphism:
    def test_nielsen_move_accepted(self):
        aut = is_automorphism(F2, [F2.parse("a b"), F2.parse("b")])
        assert aut is not None
        assert aut.apply(F2.parse("a")) == F2.parse("a b")

    def test_proper_subgroup_rejected(self):
        assert is_automorphism(F2, [F2.parse("a a"), F2.parse("b")]) is None
        # certificate: the folded image subgroup misses a
        cert = fold(F2, [F2.parse("a a"), F2.parse("b")])
        assert not cert.membership(F2.parse("a"))
        # oracle: breadth-first enumeration of <a^2, b> up to length 1
        elems = subgroup_elements_up_to(F2, [F2.parse("a a"), F2.parse("b")], 1)
        assert F2.parse("a") not in elems

    def test_generator_swap_self_inverse(self):
        aut = is_automorphism(F2, [F2.parse("b"), F2.parse("a")])
        assert aut is not None
        assert aut.inverse() == aut

    def test_wrong_arity(self):
        with pytest.raises(DomainError):
            is_automorphism(F2, [F2.parse("a")])

    def test_round_trip_on_random_auts(self):
        rng = random.Random(11)
        for _ in range(100):
            aut = random_aut(rng, F2)
            for i in range(2):
                x = F2.generator(i)
                assert aut.inverse().apply(aut.apply(x)) == x

    def test_rank3_round_trip(self):
        rng = random.Random(13)
        for _ in range(40):
            aut = random_aut(rng, F3)
            rebuilt = is_automorphism(F3, list(aut.images))
            assert rebuilt is not None
            for i in range(3):
                x = F3.generator(i)
                assert rebuilt.apply(rebuilt.inverse_images[i]) == x


class TestComposition:
    def test_compose_applies_right_first(self):
        f = is_automorphism(F2, [F2.parse("a b"), F2.parse("b")])
        g = is_automorphism(F2, [F2.parse("b"), F2.parse("a")])
        assert (f * g).apply(F2.parse("a")) == f.apply(g.apply(F2.parse("a")))

    def test_inverse_composes_to_identity(self):
        rng = random.Random(17)
        for _ in range(50):
            aut = random_aut(rng, F2)
            assert (aut * aut.inverse()).is_identity()
            assert (aut.inverse() * aut).is_identity()

    def test_power(self):
        swap = is_automorphism(F2, [F2.parse("b"), F2.parse("a")])
        assert (swap ** 2).is_identity()
        assert swap ** -1 == swap


class TestBasisExpresser:
    def test_expression_in_proper_subgroup(self):
        basis = [F2.parse("a a"), F2.parse("b"), F2.parse("a b a'")]
        expr = BasisExpresser(F2, basis)
        word = F2.parse("a a b a b a'")
        sym = expr.express(word)
        assert sym is not None
        rebuilt = F2.identity()
        for i, s in sym.letters:
            rebuilt = rebuilt * (basis[i] if s > 0 else basis[i].inverse())
        assert rebuilt == word

    def test_non_member(self):
        expr = BasisExpresser(F2, [F2.parse("a a"), F2.parse("b")])
        assert expr.express(F2.parse("a")) is None

    def test_dependent_basis_rejected(self):
        with pytest.raises(DomainError):
            BasisExpresser(F2, [F2.parse("a"), F2.parse("a")])


class TestInnerConjugator:
    def test_identity_is_inner(self):
        assert inner_conjugator(FreeAut.identity(F2)) == F2.identity()

    def test_ad_g_recovered(self):
        g = F2.parse("a b")
        images = [F2.generator(i).conjugate(g) for i in range(2)]
        aut = is_automorphism(F2, images)
        found = inner_conjugator(aut)
        assert found is not None
        assert all(aut.images[i] == F2.generator(i).conjugate(found) for i in range(2))

    def test_swap_not_inner(self):
        swap = is_automorphism(F2, [F2.parse("b"), F2.parse("a")])
        assert inner_conjugator(swap) is None

    def test_outer_order_of_swap(self):
        swap = is_automorphism(F2, [F2.parse("b"), F2.parse("a")])
        assert outer_order(swap, 4) == 2
