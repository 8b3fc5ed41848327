import itertools
import random

import pytest

from torusconj.errors import DomainError, ResourceError
from torusconj.freegroup import (
    FreeGroup,
    SubgroupGraph,
    congruence_kernel,
    fold,
    is_automorphism,
    is_characteristic,
    nielsen_generators,
    subgroups_of_index_at_most,
    whole_group_graph,
)

from .helpers import random_word, subgroup_elements_up_to

F1 = FreeGroup(1)
F2 = FreeGroup(2)


def cayley_graph_of_quotient(group, images, size, mult, identity):
    """Oracle: kernel of group -> finite group as the Cayley coset graph."""
    elements = [identity]
    seen = {identity}
    pos = 0
    while pos < len(elements):
        g = elements[pos]
        pos += 1
        for img in images:
            h = mult(g, img)
            if h not in seen:
                seen.add(h)
                elements.append(h)
    index = {g: i for i, g in enumerate(elements)}
    fwd = [[index[mult(g, img)] for g in elements] for img in images]
    from torusconj.freegroup.stallings import _core_and_canonicalize

    return _core_and_canonicalize(group, len(elements), fwd, 0)


class TestFold:
    def test_rose_for_generators(self):
        g = fold(F2, F2.generators())
        assert g.nstates == 1 and g.is_complete()

    def test_proper_subgroup_membership(self):
        g = fold(F2, [F2.parse("a a"), F2.parse("b")])
        assert not g.membership(F2.parse("a"))
        assert g.membership(F2.parse("a a"))
        assert g.membership(F2.parse("b"))

    def test_index_two_subgroup(self):
        g = fold(F2, [F2.parse("a a"), F2.parse("b"), F2.parse("a b a'")])
        assert g.nstates == 2
        assert g.index() == 2
        # oracle: coset enumeration over the kernel of F2 -> Z/2, a -> 1, b -> 0
        oracle = cayley_graph_of_quotient(
            F2, [1, 0], 2, lambda x, y: (x + y) % 2, 0
        )
        assert g == oracle

    def test_empty_generating_set_rejected(self):
        with pytest.raises(DomainError):
            fold(F2, [])

    def test_confluence_under_permutation(self):
        rng = random.Random(23)
        for _ in range(30):
            gens = [random_word(rng, F2, 6) for _ in range(3)]
            if all(g.is_identity() for g in gens):
                continue
            base = fold(F2, gens)
            for perm in itertools.permutations(gens):
                assert fold(F2, list(perm)) == base

    def test_membership_against_enumeration(self):
        rng = random.Random(29)
        for _ in range(20):
            gens = [random_word(rng, F2, 4) for _ in range(2)]
            if all(g.is_identity() for g in gens):
                continue
            graph = fold(F2, gens)
            elems = subgroup_elements_up_to(F2, gens, 4)
            for w in list(elems)[:200]:
                assert graph.membership(w)

    def test_generators_regenerate_subgroup(self):
        gens = [F2.parse("a a"), F2.parse("b b"), F2.parse("a b")]
        graph = fold(F2, gens)
        assert fold(F2, graph.generators()) == graph


class TestMembership:
    def test_whole_group(self):
        rose = whole_group_graph(F2)
        rng = random.Random(31)
        for _ in range(50):
            assert rose.membership(random_word(rng, F2, 10))

    def test_identity_in_every_subgroup(self):
        g = fold(F2, [F2.parse("a b a b")])
        assert g.membership(F2.identity())


class TestCongruenceKernel:
    def test_f2_m2_is_kernel_of_klein_quotient(self):
        kernel = congruence_kernel(F2, 2)
        assert kernel.index() == 4
        oracle = cayley_graph_of_quotient(
            F2,
            [(1, 0), (0, 1)],
            4,
            lambda x, y: ((x[0] + y[0]) % 2, (x[1] + y[1]) % 2),
            (0, 0),
        )
        assert kernel == oracle

    def test_f1_m3(self):
        kernel = congruence_kernel(F1, 3)
        assert kernel.generators() == [F1.parse("a a a a a a")]

    def test_m1_whole_group(self):
        assert congruence_kernel(F2, 1) == whole_group_graph(F2)

    def test_budget_error(self):
        with pytest.raises(ResourceError):
            congruence_kernel(F2, 3, state_budget=4)

    @pytest.mark.parametrize("m", [2, 3])
    def test_contained_in_all_small_surjection_kernels(self, m):
        # the congruence kernel sits inside the kernel of every surjection
        # onto Z/2, Z/3, and S3 (for Z/p because such kernels have index p;
        # for S3 because its kernel is an intersection of point stabilizers
        # of index 3)
        kernel = congruence_kernel(F2, m)
        kgens = kernel.generators()

        def zmod(k):
            surjections = []
            for x, y in itertools.product(range(k), repeat=2):
                if {x % k, y % k} != {0} and (x % k or y % k):
                    # surjective iff images generate Z/k
                    from math import gcd

                    if gcd(gcd(x, y), k) == 1:
                        surjections.append(
                            cayley_graph_of_quotient(
                                F2, [x, y], k, lambda p, q: (p + q) % k, 0
                            )
                        )
            return surjections

        targets = zmod(2)
        if m == 3:
            targets += zmod(3)

            def mult(p, q):
                return tuple(p[q[i]] for i in range(3))

            perms = list(itertools.permutations(range(3)))
            for pa, pb in itertools.product(perms, repeat=2):
                graph = cayley_graph_of_quotient(F2, [pa, pb], 6, mult, (0, 1, 2))
                if graph.nstates == 6:  # surjective onto S3
                    targets.append(graph)
        assert targets
        for target in targets:
            assert all(target.membership(g) for g in kgens)

    def test_subgroup_ambient(self):
        h = fold(F2, [F2.parse("a a"), F2.parse("b")])
        kernel = congruence_kernel(h, 2)
        # kernel is a finite-index subgroup of h
        assert all(h.membership(g) for g in kernel.generators())


class TestIsCharacteristic:
    def test_klein_kernel_characteristic(self):
        kernel = congruence_kernel(F2, 2)
        assert is_characteristic(kernel, nielsen_generators(F2))

    def test_index_two_not_characteristic(self):
        g = fold(F2, [F2.parse("a a"), F2.parse("b"), F2.parse("a b a'")])
        swap = is_automorphism(F2, [F2.parse("b"), F2.parse("a")])
        assert not is_characteristic(g, [swap])
        # oracle: swap sends the generator b into a, which is not a member
        assert not g.membership(F2.parse("a"))

    def test_whole_group_characteristic(self):
        assert is_characteristic(whole_group_graph(F2), nielsen_generators(F2))

    def test_infinite_index_rejected(self):
        g = fold(F2, [F2.parse("a")])
        with pytest.raises(DomainError):
            is_characteristic(g, nielsen_generators(F2))


class TestSerialization:
    def test_round_trip(self):
        g = fold(F2, [F2.parse("a a"), F2.parse("b"), F2.parse("a b a'")])
        text = g.serialize()
        assert "base:" in text
        assert SubgroupGraph.deserialize(F2, text) == g

    def test_infinite_index_round_trip(self):
        g = fold(F2, [F2.parse("a b a b")])
        assert SubgroupGraph.deserialize(F2, g.serialize()) == g


class TestSubgroupEnumeration:
    def test_index_two_count(self):
        subs = [g for g in subgroups_of_index_at_most(F2, 2) if g.index() == 2]
        assert len(subs) == 3

    def test_index_three_count(self):
        # classical count: F2 has 13 subgroups of index 3
        subs = [g for g in subgroups_of_index_at_most(F2, 3) if g.index() == 3]
        assert len(subs) == 13
