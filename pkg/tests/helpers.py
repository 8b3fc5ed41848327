"""Shared test utilities: random words, markings, and brute-force oracles."""

from __future__ import annotations

import random
from typing import List, Tuple

from torusconj.freegroup import FreeGroup, Word


def random_word(rng: random.Random, group: FreeGroup, max_len: int) -> Word:
    letters = []
    for _ in range(rng.randint(0, max_len)):
        letters.append((rng.randrange(group.rank), rng.choice((1, -1))))
    return group.word(letters)


def random_nontrivial_word(rng: random.Random, group: FreeGroup, max_len: int) -> Word:
    while True:
        w = random_word(rng, group, max_len)
        if not w.is_identity():
            return w


def subgroup_elements_up_to(group: FreeGroup, generators: List[Word], max_len: int) -> set:
    """Breadth-first enumeration of subgroup elements with reduced length <= max_len."""
    gens = [g for g in generators] + [g.inverse() for g in generators]
    seen = {group.identity()}
    frontier = [group.identity()]
    while frontier:
        nxt = []
        for w in frontier:
            for g in gens:
                cand = w * g
                if len(cand) <= max_len and cand not in seen:
                    seen.add(cand)
                    nxt.append(cand)
        frontier = nxt
    return {w for w in seen if len(w) <= max_len}
