"""Exact anisotropic Hausdorff content and Frostman measures on finite box sets.

Values live in Q(2^(1/q)) where q is the denominator of s.  Since E is a
union of boxes inside the root, an optimal cover can be drawn from the
ancestors of E's leaves (deeper boxes never help when s <= S), which turns
the infimum into a bottom-up minimum over the tree.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from ..measures import DiscreteMeasure
from ..pow2field import ONE, P2, ZERO, psum
from .boxes import BoxSet, DyadicBox


class EmptySet(ValueError):
    pass


class NoBox(ValueError):
    pass


class DensityUnmet(RuntimeError):
    pass


def _ell_pow(j: int, s: Fraction) -> P2:
    return P2.pow2(-j * s)


@dataclass
class ContentTable:
    """Node costs m(Q) = content of E cap Q for every tree box Q meeting E."""
    E: BoxSet
    s: Fraction
    cost: list[dict[tuple[int, ...], P2]]
    capped: list[dict[tuple[int, ...], bool]]

    @property
    def value(self) -> P2:
        if not self.E:
            return ZERO
        return self.cost[0][self.E.root.anchor]

    def box(self, k: int, anchor) -> DyadicBox:
        return DyadicBox(self.E.n_vec, self.E.root.j + k, tuple(anchor))

    def optimal_cover(self) -> list[DyadicBox]:
        """A cover attaining the content: take Q whenever l(Q)^s is the min."""
        if not self.E:
            return []
        tree = self.E.tree()
        out, stack = [], [(0, self.E.root.anchor)]
        while stack:
            k, a = stack.pop()
            if k == self.E.depth or self.capped[k][a]:
                out.append(self.box(k, a))
            else:
                stack.extend((k + 1, c) for c in tree[k][a])
        return sorted(out)


def content_table(E: BoxSet, s) -> ContentTable:
    s = Fraction(s)
    if s < 0:
        raise ValueError("s must be nonnegative")
    D = E.depth
    cost: list[dict] = [dict() for _ in range(D + 1)]
    capped: list[dict] = [dict() for _ in range(D + 1)]
    if not E:
        return ContentTable(E, s, cost, capped)
    if s > E.S:
        # subdividing a full box forever drives the cost to zero
        for k in range(D + 1):
            for a in E.level(k):
                cost[k][a] = ZERO
                capped[k][a] = False
        return ContentTable(E, s, cost, capped)
    leaf_cost = _ell_pow(E.generation, s)
    for a in E.leaves:
        cost[D][a] = leaf_cost
        capped[D][a] = True
    tree = E.tree()
    for k in range(D - 1, -1, -1):
        own = _ell_pow(E.root.j + k, s)
        for a, kids in tree[k].items():
            below = psum(cost[k + 1][c] for c in kids)
            if own <= below:
                cost[k][a], capped[k][a] = own, True
            else:
                cost[k][a], capped[k][a] = below, False
    return ContentTable(E, s, cost, capped)


def content(E: BoxSet, s) -> P2:
    """H^s_{D*}(E), exactly."""
    return content_table(E, s).value


def cover_cost(cover, s) -> P2:
    s = Fraction(s)
    per_gen = Counter(b.j for b in cover)
    return psum(P2.rational(k) * _ell_pow(j, s) for j, k in sorted(per_gen.items()))


def covers(cover, E: BoxSet) -> bool:
    boxes = set(cover)
    gens = sorted({b.j for b in boxes if b.j <= E.generation})
    return all(any(leaf.ancestor(j) in boxes for j in gens) for leaf in E.leaf_boxes())


def content_bruteforce(E: BoxSet, s) -> P2:
    """Minimum cover cost by set-cover search over leaf bitmasks.

    Candidates are all tree boxes meeting E; each covers a bitmask of leaves.
    best[mask] is the cheapest collection covering at least ``mask``; this
    does not use the tree recursion and serves as an independent oracle.
    Feasible for up to ~20 leaves.
    """
    s = Fraction(s)
    if not E:
        return ZERO
    if s > E.S:
        return ZERO
    leaves = E.leaf_boxes()
    n = len(leaves)
    if n > 22:
        raise ValueError("too many leaves for the brute-force oracle")
    index = {b.anchor: i for i, b in enumerate(leaves)}
    cands = []
    for k in range(E.depth + 1):
        up = E.depth - k
        masks: dict = {}
        for leaf in leaves:
            anc = leaf.ancestor(E.root.j + k).anchor
            masks[anc] = masks.get(anc, 0) | (1 << index[leaf.anchor])
        own = _ell_pow(E.root.j + k, s)
        cands.extend((m, own) for m in masks.values())
    return min_cover_all(n, cands)[(1 << n) - 1]


def min_cover_all(n: int, cands: list[tuple[int, P2]]) -> list[P2]:
    """best[mask] = min total cost of candidates whose union contains mask."""
    full = 1 << n
    best: list[Optional[P2]] = [None] * full
    best[0] = ZERO
    for mask in range(1, full):
        low = mask & -mask
        cur = None
        for m, c in cands:
            if m & low:
                prev = best[mask & ~m]
                val = prev + c
                if cur is None or val < cur:
                    cur = val
        best[mask] = cur
    return best


# Frostman ----------------------------------------------------------------

@dataclass
class FrostmanCertificate:
    E: BoxSet
    s: Fraction
    leaf_mass: dict[tuple[int, ...], P2]
    total: P2
    content_lb: P2
    max_ratio: P2
    node_mass: list[dict[tuple[int, ...], P2]] = field(repr=False, default_factory=list)

    @property
    def valid(self) -> bool:
        return self.total >= self.content_lb and self.max_ratio <= ONE

    def measure(self) -> DiscreteMeasure:
        boxes = self.E.leaf_boxes()
        pts = np.array([[float(x) for x in b.centre()] for b in boxes])
        w = np.array([float(self.leaf_mass[b.anchor]) for b in boxes])
        cell = [float(h) for h in boxes[0].sides()] if boxes else None
        return DiscreteMeasure(pts if len(pts) else np.zeros((0, self.E.d)), w, "frostman", cell)

    def to_json(self):
        return {"s": str(self.s), "total": self.total.to_json(),
                "content_lb": self.content_lb.to_json(), "max_ratio": self.max_ratio.to_json(),
                "total_float": float(self.total), "max_ratio_float": float(self.max_ratio),
                "leaves": len(self.leaf_mass), "valid": self.valid}


def node_masses(E: BoxSet, leaf_mass: dict) -> list[dict]:
    masses = [dict() for _ in range(E.depth + 1)]
    masses[E.depth] = dict(leaf_mass)
    tree = E.tree()
    for k in range(E.depth - 1, -1, -1):
        for a, kids in tree[k].items():
            masses[k][a] = psum(masses[k + 1][c] for c in kids)
    return masses


def max_density_ratio(E: BoxSet, masses: list[dict], s: Fraction) -> P2:
    best = ZERO
    for k, lvl in enumerate(masses):
        inv = P2.pow2((E.root.j + k) * s)  # 1 / l(Q)^s
        for m in lvl.values():
            r = m * inv
            if r > best:
                best = r
    return best


def frostman(E: BoxSet, s) -> FrostmanCertificate:
    """Finite capping construction: l^s on leaves, then cap upward level by level.

    Capping a box at l(Q)^s scales its whole subtree, so a leaf ends with
    l(leaf)^s times the product of the scale factors on its ancestor path.
    The capped mass at Q is min(l(Q)^s, sum of capped children), the same
    recursion as the content, so ||theta|| equals the content exactly.
    """
    s = Fraction(s)
    if not E:
        raise EmptySet("Frostman measure of an empty set")
    D = E.depth
    tree = E.tree()
    mass = [dict() for _ in range(D + 1)]
    factor = [dict() for _ in range(D + 1)]
    leaf_cost = _ell_pow(E.generation, s)
    for a in E.leaves:
        mass[D][a] = leaf_cost
        factor[D][a] = ONE
    for k in range(D - 1, -1, -1):
        own = _ell_pow(E.root.j + k, s)
        for a, kids in tree[k].items():
            tot = psum(mass[k + 1][c] for c in kids)
            if tot > own:
                mass[k][a], factor[k][a] = own, own / tot
            else:
                mass[k][a], factor[k][a] = tot, ONE
    # push scale factors down
    scale = [dict() for _ in range(D + 1)]
    scale[0][E.root.anchor] = factor[0][E.root.anchor]
    for k in range(D):
        for a, kids in tree[k].items():
            for c in kids:
                scale[k + 1][c] = scale[k][a] * factor[k + 1][c]
    leaf_mass = {a: leaf_cost * scale[D][a] for a in E.leaves}
    masses = node_masses(E, leaf_mass)
    total = masses[0][E.root.anchor]
    return FrostmanCertificate(E, s, leaf_mass, total, content(E, s),
                               max_density_ratio(E, masses, s), masses)


def high_density_box(K: BoxSet, s, delta, J_min: int = 0, j_max: Optional[int] = None) -> DyadicBox:
    """A tree box Q (J_min <= gen <= j_max) with content(K cap Q) >= (1 - delta) l(Q)^s.

    Candidates are ranked by decreasing density ratio, then smaller
    generation, then anchor.  Only boxes down to the representation depth
    are searched.
    """
    s = Fraction(s)
    if not K:
        raise NoBox("empty set")
    table = content_table(K, s)
    target = ONE - Fraction(delta)
    hi = K.generation if j_max is None else min(j_max, K.generation)
    cands = []
    for k in range(K.depth + 1):
        j = K.root.j + k
        if j < J_min or j > hi:
            continue
        inv = P2.pow2(j * s)
        for a, m in table.cost[k].items():
            r = m * inv
            if r >= target:
                cands.append((r, j, a))
    if not cands:
        raise DensityUnmet(f"no box with density >= 1 - {delta} between generations {J_min} and {hi}")
    best = cands[0]
    for c in cands[1:]:
        if c[0] > best[0] or (c[0] == best[0] and (c[1], c[2]) < (best[1], best[2])):
            best = c
    return DyadicBox(K.n_vec, best[1], best[2])
