"""Anisotropic dyadic boxes D*[n] and finite unions of them.

A box of generation j with anchor a is prod_i [a_i 2^(-n_i j), (a_i + 1) 2^(-n_i j)).
All geometry is exact integer/rational arithmetic on anchors.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from ..pow2field import P2


class ZeroMass(ValueError):
    pass


class BoxFormatError(ValueError):
    pass


def _shift(a: int, bits: int) -> int:
    # floor division by 2^bits that also handles negative anchors
    return a >> bits if bits >= 0 else a << -bits


@dataclass(frozen=True, order=True)
class DyadicBox:
    n_vec: tuple[int, ...]
    j: int
    anchor: tuple[int, ...]

    def __post_init__(self):
        if len(self.n_vec) != len(self.anchor):
            raise ValueError("n_vec and anchor dimensions differ")
        if any(n < 1 for n in self.n_vec):
            raise ValueError("n_vec entries must be positive")

    @property
    def d(self) -> int:
        return len(self.n_vec)

    @property
    def S(self) -> int:
        return sum(self.n_vec)

    @property
    def ell(self) -> Fraction:
        return Fraction(2) ** -self.j

    def ell_pow(self, s) -> P2:
        return P2.pow2(-self.j * Fraction(s))

    def sides(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(2) ** (-n * self.j) for n in self.n_vec)

    def lower(self) -> tuple[Fraction, ...]:
        return tuple(a * h for a, h in zip(self.anchor, self.sides()))

    def upper(self) -> tuple[Fraction, ...]:
        return tuple((a + 1) * h for a, h in zip(self.anchor, self.sides()))

    def centre(self) -> tuple[Fraction, ...]:
        return tuple((a + Fraction(1, 2)) * h for a, h in zip(self.anchor, self.sides()))

    def volume(self) -> Fraction:
        return Fraction(2) ** (-self.S * self.j)

    def contains(self, x: Sequence) -> bool:
        return all(lo <= Fraction(v) < hi for lo, v, hi in zip(self.lower(), x, self.upper()))

    def parent(self) -> "DyadicBox":
        return DyadicBox(self.n_vec, self.j - 1,
                         tuple(_shift(a, n) for a, n in zip(self.anchor, self.n_vec)))

    def ancestor(self, j: int) -> "DyadicBox":
        k = self.j - j
        if k < 0:
            raise ValueError("ancestor generation must not exceed the box generation")
        return DyadicBox(self.n_vec, j, tuple(_shift(a, n * k) for a, n in zip(self.anchor, self.n_vec)))

    def child(self, index: int) -> "DyadicBox":
        """Child by mixed-radix index in [0, 2^S), first coordinate most significant."""
        digits = []
        for n in reversed(self.n_vec):
            index, r = divmod(index, 2 ** n)
            digits.append(r)
        digits.reverse()
        return DyadicBox(self.n_vec, self.j + 1,
                         tuple((a << n) + r for a, n, r in zip(self.anchor, self.n_vec, digits)))

    def children(self) -> list["DyadicBox"]:
        return [self.child(i) for i in range(2 ** self.S)]

    def descendants(self, k: int) -> Iterator["DyadicBox"]:
        """All generation j+k descendants, in lexicographic anchor order."""
        ranges = [range(a << (n * k), (a + 1) << (n * k)) for a, n in zip(self.anchor, self.n_vec)]
        for anc in itertools.product(*ranges):
            yield DyadicBox(self.n_vec, self.j + k, anc)

    def is_ancestor_of(self, other: "DyadicBox") -> bool:
        return other.j >= self.j and other.ancestor(self.j) == self

    # rescaling map T_Q --------------------------------------------------
    def T(self, x: Sequence) -> tuple[Fraction, ...]:
        return tuple((Fraction(v) - lo) * 2 ** (n * self.j)
                     for v, lo, n in zip(x, self.lower(), self.n_vec))

    def T_inv(self, y: Sequence) -> tuple[Fraction, ...]:
        return tuple(lo + Fraction(v) / 2 ** (n * self.j)
                     for v, lo, n in zip(y, self.lower(), self.n_vec))

    def T_box(self, other: "DyadicBox") -> "DyadicBox":
        """T_Q(Q') for Q' inside Q; lands in the unit-box tree with l = l(Q')/l(Q)."""
        k = other.j - self.j
        if k < 0 or not self.is_ancestor_of(other):
            raise ValueError("box is not a descendant")
        anc = tuple(b - (a << (n * k)) for a, b, n in zip(self.anchor, other.anchor, self.n_vec))
        return DyadicBox(self.n_vec, k, anc)

    def T_inv_box(self, other: "DyadicBox") -> "DyadicBox":
        """T_Q^-1(Q') for Q' in the unit-box tree."""
        k = other.j
        anc = tuple((a << (n * k)) + b for a, b, n in zip(self.anchor, other.anchor, self.n_vec))
        return DyadicBox(self.n_vec, self.j + k, anc)

    def to_json(self):
        return {"n_vec": list(self.n_vec), "j": self.j, "anchor": list(self.anchor)}


def unit_box(n_vec: Sequence[int]) -> DyadicBox:
    return DyadicBox(tuple(n_vec), 0, (0,) * len(n_vec))


def locate(x: Sequence, n_vec: Sequence[int], j: int) -> DyadicBox:
    """The generation-j box containing x."""
    anc = []
    for v, n in zip(x, n_vec):
        v = Fraction(v) * Fraction(2) ** (n * j)
        anc.append(v.numerator // v.denominator)
    return DyadicBox(tuple(n_vec), j, tuple(anc))


class BoxSet:
    """Union of generation (root.j + depth) boxes inside ``root``."""

    def __init__(self, n_vec: Sequence[int], depth: int, leaves: Iterable, root: DyadicBox | None = None):
        self.n_vec = tuple(int(n) for n in n_vec)
        self.depth = int(depth)
        self.root = root if root is not None else unit_box(self.n_vec)
        if self.root.n_vec != self.n_vec:
            raise ValueError("root box has a different n_vec")
        gen = self.root.j + self.depth
        boxes = set()
        for leaf in leaves:
            b = leaf if isinstance(leaf, DyadicBox) else DyadicBox(self.n_vec, gen, tuple(leaf))
            if b.j != gen or b.n_vec != self.n_vec:
                raise ValueError("leaf has wrong generation or n_vec")
            if not self.root.is_ancestor_of(b):
                raise ValueError(f"leaf {b.anchor} lies outside the root box")
            boxes.add(b.anchor)
        self.leaves = frozenset(boxes)

    @property
    def d(self) -> int:
        return len(self.n_vec)

    @property
    def S(self) -> int:
        return sum(self.n_vec)

    @property
    def generation(self) -> int:
        return self.root.j + self.depth

    def __len__(self):
        return len(self.leaves)

    def __bool__(self):
        return bool(self.leaves)

    def __eq__(self, other):
        return (isinstance(other, BoxSet) and self.n_vec == other.n_vec and self.depth == other.depth
                and self.root == other.root and self.leaves == other.leaves)

    def leaf_boxes(self) -> list[DyadicBox]:
        return [DyadicBox(self.n_vec, self.generation, a) for a in sorted(self.leaves)]

    def level(self, k: int) -> set[tuple[int, ...]]:
        """Anchors of generation root.j + k boxes that meet the set."""
        up = self.depth - k
        return {tuple(_shift(a, n * up) for a, n in zip(anc, self.n_vec)) for anc in self.leaves}

    def tree(self) -> list[dict[tuple[int, ...], list[tuple[int, ...]]]]:
        """Per level k < depth: anchor -> sorted list of child anchors present."""
        out = []
        for k in range(self.depth):
            kids: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
            for c in self.level(k + 1):
                p = tuple(_shift(a, n) for a, n in zip(c, self.n_vec))
                kids.setdefault(p, []).append(c)
            for v in kids.values():
                v.sort()
            out.append(kids)
        return out

    def contains_box(self, box: DyadicBox) -> bool:
        """Whether the box meets the set."""
        if box.j >= self.generation:
            return box.ancestor(self.generation).anchor in self.leaves
        if box.j >= self.root.j:
            return box.anchor in self.level(box.j - self.root.j)
        return bool(self.leaves) and box.is_ancestor_of(self.root)

    def restrict(self, box: DyadicBox) -> "BoxSet":
        """K cap box as a BoxSet rooted at box."""
        k = box.j - self.root.j
        if k < 0 or k > self.depth:
            raise ValueError("box generation outside the tree")
        leaves = [a for a in self.leaves
                  if tuple(_shift(x, n * (self.depth - k)) for x, n in zip(a, self.n_vec)) == box.anchor]
        return BoxSet(self.n_vec, self.depth - k, leaves, box)

    def refine(self, extra: int) -> "BoxSet":
        leaves = [b.anchor for leaf in self.leaf_boxes() for b in leaf.descendants(extra)]
        return BoxSet(self.n_vec, self.depth + extra, leaves, self.root)

    # I/O ---------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"boxset d={self.d} n={','.join(map(str, self.n_vec))} depth={self.depth} "
                 f"root_j={self.root.j} root={','.join(map(str, self.root.anchor))}"]
        lines += [" ".join(map(str, a)) for a in sorted(self.leaves)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BoxSet":
        rows = [r.strip() for r in text.splitlines() if r.strip() and not r.startswith("#")]
        if not rows or not rows[0].startswith("boxset"):
            raise BoxFormatError("missing 'boxset' header line")
        try:
            head = dict(tok.split("=", 1) for tok in rows[0].split()[1:])
            d = int(head["d"])
            n_vec = tuple(int(x) for x in head["n"].split(","))
            depth = int(head["depth"])
            root = DyadicBox(n_vec, int(head.get("root_j", 0)),
                             tuple(int(x) for x in head.get("root", ",".join(["0"] * d)).split(",")))
            leaves = [tuple(int(x) for x in r.split()) for r in rows[1:]]
        except (KeyError, ValueError) as exc:
            raise BoxFormatError(f"bad boxset file: {exc}") from exc
        if len(n_vec) != d or any(len(a) != d for a in leaves):
            raise BoxFormatError("dimension mismatch in boxset file")
        return cls(n_vec, depth, leaves, root)

    def to_json(self) -> dict:
        return {"n_vec": list(self.n_vec), "depth": self.depth, "root": self.root.to_json(),
                "leaves": [list(a) for a in sorted(self.leaves)]}

    @classmethod
    def from_json(cls, obj: dict) -> "BoxSet":
        r = obj.get("root")
        root = DyadicBox(tuple(r["n_vec"]), r["j"], tuple(r["anchor"])) if r else None
        return cls(obj["n_vec"], obj["depth"], [tuple(a) for a in obj["leaves"]], root)

    @classmethod
    def load(cls, path) -> "BoxSet":
        text = open(path, encoding="utf-8").read()
        if text.lstrip().startswith("{"):
            return cls.from_json(json.loads(text))
        return cls.from_text(text)


def full_set(n_vec: Sequence[int], depth: int, root: DyadicBox | None = None) -> BoxSet:
    root = root or unit_box(n_vec)
    return BoxSet(n_vec, depth, [b.anchor for b in root.descendants(depth)], root)


def cantor_set(n_vec: Sequence[int], depth: int, keep: Sequence[int]) -> BoxSet:
    """Self-similar set keeping the child indices in ``keep`` at every generation."""
    boxes = [unit_box(n_vec)]
    for _ in range(depth):
        boxes = [b.child(i) for b in boxes for i in keep]
    return BoxSet(n_vec, depth, [b.anchor for b in boxes])


def random_set(n_vec: Sequence[int], depth: int, rng: np.random.Generator, p: float = 0.5) -> BoxSet:
    leaves = [b.anchor for b in unit_box(n_vec).descendants(depth) if rng.random() < p]
    return BoxSet(n_vec, depth, leaves)


def rho_distance(x: Sequence[float], y: Sequence[float], n_vec: Sequence[int]) -> float:
    """max_i (2|x_i - y_i|)^(1/n_i)."""
    return max((2 * abs(float(a) - float(b))) ** (1.0 / n) for a, b, n in zip(x, y, n_vec))


def anisotropic_dim_bounds(dim_h: float, n_vec: Sequence[int]) -> tuple[float, float]:
    """Lower and upper bounds for the rho-Hausdorff dimension from dim_H."""
    d, S, N = len(n_vec), sum(n_vec), max(n_vec)
    return S - (d - dim_h) * N, float(S)
