"""Exact sigma-algebra calculus on finite probability spaces.

Partitions stand in for sigma-algebras, permutations for measure-preserving
maps, and conditional expectation is a block-weighted average computed in
exact rational arithmetic.  Everything here is exhaustive and exact: the
verification routines check identities over the full indicator basis and
either pass or return a concrete counterexample witness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence


class PreconditionError(ValueError):
    """A verification routine was called with hypotheses that do not hold."""


# ---------------------------------------------------------------------------
# core types


@dataclass(frozen=True)
class FiniteSpace:
    """A finite probability space: point weights as exact rationals."""

    weights: tuple[Fraction, ...]

    def __post_init__(self):
        ws = tuple(Fraction(w) for w in self.weights)
        object.__setattr__(self, "weights", ws)
        if not ws:
            raise ValueError("space must contain at least one point")
        if any(w < 0 for w in ws):
            raise ValueError("weights must be nonnegative")
        if sum(ws) != 1:
            raise ValueError("weights must sum to 1")

    @property
    def size(self) -> int:
        return len(self.weights)

    @classmethod
    def uniform(cls, n: int) -> "FiniteSpace":
        return cls(tuple(Fraction(1, n) for _ in range(n)))


@dataclass(frozen=True)
class Partition:
    """A partition of {0..n-1}, encoded as a block label per point.

    Labels are canonicalized to first-occurrence order, so structural
    equality of `block_of` coincides with equality of partitions.
    """

    block_of: tuple[int, ...]

    def __post_init__(self):
        if not self.block_of:
            raise ValueError("partition of an empty set")
        relabel: dict[int, int] = {}
        canon = []
        for lab in self.block_of:
            if lab not in relabel:
                relabel[lab] = len(relabel)
            canon.append(relabel[lab])
        object.__setattr__(self, "block_of", tuple(canon))

    @property
    def size(self) -> int:
        return len(self.block_of)

    @property
    def block_count(self) -> int:
        return max(self.block_of) + 1

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.block_count)]
        for x, lab in enumerate(self.block_of):
            out[lab].append(x)
        return out

    def refines(self, other: "Partition") -> bool:
        """True if every block of self sits inside one block of other."""
        if self.size != other.size:
            raise ValueError("partitions of different point sets")
        image: dict[int, int] = {}
        for mine, theirs in zip(self.block_of, other.block_of):
            if image.setdefault(mine, theirs) != theirs:
                return False
        return True

    @classmethod
    def trivial(cls, n: int) -> "Partition":
        return cls((0,) * n)

    @classmethod
    def discrete(cls, n: int) -> "Partition":
        return cls(tuple(range(n)))

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], size: int) -> "Partition":
        labels = [-1] * size
        for lab, blk in enumerate(blocks):
            for x in blk:
                if labels[x] != -1:
                    raise ValueError(f"point {x} listed twice")
                labels[x] = lab
        if -1 in labels:
            raise ValueError("blocks do not cover the point set")
        return cls(tuple(labels))


def _check_permutation(perm: Sequence[int], size: int | None = None):
    n = len(perm)
    if size is not None and n != size:
        raise ValueError("permutation length does not match the space")
    if sorted(perm) != list(range(n)):
        raise ValueError("not a permutation")


@dataclass(frozen=True)
class FiniteAction:
    """A Z^d action: d pairwise commuting permutations of the point set."""

    generators: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        gens = tuple(tuple(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise ValueError("action needs at least one generator")
        n = len(gens[0])
        for g in gens:
            _check_permutation(g, n)
        for a in gens:
            for b in gens:
                if compose(a, b) != compose(b, a):
                    raise ValueError("generators do not commute")

    @property
    def d(self) -> int:
        return len(self.generators)

    @property
    def size(self) -> int:
        return len(self.generators[0])

    def power(self, steps: Sequence[int]) -> tuple[int, ...]:
        """The permutation for the lattice step vector `steps`."""
        if len(steps) != self.d:
            raise ValueError("step vector has wrong dimension")
        out = tuple(range(self.size))
        for g, k in zip(self.generators, steps):
            out = compose(perm_power(g, k), out)
        return out


def compose(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    """(a o b)(x) = a(b(x))."""
    return tuple(a[b[x]] for x in range(len(a)))


def invert(perm: Sequence[int]) -> tuple[int, ...]:
    out = [0] * len(perm)
    for x, y in enumerate(perm):
        out[y] = x
    return tuple(out)


def perm_power(perm: Sequence[int], k: int) -> tuple[int, ...]:
    base = tuple(perm) if k >= 0 else invert(perm)
    out = tuple(range(len(perm)))
    for _ in range(abs(k)):
        out = compose(base, out)
    return out


def pullback_partition(p: Partition, perm: Sequence[int]) -> Partition:
    """The partition whose blocks are the preimages of p's blocks under perm."""
    _check_permutation(perm, p.size)
    return Partition(tuple(p.block_of[perm[x]] for x in range(p.size)))


def is_invariant(p: Partition, perm: Sequence[int]) -> bool:
    """True if perm maps blocks of p onto blocks of p."""
    return pullback_partition(p, perm) == p


def preserves_weights(space: FiniteSpace, perm: Sequence[int]) -> bool:
    _check_permutation(perm, space.size)
    return all(space.weights[perm[x]] == space.weights[x] for x in range(space.size))


# ---------------------------------------------------------------------------
# lattice operations and conditioning


def partition_join(p: Partition, q: Partition) -> Partition:
    """Coarsest common refinement (intersection of the two sigma-algebras' atoms)."""
    if p.size != q.size:
        raise ValueError("partitions of different point sets")
    return Partition(tuple(a * q.block_count + b for a, b in zip(p.block_of, q.block_of)))


def partition_meet(p: Partition, q: Partition) -> Partition:
    """Finest partition coarser than both.

    Blocks are the connected components of the graph joining blocks of p
    and q that share a point.
    """
    if p.size != q.size:
        raise ValueError("partitions of different point sets")
    parent = list(range(p.size))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[ry] = rx

    first_of_p: dict[int, int] = {}
    first_of_q: dict[int, int] = {}
    for x in range(p.size):
        for labels, first in ((p.block_of, first_of_p), (q.block_of, first_of_q)):
            lab = labels[x]
            if lab in first:
                union(first[lab], x)
            else:
                first[lab] = x
    return Partition(tuple(find(x) for x in range(p.size)))


def orbit_partition(size: int, perms: Iterable[Sequence[int]]) -> Partition:
    """Orbits of the group generated by perms; its unions are the invariant sets."""
    perms = [tuple(g) for g in perms]
    for g in perms:
        _check_permutation(g, size)
    parent = list(range(size))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in perms:
        for x in range(size):
            rx, ry = find(x), find(g[x])
            if rx != ry:
                parent[ry] = rx
    return Partition(tuple(find(x) for x in range(size)))


def cond_exp(space: FiniteSpace, f: Sequence, p: Partition) -> tuple[Fraction, ...]:
    """Conditional expectation of f given p: the weighted block average, exactly."""
    if p.size != space.size:
        raise ValueError("partition does not match the space")
    vals = [Fraction(v) for v in f]
    if len(vals) != space.size:
        raise ValueError("function does not match the space")
    k = p.block_count
    bw = [Fraction(0)] * k
    bv = [Fraction(0)] * k
    for x, lab in enumerate(p.block_of):
        bw[lab] += space.weights[x]
        bv[lab] += space.weights[x] * vals[x]
    for lab in range(k):
        if bw[lab] == 0:
            raise ValueError(f"block {lab} has zero weight")
    avg = [bv[lab] / bw[lab] for lab in range(k)]
    return tuple(avg[lab] for lab in p.block_of)


def is_measurable(f: Sequence, p: Partition) -> bool:
    """True if f is constant on every block of p."""
    vals = [Fraction(v) for v in f]
    seen: dict[int, Fraction] = {}
    for x, lab in enumerate(p.block_of):
        if seen.setdefault(lab, vals[x]) != vals[x]:
            return False
    return True


def measure(space: FiniteSpace, points: Iterable[int]) -> Fraction:
    return sum((space.weights[x] for x in points), Fraction(0))


# ---------------------------------------------------------------------------
# filtration grids


@dataclass
class FiltrationGrid:
    """A finite rectangle of lattice indices with a partition per index.

    Monotone: the partition at an index refines the partition at any
    componentwise-smaller index.  Optionally carries the action that is
    supposed to shift it, in which case stationarity is validated too.
    """

    axes: tuple[tuple[int, ...], ...]
    cells: dict[tuple[int, ...], Partition]
    action: FiniteAction | None = None

    def __post_init__(self):
        self.axes = tuple(tuple(sorted(ax)) for ax in self.axes)
        for ax in self.axes:
            if list(ax) != list(range(ax[0], ax[-1] + 1)):
                raise ValueError("axis indices must form a contiguous range")
        for idx in self.indices():
            if idx not in self.cells:
                raise ValueError(f"missing cell {idx}")
        sizes = {p.size for p in self.cells.values()}
        if len(sizes) != 1:
            raise ValueError("cells live on different point sets")
        self._check_monotone()
        if self.action is not None:
            if self.action.d != len(self.axes):
                raise ValueError("action dimension does not match the grid")
            self._check_stationary()

    def indices(self):
        def rec(prefix, rest):
            if not rest:
                yield tuple(prefix)
                return
            for v in rest[0]:
                yield from rec(prefix + [v], rest[1:])

        yield from rec([], list(self.axes))

    def cell(self, idx: tuple[int, ...]) -> Partition:
        return self.cells[idx]

    def _check_monotone(self):
        for idx in self.indices():
            for t, ax in enumerate(self.axes):
                if idx[t] == ax[0]:
                    continue
                below = idx[:t] + (idx[t] - 1,) + idx[t + 1 :]
                if not self.cells[idx].refines(self.cells[below]):
                    raise ValueError(f"cell {idx} does not refine cell {below}")

    def _check_stationary(self):
        origin = tuple(ax[0] for ax in self.axes)
        base = self.cells[origin]
        for idx in self.indices():
            steps = tuple(i - o for i, o in zip(idx, origin))
            if self.cells[idx] != pullback_partition(base, self.action.power(steps)):
                raise ValueError(f"cell {idx} is not the shifted origin cell")


# ---------------------------------------------------------------------------
# verification reports


@dataclass
class CheckReport:
    identity: str
    status: str  # "pass" | "fail"
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        out = {"identity": self.identity, "status": self.status}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def _frac_str(values) -> list[str]:
    return [str(Fraction(v)) for v in values]


# ---------------------------------------------------------------------------
# verification routines


def check_completely_commuting(space: FiniteSpace, grid: FiltrationGrid) -> CheckReport:
    """Exhaustive check that projections onto the grid commute through minima.

    For every pair of indices alpha, beta and every point indicator e_x,
    conditioning first on the cell at alpha and then at beta must equal
    conditioning on the cell at the componentwise minimum.  Linearity makes
    the indicator basis sufficient.
    """
    if any(p.size != space.size for p in grid.cells.values()):
        raise ValueError("grid does not match the space")
    idxs = list(grid.indices())
    n = space.size
    for alpha in idxs:
        for beta in idxs:
            gamma = tuple(min(a, b) for a, b in zip(alpha, beta))
            pa, pb, pg = grid.cell(alpha), grid.cell(beta), grid.cell(gamma)
            for x in range(n):
                e = [Fraction(0)] * n
                e[x] = Fraction(1)
                lhs = cond_exp(space, cond_exp(space, e, pa), pb)
                rhs = cond_exp(space, e, pg)
                if lhs != rhs:
                    return CheckReport(
                        "completely_commuting",
                        "fail",
                        {
                            "point": x,
                            "alpha": list(alpha),
                            "beta": list(beta),
                            "iterated": _frac_str(lhs),
                            "expected": _frac_str(rhs),
                        },
                    )
    return CheckReport("completely_commuting", "pass")


def verify_prop_pro(
    space: FiniteSpace, action: FiniteAction, invariant_part: Partition, coarse_part: Partition
) -> list[CheckReport]:
    """Check that conditioning on an invariant partition commutes with the
    invariants-joined-coarse algebra.

    With J the orbit partition of the action, F = invariant_part and
    C = coarse_part (C coarser than F, F invariant under every generator):

      (a) E[f|F] stays (J v C)-measurable for f (J v C)-measurable,
      (b) E[f|J v C] stays F-measurable for f F-measurable,
      (c) the two projections commute and equal E[f | F ^ (J v C)].
    """
    n = space.size
    if invariant_part.size != n or coarse_part.size != n:
        raise PreconditionError("partitions do not match the space")
    for g in action.generators:
        if len(g) != n:
            raise PreconditionError("action does not match the space")
        if not preserves_weights(space, g):
            raise PreconditionError("a generator does not preserve the weights")
        if not is_invariant(invariant_part, g):
            raise PreconditionError("partition is not invariant under the action")
    if not invariant_part.refines(coarse_part):
        raise PreconditionError("coarse partition is not coarsened by the invariant one")

    J = orbit_partition(n, action.generators)
    JC = partition_join(J, coarse_part)
    FJC = partition_meet(invariant_part, JC)
    reports = []

    bad = None
    for blk in JC.blocks():
        f = [Fraction(1) if x in blk else Fraction(0) for x in range(n)]
        if not is_measurable(cond_exp(space, f, invariant_part), JC):
            bad = {"indicator_block": blk}
            break
    reports.append(
        CheckReport("commuting_projection_a", "pass" if bad is None else "fail", bad)
    )

    bad = None
    for blk in invariant_part.blocks():
        f = [Fraction(1) if x in blk else Fraction(0) for x in range(n)]
        if not is_measurable(cond_exp(space, f, JC), invariant_part):
            bad = {"indicator_block": blk}
            break
    reports.append(
        CheckReport("commuting_projection_b", "pass" if bad is None else "fail", bad)
    )

    bad = None
    for x in range(n):
        e = [Fraction(0)] * n
        e[x] = Fraction(1)
        fwd = cond_exp(space, cond_exp(space, e, invariant_part), JC)
        bwd = cond_exp(space, cond_exp(space, e, JC), invariant_part)
        joint = cond_exp(space, e, FJC)
        if fwd != bwd or fwd != joint:
            bad = {
                "point": x,
                "F_then_JC": _frac_str(fwd),
                "JC_then_F": _frac_str(bwd),
                "meet": _frac_str(joint),
            }
            break
    reports.append(
        CheckReport("commuting_projection_c", "pass" if bad is None else "fail", bad)
    )
    return reports


def verify_independence(space: FiniteSpace, action: FiniteAction) -> CheckReport:
    """Exact mutual independence of the three pairwise-invariant algebras.

    For a transitive Z^3 action, the partition of sets invariant under the
    axes-(2,3) sub-action, the axes-(1,3) one and the axes-(1,2) one must be
    mutually independent: mu(A1 ^ A2 ^ A3) = mu(A1) mu(A2) mu(A3) for all
    block triples.
    """
    if action.d != 3:
        raise PreconditionError("independence check needs a Z^3 action")
    n = space.size
    if action.size != n:
        raise PreconditionError("action does not match the space")
    for g in action.generators:
        if not preserves_weights(space, g):
            raise PreconditionError("a generator does not preserve the weights")
    if orbit_partition(n, action.generators).block_count != 1:
        raise PreconditionError("full action is not transitive")

    gens = action.generators
    inv = [
        orbit_partition(n, [gens[1], gens[2]]),
        orbit_partition(n, [gens[0], gens[2]]),
        orbit_partition(n, [gens[0], gens[1]]),
    ]
    blocks = [p.blocks() for p in inv]
    for a1 in blocks[0]:
        s1 = set(a1)
        for a2 in blocks[1]:
            s12 = s1.intersection(a2)
            for a3 in blocks[2]:
                joint = measure(space, s12.intersection(a3))
                product = measure(space, a1) * measure(space, a2) * measure(space, a3)
                if joint != product:
                    return CheckReport(
                        "invariant_independence",
                        "fail",
                        {
                            "blocks": [a1, a2, a3],
                            "joint": str(joint),
                            "product": str(product),
                        },
                    )
    return CheckReport("invariant_independence", "pass")


def verify_lemma_class(space: FiniteSpace, shift: Sequence[int], seed_part: Partition) -> CheckReport:
    """Check that invariant sets cannot tell the two ends of a pullback
    filtration apart.

    Accumulate F_inf as the join of the backward pullbacks of seed_part under
    the shift and F_-inf as the meet of the forward ones (both stabilize
    within the order of the permutation), and compare exactly

        K ^ F_inf  against  K ^ F_-inf

    where K is the partition into shift orbits.  The meet side is always
    coarser; the report fails with both sides as witness when the join side
    retains orbit information the meet side lost, which happens when the
    seed partition splits shift orbits asymmetrically.
    """
    _check_permutation(shift, space.size)
    if seed_part.size != space.size:
        raise PreconditionError("partition does not match the space")
    K = orbit_partition(space.size, [shift])

    fwd = seed_part
    acc_join = seed_part
    steps_up = 0
    while True:
        fwd = pullback_partition(fwd, shift)
        nxt = partition_join(acc_join, fwd)
        steps_up += 1
        if nxt == acc_join:
            break
        acc_join = nxt

    inv_shift = invert(shift)
    bwd = seed_part
    acc_meet = seed_part
    steps_down = 0
    while True:
        bwd = pullback_partition(bwd, inv_shift)
        nxt = partition_meet(acc_meet, bwd)
        steps_down += 1
        if nxt == acc_meet:
            break
        acc_meet = nxt

    lhs = partition_meet(K, acc_join)
    rhs = partition_meet(K, acc_meet)
    if lhs == rhs:
        return CheckReport("invariant_filtration_limits", "pass")
    return CheckReport(
        "invariant_filtration_limits",
        "fail",
        {
            "K_meet_upper": list(lhs.block_of),
            "K_meet_lower": list(rhs.block_of),
            "stabilized_after": [steps_up, steps_down],
        },
    )


# ---------------------------------------------------------------------------
# fixtures


def _parse_weight(s) -> Fraction:
    if isinstance(s, str):
        return Fraction(s)
    if isinstance(s, int):
        return Fraction(s)
    raise ValueError(f"weights must be 'num/den' strings, got {s!r}")


def _parse_space(obj) -> FiniteSpace:
    size = obj["size"]
    w = obj["weights"]
    if w == "uniform":
        return FiniteSpace.uniform(size)
    if len(w) != size:
        raise ValueError("weight list does not match size")
    return FiniteSpace(tuple(_parse_weight(v) for v in w))


def _parse_grid(obj) -> FiltrationGrid:
    axes = tuple(tuple(ax) for ax in obj["axes"])
    cells = {}
    for key, labels in obj["cells"].items():
        idx = tuple(int(v) for v in key.split(","))
        cells[idx] = Partition(tuple(labels))
    return FiltrationGrid(axes=axes, cells=cells)


@dataclass
class Fixture:
    name: str
    space: FiniteSpace
    checks: list[dict]
    path: str = ""


def load_fixture(path) -> Fixture:
    path = Path(path)
    obj = json.loads(path.read_text())
    return Fixture(
        name=obj["name"],
        space=_parse_space(obj["space"]),
        checks=list(obj["checks"]),
        path=str(path),
    )


def run_fixture(fix: Fixture) -> list[CheckReport]:
    """Run every check in a fixture, prefixing report identities with its name."""
    out: list[CheckReport] = []
    for chk in fix.checks:
        kind = chk["check"]
        if kind == "independence":
            action = FiniteAction(tuple(tuple(g) for g in chk["action"]))
            reports = [verify_independence(fix.space, action)]
        elif kind == "commuting_projection":
            action = FiniteAction(tuple(tuple(g) for g in chk["action"]))
            reports = verify_prop_pro(
                fix.space,
                action,
                Partition(tuple(chk["invariant_partition"])),
                Partition(tuple(chk["coarse_partition"])),
            )
        elif kind == "invariant_limits":
            reports = [
                verify_lemma_class(
                    fix.space, tuple(chk["shift"]), Partition(tuple(chk["seed_partition"]))
                )
            ]
        elif kind == "completely_commuting":
            reports = [check_completely_commuting(fix.space, _parse_grid(chk["grid"]))]
        else:
            raise ValueError(f"unknown check kind {kind!r}")
        for r in reports:
            r.identity = f"{fix.name}:{r.identity}"
        out.extend(reports)
    return out
