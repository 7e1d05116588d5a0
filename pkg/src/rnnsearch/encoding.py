"""Fixed-length integer encodings of variable-size stacked-recurrent architectures.

Three schemes map a genotype (integer tuple) to an architecture (layer sizes
plus look-back):

* plain: ``[h1..hm, l]`` where a zero slot means "no layer here",
* flag:  ``[h1, b1, .., hm, bm, l]`` where bit ``bi`` enables layer ``hi``,
* size:  ``[h1..hm, s, l]`` where only the first ``s`` layers are kept.

Decoding is many-to-one; a plain/flag genotype is *feasible* when all of its
disabled slots trail the enabled ones, i.e. it is the canonical member of its
decode class. The penalty used by the constrained acquisition counts zeros
that precede an enabled layer (and jumps to the full genotype length for
already-evaluated genotypes).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .exceptions import EmptyArchitecture


class Scheme(Enum):
    PLAIN = "plain"
    FLAG = "flag"
    SIZE = "size"


@dataclass(frozen=True)
class SearchSpace:
    """Bounds of one encoding scheme's genotype space.

    ``neuron_lo..neuron_hi`` bounds the units per layer (plain additionally
    admits 0 per slot), ``max_layers`` bounds the depth, and look-back is
    sampled from ``[lookback_min, lookback_max]``. Well-formedness of the
    final slot is checked against ``[1, lookback_max]`` because the encoding
    itself admits look-back 1.
    """

    scheme: Scheme
    max_layers: int
    neuron_lo: int
    neuron_hi: int
    lookback_max: int
    lookback_min: int = 2

    def __post_init__(self):
        if self.neuron_lo < 1:
            raise ValueError("neuron_lo must be >= 1")
        if self.neuron_hi < self.neuron_lo:
            raise ValueError("neuron_hi must be >= neuron_lo")
        if self.max_layers < 1:
            raise ValueError("max_layers must be >= 1")
        if self.lookback_max < 2:
            raise ValueError("lookback_max must be >= 2")
        if not (1 <= self.lookback_min <= self.lookback_max):
            raise ValueError("lookback_min must lie in [1, lookback_max]")


@dataclass(frozen=True)
class Genotype:
    """Integer tuple plus the scheme it is encoded under. Hashable."""

    values: tuple
    scheme: Scheme

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))


@dataclass(frozen=True)
class Architecture:
    """Decoded network: non-empty stack of layer sizes and a look-back."""

    layer_sizes: tuple
    lookback: int

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(v) for v in self.layer_sizes))
        if len(self.layer_sizes) == 0:
            raise EmptyArchitecture("architecture must have at least one layer")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        if self.lookback < 1:
            raise ValueError("lookback must be positive")


def genotype_length(space: SearchSpace) -> int:
    m = space.max_layers
    if space.scheme is Scheme.PLAIN:
        return m + 1
    if space.scheme is Scheme.FLAG:
        return 2 * m + 1
    return m + 2


# Per-slot ordinal domains. Each slot is (lo, hi, zero_ok); its ordinal index
# space is [0, size) with index 0 mapping to the extra zero when zero_ok.


def slot_domains(space: SearchSpace) -> list:
    m = space.max_layers
    units = (space.neuron_lo, space.neuron_hi, False)
    units_or_off = (space.neuron_lo, space.neuron_hi, True)
    bit = (0, 1, False)
    lookback = (space.lookback_min, space.lookback_max, False)
    if space.scheme is Scheme.PLAIN:
        return [units_or_off] * m + [lookback]
    if space.scheme is Scheme.FLAG:
        doms = []
        for _ in range(m):
            doms += [units, bit]
        return doms + [lookback]
    return [units] * m + [(1, m, False), lookback]


def _domain_size(dom) -> int:
    lo, hi, zero_ok = dom
    return hi - lo + 1 + (1 if zero_ok and lo > 0 else 0)


def _domain_value(dom, index: int) -> int:
    lo, hi, zero_ok = dom
    if zero_ok and lo > 0:
        return 0 if index == 0 else lo + index - 1
    return lo + index


def _domain_index(dom, value: int) -> int:
    lo, hi, zero_ok = dom
    if zero_ok and lo > 0:
        return 0 if value == 0 else value - lo + 1
    return value - lo


def _domain_contains(dom, value: int) -> bool:
    lo, hi, zero_ok = dom
    return (zero_ok and value == 0) or lo <= value <= hi


def is_well_formed(g: Genotype, space: SearchSpace) -> bool:
    if g.scheme is not space.scheme or len(g.values) != genotype_length(space):
        return False
    doms = slot_domains(space)
    for v, dom in zip(g.values[:-1], doms[:-1]):
        if not _domain_contains(dom, v):
            return False
    # the encoding admits look-back down to 1 even if sampling starts higher
    return 1 <= g.values[-1] <= space.lookback_max


def _masked_layer_slots(g: Genotype, space: SearchSpace) -> list:
    """Layer-size slots with disabled entries replaced by zero (flag masking)."""
    m = space.max_layers
    if g.scheme is Scheme.PLAIN:
        return list(g.values[:m])
    return [g.values[2 * i] if g.values[2 * i + 1] == 1 else 0 for i in range(m)]


def decode(g: Genotype, space: SearchSpace) -> Architecture:
    """Map a genotype to its architecture; many genotypes share one decode."""
    m = space.max_layers
    lookback = g.values[-1]
    if g.scheme is Scheme.PLAIN:
        layers = [v for v in g.values[:m] if v > 0]
        if not layers:
            raise EmptyArchitecture("all layer slots are zero")
    elif g.scheme is Scheme.FLAG:
        layers = [g.values[2 * i] for i in range(m) if g.values[2 * i + 1] == 1]
        if not layers:
            raise EmptyArchitecture("all layer flags are off")
    else:
        s = g.values[m]
        layers = list(g.values[:s])
    return Architecture(tuple(layers), lookback)


def is_feasible(g: Genotype, space: SearchSpace) -> bool:
    """True when every disabled slot trails the enabled ones (size: always)."""
    if g.scheme is Scheme.SIZE:
        return True
    slots = _masked_layer_slots(g, space)
    seen_zero = False
    any_on = False
    for v in slots:
        if v == 0:
            seen_zero = True
        else:
            if seen_zero:
                return False
            any_on = True
    return any_on


def penalty(g: Genotype, evaluated: Iterable[Genotype]) -> int:
    """Acquisition penalty: full length for seen genotypes, else the count of
    zero slots that precede an enabled layer slot (look-back never counted)."""
    if g in evaluated:
        return len(g.values)
    if g.scheme is Scheme.SIZE:
        return 0
    m = (len(g.values) - 1) // 2 if g.scheme is Scheme.FLAG else len(g.values) - 1
    if g.scheme is Scheme.FLAG:
        slots = [g.values[2 * i] if g.values[2 * i + 1] == 1 else 0 for i in range(m)]
    else:
        slots = list(g.values[:m])
    count = 0
    zeros_pending = 0
    for v in slots:
        if v == 0:
            zeros_pending += 1
        else:
            count += zeros_pending
            zeros_pending = 0
    return count


def sample_lhs(space: SearchSpace, n: int, rng: np.random.Generator) -> list:
    """Latin hypercube sample of n genotypes.

    Each slot's ordinal range is stratified into n bins; one floor-rounded
    uniform draw lands in each bin. Ties across bins only happen when the
    range is smaller than n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    doms = slot_domains(space)
    columns = []
    for dom in doms:
        size = _domain_size(dom)
        strata = rng.permutation(n)
        u = rng.random(n)
        idx = np.floor((strata + u) / n * size).astype(int)
        np.clip(idx, 0, size - 1, out=idx)
        columns.append([_domain_value(dom, int(i)) for i in idx])
    return [Genotype(tuple(col[i] for col in columns), space.scheme) for i in range(n)]


def sample_uniform(space: SearchSpace, rng: np.random.Generator) -> Genotype:
    """One genotype with every slot drawn uniformly from its domain."""
    doms = slot_domains(space)
    vals = tuple(_domain_value(d, int(rng.integers(_domain_size(d)))) for d in doms)
    return Genotype(vals, space.scheme)


def random_mutation(g: Genotype, space: SearchSpace, rng: np.random.Generator) -> Genotype:
    """Copy of g with one uniformly chosen slot resampled to a different value."""
    doms = slot_domains(space)
    mutable = [i for i, d in enumerate(doms) if _domain_size(d) > 1]
    if not mutable:
        return Genotype(g.values, g.scheme)
    slot = mutable[int(rng.integers(len(mutable)))]
    dom = doms[slot]
    size = _domain_size(dom)
    cur = _domain_index(dom, g.values[slot])
    j = int(rng.integers(size - 1))
    if j >= cur:
        j += 1
    vals = list(g.values)
    vals[slot] = _domain_value(dom, j)
    return Genotype(tuple(vals), g.scheme)


def enumerate_genotypes(space: SearchSpace) -> list:
    """Every well-formed genotype of a (small) space, in lexicographic order.

    Look-back ranges over the full encoded interval [1, lookback_max].
    """
    import itertools

    doms = slot_domains(space)
    ranges = []
    for i, dom in enumerate(doms):
        if i == len(doms) - 1:
            ranges.append(range(1, space.lookback_max + 1))
        else:
            ranges.append([_domain_value(dom, k) for k in range(_domain_size(dom))])
    return [Genotype(vals, space.scheme) for vals in itertools.product(*ranges)]
