"""Dyadic inverse-invariant approximation to the uniform average over S_R.

A branch register of q bits addresses 2^q permutations: ranks below
L*R! cycle through the full lexicographic enumeration L times, the
remaining b ranks all map to the identity.  Counts and probabilities
are exact integers and Fractions; only the averaged routing matrix is
floating point (with exactly representable dyadic entries).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .tensor import RealOperator, copy_permutation
from .symmetric import DENSE_DIM_CAP

MAX_COPIES = 12
MAX_ENUMERATION = 10  # factorial enumeration of S_R only below this R


def unrank_permutation(rank: int, n: int) -> tuple[int, ...]:
    """Lexicographic unranking via the factorial number system; rank 0 is the identity."""
    if not 0 <= rank < math.factorial(n):
        raise ValueError("rank out of range")
    values = list(range(n))
    out = []
    for i in range(n):
        f = math.factorial(n - 1 - i)
        digit, rank = divmod(rank, f)
        out.append(values.pop(digit))
    return tuple(out)


@dataclass(frozen=True)
class DyadicPermutationSampler:
    """Branch-register description of the dyadic distribution on S_R."""

    copies: int
    eta: float
    q: int
    factorial: int
    branch_count: int
    cycle_count: int
    identity_excess: int

    @property
    def num_branch_bits(self) -> int:
        return self.q


def build_sampler(copies: int, eta: float) -> DyadicPermutationSampler:
    """Smallest branch register with 2 * R! / 2^q <= eta."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if not 1 <= copies <= MAX_COPIES:
        raise ValueError(f"copies must be between 1 and {MAX_COPIES}")
    n = math.factorial(copies)
    target = Fraction(2 * n) / Fraction(eta)
    q = 1
    while (1 << q) < target:
        q += 1
    big_q = 1 << q
    cycle = big_q // n
    excess = big_q - cycle * n
    return DyadicPermutationSampler(copies, eta, q, n, big_q, cycle, excess)


def pi_of(sampler: DyadicPermutationSampler, t: int) -> tuple[int, ...]:
    """Permutation addressed by branch value t."""
    if not 0 <= t < sampler.branch_count:
        raise ValueError("branch value out of range")
    if t < sampler.cycle_count * sampler.factorial:
        return unrank_permutation(t % sampler.factorial, sampler.copies)
    return tuple(range(sampler.copies))


def distribution(sampler: DyadicPermutationSampler) -> dict[tuple[int, ...], Fraction]:
    """Exact probability of each permutation under a uniform branch register."""
    if sampler.copies > MAX_ENUMERATION:
        raise ValueError("distribution enumeration limited to small copy counts")
    base = Fraction(sampler.cycle_count, sampler.branch_count)
    out = {
        unrank_permutation(j, sampler.copies): base for j in range(sampler.factorial)
    }
    identity = tuple(range(sampler.copies))
    out[identity] = Fraction(
        sampler.cycle_count + sampler.identity_excess, sampler.branch_count
    )
    return out


def total_variation(sampler: DyadicPermutationSampler) -> Fraction:
    """Exact total deviation from uniform: sum over tau of |p(tau) - 1/R!|."""
    n, q, b = sampler.factorial, sampler.branch_count, sampler.identity_excess
    return Fraction(2 * b * (n - 1), n * q)


def approx_projector(
    sampler: DyadicPermutationSampler, local_dim: int, cap: int = DENSE_DIM_CAP
) -> RealOperator:
    """Averaged routing operator: entrywise nonnegative, self-adjoint, within eta of the projector."""
    dim = local_dim**sampler.copies
    if dim > cap:
        raise ValueError(f"dimension {dim} above the cap of {cap}")
    counts = np.zeros((dim, dim))
    for j in range(sampler.factorial):
        tau = unrank_permutation(j, sampler.copies)
        counts += copy_permutation(tau, local_dim).entries
    counts *= sampler.cycle_count
    counts += sampler.identity_excess * np.eye(dim)
    layout = copy_permutation(tuple(range(sampler.copies)), local_dim).layout
    return RealOperator(layout, counts / float(sampler.branch_count))
