"""Exact monomial integrals over unit spheres and balls.

The single closed form used everywhere is

    C_{p_1...p_n} = int_{S^{n-1}} (x^1)^{p_1} ... (x^n)^{p_n} dS
                  = 0                                      if any p_i is odd,
                  = 2 Gamma(b_1)...Gamma(b_n) / Gamma(b_1+...+b_n),
                    b_i = (p_i + 1)/2,                     otherwise,

with the ball counterpart D = eps^(n+|p|)/(n+|p|) * C.  Index-pattern
integrals (products of coordinate functions with repeated indices) reduce to
the same formula by multiplicity counting, which replaces the hand
bookkeeping of the degree-4 and degree-6 contraction expansions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class MultiIndex:
    """Exponents (p_1, ..., p_n) of a coordinate monomial."""

    powers: tuple[int, ...]

    def __post_init__(self):
        if len(self.powers) < 1:
            raise ValueError("MultiIndex needs at least one exponent")
        if any((not isinstance(p, (int, np.integer))) or p < 0 for p in self.powers):
            raise ValueError(f"exponents must be non-negative integers, got {self.powers}")

    @property
    def degree(self) -> int:
        return int(sum(self.powers))


def _as_powers(n: int, p) -> tuple[int, ...]:
    if isinstance(p, MultiIndex):
        powers = p.powers
    else:
        powers = tuple(int(q) for q in p)
    if len(powers) != n:
        raise ValueError(f"need {n} exponents, got {len(powers)}")
    if any(q < 0 for q in powers):
        raise ValueError(f"exponents must be non-negative, got {powers}")
    return powers


def monomial_sphere_integral(n: int, p) -> float:
    """Integral of the monomial x^p over the unit sphere S^(n-1).

    Evaluated through log-gamma so large dimensions and degrees do not
    overflow.  Zero as soon as one exponent is odd.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got n={n}")
    powers = _as_powers(n, p)
    if any(q % 2 == 1 for q in powers):
        return 0.0
    b = [(q + 1) / 2.0 for q in powers]
    log_val = math.log(2.0) + sum(math.lgamma(bi) for bi in b) - math.lgamma(sum(b))
    return math.exp(log_val)


def monomial_ball_integral(n: int, p, eps: float) -> float:
    """Integral of x^p over the ball of radius eps in R^n."""
    if eps <= 0.0:
        raise ValueError(f"radius must be positive, got eps={eps}")
    powers = _as_powers(n, p)
    total = n + sum(powers)
    return eps**total / total * monomial_sphere_integral(n, powers)


def index_pattern_integral(n: int, indices: Sequence[int]) -> float:
    """Sphere integral of a product of coordinates given by index (1-based).

    ``indices = (1, 1, 2, 2)`` means the integrand x^1 x^1 x^2 x^2.  Counting
    multiplicities converts the pattern to a MultiIndex, so every case of the
    degree-4 and degree-6 contraction tables falls out of the same formula.
    """
    powers = [0] * n
    for idx in indices:
        i = int(idx)
        if i < 1 or i > n:
            raise ValueError(f"coordinate index {i} out of range 1..{n}")
        powers[i - 1] += 1
    return monomial_sphere_integral(n, powers)


def ball_volume(n: int, eps: float = 1.0) -> float:
    """Volume of the ball of radius eps in R^n, pi^(n/2) eps^n / Gamma(n/2+1)."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got n={n}")
    if eps <= 0.0:
        raise ValueError(f"radius must be positive, got eps={eps}")
    return math.exp(0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0)) * eps**n


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^(n-1) in R^n."""
    return n * ball_volume(n, 1.0)


def pattern_label_to_powers(n: int, label: str) -> tuple[int, ...]:
    """Map a compact even-pattern label like '22' or '6' to n exponents.

    '2' -> (2,0,...), '22' -> (2,2,0,...), '24' -> (2,4,0,...).  Labels list
    one digit per distinct coordinate, so they must fit in n slots.
    """
    digits = [int(ch) for ch in label]
    if label == "0":
        digits = [0]
    if len(digits) > n:
        raise ValueError(f"pattern '{label}' uses more coordinates than n={n}")
    powers = [0] * n
    for i, d in enumerate(digits):
        powers[i] = d
    return tuple(powers)


def even_patterns_up_to(max_degree: int) -> list[str]:
    """Labels of all even-exponent patterns with total degree <= max_degree.

    Each label is a partition of an even number into even parts, one digit
    per part ('0', '2', '4', '22', '6', '24', '222', ...).
    """
    labels = ["0"]
    for degree in range(2, max_degree + 1, 2):
        for parts in _even_partitions(degree):
            labels.append("".join(str(p) for p in parts))
    return labels


def _even_partitions(total: int, largest: int | None = None) -> list[tuple[int, ...]]:
    if largest is None:
        largest = total
    if total == 0:
        return [()]
    out = []
    for part in range(min(total, largest), 1, -2):
        if part % 2:
            continue
        for rest in _even_partitions(total - part, part):
            out.append((part,) + rest)
    return out


def monte_carlo_sphere_integral(
    n: int, p, samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte-Carlo estimate (value, standard error) of a sphere monomial.

    Uniform directions from normalized Gaussian draws; the mean of the
    monomial times the sphere area estimates the integral.
    """
    powers = _as_powers(n, p)
    x = rng.standard_normal((samples, n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    vals = np.ones(samples)
    for i, q in enumerate(powers):
        if q:
            vals = vals * x[:, i] ** q
    area = sphere_area(n)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(samples))
    return area * mean, area * se
