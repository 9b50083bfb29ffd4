"""Prime-field arithmetic and symmetric bivariate polynomials.

Field elements are plain Python ints in ``[0, Q)``; Python's arbitrary
precision means no intermediate overflow for any modulus.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sympy import isprime

DEFAULT_MODULUS = 2**31 - 1


class ModulusError(ValueError):
    """The modulus is not a usable prime."""


def check_modulus(modulus: int, minimum: int = 2) -> None:
    if modulus < minimum:
        raise ModulusError(f"modulus {modulus} is below {minimum}")
    if not isprime(modulus):
        raise ModulusError(f"modulus {modulus} is not prime")


@dataclass(frozen=True)
class UnivariatePoly:
    """Polynomial over Z_Q, constant term first."""

    modulus: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        for c in self.coeffs:
            if not 0 <= c < self.modulus:
                raise ValueError(f"coefficient {c} outside [0, {self.modulus})")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, y: int) -> int:
        return eval_univariate(self, y)


@dataclass(frozen=True)
class SymmetricBivariatePoly:
    """Master secret P(x, y) = sum a_ij x^i y^j mod Q with a_ij = a_ji."""

    degree: int
    modulus: int
    coeffs: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        size = self.degree + 1
        if len(self.coeffs) != size or any(len(row) != size for row in self.coeffs):
            raise ValueError(f"coefficient matrix must be {size}x{size}")
        for i in range(size):
            for j in range(size):
                a = self.coeffs[i][j]
                if a != self.coeffs[j][i]:
                    raise ValueError(f"a[{i}][{j}] != a[{j}][{i}]")
                if not 1 <= a <= self.modulus - 1:
                    raise ValueError(f"a[{i}][{j}]={a} outside [1, Q-1]")

    def __call__(self, x: int, y: int) -> int:
        return eval_bivariate(self, x, y)


def gen_master_poly(degree: int, modulus: int = DEFAULT_MODULUS, seed: int = 0) -> SymmetricBivariatePoly:
    """Draw a random symmetric master polynomial.

    The upper triangle (i <= j, row-major) is drawn uniformly from
    ``[1, Q-1]`` and mirrored, so exactly (t+1)(t+2)/2 values are consumed
    from the generator seeded with ``seed``.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    check_modulus(modulus, minimum=3)
    rng = np.random.default_rng(seed)
    size = degree + 1
    draws = iter(int(v) for v in rng.integers(1, modulus, size=size * (size + 1) // 2))
    matrix = [[0] * size for _ in range(size)]
    for i in range(size):
        for j in range(i, size):
            matrix[i][j] = matrix[j][i] = next(draws)
    return SymmetricBivariatePoly(degree, modulus, tuple(tuple(row) for row in matrix))


def _check_point(value: int, modulus: int) -> None:
    if not 0 <= value < modulus:
        raise ValueError(f"{value} is not an element of Z_{modulus}")


def eval_univariate(g: UnivariatePoly, y: int) -> int:
    _check_point(y, g.modulus)
    acc = 0
    for c in reversed(g.coeffs):
        acc = (acc * y + c) % g.modulus
    return acc


def eval_bivariate(P: SymmetricBivariatePoly, x: int, y: int) -> int:
    """Nested Horner: outer over powers of x, inner over powers of y."""
    q = P.modulus
    _check_point(x, q)
    _check_point(y, q)
    acc = 0
    for row in reversed(P.coeffs):
        inner = 0
        for a in reversed(row):
            inner = (inner * y + a) % q
        acc = (acc * x + inner) % q
    return acc


def restrict_to_x(P: SymmetricBivariatePoly, x0: int) -> UnivariatePoly:
    """Return g(y) = P(x0, y); coefficient k is sum_i a_ik x0^i."""
    q = P.modulus
    _check_point(x0, q)
    size = P.degree + 1
    coeffs = []
    for k in range(size):
        acc = 0
        for i in reversed(range(size)):
            acc = (acc * x0 + P.coeffs[i][k]) % q
        coeffs.append(acc)
    return UnivariatePoly(q, tuple(coeffs))


def interpolate_oracle(points: Sequence[tuple[int, int]], modulus: int) -> UnivariatePoly:
    """Lagrange interpolation over Z_Q; returns the unique poly of degree < len(points).

    Used as an independent check on share derivation, so it builds the
    coefficient form from scratch rather than reusing the evaluators above.
    """
    if not points:
        raise ValueError("need at least one point")
    xs = [x % modulus for x, _ in points]
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate x-coordinates")
    m = len(points)
    result = [0] * m
    for i, (xi, yi) in enumerate(points):
        # basis numerator prod_{j != i} (y - x_j), built as coefficient list
        basis = [1]
        denom = 1
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            basis = [(b - xj * a) % modulus for a, b in zip(basis + [0], [0] + basis)]
            denom = denom * (xi - xj) % modulus
        scale = yi * pow(denom, -1, modulus) % modulus
        for k, b in enumerate(basis):
            result[k] = (result[k] + scale * b) % modulus
    return UnivariatePoly(modulus, tuple(result))
