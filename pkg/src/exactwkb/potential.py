"""Polynomial potential algebra.

All potentials are kept in the normal form

    V(q) = q^N + v_1 q^{N-1} + ... + v_{N-1} q

(monic, zero constant term).  Constant terms are absorbed into the spectral
parameter by :func:`translate`; a non-unit leading coefficient is rejected
rather than rescaled, since a dilation would change the units of lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import digamma

from .errors import ValidationError

__all__ = [
    "PolynomialPotential",
    "ProblemParameters",
    "BetaExpansion",
    "derive_parameters",
    "conjugate",
    "translate",
    "beta_minus_one",
    "beta_expansion",
]

_REAL_TOL = 0.0  # coefficients are real only if imaginary part is exactly zero


@dataclass(frozen=True)
class PolynomialPotential:
    """Monic degree-N polynomial with zero constant term.

    ``coefficients[j-1]`` is v_j, the coefficient of q^{N-j}.
    """

    degree: int
    coefficients: tuple[complex, ...]

    def __post_init__(self):
        if self.degree < 1:
            raise ValidationError(f"degree must be >= 1, got {self.degree}")
        if len(self.coefficients) != self.degree - 1:
            raise ValidationError(
                f"degree {self.degree} needs {self.degree - 1} coefficients, "
                f"got {len(self.coefficients)}"
            )
        object.__setattr__(
            self, "coefficients", tuple(complex(v) for v in self.coefficients)
        )

    @property
    def is_real(self) -> bool:
        return all(v.imag == _REAL_TOL for v in self.coefficients)

    @property
    def is_even(self) -> bool:
        if self.degree % 2 != 0:
            return False
        return all(v == 0 for j, v in enumerate(self.coefficients, start=1) if j % 2)

    def full_coefficients(self) -> np.ndarray:
        """Coefficients [1, v_1, ..., v_{N-1}, 0] in descending powers."""
        return np.concatenate(([1.0], self.coefficients, [0.0])).astype(complex)

    def __call__(self, q):
        """Evaluate V(q); accepts scalars or arrays."""
        out = np.polyval(self.full_coefficients(), q)
        if self.is_real and np.isrealobj(q):
            return out.real
        return out

    def derivative(self, q, order: int = 1):
        """Evaluate d^order V / dq^order."""
        c = self.full_coefficients()
        for _ in range(order):
            c = np.polyder(c)
        out = np.polyval(c, q)
        if self.is_real and np.isrealobj(q):
            return out.real
        return out

    def real_view(self) -> "PolynomialPotential":
        if not self.is_real:
            raise ValidationError("potential has complex coefficients")
        return self


@dataclass(frozen=True)
class ProblemParameters:
    """Order mu = 1/2 + 1/N, symmetry angle phi = 4 pi / (N + 2), and the
    number L of distinct conjugate problems."""

    mu: Fraction
    phi: float
    L: int


def derive_parameters(potential: PolynomialPotential) -> ProblemParameters:
    """Order, symmetry angle and conjugate count of a potential."""
    n = potential.degree
    mu = Fraction(1, 2) + Fraction(1, n)
    phi = 4.0 * math.pi / (n + 2)
    if potential.is_even:
        L = n // 2 + 1
    else:
        L = n + 2
    return ProblemParameters(mu=mu, phi=phi, L=L)


@lru_cache(maxsize=None)
def _conjugation_phases(n: int, ell: int) -> tuple[complex, tuple[complex, ...]]:
    """(lambda factor, per-j coefficient multipliers) for the ell-th conjugate.

    Powers are built by repeated multiplication of the primitive phase
    exp(i*phi/2) so that conjugation is exactly periodic in ell mod 2(N+2)
    up to rounding of unit phases.
    """
    half = complex(math.cos(2.0 * math.pi / (n + 2)), math.sin(2.0 * math.pi / (n + 2)))
    t = 1.0 + 0.0j  # exp(+i ell phi / 2)
    for _ in range(ell):
        t *= half
    lam_factor = 1.0 + 0.0j  # exp(-i ell phi)
    for _ in range(2 * ell):
        lam_factor /= half
    mults = []
    p = 1.0 + 0.0j
    for _ in range(1, n):
        p *= t
        mults.append(p)  # exp(+i ell j phi / 2) for j = 1 .. N-1
    return lam_factor, tuple(mults)


def conjugate(potential: PolynomialPotential, ell: int):
    """The ell-th conjugate potential and the multiplier sending lambda to
    the conjugate problem's spectral parameter.

    V_ell(q) = e^{-i ell phi} V(e^{-i ell phi / 2} q) stays monic with zero
    constant term; coefficientwise v_j -> v_j e^{+i ell j phi / 2}.  Indices
    are taken mod L.
    """
    params = derive_parameters(potential)
    ell = int(ell) % params.L
    lam_factor, mults = _conjugation_phases(potential.degree, ell)
    coeffs = tuple(v * m for v, m in zip(potential.coefficients, mults))
    return PolynomialPotential(potential.degree, coeffs), lam_factor


def translate(potential: PolynomialPotential, q0: float):
    """Shift the origin to q0.

    Returns (W, offset) with W(x) = V(q0 + x) - V(q0) monic with zero
    constant term and offset = V(q0), so V(q0+x) + lam = W(x) + (lam + offset).
    """
    n = potential.degree
    full = potential.full_coefficients()  # descending
    # Horner in the shifted variable: accumulate V(q0 + x) as a polynomial in x.
    acc = np.zeros(1, dtype=complex)
    base = np.array([1.0, q0], dtype=complex)  # x + q0, descending
    for c in full:
        acc = np.polyadd(np.polymul(acc, base), np.array([c], dtype=complex))
    offset = acc[-1]
    shifted = acc[1:-1]
    if abs(acc[0] - 1.0) > 1e-12:
        raise ValidationError("translation lost monic normalization")
    if potential.is_real:
        shifted = shifted.real.astype(complex)
        offset = complex(offset.real, 0.0)
    return PolynomialPotential(n, tuple(shifted)), offset


def _weighted_partitions(total: int, max_part: int):
    """Multisets of parts in [1, max_part] with the given weighted sum.

    Yields dicts part -> multiplicity with sum(part * mult) == total.
    """

    def rec(remaining, largest):
        if remaining == 0:
            yield {}
            return
        for part in range(min(largest, remaining), 0, -1):
            for mult in range(remaining // part, 0, -1):
                for rest in rec(remaining - part * mult, part - 1):
                    out = dict(rest)
                    out[part] = mult
                    yield out

    yield from rec(total, max_part)


def _gamma_ratio_three_halves(m: int) -> float:
    """Gamma(3/2) / Gamma(3/2 - m) for integer m >= 0."""
    # Gamma(3/2 - m) alternates sign for m >= 2; use the reflection-free
    # product (3/2 - 1)(3/2 - 2)...(3/2 - m) = Gamma(3/2)/Gamma(3/2 - m).
    out = 1.0
    for i in range(1, m + 1):
        out *= 1.5 - i
    return out


def beta_minus_one(potential: PolynomialPotential) -> complex:
    """Coefficient of q^{-1} in the descending expansion of (V + lam)^{1/2};
    independent of lambda for N != 2.

    Evaluates the finite sum over multi-indices {r_j >= 0} with
    sum_j j*r_j = 1 + N/2.  Vanishes identically for odd N.
    """
    n = potential.degree
    if n == 2:
        raise ValidationError("beta_minus_one requires N != 2")
    if n % 2 == 1:
        return 0.0 + 0.0j
    target = 1 + n // 2
    v = potential.coefficients
    total = 0.0 + 0.0j
    for part in _weighted_partitions(target, n - 1):
        m = sum(part.values())
        term = complex(_gamma_ratio_three_halves(m))
        for j, r in part.items():
            term *= v[j - 1] ** r / math.factorial(r)
        total += term
    return total


def beta_minus_one_s_derivative(potential: PolynomialPotential) -> complex:
    """d/ds at s=0 of the q^{-1} coefficient of (V + lam)^{1/2 - s}.

    Needed by the finite-part rule for regularized actions.
    """
    n = potential.degree
    if n == 2:
        raise ValidationError("requires N != 2")
    if n % 2 == 1:
        return 0.0 + 0.0j
    target = 1 + n // 2
    v = potential.coefficients
    psi_32 = digamma(1.5)
    total = 0.0 + 0.0j
    for part in _weighted_partitions(target, n - 1):
        m = sum(part.values())
        term = complex(_gamma_ratio_three_halves(m)) * (digamma(1.5 - m) - psi_32)
        for j, r in part.items():
            term *= v[j - 1] ** r / math.factorial(r)
        total += term
    return total


def _series_mul(a: np.ndarray, b: np.ndarray, depth: int) -> np.ndarray:
    return np.convolve(a, b)[:depth]


def _series_sqrt_one_plus(u: np.ndarray, depth: int) -> np.ndarray:
    """sqrt(1 + u) for a series u with u[0] = 0, via the binomial series."""
    out = np.zeros(depth, dtype=complex)
    out[0] = 1.0
    power = np.zeros(depth, dtype=complex)
    power[0] = 1.0
    coeff = 1.0
    for t in range(1, depth):
        coeff *= (0.5 - (t - 1)) / t  # binomial(1/2, t)
        power = _series_mul(power, u, depth)
        if not power.any():
            break
        out += coeff * power
    return out


@dataclass(frozen=True)
class BetaExpansion:
    """Descending expansion (V(q) + lam)^{1/2} = sum_sigma beta_sigma q^sigma.

    Exponents run down from N/2 in integer steps; ``terms`` maps each
    exponent (a Fraction) to its coefficient at the stored lambda.
    """

    degree: int
    lam: complex
    terms: dict

    def coefficient(self, sigma) -> complex:
        return self.terms.get(Fraction(sigma), 0.0 + 0.0j)

    @property
    def exponents(self):
        return sorted(self.terms, reverse=True)


def beta_expansion(
    potential: PolynomialPotential, lam: complex, depth: int
) -> BetaExpansion:
    """First ``depth`` coefficients of the large-q expansion of (V + lam)^{1/2}.

    Computed by formal power-series square root in x = 1/q:
    (V + lam)^{1/2} = q^{N/2} sqrt(1 + sum_j v_j x^j + lam x^N).
    """
    if depth < 1:
        raise ValidationError("depth must be >= 1")
    n = potential.degree
    u = np.zeros(depth, dtype=complex)
    for j, v in enumerate(potential.coefficients, start=1):
        if j < depth:
            u[j] += v
    if n < depth:
        u[n] += lam
    series = _series_sqrt_one_plus(u, depth)
    terms = {Fraction(n, 2) - i: series[i] for i in range(depth)}
    return BetaExpansion(degree=n, lam=complex(lam), terms=terms)
