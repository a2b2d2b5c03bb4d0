"""Eigenvalue counting asymptotics.

The large-E counting function of the half-line Dirichlet/Neumann union
spectrum is a descending power series  n(E) = sum_{alpha} b_alpha E^alpha
with exponents alpha = mu, mu - 1/N, mu - 2/N, ...; at index k (even for
the Neumann class, odd for Dirichlet) the k-th eigenvalue satisfies
n(E_k) ~ k + 1/2.  Only the alpha > 0 coefficients are classical and they
are computed here exactly, by termwise Beta-function continuation of the
action integral; deeper corrections are not modelled and are compensated
by keeping more stored eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gamma as _gamma

from .errors import NoRoot, ValidationError
from .potential import PolynomialPotential, _weighted_partitions

__all__ = [
    "TailModel",
    "bs_coefficients",
    "deep_tail_model",
    "invert_counting",
    "counterterm_sum",
]


@dataclass(frozen=True)
class TailModel:
    """Truncated eigenvalue-counting series of one parity class.

    ``exponents`` descend from mu in steps of 1/N and stay positive in the
    standard construction; extra non-positive slots are allowed for
    synthetic spectra and are ignored by the counterterm bracket.
    """

    exponents: tuple
    coefficients: tuple
    parity: str

    def __post_init__(self):
        if self.parity not in ("+", "-"):
            raise ValidationError("parity must be '+' or '-'")
        if len(self.exponents) != len(self.coefficients):
            raise ValidationError("exponents and coefficients length mismatch")
        object.__setattr__(self, "exponents", tuple(Fraction(a) for a in self.exponents))
        object.__setattr__(
            self, "coefficients", tuple(complex(c) for c in self.coefficients)
        )
        if any(
            a <= b for a, b in zip(self.exponents[:-1], self.exponents[1:])
        ):
            raise ValidationError("exponents must be strictly descending")

    @property
    def mu(self) -> Fraction:
        return self.exponents[0]

    @property
    def is_real(self) -> bool:
        return all(c.imag == 0.0 for c in self.coefficients)

    def counting(self, e):
        """n(E) = sum b_alpha E^alpha, principal powers for complex E."""
        e = np.asarray(e, dtype=complex)
        log_e = np.log(e)
        out = np.zeros_like(e)
        for a, c in zip(self.exponents, self.coefficients):
            out += c * np.exp(float(a) * log_e)
        return out if out.ndim else complex(out)

    def counting_derivative(self, e, order: int = 1):
        """d^order/dE^order of the counting series."""
        e = np.asarray(e, dtype=complex)
        log_e = np.log(e)
        out = np.zeros_like(e)
        for a, c in zip(self.exponents, self.coefficients):
            fac = 1.0
            for i in range(order):
                fac *= float(a) - i
            if fac != 0.0:
                out += c * fac * np.exp((float(a) - order) * log_e)
        return out if out.ndim else complex(out)

    def positive_part(self) -> "TailModel":
        keep = [(a, c) for a, c in zip(self.exponents, self.coefficients) if a > 0]
        return TailModel(
            exponents=tuple(a for a, _ in keep),
            coefficients=tuple(c for _, c in keep),
            parity=self.parity,
        )


def _binom_half(m: int) -> float:
    out = 1.0
    for t in range(1, m + 1):
        out *= (0.5 - (t - 1)) / t
    return out


def _beta_fn(x: float, y: float) -> float:
    return _gamma(x) * _gamma(y) / _gamma(x + y)


def bs_coefficients(potential: PolynomialPotential, parity: str = "+") -> TailModel:
    """All positive-exponent counting coefficients b_alpha of a potential.

    Valid for even degree N >= 4 (the closed-orbit expansion; for N >= 3
    every alpha > 0 coefficient is classical).  Each b_alpha is a
    polynomial in the v_j of weighted degree (mu - alpha) N.
    """
    n = potential.degree
    if n <= 2:
        raise ValidationError("counting coefficients require degree N >= 3")
    v = potential.coefficients
    mu = Fraction(1, 2) + Fraction(1, n)
    exps, coeffs = [], []
    w = 0
    while mu - Fraction(w, n) > 0:
        total = 0.0 + 0.0j
        if w == 0:
            total = complex(_beta_fn(1.0 / n, 1.5))
        else:
            for part in _weighted_partitions(w, n - 1):
                m = sum(part.values())
                j = m * n - w
                term = _binom_half(m) * math.factorial(m) * (-1.0) ** m
                term *= _beta_fn((j + 1) / n, 1.5 - m)
                for i, r in part.items():
                    term *= v[i - 1] ** r / math.factorial(r)
                total += term
        exps.append(mu - Fraction(w, n))
        coeffs.append(total * 2.0 / (math.pi * n))
        w += 1
    return TailModel(exponents=tuple(exps), coefficients=tuple(coeffs), parity=parity)


def _classical_counting_coefficient(potential: PolynomialPotential, w: int) -> complex:
    """Termwise-continued classical coefficient at exponent mu - w/N."""
    n = potential.degree
    v = potential.coefficients
    if w == 0:
        return complex(_beta_fn(1.0 / n, 1.5)) * 2.0 / (math.pi * n)
    total = 0.0 + 0.0j
    for part in _weighted_partitions(w, n - 1):
        m = sum(part.values())
        j = m * n - w
        term = _binom_half(m) * math.factorial(m) * (-1.0) ** m
        b = _beta_fn((j + 1) / n, 1.5 - m)
        if not math.isfinite(b):
            continue
        term *= b
        for i, r in part.items():
            term *= v[i - 1] ** r / math.factorial(r)
        total += term
    return total * 2.0 / (math.pi * n)


def _binom_minus_half(m: int) -> float:
    out = 1.0
    for t in range(1, m + 1):
        out *= (-0.5 - (t - 1)) / t
    return out


def first_quantum_counting_terms(potential: PolynomialPotential, w_max: int) -> dict:
    """Leading quantum correction to the counting function,
    n_q(E) = -(1/(48 pi)) d/dE of the continued orbit integral of V''/p.

    Returns a map exponent -> coefficient; the leading entry sits at
    exponent -mu (weight w = N + 2).
    """
    n = potential.degree
    # second-derivative coefficients: V''(q) = sum_d c2[d] q^d
    c2 = {}
    c2[n - 2] = float(n * (n - 1))
    for i, v in enumerate(potential.coefficients, start=1):
        d = n - i - 2
        if d >= 0 and v != 0:
            c2[d] = c2.get(d, 0.0 + 0.0j) + (n - i) * (n - i - 1) * v
    u = potential.coefficients  # inhomogeneous part, weights 1..N-1
    out = {}
    # (E - V)^{-1/2} expanded about (E - q^N); m-th term carries (-U)^m
    max_m = max(0, w_max - 0)
    # polynomial coefficients of (-U)^m by repeated convolution, indexed by weight
    neg_u = np.zeros(n, dtype=complex)  # index = weight i, coefficient of q^{n-i}
    for i, v in enumerate(u, start=1):
        neg_u[i] = -v
    neg_u[0] = 0.0
    power = np.zeros(1, dtype=complex)
    power[0] = 1.0  # (-U)^0, weight-indexed
    for m in range(0, max_m + 1):
        if m > 0:
            power = np.convolve(power, neg_u)[: w_max + 1]
            if not power.any():
                break
        for d, cd in c2.items():
            for w_u in range(min(len(power), w_max + 1)):
                cu = power[w_u]
                if cu == 0:
                    continue
                # total power of q: j = d + m*N - w_u
                j = d + m * n - w_u
                if j < 0:
                    continue
                expo = Fraction(j + 1, n) - Fraction(1, 2) - m  # E-exponent before d/dE
                w_eff = n + 2 + (n - 2 - d) + w_u  # alpha = mu - w_eff/N after d/dE
                if w_eff > w_max:
                    continue
                b = _beta_fn((j + 1) / n, 0.5 - m)
                if not math.isfinite(b):
                    continue
                amp = 4.0 * _binom_minus_half(m) * cd * cu * b / n
                amp *= float(expo)  # d/dE
                alpha = expo - 1
                out[alpha] = out.get(alpha, 0.0 + 0.0j) - amp / (48.0 * math.pi)
    return {a: c for a, c in out.items() if c != 0}


def deep_tail_model(potential: PolynomialPotential, parity: str = "+") -> TailModel:
    """Counting model extended below alpha = 0.

    Keeps every classical coefficient that is uncontaminated by quantum
    corrections (weights w <= N+1, exponents down to -1/2) and adds the
    first quantum correction, whose leading exponent is -mu.  Used for
    asymptotic tail eigenvalues in determinant and zeta evaluations, where
    the default positive-exponent model is too shallow.
    """
    n = potential.degree
    if n <= 2:
        raise ValidationError("counting coefficients require degree N >= 3")
    mu = Fraction(1, 2) + Fraction(1, n)
    w_cap = n + 2 + n // 2
    terms = {}
    for w in range(0, w_cap + 1):
        c = _classical_counting_coefficient(potential, w)
        if c != 0:
            terms[mu - Fraction(w, n)] = terms.get(mu - Fraction(w, n), 0j) + c
    for a, c in first_quantum_counting_terms(potential, w_cap).items():
        terms[a] = terms.get(a, 0.0 + 0.0j) + c
    exps = sorted(terms, reverse=True)
    return TailModel(
        exponents=tuple(exps),
        coefficients=tuple(terms[a] for a in exps),
        parity=parity,
    )


def counterterm_sum(tail: TailModel, e_k: complex) -> complex:
    """Counterterm bracket (1/2) sum_{alpha>0} b_alpha E_K^alpha (log E_K - 1/alpha)."""
    e_k = complex(e_k)
    if e_k == 0:
        raise ValidationError("E_K must be nonzero")
    log_e = np.log(e_k)
    total = 0.0 + 0.0j
    for a, c in zip(tail.exponents, tail.coefficients):
        if a <= 0:
            continue
        af = float(a)
        total += c * np.exp(af * log_e) * (log_e - 1.0 / af)
    return 0.5 * complex(total)


def _index_offset(parity: str) -> int:
    return 0 if parity == "+" else 1


def level_index(parity: str, position: int) -> int:
    """Global index k of the position-th stored level of one parity class."""
    return 2 * position + _index_offset(parity)


def invert_counting(tail: TailModel, parity: str, k: int) -> float:
    """Unique positive root of n(E) = k + 1/2 for a real counting series.

    Seeds from the leading term and polishes by safeguarded Newton; used
    for fixed-point initialization and asymptotic tail eigenvalues.
    """
    if k < 0:
        raise ValidationError("k must be >= 0")
    if parity not in ("+", "-"):
        raise ValidationError("parity must be '+' or '-'")
    if k % 2 != _index_offset(parity):
        raise ValidationError(f"index k={k} does not belong to parity '{parity}'")
    if not tail.is_real:
        raise ValidationError("invert_counting requires a real counting series")
    target = k + 0.5
    root = _invert_real(tail, target)
    return root


def _counting_real(tail: TailModel, e: float) -> float:
    return sum(
        c.real * e ** float(a) for a, c in zip(tail.exponents, tail.coefficients)
    )


def _counting_real_derivative(tail: TailModel, e: float) -> float:
    return sum(
        c.real * float(a) * e ** (float(a) - 1.0)
        for a, c in zip(tail.exponents, tail.coefficients)
        if a != 0
    )


def _invert_real(tail: TailModel, target: float) -> float:
    b_mu = tail.coefficients[0].real
    mu = float(tail.mu)
    if b_mu <= 0:
        raise NoRoot("leading counting coefficient must be positive")
    seed = (max(target, 1e-8) / b_mu) ** (1.0 / mu)
    lo = hi = None
    for j in range(-60, 40):
        e = seed * 2.0 ** (j / 2.0)
        val = _counting_real(tail, e)
        if val < target:
            lo = e
        elif lo is not None:
            hi = e
            break
    if lo is None or hi is None:
        raise NoRoot(f"no bracket for counting target {target}")
    # bisection + Newton polish inside the bracket
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _counting_real(tail, mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    e = 0.5 * (lo + hi)
    for _ in range(8):
        d = _counting_real_derivative(tail, e)
        if d <= 0:
            raise NoRoot("counting series non-monotonic at the root")
        step = (_counting_real(tail, e) - target) / d
        e_new = e - step
        if not (lo * 0.5 <= e_new <= hi * 2.0):
            break
        e = e_new
        if abs(step) <= 1e-15 * e:
            break
    if _counting_real_derivative(tail, e) <= 0:
        raise NoRoot("counting series non-monotonic at the root")
    return e


def invert_counting_complex(tail: TailModel, k: int, seed: complex) -> complex:
    """Root of n(E) = k + 1/2 for a complex-coefficient counting series,
    by damped Newton from the given seed."""
    target = k + 0.5
    e = complex(seed)
    for _ in range(80):
        f = tail.counting(e) - target
        d = tail.counting_derivative(e)
        step = f / d
        # keep iterates away from the branch cut and the origin
        damp = 1.0
        while abs(step) * damp > 0.5 * abs(e):
            damp *= 0.5
        e_new = e - damp * step
        if e_new.real <= 0 and abs(e_new.imag) < 1e-12 * abs(e_new):
            e_new = complex(abs(e_new), e.imag)
        if abs(e_new - e) <= 1e-14 * abs(e_new):
            return e_new
        e = e_new
    raise NoRoot(f"complex counting inversion stalled at k={k}")
