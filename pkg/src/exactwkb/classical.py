"""Classical zeta-regularization of improper action integrals.

The improper action int_q^inf (V + lam)^{1/2} diverges; its regularized
value is defined by analytic continuation in the exponent, with the
finite part fixed so that the large-lambda expansion is canonical
(no stand-alone integer powers of lambda and no additive constants).
This is the classical analogue of a zeta-regularized log-determinant,
and classical_wkb packages the canonically normalized recessive WKB pair
built from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gamma as _gamma

from .errors import NotConverged, Overflow, TurningPointOnPath, ValidationError
from .potential import (
    PolynomialPotential,
    beta_expansion,
    beta_minus_one,
    beta_minus_one_s_derivative,
    translate,
)

__all__ = [
    "RegularizedAction",
    "WkbPair",
    "elliptic_k",
    "elliptic_e",
    "homogeneous_action",
    "quartic_action",
    "regularized_action",
    "classical_wkb",
]

# finite-part constant from the s->0 structure of the phase-space trace,
# Gamma(s - 1/2) / (sqrt(pi) Gamma(s)) = -2s [1 + (2 - 2 log 2) s + O(s^2)]
_KAPPA = 2.0 - 2.0 * math.log(2.0)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def elliptic_k(k: float) -> float:
    """Complete elliptic integral K(k), modulus convention (argument k, not m=k^2)."""
    if not 0.0 <= k < 1.0:
        raise ValidationError(f"elliptic_k needs 0 <= k < 1, got {k}")
    a, b = 1.0, math.sqrt(1.0 - k * k)
    for _ in range(60):
        if abs(a - b) <= 2e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def elliptic_e(k: float) -> float:
    """Complete elliptic integral E(k), modulus convention (argument k, not m=k^2)."""
    if not 0.0 <= k <= 1.0:
        raise ValidationError(f"elliptic_e needs 0 <= k <= 1, got {k}")
    if k == 1.0:
        return 1.0
    a, b, c = 1.0, math.sqrt(1.0 - k * k), k
    total = 0.5 * c * c
    power = 1.0  # 2^{n-1} with n starting at 1
    for _ in range(60):
        if abs(a - b) <= 2e-16 * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        total += power * c * c
        power *= 2.0
    return math.pi / (2.0 * a) * (1.0 - total)


@dataclass(frozen=True)
class RegularizedAction:
    """Zeta-regularized value of int_q^inf (V + lam)^{1/2}; finite for every
    lambda off the negative branch cut."""

    value: complex
    endpoint: float
    lam: complex


@dataclass(frozen=True)
class WkbPair:
    """Canonically normalized recessive WKB value and derivative at one point."""

    psi: complex
    dpsi: complex


def homogeneous_action(n: int, lam: complex) -> complex:
    """Closed form of the regularized int_0^inf (q^n + lam)^{1/2}.

    Principal branch of lam powers and logs; cut on the negative real axis.
    """
    if n < 1:
        raise ValidationError("degree must be >= 1")
    lam = complex(lam)
    if n == 2:
        return -0.25 * lam * (np.log(lam) - 1.0)
    coeff = -_gamma(1.0 + 1.0 / n) * _gamma(-0.5 - 1.0 / n) / (2.0 * math.sqrt(math.pi))
    mu = 0.5 + 1.0 / n
    value = coeff * np.exp(mu * np.log(lam)) if lam != 0 else 0.0j
    return complex(value)


def quartic_action(v: float, lam: float) -> float:
    """Regularized int_0^inf (q^4 + v q^2 + lam)^{1/2} for v, lam >= 0,
    in terms of complete elliptic integrals.

    The modulus switches branch at v = 2 sqrt(lam); both branches agree there.
    """
    if v < 0 or lam < 0:
        raise ValidationError("quartic_action requires v >= 0 and lam >= 0")
    if lam == 0.0:
        # K-term carries a vanishing prefactor; only the E(1) = 1 piece survives
        return -(v ** 1.5) / 3.0
    s = math.sqrt(lam)
    if v >= 2.0 * s:
        k = math.sqrt((v - 2.0 * s) / (v + 2.0 * s))
        return (
            math.sqrt(v + 2.0 * s) * (2.0 * s * elliptic_k(k) - v * elliptic_e(k)) / 3.0
        )
    kt = math.sqrt(2.0 * s - v) / (2.0 * lam ** 0.25)
    return (
        lam ** 0.25 * ((2.0 * s + v) * elliptic_k(kt) - 2.0 * v * elliptic_e(kt)) / 3.0
    )


def _real_turning_point_on_halfline(potential: PolynomialPotential, lam: complex):
    """Largest real root of V + lam in [0, inf), or None."""
    if abs(lam.imag) > 0 or not potential.is_real:
        return None
    coeffs = potential.full_coefficients().real.astype(float)
    coeffs[-1] += lam.real
    roots = np.roots(coeffs)
    real = [r.real for r in roots if abs(r.imag) <= 1e-9 * (1.0 + abs(r))]
    on_path = [r for r in real if r >= -1e-12]
    return max(on_path) if on_path else None


def _pi_lambda(potential: PolynomialPotential, lam: complex, q):
    """(V(q) + lam)^{1/2}, branch continuous on [q, inf) and positive at +inf."""
    w = potential(q) + lam
    return np.sqrt(w.astype(complex) if isinstance(w, np.ndarray) else complex(w))


def _quad_momentum(potential: PolynomialPotential, lam: complex, upper: float) -> complex:
    """Gauss-Legendre integral of (V + lam)^{1/2} over [0, upper]."""
    total = 0.0 + 0.0j
    edges = np.linspace(0.0, upper, 13)
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        q = mid + half * _GL_NODES
        total += half * np.sum(_GL_WEIGHTS * _pi_lambda(potential, lam, q))
    return total


def _action_at_origin(
    potential: PolynomialPotential, lam: complex, split: float, depth: int
) -> complex:
    """Finite-part action over [0, inf) with explicit split point."""
    n = potential.degree
    expansion = beta_expansion(potential, lam, depth)
    head = _quad_momentum(potential, lam, split)
    tail = 0.0 + 0.0j
    log_split = math.log(split)
    for sigma in expansion.exponents:
        c = expansion.terms[sigma]
        if sigma == Fraction(-1):
            tail += -c * log_split
        else:
            tail += -c * split ** float(sigma + 1) / float(sigma + 1)
    b_m1 = beta_minus_one(potential)
    correction = (beta_minus_one_s_derivative(potential) + _KAPPA * b_m1) / n
    return head + tail + correction


def _truncation_scale(
    potential: PolynomialPotential, lam: complex, split: float, depth: int
) -> float:
    """Magnitude of the first neglected tail term at the given depth."""
    expansion = beta_expansion(potential, lam, depth + 3)
    sigmas = expansion.exponents[depth:]
    worst = 0.0
    for sigma in sigmas:
        c = expansion.terms[sigma]
        denom = 1.0 if sigma == Fraction(-1) else abs(float(sigma + 1))
        worst = max(worst, abs(c) * split ** float(sigma + 1) / denom)
    return worst


def regularized_action(
    potential: PolynomialPotential, lam: complex, q: float = 0.0
) -> RegularizedAction:
    """Zeta-regularized int_q^inf (V + lam')^{1/2} d q'.

    The half-line is reduced to [0, inf) by translation covariance; the
    integral splits into exact quadrature on [0, X] plus the termwise
    continued tail of the descending expansion on [X, inf), with the
    exponent -1 term contributing through the canonical logarithm rule.
    """
    lam = complex(lam)
    n = potential.degree
    if n == 2:
        raise ValidationError(
            "degree 2 is outside the regularized-action machinery; "
            "use homogeneous_action(2, lam) for the pure case"
        )
    base, offset = translate(potential, q) if q != 0.0 else (potential, 0.0 + 0.0j)
    lam_t = lam + offset
    tp = _real_turning_point_on_halfline(base, lam_t)
    if tp is not None:
        raise TurningPointOnPath(
            f"V + lambda vanishes at q = {q + tp:.6g} on the integration path"
        )

    scale_v = max(
        (abs(v) ** (1.0 / j) for j, v in enumerate(base.coefficients, start=1) if v != 0),
        default=0.0,
    )
    split = max(2.0, 2.0 * scale_v, 1.7 * abs(lam_t) ** (1.0 / n))
    depth = max(n + 4, int(60.0 / max(math.log(split / max(scale_v, abs(lam_t) ** (1.0 / n), 1.0)), 0.5)))
    depth = min(depth, 160)

    for _ in range(8):
        value = _action_at_origin(base, lam_t, split, depth)
        neglect = _truncation_scale(base, lam_t, split, depth)
        if neglect < 1e-12 * (1.0 + abs(value)):
            break
        split *= 1.4
    else:
        raise NotConverged("action tail did not fall below tolerance")

    check = _action_at_origin(base, lam_t, 1.5 * split, depth)
    if abs(check - value) > 1e-9 * (1.0 + abs(value)):
        raise NotConverged(
            f"split-point cross-check disagrees: {abs(check - value):.3e}"
        )
    return RegularizedAction(value=value, endpoint=float(q), lam=lam)


def classical_wkb(potential: PolynomialPotential, lam: complex, q: float) -> WkbPair:
    """Canonically normalized recessive WKB pair at q.

    psi  = Pi^{-1/2} exp(I),  psi' = -Pi^{+1/2} exp(I),
    with Pi = (V(q) + lam)^{1/2} and I the regularized action over [q, inf).
    """
    log_psi, log_mdpsi = classical_wkb_log(potential, lam, q)
    if max(abs(log_psi.real), abs(log_mdpsi.real)) > 700.0:
        raise Overflow("WKB value magnitude exceeds double range; use classical_wkb_log")
    return WkbPair(psi=np.exp(log_psi), dpsi=-np.exp(log_mdpsi))


def classical_wkb_log(potential: PolynomialPotential, lam: complex, q: float):
    """(log psi, log(-psi')) of the canonical WKB pair; overflow-safe form."""
    pi_q = complex(_pi_lambda(potential, complex(lam), q))
    if pi_q == 0:
        raise TurningPointOnPath(f"momentum vanishes at q = {q}")
    action = regularized_action(potential, lam, q).value
    log_pi = np.log(pi_q)
    return action - 0.5 * log_pi, action + 0.5 * log_pi
