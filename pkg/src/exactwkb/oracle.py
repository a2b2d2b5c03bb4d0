"""Independent ODE-integration ground truth.

Eigenvalues come from inward shooting in Pruefer phase form (node counts are
exact, so indices cannot be misassigned); wavefunction values come from
inward integration of the recessive solution started on the canonically
normalized WKB pair at q_max, carried in rescaled form because canonical
solutions span hundreds of orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad, solve_ivp

from .asymptotics import TailModel, deep_tail_model, invert_counting
from .classical import classical_wkb_log
from .determinant import SpectrumModel, zeta_many
from .errors import BracketFailure, Overflow, ValidationError
from .potential import PolynomialPotential

__all__ = [
    "OracleConfig",
    "OracleSolution",
    "shoot_spectrum",
    "recessive_solution",
    "trace_formula_check",
    "green_function_trace",
]


@dataclass(frozen=True)
class OracleConfig:
    """Integration window and tolerances.

    q_max defaults to the outer turning point extended until (a) at least 14
    decay e-folds separate it from the turning point and (b) the first WKB
    correction integral beyond it is below 1e-5; eigenvalues are insensitive
    to (b), canonical amplitudes are limited by it.
    """

    q_max: Optional[float] = None
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    bracket_expansion: float = 1.6


def _outer_turning_point(potential: PolynomialPotential, e: float) -> float:
    c = potential.full_coefficients().real.copy()
    c[-1] -= e
    roots = np.roots(c)
    real = [r.real for r in roots if abs(r.imag) <= 1e-8 * (1.0 + abs(r))]
    pos = [r for r in real if r > 0]
    return max(pos) if pos else 0.0


def _wkb_correction_tail(potential: PolynomialPotential, lam: float, q: float) -> float:
    """Estimate of the neglected relative WKB error beyond q."""

    def density(t):
        p = potential(t) + lam
        dp = potential.derivative(t)
        ddp = potential.derivative(t, 2)
        return abs(5.0 / 32.0 * dp * dp * p ** -2.5 - ddp / 8.0 * p ** -1.5)

    val, _ = quad(density, q, 8.0 * q, limit=100)
    return val + density(8.0 * q) * 8.0 * q  # crude bound on the far tail


def _default_q_max(
    potential: PolynomialPotential,
    e_max: float,
    lam_values,
    canonical: bool = False,
) -> float:
    qt = _outer_turning_point(potential, e_max)
    q = max(qt + 1.0, 1.5)
    # condition (a): 14 e-folds of decay past the turning point at the top level

    def efolds(qq):
        f = lambda t: math.sqrt(max(float(potential(t)) - e_max, 0.0))
        val, _ = quad(f, qt, qq, limit=100)
        return val

    while efolds(q) < 14.0 and q < qt + 400.0:
        q *= 1.25
    if canonical:
        # condition (b): canonical-normalization error below 1e-5; eigenvalues
        # do not depend on the overall scale, so shooting skips this
        lam_ref = min(lam_values) if lam_values else -e_max
        while _wkb_correction_tail(potential, lam_ref, q) > 1e-5 and q < 600.0:
            q *= 1.15
    return q


def _pruefer_rhs(potential: PolynomialPotential, e_array: np.ndarray):
    coeffs = potential.full_coefficients().real

    def rhs(q, theta):
        v = np.polyval(coeffs, q)
        s = np.sin(theta)
        c = np.cos(theta)
        return c * c + (e_array - v) * s * s

    return rhs


def _pruefer_boundary_phase(potential, e_array, q_max, rtol, atol):
    """theta(0; E) integrated inward from the recessive WKB direction."""
    v_top = float(potential(q_max))
    if np.any(e_array >= v_top):
        raise BracketFailure("energy window reaches the integration boundary")
    pi_top = np.sqrt(v_top - e_array)
    theta0 = np.arctan2(np.ones_like(pi_top), -pi_top)
    sol = solve_ivp(
        _pruefer_rhs(potential, e_array),
        (q_max, 0.0),
        theta0,
        method="DOP853",
        rtol=rtol,
        atol=atol,
        dense_output=False,
    )
    if not sol.success:
        raise BracketFailure(f"phase integration failed: {sol.message}")
    return sol.y[:, -1]


def _potential_min(potential: PolynomialPotential) -> float:
    dcoeffs = np.polyder(potential.full_coefficients().real)
    roots = np.roots(dcoeffs)
    cands = [0.0] + [r.real for r in roots if abs(r.imag) < 1e-9 and r.real > 0]
    return min(float(potential(c)) for c in cands)


def _seed_tail(potential: PolynomialPotential, parity: str) -> TailModel:
    if potential.degree == 2:
        if any(v != 0 for v in potential.coefficients):
            raise ValidationError("degree 2 is supported only for the pure potential")
        return TailModel((1,), (0.5,), parity)
    return deep_tail_model(potential, parity)


def shoot_spectrum(
    potential: PolynomialPotential,
    parity: str,
    count: int,
    config: OracleConfig = OracleConfig(),
) -> SpectrumModel:
    """First ``count`` eigenvalues of one parity class by phase shooting.

    The Pruefer boundary phase theta(0; E) decreases strictly through
    pi(1-k)/2 at the k-th global eigenvalue, so bisection on it cannot
    misnumber levels (Dirichlet targets are multiples of pi, Neumann ones
    odd multiples of pi/2).
    """
    if not potential.is_real:
        raise ValidationError("shooting needs real coefficients")
    if count < 4:
        raise ValidationError("count must be >= 4 to build a SpectrumModel")
    tail = _seed_tail(potential, parity)
    offset = 0 if parity == "+" else 1
    ks = np.array([2 * i + offset for i in range(count)])
    targets = np.pi * (1.0 - ks) / 2.0

    e_hi = 1.3 * invert_counting(tail.positive_part(), parity, int(ks[-1] + 2)) + 10.0
    e_lo = _potential_min(potential) - 1.0
    q_max = config.q_max or _default_q_max(potential, e_hi, [])

    # narrow per-level windows from the counting model (low levels fall back
    # to the full window; the phase targets make misnumbering impossible)
    pos = tail.positive_part()
    lo = np.array(
        [
            e_lo
            if k < 6
            else max(e_lo, 0.3 * invert_counting(pos, parity, int(k - 2)))
            for k in ks
        ]
    )
    hi = np.array(
        [
            min(e_hi, 2.5 * invert_counting(pos, parity, int(k + 2)) + 8.0)
            for k in ks
        ]
    )
    coarse = max(config.rel_tol, 1e-9)
    th_lo = _pruefer_boundary_phase(potential, lo, q_max, coarse, coarse)
    th_hi = _pruefer_boundary_phase(potential, hi, q_max, coarse, coarse)
    bad = (th_lo < targets) | (th_hi > targets)
    if np.any(bad):
        raise BracketFailure(
            "no bracket for eigenvalue", index=int(ks[np.argmax(bad)])
        )
    # bisection at coarse tolerance, then secant polish at full tolerance
    for _ in range(55):
        mid = 0.5 * (lo + hi)
        th = _pruefer_boundary_phase(potential, mid, q_max, coarse, coarse)
        above = th > targets  # theta decreasing in E: root above mid
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= 1e-6 * (np.abs(mid) + 1.0)):
            break
    e0, e1 = lo.copy(), hi.copy()
    f0 = _pruefer_boundary_phase(potential, e0, q_max, config.rel_tol, config.abs_tol) - targets
    f1 = _pruefer_boundary_phase(potential, e1, q_max, config.rel_tol, config.abs_tol) - targets
    eigs = e1.copy()
    for _ in range(6):
        denom = np.where(f1 == f0, 1.0, f1 - f0)
        e2 = e1 - f1 * (e1 - e0) / denom
        e2 = np.clip(e2, lo, hi)
        f2 = _pruefer_boundary_phase(potential, e2, q_max, config.rel_tol, config.abs_tol) - targets
        e0, f0, e1, f1 = e1, f1, e2, f2
        eigs = e2
        if np.all(np.abs(e1 - e0) <= config.rel_tol * np.abs(e1) + config.abs_tol):
            break
    return SpectrumModel(
        parity=parity,
        eigenvalues=tuple(complex(e) for e in eigs),
        tail=tail,
        potential=potential,
    )


@dataclass(frozen=True)
class OracleSolution:
    """Numerically integrated recessive solution with canonical normalization.

    samples[i] = (q, psi, psi'); log_samples carries (log psi, psi'/psi) for
    magnitudes outside double range.
    """

    samples: tuple
    lam: complex
    q_max: float
    normalization: str = "canonical-WKB"
    log_samples: tuple = ()


def _integrate_linear_system(rhs, state, sigma, q_start, q_stop, grid, rtol, atol):
    """Propagate a rescaled 2-vector from q_start to q_stop, sampling grid.

    Returns (points, scaled states, per-point log scales, final state, sigma).
    Panels are kept short so one rescale per panel suffices; grid points are
    read off the dense output inside each panel.
    """
    direction = 1.0 if q_stop > q_start else -1.0
    span = abs(q_stop - q_start)
    n_panels = max(1, int(math.ceil(span / 0.5)))
    edges = np.linspace(q_start, q_stop, n_panels + 1)
    wanted = sorted(set(float(g) for g in grid), reverse=direction < 0)
    out = []
    idx = 0
    for a, b in zip(edges[:-1], edges[1:]):
        while idx < len(wanted) and (wanted[idx] - a) * direction <= 1e-14 * (1 + abs(a)):
            out.append((wanted[idx], state.copy(), sigma))
            idx += 1
        sol = solve_ivp(
            rhs,
            (a, b),
            state,
            method="DOP853",
            rtol=rtol,
            atol=atol * max(1.0, float(np.max(np.abs(state)))),
            dense_output=True,
        )
        if not sol.success:
            raise Overflow(f"integration failed near q={b}: {sol.message}")
        while idx < len(wanted) and (wanted[idx] - b) * direction < -1e-14 * (1 + abs(b)):
            out.append((wanted[idx], sol.sol(wanted[idx]).copy(), sigma))
            idx += 1
        state = sol.y[:, -1]
        scale = float(np.max(np.abs(state)))
        if scale > 1e60:
            state = state / scale
            sigma += math.log(scale)
    while idx < len(wanted):
        out.append((wanted[idx], state.copy(), sigma))
        idx += 1
    return out, state, sigma


def _riccati_rhs(coeffs, lam):
    def rhs(q, z):
        # z = (log psi, psi'/psi); smooth in the forbidden region
        return [z[1], np.polyval(coeffs, q) + lam - z[1] * z[1]]

    return rhs


def _integrate_recessive(potential, lam, grid, q_max, rtol, atol):
    """Scaled (psi, psi') on the descending grid, plus per-point log scale.

    The deep forbidden region is crossed in logarithmic (Riccati) form,
    where the recessive direction is attracting under inward integration;
    the oscillatory region uses the linear pair with rescaling.
    """
    coeffs = potential.full_coefficients().real
    lam = float(lam)
    points = [q for q in sorted(set(grid), reverse=True)]
    if points and points[0] > q_max:
        raise ValidationError("grid points must lie at or below q_max")
    q_low = min(points) if points else q_max

    log_psi_top, log_mdpsi_top = classical_wkb_log(potential, lam, q_max)
    sigma = float(np.real(log_psi_top))
    pi_top = math.exp(float(np.real(log_mdpsi_top)) - sigma)

    q_switch = _outer_turning_point(potential, -lam) + 0.7
    q_switch = min(max(q_switch, q_low), q_max)

    out = []
    if q_switch < q_max:
        # phase 1: log form from q_max down to q_switch
        upper = [q for q in points if q >= q_switch]
        sol = solve_ivp(
            _riccati_rhs(coeffs, lam),
            (q_max, q_switch),
            [0.0, -pi_top],
            method="DOP853",
            rtol=rtol,
            atol=atol,
            dense_output=True,
        )
        if not sol.success:
            raise Overflow(f"log-form integration failed: {sol.message}")
        for q in upper:
            lp, y = sol.sol(q)
            out.append((q, np.array([1.0, y]), sigma + lp))
        lp_end, y_end = sol.y[:, -1]
        state = np.array([1.0, y_end])
        sigma = sigma + lp_end
    else:
        state = np.array([1.0, -pi_top])

    lower = [q for q in points if q < q_switch]
    if lower:

        def rhs(q, y):
            return [y[1], (np.polyval(coeffs, q) + lam) * y[0]]

        more, _, _ = _integrate_linear_system(
            rhs, state, sigma, q_switch, min(lower), lower, rtol, atol
        )
        out.extend(more)
    out.sort(key=lambda t: -t[0])
    return (
        [o[0] for o in out],
        [o[1] for o in out],
        [o[2] for o in out],
    )


def recessive_solution(
    potential: PolynomialPotential,
    lam: float,
    q_grid,
    config: OracleConfig = OracleConfig(),
) -> OracleSolution:
    """Canonically normalized recessive solution sampled on q_grid.

    Real-axis integration only; the overall scale is fixed by the WKB pair
    at q_max, with no free constant.  Internal propagation is rescaled, so
    only the materialized samples can overflow (reported via log_samples).
    """
    if not potential.is_real:
        raise ValidationError("recessive integration needs real coefficients")
    lam = complex(lam)
    if lam.imag != 0.0:
        raise ValidationError("real-axis integration requires real lambda")
    grid = [float(q) for q in q_grid]
    e_ref = -lam.real
    q_max = config.q_max or _default_q_max(
        potential, max(e_ref, _potential_min(potential) + 1.0), [lam.real],
        canonical=True,
    )
    pts, scaled, sigmas = _integrate_recessive(
        potential, lam.real, grid, q_max, config.rel_tol, config.abs_tol
    )
    samples = []
    log_samples = []
    for q, y, s in zip(pts, scaled, sigmas):
        log_abs_psi = s + (math.log(abs(y[0])) if y[0] != 0 else -math.inf)
        ratio = y[1] / y[0] if y[0] != 0 else math.inf
        log_samples.append((q, log_abs_psi, math.copysign(1.0, y[0]), ratio))
        big = max(log_abs_psi, s + math.log(max(abs(y[1]), 1e-300)))
        if big > 690.0:
            raise Overflow(
                f"canonical values at q={q} exceed double range; use log_samples"
            )
        if s < -690.0:
            samples.append((q, 0.0, 0.0))  # honest underflow; truth in log_samples
        else:
            f = math.exp(s)
            samples.append((q, y[0] * f, y[1] * f))
    order = np.argsort([s[0] for s in samples])
    samples = tuple(samples[i] for i in order)
    log_samples = tuple(log_samples[i] for i in order)
    return OracleSolution(
        samples=samples, lam=lam, q_max=q_max, log_samples=log_samples
    )


def boundary_log_derivative(
    potential: PolynomialPotential,
    lam: float,
    parity: str,
    config: OracleConfig = OracleConfig(),
    step: float = 1e-5,
) -> float:
    """d/dlambda of log psi(0) (parity '-') or log(-psi'(0)) (parity '+'),
    by central differences of two recessive integrations."""
    vals = []
    for s in (lam + step, lam - step):
        sol = recessive_solution(potential, s, [0.0], config)
        _, log_abs_psi, sign, ratio = sol.log_samples[0]
        if parity == "-":
            if sign <= 0:
                raise ValidationError("psi(0) must be positive in this regime")
            vals.append(log_abs_psi)
        else:
            dpsi = ratio  # psi'/psi
            if dpsi >= 0:
                raise ValidationError("psi'(0) must be negative in this regime")
            vals.append(log_abs_psi + math.log(-dpsi))
    return (vals[0] - vals[1]) / (2.0 * step)


def trace_formula_check(
    potential: PolynomialPotential,
    lam: float,
    parity: str,
    config: OracleConfig = OracleConfig(),
    count: int = 48,
):
    """(lhs, rhs) of the resolvent trace identity.

    lhs is the lambda-derivative of the recessive boundary data; rhs is the
    spectral sum Z(1, lambda) over the shooting spectrum.  Requires N > 2
    (trace class) and lambda above -E_0 of the sector.
    """
    if potential.degree <= 2:
        raise ValidationError("trace identities need degree N > 2")
    lhs = boundary_log_derivative(potential, lam, parity, config)
    spectrum = shoot_spectrum(potential, parity, count, config)
    if lam <= -spectrum.eigenvalues[0].real:
        raise ValidationError("lambda must exceed -E_0 of the sector")
    rhs = float(np.real(zeta_many(spectrum, lam, s=1)[0]))
    return lhs, rhs


def _integrate_boundary_solution(potential, lam, parity, grid, rtol, atol):
    """Scaled (psi, psi') of the Dirichlet/Neumann solution outward from 0."""
    coeffs = potential.full_coefficients().real
    lam = float(lam)

    def rhs(q, y):
        return [y[1], (np.polyval(coeffs, q) + lam) * y[0]]

    state = np.array([0.0, 1.0]) if parity == "-" else np.array([1.0, 0.0])
    q_top = max(grid)
    q_switch = min(_outer_turning_point(potential, -lam) + 0.7, q_top)
    lower = [q for q in grid if q <= q_switch]
    upper = [q for q in grid if q > q_switch]
    out, state, sigma = _integrate_linear_system(
        rhs, state, 0.0, 0.0, q_switch, lower, rtol, atol
    )
    if upper:
        # growing direction is attracting outward; cross it in log form
        lp0 = math.log(abs(state[0]))
        sgn = math.copysign(1.0, state[0])
        sol = solve_ivp(
            _riccati_rhs(coeffs, lam),
            (q_switch, q_top),
            [0.0, state[1] / state[0]],
            method="DOP853",
            rtol=rtol,
            atol=atol,
            dense_output=True,
        )
        if not sol.success:
            raise Overflow(f"log-form integration failed: {sol.message}")
        for q in upper:
            lp, y = sol.sol(q)
            out.append((q, np.array([sgn, sgn * y]), sigma + lp0 + lp))
    return out


def green_function_trace(
    potential: PolynomialPotential,
    lam: float,
    parity: str,
    config: OracleConfig = OracleConfig(),
) -> float:
    """Tr (H + lambda)^{-1} via quadrature of the diagonal Green function.

    G(q, q) = psi_b(min) psi(max) / W(psi, psi_b) with psi recessive and
    psi_b the boundary solution; the far tail is integrated against the
    WKB form of the diagonal.
    """
    if potential.degree <= 2:
        raise ValidationError("trace identities need degree N > 2")
    e_ref = max(-lam, _potential_min(potential) + 1.0)
    q_max = config.q_max or _default_q_max(potential, e_ref, [lam], canonical=True)
    n_grid = 4001
    grid = np.linspace(0.0, q_max, n_grid)
    rec = recessive_solution(potential, lam, grid, config)
    bnd = _integrate_boundary_solution(
        potential, lam, parity, grid, config.rel_tol, config.abs_tol
    )
    # Wronskian at q = 0: psi(0) for Dirichlet partner, -psi'(0) for Neumann
    _, log_abs_psi0, sign0, ratio0 = rec.log_samples[0]
    if parity == "-":
        log_w = log_abs_psi0
    else:
        log_w = log_abs_psi0 + math.log(-ratio0)
    diag = np.empty(n_grid)
    for i, ((q, yb, sb), ls) in enumerate(zip(bnd, rec.log_samples)):
        _, log_abs_psi, sign, _ = ls
        if yb[0] == 0.0:
            diag[i] = 0.0
            continue
        log_val = math.log(abs(yb[0])) + sb + log_abs_psi - log_w
        diag[i] = math.copysign(math.exp(log_val), yb[0] * sign)
    core = _simpson(diag, grid)

    def wkb_diag(q):
        p = potential(q) + lam
        dp = potential.derivative(q)
        ddp = potential.derivative(q, 2)
        corr = 1.0 + 5.0 / 32.0 * dp * dp / p ** 3 - ddp / (8.0 * p * p)
        return 0.5 * p ** -0.5 * corr

    tail, _ = quad(wkb_diag, q_max, np.inf, limit=200)
    return core + tail


def _simpson(y: np.ndarray, x: np.ndarray) -> float:
    from scipy.integrate import simpson

    return float(simpson(y, x=x))
