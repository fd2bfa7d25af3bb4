"""Radial localizing kernels and the interaction kernel derived from a micro-potential.

A kernel here is a nonnegative radial profile rho with compact support and
unit mass; sequences of kernels concentrating at the origin drive the
localization (vanishing-horizon) limit.  The fractional family is implemented
with the *negative* exponent -(d + s*p - p), which is the singular, localizing
convention; see the project notes for the sign discrepancy in the source of
the positive-exponent form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .materials import MicroPotential

#: surface area of the unit sphere S^{d-1}
SPHERE_AREA = {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}


def radial_integral(f, r_min: float, r_max: float, d: int,
                    rtol: float = 1e-9, max_levels: int = 200) -> float:
    """Integrate ``f(r) * |S^{d-1}| * r^(d-1)`` over (r_min, r_max).

    Composite Gauss-Legendre on dyadic annuli toward r_min handles integrable
    singularities at the inner edge.
    """
    if r_max <= r_min:
        return 0.0
    x, w = leggauss(32)
    total = 0.0
    pieces = []
    hi = r_max
    for _ in range(max_levels):
        lo = max(r_min, hi / 2.0)
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        r = mid + half * x
        piece = half * np.dot(w, f(r) * r ** (d - 1)) * SPHERE_AREA[d]
        total += piece
        pieces.append(piece)
        if lo <= r_min * (1 + 1e-15) and r_min > 0.0:
            break
        if r_min == 0.0 and lo < 1e-12 * r_max and (
                abs(piece) < rtol * max(abs(total), 1e-300) or len(pieces) >= 3):
            break
        hi = lo
        if hi <= r_min:
            break
    # near-power-law profiles make the dyadic pieces geometric; complete the
    # remaining tail by the geometric sum when the ratios have stabilized
    if r_min == 0.0 and len(pieces) >= 3 and pieces[-2] > 0 and pieces[-3] > 0:
        q1 = pieces[-1] / pieces[-2]
        q2 = pieces[-2] / pieces[-3]
        if 0.0 < q1 < 0.999 and abs(q1 - q2) < 5e-3 * max(q1, 1e-3):
            total += pieces[-1] * q1 / (1.0 - q1)
    return total


@dataclass(frozen=True)
class Kernel:
    """A normalized radial kernel rho with compact support.

    ``profile`` maps radii (array, strictly positive) to kernel values inside
    the support; evaluation through :meth:`__call__` clips to the support and
    never touches r = 0.
    """

    dim: int
    family: str
    profile: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    normalization: float = 1.0
    singularity_exponent: float = 0.0
    params: dict = field(default_factory=dict)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = (r > 0) & (r <= self.support_radius)
        if np.any(inside):
            out[inside] = self.profile(r[inside])
        return out

    def mass(self, rtol: float = 1e-9) -> float:
        """Numerical mass integral of rho over R^d."""
        return radial_integral(self.profile, 0.0, self.support_radius, self.dim, rtol)

    def tail_mass(self, delta: float) -> float:
        """Mass outside the ball B(0, delta)."""
        if delta >= self.support_radius:
            return 0.0
        return radial_integral(self.profile, delta, self.support_radius, self.dim)


def _ball_volume(d: int, radius: float) -> float:
    return SPHERE_AREA[d] * radius**d / d


def box_kernel(d: int, radius: float = 1.0) -> Kernel:
    """Indicator kernel: constant on B(0, radius), normalized to unit mass."""
    c = 1.0 / _ball_volume(d, radius)
    return Kernel(d, "box", lambda r: np.full_like(r, c), radius,
                  normalization=c, params={"radius": radius})


def make_rescaled(base: Kernel, delta: float) -> Kernel:
    """The rescaled kernel rho_delta(r) = delta^-d * base(r / delta).

    Mass is preserved exactly by the change of variables.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    d = base.dim
    prof = base.profile

    def profile(r):
        return prof(r / delta) / delta**d

    return Kernel(d, f"rescaled({base.family})", profile,
                  support_radius=delta * base.support_radius,
                  normalization=base.normalization / delta**d,
                  singularity_exponent=base.singularity_exponent,
                  params={"base": base.family, "delta": delta, **base.params})


def make_fractional(d: int, s: float, p: float) -> Kernel:
    """Fractional-type kernel C (1-s) r^-(d + s p - p) on the unit ball.

    The exponent beta = d + s p - p is the recorded singularity strength;
    beta < d always holds for s in (0, 1), so the kernel is integrable.  The
    normalization is closed-form: the radial mass integral is
    |S^{d-1}| * C * (1-s) / (p (1-s)), so C = p / |S^{d-1}|.
    """
    if not (0.0 < s < 1.0):
        raise ValueError("s must lie in (0, 1)")
    if p <= 1.0:
        raise ValueError("p must exceed 1")
    beta = d + s * p - p
    c = p / SPHERE_AREA[d]

    def profile(r, _c=c * (1.0 - s), _b=beta):
        return _c * r ** (-_b)

    return Kernel(d, "fractional", profile, 1.0, normalization=c * (1.0 - s),
                  singularity_exponent=beta, params={"s": s, "p": p})


def custom_radial(d: int, profile, support_radius: float,
                  family: str = "custom-radial",
                  singularity_exponent: float = 0.0) -> Kernel:
    """Normalize an arbitrary nonnegative radial profile to unit mass."""
    raw = radial_integral(profile, 0.0, support_radius, d)
    if not raw > 0:
        raise ValueError("profile must have positive mass")
    c = 1.0 / raw
    return Kernel(d, family, lambda r: c * np.asarray(profile(r), dtype=float),
                  support_radius, normalization=c,
                  singularity_exponent=singularity_exponent)


def tabulated_kernel(d: int, r: np.ndarray, rho: np.ndarray) -> Kernel:
    """Kernel from tabulated (r, rho(r)) samples, linearly interpolated and normalized."""
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("tabulated kernel values must be nonnegative")
    support = float(r.max())

    def profile(rr):
        return np.interp(rr, r, rho, left=rho[0], right=0.0)

    return custom_radial(d, profile, support, family="tabulated")


@dataclass(frozen=True)
class KernelSequence:
    """A localizing family n -> rho_n together with a description of its law."""

    generator: Callable[[int], Kernel]
    law: str = ""

    def __getitem__(self, n: int) -> Kernel:
        return self.generator(n)


def box_sequence(d: int, delta_law=lambda n: 1.0 / n) -> KernelSequence:
    base = box_kernel(d)
    return KernelSequence(lambda n: make_rescaled(base, delta_law(n)),
                          law="box, delta(n) supplied by delta_law")


def rescaled_sequence(base: Kernel, delta_law=lambda n: 1.0 / n) -> KernelSequence:
    return KernelSequence(lambda n: make_rescaled(base, delta_law(n)),
                          law=f"rescaled {base.family}")


def fractional_sequence(d: int, p: float, s_law=lambda n: 1.0 - 1.0 / (n + 1)) -> KernelSequence:
    return KernelSequence(lambda n: make_fractional(d, s_law(n), p),
                          law="fractional, s(n) -> 1")


@dataclass(frozen=True)
class TailReport:
    """Tail masses of a kernel sequence outside a fixed ball."""

    delta: float
    tail: np.ndarray
    passed: bool


def check_assumption_A(seq: KernelSequence, delta: float, n_max: int,
                       tol: float = 1e-3) -> TailReport:
    """Check the concentration half of the kernel assumption.

    Computes t_n = mass of rho_n outside B(0, delta) for n = 1..n_max and
    passes when the terminal tail is below ``tol`` and the tail is
    non-increasing from some point on.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    t = np.array([seq[n].tail_mass(delta) for n in range(1, n_max + 1)])
    eventually_decreasing = False
    for n0 in range(len(t)):
        if np.all(np.diff(t[n0:]) <= 1e-12):
            eventually_decreasing = True
            break
    passed = bool(t[-1] < tol and eventually_decreasing)
    return TailReport(delta, t, passed)


@dataclass(frozen=True)
class DensityConditionReport:
    deltas: np.ndarray
    integrals: np.ndarray
    ratios: np.ndarray
    passed: bool


def check_density_condition(kernel: Kernel, p: float,
                            n_levels: int = 12, ratio_floor: float = 1.05) -> DensityConditionReport:
    """Diagnose whether int_{|z|>delta} rho(z)/|z|^p dz blows up as delta -> 0.

    Evaluates the integral at delta = 2^-j, j = 1..n_levels and passes when
    the successive ratios stay bounded away from 1.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    deltas = 2.0 ** -np.arange(1, n_levels + 1)

    def integrand(r):
        return kernel(r) / r**p

    vals = np.array([
        radial_integral(integrand, dd, kernel.support_radius, kernel.dim)
        for dd in deltas
    ])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = vals[1:] / vals[:-1]
    passed = bool(np.all(np.isfinite(vals)) and vals[-1] > 0
                  and np.all(ratios[-3:] > ratio_floor))
    return DensityConditionReport(deltas, vals, ratios, passed)


def derived_interaction_kernel(w: MicroPotential) -> Callable[[np.ndarray], np.ndarray]:
    """Radial interaction profile rho(r) = k(r) * d2Psi/ds2(r, 0).

    This is the kernel entering the quadratic small-displacement energy.  The
    second derivative comes from a registered closed form when available and
    otherwise from Richardson-extrapolated central differences; a symmetry
    check rejects profiles that are not twice differentiable at 0.  The
    result is generally not mass-1.
    """
    psi_ss0 = w.second_derivative_at_zero  # validates differentiability

    def profile(r):
        r = np.asarray(r, dtype=float)
        return w.k(r) * psi_ss0(r)

    return profile
