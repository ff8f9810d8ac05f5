"""Verification procedures built on profiles, graph geometry and solves.

* perturbed catenary cylinders ``F + ubar N_F`` and the closed formula for
  their ``eta2 / eta3``,
* the decay bound ``|ubar_x2| <= (Lambda - x1) sup |ubar_x1x2|`` together with
  the limits of ``phi' cos(theta)`` and ``(Lambda - x) / cos(theta)`` at the
  slab edge,
* moving-plane gaps and the maximum principle for ``eta2 / eta3`` on solved
  patches.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, optimize

from .errors import EmptyOverlap, HypothesisWarning, NotMinimal, StripViolation
from .geometry import GraphPatch, interior_mask, phi_minimal_residual, surface_fields
from .profile import ProfileSolution
from .weights import WeightSpec

__all__ = [
    "UBAR_FAMILIES",
    "UbarFamily",
    "PerturbedCylinder",
    "perturbed_cylinder_build",
    "QuotientReport",
    "closed_form_quotient",
    "quotient_formula_check",
    "DecayReport",
    "decay_bound_check",
    "GapReport",
    "moving_plane_check",
    "ExtremumReport",
    "eta_quotient_extremum_check",
]


# -- analytic perturbation families ------------------------------------------


@dataclass(frozen=True)
class UbarFamily:
    """A perturbation ``ubar(x1, x2)`` with hand-coded partial derivatives.

    ``lam`` is the slab half-width the family decays towards.  ``evaluate``
    returns ``(ubar, ubar_x1, ubar_x2, ubar_x1x2)``.
    """

    name: str
    eps: float = 0.01
    lam: float = 1.0
    kappa: float = 0.5

    def evaluate(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        e, d, k = self.eps, self.lam - x1, self.kappa
        zero = np.zeros_like(x1)
        if self.name == "zero":
            return zero, zero, zero, zero
        if self.name == "constant":
            return zero + e, zero, zero, zero
        if self.name == "x1_only":
            return e * d * d, -2 * e * d, zero, zero
        if self.name == "sin_edge":
            s, c = np.sin(x2), np.cos(x2)
            return e * s * d * d, -2 * e * s * d, e * c * d * d, -2 * e * c * d
        if self.name == "cubic_cos":
            s, c = np.sin(x2), np.cos(x2)
            return e * c * d**3, -3 * e * c * d * d, -e * s * d**3, 3 * e * s * d * d
        if self.name == "tilted_wave":
            arg = x2 + k * x1
            s, c = np.sin(arg), np.cos(arg)
            return (
                e * d * d * s,
                e * (-2 * d * s + k * d * d * c),
                e * d * d * c,
                e * (-2 * d * c - k * d * d * s),
            )
        raise ValueError(f"unknown perturbation family {self.name!r}")


UBAR_FAMILIES = ("zero", "constant", "x1_only", "sin_edge", "cubic_cos", "tilted_wave")


@dataclass(frozen=True, eq=False)
class PerturbedCylinder:
    """Samples of ``F``, ``N_F``, ``ubar`` and ``F~ = F + ubar N_F`` on a strip grid."""

    base_profile: ProfileSolution
    ubar: UbarFamily
    strip: tuple
    x1: np.ndarray
    x2: np.ndarray
    u: np.ndarray
    uprime: np.ndarray
    usecond: np.ndarray
    F: np.ndarray
    N_F: np.ndarray
    partials: tuple  # ubar, ubar_x1, ubar_x2, ubar_x1x2 on the grid
    F_tilde: np.ndarray
    tangents: tuple  # dF~/dx1, dF~/dx2
    v3_min: float

    @property
    def lam(self) -> float:
        return self.ubar.lam

    @property
    def is_graph(self) -> bool:
        return self.v3_min > 0


def perturbed_cylinder_build(
    profile: ProfileSolution,
    family="sin_edge",
    strip=None,
    grid=(41, 41),
    eps: float = 0.01,
    kappa: float = 0.5,
) -> PerturbedCylinder:
    """Sample a perturbed catenary cylinder.

    Parameters
    ----------
    profile : ProfileSolution
    family : str or UbarFamily
        One of :data:`UBAR_FAMILIES`; families decaying at the slab edge use
        the profile's half-width (or the strip end if it is infinite).
    strip : ((x_lo, x_hi), (y_lo, y_hi)), optional
        Defaults to ``x1`` in ``[0, 0.9 Lambda]`` and ``x2`` in ``[-pi, pi]``.

    Raises
    ------
    StripViolation
        If the strip leaves the computed part of the profile.
    """
    lam = profile.lambda_estimate
    if strip is None:
        hi = 0.9 * lam if math.isfinite(lam) else 0.9 * profile.x_end
        strip = ((0.0, hi), (-math.pi, math.pi))
    (x_lo, x_hi), (y_lo, y_hi) = strip
    if not (x_hi > x_lo and y_hi > y_lo):
        raise StripViolation("strip must have positive extent")
    if max(abs(x_lo), abs(x_hi)) > profile.x_end:
        raise StripViolation(f"strip reaches |x1| = {max(abs(x_lo), abs(x_hi)):.6g} beyond the profile (x <= {profile.x_end:.6g})")
    if isinstance(family, str):
        family = UbarFamily(family, eps=eps, lam=lam if math.isfinite(lam) else x_hi, kappa=kappa)

    x1 = np.linspace(x_lo, x_hi, grid[0])
    x2 = np.linspace(y_lo, y_hi, grid[1])
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    u, up = profile.evaluate(x1)
    u, up = np.asarray(u, dtype=float), np.asarray(up, dtype=float)
    W = np.sqrt(1 + up * up)
    upp = profile.spec.dphi(u) * W * W
    U, UP, UPP, WW = (np.repeat(a[:, None], grid[1], axis=1) for a in (u, up, upp, W))

    F = np.stack((X1, X2, U), axis=-1)
    N = np.stack((UP / WW, np.zeros_like(X1), -1 / WW), axis=-1)
    dN1 = np.stack((UPP / WW**3, np.zeros_like(X1), UP * UPP / WW**3), axis=-1)
    ub, ub1, ub2, ub12 = family.evaluate(X1, X2)
    e1 = np.zeros_like(F)
    e1[..., 0] = 1.0
    e1[..., 2] = UP
    e2 = np.zeros_like(F)
    e2[..., 1] = 1.0
    T1 = e1 + ub1[..., None] * N + ub[..., None] * dN1
    T2 = e2 + ub2[..., None] * N
    v3 = np.cross(T1, T2)[..., 2]  # equals 1 on the unperturbed cylinder
    return PerturbedCylinder(
        base_profile=profile,
        ubar=family,
        strip=((x_lo, x_hi), (y_lo, y_hi)),
        x1=x1,
        x2=x2,
        u=U,
        uprime=UP,
        usecond=UPP,
        F=F,
        N_F=N,
        partials=(ub, ub1, ub2, ub12),
        F_tilde=F + ub[..., None] * N,
        tangents=(T1, T2),
        v3_min=float(np.min(v3)),
    )


# -- quotient formula -----------------------------------------------------------


@dataclass
class QuotientReport:
    max_discrepancy: float
    min_denominator: float
    max_abs_quotient: float
    is_graph: bool
    family: str
    tol: float = 1e-10

    @property
    def passed(self) -> bool:
        return self.is_graph and self.min_denominator >= 0.5 and self.max_discrepancy <= self.tol

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "max_discrepancy": self.max_discrepancy,
            "min_denominator": self.min_denominator,
            "max_abs_quotient": self.max_abs_quotient,
            "is_graph": self.is_graph,
            "tol": self.tol,
            "passed": self.passed,
        }


def closed_form_quotient(pc: PerturbedCylinder, spec: WeightSpec):
    """``eta2 / eta3`` of ``F~`` from the closed formula, and its denominator."""
    ub, ub1, ub2, _ = pc.partials
    W = np.sqrt(1 + pc.uprime**2)
    dphi = spec.dphi(pc.u)
    numer = 1 + ub * dphi / W
    denom = 1 + ub1 * pc.uprime / W + ub * dphi / W
    return ub2 * W * numer / denom, denom


def quotient_formula_check(pc: PerturbedCylinder, spec: WeightSpec, tol: float = 1e-10) -> QuotientReport:
    """Compare ``eta2 / eta3`` from the tangent cross product with the closed formula."""
    T1, T2 = pc.tangents
    n = np.cross(T1, T2)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    n *= -np.sign(n[..., 2:3])  # downward orientation
    direct = n[..., 1] / n[..., 2]
    formula, denom = closed_form_quotient(pc, spec)
    return QuotientReport(
        max_discrepancy=float(np.max(np.abs(direct - formula))),
        min_denominator=float(np.min(denom)),
        max_abs_quotient=float(np.max(np.abs(direct))),
        is_graph=pc.is_graph,
        family=pc.ubar.name,
        tol=tol,
    )


# -- decay bound and edge limits ------------------------------------------------


@dataclass
class DecayReport:
    applicable: bool
    bound_holds: bool
    max_violation: float
    min_slack_near_edge: float
    limit_phi_cos: list = field(default_factory=list)
    limit_width_sec: list = field(default_factory=list)
    cos_levels: list = field(default_factory=list)
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return (not self.applicable) or self.bound_holds

    @property
    def limits_finite(self) -> bool:
        """Whether both edge quantities have settled over the last two levels."""
        if len(self.cos_levels) < 2:
            return False
        return all(abs(v[-1] - v[-2]) <= 1e-3 * max(1.0, abs(v[-1])) for v in (self.limit_phi_cos, self.limit_width_sec))

    def to_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "limits_finite": self.limits_finite,
            "bound_holds": self.bound_holds,
            "max_violation": self.max_violation,
            "min_slack_near_edge": self.min_slack_near_edge,
            "cos_levels": self.cos_levels,
            "phi_dot_cos_theta": self.limit_phi_cos,
            "remaining_width_sec_theta": self.limit_width_sec,
            "tol": self.tol,
            "passed": self.passed,
        }


def _edge_limits(profile: ProfileSolution, levels):
    lam = profile.lambda_estimate
    dense, s = profile.dense, profile.s
    c_end = math.cos(profile.theta[-1])
    phi_cos, width_sec, used = [], [], []
    for level in levels:
        if level <= c_end:
            continue
        # cos(theta) decreases monotonically along the profile
        k = int(np.searchsorted(-np.cos(profile.theta), -level))
        s_hit = optimize.brentq(lambda r: math.cos(dense(r)[2]) - level, s[k - 1], s[k], xtol=1e-14, rtol=1e-15)
        x, u, th = dense(s_hit)
        c = math.cos(th)
        phi_cos.append(float(profile.spec.dphi(u) * c))
        width_sec.append(float((lam - x) / c))
        used.append(level)
    return phi_cos, width_sec, used


def decay_bound_check(pc: PerturbedCylinder, tol: float = 1e-12, levels=(1e-1, 1e-2, 1e-3, 1e-4), samples: int = 2001) -> DecayReport:
    """Check ``|ubar_x2| <= (Lambda - x1) sup_{s >= x1} |ubar_x1x2(s, x2)|`` on the strip.

    The supremum runs over ``[x1, Lambda]`` on a fine grid of ``samples``
    abscissae, so it sees the part of the slab beyond the sampled strip.
    Also records ``phi'(u) cos(theta)`` and ``(Lambda - x) / cos(theta)`` at
    decreasing levels of ``cos(theta)`` along the profile.
    """
    lam = pc.lam
    profile = pc.base_profile
    applicable = math.isfinite(profile.lambda_estimate)
    phi_cos, width_sec, used = _edge_limits(profile, levels) if applicable else ([], [], [])
    if not applicable:
        return DecayReport(False, True, 0.0, math.inf, tol=tol)
    (x_lo, _), _ = pc.strip
    s = np.union1d(np.linspace(x_lo, lam, samples), pc.x1)
    S, Y = np.meshgrid(s, pc.x2, indexing="ij")
    _, _, ub2, ub12 = pc.ubar.evaluate(S, Y)
    # reverse running maximum gives sup over [x1, Lambda]
    tail_sup = np.maximum.accumulate(np.abs(ub12)[::-1], axis=0)[::-1]
    bound = (lam - S) * tail_sup
    lhs = np.abs(ub2)
    excess = lhs - bound
    near = (S >= x_lo + 0.9 * (lam - x_lo)) & (S < lam) & (lhs > 0)
    slack = float(np.min(bound[near] / lhs[near])) if np.any(near) else math.inf
    return DecayReport(
        applicable=True,
        bound_holds=bool(np.all(excess <= tol)),
        max_violation=float(max(np.max(excess), 0.0)),
        min_slack_near_edge=slack,
        limit_phi_cos=phi_cos,
        limit_width_sec=width_sec,
        cos_levels=used,
        tol=tol,
    )


# -- moving planes --------------------------------------------------------------


@dataclass
class GapReport:
    t: float
    x1: np.ndarray
    gaps: np.ndarray  # shape (len(x1), ny)

    @property
    def min_gap(self) -> float:
        return float(np.min(self.gaps))

    @property
    def max_gap(self) -> float:
        return float(np.max(self.gaps))

    @property
    def max_abs_gap(self) -> float:
        return float(np.max(np.abs(self.gaps)))

    def to_dict(self) -> dict:
        return {"t": self.t, "nodes": int(self.gaps.size), "min_gap": self.min_gap, "max_gap": self.max_gap, "max_abs_gap": self.max_abs_gap}


def moving_plane_check(patch: GraphPatch, t: float) -> GapReport:
    """Gaps between the reflection of the part ``x1 >= t`` and the part ``x1 <= t``.

    For grid nodes ``x1 <= t`` whose mirror image ``2t - x1`` lies in the
    patch, returns ``u(2t - x1, x2) - u(x1, x2)``; the reflected value comes
    from a cubic spline in ``x1`` at fixed ``x2``.

    Raises
    ------
    EmptyOverlap
    """
    x = patch.x
    x_lo, x_hi = patch.x_range
    span = 1e-12 * (x_hi - x_lo)
    keep = (x <= t + span) & (2 * t - x <= x_hi + span)
    if not np.any(keep):
        raise EmptyOverlap(f"reflection about x1 = {t} has no overlap with the patch")
    spline = interpolate.CubicSpline(x, patch.values, axis=0)
    xs = x[keep]
    mirror = np.clip(2 * t - xs, x_lo, x_hi)
    return GapReport(float(t), xs, spline(mirror) - patch.values[keep])


# -- maximum principle for eta2 / eta3 -----------------------------------------


@dataclass
class ExtremumReport:
    interior_max: float
    interior_min: float
    boundary_max: float
    boundary_min: float
    slack: float
    convex_on_range: bool
    residual: float

    @property
    def passed(self) -> bool:
        return self.interior_max <= self.boundary_max + self.slack and self.interior_min >= self.boundary_min - self.slack

    def to_dict(self) -> dict:
        return {
            "interior_max": self.interior_max,
            "interior_min": self.interior_min,
            "boundary_max": self.boundary_max,
            "boundary_min": self.boundary_min,
            "slack": self.slack,
            "convex_on_range": self.convex_on_range,
            "pde_residual": self.residual,
            "passed": self.passed,
        }


def eta_quotient_extremum_check(patch: GraphPatch, spec: WeightSpec, tol: float = 1e-8, slack: float = 1e-8) -> ExtremumReport:
    """Check that ``eta2 / eta3`` takes its extreme values on the boundary ring.

    Raises
    ------
    NotMinimal
        If the interior graph-equation residual exceeds ``tol``.
    """
    res = phi_minimal_residual(patch, spec)
    rnorm = float(np.max(np.abs(res[interior_mask(patch.shape, 1)])))
    if rnorm > tol:
        raise NotMinimal(f"graph equation residual {rnorm:.3e} exceeds tolerance {tol:.3e}")
    convex = bool(np.all(spec.ddphi(patch.values) >= 0))
    if not convex:
        warnings.warn("phi is not convex on the range of heights", HypothesisWarning, stacklevel=2)
    eta = surface_fields(patch).eta
    q = eta[..., 1] / eta[..., 2]
    inner = interior_mask(patch.shape, 1)
    return ExtremumReport(
        interior_max=float(np.max(q[inner])),
        interior_min=float(np.min(q[inner])),
        boundary_max=float(np.max(q[~inner])),
        boundary_min=float(np.min(q[~inner])),
        slack=slack,
        convex_on_range=convex,
        residual=rnorm,
    )
