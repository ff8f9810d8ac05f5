"""Catenary profiles: the one-dimensional Cauchy problem and its constants.

The profile ``u`` of a phi-catenary cylinder solves

    u'' = phi'(u) (1 + u'^2),    u(0) = h,  u'(0) = 0.

The right-hand side blows up together with ``u'`` at the half-width
``Lambda_h``, so the curve is integrated in arc length ``s`` with the tangent
angle ``theta = arctan u'``::

    dx/ds = cos(theta),  du/ds = sin(theta),  dtheta/ds = phi'(u) cos(theta)

which stays bounded while ``phi'`` does.  Along a solution
``cos(theta) exp(phi(u))`` is constant, which gives the closed-form slope of
:func:`first_integral_slope` and the quadrature for :func:`half_width`.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .errors import DomainError, Inconclusive, LowConfidenceWarning, StepFailure
from .weights import Integrability, WeightSpec, _check_height, integrability_certificate

__all__ = [
    "IntegrationOptions",
    "ProfileSolution",
    "WidthTable",
    "integrate_profile",
    "first_integral_slope",
    "half_width",
    "asymptotic_slope",
    "width_table",
    "reflect",
]

TERMINATIONS = ("reached_x_cap", "reached_height_cap", "width_converged")


@dataclass(frozen=True)
class IntegrationOptions:
    rtol: float = 1e-10
    atol: float = 1e-12
    x_cap: float = 1e3
    height_cap: float | None = None  # default 1e6 * (|h| + 1)
    width_tol: float = 1e-8
    cos_threshold: float = 1e-8
    max_step: float = math.inf
    max_steps: int = 2_000_000


def _slope_from_gap(gap):
    """sqrt(exp(2 gap) - 1) without overflow."""
    gap = np.asarray(gap, dtype=float)
    with np.errstate(over="ignore"):
        return np.sqrt(np.expm1(2.0 * gap))


def _inverse_slope_from_gap(gap):
    """1 / sqrt(exp(2 gap) - 1), stable for large gaps."""
    gap = np.asarray(gap, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        small = 1.0 / np.sqrt(np.expm1(2.0 * np.minimum(gap, 30.0)))
        large = np.exp(-gap) / np.sqrt(-np.expm1(-2.0 * np.maximum(gap, 30.0)))
    return np.where(gap < 30.0, small, large)


def first_integral_slope(spec: WeightSpec, h: float, lam: float) -> float:
    """Slope ``|u'|`` of the profile started at ``h`` when it passes height ``lam``.

    Equals ``sqrt(exp(2 (phi(lam) - phi(h))) - 1)``; returns ``inf`` on overflow.
    ``lam`` must lie on the side of ``h`` the profile moves towards (above
    ``h`` for increasing weights).
    """
    _check_height(spec, h)
    _check_height(spec, lam)
    gap = float(spec.phi(lam) - spec.phi(h))
    if gap < 0:
        if gap > -1e-14 * (1.0 + abs(float(spec.phi(h)))):
            gap = 0.0
        else:
            raise DomainError(f"height {lam} is not reached by the profile starting at {h}")
    return float(_slope_from_gap(gap))


def asymptotic_slope(spec: WeightSpec, h: float) -> float:
    """Limit of ``|u'|`` along the profile: ``sqrt(exp(2 (c - phi(h))) - 1)`` or ``inf``."""
    _check_height(spec, h)
    if not math.isfinite(spec.c):
        return math.inf
    return float(_slope_from_gap(spec.c - float(spec.phi(h))))


def _height_gap(spec: WeightSpec, h: float, t):
    """phi(h + d t^2) - phi(h), with a Taylor expansion where it cancels."""
    d = spec.direction
    t = np.asarray(t, dtype=float)
    t2 = t * t
    f_h, df_h, ddf_h = (float(v) for v in spec.derivatives(h))
    with np.errstate(invalid="ignore"):
        direct = spec.phi(h + d * t2) - f_h
    taylor = d * df_h * t2 + 0.5 * ddf_h * t2 * t2
    return np.where(t2 < 1e-6 * (1.0 + abs(h)), taylor, direct)


def _width_integrand(spec: WeightSpec, h: float):
    def g(t):
        if t == 0.0:
            return math.sqrt(2.0 / abs(float(spec.dphi(h))))
        return float(2.0 * t * _inverse_slope_from_gap(_height_gap(spec, h, t)))

    return g


def _quad_pieces(g, t_max, tol):
    """Integrate ``g`` over ``[0, t_max]`` in pieces; returns (value, error, ok)."""
    breaks = [0.0, 0.5, 1.0, 2.0, 4.0]
    edges = [b for b in breaks if b < t_max] + [t_max]
    total, err, ok = 0.0, 0.0, True
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e, info, *msg = integrate.quad(
                g, lo, hi, epsabs=0.1 * tol, epsrel=1e-13, limit=500, full_output=1
            )
        ok = ok and not msg
        total += val
        err += e
    return total, err, ok


def half_width(spec: WeightSpec, h: float, tol: float = 1e-10) -> float:
    """Half-width ``Lambda_h`` of the profile started at height ``h``.

    Evaluates ``int dlam / sqrt(exp(2 (phi(lam) - phi(h))) - 1)`` over the
    heights the profile sweeps, using ``lam = h + t^2`` (``h - t^2`` for
    decreasing weights) so the inverse square-root singularity at ``lam = h``
    disappears.  Returns ``inf`` when ``exp(-phi)`` is not integrable on that
    range.  When integrability is inconclusive but the quadrature converges,
    the value is returned with a :class:`LowConfidenceWarning`.
    """
    _check_height(spec, h)
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = float(h)
    if spec.direction > 0 and math.isfinite(spec.c):
        return math.inf
    cert = integrability_certificate(spec, h)
    if cert.status is Integrability.INFINITE:
        return math.inf
    t_max = math.inf
    if spec.direction < 0 and math.isfinite(spec.a):
        t_max = math.sqrt(h - spec.a)
    value, _, ok = _quad_pieces(_width_integrand(spec, h), t_max, tol)
    if cert.status is Integrability.INCONCLUSIVE:
        if not ok or not math.isfinite(value):
            raise Inconclusive(f"cannot certify integrability of exp(-phi) beyond h={h}")
        warnings.warn(
            f"half-width at h={h} computed without an integrability certificate",
            LowConfidenceWarning,
            stacklevel=2,
        )
    return value


def _remaining_width(spec: WeightSpec, h: float, u: float) -> float:
    """Horizontal distance still to travel once the profile has reached height ``u``."""
    d = spec.direction
    f_h = float(spec.phi(h))

    def g(lam):
        return float(_inverse_slope_from_gap(float(spec.phi(lam)) - f_h))

    def quad(fun, lo, hi):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            return integrate.quad(fun, lo, hi, epsabs=1e-15, epsrel=1e-11, limit=500)[0]

    if d < 0 and math.isfinite(spec.a):
        return quad(g, spec.a, u) if u > spec.a else 0.0
    # fold the unbounded tail onto ]0, 1] with lam = d * pivot / v
    du = d * u
    pivot = max(du, 1.0)
    head = quad(lambda m: g(d * m), du, pivot) if du < pivot else 0.0
    tail = quad(lambda v: pivot / (v * v) * g(d * pivot / v), 0.0, 1.0)
    return head + tail


@dataclass(frozen=True, eq=False)
class ProfileSolution:
    """Sampled half-profile ``x >= 0`` of a catenary; the curve is even in ``x``.

    The sample arrays are the accepted steps of the arc-length integrator;
    :meth:`evaluate` gives the dense (4th order) interpolant at any abscissa.
    """

    spec: WeightSpec
    h: float
    s: np.ndarray
    x: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    lambda_estimate: float
    slope_limit: float
    termination: str
    options: IntegrationOptions
    dense: integrate.OdeSolution

    @property
    def uprime(self) -> np.ndarray:
        return np.tan(self.theta)

    @property
    def samples(self) -> np.ndarray:
        """Array of rows ``(x, u, u')``."""
        return np.column_stack((self.x, self.u, self.uprime))

    @property
    def x_end(self) -> float:
        return float(self.x[-1])

    def mirrored(self):
        """Samples of the full even curve as ``(x, u, u')`` over ``[-x_end, x_end]``."""
        x = np.concatenate((-self.x[:0:-1], self.x))
        u = np.concatenate((self.u[:0:-1], self.u))
        up = self.uprime
        up = np.concatenate((-up[:0:-1], up))
        return x, u, up

    def _state_at(self, x):
        xa = np.abs(np.asarray(x, dtype=float))
        if np.any(xa > self.x_end * (1 + 1e-14)):
            raise ValueError(f"abscissa beyond the computed profile (|x| <= {self.x_end})")
        idx = np.clip(np.searchsorted(self.x, xa), 1, len(self.x) - 1)
        s_lo, s_hi = self.s[idx - 1], self.s[idx]
        x_lo, x_hi = self.x[idx - 1], self.x[idx]
        frac = np.where(x_hi > x_lo, (xa - x_lo) / np.where(x_hi > x_lo, x_hi - x_lo, 1.0), 0.0)
        s = s_lo + frac * (s_hi - s_lo)
        for _ in range(12):
            y = self.dense(s.ravel()).reshape((3,) + s.shape)
            step = (y[0] - xa) / np.cos(y[2])
            s = np.clip(s - step, s_lo, s_hi)
            if np.all(np.abs(step) <= 1e-15 * (1.0 + np.abs(s))):
                break
        return self.dense(s.ravel()).reshape((3,) + s.shape)

    def evaluate(self, x):
        """Return ``(u(x), u'(x))`` for ``|x| <= x_end`` (vectorised)."""
        y = self._state_at(x)
        sign = np.sign(np.asarray(x, dtype=float))
        return y[1], sign * np.tan(y[2])

    def secant(self, x):
        """``sqrt(1 + u'(x)^2)`` computed from the tangent angle (no overflow)."""
        y = self._state_at(x)
        return 1.0 / np.cos(y[2])


def integrate_profile(spec: WeightSpec, h: float, opts: IntegrationOptions | None = None, **overrides) -> ProfileSolution:
    """Integrate the catenary profile starting at ``u(0) = h``, ``u'(0) = 0``.

    Uses the Dormand-Prince 5(4) pair on the arc-length system.  Integration
    stops when

    * ``cos(theta)`` drops below ``cos_threshold`` and the remaining width
      (first-integral quadrature beyond the current height) is below
      ``width_tol`` -- termination ``width_converged``;
    * ``|u|`` exceeds the height cap (or ``u`` reaches the domain floor ``a``)
      -- ``reached_height_cap``;
    * ``x`` exceeds ``x_cap`` -- ``reached_x_cap``.

    ``lambda_estimate`` is the final ``x`` plus the remaining width when the
    tail of ``exp(-phi)`` is integrable, ``inf`` otherwise.
    """
    _check_height(spec, h)
    h = float(h)
    opts = replace(opts or IntegrationOptions(), **overrides)
    height_cap = opts.height_cap if opts.height_cap is not None else 1e6 * (abs(h) + 1.0)
    floor = spec.a + 1e-12 * (1.0 + abs(spec.a)) if math.isfinite(spec.a) else -math.inf

    def rhs(s, y):
        c = math.cos(y[2])
        return np.array([c, math.sin(y[2]), float(spec.dphi(max(y[1], floor))) * c])

    solver = integrate.RK45(
        rhs, 0.0, np.array([0.0, h, 0.0]), math.inf,
        rtol=opts.rtol, atol=opts.atol, max_step=opts.max_step,
    )
    ss, ys, interps = [0.0], [np.array([0.0, h, 0.0])], []
    termination = None
    while termination is None:
        if len(ss) > opts.max_steps:
            raise StepFailure("profile integration exceeded max_steps")
        msg = solver.step()
        if solver.status == "failed":
            raise StepFailure(f"adaptive integrator failed at s={solver.t}: {msg}")
        ss.append(solver.t)
        ys.append(solver.y.copy())
        interps.append(solver.dense_output())
        x, u, th = solver.y
        if abs(u) >= height_cap or u <= floor:
            termination = "reached_height_cap"
        elif x >= opts.x_cap:
            termination = "reached_x_cap"
        elif math.cos(th) < opts.cos_threshold and _remaining_width(spec, h, u) <= opts.width_tol:
            termination = "width_converged"

    ys = np.array(ys)
    x, u, th = ys[:, 0], ys[:, 1], ys[:, 2]
    for arr in (x, u, th):
        arr.flags.writeable = False
    cert = integrability_certificate(spec, h)
    if cert.status is Integrability.INFINITE or (spec.direction > 0 and math.isfinite(spec.c)):
        lam = math.inf
    else:
        lam = float(x[-1] + _remaining_width(spec, h, float(u[-1])))
    slope = math.inf if termination == "width_converged" else float(abs(math.tan(th[-1])))
    return ProfileSolution(
        spec=spec, h=h, s=np.array(ss), x=x, u=u, theta=th,
        lambda_estimate=lam, slope_limit=slope, termination=termination,
        options=opts, dense=integrate.OdeSolution(np.array(ss), interps),
    )


@dataclass(frozen=True)
class WidthTable:
    """Half-widths over a list of initial heights.

    ``predicted`` follows from the sign of phi'' (phi' increasing gives
    decreasing widths and vice versa); ``observed`` is read off the values,
    and ``ties`` lists index pairs of neighbours equal to ``tie_tol``.
    """

    heights: tuple
    widths: tuple
    predicted: str
    observed: str
    ties: tuple

    def rows(self):
        return list(zip(self.heights, self.widths))


def _predicted_direction(spec: WeightSpec) -> str:
    if spec.direction < 0:
        return "indeterminate"
    return {"linear": "constant", "convex": "decreasing", "concave": "increasing"}.get(
        spec.shape, "indeterminate"
    )


def width_table(spec: WeightSpec, h_list, tol: float = 1e-10, tie_tol: float = 1e-9, workers: int | None = None) -> WidthTable:
    """Tabulate ``Lambda_h`` for the heights in ``h_list`` (sorted ascending).

    Rows may be evaluated on a thread pool; results do not depend on it.
    """
    hs = sorted(float(v) for v in h_list)
    for hv in hs:
        _check_height(spec, hv)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ws = list(pool.map(lambda hv: half_width(spec, hv, tol), hs))
    else:
        ws = [half_width(spec, hv, tol) for hv in hs]
    diffs = np.diff(np.array(ws, dtype=float))
    scale = np.maximum(1.0, np.abs(np.array(ws[:-1], dtype=float)))
    tie = np.abs(diffs) <= tie_tol * scale
    ties = tuple((int(i), int(i) + 1) for i in np.flatnonzero(tie))
    if len(ws) < 2 or np.all(tie):
        observed = "constant"
    elif np.all(diffs[~tie] < 0):
        observed = "decreasing"
    elif np.all(diffs[~tie] > 0):
        observed = "increasing"
    else:
        observed = "mixed"
    return WidthTable(tuple(hs), tuple(ws), _predicted_direction(spec), observed, ties)


def reflect(spec: WeightSpec) -> WeightSpec:
    """Replace ``phi`` by ``-phi`` (range ``]-c, -b[``); an involution."""
    return spec.reflected()
