"""Weight functions phi(x3), their derivatives and the hypotheses they satisfy.

A weight is described by a frozen :class:`WeightSpec`.  Built-in families are
evaluated in closed form; ``user_table`` weights are interpolated from
monotone samples.  Every weight lives on an open domain ``]a, +inf[`` and maps
onto the open range ``]b, c[``.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, interpolate

from .errors import DomainError, NonFinite

__all__ = [
    "FAMILIES",
    "Integrability",
    "WeightSpec",
    "HypothesisReport",
    "IntegrabilityCertificate",
    "eval_weight",
    "classify_integrability",
    "integrability_certificate",
    "check_hypotheses",
]

FAMILIES = ("identity", "linear", "quadratic", "alpha_log", "arctan", "user_table")

# curvature class of the un-reflected family
_SHAPES = {
    "identity": "linear",
    "linear": "linear",
    "quadratic": "convex",
    "alpha_log": "concave",
    "arctan": "mixed",
}


class Integrability(str, enum.Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class WeightSpec:
    """A weight ``phi: ]a, +inf[ -> ]b, c[`` depending on the height only.

    Use the classmethod constructors (:meth:`identity`, :meth:`alpha_log`, ...)
    or :meth:`from_config` rather than building instances by hand.  ``sign`` is
    ``-1`` for weights obtained with :meth:`reflected`.
    """

    family: str
    params: tuple = ()
    a: float = -math.inf
    b: float = -math.inf
    c: float = math.inf
    sign: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}")
        if not self.a < math.inf:
            raise ValueError("domain endpoint a must be < +inf")
        if not self.b < self.c:
            raise ValueError("range endpoints must satisfy b < c")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    # -- constructors -----------------------------------------------------

    @classmethod
    def identity(cls) -> WeightSpec:
        return cls("identity")

    @classmethod
    def linear(cls, k: float) -> WeightSpec:
        k = float(k)
        if not k > 0:
            raise ValueError("linear weight needs k > 0; use reflected() for decreasing weights")
        return cls("linear", (("k", k),))

    @classmethod
    def quadratic(cls) -> WeightSpec:
        return cls("quadratic", a=0.0, b=0.0)

    @classmethod
    def alpha_log(cls, alpha: float) -> WeightSpec:
        alpha = float(alpha)
        if not alpha > 0:
            raise ValueError("alpha_log weight needs alpha > 0")
        return cls("alpha_log", (("alpha", alpha),), a=0.0)

    @classmethod
    def arctan(cls) -> WeightSpec:
        return cls("arctan", b=-math.pi / 2, c=math.pi / 2)

    @classmethod
    def user_table(cls, points) -> WeightSpec:
        """Weight interpolated from samples ``[(x3, phi), ...]``.

        Both coordinates must be strictly increasing.  The domain endpoint is
        the first abscissa; beyond the last sample the weight continues
        linearly with the end slope.
        """
        pts = tuple((float(x), float(y)) for x, y in points)
        if len(pts) < 3:
            raise ValueError("user_table needs at least three points")
        xs = np.array([p[0] for p in pts])
        ys = np.array([p[1] for p in pts])
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("user_table points must be strictly increasing in x3 and phi")
        return cls("user_table", (("points", pts),), a=pts[0][0], b=pts[0][1])

    @classmethod
    def from_config(cls, config) -> WeightSpec:
        """Build a weight from a JSON string or an already parsed dict."""
        if isinstance(config, (str, bytes)):
            config = json.loads(config)
        config = dict(config)
        family = config.pop("family", None)
        reflected = bool(config.pop("reflected", False))
        if family == "identity":
            spec = cls.identity()
        elif family == "linear":
            spec = cls.linear(config.pop("k", 1.0))
        elif family == "quadratic":
            spec = cls.quadratic()
        elif family == "alpha_log":
            spec = cls.alpha_log(config.pop("alpha"))
        elif family == "arctan":
            spec = cls.arctan()
        elif family == "user_table":
            spec = cls.user_table(config.pop("points"))
        else:
            raise ValueError(f"unknown weight family {family!r}")
        if config:
            raise ValueError(f"unexpected keys for family {family!r}: {sorted(config)}")
        return spec.reflected() if reflected else spec

    def to_config(self) -> dict:
        out = {"family": self.family}
        for name, value in self.params:
            out[name] = [list(p) for p in value] if name == "points" else value
        if self.sign < 0:
            out["reflected"] = True
        return out

    def param(self, name):
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(name)

    # -- derived properties -----------------------------------------------

    def reflected(self) -> WeightSpec:
        """The weight ``-phi`` on the same domain, with range ``]-c, -b[``."""
        return WeightSpec(self.family, self.params, self.a, -self.c, -self.b, -self.sign)

    @property
    def direction(self) -> int:
        """+1 for increasing weights, -1 for decreasing ones."""
        return self.sign

    @property
    def shape(self) -> str:
        """One of ``linear``, ``convex``, ``concave``, ``mixed``."""
        if self.family == "user_table":
            base = self._table_shape
        else:
            base = _SHAPES[self.family]
        if self.sign < 0:
            base = {"convex": "concave", "concave": "convex"}.get(base, base)
        return base

    @property
    def is_convex(self) -> bool:
        return self.shape in ("linear", "convex")

    # -- evaluation -------------------------------------------------------

    def derivatives(self, x):
        """Return ``(phi, dphi, ddphi)`` at ``x`` (no domain check)."""
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            f, df, ddf = self._base(x)
        if self.sign < 0:
            return -f, -df, -ddf
        return f, df, ddf

    def phi(self, x):
        return self.derivatives(x)[0]

    def dphi(self, x):
        return self.derivatives(x)[1]

    def ddphi(self, x):
        return self.derivatives(x)[2]

    def _base(self, x):
        fam = self.family
        one = np.ones_like(x)
        if fam == "identity":
            return x, one, 0.0 * x
        if fam == "linear":
            k = self.param("k")
            return k * x, k * one, 0.0 * x
        if fam == "quadratic":
            return 0.5 * x * x, x.copy(), one
        if fam == "alpha_log":
            al = self.param("alpha")
            return al * np.log(x), al / x, -al / (x * x)
        if fam == "arctan":
            r = 1.0 / (1.0 + x * x)
            return np.arctan(x), r, -2.0 * x * r * r
        return self._table_eval(x)

    # -- user tables ------------------------------------------------------

    @cached_property
    def _table(self):
        pts = np.array(self.param("points"))
        xs, ys = pts[:, 0], pts[:, 1]
        spline = interpolate.CubicSpline(xs, ys, bc_type="natural")
        fine = np.concatenate(
            [np.linspace(x0, x1, 33)[:-1] for x0, x1 in zip(xs[:-1], xs[1:])] + [xs[-1:]]
        )
        kind = "cubic"
        if np.any(spline(fine, 1) <= 0):
            # natural cubic overshoots: fall back to a monotone (C1) interpolant
            spline = interpolate.PchipInterpolator(xs, ys)
            kind = "pchip"
        return spline, kind, xs[-1], fine

    @property
    def interpolant_kind(self) -> str | None:
        return self._table[1] if self.family == "user_table" else None

    @cached_property
    def _table_shape(self) -> str:
        spline, _, _, fine = self._table
        dd = spline(fine, 2)
        scale = max(1.0, float(np.max(np.abs(dd))))
        if np.all(np.abs(dd) <= 1e-12 * scale):
            return "linear"
        if np.all(dd >= -1e-12 * scale):
            return "convex"
        if np.all(dd <= 1e-12 * scale):
            # the linear continuation past the table keeps concavity
            return "concave"
        return "mixed"

    def _table_eval(self, x):
        spline, _, x_end, _ = self._table
        inside = x <= x_end
        xi = np.where(inside, x, x_end)
        f, df, ddf = spline(xi), spline(xi, 1), spline(xi, 2)
        f_end, df_end = float(spline(x_end)), float(spline(x_end, 1))
        f = np.where(inside, f, f_end + df_end * (x - x_end))
        df = np.where(inside, df, df_end)
        ddf = np.where(inside, ddf, 0.0)
        return f, df, ddf


def _check_height(spec: WeightSpec, x3) -> None:
    x3 = np.asarray(x3, dtype=float)
    if np.any(np.isnan(x3)) or np.any(x3 <= spec.a):
        raise DomainError(f"height must exceed the domain endpoint a={spec.a}")


def eval_weight(spec: WeightSpec, x3: float):
    """Return ``(phi, dphi, ddphi)`` at a single height ``x3 > a``.

    >>> eval_weight(WeightSpec.alpha_log(2.0), 1.0)
    (0.0, 2.0, -2.0)
    """
    _check_height(spec, x3)
    f, df, ddf = (float(v) for v in spec.derivatives(float(x3)))
    if not (math.isfinite(f) and math.isfinite(df) and math.isfinite(ddf)):
        raise NonFinite(f"weight evaluation overflowed at x3={x3}")
    return f, df, ddf


# ---------------------------------------------------------------------------
# integrability of exp(-phi)


@dataclass(frozen=True)
class IntegrabilityCertificate:
    """Outcome of the tail test for ``exp(-phi)`` beyond a height ``h``.

    ``value`` is the quadrature over the truncated range (``inf`` when
    divergent) and ``tail_bound`` bounds the part beyond ``cutoff``, so the
    integral lies in ``[value, value + tail_bound]``.
    ``rule`` names the argument that decided the status.
    """

    status: Integrability
    value: float
    tail_bound: float
    cutoff: float
    rule: str


def _block_integral(f, lo, hi):
    lo, hi = min(lo, hi), max(lo, hi)
    val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def integrability_certificate(
    spec: WeightSpec, h: float, *, rel_tol: float = 1e-12, max_doublings: int = 64, window: int = 8
) -> IntegrabilityCertificate:
    """Decide whether ``exp(-phi)`` is integrable on the tail beyond ``h``.

    The tail runs towards ``+inf`` for increasing weights and towards ``a``
    for decreasing ones.  Three rules are tried in order:

    * bounded range: an increasing weight with ``c < inf`` keeps
      ``exp(-phi) >= exp(-c) > 0``, so the integral diverges;
    * convex tail bound: for convex weights ``exp(-phi)`` beyond ``T`` is
      dominated by an exponential and its integral by
      ``exp(-phi(T)) / |phi'(T)|``;
    * dyadic condensation: with ``t_k = h + d 2**k`` the block integrals over
      ``[t_k, t_{k+1}]`` lie between ``2**k exp(-phi(t_{k+1}))`` and
      ``2**k exp(-phi(t_k))``.  Non-decreasing lower bounds witness
      divergence; upper bounds decaying geometrically certify convergence.
    """
    _check_height(spec, h)
    h = float(h)
    d = spec.direction

    def f(lam):
        return math.exp(-float(spec.phi(lam)))

    if d > 0 and math.isfinite(spec.c):
        return IntegrabilityCertificate(Integrability.INFINITE, math.inf, math.inf, math.inf, "bounded_range")

    if d < 0 and math.isfinite(spec.a):
        # exp(-phi) <= exp(-phi(h)) on the finite interval ]a, h]
        val, _ = integrate.quad(f, spec.a, h, epsabs=0.0, epsrel=1e-12, limit=200)
        return IntegrabilityCertificate(Integrability.FINITE, val, 0.0, spec.a, "finite_interval")

    total = _block_integral(f, h, h + d)
    if spec.is_convex:
        for k in range(1, max_doublings + 1):
            T = h + d * 2.0**k
            total += _block_integral(f, h + d * 2.0 ** (k - 1), T)
            f_T, df_T, _ = spec.derivatives(T)
            log_bound = -float(f_T) - math.log(abs(float(df_T)))
            if log_bound < math.log(rel_tol) + math.log(max(total, 1e-300)):
                bound = math.exp(log_bound)
                return IntegrabilityCertificate(Integrability.FINITE, total, bound, T, "convex_tail")

    ks = np.arange(max_doublings + 1, dtype=float)
    pts = h + d * 2.0**ks
    log_upper = ks * math.log(2.0) - spec.phi(pts)
    log_lower = ks[:-1] * math.log(2.0) - spec.phi(pts[1:])
    lower_steps = np.diff(log_lower)[-window:]
    upper_steps = np.diff(log_upper)[-window:]
    if np.all(lower_steps >= -1e-12):
        return IntegrabilityCertificate(Integrability.INFINITE, math.inf, math.inf, float(pts[-1]), "condensation")
    if np.all(upper_steps <= -1e-3):
        rho = math.exp(float(np.max(upper_steps)))
        cutoff_k = max_doublings
        for k in range(1, max_doublings + 1):
            total += _block_integral(f, pts[k - 1], pts[k])
            tail = math.exp(float(log_upper[k])) / (1.0 - rho)
            if tail <= rel_tol * total:
                cutoff_k = k
                break
        tail = math.exp(float(log_upper[cutoff_k])) / (1.0 - rho)
        return IntegrabilityCertificate(Integrability.FINITE, total, tail, float(pts[cutoff_k]), "condensation")
    return IntegrabilityCertificate(Integrability.INCONCLUSIVE, math.nan, math.nan, float(pts[-1]), "none")


def classify_integrability(spec: WeightSpec, h: float) -> Integrability:
    """Classify ``int exp(-phi)`` beyond ``h`` as finite, infinite or inconclusive."""
    return integrability_certificate(spec, h).status


# ---------------------------------------------------------------------------
# hypothesis report


@dataclass(frozen=True)
class HypothesisReport:
    increasing: bool
    convex: bool
    quotient_bound: float
    integrable_exp_neg_phi: Integrability
    range_finite_top: bool
    interval: tuple = (-math.inf, math.inf)
    reference_height: float = 0.0
    notes: tuple = field(default_factory=tuple)

    @property
    def uniqueness_hypotheses(self) -> bool:
        """True when every hypothesis of the uniqueness theorem holds."""
        return (
            self.increasing
            and self.convex
            and math.isfinite(self.quotient_bound)
            and self.integrable_exp_neg_phi is Integrability.FINITE
        )

    def to_dict(self) -> dict:
        return {
            "increasing": self.increasing,
            "convex": self.convex,
            "quotient_bound": _jsonable(self.quotient_bound),
            "integrable_exp_neg_phi": self.integrable_exp_neg_phi.value,
            "range_finite_top": self.range_finite_top,
            "interval": [_jsonable(v) for v in self.interval],
            "reference_height": self.reference_height,
            "uniqueness_hypotheses": self.uniqueness_hypotheses,
            "notes": list(self.notes),
        }


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _quotient_bound(spec: WeightSpec, lo: float, hi: float) -> float:
    """sup of |phi''/phi'| over [lo, hi] (the sign flip of reflection cancels)."""
    fam = spec.family
    if fam in ("identity", "linear"):
        return 0.0
    if fam in ("quadratic", "alpha_log"):
        # |phi''/phi'| = 1/x, largest at the left end
        return math.inf if lo <= 0 else 1.0 / lo
    if fam == "arctan":
        # |phi''/phi'| = 2|x|/(1+x^2), peak value 1 at |x| = 1
        if lo <= 1 <= hi or lo <= -1 <= hi:
            return 1.0

        def g(x):
            return 0.0 if math.isinf(x) else 2 * abs(x) / (1 + x * x)

        return max(g(lo), g(hi))
    spline, _, x_end, _ = spec._table
    left = max(lo, spec.a)
    right = min(hi, x_end)
    if right <= left:
        return 0.0
    xs = np.linspace(left, right, 4097)
    _, df, ddf = spec.derivatives(xs)
    return float(np.max(np.abs(ddf / df)))


def check_hypotheses(spec: WeightSpec, interval=None, reference_height=None) -> HypothesisReport:
    """Measure a weight against the hypotheses of the uniqueness theorem.

    ``interval`` restricts the bounded-quotient check (default: the whole
    domain ``]a, +inf[``).  The integrability flag refers to the tail beyond
    ``reference_height``, which defaults to ``a + 1`` (or 0 when ``a = -inf``).
    """
    lo, hi = interval if interval is not None else (spec.a, math.inf)
    lo, hi = float(max(lo, spec.a)), float(hi)
    if reference_height is None:
        reference_height = spec.a + 1.0 if math.isfinite(spec.a) else 0.0
    notes = []
    if spec.family == "user_table":
        spline, kind, x_end, fine = spec._table
        increasing = bool(np.all(spec.dphi(fine) > 0))
        notes.append(f"user_table interpolant: {kind}")
    else:
        increasing = spec.sign > 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        integrable = classify_integrability(spec, reference_height)
    return HypothesisReport(
        increasing=increasing,
        convex=spec.is_convex,
        quotient_bound=_quotient_bound(spec, lo, hi),
        integrable_exp_neg_phi=integrable,
        range_finite_top=math.isfinite(spec.c),
        interval=(lo, hi),
        reference_height=float(reference_height),
        notes=tuple(notes),
    )
