"""Finite-difference geometry of height graphs ``x3 = u(x1, x2)``.

Conventions: the Gauss map points downwards, ``N = (u_x, u_y, -1) / W`` with
``W = sqrt(1 + u_x^2 + u_y^2)``, and the mean curvature is the one for which
phi-minimal graphs satisfy ``H = -phi'(u) <e3, N>``, i.e.

    H = ((1 + u_y^2) u_xx - 2 u_x u_y u_xy + (1 + u_x^2) u_yy) / W^3.

Arrays are indexed ``values[i, j] = u(x[i], y[j])``.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import BoundarySupport, DomainError, GridTooSmall, NotMinimal
from .weights import WeightSpec

__all__ = [
    "GraphPatch",
    "SurfaceFields",
    "IdentityResiduals",
    "surface_fields",
    "phi_minimal_residual",
    "drift_laplacian",
    "gradient_inner",
    "identity_residuals",
    "weighted_area",
    "first_variation",
    "first_variation_density",
    "fields_csv",
    "interior_mask",
    "grim_reaper_patch",
    "refinement_study",
]


@dataclass(frozen=True, eq=False)
class GraphPatch:
    """Heights of a graph on a uniform tensor grid over a rectangle."""

    x_range: tuple
    y_range: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or min(values.shape) < 3:
            raise GridTooSmall(f"need at least 3x3 nodes, got shape {values.shape}")
        x0, x1 = (float(v) for v in self.x_range)
        y0, y1 = (float(v) for v in self.y_range)
        if not (x1 > x0 and y1 > y0):
            raise ValueError("grid ranges must be increasing intervals")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "x_range", (x0, x1))
        object.__setattr__(self, "y_range", (y0, y1))

    @classmethod
    def from_function(cls, f, x_range, y_range, nx, ny) -> GraphPatch:
        """Sample ``f(X, Y)`` (vectorised) on an ``nx`` by ``ny`` grid."""
        if nx < 3 or ny < 3:
            raise GridTooSmall("need at least 3 nodes per axis")
        x = np.linspace(*x_range, nx)
        y = np.linspace(*y_range, ny)
        X, Y = np.meshgrid(x, y, indexing="ij")
        return cls(tuple(x_range), tuple(y_range), np.broadcast_to(f(X, Y), X.shape))

    def with_values(self, values) -> GraphPatch:
        return GraphPatch(self.x_range, self.y_range, values)

    @property
    def shape(self):
        return self.values.shape

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(*self.y_range, self.ny)

    @property
    def dx(self) -> float:
        return (self.x_range[1] - self.x_range[0]) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_range[1] - self.y_range[0]) / (self.ny - 1)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def to_json(self) -> str:
        """Serialise as ``{x0, x1, y0, y1, nx, ny, values}`` with row-major values."""
        return json.dumps(
            {
                "x0": self.x_range[0],
                "x1": self.x_range[1],
                "y0": self.y_range[0],
                "y1": self.y_range[1],
                "nx": self.nx,
                "ny": self.ny,
                "values": [float(v) for v in self.values.ravel(order="C")],
            }
        )

    @classmethod
    def from_json(cls, text) -> GraphPatch:
        d = json.loads(text) if isinstance(text, (str, bytes)) else dict(text)
        values = np.asarray(d["values"], dtype=float).reshape(int(d["nx"]), int(d["ny"]))
        return cls((d["x0"], d["x1"]), (d["y0"], d["y1"]), values)


def interior_mask(shape, ring: int = 1) -> np.ndarray:
    """Boolean mask of nodes at least ``ring`` nodes away from the boundary."""
    mask = np.zeros(shape, dtype=bool)
    mask[ring : shape[0] - ring, ring : shape[1] - ring] = True
    return mask


# -- finite differences ----------------------------------------------------


# One-sided stencils are written in differences from the edge value so that
# constant fields differentiate to exactly zero.


def _d1(f, h, axis):
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    out[0] = (4.0 * (f[1] - f[0]) - (f[2] - f[0])) / (2.0 * h)
    out[-1] = -(4.0 * (f[-2] - f[-1]) - (f[-3] - f[-1])) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def _d2(f, h, axis):
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    out = np.empty_like(f)
    out[1:-1] = ((f[2:] - f[1:-1]) - (f[1:-1] - f[:-2])) / (h * h)
    if f.shape[0] >= 4:
        for k, sgn in ((0, 1), (-1, -1)):
            d1, d2, d3 = (f[k + sgn * m] - f[k] for m in (1, 2, 3))
            out[k] = (-5.0 * d1 + 4.0 * d2 - d3) / (h * h)
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


def _derivatives(f, dx, dy):
    fx = _d1(f, dx, 0)
    fy = _d1(f, dy, 1)
    return fx, fy, _d2(f, dx, 0), _d2(f, dy, 1), _d1(fx, dy, 1)


def _check_domain(patch: GraphPatch, spec: WeightSpec):
    if np.any(patch.values <= spec.a):
        raise DomainError(f"patch heights must exceed the domain endpoint a={spec.a}")


# -- pointwise geometry ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class SurfaceFields:
    """Per-node geometric quantities of a graph patch.

    ``eta`` holds the angle functions ``<e_i, N>`` and coincides with
    ``normal`` component-wise; both are kept for readability at call sites.
    """

    normal: np.ndarray
    H: np.ndarray
    S_norm2: np.ndarray
    K: np.ndarray
    eta: np.ndarray
    grad_x3_norm2: np.ndarray
    W: np.ndarray
    du: tuple  # (u_x, u_y, u_xx, u_yy, u_xy)


def surface_fields(patch: GraphPatch) -> SurfaceFields:
    """Gauss map, curvatures and angle functions of a graph patch.

    Derivatives are second-order central differences inside and second-order
    one-sided differences on the boundary.

    >>> import numpy as np
    >>> flat = GraphPatch((0, 1), (0, 1), np.full((5, 5), 2.0))
    >>> surface_fields(flat).eta[2, 2].tolist()
    [0.0, 0.0, -1.0]
    """
    p, q, uxx, uyy, uxy = _derivatives(patch.values, patch.dx, patch.dy)
    W2 = 1.0 + p * p + q * q
    W = np.sqrt(W2)
    normal = np.stack((p / W, q / W, -1.0 / W), axis=-1)
    # shape operator A = g^{-1} h with h_ij = <d_ij F, N> = -u_ij / W
    g11, g12, g22 = (1.0 + q * q) / W2, -p * q / W2, (1.0 + p * p) / W2
    h11, h12, h22 = -uxx / W, -uxy / W, -uyy / W
    a11 = g11 * h11 + g12 * h12
    a12 = g11 * h12 + g12 * h22
    a21 = g12 * h11 + g22 * h12
    a22 = g12 * h12 + g22 * h22
    H = -(a11 + a22)
    S2 = a11 * a11 + 2.0 * a12 * a21 + a22 * a22
    K = (uxx * uyy - uxy * uxy) / (W2 * W2)
    eta3 = normal[..., 2]
    return SurfaceFields(
        normal=normal,
        H=H,
        S_norm2=S2,
        K=K,
        eta=normal.copy(),
        grad_x3_norm2=1.0 - eta3 * eta3,
        W=W,
        du=(p, q, uxx, uyy, uxy),
    )


def phi_minimal_residual(patch: GraphPatch, spec: WeightSpec) -> np.ndarray:
    """``(1+u_x^2) u_yy + (1+u_y^2) u_xx - 2 u_x u_y u_xy - phi'(u) (1+u_x^2+u_y^2)`` per node."""
    _check_domain(patch, spec)
    p, q, uxx, uyy, uxy = _derivatives(patch.values, patch.dx, patch.dy)
    return (1 + p * p) * uyy + (1 + q * q) * uxx - 2 * p * q * uxy - spec.dphi(patch.values) * (1 + p * p + q * q)


# -- operators on scalar fields --------------------------------------------


def gradient_inner(patch: GraphPatch, f, g, fields: SurfaceFields | None = None) -> np.ndarray:
    """Induced-metric inner product ``<grad f, grad g>`` per node."""
    fields = fields or surface_fields(patch)
    p, q = fields.du[0], fields.du[1]
    fx, fy = _d1(f, patch.dx, 0), _d1(f, patch.dy, 1)
    gx, gy = _d1(g, patch.dx, 0), _d1(g, patch.dy, 1)
    W2 = fields.W**2
    return ((1 + q * q) * fx * gx - p * q * (fx * gy + fy * gx) + (1 + p * p) * fy * gy) / W2


def _laplace_beltrami(patch: GraphPatch, f, fields: SurfaceFields) -> np.ndarray:
    p, q, uxx, uyy, uxy = fields.du
    W = fields.W
    W2 = W * W
    dx, dy = patch.dx, patch.dy
    fx, fy, fxx, fyy, fxy = _derivatives(f, dx, dy)

    # boundary ring: non-divergence form g^ij (f_ij - Gamma^k_ij f_k)
    trace_f = ((1 + q * q) * fxx - 2 * p * q * fxy + (1 + p * p) * fyy) / W2
    trace_u = ((1 + q * q) * uxx - 2 * p * q * uxy + (1 + p * p) * uyy) / W2
    out = trace_f - trace_u * (p * fx + q * fy) / W2

    # interior: flux differencing of sqrt(g) g^ij d_j f at half nodes, with the
    # metric built from compact differences of u across each half node
    def half(a, axis):
        n = a.shape[axis]
        return 0.5 * (np.take(a, range(1, n), axis) + np.take(a, range(n - 1), axis))

    u = patch.values
    ph, qh = np.diff(u, axis=0) / dx, half(q, 0)
    Wh = np.sqrt(1 + ph * ph + qh * qh)
    flux_x = ((1 + qh * qh) * np.diff(f, axis=0) / dx - ph * qh * half(fy, 0)) / Wh
    ph, qh = half(p, 1), np.diff(u, axis=1) / dy
    Wh = np.sqrt(1 + ph * ph + qh * qh)
    flux_y = ((1 + ph * ph) * np.diff(f, axis=1) / dy - ph * qh * half(fx, 1)) / Wh
    div = np.diff(flux_x, axis=0)[:, 1:-1] / dx + np.diff(flux_y, axis=1)[1:-1, :] / dy
    out[1:-1, 1:-1] = div / W[1:-1, 1:-1]
    return out


def drift_laplacian(patch: GraphPatch, spec: WeightSpec, f, fields: SurfaceFields | None = None) -> np.ndarray:
    """``Delta f + <grad phi, grad f>`` on the graph, per node.

    Interior nodes use the divergence (flux) form of the Laplace-Beltrami
    operator; boundary nodes fall back on the non-divergence form with
    one-sided stencils and are less accurate.
    """
    _check_domain(patch, spec)
    f = np.asarray(f, dtype=float)
    if f.shape != patch.shape:
        raise ValueError("field shape must match the patch grid")
    fields = fields or surface_fields(patch)
    p, q = fields.du[0], fields.du[1]
    fx, fy = _d1(f, patch.dx, 0), _d1(f, patch.dy, 1)
    drift = spec.dphi(patch.values) * (p * fx + q * fy) / fields.W**2
    return _laplace_beltrami(patch, f, fields) + drift


# -- the fundamental equations ----------------------------------------------


@dataclass(frozen=True, eq=False)
class IdentityResiduals:
    """Max-norms over stencil-interior nodes of the fundamental equations."""

    coordinates: float  # Delta^phi x_i = 0, i = 1, 2
    height: float  # Delta^phi x3 = phi'
    eta_horizontal: float  # Delta^phi eta_i + |S|^2 eta_i = phi'' eta_i eta3^2, i = 1, 2
    eta_vertical: float  # Delta^phi eta3 + |S|^2 eta3 = -phi'' eta3 |grad x3|^2
    quotient: float  # drift equation for eta2 / eta3
    coordinate_x1: float
    pde_residual: float
    ring: int
    fields: dict

    def norms(self) -> dict:
        return {
            "coordinates": self.coordinates,
            "height": self.height,
            "eta_horizontal": self.eta_horizontal,
            "eta_vertical": self.eta_vertical,
            "quotient": self.quotient,
        }


def identity_residuals(patch: GraphPatch, spec: WeightSpec, tol: float = 1e-6, ring: int = 2) -> IdentityResiduals:
    """Evaluate the drift-Laplacian identities satisfied by phi-minimal graphs.

    The identities only hold on solutions, so :class:`NotMinimal` is raised
    when the graph equation residual on the interior exceeds ``tol``.  Norms
    skip the ``ring`` outermost node layers: a node next to the boundary sees
    coefficients from one-sided stencils, which costs an order of accuracy.
    """
    _check_domain(patch, spec)
    pde = phi_minimal_residual(patch, spec)
    pde_norm = float(np.max(np.abs(pde[interior_mask(patch.shape, 1)])))
    if pde_norm > tol:
        raise NotMinimal(f"graph equation residual {pde_norm:.3e} exceeds tolerance {tol:.3e}")
    fields = surface_fields(patch)
    X, Y = patch.mesh()
    u = patch.values
    dphi, ddphi = spec.dphi(u), spec.ddphi(u)
    eta1, eta2, eta3 = (fields.eta[..., k] for k in range(3))
    S2 = fields.S_norm2

    def L(f):
        return drift_laplacian(patch, spec, f, fields)

    res = {
        "x1": L(X),
        "x2": L(Y),
        "x3": L(u) - dphi,
        "eta1": L(eta1) + S2 * eta1 - ddphi * eta1 * eta3**2,
        "eta2": L(eta2) + S2 * eta2 - ddphi * eta2 * eta3**2,
        "eta3": L(eta3) + S2 * eta3 + ddphi * eta3 * fields.grad_x3_norm2,
    }
    quot = eta2 / eta3
    res["quotient"] = L(quot) + 2.0 * gradient_inner(patch, quot, eta3, fields) / eta3 - ddphi * quot
    mask = interior_mask(patch.shape, ring)

    def norm(*keys):
        return float(max(np.max(np.abs(res[k][mask])) for k in keys))

    return IdentityResiduals(
        coordinates=norm("x1", "x2"),
        height=norm("x3"),
        eta_horizontal=norm("eta1", "eta2"),
        eta_vertical=norm("eta3"),
        quotient=norm("quotient"),
        coordinate_x1=norm("x1"),
        pde_residual=pde_norm,
        ring=ring,
        fields=res,
    )


# -- weighted area -----------------------------------------------------------


def _integrate2d(vals, x, y):
    return float(integrate.simpson(integrate.simpson(vals, x=y, axis=1), x=x))


def weighted_area(patch: GraphPatch, spec: WeightSpec) -> float:
    """``int exp(phi(u)) sqrt(1 + u_x^2 + u_y^2) dx dy`` by composite Simpson."""
    _check_domain(patch, spec)
    p, q = _d1(patch.values, patch.dx, 0), _d1(patch.values, patch.dy, 1)
    dens = np.exp(spec.phi(patch.values)) * np.sqrt(1 + p * p + q * q)
    return _integrate2d(dens, patch.x, patch.y)


def _d1_fourth(f, h, axis):
    # fourth-order central differences, second-order one-sided near the edges
    out = np.moveaxis(_d1(f, h, axis), axis, 0)
    f = np.moveaxis(f, axis, 0)
    if f.shape[0] >= 5:
        out[2:-2] = (8.0 * (f[3:-1] - f[1:-3]) - (f[4:] - f[:-4])) / (12.0 * h)
    return np.moveaxis(out, 0, axis)


def _parametric_weighted_area(patch, spec, X, Y, Z):
    def tangent(axis, h):
        return np.stack([_d1_fourth(c, h, axis) for c in (X, Y, Z)], axis=-1)

    n = np.cross(tangent(0, patch.dx), tangent(1, patch.dy))
    dens = np.exp(spec.phi(Z)) * np.linalg.norm(n, axis=-1)
    return _integrate2d(dens, patch.x, patch.y)


def first_variation(patch: GraphPatch, spec: WeightSpec, v, eps: float = 1e-3) -> float:
    """Derivative of the weighted area along the normal deformation ``F + t v N``.

    The deformed surface is evaluated as a parametric surface over the same
    grid, so no re-interpolation onto a height function is needed.  Its
    tangents use fourth-order differences so that the measurement error stays
    well below the second-order error of a discretely solved surface.  The
    derivative is a central difference in ``t`` refined by one Richardson step.
    """
    _check_domain(patch, spec)
    v = np.asarray(v, dtype=float)
    if v.shape != patch.shape:
        raise ValueError("normal speed must live on the patch grid")
    if np.any(v[~interior_mask(patch.shape, 1)] != 0):
        raise BoundarySupport("normal speed must vanish on boundary nodes")
    if not np.any(v):
        return 0.0
    N = surface_fields(patch).normal
    X, Y = patch.mesh()
    U = patch.values

    def area(t):
        return _parametric_weighted_area(patch, spec, X + t * v * N[..., 0], Y + t * v * N[..., 1], U + t * v * N[..., 2])

    def central(t):
        return (area(t) - area(-t)) / (2 * t)

    return (4.0 * central(eps / 2) - central(eps)) / 3.0


def first_variation_density(patch: GraphPatch, spec: WeightSpec) -> np.ndarray:
    """Integrand of the first variation per unit normal speed, per unit ``dx dy``.

    Moving along ``v N`` changes the weighted area by
    ``int v exp(phi) (H + phi' eta3) W dx dy``; this returns
    ``exp(phi) (H + phi' eta3) W``.
    """
    fields = surface_fields(patch)
    u = patch.values
    return np.exp(spec.phi(u)) * (fields.H + spec.dphi(u) * fields.eta[..., 2]) * fields.W


def fields_csv(patch: GraphPatch, spec: WeightSpec | None = None) -> str:
    """Per-node field dump as CSV text (17 significant digits)."""
    fields = surface_fields(patch)
    X, Y = patch.mesh()
    cols = {
        "x": X,
        "y": Y,
        "u": patch.values,
        "H": fields.H,
        "eta1": fields.eta[..., 0],
        "eta2": fields.eta[..., 1],
        "eta3": fields.eta[..., 2],
        "S_norm2": fields.S_norm2,
        "K": fields.K,
        "grad_x3_norm2": fields.grad_x3_norm2,
    }
    if spec is not None:
        cols["residual"] = phi_minimal_residual(patch, spec)
    buf = io.StringIO()
    buf.write("i,j," + ",".join(cols) + "\n")
    for i in range(patch.nx):
        for j in range(patch.ny):
            buf.write(f"{i},{j}," + ",".join(f"{cols[k][i, j]:.17g}" for k in cols) + "\n")
    return buf.getvalue()


def grim_reaper_patch(x_range=(-1.2, 1.2), y_range=(-1.0, 1.0), n=129, angle: float = 0.0) -> GraphPatch:
    """Closed-form translating solution ``-log cos`` sampled on a grid.

    ``angle`` rotates the cylinder about the vertical axis, which keeps it
    phi-minimal for ``phi = x3`` and makes ``eta2`` nonzero.
    """
    ca, sa = math.cos(angle), math.sin(angle)
    return GraphPatch.from_function(lambda X, Y: -np.log(np.cos(ca * X + sa * Y)), x_range, y_range, n, n)


def refinement_study(make_patch, spec: WeightSpec, sizes=(33, 65, 129), tol: float = np.inf, band: int = 2):
    """Identity residual norms and observed orders under grid doubling.

    ``make_patch(n)`` returns an ``n`` by ``n`` patch of the same surface.  The
    excluded boundary band is ``band`` nodes of the coarsest grid, scaled up on
    finer grids so every level is measured on the same physical region.

    Returns ``(norms, orders)``: dicts of lists keyed like
    :meth:`IdentityResiduals.norms`.
    """
    sizes = list(sizes)
    norms: dict = {}
    for n in sizes:
        ring = max(band, round(band * (n - 1) / (sizes[0] - 1)))
        res = identity_residuals(make_patch(n), spec, tol=tol, ring=ring)
        for key, val in res.norms().items():
            norms.setdefault(key, []).append(val)
    orders = {}
    for key, vals in norms.items():
        ratios = [math.log2(a / b) if a > 0 and b > 0 else math.nan for a, b in zip(vals, vals[1:])]
        orders[key] = ratios
    return norms, orders
