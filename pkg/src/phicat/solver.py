"""Damped Newton solver for the phi-minimal graph equation on rectangles.

The discrete residual at an interior node is

    (1 + u_x^2) u_yy + (1 + u_y^2) u_xx - 2 u_x u_y u_xy - phi'(u) (1 + u_x^2 + u_y^2)

with central differences (5-point second differences, 4-point cross stencil),
so it coincides with :func:`phicat.geometry.phi_minimal_residual` on interior
nodes.  Boundary heights are Dirichlet data.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import DomainViolation, HypothesisWarning, NoConvergence, SlabViolation
from .geometry import GraphPatch, interior_mask, surface_fields
from .profile import ProfileSolution, integrate_profile
from .weights import WeightSpec, check_hypotheses

__all__ = [
    "APPROXIMATION_NOTE",
    "BoundaryData",
    "SolverOptions",
    "SolveReport",
    "UniquenessReport",
    "coons_blend",
    "discrete_residual",
    "jacobian",
    "residual_floor",
    "solve_graph_equation",
    "make_boundary_from_profile",
    "symmetry_defect",
    "uniqueness_experiment",
]

APPROXIMATION_NOTE = (
    "asymptotic behaviour at the ends of the strip is imposed through Dirichlet "
    "traces on a bounded rectangle"
)


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Dirichlet heights on the boundary nodes of a grid.

    Stored as a full ``nx`` by ``ny`` array whose boundary ring carries the data;
    interior entries are ignored.  Corner compatibility holds by construction.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or min(v.shape) < 3:
            raise ValueError("boundary data must live on a grid with at least 3x3 nodes")
        if not np.all(np.isfinite(v[~interior_mask(v.shape, 1)])):
            raise ValueError("boundary heights must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, f, grid: GraphPatch) -> BoundaryData:
        X, Y = grid.mesh()
        return cls(np.broadcast_to(f(X, Y), X.shape))

    @property
    def shape(self):
        return self.values.shape

    def edges(self) -> dict:
        v = self.values
        return {"x0": v[0, :].copy(), "x1": v[-1, :].copy(), "y0": v[:, 0].copy(), "y1": v[:, -1].copy()}

    def check(self, spec: WeightSpec) -> None:
        ring = self.values[~interior_mask(self.shape, 1)]
        if np.any(ring <= spec.a):
            raise DomainViolation(f"boundary heights must exceed the domain endpoint a={spec.a}")


@dataclass(frozen=True)
class SolverOptions:
    """Newton controls.

    ``tol=None`` selects ``max(1e-10, rounding floor)``, where the floor
    estimates the rounding noise of the residual on the current iterate; an
    explicit ``tol`` is enforced as given.
    """

    tol: float | None = None
    max_iter: int = 50
    armijo: float = 1e-4
    damping_floor: float = 2.0**-20


@dataclass
class SolveReport:
    iterations: int
    final_residual_norm: float
    damping_history: list
    converged: bool
    residual_history: list = field(default_factory=list)
    tol: float = math.nan
    note: str = APPROXIMATION_NOTE
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        # wall time is left out so reports stay byte-identical across reruns
        return {
            "iterations": self.iterations,
            "final_residual_norm": self.final_residual_norm,
            "damping_history": list(self.damping_history),
            "residual_history": list(self.residual_history),
            "converged": self.converged,
            "tol": self.tol,
            "note": self.note,
        }


def coons_blend(boundary: BoundaryData, grid: GraphPatch) -> np.ndarray:
    """Transfinite bilinear interpolation of the boundary ring into the interior."""
    v = boundary.values
    s = (grid.x - grid.x_range[0]) / (grid.x_range[1] - grid.x_range[0])
    t = (grid.y - grid.y_range[0]) / (grid.y_range[1] - grid.y_range[0])
    S, T = np.meshgrid(s, t, indexing="ij")
    left, right = v[0, :][None, :], v[-1, :][None, :]
    bottom, top = v[:, 0][:, None], v[:, -1][:, None]
    corners = (1 - S) * (1 - T) * v[0, 0] + S * (1 - T) * v[-1, 0] + (1 - S) * T * v[0, -1] + S * T * v[-1, -1]
    return (1 - S) * left + S * right + (1 - T) * bottom + T * top - corners


def _stencil_derivatives(u, dx, dy):
    c = u[1:-1, 1:-1]
    e, w = u[2:, 1:-1], u[:-2, 1:-1]
    n, s = u[1:-1, 2:], u[1:-1, :-2]
    p = (e - w) / (2 * dx)
    q = (n - s) / (2 * dy)
    uxx = (e - 2 * c + w) / (dx * dx)
    uyy = (n - 2 * c + s) / (dy * dy)
    uxy = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * dx * dy)
    return c, p, q, uxx, uyy, uxy


def discrete_residual(spec: WeightSpec, u, dx: float, dy: float) -> np.ndarray:
    """Residual on the interior nodes, shape ``(nx - 2, ny - 2)``."""
    c, p, q, uxx, uyy, uxy = _stencil_derivatives(u, dx, dy)
    return (1 + p * p) * uyy + (1 + q * q) * uxx - 2 * p * q * uxy - spec.dphi(c) * (1 + p * p + q * q)


def jacobian(spec: WeightSpec, u, dx: float, dy: float) -> sparse.csc_matrix:
    """Exact derivative of :func:`discrete_residual` w.r.t. the interior heights."""
    c, p, q, uxx, uyy, uxy = _stencil_derivatives(u, dx, dy)
    dphi, ddphi = spec.dphi(c), spec.ddphi(c)
    W2 = 1 + p * p + q * q
    Rp = 2 * p * uyy - 2 * q * uxy - 2 * p * dphi
    Rq = 2 * q * uxx - 2 * p * uxy - 2 * q * dphi
    Rxx, Ryy, Rxy = 1 + q * q, 1 + p * p, -2 * p * q
    Ru = -ddphi * W2

    mx, my = c.shape
    idx = np.arange(mx * my).reshape(mx, my)
    # (offset_i, offset_j, coefficient)
    stencil = [
        (0, 0, Ru - 2 * Rxx / dx**2 - 2 * Ryy / dy**2),
        (1, 0, Rxx / dx**2 + Rp / (2 * dx)),
        (-1, 0, Rxx / dx**2 - Rp / (2 * dx)),
        (0, 1, Ryy / dy**2 + Rq / (2 * dy)),
        (0, -1, Ryy / dy**2 - Rq / (2 * dy)),
        (1, 1, Rxy / (4 * dx * dy)),
        (-1, -1, Rxy / (4 * dx * dy)),
        (1, -1, -Rxy / (4 * dx * dy)),
        (-1, 1, -Rxy / (4 * dx * dy)),
    ]
    rows, cols, vals = [], [], []
    for di, dj, coef in stencil:
        # keep only neighbours that are unknowns (interior nodes)
        i0, i1 = max(0, -di), mx - max(0, di)
        j0, j1 = max(0, -dj), my - max(0, dj)
        rows.append(idx[i0:i1, j0:j1].ravel())
        cols.append(idx[i0 + di : i1 + di, j0 + dj : j1 + dj].ravel())
        vals.append(np.broadcast_to(coef, c.shape)[i0:i1, j0:j1].ravel())
    n = mx * my
    return sparse.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def residual_floor(spec: WeightSpec, u, dx: float, dy: float) -> float:
    """Size of the rounding noise in :func:`discrete_residual` at ``u``."""
    _, p, q, *_ = _stencil_derivatives(u, dx, dy)
    w2 = float(np.max(1 + p * p + q * q))
    scale = float(np.max(np.abs(u))) * (1 / dx**2 + 1 / dy**2) + float(np.max(np.abs(spec.dphi(u))))
    return 16 * np.finfo(float).eps * scale * w2


def solve_graph_equation(
    spec: WeightSpec,
    grid: GraphPatch,
    boundary: BoundaryData,
    init=None,
    opts: SolverOptions | None = None,
    **overrides,
):
    """Solve the Dirichlet problem by Newton's method with Armijo backtracking.

    Parameters
    ----------
    spec : WeightSpec
    grid : GraphPatch
        Template supplying the rectangle and node counts; its values are unused.
    boundary : BoundaryData
        Dirichlet heights on the boundary ring of ``grid``.
    init : array, optional
        Initial heights (interior entries are used).  Defaults to the bilinear
        Coons blend of the boundary data.
    opts : SolverOptions
        ``tol`` applies to the max-norm of the interior residual; keyword
        overrides such as ``tol=1e-12`` are merged into ``opts``.

    Returns
    -------
    (GraphPatch, SolveReport)

    Raises
    ------
    NoConvergence
        Carries the best iterate and the report.
    DomainViolation
        If heights reach the weight domain endpoint even at the damping floor.
    """
    opts = opts or SolverOptions()
    if overrides:
        opts = SolverOptions(**{**opts.__dict__, **overrides})
    if boundary.shape != grid.shape:
        raise ValueError("boundary data and grid have different shapes")
    boundary.check(spec)
    start = time.perf_counter()
    dx, dy = grid.dx, grid.dy
    ring = ~interior_mask(grid.shape, 1)

    u = coons_blend(boundary, grid) if init is None else np.array(init, dtype=float, copy=True)
    if u.shape != grid.shape:
        raise ValueError("initial heights and grid have different shapes")
    u[ring] = boundary.values[ring]
    if np.any(u <= spec.a):
        raise DomainViolation("initial heights must exceed the weight domain endpoint")

    def target(v):
        return opts.tol if opts.tol is not None else max(1e-10, residual_floor(spec, v, dx, dy))

    R = discrete_residual(spec, u, dx, dy)
    rnorm = float(np.max(np.abs(R)))
    best = (rnorm, u.copy())
    report = SolveReport(0, rnorm, [], False, [rnorm], target(u))

    def finish(converged):
        report.final_residual_norm = best[0]
        report.converged = converged
        report.elapsed = time.perf_counter() - start
        return grid.with_values(best[1]), report

    for it in range(1, opts.max_iter + 1):
        report.tol = target(u)
        if rnorm <= report.tol:
            return finish(True)
        J = jacobian(spec, u, dx, dy)
        step = splinalg.spsolve(J, -R.ravel()).reshape(R.shape)
        if not np.all(np.isfinite(step)):
            patch, rep = finish(False)
            raise NoConvergence("singular Newton system", patch=patch, report=rep)
        merit = 0.5 * float(np.sum(R * R))
        t = 1.0
        while True:
            trial = u.copy()
            trial[1:-1, 1:-1] += t * step
            feasible = bool(np.all(trial > spec.a))
            if feasible:
                Rt = discrete_residual(spec, trial, dx, dy)
                mt = 0.5 * float(np.sum(Rt * Rt))
                if np.isfinite(mt) and mt <= (1 - 2 * opts.armijo * t) * merit:
                    break
            if t <= opts.damping_floor:
                if not feasible:
                    patch, rep = finish(False)
                    raise DomainViolation(f"iterate left the weight domain at damping floor (iteration {it})")
                if np.isfinite(mt) and mt < merit:
                    break  # floor step still decreases the residual
                patch, rep = finish(False)
                raise NoConvergence(f"line search stalled at iteration {it}", patch=patch, report=rep)
            t *= 0.5
        u, R = trial, Rt
        rnorm = float(np.max(np.abs(R)))
        report.iterations = it
        report.damping_history.append(t)
        report.residual_history.append(rnorm)
        if rnorm < best[0]:
            best = (rnorm, u.copy())
    report.tol = target(u)
    if rnorm <= report.tol:
        return finish(True)
    patch, rep = finish(False)
    raise NoConvergence(f"no convergence in {opts.max_iter} iterations (residual {rnorm:.3e})", patch=patch, report=rep)


def symmetry_defect(patch: GraphPatch) -> float:
    """``max |u(x1, x2) - u(-x1, x2)|`` for a grid symmetric about ``x1 = 0``."""
    if not math.isclose(patch.x_range[0], -patch.x_range[1], rel_tol=0, abs_tol=1e-14 * (1 + abs(patch.x_range[1]))):
        raise ValueError("grid is not symmetric about x1 = 0")
    return float(np.max(np.abs(patch.values - patch.values[::-1, :])))


# -- boundary data from catenary profiles --------------------------------------


def _profile_heights(profile: ProfileSolution, x, margin: float):
    lam = profile.lambda_estimate
    xmax = float(np.max(np.abs(x)))
    if math.isfinite(lam) and xmax > lam - margin * lam:
        raise SlabViolation(f"|x1| up to {xmax:.6g} exceeds the slab limit {(1 - margin) * lam:.6g}")
    if xmax > profile.x_end:
        raise SlabViolation(f"|x1| up to {xmax:.6g} lies beyond the computed profile (x <= {profile.x_end:.6g})")
    return np.asarray(profile.evaluate(np.abs(x))[0], dtype=float)


def _discrete_profile(spec: WeightSpec, x, left: float, right: float, init, max_iter=50):
    """Solve ``u'' = phi'(u) (1 + u'^2)`` with the same central differences on ``x``.

    Newton stops once the update is at the rounding level of ``u``.
    """
    dx = x[1] - x[0]
    u = np.array(init, dtype=float)
    u[0], u[-1] = left, right
    for _ in range(max_iter):
        p = (u[2:] - u[:-2]) / (2 * dx)
        upp = (u[2:] - 2 * u[1:-1] + u[:-2]) / dx**2
        c = u[1:-1]
        R = upp - spec.dphi(c) * (1 + p * p)
        Rp = -2 * p * spec.dphi(c)
        main = -2 / dx**2 - spec.ddphi(c) * (1 + p * p)
        up = 1 / dx**2 + Rp / (2 * dx)
        lo = 1 / dx**2 - Rp / (2 * dx)
        J = sparse.diags([lo[1:], main, up[:-1]], [-1, 0, 1], format="csc")
        step = splinalg.spsolve(J, -R)
        u[1:-1] += step
        if np.max(np.abs(step)) <= 8 * np.finfo(float).eps * np.max(np.abs(u)):
            return u
    raise NoConvergence("one-dimensional discrete profile did not converge")


def make_boundary_from_profile(
    profile: ProfileSolution,
    grid: GraphPatch,
    perturbation=None,
    margin: float = 0.05,
    discrete: bool = False,
) -> BoundaryData:
    """Dirichlet traces of the catenary cylinder ``x3 = u(x1)`` on ``grid``.

    Parameters
    ----------
    profile : ProfileSolution
        Half profile; it is mirrored to ``x1 < 0``.
    perturbation : (eps, M, L), optional
        Adds ``eps cos(pi x2 / M) (1 - (x1 / L)^2)`` to every boundary node.
    margin : float
        Required gap to the slab edge as a fraction of the half-width.
    discrete : bool
        Use the solution of the one-dimensional discrete equation on the grid's
        x nodes instead of the exact profile, so that the y-invariant discrete
        solution matches the data on the edges ``x2 = const`` exactly.

    Raises
    ------
    SlabViolation
    """
    x, y = grid.x, grid.y
    ux = _profile_heights(profile, x, margin)
    if discrete:
        ux = _discrete_profile(profile.spec, x, ux[0], ux[-1], ux)
    vals = np.repeat(ux[:, None], grid.ny, axis=1)
    if perturbation is not None:
        eps, M, L = perturbation
        X, Y = grid.mesh()
        vals = vals + eps * np.cos(math.pi * Y / M) * (1 - (X / L) ** 2)
    return BoundaryData(vals)


# -- uniqueness surrogate -------------------------------------------------------


@dataclass
class UniquenessReport:
    amplitudes: list
    y_variation: list
    max_eta2: list
    pairwise_agreement: float
    profile_error: float
    fitted_height: float
    hypotheses: dict
    hypotheses_hold: bool
    reports: list
    tol: float
    note: str = APPROXIMATION_NOTE

    @property
    def worst(self) -> float:
        return max(max(self.y_variation), max(self.max_eta2), self.pairwise_agreement)

    def passed(self, threshold: float) -> bool:
        return self.worst <= threshold

    def to_dict(self) -> dict:
        return {
            "amplitudes": list(self.amplitudes),
            "y_variation": list(self.y_variation),
            "max_eta2": list(self.max_eta2),
            "pairwise_agreement": self.pairwise_agreement,
            "profile_error": self.profile_error,
            "fitted_height": self.fitted_height,
            "hypotheses": self.hypotheses,
            "hypotheses_hold": self.hypotheses_hold,
            "solves": [r.to_dict() for r in self.reports],
            "tol": self.tol,
            "note": self.note,
        }


def uniqueness_experiment(
    spec: WeightSpec,
    h: float,
    n: int = 65,
    amplitudes=(0.0, 0.05, 0.2),
    half_length: float | None = None,
    y_range=(-1.0, 1.0),
    tol: float = 1e-11,
) -> UniquenessReport:
    """Solve with y-invariant data from several perturbed starts and compare.

    Each start is the Coons blend plus ``A sin(pi s) sin(pi t) (1 + t)`` in
    normalised coordinates ``s, t``, which is not y-invariant.  The boundary
    traces come from the one-dimensional discrete profile so that a
    y-invariant discrete solution exists exactly.  ``tol`` is raised to the
    rounding floor of the residual at that solution when it lies below it.
    """
    hyp = check_hypotheses(spec, reference_height=h)
    if not hyp.uniqueness_hypotheses:
        warnings.warn("weight does not satisfy the uniqueness hypotheses; running anyway", HypothesisWarning, stacklevel=2)
    profile = integrate_profile(spec, h)
    lam = profile.lambda_estimate
    if half_length is None:
        half_length = 0.75 * lam if math.isfinite(lam) else min(2.0, 0.9 * profile.x_end)
    grid = GraphPatch((-half_length, half_length), tuple(y_range), np.zeros((n, n)))
    boundary = make_boundary_from_profile(profile, grid, discrete=True)
    base = coons_blend(boundary, grid)
    tol = max(tol, residual_floor(spec, boundary.values, grid.dx, grid.dy))
    X, Y = grid.mesh()
    s = (X - grid.x_range[0]) / (grid.x_range[1] - grid.x_range[0])
    t = (Y - grid.y_range[0]) / (grid.y_range[1] - grid.y_range[0])
    bump = np.sin(np.pi * s) * np.sin(np.pi * t) * (1 + t)

    solutions, reports, yvar, eta2 = [], [], [], []
    for amp in amplitudes:
        patch, rep = solve_graph_equation(spec, grid, boundary, init=base + amp * bump, tol=tol)
        solutions.append(patch.values)
        reports.append(rep)
        yvar.append(float(np.max(np.ptp(patch.values, axis=1))))
        eta2.append(float(np.max(np.abs(surface_fields(patch).eta[..., 1]))))
    agree = max((float(np.max(np.abs(a - b))) for i, a in enumerate(solutions) for b in solutions[i + 1 :]), default=0.0)
    exact = _profile_heights(profile, grid.x, 0.0)
    centre = solutions[0][:, n // 2]
    return UniquenessReport(
        amplitudes=list(amplitudes),
        y_variation=yvar,
        max_eta2=eta2,
        pairwise_agreement=agree,
        profile_error=float(np.max(np.abs(centre - exact))),
        fitted_height=float(np.min(centre)),
        hypotheses=hyp.to_dict(),
        hypotheses_hold=hyp.uniqueness_hypotheses,
        reports=reports,
        tol=tol,
    )
