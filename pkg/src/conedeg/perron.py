"""Dirichlet solving by monotone crossing sweeps between a sub/super pair.

The solver realizes the infimum-over-supersolutions construction on a grid:
starting from the upper field, every sweep moves each interior node to the
center value at which the discrete operator matrix crosses the cone boundary,
clamped into the sandwich.  Raising the center value lowers the discrete
Hessian, so the crossing is monotone and each descending sweep maps a discrete
supersolution to a smaller one.  An ascending variant starts from the lower
field.

Supported cones: the trace-positive cone (margin affine in the center value,
crossing in closed form) and the positive-definite cone / its full k = n
elementary-symmetric equivalent (smallest-eigenvalue margin; closed form in
1D, radial, and 2D).  `pointwise_root` realizes the same crossing for any
cone by bisection; the sweep engine uses the closed forms, which agree with
the bisection limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .envelopes import GridFn
from .matcone import ConeSpec, SymMatrix, cone_margin, eigen_sym
from .operators import Jet2, OperatorSpec, eval_F, eval_L
from .viscosity import GridVerifyReport, grid_verify

try:  # optional compiled sweep kernel; the numpy path is the reference
    import numba as _numba
except Exception:  # pragma: no cover - exercised only where numba is absent
    _numba = None

__all__ = [
    "SolverConfig",
    "DirichletProblem",
    "PerronResult",
    "pointwise_root",
    "perron_solve",
    "UniquenessReport",
    "uniqueness_experiment",
    "TranslationBoundReport",
    "translation_gradient_bound",
    "solution_csv",
    "radial_sandwich_problem",
    "box_sandwich_problem",
]

_SWEEP_ORDERS = ("red_black", "lexicographic")

# nodewise monotonicity is recorded against this absolute slack
_MONOTONE_SLACK = 1e-11


@dataclass(frozen=True)
class SolverConfig:
    """Sweep-loop knobs.

    tol is a margin tolerance: the loop stops once the sweep's largest
    crossing move, scaled by the center-value slope of the margin, drops
    below it, so converged means every interior node classifies BOUNDARY
    within roughly tol.  bisection_depth governs pointwise_root; the sweep
    engine's closed-form crossings realize that limit exactly.
    """

    tol: float = 1e-8
    max_sweeps: int = 50_000
    sweep_order: str = "red_black"
    bisection_depth: int = 60

    def __post_init__(self) -> None:
        if not (self.tol > 0.0 and math.isfinite(self.tol)):
            raise ValueError("tol must be positive and finite")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.sweep_order not in _SWEEP_ORDERS:
            raise ValueError(f"sweep_order must be one of {_SWEEP_ORDERS}")
        if not (4 <= self.bisection_depth <= 200):
            raise ValueError("bisection_depth must lie in [4, 200]")


def _node_roles(finite: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split finite nodes into interior and boundary (edge or mask-adjacent)."""
    boundary = np.zeros_like(finite)
    for ax in range(finite.ndim):
        sl = [slice(None)] * finite.ndim
        sl[ax] = 0
        boundary[tuple(sl)] = True
        sl[ax] = -1
        boundary[tuple(sl)] = True
        lo = [slice(None)] * finite.ndim
        hi = [slice(None)] * finite.ndim
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        # finite node next to a masked one acts as Dirichlet data
        boundary[tuple(lo)] |= ~finite[tuple(hi)]
        boundary[tuple(hi)] |= ~finite[tuple(lo)]
    boundary &= finite
    interior = finite & ~boundary
    return interior, boundary


@dataclass(frozen=True)
class DirichletProblem:
    """Sandwiched boundary-value data: lower field, upper field, operator, cone.

    The two fields must share the grid, carry the same mask, be ordered
    lower <= upper, and agree on boundary nodes (grid edge or mask-adjacent);
    that shared trace is the Dirichlet data.  No solution signature of the
    fields themselves is verified here: run grid_verify to certify a sandwich.
    """

    F: OperatorSpec
    U: ConeSpec
    sub: GridFn
    sup: GridFn
    ambient_n: int | None = None

    def __post_init__(self) -> None:
        if self.sub.box != self.sup.box or self.sub.shape != self.sup.shape:
            raise ValueError("sub and sup must share box and shape")
        fin_lo = np.isfinite(self.sub.values)
        fin_hi = np.isfinite(self.sup.values)
        if not np.array_equal(fin_lo, fin_hi):
            raise ValueError("sub and sup must mask the same nodes")
        if np.any(self.sub.values[fin_lo] > self.sup.values[fin_lo] + 1e-12):
            raise ValueError("need sub <= sup on every unmasked node")
        interior, boundary = _node_roles(fin_lo)
        if not interior.any():
            raise ValueError("the domain has no interior nodes")
        gap = np.abs(self.sub.values[boundary] - self.sup.values[boundary])
        if gap.size and gap.max() > 1e-9:
            raise ValueError("sub and sup must agree on boundary nodes")
        dim = self.sub.dim
        if self.ambient_n is not None:
            if dim == 2 and self.ambient_n != 2:
                raise ValueError("2D grids are ambient: ambient_n must be 2 or omitted")
            if dim == 1 and self.ambient_n >= 2 and self.sub.box[0][0] <= 0.0:
                raise ValueError("radial grids need strictly positive radii")
            if self.ambient_n < 1:
                raise ValueError("ambient_n must be a positive dimension")
        amb = self.matrix_dim
        if self.U.n and self.U.n != amb:
            raise ValueError(f"cone expects dimension {self.U.n}, problem has {amb}")
        object.__setattr__(self, "_interior", interior)
        object.__setattr__(self, "_boundary", boundary)

    @property
    def matrix_dim(self) -> int:
        if self.sub.dim == 2:
            return 2
        return self.ambient_n if self.ambient_n is not None else 1

    @property
    def interior_mask(self) -> np.ndarray:
        return self._interior

    @property
    def boundary_mask(self) -> np.ndarray:
        return self._boundary

    @property
    def boundary_values(self) -> np.ndarray:
        return self.sup.values[self._boundary]


# ---------------------------------------------------------------------------
# the scalar crossing


def _stencil_jet(
    center: float,
    neighbors: tuple[tuple[float, float], ...],
    x: np.ndarray,
    spacing: tuple[float, ...],
    mixed: float,
    ambient_n: int | None,
    s: float,
) -> Jet2:
    if len(neighbors) == 1:
        (lo, hi), = neighbors
        h = spacing[0]
        d = (hi - lo) / (2.0 * h)
        dd = (lo + hi - 2.0 * center) / (h * h)
        if ambient_n is None or ambient_n == 1:
            return Jet2(x[:1], s, np.array([d]), SymMatrix.from_dense(np.array([[dd]])))
        r = float(x[0])
        if r <= 0.0:
            raise ValueError("radial stencils need a positive radius")
        pos = np.zeros(ambient_n)
        pos[0] = r
        p = np.zeros(ambient_n)
        p[0] = d
        diag = np.full(ambient_n, d / r)
        diag[0] = dd
        return Jet2(pos, s, p, SymMatrix.from_dense(np.diag(diag)))
    (w, e), (so, no) = neighbors
    hx, hy = spacing
    p = np.array([(e - w) / (2.0 * hx), (no - so) / (2.0 * hy)])
    H = np.array(
        [
            [(w + e - 2.0 * center) / (hx * hx), mixed],
            [mixed, (so + no - 2.0 * center) / (hy * hy)],
        ]
    )
    return Jet2(x[:2], s, p, SymMatrix.from_dense(H))


def pointwise_root(
    neighbors,
    F: OperatorSpec,
    U: ConeSpec,
    bracket: tuple[float, float],
    *,
    x=None,
    spacing=1.0,
    mixed: float = 0.0,
    ambient_n: int | None = None,
    s_init: float | None = None,
    depth: int = 60,
    tol: float = 1e-9,
) -> float:
    """Center value at which the discrete operator crosses the cone boundary.

    neighbors: (lo, hi) for one axis, or a pair of such pairs for a 2D
    stencil (mixed carries the cross second difference, which does not
    involve the center).  The bracket endpoints must classify on opposite
    sides of the cone; raising the center lowers the discrete Hessian, so
    the crossing is unique and bisection to `depth` finds it.  For operators
    whose lower-order term depends on the field value, the value argument is
    frozen, re-frozen after two fixed-point passes, then bisected once more.
    """
    nb = tuple(neighbors)
    if len(nb) == 2 and np.isscalar(nb[0]):
        nb = (tuple(float(v) for v in nb),)
    else:
        nb = tuple((float(a), float(b)) for a, b in nb)
    if len(nb) not in (1, 2):
        raise ValueError("neighbors must cover one or two axes")
    if len(nb) == 2 and ambient_n not in (None, 2):
        raise ValueError("2D stencils are ambient: ambient_n must be 2 or omitted")
    sp = (float(spacing),) * len(nb) if np.isscalar(spacing) else tuple(float(h) for h in spacing)
    if len(sp) != len(nb) or any(h <= 0 for h in sp):
        raise ValueError("spacing must give one positive step per axis")
    pos = np.zeros(2) if x is None else np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")

    def margin(c: float, s: float) -> float:
        j = _stencil_jet(c, nb, pos, sp, mixed, ambient_n, s)
        return cone_margin(eigen_sym(eval_F(j, F)), U)

    def bisect(s: float) -> float:
        m_lo = margin(lo, s)
        m_hi = margin(hi, s)
        if m_lo < -tol or m_hi > tol:
            raise ValueError(
                "bracket endpoints must straddle the cone boundary "
                f"(margins {m_lo:.3g} and {m_hi:.3g})"
            )
        a, b = lo, hi
        for _ in range(depth):
            mid = 0.5 * (a + b)
            if margin(mid, s) >= 0.0:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    if F.kind in ("quad_var", "general_l"):
        s = 0.5 * (lo + hi) if s_init is None else float(s_init)
        for _ in range(2):
            s = bisect(s)
        return bisect(s)
    return bisect(0.0)


# ---------------------------------------------------------------------------
# vectorized crossing sweeps

_QUAD_KINDS = ("conformal", "quad_const")


def _quad_coeffs(F: OperatorSpec) -> tuple[float, float]:
    if F.kind == "conformal":
        return 1.0, 0.5
    return F.alpha, F.beta


def _crossing_mode(U: ConeSpec, amb: int) -> str:
    if U.kind == "trace" or (U.kind == "gamma_k" and U.k == 1):
        return "trace"
    if U.kind == "posdef" or (U.kind == "gamma_k" and U.k == amb):
        return "mineig"
    raise ValueError(
        "the sweep solver supports the trace cone (k = 1) and the positive "
        f"cone (k = n), not {U.kind!r} with k={U.k}"
    )


class _Stencils:
    """Precomputed gather indices and coordinates for one sweep group."""

    def __init__(self, problem: DirichletProblem, idx: np.ndarray):
        g = problem.sub
        self.idx = idx
        shape = g.shape
        self.h = g.h
        if g.dim == 1:
            self.left = idx - 1
            self.right = idx + 1
            xs = g.axis_nodes(0)
            self.r = xs[idx]
            self.coords = xs[idx][:, None]
        else:
            s0 = shape[1]
            self.west = idx - s0
            self.east = idx + s0
            self.south = idx - 1
            self.north = idx + 1
            self.ne = idx + s0 + 1
            self.nw = idx - s0 + 1
            self.se = idx + s0 - 1
            self.sw = idx - s0 - 1
            self.coords = g.node_coords()[idx]


def _l_diag_loop(
    F: OperatorSpec,
    coords: np.ndarray,
    s: np.ndarray,
    p_cols: list[np.ndarray],
    amb: int,
) -> np.ndarray:
    """Dense lower-order matrices nodewise, shape (m, amb, amb)."""
    m = len(s)
    out = np.empty((m, amb, amb))
    p = np.zeros(amb)
    for i in range(m):
        p[: len(p_cols)] = [col[i] for col in p_cols]
        x = np.zeros(amb)
        x[: coords.shape[1]] = coords[i]
        out[i] = eval_L(F, x, float(s[i]), p)
    return out


def _sweep_group(
    u: np.ndarray,
    st: _Stencils,
    problem: DirichletProblem,
    mode: str,
) -> np.ndarray:
    """Crossing values for one group of nodes given the current field u."""
    F = problem.F
    amb = problem.matrix_dim
    dim = problem.sub.dim
    idx = st.idx
    if dim == 1:
        h = st.h[0]
        left = u[st.left]
        right = u[st.right]
        p = (right - left) * (0.5 / h)
        half_h2 = 0.5 * h * h
        radial = amb >= 2
        if F.kind in _QUAD_KINDS:
            alpha, beta = _quad_coeffs(F)
            p2 = p * p
            if mode == "trace":
                tr_l = (alpha - amb * beta) * p2
                extra = (amb - 1.0) * (p / st.r) if radial else 0.0
                return 0.5 * (left + right) + half_h2 * (extra + tr_l)
            # smallest eigenvalue: the first diagonal entry carries the
            # center; the remaining (radial) entries do not
            l00 = (alpha - beta) * p2
            c_e0 = 0.5 * (left + right) + half_h2 * l00
            if not radial:
                return c_e0
            rest = p / st.r - beta * p2
            return np.where(rest >= 0.0, c_e0, -np.inf)
        # callable coefficients: loop with the value argument fixed pointwise
        s_vec = u[idx].copy()
        for _ in range(3):
            L = _l_diag_loop(F, st.coords, s_vec, [p], amb)
            if mode == "trace":
                tr_l = np.trace(L, axis1=1, axis2=2)
                extra = (amb - 1.0) * (p / st.r) if radial else 0.0
                c = 0.5 * (left + right) + half_h2 * (extra + tr_l)
            else:
                if radial and F.kind == "general_l":
                    raise ValueError(
                        "eigenvalue cones with a general lower-order term "
                        "are not supported on radial grids"
                    )
                c_e0 = 0.5 * (left + right) + half_h2 * L[:, 0, 0]
                if radial:
                    rest = p / st.r + np.min(np.diagonal(L, axis1=1, axis2=2)[:, 1:], axis=1)
                    c = np.where(rest >= 0.0, c_e0, -np.inf)
                else:
                    c = c_e0
            if F.kind not in ("quad_var", "general_l"):
                return c
            s_vec = c
        return c
    # 2D
    hx, hy = st.h
    west, east = u[st.west], u[st.east]
    south, north = u[st.south], u[st.north]
    p0 = (east - west) * (0.5 / hx)
    p1 = (north - south) * (0.5 / hy)
    sx = 2.0 / (hx * hx)
    sy = 2.0 / (hy * hy)
    t0 = (west + east) / (hx * hx) + (south + north) / (hy * hy)
    if F.kind in _QUAD_KINDS:
        alpha, beta = _quad_coeffs(F)
        p2 = p0 * p0 + p1 * p1
        if mode == "trace":
            return (t0 + (alpha - 2.0 * beta) * p2) / (sx + sy)
        mixed = (u[st.ne] + u[st.sw] - u[st.nw] - u[st.se]) * (0.25 / (hx * hy))
        a0 = (west + east) / (hx * hx) + alpha * p0 * p0 - beta * p2
        d0 = (south + north) / (hy * hy) + alpha * p1 * p1 - beta * p2
        b = mixed + alpha * p0 * p1
        return _mineig_crossing_2d(a0, d0, b, sx, sy)
    s_vec = u[idx].copy()
    for _ in range(3):
        L = _l_diag_loop(F, st.coords, s_vec, [p0, p1], 2)
        if mode == "trace":
            c = (t0 + L[:, 0, 0] + L[:, 1, 1]) / (sx + sy)
        else:
            mixed = (u[st.ne] + u[st.sw] - u[st.nw] - u[st.se]) * (0.25 / (hx * hy))
            a0 = (west + east) / (hx * hx) + L[:, 0, 0]
            d0 = (south + north) / (hy * hy) + L[:, 1, 1]
            b = mixed + L[:, 0, 1]
            c = _mineig_crossing_2d(a0, d0, b, sx, sy)
        if F.kind not in ("quad_var", "general_l"):
            return c
        s_vec = c
    return c


def _mineig_crossing_2d(a0, d0, b, sx: float, sy: float) -> np.ndarray:
    """Root of lambda_min([[a0 - sx c, b], [b, d0 - sy c]]) in c.

    Both eigenvalues decrease strictly in c, so the smaller one crosses zero
    first: the smaller root of the determinant quadratic.
    """
    A = sx * sy
    B = a0 * sy + d0 * sx
    C = a0 * d0 - b * b
    disc = np.maximum(B * B - 4.0 * A * C, 0.0)
    return (B - np.sqrt(disc)) / (2.0 * A)


def _margin_slope(problem: DirichletProblem) -> float:
    """Upper bound on |d margin / d center|, the residual scale of one move."""
    return 2.0 * sum(1.0 / (h * h) for h in problem.sub.h)


def _make_groups(problem: DirichletProblem, order: str) -> list[_Stencils]:
    interior = problem.interior_mask
    flat = np.flatnonzero(interior.ravel())
    if order == "lexicographic":
        return [_Stencils(problem, np.array([i])) for i in flat]
    coords = np.array(np.unravel_index(flat, interior.shape))
    parity = coords.sum(axis=0) % 2
    groups = []
    for par in (1, 0):
        sel = flat[parity == par]
        if sel.size:
            groups.append(_Stencils(problem, sel))
    return groups


def _numba_kernel():
    if _numba is None:
        return None
    global _TRACE_KERNEL
    try:
        return _TRACE_KERNEL
    except NameError:
        pass

    @_numba.njit(cache=True)
    def kernel(u, sub, sup, rinv, inv2h, half_h2, am1, alpha_eff, scoef, tol, max_sweeps, ascending):
        n = u.shape[0]
        monotone = True
        sweeps = 0
        upd = 0.0
        converged = False
        while sweeps < max_sweeps:
            upd = 0.0
            for start in (1, 2):
                for i in range(start, n - 1, 2):
                    left = u[i - 1]
                    right = u[i + 1]
                    p = (right - left) * inv2h
                    c = 0.5 * (left + right) + half_h2 * (am1 * (p * rinv[i]) + alpha_eff * (p * p))
                    if c < sub[i]:
                        c = sub[i]
                    elif c > sup[i]:
                        c = sup[i]
                    d = c - u[i]
                    if ascending:
                        if d < -_MONOTONE_SLACK:
                            monotone = False
                    elif d > _MONOTONE_SLACK:
                        monotone = False
                    ad = -d if d < 0.0 else d
                    if ad > upd:
                        upd = ad
                    u[i] = c
            sweeps += 1
            if upd * scoef <= tol:
                converged = True
                break
        return sweeps, converged, monotone, upd

    _TRACE_KERNEL = kernel
    return kernel


def _fast_path_applies(problem: DirichletProblem, cfg: SolverConfig, mode: str) -> bool:
    return (
        _numba is not None
        and cfg.sweep_order == "red_black"
        and problem.sub.dim == 1
        and mode == "trace"
        and problem.F.kind in _QUAD_KINDS
        and bool(np.isfinite(problem.sub.values).all())
    )


@dataclass(frozen=True)
class PerronResult:
    """One sweep run: the final field plus convergence bookkeeping."""

    u: GridFn
    sweeps: int
    converged: bool
    direction: str
    monotone_ok: bool
    sandwich_ok: bool
    last_update: float
    residual: GridVerifyReport

    @property
    def solved(self) -> bool:
        return self.converged and self.residual.consistent_solution


def perron_solve(
    problem: DirichletProblem,
    cfg: SolverConfig,
    *,
    direction: str = "descending",
    start: GridFn | None = None,
) -> PerronResult:
    """Monotone crossing sweeps from the upper field (or lower, ascending).

    Each sweep replaces every interior node by the cone-boundary crossing of
    its discrete jet, clamped into [sub, sup].  Stops once the largest move,
    scaled by the margin slope, falls below cfg.tol; the residual report then
    re-classifies every interior node with the same centered stencils.
    """
    if direction not in ("descending", "ascending"):
        raise ValueError("direction must be 'descending' or 'ascending'")
    amb = problem.matrix_dim
    mode = _crossing_mode(problem.U, amb)
    if start is None:
        base = problem.sup if direction == "descending" else problem.sub
        u = base.values.copy()
    else:
        if start.box != problem.sub.box or start.shape != problem.sub.shape:
            raise ValueError("start must share the problem grid")
        fin = np.isfinite(problem.sub.values)
        vals = start.values
        if not np.array_equal(np.isfinite(vals), fin):
            raise ValueError("start must mask the same nodes as the sandwich")
        below = vals[fin] < problem.sub.values[fin] - 1e-12
        above = vals[fin] > problem.sup.values[fin] + 1e-12
        if below.any() or above.any():
            raise ValueError("start must lie inside the sandwich")
        u = np.clip(vals, problem.sub.values, problem.sup.values)

    flat = u.ravel()
    sub_flat = problem.sub.values.ravel()
    sup_flat = problem.sup.values.ravel()
    scoef = _margin_slope(problem)
    ascending = direction == "ascending"

    if _fast_path_applies(problem, cfg, mode):
        kernel = _numba_kernel()
        h = problem.sub.h[0]
        alpha, beta = _quad_coeffs(problem.F)
        if problem.ambient_n is not None and problem.ambient_n >= 2:
            rinv = 1.0 / problem.sub.axis_nodes(0)
            am1 = float(amb - 1)
        else:
            rinv = np.zeros(problem.sub.shape[0])
            am1 = 0.0
        sweeps, converged, monotone, last = kernel(
            flat, sub_flat, sup_flat, rinv, 0.5 / h, 0.5 * h * h, am1,
            alpha - amb * beta, scoef, cfg.tol, cfg.max_sweeps, ascending,
        )
        sweeps = int(sweeps)
        converged = bool(converged)
        monotone = bool(monotone)
        last = float(last)
    else:
        groups = _make_groups(problem, cfg.sweep_order)
        monotone = True
        converged = False
        last = math.inf
        sweeps = 0
        while sweeps < cfg.max_sweeps:
            upd = 0.0
            for st in groups:
                c = _sweep_group(flat, st, problem, mode)
                c = np.clip(c, sub_flat[st.idx], sup_flat[st.idx])
                diff = c - flat[st.idx]
                if ascending:
                    if diff.min(initial=0.0) < -_MONOTONE_SLACK:
                        monotone = False
                elif diff.max(initial=0.0) > _MONOTONE_SLACK:
                    monotone = False
                upd = max(upd, float(np.abs(diff).max(initial=0.0)))
                flat[st.idx] = c
            sweeps += 1
            last = upd
            if upd * scoef <= cfg.tol:
                converged = True
                break

    fin = np.isfinite(problem.sub.values)
    sandwich = bool(
        np.all(u[fin] >= problem.sub.values[fin] - 1e-12)
        and np.all(u[fin] <= problem.sup.values[fin] + 1e-12)
    )
    out = GridFn(problem.sub.box, u)
    residual = grid_verify(
        out, problem.F, problem.U, tol=cfg.tol, ambient_n=problem.ambient_n
    )
    return PerronResult(
        u=out,
        sweeps=sweeps,
        converged=converged,
        direction=direction,
        monotone_ok=monotone,
        sandwich_ok=sandwich,
        last_update=last,
        residual=residual,
    )


# ---------------------------------------------------------------------------
# experiments on top of the solver


@dataclass(frozen=True)
class UniquenessReport:
    """Sup-distance between solver runs started from different fields."""

    verdict: str  # pass | fail | inconclusive
    max_distance: float
    tol: float
    runs: tuple[PerronResult, ...]

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def uniqueness_experiment(
    problem: DirichletProblem,
    cfg: SolverConfig,
    inits: Sequence[GridFn] = (),
) -> UniquenessReport:
    """Descend from the top, ascend from the bottom, descend from each init.

    All converged runs should land on the same field; the report carries the
    maximum pairwise sup-distance and passes at 10 * cfg.tol.  Any run that
    exhausts max_sweeps makes the experiment inconclusive.
    """
    runs = [
        perron_solve(problem, cfg, direction="descending"),
        perron_solve(problem, cfg, direction="ascending"),
    ]
    for init in inits:
        runs.append(perron_solve(problem, cfg, direction="descending", start=init))
    fin = np.isfinite(problem.sub.values)
    if not all(r.converged for r in runs):
        return UniquenessReport("inconclusive", math.nan, cfg.tol, tuple(runs))
    dist = 0.0
    for i in range(len(runs)):
        for j in range(i + 1, len(runs)):
            d = float(np.abs(runs[i].u.values[fin] - runs[j].u.values[fin]).max())
            dist = max(dist, d)
    verdict = "pass" if dist <= 10.0 * cfg.tol else "fail"
    return UniquenessReport(verdict, dist, cfg.tol, tuple(runs))


@dataclass(frozen=True)
class TranslationBoundReport:
    """Interior gradient bound against a near-boundary band."""

    interior_max: float
    band_max: float
    spacing: float
    slack: float

    @property
    def ok(self) -> bool:
        return self.interior_max <= self.band_max + self.slack


def translation_gradient_bound(
    psi: GridFn, band: np.ndarray, *, slack_coef: float = 1.0
) -> TranslationBoundReport:
    """Check max interior |grad| <= max over the band, with O(h) slack.

    band marks the near-boundary nodes expected to carry the largest
    gradient; it must intersect the interior, since gradients are formed
    from centered differences at interior nodes only.
    """
    band = np.asarray(band, dtype=bool)
    if band.shape != psi.shape:
        raise ValueError("band mask must match the grid shape")
    fin = np.isfinite(psi.values)
    interior, _ = _node_roles(fin)
    if not (band & interior).any():
        raise ValueError("band does not intersect the interior")
    grad2 = np.zeros(psi.shape)
    ok_nodes = interior.copy()
    for ax in range(psi.dim):
        h = psi.h[ax]
        fwd = np.roll(psi.values, -1, axis=ax)
        bwd = np.roll(psi.values, 1, axis=ax)
        d = (fwd - bwd) / (2.0 * h)
        good = np.isfinite(fwd) & np.isfinite(bwd)
        grad2 = grad2 + np.where(good, d, 0.0) ** 2
        ok_nodes &= good
    mag = np.sqrt(grad2)
    interior_max = float(mag[ok_nodes].max())
    band_max = float(mag[ok_nodes & band].max())
    hmax = max(psi.h)
    return TranslationBoundReport(interior_max, band_max, hmax, slack_coef * hmax)


def solution_csv(result: PerronResult, problem: DirichletProblem) -> str:
    """Rows `node,x[,y],u,residual_class` over every grid node."""
    classes = {row.node_index: row.cls.name for row in result.residual.rows}
    interior = problem.interior_mask.ravel()
    boundary = problem.boundary_mask.ravel()
    coords = problem.sub.node_coords()
    vals = result.u.values.ravel()
    head = "node,x,u,residual_class" if problem.sub.dim == 1 else "node,x,y,u,residual_class"
    lines = [head]
    for i in range(vals.size):
        if interior[i]:
            cls = classes.get(i, "SKIPPED")
        elif boundary[i]:
            cls = "FIXED"
        else:
            cls = "MASKED"
        xy = ",".join(f"{c:.12g}" for c in coords[i])
        lines.append(f"{i},{xy},{vals[i]:.12g},{cls}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# reference problems with known exact solutions


def radial_sandwich_problem(
    npts: int,
    *,
    n: int = 3,
    mu: float = 1.0,
    width: float = 0.25,
    inner: float = 0.5,
    outer: float = 1.0,
) -> tuple[DirichletProblem, np.ndarray]:
    """Radial annulus with the singular-log solution and a quadratic sandwich.

    The exact field ln(r^(2-n) + mu) solves the trace equation of the
    gradient-square operator; adding +-width*(r - inner)*(outer - r) gives a
    strict super/subsolution pair agreeing with it on the rim (for width <= 1
    on the default annulus; certify with grid_verify when changing shape).
    Returns the problem and the exact nodal values.
    """
    if not (0.0 < inner < outer):
        raise ValueError("need 0 < inner < outer")
    rs = np.linspace(inner, outer, npts)
    exact = np.log(rs ** (2.0 - n) + mu)
    bump = width * (rs - inner) * (outer - rs)
    problem = DirichletProblem(
        F=OperatorSpec.quad_const(1.0, 0.0),
        U=ConeSpec("trace"),
        sub=GridFn(((inner, outer),), exact - bump),
        sup=GridFn(((inner, outer),), exact + bump),
        ambient_n=n,
    )
    return problem, exact


def box_sandwich_problem(
    npts: int,
    *,
    scale: float = 2.0,
    lo: float = 0.55,
    hi: float = 0.95,
) -> tuple[DirichletProblem, np.ndarray]:
    """2D box with the exact field ln(1 - ln r) and a product-bump sandwich.

    exp of the field is log-harmonic, so the trace equation of the
    gradient-square operator holds exactly; the bump vanishes on the box
    edge and keeps the sandwich strict inside.
    """
    xs = np.linspace(lo, hi, npts)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    R = np.hypot(X, Y)
    exact = np.log(1.0 - np.log(R))
    bump = scale * (X - lo) * (hi - X) * (Y - lo) * (hi - Y)
    box = ((lo, hi), (lo, hi))
    problem = DirichletProblem(
        F=OperatorSpec.quad_const(1.0, 0.0),
        U=ConeSpec.gamma(1),
        sub=GridFn(box, exact - bump),
        sup=GridFn(box, exact + bump),
        ambient_n=2,
    )
    return problem, exact
