"""Second-order jets, conformal Hessian operators, Kelvin transforms, and
numeric probes of the structural conditions on the lower-order term L.

Operators act on jets (x, s, p, H) and return symmetric matrices; the
equation under study is F[psi] in dU where F[psi] = Hess psi + L(x, psi,
grad psi).  Three conformally equivalent writings of the same operator are
implemented (in terms of u > 0, of w = u^{-2/(n-2)}, and of psi =
-(2/(n-2)) ln u) together with a consistency check that they agree after
the e^{2 psi} change of gauge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .matcone import SymMatrix, eigen_sym

__all__ = [
    "Jet2",
    "OperatorSpec",
    "FieldOracle",
    "conformal_hessian_u",
    "conformal_A_w",
    "conformal_A_psi",
    "u_to_psi_jet",
    "u_to_w_jet",
    "eval_F",
    "eval_L",
    "consistency_check",
    "kelvin",
    "kelvin_transform",
    "moving_sphere_radius",
    "probe_L_conditions",
    "parse_operator",
    "format_operator",
]


@dataclass(frozen=True)
class Jet2:
    """Second-order jet: point, value, gradient, Hessian."""

    x: np.ndarray
    s: float
    p: np.ndarray
    H: SymMatrix

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if x.shape != p.shape or x.ndim != 1:
            raise ValueError("x and p must be vectors of equal length")
        if self.H.n != len(x):
            raise ValueError(f"Hessian dimension {self.H.n} != point dimension {len(x)}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "s", float(self.s))

    @property
    def n(self) -> int:
        return len(self.x)


# ---------------------------------------------------------------------------
# operator specifications


@dataclass(frozen=True)
class OperatorSpec:
    """F[psi] = Hess psi + L(x, psi, grad psi), by kind.

    kind       | L(x, s, p)
    -----------|------------------------------------------------------
    conformal  | p (x) p - (1/2)|p|^2 I
    quad_const | alpha p (x) p - beta |p|^2 I, alpha/beta constants
    quad_var   | alpha(x,s) p (x) p - beta(x,s) |p|^2 I
    rot_inv    | a(|p|) p (x) p + b(|p|) I
    general_l  | arbitrary callable (x, s, p) -> symmetric matrix
    """

    kind: str
    alpha: float = 0.0
    beta: float = 0.0
    alpha_fn: Callable[[np.ndarray, float], float] | None = None
    beta_fn: Callable[[np.ndarray, float], float] | None = None
    a_fn: Callable[[float], float] | None = None
    b_fn: Callable[[float], float] | None = None
    L_fn: Callable[[np.ndarray, float, np.ndarray], np.ndarray] | None = None
    m: float = 2.0
    name: str = ""

    _KINDS = ("conformal", "quad_const", "quad_var", "rot_inv", "general_l")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.kind == "quad_var" and (self.alpha_fn is None or self.beta_fn is None):
            raise ValueError("quad_var needs alpha_fn and beta_fn")
        if self.kind == "rot_inv" and (self.a_fn is None or self.b_fn is None):
            raise ValueError("rot_inv needs a_fn and b_fn")
        if self.kind == "general_l" and self.L_fn is None:
            raise ValueError("general_l needs L_fn")

    @classmethod
    def conformal(cls) -> "OperatorSpec":
        return cls("conformal")

    @classmethod
    def quad_const(cls, alpha: float, beta: float) -> "OperatorSpec":
        return cls("quad_const", alpha=float(alpha), beta=float(beta))

    @classmethod
    def quad_var(cls, alpha_fn, beta_fn, m: float = 2.0, name: str = "") -> "OperatorSpec":
        return cls("quad_var", alpha_fn=alpha_fn, beta_fn=beta_fn, m=m, name=name)

    @classmethod
    def rot_inv(cls, a_fn, b_fn, name: str = "") -> "OperatorSpec":
        return cls("rot_inv", a_fn=a_fn, b_fn=b_fn, name=name)

    @classmethod
    def general_l(cls, L_fn, m: float, name: str = "") -> "OperatorSpec":
        return cls("general_l", L_fn=L_fn, m=m, name=name)


def eval_L(spec: OperatorSpec, x: np.ndarray, s: float, p: np.ndarray) -> np.ndarray:
    """The lower-order term L(x, s, p) as a dense symmetric matrix."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    n = len(p)
    pp = np.outer(p, p)
    p2 = float(p @ p)
    if spec.kind == "conformal":
        return pp - 0.5 * p2 * np.eye(n)
    if spec.kind == "quad_const":
        return spec.alpha * pp - spec.beta * p2 * np.eye(n)
    if spec.kind == "quad_var":
        return spec.alpha_fn(x, s) * pp - spec.beta_fn(x, s) * p2 * np.eye(n)
    if spec.kind == "rot_inv":
        t = math.sqrt(p2)
        return spec.a_fn(t) * pp + spec.b_fn(t) * np.eye(n)
    if spec.kind == "general_l":
        out = np.asarray(spec.L_fn(x, s, p), dtype=float)
        if out.shape != (n, n):
            raise ValueError(f"L_fn returned shape {out.shape}, expected ({n}, {n})")
        return 0.5 * (out + out.T)
    raise AssertionError(spec.kind)


def eval_F(j: Jet2, spec: OperatorSpec) -> SymMatrix:
    """F[psi] = Hess + L at the jet."""
    return SymMatrix.from_dense(j.H.dense() + eval_L(spec, j.x, j.s, j.p))


# ---------------------------------------------------------------------------
# the three conformal writings


def conformal_hessian_u(j: Jet2, n: int) -> SymMatrix:
    """Conformal Hessian of a positive field u, in the u-variables.

    A^u = -(2/(n-2)) u^{-(n+2)/(n-2)} Hess u
          + (2n/(n-2)^2) u^{-2n/(n-2)} grad u (x) grad u
          - (2/(n-2)^2) u^{-2n/(n-2)} |grad u|^2 I
    """
    if n < 3:
        raise ValueError("conformal Hessian needs n >= 3")
    if j.s <= 0.0:
        raise ValueError(f"u must be positive, got {j.s}")
    u, p, h = j.s, j.p, j.H.dense()
    c1 = -(2.0 / (n - 2)) * u ** (-(n + 2.0) / (n - 2))
    c2 = (2.0 * n / (n - 2) ** 2) * u ** (-2.0 * n / (n - 2))
    c3 = -(2.0 / (n - 2) ** 2) * u ** (-2.0 * n / (n - 2))
    return SymMatrix.from_dense(c1 * h + c2 * np.outer(p, p) + c3 * (p @ p) * np.eye(j.n))


def conformal_A_w(j: Jet2) -> SymMatrix:
    """A_w = w Hess w - (1/2) |grad w|^2 I."""
    return SymMatrix.from_dense(j.s * j.H.dense() - 0.5 * (j.p @ j.p) * np.eye(j.n))


def conformal_A_psi(j: Jet2) -> SymMatrix:
    """A[psi] = Hess psi + grad psi (x) grad psi - (1/2)|grad psi|^2 I."""
    return SymMatrix.from_dense(
        j.H.dense() + np.outer(j.p, j.p) - 0.5 * (j.p @ j.p) * np.eye(j.n)
    )


def u_to_psi_jet(j: Jet2, n: int) -> Jet2:
    """Chain rule for psi = -(2/(n-2)) ln u."""
    if j.s <= 0.0:
        raise ValueError(f"u must be positive, got {j.s}")
    c = -2.0 / (n - 2)
    u, p, h = j.s, j.p, j.H.dense()
    psi = c * math.log(u)
    grad = c * p / u
    hess = c * (h / u - np.outer(p, p) / u**2)
    return Jet2(j.x, psi, grad, SymMatrix.from_dense(hess))


def u_to_w_jet(j: Jet2, n: int) -> Jet2:
    """Chain rule for w = u^{-2/(n-2)}."""
    if j.s <= 0.0:
        raise ValueError(f"u must be positive, got {j.s}")
    g = -2.0 / (n - 2)
    u, p, h = j.s, j.p, j.H.dense()
    w = u**g
    grad = g * u ** (g - 1) * p
    hess = g * u ** (g - 1) * h + g * (g - 1) * u ** (g - 2) * np.outer(p, p)
    return Jet2(j.x, w, grad, SymMatrix.from_dense(hess))


@dataclass(frozen=True)
class ConsistencyReport:
    x: np.ndarray
    n: int
    deviation: float
    tol: float
    passed: bool


def consistency_check(u_oracle: "FieldOracle", x: np.ndarray, n: int, tol: float) -> ConsistencyReport:
    """Check A^u = A_w = e^{2 psi} A[psi] at a point, via three routes.

    Each route differentiates a different change of variables of the same
    field; agreement is a stringent end-to-end test of all the chain rules.
    """
    x = np.asarray(x, dtype=float)
    ju = u_oracle.jet(x)
    a_u = conformal_hessian_u(ju, n).dense()
    jw = u_to_w_jet(ju, n)
    a_w = conformal_A_w(jw).dense()
    jpsi = u_to_psi_jet(ju, n)
    a_psi = math.exp(2.0 * jpsi.s) * conformal_A_psi(jpsi).dense()
    dev = max(
        float(np.max(np.abs(a_u - a_w))),
        float(np.max(np.abs(a_u - a_psi))),
        float(np.max(np.abs(a_w - a_psi))),
    )
    return ConsistencyReport(x=x, n=n, deviation=dev, tol=tol, passed=dev <= tol)


# ---------------------------------------------------------------------------
# Kelvin transform and the moving-sphere radius


def kelvin(u_value: "FieldOracle | Callable[[np.ndarray], float]", x: np.ndarray,
           lam: float, y: np.ndarray, n: int) -> float:
    """Kelvin transform of u about the sphere of radius lam at x, at point y.

    u_{x,lam}(y) = (lam/|y-x|)^{n-2} u(x + lam^2 (y-x)/|y-x|^2).
    """
    if n < 3:
        raise ValueError("Kelvin transform needs n >= 3")
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = y - x
    r2 = float(d @ d)
    if r2 == 0.0:
        raise ValueError("Kelvin transform undefined at y = x")
    val = u_value.value if isinstance(u_value, FieldOracle) else u_value
    z = x + lam**2 * d / r2
    return float((lam**2 / r2) ** ((n - 2) / 2.0) * val(z))


def kelvin_transform(u_value: "FieldOracle | Callable[[np.ndarray], float]",
                     x: np.ndarray, lam: float, n: int) -> Callable[[np.ndarray], float]:
    """The transformed function y -> u_{x,lam}(y), for composing transforms."""
    return lambda y: kelvin(u_value, x, lam, y, n)


def moving_sphere_radius(sup_u: float, inf_u: float, n: int) -> float:
    """Starting radius R = (1/4) (sup u / inf u)^{-1/(n-2)}."""
    if not 0.0 < inf_u <= sup_u:
        raise ValueError("need 0 < inf_u <= sup_u")
    if n < 3:
        raise ValueError("need n >= 3")
    return 0.25 * (sup_u / inf_u) ** (-1.0 / (n - 2))


# ---------------------------------------------------------------------------
# analytic field oracles


@dataclass(frozen=True)
class FieldOracle:
    """Closed-form scalar field with exact jets.

    value/grad/hess are plain callables; jets come from hand differentiation
    of the named families, never from finite differences (those are kept as
    an independent cross-check in the tests).
    """

    name: str
    n: int
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]

    def jet(self, x: np.ndarray) -> Jet2:
        x = np.asarray(x, dtype=float)
        return Jet2(x, self.value(x), self.grad(x), SymMatrix.from_dense(self.hess(x)))

    # -- named families ------------------------------------------------

    @classmethod
    def constant(cls, c: float, n: int) -> "FieldOracle":
        return cls(
            name=f"const:{c}",
            n=n,
            value=lambda x: float(c),
            grad=lambda x: np.zeros(n),
            hess=lambda x: np.zeros((n, n)),
        )

    @classmethod
    def harmonic_power(cls, n: int) -> "FieldOracle":
        """u(x) = |x|^{2-n}, the fundamental singularity; u > 0 away from 0."""

        def value(x):
            return float(np.linalg.norm(x) ** (2 - n))

        def grad(x):
            r2 = float(x @ x)
            return (2 - n) * r2 ** (-n / 2.0) * x

        def hess(x):
            r2 = float(x @ x)
            return (2 - n) * (r2 ** (-n / 2.0) * np.eye(n) - n * r2 ** (-n / 2.0 - 1) * np.outer(x, x))

        return cls(name="power", n=n, value=value, grad=grad, hess=hess)

    @classmethod
    def bubble(cls, n: int) -> "FieldOracle":
        """u(x) = (1+|x|^2)^{-(n-2)/2}; its conformal Hessian is 2I everywhere."""

        def value(x):
            return float((1.0 + x @ x) ** (-(n - 2) / 2.0))

        def grad(x):
            return -(n - 2) * (1.0 + x @ x) ** (-n / 2.0) * x

        def hess(x):
            q = 1.0 + float(x @ x)
            return -(n - 2) * (q ** (-n / 2.0) * np.eye(n) - n * q ** (-n / 2.0 - 1) * np.outer(x, x))

        return cls(name="bubble", n=n, value=value, grad=grad, hess=hess)

    @classmethod
    def log_singular(cls, alpha: float, beta: float, mu: float, n: int) -> "FieldOracle":
        """psi(x) = ln(|x|^{2-n} + mu) / (alpha - n beta), singular at 0 for mu >= 0."""
        k = 1.0 / (alpha - n * beta)

        def parts(x):
            r2 = float(x @ x)
            g = r2 ** ((2 - n) / 2.0) + mu
            dg = (2 - n) * r2 ** (-n / 2.0) * x
            hg = (2 - n) * (r2 ** (-n / 2.0) * np.eye(n) - n * r2 ** (-n / 2.0 - 1) * np.outer(x, x))
            return g, dg, hg

        def value(x):
            return k * math.log(parts(x)[0])

        def grad(x):
            g, dg, _ = parts(x)
            return k * dg / g

        def hess(x):
            g, dg, hg = parts(x)
            return k * (hg / g - np.outer(dg, dg) / g**2)

        return cls(name=f"log_singular:{alpha}:{beta}:{mu}", n=n, value=value, grad=grad, hess=hess)

    @classmethod
    def polynomial(cls, monomials: dict[tuple[int, ...], float], n: int) -> "FieldOracle":
        """Multivariate polynomial from {exponent tuple: coefficient}."""
        for expo in monomials:
            if len(expo) != n or any(e < 0 for e in expo):
                raise ValueError(f"bad exponent tuple {expo} for n={n}")

        def value(x):
            return float(sum(c * np.prod(x**np.array(e)) for e, c in monomials.items()))

        def grad(x):
            g = np.zeros(n)
            for e, c in monomials.items():
                for i in range(n):
                    if e[i] == 0:
                        continue
                    de = list(e)
                    de[i] -= 1
                    g[i] += c * e[i] * np.prod(x ** np.array(de))
            return g

        def hess(x):
            h = np.zeros((n, n))
            for e, c in monomials.items():
                for i in range(n):
                    if e[i] == 0:
                        continue
                    for jj in range(n):
                        de = list(e)
                        de[i] -= 1
                        if de[jj] == 0:
                            continue
                        fac = e[i] * de[jj]
                        de[jj] -= 1
                        h[i, jj] += c * fac * np.prod(x ** np.array(de))
            return 0.5 * (h + h.T)

        return cls(name="poly", n=n, value=value, grad=grad, hess=hess)


# ---------------------------------------------------------------------------
# structural-condition probes


@dataclass
class ConditionResult:
    ok: bool = False
    fitted_C: float | None = None
    fitted_theta_bar: float | None = None
    witness: dict | None = None


@dataclass
class LProbeReport:
    """Sample-based verdicts on the structural conditions for L.

    Fitted constants are sample-feasible, not proved; witnesses are genuine
    disproofs (a concrete (x, s, p, theta) violating the inequality).
    The gradient cap |p| <= 1e3 bounds the search space.
    """

    operator: str
    R: float
    Lambda: float
    m: float
    samples: int
    p_cap: float
    grad_x_bound: ConditionResult = field(default_factory=ConditionResult)  # |grad_x L| <= C|p|^m
    s_growth: ConditionResult = field(default_factory=ConditionResult)      # 0 <= dL <= C ds |p|^m I
    radial_coercive: ConditionResult = field(default_factory=ConditionResult)      # sub-unit scaling regime
    radial_coercive_sup: ConditionResult = field(default_factory=ConditionResult)  # super-unit mirror
    s_monotone: ConditionResult = field(default_factory=ConditionResult)    # L non-decreasing in s

    def all_ok(self) -> bool:
        return all(
            r.ok
            for r in (self.grad_x_bound, self.s_growth, self.radial_coercive, self.s_monotone)
        )


_P_CAP = 1e3


def _grad_x_L(spec: OperatorSpec, x: np.ndarray, s: float, p: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """d/dx of L as an (n, n, n) array, index order (k, i, j); central differences."""
    n = len(x)
    out = np.zeros((n, n, n))
    if spec.kind in ("conformal", "quad_const", "rot_inv"):
        return out  # x-independent by construction
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        out[k] = (eval_L(spec, x + e, s, p) - eval_L(spec, x - e, s, p)) / (2 * h)
    return out


def _grad_p_L(spec: OperatorSpec, x: np.ndarray, s: float, p: np.ndarray) -> np.ndarray:
    """d/dp of L as an (n, n, n) array, index order (k, i, j).

    Exact for the quadratic and rotationally invariant kinds; central
    differences with a relative step for general L.
    """
    n = len(p)
    out = np.zeros((n, n, n))
    eye = np.eye(n)
    if spec.kind in ("conformal", "quad_const", "quad_var"):
        if spec.kind == "conformal":
            al, be = 1.0, 0.5
        elif spec.kind == "quad_const":
            al, be = spec.alpha, spec.beta
        else:
            al, be = spec.alpha_fn(x, s), spec.beta_fn(x, s)
        for k in range(n):
            out[k] = al * (np.outer(eye[k], p) + np.outer(p, eye[k])) - 2.0 * be * p[k] * eye
        return out
    if spec.kind == "rot_inv":
        t = float(np.linalg.norm(p))
        if t == 0.0:
            # one-sided limit: a(0) (e_k (x) p + p (x) e_k) -> 0; b'(0) direction term
            # is handled by finite differences below to avoid guessing at kinks
            pass
        else:
            da = _fd1(spec.a_fn, t)
            db = _fd1(spec.b_fn, t)
            a = spec.a_fn(t)
            for k in range(n):
                out[k] = (
                    a * (np.outer(eye[k], p) + np.outer(p, eye[k]))
                    + da * (p[k] / t) * np.outer(p, p)
                    + db * (p[k] / t) * eye
                )
            return out
    h = 1e-6 * (1.0 + float(np.linalg.norm(p)))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        out[k] = (eval_L(spec, x, s, p + e) - eval_L(spec, x, s, p - e)) / (2 * h)
    return out


def _fd1(f: Callable[[float], float], t: float) -> float:
    h = 1e-7 * (1.0 + abs(t))
    return (f(t + h) - f(t - h)) / (2 * h)


def _min_eig(m: np.ndarray) -> float:
    return eigen_sym(SymMatrix.from_dense(m)).min()


def _max_eig(m: np.ndarray) -> float:
    return eigen_sym(SymMatrix.from_dense(m)).max()


def probe_L_conditions(
    spec: OperatorSpec,
    R: float,
    Lambda: float,
    m: float,
    samples: int,
    seed: int,
    n: int = 3,
) -> LProbeReport:
    """Sample-based falsification/fitting of the structural conditions on L.

    For each sampled (x, s <= s', p): fits the smallest constants making the
    gradient bound, the s-growth bound, and the radial coercivity inequality
    hold on the whole sample (reporting the largest workable theta_bar for
    the coercivity one), or reports a violating witness.  Monotonicity in s
    is checked as a matrix ordering.  Sampling caps |p| at 1e3; constants are
    sample-feasible only, witnesses are disproofs.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    report = LProbeReport(
        operator=format_operator(spec), R=R, Lambda=Lambda, m=m,
        samples=samples, p_cap=_P_CAP,
    )

    # sample jets: |p| log-spaced to hit both the small- and large-gradient
    # regimes, which stress different terms of the inequalities
    pts = []
    for _ in range(samples):
        x = rng.uniform(-1.0, 1.0, size=n)
        s_lo, s_hi = np.sort(rng.uniform(-R, R, size=2))
        direction = rng.normal(size=n)
        direction /= np.linalg.norm(direction)
        mag = 10.0 ** rng.uniform(-3.0, math.log10(_P_CAP))
        pts.append((x, float(s_lo), float(s_hi), mag * direction))
    zero_dir = np.zeros(n)
    pts.append((np.zeros(n), 0.0, min(R, 1.0), zero_dir))  # p = 0 corner case

    eps = 1e-9

    # --- gradient-in-x bound ------------------------------------------
    worst_ratio = 0.0
    witness = None
    for x, s, _, p in pts:
        gx = _grad_x_L(spec, x, s, p)
        norm = float(np.sqrt(np.sum(gx * gx)))
        pm = float(np.linalg.norm(p)) ** m
        if pm < 1e-300:
            if norm > 1e-6:
                witness = {"x": x.tolist(), "s": s, "p": p.tolist(), "grad_norm": norm}
                break
            continue
        worst_ratio = max(worst_ratio, norm / pm)
    report.grad_x_bound = (
        ConditionResult(ok=False, witness=witness)
        if witness
        else ConditionResult(ok=True, fitted_C=worst_ratio)
    )

    # --- growth in s ----------------------------------------------------
    worst_ratio = 0.0
    witness = None
    mono_witness = None
    for x, s_lo, s_hi, p in pts:
        if s_hi <= s_lo:
            continue
        diff = eval_L(spec, x, s_hi, p) - eval_L(spec, x, s_lo, p)
        scale = 1.0 + float(np.max(np.abs(diff)))
        lo_eig = _min_eig(diff)
        if lo_eig < -eps * scale and mono_witness is None:
            mono_witness = {
                "x": x.tolist(), "s": s_lo, "s_prime": s_hi, "p": p.tolist(),
                "min_eig": lo_eig,
            }
        pm = float(np.linalg.norm(p)) ** m
        denom = (s_hi - s_lo) * pm
        if denom < 1e-300:
            if _max_eig(np.abs(diff)) > 1e-6:
                witness = {"x": x.tolist(), "s": s_lo, "s_prime": s_hi, "p": p.tolist()}
            continue
        worst_ratio = max(worst_ratio, _max_eig(diff) / denom)
    report.s_monotone = (
        ConditionResult(ok=False, witness=mono_witness)
        if mono_witness
        else ConditionResult(ok=True)
    )
    if mono_witness is not None:
        witness = witness or mono_witness
    report.s_growth = (
        ConditionResult(ok=False, witness=witness)
        if witness
        else ConditionResult(ok=True, fitted_C=worst_ratio)
    )

    # --- radial coercivity, both scaling regimes -----------------------
    report.radial_coercive = _fit_radial_coercive(spec, pts, Lambda, m, sign=+1, eps=eps)
    report.radial_coercive_sup = _fit_radial_coercive(spec, pts, Lambda, m, sign=-1, eps=eps)
    return report


def _fit_radial_coercive(spec, pts, Lambda, m, sign, eps) -> ConditionResult:
    """Fit (C, theta_bar) for the radial coercivity inequality.

    sign=+1: p.grad_p L - L + theta Lambda |grad_p L| I - theta I
             <= C p(x)p - (1/C)|p|^m I,  for all theta in [0, theta_bar].
    sign=-1 is the mirrored variant with reversed inequality:
             p.grad_p L - L - theta Lambda |grad_p L| I + theta I
             >= -C p(x)p + (1/C)|p|^m I.

    The constraint is affine in theta, so feasibility over [0, theta_bar]
    reduces to the endpoints; a log grid of interior theta values is scanned
    once on the fitted pair as a guard against evaluation noise.
    """
    prepared = []
    for x, s, _, p in pts:
        n = len(p)
        l_val = eval_L(spec, x, s, p)
        gp = _grad_p_L(spec, x, s, p)
        m0 = np.einsum("k,kij->ij", p, gp) - l_val
        m0 = 0.5 * (m0 + m0.T)
        g = float(np.sqrt(np.sum(gp * gp)))
        prepared.append((p, m0, g, n))

    c_grid = [2.0**j for j in range(-2, 22)]
    theta_grid = [2.0**-j for j in range(40, -1, -1)]  # ascending, up to 1

    def feasible(c: float, thetas: list[float]) -> dict | None:
        # gap(theta) = C p(x)p - (|p|^m/C) I - sign*m0 - theta(Lambda g - 1) I,
        # required PSD for both variants after folding the signs
        for p, m0, g, n in prepared:
            pm = float(np.linalg.norm(p)) ** m
            base = c * np.outer(p, p) - (pm / c) * np.eye(n) - sign * m0
            scale = 1.0 + abs(pm) + float(np.max(np.abs(m0)))
            for theta in thetas:
                gap = base - theta * (Lambda * g - 1.0) * np.eye(n)
                v = _min_eig(gap)
                if v < -eps * scale:
                    return {
                        "p": p.tolist(), "theta": theta, "C": c,
                        "violation": v,
                    }
        return None

    # smallest sample-feasible C at vanishing theta_bar, then push theta_bar up
    first_c = None
    last_witness = None
    for c in c_grid:
        last_witness = feasible(c, [0.0, theta_grid[0]])
        if last_witness is None:
            first_c = c
            break
    if first_c is None:
        return ConditionResult(ok=False, witness=last_witness)
    best_theta = theta_grid[0]
    for theta_bar in theta_grid[1:]:
        if feasible(first_c, [theta_bar]) is None:
            best_theta = theta_bar
        else:
            break
    guard = feasible(first_c, [0.0, best_theta] + [t for t in theta_grid if t < best_theta])
    if guard is not None:
        return ConditionResult(ok=False, witness=guard)
    return ConditionResult(ok=True, fitted_C=first_c, fitted_theta_bar=best_theta)


# ---------------------------------------------------------------------------
# textual forms


def example_varying_quad() -> OperatorSpec:
    """Variable-coefficient quadratic family with non-decreasing alpha and
    non-increasing beta bounded below: alpha = tanh(s), beta = 2 - tanh(s)."""
    return OperatorSpec.quad_var(
        alpha_fn=lambda x, s: math.tanh(s),
        beta_fn=lambda x, s: 2.0 - math.tanh(s),
        m=2.0,
        name="tanh_quad",
    )


def cubic_mix_L(coef: float = -36.0 / 25.0) -> OperatorSpec:
    """L(s, p) = -(s^3 |p|^10 + coef * s |p|^6 + |p|^4) I; not monotone in s."""

    def L_fn(x, s, p):
        t2 = float(p @ p)
        val = -(s**3 * t2**5 + coef * s * t2**3 + t2**2)
        return val * np.eye(len(p))

    return OperatorSpec.general_l(L_fn, m=10.0, name="cubic_mix")


_GENL_BUILTINS: dict[str, Callable[[], OperatorSpec]] = {
    "cubic_mix": cubic_mix_L,
    "tanh_quad": example_varying_quad,
}


def _parse_radial_coeff(text: str) -> Callable[[float], float]:
    if text == "zero":
        return lambda t: 0.0
    if text == "neg_t":
        return lambda t: -t
    if text.startswith("pow(") and text.endswith(")"):
        coef_s, gamma_s = text[4:-1].split(",")
        coef, gamma = float(coef_s), float(gamma_s)
        return lambda t: coef * t**gamma if t > 0.0 else 0.0
    raise ValueError(f"unknown radial coefficient {text!r}")


def parse_operator(text: str) -> OperatorSpec:
    """Parse the textual operator form used by the CLI and problem files."""
    text = text.strip()
    if text == "conformal":
        return OperatorSpec.conformal()
    if text.startswith("quad:"):
        _, a, b = text.split(":")
        return OperatorSpec.quad_const(float(a), float(b))
    if text.startswith("rotinv:"):
        _, a, b = text.split(":", 2)
        return OperatorSpec.rot_inv(_parse_radial_coeff(a), _parse_radial_coeff(b),
                                    name=f"rotinv:{a}:{b}")
    if text.startswith("genL:"):
        name = text.split(":", 1)[1]
        if name not in _GENL_BUILTINS:
            raise ValueError(f"unknown built-in L {name!r}; have {sorted(_GENL_BUILTINS)}")
        return _GENL_BUILTINS[name]()
    raise ValueError(f"cannot parse operator spec {text!r}")


def format_operator(spec: OperatorSpec) -> str:
    if spec.kind == "conformal":
        return "conformal"
    if spec.kind == "quad_const":
        return f"quad:{spec.alpha:g}:{spec.beta:g}"
    if spec.kind == "rot_inv":
        return spec.name or "rotinv:<custom>"
    if spec.kind == "quad_var":
        return f"genL:{spec.name}" if spec.name in _GENL_BUILTINS else f"quadvar:{spec.name or '<custom>'}"
    return f"genL:{spec.name}" if spec.name in _GENL_BUILTINS else f"genL:<custom:{spec.name}>"
