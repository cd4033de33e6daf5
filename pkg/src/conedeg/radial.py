"""Radial profiles, quartic root isolation, and the counterexample gallery.

Rotationally invariant operators F[psi] = Hess psi + L(psi, grad psi) reduce
on radial functions psi(|x|) to two eigenvalues,

    mu = psi'' + (L-part along the radius),   nu = psi'/r + (L-part across),

and the bundled counterexample families are built and certified entirely in
this reduction: closed-form profiles, certified quartic root brackets, and a
per-radius sign scan that becomes a pass/fail certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .matcone import SymMatrix, eigen_sym
from .operators import FieldOracle, Jet2, OperatorSpec, eval_F

__all__ = [
    "RadialProfile",
    "QuarticSpec",
    "RootBracket",
    "RootReport",
    "CtexCertificate",
    "cbrt",
    "radial_F_eigs",
    "lambda12_t",
    "quartic_eval",
    "quartic_roots",
    "build_counterexample",
    "cusp_pair_values",
    "monotone_interp_L",
    "interp_L_slope_scan",
    "log_singular_check",
    "certificate_rows_csv",
    "certificate_roots_csv",
]


def cbrt(t: float) -> float:
    """Real cube root, negative branch for negative input."""
    return math.copysign(abs(t) ** (1.0 / 3.0), t)


# ---------------------------------------------------------------------------
# radial profiles


@dataclass(frozen=True)
class RadialProfile:
    """Closed-form or sampled radial function with exact derivatives."""

    name: str
    r_lo: float
    r_hi: float
    psi: Callable[[float], float]
    dpsi: Callable[[float], float]
    ddpsi: Callable[[float], float]
    excluded: tuple[float, ...] = ()

    def in_domain(self, r: float) -> bool:
        if not (self.r_lo <= r <= self.r_hi):
            return False
        return all(abs(r - e) > 1e-12 for e in self.excluded)

    @classmethod
    def power_two_thirds(cls, t: float, r0: float, half_width: float = 1.0) -> "RadialProfile":
        """psi(r) = t^{1/3} |r - r0|^{2/3}; cusp (vertical tangent) at r0."""
        c = cbrt(t)

        def psi(r):
            return c * abs(r - r0) ** (2.0 / 3.0)

        def dpsi(r):
            rho = r - r0
            return (2.0 / 3.0) * c * abs(rho) ** (-1.0 / 3.0) * math.copysign(1.0, rho)

        def ddpsi(r):
            return -(2.0 / 9.0) * c * abs(r - r0) ** (-4.0 / 3.0)

        return cls(f"power23:t={t:g}", r0 - half_width, r0 + half_width, psi, dpsi, ddpsi,
                   excluded=(r0,))

    @classmethod
    def tanh_bump(cls, delta: float, r0: float) -> "RadialProfile":
        """w(r) = (delta/2) ln cosh(r - r0); w' ranges in (-delta/2, delta/2)."""
        half = 0.5 * delta

        def psi(r):
            return half * math.log(math.cosh(r - r0))

        def dpsi(r):
            return half * math.tanh(r - r0)

        def ddpsi(r):
            return half / math.cosh(r - r0) ** 2

        return cls(f"tanh_bump:{delta:g}", r0 - 1.0, r0 + 1.0, psi, dpsi, ddpsi)

    @classmethod
    def holder_solution(cls, gamma: float, n: int, r_hi: float = 1.0) -> "RadialProfile":
        """psi(r) = r^{lam+1} / ((lam+1)(lam+n-1)^lam), lam = 1/(1-gamma).

        Classical solution of (Laplacian psi) = |grad psi|^gamma; the scaling
        constant makes both sides match exactly.
        """
        if not 0.0 < gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        lam = 1.0 / (1.0 - gamma)
        c = 1.0 / ((lam + 1.0) * (lam + n - 1.0) ** lam)

        def psi(r):
            return c * r ** (lam + 1.0)

        def dpsi(r):
            return c * (lam + 1.0) * r**lam

        def ddpsi(r):
            return c * (lam + 1.0) * lam * r ** (lam - 1.0)

        return cls(f"holder:{gamma:g}:{n}", 0.0, r_hi, psi, dpsi, ddpsi, excluded=(0.0,))

    @classmethod
    def boundary_lip(cls, m: float, a: float = 2.0) -> "RadialProfile":
        """psi(r) = -(m-1)^{(m-2)/(m-1)} (m-2)^{-1} (r-1)^{(m-2)/(m-1)} on (1, a).

        Satisfies psi'' = |psi'|^m exactly; the gradient blows up at r = 1,
        so the solution is continuous up to the boundary but not Lipschitz.
        """
        if m <= 2.0:
            raise ValueError("m must exceed 2")
        kappa = (m - 2.0) / (m - 1.0)
        c = (m - 1.0) ** kappa / (m - 2.0)

        def psi(r):
            return -c * (r - 1.0) ** kappa

        def dpsi(r):
            return -c * kappa * (r - 1.0) ** (kappa - 1.0)

        def ddpsi(r):
            return -c * kappa * (kappa - 1.0) * (r - 1.0) ** (kappa - 2.0)

        return cls(f"boundary_lip:{m:g}", 1.0, a, psi, dpsi, ddpsi, excluded=(1.0,))

    @classmethod
    def log_singular(cls, mu: float, alpha: float, beta: float, n: int) -> "RadialProfile":
        """psi(r) = ln(r^{2-n} + mu) / (alpha - n beta) on (0, 1]."""
        k = alpha - n * beta
        if k <= 0.0:
            raise ValueError("need alpha - n*beta > 0")

        def parts(r):
            g = r ** (2.0 - n) + mu
            dg = (2.0 - n) * r ** (1.0 - n)
            hg = (2.0 - n) * (1.0 - n) * r ** (-float(n))
            return g, dg, hg

        def psi(r):
            return math.log(parts(r)[0]) / k

        def dpsi(r):
            g, dg, _ = parts(r)
            return dg / (g * k)

        def ddpsi(r):
            g, dg, hg = parts(r)
            return (hg / g - (dg / g) ** 2) / k

        return cls(f"log_singular:{mu:g}", 0.0, 1.0, psi, dpsi, ddpsi, excluded=(0.0,))

    @classmethod
    def sampled(cls, r: np.ndarray, psi: np.ndarray, dpsi: np.ndarray, ddpsi: np.ndarray) -> "RadialProfile":
        r = np.asarray(r, dtype=float)
        if np.any(np.diff(r) <= 0.0):
            raise ValueError("sample radii must be strictly increasing")
        arrays = [np.asarray(a, dtype=float) for a in (psi, dpsi, ddpsi)]
        if any(a.shape != r.shape for a in arrays):
            raise ValueError("sample arrays must match the radius grid")

        def make(vals):
            def f(rq: float) -> float:
                i = int(np.argmin(np.abs(r - rq)))
                if abs(r[i] - rq) > 1e-9 * (1.0 + abs(rq)):
                    raise ValueError(f"r={rq} is not a sample node")
                return float(vals[i])

            return f

        return cls("sampled", float(r[0]), float(r[-1]), make(arrays[0]), make(arrays[1]), make(arrays[2]))


# ---------------------------------------------------------------------------
# radial eigenvalues


def radial_F_eigs(r: float, dpsi: float, ddpsi: float, spec: OperatorSpec,
                  s: float = 0.0, n: int = 2) -> tuple[float, float]:
    """The two distinct eigenvalues (mu, nu) of F at a radial jet.

    mu is the eigenvalue along the radius, nu the (n-1)-fold one across it;
    computed by assembling the full matrix at x = r e_1 and reading the
    diagonal, which is exact for every rotationally invariant kind.
    """
    if r <= 0.0:
        raise ValueError("radius must be positive")
    x = np.zeros(n)
    x[0] = r
    p = np.zeros(n)
    p[0] = dpsi
    h = (dpsi / r) * np.eye(n)
    h[0, 0] = ddpsi
    f = eval_F(Jet2(x, s, p, SymMatrix.from_dense(h)), spec).dense()
    return float(f[0, 0]), float(f[1, 1])


def _p4(t: float, alpha: float) -> float:
    return 64.0 * t**4 + 324.0 * alpha * t**2 + 729.0 * t


def _p4_tilde(t: float, alpha: float) -> float:
    return 6400.0 * t**4 + 32400.0 * alpha * t**2 + 729.0 * t


def lambda12_t(t: float, r: float, r0: float, alpha: float, variant: str) -> tuple[float, float]:
    """Closed-form eigenvalues of the cusp-profile family at radius r.

    variant "P4":     operator Hess - (s^3|p|^10 + alpha s|p|^6 + |p|^4) I
    variant "P4tilde": same with the |p|^4 coefficient scaled to 1/100
    Both reduce on psi_t = t^{1/3}|r-r0|^{2/3} to
        lambda1 = -(2/D) t^{1/3} (K P(t) + B) / |r-r0|^{4/3}
        lambda2 = -(2/D) t^{1/3} (K P(t) - T (r-r0)/r) / |r-r0|^{4/3}
    with (D, K, B, T) = (59049, 8, 6561, 19683) resp. (1476225, 2, 164025, 492075).
    """
    if r <= 0.0:
        raise ValueError("radius must be positive")
    rho = r - r0
    if rho == 0.0:
        raise ValueError("profile is not twice differentiable at r = r0")
    if variant == "P4":
        d, k, b, tt = 59049.0, 8.0, 6561.0, 19683.0
        p = _p4(t, alpha)
    elif variant == "P4tilde":
        d, k, b, tt = 1476225.0, 2.0, 164025.0, 492075.0
        p = _p4_tilde(t, alpha)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    t13 = cbrt(t)
    denom = abs(rho) ** (4.0 / 3.0)
    lam1 = -(2.0 / d) * t13 * (k * p + b) / denom
    lam2 = -(2.0 / d) * t13 * (k * p - tt * rho / r) / denom
    return lam1, lam2


def cusp_family_operator(variant: str, alpha: float) -> OperatorSpec:
    """The isotropic operator whose radial reduction lambda12_t evaluates."""
    c4 = 1.0 if variant == "P4" else 0.01
    if variant not in ("P4", "P4tilde"):
        raise ValueError(f"unknown variant {variant!r}")

    def L_fn(x, s, p):
        t2 = float(p @ p)
        val = -(s**3 * t2**5 + alpha * s * t2**3 + c4 * t2**2)
        return val * np.eye(len(p))

    return OperatorSpec.general_l(L_fn, m=10.0, name=f"cusp:{variant}:{alpha:g}")


# ---------------------------------------------------------------------------
# quartics with certified roots


@dataclass(frozen=True)
class QuarticSpec:
    """c4 t^4 + c2 t^2 + c1 t + c0 with exact rational coefficients."""

    c4: Fraction
    c2: Fraction
    c1: Fraction
    c0: Fraction

    def __post_init__(self) -> None:
        for name in ("c4", "c2", "c1", "c0"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.c4 == 0:
            raise ValueError("quartic needs c4 != 0")

    @classmethod
    def p4_shifted(cls, alpha: Fraction | float) -> "QuarticSpec":
        """8 P4(t) + 6561 where P4(t) = 64 t^4 + 324 alpha t^2 + 729 t."""
        a = Fraction(alpha) if not isinstance(alpha, float) else Fraction(alpha).limit_denominator(10**9)
        return cls(Fraction(512), 2592 * a, Fraction(5832), Fraction(6561))

    @classmethod
    def p4_tilde_shifted(cls, alpha: Fraction | float) -> "QuarticSpec":
        """2 P4~(t) + 164025 where P4~(t) = 6400 t^4 + 32400 alpha t^2 + 729 t."""
        a = Fraction(alpha) if not isinstance(alpha, float) else Fraction(alpha).limit_denominator(10**9)
        return cls(Fraction(12800), 64800 * a, Fraction(1458), Fraction(164025))

    @classmethod
    def p4_tilde(cls, alpha: Fraction | float) -> "QuarticSpec":
        a = Fraction(alpha) if not isinstance(alpha, float) else Fraction(alpha).limit_denominator(10**9)
        return cls(Fraction(6400), 32400 * a, Fraction(729), Fraction(0))


def quartic_eval(q: QuarticSpec, t: "Fraction | int | float"):
    """Evaluate the quartic; exact Fraction arithmetic for exact inputs.

    Rational inputs stay rational (no rounding anywhere); floats use plain
    Horner evaluation, which is adequate at the moderate magnitudes here.
    """
    if isinstance(t, (Fraction, int)):
        tq = Fraction(t)
        return ((q.c4 * tq * tq + q.c2) * tq + q.c1) * tq + q.c0
    tf = float(t)
    return ((float(q.c4) * tf * tf + float(q.c2)) * tf + float(q.c1)) * tf + float(q.c0)


@dataclass(frozen=True)
class RootBracket:
    index: int
    t: float
    lo: float
    hi: float


@dataclass
class RootReport:
    roots: list[RootBracket]
    probe_lo: float
    probe_hi: float
    probe_points: int

    @property
    def count(self) -> int:
        return len(self.roots)


def quartic_roots(q: QuarticSpec, lo: float = -10.0, hi: float = 10.0,
                  probes: int = 1024, width: float = 1e-12) -> RootReport:
    """All simple real roots in [lo, hi] by sign-change bracketing + bisection.

    A double root produces no sign change at the probe resolution and is
    therefore missing from the report; callers that expect a fixed count
    treat a shortfall as "unresolved" rather than inventing roots.
    """
    ts = np.linspace(lo, hi, probes + 1)
    vals = [float(quartic_eval(q, float(t))) for t in ts]
    roots: list[RootBracket] = []
    for i in range(probes):
        a, b = float(ts[i]), float(ts[i + 1])
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(RootBracket(len(roots), a, a, a))
            continue
        if fa * fb >= 0.0:
            continue
        while b - a > width:
            mid = 0.5 * (a + b)
            fm = float(quartic_eval(q, mid))
            if fm == 0.0:
                a = b = mid
                break
            if fa * fm < 0.0:
                b = mid
            else:
                a, fa = mid, fm
        # Newton polish: the bracket fixes ~1e-12, the polish pushes the
        # residual down to evaluation noise, which the eigenvalue
        # certificates need because a 4/3-power of the radius amplifies it
        t_hat = 0.5 * (a + b)
        for _ in range(4):
            f = float(quartic_eval(q, t_hat))
            df = float(4 * q.c4) * t_hat**3 + float(2 * q.c2) * t_hat + float(q.c1)
            if df == 0.0 or not math.isfinite(f / df):
                break
            t_new = t_hat - f / df
            if not (ts[i] <= t_new <= ts[i + 1]):
                break
            t_hat = t_new
        roots.append(RootBracket(len(roots), t_hat, a, b))
    if vals[-1] == 0.0:
        roots.append(RootBracket(len(roots), float(ts[-1]), float(ts[-1]), float(ts[-1])))
    return RootReport(roots=roots, probe_lo=lo, probe_hi=hi, probe_points=probes + 1)


# ---------------------------------------------------------------------------
# the interpolated lower-order coefficient


_ALPHA_FIXED = Fraction(-36, 25)
_HOLE = Fraction(32, 45)  # |s| |p|^2 below this is the interpolation strip
_VAL_LO = Fraction(-245821, 364500)
_VAL_HI = Fraction(238531, 364500)
_SLOPE = Fraction(-52, 675)


def monotone_interp_L(p_norm, s, alpha=_ALPHA_FIXED):
    """Scalar coefficient g(s, |p|) of the interpolated operator L = g I.

    Outside the strip {|s| |p|^2 < 32/45} this is exactly
    -(s^3|p|^10 + alpha s|p|^6 + |p|^4/100); inside, a cubic Hermite in s
    matching values and s-slopes at the strip boundary.  Accepts Fraction
    arguments and then evaluates in exact rational arithmetic.

    Note the two boundary values: -(245821/364500)|p|^4 at the lower end and
    +(238531/364500)|p|^4 at the upper end.  The coefficient rises across
    the strip while both end slopes are negative, so no interpolation is
    monotone in s there; interp_L_slope_scan reports the actual sign
    pattern.
    """
    if Fraction(alpha).limit_denominator(10**6) != _ALPHA_FIXED:
        raise ValueError("the interpolated family is defined only for alpha = -36/25")
    exact = isinstance(p_norm, (Fraction, int)) and isinstance(s, (Fraction, int))
    if exact:
        p_norm, s = Fraction(p_norm), Fraction(s)
        a, hole = _ALPHA_FIXED, _HOLE
    else:
        p_norm, s = float(p_norm), float(s)
        a, hole = float(_ALPHA_FIXED), float(_HOLE)
    if p_norm < 0:
        raise ValueError("p_norm must be nonnegative")
    p2 = p_norm * p_norm
    prod = s * p2
    if p_norm == 0:
        return Fraction(0) if exact else 0.0
    if prod <= -hole or prod >= hole:
        return -(s**3 * p2**5 + a * s * p2**3 + p2**2 / (Fraction(100) if exact else 100.0))
    p4 = p2 * p2
    s_lo, s_hi = -hole / p2, hole / p2
    width = s_hi - s_lo
    y_lo = (_VAL_LO if exact else float(_VAL_LO)) * p4
    y_hi = (_VAL_HI if exact else float(_VAL_HI)) * p4
    d = (_SLOPE if exact else float(_SLOPE)) * p4 * p2
    tau = (s - s_lo) / width
    h00 = (1 + 2 * tau) * (1 - tau) ** 2
    h10 = tau * (1 - tau) ** 2
    h01 = tau * tau * (3 - 2 * tau)
    h11 = tau * tau * (tau - 1)
    return h00 * y_lo + h10 * width * d + h01 * y_hi + h11 * width * d


@dataclass
class SlopeScanReport:
    grid_points: int
    nonpos_outside: bool
    nonpos_fraction: float
    rise_witness: dict | None

    @property
    def monotone_everywhere(self) -> bool:
        return self.rise_witness is None


def interp_L_slope_scan(n_s: int = 40, n_p: int = 25) -> SlopeScanReport:
    """Finite-difference sign scan of d/ds of the interpolated coefficient.

    Outside the strip the coefficient is non-increasing in s (that is what
    the strip boundary 32/45 encodes); inside, it must rise from the lower
    boundary value to the larger upper one, so the scan genuinely finds
    positive slopes and reports a witness instead of a clean verdict.
    """
    total = 0
    nonpos = 0
    outside_ok = True
    witness = None
    for p in np.geomspace(0.25, 4.0, n_p):
        p = float(p)
        s_edge = float(_HOLE) / p**2
        for s in np.linspace(-2.5 * s_edge, 2.5 * s_edge, n_s):
            s = float(s)
            h = 1e-7 * s_edge
            slope = (monotone_interp_L(p, s + h) - monotone_interp_L(p, s - h)) / (2 * h)
            total += 1
            inside = abs(s * p**2) < float(_HOLE)
            if slope <= 1e-9 * (1.0 + abs(slope)):
                nonpos += 1
            else:
                if not inside:
                    outside_ok = False
                if witness is None:
                    witness = {"p_norm": p, "s": s, "slope": float(slope), "inside_strip": inside}
    return SlopeScanReport(
        grid_points=total,
        nonpos_outside=outside_ok,
        nonpos_fraction=nonpos / total,
        rise_witness=witness,
    )


def interpolated_L_operator() -> OperatorSpec:
    """Operator built from the interpolated coefficient (matches the cusp
    family operator wherever |s| |p|^2 >= 32/45)."""

    def L_fn(x, s, p):
        return monotone_interp_L(float(np.linalg.norm(p)), float(s)) * np.eye(len(p))

    return OperatorSpec.general_l(L_fn, m=10.0, name="interp_strip")


# ---------------------------------------------------------------------------
# counterexample certificates


@dataclass
class GridRow:
    r: float
    w: float
    v: float
    mu_w: float
    nu_w: float
    mu_v: float
    nu_v: float
    ok: bool


@dataclass
class CtexCertificate:
    kind: str
    params: dict
    roots: list[RootBracket] = field(default_factory=list)
    rows: list[GridRow] = field(default_factory=list)
    touching: list[float] = field(default_factory=list)
    clauses: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if not self.clauses:
            return "unresolved"
        if self.clauses.get("roots_resolved", True) is False:
            return "unresolved"
        return "pass" if all(self.clauses.values()) else "fail"


_EIG_TOL = 1e-9


def build_counterexample(kind: str, rgrid: int = 2001, **params) -> CtexCertificate:
    """Construct and certify one of the bundled propagation counterexamples.

    kind: "beta_sign", "nondec", "bprime", or "holder".  Certification is a
    per-radius eigenvalue sign scan on an rgrid-point grid (punctured at the
    cusp radius where the profiles are not twice differentiable; there the
    vertical tangent makes the touching-test-function conditions vacuous).
    """
    if rgrid < 9:
        raise ValueError("rgrid too small to certify anything")
    if kind == "beta_sign":
        return _build_cusp_pair("beta_sign", params.get("alpha", -3.0), rgrid)
    if kind == "nondec":
        if "alpha" in params and Fraction(params["alpha"]).limit_denominator(10**6) != _ALPHA_FIXED:
            raise ValueError("the non-monotone-free family is fixed at alpha = -36/25")
        return _build_cusp_pair("nondec", float(_ALPHA_FIXED), rgrid)
    if kind == "bprime":
        return _build_bprime(rgrid, r0=params.get("r0", 2.0), delta=params.get("delta", 0.5))
    if kind == "holder":
        return _build_holder(rgrid, gamma=params.get("gamma", 0.5), n=params.get("n", 3))
    raise ValueError(f"unknown counterexample kind {kind!r}")


def _sign_scan_delta(variant: str, alpha: float, roots: list[float], t0: float,
                     r0: float) -> float | None:
    """Largest dyadic delta <= 1/4 whose coarse sign scan passes."""
    t2, t3, t4 = roots[1], roots[2], roots[3]
    for j in range(2, 10):
        delta = 2.0**-j
        ok = True
        for r in np.linspace(r0 - delta, r0 + delta, 257):
            r = float(r)
            if abs(r - r0) < 1e-12:
                continue
            for t in (t2, t3, t4):
                _, lam2 = lambda12_t(t, r, r0, alpha, variant)
                if t * lam2 <= 0.0:
                    ok = False
                    break
            if not ok:
                break
            lam1, lam2 = lambda12_t(t0, r, r0, alpha, variant)
            if lam1 <= 0.0 or lam2 <= 0.0:
                ok = False
                break
        if ok:
            return delta
    return None


def _search_t0(q: QuarticSpec, variant: str, alpha: float, t1: float,
               r0: float, delta: float) -> float | None:
    """First half-integer below t1 whose profile has both eigenvalues positive.

    For t < 0 the positivity of lambda1 is Q(t) > 0 and of lambda2 is
    K P(t) > T sup_{|r-r0|<=delta} (r-r0)/r = T delta/(r0+delta).
    """
    k, tt = (8.0, 19683.0) if variant == "P4" else (2.0, 492075.0)
    thresh = tt * delta / (r0 + delta)
    t = 0.5 * math.floor(2.0 * t1)
    if t >= t1:
        t -= 0.5
    for _ in range(200):
        q_val = float(quartic_eval(q, t))
        p_val = _p4(t, alpha) if variant == "P4" else _p4_tilde(t, alpha)
        if q_val > 0.0 and k * p_val > thresh:
            return t
        t -= 0.5
    return None


def _build_cusp_pair(kind: str, alpha: float, rgrid: int) -> CtexCertificate:
    variant = "P4" if kind == "beta_sign" else "P4tilde"
    r0 = 2.0
    if kind == "beta_sign":
        q = QuarticSpec.p4_shifted(Fraction(alpha).limit_denominator(10**9))
        fences = [-2.0, 0.0, 9.0 / 4.0]
    else:
        q = QuarticSpec.p4_tilde_shifted(_ALPHA_FIXED)
        fences = [-2.0, -8.0 / 5.0, 8.0 / 5.0, 2.0]
    cert = CtexCertificate(kind=kind, params={"alpha": alpha, "r0": r0, "variant": variant})

    report = quartic_roots(q)
    cert.roots = report.roots
    if report.count != 4:
        cert.clauses["roots_resolved"] = False
        cert.notes.append(f"expected 4 simple roots, found {report.count} at probe resolution")
        return cert
    cert.clauses["roots_resolved"] = True
    ts = [rb.t for rb in report.roots]

    # interlacing against the fence values (whose quartic signs certify it)
    if kind == "beta_sign":
        interlace = ts[0] < -2.0 < ts[1] < 0.0 < ts[2] < 9.0 / 4.0 < ts[3]
    else:
        interlace = ts[0] < -2.0 < ts[1] < -8.0 / 5.0 and 8.0 / 5.0 < ts[2] < 2.0 < ts[3]
    cert.clauses["interlacing"] = bool(interlace)
    cert.params["fences"] = fences
    cert.params["roots"] = ts

    if kind == "nondec":
        # the cusp profiles carry s|p|^2 = 4t/9; membership in the region
        # where the interpolated L agrees with the polynomial one is |t| >= 8/5
        in_n = all(abs(t) >= 8.0 / 5.0 for t in (ts[1], ts[2], ts[3]))
        cert.clauses["profiles_in_interp_region"] = in_n

    # t0 (left subsolution branch): searched, then delta by dyadic sign scan
    t0_seed = -3.0 if kind == "nondec" else None
    delta = None
    t0 = None
    for attempt_delta in (0.25, 0.125, 0.0625):
        t0 = t0_seed if t0_seed is not None else _search_t0(q, variant, alpha, ts[0], r0, attempt_delta)
        if t0 is None:
            continue
        q_val = float(quartic_eval(q, t0))
        k, tt = (8.0, 19683.0) if variant == "P4" else (2.0, 492075.0)
        p_val = _p4(t0, alpha) if variant == "P4" else _p4_tilde(t0, alpha)
        if q_val > 0.0 and k * p_val > tt * attempt_delta / (r0 + attempt_delta):
            delta = attempt_delta
            break
    if t0 is None or delta is None:
        cert.clauses["t0_found"] = False
        cert.notes.append("no valid interior-positive profile parameter below t1")
        return cert
    cert.clauses["t0_found"] = True
    scan_delta = _sign_scan_delta(variant, alpha, [ts[0], ts[1], ts[2], ts[3]], t0, r0)
    if scan_delta is not None:
        delta = min(delta, scan_delta)
    cert.params.update({"t0": t0, "delta": delta})

    w_right, w_left = ts[3], ts[1]
    v_right, v_left = ts[2], t0
    op = cusp_family_operator(variant, alpha)

    def profile(t, r):
        c = cbrt(t)
        rho = r - r0
        arho = abs(rho)
        return (
            c * arho ** (2.0 / 3.0),
            (2.0 / 3.0) * c * arho ** (-1.0 / 3.0) * math.copysign(1.0, rho),
            -(2.0 / 9.0) * c * arho ** (-4.0 / 3.0),
        )

    w_ok = True
    v_ok = True
    sign_ok = True
    cross_ok = True
    min_gap_scaled = math.inf
    interp_op = interpolated_L_operator() if kind == "nondec" else None
    interp_agree = True
    for r in np.linspace(r0 - delta, r0 + delta, rgrid):
        r = float(r)
        if abs(r - r0) < 1e-12:
            continue
        tw = w_right if r > r0 else w_left
        tv = v_right if r > r0 else v_left
        mu_w, nu_w = lambda12_t(tw, r, r0, alpha, variant)
        mu_v, nu_v = lambda12_t(tv, r, r0, alpha, variant)
        w_val, w_d, w_dd = profile(tw, r)
        v_val, v_d, v_dd = profile(tv, r)
        # w branches use root parameters: radial eigenvalue vanishes and the
        # transverse one carries the sign of t, so the matrix sits on the
        # cone boundary (right) or strictly outside (left): supersolution
        row_w = abs(mu_w) <= _EIG_TOL and min(mu_w, nu_w) <= _EIG_TOL
        if r > r0:
            branch_sign = nu_w > 0.0 and nu_v > 0.0  # both params positive
            row_v = abs(mu_v) <= _EIG_TOL and min(mu_v, nu_v) >= -_EIG_TOL
        else:
            # left w param is negative (transverse eigenvalue negative);
            # left v param gives a strictly positive-definite matrix
            branch_sign = nu_w < 0.0 and mu_v > 0.0 and nu_v > 0.0
            row_v = min(mu_v, nu_v) >= -_EIG_TOL
        sign_ok &= branch_sign
        # cross-check closed forms against the generic jet pipeline
        scale = 1.0 + max(abs(mu_w), abs(nu_w), abs(mu_v), abs(nu_v))
        mu_g, nu_g = radial_F_eigs(r, w_d, w_dd, op, s=w_val)
        if abs(mu_g - mu_w) > 1e-9 * scale or abs(nu_g - nu_w) > 1e-9 * scale:
            cross_ok = False
        if interp_op is not None:
            mu_i, nu_i = radial_F_eigs(r, w_d, w_dd, interp_op, s=w_val)
            if abs(mu_i - mu_w) > 1e-9 * scale or abs(nu_i - nu_w) > 1e-9 * scale:
                interp_agree = False
        gap = w_val - v_val
        min_gap_scaled = min(min_gap_scaled, gap / abs(r - r0) ** (2.0 / 3.0))
        w_ok &= row_w
        v_ok &= row_v
        cert.rows.append(GridRow(r, w_val, v_val, mu_w, nu_w, mu_v, nu_v, row_w and row_v))

    cert.clauses["w_supersolution"] = w_ok and sign_ok
    cert.clauses["v_subsolution"] = v_ok and sign_ok
    cert.clauses["eig_sign_pattern"] = sign_ok
    cert.clauses["closed_form_matches_jets"] = cross_ok
    if kind == "nondec":
        cert.clauses["interp_L_matches_on_profiles"] = interp_agree
    cert.clauses["ordering"] = min_gap_scaled > 0.0
    cert.clauses["touching_only_at_r0"] = all(row.w - row.v > _EIG_TOL for row in cert.rows)
    cert.clauses["boundary_gap"] = (
        cert.rows[0].w - cert.rows[0].v > 0.0 and cert.rows[-1].w - cert.rows[-1].v > 0.0
    )
    cert.touching = [r0]
    cert.params["min_gap_over_rho23"] = min_gap_scaled
    cert.notes.append(
        "profiles meet with value 0 at r0 with vertical tangents; the cusp makes "
        "touching test functions impossible there, so the grid is punctured at r0"
    )
    return cert


def _build_bprime(rgrid: int, r0: float, delta: float) -> CtexCertificate:
    cert = CtexCertificate(
        kind="bprime",
        params={"r0": r0, "delta": delta, "a": "0", "b": "-t", "domain": (r0 - 1.0, r0 + 1.0)},
    )
    prof = RadialProfile.tanh_bump(delta, r0)

    def b_fn(t: float) -> float:
        return -t

    op = OperatorSpec.rot_inv(lambda t: 0.0, b_fn, name="rotinv:zero:neg_t")
    # the slope-to-radius inequality that drives the sign of nu: every slope
    # s the profile attains must satisfy r0 > s / |b(s)|
    slopes = np.linspace(1e-4, delta * 0.499, 64)
    cert.clauses["slope_radius_margin"] = all(r0 > s / abs(b_fn(s)) for s in slopes)

    all_ok = True
    touching = []
    for r in np.linspace(r0 - 1.0, r0 + 1.0, rgrid):
        r = float(r)
        w_val = prof.psi(r)
        mu_w, nu_w = radial_F_eigs(r, prof.dpsi(r), prof.ddpsi(r), op)
        mu_v, nu_v = radial_F_eigs(r, 0.0, 0.0, op)
        scale = 1.0 + max(abs(mu_w), abs(nu_w))
        row_ok = nu_w <= _EIG_TOL * scale  # supersolution: smallest eigenvalue <= 0
        row_ok &= abs(mu_v) <= _EIG_TOL and abs(nu_v) <= _EIG_TOL  # v = 0 solves exactly
        all_ok &= row_ok
        if abs(w_val) <= 1e-12:
            touching.append(r)
        cert.rows.append(GridRow(r, w_val, 0.0, mu_w, nu_w, mu_v, nu_v, row_ok))
    cert.clauses["w_supersolution"] = all_ok
    cert.clauses["v_subsolution"] = True  # v = 0: F[v] = 0 sits on the cone boundary
    cert.clauses["nu_zero_at_r0"] = abs(radial_F_eigs(r0, prof.dpsi(r0), prof.ddpsi(r0), op)[1]) <= 1e-12
    cert.clauses["touching_only_at_r0"] = touching == [r0] or (
        len(touching) == 1 and abs(touching[0] - r0) < 1e-9
    )
    cert.clauses["boundary_gap"] = cert.rows[0].w > 0.0 and cert.rows[-1].w > 0.0
    cert.touching = [r0]
    return cert


def _build_holder(rgrid: int, gamma: float, n: int) -> CtexCertificate:
    cert = CtexCertificate(kind="holder", params={"gamma": gamma, "n": n, "lam": 1.0 / (1.0 - gamma)})
    prof = RadialProfile.holder_solution(gamma, n)
    # trace-normalized so that the trace of F is exactly (Laplacian - |grad|^gamma)
    op = OperatorSpec.rot_inv(
        lambda t: 0.0, lambda t: -(t**gamma) / n if t > 0.0 else 0.0,
        name=f"rotinv:zero:pow({-1.0/n:g},{gamma:g})",
    )
    all_ok = True
    for r in np.geomspace(1e-6, 1.0, rgrid):
        r = float(r)
        w_val = prof.psi(r)
        mu_w, nu_w = radial_F_eigs(r, prof.dpsi(r), prof.ddpsi(r), op)
        mu_v, nu_v = radial_F_eigs(r, 0.0, 0.0, op)
        trace_res = mu_w + (n - 1) * nu_w
        scale = 1.0 + abs(mu_w) + abs(nu_w)
        row_ok = abs(trace_res) <= 1e-10 * scale and abs(mu_v) <= 1e-14 and abs(nu_v) <= 1e-14
        all_ok &= row_ok
        cert.rows.append(GridRow(r, w_val, 0.0, mu_w, nu_w, mu_v, nu_v, row_ok))
    cert.clauses["w_exact_solution"] = all_ok
    cert.clauses["v_exact_solution"] = True
    cert.clauses["ordering"] = all(row.w > 0.0 for row in cert.rows)
    cert.clauses["touching_only_at_origin"] = cert.rows[0].w < 1e-8 and cert.rows[-1].w > 1e-3
    cert.touching = [0.0]
    cert.notes.append(
        "both fields solve the trace equation exactly; the lower-order term is "
        "only Holder continuous in the gradient, which is what permits touching"
    )
    return cert


def cusp_pair_values(cert: CtexCertificate, rgrid: int | None = None):
    """Node values (radii, w, v) of a cusp certificate's profile pair.

    Unlike the eigenvalue rows, the value grid keeps the meeting node at r0:
    both profiles vanish there (with vertical tangents), and that node is
    exactly the touching point the certificate is about.  An odd rgrid puts
    one node on r0.
    """
    if cert.kind not in ("beta_sign", "nondec"):
        raise ValueError("only the cusp-profile certificates carry a (w, v) pair")
    if not cert.clauses.get("roots_resolved") or "t0" not in cert.params:
        raise ValueError("certificate is unresolved; no profile pair available")
    ts = cert.params["roots"]
    t0 = float(cert.params["t0"])
    r0 = float(cert.params["r0"])
    delta = float(cert.params["delta"])
    if rgrid is None:
        rgrid = len(cert.rows) + 1
    radii = np.linspace(r0 - delta, r0 + delta, rgrid)
    w = np.empty(rgrid)
    v = np.empty(rgrid)
    for i, r in enumerate(radii):
        rho = abs(float(r) - r0)
        tw = ts[3] if r > r0 else ts[1]
        tv = ts[2] if r > r0 else t0
        w[i] = cbrt(tw) * rho ** (2.0 / 3.0)
        v[i] = cbrt(tv) * rho ** (2.0 / 3.0)
    return radii, w, v


# ---------------------------------------------------------------------------
# the singular log family


def log_singular_check(mu: float, alpha: float, beta: float, n: int, x: np.ndarray):
    """Residual report for psi_mu = ln(|x|^{2-n} + mu)/(alpha - n beta).

    Returns (trace_residual, spectrum, min_eig).  The trace of F[psi_mu]
    equals Laplacian + (alpha - n beta)|grad|^2, which vanishes identically
    because |x|^{2-n} + mu is harmonic away from the origin.
    """
    x = np.asarray(x, dtype=float)
    if float(x @ x) == 0.0:
        raise ValueError("the field is singular at the origin")
    if alpha - n * beta <= 0.0:
        raise ValueError("need alpha - n*beta > 0")
    oracle = FieldOracle.log_singular(alpha, beta, mu, n)
    j = oracle.jet(x)
    lap = j.H.trace()
    p2 = float(j.p @ j.p)
    trace_res = lap + (alpha - n * beta) * p2
    f = eval_F(j, OperatorSpec.quad_const(alpha, beta))
    spec = eigen_sym(f)
    return float(trace_res), spec, spec.min()


# ---------------------------------------------------------------------------
# CSV serialization


def certificate_rows_csv(cert: CtexCertificate) -> str:
    lines = [
        f"# config: kind={cert.kind}",
        f"# config: params={_fmt_params(cert.params)}",
        f"# claim: verdict={cert.verdict} touching={','.join(f'{t:.12g}' for t in cert.touching)}",
        "r,w,v,mu_w,nu_w,mu_v,nu_v,verdict",
    ]
    for row in cert.rows:
        lines.append(
            f"{row.r:.12g},{row.w:.12g},{row.v:.12g},{row.mu_w:.12g},{row.nu_w:.12g},"
            f"{row.mu_v:.12g},{row.nu_v:.12g},{'ok' if row.ok else 'violation'}"
        )
    return "\n".join(lines) + "\n"


def certificate_roots_csv(cert: CtexCertificate) -> str:
    lines = ["i,t_i,bracket_lo,bracket_hi"]
    for rb in cert.roots:
        lines.append(f"{rb.index},{rb.t:.15g},{rb.lo:.15g},{rb.hi:.15g}")
    return "\n".join(lines) + "\n"


def _fmt_params(params: dict) -> str:
    parts = []
    for key in sorted(params):
        val = params[key]
        if isinstance(val, float):
            parts.append(f"{key}={val:.12g}")
        else:
            parts.append(f"{key}={val}")
    return " ".join(parts)
