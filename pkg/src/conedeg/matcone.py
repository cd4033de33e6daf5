"""Symmetric matrices, elementary symmetric polynomials, and open matrix cones.

The cones handled here are the admissible sets U for equations of the form
F[psi] in dU: open sets of symmetric matrices that are invariant under
positive scaling and stable under adding a positive definite matrix.  The
bundled kinds cover the sigma_k (Garding) cones, the positive definite cone,
the "at least one positive eigenvalue" set, the trace half-space, complements
of negated closed cones, and negations of any of these.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "SymMatrix",
    "Spectrum",
    "ConeSpec",
    "ConeClass",
    "sigma_k",
    "sigma_all",
    "sigma_k_bruteforce",
    "eigen_sym",
    "in_cone",
    "cone_margin",
    "classify",
    "axiom_check",
    "parse_cone",
    "format_cone",
]

_MIN_N = 1
_MAX_N = 16


def _packed_size(n: int) -> int:
    return n * (n + 1) // 2


def _tri_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n)


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix with single storage per unordered index pair.

    Only the upper triangle is stored (n*(n+1)/2 floats), so symmetry is
    structural rather than a runtime property that can drift.
    """

    n: int
    tri: np.ndarray  # packed upper triangle, row-major

    def __post_init__(self) -> None:
        if not (_MIN_N <= self.n <= _MAX_N):
            raise ValueError(f"dimension must be in [{_MIN_N}, {_MAX_N}], got {self.n}")
        tri = np.asarray(self.tri, dtype=float)
        if tri.shape != (_packed_size(self.n),):
            raise ValueError(
                f"packed storage for n={self.n} needs {_packed_size(self.n)} entries, "
                f"got shape {tri.shape}"
            )
        if not np.all(np.isfinite(tri)):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "tri", tri)

    @classmethod
    def from_dense(cls, m: np.ndarray, *, tol: float = 1e-12) -> "SymMatrix":
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        n = m.shape[0]
        skew = np.max(np.abs(m - m.T)) if n else 0.0
        scale = 1.0 + np.max(np.abs(m))
        if skew > tol * scale:
            raise ValueError(f"matrix is not symmetric (asymmetry {skew:.3e})")
        sym = 0.5 * (m + m.T)
        return cls(n, sym[_tri_indices(n)])

    @classmethod
    def eye(cls, n: int, scale: float = 1.0) -> "SymMatrix":
        return cls.from_dense(scale * np.eye(n))

    @classmethod
    def outer(cls, p: np.ndarray) -> "SymMatrix":
        p = np.asarray(p, dtype=float)
        return cls.from_dense(np.outer(p, p))

    def dense(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        iu = _tri_indices(self.n)
        m[iu] = self.tri
        m.T[iu] = self.tri
        return m

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return SymMatrix(self.n, self.tri + other.tri)

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return SymMatrix(self.n, self.tri - other.tri)

    def scale(self, c: float) -> "SymMatrix":
        return SymMatrix(self.n, c * self.tri)

    def trace(self) -> float:
        idx = np.cumsum([0] + list(range(self.n, 1, -1)))
        return float(self.tri[idx].sum())

    def frob(self) -> float:
        return float(np.linalg.norm(self.dense()))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a symmetric matrix, sorted ascending."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.sort(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.values)

    def min(self) -> float:
        return float(self.values[0])

    def max(self) -> float:
        return float(self.values[-1])


class ConeClass(Enum):
    OUTSIDE = 0
    BOUNDARY = 1
    INTERIOR = 2


@dataclass(frozen=True)
class ConeSpec:
    """One of the admissible open matrix cones, by kind.

    kind        | meaning (on the eigenvalue vector lam)
    ------------|-----------------------------------------------------
    gamma_k     | sigma_j(lam) > 0 for all j <= k
    posdef      | all lam_i > 0
    one_pos     | max lam_i > 0
    trace       | sum lam_i > 0
    neg_gamma_c | complement of the negated closed gamma_k cone
    neg         | {M : -M in inner}
    """

    kind: str
    k: int = 0
    inner: "ConeSpec | None" = None
    n: int = 0  # ambient dimension; 0 = works at any dimension

    _KINDS = ("gamma_k", "posdef", "one_pos", "trace", "neg_gamma_c", "neg")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.kind in ("gamma_k", "neg_gamma_c"):
            if self.k < 1:
                raise ValueError("gamma_k cones need k >= 1")
            if self.n and self.k > self.n:
                raise ValueError(f"k={self.k} exceeds dimension n={self.n}")
        if self.kind == "neg" and self.inner is None:
            raise ValueError("neg cone needs an inner cone")

    @classmethod
    def gamma(cls, k: int, n: int = 0) -> "ConeSpec":
        return cls("gamma_k", k=k, n=n)

    @classmethod
    def posdef(cls, n: int = 0) -> "ConeSpec":
        return cls("posdef", n=n)

    @classmethod
    def one_pos(cls, n: int = 0) -> "ConeSpec":
        return cls("one_pos", n=n)

    @classmethod
    def trace(cls, n: int = 0) -> "ConeSpec":
        return cls("trace", n=n)

    @classmethod
    def neg_gamma_complement(cls, k: int, n: int = 0) -> "ConeSpec":
        return cls("neg_gamma_c", k=k, n=n)

    @classmethod
    def negated(cls, inner: "ConeSpec", n: int = 0) -> "ConeSpec":
        return cls("neg", inner=inner, n=n)


def parse_cone(text: str) -> ConeSpec:
    """Parse the textual cone form used by the CLI and by problem files."""
    text = text.strip()
    if text == "posdef":
        return ConeSpec.posdef()
    if text == "one_pos":
        return ConeSpec.one_pos()
    if text == "trace":
        return ConeSpec.trace()
    if text.startswith("gamma_k:"):
        return ConeSpec.gamma(int(text.split(":", 1)[1]))
    if text.startswith("neg_gamma_c:"):
        return ConeSpec.neg_gamma_complement(int(text.split(":", 1)[1]))
    if text.startswith("neg:"):
        return ConeSpec.negated(parse_cone(text.split(":", 1)[1]))
    raise ValueError(f"cannot parse cone spec {text!r}")


def format_cone(spec: ConeSpec) -> str:
    if spec.kind == "gamma_k":
        return f"gamma_k:{spec.k}"
    if spec.kind == "neg_gamma_c":
        return f"neg_gamma_c:{spec.k}"
    if spec.kind == "neg":
        return f"neg:{format_cone(spec.inner)}"
    return spec.kind


# ---------------------------------------------------------------------------
# elementary symmetric polynomials


def sigma_all(lam: np.ndarray | Spectrum) -> np.ndarray:
    """All elementary symmetric polynomials sigma_0..sigma_n of lam.

    Computed by the coefficient recurrence of prod_i (1 + lam_i t): after
    absorbing lam_i, e_k <- e_k + lam_i * e_{k-1}.  O(n^2), no cancellation
    beyond what the polynomial itself requires.
    """
    if isinstance(lam, Spectrum):
        lam = lam.values
    lam = np.asarray(lam, dtype=float)
    n = len(lam)
    e = np.zeros(n + 1)
    e[0] = 1.0
    for i in range(n):
        for k in range(i + 1, 0, -1):
            e[k] += lam[i] * e[k - 1]
    return e


def sigma_k(lam: np.ndarray | Spectrum, k: int) -> float:
    """sigma_k(lam), the k-th elementary symmetric polynomial."""
    if isinstance(lam, Spectrum):
        lam = lam.values
    lam = np.asarray(lam, dtype=float)
    if not 0 <= k <= len(lam):
        raise ValueError(f"k={k} out of range for n={len(lam)}")
    return float(sigma_all(lam)[k])


def sigma_k_bruteforce(lam: np.ndarray, k: int) -> float:
    """Subset-enumeration oracle for sigma_k; exponential, intended for n <= 8."""
    lam = np.asarray(lam, dtype=float)
    if k == 0:
        return 1.0
    total = 0.0
    for idx in itertools.combinations(range(len(lam)), k):
        total += float(np.prod(lam[list(idx)]))
    return total


# ---------------------------------------------------------------------------
# eigen-solver: cyclic Jacobi


def eigen_full(m: SymMatrix | np.ndarray, *, max_sweeps: int = 100) -> tuple[Spectrum, np.ndarray]:
    """Eigen-decomposition M = Q diag(lam) Q^T by cyclic Jacobi rotations.

    Sweeps annihilate every off-diagonal pair in turn until the off-diagonal
    Frobenius mass is below 1e-14 * ||M||_F.  For n <= 16 this converges in a
    handful of sweeps; the 100-sweep cap is a safety net, not a tuning knob.
    Returns (spectrum sorted ascending, Q with matching column order).
    """
    a = m.dense().copy() if isinstance(m, SymMatrix) else np.array(m, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return Spectrum(np.zeros(n)), v
    tol = 1e-14 * norm

    def offnorm(mat: np.ndarray) -> float:
        # summing the off-diagonal entries directly; the ||M||_F^2 - sum(diag^2)
        # shortcut cancels catastrophically once the matrix is nearly diagonal
        block = mat.copy()
        np.fill_diagonal(block, 0.0)
        return float(np.linalg.norm(block))

    for _ in range(max_sweeps):
        off = offnorm(a)
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * norm:
                    continue
                # classic rotation choice: tan(2 theta) = 2 apq / (aqq - app)
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0.0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    off = offnorm(a)
    if off > tol:
        raise RuntimeError(f"Jacobi failed to converge in {max_sweeps} sweeps (off={off:.3e})")
    d = np.diag(a).copy()
    order = np.argsort(d, kind="stable")
    return Spectrum(d[order]), v[:, order]


def eigen_sym(m: SymMatrix | np.ndarray, *, max_sweeps: int = 100) -> Spectrum:
    """Sorted eigenvalues of a symmetric matrix (see eigen_full)."""
    return eigen_full(m, max_sweeps=max_sweeps)[0]


# ---------------------------------------------------------------------------
# membership, classification, axioms


def _closed_gamma_k(lam: np.ndarray, k: int) -> bool:
    e = sigma_all(lam)
    return bool(np.all(e[1 : k + 1] >= 0.0))


def cone_margin(lam: np.ndarray | Spectrum, spec: ConeSpec) -> float:
    """Signed margin: positive inside U, negative outside, ~0 on dU.

    The margin is the minimum slack over the defining inequalities (a proxy
    for distance, not a calibrated distance).
    """
    if isinstance(lam, Spectrum):
        lam = lam.values
    lam = np.asarray(lam, dtype=float)
    if spec.kind == "posdef":
        return float(lam.min())
    if spec.kind == "one_pos":
        return float(lam.max())
    if spec.kind == "trace":
        return float(lam.sum())
    if spec.kind == "gamma_k":
        e = sigma_all(lam)
        return float(np.min(e[1 : spec.k + 1]))
    if spec.kind == "neg_gamma_c":
        # inside iff -lam violates some closed gamma_k inequality
        e = sigma_all(-lam)
        return float(np.max(-e[1 : spec.k + 1]))
    if spec.kind == "neg":
        return cone_margin(-lam, spec.inner)
    raise ValueError(f"unknown cone kind {spec.kind!r}")


def in_cone(lam: np.ndarray | Spectrum, spec: ConeSpec) -> bool:
    """Open-cone membership of an eigenvalue vector."""
    m = lam.values if isinstance(lam, Spectrum) else np.asarray(lam)
    if spec.n and len(m) != spec.n:
        raise ValueError(f"spectrum has length {len(m)}, cone expects n={spec.n}")
    return cone_margin(lam, spec) > 0.0


def classify(m: SymMatrix | np.ndarray, spec: ConeSpec, tol: float = 1e-9) -> tuple[ConeClass, float]:
    """Classify a symmetric matrix against a cone at tolerance tol.

    Returns (verdict, margin).  BOUNDARY means |margin| <= tol; the verdict
    is scale-equivariant in the sense that classify(c*M) for c > 0 never
    jumps across the boundary band in the wrong direction (membership signs
    of all sigma_j are preserved under positive scaling).
    """
    mat = m if isinstance(m, SymMatrix) else SymMatrix.from_dense(np.asarray(m))
    margin = cone_margin(eigen_sym(mat), spec)
    if margin > tol:
        return ConeClass.INTERIOR, margin
    if margin < -tol:
        return ConeClass.OUTSIDE, margin
    return ConeClass.BOUNDARY, margin


@dataclass
class AxiomReport:
    """Outcome of sampling-based cone axiom checks."""

    cone: str
    n: int
    samples: int
    results: dict = field(default_factory=dict)  # axiom name -> (ok, witness or None)

    def ok(self) -> bool:
        return all(flag for flag, _ in self.results.values())


def _sample_member(rng: np.random.Generator, n: int, spec: ConeSpec, tries: int = 2000) -> np.ndarray | None:
    """Rejection-sample an eigenvalue vector inside the open cone."""
    for _ in range(tries):
        lam = rng.normal(scale=2.0, size=n)
        if in_cone(lam, spec):
            return lam
    return None


def axiom_check(spec: ConeSpec, samples: int = 200, seed: int = 0, n: int | None = None) -> AxiomReport:
    """Sampling check of the cone axioms, with witnesses on failure.

    Checked, each on `samples` random draws:
      add_posdef     A in U, B > 0        =>  A + B in U
      scale_pos      A in U, c > 0        =>  c A in U
      scale_sub      A in U, c in (0,1)   =>  c A in U   (same statement, sub-unit range)
      scale_super    A in U, c > 1        =>  c A in U
      trace_positive A in U               =>  tr A > 0

    Failures are reported, not raised: several bundled kinds (one_pos,
    neg_gamma_c for k < n is fine, but e.g. trace_positive fails for
    neg_gamma_c with small k on purpose) genuinely violate some axiom and the
    report is the artifact.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = n or spec.n or 3
    rng = np.random.default_rng(seed)
    report = AxiomReport(cone=format_cone(spec), n=n, samples=samples)

    def record(name: str, ok: bool, witness) -> None:
        report.results[name] = (ok, witness)

    checks = {
        "add_posdef": None,
        "scale_pos": None,
        "scale_sub": None,
        "scale_super": None,
        "trace_positive": None,
    }
    for name in checks:
        checks[name] = (True, None)

    for _ in range(samples):
        lam = _sample_member(rng, n, spec)
        if lam is None:
            for name in checks:
                checks[name] = (False, {"reason": "no member found by sampling"})
            break
        if checks["add_posdef"][0]:
            # A + B mixes eigenbases, so this one needs dense matrices
            q = _random_orthogonal(rng, n)
            a_m = q @ np.diag(lam) @ q.T
            b_m = _random_spd(rng, n)
            s = eigen_sym(SymMatrix.from_dense(a_m + b_m))
            if not in_cone(s, spec):
                checks["add_posdef"] = (False, {"lam_a": lam.tolist(), "eig_sum": s.values.tolist()})
        for name, c in (
            ("scale_pos", float(rng.uniform(0.01, 100.0))),
            ("scale_sub", float(rng.uniform(0.01, 0.99))),
            ("scale_super", float(rng.uniform(1.01, 100.0))),
        ):
            if checks[name][0] and not in_cone(c * lam, spec):
                checks[name] = (False, {"lam": lam.tolist(), "c": c})
        if checks["trace_positive"][0] and not lam.sum() > 0.0:
            checks["trace_positive"] = (False, {"lam": lam.tolist(), "trace": float(lam.sum())})

    for name, payload in checks.items():
        record(name, *payload)
    return report


def _random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def _random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    q = _random_orthogonal(rng, n)
    return q @ np.diag(rng.uniform(0.05, 2.0, size=n)) @ q.T
