"""Derivative of renormalization in the coordinates (alpha, beta, b, eta_L, eta_R).

The Jacobian is assembled column by column from central differences. Each
coordinate gets its own step, h times a scale that keeps the perturbed maps
inside the same combinatorial class: slopes and b move by at most the gap
margin, nonlinearity coefficients by at most margin/slope.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from pydantic import BaseModel, Field

from . import diffeo as _diffeo
from .diffeo import Diffeo
from .errors import (
    DomainError,
    EigenSolverError,
    IterationCapError,
    NotRenormalizableError,
    StepTooLargeError,
)
from .gapmap import GapMap, Sign, build_gap_map
from .renorm import RenormStep, renormalize, renormalized_coordinates

logger = logging.getLogger(__name__)

DEFAULT_H = 1e-6
MAX_HALVINGS = 4
JACOBIAN_FIT_TOL = 1e-7


# Coordinates


def _coeffs(d: Diffeo, m: int) -> np.ndarray:
    return d.resized(m).coeffs


def to_vector(f: GapMap, m: int) -> np.ndarray:
    return np.concatenate([[f.alpha, f.beta, f.b], _coeffs(f.phi_L, m), _coeffs(f.phi_R, m)])


def from_vector(v: Sequence[float], m: int) -> GapMap:
    v = np.asarray(v, dtype=float)
    if v.shape != (3 + 2 * m,):
        raise DomainError(f"coordinate vector must have length {3 + 2 * m}", length=int(v.size))
    return build_gap_map(v[0], v[1], v[2], Diffeo(v[3 : 3 + m]), Diffeo(v[3 + m :]))


# Jacobian


@dataclass(frozen=True)
class Jacobian:
    matrix: np.ndarray
    m: int
    base_point: GapMap
    I_prime_len: float
    fd_step: float
    k: int
    sigma: Sign
    halvings: int = 0

    @property
    def A(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def B(self) -> np.ndarray:
        return self.matrix[:3, 3:]

    @property
    def C(self) -> np.ndarray:
        return self.matrix[3:, :3]

    @property
    def D(self) -> np.ndarray:
        return self.matrix[3:, 3:]


def step_scales(f: GapMap, margin: float, m: int) -> np.ndarray:
    scales = np.empty(3 + 2 * m)
    scales[0] = min(f.alpha, margin)
    scales[1] = min(f.beta, margin)
    scales[2] = min(f.b, 1.0 - f.b, margin)
    scales[3 : 3 + m] = min(1.0, margin / f.alpha)
    scales[3 + m :] = min(1.0, margin / f.beta)
    return scales


class _Broken(Exception):
    pass


def _renormalized_vector(v: np.ndarray, m: int, base: RenormStep, fit_tol: float) -> np.ndarray:
    try:
        step = renormalize(from_vector(v, m), m=m, fit_tol=fit_tol)
    except (DomainError, NotRenormalizableError, IterationCapError) as e:
        raise _Broken(e.message)
    if step.k != base.k or step.sigma is not base.sigma:
        raise _Broken(f"combinatorics changed to ({step.sigma.value},{step.k})")
    return to_vector(step.renormalized, m)


def jacobian(
    f: GapMap,
    m: int,
    h: float = DEFAULT_H,
    fit_tol: float = JACOBIAN_FIT_TOL,
    max_halvings: int = MAX_HALVINGS,
) -> Jacobian:
    base = renormalize(f, m=m, fit_tol=fit_tol)
    v0 = to_vector(f, m)
    scales = step_scales(f, base.margin, m)
    n = v0.size
    matrix = np.empty((n, n))
    worst = 0
    for j in range(n):
        step = h * scales[j]
        for halving in range(max_halvings + 1):
            e = np.zeros(n)
            e[j] = step
            try:
                plus = _renormalized_vector(v0 + e, m, base, fit_tol)
                minus = _renormalized_vector(v0 - e, m, base, fit_tol)
            except _Broken as broken:
                if halving == max_halvings:
                    raise StepTooLargeError(
                        f"column {j}: {broken}; step still too large after {max_halvings} halvings",
                        column=j,
                        step=step,
                    )
                logger.warning(f"[JACOBIAN] column {j}: {broken}, halving step {step:.3e}")
                step *= 0.5
                continue
            matrix[:, j] = (plus - minus) / (2.0 * step)
            worst = max(worst, halving)
            break
    logger.info(
        f"[JACOBIAN] {n}x{n} at k={base.k} sigma={base.sigma.value} |I'|={base.I_prime_len:.3e}"
    )
    return Jacobian(
        matrix=matrix,
        m=m,
        base_point=f,
        I_prime_len=base.I_prime_len,
        fd_step=h,
        k=base.k,
        sigma=base.sigma,
        halvings=worst,
    )


def b_tilde_eta_row(f: GapMap, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Analytic derivatives of b~ with respect to the eta_L and eta_R coefficients.

    The endpoints l and r of I' are pushed along the return words together
    with their derivatives in each coefficient; a branch contributes
    alpha(1-b) * dphi_L(u) or beta*b * dphi_R(u) where it is applied.
    """
    geo = renormalized_coordinates(f)
    b = f.b
    basis = np.eye(m)

    def pushed(word: str) -> Tuple[float, np.ndarray]:
        y = 0.0
        dy = np.zeros(2 * m)
        for letter in word:
            if letter == "L":
                u = min(1.0, max(0.0, (y - (b - 1.0)) / (1.0 - b)))
                local = np.zeros(2 * m)
                local[:m] = [f.alpha * (1.0 - b) * _diffeo.evaluation_derivative(f.phi_L, u, e) for e in basis]
                dy = float(f.left_derivative(y)) * dy + local
                y = float(f.left_branch(y))
            else:
                u = min(1.0, max(0.0, y / b))
                local = np.zeros(2 * m)
                local[m:] = [f.beta * b * _diffeo.evaluation_derivative(f.phi_R, u, e) for e in basis]
                dy = float(f.right_derivative(y)) * dy + local
                y = float(f.right_branch(y))
        return y, dy

    l, dl = pushed(geo.right_word)
    r, dr = pushed(geo.left_word)
    row = (r * dl - l * dr) / (r - l) ** 2
    return row[:m], row[m:]


# Block magnitudes and spectrum


class BlockReport(BaseModel):
    K1: float
    K2: float
    K3: float
    K4: float
    K4_signed: float
    M1: float
    M2: float
    eps_max: float
    I_prime_len: float


def block_report(J: Jacobian) -> BlockReport:
    M, m = J.matrix, J.m
    eta_L_row = M[2, 3 : 3 + m]
    top = np.abs(M[:2, :])
    return BlockReport(
        K1=float(M[2, 0]),
        K2=float(M[2, 1]),
        K3=float(M[2, 2]),
        K4=float(np.max(np.abs(eta_L_row))),
        K4_signed=float(eta_L_row[np.argmax(np.abs(eta_L_row))]),
        M1=float(np.sum(np.abs(M[3 : 3 + m, 2]))),
        M2=float(np.sum(np.abs(M[3 + m :, 2]))),
        eps_max=float(max(np.max(top), np.max(np.abs(J.D)))),
        I_prime_len=J.I_prime_len,
    )


def _as_matrix(J: Union[Jacobian, np.ndarray]) -> np.ndarray:
    return J.matrix if isinstance(J, Jacobian) else np.asarray(J, dtype=float)


def spectrum(J: Union[Jacobian, np.ndarray]) -> np.ndarray:
    """Eigenvalue magnitudes, largest first."""
    M = _as_matrix(J)
    if not np.all(np.isfinite(M)):
        raise EigenSolverError("matrix has non-finite entries")
    try:
        values = scipy.linalg.eigvals(M)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"eigenvalue computation failed: {e}")
    return np.sort(np.abs(values))[::-1]


class SplittingReport(BaseModel):
    passes: bool
    delta: float
    unstable_count: int
    dominant: float
    second: float
    gap_ratio: float
    magnitudes: List[float]


def splitting_verdict(J: Union[Jacobian, np.ndarray], delta: float) -> SplittingReport:
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0,1)", delta=delta)
    mags = spectrum(J)
    unstable = int(np.sum(mags >= 1.0 / delta))
    dominant = float(mags[0])
    second = float(mags[1]) if mags.size > 1 else 0.0
    passes = unstable == 1 and bool(np.all(mags[1:] <= delta))
    return SplittingReport(
        passes=passes,
        delta=delta,
        unstable_count=unstable,
        dominant=dominant,
        second=second,
        gap_ratio=second / dominant if dominant > 0.0 else math.inf,
        magnitudes=mags.tolist(),
    )


@dataclass(frozen=True)
class ReducedRoots:
    lambda_plus: Union[float, complex]
    lambda_minus: Union[float, complex]
    is_complex: bool


def reduced_model_roots(K3: float, K4: float, M1: float) -> ReducedRoots:
    """Roots of lambda^2 - K3 lambda - K4 M1."""
    disc = K3 * K3 + 4.0 * K4 * M1
    if disc < 0.0:
        root = cmath.sqrt(disc)
        return ReducedRoots((K3 + root) / 2.0, (K3 - root) / 2.0, True)
    root = math.sqrt(disc)
    return ReducedRoots((K3 + root) / 2.0, (K3 - root) / 2.0, False)


# Cones


class ConeParams(BaseModel):
    r: float = Field(gt=0, lt=1)
    delta: Optional[float] = Field(default=None, gt=0)

    def halved(self) -> "ConeParams":
        return ConeParams(r=self.r / 2, delta=None if self.delta is None else self.delta / 2)


def cone_contains(v: Sequence[float], p: ConeParams) -> bool:
    """|da| + |dbeta| <= r|db| and, when delta is set, |d eta_L| + |d eta_R| <= delta|db|."""
    v = np.asarray(v, dtype=float)
    db = abs(v[2])
    if abs(v[0]) + abs(v[1]) > p.r * db:
        return False
    if p.delta is not None and np.sum(np.abs(v[3:])) > p.delta * db:
        return False
    return True


def _l1_ball(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    if dim == 0:
        return np.zeros(0)
    direction = rng.dirichlet(np.ones(dim)) * rng.choice([-1.0, 1.0], size=dim)
    return radius * rng.uniform() * direction


def sample_cone(rng: np.random.Generator, p: ConeParams, m: int) -> np.ndarray:
    v = np.empty(3 + 2 * m)
    v[2] = rng.choice([-1.0, 1.0])
    v[:2] = _l1_ball(rng, 2, p.r)
    v[3:] = _l1_ball(rng, 2 * m, p.delta if p.delta is not None else 0.0)
    return v / np.sum(np.abs(v))


class ConeReport(BaseModel):
    samples: int
    r: float
    delta: Optional[float]
    inside_fraction: float
    min_expansion: float
    passes: bool


def cone_invariance_test(J: Jacobian, p: ConeParams, samples: int, seed: int = 0) -> ConeReport:
    rng = np.random.default_rng(seed)
    target = p.halved()
    inside = 0
    min_expansion = math.inf
    for _ in range(samples):
        v = sample_cone(rng, p, J.m)
        w = J.matrix @ v
        inside += cone_contains(w, target)
        min_expansion = min(min_expansion, float(np.sum(np.abs(w)) / np.sum(np.abs(v))))
    fraction = inside / samples
    logger.info(f"[CONE] r={p.r} delta={p.delta}: {fraction:.3f} inside, min expansion {min_expansion:.3g}")
    return ConeReport(
        samples=samples,
        r=p.r,
        delta=p.delta,
        inside_fraction=fraction,
        min_expansion=min_expansion,
        passes=fraction == 1.0 and min_expansion > 1.0,
    )


class TechnicalLemmaReport(BaseModel):
    samples: int
    outside: int
    inconclusive: bool
    K_slope: Optional[float] = None
    max_stretch: Optional[float] = None


def technical_lemma_check(
    J: Jacobian,
    p: ConeParams,
    samples: int,
    seed: int = 0,
    vectors: Optional[Sequence[Sequence[float]]] = None,
) -> TechnicalLemmaReport:
    """Among vectors whose image leaves C_{r,delta}, the largest |db|/(|I'| |dv|) and |Jv|/|v|.

    dv is the part of v off the b coordinate. Without explicit vectors, half the
    samples are random unit vectors and half have db chosen so the b~ component
    of the image vanishes.
    """
    M = J.matrix
    n = M.shape[0]
    if vectors is None:
        rng = np.random.default_rng(seed)
        vs = []
        for i in range(samples):
            v = rng.standard_normal(n)
            if i % 2 and M[2, 2] != 0.0:
                rest = M[2, :] @ v - M[2, 2] * v[2]
                v[2] = -rest / M[2, 2]
            vs.append(v / np.sum(np.abs(v)))
    else:
        vs = [np.asarray(v, dtype=float) for v in vectors]
    k_slope = None
    stretch = None
    outside = 0
    for v in vs:
        w = M @ v
        if cone_contains(w, p):
            continue
        outside += 1
        rest = np.sum(np.abs(v)) - abs(v[2])
        ratio = 0.0 if v[2] == 0.0 else (math.inf if rest == 0.0 else abs(v[2]) / (J.I_prime_len * rest))
        k_slope = ratio if k_slope is None else max(k_slope, ratio)
        s = float(np.sum(np.abs(w)) / np.sum(np.abs(v)))
        stretch = s if stretch is None else max(stretch, s)
    return TechnicalLemmaReport(
        samples=len(vs),
        outside=outside,
        inconclusive=outside == 0,
        K_slope=k_slope,
        max_stretch=stretch,
    )
