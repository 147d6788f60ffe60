"""Renormalization of dissipative gap maps.

A map is renormalizable when the gap G, f(G), ..., f^{k-1}(G) stay on one
side of 0 and f^k(G) lands on the other, with 0 off every closure. The first
return map to I' is made of two compositions of branches (the return words)
and is rescaled by 1/|I'|, which keeps 0 fixed and gives a gap map on
[b~ - 1, b~].

Slopes of the renormalized map are means of the return-map derivative over
each branch domain, and nonlinearities follow the chain rule
N(g o h) = Ng o h * Dh + Nh along the return words. Both are sums and
products of branch data, so neither loses precision when |I'| is small.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import diffeo as _diffeo
from .diffeo import Diffeo
from .errors import AccuracyError, GapRenormError, IterationCapError, MalformedInputError, NotRenormalizableError
from .gapmap import GapMap, Sign, build_gap_map, eval_map, gap_and_sign

logger = logging.getLogger(__name__)

K_CAP = 10**6
MARGIN_REL = 1e-12
SLOPE_QUAD_NODES = 32
_GL_NODES, _GL_WEIGHTS = leggauss(SLOPE_QUAD_NODES)
_EPS = np.finfo(float).eps


# Combinatorics


_ENTRY = re.compile(r"\(\s*([+-])\s*,\s*(\d+)\s*\)")


@dataclass(frozen=True)
class Combinatorics:
    entries: Tuple[Tuple[Sign, int], ...] = ()

    @classmethod
    def parse(cls, text: str) -> "Combinatorics":
        """Parse "(-,1)(-,2)(+,1)"."""
        compact = re.sub(r"\s+", "", text or "")
        entries = []
        pos = 0
        for match in _ENTRY.finditer(compact):
            if match.start() != pos:
                raise MalformedInputError(f"bad combinatorics near column {pos + 1}: {text!r}", column=pos + 1)
            k = int(match.group(2))
            if k < 1:
                raise MalformedInputError(f"k must be positive in {match.group(0)}", column=pos + 1)
            entries.append((Sign(match.group(1)), k))
            pos = match.end()
        if pos != len(compact):
            raise MalformedInputError(f"bad combinatorics near column {pos + 1}: {text!r}", column=pos + 1)
        return cls(tuple(entries))

    @classmethod
    def repeat(cls, sign: Sign, k: int, n: int) -> "Combinatorics":
        return cls(((sign, k),) * n)

    def __str__(self) -> str:
        return "".join(f"({s.value},{k})" for s, k in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Tuple[Sign, int]]:
        return iter(self.entries)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Combinatorics(self.entries[item])
        return self.entries[item]

    def appended(self, sign: Sign, k: int) -> "Combinatorics":
        return Combinatorics(self.entries + ((sign, k),))


# Gap itinerary


@dataclass(frozen=True)
class GapItinerary:
    k: int
    sigma: Sign
    margin: float
    gap_width: float


def _side(lo: float, hi: float, tol: float) -> int:
    if hi < -tol:
        return -1
    if lo > tol:
        return 1
    return 0


def _blocking_reason(lo: float, hi: float, tol: float) -> str:
    return "boundary" if min(abs(lo), abs(hi)) <= tol else "closure"


def gap_itinerary(f: GapMap, k_cap: int = K_CAP, margin_rel: float = MARGIN_REL) -> GapItinerary:
    (lo, hi), _ = gap_and_sign(f)
    width = hi - lo
    tol = margin_rel * width
    side = _side(lo, hi, tol)
    if side == 0:
        reason = _blocking_reason(lo, hi, tol)
        raise NotRenormalizableError(f"gap closure meets 0 ({reason})", reason, 0, None)
    sigma = Sign.MINUS if side < 0 else Sign.PLUS
    branch = f.branch(sigma)
    margin = min(abs(lo), abs(hi))
    for i in range(1, k_cap + 1):
        lo, hi = float(branch(lo)), float(branch(hi))
        s = _side(lo, hi, tol)
        if s == 0:
            reason = _blocking_reason(lo, hi, tol)
            raise NotRenormalizableError(
                f"closure of f^{i}(G) meets 0 ({reason})", reason, i, sigma.value
            )
        margin = min(margin, abs(lo), abs(hi))
        if s != side:
            return GapItinerary(k=i, sigma=sigma, margin=margin, gap_width=width)
    raise IterationCapError(f"gap orbit did not cross 0 within {k_cap} iterations", side=sigma.value, k_cap=k_cap)


def find_k(f: GapMap, k_cap: int = K_CAP, margin_rel: float = MARGIN_REL) -> int:
    return gap_itinerary(f, k_cap, margin_rel).k


# Return maps


def return_words(k: int, sigma: Sign) -> Tuple[str, str]:
    """Branch sequences, in order of application, of the left and right return branches."""
    if sigma is Sign.MINUS:
        return "LR" + "L" * k, "R" + "L" * k
    return "L" + "R" * k, "RL" + "R" * k


def push(f: GapMap, word: str, x):
    for letter in word:
        x = f.left_branch(x) if letter == "L" else f.right_branch(x)
    return x


def push_jet(f: GapMap, word: str, x):
    """Value, derivative and nonlinearity of the composition along word."""
    y = np.asarray(x, dtype=float)
    d = np.ones_like(y)
    n = np.zeros_like(y)
    for letter in word:
        if letter == "L":
            n = n + f.left_nonlinearity(y) * d
            d = d * f.left_derivative(y)
            y = f.left_branch(y)
        else:
            n = n + f.right_nonlinearity(y) * d
            d = d * f.right_derivative(y)
            y = f.right_branch(y)
    return y, d, n


def iterate_direct(f: GapMap, x: float, n: int) -> float:
    for _ in range(n):
        x = float(eval_map(f, x))
    return x


@dataclass(frozen=True)
class ReturnMap:
    f: GapMap
    k: int
    sigma: Sign
    left_word: str
    right_word: str
    I_prime: Tuple[float, float]

    def left(self, x):
        return push(self.f, self.left_word, x)

    def right(self, x):
        return push(self.f, self.right_word, x)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0.0, self.left(x), self.right(x))


@dataclass(frozen=True)
class RenormGeometry:
    k: int
    sigma: Sign
    margin: float
    left_word: str
    right_word: str
    I_prime: Tuple[float, float]
    alpha: float
    beta: float
    b: float

    @property
    def I_prime_len(self) -> float:
        return self.I_prime[1] - self.I_prime[0]


def _mean_derivative(f: GapMap, word: str, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * _GL_NODES
    _, d, _ = push_jet(f, word, nodes)
    return 0.5 * float(np.dot(_GL_WEIGHTS, d))


def renormalized_coordinates(
    f: GapMap, k_cap: int = K_CAP, margin_rel: float = MARGIN_REL
) -> RenormGeometry:
    it = gap_itinerary(f, k_cap, margin_rel)
    left_word, right_word = return_words(it.k, it.sigma)
    # R_R(0+) and R_L(0-) are the endpoints of I'
    l = float(push(f, right_word, 0.0))
    r = float(push(f, left_word, 0.0))
    if not l < 0.0 < r:
        raise AccuracyError("return interval does not contain 0", I_prime=[l, r], k=it.k)
    return RenormGeometry(
        k=it.k,
        sigma=it.sigma,
        margin=it.margin,
        left_word=left_word,
        right_word=right_word,
        I_prime=(l, r),
        alpha=_mean_derivative(f, left_word, l, 0.0),
        beta=_mean_derivative(f, right_word, 0.0, r),
        b=r / (r - l),
    )


def return_map(f: GapMap) -> ReturnMap:
    geo = renormalized_coordinates(f)
    return ReturnMap(f, geo.k, geo.sigma, geo.left_word, geo.right_word, geo.I_prime)


def literal_coordinates(f: GapMap, geo: RenormGeometry) -> Tuple[float, float]:
    """Slopes from the endpoint differences (R_L(l) - r)/l and (R_R(r) - l)/r."""
    l, r = geo.I_prime
    alpha = (float(push(f, geo.left_word, l)) - r) / l
    beta = (float(push(f, geo.right_word, r)) - l) / r
    return alpha, beta


def _cross_check(f: GapMap, geo: RenormGeometry) -> None:
    l, r = geo.I_prime
    alpha_lit, beta_lit = literal_coordinates(f, geo)
    # endpoint values carry a few ulps of O(1) numbers per branch application
    slack = 8.0 * (geo.k + 3) * _EPS
    checks = (
        ("alpha", geo.alpha, alpha_lit, 1e-9 * geo.alpha + slack / abs(l)),
        ("beta", geo.beta, beta_lit, 1e-9 * geo.beta + slack / abs(r)),
    )
    for name, value, literal, bound in checks:
        if abs(value - literal) > bound:
            raise AccuracyError(
                f"renormalized {name} disagrees with the endpoint formula",
                value=value,
                literal=literal,
                bound=bound,
            )


def _renormalized_diffeo(f: GapMap, word: str, a: float, b: float, m: int, fit_tol: float, what: str) -> Diffeo:
    width = b - a

    def eta(u: np.ndarray) -> np.ndarray:
        _, _, n = push_jet(f, word, a + width * u)
        return width * n

    return _diffeo.fit_nonlinearity(eta, m, fit_tol, what=what)


@dataclass(frozen=True)
class RenormStep:
    k: int
    sigma: Sign
    I_prime: Tuple[float, float]
    renormalized: GapMap
    margin: float

    @property
    def I_prime_len(self) -> float:
        return self.I_prime[1] - self.I_prime[0]


def renormalize(
    f: GapMap,
    m: Optional[int] = None,
    fit_tol: float = _diffeo.COMPOSE_TOL,
    k_cap: int = K_CAP,
    margin_rel: float = MARGIN_REL,
) -> RenormStep:
    geo = renormalized_coordinates(f, k_cap, margin_rel)
    _cross_check(f, geo)
    m = m or f.m
    l, r = geo.I_prime
    if f.is_affine:
        phi_L = phi_R = Diffeo.identity(m)
    else:
        phi_L = _renormalized_diffeo(f, geo.left_word, l, 0.0, m, fit_tol, "renormalized left nonlinearity")
        phi_R = _renormalized_diffeo(f, geo.right_word, 0.0, r, m, fit_tol, "renormalized right nonlinearity")
    g = build_gap_map(geo.alpha, geo.beta, geo.b, phi_L, phi_R)
    logger.debug(
        f"[RENORM] k={geo.k} sigma={geo.sigma.value} |I'|={geo.I_prime_len:.3e} "
        f"-> alpha={g.alpha:.6g} beta={g.beta:.6g} b={g.b:.6g}"
    )
    return RenormStep(k=geo.k, sigma=geo.sigma, I_prime=geo.I_prime, renormalized=g, margin=geo.margin)


@dataclass(frozen=True)
class Trajectory:
    initial: GapMap
    steps: List[RenormStep]
    gamma: Combinatorics
    blocked: Optional[NotRenormalizableError] = field(default=None, compare=False)

    def __iter__(self):
        # unpacks as (steps, gamma)
        return iter((self.steps, self.gamma))

    @property
    def depth(self) -> int:
        return len(self.steps)

    @property
    def maps(self) -> List[GapMap]:
        return [self.initial] + [s.renormalized for s in self.steps]

    def nested_intervals(self) -> List[Tuple[float, float]]:
        """I' of every level expressed in the coordinates of the initial map."""
        scale = 1.0
        intervals = []
        for step in self.steps:
            l, r = step.I_prime
            intervals.append((l * scale, r * scale))
            scale *= step.I_prime_len
        return intervals


def renormalize_n(f: GapMap, n: int, m: Optional[int] = None, **kwargs) -> Trajectory:
    steps: List[RenormStep] = []
    gamma = Combinatorics()
    current = f
    blocked = None
    for depth in range(1, n + 1):
        try:
            step = renormalize(current, m, **kwargs)
        except NotRenormalizableError as e:
            blocked = e.at_depth(depth)
            logger.debug(f"[RENORM] stopped at depth {depth}: {e.message}")
            break
        except GapRenormError as e:
            e.details["depth"] = depth
            raise
        steps.append(step)
        gamma = gamma.appended(step.sigma, step.k)
        current = step.renormalized
    return Trajectory(initial=f, steps=steps, gamma=gamma, blocked=blocked)


def affine_distance(f: GapMap) -> float:
    """max over branches of ||eta||_C0 + ||D eta||_C0 + sup |S|."""
    grid = _diffeo.NORM_GRID
    worst = 0.0
    for d in (f.phi_L, f.phi_R):
        if d.is_identity:
            continue
        eta = d.nonlinearity(grid)
        deta = d.nonlinearity_derivative(grid)
        value = np.max(np.abs(eta)) + np.max(np.abs(deta)) + np.max(np.abs(deta - 0.5 * eta * eta))
        worst = max(worst, float(value))
    return worst
