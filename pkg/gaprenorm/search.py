"""Rotation numbers, parameter search in b and transversality of the b-family.

Outcomes of renormalization are placed on the rotation-number scale:
(-,k) covers (1/(k+2), 1/(k+1)) and (+,k) covers (k/(k+1), (k+1)/(k+2)).
A map blocked at iterate j sits on the boundary between two neighbouring
classes. Since gap boundary points increase strictly with b, comparing
these positions level by level gives a predicate that is monotone in b.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from .diffeo import Diffeo
from .errors import (
    DiscontinuityError,
    DomainError,
    IterationCapError,
    NotRenormalizableError,
    StepTooLargeError,
    UnrealizableCombinatoricsError,
)
from .gapmap import GapMap, Sign, build_gap_map, with_b
from .renorm import K_CAP, Combinatorics, RenormStep, renormalize, renormalize_n

logger = logging.getLogger(__name__)

B_MIN = 1e-15
B_MAX = 1.0 - 1e-15
ROTATION_ITERATIONS = 10**5
ORBIT_TOL = 1e-14
CLOSURE_TOL = 1e-12
MAX_HALVINGS = 4


# Rotation numbers


def rotation_number(f: GapMap, iterations: int = ROTATION_ITERATIONS, tol: float = ORBIT_TOL) -> float:
    """Frequency of right-branch visits of the orbit of b, over the tail half."""
    if iterations < 1000:
        raise DomainError("rotation number needs at least 1000 iterations", iterations=iterations)
    x = f.b
    start = iterations // 2
    right = 0
    for i in range(iterations):
        if abs(x) < tol:
            raise DiscontinuityError("orbit of b hits the discontinuity", iterate=i)
        if i >= start:
            right += x > 0.0
        x = float(f.right_branch(x) if x > 0.0 else f.left_branch(x))
    return right / (iterations - start)


def periodic_rotation_number(
    f: GapMap,
    burn_in: int = 10**4,
    max_period: int = 10**4,
    tol: float = CLOSURE_TOL,
) -> Fraction:
    """Exact p/q of an attracting periodic orbit, found by orbit closure."""
    x = f.b
    for i in range(burn_in):
        if abs(x) < ORBIT_TOL:
            raise DiscontinuityError("orbit of b hits the discontinuity", iterate=i)
        x = float(f.right_branch(x) if x > 0.0 else f.left_branch(x))
    start = x
    right = 0
    for q in range(1, max_period + 1):
        right += x > 0.0
        x = float(f.right_branch(x) if x > 0.0 else f.left_branch(x))
        if abs(x - start) < tol:
            return Fraction(right, q)
    raise IterationCapError(f"no periodic orbit of period <= {max_period} found", max_period=max_period)


def _level_map(sign: Sign, k: int, lo: float, hi: float) -> Tuple[float, float]:
    if sign is Sign.MINUS:
        return 1.0 / (k + 2 - lo), 1.0 / (k + 2 - hi)
    return (k + lo) / (k + 1 + lo), (k + hi) / (k + 1 + hi)


def rotation_interval(gamma: Combinatorics) -> Tuple[float, float]:
    """Rotation numbers compatible with a combinatorics prefix."""
    lo, hi = 0.0, 1.0
    for sign, k in reversed(gamma.entries):
        lo, hi = _level_map(sign, k, lo, hi)
    return lo, hi


# Predicate


def _class_position(sign: Sign, k: int) -> float:
    lo, hi = _level_map(sign, k, 0.0, 1.0)
    return 0.5 * (lo + hi)


def _blocked_position(e: NotRenormalizableError) -> float:
    if e.side is None:
        return 0.5
    j = e.iterate
    return 1.0 / (j + 2) if e.side == Sign.MINUS.value else (j + 1) / (j + 2)


@dataclass(frozen=True)
class Comparison:
    sign: int
    matched: int


def compare(
    f: GapMap,
    target: Combinatorics,
    depth: int,
    m: Optional[int] = None,
    k_cap: int = K_CAP,
) -> Comparison:
    """-1 if f sits left of the target on the rotation scale, +1 if right, 0 if it matches to depth."""
    current = f
    for level in range(depth):
        sign_t, k_t = target[level]
        want = _class_position(sign_t, k_t)
        try:
            step = renormalize(current, m, k_cap=k_cap)
        except NotRenormalizableError as e:
            got = _blocked_position(e)
        except IterationCapError as e:
            got = 0.0 if e.side == Sign.MINUS.value else 1.0
        else:
            if step.sigma is sign_t and step.k == k_t:
                current = step.renormalized
                continue
            got = _class_position(step.sigma, step.k)
        return Comparison(sign=-1 if got < want else 1, matched=level)
    return Comparison(sign=0, matched=depth)


# Bisection in b


@dataclass(frozen=True)
class SearchResult:
    b_star: float
    achieved_depth: int
    gamma: Combinatorics
    bracket: Tuple[float, float]
    window: Tuple[float, float]
    b_center: float

    @property
    def bracket_width(self) -> float:
        return self.bracket[1] - self.bracket[0]


def _check_target(target: Combinatorics, depth: int, tol: float, k_cap: int) -> None:
    if depth < 1:
        raise DomainError("search depth must be at least 1", depth=depth)
    if len(target) < depth:
        raise DomainError("target combinatorics shorter than the search depth", length=len(target), depth=depth)
    if tol < 1e-14:
        raise DomainError("bisection tolerance must be at least 1e-14", tol=tol)
    for sign, k in target.entries[:depth]:
        if k > k_cap:
            raise IterationCapError(f"target k={k} exceeds the iteration cap {k_cap}", side=sign.value, k_cap=k_cap)


def bisect_b(
    alpha: float,
    beta: float,
    phi_L: Diffeo,
    phi_R: Diffeo,
    target: Combinatorics,
    depth: int,
    tol: float = 1e-12,
    m: Optional[int] = None,
    k_cap: int = K_CAP,
) -> SearchResult:
    _check_target(target, depth, tol, k_cap)
    template = build_gap_map(alpha, beta, 0.5, phi_L, phi_R)
    deepest = 0

    def P(b: float) -> int:
        nonlocal deepest
        c = compare(with_b(template, b), target, depth, m, k_cap)
        deepest = max(deepest, c.matched)
        return c.sign

    lo, hi = B_MIN, B_MAX
    p_lo, p_hi = P(lo), P(hi)
    inside = lo if p_lo == 0 else hi if p_hi == 0 else None
    if inside is None and not (p_lo < 0 < p_hi):
        raise UnrealizableCombinatoricsError(
            f"no sign change of the depth-{depth} predicate on (0,1)", (lo, hi), deepest
        )
    while inside is None:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            raise UnrealizableCombinatoricsError(
                f"target {target[:depth]} not realized down to float resolution", (lo, hi), deepest
            )
        p = P(mid)
        if p == 0:
            inside = mid
        elif p < 0:
            lo = mid
        else:
            hi = mid
    logger.debug(f"[SEARCH] inside point b={inside!r} for {target[:depth]}")

    # upper edge: a passes, c fails
    a, c = inside, hi
    while c - a > tol:
        mid = 0.5 * (a + c)
        if P(mid) == 0:
            a = mid
        else:
            c = mid
    b_star = 0.5 * (a + c)
    while b_star > a and P(b_star) != 0:
        c = b_star
        b_star = 0.5 * (a + c)
    if b_star <= a:
        b_star = a

    # lower edge, for the centre of the window
    w_lo, w_hi = lo, inside
    while w_hi - w_lo > tol:
        mid = 0.5 * (w_lo + w_hi)
        if P(mid) == 0:
            w_hi = mid
        else:
            w_lo = mid
    window = (w_hi, a)
    b_center = 0.5 * (window[0] + window[1])
    if P(b_center) != 0:
        b_center = inside

    if P(a) != 0 or P(c) == 0:
        raise UnrealizableCombinatoricsError("bisection bracket is not sound", (a, c), deepest)

    trajectory = renormalize_n(with_b(template, b_star), depth, m)
    logger.info(
        f"[SEARCH] b*={b_star!r} bracket width {c - a:.3e} realizes {trajectory.gamma}"
    )
    return SearchResult(
        b_star=b_star,
        achieved_depth=trajectory.depth,
        gamma=trajectory.gamma,
        bracket=(a, c),
        window=window,
        b_center=b_center,
    )


# Deep maps


@dataclass(frozen=True)
class Adjustment:
    level: int
    old_b: float
    new_b: float
    lookahead: int


@dataclass(frozen=True)
class DeepMap:
    maps: List[GapMap]
    steps: List[RenormStep]
    gamma: Combinatorics
    adjustments: List[Adjustment] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.steps)


def deep_map(
    alpha: float,
    beta: float,
    phi_L: Diffeo,
    phi_R: Diffeo,
    target: Combinatorics,
    depth: int,
    m: Optional[int] = None,
    lookahead: int = 3,
    tol: float = 1e-12,
    b: float = 0.5,
) -> DeepMap:
    """Maps at levels 0..depth realizing target, refining b level by level.

    At each level b is kept when the map realizes the next lookahead entries
    of the target. Otherwise it is moved to the centre of the parameter window
    found by bisection, with shorter lookaheads tried when the window is below
    double resolution. Each level is thus the renormalization of the previous
    one up to a recorded change of b.
    """
    if len(target) < depth:
        raise DomainError("target combinatorics shorter than the requested depth", length=len(target), depth=depth)
    f = build_gap_map(alpha, beta, b, phi_L, phi_R)
    maps: List[GapMap] = []
    steps: List[RenormStep] = []
    adjustments: List[Adjustment] = []
    gamma = Combinatorics()
    for level in range(depth):
        rest = target[level:]
        L = min(lookahead, depth - level)
        if compare(f, rest, L, m).sign != 0:
            error = None
            for look in range(L, 0, -1):
                try:
                    found = bisect_b(f.alpha, f.beta, f.phi_L, f.phi_R, rest, look, tol, m)
                except UnrealizableCombinatoricsError as e:
                    error = e
                    continue
                adjustments.append(Adjustment(level, f.b, found.b_center, look))
                logger.debug(f"[SEARCH] level {level}: b {f.b!r} -> {found.b_center!r} (lookahead {look})")
                f = with_b(f, found.b_center)
                error = None
                break
            if error is not None:
                raise error
        maps.append(f)
        step = renormalize(f, m)
        sign_t, k_t = rest[0]
        if step.sigma is not sign_t or step.k != k_t:
            raise NotRenormalizableError(
                f"level {level} realizes ({step.sigma.value},{step.k}) instead of ({sign_t.value},{k_t})",
                "closure",
                step.k,
                step.sigma.value,
                level + 1,
            )
        steps.append(step)
        gamma = gamma.appended(step.sigma, step.k)
        f = step.renormalized
    maps.append(f)
    logger.info(f"[SEARCH] deep map to depth {depth}, {len(adjustments)} adjustments of b")
    return DeepMap(maps=maps, steps=steps, gamma=gamma, adjustments=adjustments)


# Transversality


class LevelDerivative(BaseModel):
    level: int
    d_left: float
    d_right: float


class TransversalityReport(BaseModel):
    depth: int
    step: float
    levels: List[LevelDerivative]
    all_positive: bool


def _endpoints(f: GapMap, b: float, depth: int, gamma: Combinatorics, m: Optional[int]) -> Optional[np.ndarray]:
    try:
        trajectory = renormalize_n(with_b(f, b), depth, m)
    except DomainError:
        return None
    if trajectory.depth < depth or trajectory.gamma != gamma:
        return None
    return np.array(trajectory.nested_intervals())


def transversality_check(f: GapMap, depth: int, h: float = 1e-6, m: Optional[int] = None) -> TransversalityReport:
    """d/db of the I' endpoints of levels 1..depth, in the coordinates of f."""
    base = renormalize_n(f, depth, m)
    if base.blocked is not None:
        raise base.blocked
    scale = 1.0
    reach = np.inf
    for s in base.steps:
        reach = min(reach, s.margin * scale)
        scale *= s.I_prime_len
    step = h * min(reach, f.b, 1.0 - f.b)
    for halving in range(MAX_HALVINGS + 1):
        plus = _endpoints(f, f.b + step, depth, base.gamma, m)
        minus = _endpoints(f, f.b - step, depth, base.gamma, m)
        if plus is not None and minus is not None:
            break
        if halving == MAX_HALVINGS:
            raise StepTooLargeError("combinatorics change under every tried step in b", step=step)
        logger.warning(f"[SEARCH] transversality step {step:.3e} breaks combinatorics, halving")
        step *= 0.5
    deriv = (plus - minus) / (2.0 * step)
    levels = [
        LevelDerivative(level=i + 1, d_left=float(deriv[i, 0]), d_right=float(deriv[i, 1]))
        for i in range(depth)
    ]
    return TransversalityReport(
        depth=depth,
        step=step,
        levels=levels,
        all_positive=bool(np.all(deriv > 0.0)),
    )
