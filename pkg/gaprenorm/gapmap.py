"""Dissipative gap maps in the coordinates (alpha, beta, b, phi_L, phi_R).

The domain is [b-1, b] with the discontinuity at 0. The branches are

    f_L = 1_{T0L} o phi_L o 1_{I0L}^{-1},  I0L = [b-1, 0],  T0L = [alpha(b-1)+b, b]
    f_R = 1_{T0R} o phi_R o 1_{I0R}^{-1},  I0R = [0, b],    T0R = [b-1, beta*b+b-1]

so f_L(0-) = b and f_R(0+) = b-1 hold exactly.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Literal, Tuple

import numpy as np

from . import diffeo as _diffeo
from .diffeo import Diffeo
from .errors import DegenerateGapError, DiscontinuityError, DomainError, NotDissipativeError

logger = logging.getLogger(__name__)

GAP_MIN_WIDTH = 1e-14
DISCONTINUITY_TOL = 1e-14


class Sign(str, Enum):
    MINUS = "-"
    PLUS = "+"

    @classmethod
    def of(cls, b: float) -> "Sign":
        # a_R <= |a_L| with a_R = b and a_L = b - 1
        return cls.MINUS if b <= 1.0 - b else cls.PLUS


@dataclass(frozen=True)
class GapMap:
    alpha: float
    beta: float
    b: float
    phi_L: Diffeo
    phi_R: Diffeo
    nu: float

    # closed branches, no domain checks

    def left_branch(self, x):
        b = self.b
        u = np.clip((x - (b - 1.0)) / (1.0 - b), 0.0, 1.0)
        return b - self.alpha * (1.0 - b) * (1.0 - self.phi_L.value(u))

    def right_branch(self, x):
        b = self.b
        u = np.clip(x / b, 0.0, 1.0)
        return (b - 1.0) + self.beta * b * self.phi_R.value(u)

    def left_derivative(self, x):
        b = self.b
        u = np.clip((x - (b - 1.0)) / (1.0 - b), 0.0, 1.0)
        return self.alpha * self.phi_L.derivative(u)

    def right_derivative(self, x):
        u = np.clip(x / self.b, 0.0, 1.0)
        return self.beta * self.phi_R.derivative(u)

    def left_nonlinearity(self, x):
        b = self.b
        u = np.clip((x - (b - 1.0)) / (1.0 - b), 0.0, 1.0)
        return self.phi_L.nonlinearity(u) / (1.0 - b)

    def right_nonlinearity(self, x):
        u = np.clip(x / self.b, 0.0, 1.0)
        return self.phi_R.nonlinearity(u) / self.b

    def branch(self, side: "Sign"):
        return self.left_branch if side is Sign.MINUS else self.right_branch

    @property
    def is_affine(self) -> bool:
        return self.phi_L.is_identity and self.phi_R.is_identity

    @property
    def m(self) -> int:
        return max(self.phi_L.m, self.phi_R.m)

    @property
    def domain(self) -> Tuple[float, float]:
        return self.b - 1.0, self.b

    def __call__(self, x):
        return eval_map(self, x)


def _check_unit_open(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in (0,1)", **{name: value})
    return value


def build_gap_map(alpha: float, beta: float, b: float, phi_L: Diffeo, phi_R: Diffeo) -> GapMap:
    alpha = _check_unit_open("alpha", alpha)
    beta = _check_unit_open("beta", beta)
    b = _check_unit_open("b", b)
    nu = max(alpha * phi_L.sup_derivative(), beta * phi_R.sup_derivative())
    if nu >= 1.0:
        raise NotDissipativeError(
            f"branch derivative bound nu={nu:.6g} is not below 1",
            nu=nu,
            alpha=alpha,
            beta=beta,
        )
    return GapMap(alpha=alpha, beta=beta, b=b, phi_L=phi_L, phi_R=phi_R, nu=nu)


def affine_gap_map(alpha: float, beta: float, b: float, m: int = _diffeo.DEFAULT_M) -> GapMap:
    identity = Diffeo.identity(m)
    return build_gap_map(alpha, beta, b, identity, identity)


def with_b(f: GapMap, b: float) -> GapMap:
    """Member of the transverse family through f obtained by moving b only."""
    b = _check_unit_open("b", b)
    return GapMap(alpha=f.alpha, beta=f.beta, b=b, phi_L=f.phi_L, phi_R=f.phi_R, nu=f.nu)


def eval_map(f: GapMap, x):
    arr = np.asarray(x, dtype=float)
    lo, hi = f.domain
    if np.any(arr < lo) or np.any(arr > hi) or np.any(~np.isfinite(arr)):
        raise DomainError("point outside [b-1, b]", domain=[lo, hi])
    if np.any(arr == 0.0):
        raise DiscontinuityError("gap maps are not defined at 0")
    if arr.ndim == 0:
        return f.left_branch(arr) if arr < 0.0 else f.right_branch(arr)
    return np.where(arr < 0.0, f.left_branch(arr), f.right_branch(arr))


def gap_and_sign(f: GapMap, min_width: float = GAP_MIN_WIDTH) -> Tuple[Tuple[float, float], Sign]:
    lo = float(f.right_branch(f.b))
    hi = float(f.left_branch(f.b - 1.0))
    if not hi - lo >= min_width:
        raise DegenerateGapError("gap is empty or degenerate", gap=[lo, hi])
    return (lo, hi), Sign.of(f.b)


def lateral_orbit(
    f: GapMap,
    side: Literal["plus", "minus"],
    j: int,
    tol: float = DISCONTINUITY_TOL,
) -> float:
    """0_j^+ = f^{j-1}(b-1) and 0_j^- = f^{j-1}(b)."""
    if j < 1:
        raise DomainError("lateral orbit index starts at 1", j=j)
    if side == "plus":
        x = f.b - 1.0
    elif side == "minus":
        x = f.b
    else:
        raise DomainError(f"unknown side {side!r}")
    for i in range(1, j):
        if abs(x) < tol:
            raise DiscontinuityError("lateral orbit hits the discontinuity", side=side, iterate=i)
        x = float(f.left_branch(x) if x < 0.0 else f.right_branch(x))
    return x


def slopes_from_branches(f: GapMap) -> Tuple[float, float]:
    b = f.b
    alpha = (b - float(f.left_branch(b - 1.0))) / (1.0 - b)
    beta = (float(f.right_branch(b)) - (b - 1.0)) / b
    return alpha, beta


def mirror(f: GapMap) -> GapMap:
    """The conjugate x -> -f(-x); branches and signs swap."""
    return build_gap_map(
        f.beta,
        f.alpha,
        1.0 - f.b,
        _diffeo.mirror(f.phi_R),
        _diffeo.mirror(f.phi_L),
    )


def in_absorbing_set(f: GapMap, slope_bound: float, eta_bound: float) -> bool:
    """Small slopes and bounded nonlinearities."""
    if max(f.alpha, f.beta) > slope_bound:
        return False
    worst = max(
        _diffeo.norms(f.phi_L).c1_nonlinearity,
        _diffeo.norms(f.phi_R).c1_nonlinearity,
    )
    return worst <= eta_bound
