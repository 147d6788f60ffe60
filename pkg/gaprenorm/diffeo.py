"""Diffeomorphisms of [0,1] stored through their nonlinearity.

A ``Diffeo`` is determined by eta = N(phi) = D log D(phi), kept as a
Chebyshev series on [0,1]. The diffeomorphism is recovered with

    phi(x) = int_0^x exp(H) / int_0^1 exp(H),   H(s) = int_0^s eta,

where exp(H) is interpolated on a fixed 129-node Chebyshev grid and
integrated exactly. The form (Phi(x) - Phi(0)) / (Phi(1) - Phi(0)) pins
phi(0) = 0 and phi(1) = 1 exactly in floating point.
"""

import logging
from typing import Callable, Literal, Sequence, Tuple

import numpy as np
from numpy.polynomial import Chebyshev
from pydantic import BaseModel

from .errors import AccuracyError, DegenerateIntervalError, DomainError, QuadratureError

logger = logging.getLogger(__name__)

UNIT = [0.0, 1.0]
DEFAULT_M = 16
QUAD_DEGREE = 128
QUAD_TAIL_TOL = 1e-13
COMPOSE_TOL = 1e-9
COMPOSE_MAX_M = 64
MIN_ZOOM_WIDTH = 1e-13
NORM_GRID = np.linspace(0.0, 1.0, 2050)


def unit_nodes(count: int) -> np.ndarray:
    """First-kind Chebyshev points mapped to [0,1], increasing."""
    k = np.arange(count)
    return np.sort(0.5 - 0.5 * np.cos((2 * k + 1) * np.pi / (2 * count)))


def _check_unit(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("point outside [0,1]", x=np.atleast_1d(arr).tolist()[:8])
    return arr


class NormReport(BaseModel):
    c0_nonlinearity: float
    c1_nonlinearity: float
    c0_dist_identity: float


class Diffeo:
    """Orientation-preserving diffeomorphism of [0,1], immutable."""

    __slots__ = ("_coeffs", "_eta", "_deta", "_H", "_Phi", "_phi0", "_Z", "_identity", "_sup_derivative")

    def __init__(self, coeffs: Sequence[float], quad_tail_tol: float = QUAD_TAIL_TOL) -> None:
        c = np.array(coeffs, dtype=float).reshape(-1)
        if c.size == 0:
            raise DomainError("a Diffeo needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise DomainError("nonlinearity coefficients must be finite")
        c.setflags(write=False)
        self._coeffs = c
        self._identity = not np.any(c)
        self._eta = Chebyshev(c, domain=UNIT)
        self._deta = self._eta.deriv()
        self._sup_derivative = None
        if self._identity:
            self._H = None
            self._Phi = None
            self._phi0 = 0.0
            self._Z = 1.0
            return
        self._H = self._eta.integ(lbnd=0.0)
        H = self._H
        expH = Chebyshev.interpolate(lambda s: np.exp(H(s)), QUAD_DEGREE, domain=UNIT)
        scale = np.max(np.abs(expH.coef))
        tail = np.max(np.abs(expH.coef[-4:]))
        if tail > quad_tail_tol * scale:
            raise QuadratureError(
                "exp(int eta) is not resolved by the fixed quadrature",
                tail=float(tail),
                scale=float(scale),
                c0=float(np.max(np.abs(self._eta(NORM_GRID)))),
            )
        self._Phi = expH.integ(lbnd=0.0)
        self._phi0 = float(self._Phi(0.0))
        self._Z = float(self._Phi(1.0)) - self._phi0
        if not self._Z > 0.0:
            raise QuadratureError("normalizing integral is not positive", Z=self._Z)

    # constructors

    @classmethod
    def identity(cls, m: int = DEFAULT_M) -> "Diffeo":
        return cls(np.zeros(m))

    @classmethod
    def constant(cls, c: float, m: int = DEFAULT_M) -> "Diffeo":
        coeffs = np.zeros(m)
        coeffs[0] = c
        return cls(coeffs)

    @classmethod
    def from_function(cls, eta: Callable[[np.ndarray], np.ndarray], m: int = DEFAULT_M) -> "Diffeo":
        """Interpolate a nonlinearity given pointwise on [0,1]."""
        return cls(Chebyshev.interpolate(eta, m - 1, domain=UNIT).coef)

    @classmethod
    def from_map(
        cls,
        derivative: Callable[[np.ndarray], np.ndarray],
        m: int = DEFAULT_M,
    ) -> "Diffeo":
        """Nonlinearity of a diffeomorphism known through its derivative.

        D log D(phi) is taken by differentiating the interpolant of log D(phi).
        """
        log_dphi = Chebyshev.interpolate(lambda x: np.log(derivative(x)), m, domain=UNIT)
        return cls(log_dphi.deriv().coef[:m])

    # accessors

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def m(self) -> int:
        return self._coeffs.size

    @property
    def is_identity(self) -> bool:
        return self._identity

    @property
    def cached_norm_integral(self) -> float:
        return self._Z

    @property
    def eta(self) -> Chebyshev:
        return self._eta

    def resized(self, m: int) -> "Diffeo":
        """Same nonlinearity with exactly m coefficients; only zero tails may be dropped."""
        if m == self.m:
            return self
        if m > self.m:
            return Diffeo(np.concatenate([self._coeffs, np.zeros(m - self.m)]))
        dropped = self._coeffs[m:]
        if np.any(np.abs(dropped) > 1e-12 * max(1.0, float(np.max(np.abs(self._coeffs))))):
            raise DomainError(
                f"cannot truncate nonlinearity to m={m} without changing it",
                max_dropped=float(np.max(np.abs(dropped))),
            )
        return Diffeo(self._coeffs[:m])

    # evaluation without domain checks

    def value(self, x):
        if self._identity:
            return np.asarray(x, dtype=float) * 1.0
        return (self._Phi(x) - self._phi0) / self._Z

    def derivative(self, x):
        if self._identity:
            return np.ones_like(np.asarray(x, dtype=float))
        return np.exp(self._H(x)) / self._Z

    def log_derivative(self, x):
        if self._identity:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self._H(x) - np.log(self._Z)

    def nonlinearity(self, x):
        return self._eta(x)

    def nonlinearity_derivative(self, x):
        return self._deta(x)

    def sup_derivative(self) -> float:
        if self._sup_derivative is None:
            self._sup_derivative = float(np.max(self.derivative(NORM_GRID)))
        return self._sup_derivative

    def __call__(self, x):
        return self.value(_check_unit(x))

    def __repr__(self) -> str:
        if self._identity:
            return f"Diffeo.identity(m={self.m})"
        return f"Diffeo(m={self.m}, c0={self._coeffs[0]:.3g}, ...)"


def nonlinearity_eval(d: Diffeo, x):
    return d.nonlinearity(_check_unit(x))


def diffeo_eval(d: Diffeo, x) -> Tuple[np.ndarray, np.ndarray]:
    x = _check_unit(x)
    return d.value(x), d.derivative(x)


def _fit(nodes: np.ndarray, values: np.ndarray, m: int) -> Tuple[np.ndarray, float]:
    fit = Chebyshev.fit(nodes, values, m - 1, domain=UNIT)
    residual = float(np.max(np.abs(fit(nodes) - values)))
    return fit.coef, residual


def fit_nonlinearity(
    eta: Callable[[np.ndarray], np.ndarray],
    m: int,
    tol: float = COMPOSE_TOL,
    what: str = "nonlinearity",
) -> Diffeo:
    """Least-squares projection of a sampled nonlinearity on 4m nodes."""
    nodes = unit_nodes(4 * m)
    values = eta(nodes)
    coeffs, residual = _fit(nodes, values, m)
    bound = tol * max(1.0, float(np.max(np.abs(values))))
    if residual > bound:
        raise AccuracyError(
            f"{what} not resolved with m={m}; raise the basis dimension",
            m=m,
            residual=residual,
            tolerance=bound,
        )
    return Diffeo(coeffs)


def compose(outer: Diffeo, inner: Diffeo, m: int | None = None, tol: float = COMPOSE_TOL) -> Diffeo:
    """Diffeo of outer o inner, from N(psi o phi) = N psi o phi * D phi + N phi.

    With m given the result has exactly m coefficients. Otherwise the
    dimension starts at the larger input and doubles up to 64 until the
    projection residual is below tol.
    """
    if outer.is_identity and (m is None or m == inner.m):
        return inner
    if inner.is_identity and (m is None or m == outer.m):
        return outer

    def chain(x: np.ndarray) -> np.ndarray:
        return outer.nonlinearity(inner.value(x)) * inner.derivative(x) + inner.nonlinearity(x)

    if m is not None:
        return fit_nonlinearity(chain, m, tol, what="composition")
    size = max(outer.m, inner.m)
    while True:
        try:
            return fit_nonlinearity(chain, size, tol, what="composition")
        except AccuracyError:
            if size >= COMPOSE_MAX_M:
                raise
            logger.debug(f"[DIFFEO] composition residual too large at m={size}, doubling")
            size = min(2 * size, COMPOSE_MAX_M)


def zoom(d: Diffeo, interval: Tuple[float, float], min_width: float = MIN_ZOOM_WIDTH) -> Diffeo:
    """The zoom of d to I=[a,b]; its nonlinearity is |I| * eta o 1_I."""
    a, b = float(interval[0]), float(interval[1])
    if a < 0.0 or b > 1.0:
        raise DomainError("zoom interval must lie in [0,1]", interval=[a, b])
    width = b - a
    if width < min_width:
        raise DegenerateIntervalError("zoom interval is degenerate", interval=[a, b], width=width)
    if d.is_identity or (a == 0.0 and b == 1.0):
        return d
    local = np.asarray(d.eta.convert(domain=[a, b]).coef)[: d.m]
    coeffs = np.zeros(d.m)
    coeffs[: local.size] = width * local
    return Diffeo(coeffs)


def evaluation_derivative(d: Diffeo, x: float, delta_eta: Sequence[float]) -> float:
    """Gateaux derivative of eta -> phi_eta(x) in the direction delta_eta.

    With Delta H = int_0^s delta_eta and A(x) = int_0^x Delta H exp(H):
        d phi(x) = A(x)/Z - phi(x) A(1)/Z.
    """
    x = float(_check_unit(x))
    dH = Chebyshev(np.asarray(delta_eta, dtype=float), domain=UNIT).integ(lbnd=0.0)
    if d.is_identity:
        weight = dH
    else:
        H = d._H
        weight = Chebyshev.interpolate(lambda s: dH(s) * np.exp(H(s)), QUAD_DEGREE, domain=UNIT)
    A = weight.integ(lbnd=0.0)
    a0 = float(A(0.0))
    ax = (float(A(x)) - a0) / d.cached_norm_integral
    a1 = (float(A(1.0)) - a0) / d.cached_norm_integral
    return ax - float(d.value(x)) * a1


def zoom_endpoint_derivative(
    d: Diffeo,
    interval: Tuple[float, float],
    which_endpoint: Literal["left", "right"],
    x,
) -> np.ndarray:
    a, b = float(interval[0]), float(interval[1])
    if not 0.0 <= a < b <= 1.0:
        raise DomainError("zoom interval must satisfy 0 <= a < b <= 1", interval=[a, b])
    if b - a < MIN_ZOOM_WIDTH:
        raise DegenerateIntervalError("zoom interval is degenerate", interval=[a, b])
    x = _check_unit(x)
    width = b - a
    y = a + width * x
    if which_endpoint == "left":
        return width * (1.0 - x) * d.nonlinearity_derivative(y) - d.nonlinearity(y)
    if which_endpoint == "right":
        return width * x * d.nonlinearity_derivative(y) + d.nonlinearity(y)
    raise DomainError(f"unknown endpoint {which_endpoint!r}")


def norms(d: Diffeo) -> NormReport:
    eta = np.abs(d.nonlinearity(NORM_GRID))
    deta = np.abs(d.nonlinearity_derivative(NORM_GRID))
    c0 = float(np.max(eta))
    return NormReport(
        c0_nonlinearity=c0,
        c1_nonlinearity=max(c0, float(np.max(deta))),
        c0_dist_identity=float(np.max(np.abs(d.value(NORM_GRID) - NORM_GRID))),
    )


def schwarzian_eval(d: Diffeo, x):
    x = _check_unit(x)
    eta = d.nonlinearity(x)
    return d.nonlinearity_derivative(x) - 0.5 * eta * eta


def distortion(d: Diffeo) -> float:
    log_d = d.log_derivative(NORM_GRID)
    return float(np.max(log_d) - np.min(log_d))


def mirror(d: Diffeo) -> Diffeo:
    """The conjugate u -> 1 - phi(1 - u); its nonlinearity is -eta(1 - u)."""
    if d.is_identity:
        return d
    signs = np.where(np.arange(d.m) % 2 == 0, -1.0, 1.0)
    return Diffeo(signs * d.coeffs)
