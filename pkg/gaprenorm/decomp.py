"""Decomposition space.

A decomposition is a finite sequence of diffeomorphisms of [0,1] stored in
application order: the first item acts first. Renormalization acts on a
decomposed gap map by zooming each branch onto the orbit intervals of the
return words and concatenating the zoomed pieces, so no composition is ever
formed until the decomposition is projected.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

from . import diffeo as _diffeo
from .diffeo import Diffeo
from .errors import DomainError, GapRenormError, NotRenormalizableError
from .gapmap import GapMap, build_gap_map
from .renorm import Combinatorics, RenormGeometry, renormalized_coordinates

logger = logging.getLogger(__name__)

Label = Tuple[int, int]


@dataclass(frozen=True)
class DecompItem:
    label: Label
    diffeo: Diffeo


@dataclass(frozen=True)
class Decomposition:
    items: Tuple[DecompItem, ...] = ()

    @classmethod
    def of(cls, diffeos: Sequence[Diffeo], depth: int = 0) -> "Decomposition":
        return cls(tuple(DecompItem((depth, i), d) for i, d in enumerate(diffeos)))

    @classmethod
    def singleton(cls, d: Diffeo) -> "Decomposition":
        return cls.of([d])

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[DecompItem]:
        return iter(self.items)

    def __add__(self, other: "Decomposition") -> "Decomposition":
        # concatenation; every item of other comes after every item of self
        return Decomposition(self.items + other.items)

    @property
    def diffeos(self) -> List[Diffeo]:
        return [item.diffeo for item in self.items]

    def relabeled(self, depth: int) -> "Decomposition":
        return Decomposition.of(self.diffeos, depth)


def oplus(*parts: Decomposition) -> Decomposition:
    result = Decomposition()
    for part in parts:
        result = result + part
    return result


@dataclass(frozen=True)
class DecomposedGapMap:
    alpha: float
    beta: float
    b: float
    dec_L: Decomposition
    dec_R: Decomposition
    depth: int = 0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "b"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise DomainError(f"{name} must lie in (0,1)", **{name: value})

    @classmethod
    def from_gap_map(cls, f: GapMap) -> "DecomposedGapMap":
        return cls(f.alpha, f.beta, f.b, Decomposition.singleton(f.phi_L), Decomposition.singleton(f.phi_R))


def compose_decomposition(d: Decomposition, m: Optional[int] = None) -> Diffeo:
    if len(d) == 0:
        return Diffeo.identity(m or _diffeo.DEFAULT_M)
    result = d.items[0].diffeo
    for item in d.items[1:]:
        result = _diffeo.compose(item.diffeo, result, m)
    if m is not None and result.m != m:
        result = _diffeo.compose(Diffeo.identity(m), result, m)
    return result


def zoom_decomposition(d: Decomposition, interval: Tuple[float, float]) -> Decomposition:
    """Zoom of the composition of d to J, kept decomposed.

    Item q is zoomed to J_q, where J_1 = J and J_{q+1} = psi_q(J_q).
    """
    lo, hi = float(interval[0]), float(interval[1])
    items = []
    for item in d.items:
        items.append(DecompItem(item.label, _diffeo.zoom(item.diffeo, (lo, hi))))
        lo, hi = float(item.diffeo.value(lo)), float(item.diffeo.value(hi))
    return Decomposition(tuple(items))


def project(df: DecomposedGapMap, m: Optional[int] = None) -> GapMap:
    return build_gap_map(
        df.alpha,
        df.beta,
        df.b,
        compose_decomposition(df.dec_L, m),
        compose_decomposition(df.dec_R, m),
    )


def _unit_interval(lo: float, hi: float) -> Tuple[float, float]:
    return max(0.0, min(1.0, lo)), max(0.0, min(1.0, hi))


def _pull_back(df: DecomposedGapMap, f: GapMap, word: str, interval: Tuple[float, float]) -> Decomposition:
    b = f.b
    lo, hi = interval
    pieces = []
    for letter in word:
        if letter == "L":
            J = _unit_interval((lo - (b - 1.0)) / (1.0 - b), (hi - (b - 1.0)) / (1.0 - b))
            pieces.append(zoom_decomposition(df.dec_L, J))
            lo, hi = float(f.left_branch(lo)), float(f.left_branch(hi))
        else:
            J = _unit_interval(lo / b, hi / b)
            pieces.append(zoom_decomposition(df.dec_R, J))
            lo, hi = float(f.right_branch(lo)), float(f.right_branch(hi))
    return oplus(*pieces)


def _renormalize_decomposed(df: DecomposedGapMap, m: Optional[int]) -> Tuple[DecomposedGapMap, RenormGeometry]:
    f = project(df, m)
    geo = renormalized_coordinates(f)
    l, r = geo.I_prime
    dec_L = _pull_back(df, f, geo.left_word, (l, 0.0)).relabeled(df.depth + 1)
    dec_R = _pull_back(df, f, geo.right_word, (0.0, r)).relabeled(df.depth + 1)
    logger.debug(
        f"[DECOMP] k={geo.k} sigma={geo.sigma.value} items L={len(dec_L)} R={len(dec_R)}"
    )
    return DecomposedGapMap(geo.alpha, geo.beta, geo.b, dec_L, dec_R, df.depth + 1), geo


def renormalize_decomposed(df: DecomposedGapMap, m: Optional[int] = None) -> DecomposedGapMap:
    return _renormalize_decomposed(df, m)[0]


@dataclass(frozen=True)
class DecomposedTrajectory:
    initial: DecomposedGapMap
    maps: List[DecomposedGapMap]
    gamma: Combinatorics
    blocked: Optional[NotRenormalizableError] = field(default=None, compare=False)


def renormalize_decomposed_n(df: DecomposedGapMap, n: int, m: Optional[int] = None) -> DecomposedTrajectory:
    maps: List[DecomposedGapMap] = []
    gamma = Combinatorics()
    current = df
    blocked = None
    for depth in range(1, n + 1):
        try:
            current, geo = _renormalize_decomposed(current, m)
        except NotRenormalizableError as e:
            blocked = e.at_depth(depth)
            break
        except GapRenormError as e:
            e.details["depth"] = depth
            raise
        maps.append(current)
        gamma = gamma.appended(geo.sigma, geo.k)
    return DecomposedTrajectory(initial=df, maps=maps, gamma=gamma, blocked=blocked)


def decomposition_norm(d: Decomposition) -> float:
    return float(sum(_diffeo.norms(item.diffeo).c1_nonlinearity for item in d.items))


def decomposition_distortion(d: Decomposition) -> float:
    """Sum of the distortions of the items, an upper bound for the distortion of the composition."""
    return float(sum(_diffeo.distortion(item.diffeo) for item in d.items))
