import asyncio
import logging
from typing import Any, Dict, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field

from . import serialize
from .http_errors import raise_http
from .renorm import Combinatorics, renormalize_n
from .search import bisect_b, rotation_interval, rotation_number

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/search", tags=["search"])


class BisectRequest(BaseModel):
    target: str
    depth: Optional[int] = Field(default=None, ge=1)
    alpha: float = Field(default=0.5, gt=0, lt=1)
    beta: float = Field(default=0.5, gt=0, lt=1)
    phi_L: Optional[Dict[str, Any]] = None
    phi_R: Optional[Dict[str, Any]] = None
    tol: float = Field(default=1e-12, ge=1e-14)


class RotationRequest(BaseModel):
    map: Dict[str, Any]
    iterations: int = Field(default=10**5, ge=1000, le=10**7)
    depth: Optional[int] = Field(default=None, ge=1, le=64)


def _bisect(body: BisectRequest) -> Dict[str, Any]:
    target = Combinatorics.parse(body.target)
    depth = body.depth or len(target)
    phi_L = serialize.diffeo_from_json(body.phi_L)
    phi_R = serialize.diffeo_from_json(body.phi_R)
    result = bisect_b(body.alpha, body.beta, phi_L, phi_R, target, depth, body.tol)
    return serialize.to_plain(serialize.search_result_to_json(result, target, depth))


@router.post("/bisect")
async def bisect(body: BisectRequest):
    try:
        return await asyncio.to_thread(_bisect, body)
    except Exception as e:
        raise_http(e, "SEARCH")


def _rotation(body: RotationRequest) -> Dict[str, Any]:
    f = serialize.gap_map_from_json(body.map)
    doc: Dict[str, Any] = {"rotation_number": rotation_number(f, body.iterations), "iterations": body.iterations}
    if body.depth:
        gamma = renormalize_n(f, body.depth).gamma
        doc.update(gamma=str(gamma), interval=list(rotation_interval(gamma)))
    return serialize.to_plain(doc)


@router.post("/rotation-number")
async def rotation(body: RotationRequest):
    try:
        return await asyncio.to_thread(_rotation, body)
    except Exception as e:
        raise_http(e, "SEARCH")
