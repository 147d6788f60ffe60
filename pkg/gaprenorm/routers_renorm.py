import asyncio
import logging
from typing import Any, Dict, Optional

from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, Field

from . import serialize
from .decomp import DecomposedGapMap, project, renormalize_decomposed_n
from .gapmap import affine_gap_map
from .http_errors import raise_http
from .renorm import affine_distance, renormalize, renormalize_n

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/renorm", tags=["renorm"])


class RenormalizeRequest(BaseModel):
    map: Dict[str, Any]
    depth: int = Field(default=1, ge=1, le=64)
    m: Optional[int] = Field(default=None, ge=4, le=64)


class DecomposedRequest(BaseModel):
    map: Optional[Dict[str, Any]] = None
    decomposed: Optional[Dict[str, Any]] = None
    depth: int = Field(default=1, ge=1, le=8)
    m: Optional[int] = Field(default=None, ge=4, le=64)


def _renormalize(body: RenormalizeRequest) -> Dict[str, Any]:
    f = serialize.gap_map_from_json(body.map)
    trajectory = renormalize_n(f, body.depth, m=body.m)
    doc = serialize.trajectory_to_json(trajectory)
    if trajectory.blocked is not None:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail={**serialize.to_plain(trajectory.blocked.to_dict()), "trajectory": serialize.to_plain(doc)},
        )
    return serialize.to_plain(doc)


@router.post("/renormalize")
async def renormalize_map(body: RenormalizeRequest):
    try:
        return await asyncio.to_thread(_renormalize, body)
    except Exception as e:
        raise_http(e, "RENORM")


def _decomposed(body: DecomposedRequest) -> Dict[str, Any]:
    if body.decomposed is not None:
        df = serialize.decomposed_from_json(body.decomposed)
    elif body.map is not None:
        df = DecomposedGapMap.from_gap_map(serialize.gap_map_from_json(body.map))
    else:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="map or decomposed required")
    trajectory = renormalize_decomposed_n(df, body.depth, m=body.m)
    if trajectory.blocked is not None:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=serialize.to_plain(trajectory.blocked.to_dict()),
        )
    return serialize.to_plain(
        {
            "gamma": str(trajectory.gamma),
            "levels": [
                {
                    "decomposed": serialize.decomposed_to_json(level),
                    "projected": serialize.gap_map_to_json(project(level, body.m)),
                }
                for level in trajectory.maps
            ],
        }
    )


@router.post("/decomposed")
async def renormalize_decomposed_map(body: DecomposedRequest):
    try:
        return await asyncio.to_thread(_decomposed, body)
    except Exception as e:
        raise_http(e, "DECOMP")


@router.get("/affine-demo")
async def affine_demo():
    try:
        f = affine_gap_map(0.5, 0.5, 0.3)
        step = renormalize(f)
        g = step.renormalized
        return serialize.to_plain(
            {
                "k": step.k,
                "sigma": step.sigma.value,
                "I_prime": list(step.I_prime),
                "alpha": g.alpha,
                "beta": g.beta,
                "b": g.b,
                "affine_distance": affine_distance(g),
            }
        )
    except Exception as e:
        raise_http(e, "RENORM")
