import asyncio
import logging
from typing import Any, Dict

from fastapi import APIRouter
from pydantic import BaseModel, Field

from . import serialize
from .http_errors import raise_http
from .tangent import (
    ConeParams,
    block_report,
    cone_invariance_test,
    jacobian,
    reduced_model_roots,
    spectrum,
    splitting_verdict,
    technical_lemma_check,
)

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/tangent", tags=["tangent"])


class JacobianRequest(BaseModel):
    map: Dict[str, Any]
    m: int = Field(default=8, ge=4, le=64)
    h: float = Field(default=1e-6, gt=0)
    split_delta: float = Field(default=0.5, gt=0, lt=1)
    include_matrix: bool = False


class ConeRequest(BaseModel):
    map: Dict[str, Any]
    m: int = Field(default=8, ge=4, le=64)
    h: float = Field(default=1e-6, gt=0)
    r: float = Field(default=0.4, gt=0, lt=1)
    delta: float = Field(default=0.1, gt=0)
    samples: int = Field(default=1000, ge=1, le=100000)
    seed: int = 0


def _jacobian(body: JacobianRequest) -> Dict[str, Any]:
    f = serialize.gap_map_from_json(body.map)
    J = jacobian(f, body.m, body.h)
    report = block_report(J).model_dump()
    roots = reduced_model_roots(report["K3"], report["K4"], report["M1"])
    report.update(
        k=J.k,
        sigma=J.sigma.value,
        m=J.m,
        spectrum=spectrum(J),
        reduced_roots=[str(v) if roots.is_complex else v for v in (roots.lambda_plus, roots.lambda_minus)],
        splitting=splitting_verdict(J, body.split_delta),
    )
    if body.include_matrix:
        report["matrix"] = J.matrix
    logger.info(f"[JACOBIAN] K3={report['K3']:.6g} eps_max={report['eps_max']:.3g}")
    return serialize.to_plain(report)


@router.post("/jacobian")
async def jacobian_report(body: JacobianRequest):
    try:
        return await asyncio.to_thread(_jacobian, body)
    except Exception as e:
        raise_http(e, "JACOBIAN")


def _cone_check(body: ConeRequest) -> Dict[str, Any]:
    f = serialize.gap_map_from_json(body.map)
    J = jacobian(f, body.m, body.h)
    params = ConeParams(r=body.r, delta=body.delta)
    report = cone_invariance_test(J, params, body.samples, body.seed).model_dump()
    report["technical_lemma"] = technical_lemma_check(J, params, body.samples, body.seed).model_dump()
    return serialize.to_plain(report)


@router.post("/cone-check")
async def cone_check(body: ConeRequest):
    try:
        return await asyncio.to_thread(_cone_check, body)
    except Exception as e:
        raise_http(e, "CONE")
