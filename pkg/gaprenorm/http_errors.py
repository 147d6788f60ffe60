import logging
from typing import NoReturn

from fastapi import HTTPException, status

from .errors import DomainError, GapRenormError, NotRenormalizableError, UnrealizableCombinatoricsError
from .serialize import to_plain

logger = logging.getLogger(__name__)


def status_for(e: GapRenormError) -> int:
    if isinstance(e, DomainError):
        return status.HTTP_400_BAD_REQUEST
    if isinstance(e, (NotRenormalizableError, UnrealizableCombinatoricsError)):
        return status.HTTP_422_UNPROCESSABLE_ENTITY
    return status.HTTP_500_INTERNAL_SERVER_ERROR


def raise_http(e: Exception, tag: str) -> NoReturn:
    """Re-raise an engine failure as the matching HTTPException."""
    if isinstance(e, HTTPException):
        raise e
    if isinstance(e, GapRenormError):
        code = status_for(e)
        log = logger.error if code >= 500 else logger.info
        log(f"[{tag}] {type(e).__name__}: {e.message}")
        raise HTTPException(status_code=code, detail=to_plain(e.to_dict()))
    logger.error(f"[{tag}] Unexpected error: {e}", exc_info=True)
    raise HTTPException(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        detail=f"Internal server error: {str(e)}",
    )
