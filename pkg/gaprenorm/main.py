import logging
import time

import dotenv
from fastapi import FastAPI, Request
from starlette.middleware.base import BaseHTTPMiddleware
from starlette.responses import JSONResponse
from starlette.status import HTTP_200_OK

from .config import get_settings
from .routers_renorm import router as renorm_router
from .routers_search import router as search_router
from .routers_tangent import router as tangent_router

dotenv.load_dotenv()

settings = get_settings()

logging.basicConfig(
    level=settings.log_level.upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)

logger = logging.getLogger(__name__)


class RequestLoggingMiddleware(BaseHTTPMiddleware):
    async def dispatch(self, request: Request, call_next):
        start_time = time.perf_counter()
        client_host = request.client.host if request.client else 'unknown'
        logger.info(f"[REQUEST] {request.method} {request.url.path} - Client: {client_host}")
        if request.method == "POST":
            size = request.headers.get('content-length', 'unknown')
            logger.debug(f"[REQUEST] Payload size: {size} bytes")

        response = await call_next(request)

        elapsed = time.perf_counter() - start_time
        level = logging.WARNING if response.status_code >= 500 else logging.INFO
        logger.log(level, f"[RESPONSE] {request.method} {request.url.path} - Status: {response.status_code} - Compute: {elapsed:.3f}s")
        return response


app = FastAPI(title=settings.app_name)

app.add_middleware(RequestLoggingMiddleware)


@app.get("/health", status_code=HTTP_200_OK)
async def health():
    return JSONResponse({"status": "ok", "environment": settings.environment})


app.include_router(renorm_router)  # /renorm/*
app.include_router(tangent_router)  # /tangent/*
app.include_router(search_router)  # /search/*
