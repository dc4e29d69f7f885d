"""HTTP face of the gateway.  Every failure is {error: {code, message}}."""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..adherence import MedicineCatalog
from .schemas import (
    ActionRequest,
    CatalogResponse,
    DatasetResponse,
    DeviceStatus,
    ErrorResponse,
    EventsResponse,
    PrescriptionRequest,
    RegisterDeviceRequest,
    ScanResponse,
)
from .service import GatewayError, GatewayService

_ERROR_RESPONSES = {
    404: {"model": ErrorResponse},
    409: {"model": ErrorResponse},
    422: {"model": ErrorResponse},
}


def create_app(
    data_dir, catalog: MedicineCatalog | None = None, service: GatewayService | None = None
) -> FastAPI:
    svc = service or GatewayService(data_dir, catalog)
    app = FastAPI(title="pillcase gateway", version="0.1.0")
    app.state.service = svc
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(GatewayError)
    async def gateway_error(_request: Request, exc: GatewayError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(p) for p in first.get("loc", ()))
        return JSONResponse(
            status_code=422,
            content={
                "error": {
                    "code": "validation",
                    "message": f"{where}: {first.get('msg', 'invalid request')}",
                }
            },
        )

    @app.get("/catalog", response_model=CatalogResponse)
    def catalog_route():
        return {"medicines": svc.catalog_entries()}

    @app.get("/devices", response_model=list[DeviceStatus])
    def list_devices():
        return svc.list_devices()

    @app.post("/devices", response_model=DeviceStatus, status_code=201,
              responses=_ERROR_RESPONSES)
    def register(req: RegisterDeviceRequest):
        return svc.register_device(**req.model_dump())

    @app.get("/devices/{device_id}/status", response_model=DeviceStatus,
             responses=_ERROR_RESPONSES)
    def status(device_id: str):
        return svc.get_status(device_id)

    @app.put("/devices/{device_id}/prescription", response_model=DeviceStatus,
             responses=_ERROR_RESPONSES)
    def prescribe(device_id: str, req: PrescriptionRequest):
        return svc.set_prescription(
            device_id,
            req.medicine_id,
            req.recommended_dose,
            schedule=req.schedule,
            unit_weight=req.unit_weight,
        )

    @app.post("/devices/{device_id}/action", response_model=DeviceStatus,
              responses=_ERROR_RESPONSES)
    def action(device_id: str, req: ActionRequest):
        return svc.device_action(device_id, req.action, n=req.n, seconds=req.seconds)

    @app.post("/devices/{device_id}/scan", response_model=ScanResponse,
              responses=_ERROR_RESPONSES)
    def scan(device_id: str):
        return svc.scan(device_id)

    @app.get("/devices/{device_id}/events", response_model=EventsResponse,
             responses=_ERROR_RESPONSES)
    def events(device_id: str, since: int = Query(default=0, ge=0)):
        return {"device_id": device_id, "events": svc.get_events(device_id, since)}

    @app.get("/devices/{device_id}/dataset", response_model=DatasetResponse,
             responses=_ERROR_RESPONSES)
    def dataset(device_id: str):
        ds = svc.export_dataset(device_id)
        return {
            "device_id": device_id,
            "features": ds.features.tolist(),
            "labels": ds.labels.tolist(),
        }

    return app
