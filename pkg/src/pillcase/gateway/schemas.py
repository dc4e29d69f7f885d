"""Wire models.  Weights cross the API only as exact ``xx.x`` strings."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

WEIGHT_PATTERN = r"^\d{2}\.\d$"
SCHEDULE_PATTERN = r"^([01]\d|2[0-3]):[0-5]\d$"


class RegisterDeviceRequest(BaseModel):
    pills: int = Field(ge=0)
    true_unit_mass: float = Field(default=4.4, gt=0)
    tare_mass: float = Field(default=0.0, ge=0)
    noise_sigma: float = Field(default=0.05, ge=0)
    tare_range: float = Field(default=0.6, ge=0)
    calibration_factor: float = Field(default=1000.0)
    offset_counts: int = 0
    seed: int = 0
    battery_mah: float = Field(default=300.0, gt=0)
    device_id: Optional[str] = Field(default=None, pattern=r"^[A-Za-z0-9_-]{1,64}$")


class PrescriptionRequest(BaseModel):
    medicine_id: str = Field(min_length=1)
    recommended_dose: int = Field(ge=1)
    schedule: Optional[list[str]] = Field(default=None)
    unit_weight: Optional[float] = Field(default=None, gt=0)

    model_config = {"json_schema_extra": {"note": "schedule entries are HH:MM"}}


class ActionRequest(BaseModel):
    action: Literal["open", "close", "remove", "advance"]
    n: Optional[int] = Field(default=None, ge=1)
    seconds: Optional[float] = Field(default=None, ge=0)


class VerdictModel(BaseModel):
    kind: Literal["correct", "insufficient", "exceed", "refill", "calibrated"]
    count: int = 0
    message: str


class PrescriptionModel(BaseModel):
    medicine_id: str
    medicine_name: str
    unit_weight: float
    recommended_dose: int
    schedule: list[str]


class DeviceStatus(BaseModel):
    device_id: str
    lid: Literal["open", "closed"]
    pill_count: int
    battery_mah: float
    clock: float
    tag_weight: Optional[str] = Field(default=None, pattern=WEIGHT_PATTERN)
    prescription: Optional[PrescriptionModel] = None
    session_calibrated: bool
    last_event_id: int


class ScanResponse(BaseModel):
    device_id: str
    event_id: int
    timestamp: float
    previous_weight: str = Field(pattern=WEIGHT_PATTERN)
    current_weight: str = Field(pattern=WEIGHT_PATTERN)
    doses_taken: int
    verdict: VerdictModel
    calibrated: bool


class EventModel(BaseModel):
    event_id: int
    timestamp: float
    previous_weight: str = Field(pattern=WEIGHT_PATTERN)
    current_weight: str = Field(pattern=WEIGHT_PATTERN)
    doses_taken: int
    verdict: VerdictModel
    prescription: PrescriptionModel


class EventsResponse(BaseModel):
    device_id: str
    events: list[EventModel]


class MedicineModel(BaseModel):
    medicine_id: str
    name: str
    unit_weight: float


class CatalogResponse(BaseModel):
    medicines: list[MedicineModel]


class DatasetResponse(BaseModel):
    device_id: str
    features: list[list[float]]
    labels: list[float]


class ErrorDetail(BaseModel):
    code: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorDetail
