"""Core gateway logic, framework-free.

Owns the fleet: registers simulated cases, runs their actions, scans on
behalf of phones, and keeps everything durable under a data directory::

    <data_dir>/devices/<device_id>/state.json     device + prescription
    <data_dir>/devices/<device_id>/events.ndjson  append-only scan events

A scan commits by appending its event; the in-memory session advances only
after the append succeeds, so a crash or write failure can never leave the
session and the log disagreeing.  Session state itself is reconstructed
from the log on startup (last event's weight), gated by a floor marker so
a prescription change still forces re-calibration across restarts.
"""

from __future__ import annotations

import json
import math
import threading
import uuid
from pathlib import Path

import numpy as np

from ..adherence import (
    CALIBRATED,
    CORRECT,
    AdherenceError,
    MedicineCatalog,
    Prescription,
    ScanResult,
    Session,
    Verdict,
    calibrate_initial,
    process_scan,
)
from ..device import DeviceError, LoadCellModel, PillContainer, SmartPillCase
from ..fed.population import FEATURE_DIM, ClientDataset, build_features
from ..ndef import NdefError, WeightReading
from .events import AdherenceEvent, EventLog

SECONDS_PER_DAY = 86400


class GatewayError(Exception):
    def __init__(self, code: str, message: str, status: int = 409):
        super().__init__(message)
        self.code = code
        self.status = status


def unknown_device(device_id: str) -> GatewayError:
    return GatewayError("unknown-device", f"no device {device_id!r}", status=404)


class _DeviceRecord:
    def __init__(self, device_id: str, device: SmartPillCase, events: EventLog,
                 prescription: Prescription | None, session: Session, session_floor: int):
        self.device_id = device_id
        self.device = device
        self.events = events
        self.prescription = prescription
        self.session = session
        self.session_floor = session_floor  # event id at last prescription change
        self.lock = threading.Lock()

    @property
    def seq(self) -> int:
        last = self.events.last()
        return last.event_id if last else 0


def _weight_text(grams: float) -> str:
    return WeightReading.from_grams(grams).text


def _prescription_dict(rx: Prescription) -> dict:
    return {
        "medicine_id": rx.medicine_id,
        "medicine_name": rx.medicine_name,
        "unit_weight": rx.unit_weight,
        "recommended_dose": rx.recommended_dose,
        "schedule": list(rx.schedule),
    }


class GatewayService:
    def __init__(self, data_dir, catalog: MedicineCatalog | None = None):
        self.data_dir = Path(data_dir)
        self.devices_dir = self.data_dir / "devices"
        self.devices_dir.mkdir(parents=True, exist_ok=True)
        self.catalog = catalog or MedicineCatalog.default()
        self._records: dict[str, _DeviceRecord] = {}
        self._registry_lock = threading.Lock()
        self._load_existing()

    # -- persistence -------------------------------------------------------

    def _device_dir(self, device_id: str) -> Path:
        return self.devices_dir / device_id

    def _persist(self, rec: _DeviceRecord):
        state = {
            "device_id": rec.device_id,
            "device": rec.device.snapshot(),
            "prescription": _prescription_dict(rec.prescription) if rec.prescription else None,
            "session_floor": rec.session_floor,
        }
        path = self._device_dir(rec.device_id) / "state.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(state, sort_keys=True), encoding="utf-8")
        tmp.replace(path)

    def _load_existing(self):
        for d in sorted(self.devices_dir.iterdir()) if self.devices_dir.exists() else []:
            state_path = d / "state.json"
            if not state_path.is_file():
                continue
            state = json.loads(state_path.read_text(encoding="utf-8"))
            device = SmartPillCase.restore(state["device"])
            events = EventLog(d / "events.ndjson")
            rx = None
            if state["prescription"]:
                p = state["prescription"]
                rx = Prescription(
                    p["medicine_id"], p["medicine_name"], p["unit_weight"],
                    p["recommended_dose"], tuple(p["schedule"]),
                )
            session = Session()
            last = events.last()
            if last and last.event_id > state["session_floor"]:
                session = Session(previous_weight=float(last.current_weight))
            self._records[state["device_id"]] = _DeviceRecord(
                state["device_id"], device, events, rx, session, state["session_floor"]
            )

    def _get(self, device_id: str) -> _DeviceRecord:
        try:
            return self._records[device_id]
        except KeyError:
            raise unknown_device(device_id) from None

    # -- registry ----------------------------------------------------------

    def register_device(
        self,
        *,
        pills: int,
        true_unit_mass: float = 4.4,
        tare_mass: float = 0.0,
        noise_sigma: float = 0.05,
        tare_range: float = 0.6,
        calibration_factor: float = 1000.0,
        offset_counts: int = 0,
        seed: int = 0,
        battery_mah: float = 300.0,
        device_id: str | None = None,
    ) -> dict:
        with self._registry_lock:
            device_id = device_id or f"case-{uuid.uuid4().hex[:8]}"
            if device_id in self._records:
                raise GatewayError("duplicate-device", f"device {device_id!r} exists")
            try:
                device = SmartPillCase(
                    PillContainer(pills, true_unit_mass, tare_mass),
                    LoadCellModel(
                        calibration_factor=calibration_factor,
                        offset_counts=offset_counts,
                        noise_sigma=noise_sigma,
                        session_tare_range=tare_range,
                        rng_seed=seed,
                    ),
                    battery_mah=battery_mah,
                )
            except (ValueError, DeviceError) as e:
                raise GatewayError("invalid-device", str(e), status=422) from e
            self._device_dir(device_id).mkdir(parents=True, exist_ok=True)
            rec = _DeviceRecord(
                device_id, device, EventLog(self._device_dir(device_id) / "events.ndjson"),
                None, Session(), 0,
            )
            self._records[device_id] = rec
            self._persist(rec)
        return self.get_status(device_id)

    def list_devices(self) -> list[dict]:
        with self._registry_lock:
            ids = sorted(self._records)
        return [self.get_status(i) for i in ids]

    def get_status(self, device_id: str) -> dict:
        rec = self._get(device_id)
        with rec.lock:
            dev = rec.device
            try:
                tag_weight = dev.tag_weight().text
            except NdefError:
                tag_weight = None
            return {
                "device_id": rec.device_id,
                "lid": dev.lid,
                "pill_count": dev.container.pill_count,
                "battery_mah": dev.battery_mah,
                "clock": dev.clock,
                "tag_weight": tag_weight,
                "prescription": _prescription_dict(rec.prescription) if rec.prescription else None,
                "session_calibrated": rec.session.calibrated,
                "last_event_id": rec.seq,
            }

    # -- prescription --------------------------------------------------------

    def set_prescription(
        self,
        device_id: str,
        medicine_id: str,
        recommended_dose: int,
        schedule=None,
        unit_weight: float | None = None,
    ) -> dict:
        rec = self._get(device_id)
        if medicine_id not in self.catalog:
            raise GatewayError(
                "invalid-prescription", f"medicine {medicine_id!r} not in catalog", status=422
            )
        try:
            rx = Prescription.from_catalog(self.catalog, medicine_id, recommended_dose, schedule)
            if unit_weight is not None:
                rx = Prescription(
                    rx.medicine_id, rx.medicine_name, unit_weight, recommended_dose, rx.schedule
                )
        except ValueError as e:
            raise GatewayError("invalid-prescription", str(e), status=422) from e
        with rec.lock:
            rec.prescription = rx
            rec.session = Session()  # next scan re-calibrates
            rec.session_floor = rec.seq
            self._persist(rec)
        return self.get_status(device_id)

    # -- device actions ------------------------------------------------------

    def device_action(self, device_id: str, action: str, n: int | None = None,
                      seconds: float | None = None) -> dict:
        rec = self._get(device_id)
        with rec.lock:
            try:
                if action == "open":
                    rec.device.open_lid()
                elif action == "close":
                    rec.device.close_lid()
                elif action == "remove":
                    if n is None:
                        raise GatewayError("bad-action", "remove needs n", status=422)
                    rec.device.remove_pills(n)
                elif action == "advance":
                    if seconds is None:
                        raise GatewayError("bad-action", "advance needs seconds", status=422)
                    rec.device.advance(seconds)
                else:
                    raise GatewayError("bad-action", f"unknown action {action!r}", status=422)
            except DeviceError as e:
                raise GatewayError(e.code, str(e)) from e
            except ValueError as e:
                raise GatewayError("bad-action", str(e), status=422) from e
            self._persist(rec)
        return self.get_status(device_id)

    # -- scanning --------------------------------------------------------------

    def scan(self, device_id: str) -> dict:
        rec = self._get(device_id)
        with rec.lock:
            if rec.prescription is None:
                raise GatewayError("no-prescription", "set a prescription before scanning")
            if rec.device.lid_open:
                raise GatewayError("lid-open", "close the lid before scanning")
            now = rec.device.clock
            try:
                if not rec.session.calibrated:
                    new_session = calibrate_initial(rec.device.tag)
                    w = new_session.previous_weight
                    result = ScanResult(now, w, w, 0, Verdict(CALIBRATED))
                else:
                    result, new_session = process_scan(
                        rec.device.tag, rec.session, rec.prescription, now
                    )
            except AdherenceError as e:
                raise GatewayError(e.code, str(e)) from e
            event = AdherenceEvent(
                event_id=rec.seq + 1,
                device_id=rec.device_id,
                timestamp=result.timestamp,
                previous_weight=_weight_text(result.previous_weight),
                current_weight=_weight_text(result.current_weight),
                doses_taken=result.doses_taken,
                verdict_kind=result.verdict.kind,
                verdict_count=result.verdict.count,
                message=result.verdict.message,
                prescription=_prescription_dict(rec.prescription),
            )
            rec.events.append(event)  # commit point; raises leave session alone
            rec.session = new_session
            return {
                "device_id": rec.device_id,
                "event_id": event.event_id,
                "timestamp": event.timestamp,
                "previous_weight": event.previous_weight,
                "current_weight": event.current_weight,
                "doses_taken": event.doses_taken,
                "verdict": {
                    "kind": event.verdict_kind,
                    "count": event.verdict_count,
                    "message": event.message,
                },
                "calibrated": event.verdict_kind == CALIBRATED,
            }

    # -- history and export ------------------------------------------------------

    def get_events(self, device_id: str, since: int = 0) -> list[dict]:
        rec = self._get(device_id)
        with rec.lock:
            events = rec.events.events(since)
        return [
            {
                "event_id": e.event_id,
                "timestamp": e.timestamp,
                "previous_weight": e.previous_weight,
                "current_weight": e.current_weight,
                "doses_taken": e.doses_taken,
                "verdict": {
                    "kind": e.verdict_kind,
                    "count": e.verdict_count,
                    "message": e.message,
                },
                "prescription": e.prescription,
            }
            for e in events
        ]

    def export_dataset(self, device_id: str) -> ClientDataset:
        """Training rows from the event log; calibration events carry no
        dose judgment so they only contribute the bottle baseline."""
        rec = self._get(device_id)
        with rec.lock:
            events = rec.events.events(0)
        baseline = None
        history: list[tuple[float, bool]] = []  # (timestamp, correct)
        rows, labels = [], []
        for e in events:
            if e.verdict_kind == CALIBRATED:
                baseline = float(e.current_weight)
                continue
            t = e.timestamp
            day = int(t // SECONDS_PER_DAY)
            dow = day % 7
            schedule = e.prescription.get("schedule") or ["08:00"]
            slot = _nearest_slot(t % SECONDS_PER_DAY, schedule)
            window = [c for (ts, c) in history if t - 7 * SECONDS_PER_DAY < ts]
            rate = sum(window) / len(window) if window else 1.0
            ref = baseline if baseline else float(e.previous_weight)
            # pre-dose state, same causal convention as the population generator
            frac = min(1.0, max(0.0, float(e.previous_weight) / ref)) if ref > 0 else 0.0
            rows.append(build_features(dow, slot, rate, frac))
            correct = e.verdict_kind == CORRECT
            labels.append(1.0 if correct else 0.0)
            history.append((t, correct))
        if not rows:
            raise GatewayError("insufficient-data", "no dose events to export", status=422)
        return ClientDataset(
            device_id, np.array(rows).reshape(-1, FEATURE_DIM), np.array(labels)
        )

    def catalog_entries(self) -> list[dict]:
        return [
            {"medicine_id": m.medicine_id, "name": m.name, "unit_weight": m.unit_weight}
            for m in self.catalog
        ]


def _nearest_slot(seconds_of_day: float, schedule: list[str]) -> int:
    minutes = seconds_of_day / 60.0
    best, best_gap = 0, math.inf
    for i, hhmm in enumerate(schedule):
        h, _, m = hhmm.partition(":")
        slot_min = int(h) * 60 + int(m or 0)
        gap = abs(minutes - slot_min)
        gap = min(gap, 1440 - gap)  # wrap past midnight
        if gap < best_gap:
            best, best_gap = i, gap
    return best
