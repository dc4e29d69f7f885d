"""Deterministic virtual pill case.

Models the physical chain end to end: pills on a strain-gauge load cell,
an ADC producing signed 24-bit counts, a tag that is rewritten with the
current weight while the lid is open, and a battery that only drains while
the lid switch powers the electronics.

Noise has two parts with separate seeded streams so runs replay exactly:
white Gaussian read noise per sample, and a tare offset redrawn once per
lid opening (the "settling" error of a power cycle).  Snapshots record the
draw counts so a restored device continues the identical random sequence.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, asdict

from .ndef import (
    DATA_BLOCK_INDEX,
    DEFAULT_TAG_BLOCKS,
    TagMemory,
    WeightReading,
    read_tag,
    round_half_away_from_zero,
    write_tag,
)

SAMPLE_HZ = 10
RAW_MIN = -(1 << 23)
RAW_MAX = (1 << 23) - 1

LID_OPEN = "open"
LID_CLOSED = "closed"


class DeviceError(Exception):
    code = "device-error"


class DeviceUnpoweredError(DeviceError):
    """Sampling attempted while the lid switch has the electronics off."""

    code = "device-unpowered"


class LidClosedError(DeviceError):
    code = "lid-closed"


class PillUnderflowError(DeviceError):
    code = "pill-underflow"


class CalibrationError(DeviceError):
    code = "calibration"


@dataclass
class PillContainer:
    pill_count: int
    true_unit_mass: float
    tare_mass: float = 0.0

    def __post_init__(self):
        if self.pill_count < 0:
            raise ValueError("pill_count must be >= 0")
        if self.true_unit_mass <= 0:
            raise ValueError("true_unit_mass must be > 0")
        if self.tare_mass < 0:
            raise ValueError("tare_mass must be >= 0")

    @property
    def mass(self) -> float:
        return self.pill_count * self.true_unit_mass + self.tare_mass


@dataclass
class LoadCellModel:
    calibration_factor: float = 1000.0  # counts per gram
    offset_counts: int = 0
    noise_sigma: float = 0.05
    session_tare_offset: float = 0.0
    session_tare_range: float = 0.6
    rng_seed: int = 0

    def __post_init__(self):
        if self.calibration_factor == 0:
            raise CalibrationError("calibration factor must be nonzero")
        if self.noise_sigma < 0 or self.session_tare_range < 0:
            raise ValueError("noise parameters must be >= 0")


@dataclass(frozen=True)
class PowerComponent:
    name: str
    current_ma: float
    voltage_v: float

    @property
    def power_mw(self) -> float:
        return self.current_ma * self.voltage_v


@dataclass(frozen=True)
class PowerProfile:
    components: tuple[PowerComponent, ...]

    @property
    def total_power_mw(self) -> float:
        return sum(c.power_mw for c in self.components)

    @classmethod
    def constant(cls, total_mw: float, name: str = "configured") -> "PowerProfile":
        # normalized to a 1 V pseudo-component so total_power_mw == total_mw
        return cls((PowerComponent(name, total_mw, 1.0),))


# Stock electronics: amplifier/ADC, reader (worst-case draw), controller board.
REFERENCE_PROFILE = PowerProfile(
    (
        PowerComponent("HX711", 1.5, 5.0),
        PowerComponent("RC522", 26.0, 3.3),
        PowerComponent("Arduino Uno", 25.5, 9.0),
    )
)

DEFAULT_BATTERY_MAH = 300.0
DEFAULT_SUPPLY_V = 9.0


def calibrate(known_mass: float, raw_at_mass: int, raw_at_zero: int) -> float:
    """Counts-per-gram factor from a two-point calibration."""
    if known_mass <= 0:
        raise CalibrationError("known mass must be > 0")
    if raw_at_mass == raw_at_zero:
        raise CalibrationError("calibration readings are identical")
    return (raw_at_mass - raw_at_zero) / known_mass


def counts_to_grams(raw: int, cell: LoadCellModel) -> WeightReading:
    return WeightReading.clamped((raw - cell.offset_counts) / cell.calibration_factor)


def battery_lifetime(
    profile: PowerProfile,
    battery_mah: float,
    supply_v: float,
    opens_per_day: float,
    seconds_per_open: float,
) -> float:
    """Days until the battery is spent, with the lid-switch duty cycle.

    Current only flows while the lid is open, so the daily charge is
    I * duty_seconds converted to mAh.  Zero duty or zero draw never
    drains the battery: returns inf.
    """
    if battery_mah <= 0:
        raise ValueError("battery capacity must be > 0")
    if supply_v <= 0:
        raise ValueError("supply voltage must be > 0")
    if opens_per_day < 0 or seconds_per_open < 0:
        raise ValueError("duty cycle must be >= 0")
    duty_s_per_day = opens_per_day * seconds_per_open
    total_mw = profile.total_power_mw
    if duty_s_per_day == 0 or total_mw == 0:
        return math.inf
    current_ma = total_mw / supply_v
    mah_per_day = current_ma * duty_s_per_day / 3600.0
    return battery_mah / mah_per_day


class SmartPillCase:
    """One simulated case.  Not thread-safe; callers serialize access."""

    def __init__(
        self,
        container: PillContainer,
        cell: LoadCellModel | None = None,
        *,
        battery_mah: float = DEFAULT_BATTERY_MAH,
        power_profile: PowerProfile = REFERENCE_PROFILE,
        supply_v: float = DEFAULT_SUPPLY_V,
        n_blocks: int = DEFAULT_TAG_BLOCKS,
        data_block_index: int = DATA_BLOCK_INDEX,
    ):
        self.container = container
        self.cell = cell if cell is not None else LoadCellModel()
        self.tag = TagMemory.blank(n_blocks, data_block_index)
        self.lid = LID_CLOSED
        self.battery_mah = float(battery_mah)
        self.clock = 0.0
        self.power_profile = power_profile
        self.supply_v = float(supply_v)
        self.sample_index = 0
        self._noise_draws = 0
        self._session_draws = 0
        self._noise_rng = random.Random(f"{self.cell.rng_seed}:noise")
        self._session_rng = random.Random(f"{self.cell.rng_seed}:session")

    # -- lid and actions --------------------------------------------------

    @property
    def lid_open(self) -> bool:
        return self.lid == LID_OPEN

    def open_lid(self):
        if self.lid_open:
            return  # idempotent
        self.lid = LID_OPEN
        u = self._session_rng.uniform(-1.0, 1.0)
        self._session_draws += 1
        if self.cell.session_tare_range > 0:
            self.cell.session_tare_offset = u * self.cell.session_tare_range
        self._sample_and_write()

    def close_lid(self):
        # tag keeps the last written value; electronics power down
        self.lid = LID_CLOSED

    def remove_pills(self, n: int):
        if not isinstance(n, int) or n <= 0:
            raise ValueError("must remove a positive integer number of pills")
        if not self.lid_open:
            raise LidClosedError("cannot remove pills through a closed lid")
        if n > self.container.pill_count:
            raise PillUnderflowError(
                f"{n} pills requested, {self.container.pill_count} present"
            )
        self.container.pill_count -= n
        self._sample_and_write()

    def advance(self, seconds: float):
        """Let simulated time pass; samples and drains only while open."""
        if seconds < 0:
            raise ValueError("cannot advance by negative time")
        self.clock += seconds
        if self.lid_open:
            for _ in range(int(round(seconds * SAMPLE_HZ))):
                self._sample_and_write()
            drain_ma = self.power_profile.total_power_mw / self.supply_v
            self.battery_mah = max(0.0, self.battery_mah - drain_ma * seconds / 3600.0)

    # -- sensing ----------------------------------------------------------

    def sample_raw(self) -> int:
        if not self.lid_open:
            raise DeviceUnpoweredError("load cell is unpowered while the lid is closed")
        z = self._noise_rng.gauss(0.0, 1.0)
        self._noise_draws += 1
        noise = z * self.cell.noise_sigma
        grams = self.container.mass + noise + self.cell.session_tare_offset
        raw = (
            round_half_away_from_zero(self.cell.calibration_factor * grams)
            + self.cell.offset_counts
        )
        self.sample_index += 1
        return min(RAW_MAX, max(RAW_MIN, raw))

    def _sample_and_write(self):
        w = counts_to_grams(self.sample_raw(), self.cell)
        self.tag = write_tag(self.tag, w)

    def tag_weight(self) -> WeightReading:
        """Read the record currently on the tag (passive, works lid-closed)."""
        return read_tag(self.tag)

    # -- persistence ------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "container": asdict(self.container),
            "cell": asdict(self.cell),
            "lid": self.lid,
            "battery_mah": self.battery_mah,
            "clock": self.clock,
            "supply_v": self.supply_v,
            "power_components": [asdict(c) for c in self.power_profile.components],
            "tag": {
                "data_block_index": self.tag.data_block_index,
                "blocks": [b.hex().upper() for b in self.tag.blocks],
            },
            "sample_index": self.sample_index,
            "noise_draws": self._noise_draws,
            "session_draws": self._session_draws,
        }

    @classmethod
    def restore(cls, snap: dict) -> "SmartPillCase":
        dev = cls(
            PillContainer(**snap["container"]),
            LoadCellModel(**snap["cell"]),
            battery_mah=snap["battery_mah"],
            supply_v=snap["supply_v"],
            power_profile=PowerProfile(
                tuple(PowerComponent(**c) for c in snap["power_components"])
            ),
            n_blocks=len(snap["tag"]["blocks"]),
            data_block_index=snap["tag"]["data_block_index"],
        )
        dev.lid = snap["lid"]
        dev.clock = snap["clock"]
        dev.tag = TagMemory(
            tuple(bytes.fromhex(b) for b in snap["tag"]["blocks"]),
            snap["tag"]["data_block_index"],
        )
        dev.sample_index = snap["sample_index"]
        # replay the consumed draws so the streams resume exactly
        for _ in range(snap["noise_draws"]):
            dev._noise_rng.gauss(0.0, 1.0)
        dev._noise_draws = snap["noise_draws"]
        for _ in range(snap["session_draws"]):
            dev._session_rng.uniform(-1.0, 1.0)
        dev._session_draws = snap["session_draws"]
        return dev
