"""Tag codec: one pill-case weight per NDEF short text record.

The tag is block-addressed storage in the MIFARE Classic style, 16-byte
blocks, with the record living in a single data block (block 4 by default).
The record is a well-known text record ("T", UTF-8, language "en") wrapped
in an NDEF message TLV and closed by a terminator TLV.  The payload is the
weight rendered as exactly four ASCII bytes ``xx.x`` grams, zero-padded, so
a block is always::

    03 0B D1 01 07 54 02 65 6E <d> <d> 2E <d> FE 00 00

Everything outside the three digit positions is fixed framing.  Decoding
validates every framing byte (first bad offset is reported) so a corrupted
block can never parse into a plausible-but-wrong weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

BLOCK_SIZE = 16
DATA_BLOCK_INDEX = 4
DEFAULT_TAG_BLOCKS = 64  # MIFARE Classic 1K

TLV_NDEF_MESSAGE = 0x03
TLV_TERMINATOR = 0xFE
# MB=1 ME=1 SR=1, TNF=well-known; type "T"; status byte = UTF-8, 2-char language.
RECORD_HEADER = 0xD1
TYPE_LENGTH = 0x01
PAYLOAD_LENGTH = 0x07
TYPE_TEXT = 0x54
STATUS_UTF8_LANG2 = 0x02
LANGUAGE = b"en"

# Fixed leading framing, offsets 0..8.
_LEAD = bytes(
    (
        TLV_NDEF_MESSAGE,
        0x0B,  # message length: header..payload = 11 bytes
        RECORD_HEADER,
        TYPE_LENGTH,
        PAYLOAD_LENGTH,
        TYPE_TEXT,
        STATUS_UTF8_LANG2,
        LANGUAGE[0],
        LANGUAGE[1],
    )
)
PAYLOAD_OFFSET = 9  # payload occupies offsets 9..12, '.' fixed at 11
TERMINATOR_OFFSET = 13


class NdefError(ValueError):
    """Base for codec failures."""

    code = "tag-parse"


class WeightRangeError(NdefError):
    code = "weight-range"


class EmptyTagError(NdefError):
    code = "empty-tag"


class TagParseError(NdefError):
    """Framing byte missing or garbled; carries the first bad offset."""

    code = "tag-parse"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class PayloadError(NdefError):
    """Payload byte is not the digit/dot the format requires."""

    code = "tag-payload"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


def round_half_away_from_zero(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@dataclass(frozen=True, order=True)
class WeightReading:
    """A weight in grams with exactly one fractional digit, 0.0..99.9.

    Stored as integer tenths so equality and round-trips are exact.
    """

    tenths: int

    def __post_init__(self):
        if not isinstance(self.tenths, int):
            raise WeightRangeError(f"tenths must be int, got {self.tenths!r}")
        if not 0 <= self.tenths <= 999:
            raise WeightRangeError(f"weight {self.tenths / 10:.1f} outside 0.0..99.9")

    @classmethod
    def from_grams(cls, grams: float) -> "WeightReading":
        tenths = round_half_away_from_zero(grams * 10.0)
        if abs(grams * 10.0 - tenths) > 1e-6:
            raise WeightRangeError(f"weight {grams!r} has more than one decimal")
        return cls(tenths)

    @classmethod
    def clamped(cls, grams: float) -> "WeightReading":
        """Round to one decimal and clamp into the representable range."""
        tenths = round_half_away_from_zero(grams * 10.0)
        return cls(min(999, max(0, tenths)))

    @property
    def grams(self) -> float:
        return self.tenths / 10.0

    @property
    def text(self) -> str:
        return f"{self.tenths // 10:02d}.{self.tenths % 10:d}"

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class NdefWeightRecord:
    """The four ASCII payload bytes ``xx.x`` plus framing around them."""

    payload: bytes

    def __post_init__(self):
        if len(self.payload) != 4:
            raise PayloadError("payload must be 4 bytes", PAYLOAD_OFFSET)
        for i in (0, 1, 3):
            if not 0x30 <= self.payload[i] <= 0x39:
                raise PayloadError("payload byte is not a digit", PAYLOAD_OFFSET + i)
        if self.payload[2] != 0x2E:
            raise PayloadError("payload byte 3 must be '.'", PAYLOAD_OFFSET + 2)

    def to_block(self) -> bytes:
        block = _LEAD + self.payload + bytes((TLV_TERMINATOR,))
        return block.ljust(BLOCK_SIZE, b"\x00")

    @classmethod
    def from_block(cls, block: bytes) -> "NdefWeightRecord":
        if len(block) != BLOCK_SIZE:
            raise TagParseError(f"block must be {BLOCK_SIZE} bytes", len(block))
        if not any(block):
            raise EmptyTagError("tag holds no record")
        for off, want in enumerate(_LEAD):
            if block[off] != want:
                raise TagParseError(
                    f"expected 0x{want:02X}, found 0x{block[off]:02X}", off
                )
        payload = block[PAYLOAD_OFFSET : PAYLOAD_OFFSET + 4]
        for i in (0, 1, 3):
            if not 0x30 <= payload[i] <= 0x39:
                raise PayloadError(
                    f"payload byte 0x{payload[i]:02X} is not a digit",
                    PAYLOAD_OFFSET + i,
                )
        if payload[2] != 0x2E:
            raise PayloadError(
                f"payload byte 0x{payload[2]:02X} where '.' required",
                PAYLOAD_OFFSET + 2,
            )
        if block[TERMINATOR_OFFSET] != TLV_TERMINATOR:
            raise TagParseError(
                f"terminator 0x{TLV_TERMINATOR:02X} missing", TERMINATOR_OFFSET
            )
        for off in range(TERMINATOR_OFFSET + 1, BLOCK_SIZE):
            if block[off] != 0x00:
                raise TagParseError("nonzero padding after terminator", off)
        return cls(payload)

    def weight(self) -> WeightReading:
        # value1*10 + value2 + value3*0.1, kept in tenths so it stays exact
        v1 = self.payload[0] - 0x30
        v2 = self.payload[1] - 0x30
        v3 = self.payload[3] - 0x30
        return WeightReading(v1 * 100 + v2 * 10 + v3)


def encode_weight(w: WeightReading) -> NdefWeightRecord:
    return NdefWeightRecord(w.text.encode("ascii"))


def decode_record(block: bytes) -> WeightReading:
    return NdefWeightRecord.from_block(block).weight()


@dataclass(frozen=True)
class TagMemory:
    """Immutable view of tag storage; writes return a new TagMemory."""

    blocks: tuple[bytes, ...]
    data_block_index: int = DATA_BLOCK_INDEX

    def __post_init__(self):
        if not 0 <= self.data_block_index < len(self.blocks):
            raise ValueError("data block index outside tag")
        for i, b in enumerate(self.blocks):
            if len(b) != BLOCK_SIZE:
                raise ValueError(f"block {i} is {len(b)} bytes, want {BLOCK_SIZE}")

    @classmethod
    def blank(
        cls, n_blocks: int = DEFAULT_TAG_BLOCKS, data_block_index: int = DATA_BLOCK_INDEX
    ) -> "TagMemory":
        return cls((b"\x00" * BLOCK_SIZE,) * n_blocks, data_block_index)

    def with_block(self, index: int, data: bytes) -> "TagMemory":
        if len(data) != BLOCK_SIZE:
            raise ValueError(f"block must be {BLOCK_SIZE} bytes")
        blocks = self.blocks[:index] + (bytes(data),) + self.blocks[index + 1 :]
        return TagMemory(blocks, self.data_block_index)

    @property
    def data_block(self) -> bytes:
        return self.blocks[self.data_block_index]


def write_tag(mem: TagMemory, w: WeightReading) -> TagMemory:
    return mem.with_block(mem.data_block_index, encode_weight(w).to_block())


def read_tag(mem: TagMemory) -> WeightReading:
    return decode_record(mem.data_block)


def block_to_hex(block: bytes) -> str:
    return block.hex().upper()


def hex_to_block(line: str) -> bytes:
    line = line.strip()
    if len(line) != BLOCK_SIZE * 2:
        raise ValueError(f"hex block line must be {BLOCK_SIZE * 2} chars")
    return bytes.fromhex(line)
