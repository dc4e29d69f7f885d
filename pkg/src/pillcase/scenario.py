"""Line-oriented scenario scripts: drive a simulated case and assert on scans.

A script is parsed completely before anything runs, so a typo fails with its
line number instead of half-executing.  Grammar (one directive per line,
``#`` comments)::

    seed 42                      # optional, first directive if present
    device pills=9 unit-mass=4.4 [tare=0] [noise-sigma=0.05] [tare-range=0.6]
           [factor=1000] [offset=0] [battery-mah=300]
    prescription medicine=tylenol [dose=1] [unit-weight=4.45] [name=Tylenol]
    open | close | remove N | advance SECONDS | scan
    expect doses N
    expect verdict correct|insufficient K|exceed K|refill|calibrated
    expect weight X.X | expect previous X.X
    expect delta between LO HI

The first scan calibrates the session; each later scan judges doses against
the prescription.  Changing the prescription mid-script forces the next
scan to re-calibrate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .adherence import (
    CALIBRATED,
    CORRECT,
    EXCEED,
    INSUFFICIENT,
    REFILL,
    MedicineCatalog,
    Prescription,
    ScanResult,
    Session,
    Verdict,
    calibrate_initial,
    process_scan,
)
from .device import LoadCellModel, PillContainer, SmartPillCase

ACTIONS = ("open", "close", "remove", "advance", "scan")
VERDICT_KINDS = (CORRECT, INSUFFICIENT, EXCEED, REFILL, CALIBRATED)


class ScenarioParseError(ValueError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ScenarioRuntimeError(RuntimeError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class Directive:
    line_number: int
    kind: str
    args: dict


@dataclass(frozen=True)
class ScenarioScript:
    seed: int
    directives: tuple[Directive, ...]


_DEVICE_KEYS = {
    "pills": int,
    "unit-mass": float,
    "tare": float,
    "noise-sigma": float,
    "tare-range": float,
    "factor": float,
    "offset": int,
    "battery-mah": float,
}
_PRESCRIPTION_KEYS = {
    "medicine": str,
    "dose": int,
    "unit-weight": float,
    "name": str,
}


def _parse_kv(tokens, allowed, line_number):
    args = {}
    for tok in tokens:
        if "=" not in tok:
            raise ScenarioParseError(line_number, f"expected key=value, got {tok!r}")
        key, _, value = tok.partition("=")
        if key not in allowed:
            raise ScenarioParseError(line_number, f"unknown key {key!r}")
        if key in args:
            raise ScenarioParseError(line_number, f"duplicate key {key!r}")
        try:
            args[key] = allowed[key](value)
        except ValueError:
            raise ScenarioParseError(line_number, f"bad value for {key}: {value!r}")
    return args


def _parse_expect(tokens, line_number):
    if not tokens:
        raise ScenarioParseError(line_number, "expect needs a field")
    fieldname = tokens[0]
    rest = tokens[1:]
    try:
        if fieldname == "doses":
            (n,) = rest
            return {"field": "doses", "value": int(n)}
        if fieldname == "verdict":
            kind = rest[0]
            if kind not in VERDICT_KINDS:
                raise ScenarioParseError(line_number, f"unknown verdict {kind!r}")
            if kind in (INSUFFICIENT, EXCEED):
                (_, k) = rest
                if int(k) < 1:
                    raise ScenarioParseError(line_number, f"{kind} count must be >= 1")
                return {"field": "verdict", "kind": kind, "count": int(k)}
            (_,) = rest  # no trailing tokens allowed
            return {"field": "verdict", "kind": kind, "count": 0}
        if fieldname in ("weight", "previous"):
            (x,) = rest
            return {"field": fieldname, "value": float(x)}
        if fieldname == "delta":
            kw, lo, hi = rest
            if kw != "between":
                raise ScenarioParseError(line_number, "expected: expect delta between LO HI")
            return {"field": "delta", "lo": float(lo), "hi": float(hi)}
    except ScenarioParseError:
        raise
    except ValueError:
        raise ScenarioParseError(line_number, f"malformed expect {' '.join(tokens)!r}")
    raise ScenarioParseError(line_number, f"unknown expect field {fieldname!r}")


def parse_scenario(text: str) -> ScenarioScript:
    seed = 0
    seed_seen = False
    directives: list[Directive] = []
    have_device = have_prescription = have_scan = False

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind, rest = tokens[0], tokens[1:]

        if kind == "seed":
            if directives or seed_seen:
                raise ScenarioParseError(number, "seed must be the first directive")
            try:
                (seed,) = (int(rest[0]),) if len(rest) == 1 else ()
            except (ValueError, IndexError):
                raise ScenarioParseError(number, "usage: seed N")
            seed_seen = True
        elif kind == "device":
            if have_device:
                raise ScenarioParseError(number, "device already declared")
            args = _parse_kv(rest, _DEVICE_KEYS, number)
            for req in ("pills", "unit-mass"):
                if req not in args:
                    raise ScenarioParseError(number, f"device needs {req}=")
            directives.append(Directive(number, "device", args))
            have_device = True
        elif kind == "prescription":
            args = _parse_kv(rest, _PRESCRIPTION_KEYS, number)
            if "medicine" not in args:
                raise ScenarioParseError(number, "prescription needs medicine=")
            directives.append(Directive(number, "prescription", args))
            have_prescription = True
        elif kind in ACTIONS:
            if not have_device:
                raise ScenarioParseError(number, f"{kind} before device line")
            if kind == "remove":
                try:
                    (n,) = rest
                    args = {"n": int(n)}
                except ValueError:
                    raise ScenarioParseError(number, "usage: remove N")
            elif kind == "advance":
                try:
                    (t,) = rest
                    args = {"seconds": float(t)}
                except ValueError:
                    raise ScenarioParseError(number, "usage: advance SECONDS")
            else:
                if rest:
                    raise ScenarioParseError(number, f"{kind} takes no arguments")
                args = {}
            if kind == "scan" and not have_prescription:
                raise ScenarioParseError(number, "scan before prescription line")
            directives.append(Directive(number, kind, args))
            have_scan = have_scan or kind == "scan"
        elif kind == "expect":
            if not have_scan:
                raise ScenarioParseError(number, "expect before any scan")
            directives.append(Directive(number, "expect", _parse_expect(rest, number)))
        else:
            raise ScenarioParseError(number, f"unknown directive {kind!r}")

    return ScenarioScript(seed, tuple(directives))


@dataclass
class CheckOutcome:
    line_number: int
    description: str
    ok: bool
    detail: str = ""


@dataclass
class ScenarioReport:
    seed: int
    checks: list[CheckOutcome] = field(default_factory=list)
    scan_weights: list[float] = field(default_factory=list)
    results: list[ScanResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list[CheckOutcome]:
        return [c for c in self.checks if not c.ok]


def _tenths(x: float) -> int:
    return round(x * 10)


def _check(expect: dict, result: ScanResult) -> tuple[bool, str]:
    f = expect["field"]
    if f == "doses":
        got = result.doses_taken
        return got == expect["value"], f"doses {got}"
    if f == "verdict":
        v = result.verdict
        if expect["kind"] in (INSUFFICIENT, EXCEED):
            ok = v == Verdict(expect["kind"], expect["count"])
        else:
            ok = v.kind == expect["kind"]
        return ok, f"verdict {v.kind}" + (f" {v.count}" if v.count else "")
    if f == "weight":
        got = result.current_weight
        return _tenths(got) == _tenths(expect["value"]), f"weight {got:.1f}"
    if f == "previous":
        got = result.previous_weight
        return _tenths(got) == _tenths(expect["value"]), f"previous {got:.1f}"
    if f == "delta":
        delta = (_tenths(result.previous_weight) - _tenths(result.current_weight)) / 10.0
        ok = expect["lo"] - 1e-9 <= delta <= expect["hi"] + 1e-9
        return ok, f"delta {delta:.1f}"
    raise AssertionError(f"unreachable expect field {f}")


def _describe(expect: dict) -> str:
    f = expect["field"]
    if f == "doses":
        return f"expect doses {expect['value']}"
    if f == "verdict":
        s = f"expect verdict {expect['kind']}"
        return s + (f" {expect['count']}" if expect["count"] else "")
    if f in ("weight", "previous"):
        return f"expect {f} {expect['value']:.1f}"
    return f"expect delta between {expect['lo']} {expect['hi']}"


def run_scenario(script: ScenarioScript, seed_override: int | None = None,
                 catalog: MedicineCatalog | None = None) -> ScenarioReport:
    seed = script.seed if seed_override is None else seed_override
    catalog = catalog or MedicineCatalog.default()
    report = ScenarioReport(seed=seed)

    device: SmartPillCase | None = None
    prescription: Prescription | None = None
    session = Session()
    last_result: ScanResult | None = None

    for d in script.directives:
        if d.kind == "device":
            a = d.args
            device = SmartPillCase(
                PillContainer(a["pills"], a["unit-mass"], a.get("tare", 0.0)),
                LoadCellModel(
                    calibration_factor=a.get("factor", 1000.0),
                    offset_counts=a.get("offset", 0),
                    noise_sigma=a.get("noise-sigma", 0.05),
                    session_tare_range=a.get("tare-range", 0.6),
                    rng_seed=seed,
                ),
                battery_mah=a.get("battery-mah", 300.0),
            )
        elif d.kind == "prescription":
            a = d.args
            med_id = a["medicine"]
            if med_id in catalog and "unit-weight" not in a:
                prescription = Prescription.from_catalog(catalog, med_id, a.get("dose", 1))
            else:
                if "unit-weight" not in a:
                    raise ScenarioRuntimeError(
                        d.line_number, f"medicine {med_id!r} not in catalog; give unit-weight="
                    )
                prescription = Prescription(
                    med_id, a.get("name", med_id), a["unit-weight"], a.get("dose", 1)
                )
            session = Session()  # new prescription: recalibrate
        elif d.kind == "open":
            device.open_lid()
        elif d.kind == "close":
            device.close_lid()
        elif d.kind == "remove":
            device.remove_pills(d.args["n"])
        elif d.kind == "advance":
            device.advance(d.args["seconds"])
        elif d.kind == "scan":
            if not session.calibrated:
                session = calibrate_initial(device.tag)
                w = session.previous_weight
                last_result = ScanResult(device.clock, w, w, 0, Verdict(CALIBRATED))
            else:
                last_result, session = process_scan(
                    device.tag, session, prescription, device.clock
                )
            report.results.append(last_result)
            report.scan_weights.append(last_result.current_weight)
        elif d.kind == "expect":
            ok, detail = _check(d.args, last_result)
            report.checks.append(
                CheckOutcome(d.line_number, _describe(d.args), ok, detail)
            )

    return report


def load_scenario(path) -> ScenarioScript:
    with open(path, "r", encoding="utf-8") as f:
        return parse_scenario(f.read())
