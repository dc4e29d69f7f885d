"""Operator command line.

Runs scripted device sessions, prints power/lifetime estimates, drives
federated experiments, dumps tag blocks, serves the gateway API, and acts
as a thin HTTP client for a running gateway.

Exit codes: 0 on success, 1 on assertion/runtime failure, 2 on usage or
parse errors.
"""

import json
import math
import sys

import click
import httpx

from .device import (
    DEFAULT_BATTERY_MAH,
    DEFAULT_SUPPLY_V,
    REFERENCE_PROFILE,
    PowerProfile,
    battery_lifetime,
)
from .fed import ConfigError, load_experiment_config
from .ndef import NdefError, WeightReading, block_to_hex, encode_weight
from .scenario import (
    ScenarioParseError,
    ScenarioRuntimeError,
    load_scenario,
    run_scenario,
)

DAYS_PER_YEAR = 365.0


@click.group()
def main():
    """Smart pill case toolkit."""


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None,
              help="Override the script's seed header.")
def scenario(path, seed):
    """Run a scripted device session and check its expectations."""
    try:
        script = load_scenario(path)
    except ScenarioParseError as e:
        raise click.UsageError(str(e))
    try:
        report = run_scenario(script, seed_override=seed)
    except ScenarioRuntimeError as e:
        click.echo(f"runtime error: {e}", err=True)
        sys.exit(1)
    for c in report.checks:
        if c.ok:
            click.echo(f"PASS line {c.line_number}: {c.description}")
        else:
            click.echo(f"FAIL line {c.line_number}: {c.description} (got {c.detail})")
    click.echo(f"{len(report.checks)} checks, {len(report.failures)} failed"
               f" (seed {report.seed})")
    if not report.passed:
        sys.exit(1)


def _battery_rows(profile, battery_mah, supply_v, opens, seconds_per_open, days):
    years = days / DAYS_PER_YEAR
    rows = [(f"component.{c.name}.current_ma", f"{c.current_ma:g}")
            for c in profile.components]
    for c in profile.components:
        rows.append((f"component.{c.name}.voltage_v", f"{c.voltage_v:g}"))
        rows.append((f"component.{c.name}.power_mw", f"{c.power_mw:g}"))
    rows += [
        ("total_power_mw", f"{profile.total_power_mw:g}"),
        ("battery_mah", f"{battery_mah:g}"),
        ("supply_v", f"{supply_v:g}"),
        ("opens_per_day", f"{opens:g}"),
        ("seconds_per_open", f"{seconds_per_open:g}"),
        ("lifetime_days", f"{days:g}"),
        ("lifetime_years", f"{years:g}"),
    ]
    return rows


@main.command()
@click.option("--power", type=float, default=None,
              help="Override the total draw in mW.")
@click.option("--battery-mah", type=float, default=DEFAULT_BATTERY_MAH,
              show_default=True)
@click.option("--opens", type=float, default=3.0, show_default=True,
              help="Lid openings per day.")
@click.option("--seconds-per-open", type=float, default=5.0, show_default=True)
@click.option("--supply-v", type=float, default=DEFAULT_SUPPLY_V, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["table", "csv"]),
              default="table", show_default=True)
def battery(power, battery_mah, opens, seconds_per_open, supply_v, fmt):
    """Estimate the battery lifetime for a duty-cycled case."""
    if power is not None and power < 0:
        raise click.BadParameter("--power must be >= 0")
    if battery_mah <= 0 or supply_v <= 0:
        raise click.BadParameter("--battery-mah and --supply-v must be > 0")
    if opens < 0 or seconds_per_open < 0:
        raise click.BadParameter("duty-cycle flags must be >= 0")
    profile = (PowerProfile.constant(power) if power is not None
               else REFERENCE_PROFILE)
    days = battery_lifetime(profile, battery_mah, supply_v, opens,
                            seconds_per_open)
    if fmt == "csv":
        click.echo("key,value")
        for key, value in _battery_rows(profile, battery_mah, supply_v, opens,
                                        seconds_per_open, days):
            click.echo(f"{key},{value}")
        return
    click.echo(f"{'component':<14}{'current (mA)':>14}{'voltage (V)':>13}"
               f"{'power (mW)':>12}")
    for c in profile.components:
        click.echo(f"{c.name:<14}{c.current_ma:>14.2f}{c.voltage_v:>13.1f}"
                   f"{c.power_mw:>12.2f}")
    click.echo(f"{'total':<14}{'':>14}{'':>13}{profile.total_power_mw:>12.2f}")
    click.echo("")
    click.echo(f"battery   {battery_mah:g} mAh at {supply_v:g} V")
    click.echo(f"duty      {opens:g} opens/day x {seconds_per_open:g} s")
    if math.isinf(days):
        click.echo("lifetime  unbounded (zero average draw)")
    else:
        click.echo(f"lifetime  {days:.1f} days ({days / DAYS_PER_YEAR:.2f} years)")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write per-round metrics as NDJSON.")
def fed(config_path, out):
    """Run a federated adherence experiment from a config file."""
    try:
        cfg = load_experiment_config(config_path)
    except ConfigError as e:
        raise click.UsageError(str(e))
    history = cfg.run()
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(history.to_ndjson())
    last = history.rounds[-1]
    mode = history.mode + (f"(q={history.q:g})" if history.mode == "fair" else "")
    click.echo(f"mode               {mode}")
    click.echo(f"rounds             {len(history.rounds)} (seed {history.seed})")
    click.echo(f"baseline accuracy  {history.baseline_accuracy:.4f}"
               f" (majority class {history.majority_class})")
    margin = history.final_accuracy - history.baseline_accuracy
    click.echo(f"final accuracy     {history.final_accuracy:.4f}"
               f" (margin {margin:+.4f})")
    click.echo(f"final loss         {last.global_loss:.4f}")
    click.echo(f"fairness           variance {last.fairness_variance:.4f},"
               f" max {last.fairness_max:.4f},"
               f" worst-decile {last.fairness_worst_decile:.4f}")


@main.command("ndef-dump")
@click.argument("weight", type=float)
def ndef_dump(weight):
    """Print the 16-byte tag block for WEIGHT as one hex line."""
    try:
        record = encode_weight(WeightReading.from_grams(weight))
    except NdefError as e:
        raise click.UsageError(str(e))
    click.echo(block_to_hex(record.to_block()))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False),
              default="gateway-data", show_default=True)
def serve(host, port, data_dir):
    """Serve the device gateway HTTP API."""
    import uvicorn

    from .gateway import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port)


@main.group()
@click.option("--url", envvar="PILLCASE_URL", default="http://127.0.0.1:8000",
              show_default=True, help="Gateway base URL.")
@click.pass_context
def client(ctx, url):
    """Talk to a running gateway service."""
    ctx.obj = url.rstrip("/")


def _request(url, method, path, body=None):
    # thin pass-through: print the JSON reply, surface the error envelope
    try:
        r = httpx.request(method, url + path, json=body, timeout=30.0)
    except httpx.HTTPError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    try:
        payload = r.json()
    except ValueError:
        payload = {"raw": r.text}
    if r.status_code >= 400:
        err = payload.get("error", {})
        code = err.get("code", r.status_code)
        message = err.get("message", r.text)
        click.echo(f"error: {code}: {message}", err=True)
        sys.exit(1)
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@client.command()
@click.option("--pills", type=int, default=0, show_default=True)
@click.option("--unit-mass", type=float, default=4.4, show_default=True)
@click.option("--tare", type=float, default=0.0, show_default=True)
@click.option("--noise-sigma", type=float, default=0.05, show_default=True)
@click.option("--tare-range", type=float, default=0.6, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--device-id", default=None)
@click.pass_obj
def register(url, pills, unit_mass, tare, noise_sigma, tare_range, seed,
             device_id):
    """Create a simulated case on the gateway."""
    body = {
        "pills": pills,
        "true_unit_mass": unit_mass,
        "tare_mass": tare,
        "noise_sigma": noise_sigma,
        "tare_range": tare_range,
        "seed": seed,
    }
    if device_id:
        body["device_id"] = device_id
    _request(url, "POST", "/devices", body)


@client.command()
@click.pass_obj
def devices(url):
    """List registered devices."""
    _request(url, "GET", "/devices")


@client.command()
@click.argument("device_id")
@click.pass_obj
def status(url, device_id):
    """Show one device's current state."""
    _request(url, "GET", f"/devices/{device_id}/status")


@client.command()
@click.pass_obj
def catalog(url):
    """List medicines the gateway accepts."""
    _request(url, "GET", "/catalog")


@client.command()
@click.argument("device_id")
@click.argument("medicine_id")
@click.option("--dose", type=int, default=1, show_default=True)
@click.option("--unit-weight", type=float, default=None,
              help="Override the catalog unit weight in grams.")
@click.pass_obj
def prescribe(url, device_id, medicine_id, dose, unit_weight):
    """Set a device's prescription from the catalog."""
    body = {"medicine_id": medicine_id, "recommended_dose": dose}
    if unit_weight is not None:
        body["unit_weight"] = unit_weight
    _request(url, "PUT", f"/devices/{device_id}/prescription", body)


@client.command("open")
@click.argument("device_id")
@click.pass_obj
def open_lid(url, device_id):
    """Open the lid."""
    _request(url, "POST", f"/devices/{device_id}/action", {"action": "open"})


@client.command("close")
@click.argument("device_id")
@click.pass_obj
def close_lid(url, device_id):
    """Close the lid."""
    _request(url, "POST", f"/devices/{device_id}/action", {"action": "close"})


@client.command()
@click.argument("device_id")
@click.argument("n", type=int)
@click.pass_obj
def remove(url, device_id, n):
    """Take N pills out (lid must be open)."""
    _request(url, "POST", f"/devices/{device_id}/action",
             {"action": "remove", "n": n})


@client.command()
@click.argument("device_id")
@click.argument("seconds", type=float)
@click.pass_obj
def advance(url, device_id, seconds):
    """Advance the device clock."""
    _request(url, "POST", f"/devices/{device_id}/action",
             {"action": "advance", "seconds": seconds})


@client.command()
@click.argument("device_id")
@click.pass_obj
def scan(url, device_id):
    """Read the tag and record an adherence event."""
    _request(url, "POST", f"/devices/{device_id}/scan")


@client.command()
@click.argument("device_id")
@click.option("--since", type=int, default=0, show_default=True,
              help="Return events with id greater than this.")
@click.pass_obj
def events(url, device_id, since):
    """List a device's adherence events."""
    _request(url, "GET", f"/devices/{device_id}/events?since={since}")


if __name__ == "__main__":
    main()
