/**
 * Control panel page: a phone-style scan card next to a device admin panel.
 *
 * The scan card mirrors the handset app (medicine + dose settings, a big
 * tap-to-start button, verdict display). The device panel stands in for the
 * physical case so a human can open the lid, take pills out, and close it.
 * One scan may be in flight at a time; taps while busy are dropped.
 */

import {
  createGateway,
  GatewayError,
  type DeviceStatus,
  type FetchLike,
  type Gateway,
  type Medicine,
} from "./api.js";
import {
  describeStatus,
  markStale,
  renderError,
  renderScan,
  validateSettings,
  type ScanView,
} from "./view.js";

export interface MountOptions {
  baseUrl: string;
  fetchImpl?: FetchLike;
  /** status poll period in ms; 0 disables polling (tests drive refreshes) */
  pollMs?: number;
}

export interface App {
  gateway: Gateway;
  refreshStatus(): Promise<void>;
  refreshDevices(): Promise<void>;
  /** waits until every running handler has finished */
  settle(): Promise<void>;
  stop(): void;
}

const PAGE = `
<div class="panel phone">
  <h2>Pill Case App</h2>
  <div class="field">
    <label for="pc-medicine">Medicine</label>
    <select id="pc-medicine"></select>
  </div>
  <div class="field">
    <label for="pc-dose">Recommended dose</label>
    <input id="pc-dose" inputmode="numeric" value="1">
  </div>
  <button id="pc-update">Update settings</button>
  <span id="pc-settings-note" class="note"></span>
  <button id="pc-tap" class="tap">TAP TO START</button>
  <div id="pc-verdict" class="verdict verdict-empty">
    <span id="pc-verdict-icon" class="icon"></span>
    <div>
      <div id="pc-verdict-message">no scan yet</div>
      <div class="small">doses <b id="pc-verdict-doses">-</b>
        · weight <span id="pc-verdict-weight">-</span> g
        <span id="pc-verdict-stale" class="stale" hidden>stale, settings changed</span>
      </div>
    </div>
  </div>
  <div id="pc-banner" class="banner" hidden></div>
</div>
<div class="panel device">
  <h2>Device</h2>
  <div class="field">
    <label for="pc-device">Case</label>
    <select id="pc-device"></select>
  </div>
  <div class="field">
    <label for="pc-new-pills">New case with</label>
    <input id="pc-new-pills" inputmode="numeric" value="9"> pills
    <button id="pc-create">Create</button>
  </div>
  <div id="pc-status" class="status">no device</div>
  <div class="actions">
    <button id="pc-open">Open lid</button>
    <button id="pc-close">Close lid</button>
    <button id="pc-remove">Remove</button>
    <input id="pc-remove-n" inputmode="numeric" value="1">
  </div>
</div>
`;

const VERDICT_CLASSES = ["verdict-thumb-up", "verdict-warning", "verdict-notice", "verdict-empty"];
const ICON_GLYPHS: Record<string, string> = {
  "thumb-up": "\u{1F44D}",
  warning: "⚠",
  notice: "ℹ",
};

export function mount(root: HTMLElement, options: MountOptions): App {
  const gateway = createGateway(options.baseUrl, options.fetchImpl);
  root.innerHTML = PAGE;

  const el = <T extends HTMLElement>(id: string): T => {
    const found = root.querySelector<T>(`#${id}`);
    if (!found) throw new Error(`missing element #${id}`);
    return found;
  };

  const medicineSelect = el<HTMLSelectElement>("pc-medicine");
  const doseInput = el<HTMLInputElement>("pc-dose");
  const updateButton = el<HTMLButtonElement>("pc-update");
  const settingsNote = el<HTMLSpanElement>("pc-settings-note");
  const tapButton = el<HTMLButtonElement>("pc-tap");
  const verdictBox = el<HTMLDivElement>("pc-verdict");
  const verdictIcon = el<HTMLSpanElement>("pc-verdict-icon");
  const verdictMessage = el<HTMLDivElement>("pc-verdict-message");
  const verdictDoses = el<HTMLElement>("pc-verdict-doses");
  const verdictWeight = el<HTMLSpanElement>("pc-verdict-weight");
  const verdictStale = el<HTMLSpanElement>("pc-verdict-stale");
  const banner = el<HTMLDivElement>("pc-banner");
  const deviceSelect = el<HTMLSelectElement>("pc-device");
  const newPillsInput = el<HTMLInputElement>("pc-new-pills");
  const createButton = el<HTMLButtonElement>("pc-create");
  const statusLine = el<HTMLDivElement>("pc-status");
  const openButton = el<HTMLButtonElement>("pc-open");
  const closeButton = el<HTMLButtonElement>("pc-close");
  const removeButton = el<HTMLButtonElement>("pc-remove");
  const removeCount = el<HTMLInputElement>("pc-remove-n");

  let scanInFlight = false;
  let lastScan: ScanView | null = null;
  const pending = new Set<Promise<unknown>>();

  function track<T>(p: Promise<T>): Promise<T> {
    pending.add(p);
    p.finally(() => pending.delete(p)).catch(() => undefined);
    return p;
  }

  function paintVerdict() {
    verdictBox.classList.remove(...VERDICT_CLASSES);
    if (!lastScan) {
      verdictBox.classList.add("verdict-empty");
      verdictIcon.textContent = "";
      verdictMessage.textContent = "no scan yet";
      verdictDoses.textContent = "-";
      verdictWeight.textContent = "-";
      verdictStale.hidden = true;
      return;
    }
    verdictBox.classList.add(`verdict-${lastScan.icon}`);
    verdictIcon.textContent = ICON_GLYPHS[lastScan.icon] ?? "";
    verdictMessage.textContent = lastScan.message;
    verdictDoses.textContent = lastScan.doses;
    verdictWeight.textContent = lastScan.weight;
    verdictStale.hidden = !lastScan.stale;
    verdictBox.classList.toggle("is-stale", lastScan.stale);
  }

  function showBanner(err: unknown) {
    if (err instanceof GatewayError) {
      const view = renderError(err);
      banner.textContent = `${view.code}: ${view.message}`;
    } else {
      banner.textContent = String(err);
    }
    banner.hidden = false;
  }

  function clearBanner() {
    banner.hidden = true;
    banner.textContent = "";
  }

  function selectedDevice(): string {
    return deviceSelect.value;
  }

  function paintStatus(status: DeviceStatus | null) {
    statusLine.textContent = status ? describeStatus(status) : "no device";
  }

  async function refreshStatus(): Promise<void> {
    const id = selectedDevice();
    if (!id) {
      paintStatus(null);
      return;
    }
    try {
      paintStatus(await gateway.getStatus(id));
    } catch (err) {
      showBanner(err);
    }
  }

  function fillMedicines(medicines: Medicine[]) {
    medicineSelect.innerHTML = "";
    for (const m of medicines) {
      const option = document.createElement("option");
      option.value = m.medicine_id;
      option.textContent = `${m.name} (${m.unit_weight} g)`;
      medicineSelect.appendChild(option);
    }
  }

  async function refreshDevices(): Promise<void> {
    const devices = await gateway.listDevices();
    const current = selectedDevice();
    deviceSelect.innerHTML = "";
    for (const d of devices) {
      const option = document.createElement("option");
      option.value = d.device_id;
      option.textContent = d.device_id;
      deviceSelect.appendChild(option);
    }
    if (devices.some((d) => d.device_id === current)) {
      deviceSelect.value = current;
    }
    await refreshStatus();
  }

  async function createDevice(): Promise<void> {
    clearBanner();
    const pills = Number(newPillsInput.value.trim());
    if (!Number.isInteger(pills) || pills < 0) {
      showBanner(new GatewayError("validation", "pill count must be a whole number", 0));
      return;
    }
    try {
      const created = await gateway.registerDevice({ pills });
      await refreshDevices();
      deviceSelect.value = created.device_id;
      lastScan = null;
      paintVerdict();
      await refreshStatus();
    } catch (err) {
      showBanner(err);
    }
  }

  async function commitSettings(): Promise<void> {
    clearBanner();
    const check = validateSettings(medicineSelect.value, doseInput.value);
    if (!check.ok) {
      settingsNote.textContent = check.error;
      settingsNote.classList.add("error");
      return;
    }
    settingsNote.classList.remove("error");
    const id = selectedDevice();
    if (!id) {
      showBanner(new GatewayError("no-device", "create a case first", 0));
      return;
    }
    try {
      await gateway.setPrescription(id, {
        medicine_id: medicineSelect.value,
        recommended_dose: check.dose,
      });
      // the gateway drops the old baseline, so flag the old verdict
      settingsNote.textContent = "saved, next scan recalibrates the baseline";
      if (lastScan) {
        lastScan = markStale(lastScan);
        paintVerdict();
      }
      await refreshStatus();
    } catch (err) {
      showBanner(err);
    }
  }

  async function tapToStart(): Promise<void> {
    if (scanInFlight) return; // one NFC claim at a time
    const id = selectedDevice();
    clearBanner();
    if (!id) {
      showBanner(new GatewayError("no-device", "create a case first", 0));
      return;
    }
    scanInFlight = true;
    tapButton.disabled = true;
    try {
      lastScan = renderScan(await gateway.scan(id));
      paintVerdict();
    } catch (err) {
      showBanner(err);
    } finally {
      scanInFlight = false;
      tapButton.disabled = false;
    }
    await refreshStatus();
  }

  async function runAction(body: Parameters<Gateway["action"]>[1]): Promise<void> {
    clearBanner();
    const id = selectedDevice();
    if (!id) {
      showBanner(new GatewayError("no-device", "create a case first", 0));
      return;
    }
    try {
      paintStatus(await gateway.action(id, body));
    } catch (err) {
      showBanner(err);
    }
  }

  createButton.addEventListener("click", () => void track(createDevice()));
  updateButton.addEventListener("click", () => void track(commitSettings()));
  tapButton.addEventListener("click", () => void track(tapToStart()));
  openButton.addEventListener("click", () => void track(runAction({ action: "open" })));
  closeButton.addEventListener("click", () => void track(runAction({ action: "close" })));
  removeButton.addEventListener("click", () => {
    const n = Number(removeCount.value.trim());
    if (!Number.isInteger(n) || n < 1) {
      showBanner(new GatewayError("validation", "removal count must be a positive integer", 0));
      return;
    }
    void track(runAction({ action: "remove", n }));
  });
  deviceSelect.addEventListener("change", () => {
    lastScan = null;
    paintVerdict();
    void track(refreshStatus());
  });

  track(
    (async () => {
      fillMedicines(await gateway.catalog());
      await refreshDevices();
    })().catch(showBanner),
  );

  let timer: ReturnType<typeof setInterval> | undefined;
  const pollMs = options.pollMs ?? 2000;
  if (pollMs > 0) {
    timer = setInterval(() => void track(refreshStatus()), pollMs);
  }

  async function settle(): Promise<void> {
    while (pending.size > 0) {
      await Promise.allSettled([...pending]);
    }
  }

  return {
    gateway,
    refreshStatus,
    refreshDevices,
    settle,
    stop() {
      if (timer !== undefined) clearInterval(timer);
    },
  };
}
