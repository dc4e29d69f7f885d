/**
 * Typed client for the pill case gateway HTTP API.
 *
 * Every number shown in the UI comes through here; nothing is computed
 * client-side. Non-2xx replies carry {"error": {"code", "message"}} and are
 * thrown as GatewayError so callers can banner the machine code.
 */

export type VerdictKind =
  | "correct"
  | "insufficient"
  | "exceed"
  | "refill"
  | "calibrated";

export interface Verdict {
  kind: VerdictKind;
  count: number;
  message: string;
}

export interface Prescription {
  medicine_id: string;
  medicine_name: string;
  unit_weight: number;
  recommended_dose: number;
  schedule: string[];
}

export interface DeviceStatus {
  device_id: string;
  lid: string;
  pill_count: number;
  battery_mah: number;
  clock: number;
  tag_weight: string | null;
  prescription: Prescription | null;
  session_calibrated: boolean;
  last_event_id: number;
}

export interface ScanResponse {
  device_id: string;
  event_id: number;
  timestamp: number;
  previous_weight: string;
  current_weight: string;
  doses_taken: number;
  verdict: Verdict;
  calibrated: boolean;
}

export interface AdherenceEvent {
  event_id: number;
  timestamp: number;
  previous_weight: string;
  current_weight: string;
  doses_taken: number;
  verdict_kind: VerdictKind;
  verdict_count: number;
  message: string;
}

export interface Medicine {
  medicine_id: string;
  name: string;
  unit_weight: number;
}

export interface RegisterRequest {
  pills: number;
  device_id?: string;
  seed?: number;
  noise_sigma?: number;
  tare_range?: number;
}

export interface PrescriptionRequest {
  medicine_id: string;
  recommended_dose: number;
}

export type DeviceAction =
  | { action: "open" }
  | { action: "close" }
  | { action: "remove"; n: number }
  | { action: "advance"; seconds: number };

export class GatewayError extends Error {
  code: string;
  status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.name = "GatewayError";
    this.code = code;
    this.status = status;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface Gateway {
  catalog(): Promise<Medicine[]>;
  listDevices(): Promise<DeviceStatus[]>;
  registerDevice(body: RegisterRequest): Promise<DeviceStatus>;
  getStatus(deviceId: string): Promise<DeviceStatus>;
  setPrescription(deviceId: string, body: PrescriptionRequest): Promise<Prescription>;
  action(deviceId: string, body: DeviceAction): Promise<DeviceStatus>;
  scan(deviceId: string): Promise<ScanResponse>;
  events(deviceId: string, since?: number): Promise<AdherenceEvent[]>;
}

async function parseError(response: Response): Promise<GatewayError> {
  let code = `http-${response.status}`;
  let message = response.statusText || "request failed";
  try {
    const body = await response.json();
    if (body && typeof body === "object" && body.error) {
      code = String(body.error.code ?? code);
      message = String(body.error.message ?? message);
    }
  } catch {
    // non-JSON error body, keep the status line
  }
  return new GatewayError(code, message, response.status);
}

export function createGateway(baseUrl: string, fetchImpl?: FetchLike): Gateway {
  const base = baseUrl.replace(/\/+$/, "");
  const doFetch: FetchLike = fetchImpl ?? ((url, init) => fetch(url, init));

  async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    let response: Response;
    try {
      response = await doFetch(base + path, init);
    } catch (err) {
      throw new GatewayError("unreachable", String(err), 0);
    }
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  return {
    catalog: async () =>
      (await request<{ medicines: Medicine[] }>("GET", "/catalog")).medicines,
    listDevices: () => request("GET", "/devices"),
    registerDevice: (body) => request("POST", "/devices", body),
    getStatus: (deviceId) => request("GET", `/devices/${deviceId}/status`),
    setPrescription: (deviceId, body) =>
      request("PUT", `/devices/${deviceId}/prescription`, body),
    action: (deviceId, body) =>
      request("POST", `/devices/${deviceId}/action`, body),
    scan: (deviceId) => request("POST", `/devices/${deviceId}/scan`),
    events: async (deviceId, since = 0) =>
      (
        await request<{ events: AdherenceEvent[] }>(
          "GET",
          `/devices/${deviceId}/events?since=${since}`,
        )
      ).events,
  };
}
