/**
 * Pure view-state builders. No DOM, no fetch: these take gateway payloads
 * and return plain objects the page code paints. Keeping them pure is what
 * lets the verdict rendering be tested exactly against the engine wording.
 */

import type { DeviceStatus, GatewayError, ScanResponse } from "./api.js";

export type VerdictIcon = "thumb-up" | "warning" | "notice";

export interface ScanView {
  icon: VerdictIcon;
  /** Exactly the gateway's human message; the UI never rewords verdicts. */
  message: string;
  doses: string;
  weight: string;
  stale: boolean;
}

export interface BannerView {
  code: string;
  message: string;
}

const ICON_BY_KIND: Record<string, VerdictIcon> = {
  correct: "thumb-up",
  insufficient: "warning",
  exceed: "warning",
  refill: "notice",
  calibrated: "notice",
};

export function renderScan(result: ScanResponse): ScanView {
  return {
    icon: ICON_BY_KIND[result.verdict.kind] ?? "notice",
    message: result.verdict.message,
    doses: String(result.doses_taken),
    weight: result.current_weight,
    stale: false,
  };
}

export function markStale(view: ScanView): ScanView {
  return { ...view, stale: true };
}

export function renderError(err: GatewayError): BannerView {
  return { code: err.code, message: err.message };
}

export type SettingsCheck =
  | { ok: true; dose: number }
  | { ok: false; error: string };

export function validateSettings(medicineId: string, doseText: string): SettingsCheck {
  if (!medicineId) {
    return { ok: false, error: "pick a medicine" };
  }
  const trimmed = doseText.trim();
  if (!/^\d+$/.test(trimmed)) {
    return { ok: false, error: "dose must be a whole number" };
  }
  const dose = Number(trimmed);
  if (dose < 1) {
    return { ok: false, error: "dose must be at least 1" };
  }
  return { ok: true, dose };
}

export function describeStatus(status: DeviceStatus): string {
  const parts = [
    `lid ${status.lid}`,
    `${status.pill_count} pills`,
    status.tag_weight === null ? "tag empty" : `tag ${status.tag_weight} g`,
  ];
  if (!status.session_calibrated) {
    parts.push("needs calibration scan");
  }
  return parts.join(", ");
}
