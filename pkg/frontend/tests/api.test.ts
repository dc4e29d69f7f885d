import { describe, expect, it } from "vitest";

import { createGateway, GatewayError, type FetchLike } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("createGateway", () => {
  it("unwraps list envelopes", async () => {
    const calls: string[] = [];
    const fetchImpl: FetchLike = async (url) => {
      calls.push(url);
      return jsonResponse(200, {
        medicines: [{ medicine_id: "tylenol", name: "Tylenol", unit_weight: 4.45 }],
      });
    };
    const gw = createGateway("http://gw:1/", fetchImpl);
    const medicines = await gw.catalog();
    expect(medicines).toHaveLength(1);
    expect(medicines[0]?.medicine_id).toBe("tylenol");
    // trailing slash stripped once, path appended cleanly
    expect(calls).toEqual(["http://gw:1/catalog"]);
  });

  it("throws GatewayError with the service's machine code", async () => {
    const fetchImpl: FetchLike = async () =>
      jsonResponse(409, { error: { code: "lid-open", message: "close the lid" } });
    const gw = createGateway("http://gw:1", fetchImpl);
    const err = await gw.scan("case-1").catch((e) => e);
    expect(err).toBeInstanceOf(GatewayError);
    expect(err.code).toBe("lid-open");
    expect(err.message).toBe("close the lid");
    expect(err.status).toBe(409);
  });

  it("survives non-JSON error bodies", async () => {
    const fetchImpl: FetchLike = async () =>
      new Response("boom", { status: 502, statusText: "Bad Gateway" });
    const gw = createGateway("http://gw:1", fetchImpl);
    const err = await gw.getStatus("x").catch((e) => e);
    expect(err).toBeInstanceOf(GatewayError);
    expect(err.code).toBe("http-502");
  });

  it("wraps network failures as unreachable", async () => {
    const fetchImpl: FetchLike = async () => {
      throw new TypeError("fetch failed");
    };
    const gw = createGateway("http://gw:1", fetchImpl);
    const err = await gw.listDevices().catch((e) => e);
    expect(err).toBeInstanceOf(GatewayError);
    expect(err.code).toBe("unreachable");
  });

  it("sends JSON bodies with the right method and path", async () => {
    const seen: { url: string; init?: RequestInit }[] = [];
    const fetchImpl: FetchLike = async (url, init) => {
      seen.push({ url, init });
      return jsonResponse(200, { ok: true });
    };
    const gw = createGateway("http://gw:1", fetchImpl);
    await gw.action("case-9", { action: "remove", n: 2 });
    expect(seen[0]?.url).toBe("http://gw:1/devices/case-9/action");
    expect(seen[0]?.init?.method).toBe("POST");
    expect(JSON.parse(String(seen[0]?.init?.body))).toEqual({ action: "remove", n: 2 });
  });
});
