import { describe, expect, it } from "vitest";

import { KernelClient, KernelServiceError, NumericalKernelError } from "../src/index.js";

function stubFetch(status: number, body: unknown): typeof fetch {
  return (async () =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    })) as typeof fetch;
}

describe("client request/response handling", () => {
  it("unwraps successful payloads", async () => {
    const client = new KernelClient("http://x", stubFetch(200, { advantages: [1.0, -1.0] }));
    expect(await client.anchoredAdvantage([1, 2])).toEqual([1.0, -1.0]);
  });

  it("maps coded errors to typed exceptions", async () => {
    const client = new KernelClient(
      "http://x",
      stubFetch(400, { detail: { code: "numerical_error", message: "non-finite inputs" } }),
    );
    await expect(client.policyObjectiveTerms([0], 1, [0])).rejects.toBeInstanceOf(
      NumericalKernelError,
    );
  });

  it("falls back to a generic error for unknown codes", async () => {
    const client = new KernelClient(
      "http://x",
      stubFetch(503, { detail: { code: "overloaded", message: "try later" } }),
    );
    const failure = client.asymmetricScale([{ t_new: 1, t_old: 2 }]);
    await expect(failure).rejects.toBeInstanceOf(KernelServiceError);
    await failure.catch((err: KernelServiceError) => {
      expect(err.code).toBe("overloaded");
      expect(err.status).toBe(503);
    });
  });

  it("survives non-JSON error bodies", async () => {
    const broken = (async () => new Response("gateway exploded", { status: 502 })) as typeof fetch;
    const client = new KernelClient("http://x", broken);
    await expect(client.anchoredAdvantage([1, 2])).rejects.toBeInstanceOf(KernelServiceError);
  });

  it("strips trailing slashes from the base url", async () => {
    let seen = "";
    const spy = (async (url: RequestInfo | URL) => {
      seen = String(url);
      return new Response(JSON.stringify({ rewards: [] }), { status: 200 });
    }) as typeof fetch;
    await new KernelClient("http://x///", spy).hierarchicalReward([]);
    expect(seen).toBe("http://x/kernel/hierarchical-reward");
  });
});
