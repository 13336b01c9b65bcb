import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api";
import { installFetchMock } from "./helpers";

describe("api client", () => {
  beforeEach(() => {
    // each test installs its own mock
  });

  it("requests the documented endpoints", async () => {
    const calls = installFetchMock([
      { method: "GET", match: () => true, payload: { routes: [] } },
    ]);
    const client = new ApiClient("");
    await client.routes();
    await client.routeDetail("H04", "noon");
    await client.distribution("evening");
    await client.embedding();
    expect(calls.map((c) => c.url)).toEqual([
      "/api/routes",
      "/api/routes/H04?period=noon",
      "/api/distribution?period=evening",
      "/api/embedding",
    ]);
  });

  it("posts what-if and reorder bodies", async () => {
    const calls = installFetchMock([
      { method: "POST", match: () => true, payload: {} },
    ]);
    const client = new ApiClient("");
    await client.whatif("H04", "morning", 2);
    await client.reorder("V00", "night");
    expect(calls[0].body).toEqual({
      route_id: "H04",
      period: "morning",
      remove_stop_index: 2,
    });
    expect(calls[1].body).toEqual({ route_id: "V00", period: "night" });
  });

  it("maps error bodies to ApiError with the server detail", async () => {
    installFetchMock([
      {
        method: "GET",
        match: (url) => url.includes("/api/routes/"),
        status: 404,
        payload: { detail: "unknown route 'ZZ'" },
      },
    ]);
    const client = new ApiClient("");
    const error = await client.routeDetail("ZZ", "morning").catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(404);
    expect(error.detail).toBe("unknown route 'ZZ'");
  });
});
