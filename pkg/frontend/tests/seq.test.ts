import { describe, expect, it } from "vitest";

import { LatestWins } from "../src/seq";

function deferred<T>() {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}

describe("last-write-wins guard", () => {
  it("drops a response superseded by a newer request", async () => {
    const guard = new LatestWins();
    const first = deferred<string>();
    const second = deferred<string>();
    const a = guard.wrap(first.promise);
    const b = guard.wrap(second.promise);
    second.resolve("new");
    first.resolve("stale");
    expect(await a).toBeNull();
    expect(await b).toBe("new");
  });

  it("passes through when requests resolve in order", async () => {
    const guard = new LatestWins();
    expect(await guard.wrap(Promise.resolve(1))).toBe(1);
    expect(await guard.wrap(Promise.resolve(2))).toBe(2);
  });
});
