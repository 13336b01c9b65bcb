// Last-write-wins guard for concurrent in-flight requests: each panel keeps
// one tracker, and responses superseded by a newer request resolve to null.

export class LatestWins {
  private seq = 0;

  async wrap<T>(promise: Promise<T>): Promise<T | null> {
    const ticket = ++this.seq;
    const value = await promise;
    return ticket === this.seq ? value : null;
  }
}
