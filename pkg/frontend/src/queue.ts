// At most one mutating request is in flight; later ones run in arrival
// order once the previous settles. Held-down keys therefore queue
// client-side instead of racing the server.

export class MutationQueue {
  private tail: Promise<unknown> = Promise.resolve();
  private depth = 0;

  get pending(): number {
    return this.depth;
  }

  enqueue<T>(task: () => Promise<T>): Promise<T> {
    this.depth += 1;
    const run = this.tail.then(task);
    this.tail = run.catch(() => undefined).finally(() => { this.depth -= 1; });
    return run;
  }
}
