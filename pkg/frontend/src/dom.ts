// Small DOM helpers shared by the screens.

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else if (key === "text") node.textContent = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

// Bounded concurrency for fan-out requests (the alpha sweep), with
// cancellation when the screen unmounts.
export class RequestGate {
  private active = 0;
  private queue: (() => void)[] = [];
  readonly controller = new AbortController();

  constructor(private readonly limit = 4) {}

  get signal(): AbortSignal {
    return this.controller.signal;
  }

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T> {
    if (this.active >= this.limit) {
      await new Promise<void>((resolve) => this.queue.push(resolve));
    }
    this.active += 1;
    try {
      return await task(this.controller.signal);
    } finally {
      this.active -= 1;
      const next = this.queue.shift();
      if (next) next();
    }
  }

  cancel(): void {
    this.controller.abort();
    this.queue.splice(0).forEach((resolve) => resolve());
  }
}

export function statusBadge(status: string): HTMLElement {
  return el("span", { class: `badge badge-${status}`, text: status });
}
