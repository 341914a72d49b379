// Typed API client. Payload fetches carry a sequence number so a stale
// response never overwrites a newer one, and each depth has at most one
// in-flight request.

import { EntityDetail, MapPayload, SearchResult } from "./types.js";

export class ApiClient {
  private sequence = 0;
  private lastApplied = 0;
  private inFlight = new Map<number, Promise<MapPayload | null>>();
  private cache = new Map<number, MapPayload>();

  constructor(private base: string = "") {}

  async fetchMap(depth: number): Promise<MapPayload | null> {
    const cached = this.cache.get(depth);
    if (cached) return cached;
    const existing = this.inFlight.get(depth);
    if (existing) return existing;
    const seq = ++this.sequence;
    const promise = (async () => {
      try {
        const response = await fetch(`${this.base}/api/map?depth=${depth}`);
        if (!response.ok) return null;
        const payload = (await response.json()) as MapPayload;
        if (seq < this.lastApplied) return null; // stale
        this.lastApplied = seq;
        this.cache.set(depth, payload);
        return payload;
      } finally {
        this.inFlight.delete(depth);
      }
    })();
    this.inFlight.set(depth, promise);
    return promise;
  }

  async search(query: string, limit = 20): Promise<SearchResult> {
    const response = await fetch(
      `${this.base}/api/search?q=${encodeURIComponent(query)}&limit=${limit}`
    );
    if (!response.ok) throw new Error(`search failed: ${response.status}`);
    return (await response.json()) as SearchResult;
  }

  async entity(entityId: string): Promise<EntityDetail | null> {
    const response = await fetch(
      `${this.base}/api/entity/${encodeURIComponent(entityId)}`
    );
    if (response.status === 404) return null;
    if (!response.ok) throw new Error(`entity failed: ${response.status}`);
    return (await response.json()) as EntityDetail;
  }

  async exportCsv(entityIds: string[]): Promise<string> {
    const response = await fetch(`${this.base}/api/export`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(entityIds),
    });
    if (!response.ok) throw new Error(`export failed: ${response.status}`);
    return response.text();
  }
}
