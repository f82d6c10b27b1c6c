/**
 * Debounced scenario client with stale-response discarding.
 *
 * At most one evaluation request is in flight; requests carry monotonically
 * increasing ids and a response is applied only if no newer request exists,
 * so every burst of control changes settles into exactly one applied view.
 * Network failures keep the last good view and raise a retry banner; 4xx
 * responses surface as inline validation messages.
 */

import type { ScenarioRequest, ScenarioResponse } from './types';

export interface TransportResult {
  status: number;
  body: string;
}

export type Transport = (request: ScenarioRequest) => Promise<TransportResult>;

export interface ClientView {
  requestId: number;
  response: ScenarioResponse;
  /** Raw body as served; rendering must not reorder or recompute from it. */
  rawBody: string;
}

export interface ClientStatus {
  pending: boolean;
  retryBanner: boolean;
  validationMessage: string | null;
}

export class ScenarioClient {
  private transport: Transport;
  private debounceMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private nextId = 0;
  private appliedId = 0;
  private pendingRequest: ScenarioRequest | null = null;
  private inFlight = false;

  view: ClientView | null = null;
  status: ClientStatus = { pending: false, retryBanner: false, validationMessage: null };
  private listeners: (() => void)[] = [];

  constructor(transport: Transport, debounceMs = 150) {
    this.transport = transport;
    this.debounceMs = debounceMs;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  /** Schedule an evaluation; rapid calls within the window coalesce. */
  apply(request: ScenarioRequest): void {
    this.pendingRequest = request;
    this.status = { ...this.status, pending: true };
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, this.debounceMs);
    this.notify();
  }

  private async fire(): Promise<void> {
    if (this.pendingRequest === null) return;
    if (this.inFlight) {
      // a newer request will re-fire once the current one resolves
      return;
    }
    const request = this.pendingRequest;
    this.pendingRequest = null;
    const id = ++this.nextId;
    this.inFlight = true;
    try {
      const result = await this.transport(request);
      this.inFlight = false;
      if (id <= this.appliedId || this.pendingRequest !== null) {
        // superseded while in flight: discard and serve the newer request
        if (this.pendingRequest !== null) void this.fire();
        return;
      }
      if (result.status === 200) {
        this.appliedId = id;
        this.view = {
          requestId: id,
          response: JSON.parse(result.body) as ScenarioResponse,
          rawBody: result.body,
        };
        this.status = { pending: false, retryBanner: false, validationMessage: null };
      } else if (result.status >= 400 && result.status < 500) {
        let message = `invalid scenario (${result.status})`;
        try {
          const parsed = JSON.parse(result.body) as { error?: string };
          if (parsed.error) message = parsed.error;
        } catch {
          // keep the generic message
        }
        this.status = { pending: false, retryBanner: false, validationMessage: message };
      } else {
        this.status = { pending: false, retryBanner: true, validationMessage: null };
      }
    } catch {
      this.inFlight = false;
      if (this.pendingRequest !== null) {
        void this.fire();
        return;
      }
      // network failure: last good view is retained
      this.status = { pending: false, retryBanner: true, validationMessage: null };
    }
    this.notify();
  }
}
