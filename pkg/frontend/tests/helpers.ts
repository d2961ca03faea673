import { vi } from 'vitest'
import type { QueryResponse, RegionEntry } from '../src/types'

export const BASE = 'http://svc.test'

export function regionEntry(id: string, status: RegionEntry['status'] = 'ready'): RegionEntry {
  return {
    region_id: id,
    status,
    spec: { bbox: [40.0, -75.0, 40.1, -74.9], zoom: 15 },
    rows: 2,
    cols: 2,
  }
}

export function queryResponse(values: number[], rows = 2, cols = 2, extra: Partial<QueryResponse> = {}): QueryResponse {
  let best = 0
  values.forEach((v, i) => {
    if (v > values[best]) best = i
  })
  return {
    region_id: 'r1',
    rows,
    cols,
    bbox: [40.0, -75.0, 40.1, -74.9],
    query: 'test prompt',
    raw: false,
    meta: null,
    values,
    argmax: { row: Math.floor(best / cols), col: best % cols, lat: 40.05, lon: -74.95 },
    ...extra,
  }
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  })
}

/** Install a fetch mock; returns the mock for call inspection. */
export function mockFetch(handler: (url: string, init?: RequestInit) => Response | Promise<Response>) {
  const mock = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = typeof input === 'string' ? input : input instanceof URL ? input.toString() : input.url
    return handler(url, init)
  })
  vi.stubGlobal('fetch', mock)
  return mock
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0))
}
