import type { QueryParams, QueryResponse, RegionEntry } from './types'

export class ApiError extends Error {
  status: number

  constructor(status: number, detail: string) {
    super(detail)
    this.status = status
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string }
    if (body && body.detail) return body.detail
  } catch {
    // non-JSON error body
  }
  return `HTTP ${response.status}`
}

export async function listRegions(baseUrl: string, signal?: AbortSignal): Promise<RegionEntry[]> {
  const response = await fetch(`${baseUrl}/regions`, { signal })
  if (!response.ok) throw new ApiError(response.status, await errorDetail(response))
  return (await response.json()) as RegionEntry[]
}

export function buildQueryUrl(baseUrl: string, regionId: string, params: QueryParams): string {
  const search = new URLSearchParams()
  search.set('text', params.text)
  if (params.useMeta) {
    search.set('month', String(params.month))
    search.set('hour', String(params.hour))
    search.set('use_meta', 'true')
  }
  if (params.raw) search.set('raw', 'true')
  return `${baseUrl}/regions/${encodeURIComponent(regionId)}/query?${search.toString()}`
}

export async function queryRegion(
  baseUrl: string,
  regionId: string,
  params: QueryParams,
  signal?: AbortSignal
): Promise<QueryResponse> {
  const response = await fetch(buildQueryUrl(baseUrl, regionId, params), { signal })
  if (!response.ok) throw new ApiError(response.status, await errorDetail(response))
  return (await response.json()) as QueryResponse
}

export type NewRegion = {
  name: string
  bbox: [number, number, number, number]
  zoom: number
  providerSeed?: number
}

export async function createRegion(baseUrl: string, region: NewRegion): Promise<string> {
  const response = await fetch(`${baseUrl}/regions`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({
      name: region.name,
      bbox: region.bbox,
      zoom: region.zoom,
      provider: { type: 'fixture', seed: region.providerSeed ?? 0 },
    }),
  })
  if (response.status !== 202) throw new ApiError(response.status, await errorDetail(response))
  const body = (await response.json()) as { region_id: string }
  return body.region_id
}
