export type RegionStatus = 'pending' | 'ready' | 'failed'

export type RegionSpec = {
  bbox: [number, number, number, number] // min_lat, min_lon, max_lat, max_lon
  zoom: number
  tile_px?: number
}

export type RegionEntry = {
  region_id: string
  status: RegionStatus
  spec?: RegionSpec
  rows?: number
  cols?: number
}

export type QueryResponse = {
  region_id: string
  rows: number
  cols: number
  bbox: [number, number, number, number]
  query: string
  raw: boolean
  meta: { year: number; month: number; day: number; hour: number } | null
  values: number[]
  argmax: { row: number; col: number; lat: number; lon: number }
}

export type QueryParams = {
  text: string
  month?: number
  hour?: number
  useMeta?: boolean
  raw?: boolean
}

/** A pinned query result: an immutable snapshot, never re-fetched. */
export type Snapshot = {
  label: string
  response: QueryResponse
}

export type ViewState = {
  regionId: string | null
  prompt: string
  month: number // 1-12, only sent when useMeta
  hour: number // 0-23, only sent when useMeta
  useMeta: boolean
  opacity: number // 0-1 overlay opacity
  pinned: Snapshot[] // at most 2
  lastResponse: QueryResponse | null
}

export function initialViewState(): ViewState {
  return {
    regionId: null,
    prompt: '',
    month: 7,
    hour: 12,
    useMeta: false,
    opacity: 1,
    pinned: [],
    lastResponse: null,
  }
}
